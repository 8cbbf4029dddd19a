//! Posterior summaries: co-clustering matrices, Binder-loss point
//! partitions, single-chain convergence z-scores, index time series and
//! hyperparameter tables.
//!
//! Label vectors from the chain are only identified up to relabeling, so
//! every summary here goes through co-clustering probabilities
//! omega_{ij} = Pr(label_i = label_j | data), which are invariant. A point
//! partition is read off omega by minimizing the Binder loss
//! sum_{i<j} |1{same cluster} - omega_{ij}|.

use serde::Serialize;
use statrs::distribution::ContinuousCDF;

use crate::blockmodel::{assortativity_index, transitivity_index, Partition};
use crate::error::{Error, Result};
use crate::math::{mean, quantile_sorted};
use crate::sampler::ChainTrace;

/// Pairwise posterior co-assignment probabilities, symmetric with unit
/// diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CoClustering {
    dim: usize,
    omega: Vec<f64>,
}

impl CoClustering {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.omega[i * self.dim + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.omega
    }
}

/// Fraction of samples in which each pair shares a label.
pub fn coclustering(samples: &[Vec<usize>]) -> Result<CoClustering> {
    let b = samples.len();
    if b == 0 {
        return Err(Error::invalid("co-clustering needs at least one sample"));
    }
    let dim = samples[0].len();
    if dim == 0 || samples.iter().any(|s| s.len() != dim) {
        return Err(Error::invalid("label vectors must be non-empty and equal length"));
    }
    let mut counts = vec![0u64; dim * dim];
    for labels in samples {
        for i in 0..dim {
            for j in 0..dim {
                counts[i * dim + j] += u64::from(labels[i] == labels[j]);
            }
        }
    }
    let omega = counts.iter().map(|&c| c as f64 / b as f64).collect();
    Ok(CoClustering { dim, omega })
}

/// Binder loss of a hard clustering against co-assignment probabilities,
/// sum over unordered pairs of |1{same} - omega|.
pub fn binder_loss(labels: &[usize], cc: &CoClustering) -> f64 {
    assert_eq!(labels.len(), cc.dim());
    let mut loss = 0.0;
    for i in 0..cc.dim() {
        for j in (i + 1)..cc.dim() {
            let w = cc.get(i, j);
            loss += if labels[i] == labels[j] { 1.0 - w } else { w };
        }
    }
    loss
}

/// Deterministic Binder-loss minimizer: merge across every pair with
/// omega > 1/2, then repeat single-element reassignments (to any existing
/// cluster or a fresh singleton, lowest candidate on ties) until no move
/// lowers the loss.
pub fn point_partition(cc: &CoClustering) -> Partition {
    let n = cc.dim();
    // union-find over the thresholded graph
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if cc.get(i, j) > 0.5 {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut labels: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();

    loop {
        let mut improved = false;
        for i in 0..n {
            // pair cost of element i under each candidate cluster
            let mut clusters: Vec<usize> = labels.clone();
            clusters.sort_unstable();
            clusters.dedup();
            let fresh = clusters.iter().max().unwrap() + 1;
            clusters.push(fresh);

            let cost_in = |c: usize, labels: &[usize]| -> f64 {
                let mut cost = 0.0;
                for j in 0..n {
                    if j == i {
                        continue;
                    }
                    let w = cc.get(i, j);
                    cost += if labels[j] == c { 1.0 - w } else { w };
                }
                cost
            };
            let current = cost_in(labels[i], &labels);
            let mut best = (current, labels[i]);
            for &c in &clusters {
                let cost = cost_in(c, &labels);
                if cost < best.0 - 1e-12 {
                    best = (cost, c);
                }
            }
            if best.1 != labels[i] {
                labels[i] = best.1;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    Partition::from_labels(&labels).expect("labels are a valid partition")
}

/// Chance-corrected pairwise agreement between two partitions; 1 for
/// identical partitions, about 0 for independent ones.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::invalid("label vectors must be non-empty and equal length"));
    }
    let n = a.len();
    let ka = a.iter().max().unwrap() + 1;
    let kb = b.iter().max().unwrap() + 1;
    let mut table = vec![0u64; ka * kb];
    for i in 0..n {
        table[a[i] * kb + b[i]] += 1;
    }
    let c2 = |x: u64| (x * x.saturating_sub(1)) as f64 / 2.0;
    let index: f64 = table.iter().map(|&x| c2(x)).sum();
    let rows: f64 = (0..ka)
        .map(|r| c2((0..kb).map(|c| table[r * kb + c]).sum()))
        .sum();
    let cols: f64 = (0..kb)
        .map(|c| c2((0..ka).map(|r| table[r * kb + c]).sum()))
        .sum();
    let expected = rows * cols / c2(n as u64);
    let max = 0.5 * (rows + cols);
    if (max - expected).abs() < 1e-12 {
        // both partitions trivial in the same way; they agree completely
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// Autocorrelation-consistent variance of the mean estimate: modified
/// Bartlett window of width floor(sqrt(len)).
fn spectral_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    let m = mean(xs);
    let window = (n as f64).sqrt().floor() as usize;
    let autocov = |lag: usize| -> f64 {
        (0..n - lag).map(|t| (xs[t] - m) * (xs[t + lag] - m)).sum::<f64>() / n as f64
    };
    let c0 = autocov(0);
    let mut s = c0;
    for k in 1..=window.min(n - 1) {
        s += 2.0 * (1.0 - k as f64 / (window + 1) as f64) * autocov(k);
    }
    if s > 0.0 {
        s
    } else {
        c0
    }
}

/// Single-chain convergence z-score comparing the means of the first
/// `frac_a` and last `frac_b` of the series, with spectral variance
/// estimates. Approximately standard normal for a stationary chain.
pub fn geweke_z(series: &[f64], frac_a: f64, frac_b: f64) -> Result<f64> {
    let l = series.len();
    if l < 100 {
        return Err(Error::invalid(format!("series of length {l} is too short, need 100")));
    }
    if !(frac_a > 0.0 && frac_b > 0.0 && frac_a + frac_b <= 1.0) {
        return Err(Error::invalid("window fractions must be positive and sum to at most 1"));
    }
    let na = (frac_a * l as f64).floor() as usize;
    let nb = (frac_b * l as f64).floor() as usize;
    let a = &series[..na];
    let b = &series[l - nb..];
    let var = spectral_variance(a) / na as f64 + spectral_variance(b) / nb as f64;
    let diff = mean(a) - mean(b);
    if var <= 0.0 {
        return if diff == 0.0 {
            Ok(0.0)
        } else {
            Err(Error::numerical("zero variance with unequal window means"))
        };
    }
    Ok(diff / var.sqrt())
}

/// Per-period posterior mean with central 95% band.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSeries {
    pub mean: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Posterior time series of the assortativity and transitivity indices,
/// each period evaluated at the hyperparameters of its sampled state.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSeries {
    pub upsilon: BandSeries,
    pub chi: BandSeries,
}

fn band(per_t: Vec<Vec<f64>>) -> BandSeries {
    let mut out = BandSeries {
        mean: Vec::with_capacity(per_t.len()),
        lo: Vec::with_capacity(per_t.len()),
        hi: Vec::with_capacity(per_t.len()),
    };
    for mut xs in per_t {
        out.mean.push(mean(&xs));
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.lo.push(quantile_sorted(&xs, 0.025));
        out.hi.push(quantile_sorted(&xs, 0.975));
    }
    out
}

pub fn index_series(trace: &ChainTrace) -> Result<IndexSeries> {
    if trace.samples.is_empty() {
        return Err(Error::invalid("trace holds no samples"));
    }
    let t_len = trace.t;
    let mut ups = vec![Vec::with_capacity(trace.samples.len()); t_len];
    let mut chi = vec![Vec::with_capacity(trace.samples.len()); t_len];
    for sample in &trace.samples {
        let ms = &sample.state;
        for (t, &z) in ms.zeta.iter().enumerate() {
            let st = &ms.states[z];
            ups[t].push(assortativity_index(&st.hyper));
            chi[t].push(transitivity_index(&st.hyper, &st.py).chi);
        }
    }
    Ok(IndexSeries { upsilon: band(ups), chi: band(chi) })
}

/// Analytic prior used for the reference columns of hyperparameter tables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorSpec {
    Exponential { mean: f64 },
    Uniform01,
    Gamma { shape: f64, rate: f64 },
    Beta { a: f64, b: f64 },
}

impl PriorSpec {
    pub fn mean(&self) -> f64 {
        match *self {
            PriorSpec::Exponential { mean } => mean,
            PriorSpec::Uniform01 => 0.5,
            PriorSpec::Gamma { shape, rate } => shape / rate,
            PriorSpec::Beta { a, b } => a / (a + b),
        }
    }

    /// Central 95% interval.
    pub fn interval95(&self) -> (f64, f64) {
        match *self {
            PriorSpec::Exponential { mean } => (-mean * 0.975f64.ln(), -mean * 0.025f64.ln()),
            PriorSpec::Uniform01 => (0.025, 0.975),
            PriorSpec::Gamma { shape, rate } => {
                let g = statrs::distribution::Gamma::new(shape, rate).expect("valid shapes");
                (g.inverse_cdf(0.025), g.inverse_cdf(0.975))
            }
            PriorSpec::Beta { a, b } => {
                let d = statrs::distribution::Beta::new(a, b).expect("valid shapes");
                (d.inverse_cdf(0.025), d.inverse_cdf(0.975))
            }
        }
    }
}

/// One row of the hyperparameter table: posterior against prior.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyperSummary {
    pub name: String,
    pub post_mean: f64,
    pub post_lo: f64,
    pub post_hi: f64,
    pub prior_mean: f64,
    pub prior_lo: f64,
    pub prior_hi: f64,
}

/// Extracts one scalar per retained sample. Recognized names: `gamma`,
/// the four rates `d_O`, `e_O`, `d_D`, `e_D`, and the per-period
/// Pitman-Yor parameters `alpha@t`, `beta@t` with t a 1-based period,
/// evaluated at that period's sampled state.
pub fn hyper_series(trace: &ChainTrace, name: &str) -> Result<Vec<f64>> {
    if trace.samples.is_empty() {
        return Err(Error::invalid("trace holds no samples"));
    }
    let state_at = |period: &str| -> Result<usize> {
        let t: usize = period
            .parse()
            .map_err(|_| Error::invalid(format!("bad period in parameter name: {period:?}")))?;
        if t == 0 || t > trace.t {
            return Err(Error::invalid(format!("period {t} outside 1..={}", trace.t)));
        }
        Ok(t - 1)
    };
    let values = if let Some(period) = name.strip_prefix("alpha@") {
        let t = state_at(period)?;
        trace.samples.iter().map(|s| s.state.states[s.state.zeta[t]].py.alpha).collect()
    } else if let Some(period) = name.strip_prefix("beta@") {
        let t = state_at(period)?;
        trace.samples.iter().map(|s| s.state.states[s.state.zeta[t]].py.beta).collect()
    } else {
        let pick = |f: fn(&crate::sampler::ModelState) -> f64| -> Vec<f64> {
            trace.samples.iter().map(|s| f(&s.state)).collect()
        };
        match name {
            "gamma" => pick(|ms| ms.gamma),
            "d_O" => pick(|ms| ms.rates.d_o),
            "e_O" => pick(|ms| ms.rates.e_o),
            "d_D" => pick(|ms| ms.rates.d_d),
            "e_D" => pick(|ms| ms.rates.e_d),
            _ => return Err(Error::invalid(format!("unknown parameter name {name:?}"))),
        }
    };
    Ok(values)
}

pub fn hyper_summary(trace: &ChainTrace, name: &str, prior: &PriorSpec) -> Result<HyperSummary> {
    let mut values = hyper_series(trace, name)?;
    let post_mean = mean(&values);
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (prior_lo, prior_hi) = prior.interval95();
    Ok(HyperSummary {
        name: name.to_string(),
        post_mean,
        post_lo: quantile_sorted(&values, 0.025),
        post_hi: quantile_sorted(&values, 0.975),
        prior_mean: prior.mean(),
        prior_lo,
        prior_hi,
    })
}

/// Co-clustering of traders at one period (0-based): each sample
/// contributes the community labels of the state it assigns to that period.
pub fn trader_coclustering(trace: &ChainTrace, week: usize) -> Result<CoClustering> {
    if week >= trace.t {
        return Err(Error::invalid(format!("week {week} outside 0..{}", trace.t)));
    }
    let labels: Vec<Vec<usize>> = trace
        .samples
        .iter()
        .map(|s| s.state.states[s.state.zeta[week]].partition.labels().to_vec())
        .collect();
    coclustering(&labels)
}

/// Periods at which a label sequence switches value (0-based, first period
/// never included).
pub fn change_points(labels: &[usize]) -> Vec<usize> {
    (1..labels.len()).filter(|&t| labels[t] != labels[t - 1]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockmodel::tests::all_partitions;
    use crate::blockmodel::{BetaHyper, InteractionMatrix, PyParams};
    use crate::sampler::{ChainTrace, ModelState, RateHypers, Sample, StateParams};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn cc_from(dim: usize, omega: Vec<f64>) -> CoClustering {
        CoClustering { dim, omega }
    }

    #[test]
    fn coclustering_counts_pairs() {
        let cc = coclustering(&[vec![0, 0, 1], vec![0, 1, 1]]).unwrap();
        assert_eq!(cc.dim(), 3);
        assert_eq!(cc.get(0, 1), 0.5);
        assert_eq!(cc.get(1, 2), 0.5);
        assert_eq!(cc.get(0, 2), 0.0);
        for i in 0..3 {
            assert_eq!(cc.get(i, i), 1.0);
            for j in 0..3 {
                assert_eq!(cc.get(i, j), cc.get(j, i));
            }
        }
    }

    #[test]
    fn single_sample_coclustering_is_a_projection() {
        let labels = vec![0usize, 1, 0, 2, 1];
        let cc = coclustering(std::slice::from_ref(&labels)).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let want = f64::from(labels[i] == labels[j]);
                assert_eq!(cc.get(i, j), want);
            }
        }
    }

    #[test]
    fn point_partition_recovers_block_matrices() {
        let labels = vec![0usize, 1, 0, 1, 2];
        let cc = coclustering(std::slice::from_ref(&labels)).unwrap();
        assert_eq!(point_partition(&cc).labels(), &[0, 1, 0, 1, 2]);
    }

    #[test]
    fn weak_coassignment_gives_singletons() {
        let dim = 4;
        let mut omega = vec![0.4; dim * dim];
        for i in 0..dim {
            omega[i * dim + i] = 1.0;
        }
        let cc = cc_from(dim, omega);
        assert_eq!(point_partition(&cc).k(), dim);
    }

    #[test]
    fn point_partition_matches_exhaustive_search() {
        let mut rng = ChaCha20Rng::seed_from_u64(42);
        let enumerated = all_partitions(6);
        assert_eq!(enumerated.len(), 203);
        for _ in 0..10 {
            // co-clustering of random label draws, a realistic posterior shape
            let samples: Vec<Vec<usize>> = (0..7)
                .map(|_| (0..6).map(|_| rng.random_range(0..3)).collect())
                .collect();
            let cc = coclustering(&samples).unwrap();
            let greedy = binder_loss(point_partition(&cc).labels(), &cc);
            let best = enumerated
                .iter()
                .map(|labels| binder_loss(labels, &cc))
                .fold(f64::INFINITY, f64::min);
            assert!(
                (greedy - best).abs() < 1e-9,
                "greedy loss {greedy} vs exhaustive {best}"
            );
        }
    }

    #[test]
    fn rand_index_hand_value() {
        let a = [0usize, 0, 0, 1, 1];
        let b = [0usize, 0, 1, 1, 1];
        let ari = adjusted_rand_index(&a, &b).unwrap();
        assert!((ari - 1.0 / 6.0).abs() < 1e-12);
        assert_eq!(adjusted_rand_index(&a, &a).unwrap(), 1.0);
        // relabeling leaves it unchanged
        let b2 = [5usize, 5, 9, 9, 9];
        assert_eq!(adjusted_rand_index(&a, &b2).unwrap(), ari);
        // both trivial
        let s = [0usize, 1, 2];
        assert_eq!(adjusted_rand_index(&s, &[3, 4, 5]).unwrap(), 1.0);
        assert!(adjusted_rand_index(&a, &s).is_err());
    }

    #[test]
    fn geweke_flags_drift_and_passes_stationary() {
        let mut rng = ChaCha20Rng::seed_from_u64(10);
        let iid: Vec<f64> = (0..10_000).map(|_| crate::sampling::normal_draw(0.0, 1.0, &mut rng)).collect();
        let z = geweke_z(&iid, 0.1, 0.5).unwrap();
        assert!(z.abs() < 3.0, "stationary series flagged, z = {z}");

        let drift: Vec<f64> = (0..1_000).map(|t| t as f64 / 100.0).collect();
        assert!(geweke_z(&drift, 0.1, 0.5).unwrap().abs() > 5.0);

        let periodic: Vec<f64> = (0..1_000).map(|t| (t % 20) as f64).collect();
        assert!(geweke_z(&periodic, 0.1, 0.5).unwrap().abs() < 1e-6);

        assert!(geweke_z(&iid[..99], 0.1, 0.5).is_err());
        assert!(geweke_z(&iid, 0.6, 0.6).is_err());
    }

    fn two_state_trace(zeta: Vec<usize>, hypers: [BetaHyper; 2], pys: [PyParams; 2]) -> ChainTrace {
        let t = zeta.len();
        let states: Vec<StateParams> = (0..2)
            .map(|s| StateParams {
                py: pys[s],
                hyper: hypers[s],
                partition: crate::blockmodel::Partition::one_block(3),
                theta: InteractionMatrix::constant(1, 0.5).unwrap(),
            })
            .collect();
        let state = ModelState {
            zeta,
            states,
            pi: vec![vec![0.5, 0.5]; 2],
            gamma: 1.0,
            rates: RateHypers { d_o: 1.0, e_o: 1.0, d_d: 1.0, e_d: 1.0 },
        };
        ChainTrace {
            n: 3,
            t,
            s_max: 2,
            burnin: 0,
            thin: 1,
            seed: 0,
            samples: vec![Sample { iteration: 1, loglik: -1.0, state }],
            scalars: vec![],
        }
    }

    #[test]
    fn index_series_evaluates_per_period_states() {
        let symmetric = BetaHyper::new(2.0, 3.0, 2.0, 3.0).unwrap();
        let tilted = BetaHyper::new(3.0, 1.0, 6.0, 2.0).unwrap();
        let py = PyParams::new(0.2, 1.0).unwrap();
        let trace = two_state_trace(vec![0, 1, 0], [symmetric, tilted], [py, py]);
        let series = index_series(&trace).unwrap();
        // same within/between means: zero assortativity, exactly
        assert_eq!(series.upsilon.mean[0], 0.0);
        assert_eq!(series.upsilon.mean[2], 0.0);
        let want = assortativity_index(&tilted);
        assert_eq!(series.upsilon.mean[1], want);
        let chi1 = transitivity_index(&tilted, &py).chi;
        assert_eq!(series.chi.mean[1], chi1);
        for t in 0..3 {
            assert!(series.chi.lo[t] <= series.chi.mean[t]);
            assert!(series.chi.mean[t] <= series.chi.hi[t]);
            assert!(series.chi.mean[t] > 0.0 && series.chi.mean[t] < 1.0);
        }
    }

    #[test]
    fn prior_intervals_match_closed_forms() {
        let exp = PriorSpec::Exponential { mean: 1.0 };
        let (lo, hi) = exp.interval95();
        assert!((lo - 0.025).abs() < 5e-4);
        assert!((hi - 3.689).abs() < 5e-4);
        assert_eq!(exp.mean(), 1.0);

        assert_eq!(PriorSpec::Uniform01.interval95(), (0.025, 0.975));

        // Gamma(1, rate) is the same exponential law
        let gamma = PriorSpec::Gamma { shape: 1.0, rate: 1.0 };
        let (glo, ghi) = gamma.interval95();
        assert!((glo - lo).abs() < 1e-8 && (ghi - hi).abs() < 1e-8);

        let beta = PriorSpec::Beta { a: 1.0, b: 1.0 };
        let (blo, bhi) = beta.interval95();
        assert!((blo - 0.025).abs() < 1e-8 && (bhi - 0.975).abs() < 1e-8);
    }

    #[test]
    fn hyper_series_names_resolve() {
        let h = BetaHyper::new(2.0, 3.0, 4.0, 5.0).unwrap();
        let pys = [PyParams::new(0.1, 0.5).unwrap(), PyParams::new(0.7, 2.0).unwrap()];
        let trace = two_state_trace(vec![0, 1], [h, h], pys);
        assert_eq!(hyper_series(&trace, "gamma").unwrap(), vec![1.0]);
        assert_eq!(hyper_series(&trace, "d_O").unwrap(), vec![1.0]);
        assert_eq!(hyper_series(&trace, "alpha@1").unwrap(), vec![0.1]);
        assert_eq!(hyper_series(&trace, "alpha@2").unwrap(), vec![0.7]);
        assert_eq!(hyper_series(&trace, "beta@2").unwrap(), vec![2.0]);
        assert!(hyper_series(&trace, "alpha@3").is_err());
        assert!(hyper_series(&trace, "alpha@x").is_err());
        assert!(hyper_series(&trace, "nope").is_err());

        let summary =
            hyper_summary(&trace, "gamma", &PriorSpec::Exponential { mean: 1.0 }).unwrap();
        assert_eq!(summary.post_mean, 1.0);
        // constant trace: zero-width interval at the value
        assert_eq!((summary.post_lo, summary.post_hi), (1.0, 1.0));
        assert!(summary.prior_lo < summary.prior_hi);
    }

    #[test]
    fn trader_coclustering_uses_the_weeks_state() {
        let h = BetaHyper::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let py = PyParams::new(0.2, 1.0).unwrap();
        let mut trace = two_state_trace(vec![0, 1], [h, h], [py, py]);
        let state = &mut trace.samples[0].state;
        state.states[0].partition = crate::blockmodel::Partition::from_labels(&[0, 0, 1]).unwrap();
        state.states[1].partition = crate::blockmodel::Partition::from_labels(&[0, 1, 1]).unwrap();
        let cc0 = trader_coclustering(&trace, 0).unwrap();
        assert_eq!((cc0.get(0, 1), cc0.get(1, 2)), (1.0, 0.0));
        let cc1 = trader_coclustering(&trace, 1).unwrap();
        assert_eq!((cc1.get(0, 1), cc1.get(1, 2)), (0.0, 1.0));
        assert!(trader_coclustering(&trace, 2).is_err());
    }

    #[test]
    fn change_points_are_switch_indices() {
        assert_eq!(change_points(&[0, 0, 1, 1, 0]), vec![2, 4]);
        assert!(change_points(&[2, 2, 2]).is_empty());
        assert!(change_points(&[]).is_empty());
    }

    proptest! {
        #[test]
        fn rand_index_is_symmetric_and_one_on_self(
            pairs in prop::collection::vec((0usize..4, 0usize..4), 2..14),
        ) {
            let a: Vec<usize> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<usize> = pairs.iter().map(|p| p.1).collect();
            let ab = adjusted_rand_index(&a, &b).unwrap();
            let ba = adjusted_rand_index(&b, &a).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!((adjusted_rand_index(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn coclustering_is_symmetric_with_unit_diagonal(
            draws in prop::collection::vec(prop::collection::vec(0usize..3, 5), 1..8),
        ) {
            let cc = coclustering(&draws).unwrap();
            for i in 0..5 {
                prop_assert_eq!(cc.get(i, i), 1.0);
                for j in 0..5 {
                    let w = cc.get(i, j);
                    prop_assert!((0.0..=1.0).contains(&w));
                    prop_assert_eq!(w, cc.get(j, i));
                }
            }
        }
    }
}
