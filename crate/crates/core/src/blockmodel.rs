//! Exchangeable-partition blockmodel primitives.
//!
//! A single network on `n` traders is generated in two stages. Community
//! labels follow a Pitman-Yor partition with discount `alpha` in `[0, 1)`
//! and concentration `beta > -alpha`; the induced law over set partitions
//! with `K` occupied communities of sizes `m_k` is
//!
//! ```text
//! p(xi) = Gamma(beta + 1) / ((beta + alpha K) Gamma(beta + n))
//!         * prod_{k=1..K} (beta + alpha k) Gamma(m_k - alpha) / Gamma(1 - alpha)
//! ```
//!
//! Given labels, the probability of a directed link from community `k` to
//! community `l` is `theta_{k,l}`, drawn Beta(a_D, b_D) on the diagonal and
//! Beta(a_O, b_O) off it; edges are conditionally independent Bernoulli
//! draws. Integrating `theta` out of a block of edge indicators gives the
//! Beta-Bernoulli marginal used by the collapsed label sweeps.
//!
//! Two scalar summaries of the implied network law are exposed: the
//! assortativity index `Upsilon = log E[theta_D] - log E[theta_O]` and the
//! cycle-triad transitivity `chi = Pr(y_12 = 1 | y_23 = 1, y_31 = 1)`,
//! both closed-form in the hyperparameters.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::network::Sociomatrix;
use crate::sampling::beta_draw;

/// Pitman-Yor discount and concentration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PyParams {
    pub alpha: f64,
    pub beta: f64,
}

impl PyParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let p = PyParams { alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::invalid(format!("discount {} outside [0,1)", self.alpha)));
        }
        if !self.beta.is_finite() || self.beta <= -self.alpha {
            return Err(Error::invalid(format!(
                "concentration {} must exceed -discount {}",
                self.beta, -self.alpha
            )));
        }
        Ok(())
    }
}

/// A set partition of `0..n` in order-of-first-appearance labeling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    sizes: Vec<usize>,
}

impl Partition {
    /// Canonicalizes arbitrary labels: block indices are assigned in order
    /// of first appearance, so equal partitions compare equal.
    pub fn from_labels(raw: &[usize]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::invalid("partition over zero items"));
        }
        let mut map: Vec<(usize, usize)> = Vec::new();
        let mut labels = Vec::with_capacity(raw.len());
        let mut sizes = Vec::new();
        for &r in raw {
            let canon = match map.iter().find(|(orig, _)| *orig == r) {
                Some(&(_, c)) => c,
                None => {
                    let c = sizes.len();
                    map.push((r, c));
                    sizes.push(0);
                    c
                }
            };
            sizes[canon] += 1;
            labels.push(canon);
        }
        Ok(Partition { labels, sizes })
    }

    pub fn singletons(n: usize) -> Self {
        Partition { labels: (0..n).collect(), sizes: vec![1; n] }
    }

    pub fn one_block(n: usize) -> Self {
        assert!(n >= 1);
        Partition { labels: vec![0; n], sizes: vec![n] }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Number of occupied blocks.
    pub fn k(&self) -> usize {
        self.sizes.len()
    }
}

/// Beta hyperparameters for diagonal and off-diagonal interaction entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaHyper {
    pub a_o: f64,
    pub b_o: f64,
    pub a_d: f64,
    pub b_d: f64,
}

impl BetaHyper {
    pub fn new(a_o: f64, b_o: f64, a_d: f64, b_d: f64) -> Result<Self> {
        let h = BetaHyper { a_o, b_o, a_d, b_d };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in
            [("a_O", self.a_o), ("b_O", self.b_o), ("a_D", self.a_d), ("b_D", self.b_d)]
        {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::invalid(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }
}

/// K x K matrix of community-to-community link probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionMatrix {
    k: usize,
    theta: Vec<f64>,
}

impl InteractionMatrix {
    pub fn new(k: usize, theta: Vec<f64>) -> Result<Self> {
        if k == 0 || theta.len() != k * k {
            return Err(Error::invalid("interaction matrix must be square and non-empty"));
        }
        if theta.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::invalid("interaction probabilities must lie in [0,1]"));
        }
        Ok(InteractionMatrix { k, theta })
    }

    pub fn constant(k: usize, value: f64) -> Result<Self> {
        Self::new(k, vec![value; k * k])
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.theta[k * self.k + l]
    }

    pub fn entries(&self) -> &[f64] {
        &self.theta
    }
}

/// Stick-breaking weights together with the unallocated residual mass.
#[derive(Debug, Clone, PartialEq)]
pub struct StickWeights {
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub residual: f64,
}

/// Converts stick fractions v_k into weights w_k = v_k prod_{s<k}(1 - v_s).
pub fn stick_break(v: &[f64]) -> Result<StickWeights> {
    let mut w = Vec::with_capacity(v.len());
    let mut remaining = 1.0;
    for &vk in v {
        if !(vk > 0.0 && vk < 1.0) {
            return Err(Error::invalid(format!("stick fraction {vk} outside (0,1)")));
        }
        w.push(vk * remaining);
        remaining *= 1.0 - vk;
    }
    Ok(StickWeights { v: v.to_vec(), w, residual: remaining })
}

/// Log prior probability of a partition under the Pitman-Yor law.
pub fn eppf_log_prob(p: &Partition, py: &PyParams) -> f64 {
    let n = p.n() as f64;
    let (a, b) = (py.alpha, py.beta);
    let mut lp = ln_gamma(b + 1.0) - (b + a * p.k() as f64).ln() - ln_gamma(b + n);
    for (k, &m) in p.sizes().iter().enumerate() {
        lp += (b + a * (k + 1) as f64).ln() + ln_gamma(m as f64 - a) - ln_gamma(1.0 - a);
    }
    lp
}

/// Draws a partition of `0..n` by sequential seating: item i joins block k
/// with probability proportional to m_k - alpha and opens a new block with
/// probability proportional to beta + alpha K. The resulting law is the
/// partition prior above, with no truncation.
pub fn sample_partition<R: Rng + ?Sized>(n: usize, py: &PyParams, rng: &mut R) -> Partition {
    assert!(n >= 1, "partition needs at least one item");
    let mut labels = vec![0usize; n];
    let mut sizes = vec![1usize];
    for (i, label) in labels.iter_mut().enumerate().skip(1) {
        // total seating mass telescopes to i + beta
        let mut u = rng.random::<f64>() * (i as f64 + py.beta);
        let mut chosen = sizes.len();
        for (k, &m) in sizes.iter().enumerate() {
            let mass = m as f64 - py.alpha;
            if u < mass {
                chosen = k;
                break;
            }
            u -= mass;
        }
        if chosen == sizes.len() {
            sizes.push(1);
        } else {
            sizes[chosen] += 1;
        }
        *label = chosen;
    }
    Partition { labels, sizes }
}

/// Log marginal likelihood of `ones` successes in `total` exchangeable
/// Bernoulli trials whose success probability is Beta(a, b) distributed.
pub fn beta_bernoulli_marginal(ones: usize, total: usize, a: f64, b: f64) -> f64 {
    debug_assert!(ones <= total, "ones exceeds total");
    debug_assert!(a > 0.0 && b > 0.0);
    let (of, tf) = (ones as f64, total as f64);
    ln_gamma(of + a) + ln_gamma(tf - of + b) - ln_gamma(a + b + tf) + ln_gamma(a + b)
        - ln_gamma(a)
        - ln_gamma(b)
}

/// log E[theta_D] - log E[theta_O]: positive values favor within-community
/// trading.
pub fn assortativity_index(h: &BetaHyper) -> f64 {
    (h.a_d / (h.a_d + h.b_d)).ln() - (h.a_o / (h.a_o + h.b_o)).ln()
}

/// Transitivity of the cycle triad with the numerator and denominator of
/// the conditional probability exposed for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transitivity {
    pub chi: f64,
    pub numerator: f64,
    pub denominator: f64,
}

/// Model-implied probability that a directed cycle closes,
/// chi = Pr(y_12 = 1 | y_23 = 1, y_31 = 1), marginalizing over the
/// three-node partition and the interaction probabilities.
///
/// The three cycle edges never revisit an ordered pair of distinct
/// communities, so only the all-together pattern couples edges through a
/// shared theta and every term factorizes into Beta moments.
pub fn transitivity_index(h: &BetaHyper, py: &PyParams) -> Transitivity {
    let (a, b) = (py.alpha, py.beta);
    let norm = (b + 1.0) * (b + 2.0);
    let p_same = (1.0 - a) * (2.0 - a) / norm;
    let p_pair = (1.0 - a) * (b + a) / norm;
    let p_diff = (b + a) * (b + 2.0 * a) / norm;

    let sd = h.a_d + h.b_d;
    let m_d = h.a_d / sd;
    let e2_d = h.a_d * (h.a_d + 1.0) / (sd * (sd + 1.0));
    let e3_d = h.a_d * (h.a_d + 1.0) * (h.a_d + 2.0) / (sd * (sd + 1.0) * (sd + 2.0));
    let m_o = h.a_o / (h.a_o + h.b_o);

    let numerator = p_same * e3_d + 3.0 * p_pair * m_d * m_o * m_o + p_diff * m_o.powi(3);
    let denominator =
        p_same * e2_d + 2.0 * p_pair * m_d * m_o + (b + a) * (b + a + 1.0) / norm * m_o * m_o;
    Transitivity { chi: numerator / denominator, numerator, denominator }
}

/// Draws a K x K interaction matrix from the Beta priors.
pub fn sample_interactions<R: Rng + ?Sized>(
    k: usize,
    h: &BetaHyper,
    rng: &mut R,
) -> InteractionMatrix {
    assert!(k >= 1);
    let mut theta = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            let t = if i == j {
                beta_draw(h.a_d, h.b_d, rng)
            } else {
                beta_draw(h.a_o, h.b_o, rng)
            };
            theta.push(t);
        }
    }
    InteractionMatrix { k, theta }
}

/// Draws one network: y_ij ~ Bernoulli(theta_{xi_i, xi_j}) independently,
/// zero diagonal.
pub fn generate_network<R: Rng + ?Sized>(
    p: &Partition,
    th: &InteractionMatrix,
    rng: &mut R,
) -> Result<Sociomatrix> {
    if p.k() > th.k() {
        return Err(Error::invalid(format!(
            "partition uses {} blocks but interaction matrix has {}",
            p.k(),
            th.k()
        )));
    }
    let n = p.n();
    let mut y = Sociomatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let theta = th.get(p.labels()[i], p.labels()[j]);
            if rng.random::<f64>() < theta {
                y.set(i, j, true);
            }
        }
    }
    Ok(y)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use std::collections::BTreeMap;

    /// All set partitions of 0..n as canonical label vectors.
    pub(crate) fn all_partitions(n: usize) -> Vec<Vec<usize>> {
        fn rec(labels: &mut Vec<usize>, blocks: usize, n: usize, out: &mut Vec<Vec<usize>>) {
            if labels.len() == n {
                out.push(labels.clone());
                return;
            }
            for l in 0..=blocks {
                labels.push(l);
                rec(labels, blocks.max(l + 1), n, out);
                labels.pop();
            }
        }
        let mut out = Vec::new();
        rec(&mut vec![0], 1, n, &mut out);
        out
    }

    #[test]
    fn stick_break_examples() {
        let eps = 1e-3;
        let s = stick_break(&[1.0 - eps]).unwrap();
        assert!((s.w[0] - (1.0 - eps)).abs() < 1e-15);
        assert!((s.residual - eps).abs() < 1e-15);

        let s = stick_break(&[0.5, 0.5]).unwrap();
        assert_eq!(s.w, vec![0.5, 0.25]);
        assert_eq!(s.residual, 0.25);

        assert!(stick_break(&[0.5, 1.0]).is_err());
        assert!(stick_break(&[0.0]).is_err());
    }

    #[test]
    fn stick_break_telescopes() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let v: Vec<f64> = (0..10).map(|_| rng.random::<f64>() * 0.98 + 0.01).collect();
        let s = stick_break(&v).unwrap();
        let total: f64 = s.w.iter().sum::<f64>() + s.residual;
        assert!((total - 1.0).abs() < 1e-12);
        for i in 1..s.w.len() {
            assert!(s.w[i] > 0.0);
        }
    }

    #[test]
    fn partition_canonicalizes() {
        let p = Partition::from_labels(&[5, 5, 9, 5]).unwrap();
        assert_eq!(p.labels(), &[0, 0, 1, 0]);
        assert_eq!(p.sizes(), &[3, 1]);
        assert_eq!(p.k(), 2);
        assert!(Partition::from_labels(&[]).is_err());
    }

    #[test]
    fn eppf_small_cases() {
        let py = PyParams::new(0.0, 1.0).unwrap();
        let lp = eppf_log_prob(&Partition::one_block(2), &py);
        assert!((lp - 0.5f64.ln()).abs() < 1e-12);

        for (alpha, beta) in [(0.3, 0.5), (0.7, 2.0), (0.0, 0.2)] {
            let py = PyParams::new(alpha, beta).unwrap();
            let lp = eppf_log_prob(&Partition::one_block(2), &py);
            assert!((lp - ((1.0 - alpha) / (1.0 + beta)).ln()).abs() < 1e-12);
            assert!(eppf_log_prob(&Partition::one_block(1), &py).abs() < 1e-12);
        }
    }

    #[test]
    fn eppf_sums_to_one_over_set_partitions() {
        let py = PyParams::new(0.3, 1.0).unwrap();
        let total: f64 = all_partitions(4)
            .iter()
            .map(|labels| eppf_log_prob(&Partition::from_labels(labels).unwrap(), &py).exp())
            .sum();
        assert!((total - 1.0).abs() < 1e-10, "sum over 15 partitions was {total}");
    }

    #[test]
    fn seating_matches_pairwise_probability() {
        let py = PyParams::new(0.3, 0.5).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let draws = 100_000;
        let mut together = 0usize;
        for _ in 0..draws {
            if sample_partition(2, &py, &mut rng).k() == 1 {
                together += 1;
            }
        }
        let p = (1.0 - py.alpha) / (1.0 + py.beta);
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        let freq = together as f64 / draws as f64;
        assert!((freq - p).abs() < 3.0 * se, "freq {freq} vs p {p}");
    }

    #[test]
    fn seating_matches_eppf_at_n4() {
        let py = PyParams::new(0.3, 1.0).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let draws = 100_000usize;
        let mut counts: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for _ in 0..draws {
            *counts.entry(sample_partition(4, &py, &mut rng).labels().to_vec()).or_insert(0) += 1;
        }
        for labels in all_partitions(4) {
            let p = eppf_log_prob(&Partition::from_labels(&labels).unwrap(), &py).exp();
            let freq = *counts.get(&labels).unwrap_or(&0) as f64 / draws as f64;
            let se = (p * (1.0 - p) / draws as f64).sqrt();
            assert!((freq - p).abs() < 4.5 * se, "partition {labels:?}: freq {freq} vs p {p}");
        }
    }

    #[test]
    fn huge_concentration_forces_singletons() {
        let py = PyParams::new(0.0, 1e4).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let draws = 2_000;
        let singles =
            (0..draws).filter(|_| sample_partition(5, &py, &mut rng).k() == 5).count();
        assert!(singles as f64 / draws as f64 > 0.99);
    }

    #[test]
    fn beta_bernoulli_closed_forms() {
        let (a, b) = (1.5, 2.5);
        assert!((beta_bernoulli_marginal(1, 1, a, b) - (a / (a + b)).ln()).abs() < 1e-12);
        assert_eq!(beta_bernoulli_marginal(0, 0, a, b), 0.0);
        let want = (a * (a + 1.0) / ((a + b) * (a + b + 1.0))).ln();
        assert!((beta_bernoulli_marginal(2, 2, a, b) - want).abs() < 1e-12);
    }

    #[test]
    fn assortativity_examples() {
        let h = BetaHyper::new(2.0, 2.0, 2.0, 2.0).unwrap();
        assert_eq!(assortativity_index(&h), 0.0);
        let h = BetaHyper::new(1.0, 3.0, 2.0, 2.0).unwrap();
        assert!((assortativity_index(&h) - 2.0f64.ln()).abs() < 1e-12);
        let h = BetaHyper::new(2.0, 2.0, 1.0, 3.0).unwrap();
        assert!((assortativity_index(&h) + 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn transitivity_is_a_probability() {
        let h = BetaHyper::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let py = PyParams::new(0.0, 1.0).unwrap();
        let t = transitivity_index(&h, &py);
        assert!(t.denominator > 0.0);
        assert!(t.chi > 0.0 && t.chi < 1.0);
    }

    #[test]
    fn transitivity_limit_all_distinct() {
        let h = BetaHyper::new(2.0, 5.0, 8.0, 1.0).unwrap();
        let py = PyParams::new(0.0, 1e6).unwrap();
        let t = transitivity_index(&h, &py);
        let m_o = 2.0 / 7.0;
        assert!((t.chi - m_o).abs() < 1e-3, "chi {} vs off mean {m_o}", t.chi);
    }

    #[test]
    fn interaction_draws_match_beta_means() {
        let h = BetaHyper::new(1.0, 1.0, 2.0, 3.0).unwrap();
        let single = sample_interactions(1, &h, &mut ChaCha20Rng::seed_from_u64(0));
        assert!(single.get(0, 0) > 0.0 && single.get(0, 0) < 1.0);

        let mut rng = ChaCha20Rng::seed_from_u64(19);
        let reps = 50_000;
        let (mut diag, mut off) = (0.0, 0.0);
        for _ in 0..reps {
            let m = sample_interactions(2, &h, &mut rng);
            diag += m.get(0, 0) + m.get(1, 1);
            off += m.get(0, 1) + m.get(1, 0);
        }
        let n = (2 * reps) as f64;
        assert!((diag / n - 0.4).abs() < 3e-3, "diag mean {}", diag / n);
        assert!((off / n - 0.5).abs() < 3e-3, "off mean {}", off / n);
    }

    #[test]
    fn generated_networks_hit_block_densities() {
        let mut rng = ChaCha20Rng::seed_from_u64(23);
        let p = Partition::one_block(6);
        let full = generate_network(&p, &InteractionMatrix::constant(1, 1.0).unwrap(), &mut rng)
            .unwrap();
        assert_eq!(full.count_ones(), 30);
        let empty = generate_network(&p, &InteractionMatrix::constant(1, 0.0).unwrap(), &mut rng)
            .unwrap();
        assert_eq!(empty.count_ones(), 0);

        let labels: Vec<usize> = (0..40).map(|i| i / 20).collect();
        let part = Partition::from_labels(&labels).unwrap();
        let th = InteractionMatrix::new(2, vec![0.9, 0.1, 0.1, 0.9]).unwrap();
        let (mut within, mut between) = (0usize, 0usize);
        let reps = 1_000;
        for _ in 0..reps {
            let y = generate_network(&part, &th, &mut rng).unwrap();
            for i in 0..40 {
                for j in 0..40 {
                    if i != j && y.get(i, j) {
                        if labels[i] == labels[j] {
                            within += 1;
                        } else {
                            between += 1;
                        }
                    }
                }
            }
        }
        let w = within as f64 / (reps * 2 * 20 * 19) as f64;
        let b = between as f64 / (reps * 2 * 20 * 20) as f64;
        assert!((w - 0.9).abs() < 2e-3, "within density {w}");
        assert!((b - 0.1).abs() < 2e-3, "between density {b}");

        let wide = Partition::from_labels(&[0, 1, 2]).unwrap();
        assert!(generate_network(&wide, &th, &mut rng).is_err());
    }

    proptest! {
        #[test]
        fn beta_bernoulli_chain_rule(
            ones in 0usize..50,
            extra in 0usize..50,
            a in 0.01f64..100.0,
            b in 0.01f64..100.0,
        ) {
            let total = ones + extra;
            let lhs = beta_bernoulli_marginal(ones + 1, total + 1, a, b)
                - beta_bernoulli_marginal(ones, total, a, b);
            let rhs = ((ones as f64 + a) / (total as f64 + a + b)).ln();
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }

        #[test]
        fn eppf_invariant_to_relabeling(
            raw in prop::collection::vec(0usize..4, 1..8),
            perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle(),
        ) {
            let relabeled: Vec<usize> = raw.iter().map(|&l| perm[l]).collect();
            let p1 = Partition::from_labels(&raw).unwrap();
            let p2 = Partition::from_labels(&relabeled).unwrap();
            let py = PyParams::new(0.25, 0.75).unwrap();
            prop_assert_eq!(eppf_log_prob(&p1, &py), eppf_log_prob(&p2, &py));
        }
    }
}
