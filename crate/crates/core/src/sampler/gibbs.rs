//! Collapsed community updates and conjugate draws.
//!
//! The community labels of each occupied state are resampled one trader at
//! a time with the interaction probabilities integrated out. Removing
//! trader i and re-seating it at community k multiplies the Pitman-Yor
//! weight (m_k - alpha) by the ratio of Beta-Bernoulli marginals of every
//! block that gains i's links: the row blocks (k, l), the column blocks
//! (l, k), and the diagonal block (k, k), which absorbs i's links in both
//! directions at once. A new community weighs (beta + alpha K) times the
//! prior predictive of i's links against every existing community.
//!
//! Conjugate draws cover the interaction probabilities (Beta), the
//! transition rows (Dirichlet), and the rate hyperparameters (Gamma); the
//! regime path is drawn jointly by the shared forward-backward pass.

use rand::Rng;

use crate::blockmodel::{beta_bernoulli_marginal, InteractionMatrix, Partition};
use crate::error::{Error, Result};
use crate::hmm::ffbs_sample;
use crate::network::NetworkSeries;
use crate::sampling::{beta_draw, dirichlet_draw, gamma_draw};

use super::{log_emission_table, HyperConfig, ModelState};

/// Periods currently assigned to state s.
pub fn weeks_in_state(zeta: &[usize], s: usize) -> Vec<usize> {
    zeta.iter().enumerate().filter(|(_, &z)| z == s).map(|(t, _)| t).collect()
}

/// Directed link counts per ordered trader pair, pooled over `weeks`.
pub fn pair_counts(data: &NetworkSeries, weeks: &[usize]) -> Vec<u64> {
    let n = data.n();
    let mut pair = vec![0u64; n * n];
    for &t in weeks {
        for (i, j) in data.weeks[t].ones() {
            pair[i * n + j] += 1;
        }
    }
    pair
}

/// Link and trial counts of every ordered community pair, pooled over
/// `l_weeks` periods.
pub fn block_counts(
    p: &Partition,
    pair: &[u64],
    l_weeks: usize,
    n: usize,
) -> (Vec<u64>, Vec<u64>) {
    let k = p.k();
    let labels = p.labels();
    let sizes = p.sizes();
    let mut ones = vec![0u64; k * k];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                ones[labels[i] * k + labels[j]] += pair[i * n + j];
            }
        }
    }
    let mut trials = vec![0u64; k * k];
    for a in 0..k {
        for b in 0..k {
            let pairs = if a == b { sizes[a] * (sizes[a] - 1) } else { sizes[a] * sizes[b] };
            trials[a * k + b] = (pairs * l_weeks) as u64;
        }
    }
    (ones, trials)
}

fn sample_log_weights<R: Rng + ?Sized>(logw: &[f64], rng: &mut R) -> usize {
    let m = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|&x| (x - m).exp()).collect();
    crate::sampling::categorical(&w, rng)
}

/// One full sweep of collapsed label moves over all traders in state s,
/// followed by a fresh conjugate draw of the state's interaction matrix.
pub fn collapsed_gibbs_xi<R: Rng + ?Sized>(
    ms: &mut ModelState,
    s: usize,
    data: &NetworkSeries,
    rng: &mut R,
) -> Result<()> {
    let weeks = weeks_in_state(&ms.zeta, s);
    if weeks.is_empty() {
        return Err(Error::invalid(format!("state {s} has no assigned periods")));
    }
    let n = data.n();
    let l = weeks.len() as u64;
    let pair = pair_counts(data, &weeks);
    let (alpha, beta) = (ms.states[s].py.alpha, ms.states[s].py.beta);
    let h = ms.states[s].hyper;
    let mut labels = ms.states[s].partition.labels().to_vec();
    let mut sizes = ms.states[s].partition.sizes().to_vec();

    const REMOVED: usize = usize::MAX;
    for i in 0..n {
        let old = labels[i];
        labels[i] = REMOVED;
        sizes[old] -= 1;
        if sizes[old] == 0 {
            sizes.remove(old);
            for lab in labels.iter_mut() {
                if *lab != REMOVED && *lab > old {
                    *lab -= 1;
                }
            }
        }
        let k = sizes.len();

        // Block link counts and i's per-community link counts, i removed.
        let mut ones = vec![0u64; k * k];
        for a in 0..n {
            if labels[a] == REMOVED {
                continue;
            }
            for b in 0..n {
                if b == a || labels[b] == REMOVED {
                    continue;
                }
                ones[labels[a] * k + labels[b]] += pair[a * n + b];
            }
        }
        let mut out_to = vec![0u64; k];
        let mut in_from = vec![0u64; k];
        for (j, &lj) in labels.iter().enumerate() {
            if lj != REMOVED {
                out_to[lj] += pair[i * n + j];
                in_from[lj] += pair[j * n + i];
            }
        }

        let mut logw = Vec::with_capacity(k + 1);
        for cand in 0..k {
            let mut w = (sizes[cand] as f64 - alpha).ln();
            for other in 0..k {
                if other == cand {
                    continue;
                }
                let cur_tot = l * (sizes[cand] * sizes[other]) as u64;
                let gain = l * sizes[other] as u64;
                let row = ones[cand * k + other];
                w += beta_bernoulli_marginal(
                    (row + out_to[other]) as usize,
                    (cur_tot + gain) as usize,
                    h.a_o,
                    h.b_o,
                ) - beta_bernoulli_marginal(row as usize, cur_tot as usize, h.a_o, h.b_o);
                let col = ones[other * k + cand];
                w += beta_bernoulli_marginal(
                    (col + in_from[other]) as usize,
                    (cur_tot + gain) as usize,
                    h.a_o,
                    h.b_o,
                ) - beta_bernoulli_marginal(col as usize, cur_tot as usize, h.a_o, h.b_o);
            }
            let diag = ones[cand * k + cand];
            let cur_tot = l * (sizes[cand] * (sizes[cand] - 1)) as u64;
            w += beta_bernoulli_marginal(
                (diag + out_to[cand] + in_from[cand]) as usize,
                (cur_tot + 2 * l * sizes[cand] as u64) as usize,
                h.a_d,
                h.b_d,
            ) - beta_bernoulli_marginal(diag as usize, cur_tot as usize, h.a_d, h.b_d);
            logw.push(w);
        }
        let mut w = (beta + alpha * k as f64).ln();
        for other in 0..k {
            let trials = (l * sizes[other] as u64) as usize;
            w += beta_bernoulli_marginal(out_to[other] as usize, trials, h.a_o, h.b_o);
            w += beta_bernoulli_marginal(in_from[other] as usize, trials, h.a_o, h.b_o);
        }
        logw.push(w);

        let choice = sample_log_weights(&logw, rng);
        if choice == k {
            labels[i] = k;
            sizes.push(1);
        } else {
            labels[i] = choice;
            sizes[choice] += 1;
        }
    }

    ms.states[s].partition = Partition::from_labels(&labels)?;
    gibbs_update_theta(ms, s, data, rng);
    Ok(())
}

/// Conjugate Beta draw of every interaction probability of state s. Blocks
/// with no trials (including every block of an unoccupied state) come out
/// as prior draws.
pub fn gibbs_update_theta<R: Rng + ?Sized>(
    ms: &mut ModelState,
    s: usize,
    data: &NetworkSeries,
    rng: &mut R,
) {
    let weeks = weeks_in_state(&ms.zeta, s);
    let pair = pair_counts(data, &weeks);
    let st = &ms.states[s];
    let k = st.partition.k();
    let (ones, trials) = block_counts(&st.partition, &pair, weeks.len(), data.n());
    let h = st.hyper;
    let mut theta = Vec::with_capacity(k * k);
    for a in 0..k {
        for b in 0..k {
            let cell = a * k + b;
            let (pa, pb) = if a == b { (h.a_d, h.b_d) } else { (h.a_o, h.b_o) };
            theta.push(beta_draw(
                pa + ones[cell] as f64,
                pb + (trials[cell] - ones[cell]) as f64,
                rng,
            ));
        }
    }
    ms.states[s].theta = InteractionMatrix::new(k, theta).expect("posterior draws lie in (0,1)");
}

/// Transition pair counts n_{r,s}; the first period contributes none.
pub fn transition_counts(zeta: &[usize], s_max: usize) -> Vec<Vec<u64>> {
    let mut counts = vec![vec![0u64; s_max]; s_max];
    for t in 1..zeta.len() {
        counts[zeta[t - 1]][zeta[t]] += 1;
    }
    counts
}

/// Dirichlet draw of every transition row given the path and gamma.
pub fn gibbs_update_pi<R: Rng + ?Sized>(ms: &mut ModelState, rng: &mut R) {
    let s = ms.s_max();
    let counts = transition_counts(&ms.zeta, s);
    let base = ms.gamma / s as f64;
    for r in 0..s {
        let shapes: Vec<f64> = counts[r].iter().map(|&c| base + c as f64).collect();
        ms.pi[r] = dirichlet_draw(&shapes, rng);
    }
}

/// Gamma draws of the four rate hyperparameters given the occupied states'
/// Beta hyperparameters. Shapes are c S* + 1; each rate adds the reciprocal
/// prior mean to the matching sum of a or b values.
pub fn gibbs_update_rate_hypers<R: Rng + ?Sized>(
    ms: &mut ModelState,
    cfg: &HyperConfig,
    rng: &mut R,
) {
    let occ = ms.occupied();
    let shape = cfg.c * occ.len() as f64 + 1.0;
    let (mut sum_a_o, mut sum_b_o, mut sum_a_d, mut sum_b_d) = (0.0, 0.0, 0.0, 0.0);
    for &s in &occ {
        let h = &ms.states[s].hyper;
        sum_a_o += h.a_o;
        sum_b_o += h.b_o;
        sum_a_d += h.a_d;
        sum_b_d += h.b_d;
    }
    ms.rates.d_o = gamma_draw(shape, sum_a_o + 1.0 / cfg.lambda_d, rng);
    ms.rates.e_o = gamma_draw(shape, sum_b_o + 1.0 / cfg.lambda_e, rng);
    ms.rates.d_d = gamma_draw(shape, sum_a_d + 1.0 / cfg.lambda_d, rng);
    ms.rates.e_d = gamma_draw(shape, sum_b_d + 1.0 / cfg.lambda_e, rng);
}

/// Joint draw of the regime path by forward-filter backward-sampling, with
/// a uniform initial-state distribution.
pub fn ffbs_zeta<R: Rng + ?Sized>(
    ms: &ModelState,
    data: &NetworkSeries,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let s = ms.s_max();
    let log_init = vec![-(s as f64).ln(); s];
    let log_trans: Vec<Vec<f64>> =
        ms.pi.iter().map(|row| row.iter().map(|p| p.ln()).collect()).collect();
    let table = log_emission_table(ms, data)?;
    ffbs_sample(&log_init, &log_trans, &table, rng)
}
