//! Random-walk Metropolis-Hastings moves.
//!
//! Three families of moves, all proposed on transformed coordinates with
//! the Jacobian folded into the acceptance ratio:
//!
//! * `gamma`: log-normal random walk. The target integrates the transition
//!   matrix out analytically, one Dirichlet-multinomial factor per row of
//!   the transition-count table, so the move composes with the later
//!   conjugate draw of pi into a valid blocked update.
//! * `(a, b)` per state and block kind: bivariate log-normal walk against
//!   the Gamma priors times the Beta-Bernoulli marginals of the matching
//!   blocks. The interaction probabilities stay integrated out here; they
//!   are redrawn before their next use.
//! * `(alpha, beta)` per state: Gaussian walk on (logit alpha,
//!   log(alpha + beta)), which keeps beta > -alpha by construction, against
//!   prior times partition EPPF.
//!
//! Each family carries one scalar log step-size multiplier adapted by
//! Robbins-Monro toward 35% acceptance during burn-in and frozen after.

use rand::Rng;
use statrs::function::gamma::ln_gamma;

use crate::blockmodel::{beta_bernoulli_marginal, eppf_log_prob, PyParams};
use crate::network::NetworkSeries;
use crate::sampling::normal_draw;

use super::gibbs::{block_counts, pair_counts, transition_counts, weeks_in_state};
use super::{BlockKind, HyperConfig, ModelState};

/// Accept/reject from a log ratio; returns the decision and the acceptance
/// probability. A ratio of zero or better accepts without drawing.
pub fn mh_accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> (bool, f64) {
    if log_ratio >= 0.0 {
        (true, 1.0)
    } else {
        let p = log_ratio.exp();
        (rng.random::<f64>() < p, p)
    }
}

/// Log posterior density of gamma given the path, with every transition row
/// integrated out: per row r, a Dirichlet-multinomial factor
/// Gamma(gamma)/Gamma(gamma + N_r) prod_s Gamma(gamma/S + n_rs)/Gamma(gamma/S),
/// times the exponential prior.
pub fn log_gamma_target(gamma: f64, zeta: &[usize], s_max: usize, prior_mean: f64) -> f64 {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return f64::NEG_INFINITY;
    }
    let counts = transition_counts(zeta, s_max);
    let base = gamma / s_max as f64;
    let mut lp = -gamma / prior_mean;
    for row in &counts {
        let n_r: u64 = row.iter().sum();
        if n_r == 0 {
            continue;
        }
        lp += ln_gamma(gamma) - ln_gamma(gamma + n_r as f64);
        for &c in row {
            if c > 0 {
                lp += ln_gamma(base + c as f64) - ln_gamma(base);
            }
        }
    }
    lp
}

/// One log-normal random-walk step on gamma.
pub fn mh_update_gamma<R: Rng + ?Sized>(
    ms: &mut ModelState,
    cfg: &HyperConfig,
    kappa: f64,
    rng: &mut R,
) -> (bool, f64) {
    let cur = ms.gamma;
    let proposal = (cur.ln() + normal_draw(0.0, kappa, rng)).exp();
    if !(proposal > 0.0 && proposal.is_finite()) {
        return (false, 0.0);
    }
    let s_max = ms.s_max();
    let log_ratio = log_gamma_target(proposal, &ms.zeta, s_max, cfg.gamma_prior_mean)
        - log_gamma_target(cur, &ms.zeta, s_max, cfg.gamma_prior_mean)
        + proposal.ln()
        - cur.ln();
    let (accept, p) = mh_accept(log_ratio, rng);
    if accept {
        ms.gamma = proposal;
    }
    (accept, p)
}

/// One bivariate log-normal step on a state's (a, b) pair of the given
/// block kind. `chol` is the (already scaled) Cholesky factor of the
/// proposal covariance on log coordinates.
pub fn mh_update_beta_hypers<R: Rng + ?Sized>(
    ms: &mut ModelState,
    s: usize,
    kind: BlockKind,
    data: &NetworkSeries,
    cfg: &HyperConfig,
    chol: &[[f64; 2]; 2],
    rng: &mut R,
) -> (bool, f64) {
    let h = ms.states[s].hyper;
    let (a_cur, b_cur, d_rate, e_rate) = match kind {
        BlockKind::Diagonal => (h.a_d, h.b_d, ms.rates.d_d, ms.rates.e_d),
        BlockKind::OffDiagonal => (h.a_o, h.b_o, ms.rates.d_o, ms.rates.e_o),
    };

    let weeks = weeks_in_state(&ms.zeta, s);
    let pair = pair_counts(data, &weeks);
    let st = &ms.states[s];
    let k = st.partition.k();
    let (ones, trials) = block_counts(&st.partition, &pair, weeks.len(), data.n());
    let mut blocks = Vec::new();
    for a in 0..k {
        for b in 0..k {
            let matches = match kind {
                BlockKind::Diagonal => a == b,
                BlockKind::OffDiagonal => a != b,
            };
            if matches {
                blocks.push((ones[a * k + b] as usize, trials[a * k + b] as usize));
            }
        }
    }

    let log_target = |a: f64, b: f64| {
        let mut lp = (cfg.c - 1.0) * a.ln() - d_rate * a + (cfg.c - 1.0) * b.ln() - e_rate * b;
        for &(o, t) in &blocks {
            lp += beta_bernoulli_marginal(o, t, a, b);
        }
        lp
    };

    let z1 = normal_draw(0.0, 1.0, rng);
    let z2 = normal_draw(0.0, 1.0, rng);
    let la = a_cur.ln() + chol[0][0] * z1;
    let lb = b_cur.ln() + chol[1][0] * z1 + chol[1][1] * z2;
    let (a_new, b_new) = (la.exp(), lb.exp());
    if !(a_new > 0.0 && a_new.is_finite() && b_new > 0.0 && b_new.is_finite()) {
        return (false, 0.0);
    }
    let log_ratio =
        log_target(a_new, b_new) - log_target(a_cur, b_cur) + la + lb - a_cur.ln() - b_cur.ln();
    let (accept, p) = mh_accept(log_ratio, rng);
    if accept {
        let h = &mut ms.states[s].hyper;
        match kind {
            BlockKind::Diagonal => {
                h.a_d = a_new;
                h.b_d = b_new;
            }
            BlockKind::OffDiagonal => {
                h.a_o = a_new;
                h.b_o = b_new;
            }
        }
    }
    (accept, p)
}

/// One Gaussian step on (logit alpha_s, log(alpha_s + beta_s)) against
/// prior times EPPF of the state's current partition.
pub fn update_py_params<R: Rng + ?Sized>(
    ms: &mut ModelState,
    s: usize,
    cfg: &HyperConfig,
    sigma: f64,
    rng: &mut R,
) -> (bool, f64) {
    let st = &ms.states[s];
    let (alpha, beta) = (st.py.alpha, st.py.beta);
    let partition = st.partition.clone();

    // log density over the transformed pair, Jacobian alpha(1-alpha)(alpha+beta)
    let log_target = |a: f64, b: f64| {
        if !(a > 0.0 && a < 1.0) || b <= 0.0 {
            return f64::NEG_INFINITY;
        }
        cfg.alpha_prior.log_density(a) - b / cfg.beta_prior_mean
            + eppf_log_prob(&partition, &PyParams { alpha: a, beta: b })
            + a.ln()
            + (1.0 - a).ln()
            + (a + b).ln()
    };

    let u_new = (alpha / (1.0 - alpha)).ln() + normal_draw(0.0, sigma, rng);
    let w_new = (alpha + beta).ln() + normal_draw(0.0, sigma, rng);
    let alpha_new = 1.0 / (1.0 + (-u_new).exp());
    let beta_new = w_new.exp() - alpha_new;

    let log_ratio = log_target(alpha_new, beta_new) - log_target(alpha, beta);
    let (accept, p) = mh_accept(log_ratio, rng);
    if accept {
        ms.states[s].py = PyParams { alpha: alpha_new, beta: beta_new };
    }
    (accept, p)
}

/// Lower Cholesky factor of a symmetric positive definite 2x2 matrix.
pub fn chol2(m: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let l11 = m[0][0].sqrt();
    let l21 = m[1][0] / l11;
    let l22 = (m[1][1] - l21 * l21).sqrt();
    [[l11, 0.0], [l21, l22]]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MhFamily {
    Gamma,
    AbDiag,
    AbOff,
    Py,
}

/// Per-family adaptive log step-size multipliers.
#[derive(Debug, Clone, Default)]
pub struct MhScales {
    log_mult: [f64; 4],
    steps: [u64; 4],
}

const TARGET_ACCEPTANCE: f64 = 0.35;

impl MhScales {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn factor(&self, family: MhFamily) -> f64 {
        self.log_mult[family as usize].exp()
    }

    /// Robbins-Monro step toward the target acceptance rate. Call only
    /// during burn-in.
    pub fn adapt(&mut self, family: MhFamily, acceptance_prob: f64) {
        let i = family as usize;
        self.steps[i] += 1;
        self.log_mult[i] += (self.steps[i] as f64).powf(-0.6) * (acceptance_prob - TARGET_ACCEPTANCE);
    }
}
