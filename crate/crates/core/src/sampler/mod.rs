//! Hidden Markov model with per-state blockmodel emissions.
//!
//! Weekly networks Y_1..Y_T are tied together by a latent regime path
//! zeta_1..zeta_T on at most `S_max` states:
//!
//! ```text
//! zeta_1 ~ Uniform{1..S}
//! zeta_t | zeta_{t-1} = r  ~  Categorical(pi_r),   pi_r ~ Dirichlet(gamma/S, .., gamma/S)
//! gamma ~ Exponential(mean gamma_prior_mean)
//! ```
//!
//! Each state s carries its own community structure and interaction
//! probabilities, drawn as in [`crate::blockmodel`]:
//!
//! ```text
//! xi_s | alpha_s, beta_s        ~ PitmanYor EPPF
//! theta_{k,l,s} | a_s, b_s      ~ Beta(a_{s,D}, b_{s,D}) if k = l, Beta(a_{s,O}, b_{s,O}) otherwise
//! alpha_s ~ Uniform(0,1) or Beta(a,b);   beta_s ~ Exponential(mean beta_prior_mean)
//! a_{s,O} ~ Gamma(c, d_O)  b_{s,O} ~ Gamma(c, e_O)   (rate parameterization)
//! a_{s,D} ~ Gamma(c, d_D)  b_{s,D} ~ Gamma(c, e_D)
//! d_, e_  ~ Exponential(means lambda_d, lambda_e)
//! ```
//!
//! Given the path, entries are independent Bernoulli links,
//! y_{ij,t} ~ Ber(theta_{xi_{i,s}, xi_{j,s}, s}) with s = zeta_t, so the log
//! likelihood groups into per-state blocks A_{k,l,s} of exchangeable trials.
//! This module holds the state container and likelihood evaluations; the
//! posterior updates live in [`gibbs`], [`mh`] and [`chain`].

pub mod chain;
pub mod gibbs;
pub mod mh;
pub mod synth;
pub mod trace;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::blockmodel::{
    sample_interactions, sample_partition, BetaHyper, InteractionMatrix, Partition, PyParams,
};
use crate::error::{Error, Result};
use crate::network::NetworkSeries;
use crate::sampling::{
    beta_draw, categorical, dirichlet_draw, exp_mean_draw, gamma_draw, open_unit,
};

pub use chain::{gibbs_sweep, run_chain, SweepOutcome};
pub use synth::{generate_synthetic, GroundTruth, PlantedSpec, SyntheticSpec};
pub use trace::{ChainTrace, Sample, ScalarRecord};

/// Which family of interaction blocks a hyperparameter pair governs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    Diagonal,
    OffDiagonal,
}

/// Prior on the per-state Pitman-Yor discount.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum AlphaPrior {
    Uniform,
    Beta { a: f64, b: f64 },
}

impl AlphaPrior {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            AlphaPrior::Uniform => open_unit(rng),
            AlphaPrior::Beta { a, b } => beta_draw(*a, *b, rng),
        }
    }

    /// Unnormalized log density on (0,1).
    pub fn log_density(&self, alpha: f64) -> f64 {
        if !(0.0..1.0).contains(&alpha) || alpha == 0.0 {
            return f64::NEG_INFINITY;
        }
        match self {
            AlphaPrior::Uniform => 0.0,
            AlphaPrior::Beta { a, b } => (a - 1.0) * alpha.ln() + (b - 1.0) * (1.0 - alpha).ln(),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            AlphaPrior::Uniform => 0.5,
            AlphaPrior::Beta { a, b } => a / (a + b),
        }
    }

    fn validate(&self) -> Result<()> {
        if let AlphaPrior::Beta { a, b } = self {
            if !(*a > 0.0 && *b > 0.0) {
                return Err(Error::invalid("discount Beta prior needs positive shapes"));
            }
        }
        Ok(())
    }
}

/// Proposal scales for the Metropolis-Hastings moves. Covariances apply to
/// the log-transformed coordinates; all scales are multiplied by an adaptive
/// factor during burn-in (see [`mh::MhScales`]) and frozen afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tuning {
    pub kappa_gamma: f64,
    pub sigma_ab_diag: [[f64; 2]; 2],
    pub sigma_ab_off: [[f64; 2]; 2],
    pub sigma_py: f64,
    pub adapt: bool,
}

impl Default for Tuning {
    fn default() -> Self {
        Tuning {
            kappa_gamma: 0.5,
            sigma_ab_diag: [[0.09, 0.0], [0.0, 0.09]],
            sigma_ab_off: [[0.09, 0.0], [0.0, 0.09]],
            sigma_py: 0.4,
            adapt: true,
        }
    }
}

impl Tuning {
    fn validate(&self) -> Result<()> {
        if !(self.kappa_gamma > 0.0 && self.sigma_py > 0.0) {
            return Err(Error::invalid("proposal scales must be positive"));
        }
        for m in [&self.sigma_ab_diag, &self.sigma_ab_off] {
            if (m[0][1] - m[1][0]).abs() > 1e-12 {
                return Err(Error::invalid("proposal covariance must be symmetric"));
            }
            if !(m[0][0] > 0.0 && m[1][1] > 0.0 && m[0][0] * m[1][1] - m[0][1] * m[1][0] > 0.0) {
                return Err(Error::invalid("proposal covariance must be positive definite"));
            }
        }
        Ok(())
    }
}

/// Fixed hyperparameters of the full hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperConfig {
    /// Truncation on the number of hidden states.
    pub s_max: usize,
    /// Gamma shape for the Beta-hyperparameter priors a, b.
    pub c: f64,
    /// Exponential means of the rates d_O, d_D.
    pub lambda_d: f64,
    /// Exponential means of the rates e_O, e_D.
    pub lambda_e: f64,
    pub gamma_prior_mean: f64,
    pub beta_prior_mean: f64,
    pub alpha_prior: AlphaPrior,
    pub tuning: Tuning,
}

impl Default for HyperConfig {
    fn default() -> Self {
        HyperConfig {
            s_max: 30,
            c: 1.0,
            lambda_d: 2.0,
            lambda_e: 2.0,
            gamma_prior_mean: 1.0,
            beta_prior_mean: 1.0,
            alpha_prior: AlphaPrior::Uniform,
            tuning: Tuning::default(),
        }
    }
}

impl HyperConfig {
    pub fn validate(&self) -> Result<()> {
        if self.s_max < 2 {
            return Err(Error::invalid("need at least two hidden states"));
        }
        for (name, v) in [
            ("c", self.c),
            ("lambda_d", self.lambda_d),
            ("lambda_e", self.lambda_e),
            ("gamma_prior_mean", self.gamma_prior_mean),
            ("beta_prior_mean", self.beta_prior_mean),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} = {v} must be positive and finite")));
            }
        }
        self.alpha_prior.validate()?;
        self.tuning.validate()
    }
}

/// Rate parameters of the Gamma priors on the Beta hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateHypers {
    pub d_o: f64,
    pub e_o: f64,
    pub d_d: f64,
    pub e_d: f64,
}

/// Everything state s owns: partition prior parameters, Beta
/// hyperparameters, community labels and interaction probabilities.
///
/// `theta` always has exactly `partition.k()` communities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateParams {
    pub py: PyParams,
    pub hyper: BetaHyper,
    pub partition: Partition,
    pub theta: InteractionMatrix,
}

/// One point in the posterior: the regime path plus all per-state and
/// shared parameters. States never visited by `zeta` still carry valid
/// prior draws so the forward-backward pass can evaluate them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub zeta: Vec<usize>,
    pub states: Vec<StateParams>,
    pub pi: Vec<Vec<f64>>,
    pub gamma: f64,
    pub rates: RateHypers,
}

impl ModelState {
    pub fn s_max(&self) -> usize {
        self.states.len()
    }

    /// Distinct states visited by the current path, ascending.
    pub fn occupied(&self) -> Vec<usize> {
        let mut seen = vec![false; self.s_max()];
        for &z in &self.zeta {
            seen[z] = true;
        }
        (0..self.s_max()).filter(|&s| seen[s]).collect()
    }

    pub fn s_star(&self) -> usize {
        self.occupied().len()
    }

    /// Joint draw of every unknown from the prior, for chain initialization
    /// and synthetic-data generation.
    pub fn draw_prior<R: Rng + ?Sized>(
        cfg: &HyperConfig,
        n: usize,
        t: usize,
        rng: &mut R,
    ) -> Result<ModelState> {
        cfg.validate()?;
        if n < 2 || t < 1 {
            return Err(Error::invalid("need n >= 2 traders and t >= 1 periods"));
        }
        let s = cfg.s_max;
        let rates = RateHypers {
            d_o: exp_mean_draw(cfg.lambda_d, rng),
            e_o: exp_mean_draw(cfg.lambda_e, rng),
            d_d: exp_mean_draw(cfg.lambda_d, rng),
            e_d: exp_mean_draw(cfg.lambda_e, rng),
        };
        let gamma = exp_mean_draw(cfg.gamma_prior_mean, rng);
        let shapes = vec![gamma / s as f64; s];
        let pi: Vec<Vec<f64>> = (0..s).map(|_| dirichlet_draw(&shapes, rng)).collect();
        let mut zeta = vec![0usize; t];
        zeta[0] = rng.random_range(0..s);
        for i in 1..t {
            zeta[i] = categorical(&pi[zeta[i - 1]], rng);
        }
        let states = (0..s)
            .map(|_| draw_prior_state(cfg, &rates, n, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(ModelState { zeta, states, pi, gamma, rates })
    }
}

/// Fresh prior draw of one state's parameters given the shared rates.
pub fn draw_prior_state<R: Rng + ?Sized>(
    cfg: &HyperConfig,
    rates: &RateHypers,
    n: usize,
    rng: &mut R,
) -> Result<StateParams> {
    let py = PyParams::new(
        cfg.alpha_prior.draw(rng),
        exp_mean_draw(cfg.beta_prior_mean, rng),
    )?;
    let hyper = BetaHyper::new(
        gamma_draw(cfg.c, rates.d_o, rng),
        gamma_draw(cfg.c, rates.e_o, rng),
        gamma_draw(cfg.c, rates.d_d, rng),
        gamma_draw(cfg.c, rates.e_d, rng),
    )?;
    let partition = sample_partition(n, &py, rng);
    let theta = sample_interactions(partition.k(), &hyper, rng);
    Ok(StateParams { py, hyper, partition, theta })
}

// Beta draws can round to 0 or 1; log densities clamp just inside.
const THETA_FLOOR: f64 = 1e-12;

pub(crate) fn ln_theta(p: f64) -> f64 {
    p.clamp(THETA_FLOOR, 1.0 - THETA_FLOOR).ln()
}

pub(crate) fn ln_one_minus_theta(p: f64) -> f64 {
    (1.0 - p.clamp(THETA_FLOOR, 1.0 - THETA_FLOOR)).ln()
}

fn check_dims(ms: &ModelState, data: &NetworkSeries) -> Result<()> {
    if ms.zeta.len() != data.t_len() {
        return Err(Error::invalid("path length does not match series length"));
    }
    if ms.states.iter().any(|st| st.partition.n() != data.n()) {
        return Err(Error::invalid("partition size does not match trader count"));
    }
    Ok(())
}

/// Log emission density of every period under every state.
///
/// Per state the zero-network base is accumulated once from the block pair
/// counts, then each period adds log(theta/(1-theta)) over its links only.
pub fn log_emission_table(ms: &ModelState, data: &NetworkSeries) -> Result<Vec<Vec<f64>>> {
    check_dims(ms, data)?;
    let s_count = ms.s_max();
    let t_count = data.t_len();
    let mut table = vec![vec![0.0f64; s_count]; t_count];
    for (s, st) in ms.states.iter().enumerate() {
        let k = st.partition.k();
        if st.theta.k() < k {
            return Err(Error::invalid("interaction matrix smaller than partition"));
        }
        let labels = st.partition.labels();
        let sizes = st.partition.sizes();
        let mut log_t = vec![0.0f64; k * k];
        let mut log_1m = vec![0.0f64; k * k];
        let mut base = 0.0f64;
        for a in 0..k {
            for b in 0..k {
                let theta = st.theta.get(a, b);
                log_t[a * k + b] = ln_theta(theta);
                log_1m[a * k + b] = ln_one_minus_theta(theta);
                let pairs = if a == b {
                    sizes[a] * (sizes[a] - 1)
                } else {
                    sizes[a] * sizes[b]
                };
                base += pairs as f64 * log_1m[a * k + b];
            }
        }
        for (t, week) in data.weeks.iter().enumerate() {
            let mut e = base;
            for (i, j) in week.ones() {
                let cell = labels[i] * k + labels[j];
                e += log_t[cell] - log_1m[cell];
            }
            if !e.is_finite() {
                return Err(Error::numerical(format!(
                    "emission log density for period {t}, state {s} is {e}"
                )));
            }
            table[t][s] = e;
        }
    }
    Ok(table)
}

/// Entrywise log likelihood: sum over periods and ordered trader pairs of
/// the Bernoulli log density under the sojourning state's blockmodel.
pub fn log_likelihood(ms: &ModelState, data: &NetworkSeries) -> Result<f64> {
    check_dims(ms, data)?;
    let n = data.n();
    let mut total = 0.0;
    for (t, week) in data.weeks.iter().enumerate() {
        let st = &ms.states[ms.zeta[t]];
        let labels = st.partition.labels();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let theta = st.theta.get(labels[i], labels[j]);
                total += if week.get(i, j) {
                    ln_theta(theta)
                } else {
                    ln_one_minus_theta(theta)
                };
            }
        }
    }
    Ok(total)
}

/// Block-grouped form of the same likelihood: per occupied state, each
/// community pair contributes ones * log theta + (trials - ones) * log(1 -
/// theta) with counts pooled over the state's weeks.
pub fn log_likelihood_grouped(ms: &ModelState, data: &NetworkSeries) -> Result<f64> {
    check_dims(ms, data)?;
    let mut total = 0.0;
    for s in ms.occupied() {
        let st = &ms.states[s];
        let weeks = gibbs::weeks_in_state(&ms.zeta, s);
        let pair = gibbs::pair_counts(data, &weeks);
        let (ones, trials) = gibbs::block_counts(&st.partition, &pair, weeks.len(), data.n());
        let k = st.partition.k();
        for a in 0..k {
            for b in 0..k {
                let cell = a * k + b;
                let theta = st.theta.get(a, b);
                total += ones[cell] as f64 * ln_theta(theta)
                    + (trials[cell] - ones[cell]) as f64 * ln_one_minus_theta(theta);
            }
        }
    }
    Ok(total)
}
