//! Comparison model: a hidden Markov chain with bivariate Gaussian emissions
//! fitted to pairs of weekly network summary statistics.
//!
//! ```text
//! x_t | zeta*_t = s   ~  Normal_2(mu_s, Omega_s)
//! mu_s                ~  Normal_2(d, D)
//! Omega_s             ~  InvWishart(a, B)
//! zeta*_1             ~  Uniform(1..R),   zeta*_t | zeta*_{t-1} = r ~ Cat(pi*_r)
//! pi*_r               ~  Dirichlet(gamma*/R, .., gamma*/R)
//! ```
//!
//! The inverse-Wishart is parameterized so that the density is proportional
//! to |Omega|^{-(a+3)/2} exp(-tr(B Omega^{-1})/2) for dimension 2; its mean
//! B/(a-3) exists because configs require a > 3. Both emission parameters
//! get one-at-a-time conjugate Gibbs updates (mu | Omega is bivariate
//! normal, Omega | mu is inverse-Wishart), the path is drawn jointly by the
//! same forward-filter backward-sampler the network model uses, and
//! transition rows are Dirichlet. States the path does not visit are
//! refreshed from their priors each sweep.
//!
//! The model deliberately sees only two numbers per week; comparing its
//! pairwise state-incidence matrix with the network model's shows what the
//! summary-statistic reduction throws away.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{ChiSquared, Distribution};

use crate::analysis::{coclustering, CoClustering};
use crate::error::{Error, Result};
use crate::sampler::mh::chol2;
use crate::sampling::{dirichlet_draw, normal_draw};

/// A time series of bivariate summary statistics, one pair per period.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateSeries {
    periods: Vec<String>,
    xs: Vec<[f64; 2]>,
}

impl BivariateSeries {
    pub fn new(periods: Vec<String>, xs: Vec<[f64; 2]>) -> Result<Self> {
        if xs.len() < 2 {
            return Err(Error::invalid("series needs at least two periods"));
        }
        if periods.len() != xs.len() {
            return Err(Error::invalid(format!(
                "{} period labels for {} observations",
                periods.len(),
                xs.len()
            )));
        }
        if xs.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("observations must be finite"));
        }
        Ok(BivariateSeries { periods, xs })
    }

    /// Wraps bare points with synthetic period labels t0001, t0002, ..
    pub fn from_points(xs: Vec<[f64; 2]>) -> Result<Self> {
        let periods = (1..=xs.len()).map(|t| format!("t{t:04}")).collect();
        BivariateSeries::new(periods, xs)
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn xs(&self) -> &[[f64; 2]] {
        &self.xs
    }

    pub fn periods(&self) -> &[String] {
        &self.periods
    }
}

/// Hyperparameters and run lengths for the Gaussian-emission chain.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHmmConfig {
    /// Truncation on the number of hidden states.
    pub r: usize,
    /// Dirichlet concentration of the transition rows.
    pub gamma_star: f64,
    /// Normal prior mean d of the state means.
    pub d_mean: [f64; 2],
    /// Normal prior covariance D of the state means.
    pub d_cov: [[f64; 2]; 2],
    /// Inverse-Wishart degrees of freedom a.
    pub iw_df: f64,
    /// Inverse-Wishart scale B.
    pub iw_scale: [[f64; 2]; 2],
    pub iters: u64,
    pub burnin: u64,
}

fn sym_pos_def(m: &[[f64; 2]; 2]) -> bool {
    (m[0][1] - m[1][0]).abs() <= 1e-12 * (1.0 + m[0][1].abs())
        && m[0][0] > 0.0
        && m[1][1] > 0.0
        && det2(m) > 0.0
}

impl GaussHmmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.r == 0 {
            return Err(Error::invalid("need at least one hidden state"));
        }
        if !(self.gamma_star > 0.0 && self.gamma_star.is_finite()) {
            return Err(Error::invalid("gamma_star must be positive"));
        }
        if !(self.iw_df > 3.0) {
            return Err(Error::invalid(
                "inverse-Wishart df must exceed 3 so the prior mean exists",
            ));
        }
        if self.d_mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("prior mean d must be finite"));
        }
        if !sym_pos_def(&self.d_cov) || !sym_pos_def(&self.iw_scale) {
            return Err(Error::invalid(
                "D and B must be symmetric positive definite",
            ));
        }
        if self.iters == 0 || self.burnin >= self.iters {
            return Err(Error::invalid("need burnin < iters"));
        }
        Ok(())
    }
}

/// Data-driven defaults: d is the sample mean and both D and B equal the
/// sample covariance, so the prior is centered on the observed scale.
pub fn default_config_from_data(series: &BivariateSeries) -> Result<GaussHmmConfig> {
    let t = series.len();
    if t < 3 {
        return Err(Error::invalid("need at least three periods to set defaults"));
    }
    let tf = t as f64;
    let mut mean = [0.0f64; 2];
    for x in series.xs() {
        mean[0] += x[0];
        mean[1] += x[1];
    }
    mean[0] /= tf;
    mean[1] /= tf;
    let mut cov = [[0.0f64; 2]; 2];
    for x in series.xs() {
        let c = [x[0] - mean[0], x[1] - mean[1]];
        cov[0][0] += c[0] * c[0];
        cov[0][1] += c[0] * c[1];
        cov[1][1] += c[1] * c[1];
    }
    cov[0][0] /= tf - 1.0;
    cov[0][1] /= tf - 1.0;
    cov[1][1] /= tf - 1.0;
    cov[1][0] = cov[0][1];
    let scale = cov[0][0].max(cov[1][1]);
    if !(det2(&cov) > 1e-12 * scale * scale) {
        return Err(Error::numerical(
            "sample covariance is singular; jitter the observations with a little \
             independent noise and rerun",
        ));
    }
    Ok(GaussHmmConfig {
        r: 15,
        gamma_star: 1.0,
        d_mean: mean,
        d_cov: cov,
        iw_df: 4.0,
        iw_scale: cov,
        iters: 10_000,
        burnin: 1_000,
    })
}

/// Emission parameters and transition matrix at one stored iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussParamsSample {
    pub iteration: u64,
    pub mu: Vec<[f64; 2]>,
    pub omega: Vec<[[f64; 2]; 2]>,
    pub pi: Vec<Vec<f64>>,
}

/// Output of one chain: every post-burn-in path, and the emission
/// parameters of every tenth post-burn-in sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHmmTrace {
    pub r: usize,
    pub t: usize,
    pub seed: u64,
    pub paths: Vec<Vec<usize>>,
    pub params: Vec<GaussParamsSample>,
}

fn det2(m: &[[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn inv2(m: &[[f64; 2]; 2]) -> Result<[[f64; 2]; 2]> {
    let det = det2(m);
    if !(det.abs() > f64::MIN_POSITIVE && det.is_finite()) {
        return Err(Error::numerical("singular 2x2 matrix"));
    }
    Ok([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]])
}

/// Parameters (mean, covariance) of the bivariate-normal full conditional
/// of a state mean given its covariance and assigned observations.
pub fn mu_full_conditional(
    xs: &[[f64; 2]],
    omega: &[[f64; 2]; 2],
    d_mean: &[f64; 2],
    d_cov: &[[f64; 2]; 2],
) -> Result<([f64; 2], [[f64; 2]; 2])> {
    let d_prec = inv2(d_cov)?;
    let o_prec = inv2(omega)?;
    let n = xs.len() as f64;
    let mut sum = [0.0f64; 2];
    for x in xs {
        sum[0] += x[0];
        sum[1] += x[1];
    }
    // posterior precision D^-1 + n Omega^-1; weighted information vector
    let prec = [
        [d_prec[0][0] + n * o_prec[0][0], d_prec[0][1] + n * o_prec[0][1]],
        [d_prec[1][0] + n * o_prec[1][0], d_prec[1][1] + n * o_prec[1][1]],
    ];
    let cov = inv2(&prec)?;
    let info = [
        d_prec[0][0] * d_mean[0] + d_prec[0][1] * d_mean[1] + o_prec[0][0] * sum[0]
            + o_prec[0][1] * sum[1],
        d_prec[1][0] * d_mean[0] + d_prec[1][1] * d_mean[1] + o_prec[1][0] * sum[0]
            + o_prec[1][1] * sum[1],
    ];
    let mean = [
        cov[0][0] * info[0] + cov[0][1] * info[1],
        cov[1][0] * info[0] + cov[1][1] * info[1],
    ];
    Ok((mean, cov))
}

/// Parameters (df, scale) of the inverse-Wishart full conditional of a
/// state covariance given its mean and assigned observations.
pub fn omega_full_conditional(
    xs: &[[f64; 2]],
    mu: &[f64; 2],
    iw_df: f64,
    iw_scale: &[[f64; 2]; 2],
) -> (f64, [[f64; 2]; 2]) {
    let mut scale = *iw_scale;
    for x in xs {
        let c = [x[0] - mu[0], x[1] - mu[1]];
        scale[0][0] += c[0] * c[0];
        scale[0][1] += c[0] * c[1];
        scale[1][0] += c[1] * c[0];
        scale[1][1] += c[1] * c[1];
    }
    (iw_df + xs.len() as f64, scale)
}

fn sample_mvn2<R: Rng + ?Sized>(
    mean: &[f64; 2],
    cov: &[[f64; 2]; 2],
    rng: &mut R,
) -> [f64; 2] {
    let l = chol2(cov);
    let z = [normal_draw(0.0, 1.0, rng), normal_draw(0.0, 1.0, rng)];
    [
        mean[0] + l[0][0] * z[0],
        mean[1] + l[1][0] * z[0] + l[1][1] * z[1],
    ]
}

/// Wishart(df, V) draw by the Bartlett decomposition, dimension 2.
fn sample_wishart2<R: Rng + ?Sized>(
    df: f64,
    v: &[[f64; 2]; 2],
    rng: &mut R,
) -> [[f64; 2]; 2] {
    let l = chol2(v);
    let a11 = ChiSquared::new(df).expect("df > 1").sample(rng).sqrt();
    let a22 = ChiSquared::new(df - 1.0).expect("df > 1").sample(rng).sqrt();
    let a21 = normal_draw(0.0, 1.0, rng);
    // rows of L * A, with A lower triangular
    let m = [
        [l[0][0] * a11, 0.0],
        [l[1][0] * a11 + l[1][1] * a21, l[1][1] * a22],
    ];
    [
        [m[0][0] * m[0][0], m[0][0] * m[1][0]],
        [m[0][0] * m[1][0], m[1][0] * m[1][0] + m[1][1] * m[1][1]],
    ]
}

fn sample_inverse_wishart2<R: Rng + ?Sized>(
    df: f64,
    scale: &[[f64; 2]; 2],
    rng: &mut R,
) -> Result<[[f64; 2]; 2]> {
    let w = sample_wishart2(df, &inv2(scale)?, rng);
    inv2(&w)
}

fn log_normal2(x: &[f64; 2], mu: &[f64; 2], omega: &[[f64; 2]; 2]) -> Result<f64> {
    let det = det2(omega);
    if !(det > 0.0) {
        return Err(Error::numerical("emission covariance is not positive definite"));
    }
    let prec = inv2(omega)?;
    let c = [x[0] - mu[0], x[1] - mu[1]];
    let q = prec[0][0] * c[0] * c[0]
        + (prec[0][1] + prec[1][0]) * c[0] * c[1]
        + prec[1][1] * c[1] * c[1];
    Ok(-(2.0 * std::f64::consts::PI).ln() - 0.5 * det.ln() - 0.5 * q)
}

/// Fits the chain. One sweep updates, in order: every state mean from its
/// normal full conditional, every state covariance from its inverse-Wishart
/// full conditional (prior draws for states the current path does not
/// visit), the path jointly by forward-filter backward-sampling with a
/// uniform initial distribution, and the transition rows from
/// Dirichlet(gamma*/R + counts).
pub fn run_gauss_hmm(
    series: &BivariateSeries,
    cfg: &GaussHmmConfig,
    seed: u64,
) -> Result<GaussHmmTrace> {
    cfg.validate()?;
    let t_len = series.len();
    let r = cfg.r;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);

    let mut mu: Vec<[f64; 2]> = Vec::with_capacity(r);
    let mut omega: Vec<[[f64; 2]; 2]> = Vec::with_capacity(r);
    for _ in 0..r {
        mu.push(sample_mvn2(&cfg.d_mean, &cfg.d_cov, &mut rng));
        omega.push(sample_inverse_wishart2(cfg.iw_df, &cfg.iw_scale, &mut rng)?);
    }
    let conc = vec![cfg.gamma_star / r as f64; r];
    let mut pi: Vec<Vec<f64>> = (0..r).map(|_| dirichlet_draw(&conc, &mut rng)).collect();
    let mut path: Vec<usize> = (0..t_len).map(|_| rng.random_range(0..r)).collect();

    let log_init = vec![-(r as f64).ln(); r];
    let mut trace = GaussHmmTrace {
        r,
        t: t_len,
        seed,
        paths: Vec::new(),
        params: Vec::new(),
    };

    for it in 1..=cfg.iters {
        // group observation indices by current state
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); r];
        for (t, &s) in path.iter().enumerate() {
            members[s].push(t);
        }
        for s in 0..r {
            if members[s].is_empty() {
                mu[s] = sample_mvn2(&cfg.d_mean, &cfg.d_cov, &mut rng);
                omega[s] = sample_inverse_wishart2(cfg.iw_df, &cfg.iw_scale, &mut rng)?;
                continue;
            }
            let xs: Vec<[f64; 2]> = members[s].iter().map(|&t| series.xs()[t]).collect();
            let (m, c) = mu_full_conditional(&xs, &omega[s], &cfg.d_mean, &cfg.d_cov)?;
            mu[s] = sample_mvn2(&m, &c, &mut rng);
            let (df, scale) = omega_full_conditional(&xs, &mu[s], cfg.iw_df, &cfg.iw_scale);
            omega[s] = sample_inverse_wishart2(df, &scale, &mut rng)?;
        }

        let mut log_emit = vec![vec![0.0f64; r]; t_len];
        for (t, x) in series.xs().iter().enumerate() {
            for s in 0..r {
                log_emit[t][s] = log_normal2(x, &mu[s], &omega[s])?;
            }
        }
        let log_trans: Vec<Vec<f64>> =
            pi.iter().map(|row| row.iter().map(|p| p.ln()).collect()).collect();
        path = crate::hmm::ffbs_sample(&log_init, &log_trans, &log_emit, &mut rng)?;

        let mut counts = vec![vec![0u64; r]; r];
        for w in path.windows(2) {
            counts[w[0]][w[1]] += 1;
        }
        for (row, cnt) in pi.iter_mut().zip(&counts) {
            let shapes: Vec<f64> =
                cnt.iter().map(|&k| cfg.gamma_star / r as f64 + k as f64).collect();
            *row = dirichlet_draw(&shapes, &mut rng);
        }

        if it > cfg.burnin {
            trace.paths.push(path.clone());
            if (it - cfg.burnin - 1) % 10 == 0 {
                trace.params.push(GaussParamsSample {
                    iteration: it,
                    mu: mu.clone(),
                    omega: omega.clone(),
                    pi: pi.clone(),
                });
            }
        }
    }
    Ok(trace)
}

/// Posterior probability that periods t and t' share a hidden state,
/// estimated by the fraction of sampled paths agreeing at (t, t').
pub fn pairwise_incidence(trace: &GaussHmmTrace) -> Result<CoClustering> {
    coclustering(&trace.paths)
}
