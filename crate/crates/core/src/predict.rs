//! One-step-ahead link prediction and rolling backtests.
//!
//! For a chain fitted to Y_1..Y_T, the posterior predictive probability of
//! a link from i to j in the unobserved period T+1 averages, over retained
//! samples, the mixture over next states:
//!
//! ```text
//! E(y_{i,j,T+1} | Y_1..Y_T) ~= (1/B) sum_b sum_s pi^(b)[zeta_T^(b), s] *
//!                              theta_s^(b)[xi_s^(b)(i), xi_s^(b)(j)]
//! ```
//!
//! including states the path never visited (their parameters are fresh
//! prior draws, which is exactly their posterior). Predictions are scored
//! against the realized network by ROC/AUC over all ordered off-diagonal
//! pairs, with AUC computed by the rank (Mann-Whitney) statistic so tied
//! scores are handled exactly.

use crate::error::{Error, Result};
use crate::network::{NetworkSeries, Sociomatrix};
use crate::sampler::{run_chain, ChainTrace, HyperConfig};

/// Posterior predictive link probabilities for the period after the fitted
/// window. Entries lie in [0,1]; the diagonal is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    n: usize,
    pub horizon: String,
    probs: Vec<f64>,
}

impl PredictionMatrix {
    pub fn new(n: usize, horizon: impl Into<String>, probs: Vec<f64>) -> Result<Self> {
        if n < 2 || probs.len() != n * n {
            return Err(Error::invalid("prediction matrix must be square, n >= 2"));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::invalid("link probabilities must lie in [0,1]"));
        }
        if (0..n).any(|i| probs[i * n + i] != 0.0) {
            return Err(Error::invalid("self links are excluded; diagonal must be zero"));
        }
        Ok(PredictionMatrix { n, horizon: horizon.into(), probs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.probs[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.probs
    }
}

/// Sample-averaged next-period link probabilities.
pub fn link_probabilities(trace: &ChainTrace) -> Result<PredictionMatrix> {
    if trace.samples.is_empty() {
        return Err(Error::invalid("trace holds no samples"));
    }
    let n = trace.n;
    let b = trace.samples.len() as f64;
    let mut probs = vec![0.0f64; n * n];
    for sample in &trace.samples {
        let ms = &sample.state;
        let last = *ms.zeta.last().expect("fitted path is non-empty");
        for (s, st) in ms.states.iter().enumerate() {
            let w = ms.pi[last][s];
            if w == 0.0 {
                continue;
            }
            let labels = st.partition.labels();
            let k = st.partition.k();
            for i in 0..n {
                let row = labels[i] * k;
                for j in 0..n {
                    if i != j {
                        probs[i * n + j] += w * st.theta.entries()[row + labels[j]];
                    }
                }
            }
        }
    }
    for p in &mut probs {
        // guard the upper end against accumulated rounding
        *p = (*p / b).min(1.0);
    }
    PredictionMatrix::new(n, "T+1", probs)
}

/// Hard prediction by strict thresholding.
pub fn threshold_predict(pm: &PredictionMatrix, f: f64) -> Result<Sociomatrix> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::invalid(format!("threshold {f} outside [0,1]")));
    }
    let n = pm.n();
    let mut y = Sociomatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if i != j && pm.get(i, j) > f {
                y.set(i, j, true);
            }
        }
    }
    Ok(y)
}

/// One operating point of the ROC curve: predict positive when the score
/// is at least `threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC curve over all distinct score cutoffs plus the area under it.
#[derive(Debug, Clone, PartialEq)]
pub struct RocResult {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// ROC/AUC for parallel score and truth slices. The curve runs from (0,0)
/// at an unattainable cutoff down through every distinct score to (1,1);
/// the AUC is the Mann-Whitney rank statistic, exact under ties.
pub fn score_auc(scores: &[f64], truth: &[bool]) -> Result<RocResult> {
    if scores.len() != truth.len() || scores.is_empty() {
        return Err(Error::invalid("scores and truth must be non-empty and equal length"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::invalid("scores must be finite"));
    }
    let pos = truth.iter().filter(|&&t| t).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::invalid(
            "truth is degenerate: need at least one positive and one negative",
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[i].partial_cmp(&scores[j]).expect("finite scores"));

    // average ranks over tie runs, then the rank-sum statistic
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0; // mean of ranks i+1 ..= j
        for &idx in &order[i..j] {
            if truth[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let auc =
        (rank_sum_pos - (pos * (pos + 1)) as f64 / 2.0) / (pos as f64 * neg as f64);

    let mut points = vec![RocPoint { threshold: f64::INFINITY, fpr: 0.0, tpr: 0.0 }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = order.len();
    while i > 0 {
        let mut j = i;
        while j > 0 && scores[order[j - 1]] == scores[order[i - 1]] {
            j -= 1;
        }
        for &idx in &order[j..i] {
            if truth[idx] {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        points.push(RocPoint {
            threshold: scores[order[i - 1]],
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
        i = j;
    }
    Ok(RocResult { points, auc })
}

/// ROC/AUC of a prediction matrix against the realized network, scoring
/// every ordered off-diagonal pair.
pub fn roc_auc(pm: &PredictionMatrix, truth: &Sociomatrix) -> Result<RocResult> {
    if truth.n() != pm.n() {
        return Err(Error::invalid("prediction and truth dimensions differ"));
    }
    let n = pm.n();
    let mut scores = Vec::with_capacity(n * (n - 1));
    let mut labels = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                scores.push(pm.get(i, j));
                labels.push(truth.get(i, j));
            }
        }
    }
    score_auc(&scores, &labels)
}

/// One step of the rolling backtest: which week was predicted, how many
/// weeks the chain saw, and either the score or the failure message.
#[derive(Debug, Clone, PartialEq)]
pub struct BacktestFold {
    pub target_week: usize,
    pub fit_weeks: usize,
    pub roc: Option<RocResult>,
    pub error: Option<String>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

/// One fold of the rolling backtest: fit on weeks 0..target, predict week
/// `target`, score against the realized network. The chain seed is derived
/// from (seed, target), so folds are independent of each other and of the
/// holdout window they belong to. Failures land in the `error` field rather
/// than propagating, so a backtest can report partial results.
pub fn backtest_fold(
    series: &NetworkSeries,
    cfg: &HyperConfig,
    target: usize,
    iters: u64,
    burnin: u64,
    thin: u64,
    seed: u64,
) -> BacktestFold {
    let fold_seed = splitmix64(seed ^ (target as u64));
    match series
        .prefix(target)
        .and_then(|prefix| run_chain(&prefix, cfg, iters, burnin, thin, fold_seed))
        .and_then(|trace| link_probabilities(&trace))
        .and_then(|pm| roc_auc(&pm, &series.weeks[target]))
    {
        Ok(roc) => BacktestFold { target_week: target, fit_weeks: target, roc: Some(roc), error: None },
        Err(e) => BacktestFold {
            target_week: target,
            fit_weeks: target,
            roc: None,
            error: Some(e.to_string()),
        },
    }
}

/// Refits the model on each growing prefix Y_1..Y_{t-1} for the last
/// `holdout` periods, predicts period t, and scores against the realized
/// network. Fold failures are recorded and the remaining folds continue.
pub fn rolling_backtest(
    series: &NetworkSeries,
    cfg: &HyperConfig,
    holdout: usize,
    iters: u64,
    burnin: u64,
    thin: u64,
    seed: u64,
) -> Result<Vec<BacktestFold>> {
    let t_len = series.t_len();
    if holdout == 0 || holdout >= t_len {
        return Err(Error::invalid(format!(
            "holdout {holdout} must lie in 1..{t_len} so every fit sees data"
        )));
    }
    Ok(((t_len - holdout)..t_len)
        .map(|target| backtest_fold(series, cfg, target, iters, burnin, thin, seed))
        .collect())
}
