//! Forward-filter backward-sampling for a finite hidden Markov chain.
//!
//! Given log initial weights, a log transition matrix, and a table of log
//! emission densities per period and state, draws one hidden path from its
//! exact joint conditional law. Filtering runs in log space with a
//! normalization after every step, so arbitrarily small emission densities
//! are handled as long as each log value is finite:
//!
//! ```text
//! a_1(s)  = log pi_1(s) + log f(y_1 | s)
//! a_t(s)  = log f(y_t | s) + logsumexp_r [ a_{t-1}(r) + log P(r, s) ]
//! z_T     ~ exp a_T(.)
//! z_t     ~ exp [ a_t(.) + log P(., z_{t+1}) ]
//! ```
//!
//! Transition and initial log weights may be -inf (structural zeros); log
//! emissions may not, because a -inf emission usually signals an upstream
//! bug rather than a genuinely impossible observation.

use rand::Rng;

use crate::error::{Error, Result};
use crate::math::log_sum_exp;

fn sample_from_log_weights<R: Rng + ?Sized>(w: &[f64], rng: &mut R) -> Result<usize> {
    let m = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return Err(Error::numerical("no state has positive posterior probability"));
    }
    let probs: Vec<f64> = w.iter().map(|&x| (x - m).exp()).collect();
    let total: f64 = probs.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (s, &p) in probs.iter().enumerate() {
        if u < p {
            return Ok(s);
        }
        u -= p;
    }
    Ok(probs.len() - 1)
}

/// Draws one hidden path of length `log_emit.len()`.
///
/// `log_init` has one entry per state, `log_trans[r][s]` is the log
/// probability of moving from r to s, and `log_emit[t][s]` is the log
/// emission density of period t under state s.
pub fn ffbs_sample<R: Rng + ?Sized>(
    log_init: &[f64],
    log_trans: &[Vec<f64>],
    log_emit: &[Vec<f64>],
    rng: &mut R,
) -> Result<Vec<usize>> {
    let s_count = log_init.len();
    let t_count = log_emit.len();
    if s_count == 0 || t_count == 0 {
        return Err(Error::invalid("need at least one state and one period"));
    }
    if log_trans.len() != s_count
        || log_trans.iter().any(|row| row.len() != s_count)
        || log_emit.iter().any(|row| row.len() != s_count)
    {
        return Err(Error::invalid("transition or emission table dimensions disagree"));
    }
    for (t, row) in log_emit.iter().enumerate() {
        if let Some(s) = row.iter().position(|x| !x.is_finite()) {
            return Err(Error::numerical(format!(
                "log emission at period {t}, state {s} is {}",
                row[s]
            )));
        }
    }
    for x in log_init.iter().chain(log_trans.iter().flatten()) {
        if x.is_nan() || *x == f64::INFINITY {
            return Err(Error::numerical("log weight is NaN or +inf"));
        }
    }

    let mut forward = vec![vec![0.0f64; s_count]; t_count];
    for s in 0..s_count {
        forward[0][s] = log_init[s] + log_emit[0][s];
    }
    normalize(&mut forward[0])?;
    for t in 1..t_count {
        let (head, tail) = forward.split_at_mut(t);
        let prev = &head[t - 1];
        let mut scratch = vec![0.0f64; s_count];
        for s in 0..s_count {
            for (r, x) in scratch.iter_mut().enumerate() {
                *x = prev[r] + log_trans[r][s];
            }
            tail[0][s] = log_emit[t][s] + log_sum_exp(&scratch);
        }
        normalize(&mut tail[0])?;
    }

    let mut path = vec![0usize; t_count];
    path[t_count - 1] = sample_from_log_weights(&forward[t_count - 1], rng)?;
    for t in (0..t_count - 1).rev() {
        let next = path[t + 1];
        let w: Vec<f64> = (0..s_count).map(|r| forward[t][r] + log_trans[r][next]).collect();
        path[t] = sample_from_log_weights(&w, rng)?;
    }
    Ok(path)
}

fn normalize(row: &mut [f64]) -> Result<()> {
    let lse = log_sum_exp(row);
    if !lse.is_finite() {
        return Err(Error::numerical("filtering step assigns zero mass to every state"));
    }
    for x in row.iter_mut() {
        *x -= lse;
    }
    Ok(())
}
