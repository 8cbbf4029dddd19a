//! Random draws for gamma, beta, Dirichlet and normal variates.
//!
//! Shape parameters well below one arise routinely here (Dirichlet
//! concentrations gamma/S with S = 30), where naive Gamma draws underflow to
//! zero and take whole Dirichlet rows with them. Draws therefore go through
//! the log of the variate where it matters, using the shape-boost identity
//! G_a = G_{a+1} U^{1/a}.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::math::log_add_exp;

/// Uniform draw strictly inside (0,1).
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Exponential draw parameterized by its mean.
pub fn exp_mean_draw<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    assert!(mean > 0.0 && mean.is_finite());
    (-mean * open_unit(rng).ln()).max(f64::MIN_POSITIVE)
}

/// Index draw from an unnormalized nonnegative weight vector.
pub fn categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    debug_assert!(total > 0.0 && total.is_finite());
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

/// Log of a Gamma(shape, rate 1) draw; valid for any shape > 0.
pub fn ln_gamma_draw<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    assert!(shape > 0.0 && shape.is_finite(), "gamma shape must be positive");
    if shape >= 1.0 {
        let g: f64 = Gamma::new(shape, 1.0).unwrap().sample(rng);
        g.max(f64::MIN_POSITIVE).ln()
    } else {
        let g: f64 = Gamma::new(shape + 1.0, 1.0).unwrap().sample(rng);
        g.max(f64::MIN_POSITIVE).ln() + open_unit(rng).ln() / shape
    }
}

/// Gamma(shape, rate) draw, floored away from zero.
pub fn gamma_draw<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    assert!(rate > 0.0 && rate.is_finite(), "gamma rate must be positive");
    ((ln_gamma_draw(shape, rng) - rate.ln()).exp()).max(f64::MIN_POSITIVE)
}

/// Beta(a, b) draw via two log-space Gamma draws, clamped inside (0,1).
pub fn beta_draw<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let la = ln_gamma_draw(a, rng);
    let lb = ln_gamma_draw(b, rng);
    let x = (la - log_add_exp(la, lb)).exp();
    x.clamp(f64::MIN_POSITIVE, 1.0 - 1e-16)
}

/// Normalized weights of a Dirichlet(shapes) draw. Computed from log-space
/// Gamma draws so that tiny concentrations cannot underflow the whole vector;
/// individual entries may still round to zero relative to the largest.
pub fn dirichlet_draw<R: Rng + ?Sized>(shapes: &[f64], rng: &mut R) -> Vec<f64> {
    assert!(!shapes.is_empty());
    let lg: Vec<f64> = shapes.iter().map(|&a| ln_gamma_draw(a, rng)).collect();
    let m = lg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = lg.iter().map(|&l| (l - m).exp()).collect();
    let s: f64 = w.iter().sum();
    for x in &mut w {
        *x /= s;
    }
    w
}

pub fn normal_draw<R: Rng + ?Sized>(mean: f64, sd: f64, rng: &mut R) -> f64 {
    Normal::new(mean, sd).unwrap().sample(rng)
}
