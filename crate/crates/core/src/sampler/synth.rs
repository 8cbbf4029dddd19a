//! Synthetic series generation, either from the full prior or from planted
//! structure with known regimes, communities and interaction probabilities.

use rand::Rng;

use crate::blockmodel::{generate_network, BetaHyper, InteractionMatrix, Partition, PyParams};
use crate::error::{Error, Result};
use crate::network::{NetworkSeries, Roster};

use super::{HyperConfig, ModelState, RateHypers, StateParams};

/// The generating state is returned alongside the data so recovery can be
/// scored. For planted data the hyperparameters are placeholders; only the
/// path, partitions, interaction matrices and transition rows are meaningful.
pub type GroundTruth = ModelState;

/// Fully specified generating process: one partition and interaction matrix
/// per regime, a regime path into them, and optionally the transition rows
/// (defaults to uniform).
#[derive(Debug, Clone)]
pub struct PlantedSpec {
    pub n: usize,
    pub zeta: Vec<usize>,
    pub partitions: Vec<Partition>,
    pub thetas: Vec<InteractionMatrix>,
    pub pi: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub enum SyntheticSpec {
    /// Ancestral draw of every unknown, then of the networks.
    FromPrior { cfg: HyperConfig, n: usize, t: usize },
    Planted(PlantedSpec),
}

/// Regime path made of contiguous segments, e.g. [(0,3),(1,2)] -> 0,0,0,1,1.
pub fn contiguous_zeta(segments: &[(usize, usize)]) -> Vec<usize> {
    let mut zeta = Vec::new();
    for &(state, len) in segments {
        zeta.extend(std::iter::repeat_n(state, len));
    }
    zeta
}

/// Sticky uniform path: stay with probability `self_prob`, otherwise jump
/// to one of the other states uniformly.
pub fn markov_zeta<R: Rng + ?Sized>(
    t: usize,
    s: usize,
    self_prob: f64,
    rng: &mut R,
) -> Vec<usize> {
    assert!(s >= 2 && (0.0..=1.0).contains(&self_prob));
    let mut zeta = Vec::with_capacity(t);
    let mut cur = rng.random_range(0..s);
    for _ in 0..t {
        zeta.push(cur);
        if rng.random::<f64>() >= self_prob {
            let step = rng.random_range(1..s);
            cur = (cur + step) % s;
        }
    }
    zeta
}

/// Contiguous near-equal communities, sizes differing by at most one.
pub fn equal_blocks(n: usize, k: usize) -> Partition {
    let labels: Vec<usize> = (0..n).map(|i| i * k / n).collect();
    Partition::from_labels(&labels).expect("contiguous labels are canonical")
}

fn planted_state(partition: Partition, theta: InteractionMatrix) -> StateParams {
    StateParams {
        py: PyParams::new(0.0, 1.0).expect("placeholder"),
        hyper: BetaHyper::new(1.0, 1.0, 1.0, 1.0).expect("placeholder"),
        partition,
        theta,
    }
}

fn planted_model(spec: &PlantedSpec) -> Result<ModelState> {
    let s = spec.partitions.len();
    if s == 0 || spec.zeta.is_empty() {
        return Err(Error::invalid("planted spec needs at least one state and one period"));
    }
    if spec.thetas.len() != s {
        return Err(Error::invalid("one interaction matrix per planted state"));
    }
    if let Some(&z) = spec.zeta.iter().find(|&&z| z >= s) {
        return Err(Error::invalid(format!("path visits state {z} but only {s} are planted")));
    }
    for (p, th) in spec.partitions.iter().zip(&spec.thetas) {
        if p.n() != spec.n {
            return Err(Error::invalid("planted partition size does not match n"));
        }
        if th.k() < p.k() {
            return Err(Error::invalid("interaction matrix smaller than partition"));
        }
    }
    let pi = match &spec.pi {
        Some(rows) => {
            if rows.len() != s || rows.iter().any(|r| r.len() != s) {
                return Err(Error::invalid("transition matrix must be S x S"));
            }
            for row in rows {
                let sum: f64 = row.iter().sum();
                if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::invalid("transition rows must be distributions"));
                }
            }
            rows.clone()
        }
        None => vec![vec![1.0 / s as f64; s]; s],
    };
    let states = spec
        .partitions
        .iter()
        .zip(&spec.thetas)
        .map(|(p, th)| planted_state(p.clone(), th.clone()))
        .collect();
    Ok(ModelState {
        zeta: spec.zeta.clone(),
        states,
        pi,
        gamma: 1.0,
        rates: RateHypers { d_o: 1.0, e_o: 1.0, d_d: 1.0, e_d: 1.0 },
    })
}

fn default_roster(n: usize) -> Roster {
    Roster::new((0..n).map(|i| format!("trader_{i:03}")).collect()).expect("generated names")
}

/// Draws a series of weekly networks and returns it with its ground truth.
pub fn generate_synthetic<R: Rng + ?Sized>(
    spec: &SyntheticSpec,
    rng: &mut R,
) -> Result<(NetworkSeries, GroundTruth)> {
    let (truth, n) = match spec {
        SyntheticSpec::FromPrior { cfg, n, t } => (ModelState::draw_prior(cfg, *n, *t, rng)?, *n),
        SyntheticSpec::Planted(p) => (planted_model(p)?, p.n),
    };
    let weeks = truth
        .zeta
        .iter()
        .map(|&z| {
            let st = &truth.states[z];
            generate_network(&st.partition, &st.theta, rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let periods = (0..weeks.len()).map(|t| format!("w{:04}", t + 1)).collect();
    let series = NetworkSeries::new(default_roster(n), periods, weeks)?;
    Ok((series, truth))
}
