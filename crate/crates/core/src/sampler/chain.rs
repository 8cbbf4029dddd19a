//! Posterior sweep and chain driver.
//!
//! One sweep updates, in order:
//!
//! 1. communities and interaction probabilities of every occupied state
//!    (collapsed label scan, then a conjugate redraw of theta),
//! 2. a fresh prior draw for every unoccupied state,
//! 3. the regime path by forward-filter backward-sampling,
//! 4. gamma by random walk against its collapsed target (pi integrated out),
//! 5. the transition rows from their Dirichlet full conditional,
//! 6. each occupied state's Beta hyperparameter pairs, diagonal then
//!    off-diagonal, by marginal random walks,
//! 7. each occupied state's Pitman-Yor pair the same way,
//! 8. the four rate hyperparameters from their Gamma full conditionals.
//!
//! Steps 4 and 5 together form a blocked draw of (gamma, pi). Steps 6 and 7
//! condition on counts only, never on theta, which is valid because theta is
//! not used again before its redraw in step 1 of the next sweep. The log
//! likelihood attached to each sweep reuses the emission table built for
//! step 3, which stays current because later steps change neither the path,
//! the communities, nor theta.
//!
//! Proposal scales adapt toward 35% acceptance during burn-in only, so the
//! retained samples come from a fixed transition kernel.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::blockmodel::{assortativity_index, transitivity_index};
use crate::error::{Error, Result};
use crate::math::{mean, variance};
use crate::network::NetworkSeries;

use super::gibbs::{collapsed_gibbs_xi, gibbs_update_pi, gibbs_update_rate_hypers};
use super::mh::{
    chol2, mh_update_beta_hypers, mh_update_gamma, update_py_params, MhFamily, MhScales,
};
use super::trace::{ChainTrace, Sample, ScalarRecord};
use super::{
    draw_prior_state, log_emission_table, BlockKind, HyperConfig, ModelState,
};

#[derive(Default)]
struct Acceptance {
    attempts: [u64; 4],
    accepts: [u64; 4],
}

impl Acceptance {
    fn rate(&self, family: MhFamily) -> f64 {
        let i = family as usize;
        if self.attempts[i] == 0 {
            0.0
        } else {
            self.accepts[i] as f64 / self.attempts[i] as f64
        }
    }
}

/// What one sweep did: the path log likelihood from the freshly built
/// emission table, the number of occupied states, and the per-family
/// Metropolis-Hastings attempt/accept counts.
#[derive(Debug, Clone, Copy)]
pub struct SweepOutcome {
    pub loglik: f64,
    pub s_star: usize,
    pub attempts: [u64; 4],
    pub accepts: [u64; 4],
}

/// One full posterior sweep, updating `ms` in place. Acceptance
/// probabilities feed back into `scales` only when `adapt` is true; with
/// adaptation off the sweep is a fixed Markov kernel with the posterior as
/// its invariant law.
pub fn gibbs_sweep<R: Rng + ?Sized>(
    ms: &mut ModelState,
    data: &NetworkSeries,
    cfg: &HyperConfig,
    scales: &mut MhScales,
    adapt: bool,
    rng: &mut R,
) -> Result<SweepOutcome> {
    let n = data.n();
    let mut out = SweepOutcome { loglik: 0.0, s_star: 0, attempts: [0; 4], accepts: [0; 4] };
    let record = |out: &mut SweepOutcome, family: MhFamily, ok: bool| {
        out.attempts[family as usize] += 1;
        out.accepts[family as usize] += u64::from(ok);
    };

    // 1-2: per-state parameters given the current path
    for s in ms.occupied() {
        collapsed_gibbs_xi(ms, s, data, rng)?;
    }
    let occupied = ms.occupied();
    for s in 0..ms.s_max() {
        if !occupied.contains(&s) {
            ms.states[s] = draw_prior_state(cfg, &ms.rates, n, rng)?;
        }
    }

    // 3: regime path; keep the emission table for the likelihood record
    let table = log_emission_table(ms, data)?;
    let s_count = ms.s_max();
    let log_init = vec![-(s_count as f64).ln(); s_count];
    let log_trans: Vec<Vec<f64>> = ms
        .pi
        .iter()
        .map(|row| row.iter().map(|p| p.ln()).collect())
        .collect();
    ms.zeta = crate::hmm::ffbs_sample(&log_init, &log_trans, &table, rng)?;
    out.loglik = ms.zeta.iter().enumerate().map(|(t, &z)| table[t][z]).sum();

    // 4-5: blocked draw of (gamma, pi)
    let kappa = cfg.tuning.kappa_gamma * scales.factor(MhFamily::Gamma);
    let (ok, p) = mh_update_gamma(ms, cfg, kappa, rng);
    record(&mut out, MhFamily::Gamma, ok);
    if adapt {
        scales.adapt(MhFamily::Gamma, p);
    }
    gibbs_update_pi(ms, rng);

    // 6-7: hyperparameter walks for states the new path occupies
    let occupied = ms.occupied();
    for &s in &occupied {
        for (kind, family, sigma) in [
            (BlockKind::Diagonal, MhFamily::AbDiag, &cfg.tuning.sigma_ab_diag),
            (BlockKind::OffDiagonal, MhFamily::AbOff, &cfg.tuning.sigma_ab_off),
        ] {
            let f = scales.factor(family);
            let base = chol2(sigma);
            let chol = [
                [base[0][0] * f, 0.0],
                [base[1][0] * f, base[1][1] * f],
            ];
            let (ok, p) = mh_update_beta_hypers(ms, s, kind, data, cfg, &chol, rng);
            record(&mut out, family, ok);
            if adapt {
                scales.adapt(family, p);
            }
        }
    }
    for &s in &occupied {
        let sigma = cfg.tuning.sigma_py * scales.factor(MhFamily::Py);
        let (ok, p) = update_py_params(ms, s, cfg, sigma, rng);
        record(&mut out, MhFamily::Py, ok);
        if adapt {
            scales.adapt(MhFamily::Py, p);
        }
    }

    // 8: rates
    gibbs_update_rate_hypers(ms, cfg, rng);

    out.s_star = occupied.len();
    Ok(out)
}

/// Runs one chain and returns every retained sample plus the per-sweep
/// monitoring scalars. Sweeps are numbered from 1; sweep number `it` is
/// retained when `it > burnin` and `it - burnin` is a multiple of `thin`.
///
/// The chain starts from a prior draw with one exception: the path is
/// scattered uniformly over all states. A path drawn from the prior walks
/// the near-deterministic rows of a Dirichlet(gamma/S) transition draw and
/// so visits only a couple of states; those few then adapt to a mixture of
/// regimes in the first sweep and fresh prior draws can never displace
/// them afterwards. The uniform scatter instead lets many states adapt to
/// single periods before the first consolidating path draw.
pub fn run_chain(
    data: &NetworkSeries,
    cfg: &HyperConfig,
    iters: u64,
    burnin: u64,
    thin: u64,
    seed: u64,
) -> Result<ChainTrace> {
    cfg.validate()?;
    if iters == 0 || thin == 0 {
        return Err(Error::invalid("need iters >= 1 and thin >= 1"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let n = data.n();
    let t_len = data.t_len();
    let mut ms = ModelState::draw_prior(cfg, n, t_len, &mut rng)?;
    for z in &mut ms.zeta {
        *z = rng.random_range(0..cfg.s_max);
    }

    let mut scales = MhScales::new();
    let mut acc = Acceptance::default();
    let mut samples = Vec::new();
    let mut scalars = Vec::with_capacity(iters as usize);

    for it in 1..=iters {
        let adapt = cfg.tuning.adapt && it <= burnin;
        let sweep = gibbs_sweep(&mut ms, data, cfg, &mut scales, adapt, &mut rng)?;
        let loglik = sweep.loglik;
        if !loglik.is_finite() {
            return Err(Error::numerical(format!(
                "log likelihood became {loglik} at sweep {it}"
            )));
        }
        for family in [MhFamily::Gamma, MhFamily::AbDiag, MhFamily::AbOff, MhFamily::Py] {
            acc.attempts[family as usize] += sweep.attempts[family as usize];
            acc.accepts[family as usize] += sweep.accepts[family as usize];
        }

        let upsilon: Vec<f64> = ms
            .zeta
            .iter()
            .map(|&z| assortativity_index(&ms.states[z].hyper))
            .collect();
        let chi: Vec<f64> = ms
            .zeta
            .iter()
            .map(|&z| transitivity_index(&ms.states[z].hyper, &ms.states[z].py).chi)
            .collect();
        scalars.push(ScalarRecord {
            iteration: it,
            loglik,
            s_star: sweep.s_star,
            acc_gamma: acc.rate(MhFamily::Gamma),
            acc_ab_diag: acc.rate(MhFamily::AbDiag),
            acc_ab_off: acc.rate(MhFamily::AbOff),
            acc_py: acc.rate(MhFamily::Py),
            upsilon_mean: mean(&upsilon),
            upsilon_var: variance(&upsilon),
            chi_mean: mean(&chi),
            chi_var: variance(&chi),
        });

        if it > burnin && (it - burnin) % thin == 0 {
            samples.push(Sample { iteration: it, loglik, state: ms.clone() });
        }
    }

    Ok(ChainTrace {
        n,
        t: t_len,
        s_max: cfg.s_max,
        burnin,
        thin,
        seed,
        samples,
        scalars,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::adjusted_rand_index;
    use crate::blockmodel::{InteractionMatrix, Partition};
    use crate::sampler::synth::{contiguous_zeta, equal_blocks, PlantedSpec, SyntheticSpec};
    use crate::sampler::generate_synthetic;

    fn planted_series(
        n: usize,
        zeta: Vec<usize>,
        partitions: Vec<Partition>,
        thetas: Vec<InteractionMatrix>,
        seed: u64,
    ) -> NetworkSeries {
        let spec = SyntheticSpec::Planted(PlantedSpec { n, zeta, partitions, thetas, pi: None });
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        generate_synthetic(&spec, &mut rng).unwrap().0
    }

    fn noise_series(n: usize, t: usize, p: f64, seed: u64) -> NetworkSeries {
        planted_series(
            n,
            vec![0; t],
            vec![Partition::one_block(n)],
            vec![InteractionMatrix::constant(1, p).unwrap()],
            seed,
        )
    }

    #[test]
    fn smoke_run_is_well_formed() {
        let data = noise_series(6, 4, 0.3, 1);
        let cfg = HyperConfig { s_max: 4, ..HyperConfig::default() };
        let trace = run_chain(&data, &cfg, 60, 20, 4, 7).unwrap();
        assert_eq!(trace.scalars.len(), 60);
        assert_eq!(trace.samples.len(), 10);
        assert_eq!(trace.samples[0].iteration, 24);
        assert_eq!(trace.samples.last().unwrap().iteration, 60);
        for sample in &trace.samples {
            assert!(sample.loglik.is_finite());
            let st = &sample.state;
            assert!(st.zeta.iter().all(|&z| z < 4));
            for row in &st.pi {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
            for sp in &st.states {
                // canonical labeling: first appearances in increasing order
                let relabeled = Partition::from_labels(sp.partition.labels()).unwrap();
                assert_eq!(relabeled.labels(), sp.partition.labels());
                assert_eq!(sp.theta.k(), sp.partition.k());
            }
        }
        for r in &trace.scalars {
            assert!(r.s_star >= 1 && r.s_star <= 4);
            assert!(r.loglik.is_finite());
            assert!(r.chi_mean > 0.0 && r.chi_mean < 1.0);
            assert!(r.upsilon_mean.is_finite());
        }
    }

    #[test]
    fn same_seed_reproduces_the_trace() {
        let data = noise_series(5, 3, 0.4, 2);
        let cfg = HyperConfig { s_max: 3, ..HyperConfig::default() };
        let a = run_chain(&data, &cfg, 30, 10, 2, 11).unwrap();
        let b = run_chain(&data, &cfg, 30, 10, 2, 11).unwrap();
        assert_eq!(a, b);
        let c = run_chain(&data, &cfg, 30, 10, 2, 12).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn strong_regime_shift_is_detected() {
        // Two planted regimes differing only in density, one change point.
        // Early sweeps can park single weeks in duplicated states (the
        // learned transition row keeps such modes sticky for a while), so
        // score the run the way the pipeline does: co-clustering of the
        // path samples, then a point partition.
        let n = 12;
        let zeta = contiguous_zeta(&[(0, 6), (1, 6)]);
        let data = planted_series(
            n,
            zeta.clone(),
            vec![Partition::one_block(n), Partition::one_block(n)],
            vec![
                InteractionMatrix::constant(1, 0.7).unwrap(),
                InteractionMatrix::constant(1, 0.1).unwrap(),
            ],
            5,
        );
        let cfg = HyperConfig { s_max: 4, ..HyperConfig::default() };
        let trace = run_chain(&data, &cfg, 1500, 750, 15, 3).unwrap();
        let paths: Vec<Vec<usize>> =
            trace.samples.iter().map(|s| s.state.zeta.clone()).collect();
        let cc = crate::analysis::coclustering(&paths).unwrap();
        let point = crate::analysis::point_partition(&cc);
        let ari = adjusted_rand_index(point.labels(), &zeta).unwrap();
        assert!(ari >= 0.9, "path point partition off, rand index {ari}");
        assert_eq!(crate::analysis::change_points(point.labels()), vec![6]);
    }

    #[test]
    fn planted_communities_are_recovered_by_full_sweep() {
        let n = 12;
        let partition = equal_blocks(n, 2);
        let theta = InteractionMatrix::new(2, vec![0.9, 0.05, 0.05, 0.9]).unwrap();
        let data = planted_series(n, vec![0; 6], vec![partition.clone()], vec![theta], 9);
        let cfg = HyperConfig { s_max: 3, ..HyperConfig::default() };
        let trace = run_chain(&data, &cfg, 150, 50, 5, 4).unwrap();
        let mut ari_sum = 0.0;
        for sample in &trace.samples {
            let z0 = sample.state.zeta[0];
            let labels = sample.state.states[z0].partition.labels();
            ari_sum += adjusted_rand_index(labels, partition.labels()).unwrap();
        }
        let mean_ari = ari_sum / trace.samples.len() as f64;
        assert!(mean_ari > 0.9, "mean rand index {mean_ari}");
    }

    #[test]
    fn invalid_run_settings_are_rejected() {
        let data = noise_series(4, 2, 0.2, 3);
        let cfg = HyperConfig::default();
        assert!(run_chain(&data, &cfg, 0, 0, 1, 0).is_err());
        assert!(run_chain(&data, &cfg, 10, 0, 0, 0).is_err());
    }
}
