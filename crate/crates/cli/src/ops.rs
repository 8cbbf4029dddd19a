//! Command implementations.
//!
//! Every command reads its inputs, works through the library, writes its
//! outputs into the chosen directory, and finishes by writing a manifest.
//! Output files are deterministic functions of (inputs, config, seed); the
//! manifest alone carries timestamps and is excluded from that guarantee.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use blockhmm::analysis::{
    change_points, coclustering, geweke_z, hyper_summary, index_series, point_partition,
    trader_coclustering, HyperSummary, PriorSpec,
};
use blockhmm::baseline::{
    default_config_from_data, pairwise_incidence, run_gauss_hmm, BivariateSeries,
};
use blockhmm::blockmodel::{InteractionMatrix, Partition};
use blockhmm::config::RunConfig;
use blockhmm::error::{Error, Result};
use blockhmm::network::io::{
    read_csv_table, read_edge_csv, read_roster, read_series_auto, write_series_dir,
    write_summary_csv,
};
use blockhmm::network::{ingest, summary_series, NetworkSeries};
use blockhmm::predict::{backtest_fold, link_probabilities, threshold_predict, BacktestFold};
use blockhmm::sampler::trace::{read_trace_jsonl, write_diagnostics_csv, write_trace_jsonl};
use blockhmm::sampler::{generate_synthetic, AlphaPrior, PlantedSpec, SyntheticSpec};

use crate::manifest::ManifestBuilder;

/// Settings shared by every command.
pub struct Ctx {
    pub out: PathBuf,
    pub seed: u64,
    pub config: Option<PathBuf>,
    pub jobs: usize,
}

impl Ctx {
    fn prepare(&self) -> Result<()> {
        fs::create_dir_all(&self.out)?;
        Ok(())
    }

    fn load_config(&self) -> Result<RunConfig> {
        match &self.config {
            Some(path) => RunConfig::load(path),
            None => Ok(RunConfig::default()),
        }
    }

    fn out_file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Reads a series in either on-disk format, naming the path on IO errors.
fn load_series(path: &Path) -> Result<NetworkSeries> {
    read_series_auto(path).map_err(|e| match e {
        Error::Io(io) => Error::format(format!("{}: {io}", path.display())),
        other => other,
    })
}

/// Digest the series input, whether it is a packed file or a directory.
fn manifest_series_input(m: &mut ManifestBuilder, path: &Path) -> Result<()> {
    if path.is_dir() {
        m.input_dir(path)
    } else {
        m.input(path)
    }
}

pub fn cmd_ingest(edges: &Path, roster_path: &Path, ctx: &Ctx) -> Result<()> {
    ctx.prepare()?;
    let mut m = ManifestBuilder::start("ingest", ctx.seed);
    m.input(edges)?;
    m.input(roster_path)?;

    let records = read_edge_csv(edges)?;
    let roster = read_roster(roster_path)?;
    let report = ingest(&records, &roster)?;
    let series = &report.series;

    let series_dir = ctx.out_file("series");
    write_series_dir(series, &series_dir)?;
    m.output("series/roster.txt");
    m.output("series/periods.txt");
    for k in 0..series.t_len() {
        m.output(&format!("series/week_{k}.csv"));
    }

    let report_csv = format!(
        "metric,value\nweeks,{}\ntraders,{}\nrecords,{}\nskipped_off_roster,{}\n\
         dropped_self_loops,{}\n",
        series.t_len(),
        series.n(),
        records.len(),
        report.skipped_off_roster,
        report.dropped_self_loops,
    );
    write_atomic(&ctx.out_file("ingest_report.csv"), report_csv.as_bytes())?;
    m.output("ingest_report.csv");
    m.write(&ctx.out)?;

    println!(
        "ingested {} records into {} weeks over {} traders ({} off roster, {} self trades)",
        records.len(),
        series.t_len(),
        series.n(),
        report.skipped_off_roster,
        report.dropped_self_loops
    );
    Ok(())
}

pub fn cmd_stats(series_path: &Path, ctx: &Ctx) -> Result<()> {
    ctx.prepare()?;
    let mut m = ManifestBuilder::start("stats", ctx.seed);
    manifest_series_input(&mut m, series_path)?;

    let series = load_series(series_path)?;
    let sums = summary_series(&series);
    write_summary_csv(&series.periods, &sums, &ctx.out_file("summary.csv"))?;
    m.output("summary.csv");
    m.write(&ctx.out)?;

    println!("wrote summary.csv: {} weeks, {} traders", series.t_len(), series.n());
    Ok(())
}

pub fn cmd_fit(series_path: &Path, ctx: &Ctx) -> Result<()> {
    ctx.prepare()?;
    let mut m = ManifestBuilder::start("fit", ctx.seed);
    manifest_series_input(&mut m, series_path)?;
    if let Some(cfg_path) = &ctx.config {
        m.input(cfg_path)?;
    }

    let series = load_series(series_path)?;
    let cfg = ctx.load_config()?;
    m.config_snapshot(cfg.to_toml_string());

    let trace = blockhmm::sampler::run_chain(
        &series,
        &cfg.model,
        cfg.run.iters,
        cfg.run.burnin,
        cfg.run.thin,
        ctx.seed,
    )?;
    write_trace_jsonl(&trace, &ctx.out_file("trace.jsonl"))?;
    write_diagnostics_csv(&trace, &ctx.out_file("diagnostics.csv"))?;
    m.output("trace.jsonl");
    m.output("diagnostics.csv");
    m.write(&ctx.out)?;

    let last_s_star = trace.scalars.last().map_or(0, |r| r.s_star);
    println!(
        "stored {} samples from {} sweeps (final sweep used {} states)",
        trace.samples.len(),
        cfg.run.iters,
        last_s_star
    );
    Ok(())
}

pub fn cmd_fit_baseline(
    summary: &Path,
    x1: &str,
    x2: &str,
    states: usize,
    iters: Option<u64>,
    burnin: Option<u64>,
    ctx: &Ctx,
) -> Result<()> {
    ctx.prepare()?;
    let mut m = ManifestBuilder::start("fit-baseline", ctx.seed);
    m.input(summary)?;

    let (header, rows) = read_csv_table(summary)?;
    let col = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| {
            Error::format(format!(
                "column '{name}' not found; available: {}",
                header.join(", ")
            ))
        })
    };
    let (ip, i1, i2) = (col("period")?, col(x1)?, col(x2)?);

    let mut periods = Vec::with_capacity(rows.len());
    let mut xs = Vec::with_capacity(rows.len());
    for (r, row) in rows.iter().enumerate() {
        let cell = |i: usize, name: &str| {
            row[i].parse::<f64>().map_err(|_| {
                Error::format(format!("row {}: column {name} has non-numeric '{}'", r + 2, row[i]))
            })
        };
        periods.push(row[ip].clone());
        xs.push([cell(i1, x1)?, cell(i2, x2)?]);
    }
    let series = BivariateSeries::new(periods, xs)?;

    let mut cfg = default_config_from_data(&series)?;
    cfg.r = states;
    if let Some(v) = iters {
        cfg.iters = v;
    }
    if let Some(v) = burnin {
        cfg.burnin = v;
    }
    m.config_snapshot(format!(
        "# gaussian baseline\ncolumns = [\"{x1}\", \"{x2}\"]\nr = {}\ngamma_star = {}\n\
         iw_df = {}\niters = {}\nburnin = {}\n",
        cfg.r, cfg.gamma_star, cfg.iw_df, cfg.iters, cfg.burnin
    ));

    let trace = run_gauss_hmm(&series, &cfg, ctx.seed)?;
    let inc = pairwise_incidence(&trace)?;
    let mut buf = String::from("period");
    for p in series.periods() {
        buf.push(',');
        buf.push_str(p);
    }
    buf.push('\n');
    for t in 0..inc.dim() {
        buf.push_str(&series.periods()[t]);
        for u in 0..inc.dim() {
            buf.push_str(&format!(",{}", inc.get(t, u)));
        }
        buf.push('\n');
    }
    write_atomic(&ctx.out_file("incidence.csv"), buf.as_bytes())?;
    m.output("incidence.csv");
    m.write(&ctx.out)?;

    println!(
        "wrote incidence.csv ({0} x {0}) from columns {x1}, {x2}",
        inc.dim()
    );
    Ok(())
}

pub fn cmd_predict(
    trace_path: &Path,
    series_path: Option<&Path>,
    threshold: Option<f64>,
    ctx: &Ctx,
) -> Result<()> {
    ctx.prepare()?;
    let mut m = ManifestBuilder::start("predict", ctx.seed);
    m.input(trace_path)?;

    let trace = read_trace_jsonl(trace_path)?;
    let pm = link_probabilities(&trace)?;

    let ids: Vec<String> = match series_path {
        Some(p) => {
            manifest_series_input(&mut m, p)?;
            let series = load_series(p)?;
            if series.n() != pm.n() {
                return Err(Error::invalid(format!(
                    "series has {} traders but the trace was fitted to {}",
                    series.n(),
                    pm.n()
                )));
            }
            series.roster.ids().to_vec()
        }
        None => (0..pm.n()).map(|i| i.to_string()).collect(),
    };

    let matrix_csv = |cell: &dyn Fn(usize, usize) -> String| {
        let mut buf = String::from("trader");
        for id in &ids {
            buf.push(',');
            buf.push_str(id);
        }
        buf.push('\n');
        for i in 0..pm.n() {
            buf.push_str(&ids[i]);
            for j in 0..pm.n() {
                buf.push(',');
                buf.push_str(&cell(i, j));
            }
            buf.push('\n');
        }
        buf
    };

    let probs = matrix_csv(&|i, j| pm.get(i, j).to_string());
    write_atomic(&ctx.out_file("prediction.csv"), probs.as_bytes())?;
    m.output("prediction.csv");

    if let Some(f) = threshold {
        let y = threshold_predict(&pm, f)?;
        let hard = matrix_csv(&|i, j| u8::from(y.get(i, j)).to_string());
        write_atomic(&ctx.out_file("predicted.csv"), hard.as_bytes())?;
        m.output("predicted.csv");
    }
    m.write(&ctx.out)?;

    println!(
        "wrote prediction.csv for {} traders from {} samples",
        pm.n(),
        trace.samples.len()
    );
    Ok(())
}

/// Runs the rolling backtest; returns the number of failed folds so the
/// caller can map partial failure to its own exit code.
pub fn cmd_backtest(series_path: &Path, holdout: usize, ctx: &Ctx) -> Result<usize> {
    ctx.prepare()?;
    let mut m = ManifestBuilder::start("backtest", ctx.seed);
    manifest_series_input(&mut m, series_path)?;
    if let Some(cfg_path) = &ctx.config {
        m.input(cfg_path)?;
    }

    let series = load_series(series_path)?;
    let cfg = ctx.load_config()?;
    m.config_snapshot(cfg.to_toml_string());

    let t_len = series.t_len();
    if holdout == 0 || holdout >= t_len {
        return Err(Error::invalid(format!(
            "holdout {holdout} must lie in 1..{t_len} so every fit sees data"
        )));
    }
    let targets: Vec<usize> = ((t_len - holdout)..t_len).collect();
    let folds = run_folds(&series, &cfg, &targets, ctx);

    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["week_index", "period", "fit_weeks", "auc", "error"])
        .map_err(|e| Error::format(e.to_string()))?;
    for fold in &folds {
        let auc = fold.roc.as_ref().map(|r| r.auc.to_string()).unwrap_or_default();
        let err = fold.error.clone().unwrap_or_default();
        wtr.write_record([
            fold.target_week.to_string(),
            series.periods[fold.target_week].clone(),
            fold.fit_weeks.to_string(),
            auc,
            err,
        ])
        .map_err(|e| Error::format(e.to_string()))?;
    }
    let table = wtr.into_inner().map_err(|e| Error::format(e.to_string()))?;
    write_atomic(&ctx.out_file("auc_by_week.csv"), &table)?;
    m.output("auc_by_week.csv");

    for fold in &folds {
        let Some(roc) = &fold.roc else { continue };
        let mut buf = String::from("threshold,fpr,tpr\n");
        for p in &roc.points {
            buf.push_str(&format!("{},{},{}\n", p.threshold, p.fpr, p.tpr));
        }
        let name = format!("roc_{}.csv", series.periods[fold.target_week]);
        write_atomic(&ctx.out_file(&name), buf.as_bytes())?;
        m.output(&name);
    }
    m.write(&ctx.out)?;

    let aucs: Vec<f64> = folds.iter().filter_map(|f| f.roc.as_ref().map(|r| r.auc)).collect();
    let failed = folds.len() - aucs.len();
    if aucs.is_empty() {
        println!("all {} folds failed", folds.len());
    } else {
        let mean = aucs.iter().sum::<f64>() / aucs.len() as f64;
        println!("mean AUC {:.4} over {} of {} folds", mean, aucs.len(), folds.len());
    }
    for fold in folds.iter().filter(|f| f.error.is_some()) {
        eprintln!(
            "fold for week {} failed: {}",
            series.periods[fold.target_week],
            fold.error.as_deref().unwrap_or("")
        );
    }
    Ok(failed)
}

/// Folds are independent chains; run them on `ctx.jobs` workers. Results
/// are placed by fold index, so the output never depends on scheduling.
fn run_folds(
    series: &NetworkSeries,
    cfg: &RunConfig,
    targets: &[usize],
    ctx: &Ctx,
) -> Vec<BacktestFold> {
    let one = |&target: &usize| {
        backtest_fold(
            series,
            &cfg.model,
            target,
            cfg.run.iters,
            cfg.run.burnin,
            cfg.run.thin,
            ctx.seed,
        )
    };
    let jobs = ctx.jobs.min(targets.len()).max(1);
    if jobs == 1 {
        return targets.iter().map(one).collect();
    }
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Mutex;
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<BacktestFold>>> = Mutex::new(vec![None; targets.len()]);
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= targets.len() {
                    break;
                }
                let fold = one(&targets[i]);
                slots.lock().expect("no panics hold the lock")[i] = Some(fold);
            });
        }
    });
    slots
        .into_inner()
        .expect("workers finished")
        .into_iter()
        .map(|f| f.expect("every fold filled"))
        .collect()
}

#[derive(Serialize)]
struct SummaryReport<'a> {
    weeks: usize,
    samples: usize,
    s_max: usize,
    regime_count: usize,
    /// Point-partition regime label per week, 0-based.
    regime_labels: &'a [usize],
    /// Weeks (0-based) whose regime label differs from the week before.
    change_points: &'a [usize],
    periods: Option<&'a [String]>,
    geweke_loglik_z: Option<f64>,
    trader_week: Option<usize>,
    trader_labels: Option<Vec<usize>>,
    hypers: &'a [HyperSummary],
}

pub fn cmd_summarize(
    trace_path: &Path,
    series_path: Option<&Path>,
    week: Option<usize>,
    ctx: &Ctx,
) -> Result<()> {
    ctx.prepare()?;
    let mut m = ManifestBuilder::start("summarize", ctx.seed);
    m.input(trace_path)?;
    if let Some(cfg_path) = &ctx.config {
        m.input(cfg_path)?;
    }

    let trace = read_trace_jsonl(trace_path)?;
    let cfg = ctx.load_config()?;
    m.config_snapshot(cfg.to_toml_string());

    let periods: Option<Vec<String>> = match series_path {
        Some(p) => {
            manifest_series_input(&mut m, p)?;
            let series = load_series(p)?;
            if series.t_len() != trace.t {
                return Err(Error::invalid(format!(
                    "series has {} weeks but the trace was fitted to {}",
                    series.t_len(),
                    trace.t
                )));
            }
            Some(series.periods)
        }
        None => None,
    };

    // regime structure from the co-clustering of sampled paths
    let zeta_samples: Vec<Vec<usize>> =
        trace.samples.iter().map(|s| s.state.zeta.clone()).collect();
    let cc = coclustering(&zeta_samples)?;
    let part = point_partition(&cc);
    let labels = part.labels().to_vec();
    let cps = change_points(&labels);

    // hyperparameter table: global rows plus the Pitman-Yor pair at the
    // first week of every detected regime segment
    let alpha_prior = match cfg.model.alpha_prior {
        AlphaPrior::Uniform => PriorSpec::Uniform01,
        AlphaPrior::Beta { a, b } => PriorSpec::Beta { a, b },
    };
    let mut wanted: Vec<(String, PriorSpec)> = vec![
        ("gamma".into(), PriorSpec::Exponential { mean: cfg.model.gamma_prior_mean }),
        ("d_O".into(), PriorSpec::Exponential { mean: cfg.model.lambda_d }),
        ("e_O".into(), PriorSpec::Exponential { mean: cfg.model.lambda_e }),
        ("d_D".into(), PriorSpec::Exponential { mean: cfg.model.lambda_d }),
        ("e_D".into(), PriorSpec::Exponential { mean: cfg.model.lambda_e }),
    ];
    for start in std::iter::once(0).chain(cps.iter().copied()) {
        wanted.push((format!("alpha@{}", start + 1), alpha_prior.clone()));
        wanted.push((
            format!("beta@{}", start + 1),
            PriorSpec::Exponential { mean: cfg.model.beta_prior_mean },
        ));
    }
    let hypers: Vec<HyperSummary> = wanted
        .iter()
        .map(|(name, prior)| hyper_summary(&trace, name, prior))
        .collect::<Result<_>>()?;

    let mut table = String::from(
        "name,post_mean,post_lo,post_hi,prior_mean,prior_lo,prior_hi\n",
    );
    for h in &hypers {
        table.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            h.name, h.post_mean, h.post_lo, h.post_hi, h.prior_mean, h.prior_lo, h.prior_hi
        ));
    }
    write_atomic(&ctx.out_file("summary.csv"), table.as_bytes())?;
    m.output("summary.csv");

    // index time series with 95% bands
    let idx = index_series(&trace)?;
    let mut icsv =
        String::from("period,upsilon_mean,upsilon_lo,upsilon_hi,chi_mean,chi_lo,chi_hi\n");
    for t in 0..trace.t {
        let label = periods
            .as_ref()
            .map_or_else(|| t.to_string(), |p| p[t].clone());
        icsv.push_str(&format!(
            "{label},{},{},{},{},{},{}\n",
            idx.upsilon.mean[t],
            idx.upsilon.lo[t],
            idx.upsilon.hi[t],
            idx.chi.mean[t],
            idx.chi.lo[t],
            idx.chi.hi[t]
        ));
    }
    write_atomic(&ctx.out_file("indices.csv"), icsv.as_bytes())?;
    m.output("indices.csv");

    let geweke_loglik_z = if trace.samples.len() >= 100 {
        let logliks: Vec<f64> = trace.samples.iter().map(|s| s.loglik).collect();
        geweke_z(&logliks, 0.1, 0.5).ok()
    } else {
        None
    };

    // optional trader-level partition for one week (1-based flag)
    let (trader_week, trader_labels) = match week {
        Some(w) => {
            if w == 0 || w > trace.t {
                return Err(Error::invalid(format!(
                    "--week {w} outside 1..={}",
                    trace.t
                )));
            }
            let tc = trader_coclustering(&trace, w - 1)?;
            (Some(w), Some(point_partition(&tc).labels().to_vec()))
        }
        None => (None, None),
    };

    let report = SummaryReport {
        weeks: trace.t,
        samples: trace.samples.len(),
        s_max: trace.s_max,
        regime_count: part.k(),
        regime_labels: &labels,
        change_points: &cps,
        periods: periods.as_deref(),
        geweke_loglik_z,
        trader_week,
        trader_labels,
        hypers: &hypers,
    };
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    write_atomic(&ctx.out_file("report.json"), json.as_bytes())?;
    m.output("report.json");
    m.write(&ctx.out)?;

    println!(
        "point partition has {} regimes; change points at {:?}",
        part.k(),
        cps
    );
    Ok(())
}

pub fn cmd_simulate(
    traders: usize,
    weeks: usize,
    regimes: Option<usize>,
    communities: usize,
    theta_in: f64,
    theta_out: f64,
    ctx: &Ctx,
) -> Result<()> {
    ctx.prepare()?;
    let mut m = ManifestBuilder::start("simulate", ctx.seed);
    if let Some(cfg_path) = &ctx.config {
        m.input(cfg_path)?;
    }
    let cfg = ctx.load_config()?;

    let spec = match regimes {
        None => {
            m.config_snapshot(cfg.to_toml_string());
            SyntheticSpec::FromPrior { cfg: cfg.model, n: traders, t: weeks }
        }
        Some(s) => {
            if s == 0 || weeks < s {
                return Err(Error::invalid(format!(
                    "{s} regimes do not fit into {weeks} weeks"
                )));
            }
            if communities == 0 || communities > traders {
                return Err(Error::invalid("communities must lie in 1..=traders"));
            }
            m.config_snapshot(format!(
                "# planted regimes\nregimes = {s}\ncommunities = {communities}\n\
                 theta_in = {theta_in}\ntheta_out = {theta_out}\n"
            ));
            // contiguous equal segments, remainder to the last
            let seg = weeks / s;
            let mut zeta = Vec::with_capacity(weeks);
            for r in 0..s {
                let len = if r + 1 == s { weeks - seg * (s - 1) } else { seg };
                zeta.extend(std::iter::repeat_n(r, len));
            }
            // each regime rotates the block assignment so partitions differ;
            // rotations collide exactly when the total shift is a multiple of
            // the block width, so pick a step coprime with it
            fn gcd(a: usize, b: usize) -> usize {
                if b == 0 { a } else { gcd(b, a % b) }
            }
            let block = (traders / communities).max(1);
            let mut shift = (block / 2).max(1);
            while gcd(shift, block) != 1 {
                shift -= 1;
            }
            let partitions: Vec<Partition> = (0..s)
                .map(|r| {
                    let labels: Vec<usize> = (0..traders)
                        .map(|i| ((i + r * shift) % traders) * communities / traders)
                        .collect();
                    Partition::from_labels(&labels)
                })
                .collect::<Result<_>>()?;
            let k = communities;
            let entries: Vec<f64> = (0..k * k)
                .map(|e| if e / k == e % k { theta_in } else { theta_out })
                .collect();
            let theta = InteractionMatrix::new(k, entries)?;
            SyntheticSpec::Planted(PlantedSpec {
                n: traders,
                zeta,
                partitions,
                thetas: vec![theta; s],
                pi: None,
            })
        }
    };

    let mut rng = ChaCha20Rng::seed_from_u64(ctx.seed);
    let (series, truth) = generate_synthetic(&spec, &mut rng)?;

    let series_dir = ctx.out_file("series");
    write_series_dir(&series, &series_dir)?;
    m.output("series/roster.txt");
    m.output("series/periods.txt");
    for k in 0..series.t_len() {
        m.output(&format!("series/week_{k}.csv"));
    }
    let mut truth_json = serde_json::to_string_pretty(&truth).expect("truth serializes");
    truth_json.push('\n');
    write_atomic(&ctx.out_file("truth.json"), truth_json.as_bytes())?;
    m.output("truth.json");
    m.write(&ctx.out)?;

    match regimes {
        Some(s) => println!(
            "simulated {} weeks over {} traders with {s} planted regimes",
            weeks, traders
        ),
        None => println!(
            "simulated {} weeks over {} traders from the prior",
            weeks, traders
        ),
    }
    Ok(())
}
