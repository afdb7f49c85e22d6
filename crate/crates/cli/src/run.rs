//! Experiment drivers. Each produces the CSV text, a metadata document and
//! task records; [`run`] owns all file output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde_json::{json, Value};

use qsaw_core::diagnostics::{
    adaptive_threshold, entropy_scan, fidelity_series, husimi, ldos, InitialState, TheoryPrediction,
};
use qsaw_core::floquet::{floquet_spectrum, sweep_spectrum, SpectralSweep};
use qsaw_core::gates::build_schedule;
use qsaw_core::imperfect::Imperfection;
use qsaw_core::{MapParams, SeedPlan};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::CliError;
use crate::manifest::{GateCountRecord, RunManifest, RunStatus, TaskRecord};

/// Continuation steps per unit of the tracked strength range in the Husimi
/// experiment.
const HUSIMI_TRACK_STEPS: usize = 40;

/// Paths written by one run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub csv: PathBuf,
    pub meta: PathBuf,
    pub manifest: PathBuf,
    pub extra: Vec<PathBuf>,
    pub status: RunStatus,
}

struct Outcome {
    csv: String,
    meta: Value,
    extra: Vec<(String, String)>,
    tasks: Vec<TaskRecord>,
    partial: bool,
}

fn status_of(r: &anyhow::Result<()>) -> String {
    match r {
        Ok(()) => "ok".into(),
        Err(e) => format!("failed: {e:#}"),
    }
}

fn unique_stem(dir: &Path, experiment: Experiment) -> String {
    let ts = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ");
    let base = format!("{}-{ts}", experiment.name());
    let mut stem = base.clone();
    let mut k = 1;
    while dir.join(format!("{stem}.csv")).exists() {
        stem = format!("{base}-{k}");
        k += 1;
    }
    stem
}

fn configure_threads(jobs: Option<usize>) {
    if let Some(n) = jobs {
        // The global pool can only be set once per process; later calls keep it.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Runs an experiment and writes `<out>/<experiment>-<timestamp>.csv`,
/// `.meta.json`, `.manifest.json` and `<out>/manifest.json`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    cfg.validate()?;
    configure_threads(cfg.jobs);
    let started = chrono::Utc::now();
    let clock = Instant::now();
    let outcome = match cfg.experiment {
        Experiment::Spectrum => spectrum(cfg)?,
        Experiment::Husimi => husimi_run(cfg)?,
        Experiment::Entropy => entropy(cfg)?,
        Experiment::Threshold => threshold(cfg)?,
        Experiment::Fidelity => fidelity(cfg)?,
    };
    let dir = &cfg.out;
    let stem = unique_stem(dir, cfg.experiment);
    let csv = dir.join(format!("{stem}.csv"));
    let meta = dir.join(format!("{stem}.meta.json"));
    fs::write(&csv, &outcome.csv)?;
    fs::write(&meta, serde_json::to_string_pretty(&outcome.meta)?)?;
    let mut extra = Vec::new();
    for (suffix, text) in &outcome.extra {
        let path = dir.join(format!("{stem}.{suffix}"));
        fs::write(&path, text)?;
        extra.push(path);
    }
    let status = if outcome.partial {
        RunStatus::Partial
    } else {
        RunStatus::Ok
    };
    let mut outputs = vec![file_name(&csv), file_name(&meta)];
    outputs.extend(extra.iter().map(|p| file_name(p)));
    let manifest = RunManifest {
        tool: "qsaw".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        started_at: started.to_rfc3339(),
        wall_time_s: clock.elapsed().as_secs_f64(),
        gate_counts: gate_counts(cfg)?,
        tasks: outcome.tasks,
        outputs,
        status,
    };
    let text = serde_json::to_string_pretty(&manifest)?;
    let manifest_path = dir.join(format!("{stem}.manifest.json"));
    fs::write(&manifest_path, &text)?;
    fs::write(dir.join("manifest.json"), &text)?;
    Ok(RunReport {
        csv,
        meta,
        manifest: manifest_path,
        extra,
        status,
    })
}

/// Re-runs the experiment recorded in a manifest, optionally into another directory.
pub fn rerun(manifest: &Path, out: Option<PathBuf>) -> Result<RunReport, CliError> {
    let mut cfg = RunManifest::load(manifest)?.config;
    if let Some(dir) = out {
        cfg.out = dir;
    }
    run(&cfg)
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn gate_counts(cfg: &ExperimentConfig) -> Result<Vec<GateCountRecord>, CliError> {
    cfg.n_qubits
        .iter()
        .map(|&n| {
            Ok(GateCountRecord {
                n_qubits: n,
                counts: build_schedule(&cfg.params(n)?).counts(),
            })
        })
        .collect()
}

fn frozen_imperfection(cfg: &ExperimentConfig, params: &MapParams) -> Result<(Imperfection, u64), CliError> {
    let seed = SeedPlan::new(cfg.seed).task_seed(params.n_qubits(), 0, 0);
    Ok((Imperfection::sample(cfg.template()?, params.n_qubits(), seed)?, seed))
}

fn at(imp: &Imperfection, eps: f64) -> anyhow::Result<Option<Imperfection>> {
    Ok(if eps == 0.0 { None } else { Some(imp.at_epsilon(eps)?) })
}

fn grid_tasks(n_qubits: usize, grid: &[f64], seed: u64) -> Vec<TaskRecord> {
    grid.iter()
        .enumerate()
        .map(|(k, &epsilon)| TaskRecord {
            n_qubits,
            eps_index: k,
            epsilon,
            realization: 0,
            seed,
            status: "ok".into(),
        })
        .collect()
}

fn params_json(params: &MapParams) -> Value {
    json!({
        "n_qubits": params.n_qubits(),
        "dim": params.dim(),
        "chaos_K": params.chaos(),
        "period_T": params.period(),
        "strength_k": params.strength(),
    })
}

fn nearest_index(grid: &[f64], eps: f64) -> usize {
    grid.iter()
        .enumerate()
        .min_by(|a, b| (a.1 - eps).abs().total_cmp(&(b.1 - eps).abs()))
        .map_or(0, |(k, _)| k)
}

fn husimi_csv(grid: &qsaw_core::diagnostics::HusimiGrid) -> anyhow::Result<String> {
    let mut buf = Vec::new();
    grid.write_csv(&mut buf)?;
    Ok(String::from_utf8(buf)?)
}

fn spectrum(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let n = cfg.n_qubits[0];
    let params = cfg.params(n)?;
    let (imp, seed) = frozen_imperfection(cfg, &params)?;
    let grid = cfg.eps.values();
    let (sweep, spectra) = sweep_spectrum(&params, &imp, &grid)?;
    let mut buf = Vec::new();
    sweep.write_csv(&mut buf)?;

    let mut extra = Vec::new();
    let mut husimi_meta = Vec::new();
    for (i, &eps) in cfg.husimi_eps.iter().enumerate() {
        let k = nearest_index(&grid, eps);
        let idx = sweep.levels[k][cfg.level];
        let h = husimi(&spectra[k].eigenvector(idx), cfg.grid, cfg.grid, cfg.s)?;
        let name = format!("husimi{i}.csv");
        husimi_meta.push(json!({
            "requested_eps": eps,
            "eps": grid[k],
            "eigenvalue_index": idx,
            "eigenphase": sweep.phases[k][cfg.level],
            "symmetry_deviation": h.symmetry_deviation(),
            "integral": h.integral(),
            "file": name,
        }));
        extra.push((name, husimi_csv(&h).map_err(CliError::Run)?));
    }
    let flagged_steps: usize = (1..grid.len())
        .map(|k| (0..sweep.n_branches()).filter(|&b| sweep.flagged(k, b)).count())
        .sum();
    let meta = json!({
        "experiment": "spectrum",
        "params": params_json(&params),
        "imperfection": imp,
        "seed": seed,
        "level": cfg.level,
        "level_first_flag_eps": sweep.first_flag(cfg.level),
        "flagged_steps": flagged_steps,
        "max_residual": spectra.iter().map(|s| s.max_residual()).fold(0.0, f64::max),
        "max_orthonormality_defect": spectra.iter().map(|s| s.orthonormality_defect()).fold(0.0, f64::max),
        "husimi": husimi_meta,
        "gate_counts": build_schedule(&params).counts(),
    });
    Ok(Outcome {
        csv: String::from_utf8(buf).map_err(anyhow::Error::from)?,
        meta,
        extra,
        tasks: grid_tasks(n, &grid, seed),
        partial: false,
    })
}

/// Tracking grid: the requested strengths plus evenly spaced points between
/// the first and last of them.
fn tracking_grid(requested: &[f64]) -> Vec<f64> {
    let (lo, hi) = (requested[0], requested[requested.len() - 1]);
    let mut grid: Vec<f64> = requested.to_vec();
    if hi > lo {
        grid.extend((1..HUSIMI_TRACK_STEPS).map(|k| lo + (hi - lo) * k as f64 / HUSIMI_TRACK_STEPS as f64));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

fn husimi_run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let n = cfg.n_qubits[0];
    let params = cfg.params(n)?;
    let (imp, seed) = frozen_imperfection(cfg, &params)?;
    let requested = cfg.eps.values();
    let track = tracking_grid(&requested);
    let (sweep, spectra) = sweep_spectrum(&params, &imp, &track)?;

    let mut csv = String::from(
        "eps,level,eigenvalue_index,eigenphase,min_continuation_overlap,symmetry_deviation,integral,grid_file\n",
    );
    let mut extra = Vec::new();
    for (i, &eps) in requested.iter().enumerate() {
        let k = track
            .iter()
            .position(|&e| e == eps)
            .expect("requested strengths are on the tracking grid");
        let idx = sweep.levels[k][cfg.level];
        let h = husimi(&spectra[k].eigenvector(idx), cfg.grid, cfg.grid, cfg.s)?;
        let min_overlap = min_overlap_until(&sweep, cfg.level, k);
        let name = format!("grid{i}.csv");
        writeln!(
            csv,
            "{eps},{},{idx},{},{},{},{},{name}",
            cfg.level,
            sweep.phases[k][cfg.level],
            min_overlap.map_or(String::new(), |o| o.to_string()),
            h.symmetry_deviation(),
            h.integral(),
        )
        .expect("writing to a String");
        extra.push((name, husimi_csv(&h).map_err(CliError::Run)?));
    }
    let meta = json!({
        "experiment": "husimi",
        "params": params_json(&params),
        "imperfection": imp,
        "seed": seed,
        "level": cfg.level,
        "grid": [cfg.grid, cfg.grid],
        "s": cfg.s,
        "grid_layout": "rows are p cells from -pi upward, columns are theta cells from 0 upward, values at cell centers",
        "tracking_grid": track,
        "expected_integral": 2.0 * std::f64::consts::PI * params.period(),
    });
    Ok(Outcome {
        csv,
        meta,
        extra,
        tasks: grid_tasks(n, &requested, seed),
        partial: false,
    })
}

fn min_overlap_until(sweep: &SpectralSweep, branch: usize, k: usize) -> Option<f64> {
    (1..=k).filter_map(|j| sweep.overlaps[j][branch]).reduce(f64::min)
}

fn entropy(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let grid = cfg.eps.values();
    let template = cfg.template()?;
    let theory = TheoryPrediction {
        model: cfg.model_kind(),
        constants: cfg.constants(),
    };
    let plan = SeedPlan::new(cfg.seed);
    let mut csv = String::from("n_q,model,epsilon,mean_S,stderr_S,n_realizations,theory_S,theory_eps_chi,status\n");
    let mut tasks = Vec::new();
    let mut scans = Vec::new();
    let mut partial = false;
    for &n in &cfg.n_qubits {
        let params = cfg.params(n)?;
        let eps_chi = theory.threshold(n);
        match entropy_scan(&params, &template, &grid, cfg.realizations, plan) {
            Ok(scan) => {
                for (k, pt) in scan.points.iter().enumerate() {
                    let status = match &pt.failure {
                        None => "ok".to_string(),
                        Some(msg) => {
                            partial = true;
                            format!("failed: {msg}")
                        }
                    };
                    let theory_s = theory.entropy(pt.epsilon, n).map_or(String::new(), |s| s.to_string());
                    writeln!(
                        csv,
                        "{n},{},{},{},{},{},{theory_s},{eps_chi},{}",
                        theory.model,
                        pt.epsilon,
                        pt.mean_s,
                        pt.stderr_s,
                        pt.n_realizations,
                        csv_field(&status)
                    )
                    .expect("writing to a String");
                    tasks.extend(pt.seeds.iter().enumerate().map(|(r, &seed)| TaskRecord {
                        n_qubits: n,
                        eps_index: k,
                        epsilon: pt.epsilon,
                        realization: r,
                        seed,
                        status: status.clone(),
                    }));
                }
                scans.push(json!(scan));
            }
            Err(e) => {
                partial = true;
                let status = format!("failed: {e}");
                for (k, &eps) in grid.iter().enumerate() {
                    writeln!(csv, "{n},{},{eps},,,0,,{eps_chi},{}", theory.model, csv_field(&status))
                        .expect("writing to a String");
                    tasks.push(TaskRecord {
                        n_qubits: n,
                        eps_index: k,
                        epsilon: eps,
                        realization: 0,
                        seed: 0,
                        status: status.clone(),
                    });
                }
            }
        }
    }
    let meta = json!({
        "experiment": "entropy",
        "model": theory.model,
        "constants": theory.constants,
        "template": template,
        "realizations": cfg.realizations,
        "eps_grid": grid,
        "scans": scans,
    });
    Ok(Outcome {
        csv,
        meta,
        extra: Vec::new(),
        tasks,
        partial,
    })
}

fn threshold(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let template = cfg.template()?;
    let theory = TheoryPrediction {
        model: cfg.model_kind(),
        constants: cfg.constants(),
    };
    let plan = SeedPlan::new(cfg.seed);
    let mut csv = String::from(
        "n_q,model,eps_chi,bracket_lo,bracket_hi,S_lo,S_hi,theory_eps_chi,theory_eps_s1,n_points,status\n",
    );
    let mut tasks = Vec::new();
    let mut searches = Vec::new();
    let mut partial = false;
    for &n in &cfg.n_qubits {
        let params = cfg.params(n)?;
        let (t0, t1) = (theory.threshold(n), theory.threshold_s1(n));
        match adaptive_threshold(&params, &template, cfg.realizations, plan, None) {
            Ok(found) => {
                let t = found.threshold;
                writeln!(
                    csv,
                    "{n},{},{},{},{},{},{},{t0},{t1},{},ok",
                    theory.model,
                    t.epsilon,
                    t.bracket.0,
                    t.bracket.1,
                    t.entropy_bracket.0,
                    t.entropy_bracket.1,
                    found.scan.points.len()
                )
                .expect("writing to a String");
                for (k, pt) in found.scan.points.iter().enumerate() {
                    tasks.extend(pt.seeds.iter().enumerate().map(|(r, &seed)| TaskRecord {
                        n_qubits: n,
                        eps_index: k,
                        epsilon: pt.epsilon,
                        realization: r,
                        seed,
                        status: pt.failure.clone().map_or("ok".into(), |m| format!("failed: {m}")),
                    }));
                }
                searches.push(json!(found));
            }
            Err(e) => {
                partial = true;
                let status = format!("failed: {e}");
                writeln!(csv, "{n},{},,,,,,{t0},{t1},0,{}", theory.model, csv_field(&status))
                    .expect("writing to a String");
                tasks.push(TaskRecord {
                    n_qubits: n,
                    eps_index: 0,
                    epsilon: t0,
                    realization: 0,
                    seed: plan.task_seed(n, 0, 0),
                    status,
                });
            }
        }
    }
    let meta = json!({
        "experiment": "threshold",
        "model": theory.model,
        "constants": theory.constants,
        "template": template,
        "realizations": cfg.realizations,
        "bracketing": "start at theory_eps_chi, double or halve until S = 1 is enclosed, then 5 log-spaced interior points; S = 1 interpolated linearly in (log eps, S)",
        "searches": searches,
    });
    Ok(Outcome {
        csv,
        meta,
        extra: Vec::new(),
        tasks,
        partial,
    })
}

fn fidelity(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let n = cfg.n_qubits[0];
    let params = cfg.params(n)?;
    let init = cfg.initial_state()?;
    let (imp, seed) = frozen_imperfection(cfg, &params)?;
    let grid = cfg.eps.values();
    let unperturbed = match init {
        InitialState::Eigenstate(_) => Some(floquet_spectrum(&params, None)?),
        InitialState::Momentum(_) => None,
    };
    let psi0 = match (init, &unperturbed) {
        (InitialState::Eigenstate(i), Some(s)) => s.eigenvector(i),
        _ => init.resolve(&params)?,
    };

    let mut csv = String::from("eps,t,f\n");
    let mut fits = Vec::new();
    let mut tasks = grid_tasks(n, &grid, seed);
    let mut partial = false;
    for (k, &eps) in grid.iter().enumerate() {
        let mut entry = json!({ "eps": eps });
        let result: anyhow::Result<()> = (|| {
            let perturbed = at(&imp, eps)?;
            let series = fidelity_series(&params, perturbed.as_ref(), &psi0, cfg.t_max)?;
            for (t, f) in series.f.iter().enumerate() {
                writeln!(csv, "{eps},{t},{f}").expect("writing to a String");
            }
            let floor = series.plateau();
            entry["plateau"] = json!(floor);
            entry["exponential"] = match series.fit_exponential(floor) {
                Ok(fit) => json!({ "fit": fit, "t_f": fit.t_f, "gamma": fit.rate }),
                Err(e) => json!({ "error": e.to_string() }),
            };
            entry["short_time"] = match series.short_time_fit(0.5, cfg.t_max) {
                Ok(fit) => json!({ "fit": fit, "prefers_gaussian": fit.prefers_gaussian() }),
                Err(e) => json!({ "error": e.to_string() }),
            };
            if let (Some(spec0), Some(p)) = (&unperturbed, &perturbed) {
                let spec = floquet_spectrum(&params, Some(p))?;
                let best = (0..spec.dim())
                    .max_by(|&a, &b| {
                        overlap(spec.eigenvector_slice(a), psi0.amplitudes())
                            .total_cmp(&overlap(spec.eigenvector_slice(b), psi0.amplitudes()))
                    })
                    .expect("nonempty spectrum");
                let l = ldos(spec.eigenvector_slice(best), spec0)?;
                entry["ldos"] = json!({
                    "perturbed_index": best,
                    "gamma": l.gamma,
                    "center": l.center,
                    "perturbative": l.perturbative,
                });
            }
            Ok(())
        })();
        if result.is_err() {
            partial = true;
        }
        tasks[k].status = status_of(&result);
        entry["status"] = json!(tasks[k].status);
        fits.push(entry);
    }
    let meta = json!({
        "experiment": "fidelity",
        "params": params_json(&params),
        "init": init.to_string(),
        "imperfection": imp,
        "seed": seed,
        "t_max": cfg.t_max,
        "fit_rules": {
            "exponential": "ln f = a - t/t_f over t >= 3 while f >= 2 * plateau; plateau = mean of the last quarter",
            "short_time": "-ln f = c t^2 versus -ln f = r t through the origin, t from 1 while f >= 0.5",
        },
        "fits": fits,
        "gate_counts": build_schedule(&params).counts(),
    });
    Ok(Outcome {
        csv,
        meta,
        extra: Vec::new(),
        tasks,
        partial,
    })
}

fn overlap(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm_sqr()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
