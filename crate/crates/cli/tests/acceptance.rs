//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.
//!
//! Run with `cargo test --release -p qsaw-cli --test acceptance`.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{ensure, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qsaw_cli::config::EpsOverrides;
use qsaw_cli::{rerun, resolve, run, Experiment, Model, Overrides, Spacing};
use qsaw_core::diagnostics::{
    adaptive_threshold, eigenstate_entropy, entropy_scan, fidelity_series, husimi, overlap_matrix, parity_sectors,
    spacing_statistics, FidelitySeries, ModelKind, TheoryPrediction,
};
use qsaw_core::floquet::{floquet_spectrum, sweep_spectrum, CERTIFICATION_TOLERANCE};
use qsaw_core::imperfect::{Imperfection, ImperfectionSpec, ImpuritySite};
use qsaw_core::sawtooth::{circuit_kick, ideal_kick};
use qsaw_core::{basis_state, Basis, MapParams, SeedPlan, StateVector};

const SEED: u64 = 1;
const REALIZATIONS: usize = 10;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within_budget(clock: Instant, seconds: u64) -> (bool, String) {
    let t = clock.elapsed();
    (
        t <= Duration::from_secs(seconds),
        format!("{:.1} s (budget {seconds} s)", t.as_secs_f64()),
    )
}

fn static_template() -> ImperfectionSpec {
    ImperfectionSpec::static_chain(1.0, 0.0).expect("valid template")
}

fn single_template() -> ImperfectionSpec {
    ImperfectionSpec::single_impurity(1.0, ImpuritySite::Random).expect("valid template")
}

/// The frozen static realization used wherever one realization is needed.
fn frozen_static(n_qubits: usize) -> Result<Imperfection> {
    let seed = SeedPlan::new(SEED).task_seed(n_qubits, 0, 0);
    Ok(Imperfection::sample(static_template(), n_qubits, seed)?)
}

fn max_diff(a: &StateVector, b: &StateVector) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn oracle_equivalence() -> Result<Outcome> {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for n in 2..=8 {
        let p = MapParams::ergodic(n)?;
        for _ in 0..20 {
            let psi = StateVector::random(n, Basis::Momentum, &mut rng)?;
            worst = worst.max(max_diff(&ideal_kick(&psi, &p)?, &circuit_kick(&psi, &p, None)?));
        }
    }
    let (fast, time) = within_budget(clock, 10);
    Ok(outcome(
        worst < 1e-10 && fast,
        format!("max |gate - split| = {worst:.2e} (tol 1e-10), {time}"),
    ))
}

fn floquet_certification() -> Result<Outcome> {
    let clock = Instant::now();
    let (mut residual, mut ortho, mut stochastic): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for n in 2..=9 {
        let p = MapParams::ergodic(n)?;
        let imp = frozen_static(n)?;
        let spec0 = floquet_spectrum(&p, None)?;
        for eps in [0.0, 1e-4, 1e-3] {
            let spec = floquet_spectrum(&p, Some(&imp.at_epsilon(eps)?))?;
            residual = residual.max(spec.max_residual());
            ortho = ortho.max(spec.orthonormality_defect());
            stochastic = stochastic.max(overlap_matrix(&spec0, &spec)?.stochastic_defect());
        }
    }
    let tol = CERTIFICATION_TOLERANCE;
    let (fast, time) = within_budget(clock, 120);
    Ok(outcome(
        residual < tol && ortho < tol && stochastic < tol && fast,
        format!(
            "residual {residual:.2e}, orthonormality {ortho:.2e}, stochastic {stochastic:.2e} (tol {tol:e}), {time}"
        ),
    ))
}

fn entropy_endpoints() -> Result<Outcome> {
    let clock = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for n in 4..=9 {
        let p = MapParams::ergodic(n)?;
        let scan = entropy_scan(&p, &static_template(), &[0.0, 0.2], REALIZATIONS, SeedPlan::new(SEED))?;
        let (zero, sat) = (scan.points[0].mean_s, scan.points[1].mean_s);
        let ok = zero == 0.0 && (sat - n as f64).abs() <= 0.05 * n as f64;
        pass &= ok;
        parts.push(format!(
            "n_q={n}: S(0)={zero} S(0.2)={sat:.3} ({:.3} n_q)",
            sat / n as f64
        ));
    }
    let (fast, time) = within_budget(clock, 300);
    Ok(outcome(pass && fast, format!("{}; {time}", parts.join(", "))))
}

fn slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let b = sxy / sxx;
    (b, my - b * mx)
}

fn single_threshold_scaling() -> Result<Outcome> {
    let clock = Instant::now();
    let theory = TheoryPrediction::new(ModelKind::Single);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut parts = Vec::new();
    for n in 4..=10 {
        let p = MapParams::ergodic(n)?;
        let found = adaptive_threshold(&p, &single_template(), REALIZATIONS, SeedPlan::new(SEED), None)?;
        let eps = found.threshold.epsilon;
        xs.push(n as f64);
        ys.push(eps.log2());
        parts.push(format!("{n}:{eps:.4}"));
    }
    let (b, _) = slope(&xs, &ys);
    let eps10 = ys.last().map(|y| y.exp2()).context("no thresholds")?;
    let predicted = theory.threshold(10);
    let ratio = eps10 / predicted;
    let (fast, time) = within_budget(clock, 1800);
    Ok(outcome(
        (b + 0.5).abs() <= 0.1 && (0.5..=2.0).contains(&ratio) && fast,
        format!(
            "eps_chi [{}], slope {b:.3} (want -0.50 +- 0.10), eps_chi(10)/theory = {ratio:.3} (theory {predicted:.4}), {time}",
            parts.join(" ")
        ),
    ))
}

fn static_threshold() -> Result<Outcome> {
    let clock = Instant::now();
    let theory = TheoryPrediction::new(ModelKind::Static);
    let mut pass = true;
    let mut parts = Vec::new();
    let mut eps9 = f64::NAN;
    for n in 4..=9 {
        let p = MapParams::ergodic(n)?;
        let found = adaptive_threshold(&p, &static_template(), REALIZATIONS, SeedPlan::new(SEED), None)?;
        let eps = found.threshold.epsilon;
        let ratio = eps / theory.threshold(n);
        pass &= (0.5..=2.0).contains(&ratio);
        parts.push(format!("{n}:{eps:.3e} ({ratio:.2}x)"));
        eps9 = eps;
    }
    pass &= (1.8e-4..=7.3e-4).contains(&eps9);
    let (fast, time) = within_budget(clock, 2700);
    Ok(outcome(
        pass && fast,
        format!(
            "eps_chi [{}], eps_chi(9) = {eps9:.3e} (want [1.8e-4, 7.3e-4]), {time}",
            parts.join(" ")
        ),
    ))
}

fn entropy_collapse() -> Result<Outcome> {
    let clock = Instant::now();
    let grid: Vec<f64> = (0..9).map(|k| 0.04 * (k as f64 / 2.0).exp2()).collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for n in 8..=10 {
        let p = MapParams::ergodic(n)?;
        let scan = entropy_scan(&p, &single_template(), &grid, REALIZATIONS, SeedPlan::new(SEED))?;
        for pt in scan.points.iter().filter(|pt| pt.is_usable()) {
            if (1.0..=(n - 2) as f64).contains(&pt.mean_s) {
                xs.push((pt.epsilon * pt.epsilon * p.dim() as f64).log2());
                ys.push(pt.mean_s);
            }
        }
    }
    ensure!(xs.len() >= 3, "only {} points in the mixing regime", xs.len());
    let (b, _) = slope(&xs, &ys);
    let a = (ys.iter().zip(&xs).map(|(y, x)| y - x).sum::<f64>() / xs.len() as f64).exp2();
    Ok(outcome(
        (b - 1.0).abs() <= 0.15 && (0.37 / 2.0..=0.37 * 2.0).contains(&a),
        format!(
            "{} mixing points (n_q 8-10), slope {b:.3} (want 1.00 +- 0.15), prefactor {a:.3} (want within 2x of 0.37), {:.1} s",
            xs.len(),
            clock.elapsed().as_secs_f64()
        ),
    ))
}

/// Fidelity of eight evenly spaced unperturbed eigenstates, their average,
/// and the mean of `2^-S` of those states over the perturbed basis.
fn eigenstate_fidelity(
    p: &MapParams,
    imp: &Imperfection,
    t_max: usize,
) -> Result<(Vec<FidelitySeries>, FidelitySeries, f64)> {
    let spec0 = floquet_spectrum(p, None)?;
    let spec = floquet_spectrum(p, Some(imp))?;
    let m = overlap_matrix(&spec0, &spec)?;
    let picks: Vec<usize> = (0..8).map(|k| k * p.dim() / 8).collect();
    let mut runs = Vec::new();
    let mut floor = 0.0;
    for &alpha in &picks {
        runs.push(fidelity_series(p, Some(imp), &spec0.eigenvector(alpha), t_max)?);
        floor += (-eigenstate_entropy(&m.column(alpha))?).exp2() / picks.len() as f64;
    }
    let mean = FidelitySeries::average(&runs)?;
    Ok((runs, mean, floor))
}

fn fidelity_regimes() -> Result<Outcome> {
    let clock = Instant::now();
    let p = MapParams::ergodic(9)?;
    let imp = frozen_static(9)?;
    let weak = imp.at_epsilon(1e-4)?;
    let strong = imp.at_epsilon(3e-3)?;
    let mom = basis_state(&p, 0)?;

    let (runs_a, fa, _) = eigenstate_fidelity(&p, &weak, 1000)?;
    let min_a = fa.f.iter().copied().fold(1.0, f64::min);
    let above = runs_a.iter().filter(|r| r.f.iter().all(|&f| f > 0.99)).count();
    let a = min_a > 0.99;

    let (_, fb, predicted) = eigenstate_fidelity(&p, &strong, 1000)?;
    let plateau_b = fb.plateau();
    let fit_b = fb.fit_exponential(plateau_b)?;
    let b = (5.0..=9.5).contains(&fit_b.t_f) && (plateau_b / predicted).max(predicted / plateau_b) <= 3.0;

    let fc = fidelity_series(&p, Some(&weak), &mom, 1000)?;
    let short = fc.short_time_fit(0.5, 1000)?;
    let c = short.prefers_gaussian();

    let fd = fidelity_series(&p, Some(&strong), &mom, 1000)?;
    let plateau_d = fd.plateau();
    let fit_d = fd.fit_exponential(plateau_d)?;
    let inv_n = 1.0 / p.dim() as f64;
    let d = (plateau_d / inv_n).max(inv_n / plateau_d) <= 3.0;

    let (fast, time) = within_budget(clock, 600);
    Ok(outcome(
        a && b && c && d && fast,
        format!(
            "(a) min f = {min_a:.4}, {above}/{} states above 0.99 [{}]; (b) t_f = {:.2}, floor {plateau_b:.4} vs 2^-S {predicted:.4} [{}]; \
             (c) gaussian residual {:.3e} vs exponential {:.3e} [{}]; (d) t_f = {:.2}, floor {plateau_d:.2e} vs 1/N {inv_n:.2e} [{}]; {time}",
            runs_a.len(),
            verdict(a),
            fit_b.t_f,
            verdict(b),
            short.gaussian_residual,
            short.exponential_residual,
            verdict(c),
            fit_d.t_f,
            verdict(d),
        ),
    ))
}

fn fgr_scaling() -> Result<Outcome> {
    let p = MapParams::ergodic(9)?;
    let imp = frozen_static(9)?;
    let mut rates = Vec::new();
    for eps in [1.5e-3, 3e-3] {
        let (_, f, _) = eigenstate_fidelity(&p, &imp.at_epsilon(eps)?, 1000)?;
        rates.push(f.fit_exponential(f.plateau())?.rate);
    }
    let ratio = rates[1] / rates[0];
    Ok(outcome(
        (ratio - 4.0).abs() <= 1.0,
        format!(
            "rate(3e-3) / rate(1.5e-3) = {:.4} / {:.4} = {ratio:.3} (want 4 +- 25%)",
            rates[1], rates[0]
        ),
    ))
}

fn husimi_symmetry() -> Result<Outcome> {
    let p = MapParams::ergodic(9)?;
    let imp = frozen_static(9)?;
    let steps = 40;
    let grid: Vec<f64> = (0..=steps).map(|k| 1e-3 * k as f64 / steps as f64).collect();
    let (sweep, spectra) = sweep_spectrum(&p, &imp, &grid)?;
    let area = 2.0 * std::f64::consts::PI * p.period();
    let last = spectra.last().context("empty sweep")?;
    let (mut sym_ok, mut grows, mut integral_ok) = (true, true, true);
    let (mut worst0, mut least_eps): (f64, f64) = (0.0, f64::INFINITY);
    for k in 0..10 {
        let branch = k * p.dim() / 10;
        let h0 = husimi(&spectra[0].eigenvector(sweep.levels[0][branch]), 64, 64, 1.0)?;
        let h1 = husimi(&last.eigenvector(sweep.levels[steps][branch]), 64, 64, 1.0)?;
        let (d0, d1) = (h0.symmetry_deviation(), h1.symmetry_deviation());
        sym_ok &= d0 < 0.03;
        grows &= d1 > d0;
        integral_ok &= [&h0, &h1].iter().all(|h| (h.integral() / area - 1.0).abs() <= 0.02);
        worst0 = worst0.max(d0);
        least_eps = least_eps.min(d1);
    }
    Ok(outcome(
        sym_ok && grows && integral_ok,
        format!(
            "max deviation at eps=0 {worst0:.2e} (tol 3%), min deviation at 1e-3 {least_eps:.3}, larger for every level: {grows}, integrals within 2%: {integral_ok}"
        ),
    ))
}

fn spectral_statistics() -> Result<Outcome> {
    let spec = floquet_spectrum(&MapParams::ergodic(10)?, None)?;
    let (even, odd) = parity_sectors(&spec)?;
    let st = spacing_statistics(&[&even, &odd])?;
    Ok(outcome(
        st.closer_to_wigner(),
        format!(
            "Kolmogorov distance to Wigner {:.3}, to Poisson {:.3} ({} spacings, parity sectors {}+{})",
            st.ks_wigner,
            st.ks_poisson,
            st.spacings.len(),
            even.len(),
            odd.len()
        ),
    ))
}

fn reproducibility() -> Result<Outcome> {
    let tmp = tempfile::tempdir()?;
    let mut checked = 0;
    for experiment in [
        Experiment::Spectrum,
        Experiment::Husimi,
        Experiment::Entropy,
        Experiment::Threshold,
        Experiment::Fidelity,
    ] {
        let first = tmp.path().join(format!("{}-a", experiment.name()));
        let second = tmp.path().join(format!("{}-b", experiment.name()));
        let mut layer = Overrides {
            n_qubits: Some(vec![5]),
            realizations: Some(3),
            t_max: Some(100),
            grid: Some(16),
            out: Some(first.clone()),
            ..Overrides::default()
        };
        match experiment {
            Experiment::Spectrum => {
                layer.eps = Some(EpsOverrides {
                    min: Some(0.0),
                    max: Some(0.05),
                    count: Some(6),
                    spacing: Some(Spacing::Linear),
                    ..EpsOverrides::default()
                })
            }
            Experiment::Husimi => layer.husimi_eps = Some(vec![0.0, 0.05]),
            Experiment::Entropy => {
                layer.n_qubits = Some(vec![4, 5]);
                layer.model = Some(Model::Single);
                layer.eps = Some(EpsOverrides {
                    min: Some(0.01),
                    max: Some(1.0),
                    count: Some(5),
                    zero: Some(true),
                    ..EpsOverrides::default()
                });
            }
            Experiment::Threshold => layer.n_qubits = Some(vec![4, 5]),
            Experiment::Fidelity => {
                layer.eps = Some(EpsOverrides {
                    list: Some(vec![1e-3, 3e-2]),
                    ..EpsOverrides::default()
                })
            }
        }
        fs::create_dir_all(&first)?;
        fs::create_dir_all(&second)?;
        let cfg = resolve(experiment, &[&layer])?;
        let original = run(&cfg)?;
        let again = rerun(&original.manifest, Some(second.clone()))?;
        let mut pairs = vec![(original.csv.clone(), again.csv.clone())];
        pairs.extend(original.extra.iter().cloned().zip(again.extra.iter().cloned()));
        ensure!(
            original.extra.len() == again.extra.len(),
            "{}: extra outputs differ",
            experiment.name()
        );
        for (a, b) in pairs {
            ensure!(same_bytes(&a, &b)?, "{} differs from {}", a.display(), b.display());
            checked += 1;
        }
    }
    Ok(outcome(
        true,
        format!("{checked} output files reproduced bit-identically across 5 experiments"),
    ))
}

fn same_bytes(a: &Path, b: &Path) -> Result<bool> {
    Ok(fs::read(a)? == fs::read(b)?)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Outcome>); 11] = [
        ("oracle equivalence", oracle_equivalence),
        ("Floquet certification", floquet_certification),
        ("entropy endpoints", entropy_endpoints),
        ("single-impurity threshold scaling", single_threshold_scaling),
        ("static threshold", static_threshold),
        ("entropy-theory collapse", entropy_collapse),
        ("fidelity regimes", fidelity_regimes),
        ("FGR rate scaling", fgr_scaling),
        ("Husimi symmetry", husimi_symmetry),
        ("spectral statistics", spectral_statistics),
        ("reproducibility", reproducibility),
    ];
    let only: Vec<usize> = std::env::var("QSAW_CRITERIA")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect())
        .unwrap_or_default();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let result = check().unwrap_or_else(|e| outcome(false, format!("error: {e:#}")));
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {tag} {name}: {}", result.detail);
        failed += usize::from(!result.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
