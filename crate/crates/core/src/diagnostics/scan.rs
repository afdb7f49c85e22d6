//! Disorder-averaged entropy scans and the `S = 1` threshold.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::overlap::overlap_matrix;
use super::theory::{ModelKind, TheoryPrediction};
use crate::error::{domain, Error, Result};
use crate::floquet::{floquet_spectrum, FloquetSpectrum};
use crate::imperfect::{Imperfection, ImperfectionSpec};
use crate::register::{MapParams, SeedPlan};

/// Disorder-averaged entropy at one imperfection strength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyPoint {
    pub epsilon: f64,
    /// Mean of `S_alpha` over all eigenstates and successful realizations.
    pub mean_s: f64,
    /// Standard error over realization means.
    pub stderr_s: f64,
    pub n_realizations: usize,
    pub n_qubits: usize,
    pub model: ModelKind,
    pub seeds: Vec<u64>,
    pub max_residual: f64,
    pub max_stochastic_defect: f64,
    pub failure: Option<String>,
}

impl EntropyPoint {
    pub fn is_usable(&self) -> bool {
        self.n_realizations > 0 && self.mean_s.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyScan {
    pub n_qubits: usize,
    pub model: ModelKind,
    pub points: Vec<EntropyPoint>,
}

impl EntropyScan {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.failure.is_some()).count()
    }

    fn sorted(&self) -> Vec<&EntropyPoint> {
        let mut pts: Vec<_> = self.points.iter().collect();
        pts.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
        pts
    }
}

pub(crate) fn model_of(spec: &ImperfectionSpec) -> ModelKind {
    if spec.is_single_impurity() {
        ModelKind::Single
    } else {
        ModelKind::Static
    }
}

struct RealizationResult {
    mean_s: f64,
    residual: f64,
    defect: f64,
}

/// Shared state for scans at fixed `n_q`: the unperturbed spectrum is
/// computed once.
struct ScanContext<'a> {
    params: &'a MapParams,
    unit: ImperfectionSpec,
    model: ModelKind,
    n_realizations: usize,
    plan: SeedPlan,
    unperturbed: Option<FloquetSpectrum>,
}

impl<'a> ScanContext<'a> {
    fn new(params: &'a MapParams, template: &ImperfectionSpec, n_realizations: usize, plan: SeedPlan) -> Result<Self> {
        if n_realizations == 0 {
            return Err(domain("need at least one realization"));
        }
        Ok(Self {
            params,
            unit: template.with_epsilon(1.0)?,
            model: model_of(template),
            n_realizations,
            plan,
            unperturbed: None,
        })
    }

    fn realization(&self, unperturbed: &FloquetSpectrum, eps: f64, seed: u64) -> Result<RealizationResult> {
        let imp = Imperfection::sample(self.unit, self.params.n_qubits(), seed)?.at_epsilon(eps)?;
        let spectrum = floquet_spectrum(self.params, Some(&imp))?;
        let overlaps = overlap_matrix(unperturbed, &spectrum)?;
        Ok(RealizationResult {
            mean_s: overlaps.mean_entropy()?,
            residual: spectrum.max_residual(),
            defect: overlaps.stochastic_defect(),
        })
    }

    fn evaluate(&mut self, eps: f64, eps_index: usize) -> Result<EntropyPoint> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(domain(format!(
                "imperfection strength {eps} is not a nonnegative number"
            )));
        }
        let n_q = self.params.n_qubits();
        let seeds: Vec<u64> = (0..self.n_realizations)
            .map(|r| self.plan.task_seed(n_q, eps_index, r))
            .collect();
        let mut point = EntropyPoint {
            epsilon: eps,
            mean_s: 0.0,
            stderr_s: 0.0,
            n_realizations: self.n_realizations,
            n_qubits: n_q,
            model: self.model,
            seeds: seeds.clone(),
            max_residual: 0.0,
            max_stochastic_defect: 0.0,
            failure: None,
        };
        if eps == 0.0 {
            // Unperturbed eigenstates are the reference basis itself.
            return Ok(point);
        }
        if self.unperturbed.is_none() {
            self.unperturbed = Some(floquet_spectrum(self.params, None)?);
        }
        let this = &*self;
        let unperturbed = this.unperturbed.as_ref().expect("computed above");
        let results: Vec<Result<RealizationResult>> = seeds
            .par_iter()
            .map(|&seed| this.realization(unperturbed, eps, seed))
            .collect();

        let mut means = Vec::with_capacity(results.len());
        let mut failures = Vec::new();
        for (r, res) in results.into_iter().enumerate() {
            match res {
                Ok(rr) => {
                    means.push(rr.mean_s);
                    point.max_residual = point.max_residual.max(rr.residual);
                    point.max_stochastic_defect = point.max_stochastic_defect.max(rr.defect);
                }
                Err(e) => failures.push(format!("realization {r}: {e}")),
            }
        }
        let (mean, stderr) = mean_and_stderr(&means);
        point.mean_s = mean;
        point.stderr_s = stderr;
        point.n_realizations = means.len();
        if !failures.is_empty() {
            point.failure = Some(failures.join("; "));
        }
        Ok(point)
    }
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Mean eigenstate entropy at each grid strength, averaged over eigenstates
/// and `n_realizations` disorder draws. The template fixes the model, `J/delta`
/// ratio and `tau_g`; its strength is replaced by each grid value.
///
/// A realization that fails (for example an uncertified eigendecomposition)
/// is left out and recorded in the point's `failure` field.
pub fn entropy_scan(
    params: &MapParams,
    template: &ImperfectionSpec,
    eps_grid: &[f64],
    n_realizations: usize,
    plan: SeedPlan,
) -> Result<EntropyScan> {
    if eps_grid.is_empty() {
        return Err(domain("empty epsilon grid"));
    }
    let mut ctx = ScanContext::new(params, template, n_realizations, plan)?;
    let points = eps_grid
        .iter()
        .enumerate()
        .map(|(k, &eps)| ctx.evaluate(eps, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(EntropyScan {
        n_qubits: params.n_qubits(),
        model: ctx.model,
        points,
    })
}

/// Strength at which the mean entropy crosses 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub epsilon: f64,
    pub bracket: (f64, f64),
    pub entropy_bracket: (f64, f64),
}

/// Interpolates `S = 1` linearly in `(log eps, S)` between the first pair of
/// adjacent usable points with `S_lo < 1 <= S_hi`.
pub fn find_threshold(scan: &EntropyScan) -> Result<Threshold> {
    let pts: Vec<_> = scan
        .sorted()
        .into_iter()
        .filter(|p| p.epsilon > 0.0 && p.is_usable())
        .collect();
    for w in pts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if lo.mean_s < 1.0 && hi.mean_s >= 1.0 {
            let bracket = (lo.epsilon, hi.epsilon);
            let entropy_bracket = (lo.mean_s, hi.mean_s);
            if hi.mean_s == 1.0 {
                return Ok(Threshold {
                    epsilon: hi.epsilon,
                    bracket,
                    entropy_bracket,
                });
            }
            let (x0, x1) = (lo.epsilon.ln(), hi.epsilon.ln());
            let frac = (1.0 - lo.mean_s) / (hi.mean_s - lo.mean_s);
            return Ok(Threshold {
                epsilon: (x0 + frac * (x1 - x0)).exp(),
                bracket,
                entropy_bracket,
            });
        }
    }
    let hint = match (pts.first(), pts.last()) {
        (None, _) | (_, None) => "the scan has no usable positive-strength points".to_string(),
        (Some(_), Some(last)) if last.mean_s < 1.0 => {
            format!(
                "S stays below 1 up to eps = {:.3e}; extend the grid upward",
                last.epsilon
            )
        }
        (Some(first), _) if first.mean_s >= 1.0 => {
            format!(
                "S is already >= 1 at eps = {:.3e}; extend the grid downward",
                first.epsilon
            )
        }
        _ => "S = 1 is not bracketed by adjacent points; refine the grid".to_string(),
    };
    Err(Error::NotFound(format!("threshold S = 1 not bracketed: {hint}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSearch {
    pub threshold: Threshold,
    /// Every evaluated point, in evaluation order.
    pub scan: EntropyScan,
}

/// Points evaluated while bracketing or refining before giving up.
const MAX_BRACKET_STEPS: usize = 40;
/// Log-spaced points placed inside the bracket once it is found.
pub const REFINE_POINTS: usize = 5;

/// Brackets `S = 1` starting from `start` (default: the predicted threshold),
/// doubling or halving the strength until the crossing is enclosed, then
/// refines with [`REFINE_POINTS`] log-spaced points and interpolates.
pub fn adaptive_threshold(
    params: &MapParams,
    template: &ImperfectionSpec,
    n_realizations: usize,
    plan: SeedPlan,
    start: Option<f64>,
) -> Result<ThresholdSearch> {
    let mut ctx = ScanContext::new(params, template, n_realizations, plan)?;
    let n_q = params.n_qubits();
    let start = start.unwrap_or_else(|| TheoryPrediction::new(ctx.model).threshold(n_q));
    if !(start > 0.0 && start.is_finite()) {
        return Err(domain(format!("start strength must be positive, got {start}")));
    }
    let mut points = Vec::new();
    let first = ctx.evaluate(start, 0)?;
    let upward = first.mean_s < 1.0;
    let mut last = first.clone();
    points.push(first);
    let mut bracketed = false;
    for _ in 0..MAX_BRACKET_STEPS {
        let eps = if upward { last.epsilon * 2.0 } else { last.epsilon / 2.0 };
        let p = ctx.evaluate(eps, points.len())?;
        let crossed = if upward { p.mean_s >= 1.0 } else { p.mean_s < 1.0 };
        last = p.clone();
        points.push(p);
        if crossed {
            bracketed = true;
            break;
        }
    }
    if !bracketed {
        return Err(Error::NotFound(format!(
            "no S = 1 crossing within {MAX_BRACKET_STEPS} doublings from eps = {start:.3e}"
        )));
    }
    let n = points.len();
    let (lo, hi) = if upward {
        (points[n - 2].epsilon, points[n - 1].epsilon)
    } else {
        (points[n - 1].epsilon, points[n - 2].epsilon)
    };
    for k in 1..=REFINE_POINTS {
        let eps = lo * (hi / lo).powf(k as f64 / (REFINE_POINTS + 1) as f64);
        let p = ctx.evaluate(eps, points.len())?;
        points.push(p);
    }
    let scan = EntropyScan {
        n_qubits: n_q,
        model: ctx.model,
        points,
    };
    Ok(ThresholdSearch {
        threshold: find_threshold(&scan)?,
        scan,
    })
}
