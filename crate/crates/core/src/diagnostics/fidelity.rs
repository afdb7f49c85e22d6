//! Fidelity between ideal and imperfect evolutions and its decay fits.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{contract, domain, Error, Result};
use crate::floquet::floquet_spectrum;
use crate::imperfect::Imperfection;
use crate::register::{basis_state, dot, MapParams, StateVector};
use crate::sawtooth::{CircuitKick, IdealKick};

/// Transient kicks left out of every fit.
pub const FIT_SKIP: usize = 3;

/// Where both evolutions start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum InitialState {
    /// Unperturbed Floquet eigenstate, by index in ascending eigenphase order.
    Eigenstate(usize),
    /// Momentum eigenstate `|n>`.
    Momentum(i64),
}

impl fmt::Display for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialState::Eigenstate(i) => write!(f, "eig:{i}"),
            InitialState::Momentum(n) => write!(f, "mom:{n}"),
        }
    }
}

impl FromStr for InitialState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || domain(format!("initial state '{s}' is not eig:IDX or mom:N"));
        let (kind, value) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "eig" => value.trim().parse().map(InitialState::Eigenstate).map_err(|_| bad()),
            "mom" => value.trim().parse().map(InitialState::Momentum).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

impl InitialState {
    /// The initial momentum-basis state. Eigenstate starts diagonalize the
    /// unperturbed Floquet operator.
    pub fn resolve(&self, params: &MapParams) -> Result<StateVector> {
        match *self {
            InitialState::Momentum(n) => basis_state(params, n),
            InitialState::Eigenstate(i) => {
                if i >= params.dim() {
                    return Err(domain(format!("eigenstate index {i} outside 0..{}", params.dim())));
                }
                Ok(floquet_spectrum(params, None)?.eigenvector(i))
            }
        }
    }
}

/// `f(t) = |<psi0(t)|psi_eps(t)>|^2` for `t = 0..=t_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelitySeries {
    pub init: Option<InitialState>,
    pub f: Vec<f64>,
}

impl FidelitySeries {
    pub fn t_max(&self) -> usize {
        self.f.len() - 1
    }

    /// Pointwise mean of several series of equal length.
    pub fn average(series: &[FidelitySeries]) -> Result<FidelitySeries> {
        let first = series.first().ok_or_else(|| contract("no series to average"))?;
        if series.iter().any(|s| s.f.len() != first.f.len()) {
            return Err(contract("series lengths differ"));
        }
        let n = series.len() as f64;
        let f = (0..first.f.len())
            .map(|t| series.iter().map(|s| s.f[t]).sum::<f64>() / n)
            .collect();
        Ok(FidelitySeries { init: None, f })
    }

    /// Mean of the last quarter of the series, an estimate of the late-time
    /// plateau.
    pub fn plateau(&self) -> f64 {
        let tail = &self.f[self.f.len() - self.f.len().div_ceil(4)..];
        tail.iter().sum::<f64>() / tail.len() as f64
    }

    /// Least-squares fit of `ln f = a - t / t_f` for `t >= FIT_SKIP`, up to
    /// (not including) the first `t` with `f < 2 floor`.
    pub fn fit_exponential(&self, floor: f64) -> Result<ExponentialFit> {
        let end = (FIT_SKIP..self.f.len())
            .find(|&t| self.f[t] < 2.0 * floor)
            .unwrap_or(self.f.len());
        if end < FIT_SKIP + 3 {
            return Err(Error::NotFound(format!(
                "fewer than 3 points above twice the floor {floor:.3e} after t = {FIT_SKIP}"
            )));
        }
        let ts: Vec<f64> = (FIT_SKIP..end).map(|t| t as f64).collect();
        let ys: Vec<f64> = (FIT_SKIP..end).map(|t| self.f[t].ln()).collect();
        let (intercept, slope, residual) = linear_fit(&ts, &ys);
        Ok(ExponentialFit {
            rate: -slope,
            t_f: -1.0 / slope,
            intercept,
            window: (FIT_SKIP, end - 1),
            floor,
            residual,
        })
    }

    /// Compares `-ln f = t^2 / t_c^2` against `-ln f = t / t_f` (both through
    /// the origin) for `t = 1..=t_end`, where `t_end` is the last time with
    /// `f >= min_f` (capped by `max_t`).
    pub fn short_time_fit(&self, min_f: f64, max_t: usize) -> Result<ShortTimeFit> {
        let last = (1..self.f.len().min(max_t + 1))
            .take_while(|&t| self.f[t] >= min_f)
            .last()
            .ok_or_else(|| Error::NotFound("no short-time points above the cutoff".into()))?;
        if last < 3 {
            return Err(Error::NotFound(format!("short-time window ends at t = {last}")));
        }
        let pts: Vec<(f64, f64)> = (1..=last).map(|t| (t as f64, -self.f[t].ln())).collect();
        let through_origin = |power: i32| {
            let (num, den) = pts.iter().fold((0.0, 0.0), |(n, d), &(t, y)| {
                (n + y * t.powi(power), d + t.powi(2 * power))
            });
            let c = num / den;
            let res = pts.iter().map(|&(t, y)| (y - c * t.powi(power)).powi(2)).sum::<f64>();
            (c, res)
        };
        let (g, gaussian_residual) = through_origin(2);
        let (r, exponential_residual) = through_origin(1);
        Ok(ShortTimeFit {
            window: (1, last),
            gaussian_coefficient: g,
            gaussian_residual,
            exponential_rate: r,
            exponential_residual,
        })
    }
}

/// `(intercept, slope, sum of squared residuals)`.
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let res = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    (intercept, slope, res)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    pub t_f: f64,
    pub rate: f64,
    pub intercept: f64,
    /// First and last kick used.
    pub window: (usize, usize),
    pub floor: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShortTimeFit {
    pub window: (usize, usize),
    pub gaussian_coefficient: f64,
    pub gaussian_residual: f64,
    pub exponential_rate: f64,
    pub exponential_residual: f64,
}

impl ShortTimeFit {
    pub fn prefers_gaussian(&self) -> bool {
        self.gaussian_residual < self.exponential_residual
    }
}

/// Evolves `initial` with the exact kick and with the imperfect circuit and
/// records their fidelity after every kick.
pub fn fidelity_series(
    params: &MapParams,
    imperfection: Option<&Imperfection>,
    initial: &StateVector,
    t_max: usize,
) -> Result<FidelitySeries> {
    let ideal = IdealKick::new(params);
    let noisy = CircuitKick::new(params, imperfection.map(Imperfection::as_pair))?;
    let mut psi0 = initial.clone();
    let mut psi = initial.clone();
    let mut f = Vec::with_capacity(t_max + 1);
    f.push(1.0);
    for _ in 0..t_max {
        ideal.kick(&mut psi0)?;
        noisy.kick(&mut psi)?;
        f.push(dot(psi0.amplitudes(), psi.amplitudes()).norm_sqr());
    }
    Ok(FidelitySeries { init: None, f })
}
