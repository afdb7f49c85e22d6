//! Husimi phase-space densities on the torus.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{contract, domain, Result};
use crate::register::{Basis, StateVector};

/// Image periods kept on each side in the periodized coherent state.
pub const IMAGES: i64 = 3;
/// Default grid resolution along each axis.
pub const DEFAULT_GRID: usize = 64;

/// `H(theta, p) = |<coh(theta, p)|psi>|^2` sampled at cell centers,
/// `theta in [0, 2 pi)`, `p in [-pi, pi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HusimiGrid {
    pub n_theta: usize,
    pub n_p: usize,
    /// Uncertainty ratio `s = dp / dtheta`.
    pub s: f64,
    /// Map period `T = 2 pi / N`.
    pub period: f64,
    /// Row-major, one row per `p` cell: `values[k * n_theta + i]`.
    pub values: Vec<f64>,
}

impl HusimiGrid {
    pub fn theta(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * 2.0 * PI / self.n_theta as f64
    }

    pub fn p(&self, k: usize) -> f64 {
        -PI + (k as f64 + 0.5) * 2.0 * PI / self.n_p as f64
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[k * self.n_theta + i]
    }

    pub fn cell_area(&self) -> f64 {
        4.0 * PI * PI / (self.n_theta * self.n_p) as f64
    }

    /// `sum H dtheta dp`, which equals `2 pi T` for a normalized state.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_area()
    }

    /// `(i, k)` of the largest value.
    pub fn argmax(&self) -> (usize, usize) {
        let idx = self
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map_or(0, |(i, _)| i);
        (idx % self.n_theta, idx / self.n_theta)
    }

    /// Cell containing the phase-space point, with `theta` taken mod `2 pi`
    /// and `p` mod `2 pi` into `[-pi, pi)`.
    pub fn cell_of(&self, theta: f64, p: f64) -> (usize, usize) {
        let t = theta.rem_euclid(2.0 * PI);
        let q = (p + PI).rem_euclid(2.0 * PI);
        let i = ((t / (2.0 * PI) * self.n_theta as f64) as usize).min(self.n_theta - 1);
        let k = ((q / (2.0 * PI) * self.n_p as f64) as usize).min(self.n_p - 1);
        (i, k)
    }

    /// `sum |H - H'| / (2 sum H)` where `H'(theta, p) = H(2 pi - theta, -p)`;
    /// 0 for a parity-symmetric density, at most 1.
    pub fn symmetry_deviation(&self) -> f64 {
        let mut diff = 0.0;
        for k in 0..self.n_p {
            for i in 0..self.n_theta {
                let mirror = self.get(self.n_theta - 1 - i, self.n_p - 1 - k);
                diff += (self.get(i, k) - mirror).abs();
            }
        }
        diff / (2.0 * self.values.iter().sum::<f64>())
    }

    /// Rows of `p`, each with `n_theta` values; no header.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        for row in self.values.chunks_exact(self.n_theta) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.12e}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Unnormalized amplitudes `sum_m exp(-(T(n + mN) - p0)^2 / (4 dp^2) - i (n + mN) theta0)`.
fn coherent_amplitudes(dim: usize, theta0: f64, p0: f64, s: f64) -> Vec<Complex64> {
    let t = 2.0 * PI / dim as f64;
    let two_var = 2.0 * s * t; // 4 dp^2 with dp^2 = s T / 2
    let half = (dim / 2) as i64;
    (0..dim as i64)
        .map(|j| {
            (-IMAGES..=IMAGES)
                .map(|m| {
                    let n = (j - half + m * dim as i64) as f64;
                    let x = t * n - p0;
                    Complex64::from_polar((-x * x / two_var).exp(), -n * theta0)
                })
                .sum()
        })
        .collect()
}

/// Normalized torus coherent state centered at `(theta0, p0)`.
pub fn coherent_state(n_qubits: usize, theta0: f64, p0: f64, s: f64) -> Result<StateVector> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(domain(format!("uncertainty ratio must be positive, got {s}")));
    }
    let amps = coherent_amplitudes(1 << n_qubits, theta0, p0, s);
    StateVector::normalized(amps, Basis::Momentum)
}

/// Husimi density of a momentum-basis state on an `n_theta x n_p` grid.
pub fn husimi(state: &StateVector, n_theta: usize, n_p: usize, s: f64) -> Result<HusimiGrid> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(domain(format!("uncertainty ratio must be positive, got {s}")));
    }
    if n_theta == 0 || n_p == 0 {
        return Err(domain("Husimi grid needs at least one cell per axis"));
    }
    if state.basis() != Basis::Momentum {
        return Err(contract("Husimi densities take momentum-basis states"));
    }
    let dim = state.dim();
    let psi = state.amplitudes();
    let mut grid = HusimiGrid {
        n_theta,
        n_p,
        s,
        period: 2.0 * PI / dim as f64,
        values: vec![0.0; n_theta * n_p],
    };
    for k in 0..n_p {
        let p0 = grid.p(k);
        for i in 0..n_theta {
            let coh = coherent_amplitudes(dim, grid.theta(i), p0, s);
            let (amp, norm) = coh
                .iter()
                .zip(psi)
                .fold((Complex64::new(0.0, 0.0), 0.0), |(a, n), (c, x)| {
                    (a + c.conj() * x, n + c.norm_sqr())
                });
            grid.values[k * n_theta + i] = amp.norm_sqr() / norm;
        }
    }
    Ok(grid)
}
