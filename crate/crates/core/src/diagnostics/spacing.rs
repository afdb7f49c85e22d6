//! Nearest-neighbor quasienergy spacing statistics.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::floquet::FloquetSpectrum;

/// Parity `<phi|P|phi>` must be this close to `+-1` for sector splitting.
pub const PARITY_TOLERANCE: f64 = 1e-6;

/// Kolmogorov distances of unfolded spacings to the two reference laws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacingStats {
    /// Spacings in units of the mean spacing, sorted.
    pub spacings: Vec<f64>,
    /// Distance to the Wigner surmise `P(s) = (pi s / 2) exp(-pi s^2 / 4)`.
    pub ks_wigner: f64,
    /// Distance to Poisson `P(s) = exp(-s)`.
    pub ks_poisson: f64,
}

impl SpacingStats {
    pub fn closer_to_wigner(&self) -> bool {
        self.ks_wigner < self.ks_poisson
    }
}

pub fn wigner_cdf(s: f64) -> f64 {
    1.0 - (-PI * s * s / 4.0).exp()
}

pub fn poisson_cdf(s: f64) -> f64 {
    1.0 - (-s).exp()
}

fn ks_distance(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let m = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let f = cdf(s);
            (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Spacings of phases on the circle (including the wrap-around gap), in units
/// of the mean spacing `2 pi / len`.
fn unfolded_spacings(phases: &[f64]) -> Vec<f64> {
    let mut sorted = phases.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = 2.0 * PI / sorted.len() as f64;
    let mut gaps: Vec<f64> = sorted.windows(2).map(|w| (w[1] - w[0]) / mean).collect();
    gaps.push((sorted[0] + 2.0 * PI - sorted[sorted.len() - 1]) / mean);
    gaps
}

/// Statistics of one spectrum, or of several independent symmetry sectors
/// each unfolded by its own mean spacing and then pooled.
pub fn spacing_statistics(sectors: &[&[f64]]) -> Result<SpacingStats> {
    if sectors.iter().any(|s| s.len() < 2) || sectors.is_empty() {
        return Err(domain("each sector needs at least two eigenphases"));
    }
    let mut spacings: Vec<f64> = sectors.iter().flat_map(|s| unfolded_spacings(s)).collect();
    spacings.sort_by(f64::total_cmp);
    Ok(SpacingStats {
        ks_wigner: ks_distance(&spacings, wigner_cdf),
        ks_poisson: ks_distance(&spacings, poisson_cdf),
        spacings,
    })
}

/// Splits eigenphases by the parity `n -> -n` (`j -> (N - j) mod N`) of their
/// eigenvectors. Fails if some eigenvector has no definite parity.
pub fn parity_sectors(spectrum: &FloquetSpectrum) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = spectrum.dim();
    let (mut even, mut odd) = (Vec::new(), Vec::new());
    for (alpha, &phase) in spectrum.eigenphases().iter().enumerate() {
        let v = spectrum.eigenvector_slice(alpha);
        let parity: num_complex::Complex64 = (0..n).map(|j| v[j].conj() * v[(n - j) % n]).sum();
        if (parity.re - 1.0).abs() < PARITY_TOLERANCE {
            even.push(phase);
        } else if (parity.re + 1.0).abs() < PARITY_TOLERANCE {
            odd.push(phase);
        } else {
            return Err(Error::Contract(format!(
                "eigenvector {alpha} has parity {:.3e}{:+.3e}i, not +-1",
                parity.re, parity.im
            )));
        }
    }
    Ok((even, odd))
}
