//! Local density of states of a perturbed eigenstate and its Breit-Wigner width.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::floquet::FloquetSpectrum;

/// Largest single weight at which the distribution still counts as spread.
pub const SPIKE_WEIGHT: f64 = 1.0 - 1e-6;

/// Weights of one state over the unperturbed quasienergies, with a fitted
/// wrapped-Lorentzian full width `gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ldos {
    /// Unperturbed eigenphases, ascending.
    pub phases: Vec<f64>,
    pub weights: Vec<f64>,
    /// Circular mean of the distribution.
    pub center: f64,
    /// Full width at half maximum; 0 when `perturbative`.
    pub gamma: f64,
    /// All weight sits on one level.
    pub perturbative: bool,
    /// Sum of squared CDF deviations at the optimum.
    pub residual: f64,
}

/// CDF on `(-pi, pi]` of the wrapped Cauchy distribution with half width `g`
/// centered at 0.
fn wrapped_cauchy_cdf(x: f64, g: f64) -> f64 {
    let rho = (-g).exp();
    let ratio = (1.0 + rho) / (1.0 - rho);
    0.5 + (ratio * (x / 2.0).tan()).atan() / PI
}

fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

/// Fits a wrapped Lorentzian to weights at the given phases by least squares
/// on the cumulative distribution. Returns `(center, fwhm, residual)`.
pub fn fit_breit_wigner(phases: &[f64], weights: &[f64]) -> (f64, f64, f64) {
    let center = weights
        .iter()
        .zip(phases)
        .map(|(w, l)| Complex64::from_polar(*w, *l))
        .sum::<Complex64>()
        .arg();
    let mut pts: Vec<(f64, f64)> = phases
        .iter()
        .zip(weights)
        .map(|(l, w)| (wrap(l - center), *w))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    let empirical: Vec<(f64, f64)> = pts
        .iter()
        .map(|&(x, w)| {
            let mid = (acc + w / 2.0) / total;
            acc += w;
            (x, mid)
        })
        .collect();
    let cost = |log_g: f64| {
        let g = log_g.exp();
        empirical
            .iter()
            .map(|&(x, c)| (c - wrapped_cauchy_cdf(x, g)).powi(2))
            .sum::<f64>()
    };
    let (lo, hi, steps) = (1e-7_f64.ln(), 20.0_f64.ln(), 120);
    let h = (hi - lo) / steps as f64;
    let best = (0..=steps)
        .map(|k| lo + h * k as f64)
        .min_by(|a, b| cost(*a).total_cmp(&cost(*b)))
        .expect("nonempty scan");
    let (mut a, mut b) = ((best - h).max(lo), (best + h).min(hi));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if cost(c) < cost(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let log_g = (a + b) / 2.0;
    (center, 2.0 * log_g.exp(), cost(log_g))
}

/// LDOS of `phi` (momentum-basis amplitudes) over the unperturbed spectrum.
pub fn ldos(phi: &[Complex64], unperturbed: &FloquetSpectrum) -> Result<Ldos> {
    if phi.len() != unperturbed.dim() {
        return Err(contract(format!(
            "state of dimension {} against a spectrum of dimension {}",
            phi.len(),
            unperturbed.dim()
        )));
    }
    let weights: Vec<f64> = (0..unperturbed.dim())
        .map(|b| {
            unperturbed
                .eigenvector_slice(b)
                .iter()
                .zip(phi)
                .map(|(u, x)| u.conj() * x)
                .sum::<Complex64>()
                .norm_sqr()
        })
        .collect();
    let phases = unperturbed.eigenphases().to_vec();
    let (imax, wmax) = weights
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, w)| (i, *w))
        .expect("nonempty spectrum");
    if wmax >= SPIKE_WEIGHT {
        return Ok(Ldos {
            center: phases[imax],
            phases,
            weights,
            gamma: 0.0,
            perturbative: true,
            residual: 0.0,
        });
    }
    let (center, gamma, residual) = fit_breit_wigner(&phases, &weights);
    Ok(Ldos {
        phases,
        weights,
        center,
        gamma,
        perturbative: false,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floquet::floquet_spectrum;
    use crate::register::MapParams;

    #[test]
    fn fit_recovers_a_synthetic_lorentzian() {
        let n = 512;
        let phases: Vec<f64> = (0..n).map(|k| -PI + 2.0 * PI * (k as f64 + 0.5) / n as f64).collect();
        for (width, c0) in [(0.1, 0.4), (0.3, -3.0), (0.05, 3.1)] {
            let g: f64 = width / 2.0;
            let weights: Vec<f64> = phases
                .iter()
                .map(|l| {
                    let x = wrap(l - c0);
                    // wrapped Cauchy density
                    (1.0 - (-2.0 * g).exp()) / (1.0 + (-2.0 * g).exp() - 2.0 * (-g).exp() * x.cos())
                })
                .collect();
            let (center, fwhm, _) = fit_breit_wigner(&phases, &weights);
            assert!((fwhm / width - 1.0).abs() < 0.05, "{fwhm} vs {width}");
            assert!(wrap(center - c0).abs() < 1e-3);
        }
    }

    #[test]
    fn unperturbed_eigenstate_is_a_spike() {
        let p = MapParams::ergodic(5).unwrap();
        let s = floquet_spectrum(&p, None).unwrap();
        let l = ldos(s.eigenvector_slice(7), &s).unwrap();
        assert!(l.perturbative);
        assert_eq!(l.gamma, 0.0);
        assert_eq!(l.center, s.eigenphases()[7]);
        assert!((l.weights.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn dimension_mismatch() {
        let p = MapParams::ergodic(3).unwrap();
        let s = floquet_spectrum(&p, None).unwrap();
        assert!(ldos(&[Complex64::new(1.0, 0.0); 4], &s).is_err());
    }
}
