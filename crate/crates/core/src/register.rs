//! Register conventions shared by every module.
//!
//! Storage index `j` is the register value, written little-endian over
//! qubits (qubit 0 is the least significant bit). In the momentum basis
//! `j` encodes `n = j - N/2`, in the angle basis it encodes
//! `theta = 2 pi j / N`.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, domain, Result};

/// Largest register the library accepts. Matrix-building code applies its own,
/// much smaller, limit.
pub const MAX_QUBITS: usize = 24;

/// Tolerance on `sum |amp|^2 - 1` for a valid state.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Qubit count and sawtooth-map parameters (with hbar = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapParams {
    n_qubits: usize,
    dim: usize,
    chaos: f64,
    period: f64,
    strength: f64,
}

impl MapParams {
    /// Map with chaos parameter `K = k T` on `n_qubits` qubits, `T = 2 pi / N`.
    pub fn new(n_qubits: usize, chaos: f64) -> Result<Self> {
        if !(2..=MAX_QUBITS).contains(&n_qubits) {
            return Err(domain(format!("qubit count {n_qubits} outside [2, {MAX_QUBITS}]")));
        }
        if !chaos.is_finite() {
            return Err(domain("chaos parameter K must be finite"));
        }
        let dim = 1usize << n_qubits;
        let period = 2.0 * PI / dim as f64;
        Ok(Self {
            n_qubits,
            dim,
            chaos,
            period,
            strength: chaos / period,
        })
    }

    /// The quantum-ergodic working point `K = sqrt(2)`.
    pub fn ergodic(n_qubits: usize) -> Result<Self> {
        Self::new(n_qubits, SQRT_2)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Hilbert-space dimension `N = 2^n_q`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Chaos parameter `K`.
    pub fn chaos(&self) -> f64 {
        self.chaos
    }

    /// Kick period `T = 2 pi / N`.
    pub fn period(&self) -> f64 {
        self.period
    }

    /// Kick strength `k = K / T`.
    pub fn strength(&self) -> f64 {
        self.strength
    }

    /// Momentum quantum number stored at index `j`.
    pub fn momentum(&self, j: usize) -> i64 {
        j as i64 - (self.dim / 2) as i64
    }

    /// Storage index of momentum `n`, if `-N/2 <= n < N/2`.
    pub fn momentum_index(&self, n: i64) -> Result<usize> {
        let half = (self.dim / 2) as i64;
        if n < -half || n >= half {
            return Err(domain(format!("momentum {n} outside [-{half}, {half})")));
        }
        Ok((n + half) as usize)
    }

    /// Angle `theta_l = 2 pi l / N`.
    pub fn angle(&self, l: usize) -> f64 {
        self.period * l as f64
    }
}

/// Which representation the amplitudes of a [`StateVector`] are stored in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Momentum,
    Angle,
}

/// Normalized register state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
    basis: Basis,
}

impl StateVector {
    /// Wraps `amps`; the length must be a power of two and the norm one.
    pub fn from_amplitudes(amps: Vec<Complex64>, basis: Basis) -> Result<Self> {
        let n_qubits = qubits_for_len(amps.len())?;
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(domain(format!("state norm^2 {norm} is not 1")));
        }
        Ok(Self { n_qubits, amps, basis })
    }

    /// Wraps `amps` after rescaling them to unit norm.
    pub fn normalized(mut amps: Vec<Complex64>, basis: Basis) -> Result<Self> {
        let n_qubits = qubits_for_len(amps.len())?;
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(domain("cannot normalize a zero or non-finite vector"));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(Self { n_qubits, amps, basis })
    }

    /// Computational basis state `|j>` on `n_qubits` qubits.
    pub fn computational(n_qubits: usize, j: usize, basis: Basis) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(domain(format!("qubit count {n_qubits} out of range")));
        }
        let dim = 1usize << n_qubits;
        if j >= dim {
            return Err(domain(format!("index {j} outside register of size {dim}")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[j] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps, basis })
    }

    /// Haar-like random state: i.i.d. Gaussian components, normalized.
    pub fn random<R: Rng + ?Sized>(n_qubits: usize, basis: Basis, rng: &mut R) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(domain(format!("qubit count {n_qubits} out of range")));
        }
        let dim = 1usize << n_qubits;
        let amps = (0..dim)
            .map(|_| {
                let (re, im) = gaussian_pair(rng);
                Complex64::new(re, im)
            })
            .collect();
        Self::normalized(amps, basis)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Mutable access for in-place unitary kernels. Callers must keep the
    /// state normalized.
    pub(crate) fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub(crate) fn set_basis(&mut self, basis: Basis) {
        self.basis = basis;
    }

    pub(crate) fn from_parts(n_qubits: usize, amps: Vec<Complex64>, basis: Basis) -> Self {
        debug_assert_eq!(amps.len(), 1 << n_qubits);
        Self { n_qubits, amps, basis }
    }
}

fn qubits_for_len(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(domain(format!("register length {len} is not a power of two >= 2")));
    }
    let n = len.trailing_zeros() as usize;
    if n > MAX_QUBITS {
        return Err(domain(format!("{n} qubits exceed the limit {MAX_QUBITS}")));
    }
    Ok(n)
}

fn gaussian_pair<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    // Box-Muller
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (2.0 * PI * u2).sin_cos();
    (r * c, r * s)
}

/// `<a|b> = sum_j conj(a_j) b_j`.
pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    if a.dim() != b.dim() {
        return Err(contract(format!(
            "inner product of states with dimensions {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    if a.basis != b.basis {
        return Err(contract(format!(
            "inner product across bases {:?} and {:?}",
            a.basis, b.basis
        )));
    }
    Ok(dot(&a.amps, &b.amps))
}

pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Momentum eigenstate `|n>`.
pub fn basis_state(params: &MapParams, n: i64) -> Result<StateVector> {
    let j = params.momentum_index(n)?;
    StateVector::computational(params.n_qubits(), j, Basis::Momentum)
}

/// Master seed plus the counter-based rule that derives one seed per task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPlan {
    pub master_seed: u64,
}

impl SeedPlan {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    /// Seed for the task `(n_q, epsilon index, realization index)`. Depends on
    /// nothing else, so the result is independent of scheduling.
    pub fn task_seed(&self, n_qubits: usize, eps_index: usize, realization: usize) -> u64 {
        let mut h = mix64(self.master_seed ^ 0x5157_4157_5345_4544);
        for word in [n_qubits as u64, eps_index as u64, realization as u64] {
            h = mix64(h ^ mix64(word.wrapping_add(0x9e37_79b9_7f4a_7c15)));
        }
        h
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
