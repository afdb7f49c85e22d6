//! Static hardware imperfections: frozen qubit detunings and nearest-neighbour
//! `sigma_x sigma_x` couplings acting during the interval between gates.
//!
//! The average level spacing term is assumed refocused and never enters the
//! dynamics.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, domain, Result};

/// Where the single-impurity detuning sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImpuritySite {
    Fixed(usize),
    /// Drawn uniformly over the qubits from the realization seed.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "model")]
pub enum ImperfectionModel {
    /// Detunings uniform in `[-delta/2, delta/2]`, couplings uniform in `[-J, J]`.
    StaticChain { delta: f64, j_coupling: f64 },
    /// A detuning `delta` on one qubit, present for a single gate interval
    /// per map iteration.
    SingleImpurity { site: ImpuritySite, delta: f64 },
}

/// Imperfection model together with the inter-gate interval `tau_g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImperfectionSpec {
    pub model: ImperfectionModel,
    pub tau_g: f64,
}

impl ImperfectionSpec {
    pub fn new(model: ImperfectionModel, tau_g: f64) -> Result<Self> {
        if !(tau_g > 0.0 && tau_g.is_finite()) {
            return Err(domain(format!("tau_g must be positive, got {tau_g}")));
        }
        let (delta, j) = match model {
            ImperfectionModel::StaticChain { delta, j_coupling } => (delta, j_coupling),
            ImperfectionModel::SingleImpurity { delta, .. } => (delta, 0.0),
        };
        if !(delta >= 0.0 && delta.is_finite()) || !(j >= 0.0 && j.is_finite()) {
            return Err(domain("delta and J must be finite and non-negative"));
        }
        Ok(Self { model, tau_g })
    }

    /// Static chain at strength `epsilon` with `tau_g = 1` and `J = j_ratio * delta`.
    pub fn static_chain(epsilon: f64, j_ratio: f64) -> Result<Self> {
        Self::new(
            ImperfectionModel::StaticChain {
                delta: epsilon,
                j_coupling: j_ratio * epsilon,
            },
            1.0,
        )
    }

    /// Single impurity at strength `epsilon` with `tau_g = 1`.
    pub fn single_impurity(epsilon: f64, site: ImpuritySite) -> Result<Self> {
        Self::new(ImperfectionModel::SingleImpurity { site, delta: epsilon }, 1.0)
    }

    pub fn delta(&self) -> f64 {
        match self.model {
            ImperfectionModel::StaticChain { delta, .. } => delta,
            ImperfectionModel::SingleImpurity { delta, .. } => delta,
        }
    }

    pub fn j_coupling(&self) -> f64 {
        match self.model {
            ImperfectionModel::StaticChain { j_coupling, .. } => j_coupling,
            ImperfectionModel::SingleImpurity { .. } => 0.0,
        }
    }

    /// Dimensionless strength `epsilon = delta * tau_g`.
    pub fn epsilon(&self) -> f64 {
        self.delta() * self.tau_g
    }

    pub fn is_single_impurity(&self) -> bool {
        matches!(self.model, ImperfectionModel::SingleImpurity { .. })
    }

    /// Short tag used in output files.
    pub fn tag(&self) -> &'static str {
        match self.model {
            ImperfectionModel::StaticChain { .. } => "static",
            ImperfectionModel::SingleImpurity { .. } => "single",
        }
    }

    /// Same model with `delta` and `J` scaled so that the strength becomes `epsilon`.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(domain(format!("epsilon must be non-negative, got {epsilon}")));
        }
        let delta = epsilon / self.tau_g;
        let model = match self.model {
            ImperfectionModel::StaticChain { delta: d0, j_coupling } => {
                let ratio = if d0 > 0.0 { j_coupling / d0 } else { 0.0 };
                ImperfectionModel::StaticChain {
                    delta,
                    j_coupling: ratio * delta,
                }
            }
            ImperfectionModel::SingleImpurity { site, .. } => ImperfectionModel::SingleImpurity { site, delta },
        };
        Self::new(model, self.tau_g)
    }
}

/// One frozen sample of the detunings and couplings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization {
    pub deltas: Vec<f64>,
    pub couplings: Vec<f64>,
    pub seed: u64,
}

impl DisorderRealization {
    pub fn zero(n_qubits: usize) -> Self {
        Self {
            deltas: vec![0.0; n_qubits],
            couplings: vec![0.0; n_qubits.saturating_sub(1)],
            seed: 0,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.deltas.len()
    }

    /// Every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            deltas: self.deltas.iter().map(|d| d * factor).collect(),
            couplings: self.couplings.iter().map(|j| j * factor).collect(),
            seed: self.seed,
        }
    }

    pub fn has_couplings(&self) -> bool {
        self.couplings.iter().any(|&j| j != 0.0)
    }

    pub(crate) fn check_size(&self, n_qubits: usize) -> Result<()> {
        if self.deltas.len() != n_qubits || self.couplings.len() != n_qubits.saturating_sub(1) {
            return Err(contract(format!(
                "realization has {} detunings / {} couplings, register has {n_qubits} qubits",
                self.deltas.len(),
                self.couplings.len()
            )));
        }
        Ok(())
    }
}

/// A model together with one frozen realization of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Imperfection {
    pub spec: ImperfectionSpec,
    pub realization: DisorderRealization,
}

impl Imperfection {
    pub fn sample(spec: ImperfectionSpec, n_qubits: usize, seed: u64) -> Result<Self> {
        let realization = sample_realization(&spec, n_qubits, seed)?;
        Ok(Self { spec, realization })
    }

    pub fn epsilon(&self) -> f64 {
        self.spec.epsilon()
    }

    /// The same frozen realization with every value rescaled to strength `epsilon`.
    pub fn at_epsilon(&self, epsilon: f64) -> Result<Self> {
        let current = self.spec.epsilon();
        if !(current > 0.0) {
            return Err(domain("cannot rescale a realization sampled at epsilon = 0"));
        }
        Ok(Self {
            spec: self.spec.with_epsilon(epsilon)?,
            realization: self.realization.scaled(epsilon / current),
        })
    }

    pub fn as_pair(&self) -> (&ImperfectionSpec, &DisorderRealization) {
        (&self.spec, &self.realization)
    }
}

/// Draws a realization for `n_qubits` qubits, deterministic in `seed`.
pub fn sample_realization(spec: &ImperfectionSpec, n_qubits: usize, seed: u64) -> Result<DisorderRealization> {
    if n_qubits < 2 {
        return Err(domain(format!("need at least 2 qubits, got {n_qubits}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (deltas, couplings) = match spec.model {
        ImperfectionModel::StaticChain { delta, j_coupling } => {
            let deltas = (0..n_qubits).map(|_| delta * (rng.random::<f64>() - 0.5)).collect();
            let couplings = (0..n_qubits - 1)
                .map(|_| {
                    if j_coupling == 0.0 {
                        0.0
                    } else {
                        j_coupling * (2.0 * rng.random::<f64>() - 1.0)
                    }
                })
                .collect();
            (deltas, couplings)
        }
        ImperfectionModel::SingleImpurity { site, delta } => {
            let q = match site {
                ImpuritySite::Fixed(q) if q < n_qubits => q,
                ImpuritySite::Fixed(q) => return Err(domain(format!("impurity qubit {q} outside {n_qubits} qubits"))),
                ImpuritySite::Random => rng.random_range(0..n_qubits),
            };
            let mut deltas = vec![0.0; n_qubits];
            deltas[q] = delta;
            (deltas, vec![0.0; n_qubits - 1])
        }
    };
    Ok(DisorderRealization {
        deltas,
        couplings,
        seed,
    })
}

/// Precomputed `exp(-i tau_g H')` with
/// `H' = sum_i delta_i sigma^z_i + sum_i J_i sigma^x_i sigma^x_{i+1}`.
#[derive(Debug, Clone)]
pub struct StaticPropagator {
    /// `tau_g * sum_i delta_i s_i(j)` with `s_i = +1` for bit value 0.
    z_angles: Vec<f64>,
    z_full: Vec<Complex64>,
    /// Present when couplings are nonzero: half-step z phases and bond rotations.
    split: Option<Split>,
    /// Cached `exp(-i p * z_angle)` tables indexed by power `p`.
    powers: Vec<Option<Vec<Complex64>>>,
}

#[derive(Debug, Clone)]
struct Split {
    z_half: Vec<Complex64>,
    /// (bond index, cos(tau J), sin(tau J)), even bonds first.
    bonds: Vec<(usize, f64, f64)>,
}

impl StaticPropagator {
    pub fn new(real: &DisorderRealization, tau_g: f64, n_qubits: usize) -> Result<Self> {
        real.check_size(n_qubits)?;
        let dim = 1usize << n_qubits;
        let z_angles: Vec<f64> = (0..dim)
            .map(|j| {
                tau_g
                    * real
                        .deltas
                        .iter()
                        .enumerate()
                        .map(|(i, d)| if (j >> i) & 1 == 0 { *d } else { -*d })
                        .sum::<f64>()
            })
            .collect();
        let z_full = z_angles.iter().map(|a| Complex64::cis(-a)).collect();
        let split = real.has_couplings().then(|| {
            let mut bonds: Vec<(usize, f64, f64)> = real
                .couplings
                .iter()
                .enumerate()
                .filter(|(_, j)| **j != 0.0)
                .map(|(b, j)| {
                    let (s, c) = (tau_g * j).sin_cos();
                    (b, c, s)
                })
                .collect();
            bonds.sort_by_key(|(b, _, _)| (b % 2, *b));
            Split {
                z_half: z_angles.iter().map(|a| Complex64::cis(-a / 2.0)).collect(),
                bonds,
            }
        });
        Ok(Self {
            z_angles,
            z_full,
            split,
            powers: Vec::new(),
        })
    }

    /// True when the propagator is a pure phase (no couplings).
    pub fn is_diagonal(&self) -> bool {
        self.split.is_none()
    }

    /// Applies one interval of free evolution.
    pub fn apply(&self, amps: &mut [Complex64]) {
        match &self.split {
            None => multiply(amps, &self.z_full),
            Some(split) => {
                multiply(amps, &split.z_half);
                for &(b, c, s) in &split.bonds {
                    xx_rotation(amps, b, c, s);
                }
                multiply(amps, &split.z_half);
            }
        }
    }

    /// Precomputes the tables used by [`Self::apply_diagonal_power`].
    pub(crate) fn prepare_powers(&mut self, powers: impl IntoIterator<Item = usize>) {
        for p in powers {
            if p < 2 {
                continue;
            }
            if self.powers.len() <= p {
                self.powers.resize(p + 1, None);
            }
            if self.powers[p].is_none() {
                let table = self.z_angles.iter().map(|a| Complex64::cis(-a * p as f64)).collect();
                self.powers[p] = Some(table);
            }
        }
    }

    /// Applies `power` consecutive intervals of a diagonal propagator at once.
    pub(crate) fn apply_diagonal_power(&self, amps: &mut [Complex64], power: usize) {
        debug_assert!(self.is_diagonal());
        match power {
            0 => {}
            1 => multiply(amps, &self.z_full),
            p => match self.powers.get(p).and_then(Option::as_ref) {
                Some(table) => multiply(amps, table),
                None => amps
                    .iter_mut()
                    .zip(&self.z_angles)
                    .for_each(|(a, z)| *a *= Complex64::cis(-z * p as f64)),
            },
        }
    }
}

fn multiply(amps: &mut [Complex64], table: &[Complex64]) {
    amps.iter_mut().zip(table).for_each(|(a, f)| *a *= f);
}

/// `exp(-i theta X_b X_{b+1}) = cos(theta) - i sin(theta) X_b X_{b+1}`.
fn xx_rotation(amps: &mut [Complex64], bond: usize, c: f64, s: f64) {
    let mask = (1usize << bond) | (1usize << (bond + 1));
    let lo_bit = 1usize << bond;
    let mis = Complex64::new(0.0, -s);
    for j in 0..amps.len() {
        let partner = j ^ mask;
        // visit each pair once: pairs are {00,11} and {01,10} on the bond bits
        if partner > j && (j & mask == 0 || j & mask == lo_bit) {
            let (a, b) = (amps[j], amps[partner]);
            amps[j] = a * c + b * mis;
            amps[partner] = b * c + a * mis;
        }
    }
}

/// Applies `exp(-i tau_g H')` for a realization to a state in either basis.
pub fn apply_static_propagator(state: &mut crate::StateVector, real: &DisorderRealization, tau_g: f64) -> Result<()> {
    let prop = StaticPropagator::new(real, tau_g, state.n_qubits())?;
    prop.apply(state.amps_mut());
    Ok(())
}
