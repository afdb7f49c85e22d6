//! The sawtooth map: classical map, exact split-operator kick, and the kick as
//! executed gate by gate on imperfect hardware.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{contract, Result};
use crate::gates::{build_schedule, GateSchedule, Step};
use crate::imperfect::{DisorderRealization, ImperfectionSpec, StaticPropagator};
use crate::register::{Basis, MapParams, StateVector};

/// Point of the classical map on the torus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalPoint {
    /// Action.
    pub n: f64,
    /// Angle in `[0, 2 pi)`.
    pub theta: f64,
}

impl ClassicalPoint {
    pub fn new(n: f64, theta: f64) -> Self {
        Self {
            n,
            theta: theta.rem_euclid(TAU),
        }
    }

    /// Rescaled momentum `p = T n`.
    pub fn momentum(&self, params: &MapParams) -> f64 {
        params.period() * self.n
    }
}

/// One step `n' = n + k (theta - pi)`, `theta' = theta + T n' (mod 2 pi)`, with
/// `p' = T n'` wrapped into `[-pi, pi)`.
pub fn classical_step(pt: ClassicalPoint, params: &MapParams) -> ClassicalPoint {
    let t = params.period();
    let n_bar = pt.n + params.strength() * (pt.theta - PI);
    let theta_bar = (pt.theta + t * n_bar).rem_euclid(TAU);
    let p = (t * n_bar + PI).rem_euclid(TAU) - PI;
    ClassicalPoint {
        n: p / t,
        theta: theta_bar,
    }
}

/// Exact kick `exp(-i T n^2/2) exp(i k (theta - pi)^2/2)` through FFTs,
/// independent of the gate decomposition.
pub struct IdealKick {
    dim: usize,
    n_qubits: usize,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    /// Kick phase at `theta_l`, with the `1/N` of the two transforms folded in.
    angle_phase: Vec<Complex64>,
    momentum_phase: Vec<Complex64>,
}

impl IdealKick {
    pub fn new(params: &MapParams) -> Self {
        let dim = params.dim();
        let mut planner = FftPlanner::new();
        let k = params.strength();
        let t = params.period();
        // psi(theta_l) = N^{-1/2} sum_n e^{i n theta_l} psi_n with n = j - N/2
        // carries a factor (-1)^l on top of the plain inverse FFT; the factor
        // appears once on each side of the kick and cancels.
        let angle_phase = (0..dim)
            .map(|l| {
                let x = params.angle(l) - PI;
                Complex64::cis(k * x * x / 2.0) / dim as f64
            })
            .collect();
        let momentum_phase = (0..dim)
            .map(|j| {
                let n = params.momentum(j) as f64;
                Complex64::cis(-t * n * n / 2.0)
            })
            .collect();
        Self {
            dim,
            n_qubits: params.n_qubits(),
            fft: planner.plan_fft_forward(dim),
            ifft: planner.plan_fft_inverse(dim),
            angle_phase,
            momentum_phase,
        }
    }

    /// Applies the kick in place to momentum-basis amplitudes.
    pub fn apply(&self, amps: &mut [Complex64]) {
        debug_assert_eq!(amps.len(), self.dim);
        self.ifft.process(amps);
        amps.iter_mut().zip(&self.angle_phase).for_each(|(a, p)| *a *= p);
        self.fft.process(amps);
        amps.iter_mut().zip(&self.momentum_phase).for_each(|(a, p)| *a *= p);
    }

    pub fn kick(&self, state: &mut StateVector) -> Result<()> {
        check_kick_input(state, self.n_qubits)?;
        self.apply(state.amps_mut());
        Ok(())
    }
}

fn check_kick_input(state: &StateVector, n_qubits: usize) -> Result<()> {
    if state.basis() != Basis::Momentum {
        return Err(contract("kick expects a momentum-basis state"));
    }
    if state.n_qubits() != n_qubits {
        return Err(contract(format!(
            "state has {} qubits, map has {n_qubits}",
            state.n_qubits()
        )));
    }
    Ok(())
}

/// Exact split-operator kick of `state`.
pub fn ideal_kick(state: &StateVector, params: &MapParams) -> Result<StateVector> {
    let mut out = state.clone();
    IdealKick::new(params).kick(&mut out)?;
    Ok(out)
}

enum Exposure {
    Perfect,
    /// Propagator after every gate; diagonal ones are merged across runs of
    /// diagonal gates, with which they commute.
    Chain(StaticPropagator),
    /// Propagator once, right after the first QFT.
    Impurity(StaticPropagator),
}

/// One map iteration executed gate by gate, with optional imperfections.
pub struct CircuitKick {
    n_qubits: usize,
    schedule: GateSchedule,
    exposure: Exposure,
}

impl CircuitKick {
    pub fn new(params: &MapParams, imperfection: Option<(&ImperfectionSpec, &DisorderRealization)>) -> Result<Self> {
        let schedule = build_schedule(params);
        let n = params.n_qubits();
        let exposure = match imperfection {
            None => Exposure::Perfect,
            Some((spec, real)) => {
                real.check_size(n)?;
                let mut prop = StaticPropagator::new(real, spec.tau_g, n)?;
                if spec.is_single_impurity() {
                    Exposure::Impurity(prop)
                } else {
                    if prop.is_diagonal() {
                        prop.prepare_powers(diagonal_runs(&schedule));
                    }
                    Exposure::Chain(prop)
                }
            }
        };
        Ok(Self {
            n_qubits: n,
            schedule,
            exposure,
        })
    }

    pub fn schedule(&self) -> &GateSchedule {
        &self.schedule
    }

    /// Applies the kick in place to momentum-basis amplitudes.
    pub fn apply(&self, amps: &mut [Complex64]) {
        match &self.exposure {
            Exposure::Perfect => {
                self.schedule.run_ideal(amps);
            }
            Exposure::Impurity(prop) => {
                self.schedule.run(amps, |_, _| {}, |a| prop.apply(a));
            }
            Exposure::Chain(prop) if !prop.is_diagonal() => {
                self.schedule.run(amps, |a, _| prop.apply(a), |_| {});
            }
            Exposure::Chain(prop) => {
                let mut pending = 0usize;
                for step in self.schedule.steps() {
                    match step {
                        Step::Gate(event) => {
                            if !event.is_diagonal() {
                                prop.apply_diagonal_power(amps, pending);
                                pending = 0;
                            }
                            event.apply(amps);
                            pending += 1;
                        }
                        Step::GlobalPhase(phi) => {
                            let f = Complex64::cis(*phi);
                            amps.iter_mut().for_each(|a| *a *= f);
                        }
                        Step::Relabel(_) => {
                            prop.apply_diagonal_power(amps, pending);
                            pending = 0;
                            crate::gates::bit_reverse(amps);
                        }
                        Step::AfterFirstQft => {}
                    }
                }
                prop.apply_diagonal_power(amps, pending);
            }
        }
    }

    pub fn kick(&self, state: &mut StateVector) -> Result<()> {
        check_kick_input(state, self.n_qubits)?;
        self.apply(state.amps_mut());
        Ok(())
    }
}

/// Lengths of the runs of diagonal gates that the merged propagator sees.
fn diagonal_runs(schedule: &GateSchedule) -> Vec<usize> {
    let mut runs = Vec::new();
    let mut pending = 0usize;
    for step in schedule.steps() {
        match step {
            Step::Gate(event) => {
                if !event.is_diagonal() {
                    runs.push(pending);
                    pending = 0;
                }
                pending += 1;
            }
            Step::Relabel(_) => {
                runs.push(pending);
                pending = 0;
            }
            _ => {}
        }
    }
    runs.push(pending);
    runs.sort_unstable();
    runs.dedup();
    runs
}

/// Kick executed through the gate schedule, with imperfection propagators
/// when `imperfection` is given.
pub fn circuit_kick(
    state: &StateVector,
    params: &MapParams,
    imperfection: Option<(&ImperfectionSpec, &DisorderRealization)>,
) -> Result<StateVector> {
    let mut out = state.clone();
    CircuitKick::new(params, imperfection)?.kick(&mut out)?;
    Ok(out)
}
