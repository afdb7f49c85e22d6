//! Gate kernels, the quantum Fourier transform and the gate schedule of one
//! map iteration.
//!
//! Kernels work in place on a little-endian amplitude buffer and return the
//! number of amplitudes they rewrote, which is what the schedule's cost
//! accounting sums.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{contract, domain, Result};
use crate::register::{Basis, MapParams, StateVector};

/// One elementary gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateEvent {
    Hadamard {
        qubit: usize,
    },
    /// `exp(i phi)` on the `|1>` component of one qubit.
    Phase {
        qubit: usize,
        phi: f64,
    },
    /// `exp(i phi)` when both qubits are `|1>`.
    ControlledPhase {
        qubits: [usize; 2],
        phi: f64,
    },
}

impl GateEvent {
    pub fn is_diagonal(&self) -> bool {
        !matches!(self, GateEvent::Hadamard { .. })
    }

    pub fn targets(&self) -> Vec<usize> {
        match *self {
            GateEvent::Hadamard { qubit } | GateEvent::Phase { qubit, .. } => vec![qubit],
            GateEvent::ControlledPhase { qubits, .. } => qubits.to_vec(),
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            GateEvent::Hadamard { .. } => None,
            GateEvent::Phase { phi, .. } | GateEvent::ControlledPhase { phi, .. } => Some(phi),
        }
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        let targets = self.targets();
        if let Some(&q) = targets.iter().find(|&&q| q >= n_qubits) {
            return Err(domain(format!("qubit {q} outside register of {n_qubits}")));
        }
        if targets.len() == 2 && targets[0] == targets[1] {
            return Err(domain(format!(
                "controlled phase needs distinct qubits, got {} twice",
                targets[0]
            )));
        }
        Ok(())
    }

    /// Applies the gate to a raw amplitude buffer.
    pub fn apply(&self, amps: &mut [Complex64]) -> usize {
        match *self {
            GateEvent::Hadamard { qubit } => hadamard_kernel(amps, qubit),
            GateEvent::Phase { qubit, phi } => phase_kernel(amps, qubit, Complex64::cis(phi)),
            GateEvent::ControlledPhase { qubits, phi } => {
                controlled_phase_kernel(amps, qubits[0], qubits[1], Complex64::cis(phi))
            }
        }
    }
}

#[derive(Serialize)]
struct TraceLine {
    kind: &'static str,
    t: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phi: Option<f64>,
}

impl From<&GateEvent> for TraceLine {
    fn from(event: &GateEvent) -> Self {
        let kind = match event {
            GateEvent::Hadamard { .. } => "H",
            GateEvent::Phase { .. } => "P",
            GateEvent::ControlledPhase { .. } => "CP",
        };
        TraceLine {
            kind,
            t: event.targets(),
            phi: event.angle(),
        }
    }
}

pub(crate) fn hadamard_kernel(amps: &mut [Complex64], q: usize) -> usize {
    let stride = 1usize << q;
    for block in amps.chunks_exact_mut(2 * stride) {
        let (lo, hi) = block.split_at_mut(stride);
        for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x, y) = (*a, *b);
            *a = (x + y) * FRAC_1_SQRT_2;
            *b = (x - y) * FRAC_1_SQRT_2;
        }
    }
    amps.len()
}

pub(crate) fn phase_kernel(amps: &mut [Complex64], q: usize, factor: Complex64) -> usize {
    let stride = 1usize << q;
    for block in amps.chunks_exact_mut(2 * stride) {
        for a in &mut block[stride..] {
            *a *= factor;
        }
    }
    amps.len() / 2
}

pub(crate) fn controlled_phase_kernel(amps: &mut [Complex64], q1: usize, q2: usize, factor: Complex64) -> usize {
    let (lo, hi) = if q1 < q2 { (q1, q2) } else { (q2, q1) };
    let hi_stride = 1usize << hi;
    let lo_stride = 1usize << lo;
    for outer in amps.chunks_exact_mut(2 * hi_stride) {
        for inner in outer[hi_stride..].chunks_exact_mut(2 * lo_stride) {
            for a in &mut inner[lo_stride..] {
                *a *= factor;
            }
        }
    }
    amps.len() / 4
}

/// Hadamard on qubit `q`.
pub fn apply_hadamard(state: &mut StateVector, q: usize) -> Result<()> {
    let event = GateEvent::Hadamard { qubit: q };
    event.validate(state.n_qubits())?;
    event.apply(state.amps_mut());
    Ok(())
}

/// Multiplies amplitudes whose bit `q` is set by `exp(i phi)`.
pub fn apply_phase(state: &mut StateVector, q: usize, phi: f64) -> Result<()> {
    let event = GateEvent::Phase { qubit: q, phi };
    event.validate(state.n_qubits())?;
    event.apply(state.amps_mut());
    Ok(())
}

/// Multiplies amplitudes whose bits `q1` and `q2` are both set by `exp(i phi)`.
pub fn apply_controlled_phase(state: &mut StateVector, q1: usize, q2: usize, phi: f64) -> Result<()> {
    let event = GateEvent::ControlledPhase { qubits: [q1, q2], phi };
    event.validate(state.n_qubits())?;
    event.apply(state.amps_mut());
    Ok(())
}

/// QFT direction. `Forward` takes angle amplitudes to momentum amplitudes with
/// kernel `exp(-2 pi i j l / N) / sqrt(N)`; `Backward` is its inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => -1.0,
            Direction::Backward => 1.0,
        }
    }

    /// Basis the QFT expects on input.
    pub fn source(self) -> Basis {
        match self {
            Direction::Forward => Basis::Angle,
            Direction::Backward => Basis::Momentum,
        }
    }

    pub fn target(self) -> Basis {
        match self {
            Direction::Forward => Basis::Momentum,
            Direction::Backward => Basis::Angle,
        }
    }
}

/// Hadamard / controlled-phase butterfly of the QFT. Its output is
/// bit-reversed; [`bit_reverse`] completes the transform.
pub fn qft_events(n_qubits: usize, direction: Direction) -> Vec<GateEvent> {
    let sign = direction.sign();
    let mut events = Vec::with_capacity(n_qubits * (n_qubits + 1) / 2);
    for q in (0..n_qubits).rev() {
        events.push(GateEvent::Hadamard { qubit: q });
        for m in (0..q).rev() {
            events.push(GateEvent::ControlledPhase {
                qubits: [m, q],
                phi: sign * PI / (1u64 << (q - m)) as f64,
            });
        }
    }
    events
}

/// Relabels storage indices by reversing their bits.
pub fn bit_reverse(amps: &mut [Complex64]) {
    let n_bits = amps.len().trailing_zeros();
    if n_bits == 0 {
        return;
    }
    for j in 0..amps.len() {
        let r = j.reverse_bits() >> (usize::BITS - n_bits);
        if r > j {
            amps.swap(j, r);
        }
    }
}

/// Quantum Fourier transform between the angle and momentum bases.
pub fn qft(state: &mut StateVector, direction: Direction) -> Result<()> {
    if state.basis() != direction.source() {
        return Err(contract(format!(
            "{direction:?} QFT expects a {:?}-basis state, got {:?}",
            direction.source(),
            state.basis()
        )));
    }
    let n = state.n_qubits();
    let amps = state.amps_mut();
    for event in qft_events(n, direction) {
        event.apply(amps);
    }
    bit_reverse(amps);
    state.set_basis(direction.target());
    Ok(())
}

/// One entry of a [`GateSchedule`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step {
    Gate(GateEvent),
    /// Scalar `exp(i phi)`; not a gate, receives no imperfection exposure.
    GlobalPhase(f64),
    /// Bit-reversal relabeling that completes a QFT, leaving the register in
    /// the given basis.
    Relabel(Basis),
    /// The point right after the first QFT, where the single-impurity model acts.
    AfterFirstQft,
}

/// Gate counts realized by a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCounts {
    pub hadamard: usize,
    /// Two-qubit controlled-phase gates.
    pub controlled_phase: usize,
    /// Single-qubit phase gates (diagonal terms of the quadratic forms).
    pub single_phase: usize,
}

impl GateCounts {
    pub fn total(&self) -> usize {
        self.hadamard + self.controlled_phase + self.single_phase
    }
}

/// Ordered gate list of one map iteration, momentum basis in and out.
#[derive(Debug, Clone, PartialEq)]
pub struct GateSchedule {
    n_qubits: usize,
    steps: Vec<Step>,
    counts: GateCounts,
}

impl GateSchedule {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn events(&self) -> impl Iterator<Item = &GateEvent> + '_ {
        self.steps.iter().filter_map(|s| match s {
            Step::Gate(g) => Some(g),
            _ => None,
        })
    }

    pub fn counts(&self) -> GateCounts {
        self.counts
    }

    pub fn hadamard_count(&self) -> usize {
        self.counts.hadamard
    }

    /// Controlled-phase gates counting the single-qubit diagonal terms as
    /// controlled phases of a qubit with itself: `3 n_q^2 - n_q`.
    pub fn cp_count(&self) -> usize {
        self.counts.controlled_phase + self.counts.single_phase
    }

    /// Writes one JSON object per gate event.
    pub fn write_trace<W: Write>(&self, mut out: W) -> Result<()> {
        for event in self.events() {
            serde_json::to_writer(&mut out, &TraceLine::from(event))?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Runs the schedule on `amps`, calling `exposure` after every gate event
    /// and `marker` at [`Step::AfterFirstQft`]. Returns the number of
    /// amplitude updates performed by gate kernels.
    pub fn run<E, M>(&self, amps: &mut [Complex64], mut exposure: E, mut marker: M) -> u64
    where
        E: FnMut(&mut [Complex64], &GateEvent),
        M: FnMut(&mut [Complex64]),
    {
        debug_assert_eq!(amps.len(), 1 << self.n_qubits);
        let mut updates = 0u64;
        for step in &self.steps {
            match step {
                Step::Gate(event) => {
                    updates += event.apply(amps) as u64;
                    exposure(amps, event);
                }
                Step::GlobalPhase(phi) => {
                    let f = Complex64::cis(*phi);
                    amps.iter_mut().for_each(|a| *a *= f);
                }
                Step::Relabel(_) => bit_reverse(amps),
                Step::AfterFirstQft => marker(amps),
            }
        }
        updates
    }

    /// Runs the schedule without imperfections.
    pub fn run_ideal(&self, amps: &mut [Complex64]) -> u64 {
        self.run(amps, |_, _| {}, |_| {})
    }
}

fn wrap_angle(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Gates realizing `exp(i c (m - N/2)^2)` on the register value `m`.
///
/// With `m = sum_i a_i 2^i` the form expands over ordered qubit pairs: a
/// controlled phase `c 2^(i+l)` for every `i != l`, a single-qubit phase
/// `c (4^i - N 2^i)` for `i == l`, and the global phase `c N^2 / 4`.
fn quadratic_form(n_qubits: usize, c: f64, steps: &mut Vec<Step>) {
    let dim = (1u64 << n_qubits) as f64;
    for i in 0..n_qubits {
        for l in 0..n_qubits {
            let pi = (1u64 << i) as f64;
            if i == l {
                steps.push(Step::Gate(GateEvent::Phase {
                    qubit: i,
                    phi: wrap_angle(c * (pi * pi - dim * pi)),
                }));
            } else {
                let pl = (1u64 << l) as f64;
                steps.push(Step::Gate(GateEvent::ControlledPhase {
                    qubits: [i, l],
                    phi: wrap_angle(c * pi * pl),
                }));
            }
        }
    }
    steps.push(Step::GlobalPhase(wrap_angle(c * dim * dim / 4.0)));
}

/// Schedule of one kick `exp(-i T n^2/2) exp(i k (theta - pi)^2 / 2)`:
/// backward QFT to the angle basis, kick phase, forward QFT, kinetic phase.
pub fn build_schedule(params: &MapParams) -> GateSchedule {
    let n = params.n_qubits();
    let mut steps = Vec::new();
    steps.extend(qft_events(n, Direction::Backward).into_iter().map(Step::Gate));
    steps.push(Step::Relabel(Basis::Angle));
    steps.push(Step::AfterFirstQft);
    // k (theta_l - pi)^2 / 2 = (K T / 2) (l - N/2)^2
    quadratic_form(n, params.chaos() * params.period() / 2.0, &mut steps);
    steps.extend(qft_events(n, Direction::Forward).into_iter().map(Step::Gate));
    steps.push(Step::Relabel(Basis::Momentum));
    // -T n^2 / 2 with n = j - N/2
    quadratic_form(n, -params.period() / 2.0, &mut steps);

    let mut counts = GateCounts {
        hadamard: 0,
        controlled_phase: 0,
        single_phase: 0,
    };
    for step in &steps {
        match step {
            Step::Gate(GateEvent::Hadamard { .. }) => counts.hadamard += 1,
            Step::Gate(GateEvent::Phase { .. }) => counts.single_phase += 1,
            Step::Gate(GateEvent::ControlledPhase { .. }) => counts.controlled_phase += 1,
            _ => {}
        }
    }
    GateSchedule {
        n_qubits: n,
        steps,
        counts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::register::inner_product;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    fn random_state(nq: usize, basis: Basis, seed: u64) -> StateVector {
        StateVector::random(nq, basis, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    /// Dense matrix-vector product, row-major `n x n`.
    fn dense_apply(m: &[Complex64], v: &[Complex64]) -> Vec<Complex64> {
        let n = v.len();
        (0..n).map(|i| (0..n).map(|j| m[i * n + j] * v[j]).sum()).collect()
    }

    fn kron(a: &[Complex64], da: usize, b: &[Complex64], db: usize) -> Vec<Complex64> {
        let d = da * db;
        let mut out = vec![c(0.0, 0.0); d * d];
        for i in 0..da {
            for j in 0..da {
                for k in 0..db {
                    for l in 0..db {
                        out[(i * db + k) * d + (j * db + l)] = a[i * da + j] * b[k * db + l];
                    }
                }
            }
        }
        out
    }

    #[test]
    fn hadamard_examples() {
        let mut s = StateVector::computational(1, 0, Basis::Angle).unwrap();
        apply_hadamard(&mut s, 0).unwrap();
        let h = FRAC_1_SQRT_2;
        assert!(max_diff(s.amplitudes(), &[c(h, 0.0), c(h, 0.0)]) < 1e-15);

        let orig = random_state(4, Basis::Angle, 1);
        let mut twice = orig.clone();
        apply_hadamard(&mut twice, 2).unwrap();
        apply_hadamard(&mut twice, 2).unwrap();
        assert!(max_diff(orig.amplitudes(), twice.amplitudes()) < 1e-12);
        assert!(apply_hadamard(&mut twice, 4).is_err());
    }

    #[test]
    fn hadamard_matches_kronecker_product() {
        // H on the most significant qubit of 3: H (x) I (x) I in big-endian order.
        let h = FRAC_1_SQRT_2;
        let hm = [c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)];
        let id2 = [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
        let id4 = kron(&id2, 2, &id2, 2);
        let full = kron(&hm, 2, &id4, 4);
        let psi = random_state(3, Basis::Angle, 7);
        let expected = dense_apply(&full, psi.amplitudes());
        let mut out = psi.clone();
        apply_hadamard(&mut out, 2).unwrap();
        assert!(max_diff(out.amplitudes(), &expected) < 1e-14);
    }

    #[test]
    fn controlled_phase_examples() {
        let orig = random_state(3, Basis::Angle, 2);
        let mut s = orig.clone();
        apply_controlled_phase(&mut s, 0, 2, 0.0).unwrap();
        assert_eq!(s, orig);

        let mut u = StateVector::normalized(vec![c(1.0, 0.0); 4], Basis::Angle).unwrap();
        apply_controlled_phase(&mut u, 0, 1, PI).unwrap();
        let a = u.amplitudes();
        assert!((a[3] - c(-0.5, 0.0)).norm() < 1e-15);
        for j in 0..3 {
            assert!((a[j] - c(0.5, 0.0)).norm() < 1e-15);
        }

        let mut split = orig.clone();
        apply_controlled_phase(&mut split, 1, 2, 0.3).unwrap();
        apply_controlled_phase(&mut split, 2, 1, 0.9).unwrap();
        let mut joint = orig.clone();
        apply_controlled_phase(&mut joint, 1, 2, 1.2).unwrap();
        assert!(max_diff(split.amplitudes(), joint.amplitudes()) < 1e-14);

        assert!(apply_controlled_phase(&mut joint, 1, 1, 0.1).is_err());
        assert!(apply_controlled_phase(&mut joint, 0, 3, 0.1).is_err());
    }

    #[test]
    fn controlled_phase_touches_exactly_the_11_sector() {
        for nq in 2..6 {
            for q1 in 0..nq {
                for q2 in 0..nq {
                    if q1 == q2 {
                        continue;
                    }
                    let mut amps = vec![c(1.0, 0.0); 1 << nq];
                    controlled_phase_kernel(&mut amps, q1, q2, c(0.0, 1.0));
                    for (j, a) in amps.iter().enumerate() {
                        let both = (j >> q1) & 1 == 1 && (j >> q2) & 1 == 1;
                        assert_eq!(*a, if both { c(0.0, 1.0) } else { c(1.0, 0.0) });
                    }
                }
            }
        }
    }

    #[test]
    fn phase_examples() {
        let orig = random_state(3, Basis::Angle, 3);
        let mut s = orig.clone();
        apply_phase(&mut s, 1, TAU).unwrap();
        assert!(max_diff(s.amplitudes(), orig.amplitudes()) < 1e-12);

        let h = FRAC_1_SQRT_2;
        let mut p = StateVector::from_amplitudes(vec![c(h, 0.0), c(h, 0.0)], Basis::Angle).unwrap();
        apply_phase(&mut p, 0, PI / 2.0).unwrap();
        assert!(max_diff(p.amplitudes(), &[c(h, 0.0), c(0.0, h)]) < 1e-15);
        assert!(apply_phase(&mut p, 1, 0.1).is_err());
    }

    #[test]
    fn phase_matches_dense_diagonal() {
        // Dense 4x4 diagonal diag(1, e^{i phi}, 1, e^{i phi}) for qubit 0,
        // diag(1, 1, e^{i phi}, e^{i phi}) for qubit 1.
        let phi = 0.77;
        for q in 0..2 {
            let mut dense = vec![c(0.0, 0.0); 16];
            for j in 0..4 {
                dense[j * 4 + j] = if (j >> q) & 1 == 1 {
                    Complex64::cis(phi)
                } else {
                    c(1.0, 0.0)
                };
            }
            let psi = random_state(2, Basis::Angle, 11 + q as u64);
            let expected = dense_apply(&dense, psi.amplitudes());
            let mut out = psi.clone();
            apply_phase(&mut out, q, phi).unwrap();
            assert!(max_diff(out.amplitudes(), &expected) < 1e-15);
        }
    }

    fn dense_dft(n: usize, sign: f64) -> Vec<Complex64> {
        let norm = 1.0 / (n as f64).sqrt();
        let mut m = vec![c(0.0, 0.0); n * n];
        for j in 0..n {
            for l in 0..n {
                let ang = sign * TAU * ((j * l) % n) as f64 / n as f64;
                m[j * n + l] = Complex64::cis(ang) * norm;
            }
        }
        m
    }

    #[test]
    fn qft_of_delta_is_uniform() {
        let mut s = StateVector::computational(4, 0, Basis::Angle).unwrap();
        qft(&mut s, Direction::Forward).unwrap();
        assert_eq!(s.basis(), Basis::Momentum);
        for a in s.amplitudes() {
            assert!((a - c(0.25, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn qft_matches_dense_dft() {
        for nq in 1..=5 {
            let n = 1 << nq;
            for (direction, sign, basis) in [
                (Direction::Forward, -1.0, Basis::Angle),
                (Direction::Backward, 1.0, Basis::Momentum),
            ] {
                let psi = random_state(nq, basis, 100 + nq as u64);
                let expected = dense_apply(&dense_dft(n, sign), psi.amplitudes());
                let mut out = psi.clone();
                qft(&mut out, direction).unwrap();
                assert!(max_diff(out.amplitudes(), &expected) < 1e-12, "nq={nq} {direction:?}");
            }
        }
    }

    #[test]
    fn qft_round_trip_and_basis_checks() {
        let psi = random_state(6, Basis::Angle, 5);
        let mut s = psi.clone();
        qft(&mut s, Direction::Forward).unwrap();
        assert!(qft(&mut s, Direction::Forward).is_err());
        qft(&mut s, Direction::Backward).unwrap();
        assert_eq!(s.basis(), Basis::Angle);
        assert!(max_diff(s.amplitudes(), psi.amplitudes()) < 1e-12);
    }

    #[test]
    fn schedule_gate_counts() {
        for nq in 2..=10 {
            let sched = build_schedule(&MapParams::ergodic(nq).unwrap());
            assert_eq!(sched.hadamard_count(), 2 * nq);
            assert_eq!(sched.cp_count(), 3 * nq * nq - nq);
            assert_eq!(sched.counts().single_phase, 2 * nq);
            assert_eq!(sched.steps().iter().filter(|s| **s == Step::AfterFirstQft).count(), 1);
        }
    }

    #[test]
    fn schedule_cost_is_quadratic_in_qubits() {
        for nq in [4usize, 8] {
            let p = MapParams::ergodic(nq).unwrap();
            let sched = build_schedule(&p);
            let mut amps = vec![c(0.0, 0.0); p.dim()];
            amps[0] = c(1.0, 0.0);
            let updates = sched.run_ideal(&mut amps);
            let bound = (sched.counts().total() * p.dim()) as u64;
            assert!(updates <= bound);
            assert!(updates >= (nq * nq * p.dim() / 4) as u64);
        }
    }

    #[test]
    fn diagonal_segment_order_is_irrelevant() {
        let p = MapParams::ergodic(5).unwrap();
        let sched = build_schedule(&p);
        let mut permuted = sched.clone();
        // reverse every maximal run of diagonal gates
        let mut i = 0;
        while i < permuted.steps.len() {
            let is_diag = |s: &Step| matches!(s, Step::Gate(g) if g.is_diagonal());
            if is_diag(&permuted.steps[i]) {
                let start = i;
                while i < permuted.steps.len() && is_diag(&permuted.steps[i]) {
                    i += 1;
                }
                permuted.steps[start..i].reverse();
            } else {
                i += 1;
            }
        }
        assert_ne!(permuted.steps, sched.steps);
        let psi = random_state(5, Basis::Momentum, 9);
        let mut a = psi.amplitudes().to_vec();
        let mut b = psi.amplitudes().to_vec();
        sched.run_ideal(&mut a);
        permuted.run_ideal(&mut b);
        assert!(max_diff(&a, &b) < 1e-12);
    }

    #[test]
    fn trace_format() {
        let sched = build_schedule(&MapParams::ergodic(2).unwrap());
        let mut buf = Vec::new();
        sched.write_trace(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), sched.counts().total());
        assert_eq!(lines[0], r#"{"kind":"H","t":[1]}"#);
        let v: serde_json::Value = serde_json::from_str(lines[1]).unwrap();
        assert_eq!(v["kind"], "CP");
        assert_eq!(v["t"], serde_json::json!([0, 1]));
        assert!((v["phi"].as_f64().unwrap() - PI / 2.0).abs() < 1e-15);
    }

    proptest::proptest! {
        #[test]
        fn kernels_preserve_norm(seed in 0u64..500, nq in 2usize..8, phi in -7.0f64..7.0) {
            let psi = random_state(nq, Basis::Angle, seed);
            let q1 = (seed as usize) % nq;
            let q2 = (q1 + 1 + (seed as usize / 7) % (nq - 1)) % nq;
            let mut s = psi.clone();
            apply_hadamard(&mut s, q1).unwrap();
            proptest::prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
            apply_phase(&mut s, q2, phi).unwrap();
            proptest::prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
            apply_controlled_phase(&mut s, q1, q2, phi).unwrap();
            proptest::prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
            let overlap = inner_product(&psi, &psi).unwrap();
            proptest::prop_assert!((overlap.re - 1.0).abs() < 1e-12);
        }
    }
}
