//! Python module `qsaw`: map parameters, states, kicks, imperfections,
//! Floquet spectra and the diagnostics built on them.

use pyo3::prelude::*;

#[pymodule]
mod qsaw {
    use num_complex::Complex64;
    use pyo3::exceptions::{PyMemoryError, PyRuntimeError, PyValueError};
    use pyo3::prelude::*;
    use pyo3::types::PyDict;

    use qsaw_core::diagnostics::{
        self, eigenstate_entropy, entropy_scan, fidelity_series, overlap_matrix, parity_sectors, spacing_statistics,
        Formula, InitialState, ModelKind, TheoryPrediction,
    };
    use qsaw_core::floquet;
    use qsaw_core::gates::build_schedule;
    use qsaw_core::imperfect::{self, ImperfectionSpec, ImpuritySite};
    use qsaw_core::{sawtooth, Basis, SeedPlan};

    fn err(e: qsaw_core::Error) -> PyErr {
        match e {
            qsaw_core::Error::Domain(_) | qsaw_core::Error::Contract(_) => PyValueError::new_err(e.to_string()),
            qsaw_core::Error::Resource(_) => PyMemoryError::new_err(e.to_string()),
            _ => PyRuntimeError::new_err(e.to_string()),
        }
    }

    /// Register size and chaos parameter K (period T = 2 pi / N).
    #[pyclass(frozen, from_py_object, name = "MapParams")]
    #[derive(Clone)]
    struct MapParams {
        inner: qsaw_core::MapParams,
    }

    #[pymethods]
    impl MapParams {
        #[new]
        #[pyo3(signature = (n_qubits, chaos = std::f64::consts::SQRT_2))]
        fn new(n_qubits: usize, chaos: f64) -> PyResult<Self> {
            Ok(Self {
                inner: qsaw_core::MapParams::new(n_qubits, chaos).map_err(err)?,
            })
        }

        #[getter]
        fn n_qubits(&self) -> usize {
            self.inner.n_qubits()
        }

        #[getter]
        fn dim(&self) -> usize {
            self.inner.dim()
        }

        #[getter]
        fn chaos(&self) -> f64 {
            self.inner.chaos()
        }

        #[getter]
        fn period(&self) -> f64 {
            self.inner.period()
        }

        /// Hadamard, controlled-phase and single-qubit phase gates per kick.
        fn gate_counts<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
            let c = build_schedule(&self.inner).counts();
            let d = PyDict::new(py);
            d.set_item("hadamard", c.hadamard)?;
            d.set_item("controlled_phase", c.controlled_phase)?;
            d.set_item("single_phase", c.single_phase)?;
            Ok(d)
        }

        fn __repr__(&self) -> String {
            format!(
                "MapParams(n_qubits={}, chaos={})",
                self.inner.n_qubits(),
                self.inner.chaos()
            )
        }
    }

    /// A register state in the momentum basis.
    #[pyclass(frozen, from_py_object, name = "State")]
    #[derive(Clone)]
    struct State {
        inner: qsaw_core::StateVector,
    }

    #[pymethods]
    impl State {
        /// Normalizes the given momentum-basis amplitudes.
        #[new]
        fn new(amplitudes: Vec<Complex64>) -> PyResult<Self> {
            Ok(Self {
                inner: qsaw_core::StateVector::normalized(amplitudes, Basis::Momentum).map_err(err)?,
            })
        }

        /// Momentum eigenstate |n>.
        #[staticmethod]
        fn momentum(params: &MapParams, n: i64) -> PyResult<Self> {
            Ok(Self {
                inner: qsaw_core::basis_state(&params.inner, n).map_err(err)?,
            })
        }

        fn amplitudes(&self) -> Vec<Complex64> {
            self.inner.amplitudes().to_vec()
        }

        fn overlap(&self, other: &State) -> PyResult<Complex64> {
            qsaw_core::inner_product(&self.inner, &other.inner).map_err(err)
        }

        fn __len__(&self) -> usize {
            self.inner.dim()
        }
    }

    /// Static imperfections with one frozen realization.
    #[pyclass(frozen, from_py_object, name = "Imperfection")]
    #[derive(Clone)]
    struct Imperfection {
        inner: imperfect::Imperfection,
    }

    #[pymethods]
    impl Imperfection {
        /// Detunings uniform in [-eps/2, eps/2], couplings uniform in [-J, J]
        /// with J = j_ratio * eps.
        #[staticmethod]
        #[pyo3(signature = (n_qubits, epsilon, j_ratio = 0.0, seed = 0))]
        fn static_chain(n_qubits: usize, epsilon: f64, j_ratio: f64, seed: u64) -> PyResult<Self> {
            let spec = ImperfectionSpec::static_chain(epsilon, j_ratio).map_err(err)?;
            Ok(Self {
                inner: imperfect::Imperfection::sample(spec, n_qubits, seed).map_err(err)?,
            })
        }

        /// One detuned qubit for one gate interval per kick; `qubit=None`
        /// draws it from the seed.
        #[staticmethod]
        #[pyo3(signature = (n_qubits, epsilon, qubit = None, seed = 0))]
        fn single_impurity(n_qubits: usize, epsilon: f64, qubit: Option<usize>, seed: u64) -> PyResult<Self> {
            let site = qubit.map_or(ImpuritySite::Random, ImpuritySite::Fixed);
            let spec = ImperfectionSpec::single_impurity(epsilon, site).map_err(err)?;
            Ok(Self {
                inner: imperfect::Imperfection::sample(spec, n_qubits, seed).map_err(err)?,
            })
        }

        /// The same realization rescaled to strength `epsilon`.
        fn at_epsilon(&self, epsilon: f64) -> PyResult<Self> {
            Ok(Self {
                inner: self.inner.at_epsilon(epsilon).map_err(err)?,
            })
        }

        #[getter]
        fn epsilon(&self) -> f64 {
            self.inner.epsilon()
        }

        #[getter]
        fn deltas(&self) -> Vec<f64> {
            self.inner.realization.deltas.clone()
        }

        #[getter]
        fn couplings(&self) -> Vec<f64> {
            self.inner.realization.couplings.clone()
        }
    }

    /// Eigenphases (ascending, in (-pi, pi]) and eigenvectors of one kick.
    #[pyclass(frozen, name = "FloquetSpectrum")]
    struct FloquetSpectrum {
        inner: floquet::FloquetSpectrum,
    }

    #[pymethods]
    impl FloquetSpectrum {
        #[getter]
        fn eigenphases(&self) -> Vec<f64> {
            self.inner.eigenphases().to_vec()
        }

        fn eigenvector(&self, index: usize) -> PyResult<State> {
            if index >= self.inner.dim() {
                return Err(PyValueError::new_err(format!(
                    "index {index} outside 0..{}",
                    self.inner.dim()
                )));
            }
            Ok(State {
                inner: self.inner.eigenvector(index),
            })
        }

        #[getter]
        fn max_residual(&self) -> f64 {
            self.inner.max_residual()
        }

        #[getter]
        fn orthonormality_defect(&self) -> f64 {
            self.inner.orthonormality_defect()
        }

        /// Entropy of each of this spectrum's eigenstates over `reference`.
        fn entropies(&self, reference: &FloquetSpectrum) -> PyResult<Vec<f64>> {
            overlap_matrix(&reference.inner, &self.inner)
                .and_then(|m| m.entropies())
                .map_err(err)
        }

        /// Kolmogorov distances of the parity-resolved spacing distribution
        /// to the Wigner surmise and to Poisson.
        fn spacing_distances(&self) -> PyResult<(f64, f64)> {
            let (even, odd) = parity_sectors(&self.inner).map_err(err)?;
            let st = spacing_statistics(&[&even, &odd]).map_err(err)?;
            Ok((st.ks_wigner, st.ks_poisson))
        }

        fn __len__(&self) -> usize {
            self.inner.dim()
        }
    }

    /// Exact split-operator kick.
    #[pyfunction]
    fn ideal_kick(state: &State, params: &MapParams) -> PyResult<State> {
        Ok(State {
            inner: sawtooth::ideal_kick(&state.inner, &params.inner).map_err(err)?,
        })
    }

    /// Gate-by-gate kick, with imperfections if given.
    #[pyfunction]
    #[pyo3(signature = (state, params, imperfection = None))]
    fn circuit_kick(state: &State, params: &MapParams, imperfection: Option<&Imperfection>) -> PyResult<State> {
        let imp = imperfection.map(|i| i.inner.as_pair());
        Ok(State {
            inner: sawtooth::circuit_kick(&state.inner, &params.inner, imp).map_err(err)?,
        })
    }

    #[pyfunction]
    #[pyo3(signature = (params, imperfection = None))]
    fn floquet_spectrum(params: &MapParams, imperfection: Option<&Imperfection>) -> PyResult<FloquetSpectrum> {
        Ok(FloquetSpectrum {
            inner: floquet::floquet_spectrum(&params.inner, imperfection.map(|i| &i.inner)).map_err(err)?,
        })
    }

    /// Shannon entropy (bits) of a probability vector.
    #[pyfunction]
    fn entropy(weights: Vec<f64>) -> PyResult<f64> {
        eigenstate_entropy(&weights).map_err(err)
    }

    /// Mean eigenstate entropy per strength, as (epsilon, mean, stderr) tuples.
    #[pyfunction]
    #[pyo3(signature = (params, eps_grid, model = "static", realizations = 10, seed = 1, j_ratio = 0.0))]
    fn mean_entropy(
        params: &MapParams,
        eps_grid: Vec<f64>,
        model: &str,
        realizations: usize,
        seed: u64,
        j_ratio: f64,
    ) -> PyResult<Vec<(f64, f64, f64)>> {
        let spec = match model.parse::<ModelKind>().map_err(err)? {
            ModelKind::Static => ImperfectionSpec::static_chain(1.0, j_ratio),
            ModelKind::Single => ImperfectionSpec::single_impurity(1.0, ImpuritySite::Random),
        }
        .map_err(err)?;
        let scan = entropy_scan(&params.inner, &spec, &eps_grid, realizations, SeedPlan::new(seed)).map_err(err)?;
        Ok(scan.points.iter().map(|p| (p.epsilon, p.mean_s, p.stderr_s)).collect())
    }

    /// f(t) for t = 0..t_max from `init` ("eig:IDX" or "mom:N").
    #[pyfunction]
    #[pyo3(signature = (params, imperfection, init = "eig:0", t_max = 1000))]
    fn fidelity(
        params: &MapParams,
        imperfection: Option<&Imperfection>,
        init: &str,
        t_max: usize,
    ) -> PyResult<Vec<f64>> {
        let init: InitialState = init.parse().map_err(err)?;
        let psi = init.resolve(&params.inner).map_err(err)?;
        let s = fidelity_series(&params.inner, imperfection.map(|i| &i.inner), &psi, t_max).map_err(err)?;
        Ok(s.f)
    }

    /// Husimi density as rows of p (from -pi) by columns of theta (from 0),
    /// with its parity-symmetry deviation.
    #[pyfunction]
    #[pyo3(signature = (state, n_theta = 64, n_p = 64, s = 1.0))]
    fn husimi(state: &State, n_theta: usize, n_p: usize, s: f64) -> PyResult<(Vec<Vec<f64>>, f64)> {
        let h = diagnostics::husimi(&state.inner, n_theta, n_p, s).map_err(err)?;
        let rows = h.values.chunks(n_theta).map(<[f64]>::to_vec).collect();
        Ok((rows, h.symmetry_deviation()))
    }

    /// Closed-form predictions: entropy_single, entropy_static,
    /// threshold_single, threshold_static, gamma, tau_chi.
    #[pyfunction]
    #[pyo3(signature = (formula, epsilon, n_qubits, model = "static", a = 0.37, b = 0.25))]
    fn predict(formula: &str, epsilon: f64, n_qubits: usize, model: &str, a: f64, b: f64) -> PyResult<f64> {
        let formula = match formula {
            "entropy_single" => Formula::EntropySingle,
            "entropy_static" => Formula::EntropyStatic,
            "threshold_single" => Formula::ThresholdSingle,
            "threshold_static" => Formula::ThresholdStatic,
            "gamma" => Formula::Gamma,
            "tau_chi" => Formula::TauChi,
            other => return Err(PyValueError::new_err(format!("unknown formula '{other}'"))),
        };
        let t = TheoryPrediction {
            model: model.parse().map_err(err)?,
            constants: diagnostics::Constants::new(a, b).map_err(err)?,
        };
        t.predict(formula, epsilon, n_qubits).map_err(err)
    }
}
