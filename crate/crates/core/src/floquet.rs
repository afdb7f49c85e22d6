//! The one-kick Floquet operator as a dense matrix, its certified
//! eigendecomposition, and level tracking through an imperfection sweep.

use std::f64::consts::PI;
use std::io::Write;

use faer::linalg::matmul::matmul;
use faer::{c64, Accum, Mat, MatRef, Par};
use rayon::prelude::*;

use crate::error::{contract, Error, Result};
use crate::imperfect::Imperfection;
use crate::register::{Basis, MapParams, StateVector};
use crate::sawtooth::{CircuitKick, IdealKick};

/// Largest dimension for which a dense Floquet matrix is built by default.
pub const DEFAULT_MAX_DIM: usize = 1 << 12;
/// Certification bound on eigen-residuals and orthonormality.
pub const CERTIFICATION_TOLERANCE: f64 = 1e-8;
/// Input matrices must be unitary to this accuracy.
pub const UNITARITY_PRECONDITION: f64 = 1e-6;
/// Eigenphases closer than this are treated as one degenerate cluster.
pub const DEGENERACY_GAP: f64 = 1e-10;
/// Continuation steps whose best overlap falls below this are flagged.
pub const CONTINUATION_THRESHOLD: f64 = 0.5;

fn check_dim(params: &MapParams, max_dim: usize) -> Result<()> {
    if params.dim() > max_dim {
        return Err(Error::Resource(format!(
            "dense Floquet matrix of dimension {} exceeds the limit {max_dim}; \
             use fewer qubits or a fidelity-only run",
            params.dim()
        )));
    }
    Ok(())
}

fn matrix_from_columns<F>(dim: usize, column: F) -> Mat<c64>
where
    F: Fn(&mut [c64]) + Sync,
{
    let columns: Vec<Vec<c64>> = (0..dim)
        .into_par_iter()
        .map(|j| {
            let mut col = vec![c64::new(0.0, 0.0); dim];
            col[j] = c64::new(1.0, 0.0);
            column(&mut col);
            col
        })
        .collect();
    Mat::from_fn(dim, dim, |i, j| columns[j][i])
}

/// Floquet matrix of the gate-level kick: column `j` is the kick applied to
/// momentum basis state `j`.
pub fn build_floquet_matrix(params: &MapParams, imperfection: Option<&Imperfection>) -> Result<Mat<c64>> {
    build_floquet_matrix_with_limit(params, imperfection, DEFAULT_MAX_DIM)
}

pub fn build_floquet_matrix_with_limit(
    params: &MapParams,
    imperfection: Option<&Imperfection>,
    max_dim: usize,
) -> Result<Mat<c64>> {
    check_dim(params, max_dim)?;
    let kick = CircuitKick::new(params, imperfection.map(Imperfection::as_pair))?;
    Ok(matrix_from_columns(params.dim(), |col| kick.apply(col)))
}

/// Floquet matrix of the exact split-operator kick.
pub fn build_split_operator_matrix(params: &MapParams) -> Result<Mat<c64>> {
    check_dim(params, DEFAULT_MAX_DIM)?;
    let kick = IdealKick::new(params);
    Ok(matrix_from_columns(params.dim(), |col| kick.apply(col)))
}

/// `max |U^dag U - I|`.
pub fn unitarity_defect(u: MatRef<'_, c64>) -> f64 {
    let n = u.ncols();
    let mut gram = Mat::<c64>::zeros(n, n);
    matmul(&mut gram, Accum::Replace, u.adjoint(), u, c64::new(1.0, 0.0), Par::Seq);
    identity_defect(gram.as_ref())
}

fn identity_defect(m: MatRef<'_, c64>) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let target = if i == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) };
            worst = worst.max((m[(i, j)] - target).norm());
        }
    }
    worst
}

/// Eigenphases and orthonormal eigenvectors of a one-kick unitary.
#[derive(Debug, Clone)]
pub struct FloquetSpectrum {
    eigenphases: Vec<f64>,
    eigenvectors: Mat<c64>,
    max_residual: f64,
    orthonormality_defect: f64,
}

impl FloquetSpectrum {
    pub fn dim(&self) -> usize {
        self.eigenphases.len()
    }

    /// Eigenphases in `(-pi, pi]`, ascending.
    pub fn eigenphases(&self) -> &[f64] {
        &self.eigenphases
    }

    /// Eigenvectors as matrix columns, in eigenphase order.
    pub fn eigenvectors(&self) -> MatRef<'_, c64> {
        self.eigenvectors.as_ref()
    }

    pub fn eigenvector_slice(&self, alpha: usize) -> &[c64] {
        self.eigenvectors.col_as_slice(alpha)
    }

    /// Eigenvector `alpha` as a momentum-basis state.
    pub fn eigenvector(&self, alpha: usize) -> StateVector {
        let amps = self.eigenvector_slice(alpha).to_vec();
        let n_qubits = amps.len().trailing_zeros() as usize;
        StateVector::from_parts(n_qubits, amps, Basis::Momentum)
    }

    /// `max_alpha |U phi_alpha - e^{i lambda_alpha} phi_alpha|`.
    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }

    /// `max |Phi^dag Phi - I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        self.orthonormality_defect
    }
}

/// Eigendecomposes a unitary and certifies the result.
///
/// Near-degenerate clusters (gaps below [`DEGENERACY_GAP`]) are returned with
/// an arbitrary orthonormal basis of the cluster subspace. Each eigenvector is
/// rotated so its largest component is real and positive.
pub fn eigendecompose(u: MatRef<'_, c64>) -> Result<FloquetSpectrum> {
    let n = u.nrows();
    if u.ncols() != n || n == 0 {
        return Err(contract(format!("matrix is {}x{}, not square", n, u.ncols())));
    }
    let defect = unitarity_defect(u);
    if !(defect < UNITARITY_PRECONDITION) {
        return Err(contract(format!("matrix is not unitary (defect {defect:.3e})")));
    }
    let evd = u.eigen().map_err(|e| Error::Certification {
        message: format!("eigensolver failed: {e:?}"),
        residual: f64::INFINITY,
    })?;
    let values = evd.S().column_vector();
    let vectors = evd.U();

    let mut order: Vec<(f64, usize)> = (0..n)
        .map(|k| {
            let phase = values[k].arg();
            (if phase <= -PI { PI } else { phase }, k)
        })
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let eigenphases: Vec<f64> = order.iter().map(|(p, _)| *p).collect();
    let mut phi = Mat::from_fn(n, n, |i, j| vectors[(i, order[j].1)]);
    for j in 0..n {
        normalize(phi.col_as_slice_mut(j));
    }
    for cluster in degenerate_clusters(&eigenphases) {
        orthonormalize_cluster(&mut phi, &cluster);
    }
    for j in 0..n {
        fix_gauge(phi.col_as_slice_mut(j));
    }

    let mut image = Mat::<c64>::zeros(n, n);
    matmul(
        &mut image,
        Accum::Replace,
        u,
        phi.as_ref(),
        c64::new(1.0, 0.0),
        Par::Seq,
    );
    let max_residual = (0..n)
        .map(|j| {
            let lambda = c64::cis(eigenphases[j]);
            (0..n)
                .map(|i| (image[(i, j)] - lambda * phi[(i, j)]).norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max);
    let mut gram = Mat::<c64>::zeros(n, n);
    matmul(
        &mut gram,
        Accum::Replace,
        phi.adjoint(),
        phi.as_ref(),
        c64::new(1.0, 0.0),
        Par::Seq,
    );
    let orthonormality_defect = identity_defect(gram.as_ref());

    if !(max_residual < CERTIFICATION_TOLERANCE) {
        return Err(Error::Certification {
            message: "eigen-residual above tolerance".into(),
            residual: max_residual,
        });
    }
    if !(orthonormality_defect < CERTIFICATION_TOLERANCE) {
        return Err(Error::Certification {
            message: format!("eigenvectors not orthonormal (defect {orthonormality_defect:.3e})"),
            residual: max_residual,
        });
    }
    Ok(FloquetSpectrum {
        eigenphases,
        eigenvectors: phi,
        max_residual,
        orthonormality_defect,
    })
}

/// Builds and diagonalizes the gate-level Floquet operator.
pub fn floquet_spectrum(params: &MapParams, imperfection: Option<&Imperfection>) -> Result<FloquetSpectrum> {
    eigendecompose(build_floquet_matrix(params, imperfection)?.as_ref())
}

fn normalize(v: &mut [c64]) {
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

fn fix_gauge(v: &mut [c64]) {
    let (mut best, mut mag) = (c64::new(1.0, 0.0), -1.0);
    for x in v.iter() {
        let m = x.norm_sqr();
        if m > mag {
            mag = m;
            best = *x;
        }
    }
    if mag > 0.0 {
        let rot = best.conj() / best.norm();
        v.iter_mut().for_each(|x| *x *= rot);
    }
}

/// Index groups of consecutive sorted phases closer than [`DEGENERACY_GAP`],
/// including across the branch cut at `+-pi`.
fn degenerate_clusters(phases: &[f64]) -> Vec<Vec<usize>> {
    let n = phases.len();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut current = vec![0];
    for k in 1..n {
        if phases[k] - phases[k - 1] < DEGENERACY_GAP {
            current.push(k);
        } else {
            clusters.push(std::mem::take(&mut current));
            current.push(k);
        }
    }
    clusters.push(current);
    if clusters.len() > 1 && phases[0] + 2.0 * PI - phases[n - 1] < DEGENERACY_GAP {
        let first = clusters.remove(0);
        clusters.last_mut().unwrap().extend(first);
    }
    clusters.retain(|c| c.len() > 1);
    clusters
}

/// Modified Gram-Schmidt over the given columns.
fn orthonormalize_cluster(phi: &mut Mat<c64>, cluster: &[usize]) {
    for (pos, &j) in cluster.iter().enumerate() {
        for &k in &cluster[..pos] {
            let proj: c64 = phi
                .col_as_slice(k)
                .iter()
                .zip(phi.col_as_slice(j))
                .map(|(a, b)| a.conj() * b)
                .sum();
            let basis: Vec<c64> = phi.col_as_slice(k).to_vec();
            phi.col_as_slice_mut(j)
                .iter_mut()
                .zip(&basis)
                .for_each(|(x, b)| *x -= proj * b);
        }
        normalize(phi.col_as_slice_mut(j));
    }
}

/// Eigenphase branches of a one-parameter family, continued by eigenvector overlap.
#[derive(Debug, Clone)]
pub struct SpectralSweep {
    pub epsilons: Vec<f64>,
    /// `levels[k][b]`: eigenvalue index (in sorted order) followed by branch `b` at grid point `k`.
    pub levels: Vec<Vec<usize>>,
    /// `phases[k][b]`: eigenphase of branch `b` at grid point `k`.
    pub phases: Vec<Vec<f64>>,
    /// `overlaps[k][b]`: `|<phi_b(eps_{k-1}) | phi_b(eps_k)>|`; `None` at `k = 0`.
    pub overlaps: Vec<Vec<Option<f64>>>,
}

impl SpectralSweep {
    pub fn n_branches(&self) -> usize {
        self.phases.first().map_or(0, Vec::len)
    }

    /// Whether the continuation of branch `b` into grid point `k` was ambiguous.
    pub fn flagged(&self, k: usize, b: usize) -> bool {
        self.overlaps[k][b].is_some_and(|o| o < CONTINUATION_THRESHOLD)
    }

    /// Epsilon of the first flagged step of branch `b`, if any.
    pub fn first_flag(&self, b: usize) -> Option<f64> {
        (1..self.epsilons.len())
            .find(|&k| self.flagged(k, b))
            .map(|k| self.epsilons[k])
    }

    /// Header plus one row per (grid point, branch).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "eps,branch_id,eigenphase,continuation_overlap,flagged")?;
        for (k, eps) in self.epsilons.iter().enumerate() {
            for b in 0..self.n_branches() {
                let overlap = self.overlaps[k][b].map_or(String::new(), |o| format!("{o:.12e}"));
                writeln!(
                    out,
                    "{eps:.12e},{b},{:.15e},{overlap},{}",
                    self.phases[k][b],
                    self.flagged(k, b)
                )?;
            }
        }
        Ok(())
    }
}

/// Diagonalizes the Floquet operator at each grid point for one frozen
/// realization (only epsilon scales) and continues every ε=first-point level
/// by maximal eigenvector overlap.
pub fn sweep_spectrum(
    params: &MapParams,
    imperfection: &Imperfection,
    eps_grid: &[f64],
) -> Result<(SpectralSweep, Vec<FloquetSpectrum>)> {
    if eps_grid.is_empty() {
        return Err(crate::error::domain("empty epsilon grid"));
    }
    if eps_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(crate::error::domain("epsilon grid must be ascending"));
    }
    let spectra = eps_grid
        .iter()
        .map(|&eps| floquet_spectrum(params, Some(&imperfection.at_epsilon(eps)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok((continue_levels(eps_grid, &spectra), spectra))
}

/// Level continuation over precomputed spectra.
pub fn continue_levels(eps_grid: &[f64], spectra: &[FloquetSpectrum]) -> SpectralSweep {
    let n = spectra[0].dim();
    let mut levels = vec![(0..n).collect::<Vec<_>>()];
    let mut overlaps = vec![vec![None; n]];
    for k in 1..spectra.len() {
        let (prev, next) = (&spectra[k - 1], &spectra[k]);
        let mut ov = Mat::<c64>::zeros(n, n);
        matmul(
            &mut ov,
            Accum::Replace,
            prev.eigenvectors().adjoint(),
            next.eigenvectors(),
            c64::new(1.0, 0.0),
            Par::Seq,
        );
        let (assign, weights) = assign_branches(&levels[k - 1], |a, b| ov[(a, b)].norm());
        levels.push(assign);
        overlaps.push(weights.into_iter().map(Some).collect());
    }
    let phases = levels
        .iter()
        .zip(spectra)
        .map(|(lv, s)| lv.iter().map(|&i| s.eigenphases()[i]).collect())
        .collect();
    SpectralSweep {
        epsilons: eps_grid.to_vec(),
        levels,
        phases,
        overlaps,
    }
}

/// Greedy maximal-overlap matching of branches (at levels `from`) onto new levels.
fn assign_branches<F: Fn(usize, usize) -> f64>(from: &[usize], overlap: F) -> (Vec<usize>, Vec<f64>) {
    const CANDIDATES: usize = 4;
    let n = from.len();
    let mut pairs = Vec::with_capacity(n * CANDIDATES);
    for (b, &lvl) in from.iter().enumerate() {
        let mut best: Vec<(f64, usize)> = (0..n).map(|m| (overlap(lvl, m), m)).collect();
        let keep = CANDIDATES.min(n);
        best.select_nth_unstable_by(keep - 1, |a, b| b.0.total_cmp(&a.0));
        pairs.extend(best[..keep].iter().map(|&(w, m)| (w, b, m)));
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut target = vec![usize::MAX; n];
    let mut weight = vec![0.0; n];
    let mut taken = vec![false; n];
    for (w, b, m) in pairs {
        if target[b] == usize::MAX && !taken[m] {
            target[b] = m;
            weight[b] = w;
            taken[m] = true;
        }
    }
    for b in 0..n {
        if target[b] == usize::MAX {
            let (w, m) = (0..n)
                .filter(|&m| !taken[m])
                .map(|m| (overlap(from[b], m), m))
                .max_by(|a, b| a.0.total_cmp(&b.0))
                .expect("a free level remains for every unassigned branch");
            target[b] = m;
            weight[b] = w;
            taken[m] = true;
        }
    }
    (target, weight)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imperfect::{DisorderRealization, ImperfectionSpec};

    fn max_abs_diff(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..a.ncols() {
            for i in 0..a.nrows() {
                worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
            }
        }
        worst
    }

    #[test]
    fn gate_and_split_operator_matrices_agree() {
        for nq in 2..=6 {
            let p = MapParams::ergodic(nq).unwrap();
            let gate = build_floquet_matrix(&p, None).unwrap();
            let split = build_split_operator_matrix(&p).unwrap();
            assert!(max_abs_diff(gate.as_ref(), split.as_ref()) < 1e-10);
            assert!(unitarity_defect(gate.as_ref()) < 1e-8);
        }
    }

    #[test]
    fn zero_disorder_matrix_is_the_perfect_one() {
        let p = MapParams::ergodic(4).unwrap();
        let imp = Imperfection {
            spec: ImperfectionSpec::static_chain(0.0, 0.0).unwrap(),
            realization: DisorderRealization::zero(4),
        };
        let a = build_floquet_matrix(&p, Some(&imp)).unwrap();
        let b = build_floquet_matrix(&p, None).unwrap();
        assert_eq!(max_abs_diff(a.as_ref(), b.as_ref()), 0.0);
    }

    #[test]
    fn dimension_limit() {
        let p = MapParams::ergodic(6).unwrap();
        assert!(matches!(
            build_floquet_matrix_with_limit(&p, None, 32),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn identity_spectrum() {
        let id = Mat::<c64>::identity(8, 8);
        let s = eigendecompose(id.as_ref()).unwrap();
        assert!(s.eigenphases().iter().all(|&l| l == 0.0));
        assert_eq!(s.max_residual(), 0.0);
        assert!(s.orthonormality_defect() < 1e-14);
    }

    #[test]
    fn diagonal_spectrum() {
        let mus = [0.3, -2.0, 1.7, 3.0, -0.1];
        let d = Mat::from_fn(5, 5, |i, j| if i == j { c64::cis(mus[i]) } else { c64::new(0.0, 0.0) });
        let s = eigendecompose(d.as_ref()).unwrap();
        let mut sorted = mus.to_vec();
        sorted.sort_by(f64::total_cmp);
        for (a, b) in s.eigenphases().iter().zip(&sorted) {
            assert!((a - b).abs() < 1e-14);
        }
        for alpha in 0..5 {
            let v = s.eigenvector_slice(alpha);
            let k = mus.iter().position(|m| (m - sorted[alpha]).abs() < 1e-14).unwrap();
            assert!((v[k] - c64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn non_unitary_input_is_rejected() {
        let m = Mat::from_fn(3, 3, |i, j| c64::new((i + j) as f64, 0.0));
        assert!(matches!(eigendecompose(m.as_ref()), Err(Error::Contract(_))));
    }

    #[test]
    fn eigenphases_agree_between_constructions() {
        let p = MapParams::ergodic(4).unwrap();
        let a = eigendecompose(build_floquet_matrix(&p, None).unwrap().as_ref()).unwrap();
        let b = eigendecompose(build_split_operator_matrix(&p).unwrap().as_ref()).unwrap();
        for (x, y) in a.eigenphases().iter().zip(b.eigenphases()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_cluster_is_orthonormalized() {
        // U = V diag(1, 1, e^{0.5i}, e^{-1i}) V^dag for a dense unitary V.
        let p = MapParams::ergodic(2).unwrap();
        let v = build_split_operator_matrix(&p).unwrap();
        let phases = [0.0, 0.0, 0.5, -1.0];
        let d = Mat::from_fn(4, 4, |i, j| {
            if i == j {
                c64::cis(phases[i])
            } else {
                c64::new(0.0, 0.0)
            }
        });
        let u = v.as_ref() * d.as_ref() * v.adjoint();
        let s = eigendecompose(u.as_ref()).unwrap();
        assert!(s.max_residual() < 1e-12);
        assert!(s.orthonormality_defect() < 1e-12);
        let zeros = s.eigenphases().iter().filter(|l| l.abs() < 1e-12).count();
        assert_eq!(zeros, 2);
    }

    #[test]
    fn clusters_wrap_around_the_branch_cut() {
        let phases = [-PI + 1e-12, -0.5, 0.2, 0.2 + 1e-12, PI];
        let clusters = degenerate_clusters(&phases);
        assert_eq!(clusters, vec![vec![2, 3], vec![4, 0]]);
    }

    #[test]
    fn sweep_trivial_grids() {
        let p = MapParams::ergodic(4).unwrap();
        let imp = Imperfection::sample(ImperfectionSpec::static_chain(1.0, 0.0).unwrap(), 4, 3).unwrap();
        let (sweep, spectra) = sweep_spectrum(&p, &imp, &[0.0]).unwrap();
        assert_eq!(sweep.epsilons.len(), 1);
        assert!(sweep.overlaps[0].iter().all(Option::is_none));
        assert_eq!(sweep.phases[0], spectra[0].eigenphases());

        let (same, _) = sweep_spectrum(&p, &imp, &[1e-3, 1e-3]).unwrap();
        for b in 0..16 {
            assert!((same.overlaps[1][b].unwrap() - 1.0).abs() < 1e-10);
            assert_eq!(same.levels[1][b], b);
        }
        assert!(sweep_spectrum(&p, &imp, &[1e-3, 0.0]).is_err());
    }

    #[test]
    fn sweep_csv_rows() {
        let p = MapParams::ergodic(4).unwrap();
        let imp = Imperfection::sample(ImperfectionSpec::static_chain(1.0, 0.0).unwrap(), 4, 3).unwrap();
        let (sweep, _) = sweep_spectrum(&p, &imp, &[0.0, 1e-3, 2e-3]).unwrap();
        let mut buf = Vec::new();
        sweep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 3 * 16);
        assert!(text.starts_with("eps,branch_id,eigenphase,continuation_overlap,flagged\n"));
    }
}
