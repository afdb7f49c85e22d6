//! Overlaps between perturbed and unperturbed eigenbases and the eigenstate entropy.

use faer::linalg::matmul::matmul;
use faer::{c64, Accum, Mat, Par};

use crate::error::{contract, Result};
use crate::floquet::FloquetSpectrum;

/// `p[alpha][beta] = |<phi_beta^(0) | phi_alpha^(eps)>|^2`, stored row-major.
#[derive(Debug, Clone)]
pub struct OverlapMatrix {
    dim: usize,
    p: Vec<f64>,
}

impl OverlapMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, alpha: usize, beta: usize) -> f64 {
        self.p[alpha * self.dim + beta]
    }

    /// Weights of perturbed state `alpha` over the unperturbed basis.
    pub fn row(&self, alpha: usize) -> &[f64] {
        &self.p[alpha * self.dim..(alpha + 1) * self.dim]
    }

    /// Weights of unperturbed state `beta` over the perturbed basis.
    pub fn column(&self, beta: usize) -> Vec<f64> {
        self.rows().map(|row| row[beta]).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.p.chunks_exact(self.dim)
    }

    /// Largest `|row sum - 1|` and `|column sum - 1|`.
    pub fn stochastic_defect(&self) -> f64 {
        let mut cols = vec![0.0; self.dim];
        let mut worst: f64 = 0.0;
        for row in self.rows() {
            worst = worst.max((row.iter().sum::<f64>() - 1.0).abs());
            cols.iter_mut().zip(row).for_each(|(c, x)| *c += x);
        }
        cols.iter().fold(worst, |w, c| w.max((c - 1.0).abs()))
    }

    /// Entropy of every perturbed eigenstate.
    pub fn entropies(&self) -> Result<Vec<f64>> {
        self.rows().map(eigenstate_entropy).collect()
    }

    /// Mean entropy over all perturbed eigenstates.
    pub fn mean_entropy(&self) -> Result<f64> {
        Ok(self.entropies()?.iter().sum::<f64>() / self.dim as f64)
    }
}

/// Overlap weights of the perturbed spectrum `perturbed` on `unperturbed`.
pub fn overlap_matrix(unperturbed: &FloquetSpectrum, perturbed: &FloquetSpectrum) -> Result<OverlapMatrix> {
    let dim = unperturbed.dim();
    if perturbed.dim() != dim {
        return Err(contract(format!(
            "overlap of spectra with dimensions {dim} and {}",
            perturbed.dim()
        )));
    }
    // m[(beta, alpha)] = <phi_beta^(0) | phi_alpha^(eps)>
    let mut m = Mat::<c64>::zeros(dim, dim);
    matmul(
        &mut m,
        Accum::Replace,
        unperturbed.eigenvectors().adjoint(),
        perturbed.eigenvectors(),
        c64::new(1.0, 0.0),
        Par::Seq,
    );
    let mut p = vec![0.0; dim * dim];
    for alpha in 0..dim {
        let col = m.col_as_slice(alpha);
        for (slot, z) in p[alpha * dim..(alpha + 1) * dim].iter_mut().zip(col) {
            *slot = z.norm_sqr().min(1.0);
        }
    }
    Ok(OverlapMatrix { dim, p })
}

/// `S = -sum_beta p_beta log2 p_beta` of one row of weights, clamped to
/// `[0, log2 len]`.
pub fn eigenstate_entropy(row: &[f64]) -> Result<f64> {
    if row.is_empty() {
        return Err(contract("entropy of an empty weight vector"));
    }
    if let Some(bad) = row.iter().find(|&&x| x < -1e-12 || !x.is_finite()) {
        return Err(contract(format!("weight {bad} is not a probability")));
    }
    let total: f64 = row.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(contract(format!("weights sum to {total}, not 1")));
    }
    let s: f64 = row.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum();
    Ok(s.clamp(0.0, (row.len() as f64).log2()))
}
