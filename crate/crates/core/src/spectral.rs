//! Hermitian eigendecomposition, Fermi projections and gap reporting.

use faer::Side;
use serde::Serialize;

use crate::dense::{hermitian_norm2, hermitian_residual, CMat};
use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::model::Hamiltonian;

/// Eigenvalues closer than this to the Fermi level make P_F ill-defined.
pub const COLLISION_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    spec: LatticeSpec,
    eigenvalues: Vec<f64>,
    eigenvectors: CMat,
}

impl EigenDecomposition {
    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
    pub fn eigenvectors(&self) -> &CMat {
        &self.eigenvectors
    }
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// V diag(E) V†
    pub fn reconstruct(&self) -> CMat {
        let v = &self.eigenvectors;
        let ve = CMat::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * self.eigenvalues[j]);
        &ve * v.adjoint()
    }
}

/// Full eigendecomposition with ascending eigenvalues. Each eigenvector is
/// rephased so that its first non-negligible component is real positive.
pub fn diagonalize(h: &Hamiltonian) -> Result<EigenDecomposition> {
    let m = h.matrix();
    let residual = hermitian_residual(m.as_ref());
    let allowed = 1e-12 * h.dim() as f64;
    if residual >= allowed {
        return Err(Error::NotHermitian { residual, allowed });
    }
    let evd = m.self_adjoint_eigen(Side::Lower).map_err(|_| Error::Eigensolver)?;
    let n = h.dim();
    let s = evd.S();
    let eigenvalues: Vec<f64> = (0..n).map(|i| s[i].re).collect();
    let mut vectors = evd.U().to_owned();
    for j in 0..n {
        let col = vectors.col(j);
        let Some(pivot) = (0..n).map(|i| col[i]).find(|z| z.norm() > 1e-10) else {
            continue;
        };
        let fix = pivot.conj() / pivot.norm();
        for i in 0..n {
            vectors[(i, j)] *= fix;
        }
    }
    Ok(EigenDecomposition { spec: *h.spec(), eigenvalues, eigenvectors: vectors })
}

#[derive(Debug, Clone)]
pub struct FermiProjection {
    spec: LatticeSpec,
    matrix: CMat,
    rank: usize,
    fermi_energy: f64,
}

impl FermiProjection {
    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }
    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }
    pub fn rank(&self) -> usize {
        self.rank
    }
    pub fn fermi_energy(&self) -> f64 {
        self.fermi_energy
    }
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Wrap an arbitrary orthogonal projector (rank taken from its trace).
    pub fn from_matrix(spec: LatticeSpec, matrix: CMat, fermi_energy: f64) -> Result<Self> {
        if matrix.nrows() != spec.dim() || matrix.ncols() != spec.dim() {
            return crate::error::domain("projector dimension does not match the box");
        }
        let rank = crate::dense::trace(matrix.as_ref()).re.round() as usize;
        Ok(FermiProjection { spec, matrix, rank, fermi_energy })
    }
}

/// P_F = Σ_{E_i < e_f} v_i v_i†
pub fn fermi_projection(d: &EigenDecomposition, e_f: f64) -> Result<FermiProjection> {
    if let Some(&e) = d.eigenvalues.iter().find(|e| (**e - e_f).abs() < COLLISION_TOL) {
        return Err(Error::FermiLevelOnSpectrum { fermi_energy: e_f, eigenvalue: e });
    }
    let rank = d.eigenvalues.iter().filter(|&&e| e < e_f).count();
    let occ = d.eigenvectors.subcols(0, rank);
    let matrix = occ * occ.adjoint();
    Ok(FermiProjection { spec: d.spec, matrix, rank, fermi_energy: e_f })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapReport {
    pub highest_occupied: f64,
    pub lowest_empty: f64,
    pub gap: f64,
    pub fermi_energy: f64,
}

/// Occupied states are those strictly below `e_f`. With no occupied (empty)
/// state the corresponding edge is −∞ (+∞). An eigenvalue within
/// [`COLLISION_TOL`] of `e_f` reports a zero gap.
pub fn spectral_gap(d: &EigenDecomposition, e_f: f64) -> GapReport {
    let highest_occupied = d
        .eigenvalues
        .iter()
        .copied()
        .filter(|&e| e < e_f)
        .fold(f64::NEG_INFINITY, f64::max);
    let lowest_empty = d
        .eigenvalues
        .iter()
        .copied()
        .filter(|&e| e >= e_f)
        .fold(f64::INFINITY, f64::min);
    let collides = d.eigenvalues.iter().any(|e| (e - e_f).abs() < COLLISION_TOL);
    let gap = if collides { 0.0 } else { lowest_empty - highest_occupied };
    GapReport { highest_occupied, lowest_empty, gap, fermi_energy: e_f }
}

/// (‖P'_F − P_F‖₂, ‖δH‖₂) for H' = H + δH.
pub fn projection_perturbation_norm(
    h: &Hamiltonian,
    dh: &Hamiltonian,
    e_f: f64,
) -> Result<(f64, f64)> {
    let perturbed = h.sum(dh)?;
    let p = fermi_projection(&diagonalize(h)?, e_f).map_err(gap_closed("unperturbed"))?;
    let p2 = fermi_projection(&diagonalize(&perturbed)?, e_f).map_err(gap_closed("perturbed"))?;
    let dp = hermitian_norm2((p2.matrix() - p.matrix()).as_ref())?;
    let dhn = hermitian_norm2(dh.matrix().as_ref())?;
    Ok((dp, dhn))
}

fn gap_closed(which: &'static str) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::FermiLevelOnSpectrum { fermi_energy, eigenvalue } => Error::GapClosed(format!(
            "{which} Hamiltonian has eigenvalue {eigenvalue} at E_F = {fermi_energy}"
        )),
        other => other,
    }
}

/// ‖[H, P]‖_F
pub fn commutator_norm(h: &CMat, p: &CMat) -> f64 {
    (&(h * p) - &(p * h)).norm_l2()
}
