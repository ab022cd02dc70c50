//! Spectral pairing of A: the ±λ pairing through B, and the even degeneracy
//! forced by odd time reversal for 0 < |λ| < 1.

use serde::Serialize;

use super::{FluxUnitary, PairProjectionOps};
use crate::dense::{c64, column, frobenius, hermitian_eigen, inner, matvec, norm};
use crate::error::{domain, Error, Result};
use crate::model::TimeReversalOp;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cluster {
    pub center: f64,
    pub multiplicity: usize,
    /// Index of the first member in the sorted spectrum.
    pub first: usize,
}

/// Group sorted eigenvalues, starting a new cluster whenever the gap to the
/// previous value exceeds `tol`.
pub fn eigenvalue_clusters(sorted: &[f64], tol: f64) -> Vec<Cluster> {
    let mut out: Vec<Cluster> = Vec::new();
    let mut start = 0;
    for i in 1..=sorted.len() {
        if i == sorted.len() || sorted[i] - sorted[i - 1] > tol {
            if i > start {
                let members = &sorted[start..i];
                out.push(Cluster {
                    center: members.iter().sum::<f64>() / members.len() as f64,
                    multiplicity: members.len(),
                    first: start,
                });
            }
            start = i;
        }
    }
    out
}

fn check_window(window: (f64, f64)) -> Result<()> {
    let (lo, hi) = window;
    if !(0.0 < lo && lo < hi && hi < 1.0) {
        return domain(format!("window ({lo}, {hi}) must satisfy 0 < lo < hi < 1"));
    }
    Ok(())
}

fn in_window(x: f64, window: (f64, f64)) -> bool {
    x.abs() > window.0 && x.abs() < window.1
}

fn eigen_residual(ops: &PairProjectionOps, v: &[c64], lambda: f64) -> f64 {
    let av = matvec(ops.a().as_ref(), v);
    let r: Vec<c64> = av.iter().zip(v).map(|(x, y)| x - y * lambda).collect();
    norm(&r) / norm(v).max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairingAudit {
    pub clusters_in_window: Vec<Cluster>,
    /// Every in-window cluster at λ has a partner at −λ of equal multiplicity.
    pub multiplicities_paired: bool,
    /// max ‖(1 − A²)φ − B²φ‖ over in-window eigenvectors.
    pub max_square_residual: f64,
    /// max ‖A(Bφ) + λ Bφ‖ / ‖Bφ‖ over in-window eigenvectors.
    pub max_partner_residual: f64,
    pub tol: f64,
}

impl PairingAudit {
    pub fn passed(&self) -> bool {
        self.multiplicities_paired
            && self.max_square_residual < self.tol
            && self.max_partner_residual < self.tol
    }
}

pub fn susy_pairing_audit(
    ops: &PairProjectionOps,
    window: (f64, f64),
    tol: f64,
) -> Result<PairingAudit> {
    check_window(window)?;
    let (values, vectors) = hermitian_eigen(ops.a().as_ref())?;
    let clusters = eigenvalue_clusters(&values, tol);
    let selected: Vec<Cluster> = clusters
        .iter()
        .copied()
        .filter(|c| in_window(c.center, window))
        .collect();
    let multiplicities_paired = selected.iter().all(|c| {
        clusters
            .iter()
            .any(|o| (o.center + c.center).abs() <= tol && o.multiplicity == c.multiplicity)
    });
    let mut max_square_residual: f64 = 0.0;
    let mut max_partner_residual: f64 = 0.0;
    for (j, &lambda) in values.iter().enumerate() {
        if !in_window(lambda, window) {
            continue;
        }
        let phi = column(vectors.as_ref(), j);
        let b_phi = matvec(ops.b().as_ref(), &phi);
        let bb_phi = matvec(ops.b().as_ref(), &b_phi);
        let sq: Vec<c64> = phi
            .iter()
            .zip(&bb_phi)
            .map(|(p, q)| p * (1.0 - lambda * lambda) - q)
            .collect();
        max_square_residual = max_square_residual.max(norm(&sq));
        max_partner_residual = max_partner_residual.max(eigen_residual(ops, &b_phi, -lambda));
    }
    Ok(PairingAudit {
        clusters_in_window: selected,
        multiplicities_paired,
        max_square_residual,
        max_partner_residual,
        tol,
    })
}

pub fn susy_pairing_check(ops: &PairProjectionOps, window: (f64, f64), tol: f64) -> Result<bool> {
    Ok(susy_pairing_audit(ops, window, tol)?.passed())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrsAudit {
    pub clusters_in_window: Vec<Cluster>,
    pub all_even: bool,
    /// max ‖Aψ − λψ‖/‖ψ‖ for ψ = U_a (Bφ)^Θ.
    pub max_partner_residual: f64,
    /// max |⟨φ, U_a (Bφ)^Θ⟩| / (‖φ‖‖U_a (Bφ)^Θ‖).
    pub max_overlap: f64,
    /// max ‖Aχ + λχ‖/‖χ‖ for χ = U_a φ^Θ.
    pub max_reflection_residual: f64,
    pub tol: f64,
}

impl TrsAudit {
    pub fn passed(&self) -> bool {
        self.all_even
            && self.max_partner_residual < self.tol
            && self.max_overlap < self.tol
            && self.max_reflection_residual < self.tol
    }
}

pub fn trs_even_degeneracy_audit(
    ops: &PairProjectionOps,
    theta: &TimeReversalOp,
    u: &FluxUnitary,
    window: (f64, f64),
    tol: f64,
) -> Result<TrsAudit> {
    check_window(window)?;
    if theta.spec() != ops.spec() || u.spec() != ops.spec() {
        return domain("operators live on different boxes");
    }
    // P is Θ-invariant exactly when the Hamiltonian is odd-TRS at a gapped E_F
    let p = ops.projection();
    let trs = frobenius((&theta.conjugate_operator(&p) - &p).as_ref());
    if trs > 1e-9 * ops.dim() as f64 {
        return Err(Error::Precondition(format!(
            "Fermi projection is not time-reversal symmetric (residual {trs:.3e})"
        )));
    }
    let (values, vectors) = hermitian_eigen(ops.a().as_ref())?;
    let selected: Vec<Cluster> = eigenvalue_clusters(&values, tol)
        .into_iter()
        .filter(|c| in_window(c.center, window))
        .collect();
    let all_even = selected.iter().all(|c| c.multiplicity % 2 == 0);
    let mut max_partner_residual: f64 = 0.0;
    let mut max_overlap: f64 = 0.0;
    let mut max_reflection_residual: f64 = 0.0;
    for (j, &lambda) in values.iter().enumerate() {
        if !in_window(lambda, window) {
            continue;
        }
        let phi = column(vectors.as_ref(), j);
        let b_phi = matvec(ops.b().as_ref(), &phi);
        let psi = u.apply(&theta.apply(&b_phi));
        max_partner_residual = max_partner_residual.max(eigen_residual(ops, &psi, lambda));
        let overlap = inner(&phi, &psi).norm() / (norm(&phi) * norm(&psi));
        max_overlap = max_overlap.max(overlap);
        let chi = u.apply(&theta.apply(&phi));
        max_reflection_residual = max_reflection_residual.max(eigen_residual(ops, &chi, -lambda));
    }
    Ok(TrsAudit {
        clusters_in_window: selected,
        all_even,
        max_partner_residual,
        max_overlap,
        max_reflection_residual,
        tol,
    })
}

pub fn trs_even_degeneracy_check(
    ops: &PairProjectionOps,
    theta: &TimeReversalOp,
    u: &FluxUnitary,
    window: (f64, f64),
    tol: f64,
) -> Result<bool> {
    Ok(trs_even_degeneracy_audit(ops, theta, u, window, tol)?.passed())
}
