//! The pair-of-projections index.
//!
//! For a Fermi projection P and the flux unitary U_a anchored at a dual point
//! a, the operator A = P − U_a P U_a* has spectrum in [−1, 1]. Its ±1
//! eigenspaces carry the relative index dim ker(A − 1) − dim ker(A + 1) =
//! Tr A³ (the Chern number), and dim ker(A − 1) mod 2 is the Z₂ index of an
//! odd time-reversal symmetric insulator. B = 1 − P − U_a P U_a* anticommutes
//! with A and pairs the eigenvalues ±λ for 0 < |λ| < 1.
//!
//! On a finite open box the ±1 eigenvalues become clusters close to ±1, and
//! the box edge carries kernels that cancel the ones at the flux. Traces and
//! kernel counts are therefore restricted to a square around the flux point:
//! the trace is Tr χA³χ and the counts weight each eigenvector of A by its
//! norm inside χ. The distance of the trace from the nearest integer is
//! reported as a residual.

mod estimators;
mod symmetry;

pub use estimators::{
    connes_area_sum, connes_target, kubo_hall, local_chern_marker,
};
pub use symmetry::{
    eigenvalue_clusters, susy_pairing_audit, susy_pairing_check, trs_even_degeneracy_audit,
    trs_even_degeneracy_check, Cluster, PairingAudit, TrsAudit,
};

use serde::Serialize;

use crate::dense::{
    c64, frobenius, hermitian_eigen, hermitian_residual, identity, CMat,
};
use crate::error::{domain, Error, Result};
use crate::lattice::{Boundary, DualPoint, LatticeSpec, RegionMask, Site};
use crate::model::Hamiltonian;
use crate::spectral::{diagonalize, fermi_projection, FermiProjection};

/// Eigenvalues of A within this distance of a window edge are flagged.
pub const WINDOW_EDGE_TOL: f64 = 1e-3;

/// Default kernel-counting window.
pub const DEFAULT_DELTA: f64 = 0.5;

/// Reports with |Tr A³ − round(Tr A³)| above this are not trusted.
pub const RESIDUAL_GATE: f64 = 0.25;

/// Site-diagonal phase operator U_a(u) = (u − a)/|u − a| in complex
/// coordinates, broadcast over orbitals and spins.
#[derive(Debug, Clone)]
pub struct FluxUnitary {
    spec: LatticeSpec,
    a: DualPoint,
    site_phases: Vec<c64>,
}

/// U_a(u) for a single site.
pub fn flux_phase(u: Site, a: DualPoint) -> c64 {
    let z = c64::new(u.0 as f64 - a.a1(), u.1 as f64 - a.a2());
    z / z.norm()
}

impl FluxUnitary {
    pub fn new(spec: &LatticeSpec, a: DualPoint) -> Result<Self> {
        if spec.boundary() != Boundary::Open {
            return Err(Error::FluxRequiresOpenBoundary);
        }
        if !a.is_interior(spec) {
            return domain(format!("dual point {a} is not inside the box"));
        }
        let site_phases = spec.sites().map(|u| flux_phase(u, a)).collect();
        Ok(FluxUnitary { spec: *spec, a, site_phases })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn point(&self) -> DualPoint {
        self.a
    }

    pub fn site_phases(&self) -> &[c64] {
        &self.site_phases
    }

    /// Phases on the flat Hilbert-space diagonal.
    pub fn diagonal(&self) -> Vec<c64> {
        let per = self.spec.per_site();
        self.site_phases
            .iter()
            .flat_map(|&z| std::iter::repeat_n(z, per))
            .collect()
    }

    pub fn dense(&self) -> CMat {
        let d = self.diagonal();
        CMat::from_fn(d.len(), d.len(), |i, j| if i == j { d[i] } else { c64::new(0.0, 0.0) })
    }

    /// U_a x
    pub fn apply(&self, x: &[c64]) -> Vec<c64> {
        let per = self.spec.per_site();
        x.iter()
            .enumerate()
            .map(|(i, &v)| self.site_phases[i / per] * v)
            .collect()
    }
}

pub fn flux_unitary(spec: &LatticeSpec, a: DualPoint) -> Result<FluxUnitary> {
    FluxUnitary::new(spec, a)
}

/// A = P − U_a P U_a* and B = 1 − P − U_a P U_a*.
#[derive(Debug, Clone)]
pub struct PairProjectionOps {
    spec: LatticeSpec,
    point: DualPoint,
    a: CMat,
    b: CMat,
}

impl PairProjectionOps {
    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }
    /// The dual point the flux is anchored at.
    pub fn point(&self) -> DualPoint {
        self.point
    }
    pub fn a(&self) -> &CMat {
        &self.a
    }
    pub fn b(&self) -> &CMat {
        &self.b
    }
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// P recovered from A − B = 2P − 1.
    pub fn projection(&self) -> CMat {
        let n = self.dim();
        CMat::from_fn(n, n, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            (self.a[(i, j)] - self.b[(i, j)] + id) * 0.5
        })
    }

    /// (‖AB + BA‖_F, ‖A² + B² − 1‖_F)
    pub fn algebra_residuals(&self) -> (f64, f64) {
        let ab = &self.a * &self.b;
        let ba = &self.b * &self.a;
        let anti = frobenius((&ab + &ba).as_ref());
        let sq = &(&self.a * &self.a) + &(&self.b * &self.b);
        let unit = frobenius((&sq - &identity(self.dim())).as_ref());
        (anti, unit)
    }

    /// (‖A − A†‖_F, ‖B − B†‖_F)
    pub fn hermiticity_residuals(&self) -> (f64, f64) {
        (hermitian_residual(self.a.as_ref()), hermitian_residual(self.b.as_ref()))
    }
}

pub fn build_pair_ops(p: &FermiProjection, u: &FluxUnitary) -> Result<PairProjectionOps> {
    if p.spec() != u.spec() {
        return domain("projection and flux unitary live on different boxes");
    }
    let phases = u.diagonal();
    let pm = p.matrix();
    let n = p.dim();
    // (U P U*)_ij = u_i P_ij conj(u_j)
    let a = CMat::from_fn(n, n, |i, j| {
        let rotated = phases[i] * pm[(i, j)] * phases[j].conj();
        pm[(i, j)] - rotated
    });
    let b = CMat::from_fn(n, n, |i, j| {
        let rotated = phases[i] * pm[(i, j)] * phases[j].conj();
        let id = if i == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) };
        id - pm[(i, j)] - rotated
    });
    Ok(PairProjectionOps { spec: *p.spec(), point: u.point(), a, b })
}

/// Sites within ℓ∞ distance min(L₁, L₂)/4 of the flux point.
///
/// On a finite box A is a difference of two projections of equal rank, so
/// Tr A³ = Tr A = 0 and the ±1 clusters pair up exactly: the box edge always
/// carries the compensating kernel. The index is therefore read off from the
/// part of A that lives near the flux.
pub fn flux_region(spec: &LatticeSpec, a: DualPoint) -> RegionMask {
    RegionMask::around(spec, a, spec.l1().min(spec.l2()) as f64 / 4.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexReport {
    pub eigenvalues_of_a: Vec<f64>,
    /// ‖χφ‖² for each eigenvector φ of A, χ the counting region.
    pub localization: Vec<f64>,
    /// Σ ‖χφ‖² over eigenvalues in [1 − δ, 1], rounded.
    pub n_plus: usize,
    /// Σ ‖χφ‖² over eigenvalues in [−1, −1 + δ], rounded.
    pub n_minus: usize,
    /// Largest distance of the two weighted counts from their rounded values.
    pub count_defect: f64,
    /// Re Tr χA³χ from the matrix product.
    pub trace_a3: f64,
    /// Σ λ³ ‖χφ‖² over the eigenpairs of A.
    pub trace_a3_spectral: f64,
    pub chern: i64,
    pub z2: u8,
    pub residual: f64,
    pub delta: f64,
    /// Some eigenvalue sits within [`WINDOW_EDGE_TOL`] of a window edge.
    pub ambiguous_window: bool,
}

impl IndexReport {
    /// Chern number agrees with the window counts and the quality gate holds.
    pub fn is_consistent(&self) -> bool {
        self.passes_quality_gate() && self.chern == self.n_plus as i64 - self.n_minus as i64
    }

    pub fn passes_quality_gate(&self) -> bool {
        self.residual <= RESIDUAL_GATE && self.count_defect <= RESIDUAL_GATE && !self.ambiguous_window
    }

    pub fn summary(&self) -> IndexSummary {
        IndexSummary {
            n_plus: self.n_plus,
            n_minus: self.n_minus,
            count_defect: self.count_defect,
            trace_a3: self.trace_a3,
            trace_a3_spectral: self.trace_a3_spectral,
            chern: self.chern,
            z2: self.z2,
            residual: self.residual,
            delta: self.delta,
            ambiguous_window: self.ambiguous_window,
        }
    }
}

/// Flat record form of an [`IndexReport`] without the spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndexSummary {
    pub n_plus: usize,
    pub n_minus: usize,
    pub count_defect: f64,
    pub trace_a3: f64,
    pub trace_a3_spectral: f64,
    pub chern: i64,
    pub z2: u8,
    pub residual: f64,
    pub delta: f64,
    pub ambiguous_window: bool,
}

/// Index report with the counting region [`flux_region`].
pub fn index_report(ops: &PairProjectionOps, delta: f64) -> Result<IndexReport> {
    index_report_in(ops, delta, &flux_region(ops.spec(), ops.point()))
}

pub fn index_report_in(
    ops: &PairProjectionOps,
    delta: f64,
    region: &RegionMask,
) -> Result<IndexReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return domain(format!("window width δ must lie in (0, 1), got {delta}"));
    }
    if region.spec() != ops.spec() {
        return domain("region and operators live on different boxes");
    }
    if region.n_sites() == 0 {
        return domain("empty counting region");
    }
    let (eigenvalues, vectors) = hermitian_eigen(ops.a.as_ref())?;
    if let Some(&bad) = eigenvalues.iter().find(|x| x.abs() > 1.0 + 1e-9) {
        return Err(Error::Numerical(format!("eigenvalue {bad} of A outside [−1, 1]")));
    }
    let rows = region.flat_indices();
    let localization: Vec<f64> = (0..eigenvalues.len())
        .map(|j| rows.iter().map(|&i| vectors[(i, j)].norm_sqr()).sum())
        .collect();

    let a2 = &ops.a * &ops.a;
    let n = ops.dim();
    let mut tr = c64::new(0.0, 0.0);
    for &i in &rows {
        for k in 0..n {
            tr += a2[(i, k)] * ops.a[(k, i)];
        }
    }
    if tr.im.abs() > 1e-9 {
        return Err(Error::Numerical(format!("Tr χA³χ has imaginary part {:.3e}", tr.im)));
    }
    let spectral: f64 = eigenvalues
        .iter()
        .zip(&localization)
        .map(|(x, w)| x * x * x * w)
        .sum();
    if (spectral - tr.re).abs() > 1e-8 {
        return Err(Error::Numerical(format!(
            "Tr χA³χ = {} from the product but Σλ³‖χφ‖² = {spectral}",
            tr.re
        )));
    }

    let upper = 1.0 - delta;
    let lower = -1.0 + delta;
    let weighted = |keep: &dyn Fn(f64) -> bool| -> f64 {
        eigenvalues
            .iter()
            .zip(&localization)
            .filter(|(x, _)| keep(**x))
            .map(|(_, w)| w)
            .sum()
    };
    let plus = weighted(&|x| x >= upper);
    let minus = weighted(&|x| x <= lower);
    let count_defect = (plus - plus.round()).abs().max((minus - minus.round()).abs());
    let n_plus = plus.round() as usize;
    let n_minus = minus.round() as usize;
    let ambiguous_window = eigenvalues
        .iter()
        .any(|&x| (x - upper).abs() < WINDOW_EDGE_TOL || (x - lower).abs() < WINDOW_EDGE_TOL);
    let chern = tr.re.round() as i64;
    Ok(IndexReport {
        eigenvalues_of_a: eigenvalues,
        localization,
        n_plus,
        n_minus,
        count_defect,
        trace_a3: tr.re,
        trace_a3_spectral: spectral,
        chern,
        z2: (n_plus % 2) as u8,
        residual: (tr.re - chern as f64).abs(),
        delta,
        ambiguous_window,
    })
}

/// Index reports for one Hamiltonian at several flux positions.
pub fn index_at_points(
    h: &Hamiltonian,
    e_f: f64,
    a_list: &[DualPoint],
    delta: f64,
) -> Result<Vec<IndexReport>> {
    let p = fermi_projection(&diagonalize(h)?, e_f)?;
    a_list
        .iter()
        .map(|&a| index_report(&build_pair_ops(&p, &FluxUnitary::new(h.spec(), a)?)?, delta))
        .collect()
}

/// Chern and Z₂ agree across all flux positions in `a_list`, each of which
/// must sit at least L/4 from the boundary.
pub fn flux_position_invariance(
    h: &Hamiltonian,
    e_f: f64,
    a_list: &[DualPoint],
    delta: f64,
) -> Result<bool> {
    let spec = h.spec();
    let margin = spec.l1().min(spec.l2()) as f64 / 4.0;
    if let Some(a) = a_list.iter().find(|a| a.hull_distance(spec) < margin) {
        return domain(format!("dual point {a} closer than L/4 = {margin} to the boundary"));
    }
    let reports = index_at_points(h, e_f, a_list, delta)?;
    Ok(reports
        .windows(2)
        .all(|w| w[0].chern == w[1].chern && w[0].z2 == w[1].z2))
}
