//! Momentum-space invariants of the clean, translation-invariant models.
//!
//! The lattice Chern number and the EBZ Z₂ index use link variables
//! U(k, k') = det(Ψ(k)† Ψ(k')) / |det| on the frame Ψ of the lower half of the
//! bands, so both are insensitive to the eigensolver's phase choices.

use std::f64::consts::PI;

use serde::Serialize;

use crate::dense::{c64, hermitian_eigen, CMat};
use crate::error::{domain, Error, Result};
use crate::model::{haldane_table, kane_mele_table, Chirality, HaldaneParams, HoppingTable, KaneMeleParams};

/// Band gaps below this count as closed.
pub const GAP_TOL: f64 = 1e-8;

/// Allowed distance of a plaquette sum from an integer.
pub const INTEGER_TOL: f64 = 1e-9;

/// K = (2π/3, 2π/3); Γ vanishes at ±K.
pub const DIRAC_K: (f64, f64) = (2.0 * PI / 3.0, 2.0 * PI / 3.0);

/// Δ(k) = 2t'[sin k₁ + sin k₂ − sin(k₁ + k₂)]
pub fn haldane_delta(t_prime: f64, k: (f64, f64)) -> f64 {
    2.0 * t_prime * (k.0.sin() + k.1.sin() - (k.0 + k.1).sin())
}

/// Γ(k) = t(1 + e^{ik₁} + e^{−ik₂})
pub fn haldane_gamma(t: f64, k: (f64, f64)) -> c64 {
    (c64::new(1.0, 0.0) + c64::from_polar(1.0, k.0) + c64::from_polar(1.0, -k.1)) * t
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Haldane { params: HaldaneParams, chirality: Chirality },
    KaneMele { params: KaneMeleParams },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlochHamiltonian {
    kind: Kind,
    table: HoppingTable,
}

impl BlochHamiltonian {
    /// H(k) = [[−Δ + λ_v, conj Γ], [Γ, Δ − λ_v]] with t' → ±t' by chirality.
    pub fn haldane(params: HaldaneParams, chirality: Chirality) -> Self {
        BlochHamiltonian {
            kind: Kind::Haldane { params, chirality },
            table: haldane_table(&params, chirality),
        }
    }

    /// 4×4 Kane-Mele Bloch matrix on components `orbital * 2 + spin`.
    pub fn kane_mele(params: &KaneMeleParams) -> Result<Self> {
        if params.disorder_w != 0.0 {
            return domain("a disordered model has no Bloch Hamiltonian");
        }
        Ok(BlochHamiltonian {
            kind: Kind::KaneMele { params: *params },
            table: kane_mele_table(params),
        })
    }

    pub fn dim(&self) -> usize {
        self.table.per_site()
    }

    pub fn is_spinful(&self) -> bool {
        matches!(self.kind, Kind::KaneMele { .. })
    }

    /// Parameters of the Haldane copy; for Kane-Mele the spin-↑ copy.
    pub fn haldane_params(&self) -> (HaldaneParams, Chirality) {
        match self.kind {
            Kind::Haldane { params, chirality } => (params, chirality),
            Kind::KaneMele { params } => (params.haldane, Chirality::Plus),
        }
    }

    pub fn table(&self) -> &HoppingTable {
        &self.table
    }

    pub fn eval(&self, k: (f64, f64)) -> CMat {
        match self.kind {
            Kind::Haldane { params, chirality } => {
                let delta = haldane_delta(chirality.sign() * params.t_prime, k);
                let gamma = haldane_gamma(params.t, k);
                let m = delta - params.lambda_v;
                let mut h = CMat::zeros(2, 2);
                h[(0, 0)] = c64::new(-m, 0.0);
                h[(0, 1)] = gamma.conj();
                h[(1, 0)] = gamma;
                h[(1, 1)] = c64::new(m, 0.0);
                h
            }
            Kind::KaneMele { .. } => self.table.bloch(k),
        }
    }

    /// Band energies at k, ascending.
    pub fn energies(&self, k: (f64, f64)) -> Result<Vec<f64>> {
        Ok(hermitian_eigen(self.eval(k).as_ref())?.0)
    }
}

pub fn bloch_eval(bh: &BlochHamiltonian, k: (f64, f64)) -> CMat {
    bh.eval(k)
}

/// k = 2π(m₁, m₂)/N for m_j ∈ {0, …, N−1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BZGrid {
    n: usize,
}

impl BZGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 6 {
            return domain(format!("grid needs N ≥ 6, got {n}"));
        }
        Ok(BZGrid { n })
    }

    /// Grid that contains the Dirac points ±K as nodes.
    pub fn with_dirac_nodes(n: usize) -> Result<Self> {
        if n % 3 != 0 {
            return domain(format!("N = {n} is not divisible by 3"));
        }
        Self::new(n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self, m1: usize, m2: usize) -> (f64, f64) {
        let s = 2.0 * PI / self.n as f64;
        (s * m1 as f64, s * m2 as f64)
    }

    /// Node closest to k, with k taken mod 2π.
    pub fn nearest_node(&self, k: (f64, f64)) -> (usize, usize) {
        let idx = |x: f64| {
            let m = (x.rem_euclid(2.0 * PI) * self.n as f64 / (2.0 * PI)).round() as usize;
            m % self.n
        };
        (idx(k.0), idx(k.1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiracPoint {
    pub k: (f64, f64),
    /// Δ(k) at the zero of Γ.
    pub delta: f64,
    /// Direct gap 2|Δ − λ_v| at this point.
    pub gap: f64,
}

/// The two zeros ±K of Γ in (−π, π]² with their masses.
pub fn dirac_report(bh: &BlochHamiltonian) -> Result<Vec<DiracPoint>> {
    let (p, chirality) = bh.haldane_params();
    if p.t == 0.0 {
        return domain("t = 0: Γ is identically degenerate");
    }
    let tp = chirality.sign() * p.t_prime;
    Ok([DIRAC_K, (-DIRAC_K.0, -DIRAC_K.1)]
        .into_iter()
        .map(|k| {
            let delta = haldane_delta(tp, k);
            DiracPoint { k, delta, gap: 2.0 * (delta - p.lambda_v).abs() }
        })
        .collect())
}

/// Frames of the lower half of the bands on rows `0..rows` of the grid,
/// indexed `[m2 * N + m1]`, and the smallest gap above them.
fn lower_frames(bh: &BlochHamiltonian, grid: &BZGrid, rows: usize) -> Result<(Vec<CMat>, f64)> {
    let n = grid.n();
    let occ = bh.dim() / 2;
    let mut frames = Vec::with_capacity(n * rows);
    let mut min_gap = f64::INFINITY;
    for m2 in 0..rows {
        for m1 in 0..n {
            let (e, v) = hermitian_eigen(bh.eval(grid.k(m1, m2)).as_ref())?;
            min_gap = min_gap.min(e[occ] - e[occ - 1]);
            frames.push(v.subcols(0, occ).to_owned());
        }
    }
    if min_gap < GAP_TOL {
        return Err(Error::GapClosed(format!("band gap {min_gap:.3e} on the {n}×{n} grid")));
    }
    Ok((frames, min_gap))
}

fn det_small(m: &CMat) -> c64 {
    match m.nrows() {
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        n => unreachable!("frames have at most two columns, got {n}"),
    }
}

/// det(a† b) / |det(a† b)|
fn link(a: &CMat, b: &CMat) -> Result<c64> {
    let d = det_small(&(a.adjoint() * b));
    if d.norm() < 1e-12 {
        return Err(Error::Numerical("vanishing link variable; grid too coarse".into()));
    }
    Ok(d / d.norm())
}

/// arg of the product of links around the plaquette with lower-left `ll`.
fn plaquette_field(ll: &CMat, lr: &CMat, ur: &CMat, ul: &CMat) -> Result<f64> {
    Ok((link(ll, lr)? * link(lr, ur)? * link(ur, ul)? * link(ul, ll)?).arg())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChernReport {
    pub chern: i64,
    /// (i/2π) Σ F before rounding.
    pub raw: f64,
    pub min_gap: f64,
}

/// Plaquette fluxes −F/2π; they sum to the Chern number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureSample {
    pub m1: usize,
    pub m2: usize,
    pub k1: f64,
    pub k2: f64,
    pub flux: f64,
}

/// Lower-band Berry flux through every plaquette, normalized as
/// I_Ch = (i/2π) Σ_plaquettes iF with F the plaquette phase.
pub fn berry_curvature(bh: &BlochHamiltonian, grid: &BZGrid) -> Result<Vec<CurvatureSample>> {
    Ok(curvature_and_gap(bh, grid)?.0)
}

fn curvature_and_gap(bh: &BlochHamiltonian, grid: &BZGrid) -> Result<(Vec<CurvatureSample>, f64)> {
    let n = grid.n();
    let (frames, min_gap) = lower_frames(bh, grid, n)?;
    let at = |m1: usize, m2: usize| &frames[(m2 % n) * n + (m1 % n)];
    let mut out = Vec::with_capacity(n * n);
    for m2 in 0..n {
        for m1 in 0..n {
            let f = plaquette_field(at(m1, m2), at(m1 + 1, m2), at(m1 + 1, m2 + 1), at(m1, m2 + 1))?;
            let (k1, k2) = grid.k(m1, m2);
            out.push(CurvatureSample { m1, m2, k1, k2, flux: -f / (2.0 * PI) });
        }
    }
    Ok((out, min_gap))
}

pub fn chern_lattice_report(bh: &BlochHamiltonian, grid: &BZGrid) -> Result<ChernReport> {
    let (samples, min_gap) = curvature_and_gap(bh, grid)?;
    let raw: f64 = samples.iter().map(|s| s.flux).sum();
    let chern = raw.round();
    if (raw - chern).abs() > INTEGER_TOL {
        return Err(Error::Numerical(format!("plaquette sum {raw} is not an integer")));
    }
    Ok(ChernReport { chern: chern as i64, raw, min_gap })
}

/// Chern number of the lower half of the bands.
pub fn chern_lattice(bh: &BlochHamiltonian, grid: &BZGrid) -> Result<i64> {
    Ok(chern_lattice_report(bh, grid)?.chern)
}

/// Smallest direct gap between the lower and upper halves of the bands over
/// the grid and the two Dirac points.
pub fn bulk_gap(bh: &BlochHamiltonian, grid: &BZGrid) -> Result<f64> {
    let occ = bh.dim() / 2;
    let n = grid.n();
    let mut gap = f64::INFINITY;
    let extra = [DIRAC_K, (-DIRAC_K.0, -DIRAC_K.1)];
    let nodes = (0..n * n).map(|i| grid.k(i % n, i / n));
    for k in nodes.chain(extra) {
        let e = bh.energies(k)?;
        gap = gap.min(e[occ] - e[occ - 1]);
    }
    Ok(gap)
}

/// Θ on a Bloch vector with components `orbital * 2 + spin`:
/// (Θu)_↑ = conj(u_↓), (Θu)_↓ = −conj(u_↑).
fn theta_bloch(u: &[c64]) -> Vec<c64> {
    (0..u.len())
        .map(|i| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            u[i ^ 1].conj() * s
        })
        .collect()
}

/// max ‖H(−k) − Θ H(k) Θ⁻¹‖ over the grid.
fn bloch_trs_residual(bh: &BlochHamiltonian, grid: &BZGrid) -> f64 {
    let n = grid.n();
    let mut worst: f64 = 0.0;
    for m2 in 0..n {
        for m1 in 0..n {
            let k = grid.k(m1, m2);
            let h = bh.eval(k);
            let hm = bh.eval((-k.0, -k.1));
            let d = h.nrows();
            for i in 0..d {
                for j in 0..d {
                    let s = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    let conj = h[(i ^ 1, j ^ 1)].conj() * s;
                    worst = worst.max((hm[(i, j)] - conj).norm());
                }
            }
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EbzReport {
    pub z2: u8,
    /// (1/2π)[Σ_∂EBZ A − Σ_EBZ F] before reduction mod 2.
    pub raw: f64,
    pub min_gap: f64,
}

/// Z₂ index D mod 2 over the effective Brillouin zone k₂ ∈ [0, π].
pub fn z2_ebz(bh: &BlochHamiltonian, grid: &BZGrid) -> Result<u8> {
    Ok(z2_ebz_report(bh, grid, &|_, _, _| 0.0)?.z2)
}

/// As [`z2_ebz`], after multiplying band `b` of the numerical frame at node
/// (m₁, m₂) by e^{i gauge(m₁, m₂, b)}.
pub fn z2_ebz_report(
    bh: &BlochHamiltonian,
    grid: &BZGrid,
    gauge: &dyn Fn(usize, usize, usize) -> f64,
) -> Result<EbzReport> {
    if !bh.is_spinful() {
        return domain("the EBZ index needs the spinful Bloch Hamiltonian");
    }
    let n = grid.n();
    if n % 2 != 0 {
        return domain(format!("EBZ grid needs even N, got {n}"));
    }
    let trs = bloch_trs_residual(bh, grid);
    if trs > 1e-10 {
        return Err(Error::Precondition(format!(
            "Bloch Hamiltonian is not time-reversal symmetric (residual {trs:.3e})"
        )));
    }
    let half = n / 2;
    let rows = half + 1;
    let (mut frames, min_gap) = lower_frames(bh, grid, rows)?;
    for m2 in 0..rows {
        for m1 in 0..n {
            let f = &mut frames[m2 * n + m1];
            for b in 0..f.ncols() {
                let z = c64::from_polar(1.0, gauge(m1, m2, b));
                for i in 0..f.nrows() {
                    f[(i, b)] *= z;
                }
            }
        }
    }
    // Time-reversal constrained gauge on k₂ = 0 and k₂ = π:
    // Ψ(−k) = (−Θu₂(k), Θu₁(k)), and Ψ = (u₁, Θu₁) at the TRIM.
    for m2 in [0, half] {
        for m1 in 0..n {
            let partner = (n - m1) % n;
            if partner < m1 {
                continue;
            }
            let f = &frames[m2 * n + m1];
            let u1: Vec<c64> = (0..f.nrows()).map(|i| f[(i, 0)]).collect();
            let tu1 = theta_bloch(&u1);
            if partner == m1 {
                let g = &mut frames[m2 * n + m1];
                for (i, z) in tu1.into_iter().enumerate() {
                    g[(i, 1)] = z;
                }
            } else {
                let u2: Vec<c64> = (0..f.nrows()).map(|i| f[(i, 1)]).collect();
                let tu2 = theta_bloch(&u2);
                let g = &mut frames[m2 * n + partner];
                for i in 0..g.nrows() {
                    g[(i, 0)] = -tu2[i];
                    g[(i, 1)] = tu1[i];
                }
            }
        }
    }
    let at = |m1: usize, m2: usize| &frames[m2 * n + (m1 % n)];
    let mut boundary = 0.0;
    for m1 in 0..n {
        boundary += link(at(m1, 0), at(m1 + 1, 0))?.arg();
        boundary -= link(at(m1, half), at(m1 + 1, half))?.arg();
    }
    let mut field = 0.0;
    for m2 in 0..half {
        for m1 in 0..n {
            field += plaquette_field(at(m1, m2), at(m1 + 1, m2), at(m1 + 1, m2 + 1), at(m1, m2 + 1))?;
        }
    }
    let raw = (boundary - field) / (2.0 * PI);
    let d = raw.round();
    if (raw - d).abs() > 1e-6 {
        return Err(Error::Numerical(format!("EBZ sum {raw} is not an integer")));
    }
    Ok(EbzReport { z2: (d as i64).rem_euclid(2) as u8, raw, min_gap })
}

/// Denominators below this mark a node as singular for a patch.
pub const PATCH_SINGULAR_TOL: f64 = 1e-3;

/// The two local gauges of the Haldane lower band:
/// f₋ = (ℰ + Δ, −Γ)/√(2ℰ(ℰ + Δ)) and g₋ = (−conj Γ, ℰ − Δ)/√(2ℰ(ℰ − Δ)),
/// related by f₋ = e^{iη} g₋ with e^{iη} = −Γ/|Γ|.
///
/// With λ_v ≠ 0, Δ is replaced by the mass Δ − λ_v throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugePatchPair {
    params: HaldaneParams,
}

impl GaugePatchPair {
    pub fn new(params: HaldaneParams) -> Result<Self> {
        if params.t == 0.0 {
            return domain("t = 0: Γ is identically degenerate");
        }
        Ok(GaugePatchPair { params })
    }

    fn mass(&self, k: (f64, f64)) -> f64 {
        haldane_delta(self.params.t_prime, k) - self.params.lambda_v
    }

    pub fn gamma(&self, k: (f64, f64)) -> c64 {
        haldane_gamma(self.params.t, k)
    }

    /// ℰ(k) = √(Δ² + |Γ|²)
    pub fn energy(&self, k: (f64, f64)) -> f64 {
        self.mass(k).hypot(self.gamma(k).norm())
    }

    /// 2ℰ(ℰ + Δ), the squared normalization of f₋.
    pub fn f_denominator(&self, k: (f64, f64)) -> f64 {
        let e = self.energy(k);
        2.0 * e * (e + self.mass(k))
    }

    /// 2ℰ(ℰ − Δ), the squared normalization of g₋.
    pub fn g_denominator(&self, k: (f64, f64)) -> f64 {
        let e = self.energy(k);
        2.0 * e * (e - self.mass(k))
    }

    pub fn f_minus(&self, k: (f64, f64)) -> Option<[c64; 2]> {
        let d = self.f_denominator(k);
        if d <= 0.0 {
            return None;
        }
        let s = d.sqrt();
        let e = self.energy(k);
        Some([c64::new((e + self.mass(k)) / s, 0.0), -self.gamma(k) / s])
    }

    pub fn g_minus(&self, k: (f64, f64)) -> Option<[c64; 2]> {
        let d = self.g_denominator(k);
        if d <= 0.0 {
            return None;
        }
        let s = d.sqrt();
        let e = self.energy(k);
        Some([-self.gamma(k).conj() / s, c64::new((e - self.mass(k)) / s, 0.0)])
    }

    /// e^{iη(k)} = −Γ/|Γ|; undefined at the Dirac points.
    pub fn transition_phase(&self, k: (f64, f64)) -> Option<c64> {
        let g = self.gamma(k);
        if g.norm() < 1e-12 {
            return None;
        }
        Some(-g / g.norm())
    }

    /// Σ of principal increments of η along a closed path.
    pub fn winding(&self, path: &[(f64, f64)]) -> Result<f64> {
        let phases: Vec<c64> = path
            .iter()
            .map(|&k| {
                self.transition_phase(k)
                    .ok_or_else(|| Error::Domain(format!("path passes through the Dirac point {k:?}")))
            })
            .collect::<Result<_>>()?;
        Ok((0..phases.len())
            .map(|i| (phases[(i + 1) % phases.len()] * phases[i].conj()).arg())
            .sum())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugePatchReport {
    /// max ‖f₋ − e^{iη} g₋‖ over nodes with |Γ| > 10⁻⁶.
    pub max_transition_error: f64,
    /// Winding of η along k₂ = 0.
    pub winding_k2_zero: f64,
    /// Winding of η along k₂ = π.
    pub winding_k2_pi: f64,
    /// Im(K^up + K^low) = winding along k₂ = 0 minus winding along k₂ = π.
    pub k_sum_imag: f64,
    /// Nodes where the normalization of f₋ falls below [`PATCH_SINGULAR_TOL`].
    pub f_singular_nodes: Vec<(usize, usize)>,
    /// Nodes where the normalization of g₋ falls below [`PATCH_SINGULAR_TOL`].
    pub g_singular_nodes: Vec<(usize, usize)>,
}

impl GaugePatchReport {
    pub fn passed(&self) -> bool {
        self.max_transition_error < 1e-10 && (self.k_sum_imag + 2.0 * PI).abs() < 0.01 * 2.0 * PI
    }
}

pub fn gauge_patch_report(p: &GaugePatchPair, grid: &BZGrid) -> Result<GaugePatchReport> {
    let n = grid.n();
    let mut max_transition_error: f64 = 0.0;
    let mut f_singular_nodes = Vec::new();
    let mut g_singular_nodes = Vec::new();
    for m2 in 0..n {
        for m1 in 0..n {
            let k = grid.k(m1, m2);
            if p.f_denominator(k) < PATCH_SINGULAR_TOL {
                f_singular_nodes.push((m1, m2));
            }
            if p.g_denominator(k) < PATCH_SINGULAR_TOL {
                g_singular_nodes.push((m1, m2));
            }
            if p.gamma(k).norm() <= 1e-6 {
                continue;
            }
            let (Some(f), Some(g), Some(z)) = (p.f_minus(k), p.g_minus(k), p.transition_phase(k))
            else {
                continue;
            };
            let err = ((f[0] - z * g[0]).norm_sqr() + (f[1] - z * g[1]).norm_sqr()).sqrt();
            max_transition_error = max_transition_error.max(err);
        }
    }
    let line = |k2: f64| -> Vec<(f64, f64)> {
        (0..n).map(|m1| (grid.k(m1, 0).0, k2)).collect()
    };
    let winding_k2_zero = p.winding(&line(0.0))?;
    let winding_k2_pi = p.winding(&line(PI))?;
    Ok(GaugePatchReport {
        max_transition_error,
        winding_k2_zero,
        winding_k2_pi,
        k_sum_imag: winding_k2_zero - winding_k2_pi,
        f_singular_nodes,
        g_singular_nodes,
    })
}

pub fn gauge_patch_check(p: &GaugePatchPair, grid: &BZGrid) -> Result<bool> {
    Ok(gauge_patch_report(p, grid)?.passed())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::hermitian_residual;
    use crate::lattice::{Boundary, LatticeSpec};
    use crate::model::build_haldane;
    use crate::spectral::diagonalize;

    fn haldane(tp: f64) -> BlochHamiltonian {
        BlochHamiltonian::haldane(HaldaneParams::new(1.0, tp), Chirality::Plus)
    }

    #[test]
    fn closed_form_matches_hopping_table() {
        for &(tp, lv) in &[(0.1, 0.0), (0.25, 0.4), (-0.3, -0.2)] {
            let p = HaldaneParams::new(0.8, tp).with_staggered(lv);
            let bh = BlochHamiltonian::haldane(p, Chirality::Plus);
            let table = haldane_table(&p, Chirality::Plus);
            for &k in &[(0.0, 0.0), (0.3, -1.1), (2.0, 2.9), (-3.0, 0.7)] {
                let d = &bh.eval(k) - &table.bloch(k);
                assert!(d.norm_l2() < 1e-13, "k = {k:?}");
            }
        }
    }

    #[test]
    fn bloch_examples() {
        let bh = haldane(0.1);
        let e0 = bh.energies((0.0, 0.0)).unwrap();
        assert!((e0[0] + 3.0).abs() < 1e-12 && (e0[1] - 3.0).abs() < 1e-12);
        let m = 3.0 * 3f64.sqrt() * 0.1;
        let h = bh.eval(DIRAC_K);
        assert!(h[(1, 0)].norm() < 1e-12);
        assert!((h[(1, 1)].re - m).abs() < 1e-12);
        let h = bh.eval((-DIRAC_K.0, -DIRAC_K.1));
        assert!((h[(1, 1)].re + m).abs() < 1e-12);
    }

    #[test]
    fn bloch_is_hermitian_and_periodic() {
        let km = BlochHamiltonian::kane_mele(&KaneMeleParams {
            lambda_r: 0.05,
            ..KaneMeleParams::clean(HaldaneParams::new(1.0, 0.1))
        })
        .unwrap();
        for bh in [haldane(0.1), km] {
            for &k in &[(0.4, 1.3), (-2.2, 0.9)] {
                let h = bh.eval(k);
                assert!(hermitian_residual(h.as_ref()) < 1e-14);
                let shifted = bh.eval((k.0 + 2.0 * PI, k.1 - 2.0 * PI));
                assert!((&h - &shifted).norm_l2() < 1e-12);
            }
        }
    }

    #[test]
    fn energy_identity() {
        let p = GaugePatchPair::new(HaldaneParams::new(1.0, 0.1)).unwrap();
        let bh = haldane(0.1);
        for &k in &[(0.1, 0.2), (1.7, -2.5), (3.0, 3.0)] {
            let e = bh.energies(k).unwrap();
            let expected = p.energy(k);
            assert!((e[1] - expected).abs() < 1e-12 && (e[0] + expected).abs() < 1e-12);
        }
    }

    #[test]
    fn dirac_points_match_newton_roots() {
        let pts = dirac_report(&haldane(0.1)).unwrap();
        let m = 3.0 * 3f64.sqrt() * 0.1;
        assert!((pts[0].delta - m).abs() < 1e-12 && (pts[1].delta + m).abs() < 1e-12);
        // Oracle: Newton iteration on Γ(k) = 0 from nearby starting points.
        for (start, expected) in [((2.0, 2.2), pts[0].k), ((-2.2, -2.0), pts[1].k)] {
            let mut k: (f64, f64) = start;
            for _ in 0..50 {
                let g = haldane_gamma(1.0, k);
                // ∂Γ/∂k₁ = i e^{ik₁}, ∂Γ/∂k₂ = −i e^{−ik₂}
                let j1 = c64::new(0.0, 1.0) * c64::from_polar(1.0, k.0);
                let j2 = c64::new(0.0, -1.0) * c64::from_polar(1.0, -k.1);
                // solve [Re; Im] system [[j1.re, j2.re], [j1.im, j2.im]] dk = −[g.re; g.im]
                let det = j1.re * j2.im - j2.re * j1.im;
                let d1 = (-g.re * j2.im + g.im * j2.re) / det;
                let d2 = (-j1.re * g.im + j1.im * g.re) / det;
                k = (k.0 + d1, k.1 + d2);
            }
            assert!((k.0 - expected.0).abs() < 1e-10 && (k.1 - expected.1).abs() < 1e-10);
        }
        let flat = dirac_report(&haldane(0.0)).unwrap();
        assert!(flat.iter().all(|d| d.delta.abs() < 1e-15));
        let dead = BlochHamiltonian::haldane(HaldaneParams::new(0.0, 0.1), Chirality::Plus);
        assert!(dirac_report(&dead).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(BZGrid::new(4).is_err());
        assert!(BZGrid::with_dirac_nodes(20).is_err());
        let g = BZGrid::with_dirac_nodes(24).unwrap();
        assert_eq!(g.nearest_node(DIRAC_K), (8, 8));
        assert_eq!(g.nearest_node((-DIRAC_K.0, -DIRAC_K.1)), (16, 16));
    }

    #[test]
    fn haldane_chern_numbers() {
        let g = BZGrid::new(24).unwrap();
        assert_eq!(chern_lattice(&haldane(0.1), &g).unwrap(), 1);
        assert_eq!(chern_lattice(&haldane(-0.1), &g).unwrap(), -1);
        let minus = BlochHamiltonian::haldane(HaldaneParams::new(1.0, 0.1), Chirality::Minus);
        assert_eq!(chern_lattice(&minus, &g).unwrap(), -1);
        let big = 10.0 * 3.0 * 3f64.sqrt() * 0.1;
        let trivial =
            BlochHamiltonian::haldane(HaldaneParams::new(1.0, 0.1).with_staggered(big), Chirality::Plus);
        assert_eq!(chern_lattice(&trivial, &g).unwrap(), 0);
    }

    #[test]
    fn chern_is_grid_stable() {
        for n in [12, 24, 48] {
            let g = BZGrid::new(n).unwrap();
            let r = chern_lattice_report(&haldane(0.1), &g).unwrap();
            assert_eq!(r.chern, 1);
            assert!((r.raw - 1.0).abs() < INTEGER_TOL);
        }
    }

    #[test]
    fn gap_closure_on_grid_is_error() {
        let g = BZGrid::with_dirac_nodes(24).unwrap();
        assert!(matches!(chern_lattice(&haldane(0.0), &g), Err(Error::GapClosed(_))));
        assert!(bulk_gap(&haldane(0.0), &g).unwrap() < 1e-12);
        assert!((bulk_gap(&haldane(0.1), &g).unwrap() - 6.0 * 3f64.sqrt() * 0.1).abs() < 1e-9);
    }

    #[test]
    fn kane_mele_spin_chern_numbers_cancel() {
        let g = BZGrid::new(24).unwrap();
        let km = BlochHamiltonian::kane_mele(&KaneMeleParams::clean(HaldaneParams::new(1.0, 0.1))).unwrap();
        let down = BlochHamiltonian::haldane(HaldaneParams::new(1.0, 0.1), Chirality::Minus);
        assert_eq!(chern_lattice(&down, &g).unwrap(), -chern_lattice(&haldane(0.1), &g).unwrap());
        assert_eq!(chern_lattice(&km, &g).unwrap(), 0);
    }

    #[test]
    fn ebz_index() {
        let g = BZGrid::new(24).unwrap();
        let p = HaldaneParams::new(1.0, 0.1);
        let km = BlochHamiltonian::kane_mele(&KaneMeleParams::clean(p)).unwrap();
        assert_eq!(z2_ebz(&km, &g).unwrap(), 1);
        let rashba =
            BlochHamiltonian::kane_mele(&KaneMeleParams { lambda_r: 0.05, ..KaneMeleParams::clean(p) })
                .unwrap();
        assert_eq!(z2_ebz(&rashba, &g).unwrap(), 1);
        let trivial = BlochHamiltonian::kane_mele(&KaneMeleParams::clean(p.with_staggered(1.0))).unwrap();
        assert_eq!(z2_ebz(&trivial, &g).unwrap(), 0);
        assert!(z2_ebz(&haldane(0.1), &g).is_err());
    }

    #[test]
    fn ebz_atomic_limit_is_trivial() {
        let g = BZGrid::new(12).unwrap();
        let p = HaldaneParams::new(0.0, 0.0).with_staggered(1.0);
        let km = BlochHamiltonian::kane_mele(&KaneMeleParams::clean(p)).unwrap();
        assert_eq!(z2_ebz(&km, &g).unwrap(), 0);
    }

    #[test]
    fn gauge_patches_reproduce_minus_two_pi_i() {
        let p = GaugePatchPair::new(HaldaneParams::new(1.0, 0.1)).unwrap();
        let g = BZGrid::new(48).unwrap();
        let r = gauge_patch_report(&p, &g).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.winding_k2_zero.abs() < 1e-12);
        assert!((r.winding_k2_pi - 2.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn patch_singularities_sit_at_opposite_dirac_points() {
        let p = GaugePatchPair::new(HaldaneParams::new(1.0, 0.1)).unwrap();
        let g = BZGrid::with_dirac_nodes(48).unwrap();
        let r = gauge_patch_report(&p, &g).unwrap();
        let minus_k = g.nearest_node((-DIRAC_K.0, -DIRAC_K.1));
        let plus_k = g.nearest_node(DIRAC_K);
        assert_eq!(r.f_singular_nodes, vec![minus_k]);
        assert_eq!(r.g_singular_nodes, vec![plus_k]);
        assert!(p.f_minus(grid_k(&g, minus_k)).is_none());
        assert!(p.g_minus(grid_k(&g, plus_k)).is_none());
    }

    fn grid_k(g: &BZGrid, m: (usize, usize)) -> (f64, f64) {
        g.k(m.0, m.1)
    }

    #[test]
    fn contractible_loop_has_no_winding() {
        let p = GaugePatchPair::new(HaldaneParams::new(1.0, 0.1)).unwrap();
        let circle: Vec<(f64, f64)> = (0..64)
            .map(|i| {
                let phi = 2.0 * PI * i as f64 / 64.0;
                (0.5 * phi.cos(), 0.5 * phi.sin())
            })
            .collect();
        assert!(p.winding(&circle).unwrap().abs() < 1e-12);
        let around_k: Vec<(f64, f64)> = circle.iter().map(|k| (k.0 + DIRAC_K.0, k.1 + DIRAC_K.1)).collect();
        assert!((p.winding(&around_k).unwrap().abs() - 2.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn periodic_box_spectrum_matches_bloch_bands() {
        let l = 6;
        let p = HaldaneParams::new(1.0, 0.1).with_staggered(0.2);
        let spec = LatticeSpec::spinless(l, l, Boundary::Periodic, 2).unwrap();
        let box_e = diagonalize(&build_haldane(&p, &spec, Chirality::Plus).unwrap())
            .unwrap()
            .eigenvalues()
            .to_vec();
        let bh = BlochHamiltonian::haldane(p, Chirality::Plus);
        let g = BZGrid::new(l).unwrap();
        let mut bands: Vec<f64> = (0..l * l)
            .flat_map(|i| bh.energies(g.k(i % l, i / l)).unwrap())
            .collect();
        bands.sort_by(f64::total_cmp);
        for (a, b) in box_e.iter().zip(&bands) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
