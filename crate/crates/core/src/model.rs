//! Haldane and Kane-Mele Hamiltonians on ℤ² with two orbitals (a, b) per
//! site, on-site disorder, and the odd time-reversal operator.
//!
//! Every translation-invariant model is first written as a [`HoppingTable`];
//! the same table is realized on a finite box and Fourier-transformed into a
//! Bloch matrix, so real-space and momentum-space code share one source of
//! truth for the hopping integrals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::{c64, frobenius, hermitian_residual, CMat, I};
use crate::error::{domain, Error, Result};
use crate::lattice::{Boundary, LatticeSpec, Site};
use crate::ncindex::FluxUnitary;

/// Orbital labels.
pub const ORBITAL_A: usize = 0;
pub const ORBITAL_B: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HaldaneParams {
    pub t: f64,
    pub t_prime: f64,
    #[serde(default)]
    pub lambda_v: f64,
}

impl HaldaneParams {
    pub fn new(t: f64, t_prime: f64) -> Self {
        HaldaneParams { t, t_prime, lambda_v: 0.0 }
    }

    pub fn with_staggered(self, lambda_v: f64) -> Self {
        HaldaneParams { lambda_v, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KaneMeleParams {
    pub haldane: HaldaneParams,
    pub lambda_r: f64,
    pub disorder_w: f64,
    pub seed: u64,
}

impl KaneMeleParams {
    pub fn clean(haldane: HaldaneParams) -> Self {
        KaneMeleParams { haldane, lambda_r: 0.0, disorder_w: 0.0, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chirality {
    Plus,
    Minus,
}

impl Chirality {
    pub fn sign(self) -> f64 {
        match self {
            Chirality::Plus => 1.0,
            Chirality::Minus => -1.0,
        }
    }
}

/// One hopping integral: `H[(n, row), (n + disp, col)] += amp`, where `row`
/// and `col` are internal (orbital, spin) components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hop {
    pub row: usize,
    pub col: usize,
    pub disp: (i64, i64),
    pub amp: c64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoppingTable {
    per_site: usize,
    hops: Vec<Hop>,
}

impl HoppingTable {
    pub fn new(per_site: usize) -> Self {
        HoppingTable { per_site, hops: Vec::new() }
    }

    pub fn per_site(&self) -> usize {
        self.per_site
    }

    pub fn hops(&self) -> &[Hop] {
        &self.hops
    }

    pub fn push(&mut self, row: usize, col: usize, disp: (i64, i64), amp: c64) {
        if amp != c64::new(0.0, 0.0) {
            self.hops.push(Hop { row, col, disp, amp });
        }
    }

    /// Dense matrix on a finite box. Hops leaving an open box are dropped.
    pub fn realize(&self, spec: &LatticeSpec) -> Result<Hamiltonian> {
        if spec.per_site() != self.per_site {
            return Err(Error::Config(format!(
                "table has {} components per site, box has {}",
                self.per_site,
                spec.per_site()
            )));
        }
        let per = self.per_site;
        let mut m = CMat::zeros(spec.dim(), spec.dim());
        for (n_idx, n) in spec.sites().enumerate() {
            for hop in &self.hops {
                let Some(target) = spec.shift(n, hop.disp.0, hop.disp.1) else {
                    continue;
                };
                let m_idx = spec.site_index(target).expect("shift stays in box");
                m[(n_idx * per + hop.row, m_idx * per + hop.col)] += hop.amp;
            }
        }
        Hamiltonian::new(*spec, m)
    }

    /// Bloch matrix Σ_d amp · e^{i k·d}.
    pub fn bloch(&self, k: (f64, f64)) -> CMat {
        let mut m = CMat::zeros(self.per_site, self.per_site);
        for hop in &self.hops {
            let phase = k.0 * hop.disp.0 as f64 + k.1 * hop.disp.1 as f64;
            m[(hop.row, hop.col)] += hop.amp * c64::from_polar(1.0, phase);
        }
        m
    }
}

/// Nearest-neighbor bonds `a(n) → b(n + d)` of the honeycomb lattice drawn on
/// ℤ², paired with the in-plane bond vector used by the Rashba term.
pub const AB_BONDS: [((i64, i64), (f64, f64)); 3] = [
    ((0, 0), (0.0, 1.0)),
    ((-1, 0), (-0.866_025_403_784_438_6, -0.5)),
    ((0, 1), (0.866_025_403_784_438_6, -0.5)),
];

/// Second-neighbor hops on orbital a with the sign of their `i t'` factor.
const A_SECOND: [((i64, i64), f64); 6] = [
    ((-1, -1), 1.0),
    ((0, -1), -1.0),
    ((1, 0), 1.0),
    ((1, 1), -1.0),
    ((0, 1), 1.0),
    ((-1, 0), -1.0),
];

/// Second-neighbor hops on orbital b with the sign of their `i t'` factor.
const B_SECOND: [((i64, i64), f64); 6] = [
    ((-1, 0), 1.0),
    ((-1, -1), -1.0),
    ((0, -1), 1.0),
    ((1, 0), -1.0),
    ((1, 1), 1.0),
    ((0, 1), -1.0),
];

/// Nearest-neighbor hops out of orbital b onto orbital a.
const BA_FIRST: [(i64, i64); 3] = [(0, 0), (0, -1), (1, 0)];

/// Push one Haldane copy into `table`; `comp(orbital)` maps an orbital to its
/// internal component.
fn push_haldane(
    table: &mut HoppingTable,
    p: &HaldaneParams,
    chirality: Chirality,
    comp: impl Fn(usize) -> usize,
) {
    let (a, b) = (comp(ORBITAL_A), comp(ORBITAL_B));
    let t = c64::new(p.t, 0.0);
    let tp = I * (chirality.sign() * p.t_prime);
    for (d, _) in AB_BONDS {
        table.push(a, b, d, t);
    }
    for d in BA_FIRST {
        table.push(b, a, d, t);
    }
    for (d, s) in A_SECOND {
        table.push(a, a, d, tp * s);
    }
    for (d, s) in B_SECOND {
        table.push(b, b, d, tp * s);
    }
    table.push(a, a, (0, 0), c64::new(p.lambda_v, 0.0));
    table.push(b, b, (0, 0), c64::new(-p.lambda_v, 0.0));
}

/// Single Haldane copy with two internal components (a, b).
pub fn haldane_table(p: &HaldaneParams, chirality: Chirality) -> HoppingTable {
    let mut table = HoppingTable::new(2);
    push_haldane(&mut table, p, chirality, |mu| mu);
    table
}

/// Kane-Mele table on components `orbital * 2 + spin`: spin-↑ carries
/// Haldane(+t'), spin-↓ Haldane(−t'), and the Rashba term couples spins on
/// the nearest-neighbor bonds.
pub fn kane_mele_table(p: &KaneMeleParams) -> HoppingTable {
    let mut table = HoppingTable::new(4);
    push_haldane(&mut table, &p.haldane, Chirality::Plus, |mu| 2 * mu);
    push_haldane(&mut table, &p.haldane, Chirality::Minus, |mu| 2 * mu + 1);
    if p.lambda_r != 0.0 {
        for (d, (dx, dy)) in AB_BONDS {
            // i λ_R (σ_x d_y − σ_y d_x) on a → b, Hermitian conjugate on b → a
            let block = rashba_block(p.lambda_r, dx, dy);
            let back = (-d.0, -d.1);
            for s in 0..2 {
                for s2 in 0..2 {
                    let v = block[s][s2];
                    table.push(2 * ORBITAL_A + s, 2 * ORBITAL_B + s2, d, v);
                    table.push(2 * ORBITAL_B + s2, 2 * ORBITAL_A + s, back, v.conj());
                }
            }
        }
    }
    table
}

fn rashba_block(lambda_r: f64, dx: f64, dy: f64) -> [[c64; 2]; 2] {
    // σ_x d_y − σ_y d_x = [[0, d_y + i d_x], [d_y − i d_x, 0]]
    let up_down = c64::new(dy, dx);
    let down_up = c64::new(dy, -dx);
    let f = I * lambda_r;
    [[c64::new(0.0, 0.0), f * up_down], [f * down_up, c64::new(0.0, 0.0)]]
}

/// A dense Hermitian tight-binding Hamiltonian on a finite box.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    spec: LatticeSpec,
    matrix: CMat,
}

impl Hamiltonian {
    /// Hermiticity is checked at ‖H − H†‖_F < 10⁻¹²·dim.
    pub fn new(spec: LatticeSpec, matrix: CMat) -> Result<Self> {
        let dim = spec.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return domain(format!(
                "matrix is {}×{}, box dimension is {dim}",
                matrix.nrows(),
                matrix.ncols()
            ));
        }
        let residual = hermitian_residual(matrix.as_ref());
        let allowed = 1e-12 * dim as f64;
        if residual >= allowed {
            return Err(Error::NotHermitian { residual, allowed });
        }
        Ok(Hamiltonian { spec, matrix })
    }

    pub fn zero(spec: LatticeSpec) -> Self {
        Hamiltonian { spec, matrix: CMat::zeros(spec.dim(), spec.dim()) }
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn scaled(&self, s: f64) -> Hamiltonian {
        let mut m = self.matrix.clone();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                m[(i, j)] *= s;
            }
        }
        Hamiltonian { spec: self.spec, matrix: m }
    }

    pub fn sum(&self, other: &Hamiltonian) -> Result<Hamiltonian> {
        if self.spec != other.spec {
            return domain("Hamiltonians live on different boxes");
        }
        Ok(Hamiltonian { spec: self.spec, matrix: &self.matrix + &other.matrix })
    }

    pub fn difference(&self, other: &Hamiltonian) -> Result<Hamiltonian> {
        if self.spec != other.spec {
            return domain("Hamiltonians live on different boxes");
        }
        Ok(Hamiltonian { spec: self.spec, matrix: &self.matrix - &other.matrix })
    }

    /// Largest site separation (ℓ∞, minimum image for periodic boxes)
    /// carrying a nonzero matrix element.
    pub fn hopping_range(&self) -> i64 {
        let per = self.spec.per_site();
        let n = self.dim();
        let mut range = 0;
        for j in 0..n {
            for i in 0..n {
                if self.matrix[(i, j)] == c64::new(0.0, 0.0) {
                    continue;
                }
                let si = self.spec.site_at(i / per);
                let sj = self.spec.site_at(j / per);
                let sep = |a: i64, b: i64, l: usize| {
                    let d = (a - b).abs();
                    match self.spec.boundary() {
                        Boundary::Open => d,
                        Boundary::Periodic => d.min(l as i64 - d),
                    }
                };
                let r = sep(si.0, sj.0, self.spec.l1()).max(sep(si.1, sj.1, self.spec.l2()));
                range = range.max(r);
            }
        }
        range
    }
}

fn require_two_orbitals(spec: &LatticeSpec) -> Result<()> {
    if spec.orbitals() != 2 {
        return Err(Error::Config(format!(
            "Haldane-type models need 2 orbitals per site, box has {}",
            spec.orbitals()
        )));
    }
    Ok(())
}

/// Haldane model on `spec`. On a spinless box this is the plain two-orbital
/// model; on a spinful box the model occupies the spin-↑ channel and the
/// spin-↓ block is left at zero.
pub fn build_haldane(
    params: &HaldaneParams,
    spec: &LatticeSpec,
    chirality: Chirality,
) -> Result<Hamiltonian> {
    require_two_orbitals(spec)?;
    let table = if spec.spins() == 1 {
        haldane_table(params, chirality)
    } else {
        let mut t = HoppingTable::new(4);
        push_haldane(&mut t, params, chirality, |mu| 2 * mu);
        t
    };
    table.realize(spec)
}

/// Kane-Mele model: two time-reversed Haldane copies, Rashba coupling, and
/// on-site disorder of amplitude `disorder_w` drawn from `seed`.
pub fn build_kane_mele(params: &KaneMeleParams, spec: &LatticeSpec) -> Result<Hamiltonian> {
    require_two_orbitals(spec)?;
    if spec.spins() != 2 {
        return Err(Error::Config("Kane-Mele needs a spinful box".into()));
    }
    let h = kane_mele_table(params).realize(spec)?;
    add_disorder(&h, params.disorder_w, params.seed)
}

/// On-site energies v_n uniform in [−W/2, W/2), one draw per site shared by
/// every orbital and spin of that site.
pub fn disorder_potential(spec: &LatticeSpec, w: f64, seed: u64) -> Result<Vec<f64>> {
    if !(w >= 0.0) || !w.is_finite() {
        return domain(format!("disorder amplitude must be finite and ≥ 0, got {w}"));
    }
    if w == 0.0 {
        return Ok(vec![0.0; spec.n_sites()]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..spec.n_sites()).map(|_| w * (rng.gen::<f64>() - 0.5)).collect())
}

pub fn add_disorder(h: &Hamiltonian, w: f64, seed: u64) -> Result<Hamiltonian> {
    let v = disorder_potential(h.spec(), w, seed)?;
    if w == 0.0 {
        return Ok(h.clone());
    }
    let per = h.spec().per_site();
    let mut m = h.matrix().clone();
    for (s, &vs) in v.iter().enumerate() {
        for c in 0..per {
            m[(s * per + c, s * per + c)] += c64::new(vs, 0.0);
        }
    }
    Ok(Hamiltonian { spec: *h.spec(), matrix: m })
}

/// Θφ = U^Θ φ̄ with U^Θ = 1_sites ⊗ 1_orbitals ⊗ [[0, 1], [−1, 0]]_spin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeReversalOp {
    spec: LatticeSpec,
}

impl TimeReversalOp {
    pub fn new(spec: &LatticeSpec) -> Result<Self> {
        if spec.spins() != 2 {
            return domain("odd time reversal needs two spin components");
        }
        Ok(TimeReversalOp { spec: *spec })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    /// Sign of the U^Θ entry mapping spin `s̄` onto spin `s`.
    #[inline]
    fn sign(spin: usize) -> f64 {
        if spin == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Θφ
    pub fn apply(&self, phi: &[c64]) -> Vec<c64> {
        (0..phi.len())
            .map(|i| {
                let s = i % 2;
                let partner = i ^ 1;
                phi[partner].conj() * Self::sign(s)
            })
            .collect()
    }

    /// U^Θ M̄ (U^Θ)†
    pub fn conjugate_operator(&self, m: &CMat) -> CMat {
        CMat::from_fn(m.nrows(), m.ncols(), |i, j| {
            m[(i ^ 1, j ^ 1)].conj() * (Self::sign(i % 2) * Self::sign(j % 2))
        })
    }

    /// The unitary part U^Θ as a dense matrix.
    pub fn unitary(&self) -> CMat {
        let n = self.spec.dim();
        CMat::from_fn(n, n, |i, j| {
            if j == i ^ 1 {
                c64::new(Self::sign(i % 2), 0.0)
            } else {
                c64::new(0.0, 0.0)
            }
        })
    }
}

/// ‖U^Θ H̄ (U^Θ)† − H‖_F
pub fn trs_residual(h: &Hamiltonian, theta: &TimeReversalOp) -> Result<f64> {
    if h.spec().dim() != theta.spec().dim() || h.spec().spins() != 2 {
        return domain("time-reversal operator and Hamiltonian dimensions differ");
    }
    let conj = theta.conjugate_operator(h.matrix());
    Ok(frobenius((&conj - h.matrix()).as_ref()))
}

pub fn check_odd_trs(h: &Hamiltonian, theta: &TimeReversalOp, tol: f64) -> Result<bool> {
    Ok(trs_residual(h, theta)? < tol * h.dim() as f64)
}

/// Θ² = −1 on the standard basis and U^Θ U_a (U^Θ)* = U_a.
pub fn check_theta_conditions(theta: &TimeReversalOp, u_a: &FluxUnitary) -> bool {
    if theta.spec() != u_a.spec() {
        return false;
    }
    let n = theta.spec().dim();
    let squares_to_minus_one = (0..n).all(|i| {
        let mut e = vec![c64::new(0.0, 0.0); n];
        e[i] = c64::new(1.0, 0.0);
        let tt = theta.apply(&theta.apply(&e));
        tt.iter().zip(&e).all(|(a, b)| *a == -*b)
    });
    // U^Θ is real and pairs index i with i ^ 1, so U^Θ U_a (U^Θ)† is diagonal
    // with entry phase[i ^ 1] at i.
    let phases = u_a.diagonal();
    let commutes = (0..n).all(|i| (phases[i ^ 1] - phases[i]).norm() < 1e-14);
    squares_to_minus_one && commutes
}

/// Spin-block view of a spinful Hamiltonian: (H_↑↑, H_↓↓, ‖off-diagonal blocks‖_F).
pub fn spin_blocks(h: &Hamiltonian) -> Result<(CMat, CMat, f64)> {
    if h.spec().spins() != 2 {
        return domain("spin blocks need a spinful box");
    }
    let half = h.dim() / 2;
    let m = h.matrix();
    let up = CMat::from_fn(half, half, |i, j| m[(2 * i, 2 * j)]);
    let down = CMat::from_fn(half, half, |i, j| m[(2 * i + 1, 2 * j + 1)]);
    let mut off = 0.0;
    for j in 0..half {
        for i in 0..half {
            off += m[(2 * i, 2 * j + 1)].norm_sqr() + m[(2 * i + 1, 2 * j)].norm_sqr();
        }
    }
    Ok((up, down, off.sqrt()))
}

/// Matrix element helper.
pub fn element(h: &Hamiltonian, row: (Site, usize, usize), col: (Site, usize, usize)) -> Option<c64> {
    let spec = h.spec();
    let per = spec.per_site();
    let r = spec.site_index(row.0)? * per + row.1 * spec.spins() + row.2;
    let c = spec.site_index(col.0)? * per + col.1 * spec.spins() + col.2;
    Some(h.matrix()[(r, c)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{central_dual_point, interior_dual_points};
    use crate::spectral::diagonalize;
    use rand::Rng;

    fn km_spec(l: usize, b: Boundary) -> LatticeSpec {
        LatticeSpec::new(l, l, b, 2).unwrap()
    }

    #[test]
    fn haldane_requires_two_orbitals() {
        let spec = LatticeSpec::spinless(4, 4, Boundary::Open, 3).unwrap();
        let err = build_haldane(&HaldaneParams::new(1.0, 0.1), &spec, Chirality::Plus);
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn zero_couplings_give_zero_matrix() {
        let spec = LatticeSpec::spinless(4, 4, Boundary::Periodic, 2).unwrap();
        let h = build_haldane(&HaldaneParams::new(0.0, 0.0), &spec, Chirality::Plus).unwrap();
        assert_eq!(frobenius(h.matrix().as_ref()), 0.0);
    }

    #[test]
    fn haldane_equations_literal() {
        // (Hφ)^a(n) for φ = δ at a few neighbor positions, read off column by column
        let spec = LatticeSpec::spinless(5, 5, Boundary::Open, 2).unwrap();
        let h = build_haldane(&HaldaneParams::new(1.0, 0.1), &spec, Chirality::Plus).unwrap();
        let n = Site(2, 2);
        let e = |row: (Site, usize), col: (Site, usize)| {
            element(&h, (row.0, row.1, 0), (col.0, col.1, 0)).unwrap()
        };
        let a = ORBITAL_A;
        let b = ORBITAL_B;
        assert_eq!(e((n, a), (Site(1, 2), b)), c64::new(1.0, 0.0));
        assert_eq!(e((n, a), (Site(2, 2), b)), c64::new(1.0, 0.0));
        assert_eq!(e((n, a), (Site(2, 3), b)), c64::new(1.0, 0.0));
        assert_eq!(e((n, a), (Site(1, 1), a)), c64::new(0.0, 0.1));
        assert_eq!(e((n, a), (Site(2, 1), a)), c64::new(0.0, -0.1));
        assert_eq!(e((n, a), (Site(3, 2), a)), c64::new(0.0, 0.1));
        assert_eq!(e((n, a), (Site(3, 3), a)), c64::new(0.0, -0.1));
        assert_eq!(e((n, a), (Site(2, 3), a)), c64::new(0.0, 0.1));
        assert_eq!(e((n, a), (Site(1, 2), a)), c64::new(0.0, -0.1));
        assert_eq!(e((n, b), (Site(2, 2), a)), c64::new(1.0, 0.0));
        assert_eq!(e((n, b), (Site(2, 1), a)), c64::new(1.0, 0.0));
        assert_eq!(e((n, b), (Site(3, 2), a)), c64::new(1.0, 0.0));
        assert_eq!(e((n, b), (Site(1, 2), b)), c64::new(0.0, 0.1));
        assert_eq!(e((n, b), (Site(1, 1), b)), c64::new(0.0, -0.1));
        assert_eq!(e((n, b), (Site(2, 1), b)), c64::new(0.0, 0.1));
        assert_eq!(e((n, b), (Site(3, 2), b)), c64::new(0.0, -0.1));
        assert_eq!(e((n, b), (Site(3, 3), b)), c64::new(0.0, 0.1));
        assert_eq!(e((n, b), (Site(2, 3), b)), c64::new(0.0, -0.1));
        assert_eq!(h.hopping_range(), 1);
    }

    #[test]
    fn haldane_periodic_gap_at_dirac_points() {
        let spec = LatticeSpec::spinless(12, 12, Boundary::Periodic, 2).unwrap();
        let h = build_haldane(&HaldaneParams::new(1.0, 0.1), &spec, Chirality::Plus).unwrap();
        let d = diagonalize(&h).unwrap();
        let gap = crate::spectral::spectral_gap(&d, 0.0).gap;
        assert!((gap - 2.0 * 3f64.sqrt() * 3.0 * 0.1).abs() < 1e-6, "{gap}");

        let h0 = build_haldane(&HaldaneParams::new(1.0, 0.0), &spec, Chirality::Plus).unwrap();
        let d0 = diagonalize(&h0).unwrap();
        assert!(crate::spectral::spectral_gap(&d0, 0.0).gap < 1e-9);
    }

    #[test]
    fn kane_mele_decouples_without_rashba() {
        let spec = km_spec(6, Boundary::Periodic);
        let p = KaneMeleParams::clean(HaldaneParams::new(1.0, 0.1));
        let h = build_kane_mele(&p, &spec).unwrap();
        let (up, down, off) = spin_blocks(&h).unwrap();
        assert_eq!(off, 0.0);
        let spinless = LatticeSpec::spinless(6, 6, Boundary::Periodic, 2).unwrap();
        let hu = build_haldane(&p.haldane, &spinless, Chirality::Plus).unwrap();
        let hd = build_haldane(&p.haldane, &spinless, Chirality::Minus).unwrap();
        assert_eq!(frobenius((&up - hu.matrix()).as_ref()), 0.0);
        assert_eq!(frobenius((&down - hd.matrix()).as_ref()), 0.0);
        // H_↓ is the complex conjugate of H_↑
        let conj_up = CMat::from_fn(up.nrows(), up.ncols(), |i, j| up[(i, j)].conj());
        assert_eq!(frobenius((&conj_up - &down).as_ref()), 0.0);
    }

    #[test]
    fn kane_mele_is_odd_trs_for_all_perturbations() {
        let spec = km_spec(8, Boundary::Open);
        let theta = TimeReversalOp::new(&spec).unwrap();
        for (lr, w, seed) in [(0.05, 0.0, 0), (0.0, 0.3, 1), (0.2, 1.0, 9), (0.05, 0.2, 3)] {
            let p = KaneMeleParams {
                haldane: HaldaneParams::new(1.0, 0.1).with_staggered(0.1),
                lambda_r: lr,
                disorder_w: w,
                seed,
            };
            let h = build_kane_mele(&p, &spec).unwrap();
            assert!(check_odd_trs(&h, &theta, 1e-12).unwrap());
            assert!(trs_residual(&h, &theta).unwrap() < 1e-13);
            assert!(hermitian_residual(h.matrix().as_ref()) < 1e-12 * h.dim() as f64);
            assert_eq!(h.hopping_range(), 1);
        }
    }

    #[test]
    fn single_haldane_block_breaks_trs() {
        let spec = km_spec(4, Boundary::Open);
        let theta = TimeReversalOp::new(&spec).unwrap();
        let h = build_haldane(&HaldaneParams::new(1.0, 0.1), &spec, Chirality::Plus).unwrap();
        assert!(!check_odd_trs(&h, &theta, 1e-12).unwrap());
        assert!(check_odd_trs(&Hamiltonian::zero(spec), &theta, 1e-12).unwrap());
    }

    #[test]
    fn trs_dimension_mismatch() {
        let theta = TimeReversalOp::new(&km_spec(4, Boundary::Open)).unwrap();
        let other = Hamiltonian::zero(km_spec(5, Boundary::Open));
        assert!(check_odd_trs(&other, &theta, 1e-12).is_err());
        assert!(TimeReversalOp::new(&LatticeSpec::spinless(4, 4, Boundary::Open, 2).unwrap()).is_err());
    }

    #[test]
    fn kramers_degeneracy_periodic_and_open() {
        for (b, lr, w) in [(Boundary::Periodic, 0.0, 0.0), (Boundary::Open, 0.05, 0.3)] {
            let spec = km_spec(if b == Boundary::Periodic { 12 } else { 6 }, b);
            let p = KaneMeleParams {
                haldane: HaldaneParams::new(1.0, 0.1),
                lambda_r: lr,
                disorder_w: w,
                seed: 5,
            };
            let d = diagonalize(&build_kane_mele(&p, &spec).unwrap()).unwrap();
            for pair in d.eigenvalues().chunks(2) {
                assert!((pair[0] - pair[1]).abs() < 1e-9, "{pair:?}");
            }
        }
    }

    #[test]
    fn disorder_contract() {
        let spec = km_spec(4, Boundary::Open);
        let p = KaneMeleParams::clean(HaldaneParams::new(1.0, 0.1));
        let h = build_kane_mele(&p, &spec).unwrap();
        assert_eq!(add_disorder(&h, 0.0, 7).unwrap(), h);
        let hd = add_disorder(&h, 1.0, 7).unwrap();
        let diff = hd.difference(&h).unwrap();
        let m = diff.matrix();
        for j in 0..h.dim() {
            for i in 0..h.dim() {
                if i != j {
                    assert_eq!(m[(i, j)], c64::new(0.0, 0.0));
                }
            }
        }
        for s in 0..spec.n_sites() {
            let v = m[(4 * s, 4 * s)].re;
            assert!(v.abs() <= 0.5);
            for c in 1..4 {
                assert_eq!(m[(4 * s + c, 4 * s + c)].re, v);
            }
        }
        let again = add_disorder(&h, 1.0, 7).unwrap();
        assert_eq!(again, hd);
        assert!(add_disorder(&h, -0.1, 7).is_err());
        let theta = TimeReversalOp::new(&spec).unwrap();
        assert!(check_odd_trs(&hd, &theta, 1e-12).unwrap());
    }

    #[test]
    fn theta_squares_to_minus_one_and_is_antiunitary() {
        let spec = km_spec(3, Boundary::Open);
        let theta = TimeReversalOp::new(&spec).unwrap();
        let n = spec.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut rand_vec = || -> Vec<c64> {
            (0..n).map(|_| c64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect()
        };
        for _ in 0..100 {
            let psi = rand_vec();
            let tt = theta.apply(&theta.apply(&psi));
            for (a, b) in tt.iter().zip(&psi) {
                assert!((a + b).norm() < 1e-14);
            }
        }
        for _ in 0..20 {
            let (psi, phi) = (rand_vec(), rand_vec());
            let lhs = crate::dense::inner(&theta.apply(&psi), &theta.apply(&phi));
            let rhs = crate::dense::inner(&phi, &psi);
            assert!((lhs - rhs).norm() < 1e-12);
        }
        for a in interior_dual_points(&spec.with_boundary(Boundary::Open), 0) {
            let u = FluxUnitary::new(&spec, a).unwrap();
            assert!(check_theta_conditions(&theta, &u));
        }
        let u = FluxUnitary::new(&spec, central_dual_point(&spec)).unwrap();
        let dense = theta.unitary();
        let ud = u.dense();
        let lhs = &(&dense * &ud) * dense.adjoint();
        assert!(frobenius((&lhs - &ud).as_ref()) < 1e-14);
    }
}
