//! Finite rectangular boxes in ℤ², their dual lattice, and the flat indexing
//! of the orbital/spin Hilbert space on a box.
//!
//! The box is `{0..L1-1} × {0..L2-1}`. Flat indices are site-major, then
//! orbital, then spin, with sites ordered x-fastest.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Open,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Spin {
    Up = 0,
    Down = 1,
}

impl Spin {
    pub fn from_index(i: usize) -> Spin {
        if i == 0 {
            Spin::Up
        } else {
            Spin::Down
        }
    }
}

/// A lattice site. Coordinates are signed so that sites outside a box (as
/// used by the Connes sum) are representable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site(pub i64, pub i64);

impl Site {
    pub fn x(self) -> i64 {
        self.0
    }
    pub fn y(self) -> i64 {
        self.1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeSpec {
    l1: usize,
    l2: usize,
    boundary: Boundary,
    orbitals: usize,
    spins: usize,
}

impl LatticeSpec {
    /// Spinful box (two spin components per orbital).
    pub fn new(l1: usize, l2: usize, boundary: Boundary, orbitals: usize) -> Result<Self> {
        Self::with_spins(l1, l2, boundary, orbitals, 2)
    }

    /// Box carrying a single spin component, used for one Haldane copy.
    pub fn spinless(l1: usize, l2: usize, boundary: Boundary, orbitals: usize) -> Result<Self> {
        Self::with_spins(l1, l2, boundary, orbitals, 1)
    }

    pub fn with_spins(
        l1: usize,
        l2: usize,
        boundary: Boundary,
        orbitals: usize,
        spins: usize,
    ) -> Result<Self> {
        if l1 < 2 || l2 < 2 {
            return domain(format!("box must be at least 2×2, got {l1}×{l2}"));
        }
        if orbitals == 0 {
            return domain("orbitals_per_site must be positive");
        }
        if spins != 1 && spins != 2 {
            return domain(format!("spins must be 1 or 2, got {spins}"));
        }
        Ok(LatticeSpec { l1, l2, boundary, orbitals, spins })
    }

    pub fn l1(&self) -> usize {
        self.l1
    }
    pub fn l2(&self) -> usize {
        self.l2
    }
    pub fn boundary(&self) -> Boundary {
        self.boundary
    }
    pub fn orbitals(&self) -> usize {
        self.orbitals
    }
    pub fn spins(&self) -> usize {
        self.spins
    }
    pub fn n_sites(&self) -> usize {
        self.l1 * self.l2
    }
    /// Internal components per site (orbitals × spins).
    pub fn per_site(&self) -> usize {
        self.orbitals * self.spins
    }
    pub fn dim(&self) -> usize {
        self.n_sites() * self.per_site()
    }

    pub fn with_boundary(&self, boundary: Boundary) -> Self {
        LatticeSpec { boundary, ..*self }
    }

    pub fn contains(&self, site: Site) -> bool {
        site.0 >= 0 && site.1 >= 0 && (site.0 as usize) < self.l1 && (site.1 as usize) < self.l2
    }

    pub fn site_index(&self, site: Site) -> Option<usize> {
        self.contains(site)
            .then(|| site.1 as usize * self.l1 + site.0 as usize)
    }

    pub fn site_at(&self, index: usize) -> Site {
        Site((index % self.l1) as i64, (index / self.l1) as i64)
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.n_sites()).map(move |i| self.site_at(i))
    }

    /// The site reached from `site` by displacement `(d1, d2)`, honoring the
    /// boundary condition. `None` when the hop leaves an open box.
    pub fn shift(&self, site: Site, d1: i64, d2: i64) -> Option<Site> {
        let (x, y) = (site.0 + d1, site.1 + d2);
        match self.boundary {
            Boundary::Open => {
                let s = Site(x, y);
                self.contains(s).then_some(s)
            }
            Boundary::Periodic => Some(Site(
                x.rem_euclid(self.l1 as i64),
                y.rem_euclid(self.l2 as i64),
            )),
        }
    }
}

/// A point of the dual lattice (ℤ²)* = ℤ² − (1/2, 1/2), stored as twice its
/// coordinates (both odd).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DualPoint {
    twice: [i64; 2],
}

impl DualPoint {
    pub fn new(a1: f64, a2: f64) -> Result<Self> {
        let t1 = 2.0 * a1;
        let t2 = 2.0 * a2;
        let ok = |t: f64| t.is_finite() && t.fract() == 0.0 && (t as i64).rem_euclid(2) == 1;
        if !ok(t1) || !ok(t2) {
            return domain(format!("({a1}, {a2}) is not a dual-lattice point"));
        }
        Ok(DualPoint { twice: [t1 as i64, t2 as i64] })
    }

    /// The dual point `m − (1/2, 1/2)`.
    pub fn below_left_of(m: Site) -> Self {
        DualPoint { twice: [2 * m.0 - 1, 2 * m.1 - 1] }
    }

    pub fn a1(&self) -> f64 {
        self.twice[0] as f64 / 2.0
    }
    pub fn a2(&self) -> f64 {
        self.twice[1] as f64 / 2.0
    }

    pub fn translated(&self, d1: i64, d2: i64) -> Self {
        DualPoint { twice: [self.twice[0] + 2 * d1, self.twice[1] + 2 * d2] }
    }

    /// ℓ∞ distance to the boundary of the box hull `[0, L1−1] × [0, L2−1]`;
    /// negative outside the hull.
    pub fn hull_distance(&self, spec: &LatticeSpec) -> f64 {
        let (a1, a2) = (self.a1(), self.a2());
        let x_max = (spec.l1() - 1) as f64;
        let y_max = (spec.l2() - 1) as f64;
        a1.min(x_max - a1).min(a2).min(y_max - a2)
    }

    pub fn is_interior(&self, spec: &LatticeSpec) -> bool {
        self.hull_distance(spec) > 0.0
    }
}

impl std::fmt::Display for DualPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.a1(), self.a2())
    }
}

/// The dual point closest to the geometric center of the box.
pub fn central_dual_point(spec: &LatticeSpec) -> DualPoint {
    let half = |l: usize| {
        let t = l as i64 - 1;
        if t % 2 == 1 {
            t
        } else {
            t - 1
        }
    };
    DualPoint { twice: [half(spec.l1()), half(spec.l2())] }
}

/// All interior dual points whose hull distance is at least `margin`, ordered
/// row by row (a2 outer, a1 inner).
pub fn interior_dual_points(spec: &LatticeSpec, margin: usize) -> Vec<DualPoint> {
    let mut out = Vec::new();
    for y in 1..spec.l2() as i64 {
        for x in 1..spec.l1() as i64 {
            let a = DualPoint::below_left_of(Site(x, y));
            if a.hull_distance(spec) >= margin as f64 {
                out.push(a);
            }
        }
    }
    out
}

/// Bijection between `(site, orbital, spin)` and flat Hilbert-space indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateIndexer {
    spec: LatticeSpec,
}

impl StateIndexer {
    pub fn new(spec: LatticeSpec) -> Self {
        StateIndexer { spec }
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn flat(&self, site: Site, orbital: usize, spin: Spin) -> Result<usize> {
        let Some(s) = self.spec.site_index(site) else {
            return domain(format!("site {site:?} outside the box"));
        };
        if orbital >= self.spec.orbitals() {
            return domain(format!("orbital {orbital} out of range"));
        }
        if spin as usize >= self.spec.spins() {
            return domain(format!("spin {spin:?} not present in a spinless box"));
        }
        Ok(self.flat_unchecked(s, orbital, spin as usize))
    }

    #[inline]
    pub(crate) fn flat_unchecked(&self, site_index: usize, orbital: usize, spin: usize) -> usize {
        (site_index * self.spec.orbitals() + orbital) * self.spec.spins() + spin
    }

    pub fn unflat(&self, index: usize) -> Result<(Site, usize, Spin)> {
        if index >= self.dim() {
            return domain(format!("flat index {index} ≥ dimension {}", self.dim()));
        }
        let spin = index % self.spec.spins();
        let rest = index / self.spec.spins();
        let orbital = rest % self.spec.orbitals();
        let site = rest / self.spec.orbitals();
        Ok((self.spec.site_at(site), orbital, Spin::from_index(spin)))
    }

    /// Site index owning each flat index.
    pub fn site_of(&self, index: usize) -> usize {
        index / self.spec.per_site()
    }
}

/// Characteristic function χ_Λ of a set of sites.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMask {
    spec: LatticeSpec,
    inside: Vec<bool>,
}

impl RegionMask {
    pub fn full(spec: &LatticeSpec) -> Self {
        RegionMask { spec: *spec, inside: vec![true; spec.n_sites()] }
    }

    pub fn rectangle(spec: &LatticeSpec, origin: Site, w: usize, h: usize) -> Result<Self> {
        let far = Site(origin.0 + w as i64 - 1, origin.1 + h as i64 - 1);
        if w == 0 || h == 0 || !spec.contains(origin) || !spec.contains(far) {
            return domain("rectangle does not fit inside the box");
        }
        let inside = spec
            .sites()
            .map(|s| s.0 >= origin.0 && s.0 <= far.0 && s.1 >= origin.1 && s.1 <= far.1)
            .collect();
        Ok(RegionMask { spec: *spec, inside })
    }

    /// A `side × side` square centered in the box.
    pub fn central_square(spec: &LatticeSpec, side: usize) -> Result<Self> {
        if side > spec.l1() || side > spec.l2() {
            return domain("central square larger than the box");
        }
        let ox = (spec.l1() - side) / 2;
        let oy = (spec.l2() - side) / 2;
        Self::rectangle(spec, Site(ox as i64, oy as i64), side, side)
    }

    /// Sites within ℓ∞ distance `radius` of the dual point a.
    pub fn around(spec: &LatticeSpec, a: DualPoint, radius: f64) -> Self {
        let inside = spec
            .sites()
            .map(|u| (u.0 as f64 - a.a1()).abs().max((u.1 as f64 - a.a2()).abs()) <= radius)
            .collect();
        RegionMask { spec: *spec, inside }
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn contains_site_index(&self, site_index: usize) -> bool {
        self.inside[site_index]
    }

    pub fn n_sites(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    /// Flat indices of every state living on a site of the region.
    pub fn flat_indices(&self) -> Vec<usize> {
        let per = self.spec.per_site();
        self.inside
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .flat_map(|(s, _)| (s * per)..((s + 1) * per))
            .collect()
    }

    /// Mask values broadcast to the flat Hilbert-space diagonal.
    pub fn diagonal(&self) -> Vec<f64> {
        let per = self.spec.per_site();
        self.inside
            .iter()
            .flat_map(|&b| std::iter::repeat_n(if b { 1.0 } else { 0.0 }, per))
            .collect()
    }
}
