//! Real-space Chern-number estimators that do not go through the spectrum of
//! A: the Connes area sum, the local Chern marker and the finite-volume Kubo
//! formula with step-function currents.

use std::f64::consts::PI;

use super::{flux_phase, flux_region};
use crate::dense::{c64, CMat, I};
use crate::error::{domain, Error, Result};
use crate::lattice::{Boundary, DualPoint, RegionMask, Site};
use crate::spectral::{EigenDecomposition, FermiProjection, COLLISION_TOL};

fn tau(u: Site, v: Site, a: DualPoint) -> c64 {
    c64::new(1.0, 0.0) - flux_phase(u, a) * flux_phase(v, a).conj()
}

/// 2πi (v − w) × (w − u)
pub fn connes_target(u: Site, v: Site, w: Site) -> c64 {
    let cross = (v.1 - w.1) * (w.0 - u.0) - (v.0 - w.0) * (w.1 - u.1);
    I * (2.0 * PI * cross as f64)
}

/// Σ_{a ∈ (ℤ²)*, |a| ≤ radius} τ_{u,v} τ_{v,w} τ_{w,u}, with
/// τ_{u,v} = 1 − e^{i(θ_a(u) − θ_a(v))}.
///
/// The summand decays like |a|⁻³, so truncation leaves an O(1/radius) tail;
/// `radius` must be at least 8× the largest pairwise distance of the triple.
pub fn connes_area_sum(u: Site, v: Site, w: Site, radius: u32) -> Result<c64> {
    let dist = |p: Site, q: Site| (((p.0 - q.0).pow(2) + (p.1 - q.1).pow(2)) as f64).sqrt();
    let spread = dist(u, v).max(dist(v, w)).max(dist(w, u));
    if (radius as f64) < 8.0 * spread {
        return domain(format!("radius {radius} below 8 × max pairwise distance {spread}"));
    }
    if u == v || v == w || w == u {
        return Ok(c64::new(0.0, 0.0));
    }
    let r = radius as i64;
    let r2 = (radius as f64).powi(2);
    let mut acc = c64::new(0.0, 0.0);
    // a = (m1 − 1/2, m2 − 1/2)
    for m2 in (-r)..=(r + 1) {
        for m1 in (-r)..=(r + 1) {
            let a = DualPoint::below_left_of(Site(m1, m2));
            if a.a1() * a.a1() + a.a2() * a.a2() > r2 {
                continue;
            }
            acc += tau(u, v, a) * tau(v, w, a) * tau(w, u, a);
        }
    }
    Ok(acc)
}

/// −2πi |Λ|⁻¹ Tr χ_Λ P [[X₁, P], [X₂, P]] χ_Λ with |Λ| the number of sites.
pub fn local_chern_marker(p: &FermiProjection, region: &RegionMask) -> Result<f64> {
    if region.spec() != p.spec() {
        return domain("region and projection live on different boxes");
    }
    let sites = region.n_sites();
    if sites == 0 {
        return domain("empty region");
    }
    let spec = p.spec();
    let per = spec.per_site();
    let n = p.dim();
    let pos: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let s = spec.site_at(i / per);
            (s.0 as f64, s.1 as f64)
        })
        .collect();
    let pm = p.matrix();
    let c1 = CMat::from_fn(n, n, |i, j| pm[(i, j)] * (pos[i].0 - pos[j].0));
    let c2 = CMat::from_fn(n, n, |i, j| pm[(i, j)] * (pos[i].1 - pos[j].1));
    let cols = region.flat_indices();
    let m = cols.len();
    let c1s = CMat::from_fn(n, m, |i, k| c1[(i, cols[k])]);
    let c2s = CMat::from_fn(n, m, |i, k| c2[(i, cols[k])]);
    // [C1, C2] restricted to the region's columns
    let comm = &(&c1 * &c2s) - &(&c2 * &c1s);
    let mut tr = c64::new(0.0, 0.0);
    for (k, &s) in cols.iter().enumerate() {
        for l in 0..n {
            tr += pm[(s, l)] * comm[(l, k)];
        }
    }
    let value = -2.0 * PI * I * tr / sites as f64;
    if value.im.abs() > 1e-9 {
        return Err(Error::Numerical(format!(
            "local Chern marker has imaginary part {:.3e}",
            value.im
        )));
    }
    Ok(value.re)
}

/// 2πi Σ_{E_i<E_F<E_j} (E_i − E_j)⁻² [⟨Φ_i,J₁Φ_j⟩⟨Φ_j,J₂Φ_i⟩ − (1↔2)] with
/// J_k = χ i[H, ϑ_k] χ, ϑ_k(n) = 1 iff n_k ≥ a_k, and χ the [`flux_region`]
/// around a.
///
/// Without χ the sum vanishes identically on a finite box: each current
/// crosses the whole box and the crossings at the edge cancel the one at a.
pub fn kubo_hall(d: &EigenDecomposition, e_f: f64, a: DualPoint) -> Result<f64> {
    let spec = d.spec();
    if spec.boundary() != Boundary::Open {
        return domain("the step-function currents need an open box");
    }
    let margin = spec.l1().min(spec.l2()) as f64 / 4.0;
    if a.hull_distance(spec) < margin {
        return domain(format!("dual point {a} closer than L/4 = {margin} to the boundary"));
    }
    let e = d.eigenvalues();
    if let Some(&hit) = e.iter().find(|x| (**x - e_f).abs() < COLLISION_TOL) {
        return Err(Error::GapClosed(format!("eigenvalue {hit} at E_F = {e_f}")));
    }
    let per = spec.per_site();
    let n = d.dim();
    let step = |i: usize, axis: usize| -> f64 {
        let s = spec.site_at(i / per);
        let (x, cut) = if axis == 0 { (s.0 as f64, a.a1()) } else { (s.1 as f64, a.a2()) };
        if x - cut >= 0.0 {
            1.0
        } else {
            0.0
        }
    };
    let h = d.reconstruct();
    let chi = flux_region(spec, a);
    let inside: Vec<bool> = (0..n).map(|i| chi.contains_site_index(i / per)).collect();
    let current = |axis: usize| {
        CMat::from_fn(n, n, |k, l| {
            if inside[k] && inside[l] {
                I * h[(k, l)] * (step(l, axis) - step(k, axis))
            } else {
                c64::new(0.0, 0.0)
            }
        })
    };
    let occ = e.iter().filter(|&&x| x < e_f).count();
    let v = d.eigenvectors();
    let v_occ = v.subcols(0, occ);
    let v_emp = v.subcols(occ, n - occ);
    let j1 = current(0);
    let j2 = current(1);
    // ⟨Φ_i, J Φ_j⟩ for i occupied, j empty; ⟨Φ_j, J Φ_i⟩ is its conjugate
    let x1 = v_occ.adjoint() * (&j1 * v_emp);
    let x2 = v_occ.adjoint() * (&j2 * v_emp);
    let mut acc = c64::new(0.0, 0.0);
    for j in 0..(n - occ) {
        for i in 0..occ {
            let de = e[i] - e[occ + j];
            let t = x1[(i, j)] * x2[(i, j)].conj() - x2[(i, j)] * x1[(i, j)].conj();
            acc += t / (de * de);
        }
    }
    let value = 2.0 * PI * I * acc;
    if value.im.abs() > 1e-9 {
        return Err(Error::Numerical(format!("Kubo sum has imaginary part {:.3e}", value.im)));
    }
    Ok(value.re)
}
