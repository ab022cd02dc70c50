use pairindex::dense::{frobenius, hermitian_eigenvalues, identity, trace, CMat};
use pairindex::lattice::{central_dual_point, Boundary, LatticeSpec};
use pairindex::model::{build_kane_mele, HaldaneParams, Hamiltonian, KaneMeleParams, TimeReversalOp};
use pairindex::ncindex::{
    build_pair_ops, eigenvalue_clusters, index_report, susy_pairing_check, trs_even_degeneracy_check,
    FluxUnitary,
};
use pairindex::spectral::{diagonalize, fermi_projection, FermiProjection};
use proptest::prelude::*;

fn instance() -> impl Strategy<Value = (Hamiltonian, FermiProjection)> {
    (4usize..9, -0.3f64..0.3, -0.6f64..0.6, 0.0f64..0.2, 0.0f64..1.0, any::<u64>()).prop_filter_map(
        "Fermi level on the spectrum",
        |(l, tp, lv, lr, w, seed)| {
            let p = KaneMeleParams {
                haldane: HaldaneParams::new(1.0, tp).with_staggered(lv),
                lambda_r: lr,
                disorder_w: w,
                seed,
            };
            let h = build_kane_mele(&p, &LatticeSpec::new(l, l, Boundary::Open, 2).unwrap()).unwrap();
            let proj = fermi_projection(&diagonalize(&h).unwrap(), 0.0).ok()?;
            Some((h, proj))
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn fermi_projection_properties((h, p) in instance()) {
        let m = p.matrix();
        let n = h.dim() as f64;
        prop_assert!(frobenius((m * m - m).as_ref()) < 1e-10 * n);
        prop_assert!(frobenius((m - m.adjoint()).as_ref()) < 1e-10 * n);
        let hn = frobenius(h.matrix().as_ref());
        prop_assert!(frobenius((h.matrix() * m - m * h.matrix()).as_ref()) < 1e-9 * hn);
        let theta = TimeReversalOp::new(h.spec()).unwrap();
        prop_assert!(frobenius((theta.conjugate_operator(m) - m).as_ref()) < 1e-9 * n);
    }

    #[test]
    fn pair_operator_algebra((h, p) in instance()) {
        let u = FluxUnitary::new(h.spec(), central_dual_point(h.spec())).unwrap();
        let ops = build_pair_ops(&p, &u).unwrap();
        let n = h.dim() as f64;
        let (anti, square) = ops.algebra_residuals();
        prop_assert!(anti < 1e-9 * n && square < 1e-9 * n);

        // independent oracle: the products formed here from the dense matrices
        let a = ops.a();
        let b = ops.b();
        prop_assert!(frobenius((a * b + b * a).as_ref()) < 1e-9 * n);
        prop_assert!(frobenius((a * a + b * b - identity(h.dim())).as_ref()) < 1e-9 * n);

        let values = hermitian_eigenvalues(a.as_ref()).unwrap();
        prop_assert!(values.iter().all(|x| x.abs() <= 1.0 + 1e-9));

        // Tr A³ by matrix products against Σλ³
        let a3: CMat = a * a * a;
        let cubes: f64 = values.iter().map(|x| x.powi(3)).sum();
        prop_assert!((trace(a3.as_ref()).re - cubes).abs() < 1e-8);

        let clusters = eigenvalue_clusters(&values, 1e-6);
        for c in clusters.iter().filter(|c| c.center.abs() > 1e-6 && c.center.abs() < 1.0 - 1e-6) {
            let partner = clusters.iter().find(|o| (o.center + c.center).abs() < 1e-6);
            prop_assert_eq!(partner.map(|o| o.multiplicity), Some(c.multiplicity));
        }
        for c in clusters.iter().filter(|c| c.center.abs() > 1e-3 && c.center.abs() < 1.0 - 1e-3) {
            prop_assert_eq!(c.multiplicity % 2, 0, "odd cluster at {}", c.center);
        }
        prop_assert!(susy_pairing_check(&ops, (0.01, 0.99), 1e-6).unwrap());
        let theta = TimeReversalOp::new(h.spec()).unwrap();
        prop_assert!(trs_even_degeneracy_check(&ops, &theta, &u, (0.01, 0.99), 1e-6).unwrap());
    }

    #[test]
    fn localized_trace_matches_spectral_sum((h, p) in instance(), delta in 0.3f64..0.7) {
        let u = FluxUnitary::new(h.spec(), central_dual_point(h.spec())).unwrap();
        let r = index_report(&build_pair_ops(&p, &u).unwrap(), delta).unwrap();
        prop_assert!((r.trace_a3 - r.trace_a3_spectral).abs() < 1e-8);
        // odd time reversal forces a vanishing Chern number
        prop_assert!(r.trace_a3.abs() < 1e-8);
        prop_assert_eq!(r.chern, 0);
        prop_assert_eq!(r.z2 as usize, r.n_plus % 2);
    }
}
