use approx::assert_relative_eq;
use nalgebra::{Matrix4, SymmetricEigen};
use proptest::prelude::*;
use ricci4::algebra::*;

fn sym2() -> impl Strategy<Value = Sym2> {
    prop::array::uniform10(-1.0f64..1.0).prop_map(|v| {
        let mut m = Matrix4::zeros();
        let mut k = 0;
        for i in 0..4 {
            for j in i..4 {
                m[(i, j)] = v[k];
                m[(j, i)] = v[k];
                k += 1;
            }
        }
        Sym2::new(m).unwrap()
    })
}

fn traceless() -> impl Strategy<Value = Sym2> {
    sym2().prop_map(|s| s.trace_free())
}

/// Sums of Kulkarni–Nomizu products span the algebraic curvature tensors.
fn curvature() -> impl Strategy<Value = CurvTensor> {
    prop::collection::vec((sym2(), sym2()), 1..5)
        .prop_map(|v| v.iter().fold(CurvTensor::zero(), |acc, (h, k)| acc + kulkarni_nomizu(h, k)))
}

fn weyl() -> impl Strategy<Value = CurvTensor> {
    curvature().prop_map(|r| decompose_frame(&r).weyl)
}

fn metric() -> impl Strategy<Value = Sym2> {
    sym2().prop_map(|a| Sym2::symmetrize(a.matrix() * a.matrix().transpose() + Matrix4::identity() * 0.5))
}

fn kn_loop(h: &Sym2, k: &Sym2) -> [f64; 256] {
    let mut out = [0.0; 256];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    out[((a * 4 + b) * 4 + c) * 4 + d] = h.get(a, c) * k.get(b, d) + h.get(b, d) * k.get(a, c)
                        - h.get(a, d) * k.get(b, c)
                        - h.get(b, c) * k.get(a, d);
                }
            }
        }
    }
    out
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn kulkarni_nomizu_matches_index_loop() {
    let h = Sym2::identity();
    let k = Sym2::diag([1.0, 0.0, 0.0, 0.0]);
    let t = kulkarni_nomizu(&h, &k);
    assert_eq!(t.components(), &kn_loop(&h, &k));
    assert_eq!(t.get(0, 1, 0, 1), 1.0);
    assert_eq!(t.get(1, 2, 1, 2), 0.0);
}

#[test]
fn tr_e3_of_degenerate_spectrum() {
    for a in [0.5, 1.0, -2.0] {
        assert_relative_eq!(tr_e3(&Sym2::diag([a, a, a, -3.0 * a])), -24.0 * a * a * a, max_relative = 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kulkarni_nomizu_is_a_symmetric_bilinear_curvature_tensor(h in sym2(), k in sym2(), m in sym2(), s in -2.0f64..2.0) {
        let t = kulkarni_nomizu(&h, &k);
        prop_assert!(t.symmetry_residual() < 1e-12);
        prop_assert!(t.bianchi_residual() < 1e-12);
        prop_assert!(max_diff(t.components(), kulkarni_nomizu(&k, &h).components()) < 1e-15);
        let lin = kulkarni_nomizu(&(h + m * s), &k);
        let sum = t + kulkarni_nomizu(&m, &k) * s;
        prop_assert!(max_diff(lin.components(), sum.components()) < 1e-12);
        prop_assert!(max_diff(t.components(), &kn_loop(&h, &k)) < 1e-15);
    }

    #[test]
    fn operator_form_round_trips(r in curvature()) {
        let back = CurvTensor::from_operator(&r.operator());
        prop_assert!(max_diff(back.components(), r.components()) < 1e-14 * (1.0 + r.max_abs()));
    }

    #[test]
    fn decomposition_invariants(r in curvature()) {
        let d = decompose_frame(&r);
        let scale = 1.0 + r.max_abs();
        prop_assert!(d.e.trace().abs() < 1e-12 * scale);
        prop_assert!(d.weyl.ricci().matrix().amax() < 1e-10 * scale);
        let back = reconstruct(&d, &Sym2::identity()).unwrap();
        prop_assert!(max_diff(back.components(), r.components()) < 1e-12 * scale);
        let id = Sym2::identity();
        let e_part = kulkarni_nomizu(&d.e, &id) * 0.5;
        let s_part = kulkarni_nomizu(&id, &id) * (d.scalar / 24.0);
        let n2 = r.norm_sq();
        prop_assert!(d.weyl.inner(&e_part).abs() < 1e-10 * n2.max(1.0));
        prop_assert!(d.weyl.inner(&s_part).abs() < 1e-10 * n2.max(1.0));
        prop_assert!(e_part.inner(&s_part).abs() < 1e-10 * n2.max(1.0));
    }

    #[test]
    fn decomposition_in_a_general_metric_round_trips(r in curvature(), g in metric()) {
        let d = decompose(&r, &g).unwrap();
        let back = reconstruct(&d, &g).unwrap();
        prop_assert!(max_diff(back.components(), r.components()) < 1e-10 * (1.0 + r.max_abs()));
        let again = decompose(&back, &g).unwrap();
        prop_assert!(max_diff(again.weyl.components(), d.weyl.components()) < 1e-10 * (1.0 + d.weyl.max_abs()));
        prop_assert!((again.scalar - d.scalar).abs() < 1e-10 * (1.0 + d.scalar.abs()));
    }

    #[test]
    fn reconstruct_then_decompose_is_identity(w in weyl(), e in traceless(), r in -20.0f64..20.0) {
        let d = CurvDecomp::from_parts(w, e, r);
        let back = decompose_frame(&reconstruct(&d, &Sym2::identity()).unwrap());
        let scale = 1.0 + w.max_abs() + e.matrix().amax() + r.abs();
        prop_assert!(max_diff(back.weyl.components(), w.components()) < 1e-12 * scale);
        prop_assert!((back.e.matrix() - e.matrix()).amax() < 1e-12 * scale);
        prop_assert!((back.scalar - r).abs() < 1e-12 * scale);
    }

    #[test]
    fn pure_trace_free_ricci_has_no_weyl_part(e in traceless()) {
        let t = kulkarni_nomizu(&e, &Sym2::identity()) * 0.5;
        let d = decompose_frame(&t);
        prop_assert!(d.weyl.max_abs() < 1e-12);
        prop_assert!((d.e.matrix() - e.matrix()).amax() < 1e-12);
    }

    #[test]
    fn norm_bookkeeping(w in weyl(), e in traceless()) {
        let z = w + kulkarni_nomizu(&e, &Sym2::identity()) * 0.5;
        let expect = w.norm_sq() + 2.0 * e.norm_sq();
        prop_assert!((z.norm_sq() - expect).abs() < 1e-10 * expect.max(1e-300));
    }

    #[test]
    fn operator_norm_convention(w in weyl()) {
        let d = CurvDecomp::from_parts(w, Sym2::zero(), 1.0);
        // ‖W‖² as the squared Frobenius norm of the operator on Λ²
        let op = w.operator().norm_squared();
        prop_assert!((d.weyl_op_sq() - op).abs() < 1e-12 * op.max(1e-300));
        prop_assert!((d.weyl_op_sq() - 0.25 * d.weyl_sq()).abs() < 1e-12 * op.max(1e-300));
        let blocks = 4.0 * (d.w_plus_sq() + d.w_minus_sq());
        prop_assert!((d.weyl_sq() - blocks).abs() < 1e-10 * d.weyl_sq().max(1e-300));
    }

    #[test]
    fn weyl_blocks_are_traceless_and_swap_with_orientation(w in weyl()) {
        let (p, m) = sd_asd_split(&w, Orientation::Positive).unwrap();
        let (p2, m2) = sd_asd_split(&w, Orientation::Negative).unwrap();
        let s = 1.0 + w.max_abs();
        prop_assert!(p.trace().abs() < 1e-12 * s && m.trace().abs() < 1e-12 * s);
        prop_assert!((p - m2).amax() < 1e-12 * s && (m - p2).amax() < 1e-12 * s);
        let diff = p.norm_squared() - m.norm_squared();
        let flipped = p2.norm_squared() - m2.norm_squared();
        prop_assert!((diff + flipped).abs() < 1e-10 * s * s);
    }

    #[test]
    fn ricci_contraction_is_rejected(r in curvature()) {
        let d = decompose_frame(&r);
        prop_assume!(d.e.norm_sq() + d.scalar * d.scalar > 1e-6);
        prop_assert!(sd_asd_split(&r, Orientation::Positive).is_err());
    }

    #[test]
    fn wee_matches_brute_force(w in weyl(), e in traceless(), f in traceless(), s in -2.0f64..2.0) {
        let mut brute = 0.0;
        for i in 0..4 { for j in 0..4 { for k in 0..4 { for l in 0..4 {
            brute += w.get(i, j, k, l) * e.get(i, k) * e.get(j, l);
        }}}}
        let scale = 1.0 + w.max_abs() * e.matrix().amax().powi(2);
        prop_assert!((wee(&w, &e) - brute).abs() < 1e-12 * scale);
        prop_assert!((wee(&w, &(e * s)) - s * s * wee(&w, &e)).abs() < 1e-12 * scale * (1.0 + s * s));
        // the symmetric bilinear form behind WEE
        let polar = 0.5 * (wee(&w, &(e + f)) - wee(&w, &e) - wee(&w, &f));
        let mut cross = 0.0;
        for i in 0..4 { for j in 0..4 { for k in 0..4 { for l in 0..4 {
            cross += w.get(i, j, k, l) * e.get(i, k) * f.get(j, l);
        }}}}
        prop_assert!((polar - cross).abs() < 1e-11 * (1.0 + w.max_abs()));
    }

    #[test]
    fn sigma2_formulas_agree(r in curvature()) {
        let d = decompose_frame(&r);
        let a = schouten(&d.ricci(), d.scalar, &Sym2::identity());
        let via_eigen = sigma_k(a.matrix(), 2).unwrap();
        let closed = sigma2_closed(d.e_sq(), d.scalar);
        prop_assert!((via_eigen - closed).abs() < 1e-10 * (1.0 + closed.abs()));
    }

    #[test]
    fn sigma_k_are_characteristic_polynomial_coefficients(s in sym2()) {
        let m = *s.matrix();
        let p1 = m.trace();
        let p2 = (m * m).trace();
        let p3 = (m * m * m).trace();
        // Newton's identities
        let e2 = 0.5 * (p1 * p1 - p2);
        let e3 = (e2 * p1 - p1 * p2 + p3) / 3.0;
        let ev = SymmetricEigen::new(m).eigenvalues;
        prop_assert!((sigma_k(&m, 1).unwrap() - p1).abs() < 1e-12);
        prop_assert!((sigma_k(&m, 2).unwrap() - e2).abs() < 1e-12);
        prop_assert!((sigma_k(&m, 3).unwrap() - e3).abs() < 1e-12);
        prop_assert!((sigma_k(&m, 4).unwrap() - m.determinant()).abs() < 1e-12);
        prop_assert!((ev.iter().product::<f64>() - m.determinant()).abs() < 1e-12);
    }

    #[test]
    fn weak_pinching_is_scale_invariant(r in curvature(), lambda in 0.1f64..10.0) {
        let d = decompose_frame(&r);
        prop_assume!(d.scalar.abs() > 1e-3);
        let s = d.rescaled(lambda);
        let (a, b) = (weak_pinching(&d).unwrap(), weak_pinching(&s).unwrap());
        prop_assert!((a - b).abs() < 1e-12 * a.max(1.0));
        // |W|² dv: the volume weight scales by λ⁴
        let dens = d.weyl_sq();
        prop_assert!((s.weyl_sq() * lambda.powi(4) - dens).abs() < 1e-12 * dens.max(1e-300));
        let sig = d.sigma2();
        prop_assert!((s.sigma2() * lambda.powi(4) - sig).abs() < 1e-12 * sig.abs().max(1e-300));
    }

    #[test]
    fn integrand_g_is_nonnegative_inside_the_pinching_cone(e in traceless(), u in 0.0f64..3.0) {
        let r = 2.0 * 3f64.sqrt() * e.norm_sq().sqrt() * (1.0 + u);
        let d = CurvDecomp::from_parts(CurvTensor::zero(), e, r);
        prop_assert!(integrand_g(&d) >= -1e-12 * (1.0 + r.powi(3)));
    }

    #[test]
    fn integrand_g_matches_term_by_term(w in weyl(), e in traceless(), r in -20.0f64..20.0) {
        let d = CurvDecomp::from_parts(w, e, r);
        let em = e.matrix();
        let tr3: f64 = SymmetricEigen::new(*em).eigenvalues.iter().map(|l| l * l * l).sum();
        let dets = |m: &nalgebra::Matrix3<f64>| -> f64 { SymmetricEigen::new(*m).eigenvalues.iter().product() };
        let mut wee_loop = 0.0;
        for i in 0..4 { for j in 0..4 { for k in 0..4 { for l in 0..4 {
            wee_loop += w.get(i, j, k, l) * em[(i, k)] * em[(j, l)];
        }}}}
        let expect = 6.0 * tr3 + r * e.norm_sq() - 9.0 * wee_loop - 108.0 * dets(&d.w_plus) - 108.0 * dets(&d.w_minus)
            + 0.75 * r * w.norm_sq();
        let scale = 1.0 + tr3.abs() + (r * e.norm_sq()).abs() + (r * w.norm_sq()).abs() + wee_loop.abs()
            + w.max_abs().powi(3) * 108.0;
        prop_assert!((integrand_g(&d) - expect).abs() < 1e-10 * scale);
    }

    #[test]
    fn bach_is_symmetric(w in weyl(), ric in sym2(), dd in sym2()) {
        let b = bach_assemble(&dd, &ric, &w);
        prop_assert!((b.matrix() - b.matrix().transpose()).amax() == 0.0);
        let z = bach_assemble(&Sym2::zero(), &ric, &CurvTensor::zero());
        prop_assert!(z.matrix().amax() == 0.0);
    }
}
