//! Property tests for the algebraic invariants.

use proptest::prelude::*;

use qch_core::families::{PotentialKind, RadialScalar};
use qch_core::jet::Jet;
use qch_core::qch::{
    coefficients_from_scalars, compose, hol_profile, holomorphic_sectional, invariant_tensor, qch_decompose, ricci_deviation,
    scalars_from_coefficients, InvariantKind,
};
use qch_core::rotational::{closed_form_coefficients, RotationalProfile};
use qch_core::tensor::{curvature_scalars, kahler_symmetry_residual, standard_complex_structure, KahlerTensor4};
use qch_core::{KahlerTensor32, KahlerTensor64};

fn coeff() -> impl Strategy<Value = f64> {
    -10.0..10.0f64
}

fn unit(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, d).prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
}

/// Rotation by `angle` in the frame plane `(2k, 2k+1)`, which commutes with `J`.
fn plane_rotation(d: usize, k: usize, angle: f64) -> Vec<Vec<f64>> {
    let (s, c) = angle.sin_cos();
    let mut m: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    m[2 * k][2 * k] = c;
    m[2 * k][2 * k + 1] = s;
    m[2 * k + 1][2 * k] = -s;
    m[2 * k + 1][2 * k + 1] = c;
    m
}

proptest! {
    #[test]
    fn decomposition_round_trip(a in coeff(), b in coeff(), c in coeff(), n in 2usize..5) {
        let q = qch_decompose(&compose(n, a, b, c)).unwrap();
        prop_assert!((q.a - a).abs() < 1e-12 && (q.b - b).abs() < 1e-12 && (q.c - c).abs() < 1e-12);
        prop_assert!(q.residual < 1e-12);
    }

    #[test]
    fn scalar_formulas_invert(a in coeff(), b in coeff(), c in coeff(), n in 2usize..6) {
        let s = curvature_scalars(&compose(n, a, b, c));
        let fwd = scalars_from_coefficients(a, b, c, n);
        prop_assert!((s.tau - fwd.tau).abs() < 1e-10 && (s.sigma - fwd.sigma).abs() < 1e-10 && (s.kappa - fwd.kappa).abs() < 1e-10);
        let (a2, b2, c2) = coefficients_from_scalars(&s, n).unwrap();
        prop_assert!((a2 - a).abs() < 1e-10 && (b2 - b).abs() < 1e-10 && (c2 - c).abs() < 1e-10);
    }

    #[test]
    fn holomorphic_curvature_follows_profile(a in coeff(), b in coeff(), c in coeff(), x in unit(6)) {
        let r = compose(3, a, b, c);
        let hol = holomorphic_sectional(&r, &x).unwrap();
        let len2: f64 = x.iter().map(|v| v * v).sum();
        let cos2 = (x[0] * x[0] + x[1] * x[1]) / len2;
        let phi = cos2.sqrt().min(1.0).acos();
        prop_assert!((hol - hol_profile(a, b, c, phi)).abs() < 1e-10 * (1.0 + a.abs() + b.abs() + c.abs()));
    }

    #[test]
    fn invariant_under_unitary_frame_rotations(a in coeff(), b in coeff(), c in coeff(), t0 in -3.0..3.0f64, t1 in -3.0..3.0f64) {
        let r = compose(3, a, b, c);
        let rotated = r.transform(&plane_rotation(6, 0, t0)).transform(&plane_rotation(6, 1, t1));
        prop_assert!(rotated.sub(&r).max_abs() < 1e-11 * (1.0 + r.max_abs()));
    }

    #[test]
    fn qch_tensors_have_kahler_symmetries_and_ricci_form(a in coeff(), b in coeff(), c in coeff(), n in 2usize..5) {
        let r = compose(n, a, b, c);
        prop_assert!(kahler_symmetry_residual(&r) < 1e-12);
        prop_assert!(ricci_deviation(&r).max_abs() < 1e-10);
    }

    #[test]
    fn frame_identities_and_regrouping(a in coeff(), b in coeff(), c in coeff()) {
        let r = compose(3, a, b, c);
        // x0 = e2 ∈ D
        prop_assert!(r.get(2, 3, 3, 0).abs() < 1e-12);
        prop_assert!(r.get(2, 3, 2, 0).abs() < 1e-12);
        prop_assert!((r.get(2, 1, 1, 2) - r.get(2, 0, 0, 2)).abs() < 1e-12);
        prop_assert!((r.get(2, 0, 0, 2) - 0.5 * r.get(2, 3, 1, 0)).abs() < 1e-12);
        let pi = invariant_tensor::<f64>(InvariantKind::Pi, 3);
        let phi = invariant_tensor::<f64>(InvariantKind::Phi, 3);
        let psi = invariant_tensor::<f64>(InvariantKind::Psi, 3);
        let regrouped = KahlerTensor4::linear_combination(&[
            (a, &pi), (-2.0 * a, &phi), (a, &psi),
            (2.0 * a + b, &phi), (-(2.0 * a + b), &psi),
            (a + b + c, &psi),
        ]);
        prop_assert!(regrouped.sub(&r).max_abs() < 1e-12);
    }

    #[test]
    fn single_precision_round_trip(a in -5.0..5.0f32, b in -5.0..5.0f32, c in -5.0..5.0f32) {
        let r: KahlerTensor32 = compose(3, a, b, c);
        let q = qch_decompose(&r).unwrap();
        prop_assert!((q.a - a).abs() < 1e-4 && (q.b - b).abs() < 1e-4 && (q.c - c).abs() < 1e-4);
        let r64: KahlerTensor64 = compose(3, a as f64, b as f64, c as f64);
        prop_assert!((kahler_symmetry_residual(&r) as f64) < 1e-5 * (1.0 + r64.max_abs()));
    }

    #[test]
    fn jet_identities(x in 0.1..4.0f64) {
        let v = Jet::variable(x);
        let e = v.ln().exp();
        let (s, c) = v.sin_cos();
        let one = s * s + c * c;
        for k in 0..=4 {
            prop_assert!((e.d(k) - v.d(k)).abs() < 1e-12 * (1.0 + x));
            let expect = if k == 0 { 1.0 } else { 0.0 };
            prop_assert!((one.d(k) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn radial_scalar_derivatives_match_differences(rho in 0.1..20.0f64, c1 in 0.0..2.0f64, c2 in 0.0..1.0f64) {
        let f: RadialScalar<f64> = PotentialKind::Polynomial(vec![0.0, 1.0, c1, c2]).scalar();
        let g: RadialScalar<f64> = PotentialKind::Log1p.scalar();
        for h in [&f, &g] {
            let step = 1e-5 * rho;
            let fd = (h.value(rho + step) - h.value(rho - step)) / (2.0 * step);
            prop_assert!((fd - h.d1(rho)).abs() <= 1e-7 * h.d1(rho).abs().max(1.0));
        }
    }

    #[test]
    fn rotational_a_is_nonnegative(lo in 0.05..0.5f64, hi in 0.55..1.0f64, s in 0.1..2.0f64) {
        // t' = lo + (hi - lo)(1 + tanh(s - 1))/2 stays in (0, 1]
        let prof = RotationalProfile::new("ramp", 0.1, 2.0, move |x: Jet<f64>| {
            let w = (hi - lo) / 2.0;
            x.scale(lo + w) + (x - 1.0).ln_cosh().scale(w) + 1.0
        }).unwrap();
        let (a, _, _) = closed_form_coefficients(&prof, s);
        prop_assert!(a >= 0.0);
    }
}

#[test]
fn standard_structure_squares_to_minus_one() {
    let j = standard_complex_structure::<f64>(3);
    let jj = j.mul(&j);
    for i in 0..6 {
        for k in 0..6 {
            assert_eq!(jj[(i, k)], if i == k { -1.0 } else { 0.0 });
        }
    }
}
