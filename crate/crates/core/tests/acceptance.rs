//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::process::ExitCode;
use std::time::Instant;

use qch_core::diffgeo::{frame_at, riemann, FiniteDifferenceOnly, MetricField, RadialDistribution};
use qch_core::families::{
    biconformal_apply, biconformally_flat_normal_form, flat_metric, fubini_study, log_polynomial_v, potential_metric,
    BiconformalPair, PotentialKind, RadialMetric, RadialScalar,
};
use qch_core::jet::Jet;
use qch_core::qch::{
    coefficients_from_scalars, compose, hol_profile, holomorphic_sectional, invariant_tensor, qch_decompose, InvariantKind,
};
use qch_core::rotational::{
    b_zero_slope_for_curvature, closed_form_coefficients, constant_curvature_meridian, induced_metric, meridian_b_zero_residual,
    meridian_height, rotational_metric, solve_b_zero_ode, warped_curvature_coefficients, warped_curvature_tensor, RadialChart,
    RotationalProfile,
};
use qch_core::sampling::{annulus_points, point_at_radius, random_direction};
use qch_core::structure::{
    check_b0_distribution, check_composition, check_integrability, check_qc_invariance, check_symmetries, flatten, Tolerances,
};
use qch_core::tensor::{angle_phi, curvature_scalars, kahler_symmetry_residual};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: usize = 3;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    format!("error: {e}")
}

/// Points on the chart of a profile at parameters spread over its span.
fn chart_points(chart: &RadialChart<f64>, count: usize, seed: u64) -> Vec<(f64, Vec<f64>)> {
    let prof = chart.profile();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    prof.grid(count)
        .into_iter()
        .map(|s| {
            let dir = random_direction::<f64>(&mut rng, 2 * N);
            (s, chart.point(s, &dir))
        })
        .collect()
}

fn profiles() -> Vec<RotationalProfile<f64>> {
    vec![RotationalProfile::sine(), RotationalProfile::ramp(), RotationalProfile::constant_holomorphic(1.5).unwrap()]
}

fn kahler_families() -> Vec<RadialMetric<f64>> {
    let flat = flat_metric::<f64>(N);
    let quartic = potential_metric(PotentialKind::Polynomial(vec![0.0, 1.0, 0.25]).scalar(), N, 0.2, 5.0, "quartic").unwrap();
    let image = biconformal_apply(&flat, &BiconformalPair::for_source(&flat, log_polynomial_v(1.0, 0.0)).unwrap()).unwrap();
    let nf = biconformally_flat_normal_form(random_v(3), N, 0.2, 5.0).unwrap();
    vec![flat, fubini_study(N), quartic, image, nf]
}

/// Seeded `v = ½ ln(1 + c₁ρ + c₂ρ²)` with small random coefficients.
fn random_v(seed: u64) -> RadialScalar<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c1: f64 = rng.random_range(0.1..0.8);
    let c2: f64 = rng.random_range(0.0..0.1);
    log_polynomial_v(c1, c2)
}

fn criterion_1() -> Outcome {
    let mut worst = 0.0_f64;
    for kind in [InvariantKind::Pi, InvariantKind::Phi, InvariantKind::Psi] {
        let t = invariant_tensor::<f64>(kind, N);
        worst = worst.max(kahler_symmetry_residual(&t) / t.max_abs());
    }
    let tol = Tolerances::default();
    let mut count = 0;
    for (i, g) in kahler_families().iter().enumerate() {
        let pts = annulus_points::<f64>(N, 20, 100 + i as u64, 0.4, 3.0);
        let rep = check_symmetries(g, &RadialDistribution, &pts, &tol).map_err(err)?;
        worst = worst.max(rep.max_residual());
        count += 1;
    }
    for (i, prof) in profiles().iter().enumerate() {
        let (g, chart) = rotational_metric(prof, N).map_err(err)?;
        let pts: Vec<Vec<f64>> = chart_points(&chart, 20, 200 + i as u64).into_iter().map(|x| x.1).collect();
        let rep = check_symmetries(&g, &RadialDistribution, &pts, &tol).map_err(err)?;
        worst = worst.max(rep.max_residual());
        count += 1;
    }
    let fd = FiniteDifferenceOnly(fubini_study::<f64>(N));
    let pts = annulus_points::<f64>(N, 20, 300, 0.4, 3.0);
    let rep = check_symmetries(&fd, &RadialDistribution, &pts, &tol).map_err(err)?;
    let fd_worst = rep.max_residual();
    worst = worst.max(fd_worst);
    count += 1;
    ensure(worst < 1e-6, format!("{count} families x 20 points (one by finite differences, {fd_worst:.1e}), max relative residual {worst:.2e}"))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut dec, mut scal) = (0.0_f64, 0.0_f64);
    for _ in 0..100 {
        let (a, b, c): (f64, f64, f64) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let r = compose(N, a, b, c);
        let q = qch_decompose(&r).map_err(err)?;
        dec = dec.max((q.a - a).abs()).max((q.b - b).abs()).max((q.c - c).abs());
        let s = curvature_scalars(&r);
        let (a2, b2, c2) = coefficients_from_scalars(&s, N).map_err(err)?;
        scal = scal.max((a2 - a).abs()).max((b2 - b).abs()).max((c2 - c).abs());
        scal = scal.max((s.kappa - (a + b + c)).abs());
        scal = scal.max((s.mixed() / (2.0 * (N as f64 - 1.0)) - (2.0 * a + b) / 8.0).abs());
        scal = scal.max((s.horizontal() / (N as f64 * (N as f64 - 1.0)) - a).abs());
    }
    ensure(dec < 1e-12 && scal < 1e-10, format!("100 triples, decomposition error {dec:.2e}, scalar relations {scal:.2e}"))
}

fn criterion_3() -> Outcome {
    let prof = RotationalProfile::sine();
    let (g, chart) = rotational_metric(&prof, N).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0_f64;
    for (s, p) in chart_points(&chart, 10, 30) {
        let frame = frame_at(&g, &RadialDistribution, &p).map_err(err)?;
        let r = riemann(&g, &p, &frame).map_err(err)?;
        let (a, b, c) = closed_form_coefficients(&prof, s);
        let scale = a.abs().max(b.abs()).max(c.abs());
        for _ in 0..50 {
            let x = random_direction::<f64>(&mut rng, 2 * N);
            let hol = holomorphic_sectional(&r, &x).map_err(err)?;
            let phi = angle_phi(&frame, &frame.vector(&x)).map_err(err)?;
            worst = worst.max((hol - hol_profile(a, b, c, phi)).abs() / scale);
        }
    }
    ensure(worst < 1e-4, format!("10 points x 50 directions, max relative deviation {worst:.2e}"))
}

fn criterion_4() -> Outcome {
    let mut worst = 0.0_f64;
    let mut names = Vec::new();
    for (i, prof) in profiles().iter().enumerate() {
        let (g, chart) = rotational_metric(prof, N).map_err(err)?;
        let mut pts = chart_points(&chart, 10, 40 + i as u64);
        if i == 0 {
            pts.push((std::f64::consts::FRAC_PI_3, chart.point(std::f64::consts::FRAC_PI_3, &[1.0, 0.0, 0.3, 0.0, 0.0, -0.2])));
        }
        for (s, p) in pts {
            let r = riemann(&g, &p, &frame_at(&g, &RadialDistribution, &p).map_err(err)?).map_err(err)?;
            let q = qch_decompose(&r).map_err(err)?;
            let (a, b, c) = closed_form_coefficients(prof, s);
            let scale = a.abs().max(b.abs()).max(c.abs()).max(1.0);
            worst = worst.max(((q.a - a).abs().max((q.b - b).abs()).max((q.c - c).abs())) / scale);
        }
        names.push(prof.label.clone());
    }
    // the hand-derived value at s = π/3 on the sphere profile
    let sine = RotationalProfile::sine();
    let (g, chart) = rotational_metric(&sine, N).map_err(err)?;
    let p = chart.point(std::f64::consts::FRAC_PI_3, &[0.3, 1.0, 0.0, -0.5, 0.2, 0.0]);
    let q = qch_decompose(&riemann(&g, &p, &frame_at(&g, &RadialDistribution, &p).map_err(err)?).map_err(err)?).map_err(err)?;
    let third = (q.a - 8.0 / 3.0).abs().max((q.b - 8.0 / 3.0).abs()).max((q.c - 5.0 / 3.0).abs());
    // warped product curvature of the induced metric
    let mut warped = 0.0_f64;
    for prof in profiles() {
        let (gb, chart) = induced_metric(&prof, N).map_err(err)?;
        for (s, p) in chart_points(&chart, 10, 47) {
            let r = riemann(&gb, &p, &frame_at(&gb, &RadialDistribution, &p).map_err(err)?).map_err(err)?;
            let (al, be) = warped_curvature_coefficients(&prof, s);
            let expect = warped_curvature_tensor(al, be, 2 * N);
            warped = warped.max(r.sub(&expect).max_abs() / expect.max_abs().max(1.0));
        }
    }
    ensure(
        worst < 1e-4 && third < 1e-4 && warped < 1e-4,
        format!("profiles {names:?}: coefficients {worst:.2e}, (8/3, 8/3, 5/3) at π/3 off by {third:.2e}, warped curvature {warped:.2e}"),
    )
}

fn criterion_5() -> Outcome {
    let tol = Tolerances::default();
    let (mut qc, mut cor) = (0.0_f64, 0.0_f64);
    for (fi, src) in [flat_metric::<f64>(N), fubini_study(N)].iter().enumerate() {
        for seed in 0..3u64 {
            let pair = BiconformalPair::for_source(src, random_v(50 + seed)).map_err(err)?;
            let image = biconformal_apply(src, &pair).map_err(err)?;
            let pts = annulus_points::<f64>(N, 4, 500 + 10 * fi as u64 + seed, 0.4, 3.0);
            let reps = check_qc_invariance(src, &image, &pair, &pts, &tol).map_err(err)?;
            qc = qc.max(reps[0].max_residual()).max(reps[1].max_residual());
            cor = cor.max(reps[2].max_residual());
        }
    }
    let pts = annulus_points::<f64>(N, 6, 55, 0.4, 3.0);
    let comp = check_composition(&fubini_study(N), random_v(60), random_v(61), &pts, &tol).map_err(err)?;
    let comp = comp.max_residual();
    ensure(
        qc < 1e-4 && cor < 1e-5 && comp < 1e-8,
        format!("QC invariance {qc:.2e}, a + k² scaling {cor:.2e}, composition {comp:.2e}"),
    )
}

fn criterion_6() -> Outcome {
    let tol = Tolerances::default();
    let pts = annulus_points::<f64>(N, 8, 66, 0.4, 3.0);
    let fs = flatten(&fubini_study(N), &pts, &tol).map_err(err)?.report.max_residual();
    let nf = biconformally_flat_normal_form(random_v(67), N, 0.2, 5.0).map_err(err)?;
    let nfr = flatten(&nf, &pts, &tol).map_err(err)?.report.max_residual();
    ensure(fs < 1e-4 && nfr < 1e-4, format!("‖R'‖/‖R‖: Fubini–Study {fs:.2e}, normal form {nfr:.2e}"))
}

fn criterion_7() -> Outcome {
    let f = PotentialKind::Log1p.scalar::<f64>();
    let pot = potential_metric(f.clone(), N, 0.2, 5.0, "log1p").map_err(err)?;
    // e^{-2v} = 1 + ρ f''/f'
    let ff = f.clone();
    let v = RadialScalar::from_taylor(move |rho| {
        let j = ff.jet(rho);
        let fp = j.derivative();
        let fpp = fp.derivative();
        (Jet::variable(rho) * fpp / fp + 1.0).ln().scale(-0.5)
    });
    let nf = biconformally_flat_normal_form(v, N, 0.2, 5.0).map_err(err)?;
    let reference = point_at_radius::<f64>(N, 1.0, 70);
    let lambda = pot.metric(&reference)[(0, 0)] / nf.metric(&reference)[(0, 0)];
    let mut worst = 0.0_f64;
    for p in annulus_points::<f64>(N, 30, 71, 0.3, 4.5) {
        let a = pot.metric(&p);
        let b = nf.metric(&p).scale(lambda);
        worst = worst.max(a.sub(&b).max_abs() / a.max_abs());
    }
    ensure(worst < 1e-6, format!("30 points, max relative difference after homothety {worst:.2e}"))
}

fn criterion_8() -> Outcome {
    let a = 1.0_f64;
    let mut ode = 0.0_f64;
    let samples = constant_curvature_meridian(a, 100).map_err(err)?;
    for (x, _) in &samples {
        ode = ode.max(meridian_b_zero_residual(a, *x).abs());
    }
    let x0 = 1.0 / a.sqrt();
    let y0 = meridian_height(a, &Jet::constant(x0)).value();
    let tp0 = b_zero_slope_for_curvature(a, x0);
    // s from the axis to the midpoint along the closed form t = (2/√a) tanh(√a s/2)
    let s_mid = 2.0 / a.sqrt() * (x0 * a.sqrt() / 2.0).atanh();
    let (lo, hi) = (0.1 * s_mid, s_mid + 3.0);
    let sol = solve_b_zero_ode(x0, tp0, s_mid, lo, hi).map_err(err)?;
    let (mut curve, mut const_a) = (0.0_f64, 0.0_f64);
    for i in 0..=100 {
        let s = lo + (hi - lo) * i as f64 / 100.0;
        let st = sol.state(s).ok_or_else(|| format!("no state at {s}"))?;
        let y = meridian_height(a, &Jet::constant(st[0])).value() - y0;
        curve = curve.max((st[2] - y).abs());
        const_a = const_a.max((4.0 * (1.0 - st[1]) / (st[0] * st[0]) - a).abs());
    }
    ensure(
        samples.len() == 100 && ode < 1e-6 && curve < 1e-5 && const_a < 1e-6,
        format!("closed form ODE residual {ode:.2e}, ODE vs closed form {curve:.2e}, variation of a {const_a:.2e}"),
    )
}

fn criterion_9() -> Outcome {
    let tol = Tolerances::default();
    let (g, chart) = rotational_metric(&RotationalProfile::sine(), N).map_err(err)?;
    let pts: Vec<Vec<f64>> = chart_points(&chart, 6, 90).into_iter().map(|x| x.1).collect();
    let rep = check_integrability(&g, &RadialDistribution, &pts, &tol).map_err(err)?;
    let transverse = rep.extra["transverse"].iter().fold(0.0_f64, |m, x| m.max(*x));
    ensure(rep.passed(), format!("6 points, max relative residual {:.2e}, transverse derivatives {transverse:.2e}", rep.max_residual()))
}

fn criterion_10() -> Outcome {
    let tol = Tolerances::default();
    let flat = flat_metric::<f64>(N);
    let pts: Vec<Vec<f64>> = [0.5, 1.0, 2.0].iter().enumerate().map(|(i, r)| point_at_radius(N, *r, 100 + i as u64)).collect();
    let rep = check_b0_distribution(&flat, &RadialDistribution, &pts, &tol).map_err(err)?;
    let k_err = rep.extra["k"].iter().zip([0.5, 1.0, 2.0]).fold(0.0_f64, |m, (k, r)| m.max((k - 2.0 / r).abs()));
    let zero = ["theta", "p"].iter().flat_map(|k| rep.extra[*k].iter()).fold(0.0_f64, |m, x| m.max(x.abs()));
    let mut worst = rep.max_residual();
    let mut families = vec![flat.label.clone()];
    for g in kahler_families().into_iter().skip(1) {
        let pts = annulus_points::<f64>(N, 4, 110, 0.4, 3.0);
        worst = worst.max(check_b0_distribution(&g, &RadialDistribution, &pts, &tol).map_err(err)?.max_residual());
        families.push(g.label.clone());
    }
    let (g, chart) = rotational_metric(&RotationalProfile::sine(), N).map_err(err)?;
    let pts: Vec<Vec<f64>> = chart_points(&chart, 4, 111).into_iter().map(|x| x.1).collect();
    worst = worst.max(check_b0_distribution(&g, &RadialDistribution, &pts, &tol).map_err(err)?.max_residual());
    families.push(g.label.clone());
    ensure(
        k_err < 1e-8 && zero < 1e-6 && worst < 1e-4,
        format!("k = 2/r error {k_err:.2e}, θ/p {zero:.2e}, B0 residuals {worst:.2e} over {families:?}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("Kähler symmetries of invariant tensors and family curvatures", criterion_1),
        ("decomposition round trip and scalar relations", criterion_2),
        ("holomorphic curvature profile on the sphere profile", criterion_3),
        ("rotational coefficients and warped curvature", criterion_4),
        ("biconformal invariance, a + k² scaling, composition", criterion_5),
        ("flattening of Fubini–Study and a normal form", criterion_6),
        ("potential metric equals its normal-form reconstruction", criterion_7),
        ("constant-curvature meridian and the b = 0 equation", criterion_8),
        ("integrability relations on the sphere profile", criterion_9),
        ("B0 structure of the canonical and constructed families", criterion_10),
    ];
    let start = Instant::now();
    let mut failures = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag}: {title}: {detail} [{:.1}s]", i + 1, t.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of {} passed in {:.1}s", criteria.len() - failures, criteria.len(), start.elapsed().as_secs_f64());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
