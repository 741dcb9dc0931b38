//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured values (visible with `cargo test -- --nocapture`).

use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;
use thomson5::constraint::{
    embedded_gradient, restricted_hessian, ConstraintSystem, CostFunction, TangentFrame,
};
use thomson5::families::{
    classify, curve_tangent, double_tetra_equation, family_energy_closed_form, gen_bipyramid,
    gen_double_tetrahedron, gen_pentagon, gen_pyramid, pyramid_height_equation,
    scan_bifurcations, solve_double_tetrahedron, solve_pyramid_height, Family, FamilyShape,
    Transition,
};
use thomson5::riesz::{self, RieszEnergy, RieszExponent};
use thomson5::sphere::{self, chart_metric_gram, Configuration, SphereProductConstraints};
use thomson5::{newton_solve, newton_step, NewtonSettings};

fn coulomb() -> RieszEnergy {
    RieszEnergy::new(RieszExponent::coulomb())
}

fn perturbed(cfg: &Configuration, eps: f64, rng: &mut ChaCha8Rng) -> Configuration {
    let mut pts = *cfg.free_points();
    for p in &mut pts {
        let d = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        *p = (*p + d * eps).normalize();
    }
    Configuration::new(pts).unwrap()
}

fn weighted_spectrum(cfg: &Configuration, s: f64) -> Vec<f64> {
    let cs = SphereProductConstraints::default();
    let cost = RieszEnergy::new(RieszExponent::new(s).unwrap());
    let frame = sphere::product_frame(cfg);
    let h = restricted_hessian(&cs, &cost, &frame, &cfg.ambient()).unwrap();
    h.eigenvalues_with_metric(&chart_metric_gram(cfg, &frame))
        .unwrap()
}

#[test]
fn criterion_1_family_energies_at_s_one() {
    let cs = SphereProductConstraints::default();
    let cost = coulomb();
    let settings = NewtonSettings::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);

    let bipyr_energy = 0.5 + 3.0 * 2.0_f64.sqrt() + 3.0_f64.sqrt();
    let alpha = solve_pyramid_height(1.0).unwrap();
    let targets: [(&str, Configuration, f64); 3] = [
        ("bi-pyramid", gen_bipyramid(0.2), bipyr_energy),
        ("square-right-pyramid", gen_pyramid(alpha, 0.7), 6.483660519),
        ("regular-pentagon", gen_pentagon(1.1), 6.881909602),
    ];

    for (name, generator, expected) in targets {
        let x0 = perturbed(&generator, 1e-2, &mut rng).ambient();
        let started = Instant::now();
        let trace = newton_solve(&cs, &cost, &cs, &x0, &settings);
        let elapsed = started.elapsed();
        assert!(trace.converged(), "{name}: {:?}", trace.status);
        let energy = cost.value(trace.endpoint().unwrap());
        assert!(
            (energy - expected).abs() < 1e-7,
            "{name}: energy {energy} vs {expected}"
        );
        assert!(
            elapsed.as_secs_f64() < 1.0,
            "{name}: solve took {elapsed:?}"
        );
        println!(
            "criterion 1 [{name}]: energy {energy:.10} (target {expected:.10}), \
             {} iterations in {elapsed:?} -- PASS",
            trace.iterations()
        );
    }
}

#[test]
fn criterion_2_pyramid_height_at_s_one() {
    let alpha = solve_pyramid_height(1.0).unwrap();
    assert!(
        (alpha - (-0.2432010309)).abs() < 1e-8,
        "alpha = {alpha:.12}"
    );
    assert!(pyramid_height_equation(alpha, 1.0).abs() < 1e-12);
    println!("criterion 2: alpha* = {alpha:.12} -- PASS");
}

#[test]
fn criterion_3_spectra_match_reference_lists() {
    let alpha = solve_pyramid_height(1.0).unwrap();
    let cases: [(&str, Configuration, [f64; 8]); 3] = [
        (
            "bi-pyramid",
            gen_bipyramid(0.3),
            [0.0, 0.206, 0.371, 0.560, 1.380, 2.297, 3.181, 3.487],
        ),
        (
            "square-right-pyramid",
            gen_pyramid(alpha, 0.2),
            [-0.205, 0.0, 0.565, 0.565, 2.232, 2.232, 2.260, 3.592],
        ),
        (
            "regular-pentagon",
            gen_pentagon(0.8),
            [-2.628, -0.453, 0.0, 0.490, 1.084, 1.992, 4.932, 11.156],
        ),
    ];

    for (name, cfg, mut expected) in cases {
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let spectrum = weighted_spectrum(&cfg, 1.0);
        let max_abs = spectrum.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        for (got, want) in spectrum.iter().zip(&expected) {
            assert!(
                (got - want).abs() < 1e-3,
                "{name}: eigenvalue {got:.6} vs reference {want}"
            );
        }
        // The zero mode is exact to relative round-off.
        let zero_mode = spectrum
            .iter()
            .fold(f64::INFINITY, |m, l| if l.abs() < m { l.abs() } else { m });
        assert!(zero_mode < 1e-8 * max_abs, "{name}: zero mode {zero_mode:e}");
        println!("criterion 3 [{name}]: spectrum {spectrum:?} -- PASS");
    }

    // Closed form lambda_8 = 9 sqrt(2) / 4 on the bi-pyramid.
    let spectrum = weighted_spectrum(&gen_bipyramid(0.3), 1.0);
    let lam8 = 9.0 * 2.0_f64.sqrt() / 4.0;
    assert!(
        spectrum.iter().any(|l| (l - lam8).abs() < 1e-10),
        "9*sqrt(2)/4 missing from {spectrum:?}"
    );
    println!("criterion 3 [closed form]: found 9*sqrt(2)/4 = {lam8:.12} -- PASS");
}

#[test]
fn criterion_4_morse_bott_kernel_along_curves() {
    let cs = SphereProductConstraints::default();
    let alpha = solve_pyramid_height(1.0).unwrap();
    let (beta, gamma) = solve_double_tetrahedron(15.0).unwrap();

    type Gen = Box<dyn Fn(f64) -> Configuration>;
    let families: [(&str, f64, Gen, [f64; 2]); 4] = [
        ("bi-pyramid", 1.0, Box::new(gen_bipyramid), [-0.9, 0.9]),
        (
            "square-right-pyramid",
            1.0,
            Box::new(move |l| gen_pyramid(alpha, l)),
            [0.0, 6.0],
        ),
        ("regular-pentagon", 1.0, Box::new(gen_pentagon), [0.0, 6.0]),
        (
            "double-tetrahedron",
            15.0,
            Box::new(move |l| gen_double_tetrahedron(beta, gamma, l)),
            [0.0, 6.0],
        ),
    ];

    for (name, s, generator, [lo, hi]) in families {
        let cost = RieszEnergy::new(RieszExponent::new(s).unwrap());
        let mut worst: f64 = 0.0;
        for k in 0..10 {
            let lam = lo + (hi - lo) * k as f64 / 9.0;
            let cfg = generator(lam);
            let tangent = curve_tangent(&generator, lam);
            let frame = sphere::product_frame(&cfg);
            let h = restricted_hessian(&cs, &cost, &frame, &cfg.ambient()).unwrap();
            let w = frame.coords_of(&tangent).unwrap();
            let rel = (h.matrix() * &w).norm() / (h.matrix().norm() * w.norm());
            worst = worst.max(rel);
            assert!(rel < 1e-6, "{name} at {lam}: kernel residual {rel:e}");

            let report = classify(&cfg, RieszExponent::new(s).unwrap(), Some(&tangent)).unwrap();
            assert_eq!(report.nullity, 1, "{name} at {lam}");
            assert!(report.morse_bott_verified, "{name} at {lam}");
        }
        println!("criterion 4 [{name}]: worst kernel residual {worst:.3e} over 10 samples -- PASS");
    }
}

#[test]
fn criterion_5_bifurcation_thresholds() {
    let started = Instant::now();
    let records = scan_bifurcations(10.0, 25.0, 0.05, &Family::ALL);
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 60.0,
        "scan took {elapsed:?}, budget 60 s"
    );
    assert_eq!(records.len(), 3, "unexpected records: {records:?}");

    let expected = [
        (13.5204990011, Transition::IndexChange, Family::SquareRightPyramid),
        (15.048077392, Transition::EnergyCrossing, Family::BiPyramid),
        (21.1471229401, Transition::IndexChange, Family::BiPyramid),
    ];
    for (record, (s_star, transition, family)) in records.iter().zip(&expected) {
        assert_eq!(record.transition, *transition);
        assert_eq!(record.family.family(), *family);
        assert!(
            (record.s_star - s_star).abs() < 1e-6,
            "s* = {:.10} vs {s_star}",
            record.s_star
        );
    }
    println!(
        "criterion 5: thresholds {:?} in {elapsed:?} -- PASS",
        records.iter().map(|r| r.s_star).collect::<Vec<_>>()
    );
}

#[test]
fn criterion_6_double_tetrahedron_regimes() {
    use thomson5::families::FamiliesError;
    let cs = SphereProductConstraints::default();

    assert!(matches!(
        solve_double_tetrahedron(10.0),
        Err(FamiliesError::NotPresent { .. })
    ));

    for (s, pattern) in [(15.0, "negative pair"), (25.0, "straddling pair")] {
        let (beta, gamma) = solve_double_tetrahedron(s).unwrap();
        match pattern {
            "negative pair" => assert!(
                -1.0 < gamma && gamma < beta && beta < 0.0,
                "s={s}: ({beta}, {gamma})"
            ),
            _ => assert!(gamma < 0.0 && 0.0 < beta && beta < 1.0, "s={s}: ({beta}, {gamma})"),
        }
        let cfg = gen_double_tetrahedron(beta, gamma, 0.3);
        let cost = RieszEnergy::new(RieszExponent::new(s).unwrap());
        let residual = embedded_gradient(&cs, &cost, &cfg.ambient()).unwrap().norm();
        assert!(residual < 1e-9, "s={s}: residual {residual:e}");

        let tangent = curve_tangent(|l| gen_double_tetrahedron(beta, gamma, l), 0.3);
        let report = classify(&cfg, RieszExponent::new(s).unwrap(), Some(&tangent)).unwrap();
        assert_eq!(report.morse_index, 1, "s={s}");
        println!(
            "criterion 6 [s={s}]: (beta, gamma) = ({beta:.10}, {gamma:.10}), \
             residual {residual:.2e}, Morse index 1 -- PASS"
        );
    }
    println!("criterion 6 [s=10]: NotPresent -- PASS");
}

#[test]
fn criterion_7_property_suite() {
    let cs = SphereProductConstraints::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7007);
    let cfg = Configuration::random(&mut rng);
    let x = cfg.ambient();

    // Analytic gradient vs central finite differences, 1e-6 relative.
    let cost = RieszEnergy::new(RieszExponent::new(3.0).unwrap());
    let g = cost.gradient(&x);
    let h = 1e-6;
    for k in 0..12 {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += h;
        xm[k] -= h;
        let fd = (cost.value(&xp) - cost.value(&xm)) / (2.0 * h);
        assert!((fd - g[k]).abs() < 1e-6 * g[k].abs().max(1.0));
    }

    // Analytic Hessian vs finite differences of the gradient, 1e-4 relative.
    let hess = cost.hessian(&x);
    let scale = hess.norm();
    let h = 1e-5;
    for k in 0..12 {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += h;
        xm[k] -= h;
        let fd = (cost.gradient(&xp) - cost.gradient(&xm)) / (2.0 * h);
        for r in 0..12 {
            assert!((fd[r] - hess[(r, k)]).abs() < 1e-4 * scale);
        }
    }

    // Embedded gradient vs Gram-Schmidt projector oracle, 1e-10.
    let coulomb = coulomb();
    let eg = embedded_gradient(&cs, &coulomb, &x).unwrap();
    let grads = cs.constraint_gradients(&x);
    let mut q: Vec<DVector<f64>> = Vec::new();
    for col in grads.column_iter() {
        let mut u = col.clone_owned();
        for qi in &q {
            let c = qi.dot(&u);
            u -= qi * c;
        }
        q.push(&u / u.norm());
    }
    let mut projected = coulomb.gradient(&x);
    for qi in &q {
        let c = qi.dot(&projected);
        projected -= qi * c;
    }
    assert!((eg - projected).norm() < 1e-10);

    // Frame-change invariance of the ambient Newton step, 1e-8.
    let frame = sphere::product_frame(&cfg);
    let c = DMatrix::from_fn(8, 8, |i, j| {
        if i == j {
            1.0 + rng.random_range(0.0..0.5)
        } else {
            rng.random_range(-0.25..0.25)
        }
    });
    let changed = TangentFrame::new(frame.basis() * &c);
    let settings = NewtonSettings::default();
    let a = newton_step(&cs, &coulomb, &frame, &x, &settings).unwrap();
    let b = newton_step(&cs, &coulomb, &changed, &x, &settings).unwrap();
    assert!((&a.ambient - &b.ambient).norm() < 1e-8 * a.ambient.norm().max(1.0));

    // Retraction first-order agreement, 1e-6.
    let coords = DVector::from_fn(8, |_, _| rng.random_range(-1.0..1.0));
    let v = frame.ambient(&coords);
    let t = 1e-6;
    let plus = sphere::retract(&cfg, &(&v * t)).unwrap().ambient();
    let minus = sphere::retract(&cfg, &(&v * -t)).unwrap().ambient();
    assert!(((plus - minus) / (2.0 * t) - &v).norm() < 1e-6 * v.norm().max(1.0));

    // E_s(beta, beta) = (beta^2 - 1) T_s(beta), 1e-12, on a grid.
    for i in 0..12 {
        let beta = -0.9 + 1.8 * i as f64 / 11.0;
        for s in [0.5, 1.0, 2.0, 5.0, 12.0, 20.0] {
            let (lhs, _) = double_tetra_equation(beta, beta, s);
            let rhs = (beta * beta - 1.0) * pyramid_height_equation(beta, s);
            assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
        }
    }

    // Closed-form vs direct family energies, 1e-12.
    for s in [1.0, 2.0, 6.0] {
        let exp = RieszExponent::new(s).unwrap();
        let alpha = solve_pyramid_height(s).unwrap();
        let pairs: [(f64, f64); 3] = [
            (
                riesz::energy(&gen_bipyramid(0.4), exp).unwrap(),
                family_energy_closed_form(&FamilyShape::BiPyramid, s),
            ),
            (
                riesz::energy(&gen_pyramid(alpha, 0.3), exp).unwrap(),
                family_energy_closed_form(&FamilyShape::SquareRightPyramid { alpha }, s),
            ),
            (
                riesz::energy(&gen_pentagon(0.5), exp).unwrap(),
                family_energy_closed_form(&FamilyShape::RegularPentagon, s),
            ),
        ];
        for (direct, closed) in pairs {
            assert!((direct - closed).abs() < 1e-12 * direct.max(1.0));
        }
    }

    println!("criterion 7: gradient/Hessian FD, projector, frame invariance, retraction, shape identities, closed forms -- PASS");
}

#[test]
fn criterion_8_quadratic_convergence_order() {
    let cs = SphereProductConstraints::default();
    let cost = coulomb();
    let mut rng = ChaCha8Rng::seed_from_u64(8008);
    let x0 = perturbed(&gen_bipyramid(0.15), 1e-2, &mut rng).ambient();
    let trace = newton_solve(&cs, &cost, &cs, &x0, &NewtonSettings::default());
    assert!(trace.converged());
    let norms: Vec<f64> = trace.iterates.iter().map(|it| it.grad_norm).collect();
    assert!(norms.len() >= 4, "too few iterations to fit: {norms:?}");

    let mut fitted_c: f64 = 0.0;
    let n = norms.len();
    for k in (n - 4)..(n - 1) {
        let ratio = norms[k + 1] / (norms[k] * norms[k]);
        assert!(ratio.is_finite(), "ratio at {k} not finite");
        fitted_c = fitted_c.max(ratio);
    }
    assert!(
        fitted_c < 1e3,
        "fitted quadratic constant {fitted_c} implausibly large"
    );
    println!(
        "criterion 8: gradient norms {norms:?}, fitted C = {fitted_c:.3} -- PASS"
    );
}
