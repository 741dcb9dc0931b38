// Compile check of the README usage example.

use thomson5::families::{classify, curve_tangent, gen_pentagon};
use thomson5::{
    newton_solve, NewtonSettings, RieszEnergy, RieszExponent, SphereProductConstraints,
};

#[test]
fn readme_example_runs() {
    let cs = SphereProductConstraints::default();
    let cost = RieszEnergy::new(RieszExponent::coulomb());
    let start = gen_pentagon(0.4).ambient();
    let trace = newton_solve(&cs, &cost, &cs, &start, &NewtonSettings::default());
    assert!(trace.converged());

    let report = classify(
        &gen_pentagon(0.4),
        RieszExponent::coulomb(),
        Some(&curve_tangent(gen_pentagon, 0.4)),
    )
    .unwrap();
    assert_eq!((report.morse_index, report.nullity), (2, 1));
}
