//! Integrator and finder checks against closed forms and exact map oracles.

use aflow_core::charts::{ChartedPoint, Coords, CylinderPoint, BALL3, MAPTORUS};
use aflow_core::flows::{
    gradient_sphere_flow, suspension_flow, Flow, FlowSystem, Lemma1Flow, MapSystem,
};
use aflow_core::maps::{AnosovMap, DaConfig, DaMap, PlykinMap};
use aflow_core::orbit::finders::{find_equilibria, find_periodic_orbit, FinderSettings};
use aflow_core::orbit::integrate::{flow_map, integrate, integrate_with_tangent};
use aflow_core::orbit::{Section, Stability};
use aflow_core::CoreError;

fn anosov_suspension() -> FlowSystem {
    suspension_flow(&MapSystem::Anosov(AnosovMap::new(1).unwrap()))
}

fn lemma1() -> FlowSystem {
    FlowSystem::Lemma1(Lemma1Flow::new(false))
}

#[test]
fn suspension_time_one_reproduces_map() {
    let sys = anosov_suspension();
    let a = AnosovMap::new(1).unwrap();
    let x0 = ChartedPoint::new(MAPTORUS, &[0.3, 0.7, 0.0]);
    let end = flow_map(&sys, &x0, 1.0, 1e-3).unwrap();
    let img = a.apply(&aflow_core::torus_reduce([0.3, 0.7]).unwrap());
    assert!((end.coords[0] - img.x()).abs() < 1e-12);
    assert!((end.coords[1] - img.y()).abs() < 1e-12);
    assert!(end.coords[2].abs() < 1e-12);
}

#[test]
fn suspension_half_time_is_fiber_translation() {
    let sys = anosov_suspension();
    let x0 = ChartedPoint::new(MAPTORUS, &[0.3, 0.7, 0.0]);
    let end = flow_map(&sys, &x0, 0.5, 1e-3).unwrap();
    assert_eq!(end.coords[0], 0.3);
    assert_eq!(end.coords[1], 0.7);
    assert!((end.coords[2] - 0.5).abs() < 1e-12);
}

#[test]
fn suspension_matches_iterates_for_ten_steps() {
    // Also exercised for the quotient suspension of the equivariant map.
    for (sys, map_apply) in [
        (
            anosov_suspension(),
            Box::new(|p: aflow_core::TorusPoint2| AnosovMap::new(1).unwrap().apply(&p))
                as Box<dyn Fn(aflow_core::TorusPoint2) -> aflow_core::TorusPoint2>,
        ),
        (
            suspension_flow(&MapSystem::Plykin(PlykinMap::standard().unwrap())),
            Box::new(|p: aflow_core::TorusPoint2| {
                PlykinMap::standard().unwrap().cover().apply(&p)
            }),
        ),
    ] {
        let chart = sys.entry_chart();
        let mut expect = aflow_core::torus_reduce([0.314, 0.272]).unwrap();
        let x0 = ChartedPoint::new(chart, &[expect.x(), expect.y(), 0.0]);
        for k in 1..=10 {
            let end = flow_map(&sys, &x0, k as f64, 1e-3).unwrap();
            expect = map_apply(expect);
            let d = aflow_core::torus_reduce([end.coords[0], end.coords[1]])
                .unwrap()
                .dist(&expect);
            assert!(d < 1e-8, "k={k}, distance {d}");
        }
    }
}

#[test]
fn lemma1_closed_form_and_order() {
    let flow = Lemma1Flow::new(false);
    let sys = lemma1();
    let start = CylinderPoint::new(0.3, 0.0, 0.4).unwrap();
    let t = 2.0;
    let exact = flow.closed_form(&start, t).to_cartesian();
    let x0 = ChartedPoint::new(BALL3, &start.to_cartesian());

    let err = |step: f64| -> f64 {
        let end = flow_map(&sys, &x0, t, step).unwrap();
        (0..3)
            .map(|i| (end.coords[i] - exact[i]).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    assert!(err(1e-3) < 1e-8);

    // Order check: halving the step cuts the endpoint error ~16x.
    let e1 = err(0.02);
    let e2 = err(0.01);
    let factor = e1 / e2;
    assert!(
        (12.0..=20.0).contains(&factor),
        "order factor {factor} (errors {e1:.3e}, {e2:.3e})"
    );
}

#[test]
fn lemma1_periodic_orbit_round_trip() {
    let sys = lemma1();
    let x0 = ChartedPoint::new(BALL3, &[1.0, 0.0, 0.0]);
    let end = flow_map(&sys, &x0, std::f64::consts::TAU, 1e-3).unwrap();
    let d: f64 = (0..3)
        .map(|i| (end.coords[i] - x0.coords[i]).powi(2))
        .sum::<f64>()
        .sqrt();
    assert!(d < 1e-8, "closure {d}");
}

#[test]
fn gradient_flow_reaches_sink() {
    let sys = gradient_sphere_flow(3).unwrap();
    let x0 = ChartedPoint::new(sys.entry_chart(), &[0.6, 0.5, -0.4, 0.48]);
    let end = flow_map(&sys, &x0, 50.0, 1e-3).unwrap();
    let south = [0.0, 0.0, 0.0, -1.0];
    let d: f64 = (0..4)
        .map(|i| (end.coords[i] - south[i]).powi(2))
        .sum::<f64>()
        .sqrt();
    assert!(d < 1e-6, "distance to sink {d}");
}

#[test]
fn escape_is_reported() {
    let sys = FlowSystem::Lemma1(Lemma1Flow::new(true));
    // Reversed model: the circle repels, orbits leave the ball.
    let x0 = ChartedPoint::new(BALL3, &[1.8, 0.0, 1.5]);
    let err = flow_map(&sys, &x0, 20.0, 1e-3).unwrap_err();
    assert!(matches!(err, CoreError::Escape { .. }), "{err}");
}

#[test]
fn record_carries_seam_events() {
    let sys = anosov_suspension();
    let x0 = ChartedPoint::new(MAPTORUS, &[0.1, 0.2, 0.0]);
    let rec = integrate(&sys, &x0, 3.5, 1e-3).unwrap();
    let seams = rec
        .events
        .iter()
        .filter(|(_, e)| matches!(e, aflow_core::orbit::OrbitEvent::SeamCrossing { .. }))
        .count();
    assert_eq!(seams, 3);
    assert!(rec.times.windows(2).all(|w| w[1] > w[0]));
    assert!((rec.times.last().unwrap() - 3.5).abs() < 1e-3);
}

#[test]
fn tangent_growth_matches_eigenvalues() {
    let sys = anosov_suspension();
    let x0 = ChartedPoint::new(MAPTORUS, &[0.3, 0.7, 0.0]);
    let (_, hist) = integrate_with_tangent(&sys, &x0, 500.0, 1e-3, 1.0).unwrap();
    let rates = hist.mean_rates();
    let lu = aflow_core::maps::lambda_unstable().ln();
    assert!((rates[0] - lu).abs() / lu < 0.01, "leading {rates:?}");
    assert!(rates[1].abs() < 0.01, "flow direction {:?}", rates);
    assert!((rates[2] + lu).abs() / lu < 0.01, "contracting {:?}", rates);
}

#[test]
fn lemma1_transverse_rates_near_orbit() {
    let sys = lemma1();
    // Short enough that float noise cannot rotate the decayed radial
    // column onto the neutral mode (the modes swap near t ~ 35).
    let x0 = ChartedPoint::new(BALL3, &[1.001, 0.0, 0.001]);
    let (_, hist) = integrate_with_tangent(&sys, &x0, 25.0, 1e-3, 1.0).unwrap();
    let rates = hist.mean_rates();
    assert!(rates[0].abs() < 0.01, "{rates:?}");
    assert!((rates[1] + 1.0).abs() < 0.01, "{rates:?}");
    assert!((rates[2] + 1.0).abs() < 0.01, "{rates:?}");
}

#[test]
fn flow_derivative_matches_finite_differences() {
    use aflow_core::analysis::flow_derivative_consistency;
    let da = DaMap::new(DaConfig::standard_single()).unwrap();
    for (sys, x0) in [
        (
            anosov_suspension(),
            ChartedPoint::new(MAPTORUS, &[0.3, 0.7, 0.4]),
        ),
        (
            suspension_flow(&MapSystem::Da(da)),
            ChartedPoint::new(MAPTORUS, &[0.31, 0.17, 0.4]),
        ),
        (lemma1(), ChartedPoint::new(BALL3, &[0.6, 0.2, 0.5])),
    ] {
        let err = flow_derivative_consistency(&sys, &x0, 1.0, 1e-3).unwrap();
        assert!(err < 1e-4, "FD mismatch {err}");
    }
}

#[test]
fn equilibria_of_gradient_flow() {
    let sys = gradient_sphere_flow(3).unwrap();
    let probe = sys.probe();
    let (found, _) = find_equilibria(&sys, &probe.equilibrium_seeds, &FinderSettings::default())
        .unwrap();
    assert_eq!(found.len(), 2);
    for eq in &found {
        let pole = eq.point.coords[3];
        assert!(pole.abs() > 1.0 - 1e-9);
        let expect = if pole > 0.0 { 1.0 } else { -1.0 };
        assert_eq!(eq.eigenvalues.len(), 3);
        for e in &eq.eigenvalues {
            assert!((e[0] - expect).abs() < 1e-8, "{:?}", eq.eigenvalues);
        }
    }
}

#[test]
fn lemma1_axis_saddle() {
    let sys = lemma1();
    let seeds = [ChartedPoint::new(BALL3, &[0.05, 0.03, 0.1])];
    let (found, _) = find_equilibria(&sys, &seeds, &FinderSettings::default()).unwrap();
    assert_eq!(found.len(), 1);
    let eq = &found[0];
    assert!(eq.point.coords.norm() < 1e-9);
    // Radial pair with real part +1, vertical eigenvalue -1.
    let eigs = &eq.eigenvalues;
    assert_eq!(eigs.len(), 3);
    assert!((eigs[0][0] - 1.0).abs() < 1e-8 && (eigs[0][1].abs() - 1.0).abs() < 1e-8);
    assert!((eigs[1][0] - 1.0).abs() < 1e-8);
    assert!((eigs[2][0] + 1.0).abs() < 1e-8 && eigs[2][1].abs() < 1e-8);
}

#[test]
fn suspension_has_no_equilibria() {
    let sys = anosov_suspension();
    let seeds = [
        ChartedPoint::new(MAPTORUS, &[0.0, 0.0, 0.0]),
        ChartedPoint::new(MAPTORUS, &[0.3, 0.8, 0.5]),
    ];
    let (found, missed) = find_equilibria(&sys, &seeds, &FinderSettings::default()).unwrap();
    assert!(found.is_empty());
    assert_eq!(missed.len(), 2);
}

#[test]
fn lemma1_orbit_via_section() {
    let sys = lemma1();
    let section = Section::Plane {
        chart: BALL3,
        point: Coords::from_slice(&[1.0, 0.0, 0.0]),
        normal: Coords::from_slice(&[0.0, 1.0, 0.0]),
    };
    let seed = ChartedPoint::new(BALL3, &[1.1, 0.0, 0.1]);
    let orbit = find_periodic_orbit(&sys, &section, &seed, &FinderSettings::default()).unwrap();
    assert!((orbit.period - std::f64::consts::TAU).abs() < 1e-6);
    assert_eq!(orbit.stability, Stability::Attracting);
    let expect = (-std::f64::consts::TAU).exp();
    for m in &orbit.multipliers {
        let modulus = m[0].hypot(m[1]);
        assert!(
            (modulus - expect).abs() / expect < 1e-4,
            "multiplier {modulus} vs {expect}"
        );
    }
}

#[test]
fn reversed_lemma1_orbit_multipliers_invert() {
    let sys = FlowSystem::Lemma1(Lemma1Flow::new(true));
    let section = Section::Plane {
        chart: BALL3,
        point: Coords::from_slice(&[1.0, 0.0, 0.0]),
        normal: Coords::from_slice(&[0.0, 1.0, 0.0]),
    };
    // The orbit repels in reversed time at e^{2 pi} per turn, so the seed
    // must survive the measuring turn: start within ~1e-6 of the circle.
    let seed = ChartedPoint::new(BALL3, &[1.000001, 0.0, 0.000001]);
    let orbit = find_periodic_orbit(&sys, &section, &seed, &FinderSettings::default()).unwrap();
    assert_eq!(orbit.stability, Stability::Repelling);
    let expect = std::f64::consts::TAU.exp();
    for m in &orbit.multipliers {
        let modulus = m[0].hypot(m[1]);
        assert!(
            (modulus - expect).abs() / expect < 1e-4,
            "multiplier {modulus} vs {expect}"
        );
    }
}

#[test]
fn plykin_source_orbit_is_repelling() {
    let sys = suspension_flow(&MapSystem::Plykin(PlykinMap::standard().unwrap()));
    let chart = sys.entry_chart();
    let seed = ChartedPoint::new(chart, &[0.002, 0.001, 0.0]);
    let orbit =
        find_periodic_orbit(&sys, &Section::Seam { chart }, &seed, &FinderSettings::default())
            .unwrap();
    assert_eq!(orbit.stability, Stability::Repelling);
    assert!((orbit.period - 1.0).abs() < 1e-9);
    // Multipliers are the source's Jacobian eigenvalues.
    let mods: Vec<f64> = orbit.multipliers.iter().map(|m| m[0].hypot(m[1])).collect();
    assert!((mods[0] - 17.944).abs() < 0.01, "{mods:?}");
    assert!((mods[1] - 1.8).abs() < 1e-3, "{mods:?}");
}

#[test]
fn floquet_reversal_inverts_multipliers() {
    let fwd = lemma1();
    let rev = fwd.clone().reversed().unwrap();
    let section = Section::Plane {
        chart: BALL3,
        point: Coords::from_slice(&[1.0, 0.0, 0.0]),
        normal: Coords::from_slice(&[0.0, 1.0, 0.0]),
    };
    let seed_fwd = ChartedPoint::new(BALL3, &[1.05, 0.0, 0.05]);
    let seed_rev = ChartedPoint::new(BALL3, &[1.000001, 0.0, 0.000001]);
    let a = find_periodic_orbit(&fwd, &section, &seed_fwd, &FinderSettings::default()).unwrap();
    let b = find_periodic_orbit(&rev, &section, &seed_rev, &FinderSettings::default()).unwrap();
    for (ma, mb) in a.multipliers.iter().zip(&b.multipliers) {
        let pa = ma[0].hypot(ma[1]);
        let pb = mb[0].hypot(mb[1]);
        assert!((pa * pb - 1.0).abs() < 1e-6, "{pa} * {pb}");
    }
}
