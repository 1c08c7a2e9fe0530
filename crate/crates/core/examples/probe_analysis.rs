use aflow_core::analysis::*;
use aflow_core::charts::ChartedPoint;
use aflow_core::exec;
use aflow_core::flows::glue::*;
use aflow_core::flows::{suspension_flow, Flow, FlowSystem, MapSystem};
use aflow_core::maps::{AnosovMap, DaConfig, DaMap, PlykinMap};
use rand_chacha::rand_core::SeedableRng;

fn main() {
    let t0 = std::time::Instant::now();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);

    // 1. Anosov suspension spectrum.
    let anosov = suspension_flow(&MapSystem::Anosov(AnosovMap::new(1).unwrap()));
    let x0 = ChartedPoint::new(anosov.entry_chart(), &[0.3, 0.7, 0.0]);
    let spec = lyapunov_spectrum(&anosov, &x0, 10_000.0, 100, 1e-3).unwrap();
    println!("[{:?}] anosov spectrum: {:?} var {:?}", t0.elapsed(), spec.exponents, spec.window_variance);

    // 2. DA suspension spectrum.
    let da_susp = suspension_flow(&MapSystem::Da(DaMap::new(DaConfig::standard_single()).unwrap()));
    let x1 = ChartedPoint::new(da_susp.entry_chart(), &[0.314, 0.272, 0.0]);
    let spec = lyapunov_spectrum(&da_susp, &x1, 10_000.0, 100, 1e-3).unwrap();
    println!("[{:?}] da spectrum: {:?}", t0.elapsed(), spec.exponents);

    // 3. Plykin suspension spectrum.
    let plykin = suspension_flow(&MapSystem::Plykin(PlykinMap::standard().unwrap()));
    let x2 = ChartedPoint::new(plykin.entry_chart(), &[0.314, 0.272, 0.0]);
    let spec = lyapunov_spectrum(&plykin, &x2, 5_000.0, 50, 1e-3).unwrap();
    println!("[{:?}] plykin spectrum: {:?}", t0.elapsed(), spec.exponents);

    // 4. Orientability.
    for (name, sys, x, t) in [
        ("anosov", &anosov, [0.3, 0.7, 0.0], 4000.0),
        ("da", &da_susp, [0.314, 0.272, 0.0], 4000.0),
        ("plykin", &plykin, [0.314, 0.272, 0.0], 4000.0),
    ] {
        let p = ChartedPoint::new(sys.entry_chart(), &x);
        let v = orientability_test(sys, &p, t, 0.005, 200.0, 1e-3).unwrap();
        println!(
            "[{:?}] {name}: {:?} returns {} reversals {} samples {}",
            t0.elapsed(), v.verdict, v.return_count, v.reversal_count, v.samples
        );
    }

    // 5. Box dimensions.
    let da_map = DaMap::new(DaConfig::standard_single()).unwrap();
    let cloud = map_section_cloud(&aflow_core::maps::CoverMap::Da(da_map.clone()), aflow_core::charts::TORUS2, 1_000_000, 1000, &mut rng);
    let scales: Vec<f64> = (3..=8).map(|k| 0.5f64.powi(k)).collect();
    let est = box_counting(&cloud, &scales).unwrap();
    println!("[{:?}] da map section dim {:.4} residual {:.4} counts {:?}", t0.elapsed(), est.value, est.residual, est.counts);

    let s3 = match &da_susp { FlowSystem::Suspension(s) => s.clone(), _ => unreachable!() };
    let cloud3 = suspension_cloud(&s3, 1_000_000, 1000, &mut rng);
    let est3 = box_counting(&cloud3, &scales).unwrap();
    println!("[{:?}] da flow cloud dim {:.4} residual {:.4} counts {:?}", t0.elapsed(), est3.value, est3.residual, est3.counts);

    // 6. Splitting rates.
    let (_, hist) = aflow_core::orbit::integrate::integrate_with_tangent(&anosov, &x0, 500.0, 1e-3, 1.0).unwrap();
    let rep = splitting_rate_check(&hist, 5.0);
    println!("[{:?}] anosov rates: {:?}", t0.elapsed(), rep);

    // 7. Censuses.
    let grad = aflow_core::flows::gradient_sphere_flow(3).unwrap();
    let census = basin_census(&grad, &grad.probe(), 200, 100.0, 1e-3, exec::sub_seed(42, "census")).unwrap();
    println!("[{:?}] gradient census: eq {} traps {:?} unclassified {}", t0.elapsed(), census.equilibria.len(), census.traps.iter().map(|t| t.hits).collect::<Vec<_>>(), census.unclassified);

    let census = basin_census(&plykin, &plykin.probe(), 200, 200.0, 1e-3, exec::sub_seed(42, "census")).unwrap();
    println!("[{:?}] plykin census: orbits {} traps {:?} unclassified {}", t0.elapsed(), census.orbits.len(), census.traps.iter().map(|t| t.hits).collect::<Vec<_>>(), census.unclassified);

    // 8. Assembly census.
    let asm = theorem1_assembly(&AssemblyParams::default()).unwrap();
    let census = basin_census(&asm, &asm.probe(), 300, 300.0, 1e-3, exec::sub_seed(42, "census")).unwrap();
    println!("[{:?}] assembly census: eq {:?} orbits {} trap hits {:?} unclassified {}", t0.elapsed(),
        census.equilibria.iter().map(|e| format!("{:?}", e.tag)).collect::<Vec<_>>(),
        census.orbits.len(),
        census.traps.iter().map(|t| t.hits).collect::<Vec<_>>(), census.unclassified);

    // 9. Assembly orientability from a trapped orbit.
    let p = ChartedPoint::new(aflow_core::charts::PLYKIN_P, &[0.3, 0.25, 0.0]);
    let v = orientability_test(&asm, &p, 3000.0, 0.005, 200.0, 1e-3).unwrap();
    println!("[{:?}] assembly orientability: {:?} returns {} reversals {}", t0.elapsed(), v.verdict, v.return_count, v.reversal_count);
}
