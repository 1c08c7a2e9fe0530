use aflow_core::flows::glue::*;
use aflow_core::flows::{suspension_flow, Flow, FlowSystem, MapSystem};
use aflow_core::maps::{DaConfig, DaMap, PlykinMap};
use aflow_core::orbit::integrate::flow_map;
use aflow_core::charts::ChartedPoint;

fn main() {
    // Standalone excision of the quotient suspension.
    let plk = PlykinMap::standard().unwrap();
    let susp = match suspension_flow(&MapSystem::Plykin(plk)) {
        FlowSystem::Suspension(s) => s,
        _ => unreachable!(),
    };
    let orbit = suspension_source_orbit(&susp, [0.0, 0.0]).unwrap();
    println!("orbit stability {:?} multipliers {:?}", orbit.stability, orbit.multipliers);
    match excise_repelling_orbit(&susp, &orbit, 0.0018) {
        Ok((r, surf)) => println!(
            "excised: expansion margin {:.4}, transversality {:.4}, samples {}",
            r.margins().expansion, r.margins().transversality, surf.samples.len()
        ),
        Err(e) => println!("excision FAILED: {e}"),
    }
    // Too-large tube must fail.
    match excise_repelling_orbit(&susp, &orbit, 0.004) {
        Ok(_) => println!("0.004 tube unexpectedly ok"),
        Err(e) => println!("0.004 tube rejected: {e}"),
    }

    // DA (k=1) excision.
    let da = DaMap::new(DaConfig::standard_single()).unwrap();
    let susp1 = match suspension_flow(&MapSystem::Da(da)) {
        FlowSystem::Suspension(s) => s,
        _ => unreachable!(),
    };
    let orbit1 = suspension_source_orbit(&susp1, [0.0, 0.0]).unwrap();
    match excise_repelling_orbit(&susp1, &orbit1, 0.012) {
        Ok((r, _)) => println!("k1 excised: margins {:?} ", r.margins()),
        Err(e) => println!("k1 excision FAILED: {e}"),
    }

    // Full assembly.
    let t0 = std::time::Instant::now();
    match theorem1_assembly(&AssemblyParams::default()) {
        Ok(asm) => {
            println!("assembly built in {:?}", t0.elapsed());
            for (i, rep) in all_compatibility_reports(&asm).unwrap().iter().enumerate() {
                println!("glue {i}: {rep:?}");
            }
            if let FlowSystem::Glued(g) = &asm {
                println!("collar min norm {:.4e}", g.report().collar_min_norm);
            }
            // Integrate a few orbits from the ambient chart into the trap.
            let amb = asm.entry_chart();
            for (i, start) in [
                ChartedPoint::new(amb, &[0.3, 0.2, -0.5, 0.78]),
                ChartedPoint::new(amb, &[-0.1, 0.6, 0.2, 0.77]),
            ].iter().enumerate() {
                match flow_map(&asm, start, 60.0, 1e-3) {
                    Ok(end) => println!("orbit {i}: chart {} coords {:?}", end.chart, &end.coords[..]),
                    Err(e) => println!("orbit {i} FAILED: {e}"),
                }
            }
        }
        Err(e) => println!("assembly FAILED: {e}"),
    }
}
