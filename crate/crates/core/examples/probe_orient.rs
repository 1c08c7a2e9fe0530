use aflow_core::analysis::orientability_test;
use aflow_core::charts::ChartedPoint;
use aflow_core::flows::{suspension_flow, Flow, MapSystem};
use aflow_core::maps::AnosovMap;

fn main() {
    let sys = suspension_flow(&MapSystem::Anosov(AnosovMap::new(1).unwrap()));
    let p = ChartedPoint::new(sys.entry_chart(), &[0.3, 0.7, 0.0]);
    for t in [20.0, 50.0, 100.0] {
        let t0 = std::time::Instant::now();
        let v = orientability_test(&sys, &p, t, 0.01, 5.0, 1e-3).unwrap();
        println!(
            "T={t}: {:?} in {:?} samples {} returns {}",
            v.verdict,
            t0.elapsed(),
            v.samples,
            v.return_count
        );
    }
}
