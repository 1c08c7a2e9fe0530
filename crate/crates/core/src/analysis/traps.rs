//! Trapping-region transversality, forward invariance, and the basin
//! census against registered equilibria, orbits, and traps.

use serde::Serialize;

use crate::charts::{ChartedPoint, Coords};
use crate::error::Result;
use crate::exec;
use crate::flows::glue::SystemProbe;
use crate::flows::{Flow, FlowSystem};
use crate::orbit::finders::{find_equilibria, find_periodic_orbit, FinderSettings};
use crate::orbit::integrate::Engine;
use crate::surfaces::{RegionTest, TrapSurface};

use super::{classify_equilibrium, EquilibriumSummary, EquilibriumTag, OrbitSummary};

#[derive(Clone, Debug, Serialize)]
pub struct TrapReport {
    /// Largest field-dot-outward-normal over the samples; the trap passes
    /// when this is strictly negative everywhere.
    pub max_outward_component: f64,
    /// Inward margin: -max_outward_component.
    pub min_margin: f64,
    pub worst_sample: Option<ChartedPoint>,
    pub samples: usize,
    pub passed: bool,
}

/// Check that the field crosses the surface strictly inward at every
/// sample. Failure is a report, not an error.
pub fn trap_check(sys: &FlowSystem, surface: &TrapSurface) -> Result<TrapReport> {
    let mut max_dot = f64::NEG_INFINITY;
    let mut worst = None;
    for (p, n) in &surface.samples {
        let mut f = Coords::zeros(p.chart.dim());
        sys.field(p.chart, &p.coords, &mut f)?;
        let dot: f64 = f.iter().zip(n.iter()).map(|(a, b)| a * b).sum();
        if dot > max_dot {
            max_dot = dot;
            worst = Some(*p);
        }
    }
    Ok(TrapReport {
        max_outward_component: max_dot,
        min_margin: -max_dot,
        worst_sample: worst,
        samples: surface.samples.len(),
        passed: max_dot < 0.0,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub samples: usize,
    pub horizon: f64,
    pub exits: usize,
    /// First observed exit: (start, exit point, exit time).
    pub counterexample: Option<(ChartedPoint, ChartedPoint, f64)>,
    pub passed: bool,
}

/// Integrate interior samples for the horizon and report any exit from the
/// region. Containment is polled once per unit time and at the endpoint.
pub fn forward_invariance_check(
    sys: &FlowSystem,
    region: &RegionTest,
    n_samples: usize,
    horizon: f64,
    step: f64,
    seed: u64,
) -> Result<InvarianceReport> {
    let results = exec::map_indexed(n_samples, |i| -> Result<Option<(ChartedPoint, ChartedPoint, f64)>> {
        let mut rng = exec::job_rng(seed, i);
        // Rejection-sample an interior start.
        let start = loop {
            let p = sys.sample_point(&mut rng);
            if region.contains(&p) {
                break p;
            }
        };
        let mut eng = Engine::new(sys, &start, step)?;
        eng.collect_events = false;
        let mut t = 0.0;
        while t < horizon {
            let dt = 1.0f64.min(horizon - t);
            eng.advance(dt)?;
            t = eng.t;
            if !region.contains(&eng.point()) {
                return Ok(Some((start, eng.point(), t)));
            }
        }
        Ok(None)
    });

    let mut exits = 0;
    let mut counterexample = None;
    for r in results {
        if let Some(exit) = r? {
            exits += 1;
            if counterexample.is_none() {
                counterexample = Some(exit);
            }
        }
    }
    Ok(InvarianceReport {
        samples: n_samples,
        horizon,
        exits,
        counterexample,
        passed: exits == 0,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CensusTrapEntry {
    pub name: String,
    pub attractor: bool,
    pub hits: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct CensusReport {
    pub equilibria: Vec<EquilibriumSummary>,
    /// Analytic equilibria without chart coordinates (extension poles).
    pub known_equilibria: Vec<(String, EquilibriumTag)>,
    pub orbits: Vec<OrbitSummary>,
    pub traps: Vec<CensusTrapEntry>,
    pub samples: usize,
    pub to_equilibria: usize,
    pub to_orbits: usize,
    pub unclassified: usize,
    pub unclassified_fraction: f64,
}

const EQ_PROXIMITY: f64 = 1e-3;
const ORBIT_PROXIMITY: f64 = 1e-2;

/// Locate the probe's equilibria and orbits, then integrate random initial
/// points for the horizon and classify every endpoint: inside a registered
/// trap, near an equilibrium, near a periodic orbit, or unclassified.
pub fn basin_census(
    sys: &FlowSystem,
    probe: &SystemProbe,
    n_samples: usize,
    horizon: f64,
    step: f64,
    seed: u64,
) -> Result<CensusReport> {
    let settings = FinderSettings {
        step,
        ..FinderSettings::default()
    };
    let (eqs, _) = find_equilibria(sys, &probe.equilibrium_seeds, &settings)?;
    let equilibria: Vec<EquilibriumSummary> = eqs
        .iter()
        .map(|e| EquilibriumSummary {
            point: e.point,
            eigenvalues: e.eigenvalues.clone(),
            tag: classify_equilibrium(&e.eigenvalues, 1e-6),
        })
        .collect();

    let mut orbits: Vec<OrbitSummary> = Vec::new();
    let mut orbit_samples: Vec<Vec<ChartedPoint>> = Vec::new();
    for (seed_pt, section) in &probe.orbit_seeds {
        if let Ok(orb) = find_periodic_orbit(sys, section, seed_pt, &settings) {
            let dup = orbits.iter().zip(&orbit_samples).any(|(o, _)| {
                o.representative.chart == orb.representative.chart
                    && sys.atlas().distance(
                        o.representative.chart,
                        &o.representative.coords,
                        &orb.representative.coords,
                    ) < 1e-6
            });
            if !dup {
                orbit_samples.push(orb.samples.clone());
                orbits.push(OrbitSummary {
                    representative: orb.representative,
                    period: orb.period,
                    multipliers: orb.multipliers.clone(),
                    stability: orb.stability,
                });
            }
        }
    }

    #[derive(Clone, Copy)]
    enum Fate {
        Trap(usize),
        Equilibrium,
        Orbit,
        Unclassified,
    }

    let classify = |p: &ChartedPoint| -> Fate {
        for (i, trap) in probe.traps.iter().enumerate() {
            if trap.region.contains(p) {
                return Fate::Trap(i);
            }
        }
        for e in &equilibria {
            if p.chart == e.point.chart
                && sys.atlas().distance(p.chart, &p.coords, &e.point.coords) < EQ_PROXIMITY
            {
                return Fate::Equilibrium;
            }
        }
        for samples in &orbit_samples {
            let near = samples.iter().any(|s| {
                s.chart == p.chart
                    && sys.atlas().distance(p.chart, &p.coords, &s.coords) < ORBIT_PROXIMITY
            });
            if near {
                return Fate::Orbit;
            }
        }
        Fate::Unclassified
    };

    let fates = exec::map_indexed(n_samples, |i| -> Result<Fate> {
        let mut rng = exec::job_rng(seed, i);
        let start = sys.sample_point(&mut rng);
        let mut eng = Engine::new(sys, &start, step)?;
        eng.collect_events = false;
        let mut t = 0.0;
        let mut fate = classify(&eng.point());
        // A start inside a forward-invariant trap is already classified.
        if let Fate::Trap(_) = fate {
            return Ok(fate);
        }
        while t < horizon {
            let dt = 1.0f64.min(horizon - t);
            eng.advance(dt)?;
            t = eng.t;
            fate = classify(&eng.point());
            if let Fate::Trap(_) = fate {
                return Ok(fate);
            }
        }
        Ok(fate)
    });

    let mut trap_hits = vec![0usize; probe.traps.len()];
    let mut to_eq = 0;
    let mut to_orbit = 0;
    let mut unclassified = 0;
    for f in fates {
        match f? {
            Fate::Trap(i) => trap_hits[i] += 1,
            Fate::Equilibrium => to_eq += 1,
            Fate::Orbit => to_orbit += 1,
            Fate::Unclassified => unclassified += 1,
        }
    }

    let known_equilibria = probe
        .known_equilibria
        .iter()
        .map(|(name, eigs)| (name.clone(), classify_equilibrium(eigs, 1e-6)))
        .collect();

    Ok(CensusReport {
        equilibria,
        known_equilibria,
        orbits,
        traps: probe
            .traps
            .iter()
            .zip(trap_hits)
            .map(|(t, hits)| CensusTrapEntry {
                name: t.name.clone(),
                attractor: t.attractor,
                hits,
            })
            .collect(),
        samples: n_samples,
        to_equilibria: to_eq,
        to_orbits: to_orbit,
        unclassified,
        unclassified_fraction: unclassified as f64 / n_samples.max(1) as f64,
    })
}
