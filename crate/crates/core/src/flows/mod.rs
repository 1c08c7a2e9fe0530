//! Evaluable dynamical systems: maps with derivatives, and vector fields on
//! charted manifolds with hybrid seam events and chart handoffs.

pub mod extension;
pub mod glue;
pub mod gradient;
pub mod lemma1;
pub mod suspension;

use rand_chacha::ChaCha8Rng;

use crate::charts::{Atlas, ChartId, ChartedPoint, Coords};
use crate::error::{CoreError, Result};
use crate::maps::{AnosovMap, DaMap, PlykinMap};

pub use extension::{extend_to_next_sphere, ExtendedFlow};
pub use glue::{
    excise_repelling_orbit, glue_flows, surgery_compatibility, theorem1_assembly, AssemblyParams,
    CollarGeometry, CompatibilityReport, GlueDescriptor, GluedFlow, RestrictedSuspension,
};
pub use gradient::{gradient_sphere_flow, GradientSphereFlow};
pub use lemma1::{lemma1_field, Lemma1Flow};
pub use suspension::{suspension_flow, SuspensionFlow};

/// Hybrid event surface of a chart: the coordinate `coord` crossing `value`
/// in the given direction triggers the seam jump.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeamSpec {
    pub coord: usize,
    pub value: f64,
    pub upward: bool,
}

impl SeamSpec {
    pub fn crossed(&self, y: f64) -> bool {
        if self.upward {
            y >= self.value
        } else {
            y <= self.value
        }
    }
}

/// A vector field on a charted manifold, with enough structure for hybrid
/// integration: per-chart field and derivative, seam events, coordinate
/// reduction, and chart handoffs inside overlaps.
pub trait Flow: Send + Sync {
    fn atlas(&self) -> &Atlas;

    /// Chart new points are born in.
    fn entry_chart(&self) -> ChartId;

    /// Chart-frame field value.
    fn field(&self, chart: ChartId, y: &[f64], out: &mut [f64]) -> Result<()>;

    /// Directional derivative of the field at y in direction v.
    fn field_jac_mul(&self, chart: ChartId, y: &[f64], v: &[f64], out: &mut [f64]) -> Result<()>;

    fn seam(&self, _chart: ChartId) -> Option<SeamSpec> {
        None
    }

    /// The seam jump applied to a point lying on the seam surface.
    fn seam_map(&self, chart: ChartId, _y: &[f64]) -> Result<Coords> {
        Err(CoreError::InvalidInput(format!(
            "chart {chart} has no seam"
        )))
    }

    /// Derivative of the seam jump.
    fn seam_jac_mul(&self, chart: ChartId, _y: &[f64], _v: &[f64]) -> Result<Coords> {
        Err(CoreError::InvalidInput(format!(
            "chart {chart} has no seam"
        )))
    }

    /// Reduce coordinates in place after a step and transform tangent
    /// columns by the reduction derivative (sphere renormalization).
    fn reduce(&self, chart: ChartId, y: &mut [f64], tangents: &mut [Coords]) {
        reduce_with_tangents(self.atlas(), chart, y, tangents);
    }

    /// Target chart when the point has left this chart's zone of authority.
    fn handoff(&self, _chart: ChartId, _y: &[f64]) -> Option<ChartId> {
        None
    }

    fn in_domain(&self, _chart: ChartId, _y: &[f64]) -> bool {
        true
    }

    /// Draw a point from the system's natural domain.
    fn sample_point(&self, rng: &mut ChaCha8Rng) -> ChartedPoint;
}

/// Coordinate reduction plus the exact derivative action of sphere
/// renormalization on tangent columns.
pub(crate) fn reduce_with_tangents(
    atlas: &Atlas,
    chart: ChartId,
    y: &mut [f64],
    tangents: &mut [Coords],
) {
    use crate::charts::BaseChart;
    let nb = chart.base.dim();
    if let BaseChart::Sphere(_) = chart.base {
        let norm = y[..nb].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 && (norm - 1.0).abs() > 1e-300 {
            for v in &mut y[..nb] {
                *v /= norm;
            }
            for col in tangents.iter_mut() {
                let dot: f64 = col[..nb].iter().zip(&y[..nb]).map(|(a, b)| a * b).sum();
                for i in 0..nb {
                    col[i] = (col[i] - dot * y[i]) / norm;
                }
            }
        }
        return;
    }
    let _ = atlas.reduce(chart, y);
}

// ---------------------------------------------------------------------------
// The closed system registry
// ---------------------------------------------------------------------------

/// Discrete-time systems.
#[derive(Clone, Debug)]
pub enum MapSystem {
    Anosov(AnosovMap),
    Da(DaMap),
    Plykin(PlykinMap),
}

/// Continuous-time systems.
#[derive(Clone, Debug)]
pub enum FlowSystem {
    Suspension(SuspensionFlow),
    Restricted(RestrictedSuspension),
    Lemma1(Lemma1Flow),
    Gradient(GradientSphereFlow),
    Extended(ExtendedFlow),
    Glued(GluedFlow),
    Reversed(ReversedFlow),
}

/// A map or a vector field together with its derivative action.
#[derive(Clone, Debug)]
pub enum SmoothSystem {
    Map(MapSystem),
    Flow(FlowSystem),
}

macro_rules! dispatch {
    ($self:ident, $f:ident ( $($arg:expr),* )) => {
        match $self {
            FlowSystem::Suspension(s) => s.$f($($arg),*),
            FlowSystem::Restricted(s) => s.$f($($arg),*),
            FlowSystem::Lemma1(s) => s.$f($($arg),*),
            FlowSystem::Gradient(s) => s.$f($($arg),*),
            FlowSystem::Extended(s) => s.$f($($arg),*),
            FlowSystem::Glued(s) => s.$f($($arg),*),
            FlowSystem::Reversed(s) => s.$f($($arg),*),
        }
    };
}

impl Flow for FlowSystem {
    fn atlas(&self) -> &Atlas {
        dispatch!(self, atlas())
    }
    fn entry_chart(&self) -> ChartId {
        dispatch!(self, entry_chart())
    }
    fn field(&self, chart: ChartId, y: &[f64], out: &mut [f64]) -> Result<()> {
        dispatch!(self, field(chart, y, out))
    }
    fn field_jac_mul(&self, chart: ChartId, y: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        dispatch!(self, field_jac_mul(chart, y, v, out))
    }
    fn seam(&self, chart: ChartId) -> Option<SeamSpec> {
        dispatch!(self, seam(chart))
    }
    fn seam_map(&self, chart: ChartId, y: &[f64]) -> Result<Coords> {
        dispatch!(self, seam_map(chart, y))
    }
    fn seam_jac_mul(&self, chart: ChartId, y: &[f64], v: &[f64]) -> Result<Coords> {
        dispatch!(self, seam_jac_mul(chart, y, v))
    }
    fn reduce(&self, chart: ChartId, y: &mut [f64], tangents: &mut [Coords]) {
        dispatch!(self, reduce(chart, y, tangents))
    }
    fn handoff(&self, chart: ChartId, y: &[f64]) -> Option<ChartId> {
        dispatch!(self, handoff(chart, y))
    }
    fn in_domain(&self, chart: ChartId, y: &[f64]) -> bool {
        dispatch!(self, in_domain(chart, y))
    }
    fn sample_point(&self, rng: &mut ChaCha8Rng) -> ChartedPoint {
        dispatch!(self, sample_point(rng))
    }
}

impl FlowSystem {
    pub fn dim(&self, chart: ChartId) -> usize {
        chart.dim()
    }

    /// Default probe data: where analyses should look for equilibria and
    /// periodic orbits, and which regions classify the census.
    pub fn probe(&self) -> glue::SystemProbe {
        use crate::charts::ChartedPoint;
        use crate::orbit::Section;
        use crate::surfaces::{NamedRegion, RegionTest};
        let mut probe = glue::SystemProbe::default();
        match self {
            FlowSystem::Suspension(s) => {
                let chart = s.chart();
                match s.map() {
                    crate::maps::CoverMap::Anosov(_) => {
                        probe.orbit_seeds.push((
                            ChartedPoint::new(chart, &[0.001, 0.002, 0.0]),
                            Section::Seam { chart },
                        ));
                    }
                    crate::maps::CoverMap::Da(da) => {
                        let vs = da.stable_direction();
                        let off = da.saddle_offset();
                        for c in &da.cfg().centers {
                            probe.orbit_seeds.push((
                                ChartedPoint::new(chart, &[c.x() + 0.002, c.y() - 0.001, 0.0]),
                                Section::Seam { chart },
                            ));
                            if off.is_finite() {
                                probe.orbit_seeds.push((
                                    ChartedPoint::new(
                                        chart,
                                        &[c.x() + off * vs[0], c.y() + off * vs[1], 0.0],
                                    ),
                                    Section::Seam { chart },
                                ));
                            }
                        }
                        let c0 = da.cfg().centers[0];
                        probe.traps.push(NamedRegion {
                            name: "attractor_trap".into(),
                            region: RegionTest::SuspensionTrap {
                                chart,
                                center: [c0.x(), c0.y()],
                                u_t: glue::default_tube_radius(da),
                                map: s.map().clone(),
                            },
                            attractor: true,
                            surface: None,
                        });
                    }
                }
            }
            FlowSystem::Restricted(r) => {
                let chart = r.suspension().chart();
                if let crate::maps::CoverMap::Da(da) = r.suspension().map() {
                    for c in &da.cfg().centers {
                        let dist = {
                            let excised = r.excised_center();
                            let dx = crate::charts::circle_delta(c.x(), excised[0]);
                            let dy = crate::charts::circle_delta(c.y(), excised[1]);
                            dx.hypot(dy)
                        };
                        if dist > 1e-9 {
                            probe.orbit_seeds.push((
                                ChartedPoint::new(chart, &[c.x() + 0.002, c.y() - 0.001, 0.0]),
                                Section::Seam { chart },
                            ));
                        }
                    }
                }
                probe.traps.push(NamedRegion {
                    name: "attractor_trap".into(),
                    region: r.trap_region(),
                    attractor: true,
                    surface: None,
                });
            }
            FlowSystem::Lemma1(l) => {
                use crate::charts::{Coords, BALL3};
                probe
                    .equilibrium_seeds
                    .push(ChartedPoint::new(BALL3, &[0.05, 0.03, 0.1]));
                probe.orbit_seeds.push((
                    ChartedPoint::new(BALL3, &[1.1, 0.0, 0.1]),
                    Section::Plane {
                        chart: BALL3,
                        point: Coords::from_slice(&[1.0, 0.0, 0.0]),
                        normal: Coords::from_slice(&[0.0, 1.0, 0.0]),
                    },
                ));
                if !l.time_reversed() {
                    probe.traps.push(NamedRegion {
                        name: "orbit_tube".into(),
                        region: RegionTest::TubeInside {
                            chart: BALL3,
                            radius: 0.5,
                        },
                        attractor: true,
                        surface: None,
                    });
                }
            }
            FlowSystem::Gradient(g) => {
                let chart = g.ambient_chart();
                let n = g.n();
                let mut near_north = vec![0.03; n + 1];
                near_north[n] = 1.0;
                let mut near_south = vec![-0.02; n + 1];
                near_south[n] = -1.0;
                probe
                    .equilibrium_seeds
                    .push(ChartedPoint::new(chart, &near_north));
                probe
                    .equilibrium_seeds
                    .push(ChartedPoint::new(chart, &near_south));
                let mut south = vec![0.0; n + 1];
                south[n] = -1.0;
                probe.traps.push(NamedRegion {
                    name: "sink_cap".into(),
                    region: RegionTest::GeodesicCap {
                        chart,
                        center: south,
                        cos_radius: 0.3f64.cos(),
                    },
                    attractor: true,
                    surface: None,
                });
            }
            FlowSystem::Extended(e) => {
                let base = e.base().probe();
                for seed in base.equilibrium_seeds {
                    let mut c = seed.coords;
                    c.push(0.05);
                    probe
                        .equilibrium_seeds
                        .push(ChartedPoint::new(seed.chart.extended(), &c));
                }
                for (seed, section) in base.orbit_seeds {
                    let mut c = seed.coords;
                    c.push(0.0);
                    let lifted = match section {
                        Section::Seam { chart } => Section::Seam {
                            chart: chart.extended(),
                        },
                        Section::Plane {
                            chart,
                            point,
                            normal,
                        } => {
                            let mut pt = point;
                            pt.push(0.0);
                            let mut nm = normal;
                            nm.push(0.0);
                            Section::Plane {
                                chart: chart.extended(),
                                point: pt,
                                normal: nm,
                            }
                        }
                    };
                    probe
                        .orbit_seeds
                        .push((ChartedPoint::new(seed.chart.extended(), &c), lifted));
                }
                for trap in base.traps {
                    probe.traps.push(NamedRegion {
                        name: trap.name,
                        region: RegionTest::Extended {
                            base: Box::new(trap.region),
                            max_lat: 0.1,
                        },
                        attractor: trap.attractor,
                        surface: None,
                    });
                }
                let (n_rate, s_rate) = e.pole_rates();
                let dim = self.atlas().charts()[0].id.dim();
                probe.known_equilibria.push((
                    "north_pole".into(),
                    vec![[n_rate, 0.0]; dim - 1],
                ));
                probe.known_equilibria.push((
                    "south_pole".into(),
                    vec![[s_rate, 0.0]; dim - 1],
                ));
            }
            FlowSystem::Glued(g) => {
                probe = g.probe.clone();
            }
            FlowSystem::Reversed(r) => {
                probe = r.inner.probe();
                probe.traps.clear();
            }
        }
        probe
    }

    /// The time-reversed system. Fails for suspensions whose map has no
    /// closed-form inverse.
    pub fn reversed(self) -> Result<FlowSystem> {
        match self {
            FlowSystem::Lemma1(l) => Ok(FlowSystem::Lemma1(l.reversed())),
            FlowSystem::Reversed(r) => Ok(*r.inner),
            other => Ok(FlowSystem::Reversed(ReversedFlow {
                inner: Box::new(other),
            })),
        }
    }
}

/// Time reversal of an inner flow: the field is negated and mapping-torus
/// seams run backwards (fiber decreasing through 0, jumping to 1 under the
/// inverse map).
#[derive(Clone, Debug)]
pub struct ReversedFlow {
    pub inner: Box<FlowSystem>,
}

impl Flow for ReversedFlow {
    fn atlas(&self) -> &Atlas {
        self.inner.atlas()
    }
    fn entry_chart(&self) -> ChartId {
        self.inner.entry_chart()
    }
    fn field(&self, chart: ChartId, y: &[f64], out: &mut [f64]) -> Result<()> {
        self.inner.field(chart, y, out)?;
        for v in out.iter_mut() {
            *v = -*v;
        }
        Ok(())
    }
    fn field_jac_mul(&self, chart: ChartId, y: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        self.inner.field_jac_mul(chart, y, v, out)?;
        for o in out.iter_mut() {
            *o = -*o;
        }
        Ok(())
    }
    fn seam(&self, chart: ChartId) -> Option<SeamSpec> {
        self.inner.seam(chart).map(|s| SeamSpec {
            coord: s.coord,
            value: if s.upward { 0.0 } else { 1.0 },
            upward: !s.upward,
        })
    }
    fn seam_map(&self, chart: ChartId, y: &[f64]) -> Result<Coords> {
        match self.inner.as_ref() {
            FlowSystem::Suspension(s) => s.seam_map_inverse(chart, y),
            FlowSystem::Restricted(r) => r.suspension().seam_map_inverse(chart, y),
            _ => Err(CoreError::InvalidInput(format!(
                "chart {chart} has no reversible seam"
            ))),
        }
    }
    fn seam_jac_mul(&self, chart: ChartId, y: &[f64], v: &[f64]) -> Result<Coords> {
        match self.inner.as_ref() {
            FlowSystem::Suspension(s) => s.seam_jac_mul_inverse(chart, y, v),
            FlowSystem::Restricted(r) => r.suspension().seam_jac_mul_inverse(chart, y, v),
            _ => Err(CoreError::InvalidInput(format!(
                "chart {chart} has no reversible seam"
            ))),
        }
    }
    fn reduce(&self, chart: ChartId, y: &mut [f64], tangents: &mut [Coords]) {
        self.inner.reduce(chart, y, tangents)
    }
    fn handoff(&self, chart: ChartId, y: &[f64]) -> Option<ChartId> {
        self.inner.handoff(chart, y)
    }
    fn in_domain(&self, chart: ChartId, y: &[f64]) -> bool {
        self.inner.in_domain(chart, y)
    }
    fn sample_point(&self, rng: &mut ChaCha8Rng) -> ChartedPoint {
        self.inner.sample_point(rng)
    }
}
