//! Surgery machinery: excising the tube of a repelling orbit from a
//! suspension (leaving the trapped region with a transversal boundary),
//! checking that two flows can be glued across a common boundary, blending
//! them over a collar, and the full surgered construction on the 3-sphere.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::charts::{
    torus_reduce, Atlas, Chart, ChartId, ChartedPoint, Coords, SolidTorusTransition, BALL3,
    PLYKIN_P, S3_CAP,
};
use crate::error::{CoreError, Result};
use crate::flows::gradient::GradientSphereFlow;
use crate::flows::lemma1::Lemma1Flow;
use crate::flows::suspension::SuspensionFlow;
use crate::flows::{Flow, FlowSystem, SeamSpec};
use crate::maps::{CoverMap, DaConfig, PlykinMap};
use crate::orbit::{PeriodicOrbitResult, Section, Stability};
use crate::surfaces::{
    origin_sphere_surface, suspension_trap_value, unit_circle_tube_surface, NamedRegion,
    RegionTest, Topology, TrapSurface,
};

// ---------------------------------------------------------------------------
// Excision of a repelling orbit's tube
// ---------------------------------------------------------------------------

/// Suspension restricted to the trapped region outside the excised tube of
/// a repelling orbit.
#[derive(Clone, Debug)]
pub struct RestrictedSuspension {
    susp: SuspensionFlow,
    center: [f64; 2],
    u_t: f64,
    margins: ExcisionMargins,
}

#[derive(Clone, Copy, Debug)]
pub struct ExcisionMargins {
    /// Smallest squared-offset expansion ratio minus one over the tube.
    pub expansion: f64,
    /// Smallest inward component of the field across the boundary samples.
    pub transversality: f64,
}

impl RestrictedSuspension {
    pub fn suspension(&self) -> &SuspensionFlow {
        &self.susp
    }

    pub fn excised_center(&self) -> [f64; 2] {
        self.center
    }

    pub fn tube_radius(&self) -> f64 {
        self.u_t
    }

    pub fn margins(&self) -> ExcisionMargins {
        self.margins
    }

    /// Trap function: below 1 inside the excised tube, at least 1 on the
    /// trapped side.
    pub fn trap_value(&self, y: &[f64]) -> f64 {
        suspension_trap_value(y, &self.center, self.u_t, self.susp.map())
    }

    pub fn trap_region(&self) -> RegionTest {
        RegionTest::SuspensionTrap {
            chart: self.susp.chart(),
            center: self.center,
            u_t: self.u_t,
            map: self.susp.map().clone(),
        }
    }
}

impl Flow for RestrictedSuspension {
    fn atlas(&self) -> &Atlas {
        self.susp.atlas()
    }
    fn entry_chart(&self) -> ChartId {
        self.susp.entry_chart()
    }
    fn field(&self, chart: ChartId, y: &[f64], out: &mut [f64]) -> Result<()> {
        self.susp.field(chart, y, out)
    }
    fn field_jac_mul(&self, chart: ChartId, y: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        self.susp.field_jac_mul(chart, y, v, out)
    }
    fn seam(&self, chart: ChartId) -> Option<SeamSpec> {
        self.susp.seam(chart)
    }
    fn seam_map(&self, chart: ChartId, y: &[f64]) -> Result<Coords> {
        self.susp.seam_map(chart, y)
    }
    fn seam_jac_mul(&self, chart: ChartId, y: &[f64], v: &[f64]) -> Result<Coords> {
        self.susp.seam_jac_mul(chart, y, v)
    }
    fn in_domain(&self, _chart: ChartId, y: &[f64]) -> bool {
        // Pad below the boundary so RK4 stage evaluations stay legal.
        self.trap_value(y) >= 0.81
    }
    fn sample_point(&self, rng: &mut ChaCha8Rng) -> ChartedPoint {
        loop {
            let p = self.susp.sample_point(rng);
            if self.trap_value(&p.coords) >= 1.05 {
                return p;
            }
        }
    }
}

/// Excise the tube of a repelling periodic orbit from a suspension flow.
///
/// The tube boundary interpolates the squared base offset at the entry
/// section with its image under the map at the exit section, so the seam
/// identification carries the boundary onto itself exactly and the vertical
/// flow crosses it transversally outward. Validation rejects tubes that are
/// too large: the map must expand the offset everywhere inside.
pub fn excise_repelling_orbit(
    susp: &SuspensionFlow,
    orbit: &PeriodicOrbitResult,
    tube_radius: f64,
) -> Result<(RestrictedSuspension, TrapSurface)> {
    if orbit.stability != Stability::Repelling {
        return Err(CoreError::Excision(format!(
            "orbit is {:?}, only repelling orbits can be excised",
            orbit.stability
        )));
    }
    if orbit.representative.chart != susp.chart() {
        return Err(CoreError::Excision("orbit lives in a different chart".into()));
    }
    if !(tube_radius > 0.0 && tube_radius < 0.25) {
        return Err(CoreError::Excision(format!(
            "tube radius {tube_radius} out of range"
        )));
    }
    let center_pt = torus_reduce([
        orbit.representative.coords[0],
        orbit.representative.coords[1],
    ])?;
    let img = susp.map().apply(&center_pt);
    if img.dist(&center_pt) > 1e-9 {
        return Err(CoreError::Excision(
            "orbit base point is not fixed by the map; only source orbits over fixed points are supported".into(),
        ));
    }
    let center = [center_pt.x(), center_pt.y()];

    // Expansion validation over the closed tube: |f(p) - c| > |p - c|.
    let mut expansion = f64::INFINITY;
    let n_r = 40;
    let n_a = 120;
    for i in 0..n_r {
        let r = tube_radius * ((i as f64 + 0.5) / n_r as f64).sqrt();
        for j in 0..n_a {
            let ang = std::f64::consts::TAU * (j as f64 + 0.5) / n_a as f64;
            let p = torus_reduce([center[0] + r * ang.cos(), center[1] + r * ang.sin()])?;
            let d = p.delta(&center_pt);
            let w0 = d[0] * d[0] + d[1] * d[1];
            let fi = susp.map().apply(&p).delta(&center_pt);
            let w1 = fi[0] * fi[0] + fi[1] * fi[1];
            let ratio = w1 / w0 - 1.0;
            if ratio <= 0.0 {
                return Err(CoreError::Excision(format!(
                    "tube radius {tube_radius} too large: offset contracts at base point \
                     ({:.6}, {:.6}), ratio {:.4}",
                    p.x(),
                    p.y(),
                    w1 / w0
                )));
            }
            expansion = expansion.min(ratio);
        }
    }

    // Boundary surface: for each fiber height and ray angle, solve the
    // radial position of the level set, then attach the analytic gradient.
    let n_s = 50;
    let n_theta = 200;
    let mut samples = Vec::with_capacity(n_s * n_theta);
    let mut transversality = f64::INFINITY;
    let chart = susp.chart();
    for i in 0..n_s {
        let s = (i as f64 + 0.5) / n_s as f64;
        for j in 0..n_theta {
            let ang = std::f64::consts::TAU * (j as f64 + 0.5) / n_theta as f64;
            let e = [ang.cos(), ang.sin()];
            let mut lo = 0.0f64;
            let mut hi = tube_radius;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let y = [center[0] + mid * e[0], center[1] + mid * e[1], s];
                if suspension_trap_value(&y, &center, tube_radius, susp.map()) >= 1.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let r = 0.5 * (lo + hi);
            let y = [center[0] + r * e[0], center[1] + r * e[1], s];
            let p = torus_reduce([y[0], y[1]])?;
            let d = p.delta(&center_pt);
            let w0 = d[0] * d[0] + d[1] * d[1];
            let fi = susp.map().apply(&p).delta(&center_pt);
            let w1 = fi[0] * fi[0] + fi[1] * fi[1];
            // grad V: base part 2[(1-s) d + s J^T (f(p)-c)] / u^2, fiber part
            // (w1 - w0)/u^2.
            let jm = susp.map().jacobian(&p);
            let jt_fi = [
                jm[0][0] * fi[0] + jm[1][0] * fi[1],
                jm[0][1] * fi[0] + jm[1][1] * fi[1],
            ];
            let u2 = tube_radius * tube_radius;
            let g = [
                2.0 * ((1.0 - s) * d[0] + s * jt_fi[0]) / u2,
                2.0 * ((1.0 - s) * d[1] + s * jt_fi[1]) / u2,
                (w1 - w0) / u2,
            ];
            let gn = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
            // Outward normal of the trapped region points down the gradient.
            let n = Coords::from_slice(&[-g[0] / gn, -g[1] / gn, -g[2] / gn]);
            // Vertical field (0,0,1): inward margin is g_s / |g|.
            let inward = g[2] / gn;
            if inward <= 0.0 {
                return Err(CoreError::Excision(format!(
                    "boundary transversality fails at s = {s:.3}, angle {ang:.3}: margin {inward:.3e}"
                )));
            }
            transversality = transversality.min(inward);
            samples.push((ChartedPoint::new(chart, &y), n));
        }
    }

    let surface = TrapSurface {
        chart,
        topology: Topology::Torus,
        samples,
    };
    let restricted = RestrictedSuspension {
        susp: susp.clone(),
        center,
        u_t: tube_radius,
        margins: ExcisionMargins {
            expansion,
            transversality,
        },
    };
    Ok((restricted, surface))
}

/// Analytic periodic-orbit record for the suspension of a fixed source.
pub fn suspension_source_orbit(
    susp: &SuspensionFlow,
    center: [f64; 2],
) -> Result<PeriodicOrbitResult> {
    let c = torus_reduce(center)?;
    let img = susp.map().apply(&c);
    if img.dist(&c) > 1e-9 {
        return Err(CoreError::InvalidInput(format!(
            "({}, {}) is not a fixed point of the suspension map",
            c.x(),
            c.y()
        )));
    }
    let j = susp.map().jacobian(&c);
    let multipliers = crate::orbit::finders::eigen2(j).to_vec();
    let stability = PeriodicOrbitResult::classify(&multipliers);
    let chart = susp.chart();
    let samples: Vec<ChartedPoint> = (0..32)
        .map(|k| ChartedPoint::new(chart, &[c.x(), c.y(), k as f64 / 32.0]))
        .collect();
    Ok(PeriodicOrbitResult {
        representative: ChartedPoint::new(chart, &[c.x(), c.y(), 0.0]),
        period: 1.0,
        multipliers,
        stability,
        closure_error: 0.0,
        samples,
    })
}

// ---------------------------------------------------------------------------
// Glue descriptors and compatibility
// ---------------------------------------------------------------------------

/// Boundary data of a surgery. Both surfaces carry outward normals of the
/// region that matters on their side: the compact piece excised from the
/// outer system, and the piece of the inner system that is kept. The glue
/// is admissible when each flow crosses its own boundary against those
/// normals (the outer flow leaves its remainder, the inner flow enters its
/// kept piece).
#[derive(Clone, Debug)]
pub struct GlueDescriptor {
    pub outer_boundary: TrapSurface,
    pub inner_boundary: TrapSurface,
    pub collar_width: f64,
}

#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct CompatibilityReport {
    pub topology_ok: bool,
    /// min over outer samples of -(field . outward normal); positive means
    /// the outer flow crosses into the excised piece everywhere.
    pub outer_margin: f64,
    /// min over inner samples of -(field . outward normal); positive means
    /// the inner flow crosses into the kept piece everywhere.
    pub inner_margin: f64,
    pub compatible: bool,
}

fn boundary_margin(sys: &FlowSystem, surface: &TrapSurface) -> Result<f64> {
    let mut margin = f64::INFINITY;
    for (p, n) in &surface.samples {
        let mut f = Coords::zeros(p.chart.dim());
        sys.field(p.chart, &p.coords, &mut f)?;
        let dot: f64 = f.iter().zip(n.iter()).map(|(a, b)| a * b).sum();
        margin = margin.min(-dot);
    }
    Ok(margin)
}

/// Check that `outer` and `inner` can be glued along the descriptor's
/// boundaries: matching topology and strict transversal crossing in the
/// direction that hands the flow from the outer system to the inner one.
/// Failure is a report outcome, not an error.
pub fn surgery_compatibility(
    outer: &FlowSystem,
    inner: &FlowSystem,
    desc: &GlueDescriptor,
) -> Result<CompatibilityReport> {
    let topology_ok = desc.outer_boundary.topology == desc.inner_boundary.topology;
    let outer_margin = boundary_margin(outer, &desc.outer_boundary)?;
    let inner_margin = boundary_margin(inner, &desc.inner_boundary)?;
    Ok(CompatibilityReport {
        topology_ok,
        outer_margin,
        inner_margin,
        compatible: topology_ok && outer_margin > 0.0 && inner_margin > 0.0,
    })
}

// ---------------------------------------------------------------------------
// Glued flows
// ---------------------------------------------------------------------------

/// Geometry of the collar identification between the two systems.
#[derive(Clone, Debug)]
pub enum CollarGeometry {
    /// Both systems share the collar chart's coordinates; blend over the
    /// radial shell r in [r_in, r_out] about the chart origin. The inner
    /// system may name the same coordinates by a different chart id.
    RadialShell {
        chart: ChartId,
        inner_chart: ChartId,
        r_in: f64,
        r_out: f64,
    },
    /// Solid-torus surgery: a tube around the planar unit circle of the
    /// outer (Cartesian) chart is identified with the collar of the trapped
    /// region in the inner mapping-torus chart.
    TubeSurgery {
        transition: SolidTorusTransition,
        inner_chart: ChartId,
    },
}

#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct GlueReport {
    pub compat: CompatibilityReport,
    /// Smallest field norm over a collar grid: no equilibria were created.
    pub collar_min_norm: f64,
}

/// Probe data analyses use to interrogate a system: where to look for
/// equilibria and orbits, and which regions classify the census.
#[derive(Clone, Debug, Default)]
pub struct SystemProbe {
    pub equilibrium_seeds: Vec<ChartedPoint>,
    pub orbit_seeds: Vec<(ChartedPoint, Section)>,
    pub traps: Vec<NamedRegion>,
    /// Equilibria known analytically but not representable in any chart
    /// (the poles of a latitude extension), with their linearization.
    pub known_equilibria: Vec<(String, Vec<[f64; 2]>)>,
}

/// Two flows blended over a collar: the outer system outside, the inner
/// system inside, one smooth field in between with no new equilibria.
#[derive(Clone, Debug)]
pub struct GluedFlow {
    outer: Box<FlowSystem>,
    inner: Box<FlowSystem>,
    desc: GlueDescriptor,
    geometry: CollarGeometry,
    atlas: Atlas,
    report: GlueReport,
    pub(crate) probe: SystemProbe,
}

impl GluedFlow {
    pub fn outer(&self) -> &FlowSystem {
        &self.outer
    }

    pub fn inner(&self) -> &FlowSystem {
        &self.inner
    }

    pub fn report(&self) -> GlueReport {
        self.report
    }

    pub fn descriptor(&self) -> &GlueDescriptor {
        &self.desc
    }

    pub fn geometry(&self) -> &CollarGeometry {
        &self.geometry
    }

    /// Re-run the compatibility check on the stored descriptor.
    pub fn recheck(&self) -> Result<CompatibilityReport> {
        surgery_compatibility(&self.outer, &self.inner, &self.desc)
    }

    fn blend_field(&self, chart: ChartId, y: &[f64], out: &mut [f64]) -> Result<()> {
        match &self.geometry {
            CollarGeometry::RadialShell {
                chart: gc,
                inner_chart,
                r_in,
                r_out,
            } => {
                if chart != *gc {
                    return self.outer.field(chart, y, out);
                }
                let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                if r >= *r_out {
                    return self.outer.field(chart, y, out);
                }
                if r <= *r_in {
                    return self.inner.field(*inner_chart, y, out);
                }
                let alpha = crate::charts::smoothstep((*r_out - r) / (*r_out - *r_in));
                let dim = chart.dim();
                let mut fo = Coords::zeros(dim);
                let mut fi = Coords::zeros(dim);
                self.outer.field(chart, y, &mut fo)?;
                self.inner.field(*inner_chart, y, &mut fi)?;
                for i in 0..dim {
                    out[i] = (1.0 - alpha) * fo[i] + alpha * fi[i];
                }
                Ok(())
            }
            CollarGeometry::TubeSurgery {
                transition: t,
                inner_chart,
            } => {
                if chart == t.tube_chart {
                    let u = t.tube_u(y);
                    if u >= t.u_inner + t.u_width {
                        return self.inner.field(*inner_chart, y, out);
                    }
                    let alpha = t.blend_from_u(u);
                    let dim = chart.dim();
                    let mut fi = Coords::zeros(dim);
                    self.inner.field(*inner_chart, y, &mut fi)?;
                    // Pull the outer field through the surgery map.
                    let q = t.tube_to_cap(y)?;
                    let mut fo_cap = Coords::zeros(t.cap_chart.dim());
                    self.outer.field(t.cap_chart, &q, &mut fo_cap)?;
                    let fo = self
                        .atlas
                        .transition_jac_mul(t.cap_chart, &q, t.tube_chart, &fo_cap)?;
                    for i in 0..dim {
                        out[i] = alpha * fi[i] + (1.0 - alpha) * fo[i];
                    }
                    return Ok(());
                }
                if chart == t.cap_chart {
                    let r = t.cap_tube_radius(y);
                    if r >= t.r_outer {
                        return self.outer.field(chart, y, out);
                    }
                    let alpha = t.blend_from_r(r);
                    let dim = chart.dim();
                    let mut fo = Coords::zeros(dim);
                    self.outer.field(chart, y, &mut fo)?;
                    let p = t.cap_to_tube(y)?;
                    let mut fi_tube = Coords::zeros(t.tube_chart.dim());
                    self.inner.field(*inner_chart, &p, &mut fi_tube)?;
                    let fi = self
                        .atlas
                        .transition_jac_mul(t.tube_chart, &p, t.cap_chart, &fi_tube)?;
                    for i in 0..dim {
                        out[i] = alpha * fi[i] + (1.0 - alpha) * fo[i];
                    }
                    return Ok(());
                }
                self.outer.field(chart, y, out)
            }
        }
    }

    fn in_blend_zone(&self, chart: ChartId, y: &[f64]) -> bool {
        match &self.geometry {
            CollarGeometry::RadialShell {
                chart: gc,
                r_in,
                r_out,
                ..
            } => {
                if chart != *gc {
                    return false;
                }
                let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                r > *r_in && r < *r_out
            }
            CollarGeometry::TubeSurgery { transition: t, .. } => {
                if chart == t.tube_chart {
                    t.tube_u(y) < t.u_inner + t.u_width
                } else if chart == t.cap_chart {
                    t.cap_tube_radius(y) < t.r_outer
                } else {
                    false
                }
            }
        }
    }
}

impl Flow for GluedFlow {
    fn atlas(&self) -> &Atlas {
        &self.atlas
    }

    fn entry_chart(&self) -> ChartId {
        self.outer.entry_chart()
    }

    fn field(&self, chart: ChartId, y: &[f64], out: &mut [f64]) -> Result<()> {
        self.blend_field(chart, y, out)
    }

    fn field_jac_mul(&self, chart: ChartId, y: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        // Exact derivatives in the pure zones; 4th-order finite differences
        // of the blended field inside the collar.
        if !self.in_blend_zone(chart, y) {
            match &self.geometry {
                CollarGeometry::RadialShell {
                    chart: gc,
                    inner_chart,
                    r_in,
                    ..
                } => {
                    if chart == *gc {
                        let r = y.iter().map(|a| a * a).sum::<f64>().sqrt();
                        if r <= *r_in {
                            return self.inner.field_jac_mul(*inner_chart, y, v, out);
                        }
                    }
                    return self.outer.field_jac_mul(chart, y, v, out);
                }
                CollarGeometry::TubeSurgery {
                    transition: t,
                    inner_chart,
                } => {
                    if chart == t.tube_chart {
                        return self.inner.field_jac_mul(*inner_chart, y, v, out);
                    }
                    return self.outer.field_jac_mul(chart, y, v, out);
                }
            }
        }
        let dim = chart.dim();
        let vn = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if vn == 0.0 {
            out[..dim].fill(0.0);
            return Ok(());
        }
        let h = 1e-5;
        let eval = |t: f64| -> Result<Coords> {
            let mut q = Coords::from_slice(y);
            for i in 0..dim {
                q[i] += t * v[i] / vn;
            }
            let mut f = Coords::zeros(dim);
            self.blend_field(chart, &q, &mut f)?;
            Ok(f)
        };
        let p1 = eval(h)?;
        let m1 = eval(-h)?;
        let p2 = eval(2.0 * h)?;
        let m2 = eval(-2.0 * h)?;
        for i in 0..dim {
            out[i] = (8.0 * (p1[i] - m1[i]) - (p2[i] - m2[i])) / (12.0 * h) * vn;
        }
        Ok(())
    }

    fn seam(&self, chart: ChartId) -> Option<SeamSpec> {
        match &self.geometry {
            CollarGeometry::TubeSurgery { transition: t, .. } if chart == t.tube_chart => {
                self.inner.seam(match &self.geometry {
                    CollarGeometry::TubeSurgery { inner_chart, .. } => *inner_chart,
                    _ => unreachable!(),
                })
            }
            _ => self.outer.seam(chart),
        }
    }

    fn seam_map(&self, chart: ChartId, y: &[f64]) -> Result<Coords> {
        match &self.geometry {
            CollarGeometry::TubeSurgery {
                transition: t,
                inner_chart,
            } if chart == t.tube_chart => self.inner.seam_map(*inner_chart, y),
            _ => self.outer.seam_map(chart, y),
        }
    }

    fn seam_jac_mul(&self, chart: ChartId, y: &[f64], v: &[f64]) -> Result<Coords> {
        match &self.geometry {
            CollarGeometry::TubeSurgery {
                transition: t,
                inner_chart,
            } if chart == t.tube_chart => self.inner.seam_jac_mul(*inner_chart, y, v),
            _ => self.outer.seam_jac_mul(chart, y, v),
        }
    }

    fn handoff(&self, chart: ChartId, y: &[f64]) -> Option<ChartId> {
        if let CollarGeometry::TubeSurgery { transition: t, .. } = &self.geometry {
            if chart == t.cap_chart {
                let r = t.cap_tube_radius(y);
                if r < 0.5 * (t.r_inner + t.r_outer) {
                    return Some(t.tube_chart);
                }
            }
        }
        self.outer.handoff(chart, y)
    }

    fn in_domain(&self, chart: ChartId, y: &[f64]) -> bool {
        match &self.geometry {
            CollarGeometry::RadialShell { chart: gc, .. } => {
                if chart == *gc {
                    return self.outer.in_domain(chart, y);
                }
                self.outer.in_domain(chart, y)
            }
            CollarGeometry::TubeSurgery { transition: t, .. } => {
                if chart == t.tube_chart {
                    return t.tube_u(y) >= 0.8 * t.u_inner;
                }
                if chart == t.cap_chart && t.cap_tube_radius(y) < 0.9 * t.r_inner {
                    return false;
                }
                self.outer.in_domain(chart, y)
            }
        }
    }

    fn sample_point(&self, rng: &mut ChaCha8Rng) -> ChartedPoint {
        match &self.geometry {
            CollarGeometry::RadialShell { .. } => self.outer.sample_point(rng),
            CollarGeometry::TubeSurgery { transition: t, .. } => {
                if rng.gen_bool(0.5) {
                    // Outer side, rejecting the excised tube interior.
                    loop {
                        let p = self.outer.sample_point(rng);
                        if p.chart == t.cap_chart
                            && t.cap_tube_radius(&p.coords) < 0.5 * (t.r_inner + t.r_outer)
                        {
                            continue;
                        }
                        return p;
                    }
                } else {
                    // Trapped region of the inner chart, past the collar.
                    loop {
                        let y = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
                        if t.tube_u(&y) >= t.u_inner + t.u_width {
                            return ChartedPoint::new(t.tube_chart, &y);
                        }
                    }
                }
            }
        }
    }
}

/// Blend two flows across a collar. The descriptor must pass
/// [`surgery_compatibility`]; the collar field is then sampled to confirm
/// no equilibria were created.
pub fn glue_flows(
    outer: FlowSystem,
    inner: FlowSystem,
    desc: GlueDescriptor,
    geometry: CollarGeometry,
) -> Result<FlowSystem> {
    let compat = surgery_compatibility(&outer, &inner, &desc)?;
    if !compat.compatible {
        return Err(CoreError::Gluing(format!(
            "incompatible boundaries: topology_ok={}, outer_margin={:.4e}, inner_margin={:.4e} \
             (both margins must be positive: the flow must leave the outer region and enter the inner one)",
            compat.topology_ok, compat.outer_margin, compat.inner_margin
        )));
    }

    // Assemble the atlas: outer charts plus the inner collar chart.
    let mut charts: Vec<Chart> = outer.atlas().charts().to_vec();
    let atlas = match &geometry {
        CollarGeometry::RadialShell { .. } => Atlas::new(charts),
        CollarGeometry::TubeSurgery { transition, .. } => {
            if !charts.iter().any(|c| c.id == transition.tube_chart) {
                let mut c = Chart::plain(transition.tube_chart);
                c.quotient = inner
                    .atlas()
                    .charts()
                    .first()
                    .map(|ic| ic.quotient)
                    .unwrap_or(false);
                charts.push(c);
            }
            Atlas::new(charts).with_surgery(*transition)
        }
    };

    let mut glued = GluedFlow {
        outer: Box::new(outer),
        inner: Box::new(inner),
        desc,
        geometry,
        atlas,
        report: GlueReport {
            compat,
            collar_min_norm: f64::NAN,
        },
        probe: SystemProbe::default(),
    };

    // No equilibria inside the collar: sample the blended field norm.
    let min_norm = collar_min_norm(&glued, 10_000)?;
    if min_norm <= 1e-9 {
        return Err(CoreError::Gluing(format!(
            "blended collar field vanishes (min norm {min_norm:.3e})"
        )));
    }
    glued.report.collar_min_norm = min_norm;
    Ok(FlowSystem::Glued(glued))
}

/// Minimum field norm over a grid of collar points.
pub fn collar_min_norm(glued: &GluedFlow, n: usize) -> Result<f64> {
    let mut min_norm = f64::INFINITY;
    match &glued.geometry {
        CollarGeometry::RadialShell {
            chart,
            r_in,
            r_out,
            ..
        } => {
            let per_shell = (n / 10).max(1);
            for i in 0..10 {
                let r = r_in + (r_out - r_in) * (i as f64 + 0.5) / 10.0;
                let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
                for k in 0..per_shell {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / per_shell as f64;
                    let rho = (1.0 - z * z).sqrt();
                    let phi = std::f64::consts::TAU * (k as f64 / golden).fract();
                    let y = [r * rho * phi.cos(), r * rho * phi.sin(), r * z];
                    let mut f = Coords::zeros(chart.dim());
                    glued.field(*chart, &y, &mut f)?;
                    min_norm = min_norm.min(f.norm());
                }
            }
        }
        CollarGeometry::TubeSurgery { transition: t, .. } => {
            let n_u = 10;
            let per = ((n / n_u) as f64).sqrt().ceil() as usize;
            for i in 0..n_u {
                let u = t.u_inner + t.u_width * (i as f64 + 0.5) / n_u as f64;
                for j in 0..per {
                    let ang = std::f64::consts::TAU * (j as f64 + 0.5) / per as f64;
                    for k in 0..per {
                        let s = (k as f64 + 0.5) / per as f64;
                        let y = [
                            t.center[0] + u * ang.cos(),
                            t.center[1] + u * ang.sin(),
                            s,
                        ];
                        let mut f = Coords::zeros(t.tube_chart.dim());
                        glued.field(t.tube_chart, &y, &mut f)?;
                        min_norm = min_norm.min(f.norm());
                    }
                }
            }
        }
    }
    Ok(min_norm)
}

// ---------------------------------------------------------------------------
// The surgered flow on the 3-sphere
// ---------------------------------------------------------------------------

/// Parameters of the surgered construction. Defaults follow the validated
/// desk-scale geometry.
#[derive(Clone, Debug)]
pub struct AssemblyParams {
    pub da_cfg: DaConfig,
    /// Radius of the excised source tube in the suspension base.
    pub tube_radius: f64,
    /// Lemma-model ball radius (inner edge of the sphere collar).
    pub cap_glue_radius: f64,
    pub cap_collar_width: f64,
    /// Inner radius of the periodic-orbit tube (authority handoff happens
    /// mid-collar) and the collar width to its outer radius.
    pub orbit_tube_radius: f64,
    pub orbit_collar_width: f64,
    /// Collar width on the suspension side of the tube surgery.
    pub tube_collar_width: f64,
    /// Index into the torsion centers of the source to excise.
    pub excised_center: usize,
    /// Samples per boundary surface used by the compatibility checks.
    pub surface_samples: usize,
}

impl Default for AssemblyParams {
    fn default() -> Self {
        AssemblyParams {
            da_cfg: DaConfig::standard_equivariant(),
            tube_radius: 0.0018,
            cap_glue_radius: 2.0,
            cap_collar_width: 0.1,
            orbit_tube_radius: 0.5,
            orbit_collar_width: 0.1,
            tube_collar_width: 0.0005,
            excised_center: 0,
            surface_samples: 10_000,
        }
    }
}

/// Largest comfortably validated excision tube: inside the saddle pair that
/// flanks each source on the stable axis.
pub fn default_tube_radius(da: &crate::maps::DaMap) -> f64 {
    0.6 * da.saddle_offset()
}

/// Build the surgered flow on the 3-sphere: the gradient flow's sink ball
/// is replaced by the periodic-orbit model, whose attracting orbit's tube
/// is in turn replaced by the trapped region of the quotient suspension.
/// The result carries one source, one saddle-type equilibrium, the three
/// remaining repelling orbits, and the trapped attractor.
pub fn theorem1_assembly(params: &AssemblyParams) -> Result<FlowSystem> {
    let grad = GradientSphereFlow::new(3)?.with_cap();
    let lemma = Lemma1Flow::new(false);

    // Sphere collar: gradient flow outside, local model inside.
    let r_in = params.cap_glue_radius;
    let r_out = params.cap_glue_radius + params.cap_collar_width;
    let sphere_samples = (params.surface_samples / 5).max(500);
    let desc_cap = GlueDescriptor {
        outer_boundary: origin_sphere_surface(S3_CAP, r_out, sphere_samples),
        inner_boundary: origin_sphere_surface(BALL3, r_in, sphere_samples),
        collar_width: params.cap_collar_width,
    };
    let geom_cap = CollarGeometry::RadialShell {
        chart: S3_CAP,
        inner_chart: BALL3,
        r_in,
        r_out,
    };
    let cap_glued = glue_flows(
        FlowSystem::Gradient(grad),
        FlowSystem::Lemma1(lemma),
        desc_cap,
        geom_cap,
    )?;

    // Quotient suspension with one source tube excised.
    let plykin = PlykinMap::new(params.da_cfg.clone())?;
    let susp = SuspensionFlow::with_chart(CoverMap::Da(plykin.cover().clone()), true, PLYKIN_P);
    let centers = params.da_cfg.centers.clone();
    let excised = centers
        .get(params.excised_center)
        .ok_or_else(|| CoreError::Config("excised center index out of range".into()))?;
    let orbit = suspension_source_orbit(&susp, [excised.x(), excised.y()])?;
    let (restricted, p_surface) = excise_repelling_orbit(&susp, &orbit, params.tube_radius)?;

    // Torus collar: the attracting orbit's tube is replaced by the trapped
    // region across a solid-torus identification.
    let tube_r_outer = params.orbit_tube_radius + params.orbit_collar_width;
    let n_side = (params.surface_samples as f64).sqrt().ceil() as usize;
    let desc_tube = GlueDescriptor {
        outer_boundary: unit_circle_tube_surface(S3_CAP, tube_r_outer, n_side, n_side),
        inner_boundary: p_surface,
        collar_width: params.orbit_collar_width,
    };
    let transition = SolidTorusTransition {
        cap_chart: S3_CAP,
        tube_chart: PLYKIN_P,
        r_inner: params.orbit_tube_radius,
        r_outer: tube_r_outer,
        u_inner: params.tube_radius,
        u_width: params.tube_collar_width,
        center: [excised.x(), excised.y()],
        pad: 0.1 * params.orbit_collar_width,
    };
    let geom_tube = CollarGeometry::TubeSurgery {
        transition,
        inner_chart: PLYKIN_P,
    };
    let assembly = glue_flows(
        cap_glued,
        FlowSystem::Restricted(restricted.clone()),
        desc_tube,
        geom_tube,
    )?;

    // Probe data: seeds for the finders and the census trap.
    let mut probe = SystemProbe::default();
    let amb = ChartId::new(crate::charts::BaseChart::Sphere(3));
    probe.equilibrium_seeds = vec![
        ChartedPoint::new(amb, &[0.05, -0.03, 0.08, 0.995]),
        ChartedPoint::new(S3_CAP, &[0.04, 0.03, 0.08]),
        ChartedPoint::new(S3_CAP, &[0.3, -0.2, 0.25]),
    ];
    for (i, c) in centers.iter().enumerate() {
        if i == params.excised_center {
            continue;
        }
        probe.orbit_seeds.push((
            ChartedPoint::new(PLYKIN_P, &[c.x() + 0.002, c.y() - 0.001, 0.0]),
            Section::Seam { chart: PLYKIN_P },
        ));
    }
    probe.traps.push(NamedRegion {
        name: "attractor_trap".into(),
        region: RegionTest::OutsideBaseTubes {
            chart: PLYKIN_P,
            centers: vec![[excised.x(), excised.y()]],
            u_min: params.tube_radius + params.tube_collar_width,
        },
        attractor: true,
        surface: Some(desc_tube_surface(&assembly)),
    });

    match assembly {
        FlowSystem::Glued(mut g) => {
            g.probe = probe;
            Ok(FlowSystem::Glued(g))
        }
        other => Ok(other),
    }
}

fn desc_tube_surface(assembly: &FlowSystem) -> TrapSurface {
    match assembly {
        FlowSystem::Glued(g) => g.desc.inner_boundary.clone(),
        _ => unreachable!("assembly is glued"),
    }
}

/// All compatibility reports of a (possibly nested) glued system.
pub fn all_compatibility_reports(sys: &FlowSystem) -> Result<Vec<CompatibilityReport>> {
    let mut out = Vec::new();
    if let FlowSystem::Glued(g) = sys {
        out.extend(all_compatibility_reports(&g.outer)?);
        out.push(g.recheck()?);
    }
    Ok(out)
}
