//! Coordinate representations of the model manifolds and the atlas glue
//! between them.
//!
//! Conventions: the torus is the unit square with wraparound, the quotient
//! sphere is the torus modulo the involution `p -> -p`, mapping-torus charts
//! carry a fiber coordinate `s` in `[0,1)`, and embedded spheres are unit
//! vectors in the ambient space. All types are immutable values.

use std::fmt;
use std::ops::{Deref, DerefMut};

use crate::error::{CoreError, Result};

/// Largest chart dimension used anywhere (ambient S^5 would be 6).
pub const MAX_DIM: usize = 6;

/// Round-trip tolerance for chart transitions.
pub const TRANSITION_TOL: f64 = 1e-10;
/// Unit-norm tolerance for embedded sphere points.
pub const SPHERE_NORM_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Small fixed-capacity coordinate vector
// ---------------------------------------------------------------------------

/// Stack-allocated coordinate vector; the integrator copies these freely.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coords {
    len: usize,
    data: [f64; MAX_DIM],
}

impl Coords {
    pub fn zeros(len: usize) -> Self {
        assert!(len <= MAX_DIM);
        Coords {
            len,
            data: [0.0; MAX_DIM],
        }
    }

    pub fn from_slice(s: &[f64]) -> Self {
        assert!(s.len() <= MAX_DIM);
        let mut c = Coords::zeros(s.len());
        c.data[..s.len()].copy_from_slice(s);
        c
    }

    pub fn push(&mut self, v: f64) {
        assert!(self.len < MAX_DIM);
        self.data[self.len] = v;
        self.len += 1;
    }

    pub fn norm(&self) -> f64 {
        self.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.as_ref().to_vec()
    }
}

impl Deref for Coords {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.data[..self.len]
    }
}

impl DerefMut for Coords {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.data[..self.len]
    }
}

impl AsRef<[f64]> for Coords {
    fn as_ref(&self) -> &[f64] {
        self
    }
}

impl serde::Serialize for Coords {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_seq(self.iter())
    }
}

// ---------------------------------------------------------------------------
// Chart identifiers
// ---------------------------------------------------------------------------

/// Base chart families. `lat` on [`ChartId`] counts how many latitude
/// extensions wrap the base (sphere-extension construction).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum BaseChart {
    /// T^2 with coordinates in [0,1)^2.
    Torus2,
    /// T^2 modulo p ~ -p; coordinates are double-cover representatives.
    SphereQuot,
    /// Mapping torus over T^2: (x, y, s).
    MapTorus,
    /// Mapping torus over the quotient sphere, on the double cover.
    MapTorusQuot,
    /// Cartesian ball in R^3 (local periodic-orbit model).
    Ball3,
    /// Unit sphere S^n embedded in R^{n+1}.
    Sphere(u8),
    /// Stereographic chart of S^n from the north pole.
    SphereNorth(u8),
    /// Stereographic chart of S^n from the south pole.
    SphereSouth(u8),
    /// Stereographic cap chart used by the surgered sphere flow.
    S3Cap,
    /// Quotient mapping-torus chart holding the trapped attractor region.
    PlykinP,
}

impl BaseChart {
    pub fn dim(self) -> usize {
        match self {
            BaseChart::Torus2 | BaseChart::SphereQuot => 2,
            BaseChart::MapTorus | BaseChart::MapTorusQuot => 3,
            BaseChart::Ball3 | BaseChart::S3Cap | BaseChart::PlykinP => 3,
            BaseChart::Sphere(n) => n as usize + 1,
            BaseChart::SphereNorth(n) | BaseChart::SphereSouth(n) => n as usize,
        }
    }

    fn name(self) -> String {
        match self {
            BaseChart::Torus2 => "torus2".into(),
            BaseChart::SphereQuot => "sphere_quot".into(),
            BaseChart::MapTorus => "maptorus".into(),
            BaseChart::MapTorusQuot => "maptorus_quot".into(),
            BaseChart::Ball3 => "ball3".into(),
            BaseChart::Sphere(n) => format!("sphere{n}"),
            BaseChart::SphereNorth(n) => format!("sphere{n}_north"),
            BaseChart::SphereSouth(n) => format!("sphere{n}_south"),
            BaseChart::S3Cap => "s3_cap".into(),
            BaseChart::PlykinP => "plykin_p".into(),
        }
    }
}

/// Identifier of a chart: a base family plus the latitude-extension depth.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct ChartId {
    pub base: BaseChart,
    pub lat: u8,
}

impl ChartId {
    pub const fn new(base: BaseChart) -> Self {
        ChartId { base, lat: 0 }
    }

    pub fn extended(self) -> Self {
        ChartId {
            base: self.base,
            lat: self.lat + 1,
        }
    }

    /// Strip one latitude layer.
    pub fn base_of(self) -> Self {
        assert!(self.lat > 0);
        ChartId {
            base: self.base,
            lat: self.lat - 1,
        }
    }

    pub fn dim(self) -> usize {
        self.base.dim() + self.lat as usize
    }

    pub fn name(self) -> String {
        match self.lat {
            0 => self.base.name(),
            1 => format!("lat:{}", self.base.name()),
            k => format!("lat{k}:{}", self.base.name()),
        }
    }

    pub fn from_name(name: &str) -> Option<ChartId> {
        let (lat, rest) = if let Some(r) = name.strip_prefix("lat:") {
            (1u8, r)
        } else if let Some(r) = name.strip_prefix("lat") {
            if let Some((k, r2)) = r.split_once(':') {
                (k.parse().ok()?, r2)
            } else {
                (0, name)
            }
        } else {
            (0, name)
        };
        let base = match rest {
            "torus2" => BaseChart::Torus2,
            "sphere_quot" => BaseChart::SphereQuot,
            "maptorus" => BaseChart::MapTorus,
            "maptorus_quot" => BaseChart::MapTorusQuot,
            "ball3" => BaseChart::Ball3,
            "s3_cap" => BaseChart::S3Cap,
            "plykin_p" => BaseChart::PlykinP,
            other => {
                let n: u8;
                if let Some(num) = other.strip_prefix("sphere") {
                    if let Some(num) = num.strip_suffix("_north") {
                        n = num.parse().ok()?;
                        return Some(ChartId {
                            base: BaseChart::SphereNorth(n),
                            lat,
                        });
                    } else if let Some(num) = num.strip_suffix("_south") {
                        n = num.parse().ok()?;
                        return Some(ChartId {
                            base: BaseChart::SphereSouth(n),
                            lat,
                        });
                    } else {
                        n = num.parse().ok()?;
                        return Some(ChartId {
                            base: BaseChart::Sphere(n),
                            lat,
                        });
                    }
                }
                return None;
            }
        };
        Some(ChartId { base, lat })
    }
}

impl fmt::Display for ChartId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl serde::Serialize for ChartId {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&self.name())
    }
}

pub const TORUS2: ChartId = ChartId::new(BaseChart::Torus2);
pub const SPHERE_QUOT: ChartId = ChartId::new(BaseChart::SphereQuot);
pub const MAPTORUS: ChartId = ChartId::new(BaseChart::MapTorus);
pub const MAPTORUS_QUOT: ChartId = ChartId::new(BaseChart::MapTorusQuot);
pub const BALL3: ChartId = ChartId::new(BaseChart::Ball3);
pub const S3_CAP: ChartId = ChartId::new(BaseChart::S3Cap);
pub const PLYKIN_P: ChartId = ChartId::new(BaseChart::PlykinP);

pub const fn sphere_chart(n: u8) -> ChartId {
    ChartId::new(BaseChart::Sphere(n))
}

// ---------------------------------------------------------------------------
// Reduction primitives
// ---------------------------------------------------------------------------

/// Reduce one coordinate into [0, 1). Guards against `rem_euclid` returning
/// the modulus for tiny negative inputs and against negative zero.
pub fn reduce_unit(v: f64) -> f64 {
    let r = v.rem_euclid(1.0);
    if r >= 1.0 || r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Signed representative of a - b on the circle, in [-1/2, 1/2).
pub fn circle_delta(a: f64, b: f64) -> f64 {
    let d = a - b;
    let r = reduce_unit(d);
    if r >= 0.5 {
        r - 1.0
    } else {
        r
    }
}

// ---------------------------------------------------------------------------
// Domain point types
// ---------------------------------------------------------------------------

/// Point on T^2 = R^2/Z^2, both coordinates reduced into [0,1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusPoint2 {
    x: f64,
    y: f64,
}

/// Reduce a raw coordinate pair onto the torus.
pub fn torus_reduce(v: [f64; 2]) -> Result<TorusPoint2> {
    if !v[0].is_finite() || !v[1].is_finite() {
        return Err(CoreError::InvalidInput(format!(
            "non-finite torus coordinates ({}, {})",
            v[0], v[1]
        )));
    }
    Ok(TorusPoint2 {
        x: reduce_unit(v[0]),
        y: reduce_unit(v[1]),
    })
}

impl TorusPoint2 {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        torus_reduce([x, y])
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn coords(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    /// The involution image -p, reduced.
    pub fn antipode(&self) -> TorusPoint2 {
        TorusPoint2 {
            x: reduce_unit(-self.x),
            y: reduce_unit(-self.y),
        }
    }

    /// Wrapped displacement self - other, each component in [-1/2, 1/2).
    pub fn delta(&self, other: &TorusPoint2) -> [f64; 2] {
        [
            circle_delta(self.x, other.x),
            circle_delta(self.y, other.y),
        ]
    }

    pub fn dist(&self, other: &TorusPoint2) -> f64 {
        let d = self.delta(other);
        (d[0] * d[0] + d[1] * d[1]).sqrt()
    }

    /// Distance in the quotient metric, min over the involution branch.
    pub fn dist_quotient(&self, other: &TorusPoint2) -> f64 {
        self.dist(other).min(self.dist(&other.antipode()))
    }
}

/// Canonical representative of the pair {p, -p} on the quotient sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphereQuotientPoint {
    rep: TorusPoint2,
}

/// Canonicalize a torus point under the involution.
///
/// Picks the lexicographically smaller of the two reduced representatives.
/// Exactly idempotent: 1 - x is exact for x in [1/2, 1], and the mirrored
/// representative is only chosen on that branch.
pub fn quotient_canonical(p: TorusPoint2) -> SphereQuotientPoint {
    let q = p.antipode();
    let rep = if (q.x, q.y) < (p.x, p.y) { q } else { p };
    SphereQuotientPoint { rep }
}

impl SphereQuotientPoint {
    pub fn rep(&self) -> TorusPoint2 {
        self.rep
    }
}

/// Base of a mapping torus: the torus or the quotient sphere (double cover).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BasePoint {
    Torus(TorusPoint2),
    Quotient(SphereQuotientPoint),
}

impl BasePoint {
    pub fn cover(&self) -> TorusPoint2 {
        match self {
            BasePoint::Torus(p) => *p,
            BasePoint::Quotient(q) => q.rep(),
        }
    }
}

/// Point of a mapping torus: a base point plus a fiber coordinate s in [0,1).
///
/// Advancing s past 1 applies the suspension map to the base; the
/// constructor takes the map so the invariant can be maintained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MappingTorusPoint {
    pub base: BasePoint,
    s: f64,
}

impl MappingTorusPoint {
    pub fn new<F>(base: BasePoint, s: f64, mut seam_map: F) -> Result<Self>
    where
        F: FnMut(TorusPoint2) -> TorusPoint2,
    {
        if !s.is_finite() {
            return Err(CoreError::InvalidInput(format!("non-finite fiber s = {s}")));
        }
        let mut s = s;
        let mut cover = base.cover();
        while s >= 1.0 {
            cover = seam_map(cover);
            s -= 1.0;
        }
        while s < 0.0 {
            s += 1.0;
        }
        let base = match base {
            BasePoint::Torus(_) => BasePoint::Torus(cover),
            BasePoint::Quotient(_) => BasePoint::Quotient(quotient_canonical(cover)),
        };
        Ok(MappingTorusPoint { base, s })
    }

    pub fn s(&self) -> f64 {
        self.s
    }
}

/// Cylinder coordinates (rho, phi, z) of the local periodic-orbit model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CylinderPoint {
    rho: f64,
    phi: f64,
    z: f64,
}

impl CylinderPoint {
    pub fn new(rho: f64, phi: f64, z: f64) -> Result<Self> {
        if !(rho.is_finite() && phi.is_finite() && z.is_finite()) {
            return Err(CoreError::InvalidInput("non-finite cylinder coordinates".into()));
        }
        if rho < 0.0 {
            return Err(CoreError::InvalidInput(format!("negative radius rho = {rho}")));
        }
        let tau = std::f64::consts::TAU;
        let mut phi = phi.rem_euclid(tau);
        if phi >= tau {
            phi = 0.0;
        }
        Ok(CylinderPoint { rho, phi, z })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn to_cartesian(&self) -> [f64; 3] {
        [self.rho * self.phi.cos(), self.rho * self.phi.sin(), self.z]
    }

    pub fn from_cartesian(q: [f64; 3]) -> Result<Self> {
        let rho = q[0].hypot(q[1]);
        let phi = if rho == 0.0 { 0.0 } else { q[1].atan2(q[0]) };
        CylinderPoint::new(rho, phi, q[2])
    }
}

/// Unit vector in R^{n+1} representing a point of S^n.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedSpherePoint {
    coords: Coords,
}

impl EmbeddedSpherePoint {
    pub fn new(raw: &[f64]) -> Result<Self> {
        if raw.len() < 3 || raw.len() > MAX_DIM {
            return Err(CoreError::InvalidInput(format!(
                "sphere point needs 3..={MAX_DIM} ambient coordinates, got {}",
                raw.len()
            )));
        }
        let mut c = Coords::from_slice(raw);
        let n = c.norm();
        if !n.is_finite() || n < 1e-8 {
            return Err(CoreError::InvalidInput("cannot normalize near-zero vector".into()));
        }
        for v in c.iter_mut() {
            *v /= n;
        }
        Ok(EmbeddedSpherePoint { coords: c })
    }

    pub fn coords(&self) -> &Coords {
        &self.coords
    }

    pub fn norm_error(&self) -> f64 {
        (self.coords.norm() - 1.0).abs()
    }
}

/// Typed view of a charted point.
#[derive(Clone, Debug)]
pub enum LocalPoint {
    Torus2(TorusPoint2),
    Quotient(SphereQuotientPoint),
    MapTorus(MappingTorusPoint),
    Cylinder(CylinderPoint),
    Sphere(EmbeddedSpherePoint),
    /// Chart coordinates without a richer interpretation (stereo, latitude).
    Raw(Coords),
}

/// A point given as (chart, local coordinates).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChartedPoint {
    pub chart: ChartId,
    pub coords: Coords,
}

impl ChartedPoint {
    pub fn new(chart: ChartId, coords: &[f64]) -> Self {
        ChartedPoint {
            chart,
            coords: Coords::from_slice(coords),
        }
    }
}

impl serde::Serialize for ChartedPoint {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = ser.serialize_struct("ChartedPoint", 2)?;
        st.serialize_field("chart", &self.chart)?;
        st.serialize_field("coords", &self.coords)?;
        st.end()
    }
}

/// Tangent vector in the chart frame of its base point.
#[derive(Clone, Debug)]
pub struct TangentVector {
    pub at: ChartedPoint,
    pub components: Coords,
}

impl TangentVector {
    pub fn new(at: ChartedPoint, components: &[f64]) -> Result<Self> {
        if components.len() != at.chart.dim() {
            return Err(CoreError::InvalidInput(format!(
                "tangent dimension {} does not match chart {} of dimension {}",
                components.len(),
                at.chart,
                at.chart.dim()
            )));
        }
        Ok(TangentVector {
            at,
            components: Coords::from_slice(components),
        })
    }
}

// ---------------------------------------------------------------------------
// Atlas: chart metadata, reduction, transitions, metrics
// ---------------------------------------------------------------------------

/// Per-chart metadata a system registers in its atlas.
#[derive(Clone, Debug)]
pub struct Chart {
    pub id: ChartId,
    /// Points with coordinates outside this bound are treated as escaped.
    /// Interpreted per chart family (radius for balls/stereo charts).
    pub bound: f64,
    /// Base coordinates carry the p ~ -p identification.
    pub quotient: bool,
}

impl Chart {
    pub fn plain(id: ChartId) -> Self {
        let quotient = matches!(
            id.base,
            BaseChart::SphereQuot | BaseChart::MapTorusQuot | BaseChart::PlykinP
        );
        Chart {
            id,
            bound: f64::INFINITY,
            quotient,
        }
    }

    pub fn bounded(id: ChartId, bound: f64) -> Self {
        Chart {
            bound,
            ..Chart::plain(id)
        }
    }
}

/// Parameters of the solid-torus surgery identification between a Cartesian
/// tube around the planar unit circle and the collar of the trapped region
/// in a quotient mapping-torus chart.
#[derive(Clone, Copy, Debug)]
pub struct SolidTorusTransition {
    pub cap_chart: ChartId,
    pub tube_chart: ChartId,
    /// Tube radii in cap coordinates: the collar is r in [r_inner, r_outer].
    pub r_inner: f64,
    pub r_outer: f64,
    /// Excised-tube radius in the mapping-torus base and collar width.
    pub u_inner: f64,
    pub u_width: f64,
    /// Center of the excised tube in base coordinates.
    pub center: [f64; 2],
    /// Padding factor for evaluating slightly beyond the collar.
    pub pad: f64,
}

impl SolidTorusTransition {
    fn kappa(&self) -> f64 {
        self.u_width / (self.r_outer - self.r_inner)
    }

    /// Tube radius in cap coordinates for a cap point.
    pub fn cap_tube_radius(&self, q: &[f64]) -> f64 {
        let rho = q[0].hypot(q[1]);
        (rho - 1.0).hypot(q[2])
    }

    /// Base-offset radius for a mapping-torus point.
    pub fn tube_u(&self, y: &[f64]) -> f64 {
        let dx = circle_delta(y[0], self.center[0]);
        let dy = circle_delta(y[1], self.center[1]);
        dx.hypot(dy)
    }

    /// Collar blend weight: 0 at the cap-side edge, 1 at the tube-side edge.
    pub fn blend_from_r(&self, r: f64) -> f64 {
        smoothstep((self.r_outer - r) / (self.r_outer - self.r_inner))
    }

    pub fn blend_from_u(&self, u: f64) -> f64 {
        smoothstep((u - self.u_inner) / self.u_width)
    }

    pub fn cap_to_tube(&self, q: &[f64]) -> Result<Coords> {
        let r = self.cap_tube_radius(q);
        let lo = self.r_inner - self.pad;
        let hi = self.r_outer + self.pad;
        if !(lo..=hi).contains(&r) {
            return Err(CoreError::OutOfDomain {
                from: self.cap_chart,
                to: self.tube_chart,
            });
        }
        let rho = q[0].hypot(q[1]);
        let phi = q[1].atan2(q[0]);
        let w1 = rho - 1.0;
        let w2 = q[2];
        let theta = w2.atan2(w1);
        let u = self.u_inner + (self.r_outer - r) * self.kappa();
        let half = 0.5 * theta;
        let bx = reduce_unit(self.center[0] + u * half.cos());
        let by = reduce_unit(self.center[1] + u * half.sin());
        let s = reduce_unit(phi / std::f64::consts::TAU);
        Ok(Coords::from_slice(&[bx, by, s]))
    }

    pub fn tube_to_cap(&self, y: &[f64]) -> Result<Coords> {
        let u = self.tube_u(y);
        let lo = self.u_inner - self.pad * self.kappa();
        let hi = self.u_inner + self.u_width + self.pad * self.kappa();
        if !(lo..=hi).contains(&u) {
            return Err(CoreError::OutOfDomain {
                from: self.tube_chart,
                to: self.cap_chart,
            });
        }
        let dx = circle_delta(y[0], self.center[0]);
        let dy = circle_delta(y[1], self.center[1]);
        let half = dy.atan2(dx);
        let theta = 2.0 * half;
        let r = self.r_outer - (u - self.u_inner) / self.kappa();
        let w1 = r * theta.cos();
        let w2 = r * theta.sin();
        let phi = std::f64::consts::TAU * y[2];
        let rho = 1.0 + w1;
        Ok(Coords::from_slice(&[rho * phi.cos(), rho * phi.sin(), w2]))
    }
}

/// Quintic smoothstep clamped to [0, 1].
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

/// The atlas a system registers: charts plus the transitions between them.
#[derive(Clone, Debug, Default)]
pub struct Atlas {
    charts: Vec<Chart>,
    surgeries: Vec<SolidTorusTransition>,
}

impl Atlas {
    pub fn new(charts: Vec<Chart>) -> Self {
        Atlas {
            charts,
            surgeries: Vec::new(),
        }
    }

    pub fn with_surgery(mut self, t: SolidTorusTransition) -> Self {
        self.surgeries.push(t);
        self
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    pub fn get(&self, id: ChartId) -> Result<&Chart> {
        self.charts
            .iter()
            .find(|c| c.id == id)
            .ok_or(CoreError::UnknownChart { chart: id })
    }

    pub fn contains(&self, id: ChartId) -> bool {
        self.charts.iter().any(|c| c.id == id)
    }

    /// Reduce chart coordinates in place: torus wraps and sphere
    /// renormalization. Mapping-torus fiber seams are events, not
    /// reductions, and are left untouched here.
    pub fn reduce(&self, id: ChartId, y: &mut [f64]) -> Result<()> {
        let chart = self.get(id)?;
        let _ = chart;
        let mut base = id.base;
        let base_dim = base.dim();
        match &mut base {
            BaseChart::Torus2 | BaseChart::SphereQuot => {
                y[0] = reduce_unit(y[0]);
                y[1] = reduce_unit(y[1]);
            }
            BaseChart::MapTorus | BaseChart::MapTorusQuot | BaseChart::PlykinP => {
                y[0] = reduce_unit(y[0]);
                y[1] = reduce_unit(y[1]);
            }
            BaseChart::Sphere(_) => {
                let n = y[..base_dim].iter().map(|v| v * v).sum::<f64>().sqrt();
                if n > 0.0 {
                    for v in &mut y[..base_dim] {
                        *v /= n;
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Express a point in another chart's coordinates.
    pub fn transition(&self, p: &ChartedPoint, target: ChartId) -> Result<ChartedPoint> {
        if !self.contains(p.chart) {
            return Err(CoreError::UnknownChart { chart: p.chart });
        }
        if !self.contains(target) {
            return Err(CoreError::UnknownChart { chart: target });
        }
        if p.chart == target {
            return Ok(*p);
        }
        let out = self.transition_coords(p.chart, &p.coords, target)?;
        Ok(ChartedPoint {
            chart: target,
            coords: out,
        })
    }

    pub fn transition_coords(&self, from: ChartId, y: &[f64], to: ChartId) -> Result<Coords> {
        // Latitude charts delegate on the base block and carry the angle.
        if from.lat > 0 || to.lat > 0 {
            if from.lat != to.lat {
                return Err(CoreError::NoTransition { from, to });
            }
            let nb = from.base.dim();
            let lat = &y[nb..];
            let mut out = self.transition_base(from.base_of(), &y[..nb], to.base_of())?;
            for &l in lat {
                out.push(l);
            }
            return Ok(out);
        }
        self.transition_base(from, y, to)
    }

    fn transition_base(&self, from: ChartId, y: &[f64], to: ChartId) -> Result<Coords> {
        use BaseChart::*;
        match (from.base, to.base) {
            (Sphere(n), SphereNorth(m)) if n == m => stereo_from_ambient(y, true),
            (Sphere(n), SphereSouth(m)) if n == m => stereo_from_ambient(y, false),
            (SphereNorth(n), Sphere(m)) if n == m => Ok(ambient_from_stereo(y, true)),
            (SphereSouth(n), Sphere(m)) if n == m => Ok(ambient_from_stereo(y, false)),
            (SphereNorth(n), SphereSouth(m)) | (SphereSouth(n), SphereNorth(m)) if n == m => {
                stereo_invert(y).ok_or(CoreError::OutOfDomain { from, to })
            }
            (Sphere(3), S3Cap) => stereo_from_ambient(y, true),
            (S3Cap, Sphere(3)) => Ok(ambient_from_stereo(y, true)),
            (S3Cap, PlykinP) | (PlykinP, S3Cap) => {
                let surgery = self
                    .surgeries
                    .iter()
                    .find(|s| {
                        (s.cap_chart == from && s.tube_chart == to)
                            || (s.cap_chart == to && s.tube_chart == from)
                    })
                    .ok_or(CoreError::NoTransition { from, to })?;
                if from.base == S3Cap {
                    surgery.cap_to_tube(y)
                } else {
                    surgery.tube_to_cap(y)
                }
            }
            _ => Err(CoreError::NoTransition { from, to }),
        }
    }

    /// Push a tangent vector through a chart transition (4th-order finite
    /// differences of the transition map; the maps are smooth and cheap).
    pub fn transition_jac_mul(
        &self,
        from: ChartId,
        y: &[f64],
        to: ChartId,
        v: &[f64],
    ) -> Result<Coords> {
        let vn = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if vn == 0.0 {
            return Ok(Coords::zeros(to.dim()));
        }
        let h = 1e-5;
        let eval = |t: f64| -> Result<Coords> {
            let mut q = Coords::from_slice(y);
            for (qi, vi) in q.iter_mut().zip(v) {
                *qi += t * vi / vn;
            }
            self.transition_coords(from, &q, to)
        };
        let p1 = eval(h)?;
        let m1 = eval(-h)?;
        let p2 = eval(2.0 * h)?;
        let m2 = eval(-2.0 * h)?;
        let base = self.transition_coords(from, y, to)?;
        let wrapped = |a: f64, b: f64, idx: usize| -> f64 {
            // Base torus coordinates of mapping-torus charts may wrap between
            // evaluations; difference on the circle instead.
            let circular = matches!(
                to.base,
                BaseChart::Torus2
                    | BaseChart::SphereQuot
                    | BaseChart::MapTorus
                    | BaseChart::MapTorusQuot
                    | BaseChart::PlykinP
            ) && idx < if to.base.dim() == 2 { 2 } else { 3 };
            if circular {
                circle_delta(a, b)
            } else {
                a - b
            }
        };
        let mut out = Coords::zeros(to.dim());
        for i in 0..to.dim() {
            let d1 = wrapped(p1[i], base[i], i) - wrapped(m1[i], base[i], i);
            let d2 = wrapped(p2[i], base[i], i) - wrapped(m2[i], base[i], i);
            out[i] = (8.0 * d1 - d2) / (12.0 * h) * vn;
        }
        Ok(out)
    }

    /// Chart-aware distance between two coordinate tuples of one chart,
    /// honoring torus wraps and the quotient identification.
    pub fn distance(&self, id: ChartId, a: &[f64], b: &[f64]) -> f64 {
        let chart = match self.get(id) {
            Ok(c) => c,
            Err(_) => return f64::INFINITY,
        };
        let nb = id.base.dim();
        let mut d2 = 0.0;
        match id.base {
            BaseChart::Torus2 | BaseChart::SphereQuot => {
                d2 += torus_dist2(&a[..2], &b[..2], chart.quotient);
            }
            BaseChart::MapTorus | BaseChart::MapTorusQuot | BaseChart::PlykinP => {
                d2 += torus_dist2(&a[..2], &b[..2], chart.quotient);
                let ds = a[2] - b[2];
                d2 += ds * ds;
            }
            _ => {
                for i in 0..nb {
                    let d = a[i] - b[i];
                    d2 += d * d;
                }
            }
        }
        for i in nb..id.dim() {
            let d = a[i] - b[i];
            d2 += d * d;
        }
        d2.sqrt()
    }

    /// Sign of the identification branch that brings `b` closest to `a`:
    /// +1 for the direct representative, -1 when the involution image is
    /// closer (tangent base components flip under the involution).
    pub fn branch_sign(&self, id: ChartId, a: &[f64], b: &[f64]) -> f64 {
        let chart = match self.get(id) {
            Ok(c) => c,
            Err(_) => return 1.0,
        };
        if !chart.quotient {
            return 1.0;
        }
        let direct = torus_dist2(&a[..2], &b[..2], false);
        let na = [reduce_unit(-b[0]), reduce_unit(-b[1])];
        let flipped = torus_dist2(&a[..2], &na, false);
        if flipped < direct {
            -1.0
        } else {
            1.0
        }
    }
}

fn torus_dist2(a: &[f64], b: &[f64], quotient: bool) -> f64 {
    let direct = {
        let dx = circle_delta(a[0], b[0]);
        let dy = circle_delta(a[1], b[1]);
        dx * dx + dy * dy
    };
    if !quotient {
        return direct;
    }
    let nb = [reduce_unit(-b[0]), reduce_unit(-b[1])];
    let dx = circle_delta(a[0], nb[0]);
    let dy = circle_delta(a[1], nb[1]);
    direct.min(dx * dx + dy * dy)
}

fn stereo_from_ambient(x: &[f64], north: bool) -> Result<Coords> {
    let n = x.len() - 1;
    let v = x[n];
    let denom = if north { 1.0 - v } else { 1.0 + v };
    if denom.abs() < 1e-9 {
        let id = ChartId::new(BaseChart::Sphere(n as u8));
        let to = if north {
            ChartId::new(BaseChart::SphereNorth(n as u8))
        } else {
            ChartId::new(BaseChart::SphereSouth(n as u8))
        };
        return Err(CoreError::OutOfDomain { from: id, to });
    }
    let mut out = Coords::zeros(n);
    for i in 0..n {
        out[i] = x[i] / denom;
    }
    Ok(out)
}

fn ambient_from_stereo(u: &[f64], north: bool) -> Coords {
    let n = u.len();
    let r2: f64 = u.iter().map(|v| v * v).sum();
    let d = 1.0 + r2;
    let mut out = Coords::zeros(n + 1);
    for i in 0..n {
        out[i] = 2.0 * u[i] / d;
    }
    out[n] = if north { (r2 - 1.0) / d } else { (1.0 - r2) / d };
    out
}

fn stereo_invert(u: &[f64]) -> Option<Coords> {
    let r2: f64 = u.iter().map(|v| v * v).sum();
    if r2 < 1e-18 {
        return None;
    }
    let mut out = Coords::zeros(u.len());
    for i in 0..u.len() {
        out[i] = u[i] / r2;
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn torus_reduce_examples() {
        let p = torus_reduce([1.25, -0.5]).unwrap();
        assert_eq!(p.coords(), [0.25, 0.5]);
        let o = torus_reduce([0.0, 0.0]).unwrap();
        assert_eq!(o.coords(), [0.0, 0.0]);
        let l = torus_reduce([2.0, 3.0]).unwrap();
        assert_eq!(l.coords(), [0.0, 0.0]);
    }

    #[test]
    fn torus_reduce_rejects_non_finite() {
        assert!(torus_reduce([f64::NAN, 0.0]).is_err());
        assert!(torus_reduce([0.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn torus_reduce_stays_in_unit_interval() {
        // rem_euclid can round tiny negatives up to the modulus.
        assert_eq!(reduce_unit(-1e-18), 0.0);
        assert_eq!(reduce_unit(-0.0), 0.0);
        assert!(reduce_unit(-1e-13) < 1.0);
    }

    #[test]
    fn torus_reduce_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let a = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            let b = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            let direct = torus_reduce([a[0] + b[0], a[1] + b[1]]).unwrap();
            let ra = torus_reduce(a).unwrap();
            let rb = torus_reduce(b).unwrap();
            let staged = torus_reduce([ra.x() + rb.x(), ra.y() + rb.y()]).unwrap();
            assert!(direct.dist(&staged) < 1e-12, "{direct:?} vs {staged:?}");
        }
    }

    #[test]
    fn quotient_canonical_agrees_on_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10_000 {
            let p = torus_reduce([rng.gen::<f64>(), rng.gen::<f64>()]).unwrap();
            let q = p.antipode();
            let (cp, cq) = (quotient_canonical(p), quotient_canonical(q));
            assert!(cp.rep().dist_quotient(&cq.rep()) < 1e-15, "{cp:?} vs {cq:?}");
        }
    }

    #[test]
    fn quotient_canonical_idempotent_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10_000 {
            let p = torus_reduce([rng.gen::<f64>(), rng.gen::<f64>()]).unwrap();
            let c = quotient_canonical(p);
            assert_eq!(quotient_canonical(c.rep()), c);
        }
    }

    #[test]
    fn quotient_fixed_points() {
        for p in [[0.0, 0.0], [0.5, 0.5], [0.5, 0.0], [0.0, 0.5]] {
            let tp = torus_reduce(p).unwrap();
            assert_eq!(quotient_canonical(tp).rep(), tp);
        }
        // Literal mirror pairs agree as quotient points; the floating-point
        // reflection 1 - x is only ulp-exact below one half.
        let a = torus_reduce([0.3, 0.8]).unwrap();
        let b = torus_reduce([0.7, 0.2]).unwrap();
        let (ca, cb) = (quotient_canonical(a), quotient_canonical(b));
        assert!(ca.rep().dist_quotient(&cb.rep()) < 1e-15);
    }

    #[test]
    fn mapping_torus_seam_applies_map() {
        let double = |p: TorusPoint2| torus_reduce([2.0 * p.x(), 2.0 * p.y()]).unwrap();
        let base = BasePoint::Torus(torus_reduce([0.3, 0.4]).unwrap());
        let p = MappingTorusPoint::new(base, 1.25, double).unwrap();
        assert!((p.s() - 0.25).abs() < 1e-15);
        assert_eq!(p.base.cover().coords(), [0.6, 0.8]);
    }

    #[test]
    fn cylinder_reduces_angle() {
        let c = CylinderPoint::new(1.0, 3.0 * std::f64::consts::TAU + 0.5, -0.2).unwrap();
        assert!((c.phi() - 0.5).abs() < 1e-12);
        assert!(CylinderPoint::new(-0.1, 0.0, 0.0).is_err());
        let back = CylinderPoint::from_cartesian(c.to_cartesian()).unwrap();
        assert!((back.rho() - 1.0).abs() < 1e-14);
        assert!((back.phi() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn sphere_point_normalizes() {
        let p = EmbeddedSpherePoint::new(&[3.0, 0.0, 0.0, 4.0]).unwrap();
        assert!(p.norm_error() < SPHERE_NORM_TOL);
        assert!((p.coords()[0] - 0.6).abs() < 1e-15);
    }

    fn sphere_atlas(n: u8) -> Atlas {
        Atlas::new(vec![
            Chart::plain(ChartId::new(BaseChart::Sphere(n))),
            Chart::plain(ChartId::new(BaseChart::SphereNorth(n))),
            Chart::plain(ChartId::new(BaseChart::SphereSouth(n))),
        ])
    }

    #[test]
    fn stereo_round_trips() {
        let atlas = sphere_atlas(3);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let north = ChartId::new(BaseChart::SphereNorth(3));
        let south = ChartId::new(BaseChart::SphereSouth(3));
        let amb = ChartId::new(BaseChart::Sphere(3));
        for _ in 0..10_000 {
            let mut raw = [0.0; 4];
            for v in &mut raw {
                *v = rng.gen_range(-1.0..1.0);
            }
            let p = match EmbeddedSpherePoint::new(&raw) {
                Ok(p) => p,
                Err(_) => continue,
            };
            if p.coords()[3].abs() > 0.8 {
                continue; // keep clear of both projection poles
            }
            let x = ChartedPoint::new(amb, p.coords());
            let n = atlas.transition(&x, north).unwrap();
            let s = atlas.transition(&n, south).unwrap();
            let back = atlas.transition(&s, amb).unwrap();
            for i in 0..4 {
                assert!((back.coords[i] - x.coords[i]).abs() < TRANSITION_TOL);
            }
        }
    }

    #[test]
    fn equator_point_both_charts() {
        let atlas = sphere_atlas(3);
        let amb = ChartId::new(BaseChart::Sphere(3));
        let north = ChartId::new(BaseChart::SphereNorth(3));
        let south = ChartId::new(BaseChart::SphereSouth(3));
        let eq = ChartedPoint::new(amb, &[1.0, 0.0, 0.0, 0.0]);
        let n = atlas.transition(&eq, north).unwrap();
        let s = atlas.transition(&n, south).unwrap();
        let round = atlas.transition(&s, north).unwrap();
        for i in 0..3 {
            assert!((round.coords[i] - n.coords[i]).abs() < TRANSITION_TOL);
        }
    }

    #[test]
    fn unknown_chart_rejected() {
        let atlas = sphere_atlas(3);
        let p = ChartedPoint::new(TORUS2, &[0.1, 0.2]);
        assert!(matches!(
            atlas.transition(&p, ChartId::new(BaseChart::Sphere(3))),
            Err(CoreError::UnknownChart { .. })
        ));
    }

    #[test]
    fn transition_jacobian_matches_scaling() {
        // Stereographic projection at the south pole has derivative 1/2
        // toward the ambient equator directions.
        let atlas = sphere_atlas(3);
        let amb = ChartId::new(BaseChart::Sphere(3));
        let north = ChartId::new(BaseChart::SphereNorth(3));
        let x = [0.0, 0.0, 0.0, -1.0];
        let v = [1.0, 0.0, 0.0, 0.0];
        let j = atlas.transition_jac_mul(amb, &x, north, &v).unwrap();
        assert!((j[0] - 0.5).abs() < 1e-8, "{j:?}");
        assert!(j[1].abs() < 1e-8 && j[2].abs() < 1e-8);
    }

    #[test]
    fn chart_names_round_trip() {
        for id in [
            TORUS2,
            SPHERE_QUOT,
            MAPTORUS,
            MAPTORUS_QUOT,
            BALL3,
            S3_CAP,
            PLYKIN_P,
            ChartId::new(BaseChart::Sphere(4)),
            ChartId::new(BaseChart::SphereNorth(3)),
            S3_CAP.extended(),
            PLYKIN_P.extended().extended(),
        ] {
            assert_eq!(ChartId::from_name(&id.name()), Some(id), "{}", id.name());
        }
    }

    #[test]
    fn quotient_distance_and_branch() {
        let atlas = Atlas::new(vec![Chart::plain(SPHERE_QUOT)]);
        let a = [0.1, 0.2];
        let b = [0.9, 0.8]; // involution image of (0.1, 0.2)
        assert!(atlas.distance(SPHERE_QUOT, &a, &b) < 1e-15);
        assert_eq!(atlas.branch_sign(SPHERE_QUOT, &a, &b), -1.0);
        assert_eq!(atlas.branch_sign(SPHERE_QUOT, &a, &a), 1.0);
    }
}
