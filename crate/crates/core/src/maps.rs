//! The torus maps the flows are suspended over: the hyperbolic automorphism,
//! its derived modification with hyperbolic sources, and the involution
//! quotient realizing a sphere diffeomorphism with a one-dimensional
//! expanding attractor and four repelling fixed points.

use crate::charts::{quotient_canonical, torus_reduce, SphereQuotientPoint, TorusPoint2};
use crate::error::{CoreError, Result};

/// The standard hyperbolic matrix, rows (2,1),(1,1).
pub const ANOSOV_MATRIX: [[i64; 2]; 2] = [[2, 1], [1, 1]];

/// Unstable eigenvalue of the base matrix, (3 + sqrt 5)/2.
pub fn lambda_unstable() -> f64 {
    (3.0 + 5.0f64.sqrt()) / 2.0
}

/// Stable eigenvalue of the base matrix, (3 - sqrt 5)/2.
pub fn lambda_stable() -> f64 {
    (3.0 - 5.0f64.sqrt()) / 2.0
}

fn mat_mul(a: [[i64; 2]; 2], b: [[i64; 2]; 2]) -> [[i64; 2]; 2] {
    let mut out = [[0i64; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn mat_pow(m: [[i64; 2]; 2], k: u32) -> [[i64; 2]; 2] {
    let mut out = [[1, 0], [0, 1]];
    for _ in 0..k {
        out = mat_mul(out, m);
    }
    out
}

/// Unit eigenvectors of the base matrix; the matrix is symmetric so they are
/// orthogonal and double as their own dual covectors.
pub fn eigenbasis() -> ([f64; 2], [f64; 2]) {
    let lu = lambda_unstable();
    let ls = lambda_stable();
    let vu = normalize2([1.0, lu - 2.0]);
    let vs = normalize2([1.0, ls - 2.0]);
    (vu, vs)
}

fn normalize2(v: [f64; 2]) -> [f64; 2] {
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

// ---------------------------------------------------------------------------
// Hyperbolic torus automorphism
// ---------------------------------------------------------------------------

/// Power of the standard automorphism, with its exact integer matrix.
#[derive(Clone, Copy, Debug)]
pub struct AnosovMap {
    power: u32,
    m: [[i64; 2]; 2],
    m_inv: [[i64; 2]; 2],
}

impl AnosovMap {
    pub fn new(power: u32) -> Result<Self> {
        if power == 0 {
            return Err(CoreError::Config("automorphism power must be >= 1".into()));
        }
        let m = mat_pow(ANOSOV_MATRIX, power);
        // det = 1, so the inverse is the integer adjugate.
        let m_inv_base = [[1, -1], [-1, 2]];
        let m_inv = mat_pow(m_inv_base, power);
        Ok(AnosovMap { power, m, m_inv })
    }

    pub fn power(&self) -> u32 {
        self.power
    }

    pub fn matrix(&self) -> [[i64; 2]; 2] {
        self.m
    }

    pub fn apply(&self, p: &TorusPoint2) -> TorusPoint2 {
        let [x, y] = p.coords();
        let nx = self.m[0][0] as f64 * x + self.m[0][1] as f64 * y;
        let ny = self.m[1][0] as f64 * x + self.m[1][1] as f64 * y;
        torus_reduce([nx, ny]).expect("finite matrix action")
    }

    pub fn apply_inverse(&self, p: &TorusPoint2) -> TorusPoint2 {
        let [x, y] = p.coords();
        let nx = self.m_inv[0][0] as f64 * x + self.m_inv[0][1] as f64 * y;
        let ny = self.m_inv[1][0] as f64 * x + self.m_inv[1][1] as f64 * y;
        torus_reduce([nx, ny]).expect("finite matrix action")
    }

    pub fn jacobian(&self, _p: &TorusPoint2) -> [[f64; 2]; 2] {
        [
            [self.m[0][0] as f64, self.m[0][1] as f64],
            [self.m[1][0] as f64, self.m[1][1] as f64],
        ]
    }

    pub fn jacobian_inverse(&self) -> [[f64; 2]; 2] {
        [
            [self.m_inv[0][0] as f64, self.m_inv[0][1] as f64],
            [self.m_inv[1][0] as f64, self.m_inv[1][1] as f64],
        ]
    }
}

/// Apply the automorphism power to a point; returns the image and the
/// constant integer derivative matrix.
pub fn anosov_map(p: &TorusPoint2, power: u32) -> Result<(TorusPoint2, [[i64; 2]; 2])> {
    let m = AnosovMap::new(power)?;
    Ok((m.apply(p), m.matrix()))
}

// ---------------------------------------------------------------------------
// Derived (source-inserting) modification
// ---------------------------------------------------------------------------

/// Compactly supported radial profile of the stable-direction push.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BumpProfile {
    /// (1 - t^2)^2 on [0, 1], zero outside.
    Poly2,
}

impl BumpProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            BumpProfile::Poly2 => {
                if t >= 1.0 {
                    0.0
                } else {
                    let u = 1.0 - t * t;
                    u * u
                }
            }
        }
    }

    pub fn deriv(&self, t: f64) -> f64 {
        match self {
            BumpProfile::Poly2 => {
                if t >= 1.0 {
                    0.0
                } else {
                    -4.0 * t * (1.0 - t * t)
                }
            }
        }
    }
}

/// Configuration of the derived modification: which power of the
/// automorphism to start from, where to insert sources, and how hard to
/// push along the stable direction.
#[derive(Clone, Debug)]
pub struct DaConfig {
    pub base_power: u32,
    pub centers: Vec<TorusPoint2>,
    pub radius: f64,
    pub strength: f64,
    pub bump_profile: BumpProfile,
}

/// Target stable-direction eigenvalue at each inserted source.
pub const SOURCE_EIGENVALUE: f64 = 1.8;

impl DaConfig {
    /// Strength that makes the stable eigenvalue at each center equal
    /// `SOURCE_EIGENVALUE`: the push flow multiplies it by exp(strength).
    pub fn auto_strength(base_power: u32) -> f64 {
        (SOURCE_EIGENVALUE / lambda_stable().powi(base_power as i32)).ln()
    }

    /// Single source at the origin over the first power.
    pub fn standard_single() -> Self {
        DaConfig {
            base_power: 1,
            centers: vec![torus_reduce([0.0, 0.0]).unwrap()],
            radius: 0.08,
            strength: Self::auto_strength(1),
            bump_profile: BumpProfile::Poly2,
        }
    }

    /// Involution-symmetric configuration: the four 2-torsion points over
    /// the third power, which fixes all of them.
    pub fn standard_equivariant() -> Self {
        DaConfig {
            base_power: 3,
            centers: two_torsion_points().to_vec(),
            radius: 0.08,
            strength: Self::auto_strength(3),
            bump_profile: BumpProfile::Poly2,
        }
    }
}

/// The four involution-fixed points of the torus.
pub fn two_torsion_points() -> [TorusPoint2; 4] {
    [
        torus_reduce([0.0, 0.0]).unwrap(),
        torus_reduce([0.5, 0.0]).unwrap(),
        torus_reduce([0.0, 0.5]).unwrap(),
        torus_reduce([0.5, 0.5]).unwrap(),
    ]
}

/// Integration steps of the perturbing flow inside a support disk.
const PUSH_FLOW_STEPS: usize = 32;

/// The derived map: the time-1 flow of a compactly supported
/// stable-direction push, followed by the automorphism power.
///
/// The push field is `strength * bump(|x-c|/radius) * <x-c, w_s> * v_s`
/// summed over centers. Realizing the push as a flow (rather than adding
/// the field to the map) keeps the composition a diffeomorphism for every
/// strength; a one-shot additive push with a hyperbolic source necessarily
/// folds the stable segment at this strength. Outside the support disks the
/// flow is the identity bitwise, so the map equals the plain automorphism
/// there exactly. The stable-direction eigenvalue at a center is
/// `lam_s^k * exp(strength)`.
#[derive(Clone, Debug)]
pub struct DaMap {
    cfg: DaConfig,
    base: AnosovMap,
    v_s: [f64; 2],
    lam_u: f64,
    lam_s: f64,
}

impl DaMap {
    pub fn new(cfg: DaConfig) -> Result<Self> {
        if !(cfg.radius > 0.0 && cfg.radius.is_finite()) {
            return Err(CoreError::Config(format!(
                "perturbation radius must be positive, got {}",
                cfg.radius
            )));
        }
        if !cfg.strength.is_finite() {
            return Err(CoreError::Config("perturbation strength must be finite".into()));
        }
        if cfg.centers.is_empty() {
            return Err(CoreError::Config("at least one perturbation center required".into()));
        }
        // Disk disjointness, including against involution images.
        for (i, a) in cfg.centers.iter().enumerate() {
            for (j, b) in cfg.centers.iter().enumerate() {
                if i < j && a.dist(b) < 2.0 * cfg.radius {
                    return Err(CoreError::Config(format!(
                        "perturbation disks at ({}, {}) and ({}, {}) overlap",
                        a.x(),
                        a.y(),
                        b.x(),
                        b.y()
                    )));
                }
                let img = b.antipode();
                let d = a.dist(&img);
                if d > 0.0 && d < 2.0 * cfg.radius {
                    return Err(CoreError::Config(format!(
                        "perturbation disk at ({}, {}) overlaps the involution image of ({}, {})",
                        a.x(),
                        a.y(),
                        b.x(),
                        b.y()
                    )));
                }
            }
        }
        let base = AnosovMap::new(cfg.base_power)?;
        let (_, v_s) = eigenbasis();
        let lam_u = lambda_unstable().powi(cfg.base_power as i32);
        let lam_s = lambda_stable().powi(cfg.base_power as i32);
        // Source condition at each center: both Jacobian eigenvalues outside
        // the unit circle. In the eigenbasis the Jacobian at a center is
        // diag(lam_u, lam_s * exp(strength)).
        let stable_eig = lam_s * cfg.strength.exp();
        if lam_u.abs() <= 1.0 || stable_eig.abs() <= 1.0 {
            return Err(CoreError::Config(format!(
                "centers are not hyperbolic sources: Jacobian eigenvalues ({lam_u:.6}, {stable_eig:.6})"
            )));
        }
        let map = DaMap {
            cfg,
            base,
            v_s,
            lam_u,
            lam_s,
        };
        // Diffeomorphism sanity: the Jacobian determinant must keep its sign
        // on a sample that sweeps the perturbation disks.
        let mut t = 0.0f64;
        for c in &map.cfg.centers {
            for k in 0..200 {
                t += 0.618_033_988_749_895;
                let rad = map.cfg.radius * ((k as f64 + 0.5) / 200.0).sqrt();
                let ang = std::f64::consts::TAU * (t - t.floor());
                let p = torus_reduce([c.x() + rad * ang.cos(), c.y() + rad * ang.sin()])?;
                let j = map.jacobian(&p);
                let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                if det <= 1e-9 {
                    return Err(CoreError::Config(format!(
                        "Jacobian determinant {det:.3e} at ({}, {}); map is not a diffeomorphism",
                        p.x(),
                        p.y()
                    )));
                }
            }
        }
        Ok(map)
    }

    pub fn cfg(&self) -> &DaConfig {
        &self.cfg
    }

    pub fn base(&self) -> &AnosovMap {
        &self.base
    }

    /// Stable unit eigenvector of the underlying automorphism.
    pub fn stable_direction(&self) -> [f64; 2] {
        self.v_s
    }

    /// Jacobian eigenvalues at every center: (unstable, stable-direction).
    pub fn center_eigenvalues(&self) -> (f64, f64) {
        (self.lam_u, self.lam_s * self.cfg.strength.exp())
    }

    /// Push-field value at a wrapped offset from the active center; the
    /// field is zero outside every support disk.
    fn push_field(&self, p: &TorusPoint2) -> [f64; 2] {
        for c in &self.cfg.centers {
            let d = p.delta(c);
            let dist = d[0].hypot(d[1]);
            let t = dist / self.cfg.radius;
            if t >= 1.0 {
                continue;
            }
            let g = self.cfg.strength
                * self.cfg.bump_profile.eval(t)
                * (d[0] * self.v_s[0] + d[1] * self.v_s[1]);
            return [g * self.v_s[0], g * self.v_s[1]];
        }
        [0.0, 0.0]
    }

    /// Directional derivative of the push field.
    fn push_field_jac(&self, p: &TorusPoint2, v: [f64; 2]) -> [f64; 2] {
        for c in &self.cfg.centers {
            let d = p.delta(c);
            let dist = d[0].hypot(d[1]);
            let t = dist / self.cfg.radius;
            if t >= 1.0 {
                continue;
            }
            let proj_s = d[0] * self.v_s[0] + d[1] * self.v_s[1];
            let vdot_s = v[0] * self.v_s[0] + v[1] * self.v_s[1];
            let mut gdot = self.cfg.bump_profile.eval(t) * vdot_s;
            if dist > 0.0 {
                let ddot = (d[0] * v[0] + d[1] * v[1]) / dist;
                gdot += self.cfg.bump_profile.deriv(t) / self.cfg.radius * ddot * proj_s;
            }
            return [
                self.cfg.strength * gdot * self.v_s[0],
                self.cfg.strength * gdot * self.v_s[1],
            ];
        }
        [0.0, 0.0]
    }

    fn in_support(&self, p: &TorusPoint2) -> bool {
        self.cfg.centers.iter().any(|c| p.dist(c) < self.cfg.radius)
    }

    /// Time-`sign` flow of the push field (fixed-step RK4); identity outside
    /// the support disks.
    fn push_flow(&self, p: &TorusPoint2, sign: f64) -> TorusPoint2 {
        if !self.in_support(p) {
            return *p;
        }
        let h = sign / PUSH_FLOW_STEPS as f64;
        let mut q = [p.x(), p.y()];
        for _ in 0..PUSH_FLOW_STEPS {
            let at = |y: [f64; 2]| -> [f64; 2] {
                self.push_field(&torus_reduce(y).expect("finite flow state"))
            };
            let k1 = at(q);
            let k2 = at([q[0] + 0.5 * h * k1[0], q[1] + 0.5 * h * k1[1]]);
            let k3 = at([q[0] + 0.5 * h * k2[0], q[1] + 0.5 * h * k2[1]]);
            let k4 = at([q[0] + h * k3[0], q[1] + h * k3[1]]);
            q[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
            q[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        }
        torus_reduce(q).expect("finite flow image")
    }

    /// Joint point-and-tangent flow; the tangent recursion is the exact
    /// derivative of the discrete flow above.
    fn push_flow_jac(&self, p: &TorusPoint2, v: [f64; 2], sign: f64) -> (TorusPoint2, [f64; 2]) {
        if !self.in_support(p) {
            return (*p, v);
        }
        let h = sign / PUSH_FLOW_STEPS as f64;
        let mut q = [p.x(), p.y()];
        let mut w = v;
        for _ in 0..PUSH_FLOW_STEPS {
            let at = |y: [f64; 2]| torus_reduce(y).expect("finite flow state");
            let k1 = self.push_field(&at(q));
            let j1 = self.push_field_jac(&at(q), w);
            let q2 = [q[0] + 0.5 * h * k1[0], q[1] + 0.5 * h * k1[1]];
            let w2 = [w[0] + 0.5 * h * j1[0], w[1] + 0.5 * h * j1[1]];
            let k2 = self.push_field(&at(q2));
            let j2 = self.push_field_jac(&at(q2), w2);
            let q3 = [q[0] + 0.5 * h * k2[0], q[1] + 0.5 * h * k2[1]];
            let w3 = [w[0] + 0.5 * h * j2[0], w[1] + 0.5 * h * j2[1]];
            let k3 = self.push_field(&at(q3));
            let j3 = self.push_field_jac(&at(q3), w3);
            let q4 = [q[0] + h * k3[0], q[1] + h * k3[1]];
            let w4 = [w[0] + h * j3[0], w[1] + h * j3[1]];
            let k4 = self.push_field(&at(q4));
            let j4 = self.push_field_jac(&at(q4), w4);
            q[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
            q[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
            w[0] += h / 6.0 * (j1[0] + 2.0 * j2[0] + 2.0 * j3[0] + j4[0]);
            w[1] += h / 6.0 * (j1[1] + 2.0 * j2[1] + 2.0 * j3[1] + j4[1]);
        }
        (torus_reduce(q).expect("finite flow image"), w)
    }

    pub fn apply(&self, p: &TorusPoint2) -> TorusPoint2 {
        self.base.apply(&self.push_flow(p, 1.0))
    }

    /// Inverse map: undo the automorphism, then flow the push backwards.
    pub fn apply_inverse(&self, p: &TorusPoint2) -> TorusPoint2 {
        self.push_flow(&self.base.apply_inverse(p), -1.0)
    }

    /// Derivative action on a tangent vector.
    pub fn jacobian_mul(&self, p: &TorusPoint2, v: [f64; 2]) -> [f64; 2] {
        let (_, w) = self.push_flow_jac(p, v, 1.0);
        let m = self.base.matrix();
        [
            m[0][0] as f64 * w[0] + m[0][1] as f64 * w[1],
            m[1][0] as f64 * w[0] + m[1][1] as f64 * w[1],
        ]
    }

    pub fn jacobian_inverse_mul(&self, p: &TorusPoint2, v: [f64; 2]) -> [f64; 2] {
        let mi = self.base.jacobian_inverse();
        let w = [mi[0][0] * v[0] + mi[0][1] * v[1], mi[1][0] * v[0] + mi[1][1] * v[1]];
        let pre = self.base.apply_inverse(p);
        let (_, out) = self.push_flow_jac(&pre, w, -1.0);
        out
    }

    pub fn jacobian(&self, p: &TorusPoint2) -> [[f64; 2]; 2] {
        let c0 = self.jacobian_mul(p, [1.0, 0.0]);
        let c1 = self.jacobian_mul(p, [0.0, 1.0]);
        [[c0[0], c1[0]], [c0[1], c1[1]]]
    }

    /// Distance from the saddle pair flanking each center along the stable
    /// axis: where the push-flow expansion balances the automorphism's
    /// contraction. Solved by bisection on the invariant stable line.
    pub fn saddle_offset(&self) -> f64 {
        let c = self.cfg.centers[0];
        let along = |xi: f64| -> f64 {
            let p = torus_reduce([c.x() + xi * self.v_s[0], c.y() + xi * self.v_s[1]])
                .expect("finite offset");
            let img = self.apply(&p);
            let d = img.delta(&c);
            d[0] * self.v_s[0] + d[1] * self.v_s[1]
        };
        // Expanding near the center, contracting at the disk edge.
        let mut lo = 1e-6;
        let mut hi = self.cfg.radius;
        if along(lo) <= lo || along(hi) >= hi {
            return f64::INFINITY;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if along(mid) > mid {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Apply the derived map; exposed with its derivative matrix.
pub fn da_map(p: &TorusPoint2, cfg: &DaConfig) -> Result<(TorusPoint2, [[f64; 2]; 2])> {
    let m = DaMap::new(cfg.clone())?;
    Ok((m.apply(p), m.jacobian(p)))
}

// ---------------------------------------------------------------------------
// Involution quotient of the equivariant derived map
// ---------------------------------------------------------------------------

/// Sphere diffeomorphism realized as the involution quotient of an
/// equivariant derived map on the double cover.
#[derive(Clone, Debug)]
pub struct PlykinMap {
    cover: DaMap,
}

impl PlykinMap {
    pub fn standard() -> Result<Self> {
        Self::new(DaConfig::standard_equivariant())
    }

    pub fn new(cfg: DaConfig) -> Result<Self> {
        if cfg.base_power != 3 {
            return Err(CoreError::Config(format!(
                "quotient construction needs base power 3 (fixes the 2-torsion points), got {}",
                cfg.base_power
            )));
        }
        let cover = DaMap::new(cfg)?;
        // Equivariance f(-x) = -f(x), checked on a sample with a witness.
        let mut x = 0.137f64;
        let mut y = 0.712f64;
        for _ in 0..1000 {
            x = (x + 0.618_033_988_749_895).fract();
            y = (y + 0.414_213_562_373_095).fract();
            let p = torus_reduce([x, y]).unwrap();
            let lhs = cover.apply(&p.antipode());
            let rhs = cover.apply(&p).antipode();
            let mismatch = lhs.dist(&rhs);
            if mismatch > 1e-12 {
                return Err(CoreError::Equivariance { x, y, mismatch });
            }
        }
        Ok(PlykinMap { cover })
    }

    /// The equivariant map on the double cover.
    pub fn cover(&self) -> &DaMap {
        &self.cover
    }

    pub fn apply(&self, q: &SphereQuotientPoint) -> SphereQuotientPoint {
        quotient_canonical(self.cover.apply(&q.rep()))
    }

    /// Derivative on the double cover at the canonical representative.
    pub fn jacobian(&self, q: &SphereQuotientPoint) -> [[f64; 2]; 2] {
        self.cover.jacobian(&q.rep())
    }
}

/// Apply the quotient map; derivative reported on the double cover.
pub fn plykin_map(
    q: &SphereQuotientPoint,
    cfg: &DaConfig,
) -> Result<(SphereQuotientPoint, [[f64; 2]; 2])> {
    let m = PlykinMap::new(cfg.clone())?;
    Ok((m.apply(q), m.jacobian(q)))
}

/// Either torus map, as suspensions consume them.
#[derive(Clone, Debug)]
pub enum CoverMap {
    Anosov(AnosovMap),
    Da(DaMap),
}

impl CoverMap {
    pub fn apply(&self, p: &TorusPoint2) -> TorusPoint2 {
        match self {
            CoverMap::Anosov(m) => m.apply(p),
            CoverMap::Da(m) => m.apply(p),
        }
    }

    pub fn jacobian_mul(&self, p: &TorusPoint2, v: [f64; 2]) -> [f64; 2] {
        match self {
            CoverMap::Anosov(m) => {
                let j = m.jacobian(p);
                [
                    j[0][0] * v[0] + j[0][1] * v[1],
                    j[1][0] * v[0] + j[1][1] * v[1],
                ]
            }
            CoverMap::Da(m) => m.jacobian_mul(p, v),
        }
    }

    pub fn jacobian(&self, p: &TorusPoint2) -> [[f64; 2]; 2] {
        match self {
            CoverMap::Anosov(m) => m.jacobian(p),
            CoverMap::Da(m) => m.jacobian(p),
        }
    }

    pub fn apply_inverse(&self, p: &TorusPoint2) -> TorusPoint2 {
        match self {
            CoverMap::Anosov(m) => m.apply_inverse(p),
            CoverMap::Da(m) => m.apply_inverse(p),
        }
    }

    pub fn jacobian_inverse_mul(&self, p: &TorusPoint2, v: [f64; 2]) -> [f64; 2] {
        match self {
            CoverMap::Anosov(m) => {
                let j = m.jacobian_inverse();
                [
                    j[0][0] * v[0] + j[0][1] * v[1],
                    j[1][0] * v[0] + j[1][1] * v[1],
                ]
            }
            CoverMap::Da(m) => m.jacobian_inverse_mul(p, v),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn anosov_fixed_origin() {
        let p = torus_reduce([0.0, 0.0]).unwrap();
        let (img, _) = anosov_map(&p, 1).unwrap();
        assert_eq!(img.coords(), [0.0, 0.0]);
    }

    #[test]
    fn anosov_half_point() {
        let p = torus_reduce([0.5, 0.0]).unwrap();
        let (img, _) = anosov_map(&p, 1).unwrap();
        assert_eq!(img.coords(), [0.0, 0.5]);
    }

    #[test]
    fn anosov_cube_matrix() {
        let (_, m) = anosov_map(&torus_reduce([0.1, 0.1]).unwrap(), 3).unwrap();
        assert_eq!(m, [[13, 8], [8, 5]]);
    }

    #[test]
    fn anosov_inverse_round_trip() {
        let m = AnosovMap::new(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let p = torus_reduce([rng.gen(), rng.gen()]).unwrap();
            let q = m.apply_inverse(&m.apply(&p));
            assert!(p.dist(&q) < 1e-12);
        }
    }

    #[test]
    fn eigenvalue_identities() {
        let lu = lambda_unstable();
        let ls = lambda_stable();
        assert!((lu * ls - 1.0).abs() < 1e-14);
        assert!((lu + ls - 3.0).abs() < 1e-14);
        assert!((lu.ln() - 0.9624236501192069).abs() < 1e-12);
        let (vu, vs) = eigenbasis();
        assert!((vu[0] * vs[0] + vu[1] * vs[1]).abs() < 1e-14);
    }

    #[test]
    fn da_matches_automorphism_outside_support() {
        let cfg = DaConfig::standard_single();
        let da = DaMap::new(cfg.clone()).unwrap();
        let base = AnosovMap::new(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut tested = 0;
        while tested < 10_000 {
            let p = torus_reduce([rng.gen(), rng.gen()]).unwrap();
            let outside = cfg.centers.iter().all(|c| p.dist(c) > cfg.radius);
            if !outside {
                continue;
            }
            tested += 1;
            assert_eq!(da.apply(&p), base.apply(&p));
        }
    }

    #[test]
    fn da_center_is_hyperbolic_source() {
        let da = DaMap::new(DaConfig::standard_single()).unwrap();
        let c = da.cfg().centers[0];
        assert!(da.apply(&c).dist(&c) < 1e-14);
        let (eu, es) = da.center_eigenvalues();
        assert!(eu.abs() > 1.0 && es.abs() > 1.0);
        assert!((es - SOURCE_EIGENVALUE).abs() < 1e-12);
        // Cross-check against the assembled Jacobian.
        let j = da.jacobian(&c);
        let tr = j[0][0] + j[1][1];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let disc = (tr * tr / 4.0 - det).sqrt();
        let (l1, l2) = (tr / 2.0 + disc, tr / 2.0 - disc);
        assert!(l1.abs() > 1.0 && l2.abs() > 1.0, "eigenvalues {l1} {l2}");
    }

    #[test]
    fn da_orbit_escapes_sources() {
        // After a transient the orbit stays clear of every source basin;
        // the basin scale is the saddle offset on the stable axis.
        let cfg = DaConfig::standard_single();
        let da = DaMap::new(cfg.clone()).unwrap();
        let clearance = 0.5 * da.saddle_offset();
        assert!(clearance.is_finite() && clearance > 0.0);
        let mut p = torus_reduce([0.3141, 0.2718]).unwrap();
        for _ in 0..100 {
            p = da.apply(&p);
        }
        for _ in 0..10_000 {
            p = da.apply(&p);
            for c in &cfg.centers {
                assert!(p.dist(c) > clearance, "orbit at {:?} too close to {:?}", p, c);
            }
        }
    }

    #[test]
    fn da_rejects_overlapping_disks() {
        let cfg = DaConfig {
            base_power: 1,
            centers: vec![
                torus_reduce([0.0, 0.0]).unwrap(),
                torus_reduce([0.05, 0.0]).unwrap(),
            ],
            radius: 0.08,
            strength: DaConfig::auto_strength(1),
            bump_profile: BumpProfile::Poly2,
        };
        assert!(matches!(DaMap::new(cfg), Err(CoreError::Config(_))));
    }

    #[test]
    fn da_rejects_weak_sources() {
        let cfg = DaConfig {
            strength: 0.1,
            ..DaConfig::standard_single()
        };
        assert!(matches!(DaMap::new(cfg), Err(CoreError::Config(_))));
    }

    #[test]
    fn da_rejects_disk_touching_involution_image() {
        let cfg = DaConfig {
            base_power: 1,
            centers: vec![torus_reduce([0.05, 0.0]).unwrap()],
            radius: 0.08,
            strength: DaConfig::auto_strength(1),
            bump_profile: BumpProfile::Poly2,
        };
        // distance to the involution image (0.95, 0) is 0.1 < 2 * 0.08
        assert!(matches!(DaMap::new(cfg), Err(CoreError::Config(_))));
    }

    #[test]
    fn da_jacobian_matches_finite_differences() {
        let da = DaMap::new(DaConfig::standard_single()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = 1e-7;
        for _ in 0..1000 {
            // concentrate samples near the perturbation disk
            let p = torus_reduce([rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)]).unwrap();
            for v in [[1.0, 0.0], [0.0, 1.0], [0.6, -0.8]] {
                let plus = da.apply(&torus_reduce([p.x() + h * v[0], p.y() + h * v[1]]).unwrap());
                let minus = da.apply(&torus_reduce([p.x() - h * v[0], p.y() - h * v[1]]).unwrap());
                let d = plus.delta(&minus);
                let fd = [d[0] / (2.0 * h), d[1] / (2.0 * h)];
                let jv = da.jacobian_mul(&p, v);
                let scale = jv[0].hypot(jv[1]).max(1.0);
                assert!(
                    (fd[0] - jv[0]).abs() / scale < 1e-5 && (fd[1] - jv[1]).abs() / scale < 1e-5,
                    "fd {fd:?} vs jac {jv:?} at {p:?}"
                );
            }
        }
    }

    #[test]
    fn torsion_points_fixed_by_cube() {
        let m = AnosovMap::new(3).unwrap();
        for p in two_torsion_points() {
            assert_eq!(m.apply(&p), p);
        }
        // The base power permutes the three nonzero torsion points.
        let m1 = AnosovMap::new(1).unwrap();
        let p = torus_reduce([0.5, 0.0]).unwrap();
        assert_ne!(m1.apply(&p), p);
    }

    #[test]
    fn plykin_quotient_commutes() {
        let plykin = PlykinMap::standard().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10_000 {
            let p = torus_reduce([rng.gen(), rng.gen()]).unwrap();
            let via_cover = quotient_canonical(plykin.cover().apply(&p));
            let via_quotient = plykin.apply(&quotient_canonical(p));
            assert!(
                via_cover.rep().dist_quotient(&via_quotient.rep()) < 1e-12,
                "{via_cover:?} vs {via_quotient:?}"
            );
        }
    }

    #[test]
    fn plykin_cone_points_fixed() {
        let plykin = PlykinMap::standard().unwrap();
        for p in two_torsion_points() {
            let q = quotient_canonical(p);
            let img = plykin.apply(&q);
            assert!(img.rep().dist_quotient(&q.rep()) < 1e-14);
        }
    }

    #[test]
    fn plykin_rejects_non_equivariant_config() {
        let cfg = DaConfig {
            base_power: 3,
            centers: vec![torus_reduce([0.25, 0.3]).unwrap()],
            radius: 0.05,
            strength: DaConfig::auto_strength(3),
            bump_profile: BumpProfile::Poly2,
        };
        let err = PlykinMap::new(cfg).unwrap_err();
        assert!(matches!(err, CoreError::Equivariance { .. }), "{err}");
    }

    #[test]
    fn plykin_rejects_wrong_power() {
        let cfg = DaConfig {
            base_power: 1,
            ..DaConfig::standard_equivariant()
        };
        assert!(matches!(PlykinMap::new(cfg), Err(CoreError::Config(_))));
    }

    #[test]
    fn saddle_offset_within_disk() {
        // Monotonicity of the stable-segment map bounds the saddle offset
        // by lam_s^k * radius; it must still be macroscopic enough to
        // excise a validated tube inside it.
        for cfg in [DaConfig::standard_single(), DaConfig::standard_equivariant()] {
            let k = cfg.base_power;
            let da = DaMap::new(cfg).unwrap();
            let off = da.saddle_offset();
            let bound = lambda_stable().powi(k as i32) * da.cfg().radius;
            assert!(off > 0.2 * bound && off <= bound * 1.0001, "offset {off}, bound {bound}");
            let c = da.cfg().centers[0];
            let vs = da.stable_direction();
            let saddle = torus_reduce([c.x() + off * vs[0], c.y() + off * vs[1]]).unwrap();
            assert!(da.apply(&saddle).dist(&saddle) < 1e-9);
        }
    }
}
