//! Sampled codimension-1 boundaries with outward normals, and the region
//! membership tests the census and invariance checks classify against.

use serde::Serialize;

use crate::charts::{circle_delta, ChartId, ChartedPoint, Coords};
use crate::maps::CoverMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Sphere,
    Torus,
}

/// A sampled boundary surface: points with outward unit normals relative to
/// the compact region the surface encloses.
#[derive(Clone, Debug)]
pub struct TrapSurface {
    pub chart: ChartId,
    pub topology: Topology,
    pub samples: Vec<(ChartedPoint, Coords)>,
}

impl TrapSurface {
    /// Largest nearest-neighbor gap over the samples (coarse density check).
    pub fn max_nearest_gap(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, (p, _)) in self.samples.iter().enumerate() {
            let mut nearest = f64::INFINITY;
            for (j, (q, _)) in self.samples.iter().enumerate() {
                if i == j {
                    continue;
                }
                let mut d2 = 0.0;
                for k in 0..p.coords.len() {
                    let d = p.coords[k] - q.coords[k];
                    d2 += d * d;
                }
                nearest = nearest.min(d2.sqrt());
            }
            worst = worst.max(nearest);
        }
        worst
    }

    /// Same surface with every normal negated.
    pub fn flipped(&self) -> TrapSurface {
        let mut out = self.clone();
        for (_, n) in out.samples.iter_mut() {
            for v in n.iter_mut() {
                *v = -*v;
            }
        }
        out
    }
}

/// Round tube of given radius around the planar unit circle in a Cartesian
/// 3-chart; normals point out of the solid torus.
pub fn unit_circle_tube_surface(
    chart: ChartId,
    tube_radius: f64,
    n_phi: usize,
    n_theta: usize,
) -> TrapSurface {
    let mut samples = Vec::with_capacity(n_phi * n_theta);
    for i in 0..n_phi {
        let phi = std::f64::consts::TAU * (i as f64 + 0.5) / n_phi as f64;
        for j in 0..n_theta {
            let theta = std::f64::consts::TAU * (j as f64 + 0.5) / n_theta as f64;
            let w1 = tube_radius * theta.cos();
            let w2 = tube_radius * theta.sin();
            let rho = 1.0 + w1;
            let q = [rho * phi.cos(), rho * phi.sin(), w2];
            let n = [theta.cos() * phi.cos(), theta.cos() * phi.sin(), theta.sin()];
            samples.push((ChartedPoint::new(chart, &q), Coords::from_slice(&n)));
        }
    }
    TrapSurface {
        chart,
        topology: Topology::Torus,
        samples,
    }
}

/// Round sphere of given radius about the origin of a Cartesian 3-chart;
/// normals point outward. Fibonacci-lattice sampling.
pub fn origin_sphere_surface(chart: ChartId, radius: f64, n: usize) -> TrapSurface {
    let mut samples = Vec::with_capacity(n);
    let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
    for i in 0..n {
        let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
        let r = (1.0 - z * z).sqrt();
        let phi = std::f64::consts::TAU * (i as f64 / golden).fract();
        let dir = [r * phi.cos(), r * phi.sin(), z];
        let q = [radius * dir[0], radius * dir[1], radius * dir[2]];
        samples.push((ChartedPoint::new(chart, &q), Coords::from_slice(&dir)));
    }
    TrapSurface {
        chart,
        topology: Topology::Sphere,
        samples,
    }
}

/// Geodesic sphere of radius `geo_radius` around an ambient-sphere point;
/// normals point away from the center (tangentially).
pub fn geodesic_sphere_surface(
    chart: ChartId,
    center: &[f64],
    geo_radius: f64,
    n: usize,
) -> TrapSurface {
    let dim = center.len();
    // Orthonormal basis of the center's orthogonal complement.
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for i in 0..dim {
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        let mut v = e;
        let dot: f64 = v.iter().zip(center).map(|(a, b)| a * b).sum();
        for (vi, ci) in v.iter_mut().zip(center) {
            *vi -= dot * ci;
        }
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= d * bi;
            }
        }
        let norm: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            for vi in v.iter_mut() {
                *vi /= norm;
            }
            basis.push(v);
            if basis.len() == dim - 1 {
                break;
            }
        }
    }
    let (cr, sr) = (geo_radius.cos(), geo_radius.sin());
    let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        // Direction on the unit sphere of the complement (dimension dim-1).
        let mut omega = vec![0.0; dim];
        match basis.len() {
            2 => {
                let ang = std::f64::consts::TAU * (i as f64 + 0.5) / n as f64;
                for k in 0..dim {
                    omega[k] = ang.cos() * basis[0][k] + ang.sin() * basis[1][k];
                }
            }
            _ => {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                let r = (1.0 - z * z).sqrt();
                let phi = std::f64::consts::TAU * (i as f64 / golden).fract();
                let c = [r * phi.cos(), r * phi.sin(), z];
                for k in 0..dim {
                    omega[k] = c[0] * basis[0][k] + c[1] * basis[1][k] + c[2] * basis[2][k];
                }
            }
        }
        let mut q = vec![0.0; dim];
        let mut normal = vec![0.0; dim];
        for k in 0..dim {
            q[k] = cr * center[k] + sr * omega[k];
            normal[k] = -sr * center[k] + cr * omega[k];
        }
        samples.push((
            ChartedPoint::new(chart, &q),
            Coords::from_slice(&normal),
        ));
    }
    TrapSurface {
        chart,
        topology: Topology::Sphere,
        samples,
    }
}

// ---------------------------------------------------------------------------
// Region membership
// ---------------------------------------------------------------------------

/// Analytic membership test paired with a trap surface; used by invariance
/// checks and the basin census.
#[derive(Clone, Debug)]
pub enum RegionTest {
    /// |q| <= radius in a Cartesian chart.
    BallInside { chart: ChartId, radius: f64 },
    /// Tube distance from the planar unit circle <= radius.
    TubeInside { chart: ChartId, radius: f64 },
    /// Geodesic cap on an ambient sphere: dot(x, center) >= cos_radius.
    GeodesicCap {
        chart: ChartId,
        center: Vec<f64>,
        cos_radius: f64,
    },
    /// Complement of the seam-adapted tube around a fixed source of a
    /// suspension: the fiber-interpolated squared offset stays >= u_t^2.
    SuspensionTrap {
        chart: ChartId,
        center: [f64; 2],
        u_t: f64,
        map: CoverMap,
    },
    /// Base offset from every listed center at least u_min (mapping torus).
    OutsideBaseTubes {
        chart: ChartId,
        centers: Vec<[f64; 2]>,
        u_min: f64,
    },
    /// Lifted region of a latitude extension, within a band of the equator.
    Extended { base: Box<RegionTest>, max_lat: f64 },
}

impl RegionTest {
    pub fn chart(&self) -> ChartId {
        match self {
            RegionTest::BallInside { chart, .. }
            | RegionTest::TubeInside { chart, .. }
            | RegionTest::GeodesicCap { chart, .. }
            | RegionTest::SuspensionTrap { chart, .. }
            | RegionTest::OutsideBaseTubes { chart, .. } => *chart,
            RegionTest::Extended { base, .. } => base.chart().extended(),
        }
    }

    pub fn contains(&self, p: &ChartedPoint) -> bool {
        match self {
            RegionTest::BallInside { chart, radius } => {
                p.chart == *chart && p.coords.norm() <= *radius
            }
            RegionTest::TubeInside { chart, radius } => {
                if p.chart != *chart {
                    return false;
                }
                let rho = p.coords[0].hypot(p.coords[1]);
                (rho - 1.0).hypot(p.coords[2]) <= *radius
            }
            RegionTest::GeodesicCap {
                chart,
                center,
                cos_radius,
            } => {
                if p.chart != *chart {
                    return false;
                }
                let dot: f64 = p.coords.iter().zip(center).map(|(a, b)| a * b).sum();
                dot >= *cos_radius
            }
            RegionTest::SuspensionTrap {
                chart,
                center,
                u_t,
                map,
            } => {
                if p.chart != *chart {
                    return false;
                }
                suspension_trap_value(&p.coords, center, *u_t, map) >= 1.0
            }
            RegionTest::OutsideBaseTubes {
                chart,
                centers,
                u_min,
            } => {
                if p.chart != *chart {
                    return false;
                }
                centers.iter().all(|c| {
                    let dx = circle_delta(p.coords[0], c[0]);
                    let dy = circle_delta(p.coords[1], c[1]);
                    dx.hypot(dy) >= *u_min
                })
            }
            RegionTest::Extended { base, max_lat } => {
                if p.chart.lat == 0 {
                    return false;
                }
                let nb = p.chart.dim() - 1;
                if p.coords[nb].abs() > *max_lat {
                    return false;
                }
                let inner = ChartedPoint::new(p.chart.base_of(), &p.coords[..nb]);
                base.contains(&inner)
            }
        }
    }
}

/// Fiber-interpolated trap function of an excised source tube: below 1
/// inside the excised tube, 1 on its boundary, above 1 in the trapped
/// region. Built so the level set at the seam is carried exactly onto the
/// entry section by the suspension map.
pub fn suspension_trap_value(y: &[f64], center: &[f64; 2], u_t: f64, map: &CoverMap) -> f64 {
    let s = y[2].clamp(0.0, 1.0);
    let p = match crate::charts::torus_reduce([y[0], y[1]]) {
        Ok(p) => p,
        Err(_) => return f64::INFINITY,
    };
    let c = crate::charts::torus_reduce(*center).expect("finite center");
    let d = p.delta(&c);
    let w0 = d[0] * d[0] + d[1] * d[1];
    let img = map.apply(&p);
    let di = img.delta(&c);
    let w1 = di[0] * di[0] + di[1] * di[1];
    ((1.0 - s) * w0 + s * w1) / (u_t * u_t)
}

/// Named region entry the census classifies against.
#[derive(Clone, Debug)]
pub struct NamedRegion {
    pub name: String,
    pub region: RegionTest,
    pub attractor: bool,
    pub surface: Option<TrapSurface>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charts::BALL3;

    #[test]
    fn tube_surface_normals_are_unit_and_outward() {
        let s = unit_circle_tube_surface(BALL3, 0.5, 20, 20);
        assert_eq!(s.samples.len(), 400);
        for (p, n) in &s.samples {
            assert!((n.norm() - 1.0).abs() < 1e-12);
            // Moving along the normal increases tube distance.
            let eps = 1e-6;
            let q = [
                p.coords[0] + eps * n[0],
                p.coords[1] + eps * n[1],
                p.coords[2] + eps * n[2],
            ];
            let td = |q: &[f64]| (q[0].hypot(q[1]) - 1.0).hypot(q[2]);
            assert!(td(&q) > td(&p.coords));
        }
    }

    #[test]
    fn sphere_surface_density() {
        let s = origin_sphere_surface(BALL3, 2.0, 400);
        let gap = s.max_nearest_gap();
        assert!(gap < 0.5, "gap {gap}");
    }

    #[test]
    fn ball_region_contains() {
        let r = RegionTest::BallInside {
            chart: BALL3,
            radius: 1.0,
        };
        assert!(r.contains(&ChartedPoint::new(BALL3, &[0.5, 0.0, 0.0])));
        assert!(!r.contains(&ChartedPoint::new(BALL3, &[1.5, 0.0, 0.0])));
    }
}
