//! North-south gradient flow on the unit sphere: the tangential projection
//! of the constant downward field. Source at the north pole, sink at the
//! south pole, no other equilibria.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::charts::{Atlas, BaseChart, Chart, ChartId, ChartedPoint, S3_CAP};
use crate::error::{CoreError, Result};
use crate::flows::{Flow, FlowSystem};

/// Ambient height below which the surgered construction hands off to the
/// cap chart, and the cap radius above which it hands back.
pub const CAP_HANDOFF_HEIGHT: f64 = 0.64;
pub const CAP_HANDBACK_RADIUS: f64 = 2.3;
pub const CAP_BOUND: f64 = 2.6;

#[derive(Clone, Debug)]
pub struct GradientSphereFlow {
    n: usize,
    with_cap: bool,
    atlas: Atlas,
}

impl GradientSphereFlow {
    pub fn new(n: usize) -> Result<Self> {
        if !(2..=4).contains(&n) {
            return Err(CoreError::Config(format!(
                "gradient sphere flow supports dimensions 2..=4, got {n}"
            )));
        }
        Ok(GradientSphereFlow {
            n,
            with_cap: false,
            atlas: Atlas::new(vec![Chart::plain(ChartId::new(BaseChart::Sphere(n as u8)))]),
        })
    }

    /// Register the stereographic cap chart; the surgered construction
    /// evaluates the flow there as the exact pushforward, which is -u.
    pub fn with_cap(mut self) -> Self {
        assert_eq!(self.n, 3, "cap chart is specific to the 3-sphere");
        self.with_cap = true;
        self.atlas = Atlas::new(vec![
            Chart::plain(ChartId::new(BaseChart::Sphere(3))),
            Chart::bounded(S3_CAP, CAP_BOUND),
        ]);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ambient_chart(&self) -> ChartId {
        ChartId::new(BaseChart::Sphere(self.n as u8))
    }

    pub fn north_pole(&self) -> ChartedPoint {
        let mut x = vec![0.0; self.n + 1];
        x[self.n] = 1.0;
        ChartedPoint::new(self.ambient_chart(), &x)
    }

    pub fn south_pole(&self) -> ChartedPoint {
        let mut x = vec![0.0; self.n + 1];
        x[self.n] = -1.0;
        ChartedPoint::new(self.ambient_chart(), &x)
    }
}

impl Flow for GradientSphereFlow {
    fn atlas(&self) -> &Atlas {
        &self.atlas
    }

    fn entry_chart(&self) -> ChartId {
        self.ambient_chart()
    }

    fn field(&self, chart: ChartId, y: &[f64], out: &mut [f64]) -> Result<()> {
        if chart == S3_CAP && self.with_cap {
            for i in 0..3 {
                out[i] = -y[i];
            }
            return Ok(());
        }
        let n = self.n;
        let h = y[n];
        for i in 0..=n {
            out[i] = h * y[i];
        }
        out[n] -= 1.0;
        Ok(())
    }

    fn field_jac_mul(&self, chart: ChartId, y: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        if chart == S3_CAP && self.with_cap {
            for i in 0..3 {
                out[i] = -v[i];
            }
            return Ok(());
        }
        let n = self.n;
        for i in 0..=n {
            out[i] = v[n] * y[i] + y[n] * v[i];
        }
        Ok(())
    }

    fn handoff(&self, chart: ChartId, y: &[f64]) -> Option<ChartId> {
        if !self.with_cap {
            return None;
        }
        if chart.base == BaseChart::Sphere(3) && y[3] < CAP_HANDOFF_HEIGHT {
            return Some(S3_CAP);
        }
        if chart == S3_CAP {
            let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r > CAP_HANDBACK_RADIUS {
                return Some(self.ambient_chart());
            }
        }
        None
    }

    fn in_domain(&self, chart: ChartId, y: &[f64]) -> bool {
        if chart == S3_CAP {
            return y.iter().map(|v| v * v).sum::<f64>().sqrt() <= CAP_BOUND;
        }
        true
    }

    fn sample_point(&self, rng: &mut ChaCha8Rng) -> ChartedPoint {
        // Gaussian direction, normalized.
        let mut x = vec![0.0; self.n + 1];
        loop {
            let mut norm2 = 0.0;
            for v in x.iter_mut() {
                *v = gaussian(rng);
                norm2 += *v * *v;
            }
            if norm2 > 1e-6 {
                let norm = norm2.sqrt();
                for v in x.iter_mut() {
                    *v /= norm;
                }
                return ChartedPoint::new(self.ambient_chart(), &x);
            }
        }
    }
}

pub(crate) fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; two uniforms per call is fine at this scale.
    let u1: f64 = rng.gen_range(1e-12..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// North-south flow on S^n.
pub fn gradient_sphere_flow(n: usize) -> Result<FlowSystem> {
    Ok(FlowSystem::Gradient(GradientSphereFlow::new(n)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn poles_are_equilibria_with_signed_spectra() {
        let g = GradientSphereFlow::new(3).unwrap();
        let chart = g.ambient_chart();
        let mut out = [0.0; 4];
        g.field(chart, &g.north_pole().coords, &mut out).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1e-15));
        g.field(chart, &g.south_pole().coords, &mut out).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1e-15));

        // Tangential linearization at the poles: +1 at north, -1 at south.
        for (pole, sign) in [(g.north_pole(), 1.0), (g.south_pole(), -1.0)] {
            for i in 0..3 {
                let mut v = [0.0; 4];
                v[i] = 1.0;
                let mut jv = [0.0; 4];
                g.field_jac_mul(chart, &pole.coords, &v, &mut jv).unwrap();
                assert!((jv[i] - sign).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn equator_points_south() {
        let g = GradientSphereFlow::new(3).unwrap();
        let eq = [1.0, 0.0, 0.0, 0.0];
        let mut out = [0.0; 4];
        g.field(g.ambient_chart(), &eq, &mut out).unwrap();
        assert_eq!(out, [0.0, 0.0, 0.0, -1.0]);
    }

    #[test]
    fn cap_field_is_linear_contraction() {
        let g = GradientSphereFlow::new(3).unwrap().with_cap();
        let u = [0.3, -0.5, 1.1];
        let mut out = [0.0; 3];
        g.field(S3_CAP, &u, &mut out).unwrap();
        assert_eq!(out, [-0.3, 0.5, -1.1]);
    }

    #[test]
    fn cap_field_matches_ambient_pushforward() {
        // Transport the ambient field through the stereographic transition
        // and compare against -u.
        let g = GradientSphereFlow::new(3).unwrap().with_cap();
        let atlas = Atlas::new(vec![
            Chart::plain(ChartId::new(BaseChart::Sphere(3))),
            Chart::bounded(S3_CAP, CAP_BOUND),
        ]);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let amb = g.ambient_chart();
        for _ in 0..200 {
            let p = g.sample_point(&mut rng);
            if p.coords[3] > 0.6 {
                continue;
            }
            let mut f = [0.0; 4];
            g.field(amb, &p.coords, &mut f).unwrap();
            let pushed = atlas
                .transition_jac_mul(amb, &p.coords, S3_CAP, &f)
                .unwrap();
            let u = atlas.transition(&p, S3_CAP).unwrap();
            for i in 0..3 {
                assert!(
                    (pushed[i] + u.coords[i]).abs() < 1e-7,
                    "{pushed:?} vs {:?}",
                    u.coords
                );
            }
        }
    }
}
