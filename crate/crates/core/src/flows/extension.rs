//! Latitude extension to the next sphere: the base manifold becomes the
//! equator of a sphere one dimension up. The extended field keeps the base
//! dynamics on the equator (damped by cos^2 of latitude off it), pushes
//! every off-equator point back with meridional speed -sin(2*latitude), and
//! turns both poles into hyperbolic sources with linearization rate +2.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::charts::{Atlas, Chart, ChartId, ChartedPoint, Coords, MAX_DIM};
use crate::error::{CoreError, Result};
use crate::flows::{Flow, FlowSystem, SeamSpec};

/// Meridional profile and its latitude derivative.
pub fn meridional_speed(lat: f64) -> f64 {
    -(2.0 * lat).sin()
}

pub fn meridional_rate(lat: f64) -> f64 {
    -2.0 * (2.0 * lat).cos()
}

#[derive(Clone, Debug)]
pub struct ExtendedFlow {
    base: Box<FlowSystem>,
    atlas: Atlas,
}

impl ExtendedFlow {
    pub fn new(base: FlowSystem) -> Result<Self> {
        let charts: Vec<Chart> = base
            .atlas()
            .charts()
            .iter()
            .map(|c| Chart {
                id: c.id.extended(),
                bound: c.bound,
                quotient: c.quotient,
            })
            .collect();
        for c in &charts {
            if c.id.dim() > MAX_DIM {
                return Err(CoreError::Config(format!(
                    "extension of chart {} exceeds the supported dimension {MAX_DIM}",
                    c.id
                )));
            }
        }
        let atlas = Atlas::new(charts);
        Ok(ExtendedFlow {
            base: Box::new(base),
            atlas,
        })
    }

    pub fn base(&self) -> &FlowSystem {
        &self.base
    }

    /// Latitude linearization rate at the two poles; positive means both
    /// poles are sources. All tangent directions at a pole are meridional,
    /// so this is the full spectrum there.
    pub fn pole_rates(&self) -> (f64, f64) {
        let half_pi = std::f64::consts::FRAC_PI_2;
        (meridional_rate(half_pi), meridional_rate(-half_pi))
    }

    /// Latitude damping of the base field.
    fn damp(lat: f64) -> f64 {
        let c = lat.cos();
        c * c
    }
}

impl Flow for ExtendedFlow {
    fn atlas(&self) -> &Atlas {
        &self.atlas
    }

    fn entry_chart(&self) -> ChartId {
        self.base.entry_chart().extended()
    }

    fn field(&self, chart: ChartId, y: &[f64], out: &mut [f64]) -> Result<()> {
        let nb = chart.dim() - 1;
        let lat = y[nb];
        self.base.field(chart.base_of(), &y[..nb], &mut out[..nb])?;
        let damp = Self::damp(lat);
        for v in &mut out[..nb] {
            *v *= damp;
        }
        out[nb] = meridional_speed(lat);
        Ok(())
    }

    fn field_jac_mul(&self, chart: ChartId, y: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        let nb = chart.dim() - 1;
        let lat = y[nb];
        let vl = v[nb];
        self.base
            .field_jac_mul(chart.base_of(), &y[..nb], &v[..nb], &mut out[..nb])?;
        let damp = Self::damp(lat);
        // d(damp)/dlat = -sin(2 lat)
        let ddamp = -(2.0 * lat).sin();
        let mut base_field = Coords::zeros(nb);
        self.base
            .field(chart.base_of(), &y[..nb], &mut base_field)?;
        for i in 0..nb {
            out[i] = damp * out[i] + ddamp * vl * base_field[i];
        }
        out[nb] = meridional_rate(lat) * vl;
        Ok(())
    }

    fn seam(&self, chart: ChartId) -> Option<SeamSpec> {
        self.base.seam(chart.base_of())
    }

    fn seam_map(&self, chart: ChartId, y: &[f64]) -> Result<Coords> {
        let nb = chart.dim() - 1;
        let mut out = self.base.seam_map(chart.base_of(), &y[..nb])?;
        out.push(y[nb]);
        Ok(out)
    }

    fn seam_jac_mul(&self, chart: ChartId, y: &[f64], v: &[f64]) -> Result<Coords> {
        let nb = chart.dim() - 1;
        let mut out = self.base.seam_jac_mul(chart.base_of(), &y[..nb], &v[..nb])?;
        out.push(v[nb]);
        Ok(out)
    }

    fn reduce(&self, chart: ChartId, y: &mut [f64], tangents: &mut [Coords]) {
        let nb = chart.dim() - 1;
        // Split tangent columns into base blocks, reduce, and reassemble.
        let mut base_tangents: Vec<Coords> = tangents
            .iter()
            .map(|c| Coords::from_slice(&c[..nb]))
            .collect();
        self.base
            .reduce(chart.base_of(), &mut y[..nb], &mut base_tangents);
        for (col, base) in tangents.iter_mut().zip(&base_tangents) {
            col[..nb].copy_from_slice(base);
        }
    }

    fn handoff(&self, chart: ChartId, y: &[f64]) -> Option<ChartId> {
        let nb = chart.dim() - 1;
        self.base
            .handoff(chart.base_of(), &y[..nb])
            .map(|c| c.extended())
    }

    fn in_domain(&self, chart: ChartId, y: &[f64]) -> bool {
        let nb = chart.dim() - 1;
        y[nb].abs() < std::f64::consts::FRAC_PI_2 && self.base.in_domain(chart.base_of(), &y[..nb])
    }

    fn sample_point(&self, rng: &mut ChaCha8Rng) -> ChartedPoint {
        let base = self.base.sample_point(rng);
        let mut coords = base.coords;
        coords.push(rng.gen_range(-1.2..1.2));
        ChartedPoint {
            chart: base.chart.extended(),
            coords,
        }
    }
}

/// Extend a flow on S^{n-1} (or any base manifold) to the sphere one
/// dimension up, with the base as an attracting invariant equator.
pub fn extend_to_next_sphere(base: FlowSystem) -> Result<FlowSystem> {
    Ok(FlowSystem::Extended(ExtendedFlow::new(base)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::gradient::GradientSphereFlow;
    use rand::SeedableRng;

    fn extended_gradient() -> ExtendedFlow {
        let base = FlowSystem::Gradient(GradientSphereFlow::new(2).unwrap());
        ExtendedFlow::new(base).unwrap()
    }

    #[test]
    fn equator_meridional_component_is_exactly_zero() {
        let ext = extended_gradient();
        let chart = ext.entry_chart();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10_000 {
            let base = ext.base().sample_point(&mut rng);
            let mut y = base.coords;
            y.push(0.0);
            let mut out = Coords::zeros(chart.dim());
            ext.field(chart, &y, &mut out).unwrap();
            assert_eq!(out[chart.dim() - 1], 0.0);
        }
    }

    #[test]
    fn equator_restriction_is_the_base_field() {
        let ext = extended_gradient();
        let chart = ext.entry_chart();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..100 {
            let base = ext.base().sample_point(&mut rng);
            let mut y = base.coords;
            y.push(0.0);
            let mut out = Coords::zeros(chart.dim());
            ext.field(chart, &y, &mut out).unwrap();
            let mut expect = Coords::zeros(chart.dim() - 1);
            ext.base()
                .field(base.chart, &base.coords, &mut expect)
                .unwrap();
            for i in 0..expect.len() {
                assert_eq!(out[i], expect[i]);
            }
        }
    }

    #[test]
    fn poles_are_sources_with_rate_two() {
        let ext = extended_gradient();
        let (n, s) = ext.pole_rates();
        assert!((n - 2.0).abs() < 1e-14);
        assert!((s - 2.0).abs() < 1e-14);
        // Damping vanishes at the poles, so the meridional rate is the
        // whole linearization.
        let half_pi = std::f64::consts::FRAC_PI_2;
        assert!(ExtendedFlow::damp(half_pi) < 1e-30);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let ext = extended_gradient();
        let chart = ext.entry_chart();
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let h = 1e-6;
        let dim = chart.dim();
        for _ in 0..200 {
            let p = ext.sample_point(&mut rng);
            for k in 0..dim {
                let mut v = Coords::zeros(dim);
                v[k] = 1.0;
                let mut yp = p.coords;
                let mut ym = p.coords;
                yp[k] += h;
                ym[k] -= h;
                let mut fp = Coords::zeros(dim);
                let mut fm = Coords::zeros(dim);
                ext.field(chart, &yp, &mut fp).unwrap();
                ext.field(chart, &ym, &mut fm).unwrap();
                let mut jv = Coords::zeros(dim);
                ext.field_jac_mul(chart, &p.coords, &v, &mut jv).unwrap();
                for i in 0..dim {
                    let fd = (fp[i] - fm[i]) / (2.0 * h);
                    assert!((fd - jv[i]).abs() < 1e-5, "{fd} vs {}", jv[i]);
                }
            }
        }
    }
}
