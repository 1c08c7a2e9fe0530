//! Unit-roof suspension of a torus map: the fiber advances at unit speed and
//! the base jumps by the map at the seam.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::charts::{
    torus_reduce, Atlas, Chart, ChartId, ChartedPoint, Coords, MAPTORUS, MAPTORUS_QUOT,
};
use crate::error::Result;
use crate::flows::{Flow, FlowSystem, MapSystem, SeamSpec};
use crate::maps::CoverMap;

/// Suspension flow over a torus map. Quotient suspensions keep double-cover
/// coordinates; the identification only matters for comparisons.
#[derive(Clone, Debug)]
pub struct SuspensionFlow {
    map: CoverMap,
    chart: ChartId,
    atlas: Atlas,
}

impl SuspensionFlow {
    pub fn new(map: CoverMap, quotient: bool) -> Self {
        Self::with_chart(map, quotient, if quotient { MAPTORUS_QUOT } else { MAPTORUS })
    }

    pub fn with_chart(map: CoverMap, quotient: bool, chart: ChartId) -> Self {
        let mut c = Chart::plain(chart);
        c.quotient = quotient;
        SuspensionFlow {
            map,
            chart,
            atlas: Atlas::new(vec![c]),
        }
    }

    pub fn map(&self) -> &CoverMap {
        &self.map
    }

    pub fn chart(&self) -> ChartId {
        self.chart
    }

    pub fn quotient(&self) -> bool {
        self.atlas.get(self.chart).map(|c| c.quotient).unwrap_or(false)
    }

    pub(crate) fn seam_map_inverse(&self, _chart: ChartId, y: &[f64]) -> Result<Coords> {
        let p = torus_reduce([y[0], y[1]])?;
        let img = self.map.apply_inverse(&p);
        let mut out = Coords::from_slice(y);
        out[0] = img.x();
        out[1] = img.y();
        out[2] = 1.0;
        Ok(out)
    }

    pub(crate) fn seam_jac_mul_inverse(&self, _chart: ChartId, y: &[f64], v: &[f64]) -> Result<Coords> {
        let p = torus_reduce([y[0], y[1]])?;
        let jv = self.map.jacobian_inverse_mul(&p, [v[0], v[1]]);
        let mut out = Coords::from_slice(v);
        out[0] = jv[0];
        out[1] = jv[1];
        Ok(out)
    }
}

impl Flow for SuspensionFlow {
    fn atlas(&self) -> &Atlas {
        &self.atlas
    }

    fn entry_chart(&self) -> ChartId {
        self.chart
    }

    fn field(&self, _chart: ChartId, _y: &[f64], out: &mut [f64]) -> Result<()> {
        out[0] = 0.0;
        out[1] = 0.0;
        out[2] = 1.0;
        Ok(())
    }

    fn field_jac_mul(&self, _chart: ChartId, _y: &[f64], _v: &[f64], out: &mut [f64]) -> Result<()> {
        out[..3].fill(0.0);
        Ok(())
    }

    fn seam(&self, _chart: ChartId) -> Option<SeamSpec> {
        Some(SeamSpec {
            coord: 2,
            value: 1.0,
            upward: true,
        })
    }

    fn seam_map(&self, _chart: ChartId, y: &[f64]) -> Result<Coords> {
        let p = torus_reduce([y[0], y[1]])?;
        let img = self.map.apply(&p);
        Ok(Coords::from_slice(&[img.x(), img.y(), 0.0]))
    }

    fn seam_jac_mul(&self, _chart: ChartId, y: &[f64], v: &[f64]) -> Result<Coords> {
        let p = torus_reduce([y[0], y[1]])?;
        let jv = self.map.jacobian_mul(&p, [v[0], v[1]]);
        Ok(Coords::from_slice(&[jv[0], jv[1], v[2]]))
    }

    fn sample_point(&self, rng: &mut ChaCha8Rng) -> ChartedPoint {
        ChartedPoint::new(
            self.chart,
            &[rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()],
        )
    }
}

/// Build the suspension flow of a map system.
pub fn suspension_flow(map_system: &MapSystem) -> FlowSystem {
    let (map, quotient) = match map_system {
        MapSystem::Anosov(m) => (CoverMap::Anosov(*m), false),
        MapSystem::Da(m) => (CoverMap::Da(m.clone()), false),
        MapSystem::Plykin(m) => (CoverMap::Da(m.cover().clone()), true),
    };
    FlowSystem::Suspension(SuspensionFlow::new(map, quotient))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::AnosovMap;

    #[test]
    fn field_is_vertical() {
        let s = SuspensionFlow::new(CoverMap::Anosov(AnosovMap::new(1).unwrap()), false);
        let mut out = [9.0; 3];
        s.field(MAPTORUS, &[0.3, 0.7, 0.5], &mut out).unwrap();
        assert_eq!(out, [0.0, 0.0, 1.0]);
    }

    #[test]
    fn seam_applies_map_and_jacobian() {
        let m = AnosovMap::new(1).unwrap();
        let s = SuspensionFlow::new(CoverMap::Anosov(m), false);
        let y = [0.3, 0.7, 1.0];
        let img = s.seam_map(MAPTORUS, &y).unwrap();
        let expect = m.apply(&torus_reduce([0.3, 0.7]).unwrap());
        assert_eq!(img[0], expect.x());
        assert_eq!(img[1], expect.y());
        assert_eq!(img[2], 0.0);
        let jv = s.seam_jac_mul(MAPTORUS, &y, &[1.0, 0.0, 0.5]).unwrap();
        assert_eq!(jv.as_ref(), &[2.0, 1.0, 0.5]);
    }
}
