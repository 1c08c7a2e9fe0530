//! Local periodic-orbit model on a solid ball: in cylinder coordinates the
//! field is (rho(1-rho), 1, -z), giving an attracting unit circle in the
//! z = 0 plane and a saddle-type equilibrium on the axis. Integration runs
//! in Cartesian coordinates where the axis equilibrium is an honest point.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::charts::{Atlas, Chart, ChartId, ChartedPoint, CylinderPoint, TangentVector, BALL3};
use crate::error::Result;
use crate::flows::Flow;

/// Default escape radius of the model ball.
pub const LEMMA1_BOUND: f64 = 2.6;

/// The model field in its cylinder frame: (rho(1-rho), 1, -z), negated when
/// time-reversed.
pub fn lemma1_field(c: &CylinderPoint, time_reversed: bool) -> TangentVector {
    let sign = if time_reversed { -1.0 } else { 1.0 };
    let rho = c.rho();
    let comps = [sign * rho * (1.0 - rho), sign, sign * -c.z()];
    let q = c.to_cartesian();
    TangentVector::new(ChartedPoint::new(BALL3, &q), &comps)
        .expect("cylinder frame components have chart dimension")
}

/// Cartesian form of the model field.
pub fn lemma1_cartesian(q: &[f64], sign: f64) -> [f64; 3] {
    let rho = q[0].hypot(q[1]);
    [
        sign * (q[0] * (1.0 - rho) - q[1]),
        sign * (q[1] * (1.0 - rho) + q[0]),
        sign * -q[2],
    ]
}

/// Cartesian Jacobian action of the model field.
pub fn lemma1_jac_mul(q: &[f64], v: &[f64], sign: f64) -> [f64; 3] {
    let rho = q[0].hypot(q[1]);
    let (dxx, dxy, dyx, dyy);
    if rho > 1e-300 {
        dxx = (1.0 - rho) - q[0] * q[0] / rho;
        dxy = -q[0] * q[1] / rho - 1.0;
        dyx = -q[0] * q[1] / rho + 1.0;
        dyy = (1.0 - rho) - q[1] * q[1] / rho;
    } else {
        dxx = 1.0;
        dxy = -1.0;
        dyx = 1.0;
        dyy = 1.0;
    }
    [
        sign * (dxx * v[0] + dxy * v[1]),
        sign * (dyx * v[0] + dyy * v[1]),
        sign * -v[2],
    ]
}

#[derive(Clone, Debug)]
pub struct Lemma1Flow {
    time_reversed: bool,
    atlas: Atlas,
}

impl Lemma1Flow {
    pub fn new(time_reversed: bool) -> Self {
        Lemma1Flow {
            time_reversed,
            atlas: Atlas::new(vec![Chart::bounded(BALL3, LEMMA1_BOUND)]),
        }
    }

    pub fn reversed(&self) -> Self {
        Lemma1Flow::new(!self.time_reversed)
    }

    pub fn time_reversed(&self) -> bool {
        self.time_reversed
    }

    fn sign(&self) -> f64 {
        if self.time_reversed {
            -1.0
        } else {
            1.0
        }
    }

    /// Closed-form solution from a cylinder start, for oracle tests: the
    /// radial part is logistic, the angle advances at unit speed, z decays.
    pub fn closed_form(&self, start: &CylinderPoint, t: f64) -> CylinderPoint {
        let t = self.sign() * t;
        let rho0 = start.rho();
        let rho = if rho0 == 0.0 {
            0.0
        } else {
            let a = (1.0 / rho0 - 1.0) * (-t).exp();
            1.0 / (1.0 + a)
        };
        CylinderPoint::new(rho, start.phi() + t, start.z() * (-t).exp())
            .expect("closed form stays finite")
    }
}

impl Flow for Lemma1Flow {
    fn atlas(&self) -> &Atlas {
        &self.atlas
    }

    fn entry_chart(&self) -> ChartId {
        BALL3
    }

    fn field(&self, _chart: ChartId, y: &[f64], out: &mut [f64]) -> Result<()> {
        out[..3].copy_from_slice(&lemma1_cartesian(y, self.sign()));
        Ok(())
    }

    fn field_jac_mul(&self, _chart: ChartId, y: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        out[..3].copy_from_slice(&lemma1_jac_mul(y, v, self.sign()));
        Ok(())
    }

    fn in_domain(&self, _chart: ChartId, y: &[f64]) -> bool {
        y.iter().map(|v| v * v).sum::<f64>().sqrt() <= LEMMA1_BOUND
    }

    fn sample_point(&self, rng: &mut ChaCha8Rng) -> ChartedPoint {
        loop {
            let q = [
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            ];
            if q.iter().map(|v| v * v).sum::<f64>().sqrt() < 2.0 {
                return ChartedPoint::new(BALL3, &q);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_is_invariant() {
        for phi in [0.0, 1.0, 2.0, 4.5] {
            let c = CylinderPoint::new(1.0, phi, 0.0).unwrap();
            let f = lemma1_field(&c, false);
            assert_eq!(f.components.as_ref(), &[0.0, 1.0, 0.0]);
        }
    }

    #[test]
    fn axis_field_and_reversal() {
        let c = CylinderPoint::new(0.0, 0.3, 0.0).unwrap();
        let f = lemma1_field(&c, false);
        assert_eq!(f.components.as_ref(), &[0.0, 1.0, 0.0]);
        let r = lemma1_field(&c, true);
        assert_eq!(r.components.as_ref(), &[0.0, -1.0, 0.0]);
    }

    #[test]
    fn transverse_linearization_closed_forms() {
        // d/drho [rho(1-rho)] = 1 - 2 rho: +1 on the axis, -1 on the circle;
        // d/dz [-z] = -1 everywhere.
        let radial = |rho: f64| 1.0 - 2.0 * rho;
        assert_eq!(radial(0.0), 1.0);
        assert_eq!(radial(1.0), -1.0);
    }

    #[test]
    fn cartesian_jacobian_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let h = 1e-6;
        for _ in 0..1000 {
            let q = [
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            ];
            for v in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.3, -0.4, 0.5]] {
                let qp = [q[0] + h * v[0], q[1] + h * v[1], q[2] + h * v[2]];
                let qm = [q[0] - h * v[0], q[1] - h * v[1], q[2] - h * v[2]];
                let fp = lemma1_cartesian(&qp, 1.0);
                let fm = lemma1_cartesian(&qm, 1.0);
                let jv = lemma1_jac_mul(&q, &v, 1.0);
                for i in 0..3 {
                    let fd = (fp[i] - fm[i]) / (2.0 * h);
                    assert!((fd - jv[i]).abs() < 1e-5, "{fd} vs {}", jv[i]);
                }
            }
        }
    }

    #[test]
    fn closed_form_solves_the_field() {
        let flow = Lemma1Flow::new(false);
        let start = CylinderPoint::new(0.3, 0.2, 0.4).unwrap();
        let h = 1e-6;
        let a = flow.closed_form(&start, -h).to_cartesian();
        let b = flow.closed_form(&start, h).to_cartesian();
        let f = lemma1_cartesian(&start.to_cartesian(), 1.0);
        for i in 0..3 {
            let fd = (b[i] - a[i]) / (2.0 * h);
            assert!((fd - f[i]).abs() < 1e-6);
        }
    }
}
