//! Classical fixed-step 4th-order integration with exact hybrid handling of
//! mapping-torus seams: the step is split at the seam by a root solve, the
//! map and its derivative are applied as a discrete event (with the
//! saltation correction for non-constant fields), and chart handoffs happen
//! inside overlaps after a step settles.

use crate::charts::{ChartId, ChartedPoint, Coords, MAX_DIM};
use crate::error::{CoreError, Result};
use crate::flows::{Flow, FlowSystem};
use crate::orbit::{OrbitEvent, OrbitRecord, TangentFrameHistory};

/// Default integrator step.
pub const DEFAULT_STEP: f64 = 1e-3;
/// Default tangent renormalization interval.
pub const DEFAULT_RENORM: f64 = 1.0;

const SEAM_BISECTIONS: usize = 64;
const TANGENT_OVERFLOW: f64 = 1e250;
const TIME_EPS: f64 = 1e-10;

/// Integration engine holding the hybrid state; analyses drive it directly
/// when they need streaming access.
pub struct Engine<'a> {
    sys: &'a FlowSystem,
    pub chart: ChartId,
    pub y: Coords,
    pub t: f64,
    pub step: f64,
    pub tangents: Vec<Coords>,
    /// Cumulative log growth per tangent column (updated at renormalize).
    pub log_growth: Vec<f64>,
    pub events: Vec<(f64, OrbitEvent)>,
    pub collect_events: bool,
}

impl<'a> Engine<'a> {
    pub fn new(sys: &'a FlowSystem, x0: &ChartedPoint, step: f64) -> Result<Self> {
        if step <= 0.0 || !step.is_finite() {
            return Err(CoreError::InvalidInput(format!("step must be positive, got {step}")));
        }
        if !sys.atlas().contains(x0.chart) {
            return Err(CoreError::UnknownChart { chart: x0.chart });
        }
        if !sys.in_domain(x0.chart, &x0.coords) {
            return Err(CoreError::Escape {
                time: 0.0,
                chart: x0.chart,
                coords: x0.coords.to_vec(),
            });
        }
        Ok(Engine {
            sys,
            chart: x0.chart,
            y: x0.coords,
            t: 0.0,
            step,
            tangents: Vec::new(),
            log_growth: Vec::new(),
            events: Vec::new(),
            collect_events: true,
        })
    }

    /// Attach an identity tangent frame of `n` columns.
    pub fn with_identity_frame(mut self, n: usize) -> Self {
        let dim = self.chart.dim();
        assert!(n <= dim);
        self.tangents = (0..n)
            .map(|j| {
                let mut c = Coords::zeros(dim);
                c[j] = 1.0;
                c
            })
            .collect();
        self.log_growth = vec![0.0; n];
        self
    }

    pub fn point(&self) -> ChartedPoint {
        ChartedPoint {
            chart: self.chart,
            coords: self.y,
        }
    }

    fn field(&self, chart: ChartId, y: &[f64]) -> Result<Coords> {
        let mut out = Coords::zeros(chart.dim());
        self.sys.field(chart, y, &mut out)?;
        Ok(out)
    }

    /// One RK4 step of the point from `y`, no tangents, no side effects.
    fn rk4_point(&self, y: &Coords, h: f64) -> Result<Coords> {
        let dim = y.len();
        let k1 = self.field(self.chart, y)?;
        let mut ys = *y;
        for i in 0..dim {
            ys[i] = y[i] + 0.5 * h * k1[i];
        }
        let k2 = self.field(self.chart, &ys)?;
        for i in 0..dim {
            ys[i] = y[i] + 0.5 * h * k2[i];
        }
        let k3 = self.field(self.chart, &ys)?;
        for i in 0..dim {
            ys[i] = y[i] + h * k3[i];
        }
        let k4 = self.field(self.chart, &ys)?;
        let mut out = *y;
        for i in 0..dim {
            out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        Ok(out)
    }

    /// One joint RK4 step of point and tangent columns (variational staging,
    /// which is the exact derivative of the point step).
    fn rk4_joint(&self, h: f64) -> Result<(Coords, [Coords; MAX_DIM])> {
        let dim = self.y.len();
        let ncols = self.tangents.len();
        let mut vout = [Coords::zeros(0); MAX_DIM];
        if ncols == 0 {
            return Ok((self.rk4_point(&self.y, h)?, vout));
        }
        let jac = |yy: &Coords, v: &Coords| -> Result<Coords> {
            let mut out = Coords::zeros(dim);
            self.sys.field_jac_mul(self.chart, yy, v, &mut out)?;
            Ok(out)
        };

        let k1 = self.field(self.chart, &self.y)?;
        let mut kv1 = [Coords::zeros(0); MAX_DIM];
        for j in 0..ncols {
            kv1[j] = jac(&self.y, &self.tangents[j])?;
        }

        let mut ys = self.y;
        for i in 0..dim {
            ys[i] = self.y[i] + 0.5 * h * k1[i];
        }
        let k2 = self.field(self.chart, &ys)?;
        let mut kv2 = [Coords::zeros(0); MAX_DIM];
        for j in 0..ncols {
            let mut vs = self.tangents[j];
            for i in 0..dim {
                vs[i] += 0.5 * h * kv1[j][i];
            }
            kv2[j] = jac(&ys, &vs)?;
        }

        for i in 0..dim {
            ys[i] = self.y[i] + 0.5 * h * k2[i];
        }
        let k3 = self.field(self.chart, &ys)?;
        let mut kv3 = [Coords::zeros(0); MAX_DIM];
        for j in 0..ncols {
            let mut vs = self.tangents[j];
            for i in 0..dim {
                vs[i] += 0.5 * h * kv2[j][i];
            }
            kv3[j] = jac(&ys, &vs)?;
        }

        for i in 0..dim {
            ys[i] = self.y[i] + h * k3[i];
        }
        let k4 = self.field(self.chart, &ys)?;
        let mut kv4 = [Coords::zeros(0); MAX_DIM];
        for j in 0..ncols {
            let mut vs = self.tangents[j];
            for i in 0..dim {
                vs[i] += h * kv3[j][i];
            }
            kv4[j] = jac(&ys, &vs)?;
        }

        let mut yout = self.y;
        for i in 0..dim {
            yout[i] = self.y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        for j in 0..ncols {
            let mut v = self.tangents[j];
            for i in 0..dim {
                v[i] += h / 6.0 * (kv1[j][i] + 2.0 * kv2[j][i] + 2.0 * kv3[j][i] + kv4[j][i]);
            }
            vout[j] = v;
        }
        Ok((yout, vout))
    }

    /// Apply the seam jump at the current state, with the saltation
    /// correction that makes tangent transport the exact derivative of the
    /// hybrid flow when the field differs across the jump.
    fn fire_seam(&mut self) -> Result<()> {
        let seam = self.sys.seam(self.chart).expect("caller checked seam");
        let f_minus = self.field(self.chart, &self.y)?;
        if f_minus[seam.coord].abs() < 1e-9 {
            return Err(CoreError::NoConvergence(
                "flow tangent to the seam surface".into(),
            ));
        }
        let y_pre = self.y;
        let y_post = self.sys.seam_map(self.chart, &y_pre)?;
        let f_plus = self.field(self.chart, &y_post)?;
        let jf_minus = self.sys.seam_jac_mul(self.chart, &y_pre, &f_minus)?;
        let ncols = self.tangents.len();
        for j in 0..ncols {
            let v = self.tangents[j];
            let jv = self.sys.seam_jac_mul(self.chart, &y_pre, &v)?;
            let scale = v[seam.coord] / f_minus[seam.coord];
            let mut out = jv;
            for i in 0..out.len() {
                out[i] += (f_plus[i] - jf_minus[i]) * scale;
            }
            self.tangents[j] = out;
        }
        self.y = y_post;
        if self.collect_events {
            self.events
                .push((self.t, OrbitEvent::SeamCrossing { chart: self.chart }));
        }
        Ok(())
    }

    fn settle(&mut self) -> Result<()> {
        self.sys.reduce(self.chart, &mut self.y, &mut self.tangents);
        if let Some(target) = self.sys.handoff(self.chart, &self.y) {
            let new = self
                .sys
                .atlas()
                .transition_coords(self.chart, &self.y, target)?;
            let mut new_tangents = Vec::with_capacity(self.tangents.len());
            for col in &self.tangents {
                new_tangents.push(self.sys.atlas().transition_jac_mul(
                    self.chart,
                    &self.y,
                    target,
                    col,
                )?);
            }
            if self.collect_events {
                self.events.push((
                    self.t,
                    OrbitEvent::ChartSwitch {
                        from: self.chart,
                        to: target,
                    },
                ));
            }
            self.chart = target;
            self.y = new;
            self.tangents = new_tangents;
            self.sys.reduce(self.chart, &mut self.y, &mut self.tangents);
        }
        if !self.sys.in_domain(self.chart, &self.y) {
            return Err(CoreError::Escape {
                time: self.t,
                chart: self.chart,
                coords: self.y.to_vec(),
            });
        }
        for col in &self.tangents {
            if !col.iter().all(|v| v.is_finite()) || col.norm() > TANGENT_OVERFLOW {
                return Err(CoreError::NumericalOverflow);
            }
        }
        Ok(())
    }

    /// Advance by `dt`, splitting steps exactly at seam crossings. Calls
    /// `on_step` after every settled state (including seam landings).
    pub fn advance_with<F: FnMut(&Engine)>(&mut self, dt: f64, mut on_step: F) -> Result<()> {
        let target = self.t + dt;
        while self.t < target - TIME_EPS {
            // A state sitting on the seam surface jumps before flowing on.
            if let Some(seam) = self.sys.seam(self.chart) {
                if seam.crossed(self.y[seam.coord]) {
                    self.fire_seam()?;
                    self.settle()?;
                    on_step(self);
                    continue;
                }
            }
            let h = self.step.min(target - self.t);
            let (y_new, v_new) = self.rk4_joint(h)?;
            if let Some(seam) = self.sys.seam(self.chart) {
                if seam.crossed(y_new[seam.coord]) {
                    // Root-solve the sub-step landing on the seam surface.
                    let mut lo = 0.0;
                    let mut hi = h;
                    for _ in 0..SEAM_BISECTIONS {
                        let mid = 0.5 * (lo + hi);
                        let ym = self.rk4_point(&self.y, mid)?;
                        if seam.crossed(ym[seam.coord]) {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                        if hi - lo < 1e-16 * h.max(1e-3) {
                            break;
                        }
                    }
                    let h_star = hi;
                    let (mut y_land, v_land) = self.rk4_joint(h_star)?;
                    // Pin the seam coordinate onto the surface.
                    y_land[seam.coord] = seam.value;
                    self.y = y_land;
                    for j in 0..self.tangents.len() {
                        self.tangents[j] = v_land[j];
                    }
                    self.t += h_star;
                    self.fire_seam()?;
                    self.settle()?;
                    on_step(self);
                    continue;
                }
            }
            self.y = y_new;
            for j in 0..self.tangents.len() {
                self.tangents[j] = v_new[j];
            }
            self.t += h;
            self.settle()?;
            on_step(self);
        }
        // Pin the clock to the requested target (the loop stops within time
        // rounding of it) so callers can iterate advances without drift.
        self.t = target;
        // Deterministic endpoint convention: an advance ending within time
        // rounding of the seam surface lands on it and takes the jump, so
        // integer-time suspension flows reproduce exact map iterates.
        if let Some(seam) = self.sys.seam(self.chart) {
            if (self.y[seam.coord] - seam.value).abs() <= 1e-9 {
                self.y[seam.coord] = seam.value;
                self.fire_seam()?;
                self.settle()?;
                on_step(self);
            }
        }
        Ok(())
    }

    pub fn advance(&mut self, dt: f64) -> Result<()> {
        self.advance_with(dt, |_| {})
    }

    /// Modified Gram-Schmidt on the tangent columns; accumulates and
    /// returns the per-direction log norms of this interval.
    pub fn renormalize(&mut self) -> Vec<f64> {
        let n = self.tangents.len();
        let mut logs = vec![0.0; n];
        for j in 0..n {
            for k in 0..j {
                let prev = self.tangents[k];
                let dot: f64 = self.tangents[j]
                    .iter()
                    .zip(prev.iter())
                    .map(|(a, b)| a * b)
                    .sum();
                for i in 0..self.tangents[j].len() {
                    self.tangents[j][i] -= dot * prev[i];
                }
            }
            let norm = self.tangents[j].norm();
            logs[j] = norm.ln();
            self.log_growth[j] += logs[j];
            if norm > 0.0 {
                for v in self.tangents[j].iter_mut() {
                    *v /= norm;
                }
            }
        }
        logs
    }
}

/// Integrate for time `t_end`, recording every settled step.
pub fn integrate(
    sys: &FlowSystem,
    x0: &ChartedPoint,
    t_end: f64,
    step: f64,
) -> Result<OrbitRecord> {
    let mut eng = Engine::new(sys, x0, step)?;
    let mut times = vec![0.0];
    let mut points = vec![*x0];
    eng.advance_with(t_end, |e| {
        times.push(e.t);
        points.push(e.point());
    })?;
    Ok(OrbitRecord {
        times,
        points,
        events: eng.events,
    })
}

/// Integrate with a full orthonormal tangent frame, renormalizing every
/// `renorm_interval` and accumulating per-direction log growth. The orbit is
/// recorded at the renormalization instants.
pub fn integrate_with_tangent(
    sys: &FlowSystem,
    x0: &ChartedPoint,
    t_end: f64,
    step: f64,
    renorm_interval: f64,
) -> Result<(OrbitRecord, TangentFrameHistory)> {
    if renorm_interval <= 0.0 {
        return Err(CoreError::InvalidInput(
            "renormalization interval must be positive".into(),
        ));
    }
    let dim = x0.chart.dim();
    let mut eng = Engine::new(sys, x0, step)?.with_identity_frame(dim);
    eng.collect_events = false;
    let mut times = vec![0.0];
    let mut points = vec![*x0];
    let mut history = TangentFrameHistory {
        times: vec![0.0],
        frames: vec![eng.tangents.clone()],
        log_growth: vec![vec![0.0; dim]],
    };
    let mut t = 0.0;
    while t < t_end - TIME_EPS {
        let dt = renorm_interval.min(t_end - t);
        eng.advance(dt)?;
        t = eng.t;
        eng.renormalize();
        times.push(t);
        points.push(eng.point());
        history.times.push(t);
        history.frames.push(eng.tangents.clone());
        history.log_growth.push(eng.log_growth.clone());
    }
    Ok((
        OrbitRecord {
            times,
            points,
            events: eng.events,
        },
        history,
    ))
}

/// Endpoint of the time-`t_end` flow.
pub fn flow_map(
    sys: &FlowSystem,
    x0: &ChartedPoint,
    t_end: f64,
    step: f64,
) -> Result<ChartedPoint> {
    let mut eng = Engine::new(sys, x0, step)?;
    eng.collect_events = false;
    eng.advance(t_end)?;
    Ok(eng.point())
}
