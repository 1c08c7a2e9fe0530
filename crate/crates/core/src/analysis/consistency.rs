//! Derivative-consistency checks: central finite differences of a system's
//! evaluation map against its declared derivative.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::charts::{torus_reduce, Coords};
use crate::error::Result;
use crate::flows::{Flow, FlowSystem, MapSystem, SmoothSystem};
use crate::orbit::integrate::Engine;

/// Maximum relative mismatch between finite differences of the evaluation
/// and the declared derivative, over `n` random points and a few
/// directions. Flows compare the field; maps compare the map itself.
pub fn verify_derivative_consistency(
    sys: &SmoothSystem,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    match sys {
        SmoothSystem::Map(m) => map_consistency(m, n, rng),
        SmoothSystem::Flow(f) => flow_field_consistency(f, n, rng),
    }
}

fn map_consistency(map: &MapSystem, n: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
    let h = 1e-7;
    let dirs = [[1.0, 0.0], [0.0, 1.0], [0.6, -0.8]];
    let mut worst = 0.0f64;
    let apply = |p: &crate::charts::TorusPoint2| match map {
        MapSystem::Anosov(m) => m.apply(p),
        MapSystem::Da(m) => m.apply(p),
        MapSystem::Plykin(m) => m.cover().apply(p),
    };
    let jac_mul = |p: &crate::charts::TorusPoint2, v: [f64; 2]| match map {
        MapSystem::Anosov(m) => {
            let j = m.jacobian(p);
            [j[0][0] * v[0] + j[0][1] * v[1], j[1][0] * v[0] + j[1][1] * v[1]]
        }
        MapSystem::Da(m) => m.jacobian_mul(p, v),
        MapSystem::Plykin(m) => m.cover().jacobian_mul(p, v),
    };
    for _ in 0..n {
        let p = torus_reduce([rng.gen(), rng.gen()])?;
        for v in dirs {
            let pp = torus_reduce([p.x() + h * v[0], p.y() + h * v[1]])?;
            let pm = torus_reduce([p.x() - h * v[0], p.y() - h * v[1]])?;
            let d = apply(&pp).delta(&apply(&pm));
            let fd = [d[0] / (2.0 * h), d[1] / (2.0 * h)];
            let jv = jac_mul(&p, v);
            let scale = jv[0].hypot(jv[1]).max(1.0);
            worst = worst
                .max((fd[0] - jv[0]).abs() / scale)
                .max((fd[1] - jv[1]).abs() / scale);
        }
    }
    Ok(worst)
}

fn flow_field_consistency(sys: &FlowSystem, n: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..n {
        let p = sys.sample_point(rng);
        let chart = p.chart;
        let dim = chart.dim();
        for k in 0..dim {
            let mut v = Coords::zeros(dim);
            v[k] = 1.0;
            let mut yp = p.coords;
            let mut ym = p.coords;
            yp[k] += h;
            ym[k] -= h;
            let mut fp = Coords::zeros(dim);
            let mut fm = Coords::zeros(dim);
            if sys.field(chart, &yp, &mut fp).is_err() || sys.field(chart, &ym, &mut fm).is_err() {
                continue;
            }
            let mut jv = Coords::zeros(dim);
            sys.field_jac_mul(chart, &p.coords, &v, &mut jv)?;
            let scale = jv.norm().max(1.0);
            for i in 0..dim {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                worst = worst.max((fd - jv[i]).abs() / scale);
            }
        }
    }
    Ok(worst)
}

/// Compare the variational derivative of the time-T flow against finite
/// differences of the flow map over perturbed initial conditions. Returns
/// the maximum relative mismatch over the tangent basis.
pub fn flow_derivative_consistency(
    sys: &FlowSystem,
    x0: &crate::charts::ChartedPoint,
    t: f64,
    step: f64,
) -> Result<f64> {
    let dim = x0.chart.dim();
    let mut eng = Engine::new(sys, x0, step)?.with_identity_frame(dim);
    eng.collect_events = false;
    eng.advance(t)?;
    let end_chart = eng.chart;
    let h = 1e-6;
    let mut worst = 0.0f64;
    for k in 0..dim {
        let mut xp = *x0;
        let mut xm = *x0;
        xp.coords[k] += h;
        xm.coords[k] -= h;
        let mut ep = Engine::new(sys, &xp, step)?;
        let mut em = Engine::new(sys, &xm, step)?;
        ep.collect_events = false;
        em.collect_events = false;
        ep.advance(t)?;
        em.advance(t)?;
        if ep.chart != end_chart || em.chart != end_chart {
            // Perturbed orbits settled in a different chart; skip the
            // comparison for this direction.
            continue;
        }
        // Wrap-aware endpoint difference (torus coordinates may wrap).
        let diff = crate::orbit::finders::displacement(sys, end_chart, &em.y, &ep.y);
        let scale = eng.tangents[k].norm().max(1.0);
        for i in 0..dim {
            let fd = diff[i] / (2.0 * h);
            worst = worst.max((fd - eng.tangents[k][i]).abs() / scale);
        }
    }
    Ok(worst)
}
