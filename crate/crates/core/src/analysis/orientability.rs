//! Orientability of the unstable bundle along an orbit, tested by the sign
//! of the dominant tangent direction at near-returns.
//!
//! The orbit is sampled at seam crossings (the natural section of a
//! suspension-backed system); every sample stores the base point and the
//! base projection of the leading tangent direction. At each return within
//! epsilon of a stored point the directions are compared after transporting
//! across the identification branch (the involution flips base tangents).
//! One reliable reversal certifies non-orientability; one hundred reliable
//! returns with none certify orientability.

use serde::Serialize;

use crate::charts::ChartedPoint;
use crate::error::{CoreError, Result};
use crate::flows::{Flow, FlowSystem};
use crate::orbit::integrate::Engine;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Orientable,
    NonOrientable,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrientabilityVerdict {
    pub verdict: Verdict,
    pub return_count: usize,
    pub reversal_count: usize,
    /// Smallest return distances observed (up to five).
    pub closest_returns: Vec<f64>,
    pub epsilon: f64,
    pub samples: usize,
}

/// Alignment threshold for a reliable return.
const MIN_ALIGNMENT: f64 = 0.9;
/// Returns required to certify orientability.
const RETURNS_FOR_ORIENTABLE: usize = 100;

/// Track the dominant tangent direction along the orbit of `x0` and compare
/// its sign at near-returns.
pub fn orientability_test(
    sys: &FlowSystem,
    x0: &ChartedPoint,
    total_time: f64,
    epsilon: f64,
    transient: f64,
    step: f64,
) -> Result<OrientabilityVerdict> {
    let chart = x0.chart;
    if sys.seam(chart).is_none() {
        return Err(CoreError::InvalidInput(
            "orientability test expects a suspension-backed system (seam section)".into(),
        ));
    }
    let mut eng = Engine::new(sys, x0, step)?.with_identity_frame(1);
    // Seed the tangent with a generic direction so power iteration converges
    // to the unstable direction.
    eng.tangents[0][0] = 0.6;
    eng.tangents[0][1] = 0.8;
    if chart.dim() > 2 {
        eng.tangents[0][2] = 0.0;
    }
    eng.collect_events = true;

    // Discard the transient.
    let mut t = 0.0;
    while t < transient {
        eng.advance(1.0_f64.min(transient - t))?;
        t = eng.t;
        eng.renormalize();
    }
    eng.events.clear();

    let atlas = sys.atlas();
    let quotient = atlas.get(chart)?.quotient;

    let mut stored: Vec<([f64; 2], [f64; 2])> = Vec::new();
    let mut returns = 0usize;
    let mut reversals = 0usize;
    let mut closest: Vec<f64> = Vec::new();

    let t_end = transient + total_time;
    while eng.t < t_end {
        let before = eng.events.len();
        eng.advance(1.0_f64.min(t_end - eng.t))?;
        eng.renormalize();
        let crossed = eng.events[before..]
            .iter()
            .any(|(_, e)| matches!(e, crate::orbit::OrbitEvent::SeamCrossing { .. }));
        eng.events.clear();
        if !crossed {
            continue;
        }
        // Sample at the section: base point and base direction of the
        // leading tangent.
        let base = [eng.y[0], eng.y[1]];
        let v = &eng.tangents[0];
        let vb = [v[0], v[1]];
        let vn = vb[0].hypot(vb[1]);
        if vn < 1e-12 {
            continue;
        }
        let dir = [vb[0] / vn, vb[1] / vn];

        for (p, d) in &stored {
            let dist = if quotient {
                crate::charts::torus_reduce([p[0], p[1]])
                    .unwrap()
                    .dist_quotient(&crate::charts::torus_reduce([base[0], base[1]]).unwrap())
            } else {
                crate::charts::torus_reduce([p[0], p[1]])
                    .unwrap()
                    .dist(&crate::charts::torus_reduce([base[0], base[1]]).unwrap())
            };
            if dist < epsilon {
                let sign = atlas.branch_sign(chart, p, &[base[0], base[1]]);
                let cos = sign * (d[0] * dir[0] + d[1] * dir[1]);
                if cos.abs() > MIN_ALIGNMENT {
                    returns += 1;
                    if cos < 0.0 {
                        reversals += 1;
                    }
                }
                closest.push(dist);
            }
        }
        closest.sort_by(|a, b| a.partial_cmp(b).unwrap());
        closest.truncate(5);
        stored.push((base, dir));
    }

    let verdict = if reversals >= 1 {
        Verdict::NonOrientable
    } else if returns >= RETURNS_FOR_ORIENTABLE {
        Verdict::Orientable
    } else {
        Verdict::Inconclusive
    };

    Ok(OrientabilityVerdict {
        verdict,
        return_count: returns,
        reversal_count: reversals,
        closest_returns: closest,
        epsilon,
        samples: stored.len(),
    })
}
