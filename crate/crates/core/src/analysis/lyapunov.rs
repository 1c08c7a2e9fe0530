//! Lyapunov spectrum from time-averaged Gram-Schmidt log factors.

use serde::Serialize;

use crate::charts::ChartedPoint;
use crate::error::{CoreError, Result};
use crate::flows::FlowSystem;
use crate::orbit::integrate::{integrate_with_tangent, DEFAULT_RENORM};

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumEstimate {
    /// Exponents in descending order.
    pub exponents: Vec<f64>,
    /// Variance of the per-window rates, same order as `exponents`.
    pub window_variance: Vec<f64>,
    pub total_time: f64,
    pub windows: usize,
}

/// Estimate the Lyapunov spectrum along the orbit of `x0`.
///
/// The tangent frame is renormalized once per unit time; the run is split
/// into `windows` windows whose rate variance is the convergence
/// diagnostic.
pub fn lyapunov_spectrum(
    sys: &FlowSystem,
    x0: &ChartedPoint,
    total_time: f64,
    windows: usize,
    step: f64,
) -> Result<SpectrumEstimate> {
    if windows < 2 {
        return Err(CoreError::InvalidInput("need at least 2 windows".into()));
    }
    if total_time < windows as f64 {
        return Err(CoreError::InvalidInput(
            "total time too short for the requested windows".into(),
        ));
    }
    let (_, history) = integrate_with_tangent(sys, x0, total_time, step, DEFAULT_RENORM)?;
    let dim = history.dims();
    let n = history.times.len();
    if n < windows + 1 {
        return Err(CoreError::InvalidInput(
            "too few renormalization intervals for the requested windows".into(),
        ));
    }

    let span = history.times[n - 1] - history.times[0];
    let mut rates: Vec<f64> = (0..dim)
        .map(|d| (history.log_growth[n - 1][d] - history.log_growth[0][d]) / span)
        .collect();

    // Per-window rates for the variance diagnostic.
    let mut variance = vec![0.0; dim];
    let bounds: Vec<usize> = (0..=windows)
        .map(|w| (w * (n - 1)) / windows)
        .collect();
    for d in 0..dim {
        let mut wrates = Vec::with_capacity(windows);
        for w in 0..windows {
            let (a, b) = (bounds[w], bounds[w + 1]);
            if b <= a {
                continue;
            }
            let dt = history.times[b] - history.times[a];
            if dt > 0.0 {
                wrates.push((history.log_growth[b][d] - history.log_growth[a][d]) / dt);
            }
        }
        let mean = wrates.iter().sum::<f64>() / wrates.len() as f64;
        variance[d] =
            wrates.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / wrates.len() as f64;
    }

    // Sort exponents descending, carrying the variances along.
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| rates[b].partial_cmp(&rates[a]).unwrap());
    let sorted_var: Vec<f64> = order.iter().map(|&i| variance[i]).collect();
    rates.sort_by(|a, b| b.partial_cmp(a).unwrap());

    Ok(SpectrumEstimate {
        exponents: rates,
        window_variance: sorted_var,
        total_time: span,
        windows,
    })
}
