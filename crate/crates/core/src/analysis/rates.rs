//! Window-wise exponential rate bounds from a tangent-frame history:
//! the weakest growth of the most-expanding direction over every window,
//! and symmetrically the weakest contraction of the most-contracting one.

use serde::Serialize;

use crate::orbit::TangentFrameHistory;

/// A direction only counts as expanding/contracting when its mean rate
/// clears this threshold; the flow direction sits at rate zero.
const NEUTRAL_RATE: f64 = 0.02;

#[derive(Clone, Debug, Serialize)]
pub struct RateFit {
    /// Direction index in the Gram-Schmidt frame.
    pub direction: usize,
    pub mean_rate: f64,
    /// Weakest window rate (the fitted exponential bound).
    pub fitted_rate: f64,
    pub worst_window: usize,
    pub windows: usize,
    pub all_windows_consistent: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RateReport {
    pub window: f64,
    pub expansion: Option<RateFit>,
    pub contraction: Option<RateFit>,
}

/// Aggregate the history's per-interval log factors into windows of the
/// given length and report monotone exponential bounds.
pub fn splitting_rate_check(history: &TangentFrameHistory, window: f64) -> RateReport {
    let dims = history.dims();
    let span = if history.times.len() >= 2 {
        history.times.last().unwrap() - history.times[0]
    } else {
        0.0
    };

    let mut mean_rates = vec![0.0; dims];
    let mut window_rates: Vec<Vec<f64>> = vec![Vec::new(); dims];
    for d in 0..dims {
        let intervals = history.interval_logs(d);
        let total: f64 = intervals.iter().map(|(_, l)| l).sum();
        mean_rates[d] = if span > 0.0 { total / span } else { 0.0 };
        let mut acc_t = 0.0;
        let mut acc_l = 0.0;
        for (dt, dl) in intervals {
            acc_t += dt;
            acc_l += dl;
            if acc_t >= window - 1e-9 {
                window_rates[d].push(acc_l / acc_t);
                acc_t = 0.0;
                acc_l = 0.0;
            }
        }
    }

    let fit = |d: usize, expanding: bool| -> Option<RateFit> {
        let rates = &window_rates[d];
        if rates.is_empty() {
            return None;
        }
        let (fitted, worst) = rates.iter().enumerate().fold(
            (if expanding { f64::INFINITY } else { f64::NEG_INFINITY }, 0),
            |(best, wi), (i, &r)| {
                if (expanding && r < best) || (!expanding && r > best) {
                    (r, i)
                } else {
                    (best, wi)
                }
            },
        );
        let consistent = if expanding {
            rates.iter().all(|&r| r > 0.0)
        } else {
            rates.iter().all(|&r| r < 0.0)
        };
        Some(RateFit {
            direction: d,
            mean_rate: mean_rates[d],
            fitted_rate: fitted,
            worst_window: worst,
            windows: rates.len(),
            all_windows_consistent: consistent,
        })
    };

    let top = (0..dims).max_by(|&a, &b| mean_rates[a].partial_cmp(&mean_rates[b]).unwrap());
    let bottom = (0..dims).min_by(|&a, &b| mean_rates[a].partial_cmp(&mean_rates[b]).unwrap());

    let expansion = top
        .filter(|&d| mean_rates[d] > NEUTRAL_RATE)
        .and_then(|d| fit(d, true));
    let contraction = bottom
        .filter(|&d| mean_rates[d] < -NEUTRAL_RATE)
        .and_then(|d| fit(d, false));

    RateReport {
        window,
        expansion,
        contraction,
    }
}
