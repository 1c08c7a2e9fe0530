//! Box-counting dimension of point clouds, and cloud builders for map
//! sections and suspension attractors.

use std::collections::HashSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::charts::{ChartedPoint, ChartId, TorusPoint2};
use crate::error::{CoreError, Result};
use crate::flows::suspension::SuspensionFlow;
use crate::maps::CoverMap;

#[derive(Clone, Debug, Serialize)]
pub struct DimensionEstimate {
    pub value: f64,
    pub scales: Vec<f64>,
    pub counts: Vec<usize>,
    /// RMS residual of the log-log fit (natural log).
    pub residual: f64,
    pub degenerate: bool,
}

/// Least-squares slope of log N(eps) against log(1/eps).
///
/// Requires at least 5 scales spanning 1.5 decades and a cloud that is not
/// a single repeated point (which returns dimension 0, flagged).
pub fn box_counting(points: &[ChartedPoint], scales: &[f64]) -> Result<DimensionEstimate> {
    if points.is_empty() {
        return Err(CoreError::InvalidInput("empty point cloud".into()));
    }
    let mut scales = scales.to_vec();
    scales.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if scales.len() < 5 {
        return Err(CoreError::InvalidInput(format!(
            "box counting needs at least 5 scales, got {}",
            scales.len()
        )));
    }
    if scales.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(CoreError::InvalidInput("scales must be positive".into()));
    }
    let span = scales[0] / scales[scales.len() - 1];
    if span < 31.6 {
        return Err(CoreError::InvalidInput(format!(
            "scales must span at least 1.5 decades, got factor {span:.2}"
        )));
    }

    let dim = points[0].coords.len();
    // Degenerate cloud: all points identical.
    let first = &points[0];
    let degenerate = points.iter().all(|p| {
        p.coords
            .iter()
            .zip(first.coords.iter())
            .all(|(a, b)| (a - b).abs() < 1e-12)
    });
    if degenerate {
        return Ok(DimensionEstimate {
            value: 0.0,
            scales: scales.clone(),
            counts: vec![1; scales.len()],
            residual: 0.0,
            degenerate: true,
        });
    }

    let mut counts = Vec::with_capacity(scales.len());
    let mut boxes: HashSet<[i64; 6]> = HashSet::new();
    for &eps in &scales {
        boxes.clear();
        for p in points {
            let mut key = [0i64; 6];
            for (i, &c) in p.coords.iter().enumerate().take(dim) {
                key[i] = (c / eps).floor() as i64;
            }
            boxes.insert(key);
        }
        counts.push(boxes.len());
    }

    // Fit ln N = a + d * ln(1/eps).
    let xs: Vec<f64> = scales.iter().map(|&e| (1.0 / e).ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&n| (n as f64).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum::<f64>()
        / n)
        .sqrt();

    Ok(DimensionEstimate {
        value: slope.max(0.0),
        scales,
        counts,
        residual,
        degenerate: false,
    })
}

/// Attractor section on the torus: iterates of the map after a transient.
pub fn map_section_cloud(
    map: &CoverMap,
    chart: ChartId,
    n: usize,
    transient: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<ChartedPoint> {
    let mut p = TorusPoint2::new(rng.gen(), rng.gen()).unwrap();
    for _ in 0..transient {
        p = map.apply(&p);
    }
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        p = map.apply(&p);
        out.push(ChartedPoint::new(chart, &[p.x(), p.y()]));
    }
    out
}

/// Attractor cloud of a suspension flow: the orbit of one basin point
/// sampled at times k + s_k with uniformly drawn fiber offsets, which are
/// exact flow samples because the roof is constant.
pub fn suspension_cloud(
    susp: &SuspensionFlow,
    n: usize,
    transient: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<ChartedPoint> {
    let chart = susp.chart();
    let mut p = TorusPoint2::new(rng.gen(), rng.gen()).unwrap();
    for _ in 0..transient {
        p = susp.map().apply(&p);
    }
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        p = susp.map().apply(&p);
        let s: f64 = rng.gen();
        out.push(ChartedPoint::new(chart, &[p.x(), p.y(), s]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charts::TORUS2;
    use rand::SeedableRng;

    fn scales_2d() -> Vec<f64> {
        vec![0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625]
    }

    #[test]
    fn uniform_torus_sample_is_two_dimensional() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let points: Vec<ChartedPoint> = (0..100_000)
            .map(|_| ChartedPoint::new(TORUS2, &[rng.gen::<f64>(), rng.gen::<f64>()]))
            .collect();
        let est = box_counting(&points, &scales_2d()).unwrap();
        assert!((est.value - 2.0).abs() < 0.05, "dim {}", est.value);
        assert!(!est.degenerate);
    }

    #[test]
    fn curve_sample_is_one_dimensional() {
        // Finer scales than the area test: at coarse boxes the curve's
        // slope inflates the count.
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let points: Vec<ChartedPoint> = (0..100_000)
            .map(|_| {
                let t: f64 = rng.gen();
                let y = 0.5 + 0.2 * (std::f64::consts::TAU * t).sin();
                ChartedPoint::new(TORUS2, &[t, y])
            })
            .collect();
        let scales: Vec<f64> = (4..=9).map(|k| 0.5f64.powi(k)).collect();
        let est = box_counting(&points, &scales).unwrap();
        assert!((est.value - 1.0).abs() < 0.05, "dim {}", est.value);
    }

    #[test]
    fn repeated_point_is_degenerate() {
        let points = vec![ChartedPoint::new(TORUS2, &[0.3, 0.4]); 100];
        let est = box_counting(&points, &scales_2d()).unwrap();
        assert_eq!(est.value, 0.0);
        assert!(est.degenerate);
    }

    #[test]
    fn rejects_bad_scales() {
        let points = vec![ChartedPoint::new(TORUS2, &[0.3, 0.4]); 10];
        assert!(box_counting(&points, &[0.5, 0.25, 0.125]).is_err());
        assert!(box_counting(&points, &[0.5, 0.4, 0.3, 0.25, 0.2]).is_err());
    }
}
