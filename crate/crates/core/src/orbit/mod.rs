//! Orbit integration across charts and seams, tangent transport, and
//! locators for equilibria and periodic orbits.

pub mod finders;
pub mod integrate;

use serde::Serialize;

use crate::charts::{ChartId, ChartedPoint, Coords};

pub use finders::{find_equilibria, find_periodic_orbit, EquilibriumResult, FinderSettings};
pub use integrate::{flow_map, integrate, integrate_with_tangent, Engine, DEFAULT_STEP};

/// Discrete happenings along an orbit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrbitEvent {
    SeamCrossing { chart: ChartId },
    ChartSwitch { from: ChartId, to: ChartId },
}

/// A sampled trajectory.
#[derive(Clone, Debug, Serialize)]
pub struct OrbitRecord {
    pub times: Vec<f64>,
    pub points: Vec<ChartedPoint>,
    pub events: Vec<(f64, OrbitEvent)>,
}

impl OrbitRecord {
    pub fn last(&self) -> &ChartedPoint {
        self.points.last().expect("records hold at least the start")
    }
}

/// Orthonormal-frame history along an orbit with accumulated per-direction
/// log expansion factors.
#[derive(Clone, Debug)]
pub struct TangentFrameHistory {
    /// Renormalization instants.
    pub times: Vec<f64>,
    /// Frame columns after each renormalization.
    pub frames: Vec<Vec<Coords>>,
    /// Cumulative per-direction log growth at each instant.
    pub log_growth: Vec<Vec<f64>>,
}

impl TangentFrameHistory {
    pub fn dims(&self) -> usize {
        self.log_growth.first().map(|v| v.len()).unwrap_or(0)
    }

    /// Mean growth rates over the whole span, descending.
    pub fn mean_rates(&self) -> Vec<f64> {
        if self.times.len() < 2 {
            return vec![0.0; self.dims()];
        }
        let total_t = self.times.last().unwrap() - self.times[0];
        let first = &self.log_growth[0];
        let last = self.log_growth.last().unwrap();
        let mut rates: Vec<f64> = first
            .iter()
            .zip(last)
            .map(|(a, b)| (b - a) / total_t)
            .collect();
        rates.sort_by(|a, b| b.partial_cmp(a).unwrap());
        rates
    }

    /// Per-interval log factors for one direction.
    pub fn interval_logs(&self, dir: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for k in 1..self.times.len() {
            let dt = self.times[k] - self.times[k - 1];
            let dl = self.log_growth[k][dir] - self.log_growth[k - 1][dir];
            out.push((dt, dl));
        }
        out
    }
}

/// Stability class of a periodic orbit from its multiplier moduli.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Attracting,
    Repelling,
    Saddle,
}

/// A located periodic orbit with its return-map spectrum.
#[derive(Clone, Debug)]
pub struct PeriodicOrbitResult {
    pub representative: ChartedPoint,
    pub period: f64,
    /// Return-map eigenvalues as (re, im) pairs; count = dimension - 1.
    pub multipliers: Vec<[f64; 2]>,
    pub stability: Stability,
    pub closure_error: f64,
    /// Points sampled along one period, for distance queries.
    pub samples: Vec<ChartedPoint>,
}

impl PeriodicOrbitResult {
    pub fn classify(multipliers: &[[f64; 2]]) -> Stability {
        let mods: Vec<f64> = multipliers.iter().map(|m| m[0].hypot(m[1])).collect();
        if mods.iter().all(|&m| m < 1.0) {
            Stability::Attracting
        } else if mods.iter().all(|&m| m > 1.0) {
            Stability::Repelling
        } else {
            Stability::Saddle
        }
    }
}

/// Codimension-1 section for return maps.
#[derive(Clone, Debug)]
pub enum Section {
    /// Hyperplane through `point` with unit `normal`; crossings counted in
    /// the +normal direction.
    Plane {
        chart: ChartId,
        point: Coords,
        normal: Coords,
    },
    /// The fiber seam of a mapping-torus chart (the s = 0 section).
    Seam { chart: ChartId },
}
