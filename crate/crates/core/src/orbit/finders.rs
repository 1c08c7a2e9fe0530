//! Locators: damped Newton on the field for equilibria (with tangent-space
//! handling on embedded spheres), and Newton on Poincare return maps for
//! periodic orbits, differentiated through tangent transport.

use nalgebra::{Complex, DMatrix, DVector};

use crate::charts::{BaseChart, ChartId, ChartedPoint, Coords};
use crate::error::{CoreError, Result};
use crate::flows::{Flow, FlowSystem};
use crate::orbit::integrate::Engine;
use crate::orbit::{PeriodicOrbitResult, Section};

#[derive(Clone, Copy, Debug)]
pub struct FinderSettings {
    pub tol: f64,
    pub max_iters: usize,
    pub step: f64,
    pub max_return_time: f64,
}

impl Default for FinderSettings {
    fn default() -> Self {
        FinderSettings {
            tol: 1e-10,
            max_iters: 60,
            step: 1e-3,
            max_return_time: 50.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EquilibriumResult {
    pub point: ChartedPoint,
    /// Linearization eigenvalues as (re, im), sorted by descending real part.
    pub eigenvalues: Vec<[f64; 2]>,
    pub hyperbolic: bool,
}

/// Closed-form eigenvalues of a 2x2 real matrix as (re, im) pairs.
pub fn eigen2(m: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = tr * tr / 4.0 - det;
    if disc >= 0.0 {
        let r = disc.sqrt();
        [[tr / 2.0 + r, 0.0], [tr / 2.0 - r, 0.0]]
    } else {
        let r = (-disc).sqrt();
        [[tr / 2.0, r], [tr / 2.0, -r]]
    }
}

fn field_vec(sys: &FlowSystem, chart: ChartId, y: &[f64]) -> Result<Coords> {
    let mut out = Coords::zeros(chart.dim());
    sys.field(chart, y, &mut out)?;
    Ok(out)
}

fn jacobian_matrix(sys: &FlowSystem, chart: ChartId, y: &[f64]) -> Result<DMatrix<f64>> {
    let dim = chart.dim();
    let mut j = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        let mut v = Coords::zeros(dim);
        v[k] = 1.0;
        let mut out = Coords::zeros(dim);
        sys.field_jac_mul(chart, y, &v, &mut out)?;
        for i in 0..dim {
            j[(i, k)] = out[i];
        }
    }
    Ok(j)
}

/// Orthonormal basis of the orthogonal complement of `x` (columns).
fn sphere_tangent_basis(x: &[f64]) -> Vec<Coords> {
    let dim = x.len();
    let mut basis: Vec<Coords> = Vec::new();
    for i in 0..dim {
        let mut v = Coords::zeros(dim);
        v[i] = 1.0;
        let dot: f64 = v.iter().zip(x).map(|(a, b)| a * b).sum();
        for (k, c) in x.iter().enumerate() {
            v[k] -= dot * c;
        }
        for b in &basis {
            let d: f64 = v.iter().zip(b.iter()).map(|(a, c)| a * c).sum();
            for k in 0..dim {
                v[k] -= d * b[k];
            }
        }
        let n = v.norm();
        if n > 1e-8 {
            for c in v.iter_mut() {
                *c /= n;
            }
            basis.push(v);
            if basis.len() == dim - 1 {
                break;
            }
        }
    }
    basis
}

fn sorted_eigs(m: &DMatrix<f64>) -> Vec<[f64; 2]> {
    let eigs = m.clone().complex_eigenvalues();
    let mut out: Vec<[f64; 2]> = eigs.iter().map(|c: &Complex<f64>| [c.re, c.im]).collect();
    out.sort_by(|a, b| {
        b[0].partial_cmp(&a[0])
            .unwrap()
            .then(b[1].partial_cmp(&a[1]).unwrap())
    });
    out
}

/// Damped Newton on the field from each seed; converged roots are
/// deduplicated (chart distance below 10 tol) and reported with the
/// eigenvalues of their linearization. Non-converged seeds come back in the
/// second list.
pub fn find_equilibria(
    sys: &FlowSystem,
    seeds: &[ChartedPoint],
    settings: &FinderSettings,
) -> Result<(Vec<EquilibriumResult>, Vec<ChartedPoint>)> {
    let mut found: Vec<EquilibriumResult> = Vec::new();
    let mut unconverged: Vec<ChartedPoint> = Vec::new();

    for seed in seeds {
        match newton_equilibrium(sys, seed, settings) {
            Ok(Some(result)) => {
                let dup = found.iter().any(|f| {
                    f.point.chart == result.point.chart
                        && sys.atlas().distance(
                            f.point.chart,
                            &f.point.coords,
                            &result.point.coords,
                        ) < 10.0 * settings.tol
                });
                if !dup {
                    found.push(result);
                }
            }
            Ok(None) => unconverged.push(*seed),
            Err(_) => unconverged.push(*seed),
        }
    }
    // Deterministic order: by chart name, then coordinates.
    found.sort_by(|a, b| {
        a.point
            .chart
            .name()
            .cmp(&b.point.chart.name())
            .then_with(|| {
                a.point
                    .coords
                    .iter()
                    .partial_cmp(b.point.coords.iter())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
    });
    Ok((found, unconverged))
}

fn newton_equilibrium(
    sys: &FlowSystem,
    seed: &ChartedPoint,
    settings: &FinderSettings,
) -> Result<Option<EquilibriumResult>> {
    let chart = seed.chart;
    let dim = chart.dim();
    let ambient = matches!(chart.base, BaseChart::Sphere(_)) && chart.lat == 0;
    let mut y = seed.coords;
    let mut nothing = vec![];
    sys.reduce(chart, &mut y, &mut nothing);

    for _ in 0..settings.max_iters {
        let f = field_vec(sys, chart, &y)?;
        let fnorm = f.norm();
        if fnorm < settings.tol {
            let j = jacobian_matrix(sys, chart, &y)?;
            let eigenvalues = if ambient {
                let basis = sphere_tangent_basis(&y);
                let k = basis.len();
                let mut jt: DMatrix<f64> = DMatrix::zeros(k, k);
                for (col, b) in basis.iter().enumerate() {
                    let mut out = Coords::zeros(dim);
                    sys.field_jac_mul(chart, &y, b, &mut out)?;
                    for (row, br) in basis.iter().enumerate() {
                        jt[(row, col)] = out.iter().zip(br.iter()).map(|(a, c)| a * c).sum();
                    }
                }
                sorted_eigs(&jt)
            } else {
                sorted_eigs(&j)
            };
            let hyperbolic = eigenvalues.iter().all(|e| e[0].abs() > 1e-6);
            return Ok(Some(EquilibriumResult {
                point: ChartedPoint { chart, coords: y },
                eigenvalues,
                hyperbolic,
            }));
        }

        // Newton direction.
        let delta = if ambient {
            let basis = sphere_tangent_basis(&y);
            let k = basis.len();
            let mut jt: DMatrix<f64> = DMatrix::zeros(k, k);
            let mut ft: DVector<f64> = DVector::zeros(k);
            for (col, b) in basis.iter().enumerate() {
                let mut out = Coords::zeros(dim);
                sys.field_jac_mul(chart, &y, b, &mut out)?;
                for (row, br) in basis.iter().enumerate() {
                    jt[(row, col)] = out.iter().zip(br.iter()).map(|(a, c)| a * c).sum();
                }
            }
            for (row, br) in basis.iter().enumerate() {
                ft[row] = f.iter().zip(br.iter()).map(|(a, c)| a * c).sum();
            }
            let lu = jt.lu();
            let hq = match lu.solve(&(-ft)) {
                Some(h) => h,
                None => return Ok(None),
            };
            let mut d = Coords::zeros(dim);
            for (b, &coef) in basis.iter().zip(hq.iter()) {
                for i in 0..dim {
                    d[i] += coef * b[i];
                }
            }
            d
        } else {
            let j = jacobian_matrix(sys, chart, &y)?;
            let fv = DVector::from_iterator(dim, f.iter().copied());
            let lu = j.lu();
            match lu.solve(&(-fv)) {
                Some(h) => {
                    let mut d = Coords::zeros(dim);
                    for i in 0..dim {
                        d[i] = h[i];
                    }
                    d
                }
                None => return Ok(None),
            }
        };

        // Damping: shrink until the residual decreases.
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let mut trial = y;
            for i in 0..dim {
                trial[i] = y[i] + lambda * delta[i];
            }
            sys.reduce(chart, &mut trial, &mut vec![]);
            if let Ok(ftrial) = field_vec(sys, chart, &trial) {
                if ftrial.norm() < fnorm {
                    y = trial;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Ok(None);
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Periodic orbits via return maps
// ---------------------------------------------------------------------------

struct SectionGeometry {
    chart: ChartId,
    point: Coords,
    normal: Coords,
    basis: Vec<Coords>,
    seam: bool,
}

impl SectionGeometry {
    fn build(sys: &FlowSystem, section: &Section) -> Result<Self> {
        match section {
            Section::Plane {
                chart,
                point,
                normal,
            } => {
                let dim = chart.dim();
                let mut n = *normal;
                let nn = n.norm();
                if nn < 1e-12 {
                    return Err(CoreError::InvalidInput("zero section normal".into()));
                }
                for v in n.iter_mut() {
                    *v /= nn;
                }
                let mut basis: Vec<Coords> = Vec::new();
                for i in 0..dim {
                    let mut v = Coords::zeros(dim);
                    v[i] = 1.0;
                    let dot: f64 = v.iter().zip(n.iter()).map(|(a, b)| a * b).sum();
                    for k in 0..dim {
                        v[k] -= dot * n[k];
                    }
                    for b in &basis {
                        let d: f64 = v.iter().zip(b.iter()).map(|(a, c)| a * c).sum();
                        for k in 0..dim {
                            v[k] -= d * b[k];
                        }
                    }
                    let norm = v.norm();
                    if norm > 1e-8 {
                        for c in v.iter_mut() {
                            *c /= norm;
                        }
                        basis.push(v);
                        if basis.len() == dim - 1 {
                            break;
                        }
                    }
                }
                Ok(SectionGeometry {
                    chart: *chart,
                    point: *point,
                    normal: n,
                    basis,
                    seam: false,
                })
            }
            Section::Seam { chart } => {
                let spec = sys.seam(*chart).ok_or_else(|| {
                    CoreError::InvalidInput(format!("chart {chart} has no seam section"))
                })?;
                let dim = chart.dim();
                let mut n = Coords::zeros(dim);
                n[spec.coord] = 1.0;
                let mut basis = Vec::new();
                for i in 0..dim {
                    if i != spec.coord {
                        let mut v = Coords::zeros(dim);
                        v[i] = 1.0;
                        basis.push(v);
                    }
                }
                Ok(SectionGeometry {
                    chart: *chart,
                    point: Coords::zeros(dim),
                    normal: n,
                    basis,
                    seam: true,
                })
            }
        }
    }

    fn offset(&self, y: &[f64]) -> f64 {
        self.normal
            .iter()
            .enumerate()
            .map(|(i, n)| n * (y[i] - self.point[i]))
            .sum()
    }
}

/// Integrate to the next positive-direction section crossing; returns the
/// crossing state and elapsed time. Tangent columns ride along.
fn next_crossing(
    sys: &FlowSystem,
    geom: &SectionGeometry,
    start: &ChartedPoint,
    tangents: &[Coords],
    settings: &FinderSettings,
) -> Result<(ChartedPoint, Vec<Coords>, f64)> {
    let mut eng = Engine::new(sys, start, settings.step)?;
    eng.tangents = tangents.to_vec();
    eng.log_growth = vec![0.0; tangents.len()];
    eng.collect_events = true;

    if geom.seam {
        // A crossing is the seam event itself; the post-event state lies on
        // the entry section.
        let mut crossings = 0usize;
        let mut out: Option<(ChartedPoint, Vec<Coords>, f64)> = None;
        let t_min = 1e-6;
        while eng.t < settings.max_return_time {
            let before = eng.events.len();
            eng.advance(settings.step.max(1e-3))?;
            if eng.events.len() > before
                && eng
                    .events
                    .iter()
                    .skip(before)
                    .any(|(t, e)| matches!(e, crate::orbit::OrbitEvent::SeamCrossing { .. }) && *t > t_min)
            {
                crossings += 1;
            }
            if crossings >= 1 {
                out = Some((eng.point(), eng.tangents.clone(), eng.t));
                break;
            }
        }
        return out.ok_or(CoreError::NoReturn {
            t_max: settings.max_return_time,
        });
    }

    // Hyperplane section: watch for a sign change of the offset with
    // positive crossing direction, then bisect the step.
    let mut prev_state = (*start, tangents.to_vec(), 0.0);
    let mut prev_off = geom.offset(&start.coords);
    let t_min = 10.0 * settings.step;
    while eng.t < settings.max_return_time {
        eng.advance(settings.step)?;
        let off = geom.offset(&eng.y);
        if eng.t > t_min && prev_off < 0.0 && off >= 0.0 {
            // Bisect from the previous state.
            let (p0, v0, t0) = prev_state;
            let mut lo = 0.0;
            let mut hi = eng.t - t0;
            for _ in 0..64 {
                let mid = 0.5 * (lo + hi);
                let mut probe = Engine::new(sys, &p0, settings.step)?;
                probe.collect_events = false;
                probe.advance(mid)?;
                if geom.offset(&probe.y) >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo < 1e-14 {
                    break;
                }
            }
            let mut fin = Engine::new(sys, &p0, settings.step)?;
            fin.tangents = v0.clone();
            fin.log_growth = vec![0.0; v0.len()];
            fin.collect_events = false;
            fin.advance(hi)?;
            return Ok((fin.point(), fin.tangents.clone(), t0 + hi));
        }
        prev_off = off;
        prev_state = (eng.point(), eng.tangents.clone(), eng.t);
    }
    Err(CoreError::NoReturn {
        t_max: settings.max_return_time,
    })
}

/// Newton on the Poincare return map. Floquet multipliers are the
/// eigenvalues of the section-projected return derivative; the stability
/// tag follows their moduli.
///
/// Measuring the return map means surviving one full turn, so for strongly
/// repelling orbits the seed must sit within the one-turn expansion budget
/// of the domain (seam sections are immune: their return is the suspension
/// map itself).
pub fn find_periodic_orbit(
    sys: &FlowSystem,
    section: &Section,
    seed: &ChartedPoint,
    settings: &FinderSettings,
) -> Result<PeriodicOrbitResult> {
    let geom = SectionGeometry::build(sys, section)?;
    if seed.chart != geom.chart {
        return Err(CoreError::InvalidInput(format!(
            "seed chart {} does not match section chart {}",
            seed.chart, geom.chart
        )));
    }
    let dim = geom.chart.dim();
    let k = geom.basis.len();

    // Land the seed on the section first.
    let mut x = if geom.seam {
        let mut p = *seed;
        p.coords[dim - 1] = 0.0;
        p
    } else {
        let (p, _, _) = next_crossing(sys, &geom, seed, &[], settings)?;
        p
    };

    let mut period = 0.0;
    let mut closure = f64::INFINITY;
    let mut dr: DMatrix<f64> = DMatrix::zeros(k, k);

    for _ in 0..settings.max_iters {
        let (ret, vcols, t_ret) = next_crossing(sys, &geom, &x, &geom.basis, settings)?;
        period = t_ret;
        let disp = displacement(sys, geom.chart, &x.coords, &ret.coords);
        closure = disp.norm();

        // Projected return derivative: correct each transported column for
        // the return-time variation, then express in the section basis.
        let f_ret = field_vec(sys, geom.chart, &ret.coords)?;
        let nf: f64 = geom
            .normal
            .iter()
            .zip(f_ret.iter())
            .map(|(a, b)| a * b)
            .sum();
        for (col, v) in vcols.iter().enumerate() {
            let nv: f64 = geom.normal.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            let mut w = *v;
            if nf.abs() > 1e-12 {
                for i in 0..dim {
                    w[i] -= f_ret[i] * nv / nf;
                }
            }
            for (row, b) in geom.basis.iter().enumerate() {
                dr[(row, col)] = w.iter().zip(b.iter()).map(|(a, c)| a * c).sum();
            }
        }

        if closure < settings.tol {
            break;
        }

        // Newton update in section coordinates: (DR - I) d = -(R(x) - x).
        let mut rhs: DVector<f64> = DVector::zeros(k);
        for (row, b) in geom.basis.iter().enumerate() {
            rhs[row] = -disp.iter().zip(b.iter()).map(|(a, c)| a * c).sum::<f64>();
        }
        let mut m = dr.clone();
        for i in 0..k {
            m[(i, i)] -= 1.0;
        }
        let d = m
            .lu()
            .solve(&rhs)
            .ok_or_else(|| CoreError::NoConvergence("singular return-map Newton system".into()))?;
        let mut xn = x.coords;
        for (b, &coef) in geom.basis.iter().zip(d.iter()) {
            for i in 0..dim {
                xn[i] += coef * b[i];
            }
        }
        if !geom.seam {
            // Project back onto the plane.
            let off: f64 = geom
                .normal
                .iter()
                .enumerate()
                .map(|(i, n)| n * (xn[i] - geom.point[i]))
                .sum();
            for i in 0..dim {
                xn[i] -= off * geom.normal[i];
            }
        } else {
            xn[dim - 1] = 0.0;
        }
        let mut nothing = vec![];
        sys.reduce(geom.chart, &mut xn, &mut nothing);
        x = ChartedPoint {
            chart: geom.chart,
            coords: xn,
        };
    }

    if closure > settings.tol * 100.0 {
        return Err(CoreError::NoConvergence(format!(
            "return-map Newton stalled with closure error {closure:.3e}"
        )));
    }

    let multipliers = sorted_eigs(&dr);
    let stability = PeriodicOrbitResult::classify(&multipliers);

    // Sample one period for distance queries.
    let mut samples = Vec::with_capacity(64);
    let mut eng = Engine::new(sys, &x, settings.step)?;
    eng.collect_events = false;
    samples.push(x);
    for _ in 0..63 {
        eng.advance(period / 64.0)?;
        samples.push(eng.point());
    }

    Ok(PeriodicOrbitResult {
        representative: x,
        period,
        multipliers,
        stability,
        closure_error: closure,
        samples,
    })
}

/// Minimal displacement from `a` to `b` in chart coordinates, honoring
/// torus wraps and the involution identification.
pub fn displacement(sys: &FlowSystem, chart: ChartId, a: &[f64], b: &[f64]) -> Coords {
    use crate::charts::circle_delta;
    let dim = chart.dim();
    let mut out = Coords::zeros(dim);
    let wrapped = matches!(
        chart.base,
        BaseChart::Torus2
            | BaseChart::SphereQuot
            | BaseChart::MapTorus
            | BaseChart::MapTorusQuot
            | BaseChart::PlykinP
    );
    if !wrapped {
        for i in 0..dim {
            out[i] = b[i] - a[i];
        }
        return out;
    }
    let sign = sys.atlas().branch_sign(chart, a, b);
    let bx = if sign < 0.0 {
        [
            crate::charts::reduce_unit(-b[0]),
            crate::charts::reduce_unit(-b[1]),
        ]
    } else {
        [b[0], b[1]]
    };
    out[0] = circle_delta(bx[0], a[0]);
    out[1] = circle_delta(bx[1], a[1]);
    for i in 2..dim {
        out[i] = b[i] - a[i];
    }
    out
}
