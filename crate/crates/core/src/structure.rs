//! Third-order structure functions, the bulk-condition study, the boundary
//! modulus of continuity and strip norms near the boundary.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::field::{trapezoid, TimeSeries, VectorField};
use crate::fit::{ladder_fit, loglog_fit};
use crate::grid::{Grid3, Region};
use crate::quad::integrate_lines;
use crate::reflect::{extend, zero_extend};

/// Slope threshold of the bulk-condition verdict.
pub const SLOPE_TOL: f64 = 0.1;
/// Residual threshold of the bulk-condition verdict.
pub const RESIDUAL_TOL: f64 = 0.1;

fn offset_len(g: &Grid3, y: [i64; 3]) -> f64 {
    let v = [y[0] as f64 * g.hx, y[1] as f64 * g.hy, y[2] as f64 * g.hz];
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// ∫_region |f(x + y) − f(x)|³ for one snapshot, zero fill beyond the slab.
fn increment_cube(f: &VectorField, y: [i64; 3], region: Region) -> Result<f64> {
    let g = *f.grid();
    let nz = g.nz();
    let c = f.comps();
    let oi = y[0].rem_euclid(g.nx as i64) as usize;
    let oj = y[1].rem_euclid(g.ny as i64) as usize;
    let ok = y[2];
    integrate_lines(&g, region, |i, j, buf| {
        let here = (i * g.ny + j) * nz;
        let there = (((i + oi) % g.nx) * g.ny + (j + oj) % g.ny) * nz;
        for (k, b) in buf.iter_mut().enumerate() {
            let sk = k as i64 + ok;
            let inside = (0..nz as i64).contains(&sk);
            let mut s = 0.0;
            for a in c.iter() {
                let v = if inside { a[there + sk as usize] } else { 0.0 };
                let d = v - a[here + k];
                s += d * d;
            }
            *b = s * s.sqrt();
        }
    })
}

/// S3(y) = ∫₀ᵀ ∫_{D>|y|} |u(x + y) − u(x)|³ with the trapezoid rule in time.
pub fn structure_function(u: &TimeSeries, y: [i64; 3]) -> Result<f64> {
    let g = u.grid();
    let len = offset_len(g, y);
    if len == 0.0 {
        return domain("structure function needs a nonzero offset");
    }
    if len >= 0.5 * g.lz {
        return domain(format!("offset length {len} must be below Lz/2 = {}", 0.5 * g.lz));
    }
    structure_function_on(u, y, Region::Above(len))
}

/// Structure function over an explicit region (for probes without the D>|y| restriction).
pub fn structure_function_on(u: &TimeSeries, y: [i64; 3], region: Region) -> Result<f64> {
    let vals = u.map_snapshots(u.len(), |f| increment_cube(f, y, region))?;
    Ok(trapezoid(u.times(), &vals, u.len() - 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Satisfied,
    Violated,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Satisfied => "satisfied",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Structure-function ladder along one direction.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DirectionResult {
    pub direction: [i64; 3],
    pub offsets: Vec<[i64; 3]>,
    pub scales: Vec<f64>,
    pub s3: Vec<f64>,
    pub s3_over_y: Vec<f64>,
    /// `None` when S3 vanishes at some scale.
    pub slope: Option<f64>,
    pub residual: Option<f64>,
    pub scales_used: usize,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StructureReport {
    /// Distinct shift magnitudes over all directions, increasing.
    pub scales: Vec<f64>,
    pub per_direction: Vec<DirectionResult>,
    /// Smallest per-direction slope (the binding one for the verdict).
    pub slope: Option<f64>,
    /// Largest per-direction residual.
    pub residual: Option<f64>,
    pub verdict: Verdict,
    pub slope_tol: f64,
    pub residual_tol: f64,
    pub horizon: f64,
}

/// Evaluates S3(y)/|y| on dyadic ladders |y| ≈ base·2^j (j < scale_count)
/// along each direction d, fits log-log slopes and applies the verdict rule.
///
/// `base` is a physical length; each rung is the node multiple of d closest
/// to the target length, so directions with different spacings probe the same scales.
pub fn bulk_condition_study(u: &TimeSeries, directions: &[[i64; 3]], scale_count: usize, base: f64) -> Result<StructureReport> {
    let g = *u.grid();
    if directions.is_empty() {
        return domain("bulk condition study needs at least one direction");
    }
    let hmin = g.hx.min(g.hy).min(g.hz);
    if !(base >= hmin * (1.0 - 1e-12)) {
        return domain(format!("ladder base {base} is below the finest spacing {hmin}"));
    }
    let mut ladders = Vec::new();
    for &d in directions {
        if d == [0, 0, 0] {
            return domain("direction (0, 0, 0) has no length");
        }
        let unit = offset_len(&g, d);
        let mut offs: Vec<[i64; 3]> = Vec::new();
        for j in 0..scale_count {
            let m = ((base * (1u64 << j) as f64 / unit).round() as i64).max(1);
            let y = [d[0] * m, d[1] * m, d[2] * m];
            let fits = offset_len(&g, y) < 0.5 * g.lz
                && 2 * y[0].unsigned_abs() as usize <= g.nx
                && 2 * y[1].unsigned_abs() as usize <= g.ny;
            if fits && offs.last() != Some(&y) {
                offs.push(y);
            }
        }
        if offs.len() < 4 {
            return domain(format!(
                "direction {d:?} has only {} usable dyadic scales (need 4): shifts must stay below Lz/2 and half a period",
                offs.len()
            ));
        }
        ladders.push((d, offs));
    }
    let jobs: Vec<(usize, [i64; 3])> =
        ladders.iter().enumerate().flat_map(|(n, (_, offs))| offs.iter().map(move |y| (n, *y))).collect();
    let values: Vec<f64> = jobs.iter().map(|(_, y)| structure_function(u, *y)).collect::<Result<_>>()?;
    let mut per_direction = Vec::new();
    let mut cursor = 0;
    for (d, offs) in ladders {
        let scales: Vec<f64> = offs.iter().map(|y| offset_len(&g, *y)).collect();
        let s3 = values[cursor..cursor + offs.len()].to_vec();
        cursor += offs.len();
        let s3_over_y: Vec<f64> = s3.iter().zip(&scales).map(|(s, y)| s / y).collect();
        let fit = ladder_fit(&scales, &s3_over_y);
        per_direction.push(DirectionResult {
            direction: d,
            offsets: offs,
            slope: fit.map(|f| f.0.slope),
            residual: fit.map(|f| f.0.residual),
            scales_used: fit.map_or(0, |f| f.1),
            scales,
            s3,
            s3_over_y,
        });
    }
    let slopes: Option<Vec<f64>> = per_direction.iter().map(|r| r.slope).collect();
    let residuals: Option<Vec<f64>> = per_direction.iter().map(|r| r.residual).collect();
    let slope = slopes.as_ref().map(|s| s.iter().copied().fold(f64::INFINITY, f64::min));
    let residual = residuals.as_ref().map(|r| r.iter().copied().fold(0.0, f64::max));
    let verdict = match (slope, residual) {
        (Some(s), _) if s <= -SLOPE_TOL => Verdict::Violated,
        (Some(s), Some(r)) if s >= SLOPE_TOL && r < RESIDUAL_TOL => Verdict::Satisfied,
        _ => Verdict::Inconclusive,
    };
    let mut scales: Vec<f64> = per_direction.iter().flat_map(|r| r.scales.iter().copied()).collect();
    scales.sort_by(f64::total_cmp);
    scales.dedup();
    Ok(StructureReport {
        scales,
        per_direction,
        slope,
        residual,
        verdict,
        slope_tol: SLOPE_TOL,
        residual_tol: RESIDUAL_TOL,
        horizon: u.horizon(),
    })
}

/// Boundary modulus of continuity per snapshot.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ModulusTable {
    pub delta: f64,
    /// 0 followed by the dyadic ladder.
    pub radii: Vec<f64>,
    pub times: Vec<f64>,
    /// values[s][m] = w(times[s], radii[m]) after the running-max envelope.
    pub values: Vec<Vec<f64>>,
    /// Whether the raw sup values were already non-decreasing for every snapshot.
    pub monotone: bool,
    /// Fitted slope of log w vs log r (radii > 0) per snapshot.
    pub slopes: Vec<Option<f64>>,
}

/// sup over boundary nodes x and offsets |z| ≤ r with x + z ∈ T²×[0, δ] of |u(x + z) − u(x)|.
pub fn boundary_modulus(u: &TimeSeries, delta: f64) -> Result<ModulusTable> {
    let g = *u.grid();
    if !(delta > 0.0 && delta < g.lz) {
        return domain(format!("delta = {delta} must lie in (0, Lz = {})", g.lz));
    }
    let kd = (delta / g.hz + 1e-9).floor() as i64;
    if kd < 4 {
        return domain(format!("delta = {delta} spans fewer than 4 nodes in x3 (hz = {})", g.hz));
    }
    let hmin = g.hx.min(g.hy).min(g.hz);
    let mut radii = vec![0.0];
    let mut r = hmin;
    while r <= delta * (1.0 + 1e-12) {
        radii.push(r);
        r *= 2.0;
    }
    let rmax = *radii.last().unwrap();
    let ri = ((rmax / g.hx) as i64).min(g.nx as i64 / 2);
    let rj = ((rmax / g.hy) as i64).min(g.ny as i64 / 2);
    let mut offsets: Vec<([i64; 3], f64)> = Vec::new();
    for a in -ri..=ri {
        for b in -rj..=rj {
            for c in 0..=kd {
                let len = offset_len(&g, [a, b, c]);
                if len > 0.0 && len <= rmax * (1.0 + 1e-12) {
                    offsets.push(([a, b, c], len));
                }
            }
        }
    }
    let nz = g.nz();
    let k0 = g.k0();
    let per_snapshot = u.map_snapshots(u.len(), |f| {
        let c = f.comps();
        let sups: Vec<f64> = offsets
            .par_iter()
            .map(|(z, _)| {
                let oi = z[0].rem_euclid(g.nx as i64) as usize;
                let oj = z[1].rem_euclid(g.ny as i64) as usize;
                let mut m: f64 = 0.0;
                for i in 0..g.nx {
                    for j in 0..g.ny {
                        let here = (i * g.ny + j) * nz + k0;
                        let there = (((i + oi) % g.nx) * g.ny + (j + oj) % g.ny) * nz + k0 + z[2] as usize;
                        let mut s = 0.0;
                        for a in c.iter() {
                            let d = a[there] - a[here];
                            s += d * d;
                        }
                        m = m.max(s);
                    }
                }
                m.sqrt()
            })
            .collect();
        let raw: Vec<f64> = radii
            .iter()
            .map(|&r| {
                offsets
                    .iter()
                    .zip(&sups)
                    .filter(|((_, len), _)| *len <= r * (1.0 + 1e-12))
                    .map(|(_, s)| *s)
                    .fold(0.0, f64::max)
            })
            .collect();
        Ok(raw)
    })?;
    let mut monotone = true;
    let mut values = Vec::new();
    let mut slopes = Vec::new();
    for raw in per_snapshot {
        let mut env = raw.clone();
        for m in 1..env.len() {
            if env[m] < env[m - 1] {
                monotone = false;
                env[m] = env[m - 1];
            }
        }
        slopes.push(loglog_fit(&radii[1..], &env[1..]).map(|f| f.slope));
        values.push(env);
    }
    Ok(ModulusTable { delta, radii, times: u.times().to_vec(), values, monotone, slopes })
}

/// One row of the strip study.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StripRow {
    pub epsilon: f64,
    /// Coordinate axis of η (0, 1, 2).
    pub axis: usize,
    pub offset_nodes: i64,
    /// (1/ε)‖u(· − εη) − u‖³ over 0..t and Strip(−ε, ε), u zero-extended.
    pub zero_extended: f64,
    /// The same for the odd extension u_E.
    pub extended: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StripTable {
    pub epsilons: Vec<f64>,
    pub rows: Vec<StripRow>,
    /// Max over directions of the zero-extended quantity, per ε.
    pub max_zero_extended: Vec<f64>,
    /// Max over directions of the extended quantity, per ε.
    pub max_extended: Vec<f64>,
    pub slope_zero_extended: Option<f64>,
    pub slope_extended: Option<f64>,
    /// 8·sup|u|³·|T²|·2·t (the crude bound of the zero-extended quantity).
    pub sup_bound: f64,
}

/// Strip norms near the boundary for each ε: quantity (a) with u zero-extended and (b) with u_E.
pub fn strip_norm_study(u: &TimeSeries, epsilons: &[f64]) -> Result<StripTable> {
    let g = *u.grid();
    if epsilons.is_empty() {
        return domain("strip study needs at least one epsilon");
    }
    for &e in epsilons {
        if !(e >= 2.0 * g.hz * (1.0 - 1e-12)) {
            return domain(format!("epsilon = {e} is below 2·hz = {}", 2.0 * g.hz));
        }
        if e >= g.lz {
            return domain(format!("epsilon = {e} must be below Lz = {}", g.lz));
        }
    }
    let h = [g.hx, g.hy, g.hz];
    let n = u.len();
    let zs = u.map_snapshots(n, zero_extend)?;
    let es = u.map_snapshots(n, |f| extend(f).map(|r| r.field))?;
    let mut rows = Vec::new();
    for &eps in epsilons {
        let region = Region::Strip(-eps, eps);
        for axis in 0..3 {
            let m = ((eps / h[axis]).round() as i64).max(1);
            let mut y = [0i64; 3];
            y[axis] = -m;
            let a: Vec<f64> = (0..n).map(|s| increment_cube(&zs[s], y, region)).collect::<Result<_>>()?;
            let b: Vec<f64> = (0..n).map(|s| increment_cube(&es[s], y, region)).collect::<Result<_>>()?;
            rows.push(StripRow {
                epsilon: eps,
                axis,
                offset_nodes: m,
                zero_extended: trapezoid(u.times(), &a, n - 1) / eps,
                extended: trapezoid(u.times(), &b, n - 1) / eps,
            });
        }
    }
    let max_of = |f: &dyn Fn(&StripRow) -> f64| -> Vec<f64> {
        epsilons
            .iter()
            .map(|&e| rows.iter().filter(|r| r.epsilon == e).map(f).fold(0.0, f64::max))
            .collect()
    };
    let max_zero_extended = max_of(&|r| r.zero_extended);
    let max_extended = max_of(&|r| r.extended);
    let sup = u.snapshots().iter().map(|s| s.max_abs() * 3f64.sqrt()).fold(0.0, f64::max);
    let sup_bound = 8.0 * sup.powi(3) * 4.0 * std::f64::consts::PI.powi(2) * 2.0 * u.horizon();
    Ok(StripTable {
        epsilons: epsilons.to_vec(),
        slope_zero_extended: loglog_fit(epsilons, &max_zero_extended).map(|f| f.slope),
        slope_extended: loglog_fit(epsilons, &max_extended).map(|f| f.slope),
        rows,
        max_zero_extended,
        max_extended,
        sup_bound,
    })
}
