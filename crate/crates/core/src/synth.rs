//! Synthetic inputs with known ground truth: steady shear solutions,
//! lacunary Hölder fields, an advected-shear unsteady solution, gradient
//! bumps, random smooth fields and modulated time series.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::field::{TimeSeries, VectorField};
use crate::grid::{Grid3, Region};
use crate::stencil::max_abs_divergence;

/// Fields must stay below this magnitude in the outer 10% of the slab.
pub const DECAY_TOL: f64 = 1e-12;

/// Even decay envelope e(x3).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Envelope {
    /// 1 on |x3| ≤ flat, C^∞ transition to 0 at |x3| = end.
    FlatTop { flat: f64, end: f64 },
    /// exp(−(x3/scale)²).
    Gaussian { scale: f64 },
    /// max(0, 1 − |x3|/end), Lipschitz only.
    Tent { end: f64 },
}

fn smooth_step(t: f64) -> f64 {
    // 1 for t ≤ 0, 0 for t ≥ 1
    let f = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let a = f(1.0 - t);
        a / (a + f(t))
    }
}

impl Envelope {
    pub fn eval(&self, z: f64) -> f64 {
        let z = z.abs();
        match *self {
            Envelope::FlatTop { flat, end } => smooth_step((z - flat) / (end - flat)),
            Envelope::Gaussian { scale } => (-(z / scale).powi(2)).exp(),
            Envelope::Tent { end } => (1.0 - z / end).max(0.0),
        }
    }

    /// Rejects envelopes that do not decay inside the slab margin.
    pub fn validate(&self, grid: &Grid3) -> Result<()> {
        match *self {
            Envelope::FlatTop { flat, end } if !(flat >= 0.0 && end > flat) => {
                return domain(format!("flat-top envelope needs 0 <= flat < end, got flat={flat}, end={end}"));
            }
            Envelope::Gaussian { scale } if !(scale > 0.0) => {
                return domain(format!("gaussian envelope scale must be positive, got {scale}"));
            }
            Envelope::Tent { end } if !(end > 0.0) => {
                return domain(format!("tent envelope end must be positive, got {end}"));
            }
            _ => {}
        }
        let worst = (0..grid.nz())
            .map(|k| grid.x3(k))
            .filter(|z| z.abs() >= 0.9 * grid.lz * (1.0 - 1e-12))
            .map(|z| self.eval(z))
            .fold(0.0, f64::max);
        if worst > DECAY_TOL {
            return domain(format!(
                "envelope {self:?} reaches {worst:e} in the outer 10% of the slab (Lz = {}); decay tolerance is {DECAY_TOL:e}",
                grid.lz
            ));
        }
        Ok(())
    }
}

/// Scalar profile of x3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Profile {
    Constant { value: f64 },
    /// Σ c_n x3^n.
    Polynomial { coeffs: Vec<f64> },
    /// amp·sin(freq·x3 + phase).
    Sine { amp: f64, freq: f64, phase: f64 },
}

impl Profile {
    pub fn eval(&self, z: f64) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * z + c),
            Profile::Sine { amp, freq, phase } => amp * (freq * z + phase).sin(),
        }
    }
}

/// Time modulation a(τ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Modulation {
    #[default]
    Constant,
    /// 1 + rate·τ.
    Linear { rate: f64 },
    /// rate·τ.
    Ramp { rate: f64 },
    /// 1 + amp·sin(freq·τ).
    Sine { amp: f64, freq: f64 },
}

impl Modulation {
    pub fn eval(&self, tau: f64) -> f64 {
        match *self {
            Modulation::Constant => 1.0,
            Modulation::Linear { rate } => 1.0 + rate * tau,
            Modulation::Ramp { rate } => rate * tau,
            Modulation::Sine { amp, freq } => 1.0 + amp * (freq * tau).sin(),
        }
    }
}

/// Fills a half-slab field from per-node closures, zero below x3 = 0.
fn half_field(grid: Grid3, f: impl Fn(usize, usize, usize) -> [f64; 3]) -> VectorField {
    let n = grid.len();
    let mut comps = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let nz = grid.nz();
    for i in 0..grid.nx {
        for j in 0..grid.ny {
            let base = grid.idx(i, j, 0);
            for k in grid.k0()..nz {
                let v = f(i, j, k);
                comps[0][base + k] = v[0];
                comps[1][base + k] = v[1];
                comps[2][base + k] = v[2];
            }
        }
    }
    VectorField::from_parts(grid, comps, Region::HalfPlus, 0.0)
}

fn finish(f: VectorField) -> Result<VectorField> {
    f.check_decay(DECAY_TOL)?;
    Ok(f)
}

fn assert_solenoidal(f: &VectorField) {
    let d = max_abs_divergence(f, true);
    assert!(d <= 1e-12 * f.max_abs().max(1.0), "generator produced divergence {d:e}");
    assert_eq!(f.boundary_normal_max(), 0.0);
}

/// Steady shear (f(x3)·e, g(x3)·e, 0) on the half slab.
pub fn gen_shear(grid: &Grid3, f: &Profile, g: &Profile, envelope: &Envelope) -> Result<VectorField> {
    envelope.validate(grid)?;
    let col: Vec<[f64; 3]> = (0..grid.nz())
        .map(|k| {
            let z = grid.x3(k);
            let e = envelope.eval(z);
            [f.eval(z) * e, g.eval(z) * e, 0.0]
        })
        .collect();
    let u = half_field(*grid, |_, _, k| col[k]);
    assert_solenoidal(&u);
    finish(u)
}

/// One lacunary mode pair: horizontal and vertical parts of a component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LacunaryMode {
    pub amplitude: f64,
    pub sign_h: f64,
    pub phase_h: f64,
    pub sign_v: f64,
    pub phase_v: f64,
}

/// Coefficients of the two lacunary components (u1 rough in x2, u2 rough in x1).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LacunaryCoeffs {
    pub alpha: f64,
    pub u1: Vec<LacunaryMode>,
    pub u2: Vec<LacunaryMode>,
}

pub fn lacunary_coefficients(alpha: f64, mode_count: usize, seed: u64) -> LacunaryCoeffs {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |m: usize| LacunaryMode {
        amplitude: 2f64.powf(-alpha * m as f64),
        sign_h: if rng.gen::<bool>() { 1.0 } else { -1.0 },
        phase_h: rng.gen_range(0.0..2.0 * PI),
        sign_v: if rng.gen::<bool>() { 1.0 } else { -1.0 },
        phase_v: rng.gen_range(0.0..2.0 * PI),
    };
    let u1 = (0..mode_count).map(&mut draw).collect();
    let u2 = (0..mode_count).map(&mut draw).collect();
    LacunaryCoeffs { alpha, u1, u2 }
}

/// Largest mode count whose top wavenumber 2^(M−1) stays below Nyquist in x1, x2 and x3.
pub fn max_lacunary_modes(grid: &Grid3) -> usize {
    let limit = |n: usize| {
        // top mode 2^(M−1) < n
        let mut m = 0;
        while (1usize << m) < n {
            m += 1;
        }
        m
    };
    limit(grid.nx / 2).min(limit(grid.ny / 2)).min(limit(grid.nz_half))
}

fn check_alpha_modes(alpha: f64, mode_count: usize, max: usize) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    if mode_count == 0 {
        return domain("modeCount must be at least 1");
    }
    if mode_count > max {
        return domain(format!(
            "modeCount = {mode_count} exceeds the grid Nyquist limit; max admissible modeCount is {max}"
        ));
    }
    Ok(())
}

/// Lacunary C^α field: u1(x2, x3), u2(x1, x3), u3 = 0, each a dyadic sum
/// Σ 2^(−αm)[a_m cos(2^m x_h + θ_m) + b_m cos(2^m π x3 / Lz + φ_m)]·e(x3).
pub fn gen_lacunary(grid: &Grid3, alpha: f64, mode_count: usize, seed: u64, envelope: &Envelope) -> Result<VectorField> {
    check_alpha_modes(alpha, mode_count, max_lacunary_modes(grid))?;
    envelope.validate(grid)?;
    let co = lacunary_coefficients(alpha, mode_count, seed);
    let horiz = |modes: &[LacunaryMode], x: f64| -> f64 {
        modes.iter().enumerate().map(|(m, c)| c.amplitude * c.sign_h * ((1u64 << m) as f64 * x + c.phase_h).cos()).sum()
    };
    let vert = |modes: &[LacunaryMode], z: f64| -> f64 {
        modes
            .iter()
            .enumerate()
            .map(|(m, c)| c.amplitude * c.sign_v * ((1u64 << m) as f64 * PI * z / grid.lz + c.phase_v).cos())
            .sum()
    };
    let a1: Vec<f64> = (0..grid.ny).map(|j| horiz(&co.u1, grid.x2(j))).collect();
    let a2: Vec<f64> = (0..grid.nx).map(|i| horiz(&co.u2, grid.x1(i))).collect();
    let b1: Vec<f64> = (0..grid.nz()).map(|k| vert(&co.u1, grid.x3(k))).collect();
    let b2: Vec<f64> = (0..grid.nz()).map(|k| vert(&co.u2, grid.x3(k))).collect();
    let e: Vec<f64> = (0..grid.nz()).map(|k| envelope.eval(grid.x3(k))).collect();
    let u = half_field(*grid, |i, j, k| [(a1[j] + b1[k]) * e[k], (a2[i] + b2[k]) * e[k], 0.0]);
    debug_assert!(max_abs_divergence(&u, true) == 0.0);
    finish(u)
}

/// Largest mode count for [`gen_planar_lacunary`]: top wavenumber 2^M in x2 below ny/2, 2^(M−1) below nx/2.
pub fn max_planar_modes(grid: &Grid3) -> usize {
    let mut m = 0;
    while (2usize << m) < grid.ny / 2 && (1usize << m) < grid.nx / 2 {
        m += 1;
    }
    m
}

/// In-plane lacunary flow u = e(x3)·(−D2ψ, D1ψ, 0) with the stream function
/// ψ = Σ 2^(−(1+α)m)[cos(k x1) + cos(2k x2)/2 + cos(k x1 + 2k x2)/√5], k = 2^m,
/// differenced with the central stencil so it is discretely solenoidal.
///
/// Each octave carries a closed wavevector triad, so the field transfers
/// energy across scales; the passive-coordinate [`gen_lacunary`] family does not.
pub fn gen_planar_lacunary(grid: &Grid3, alpha: f64, mode_count: usize, envelope: &Envelope) -> Result<VectorField> {
    check_alpha_modes(alpha, mode_count, max_planar_modes(grid))?;
    envelope.validate(grid)?;
    let (nx, ny) = (grid.nx, grid.ny);
    let mut psi = vec![0.0; nx * ny];
    for i in 0..nx {
        for j in 0..ny {
            let (x, y) = (grid.x1(i), grid.x2(j));
            let mut s = 0.0;
            for m in 0..mode_count {
                let k = (1u64 << m) as f64;
                let a = 2f64.powf(-(1.0 + alpha) * m as f64);
                s += a * ((k * x).cos() + 0.5 * (2.0 * k * y).cos() + (k * x + 2.0 * k * y).cos() / 5f64.sqrt());
            }
            psi[i * ny + j] = s;
        }
    }
    let p = |i: usize, j: usize| psi[(i % nx) * ny + (j % ny)];
    let mut v1 = vec![0.0; nx * ny];
    let mut v2 = vec![0.0; nx * ny];
    for i in 0..nx {
        for j in 0..ny {
            v1[i * ny + j] = -(p(i, j + 1) - p(i, j + ny - 1)) / (2.0 * grid.hy);
            v2[i * ny + j] = (p(i + 1, j) - p(i + nx - 1, j)) / (2.0 * grid.hx);
        }
    }
    let e: Vec<f64> = (0..grid.nz()).map(|k| envelope.eval(grid.x3(k))).collect();
    let u = half_field(*grid, |i, j, k| [v1[i * ny + j] * e[k], v2[i * ny + j] * e[k], 0.0]);
    assert_solenoidal(&u);
    finish(u)
}

/// Gradient of the periodic bump b = exp((cos(x1−c1) + cos(x2−c2) − 2)/w²)·exp(−(x3−c3)²/w²).
pub fn gen_gradient_bump(grid: &Grid3, center: [f64; 3], width: f64) -> Result<VectorField> {
    if !(width > 0.0) {
        return domain(format!("bump width must be positive, got {width}"));
    }
    let w2 = width * width;
    let u = half_field(*grid, |i, j, k| {
        let (x, y, z) = (grid.x1(i), grid.x2(j), grid.x3(k));
        let b = ((( x - center[0]).cos() + (y - center[1]).cos() - 2.0) / w2).exp() * (-(z - center[2]).powi(2) / w2).exp();
        [-(x - center[0]).sin() / w2 * b, -(y - center[1]).sin() / w2 * b, -2.0 * (z - center[2]) / w2 * b]
    });
    finish(u)
}

/// Random smooth field (not solenoidal): a few low Fourier modes times the envelope.
///
/// With `half` the field is restricted to x3 ≥ 0 (HalfPlus), otherwise it fills the slab.
pub fn gen_random_smooth(grid: &Grid3, seed: u64, modes: usize, envelope: &Envelope, half: bool) -> Result<VectorField> {
    envelope.validate(grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kmax = (grid.nx.min(grid.ny) / 4).clamp(1, 3) as i64;
    let terms: Vec<(usize, [f64; 3], f64, f64)> = (0..3 * modes)
        .map(|n| {
            let k = [rng.gen_range(-kmax..=kmax) as f64, rng.gen_range(-kmax..=kmax) as f64, rng.gen_range(0.0..2.0)];
            (n % 3, k, rng.gen_range(0.0..2.0 * PI), rng.gen_range(-1.0..1.0))
        })
        .collect();
    let eval = |x: f64, y: f64, z: f64| {
        let mut v = [0.0; 3];
        for &(c, k, ph, a) in &terms {
            v[c] += a * (k[0] * x + k[1] * y + k[2] * z + ph).cos();
        }
        let e = envelope.eval(z);
        [v[0] * e, v[1] * e, v[2] * e]
    };
    let support = if half { Region::HalfPlus } else { Region::FullSlab };
    finish(VectorField::from_fn(*grid, support, 0.0, eval)?)
}

/// Snapshots a(τ)·u_base at the given times; a constant modulation shares one data block.
pub fn gen_time_series(base: &VectorField, modulation: &Modulation, times: &[f64]) -> Result<TimeSeries> {
    if times.first() != Some(&0.0) {
        return domain("time list must start at 0");
    }
    let snaps = times
        .iter()
        .map(|&t| match modulation {
            Modulation::Constant => base.clone().with_time(t),
            m => base.scaled(m.eval(t)).with_time(t),
        })
        .collect();
    TimeSeries::new(snaps)
}

/// Unsteady shear solution u = (U(x3), V(x1 − U(x3)·τ, x3), 0) with
/// U = a(x3)·e(x3) and V(ξ, x3) = amp·sin(ξ)·b(x3)·e(x3).
///
/// Exact for the Euler equations with zero pressure: u2 is transported by the shear.
pub fn gen_advected_shear(
    grid: &Grid3,
    shear: &Profile,
    transverse: &Profile,
    envelope: &Envelope,
    times: &[f64],
) -> Result<TimeSeries> {
    envelope.validate(grid)?;
    if times.first() != Some(&0.0) {
        return domain("time list must start at 0");
    }
    let col: Vec<(f64, f64)> = (0..grid.nz())
        .map(|k| {
            let z = grid.x3(k);
            let e = envelope.eval(z);
            (shear.eval(z) * e, transverse.eval(z) * e)
        })
        .collect();
    let snaps = times
        .iter()
        .map(|&t| {
            let u = half_field(*grid, |i, _, k| {
                let (uu, b) = col[k];
                [uu, b * (grid.x1(i) - uu * t).sin(), 0.0]
            })
            .with_time(t);
            finish(u)
        })
        .collect::<Result<Vec<_>>>()?;
    TimeSeries::new(snaps)
}

/// Serializable description of a generated field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", rename_all_fields = "camelCase")]
pub enum FieldKind {
    Shear { f: Profile, g: Profile },
    Lacunary { alpha: f64, mode_count: usize, seed: u64 },
    PlanarLacunary { alpha: f64, mode_count: usize },
    GradientBump { center: [f64; 3], width: f64 },
    TimeModulatedShear { f: Profile, g: Profile, modulation: Modulation },
    AdvectedShear { shear: Profile, transverse: Profile },
    RandomSmooth { seed: u64, modes: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub nz_half: usize,
    pub lz: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid3> {
        Grid3::new(self.nx, self.ny, self.nz_half, self.lz)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FieldSpec {
    #[serde(flatten)]
    pub kind: FieldKind,
    pub grid: GridSpec,
    pub envelope: Envelope,
}

impl FieldSpec {
    /// Time series at `times` (a steady kind yields equal snapshots).
    pub fn series(&self, times: &[f64]) -> Result<TimeSeries> {
        let grid = self.grid.build()?;
        let env = &self.envelope;
        let steady = |u: VectorField| gen_time_series(&u, &Modulation::Constant, times);
        match &self.kind {
            FieldKind::Shear { f, g } => steady(gen_shear(&grid, f, g, env)?),
            FieldKind::Lacunary { alpha, mode_count, seed } => steady(gen_lacunary(&grid, *alpha, *mode_count, *seed, env)?),
            FieldKind::PlanarLacunary { alpha, mode_count } => steady(gen_planar_lacunary(&grid, *alpha, *mode_count, env)?),
            FieldKind::GradientBump { center, width } => steady(gen_gradient_bump(&grid, *center, *width)?),
            FieldKind::RandomSmooth { seed, modes } => steady(gen_random_smooth(&grid, *seed, *modes, env, true)?),
            FieldKind::TimeModulatedShear { f, g, modulation } => gen_time_series(&gen_shear(&grid, f, g, env)?, modulation, times),
            FieldKind::AdvectedShear { shear, transverse } => gen_advected_shear(&grid, shear, transverse, env, times),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::lp_norm;

    fn grid() -> Grid3 {
        Grid3::new(32, 32, 16, 4.0).unwrap()
    }

    fn env() -> Envelope {
        Envelope::FlatTop { flat: 1.0, end: 3.0 }
    }

    #[test]
    fn envelope_margin_enforced() {
        let g = grid();
        assert!(Envelope::FlatTop { flat: 1.0, end: 5.0 }.validate(&g).is_err());
        assert!(Envelope::Gaussian { scale: 2.0 }.validate(&g).is_err());
        assert!(Envelope::Gaussian { scale: 0.6 }.validate(&g).is_ok());
        assert!(env().validate(&g).is_ok());
        assert_eq!(env().eval(0.5), 1.0);
        assert_eq!(env().eval(-3.0), 0.0);
    }

    #[test]
    fn shear_energy_matches_profile_quadrature() {
        let g = grid();
        let f = Profile::Sine { amp: 1.0, freq: 1.3, phase: 0.4 };
        let h = Profile::Polynomial { coeffs: vec![0.5, -0.2] };
        let u = gen_shear(&g, &f, &h, &env()).unwrap();
        let e2 = lp_norm(&u, 2.0, Region::HalfPlus).unwrap().powi(2);
        // 1-D trapezoid with full boundary cell, matching HalfPlus weights
        let mut s = 0.0;
        for k in g.k0()..g.nz() {
            let z = g.x3(k);
            let w = if k == g.nz() - 1 { 0.5 * g.hz } else { g.hz };
            s += w * (f.eval(z).powi(2) + h.eval(z).powi(2)) * env().eval(z).powi(2);
        }
        let oracle = 4.0 * PI * PI * s;
        assert!((e2 - oracle).abs() <= 1e-10 * oracle);
    }

    #[test]
    fn lacunary_nyquist_and_determinism() {
        let g = grid();
        let max = max_lacunary_modes(&g);
        assert_eq!(max, 4);
        let err = gen_lacunary(&g, 0.4, max + 1, 1, &env()).unwrap_err().to_string();
        assert!(err.contains(&format!("max admissible modeCount is {max}")), "{err}");
        let a = gen_lacunary(&g, 0.4, 4, 7, &env()).unwrap();
        let b = gen_lacunary(&g, 0.4, 4, 7, &env()).unwrap();
        assert_eq!(a, b);
        let c = gen_lacunary(&g, 0.4, 4, 8, &env()).unwrap();
        let d = a.lin_comb(1.0, &c, -1.0).unwrap();
        let na = lp_norm(&a, 2.0, Region::HalfPlus).unwrap();
        assert!(lp_norm(&d, 2.0, Region::HalfPlus).unwrap() > 0.1 * na);
        assert_eq!(max_abs_divergence(&a, false), 0.0);
        assert_eq!(a.boundary_normal_max(), 0.0);
    }

    #[test]
    fn lacunary_amplitudes_are_dyadic_powers() {
        let co = lacunary_coefficients(0.3, 6, 3);
        for (m, c) in co.u1.iter().enumerate() {
            assert_eq!(c.amplitude, 2f64.powf(-0.3 * m as f64));
            assert!(c.sign_h.abs() == 1.0 && c.sign_v.abs() == 1.0);
        }
    }

    #[test]
    fn planar_lacunary_is_discretely_solenoidal() {
        let g = grid();
        assert_eq!(max_planar_modes(&g), 3);
        let u = gen_planar_lacunary(&g, 0.5, 3, &env()).unwrap();
        assert!(max_abs_divergence(&u, false) < 1e-12);
    }

    #[test]
    fn modulated_series_energy_ratio() {
        let g = grid();
        let u = gen_shear(&g, &Profile::Constant { value: 1.0 }, &Profile::Constant { value: 0.0 }, &env()).unwrap();
        let ts = gen_time_series(&u, &Modulation::Linear { rate: 1.0 }, &[0.0, 0.5, 1.0]).unwrap();
        let e0 = lp_norm(&ts.snapshots()[0], 2.0, Region::HalfPlus).unwrap().powi(2);
        let e1 = lp_norm(&ts.snapshots()[2], 2.0, Region::HalfPlus).unwrap().powi(2);
        assert!((e1 / e0 - 4.0).abs() < 1e-12);
        let steady = gen_time_series(&u, &Modulation::Constant, &[0.0, 1.0]).unwrap();
        assert!(steady.is_steady());
    }

    #[test]
    fn advected_shear_snapshots_are_solenoidal() {
        let g = grid();
        let ts = gen_advected_shear(
            &g,
            &Profile::Sine { amp: 1.0, freq: 1.0, phase: 0.5 },
            &Profile::Constant { value: 0.7 },
            &env(),
            &[0.0, 0.25, 0.5],
        )
        .unwrap();
        for s in ts.snapshots() {
            assert_eq!(max_abs_divergence(s, false), 0.0);
        }
    }

    #[test]
    fn field_spec_json_roundtrip() {
        let spec = FieldSpec {
            kind: FieldKind::Lacunary { alpha: 0.25, mode_count: 3, seed: 11 },
            grid: GridSpec { nx: 16, ny: 16, nz_half: 8, lz: 4.0 },
            envelope: env(),
        };
        let s = serde_json::to_string(&spec).unwrap();
        let back: FieldSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.series(&[0.0, 1.0]).unwrap().len(), 2);
    }
}
