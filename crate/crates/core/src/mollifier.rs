//! The compactly supported bump kernel φ_ε, mollification `J_ε`, the
//! gradient convolution `∇J_ε` and double mollification.
//!
//! φ(x) = c·exp(−1/(1 − 4|x|²)) on the ball |x| < 1/2, φ_ε(y) = ε⁻³φ(y/ε).
//! Weights are renormalized so Σ w·hx·hy·hz = 1 exactly and the gradient
//! weights are antisymmetrized.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::fft3::{smooth_len, Fft3};
use crate::field::{TensorField, VectorField};
use crate::grid::Grid3;
use crate::quad::pairwise_sum;

/// Convolution back end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// Direct summation over kernel offsets, O(N·(ε/h)³).
    #[default]
    Direct,
    /// FFT convolution: periodic in x1, x2 and zero-padded in x3 so the
    /// zero fill beyond ±Lz is reproduced exactly.
    Spectral,
}

/// Offsets (di, dj) with a contiguous x3 range `−kmax ..= kmax`.
#[derive(Debug, Clone, Copy)]
struct Pencil {
    di: i64,
    dj: i64,
    kmax: i64,
    start: usize,
}

/// Discretized mollifier at scale ε on a fixed grid.
#[derive(Debug, Clone)]
pub struct MollKernel {
    epsilon: f64,
    grid: Grid3,
    pencils: Vec<Pencil>,
    /// Density weights w with Σ w·h³ = 1.
    weights: Vec<f64>,
    /// ∂_a of the density, antisymmetric in its own coordinate.
    grad_weights: [Vec<f64>; 3],
    norm_const: f64,
    engine: Engine,
    spectral: Option<Arc<Spectral>>,
}

#[derive(Debug)]
struct Spectral {
    fft: Fft3,
    nl: usize,
    /// Spectra of the cell-volume-scaled taps: w, ∂1w, ∂2w, ∂3w.
    spectra: [Vec<Complex64>; 4],
}

fn profile(s: f64) -> f64 {
    // s = |x|², support 4s < 1
    let t = 1.0 - 4.0 * s;
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Smallest admissible ε on `grid`.
pub fn min_epsilon(grid: &Grid3) -> f64 {
    4.0 * grid.h_max()
}

/// Builds the kernel with the direct engine.
pub fn make_kernel(epsilon: f64, grid: &Grid3) -> Result<MollKernel> {
    MollKernel::new(epsilon, grid, Engine::Direct)
}

impl MollKernel {
    pub fn new(epsilon: f64, grid: &Grid3, engine: Engine) -> Result<Self> {
        let min = min_epsilon(grid);
        if !(epsilon.is_finite() && epsilon >= min * (1.0 - 1e-12)) {
            return domain(format!(
                "epsilon = {epsilon} is under-resolved on this grid: minimum epsilon is {min} (4 nodes across the support)"
            ));
        }
        if epsilon / 2.0 >= grid.lz {
            return domain(format!("epsilon/2 = {} must be below Lz = {}", epsilon / 2.0, grid.lz));
        }
        let g = *grid;
        let ri = (0.5 * epsilon / g.hx).ceil() as i64;
        let rj = (0.5 * epsilon / g.hy).ceil() as i64;
        let rk = (0.5 * epsilon / g.hz).ceil() as i64;
        let mut pencils = Vec::new();
        let mut raw = Vec::new();
        let mut graw: [Vec<f64>; 3] = Default::default();
        for di in -ri..=ri {
            for dj in -rj..=rj {
                let a = di as f64 * g.hx / epsilon;
                let b = dj as f64 * g.hy / epsilon;
                let mut kmax = -1;
                for dk in 0..=rk {
                    let c = dk as f64 * g.hz / epsilon;
                    if profile(a * a + b * b + c * c) > 0.0 {
                        kmax = dk;
                    }
                }
                if kmax < 0 {
                    continue;
                }
                pencils.push(Pencil { di, dj, kmax, start: raw.len() });
                for dk in -kmax..=kmax {
                    let c = dk as f64 * g.hz / epsilon;
                    let s = a * a + b * b + c * c;
                    let p = profile(s);
                    let t = 1.0 - 4.0 * s;
                    let dfac = -8.0 / (t * t) * p / epsilon;
                    raw.push(p);
                    graw[0].push(dfac * a);
                    graw[1].push(dfac * b);
                    graw[2].push(dfac * c);
                }
            }
        }
        let vol = g.cell_volume();
        let total = pairwise_sum(&raw) * vol;
        let weights: Vec<f64> = raw.iter().map(|p| p / total).collect();
        let mut grad_weights: [Vec<f64>; 3] = std::array::from_fn(|a| graw[a].iter().map(|p| p / total).collect());
        // antisymmetrize: offsets are laid out so that index m and len−1−m are mirror images
        for gw in grad_weights.iter_mut() {
            let n = gw.len();
            for m in 0..n / 2 {
                let v = 0.5 * (gw[m] - gw[n - 1 - m]);
                gw[m] = v;
                gw[n - 1 - m] = -v;
            }
            if n % 2 == 1 {
                gw[n / 2] = 0.0;
            }
        }
        let norm_const = epsilon.powi(3) / total;
        let mut k = Self {
            epsilon,
            grid: g,
            pencils,
            weights,
            grad_weights,
            norm_const,
            engine,
            spectral: None,
        };
        if engine == Engine::Spectral {
            k.spectral = Some(Arc::new(k.build_spectral()));
        }
        Ok(k)
    }

    fn build_spectral(&self) -> Spectral {
        let g = self.grid;
        let nz = g.nz();
        let rk = self.pencils.iter().map(|p| p.kmax).max().unwrap_or(0) as usize;
        let nl = smooth_len(nz + rk);
        let fft = Fft3::new([g.nx, g.ny, nl]);
        let vol = g.cell_volume();
        let taps = |w: &[f64]| {
            let mut buf = vec![Complex64::new(0.0, 0.0); fft.len()];
            for p in &self.pencils {
                let i = p.di.rem_euclid(g.nx as i64) as usize;
                let j = p.dj.rem_euclid(g.ny as i64) as usize;
                for (m, dk) in (-p.kmax..=p.kmax).enumerate() {
                    let k = dk.rem_euclid(nl as i64) as usize;
                    buf[(i * g.ny + j) * nl + k].re += w[p.start + m] * vol;
                }
            }
            fft.process(&mut buf, false);
            buf
        };
        let spectra = [
            taps(&self.weights),
            taps(&self.grad_weights[0]),
            taps(&self.grad_weights[1]),
            taps(&self.grad_weights[2]),
        ];
        Spectral { fft, nl, spectra }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn engine(&self) -> Engine {
        self.engine
    }

    /// Constant c with w(y) = c·ε⁻³·exp(−1/(1 − 4|y/ε|²)) after renormalization.
    pub fn norm_const(&self) -> f64 {
        self.norm_const
    }

    /// Support radius in nodes along each axis.
    pub fn radius_nodes(&self) -> [i64; 3] {
        let ri = self.pencils.iter().map(|p| p.di.abs()).max().unwrap_or(0);
        let rj = self.pencils.iter().map(|p| p.dj.abs()).max().unwrap_or(0);
        let rk = self.pencils.iter().map(|p| p.kmax).max().unwrap_or(0);
        [ri, rj, rk]
    }

    /// All offsets with their weight, in the fixed accumulation order.
    pub fn offsets(&self) -> impl Iterator<Item = ([i64; 3], f64)> + '_ {
        self.pencils.iter().flat_map(move |p| {
            (-p.kmax..=p.kmax).enumerate().map(move |(m, dk)| ([p.di, p.dj, dk], self.weights[p.start + m]))
        })
    }

    fn flat_index(&self, d: [i64; 3]) -> Option<usize> {
        let p = self.pencils.iter().find(|p| p.di == d[0] && p.dj == d[1])?;
        (d[2].abs() <= p.kmax).then(|| p.start + (d[2] + p.kmax) as usize)
    }

    /// Density weight at integer offset `d` (0 outside the support).
    pub fn weight(&self, d: [i64; 3]) -> f64 {
        self.flat_index(d).map_or(0.0, |n| self.weights[n])
    }

    /// Gradient weight ∂_a φ_ε at offset `d`.
    pub fn grad_weight(&self, a: usize, d: [i64; 3]) -> f64 {
        self.flat_index(d).map_or(0.0, |n| self.grad_weights[a][n])
    }

    /// Σ w·h³ (equal to 1 up to rounding).
    pub fn mass(&self) -> f64 {
        pairwise_sum(&self.weights) * self.grid.cell_volume()
    }

    /// Σ ∂_a w·h³ for each a, summed over mirrored pairs.
    pub fn grad_sums(&self) -> [f64; 3] {
        std::array::from_fn(|a| {
            let gw = &self.grad_weights[a];
            let n = gw.len();
            let pairs: Vec<f64> = (0..n / 2).map(|m| gw[m] + gw[n - 1 - m]).collect();
            (pairwise_sum(&pairs) + if n % 2 == 1 { gw[n / 2] } else { 0.0 }) * self.grid.cell_volume()
        })
    }

    /// Σ y_a² w(y)·h³ for each axis.
    pub fn second_moments(&self) -> [f64; 3] {
        let g = self.grid;
        let h = [g.hx, g.hy, g.hz];
        std::array::from_fn(|a| {
            let v: Vec<f64> = self.offsets().map(|(d, w)| (d[a] as f64 * h[a]).powi(2) * w).collect();
            pairwise_sum(&v) * g.cell_volume()
        })
    }

    fn check(&self, g: &Grid3) -> Result<()> {
        self.grid.check_same(g)
    }

    /// Convolution of one scalar array with tap set `q` (0 = w, 1..=3 = ∂_{q−1} w).
    pub(crate) fn conv(&self, a: &[f64], q: usize) -> Vec<f64> {
        self.conv_many(&[a], q).pop().unwrap()
    }

    /// Convolutions of several arrays with the same tap set.
    pub(crate) fn conv_many(&self, arrays: &[&[f64]], q: usize) -> Vec<Vec<f64>> {
        match &self.spectral {
            Some(sp) => {
                let mut out = Vec::with_capacity(arrays.len());
                for pair in arrays.chunks(2) {
                    let (x, y) = self.conv_spectral(sp, pair[0], pair.get(1).copied(), q);
                    out.push(x);
                    if let Some(y) = y {
                        out.push(y);
                    }
                }
                out
            }
            None => {
                let taps = if q == 0 { &self.weights } else { &self.grad_weights[q - 1] };
                arrays.iter().map(|a| self.conv_direct(a, taps)).collect()
            }
        }
    }

    fn conv_direct(&self, a: &[f64], taps: &[f64]) -> Vec<f64> {
        let g = self.grid;
        let nz = g.nz();
        let vol = g.cell_volume();
        let scaled: Vec<f64> = taps.iter().map(|t| t * vol).collect();
        let mut out = vec![0.0; a.len()];
        out.par_chunks_mut(g.ny * nz).enumerate().for_each(|(i, plane)| {
            for j in 0..g.ny {
                let o = &mut plane[j * nz..][..nz];
                for p in &self.pencils {
                    let si = (i as i64 - p.di).rem_euclid(g.nx as i64) as usize;
                    let sj = (j as i64 - p.dj).rem_euclid(g.ny as i64) as usize;
                    let src = &a[(si * g.ny + sj) * nz..][..nz];
                    for (m, dk) in (-p.kmax..=p.kmax).enumerate() {
                        let t = scaled[p.start + m];
                        // o[k] += t·src[k − dk] for 0 ≤ k − dk < nz
                        let k_lo = dk.max(0) as usize;
                        let k_hi = (nz as i64 + dk).min(nz as i64) as usize;
                        if k_hi <= k_lo {
                            continue;
                        }
                        let s_lo = (k_lo as i64 - dk) as usize;
                        let len = k_hi - k_lo;
                        for (ov, sv) in o[k_lo..k_hi].iter_mut().zip(&src[s_lo..s_lo + len]) {
                            *ov += t * sv;
                        }
                    }
                }
            }
        });
        out
    }

    fn conv_spectral(&self, sp: &Spectral, a: &[f64], b: Option<&[f64]>, q: usize) -> (Vec<f64>, Option<Vec<f64>>) {
        let g = self.grid;
        let nz = g.nz();
        let nl = sp.nl;
        let mut buf = vec![Complex64::new(0.0, 0.0); sp.fft.len()];
        for (line, n0) in buf.chunks_mut(nl).zip((0..g.nx * g.ny).map(|l| l * nz)) {
            for k in 0..nz {
                line[k] = Complex64::new(a[n0 + k], b.map_or(0.0, |b| b[n0 + k]));
            }
        }
        sp.fft.process(&mut buf, false);
        buf.par_iter_mut().zip(sp.spectra[q].par_iter()).for_each(|(x, s)| *x *= s);
        sp.fft.process(&mut buf, true);
        let scale = 1.0 / sp.fft.len() as f64;
        let mut x = vec![0.0; a.len()];
        let mut y = b.map(|_| vec![0.0; a.len()]);
        for (l, line) in buf.chunks(nl).enumerate() {
            for k in 0..nz {
                x[l * nz + k] = line[k].re * scale;
                if let Some(y) = y.as_mut() {
                    y[l * nz + k] = line[k].im * scale;
                }
            }
        }
        (x, y)
    }

    /// Σ_y w(y)·(a(x − y) − a(x))·(b(x − y) − b(x))·h³ by direct summation, zero fill beyond the slab.
    pub(crate) fn commutator_direct(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let g = self.grid;
        let nz = g.nz();
        let vol = g.cell_volume();
        let scaled: Vec<f64> = self.weights.iter().map(|t| t * vol).collect();
        let mut out = vec![0.0; a.len()];
        out.par_chunks_mut(g.ny * nz).enumerate().for_each(|(i, plane)| {
            for j in 0..g.ny {
                let base = (i * g.ny + j) * nz;
                let (ah, bh) = (&a[base..][..nz], &b[base..][..nz]);
                let o = &mut plane[j * nz..][..nz];
                for p in &self.pencils {
                    let si = (i as i64 - p.di).rem_euclid(g.nx as i64) as usize;
                    let sj = (j as i64 - p.dj).rem_euclid(g.ny as i64) as usize;
                    let src = (si * g.ny + sj) * nz;
                    let (asrc, bsrc) = (&a[src..][..nz], &b[src..][..nz]);
                    for (m, dk) in (-p.kmax..=p.kmax).enumerate() {
                        let t = scaled[p.start + m];
                        for k in 0..nz {
                            let sk = k as i64 - dk;
                            let (av, bv) =
                                if (0..nz as i64).contains(&sk) { (asrc[sk as usize], bsrc[sk as usize]) } else { (0.0, 0.0) };
                            o[k] += t * (av - ah[k]) * (bv - bh[k]);
                        }
                    }
                }
            }
        });
        out
    }
}

/// J_ε f for a vector field.
pub fn mollify(f: &VectorField, k: &MollKernel) -> Result<VectorField> {
    k.check(f.grid())?;
    let c = f.comps();
    let mut out = k.conv_many(&[&c[0], &c[1], &c[2]], 0).into_iter();
    let comps = std::array::from_fn(|_| out.next().unwrap());
    Ok(VectorField::from_parts(*f.grid(), comps, f.support().widened(0.5 * k.epsilon), f.time()))
}

/// J_ε F for a tensor field.
pub fn mollify_tensor(f: &TensorField, k: &MollKernel) -> Result<TensorField> {
    k.check(f.grid())?;
    let refs: Vec<&[f64]> = f.comps().iter().map(|a| a.as_slice()).collect();
    Ok(TensorField::from_parts(*f.grid(), k.conv_many(&refs, 0), f.support().widened(0.5 * k.epsilon)))
}

/// J_ε J_ε f.
pub fn double_mollify(f: &VectorField, k: &MollKernel) -> Result<VectorField> {
    mollify(&mollify(f, k)?, k)
}

pub fn double_mollify_tensor(f: &TensorField, k: &MollKernel) -> Result<TensorField> {
    mollify_tensor(&mollify_tensor(f, k)?, k)
}

/// ∇J_ε f with entry (i, j) = ∂_i (J_ε f)_j, i.e. ∂_i w convolved with f_j.
pub fn grad_mollify(f: &VectorField, k: &MollKernel) -> Result<TensorField> {
    k.check(f.grid())?;
    let c = f.comps();
    let mut comps = Vec::with_capacity(9);
    for i in 0..3 {
        comps.extend(k.conv_many(&[&c[0], &c[1], &c[2]], i + 1));
    }
    Ok(TensorField::from_parts(*f.grid(), comps, f.support().widened(0.5 * k.epsilon)))
}

/// ∇J_ε f evaluated on increments: Σ_y ∂_i w(y)·(f_j(x − y) − f_j(x))·h³ (direct summation).
pub fn grad_mollify_increments(f: &VectorField, k: &MollKernel) -> Result<TensorField> {
    k.check(f.grid())?;
    let g = *f.grid();
    let nz = g.nz();
    let vol = g.cell_volume();
    let mut comps = Vec::with_capacity(9);
    for i in 0..3 {
        let taps: Vec<f64> = k.grad_weights[i].iter().map(|t| t * vol).collect();
        for j in 0..3 {
            let a = f.comp(j);
            let mut out = vec![0.0; a.len()];
            out.par_chunks_mut(g.ny * nz).enumerate().for_each(|(ii, plane)| {
                for jj in 0..g.ny {
                    let here = &a[(ii * g.ny + jj) * nz..][..nz];
                    let o = &mut plane[jj * nz..][..nz];
                    for p in &k.pencils {
                        let si = (ii as i64 - p.di).rem_euclid(g.nx as i64) as usize;
                        let sj = (jj as i64 - p.dj).rem_euclid(g.ny as i64) as usize;
                        let src = &a[(si * g.ny + sj) * nz..][..nz];
                        for (m, dk) in (-p.kmax..=p.kmax).enumerate() {
                            let t = taps[p.start + m];
                            for kk in 0..nz {
                                let sk = kk as i64 - dk;
                                let v = if (0..nz as i64).contains(&sk) { src[sk as usize] } else { 0.0 };
                                o[kk] += t * (v - here[kk]);
                            }
                        }
                    }
                }
            });
            comps.push(out);
        }
    }
    Ok(TensorField::from_parts(g, comps, f.support().widened(0.5 * k.epsilon)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Region;
    use crate::reflect::reflect;

    fn grid() -> Grid3 {
        Grid3::new(16, 16, 12, 3.0).unwrap()
    }

    #[test]
    fn under_resolved_epsilon_names_minimum() {
        let g = grid();
        let err = make_kernel(0.5, &g).unwrap_err().to_string();
        assert!(err.contains(&format!("{}", min_epsilon(&g))), "{err}");
        assert!(make_kernel(6.5, &g).is_err());
    }

    #[test]
    fn kernel_mass_symmetry_and_gradient_sums() {
        let g = grid();
        let k = make_kernel(1.8, &g).unwrap();
        assert!((k.mass() - 1.0).abs() < 1e-14);
        let [ri, rj, rk] = k.radius_nodes();
        for di in -ri..=ri {
            for dj in -rj..=rj {
                for dk in -rk..=rk {
                    let d = [di, dj, dk];
                    assert_eq!(k.weight(d).to_bits(), k.weight([-di, -dj, -dk]).to_bits());
                    assert_eq!(k.weight(d).to_bits(), k.weight([-di, dj, dk]).to_bits());
                    assert_eq!(k.grad_weight(0, d), -k.grad_weight(0, [-di, dj, dk]));
                    assert_eq!(k.grad_weight(0, d), k.grad_weight(0, [di, -dj, dk]));
                    assert_eq!(k.grad_weight(2, d), -k.grad_weight(2, [di, dj, -dk]));
                    let y = [di as f64 * g.hx, dj as f64 * g.hy, dk as f64 * g.hz];
                    if k.weight(d) > 0.0 {
                        assert!((y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt() < 0.9);
                    }
                }
            }
        }
        for s in k.grad_sums() {
            assert!(s.abs() <= 1e-14);
        }
    }

    #[test]
    fn constant_is_preserved_away_from_slab_ends() {
        let g = grid();
        let k = make_kernel(1.8, &g).unwrap();
        let f = VectorField::from_fn(g, Region::FullSlab, 0.0, |_, _, _| [2.5, -1.0, 0.25]).unwrap();
        let j = mollify(&f, &k).unwrap();
        for n in 0..g.len() {
            if g.x3(n % g.nz()).abs() <= g.lz - 0.9 {
                assert!((j.comp(0)[n] - 2.5).abs() < 1e-12);
                assert!((j.comp(2)[n] - 0.25).abs() < 1e-12);
            }
        }
        let gm = grad_mollify(&f, &k).unwrap();
        for n in 0..g.len() {
            if g.x3(n % g.nz()).abs() <= g.lz - 0.9 {
                for c in gm.comps() {
                    assert!(c[n].abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn spectral_matches_direct() {
        let g = Grid3::new(12, 10, 9, 3.0).unwrap();
        let f = VectorField::from_fn(g, Region::FullSlab, 0.0, |x, y, z| {
            [(x + 2.0 * y).sin() * (-z * z).exp(), z * (-z * z).exp(), (x - y).cos() * (1.0 + z).tanh()]
        })
        .unwrap();
        let kd = MollKernel::new(2.6, &g, Engine::Direct).unwrap();
        let ks = MollKernel::new(2.6, &g, Engine::Spectral).unwrap();
        let a = mollify(&f, &kd).unwrap();
        let b = mollify(&f, &ks).unwrap();
        for c in 0..3 {
            for (x, y) in a.comp(c).iter().zip(b.comp(c)) {
                assert!((x - y).abs() < 1e-13);
            }
        }
        let ga = grad_mollify(&f, &kd).unwrap();
        let gb = grad_mollify(&f, &ks).unwrap();
        let gc = grad_mollify_increments(&f, &kd).unwrap();
        for c in 0..9 {
            for ((x, y), z) in ga.comps()[c].iter().zip(&gb.comps()[c]).zip(&gc.comps()[c]) {
                assert!((x - y).abs() < 1e-12);
                assert!((x - z).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reflection_commutes() {
        let g = grid();
        let k = make_kernel(2.0, &g).unwrap();
        let f = VectorField::from_fn(g, Region::FullSlab, 0.0, |x, y, z| {
            [x.sin() * (-(z - 0.4).powi(2)).exp(), (y + z).cos() * (-z * z).exp(), (x * y).cos() * (-z * z).exp()]
        })
        .unwrap();
        let a = mollify(&reflect(&f), &k).unwrap();
        let b = reflect(&mollify(&f, &k).unwrap());
        for c in 0..3 {
            for (x, y) in a.comp(c).iter().zip(b.comp(c)) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
