//! Deterministic quadrature, inner products and norms.
//!
//! Sums are pairwise per axis (x3 lines, then x2, then x1) with a fixed
//! split tree, so results do not depend on the worker count.

use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::field::{ScalarField, TensorField, VectorField};
use crate::grid::{Grid3, Region};

/// Pairwise (cascade) sum with a fixed split tree.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let m = xs.len() / 2;
    pairwise_sum(&xs[..m]) + pairwise_sum(&xs[m..])
}

/// Integrates the node function `f(flat_index)` over `region`.
///
/// Rectangle rule in x1, x2 and trapezoid weights in x3 (see [`Grid3::x3_weights`]).
pub fn integrate_with<F>(grid: &Grid3, region: Region, f: F) -> Result<f64>
where
    F: Fn(usize) -> f64 + Sync,
{
    let wz = grid.x3_weights(region)?;
    let ks: Vec<usize> = (0..grid.nz()).filter(|&k| wz[k] != 0.0).collect();
    if ks.is_empty() {
        return Ok(0.0);
    }
    let nz = grid.nz();
    let planes: Vec<f64> = (0..grid.nx)
        .into_par_iter()
        .map(|i| {
            let mut line = vec![0.0; ks.len()];
            let mut rows = vec![0.0; grid.ny];
            for (j, row) in rows.iter_mut().enumerate() {
                let base = (i * grid.ny + j) * nz;
                for (slot, &k) in line.iter_mut().zip(&ks) {
                    *slot = f(base + k) * wz[k];
                }
                *row = pairwise_sum(&line);
            }
            pairwise_sum(&rows)
        })
        .collect();
    Ok(pairwise_sum(&planes) * grid.hx * grid.hy)
}

/// Integrates line by line: `fill(i, j, buf)` writes the integrand along the
/// x3 line (i, j) into `buf` (length `nz`). Same quadrature and summation
/// tree as [`integrate_with`].
pub fn integrate_lines<F>(grid: &Grid3, region: Region, fill: F) -> Result<f64>
where
    F: Fn(usize, usize, &mut [f64]) + Sync,
{
    let wz = grid.x3_weights(region)?;
    let ks: Vec<usize> = (0..grid.nz()).filter(|&k| wz[k] != 0.0).collect();
    if ks.is_empty() {
        return Ok(0.0);
    }
    let planes: Vec<f64> = (0..grid.nx)
        .into_par_iter()
        .map(|i| {
            let mut buf = vec![0.0; grid.nz()];
            let mut line = vec![0.0; ks.len()];
            let mut rows = vec![0.0; grid.ny];
            for (j, row) in rows.iter_mut().enumerate() {
                fill(i, j, &mut buf);
                for (slot, &k) in line.iter_mut().zip(&ks) {
                    *slot = buf[k] * wz[k];
                }
                *row = pairwise_sum(&line);
            }
            pairwise_sum(&rows)
        })
        .collect();
    Ok(pairwise_sum(&planes) * grid.hx * grid.hy)
}

/// Integral of scalar samples over `region`.
pub fn integrate(f: &ScalarField, region: Region) -> Result<f64> {
    let d = f.data();
    integrate_with(f.grid(), region, |n| d[n])
}

/// Integral of raw samples laid out on `grid`.
pub fn integrate_slice(grid: &Grid3, data: &[f64], region: Region) -> Result<f64> {
    integrate_with(grid, region, |n| data[n])
}

/// ⟨f, g⟩ over `region` with the Euclidean pointwise product.
pub fn inner_product(f: &VectorField, g: &VectorField, region: Region) -> Result<f64> {
    f.grid().check_same(g.grid())?;
    let (a, b) = (f.comps(), g.comps());
    integrate_with(f.grid(), region, |n| a[0][n] * b[0][n] + a[1][n] * b[1][n] + a[2][n] * b[2][n])
}

/// Σ_ij F_ij G_ij integrated over `region`.
pub fn inner_product_tensor(f: &TensorField, g: &TensorField, region: Region) -> Result<f64> {
    f.grid().check_same(g.grid())?;
    let (a, b) = (f.comps(), g.comps());
    integrate_with(f.grid(), region, |n| {
        let mut s = 0.0;
        for c in 0..9 {
            s += a[c][n] * b[c][n];
        }
        s
    })
}

/// L^p norm of the pointwise Euclidean magnitude over `region`; `p = ∞` gives the nodal max.
pub fn lp_norm(f: &VectorField, p: f64, region: Region) -> Result<f64> {
    lp_norm3(f.grid(), f.comps(), p, region)
}

pub(crate) fn lp_norm3(grid: &Grid3, c: &[Vec<f64>; 3], p: f64, region: Region) -> Result<f64> {
    if !(p >= 1.0) {
        return domain(format!("L^p norm needs p >= 1, got {p}"));
    }
    let mag = |n: usize| (c[0][n] * c[0][n] + c[1][n] * c[1][n] + c[2][n] * c[2][n]).sqrt();
    if p.is_infinite() {
        let wz = grid.x3_weights(region)?;
        let nz = grid.nz();
        let mut m: f64 = 0.0;
        for n in 0..grid.len() {
            if wz[n % nz] != 0.0 {
                m = m.max(mag(n));
            }
        }
        return Ok(m);
    }
    let s = if p == 1.0 {
        integrate_with(grid, region, mag)?
    } else if p == 2.0 {
        integrate_with(grid, region, |n| c[0][n] * c[0][n] + c[1][n] * c[1][n] + c[2][n] * c[2][n])?
    } else if p == 3.0 {
        integrate_with(grid, region, |n| {
            let m = mag(n);
            m * m * m
        })?
    } else {
        integrate_with(grid, region, |n| mag(n).powf(p))?
    };
    Ok(s.powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_on_strip() {
        let g = Grid3::new(8, 6, 10, 2.0).unwrap();
        let one = ScalarField::new(g, vec![1.0; g.len()]).unwrap();
        let v = integrate(&one, Region::Strip(-1.0, 1.0)).unwrap();
        assert!((v - 8.0 * PI * PI).abs() <= 1e-12 * v);
        let zero = ScalarField::new(g, vec![0.0; g.len()]).unwrap();
        assert_eq!(integrate(&zero, Region::FullSlab).unwrap(), 0.0);
    }

    fn simpson(n: usize, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn gaussian_product_matches_simpson_oracle() {
        let g = Grid3::new(16, 8, 64, 8.0).unwrap();
        let f = ScalarField::from_fn(g, |x, _, z| x.sin().powi(2) * (-z * z).exp());
        let v = integrate(&f, Region::FullSlab).unwrap();
        let ox = simpson(4096, 0.0, 2.0 * PI, |x| x.sin().powi(2));
        let oy = simpson(4096, 0.0, 2.0 * PI, |_| 1.0);
        let oz = simpson(4096, -8.0, 8.0, |z| (-z * z).exp());
        let oracle = ox * oy * oz;
        assert!((v - oracle).abs() <= 1e-8 * oracle, "{v} vs {oracle}");
    }

    #[test]
    fn line_and_node_integration_agree_bitwise() {
        let g = Grid3::new(6, 5, 7, 2.0).unwrap();
        let f = ScalarField::from_fn(g, |x, y, z| (x - y).sin() * z * z + 1.0);
        let d = f.data();
        let a = integrate(&f, Region::Above(-0.5)).unwrap();
        let b = integrate_lines(&g, Region::Above(-0.5), |i, j, buf| buf.copy_from_slice(&d[g.idx(i, j, 0)..][..g.nz()]))
            .unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn halves_add_up_to_full_slab() {
        let g = Grid3::new(6, 6, 12, 3.0).unwrap();
        let f = ScalarField::from_fn(g, |x, y, z| (x + 2.0 * y).cos() + (-(z - 0.3).powi(2)).exp());
        let full = integrate(&f, Region::FullSlab).unwrap();
        let lo = integrate(&f, Region::Strip(-3.0, 0.0)).unwrap();
        let hi = integrate(&f, Region::Strip(0.0, 3.0)).unwrap();
        assert!((full - lo - hi).abs() < 1e-12 * full.abs());
    }

    #[test]
    fn norms_of_simple_fields() {
        let g = Grid3::new(32, 8, 8, 2.0).unwrap();
        let c = 1.7;
        let f = VectorField::from_fn(g, Region::Strip(0.0, 1.0), 0.0, |_, _, _| [c, 0.0, 0.0]).unwrap();
        let l2 = lp_norm(&f, 2.0, Region::Strip(0.0, 1.0)).unwrap();
        assert!((l2 - c * (4.0 * PI * PI).sqrt()).abs() < 1e-12);
        let s = VectorField::from_fn(g, Region::FullSlab, 0.0, |x, _, _| [x.sin(), 0.0, 0.0]).unwrap();
        let inf = lp_norm(&s, f64::INFINITY, Region::FullSlab).unwrap();
        assert!((inf - 1.0).abs() <= g.hx * g.hx);
        let z = VectorField::zeros(g, Region::FullSlab, 0.0);
        for p in [1.0, 2.0, 3.0, f64::INFINITY] {
            assert_eq!(lp_norm(&z, p, Region::FullSlab).unwrap(), 0.0);
        }
        let e1 = VectorField::from_fn(g, Region::FullSlab, 0.0, |_, _, _| [1.0, 0.0, 0.0]).unwrap();
        let e2 = VectorField::from_fn(g, Region::FullSlab, 0.0, |_, _, _| [0.0, 1.0, 0.0]).unwrap();
        assert_eq!(inner_product(&e1, &e2, Region::FullSlab).unwrap(), 0.0);
    }
}
