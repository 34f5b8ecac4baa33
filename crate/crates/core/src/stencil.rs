//! Grid shifts and second-order finite differences.

use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::field::{ScalarField, TensorField, VectorField};
use crate::grid::{Grid3, Region};
use crate::quad::{integrate_with, lp_norm3};

/// Translate: `shift(f, o)(x) = f(x + o·h)`, periodic in x1, x2 and zero-filled in x3.
pub fn shift(f: &VectorField, offset: [i64; 3]) -> VectorField {
    let g = *f.grid();
    let comps = std::array::from_fn(|c| shift_slice(&g, f.comp(c), offset));
    let support = f.support().translated(-(offset[2] as f64) * g.hz);
    VectorField::from_parts(g, comps, support, f.time())
}

pub(crate) fn shift_slice(g: &Grid3, a: &[f64], offset: [i64; 3]) -> Vec<f64> {
    let nz = g.nz();
    let mut out = vec![0.0; a.len()];
    let oi = offset[0].rem_euclid(g.nx as i64) as usize;
    let oj = offset[1].rem_euclid(g.ny as i64) as usize;
    let ok = offset[2];
    // destination k range whose source k + ok lies inside the slab
    let k_lo = (-ok).max(0) as usize;
    let k_hi = (nz as i64 - ok).min(nz as i64);
    if k_hi <= k_lo as i64 {
        return out;
    }
    let k_hi = k_hi as usize;
    out.par_chunks_mut(g.ny * nz).enumerate().for_each(|(i, plane)| {
        let si = (i + oi) % g.nx;
        for j in 0..g.ny {
            let sj = (j + oj) % g.ny;
            let src = &a[(si * g.ny + sj) * nz..][..nz];
            let dst = &mut plane[j * nz..][..nz];
            for k in k_lo..k_hi {
                dst[k] = src[(k as i64 + ok) as usize];
            }
        }
    });
    out
}

/// Central difference along axis `axis` (0, 1 periodic; 2 one-sided second order at ±Lz).
pub(crate) fn diff(g: &Grid3, a: &[f64], axis: usize) -> Vec<f64> {
    let nz = g.nz();
    let mut out = vec![0.0; a.len()];
    out.par_chunks_mut(g.ny * nz).enumerate().for_each(|(i, plane)| match axis {
        0 => {
            let ip = (i + 1) % g.nx;
            let im = (i + g.nx - 1) % g.nx;
            let s = 0.5 / g.hx;
            for (n, o) in plane.iter_mut().enumerate() {
                *o = (a[ip * g.ny * nz + n] - a[im * g.ny * nz + n]) * s;
            }
        }
        1 => {
            let s = 0.5 / g.hy;
            for j in 0..g.ny {
                let jp = (j + 1) % g.ny;
                let jm = (j + g.ny - 1) % g.ny;
                for k in 0..nz {
                    plane[j * nz + k] = (a[(i * g.ny + jp) * nz + k] - a[(i * g.ny + jm) * nz + k]) * s;
                }
            }
        }
        _ => {
            let s = 0.5 / g.hz;
            for j in 0..g.ny {
                let line = &a[(i * g.ny + j) * nz..][..nz];
                let o = &mut plane[j * nz..][..nz];
                if nz >= 3 {
                    o[0] = (3.0 * (line[1] - line[0]) - (line[2] - line[1])) * s;
                    o[nz - 1] = (3.0 * (line[nz - 1] - line[nz - 2]) - (line[nz - 2] - line[nz - 3])) * s;
                }
                for k in 1..nz - 1 {
                    o[k] = (line[k + 1] - line[k - 1]) * s;
                }
            }
        }
    });
    out
}

/// Discrete divergence ∂1f1 + ∂2f2 + ∂3f3.
pub fn divergence(f: &VectorField) -> ScalarField {
    let g = *f.grid();
    let d1 = diff(&g, f.comp(0), 0);
    let d2 = diff(&g, f.comp(1), 1);
    let d3 = diff(&g, f.comp(2), 2);
    let data = d1.iter().zip(&d2).zip(&d3).map(|((a, b), c)| a + b + c).collect();
    ScalarField::new(g, data).expect("shape preserved")
}

/// max |divergence| without materializing it; `interior` skips the x3 end planes.
pub fn max_abs_divergence(f: &VectorField, interior: bool) -> f64 {
    let g = *f.grid();
    let nz = g.nz();
    let c = f.comps();
    let (k_lo, k_hi) = if interior { (1, nz - 1) } else { (0, nz) };
    (0..g.nx)
        .into_par_iter()
        .map(|i| {
            let ip = (i + 1) % g.nx;
            let im = (i + g.nx - 1) % g.nx;
            let mut m: f64 = 0.0;
            for j in 0..g.ny {
                let jp = (j + 1) % g.ny;
                let jm = (j + g.ny - 1) % g.ny;
                for k in k_lo..k_hi {
                    let d1 = (c[0][(ip * g.ny + j) * nz + k] - c[0][(im * g.ny + j) * nz + k]) * (0.5 / g.hx);
                    let d2 = (c[1][(i * g.ny + jp) * nz + k] - c[1][(i * g.ny + jm) * nz + k]) * (0.5 / g.hy);
                    let l3 = &c[2][(i * g.ny + j) * nz..][..nz];
                    let d3 = if k == 0 {
                        (3.0 * (l3[1] - l3[0]) - (l3[2] - l3[1])) * (0.5 / g.hz)
                    } else if k == nz - 1 {
                        (3.0 * (l3[nz - 1] - l3[nz - 2]) - (l3[nz - 2] - l3[nz - 3])) * (0.5 / g.hz)
                    } else {
                        (l3[k + 1] - l3[k - 1]) * (0.5 / g.hz)
                    };
                    m = m.max((d1 + d2 + d3).abs());
                }
            }
            m
        })
        .reduce(|| 0.0, f64::max)
}

/// Discrete gradient of a scalar field.
pub fn gradient(phi: &ScalarField) -> VectorField {
    let g = *phi.grid();
    let comps = std::array::from_fn(|a| diff(&g, phi.data(), a));
    VectorField::from_parts(g, comps, Region::FullSlab, 0.0)
}

/// Discrete gradient tensor, entry (i, j) = ∂_i f_j.
pub fn gradient_tensor(f: &VectorField) -> TensorField {
    let g = *f.grid();
    let mut comps = Vec::with_capacity(9);
    for i in 0..3 {
        for j in 0..3 {
            comps.push(diff(&g, f.comp(j), i));
        }
    }
    TensorField::from_parts(g, comps, Region::FullSlab)
}

/// max over test scalars φ of |⟨f, ∇φ⟩_{D₊}| / ‖∇φ‖_{L²(D₊)}.
pub fn weak_div_defect(f: &VectorField, test_fns: &[ScalarField]) -> Result<f64> {
    if test_fns.is_empty() {
        return domain("weak_div_defect needs at least one test scalar");
    }
    let g = *f.grid();
    let mut worst: f64 = 0.0;
    for phi in test_fns {
        g.check_same(phi.grid())?;
        let grad = gradient(phi);
        let gc = grad.comps();
        let fc = f.comps();
        let pairing =
            integrate_with(&g, Region::HalfPlus, |n| fc[0][n] * gc[0][n] + fc[1][n] * gc[1][n] + fc[2][n] * gc[2][n])?;
        let norm = lp_norm3(&g, gc, 2.0, Region::HalfPlus)?;
        if norm == 0.0 {
            continue;
        }
        worst = worst.max(pairing.abs() / norm);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::lp_norm;

    fn grid() -> Grid3 {
        Grid3::new(16, 12, 10, 2.5).unwrap()
    }

    #[test]
    fn shift_basics() {
        let g = grid();
        let f = VectorField::from_fn(g, Region::FullSlab, 0.0, |x, y, z| [x.sin(), y.cos() * z, (-z * z).exp()]).unwrap();
        assert_eq!(shift(&f, [0, 0, 0]).comps(), f.comps());
        assert_eq!(shift(&f, [g.nx as i64, -(g.ny as i64), 0]).comps(), f.comps());
        let half = shift(&f, [g.nx as i64 / 2, 0, 0]);
        for n in 0..g.len() {
            assert!((half.comp(0)[n] + f.comp(0)[n]).abs() < 1e-12);
        }
    }

    #[test]
    fn shift_zero_fills_in_x3() {
        let g = grid();
        let f = VectorField::from_fn(g, Region::FullSlab, 0.0, |_, _, _| [1.0, 0.0, 0.0]).unwrap();
        let s = shift(&f, [0, 0, 3]);
        assert_eq!(s.at(0, 0, g.nz() - 1)[0], 0.0);
        assert_eq!(s.at(0, 0, g.nz() - 4)[0], 1.0);
        assert_eq!(s.at(0, 0, g.nz() - 3)[0], 0.0);
    }

    #[test]
    fn divergence_examples() {
        let g = grid();
        let c = VectorField::from_fn(g, Region::FullSlab, 0.0, |_, _, _| [1.3, -0.2, 0.7]).unwrap();
        assert!(divergence(&c).data().iter().all(|&v| v == 0.0));
        let s = VectorField::from_fn(g, Region::FullSlab, 0.0, |_, y, z| [y.sin(), z.sin(), 0.0]).unwrap();
        assert!(divergence(&s).data().iter().all(|&v| v == 0.0));
        let t = VectorField::from_fn(g, Region::FullSlab, 0.0, |x, _, _| [x.sin(), 0.0, 0.0]).unwrap();
        let d = divergence(&t);
        for i in 0..g.nx {
            let err = (d.data()[g.idx(i, 0, 0)] - g.x1(i).cos()).abs();
            assert!(err <= g.hx * g.hx / 6.0 + 1e-14);
        }
    }

    #[test]
    fn one_sided_x3_difference_is_second_order() {
        let g = grid();
        let f = ScalarField::from_fn(g, |_, _, z| z * z);
        let d = diff(&g, f.data(), 2);
        for k in 0..g.nz() {
            assert!((d[k] - 2.0 * g.x3(k)).abs() < 1e-12);
        }
    }

    #[test]
    fn weak_div_defect_cases() {
        let g = Grid3::new(24, 24, 24, 4.0).unwrap();
        let phi = ScalarField::from_fn(g, |x, y, z| (x + 0.3).sin() * (2.0 * y).cos() * (-z * z).exp());
        let c = VectorField::from_fn(g, Region::HalfPlus, 0.0, |_, _, _| [0.4, -1.1, 0.0]).unwrap();
        assert!(weak_div_defect(&c, std::slice::from_ref(&phi)).unwrap() <= 1e-10);
        assert!(weak_div_defect(&c, &[]).is_err());
        // gradient of a bump paired with itself
        let bump = ScalarField::from_fn(g, |x, y, z| {
            ((x - 3.0).cos() + (y - 3.0).cos()) * (-(z - 1.5).powi(2)).exp()
        });
        let gb = gradient(&bump);
        let d = weak_div_defect(&gb, &[bump]).unwrap();
        let norm = lp_norm(&gb, 2.0, Region::HalfPlus).unwrap();
        assert!(d > 0.1);
        assert!((d - norm).abs() < 1e-2 * norm, "{d} vs {norm}");
    }
}
