//! Slab grid and integration regions.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{domain, Error, Result};

/// Uniform grid on T² × [−Lz, Lz]; periodic (period 2π) in x1 and x2.
///
/// Nodes in x3 are `k·hz` for `k = −nz_half ..= nz_half`, stored with
/// index `k + nz_half`. Flat storage is `(i·ny + j)·nz + k`, x3 fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Grid3 {
    pub nx: usize,
    pub ny: usize,
    pub nz_half: usize,
    pub lz: f64,
    pub hx: f64,
    pub hy: f64,
    pub hz: f64,
}

impl Grid3 {
    pub fn new(nx: usize, ny: usize, nz_half: usize, lz: f64) -> Result<Self> {
        if nx == 0 || ny == 0 || nz_half == 0 {
            return domain(format!("grid counts must be positive, got {nx}x{ny}x{nz_half}"));
        }
        if !(lz.is_finite() && lz > 0.0) {
            return domain(format!("Lz must be positive and finite, got {lz}"));
        }
        Ok(Self {
            nx,
            ny,
            nz_half,
            lz,
            hx: 2.0 * PI / nx as f64,
            hy: 2.0 * PI / ny as f64,
            hz: lz / nz_half as f64,
        })
    }

    #[inline]
    pub fn nz(&self) -> usize {
        2 * self.nz_half + 1
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.ny + j) * self.nz() + k
    }

    #[inline]
    pub fn x1(&self, i: usize) -> f64 {
        i as f64 * self.hx
    }

    #[inline]
    pub fn x2(&self, j: usize) -> f64 {
        j as f64 * self.hy
    }

    /// x3 coordinate of storage index `k`.
    #[inline]
    pub fn x3(&self, k: usize) -> f64 {
        (k as f64 - self.nz_half as f64) * self.hz
    }

    /// Storage index of the boundary plane x3 = 0.
    #[inline]
    pub fn k0(&self) -> usize {
        self.nz_half
    }

    pub fn h_max(&self) -> f64 {
        self.hx.max(self.hy).max(self.hz)
    }

    pub fn cell_volume(&self) -> f64 {
        self.hx * self.hy * self.hz
    }

    pub fn check_same(&self, other: &Grid3) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "grid mismatch: {}x{}x{} (Lz={}) vs {}x{}x{} (Lz={})",
                self.nx, self.ny, self.nz_half, self.lz, other.nx, other.ny, other.nz_half, other.lz
            )))
        }
    }

    /// Trapezoid weights in x3 for `region` (length `nz`).
    ///
    /// Interior nodes get `hz`; a region endpoint that falls on a node gets
    /// `hz/2`. `HalfPlus` gives the boundary node its full `hz`.
    pub fn x3_weights(&self, region: Region) -> Result<Vec<f64>> {
        let nz = self.nz();
        let tol = 1e-9 * self.hz;
        let (lo, hi, closed_lo) = match region {
            Region::FullSlab => (-self.lz, self.lz, false),
            Region::HalfPlus => (0.0, self.lz, true),
            Region::Above(s) => {
                if !(s.is_finite() && s >= -self.lz - tol && s < self.lz - tol) {
                    return domain(format!("region Above({s}) outside slab [-{0}, {0}]", self.lz));
                }
                (s, self.lz, false)
            }
            Region::Strip(a, b) => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return domain(format!("Strip({a}, {b}) requires a < b"));
                }
                if a < -self.lz - tol || b > self.lz + tol {
                    return domain(format!("region Strip({a}, {b}) outside slab [-{0}, {0}]", self.lz));
                }
                (a, b, false)
            }
        };
        let mut w = vec![0.0; nz];
        for (k, wk) in w.iter_mut().enumerate() {
            let z = if k == 0 {
                -self.lz
            } else if k == nz - 1 {
                self.lz
            } else {
                self.x3(k)
            };
            if z < lo - tol || z > hi + tol {
                continue;
            }
            let at_lo = (z - lo).abs() <= tol;
            let at_hi = (z - hi).abs() <= tol;
            *wk = if at_lo && closed_lo {
                self.hz
            } else if at_lo || at_hi {
                0.5 * self.hz
            } else {
                self.hz
            };
        }
        Ok(w)
    }
}

/// Integration / support regions in x3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Region {
    FullSlab,
    /// x3 ≥ 0, boundary plane included.
    HalfPlus,
    /// x3 > s.
    Above(f64),
    /// a ≤ x3 ≤ b.
    Strip(f64, f64),
}

impl Region {
    /// Whether the support tag admits a nonzero value at height `z`.
    pub fn admits(&self, z: f64, hz: f64) -> bool {
        let tol = 1e-9 * hz;
        match *self {
            Region::FullSlab => true,
            Region::HalfPlus => z >= -tol,
            Region::Above(s) => z > s - tol,
            Region::Strip(a, b) => z >= a - tol && z <= b + tol,
        }
    }

    /// Lower and upper x3 bounds of the region (infinite when unbounded).
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Region::FullSlab => (f64::NEG_INFINITY, f64::INFINITY),
            Region::HalfPlus => (0.0, f64::INFINITY),
            Region::Above(s) => (s, f64::INFINITY),
            Region::Strip(a, b) => (a, b),
        }
    }

    /// Region mirrored through x3 = 0.
    pub fn mirrored(&self, lz: f64) -> Region {
        match *self {
            Region::FullSlab => Region::FullSlab,
            Region::HalfPlus => Region::Strip(-lz, 0.0),
            Region::Above(s) => Region::Strip(-lz, -s),
            Region::Strip(a, b) => Region::Strip(-b, -a),
        }
    }

    /// Region translated by `dz` in x3.
    pub fn translated(&self, dz: f64) -> Region {
        if dz == 0.0 {
            return *self;
        }
        match *self {
            Region::FullSlab => Region::FullSlab,
            Region::HalfPlus => Region::Above(dz),
            Region::Above(s) => Region::Above(s + dz),
            Region::Strip(a, b) => Region::Strip(a + dz, b + dz),
        }
    }

    /// Region widened downward and upward by `r` (support after convolution with radius `r`).
    pub fn widened(&self, r: f64) -> Region {
        match *self {
            Region::FullSlab => Region::FullSlab,
            Region::HalfPlus => Region::Above(-r),
            Region::Above(s) => Region::Above(s - r),
            Region::Strip(a, b) => Region::Strip(a - r, b + r),
        }
    }

    /// Intersection with {x3 > s}.
    pub fn above(&self, s: f64) -> Region {
        match *self {
            Region::FullSlab => Region::Above(s),
            Region::HalfPlus => {
                if s < 0.0 {
                    Region::HalfPlus
                } else {
                    Region::Above(s)
                }
            }
            Region::Above(t) => Region::Above(t.max(s)),
            Region::Strip(a, b) => Region::Strip(a.max(s), b.max(s)),
        }
    }

    pub fn tag(&self) -> u8 {
        match self {
            Region::FullSlab => 0,
            Region::HalfPlus => 1,
            Region::Above(_) => 2,
            Region::Strip(_, _) => 3,
        }
    }

    pub fn params(&self) -> (f64, f64) {
        match *self {
            Region::Above(s) => (s, 0.0),
            Region::Strip(a, b) => (a, b),
            _ => (0.0, 0.0),
        }
    }

    pub fn from_tag(tag: u8, p0: f64, p1: f64) -> Result<Region> {
        match tag {
            0 => Ok(Region::FullSlab),
            1 => Ok(Region::HalfPlus),
            2 => Ok(Region::Above(p0)),
            3 if p0 < p1 => Ok(Region::Strip(p0, p1)),
            3 => Err(Error::Format(format!("strip tag with a={p0} >= b={p1}"))),
            t => Err(Error::Format(format!("unknown support tag {t}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn x3_nodes_symmetric_with_single_zero() {
        let g = Grid3::new(4, 4, 5, 2.0).unwrap();
        let zeros = (0..g.nz()).filter(|&k| g.x3(k) == 0.0).count();
        assert_eq!(zeros, 1);
        for k in 0..g.nz() {
            assert_eq!(g.x3(k), -g.x3(g.nz() - 1 - k));
        }
    }

    #[test]
    fn halfplus_weights_give_boundary_full_cell() {
        let g = Grid3::new(4, 4, 4, 1.0).unwrap();
        let w = g.x3_weights(Region::HalfPlus).unwrap();
        assert_eq!(w[g.k0()], g.hz);
        assert_eq!(w[g.k0() - 1], 0.0);
        assert_eq!(w[g.nz() - 1], 0.5 * g.hz);
        let full = g.x3_weights(Region::FullSlab).unwrap();
        assert_eq!(full[0], 0.5 * g.hz);
        assert_eq!(full[g.k0()], g.hz);
    }

    #[test]
    fn regions_outside_slab_rejected() {
        let g = Grid3::new(4, 4, 4, 1.0).unwrap();
        assert!(g.x3_weights(Region::Strip(-2.0, 0.5)).is_err());
        assert!(g.x3_weights(Region::Strip(0.5, 0.5)).is_err());
        assert!(g.x3_weights(Region::Above(1.0)).is_err());
        assert!(g.x3_weights(Region::Above(0.25)).is_ok());
    }

    #[test]
    fn strip_endpoints_on_nodes_get_half_weight() {
        let g = Grid3::new(4, 4, 4, 1.0).unwrap();
        let w = g.x3_weights(Region::Strip(-0.5, 0.5)).unwrap();
        let total: f64 = w.iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
        assert_eq!(w[g.k0() + 2], 0.5 * g.hz);
    }
}
