//! Scalar, vector and tensor samples on a [`Grid3`], and time series of snapshots.

use std::sync::Arc;

use crate::error::{domain, Error, Result};
use crate::grid::{Grid3, Region};

/// Scalar samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid3,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid3, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::Shape(format!("scalar data has {} samples, grid has {}", data.len(), grid.len())));
        }
        Ok(Self { grid, data })
    }

    pub fn from_fn(grid: Grid3, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let mut data = vec![0.0; grid.len()];
        for i in 0..grid.nx {
            for j in 0..grid.ny {
                for k in 0..grid.nz() {
                    data[grid.idx(i, j, k)] = f(grid.x1(i), grid.x2(j), grid.x3(k));
                }
            }
        }
        Self { grid, data }
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }
}

/// Three-component field with a support tag and a time label.
///
/// Component data is shared on clone.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid3,
    comps: Arc<[Vec<f64>; 3]>,
    support: Region,
    time: f64,
}

impl VectorField {
    /// Builds a field, checking array shapes and that every value outside `support` is zero.
    pub fn new(grid: Grid3, comps: [Vec<f64>; 3], support: Region, time: f64) -> Result<Self> {
        for (c, a) in comps.iter().enumerate() {
            if a.len() != grid.len() {
                return Err(Error::Shape(format!(
                    "component {c} has {} samples, grid has {}",
                    a.len(),
                    grid.len()
                )));
            }
        }
        let f = Self { grid, comps: Arc::new(comps), support, time };
        if let Some((k, v)) = f.first_outside_support() {
            return domain(format!(
                "value {v:e} at x3 = {} lies outside the declared support {:?}",
                grid.x3(k),
                support
            ));
        }
        Ok(f)
    }

    /// Builds a field from a pointwise closure of (x1, x2, x3).
    pub fn from_fn(
        grid: Grid3,
        support: Region,
        time: f64,
        f: impl Fn(f64, f64, f64) -> [f64; 3],
    ) -> Result<Self> {
        let mut comps = [vec![0.0; grid.len()], vec![0.0; grid.len()], vec![0.0; grid.len()]];
        for i in 0..grid.nx {
            for j in 0..grid.ny {
                for k in 0..grid.nz() {
                    let z = grid.x3(k);
                    if !support.admits(z, grid.hz) {
                        continue;
                    }
                    let v = f(grid.x1(i), grid.x2(j), z);
                    let n = grid.idx(i, j, k);
                    for c in 0..3 {
                        comps[c][n] = v[c];
                    }
                }
            }
        }
        Self::new(grid, comps, support, time)
    }

    pub fn zeros(grid: Grid3, support: Region, time: f64) -> Self {
        let n = grid.len();
        Self { grid, comps: Arc::new([vec![0.0; n], vec![0.0; n], vec![0.0; n]]), support, time }
    }

    /// Construction without the support scan, for outputs of operators that preserve it.
    pub(crate) fn from_parts(grid: Grid3, comps: [Vec<f64>; 3], support: Region, time: f64) -> Self {
        debug_assert!(comps.iter().all(|a| a.len() == grid.len()));
        Self { grid, comps: Arc::new(comps), support, time }
    }

    fn first_outside_support(&self) -> Option<(usize, f64)> {
        if self.support == Region::FullSlab {
            return None;
        }
        let g = &self.grid;
        let outside: Vec<usize> = (0..g.nz()).filter(|&k| !self.support.admits(g.x3(k), g.hz)).collect();
        if outside.is_empty() {
            return None;
        }
        for a in self.comps.iter() {
            for line in a.chunks(g.nz()) {
                for &k in &outside {
                    if line[k] != 0.0 {
                        return Some((k, line[k]));
                    }
                }
            }
        }
        None
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn comps(&self) -> &[Vec<f64>; 3] {
        &self.comps
    }

    pub fn comp(&self, c: usize) -> &[f64] {
        &self.comps[c]
    }

    pub fn into_comps(self) -> [Vec<f64>; 3] {
        Arc::try_unwrap(self.comps).unwrap_or_else(|a| (*a).clone())
    }

    /// Whether both fields carry identical component data.
    pub fn same_data(&self, other: &VectorField) -> bool {
        Arc::ptr_eq(&self.comps, &other.comps) || (self.grid == other.grid && self.comps == other.comps)
    }

    pub fn support(&self) -> Region {
        self.support
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub(crate) fn with_support(mut self, support: Region) -> Self {
        self.support = support;
        self
    }

    /// Value at node (i, j, k).
    pub fn at(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        let n = self.grid.idx(i, j, k);
        [self.comps[0][n], self.comps[1][n], self.comps[2][n]]
    }

    /// Componentwise `a·self + b·other`; support becomes the full slab unless both match.
    pub fn lin_comb(&self, a: f64, other: &VectorField, b: f64) -> Result<VectorField> {
        self.grid.check_same(&other.grid)?;
        let comps = std::array::from_fn(|c| {
            self.comps[c].iter().zip(&other.comps[c]).map(|(x, y)| a * x + b * y).collect()
        });
        let support = if self.support == other.support { self.support } else { Region::FullSlab };
        Ok(Self::from_parts(self.grid, comps, support, self.time))
    }

    pub fn scaled(&self, a: f64) -> VectorField {
        let comps = std::array::from_fn(|c| self.comps[c].iter().map(|x| a * x).collect());
        Self::from_parts(self.grid, comps, self.support, self.time)
    }

    /// Largest |value| in the outer 10% of the slab (|x3| ≥ 0.9·Lz).
    pub fn decay_violation(&self) -> f64 {
        let g = &self.grid;
        let outer: Vec<usize> = (0..g.nz()).filter(|&k| g.x3(k).abs() >= 0.9 * g.lz - 1e-12 * g.lz).collect();
        let mut m: f64 = 0.0;
        for a in self.comps.iter() {
            for line in a.chunks(g.nz()) {
                for &k in &outer {
                    m = m.max(line[k].abs());
                }
            }
        }
        m
    }

    /// Fails when the field is not below `tol` in the outer decay margin.
    pub fn check_decay(&self, tol: f64) -> Result<()> {
        let v = self.decay_violation();
        if v > tol {
            return domain(format!(
                "field reaches {v:e} within the outer 10% of the slab (Lz = {}); decay tolerance is {tol:e}",
                self.grid.lz
            ));
        }
        Ok(())
    }

    /// Largest |u3| on the boundary plane x3 = 0.
    pub fn boundary_normal_max(&self) -> f64 {
        let g = &self.grid;
        self.comps[2].chunks(g.nz()).map(|line| line[g.k0()].abs()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().flat_map(|a| a.iter()).fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Nine-component tensor field, entry (i, j) stored at `3·i + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    grid: Grid3,
    comps: Vec<Vec<f64>>,
    support: Region,
}

impl TensorField {
    pub fn new(grid: Grid3, comps: Vec<Vec<f64>>, support: Region) -> Result<Self> {
        if comps.len() != 9 {
            return Err(Error::Shape(format!("tensor field needs 9 components, got {}", comps.len())));
        }
        if let Some(a) = comps.iter().find(|a| a.len() != grid.len()) {
            return Err(Error::Shape(format!("tensor component has {} samples, grid has {}", a.len(), grid.len())));
        }
        Ok(Self { grid, comps, support })
    }

    /// Outer product `a ⊗ b`.
    pub fn outer(a: &VectorField, b: &VectorField) -> Result<Self> {
        a.grid().check_same(b.grid())?;
        let mut comps = Vec::with_capacity(9);
        for i in 0..3 {
            for j in 0..3 {
                comps.push(a.comp(i).iter().zip(b.comp(j)).map(|(x, y)| x * y).collect());
            }
        }
        let support = if a.support() == b.support() { a.support() } else { Region::FullSlab };
        Ok(Self { grid: *a.grid(), comps, support })
    }

    pub(crate) fn from_parts(grid: Grid3, comps: Vec<Vec<f64>>, support: Region) -> Self {
        Self { grid, comps, support }
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn comps(&self) -> &[Vec<f64>] {
        &self.comps
    }

    pub fn entry(&self, i: usize, j: usize) -> &[f64] {
        &self.comps[3 * i + j]
    }

    pub fn support(&self) -> Region {
        self.support
    }
}

/// Snapshots of a velocity field at increasing times starting at 0.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    times: Vec<f64>,
    snapshots: Vec<VectorField>,
}

impl TimeSeries {
    pub fn new(snapshots: Vec<VectorField>) -> Result<Self> {
        let Some(first) = snapshots.first() else {
            return domain("time series needs at least one snapshot");
        };
        if first.time() != 0.0 {
            return domain(format!("first snapshot time must be 0, got {}", first.time()));
        }
        for w in snapshots.windows(2) {
            w[0].grid().check_same(w[1].grid())?;
            if !(w[1].time() > w[0].time()) {
                return domain(format!("snapshot times must increase strictly ({} then {})", w[0].time(), w[1].time()));
            }
        }
        let times = snapshots.iter().map(|s| s.time()).collect();
        Ok(Self { times, snapshots })
    }

    /// Steady series on [0, horizon]; both end snapshots share one data block.
    pub fn steady(field: VectorField, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) {
            return domain(format!("horizon must be positive, got {horizon}"));
        }
        let a = field.with_time(0.0);
        let b = a.clone().with_time(horizon);
        Self::new(vec![a, b])
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn snapshots(&self) -> &[VectorField] {
        &self.snapshots
    }

    pub fn grid(&self) -> &Grid3 {
        self.snapshots[0].grid()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Index of time `t` in the series.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let tol = 1e-12 * self.horizon().abs().max(1.0);
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= tol)
            .ok_or_else(|| Error::Domain(format!("time {t} is not a snapshot time of the series {:?}", self.times)))
    }

    /// Evaluates `f` on snapshots `0..n`, reusing the previous result when consecutive snapshots share data.
    pub fn map_snapshots<T: Clone>(&self, n: usize, mut f: impl FnMut(&VectorField) -> Result<T>) -> Result<Vec<T>> {
        let mut out: Vec<T> = Vec::with_capacity(n);
        for s in 0..n {
            if s > 0 && self.snapshots[s - 1].same_data(&self.snapshots[s]) {
                let v = out[s - 1].clone();
                out.push(v);
            } else {
                out.push(f(&self.snapshots[s])?);
            }
        }
        Ok(out)
    }

    /// Whether every snapshot carries the same data as the first.
    pub fn is_steady(&self) -> bool {
        self.snapshots.windows(2).all(|w| w[0].same_data(&w[1]))
    }
}

/// Trapezoid rule over `times[0..=n]` for samples `vals`.
pub fn trapezoid(times: &[f64], vals: &[f64], n: usize) -> f64 {
    let mut acc = 0.0;
    for s in 0..n {
        acc += 0.5 * (vals[s] + vals[s + 1]) * (times[s + 1] - times[s]);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid3 {
        Grid3::new(4, 4, 3, 1.5).unwrap()
    }

    #[test]
    fn support_violation_rejected() {
        let g = grid();
        let mut c = [vec![0.0; g.len()], vec![0.0; g.len()], vec![0.0; g.len()]];
        c[0][g.idx(0, 0, 0)] = 1.0;
        assert!(VectorField::new(g, c.clone(), Region::HalfPlus, 0.0).is_err());
        assert!(VectorField::new(g, c, Region::FullSlab, 0.0).is_ok());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let g = grid();
        let c = [vec![0.0; 3], vec![0.0; g.len()], vec![0.0; g.len()]];
        assert!(matches!(VectorField::new(g, c, Region::FullSlab, 0.0), Err(Error::Shape(_))));
    }

    #[test]
    fn time_series_validation() {
        let g = grid();
        let a = VectorField::zeros(g, Region::HalfPlus, 0.0);
        let b = VectorField::zeros(g, Region::HalfPlus, 0.5);
        assert!(TimeSeries::new(vec![b.clone()]).is_err());
        assert!(TimeSeries::new(vec![a.clone(), a.clone()]).is_err());
        let ts = TimeSeries::new(vec![a, b]).unwrap();
        assert_eq!(ts.index_of(0.5).unwrap(), 1);
        assert!(ts.index_of(0.25).is_err());
    }

    #[test]
    fn steady_series_is_steady() {
        let g = grid();
        let f = VectorField::from_fn(g, Region::HalfPlus, 0.0, |_, y, _| [y.sin(), 0.0, 0.0]).unwrap();
        let ts = TimeSeries::steady(f, 2.0).unwrap();
        assert!(ts.is_steady());
        assert_eq!(ts.horizon(), 2.0);
        let mut calls = 0;
        ts.map_snapshots(2, |_| {
            calls += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(calls, 1);
    }
}
