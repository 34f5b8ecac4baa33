//! Reflection and mollifier identities checked on one snapshot.

use oflx::mollifier::{min_epsilon, mollify, Engine, MollKernel};
use oflx::quad::{inner_product, lp_norm};
use oflx::reflect::{extend, reflect, truncated_reflect, zero_extend};
use oflx::synth::{gen_random_smooth, Envelope};
use oflx::{Grid3, Region, Result, VectorField};
use serde::Serialize;

use crate::config::ToleranceProfile;

/// One identity: `passed` iff `value ≤ tolerance`.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, passed: value <= tolerance }
    }
}

/// Mollifier scale and truncation level used by the suite.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SuiteParams {
    pub epsilon: f64,
    pub gamma: f64,
    pub engine: Engine,
}

impl SuiteParams {
    /// ε defaults to the minimum resolvable scale, γ to the midpoint of (ε, Lz).
    pub fn resolve(grid: &Grid3, epsilon: Option<f64>, gamma: Option<f64>, engine: Engine) -> Self {
        let epsilon = epsilon.unwrap_or_else(|| min_epsilon(grid));
        let gamma = gamma.unwrap_or(0.5 * (epsilon + grid.lz));
        Self { epsilon, gamma, engine }
    }
}

fn max_diff(a: &VectorField, b: &VectorField, keep: impl Fn(f64) -> bool) -> f64 {
    let g = a.grid();
    let nz = g.nz();
    let mut m: f64 = 0.0;
    for c in 0..3 {
        for (n, (x, y)) in a.comp(c).iter().zip(b.comp(c)).enumerate() {
            if keep(g.x3(n % nz)) {
                m = m.max((x - y).abs());
            }
        }
    }
    m
}

/// Generic full-slab field used as the second argument of the bilinear identities.
pub fn probe_field(grid: &Grid3, seed: u64) -> Result<VectorField> {
    let env = Envelope::FlatTop { flat: 0.3 * grid.lz, end: 0.85 * grid.lz };
    gen_random_smooth(grid, seed, 2, &env, false)
}

/// Runs every identity on the half-slab field `f`.
pub fn lemma_suite(f: &VectorField, p: &SuiteParams, tol: &ToleranceProfile) -> Result<Vec<Check>> {
    let g = *f.grid();
    let lemma = tol.lemma;
    let scale = f.max_abs().max(1.0);
    let uz = zero_extend(f)?;
    let ue = extend(f)?.field;
    let v = probe_field(&g, 0x5eed_0001)?;
    let w = probe_field(&g, 0x5eed_0002)?;
    let k = MollKernel::new(p.epsilon, &g, p.engine)?;
    let all = |_: f64| true;
    let mut out = Vec::new();

    out.push(Check::new("boundaryNormal", f.boundary_normal_max(), tol.boundary_normal * scale));

    let inv = max_diff(&reflect(&reflect(&uz)), &uz, all).max(max_diff(&reflect(&reflect(&v)), &v, all));
    out.push(Check::new("involution", inv, 0.0));

    for q in [1.0, 2.0, 3.0] {
        let a = lp_norm(&uz, q, Region::FullSlab)?;
        let b = lp_norm(&reflect(&uz), q, Region::FullSlab)?;
        out.push(Check::new(format!("isometryL{q}"), (a - b).abs(), lemma * a.max(1.0)));
    }

    // disjoint supports: the boundary plane is counted once in D but fully in D+
    let ext_tol = g.hz / g.lz;
    for q in [1.0, 2.0, 3.0] {
        let a = lp_norm(&ue, q, Region::FullSlab)?;
        let b = lp_norm(f, q, Region::HalfPlus)?;
        let rel = if b > 0.0 { (a / (2f64.powf(1.0 / q) * b) - 1.0).abs() } else { a };
        out.push(Check::new(format!("extensionFactorL{q}"), rel, ext_tol));
    }

    let mut adj: f64 = 0.0;
    let mut adj_scale: f64 = 1.0;
    for (a, b) in [(&uz, &v), (&v, &w)] {
        let l = inner_product(a, &reflect(b), Region::FullSlab)?;
        let r = inner_product(&reflect(a), b, Region::FullSlab)?;
        adj = adj.max((l - r).abs());
        adj_scale = adj_scale.max(lp_norm(a, 2.0, Region::FullSlab)? * lp_norm(b, 2.0, Region::FullSlab)?);
    }
    out.push(Check::new("adjointSymmetry", adj, lemma * adj_scale));

    let mut comm: f64 = 0.0;
    for a in [&uz, &v] {
        comm = comm.max(max_diff(&mollify(&reflect(a), &k)?, &reflect(&mollify(a, &k)?), all));
    }
    out.push(Check::new("mollifierCommutation", comm, lemma * scale.max(v.max_abs())));

    let jue = mollify(&ue, &k)?;
    out.push(Check::new("mollifiedBoundaryNormal", jue.boundary_normal_max(), lemma * scale));

    let gamma = p.gamma;
    let half = 0.5 * gamma;
    let strip = Region::Strip(-half, half);
    let l = inner_product(&v, &truncated_reflect(&w, gamma)?, strip)?;
    let r = inner_product(&truncated_reflect(&v, gamma)?, &w, strip)?;
    let s = lp_norm(&v, 2.0, Region::FullSlab)? * lp_norm(&w, 2.0, Region::FullSlab)?;
    out.push(Check::new("truncatedAdjoint", (l - r).abs(), lemma * s.max(1.0)));

    let delta = gamma - p.epsilon;
    if !(delta > 0.0) || gamma >= g.lz {
        return Err(oflx::Error::Domain(format!("gamma = {gamma} must lie in (epsilon = {}, Lz = {})", p.epsilon, g.lz)));
    }
    let hz = g.hz;
    let inside = |z: f64| z.abs() <= delta + 1e-9 * hz;
    let mut tc: f64 = 0.0;
    for a in [&uz, &v] {
        let lhs = mollify(&truncated_reflect(a, gamma)?, &k)?;
        let rhs = truncated_reflect(&mollify(a, &k)?, gamma)?;
        tc = tc.max(max_diff(&lhs, &rhs, inside));
    }
    out.push(Check::new("truncatedCommutation", tc, lemma * scale.max(v.max_abs())));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use oflx::synth::{gen_shear, Profile};

    fn grid() -> Grid3 {
        Grid3::new(16, 16, 16, 4.0).unwrap()
    }

    #[test]
    fn shear_passes_everything() {
        let g = grid();
        let env = Envelope::FlatTop { flat: 1.0, end: 3.0 };
        let u = gen_shear(&g, &Profile::Sine { amp: 1.0, freq: 1.0, phase: 0.0 }, &Profile::Constant { value: 0.5 }, &env).unwrap();
        let p = SuiteParams::resolve(&g, None, None, Engine::Direct);
        let checks = lemma_suite(&u, &p, &ToleranceProfile::default()).unwrap();
        for c in &checks {
            assert!(c.passed, "{c:?}");
        }
        assert_eq!(checks.len(), 13);
    }

    #[test]
    fn boundary_normal_flagged() {
        let g = grid();
        let u = VectorField::from_fn(g, Region::HalfPlus, 0.0, |x, _, z| [0.0, 0.0, x.cos() * (-z * z).exp()]).unwrap();
        let p = SuiteParams::resolve(&g, None, None, Engine::Direct);
        let checks = lemma_suite(&u, &p, &ToleranceProfile::default()).unwrap();
        let b = checks.iter().find(|c| c.name == "boundaryNormal").unwrap();
        assert!(!b.passed);
        assert!((b.value - 1.0).abs() < 1e-12);
    }
}
