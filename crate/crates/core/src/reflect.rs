//! Odd reflection across x3 = 0, zero extension, the boundary-preserving
//! extension `g_E` and the truncated reflection `v_r`.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::field::VectorField;
use crate::grid::Region;
use crate::quad::lp_norm;

/// |g3| on the boundary plane above which [`extend`] records a warning.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// `f_R(x1, x2, x3) = (f1, f2, −f3)(x1, x2, −x3)`, node-exact.
pub fn reflect(f: &VectorField) -> VectorField {
    let g = *f.grid();
    let nz = g.nz();
    let comps = std::array::from_fn(|c| {
        let src = f.comp(c);
        let mut out = vec![0.0; src.len()];
        for (o, s) in out.chunks_mut(nz).zip(src.chunks(nz)) {
            for k in 0..nz {
                o[k] = if c == 2 { -s[nz - 1 - k] } else { s[nz - 1 - k] };
            }
        }
        out
    });
    VectorField::from_parts(g, comps, f.support().mirrored(g.lz), f.time())
}

fn check_upper(g: &VectorField) -> Result<()> {
    let grid = g.grid();
    let nz = grid.nz();
    for c in 0..3 {
        for line in g.comp(c).chunks(nz) {
            if let Some(k) = (0..grid.k0()).find(|&k| line[k] != 0.0) {
                return domain(format!(
                    "input has nonzero component {} = {:e} at x3 = {} < 0",
                    c + 1,
                    line[k],
                    grid.x3(k)
                ));
            }
        }
    }
    Ok(())
}

/// Zero extension of a half-slab field to the full slab.
pub fn zero_extend(g: &VectorField) -> Result<VectorField> {
    check_upper(g)?;
    let support = match g.support() {
        Region::HalfPlus | Region::FullSlab => Region::FullSlab,
        other => other,
    };
    Ok(g.clone().with_support(support))
}

/// Extension result with recorded norms.
#[derive(Debug, Clone)]
pub struct ExtensionResult {
    pub field: VectorField,
    pub source_norm_l2: f64,
    pub extended_norm_l2: f64,
    /// max |g3| on x3 = 0 when it exceeds [`BOUNDARY_TOL`].
    pub boundary_warning: Option<BoundaryWarning>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundaryWarning {
    pub max_normal: f64,
    pub tolerance: f64,
}

/// `g_E = g + g_R` off the boundary and `(g1, g2, 0)` on x3 = 0.
pub fn extend(g: &VectorField) -> Result<ExtensionResult> {
    check_upper(g)?;
    let grid = *g.grid();
    let nz = grid.nz();
    let k0 = grid.k0();
    let comps = std::array::from_fn(|c| {
        let src = g.comp(c);
        let mut out = vec![0.0; src.len()];
        for (o, s) in out.chunks_mut(nz).zip(src.chunks(nz)) {
            for k in 0..nz {
                o[k] = if k > k0 {
                    s[k]
                } else if k < k0 {
                    if c == 2 {
                        -s[nz - 1 - k]
                    } else {
                        s[nz - 1 - k]
                    }
                } else if c == 2 {
                    0.0
                } else {
                    s[k]
                };
            }
        }
        out
    });
    let field = VectorField::from_parts(grid, comps, Region::FullSlab, g.time());
    let max_normal = g.boundary_normal_max();
    Ok(ExtensionResult {
        source_norm_l2: lp_norm(g, 2.0, Region::HalfPlus)?,
        extended_norm_l2: lp_norm(&field, 2.0, Region::FullSlab)?,
        field,
        boundary_warning: (max_normal > BOUNDARY_TOL).then_some(BoundaryWarning {
            max_normal,
            tolerance: BOUNDARY_TOL,
        }),
    })
}

/// `v_r = 1{x3 > −γ} · v_R` with a node-sharp cut.
pub fn truncated_reflect(v: &VectorField, gamma: f64) -> Result<VectorField> {
    let g = *v.grid();
    if !(gamma > 0.0) || gamma >= g.lz {
        return domain(format!("truncation level gamma = {gamma} must lie in (0, Lz = {})", g.lz));
    }
    let r = reflect(v);
    let nz = g.nz();
    let cut: Vec<bool> = (0..nz).map(|k| g.x3(k) > -gamma).collect();
    let comps = std::array::from_fn(|c| {
        let mut a = r.comp(c).to_vec();
        for line in a.chunks_mut(nz) {
            for k in 0..nz {
                if !cut[k] {
                    line[k] = 0.0;
                }
            }
        }
        a
    });
    let support = r.support().above(-gamma);
    Ok(VectorField::from_parts(g, comps, support, v.time()))
}
