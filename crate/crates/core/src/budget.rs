//! The weak-solution residual, every term of the mollified energy identity,
//! the commutator remainder r_ε and ε-convergence studies.
//!
//! Tensor contractions pair the derivative index with the second factor:
//! `A : ∇ψ = Σ_ij A_ij ∂_j ψ_i`.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::field::{trapezoid, ScalarField, TensorField, TimeSeries, VectorField};
use crate::fit::loglog_fit;
use crate::grid::{Grid3, Region};
use crate::mollifier::{grad_mollify, mollify, Engine, MollKernel};
use crate::quad::{integrate_with, lp_norm, lp_norm3};
use crate::reflect::{extend, reflect, zero_extend, BOUNDARY_TOL};
use crate::stencil::{diff, weak_div_defect};

/// Bound on the relative weak divergence of admissible test functions.
pub const TEST_DIV_TOL: f64 = 1e-6;

/// Region over which budget integrals are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetDomain {
    /// D_{>−ε}, which contains the support of every integrand.
    #[default]
    Support,
    FullSlab,
}

/// Scalar probes φ used to check that a test function is weakly divergence free on D₊.
pub fn divergence_probes(grid: &Grid3) -> Vec<ScalarField> {
    let lz = grid.lz;
    let s = 0.25 * lz;
    let mut out = Vec::new();
    for (a, b) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (2.0, -1.0)] {
        for z0 in [0.0, 0.25 * lz] {
            out.push(ScalarField::from_fn(*grid, move |x, y, z| {
                let r = (z - z0) / s;
                (a * x + b * y + 0.3).cos() * (-r * r).exp()
            }));
        }
    }
    out
}

fn dt_arrays(series: &[VectorField], times: &[f64], s: usize) -> Option<[Vec<f64>; 3]> {
    if series.len() < 2 {
        return None;
    }
    let lo = s.saturating_sub(1);
    let hi = (s + 1).min(series.len() - 1);
    if series[lo].same_data(&series[hi]) {
        return None;
    }
    let inv = 1.0 / (times[hi] - times[lo]);
    let (a, b) = (series[lo].comps(), series[hi].comps());
    Some(std::array::from_fn(|c| a[c].iter().zip(&b[c]).map(|(x, y)| (y - x) * inv).collect()))
}

fn pair3(g: &Grid3, a: &[Vec<f64>; 3], b: &[Vec<f64>; 3], region: Region) -> Result<f64> {
    integrate_with(g, region, |n| a[0][n] * b[0][n] + a[1][n] * b[1][n] + a[2][n] * b[2][n])
}

/// ∫₀ᵗ⟨u, ∂_tψ⟩_{D₊} with centered time differences of `psi`.
fn time_pairing(u: &[VectorField], psi: &[VectorField], times: &[f64], n: usize, region: Region) -> Result<f64> {
    let g = *u[0].grid();
    let mut vals = Vec::with_capacity(n + 1);
    for s in 0..=n {
        vals.push(match dt_arrays(psi, times, s) {
            Some(d) => pair3(&g, u[s].comps(), &d, region)?,
            None => 0.0,
        });
    }
    Ok(trapezoid(times, &vals, n))
}

/// ∫_{D₊} u ⊗ u : ∇ψ with ∇ψ from the central-difference stencils.
fn nonlinear_pairing(u: &VectorField, psi: &VectorField) -> Result<f64> {
    let g = *u.grid();
    let (uc, pc) = (u.comps(), psi.comps());
    let mut acc = 0.0;
    for j in 0..3 {
        let d: Vec<Vec<f64>> = (0..3).map(|i| diff(&g, &pc[i], j)).collect();
        acc += integrate_with(&g, Region::HalfPlus, |n| {
            uc[j][n] * (uc[0][n] * d[0][n] + uc[1][n] * d[1][n] + uc[2][n] * d[2][n])
        })?;
    }
    Ok(acc)
}

fn weak_residual_unchecked(u: &TimeSeries, psi: &[VectorField], n: usize) -> Result<f64> {
    let snaps = u.snapshots();
    let times = u.times();
    let boundary = pair3(u.grid(), snaps[n].comps(), psi[n].comps(), Region::HalfPlus)?
        - pair3(u.grid(), snaps[0].comps(), psi[0].comps(), Region::HalfPlus)?;
    let time = time_pairing(snaps, psi, times, n, Region::HalfPlus)?;
    let mut nl = Vec::with_capacity(n + 1);
    for s in 0..=n {
        nl.push(if s > 0 && snaps[s].same_data(&snaps[s - 1]) && psi[s].same_data(&psi[s - 1]) {
            nl[s - 1]
        } else {
            nonlinear_pairing(&snaps[s], &psi[s])?
        });
    }
    Ok(boundary - time - trapezoid(times, &nl, n))
}

/// ⟨u(t),ψ(t)⟩_{D₊} − ⟨u(0),ψ(0)⟩_{D₊} − ∫₀ᵗ⟨u,∂_tψ⟩_{D₊} − ∫₀ᵗ⟨u⊗u : ∇ψ⟩_{D₊}.
///
/// Admissibility of ψ is checked discretely: ψ₃ vanishes on x₃ = 0 and the
/// weak divergence against [`divergence_probes`], relative to ‖ψ‖_{L²(D₊)},
/// stays below [`TEST_DIV_TOL`]. Higher Sobolev regularity of ψ is not checked.
pub fn weak_residual(u: &TimeSeries, psi: &TimeSeries, t: f64) -> Result<f64> {
    u.grid().check_same(psi.grid())?;
    if u.len() != psi.len() || u.times().iter().zip(psi.times()).any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + a.abs())) {
        return domain("test function and velocity must share the time grid");
    }
    let n = u.index_of(t)?;
    let probes = divergence_probes(u.grid());
    for (s, p) in psi.snapshots().iter().enumerate() {
        let scale = p.max_abs().max(f64::MIN_POSITIVE);
        let normal = p.boundary_normal_max();
        if normal > BOUNDARY_TOL * scale.max(1.0) {
            return domain(format!("test function snapshot {s} has normal component {normal:e} on the boundary"));
        }
        let norm = lp_norm(p, 2.0, Region::HalfPlus)?;
        if norm > 0.0 {
            let defect = weak_div_defect(p, &probes)? / norm;
            if defect > TEST_DIV_TOL {
                return domain(format!(
                    "test function snapshot {s} has weak divergence defect {defect:e} above {TEST_DIV_TOL:e}"
                ));
            }
        }
    }
    weak_residual_unchecked(u, psi.snapshots(), n)
}

/// r_ε(uE, u) = Σ_y w(y)·(uE(x − y) − uE(x)) ⊗ (u(x − y) − u(x))·h³.
///
/// The direct engine sums increments; the spectral engine uses the expanded
/// form J(ab) − a·Jb − b·Ja + ab.
pub fn commutator_r(ue: &VectorField, u: &VectorField, k: &MollKernel) -> Result<TensorField> {
    ue.grid().check_same(u.grid())?;
    k.grid().check_same(u.grid())?;
    let mut comps = vec![Vec::new(); 9];
    let (a, b) = (ue.comps(), u.comps());
    match k.engine() {
        Engine::Direct => {
            for i in 0..3 {
                for j in 0..3 {
                    comps[3 * i + j] = k.commutator_direct(&a[i], &b[j]);
                }
            }
        }
        Engine::Spectral => {
            let ja = mollify(ue, k)?;
            let jb = mollify(u, k)?;
            for (ij, r) in expanded_commutator(ue, u, &ja, &jb, k).into_iter().enumerate() {
                comps[ij] = r;
            }
        }
    }
    Ok(TensorField::from_parts(*u.grid(), comps, Region::Above(-k.epsilon())))
}

fn expanded_commutator(a: &VectorField, b: &VectorField, ja: &VectorField, jb: &VectorField, k: &MollKernel) -> Vec<Vec<f64>> {
    let (a, b, ja, jb) = (a.comps(), b.comps(), ja.comps(), jb.comps());
    let mut out = Vec::with_capacity(9);
    for pair in (0..9).collect::<Vec<_>>().chunks(2) {
        let prods: Vec<Vec<f64>> =
            pair.iter().map(|&ij| a[ij / 3].iter().zip(&b[ij % 3]).map(|(x, y)| x * y).collect()).collect();
        let refs: Vec<&[f64]> = prods.iter().map(|p| p.as_slice()).collect();
        for (&ij, mut r) in pair.iter().zip(k.conv_many(&refs, 0)) {
            let (i, j) = (ij / 3, ij % 3);
            for (n, v) in r.iter_mut().enumerate() {
                *v += -a[i][n] * jb[j][n] - b[j][n] * ja[i][n] + a[i][n] * b[j][n];
            }
            out.push(r);
        }
    }
    out
}

/// Per-snapshot integrals at one ε.
#[derive(Debug, Clone, Copy, Default)]
struct SnapTerms {
    pair: f64,
    cross: f64,
    ju_sq: f64,
    transport: f64,
    transport_ibp: f64,
    r_eps: f64,
    defect: f64,
    weak_nonlinear: f64,
}

#[derive(Debug, Clone)]
struct Snap {
    ju: VectorField,
    jue: VectorField,
    psi: VectorField,
    terms: SnapTerms,
}

fn snapshot_terms(f: &VectorField, k: &MollKernel, region: Region) -> Result<Snap> {
    let g = *f.grid();
    let uz = zero_extend(f)?;
    let ue = extend(f)?.field;
    let ju = mollify(&uz, k)?;
    let jue = mollify(&ue, k)?;
    let psi = mollify(&jue, k)?;
    let grad = grad_mollify(&ue, k)?;
    let gc = grad.comps();
    let (a, b, ja, jb) = (ue.comps(), uz.comps(), jue.comps(), ju.comps());

    let pair = pair3(&g, jb, ja, region)?;
    let ju_r = reflect(&ju);
    let cross = pair3(&g, jb, ju_r.comps(), region)?;
    let ju_sq = pair3(&g, jb, jb, region)?;

    // Σ_ij A_i B_j ∂_j(J uE)_i, where grad entry (j, i) = ∂_j (J uE)_i
    let contract = |n: usize, x: &dyn Fn(usize, usize) -> f64, y: &dyn Fn(usize, usize) -> f64| {
        let mut s = 0.0;
        for j in 0..3 {
            let yj = y(j, n);
            s += yj * (x(0, n) * gc[3 * j][n] + x(1, n) * gc[3 * j + 1][n] + x(2, n) * gc[3 * j + 2][n]);
        }
        s
    };
    let transport = integrate_with(&g, region, |n| contract(n, &|i, n| ja[i][n], &|j, n| jb[j][n]))?;
    let defect = integrate_with(&g, region, |n| contract(n, &|i, n| a[i][n] - ja[i][n], &|j, n| b[j][n] - jb[j][n]))?;

    let div: Vec<Vec<f64>> = (0..3).map(|i| k.conv(&b[i], i + 1)).collect();
    let transport_ibp = -0.5
        * integrate_with(&g, region, |n| {
            (div[0][n] + div[1][n] + div[2][n]) * (ja[0][n] * ja[0][n] + ja[1][n] * ja[1][n] + ja[2][n] * ja[2][n])
        })?;
    drop(div);

    let mut r_eps = 0.0;
    match k.engine() {
        Engine::Direct => {
            for i in 0..3 {
                for j in 0..3 {
                    let r = k.commutator_direct(&a[i], &b[j]);
                    r_eps += integrate_with(&g, region, |n| r[n] * gc[3 * j + i][n])?;
                }
            }
        }
        Engine::Spectral => {
            for (ij, r) in expanded_commutator(&ue, &uz, &jue, &ju, k).into_iter().enumerate() {
                let (i, j) = (ij / 3, ij % 3);
                r_eps += integrate_with(&g, region, |n| r[n] * gc[3 * j + i][n])?;
            }
        }
    }
    let weak_nonlinear = nonlinear_pairing(&uz, &psi)?;
    Ok(Snap {
        ju,
        jue,
        psi,
        terms: SnapTerms { pair, cross, ju_sq, transport, transport_ibp, r_eps, defect, weak_nonlinear },
    })
}

/// Every term of the mollified identity at one ε.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BudgetRow {
    pub epsilon: f64,
    /// ⟨J u(t), J uE(t)⟩_D − ⟨J u(0), J uE(0)⟩_D.
    pub lhs_boundary: f64,
    /// ∫₀ᵗ⟨J u, ∂_t J uE⟩_D.
    pub lhs_time: f64,
    /// ⟨J u(t), J u_R(t)⟩_D − (same at 0).
    pub cross_term: f64,
    /// ∫₀ᵗ⟨J uE ⊗ J u : ∇J uE⟩_D.
    pub transport: f64,
    /// −½∫₀ᵗ∫_D (∇·J u)|J uE|².
    pub transport_ibp: f64,
    /// ∫₀ᵗ⟨r_ε(uE, u) : ∇J uE⟩_D.
    pub r_eps_term: f64,
    /// ∫₀ᵗ⟨(uE − J uE) ⊗ (u − J u) : ∇J uE⟩_D.
    pub defect_term: f64,
    /// Weak residual of u against ψ = J J uE.
    pub weak_residual_mollified: f64,
    /// lhsBoundary − lhsTime − (transport + rEpsTerm − defectTerm) − weakResidualMollified.
    pub identity_residual: f64,
    /// lhsBoundary − lhsTime − energyGap.
    pub lhs_gap: f64,
    /// 2∫₀ᵗ⟨J u, ∂_t J u⟩_D.
    pub product_rule_lhs: f64,
    /// ‖J u(t)‖²_D − ‖J u(0)‖²_D.
    pub product_rule_rhs: f64,
    /// t·max_s ‖u(s)‖³_{L³(D₊)}/ε, the natural size of the flux terms.
    pub flux_scale: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BudgetReport {
    pub epsilons: Vec<f64>,
    pub t: f64,
    pub engine: Engine,
    pub domain: BudgetDomain,
    /// ½(‖u(t)‖² − ‖u(0)‖²) over D₊.
    pub energy_gap: f64,
    pub rows: Vec<BudgetRow>,
    pub slope_r_eps: Option<f64>,
    pub slope_defect: Option<f64>,
    /// Slope of |rEpsTerm| + |defectTerm|.
    pub slope_remainder: Option<f64>,
    /// Slope of |lhsGap|.
    pub slope_lhs_gap: Option<f64>,
}

/// Budget terms for each ε (strictly decreasing) at time `t`, integrated over D_{>−ε}.
pub fn budget(u: &TimeSeries, epsilons: &[f64], t: f64, engine: Engine) -> Result<BudgetReport> {
    budget_over(u, epsilons, t, engine, BudgetDomain::Support)
}

pub fn budget_over(u: &TimeSeries, epsilons: &[f64], t: f64, engine: Engine, dom: BudgetDomain) -> Result<BudgetReport> {
    let g = *u.grid();
    if epsilons.is_empty() {
        return domain("budget needs at least one epsilon");
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return domain(format!("epsilon ladder must be strictly decreasing, got {epsilons:?}"));
    }
    let n = u.index_of(t)?;
    let snaps = u.snapshots();
    for s in snaps {
        if s.support() != Region::HalfPlus {
            return domain("budget needs velocity snapshots supported on the half space");
        }
    }
    let kernels: Vec<MollKernel> = epsilons.iter().map(|&e| MollKernel::new(e, &g, engine)).collect::<Result<_>>()?;
    let energy: Vec<f64> = u.map_snapshots(n + 1, |f| lp_norm3(&g, f.comps(), 2.0, Region::HalfPlus).map(|v| v * v))?;
    let energy_gap = 0.5 * (energy[n] - energy[0]);
    let cubes = u.map_snapshots(n + 1, |f| lp_norm3(&g, f.comps(), 3.0, Region::HalfPlus).map(|v| v.powi(3)))?;
    let cube = cubes.iter().copied().fold(0.0, f64::max);
    let times = u.times();

    let mut rows = Vec::with_capacity(epsilons.len());
    for k in &kernels {
        let eps = k.epsilon();
        let region = match dom {
            BudgetDomain::Support if eps < g.lz => Region::Above(-eps),
            _ => Region::FullSlab,
        };
        // derivatives use neighbours beyond index n when they exist
        let all = u.map_snapshots(u.len(), |f| snapshot_terms(f, k, region))?;
        let term = |f: fn(&SnapTerms) -> f64| -> Vec<f64> { all[..=n].iter().map(|s| f(&s.terms)).collect() };
        let integrate_t = |f: fn(&SnapTerms) -> f64| trapezoid(times, &term(f), n);
        let ju: Vec<VectorField> = all.iter().map(|s| s.ju.clone()).collect();
        let jue: Vec<VectorField> = all.iter().map(|s| s.jue.clone()).collect();
        let psi: Vec<VectorField> = all.iter().map(|s| s.psi.clone()).collect();

        let lhs_boundary = all[n].terms.pair - all[0].terms.pair;
        // ∂_t J uE = J ∂_t uE: the time difference is linear, so it is taken after mollifying
        let lhs_time = time_pairing(&ju, &jue, times, n, region)?;
        let cross_term = all[n].terms.cross - all[0].terms.cross;
        let transport = integrate_t(|s| s.transport);
        let transport_ibp = integrate_t(|s| s.transport_ibp);
        let r_eps_term = integrate_t(|s| s.r_eps);
        let defect_term = integrate_t(|s| s.defect);
        let weak_boundary = pair3(&g, snaps[n].comps(), psi[n].comps(), Region::HalfPlus)?
            - pair3(&g, snaps[0].comps(), psi[0].comps(), Region::HalfPlus)?;
        let weak_time = time_pairing(snaps, &psi, times, n, Region::HalfPlus)?;
        let weak_residual_mollified = weak_boundary - weak_time - integrate_t(|s| s.weak_nonlinear);
        let identity_residual =
            lhs_boundary - lhs_time - (transport + r_eps_term - defect_term) - weak_residual_mollified;
        let product_rule_lhs = 2.0 * time_pairing(&ju, &ju, times, n, region)?;
        let product_rule_rhs = all[n].terms.ju_sq - all[0].terms.ju_sq;
        rows.push(BudgetRow {
            epsilon: eps,
            lhs_boundary,
            lhs_time,
            cross_term,
            transport,
            transport_ibp,
            r_eps_term,
            defect_term,
            weak_residual_mollified,
            identity_residual,
            lhs_gap: lhs_boundary - lhs_time - energy_gap,
            product_rule_lhs,
            product_rule_rhs,
            flux_scale: t * cube / eps,
        });
    }
    let fit = |f: &dyn Fn(&BudgetRow) -> f64| {
        let ys: Vec<f64> = rows.iter().map(f).collect();
        loglog_fit(epsilons, &ys).map(|l| l.slope)
    };
    Ok(BudgetReport {
        epsilons: epsilons.to_vec(),
        t,
        engine,
        domain: dom,
        energy_gap,
        slope_r_eps: fit(&|r| r.r_eps_term.abs()),
        slope_defect: fit(&|r| r.defect_term.abs()),
        slope_remainder: fit(&|r| r.r_eps_term.abs() + r.defect_term.abs()),
        slope_lhs_gap: fit(&|r| r.lhs_gap.abs()),
        rows,
    })
}

/// max over snapshot pairs s ≠ t of ‖J uE(t) − J uE(s)‖_{L²(D₊)}/|t − s|.
pub fn lipschitz_in_time_check(u: &TimeSeries, epsilon: f64, engine: Engine) -> Result<f64> {
    if u.len() < 2 {
        return domain(format!("Lipschitz check needs at least 2 snapshots, got {}", u.len()));
    }
    let g = *u.grid();
    let k = MollKernel::new(epsilon, &g, engine)?;
    let jue = u.map_snapshots(u.len(), |f| mollify(&extend(f)?.field, &k))?;
    let times = u.times();
    let mut worst: f64 = 0.0;
    for s in 0..jue.len() {
        for r in s + 1..jue.len() {
            if jue[s].same_data(&jue[r]) {
                continue;
            }
            let d = jue[r].lin_comb(1.0, &jue[s], -1.0)?;
            let v = lp_norm(&d, 2.0, Region::HalfPlus)? / (times[r] - times[s]);
            worst = worst.max(v);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mollifier::mollify_tensor;
    use crate::synth::{gen_shear, gen_time_series, Envelope, Modulation, Profile};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Grid3 {
        Grid3::new(16, 16, 16, 4.0).unwrap()
    }

    fn shear(g: &Grid3) -> VectorField {
        gen_shear(
            g,
            &Profile::Sine { amp: 1.0, freq: 1.3, phase: 0.4 },
            &Profile::Polynomial { coeffs: vec![0.5, -0.2] },
            &Envelope::Gaussian { scale: 0.6 },
        )
        .unwrap()
    }

    fn admissible_psi(g: &Grid3, seed: u64) -> VectorField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        VectorField::from_fn(*g, Region::FullSlab, 0.0, |x, y, z| {
            let e = (-z * z).exp();
            [
                (c[0] * y.cos() + c[1] * (2.0 * y).sin() + c[2]) * e,
                (c[3] * x.sin() + c[4] * (x + 0.5).cos() + c[5] * z) * e,
                0.0,
            ]
        })
        .unwrap()
    }

    fn steady_psi(g: &Grid3, seed: u64, times: &[f64], beta: f64) -> TimeSeries {
        let base = admissible_psi(g, seed);
        let snaps = times.iter().map(|&t| base.scaled(1.0 + beta * t).with_time(t)).collect();
        TimeSeries::new(snaps).unwrap()
    }

    #[test]
    fn zero_velocity_has_zero_residual() {
        let g = grid();
        let u = TimeSeries::steady(VectorField::zeros(g, Region::HalfPlus, 0.0), 1.0).unwrap();
        let psi = steady_psi(&g, 1, &[0.0, 1.0], 0.5);
        assert_eq!(weak_residual(&u, &psi, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn steady_shear_residual_vanishes() {
        let g = grid();
        let u = TimeSeries::steady(shear(&g), 2.0).unwrap();
        let times = [0.0, 2.0];
        for seed in 0..5 {
            let psi = steady_psi(&g, seed, &times, 0.3);
            let r = weak_residual(&u, &psi, 2.0).unwrap();
            assert!(r.abs() < 1e-12, "{r}");
        }
    }

    #[test]
    fn modulated_shear_matches_quadrature_oracle() {
        let g = grid();
        let base = shear(&g);
        let times: Vec<f64> = (0..9).map(|s| s as f64 * 0.25).collect();
        let u = gen_time_series(&base, &Modulation::Sine { amp: 0.5, freq: 1.0 }, &times).unwrap();
        let psi = steady_psi(&g, 7, &times, 0.0);
        let t = 2.0;
        let r = weak_residual(&u, &psi, t).unwrap();
        // ψ is steady and the nonlinear term sums to zero over periods, leaving (a(t) − a(0))⟨U, ψ⟩
        let p = psi.snapshots()[0].comps();
        let w = g.x3_weights(Region::HalfPlus).unwrap();
        let mut pairing = 0.0;
        for i in 0..g.nx {
            for j in 0..g.ny {
                for (k, wk) in w.iter().enumerate() {
                    let n = g.idx(i, j, k);
                    pairing += wk * (base.comp(0)[n] * p[0][n] + base.comp(1)[n] * p[1][n]);
                }
            }
        }
        pairing *= g.hx * g.hy;
        let a = |s: f64| 1.0 + 0.5 * s.sin();
        let oracle = (a(t) - a(0.0)) * pairing;
        assert!((r - oracle).abs() < 1e-6 * oracle.abs(), "{r} {oracle}");
    }

    #[test]
    fn weak_residual_is_linear_in_psi() {
        let g = grid();
        let times: Vec<f64> = (0..5).map(|s| s as f64 * 0.5).collect();
        let u = gen_time_series(&shear(&g), &Modulation::Linear { rate: 1.0 }, &times).unwrap();
        let p1 = steady_psi(&g, 3, &times, 0.2);
        let p2 = steady_psi(&g, 4, &times, -0.7);
        let sum = TimeSeries::new(
            p1.snapshots().iter().zip(p2.snapshots()).map(|(a, b)| a.lin_comb(2.0, b, -3.0).unwrap()).collect(),
        )
        .unwrap();
        let l = weak_residual(&u, &sum, 2.0).unwrap();
        let r = 2.0 * weak_residual(&u, &p1, 2.0).unwrap() - 3.0 * weak_residual(&u, &p2, 2.0).unwrap();
        assert!((l - r).abs() < 1e-12 * (1.0 + r.abs()));
    }

    #[test]
    fn inadmissible_psi_rejected() {
        let g = grid();
        let u = TimeSeries::steady(shear(&g), 1.0).unwrap();
        let normal = VectorField::from_fn(g, Region::FullSlab, 0.0, |_, _, z| [0.0, 0.0, (-z * z).exp()]).unwrap();
        let err = weak_residual(&u, &TimeSeries::steady(normal, 1.0).unwrap(), 1.0).unwrap_err().to_string();
        assert!(err.contains("normal component"), "{err}");
        let comp = VectorField::from_fn(g, Region::FullSlab, 0.0, |x, _, z| [x.sin() * (-z * z).exp(), 0.0, 0.0]).unwrap();
        let err = weak_residual(&u, &TimeSeries::steady(comp, 1.0).unwrap(), 1.0).unwrap_err().to_string();
        assert!(err.contains("divergence defect"), "{err}");
    }

    #[test]
    fn commutator_of_constants_vanishes() {
        let g = grid();
        let c = VectorField::from_fn(g, Region::FullSlab, 0.0, |_, _, _| [1.0, -2.0, 0.5]).unwrap();
        let k = MollKernel::new(1.6, &g, Engine::Direct).unwrap();
        let r = commutator_r(&c, &c, &k).unwrap();
        let nz = g.nz();
        let rk = k.radius_nodes()[2] as usize;
        for comp in r.comps() {
            for (n, v) in comp.iter().enumerate() {
                if (rk..nz - rk).contains(&(n % nz)) {
                    assert_eq!(*v, 0.0);
                }
            }
        }
    }

    #[test]
    fn commutator_matches_dense_sum() {
        let g = grid();
        let f = VectorField::from_fn(g, Region::FullSlab, 0.0, |x, _, _| [x.sin(), 0.0, 0.0]).unwrap();
        for engine in [Engine::Direct, Engine::Spectral] {
            let k = MollKernel::new(1.6, &g, engine).unwrap();
            let r = commutator_r(&f, &f, &k).unwrap();
            let [ri, rj, rk] = k.radius_nodes();
            let vol = g.cell_volume();
            for &(i, j, kk) in &[(0usize, 0usize, 16usize), (3, 5, 14), (9, 1, 20)] {
                let x = g.x1(i);
                let mut oracle = 0.0;
                for di in -ri..=ri {
                    for dj in -rj..=rj {
                        for dk in -rk..=rk {
                            let d = (x - di as f64 * g.hx).sin() - x.sin();
                            oracle += k.weight([di, dj, dk]) * d * d * vol;
                        }
                    }
                }
                let n = g.idx(i, j, kk);
                assert!((r.entry(0, 0)[n] - oracle).abs() < 1e-10, "{engine:?}");
                for c in 1..9 {
                    assert!(r.comps()[c][n].abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn product_commutation_identity_at_random_nodes() {
        let g = grid();
        let u = zero_extend(&shear(&g)).unwrap();
        let ue = extend(&shear(&g)).unwrap().field;
        let k = MollKernel::new(1.6, &g, Engine::Direct).unwrap();
        let r = commutator_r(&ue, &u, &k).unwrap();
        let jab = mollify_tensor(&TensorField::outer(&ue, &u).unwrap(), &k).unwrap();
        let (ja, jb) = (mollify(&ue, &k).unwrap(), mollify(&u, &k).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.gen_range(0..g.len());
            for i in 0..3 {
                for j in 0..3 {
                    let d = (ue.comp(i)[n] - ja.comp(i)[n]) * (u.comp(j)[n] - jb.comp(j)[n]);
                    let rhs = r.entry(i, j)[n] - d + ja.comp(i)[n] * jb.comp(j)[n];
                    assert!((jab.entry(i, j)[n] - rhs).abs() < 1e-10);
                }
            }
        }
    }

    fn wavy(g: &Grid3) -> TimeSeries {
        let e = Envelope::FlatTop { flat: 1.0, end: 3.0 };
        let times = [0.0, 0.5, 1.0];
        let snaps = times
            .iter()
            .map(|&t| {
                VectorField::from_fn(*g, Region::HalfPlus, t, |x, y, z| {
                    let s = (1.0 + t) * e.eval(z);
                    [(y + t).cos() * s + z * e.eval(z), (x - 0.3 * t).sin() * s, 0.0]
                })
                .unwrap()
            })
            .collect();
        TimeSeries::new(snaps).unwrap()
    }

    #[test]
    fn support_domain_matches_full_slab() {
        let g = grid();
        let u = wavy(&g);
        let a = budget(&u, &[2.4, 1.6], 1.0, Engine::Direct).unwrap();
        let b = budget_over(&u, &[2.4, 1.6], 1.0, Engine::Direct, BudgetDomain::FullSlab).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            let pairs = [
                (x.lhs_boundary, y.lhs_boundary),
                (x.lhs_time, y.lhs_time),
                (x.transport, y.transport),
                (x.transport_ibp, y.transport_ibp),
                (x.r_eps_term, y.r_eps_term),
                (x.defect_term, y.defect_term),
                (x.identity_residual, y.identity_residual),
            ];
            for (p, q) in pairs {
                assert!((p - q).abs() < 1e-12, "{p} {q}");
            }
        }
    }

    #[test]
    fn engines_agree_on_budget_terms() {
        let g = grid();
        let u = wavy(&g);
        let a = budget(&u, &[1.6], 1.0, Engine::Direct).unwrap();
        let b = budget(&u, &[1.6], 1.0, Engine::Spectral).unwrap();
        let (x, y) = (&a.rows[0], &b.rows[0]);
        for (p, q) in [(x.r_eps_term, y.r_eps_term), (x.transport, y.transport), (x.lhs_time, y.lhs_time)] {
            assert!((p - q).abs() < 1e-11, "{p} {q}");
        }
    }

    #[test]
    fn steady_shear_budget() {
        let g = grid();
        let u = TimeSeries::steady(shear(&g), 1.0).unwrap();
        let rep = budget(&u, &[2.4, 1.6], 1.0, Engine::Direct).unwrap();
        assert_eq!(rep.energy_gap, 0.0);
        for r in &rep.rows {
            assert_eq!(r.lhs_boundary, 0.0);
            assert_eq!(r.lhs_time, 0.0);
            assert!(r.transport.abs() < 1e-12 * r.flux_scale);
            assert!(r.identity_residual.abs() < 1e-12 * r.flux_scale);
        }
        assert!(budget(&u, &[1.6, 2.4], 1.0, Engine::Direct).is_err());
        let err = budget(&u, &[0.5], 1.0, Engine::Direct).unwrap_err().to_string();
        assert!(err.contains("minimum epsilon"), "{err}");
    }

    #[test]
    fn cross_term_vanishes_for_fields_away_from_boundary() {
        let g = grid();
        let e = Envelope::Gaussian { scale: 0.3 };
        let times = [0.0, 1.0];
        let snaps = times
            .iter()
            .map(|&t| {
                VectorField::from_fn(g, Region::HalfPlus, t, |x, _, z| [0.0, (x + t).sin() * e.eval(z - 2.5), 0.0]).unwrap()
            })
            .collect();
        let rep = budget(&TimeSeries::new(snaps).unwrap(), &[1.6], 1.0, Engine::Direct).unwrap();
        assert!(rep.rows[0].cross_term.abs() < 1e-12);
    }

    #[test]
    fn lipschitz_of_linear_ramp() {
        let g = grid();
        let v = shear(&g);
        let steady = TimeSeries::steady(v.clone(), 1.0).unwrap();
        assert_eq!(lipschitz_in_time_check(&steady, 1.6, Engine::Direct).unwrap(), 0.0);
        let times = [0.0, 0.5, 1.5];
        let ramp = TimeSeries::new(times.iter().map(|&t| v.scaled(t).with_time(t)).collect()).unwrap();
        let k = MollKernel::new(1.6, &g, Engine::Direct).unwrap();
        let oracle = lp_norm(&mollify(&extend(&v).unwrap().field, &k).unwrap(), 2.0, Region::HalfPlus).unwrap();
        let got = lipschitz_in_time_check(&ramp, 1.6, Engine::Direct).unwrap();
        assert!((got - oracle).abs() < 1e-10 * oracle);
        let single = TimeSeries::new(vec![v]).unwrap();
        assert!(lipschitz_in_time_check(&single, 1.6, Engine::Direct).is_err());
    }
}
