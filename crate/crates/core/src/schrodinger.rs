//! State equation `(−Δ_h + V)u = f`, the energy `E_f(V)` and the basic energy lemmas.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{inverse_iteration, Grid, GridFunction};
use crate::linalg::{self, CsrMatrix};
use crate::optimal::ReciprocalPotential;

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    values: GridFunction,
}

impl Potential {
    pub fn new(values: GridFunction) -> Self {
        Self { values }
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        Self::new(GridFunction::constant(grid, c))
    }

    pub fn values(&self) -> &GridFunction {
        &self.values
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.values.grid()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.values().iter().all(|&v| v >= 0.0)
    }

    pub fn negative_part(&self) -> GridFunction {
        self.values.map(|v| (-v).max(0.0))
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        self.values.lp_norm(p)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SourceTerm {
    values: GridFunction,
}

impl SourceTerm {
    pub fn new(values: GridFunction) -> Self {
        Self { values }
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        Self::new(GridFunction::constant(grid, c))
    }

    pub fn values(&self) -> &GridFunction {
        &self.values
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.values.grid()
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_zero()
    }

    /// Right-hand side `w·f` of the weighted linear system.
    pub(crate) fn load(&self) -> Vec<f64> {
        self.values
            .values()
            .iter()
            .zip(self.grid().weights())
            .map(|(f, w)| f * w)
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct EnergyResult {
    pub state: GridFunction,
    /// `−½⟨f, u⟩`.
    pub energy: f64,
    /// `½‖∇u‖² + ½∫Vu² − ⟨f,u⟩` evaluated directly.
    pub direct_energy: f64,
    pub residual: f64,
    pub iterations: usize,
}

impl EnergyResult {
    pub fn discrepancy(&self) -> f64 {
        (self.energy - self.direct_energy).abs()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AdmissibilityCertificate {
    pub coercive: bool,
    /// Estimate of the smallest eigenvalue of `−Δ_h + V`.
    pub margin: f64,
    pub iterations: usize,
}

/// Smallest eigenvalue of `−Δ_h + V`; nonnegative potentials skip the iteration.
pub fn check_admissible(v: &Potential, _f: &SourceTerm) -> AdmissibilityCertificate {
    admissibility(v)
}

fn admissibility(v: &Potential) -> AdmissibilityCertificate {
    let grid = v.grid();
    let vmin = v.values().min_value();
    if vmin >= 0.0 {
        let margin = grid.poisson_ground_value() + vmin;
        return AdmissibilityCertificate { coercive: true, margin, iterations: 0 };
    }
    let a = operator(grid, v.values().values());
    let shift = 1.0 - vmin;
    let (lambda, iterations) = inverse_iteration(&a, grid.weights(), shift);
    AdmissibilityCertificate { coercive: lambda > 0.0, margin: lambda, iterations }
}

/// `K + diag(w·V)`.
pub(crate) fn operator(grid: &Grid, v: &[f64]) -> CsrMatrix {
    let d: Vec<f64> = v.iter().zip(grid.weights()).map(|(v, w)| v * w).collect();
    grid.stiffness().shifted(&d)
}

pub fn solve_state(v: &Potential, f: &SourceTerm, tol: f64) -> Result<EnergyResult> {
    v.values().check_same_grid(f.values())?;
    if !v.is_nonnegative() {
        let cert = admissibility(v);
        if !cert.coercive {
            return Err(Error::NotAdmissible { margin: cert.margin });
        }
    }
    let grid = v.grid();
    let a = operator(grid, v.values().values());
    let out = linalg::solve_spd(&a, &f.load(), tol)?;
    let state = GridFunction::new(grid, out.x)?;
    Ok(finish(state, f, |u| u.weighted_triple(v.values().values(), u), out.iterations, out.relative_residual))
}

/// State and energy for `V = 1/W`; nodes with `W = 0` carry `V = +∞` and are removed from the quadratic form.
pub fn solve_state_reciprocal(w: &ReciprocalPotential, f: &SourceTerm, tol: f64) -> Result<EnergyResult> {
    w.values().check_same_grid(f.values())?;
    let grid = w.grid();
    let wv = w.values().values();
    let keep: Vec<bool> = wv.iter().map(|&x| x > 0.0).collect();
    let pot: Vec<f64> = wv.iter().map(|&x| if x > 0.0 { 1.0 / x } else { 0.0 }).collect();
    let a = operator(grid, &pot).restricted(&keep);
    let mut b = f.load();
    for (bi, &k) in b.iter_mut().zip(&keep) {
        if !k {
            *bi = 0.0;
        }
    }
    let out = linalg::solve_spd(&a, &b, tol)?;
    let state = GridFunction::new(grid, out.x)?;
    Ok(finish(state, f, |u| u.weighted_triple(&pot, u), out.iterations, out.relative_residual))
}

fn finish(
    state: GridFunction,
    f: &SourceTerm,
    potential_term: impl Fn(&GridFunction) -> f64,
    iterations: usize,
    residual: f64,
) -> EnergyResult {
    let fu = f.values().dot_weighted(&state);
    let h1 = state.grid().stiffness().quadratic_form(state.values());
    let direct_energy = 0.5 * h1 + 0.5 * potential_term(&state) - fu;
    EnergyResult { energy: -0.5 * fu, direct_energy, residual, iterations, state }
}

/// Riesz representative `φ` of `f`: `−Δ_h φ = f`.
pub fn riesz_representative(f: &SourceTerm) -> Result<GridFunction> {
    let grid = f.grid();
    let out = linalg::solve_spd(grid.stiffness(), &f.load(), 1e-12)?;
    GridFunction::new(grid, out.x)
}

/// `‖f‖_{W^{-1,2}}` as the Dirichlet seminorm of the Riesz representative.
pub fn dual_norm(f: &SourceTerm) -> Result<f64> {
    Ok(riesz_representative(f)?.h1_seminorm())
}

/// `max ∫V₋φ² / ‖∇φ‖²`, the discrete counterpart of `‖V₋‖_{L^{N/2}}/T_N`.
pub fn coercivity_defect(v: &Potential) -> f64 {
    let neg = v.negative_part();
    if neg.is_zero() {
        return 0.0;
    }
    let grid = v.grid();
    let k = grid.stiffness();
    let wn: Vec<f64> = neg.values().iter().zip(grid.weights()).map(|(a, b)| a * b).collect();
    let pc = linalg::Preconditioner::new(k);
    let mut x: Vec<f64> = vec![1.0; grid.len()];
    let mut mu = 0.0;
    for _ in 0..2000 {
        let b: Vec<f64> = x.iter().zip(&wn).map(|(a, b)| a * b).collect();
        let y = match linalg::pcg(k, &b, Some(&x), &pc, 1e-12, linalg::cg_cap(grid.len())) {
            Ok(o) => o.x,
            Err(_) => break,
        };
        let num: f64 = y.iter().zip(&wn).map(|(a, b)| a * a * b).sum();
        let den = k.quadratic_form(&y);
        let next = num / den;
        let s = den.sqrt();
        x = y.iter().map(|v| v / s).collect();
        if (next - mu).abs() <= 1e-12 * next.abs() {
            return next;
        }
        mu = next;
    }
    mu
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EstimateReport {
    pub state_norm: f64,
    pub dual_norm: f64,
    pub factor: f64,
    pub bound: f64,
    pub margin: f64,
    pub passed: bool,
}

/// `‖∇u_V‖ ≤ ‖f‖_{W^{-1,2}} / (1 − μ)` with `μ` from [`coercivity_defect`].
pub fn energy_estimate_check(v: &Potential, f: &SourceTerm) -> Result<EstimateReport> {
    let state = solve_state(v, f, DEFAULT_TOL)?.state;
    let mu = coercivity_defect(v);
    let factor = 1.0 / (1.0 - mu);
    let dn = dual_norm(f)?;
    let state_norm = state.h1_seminorm();
    let bound = factor * dn;
    let margin = bound - state_norm;
    Ok(EstimateReport {
        state_norm,
        dual_norm: dn,
        factor,
        bound,
        margin,
        passed: margin >= -1e-9 * bound.max(1.0),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct L2GapReport {
    pub lhs: f64,
    pub constant: f64,
    pub bound: f64,
    pub margin: f64,
    pub passed: bool,
}

/// `|∫V₁u₁² − ∫V₂u₂²| ≤ C‖f‖_{W^{-1,2}}‖∇(u₁ − u₂)‖`.
pub fn weighted_l2_gap(v1: &Potential, v2: &Potential, f: &SourceTerm) -> Result<L2GapReport> {
    let u1 = solve_state(v1, f, DEFAULT_TOL)?.state;
    let u2 = solve_state(v2, f, DEFAULT_TOL)?.state;
    let lhs = (u1.weighted_triple(v1.values().values(), &u1) - u2.weighted_triple(v2.values().values(), &u2)).abs();
    let constant = 1.0 + 1.0 / (1.0 - coercivity_defect(v1)) + 1.0 / (1.0 - coercivity_defect(v2));
    let bound = constant * dual_norm(f)? * u1.sub(&u2).h1_seminorm();
    let margin = bound - lhs;
    Ok(L2GapReport { lhs, constant, bound, margin, passed: margin >= -1e-9 * bound.max(1e-3) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IdentityReport {
    /// `E(V₁) − E(V₂)`.
    pub lhs: f64,
    /// `½∫(V₁ − V₂)u₁u₂`.
    pub rhs: f64,
    pub identity_error: f64,
    /// `½ (∫|V₁−V₂|u₁²)^{1/2} (∫|V₁−V₂|u₂²)^{1/2}`.
    pub cauchy_schwarz_bound: f64,
    /// `½‖V₁−V₂‖_{L^p}‖u₁‖_{L^m}‖u₂‖_{L^m}`, `m = 2p/(p−1)`.
    pub lipschitz_bound: f64,
    pub passed: bool,
}

pub fn energy_difference_identity(v1: &Potential, v2: &Potential, f: &SourceTerm, p: f64) -> Result<IdentityReport> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("p must exceed 1, got {p}")));
    }
    let s1 = solve_state(v1, f, DEFAULT_TOL)?;
    let s2 = solve_state(v2, f, DEFAULT_TOL)?;
    let dv = v1.values().sub(v2.values());
    let lhs = s1.energy - s2.energy;
    let rhs = 0.5 * s1.state.weighted_triple(dv.values(), &s2.state);
    let adv = dv.map(f64::abs);
    let cs = 0.5
        * (s1.state.weighted_triple(adv.values(), &s1.state) * s2.state.weighted_triple(adv.values(), &s2.state)).sqrt();
    let m = 2.0 * p / (p - 1.0);
    let lip = 0.5 * dv.lp_norm(p) * s1.state.lp_norm(m) * s2.state.lp_norm(m);
    let identity_error = (lhs - rhs).abs();
    let scale = 1.0f64.max(s1.energy.abs() + s2.energy.abs());
    let slack = 10.0 * DEFAULT_TOL * scale;
    let passed = identity_error <= slack && lhs.abs() <= cs + slack && cs <= lip + slack;
    Ok(IdentityReport { lhs, rhs, identity_error, cauchy_schwarz_bound: cs, lipschitz_bound: lip, passed })
}
