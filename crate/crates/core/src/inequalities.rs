//! Deficit and remainder evaluators for the auxiliary inequalities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DomainKind, GridFunction};
use crate::optimal::{MinExtremal, ReciprocalPotential};
use crate::schrodinger::{self, SourceTerm};

/// Quadrature slack; a report passes when its margin is at least `−10 ×` this value.
pub const QUADRATURE_TOL: f64 = 1e-9;

/// Inputs farther than this from unit norm are rejected instead of renormalized.
pub const NORMALIZATION_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeficitReport {
    pub deficit: f64,
    pub remainder: f64,
    pub constant: f64,
    /// `deficit − constant · remainder`.
    pub margin: f64,
    pub passed: bool,
}

impl DeficitReport {
    pub fn new(deficit: f64, remainder: f64, constant: f64) -> Self {
        let margin = deficit - constant * remainder;
        Self { deficit, remainder, constant, margin, passed: margin >= -10.0 * QUADRATURE_TOL }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HolderForm {
    /// Remainder `‖|f|^{q−2}f − g‖²_{L^{q'}}`, constant `(q'−1)/4`.
    DualSide,
    /// Remainder `‖f − |g|^{q'−2}g‖^q_{L^q}`, constant `1/(q 2^{q−1})`.
    PrimalSide,
}

fn renormalize(u: &GridFunction, s: f64, what: &str) -> Result<GridFunction> {
    let n = u.lp_norm(s);
    if (n - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Constraint(format!("{what} has L^{s} norm {n}, expected 1")));
    }
    Ok(u.scaled(1.0 / n))
}

fn signed_power(t: f64, e: f64) -> f64 {
    t.signum() * t.abs().powf(e)
}

/// Quantitative Hölder inequality for `2 ≤ q < ∞` and unit-norm `f ∈ L^q`, `g ∈ L^{q'}`.
///
/// The deficit is `1 − ∫fg`. It coincides with `1 − |∫fg|` whenever `∫fg ≥ 0`, and unlike the
/// absolute-value version it remains valid for anti-aligned pairs such as `g = −|f|^{q−2}f`.
pub fn quantitative_holder(f: &GridFunction, g: &GridFunction, q: f64, form: HolderForm) -> Result<DeficitReport> {
    if !(q >= 2.0) || !q.is_finite() {
        return Err(Error::InvalidParameter(format!("quantitative Hölder needs 2 ≤ q < ∞, got {q}")));
    }
    f.check_same_grid(g)?;
    let qc = q / (q - 1.0);
    let f = renormalize(f, q, "f")?;
    let g = renormalize(g, qc, "g")?;
    let deficit = 1.0 - f.dot_weighted(&g);
    Ok(match form {
        HolderForm::DualSide => {
            let r = f.map(|t| signed_power(t, q - 1.0)).sub(&g).lp_norm(qc);
            DeficitReport::new(deficit, r * r, (qc - 1.0) / 4.0)
        }
        HolderForm::PrimalSide => {
            let r = f.sub(&g.map(|t| signed_power(t, qc - 1.0))).lp_norm(q);
            DeficitReport::new(deficit, r.powf(q), 1.0 / (q * 2f64.powf(q - 1.0)))
        }
    })
}

/// Clarkson: `‖(h₁+h₂)/2‖^{q'} + ‖(h₁−h₂)/2‖^{q'} ≤ 1` for unit vectors of `L^q`, `1 < q ≤ 2`.
pub fn clarkson_check(h1: &GridFunction, h2: &GridFunction, q: f64) -> Result<DeficitReport> {
    if !(q > 1.0 && q <= 2.0) {
        return Err(Error::InvalidParameter(format!("Clarkson check needs 1 < q ≤ 2, got {q}")));
    }
    h1.check_same_grid(h2)?;
    let qc = q / (q - 1.0);
    let h1 = renormalize(h1, q, "h1")?;
    let h2 = renormalize(h2, q, "h2")?;
    let plus = h1.add(&h2).scaled(0.5).lp_norm(q).powf(qc);
    let minus = h1.sub(&h2).scaled(0.5).lp_norm(q).powf(qc);
    Ok(DeficitReport::new(1.0 - plus, minus, 1.0))
}

/// `S_{q,N} = ((2+q)/(2 N ω_N))²` with `N ω_N` the area of the unit sphere.
pub fn strauss_constant(q: f64, n: u32) -> f64 {
    let nf = n as f64;
    let area = 2.0 * std::f64::consts::PI.powf(nf / 2.0) / statrs::function::gamma::gamma(nf / 2.0);
    ((2.0 + q) / (2.0 * area)).powi(2)
}

/// Strauss decay bound `|u(ρ)|^{2+q} ≤ S ρ^{−2(N−1)} ‖∇u‖² ‖u‖_q^q` at every node with `ρ > 0`.
///
/// Reported scale-free: deficit 1, remainder the worst ratio of the two sides.
pub fn strauss_bound(u: &GridFunction, q: f64) -> Result<DeficitReport> {
    let grid = u.grid();
    if grid.kind() != DomainKind::Radial3d {
        return Err(Error::InvalidParameter("Strauss bound needs a radial grid".into()));
    }
    if !(q > 0.0) {
        return Err(Error::InvalidParameter(format!("q must be positive, got {q}")));
    }
    if u.is_zero() {
        return Ok(DeficitReport::new(0.0, 0.0, 1.0));
    }
    let s = strauss_constant(q, 3);
    let energy = u.h1_seminorm().powi(2) * u.lp_integral(q);
    let worst = grid
        .radii()
        .iter()
        .zip(u.values())
        .skip(1)
        .map(|(&rho, &v)| v.abs().powf(2.0 + q) / (s * rho.powi(-4) * energy))
        .fold(0.0, f64::max);
    Ok(DeficitReport::new(1.0, worst, 1.0))
}

/// `‖g₀‖_r ≤ ‖g‖_r + ‖g − g₀‖_s ‖|g₀|^{r−1}‖_{s'} / ‖g₀‖_r^{r−1}`.
pub fn norm_lower_triangle(g: &GridFunction, g0: &GridFunction, r: f64, s: f64) -> Result<DeficitReport> {
    if !(r > 1.0 && s > 1.0 && r.is_finite() && s.is_finite()) {
        return Err(Error::InvalidParameter(format!("exponents must lie in (1, ∞), got r={r}, s={s}")));
    }
    g.check_same_grid(g0)?;
    let n0 = g0.lp_norm(r);
    if n0 == 0.0 {
        return Err(Error::Degenerate("g₀ ≡ 0".into()));
    }
    let sc = s / (s - 1.0);
    let factor = g0.map(|t| t.abs().powf(r - 1.0)).lp_norm(sc) / n0.powf(r - 1.0);
    let rhs = g.lp_norm(r) + g.sub(g0).lp_norm(s) * factor;
    Ok(DeficitReport::new(rhs, n0, 1.0))
}

#[derive(Clone, Debug)]
pub struct ReductionReport {
    /// Saturated reciprocal `W/λ`.
    pub saturated: ReciprocalPotential,
    pub lambda: f64,
    /// `E(V) − E(U) ≥ 0`.
    pub monotonicity: DeficitReport,
    /// `‖W − W₀‖ ≤ ‖W/λ − W₀‖ + (2/β)(E(V) − E(U₀))`.
    pub distance: DeficitReport,
}

/// Saturates a reciprocal potential with `‖W‖_{L^p} < 1` and checks both reduction bounds.
pub fn reduction(w: &ReciprocalPotential, f: &SourceTerm, ex: &MinExtremal, beta: f64) -> Result<ReductionReport> {
    let p = ex.p;
    let lambda = w.lp_norm(p);
    if !(lambda < 1.0) {
        return Err(Error::Constraint(format!("reduction needs ‖W‖_{{L^p}} < 1, got {lambda}")));
    }
    if lambda == 0.0 {
        return Err(Error::Degenerate("W ≡ 0".into()));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!("β must be positive, got {beta}")));
    }
    let tol = schrodinger::DEFAULT_TOL;
    let sv = schrodinger::solve_state_reciprocal(w, f, tol)?;
    let pot: Vec<f64> = w.values().values().iter().map(|&x| if x > 0.0 { 1.0 / x } else { 0.0 }).collect();
    let vu2 = sv.state.weighted_triple(&pot, &sv.state);
    if vu2 < beta {
        return Err(Error::Constraint(format!("∫Vu² = {vu2} is below β = {beta}")));
    }
    let saturated = ReciprocalPotential::new(w.values().scaled(1.0 / lambda))?;
    let su = schrodinger::solve_state_reciprocal(&saturated, f, tol)?;
    let monotonicity = DeficitReport::new(sv.energy - su.energy, 0.0, 0.0);
    let gap = sv.energy - ex.energy;
    let bound = saturated.values().sub(ex.w0.values()).lp_norm(p) + 2.0 / beta * gap;
    let distance = DeficitReport::new(bound, w.values().sub(ex.w0.values()).lp_norm(p), 1.0);
    Ok(ReductionReport { saturated, lambda, monotonicity, distance })
}
