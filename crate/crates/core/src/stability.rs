//! Energy gaps against the extremal potentials and the quantitative stability checks built on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::inequalities::DeficitReport;
use crate::linalg;
use crate::optimal::{self, MaxExtremal, MinConstants, MinExtremal, ReciprocalPotential};
use crate::schrodinger::{self, EnergyResult, Potential, SourceTerm};

/// Tolerance attached to every stability margin; a report passes at `margin ≥ −10·STABILITY_TOL`.
pub const STABILITY_TOL: f64 = 1e-9;

/// Slack allowed on the `L^p` constraint before a potential is rejected.
pub const CONSTRAINT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Gap below the threshold where the proof's main estimate runs.
    Small,
    /// Gap above the threshold; the bounded remainder makes the estimate immediate.
    Trivial,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::Small => "small",
            Branch::Trivial => "trivial",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub gap: f64,
    pub remainder: f64,
    pub exponent: f64,
    pub sigma: f64,
    /// `gap − sigma · remainder^exponent`.
    pub margin: f64,
    pub passed: bool,
    pub branch: Branch,
}

impl StabilityReport {
    fn new(gap: f64, remainder: f64, exponent: f64, sigma: f64, branch: Branch) -> Self {
        let margin = gap - sigma * remainder.powf(exponent);
        StabilityReport { gap, remainder, exponent, sigma, margin, passed: margin >= -10.0 * STABILITY_TOL, branch }
    }
}

/// Distance used on the maximization side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxDistance {
    /// `‖|V|^{p−2}V − V₀^{p−1}‖_{L^{p'}}`.
    Dual,
    /// `‖V − V₀‖_{L^p}`.
    Lp,
}

impl MaxDistance {
    /// The distance with exponent 2 for this `p`.
    pub fn quadratic(p: f64) -> Self {
        if p >= 2.0 {
            MaxDistance::Dual
        } else {
            MaxDistance::Lp
        }
    }

    /// The other distance, whose exponent is `max{p, p'}`.
    pub fn power(p: f64) -> Self {
        if p >= 2.0 {
            MaxDistance::Lp
        } else {
            MaxDistance::Dual
        }
    }
}

fn check_max_constraint(v: &Potential, p: f64) -> Result<()> {
    let n = v.lp_norm(p);
    if n > 1.0 + CONSTRAINT_TOL {
        return Err(Error::Constraint(format!("‖V‖_{{L^p}} = {n} exceeds 1")));
    }
    Ok(())
}

fn check_min_constraint(w: &ReciprocalPotential, p: f64) -> Result<()> {
    let n = w.lp_norm(p);
    if n > 1.0 + CONSTRAINT_TOL {
        return Err(Error::Constraint(format!("‖1/V‖_{{L^p}} = {n} exceeds 1")));
    }
    if n == 0.0 {
        return Err(Error::Degenerate("W ≡ 0 leaves no admissible state".into()));
    }
    Ok(())
}

fn signed_power(t: f64, e: f64) -> f64 {
    t.signum() * t.abs().powf(e)
}

fn max_distance(v: &Potential, ex: &MaxExtremal, distance: MaxDistance) -> f64 {
    let p = ex.p;
    match distance {
        MaxDistance::Lp => v.values().sub(ex.potential.values()).lp_norm(p),
        MaxDistance::Dual => {
            let a = v.values().map(|t| signed_power(t, p - 1.0));
            let b = ex.potential.values().map(|t| t.powf(p - 1.0));
            a.sub(&b).lp_norm(p / (p - 1.0))
        }
    }
}

fn max_report(gap: f64, remainder: f64, ex: &MaxExtremal, distance: MaxDistance) -> StabilityReport {
    let p = ex.p;
    let c = optimal::constants_max(ex);
    let (exponent, sigma) = match (p >= 2.0, distance) {
        (true, MaxDistance::Dual) => (2.0, c.sigma_m_prime),
        (false, MaxDistance::Lp) => (2.0, c.sigma_m_doubleprime),
        (true, MaxDistance::Lp) => (p, c.sigma_tilde_prime),
        (false, MaxDistance::Dual) => (p / (p - 1.0), c.sigma_tilde_doubleprime),
    };
    let branch = if gap <= c.threshold { Branch::Small } else { Branch::Trivial };
    StabilityReport::new(gap, remainder, exponent, sigma, branch)
}

/// `E_f(V₀) − E_f(V) ≥ σ · dist(V, V₀)^e` for `‖V‖_{L^p} ≤ 1`.
pub fn verify_max_stability(
    v: &Potential,
    ex: &MaxExtremal,
    f: &SourceTerm,
    distance: MaxDistance,
) -> Result<StabilityReport> {
    check_max_constraint(v, ex.p)?;
    let state = schrodinger::solve_state(v, f, schrodinger::DEFAULT_TOL)?;
    Ok(max_report(ex.energy - state.energy, max_distance(v, ex, distance), ex, distance))
}

fn min_report(gap: f64, remainder: f64, c: &MinConstants) -> StabilityReport {
    let branch = if gap <= c.c5 { Branch::Small } else { Branch::Trivial };
    StabilityReport::new(gap, remainder, c.beta, c.sigma_m, branch)
}

/// `E_f(V) − E_f(U₀) ≥ σ_m ‖1/V − 1/U₀‖_{L^p}^{2p(p+1)/(p−1)}` for `‖1/V‖_{L^p} ≤ 1`.
pub fn verify_min_stability(
    w: &ReciprocalPotential,
    ex: &MinExtremal,
    constants: &MinConstants,
    f: &SourceTerm,
) -> Result<StabilityReport> {
    check_min_constraint(w, ex.p)?;
    let state = schrodinger::solve_state_reciprocal(w, f, schrodinger::DEFAULT_TOL)?;
    let remainder = w.values().sub(ex.w0.values()).lp_norm(ex.p);
    Ok(min_report(state.energy - ex.energy, remainder, constants))
}

/// Stability of the state functions; each inequality is stored as a deficit report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateReport {
    pub gap: f64,
    pub branch: Branch,
    /// `‖u − v₀‖² ≤ ‖u‖²_{L^{2p/(p−1)}} − ∫Vu²` (max side).
    pub weak: Option<DeficitReport>,
    /// `√gap ≥ c₃ |‖u₀‖²_{L^{2p/(p+1)}} − ‖u‖²_{L^{2p/(p+1)}}|` when the gap is at most 1 (min side).
    pub corner: Option<DeficitReport>,
    /// Main estimate: deficit is the gap-side expression, remainder the state distance.
    pub functions: DeficitReport,
    /// `gap^{1/ϑ} ≥ c ‖u − v₀‖` when `2p/(p−1)` is the Sobolev exponent.
    pub sobolev: Option<DeficitReport>,
    pub passed: bool,
}

impl StateReport {
    fn assemble(
        gap: f64,
        branch: Branch,
        weak: Option<DeficitReport>,
        corner: Option<DeficitReport>,
        functions: DeficitReport,
        sobolev: Option<DeficitReport>,
    ) -> Self {
        let passed = [weak, corner, Some(functions), sobolev].iter().flatten().all(|r| r.passed);
        StateReport { gap, branch, weak, corner, functions, sobolev, passed }
    }

    /// Smallest margin among the checks that ran.
    pub fn margin(&self) -> f64 {
        [self.weak, self.corner, Some(self.functions), self.sobolev]
            .iter()
            .flatten()
            .map(|r| r.margin)
            .fold(f64::INFINITY, f64::min)
    }
}

/// State-function stability on the maximization side.
///
/// The main estimate is `gap^{1/ϑ} ‖u − v₀‖_{L^{2p/(p−1)}} ≥ c ‖u − v₀‖²` with `ϑ = max{2, p}` and
/// `c = (1 − μ) σ^{1/ϑ} / c₁`, where `μ = max ∫V₋φ²/‖∇φ‖²` is the coercivity defect of `V`.
pub fn verify_max_state_stability(v: &Potential, ex: &MaxExtremal, f: &SourceTerm) -> Result<StateReport> {
    let p = ex.p;
    check_max_constraint(v, p)?;
    let state = schrodinger::solve_state(v, f, schrodinger::DEFAULT_TOL)?;
    let gap = (ex.energy - state.energy).max(0.0);
    let m = 2.0 * p / (p - 1.0);
    let u = &state.state;
    let psi = u.sub(&ex.v0);
    let psi_h1 = psi.h1_seminorm();

    let bracket = u.lp_norm(m).powi(2) - u.weighted_triple(v.values().values(), u);
    let weak = DeficitReport::new(bracket, psi_h1 * psi_h1, 1.0);

    let theta = 1.0 - schrodinger::coercivity_defect(v);
    if !(theta > 0.0) {
        return Err(Error::NotAdmissible { margin: theta });
    }
    let c = optimal::constants_max(ex);
    let (vartheta, sigma) = if p >= 2.0 { (p, c.sigma_tilde_prime) } else { (2.0, c.sigma_m_doubleprime) };
    let constant = theta * sigma.powf(1.0 / vartheta) / ex.c1;
    let lead = gap.powf(1.0 / vartheta);
    let functions = DeficitReport::new(lead * psi.lp_norm(m), psi_h1 * psi_h1, constant);

    let emb = u.grid().sobolev_embedding();
    let sobolev = ((m - emb.exponent).abs() < 1e-12)
        .then(|| DeficitReport::new(lead, psi_h1, constant * emb.constant.sqrt()));
    let branch = if gap <= c.threshold { Branch::Small } else { Branch::Trivial };
    Ok(StateReport::assemble(gap, branch, Some(weak), None, functions, sobolev))
}

/// Constants `(c, τ)` of the min-side state estimate `gap^{(p−1)/(2p)} ≥ c [‖u−u₀‖² + ‖u−u₀‖²_{L^{2p/(p+1)}}]`.
///
/// Below `τ = min{1, c₅, (2c₇c₂^{(p−1)/(p+1)}/c₄)²}` the estimate comes from the corner lemma and the
/// normalized `L^{2p/(p+1)}` bound; above it both distances are bounded through `‖f‖_{W^{-1,2}}`.
pub fn min_state_constants(c: &MinConstants) -> (f64, f64) {
    let p = c.p;
    let e = (p - 1.0) / (2.0 * p);
    let tau = 1f64.min(c.c5).min((2.0 * c.c7 * c.c2.powf((p - 1.0) / (p + 1.0)) / c.c4).powi(2));
    let small = 1.0 / (2.0 + 2.0 * ((c.c3 * c.c2).powi(-2) + c.c2 * c.c2 * c.c9.powf(-e)));
    let trivial = tau.powf(e) / (6.0 * c.dual_norm * c.dual_norm);
    (small.min(trivial), tau)
}

/// State-function stability on the minimization side, with the corner-lemma cross-check.
pub fn verify_min_state_stability(
    w: &ReciprocalPotential,
    ex: &MinExtremal,
    constants: &MinConstants,
    f: &SourceTerm,
) -> Result<StateReport> {
    let p = ex.p;
    check_min_constraint(w, p)?;
    let state = schrodinger::solve_state_reciprocal(w, f, schrodinger::DEFAULT_TOL)?;
    let gap = (state.energy - ex.energy).max(0.0);
    let q = 2.0 * p / (p + 1.0);
    let u = &state.state;
    let psi = u.sub(&ex.u0);
    let dist = psi.h1_seminorm().powi(2) + psi.lp_norm(q).powi(2);
    let (c, tau) = min_state_constants(constants);
    let functions = DeficitReport::new(gap.powf((p - 1.0) / (2.0 * p)), dist, c);
    let corner = (gap <= 1.0).then(|| {
        let diff = (ex.u0.lp_norm(q).powi(2) - u.lp_norm(q).powi(2)).abs();
        DeficitReport::new(gap.sqrt(), diff, constants.c3)
    });
    let branch = if gap <= tau { Branch::Small } else { Branch::Trivial };
    Ok(StateReport::assemble(gap, branch, None, corner, functions, None))
}

#[derive(Clone, Copy, Debug)]
pub enum Extremal<'a> {
    Max(&'a MaxExtremal),
    Min(&'a MinExtremal, &'a MinConstants),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub eps: Vec<f64>,
    /// Reports with the quadratic distance (max side) or the reciprocal distance (min side).
    pub primary: Vec<StabilityReport>,
    /// Reports with the second max-side distance; empty on the min side.
    pub secondary: Vec<StabilityReport>,
    /// Least-squares slope of `log gap` against `log ε` over entries with positive gap.
    pub slope: Option<f64>,
}

impl ProbeReport {
    pub fn gaps(&self) -> Vec<f64> {
        self.primary.iter().map(|r| r.gap).collect()
    }

    pub fn margins(&self) -> Vec<f64> {
        self.primary.iter().chain(&self.secondary).map(|r| r.margin).collect()
    }
}

/// Perturbs the extremal along `direction` and records gap and remainders for each `ε`.
///
/// The perturbed potential is `|V₀ + εψ| / ‖V₀ + εψ‖_{L^p}` (or the same for `W₀`), so every sample
/// saturates the constraint.
pub fn scaling_probe(
    direction: &GridFunction,
    ex: Extremal<'_>,
    f: &SourceTerm,
    eps_list: &[f64],
) -> Result<ProbeReport> {
    if eps_list.iter().any(|&e| !(e >= 0.0)) {
        return Err(Error::InvalidParameter("perturbation sizes must be nonnegative".into()));
    }
    let tol = schrodinger::DEFAULT_TOL;
    let mut primary = Vec::with_capacity(eps_list.len());
    let mut secondary = Vec::new();
    match ex {
        Extremal::Max(ex) => {
            direction.check_same_grid(&ex.v0)?;
            let quadratic = MaxDistance::quadratic(ex.p);
            let power = MaxDistance::power(ex.p);
            for &eps in eps_list {
                let raw = ex.potential.values().axpy(eps, direction).map(f64::abs);
                let n = raw.lp_norm(ex.p);
                if n == 0.0 {
                    return Err(Error::Degenerate(format!("perturbation vanishes at ε = {eps}")));
                }
                let v = Potential::new(raw.scaled(1.0 / n));
                let gap = if eps == 0.0 { 0.0 } else { ex.energy - schrodinger::solve_state(&v, f, tol)?.energy };
                primary.push(max_report(gap, max_distance(&v, ex, quadratic), ex, quadratic));
                secondary.push(max_report(gap, max_distance(&v, ex, power), ex, power));
            }
        }
        Extremal::Min(ex, constants) => {
            direction.check_same_grid(&ex.u0)?;
            for &eps in eps_list {
                let w = if eps == 0.0 {
                    ex.w0.clone()
                } else {
                    ReciprocalPotential::normalized(ex.w0.values().axpy(eps, direction).map(f64::abs), ex.p)?
                };
                let gap = if eps == 0.0 {
                    0.0
                } else {
                    let state: EnergyResult = schrodinger::solve_state_reciprocal(&w, f, tol)?;
                    state.energy - ex.energy
                };
                let remainder = w.values().sub(ex.w0.values()).lp_norm(ex.p);
                primary.push(min_report(gap, remainder, constants));
            }
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = eps_list
        .iter()
        .zip(&primary)
        .filter(|(&e, r)| e > 0.0 && r.gap > 0.0)
        .map(|(&e, r)| (e.ln(), r.gap.ln()))
        .unzip();
    let slope = linalg::line_fit(&xs, &ys).map(|(s, _, _)| s);
    Ok(ProbeReport { eps: eps_list.to_vec(), primary, secondary, slope })
}
