//! Radial semilinear problems `−Δu + a u^{q−1} = f` on a truncated ball and their decay.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DomainKind, Grid, GridFunction};
use crate::inequalities;
use crate::linalg::{self, Preconditioner};

/// Iterates are clamped here before `u^{q−1}` is evaluated.
pub const POSITIVITY_CLAMP: f64 = 1e-14;

/// Smallest Newton damping factor tried before giving up.
pub const DAMPING_FLOOR: f64 = 1.0 / 1048576.0;

const MAX_NEWTON: usize = 200;

/// Upper end of the decay fit window.
pub const FIT_CAP: f64 = 32.0;

/// Fits with residual rms above this are flagged as not power-like.
pub const POWER_RMS: f64 = 0.5;

#[derive(Clone, Debug)]
pub struct RadialProblem {
    /// Space dimension; radial grids are three-dimensional.
    pub dimension: u32,
    pub q: f64,
    pub a: f64,
    pub alpha: f64,
    /// Radius beyond which the envelope `|f(ρ)| ≤ C ρ^{−α}` is enforced.
    pub r: f64,
    /// Measured envelope constant `C = max_{ρ ≥ R} |f(ρ)| ρ^α`.
    pub envelope: f64,
    pub source: GridFunction,
    pub truncation_radius: f64,
}

impl RadialProblem {
    pub fn new(source: GridFunction, q: f64, a: f64, alpha: f64, r: f64) -> Result<Self> {
        let grid = source.grid();
        if grid.kind() != DomainKind::Radial3d {
            return Err(Error::InvalidParameter("radial problems need a radial grid".into()));
        }
        let dimension = 3u32;
        if !(q > 1.0 && q < 2.0) {
            return Err(Error::InvalidParameter(format!("q must lie in (1, 2), got {q}")));
        }
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidParameter(format!("a must be positive, got {a}")));
        }
        let threshold = (dimension as f64 + 2.0) / 2.0;
        if !(alpha > threshold) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha must exceed (N+2)/2 = {threshold}, got {alpha}")));
        }
        let truncation_radius = grid.domain().truncation_radius().unwrap_or(f64::NAN);
        if !(r > 0.0 && r < truncation_radius) {
            return Err(Error::InvalidParameter(format!("R must lie in (0, {truncation_radius}), got {r}")));
        }
        let envelope = grid
            .radii()
            .iter()
            .zip(source.values())
            .filter(|(&rho, _)| rho >= r)
            .map(|(&rho, &f)| f.abs() * rho.powf(alpha))
            .fold(0.0, f64::max);
        Ok(RadialProblem { dimension, q, a, alpha, r, envelope, source, truncation_radius })
    }

    /// Problem with source `C (1 + ρ²)^{−α/2}`.
    pub fn power_tail(grid: &Arc<Grid>, c: f64, alpha: f64, q: f64, a: f64, r: f64) -> Result<Self> {
        let source = GridFunction::from_fn(grid, |x| c * (1.0 + x[0] * x[0]).powf(-alpha / 2.0))?;
        Self::new(source, q, a, alpha, r)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.source.grid()
    }

    /// `c₂` with `c₂^{2−q} = a`.
    pub fn equivalent_c2(&self) -> f64 {
        self.a.powf(1.0 / (2.0 - self.q))
    }
}

#[derive(Clone, Debug)]
pub struct RadialSolution {
    pub u: GridFunction,
    /// `‖K u + w(a u^{q−1} − f)‖ / ‖w f‖`.
    pub residual: f64,
    pub iterations: usize,
}

fn nonlinear_residual(k: &linalg::CsrMatrix, w: &[f64], load: &[f64], a: f64, q: f64, u: &[f64]) -> Vec<f64> {
    let mut r = k.apply(u);
    for i in 0..u.len() {
        r[i] += w[i] * a * u[i].max(POSITIVITY_CLAMP).powf(q - 1.0) - load[i];
    }
    r
}

/// Damped Newton for the discrete problem `K u + w(a u^{q−1}) = w f` with `u ≥ 0`.
pub fn solve_semilinear_radial(prob: &RadialProblem, tol: f64) -> Result<RadialSolution> {
    let grid = prob.grid();
    if prob.source.min_value() < 0.0 {
        return Err(Error::InvalidParameter("the radial solver needs a nonnegative source".into()));
    }
    if prob.source.is_zero() {
        return Ok(RadialSolution { u: GridFunction::zeros(grid), residual: 0.0, iterations: 0 });
    }
    let (a, q) = (prob.a, prob.q);
    let k = grid.stiffness();
    let w = grid.weights();
    let load: Vec<f64> = prob.source.values().iter().zip(w).map(|(f, w)| f * w).collect();
    let scale = linalg::norm2(&load);
    let mut u = vec![POSITIVITY_CLAMP; grid.len()];
    let mut res = nonlinear_residual(k, w, &load, a, q, &u);
    let mut rnorm = linalg::norm2(&res) / scale;
    let mut polished = false;
    for it in 0..MAX_NEWTON {
        if rnorm <= tol && polished {
            return Ok(RadialSolution { u: GridFunction::new(grid, u)?, residual: rnorm, iterations: it });
        }
        let diag: Vec<f64> =
            u.iter().zip(w).map(|(&ui, &wi)| wi * a * (q - 1.0) * ui.max(POSITIVITY_CLAMP).powf(q - 2.0)).collect();
        let jac = k.shifted(&diag);
        let pc = Preconditioner::new(&jac);
        let step = linalg::pcg(&jac, &res, None, &pc, 1e-14, linalg::cg_cap(u.len()))?.x;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&step).map(|(ui, s)| (ui - lambda * s).max(0.0)).collect();
            let tr = nonlinear_residual(k, w, &load, a, q, &trial);
            let tn = linalg::norm2(&tr) / scale;
            if tn < rnorm {
                u = trial;
                res = tr;
                rnorm = tn;
                break;
            }
            lambda *= 0.5;
            if lambda < DAMPING_FLOOR {
                if rnorm <= tol {
                    return Ok(RadialSolution { u: GridFunction::new(grid, u)?, residual: rnorm, iterations: it });
                }
                return Err(Error::NoConvergence { solver: "radial Newton", iterations: it, residual: rnorm });
            }
        }
        // one extra step once the tolerance is met
        polished = rnorm <= tol;
    }
    Err(Error::NoConvergence { solver: "radial Newton", iterations: MAX_NEWTON, residual: rnorm })
}

/// Manufactured solution `u*(ρ) = (1 + ρ²)^{−2}` with its continuous and discrete sources.
#[derive(Clone, Debug)]
pub struct Manufactured {
    pub exact: GridFunction,
    /// `−Δu* + a (u*)^{q−1}` in closed form.
    pub source: GridFunction,
    /// `K u*/w + a (u*)^{q−1}`, reproduced exactly by the discrete solver.
    pub discrete_source: GridFunction,
}

pub fn manufactured(grid: &Arc<Grid>, a: f64, q: f64) -> Result<Manufactured> {
    if grid.kind() != DomainKind::Radial3d {
        return Err(Error::InvalidParameter("manufactured solutions live on radial grids".into()));
    }
    let exact = GridFunction::from_fn(grid, |x| (1.0 + x[0] * x[0]).powi(-2))?;
    let source = GridFunction::from_fn(grid, |x| {
        let s = 1.0 + x[0] * x[0];
        12.0 * (1.0 - x[0] * x[0]) / s.powi(4) + a * s.powf(-2.0 * (q - 1.0))
    })?;
    let discrete_source = exact.apply_laplacian().zip_map(&exact, |l, u| l + a * u.powf(q - 1.0));
    Ok(Manufactured { exact, source, discrete_source })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinftyReport {
    /// `max{‖u‖_{L∞(B_R)}, (c₂^{q−2} C R^{−α})^{1/(q−1)}}`.
    pub bound: f64,
    pub ball_max: f64,
    pub tail_level: f64,
    pub sup: f64,
    pub slack: f64,
    pub passed: bool,
}

pub fn linfty_bound(u: &GridFunction, prob: &RadialProblem, c2: f64, tol: f64) -> Result<LinftyReport> {
    u.check_same_grid(&prob.source)?;
    let radii = u.grid().radii();
    let ball_max = radii.iter().zip(u.values()).filter(|(&rho, _)| rho <= prob.r).map(|(_, v)| v.abs()).fold(0.0, f64::max);
    let tail_level = (c2.powf(prob.q - 2.0) * prob.envelope * prob.r.powf(-prob.alpha)).powf(1.0 / (prob.q - 1.0));
    let bound = ball_max.max(tail_level);
    let sup = u.sup_norm();
    let slack = bound + tol - sup;
    Ok(LinftyReport { bound, ball_max, tail_level, sup, slack, passed: slack >= 0.0 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// Smallest ladder value with `u(ρ) ≤ T^{2/(2−q)} w(ρ/T)` at every node.
    pub t: Option<f64>,
    pub ladder: Vec<f64>,
    /// `min (T^{2/(2−q)} w(ρ/T) − u)` for the accepted `T`, or for the last rung.
    pub slack: f64,
    /// Set when `0.8 · truncation_radius < 4R`, which leaves no tail clear of the boundary.
    pub polluted: bool,
    pub passed: bool,
}

pub const LADDER_CAP: u32 = 20;

fn interpolate(radii: &[f64], values: &[f64], rho: f64, outer: f64) -> f64 {
    let h = radii[1] - radii[0];
    let t = rho / h;
    let i = t.floor() as usize;
    if i + 1 < values.len() {
        let s = t - i as f64;
        values[i] * (1.0 - s) + values[i + 1] * s
    } else if rho < outer {
        let last = values.len() - 1;
        values[last] * (outer - rho) / (outer - radii[last])
    } else {
        0.0
    }
}

/// Solves the comparison problem for `w` and searches `T ∈ {1, 2, 4, …}`.
pub fn comparison_check(u: &GridFunction, prob: &RadialProblem, c2: f64, tol: f64) -> Result<ComparisonReport> {
    u.check_same_grid(&prob.source)?;
    let grid = prob.grid();
    let h = GridFunction::from_fn(grid, |x| (1.0 + x[0] * x[0]).powf(-prob.alpha / 2.0))?;
    let comp = RadialProblem { a: c2.powf(2.0 - prob.q), source: h, ..prob.clone() };
    let w = solve_semilinear_radial(&comp, tol)?.u;
    Ok(comparison_against(u, &w, prob))
}

/// Ladder search of `u ≤ T^{2/(2−q)} w(·/T)` for a given comparison function `w`.
pub fn comparison_against(u: &GridFunction, w: &GridFunction, prob: &RadialProblem) -> ComparisonReport {
    let radii = u.grid().radii();
    let outer = prob.truncation_radius;
    let power = 2.0 / (2.0 - prob.q);
    let polluted = 0.8 * outer < 4.0 * prob.r;
    let mut ladder = Vec::new();
    let mut slack = f64::NEG_INFINITY;
    let mut found = None;
    for k in 0..=LADDER_CAP {
        let t = 2f64.powi(k as i32);
        ladder.push(t);
        let scale = t.powf(power);
        slack = radii
            .iter()
            .zip(u.values())
            .map(|(&rho, &uv)| {
                let cmp = scale * interpolate(&radii, w.values(), rho / t, outer);
                cmp * (1.0 + 1e-9) + 1e-14 - uv
            })
            .fold(f64::INFINITY, f64::min);
        if slack >= 0.0 {
            found = Some(t);
            break;
        }
    }
    ComparisonReport { t: found, ladder, slack, polluted, passed: found.is_some() && !polluted }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub fit_range: (f64, f64),
    pub slope: f64,
    pub intercept: f64,
    pub rms: f64,
    /// `−α/(q−1)`.
    pub expected: f64,
    pub relative_error: f64,
    pub within_tolerance: bool,
    pub power_like: bool,
}

/// Fit window `[2R, min(32, 0.8·truncation_radius)]`.
pub fn fit_window(prob: &RadialProblem) -> Result<(f64, f64)> {
    let lo = 2.0 * prob.r;
    let hi = FIT_CAP.min(0.8 * prob.truncation_radius);
    if !(hi > lo) {
        return Err(Error::InvalidParameter(format!("empty decay window [{lo}, {hi}]")));
    }
    Ok((lo, hi))
}

fn window_samples(u: &GridFunction, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    u.grid().radii().into_iter().zip(u.values().iter().copied()).filter(|(rho, _)| *rho >= lo && *rho <= hi).collect()
}

/// Least-squares slope of `log u` against `log ρ` on the fit window.
pub fn decay_fit(u: &GridFunction, prob: &RadialProblem) -> Result<DecayFit> {
    u.check_same_grid(&prob.source)?;
    let (lo, hi) = fit_window(prob)?;
    let samples = window_samples(u, lo, hi);
    if samples.len() < 2 {
        return Err(Error::InvalidParameter("decay window holds fewer than two nodes".into()));
    }
    if samples.iter().any(|&(_, v)| !(v > 0.0)) {
        return Err(Error::Degenerate("u vanishes on the decay window".into()));
    }
    let xs: Vec<f64> = samples.iter().map(|(r, _)| r.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|(_, v)| v.ln()).collect();
    let (slope, intercept, rms) = linalg::line_fit(&xs, &ys).expect("window has distinct radii");
    let expected = -prob.alpha / (prob.q - 1.0);
    let relative_error = (slope - expected).abs() / expected.abs();
    Ok(DecayFit {
        fit_range: (lo, hi),
        slope,
        intercept,
        rms,
        expected,
        relative_error,
        within_tolerance: relative_error <= 0.1,
        power_like: rms <= POWER_RMS,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapStep {
    pub beta: f64,
    /// Constant fitted on the inner half of the tail window.
    pub constant: f64,
    pub verified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    /// `2(N−1)/(2+q)`.
    pub beta0: f64,
    /// Strauss constant `(S ‖∇u‖² ‖u‖_q^q)^{1/(2+q)}` multiplying `ρ^{−β₀}`.
    pub strauss_constant: f64,
    pub strauss_verified: bool,
    /// Target exponent of the chain.
    pub gamma: f64,
    pub nothing_to_prove: bool,
    pub steps: Vec<BootstrapStep>,
    pub verified_steps: usize,
    pub deepest: f64,
}

pub const BOOTSTRAP_STEPS: usize = 5;

/// Checks the exponent chain `β_{i+1} = (γ + β_i)/2` that starts from the Strauss exponent.
pub fn weak_decay_bootstrap(u: &GridFunction, prob: &RadialProblem) -> Result<BootstrapReport> {
    u.check_same_grid(&prob.source)?;
    let n = prob.dimension as f64;
    let q = prob.q;
    let beta0 = 2.0 * (n - 1.0) / (2.0 + q);
    let gamma = prob.alpha;
    let s = inequalities::strauss_constant(q, prob.dimension);
    let strauss_constant = (s * u.h1_seminorm().powi(2) * u.lp_integral(q)).powf(1.0 / (2.0 + q));
    let strauss_verified = inequalities::strauss_bound(u, q)?.passed;
    if gamma <= beta0 {
        return Ok(BootstrapReport {
            beta0,
            strauss_constant,
            strauss_verified,
            gamma,
            nothing_to_prove: true,
            steps: Vec::new(),
            verified_steps: 0,
            deepest: beta0,
        });
    }
    let (lo, hi) = fit_window(prob)?;
    let split = (lo * hi).sqrt();
    let samples = window_samples(u, lo, hi);
    let mut steps = Vec::with_capacity(BOOTSTRAP_STEPS);
    let mut beta = beta0;
    let mut deepest = beta0;
    let mut verified_steps = 0;
    for _ in 0..BOOTSTRAP_STEPS {
        beta = 0.5 * (gamma + beta);
        let constant =
            samples.iter().filter(|(r, _)| *r <= split).map(|(r, v)| v.abs() * r.powf(beta)).fold(0.0, f64::max);
        let verified = strauss_verified
            && samples
                .iter()
                .filter(|(r, _)| *r > split)
                .all(|(r, v)| v.abs() <= constant * r.powf(-beta) * (1.0 + 1e-12));
        steps.push(BootstrapStep { beta, constant, verified });
        if !verified {
            break;
        }
        verified_steps += 1;
        deepest = beta;
    }
    Ok(BootstrapReport {
        beta0,
        strauss_constant,
        strauss_verified,
        gamma,
        nothing_to_prove: false,
        steps,
        verified_steps,
        deepest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(rt: f64, n: usize) -> RadialProblem {
        let g = Grid::radial(rt, n).unwrap();
        RadialProblem::power_tail(&g, 1.0, 3.0, 1.5, 1.0, 1.0).unwrap()
    }

    #[test]
    fn zero_source_gives_zero() {
        let g = Grid::radial(10.0, 100).unwrap();
        let p = RadialProblem::new(GridFunction::zeros(&g), 1.5, 1.0, 3.0, 1.0).unwrap();
        let s = solve_semilinear_radial(&p, 1e-10).unwrap();
        assert!(s.u.is_zero());
        assert!(linfty_bound(&s.u, &p, 1.0, 1e-10).unwrap().passed);
    }

    #[test]
    fn hypothesis_guard() {
        let g = Grid::radial(10.0, 100).unwrap();
        assert!(RadialProblem::power_tail(&g, 1.0, 2.5, 1.5, 1.0, 1.0).is_err());
        assert!(RadialProblem::power_tail(&g, 1.0, 3.0, 2.0, 1.0, 1.0).is_err());
        assert!(RadialProblem::power_tail(&Grid::radial(10.0, 100).unwrap(), 1.0, 3.0, 1.5, 1.0, 20.0).is_err());
    }

    #[test]
    fn discrete_manufactured_solution_is_recovered() {
        let g = Grid::radial(20.0, 512).unwrap();
        let m = manufactured(&g, 1.0, 1.5).unwrap();
        let p = RadialProblem::new(m.discrete_source.clone(), 1.5, 1.0, 4.0, 1.0).unwrap();
        let s = solve_semilinear_radial(&p, 1e-10).unwrap();
        let err = s.u.sub(&m.exact).sup_norm();
        assert!(err <= 1e-9, "error {err}");
    }

    #[test]
    fn pure_powers_fit_exactly() {
        let p = problem(40.0, 800);
        let u = GridFunction::from_fn(p.grid(), |x| if x[0] > 0.0 { x[0].powi(-6) } else { 1.0 }).unwrap();
        let fit = decay_fit(&u, &p).unwrap();
        assert!((fit.slope + 6.0).abs() < 1e-10 && fit.power_like && fit.within_tolerance);
        let e = GridFunction::from_fn(p.grid(), |x| (-x[0]).exp()).unwrap();
        assert!(!decay_fit(&e, &p).unwrap().power_like);
    }

    #[test]
    fn comparison_with_itself() {
        let p = problem(20.0, 400);
        let s = solve_semilinear_radial(&p, 1e-10).unwrap();
        let r = comparison_against(&s.u, &s.u, &p);
        assert_eq!(r.t, Some(1.0));
    }

    #[test]
    fn beta0_value() {
        let p = problem(20.0, 400);
        let s = solve_semilinear_radial(&p, 1e-10).unwrap();
        let b = weak_decay_bootstrap(&s.u, &p).unwrap();
        assert!((b.beta0 - 8.0 / 7.0).abs() < 1e-15);
        let flat = RadialProblem { alpha: 1.0, ..p.clone() };
        assert!(weak_decay_bootstrap(&s.u, &flat).unwrap().nothing_to_prove);
    }
}
