//! Extremal potentials from the convex surrogates `G_{p,f}` and `J_{p,f}`, plus their constants.
//!
//! `G(u) = ½‖∇u‖² + ½(∫|u|^m)^{2/m} − ⟨f,u⟩` with `m = 2p/(p−1)` yields the maximizer
//! `V₀ = (∫|v₀|^m)^{−1/p}|v₀|^{2/(p−1)}`; `J(u)` with `q = 2p/(p+1)` in place of `m` yields the
//! minimizer through its reciprocal `W₀ = (∫|u₀|^q)^{−1/p}|u₀|^{2/(p+1)}`.
//!
//! Both functionals are minimized by a line-searched descent whose direction is the gradient
//! preconditioned with the Hessian: the sparse part `K + diag` is factored incompletely and
//! the rank-one part of the norm term is applied by Sherman–Morrison.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::linalg::{self, Preconditioner};
use crate::schrodinger::{self, Potential, SourceTerm};

/// Smoothing levels for the `J` continuation. Stages below `10⁻⁶` resolve the free boundary of `u₀`
/// on large domains, where it otherwise biases `E_f(U₀)` by about `10⁻⁶`.
pub const DEFAULT_EPS_SCHEDULE: [f64; 7] = [1e-2, 1e-3, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12];

/// Nonnegative reciprocal `W = 1/V` of a min-side potential; `W = 0` encodes `V = +∞`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReciprocalPotential {
    values: GridFunction,
}

impl ReciprocalPotential {
    pub fn new(values: GridFunction) -> Result<Self> {
        if let Some(i) = values.values().iter().position(|&v| v < 0.0) {
            return Err(Error::Constraint(format!("reciprocal potential is negative at node {i}")));
        }
        Ok(Self { values })
    }

    /// Rescales a nonnegative profile to unit `L^p` norm.
    pub fn normalized(values: GridFunction, p: f64) -> Result<Self> {
        let n = values.lp_norm(p);
        if n == 0.0 {
            return Err(Error::Degenerate("zero reciprocal potential cannot be normalized".into()));
        }
        Self::new(values.scaled(1.0 / n))
    }

    pub fn values(&self) -> &GridFunction {
        &self.values
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.values.grid()
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        self.values.lp_norm(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DescentOptions {
    /// Target for the `W^{1,2}_0`-dual norm of the gradient.
    pub tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
    /// Relative residual for the inner linear solves.
    pub linear_tol: f64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 100_000, armijo: 1e-4, linear_tol: 1e-12 }
    }
}

#[derive(Clone, Debug)]
pub struct MaxExtremal {
    pub v0: GridFunction,
    pub potential: Potential,
    pub c1: f64,
    pub p: f64,
    pub g_value: f64,
    /// `E_f(V₀)` from an independent state solve.
    pub energy: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
}

#[derive(Clone, Debug)]
pub struct MinExtremal {
    pub u0: GridFunction,
    pub w0: ReciprocalPotential,
    pub c2: f64,
    pub p: f64,
    pub j_value: f64,
    /// `E_f(U₀)` from an independent state solve on the support of `W₀`.
    pub energy: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub eps_final: f64,
}

/// `½ (Σ w φ(u))^{2/r}` with `φ(t) = (t² + ε²)^{r/2}`.
#[derive(Clone, Copy, Debug)]
struct NormTerm {
    r: f64,
    eps: f64,
}

impl NormTerm {
    fn phi(&self, t: f64) -> f64 {
        if self.eps == 0.0 {
            t.abs().powf(self.r)
        } else {
            (t * t + self.eps * self.eps).powf(self.r / 2.0)
        }
    }

    /// `φ'(t)/r = t (t² + ε²)^{r/2 − 1}`.
    fn dphi_over_r(&self, t: f64) -> f64 {
        if self.eps == 0.0 {
            t.signum() * t.abs().powf(self.r - 1.0)
        } else {
            t * (t * t + self.eps * self.eps).powf(self.r / 2.0 - 1.0)
        }
    }

    /// `φ''(t)/r`.
    fn ddphi_over_r(&self, t: f64) -> f64 {
        if self.eps == 0.0 {
            (self.r - 1.0) * t.abs().powf(self.r - 2.0)
        } else {
            let s = t * t + self.eps * self.eps;
            s.powf(self.r / 2.0 - 2.0) * (self.eps * self.eps + (self.r - 1.0) * t * t)
        }
    }

    fn sum(&self, w: &[f64], u: &[f64]) -> f64 {
        u.iter().zip(w).map(|(&t, &wi)| wi * self.phi(t)).sum()
    }
}

struct Objective<'a> {
    grid: &'a Grid,
    load: Vec<f64>,
    term: NormTerm,
    poisson: Preconditioner,
    linear_tol: f64,
}

impl<'a> Objective<'a> {
    fn new(grid: &'a Grid, f: &SourceTerm, term: NormTerm, linear_tol: f64) -> Self {
        Self { grid, load: f.load(), term, poisson: Preconditioner::new(grid.stiffness()), linear_tol }
    }

    /// Value and a magnitude scale for roundoff slack.
    fn value(&self, u: &[f64]) -> (f64, f64) {
        let quad = 0.5 * self.grid.stiffness().quadratic_form(u);
        let s = self.term.sum(self.grid.weights(), u);
        let norm = 0.5 * s.powf(2.0 / self.term.r);
        let lin = linalg::dot(&self.load, u);
        (quad + norm - lin, quad.abs() + norm.abs() + lin.abs())
    }

    fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let w = self.grid.weights();
        let s = self.term.sum(w, u);
        let kappa = s.powf(2.0 / self.term.r - 1.0);
        let mut g = self.grid.stiffness().apply(u);
        for i in 0..u.len() {
            g[i] += kappa * w[i] * self.term.dphi_over_r(u[i]) - self.load[i];
        }
        g
    }

    fn poisson_solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let k = self.grid.stiffness();
        Ok(linalg::pcg(k, b, None, &self.poisson, self.linear_tol, linalg::cg_cap(b.len()))?.x)
    }

    /// `(gᵀ K⁻¹ g)^{1/2}`.
    fn dual_norm(&self, g: &[f64]) -> Result<f64> {
        let z = self.poisson_solve(g)?;
        Ok(linalg::dot(g, &z).max(0.0).sqrt())
    }

    /// `−H⁻¹ g` with `H = K + diag(D) + σ a aᵀ`.
    fn newton_direction(&self, u: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        let w = self.grid.weights();
        let r = self.term.r;
        let s = self.term.sum(w, u);
        let kappa = s.powf(2.0 / r - 1.0);
        let diag: Vec<f64> = u.iter().zip(w).map(|(&t, &wi)| kappa * wi * self.term.ddphi_over_r(t)).collect();
        let a: Vec<f64> = u.iter().zip(w).map(|(&t, &wi)| wi * r * self.term.dphi_over_r(t)).collect();
        let sigma = (1.0 / r) * (2.0 / r - 1.0) * s.powf(2.0 / r - 2.0);
        let p = self.grid.stiffness().shifted(&diag);
        let pc = Preconditioner::new(&p);
        let cap = linalg::cg_cap(u.len());
        let pg = linalg::pcg(&p, g, None, &pc, self.linear_tol, cap)?.x;
        let pa = linalg::pcg(&p, &a, None, &pc, self.linear_tol, cap)?.x;
        let denom = 1.0 + sigma * linalg::dot(&a, &pa);
        let mut d: Vec<f64> = pg.iter().map(|v| -v).collect();
        if denom > 1e-12 {
            let c = sigma * linalg::dot(&a, &pg) / denom;
            for i in 0..d.len() {
                d[i] += c * pa[i];
            }
        }
        Ok(d)
    }
}

struct DescentOutcome {
    u: Vec<f64>,
    iterations: usize,
    gradient_norm: f64,
}

fn descend(obj: &Objective, mut u: Vec<f64>, opts: &DescentOptions) -> Result<DescentOutcome> {
    let mut g = obj.gradient(&u);
    let mut gnorm = obj.dual_norm(&g)?;
    let (mut val, mut scale) = obj.value(&u);
    let mut it = 0;
    while gnorm > opts.tol {
        if it >= opts.max_iter {
            return Err(Error::NoConvergence { solver: "descent", iterations: it, residual: gnorm });
        }
        it += 1;
        let mut accepted = false;
        for attempt in 0..2 {
            let d = if attempt == 0 {
                obj.newton_direction(&u, &g)?
            } else {
                obj.poisson_solve(&g)?.iter().map(|v| -v).collect()
            };
            let slope = linalg::dot(&g, &d);
            if !(slope < 0.0) {
                continue;
            }
            let slack = 8.0 * f64::EPSILON * scale;
            let mut t = 1.0;
            while t > 1e-12 {
                let trial: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + t * b).collect();
                let (tv, ts) = obj.value(&trial);
                if tv.is_finite() && tv <= val + opts.armijo * t * slope + slack {
                    u = trial;
                    val = tv;
                    scale = ts;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if accepted {
                break;
            }
        }
        if !accepted {
            // the value no longer resolves descent; accept when the gradient is near target
            if gnorm <= 100.0 * opts.tol {
                break;
            }
            return Err(Error::NoConvergence { solver: "descent line search", iterations: it, residual: gnorm });
        }
        g = obj.gradient(&u);
        gnorm = obj.dual_norm(&g)?;
    }
    Ok(DescentOutcome { u, iterations: it, gradient_norm: gnorm })
}

fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("p must lie in (1, ∞), got {p}")))
    }
}

/// `G_{p,f}(u)`.
pub fn g_functional(p: f64, f: &SourceTerm, u: &GridFunction) -> f64 {
    let m = 2.0 * p / (p - 1.0);
    let grid = u.grid();
    let obj = Objective { grid, load: f.load(), term: NormTerm { r: m, eps: 0.0 }, poisson: Preconditioner::Jacobi(vec![]), linear_tol: 0.0 };
    obj.value(u.values()).0
}

/// `J_{p,f}(u)`.
pub fn j_functional(p: f64, f: &SourceTerm, u: &GridFunction) -> f64 {
    let q = 2.0 * p / (p + 1.0);
    let grid = u.grid();
    let obj = Objective { grid, load: f.load(), term: NormTerm { r: q, eps: 0.0 }, poisson: Preconditioner::Jacobi(vec![]), linear_tol: 0.0 };
    obj.value(u.values()).0
}

pub fn minimize_g(p: f64, f: &SourceTerm, opts: &DescentOptions) -> Result<MaxExtremal> {
    check_p(p)?;
    if f.is_zero() {
        return Err(Error::Degenerate("f ≡ 0 gives v₀ ≡ 0 and V₀ is undefined".into()));
    }
    let grid = f.grid();
    let m = 2.0 * p / (p - 1.0);
    let obj = Objective::new(grid, f, NormTerm { r: m, eps: 0.0 }, opts.linear_tol);
    let start = obj.poisson_solve(&obj.load)?;
    let out = descend(&obj, start, opts)?;
    let v0 = GridFunction::new(grid, out.u)?;
    let s = v0.lp_integral(m);
    let v_pot = v0.map(|t| s.powf(-1.0 / p) * t.abs().powf(2.0 / (p - 1.0)));
    let c1 = s.powf((p - 1.0) / (2.0 * p));
    let g_value = obj.value(v0.values()).0;
    let potential = Potential::new(v_pot);
    let energy = schrodinger::solve_state(&potential, f, schrodinger::DEFAULT_TOL)?.energy;
    if (energy - g_value).abs() > 10.0 * opts.tol {
        return Err(Error::NoConvergence {
            solver: "minimize_G energy consistency",
            iterations: out.iterations,
            residual: (energy - g_value).abs(),
        });
    }
    Ok(MaxExtremal { v0, potential, c1, p, g_value, energy, iterations: out.iterations, gradient_norm: out.gradient_norm })
}

pub fn minimize_j(p: f64, f: &SourceTerm, opts: &DescentOptions, eps_schedule: &[f64]) -> Result<MinExtremal> {
    check_p(p)?;
    if f.is_zero() {
        return Err(Error::Degenerate("f ≡ 0 gives u₀ ≡ 0 and U₀ is undefined".into()));
    }
    if eps_schedule.is_empty() || eps_schedule.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidParameter("smoothing schedule must be nonempty and positive".into()));
    }
    let grid = f.grid();
    let q = 2.0 * p / (p + 1.0);
    let mut u = Objective::new(grid, f, NormTerm { r: q, eps: eps_schedule[0] }, opts.linear_tol).poisson_solve(&f.load())?;
    let mut iterations = 0;
    let mut gradient_norm = f64::NAN;
    for (k, &eps) in eps_schedule.iter().enumerate() {
        let obj = Objective::new(grid, f, NormTerm { r: q, eps }, opts.linear_tol);
        let stage = DescentOptions {
            tol: if k + 1 == eps_schedule.len() { opts.tol } else { opts.tol.max(1e-6) },
            ..*opts
        };
        let out = descend(&obj, u, &stage)?;
        u = out.u;
        iterations += out.iterations;
        gradient_norm = out.gradient_norm;
    }
    let u0 = GridFunction::new(grid, u)?;
    let s = u0.lp_integral(q);
    let w0 = ReciprocalPotential::new(u0.map(|t| {
        if t == 0.0 {
            0.0
        } else {
            s.powf(-1.0 / p) * t.abs().powf(2.0 / (p + 1.0))
        }
    }))?;
    let c2 = s.powf(1.0 / q);
    let j_value = j_functional(p, f, &u0);
    let energy = schrodinger::solve_state_reciprocal(&w0, f, schrodinger::DEFAULT_TOL)?.energy;
    Ok(MinExtremal {
        u0,
        w0,
        c2,
        p,
        j_value,
        energy,
        iterations,
        gradient_norm,
        eps_final: *eps_schedule.last().unwrap(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MaxConstants {
    pub c1: f64,
    /// Exponent-2 constant for `‖|V|^{p−2}V − V₀^{p−1}‖_{L^{p'}}`, stated for `p ≥ 2`.
    pub sigma_m_prime: f64,
    /// Exponent-2 constant for `‖V − V₀‖_{L^p}`, stated for `1 < p < 2`.
    pub sigma_m_doubleprime: f64,
    /// Exponent-`p` constant for `‖V − V₀‖_{L^p}` when `p ≥ 2`.
    pub sigma_tilde_prime: f64,
    /// Exponent-`p'` constant for `‖|V|^{p−2}V − V₀^{p−1}‖_{L^{p'}}` when `1 < p < 2`.
    pub sigma_tilde_doubleprime: f64,
    /// Gap above which the trivial branch applies.
    pub threshold: f64,
}

pub fn constants_max(ex: &MaxExtremal) -> MaxConstants {
    max_constants(ex.p, ex.c1)
}

/// Constants of the maximal-potential stability estimates as functions of `p` and `c₁`.
pub fn max_constants(p: f64, c1: f64) -> MaxConstants {
    let pc = p / (p - 1.0);
    let c12 = c1 * c1;
    let c14 = c12 * c12;
    let sigma_m_prime = 0.25 * ((pc - 1.0) * c14 / (8.0 * c12 + 2.0 * (p - 1.0))).min(1.0).min(c12 / 4.0);
    let sigma_m_doubleprime = 0.25 * ((p - 1.0) * c14 / (8.0 * c12 + 2.0 * (p - 1.0))).min(1.0).min(c12 / 4.0);
    // gap ≥ (c₁²/2)(1 − ‖V‖) + (c₁²/(4r2^{r−1}))·remainder^r for gap ≤ c₁²/4, then the triangle
    // inequality with convexity of t ↦ t^r; beyond c₁²/4 the remainder is at most 2.
    let tilde = |r: f64| {
        let small = c12 / (2f64.powf(r - 1.0) * (2.0 + r * 2f64.powf(r + 1.0)));
        small.min(c12 / 4.0 / 2f64.powf(r))
    };
    MaxConstants {
        c1,
        sigma_m_prime,
        sigma_m_doubleprime,
        sigma_tilde_prime: tilde(p),
        sigma_tilde_doubleprime: tilde(pc),
        threshold: (c12 / 4.0).min(1.0),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MinConstants {
    pub p: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub c7: f64,
    pub c8: f64,
    pub c9: f64,
    pub sigma_m: f64,
    pub beta: f64,
    pub dual_norm: f64,
    /// Sobolev constant used for `c₇` and the exponent `(2*)'` used for `c₄`.
    pub sobolev_constant: f64,
    pub sobolev_exponent: f64,
}

pub fn constants_min(ex: &MinExtremal, f: &SourceTerm) -> Result<MinConstants> {
    let grid = ex.u0.grid();
    let emb = grid.sobolev_embedding();
    let p = ex.p;
    let dual = schrodinger::dual_norm(f)?;
    let s_conj = emb.exponent / (emb.exponent - 1.0);
    let c4 = ex.u0.map(|t| t.abs().powf((p - 1.0) / (p + 1.0))).lp_norm(s_conj);
    Ok(min_constants(p, ex.c2, c4, dual, emb.constant, emb.exponent))
}

/// Min-side constants as explicit functions of `p, c₂, c₄, ‖f‖_{W^{-1,2}}` and the Sobolev constant.
pub fn min_constants(p: f64, c2: f64, c4: f64, dual: f64, t: f64, sobolev_exponent: f64) -> MinConstants {
    let sq2 = 2f64.sqrt();
    let c3 = (sq2 / (sq2 + 3.0 * dual)).min(1.0 / (3.0 * sq2 * dual));
    let c22 = c2 * c2;
    let c5 = 1f64.min((c22 * c3 / 2.0).powi(2));
    let c6 = (1.0 + 2.0 / (p * (p + 1.0)) * (2.0 / ((p + 1.0) * c22)).powf(p)).powf(-1.0 / (p + 1.0))
        * (c22 / (p * 4f64.powf(p + 1.0))).powf(1.0 / (p + 1.0));
    let c7 = (t / (c3 * c3 * c22 * c22 + dual * dual)).sqrt() * c3 * c2 * c22 / 2.0;
    let k = c7 * c2.powf((p - 1.0) / (p + 1.0)) / c4;
    let c8 = (0.25 * ((p - 1.0) / p * k).powf((p - 1.0) / p)).powf(1.0 / (p + 1.0));
    let e = 2.0 * p * (p + 1.0) / (p - 1.0);
    let four = 4f64.powf(-p * (p + 1.0) / (p - 1.0));
    let sigma_m = ((c6 + c8) / (c6 * c8) + 4.0 / c22)
        .powf(-e)
        .min(c5 * four)
        .min((2.0 * k).powi(2) * four);
    let c9 = ((p - 1.0) / p * k).powi(2) * 0.5f64.powf(4.0 * p / (p - 1.0));
    MinConstants {
        p,
        c2,
        c3,
        c4,
        c5,
        c6,
        c7,
        c8,
        c9,
        sigma_m,
        beta: e,
        dual_norm: dual,
        sobolev_constant: t,
        sobolev_exponent,
    }
}

fn ln_gamma_half_integer(twice: u32) -> f64 {
    // ln Γ(twice/2) from the recurrences Γ(n) = (n−1)! and Γ(n + ½) = Γ(½)·Π (j − ½)
    if twice.is_multiple_of(2) {
        (1..twice / 2).map(|j| (j as f64).ln()).sum()
    } else {
        0.5 * std::f64::consts::PI.ln() + (1..=twice / 2).map(|j| (j as f64 - 0.5).ln()).sum::<f64>()
    }
}

/// Sharp Sobolev constant `T_N = inf ‖∇v‖² / ‖v‖²_{L^{2*}}`.
pub fn talenti_constant(n: u32) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("the Sobolev constant needs N ≥ 3, got {n}")));
    }
    let nf = n as f64;
    let pi = std::f64::consts::PI;
    let ratio = (ln_gamma_half_integer(n) - ln_gamma_half_integer(2 * n)) * 2.0 / nf;
    let first = pi * nf * (nf - 2.0) * ratio.exp();
    // N(N−2)/4 · |S^N|^{2/N} with |S^N| = 2π^{(N+1)/2}/Γ((N+1)/2)
    let ln_sphere = 2f64.ln() + 0.5 * (nf + 1.0) * pi.ln() - statrs::function::gamma::ln_gamma(0.5 * (nf + 1.0));
    let second = nf * (nf - 2.0) / 4.0 * (2.0 / nf * ln_sphere).exp();
    if (first - second).abs() > 1e-10 * first {
        return Err(Error::InvalidParameter(format!(
            "closed forms of the Sobolev constant disagree: {first} vs {second}"
        )));
    }
    Ok(first)
}

/// `|V| / max(1, ‖V‖_{L^p})`.
pub fn project_max_constraint(v: &Potential, p: f64) -> Result<Potential> {
    check_p(p)?;
    if v.values().is_zero() {
        return Err(Error::Degenerate("cannot project the zero potential".into()));
    }
    let n = v.lp_norm(p);
    let scale = 1.0 / n.max(1.0);
    Ok(Potential::new(v.values().map(|x| x.abs() * scale)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_constants_from_closed_forms() {
        let c = max_constants(2.0, 1.0);
        assert!((c.sigma_m_prime - 0.025).abs() < 1e-15);
        let c = max_constants(1.5, 1.0);
        assert!((c.sigma_m_doubleprime - 1.0 / 72.0).abs() < 1e-15);
        let c = max_constants(3.0, 1e-4);
        assert!(c.sigma_m_prime < 1e-15 && c.sigma_tilde_prime < 1e-8);
    }

    #[test]
    fn c3_and_beta() {
        let c = min_constants(3.0, 1.0, 1.0, 1.0, 5.0, 6.0);
        assert!((c.c3 - 1.0 / (3.0 * 2f64.sqrt())).abs() < 1e-15);
        assert_eq!(c.beta, 12.0);
        assert_eq!(min_constants(2.0, 1.0, 1.0, 1.0, 5.0, 6.0).beta, 12.0);
    }

    #[test]
    fn talenti_values() {
        let t3 = talenti_constant(3).unwrap();
        assert!((t3 - 3.0 * (std::f64::consts::PI / 2.0).powf(4.0 / 3.0)).abs() < 1e-12);
        let t4 = talenti_constant(4).unwrap();
        assert!((t4 - 8.0 * std::f64::consts::PI / 6f64.sqrt()).abs() < 1e-12);
        assert!(talenti_constant(2).is_err());
        let mut prev = 0.0;
        for n in 3..=10 {
            let t = talenti_constant(n).unwrap();
            assert!(t > prev);
            prev = t;
        }
    }

    #[test]
    fn projection() {
        let g = Grid::interval(20).unwrap();
        let two = Potential::constant(&g, 2.0);
        let v = project_max_constraint(&two, 2.0).unwrap();
        assert!((v.lp_norm(2.0) - 1.0).abs() < 1e-12);
        let expected = 1.0 / g.measure().sqrt();
        assert!(v.values().values().iter().all(|&x| (x - expected).abs() < 1e-12));
        let small = Potential::constant(&g, -0.5);
        let v = project_max_constraint(&small, 2.0).unwrap();
        assert!(v.values().values().iter().all(|&x| x == 0.5));
        assert!(project_max_constraint(&Potential::constant(&g, 0.0), 2.0).is_err());
    }

    #[test]
    fn zero_source_is_degenerate() {
        let g = Grid::interval(20).unwrap();
        let f = SourceTerm::constant(&g, 0.0);
        assert!(matches!(minimize_g(2.0, &f, &DescentOptions::default()), Err(Error::Degenerate(_))));
        assert!(matches!(
            minimize_j(2.0, &f, &DescentOptions::default(), &DEFAULT_EPS_SCHEDULE),
            Err(Error::Degenerate(_))
        ));
    }
}
