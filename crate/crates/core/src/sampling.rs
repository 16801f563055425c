//! Seeded admissible samples for the randomized sweeps.

use std::sync::Arc;

use rand::Rng;

use crate::fields::{indicator, random_field, random_unit};
use crate::grid::{DomainKind, Grid, GridFunction};
use crate::optimal::{MaxExtremal, MinExtremal, ReciprocalPotential};
use crate::schrodinger::{self, Potential, SourceTerm};

/// Number of distinct maximization-side sample families.
pub const MAX_FAMILIES: usize = 5;

/// Number of distinct minimization-side sample families.
pub const MIN_FAMILIES: usize = 4;

fn normalize(u: &GridFunction, p: f64, target: f64) -> GridFunction {
    let n = u.lp_norm(p);
    u.scaled(target / n)
}

fn random_box(grid: &Arc<Grid>, rng: &mut impl Rng) -> GridFunction {
    let d = grid.kind().axes();
    loop {
        let mut lo = vec![0.0; d];
        let mut hi = vec![0.0; d];
        for a in 0..d {
            let w = rng.gen_range(0.2..0.8);
            lo[a] = rng.gen_range(0.0..(1.0 - w));
            hi[a] = lo[a] + w;
        }
        if grid.kind() == DomainKind::Radial3d {
            // shells reach the origin so the support meets the bulk of the source
            lo[0] = 0.0;
        }
        let e = indicator(grid, &lo, &hi);
        if !e.is_zero() {
            return e;
        }
    }
}

/// `|base · (1 + a ξ)|` normalized to unit `L^p` norm, with `a` uniform in `[0.05, 0.5]`.
fn perturb(base: &GridFunction, rng: &mut impl Rng, p: f64) -> GridFunction {
    let xi = random_field(base.grid(), rng, 6, false);
    let amp = rng.gen_range(0.05..0.5);
    normalize(&base.zip_map(&xi, |a, b| (a * (1.0 + amp * b)).abs()), p, 1.0)
}

/// Potential with `‖V‖_{L^p} ≤ 1` from family `family % MAX_FAMILIES`:
/// saturated random field, multiplicative perturbation of `V₀`, normalized indicator,
/// unsaturated perturbation, and a sign-changing field scaled until coercive.
pub fn max_sample(ex: &MaxExtremal, rng: &mut impl Rng, family: usize) -> Potential {
    let grid = ex.v0.grid();
    let p = ex.p;
    match family % MAX_FAMILIES {
        0 => Potential::new(normalize(&random_field(grid, rng, 6, false).map(f64::abs), p, 1.0)),
        1 => Potential::new(perturb(ex.potential.values(), rng, p)),
        2 => Potential::new(normalize(&random_box(grid, rng), p, 1.0)),
        3 => {
            let t = rng.gen_range(0.3..1.0);
            Potential::new(perturb(ex.potential.values(), rng, p).scaled(t))
        }
        _ => {
            let t = rng.gen_range(0.5..1.0);
            let mut v = Potential::new(normalize(&random_field(grid, rng, 6, false), p, t));
            let f = SourceTerm::constant(grid, 0.0);
            while !schrodinger::check_admissible(&v, &f).coercive {
                v = Potential::new(v.values().scaled(0.5));
            }
            v
        }
    }
}

/// Reciprocal potential with `‖W‖_{L^p} ≤ 1` from family `family % MIN_FAMILIES`:
/// saturated positive field, multiplicative perturbation of `W₀`, normalized indicator
/// (`V = +∞` off the set), and an unsaturated perturbation.
pub fn min_sample(ex: &MinExtremal, rng: &mut impl Rng, family: usize) -> ReciprocalPotential {
    let grid = ex.u0.grid();
    let p = ex.p;
    let values = match family % MIN_FAMILIES {
        0 => {
            let amp = rng.gen_range(0.2..1.5);
            normalize(&random_field(grid, rng, 6, false).map(|v| (amp * v).exp()), p, 1.0)
        }
        1 => perturb(ex.w0.values(), rng, p),
        2 => normalize(&random_box(grid, rng), p, 1.0),
        _ => {
            let t = rng.gen_range(0.5..1.0);
            perturb(ex.w0.values(), rng, p).scaled(t)
        }
    };
    ReciprocalPotential::new(values).expect("samples are nonnegative and finite")
}

/// Unit vectors of `L^q` and `L^{q'}`; odd indices give near-aligned pairs with `g ≈ |f|^{q−2}f`.
pub fn holder_pair(grid: &Arc<Grid>, rng: &mut impl Rng, q: f64, index: usize) -> (GridFunction, GridFunction) {
    let qc = q / (q - 1.0);
    let f = random_unit(grid, rng, q, true);
    let g = if index.is_multiple_of(2) {
        random_unit(grid, rng, qc, true)
    } else {
        let delta = rng.gen_range(0.0..0.5);
        let xi = random_unit(grid, rng, qc, true);
        let dual = f.map(|t| t.signum() * t.abs().powf(q - 1.0));
        let g = dual.axpy(delta, &xi);
        normalize(&g, qc, 1.0)
    };
    (f, g)
}

/// Two unit vectors of `L^q`; odd indices give nearby pairs.
pub fn unit_pair(grid: &Arc<Grid>, rng: &mut impl Rng, q: f64, index: usize) -> (GridFunction, GridFunction) {
    let h1 = random_unit(grid, rng, q, true);
    let h2 = if index.is_multiple_of(2) {
        random_unit(grid, rng, q, true)
    } else {
        let delta = rng.gen_range(0.0..0.5);
        normalize(&h1.axpy(delta, &random_unit(grid, rng, q, true)), q, 1.0)
    };
    (h1, h2)
}

/// Pair `(g, g₀)` of random fields with random amplitudes; odd indices give `g` close to `g₀`.
pub fn field_pair(grid: &Arc<Grid>, rng: &mut impl Rng, index: usize) -> (GridFunction, GridFunction) {
    let g0 = random_field(grid, rng, 6, true).scaled(rng.gen_range(0.1..10.0));
    let g = if index.is_multiple_of(2) {
        random_field(grid, rng, 6, true).scaled(rng.gen_range(0.1..10.0))
    } else {
        let delta = rng.gen_range(0.0..0.3);
        g0.axpy(delta * g0.sup_norm().max(1e-300), &random_field(grid, rng, 6, true))
    };
    (g, g0)
}

/// Random radial function: a smooth random field or a Gaussian profile of random width.
pub fn radial_function(grid: &Arc<Grid>, rng: &mut impl Rng, index: usize) -> GridFunction {
    if index.is_multiple_of(2) {
        random_field(grid, rng, 6, true)
    } else {
        let rt = grid.domain().truncation_radius().unwrap_or(1.0);
        let width = rng.gen_range(0.02..0.3) * rt;
        let amp = rng.gen_range(0.1..10.0);
        GridFunction::from_fn(grid, |x| amp * (-x[0] * x[0] / (2.0 * width * width)).exp())
            .expect("gaussian values are finite")
    }
}
