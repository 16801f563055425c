//! Acceptance criteria, one PASS/FAIL line each.

use std::error::Error as StdError;
use std::f64::consts::PI;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use potstab::fields::{random_field, random_positive, random_unit};
use potstab::grid::{Grid, GridFunction};
use potstab::inequalities::{self, HolderForm};
use potstab::optimal::{self, DescentOptions, DEFAULT_EPS_SCHEDULE};
use potstab::radial::{self, RadialProblem};
use potstab::sampling;
use potstab::schrodinger::{self, Potential, SourceTerm};
use potstab::stability::{self, Extremal, MaxDistance};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Check = Result<(bool, String), Box<dyn StdError + Send + Sync>>;

const STABILITY_MARGIN: f64 = -1e-8;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn criterion(n: usize, title: &str, budget: Option<Duration>, body: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let result = body();
    let elapsed = start.elapsed();
    let (passed, detail) = match result {
        Ok((ok, detail)) => match budget {
            Some(b) if elapsed > b => (false, format!("{detail}; over the {:.0} s budget", b.as_secs_f64())),
            _ => (ok, detail),
        },
        Err(e) => (false, format!("error: {e}")),
    };
    let tag = if passed { "PASS" } else { "FAIL" };
    println!("criterion {n:>2} [{tag}] {title}: {detail} ({:.2} s)", elapsed.as_secs_f64());
    passed
}

fn sine_source(g: &Arc<Grid>) -> SourceTerm {
    SourceTerm::new(GridFunction::from_fn(g, |x| (PI * x[0]).sin()).unwrap())
}

fn power_tail_source(g: &Arc<Grid>) -> SourceTerm {
    SourceTerm::new(GridFunction::from_fn(g, |x| (1.0 + x[0] * x[0]).powf(-1.5)).unwrap())
}

fn energy_oracle() -> Check {
    let g = Grid::interval(4096)?;
    let f = SourceTerm::constant(&g, 1.0);
    let e = schrodinger::solve_state(&Potential::constant(&g, 0.0), &f, 1e-12)?.energy;
    let err = (e + 1.0 / 24.0).abs();
    Ok((err <= 1e-5, format!("E = {e:.10}, error {err:.2e}")))
}

fn eigenfunction_oracle() -> Check {
    let g = Grid::interval(4096)?;
    let f = sine_source(&g);
    let mut worst: f64 = 0.0;
    for c in [0.0, 1.0, 10.0] {
        let e = schrodinger::solve_state(&Potential::constant(&g, c), &f, 1e-12)?.energy;
        let exact = -1.0 / (4.0 * (PI * PI + c));
        worst = worst.max(((e - exact) / exact).abs());
    }
    Ok((worst <= 1e-4, format!("worst relative error {worst:.2e} over c in {{0, 1, 10}}")))
}

fn test_grids() -> Result<Vec<Arc<Grid>>, potstab::Error> {
    Ok(vec![Grid::interval(512)?, Grid::unit_square(48)?])
}

fn extremal_consistency() -> Check {
    let mut worst_gap: f64 = 0.0;
    let mut worst_dist: f64 = 0.0;
    let mut slowest: f64 = 0.0;
    for g in test_grids()? {
        let f = SourceTerm::constant(&g, 1.0);
        for p in [1.5, 2.0, 3.0] {
            let start = Instant::now();
            let ex = optimal::minimize_g(p, &f, &DescentOptions::default())?;
            let state = schrodinger::solve_state(&ex.potential, &f, 1e-12)?;
            slowest = slowest.max(start.elapsed().as_secs_f64());
            worst_gap = worst_gap.max((state.energy - ex.g_value).abs());
            worst_dist = worst_dist.max(state.state.sub(&ex.v0).h1_seminorm());
        }
    }
    let ok = worst_gap <= 1e-6 && worst_dist <= 1e-5 && slowest < 30.0;
    Ok((ok, format!("|E - G| <= {worst_gap:.2e}, state distance <= {worst_dist:.2e}, slowest case {slowest:.2} s")))
}

fn holder_saturation() -> Check {
    let mut worst: f64 = 0.0;
    for g in test_grids()? {
        let f = SourceTerm::constant(&g, 1.0);
        for p in [1.5, 2.0, 3.0] {
            let ex = optimal::minimize_g(p, &f, &DescentOptions::default())?;
            let m = 2.0 * p / (p - 1.0);
            let lhs = ex.potential.values().zip_map(&ex.v0, |v, u| v * u).inner(&ex.v0)?;
            let rhs = ex.v0.lp_integral(m).powf((p - 1.0) / p);
            worst = worst.max((lhs - rhs).abs());

            let mx = optimal::minimize_j(p, &f, &DescentOptions::default(), &DEFAULT_EPS_SCHEDULE)?;
            let mq = 2.0 * p / (p + 1.0);
            let u0 = &mx.u0;
            let lhs = mx
                .w0
                .values()
                .zip_map(u0, |w, u| if w > 0.0 { u * u / w } else { 0.0 })
                .inner(&GridFunction::constant(u0.grid(), 1.0))?;
            let rhs = u0.lp_integral(mq).powf((p + 1.0) / p);
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok((worst <= 1e-6, format!("worst saturation defect {worst:.2e} on both sides")))
}

fn max_sweep() -> Check {
    let mut rows = 0;
    let mut worst = f64::INFINITY;
    for (gi, g) in [Grid::interval(256)?, Grid::unit_square(32)?].into_iter().enumerate() {
        let f = SourceTerm::constant(&g, 1.0);
        for (pi, p) in [1.5, 2.0, 3.0].into_iter().enumerate() {
            let ex = optimal::minimize_g(p, &f, &DescentOptions::default())?;
            let margins = (0..100u64)
                .into_par_iter()
                .map(|s| {
                    let mut r = rng(5, (gi * 1000 + pi * 100) as u64 + s);
                    let v = sampling::max_sample(&ex, &mut r, s as usize);
                    let a = stability::verify_max_stability(&v, &ex, &f, MaxDistance::quadratic(p))?;
                    let b = stability::verify_max_stability(&v, &ex, &f, MaxDistance::power(p))?;
                    Ok(a.margin.min(b.margin))
                })
                .collect::<Result<Vec<f64>, potstab::Error>>()?;
            rows += 2 * margins.len();
            worst = margins.into_iter().fold(worst, f64::min);
        }
    }
    Ok((worst >= STABILITY_MARGIN, format!("{rows} reports on interval and box2d, worst margin {worst:.3e}")))
}

fn min_sweep() -> Check {
    let mut rows = 0;
    let mut worst = f64::INFINITY;
    let cases = [
        (Grid::interval(256)?, false),
        (Grid::unit_square(32)?, false),
        (Grid::radial(20.0, 400)?, true),
    ];
    for (gi, (g, tail)) in cases.into_iter().enumerate() {
        let f = if tail { power_tail_source(&g) } else { SourceTerm::constant(&g, 1.0) };
        for (pi, p) in [1.5, 2.0, 3.0].into_iter().enumerate() {
            let ex = optimal::minimize_j(p, &f, &DescentOptions::default(), &DEFAULT_EPS_SCHEDULE)?;
            let c = optimal::constants_min(&ex, &f)?;
            let margins = (0..100u64)
                .into_par_iter()
                .map(|s| {
                    let mut r = rng(6, (gi * 1000 + pi * 100) as u64 + s);
                    let w = sampling::min_sample(&ex, &mut r, s as usize);
                    Ok(stability::verify_min_stability(&w, &ex, &c, &f)?.margin)
                })
                .collect::<Result<Vec<f64>, potstab::Error>>()?;
            rows += margins.len();
            worst = margins.into_iter().fold(worst, f64::min);
        }
    }
    Ok((worst >= STABILITY_MARGIN, format!("{rows} reports on interval, box2d and radial3d, worst margin {worst:.3e}")))
}

fn quadratic_detachment() -> Check {
    let eps: Vec<f64> = [1.0, 1.5, 2.0, 2.5, 3.0].iter().map(|k| 10f64.powf(-k)).collect();
    let mut slopes = Vec::new();
    for (gi, g) in [Grid::interval(256)?, Grid::unit_square(32)?].into_iter().enumerate() {
        let f = SourceTerm::constant(&g, 1.0);
        let ex = optimal::minimize_g(2.0, &f, &DescentOptions::default())?;
        for d in 0..5u64 {
            let mut r = rng(7, gi as u64 * 10 + d);
            let xi = random_field(&g, &mut r, 6, false);
            let direction = ex.potential.values().zip_map(&xi, |v, x| v * x);
            let probe = stability::scaling_probe(&direction, Extremal::Max(&ex), &f, &eps)?;
            slopes.push(probe.slope.unwrap_or(f64::NAN));
        }
    }
    let ok = slopes.iter().all(|s| (1.8..=2.2).contains(s));
    let lo = slopes.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((ok, format!("{} directions, slopes in [{lo:.3}, {hi:.3}]", slopes.len())))
}

fn quantitative_holder() -> Check {
    let g = Grid::interval(256)?;
    let mut worst = f64::INFINITY;
    let mut equality: f64 = 0.0;
    for (qi, q) in [2.0, 3.0, 5.0].into_iter().enumerate() {
        let margins = (0..1000u64)
            .into_par_iter()
            .map(|s| {
                let mut r = rng(8, qi as u64 * 10_000 + s);
                let (a, b) = sampling::holder_pair(&g, &mut r, q, s as usize);
                let one = inequalities::quantitative_holder(&a, &b, q, HolderForm::DualSide)?;
                let two = inequalities::quantitative_holder(&a, &b, q, HolderForm::PrimalSide)?;
                Ok(one.margin.min(two.margin))
            })
            .collect::<Result<Vec<f64>, potstab::Error>>()?;
        worst = margins.into_iter().fold(worst, f64::min);
        let mut r = rng(8, 99_999 - qi as u64);
        let f = random_unit(&g, &mut r, q, true);
        let dual = f.map(|t| t.signum() * t.abs().powf(q - 1.0));
        for form in [HolderForm::DualSide, HolderForm::PrimalSide] {
            equality = equality.max(inequalities::quantitative_holder(&f, &dual, q, form)?.remainder);
        }
    }
    let ok = worst >= -1e-8 && equality <= 1e-10;
    Ok((ok, format!("6000 reports, worst margin {worst:.3e}, equality remainder {equality:.2e}")))
}

fn clarkson() -> Check {
    let g = Grid::interval(256)?;
    let mut failed = 0;
    let mut equality: f64 = 0.0;
    for (qi, q) in [1.25, 1.5, 2.0].into_iter().enumerate() {
        let passed = (0..1000u64)
            .into_par_iter()
            .map(|s| {
                let mut r = rng(9, qi as u64 * 10_000 + s);
                let (a, b) = sampling::unit_pair(&g, &mut r, q, s as usize);
                Ok(inequalities::clarkson_check(&a, &b, q)?.passed)
            })
            .collect::<Result<Vec<bool>, potstab::Error>>()?;
        failed += passed.iter().filter(|p| !**p).count();
        let mut r = rng(9, 99_999 - qi as u64);
        let h = random_unit(&g, &mut r, q, true);
        let same = inequalities::clarkson_check(&h, &h, q)?;
        let opposite = inequalities::clarkson_check(&h, &h.scaled(-1.0), q)?;
        equality = equality.max(same.deficit.abs()).max(same.remainder).max(opposite.margin.abs());
    }
    let ok = failed == 0 && equality <= 1e-10;
    Ok((ok, format!("3000 pairs, {failed} failures, equality cases exact to {equality:.2e}")))
}

fn strauss() -> Check {
    let g = Grid::radial(20.0, 400)?;
    let mut worst: f64 = 0.0;
    let mut failed = 0;
    for (qi, q) in [1.0, 2.0, 4.0].into_iter().enumerate() {
        for s in 0..100u64 {
            let mut r = rng(10, qi as u64 * 1000 + s);
            let u = sampling::radial_function(&g, &mut r, s as usize);
            let rep = inequalities::strauss_bound(&u, q)?;
            worst = worst.max(rep.remainder);
            failed += usize::from(!rep.passed);
        }
    }
    let s23 = inequalities::strauss_constant(2.0, 3);
    let const_err = (s23 - 1.0 / (4.0 * PI * PI)).abs();
    let ok = failed == 0 && const_err <= 1e-10;
    Ok((ok, format!("300 functions, worst ratio {worst:.3}, {failed} failures, S_2,3 error {const_err:.1e}")))
}

fn decay() -> Check {
    let tol = 1e-10;
    let g = Grid::radial(40.0, 4096)?;
    let prob = RadialProblem::power_tail(&g, 1.0, 3.0, 1.5, 1.0, 1.0)?;
    let u = radial::solve_semilinear_radial(&prob, tol)?.u;
    let fit = radial::decay_fit(&u, &prob)?;
    let boot = radial::weak_decay_bootstrap(&u, &prob)?;

    let mg = Grid::radial(20.0, 4096)?;
    let m = radial::manufactured(&mg, 1.0, 1.5)?;
    let mprob = RadialProblem::new(m.source.clone(), 1.5, 1.0, 3.0, 1.0)?;
    let err = radial::solve_semilinear_radial(&mprob, tol)?.u.sub(&m.exact).sup_norm();

    let ok = fit.within_tolerance && boot.verified_steps >= 3 && err <= 1e-4;
    Ok((
        ok,
        format!(
            "slope {:.3} (expected {:.1}), manufactured error {err:.2e}, {} bootstrap steps verified",
            fit.slope, fit.expected, boot.verified_steps
        ),
    ))
}

fn structure() -> Check {
    let g = Grid::interval(128)?;
    let f = SourceTerm::new(random_positive(&g, &mut rng(11, 0), 1.0));
    let results = (0..200u64)
        .into_par_iter()
        .map(|s| {
            let mut r = rng(11, 1 + s);
            let v1 = Potential::new(random_positive(&g, &mut r, 1.0).scaled(r.gen_range(0.0..10.0)));
            let bump = random_positive(&g, &mut r, 1.0).scaled(r.gen_range(0.0..10.0));
            let v2 = Potential::new(v1.values().add(&bump));
            let v3 = Potential::new(random_field(&g, &mut r, 6, false).scaled(r.gen_range(0.0..10.0)));
            let e = |v: &Potential| schrodinger::solve_state(v, &f, 1e-12).map(|s| s.energy);
            let (e1, e2, e3) = (e(&v1)?, e(&v2)?, e(&v3)?);
            let mid = Potential::new(v1.values().add(v3.values()).scaled(0.5));
            let monotone = e1 <= e2 + 1e-12;
            let concave = e(&mid)? >= 0.5 * (e1 + e3) - 1e-12;
            Ok(monotone && concave)
        })
        .collect::<Result<Vec<bool>, potstab::Error>>()?;
    let structural = results.iter().filter(|b| !**b).count();

    let mut ibp: f64 = 0.0;
    for (gi, grid) in [Grid::interval(200)?, Grid::unit_square(20)?, Grid::radial(10.0, 300)?].iter().enumerate() {
        for s in 0..20u64 {
            let mut r = rng(12, gi as u64 * 100 + s);
            let u = random_field(grid, &mut r, 6, true);
            let v = random_field(grid, &mut r, 6, true);
            let lhs = u.apply_laplacian().inner(&v)?;
            let ku = grid.stiffness().apply(u.values());
            let rhs: f64 = ku.iter().zip(v.values()).map(|(a, b)| a * b).sum();
            ibp = ibp.max((lhs - rhs).abs() / rhs.abs().max(1.0));
        }
    }

    let dir = tempfile::tempdir()?;
    let cfg = dir.path().join("verify.json");
    std::fs::write(&cfg, r#"{"domain": {"kind": "box2d", "resolution": 16}, "sweep": {"samples": 4, "seed": 3}}"#)?;
    let mut outputs = Vec::new();
    for (k, threads) in ["1", "4"].iter().enumerate() {
        let out = dir.path().join(format!("run{k}"));
        let status = Command::new(env!("CARGO_BIN_EXE_potstab"))
            .args(["verify", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .args(["--threads", threads])
            .status()?;
        outputs.push((status.success(), std::fs::read(out.join("verify.csv"))?, std::fs::read(out.join("verify.json"))?));
    }
    let identical = outputs[0] == outputs[1] && outputs[0].0;

    let ok = structural == 0 && ibp <= 1e-12 && identical;
    Ok((
        ok,
        format!(
            "{structural} of 200 pairs violate monotonicity or concavity, integration by parts to {ibp:.1e}, reruns {}",
            if identical { "byte-identical" } else { "differ" }
        ),
    ))
}

fn main() {
    let minute = Duration::from_secs(60);
    let results = [
        criterion(1, "closed-form energy", Some(Duration::from_secs(1)), energy_oracle),
        criterion(2, "eigenfunction energy", None, eigenfunction_oracle),
        criterion(3, "extremal consistency", None, extremal_consistency),
        criterion(4, "Hölder saturation", None, holder_saturation),
        criterion(5, "maximal-potential stability sweep", Some(5 * minute), max_sweep),
        criterion(6, "minimal-potential stability sweep", Some(10 * minute), min_sweep),
        criterion(7, "quadratic detachment", None, quadratic_detachment),
        criterion(8, "quantitative Hölder", None, quantitative_holder),
        criterion(9, "Clarkson", None, clarkson),
        criterion(10, "Strauss", None, strauss),
        criterion(11, "radial decay", Some(2 * minute), decay),
        criterion(12, "structural properties", None, structure),
    ];
    let failed = results.iter().filter(|r| !**r).count();
    println!("acceptance: {} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
