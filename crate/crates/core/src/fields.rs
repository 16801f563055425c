//! Named profiles and seeded random smooth fields.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DomainKind, Grid, GridFunction};

/// Closed-form profiles used for sources and potentials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Zero,
    Constant { value: f64 },
    /// `amplitude · Π sin(kπ t_a)` in normalized coordinates; `sin(kπt)/(kπt)` on radial grids.
    Sine {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one_u")]
        k: u32,
    },
    /// `amplitude · exp(−|x − c|²/(2 width²))`, centred in the domain or at the origin.
    Gaussian {
        #[serde(default = "one")]
        amplitude: f64,
        width: f64,
    },
    /// `C (1 + |x − c|²)^{−α/2}`; bounded by `C|x − c|^{−α}` beyond radius `r`.
    PowerTail {
        #[serde(rename = "C")]
        c: f64,
        alpha: f64,
        #[serde(rename = "R", default = "one")]
        r: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn one_u() -> u32 {
    1
}

impl Profile {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        match *self {
            Profile::Zero => Ok(()),
            Profile::Constant { value } if !value.is_finite() => bad("constant value must be finite"),
            Profile::Sine { amplitude, k } if !amplitude.is_finite() || k == 0 => {
                bad("sine needs a finite amplitude and k ≥ 1")
            }
            Profile::Gaussian { amplitude, width } if !amplitude.is_finite() || !(width > 0.0) => {
                bad("gaussian needs a finite amplitude and a positive width")
            }
            Profile::PowerTail { c, alpha, r } if !(c >= 0.0) || !(alpha > 0.0) || !(r > 0.0) => {
                bad("power_tail needs C ≥ 0, alpha > 0 and R > 0")
            }
            _ => Ok(()),
        }
    }

    pub fn sample(&self, grid: &Arc<Grid>) -> Result<GridFunction> {
        self.validate()?;
        let centre: Vec<f64> = match grid.kind() {
            DomainKind::Radial3d => vec![0.0],
            _ => grid.domain().bounds().iter().map(|&(a, b)| 0.5 * (a + b)).collect(),
        };
        let bounds = grid.domain().bounds().to_vec();
        let radial = grid.kind() == DomainKind::Radial3d;
        let dist2 = move |x: &[f64]| -> f64 {
            x.iter().zip(&centre).map(|(a, c)| (a - c) * (a - c)).sum()
        };
        match *self {
            Profile::Zero => Ok(GridFunction::zeros(grid)),
            Profile::Constant { value } => Ok(GridFunction::constant(grid, value)),
            Profile::Sine { amplitude, k } => GridFunction::from_fn(grid, |x| {
                let kf = k as f64 * PI;
                if radial {
                    let t = kf * x[0] / bounds[0].1;
                    amplitude * if t == 0.0 { 1.0 } else { t.sin() / t }
                } else {
                    amplitude
                        * x.iter()
                            .zip(&bounds)
                            .map(|(&xa, &(a, b))| (kf * (xa - a) / (b - a)).sin())
                            .product::<f64>()
                }
            }),
            Profile::Gaussian { amplitude, width } => GridFunction::from_fn(grid, |x| {
                amplitude * (-dist2(x) / (2.0 * width * width)).exp()
            }),
            Profile::PowerTail { c, alpha, .. } => {
                GridFunction::from_fn(grid, |x| c * (1.0 + dist2(x)).powf(-alpha / 2.0))
            }
        }
    }
}

/// Smooth random field `Σ_k a_k φ_k / |k|²` with coefficients uniform in `[−1, 1]`.
///
/// With `vanishing` the basis is `Π sin(k_a π t_a)`; otherwise it is `Π cos((k_a − 1) π t_a)`.
/// Radial grids always use `cos((k − ½) π ρ/R)`, which is even at the origin and zero at `R`.
pub fn random_field(grid: &Arc<Grid>, rng: &mut impl Rng, modes: usize, vanishing: bool) -> GridFunction {
    let modes = modes.max(1);
    let d = grid.kind().axes();
    let bounds = grid.domain().bounds().to_vec();
    let radial = grid.kind() == DomainKind::Radial3d;
    let count = modes.pow(d as u32);
    let mut terms = Vec::with_capacity(count);
    for m in 0..count {
        let mut ks = vec![0usize; d];
        let mut rem = m;
        for k in ks.iter_mut() {
            *k = rem % modes + 1;
            rem /= modes;
        }
        let size2: f64 = ks.iter().map(|&k| (k * k) as f64).sum();
        let amp = rng.gen_range(-1.0..=1.0) / size2;
        terms.push((ks, amp));
    }
    let values = (0..grid.len())
        .map(|i| {
            let x = grid.coordinates(i);
            let t: Vec<f64> = x.iter().zip(&bounds).map(|(&xa, &(a, b))| (xa - a) / (b - a)).collect();
            terms
                .iter()
                .map(|(ks, amp)| {
                    amp * ks
                        .iter()
                        .zip(&t)
                        .map(|(&k, &ta)| {
                            if radial {
                                ((k as f64 - 0.5) * PI * ta).cos()
                            } else if vanishing {
                                (k as f64 * PI * ta).sin()
                            } else {
                                ((k as f64 - 1.0) * PI * ta).cos()
                            }
                        })
                        .product::<f64>()
                })
                .sum()
        })
        .collect();
    GridFunction::from_raw(grid, values)
}

/// Random field rescaled to unit `L^s` norm.
pub fn random_unit(grid: &Arc<Grid>, rng: &mut impl Rng, s: f64, vanishing: bool) -> GridFunction {
    loop {
        let u = random_field(grid, rng, 6, vanishing);
        let n = u.lp_norm(s);
        if n > 1e-8 {
            return u.scaled(1.0 / n);
        }
    }
}

/// Strictly positive random field `exp(amplitude · field)`.
pub fn random_positive(grid: &Arc<Grid>, rng: &mut impl Rng, amplitude: f64) -> GridFunction {
    random_field(grid, rng, 6, false).map(|v| (amplitude * v).exp())
}

/// Indicator of an axis-aligned sub-box (or a shell `[r₀, r₁]` on radial grids) given in normalized coordinates.
pub fn indicator(grid: &Arc<Grid>, lo: &[f64], hi: &[f64]) -> GridFunction {
    let bounds = grid.domain().bounds().to_vec();
    let values = (0..grid.len())
        .map(|i| {
            let x = grid.coordinates(i);
            let inside = x.iter().zip(&bounds).enumerate().all(|(a, (&xa, &(l, h)))| {
                let t = (xa - l) / (h - l);
                t >= lo[a] && t <= hi[a]
            });
            if inside {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    GridFunction::from_raw(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn seeded_fields_repeat() {
        let g = Grid::unit_square(12).unwrap();
        let a = random_field(&g, &mut ChaCha8Rng::seed_from_u64(7), 5, true);
        let b = random_field(&g, &mut ChaCha8Rng::seed_from_u64(7), 5, true);
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn power_tail_is_below_its_envelope() {
        let g = Grid::radial(20.0, 200).unwrap();
        let f = Profile::PowerTail { c: 2.0, alpha: 3.0, r: 1.0 }.sample(&g).unwrap();
        for (v, rho) in f.values().iter().zip(g.radii()) {
            if rho >= 1.0 {
                assert!(*v <= 2.0 * rho.powf(-3.0) + 1e-15);
            }
        }
    }

    #[test]
    fn invalid_profiles_are_rejected() {
        assert!(Profile::Gaussian { amplitude: 1.0, width: 0.0 }.validate().is_err());
        assert!(Profile::Sine { amplitude: 1.0, k: 0 }.validate().is_err());
    }
}
