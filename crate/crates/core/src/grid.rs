//! Uniform grids, grid functions, quadrature and the discrete Dirichlet Laplacian.
//!
//! Every grid carries node weights `w` and a symmetric stiffness matrix `K` with
//! `uᵀKu = Σ_edges c_e (Δ_e u)²`. The negative Laplacian is `K u / w`, so discrete
//! integration by parts holds exactly in the weighted inner product.
//!
//! Tensor grids (interval, box2d, box3d) store interior nodes only; boundary values
//! are zero. The radial grid stores nodes `ρ_i = i·h`, `i = 0..n`, with `h = R/n`;
//! the node at `ρ = R` is the Dirichlet boundary. Radial weights are the volumes of
//! the shells `[ρ_i − h/2, ρ_i + h/2]` and edge coefficients are `4π ρ_{i+1/2}² / h`,
//! which gives zero flux through the origin.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CsrMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Interval,
    Box2d,
    Box3d,
    Radial3d,
}

impl DomainKind {
    pub fn name(self) -> &'static str {
        match self {
            DomainKind::Interval => "interval",
            DomainKind::Box2d => "box2d",
            DomainKind::Box3d => "box3d",
            DomainKind::Radial3d => "radial3d",
        }
    }

    pub fn axes(self) -> usize {
        match self {
            DomainKind::Interval | DomainKind::Radial3d => 1,
            DomainKind::Box2d => 2,
            DomainKind::Box3d => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    kind: DomainKind,
    bounds: Vec<(f64, f64)>,
}

impl Domain {
    pub fn new(kind: DomainKind, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.len() != kind.axes() {
            return Err(Error::InvalidDomain(format!(
                "{} needs {} axis extents, got {}",
                kind.name(),
                kind.axes(),
                bounds.len()
            )));
        }
        for &(lo, hi) in &bounds {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::InvalidDomain(format!("extent ({lo}, {hi}) is not positive")));
            }
        }
        if kind == DomainKind::Radial3d && bounds[0].0 != 0.0 {
            return Err(Error::InvalidDomain("radial domain must start at the origin".into()));
        }
        Ok(Self { kind, bounds })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(DomainKind::Interval, vec![(lo, hi)])
    }

    pub fn box2d(x: (f64, f64), y: (f64, f64)) -> Result<Self> {
        Self::new(DomainKind::Box2d, vec![x, y])
    }

    pub fn box3d(x: (f64, f64), y: (f64, f64), z: (f64, f64)) -> Result<Self> {
        Self::new(DomainKind::Box3d, vec![x, y, z])
    }

    /// Ball of radius `truncation_radius` in three dimensions, radial functions only.
    pub fn radial3d(truncation_radius: f64) -> Result<Self> {
        if !(truncation_radius > 0.0) {
            return Err(Error::InvalidDomain("truncation radius must be positive".into()));
        }
        Self::new(DomainKind::Radial3d, vec![(0.0, truncation_radius)])
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn truncation_radius(&self) -> Option<f64> {
        (self.kind == DomainKind::Radial3d).then(|| self.bounds[0].1)
    }
}

/// Constant `T` in `‖u‖²_{L^6} ≤ ‖∇u‖² / T` used wherever a Sobolev embedding enters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SobolevEmbedding {
    pub exponent: f64,
    pub constant: f64,
    /// True when the constant is the sharp continuum value rather than a discrete bound.
    pub continuum: bool,
}

#[derive(Debug)]
pub struct Grid {
    domain: Domain,
    points: Vec<usize>,
    spacing: Vec<f64>,
    weights: Vec<f64>,
    stiffness: CsrMatrix,
    // (node a, node b or None for a boundary edge, coefficient)
    edges: Vec<(usize, Option<usize>, f64)>,
    ground: OnceLock<f64>,
    embedding: OnceLock<SobolevEmbedding>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.domain == other.domain && self.points == other.points
    }
}

pub const MIN_POINTS: usize = 8;

impl Grid {
    /// `points` holds interior nodes per axis; on radial3d it is the node count including the origin.
    pub fn new(domain: Domain, points: &[usize]) -> Result<Arc<Self>> {
        if points.len() != domain.kind.axes() {
            return Err(Error::InvalidDomain(format!(
                "{} needs {} resolutions, got {}",
                domain.kind.name(),
                domain.kind.axes(),
                points.len()
            )));
        }
        if let Some(&n) = points.iter().find(|&&n| n < MIN_POINTS) {
            return Err(Error::InvalidDomain(format!(
                "{n} points per axis, at least {MIN_POINTS} required"
            )));
        }
        let (spacing, weights, edges) = match domain.kind {
            DomainKind::Radial3d => radial_layout(domain.bounds[0].1, points[0]),
            _ => tensor_layout(&domain.bounds, points),
        };
        let n = weights.len();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(a, b, c) in &edges {
            rows[a].push((a, c));
            if let Some(b) = b {
                rows[b].push((b, c));
                rows[a].push((b, -c));
                rows[b].push((a, -c));
            }
        }
        let stiffness = CsrMatrix::from_rows(rows);
        Ok(Arc::new(Self {
            domain,
            points: points.to_vec(),
            spacing,
            weights,
            stiffness,
            edges,
            ground: OnceLock::new(),
            embedding: OnceLock::new(),
        }))
    }

    pub fn interval(n: usize) -> Result<Arc<Self>> {
        Self::new(Domain::interval(0.0, 1.0)?, &[n])
    }

    pub fn unit_square(n: usize) -> Result<Arc<Self>> {
        Self::new(Domain::box2d((0.0, 1.0), (0.0, 1.0))?, &[n, n])
    }

    pub fn radial(truncation_radius: f64, n: usize) -> Result<Arc<Self>> {
        Self::new(Domain::radial3d(truncation_radius)?, &[n])
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn kind(&self) -> DomainKind {
        self.domain.kind
    }

    pub fn points_per_axis(&self) -> &[usize] {
        &self.points
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Symmetric matrix `K` with `h1_seminorm(u)² = uᵀKu`.
    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Spatial dimension of the underlying continuum problem.
    pub fn dimension(&self) -> usize {
        match self.domain.kind {
            DomainKind::Radial3d => 3,
            k => k.axes(),
        }
    }

    /// Coordinates of node `i`: Cartesian for tensor grids, `[ρ]` for radial grids.
    pub fn coordinates(&self, i: usize) -> Vec<f64> {
        match self.domain.kind {
            DomainKind::Radial3d => vec![i as f64 * self.spacing[0]],
            _ => {
                let mut rem = i;
                let mut x = vec![0.0; self.points.len()];
                for a in (0..self.points.len()).rev() {
                    let ia = rem % self.points[a];
                    rem /= self.points[a];
                    x[a] = self.domain.bounds[a].0 + (ia + 1) as f64 * self.spacing[a];
                }
                x
            }
        }
    }

    /// Radius of every node (radial grids) or distance from the domain centre.
    pub fn radii(&self) -> Vec<f64> {
        match self.domain.kind {
            DomainKind::Radial3d => (0..self.len()).map(|i| i as f64 * self.spacing[0]).collect(),
            _ => {
                let centre: Vec<f64> = self.domain.bounds.iter().map(|&(a, b)| 0.5 * (a + b)).collect();
                (0..self.len())
                    .map(|i| {
                        let x = self.coordinates(i);
                        x.iter().zip(&centre).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt()
                    })
                    .collect()
            }
        }
    }

    /// Smallest eigenvalue of the discrete Dirichlet Laplacian.
    pub fn poisson_ground_value(&self) -> f64 {
        *self.ground.get_or_init(|| match self.domain.kind {
            DomainKind::Radial3d => smallest_generalized_eigenvalue(&self.stiffness, &self.weights),
            _ => self
                .spacing
                .iter()
                .zip(&self.domain.bounds)
                .map(|(&h, &(a, b))| {
                    let s = (PI * h / (2.0 * (b - a))).sin();
                    4.0 * s * s / (h * h)
                })
                .sum(),
        })
    }

    /// Embedding constant into `L^6`.
    ///
    /// Radial grids use the sharp three-dimensional constant. Tensor grids use the
    /// discrete bound `‖u‖_∞² ≤ G·‖∇u‖²` with `G = max_i (K⁻¹)_ii`, combined with
    /// `‖u‖²_{L²} ≤ ‖∇u‖²/λ₁`: this yields `T = (λ₁/G²)^{1/3}`, valid on the grid itself.
    pub fn sobolev_embedding(&self) -> SobolevEmbedding {
        *self.embedding.get_or_init(|| match self.domain.kind {
            DomainKind::Radial3d => SobolevEmbedding {
                exponent: 6.0,
                constant: crate::optimal::talenti_constant(3).expect("N = 3 is valid"),
                continuum: true,
            },
            _ => {
                let g = self.green_diagonal_max();
                SobolevEmbedding {
                    exponent: 6.0,
                    constant: (self.poisson_ground_value() / (g * g)).cbrt(),
                    continuum: false,
                }
            }
        })
    }

    fn green_diagonal_max(&self) -> f64 {
        // The diagonal of the Green matrix peaks at the centre of a box; a few
        // off-centre probes guard against even resolutions.
        let centre: Vec<usize> = self.points.iter().map(|&n| n / 2).collect();
        let mut probes = vec![centre.clone()];
        for a in 0..self.points.len() {
            let mut c = centre.clone();
            c[a] = c[a].saturating_sub(1);
            probes.push(c);
        }
        let pc = linalg::Preconditioner::new(&self.stiffness);
        probes
            .iter()
            .map(|c| {
                let flat = c.iter().zip(&self.points).fold(0usize, |acc, (&i, &n)| acc * n + i);
                let mut e = vec![0.0; self.len()];
                e[flat] = 1.0;
                let out = linalg::pcg(&self.stiffness, &e, None, &pc, 1e-12, linalg::cg_cap(self.len()))
                    .expect("stiffness matrix is positive definite");
                out.x[flat]
            })
            .fold(0.0, f64::max)
    }
}

/// Spacing, node weights and stiffness edges `(i, j, k_ij)`; `j = None` couples to the boundary.
type Layout = (Vec<f64>, Vec<f64>, Vec<(usize, Option<usize>, f64)>);

fn tensor_layout(bounds: &[(f64, f64)], points: &[usize]) -> Layout {
    let spacing: Vec<f64> = bounds
        .iter()
        .zip(points)
        .map(|(&(a, b), &n)| (b - a) / (n + 1) as f64)
        .collect();
    let cell: f64 = spacing.iter().product();
    let total: usize = points.iter().product();
    let d = points.len();
    let mut strides = vec![1usize; d];
    for a in (0..d.saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * points[a + 1];
    }
    let mut edges = Vec::new();
    for i in 0..total {
        for a in 0..d {
            let ia = (i / strides[a]) % points[a];
            let c = cell / (spacing[a] * spacing[a]);
            if ia == 0 {
                edges.push((i, None, c));
            }
            if ia + 1 < points[a] {
                edges.push((i, Some(i + strides[a]), c));
            } else {
                edges.push((i, None, c));
            }
        }
    }
    (spacing, vec![cell; total], edges)
}

fn radial_layout(radius: f64, n: usize) -> Layout {
    let h = radius / n as f64;
    let shell = |r: f64| 4.0 * PI / 3.0 * r * r * r;
    let weights: Vec<f64> = (0..n)
        .map(|i| {
            let rho = i as f64 * h;
            if i == 0 {
                shell(0.5 * h)
            } else {
                shell(rho + 0.5 * h) - shell(rho - 0.5 * h)
            }
        })
        .collect();
    let edges = (0..n)
        .map(|i| {
            let mid = (i as f64 + 0.5) * h;
            let c = 4.0 * PI * mid * mid / h;
            (i, (i + 1 < n).then_some(i + 1), c)
        })
        .collect();
    (vec![h], weights, edges)
}

/// Smallest `λ` with `K x = λ W x` by inverse iteration.
pub(crate) fn smallest_generalized_eigenvalue(k: &CsrMatrix, w: &[f64]) -> f64 {
    inverse_iteration(k, w, 0.0).0
}

/// Inverse iteration on `(K + W·shift)` returning the smallest generalized eigenvalue of `(K, W)`
/// and the iteration count. `shift` must make the shifted matrix positive definite.
pub(crate) fn inverse_iteration(k: &CsrMatrix, w: &[f64], shift: f64) -> (f64, usize) {
    let n = w.len();
    let shifted = if shift != 0.0 {
        k.shifted(&w.iter().map(|&wi| wi * shift).collect::<Vec<_>>())
    } else {
        k.clone()
    };
    let pc = linalg::Preconditioner::new(&shifted);
    let mut x = vec![1.0; n];
    let mut lambda = f64::NAN;
    for it in 1..=500 {
        let b: Vec<f64> = x.iter().zip(w).map(|(xi, wi)| xi * wi).collect();
        let out = match linalg::pcg(&shifted, &b, Some(&x), &pc, 1e-12, linalg::cg_cap(n)) {
            Ok(o) => o,
            Err(_) => return (lambda, it),
        };
        let y = out.x;
        let num = k.quadratic_form(&y);
        let den: f64 = y.iter().zip(w).map(|(a, b)| a * a * b).sum();
        let next = num / den;
        let scale = den.sqrt();
        x = y.iter().map(|v| v / scale).collect();
        if (next - lambda).abs() <= 1e-13 * next.abs().max(1.0) {
            return (next, it);
        }
        lambda = next;
    }
    (lambda, 500)
}

/// Values at the nodes of a grid; boundary values are implicitly zero.
#[derive(Clone, Debug)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl PartialEq for GridFunction {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.values == other.values
    }
}

impl GridFunction {
    pub fn new(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid: Arc::clone(grid), values })
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.coordinates(i))).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self { grid: Arc::clone(grid), values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        assert!(c.is_finite());
        Self { grid: Arc::clone(grid), values: vec![c; grid.len()] }
    }

    /// Internal constructor for values produced by finite arithmetic.
    pub(crate) fn from_raw(grid: &Arc<Grid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid: Arc::clone(grid), values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `(Σ w_i |u_i|^s)^{1/s}`. Panics unless `s > 0`.
    pub fn lp_norm(&self, s: f64) -> f64 {
        assert!(s > 0.0, "exponent must be positive, got {s}");
        let peak = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak == 0.0 {
            return 0.0;
        }
        // scaling by the peak keeps large exponents from overflowing
        let sum: f64 = self
            .values
            .iter()
            .zip(self.grid.weights())
            .map(|(v, w)| w * (v.abs() / peak).powf(s))
            .sum();
        peak * sum.powf(1.0 / s)
    }

    /// `Σ w_i |u_i|^s`.
    pub fn lp_integral(&self, s: f64) -> f64 {
        self.values
            .iter()
            .zip(self.grid.weights())
            .map(|(v, w)| w * v.abs().powf(s))
            .sum()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete Dirichlet seminorm from edge differences, boundary values zero.
    pub fn h1_seminorm(&self) -> f64 {
        self.grid
            .edges
            .iter()
            .map(|&(a, b, c)| {
                let d = self.values[a] - b.map_or(0.0, |b| self.values[b]);
                c * d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// `−Δ_h u`.
    pub fn apply_laplacian(&self) -> Self {
        let ku = self.grid.stiffness.apply(&self.values);
        let values = ku.iter().zip(self.grid.weights()).map(|(k, w)| k / w).collect();
        Self::from_raw(&self.grid, values)
    }

    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self.dot_weighted(other))
    }

    pub(crate) fn dot_weighted(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .zip(self.grid.weights())
            .map(|((a, b), w)| a * b * w)
            .sum()
    }

    /// `∫ a·u·v`.
    pub(crate) fn weighted_triple(&self, a: &[f64], other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .zip(a)
            .zip(self.grid.weights())
            .map(|(((u, v), a), w)| a * u * v * w)
            .sum()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert!(self.same_grid(other));
        Self::from_raw(
            &self.grid,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    pub fn scaled(&self, t: f64) -> Self {
        self.map(|v| t * v)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    /// `self + t·other`.
    pub fn axpy(&self, t: f64, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + t * b)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}
