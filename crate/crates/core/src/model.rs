//! Hawkes model definition and derived branching quantities.
//!
//! Type indices are zero-based throughout the library API. Kernel entry
//! `(i, j)` is the influence of a type-`j` event on the rate of type `i`,
//! i.e. the expected density of type-`i` children of a type-`j` parent.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{HawkesError, Result};
use crate::exec::Execution;

/// Models with a spectral radius at or above `1 - margin` are rejected.
pub const DEFAULT_STABILITY_MARGIN: f64 = 1e-6;
/// Sup-norm increment at which the renewal iteration stops.
pub const DEFAULT_RENEWAL_TOL: f64 = 1e-8;
/// Tail mass of the renewal density left beyond the default horizon.
pub const DEFAULT_TAIL_MASS: f64 = 1e-6;
/// Default number of grid steps per fastest kernel timescale.
const STEPS_PER_TIMESCALE: f64 = 40.0;
const MAX_GRID_STEPS: usize = 1 << 21;

/// An interaction kernel `g(t)`, supported on `t >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    Zero,
    /// `g(t) = alpha * beta * exp(-beta t)`; `alpha` is the expected number
    /// of offspring, `beta` the decay rate.
    Exponential { alpha: f64, beta: f64 },
    /// Samples `values[k] = g(k dt)`, linearly interpolated between samples
    /// and zero past the last one.
    Grid { dt: f64, values: Vec<f64> },
}

impl Kernel {
    pub fn exponential(alpha: f64, beta: f64) -> Self {
        Kernel::Exponential { alpha, beta }
    }

    pub fn grid(dt: f64, values: Vec<f64>) -> Self {
        Kernel::Grid { dt, values }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Kernel::Zero => true,
            Kernel::Exponential { alpha, .. } => *alpha == 0.0,
            Kernel::Grid { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Kernel::Zero => Ok(()),
            Kernel::Exponential { alpha, beta } => {
                if !(alpha.is_finite() && *alpha >= 0.0) {
                    return Err(HawkesError::Degenerate(format!("kernel weight {alpha} must be finite and >= 0")));
                }
                if !(beta.is_finite() && *beta > 0.0) {
                    return Err(HawkesError::Degenerate(format!("kernel rate {beta} must be finite and > 0")));
                }
                Ok(())
            }
            Kernel::Grid { dt, values } => {
                if !(dt.is_finite() && *dt > 0.0) {
                    return Err(HawkesError::Degenerate(format!("grid step {dt} must be finite and > 0")));
                }
                if values.is_empty() {
                    return Err(HawkesError::Degenerate("grid kernel has no samples".into()));
                }
                if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                    return Err(HawkesError::Degenerate(format!("grid kernel value {v} must be finite and >= 0")));
                }
                Ok(())
            }
        }
    }

    /// Total mass, i.e. the expected offspring count.
    pub fn integral(&self) -> f64 {
        match self {
            Kernel::Zero => 0.0,
            Kernel::Exponential { alpha, .. } => *alpha,
            Kernel::Grid { dt, values } => trapezoid(values, *dt),
        }
    }

    /// Right-continuous evaluation; zero for `t < 0`.
    pub fn eval(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match self {
            Kernel::Zero => 0.0,
            Kernel::Exponential { alpha, beta } => alpha * beta * (-beta * t).exp(),
            Kernel::Grid { dt, values } => interp(values, *dt, t),
        }
    }

    /// `sup { g(s) : s >= t }`. Non-increasing in `t`.
    pub fn sup_from(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match self {
            Kernel::Zero => 0.0,
            Kernel::Exponential { .. } => self.eval(t),
            Kernel::Grid { dt, values } => {
                let first = (t / dt).ceil() as usize;
                let tail = values.iter().skip(first).cloned().fold(0.0, f64::max);
                tail.max(self.eval(t))
            }
        }
    }

    /// End of the support; infinite for exponentials.
    pub fn support_end(&self) -> f64 {
        match self {
            Kernel::Zero => 0.0,
            Kernel::Exponential { .. } => f64::INFINITY,
            Kernel::Grid { dt, values } => dt * (values.len() - 1) as f64,
        }
    }

    /// Characteristic time: `1/beta` for exponentials, the support length
    /// for grids.
    pub fn timescale(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        match self {
            Kernel::Zero => 0.0,
            Kernel::Exponential { beta, .. } => 1.0 / beta,
            Kernel::Grid { .. } => self.support_end(),
        }
    }

    /// `int g(t) exp(s t) dt` for `s >= 0`; infinite where it diverges.
    fn growth_transform(&self, s: f64) -> f64 {
        match self {
            Kernel::Zero => 0.0,
            Kernel::Exponential { alpha, beta } => {
                if *alpha == 0.0 {
                    0.0
                } else if s < *beta {
                    alpha * beta / (beta - s)
                } else {
                    f64::INFINITY
                }
            }
            Kernel::Grid { dt, values } => {
                let weighted: Vec<f64> = values
                    .iter()
                    .enumerate()
                    .map(|(k, v)| v * (s * dt * k as f64).exp())
                    .collect();
                trapezoid(&weighted, *dt)
            }
        }
    }
}

fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => dt * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1])),
    }
}

fn interp(values: &[f64], dt: f64, t: f64) -> f64 {
    let x = t / dt;
    let k = x.floor() as usize;
    let last = values.len() - 1;
    if k > last {
        return 0.0;
    }
    if k == last {
        // exactly on the last sample
        return if x - k as f64 <= 1e-12 { values[last] } else { 0.0 };
    }
    let frac = x - k as f64;
    values[k] * (1.0 - frac) + values[k + 1] * frac
}

/// A stable multivariate linear Hawkes model.
#[derive(Debug, Clone, PartialEq)]
pub struct HawkesModel {
    dim: usize,
    mu: Vec<f64>,
    /// Row-major `dim x dim`.
    kernels: Vec<Kernel>,
}

impl HawkesModel {
    /// Builds and validates a model. `kernels` is row-major with `dim^2`
    /// entries. Rejects non-positive base rates, invalid kernels and
    /// models whose integrated kernel has spectral radius `>= 1 - 1e-6`.
    pub fn new(mu: Vec<f64>, kernels: Vec<Kernel>) -> Result<Self> {
        Self::with_margin(mu, kernels, DEFAULT_STABILITY_MARGIN)
    }

    pub fn with_margin(mu: Vec<f64>, kernels: Vec<Kernel>, margin: f64) -> Result<Self> {
        let dim = mu.len();
        if dim == 0 {
            return Err(HawkesError::Degenerate("dimension must be positive".into()));
        }
        if kernels.len() != dim * dim {
            return Err(HawkesError::Input(format!(
                "expected {} kernels for dimension {dim}, got {}",
                dim * dim,
                kernels.len()
            )));
        }
        if let Some(m) = mu.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
            return Err(HawkesError::Degenerate(format!("base rate {m} must be finite and > 0")));
        }
        for k in &kernels {
            k.validate()?;
        }
        let model = HawkesModel { dim, mu, kernels };
        let rho = spectral_radius(&model.integrated_kernel(), 1e-12);
        if rho >= 1.0 - margin {
            return Err(HawkesError::Stability { rho, margin });
        }
        Ok(model)
    }

    /// Homogeneous Poisson process with rates `mu`.
    pub fn poisson(mu: Vec<f64>) -> Result<Self> {
        let d = mu.len();
        Self::new(mu, vec![Kernel::Zero; d * d])
    }

    /// Single-type model with an exponential kernel.
    pub fn scalar_exponential(mu: f64, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(vec![mu], vec![Kernel::exponential(alpha, beta)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn kernel(&self, i: usize, j: usize) -> &Kernel {
        &self.kernels[i * self.dim + j]
    }

    pub fn kernels(&self) -> &[Kernel] {
        &self.kernels
    }

    /// Expected offspring matrix: entry `(i, j)` is the mean number of
    /// type-`i` children of one type-`j` event.
    pub fn integrated_kernel(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.kernel(i, j).integral())
    }

    pub fn is_poisson(&self) -> bool {
        self.kernels.iter().all(Kernel::is_zero)
    }

    /// Relabels types: old type `i` becomes new type `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let d = self.dim;
        if perm.len() != d || !is_permutation(perm) {
            return Err(HawkesError::Input("not a permutation of the type indices".into()));
        }
        let mut mu = vec![0.0; d];
        let mut kernels = vec![Kernel::Zero; d * d];
        for i in 0..d {
            mu[perm[i]] = self.mu[i];
            for j in 0..d {
                kernels[perm[i] * d + perm[j]] = self.kernel(i, j).clone();
            }
        }
        Ok(HawkesModel { dim: d, mu, kernels })
    }

    /// Slowest kernel timescale (`max 1/beta`, or grid support length).
    pub fn slowest_timescale(&self) -> f64 {
        self.kernels.iter().map(Kernel::timescale).fold(0.0, f64::max)
    }

    /// Exponential decay rate of the renewal density tail.
    ///
    /// This is the abscissa `s` where the spectral radius of
    /// `int G(t) e^{st} dt` reaches one. When no such point exists below the
    /// smallest exponential rate, the rate is taken as 80% of that rate to
    /// leave room for polynomial prefactors. Returns infinity when the
    /// renewal density has bounded support.
    pub fn tail_decay_rate(&self) -> f64 {
        if self.is_poisson() {
            return f64::INFINITY;
        }
        let d = self.dim;
        let transform = |s: f64| {
            let m = DMatrix::from_fn(d, d, |i, j| self.kernel(i, j).growth_transform(s));
            if m.iter().any(|v| !v.is_finite()) {
                f64::INFINITY
            } else {
                spectral_radius(&m, 1e-10)
            }
        };
        let cap = self
            .kernels
            .iter()
            .filter_map(|k| match k {
                Kernel::Exponential { alpha, beta } if *alpha > 0.0 => Some(*beta),
                _ => None,
            })
            .fold(f64::INFINITY, f64::min);

        let (mut lo, mut hi) = (0.0, 0.0);
        if cap.is_finite() {
            let edge = cap * (1.0 - 1e-9);
            if transform(edge) < 1.0 {
                return 0.8 * cap;
            }
            hi = edge;
        } else {
            let support = self.kernels.iter().map(Kernel::support_end).fold(0.0, f64::max);
            let mut s = 1.0 / support.max(1e-12);
            for _ in 0..60 {
                if transform(s) >= 1.0 {
                    hi = s;
                    break;
                }
                lo = s;
                s *= 2.0;
            }
            if hi == 0.0 {
                return f64::INFINITY;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if transform(mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * hi {
                break;
            }
        }
        lo
    }

    /// Time beyond which the renewal density retains less than `tail` of
    /// its mass, by the exponential tail estimate.
    pub fn renewal_horizon(&self, tail: f64) -> f64 {
        let d = self.dim as f64;
        let support = self
            .kernels
            .iter()
            .map(Kernel::support_end)
            .filter(|s| s.is_finite())
            .fold(0.0, f64::max);
        let finite_part = d * support;
        let rate = self.tail_decay_rate();
        if !rate.is_finite() {
            return finite_part;
        }
        let rho = spectral_radius(&self.integrated_kernel(), 1e-12);
        let scale = (1.0 + 1.0 / (1.0 - rho)) * d;
        let decay = ((1.0 / tail).ln() + scale.ln()) / rate;
        decay.max(finite_part).max(10.0 * self.slowest_timescale())
    }

    /// Burn-in length `20 * slowest timescale / (1 - rho)`.
    pub fn default_burn_in(&self) -> f64 {
        let rho = spectral_radius(&self.integrated_kernel(), 1e-12);
        20.0 * self.slowest_timescale() / (1.0 - rho)
    }
}

fn is_permutation(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || seen[p] {
            return false;
        }
        seen[p] = true;
    }
    true
}

/// Spectral radius of an entrywise non-negative matrix.
///
/// The matrix is split into strongly connected components. Each irreducible
/// block is shifted by the identity, which makes it primitive, and power
/// iteration runs from the all-ones vector until the Collatz-Wielandt
/// bounds `min (Ax)_i/x_i <= rho <= max (Ax)_i/x_i` are within `tol`.
pub fn spectral_radius(m: &DMatrix<f64>, tol: f64) -> f64 {
    let d = m.nrows();
    assert_eq!(d, m.ncols(), "spectral radius needs a square matrix");
    if d == 0 {
        return 0.0;
    }
    let mut graph = DiGraph::<usize, ()>::new();
    let nodes: Vec<_> = (0..d).map(|i| graph.add_node(i)).collect();
    for i in 0..d {
        for j in 0..d {
            if i != j && m[(i, j)] > 0.0 {
                graph.add_edge(nodes[j], nodes[i], ());
            }
        }
    }
    let mut rho: f64 = 0.0;
    for comp in tarjan_scc(&graph) {
        let idx: Vec<usize> = comp.iter().map(|n| graph[*n]).collect();
        let r = if idx.len() == 1 {
            m[(idx[0], idx[0])]
        } else {
            irreducible_radius(m, &idx, tol)
        };
        rho = rho.max(r);
    }
    rho
}

fn irreducible_radius(m: &DMatrix<f64>, idx: &[usize], tol: f64) -> f64 {
    let k = idx.len();
    let block = DMatrix::from_fn(k, k, |a, b| m[(idx[a], idx[b])] + if a == b { 1.0 } else { 0.0 });
    let mut x = DVector::from_element(k, 1.0);
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    for _ in 0..200_000 {
        let y = &block * &x;
        lo = f64::INFINITY;
        hi = 0.0;
        for a in 0..k {
            let r = y[a] / x[a];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        if hi - lo <= tol * hi.max(1.0) {
            break;
        }
        let norm = y.max();
        x = y / norm;
    }
    0.5 * (lo + hi) - 1.0
}

/// Branching quantities of a stable model.
#[derive(Debug, Clone)]
pub struct BranchingSummary {
    /// Expected offspring matrix.
    pub gbar: DMatrix<f64>,
    pub rho: f64,
    /// Stationary rates `(I - G)^{-1} mu`.
    pub lambda: DVector<f64>,
    /// `(I - G)^{-1}`: expected total progeny including the ancestor.
    pub resolvent: DMatrix<f64>,
    /// `R - I`: progeny after at least one generation.
    pub psi: DMatrix<f64>,
}

impl BranchingSummary {
    pub fn dim(&self) -> usize {
        self.lambda.len()
    }
}

/// Computes the branching summary with the default stability margin.
pub fn build_summary(model: &HawkesModel, tol: f64) -> Result<BranchingSummary> {
    build_summary_with_margin(model, tol, DEFAULT_STABILITY_MARGIN)
}

pub fn build_summary_with_margin(model: &HawkesModel, tol: f64, margin: f64) -> Result<BranchingSummary> {
    let d = model.dim();
    let gbar = model.integrated_kernel();
    let rho = spectral_radius(&gbar, tol);
    if rho >= 1.0 - margin {
        return Err(HawkesError::Stability { rho, margin });
    }
    let a = DMatrix::identity(d, d) - &gbar;
    let mut resolvent = a
        .lu()
        .solve(&DMatrix::identity(d, d))
        .ok_or_else(|| HawkesError::Degenerate("I - G is singular".into()))?;
    // the exact resolvent of a non-negative subcritical matrix is >= 0
    resolvent.iter_mut().for_each(|v| *v = v.max(0.0));
    let mut psi = &resolvent - DMatrix::identity(d, d);
    psi.iter_mut().for_each(|v| *v = v.max(0.0));
    let lambda = &resolvent * DVector::from_column_slice(model.mu());
    Ok(BranchingSummary { gbar, rho, lambda, resolvent, psi })
}

/// Grid used to tabulate the renewal density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenewalGrid {
    pub dt: f64,
    pub steps: usize,
}

impl RenewalGrid {
    pub fn new(dt: f64, horizon: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(HawkesError::Grid(format!("grid step {dt} must be > 0")));
        }
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(HawkesError::Grid(format!("horizon {horizon} must be finite and >= 0")));
        }
        let steps = (horizon / dt - 1e-9).ceil().max(0.0) as usize;
        if steps > MAX_GRID_STEPS {
            return Err(HawkesError::Grid(format!("{steps} grid steps exceed the limit {MAX_GRID_STEPS}")));
        }
        Ok(RenewalGrid { dt, steps })
    }

    /// `dt` resolves the fastest kernel timescale 40 times over (or reuses
    /// the tabulation step of grid kernels); the horizon leaves a `1e-6`
    /// tail of the renewal mass.
    pub fn default_for(model: &HawkesModel) -> Result<Self> {
        let dt = Self::default_step(model);
        Self::new(dt, model.renewal_horizon(DEFAULT_TAIL_MASS))
    }

    pub fn default_step(model: &HawkesModel) -> f64 {
        let mut dt = f64::INFINITY;
        for k in model.kernels() {
            if k.is_zero() {
                continue;
            }
            match k {
                Kernel::Exponential { beta, .. } => dt = dt.min(1.0 / (STEPS_PER_TIMESCALE * beta)),
                Kernel::Grid { dt: g, .. } => dt = dt.min(*g),
                Kernel::Zero => {}
            }
        }
        if dt.is_finite() {
            dt
        } else {
            0.01
        }
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.steps as f64
    }
}

/// Tabulated renewal density `R_t = I delta(t) + Phi(t)`.
///
/// Only the continuous part `Phi` is sampled, at `t = k dt` for
/// `k = 0..=steps`; the identity atom at the origin is carried
/// symbolically. `Phi` is also the continuous part of `Psi_t = R_t - I delta(t)`.
#[derive(Debug, Clone)]
pub struct RenewalDensity {
    dim: usize,
    grid: RenewalGrid,
    /// `dim^2` series (row-major), each with `steps + 1` samples.
    phi: Vec<Vec<f64>>,
    iterations: usize,
}

impl RenewalDensity {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.grid.dt
    }

    pub fn steps(&self) -> usize {
        self.grid.steps
    }

    pub fn horizon(&self) -> f64 {
        self.grid.horizon()
    }

    pub fn grid(&self) -> RenewalGrid {
        self.grid
    }

    /// `R_t` always carries the identity atom `I delta(t)`.
    pub fn has_identity_atom(&self) -> bool {
        true
    }

    /// Neumann iterations used by the solver.
    /// True when `Phi` vanishes, i.e. `R_t` is the bare identity atom.
    pub fn is_atom_only(&self) -> bool {
        self.phi.iter().all(|s| s.iter().all(|v| *v == 0.0))
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn samples(&self, i: usize, j: usize) -> &[f64] {
        &self.phi[i * self.dim + j]
    }

    /// Right-continuous `Phi_ij(t)`: `Phi(0+)` at the origin, zero for
    /// negative `t` and beyond the horizon.
    pub fn continuous(&self, i: usize, j: usize, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        self.interpolate(i, j, t)
    }

    /// `Phi_ij(t)` with the jump at the origin replaced by the mean of its
    /// one-sided limits. This is the value quadrature over the real line
    /// needs when a grid node sits on the discontinuity.
    pub fn continuous_midpoint(&self, i: usize, j: usize, t: f64) -> f64 {
        let eps = 1e-9 * self.grid.dt;
        if t < -eps {
            0.0
        } else if t <= eps {
            0.5 * self.samples(i, j)[0]
        } else {
            self.interpolate(i, j, t)
        }
    }

    fn interpolate(&self, i: usize, j: usize, t: f64) -> f64 {
        let s = self.samples(i, j);
        let x = t / self.grid.dt;
        let k = x.floor() as usize;
        let frac = x - k as f64;
        if k >= self.grid.steps {
            return if k == self.grid.steps && frac <= 1e-9 { s[k] } else { 0.0 };
        }
        // snap to samples to keep grid-aligned lookups exact
        if frac <= 1e-9 {
            s[k]
        } else if frac >= 1.0 - 1e-9 {
            s[k + 1]
        } else {
            s[k] * (1.0 - frac) + s[k + 1] * frac
        }
    }

    /// Trapezoid integral of `Phi` over `[0, horizon]`.
    pub fn integral(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| trapezoid(self.samples(i, j), self.grid.dt))
    }

    /// `I + int Phi`, the grid estimate of `(I - G)^{-1}`.
    pub fn resolvent_estimate(&self) -> DMatrix<f64> {
        DMatrix::identity(self.dim, self.dim) + self.integral()
    }
}

/// Solves the renewal equation on the default grid.
pub fn renewal_density_default(model: &HawkesModel) -> Result<RenewalDensity> {
    let grid = RenewalGrid::default_for(model)?;
    renewal_density_with(model, grid, DEFAULT_RENEWAL_TOL, Execution::default())
}

/// Solves `Phi = G + G * Phi` on a grid of step `dt` up to `horizon`.
pub fn renewal_density(model: &HawkesModel, dt: f64, horizon: f64) -> Result<RenewalDensity> {
    renewal_density_with(model, RenewalGrid::new(dt, horizon)?, DEFAULT_RENEWAL_TOL, Execution::default())
}

/// Truncated Neumann iteration `Phi_{m+1} = G + G * Phi_m` with trapezoid
/// convolutions evaluated by FFT, stopped once the sup-norm increment falls
/// below `tol`. The iteration budget is twice the Neumann truncation order
/// `ceil(log(tol (1 - rho)) / log(rho))` plus twenty.
pub fn renewal_density_with(
    model: &HawkesModel,
    grid: RenewalGrid,
    tol: f64,
    exec: Execution,
) -> Result<RenewalDensity> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(HawkesError::Input(format!("tolerance {tol} must be > 0")));
    }
    let d = model.dim();
    let n = grid.steps + 1;
    let g: Vec<Vec<f64>> = model
        .kernels()
        .iter()
        .map(|k| (0..n).map(|s| k.eval(s as f64 * grid.dt)).collect())
        .collect();
    if model.is_poisson() {
        return Ok(RenewalDensity { dim: d, grid, phi: g, iterations: 0 });
    }

    let rho = spectral_radius(&model.integrated_kernel(), 1e-12);
    let order = if rho < 1e-12 {
        d + 1
    } else {
        ((tol * (1.0 - rho)).ln() / rho.ln()).ceil().max(1.0) as usize
    };
    let max_iter = 2 * order + 20;

    let conv = GridConvolver::new(&g, d, n, grid.dt, exec);
    let mut phi = g.clone();
    let mut increment = f64::INFINITY;
    for it in 1..=max_iter {
        let gp = conv.apply(&phi);
        let mut next = g.clone();
        increment = 0.0;
        for (idx, series) in next.iter_mut().enumerate() {
            for (s, v) in series.iter_mut().enumerate() {
                *v += gp[idx][s];
                // round-off from the FFT can dip below zero where Phi vanishes
                if *v < 0.0 {
                    *v = 0.0;
                }
                increment = increment.max((*v - phi[idx][s]).abs());
            }
        }
        phi = next;
        if increment < tol {
            return Ok(RenewalDensity { dim: d, grid, phi, iterations: it });
        }
    }
    Err(HawkesError::Convergence { iterations: max_iter, increment })
}

/// Trapezoid-rule convolution `(G * F)(t_n) = int_0^{t_n} G(t_n - s) F(s) ds`
/// for matrix-valued series, with `G` transformed once.
struct GridConvolver {
    d: usize,
    n: usize,
    dt: f64,
    len: usize,
    g_hat: Vec<Vec<Complex<f64>>>,
    g0: Vec<f64>,
    g: Vec<Vec<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    exec: Execution,
}

impl GridConvolver {
    fn new(g: &[Vec<f64>], d: usize, n: usize, dt: f64, exec: Execution) -> Self {
        let len = (2 * n).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let g_hat = exec.map(g, |series| {
            let mut buf = padded(series, len);
            forward.process(&mut buf);
            buf
        });
        GridConvolver {
            d,
            n,
            dt,
            len,
            g_hat,
            g0: g.iter().map(|s| s[0]).collect(),
            g: g.to_vec(),
            forward,
            inverse,
            exec,
        }
    }

    fn apply(&self, f: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let (d, n, len) = (self.d, self.n, self.len);
        let f_hat = self.exec.map(f, |series| {
            let mut buf = padded(series, len);
            self.forward.process(&mut buf);
            buf
        });
        let scale = 1.0 / len as f64;
        self.exec.map_range(d * d, |idx| {
            let (i, j) = (idx / d, idx % d);
            let mut acc = vec![Complex::new(0.0, 0.0); len];
            for l in 0..d {
                let gh = &self.g_hat[i * d + l];
                let fh = &f_hat[l * d + j];
                for (a, (x, y)) in acc.iter_mut().zip(gh.iter().zip(fh.iter())) {
                    *a += x * y;
                }
            }
            self.inverse.process(&mut acc);
            let mut out = Vec::with_capacity(n);
            for s in 0..n {
                let mut corr = 0.0;
                for l in 0..d {
                    corr += self.g[i * d + l][s] * f[l * d + j][0] + self.g0[i * d + l] * f[l * d + j][s];
                }
                out.push(self.dt * (acc[s].re * scale - 0.5 * corr));
            }
            out
        })
    }
}

fn padded(series: &[f64], len: usize) -> Vec<Complex<f64>> {
    let mut buf = vec![Complex::new(0.0, 0.0); len];
    for (b, v) in buf.iter_mut().zip(series) {
        b.re = *v;
    }
    buf
}
