//! Tree terms, integrated cumulants and cumulant densities.
//!
//! Every tree on `n` labeled leaves contributes one term. A leaf edge from
//! internal node `v` to leaf `k` carries the resolvent factor
//! `R^{i_k j_v}`, an edge from internal node `u` down to internal node `v`
//! carries `Psi^{j_v j_u}` (child index first), and the root carries the
//! stationary rate `lambda^{j_root}`. Internal types are summed over and,
//! for densities, internal times integrated over the real line.
//!
//! Integrated cumulants use the time-integrated factors `R = (I - G)^{-1}`
//! and `Psi = R - I`. Densities use the tabulated renewal density: `R_t`
//! is the identity atom plus the continuous part `Phi`, and `Psi_t = Phi`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{HawkesError, Result};
use crate::exec::Execution;
use crate::model::{build_summary, BranchingSummary, HawkesModel, RenewalDensity};
use crate::trees::{enumerate_trees_with, InternalNode, LeafLabeledTree, DEFAULT_MAX_LEAVES};

/// Highest density order evaluated unless order four is enabled.
pub const DEFAULT_DENSITY_ORDER: usize = 3;

/// A compiled tree term.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeTerm {
    pub tree: LeafLabeledTree,
    /// Internal nodes; 0 is the root, parents precede children.
    pub nodes: Vec<InternalNode>,
    pub factors: Vec<Factor>,
}

/// One multiplicative factor of a tree term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    /// `lambda^{j_node}` on the root.
    Rate { node: usize },
    /// `R^{i_leaf j_node}` on a leaf edge.
    Resolvent { leaf: usize, node: usize },
    /// `Psi^{j_child j_parent}` on an internal edge.
    Psi { child: usize, parent: usize },
}

impl TreeTerm {
    pub fn n_leaves(&self) -> usize {
        self.tree.n_leaves()
    }

    pub fn count(&self, pred: impl Fn(&Factor) -> bool) -> usize {
        self.factors.iter().filter(|f| pred(f)).count()
    }

    /// Human-readable factor list, leaves one-based, internal nodes `u0..`.
    pub fn describe(&self) -> String {
        if self.nodes.is_empty() {
            return "lambda(1)".to_string();
        }
        self.factors
            .iter()
            .map(|f| match f {
                Factor::Rate { node } => format!("lambda(u{node})"),
                Factor::Resolvent { leaf, node } => format!("R({},u{node})", leaf + 1),
                Factor::Psi { child, parent } => format!("Psi(u{child},u{parent})"),
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Assigns factors to a tree: one rate on the root, a resolvent per leaf
/// edge and a `Psi` per internal edge.
pub fn compile_tree_term(tree: &LeafLabeledTree) -> Result<TreeTerm> {
    tree.validate()?;
    if !tree.is_canonical() {
        return Err(HawkesError::MalformedTree(format!("{tree} is not in canonical form")));
    }
    let nodes = tree.internal_nodes();
    let mut factors = Vec::new();
    if !nodes.is_empty() {
        factors.push(Factor::Rate { node: 0 });
    }
    for (v, node) in nodes.iter().enumerate() {
        for &leaf in &node.leaves {
            factors.push(Factor::Resolvent { leaf, node: v });
        }
        for &w in &node.children {
            factors.push(Factor::Psi { child: w, parent: v });
        }
    }
    Ok(TreeTerm { tree: tree.clone(), nodes, factors })
}

fn compile_all(n: usize, max_leaves: usize, exec: Execution) -> Result<Vec<TreeTerm>> {
    let trees = enumerate_trees_with(n, max_leaves, exec)?;
    let terms = exec.map(&trees, compile_tree_term);
    terms.into_iter().collect()
}

fn check_types(types: &[usize], d: usize) -> Result<()> {
    if types.is_empty() {
        return Err(HawkesError::Input("a cumulant needs at least one type".into()));
    }
    if let Some(t) = types.iter().find(|t| **t >= d) {
        return Err(HawkesError::Input(format!("type index {t} out of range for dimension {d}")));
    }
    Ok(())
}

/// Evaluates one tree term with integrated factors, summing internal types
/// bottom-up.
pub fn contract_term(term: &TreeTerm, summary: &BranchingSummary, types: &[usize]) -> f64 {
    let d = summary.dim();
    if term.nodes.is_empty() {
        return summary.lambda[types[0]];
    }
    let m = term.nodes.len();
    let mut f = vec![vec![0.0; d]; m];
    for v in (0..m).rev() {
        let node = &term.nodes[v];
        for j in 0..d {
            let mut val = 1.0;
            for &k in &node.leaves {
                val *= summary.resolvent[(types[k], j)];
            }
            for &w in &node.children {
                let mut s = 0.0;
                for jw in 0..d {
                    s += summary.psi[(jw, j)] * f[w][jw];
                }
                val *= s;
            }
            f[v][j] = val;
        }
    }
    (0..d).map(|j| summary.lambda[j] * f[0][j]).sum()
}

/// Integrated cumulant `k^{types}` summed over all trees.
pub fn integrated_cumulant(summary: &BranchingSummary, types: &[usize]) -> Result<f64> {
    integrated_cumulant_with(summary, types, DEFAULT_MAX_LEAVES, Execution::default())
}

pub fn integrated_cumulant_with(
    summary: &BranchingSummary,
    types: &[usize],
    max_leaves: usize,
    exec: Execution,
) -> Result<f64> {
    Ok(integrated_cumulant_terms_with(summary, types, max_leaves, exec)?
        .iter()
        .map(|(_, v)| v)
        .sum())
}

/// Per-tree contributions to the integrated cumulant, in enumeration order.
pub fn integrated_cumulant_terms(summary: &BranchingSummary, types: &[usize]) -> Result<Vec<(LeafLabeledTree, f64)>> {
    integrated_cumulant_terms_with(summary, types, DEFAULT_MAX_LEAVES, Execution::default())
}

fn integrated_cumulant_terms_with(
    summary: &BranchingSummary,
    types: &[usize],
    max_leaves: usize,
    exec: Execution,
) -> Result<Vec<(LeafLabeledTree, f64)>> {
    check_types(types, summary.dim())?;
    let terms = compile_all(types.len(), max_leaves, exec)?;
    let values = exec.map(&terms, |t| contract_term(t, summary, types));
    Ok(terms.into_iter().map(|t| t.tree).zip(values).collect())
}

/// Hand-coded integrated covariance `k^{ij} = sum_m lambda^m R_im R_jm`.
pub fn integrated_covariance(summary: &BranchingSummary) -> DMatrix<f64> {
    let d = summary.dim();
    let r = &summary.resolvent;
    DMatrix::from_fn(d, d, |i, j| (0..d).map(|m| summary.lambda[m] * r[(i, m)] * r[(j, m)]).sum())
}

/// Hand-coded integrated third cumulant, indexed `[i][j][k]`.
pub fn integrated_third(summary: &BranchingSummary) -> Vec<Vec<Vec<f64>>> {
    let d = summary.dim();
    let r = &summary.resolvent;
    let psi = &summary.psi;
    let lam = &summary.lambda;
    let mut out = vec![vec![vec![0.0; d]; d]; d];
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let mut star = 0.0;
                for m in 0..d {
                    star += lam[m] * r[(i, m)] * r[(j, m)] * r[(k, m)];
                }
                let mut split = 0.0;
                for m in 0..d {
                    for n in 0..d {
                        let common = lam[n] * psi[(m, n)];
                        split += common * r[(i, m)] * r[(j, m)] * r[(k, n)];
                        split += common * r[(j, m)] * r[(k, m)] * r[(i, n)];
                        split += common * r[(i, m)] * r[(k, m)] * r[(j, n)];
                    }
                }
                out[i][j][k] = star + split;
            }
        }
    }
    out
}

/// Partial sums of the motif expansion.
///
/// Each `R` is replaced by `sum_{p>=0} G^p` and each `Psi` by
/// `sum_{p>=1} G^p`; entry `p` of the result collects every term whose
/// total power of `G` is at most `p`.
pub fn motif_series(summary: &BranchingSummary, types: &[usize], max_total_power: usize) -> Result<Vec<f64>> {
    let mut acc = 0.0;
    Ok(motif_coefficients(summary, types, max_total_power)?
        .into_iter()
        .map(|c| {
            acc += c;
            acc
        })
        .collect())
}

/// Contribution of each exact total power `p` to the motif expansion. All
/// entries are non-negative, so tails can be summed without cancellation.
pub fn motif_coefficients(summary: &BranchingSummary, types: &[usize], max_total_power: usize) -> Result<Vec<f64>> {
    check_types(types, summary.dim())?;
    let d = summary.dim();
    let len = max_total_power + 1;
    let mut powers = vec![DMatrix::identity(d, d)];
    for p in 1..len {
        let next = &powers[p - 1] * &summary.gbar;
        powers.push(next);
    }
    let terms = compile_all(types.len(), DEFAULT_MAX_LEAVES, Execution::default())?;
    let per_tree = Execution::default().map(&terms, |term| motif_term(term, summary, types, &powers));
    let mut coeff = vec![0.0; len];
    for t in per_tree {
        for (c, v) in coeff.iter_mut().zip(t) {
            *c += v;
        }
    }
    Ok(coeff)
}

fn motif_term(term: &TreeTerm, summary: &BranchingSummary, types: &[usize], powers: &[DMatrix<f64>]) -> Vec<f64> {
    let d = summary.dim();
    let len = powers.len();
    if term.nodes.is_empty() {
        let mut c = vec![0.0; len];
        c[0] = summary.lambda[types[0]];
        return c;
    }
    let m = term.nodes.len();
    // f[v][j] is a truncated polynomial in the total power
    let mut f = vec![vec![vec![0.0; len]; d]; m];
    for v in (0..m).rev() {
        let node = &term.nodes[v];
        for j in 0..d {
            let mut poly = vec![0.0; len];
            poly[0] = 1.0;
            for &k in &node.leaves {
                let factor: Vec<f64> = powers.iter().map(|g| g[(types[k], j)]).collect();
                poly = poly_mul(&poly, &factor);
            }
            for &w in &node.children {
                let mut factor = vec![0.0; len];
                for (p, g) in powers.iter().enumerate().skip(1) {
                    for jw in 0..d {
                        // Psi^{jw j} contributes G^p[jw, j]; child's own polynomial follows
                        if g[(jw, j)] != 0.0 {
                            for (q, fv) in f[w][jw].iter().enumerate() {
                                if p + q < len {
                                    factor[p + q] += g[(jw, j)] * fv;
                                }
                            }
                        }
                    }
                }
                poly = poly_mul(&poly, &factor);
            }
            f[v][j] = poly;
        }
    }
    let mut out = vec![0.0; len];
    for j in 0..d {
        for (o, v) in out.iter_mut().zip(&f[0][j]) {
            *o += summary.lambda[j] * v;
        }
    }
    out
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let len = a.len();
    let mut out = vec![0.0; len];
    for (p, x) in a.iter().enumerate() {
        if *x == 0.0 {
            continue;
        }
        for (q, y) in b.iter().enumerate().take(len - p) {
            out[p + q] += x * y;
        }
    }
    out
}

/// Types and times of the events in a cumulant query.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantQuery {
    pub types: Vec<usize>,
    pub times: Vec<f64>,
}

impl CumulantQuery {
    pub fn new(types: Vec<usize>, times: Vec<f64>) -> Result<Self> {
        if types.len() != times.len() {
            return Err(HawkesError::Input(format!(
                "{} types but {} times",
                types.len(),
                times.len()
            )));
        }
        if types.is_empty() {
            return Err(HawkesError::Input("a cumulant query needs at least one event".into()));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(HawkesError::Input("query times must be finite".into()));
        }
        Ok(CumulantQuery { types, times })
    }

    /// Query at times `(0, lags...)`.
    pub fn from_lags(types: Vec<usize>, lags: &[f64]) -> Result<Self> {
        let mut times = vec![0.0];
        times.extend_from_slice(lags);
        Self::new(types, times)
    }

    pub fn order(&self) -> usize {
        self.types.len()
    }
}

/// A singular part of the density: a product of Dirac deltas forcing the
/// events of each group to coincide, times `coefficient`, which is the
/// remaining lower-order density at the query.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicPart {
    /// Coincidence groups of zero-based event indices, each of size >= 2.
    pub groups: Vec<Vec<usize>>,
    pub coefficient: f64,
}

/// Continuous density plus singular parts supported on coincident times.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityValue {
    pub continuous: f64,
    pub atoms: Vec<AtomicPart>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DensityOptions {
    /// Enables order-four densities.
    pub allow_order_four: bool,
    pub exec: Execution,
}

impl DensityOptions {
    pub fn max_order(&self) -> usize {
        if self.allow_order_four {
            4
        } else {
            DEFAULT_DENSITY_ORDER
        }
    }
}

/// Evaluates cumulant densities by grid quadrature over internal-node
/// times.
///
/// Each leaf factor `R_t = I delta(t) + Phi(t)` is expanded into its atom
/// and continuous part. An atom pins its internal node to the leaf's time
/// and type; two atoms on one node force their events to coincide, which is
/// reported as an [`AtomicPart`] instead of being sampled. Free internal
/// nodes are integrated on the renewal grid, aligned with the earliest event
/// time, bottom-up through the tree. The immigrant position is already
/// integrated out into the root factor `lambda`.
pub struct CumulantDensity<'a> {
    summary: BranchingSummary,
    renewal: &'a RenewalDensity,
    options: DensityOptions,
    terms: Vec<Vec<TreeTerm>>,
    /// `Phi` samples with the origin halved, row-major by type pair.
    mid: Vec<Vec<f64>>,
}

impl<'a> CumulantDensity<'a> {
    pub fn new(model: &HawkesModel, renewal: &'a RenewalDensity, options: DensityOptions) -> Result<Self> {
        if renewal.dim() != model.dim() {
            return Err(HawkesError::Input("renewal density dimension does not match the model".into()));
        }
        let summary = build_summary(model, 1e-12)?;
        let mut terms = vec![Vec::new()];
        for n in 1..=options.max_order() {
            terms.push(compile_all(n, options.max_order(), options.exec)?);
        }
        let d = model.dim();
        let mid = (0..d * d)
            .map(|idx| {
                let mut s = renewal.samples(idx / d, idx % d).to_vec();
                s[0] *= 0.5;
                s
            })
            .collect();
        Ok(CumulantDensity { summary, renewal, options, terms, mid })
    }

    pub fn summary(&self) -> &BranchingSummary {
        &self.summary
    }

    pub fn evaluate(&self, query: &CumulantQuery) -> Result<DensityValue> {
        let n = query.order();
        let d = self.summary.dim();
        check_types(&query.types, d)?;
        if n > self.options.max_order() {
            return Err(HawkesError::Size { n, max: self.options.max_order() });
        }
        if n == 1 {
            return Ok(DensityValue { continuous: self.summary.lambda[query.types[0]], atoms: Vec::new() });
        }
        let lo = query.times.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = query.times.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo > self.renewal.horizon() + 1e-9 * self.renewal.dt() && !self.renewal.is_atom_only() {
            return Err(HawkesError::Grid(format!(
                "lag span {} exceeds the renewal horizon {}",
                hi - lo,
                self.renewal.horizon()
            )));
        }
        let terms = &self.terms[n];
        let work: Vec<(usize, u32)> = (0..terms.len())
            .flat_map(|t| (0..(1u32 << n)).map(move |a| (t, a)))
            .collect();
        let parts = self.options.exec.map(&work, |&(t, atoms)| self.term_part(&terms[t], atoms, query));

        let mut continuous = 0.0;
        let mut singular: BTreeMap<Vec<Vec<usize>>, f64> = BTreeMap::new();
        for part in parts.into_iter().flatten() {
            let (groups, value) = part;
            if groups.is_empty() {
                continuous += value;
            } else {
                *singular.entry(groups).or_insert(0.0) += value;
            }
        }
        let atoms = singular
            .into_iter()
            .map(|(groups, coefficient)| AtomicPart { groups, coefficient })
            .collect();
        Ok(DensityValue { continuous, atoms })
    }

    /// Contribution of one tree with the leaves in `atoms` taking the
    /// identity atom. `None` when the term vanishes identically.
    fn term_part(&self, term: &TreeTerm, atoms: u32, q: &CumulantQuery) -> Option<(Vec<Vec<usize>>, f64)> {
        let d = self.summary.dim();
        let dt = self.renewal.dt();
        let eps = 1e-9 * dt;
        let m = term.nodes.len();

        // pins and coincidence groups
        let mut pin: Vec<Option<(f64, usize)>> = vec![None; m];
        let mut groups = Vec::new();
        for (v, node) in term.nodes.iter().enumerate() {
            let at: Vec<usize> = node.leaves.iter().cloned().filter(|k| atoms & (1 << k) != 0).collect();
            if at.is_empty() {
                continue;
            }
            let (t0, i0) = (q.times[at[0]], q.types[at[0]]);
            if at.iter().any(|&k| q.types[k] != i0 || (q.times[k] - t0).abs() > eps) {
                return None;
            }
            if at.len() >= 2 {
                groups.push(at.clone());
            }
            pin[v] = Some((t0, i0));
        }
        groups.sort();

        // grid ranges for free nodes, anchored at the earliest event time
        let base = q.times.iter().cloned().fold(f64::INFINITY, f64::min);
        let horizon = self.renewal.horizon();
        let mut bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); m];
        for v in (0..m).rev() {
            let node = &term.nodes[v];
            let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
            for &k in &node.leaves {
                lo = lo.max(q.times[k] - horizon);
                hi = hi.min(q.times[k]);
            }
            for &w in &node.children {
                lo = lo.max(bounds[w].0 - horizon);
                hi = hi.min(bounds[w].1);
            }
            bounds[v] = (lo, hi);
        }

        let mut states: Vec<NodeState> = Vec::with_capacity(m);
        states.resize_with(m, || NodeState::Zero);
        for v in (0..m).rev() {
            let node = &term.nodes[v];
            states[v] = match pin[v] {
                Some((t, j)) => {
                    if t < bounds[v].0 - eps || t > bounds[v].1 + eps {
                        NodeState::Zero
                    } else {
                        let mut val = 1.0;
                        for &k in node.leaves.iter().filter(|k| atoms & (1 << **k) == 0) {
                            val *= self.renewal.continuous_midpoint(q.types[k], j, q.times[k] - t);
                        }
                        for &w in &node.children {
                            val *= self.message_at(&states[w], t, j, base);
                        }
                        if val == 0.0 {
                            NodeState::Zero
                        } else {
                            NodeState::Pinned { t, j, value: val }
                        }
                    }
                }
                None => {
                    let klo = ((bounds[v].0 - base) / dt - 1e-9).ceil() as i64;
                    let khi = ((bounds[v].1 - base) / dt + 1e-9).floor() as i64;
                    if khi < klo {
                        NodeState::Zero
                    } else {
                        let len = (khi - klo + 1) as usize;
                        let mut values = vec![1.0; len * d];
                        let mut jumps = vec![false; len];
                        for &k in node.leaves.iter() {
                            for p in 0..len {
                                let s = base + (klo + p as i64) as f64 * dt;
                                for j in 0..d {
                                    let (f, jump) = self.one_sided(q.types[k], j, q.times[k] - s);
                                    values[p * d + j] *= f;
                                    jumps[p] |= jump;
                                }
                            }
                        }
                        for &w in &node.children {
                            self.multiply_message(&states[w], klo, len, base, &mut values, &mut jumps);
                        }
                        // every jump drops to zero on the same side, so the
                        // midpoint of the product is half its left limit
                        for (p, jump) in jumps.iter().enumerate() {
                            if *jump {
                                values[p * d..(p + 1) * d].iter_mut().for_each(|v| *v *= 0.5);
                            }
                        }
                        if values.iter().all(|v| *v == 0.0) {
                            NodeState::Zero
                        } else {
                            NodeState::Free { klo, values }
                        }
                    }
                }
            };
            if matches!(states[v], NodeState::Zero) {
                return None;
            }
        }

        let lam = &self.summary.lambda;
        let value = match &states[0] {
            NodeState::Zero => return None,
            NodeState::Pinned { j, value, .. } => lam[*j] * value,
            NodeState::Free { values, .. } => {
                let mut acc = 0.0;
                for row in values.chunks(d) {
                    for (j, v) in row.iter().enumerate() {
                        acc += lam[j] * v;
                    }
                }
                acc * dt
            }
        };
        Some((groups, value))
    }

    /// `sum_{j_w} int Psi^{j_w j}(s_w - s) F_w(s_w, j_w) ds_w` at a single
    /// parent time `s`.
    fn message_at(&self, child: &NodeState, s: f64, j: usize, base: f64) -> f64 {
        let d = self.summary.dim();
        let dt = self.renewal.dt();
        match child {
            NodeState::Zero => 0.0,
            NodeState::Pinned { t, j: jw, value } => self.renewal.continuous_midpoint(*jw, j, t - s) * value,
            NodeState::Free { klo, values } => {
                let mut acc = 0.0;
                for p in 0..values.len() / d {
                    let x = base + (*klo + p as i64) as f64 * dt - s;
                    if x < -1e-9 * dt {
                        continue;
                    }
                    for jw in 0..d {
                        let f = values[p * d + jw];
                        if f != 0.0 {
                            acc += self.renewal.continuous_midpoint(jw, j, x) * f;
                        }
                    }
                }
                acc * dt
            }
        }
    }

    /// Multiplies `values` (a free parent on grid indices `klo..klo+len`)
    /// by the message from `child`.
    fn multiply_message(
        &self,
        child: &NodeState,
        klo: i64,
        len: usize,
        base: f64,
        values: &mut [f64],
        jumps: &mut [bool],
    ) {
        let d = self.summary.dim();
        let dt = self.renewal.dt();
        match child {
            NodeState::Zero => values.iter_mut().for_each(|v| *v = 0.0),
            NodeState::Pinned { t, j: jw, value } => {
                for p in 0..len {
                    let s = base + (klo + p as i64) as f64 * dt;
                    for j in 0..d {
                        let (f, jump) = self.one_sided(*jw, j, t - s);
                        values[p * d + j] *= f * value;
                        jumps[p] |= jump;
                    }
                }
            }
            NodeState::Free { klo: cklo, values: cv } => {
                let steps = self.renewal.steps() as i64;
                let clen = (cv.len() / d) as i64;
                for p in 0..len {
                    let kp = klo + p as i64;
                    let from = kp.max(*cklo);
                    let to = (kp + steps).min(cklo + clen - 1);
                    for j in 0..d {
                        if values[p * d + j] == 0.0 {
                            continue;
                        }
                        let mut acc = 0.0;
                        for kc in from..=to {
                            let lag = (kc - kp) as usize;
                            let row = ((kc - cklo) as usize) * d;
                            for jw in 0..d {
                                acc += self.mid[jw * d + j][lag] * cv[row + jw];
                            }
                        }
                        values[p * d + j] *= acc * dt;
                    }
                }
            }
        }
    }

    /// `Phi(x)` with `Phi(0+)` at the origin, and whether `x` sits on the
    /// jump.
    fn one_sided(&self, i: usize, j: usize, x: f64) -> (f64, bool) {
        let eps = 1e-9 * self.renewal.dt();
        if x.abs() <= eps {
            (self.renewal.samples(i, j)[0], true)
        } else {
            (self.renewal.continuous(i, j, x), false)
        }
    }
}

enum NodeState {
    Zero,
    Pinned { t: f64, j: usize, value: f64 },
    Free { klo: i64, values: Vec<f64> },
}

/// One-shot density evaluation with default options.
pub fn cumulant_density(model: &HawkesModel, renewal: &RenewalDensity, query: &CumulantQuery) -> Result<DensityValue> {
    CumulantDensity::new(model, renewal, DensityOptions::default())?.evaluate(query)
}
