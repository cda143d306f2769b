//! Empirical cumulants of event streams.
//!
//! - [`joint_cumulant`]: plug-in joint cumulant of aligned samples through
//!   the set-partition formula, with a leave-one-out jackknife error.
//! - [`empirical_integrated_cumulant`]: count cumulants over interior bins
//!   of width `W`, divided by `W`.
//! - [`covariance_density_estimate`]: pair-count histogram minus the rate
//!   product.
//! - [`same_cluster_coincidence`]: histogram of event tuples drawn from a
//!   single cluster, order two or three, with no subtraction.

use std::collections::HashMap;

use num_traits::Num;
use serde::Serialize;

use crate::error::{HawkesError, Result};
use crate::partitions::partitions_of_mask;
use crate::simulate::{Event, EventStream};

/// Highest order accepted by [`joint_cumulant`].
pub const MAX_SAMPLE_ORDER: usize = 6;
/// Fewest samples (bins) accepted by the cumulant estimators.
pub const MIN_SAMPLES: usize = 30;
/// Time blocks used for batch means and block jackknife.
pub const DEFAULT_BLOCKS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeMethod {
    Jackknife,
    BlockJackknife,
    BatchMeans,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
    pub n_samples: usize,
    pub method: SeMethod,
}

impl Estimate {
    /// `|value - target| <= k * se`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.se
    }

    pub fn z_score(&self, target: f64) -> f64 {
        (self.value - target) / self.se
    }
}

fn small_int<T: Num + Clone>(k: i64) -> T {
    let mut out = T::zero();
    for _ in 0..k.unsigned_abs() {
        out = out + T::one();
    }
    if k < 0 {
        T::zero() - out
    } else {
        out
    }
}

fn partition_coefficient<T: Num + Clone>(blocks: usize) -> T {
    // (-1)^(b-1) (b-1)!
    let f: i64 = (1..blocks as i64).product();
    small_int(if blocks % 2 == 1 { f } else { -f })
}

/// Joint cumulants of every subset from joint moments of every subset.
///
/// Both slices are indexed by subset mask over `n` variables; entry 0 is
/// the empty moment (one) or empty cumulant (zero).
pub fn cumulants_from_moments<T: Num + Clone>(moments: &[T], n: usize) -> Vec<T> {
    assert_eq!(moments.len(), 1 << n);
    let mut out = vec![T::zero(); 1 << n];
    for (mask, slot) in out.iter_mut().enumerate().skip(1) {
        let mut acc = T::zero();
        for part in partitions_of_mask(mask as u32) {
            let mut term: T = partition_coefficient(part.len());
            for b in &part {
                term = term * moments[*b as usize].clone();
            }
            acc = acc + term;
        }
        *slot = acc;
    }
    out
}

/// Joint moments of every subset from joint cumulants of every subset.
pub fn moments_from_cumulants<T: Num + Clone>(cumulants: &[T], n: usize) -> Vec<T> {
    assert_eq!(cumulants.len(), 1 << n);
    let mut out = vec![T::zero(); 1 << n];
    out[0] = T::one();
    for (mask, slot) in out.iter_mut().enumerate().skip(1) {
        let mut acc = T::zero();
        for part in partitions_of_mask(mask as u32) {
            let mut term = T::one();
            for b in &part {
                term = term * cumulants[*b as usize].clone();
            }
            acc = acc + term;
        }
        *slot = acc;
    }
    out
}

/// Empirical product moments `mean(prod_{k in B} x_k)` for every subset
/// `B` of the columns.
pub fn product_moments<T: Num + Clone>(samples: &[Vec<T>]) -> Vec<T> {
    let n = samples.len();
    let len = samples.first().map_or(0, |s| s.len());
    let mut sums = vec![T::zero(); 1 << n];
    let mut prod = vec![T::one(); 1 << n];
    for t in 0..len {
        for mask in 1..(1usize << n) {
            let low = mask.trailing_zeros() as usize;
            prod[mask] = prod[mask & (mask - 1)].clone() * samples[low][t].clone();
            sums[mask] = sums[mask].clone() + prod[mask].clone();
        }
    }
    let count: T = small_int(len as i64);
    sums[0] = count.clone();
    sums.into_iter().map(|s| s / count.clone()).collect()
}

fn check_samples(samples: &[&[f64]]) -> Result<usize> {
    let n = samples.len();
    if n == 0 {
        return Err(HawkesError::Input("joint cumulant of zero variables".into()));
    }
    if n > MAX_SAMPLE_ORDER {
        return Err(HawkesError::Size { n, max: MAX_SAMPLE_ORDER });
    }
    let len = samples[0].len();
    if samples.iter().any(|s| s.len() != len) {
        return Err(HawkesError::Input("sample sequences differ in length".into()));
    }
    if len < MIN_SAMPLES {
        return Err(HawkesError::Window(format!("{len} samples, need at least {MIN_SAMPLES}")));
    }
    Ok(len)
}

/// Plug-in joint cumulant `k(X_1, .., X_n)` with jackknife standard error.
pub fn joint_cumulant(samples: &[&[f64]]) -> Result<Estimate> {
    let len = check_samples(samples)?;
    let n = samples.len();
    let nf = len as f64;
    // Centering leaves cumulants of order >= 2 unchanged and tames rounding.
    let means: Vec<f64> = samples.iter().map(|s| s.iter().sum::<f64>() / nf).collect();
    if n == 1 {
        let var = samples[0].iter().map(|x| (x - means[0]).powi(2)).sum::<f64>() / (nf - 1.0);
        return Ok(Estimate { value: means[0], se: (var / nf).sqrt(), n_samples: len, method: SeMethod::Jackknife });
    }
    let full = (1u32 << n) - 1;
    let parts = partitions_of_mask(full);
    let coef: Vec<f64> = parts.iter().map(|p| partition_coefficient(p.len())).collect();
    let kappa = |m: &[f64]| -> f64 {
        parts
            .iter()
            .zip(&coef)
            .map(|(p, c)| c * p.iter().map(|b| m[*b as usize]).product::<f64>())
            .sum()
    };

    let products = |t: usize, prod: &mut [f64]| {
        prod[0] = 1.0;
        for mask in 1..(1usize << n) {
            let low = mask.trailing_zeros() as usize;
            prod[mask] = prod[mask & (mask - 1)] * (samples[low][t] - means[low]);
        }
    };
    let mut sums = vec![0.0; 1 << n];
    let mut prod = vec![0.0; 1 << n];
    for t in 0..len {
        products(t, &mut prod);
        for (s, p) in sums.iter_mut().zip(&prod) {
            *s += p;
        }
    }
    let m: Vec<f64> = sums.iter().map(|s| s / nf).collect();
    let value = kappa(&m);

    let mut loo = Vec::with_capacity(len);
    let mut m_out = vec![0.0; 1 << n];
    for t in 0..len {
        products(t, &mut prod);
        for mask in 0..(1usize << n) {
            m_out[mask] = (sums[mask] - prod[mask]) / (nf - 1.0);
        }
        loo.push(kappa(&m_out));
    }
    let mean_loo = loo.iter().sum::<f64>() / nf;
    let se = ((nf - 1.0) / nf * loo.iter().map(|v| (v - mean_loo).powi(2)).sum::<f64>()).sqrt();
    Ok(Estimate { value, se, n_samples: len, method: SeMethod::Jackknife })
}

/// Event counts per type on consecutive bins of equal width.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedCounts {
    pub width: f64,
    pub start: f64,
    /// `counts[b][i]`.
    pub counts: Vec<Vec<u64>>,
}

impl BinnedCounts {
    /// Bins of width `width` tiling `[margin, T_obs - margin]` from the left.
    pub fn from_stream(stream: &EventStream, width: f64, margin: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(HawkesError::Input(format!("bin width {width} must be positive")));
        }
        let (a, b) = (margin.max(0.0), stream.t_obs - margin.max(0.0));
        let bins = if b > a { ((b - a) / width).floor() as usize } else { 0 };
        if bins < MIN_SAMPLES {
            return Err(HawkesError::Window(format!(
                "{bins} interior bins of width {width} in [{a}, {b}], need at least {MIN_SAMPLES}"
            )));
        }
        let mut counts = vec![vec![0u64; stream.dim]; bins];
        for e in stream.window(a, a + bins as f64 * width) {
            let k = (((e.time - a) / width).floor() as usize).min(bins - 1);
            counts[k][e.kind] += 1;
        }
        Ok(BinnedCounts { width, start: a, counts })
    }

    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn column(&self, kind: usize) -> Vec<f64> {
        self.counts.iter().map(|c| c[kind] as f64).collect()
    }
}

/// Count cumulant over interior bins of width `width`, divided by `width`.
pub fn empirical_integrated_cumulant(
    stream: &EventStream,
    types: &[usize],
    width: f64,
    margin: f64,
) -> Result<Estimate> {
    if let Some(t) = types.iter().find(|t| **t >= stream.dim) {
        return Err(HawkesError::Input(format!("type {} out of range", t + 1)));
    }
    let binned = BinnedCounts::from_stream(stream, width, margin)?;
    let cols: Vec<Vec<f64>> = types.iter().map(|&t| binned.column(t)).collect();
    let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
    let est = joint_cumulant(&refs)?;
    Ok(Estimate { value: est.value / width, se: est.se / width, ..est })
}

/// Estimate against bin width: the count cumulant per unit time should
/// settle once `W` exceeds the correlation time.
pub fn integrated_cumulant_scan(
    stream: &EventStream,
    types: &[usize],
    widths: &[f64],
    margin: f64,
) -> Vec<(f64, Result<Estimate>)> {
    widths
        .iter()
        .map(|&w| (w, empirical_integrated_cumulant(stream, types, w, margin)))
        .collect()
}

/// Per-type event rates on `[a, b)` with batch-means errors.
pub fn empirical_rates(stream: &EventStream, a: f64, b: f64, blocks: usize) -> Result<Vec<Estimate>> {
    let len = (b - a) / blocks as f64;
    if !(len > 0.0) || blocks < 2 {
        return Err(HawkesError::Window(format!("empty rate window [{a}, {b})")));
    }
    let mut per_block = vec![vec![0.0; blocks]; stream.dim];
    for e in stream.window(a, b) {
        let k = (((e.time - a) / len) as usize).min(blocks - 1);
        per_block[e.kind][k] += 1.0 / len;
    }
    Ok(per_block.iter().map(|v| batch_means(v)).collect())
}

fn batch_means(values: &[f64]) -> Estimate {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Estimate { value: mean, se: (var / n).sqrt(), n_samples: values.len(), method: SeMethod::BatchMeans }
}

/// Half-open lag bins `[edges[k], edges[k+1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagBins {
    pub edges: Vec<f64>,
}

impl LagBins {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) || edges.iter().any(|e| !e.is_finite()) {
            return Err(HawkesError::Input("lag bin edges must be finite and increasing".into()));
        }
        Ok(LagBins { edges })
    }

    /// Bins of width `step` from `lo` up to at least `hi`.
    pub fn uniform(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && hi > lo) {
            return Err(HawkesError::Input(format!("bad lag grid [{lo}, {hi}] step {step}")));
        }
        let n = ((hi - lo) / step - 1e-9).ceil().max(1.0) as usize;
        Self::new((0..=n).map(|k| lo + k as f64 * step).collect())
    }

    pub fn len(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lo(&self) -> f64 {
        self.edges[0]
    }

    pub fn hi(&self) -> f64 {
        *self.edges.last().expect("at least two edges")
    }

    pub fn width(&self, k: usize) -> f64 {
        self.edges[k + 1] - self.edges[k]
    }

    pub fn find(&self, x: f64) -> Option<usize> {
        if x < self.lo() || x >= self.hi() {
            return None;
        }
        Some(self.edges.partition_point(|e| *e <= x) - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairFilter {
    All,
    SameCluster,
    DifferentCluster,
}

/// Reference window for tuples whose lags span `[lag_lo, lag_hi]`, so that
/// every partner of a reference event lies in `[margin, T_obs]`.
fn reference_window(stream: &EventStream, lag_lo: f64, lag_hi: f64, margin: f64, blocks: usize) -> Result<(f64, f64)> {
    let a = margin.max(0.0) + (-lag_lo).max(0.0);
    let b = stream.t_obs - lag_hi.max(0.0);
    if !(b > a) || blocks < 2 {
        return Err(HawkesError::Window(format!(
            "no room for lags [{lag_lo}, {lag_hi}] with margin {margin} in [0, {}]",
            stream.t_obs
        )));
    }
    Ok((a, b))
}

fn block_of(t: f64, a: f64, b: f64, blocks: usize) -> usize {
    (((t - a) / (b - a) * blocks as f64) as usize).min(blocks - 1)
}

/// Raw ordered-pair counts per block and lag bin: reference event of type
/// `i` at `t1` in `[a, b)`, partner of type `j` at `t1 + lag`.
fn pair_counts(
    stream: &EventStream,
    i: usize,
    j: usize,
    bins: &LagBins,
    filter: PairFilter,
    window: (f64, f64),
    blocks: usize,
) -> Result<Vec<Vec<f64>>> {
    if filter != PairFilter::All && !stream.has_lineage() {
        return Err(HawkesError::Lineage);
    }
    let (a, b) = window;
    let ev = &stream.events;
    let mut counts = vec![vec![0.0; bins.len()]; blocks];
    let lo_start = ev.partition_point(|e| e.time < a);
    let hi_end = ev.partition_point(|e| e.time < b);
    for r in lo_start..hi_end {
        let e1 = &ev[r];
        if e1.kind != i {
            continue;
        }
        let blk = block_of(e1.time, a, b, blocks);
        let from = ev.partition_point(|e| e.time < e1.time + bins.lo());
        for (s, e2) in ev.iter().enumerate().skip(from) {
            let lag = e2.time - e1.time;
            if lag >= bins.hi() {
                break;
            }
            if s == r || e2.kind != j {
                continue;
            }
            let same = cluster_of(e1) == cluster_of(e2);
            let keep = match filter {
                PairFilter::All => true,
                PairFilter::SameCluster => same,
                PairFilter::DifferentCluster => !same,
            };
            if keep {
                if let Some(k) = bins.find(lag) {
                    counts[blk][k] += 1.0;
                }
            }
        }
    }
    Ok(counts)
}

fn cluster_of(e: &Event) -> Option<u64> {
    e.lineage.map(|l| l.cluster_id)
}

/// Pair-count rate density `(pairs in bin) / (T_eff h)` for the chosen
/// filter, with batch-means errors over reference-time blocks.
pub fn pair_rate_histogram(
    stream: &EventStream,
    i: usize,
    j: usize,
    bins: &LagBins,
    filter: PairFilter,
    margin: f64,
) -> Result<Vec<Estimate>> {
    let blocks = DEFAULT_BLOCKS;
    let window = reference_window(stream, bins.lo(), bins.hi(), margin, blocks)?;
    let counts = pair_counts(stream, i, j, bins, filter, window, blocks)?;
    let block_len = (window.1 - window.0) / blocks as f64;
    Ok((0..bins.len())
        .map(|k| {
            let v: Vec<f64> = counts.iter().map(|c| c[k] / (block_len * bins.width(k))).collect();
            batch_means(&v)
        })
        .collect())
}

/// Covariance density `c^{ij}(tau)`: pair-count rate minus the product of
/// estimated rates, with a delete-one-block jackknife error that also
/// covers the rate estimates.
pub fn covariance_density_estimate(
    stream: &EventStream,
    i: usize,
    j: usize,
    bins: &LagBins,
    margin: f64,
) -> Result<Vec<Estimate>> {
    let blocks = DEFAULT_BLOCKS;
    let window = reference_window(stream, bins.lo(), bins.hi(), margin, blocks)?;
    let (a, b) = window;
    let counts = pair_counts(stream, i, j, bins, PairFilter::All, window, blocks)?;
    let block_len = (b - a) / blocks as f64;
    // rates of i over the reference blocks; partners of type j over the
    // same blocks, which estimates the same stationary rate
    let mut n_i = vec![0.0; blocks];
    let mut n_j = vec![0.0; blocks];
    for e in stream.window(a, b) {
        let blk = block_of(e.time, a, b, blocks);
        if e.kind == i {
            n_i[blk] += 1.0;
        }
        if e.kind == j {
            n_j[blk] += 1.0;
        }
    }
    let tot_i: f64 = n_i.iter().sum();
    let tot_j: f64 = n_j.iter().sum();
    let bf = blocks as f64;
    Ok((0..bins.len())
        .map(|k| {
            let h = bins.width(k);
            let tot_c: f64 = counts.iter().map(|c| c[k]).sum();
            let full_len = b - a;
            let value = tot_c / (full_len * h) - (tot_i / full_len) * (tot_j / full_len);
            let loo: Vec<f64> = (0..blocks)
                .map(|q| {
                    let len = full_len - block_len;
                    (tot_c - counts[q][k]) / (len * h) - ((tot_i - n_i[q]) / len) * ((tot_j - n_j[q]) / len)
                })
                .collect();
            let mean = loo.iter().sum::<f64>() / bf;
            let se = ((bf - 1.0) / bf * loo.iter().map(|v| (v - mean).powi(2)).sum::<f64>()).sqrt();
            Estimate { value, se, n_samples: blocks, method: SeMethod::BlockJackknife }
        })
        .collect())
}

/// Rate density of event tuples from a single cluster.
///
/// Order two takes one lag grid and counts ordered pairs `(e1, e2)` of
/// distinct events with types `types[0], types[1]` and `t2 - t1` in a bin.
/// Order three takes two grids and counts ordered triples of distinct
/// events by `(t2 - t1, t3 - t1)`; results are row-major over the first
/// grid. Counts are divided by `T_eff` times the bin volume.
pub fn same_cluster_coincidence(
    stream: &EventStream,
    types: &[usize],
    bins: &[LagBins],
    margin: f64,
) -> Result<Vec<Estimate>> {
    let n = types.len();
    if !(2..=3).contains(&n) || bins.len() != n - 1 {
        return Err(HawkesError::Input("coincidence histograms need order 2 or 3 with one lag grid per partner".into()));
    }
    if let Some(t) = types.iter().find(|t| **t >= stream.dim) {
        return Err(HawkesError::Input(format!("type {} out of range", t + 1)));
    }
    if !stream.has_lineage() {
        return Err(HawkesError::Lineage);
    }
    let blocks = DEFAULT_BLOCKS;
    let lag_lo = bins.iter().map(|b| b.lo()).fold(f64::INFINITY, f64::min);
    let lag_hi = bins.iter().map(|b| b.hi()).fold(f64::NEG_INFINITY, f64::max);
    let (a, b) = reference_window(stream, lag_lo, lag_hi, margin, blocks)?;

    let mut members: HashMap<u64, Vec<usize>> = HashMap::new();
    for (r, e) in stream.events.iter().enumerate() {
        members.entry(cluster_of(e).expect("lineage checked")).or_default().push(r);
    }
    let cells: usize = bins.iter().map(|b| b.len()).product();
    let mut counts = vec![vec![0.0; cells]; blocks];
    let ev = &stream.events;
    for r in ev.partition_point(|e| e.time < a)..ev.partition_point(|e| e.time < b) {
        let e1 = &ev[r];
        if e1.kind != types[0] {
            continue;
        }
        let blk = block_of(e1.time, a, b, blocks);
        let cluster = &members[&cluster_of(e1).expect("lineage checked")];
        for &s in cluster {
            if s == r || ev[s].kind != types[1] {
                continue;
            }
            let Some(k2) = bins[0].find(ev[s].time - e1.time) else { continue };
            if n == 2 {
                counts[blk][k2] += 1.0;
                continue;
            }
            for &u in cluster {
                if u == r || u == s || ev[u].kind != types[2] {
                    continue;
                }
                if let Some(k3) = bins[1].find(ev[u].time - e1.time) {
                    counts[blk][k2 * bins[1].len() + k3] += 1.0;
                }
            }
        }
    }
    let block_len = (b - a) / blocks as f64;
    Ok((0..cells)
        .map(|c| {
            let vol = if n == 2 {
                bins[0].width(c)
            } else {
                bins[0].width(c / bins[1].len()) * bins[1].width(c % bins[1].len())
            };
            let v: Vec<f64> = counts.iter().map(|cnt| cnt[c] / (block_len * vol)).collect();
            batch_means(&v)
        })
        .collect())
}

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> (f64, f64) {
    let mut a = x.to_vec();
    let mut b = y.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < n && j < m {
        let v = a[i].min(b[j]);
        while i < n && a[i] <= v {
            i += 1;
        }
        while j < m && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    (d, kolmogorov_q(lambda))
}

/// Survival function of the Kolmogorov distribution.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariance_is_sample_covariance() {
        let x: Vec<f64> = (0..40).map(|k| (k as f64 * 0.37).sin()).collect();
        let y: Vec<f64> = (0..40).map(|k| (k as f64 * 0.11).cos() + x[k]).collect();
        let e = joint_cumulant(&[&x, &y]).unwrap();
        let (mx, my) = (x.iter().sum::<f64>() / 40.0, y.iter().sum::<f64>() / 40.0);
        let cov = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / 40.0;
        assert!((e.value - cov).abs() < 1e-14);
        assert!(e.se > 0.0);
    }

    #[test]
    fn constants_have_no_higher_cumulants() {
        let c = vec![2.5; 50];
        for n in 2..=4 {
            let cols: Vec<&[f64]> = (0..n).map(|_| c.as_slice()).collect();
            assert_eq!(joint_cumulant(&cols).unwrap().value, 0.0);
        }
    }

    #[test]
    fn rejects_bad_sample_shapes() {
        let x = vec![1.0; 50];
        assert!(matches!(joint_cumulant(&[x.as_slice(); 7]), Err(HawkesError::Size { .. })));
        assert!(matches!(joint_cumulant(&[&x[..10]]), Err(HawkesError::Window(_))));
        assert!(joint_cumulant(&[&x, &x[..40]]).is_err());
    }

    #[test]
    fn lag_bins_lookup() {
        let b = LagBins::uniform(-1.0, 1.0, 0.5).unwrap();
        assert_eq!(b.len(), 4);
        assert_eq!(b.find(-1.0), Some(0));
        assert_eq!(b.find(0.0), Some(2));
        assert_eq!(b.find(0.99), Some(3));
        assert_eq!(b.find(1.0), None);
    }

    #[test]
    fn ks_detects_shift() {
        let x: Vec<f64> = (0..500).map(|k| k as f64 / 500.0).collect();
        let y: Vec<f64> = x.iter().map(|v| v + 0.3).collect();
        let (_, p_same) = ks_two_sample(&x, &x);
        let (d, p_diff) = ks_two_sample(&x, &y);
        assert!(p_same > 0.99);
        assert!((d - 0.3).abs() < 0.01 && p_diff < 1e-6);
    }
}
