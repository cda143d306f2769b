//! Samplers for stationary Hawkes event streams.
//!
//! [`simulate_clusters`] builds the process from Poisson immigrants and
//! their independent offspring cascades, recording for every event its
//! cluster, parent and generation. [`simulate_thinning`] samples the same
//! law by rejection from the conditional rate and carries no lineage.
//!
//! Both start at `-burn_in` so that the window `[0, T_obs]` is close to
//! stationary. Events in the burn-in are kept, which keeps parent rows
//! valid; estimators only look at `[0, T_obs]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Exp1, Poisson};

use crate::error::{HawkesError, Result};
use crate::exec::Execution;
use crate::io::model_hash;
use crate::model::{HawkesModel, Kernel};

pub const DEFAULT_EVENT_CAP: usize = 1_000_000;

/// Stream reserved for the thinning sampler, away from the cluster streams.
const THINNING_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lineage {
    pub cluster_id: u64,
    /// Row of the parent in the same stream; `None` for immigrants.
    pub parent: Option<usize>,
    pub generation: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    /// Zero-based type.
    pub kind: usize,
    pub lineage: Option<Lineage>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    pub events: Vec<Event>,
    pub dim: usize,
    pub t_obs: f64,
    pub burn_in: f64,
    pub seed: Option<u64>,
    pub model_hash: Option<String>,
}

impl EventStream {
    /// Wraps already sorted events, checking order and parent rows.
    pub fn from_events(events: Vec<Event>, dim: usize, t_obs: f64) -> Result<Self> {
        if !(t_obs.is_finite() && t_obs > 0.0) {
            return Err(HawkesError::Input(format!("observation window {t_obs} must be positive")));
        }
        for (r, w) in events.windows(2).enumerate() {
            if w[1].time < w[0].time {
                return Err(HawkesError::Input(format!("events not sorted by time at row {}", r + 1)));
            }
        }
        for (r, e) in events.iter().enumerate() {
            if e.kind >= dim {
                return Err(HawkesError::Input(format!("type {} out of range at row {r}", e.kind + 1)));
            }
            if let Some(Lineage { parent: Some(p), .. }) = e.lineage {
                if p >= events.len() || events[p].time >= e.time {
                    return Err(HawkesError::Input(format!("row {r} has an invalid parent row {p}")));
                }
            }
        }
        let burn_in = events.first().map_or(0.0, |e| (-e.time).max(0.0));
        Ok(EventStream { events, dim, t_obs, burn_in, seed: None, model_hash: None })
    }

    pub fn has_lineage(&self) -> bool {
        !self.events.is_empty() && self.events.iter().all(|e| e.lineage.is_some())
    }

    /// Times of type `kind` events inside `[a, b)`, in order.
    pub fn times_in(&self, kind: usize, a: f64, b: f64) -> Vec<f64> {
        self.events
            .iter()
            .filter(|e| e.kind == kind && e.time >= a && e.time < b)
            .map(|e| e.time)
            .collect()
    }

    /// Events inside `[a, b)`.
    pub fn window(&self, a: f64, b: f64) -> &[Event] {
        let lo = self.events.partition_point(|e| e.time < a);
        let hi = self.events.partition_point(|e| e.time < b);
        &self.events[lo..hi]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimulationOptions {
    pub event_cap: usize,
    pub exec: Execution,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        SimulationOptions { event_cap: DEFAULT_EVENT_CAP, exec: Execution::default() }
    }
}

pub fn simulate_clusters(model: &HawkesModel, t_obs: f64, burn_in: f64, seed: u64) -> Result<EventStream> {
    simulate_clusters_with(model, t_obs, burn_in, seed, SimulationOptions::default())
}

/// Cluster sampler.
///
/// Immigrants come from stream 0 of the seed. Cluster `c` (immigrants
/// ordered by time, then type) is grown from its own stream `c + 1`, so
/// the result does not depend on the execution backend.
pub fn simulate_clusters_with(
    model: &HawkesModel,
    t_obs: f64,
    burn_in: f64,
    seed: u64,
    options: SimulationOptions,
) -> Result<EventStream> {
    check_window(t_obs, burn_in)?;
    let d = model.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = t_obs + burn_in;
    let mut immigrants = Vec::new();
    for (k, &mu) in model.mu().iter().enumerate() {
        let count = poisson(&mut rng, mu * span);
        for _ in 0..count {
            immigrants.push((-burn_in + span * rng.random::<f64>(), k));
        }
    }
    immigrants.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let samplers: Vec<OffspringSampler> = (0..d * d).map(|idx| OffspringSampler::new(&model.kernels()[idx])).collect();
    let clusters = options.exec.map_range(immigrants.len(), |c| {
        let (t0, k0) = immigrants[c];
        grow_cluster(c as u64, t0, k0, d, &samplers, t_obs, seed, options.event_cap)
    });

    // (time, type, cluster, rank in cluster)
    let mut keys = Vec::new();
    let mut offsets = Vec::with_capacity(clusters.len());
    let mut all = Vec::new();
    for (c, cluster) in clusters.into_iter().enumerate() {
        let cluster = cluster?;
        offsets.push(all.len());
        for (rank, ev) in cluster.iter().enumerate() {
            keys.push((ev.time, ev.kind, c, rank));
        }
        all.extend(cluster);
    }
    keys.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)).then(a.3.cmp(&b.3)));
    let mut row_of = vec![0usize; all.len()];
    for (row, key) in keys.iter().enumerate() {
        row_of[offsets[key.2] + key.3] = row;
    }
    let events = keys
        .iter()
        .map(|&(time, kind, c, rank)| {
            let raw = &all[offsets[c] + rank];
            Event {
                time,
                kind,
                lineage: Some(Lineage {
                    cluster_id: c as u64,
                    parent: raw.parent.map(|p| row_of[offsets[c] + p]),
                    generation: raw.generation,
                }),
            }
        })
        .collect();
    Ok(EventStream {
        events,
        dim: d,
        t_obs,
        burn_in,
        seed: Some(seed),
        model_hash: Some(model_hash(model)),
    })
}

struct RawEvent {
    time: f64,
    kind: usize,
    parent: Option<usize>,
    generation: u32,
}

#[allow(clippy::too_many_arguments)]
fn grow_cluster(
    cluster: u64,
    t0: f64,
    k0: usize,
    d: usize,
    samplers: &[OffspringSampler],
    t_obs: f64,
    seed: u64,
    cap: usize,
) -> Result<Vec<RawEvent>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(cluster + 1);
    let mut out = vec![RawEvent { time: t0, kind: k0, parent: None, generation: 0 }];
    let mut next = 0;
    while next < out.len() {
        let (y, j, g) = (out[next].time, out[next].kind, out[next].generation);
        for i in 0..d {
            let sampler = &samplers[i * d + j];
            if sampler.mean == 0.0 {
                continue;
            }
            let count = poisson(&mut rng, sampler.mean);
            for _ in 0..count {
                let t = y + sampler.delay(&mut rng);
                if t <= t_obs {
                    out.push(RawEvent { time: t, kind: i, parent: Some(next), generation: g + 1 });
                    if out.len() > cap {
                        return Err(HawkesError::Explosion { cluster, cap });
                    }
                }
            }
        }
        next += 1;
    }
    Ok(out)
}

fn check_window(t_obs: f64, burn_in: f64) -> Result<()> {
    if !(t_obs.is_finite() && t_obs > 0.0) {
        return Err(HawkesError::Input(format!("T_obs must be positive, got {t_obs}")));
    }
    if !(burn_in.is_finite() && burn_in >= 0.0) {
        return Err(HawkesError::Input(format!("burn-in must be >= 0, got {burn_in}")));
    }
    Ok(())
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng) as u64
}

/// Offspring count mean and delay distribution for one kernel.
struct OffspringSampler {
    mean: f64,
    delay: Delay,
}

enum Delay {
    None,
    Exp(Exp<f64>),
    /// Grid step, samples and cumulative trapezoid mass at each sample.
    Grid { dt: f64, values: Vec<f64>, cum: Vec<f64> },
}

impl OffspringSampler {
    fn new(kernel: &Kernel) -> Self {
        let mean = kernel.integral();
        if mean == 0.0 {
            return OffspringSampler { mean, delay: Delay::None };
        }
        let delay = match kernel {
            Kernel::Zero => Delay::None,
            Kernel::Exponential { beta, .. } => Delay::Exp(Exp::new(*beta).expect("positive rate")),
            Kernel::Grid { dt, values } => {
                let mut cum = vec![0.0; values.len()];
                for k in 1..values.len() {
                    cum[k] = cum[k - 1] + 0.5 * dt * (values[k - 1] + values[k]);
                }
                Delay::Grid { dt: *dt, values: values.clone(), cum }
            }
        };
        OffspringSampler { mean, delay }
    }

    fn delay(&self, rng: &mut ChaCha8Rng) -> f64 {
        match &self.delay {
            Delay::None => 0.0,
            Delay::Exp(e) => e.sample(rng),
            Delay::Grid { dt, values, cum } => {
                let total = *cum.last().expect("non-empty");
                let r = rng.random::<f64>() * total;
                let k = cum.partition_point(|c| *c <= r).clamp(1, cum.len() - 1) - 1;
                // density a + (b - a) x / dt on the segment; solve for x
                let (a, b) = (values[k], values[k + 1]);
                let target = r - cum[k];
                let slope = (b - a) / dt;
                let x = if slope.abs() < 1e-14 * (a.abs() + b.abs()).max(1e-300) {
                    if a > 0.0 {
                        target / a
                    } else {
                        0.0
                    }
                } else {
                    let disc = (a * a + 2.0 * slope * target).max(0.0);
                    2.0 * target / (a + disc.sqrt())
                };
                dt * k as f64 + x.clamp(0.0, *dt)
            }
        }
    }
}

pub fn simulate_thinning(model: &HawkesModel, t_obs: f64, seed: u64) -> Result<EventStream> {
    simulate_thinning_with(model, t_obs, model.default_burn_in(), seed)
}

/// Ogata thinning from `-burn_in`.
///
/// Exponential kernels keep a decaying state per type pair; grid kernels
/// keep the events still inside their support. Between events the bound is
/// the current rate from exponentials plus suffix maxima of the grid
/// kernels.
pub fn simulate_thinning_with(model: &HawkesModel, t_obs: f64, burn_in: f64, seed: u64) -> Result<EventStream> {
    check_window(t_obs, burn_in)?;
    let d = model.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(THINNING_STREAM);
    let grid_reach = model
        .kernels()
        .iter()
        .filter(|k| matches!(k, Kernel::Grid { .. }))
        .map(|k| k.support_end())
        .fold(0.0, f64::max);
    let has_grid = model.kernels().iter().any(|k| matches!(k, Kernel::Grid { .. }) && !k.is_zero());

    // exp_state[i * d + j] = sum over past type-j events of g_ij(t - t_e)
    let mut exp_state = vec![0.0; d * d];
    let mut recent: std::collections::VecDeque<(f64, usize)> = std::collections::VecDeque::new();
    let mut events = Vec::new();
    let mut t = -burn_in;

    let grid_part = |recent: &std::collections::VecDeque<(f64, usize)>, t: f64, i: usize, bound: bool| -> f64 {
        let mut s = 0.0;
        for &(te, j) in recent {
            let k = model.kernel(i, j);
            if let Kernel::Grid { .. } = k {
                s += if bound { k.sup_from(t - te) } else { k.eval(t - te) };
            }
        }
        s
    };

    loop {
        let mut bound = 0.0;
        for i in 0..d {
            bound += model.mu()[i];
            bound += exp_state[i * d..(i + 1) * d].iter().sum::<f64>();
            if has_grid {
                bound += grid_part(&recent, t, i, true);
            }
        }
        if !(bound.is_finite() && bound > 0.0) {
            return Err(HawkesError::Bound(format!("intensity bound {bound} at t = {t}")));
        }
        let wait = rng.sample::<f64, _>(Exp1) / bound;
        let t_new = t + wait;
        if t_new > t_obs {
            break;
        }
        for i in 0..d {
            for j in 0..d {
                if let Kernel::Exponential { beta, .. } = model.kernel(i, j) {
                    exp_state[i * d + j] *= (-beta * wait).exp();
                }
            }
        }
        t = t_new;
        while recent.front().is_some_and(|&(te, _)| t - te > grid_reach) {
            recent.pop_front();
        }
        let mut rates = vec![0.0; d];
        for (i, r) in rates.iter_mut().enumerate() {
            *r = model.mu()[i] + exp_state[i * d..(i + 1) * d].iter().sum::<f64>();
            if has_grid {
                *r += grid_part(&recent, t, i, false);
            }
        }
        let u = rng.random::<f64>() * bound;
        let mut acc = 0.0;
        let mut accepted = None;
        for (i, r) in rates.iter().enumerate() {
            acc += r;
            if u < acc {
                accepted = Some(i);
                break;
            }
        }
        if let Some(j) = accepted {
            events.push(Event { time: t, kind: j, lineage: None });
            for i in 0..d {
                if let Kernel::Exponential { alpha, beta } = model.kernel(i, j) {
                    exp_state[i * d + j] += alpha * beta;
                }
            }
            if has_grid {
                recent.push_back((t, j));
            }
        }
    }
    Ok(EventStream {
        events,
        dim: d,
        t_obs,
        burn_in,
        seed: Some(seed),
        model_hash: Some(model_hash(model)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_delay_matches_kernel_shape() {
        // triangular density on [0, 2] peaking at 1: mean delay 1
        let k = Kernel::grid(1.0, vec![0.0, 0.5, 0.0]);
        let s = OffspringSampler::new(&k);
        assert!((s.mean - 0.5).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| s.delay(&mut rng)).collect();
        assert!(draws.iter().all(|x| (0.0..=2.0).contains(x)));
        let mean = draws.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
        let below_half = draws.iter().filter(|x| **x < 0.5).count() as f64 / n as f64;
        assert!((below_half - 0.125).abs() < 0.005, "{below_half}");
    }

    #[test]
    fn lineage_is_consistent() {
        let m = HawkesModel::scalar_exponential(1.0, 0.5, 1.0).unwrap();
        let s = simulate_clusters(&m, 200.0, 20.0, 7).unwrap();
        for (r, e) in s.events.iter().enumerate() {
            let l = e.lineage.unwrap();
            match l.parent {
                None => assert_eq!(l.generation, 0),
                Some(p) => {
                    let pe = s.events[p];
                    assert!(p < r && pe.time < e.time);
                    assert_eq!(pe.lineage.unwrap().cluster_id, l.cluster_id);
                    assert_eq!(pe.lineage.unwrap().generation + 1, l.generation);
                }
            }
        }
    }

    #[test]
    fn backends_give_identical_streams() {
        let m = HawkesModel::scalar_exponential(1.0, 0.5, 1.0).unwrap();
        let seq = simulate_clusters_with(&m, 100.0, 10.0, 5, SimulationOptions { exec: Execution::Sequential, ..Default::default() }).unwrap();
        let par = simulate_clusters_with(&m, 100.0, 10.0, 5, SimulationOptions { exec: Execution::Parallel, ..Default::default() }).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn event_cap_triggers_explosion() {
        let m = HawkesModel::scalar_exponential(1.0, 0.99, 1.0).unwrap();
        let err = simulate_clusters_with(&m, 1000.0, 0.0, 1, SimulationOptions { event_cap: 5, ..Default::default() }).unwrap_err();
        assert_eq!(err.exit_code(), 12);
    }
}
