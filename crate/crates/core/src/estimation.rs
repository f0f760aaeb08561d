//! Empirical means and upper confidence bounds on attraction probabilities.
//!
//! The KL-UCB index is the largest `q ∈ [ŵ, 1]` with `s · kl(ŵ, q) <= τ`.
//! It is computed by bisection over the dyadic grid `{k / 2^30}`: the result
//! is the largest feasible grid point in `[ŵ, 1]` (or `ŵ` itself when none
//! is feasible). Because the answer is defined on a fixed grid, any valid
//! bracket yields the same value, which lets [`KlUcbIndex`] warm-start the
//! search from the previous step without changing a single selection.

use crate::error::{Error, Result};
use crate::model::{top_by_score, ItemId};

/// Observation count `T(e)` and number of observed ones for one item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ItemStats {
    count: u64,
    ones: u64,
}

impl ItemStats {
    pub fn new(count: u64, ones: u64) -> Self {
        assert!(ones <= count, "ones ({ones}) exceed count ({count})");
        Self { count, ones }
    }

    /// A single observation, as set up by the initial sample `w₀`.
    pub fn from_observation(observation: bool) -> Self {
        Self::default().update_mean(observation)
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn ones(&self) -> u64 {
        self.ones
    }

    /// `ŵ(e)`; zero (and meaningless) before the first observation.
    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.ones as f64 / self.count as f64
        }
    }

    /// Running-average update with one 0/1 observation.
    #[must_use]
    pub fn update_mean(self, observation: bool) -> Self {
        Self {
            count: self.count + 1,
            ones: self.ones + u64::from(observation),
        }
    }
}

/// `c_{t,s} = sqrt(1.5 ln t / s)`.
pub fn ucb1_radius(t: u64, s: u64) -> f64 {
    assert!(t >= 1 && s >= 1, "ucb1_radius needs t >= 1 and s >= 1");
    (1.5 * (t as f64).ln() / s as f64).sqrt()
}

/// Bernoulli KL divergence `kl(p, q)` with the usual boundary conventions.
pub fn bernoulli_kl(p: f64, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid(format!(
            "kl({p}, {q}): arguments must lie in [0, 1]"
        )));
    }
    Ok(kl(p, q))
}

pub(crate) fn kl(p: f64, q: f64) -> f64 {
    fn term(a: f64, b: f64) -> f64 {
        if a == 0.0 {
            0.0
        } else if b == 0.0 {
            f64::INFINITY
        } else {
            a * (a / b).ln()
        }
    }
    term(p, q) + term(1.0 - p, 1.0 - q)
}

/// `ln t + 3 ln(max(1, ln t))`.
pub fn klucb_threshold(t: u64) -> f64 {
    let log_t = (t.max(1) as f64).ln();
    log_t + 3.0 * log_t.max(1.0).ln()
}

const GRID_BITS: u32 = 30;
const GRID_TOP: u64 = 1 << GRID_BITS;
const GRID: f64 = GRID_TOP as f64;

/// Resolution of the KL-UCB search, `2^-30 < 1e-9`.
pub const KLUCB_TOLERANCE: f64 = 1.0 / GRID;

/// `s · kl(m, ·)` specialised for repeated evaluation at fixed `m`.
struct ScaledKl {
    mean: f64,
    count: f64,
    threshold: f64,
    entropy: f64,
}

impl ScaledKl {
    fn new(mean: f64, count: u64, threshold: f64) -> Self {
        let xlogx = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
        Self {
            mean,
            count: count as f64,
            threshold,
            entropy: xlogx(mean) + xlogx(1.0 - mean),
        }
    }

    fn value(&self, q: f64) -> f64 {
        if q == self.mean {
            return 0.0;
        }
        let head = if self.mean > 0.0 {
            self.mean * q.ln()
        } else {
            0.0
        };
        let tail = if self.mean < 1.0 {
            (1.0 - self.mean) * (1.0 - q).ln()
        } else {
            0.0
        };
        let d = self.entropy - head - tail;
        if d.is_nan() {
            f64::INFINITY
        } else {
            d.max(0.0)
        }
    }

    fn feasible(&self, k: u64) -> bool {
        self.count * self.value(k as f64 / GRID) <= self.threshold
    }
}

/// Largest feasible grid index in `[first, GRID_TOP]`, given `lo` feasible
/// and `hi` infeasible (`GRID_TOP + 1` stands for "past the end").
fn bisect(f: &ScaledKl, mut lo: u64, mut hi: u64) -> u64 {
    // at most 31 halvings for a 2^30-point grid
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if f.feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn klucb_search(mean: f64, count: u64, threshold: f64, hint: Option<(u64, u64)>) -> f64 {
    assert!(count >= 1, "KL-UCB index needs at least one observation");
    debug_assert!((0.0..=1.0).contains(&mean));
    if mean >= 1.0 {
        return 1.0;
    }
    if threshold <= 0.0 {
        return mean;
    }
    let f = ScaledKl::new(mean, count, threshold.max(0.0));
    let first = (mean * GRID).ceil() as u64;
    if !f.feasible(first) {
        return mean;
    }
    let past_end = GRID_TOP + 1;
    // Pinsker: s·kl(m, q) >= 2 s (q - m)^2, so nothing feasible lies past m + sqrt(τ / 2s).
    let pinsker = mean + (f.threshold / (2.0 * f.count)).sqrt();
    let cold_hi = ((pinsker * GRID).floor() as u64).saturating_add(2).min(past_end);
    let (mut lo, mut hi) = (first, cold_hi);
    if hi <= GRID_TOP && f.feasible(hi) {
        hi = past_end;
    }
    if let Some((hint_lo, hint_hi)) = hint {
        if hint_lo > lo && hint_lo < hi && f.feasible(hint_lo) {
            lo = hint_lo;
        }
        if hint_hi > lo && hint_hi < hi && !f.feasible(hint_hi) {
            hi = hint_hi;
        }
    }
    bisect(&f, lo, hi) as f64 / GRID
}

/// KL-UCB index: the largest `q ∈ [mean, 1]` with `count · kl(mean, q) <= threshold`,
/// to within [`KLUCB_TOLERANCE`] from below. Exactly 1 only when `mean == 1`.
pub fn klucb_upper(mean: f64, count: u64, threshold: f64) -> f64 {
    klucb_search(mean, count, threshold, None)
}

#[derive(Debug, Clone, Copy)]
struct CachedIndex {
    stats: ItemStats,
    threshold: f64,
    value: f64,
}

impl CachedIndex {
    /// Upper bound on the index of the same stats at a larger threshold.
    ///
    /// `g(q) = s·kl(m, q)` is convex and increasing on `[m, 1)`, so the root
    /// moves by at most `Δτ / g'(q)` for any `q` below the old root.
    fn upper_bound(&self, threshold: f64) -> f64 {
        let grown = threshold - self.threshold;
        if grown <= 0.0 {
            return self.value;
        }
        let mean = self.stats.mean();
        let q = self.value;
        if q >= 1.0 {
            return 1.0;
        }
        let slope = self.stats.count as f64 * (q - mean) / (q * (1.0 - q));
        if slope.is_nan() || slope <= 0.0 {
            return f64::INFINITY;
        }
        q + KLUCB_TOLERANCE + grown / slope * (1.0 + 1e-9) + 1e-12
    }
}

/// KL-UCB indices of a set of items, cached across steps.
///
/// [`KlUcbIndex::top`] returns the same items, order and values as computing
/// [`klucb_upper`] for every item and sorting, but refreshes only the items
/// whose index could still reach the top `k`.
#[derive(Debug, Clone, Default)]
pub struct KlUcbIndex {
    cache: Vec<Option<CachedIndex>>,
}

impl KlUcbIndex {
    pub fn new(num_items: usize) -> Self {
        Self {
            cache: vec![None; num_items],
        }
    }

    fn refresh(&mut self, item: usize, stats: ItemStats, threshold: f64) -> f64 {
        let hint = match self.cache[item] {
            Some(c) if c.stats == stats && c.threshold == threshold => return c.value,
            Some(c) if c.stats == stats && c.threshold < threshold => {
                let lo = (c.value * GRID) as u64;
                let hi = (c.upper_bound(threshold) * GRID).ceil();
                let hi = if hi.is_finite() { hi as u64 + 1 } else { GRID_TOP + 1 };
                // lo is only a valid hint when the cached value sits on the grid
                ((lo as f64 / GRID) == c.value).then_some((lo, hi))
            }
            _ => None,
        };
        let value = klucb_search(stats.mean(), stats.count, threshold, hint);
        self.cache[item] = Some(CachedIndex {
            stats,
            threshold,
            value,
        });
        value
    }

    /// The `k` items with the largest index at `threshold`, by decreasing
    /// index with ties broken by ascending item id, paired with their index.
    ///
    /// Thresholds must be nondecreasing across calls.
    pub fn top(&mut self, stats: &[ItemStats], threshold: f64, k: usize) -> Vec<(ItemId, f64)> {
        assert_eq!(stats.len(), self.cache.len());
        assert!(k >= 1 && k <= stats.len());
        let mut lower = Vec::with_capacity(stats.len());
        let mut upper = Vec::with_capacity(stats.len());
        for (e, &s) in stats.iter().enumerate() {
            match self.cache[e] {
                Some(c) if c.stats == s && c.threshold <= threshold => {
                    lower.push(c.value);
                    upper.push(c.upper_bound(threshold));
                }
                _ => {
                    let v = self.refresh(e, s, threshold);
                    lower.push(v);
                    upper.push(v);
                }
            }
        }
        let mut sorted = lower.clone();
        sorted.sort_unstable_by(|a, b| b.total_cmp(a));
        let cutoff = sorted[k - 1];

        let mut candidates: Vec<(ItemId, f64)> = Vec::new();
        for (e, &s) in stats.iter().enumerate() {
            if upper[e] >= cutoff {
                candidates.push((ItemId(e), self.refresh(e, s, threshold)));
            }
        }
        candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        candidates.truncate(k);
        candidates
    }

    /// Uncached reference: every index computed from scratch.
    pub fn top_uncached(stats: &[ItemStats], threshold: f64, k: usize) -> Vec<(ItemId, f64)> {
        let values: Vec<f64> = stats
            .iter()
            .map(|s| klucb_upper(s.mean(), s.count, threshold))
            .collect();
        top_by_score(&values, k)
            .into_iter()
            .map(|e| (e, values[e.0]))
            .collect()
    }
}
