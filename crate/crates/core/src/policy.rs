//! Learning agents.
//!
//! [`CascadeUcb`] recommends the `K` items with the largest upper confidence
//! bounds and learns from every examined position. [`RankedKlUcb`] runs an
//! independent KL-UCB bandit per position. [`Oracle`] always shows the
//! optimal list.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::estimation::{klucb_threshold, klucb_upper, ItemStats, KlUcbIndex};
use crate::model::{
    observed_weights, top_by_score, CascadeFeedback, ItemId, Recommendation, WeightVector,
};

/// How the upper confidence bound `U_t(e)` is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexRule {
    /// `ŵ(e) + sqrt(1.5 ln(t - 1) / T(e))`
    Ucb1,
    /// largest `q` with `T(e) kl(ŵ(e), q) <= ln t + 3 ln ln t`
    KlUcb,
}

/// Order of the selected items in the displayed list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ListOrder {
    #[default]
    DecreasingUcb,
    IncreasingUcb,
}

impl ListOrder {
    pub fn as_str(self) -> &'static str {
        match self {
            ListOrder::DecreasingUcb => "decreasing",
            ListOrder::IncreasingUcb => "increasing",
        }
    }
}

impl FromStr for ListOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "decreasing" => Ok(ListOrder::DecreasingUcb),
            "increasing" => Ok(ListOrder::IncreasingUcb),
            other => Err(Error::config(format!(
                "unknown ordering '{other}' (expected decreasing or increasing)"
            ))),
        }
    }
}

fn check_list_size(k: usize, num_items: usize) -> Result<()> {
    if k == 0 || k > num_items {
        return Err(Error::invalid(format!(
            "cannot recommend K = {k} items out of {num_items}"
        )));
    }
    Ok(())
}

/// CascadeUCB1 / CascadeKL-UCB.
#[derive(Debug, Clone)]
pub struct CascadeUcb {
    rule: IndexRule,
    order: ListOrder,
    k: usize,
    stats: Vec<ItemStats>,
    step: u64,
    kl_index: KlUcbIndex,
}

impl CascadeUcb {
    /// Seeds every item with one observation from `w₀`; the first step is `t = 1`.
    pub fn initialize(rule: IndexRule, order: ListOrder, k: usize, w0: &WeightVector) -> Result<Self> {
        check_list_size(k, w0.len())?;
        Ok(Self {
            rule,
            order,
            k,
            stats: w0.bits().iter().map(|&b| ItemStats::from_observation(b)).collect(),
            step: 1,
            kl_index: KlUcbIndex::new(w0.len()),
        })
    }

    pub fn rule(&self) -> IndexRule {
        self.rule
    }

    pub fn stats(&self) -> &[ItemStats] {
        &self.stats
    }

    /// Current step `t` (the step the next selection is made for).
    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn list_size(&self) -> usize {
        self.k
    }

    fn ucb1_scale(&self) -> f64 {
        // c_{t-1, s}; at t = 1 the radius is taken as c_{1, s} = 0
        1.5 * (self.step.saturating_sub(1).max(1) as f64).ln()
    }

    /// `U_t(e)` for every item, computed from scratch.
    pub fn ucbs(&self) -> Vec<f64> {
        match self.rule {
            IndexRule::Ucb1 => {
                let scale = self.ucb1_scale();
                self.stats
                    .iter()
                    .map(|s| s.mean() + (scale / s.count() as f64).sqrt())
                    .collect()
            }
            IndexRule::KlUcb => {
                let tau = klucb_threshold(self.step);
                self.stats
                    .iter()
                    .map(|s| klucb_upper(s.mean(), s.count(), tau))
                    .collect()
            }
        }
    }

    /// The `K` items with the largest UCBs (ties to the lower index), laid
    /// out in the configured order.
    pub fn select(&mut self) -> Recommendation {
        let mut items: Vec<ItemId> = match self.rule {
            IndexRule::Ucb1 => top_by_score(&self.ucbs(), self.k),
            IndexRule::KlUcb => self
                .kl_index
                .top(&self.stats, klucb_threshold(self.step), self.k)
                .into_iter()
                .map(|(e, _)| e)
                .collect(),
        };
        if self.order == ListOrder::IncreasingUcb {
            items.reverse();
        }
        Recommendation::from_vec_unchecked(items)
    }

    /// Records the examined prefix of `list` and advances `t`.
    pub fn update(&mut self, list: &Recommendation, feedback: CascadeFeedback) {
        for (pos, w) in observed_weights(feedback, list.len()) {
            let e = list.at(pos).index();
            self.stats[e] = self.stats[e].update_mean(w);
        }
        self.step += 1;
    }
}

/// What a ranked-bandit step showed, and what each position asked for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedChoice {
    pub displayed: Recommendation,
    pub proposals: Vec<ItemId>,
}

/// Ranked bandits with a KL-UCB learner per position.
#[derive(Debug, Clone)]
pub struct RankedKlUcb {
    positions: Vec<Vec<ItemStats>>,
    indices: Vec<KlUcbIndex>,
    step: u64,
}

impl RankedKlUcb {
    /// Every position bandit starts from the same one-sample estimate `w₀`.
    pub fn initialize(k: usize, w0: &WeightVector) -> Result<Self> {
        check_list_size(k, w0.len())?;
        let seeded: Vec<ItemStats> = w0.bits().iter().map(|&b| ItemStats::from_observation(b)).collect();
        Ok(Self {
            positions: vec![seeded; k],
            indices: vec![KlUcbIndex::new(w0.len()); k],
            step: 1,
        })
    }

    pub fn position_stats(&self, position: usize) -> &[ItemStats] {
        &self.positions[position - 1]
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn list_size(&self) -> usize {
        self.positions.len()
    }

    /// Each position proposes its KL-UCB argmax; a proposal already shown
    /// higher up is replaced by the lowest-index unshown item.
    pub fn select(&mut self) -> RankedChoice {
        let tau = klucb_threshold(self.step);
        let num_items = self.positions[0].len();
        let mut shown = vec![false; num_items];
        let mut displayed = Vec::with_capacity(self.positions.len());
        let mut proposals = Vec::with_capacity(self.positions.len());
        for (stats, index) in self.positions.iter().zip(&mut self.indices) {
            let proposal = index.top(stats, tau, 1)[0].0;
            let item = if shown[proposal.0] {
                ItemId(shown.iter().position(|&s| !s).expect("K <= L leaves an unshown item"))
            } else {
                proposal
            };
            shown[item.0] = true;
            proposals.push(proposal);
            displayed.push(item);
        }
        RankedChoice {
            displayed: Recommendation::from_vec_unchecked(displayed),
            proposals,
        }
    }

    /// Position `k` scores 1 for its proposal iff the proposal was shown at
    /// `k` and clicked; otherwise it scores 0. Every position updates.
    pub fn update(&mut self, choice: &RankedChoice, clicks: &[usize]) {
        for (k, stats) in self.positions.iter_mut().enumerate() {
            let proposal = choice.proposals[k];
            let credited = proposal == choice.displayed.items()[k] && clicks.contains(&(k + 1));
            stats[proposal.0] = stats[proposal.0].update_mean(credited);
        }
        self.step += 1;
    }

    /// Per-position UCBs computed from scratch (for inspection and tests).
    pub fn ucbs(&self, position: usize) -> Vec<f64> {
        let tau = klucb_threshold(self.step);
        self.positions[position - 1]
            .iter()
            .map(|s| klucb_upper(s.mean(), s.count(), tau))
            .collect()
    }
}

/// Shows a fixed list every step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Oracle {
    list: Recommendation,
}

impl Oracle {
    pub fn new(list: Recommendation) -> Self {
        Self { list }
    }

    pub fn select(&self) -> Recommendation {
        self.list.clone()
    }
}
