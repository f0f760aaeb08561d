//! Problem-domain types of the cascade model and the list reward.
//!
//! Items are 0-based internally. [`ItemId`]'s `Display` prints the 1-based id
//! used in reports.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ItemId(pub usize);

impl ItemId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0 + 1)
    }
}

/// Per-item Bernoulli attraction probabilities `w̄(e)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttractionModel {
    means: Vec<f64>,
}

impl AttractionModel {
    pub fn new(means: Vec<f64>) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::invalid("attraction model needs at least one item"));
        }
        if let Some((e, &m)) = means
            .iter()
            .enumerate()
            .find(|(_, m)| !(0.0..=1.0).contains(*m))
        {
            return Err(Error::invalid(format!(
                "attraction probability of item {} is {m}, outside [0, 1]",
                e + 1
            )));
        }
        Ok(Self { means })
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn num_items(&self) -> usize {
        self.means.len()
    }

    pub fn mean(&self, item: ItemId) -> f64 {
        self.means[item.0]
    }
}

/// An ordered list of `K` distinct items.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Recommendation {
    items: Vec<ItemId>,
}

impl Recommendation {
    /// Validates `1 <= K <= num_items`, index range and distinctness.
    pub fn new(items: Vec<ItemId>, num_items: usize) -> Result<Self> {
        if items.is_empty() || items.len() > num_items {
            return Err(Error::invalid(format!(
                "list length {} must be in 1..={num_items}",
                items.len()
            )));
        }
        let mut seen = vec![false; num_items];
        for &item in &items {
            if item.0 >= num_items {
                return Err(Error::ItemOutOfRange {
                    item: item.0,
                    num_items,
                });
            }
            if std::mem::replace(&mut seen[item.0], true) {
                return Err(Error::invalid(format!("item {item} listed twice")));
            }
        }
        Ok(Self { items })
    }

    pub fn from_indices(indices: &[usize], num_items: usize) -> Result<Self> {
        Self::new(indices.iter().copied().map(ItemId).collect(), num_items)
    }

    /// Caller guarantees the list is valid.
    pub(crate) fn from_vec_unchecked(items: Vec<ItemId>) -> Self {
        debug_assert!(!items.is_empty());
        Self { items }
    }

    pub fn items(&self) -> &[ItemId] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Item shown at 1-based `position`.
    pub fn at(&self, position: usize) -> ItemId {
        self.items[position - 1]
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.items.contains(&item)
    }
}

impl fmt::Display for Recommendation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, item) in self.items.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{item}")?;
        }
        write!(f, ")")
    }
}

/// Position of the first click (1-based), or no click at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CascadeFeedback {
    Click(usize),
    NoClick,
}

impl CascadeFeedback {
    /// Number of positions the user examined in a list of length `k`.
    pub fn observed_len(self, k: usize) -> usize {
        match self {
            CascadeFeedback::Click(pos) => pos.min(k),
            CascadeFeedback::NoClick => k,
        }
    }
}

/// One realization of the binary attraction weights `w_t ∈ {0,1}^L`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightVector {
    bits: Vec<bool>,
}

impl WeightVector {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, item: ItemId) -> bool {
        self.bits[item.0]
    }

    pub fn to_reals(&self) -> Vec<f64> {
        self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }

    /// `f(A, w)` for binary `w`: 1 iff some listed item is attractive.
    pub fn reward(&self, list: &Recommendation) -> f64 {
        if list.items().iter().any(|&a| self.bits[a.0]) {
            1.0
        } else {
            0.0
        }
    }
}

/// `f(A, w) = 1 - ∏_k (1 - w(a_k))`.
///
/// Accepts real-valued `w`, so `list_value(A, w̄)` is the expected reward of
/// `A` under independent attractions.
pub fn list_value(list: &Recommendation, weights: &[f64]) -> Result<f64> {
    let mut miss = 1.0;
    for &item in list.items() {
        let w = *weights.get(item.0).ok_or(Error::ItemOutOfRange {
            item: item.0,
            num_items: weights.len(),
        })?;
        miss *= 1.0 - w;
    }
    Ok(1.0 - miss)
}

/// The click position `C_t = argmin{k : w(a_k) = 1}`.
pub fn first_click(list: &Recommendation, weights: &WeightVector) -> CascadeFeedback {
    list.items()
        .iter()
        .position(|&a| weights.get(a))
        .map_or(CascadeFeedback::NoClick, |k| CascadeFeedback::Click(k + 1))
}

/// `(position, weight)` pairs revealed by the feedback: every position up to
/// and including the click, with weight 1 only at the click.
pub fn observed_weights(feedback: CascadeFeedback, k: usize) -> Vec<(usize, bool)> {
    let observed = feedback.observed_len(k);
    (1..=observed)
        .map(|pos| (pos, feedback == CascadeFeedback::Click(pos)))
        .collect()
}

/// The `k` items with the largest scores, by decreasing score, ties by
/// ascending index.
pub(crate) fn top_by_score(scores: &[f64], k: usize) -> Vec<ItemId> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    order.into_iter().map(ItemId).collect()
}

/// The `k` most attractive items in decreasing order of `w̄`.
pub fn optimal_list(model: &AttractionModel, k: usize) -> Result<Recommendation> {
    if k == 0 || k > model.num_items() {
        return Err(Error::invalid(format!(
            "K = {k} must be in 1..={}",
            model.num_items()
        )));
    }
    Ok(Recommendation::from_vec_unchecked(top_by_score(
        model.means(),
        k,
    )))
}

/// `Δ_{e,e*} = w̄(e*) - w̄(e)`.
pub fn gap(model: &AttractionModel, item: ItemId, optimal_item: ItemId) -> f64 {
    model.mean(optimal_item) - model.mean(item)
}

/// `f(A*, w) - f(A, w)` on a realized weight vector.
pub fn instantaneous_regret(
    optimal: &Recommendation,
    list: &Recommendation,
    weights: &WeightVector,
) -> f64 {
    weights.reward(optimal) - weights.reward(list)
}
