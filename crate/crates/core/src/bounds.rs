//! Regret bound calculators and executable forms of the two technical
//! lemmas behind them.
//!
//! All logarithms are natural. The KL-UCB bound omits the additive
//! `K L C₂(ε) / n^β(ε)` term, whose constants are not available in closed
//! form, so [`klucb_bound_leading`] understates the full bound.

use std::f64::consts::PI;

use log::warn;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::kl;
use crate::model::{AttractionModel, Recommendation};

/// Attraction means sorted in decreasing order, the `K`-th largest, and the
/// gaps `Δ_{e,K}` of the `L - K` suboptimal items.
fn suboptimal_gaps(model: &AttractionModel, k: usize) -> Result<(f64, Vec<f64>)> {
    if k == 0 || k > model.num_items() {
        return Err(Error::invalid(format!(
            "K = {k} must be in 1..={}",
            model.num_items()
        )));
    }
    let mut sorted = model.means().to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let kth = sorted[k - 1];
    let gaps: Vec<f64> = sorted[k..].iter().map(|w| kth - w).collect();
    if gaps.iter().any(|&d| d <= 0.0) {
        return Err(Error::UndefinedBound(
            "a suboptimal item ties the K-th best item (zero gap)".into(),
        ));
    }
    Ok((kth, gaps))
}

/// CascadeUCB1: `Σ_{e>K} 12 / Δ_{e,K} · ln n + π²/3 · L`.
pub fn ucb1_bound(model: &AttractionModel, k: usize, n: u64) -> Result<f64> {
    let (_, gaps) = suboptimal_gaps(model, k)?;
    let log_n = (n as f64).ln();
    let sum: f64 = gaps.iter().map(|d| 12.0 / d * log_n).sum();
    Ok(sum + PI * PI / 3.0 * model.num_items() as f64)
}

/// CascadeKL-UCB leading term plus `7 K ln ln n`:
/// `Σ_{e>K} (1+ε) Δ (1 + ln(1/Δ)) / kl(w̄(e), w̄(K)) · (ln n + 3 ln ln n) + 7 K ln ln n`.
pub fn klucb_bound_leading(model: &AttractionModel, k: usize, n: u64, epsilon: f64) -> Result<f64> {
    if n < 3 {
        return Err(Error::invalid(format!("n = {n}: the bound needs n >= 3")));
    }
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::invalid(format!("epsilon = {epsilon} must be positive")));
    }
    let (kth, gaps) = suboptimal_gaps(model, k)?;
    let log_n = (n as f64).ln();
    let log_log_n = log_n.ln();
    let sum: f64 = gaps
        .iter()
        .map(|&d| (1.0 + epsilon) * d * (1.0 + (1.0 / d).ln()) / kl(kth - d, kth))
        .sum();
    Ok(sum * (log_n + 3.0 * log_log_n) + 7.0 * k as f64 * log_log_n)
}

/// Asymptotic lower-bound constant on `B_LB(L, K, p, Δ)`:
/// `(L - K) Δ (1 - p)^{K-1} / kl(p - Δ, p)`.
pub fn lower_bound_constant(num_items: usize, k: usize, p: f64, delta: f64) -> Result<f64> {
    if k == 0 || k > num_items {
        return Err(Error::invalid(format!("K = {k} must be in 1..={num_items}")));
    }
    if !(delta > 0.0 && delta < p && p <= 1.0) {
        return Err(Error::invalid(format!(
            "need 0 < delta < p <= 1, got p = {p}, delta = {delta}"
        )));
    }
    if p == 1.0 {
        warn!("lower bound is degenerate at p = 1 (kl(p - Δ, 1) is infinite)");
        return Ok(0.0);
    }
    let suboptimal = (num_items - k) as f64;
    Ok(suboptimal * delta * (1.0 - p).powi(k as i32 - 1) / kl(p - delta, p))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub instance: String,
    pub n: u64,
    pub epsilon: f64,
    pub ucb1_upper: f64,
    pub klucb_upper_leading: f64,
    /// Constant multiplying `ln n`; `None` when the model is not a `B_LB` instance.
    pub lower_constant: Option<f64>,
    /// `lower_constant · ln n`.
    pub lower_asymptotic: Option<f64>,
}

impl BoundReport {
    pub fn blb(num_items: usize, k: usize, p: f64, delta: f64, n: u64, epsilon: f64) -> Result<Self> {
        let model = AttractionModel::new(crate::env::blb_means(num_items, k, p, delta)?)?;
        let lower = lower_bound_constant(num_items, k, p, delta)?;
        let ucb1_upper = if k == num_items {
            PI * PI / 3.0 * num_items as f64
        } else {
            ucb1_bound(&model, k, n)?
        };
        let klucb_upper_leading = if k == num_items {
            7.0 * k as f64 * (n as f64).ln().ln()
        } else {
            klucb_bound_leading(&model, k, n, epsilon)?
        };
        Ok(Self {
            instance: format!("B_LB(L={num_items}, K={k}, p={p}, delta={delta})"),
            n,
            epsilon,
            ucb1_upper,
            klucb_upper_leading,
            lower_constant: Some(lower),
            lower_asymptotic: Some(lower * (n as f64).ln()),
        })
    }
}

/// Exact `E[∏ w(a_k) − ∏ w(b_k)]` by enumeration (`lhs`) and the telescoped
/// sum `Σ_k E[∏_{i<k} w(a_i)] E[w(a_k) − w(b_k)] ∏_{j>k} E[w(b_j)]` (`rhs`).
///
/// Requires `L <= 12`, equal list lengths and `a_i = b_j` only if `i = j`.
pub fn lemma1_oracle(a: &Recommendation, b: &Recommendation, model: &AttractionModel) -> Result<(f64, f64)> {
    let l = model.num_items();
    if l > 12 {
        return Err(Error::invalid(format!("enumeration over 2^{l} vectors is capped at L = 12")));
    }
    if a.len() != b.len() {
        return Err(Error::invalid("lists must have equal length"));
    }
    for (i, x) in a.items().iter().enumerate() {
        if x.index() >= l {
            return Err(Error::ItemOutOfRange { item: x.index(), num_items: l });
        }
        for (j, y) in b.items().iter().enumerate() {
            if y.index() >= l {
                return Err(Error::ItemOutOfRange { item: y.index(), num_items: l });
            }
            if x == y && i != j {
                return Err(Error::invalid(format!(
                    "item {x} appears at position {} of A and {} of B",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    let means = model.means();
    let mut lhs = 0.0;
    for mask in 0u32..1 << l {
        let bit = |e: usize| mask >> e & 1 == 1;
        let prob: f64 = (0..l).map(|e| if bit(e) { means[e] } else { 1.0 - means[e] }).product();
        let prod = |list: &Recommendation| list.items().iter().all(|x| bit(x.index()));
        lhs += prob * (f64::from(u8::from(prod(a))) - f64::from(u8::from(prod(b))));
    }
    let k = a.len();
    let mut rhs = 0.0;
    for t in 0..k {
        let head: f64 = a.items()[..t].iter().map(|&x| model.mean(x)).product();
        let diff = model.mean(a.items()[t]) - model.mean(b.items()[t]);
        let tail: f64 = b.items()[t + 1..].iter().map(|&y| model.mean(y)).product();
        rhs += head * diff * tail;
    }
    Ok((lhs, rhs))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeelingCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// The KL peeling inequality for `p₁ >= … >= p_K > p`, `Δ_k = p_k − p`:
/// `Δ₁/kl(p,p₁) + Σ_{k>=2} Δ_k (1/kl(p,p_k) − 1/kl(p,p_{k−1})) <= Δ_K (1 + ln(1/Δ_K)) / kl(p,p_K)`.
pub fn lemma3_check(ps: &[f64], p: f64) -> Result<PeelingCheck> {
    if ps.is_empty() {
        return Err(Error::invalid("need at least one probability"));
    }
    if ps.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::invalid("probabilities must be nonincreasing"));
    }
    let last = ps[ps.len() - 1];
    if !(p >= 0.0 && p < last && ps[0] <= 1.0) {
        return Err(Error::invalid(format!(
            "need 0 <= p < p_K <= ... <= p_1 <= 1, got p = {p}"
        )));
    }
    let inv_kl = |q: f64| 1.0 / kl(p, q);
    let mut lhs = (ps[0] - p) * inv_kl(ps[0]);
    for k in 1..ps.len() {
        lhs += (ps[k] - p) * (inv_kl(ps[k]) - inv_kl(ps[k - 1]));
    }
    let gap = last - p;
    let rhs = gap * (1.0 + (1.0 / gap).ln()) * inv_kl(last);
    Ok(PeelingCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-10,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::blb_means;
    use approx::assert_abs_diff_eq;

    fn blb(l: usize, k: usize, p: f64, d: f64) -> AttractionModel {
        AttractionModel::new(blb_means(l, k, p, d).unwrap()).unwrap()
    }

    // Frozen from a 30-digit evaluation of each formula (mpmath).
    const UCB1_16_2_015: f64 = 12_947.114_410_905_8;
    const KLUCB_16_2_015: f64 = 1_376.576_988_472_65;
    const LOWER_16_2_015: f64 = 17.883_179_530_164_07;

    #[test]
    fn ucb1_bound_examples() {
        assert_abs_diff_eq!(ucb1_bound(&blb(16, 2, 0.2, 0.15), 2, 100_000).unwrap(), UCB1_16_2_015, epsilon = 1e-8);
        let all = AttractionModel::new(vec![0.4; 5]).unwrap();
        assert_abs_diff_eq!(ucb1_bound(&all, 5, 1000).unwrap(), PI * PI / 3.0 * 5.0, epsilon = 1e-12);
        let tied = AttractionModel::new(vec![0.4, 0.3, 0.3]).unwrap();
        assert!(matches!(ucb1_bound(&tied, 2, 1000), Err(Error::UndefinedBound(_))));
        // permutation of the items does not matter
        let shuffled = AttractionModel::new(vec![0.05, 0.2, 0.05, 0.2]).unwrap();
        assert_abs_diff_eq!(
            ucb1_bound(&shuffled, 2, 500).unwrap(),
            ucb1_bound(&blb(4, 2, 0.2, 0.15), 2, 500).unwrap(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn klucb_bound_examples() {
        assert_abs_diff_eq!(
            klucb_bound_leading(&blb(16, 2, 0.2, 0.15), 2, 100_000, 0.1).unwrap(),
            KLUCB_16_2_015,
            epsilon = 1e-8
        );
        assert!(klucb_bound_leading(&blb(16, 2, 0.2, 0.15), 2, 2, 0.1).is_err());
        // Δ = 1: (1 + ln 1) = 1
        let m = AttractionModel::new(vec![1.0, 0.0]).unwrap();
        let n = 1000u64;
        let (ln, lnln) = ((n as f64).ln(), (n as f64).ln().ln());
        let one_item = 1.1 * 1.0 / kl(0.0, 1.0) * (ln + 3.0 * lnln) + 7.0 * lnln;
        assert_eq!(klucb_bound_leading(&m, 1, n, 0.1).unwrap(), one_item);
        let v: Vec<f64> = [2, 4, 8]
            .iter()
            .map(|&k| klucb_bound_leading(&blb(16, k, 0.2, 0.15), k, 100_000, 0.1).unwrap())
            .collect();
        assert!(v[0] > v[1] && v[1] > v[2]);
    }

    #[test]
    fn lower_bound_examples() {
        assert_abs_diff_eq!(lower_bound_constant(16, 2, 0.2, 0.15).unwrap(), LOWER_16_2_015, epsilon = 1e-10);
        assert_eq!(lower_bound_constant(8, 8, 0.2, 0.15).unwrap(), 0.0);
        assert_eq!(lower_bound_constant(8, 2, 1.0, 0.15).unwrap(), 0.0);
        assert!(lower_bound_constant(8, 2, 0.2, 0.2).is_err());
        // p = 1/K: (1 - 1/K)^{K-1} >= 1/e
        for l in [8usize, 16, 32] {
            for k in 2..=8usize.min(l) {
                let p = 1.0 / k as f64;
                for d in [0.01, 0.05, 0.1] {
                    if d >= p {
                        continue;
                    }
                    let c = lower_bound_constant(l, k, p, d).unwrap();
                    let floor = (l - k) as f64 * d / (std::f64::consts::E * kl(p - d, p));
                    assert!(c >= floor - 1e-12);
                    // lower bound never exceeds the CascadeUCB1 upper bound
                    let n = 100_000;
                    assert!(c * (n as f64).ln() <= ucb1_bound(&blb(l, k, p, d), k, n).unwrap());
                }
            }
        }
    }

    #[test]
    fn bound_report_for_blb() {
        let r = BoundReport::blb(16, 2, 0.2, 0.15, 100_000, 0.1).unwrap();
        assert_abs_diff_eq!(r.ucb1_upper, UCB1_16_2_015, epsilon = 1e-8);
        assert_abs_diff_eq!(r.lower_constant.unwrap(), LOWER_16_2_015, epsilon = 1e-10);
        let full = BoundReport::blb(4, 4, 0.2, 0.15, 1000, 0.1).unwrap();
        assert_eq!(full.lower_constant, Some(0.0));
        assert!(full.ucb1_upper.is_finite() && full.klucb_upper_leading >= 0.0);
    }

    #[test]
    fn lemma1_examples() {
        let m = AttractionModel::new(vec![0.3, 0.6, 0.9, 0.2]).unwrap();
        let a = Recommendation::from_indices(&[0, 2], 4).unwrap();
        assert_eq!(lemma1_oracle(&a, &a, &m).unwrap(), (0.0, 0.0));
        let x = Recommendation::from_indices(&[1], 4).unwrap();
        let y = Recommendation::from_indices(&[3], 4).unwrap();
        let (lhs, rhs) = lemma1_oracle(&x, &y, &m).unwrap();
        assert_abs_diff_eq!(lhs, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(rhs, 0.4, epsilon = 1e-12);
        let b = Recommendation::from_indices(&[2, 1], 4).unwrap();
        assert!(lemma1_oracle(&a, &b, &m).is_err());
        let big = AttractionModel::new(vec![0.5; 13]).unwrap();
        let c = Recommendation::from_indices(&[0], 13).unwrap();
        assert!(lemma1_oracle(&c, &c, &big).is_err());
    }

    #[test]
    fn lemma3_examples() {
        let c = lemma3_check(&[0.5], 0.2).unwrap();
        assert_abs_diff_eq!(c.lhs, 0.3 / kl(0.2, 0.5), epsilon = 1e-15);
        assert_abs_diff_eq!(c.rhs, 0.3 * (1.0 + (1.0f64 / 0.3).ln()) / kl(0.2, 0.5), epsilon = 1e-15);
        assert!(c.holds);
        let flat = lemma3_check(&[0.4; 5], 0.1).unwrap();
        assert_abs_diff_eq!(flat.lhs, 0.3 / kl(0.1, 0.4), epsilon = 1e-12);
        assert!(lemma3_check(&[0.3, 0.5], 0.1).is_err());
        assert!(lemma3_check(&[0.5, 0.3], 0.3).is_err());
    }
}
