//! Simulated users.
//!
//! [`CascadeEnv`] draws independent Bernoulli attractions and reports the
//! first click. [`DbnEnv`] separates attraction from satisfaction and lets
//! the user abandon the list, so several clicks can occur per step.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{
    first_click, top_by_score, AttractionModel, CascadeFeedback, Recommendation, WeightVector,
};

fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    rng.gen::<f64>() < p
}

/// Attraction means of `B_LB(L, K, p, Δ)`: `p` for the first `K` items and
/// `p - Δ` for the rest.
pub fn blb_means(num_items: usize, k: usize, p: f64, delta: f64) -> Result<Vec<f64>> {
    if k == 0 || k > num_items {
        return Err(Error::invalid(format!("K = {k} must be in 1..={num_items}")));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!("p = {p} must lie in (0, 1]")));
    }
    if !(delta > 0.0 && delta < p) {
        return Err(Error::invalid(format!("gap {delta} must lie in (0, p = {p})")));
    }
    Ok((0..num_items)
        .map(|e| if e < k { p } else { p - delta })
        .collect())
}

/// Cascade user with independent Bernoulli attractions.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeEnv {
    model: AttractionModel,
}

impl CascadeEnv {
    pub fn new(model: AttractionModel) -> Self {
        Self { model }
    }

    pub fn model(&self) -> &AttractionModel {
        &self.model
    }

    pub fn num_items(&self) -> usize {
        self.model.num_items()
    }

    /// Draws `w ~ P` over all `L` items.
    pub fn sample_weights<R: Rng + ?Sized>(&self, rng: &mut R) -> WeightVector {
        WeightVector::new(self.model.means().iter().map(|&m| bernoulli(rng, m)).collect())
    }

    /// One user interaction: the click on `list` and the full realized weights.
    /// The weights are for regret accounting only; policies see the click.
    pub fn step<R: Rng + ?Sized>(
        &self,
        list: &Recommendation,
        rng: &mut R,
    ) -> (CascadeFeedback, WeightVector) {
        let w = self.sample_weights(rng);
        (first_click(list, &w), w)
    }

    pub fn init_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> WeightVector {
        self.sample_weights(rng)
    }
}

/// `B_LB(L, K, p, Δ)` as a cascade environment.
pub fn make_blb(num_items: usize, k: usize, p: f64, delta: f64) -> Result<CascadeEnv> {
    Ok(CascadeEnv::new(AttractionModel::new(blb_means(
        num_items, k, p, delta,
    )?)?))
}

/// Dynamic Bayesian network user: attraction `ρ`, satisfaction `ν`,
/// persistence `γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DbnEnv {
    rho: Vec<f64>,
    nu: Vec<f64>,
    gamma: f64,
}

/// Clicked positions (1-based, increasing) and whether the user ended
/// satisfied. Satisfaction is hidden from policies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DbnFeedback {
    pub clicks: Vec<usize>,
    pub satisfied: bool,
}

/// All randomness of one DBN interaction, drawn up front so that several
/// lists can be replayed against the same user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DbnDraws {
    pub attracted: Vec<bool>,
    pub satisfied: Vec<bool>,
    /// `persist[k - 1]`: whether the user moves on after position `k`.
    pub persist: Vec<bool>,
}

impl DbnEnv {
    pub fn new(rho: Vec<f64>, nu: Vec<f64>, gamma: f64) -> Result<Self> {
        if rho.is_empty() || rho.len() != nu.len() {
            return Err(Error::invalid(format!(
                "rho ({}) and nu ({}) must be nonempty and of equal length",
                rho.len(),
                nu.len()
            )));
        }
        if rho.iter().chain(&nu).any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::invalid("DBN probabilities must lie in [0, 1]"));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::invalid(format!("persistence {gamma} must lie in (0, 1]")));
        }
        Ok(Self { rho, nu, gamma })
    }

    /// `ρ` from `B_LB(L, K, p, Δ)` with a common satisfaction probability.
    pub fn blb(num_items: usize, k: usize, p: f64, delta: f64, nu: f64, gamma: f64) -> Result<Self> {
        Self::new(blb_means(num_items, k, p, delta)?, vec![nu; num_items], gamma)
    }

    pub fn num_items(&self) -> usize {
        self.rho.len()
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `w̄(e) = ρ(e) ν(e)`, the chance that an examined item satisfies.
    pub fn satisfaction_means(&self) -> Vec<f64> {
        self.rho.iter().zip(&self.nu).map(|(r, n)| r * n).collect()
    }

    pub fn draw<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> DbnDraws {
        let attracted = self.rho.iter().map(|&p| bernoulli(rng, p)).collect();
        let satisfied = self.nu.iter().map(|&p| bernoulli(rng, p)).collect();
        let persist = (0..k).map(|_| bernoulli(rng, self.gamma)).collect();
        DbnDraws {
            attracted,
            satisfied,
            persist,
        }
    }

    /// Scans `list` top-down against fixed draws.
    pub fn replay(list: &Recommendation, draws: &DbnDraws) -> DbnFeedback {
        let mut clicks = Vec::new();
        for (k, &item) in list.items().iter().enumerate() {
            if draws.attracted[item.0] {
                clicks.push(k + 1);
                if draws.satisfied[item.0] {
                    return DbnFeedback {
                        clicks,
                        satisfied: true,
                    };
                }
            }
            if !draws.persist[k] {
                break;
            }
        }
        DbnFeedback {
            clicks,
            satisfied: false,
        }
    }

    pub fn step<R: Rng + ?Sized>(&self, list: &Recommendation, rng: &mut R) -> DbnFeedback {
        let draws = self.draw(list.len(), rng);
        Self::replay(list, &draws)
    }

    /// One weight vector with entries `Bernoulli(ρ(e) ν(e))`.
    pub fn init_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> WeightVector {
        WeightVector::new(
            self.rho
                .iter()
                .zip(&self.nu)
                .map(|(r, n)| bernoulli(rng, r * n))
                .collect(),
        )
    }

    /// `Σ_k γ^{k-1} w̄(a_k) ∏_{i<k} (1 - w̄(a_i))`.
    pub fn expected_value(&self, list: &Recommendation) -> f64 {
        let mut total = 0.0;
        let mut reach = 1.0;
        for &item in list.items() {
            let w = self.rho[item.0] * self.nu[item.0];
            total += reach * w;
            reach *= (1.0 - w) * self.gamma;
        }
        total
    }

    /// Top `k` items by `ρ ν`, in decreasing order.
    pub fn optimal_list(&self, k: usize) -> Result<Recommendation> {
        if k == 0 || k > self.num_items() {
            return Err(Error::invalid(format!(
                "K = {k} must be in 1..={}",
                self.num_items()
            )));
        }
        Ok(Recommendation::from_vec_unchecked(top_by_score(
            &self.satisfaction_means(),
            k,
        )))
    }
}

/// The last click stands in for the satisfying click.
pub fn cascade_adapter(feedback: &DbnFeedback) -> CascadeFeedback {
    feedback
        .clicks
        .last()
        .map_or(CascadeFeedback::NoClick, |&pos| CascadeFeedback::Click(pos))
}
