//! Randomized property suites for the product decomposition, the KL peeling
//! inequality and the KL-UCB solver. Used by the `selfcheck` subcommand.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::bounds::{lemma1_oracle, lemma3_check};
use crate::estimation::{kl, klucb_upper};
use crate::model::{AttractionModel, ItemId, Recommendation};
use crate::rng::{run_rng, SimRng};

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    /// Largest deviation seen (meaning depends on the suite).
    pub worst: f64,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Two lists of length `k` over `l` items where a shared item sits at the
/// same position in both.
fn lemma1_lists(rng: &mut SimRng, l: usize, k: usize) -> (Recommendation, Recommendation) {
    let mut items: Vec<usize> = (0..l).collect();
    items.shuffle(rng);
    let a: Vec<ItemId> = items[..k].iter().copied().map(ItemId).collect();
    let mut pool: Vec<usize> = items[k..].to_vec();
    let mut b = Vec::with_capacity(k);
    for &x in &a {
        if pool.is_empty() || rng.gen_bool(0.3) {
            b.push(x);
        } else {
            let i = rng.gen_range(0..pool.len());
            b.push(ItemId(pool.swap_remove(i)));
        }
    }
    (
        Recommendation::new(a, l).expect("distinct"),
        Recommendation::new(b, l).expect("distinct"),
    )
}

pub fn lemma1_suite(cases: usize, seed: u64) -> SuiteOutcome {
    let mut rng = run_rng(seed, 1);
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let l = rng.gen_range(1..=6);
        let k = rng.gen_range(1..=l);
        let means: Vec<f64> = (0..l).map(|_| rng.gen()).collect();
        let model = AttractionModel::new(means).expect("means in [0,1)");
        let (a, b) = lemma1_lists(&mut rng, l, k);
        let (lhs, rhs) = lemma1_oracle(&a, &b, &model).expect("valid lists");
        let err = (lhs - rhs).abs();
        worst = worst.max(err);
        if err >= 1e-12 {
            failures += 1;
        }
    }
    SuiteOutcome {
        name: "product decomposition (exhaustive expectation)",
        cases,
        failures,
        worst,
    }
}

pub fn lemma3_suite(cases: usize, seed: u64) -> SuiteOutcome {
    let mut rng = run_rng(seed, 3);
    let mut failures = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..cases {
        let k = rng.gen_range(1..=10);
        let p: f64 = rng.gen_range(0.0..0.95);
        let mut ps: Vec<f64> = (0..k).map(|_| rng.gen_range(p..=1.0)).collect();
        ps.sort_by(|a, b| b.total_cmp(a));
        if ps[k - 1] <= p {
            continue;
        }
        let check = lemma3_check(&ps, p).expect("valid instance");
        worst = worst.max(check.lhs - check.rhs);
        if !check.holds {
            failures += 1;
        }
    }
    SuiteOutcome {
        name: "KL peeling inequality",
        cases,
        failures,
        worst,
    }
}

/// Boundary values, feasibility, maximality and monotonicity of the KL-UCB index.
pub fn klucb_suite(cases: usize, seed: u64) -> SuiteOutcome {
    let mut rng = run_rng(seed, 5);
    let mut failures = 0;
    let mut worst: f64 = (klucb_upper(0.0, 1, 1.0) - (1.0 - (-1.0f64).exp())).abs();
    if worst > 1e-9 {
        failures += 1;
    }
    for tau in [0.0, 1.0, 50.0] {
        if klucb_upper(1.0, 3, tau) != 1.0 {
            failures += 1;
        }
    }
    for _ in 0..cases {
        let count = rng.gen_range(1..=1000u64);
        let ones = rng.gen_range(0..=count);
        let m = ones as f64 / count as f64;
        let tau = rng.gen_range(0.0..30.0);
        let q = klucb_upper(m, count, tau);
        let s = count as f64;
        let mut ok = q >= m && q <= 1.0 && s * kl(m, q) <= tau + 1e-6;
        if q < 1.0 {
            ok &= s * kl(m, (q + 1e-6).min(1.0)) > tau;
        }
        ok &= klucb_upper(m, count, tau + rng.gen_range(0.0..2.0)) >= q;
        ok &= klucb_upper(m, count + rng.gen_range(1..100), tau) <= q + 1e-9;
        ok &= m == 1.0 || q < 1.0;
        worst = worst.max((s * kl(m, q) - tau).max(0.0));
        if !ok {
            failures += 1;
        }
    }
    SuiteOutcome {
        name: "KL-UCB solver contracts",
        cases,
        failures,
        worst,
    }
}

pub fn run_all(seed: u64) -> Vec<SuiteOutcome> {
    vec![
        lemma1_suite(1000, seed),
        lemma3_suite(10_000, seed),
        klucb_suite(10_000, seed),
    ]
}
