//! Predefined experiment grids, the published reference values for the two
//! synthetic tables, and the checks run by `reproduce` and the acceptance
//! target.

use std::fmt;
use std::str::FromStr;

use crate::bounds::ucb1_bound;
use crate::env::blb_means;
use crate::error::{Error, Result};
use crate::harness::config::{EnvironmentSpec, ExperimentConfig, PolicyName, PolicySpec};
use crate::harness::runner::{run_batch, AggregateResult};
use crate::model::AttractionModel;
use crate::policy::ListOrder;

pub const STEPS: u64 = 100_000;
pub const RUNS: u64 = 20;
pub const P: f64 = 0.2;
pub const LOG_EVERY: u64 = 1000;

/// Relative tolerance against the published table values.
pub const TABLE_TOLERANCE: f64 = 0.15;
pub const L_DOUBLING_RANGE: (f64, f64) = (1.7, 2.4);
/// Largest share of the final regret allowed over the last fifth of the horizon.
pub const FLAT_TAIL_SHARE: f64 = 0.10;
pub const RANKED_RATIO_RANGE: (f64, f64) = (2.0, 5.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Table1,
    Table2,
    Dbn,
    Ranked,
}

impl Suite {
    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Table1 => "table1",
            Suite::Table2 => "table2",
            Suite::Dbn => "dbn",
            Suite::Ranked => "ranked",
        }
    }

    /// Disjoint seed blocks, so no two configs across suites share a seed.
    fn seed_block(self) -> u64 {
        match self {
            Suite::Table1 => 0,
            Suite::Table2 => 100,
            Suite::Dbn => 200,
            Suite::Ranked => 300,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table1" => Ok(Suite::Table1),
            "table2" => Ok(Suite::Table2),
            "dbn" => Ok(Suite::Dbn),
            "ranked" => Ok(Suite::Ranked),
            other => Err(Error::config(format!(
                "unknown suite '{other}' (expected table1, table2, dbn or ranked)"
            ))),
        }
    }
}

/// Published `(mean, stderr)` of the final regret for one `(L, K, Δ)` row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedRow {
    pub num_items: usize,
    pub k: usize,
    pub delta: f64,
    pub ucb1: (f64, f64),
    pub klucb: (f64, f64),
}

impl PublishedRow {
    pub fn reference(&self, policy: PolicyName) -> (f64, f64) {
        match policy {
            PolicyName::CascadeUcb1 => self.ucb1,
            PolicyName::CascadeKlUcb => self.klucb,
            other => panic!("no published value for {other}"),
        }
    }

    fn label(&self) -> String {
        format!("L={} K={} delta={}", self.num_items, self.k, self.delta)
    }
}

const fn row(num_items: usize, k: usize, delta: f64, ucb1: (f64, f64), klucb: (f64, f64)) -> PublishedRow {
    PublishedRow {
        num_items,
        k,
        delta,
        ucb1,
        klucb,
    }
}

/// Decreasing-UCB ordering.
pub const TABLE1: [PublishedRow; 9] = [
    row(16, 2, 0.15, (1290.1, 11.3), (357.9, 5.5)),
    row(16, 4, 0.15, (986.8, 10.8), (275.1, 5.8)),
    row(16, 8, 0.15, (574.8, 7.9), (149.1, 3.2)),
    row(32, 2, 0.15, (2695.9, 19.8), (761.2, 10.4)),
    row(32, 4, 0.15, (2256.8, 12.8), (633.2, 7.0)),
    row(32, 8, 0.15, (1581.0, 20.3), (435.4, 5.7)),
    row(16, 2, 0.075, (2077.0, 32.9), (766.0, 18.0)),
    row(16, 4, 0.075, (1520.4, 23.4), (538.5, 12.5)),
    row(16, 8, 0.075, (725.4, 12.0), (321.0, 16.3)),
];

/// Increasing-UCB ordering.
pub const TABLE2: [PublishedRow; 9] = [
    row(16, 2, 0.15, (1160.2, 11.7), (333.3, 6.1)),
    row(16, 4, 0.15, (660.0, 8.3), (209.4, 4.4)),
    row(16, 8, 0.15, (181.4, 3.9), (60.4, 2.0)),
    row(32, 2, 0.15, (2471.6, 14.1), (716.0, 7.5)),
    row(32, 4, 0.15, (1615.3, 14.5), (482.3, 6.7)),
    row(32, 8, 0.15, (595.0, 7.8), (201.9, 5.8)),
    row(16, 2, 0.075, (1989.8, 31.4), (785.8, 12.2)),
    row(16, 4, 0.075, (1239.5, 16.2), (484.2, 12.5)),
    row(16, 8, 0.075, (336.4, 10.3), (139.7, 6.6)),
];

pub const TABLE_POLICIES: [PolicyName; 2] = [PolicyName::CascadeUcb1, PolicyName::CascadeKlUcb];

/// `(ν, γ)` cells of the DBN grid; the first is the cascade-equivalent one.
pub const DBN_CELLS: [(f64, f64); 4] = [(1.0, 1.0), (1.0, 0.7), (0.7, 1.0), (0.7, 0.7)];
pub const DBN_SHAPE: (usize, usize, f64) = (16, 4, 0.15);

fn config(environment: EnvironmentSpec, name: PolicyName, ordering: ListOrder, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        environment,
        policy: PolicySpec {
            name,
            ordering,
            epsilon: 0.1,
        },
        n_steps: STEPS,
        n_runs: RUNS,
        master_seed: seed,
        log_every: LOG_EVERY,
        output: None,
    }
}

fn dbn_env(nu: f64, gamma: f64) -> EnvironmentSpec {
    let (num_items, k, delta) = DBN_SHAPE;
    EnvironmentSpec::Dbn {
        num_items,
        k,
        p: P,
        delta,
        nu,
        gamma,
    }
}

/// The configs a suite runs. Each config gets its own master seed, derived
/// from `base_seed`, so runs are independent across policies and cells.
pub fn suite_configs(suite: Suite, base_seed: u64) -> Vec<ExperimentConfig> {
    let mut configs = Vec::new();
    match suite {
        Suite::Table1 | Suite::Table2 => {
            let (rows, ordering) = if suite == Suite::Table1 {
                (&TABLE1, ListOrder::DecreasingUcb)
            } else {
                (&TABLE2, ListOrder::IncreasingUcb)
            };
            for r in rows {
                for name in TABLE_POLICIES {
                    let env = EnvironmentSpec::Cascade {
                        num_items: r.num_items,
                        k: r.k,
                        p: P,
                        delta: r.delta,
                    };
                    configs.push(config(env, name, ordering, 0));
                }
            }
        }
        Suite::Dbn => {
            for (nu, gamma) in DBN_CELLS {
                configs.push(config(dbn_env(nu, gamma), PolicyName::CascadeKlUcb, ListOrder::DecreasingUcb, 0));
            }
        }
        Suite::Ranked => {
            for (nu, gamma) in DBN_CELLS {
                for name in [PolicyName::RankedKlUcb, PolicyName::CascadeKlUcb] {
                    configs.push(config(dbn_env(nu, gamma), name, ListOrder::DecreasingUcb, 0));
                }
            }
        }
    }
    for (i, c) in configs.iter_mut().enumerate() {
        c.master_seed = base_seed
            .wrapping_add(suite.seed_block())
            .wrapping_add(i as u64);
    }
    configs
}

pub fn run_suite(suite: Suite, base_seed: u64) -> Result<Vec<AggregateResult>> {
    run_batch(&suite_configs(suite, base_seed))
}

/// One acceptance criterion: a verdict and the evidence behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub details: Vec<String>,
}

impl Check {
    fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: true,
            details: Vec::new(),
        }
    }

    fn record(&mut self, ok: bool, line: String) {
        self.passed &= ok;
        self.details
            .push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }

    pub fn verdict(&self) -> &'static str {
        if self.passed {
            "PASS"
        } else {
            "FAIL"
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.verdict(), self.name)?;
        for d in &self.details {
            write!(f, "\n    {d}")?;
        }
        Ok(())
    }
}

fn final_mean(results: &[AggregateResult], env: &EnvironmentSpec, name: PolicyName) -> Result<f64> {
    results
        .iter()
        .find(|r| r.config.environment == *env && r.config.policy.name == name)
        .map(|r| r.final_summary().mean)
        .ok_or_else(|| Error::invalid(format!("no result for {name} on {env:?}")))
}

fn table_mean(results: &[AggregateResult], num_items: usize, k: usize, delta: f64, name: PolicyName) -> Result<f64> {
    let env = EnvironmentSpec::Cascade {
        num_items,
        k,
        p: P,
        delta,
    };
    final_mean(results, &env, name)
}

/// Side-by-side measured vs. published values for a table suite.
pub fn table_report(results: &[AggregateResult], published: &[PublishedRow]) -> Result<String> {
    let mut out = format!(
        "{:<22} {:<14} {:>18} {:>18} {:>8}\n",
        "row", "policy", "measured", "published", "rel"
    );
    for r in published {
        for name in TABLE_POLICIES {
            let res = results
                .iter()
                .find(|a| {
                    a.config.policy.name == name
                        && a.config.environment
                            == EnvironmentSpec::Cascade {
                                num_items: r.num_items,
                                k: r.k,
                                p: P,
                                delta: r.delta,
                            }
                })
                .ok_or_else(|| Error::invalid(format!("missing result for {}", r.label())))?;
            let s = res.final_summary();
            let (pm, ps) = r.reference(name);
            out.push_str(&format!(
                "{:<22} {:<14} {:>10.1} ± {:>5.1} {:>10.1} ± {:>5.1} {:>+7.1}%\n",
                r.label(),
                name.as_str(),
                s.mean,
                s.stderr.unwrap_or(0.0),
                pm,
                ps,
                100.0 * (s.mean - pm) / pm
            ));
        }
    }
    Ok(out)
}

/// Every row and policy within [`TABLE_TOLERANCE`] of the published mean.
pub fn table_check(name: &str, results: &[AggregateResult], published: &[PublishedRow]) -> Result<Check> {
    let mut check = Check::new(name);
    for r in published {
        for policy in TABLE_POLICIES {
            let m = table_mean(results, r.num_items, r.k, r.delta, policy)?;
            let (pm, _) = r.reference(policy);
            let rel = (m - pm) / pm;
            check.record(
                rel.abs() <= TABLE_TOLERANCE,
                format!("{} {policy}: {m:.1} vs {pm:.1} ({:+.1}%)", r.label(), 100.0 * rel),
            );
        }
    }
    Ok(check)
}

/// Rows sharing `(L, Δ)` in the table grid.
fn groups() -> Vec<(usize, f64)> {
    let mut g: Vec<(usize, f64)> = Vec::new();
    for r in &TABLE1 {
        if !g.contains(&(r.num_items, r.delta)) {
            g.push((r.num_items, r.delta));
        }
    }
    g
}

fn ks() -> Vec<usize> {
    let mut ks: Vec<usize> = TABLE1.iter().map(|r| r.k).collect();
    ks.sort_unstable();
    ks.dedup();
    ks
}

/// Increasing ordering beats decreasing on every row, and the relative
/// improvement within each `(L, Δ)` group is largest at the largest `K`.
pub fn ordering_check(decreasing: &[AggregateResult], increasing: &[AggregateResult]) -> Result<Check> {
    let mut check = Check::new("increasing ordering below decreasing, largest drop at K=8");
    for r in &TABLE1 {
        for policy in TABLE_POLICIES {
            let dec = table_mean(decreasing, r.num_items, r.k, r.delta, policy)?;
            let inc = table_mean(increasing, r.num_items, r.k, r.delta, policy)?;
            check.record(inc < dec, format!("{} {policy}: {inc:.1} < {dec:.1}", r.label()));
        }
    }
    let ks = ks();
    let top_k = *ks.last().expect("non-empty grid");
    for (l, delta) in groups() {
        for policy in TABLE_POLICIES {
            let mut drops = Vec::new();
            for &k in &ks {
                let dec = table_mean(decreasing, l, k, delta, policy)?;
                let inc = table_mean(increasing, l, k, delta, policy)?;
                drops.push((k, (dec - inc) / dec));
            }
            let best = drops
                .iter()
                .copied()
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("non-empty");
            let shown: Vec<String> = drops
                .iter()
                .map(|(k, d)| format!("K={k}: {:.1}%", 100.0 * d))
                .collect();
            check.record(
                best.0 == top_k,
                format!("L={l} delta={delta} {policy}: relative drop {}", shown.join(", ")),
            );
        }
    }
    Ok(check)
}

/// The four qualitative trends of the decreasing-ordering table.
pub fn trend_check(results: &[AggregateResult]) -> Result<Check> {
    let mut check = Check::new("trends: L doubling, K, delta, KL-UCB below UCB1");
    let (lo, hi) = L_DOUBLING_RANGE;
    let ks = ks();
    for &k in &ks {
        for r in TABLE1.iter().filter(|r| r.num_items == 16 && r.k == k) {
            if !TABLE1
                .iter()
                .any(|s| s.num_items == 32 && s.k == k && s.delta == r.delta)
            {
                continue;
            }
            for policy in TABLE_POLICIES {
                let small = table_mean(results, 16, k, r.delta, policy)?;
                let large = table_mean(results, 32, k, r.delta, policy)?;
                let ratio = large / small;
                check.record(
                    (lo..=hi).contains(&ratio),
                    format!(
                        "K={k} delta={} {policy}: L=32 / L=16 = {ratio:.2} (want {lo}..{hi})",
                        r.delta
                    ),
                );
            }
        }
    }
    for (l, delta) in groups() {
        for policy in TABLE_POLICIES {
            let values = ks
                .iter()
                .map(|&k| table_mean(results, l, k, delta, policy))
                .collect::<Result<Vec<_>>>()?;
            let shown: Vec<String> = values.iter().map(|v| format!("{v:.1}")).collect();
            check.record(
                values.windows(2).all(|w| w[0] > w[1]),
                format!("L={l} delta={delta} {policy}: decreasing in K [{}]", shown.join(", ")),
            );
        }
    }
    let mut deltas: Vec<f64> = TABLE1.iter().map(|r| r.delta).collect();
    deltas.sort_by(|a, b| b.total_cmp(a));
    deltas.dedup();
    for pair in deltas.windows(2) {
        let (wide, narrow) = (pair[0], pair[1]);
        for r in TABLE1.iter().filter(|r| r.delta == narrow) {
            for policy in TABLE_POLICIES {
                let at_wide = table_mean(results, r.num_items, r.k, wide, policy)?;
                let at_narrow = table_mean(results, r.num_items, r.k, narrow, policy)?;
                check.record(
                    at_narrow > at_wide,
                    format!(
                        "L={} K={} {policy}: delta {wide} -> {narrow} gives {at_wide:.1} -> {at_narrow:.1}",
                        r.num_items, r.k
                    ),
                );
            }
        }
    }
    for r in &TABLE1 {
        let ucb1 = table_mean(results, r.num_items, r.k, r.delta, PolicyName::CascadeUcb1)?;
        let klucb = table_mean(results, r.num_items, r.k, r.delta, PolicyName::CascadeKlUcb)?;
        check.record(klucb < ucb1, format!("{}: KL-UCB {klucb:.1} < UCB1 {ucb1:.1}", r.label()));
    }
    Ok(check)
}

/// Regret gained over the last fifth of the horizon is a small share of the total.
pub fn flattening_check(results: &[AggregateResult]) -> Result<Check> {
    let mut check = Check::new("DBN regret flattens over the last fifth of the horizon");
    for (nu, gamma) in DBN_CELLS {
        let env = dbn_env(nu, gamma);
        let res = results
            .iter()
            .find(|r| r.config.environment == env && r.config.policy.name == PolicyName::CascadeKlUcb)
            .ok_or_else(|| Error::invalid(format!("no DBN result for nu={nu} gamma={gamma}")))?;
        let n = res.config.n_steps;
        let at_n = res
            .mean_at(n)
            .ok_or_else(|| Error::invalid("missing final checkpoint"))?;
        let at_tail = res
            .mean_at(n * 4 / 5)
            .ok_or_else(|| Error::invalid("0.8 n is not a checkpoint"))?;
        let share = (at_n - at_tail) / at_n;
        check.record(
            share <= FLAT_TAIL_SHARE,
            format!(
                "nu={nu} gamma={gamma}: {at_tail:.1} -> {at_n:.1}, tail share {:.1}%",
                100.0 * share
            ),
        );
    }
    Ok(check)
}

/// RankedKL-UCB over CascadeKL-UCB on the cascade-equivalent DBN cell.
pub fn ranked_check(results: &[AggregateResult]) -> Result<Check> {
    let mut check = Check::new("ranked bandits regret ratio on the nu=1 gamma=1 cell");
    let (nu, gamma) = DBN_CELLS[0];
    let env = dbn_env(nu, gamma);
    let ranked = final_mean(results, &env, PolicyName::RankedKlUcb)?;
    let cascade = final_mean(results, &env, PolicyName::CascadeKlUcb)?;
    let ratio = ranked / cascade;
    let (lo, hi) = RANKED_RATIO_RANGE;
    check.record(
        (lo..=hi).contains(&ratio),
        format!("{ranked:.1} / {cascade:.1} = {ratio:.2} (want {lo}..{hi})"),
    );
    for &(nu, gamma) in &DBN_CELLS[1..] {
        let env = dbn_env(nu, gamma);
        if let (Ok(r), Ok(c)) = (
            final_mean(results, &env, PolicyName::RankedKlUcb),
            final_mean(results, &env, PolicyName::CascadeKlUcb),
        ) {
            check
                .details
                .push(format!("info nu={nu} gamma={gamma}: {r:.1} / {c:.1} = {:.2}", r / c));
        }
    }
    Ok(check)
}

/// Measured final regret of every table config stays below the CascadeUCB1 bound.
pub fn bound_check(results: &[AggregateResult]) -> Result<Check> {
    let mut check = Check::new("measured regret below the CascadeUCB1 upper bound");
    for r in &TABLE1 {
        let model = AttractionModel::new(blb_means(r.num_items, r.k, P, r.delta)?)?;
        let bound = ucb1_bound(&model, r.k, STEPS)?;
        for policy in TABLE_POLICIES {
            let m = table_mean(results, r.num_items, r.k, r.delta, policy)?;
            check.record(m <= bound, format!("{} {policy}: {m:.1} <= {bound:.1}", r.label()));
        }
    }
    Ok(check)
}

/// Checks `reproduce` reports for a suite. Table 2 also needs the
/// decreasing-ordering results for the ordering comparison.
pub fn suite_checks(
    suite: Suite,
    results: &[AggregateResult],
    decreasing: Option<&[AggregateResult]>,
) -> Result<Vec<Check>> {
    Ok(match suite {
        Suite::Table1 => vec![
            table_check("table 1 within 15% of published values", results, &TABLE1)?,
            trend_check(results)?,
            bound_check(results)?,
        ],
        Suite::Table2 => {
            let mut checks = vec![table_check("table 2 within 15% of published values", results, &TABLE2)?];
            if let Some(dec) = decreasing {
                checks.push(ordering_check(dec, results)?);
            }
            checks
        }
        Suite::Dbn => vec![flattening_check(results)?],
        Suite::Ranked => vec![ranked_check(results)?],
    })
}
