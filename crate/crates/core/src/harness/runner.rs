//! Single runs and multi-run experiments.

use rayon::prelude::*;
use serde::Serialize;

use crate::env::{cascade_adapter, make_blb, CascadeEnv, DbnEnv};
use crate::error::{Error, Result};
use crate::harness::config::{EnvironmentSpec, ExperimentConfig, PolicyName};
use crate::model::{optimal_list, CascadeFeedback, Recommendation, WeightVector};
use crate::policy::{CascadeUcb, IndexRule, Oracle, RankedChoice, RankedKlUcb};
use crate::rng::{run_rng, SimRng};

/// Cumulative regret of one run at each checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretTrace {
    pub run_index: u64,
    pub checkpoints: Vec<(u64, f64)>,
}

impl RegretTrace {
    pub fn final_regret(&self) -> f64 {
        self.checkpoints.last().map_or(0.0, |&(_, r)| r)
    }
}

/// What happened at one step, for replay and logging.
#[derive(Debug)]
pub struct StepRecord<'a> {
    pub t: u64,
    pub list: &'a Recommendation,
    pub optimal: &'a Recommendation,
    /// Realized attraction weights (cascade environment only).
    pub weights: Option<&'a WeightVector>,
    /// Positions clicked on `list`.
    pub clicks: &'a [usize],
    pub regret: f64,
}

enum World {
    Cascade(CascadeEnv),
    Dbn(DbnEnv),
}

struct Outcome {
    clicks: Vec<usize>,
    cascade: CascadeFeedback,
    regret: f64,
    weights: Option<WeightVector>,
}

impl World {
    fn build(spec: &EnvironmentSpec) -> Result<Self> {
        Ok(match *spec {
            EnvironmentSpec::Cascade { num_items, k, p, delta } => World::Cascade(make_blb(num_items, k, p, delta)?),
            EnvironmentSpec::Dbn { num_items, k, p, delta, nu, gamma } => {
                World::Dbn(DbnEnv::blb(num_items, k, p, delta, nu, gamma)?)
            }
        })
    }

    fn optimal_list(&self, k: usize) -> Result<Recommendation> {
        match self {
            World::Cascade(env) => optimal_list(env.model(), k),
            World::Dbn(env) => env.optimal_list(k),
        }
    }

    fn init_sample(&self, rng: &mut SimRng) -> WeightVector {
        match self {
            World::Cascade(env) => env.init_sample(rng),
            World::Dbn(env) => env.init_sample(rng),
        }
    }

    fn step(&self, list: &Recommendation, optimal: &Recommendation, rng: &mut SimRng) -> Outcome {
        match self {
            World::Cascade(env) => {
                let (feedback, w) = env.step(list, rng);
                let clicks = match feedback {
                    CascadeFeedback::Click(k) => vec![k],
                    CascadeFeedback::NoClick => Vec::new(),
                };
                Outcome {
                    clicks,
                    cascade: feedback,
                    regret: w.reward(optimal) - w.reward(list),
                    weights: Some(w),
                }
            }
            World::Dbn(env) => {
                let draws = env.draw(list.len(), rng);
                let shown = DbnEnv::replay(list, &draws);
                let best = DbnEnv::replay(optimal, &draws);
                let regret = f64::from(u8::from(best.satisfied)) - f64::from(u8::from(shown.satisfied));
                Outcome {
                    cascade: cascade_adapter(&shown),
                    clicks: shown.clicks,
                    regret,
                    weights: None,
                }
            }
        }
    }
}

enum Learner {
    Cascade(CascadeUcb),
    Ranked(RankedKlUcb, Option<RankedChoice>),
    Oracle(Oracle),
}

impl Learner {
    fn build(config: &ExperimentConfig, optimal: &Recommendation, w0: &WeightVector) -> Result<Self> {
        let k = config.environment.list_size();
        let order = config.policy.ordering;
        Ok(match config.policy.name {
            PolicyName::CascadeUcb1 => Learner::Cascade(CascadeUcb::initialize(IndexRule::Ucb1, order, k, w0)?),
            PolicyName::CascadeKlUcb => Learner::Cascade(CascadeUcb::initialize(IndexRule::KlUcb, order, k, w0)?),
            PolicyName::RankedKlUcb => Learner::Ranked(RankedKlUcb::initialize(k, w0)?, None),
            PolicyName::Oracle => Learner::Oracle(Oracle::new(optimal.clone())),
        })
    }

    fn select(&mut self) -> Recommendation {
        match self {
            Learner::Cascade(p) => p.select(),
            Learner::Ranked(p, pending) => {
                let choice = p.select();
                let shown = choice.displayed.clone();
                *pending = Some(choice);
                shown
            }
            Learner::Oracle(o) => o.select(),
        }
    }

    fn update(&mut self, list: &Recommendation, outcome: &Outcome) {
        match self {
            Learner::Cascade(p) => p.update(list, outcome.cascade),
            Learner::Ranked(p, pending) => {
                let choice = pending.take().expect("select precedes update");
                p.update(&choice, &outcome.clicks);
            }
            Learner::Oracle(_) => {}
        }
    }
}

/// One run with a per-step callback.
pub fn run_single_observed<F>(config: &ExperimentConfig, run_index: u64, mut on_step: F) -> Result<RegretTrace>
where
    F: FnMut(&StepRecord<'_>),
{
    config.validate()?;
    let world = World::build(&config.environment)?;
    let optimal = world.optimal_list(config.environment.list_size())?;
    let mut rng = run_rng(config.master_seed, run_index);
    let w0 = world.init_sample(&mut rng);
    let mut learner = Learner::build(config, &optimal, &w0)?;

    let checkpoints = config.checkpoints();
    let mut next = checkpoints.iter().copied().peekable();
    let mut trace = Vec::with_capacity(checkpoints.len());
    // per-step regret is -1, 0 or 1, so the running sum is exact
    let mut cumulative: i64 = 0;
    if next.peek() == Some(&0) {
        trace.push((0, 0.0));
        next.next();
    }
    for t in 1..=config.n_steps {
        let list = learner.select();
        let outcome = world.step(&list, &optimal, &mut rng);
        cumulative += outcome.regret as i64;
        on_step(&StepRecord {
            t,
            list: &list,
            optimal: &optimal,
            weights: outcome.weights.as_ref(),
            clicks: &outcome.clicks,
            regret: outcome.regret,
        });
        learner.update(&list, &outcome);
        if next.peek() == Some(&t) {
            trace.push((t, cumulative as f64));
            next.next();
        }
    }
    Ok(RegretTrace {
        run_index,
        checkpoints: trace,
    })
}

pub fn run_single(config: &ExperimentConfig, run_index: u64) -> Result<RegretTrace> {
    run_single_observed(config, run_index, |_| {})
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckpointSummary {
    pub step: u64,
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n_runs)`; `None` for one run.
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateResult {
    pub config: ExperimentConfig,
    pub fingerprint: String,
    pub n_runs: u64,
    pub rows: Vec<CheckpointSummary>,
    pub final_regrets: Vec<f64>,
}

impl AggregateResult {
    pub fn final_summary(&self) -> CheckpointSummary {
        *self.rows.last().expect("at least one checkpoint")
    }

    pub fn mean_at(&self, step: u64) -> Option<f64> {
        self.rows.iter().find(|r| r.step == step).map(|r| r.mean)
    }
}

/// Mean and standard error per checkpoint. Traces are reduced in run-index
/// order, so the result does not depend on the order runs finished in.
pub fn aggregate(config: &ExperimentConfig, mut traces: Vec<RegretTrace>) -> Result<AggregateResult> {
    if traces.is_empty() {
        return Err(Error::invalid("no traces to aggregate"));
    }
    traces.sort_by_key(|t| t.run_index);
    let steps: Vec<u64> = traces[0].checkpoints.iter().map(|&(s, _)| s).collect();
    if traces
        .iter()
        .any(|t| t.checkpoints.iter().map(|&(s, _)| s).ne(steps.iter().copied()))
    {
        return Err(Error::invalid("traces have mismatched checkpoints"));
    }
    let n = traces.len() as f64;
    let rows = steps
        .iter()
        .enumerate()
        .map(|(i, &step)| {
            let values = traces.iter().map(|t| t.checkpoints[i].1);
            let mean = values.clone().sum::<f64>() / n;
            let stderr = (traces.len() >= 2).then(|| {
                let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            });
            CheckpointSummary { step, mean, stderr }
        })
        .collect();
    Ok(AggregateResult {
        config: config.clone(),
        fingerprint: config.fingerprint(),
        n_runs: traces.len() as u64,
        rows,
        final_regrets: traces.iter().map(RegretTrace::final_regret).collect(),
    })
}

/// All runs of `config` on the current rayon pool.
pub fn run_experiment(config: &ExperimentConfig) -> Result<AggregateResult> {
    config.validate()?;
    let traces = (0..config.n_runs)
        .into_par_iter()
        .map(|i| run_single(config, i))
        .collect::<Result<Vec<_>>>()?;
    aggregate(config, traces)
}

/// Runs many experiments, spreading every (config, run) pair over the pool.
pub fn run_batch(configs: &[ExperimentConfig]) -> Result<Vec<AggregateResult>> {
    for c in configs {
        c.validate()?;
    }
    let jobs: Vec<(usize, u64)> = configs
        .iter()
        .enumerate()
        .flat_map(|(ci, c)| (0..c.n_runs).map(move |r| (ci, r)))
        .collect();
    let traces = jobs
        .into_par_iter()
        .map(|(ci, r)| run_single(&configs[ci], r).map(|t| (ci, t)))
        .collect::<Result<Vec<_>>>()?;
    let mut grouped: Vec<Vec<RegretTrace>> = vec![Vec::new(); configs.len()];
    for (ci, t) in traces {
        grouped[ci].push(t);
    }
    configs
        .iter()
        .zip(grouped)
        .map(|(c, t)| aggregate(c, t))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::PolicySpec;
    use crate::model::instantaneous_regret;
    use crate::policy::ListOrder;

    fn config(name: PolicyName, env: EnvironmentSpec, n_steps: u64, n_runs: u64) -> ExperimentConfig {
        ExperimentConfig {
            environment: env,
            policy: PolicySpec { name, ordering: ListOrder::DecreasingUcb, epsilon: 0.1 },
            n_steps,
            n_runs,
            master_seed: 99,
            log_every: 500,
            output: None,
        }
    }

    const CASCADE: EnvironmentSpec = EnvironmentSpec::Cascade { num_items: 8, k: 2, p: 0.2, delta: 0.15 };
    const DBN: EnvironmentSpec = EnvironmentSpec::Dbn { num_items: 8, k: 3, p: 0.3, delta: 0.15, nu: 0.7, gamma: 0.7 };

    #[test]
    fn oracle_has_zero_cascade_regret() {
        let trace = run_single(&config(PolicyName::Oracle, CASCADE, 3000, 1), 0).unwrap();
        assert!(trace.checkpoints.iter().all(|&(_, r)| r == 0.0));
        assert_eq!(trace.checkpoints.len(), 7);
        assert_eq!(trace.checkpoints.last().unwrap().0, 3000);
        let dbn = run_single(&config(PolicyName::Oracle, DBN, 3000, 1), 0).unwrap();
        assert_eq!(dbn.final_regret(), 0.0);
    }

    #[test]
    fn runs_are_deterministic() {
        for name in [PolicyName::CascadeUcb1, PolicyName::CascadeKlUcb, PolicyName::RankedKlUcb] {
            for env in [CASCADE, DBN] {
                let c = config(name, env, 2000, 1);
                assert_eq!(run_single(&c, 3).unwrap(), run_single(&c, 3).unwrap());
                assert_ne!(run_single(&c, 3).unwrap(), run_single(&c, 4).unwrap());
            }
        }
    }

    #[test]
    fn cascade_regret_replays_from_logged_steps() {
        let c = config(PolicyName::CascadeKlUcb, CASCADE, 4000, 1);
        let mut replayed = 0.0;
        let trace = run_single_observed(&c, 0, |rec| {
            let w = rec.weights.expect("cascade logs weights");
            let r = instantaneous_regret(rec.optimal, rec.list, w);
            assert_eq!(r, rec.regret);
            replayed += r;
        })
        .unwrap();
        assert_eq!(trace.final_regret(), replayed);
    }

    #[test]
    fn rejects_bad_configs_before_running() {
        let bad = config(PolicyName::CascadeUcb1, EnvironmentSpec::Cascade { num_items: 4, k: 5, p: 0.2, delta: 0.1 }, 10, 2);
        assert!(matches!(run_experiment(&bad), Err(Error::Config(_))));
        let gap = config(PolicyName::CascadeUcb1, EnvironmentSpec::Cascade { num_items: 4, k: 2, p: 0.2, delta: 0.3 }, 10, 2);
        assert!(matches!(run_experiment(&gap), Err(Error::Config(_))));
    }

    #[test]
    fn aggregation_is_order_independent() {
        let c = config(PolicyName::CascadeUcb1, CASCADE, 2000, 5);
        let traces: Vec<_> = (0..5).map(|i| run_single(&c, i).unwrap()).collect();
        let forward = aggregate(&c, traces.clone()).unwrap();
        let mut reversed = traces.clone();
        reversed.reverse();
        reversed.swap(1, 3);
        let backward = aggregate(&c, reversed).unwrap();
        for (a, b) in forward.rows.iter().zip(&backward.rows) {
            assert!((a.mean - b.mean).abs() <= 1e-9);
        }
        assert_eq!(forward, backward);
        assert_eq!(forward, run_experiment(&c).unwrap());
    }

    #[test]
    fn single_run_has_no_stderr() {
        let c = config(PolicyName::CascadeUcb1, CASCADE, 1000, 1);
        let agg = run_experiment(&c).unwrap();
        let trace = run_single(&c, 0).unwrap();
        for (row, &(step, r)) in agg.rows.iter().zip(&trace.checkpoints) {
            assert_eq!((row.step, row.mean, row.stderr), (step, r, None));
        }
    }

    #[test]
    fn stderr_matches_definition() {
        let c = config(PolicyName::CascadeUcb1, CASCADE, 1000, 4);
        let agg = run_experiment(&c).unwrap();
        let finals = &agg.final_regrets;
        let mean = finals.iter().sum::<f64>() / 4.0;
        let sd = (finals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 3.0).sqrt();
        assert!((agg.final_summary().stderr.unwrap() - sd / 2.0).abs() < 1e-12);
    }

    #[test]
    fn batch_matches_individual_experiments() {
        let a = config(PolicyName::CascadeUcb1, CASCADE, 800, 3);
        let b = config(PolicyName::RankedKlUcb, DBN, 800, 2);
        let batch = run_batch(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(batch[0], run_experiment(&a).unwrap());
        assert_eq!(batch[1], run_experiment(&b).unwrap());
    }
}
