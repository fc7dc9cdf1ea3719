use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{FailureHistogram, LabelledRun, RunStats};
use crate::error::AnalyticsError;

/// Mean, sample standard deviation, and range of one statistic over runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub n: usize,
    pub mean: f64,
    /// Zero for a single run.
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl Spread {
    pub fn of(values: &[f64]) -> Option<Spread> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Spread { n, mean, sd, min, max })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthSpread {
    pub month: String,
    /// Post-payroll funds in cents over the runs still alive that month.
    pub funds_cents: Spread,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub label: String,
    pub rank: usize,
    pub runs: usize,
    pub seeds: Vec<u64>,
    pub context_windows: Vec<usize>,
    pub partial_runs: usize,
    pub final_funds_cents: Spread,
    pub bankrupt_runs: usize,
    /// `k/n`: runs that went bankrupt out of all runs.
    pub bankrupt: String,
    pub adversarial_ratio: Option<Spread>,
    pub trust_gated_ratio: Option<Spread>,
    /// Mean final trust of the adversarial clients in each run.
    pub final_trust_adversarial: Option<Spread>,
    pub final_trust_honest: Option<Spread>,
    /// Failures summed over the group's runs.
    pub failures: FailureHistogram,
    pub scratchpad_per_100_turns: Spread,
    pub inspect_accept_ratio: Option<Spread>,
    pub mean_active_tasks: Spread,
    pub commands_per_turn: Spread,
    pub turns: Spread,
    pub command_counts: BTreeMap<String, Spread>,
    pub cost_usd: Option<Spread>,
    pub tokens: Option<Spread>,
    pub wall_minutes: Spread,
    pub revenue_per_cost_dollar: Option<Spread>,
    pub trajectory: Vec<MonthSpread>,
}

fn spread(runs: &[&RunStats], f: impl Fn(&RunStats) -> f64) -> Spread {
    Spread::of(&runs.iter().map(|r| f(r)).collect::<Vec<_>>()).expect("groups are never empty")
}

fn spread_opt(runs: &[&RunStats], f: impl Fn(&RunStats) -> Option<f64>) -> Option<Spread> {
    Spread::of(&runs.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
}

fn mean_trust(run: &RunStats, adversarial: bool) -> Option<f64> {
    let values: Vec<f64> =
        run.final_trust.values().filter(|c| c.adversarial == Some(adversarial)).map(|c| c.trust).collect();
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn summarize(label: &str, runs: &[&RunStats]) -> GroupSummary {
    let mut seeds: Vec<u64> = runs.iter().map(|r| r.seed).collect();
    seeds.sort_unstable();
    let mut context_windows: Vec<usize> = runs.iter().map(|r| r.context_window).collect();
    context_windows.sort_unstable();
    context_windows.dedup();
    let bankrupt_runs = runs.iter().filter(|r| r.bankrupt).count();
    let mut failures = FailureHistogram::default();
    for r in runs {
        failures += r.failures;
    }
    let verbs: std::collections::BTreeSet<&String> = runs.iter().flat_map(|r| r.command_counts.keys()).collect();
    let command_counts = verbs
        .into_iter()
        .map(|v| (v.clone(), spread(runs, |r| r.command_counts.get(v).copied().unwrap_or(0) as f64)))
        .collect();
    let mut months: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in runs {
        for p in &r.funds_trajectory {
            months.entry(&p.month).or_default().push(p.funds_cents.cents() as f64);
        }
    }
    let trajectory = months
        .into_iter()
        .map(|(month, values)| MonthSpread { month: month.to_string(), funds_cents: Spread::of(&values).unwrap() })
        .collect();

    GroupSummary {
        label: label.to_string(),
        rank: 0,
        runs: runs.len(),
        seeds,
        context_windows,
        partial_runs: runs.iter().filter(|r| r.partial).count(),
        final_funds_cents: spread(runs, |r| r.final_funds_cents.cents() as f64),
        bankrupt_runs,
        bankrupt: format!("{bankrupt_runs}/{}", runs.len()),
        adversarial_ratio: spread_opt(runs, |r| r.adversarial_ratio),
        trust_gated_ratio: spread_opt(runs, |r| r.trust_gated_ratio),
        final_trust_adversarial: spread_opt(runs, |r| mean_trust(r, true)),
        final_trust_honest: spread_opt(runs, |r| mean_trust(r, false)),
        failures,
        scratchpad_per_100_turns: spread(runs, |r| r.scratchpad_per_100_turns),
        inspect_accept_ratio: spread_opt(runs, |r| r.inspect_accept_ratio),
        mean_active_tasks: spread(runs, |r| r.mean_active_tasks),
        commands_per_turn: spread(runs, |r| r.commands_per_turn),
        turns: spread(runs, |r| r.turns as f64),
        command_counts,
        cost_usd: spread_opt(runs, |r| r.cost_usd),
        tokens: spread_opt(runs, |r| r.tokens.map(|t| t as f64)),
        wall_minutes: spread(runs, |r| r.wall_minutes),
        revenue_per_cost_dollar: spread_opt(runs, |r| r.revenue_per_cost_dollar),
        trajectory,
    }
}

/// Groups labelled runs and ranks the groups by mean final funds, highest first.
pub fn aggregate(runs: &[LabelledRun]) -> Result<Vec<GroupSummary>, AnalyticsError> {
    if runs.is_empty() {
        return Err(AnalyticsError::EmptyGroup);
    }
    let mut groups: BTreeMap<&str, Vec<&RunStats>> = BTreeMap::new();
    for run in runs {
        groups.entry(&run.label).or_default().push(&run.stats);
    }
    let mut summaries: Vec<GroupSummary> = groups.iter().map(|(label, runs)| summarize(label, runs)).collect();
    summaries.sort_by(|a, b| {
        b.final_funds_cents.mean.total_cmp(&a.final_funds_cents.mean).then_with(|| a.label.cmp(&b.label))
    });
    for (i, s) in summaries.iter_mut().enumerate() {
        s.rank = i + 1;
    }
    Ok(summaries)
}
