//! Home-advantage study: the same two reference squads play repeated seeded
//! matches, once with supporters split evenly between the sides and once
//! with all supporter will behind the home side.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::Team;
use crate::rng::SelectionRng;

use super::{run_match, BehaviorKind, BudgetSpec, RunConfig, RunError, SupporterSpec, Transport};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOptions {
    pub repetitions: u32,
    /// Overrides the base config's match length.
    pub ticks: Option<u32>,
    pub supporters_per_side: u32,
    pub bias: f64,
    pub resamples: u32,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        ExperimentOptions { repetitions: 20, ticks: None, supporters_per_side: 10, bias: 1.0, resamples: 10_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchSummary {
    pub seed: u64,
    pub ticks: u64,
    pub stalls: u64,
    pub away_half_share: f64,
    pub home_half_share: f64,
    pub ball_mean_x: f64,
    pub home_supporter_wins: u64,
    /// Σ over ticks of the home supporters' total selection probability.
    pub home_supporter_expected_wins: f64,
    pub home_supporter_variance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmReport {
    pub name: String,
    pub home_budget: f64,
    pub guest_budget: f64,
    pub home_supporters: u32,
    pub guest_supporters: u32,
    pub matches: Vec<MatchSummary>,
    pub mean_away_half_share: f64,
    /// Pooled over all matches of the arm.
    pub home_supporter_share: f64,
    pub home_supporter_expected_share: f64,
    pub home_supporter_standard_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub options: ExperimentOptions,
    pub control: ArmReport,
    pub treatment: ArmReport,
    /// Treatment minus control mean away-half occupancy.
    pub occupancy_difference: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
}

struct Arm {
    name: &'static str,
    home: f64,
    guest: f64,
    home_count: u32,
    guest_count: u32,
}

fn arm_config(base: &RunConfig, arm: &Arm, opts: &ExperimentOptions, rep: u32) -> RunConfig {
    let mut cfg = base.clone();
    cfg.transport = Transport::InProcess;
    cfg.virtual_clock = true;
    cfg.seed = base.seed.wrapping_add(u64::from(rep));
    if let Some(t) = opts.ticks {
        cfg.ticks = t;
    }
    let group = |team, count| SupporterSpec {
        team,
        count,
        behavior: BehaviorKind::Reference,
        bias: opts.bias,
        latency_us: 0,
        in_process: false,
    };
    cfg.supporters = [(Team::Home, arm.home_count), (Team::Guest, arm.guest_count)]
        .into_iter()
        .filter(|&(_, n)| n > 0)
        .map(|(t, n)| group(t, n))
        .collect();
    cfg.supporter_budget = BudgetSpec::PerSide { home: arm.home, guest: arm.guest };
    cfg
}

/// Runs both arms and compares their away-half occupancy.
///
/// Control: `supporters_per_side` supporters on each side with half the
/// supporter budget each. Treatment: the home supporters alone with the
/// whole budget. Match `i` of either arm uses seed `base.seed + i`.
pub fn home_advantage_experiment(base: &RunConfig, opts: &ExperimentOptions) -> Result<ExperimentReport, RunError> {
    if opts.repetitions == 0 {
        return Err(RunError::Config("experiment needs at least one repetition".into()));
    }
    let n = opts.supporters_per_side;
    let arms = [
        Arm { name: "control", home: 0.5, guest: 0.5, home_count: n, guest_count: n },
        Arm { name: "treatment", home: 1.0, guest: 0.0, home_count: n, guest_count: 0 },
    ];
    let jobs: Vec<(usize, u32)> = (0..arms.len()).flat_map(|a| (0..opts.repetitions).map(move |r| (a, r))).collect();
    let results: Vec<MatchSummary> = jobs
        .par_iter()
        .map(|&(a, rep)| {
            let cfg = arm_config(base, &arms[a], opts, rep);
            let out = run_match(&cfg, |_| Ok(()), |_| Ok(()))?;
            let s = &out.stats;
            Ok(MatchSummary {
                seed: cfg.seed,
                ticks: s.ticks,
                stalls: s.stalls,
                away_half_share: s.away_half_share,
                home_half_share: s.home_half_share,
                ball_mean_x: s.ball_mean.x,
                home_supporter_wins: s.home_supporters.wins,
                home_supporter_expected_wins: s.home_supporters.expected_share * s.ticks as f64,
                home_supporter_variance: s.home_supporters.variance,
            })
        })
        .collect::<Result<_, RunError>>()?;

    let reps = opts.repetitions as usize;
    let mut reports = arms.iter().zip(results.chunks(reps)).map(|(arm, matches)| {
        let ticks: u64 = matches.iter().map(|m| m.ticks).sum();
        let t = ticks.max(1) as f64;
        ArmReport {
            name: arm.name.into(),
            home_budget: arm.home,
            guest_budget: arm.guest,
            home_supporters: arm.home_count,
            guest_supporters: arm.guest_count,
            mean_away_half_share: matches.iter().map(|m| m.away_half_share).sum::<f64>() / matches.len() as f64,
            home_supporter_share: matches.iter().map(|m| m.home_supporter_wins).sum::<u64>() as f64 / t,
            home_supporter_expected_share: matches.iter().map(|m| m.home_supporter_expected_wins).sum::<f64>() / t,
            home_supporter_standard_error: matches.iter().map(|m| m.home_supporter_variance).sum::<f64>().sqrt() / t,
            matches: matches.to_vec(),
        }
    });
    let control = reports.next().unwrap();
    let treatment = reports.next().unwrap();

    let a: Vec<f64> = treatment.matches.iter().map(|m| m.away_half_share).collect();
    let b: Vec<f64> = control.matches.iter().map(|m| m.away_half_share).collect();
    let (diff, lo, hi) = bootstrap_mean_difference(&a, &b, opts.resamples, base.seed);
    Ok(ExperimentReport { options: *opts, control, treatment, occupancy_difference: diff, ci95_low: lo, ci95_high: hi })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `mean(a) - mean(b)` with a percentile bootstrap 95% interval, each
/// sample resampled with replacement independently.
pub fn bootstrap_mean_difference(a: &[f64], b: &[f64], resamples: u32, seed: u64) -> (f64, f64, f64) {
    assert!(!a.is_empty() && !b.is_empty(), "bootstrap needs two non-empty samples");
    let diff = mean(a) - mean(b);
    if resamples == 0 {
        return (diff, diff, diff);
    }
    let mut rng = SelectionRng::split(seed, u64::MAX);
    let mut draw_mean = |v: &[f64]| {
        let mut s = 0.0;
        for _ in 0..v.len() {
            let i = ((rng.next_uniform() * v.len() as f64) as usize).min(v.len() - 1);
            s += v[i];
        }
        s / v.len() as f64
    };
    let mut diffs: Vec<f64> = (0..resamples).map(|_| draw_mean(a) - draw_mean(b)).collect();
    diffs.sort_by(f64::total_cmp);
    let pick = |q: f64| diffs[((q * resamples as f64).ceil() as usize).clamp(1, diffs.len()) - 1];
    (diff, pick(0.025), pick(0.975))
}
