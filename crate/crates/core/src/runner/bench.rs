use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::agent::{in_process_swarm, ReferenceSupporter};
use crate::model::{MatchConfig, Team};
use crate::scheduler::{Lobby, Scheduler, SupporterBudget};

use super::RunError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwarmBench {
    pub supporters: usize,
    pub ticks: u32,
    /// Scheduler time per tick: classification, scoring, selection and
    /// will update.
    pub median_tick_ms: f64,
    pub p90_tick_ms: f64,
    pub max_tick_ms: f64,
    /// Time the swarm itself took to produce its proposals.
    pub median_swarm_ms: f64,
    pub stalls: u32,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn quantile(sorted: &[Duration], q: f64) -> Duration {
    sorted[((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1]
}

/// Times the scheduler against an in-process swarm of `supporters`
/// supporters. Every fourth supporter echoes the reality; the rest push the
/// ball by 0.5, 1 or 1.5 m, alternating sides.
pub fn bench_swarm(supporters: usize, ticks: u32, seed: u64) -> Result<SwarmBench, RunError> {
    if ticks == 0 {
        return Err(RunError::Config("bench needs at least one tick".into()));
    }
    let base = MatchConfig { match_ticks: ticks, rng_seed: seed, ..MatchConfig::default() };
    let expected = u32::try_from(supporters).map_err(|_| RunError::Config("too many supporters".into()))?;
    let mut lobby = Lobby::new(base, SupporterBudget::Shared { budget: 1.0, expected })?;
    let pitch = lobby.config().pitch;
    let mut swarm = in_process_swarm(&mut lobby, supporters, Team::Home, |i| {
        let team = if i % 2 == 0 { Team::Home } else { Team::Guest };
        ReferenceSupporter::new(team, (i % 4) as f64 * 0.5, pitch)
    })?;
    let mut sched = Scheduler::start_match(lobby.into_config())?;

    let mut tick_times = Vec::with_capacity(ticks as usize);
    let mut swarm_times = Vec::with_capacity(ticks as usize);
    let mut stalls = 0;
    while !sched.is_finished() {
        let (_, reality) = sched.broadcast()?;
        let t0 = Instant::now();
        let proposals = swarm.proposals(&reality)?;
        let t1 = Instant::now();
        let rec = sched.run_tick(&proposals)?;
        tick_times.push(t1.elapsed());
        swarm_times.push(t1 - t0);
        stalls += u32::from(rec.is_stall());
    }
    tick_times.sort();
    swarm_times.sort();
    Ok(SwarmBench {
        supporters,
        ticks,
        median_tick_ms: ms(quantile(&tick_times, 0.5)),
        p90_tick_ms: ms(quantile(&tick_times, 0.9)),
        max_tick_ms: ms(*tick_times.last().unwrap()),
        median_swarm_ms: ms(quantile(&swarm_times, 0.5)),
        stalls,
    })
}
