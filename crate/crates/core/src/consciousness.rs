//! Soccer consciousness, the selection distributions built from it, the
//! draw that picks the next reality, and the will update that feeds the
//! scores back into the power of will.
//!
//! An agent's consciousness is its will divided by how far its previous
//! proposal landed from the reality that was actually selected. A perfect
//! prediction (distance zero) earns the best score among same-role agents
//! that missed; if nobody in the role missed, everyone scores their will.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};

use crate::model::{distance, AgentId, Role, Roster, StateVector, WillTable};
use crate::numeric::compensated_sum;
use crate::rng::SelectionRng;

/// Tolerance for `Σ P = 1`.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ScoreError {
    #[error("agent {0} has no previous proposal")]
    MissingPrevious(AgentId),
    #[error("agent {agent} has invalid will {value}")]
    BadWill { agent: AgentId, value: f64 },
    #[error("score {value} of agent {agent} is negative or not a number")]
    BadScore { agent: AgentId, value: f64 },
    #[error("scores must cover exactly the eligible agents; {0} does not fit")]
    Coverage(AgentId),
    #[error("will update rate {0} outside [0, 1]")]
    Rate(f64),
}

/// One agent's input to [`soccer_consciousness`].
#[derive(Clone, Copy, Debug)]
pub struct ScoringInput<'a> {
    pub agent: AgentId,
    pub role: Role,
    pub will: f64,
    /// What the agent proposed on the previous tick.
    pub prev_sent: Option<&'a StateVector>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredProposal {
    pub agent: AgentId,
    pub sc_value: f64,
    pub eligible: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    #[default]
    None,
    RepeatReality,
}

/// Selection probabilities per agent, sorted by agent id.
///
/// Either the entries sum to one, or there are none and the scheduler
/// keeps the current reality for a tick.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SelectionDistribution {
    pub entries: Vec<(AgentId, f64)>,
    pub fallback: Fallback,
}

impl SelectionDistribution {
    pub fn repeat_reality() -> Self {
        SelectionDistribution { entries: Vec::new(), fallback: Fallback::RepeatReality }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn probability(&self, agent: AgentId) -> f64 {
        match self.entries.binary_search_by_key(&agent, |e| e.0) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0.0,
        }
    }
}

/// Outcome of a draw.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    Agent(AgentId),
    RepeatReality,
}

/// Scores every agent's previous proposal against `reality`.
///
/// Scores come back in input order.
pub fn soccer_consciousness(
    agents: &[ScoringInput<'_>],
    reality: &StateVector,
) -> Result<Vec<(AgentId, f64)>, ScoreError> {
    let mut dists = Vec::with_capacity(agents.len());
    for a in agents {
        if !(a.will.is_finite() && a.will >= 0.0) {
            return Err(ScoreError::BadWill { agent: a.agent, value: a.will });
        }
        let prev = a.prev_sent.ok_or(ScoreError::MissingPrevious(a.agent))?;
        dists.push(distance(prev, reality));
    }

    // Per role: best score among agents that missed, if any missed.
    let mut best_miss: [Option<f64>; 2] = [None; 2];
    for (a, &d) in agents.iter().zip(&dists) {
        if d > 0.0 {
            let sc = ratio(a.will, d);
            let m = &mut best_miss[a.role as usize];
            *m = Some(m.map_or(sc, |m| m.max(sc)));
        }
    }

    Ok(agents
        .iter()
        .zip(&dists)
        .map(|(a, &d)| {
            let sc = if d > 0.0 {
                ratio(a.will, d)
            } else {
                best_miss[a.role as usize].unwrap_or(a.will)
            };
            (a.agent, sc)
        })
        .collect())
}

// w / d, saturating at f64::MAX rather than reaching infinity.
fn ratio(w: f64, d: f64) -> f64 {
    (w / d).min(f64::MAX)
}

/// Normalises the eligible scores into probabilities.
pub fn selection_distribution(scored: &[ScoredProposal]) -> Result<SelectionDistribution, ScoreError> {
    for s in scored {
        if !(s.sc_value >= 0.0) {
            return Err(ScoreError::BadScore { agent: s.agent, value: s.sc_value });
        }
    }
    let eligible = || scored.iter().filter(|s| s.eligible).map(|s| s.sc_value);
    let mut scale = 1.0;
    let mut total = compensated_sum(eligible());
    if !total.is_finite() {
        scale = eligible().fold(0.0, f64::max);
        total = compensated_sum(eligible().map(|v| v / scale));
    }
    if !(total > 0.0) {
        return Ok(SelectionDistribution::repeat_reality());
    }

    let mut entries: Vec<(AgentId, f64)> = scored
        .iter()
        .map(|s| {
            let p = if s.eligible { (s.sc_value / scale) / total } else { 0.0 };
            (s.agent, p)
        })
        .collect();
    entries.sort_by_key(|e| e.0);
    Ok(SelectionDistribution { entries, fallback: Fallback::None })
}

/// Marks every roster agent eligible or not and attaches its score.
///
/// An agent is eligible only if its proposal arrived on time at this tick
/// and at the previous one. `scored` must hold exactly the eligible agents.
pub fn late_filtered_scores(
    all_agents: &Roster,
    on_time_now: &BTreeSet<AgentId>,
    on_time_prev: &BTreeSet<AgentId>,
    scored: &[(AgentId, f64)],
) -> Result<Vec<ScoredProposal>, ScoreError> {
    let is_eligible = |id: &AgentId| on_time_now.contains(id) && on_time_prev.contains(id);
    let mut by_agent: HashMap<AgentId, f64> = HashMap::with_capacity(scored.len());
    for &(agent, sc) in scored {
        if !is_eligible(&agent) || by_agent.insert(agent, sc).is_some() {
            return Err(ScoreError::Coverage(agent));
        }
    }
    let out: Vec<ScoredProposal> = all_agents
        .ids()
        .into_iter()
        .map(|agent| {
            if is_eligible(&agent) {
                let sc_value = by_agent.remove(&agent).ok_or(ScoreError::Coverage(agent))?;
                Ok(ScoredProposal { agent, sc_value, eligible: true })
            } else {
                Ok(ScoredProposal { agent, sc_value: 0.0, eligible: false })
            }
        })
        .collect::<Result<_, _>>()?;
    if let Some(&agent) = by_agent.keys().next() {
        return Err(ScoreError::Coverage(agent));
    }
    Ok(out)
}

/// Selection restricted to agents that were on time now and one tick ago.
pub fn late_filtered_distribution(
    all_agents: &Roster,
    on_time_now: &BTreeSet<AgentId>,
    on_time_prev: &BTreeSet<AgentId>,
    scored: &[(AgentId, f64)],
) -> Result<SelectionDistribution, ScoreError> {
    selection_distribution(&late_filtered_scores(all_agents, on_time_now, on_time_prev, scored)?)
}

/// Inverse-CDF draw over the entries in ascending agent order, consuming
/// exactly one uniform from `rng` unless the distribution is empty.
pub fn sample(dist: &SelectionDistribution, rng: &mut SelectionRng) -> Selection {
    if dist.entries.is_empty() {
        return Selection::RepeatReality;
    }
    let sorted;
    let entries: &[(AgentId, f64)] = if dist.entries.is_sorted_by_key(|e| e.0) {
        &dist.entries
    } else {
        sorted = {
            let mut v = dist.entries.clone();
            v.sort_by_key(|e| e.0);
            v
        };
        &sorted
    };

    let u = rng.next_uniform();
    let mut cumulative = 0.0;
    for &(agent, p) in entries {
        cumulative += p;
        if u < cumulative {
            return Selection::Agent(agent);
        }
    }
    // Rounding left the CDF just short of 1.
    entries
        .iter()
        .rev()
        .find(|e| e.1 > 0.0)
        .map_or(Selection::RepeatReality, |e| Selection::Agent(e.0))
}

/// Blends each agent's will towards its share of the role's consciousness.
///
/// Within a role, `raw = (1 - α)·w + α·sc·(Σw / Σsc)`, then the role is
/// rescaled back to its previous total. Agents missing from `scored` count
/// as `sc = 0`. `α = 0` returns the table unchanged.
pub fn update_will(current: &WillTable, scored: &[ScoredProposal], alpha: f64) -> Result<WillTable, ScoreError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(ScoreError::Rate(alpha));
    }
    let mut sc_of: Vec<(AgentId, f64)> = Vec::with_capacity(scored.len());
    for s in scored {
        if !(s.sc_value >= 0.0) {
            return Err(ScoreError::BadScore { agent: s.agent, value: s.sc_value });
        }
        if s.eligible {
            sc_of.push((s.agent, s.sc_value));
        }
    }
    if alpha == 0.0 {
        return Ok(current.clone());
    }
    // Later entries win on repeated agents.
    sc_of.reverse();
    sc_of.sort_by_key(|e| e.0);
    sc_of.dedup_by_key(|e| e.0);
    let sc = |agent: AgentId| sc_of.binary_search_by_key(&agent, |e| e.0).map_or(0.0, |i| sc_of[i].1);

    let mut raw: Vec<(AgentId, Role, f64)> = Vec::with_capacity(current.len());
    for role in [Role::Player, Role::Supporter] {
        let members = || current.iter().filter(move |e| e.1 == role);
        let will_total = current.role_sum(role);
        let mut sc_scale = 1.0;
        let mut sc_total = compensated_sum(members().map(|e| sc(e.0)));
        if !sc_total.is_finite() {
            sc_scale = members().map(|e| sc(e.0)).fold(0.0, f64::max);
            sc_total = compensated_sum(members().map(|e| sc(e.0) / sc_scale));
        }

        let start = raw.len();
        for (agent, _, w) in members() {
            let value = if sc_total > 0.0 {
                (1.0 - alpha) * w + alpha * (sc(agent) / sc_scale) * (will_total / sc_total)
            } else {
                w
            };
            raw.push((agent, role, value));
        }

        let raw_total = compensated_sum(raw[start..].iter().map(|e| e.2));
        if raw_total > 0.0 {
            let k = will_total / raw_total;
            for e in &mut raw[start..] {
                e.2 *= k;
            }
        }
    }
    raw.sort_by_key(|e| e.0);
    Ok(WillTable::from_values_unchecked(raw.into_iter()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Position, Team};
    use rand::{Rng, SeedableRng};

    fn shifted(dx: f64) -> StateVector {
        let mut s = StateVector::zeroed();
        s.ball = Position::new(dx, 0.0);
        s
    }

    fn inputs<'a>(role: Role, rows: &[(f64, &'a StateVector)]) -> Vec<ScoringInput<'a>> {
        rows.iter()
            .enumerate()
            .map(|(i, &(w, s))| ScoringInput { agent: AgentId(i as u32 + 1), role, will: w, prev_sent: Some(s) })
            .collect()
    }

    fn scored(values: &[f64]) -> Vec<ScoredProposal> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| ScoredProposal { agent: AgentId(i as u32 + 1), sc_value: v, eligible: true })
            .collect()
    }

    #[test]
    fn sc_division_branch() {
        let reality = StateVector::zeroed();
        let p = shifted(2.0);
        let out = soccer_consciousness(&inputs(Role::Player, &[(1.0, &p)]), &reality).unwrap();
        assert_eq!(out, vec![(AgentId(1), 0.5)]);
    }

    #[test]
    fn sc_perfect_predictor_takes_role_max() {
        let reality = StateVector::zeroed();
        let (a, b) = (shifted(2.0), shifted(4.0));
        let out = soccer_consciousness(
            &inputs(Role::Player, &[(1.0, &a), (1.0, &b), (1.0, &reality)]),
            &reality,
        )
        .unwrap();
        let sc: Vec<f64> = out.iter().map(|e| e.1).collect();
        assert_eq!(sc, vec![0.5, 0.25, 0.5]);
    }

    #[test]
    fn sc_all_perfect_falls_back_to_will() {
        let reality = StateVector::zeroed();
        let out = soccer_consciousness(&inputs(Role::Supporter, &[(0.3, &reality), (0.7, &reality)]), &reality)
            .unwrap();
        let sc: Vec<f64> = out.iter().map(|e| e.1).collect();
        assert_eq!(sc, vec![0.3, 0.7]);
    }

    #[test]
    fn sc_max_is_scoped_by_role() {
        let reality = StateVector::zeroed();
        let near = shifted(0.5);
        let rows = [
            ScoringInput { agent: AgentId(1), role: Role::Player, will: 1.0, prev_sent: Some(&near) },
            ScoringInput { agent: AgentId(2), role: Role::Supporter, will: 0.2, prev_sent: Some(&reality) },
        ];
        let out = soccer_consciousness(&rows, &reality).unwrap();
        assert_eq!(out, vec![(AgentId(1), 2.0), (AgentId(2), 0.2)]);
    }

    #[test]
    fn sc_requires_previous_proposal() {
        let rows = [ScoringInput { agent: AgentId(4), role: Role::Player, will: 1.0, prev_sent: None }];
        assert_eq!(
            soccer_consciousness(&rows, &StateVector::zeroed()),
            Err(ScoreError::MissingPrevious(AgentId(4)))
        );
    }

    #[test]
    fn sc_saturates_on_tiny_distance() {
        let reality = StateVector::zeroed();
        let mut p = reality;
        p.ball.x = 1e-150;
        let out = soccer_consciousness(&inputs(Role::Player, &[(1e200, &p)]), &reality).unwrap();
        assert_eq!(out[0].1, f64::MAX);
    }

    #[test]
    fn distribution_normalises() {
        let d = selection_distribution(&scored(&[1.0, 1.0, 2.0])).unwrap();
        let p: Vec<f64> = d.entries.iter().map(|e| e.1).collect();
        assert_eq!(p, vec![0.25, 0.25, 0.5]);
        assert_eq!(d.fallback, Fallback::None);

        let single = selection_distribution(&scored(&[0.37])).unwrap();
        assert_eq!(single.entries, vec![(AgentId(1), 1.0)]);
    }

    #[test]
    fn distribution_empty_and_zero_fall_back() {
        assert_eq!(selection_distribution(&[]).unwrap(), SelectionDistribution::repeat_reality());
        assert_eq!(selection_distribution(&scored(&[0.0, 0.0])).unwrap(), SelectionDistribution::repeat_reality());
        let mut s = scored(&[1.0]);
        s[0].eligible = false;
        assert!(selection_distribution(&s).unwrap().is_empty());
    }

    #[test]
    fn distribution_rejects_negative() {
        assert!(matches!(selection_distribution(&scored(&[1.0, -0.1])), Err(ScoreError::BadScore { .. })));
        assert!(matches!(selection_distribution(&scored(&[f64::NAN])), Err(ScoreError::BadScore { .. })));
    }

    #[test]
    fn distribution_survives_overflowing_totals() {
        let d = selection_distribution(&scored(&[f64::MAX, f64::MAX, 1.0])).unwrap();
        let p: Vec<f64> = d.entries.iter().map(|e| e.1).collect();
        assert_eq!(p[0], 0.5);
        assert_eq!(p[1], 0.5);
        assert!(p[2] >= 0.0 && p[2] < 1e-300);
    }

    #[test]
    fn distribution_matches_summation_oracle() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(0x5EED);
        for _ in 0..1000 {
            let n = rng.random_range(1..50);
            let values: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
            let d = selection_distribution(&scored(&values)).unwrap();
            // Oracle: plain left-to-right sum, then divide.
            let mut total = 0.0;
            for v in &values {
                total += v;
            }
            let mut sum_p = 0.0;
            for (i, (_, p)) in d.entries.iter().enumerate() {
                assert!(*p >= 0.0);
                assert!((p - values[i] / total).abs() <= 1e-12);
                sum_p += p;
            }
            assert!((sum_p - 1.0).abs() <= PROBABILITY_TOLERANCE);
        }
    }

    fn roster_of(n: u32) -> Roster {
        let mut r = Roster::new();
        for i in 1..=n {
            r.add_supporter(AgentId(i), Team::Home).unwrap();
        }
        r
    }

    fn set(ids: &[u32]) -> BTreeSet<AgentId> {
        ids.iter().map(|&i| AgentId(i)).collect()
    }

    #[test]
    fn late_now_is_excluded_and_rest_renormalised() {
        let r = roster_of(3);
        let d = late_filtered_distribution(
            &r,
            &set(&[1, 3]),
            &set(&[1, 2, 3]),
            &[(AgentId(1), 1.0), (AgentId(3), 3.0)],
        )
        .unwrap();
        assert_eq!(d.entries, vec![(AgentId(1), 0.25), (AgentId(2), 0.0), (AgentId(3), 0.75)]);
    }

    #[test]
    fn late_previously_is_zero() {
        let r = roster_of(3);
        let d = late_filtered_distribution(&r, &set(&[1, 2, 3]), &set(&[1, 3]), &[(AgentId(1), 2.0), (AgentId(3), 2.0)])
            .unwrap();
        assert_eq!(d.probability(AgentId(2)), 0.0);
        assert_eq!(d.probability(AgentId(1)), 0.5);
    }

    #[test]
    fn nobody_on_time_repeats_reality() {
        let r = roster_of(3);
        let d = late_filtered_distribution(&r, &set(&[]), &set(&[1, 2]), &[]).unwrap();
        assert_eq!(d, SelectionDistribution::repeat_reality());
    }

    #[test]
    fn late_filter_checks_coverage() {
        let r = roster_of(3);
        let err = late_filtered_distribution(&r, &set(&[1]), &set(&[1]), &[(AgentId(2), 1.0)]);
        assert_eq!(err, Err(ScoreError::Coverage(AgentId(2))));
        let err = late_filtered_distribution(&r, &set(&[1, 2]), &set(&[1, 2]), &[(AgentId(1), 1.0)]);
        assert_eq!(err, Err(ScoreError::Coverage(AgentId(2))));
    }

    #[test]
    fn sample_degenerate_and_empty() {
        let mut rng = SelectionRng::new(3);
        let d = SelectionDistribution { entries: vec![(AgentId(7), 1.0)], fallback: Fallback::None };
        for _ in 0..100 {
            assert_eq!(sample(&d, &mut rng), Selection::Agent(AgentId(7)));
        }
        assert_eq!(sample(&SelectionDistribution::repeat_reality(), &mut rng), Selection::RepeatReality);
    }

    #[test]
    fn sample_never_picks_zero_probability() {
        let d = SelectionDistribution {
            entries: vec![(AgentId(1), 0.0), (AgentId(2), 1.0), (AgentId(3), 0.0)],
            fallback: Fallback::None,
        };
        let mut rng = SelectionRng::new(11);
        for _ in 0..1000 {
            assert_eq!(sample(&d, &mut rng), Selection::Agent(AgentId(2)));
        }
    }

    #[test]
    fn sample_order_is_by_agent_id() {
        // With u just below 0.25 the first id in ascending order must win.
        let sorted = SelectionDistribution {
            entries: vec![(AgentId(1), 0.25), (AgentId(2), 0.75)],
            fallback: Fallback::None,
        };
        let reversed = SelectionDistribution {
            entries: vec![(AgentId(2), 0.75), (AgentId(1), 0.25)],
            fallback: Fallback::None,
        };
        for seed in 0..200 {
            let a = sample(&sorted, &mut SelectionRng::new(seed));
            let b = sample(&reversed, &mut SelectionRng::new(seed));
            assert_eq!(a, b);
        }
    }

    #[test]
    fn sample_frequencies_match() {
        let d = selection_distribution(&scored(&[1.0, 1.0, 2.0])).unwrap();
        let mut rng = SelectionRng::new(2024);
        let mut counts = [0usize; 3];
        let draws = 100_000;
        for _ in 0..draws {
            match sample(&d, &mut rng) {
                Selection::Agent(AgentId(i)) => counts[i as usize - 1] += 1,
                Selection::RepeatReality => panic!("unexpected stall"),
            }
        }
        for (c, p) in counts.iter().zip([0.25, 0.25, 0.5]) {
            assert!((*c as f64 / draws as f64 - p).abs() <= 0.01);
        }
    }

    fn will_of(rows: &[(u32, Role, f64)]) -> WillTable {
        WillTable::from_entries(rows.iter().map(|&(i, r, w)| (AgentId(i), r, w))).unwrap()
    }

    #[test]
    fn will_alpha_zero_is_identity() {
        let w = will_of(&[(1, Role::Player, 0.3), (2, Role::Player, 1.7), (3, Role::Supporter, 0.4)]);
        let out = update_will(&w, &scored(&[5.0, 0.1, 9.0]), 0.0).unwrap();
        assert_eq!(out, w);
    }

    #[test]
    fn will_full_rate_example() {
        let w = will_of(&[(1, Role::Player, 1.0), (2, Role::Player, 1.0)]);
        let out = update_will(&w, &scored(&[1.0, 3.0]), 1.0).unwrap();
        // Independent derivation: at α = 1 the new will is the sc share of
        // the role total, 2·1/4 and 2·3/4.
        let expect = [2.0 * 1.0 / (1.0 + 3.0), 2.0 * 3.0 / (1.0 + 3.0)];
        assert_eq!(out.get(AgentId(1)), Some(0.5));
        assert_eq!(out.get(AgentId(2)), Some(1.5));
        assert_eq!([out.get(AgentId(1)).unwrap(), out.get(AgentId(2)).unwrap()], expect);
        assert_eq!(out.player_sum(), 2.0);
    }

    #[test]
    fn will_absent_agents_decay() {
        let w = will_of(&[(1, Role::Player, 1.0), (2, Role::Player, 1.0)]);
        let only_first = [ScoredProposal { agent: AgentId(1), sc_value: 4.0, eligible: true }];
        let out = update_will(&w, &only_first, 0.5).unwrap();
        assert_eq!(out.get(AgentId(2)), Some(0.5));
        assert_eq!(out.get(AgentId(1)), Some(1.5));
    }

    #[test]
    fn will_rejects_bad_rate() {
        let w = will_of(&[(1, Role::Player, 1.0)]);
        assert_eq!(update_will(&w, &[], 1.5), Err(ScoreError::Rate(1.5)));
        assert!(update_will(&w, &[], f64::NAN).is_err());
        assert!(update_will(&w, &[], -0.1).is_err());
    }

    #[test]
    fn will_converges_to_sc_proportions() {
        let w = will_of(&[
            (1, Role::Player, 1.0),
            (2, Role::Player, 1.0),
            (3, Role::Player, 1.0),
            (4, Role::Supporter, 0.2),
            (5, Role::Supporter, 0.6),
        ]);
        let sc = scored(&[1.0, 2.0, 7.0, 3.0, 1.0]);
        let target = [0.3, 0.6, 2.1, 0.6, 0.2];
        let l1 = |t: &WillTable| -> f64 {
            (1..=5).map(|i| (t.get(AgentId(i)).unwrap() - target[i as usize - 1]).abs()).sum()
        };
        let mut cur = w;
        let mut last = l1(&cur);
        for _ in 0..1000 {
            cur = update_will(&cur, &sc, 0.1).unwrap();
            let now = l1(&cur);
            assert!(now <= last + 1e-15);
            last = now;
        }
        assert!(last < 1e-9);
    }

    proptest::proptest! {
        #[test]
        fn will_update_preserves_role_sums(seed in proptest::prelude::any::<u64>(), alpha in 0.0f64..=1.0) {
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let players = rng.random_range(1..23u32);
            let supporters = rng.random_range(0..30u32);
            let mut pw: Vec<f64> = (0..players).map(|_| rng.random_range(0.0..1.0)).collect();
            let ps: f64 = pw.iter().sum();
            pw.iter_mut().for_each(|w| *w *= players as f64 / ps);
            let budget = rng.random_range(0.0..1.0);
            let sw: Vec<f64> = (0..supporters).map(|_| budget / supporters as f64).collect();
            let mut rows = Vec::new();
            for (i, w) in pw.iter().enumerate() { rows.push((AgentId(i as u32), Role::Player, *w)); }
            for (i, w) in sw.iter().enumerate() { rows.push((AgentId(100 + i as u32), Role::Supporter, *w)); }
            let Ok(table) = WillTable::from_entries(rows.clone()) else { return Ok(()); };
            let sc: Vec<ScoredProposal> = rows.iter().map(|r| ScoredProposal {
                agent: r.0, sc_value: rng.random_range(0.0..5.0), eligible: rng.random_bool(0.8)
            }).collect();
            let out = update_will(&table, &sc, alpha).unwrap();
            proptest::prop_assert!((out.player_sum() - players as f64).abs() <= 1e-9);
            proptest::prop_assert!((out.supporter_sum() - table.supporter_sum()).abs() <= 1e-9);
            proptest::prop_assert!(out.iter().all(|e| e.2 >= 0.0));
        }

        #[test]
        fn distribution_is_scale_invariant(seed in proptest::prelude::any::<u64>()) {
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let reality = StateVector::zeroed();
            let n = rng.random_range(1..12);
            let props: Vec<StateVector> = (0..n).map(|_| {
                if rng.random_bool(0.3) { reality } else { shifted(rng.random_range(0.01..20.0)) }
            }).collect();
            let wills: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
            let dist_for = |c: f64| {
                let rows: Vec<ScoringInput> = (0..n).map(|i| ScoringInput {
                    agent: AgentId(i as u32),
                    role: if i % 3 == 0 { Role::Supporter } else { Role::Player },
                    will: wills[i] * c,
                    prev_sent: Some(&props[i]),
                }).collect();
                let sc = soccer_consciousness(&rows, &reality).unwrap();
                let sp: Vec<ScoredProposal> = sc.iter().map(|&(agent, v)| ScoredProposal { agent, sc_value: v, eligible: true }).collect();
                selection_distribution(&sp).unwrap()
            };
            let base = dist_for(1.0);
            for c in [1e-6, 1e6] {
                let scaled = dist_for(c);
                proptest::prop_assert_eq!(base.entries.len(), scaled.entries.len());
                for (a, b) in base.entries.iter().zip(&scaled.entries) {
                    proptest::prop_assert!((a.1 - b.1).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn closer_prediction_never_lowers_probability(
            d1 in 0.01f64..50.0, shrink in 0.01f64..1.0, others in proptest::collection::vec(0.01f64..50.0, 1..6)
        ) {
            let reality = StateVector::zeroed();
            let prob = |d_first: f64| {
                let mut props = vec![shifted(d_first)];
                props.extend(others.iter().map(|&d| shifted(d)));
                let rows: Vec<ScoringInput> = props.iter().enumerate().map(|(i, p)| ScoringInput {
                    agent: AgentId(i as u32), role: Role::Player, will: 1.0, prev_sent: Some(p),
                }).collect();
                let sc = soccer_consciousness(&rows, &reality).unwrap();
                let sp: Vec<ScoredProposal> = sc.iter().map(|&(agent, v)| ScoredProposal { agent, sc_value: v, eligible: true }).collect();
                selection_distribution(&sp).unwrap().probability(AgentId(0))
            };
            proptest::prop_assert!(prob(d1 * shrink) >= prob(d1));
        }

        #[test]
        fn perfect_prediction_dominates(ds in proptest::collection::vec(0.0f64..30.0, 2..10)) {
            let reality = StateVector::zeroed();
            let mut props: Vec<StateVector> = ds.iter().map(|&d| shifted(d)).collect();
            props[0] = reality;
            let rows: Vec<ScoringInput> = props.iter().enumerate().map(|(i, p)| ScoringInput {
                agent: AgentId(i as u32), role: Role::Player, will: 1.0, prev_sent: Some(p),
            }).collect();
            let sc = soccer_consciousness(&rows, &reality).unwrap();
            for (i, &(_, v)) in sc.iter().enumerate() {
                if distance(&props[i], &reality) > 0.0 {
                    proptest::prop_assert!(sc[0].1 >= v);
                }
            }
        }
    }
}
