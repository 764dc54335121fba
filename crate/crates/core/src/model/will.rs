use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::{AgentId, Role};
use crate::numeric::compensated_sum;

/// Absolute tolerance for the role-sum constraints.
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum WillError {
    #[error("will of {agent} is {value}, must be finite and non-negative")]
    BadValue { agent: AgentId, value: f64 },
    #[error("player wills sum to {sum}, expected {count}")]
    PlayerSum { sum: f64, count: usize },
    #[error("supporter wills sum to {0}, must not exceed 1")]
    SupporterBudget(f64),
    #[error("agent {0} already present")]
    Duplicate(AgentId),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
struct WillEntry {
    role: Role,
    w: f64,
}

/// Power of will per agent.
///
/// Player wills always sum to the number of players and supporter wills to
/// at most one. Every constructor and mutator checks both.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<WillRow>", into = "Vec<WillRow>")]
pub struct WillTable {
    entries: BTreeMap<AgentId, WillEntry>,
    player_count: usize,
    // Running totals for the insert checks. The public sums are recomputed
    // from the entries so equal tables always report equal sums.
    player_sum: f64,
    supporter_sum: f64,
}

#[derive(Serialize, Deserialize)]
struct WillRow {
    agent: AgentId,
    role: Role,
    w: f64,
}

impl WillTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries<I>(entries: I) -> Result<Self, WillError>
    where
        I: IntoIterator<Item = (AgentId, Role, f64)>,
    {
        let mut map = BTreeMap::new();
        for (agent, role, w) in entries {
            check_value(agent, w)?;
            if map.insert(agent, WillEntry { role, w }).is_some() {
                return Err(WillError::Duplicate(agent));
            }
        }
        let table = Self::with_sums(map);
        table.check_sums()?;
        Ok(table)
    }

    /// Adds one agent, failing if the table would break a constraint.
    pub fn insert(&mut self, agent: AgentId, role: Role, w: f64) -> Result<(), WillError> {
        check_value(agent, w)?;
        if self.entries.contains_key(&agent) {
            return Err(WillError::Duplicate(agent));
        }
        let mut next = WillTable {
            entries: BTreeMap::new(),
            player_count: self.player_count,
            player_sum: self.player_sum,
            supporter_sum: self.supporter_sum,
        };
        match role {
            Role::Player => {
                next.player_count += 1;
                next.player_sum += w;
            }
            Role::Supporter => next.supporter_sum += w,
        }
        next.check_sums()?;
        next.entries = std::mem::take(&mut self.entries);
        next.entries.insert(agent, WillEntry { role, w });
        *self = next;
        Ok(())
    }

    pub fn get(&self, agent: AgentId) -> Option<f64> {
        self.entries.get(&agent).map(|e| e.w)
    }

    pub fn role(&self, agent: AgentId) -> Option<Role> {
        self.entries.get(&agent).map(|e| e.role)
    }

    /// `(agent, role, w)` in ascending agent order.
    pub fn iter(&self) -> impl Iterator<Item = (AgentId, Role, f64)> + '_ {
        self.entries.iter().map(|(&a, e)| (a, e.role, e.w))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn player_count(&self) -> usize {
        self.player_count
    }

    pub fn player_sum(&self) -> f64 {
        self.role_sum(Role::Player)
    }

    pub fn supporter_sum(&self) -> f64 {
        self.role_sum(Role::Supporter)
    }

    /// Compensated sum in ascending agent order.
    pub fn role_sum(&self, role: Role) -> f64 {
        compensated_sum(self.entries.values().filter(|e| e.role == role).map(|e| e.w))
    }

    /// Builds a table from values already known to satisfy the constraints
    /// up to rounding. Used by the will update, which renormalises itself.
    pub(crate) fn from_values_unchecked(values: impl Iterator<Item = (AgentId, Role, f64)>) -> Self {
        Self::with_sums(values.map(|(a, role, w)| (a, WillEntry { role, w })).collect())
    }

    fn with_sums(entries: BTreeMap<AgentId, WillEntry>) -> Self {
        let player_count = entries.values().filter(|e| e.role == Role::Player).count();
        let sum_of = |role| compensated_sum(entries.values().filter(|e| e.role == role).map(|e| e.w));
        let player_sum = sum_of(Role::Player);
        let supporter_sum = sum_of(Role::Supporter);
        WillTable { entries, player_count, player_sum, supporter_sum }
    }

    fn check_sums(&self) -> Result<(), WillError> {
        if (self.player_sum - self.player_count as f64).abs() > SUM_TOLERANCE {
            return Err(WillError::PlayerSum { sum: self.player_sum, count: self.player_count });
        }
        if self.supporter_sum > 1.0 + SUM_TOLERANCE {
            return Err(WillError::SupporterBudget(self.supporter_sum));
        }
        Ok(())
    }
}

// Cached sums are derived data; equality is over the entries.
impl PartialEq for WillTable {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

fn check_value(agent: AgentId, w: f64) -> Result<(), WillError> {
    if w.is_finite() && w >= 0.0 {
        Ok(())
    } else {
        Err(WillError::BadValue { agent, value: w })
    }
}

impl From<WillTable> for Vec<WillRow> {
    fn from(t: WillTable) -> Self {
        t.iter().map(|(agent, role, w)| WillRow { agent, role, w }).collect()
    }
}

impl TryFrom<Vec<WillRow>> for WillTable {
    type Error = WillError;

    fn try_from(rows: Vec<WillRow>) -> Result<Self, Self::Error> {
        WillTable::from_entries(rows.into_iter().map(|r| (r.agent, r.role, r.w)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn players_must_sum_to_count() {
        let ok = WillTable::from_entries([
            (AgentId(1), Role::Player, 0.5),
            (AgentId(2), Role::Player, 1.5),
        ])
        .unwrap();
        assert_eq!(ok.player_sum(), 2.0);
        assert_eq!(ok.player_count(), 2);

        let bad = WillTable::from_entries([(AgentId(1), Role::Player, 0.5)]);
        assert!(matches!(bad, Err(WillError::PlayerSum { .. })));
    }

    #[test]
    fn supporter_budget_is_enforced() {
        let mut t = WillTable::new();
        for i in 0..4 {
            t.insert(AgentId(i), Role::Supporter, 0.25).unwrap();
        }
        assert_eq!(t.supporter_sum(), 1.0);
        let before = t.clone();
        assert!(matches!(t.insert(AgentId(9), Role::Supporter, 0.01), Err(WillError::SupporterBudget(_))));
        assert_eq!(t, before);
        assert!(t.insert(AgentId(9), Role::Supporter, 0.0).is_ok());
    }

    #[test]
    fn sums_do_not_depend_on_how_the_table_was_built() {
        let w = 1.0 / 300.0;
        let mut grown = WillTable::new();
        for i in 0..300 {
            grown.insert(AgentId(i), Role::Supporter, w).unwrap();
        }
        let rebuilt: WillTable = serde_json::from_str(&serde_json::to_string(&grown).unwrap()).unwrap();
        assert_eq!(grown.supporter_sum().to_bits(), rebuilt.supporter_sum().to_bits());
    }

    #[test]
    fn rejects_negative_and_nan() {
        let mut t = WillTable::new();
        assert!(matches!(t.insert(AgentId(1), Role::Supporter, -0.1), Err(WillError::BadValue { .. })));
        assert!(matches!(t.insert(AgentId(1), Role::Supporter, f64::NAN), Err(WillError::BadValue { .. })));
        t.insert(AgentId(1), Role::Player, 1.0).unwrap();
        assert_eq!(t.insert(AgentId(1), Role::Player, 1.0), Err(WillError::Duplicate(AgentId(1))));
        // A player with w != 1 would break the player sum.
        assert!(t.insert(AgentId(2), Role::Player, 2.0).is_err());
    }

    #[test]
    fn serde_validates() {
        let t = WillTable::from_entries([(AgentId(3), Role::Player, 1.0), (AgentId(4), Role::Supporter, 0.3)])
            .unwrap();
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(serde_json::from_str::<WillTable>(&json).unwrap(), t);
        assert!(serde_json::from_str::<WillTable>(r#"[{"agent":1,"role":"supporter","w":2.0}]"#).is_err());
    }
}
