use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::CheckKind;

pub const DEFAULT_WAYPOINT_BUDGET: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetDecision {
    Allow,
    Reject,
}

/// Per-(principal, destination) quota on waypoint queries.
///
/// Repeated waypoint queries can reveal next-hop relations one bit at a
/// time, so they are rationed. A limit of zero disables waypoint queries.
/// Other checks are never charged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    limit: u32,
    #[serde(with = "used_entries")]
    used: BTreeMap<(String, usize), u32>,
}

impl PrivacyBudget {
    pub fn new(limit: u32) -> Self {
        PrivacyBudget {
            limit,
            used: BTreeMap::new(),
        }
    }

    /// Same usage under a different limit.
    pub fn with_limit(mut self, limit: u32) -> Self {
        self.limit = limit;
        self
    }

    pub fn limit(&self) -> u32 {
        self.limit
    }

    pub fn used(&self, principal: &str, destination: usize) -> u32 {
        self.used
            .get(&(principal.to_string(), destination))
            .copied()
            .unwrap_or(0)
    }

    pub fn remaining(&self, principal: &str, destination: usize) -> u32 {
        self.limit.saturating_sub(self.used(principal, destination))
    }

    /// Charges one query if allowed.
    pub fn enforce(&mut self, principal: &str, check: CheckKind, destination: usize) -> BudgetDecision {
        if check != CheckKind::Waypoint {
            return BudgetDecision::Allow;
        }
        let used = self.used.entry((principal.to_string(), destination)).or_insert(0);
        if *used >= self.limit {
            BudgetDecision::Reject
        } else {
            *used += 1;
            BudgetDecision::Allow
        }
    }
}

impl Default for PrivacyBudget {
    fn default() -> Self {
        PrivacyBudget::new(DEFAULT_WAYPOINT_BUDGET)
    }
}

// JSON maps need string keys; store the ledger as a list of records.
mod used_entries {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Entry {
        principal: String,
        destination: usize,
        used: u32,
    }

    pub fn serialize<S: Serializer>(map: &BTreeMap<(String, usize), u32>, s: S) -> Result<S::Ok, S::Error> {
        map.iter()
            .map(|((p, d), u)| Entry {
                principal: p.clone(),
                destination: *d,
                used: *u,
            })
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<(String, usize), u32>, D::Error> {
        Ok(Vec::<Entry>::deserialize(d)?
            .into_iter()
            .map(|e| ((e.principal, e.destination), e.used))
            .collect())
    }
}
