//! Instance and allocation data model: validation, levels, exact integer
//! arithmetic helpers shared by every other module.
//!
//! All utilities and initial utilities are non-negative integers. Every
//! comparison elsewhere in the crate is carried out in exact integer
//! arithmetic (cross-multiplied where a fraction appears in a definition), so
//! construction rejects instances whose totals could overflow a signed 64-bit
//! range.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Non-negative integer utility.
pub type Value = u64;

/// A fair-allocation instance: `n` agents with initial utilities `b` and an
/// additive `n x m` utility matrix over `m` indivisible resources.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    m: usize,
    initial: Vec<Value>,
    utility: Vec<Vec<Value>>,
}

/// Structural assumptions an instance is expected to satisfy. These are
/// reported, never silently repaired.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    FewerThanTwoAgents { n: usize },
    AgentValuesNoResource { agent: usize },
    ResourceValuedByNoAgent { resource: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::FewerThanTwoAgents { n } => write!(f, "fewer than two agents (n = {n})"),
            Violation::AgentValuesNoResource { agent } => {
                write!(f, "agent {agent} values no resource")
            }
            Violation::ResourceValuedByNoAgent { resource } => {
                write!(f, "resource {resource} is valued by no agent")
            }
        }
    }
}

/// Result of structural validation. In strict mode any violation is an error;
/// in lenient mode the caller may treat them as warnings. Algorithms in this
/// crate require strict-valid instances.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_strict_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl Instance {
    /// Builds an instance, checking shape consistency and arithmetic headroom.
    /// Structural assumptions (n >= 2, no zero rows/columns) are checked by
    /// [`Instance::validate`], not here.
    pub fn new(initial: Vec<Value>, utility: Vec<Vec<Value>>) -> Result<Self> {
        let n = initial.len();
        if n == 0 {
            return Err(Error::Shape("instance needs at least one agent".into()));
        }
        if utility.len() != n {
            return Err(Error::Shape(format!(
                "utility matrix has {} rows for {} agents",
                utility.len(),
                n
            )));
        }
        let m = utility[0].len();
        if m == 0 {
            return Err(Error::Shape("instance needs at least one resource".into()));
        }
        for (i, row) in utility.iter().enumerate() {
            if row.len() != m {
                return Err(Error::Shape(format!(
                    "utility row {i} has length {} but m = {m}",
                    row.len()
                )));
            }
        }
        // Every b_j + u_i(R) must fit in i64 so that envy margins are exact.
        let mut max_row_sum: Value = 0;
        for (i, row) in utility.iter().enumerate() {
            let mut sum: Value = 0;
            for &v in row {
                sum = sum
                    .checked_add(v)
                    .ok_or_else(|| Error::Arithmetic(format!("utility row {i} sum overflows")))?;
            }
            max_row_sum = max_row_sum.max(sum);
        }
        let max_b = initial.iter().copied().max().unwrap_or(0);
        let headroom = max_b.checked_add(max_row_sum);
        match headroom {
            Some(total) if total <= i64::MAX as u64 => {}
            _ => {
                return Err(Error::Arithmetic(
                    "max initial utility plus max bundle utility exceeds signed 64-bit range"
                        .into(),
                ))
            }
        }
        Ok(Instance {
            m,
            initial,
            utility,
        })
    }

    pub fn agents(&self) -> usize {
        self.initial.len()
    }

    pub fn resources(&self) -> usize {
        self.m
    }

    /// Initial utility b_i.
    pub fn initial_utility(&self, agent: usize) -> Value {
        self.initial[agent]
    }

    /// Per-resource utility u_i({r}).
    pub fn utility(&self, agent: usize, resource: usize) -> Value {
        self.utility[agent][resource]
    }

    pub fn utility_row(&self, agent: usize) -> &[Value] {
        &self.utility[agent]
    }

    /// Additive bundle utility: the sum of u_i({r}) over the bundle. The
    /// empty bundle has utility 0.
    pub fn bundle_utility(&self, agent: usize, bundle: &[usize]) -> Result<Value> {
        if agent >= self.agents() {
            return Err(Error::Index(format!(
                "agent {agent} out of range (n = {})",
                self.agents()
            )));
        }
        let mut sum = 0;
        for &r in bundle {
            if r >= self.m {
                return Err(Error::Index(format!(
                    "resource {r} out of range (m = {})",
                    self.m
                )));
            }
            sum += self.utility[agent][r];
        }
        Ok(sum)
    }

    /// Unchecked bundle utility for validated internal callers.
    pub(crate) fn bundle_value(&self, agent: usize, bundle: &[usize]) -> Value {
        bundle.iter().map(|&r| self.utility[agent][r]).sum()
    }

    /// Reports all violated structural assumptions.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let n = self.agents();
        if n < 2 {
            violations.push(Violation::FewerThanTwoAgents { n });
        }
        for (i, row) in self.utility.iter().enumerate() {
            if row.iter().all(|&v| v == 0) {
                violations.push(Violation::AgentValuesNoResource { agent: i });
            }
        }
        for r in 0..self.m {
            if (0..n).all(|i| self.utility[i][r] == 0) {
                violations.push(Violation::ResourceValuedByNoAgent { resource: r });
            }
        }
        ValidationReport { violations }
    }

    /// Errors unless the instance passes strict validation.
    pub fn require_strict_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_strict_valid() {
            Ok(())
        } else {
            let list: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
            Err(Error::InvalidInstance(list.join("; ")))
        }
    }

    /// True iff every agent's utility row is constant.
    pub fn is_identical_resources(&self) -> bool {
        self.utility
            .iter()
            .all(|row| row.iter().all(|&v| v == row[0]))
    }

    /// Diminishing utilities: b_i < b_j implies u_i({r}) >= u_j({r}) for all
    /// agents i, j and resources r.
    pub fn is_diminishing(&self) -> bool {
        let n = self.agents();
        for i in 0..n {
            for j in 0..n {
                if self.initial[i] < self.initial[j] {
                    let dominated = (0..self.m).all(|r| self.utility[i][r] >= self.utility[j][r]);
                    if !dominated {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Groups agents by equal initial utility, ordered by strictly increasing
    /// value; ascending agent id within a level.
    pub fn levels(&self) -> LevelPartition {
        let n = self.agents();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| (self.initial[i], i));
        let mut levels: Vec<Vec<usize>> = Vec::new();
        let mut values: Vec<Value> = Vec::new();
        for i in order {
            if values.last() == Some(&self.initial[i]) {
                levels.last_mut().unwrap().push(i);
            } else {
                values.push(self.initial[i]);
                levels.push(vec![i]);
            }
        }
        let mut agent_level = vec![0usize; n];
        for (h, group) in levels.iter().enumerate() {
            for &i in group {
                agent_level[i] = h;
            }
        }
        LevelPartition {
            levels,
            values,
            agent_level,
        }
    }

    pub fn to_canonical_json(&self) -> String {
        let agents: Vec<AgentJson> = (0..self.agents())
            .map(|i| AgentJson {
                id: i,
                b: self.initial[i],
                u: self.utility[i].clone(),
            })
            .collect();
        serde_json::to_string(&InstanceJson { m: self.m, agents }).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: InstanceJson = serde_json::from_str(text)?;
        for (pos, agent) in raw.agents.iter().enumerate() {
            if agent.id != pos {
                return Err(Error::Shape(format!(
                    "agent ids must be 0..n-1 in order; position {pos} has id {}",
                    agent.id
                )));
            }
            if agent.u.len() != raw.m {
                return Err(Error::Shape(format!(
                    "agent {} has {} utilities but m = {}",
                    agent.id,
                    agent.u.len(),
                    raw.m
                )));
            }
        }
        let initial = raw.agents.iter().map(|a| a.b).collect();
        let utility = raw.agents.into_iter().map(|a| a.u).collect();
        Instance::new(initial, utility)
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    m: usize,
    agents: Vec<AgentJson>,
}

#[derive(Serialize, Deserialize)]
struct AgentJson {
    id: usize,
    b: Value,
    u: Vec<Value>,
}

/// Agents grouped by initial utility, in strictly increasing order of the
/// shared value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelPartition {
    /// Agent ids per level, ascending within each level.
    pub levels: Vec<Vec<usize>>,
    /// Shared initial utility of each level; strictly increasing.
    pub values: Vec<Value>,
    agent_level: Vec<usize>,
}

impl LevelPartition {
    pub fn count(&self) -> usize {
        self.levels.len()
    }

    pub fn level_of(&self, agent: usize) -> usize {
        self.agent_level[agent]
    }
}

/// Disjoint bundles of resource indices, one per agent. Completeness is a
/// predicate, not an invariant: bundles need not cover all resources.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    bundles: Vec<Vec<usize>>,
}

impl Allocation {
    /// Validates disjointness and index range; bundle contents are stored
    /// sorted so serialized allocations are canonical.
    pub fn new(bundles: Vec<Vec<usize>>, m: usize) -> Result<Self> {
        let mut seen = vec![false; m];
        let mut bundles = bundles;
        for bundle in &mut bundles {
            bundle.sort_unstable();
            for &r in bundle.iter() {
                if r >= m {
                    return Err(Error::Index(format!(
                        "resource {r} out of range (m = {m})"
                    )));
                }
                if seen[r] {
                    return Err(Error::Shape(format!(
                        "resource {r} appears in more than one bundle"
                    )));
                }
                seen[r] = true;
            }
        }
        Ok(Allocation { bundles })
    }

    pub fn empty(n: usize) -> Self {
        Allocation {
            bundles: vec![Vec::new(); n],
        }
    }

    pub fn agents(&self) -> usize {
        self.bundles.len()
    }

    pub fn bundle(&self, agent: usize) -> &[usize] {
        &self.bundles[agent]
    }

    pub fn bundles(&self) -> &[Vec<usize>] {
        &self.bundles
    }

    pub fn assigned_count(&self) -> usize {
        self.bundles.iter().map(|b| b.len()).sum()
    }

    /// Every resource assigned to exactly one agent.
    pub fn is_complete(&self, m: usize) -> bool {
        self.assigned_count() == m
    }

    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("allocation serializes")
    }

    pub fn from_json(text: &str, m: usize) -> Result<Self> {
        let raw: Allocation = serde_json::from_str(text)?;
        Allocation::new(raw.bundles, m)
    }
}
