//! Max-min share with initial utilities: the share an agent could secure by
//! choosing the allocation themselves, counting every agent's initial utility
//! into the bundles. General instances are handled by exhaustive assignment
//! enumeration behind a guard; identical resources get an exact greedy fast
//! path.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Allocation, Instance, Value};
use crate::oracle::OracleConfig;
use crate::par;
use crate::ratio::Ratio;

/// mu_i: the maximum over all allocations of min_j (b_j + u_i(X_j)). Assigning
/// more can only raise bundle values, so the maximum is attained by a complete
/// allocation and enumerating the n^m complete assignments suffices.
pub fn compute_mms(inst: &Instance, agent: usize, cfg: &OracleConfig) -> Result<Value> {
    if agent >= inst.agents() {
        return Err(Error::Index(format!("agent {agent} out of range")));
    }
    if inst.is_identical_resources() {
        return Ok(compute_mms_identical(inst, agent));
    }
    compute_mms_exhaustive(inst, agent, cfg)
}

/// Exhaustive path over all n^m assignments, independent of the fast path.
pub fn compute_mms_exhaustive(
    inst: &Instance,
    agent: usize,
    cfg: &OracleConfig,
) -> Result<Value> {
    let n = inst.agents();
    let m = inst.resources();
    let count = {
        let mut acc: u128 = 1;
        for _ in 0..m {
            acc = acc.checked_mul(n as u128).ok_or(Error::GuardExceeded {
                need: u128::MAX,
                limit: cfg.max_assignments,
            })?;
        }
        if acc > cfg.max_assignments || acc > u64::MAX as u128 {
            return Err(Error::GuardExceeded {
                need: acc,
                limit: cfg.max_assignments,
            });
        }
        acc as u64
    };
    let row = inst.utility_row(agent);
    let best = par::max_score(count, cfg.force_sequential, |k| {
        let mut totals: Vec<u64> = (0..n).map(|j| inst.initial_utility(j)).collect();
        let mut rest = k;
        for r in (0..m).rev() {
            let receiver = (rest % n as u64) as usize;
            rest /= n as u64;
            totals[receiver] += row[r];
        }
        totals.into_iter().min().expect("n >= 1")
    });
    Ok(best.expect("at least one assignment"))
}

/// Identical-resource fast path: with per-resource value v for `agent`, the
/// best min over counts is reached by water-filling, always topping up the
/// currently poorest bundle (lowest agent id on ties).
pub fn compute_mms_identical(inst: &Instance, agent: usize) -> Value {
    debug_assert!(inst.is_identical_resources());
    let v = inst.utility(agent, 0);
    let n = inst.agents();
    let mut totals: Vec<u64> = (0..n).map(|j| inst.initial_utility(j)).collect();
    for _ in 0..inst.resources() {
        let poorest = (0..n).min_by_key(|&j| (totals[j], j)).expect("n >= 1");
        totals[poorest] += v;
    }
    totals.into_iter().min().expect("n >= 1")
}

/// Shares of all agents.
pub fn all_shares(inst: &Instance, cfg: &OracleConfig) -> Result<Vec<Value>> {
    (0..inst.agents())
        .map(|i| compute_mms(inst, i, cfg))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct MmsAgentVerdict {
    pub i: usize,
    pub mu: Value,
    pub total: Value,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MmsReport {
    pub notion: String,
    pub alpha: String,
    pub satisfied: bool,
    pub agents: Vec<MmsAgentVerdict>,
}

pub(crate) fn allocation_meets_shares(
    inst: &Instance,
    alloc: &Allocation,
    alpha: Ratio,
    mu: &[Value],
) -> bool {
    (0..inst.agents()).all(|i| {
        let total = inst.initial_utility(i) + inst.bundle_value(i, alloc.bundle(i));
        alpha.le_scaled(total, mu[i])
    })
}

/// Checks b_i + u_i(X_i) >= alpha * mu_i for every agent, with the comparison
/// cross-multiplied so it stays exact.
pub fn check_mms_init(
    inst: &Instance,
    alloc: &Allocation,
    alpha: Ratio,
    cfg: &OracleConfig,
) -> Result<MmsReport> {
    if !alpha.is_positive() || !alpha.le_one() {
        return Err(Error::Precondition(
            "alpha must satisfy 0 < alpha <= 1".into(),
        ));
    }
    if alloc.agents() != inst.agents() {
        return Err(Error::Shape(format!(
            "allocation has {} bundles for {} agents",
            alloc.agents(),
            inst.agents()
        )));
    }
    let mu = all_shares(inst, cfg)?;
    let mut agents = Vec::with_capacity(inst.agents());
    let mut satisfied = true;
    for i in 0..inst.agents() {
        let total = inst.initial_utility(i) + inst.bundle_value(i, alloc.bundle(i));
        let ok = alpha.le_scaled(total, mu[i]);
        satisfied &= ok;
        agents.push(MmsAgentVerdict {
            i,
            mu: mu[i],
            total,
            ok,
        });
    }
    Ok(MmsReport {
        notion: "mms-init".to_string(),
        alpha: alpha.to_string(),
        satisfied,
        agents,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MmsImpossibility {
    pub alpha: String,
    pub mu: Vec<Value>,
    /// Minimum resources each agent needs to reach alpha times their share.
    pub required_counts: Vec<u64>,
    pub total_required: u128,
    pub m: usize,
    /// True when the required counts alone exceed the resource supply, so no
    /// allocation (complete or not) can be alpha-MMS-init.
    pub certified: bool,
}

/// Counting certificate that no alpha-MMS-init allocation exists on an
/// identical-resource instance: agent i needs at least
/// ceil((alpha * mu_i - b_i) / v_i) resources, and if those minimums sum past
/// m the shares cannot all be met.
pub fn mms_impossibility_certificate(inst: &Instance, alpha: Ratio) -> Result<MmsImpossibility> {
    if !alpha.is_positive() || !alpha.le_one() {
        return Err(Error::Precondition(
            "alpha must satisfy 0 < alpha <= 1".into(),
        ));
    }
    if !inst.is_identical_resources() {
        return Err(Error::Precondition(
            "the counting certificate requires identical resources".into(),
        ));
    }
    let n = inst.agents();
    let mu: Vec<Value> = (0..n).map(|i| compute_mms_identical(inst, i)).collect();
    let mut required = Vec::with_capacity(n);
    let mut total: u128 = 0;
    for i in 0..n {
        let need = alpha
            .ceil_deficit(inst.initial_utility(i), inst.utility(i, 0), mu[i])
            .ok_or_else(|| {
                Error::Precondition(format!("agent {i} values resources at zero"))
            })?;
        total += need;
        required.push(u64::try_from(need).map_err(|_| Error::Arithmetic(
            "required count exceeds 64 bits".into(),
        ))?);
    }
    Ok(MmsImpossibility {
        alpha: alpha.to_string(),
        mu,
        required_counts: required,
        total_required: total,
        m: inst.resources(),
        certified: total > inst.resources() as u128,
    })
}
