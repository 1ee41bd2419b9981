//! Round-robin with initial utilities: only the poorest level picks at first,
//! and a further level joins the picking order once every active agent has
//! reached its initial utility. The produced complete allocation always
//! satisfies the minimum envy variant; the full pick/activation trace is kept
//! for auditing and is independently re-validated by [`verify_trace`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Allocation, Instance, LevelPartition};

/// One audited event. Activations always directly follow the pick that
/// triggered them in the event list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TraceEvent {
    Pick {
        agent: usize,
        resource: usize,
        round: usize,
    },
    Activate {
        /// 0-based index into the level partition.
        level: usize,
        /// Position in the picking order where the level's agents were
        /// spliced in: right after everyone that already picked this round.
        insert_pos: usize,
    },
}

/// Ordered event log plus the terminal picking order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PickTrace {
    pub events: Vec<TraceEvent>,
    pub final_order: Vec<usize>,
}

impl PickTrace {
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("trace serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// First violated rule of a trace, with the offending event index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceViolation {
    pub event: Option<usize>,
    pub reason: String,
}

impl std::fmt::Display for TraceViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.event {
            Some(k) => write!(f, "event {k}: {}", self.reason),
            None => write!(f, "{}", self.reason),
        }
    }
}

/// Minimal inactive level every active agent has reached, if any.
fn reachable_level(levels: &LevelPartition, active: &[bool], totals: &[u64]) -> Option<usize> {
    (0..levels.count()).find(|&h| {
        let first = levels.levels[h][0];
        !active[first]
            && totals
                .iter()
                .zip(active.iter())
                .all(|(&t, &a)| !a || t >= levels.values[h])
    })
}

/// Favorite unallocated resource: maximum utility, lowest index on ties.
fn favorite_resource(inst: &Instance, agent: usize, taken: &[bool]) -> Option<usize> {
    let mut best: Option<(usize, u64)> = None;
    for r in 0..inst.resources() {
        if taken[r] {
            continue;
        }
        let v = inst.utility(agent, r);
        match best {
            Some((_, bv)) if bv >= v => {}
            _ => best = Some((r, v)),
        }
    }
    best.map(|(r, _)| r)
}

/// Runs the picking procedure and returns the complete allocation together
/// with its audit trace. Requires a strict-valid instance; terminates after
/// exactly m picks.
pub fn run_round_robin(inst: &Instance) -> Result<(Allocation, PickTrace)> {
    inst.require_strict_valid()?;
    let n = inst.agents();
    let m = inst.resources();
    let levels = inst.levels();

    let mut order: Vec<usize> = levels.levels[0].clone();
    let mut active = vec![false; n];
    for &i in &order {
        active[i] = true;
    }
    let mut totals: Vec<u64> = (0..n).map(|i| inst.initial_utility(i)).collect();
    let mut taken = vec![false; m];
    let mut bundles = vec![Vec::new(); n];
    let mut events = Vec::new();

    let mut allocated = 0usize;
    let mut round = 0usize;
    while allocated < m {
        round += 1;
        let mut picked = 0usize;
        while picked < order.len() {
            let agent = order[picked];
            let resource = favorite_resource(inst, agent, &taken).expect("resources remain");
            taken[resource] = true;
            bundles[agent].push(resource);
            totals[agent] += inst.utility(agent, resource);
            allocated += 1;
            picked += 1;
            events.push(TraceEvent::Pick {
                agent,
                resource,
                round,
            });
            if allocated == m {
                break;
            }
            if let Some(level) = reachable_level(&levels, &active, &totals) {
                let newcomers = &levels.levels[level];
                for (offset, &i) in newcomers.iter().enumerate() {
                    order.insert(picked + offset, i);
                    active[i] = true;
                }
                events.push(TraceEvent::Activate {
                    level,
                    insert_pos: picked,
                });
                // a freshly activated agent has an empty bundle and a smaller
                // initial utility than any still-inactive level, so no second
                // level can be reachable before the next pick
                debug_assert!(reachable_level(&levels, &active, &totals).is_none());
            }
        }
    }

    let trace = PickTrace {
        events,
        final_order: order,
    };
    let alloc = Allocation::new(bundles, m)?;
    debug_assert!(alloc.is_complete(m));
    Ok((alloc, trace))
}

struct Replay {
    active: Vec<bool>,
    order: Vec<usize>,
    totals: Vec<u64>,
    taken: Vec<bool>,
    round: usize,
    picked_this_round: usize,
    allocated: usize,
    last_pick: Option<(usize, usize)>,
}

fn violation(event: usize, reason: impl Into<String>) -> TraceViolation {
    TraceViolation {
        event: Some(event),
        reason: reason.into(),
    }
}

/// Independently re-validates every trace invariant against the instance:
/// pick legality (ordering, favorite resource), activation legality (reached
/// for all active agents, minimal level, insertion position), missed or
/// premature activations, round bookkeeping, completeness, and the
/// not-reached bound at each activation (the triggering picker's bundle minus
/// the picked resource is worth less than the activated gap).
pub fn verify_trace(inst: &Instance, trace: &PickTrace) -> std::result::Result<(), TraceViolation> {
    let n = inst.agents();
    let m = inst.resources();
    let levels = inst.levels();
    let mut st = Replay {
        active: vec![false; n],
        order: levels.levels[0].clone(),
        totals: (0..n).map(|i| inst.initial_utility(i)).collect(),
        taken: vec![false; m],
        round: 1,
        picked_this_round: 0,
        allocated: 0,
        last_pick: None,
    };
    for &i in &levels.levels[0] {
        st.active[i] = true;
    }

    let mut expected_activation: Option<usize> = None;
    for (k, event) in trace.events.iter().enumerate() {
        if st.allocated == m {
            return Err(violation(k, "event after all resources were allocated"));
        }
        match *event {
            TraceEvent::Pick {
                agent,
                resource,
                round,
            } => {
                if expected_activation.is_some() {
                    return Err(violation(k, "activation was due but a pick followed"));
                }
                if round != st.round {
                    return Err(violation(
                        k,
                        format!("pick claims round {round}, expected {}", st.round),
                    ));
                }
                let due = st.order.get(st.picked_this_round).copied();
                if due != Some(agent) {
                    return Err(violation(
                        k,
                        format!("agent {agent} picked out of turn (due: {due:?})"),
                    ));
                }
                if resource >= m || st.taken[resource] {
                    return Err(violation(k, format!("resource {resource} not available")));
                }
                // favorite check, derived directly from the rule: every other
                // unallocated resource is worth strictly less, or ties at a
                // higher index
                let value = inst.utility(agent, resource);
                for other in 0..m {
                    if st.taken[other] || other == resource {
                        continue;
                    }
                    let v = inst.utility(agent, other);
                    if v > value || (v == value && other < resource) {
                        return Err(violation(
                            k,
                            format!("resource {resource} is not the favorite ({other} beats it)"),
                        ));
                    }
                }
                st.taken[resource] = true;
                st.totals[agent] += inst.utility(agent, resource);
                st.allocated += 1;
                st.picked_this_round += 1;
                st.last_pick = Some((agent, resource));
                if st.allocated < m {
                    expected_activation =
                        reachable_level(&levels, &st.active, &st.totals);
                    if expected_activation.is_none() && st.picked_this_round == st.order.len() {
                        st.round += 1;
                        st.picked_this_round = 0;
                    }
                }
            }
            TraceEvent::Activate { level, insert_pos } => {
                match expected_activation {
                    None => {
                        return Err(violation(k, "activation fired but no level was reached"))
                    }
                    Some(due) if due != level => {
                        return Err(violation(
                            k,
                            format!("activated level {level}, expected minimal level {due}"),
                        ))
                    }
                    Some(_) => {}
                }
                if insert_pos != st.picked_this_round {
                    return Err(violation(
                        k,
                        format!(
                            "insert position {insert_pos}, expected {}",
                            st.picked_this_round
                        ),
                    ));
                }
                // the picker that triggered the activation had not reached the
                // level before this pick
                let (picker, resource) = st.last_pick.expect("activation follows a pick");
                let before = st.totals[picker] - inst.utility(picker, resource);
                if before >= levels.values[level] {
                    return Err(violation(
                        k,
                        format!("picker {picker} had already reached level {level}"),
                    ));
                }
                for (offset, &i) in levels.levels[level].iter().enumerate() {
                    st.order.insert(insert_pos + offset, i);
                    st.active[i] = true;
                }
                expected_activation = None;
            }
        }
    }
    if st.allocated != m {
        return Err(TraceViolation {
            event: None,
            reason: format!("trace allocates {} of {m} resources", st.allocated),
        });
    }
    if trace.final_order != st.order {
        return Err(TraceViolation {
            event: None,
            reason: "final order does not match the replayed order".into(),
        });
    }
    Ok(())
}

/// Checks the activation-gap bound on a valid trace: whenever a level with
/// value b_act is activated, every already-active agent j can spare one
/// resource r from its current bundle so that the remaining min-weight sum
/// stays strictly below b_act - b_j. The searched weights take, per resource,
/// the minimum utility among agents poorer than the activated level.
pub fn check_activation_gap(inst: &Instance, trace: &PickTrace) -> Result<bool> {
    verify_trace(inst, trace)
        .map_err(|v| Error::Precondition(format!("invalid trace: {v}")))?;
    let n = inst.agents();
    let levels = inst.levels();
    let mut bundles: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut active = vec![false; n];
    for &i in &levels.levels[0] {
        active[i] = true;
    }
    for event in &trace.events {
        match *event {
            TraceEvent::Pick { agent, resource, .. } => bundles[agent].push(resource),
            TraceEvent::Activate { level, .. } => {
                let b_act = levels.values[level];
                let lower: Vec<usize> = (0..n)
                    .filter(|&a| inst.initial_utility(a) < b_act)
                    .collect();
                let weight = |r: usize| -> u64 {
                    lower.iter().map(|&a| inst.utility(a, r)).min().unwrap()
                };
                for j in 0..n {
                    if !active[j] || bundles[j].is_empty() {
                        continue;
                    }
                    let gap = b_act - inst.initial_utility(j);
                    let total: u64 = bundles[j].iter().map(|&r| weight(r)).sum();
                    let spared = bundles[j]
                        .iter()
                        .any(|&r| total - weight(r) < gap);
                    if !spared {
                        return Ok(false);
                    }
                }
                for &i in &levels.levels[level] {
                    active[i] = true;
                }
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::{check_allocation, Notion};
    use crate::instances::preset;

    #[test]
    fn obs1_trace_matches_hand_derivation() {
        let inst = preset("obs1").unwrap();
        let (alloc, trace) = run_round_robin(&inst).unwrap();
        assert_eq!(alloc.bundle(0), &[0, 1, 2]);
        assert_eq!(alloc.bundle(1), &[3]);
        let expected = vec![
            TraceEvent::Pick { agent: 0, resource: 0, round: 1 },
            TraceEvent::Pick { agent: 0, resource: 1, round: 2 },
            TraceEvent::Pick { agent: 0, resource: 2, round: 3 },
            TraceEvent::Activate { level: 1, insert_pos: 1 },
            TraceEvent::Pick { agent: 1, resource: 3, round: 3 },
        ];
        assert_eq!(trace.events, expected);
        assert_eq!(trace.final_order, vec![0, 1]);
        assert!(verify_trace(&inst, &trace).is_ok());
        assert!(check_activation_gap(&inst, &trace).unwrap());
        assert!(check_allocation(&inst, &alloc, Notion::MinEf1Init).unwrap().satisfied);
    }

    #[test]
    fn ex1_counts_match_hand_derivation() {
        let inst = preset("ex1").unwrap();
        let (alloc, trace) = run_round_robin(&inst).unwrap();
        let counts: Vec<usize> = alloc.bundles().iter().map(|b| b.len()).collect();
        assert_eq!(counts, vec![5, 4, 1]);
        // agent 1 needs four picks to reach 20; level 1 activates in round 4
        let activations: Vec<&TraceEvent> = trace
            .events
            .iter()
            .filter(|e| matches!(e, TraceEvent::Activate { .. }))
            .collect();
        assert_eq!(
            activations,
            vec![&TraceEvent::Activate { level: 1, insert_pos: 2 }]
        );
        assert!(verify_trace(&inst, &trace).is_ok());
        assert!(check_allocation(&inst, &alloc, Notion::MinEf1Init).unwrap().satisfied);
    }

    #[test]
    fn zero_initials_reduce_to_classic_round_robin() {
        let inst = crate::instances::random_instance(
            3,
            3,
            7,
            9,
            0,
            crate::instances::Flavor::General,
        )
        .unwrap();
        let (alloc, trace) = run_round_robin(&inst).unwrap();
        assert!(trace
            .events
            .iter()
            .all(|e| matches!(e, TraceEvent::Pick { .. })));
        assert!(check_allocation(&inst, &alloc, Notion::Ef1).unwrap().satisfied);
    }

    #[test]
    fn determinism() {
        let inst = preset("ex1").unwrap();
        let a = run_round_robin(&inst).unwrap();
        let b = run_round_robin(&inst).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn swapped_picks_are_rejected() {
        let inst = preset("ex1").unwrap();
        let (_, mut trace) = run_round_robin(&inst).unwrap();
        trace.events.swap(0, 1);
        assert!(verify_trace(&inst, &trace).is_err());
    }

    #[test]
    fn early_activation_is_rejected_at_the_event() {
        let inst = preset("obs1").unwrap();
        let (_, mut trace) = run_round_robin(&inst).unwrap();
        // move the activation one pick earlier: after pick 2 instead of 3
        let activate = trace.events.remove(3);
        trace.events.insert(2, activate);
        let err = verify_trace(&inst, &trace).unwrap_err();
        assert_eq!(err.event, Some(2));
    }

    #[test]
    fn forged_final_order_is_rejected() {
        let inst = preset("ex1").unwrap();
        let (_, mut trace) = run_round_robin(&inst).unwrap();
        trace.final_order.reverse();
        let err = verify_trace(&inst, &trace).unwrap_err();
        assert_eq!(err.event, None);
    }

    #[test]
    fn trace_json_round_trip() {
        let inst = preset("obs1").unwrap();
        let (_, trace) = run_round_robin(&inst).unwrap();
        let text = trace.to_canonical_json();
        assert!(text.starts_with(r#"{"events":[{"type":"pick","agent":0,"resource":0,"round":1}"#));
        let back = PickTrace::from_json(&text).unwrap();
        assert_eq!(trace, back);
    }

    #[test]
    fn rejects_invalid_instances() {
        let inst = crate::model::Instance::new(vec![1], vec![vec![1, 1]]).unwrap();
        assert!(run_round_robin(&inst).is_err());
    }

    #[test]
    fn unreachable_level_never_activates() {
        // the rich agent stays inactive; the poor one takes everything and
        // the pair still passes the minimum variant through the big gap
        let inst = crate::model::Instance::new(
            vec![0, 10_000_000],
            vec![vec![1, 1, 1], vec![1, 1, 1]],
        )
        .unwrap();
        let (alloc, trace) = run_round_robin(&inst).unwrap();
        assert!(alloc.is_complete(3));
        assert_eq!(alloc.bundle(1), &[] as &[usize]);
        assert!(trace
            .events
            .iter()
            .all(|e| matches!(e, TraceEvent::Pick { .. })));
        assert!(verify_trace(&inst, &trace).is_ok());
        assert!(check_activation_gap(&inst, &trace).unwrap());
        assert!(check_allocation(&inst, &alloc, Notion::MinEf1Init).unwrap().satisfied);
    }

    #[test]
    fn fewer_resources_than_agents() {
        let inst = crate::model::Instance::new(
            vec![3, 3, 3, 3],
            vec![vec![2, 1], vec![1, 2], vec![2, 2], vec![1, 1]],
        )
        .unwrap();
        let (alloc, trace) = run_round_robin(&inst).unwrap();
        assert!(alloc.is_complete(2));
        assert_eq!(trace.events.len(), 2);
        assert!(verify_trace(&inst, &trace).is_ok());
        assert!(check_allocation(&inst, &alloc, Notion::MinEf1Init).unwrap().satisfied);
    }

    #[test]
    fn multi_agent_levels_activate_together() {
        let inst = crate::model::Instance::new(
            vec![0, 0, 5, 5],
            vec![vec![1; 12]; 4],
        )
        .unwrap();
        let (alloc, trace) = run_round_robin(&inst).unwrap();
        let counts: Vec<usize> = alloc.bundles().iter().map(|b| b.len()).collect();
        assert_eq!(counts, vec![5, 5, 1, 1]);
        let activations: Vec<&TraceEvent> = trace
            .events
            .iter()
            .filter(|e| matches!(e, TraceEvent::Activate { .. }))
            .collect();
        assert_eq!(
            activations,
            vec![&TraceEvent::Activate { level: 1, insert_pos: 2 }]
        );
        assert!(verify_trace(&inst, &trace).is_ok());
        assert!(check_activation_gap(&inst, &trace).unwrap());
        assert!(check_allocation(&inst, &alloc, Notion::MinEf1Init).unwrap().satisfied);
    }

    #[test]
    fn mutated_traces_are_rejected() {
        let inst = crate::instances::random_instance(
            77,
            4,
            7,
            6,
            9,
            crate::instances::Flavor::General,
        )
        .unwrap();
        let (_, trace) = run_round_robin(&inst).unwrap();
        assert!(verify_trace(&inst, &trace).is_ok());
        let mut rng = crate::instances::SplitMix64::new(5);
        let mut rejected = 0usize;
        let mut tried = 0usize;
        for _ in 0..200 {
            let mut forged = trace.clone();
            let k = rng.below(forged.events.len() as u64) as usize;
            match rng.below(4) {
                0 => match &mut forged.events[k] {
                    TraceEvent::Pick { agent, .. } => *agent = (*agent + 1) % 4,
                    TraceEvent::Activate { level, .. } => *level = (*level + 1) % 2,
                },
                1 => match &mut forged.events[k] {
                    TraceEvent::Pick { resource, .. } => *resource = (*resource + 1) % 7,
                    TraceEvent::Activate { insert_pos, .. } => *insert_pos += 1,
                },
                2 => {
                    forged.events.remove(k);
                }
                _ => match &mut forged.events[k] {
                    TraceEvent::Pick { round, .. } => *round += 1,
                    TraceEvent::Activate { insert_pos, .. } => {
                        *insert_pos = insert_pos.saturating_sub(1)
                    }
                },
            }
            if forged == trace {
                continue;
            }
            tried += 1;
            if verify_trace(&inst, &forged).is_err() {
                rejected += 1;
            }
        }
        assert_eq!(rejected, tried, "every mutated trace must be rejected");
        assert!(tried > 100);
    }
}
