//! Exact checkers for every envy notion: EF, EF1, their initial-utility
//! counterparts, the per-pair relaxation that fails to be satisfiable, the
//! minimum variant with optimal witness search, and the experimental
//! bundle-level strengthening used for counterexample search.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Allocation, Instance, Value};
use crate::ratio::Ratio;

/// A fairness notion to check an allocation against. `MmsInit` carries the
/// approximation factor and is per-agent rather than pairwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Notion {
    Ef,
    Ef1,
    EfInit,
    Ef1Init,
    Eq1Relax,
    MinEf1Init,
    StrongC2Experimental,
    MmsInit(Ratio),
}

impl Notion {
    pub fn as_str(&self) -> &'static str {
        match self {
            Notion::Ef => "ef",
            Notion::Ef1 => "ef1",
            Notion::EfInit => "ef-init",
            Notion::Ef1Init => "ef1-init",
            Notion::Eq1Relax => "eq1-relax",
            Notion::MinEf1Init => "min-ef1-init",
            Notion::StrongC2Experimental => "strong-c2-experimental",
            Notion::MmsInit(_) => "mms-init",
        }
    }

    /// Parses a notion name plus optional approximation factor. Alpha is
    /// accepted only for `mms-init`, where it is required and must satisfy
    /// 0 < alpha <= 1.
    pub fn parse(name: &str, alpha: Option<Ratio>) -> Result<Notion> {
        let plain = |n: Notion| {
            if alpha.is_some() {
                Err(Error::Precondition(format!(
                    "--alpha applies only to mms-init, not {name}"
                )))
            } else {
                Ok(n)
            }
        };
        match name {
            "ef" => plain(Notion::Ef),
            "ef1" => plain(Notion::Ef1),
            "ef-init" => plain(Notion::EfInit),
            "ef1-init" => plain(Notion::Ef1Init),
            "eq1-relax" => plain(Notion::Eq1Relax),
            "min-ef1-init" => plain(Notion::MinEf1Init),
            "strong-c2-experimental" => plain(Notion::StrongC2Experimental),
            "mms-init" => {
                let alpha = alpha.ok_or_else(|| {
                    Error::Precondition("mms-init requires --alpha p/q".into())
                })?;
                if !alpha.is_positive() || !alpha.le_one() {
                    return Err(Error::Precondition(
                        "alpha must satisfy 0 < alpha <= 1".into(),
                    ));
                }
                Ok(Notion::MmsInit(alpha))
            }
            other => Err(Error::Precondition(format!("unknown notion `{other}`"))),
        }
    }
}

/// Verdict for one ordered pair. A satisfied verdict carries its witness (the
/// removed resource, and the subset disregarded under the minimum variant); a
/// violated verdict carries the exact margin by which the best option missed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairVerdict {
    pub i: usize,
    pub j: usize,
    pub ok: bool,
    pub removed: Option<usize>,
    pub xstar: Option<Vec<usize>>,
    pub margin: i64,
}

impl PairVerdict {
    fn satisfied(i: usize, j: usize, removed: Option<usize>, xstar: Option<Vec<usize>>) -> Self {
        PairVerdict {
            i,
            j,
            ok: true,
            removed,
            xstar,
            margin: 0,
        }
    }

    fn violated(i: usize, j: usize, margin: i64) -> Self {
        PairVerdict {
            i,
            j,
            ok: false,
            removed: None,
            xstar: None,
            margin,
        }
    }
}

/// Per-ordered-pair verdicts plus the aggregate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EnvyReport {
    pub notion: String,
    pub satisfied: bool,
    pub pairs: Vec<PairVerdict>,
}

/// Witness for the richer-agent condition of the minimum variant: disregard
/// `xstar` (of total min-weight `weight`, strictly below the initial-utility
/// gap) and remove `removed` before the bundle comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct C2Witness {
    pub removed: usize,
    pub xstar: Vec<usize>,
    pub weight: u64,
}

fn check_shapes(inst: &Instance, alloc: &Allocation) -> Result<()> {
    if alloc.agents() != inst.agents() {
        return Err(Error::Shape(format!(
            "allocation has {} bundles for {} agents",
            alloc.agents(),
            inst.agents()
        )));
    }
    for bundle in alloc.bundles() {
        for &r in bundle {
            if r >= inst.resources() {
                return Err(Error::Index(format!(
                    "resource {r} out of range (m = {})",
                    inst.resources()
                )));
            }
        }
    }
    Ok(())
}

fn check_pair_indices(inst: &Instance, i: usize, j: usize) -> Result<()> {
    let n = inst.agents();
    if i >= n || j >= n {
        return Err(Error::Index(format!("agent pair ({i}, {j}) out of range")));
    }
    if i == j {
        return Err(Error::Precondition("pair requires i != j".into()));
    }
    Ok(())
}

/// Most valuable resource of `bundle` from `agent`'s view, lowest index on
/// ties. Removing it is the optimal single removal under additivity.
fn best_removal(inst: &Instance, agent: usize, bundle: &[usize]) -> Option<(usize, Value)> {
    let mut best: Option<(usize, Value)> = None;
    for &r in bundle {
        let v = inst.utility(agent, r);
        match best {
            Some((_, bv)) if bv >= v => {}
            _ => best = Some((r, v)),
        }
    }
    best
}

fn margin_of(lhs: u64, rhs: u64) -> i64 {
    (rhs as i128 - lhs as i128).max(0) as i64
}

/// Checks the definitional test of `notion` for the ordered pair (i, j).
pub fn check_pair(
    inst: &Instance,
    alloc: &Allocation,
    i: usize,
    j: usize,
    notion: Notion,
) -> Result<PairVerdict> {
    check_shapes(inst, alloc)?;
    check_pair_indices(inst, i, j)?;
    let xi = alloc.bundle(i);
    let xj = alloc.bundle(j);
    let ui_xi = inst.bundle_value(i, xi);
    let ui_xj = inst.bundle_value(i, xj);
    let bi = inst.initial_utility(i);
    let bj = inst.initial_utility(j);

    let c1 = |with_initial: bool| -> PairVerdict {
        // EF1-style comparison; optimal removal is the argmax resource.
        if xj.is_empty() {
            return PairVerdict::satisfied(i, j, None, None);
        }
        let (r, rv) = best_removal(inst, i, xj).expect("non-empty bundle");
        let (lhs, rhs) = if with_initial {
            (bi + ui_xi, bj + (ui_xj - rv))
        } else {
            (ui_xi, ui_xj - rv)
        };
        if lhs >= rhs {
            PairVerdict::satisfied(i, j, Some(r), None)
        } else {
            PairVerdict::violated(i, j, margin_of(lhs, rhs))
        }
    };

    let c2_branch = |outcome: C2Outcome| -> PairVerdict {
        match outcome {
            C2Outcome::Witness(w) => {
                PairVerdict::satisfied(i, j, Some(w.removed), Some(w.xstar))
            }
            C2Outcome::Violated { margin } => PairVerdict::violated(i, j, margin),
        }
    };

    match notion {
        Notion::Ef => {
            if ui_xi >= ui_xj {
                Ok(PairVerdict::satisfied(i, j, None, None))
            } else {
                Ok(PairVerdict::violated(i, j, margin_of(ui_xi, ui_xj)))
            }
        }
        Notion::Ef1 => Ok(c1(false)),
        Notion::EfInit => {
            if xj.is_empty() || bi + ui_xi >= bj + ui_xj {
                Ok(PairVerdict::satisfied(i, j, None, None))
            } else {
                Ok(PairVerdict::violated(i, j, margin_of(bi + ui_xi, bj + ui_xj)))
            }
        }
        Notion::Ef1Init => Ok(c1(true)),
        Notion::MinEf1Init => {
            if xj.is_empty() {
                Ok(PairVerdict::satisfied(i, j, None, None))
            } else if bi <= bj {
                Ok(c1(true))
            } else {
                Ok(c2_branch(c2_search(inst, alloc, i, j, &min_weights(inst, bi))?))
            }
        }
        Notion::Eq1Relax => {
            if xj.is_empty() {
                Ok(PairVerdict::satisfied(i, j, None, None))
            } else if bi <= bj {
                Ok(c1(true))
            } else {
                let weights: Vec<u64> = (0..inst.resources())
                    .map(|r| inst.utility(j, r))
                    .collect();
                Ok(c2_branch(c2_search(inst, alloc, i, j, &weights)?))
            }
        }
        Notion::StrongC2Experimental => {
            if xj.is_empty() {
                Ok(PairVerdict::satisfied(i, j, None, None))
            } else if bi <= bj {
                Ok(c1(true))
            } else {
                // min_{j'} u_{j'}(X*) < gap holds iff it holds for some lower
                // agent alone, so run the search once per lower agent.
                let mut worst: Option<i64> = None;
                for lower in 0..inst.agents() {
                    if inst.initial_utility(lower) >= bi {
                        continue;
                    }
                    let weights: Vec<u64> = (0..inst.resources())
                        .map(|r| inst.utility(lower, r))
                        .collect();
                    match c2_search(inst, alloc, i, j, &weights)? {
                        C2Outcome::Witness(w) => return Ok(c2_branch(C2Outcome::Witness(w))),
                        C2Outcome::Violated { margin } => {
                            worst = Some(worst.map_or(margin, |m: i64| m.min(margin)));
                        }
                    }
                }
                let margin = worst.expect("b_j < b_i so a lower agent exists");
                Ok(PairVerdict::violated(i, j, margin))
            }
        }
        Notion::MmsInit(_) => Err(Error::Precondition(
            "mms-init is per-agent, not pairwise; use check_mms_init".into(),
        )),
    }
}

/// Aggregates `check_pair` over all ordered pairs; reports every violated
/// pair, not just the first.
pub fn check_allocation(inst: &Instance, alloc: &Allocation, notion: Notion) -> Result<EnvyReport> {
    check_shapes(inst, alloc)?;
    let n = inst.agents();
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1));
    let mut satisfied = true;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let verdict = check_pair(inst, alloc, i, j, notion)?;
            satisfied &= verdict.ok;
            pairs.push(verdict);
        }
    }
    Ok(EnvyReport {
        notion: notion.as_str().to_string(),
        satisfied,
        pairs,
    })
}

/// Per-resource weight used by the minimum variant: the smallest utility any
/// agent with initial utility below `threshold` assigns to the resource.
fn min_weights(inst: &Instance, threshold: Value) -> Vec<u64> {
    let lower: Vec<usize> = (0..inst.agents())
        .filter(|&a| inst.initial_utility(a) < threshold)
        .collect();
    assert!(
        !lower.is_empty(),
        "weight threshold below every initial utility"
    );
    (0..inst.resources())
        .map(|r| lower.iter().map(|&a| inst.utility(a, r)).min().unwrap())
        .collect()
}

enum C2Outcome {
    Witness(C2Witness),
    Violated { margin: i64 },
}

/// Searches for a removed resource r and subset X* of X_j with weight at most
/// gap - 1 such that agent i values the rest of X_j no more than its own
/// bundle. For each candidate r this is a 0/1 knapsack over X_j minus r
/// maximizing the value removed from i's comparison.
fn c2_search(
    inst: &Instance,
    alloc: &Allocation,
    i: usize,
    j: usize,
    weights: &[u64],
) -> Result<C2Outcome> {
    let xi = alloc.bundle(i);
    let xj = alloc.bundle(j);
    debug_assert!(!xj.is_empty());
    let gap = inst.initial_utility(i) - inst.initial_utility(j);
    debug_assert!(gap >= 1);
    let budget = gap - 1;
    let ui_xi = inst.bundle_value(i, xi);
    let ui_xj = inst.bundle_value(i, xj);

    let mut worst: Option<i64> = None;
    for &r in xj {
        let after_removal = ui_xj - inst.utility(i, r);
        let needed = after_removal as i128 - ui_xi as i128;
        if needed <= 0 {
            return Ok(C2Outcome::Witness(C2Witness {
                removed: r,
                xstar: Vec::new(),
                weight: 0,
            }));
        }
        let rest: Vec<usize> = xj.iter().copied().filter(|&x| x != r).collect();
        let total_weight: u64 = rest.iter().map(|&x| weights[x]).sum();
        if total_weight <= budget {
            // everything fits in X*, nothing of value remains
            return Ok(C2Outcome::Witness(C2Witness {
                removed: r,
                xstar: rest,
                weight: total_weight,
            }));
        }
        let items: Vec<(u64, u64)> = rest
            .iter()
            .map(|&x| (weights[x], inst.utility(i, x)))
            .collect();
        let (best, chosen) = knapsack_max(&items, budget)?;
        if best as i128 >= needed {
            let xstar: Vec<usize> = rest
                .iter()
                .zip(chosen.iter())
                .filter_map(|(&x, &take)| take.then_some(x))
                .collect();
            let weight = xstar.iter().map(|&x| weights[x]).sum();
            debug_assert!(weight < gap);
            return Ok(C2Outcome::Witness(C2Witness {
                removed: r,
                xstar,
                weight,
            }));
        }
        let deficit = (needed - best as i128) as i64;
        worst = Some(worst.map_or(deficit, |m: i64| m.min(deficit)));
    }
    Ok(C2Outcome::Violated {
        margin: worst.expect("non-empty bundle"),
    })
}

/// Optimal witness search for the richer-agent condition of the minimum
/// variant. Returns a witness iff one exists.
pub fn solve_c2(
    inst: &Instance,
    alloc: &Allocation,
    i: usize,
    j: usize,
) -> Result<Option<C2Witness>> {
    check_shapes(inst, alloc)?;
    check_pair_indices(inst, i, j)?;
    if inst.initial_utility(i) <= inst.initial_utility(j) {
        return Err(Error::Precondition("solve_c2 requires b_i > b_j".into()));
    }
    if alloc.bundle(j).is_empty() {
        return Err(Error::Precondition("solve_c2 requires X_j non-empty".into()));
    }
    let weights = min_weights(inst, inst.initial_utility(i));
    match c2_search(inst, alloc, i, j, &weights)? {
        C2Outcome::Witness(w) => Ok(Some(w)),
        C2Outcome::Violated { .. } => Ok(None),
    }
}

/// Pair check under the per-pair weight relaxation (the envied agent's own
/// utility bounds X*). Exists to demonstrate its non-satisfiability.
pub fn check_eq1_relaxation(
    inst: &Instance,
    alloc: &Allocation,
    i: usize,
    j: usize,
) -> Result<PairVerdict> {
    check_pair(inst, alloc, i, j, Notion::Eq1Relax)
}

/// Experimental bundle-level-minimum strengthening; used only for
/// counterexample search, never as a guarantee.
pub fn check_strong_c2(
    inst: &Instance,
    alloc: &Allocation,
    i: usize,
    j: usize,
) -> Result<PairVerdict> {
    check_pair(inst, alloc, i, j, Notion::StrongC2Experimental)
}

const KNAPSACK_FRONT_GUARD: usize = 4_000_000;

/// 0/1 knapsack maximizing value under a weight budget, exact over the Pareto
/// front of achievable (weight, value) pairs. Fronts per item are retained so
/// the chosen set can be reconstructed deterministically (ties prefer not
/// taking an item).
fn knapsack_max(items: &[(u64, u64)], budget: u64) -> Result<(u64, Vec<bool>)> {
    let mut fronts: Vec<Vec<(u64, u64)>> = Vec::with_capacity(items.len());
    let mut front: Vec<(u64, u64)> = vec![(0, 0)];
    for &(w, v) in items {
        if w > budget {
            fronts.push(front.clone());
            continue;
        }
        let shifted: Vec<(u64, u64)> = front
            .iter()
            .filter(|&&(fw, _)| fw + w <= budget)
            .map(|&(fw, fv)| (fw + w, fv + v))
            .collect();
        // merge keeping, at equal weight, the higher value first; at equal
        // weight and value the old entry first so backtracking prefers
        // not taking the item
        let mut merged = Vec::with_capacity(front.len() + shifted.len());
        let (mut a, mut b) = (0, 0);
        while a < front.len() && b < shifted.len() {
            let (ow, ov) = front[a];
            let (nw, nv) = shifted[b];
            if ow < nw || (ow == nw && ov >= nv) {
                merged.push(front[a]);
                a += 1;
            } else {
                merged.push(shifted[b]);
                b += 1;
            }
        }
        merged.extend_from_slice(&front[a..]);
        merged.extend_from_slice(&shifted[b..]);
        // prune dominated entries: keep strictly increasing value by weight
        let mut pruned: Vec<(u64, u64)> = Vec::with_capacity(merged.len());
        for (ww, vv) in merged {
            match pruned.last() {
                Some(&(lw, lv)) => {
                    if ww == lw {
                        continue; // first entry at a weight already has max value
                    }
                    if vv > lv {
                        pruned.push((ww, vv));
                    }
                }
                None => pruned.push((ww, vv)),
            }
        }
        if pruned.len() > KNAPSACK_FRONT_GUARD {
            return Err(Error::GuardExceeded {
                need: pruned.len() as u128,
                limit: KNAPSACK_FRONT_GUARD as u128,
            });
        }
        fronts.push(front);
        front = pruned;
    }

    let &(mut w, mut v) = front.last().expect("front never empty");
    let best = v;
    let mut chosen = vec![false; items.len()];
    for k in (0..items.len()).rev() {
        let prev = &fronts[k];
        let untouched = prev
            .binary_search_by_key(&w, |e| e.0)
            .ok()
            .map(|idx| prev[idx].1 == v)
            .unwrap_or(false);
        if untouched {
            continue;
        }
        let (iw, iv) = items[k];
        chosen[k] = true;
        w -= iw;
        v -= iv;
        debug_assert!(prev
            .binary_search_by_key(&w, |e| e.0)
            .ok()
            .map(|idx| prev[idx].1 == v)
            .unwrap_or(false));
    }
    Ok((best, chosen))
}

/// Property harness for the implication "minimum variant implies EF1-init on
/// diminishing instances": sweeps every complete allocation within the guard
/// and returns the first counterexample, which must not exist.
pub fn implies_ef1_init_under_diminishing(
    inst: &Instance,
    cfg: &crate::oracle::OracleConfig,
) -> Result<Option<Allocation>> {
    if !inst.is_diminishing() {
        return Err(Error::Precondition(
            "harness requires diminishing utilities".into(),
        ));
    }
    for alloc in crate::oracle::complete_allocations(inst, cfg)? {
        if check_allocation(inst, &alloc, Notion::MinEf1Init)?.satisfied
            && !check_allocation(inst, &alloc, Notion::Ef1Init)?.satisfied
        {
            return Ok(Some(alloc));
        }
    }
    Ok(None)
}
