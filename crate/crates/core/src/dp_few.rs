//! Existence of complete allocations for a constant number of agents, decided
//! by dynamic programming over the cross-valuation matrix `v[i][j] = u_i(X_j)`
//! (plus, for the up-to-one variant, the per-pair best-resource value
//! `p[i][j]`). Resources are placed one at a time in index order; reachable
//! states are kept sparse and deduplicated, with predecessor links for
//! witness reconstruction.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{Allocation, Instance};

/// Bounds for the table fill. The state space is exponential in n^2 by
/// design, so both the agent count and the number of materialized states are
/// capped; exceeding either is a loud error.
#[derive(Debug, Clone)]
pub struct DpConfig {
    pub max_agents: usize,
    pub max_states: u64,
}

impl Default for DpConfig {
    fn default() -> Self {
        DpConfig {
            max_agents: 3,
            max_states: 5_000_000,
        }
    }
}

/// Decision plus table statistics.
#[derive(Debug, Clone)]
pub struct DpOutcome {
    pub witness: Option<Allocation>,
    pub states_visited: u64,
}

struct Layer {
    keys: Vec<Box<[u64]>>,
    index: HashMap<Box<[u64]>, usize>,
    /// (state index in previous layer, receiving agent); unused in layer 0.
    pred: Vec<(usize, usize)>,
}

impl Layer {
    fn seeded(key: Box<[u64]>) -> Self {
        let mut index = HashMap::new();
        index.insert(key.clone(), 0);
        Layer {
            keys: vec![key],
            index,
            pred: vec![(usize::MAX, usize::MAX)],
        }
    }

    fn insert(&mut self, key: Box<[u64]>, pred: (usize, usize)) {
        if !self.index.contains_key(&key) {
            self.index.insert(key.clone(), self.keys.len());
            self.keys.push(key);
            self.pred.push(pred);
        }
    }
}

fn preflight(inst: &Instance, cfg: &DpConfig) -> Result<()> {
    inst.require_strict_valid()?;
    if inst.agents() > cfg.max_agents {
        return Err(Error::Precondition(format!(
            "dp handles at most {} agents, instance has {}",
            cfg.max_agents,
            inst.agents()
        )));
    }
    Ok(())
}

/// Fills layers 0..=m. `width` is the key length (n^2 for the plain variant,
/// 2 n^2 with the best-resource matrix); `step` derives the successor key
/// from giving resource `r` to agent `receiver`.
fn fill_layers(
    inst: &Instance,
    cfg: &DpConfig,
    width: usize,
    step: impl Fn(&[u64], usize, usize) -> Box<[u64]>,
) -> Result<Vec<Layer>> {
    let n = inst.agents();
    let m = inst.resources();
    let mut layers = Vec::with_capacity(m + 1);
    layers.push(Layer::seeded(vec![0u64; width].into_boxed_slice()));
    let mut states: u64 = 1;
    for r in 0..m {
        let prev = layers.last().unwrap();
        let mut next = Layer {
            keys: Vec::new(),
            index: HashMap::new(),
            pred: Vec::new(),
        };
        for (idx, key) in prev.keys.iter().enumerate() {
            for receiver in 0..n {
                next.insert(step(key, r, receiver), (idx, receiver));
            }
        }
        states += next.keys.len() as u64;
        if states > cfg.max_states {
            return Err(Error::GuardExceeded {
                need: states as u128,
                limit: cfg.max_states as u128,
            });
        }
        layers.push(next);
    }
    Ok(layers)
}

fn reconstruct(layers: &[Layer], final_idx: usize, inst: &Instance) -> Allocation {
    let n = inst.agents();
    let m = inst.resources();
    let mut bundles = vec![Vec::new(); n];
    let mut idx = final_idx;
    for r in (0..m).rev() {
        let (prev, receiver) = layers[r + 1].pred[idx];
        bundles[receiver].push(r);
        idx = prev;
    }
    for bundle in &mut bundles {
        bundle.reverse();
    }
    Allocation::new(bundles, m).expect("reconstructed allocation is valid")
}

/// True when bundle j is empty, observed as an all-zero valuation column;
/// exact under strict validation (every resource is valued by someone).
fn column_zero(key: &[u64], n: usize, j: usize) -> bool {
    (0..n).all(|i| key[i * n + j] == 0)
}

/// Existence of a complete allocation where no agent's initial-plus-bundle
/// total falls behind any other agent's initial plus own view of their
/// bundle. Returns a witness via predecessor links.
pub fn dp_exists_ef_init(inst: &Instance, cfg: &DpConfig) -> Result<DpOutcome> {
    preflight(inst, cfg)?;
    let n = inst.agents();
    let step = |key: &[u64], r: usize, receiver: usize| {
        let mut next = key.to_vec().into_boxed_slice();
        for viewer in 0..n {
            next[viewer * n + receiver] += inst.utility(viewer, r);
        }
        next
    };
    let layers = fill_layers(inst, cfg, n * n, step)?;
    let states_visited = layers.iter().map(|l| l.keys.len() as u64).sum();
    let last = layers.last().unwrap();
    let accepted = last.keys.iter().position(|key| {
        (0..n).all(|i| {
            (0..n).all(|j| {
                i == j
                    || inst.initial_utility(i) + key[i * n + i]
                        >= inst.initial_utility(j) + key[i * n + j]
                    || column_zero(key, n, j)
            })
        })
    });
    Ok(DpOutcome {
        witness: accepted.map(|idx| reconstruct(&layers, idx, inst)),
        states_visited,
    })
}

/// Up-to-one variant: the state additionally tracks `p[i][j]`, the value of the
/// best resource for i inside bundle j, and acceptance may discount it.
pub fn dp_exists_ef1_init(inst: &Instance, cfg: &DpConfig) -> Result<DpOutcome> {
    preflight(inst, cfg)?;
    let n = inst.agents();
    let sq = n * n;
    let step = |key: &[u64], r: usize, receiver: usize| {
        let mut next = key.to_vec().into_boxed_slice();
        for viewer in 0..n {
            let u = inst.utility(viewer, r);
            next[viewer * n + receiver] += u;
            let p = &mut next[sq + viewer * n + receiver];
            *p = (*p).max(u);
        }
        next
    };
    let layers = fill_layers(inst, cfg, 2 * sq, step)?;
    let states_visited = layers.iter().map(|l| l.keys.len() as u64).sum();
    let last = layers.last().unwrap();
    let accepted = last.keys.iter().position(|key| {
        (0..n).all(|i| {
            (0..n).all(|j| {
                i == j
                    || inst.initial_utility(i) + key[i * n + i] + key[sq + i * n + j]
                        >= inst.initial_utility(j) + key[i * n + j]
                    || column_zero(key, n, j)
            })
        })
    });
    Ok(DpOutcome {
        witness: accepted.map(|idx| reconstruct(&layers, idx, inst)),
        states_visited,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::{check_allocation, Notion};
    use crate::instances::{preset, random_instance, Flavor};
    use crate::oracle::{exists_complete, OracleConfig};

    #[test]
    fn obs1_admits_neither_variant() {
        let inst = preset("obs1").unwrap();
        let cfg = DpConfig::default();
        assert!(dp_exists_ef_init(&inst, &cfg).unwrap().witness.is_none());
        assert!(dp_exists_ef1_init(&inst, &cfg).unwrap().witness.is_none());
    }

    #[test]
    fn single_contested_resource_has_no_ef_init() {
        let inst = crate::model::Instance::new(vec![0, 0], vec![vec![1], vec![1]]).unwrap();
        let cfg = DpConfig::default();
        assert!(dp_exists_ef_init(&inst, &cfg).unwrap().witness.is_none());
        let oracle = exists_complete(&inst, Notion::EfInit, &OracleConfig::default()).unwrap();
        assert!(oracle.is_none());
    }

    #[test]
    fn identical_agents_split_evenly() {
        let inst =
            crate::model::Instance::new(vec![0, 0], vec![vec![2, 2, 2, 2], vec![2, 2, 2, 2]])
                .unwrap();
        let cfg = DpConfig::default();
        let out = dp_exists_ef_init(&inst, &cfg).unwrap();
        let witness = out.witness.unwrap();
        assert!(witness.is_complete(4));
        assert_eq!(witness.bundle(0).len(), 2);
        assert!(check_allocation(&inst, &witness, Notion::EfInit).unwrap().satisfied);
    }

    #[test]
    fn zero_initials_always_admit_ef1() {
        for seed in 0..40u64 {
            let inst = random_instance(seed, 3, 4, 4, 0, Flavor::General).unwrap();
            let out = dp_exists_ef1_init(&inst, &DpConfig::default()).unwrap();
            let witness = out.witness.expect("classic EF1 always exists");
            assert!(witness.is_complete(4));
            assert!(check_allocation(&inst, &witness, Notion::Ef1).unwrap().satisfied);
        }
    }

    #[test]
    fn agent_bound_is_enforced() {
        let inst = random_instance(1, 4, 3, 3, 3, Flavor::General).unwrap();
        assert!(dp_exists_ef_init(&inst, &DpConfig::default()).is_err());
        let relaxed = DpConfig {
            max_agents: 4,
            ..Default::default()
        };
        assert!(dp_exists_ef_init(&inst, &relaxed).is_ok());
    }

    #[test]
    fn state_guard_is_loud() {
        let inst = random_instance(2, 3, 5, 3, 3, Flavor::General).unwrap();
        let strangled = DpConfig {
            max_agents: 3,
            max_states: 4,
        };
        assert!(matches!(
            dp_exists_ef1_init(&inst, &strangled),
            Err(crate::error::Error::GuardExceeded { .. })
        ));
    }

    #[test]
    fn state_totals_are_consistent_with_prefix_sums() {
        let inst = random_instance(9, 3, 4, 3, 5, Flavor::General).unwrap();
        let n = inst.agents();
        let step = |key: &[u64], r: usize, receiver: usize| {
            let mut next = key.to_vec().into_boxed_slice();
            for viewer in 0..n {
                next[viewer * n + receiver] += inst.utility(viewer, r);
            }
            next
        };
        let layers = fill_layers(&inst, &DpConfig::default(), n * n, step).unwrap();
        for (ell, layer) in layers.iter().enumerate() {
            let prefix: Vec<u64> = (0..n)
                .map(|i| (0..ell).map(|r| inst.utility(i, r)).sum())
                .collect();
            for key in &layer.keys {
                for i in 0..n {
                    let row_sum: u64 = (0..n).map(|j| key[i * n + j]).sum();
                    assert_eq!(row_sum, prefix[i], "layer {ell}");
                }
            }
        }
    }

    #[test]
    fn decisions_match_oracle_on_random_instances() {
        let dp_cfg = DpConfig::default();
        let oracle_cfg = OracleConfig::default();
        for seed in 0..120u64 {
            let n = 2 + (seed % 2) as usize;
            let m = 1 + (seed % 5) as usize;
            let inst = random_instance(seed, n, m, 3, 6, Flavor::General).unwrap();
            for (notion, run) in [
                (Notion::EfInit, dp_exists_ef_init as fn(_, _) -> _),
                (Notion::Ef1Init, dp_exists_ef1_init as fn(_, _) -> _),
            ] {
                let dp: Result<DpOutcome> = run(&inst, &dp_cfg);
                let dp = dp.unwrap();
                let oracle = exists_complete(&inst, notion, &oracle_cfg).unwrap();
                assert_eq!(
                    dp.witness.is_some(),
                    oracle.is_some(),
                    "seed {seed} notion {notion:?}"
                );
                if let Some(w) = dp.witness {
                    assert!(w.is_complete(m));
                    assert!(check_allocation(&inst, &w, notion).unwrap().satisfied);
                }
            }
        }
    }
}
