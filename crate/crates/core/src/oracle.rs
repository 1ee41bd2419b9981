//! Exhaustive ground-truth engines: enumerate allocations, decide existence
//! for any notion, and enumerate count profiles for identical resources.
//! These are the independent oracles every algorithmic module is checked
//! against, so they are total within their guards and loud beyond them.

use crate::error::{Error, Result};
use crate::fairness::{check_allocation, Notion};
use crate::mms;
use crate::model::{Allocation, Instance};
use crate::par;

/// Guards and execution mode for enumeration sweeps. Exceeding a guard is an
/// explicit error, never silent truncation. `force_sequential` disables the
/// rayon path at runtime (used by the benchmarks to compare both).
#[derive(Debug, Clone)]
pub struct OracleConfig {
    pub max_assignments: u128,
    pub force_sequential: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            max_assignments: 100_000_000,
            force_sequential: false,
        }
    }
}

impl OracleConfig {
    pub fn with_limit(max_assignments: u128) -> Self {
        OracleConfig {
            max_assignments,
            ..Default::default()
        }
    }
}

/// base^m with overflow detection.
fn pow_count(base: usize, m: usize) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..m {
        acc = acc.checked_mul(base as u128)?;
    }
    Some(acc)
}

fn guarded_count(base: usize, m: usize, cfg: &OracleConfig) -> Result<u64> {
    let count = pow_count(base, m).ok_or(Error::GuardExceeded {
        need: u128::MAX,
        limit: cfg.max_assignments,
    })?;
    if count > cfg.max_assignments || count > u64::MAX as u128 {
        return Err(Error::GuardExceeded {
            need: count,
            limit: cfg.max_assignments,
        });
    }
    Ok(count as u64)
}

/// Decodes assignment index `k` into per-resource receivers, resource-major:
/// resource 0 is the most significant digit, receivers ascend within a digit.
/// `base = n` for complete allocations, `n + 1` with the last digit meaning
/// "unallocated" for partial ones.
fn decode_assignment(k: u64, base: usize, m: usize) -> Vec<usize> {
    let mut digits = vec![0usize; m];
    let mut rest = k;
    for r in (0..m).rev() {
        digits[r] = (rest % base as u64) as usize;
        rest /= base as u64;
    }
    digits
}

fn assignment_to_allocation(digits: &[usize], n: usize) -> Allocation {
    let mut bundles = vec![Vec::new(); n];
    for (r, &a) in digits.iter().enumerate() {
        if a < n {
            bundles[a].push(r);
        }
    }
    // digits are scanned in resource order, so bundles come out sorted
    Allocation::new(bundles, digits.len()).expect("decoded assignment is valid")
}

/// All n^m complete allocations in the fixed deterministic order.
pub fn complete_allocations<'a>(
    inst: &'a Instance,
    cfg: &OracleConfig,
) -> Result<impl Iterator<Item = Allocation> + 'a> {
    let n = inst.agents();
    let m = inst.resources();
    let count = guarded_count(n, m, cfg)?;
    Ok((0..count).map(move |k| assignment_to_allocation(&decode_assignment(k, n, m), n)))
}

fn allocation_passes(inst: &Instance, alloc: &Allocation, notion: Notion, mu: &[u64]) -> bool {
    match notion {
        Notion::MmsInit(alpha) => mms::allocation_meets_shares(inst, alloc, alpha, mu),
        pairwise => check_allocation(inst, alloc, pairwise)
            .map(|r| r.satisfied)
            .unwrap_or(false),
    }
}

fn exists_with_base(
    inst: &Instance,
    notion: Notion,
    cfg: &OracleConfig,
    base: usize,
) -> Result<Option<Allocation>> {
    let n = inst.agents();
    let m = inst.resources();
    let count = guarded_count(base, m, cfg)?;
    let mu = match notion {
        Notion::MmsInit(_) => mms::all_shares(inst, cfg)?,
        _ => Vec::new(),
    };
    let hit = par::find_first_index(count, cfg.force_sequential, |k| {
        let alloc = assignment_to_allocation(&decode_assignment(k, base, m), n);
        allocation_passes(inst, &alloc, notion, &mu)
    });
    Ok(hit.map(|k| assignment_to_allocation(&decode_assignment(k, base, m), n)))
}

/// First complete allocation satisfying the notion, in enumeration order.
pub fn exists_complete(
    inst: &Instance,
    notion: Notion,
    cfg: &OracleConfig,
) -> Result<Option<Allocation>> {
    exists_with_base(inst, notion, cfg, inst.agents())
}

/// First possibly-incomplete allocation satisfying the notion. A resource may
/// stay unallocated, so the search space is (n+1)^m.
pub fn exists_partial(
    inst: &Instance,
    notion: Notion,
    cfg: &OracleConfig,
) -> Result<Option<Allocation>> {
    exists_with_base(inst, notion, cfg, inst.agents() + 1)
}

/// All non-negative count vectors summing to m, ascending lexicographic. With
/// identical resources a notion verdict depends only on these counts.
pub fn enumerate_count_profiles(
    inst: &Instance,
) -> Result<impl Iterator<Item = Vec<usize>> + 'static> {
    if !inst.is_identical_resources() {
        return Err(Error::Precondition(
            "count profiles require identical resources".into(),
        ));
    }
    Ok(CountProfiles::new(inst.agents(), inst.resources()))
}

struct CountProfiles {
    next: Option<Vec<usize>>,
    m: usize,
}

impl CountProfiles {
    fn new(n: usize, m: usize) -> Self {
        let mut first = vec![0; n];
        first[n - 1] = m;
        CountProfiles {
            next: Some(first),
            m,
        }
    }
}

impl Iterator for CountProfiles {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        // ascending lex successor: bump the rightmost position with mass
        // strictly to its right, then push the remainder to the last slot
        let n = current.len();
        let mut suffix = 0usize;
        let mut bump = None;
        for k in (0..n.saturating_sub(1)).rev() {
            suffix += current[k + 1];
            if suffix > 0 {
                bump = Some(k);
                break;
            }
        }
        if let Some(k) = bump {
            let mut succ = current.clone();
            succ[k] += 1;
            for slot in &mut succ[k + 1..] {
                *slot = 0;
            }
            succ[n - 1] = suffix - 1;
            debug_assert_eq!(succ.iter().sum::<usize>(), self.m);
            self.next = Some(succ);
        }
        Some(current)
    }
}

/// Canonical representative allocation of a count profile: agent 0 takes the
/// first c_0 resources, agent 1 the next c_1, and so on.
pub fn profile_representative(profile: &[usize]) -> Allocation {
    let m: usize = profile.iter().sum();
    let mut bundles = Vec::with_capacity(profile.len());
    let mut next = 0;
    for &c in profile {
        bundles.push((next..next + c).collect());
        next += c;
    }
    Allocation::new(bundles, m).expect("profile representative is valid")
}

/// First count profile whose representative allocation satisfies the notion.
pub fn exists_count_profile(
    inst: &Instance,
    notion: Notion,
    cfg: &OracleConfig,
) -> Result<Option<Vec<usize>>> {
    let mu = match notion {
        Notion::MmsInit(_) => mms::all_shares(inst, cfg)?,
        _ => Vec::new(),
    };
    for profile in enumerate_count_profiles(inst)? {
        let alloc = profile_representative(&profile);
        if allocation_passes(inst, &alloc, notion, &mu) {
            return Ok(Some(profile));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::preset;

    #[test]
    fn obs1_has_sixteen_complete_allocations() {
        let inst = preset("obs1").unwrap();
        let cfg = OracleConfig::default();
        let all: Vec<Allocation> = complete_allocations(&inst, &cfg).unwrap().collect();
        assert_eq!(all.len(), 16);
        for alloc in &all {
            assert!(alloc.is_complete(4));
        }
        // deterministic streams
        let again: Vec<Allocation> = complete_allocations(&inst, &cfg).unwrap().collect();
        assert_eq!(all, again);
    }

    #[test]
    fn enumeration_order_is_resource_major() {
        let inst = crate::instances::random_instance(
            1,
            2,
            2,
            3,
            3,
            crate::instances::Flavor::General,
        )
        .unwrap();
        let cfg = OracleConfig::default();
        let got: Vec<Vec<Vec<usize>>> = complete_allocations(&inst, &cfg)
            .unwrap()
            .map(|a| a.bundles().to_vec())
            .collect();
        let expected: Vec<Vec<Vec<usize>>> = vec![
            vec![vec![0, 1], vec![]],
            vec![vec![0], vec![1]],
            vec![vec![1], vec![0]],
            vec![vec![], vec![0, 1]],
        ];
        assert_eq!(got, expected);
    }

    #[test]
    fn enumeration_counts_match_closed_form() {
        for (n, m) in [(2usize, 4usize), (3, 5), (4, 3)] {
            let inst = crate::instances::random_instance(
                n as u64 * 100 + m as u64,
                n,
                m,
                3,
                5,
                crate::instances::Flavor::General,
            )
            .unwrap();
            let cfg = OracleConfig::default();
            let count = complete_allocations(&inst, &cfg).unwrap().count();
            assert_eq!(count as u128, pow_count(n, m).unwrap());
        }
    }

    #[test]
    fn guard_is_loud() {
        let inst = preset("ex2").unwrap(); // 3^100 assignments
        let cfg = OracleConfig::default();
        assert!(matches!(
            exists_complete(&inst, Notion::Ef1Init, &cfg),
            Err(Error::GuardExceeded { .. })
        ));
    }

    #[test]
    fn obs1_existence_answers() {
        let inst = preset("obs1").unwrap();
        let cfg = OracleConfig::default();
        assert!(exists_complete(&inst, Notion::Ef1Init, &cfg).unwrap().is_none());
        let witness = exists_complete(&inst, Notion::MinEf1Init, &cfg)
            .unwrap()
            .unwrap();
        assert_eq!(witness.bundle(1).len(), 1);
        assert_eq!(witness.bundle(0).len(), 3);
        assert!(exists_partial(&inst, Notion::Ef1Init, &cfg).unwrap().is_some());
    }

    #[test]
    fn profile_counts() {
        let obs1 = preset("obs1").unwrap();
        assert_eq!(enumerate_count_profiles(&obs1).unwrap().count(), 5);
        let ex1 = preset("ex1").unwrap();
        assert_eq!(enumerate_count_profiles(&ex1).unwrap().count(), 66);
        let ex2 = preset("ex2").unwrap();
        assert!(enumerate_count_profiles(&ex2).is_err());
    }

    #[test]
    fn profiles_sum_to_m_and_are_unique() {
        let profiles: Vec<Vec<usize>> = CountProfiles::new(3, 6).collect();
        assert_eq!(profiles.len(), 28); // C(8, 2)
        for p in &profiles {
            assert_eq!(p.iter().sum::<usize>(), 6);
        }
        let mut sorted = profiles.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), profiles.len());
        assert_eq!(sorted, profiles); // ascending lex order
    }

    #[test]
    fn labeled_allocations_per_profile_match_multinomial() {
        let inst = crate::instances::random_instance(
            5,
            3,
            4,
            3,
            4,
            crate::instances::Flavor::Identical,
        )
        .unwrap();
        let cfg = OracleConfig::default();
        let mut seen: std::collections::HashMap<Vec<usize>, usize> = Default::default();
        for alloc in complete_allocations(&inst, &cfg).unwrap() {
            let counts: Vec<usize> = alloc.bundles().iter().map(|b| b.len()).collect();
            *seen.entry(counts).or_insert(0) += 1;
        }
        let fact = |k: usize| -> usize { (1..=k).product::<usize>().max(1) };
        for (profile, count) in seen {
            let denom: usize = profile.iter().map(|&c| fact(c)).product();
            assert_eq!(count, fact(4) / denom, "profile {profile:?}");
        }
    }

    #[test]
    fn profile_verdicts_equal_labeled_verdicts_on_obs1() {
        // with identical resources a verdict depends only on bundle sizes
        let inst = preset("obs1").unwrap();
        let cfg = OracleConfig::default();
        for alloc in complete_allocations(&inst, &cfg).unwrap() {
            let profile: Vec<usize> = alloc.bundles().iter().map(|b| b.len()).collect();
            let representative = profile_representative(&profile);
            for notion in [Notion::Ef1Init, Notion::MinEf1Init, Notion::Eq1Relax] {
                let labeled = check_allocation(&inst, &alloc, notion).unwrap().satisfied;
                let by_profile = check_allocation(&inst, &representative, notion)
                    .unwrap()
                    .satisfied;
                assert_eq!(labeled, by_profile, "{profile:?} under {notion:?}");
            }
        }
    }

    #[test]
    fn first_satisfying_count_profile_on_obs1() {
        let inst = preset("obs1").unwrap();
        let cfg = OracleConfig::default();
        assert_eq!(
            exists_count_profile(&inst, Notion::MinEf1Init, &cfg).unwrap(),
            Some(vec![3, 1])
        );
        assert_eq!(
            exists_count_profile(&inst, Notion::Ef1Init, &cfg).unwrap(),
            None
        );
    }

    #[test]
    fn mms_existence_matches_direct_share_check() {
        use crate::ratio::Ratio;
        let cfg = OracleConfig::default();
        for seed in 0..40u64 {
            let inst = crate::instances::random_instance(
                seed,
                2 + (seed % 2) as usize,
                3,
                4,
                6,
                crate::instances::Flavor::General,
            )
            .unwrap();
            let alpha = Ratio::new(1 + seed % 2, 2).unwrap(); // 1/2 or 1
            let notion = Notion::MmsInit(alpha);
            let fast = exists_complete(&inst, notion, &cfg).unwrap();
            let mu = crate::mms::all_shares(&inst, &cfg).unwrap();
            let direct = complete_allocations(&inst, &cfg).unwrap().find(|alloc| {
                (0..inst.agents()).all(|i| {
                    let total =
                        inst.initial_utility(i) + inst.bundle_value(i, alloc.bundle(i));
                    alpha.le_scaled(total, mu[i])
                })
            });
            assert_eq!(fast, direct, "seed {seed}");
        }
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_and_sequential_find_the_same_witness() {
        // find_first must respect enumeration order, so the reported witness
        // cannot depend on the execution mode
        for seed in 0..40u64 {
            let inst = crate::instances::random_instance(
                seed,
                3,
                5,
                6,
                9,
                crate::instances::Flavor::General,
            )
            .unwrap();
            let par = OracleConfig::default();
            let seq = OracleConfig {
                force_sequential: true,
                ..Default::default()
            };
            for notion in [Notion::MinEf1Init, Notion::Ef1Init, Notion::EfInit] {
                assert_eq!(
                    exists_complete(&inst, notion, &par).unwrap(),
                    exists_complete(&inst, notion, &seq).unwrap(),
                    "seed {seed} notion {notion:?}"
                );
            }
        }
    }

    #[test]
    fn partial_agrees_with_complete_when_filtered() {
        let inst = crate::instances::random_instance(
            11,
            2,
            4,
            4,
            6,
            crate::instances::Flavor::General,
        )
        .unwrap();
        let cfg = OracleConfig::default();
        let complete_first = exists_complete(&inst, Notion::Ef1Init, &cfg).unwrap();
        let filtered = complete_allocations(&inst, &cfg)
            .unwrap()
            .find(|a| {
                check_allocation(&inst, a, Notion::Ef1Init)
                    .map(|r| r.satisfied)
                    .unwrap_or(false)
            });
        assert_eq!(complete_first, filtered);
    }
}
