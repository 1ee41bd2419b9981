//! Canonical instances and seeded generators.
//!
//! The random generator is built on SplitMix64 with the published constants so
//! that instances are reproducible from a seed across implementations; the
//! exact draw order is documented in the repository README.

use crate::error::{Error, Result};
use crate::model::{Instance, Value};
use crate::ratio::Ratio;

/// SplitMix64 (Steele, Lea, Flood 2014). `next_u64` advances the state by the
/// golden-gamma constant and finalizes with the standard mixing rounds.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform-ish draw in [0, bound) by modulo reduction.
    pub fn below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        self.next_u64() % bound
    }
}

/// Returns one of the canonical instances: `obs1`, `ex1`, `ex2`.
pub fn preset(name: &str) -> Result<Instance> {
    match name {
        // Four identical resources; two agents (b, v) = (1, 3) and (10, 10).
        // No complete allocation is EF1-init.
        "obs1" => Instance::new(vec![1, 10], vec![vec![3; 4], vec![10; 4]]),
        // Ten identical resources; b = (0, 0, 20), per-resource values (20, 5, 20).
        // The per-pair relaxation of EF1-init is unsatisfiable here.
        "ex1" => Instance::new(
            vec![0, 0, 20],
            vec![vec![20; 10], vec![5; 10], vec![20; 10]],
        ),
        // One hundred resources; agent 0 values only resource 0 (at 500),
        // agents 1 and 2 value every resource at 50; b = (0, 0, 10).
        "ex2" => {
            let mut row0 = vec![0; 100];
            row0[0] = 500;
            Instance::new(vec![0, 0, 10], vec![row0, vec![50; 100], vec![50; 100]])
        }
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

/// Exact n-th harmonic number as an unreduced fraction.
fn harmonic(n: u64) -> (u128, u128) {
    let mut num: u128 = 0;
    let mut den: u128 = 1;
    for i in 1..=n as u128 {
        num = num * i + den;
        den *= i;
        let g = gcd128(num, den);
        num /= g;
        den /= g;
    }
    (num, den)
}

fn gcd128(a: u128, b: u128) -> u128 {
    if b == 0 {
        a.max(1)
    } else {
        gcd128(b, a % b)
    }
}

/// Identical-resource instance on which no alpha-MMS-init complete allocation
/// exists: minimal n with alpha * H_n > 3, m = 2n, and b_i = u_i({r}) = m^(i-1)
/// for the i-th agent (1-based). Errors when the powers leave the exact
/// arithmetic range.
pub fn mms_harmonic_instance(alpha: Ratio) -> Result<Instance> {
    if !alpha.is_positive() {
        return Err(Error::Precondition("alpha must be positive".into()));
    }
    let mut n: u64 = 0;
    loop {
        n += 1;
        if n > 64 {
            return Err(Error::GuardExceeded {
                need: n as u128,
                limit: 64,
            });
        }
        let (hn_num, hn_den) = harmonic(n);
        // alpha * H_n > 3  <=>  p * num > 3 * q * den
        let lhs = (alpha.num() as u128).checked_mul(hn_num);
        let rhs = 3u128.checked_mul(alpha.den() as u128).and_then(|x| x.checked_mul(hn_den));
        match (lhs, rhs) {
            (Some(l), Some(r)) if l > r => break,
            (Some(_), Some(_)) => continue,
            _ => {
                return Err(Error::Arithmetic(
                    "harmonic comparison exceeds 128-bit range".into(),
                ))
            }
        }
    }
    let m = 2 * n;
    let mut initial = Vec::with_capacity(n as usize);
    let mut power: u64 = 1;
    for i in 0..n {
        initial.push(power);
        if i + 1 < n {
            power = power.checked_mul(m).ok_or(Error::GuardExceeded {
                need: (m as u128).pow(i as u32 + 1),
                limit: u64::MAX as u128,
            })?;
        }
    }
    let utility = initial
        .iter()
        .map(|&v| vec![v; m as usize])
        .collect::<Vec<_>>();
    Instance::new(initial, utility)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    General,
    Identical,
    Diminishing,
}

impl std::str::FromStr for Flavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(Flavor::General),
            "identical" => Ok(Flavor::Identical),
            "diminishing" => Ok(Flavor::Diminishing),
            other => Err(Error::Precondition(format!("unknown flavor `{other}`"))),
        }
    }
}

/// Seeded random instance that always passes strict validation.
///
/// Draw order (all via `below`): the n initial utilities first, then the
/// utility entries row-major, then the zero-row fixes (position, value) in
/// ascending agent order, then the zero-column fixes in ascending resource
/// order. The identical flavor draws one positive per-resource value per
/// agent; the diminishing flavor sorts initial utilities ascending and draws
/// rows from the highest level down, each entry at least the maximum entry of
/// all strictly richer agents.
pub fn random_instance(
    seed: u64,
    n: usize,
    m: usize,
    max_u: Value,
    max_b: Value,
    flavor: Flavor,
) -> Result<Instance> {
    if n < 2 || m < 1 || max_u < 1 {
        return Err(Error::Precondition(
            "need n >= 2, m >= 1, max_u >= 1".into(),
        ));
    }
    let mut rng = SplitMix64::new(seed);
    let mut initial: Vec<Value> = (0..n).map(|_| rng.below(max_b + 1)).collect();
    let utility = match flavor {
        Flavor::General => {
            let mut u: Vec<Vec<Value>> =
                (0..n).map(|_| (0..m).map(|_| rng.below(max_u + 1)).collect()).collect();
            for row in u.iter_mut() {
                if row.iter().all(|&v| v == 0) {
                    let r = rng.below(m as u64) as usize;
                    row[r] = 1 + rng.below(max_u);
                }
            }
            for r in 0..m {
                if (0..n).all(|i| u[i][r] == 0) {
                    let i = rng.below(n as u64) as usize;
                    u[i][r] = 1 + rng.below(max_u);
                }
            }
            u
        }
        Flavor::Identical => (0..n)
            .map(|_| {
                let v = 1 + rng.below(max_u);
                vec![v; m]
            })
            .collect(),
        Flavor::Diminishing => {
            initial.sort_unstable();
            let mut u = vec![vec![0; m]; n];
            let mut floor = vec![0u64; m];
            // walk levels from richest to poorest so lower rows dominate
            let mut hi = n;
            while hi > 0 {
                let mut lo = hi;
                while lo > 0 && initial[lo - 1] == initial[hi - 1] {
                    lo -= 1;
                }
                for i in lo..hi {
                    for r in 0..m {
                        u[i][r] = floor[r] + rng.below(max_u - floor[r] + 1);
                    }
                    if u[i].iter().all(|&v| v == 0) {
                        let r = rng.below(m as u64) as usize;
                        u[i][r] = 1 + rng.below(max_u);
                    }
                }
                for r in 0..m {
                    for i in lo..hi {
                        floor[r] = floor[r].max(u[i][r]);
                    }
                }
                hi = lo;
            }
            for r in 0..m {
                if (0..n).all(|i| u[i][r] == 0) {
                    // bumping a minimum-b agent cannot break dominance
                    u[0][r] = 1 + rng.below(max_u);
                }
            }
            u
        }
    };
    let inst = Instance::new(initial, utility)?;
    debug_assert!(inst.validate().is_strict_valid());
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_have_documented_shapes() {
        let obs1 = preset("obs1").unwrap();
        assert_eq!((obs1.agents(), obs1.resources()), (2, 4));
        let ex1 = preset("ex1").unwrap();
        assert_eq!((ex1.agents(), ex1.resources()), (3, 10));
        let ex2 = preset("ex2").unwrap();
        assert_eq!((ex2.agents(), ex2.resources()), (3, 100));
        assert_eq!(ex2.utility(0, 0), 500);
        assert_eq!(ex2.utility(0, 1), 0);
        assert!(preset("nope").is_err());
    }

    #[test]
    fn harmonic_instance_alpha_one() {
        let inst = mms_harmonic_instance(Ratio::one()).unwrap();
        assert_eq!(inst.agents(), 11);
        assert_eq!(inst.resources(), 22);
        assert!(inst.is_identical_resources());
        assert_eq!(inst.initial_utility(0), 1);
        assert_eq!(inst.initial_utility(10), 22u64.pow(10));
        for i in 0..11 {
            assert_eq!(inst.utility(i, 0), inst.initial_utility(i));
        }
    }

    #[test]
    fn harmonic_instance_just_above_three_over_h2() {
        // alpha = 21/10 > 2 = 3/H_2 gives the minimal construction n = 2, m = 4
        let inst = mms_harmonic_instance(Ratio::new(21, 10).unwrap()).unwrap();
        assert_eq!(inst.agents(), 2);
        assert_eq!(inst.resources(), 4);
        assert_eq!(inst.initial_utility(1), 4);
    }

    #[test]
    fn harmonic_instance_overflows_loudly_for_small_alpha() {
        assert!(mms_harmonic_instance(Ratio::new(1, 10).unwrap()).is_err());
    }

    #[test]
    fn harmonic_share_lower_bounds_hold_across_alphas() {
        for alpha in [Ratio::one(), Ratio::new(21, 10).unwrap()] {
            let inst = mms_harmonic_instance(alpha).unwrap();
            let m = inst.resources() as u64;
            for idx in 0..inst.agents() {
                let i = idx as u64 + 1;
                let mu = crate::mms::compute_mms_identical(&inst, idx);
                assert!(
                    mu >= (m / i) * m.pow(idx as u32),
                    "alpha {alpha} agent {i}: mu = {mu}"
                );
            }
        }
    }

    #[test]
    fn random_is_deterministic_per_seed() {
        for flavor in [Flavor::General, Flavor::Identical, Flavor::Diminishing] {
            let a = random_instance(42, 4, 5, 7, 13, flavor).unwrap();
            let b = random_instance(42, 4, 5, 7, 13, flavor).unwrap();
            assert_eq!(a, b);
            let c = random_instance(43, 4, 5, 7, 13, flavor).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn random_flavors_satisfy_their_predicates() {
        for seed in 0..500u64 {
            let ident = random_instance(seed, 3, 4, 6, 9, Flavor::Identical).unwrap();
            assert!(ident.is_identical_resources(), "seed {seed}");
            assert!(ident.validate().is_strict_valid());
            let dim = random_instance(seed, 4, 3, 5, 11, Flavor::Diminishing).unwrap();
            assert!(dim.is_diminishing(), "seed {seed}");
            assert!(dim.validate().is_strict_valid());
            let gen = random_instance(seed, 3, 3, 4, 8, Flavor::General).unwrap();
            assert!(gen.validate().is_strict_valid(), "seed {seed}");
        }
    }
}
