//! Polynomial-time decision of envy-free existence for identical resources.
//!
//! Agents are grouped into levels by initial utility. A violating pair (lower
//! initial utility and strictly lower per-resource value) pins every level
//! from the higher member's level upward to an empty bundle and induces
//! per-level caps on bundle sizes. Existence is then decided by a table over
//! (resources allocated, highest receiving level, count per agent in that
//! level), filled level by level while keeping only the previous layer; a
//! tail check rules out envy from the capped levels above.

use crate::error::{Error, Result};
use crate::model::{Allocation, Instance, LevelPartition, Value};

/// Level structure plus the quantities the decision procedure runs on.
#[derive(Debug, Clone)]
pub struct LevelAnalysis {
    pub levels: LevelPartition,
    /// Per-agent value of a single resource (rows are constant).
    pub per_resource_value: Vec<Value>,
    /// 1-based minimal level containing the higher agent of a violating
    /// pair; number of levels + 1 when no violating pair exists.
    pub h_star: usize,
    /// Number of leading levels that may receive resources.
    pub t_star: usize,
    /// Cap on resources per agent for levels 1..=t_star. Without a violating
    /// pair every cap is m.
    pub caps: Vec<u64>,
}

/// Computes values, the violating-pair cut, and the per-level caps.
pub fn analyze_levels(inst: &Instance) -> Result<LevelAnalysis> {
    inst.require_strict_valid()?;
    if !inst.is_identical_resources() {
        return Err(Error::Precondition(
            "analysis requires identical resources".into(),
        ));
    }
    let levels = inst.levels();
    let t = levels.count();
    let values: Vec<Value> = (0..inst.agents()).map(|i| inst.utility(i, 0)).collect();

    // minimal level holding the richer half of a violating pair
    let mut h_star = t + 1;
    let mut min_v_below = u64::MAX;
    for h in 0..t {
        if h > 0 {
            let max_here = levels.levels[h].iter().map(|&i| values[i]).max().unwrap();
            if min_v_below < max_here {
                h_star = h + 1;
                break;
            }
        }
        for &i in &levels.levels[h] {
            min_v_below = min_v_below.min(values[i]);
        }
    }
    let t_star = if h_star == t + 1 { t } else { h_star - 1 };

    let m = inst.resources() as u64;
    let caps: Vec<u64> = (0..t_star)
        .map(|h| {
            if t_star == t {
                return m;
            }
            let level_b = levels.values[h];
            levels.levels[t_star..]
                .iter()
                .flatten()
                .map(|&i| (inst.initial_utility(i) - level_b) / values[i])
                .min()
                .unwrap_or(m)
        })
        .collect();

    Ok(LevelAnalysis {
        levels,
        per_resource_value: values,
        h_star,
        t_star,
        caps,
    })
}

/// True iff no agent in levels `level`+1..=t_star envies an agent of `level`
/// holding `count` resources. Those agents receive nothing, so agent i stays
/// envy-free against count c exactly when c * v_i <= b_i - b_level.
pub fn check_ef_init_tail(analysis: &LevelAnalysis, level: usize, count: u64) -> bool {
    let level_b = analysis.levels.values[level - 1];
    analysis.levels.levels[level..analysis.t_star]
        .iter()
        .flatten()
        .all(|&i| {
            let b_i = analysis.levels.values[analysis.levels.level_of(i)];
            (count as u128) * (analysis.per_resource_value[i] as u128)
                <= (b_i - level_b) as u128
        })
}

/// Decision plus the analysis it ran on.
#[derive(Debug, Clone)]
pub struct IdenticalOutcome {
    pub analysis: LevelAnalysis,
    pub witness: Option<Allocation>,
}

struct LevelBounds {
    size: u64,
    cap: usize,
    /// c' - c must lie in [delta_min, delta_max] against the previous level.
    delta_min: u64,
    delta_max: u64,
}

fn level_bounds(inst: &Instance, analysis: &LevelAnalysis) -> Vec<LevelBounds> {
    let m = inst.resources();
    (0..analysis.t_star)
        .map(|h| {
            let size = analysis.levels.levels[h].len() as u64;
            let cap = analysis.caps[h].min(m as u64) as usize;
            let (delta_min, delta_max) = if h == 0 {
                (0, 0)
            } else {
                let gap = analysis.levels.values[h] - analysis.levels.values[h - 1];
                let v_min_prev = analysis.levels.levels[h - 1]
                    .iter()
                    .map(|&i| analysis.per_resource_value[i])
                    .min()
                    .unwrap();
                let v_max_here = analysis.levels.levels[h]
                    .iter()
                    .map(|&i| analysis.per_resource_value[i])
                    .max()
                    .unwrap();
                (gap.div_ceil(v_min_prev), gap / v_max_here)
            };
            LevelBounds {
                size,
                cap,
                delta_min,
                delta_max,
            }
        })
        .collect()
}

/// One table layer: reachability over (a, c) with 1-based a <= m, c <= m.
type LayerGrid = Vec<bool>;

fn grid_index(m: usize, a: usize, c: usize) -> usize {
    a * (m + 1) + c
}

fn fill_level(bounds: &LevelBounds, prev: Option<&LayerGrid>, m: usize) -> LayerGrid {
    let mut grid = vec![false; (m + 1) * (m + 1)];
    match prev {
        None => {
            for c in 1..=bounds.cap {
                let a = bounds.size as u128 * c as u128;
                if a <= m as u128 {
                    grid[grid_index(m, a as usize, c)] = true;
                }
            }
        }
        Some(prev) => {
            for a in 1..=m {
                for c in 1..=bounds.cap {
                    let need = bounds.size as u128 * c as u128;
                    if need > a as u128 {
                        continue;
                    }
                    let a_prev = a - need as usize;
                    let lo = c as u64 + bounds.delta_min;
                    let hi = (c as u64).saturating_add(bounds.delta_max).min(m as u64);
                    let mut c_prev = lo;
                    while c_prev <= hi {
                        if prev[grid_index(m, a_prev, c_prev as usize)] {
                            grid[grid_index(m, a, c)] = true;
                            break;
                        }
                        c_prev += 1;
                    }
                }
            }
        }
    }
    grid
}

/// Fills layers keeping only the previous one, scanning each finished level
/// for an accepting full-allocation entry. Returns the accepting (level,
/// count) in ascending (level, count) order, if any.
fn decide(inst: &Instance, analysis: &LevelAnalysis, bounds: &[LevelBounds]) -> Option<(usize, u64)> {
    let m = inst.resources();
    let mut prev: Option<LayerGrid> = None;
    for h in 1..=analysis.t_star {
        let grid = fill_level(&bounds[h - 1], prev.as_ref(), m);
        for c in 1..=bounds[h - 1].cap {
            if grid[grid_index(m, m, c)] && check_ef_init_tail(analysis, h, c as u64) {
                return Some((h, c as u64));
            }
        }
        prev = Some(grid);
    }
    None
}

/// Layers for levels 1..=up_to, all retained (tests and reconstruction).
pub(crate) fn fill_with_layers(
    inst: &Instance,
    analysis: &LevelAnalysis,
    up_to: usize,
) -> Vec<LayerGrid> {
    let bounds = level_bounds(inst, analysis);
    let m = inst.resources();
    let mut layers: Vec<LayerGrid> = Vec::with_capacity(up_to);
    for h in 1..=up_to {
        let grid = fill_level(&bounds[h - 1], layers.last(), m);
        layers.push(grid);
    }
    layers
}

fn reconstruct(
    inst: &Instance,
    analysis: &LevelAnalysis,
    accept_level: usize,
    accept_count: u64,
) -> Allocation {
    let m = inst.resources();
    let bounds = level_bounds(inst, analysis);
    let layers = fill_with_layers(inst, analysis, accept_level);
    let mut counts = vec![0u64; accept_level];
    let mut a = m;
    let mut c = accept_count;
    for h in (1..=accept_level).rev() {
        counts[h - 1] = c;
        let b = &bounds[h - 1];
        a -= (b.size * c) as usize;
        if h == 1 {
            debug_assert_eq!(a, 0);
            break;
        }
        let lo = c + b.delta_min;
        let hi = c.saturating_add(b.delta_max).min(m as u64);
        let prev = &layers[h - 2];
        c = (lo..=hi)
            .find(|&cand| prev[grid_index(m, a, cand as usize)])
            .expect("accepting entry has a predecessor");
    }
    // identical resources: hand them out in ascending id order per level
    let mut bundles = vec![Vec::new(); inst.agents()];
    let mut next = 0usize;
    for (h, &count) in counts.iter().enumerate() {
        for &agent in &analysis.levels.levels[h] {
            bundles[agent] = (next..next + count as usize).collect();
            next += count as usize;
        }
    }
    debug_assert_eq!(next, m);
    Allocation::new(bundles, m).expect("reconstructed allocation is valid")
}

/// Decides whether a complete envy-free allocation exists for an
/// identical-resource instance and reconstructs one when it does.
pub fn decide_ef_init_identical(inst: &Instance) -> Result<IdenticalOutcome> {
    let analysis = analyze_levels(inst)?;
    if analysis.h_star == 1 {
        // a level that may receive nothing exists at the very bottom, so no
        // complete allocation can avoid envy
        return Ok(IdenticalOutcome {
            analysis,
            witness: None,
        });
    }
    let bounds = level_bounds(inst, &analysis);
    let witness = decide(inst, &analysis, &bounds)
        .map(|(level, count)| reconstruct(inst, &analysis, level, count));
    Ok(IdenticalOutcome { analysis, witness })
}
