//! SIR epidemic simulation producing node influence scores.
//!
//! Each node is seeded as the only infected individual; the mean ever-infected
//! count over repeated synchronous-time simulations is that node's influence
//! score. Infection decisions are counter-based: the uniform draw for a
//! contact depends only on (replicate, infector, infectee, attempt) and the
//! draw for a recovery only on (replicate, node, age). This makes replicates
//! independent of evaluation order, embarrassingly parallel, and monotonically
//! coupled across infection rates (common random numbers).

use crate::graph::{DegreeStats, Graph};
use crate::seeds;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SirError {
    #[error("degenerate network: <k^2> = {mean_k2} <= <k> = {mean_k}, epidemic threshold undefined")]
    DegenerateThreshold { mean_k: f64, mean_k2: f64 },
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SirConfig {
    /// Infection probability per infected–susceptible contact per step.
    /// `None` means `min(1, gamma_multiplier * gamma_c)`.
    pub gamma: Option<f64>,
    /// Recovery probability per step.
    pub delta: f64,
    pub sims_per_node: usize,
    pub gamma_multiplier: f64,
    /// Safety cap on simulated steps.
    pub max_steps: usize,
    pub seed: u64,
}

impl Default for SirConfig {
    fn default() -> Self {
        SirConfig {
            gamma: None,
            delta: 1.0,
            sims_per_node: 100,
            gamma_multiplier: 1.5,
            max_steps: 100_000,
            seed: 0,
        }
    }
}

/// Influence scores: mean ever-infected count per seed node.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct InfluenceScores {
    pub y: Vec<f64>,
    pub config: SirConfig,
    /// Mean-field epidemic threshold of the labeled graph.
    pub gamma_c: f64,
    /// Infection probability actually used.
    pub gamma: f64,
    /// True if any replicate hit the step cap.
    pub truncated: bool,
}

/// Mean-field epidemic threshold γ_c = ⟨k⟩ / (⟨k²⟩ − ⟨k⟩).
pub fn epidemic_threshold(stats: &DegreeStats) -> Result<f64, SirError> {
    if stats.mean_k2 <= stats.mean_k {
        return Err(SirError::DegenerateThreshold {
            mean_k: stats.mean_k,
            mean_k2: stats.mean_k2,
        });
    }
    Ok(stats.mean_k / (stats.mean_k2 - stats.mean_k))
}

const RECOVERY_TAG: u64 = u64::MAX;

/// One synchronous SIR cascade from `seed_node`. Returns the ever-infected
/// count (seed included) and whether the step cap was hit.
///
/// Per step, every node infected at step start attempts each susceptible
/// neighbor independently with probability gamma (so a node infected this
/// step cannot transmit this step), then recovers with probability delta.
pub fn simulate_once(
    g: &Graph,
    seed_node: usize,
    gamma: f64,
    delta: f64,
    max_steps: usize,
    draw_seed: u64,
    replicate: u64,
) -> (usize, bool) {
    let n = g.node_count();
    debug_assert!(seed_node < n);
    const SUSCEPTIBLE: u8 = 0;
    const INFECTED: u8 = 1;
    const RECOVERED: u8 = 2;
    let mut state = vec![SUSCEPTIBLE; n];
    state[seed_node] = INFECTED;
    // Age in steps since infection, indexing the recovery draws.
    let mut age = vec![0u32; n];
    let mut infected: Vec<u32> = vec![seed_node as u32];
    let mut ever = 1usize;
    let mut newly: Vec<u32> = Vec::new();
    for _step in 0..max_steps {
        if infected.is_empty() {
            return (ever, false);
        }
        newly.clear();
        for &v in &infected {
            let attempt = age[v as usize] as u64;
            for &w in g.neighbors(v as usize) {
                if state[w as usize] == SUSCEPTIBLE {
                    let u = seeds::counter_uniform(
                        draw_seed,
                        replicate,
                        ((v as u64) << 32) | w as u64,
                        attempt,
                    );
                    if u < gamma {
                        state[w as usize] = INFECTED;
                        newly.push(w);
                        ever += 1;
                    }
                }
            }
        }
        // Recoveries apply to nodes infectious at step start.
        let mut still: Vec<u32> = Vec::with_capacity(infected.len() + newly.len());
        for &v in &infected {
            let u = seeds::counter_uniform(
                draw_seed,
                replicate,
                ((v as u64) << 32) | RECOVERY_TAG >> 32,
                age[v as usize] as u64 | (RECOVERY_TAG << 32),
            );
            if u < delta {
                state[v as usize] = RECOVERED;
            } else {
                age[v as usize] += 1;
                still.push(v);
            }
        }
        still.extend_from_slice(&newly);
        infected = still;
    }
    (ever, !infected.is_empty())
}

/// Influence scores for every node: mean of `sims_per_node` independent
/// cascades seeded at each node. Deterministic given the config seed; the
/// per-node means reduce replicates in a fixed order.
pub fn influence_scores(g: &Graph, cfg: &SirConfig) -> Result<InfluenceScores, SirError> {
    let stats = crate::graph::degree_stats(g);
    let gamma_c = epidemic_threshold(&stats)?;
    let gamma = cfg
        .gamma
        .unwrap_or_else(|| (cfg.gamma_multiplier * gamma_c).min(1.0))
        .clamp(0.0, 1.0);
    let delta = cfg.delta.clamp(0.0, 1.0);
    let n = g.node_count();
    let sims = cfg.sims_per_node.max(1);
    let results: Vec<(f64, bool)> = (0..n)
        .into_par_iter()
        .map(|v| {
            let mut total = 0usize;
            let mut truncated = false;
            for rep in 0..sims {
                let replicate = (v * sims + rep) as u64;
                let (count, trunc) =
                    simulate_once(g, v, gamma, delta, cfg.max_steps, cfg.seed, replicate);
                total += count;
                truncated |= trunc;
            }
            (total as f64 / sims as f64, truncated)
        })
        .collect();
    let truncated = results.iter().any(|&(_, t)| t);
    Ok(InfluenceScores {
        y: results.into_iter().map(|(m, _)| m).collect(),
        config: cfg.clone(),
        gamma_c,
        gamma,
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{degree_stats, Graph};

    fn path(n: usize) -> Graph {
        let edges: Vec<(u32, u32)> = (1..n as u32).map(|i| (i - 1, i)).collect();
        Graph::from_edges(n, &edges).unwrap()
    }

    #[test]
    fn threshold_regular_graphs() {
        // k-regular: gamma_c = 1/(k-1), exactly.
        let c5 = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]).unwrap();
        assert_eq!(epidemic_threshold(&degree_stats(&c5)).unwrap(), 1.0);
        let k4 = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        assert_eq!(epidemic_threshold(&degree_stats(&k4)).unwrap(), 1.0 / 2.0);
    }

    #[test]
    fn threshold_triangle_and_star() {
        let k3 = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(epidemic_threshold(&degree_stats(&k3)).unwrap(), 1.0);
        let s4 = Graph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let gc = epidemic_threshold(&degree_stats(&s4)).unwrap();
        assert!((gc - (8.0 / 5.0) / (4.0 - 8.0 / 5.0)).abs() < 1e-15);
        assert!((gc - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn threshold_degenerate() {
        let p2 = path(2);
        assert!(epidemic_threshold(&degree_stats(&p2)).is_err());
    }

    #[test]
    fn zero_gamma_never_spreads() {
        let g = path(5);
        for v in 0..5 {
            let (c, t) = simulate_once(&g, v, 0.0, 1.0, 1000, 1, 0);
            assert_eq!(c, 1);
            assert!(!t);
        }
    }

    #[test]
    fn full_gamma_full_delta_infects_all() {
        // Deterministic full cascade on a connected graph.
        let g = crate::netgen::gen_ba(&crate::netgen::GenSpec::new(
            crate::netgen::NetModel::Ba,
            34,
            4.0,
            3,
        ))
        .unwrap();
        assert!(g.is_connected());
        for v in 0..g.node_count() {
            let (c, _) = simulate_once(&g, v, 1.0, 1.0, 1000, 9, v as u64);
            assert_eq!(c, g.node_count());
        }
    }

    #[test]
    fn p3_end_seed_expectation() {
        // Hand enumeration for path 0-1-2 seeded at 0 with gamma = 0.5,
        // delta = 1: E[count] = 1 + 1/2 + 1/4 = 1.75.
        let g = path(3);
        let reps = 100_000u64;
        let mut total = 0usize;
        for rep in 0..reps {
            let (c, _) = simulate_once(&g, 0, 0.5, 1.0, 100, 77, rep);
            total += c;
        }
        let mean = total as f64 / reps as f64;
        assert!((mean - 1.75).abs() < 0.01, "mean = {mean}");
    }

    #[test]
    fn delta_one_total_steps_bounded() {
        // With delta = 1 every node is infectious exactly one step, so a
        // cascade can run at most n steps; the cap never triggers at n.
        let g = path(50);
        for rep in 0..50 {
            let (_, truncated) = simulate_once(&g, 0, 0.9, 1.0, 50, 5, rep);
            assert!(!truncated);
        }
    }

    #[test]
    fn monotone_in_gamma_under_common_random_numbers() {
        let g = crate::netgen::gen_er(&crate::netgen::GenSpec::new(
            crate::netgen::NetModel::Er,
            60,
            4.0,
            8,
        ))
        .unwrap();
        for rep in 0..200 {
            let mut prev = 0usize;
            for gamma in [0.0, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0] {
                let (c, _) = simulate_once(&g, (rep % 60) as usize, gamma, 1.0, 1000, 13, rep);
                assert!(c >= prev, "rep {rep}: count {c} < {prev} at gamma {gamma}");
                prev = c;
            }
        }
    }

    #[test]
    fn influence_scores_limits() {
        let g = crate::netgen::gen_ba(&crate::netgen::GenSpec::new(
            crate::netgen::NetModel::Ba,
            34,
            4.0,
            3,
        ))
        .unwrap();
        let full = influence_scores(
            &g,
            &SirConfig {
                gamma: Some(1.0),
                sims_per_node: 5,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(full.y.iter().all(|&y| y == 34.0));
        let none = influence_scores(
            &g,
            &SirConfig {
                gamma: Some(0.0),
                sims_per_node: 5,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(none.y.iter().all(|&y| y == 1.0));
    }

    #[test]
    fn influence_scores_deterministic_and_bounded() {
        let g = crate::netgen::gen_er(&crate::netgen::GenSpec::new(
            crate::netgen::NetModel::Er,
            50,
            4.0,
            21,
        ))
        .unwrap();
        let cfg = SirConfig {
            sims_per_node: 20,
            seed: 99,
            ..Default::default()
        };
        let a = influence_scores(&g, &cfg).unwrap();
        let b = influence_scores(&g, &cfg).unwrap();
        assert_eq!(a.y, b.y);
        assert!(a.gamma > 0.0 && a.gamma <= 1.0);
        assert!(a.y.iter().all(|&y| (1.0..=50.0).contains(&y)));
    }
}
