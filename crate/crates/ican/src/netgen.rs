//! Seeded generators for the five synthetic training network families:
//! Barabási–Albert (BA), Erdős–Rényi (ER), extreme-homogeneous (EH),
//! q-snapback (QS) and random-hexagon (RH).
//!
//! All generators are pure functions of their [`GenSpec`]: the same seed
//! yields the same edge set. Outputs are simple undirected graphs.

use crate::graph::Graph;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("configuration error: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum NetModel {
    Ba,
    Er,
    Eh,
    Qs,
    Rh,
}

impl NetModel {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ba" => Some(NetModel::Ba),
            "er" => Some(NetModel::Er),
            "eh" => Some(NetModel::Eh),
            "qs" => Some(NetModel::Qs),
            "rh" => Some(NetModel::Rh),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            NetModel::Ba => "ba",
            NetModel::Er => "er",
            NetModel::Eh => "eh",
            NetModel::Qs => "qs",
            NetModel::Rh => "rh",
        }
    }
}

/// Optional per-model parameter overrides; `None` means derive from the
/// target average degree.
#[derive(Debug, Clone, Default, serde::Serialize, serde::Deserialize)]
pub struct ModelParams {
    /// BA attachment count m (default: round(target_avg_degree / 2)).
    pub ba_m: Option<usize>,
    /// ER edge probability p (default: target_avg_degree / (n - 1)).
    pub er_p: Option<f64>,
    /// QS snapback probability q (default: calibrated to the target degree).
    pub qs_q: Option<f64>,
    /// QS snapback range r.
    pub qs_range: Option<usize>,
    /// EH rectification attempt budget (default: 50 n).
    pub eh_budget: Option<usize>,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct GenSpec {
    pub model: NetModel,
    pub n: usize,
    pub target_avg_degree: f64,
    pub seed: u64,
    #[serde(default)]
    pub params: ModelParams,
}

impl GenSpec {
    pub fn new(model: NetModel, n: usize, target_avg_degree: f64, seed: u64) -> Self {
        GenSpec {
            model,
            n,
            target_avg_degree,
            seed,
            params: ModelParams::default(),
        }
    }
}

pub fn generate(spec: &GenSpec) -> Result<Graph, GenError> {
    match spec.model {
        NetModel::Ba => gen_ba(spec),
        NetModel::Er => gen_er(spec),
        NetModel::Eh => gen_eh(spec),
        NetModel::Qs => gen_qs(spec),
        NetModel::Rh => gen_rh(spec),
    }
}

/// Barabási–Albert preferential attachment. Starts from a clique on m+1
/// nodes; each new node attaches m edges to distinct existing nodes with
/// probability proportional to current degree.
pub fn gen_ba(spec: &GenSpec) -> Result<Graph, GenError> {
    let n = spec.n;
    let m = spec
        .params
        .ba_m
        .unwrap_or_else(|| (spec.target_avg_degree / 2.0).round() as usize);
    if m < 1 {
        return Err(GenError::Config(format!(
            "BA attachment m = {m} must be >= 1 (target_avg_degree = {})",
            spec.target_avg_degree
        )));
    }
    if n <= m {
        return Err(GenError::Config(format!("BA requires n > m (n = {n}, m = {m})")));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let mut edges: Vec<(u32, u32)> = Vec::with_capacity(m * (m + 1) / 2 + m * (n - m - 1));
    // Degree-proportional sampling via the repeated-endpoints list.
    let mut endpoints: Vec<u32> = Vec::new();
    for i in 0..=(m as u32) {
        for j in (i + 1)..=(m as u32) {
            edges.push((i, j));
            endpoints.push(i);
            endpoints.push(j);
        }
    }
    let mut chosen: Vec<u32> = Vec::with_capacity(m);
    for v in (m + 1)..n {
        chosen.clear();
        while chosen.len() < m {
            let t = endpoints[rng.gen_range(0..endpoints.len())];
            if !chosen.contains(&t) {
                chosen.push(t);
            }
        }
        for &t in &chosen {
            edges.push((t.min(v as u32), t.max(v as u32)));
            endpoints.push(t);
            endpoints.push(v as u32);
        }
    }
    Ok(Graph::from_edges(n, &edges).expect("BA construction yields valid edges"))
}

fn er_edges(rng: &mut ChaCha12Rng, n: usize, p: f64) -> Vec<(u32, u32)> {
    let mut edges = Vec::new();
    for i in 0..n as u32 {
        for j in (i + 1)..n as u32 {
            if rng.gen_bool(p) {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// Erdős–Rényi G(n, p): each pair included independently with probability p.
pub fn gen_er(spec: &GenSpec) -> Result<Graph, GenError> {
    let n = spec.n;
    if n < 1 {
        return Err(GenError::Config("ER requires n >= 1".into()));
    }
    let p = spec
        .params
        .er_p
        .unwrap_or(if n > 1 { spec.target_avg_degree / (n - 1) as f64 } else { 0.0 });
    if !(0.0..=1.0).contains(&p) {
        return Err(GenError::Config(format!("ER probability p = {p} out of [0, 1]")));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let edges = er_edges(&mut rng, n, p);
    Ok(Graph::from_edges(n, &edges).expect("ER construction yields valid edges"))
}

/// Extreme-homogeneous: an ER draw followed by degree-flattening edge
/// rectifications. Each attempt detaches the max-degree endpoint of a random
/// edge incident to a current maximum-degree node and reattaches that end to
/// a current minimum-degree node, rejecting duplicates and self-loops, until
/// max − min degree <= 1 or the attempt budget runs out. Edge count is
/// preserved.
pub fn gen_eh(spec: &GenSpec) -> Result<Graph, GenError> {
    let n = spec.n;
    let p = spec
        .params
        .er_p
        .unwrap_or(if n > 1 { spec.target_avg_degree / (n - 1) as f64 } else { 0.0 });
    if !(0.0..=1.0).contains(&p) {
        return Err(GenError::Config(format!("EH base probability p = {p} out of [0, 1]")));
    }
    let budget = spec.params.eh_budget.unwrap_or(50 * n);
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    // Adjacency lists are built from the ordered draw, not the hash set, so
    // the rewiring choices below are reproducible.
    let initial = er_edges(&mut rng, n, p);
    let mut edge_set: HashSet<(u32, u32)> = initial.iter().copied().collect();
    let mut degree = vec![0usize; n];
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    for &(a, b) in &initial {
        degree[a as usize] += 1;
        degree[b as usize] += 1;
        adj[a as usize].push(b);
        adj[b as usize].push(a);
    }
    for _ in 0..budget {
        let dmax = *degree.iter().max().unwrap();
        let dmin = *degree.iter().min().unwrap();
        if dmax - dmin <= 1 {
            break;
        }
        let maxima: Vec<u32> = (0..n as u32).filter(|&v| degree[v as usize] == dmax).collect();
        let minima: Vec<u32> = (0..n as u32).filter(|&v| degree[v as usize] == dmin).collect();
        let u = *maxima.choose(&mut rng).unwrap();
        let v = *adj[u as usize].choose(&mut rng).unwrap();
        let w = *minima.choose(&mut rng).unwrap();
        if w == v {
            continue;
        }
        let new_edge = (v.min(w), v.max(w));
        if edge_set.contains(&new_edge) {
            continue;
        }
        let old_edge = (u.min(v), u.max(v));
        edge_set.remove(&old_edge);
        edge_set.insert(new_edge);
        degree[u as usize] -= 1;
        degree[w as usize] += 1;
        let pos = adj[u as usize].iter().position(|&x| x == v).unwrap();
        adj[u as usize].swap_remove(pos);
        let pos = adj[v as usize].iter().position(|&x| x == u).unwrap();
        adj[v as usize].swap_remove(pos);
        adj[v as usize].push(w);
        adj[w as usize].push(v);
    }
    let edges: Vec<(u32, u32)> = edge_set.into_iter().collect();
    Ok(Graph::from_edges(n, &edges).expect("EH construction yields valid edges"))
}

/// Q-snapback: a backbone chain i—(i−1) plus probabilistic snapback edges
/// from each node i to earlier nodes j in [max(0, i−r), i−2]. The snapback
/// probability q is calibrated so the expected mean degree matches the
/// target; the result is returned undirected.
pub fn gen_qs(spec: &GenSpec) -> Result<Graph, GenError> {
    let n = spec.n;
    if n < 2 {
        return Err(GenError::Config("QS requires n >= 2".into()));
    }
    let r = spec.params.qs_range.unwrap_or(30);
    // Number of feasible snapback slots per node and in total.
    let slot_count = |i: usize| -> usize {
        if i < 2 {
            return 0;
        }
        let lo = i.saturating_sub(r);
        let hi = i - 2;
        if hi >= lo {
            hi - lo + 1
        } else {
            0
        }
    };
    let total_slots: usize = (0..n).map(slot_count).sum();
    let q = match spec.params.qs_q {
        Some(q) => q,
        None => {
            // Chain supplies n−1 edges; snapbacks must supply the rest of
            // target_avg_degree · n / 2 edges in expectation.
            let extra = (spec.target_avg_degree * n as f64 / 2.0) - (n - 1) as f64;
            if total_slots == 0 || extra <= 0.0 {
                0.0
            } else {
                (extra / total_slots as f64).min(1.0)
            }
        }
    };
    if !(0.0..=1.0).contains(&q) {
        return Err(GenError::Config(format!("QS probability q = {q} out of [0, 1]")));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let mut edges: Vec<(u32, u32)> = (1..n as u32).map(|i| (i - 1, i)).collect();
    for i in 2..n {
        let lo = i.saturating_sub(r);
        for j in lo..=(i - 2) {
            if rng.gen_bool(q) {
                edges.push((j as u32, i as u32));
            }
        }
    }
    Ok(Graph::from_edges(n, &edges).expect("QS construction yields valid edges"))
}

/// Random-hexagon: ⌊n/6⌋ disjoint 6-cycles (remainder nodes appended to the
/// last cycle by an attachment edge, keeping every hexagon intact),
/// consecutive hexagons linked for connectivity, then uniformly random
/// inter-hexagon edges until the mean degree reaches the target.
pub fn gen_rh(spec: &GenSpec) -> Result<Graph, GenError> {
    let n = spec.n;
    if n < 6 {
        return Err(GenError::Config("RH requires n >= 6".into()));
    }
    let num_hex = n / 6;
    let rem_start = num_hex * 6;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let mut edge_set: HashSet<(u32, u32)> = HashSet::new();
    let add = |set: &mut HashSet<(u32, u32)>, a: u32, b: u32| -> bool {
        if a == b {
            return false;
        }
        set.insert((a.min(b), a.max(b)))
    };
    for h in 0..num_hex {
        let base = (h * 6) as u32;
        for k in 0..6u32 {
            add(&mut edge_set, base + k, base + (k + 1) % 6);
        }
    }
    // Remainder nodes hang off the last hexagon.
    let last_base = ((num_hex - 1) * 6) as u32;
    for (k, v) in (rem_start..n).enumerate() {
        add(&mut edge_set, v as u32, last_base + (k % 6) as u32);
    }
    // Consecutive hexagons get one random bridge each.
    for h in 0..num_hex.saturating_sub(1) {
        let a = (h * 6 + rng.gen_range(0..6)) as u32;
        let b = ((h + 1) * 6 + rng.gen_range(0..6)) as u32;
        add(&mut edge_set, a, b);
    }
    // Hexagon id of a node; remainder nodes count as the last hexagon.
    let hex_of = |v: u32| -> usize { ((v as usize) / 6).min(num_hex - 1) };
    let target_edges = (spec.target_avg_degree * n as f64 / 2.0).ceil() as usize;
    let mut attempts = 0usize;
    let attempt_cap = 200 * n + 1000;
    while edge_set.len() < target_edges && attempts < attempt_cap {
        attempts += 1;
        let a = rng.gen_range(0..n as u32);
        let b = rng.gen_range(0..n as u32);
        if hex_of(a) == hex_of(b) {
            continue;
        }
        add(&mut edge_set, a, b);
    }
    let edges: Vec<(u32, u32)> = edge_set.into_iter().collect();
    Ok(Graph::from_edges(n, &edges).expect("RH construction yields valid edges"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::degree_stats;

    fn spec(model: NetModel, n: usize, avg: f64, seed: u64) -> GenSpec {
        GenSpec::new(model, n, avg, seed)
    }

    #[test]
    fn ba_edge_count_and_mean_degree() {
        let g = gen_ba(&spec(NetModel::Ba, 1000, 4.0, 7)).unwrap();
        let m = 2;
        assert_eq!(g.edge_count(), m * (m + 1) / 2 + m * (1000 - m - 1));
        let s = degree_stats(&g);
        assert!((3.9..=4.0).contains(&s.mean_k), "mean_k = {}", s.mean_k);
    }

    #[test]
    fn ba_three_nodes_is_tree() {
        let g = gen_ba(&spec(NetModel::Ba, 3, 2.0, 1)).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert!(g.is_connected());
    }

    #[test]
    fn ba_heavy_tail_over_seeds() {
        // Empirical oracle: max degree >= 30 in at least 95 of 100 seeds.
        let mut hits = 0;
        for seed in 0..100 {
            let g = gen_ba(&spec(NetModel::Ba, 1000, 4.0, seed)).unwrap();
            let max_deg = (0..1000).map(|v| g.degree(v)).max().unwrap();
            if max_deg >= 30 {
                hits += 1;
            }
        }
        assert!(hits >= 95, "heavy tail hits = {hits}/100");
    }

    #[test]
    fn ba_invalid_m() {
        assert!(gen_ba(&spec(NetModel::Ba, 10, 0.4, 1)).is_err());
        assert!(gen_ba(&spec(NetModel::Ba, 2, 4.0, 1)).is_err());
    }

    #[test]
    fn er_mean_degree_concentrates() {
        let g = gen_er(&spec(NetModel::Er, 1000, 4.0, 11)).unwrap();
        let s = degree_stats(&g);
        assert!((3.6..=4.4).contains(&s.mean_k), "mean_k = {}", s.mean_k);
    }

    #[test]
    fn er_extremes() {
        let mut s0 = spec(NetModel::Er, 10, 0.0, 1);
        s0.params.er_p = Some(0.0);
        assert_eq!(gen_er(&s0).unwrap().edge_count(), 0);
        let mut s1 = spec(NetModel::Er, 5, 4.0, 1);
        s1.params.er_p = Some(1.0);
        assert_eq!(gen_er(&s1).unwrap().edge_count(), 10);
        let mut bad = spec(NetModel::Er, 5, 4.0, 1);
        bad.params.er_p = Some(1.5);
        assert!(gen_er(&bad).is_err());
    }

    #[test]
    fn eh_reduces_degree_variance() {
        let sp = spec(NetModel::Eh, 1000, 4.0, 5);
        let before = gen_er(&spec(NetModel::Er, 1000, 4.0, 5)).unwrap();
        let after = gen_eh(&sp).unwrap();
        assert_eq!(before.edge_count(), after.edge_count(), "edge count preserved");
        let var = |g: &Graph| {
            let s = degree_stats(g);
            s.mean_k2 - s.mean_k * s.mean_k
        };
        assert!(
            var(&after) < var(&before),
            "variance after = {} !< before = {}",
            var(&after),
            var(&before)
        );
    }

    #[test]
    fn eh_small_instance_converges() {
        let mut sp = spec(NetModel::Eh, 8, 2.0, 3);
        sp.params.eh_budget = Some(100_000);
        let g = gen_eh(&sp).unwrap();
        let s = degree_stats(&g);
        let dmax = *s.degrees.iter().max().unwrap();
        let dmin = *s.degrees.iter().min().unwrap();
        assert!(dmax - dmin <= 1, "degrees = {:?}", s.degrees);
    }

    #[test]
    fn eh_regular_input_is_fixed_point() {
        // p = 1 makes the ER stage complete (regular); no rewire can occur,
        // so EH must return the same complete graph.
        let mut sp = spec(NetModel::Eh, 6, 5.0, 9);
        sp.params.er_p = Some(1.0);
        let g = gen_eh(&sp).unwrap();
        assert_eq!(g.edge_count(), 15);
    }

    #[test]
    fn qs_zero_probability_is_path() {
        let mut sp = spec(NetModel::Qs, 50, 4.0, 2);
        sp.params.qs_q = Some(0.0);
        let g = gen_qs(&sp).unwrap();
        assert_eq!(g.edge_count(), 49);
        let s = degree_stats(&g);
        assert!((s.mean_k - 2.0 * 49.0 / 50.0).abs() < 1e-12);
    }

    #[test]
    fn qs_two_nodes() {
        let g = gen_qs(&spec(NetModel::Qs, 2, 4.0, 2)).unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
    }

    #[test]
    fn qs_calibration_hits_target() {
        // Empirical calibration check over 20 seeds.
        let mut total = 0.0;
        for seed in 0..20 {
            let mut sp = spec(NetModel::Qs, 1000, 4.0, seed);
            sp.params.qs_range = Some(30);
            let s = degree_stats(&gen_qs(&sp).unwrap());
            assert!((3.5..=4.5).contains(&s.mean_k), "seed {seed}: mean_k = {}", s.mean_k);
            total += s.mean_k;
        }
        let avg = total / 20.0;
        assert!((3.8..=4.2).contains(&avg), "avg over seeds = {avg}");
    }

    #[test]
    fn rh_single_hexagon() {
        let g = gen_rh(&spec(NetModel::Rh, 6, 2.0, 1)).unwrap();
        assert_eq!(g.edge_count(), 6);
        for v in 0..6 {
            assert_eq!(g.degree(v), 2);
        }
        assert!(g.is_connected());
    }

    #[test]
    fn rh_two_hexagons_with_bridge() {
        let g = gen_rh(&spec(NetModel::Rh, 12, 2.5, 4)).unwrap();
        assert!(g.is_connected());
        // Both hexagon cycles intact.
        for h in 0..2u32 {
            for k in 0..6u32 {
                assert!(g.has_edge((h * 6 + k) as usize, (h * 6 + (k + 1) % 6) as usize));
            }
        }
        assert!(g.edge_count() >= 13, "bridge missing: {}", g.edge_count());
    }

    #[test]
    fn rh_thousand_nodes_construction_audit() {
        let g = gen_rh(&spec(NetModel::Rh, 1000, 4.0, 6)).unwrap();
        assert!(g.is_connected());
        let s = degree_stats(&g);
        assert!(s.mean_k >= 4.0, "mean_k = {}", s.mean_k);
        // 166 node-disjoint 6-cycles by construction.
        for h in 0..166u32 {
            for k in 0..6u32 {
                assert!(g.has_edge((h * 6 + k) as usize, (h * 6 + (k + 1) % 6) as usize));
            }
        }
    }

    #[test]
    fn generators_are_pure_functions_of_spec() {
        for model in [NetModel::Ba, NetModel::Er, NetModel::Eh, NetModel::Qs, NetModel::Rh] {
            let sp = spec(model, 200, 4.0, 123);
            let a = generate(&sp).unwrap();
            let b = generate(&sp).unwrap();
            assert_eq!(a.edges(), b.edges(), "{model:?} not deterministic");
            let c = generate(&GenSpec { seed: 124, ..sp.clone() }).unwrap();
            assert_ne!(a.edges(), c.edges(), "{model:?} ignores seed");
        }
    }

    #[test]
    fn all_models_hit_degree_band_at_scale() {
        for model in [NetModel::Ba, NetModel::Er, NetModel::Eh, NetModel::Qs, NetModel::Rh] {
            let g = generate(&spec(model, 1000, 4.0, 42)).unwrap();
            let s = degree_stats(&g);
            assert!(
                (3.0..=5.0).contains(&s.mean_k),
                "{model:?}: mean_k = {}",
                s.mean_k
            );
        }
    }
}
