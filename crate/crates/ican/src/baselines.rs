//! Classical centrality baselines: degree, betweenness (Brandes),
//! eigenvector (power iteration), H-index and K-shell.

use crate::graph::Graph;
use crate::model::Ranking;
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CentralityError {
    #[error("{method} requires {requirement}")]
    Precondition { method: &'static str, requirement: String },
}

#[derive(Debug, Clone)]
pub struct CentralityResult {
    pub method: &'static str,
    pub values: Vec<f64>,
    pub ranking: Ranking,
    /// Only eigenvector centrality can fail to converge.
    pub converged: bool,
}

impl CentralityResult {
    fn new(method: &'static str, values: Vec<f64>) -> Self {
        let ranking = Ranking::from_scores(values.clone());
        CentralityResult { method, values, ranking, converged: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum BaselineMethod {
    Degree,
    Betweenness,
    Eigenvector,
    HIndex,
    KShell,
}

impl BaselineMethod {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dc" | "degree" => Some(Self::Degree),
            "bc" | "betweenness" => Some(Self::Betweenness),
            "ec" | "eigenvector" => Some(Self::Eigenvector),
            "hi" | "h-index" | "hindex" => Some(Self::HIndex),
            "ks" | "k-shell" | "kshell" => Some(Self::KShell),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Degree => "dc",
            Self::Betweenness => "bc",
            Self::Eigenvector => "ec",
            Self::HIndex => "hi",
            Self::KShell => "ks",
        }
    }

    pub fn all() -> [BaselineMethod; 5] {
        [Self::Degree, Self::Betweenness, Self::Eigenvector, Self::HIndex, Self::KShell]
    }

    pub fn compute(&self, g: &Graph) -> Result<CentralityResult, CentralityError> {
        match self {
            Self::Degree => degree_centrality(g),
            Self::Betweenness => Ok(betweenness_centrality(g)),
            Self::Eigenvector => eigenvector_centrality(g),
            Self::HIndex => Ok(h_index(g)),
            Self::KShell => Ok(k_shell(g)),
        }
    }
}

/// DC(u) = d(u) / (n − 1).
pub fn degree_centrality(g: &Graph) -> Result<CentralityResult, CentralityError> {
    let n = g.node_count();
    if n < 2 {
        return Err(CentralityError::Precondition {
            method: "degree_centrality",
            requirement: "n >= 2".into(),
        });
    }
    let values = (0..n).map(|v| g.degree(v) as f64 / (n - 1) as f64).collect();
    Ok(CentralityResult::new("dc", values))
}

/// Brandes' algorithm, unnormalized, with each unordered pair counted once.
pub fn betweenness_centrality(g: &Graph) -> CentralityResult {
    let n = g.node_count();
    let mut bc = vec![0.0f64; n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![-1i64; n];
    let mut delta = vec![0.0f64; n];
    let mut preds: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut order: Vec<u32> = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    for s in 0..n {
        sigma.iter_mut().for_each(|x| *x = 0.0);
        dist.iter_mut().for_each(|x| *x = -1);
        delta.iter_mut().for_each(|x| *x = 0.0);
        preds.iter_mut().for_each(Vec::clear);
        order.clear();
        queue.clear();
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s as u32);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in g.neighbors(v as usize) {
                if dist[w as usize] < 0 {
                    dist[w as usize] = dist[v as usize] + 1;
                    queue.push_back(w);
                }
                if dist[w as usize] == dist[v as usize] + 1 {
                    sigma[w as usize] += sigma[v as usize];
                    preds[w as usize].push(v);
                }
            }
        }
        for &w in order.iter().rev() {
            for &v in &preds[w as usize] {
                delta[v as usize] +=
                    sigma[v as usize] / sigma[w as usize] * (1.0 + delta[w as usize]);
            }
            if w as usize != s {
                bc[w as usize] += delta[w as usize];
            }
        }
    }
    // Each unordered pair was visited from both endpoints.
    bc.iter_mut().for_each(|x| *x *= 0.5);
    CentralityResult::new("bc", bc)
}

/// Power iteration on A + εI, L2-normalized per step, until the sup-norm
/// step difference is ≤ 1e-8 or 1000 iterations. The diagonal shift leaves
/// every eigenvector of A unchanged while separating the Perron eigenvalue
/// from the bipartite mirror (−λ_max); ε = 1 keeps the contraction factor
/// bounded away from 1 on bipartite graphs.
pub fn eigenvector_centrality(g: &Graph) -> Result<CentralityResult, CentralityError> {
    let n = g.node_count();
    if g.edge_count() == 0 {
        return Err(CentralityError::Precondition {
            method: "eigenvector_centrality",
            requirement: "at least one edge".into(),
        });
    }
    const EPS_SHIFT: f64 = 1.0;
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut next = vec![0.0f64; n];
    let mut converged = false;
    for _ in 0..1000 {
        for v in 0..n {
            let mut acc = EPS_SHIFT * x[v];
            for &w in g.neighbors(v) {
                acc += x[w as usize];
            }
            next[v] = acc;
        }
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        next.iter_mut().for_each(|v| *v /= norm);
        let diff = x
            .iter()
            .zip(next.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut x, &mut next);
        if diff <= 1e-8 {
            converged = true;
            break;
        }
    }
    // The start vector is positive and A + εI is nonnegative, so the iterate
    // stays nonnegative.
    let mut result = CentralityResult::new("ec", x);
    result.converged = converged;
    Ok(result)
}

/// Largest x such that the node has at least x neighbors of degree ≥ x.
pub fn h_index(g: &Graph) -> CentralityResult {
    let n = g.node_count();
    let values = (0..n)
        .map(|v| {
            let mut degs: Vec<usize> = g.neighbors(v).iter().map(|&w| g.degree(w as usize)).collect();
            degs.sort_unstable_by(|a, b| b.cmp(a));
            let mut h = 0;
            for (i, &d) in degs.iter().enumerate() {
                if d >= i + 1 {
                    h = i + 1;
                } else {
                    break;
                }
            }
            h as f64
        })
        .collect();
    CentralityResult::new("hi", values)
}

/// Iterative pruning: all nodes of degree ≤ k are removed (cascading) before
/// k increments; removed nodes get shell k.
pub fn k_shell(g: &Graph) -> CentralityResult {
    let n = g.node_count();
    let mut degree: Vec<i64> = (0..n).map(|v| g.degree(v) as i64).collect();
    let mut shell = vec![0usize; n];
    let mut removed = vec![false; n];
    let mut remaining = n;
    let mut k = 0usize;
    let mut stack: Vec<u32> = Vec::new();
    while remaining > 0 {
        stack.clear();
        for v in 0..n {
            if !removed[v] && degree[v] <= k as i64 {
                stack.push(v as u32);
            }
        }
        while let Some(v) = stack.pop() {
            if removed[v as usize] {
                continue;
            }
            removed[v as usize] = true;
            shell[v as usize] = k;
            remaining -= 1;
            for &w in g.neighbors(v as usize) {
                if !removed[w as usize] {
                    degree[w as usize] -= 1;
                    if degree[w as usize] <= k as i64 {
                        stack.push(w);
                    }
                }
            }
        }
        k += 1;
    }
    CentralityResult::new("ks", shell.into_iter().map(|s| s as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn star4() -> Graph {
        Graph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap()
    }

    fn path3() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap()
    }

    fn k(n: usize) -> Graph {
        let mut edges = Vec::new();
        for i in 0..n as u32 {
            for j in (i + 1)..n as u32 {
                edges.push((i, j));
            }
        }
        Graph::from_edges(n, &edges).unwrap()
    }

    fn random_connected(rng: &mut ChaCha12Rng, n: usize, extra_p: f64) -> Graph {
        // Random spanning tree plus extra random edges.
        let mut edges: Vec<(u32, u32)> = Vec::new();
        for v in 1..n as u32 {
            let parent = rng.gen_range(0..v);
            edges.push((parent, v));
        }
        for i in 0..n as u32 {
            for j in (i + 1)..n as u32 {
                if rng.gen_bool(extra_p) {
                    edges.push((i, j));
                }
            }
        }
        Graph::from_edges(n, &edges).unwrap()
    }

    /// Exhaustive shortest-path enumeration: counts, for every unordered pair
    /// (s, t), the fraction of shortest s–t paths through each interior node.
    fn brute_force_betweenness(g: &Graph) -> Vec<f64> {
        let n = g.node_count();
        let mut bc = vec![0.0f64; n];
        for s in 0..n {
            for t in (s + 1)..n {
                // BFS distances from s.
                let mut dist = vec![usize::MAX; n];
                dist[s] = 0;
                let mut q = std::collections::VecDeque::from([s]);
                while let Some(v) = q.pop_front() {
                    for &w in g.neighbors(v) {
                        if dist[w as usize] == usize::MAX {
                            dist[w as usize] = dist[v] + 1;
                            q.push_back(w as usize);
                        }
                    }
                }
                if dist[t] == usize::MAX {
                    continue;
                }
                // Enumerate all shortest paths by DFS along decreasing depth
                // from t back to s.
                let mut paths: Vec<Vec<usize>> = Vec::new();
                let mut current = vec![t];
                fn go(
                    v: usize,
                    s: usize,
                    g: &Graph,
                    dist: &[usize],
                    current: &mut Vec<usize>,
                    paths: &mut Vec<Vec<usize>>,
                ) {
                    if v == s {
                        paths.push(current.clone());
                        return;
                    }
                    for &w in g.neighbors(v) {
                        if dist[w as usize] + 1 == dist[v] {
                            current.push(w as usize);
                            go(w as usize, s, g, dist, current, paths);
                            current.pop();
                        }
                    }
                }
                go(t, s, g, &dist, &mut current, &mut paths);
                let total = paths.len() as f64;
                for p in &paths {
                    for &v in &p[1..p.len() - 1] {
                        bc[v] += 1.0 / total;
                    }
                }
            }
        }
        bc
    }

    #[test]
    fn dc_examples() {
        let r = degree_centrality(&k(3)).unwrap();
        assert!(r.values.iter().all(|&v| v == 1.0));
        let r = degree_centrality(&star4()).unwrap();
        assert_eq!(r.values[0], 1.0);
        assert_eq!(r.values[1], 0.25);
        let r = degree_centrality(&path3()).unwrap();
        assert_eq!(r.values[1], 1.0);
        assert!(degree_centrality(&Graph::from_edges(1, &[]).unwrap()).is_err());
    }

    #[test]
    fn dc_ranking_matches_raw_degree_ranking() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let g = random_connected(&mut rng, 30, 0.1);
        let r = degree_centrality(&g).unwrap();
        let raw = Ranking::from_scores((0..30).map(|v| g.degree(v) as f64).collect());
        assert_eq!(r.ranking.ranks, raw.ranks);
    }

    #[test]
    fn bc_examples() {
        let r = betweenness_centrality(&path3());
        assert_eq!(r.values, vec![0.0, 1.0, 0.0]);
        let r = betweenness_centrality(&star4());
        assert_eq!(r.values[0], 6.0);
        assert!(r.values[1..].iter().all(|&v| v == 0.0));
        let r = betweenness_centrality(&k(5));
        assert!(r.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bc_matches_brute_force_on_random_graphs() {
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        for case in 0..200 {
            let n = rng.gen_range(2..=8);
            let g = random_connected(&mut rng, n, 0.3);
            let fast = betweenness_centrality(&g).values;
            let brute = brute_force_betweenness(&g);
            for v in 0..n {
                assert!(
                    (fast[v] - brute[v]).abs() <= 1e-9,
                    "case {case}, node {v}: brandes {} vs brute {}",
                    fast[v],
                    brute[v]
                );
            }
        }
    }

    #[test]
    fn ec_cycle_uniform_and_star_ratio() {
        let c5 = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]).unwrap();
        let r = eigenvector_centrality(&c5).unwrap();
        assert!(r.converged);
        for v in &r.values {
            assert!((v - r.values[0]).abs() < 1e-7);
        }
        // Star S4: principal eigenpair has center/leaf ratio sqrt(4) = 2.
        let r = eigenvector_centrality(&star4()).unwrap();
        let ratio = r.values[0] / r.values[1];
        assert!((ratio - 2.0).abs() < 1e-5, "ratio = {ratio}");
    }

    #[test]
    fn ec_residual_self_consistency() {
        let mut rng = ChaCha12Rng::seed_from_u64(15);
        for _ in 0..20 {
            let n = rng.gen_range(4..40);
            let g = random_connected(&mut rng, n, 0.15);
            let r = eigenvector_centrality(&g).unwrap();
            let x = &r.values;
            // Rayleigh quotient on A (the ε shift does not move eigenvectors).
            let ax: Vec<f64> = (0..n)
                .map(|v| g.neighbors(v).iter().map(|&w| x[w as usize]).sum())
                .collect();
            let lambda: f64 = x.iter().zip(&ax).map(|(a, b)| a * b).sum::<f64>()
                / x.iter().map(|a| a * a).sum::<f64>();
            let residual = x
                .iter()
                .zip(&ax)
                .map(|(xi, axi)| (axi - lambda * xi).abs())
                .fold(0.0, f64::max);
            assert!(residual <= 1e-6, "residual = {residual}");
        }
    }

    #[test]
    fn ec_requires_an_edge() {
        assert!(eigenvector_centrality(&Graph::from_edges(3, &[]).unwrap()).is_err());
    }

    #[test]
    fn h_index_examples() {
        let g = Graph::from_edges(3, &[(0, 1)]).unwrap();
        let r = h_index(&g);
        assert_eq!(r.values[2], 0.0, "isolated node");
        let r = h_index(&star4());
        assert_eq!(r.values[0], 1.0, "star center with degree-1 leaves");
        let r = h_index(&k(4));
        assert!(r.values.iter().all(|&v| v == 3.0));
    }

    #[test]
    fn h_index_matches_brute_force() {
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        for _ in 0..100 {
            let n = rng.gen_range(2..=50);
            let g = random_connected(&mut rng, n, 0.08);
            let fast = h_index(&g).values;
            for v in 0..n {
                let mut best = 0usize;
                for x in 0..=n {
                    let count = g
                        .neighbors(v)
                        .iter()
                        .filter(|&&w| g.degree(w as usize) >= x)
                        .count();
                    if count >= x {
                        best = x;
                    }
                }
                assert_eq!(fast[v] as usize, best, "node {v}");
            }
        }
    }

    #[test]
    fn k_shell_examples() {
        // Any tree cascades entirely at k = 1.
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let tree = random_connected(&mut rng, 20, 0.0);
        let r = k_shell(&tree);
        assert!(r.values.iter().all(|&v| v == 1.0), "{:?}", r.values);
        let r = k_shell(&k(3));
        assert!(r.values.iter().all(|&v| v == 2.0));
    }

    #[test]
    fn k_shell_matches_brute_force_core_membership() {
        // Independent route: coreness(v) = max k such that v survives in the
        // k-core (repeatedly deleting degree < k from scratch).
        let mut rng = ChaCha12Rng::seed_from_u64(37);
        for _ in 0..100 {
            let n = rng.gen_range(2..=50);
            let g = random_connected(&mut rng, n, 0.1);
            let fast = k_shell(&g).values;
            let max_k = (0..n).map(|v| g.degree(v)).max().unwrap();
            let mut core = vec![0usize; n];
            for kk in 0..=max_k {
                let mut alive = vec![true; n];
                loop {
                    let mut changed = false;
                    for v in 0..n {
                        if alive[v] {
                            let d = g
                                .neighbors(v)
                                .iter()
                                .filter(|&&w| alive[w as usize])
                                .count();
                            if d < kk {
                                alive[v] = false;
                                changed = true;
                            }
                        }
                    }
                    if !changed {
                        break;
                    }
                }
                for v in 0..n {
                    if alive[v] {
                        core[v] = kk;
                    }
                }
            }
            for v in 0..n {
                assert_eq!(fast[v] as usize, core[v], "node {v}");
            }
        }
    }

    #[test]
    fn k_shell_relabeling_equivariance() {
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        let g = random_connected(&mut rng, 25, 0.12);
        let n = g.node_count();
        let mut perm: Vec<u32> = (0..n as u32).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let relabeled: Vec<(u32, u32)> = g
            .edges()
            .iter()
            .map(|&(a, b)| (perm[a as usize], perm[b as usize]))
            .collect();
        let g2 = Graph::from_edges(n, &relabeled).unwrap();
        let r1 = k_shell(&g).values;
        let r2 = k_shell(&g2).values;
        for v in 0..n {
            assert_eq!(r1[v], r2[perm[v] as usize]);
        }
    }
}
