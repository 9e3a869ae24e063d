//! Evaluation: Kendall's τ, the train-on-synthetic / test-on-real benchmark
//! harness, ablation comparisons, and top-k degree-distribution export.

use crate::baselines::BaselineMethod;
use crate::embed::{self, WalkConfig};
use crate::graph::Graph;
use crate::model::{self, IcanConfig, Variant};
use crate::netgen::GenSpec;
use crate::seeds;
use crate::sir::{self, SirConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: x has {x}, y has {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("kendall tau needs at least 2 items, got {0}")]
    TooShort(usize),
    #[error("benchmark produced no results")]
    NoResults,
}

/// Kendall rank correlation with exact pair accounting. `tau` is the tau-a
/// statistic 2(N_c − N_d)/(n(n−1)) with tied pairs counted as neither;
/// `tau_b` is carried as a secondary diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauResult {
    pub tau: f64,
    pub tau_b: f64,
    pub n: usize,
    pub concordant: u64,
    pub discordant: u64,
    pub ties_x: u64,
    pub ties_y: u64,
}

/// O(n log n) Kendall's τ: sort by (x, y), count strict inversions of y by
/// merge sort, and correct for tie groups.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<TauResult, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::LengthMismatch { x: x.len(), y: y.len() });
    }
    let n = x.len();
    if n < 2 {
        return Err(EvalError::TooShort(n));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        x[a].partial_cmp(&x[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(y[a].partial_cmp(&y[b]).unwrap_or(std::cmp::Ordering::Equal))
    });

    let pair_count = |group: u64| group * group.saturating_sub(1) / 2;
    // Tie groups in x, and joint (x, y) ties, over the sorted order.
    let mut ties_x = 0u64;
    let mut ties_xy = 0u64;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && x[idx[j]] == x[idx[i]] {
            j += 1;
        }
        ties_x += pair_count((j - i) as u64);
        let mut k = i;
        while k < j {
            let mut l = k;
            while l < j && y[idx[l]] == y[idx[k]] {
                l += 1;
            }
            ties_xy += pair_count((l - k) as u64);
            k = l;
        }
        i = j;
    }
    // Tie groups in y alone.
    let mut ys: Vec<f64> = y.to_vec();
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut ties_y = 0u64;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && ys[j] == ys[i] {
            j += 1;
        }
        ties_y += pair_count((j - i) as u64);
        i = j;
    }

    let mut seq: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = vec![0.0f64; n];
    let discordant = count_strict_inversions(&mut seq, &mut buf);

    let total = pair_count(n as u64);
    let neither = ties_x + ties_y - ties_xy;
    let concordant = total - discordant - neither;
    let nc = concordant as f64;
    let nd = discordant as f64;
    let tau = 2.0 * (nc - nd) / (n as f64 * (n as f64 - 1.0));
    let denom = (((total - ties_x) as f64) * ((total - ties_y) as f64)).sqrt();
    let tau_b = if denom > 0.0 { (nc - nd) / denom } else { 0.0 };
    Ok(TauResult { tau, tau_b, n, concordant, discordant, ties_x, ties_y })
}

/// Counts pairs (i < j) with a[i] > a[j] strictly; equal elements are stable
/// and contribute nothing.
fn count_strict_inversions(a: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = a.len();
    if n <= 1 {
        return 0;
    }
    let mid = n / 2;
    let (left, right) = a.split_at_mut(mid);
    let mut inv = count_strict_inversions(left, &mut buf[..mid])
        + count_strict_inversions(right, &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, 0, 0);
    while i < left.len() && j < right.len() {
        if left[i] <= right[j] {
            buf[k] = left[i];
            i += 1;
        } else {
            inv += (left.len() - i) as u64;
            buf[k] = right[j];
            j += 1;
        }
        k += 1;
    }
    while i < left.len() {
        buf[k] = left[i];
        i += 1;
        k += 1;
    }
    while j < right.len() {
        buf[k] = right[j];
        j += 1;
        k += 1;
    }
    a.copy_from_slice(&buf[..n]);
    inv
}

/// O(n²) Kendall's τ straight from the definition; the oracle for the fast
/// path.
pub fn kendall_tau_brute_force(x: &[f64], y: &[f64]) -> TauResult {
    let n = x.len();
    let (mut nc, mut nd, mut tx, mut ty) = (0u64, 0u64, 0u64, 0u64);
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 {
                tx += 1;
            }
            if dy == 0.0 {
                ty += 1;
            }
            let s = dx * dy;
            if s > 0.0 {
                nc += 1;
            } else if s < 0.0 {
                nd += 1;
            }
        }
    }
    let total = n as u64 * (n as u64 - 1) / 2;
    let tau = 2.0 * (nc as f64 - nd as f64) / (n as f64 * (n as f64 - 1.0));
    let denom = (((total - tx) as f64) * ((total - ty) as f64)).sqrt();
    let tau_b = if denom > 0.0 { (nc as f64 - nd as f64) / denom } else { 0.0 };
    TauResult { tau, tau_b, n, concordant: nc, discordant: nd, ties_x: tx, ties_y: ty }
}

/// λ presets by target network family; everything else uses (1, 1, 1).
pub fn lambda_preset(target_name: &str) -> (f64, f64, f64) {
    let s = target_name.to_ascii_lowercase();
    let stem = s.trim_end_matches(".edges").trim_end_matches(".txt");
    if stem.contains("karate") {
        (0.5, 1.0, 1.5)
    } else if stem.contains("jazz") {
        (1.0, 0.1, 0.5)
    } else if stem.contains("email-univ") || stem.contains("email_univ") {
        (0.5, 1.0, 1.0)
    } else {
        (1.0, 1.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Ican(Variant),
    Baseline(BaselineMethod),
}

impl Method {
    pub fn parse(s: &str) -> Option<Self> {
        if let Some(v) = Variant::parse(s) {
            return Some(Method::Ican(v));
        }
        BaselineMethod::parse(s).map(Method::Baseline)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Ican(v) => v.name(),
            Method::Baseline(b) => b.name(),
        }
    }
}

pub struct TargetSpec {
    pub name: String,
    pub graph: Graph,
}

pub struct BenchmarkSpec {
    pub train_spec: GenSpec,
    pub targets: Vec<TargetSpec>,
    pub methods: Vec<Method>,
    pub seeds: usize,
    pub master_seed: u64,
    pub walk: WalkConfig,
    pub sir: SirConfig,
    pub ican: IcanConfig,
    /// Apply per-target λ presets (models are trained once per λ group).
    pub use_lambda_presets: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TauCell {
    pub method: String,
    pub target: String,
    pub seed_index: usize,
    pub tau: f64,
    pub tau_b: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeanRow {
    pub method: String,
    pub target: String,
    pub mean_tau: f64,
    pub seed_count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub train_model: String,
    pub train_nodes: usize,
    pub target_names: Vec<String>,
    pub methods: Vec<String>,
    pub seeds: usize,
    pub master_seed: u64,
    pub config_hash: String,
    pub cells: Vec<TauCell>,
    pub means: Vec<MeanRow>,
    pub failures: Vec<String>,
}

impl ExperimentReport {
    /// Flat CSV: method, train_model, target, seed, tau.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# config_hash={}\n", self.config_hash));
        out.push_str("method,train_model,target,seed,tau\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{:.6}\n",
                c.method, self.train_model, c.target, c.seed_index, c.tau
            ));
        }
        out
    }

    pub fn mean_for(&self, method: &str, target: &str) -> Option<f64> {
        self.means
            .iter()
            .find(|m| m.method == method && m.target == target)
            .map(|m| m.mean_tau)
    }

    pub fn taus_for(&self, method: &str, target: &str) -> Vec<f64> {
        self.cells
            .iter()
            .filter(|c| c.method == method && c.target == target)
            .map(|c| c.tau)
            .collect()
    }
}

/// Stable hash of the benchmark inputs, stamped into every report.
fn config_hash(spec: &BenchmarkSpec) -> String {
    #[derive(Serialize)]
    struct HashView<'a> {
        train_spec: &'a GenSpec,
        targets: Vec<&'a str>,
        methods: Vec<&'a str>,
        seeds: usize,
        master_seed: u64,
        walk: &'a WalkConfig,
        sir: &'a SirConfig,
        ican: &'a IcanConfig,
        use_lambda_presets: bool,
    }
    let view = HashView {
        train_spec: &spec.train_spec,
        targets: spec.targets.iter().map(|t| t.name.as_str()).collect(),
        methods: spec.methods.iter().map(|m| m.name()).collect(),
        seeds: spec.seeds,
        master_seed: spec.master_seed,
        walk: &spec.walk,
        sir: &spec.sir,
        ican: &spec.ican,
        use_lambda_presets: spec.use_lambda_presets,
    };
    let json = serde_json::to_string(&view).expect("hash view serializes");
    let mut hasher = Sha256::new();
    hasher.update(json.as_bytes());
    hex_string(&hasher.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Everything fixed per target across model seeds: SIR ground truth, the
/// walk embedding, and the classical baseline rankings.
struct TargetContext {
    name: String,
    truth: Vec<f64>,
    features: embed::FeatureMatrix,
    lambda: (f64, f64, f64),
}

/// Runs the full protocol: per seed, generate/label/embed a training network
/// and train every requested model variant; rank every target with every
/// method; score with Kendall's τ against the target's SIR ground truth.
/// Per-target failures are recorded and the run continues.
pub fn run_benchmark(spec: &BenchmarkSpec) -> Result<ExperimentReport, EvalError> {
    let start = std::time::Instant::now();
    let hash = config_hash(spec);
    let mut failures: Vec<String> = Vec::new();

    // Target-side preparation (ground truth fixed per target).
    let mut contexts: Vec<TargetContext> = Vec::new();
    for t in &spec.targets {
        let label_seed = seeds::derive(spec.master_seed, &format!("target-labels:{}", t.name), 0);
        let truth = match sir::influence_scores(
            &t.graph,
            &SirConfig { seed: label_seed, ..spec.sir.clone() },
        ) {
            Ok(s) => s.y,
            Err(e) => {
                failures.push(format!("target {}: {e}", t.name));
                continue;
            }
        };
        let embed_seed = seeds::derive(spec.master_seed, &format!("target-embed:{}", t.name), 0);
        let features = embed::embed_graph(
            &t.graph,
            &WalkConfig { seed: embed_seed, ..spec.walk.clone() },
            spec.ican.feature_dim,
        );
        let lambda = if spec.use_lambda_presets {
            lambda_preset(&t.name)
        } else {
            (spec.ican.lambda1, spec.ican.lambda2, spec.ican.lambda3)
        };
        contexts.push(TargetContext { name: t.name.clone(), truth, features, lambda });
    }

    let mut cells: Vec<TauCell> = Vec::new();

    // Classical baselines are seed-invariant; evaluate once and replicate the
    // row per seed so every method carries the same seed column.
    for method in &spec.methods {
        if let Method::Baseline(b) = method {
            for ctx in &contexts {
                let g = &spec.targets.iter().find(|t| t.name == ctx.name).unwrap().graph;
                match b.compute(g) {
                    Ok(result) => {
                        match kendall_tau(&result.values, &ctx.truth) {
                            Ok(t) => {
                                for seed_index in 0..spec.seeds {
                                    cells.push(TauCell {
                                        method: b.name().into(),
                                        target: ctx.name.clone(),
                                        seed_index,
                                        tau: t.tau,
                                        tau_b: t.tau_b,
                                    });
                                }
                            }
                            Err(e) => failures.push(format!("{} on {}: {e}", b.name(), ctx.name)),
                        }
                    }
                    Err(e) => failures.push(format!("{} on {}: {e}", b.name(), ctx.name)),
                }
            }
        }
    }

    // Distinct λ triples to train per seed.
    let variants: Vec<Variant> = spec
        .methods
        .iter()
        .filter_map(|m| match m {
            Method::Ican(v) => Some(*v),
            _ => None,
        })
        .collect();
    let mut lambda_groups: Vec<(f64, f64, f64)> = contexts.iter().map(|c| c.lambda).collect();
    lambda_groups.sort_by(|a, b| a.partial_cmp(b).unwrap());
    lambda_groups.dedup();

    type SeedCells = Vec<TauCell>;
    let seed_results: Vec<Result<SeedCells, String>> = {
        use rayon::prelude::*;
        (0..spec.seeds)
            .into_par_iter()
            .map(|seed_index| run_seed(spec, seed_index, &variants, &lambda_groups, &contexts))
            .collect()
    };
    for r in seed_results {
        match r {
            Ok(mut c) => cells.append(&mut c),
            Err(e) => failures.push(e),
        }
    }

    if cells.is_empty() {
        return Err(EvalError::NoResults);
    }

    // Fixed aggregation order: method (spec order), target, seed.
    let method_names: Vec<String> = spec.methods.iter().map(|m| m.name().to_string()).collect();
    let target_names: Vec<String> = contexts.iter().map(|c| c.name.clone()).collect();
    cells.sort_by_key(|c| {
        (
            method_names.iter().position(|m| *m == c.method).unwrap_or(usize::MAX),
            target_names.iter().position(|t| *t == c.target).unwrap_or(usize::MAX),
            c.seed_index,
        )
    });
    let mut means = Vec::new();
    for m in &method_names {
        for t in &target_names {
            let taus: Vec<f64> = cells
                .iter()
                .filter(|c| &c.method == m && &c.target == t)
                .map(|c| c.tau)
                .collect();
            if !taus.is_empty() {
                means.push(MeanRow {
                    method: m.clone(),
                    target: t.clone(),
                    mean_tau: taus.iter().sum::<f64>() / taus.len() as f64,
                    seed_count: taus.len(),
                });
            }
        }
    }

    let report = ExperimentReport {
        train_model: spec.train_spec.model.name().to_string(),
        train_nodes: spec.train_spec.n,
        target_names,
        methods: method_names,
        seeds: spec.seeds,
        master_seed: spec.master_seed,
        config_hash: hash,
        cells,
        means,
        failures,
    };
    log::info!(
        "benchmark finished in {:.1}s: {} cells, {} failures",
        start.elapsed().as_secs_f64(),
        report.cells.len(),
        report.failures.len()
    );
    Ok(report)
}

fn run_seed(
    spec: &BenchmarkSpec,
    seed_index: usize,
    variants: &[Variant],
    lambda_groups: &[(f64, f64, f64)],
    contexts: &[TargetContext],
) -> Result<Vec<TauCell>, String> {
    let idx = seed_index as u64;
    let gen_spec = GenSpec {
        seed: seeds::derive(spec.master_seed, "train-graph", idx),
        ..spec.train_spec.clone()
    };
    let g = crate::netgen::generate(&gen_spec).map_err(|e| format!("seed {seed_index}: {e}"))?;
    let labels = sir::influence_scores(
        &g,
        &SirConfig {
            seed: seeds::derive(spec.master_seed, "train-labels", idx),
            ..spec.sir.clone()
        },
    )
    .map_err(|e| format!("seed {seed_index}: {e}"))?;
    let features = embed::embed_graph(
        &g,
        &WalkConfig {
            seed: seeds::derive(spec.master_seed, "train-embed", idx),
            ..spec.walk.clone()
        },
        spec.ican.feature_dim,
    );

    let mut cells = Vec::new();
    for &lambda in lambda_groups {
        for &variant in variants {
            let cfg = IcanConfig {
                lambda1: lambda.0,
                lambda2: lambda.1,
                lambda3: lambda.2,
                seed: seeds::derive(spec.master_seed, &format!("model:{}", variant.name()), idx),
                ..spec.ican.clone()
            }
            .with_variant(variant);
            let (model, _report) = model::train(&g, &features, &labels, &cfg)
                .map_err(|e| format!("seed {seed_index} {}: {e}", variant.name()))?;
            for ctx in contexts.iter().filter(|c| c.lambda == lambda) {
                let target_graph =
                    &spec.targets.iter().find(|t| t.name == ctx.name).unwrap().graph;
                match model.rank_nodes(target_graph, &ctx.features) {
                    Ok(ranking) => match kendall_tau(&ranking.scores, &ctx.truth) {
                        Ok(t) => cells.push(TauCell {
                            method: variant.name().into(),
                            target: ctx.name.clone(),
                            seed_index,
                            tau: t.tau,
                            tau_b: t.tau_b,
                        }),
                        Err(e) => {
                            return Err(format!("seed {seed_index} {} on {}: {e}", variant.name(), ctx.name))
                        }
                    },
                    Err(e) => {
                        return Err(format!("seed {seed_index} {} on {}: {e}", variant.name(), ctx.name))
                    }
                }
            }
        }
    }
    Ok(cells)
}

/// Degree histogram of the whole network plus a (node, degree, score)
/// scatter of the top fraction of the ranking.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopkData {
    /// (degree, relative frequency) over all nodes, ascending degree.
    pub histogram: Vec<(usize, f64)>,
    /// (node, degree, score) for the top-k ranked nodes, best first.
    pub scatter: Vec<(usize, usize, f64)>,
}

pub fn topk_degree_hist(g: &Graph, ranking: &crate::model::Ranking, fraction: f64) -> TopkData {
    assert!(fraction > 0.0 && fraction <= 1.0, "fraction must lie in (0, 1]");
    let n = g.node_count();
    let mut counts: std::collections::BTreeMap<usize, usize> = std::collections::BTreeMap::new();
    for v in 0..n {
        *counts.entry(g.degree(v)).or_insert(0) += 1;
    }
    let histogram = counts
        .into_iter()
        .map(|(d, c)| (d, c as f64 / n as f64))
        .collect();
    let k = ((fraction * n as f64).floor() as usize).max(1).min(n);
    let scatter = ranking
        .order()
        .into_iter()
        .take(k)
        .map(|v| (v, g.degree(v), ranking.scores[v]))
        .collect();
    TopkData { histogram, scatter }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Ranking;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn tau_identical_and_reversed() {
        let x = vec![1.0, 2.0, 3.0, 4.0];
        let t = kendall_tau(&x, &x).unwrap();
        assert_eq!(t.tau, 1.0);
        let rev: Vec<f64> = x.iter().rev().cloned().collect();
        let t = kendall_tau(&x, &rev).unwrap();
        assert_eq!(t.tau, -1.0);
    }

    #[test]
    fn tau_small_example() {
        let t = kendall_tau(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
        assert_eq!(t.concordant, 2);
        assert_eq!(t.discordant, 1);
        assert!((t.tau - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn tau_errors() {
        assert!(kendall_tau(&[1.0], &[1.0]).is_err());
        assert!(kendall_tau(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn tau_matches_brute_force_with_ties() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for case in 0..500 {
            let n = rng.gen_range(2..=200);
            // Coarse quantization forces plenty of ties.
            let levels = rng.gen_range(2..20);
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0..levels) as f64).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0..levels) as f64).collect();
            let fast = kendall_tau(&x, &y).unwrap();
            let brute = kendall_tau_brute_force(&x, &y);
            assert_eq!(fast.concordant, brute.concordant, "case {case}");
            assert_eq!(fast.discordant, brute.discordant, "case {case}");
            assert_eq!(fast.ties_x, brute.ties_x, "case {case}");
            assert_eq!(fast.ties_y, brute.ties_y, "case {case}");
            assert_eq!(fast.tau, brute.tau, "case {case}");
        }
    }

    #[test]
    fn tau_invariant_under_monotone_transforms() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        for _ in 0..50 {
            let n = rng.gen_range(5..100);
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let base = kendall_tau(&x, &y).unwrap().tau;
            let x2: Vec<f64> = x.iter().map(|v| v.exp()).collect();
            let y2: Vec<f64> = y.iter().map(|v| 3.0 * v + 11.0).collect();
            let t = kendall_tau(&x2, &y2).unwrap().tau;
            assert_eq!(base, t);
        }
    }

    #[test]
    fn lambda_presets() {
        assert_eq!(lambda_preset("karate.edges"), (0.5, 1.0, 1.5));
        assert_eq!(lambda_preset("jazz"), (1.0, 0.1, 0.5));
        assert_eq!(lambda_preset("email-univ.edges"), (0.5, 1.0, 1.0));
        assert_eq!(lambda_preset("email-dnc"), (1.0, 1.0, 1.0));
        assert_eq!(lambda_preset("usair"), (1.0, 1.0, 1.0));
    }

    #[test]
    fn topk_scatter_rules() {
        let g = crate::graph::Graph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let dc = crate::baselines::degree_centrality(&g).unwrap();
        // Fraction covering one node selects the star center.
        let top = topk_degree_hist(&g, &dc.ranking, 0.2);
        assert_eq!(top.scatter.len(), 1);
        assert_eq!(top.scatter[0].0, 0);
        // Fraction 1.0 covers every node.
        let all = topk_degree_hist(&g, &dc.ranking, 1.0);
        assert_eq!(all.scatter.len(), 5);
        // Histogram is over all nodes and sums to 1.
        let total: f64 = all.histogram.iter().map(|&(_, f)| f).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn topk_degree_scatter_matches_dc_argmax() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let g = crate::netgen::gen_ba(&crate::netgen::GenSpec::new(
            crate::netgen::NetModel::Ba,
            60,
            4.0,
            12,
        ))
        .unwrap();
        let _ = &mut rng;
        let dc = crate::baselines::degree_centrality(&g).unwrap();
        let top = topk_degree_hist(&g, &dc.ranking, 0.1);
        let k = top.scatter.len();
        let mut degrees: Vec<usize> = (0..60).map(|v| g.degree(v)).collect();
        degrees.sort_unstable_by(|a, b| b.cmp(a));
        let picked: Vec<usize> = top.scatter.iter().map(|&(_, d, _)| d).collect();
        // The top-k scatter degrees are the k largest degrees.
        assert_eq!(picked, degrees[..k].to_vec());
    }

    #[test]
    fn ranking_order_consistency() {
        let r = Ranking::from_scores(vec![0.1, 0.9, 0.5]);
        assert_eq!(r.order(), vec![1, 2, 0]);
    }
}
