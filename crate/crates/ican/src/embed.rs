//! Node feature matrices from adjacency alone: biased second-order random
//! walks plus skip-gram with negative sampling, or an externally supplied
//! attribute matrix.
//!
//! Walk generation draws an independent RNG stream per (round, start node),
//! so it can run in parallel without changing results. Skip-gram training is
//! single-threaded and bitwise deterministic given its seed; callers that
//! need concurrency embed several graphs in parallel instead.

use crate::graph::Graph;
use crate::seeds;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("feature parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("ragged feature rows: line {line} has {got} fields, expected {expected}")]
    Ragged { line: usize, got: usize, expected: usize },
    #[error("feature dimension mismatch: file has {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("empty feature file")]
    Empty,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct WalkConfig {
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub window: usize,
    /// Return bias p of the second-order walk.
    pub return_bias: f64,
    /// In-out bias q of the second-order walk.
    pub inout_bias: f64,
    pub negatives_per_positive: usize,
    pub epochs: usize,
    /// Initial learning rate, decayed linearly to 1e-4 of itself.
    pub learning_rate: f64,
    /// Z-score standardize columns of the trained matrix.
    pub standardize: bool,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            walks_per_node: 10,
            walk_length: 80,
            window: 10,
            return_bias: 1.0,
            inout_bias: 1.0,
            negatives_per_positive: 5,
            epochs: 5,
            learning_rate: 0.025,
            standardize: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub enum Provenance {
    WalkEmbedding { seed: u64 },
    External { path: String },
}

/// n×d real node-feature matrix.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    pub data: Array2<f64>,
    pub provenance: Provenance,
}

impl FeatureMatrix {
    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }
}

/// Biased random walks: `walks_per_node` starts per node, each of length
/// `walk_length` (length 1 only at isolated nodes). Transition weights from
/// the second-order model: 1/p back to the previous node, 1 to common
/// neighbors of the previous node, 1/q otherwise.
pub fn generate_walks(g: &Graph, cfg: &WalkConfig) -> Vec<Vec<u32>> {
    let n = g.node_count();
    let tasks: Vec<(usize, usize)> = (0..cfg.walks_per_node)
        .flat_map(|round| (0..n).map(move |v| (round, v)))
        .collect();
    tasks
        .into_par_iter()
        .map(|(round, start)| {
            let task_id = (round * n + start) as u64;
            let mut rng =
                ChaCha12Rng::seed_from_u64(seeds::derive(cfg.seed, "walk", task_id));
            single_walk(g, start, cfg, &mut rng)
        })
        .collect()
}

fn single_walk(g: &Graph, start: usize, cfg: &WalkConfig, rng: &mut ChaCha12Rng) -> Vec<u32> {
    let mut walk = Vec::with_capacity(cfg.walk_length);
    walk.push(start as u32);
    if g.degree(start) == 0 || cfg.walk_length <= 1 {
        return walk;
    }
    let first = g.neighbors(start)[rng.gen_range(0..g.degree(start))];
    walk.push(first);
    let mut weights: Vec<f64> = Vec::new();
    while walk.len() < cfg.walk_length {
        let cur = walk[walk.len() - 1] as usize;
        let prev = walk[walk.len() - 2] as usize;
        let neigh = g.neighbors(cur);
        weights.clear();
        let mut total = 0.0;
        for &x in neigh {
            let w = if x as usize == prev {
                1.0 / cfg.return_bias
            } else if g.has_edge(x as usize, prev) {
                1.0
            } else {
                1.0 / cfg.inout_bias
            };
            weights.push(w);
            total += w;
        }
        let mut u = rng.gen_range(0.0..total);
        let mut chosen = neigh[neigh.len() - 1];
        for (i, &w) in weights.iter().enumerate() {
            if u < w {
                chosen = neigh[i];
                break;
            }
            u -= w;
        }
        walk.push(chosen);
    }
    walk
}

/// Cumulative table for degree^0.75 negative sampling.
struct NegativeTable {
    cumulative: Vec<f64>,
}

impl NegativeTable {
    fn new(degrees: &[usize]) -> Self {
        let mut cumulative = Vec::with_capacity(degrees.len());
        let mut acc = 0.0;
        for &d in degrees {
            acc += (d as f64).powf(0.75).max(1e-12);
            cumulative.push(acc);
        }
        NegativeTable { cumulative }
    }

    fn sample(&self, rng: &mut ChaCha12Rng) -> usize {
        let total = *self.cumulative.last().unwrap();
        let u = rng.gen_range(0.0..total);
        self.cumulative.partition_point(|&c| c <= u)
    }
}

/// Skip-gram with negative sampling over the walk corpus. Deterministic given
/// the config seed (unless `parallel`); the negative-sample distribution is
/// proportional to degree^0.75.
pub fn train_skipgram(
    corpus: &[Vec<u32>],
    degrees: &[usize],
    cfg: &WalkConfig,
    dim: usize,
) -> FeatureMatrix {
    assert!(!corpus.is_empty(), "train_skipgram: empty corpus");
    let n = degrees.len();
    let mut rng = ChaCha12Rng::seed_from_u64(seeds::derive(cfg.seed, "sgns", 0));
    let bound = 0.5 / dim as f32;
    let mut input: Vec<f32> = (0..n * dim).map(|_| rng.gen_range(-bound..bound)).collect();
    let mut output: Vec<f32> = vec![0.0; n * dim];
    let table = NegativeTable::new(degrees);
    let total_positions: u64 =
        cfg.epochs as u64 * corpus.iter().map(|w| w.len() as u64).sum::<u64>();

    let mut processed = 0u64;
    for _epoch in 0..cfg.epochs {
        for walk in corpus {
            train_walk(
                walk,
                cfg,
                dim,
                &table,
                &mut input,
                &mut output,
                &mut rng,
                &mut processed,
                total_positions,
            );
        }
    }

    let mut data = Array2::zeros((n, dim));
    for v in 0..n {
        for j in 0..dim {
            data[(v, j)] = input[v * dim + j] as f64;
        }
    }
    if cfg.standardize {
        standardize_columns(&mut data);
    }
    FeatureMatrix {
        data,
        provenance: Provenance::WalkEmbedding { seed: cfg.seed },
    }
}

#[allow(clippy::too_many_arguments)]
fn train_walk(
    walk: &[u32],
    cfg: &WalkConfig,
    dim: usize,
    table: &NegativeTable,
    input: &mut [f32],
    output: &mut [f32],
    rng: &mut ChaCha12Rng,
    processed: &mut u64,
    total_positions: u64,
) {
    let lr0 = cfg.learning_rate as f32;
    let mut neu1e = vec![0.0f32; dim];
    for i in 0..walk.len() {
        *processed += 1;
        let lr = lr0 * (1.0 - *processed as f32 / total_positions as f32).max(1e-4);
        let wsz = rng.gen_range(1..=cfg.window);
        let lo = i.saturating_sub(wsz);
        let hi = (i + wsz).min(walk.len() - 1);
        for j in lo..=hi {
            if j == i {
                continue;
            }
            let center = walk[i] as usize;
            let context = walk[j] as usize;
            neu1e.iter_mut().for_each(|x| *x = 0.0);
            sgns_pair(
                center,
                context,
                cfg.negatives_per_positive,
                dim,
                lr,
                table,
                input,
                output,
                &mut neu1e,
                rng,
            );
            let centre_row = &mut input[center * dim..(center + 1) * dim];
            for (x, &e) in centre_row.iter_mut().zip(&neu1e) {
                *x += e;
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn sgns_pair(
    center: usize,
    context: usize,
    negatives: usize,
    dim: usize,
    lr: f32,
    table: &NegativeTable,
    input: &[f32],
    output: &mut [f32],
    neu1e: &mut [f32],
    rng: &mut ChaCha12Rng,
) {
    let v_in = &input[center * dim..(center + 1) * dim];
    for k in 0..=negatives {
        let (target, label) = if k == 0 {
            (context, 1.0f32)
        } else {
            let t = table.sample(rng);
            if t == context {
                continue;
            }
            (t, 0.0)
        };
        let v_out = &mut output[target * dim..(target + 1) * dim];
        let dot: f32 = v_in.iter().zip(v_out.iter()).map(|(a, b)| a * b).sum();
        let g = (label - sigmoid32(dot)) * lr;
        for (e, &o) in neu1e.iter_mut().zip(v_out.iter()) {
            *e += g * o;
        }
        for (o, &i) in v_out.iter_mut().zip(v_in) {
            *o += g * i;
        }
    }
}

fn sigmoid32(x: f32) -> f32 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn standardize_columns(data: &mut Array2<f64>) {
    let n = data.nrows() as f64;
    for mut col in data.columns_mut() {
        let mean = col.sum() / n;
        let var = col.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        if std > 1e-12 {
            col.mapv_inplace(|x| (x - mean) / std);
        } else {
            col.mapv_inplace(|x| x - mean);
        }
    }
}

/// Walks + skip-gram in one call.
pub fn embed_graph(g: &Graph, cfg: &WalkConfig, dim: usize) -> FeatureMatrix {
    let corpus = generate_walks(g, cfg);
    let degrees: Vec<usize> = (0..g.node_count()).map(|v| g.degree(v)).collect();
    train_skipgram(&corpus, &degrees, cfg, dim)
}

/// Loads an external feature CSV: one row per node in index order, numeric
/// fields, optional header line, `#` comments. When `expected_dim` is given
/// and rows carry one extra leading column, that column is read as the node
/// id and rows are placed accordingly.
pub fn load_features(path: &Path, expected_dim: Option<usize>) -> Result<FeatureMatrix, EmbedError> {
    let text = std::fs::read_to_string(path)?;
    let parsed = parse_features(&text, expected_dim)?;
    Ok(FeatureMatrix {
        data: parsed,
        provenance: Provenance::External { path: path.display().to_string() },
    })
}

pub fn parse_features(text: &str, expected_dim: Option<usize>) -> Result<Array2<f64>, EmbedError> {
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut width: Option<usize> = None;
    let mut header_skipped = false;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if !header_skipped && rows.is_empty() => {
                header_skipped = true;
                continue;
            }
            Err(_) => {
                return Err(EmbedError::Parse {
                    line: lineno + 1,
                    msg: format!("non-numeric field in `{line}`"),
                })
            }
        };
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(EmbedError::Ragged {
                    line: lineno + 1,
                    got: values.len(),
                    expected: w,
                })
            }
            _ => {}
        }
        rows.push((lineno + 1, values));
    }
    if rows.is_empty() {
        return Err(EmbedError::Empty);
    }
    let w = width.unwrap();
    let has_id_column = matches!(expected_dim, Some(d) if w == d + 1);
    let d = if has_id_column { w - 1 } else { w };
    if let Some(expected) = expected_dim {
        if d != expected {
            return Err(EmbedError::DimensionMismatch { got: d, expected });
        }
    }
    let n = rows.len();
    let mut data = Array2::zeros((n, d));
    for (slot, (lineno, values)) in rows.into_iter().enumerate() {
        let (idx, feats) = if has_id_column {
            let id = values[0];
            if id.fract() != 0.0 || id < 0.0 || id as usize >= n {
                return Err(EmbedError::Parse {
                    line: lineno,
                    msg: format!("node id {id} out of range 0..{n}"),
                });
            }
            (id as usize, &values[1..])
        } else {
            (slot, &values[..])
        };
        for (j, &v) in feats.iter().enumerate() {
            data[(idx, j)] = v;
        }
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    fn small_cfg(seed: u64) -> WalkConfig {
        WalkConfig {
            walks_per_node: 5,
            walk_length: 20,
            window: 4,
            epochs: 3,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn isolated_node_walks_have_length_one() {
        let g = Graph::from_edges(3, &[(0, 1)]).unwrap();
        let walks = generate_walks(&g, &small_cfg(1));
        for w in &walks {
            if w[0] == 2 {
                assert_eq!(w.len(), 1);
            } else {
                assert_eq!(w.len(), 20);
            }
        }
    }

    #[test]
    fn p2_walks_alternate() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let walks = generate_walks(&g, &small_cfg(2));
        for w in &walks {
            for (i, pair) in w.windows(2).enumerate() {
                assert_ne!(pair[0], pair[1], "walk stalled at step {i}");
            }
        }
    }

    #[test]
    fn walks_stay_on_edges() {
        let g = crate::netgen::gen_er(&crate::netgen::GenSpec::new(
            crate::netgen::NetModel::Er,
            40,
            4.0,
            5,
        ))
        .unwrap();
        let walks = generate_walks(&g, &small_cfg(3));
        assert_eq!(walks.len(), 5 * 40);
        for w in &walks {
            for pair in w.windows(2) {
                assert!((pair[0] as usize) < 40 && (pair[1] as usize) < 40);
                assert!(g.has_edge(pair[0] as usize, pair[1] as usize));
            }
        }
    }

    #[test]
    fn triangle_return_bias_controls_backtracking() {
        // On K3 every non-previous neighbor is a common neighbor of the
        // previous node, so transition weights are 1/p (back) and 1; the
        // in-out bias never applies. Return frequency must approach
        // (1/p) / (1/p + 1) regardless of q.
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        for (p, q) in [(0.5, 1.0), (0.5, 1000.0), (2.0, 0.001)] {
            let cfg = WalkConfig {
                walks_per_node: 30,
                walk_length: 200,
                return_bias: p,
                inout_bias: q,
                seed: 7,
                ..Default::default()
            };
            let walks = generate_walks(&g, &cfg);
            let mut returns = 0usize;
            let mut steps = 0usize;
            for w in &walks {
                for win in w.windows(3) {
                    steps += 1;
                    if win[0] == win[2] {
                        returns += 1;
                    }
                }
            }
            let expected = (1.0 / p) / (1.0 / p + 1.0);
            let freq = returns as f64 / steps as f64;
            assert!(
                (freq - expected).abs() < 0.02,
                "p = {p}, q = {q}: freq = {freq}, expected = {expected}"
            );
        }
    }

    #[test]
    fn skipgram_shape_and_determinism() {
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]).unwrap();
        let cfg = small_cfg(9);
        let a = embed_graph(&g, &cfg, 16);
        let b = embed_graph(&g, &cfg, 16);
        assert_eq!(a.data.dim(), (6, 16));
        assert_eq!(a.data, b.data, "same seed must be bitwise identical");
        let c = embed_graph(&g, &WalkConfig { seed: 10, ..cfg }, 16);
        assert_ne!(a.data, c.data);
    }

    #[test]
    fn barbell_separates_cliques() {
        // Two K8 cliques joined by a single bridge edge.
        let mut edges = Vec::new();
        for i in 0..8u32 {
            for j in (i + 1)..8 {
                edges.push((i, j));
                edges.push((i + 8, j + 8));
            }
        }
        edges.push((0, 8));
        let g = Graph::from_edges(16, &edges).unwrap();
        let cfg = WalkConfig {
            walks_per_node: 10,
            walk_length: 30,
            window: 5,
            epochs: 5,
            seed: 13,
            standardize: false,
            ..Default::default()
        };
        let fm = embed_graph(&g, &cfg, 16);
        let cos = |a: usize, b: usize| {
            let ra = fm.data.row(a);
            let rb = fm.data.row(b);
            let dot: f64 = ra.iter().zip(rb.iter()).map(|(x, y)| x * y).sum();
            let na: f64 = ra.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb: f64 = rb.iter().map(|x| x * x).sum::<f64>().sqrt();
            dot / (na * nb).max(1e-12)
        };
        let mut within = Vec::new();
        let mut across = Vec::new();
        for a in 0..16 {
            for b in (a + 1)..16 {
                if (a < 8) == (b < 8) {
                    within.push(cos(a, b));
                } else {
                    across.push(cos(a, b));
                }
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(
            mean(&within) > mean(&across),
            "within = {}, across = {}",
            mean(&within),
            mean(&across)
        );
    }

    #[test]
    fn probe_loss_does_not_increase() {
        let g = crate::netgen::gen_ba(&crate::netgen::GenSpec::new(
            crate::netgen::NetModel::Ba,
            30,
            4.0,
            17,
        ))
        .unwrap();
        let cfg = WalkConfig { standardize: false, ..small_cfg(21) };
        let corpus = generate_walks(&g, &cfg);
        let degrees: Vec<usize> = (0..30).map(|v| g.degree(v)).collect();
        // Fixed probe batch of (center, context) pairs from the corpus.
        let mut probe = Vec::new();
        for w in corpus.iter().take(20) {
            for pair in w.windows(2).take(5) {
                probe.push((pair[0] as usize, pair[1] as usize));
            }
        }
        let loss_of = |fm: &FeatureMatrix| -> f64 {
            probe
                .iter()
                .map(|&(a, b)| {
                    let dot: f64 = fm.data.row(a).iter().zip(fm.data.row(b).iter()).map(|(x, y)| x * y).sum();
                    -(1.0 / (1.0 + (-dot).exp())).max(1e-12).ln()
                })
                .sum()
        };
        let untrained = train_skipgram(&corpus, &degrees, &WalkConfig { epochs: 0, ..cfg.clone() }, 16);
        let trained = train_skipgram(&corpus, &degrees, &cfg, 16);
        assert!(
            loss_of(&trained) <= loss_of(&untrained),
            "trained {} > untrained {}",
            loss_of(&trained),
            loss_of(&untrained)
        );
    }

    #[test]
    fn parse_plain_features() {
        let m = parse_features("1,0\n0,1\n1,1", None).unwrap();
        assert_eq!(m, ndarray::array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
    }

    #[test]
    fn parse_rejects_ragged_rows() {
        let err = parse_features("1,0\n0,1,5\n", None).unwrap_err();
        assert!(matches!(err, EmbedError::Ragged { line: 2, got: 3, expected: 2 }));
    }

    #[test]
    fn parse_with_id_column_and_header() {
        let text = "node,f1,f2\n2,9,9\n0,1,1\n1,5,5\n";
        let m = parse_features(text, Some(2)).unwrap();
        assert_eq!(m, ndarray::array![[1.0, 1.0], [5.0, 5.0], [9.0, 9.0]]);
    }

    #[test]
    fn parse_dimension_mismatch() {
        let err = parse_features("1,0\n0,1\n", Some(5)).unwrap_err();
        assert!(matches!(err, EmbedError::DimensionMismatch { got: 2, expected: 5 }));
    }
}
