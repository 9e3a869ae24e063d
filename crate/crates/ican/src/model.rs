//! The causal autoencoder ranking model: a GCN encoder with an injected
//! influence column, a decoder driven by an acyclicity-constrained causal
//! matrix over the latent features, Markov-blanket extraction for the ranking
//! head, listwise ranking loss, and the augmented-Lagrangian training loop.

use crate::autodiff::{SparseMatrix, Tape, Var};
use crate::embed::FeatureMatrix;
use crate::graph::Graph;
use crate::sir::InfluenceScores;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IcanError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("training diverged in `{op}`; last components: {components}")]
    Divergence { op: String, components: String },
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RankingInput {
    Mb,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RankingLoss {
    CausalListMle,
    ListMleFull,
    Mse,
}

/// Named ablation variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    Full,
    WoCau,
    WoSyner,
    WoCausalRank,
    WoRank,
}

impl Variant {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" | "ican" => Some(Self::Full),
            "wo-cau" => Some(Self::WoCau),
            "wo-syner" => Some(Self::WoSyner),
            "wo-causalrank" => Some(Self::WoCausalRank),
            "wo-rank" => Some(Self::WoRank),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Full => "ican",
            Self::WoCau => "wo-cau",
            Self::WoSyner => "wo-syner",
            Self::WoCausalRank => "wo-causalrank",
            Self::WoRank => "wo-rank",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IcanConfig {
    /// Number of encoder hidden layers l.
    pub hidden_layers: usize,
    /// Injection layer index m (the influence column joins H^(m)).
    pub injection_layer: usize,
    /// Ranking GNN layers t (plus one affine output layer).
    pub ranking_layers: usize,
    /// Latent width p.
    pub hidden_width: usize,
    /// Input feature dimension d.
    pub feature_dim: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    /// Penalty growth factor β.
    pub beta: f64,
    /// Residual improvement ratio θ.
    pub theta: f64,
    /// Gradient step size μ.
    pub learning_rate: f64,
    /// Outer augmented-Lagrangian iterations T.
    pub outer_iterations: usize,
    /// Gradient steps per outer iteration.
    pub inner_steps: usize,
    /// |w| threshold for binarizing the causal matrix.
    pub w_threshold: f64,
    pub ranking_input: RankingInput,
    pub ranking_loss: RankingLoss,
    pub causal_enabled: bool,
    pub two_stage: bool,
    /// Use the normalized adjacency instead of raw A in the ranking head.
    pub use_normalized_ranking_adj: bool,
    pub seed: u64,
}

impl Default for IcanConfig {
    fn default() -> Self {
        IcanConfig {
            hidden_layers: 5,
            injection_layer: 3,
            ranking_layers: 2,
            hidden_width: 32,
            feature_dim: 128,
            lambda1: 1.0,
            lambda2: 1.0,
            lambda3: 1.0,
            beta: 10.0,
            theta: 0.25,
            learning_rate: 0.001,
            outer_iterations: 10,
            inner_steps: 300,
            w_threshold: 0.3,
            ranking_input: RankingInput::Mb,
            ranking_loss: RankingLoss::CausalListMle,
            causal_enabled: true,
            two_stage: false,
            use_normalized_ranking_adj: false,
            seed: 0,
        }
    }
}

impl IcanConfig {
    pub fn validate(&self) -> Result<(), IcanError> {
        if self.injection_layer < 1 || self.injection_layer >= self.hidden_layers {
            return Err(IcanError::Config(format!(
                "injection layer m = {} must satisfy 1 <= m < l = {}",
                self.injection_layer, self.hidden_layers
            )));
        }
        if self.hidden_width == 0 || self.feature_dim == 0 || self.ranking_layers == 0 {
            return Err(IcanError::Config("zero width".into()));
        }
        if self.lambda1 < 0.0 || self.lambda2 < 0.0 || self.lambda3 < 0.0 {
            return Err(IcanError::Config("loss weights must be nonnegative".into()));
        }
        if self.beta <= 1.0 {
            return Err(IcanError::Config(format!("beta = {} must exceed 1", self.beta)));
        }
        if !(0.0 < self.theta && self.theta < 1.0) {
            return Err(IcanError::Config(format!("theta = {} must lie in (0, 1)", self.theta)));
        }
        if self.ranking_input == RankingInput::Mb && !self.causal_enabled {
            return Err(IcanError::Config(
                "ranking_input = mb requires the causal path; use the wo-cau ablation \
                 (ranking_input = full) instead"
                    .into(),
            ));
        }
        Ok(())
    }

    /// Applies one of the named ablation variants.
    pub fn with_variant(mut self, v: Variant) -> Self {
        match v {
            Variant::Full => {}
            Variant::WoCau => {
                self.causal_enabled = false;
                self.lambda1 = 0.0;
                self.ranking_input = RankingInput::Full;
            }
            Variant::WoSyner => {
                self.two_stage = true;
            }
            Variant::WoCausalRank => {
                self.ranking_loss = RankingLoss::ListMleFull;
            }
            Variant::WoRank => {
                self.ranking_loss = RankingLoss::Mse;
            }
        }
        self
    }
}

/// One dense layer: weight plus a bias row.
#[derive(Debug, Clone)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array2<f64>,
}

/// Trained model state: encoder layers (injection layer has no weights),
/// decoder layers, ranking layers, the causal matrix W over the p+1 latent
/// variables, and the frozen Markov-blanket column set.
#[derive(Debug, Clone)]
pub struct IcanModel {
    pub config: IcanConfig,
    pub encoder: Vec<Dense>,
    pub decoder: Vec<Dense>,
    pub ranking: Vec<Dense>,
    pub w_causal: Array2<f64>,
    pub mb_columns: Vec<usize>,
    /// Threshold actually used for the final binarization (>= w_threshold
    /// when cycle-breaking had to raise it).
    pub threshold_used: f64,
}

/// Per-node scores with the induced rank permutation. Higher score means a
/// numerically lower (better) rank; ties break by ascending node index.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub scores: Vec<f64>,
    /// ranks[v] is the 0-based rank of node v.
    pub ranks: Vec<usize>,
}

impl Ranking {
    pub fn from_scores(scores: Vec<f64>) -> Self {
        let n = scores.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            scores[b].partial_cmp(&scores[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
        });
        let mut ranks = vec![0usize; n];
        for (pos, &v) in order.iter().enumerate() {
            ranks[v] = pos;
        }
        Ranking { scores, ranks }
    }

    /// Node indices from best to worst.
    pub fn order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.scores.len()).collect();
        order.sort_by_key(|&v| self.ranks[v]);
        order
    }
}

/// Binarized causal graph over the p+1 latent variables.
#[derive(Debug, Clone)]
pub struct CausalGraph {
    /// adjacency[i][j] = edge i → j.
    pub adjacency: Vec<Vec<bool>>,
    /// Column of the injected influence variable (= p).
    pub y_index: usize,
    /// Markov blanket of the influence variable: parents ∪ children ∪
    /// parents-of-children, y excluded, sorted.
    pub mb: Vec<usize>,
    pub threshold_used: f64,
}

/// DFS cycle check on a boolean adjacency.
pub fn support_has_cycle(adj: &[Vec<bool>]) -> bool {
    let k = adj.len();
    let mut state = vec![0u8; k]; // 0 white, 1 gray, 2 black
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for root in 0..k {
        if state[root] != 0 {
            continue;
        }
        state[root] = 1;
        stack.push((root, 0));
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            let mut advanced = false;
            while *next < k {
                let w = *next;
                *next += 1;
                if !adj[v][w] {
                    continue;
                }
                if state[w] == 1 {
                    return true;
                }
                if state[w] == 0 {
                    state[w] = 1;
                    stack.push((w, 0));
                    advanced = true;
                    break;
                }
            }
            if !advanced && stack.last().map(|&(x, _)| x) == Some(v) {
                state[v] = 2;
                stack.pop();
            }
        }
    }
    false
}

fn binarize(w: &Array2<f64>, threshold: f64) -> Vec<Vec<bool>> {
    let k = w.nrows();
    (0..k)
        .map(|i| (0..k).map(|j| i != j && w[(i, j)].abs() > threshold).collect())
        .collect()
}

/// Thresholds |W| (diagonal zeroed) into a binary causal graph and extracts
/// the Markov blanket of the influence variable. If the binarized graph
/// contains a cycle, the threshold is raised to the smallest |w| value that
/// breaks all cycles.
pub fn extract_mb(w: &Array2<f64>, threshold: f64) -> CausalGraph {
    let k = w.nrows();
    assert_eq!(w.ncols(), k, "extract_mb: W must be square");
    let y = k - 1;
    let mut used = threshold;
    let mut adj = binarize(w, threshold);
    if support_has_cycle(&adj) {
        // Candidate thresholds are the off-diagonal magnitudes; raising the
        // cut only removes edges, so acyclicity is monotone and bisection
        // applies.
        let mut vals: Vec<f64> = (0..k)
            .flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| w[(i, j)].abs())
            .filter(|&v| v > threshold)
            .collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.dedup();
        let mut lo = 0usize;
        let mut hi = vals.len() - 1; // cutting above the max is always acyclic
        while lo < hi {
            let mid = (lo + hi) / 2;
            if support_has_cycle(&binarize(w, vals[mid])) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        used = vals[lo];
        adj = binarize(w, used);
        log::warn!(
            "causal graph cyclic at threshold {threshold}; raised to {used} to break cycles"
        );
    }
    let parents: Vec<usize> = (0..k).filter(|&i| adj[i][y]).collect();
    let children: Vec<usize> = (0..k).filter(|&j| adj[y][j]).collect();
    let mut mb: Vec<usize> = parents.clone();
    for &c in &children {
        mb.push(c);
        for i in 0..k {
            if i != y && adj[i][c] {
                mb.push(i);
            }
        }
    }
    mb.retain(|&v| v != y);
    mb.sort_unstable();
    mb.dedup();
    CausalGraph { adjacency: adj, y_index: y, mb, threshold_used: used }
}

/// Population z-score; zero vectors stay zero.
pub fn standardize(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std > 1e-12 {
        values.iter().map(|v| (v - mean) / std).collect()
    } else {
        values.iter().map(|v| v - mean).collect()
    }
}

/// Permutation π_y: indices sorted by value descending, ties by ascending
/// index.
pub fn rank_permutation(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[b].partial_cmp(&values[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    order
}

fn sparse_normalized(g: &Graph) -> SparseMatrix {
    let n = g.node_count();
    let inv_sqrt: Vec<f64> =
        (0..n).map(|v| 1.0 / ((g.degree(v) + 1) as f64).sqrt()).collect();
    let mut entries: Vec<(u32, u32, f64)> = Vec::with_capacity(2 * g.edge_count() + n);
    for v in 0..n {
        entries.push((v as u32, v as u32, inv_sqrt[v] * inv_sqrt[v]));
    }
    for &(i, j) in g.edges() {
        let w = inv_sqrt[i as usize] * inv_sqrt[j as usize];
        entries.push((i, j, w));
        entries.push((j, i, w));
    }
    SparseMatrix::from_entries(n, n, &entries)
}

fn sparse_raw(g: &Graph) -> SparseMatrix {
    let n = g.node_count();
    let mut entries: Vec<(u32, u32, f64)> = Vec::with_capacity(2 * g.edge_count());
    for &(i, j) in g.edges() {
        entries.push((i, j, 1.0));
        entries.push((j, i, 1.0));
    }
    SparseMatrix::from_entries(n, n, &entries)
}

/// All model parameters staged on a tape, in a fixed order.
struct TapedParams {
    encoder: Vec<(Var, Var)>,
    decoder: Vec<(Var, Var)>,
    ranking: Vec<(Var, Var)>,
    w_causal: Var,
}

fn stage_params(tape: &mut Tape, model: &IcanModel) -> TapedParams {
    let dense = |tape: &mut Tape, d: &Dense| (tape.var(d.w.clone()), tape.var(d.b.clone()));
    TapedParams {
        encoder: model.encoder.iter().map(|d| dense(tape, d)).collect(),
        decoder: model.decoder.iter().map(|d| dense(tape, d)).collect(),
        ranking: model.ranking.iter().map(|d| dense(tape, d)).collect(),
        w_causal: tape.var(model.w_causal.clone()),
    }
}

/// GCN layer: activation(Ã · X · w + b); the product is computed as
/// Ã · (X w), which is cheaper and algebraically identical.
fn gcn_layer(
    tape: &mut Tape,
    adj: &Arc<SparseMatrix>,
    x: Var,
    w: Var,
    b: Var,
    sigmoid: bool,
) -> Var {
    let xw = tape.matmul(x, w);
    let axw = tape.spmm(adj, xw);
    let pre = tape.add_bias_row(axw, b);
    if sigmoid {
        tape.sigmoid(pre)
    } else {
        tape.relu(pre)
    }
}

/// Encoder forward: returns (H_low = H^(m−1), H_l = H^(l)). In training mode
/// `y_col` is the standardized influence column; at inference it is zeros.
fn encode_on_tape(
    tape: &mut Tape,
    cfg: &IcanConfig,
    params: &TapedParams,
    atil: &Arc<SparseMatrix>,
    x: Var,
    y_col: Var,
) -> (Var, Var) {
    let m = cfg.injection_layer;
    let mut h = x;
    for i in 0..m {
        let (w, b) = params.encoder[i];
        h = gcn_layer(tape, atil, h, w, b, false);
    }
    let h_low = h;
    let mut h = tape.concat_cols(h_low, y_col);
    for i in m..params.encoder.len() {
        let (w, b) = params.encoder[i];
        h = gcn_layer(tape, atil, h, w, b, false);
    }
    (h_low, h)
}

/// Decoder forward: Φ^(0) = H^(l) W, m−1 GCN layers, drop the injected
/// influence column, then Â = sigmoid(Φ Φᵀ).
fn decode_on_tape(
    tape: &mut Tape,
    cfg: &IcanConfig,
    params: &TapedParams,
    atil: &Arc<SparseMatrix>,
    h_l: Var,
) -> Var {
    let p = cfg.hidden_width;
    let mut phi = tape.matmul(h_l, params.w_causal);
    for &(w, b) in &params.decoder {
        phi = gcn_layer(tape, atil, phi, w, b, false);
    }
    let phi_m = tape.slice_cols(phi, 0, p);
    let phi_t = tape.transpose(phi_m);
    let logits = tape.matmul(phi_m, phi_t);
    tape.sigmoid(logits)
}

/// Ranking head: t sigmoid GNN layers over the ranking adjacency followed by
/// one affine layer. The first weight matrix is masked to the active feature
/// columns so its shape never changes.
fn ranking_on_tape(
    tape: &mut Tape,
    params: &TapedParams,
    a_rank: &Arc<SparseMatrix>,
    features: Var,
    mask: Var,
) -> Var {
    let t = params.ranking.len() - 1;
    let (w1, b1) = params.ranking[0];
    let w1m = tape.hadamard(w1, mask);
    let mut e = gcn_layer(tape, a_rank, features, w1m, b1, true);
    for &(w, b) in params.ranking.iter().take(t).skip(1) {
        e = gcn_layer(tape, a_rank, e, w, b, true);
    }
    let (w_out, b_out) = params.ranking[t];
    let ew = tape.matmul(e, w_out);
    tape.add_bias_row(ew, b_out)
}

/// Loss components of one forward pass, for logging and divergence dumps.
#[derive(Debug, Clone, Copy, Default)]
pub struct Components {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub h: f64,
    pub penalty: f64,
    pub total: f64,
}

impl std::fmt::Display for Components {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "L1={:.6e} L2={:.6e} L3={:.6e} h={:.6e} penalty={:.6e} total={:.6e}",
            self.l1, self.l2, self.l3, self.h, self.penalty, self.total
        )
    }
}

/// Which parameter groups a training stage updates.
#[derive(Debug, Clone, Copy)]
struct StagePlan {
    use_l1: bool,
    use_l2: bool,
    use_penalty: bool,
    update_autoencoder: bool,
    update_w: bool,
    update_ranking: bool,
}

/// Prepared constants for one training problem (one graph + features +
/// labels). Shared by the training loop, the forward-only objective used by
/// the descent trace, and finite-difference tests.
pub struct TrainingProblem {
    pub n: usize,
    atil: Arc<SparseMatrix>,
    a_rank: Arc<SparseMatrix>,
    a_dense: Array2<f64>,
    x: Array2<f64>,
    y_col: Array2<f64>,
    perm: Vec<usize>,
}

impl TrainingProblem {
    pub fn new(g: &Graph, x: &FeatureMatrix, y: &InfluenceScores, cfg: &IcanConfig) -> Result<Self, IcanError> {
        let n = g.node_count();
        if x.rows() != n {
            return Err(IcanError::Dimension(format!(
                "feature rows {} != node count {n}",
                x.rows()
            )));
        }
        if x.dim() != cfg.feature_dim {
            return Err(IcanError::Dimension(format!(
                "feature dim {} != configured d = {}",
                x.dim(),
                cfg.feature_dim
            )));
        }
        if y.y.len() != n {
            return Err(IcanError::Dimension(format!(
                "influence scores {} != node count {n}",
                y.y.len()
            )));
        }
        let y_std = standardize(&y.y);
        let y_col = Array2::from_shape_vec((n, 1), y_std).expect("length checked");
        let a_rank = if cfg.use_normalized_ranking_adj {
            sparse_normalized(g)
        } else {
            sparse_raw(g)
        };
        Ok(TrainingProblem {
            n,
            atil: Arc::new(sparse_normalized(g)),
            a_rank: Arc::new(a_rank),
            a_dense: g.dense_adjacency(),
            x: x.data.clone(),
            perm: rank_permutation(&y.y),
            y_col,
        })
    }

    /// Builds the full augmented objective on a tape. Returns the objective
    /// variable and the component values.
    fn objective_on_tape(
        &self,
        tape: &mut Tape,
        cfg: &IcanConfig,
        params: &TapedParams,
        mask: &Array2<f64>,
        plan: &StagePlan,
        alpha: f64,
        rho: f64,
    ) -> (Var, Components) {
        let n = self.n;
        let x = tape.constant(self.x.clone());
        let y_col = tape.constant(self.y_col.clone());
        let (h_low, h_l) = encode_on_tape(tape, cfg, params, &self.atil, x, y_col);

        let mut total: Option<Var> = None;
        let add_term = |tape: &mut Tape, term: Var, acc: &mut Option<Var>| {
            *acc = Some(match *acc {
                Some(t) => tape.add(t, term),
                None => term,
            });
        };
        let mut comps = Components::default();

        // L1: causal reconstruction (binary cross-entropy over all pairs).
        if plan.use_l1 && cfg.lambda1 > 0.0 {
            let a_hat = decode_on_tape(tape, cfg, params, &self.atil, h_l);
            let clamped = tape.clamp(a_hat, 1e-7, 1.0 - 1e-7);
            let log_p = tape.log(clamped);
            let ones = tape.constant(Array2::from_elem((n, n), 1.0));
            let neg = tape.scalar_mul(clamped, -1.0);
            let one_minus = tape.add(ones, neg);
            let log_q = tape.log(one_minus);
            let a_const = tape.constant(self.a_dense.clone());
            let ones2 = tape.constant(Array2::from_elem((n, n), 1.0));
            let neg_a = tape.scalar_mul(a_const, -1.0);
            let one_minus_a = tape.add(ones2, neg_a);
            let t1 = tape.hadamard(a_const, log_p);
            let t2 = tape.hadamard(one_minus_a, log_q);
            let both = tape.add(t1, t2);
            let total_ll = tape.sum(both);
            let l1 = tape.scalar_mul(total_ll, -cfg.lambda1 / (n * n) as f64);
            comps.l1 = tape.scalar(l1);
            add_term(tape, l1, &mut total);
        }

        // L2: ranking loss on the masked (or full) latent features.
        if plan.use_l2 && cfg.lambda2 > 0.0 {
            let mask_v = tape.constant(mask.clone());
            let scores = ranking_on_tape(tape, params, &self.a_rank, h_low, mask_v);
            let raw = match cfg.ranking_loss {
                RankingLoss::CausalListMle | RankingLoss::ListMleFull => {
                    tape.listmle_loss(scores, &self.perm)
                }
                RankingLoss::Mse => {
                    let target = tape.constant(self.y_col.clone());
                    let neg_t = tape.scalar_mul(target, -1.0);
                    let diff = tape.add(scores, neg_t);
                    let ss = tape.frobenius_sq(diff);
                    tape.scalar_mul(ss, 1.0 / n as f64)
                }
            };
            let l2 = tape.scalar_mul(raw, cfg.lambda2);
            comps.l2 = tape.scalar(l2);
            add_term(tape, l2, &mut total);
        }

        // L3: squared Frobenius norms of every weight matrix except the
        // (weightless) injection layer; biases and W excluded.
        if cfg.lambda3 > 0.0 {
            let mut reg: Option<Var> = None;
            for &(w, _) in params
                .encoder
                .iter()
                .chain(params.decoder.iter())
                .chain(params.ranking.iter())
            {
                let f = tape.frobenius_sq(w);
                add_term(tape, f, &mut reg);
            }
            let reg = reg.expect("at least one weight matrix");
            let l3 = tape.scalar_mul(reg, cfg.lambda3);
            comps.l3 = tape.scalar(l3);
            add_term(tape, l3, &mut total);
        }

        // Acyclicity: α h(W) + (ρ/2) h(W)².
        if plan.use_penalty {
            let h = tape.expm_trace(params.w_causal);
            comps.h = tape.scalar(h);
            let lin = tape.scalar_mul(h, alpha);
            let h2 = tape.hadamard(h, h);
            let quad = tape.scalar_mul(h2, rho / 2.0);
            let penalty = tape.add(lin, quad);
            comps.penalty = tape.scalar(penalty);
            add_term(tape, penalty, &mut total);
        }

        let total = total.unwrap_or_else(|| tape.constant(Array2::zeros((1, 1))));
        comps.total = tape.scalar(total);
        (total, comps)
    }

    /// Forward-only objective value for the current model state.
    pub fn objective(
        &self,
        model: &IcanModel,
        mask: &Array2<f64>,
        alpha: f64,
        rho: f64,
    ) -> Result<Components, IcanError> {
        let plan = joint_plan(&model.config);
        let mut tape = Tape::new();
        let params = stage_params(&mut tape, model);
        let (_, comps) =
            self.objective_on_tape(&mut tape, &model.config, &params, mask, &plan, alpha, rho);
        if let Some(op) = tape.poisoned() {
            return Err(IcanError::Divergence { op: op.to_string(), components: comps.to_string() });
        }
        Ok(comps)
    }
}

fn joint_plan(cfg: &IcanConfig) -> StagePlan {
    StagePlan {
        use_l1: true,
        use_l2: true,
        use_penalty: cfg.causal_enabled,
        update_autoencoder: true,
        update_w: cfg.causal_enabled,
        update_ranking: true,
    }
}

/// Feature-column mask materialized as a (p × rank hidden width) 0/1 matrix
/// over the rows of the first ranking weight.
fn column_mask(p: usize, hidden: usize, mb: &[usize], full: bool) -> Array2<f64> {
    let mut mask = Array2::zeros((p, hidden));
    if full || mb.is_empty() {
        mask.fill(1.0);
    } else {
        for &c in mb {
            mask.row_mut(c).fill(1.0);
        }
    }
    mask
}

/// Per-outer-iteration training statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OuterIterStats {
    pub objective_start: f64,
    pub objective_end: f64,
    pub h: f64,
    pub rho: f64,
    pub alpha: f64,
    pub mb_size: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TrainReport {
    pub outer: Vec<OuterIterStats>,
    /// Stage-2 statistics when training two-stage.
    pub stage2: Vec<OuterIterStats>,
    pub threshold_used: f64,
    /// Acyclicity residual of the final thresholded W.
    pub h_thresholded: f64,
    pub mb_columns: Vec<usize>,
}

impl IcanModel {
    /// Fresh model: scaled-uniform fan-in weights, zero biases, W = I.
    pub fn init(cfg: &IcanConfig) -> Result<Self, IcanError> {
        cfg.validate()?;
        let mut rng = ChaCha12Rng::seed_from_u64(crate::seeds::derive(cfg.seed, "ican-init", 0));
        let p = cfg.hidden_width;
        let d = cfg.feature_dim;
        let m = cfg.injection_layer;
        let l = cfg.hidden_layers;
        let t = cfg.ranking_layers;
        let mut dense = |fan_in: usize, fan_out: usize| -> Dense {
            let bound = 1.0 / (fan_in as f64).sqrt();
            let w = Array2::from_shape_fn((fan_in, fan_out), |_| rng.gen_range(-bound..bound));
            Dense { w, b: Array2::zeros((1, fan_out)) }
        };
        let mut encoder = Vec::with_capacity(l);
        encoder.push(dense(d, p));
        for _ in 1..m {
            encoder.push(dense(p, p));
        }
        for _ in (m + 1)..=l {
            encoder.push(dense(p + 1, p + 1));
        }
        let decoder: Vec<Dense> = (1..m).map(|_| dense(p + 1, p + 1)).collect();
        let mut ranking = Vec::with_capacity(t + 1);
        ranking.push(dense(p, 32));
        for _ in 2..=t {
            ranking.push(dense(32, 32));
        }
        ranking.push(dense(32, 1));
        Ok(IcanModel {
            config: cfg.clone(),
            encoder,
            decoder,
            ranking,
            w_causal: Array2::eye(p + 1),
            mb_columns: Vec::new(),
            threshold_used: cfg.w_threshold,
        })
    }

    /// Encoder forward as plain arrays (testing and inspection). `y` is the
    /// raw influence vector in training mode; inference injects zeros.
    pub fn encode(
        &self,
        g: &Graph,
        x: &FeatureMatrix,
        y: Option<&[f64]>,
    ) -> Result<(Array2<f64>, Array2<f64>), IcanError> {
        let n = g.node_count();
        if x.rows() != n || x.dim() != self.config.feature_dim {
            return Err(IcanError::Dimension(format!(
                "features {}x{} incompatible with n = {n}, d = {}",
                x.rows(),
                x.dim(),
                self.config.feature_dim
            )));
        }
        if let Some(y) = y {
            if y.len() != n {
                return Err(IcanError::Dimension(format!(
                    "influence vector {} != node count {n}",
                    y.len()
                )));
            }
        }
        let atil = Arc::new(sparse_normalized(g));
        let y_col = match y {
            Some(y) => {
                Array2::from_shape_vec((n, 1), standardize(y)).expect("length checked")
            }
            None => Array2::zeros((n, 1)),
        };
        let mut tape = Tape::new();
        let params = stage_params(&mut tape, self);
        let xv = tape.constant(x.data.clone());
        let yv = tape.constant(y_col);
        let (h_low, h_l) = encode_on_tape(&mut tape, &self.config, &params, &atil, xv, yv);
        Ok((tape.value(h_low).clone(), tape.value(h_l).clone()))
    }

    /// Scores and ranks the nodes of a target graph (inference mode: the
    /// injected influence column is zero and never read by the ranking path).
    pub fn rank_nodes(&self, g: &Graph, x: &FeatureMatrix) -> Result<Ranking, IcanError> {
        let n = g.node_count();
        if x.rows() != n || x.dim() != self.config.feature_dim {
            return Err(IcanError::Dimension(format!(
                "features {}x{} incompatible with n = {n}, d = {}",
                x.rows(),
                x.dim(),
                self.config.feature_dim
            )));
        }
        let atil = Arc::new(sparse_normalized(g));
        let a_rank = Arc::new(if self.config.use_normalized_ranking_adj {
            sparse_normalized(g)
        } else {
            sparse_raw(g)
        });
        let mut tape = Tape::new();
        let params = stage_params(&mut tape, self);
        let xv = tape.constant(x.data.clone());
        let zeros = tape.constant(Array2::zeros((n, 1)));
        let (h_low, _) = encode_on_tape(&mut tape, &self.config, &params, &atil, xv, zeros);
        let full = self.config.ranking_input == RankingInput::Full
            || self.config.ranking_loss == RankingLoss::ListMleFull;
        if !full && self.mb_columns.is_empty() {
            log::warn!("markov blanket empty; ranking falls back to full latent features");
        }
        let mask = column_mask(
            self.config.hidden_width,
            self.ranking[0].w.ncols(),
            &self.mb_columns,
            full,
        );
        let mask_v = tape.constant(mask);
        let scores_v = ranking_on_tape(&mut tape, &params, &a_rank, h_low, mask_v);
        let scores: Vec<f64> = tape.value(scores_v).column(0).to_vec();
        Ok(Ranking::from_scores(scores))
    }

    pub fn save(&self, path: &Path) -> Result<(), IcanError> {
        let file = checkpoint::to_file(self);
        let json = serde_json::to_string_pretty(&file)
            .map_err(|e| IcanError::Checkpoint(e.to_string()))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, IcanError> {
        let text = std::fs::read_to_string(path)?;
        let file: checkpoint::CheckpointFile =
            serde_json::from_str(&text).map_err(|e| IcanError::Checkpoint(e.to_string()))?;
        checkpoint::from_file(file)
    }
}

/// Trains the model with the augmented-Lagrangian loop: W = I, ρ = 1, α = 0;
/// each outer iteration runs `inner_steps` gradient steps on the full
/// objective, then α ← α + ρ·h(W) and ρ ← β·ρ when the residual has not
/// improved by the factor θ. The Markov blanket is re-extracted at every
/// outer boundary and frozen at the end.
pub fn train(
    g: &Graph,
    x: &FeatureMatrix,
    y: &InfluenceScores,
    cfg: &IcanConfig,
) -> Result<(IcanModel, TrainReport), IcanError> {
    cfg.validate()?;
    let problem = TrainingProblem::new(g, x, y, cfg)?;
    let mut model = IcanModel::init(cfg)?;
    let mut report = TrainReport::default();

    if cfg.two_stage {
        // Stage 1: reconstruction + regularizer + acyclicity only.
        let stage1 = StagePlan {
            use_l1: true,
            use_l2: false,
            use_penalty: cfg.causal_enabled,
            update_autoencoder: true,
            update_w: cfg.causal_enabled,
            update_ranking: false,
        };
        run_stage(&problem, &mut model, cfg, stage1, &mut report.outer, true)?;
        // Stage 2: ranking head only, on the frozen causal features.
        let stage2 = StagePlan {
            use_l1: false,
            use_l2: true,
            use_penalty: false,
            update_autoencoder: false,
            update_w: false,
            update_ranking: true,
        };
        finalize_mb(&mut model, &mut report);
        run_stage(&problem, &mut model, cfg, stage2, &mut report.stage2, false)?;
    } else {
        let plan = joint_plan(cfg);
        run_stage(&problem, &mut model, cfg, plan, &mut report.outer, true)?;
        finalize_mb(&mut model, &mut report);
    }

    // Residual of the final thresholded W (diagonal zeroed, sub-threshold
    // entries removed): exactly zero when the support is acyclic.
    let k = model.w_causal.nrows();
    let mut w_thr = model.w_causal.clone();
    for i in 0..k {
        for j in 0..k {
            if i == j || w_thr[(i, j)].abs() <= model.threshold_used {
                w_thr[(i, j)] = 0.0;
            }
        }
    }
    report.h_thresholded = residual(&w_thr);
    Ok((model, report))
}

/// Finite-difference audit of the full augmented objective against the
/// reverse-mode gradients, over every parameter matrix of a freshly
/// initialized model. Returns the max relative error
/// |g_ad − g_fd| / max(1, |g_fd|).
pub fn objective_grad_error(
    g: &Graph,
    x: &FeatureMatrix,
    y: &InfluenceScores,
    cfg: &IcanConfig,
    alpha: f64,
    rho: f64,
) -> Result<f64, IcanError> {
    let model = IcanModel::init(cfg)?;
    let problem = TrainingProblem::new(g, x, y, cfg)?;
    let plan = joint_plan(cfg);
    let mask = column_mask(cfg.hidden_width, model.ranking[0].w.ncols(), &[], true);

    let mut tape = Tape::new();
    let params = stage_params(&mut tape, &model);
    let (obj, _) = problem.objective_on_tape(&mut tape, cfg, &params, &mask, &plan, alpha, rho);
    tape.backward(obj);

    let eval = |m: &IcanModel| -> f64 {
        let mut t = Tape::new();
        let p = stage_params(&mut t, m);
        let (_, comps) = problem.objective_on_tape(&mut t, cfg, &p, &mask, &plan, alpha, rho);
        comps.total
    };

    let mut max_err = 0.0f64;
    let eps = 1e-5;
    let mut audit = |ad: &Array2<f64>, write: &mut dyn FnMut(&mut IcanModel) -> &mut Array2<f64>| {
        let dim = ad.dim();
        for r in 0..dim.0 {
            for c in 0..dim.1 {
                let mut m = model.clone();
                write(&mut m)[(r, c)] += eps;
                let fp = eval(&m);
                write(&mut m)[(r, c)] -= 2.0 * eps;
                let fm = eval(&m);
                let fd = (fp - fm) / (2.0 * eps);
                let err = (ad[(r, c)] - fd).abs() / fd.abs().max(1.0);
                max_err = max_err.max(err);
            }
        }
    };

    for i in 0..model.encoder.len() {
        let gw = tape.grad(params.encoder[i].0).unwrap().clone();
        audit(&gw, &mut |m| &mut m.encoder[i].w);
        let gb = tape.grad(params.encoder[i].1).unwrap().clone();
        audit(&gb, &mut |m| &mut m.encoder[i].b);
    }
    for i in 0..model.decoder.len() {
        let gw = tape.grad(params.decoder[i].0).unwrap().clone();
        audit(&gw, &mut |m| &mut m.decoder[i].w);
    }
    for i in 0..model.ranking.len() {
        let gw = tape.grad(params.ranking[i].0).unwrap().clone();
        audit(&gw, &mut |m| &mut m.ranking[i].w);
        let gb = tape.grad(params.ranking[i].1).unwrap().clone();
        audit(&gb, &mut |m| &mut m.ranking[i].b);
    }
    let gw = tape.grad(params.w_causal).unwrap().clone();
    audit(&gw, &mut |m| &mut m.w_causal);
    Ok(max_err)
}

fn finalize_mb(model: &mut IcanModel, report: &mut TrainReport) {
    let cg = extract_mb(&model.w_causal, model.config.w_threshold);
    model.mb_columns = if model.config.causal_enabled { cg.mb.clone() } else { Vec::new() };
    model.threshold_used = cg.threshold_used;
    report.threshold_used = cg.threshold_used;
    report.mb_columns = model.mb_columns.clone();
}

fn run_stage(
    problem: &TrainingProblem,
    model: &mut IcanModel,
    cfg: &IcanConfig,
    plan: StagePlan,
    stats: &mut Vec<OuterIterStats>,
    update_multipliers: bool,
) -> Result<(), IcanError> {
    let mut alpha = 0.0f64;
    let mut rho = 1.0f64;
    const RHO_CAP: f64 = 1e16;
    let mut h_old = residual(&model.w_causal);
    let full_input = cfg.ranking_input == RankingInput::Full
        || cfg.ranking_loss == RankingLoss::ListMleFull
        || !cfg.causal_enabled;
    for outer in 0..cfg.outer_iterations {
        // Re-binarize W at the boundary; the mask follows the current blanket.
        let mb = if cfg.causal_enabled {
            extract_mb(&model.w_causal, cfg.w_threshold).mb
        } else {
            Vec::new()
        };
        let mask = column_mask(cfg.hidden_width, model.ranking[0].w.ncols(), &mb, full_input);
        let mut obj_start = None;
        for _step in 0..cfg.inner_steps {
            let mut tape = Tape::new();
            let params = stage_params(&mut tape, model);
            let (obj, comps) =
                problem.objective_on_tape(&mut tape, cfg, &params, &mask, &plan, alpha, rho);
            if let Some(op) = tape.poisoned() {
                return Err(IcanError::Divergence {
                    op: op.to_string(),
                    components: comps.to_string(),
                });
            }
            if obj_start.is_none() {
                obj_start = Some(comps.total);
            }
            tape.backward(obj);
            apply_updates(&tape, &params, model, cfg.learning_rate, &plan);
        }
        // Objective after the last update, same multipliers and mask.
        let comps_final = problem_objective(problem, model, cfg, &mask, &plan, alpha, rho)?;
        let h_now = comps_final.h;
        stats.push(OuterIterStats {
            objective_start: obj_start.unwrap_or(comps_final.total),
            objective_end: comps_final.total,
            h: h_now,
            rho,
            alpha,
            mb_size: mb.len(),
        });
        log::info!(
            "outer {}/{}: obj {:.6} -> {:.6}, h = {:.3e}, rho = {:.1e}, |mb| = {}",
            outer + 1,
            cfg.outer_iterations,
            stats.last().unwrap().objective_start,
            comps_final.total,
            h_now,
            rho,
            mb.len()
        );
        if update_multipliers && plan.use_penalty {
            alpha += rho * h_now;
            if h_now.abs() > cfg.theta * h_old.abs() {
                rho = (rho * cfg.beta).min(RHO_CAP);
            }
            h_old = h_now;
        }
    }
    Ok(())
}

/// h(W) of a plain matrix, outside any tape.
fn residual(w: &Array2<f64>) -> f64 {
    let mut tape = Tape::new();
    let wv = tape.constant(w.clone());
    let h = tape.expm_trace(wv);
    tape.scalar(h)
}

fn problem_objective(
    problem: &TrainingProblem,
    model: &IcanModel,
    cfg: &IcanConfig,
    mask: &Array2<f64>,
    plan: &StagePlan,
    alpha: f64,
    rho: f64,
) -> Result<Components, IcanError> {
    let mut tape = Tape::new();
    let params = stage_params(&mut tape, model);
    let (_, comps) = problem.objective_on_tape(&mut tape, cfg, &params, mask, plan, alpha, rho);
    if let Some(op) = tape.poisoned() {
        return Err(IcanError::Divergence { op: op.to_string(), components: comps.to_string() });
    }
    Ok(comps)
}

fn apply_updates(
    tape: &Tape,
    params: &TapedParams,
    model: &mut IcanModel,
    lr: f64,
    plan: &StagePlan,
) {
    let step = |target: &mut Array2<f64>, v: Var| {
        if let Some(g) = tape.grad(v) {
            target.zip_mut_with(g, |t, &g| *t -= lr * g);
        }
    };
    if plan.update_autoencoder {
        for (dense, &(w, b)) in model.encoder.iter_mut().zip(&params.encoder) {
            step(&mut dense.w, w);
            step(&mut dense.b, b);
        }
        for (dense, &(w, b)) in model.decoder.iter_mut().zip(&params.decoder) {
            step(&mut dense.w, w);
            step(&mut dense.b, b);
        }
    }
    if plan.update_ranking {
        for (dense, &(w, b)) in model.ranking.iter_mut().zip(&params.ranking) {
            step(&mut dense.w, w);
            step(&mut dense.b, b);
        }
    }
    if plan.update_w {
        step(&mut model.w_causal, params.w_causal);
    }
}

mod checkpoint {
    use super::{Dense, IcanConfig, IcanError, IcanModel};
    use ndarray::Array2;
    use serde::{Deserialize, Serialize};
    use std::collections::BTreeMap;

    pub const FORMAT_VERSION: u32 = 1;

    #[derive(Serialize, Deserialize)]
    pub struct MatrixSer {
        pub rows: usize,
        pub cols: usize,
        pub data: Vec<f64>,
    }

    impl From<&Array2<f64>> for MatrixSer {
        fn from(m: &Array2<f64>) -> Self {
            MatrixSer {
                rows: m.nrows(),
                cols: m.ncols(),
                data: m.iter().cloned().collect(),
            }
        }
    }

    impl MatrixSer {
        pub fn into_array(self) -> Result<Array2<f64>, IcanError> {
            Array2::from_shape_vec((self.rows, self.cols), self.data)
                .map_err(|e| IcanError::Checkpoint(e.to_string()))
        }
    }

    #[derive(Serialize, Deserialize)]
    pub struct CheckpointFile {
        pub version: u32,
        pub config: IcanConfig,
        pub seed: u64,
        pub weights: BTreeMap<String, MatrixSer>,
        pub mb_columns: Vec<usize>,
        pub threshold_used: f64,
    }

    pub fn to_file(model: &IcanModel) -> CheckpointFile {
        let mut weights = BTreeMap::new();
        let m = model.config.injection_layer;
        for (idx, d) in model.encoder.iter().enumerate() {
            // Encoder layer numbering skips the weightless injection layer.
            let layer = if idx < m { idx } else { idx + 1 };
            weights.insert(format!("w1_{layer}"), (&d.w).into());
            weights.insert(format!("b1_{layer}"), (&d.b).into());
        }
        for (idx, d) in model.decoder.iter().enumerate() {
            weights.insert(format!("w2_{}", idx + 1), (&d.w).into());
            weights.insert(format!("b2_{}", idx + 1), (&d.b).into());
        }
        for (idx, d) in model.ranking.iter().enumerate() {
            weights.insert(format!("w3_{}", idx + 1), (&d.w).into());
            weights.insert(format!("b3_{}", idx + 1), (&d.b).into());
        }
        weights.insert("w_causal".into(), (&model.w_causal).into());
        CheckpointFile {
            version: FORMAT_VERSION,
            seed: model.config.seed,
            config: model.config.clone(),
            weights,
            mb_columns: model.mb_columns.clone(),
            threshold_used: model.threshold_used,
        }
    }

    pub fn from_file(mut file: CheckpointFile) -> Result<IcanModel, IcanError> {
        if file.version != FORMAT_VERSION {
            return Err(IcanError::Checkpoint(format!(
                "unsupported checkpoint version {}",
                file.version
            )));
        }
        let cfg = file.config.clone();
        let mut take = |name: String| -> Result<Array2<f64>, IcanError> {
            file.weights
                .remove(&name)
                .ok_or_else(|| IcanError::Checkpoint(format!("missing weight `{name}`")))?
                .into_array()
        };
        let m = cfg.injection_layer;
        let l = cfg.hidden_layers;
        let mut encoder = Vec::new();
        for layer in (0..=l).filter(|&i| i != m) {
            encoder.push(Dense { w: take(format!("w1_{layer}"))?, b: take(format!("b1_{layer}"))? });
        }
        let mut decoder = Vec::new();
        for layer in 1..m {
            decoder.push(Dense { w: take(format!("w2_{layer}"))?, b: take(format!("b2_{layer}"))? });
        }
        let mut ranking = Vec::new();
        for layer in 1..=(cfg.ranking_layers + 1) {
            ranking.push(Dense { w: take(format!("w3_{layer}"))?, b: take(format!("b3_{layer}"))? });
        }
        let w_causal = take("w_causal".into())?;
        Ok(IcanModel {
            config: cfg,
            encoder,
            decoder,
            ranking,
            w_causal,
            mb_columns: file.mb_columns,
            threshold_used: file.threshold_used,
        })
    }
}
