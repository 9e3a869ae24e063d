//! Minimal dense reverse-mode differentiation engine.
//!
//! A [`Tape`] records primitive applications in forward order; [`Tape::backward`]
//! replays them in reverse, accumulating gradients into every recorded operand
//! that requires them. The primitive set is exactly what the training
//! objective needs, including the matrix-exponential trace of the acyclicity
//! term. All computation is in f64.
//!
//! Shape mismatches are programming errors and panic with the primitive name.
//! Non-finite forward values poison the tape instead of panicking; callers
//! inspect [`Tape::poisoned`] before trusting results.

use ndarray::{s, Array2, Axis};
use rayon::prelude::*;
use std::sync::Arc;

/// Handle to a tensor recorded on a tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

/// Row-major sparse matrix used as a constant left operand of [`Tape::spmm`].
/// Stores both row and column views so forward and backward products stream
/// over contiguous per-row entries.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    rows: Vec<Vec<(u32, f64)>>,
    cols: Vec<Vec<(u32, f64)>>,
}

impl SparseMatrix {
    pub fn from_dense(m: &Array2<f64>, tol: f64) -> Self {
        let (n_rows, n_cols) = m.dim();
        let mut rows = vec![Vec::new(); n_rows];
        let mut cols = vec![Vec::new(); n_cols];
        for i in 0..n_rows {
            for j in 0..n_cols {
                let v = m[(i, j)];
                if v.abs() > tol {
                    rows[i].push((j as u32, v));
                    cols[j].push((i as u32, v));
                }
            }
        }
        SparseMatrix { n_rows, n_cols, rows, cols }
    }

    pub fn from_entries(n_rows: usize, n_cols: usize, entries: &[(u32, u32, f64)]) -> Self {
        let mut rows = vec![Vec::new(); n_rows];
        let mut cols = vec![Vec::new(); n_cols];
        for &(i, j, v) in entries {
            rows[i as usize].push((j, v));
            cols[j as usize].push((i, v));
        }
        for r in &mut rows {
            r.sort_unstable_by_key(|&(j, _)| j);
        }
        for c in &mut cols {
            c.sort_unstable_by_key(|&(i, _)| i);
        }
        SparseMatrix { n_rows, n_cols, rows, cols }
    }

    /// out = S · X, rows computed independently (deterministic reduction).
    fn mul_dense(&self, x: &Array2<f64>) -> Array2<f64> {
        let k = x.ncols();
        let mut out = Array2::zeros((self.n_rows, k));
        let xs = x.as_slice().expect("dense input is contiguous");
        out.axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(i, mut row)| {
                let row = row.as_slice_mut().expect("output row is contiguous");
                for &(j, w) in &self.rows[i] {
                    let src = &xs[j as usize * k..(j as usize + 1) * k];
                    for (o, &v) in row.iter_mut().zip(src) {
                        *o += w * v;
                    }
                }
            });
        out
    }

    /// out = Sᵀ · G, used by the spmm backward rule.
    fn t_mul_dense(&self, g: &Array2<f64>) -> Array2<f64> {
        let k = g.ncols();
        let mut out = Array2::zeros((self.n_cols, k));
        let gs = g.as_slice().expect("dense input is contiguous");
        out.axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(j, mut row)| {
                let row = row.as_slice_mut().expect("output row is contiguous");
                for &(i, w) in &self.cols[j] {
                    let src = &gs[i as usize * k..(i as usize + 1) * k];
                    for (o, &v) in row.iter_mut().zip(src) {
                        *o += w * v;
                    }
                }
            });
        out
    }
}

enum Op {
    Leaf,
    Matmul(Var, Var),
    Spmm(Arc<SparseMatrix>, Var),
    Add(Var, Var),
    AddBiasRow(Var, Var),
    Hadamard(Var, Var),
    Relu(Var),
    Sigmoid(Var),
    ConcatCols(Var, Var),
    SliceCols(Var, usize, usize),
    Transpose(Var),
    ScalarMul(Var, f64),
    Sum(Var),
    FrobeniusSq(Var),
    Log(Var),
    Exp(Var),
    Clamp(Var, f64, f64),
    LogsumexpRows(Var),
    ListMle { scores: Var, perm: Vec<usize>, suffix_lse: Vec<f64> },
    ExpmTrace { input: Var, expq: Array2<f64> },
}

struct Node {
    value: Array2<f64>,
    grad: Option<Array2<f64>>,
    requires_grad: bool,
    op: Op,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    poisoned: Option<String>,
}

fn scalar_array(v: f64) -> Array2<f64> {
    Array2::from_elem((1, 1), v)
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn var(&mut self, value: Array2<f64>) -> Var {
        self.push(value, true, Op::Leaf)
    }

    pub fn constant(&mut self, value: Array2<f64>) -> Var {
        self.push(value, false, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.nodes[v.0].value
    }

    /// Value of a 1×1 tensor.
    pub fn scalar(&self, v: Var) -> f64 {
        let m = &self.nodes[v.0].value;
        assert_eq!(m.dim(), (1, 1), "scalar() on non-scalar tensor");
        m[(0, 0)]
    }

    pub fn grad(&self, v: Var) -> Option<&Array2<f64>> {
        self.nodes[v.0].grad.as_ref()
    }

    /// First primitive whose forward output went non-finite, if any.
    pub fn poisoned(&self) -> Option<&str> {
        self.poisoned.as_deref()
    }

    fn push(&mut self, value: Array2<f64>, requires_grad: bool, op: Op) -> Var {
        if self.poisoned.is_none() {
            let name = op_name(&op);
            if name != "leaf" && !value.iter().all(|x| x.is_finite()) {
                self.poisoned = Some(name.to_string());
            }
        }
        self.nodes.push(Node { value, grad: None, requires_grad, op });
        Var(self.nodes.len() - 1)
    }

    fn req(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (ar, ac) = self.nodes[a.0].value.dim();
        let (br, bc) = self.nodes[b.0].value.dim();
        assert_eq!(ac, br, "matmul: inner dimensions {ar}x{ac} . {br}x{bc}");
        let value = self.nodes[a.0].value.dot(&self.nodes[b.0].value);
        let rg = self.req(a) || self.req(b);
        self.push(value, rg, Op::Matmul(a, b))
    }

    /// Constant-sparse × dense product; gradients flow to the dense operand.
    pub fn spmm(&mut self, s: &Arc<SparseMatrix>, x: Var) -> Var {
        let (xr, _) = self.nodes[x.0].value.dim();
        assert_eq!(s.n_cols, xr, "spmm: sparse {}x{} . dense {}x_", s.n_rows, s.n_cols, xr);
        let value = s.mul_dense(&self.nodes[x.0].value);
        let rg = self.req(x);
        self.push(value, rg, Op::Spmm(Arc::clone(s), x))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        assert_eq!(
            self.nodes[a.0].value.dim(),
            self.nodes[b.0].value.dim(),
            "add: shape mismatch"
        );
        let value = &self.nodes[a.0].value + &self.nodes[b.0].value;
        let rg = self.req(a) || self.req(b);
        self.push(value, rg, Op::Add(a, b))
    }

    /// X (n×k) plus a bias row (1×k) broadcast over rows.
    pub fn add_bias_row(&mut self, x: Var, bias: Var) -> Var {
        let (_, xc) = self.nodes[x.0].value.dim();
        let (br, bc) = self.nodes[bias.0].value.dim();
        assert!(br == 1 && bc == xc, "add_bias_row: bias {br}x{bc} vs width {xc}");
        let value = &self.nodes[x.0].value + &self.nodes[bias.0].value;
        let rg = self.req(x) || self.req(bias);
        self.push(value, rg, Op::AddBiasRow(x, bias))
    }

    pub fn hadamard(&mut self, a: Var, b: Var) -> Var {
        assert_eq!(
            self.nodes[a.0].value.dim(),
            self.nodes[b.0].value.dim(),
            "hadamard: shape mismatch"
        );
        let value = &self.nodes[a.0].value * &self.nodes[b.0].value;
        let rg = self.req(a) || self.req(b);
        self.push(value, rg, Op::Hadamard(a, b))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let value = self.nodes[x.0].value.mapv(|v| v.max(0.0));
        let rg = self.req(x);
        self.push(value, rg, Op::Relu(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let value = self.nodes[x.0].value.mapv(stable_sigmoid);
        let rg = self.req(x);
        self.push(value, rg, Op::Sigmoid(x))
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Var {
        let (ar, ac) = self.nodes[a.0].value.dim();
        let (br, bc) = self.nodes[b.0].value.dim();
        assert_eq!(ar, br, "concat_cols: row mismatch {ar} vs {br}");
        let mut value = Array2::zeros((ar, ac + bc));
        value.slice_mut(s![.., ..ac]).assign(&self.nodes[a.0].value);
        value.slice_mut(s![.., ac..]).assign(&self.nodes[b.0].value);
        let rg = self.req(a) || self.req(b);
        self.push(value, rg, Op::ConcatCols(a, b))
    }

    pub fn slice_cols(&mut self, x: Var, lo: usize, hi: usize) -> Var {
        let (_, xc) = self.nodes[x.0].value.dim();
        assert!(lo < hi && hi <= xc, "slice_cols: [{lo}, {hi}) out of width {xc}");
        let value = self.nodes[x.0].value.slice(s![.., lo..hi]).to_owned();
        let rg = self.req(x);
        self.push(value, rg, Op::SliceCols(x, lo, hi))
    }

    pub fn transpose(&mut self, x: Var) -> Var {
        let value = self.nodes[x.0].value.t().to_owned();
        let rg = self.req(x);
        self.push(value, rg, Op::Transpose(x))
    }

    pub fn scalar_mul(&mut self, x: Var, c: f64) -> Var {
        let value = self.nodes[x.0].value.mapv(|v| v * c);
        let rg = self.req(x);
        self.push(value, rg, Op::ScalarMul(x, c))
    }

    /// Full sum reduced to 1×1.
    pub fn sum(&mut self, x: Var) -> Var {
        let value = scalar_array(self.nodes[x.0].value.sum());
        let rg = self.req(x);
        self.push(value, rg, Op::Sum(x))
    }

    /// Squared Frobenius norm reduced to 1×1.
    pub fn frobenius_sq(&mut self, x: Var) -> Var {
        let value = scalar_array(self.nodes[x.0].value.iter().map(|v| v * v).sum());
        let rg = self.req(x);
        self.push(value, rg, Op::FrobeniusSq(x))
    }

    pub fn log(&mut self, x: Var) -> Var {
        let value = self.nodes[x.0].value.mapv(f64::ln);
        let rg = self.req(x);
        self.push(value, rg, Op::Log(x))
    }

    pub fn exp(&mut self, x: Var) -> Var {
        let value = self.nodes[x.0].value.mapv(f64::exp);
        let rg = self.req(x);
        self.push(value, rg, Op::Exp(x))
    }

    /// Elementwise clamp; gradient passes through strictly inside the bounds.
    pub fn clamp(&mut self, x: Var, lo: f64, hi: f64) -> Var {
        let value = self.nodes[x.0].value.mapv(|v| v.clamp(lo, hi));
        let rg = self.req(x);
        self.push(value, rg, Op::Clamp(x, lo, hi))
    }

    /// Row-wise log Σ exp, n×k → n×1, with max subtraction.
    pub fn logsumexp_rows(&mut self, x: Var) -> Var {
        let xv = &self.nodes[x.0].value;
        let (n, _) = xv.dim();
        let mut value = Array2::zeros((n, 1));
        for i in 0..n {
            value[(i, 0)] = logsumexp_slice(xv.row(i).as_slice().expect("contiguous row"));
        }
        let rg = self.req(x);
        self.push(value, rg, Op::LogsumexpRows(x))
    }

    /// Negative log Plackett–Luce likelihood of the permutation `perm` under
    /// `scores` (n×1): −Σ_i [ s_{π(i)} − log Σ_{k≥i} exp(s_{π(k)}) ],
    /// accumulated tail-first with max subtraction.
    pub fn listmle_loss(&mut self, scores: Var, perm: &[usize]) -> Var {
        let sv = &self.nodes[scores.0].value;
        let (n, c) = sv.dim();
        assert_eq!(c, 1, "listmle_loss: scores must be n×1");
        assert_eq!(perm.len(), n, "listmle_loss: permutation length {} vs n {n}", perm.len());
        let mut suffix_lse = vec![0.0; n];
        let mut loss = 0.0;
        if n > 0 {
            let mut running = f64::NEG_INFINITY;
            for i in (0..n).rev() {
                let si = sv[(perm[i], 0)];
                running = log_add_exp(running, si);
                suffix_lse[i] = running;
                loss += running - si;
            }
        }
        let value = scalar_array(loss);
        let rg = self.req(scores);
        self.push(
            value,
            rg,
            Op::ListMle { scores, perm: perm.to_vec(), suffix_lse },
        )
    }

    /// Acyclicity residual h(W) = tr(e^{W⊙W}) − k for square W (k×k).
    /// Forward by scaling-and-squaring on the truncated series of Q = W⊙W;
    /// backward via ∂tr(e^Q)/∂Q = (e^Q)ᵀ and the chain rule
    /// ∂h/∂W = 2 W ⊙ (e^Q)ᵀ.
    pub fn expm_trace(&mut self, w: Var) -> Var {
        let wv = &self.nodes[w.0].value;
        let (r, c) = wv.dim();
        assert_eq!(r, c, "expm_trace: W must be square, got {r}x{c}");
        let q = wv * wv;
        let expq = expm(&q);
        let h = expq.diag().sum() - r as f64;
        let rg = self.req(w);
        self.push(scalar_array(h), rg, Op::ExpmTrace { input: w, expq })
    }

    /// Reverse pass from a scalar output. Gradients accumulate (+=) into every
    /// recorded tensor that requires them; forward values are left untouched.
    pub fn backward(&mut self, out: Var) {
        assert!(
            self.poisoned.is_none(),
            "backward on poisoned tape (non-finite forward value in `{}`)",
            self.poisoned.as_deref().unwrap_or("")
        );
        assert_eq!(self.nodes[out.0].value.dim(), (1, 1), "backward: output must be scalar");
        self.nodes[out.0].grad = Some(scalar_array(1.0));
        for id in (0..=out.0).rev() {
            let g = match self.nodes[id].grad.take() {
                Some(g) => g,
                None => continue,
            };
            if !self.nodes[id].requires_grad {
                self.nodes[id].grad = Some(g);
                continue;
            }
            self.apply_backward(id, &g);
            self.nodes[id].grad = Some(g);
        }
    }

    fn accumulate(&mut self, v: Var, delta: Array2<f64>) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        match &mut self.nodes[v.0].grad {
            Some(g) => *g += &delta,
            slot @ None => *slot = Some(delta),
        }
    }

    fn apply_backward(&mut self, id: usize, g: &Array2<f64>) {
        // The borrow dance: clone out the pieces the rules need. All cloned
        // matrices are small or amortized against the matmuls they back.
        match &self.nodes[id].op {
            Op::Leaf => {}
            Op::Matmul(a, b) => {
                let (a, b) = (*a, *b);
                let ga = g.dot(&self.nodes[b.0].value.t());
                let gb = self.nodes[a.0].value.t().dot(g);
                self.accumulate(a, ga);
                self.accumulate(b, gb);
            }
            Op::Spmm(s, x) => {
                let (s, x) = (Arc::clone(s), *x);
                self.accumulate(x, s.t_mul_dense(g));
            }
            Op::Add(a, b) => {
                let (a, b) = (*a, *b);
                self.accumulate(a, g.clone());
                self.accumulate(b, g.clone());
            }
            Op::AddBiasRow(x, bias) => {
                let (x, bias) = (*x, *bias);
                let gb = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                self.accumulate(x, g.clone());
                self.accumulate(bias, gb);
            }
            Op::Hadamard(a, b) => {
                let (a, b) = (*a, *b);
                let ga = g * &self.nodes[b.0].value;
                let gb = g * &self.nodes[a.0].value;
                self.accumulate(a, ga);
                self.accumulate(b, gb);
            }
            Op::Relu(x) => {
                let x = *x;
                let gx = g * &self.nodes[x.0].value.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
                self.accumulate(x, gx);
            }
            Op::Sigmoid(x) => {
                let x = *x;
                let out = &self.nodes[id].value;
                let gx = g * &(out * &out.mapv(|v| 1.0 - v));
                self.accumulate(x, gx);
            }
            Op::ConcatCols(a, b) => {
                let (a, b) = (*a, *b);
                let ac = self.nodes[a.0].value.ncols();
                let ga = g.slice(s![.., ..ac]).to_owned();
                let gb = g.slice(s![.., ac..]).to_owned();
                self.accumulate(a, ga);
                self.accumulate(b, gb);
            }
            Op::SliceCols(x, lo, hi) => {
                let (x, lo, hi) = (*x, *lo, *hi);
                let mut gx = Array2::zeros(self.nodes[x.0].value.dim());
                gx.slice_mut(s![.., lo..hi]).assign(g);
                self.accumulate(x, gx);
            }
            Op::Transpose(x) => {
                let x = *x;
                self.accumulate(x, g.t().to_owned());
            }
            Op::ScalarMul(x, c) => {
                let (x, c) = (*x, *c);
                self.accumulate(x, g.mapv(|v| v * c));
            }
            Op::Sum(x) => {
                let x = *x;
                let gx = Array2::from_elem(self.nodes[x.0].value.dim(), g[(0, 0)]);
                self.accumulate(x, gx);
            }
            Op::FrobeniusSq(x) => {
                let x = *x;
                let gx = self.nodes[x.0].value.mapv(|v| 2.0 * v * g[(0, 0)]);
                self.accumulate(x, gx);
            }
            Op::Log(x) => {
                let x = *x;
                let gx = g / &self.nodes[x.0].value;
                self.accumulate(x, gx);
            }
            Op::Exp(x) => {
                let x = *x;
                let gx = g * &self.nodes[id].value;
                self.accumulate(x, gx);
            }
            Op::Clamp(x, lo, hi) => {
                let (x, lo, hi) = (*x, *lo, *hi);
                let mask = self.nodes[x.0].value.mapv(|v| if v > lo && v < hi { 1.0 } else { 0.0 });
                self.accumulate(x, g * &mask);
            }
            Op::LogsumexpRows(x) => {
                let x = *x;
                let xv = &self.nodes[x.0].value;
                let out = &self.nodes[id].value;
                let mut gx = Array2::zeros(xv.dim());
                for i in 0..xv.nrows() {
                    let gi = g[(i, 0)];
                    let li = out[(i, 0)];
                    for j in 0..xv.ncols() {
                        gx[(i, j)] = gi * (xv[(i, j)] - li).exp();
                    }
                }
                self.accumulate(x, gx);
            }
            Op::ListMle { scores, perm, suffix_lse } => {
                let scores = *scores;
                let gx = listmle_grad(&self.nodes[scores.0].value, perm, suffix_lse, g[(0, 0)]);
                self.accumulate(scores, gx);
            }
            Op::ExpmTrace { input, expq } => {
                let input = *input;
                let g0 = g[(0, 0)];
                let gx = self.nodes[input.0]
                    .value
                    .indexed_iter()
                    .map(|((i, j), &wij)| 2.0 * wij * expq[(j, i)] * g0)
                    .collect::<Vec<f64>>();
                let dim = self.nodes[input.0].value.dim();
                let gx = Array2::from_shape_vec(dim, gx).expect("shape preserved");
                self.accumulate(input, gx);
            }
        }
    }
}

fn op_name(op: &Op) -> &'static str {
    match op {
        Op::Leaf => "leaf",
        Op::Matmul(..) => "matmul",
        Op::Spmm(..) => "spmm",
        Op::Add(..) => "add",
        Op::AddBiasRow(..) => "add_bias_row",
        Op::Hadamard(..) => "hadamard",
        Op::Relu(..) => "relu",
        Op::Sigmoid(..) => "sigmoid",
        Op::ConcatCols(..) => "concat_cols",
        Op::SliceCols(..) => "slice_cols",
        Op::Transpose(..) => "transpose",
        Op::ScalarMul(..) => "scalar_mul",
        Op::Sum(..) => "sum",
        Op::FrobeniusSq(..) => "frobenius_sq",
        Op::Log(..) => "log",
        Op::Exp(..) => "exp",
        Op::Clamp(..) => "clamp",
        Op::LogsumexpRows(..) => "logsumexp_rows",
        Op::ListMle { .. } => "listmle",
        Op::ExpmTrace { .. } => "expm_trace",
    }
}

fn stable_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

fn logsumexp_slice(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// ∂ListMLE/∂s at position π(j): Σ_{i ≤ j} exp(s_{π(j)} − L_i) − 1, where
/// L_i is the suffix logsumexp. Every exponent is ≤ 0, so the prefix-sum
/// fast path is safe unless the score range is extreme.
fn listmle_grad(scores: &Array2<f64>, perm: &[usize], suffix_lse: &[f64], g0: f64) -> Array2<f64> {
    let n = perm.len();
    let mut gx = Array2::zeros(scores.dim());
    if n == 0 {
        return gx;
    }
    let l1 = suffix_lse[0];
    let spread = l1 - suffix_lse[n - 1];
    if spread < 500.0 {
        // Prefix sums of exp(L_1 − L_i), rescaled per position.
        let mut prefix = 0.0;
        for j in 0..n {
            prefix += (l1 - suffix_lse[j]).exp();
            let sj = scores[(perm[j], 0)];
            gx[(perm[j], 0)] = g0 * ((sj - l1).exp() * prefix - 1.0);
        }
    } else {
        for j in 0..n {
            let sj = scores[(perm[j], 0)];
            let mut acc = 0.0;
            for &li in suffix_lse.iter().take(j + 1) {
                acc += (sj - li).exp();
            }
            gx[(perm[j], 0)] = g0 * (acc - 1.0);
        }
    }
    gx
}

/// Matrix exponential of an entrywise-nonnegative matrix by
/// scaling-and-squaring on the truncated Taylor series (order 18, scaled so
/// ‖Q‖₁/2^s ≤ 0.5).
fn expm(q: &Array2<f64>) -> Array2<f64> {
    let k = q.nrows();
    let norm = (0..k)
        .map(|j| (0..k).map(|i| q[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut s = 0u32;
    let mut scale = 1.0;
    while norm * scale > 0.5 {
        s += 1;
        scale *= 0.5;
    }
    let b = q.mapv(|v| v * scale);
    let mut e = Array2::eye(k);
    let mut term = Array2::eye(k);
    for j in 1..=18 {
        term = term.dot(&b) / j as f64;
        e += &term;
    }
    for _ in 0..s {
        e = e.dot(&e);
    }
    e
}

/// Max relative error between the reverse-mode gradient of `f` at `x` and a
/// central finite-difference estimate: max |g_ad − g_fd| / max(1, |g_fd|).
/// `f` must build a scalar output on the provided tape.
pub fn grad_check<F>(f: F, x: &Array2<f64>, eps: f64) -> f64
where
    F: Fn(&mut Tape, Var) -> Var,
{
    let mut tape = Tape::new();
    let xv = tape.var(x.clone());
    let out = f(&mut tape, xv);
    assert!(tape.poisoned().is_none(), "grad_check: forward poisoned");
    tape.backward(out);
    let g_ad = tape.grad(xv).cloned().unwrap_or_else(|| Array2::zeros(x.dim()));

    let eval = |x: &Array2<f64>| -> f64 {
        let mut t = Tape::new();
        let v = t.var(x.clone());
        let out = f(&mut t, v);
        t.scalar(out)
    };
    let mut max_err = 0.0f64;
    let mut xp = x.clone();
    for idx in 0..x.len() {
        let (r, c) = (idx / x.ncols(), idx % x.ncols());
        let orig = xp[(r, c)];
        xp[(r, c)] = orig + eps;
        let fp = eval(&xp);
        xp[(r, c)] = orig - eps;
        let fm = eval(&xp);
        xp[(r, c)] = orig;
        let g_fd = (fp - fm) / (2.0 * eps);
        let err = (g_ad[(r, c)] - g_fd).abs() / g_fd.abs().max(1.0);
        max_err = max_err.max(err);
    }
    max_err
}
