//! CSV readers/writers for the pipeline's file formats. Every writer stamps
//! the run-config hash as a header comment; node columns carry the original
//! node tokens of the source edge list.

use ican::graph::Graph;
use ican::model::Ranking;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

pub fn node_token(g: &Graph, v: usize) -> String {
    match g.node_labels() {
        Some(labels) => labels[v].clone(),
        None => v.to_string(),
    }
}

/// labels CSV: `node_id,influence_score` plus parameters in the header.
pub fn write_labels(
    path: &Path,
    g: &Graph,
    scores: &ican::sir::InfluenceScores,
    config_hash: &str,
) -> std::io::Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "# config_hash={config_hash}");
    let _ = writeln!(
        out,
        "# gamma={} delta={} sims={} seed={} gamma_c={}",
        scores.gamma,
        scores.config.delta,
        scores.config.sims_per_node,
        scores.config.seed,
        scores.gamma_c
    );
    let _ = writeln!(out, "node_id,influence_score");
    for (v, y) in scores.y.iter().enumerate() {
        let _ = writeln!(out, "{},{}", node_token(g, v), y);
    }
    std::fs::write(path, out)
}

/// ranking CSV: `node,score,rank` (rank 0 = most important).
pub fn write_ranking(
    path: &Path,
    g: &Graph,
    ranking: &Ranking,
    config_hash: &str,
) -> std::io::Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "# config_hash={config_hash}");
    let _ = writeln!(out, "node,score,rank");
    for v in 0..g.node_count() {
        let _ = writeln!(out, "{},{},{}", node_token(g, v), ranking.scores[v], ranking.ranks[v]);
    }
    std::fs::write(path, out)
}

/// feature CSV: one row per node in index order.
pub fn write_features(
    path: &Path,
    features: &ican::embed::FeatureMatrix,
    config_hash: &str,
) -> std::io::Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "# config_hash={config_hash}");
    for row in features.data.rows() {
        let fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", fields.join(","));
    }
    std::fs::write(path, out)
}

/// Reads a `node,value[,...]` CSV into a per-node-index vector, joining on
/// the graph's node tokens. The value is taken from `value_column`.
pub fn read_node_values(
    path: &Path,
    g: &Graph,
    value_column: usize,
) -> Result<Vec<f64>, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut by_token: HashMap<String, f64> = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() <= value_column {
            return Err(format!(
                "{} line {}: expected at least {} columns",
                path.display(),
                lineno + 1,
                value_column + 1
            ));
        }
        let value: f64 = match fields[value_column].parse() {
            Ok(v) => v,
            // Header row.
            Err(_) if by_token.is_empty() => continue,
            Err(e) => {
                return Err(format!("{} line {}: {e}", path.display(), lineno + 1));
            }
        };
        by_token.insert(fields[0].to_string(), value);
    }
    let mut values = Vec::with_capacity(g.node_count());
    for v in 0..g.node_count() {
        let token = node_token(g, v);
        match by_token.get(&token) {
            Some(&val) => values.push(val),
            None => return Err(format!("{}: no row for node `{token}`", path.display())),
        }
    }
    Ok(values)
}

pub fn write_topk(
    hist_path: &Path,
    scatter_path: &Path,
    data: &ican::eval::TopkData,
    g: &Graph,
    config_hash: &str,
) -> std::io::Result<()> {
    let mut hist = String::new();
    let _ = writeln!(hist, "# config_hash={config_hash}");
    let _ = writeln!(hist, "degree,relative_frequency");
    for &(d, f) in &data.histogram {
        let _ = writeln!(hist, "{d},{f}");
    }
    std::fs::write(hist_path, hist)?;
    let mut scatter = String::new();
    let _ = writeln!(scatter, "# config_hash={config_hash}");
    let _ = writeln!(scatter, "node,degree,score");
    for &(v, d, s) in &data.scatter {
        let _ = writeln!(scatter, "{},{d},{s}", node_token(g, v));
    }
    std::fs::write(scatter_path, scatter)
}
