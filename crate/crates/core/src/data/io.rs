use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{read_edge_list, write_edge_list, FeatureMatrix, Graph, LabelVector};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub graph: Graph,
    pub features: FeatureMatrix,
    pub labels: LabelVector,
}

impl Dataset {
    /// Content hash of the edges, features and labels.
    pub fn fingerprint(&self) -> u64 {
        let edges: Vec<(usize, usize)> = self.graph.edges().collect();
        let parts = (
            self.graph.node_count(),
            edges,
            crate::fingerprint::hash_f64s(self.features.as_array().iter()),
            self.labels.as_slice(),
        );
        crate::fingerprint::config_hash(&parts)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetPaths {
    pub edges: PathBuf,
    pub features: PathBuf,
    pub labels: PathBuf,
}

impl DatasetPaths {
    /// `edges.tsv`, `features.csv` and `labels.txt` inside `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        DatasetPaths {
            edges: dir.join("edges.tsv"),
            features: dir.join("features.csv"),
            labels: dir.join("labels.txt"),
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Comma-separated decimals, one row per node. Rows must have equal length.
pub fn read_features(path: &Path) -> Result<FeatureMatrix> {
    let text = read_text(path)?;
    let mut values = Vec::new();
    let mut dim = None;
    let mut rows = 0;
    for (lineno, line) in data_lines(&text) {
        let start = values.len();
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("non-numeric feature `{}`", field.trim())))?;
            if !v.is_finite() {
                return Err(Error::parse(path, lineno, format!("non-finite feature `{}`", field.trim())));
            }
            values.push(v);
        }
        let width = values.len() - start;
        match dim {
            None => dim = Some(width),
            Some(d) if d != width => {
                return Err(Error::parse(path, lineno, format!("expected {d} features, found {width}")));
            }
            _ => {}
        }
        rows += 1;
    }
    let x = Array2::from_shape_vec((rows, dim.unwrap_or(0)), values).expect("row widths checked");
    FeatureMatrix::new(x)
}

/// One nonnegative integer label per line.
pub fn read_labels(path: &Path) -> Result<LabelVector> {
    let text = read_text(path)?;
    let labels = data_lines(&text)
        .map(|(lineno, line)| {
            line.parse::<usize>()
                .map_err(|_| Error::parse(path, lineno, format!("invalid label `{line}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LabelVector::new(labels))
}

/// Loads the three dataset files and checks that they agree on the node
/// count. Nodes are numbered in file order.
pub fn load_dataset(paths: &DatasetPaths) -> Result<Dataset> {
    let features = read_features(&paths.features)?;
    let labels = read_labels(&paths.labels)?;
    let n = features.rows();
    if labels.len() != n {
        return Err(Error::Input(format!(
            "{} has {n} feature rows but {} has {} labels",
            paths.features.display(),
            paths.labels.display(),
            labels.len()
        )));
    }
    let graph = read_edge_list(&paths.edges, Some(n))?;
    Ok(Dataset { graph, features, labels })
}

fn write_text(path: &Path, text: String) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn push_row(out: &mut String, row: impl IntoIterator<Item = f64>) {
    for (j, v) in row.into_iter().enumerate() {
        if j > 0 {
            out.push(',');
        }
        // `{}` on f64 prints the shortest string that parses back exactly.
        write!(out, "{v}").unwrap();
    }
    out.push('\n');
}

pub fn write_features(path: &Path, x: &FeatureMatrix) -> Result<()> {
    let mut out = String::new();
    for row in x.view().rows() {
        push_row(&mut out, row.iter().copied());
    }
    write_text(path, out)
}

pub fn write_labels(path: &Path, labels: &LabelVector) -> Result<()> {
    let mut out = String::new();
    for &c in labels.as_slice() {
        writeln!(out, "{c}").unwrap();
    }
    write_text(path, out)
}

pub fn save_dataset(paths: &DatasetPaths, data: &Dataset) -> Result<()> {
    write_edge_list(&paths.edges, &data.graph)?;
    write_features(&paths.features, &data.features)?;
    write_labels(&paths.labels, &data.labels)
}

/// Writes `id,v0,v1,...` rows after a header; `comment` lines are emitted
/// first, each prefixed with `# `.
pub fn write_embeddings(path: &Path, emb: ArrayView2<'_, f64>, comment: &[String]) -> Result<()> {
    let mut out = String::new();
    for c in comment {
        writeln!(out, "# {c}").unwrap();
    }
    out.push_str("id");
    for j in 0..emb.ncols() {
        write!(out, ",v{j}").unwrap();
    }
    out.push('\n');
    for (i, row) in emb.rows().into_iter().enumerate() {
        write!(out, "{i},").unwrap();
        push_row(&mut out, row.iter().copied());
    }
    write_text(path, out)
}

/// Reads a file written by [`write_embeddings`]; rows must appear in id order.
pub fn read_embeddings(path: &Path) -> Result<Array2<f64>> {
    let text = read_text(path)?;
    let mut lines = data_lines(&text);
    let Some((_, header)) = lines.next() else {
        return Ok(Array2::zeros((0, 0)));
    };
    let dim = header.split(',').count() - 1;
    let mut values = Vec::new();
    let mut rows = 0;
    for (lineno, line) in lines {
        let mut fields = line.split(',');
        let id = fields.next().unwrap_or("");
        if id.trim().parse::<usize>().ok() != Some(rows) {
            return Err(Error::parse(path, lineno, format!("expected id {rows}, found `{id}`")));
        }
        let start = values.len();
        for f in fields {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("non-numeric value `{}`", f.trim())))?;
            values.push(v);
        }
        if values.len() - start != dim {
            return Err(Error::parse(path, lineno, format!("expected {dim} values")));
        }
        rows += 1;
    }
    Ok(Array2::from_shape_vec((rows, dim), values).expect("row widths checked"))
}
