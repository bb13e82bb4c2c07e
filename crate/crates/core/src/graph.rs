//! Undirected graphs in CSR form, node features/labels, and the symmetric
//! normalized adjacency `D^{-1/2} A D^{-1/2}` used by PPR and the GCN encoder.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Immutable undirected graph. Both directions of every edge are stored;
/// each adjacency list is sorted, so edge order is deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl Graph {
    /// Symmetrizes, deduplicates and drops self-loops.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut pairs = BTreeSet::new();
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Input(format!(
                    "edge ({u}, {v}) references a node outside [0, {n})"
                )));
            }
            if u != v {
                pairs.insert((u, v));
                pairs.insert((v, u));
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(pairs.len());
        for &(u, v) in &pairs {
            row_ptr[u + 1] += 1;
            col_idx.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Graph {
            n,
            row_ptr,
            col_idx,
        })
    }

    pub fn empty(n: usize) -> Self {
        Graph {
            n,
            row_ptr: vec![0; n + 1],
            col_idx: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.col_idx.len() / 2
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.degree(i)).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Undirected edges as `(u, v)` with `u < v`, in CSR order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    /// Keeps the undirected edges for which `keep(u, v)` is true; `u < v`.
    pub fn filter_edges(&self, mut keep: impl FnMut(usize, usize) -> bool) -> Graph {
        let kept: Vec<(usize, usize)> = self.edges().filter(|&(u, v)| keep(u, v)).collect();
        Graph::from_edges(self.n, &kept).expect("filtered edges are in range")
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut a = Array2::zeros((self.n, self.n));
        for (u, v) in self.edges() {
            a[[u, v]] = 1.0;
            a[[v, u]] = 1.0;
        }
        a
    }
}

/// Reads a `u<TAB>v` edge list. Lines starting with `#` and blank lines are
/// skipped. When `n` is `None` the node count is one past the largest index.
pub fn read_edge_list(path: &Path, n: Option<usize>) -> Result<Graph> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split('\t');
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(path, lineno + 1, "expected `u<TAB>v`"));
        };
        let parse = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::parse(path, lineno + 1, format!("invalid node index `{s}`")))
        };
        let (u, v) = (parse(a)?, parse(b)?);
        if let Some(n) = n {
            if u >= n || v >= n {
                return Err(Error::parse(
                    path,
                    lineno + 1,
                    format!("edge ({u}, {v}) out of range for {n} nodes"),
                ));
            }
        }
        edges.push((u, v));
    }
    let n = n.unwrap_or_else(|| edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0));
    Graph::from_edges(n, &edges)
}

pub fn write_edge_list(path: &Path, g: &Graph) -> Result<()> {
    let mut out = String::new();
    for (u, v) in g.edges() {
        writeln!(out, "{u}\t{v}").unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Node features, one row per node. All entries are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix(Array2<f64>);

impl FeatureMatrix {
    pub fn new(x: Array2<f64>) -> Result<Self> {
        if let Some(((i, j), v)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Input(format!("feature ({i}, {j}) is not finite: {v}")));
        }
        Ok(FeatureMatrix(x))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

/// Class index per node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    labels: Vec<usize>,
    num_classes: usize,
}

impl LabelVector {
    /// The class count is one past the largest label.
    pub fn new(labels: Vec<usize>) -> Self {
        let num_classes = labels.iter().map(|&c| c + 1).max().unwrap_or(0);
        LabelVector {
            labels,
            num_classes,
        }
    }

    pub fn with_classes(labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if let Some(&c) = labels.iter().find(|&&c| c >= num_classes) {
            return Err(Error::Input(format!(
                "label {c} outside [0, {num_classes})"
            )));
        }
        Ok(LabelVector {
            labels,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    pub fn get(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &c in &self.labels {
            counts[c] += 1;
        }
        counts
    }
}

/// Sparse `D^{-1/2} A D^{-1/2}` in CSR form. Rows of degree-0 nodes are empty.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    self_loops: bool,
}

impl NormalizedAdjacency {
    /// With `add_self_loops`, `A + I` is normalized instead of `A`.
    pub fn new(g: &Graph, add_self_loops: bool) -> Self {
        let n = g.node_count();
        let loop_deg = usize::from(add_self_loops);
        let inv_sqrt: Vec<f64> = (0..n)
            .map(|i| {
                let d = g.degree(i) + loop_deg;
                if d == 0 {
                    0.0
                } else {
                    1.0 / (d as f64).sqrt()
                }
            })
            .collect();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            let nbrs = g.neighbors(i);
            let mut self_pending = add_self_loops;
            for &j in nbrs {
                if self_pending && i < j {
                    col_idx.push(i);
                    values.push(inv_sqrt[i] * inv_sqrt[i]);
                    self_pending = false;
                }
                col_idx.push(j);
                values.push(inv_sqrt[i] * inv_sqrt[j]);
            }
            if self_pending {
                col_idx.push(i);
                values.push(inv_sqrt[i] * inv_sqrt[i]);
            }
            row_ptr.push(col_idx.len());
        }
        NormalizedAdjacency {
            n,
            row_ptr,
            col_idx,
            values,
            self_loops: add_self_loops,
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn has_self_loops(&self) -> bool {
        self.self_loops
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut a = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                a[[i, j]] = v;
            }
        }
        a
    }

    /// Sparse-dense product `Â·X`.
    pub fn spmm(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.nrows() != self.n {
            return Err(Error::Input(format!(
                "spmm: adjacency is {n}x{n} but operand has {} rows",
                x.nrows(),
                n = self.n
            )));
        }
        let mut out = Array2::zeros((self.n, x.ncols()));
        for (i, mut out_row) in out.rows_mut().into_iter().enumerate() {
            for (j, v) in self.row(i) {
                out_row.scaled_add(v, &x.row(j));
            }
        }
        Ok(out)
    }

    /// Dense `Â^r`, computed by repeated sparse products against the identity.
    pub fn dense_power(&self, r: usize) -> Array2<f64> {
        let mut p = Array2::eye(self.n);
        for _ in 0..r {
            p = self.spmm(p.view()).expect("square operand");
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn dedupe_and_self_loop_removal() {
        let g = Graph::from_edges(2, &[(0, 1), (1, 0), (1, 1)]).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert!(g.has_edge(0, 1) && g.has_edge(1, 0));
        assert!(!g.has_edge(1, 1));
    }

    #[test]
    fn empty_edge_list_gives_isolated_nodes() {
        let g = Graph::from_edges(3, &[]).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.degrees(), vec![0, 0, 0]);
    }

    #[test]
    fn path_degrees() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(g.degrees(), vec![1, 2, 1]);
    }

    #[test]
    fn out_of_range_index_is_rejected() {
        let err = Graph::from_edges(2, &[(0, 2)]).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn normalized_single_edge() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let a = NormalizedAdjacency::new(&g, false).to_dense();
        assert_eq!(a, array![[0.0, 1.0], [1.0, 0.0]]);
    }

    #[test]
    fn normalized_triangle() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let a = NormalizedAdjacency::new(&g, false).to_dense();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 0.0 } else { 0.5 };
                assert_abs_diff_eq!(a[[i, j]], want, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn isolated_rows_are_zero() {
        let g = Graph::from_edges(3, &[(1, 2)]).unwrap();
        let a = NormalizedAdjacency::new(&g, false).to_dense();
        assert!(a.row(0).iter().all(|&v| v == 0.0));
        assert!(a.column(0).iter().all(|&v| v == 0.0));
        assert!(a.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn self_loops_on_isolated_node() {
        let g = Graph::from_edges(2, &[]).unwrap();
        let a = NormalizedAdjacency::new(&g, true);
        assert!(a.has_self_loops());
        assert_eq!(a.to_dense(), Array2::<f64>::eye(2));
    }

    #[test]
    fn spmm_identity_zero_and_permutation() {
        let x = array![[1.0, -2.0], [3.0, 4.0], [0.5, 0.25]];
        let eye = NormalizedAdjacency::new(&Graph::empty(3), true);
        assert_eq!(eye.spmm(x.view()).unwrap(), x);

        let zero = NormalizedAdjacency::new(&Graph::empty(3), false);
        assert_eq!(zero.spmm(x.view()).unwrap(), Array2::<f64>::zeros((3, 2)));

        let path = NormalizedAdjacency::new(&Graph::from_edges(2, &[(0, 1)]).unwrap(), false);
        assert_eq!(path.spmm(array![[1.0], [2.0]].view()).unwrap(), array![[2.0], [1.0]]);
    }

    #[test]
    fn spmm_dimension_mismatch() {
        let a = NormalizedAdjacency::new(&Graph::empty(3), false);
        assert!(a.spmm(Array2::<f64>::zeros((2, 1)).view()).is_err());
    }

    #[test]
    fn edge_list_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.tsv");
        let g = Graph::from_edges(5, &[(0, 1), (3, 1), (4, 2)]).unwrap();
        write_edge_list(&path, &g).unwrap();
        assert_eq!(read_edge_list(&path, Some(5)).unwrap(), g);
    }

    #[test]
    fn edge_list_comments_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.tsv");
        fs::write(&path, "# header\n0\t1\n\n1\t2\n").unwrap();
        let g = read_edge_list(&path, None).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);

        fs::write(&path, "0\t1\n1 x\n").unwrap();
        match read_edge_list(&path, None).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn non_finite_features_rejected() {
        assert!(FeatureMatrix::new(array![[1.0, f64::NAN]]).is_err());
    }
}
