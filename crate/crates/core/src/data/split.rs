use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::LabelVector;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SplitSpec {
    /// Fractions of all nodes. Stratified mode applies them per class.
    Ratios {
        train: f64,
        val: f64,
        test: f64,
        #[serde(default)]
        stratified: bool,
    },
    /// `per_class` training nodes from every class; validation and test are
    /// fractions of all nodes drawn from the rest.
    PerClass { per_class: usize, val: f64, test: f64 },
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec::Ratios { train: 0.1, val: 0.1, test: 0.8, stratified: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

fn check_ratios(parts: &[(&str, f64)]) -> Result<()> {
    for &(name, r) in parts {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::Config(format!("split ratio {name} must be in [0, 1], got {r}")));
        }
    }
    let total: f64 = parts.iter().map(|p| p.1).sum();
    if total > 1.0 + 1e-9 {
        return Err(Error::Config(format!("split ratios sum to {total} > 1")));
    }
    Ok(())
}

fn count(n: usize, r: f64) -> usize {
    (n as f64 * r).round() as usize
}

fn by_class(labels: &LabelVector) -> Vec<Vec<usize>> {
    let mut classes = vec![Vec::new(); labels.num_classes()];
    for (i, &c) in labels.as_slice().iter().enumerate() {
        classes[c].push(i);
    }
    classes
}

/// Disjoint train/validation/test node sets. Each set is returned sorted.
pub fn make_split(n: usize, spec: &SplitSpec, labels: &LabelVector, seed: u64) -> Result<DataSplit> {
    if labels.len() != n {
        return Err(Error::Input(format!("{} labels for {n} nodes", labels.len())));
    }
    let mut r = rng::stream(seed, "split", 0);
    let mut split = DataSplit { train: Vec::new(), val: Vec::new(), test: Vec::new() };
    match *spec {
        SplitSpec::Ratios { train, val, test, stratified: false } => {
            check_ratios(&[("train", train), ("val", val), ("test", test)])?;
            let mut nodes: Vec<usize> = (0..n).collect();
            nodes.shuffle(&mut r);
            let (a, b) = (count(n, train), count(n, val));
            let c = count(n, test).min(n - a - b);
            split.train = nodes[..a].to_vec();
            split.val = nodes[a..a + b].to_vec();
            split.test = nodes[a + b..a + b + c].to_vec();
        }
        SplitSpec::Ratios { train, val, test, stratified: true } => {
            check_ratios(&[("train", train), ("val", val), ("test", test)])?;
            for (c, mut members) in by_class(labels).into_iter().enumerate() {
                let m = members.len();
                let (a, b, t) = (count(m, train), count(m, val), count(m, test));
                let need_each = [(train, a), (val, b), (test, t)].iter().any(|&(r, k)| r > 0.0 && k == 0);
                if m == 0 || need_each || a + b + t > m {
                    return Err(Error::Input(format!(
                        "class {c} has {m} nodes, too few for a stratified split with ratios \
                         ({train}, {val}, {test})"
                    )));
                }
                members.shuffle(&mut r);
                split.train.extend_from_slice(&members[..a]);
                split.val.extend_from_slice(&members[a..a + b]);
                split.test.extend_from_slice(&members[a + b..a + b + t]);
            }
        }
        SplitSpec::PerClass { per_class, val, test } => {
            check_ratios(&[("val", val), ("test", test)])?;
            let mut rest = Vec::new();
            for (c, mut members) in by_class(labels).into_iter().enumerate() {
                if members.len() < per_class {
                    return Err(Error::Input(format!(
                        "class {c} has {} nodes, fewer than {per_class} per class",
                        members.len()
                    )));
                }
                members.shuffle(&mut r);
                split.train.extend_from_slice(&members[..per_class]);
                rest.extend_from_slice(&members[per_class..]);
            }
            rest.sort_unstable();
            rest.shuffle(&mut r);
            let b = count(n, val).min(rest.len());
            let t = count(n, test).min(rest.len() - b);
            split.val = rest[..b].to_vec();
            split.test = rest[b..b + t].to_vec();
        }
    }
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}
