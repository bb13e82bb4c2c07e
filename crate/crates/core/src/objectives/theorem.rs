use ndarray::Array2;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// A finite population with known positive and negative sampling
/// distributions for one anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub emb: Array2<f64>,
    pub anchor: usize,
    pub counterpart: usize,
    pub positive_probs: Vec<f64>,
    pub negative_probs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapStats {
    /// Monte Carlo mean of the sampled objective.
    pub mc_mean: f64,
    /// Limit value using exact expectations over the population.
    pub closed_form: f64,
    /// `|mc_mean − closed_form|`.
    pub gap: f64,
    /// Standard error of `mc_mean`.
    pub std_error: f64,
}

fn sampled_value(l: f64, pos_mean: f64, e_c: f64, q: f64, neg_mean: f64) -> f64 {
    -(l * pos_mean).ln() + (e_c + q * neg_mean).ln()
}

/// Running mean that is exact when every value is identical.
fn running_mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut mean = 0.0;
    for (k, v) in values.enumerate() {
        mean += (v - mean) / (k + 1) as f64;
    }
    mean
}

/// Compares the Monte Carlo mean of the sampled objective (`m` positives,
/// `n` negatives per trial) with its large-sample limit
/// `−log l·E⁺[e^{s/τ}] / (e^{s_c/τ} + q·E⁻[e^{s/τ}])`.
#[allow(clippy::too_many_arguments)]
pub fn theorem1_gap(
    pop: &Population,
    m: usize,
    n: usize,
    trials: usize,
    l: f64,
    q: f64,
    tau: f64,
    rng: &mut Rng,
) -> Result<GapStats> {
    let size = pop.emb.nrows();
    if pop.positive_probs.len() != size || pop.negative_probs.len() != size {
        return Err(Error::Input(format!(
            "population of {size} rows needs {size} probabilities per distribution"
        )));
    }
    if pop.anchor >= size || pop.counterpart >= size {
        return Err(Error::Input("anchor or counterpart out of range".into()));
    }
    if m == 0 || n == 0 || trials == 0 {
        return Err(Error::Input("m, n and trials must be positive".into()));
    }
    if !(l > 0.0) || !(q >= 0.0) || !(tau > 0.0) {
        return Err(Error::Config(format!("need l > 0, q >= 0, tau > 0; got l={l}, q={q}, tau={tau}")));
    }
    let bad = |e| Error::Input(format!("invalid sampling distribution: {e}"));
    let pos_dist = WeightedIndex::new(&pop.positive_probs).map_err(bad)?;
    let neg_dist = WeightedIndex::new(&pop.negative_probs).map_err(bad)?;

    let a = pop.emb.row(pop.anchor);
    let e: Vec<f64> = pop.emb.rows().into_iter().map(|r| (a.dot(&r) / tau).exp()).collect();
    let e_c = e[pop.counterpart];

    let expect = |probs: &[f64]| {
        let total: f64 = probs.iter().sum();
        probs.iter().zip(&e).map(|(p, v)| p / total * v).sum::<f64>()
    };
    let closed_form = sampled_value(l, expect(&pop.positive_probs), e_c, q, expect(&pop.negative_probs));

    let mut mean = 0.0;
    let mut m2 = 0.0;
    for t in 0..trials {
        let pos_mean = running_mean((0..m).map(|_| e[pos_dist.sample(rng)]));
        let neg_mean = running_mean((0..n).map(|_| e[neg_dist.sample(rng)]));
        let v = sampled_value(l, pos_mean, e_c, q, neg_mean);
        let delta = v - mean;
        mean += delta / (t + 1) as f64;
        m2 += delta * (v - mean);
    }
    let std_error = if trials > 1 {
        (m2 / (trials - 1) as f64 / trials as f64).sqrt()
    } else {
        0.0
    };
    Ok(GapStats {
        mc_mean: mean,
        closed_form,
        gap: (mean - closed_form).abs(),
        std_error,
    })
}
