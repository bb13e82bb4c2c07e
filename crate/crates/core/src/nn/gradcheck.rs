use ndarray::Array2;
use rand::seq::index;

use super::params::{Gradients, ParamStore};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub coords_checked: usize,
    /// `(parameter index, row, col, analytic, numeric)` at the worst coordinate.
    pub worst: Option<(usize, usize, usize, f64, f64)>,
}

/// `|a − n| / max(1e-8, |a| + |n|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    relative_error_floored(analytic, numeric, 1e-8)
}

fn relative_error_floored(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(floor)
}

/// Magnitude below which a central difference of a loss of size `loss` has
/// fewer than four significant digits: cancellation leaves an absolute error
/// of about `ε_mach·|loss|/eps`, so components under 1e4 times that cannot be
/// compared relatively.
fn roundoff_floor(loss: f64, eps: f64) -> f64 {
    (1e4 * f64::EPSILON * loss.abs().max(1.0) / eps).max(1e-8)
}

fn pick_coords(total: usize, min_coords: usize, seed: u64) -> Vec<usize> {
    if total <= min_coords {
        (0..total).collect()
    } else {
        let mut r = rng::stream(seed, "gradcheck", 0);
        let mut v = index::sample(&mut r, total, min_coords).into_vec();
        v.sort_unstable();
        v
    }
}

/// Central-difference check of the analytic gradients returned by `f`.
/// Checks every coordinate when there are at most `min_coords`, otherwise a
/// seeded random subset of that size. Relative errors use
/// `max(|a| + |n|, floor)` in the denominator, where the floor is 1e-8 or the
/// finite-difference roundoff scale of the loss, whichever is larger.
pub fn grad_check<F>(mut f: F, params: &ParamStore, eps: f64, min_coords: usize, seed: u64) -> GradCheckReport
where
    F: FnMut(&ParamStore) -> (f64, Gradients),
{
    let (loss0, analytic) = f(params);
    let floor = roundoff_floor(loss0, eps);
    let mut flat = Vec::new();
    for (pi, p) in params.params().iter().enumerate() {
        for r in 0..p.value.nrows() {
            for c in 0..p.value.ncols() {
                flat.push((pi, r, c));
            }
        }
    }
    let mut report = GradCheckReport { max_rel_error: 0.0, coords_checked: 0, worst: None };
    let mut work = params.clone();
    for k in pick_coords(flat.len(), min_coords, seed) {
        let (pi, r, c) = flat[k];
        let orig = params.params()[pi].value[[r, c]];
        let mut eval = |v: f64, work: &mut ParamStore| {
            work.params_mut().nth(pi).unwrap().value[[r, c]] = v;
            f(work).0
        };
        let plus = eval(orig + eps, &mut work);
        let minus = eval(orig - eps, &mut work);
        work.params_mut().nth(pi).unwrap().value[[r, c]] = orig;
        let numeric = (plus - minus) / (2.0 * eps);
        let a = analytic.0[pi][[r, c]];
        let err = relative_error_floored(a, numeric, floor);
        report.coords_checked += 1;
        if err > report.max_rel_error || report.worst.is_none() {
            report.max_rel_error = report.max_rel_error.max(err);
            report.worst = Some((pi, r, c, a, numeric));
        }
    }
    report
}

/// Same check for a loss defined directly on a matrix (e.g. an embedding).
pub fn grad_check_matrix<F>(mut f: F, x: &Array2<f64>, eps: f64, min_coords: usize, seed: u64) -> GradCheckReport
where
    F: FnMut(&Array2<f64>) -> (f64, Array2<f64>),
{
    let mut store = ParamStore::new();
    store.add("x", x.clone());
    grad_check(
        |s: &ParamStore| {
            let (loss, g) = f(s.get("x"));
            (loss, Gradients(vec![g]))
        },
        &store,
        eps,
        min_coords,
        seed,
    )
}
