use ndarray::{Array2, ArrayView2, Zip};

pub fn relu(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|v| v.max(0.0))
}

/// Gradient of `relu` given the pre-activation.
pub fn relu_backward(pre: &Array2<f64>, grad: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = grad.to_owned();
    Zip::from(&mut out).and(pre).for_each(|g, &p| {
        if p <= 0.0 {
            *g = 0.0;
        }
    });
    out
}

/// Scales every row to unit ℓ2 norm. Zero rows stay zero. Returns the
/// normalized matrix and the row norms.
pub fn row_normalize(x: &Array2<f64>) -> (Array2<f64>, Vec<f64>) {
    let mut out = x.clone();
    let mut norms = Vec::with_capacity(x.nrows());
    for mut row in out.rows_mut() {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row /= norm;
        }
        norms.push(norm);
    }
    (out, norms)
}

/// Backward of [`row_normalize`]: `dx = (dy − y·(y·dy)) / ‖x‖`, and zero for
/// rows whose norm was zero.
pub fn row_normalize_backward(
    y: &Array2<f64>,
    norms: &[f64],
    dy: ArrayView2<'_, f64>,
) -> Array2<f64> {
    let mut dx = Array2::zeros(y.raw_dim());
    for (i, mut row) in dx.rows_mut().into_iter().enumerate() {
        let norm = norms[i];
        if norm == 0.0 {
            continue;
        }
        let yi = y.row(i);
        let gi = dy.row(i);
        let proj = yi.dot(&gi);
        row.assign(&gi);
        row.scaled_add(-proj, &yi);
        row /= norm;
    }
    dx
}
