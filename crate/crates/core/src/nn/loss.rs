use ndarray::{Array2, Axis};

use crate::{Error, Result};

/// Probabilities fed to logarithms are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]`.
pub const PROB_CLAMP: f64 = 1e-7;

/// Row-wise softmax with the row maximum subtracted first.
pub fn softmax(logits: &Array2<f64>) -> Array2<f64> {
    let mut p = logits.clone();
    for mut row in p.axis_iter_mut(Axis(0)) {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - m).exp());
        let s = row.sum();
        row /= s;
    }
    p
}

fn check_labels(n_rows: usize, n_classes: usize, labels: &[usize]) -> Result<()> {
    if labels.len() != n_rows {
        return Err(Error::Shape(format!("{} labels for {n_rows} rows", labels.len())));
    }
    if let Some(l) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::InvalidArgument(format!("label {l} out of {n_classes} classes")));
    }
    Ok(())
}

/// Mean over rows of `-log p[label]`.
pub fn cross_entropy(probs: &Array2<f64>, labels: &[usize]) -> Result<f64> {
    check_labels(probs.nrows(), probs.ncols(), labels)?;
    let total: f64 = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| -probs[[i, l]].max(PROB_CLAMP).ln())
        .sum();
    Ok(total / labels.len() as f64)
}

/// Mean cross-entropy of `softmax(logits)` and its gradient w.r.t. the
/// logits, `(p - y) / batch`.
pub fn softmax_cross_entropy(logits: &Array2<f64>, labels: &[usize]) -> Result<(f64, Array2<f64>)> {
    check_labels(logits.nrows(), logits.ncols(), labels)?;
    let p = softmax(logits);
    // log-sum-exp form keeps the loss exact for very confident logits
    let n = labels.len() as f64;
    let mut loss = 0.0;
    for (i, row) in logits.axis_iter(Axis(0)).enumerate() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        loss += lse - row[labels[i]];
    }
    let mut grad = p;
    for (i, &l) in labels.iter().enumerate() {
        grad[[i, l]] -= 1.0;
    }
    grad /= n;
    Ok((loss / n, grad))
}

/// Mean binary cross-entropy between probabilities `p` and targets `y` in
/// `[0, 1]`, with `p` clamped away from the bounds.
pub fn binary_cross_entropy(p: &[f64], y: &[f64]) -> Result<f64> {
    if p.len() != y.len() || p.is_empty() {
        return Err(Error::Shape(format!("bce over {} vs {} values", p.len(), y.len())));
    }
    let total: f64 = p
        .iter()
        .zip(y)
        .map(|(&p, &y)| {
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum();
    Ok(total / p.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn equal_logits_split_evenly() {
        let p = softmax(&array![[3.0, 3.0]]);
        assert_eq!(p, array![[0.5, 0.5]]);
    }

    #[test]
    fn shift_invariance() {
        let a = softmax(&array![[1.0, -2.0, 0.5]]);
        let b = softmax(&array![[101.0, 98.0, 100.5]]);
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn huge_logits_stay_finite() {
        let p = softmax(&array![[1000.0, -1000.0]]);
        assert_eq!(p, array![[1.0, 0.0]]);
        let (l, g) = softmax_cross_entropy(&array![[1000.0, -1000.0]], &[1]).unwrap();
        assert_eq!(l, 2000.0);
        assert!(g.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn bad_labels_rejected() {
        assert!(cross_entropy(&array![[0.5, 0.5]], &[2]).is_err());
        assert!(softmax_cross_entropy(&array![[0.5, 0.5]], &[0, 1]).is_err());
    }

    #[test]
    fn bce_examples() {
        assert!((binary_cross_entropy(&[0.5], &[1.0]).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(binary_cross_entropy(&[1.0], &[1.0]).unwrap() < 1e-6);
        assert!(binary_cross_entropy(&[0.0], &[1.0]).unwrap().is_finite());
    }

    #[test]
    fn softmax_matches_scalar_oracle() {
        let logits = array![[0.3, -1.7, 2.2, 0.0], [5.0, 5.5, -3.0, 1.0]];
        let p = softmax(&logits);
        for (i, row) in logits.outer_iter().enumerate() {
            let z: f64 = row.iter().map(|v| v.exp()).sum();
            for (j, v) in row.iter().enumerate() {
                assert!((p[[i, j]] - v.exp() / z).abs() < 1e-12);
            }
            assert!((p.row(i).sum() - 1.0).abs() < 1e-12);
        }
        let ce = cross_entropy(&p, &[2, 0]).unwrap();
        let want = -(p[[0, 2]].ln() + p[[1, 0]].ln()) / 2.0;
        assert!((ce - want).abs() < 1e-12);
        assert!((softmax_cross_entropy(&logits, &[2, 0]).unwrap().0 - want).abs() < 1e-12);
    }
}
