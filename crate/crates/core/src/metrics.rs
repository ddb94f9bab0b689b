//! Scoring and relative-position metrics.

use crate::error::{Error, Result};
use crate::flock::SimilarityMatrix;
use crate::simulate::CameraOrdering;

/// Coefficients of `variance ≈ a·scale² + b·scale + c` in units of 1e-5
/// (0.4827, 0.01875, -0.0275). Integer coefficients keep small-integer scales
/// exact before the final division.
pub const FIT_QUADRATIC_E5: [f64; 3] = [48270.0, 1875.0, -2750.0];

/// Predicted Camera2 position per query. Repeats are allowed: no
/// de-duplication is applied across queries.
pub type PredictionVector = Vec<usize>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplacementStats {
    pub variance: f64,
    pub recovered_scale: f64,
}

/// Fraction of queries whose prediction equals the true Camera2 position.
pub fn rank1_accuracy(truth: &CameraOrdering, pred: &[usize]) -> Result<f64> {
    if truth.len() != pred.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: pred.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::Empty);
    }
    let hits = truth.y().iter().zip(pred).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// Mean squared distance from the points `(x_i, y_i)` to the line `y = x`:
/// `Σ (x_i - y_i)² / (2n)`.
pub fn displacement_variance(ordering: &CameraOrdering) -> f64 {
    let n = ordering.len();
    if n == 0 {
        return 0.0;
    }
    let sum: f64 = ordering
        .x()
        .iter()
        .zip(ordering.y())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    sum / (2.0 * n as f64)
}

/// Estimated perturbation scale from displacement variance,
/// `1.036·√(0.0534 + 1.93·var) − 0.0194`.
pub fn scale_from_variance(var: f64) -> Result<f64> {
    if !var.is_finite() || var < 0.0 {
        return Err(Error::config(format!(
            "variance must be finite and non-negative, got {var}"
        )));
    }
    Ok(1.036 * (0.0534 + 1.93 * var).sqrt() - 0.0194)
}

/// The fitted quadratic from scale to displacement variance. Only meaningful
/// for scales of roughly 0.3 to 2; it goes negative near zero.
pub fn variance_from_scale_fit(scale: f64) -> f64 {
    let [a, b, c] = FIT_QUADRATIC_E5;
    (a * scale * scale + b * scale + c) / 1e5
}

pub fn displacement_stats(ordering: &CameraOrdering) -> DisplacementStats {
    let variance = displacement_variance(ordering);
    DisplacementStats {
        variance,
        recovered_scale: scale_from_variance(variance).expect("variance is non-negative"),
    }
}

/// Mean of the diagonal over mean of everything off it.
pub fn diagonal_dominance(grid: &SimilarityMatrix) -> Result<f64> {
    if !grid.is_square() {
        return Err(Error::NotSquare {
            rows: grid.rows(),
            row: 0,
            len: grid.cols(),
        });
    }
    let n = grid.rows();
    if n < 2 {
        return Err(Error::config(
            "diagonal dominance needs at least a 2x2 grid",
        ));
    }
    let mut diag = 0.0;
    let mut off = 0.0;
    for i in 0..n {
        for (j, &v) in grid.row(i).iter().enumerate() {
            if i == j {
                diag += v;
            } else {
                off += v;
            }
        }
    }
    let diag_mean = diag / n as f64;
    let off_mean = off / (n * (n - 1)) as f64;
    Ok(diag_mean / off_mean)
}

/// Fractional ranks (1-based, ties averaged).
fn ranks(values: &[f64]) -> Vec<f64> {
    let order = crate::simulate::argsort(values);
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson correlation of the fractional ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::config("rank correlation needs at least two points"));
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ordering(y: &[usize]) -> CameraOrdering {
        CameraOrdering::from_camera2(y.to_vec()).unwrap()
    }

    #[test]
    fn accuracy_counts() {
        let truth = ordering(&[0, 1, 2, 3]);
        assert_eq!(rank1_accuracy(&truth, &[0, 1, 2, 3]).unwrap(), 1.0);
        assert_eq!(rank1_accuracy(&truth, &[1, 0, 3, 2]).unwrap(), 0.0);
        assert_eq!(rank1_accuracy(&truth, &[0, 1, 2, 2]).unwrap(), 0.75);
        assert!(matches!(
            rank1_accuracy(&truth, &[0, 1]),
            Err(Error::LengthMismatch { left: 4, right: 2 })
        ));
    }

    #[test]
    fn variance_hand_values() {
        assert_eq!(displacement_variance(&CameraOrdering::identity(10)), 0.0);
        assert_eq!(displacement_variance(&ordering(&[1, 0])), 0.5);
        assert_eq!(displacement_variance(&ordering(&[3, 2, 1, 0])), 2.5);
    }

    #[test]
    fn variance_symmetric_in_x_and_y() {
        let o = ordering(&[2, 0, 4, 1, 3]);
        let inv = crate::simulate::invert_permutation(o.y());
        assert_eq!(
            displacement_variance(&o),
            displacement_variance(&ordering(&inv))
        );
    }

    #[test]
    fn scale_formula_values() {
        // 1.036·√0.0534 − 0.0194 = 0.220003
        let s0 = scale_from_variance(0.0).unwrap();
        assert!((s0 - 0.2200).abs() <= 0.0005, "{s0}");
        assert!((scale_from_variance(0.47395).unwrap() - 1.0).abs() <= 0.005);
        let v = variance_from_scale_fit(1.5);
        assert!((scale_from_variance(v).unwrap() - 1.5).abs() <= 0.005);
        assert!(scale_from_variance(-0.1).is_err());
    }

    #[test]
    fn fit_values() {
        assert_eq!(variance_from_scale_fit(1.0), 0.47395);
        assert_eq!(variance_from_scale_fit(0.0), -0.0275);
        assert_eq!(variance_from_scale_fit(2.0), 1.9408);
    }

    #[test]
    fn round_trip_over_fit_interval() {
        for step in 3..=20 {
            let sigma = step as f64 / 10.0;
            let back = scale_from_variance(variance_from_scale_fit(sigma)).unwrap();
            assert!((back - sigma).abs() <= 0.005, "{sigma} -> {back}");
        }
    }

    #[test]
    fn scale_is_strictly_increasing() {
        let mut prev = scale_from_variance(0.0).unwrap();
        for i in 1..1000 {
            let next = scale_from_variance(i as f64 * 0.01).unwrap();
            assert!(next > prev);
            prev = next;
        }
    }

    #[test]
    fn dominance_values() {
        let mut v = vec![0.5; 16];
        for i in 0..4 {
            v[i * 5] = 1.0;
        }
        let g = SimilarityMatrix::new(4, 4, v).unwrap();
        assert_eq!(diagonal_dominance(&g).unwrap(), 2.0);
        let c = SimilarityMatrix::new(3, 3, vec![0.3; 9]).unwrap();
        assert!((diagonal_dominance(&c).unwrap() - 1.0).abs() < 1e-15);
        let one = SimilarityMatrix::new(1, 1, vec![0.3]).unwrap();
        assert!(diagonal_dominance(&one).is_err());
        let rect = SimilarityMatrix::new(2, 3, vec![0.3; 6]).unwrap();
        assert!(diagonal_dominance(&rect).is_err());
    }

    #[test]
    fn spearman_basics() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman(&xs, &[10.0, 20.0, 30.0, 45.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&xs, &[4.0, 3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(ranks(&[5.0, 1.0, 5.0]), vec![2.5, 1.0, 2.5]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn accuracy_in_unit_range(
                (truth, pred) in (1usize..30).prop_flat_map(|n| (
                    Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
                    prop::collection::vec(0..n, n),
                ))
            ) {
                let truth = CameraOrdering::from_camera2(truth).unwrap();
                let acc = rank1_accuracy(&truth, &pred).unwrap();
                prop_assert!((0.0..=1.0).contains(&acc));
                prop_assert_eq!(acc == 1.0, truth.y() == &pred[..]);
            }
        }
    }
}
