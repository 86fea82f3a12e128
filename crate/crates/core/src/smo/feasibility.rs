use crate::data::POSITIVE;

/// Restores `sum_i y_i alpha_i = 0` by shrinking the class with the larger mass.
///
/// Inputs are clipped into `[0, upper[i]]` first. Scaling only shrinks, so the
/// box constraints survive; the rounding residue left by the scaling is
/// absorbed by the largest multiplier of the shrunk class.
pub fn repair_equality(alphas: &[f64], labels: &[i8], upper: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = alphas
        .iter()
        .zip(upper)
        .map(|(&a, &c)| if a.is_finite() { a.clamp(0.0, c) } else { 0.0 })
        .collect();
    let (mut pos, mut neg) = (0.0, 0.0);
    for (a, &y) in out.iter().zip(labels) {
        if y == POSITIVE {
            pos += a;
        } else {
            neg += a;
        }
    }
    if pos == neg {
        return out;
    }
    let (shrink, factor) = if pos > neg {
        (POSITIVE, neg / pos)
    } else {
        (-POSITIVE, pos / neg)
    };
    for (a, &y) in out.iter_mut().zip(labels) {
        if y == shrink {
            *a *= factor;
        }
    }

    // Residual in the direction of the shrunk class.
    let residual: f64 = out
        .iter()
        .zip(labels)
        .map(|(a, &y)| if y == shrink { *a } else { -*a })
        .sum();
    if residual != 0.0 {
        let largest = (0..out.len())
            .filter(|&i| labels[i] == shrink)
            .max_by(|&a, &b| out[a].total_cmp(&out[b]).then(b.cmp(&a)));
        if let Some(k) = largest {
            out[k] = (out[k] - residual).clamp(0.0, upper[k]);
        }
    }
    out
}

/// `sum_i y_i alpha_i`.
pub fn equality_residual(alphas: &[f64], labels: &[i8]) -> f64 {
    alphas
        .iter()
        .zip(labels)
        .map(|(a, &y)| f64::from(y) * a)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn already_feasible_is_unchanged() {
        let a = vec![0.5, 0.25, 0.25, 0.0];
        let y = [1, -1, -1, 1];
        assert_eq!(repair_equality(&a, &y, &[1.0; 4]), a);
    }

    #[test]
    fn larger_class_scaled() {
        let y = [1, 1, -1];
        let out = repair_equality(&[1.5, 0.5, 1.0], &y, &[2.0, 2.0, 2.0]);
        assert_eq!(out, vec![0.75, 0.25, 1.0]);
        assert_eq!(equality_residual(&out, &y), 0.0);
    }

    #[test]
    fn all_zero_stays_zero() {
        assert_eq!(repair_equality(&[0.0; 3], &[1, -1, 1], &[1.0; 3]), vec![0.0; 3]);
    }

    #[test]
    fn one_empty_class_zeroes_the_other() {
        assert_eq!(
            repair_equality(&[0.3, 0.0, 0.9], &[1, -1, 1], &[1.0; 3]),
            vec![0.0; 3]
        );
    }

    #[test]
    fn constructed_imbalance_of_point_four() {
        let y = [1, 1, -1, -1, 1];
        let a = [0.3, 0.5, 0.2, 0.4, 0.2];
        assert!((equality_residual(&a, &y) - 0.4).abs() < 1e-12);
        let upper = [1.0, 1.0, 0.5, 0.5, 1.0];
        let out = repair_equality(&a, &y, &upper);
        assert!(equality_residual(&out, &y).abs() <= 1e-12);
        assert!(out.iter().zip(&upper).all(|(v, c)| (0.0..=*c).contains(v)));
    }

    proptest! {
        #[test]
        fn repaired_vectors_are_feasible(
            entries in prop::collection::vec((0.0f64..50.0, any::<bool>(), 0.01f64..40.0), 1..60)
        ) {
            let a: Vec<f64> = entries.iter().map(|e| e.0).collect();
            let y: Vec<i8> = entries.iter().map(|e| if e.1 { 1 } else { -1 }).collect();
            let upper: Vec<f64> = entries.iter().map(|e| e.2).collect();
            let out = repair_equality(&a, &y, &upper);
            let scale = upper.iter().cloned().fold(0.0, f64::max) * a.len() as f64;
            prop_assert!(equality_residual(&out, &y).abs() <= 1e-12 * scale.max(1.0));
            for ((v, c), orig) in out.iter().zip(&upper).zip(&a) {
                prop_assert!(*v >= 0.0 && v <= c);
                prop_assert!(*v <= orig.clamp(0.0, *c) + 1e-12 * scale.max(1.0));
            }
        }
    }
}
