use crate::error::{Error, Result};

fn check<A, B>(preds: &[A], labels: &[B]) -> Result<()> {
    if preds.is_empty() {
        return Err(Error::EmptyEvaluation("no predictions to score".into()));
    }
    if preds.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} labels",
            preds.len(),
            labels.len()
        )));
    }
    Ok(())
}

pub fn metric_rmse(preds: &[f64], labels: &[f64]) -> Result<f64> {
    check(preds, labels)?;
    let sse: f64 = preds.iter().zip(labels).map(|(p, y)| (p - y) * (p - y)).sum();
    Ok((sse / preds.len() as f64).sqrt())
}

/// Fraction of sign disagreements; a score of exactly 0 counts as +1.
pub fn metric_error_rate(preds: &[f64], labels: &[f64]) -> Result<f64> {
    check(preds, labels)?;
    let sign = |v: f64| if v >= 0.0 { 1.0 } else { -1.0 };
    let wrong = preds
        .iter()
        .zip(labels)
        .filter(|(&p, &y)| sign(p) != sign(y))
        .count();
    Ok(wrong as f64 / preds.len() as f64)
}

pub fn metric_multiclass_acc(preds: &[usize], labels: &[usize]) -> Result<f64> {
    check(preds, labels)?;
    let right = preds.iter().zip(labels).filter(|(p, y)| p == y).count();
    Ok(right as f64 / preds.len() as f64)
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perfect_predictions() {
        let y = [1.0, -1.0, 1.0];
        assert_eq!(metric_rmse(&y, &y).unwrap(), 0.0);
        assert_eq!(metric_error_rate(&y, &y).unwrap(), 0.0);
        assert_eq!(metric_multiclass_acc(&[0, 2, 1], &[0, 2, 1]).unwrap(), 1.0);
    }

    #[test]
    fn half_wrong() {
        assert_eq!(metric_error_rate(&[1.0, -1.0], &[1.0, 1.0]).unwrap(), 0.5);
    }

    #[test]
    fn empty_is_an_error() {
        assert!(matches!(metric_rmse(&[], &[]), Err(Error::EmptyEvaluation(_))));
        assert!(matches!(metric_multiclass_acc(&[], &[]), Err(Error::EmptyEvaluation(_))));
    }

    #[test]
    fn random_pair_matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p: Vec<f64> = (0..50).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y: Vec<f64> = (0..50).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut sse = 0.0;
        let mut wrong = 0.0;
        for i in 0..50 {
            sse += (p[i] - y[i]).powi(2);
            if (p[i] >= 0.0) != (y[i] >= 0.0) {
                wrong += 1.0;
            }
        }
        assert!((metric_rmse(&p, &y).unwrap() - (sse / 50.0).sqrt()).abs() < 1e-12);
        assert!((metric_error_rate(&p, &y).unwrap() - wrong / 50.0).abs() < 1e-12);
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[2.0, 2.0]), 0);
    }

    proptest! {
        #[test]
        fn argmax_is_scale_invariant(scores in prop::collection::vec(-100.0f64..100.0, 1..12), s in 0.001f64..1000.0) {
            let scaled: Vec<f64> = scores.iter().map(|v| v * s).collect();
            prop_assert_eq!(argmax(&scores), argmax(&scaled));
        }
    }
}
