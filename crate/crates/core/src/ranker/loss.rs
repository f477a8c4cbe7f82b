use crate::error::{Error, Result};

fn log_sum_exp(pos: f64, negs: &[f64]) -> f64 {
    let m = negs.iter().copied().fold(pos, f64::max);
    let sum: f64 = std::iter::once(pos)
        .chain(negs.iter().copied())
        .map(|s| (s - m).exp())
        .sum();
    m + sum.ln()
}

/// Negative log-softmax of the positive among `{pos} ∪ negs`.
pub fn contrastive_loss(pos: f64, negs: &[f64]) -> Result<f64> {
    if negs.is_empty() {
        return Err(Error::Train(
            "contrastive loss needs at least one negative".into(),
        ));
    }
    let m = negs
        .iter()
        .map(|s| s - pos)
        .fold(f64::NEG_INFINITY, f64::max);
    let loss = if m <= 0.0 {
        negs.iter().map(|s| (s - pos).exp()).sum::<f64>().ln_1p()
    } else {
        m + ((-m).exp() + negs.iter().map(|s| (s - pos - m).exp()).sum::<f64>()).ln()
    };
    Ok(loss.max(0.0))
}

/// Gradient of [`contrastive_loss`] with respect to the positive score and
/// each negative score: softmax minus the one-hot of the positive.
pub fn contrastive_grad(pos: f64, negs: &[f64]) -> Result<(f64, Vec<f64>)> {
    if negs.is_empty() {
        return Err(Error::Train(
            "contrastive loss needs at least one negative".into(),
        ));
    }
    let lse = log_sum_exp(pos, negs);
    let dpos = (pos - lse).exp() - 1.0;
    Ok((dpos, negs.iter().map(|s| (s - lse).exp()).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_pair_is_ln2() {
        assert!((contrastive_loss(0.3, &[0.3]).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn separated_scores() {
        let l = contrastive_loss(10.0, &[-10.0]).unwrap();
        let expected = (-20f64).exp().ln_1p();
        assert!((l - expected).abs() < 1e-18, "{l} vs {expected}");
        assert!(contrastive_loss(1e6, &[-1e6]).unwrap().is_finite());
    }

    #[test]
    fn empty_negatives_error() {
        assert!(contrastive_loss(1.0, &[]).is_err());
        assert!(contrastive_grad(1.0, &[]).is_err());
    }

    #[test]
    fn shift_invariance_and_gradient_sums_to_zero() {
        let negs = [0.5, -1.0, 2.0];
        let a = contrastive_loss(1.0, &negs).unwrap();
        let b = contrastive_loss(101.0, &negs.map(|x| x + 100.0)).unwrap();
        assert!((a - b).abs() < 1e-9);
        let (dp, dn) = contrastive_grad(1.0, &negs).unwrap();
        assert!((dp + dn.iter().sum::<f64>()).abs() < 1e-12);
    }
}
