//! Log-space arithmetic shared by the CTC recursions and the beam search.

/// `ln(10)`, used to bring log10 LM scores into the natural-log domain.
pub const LN_10: f64 = std::f64::consts::LN_10;

/// `ln(exp(a) + exp(b))` without overflow; `-inf` is the additive identity.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(Σ exp(x))`. Empty input and all-`-inf` input give `-inf`.
pub fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_is_neg_inf() {
        assert_eq!(logsumexp(&[]), f64::NEG_INFINITY);
        assert_eq!(
            logsumexp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn matches_direct_sum() {
        let xs = [-0.5f64, -1.25, -3.0];
        let direct: f64 = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert!((logsumexp(&xs) - direct).abs() < 1e-15);
        assert!((log_add(xs[0], xs[1]) - (xs[0].exp() + xs[1].exp()).ln()).abs() < 1e-15);
    }

    #[test]
    fn neg_inf_is_identity() {
        assert_eq!(log_add(f64::NEG_INFINITY, -2.0), -2.0);
        assert_eq!(log_add(-2.0, f64::NEG_INFINITY), -2.0);
        assert_eq!(logsumexp(&[0.0, f64::NEG_INFINITY]), 0.0);
    }
}
