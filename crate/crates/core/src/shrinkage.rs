//! ℓ1 proximal operator.

use crate::error::{Error, Result};
use crate::tensor::Tensor3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShrinkMode {
    /// `sign(a)·max(|a| − v, 0)`, the prox of `v|·|`.
    #[default]
    Signed,
    /// `a − v` where `a > v`, else `0`. Forces the output nonnegative.
    OneSidedPaper,
}

#[inline]
pub fn shrink_scalar(a: f64, v: f64, mode: ShrinkMode) -> f64 {
    match mode {
        ShrinkMode::Signed => {
            if a > v {
                a - v
            } else if a < -v {
                a + v
            } else {
                0.0
            }
        }
        ShrinkMode::OneSidedPaper => {
            if a > v {
                a - v
            } else {
                0.0
            }
        }
    }
}

pub fn soft_threshold(a: &Tensor3, v: f64, mode: ShrinkMode) -> Result<Tensor3> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::InvalidParam(
            "shrinkage threshold must be finite and >= 0",
        ));
    }
    Ok(a.map(|x| shrink_scalar(x, v, mode)))
}

/// In-place variant used by the solver loop.
pub(crate) fn soft_threshold_in_place(a: &mut Tensor3, v: f64, mode: ShrinkMode) {
    for x in a.as_mut_slice() {
        *x = shrink_scalar(*x, v, mode);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Dims;
    use proptest::prelude::*;

    /// Minimises `v|z| + ½(z − a)²` over a grid of spacing `h`.
    fn grid_prox(a: f64, v: f64, h: f64) -> f64 {
        let lo = a.min(0.0) - 1.0;
        let steps = ((a.abs() + 2.0) / h) as usize + 2;
        (0..=steps)
            .map(|s| lo + s as f64 * h)
            .min_by(|x, y| {
                let fx = v * x.abs() + 0.5 * (x - a) * (x - a);
                let fy = v * y.abs() + 0.5 * (y - a) * (y - a);
                fx.total_cmp(&fy)
            })
            .unwrap()
    }

    fn t(vals: &[f64]) -> Tensor3 {
        Tensor3::from_vec(Dims::new(1, vals.len(), 1), vals.to_vec()).unwrap()
    }

    #[test]
    fn zero_threshold_is_identity_on_nonnegative() {
        let a = t(&[0.0, 0.2, 3.0]);
        for mode in [ShrinkMode::Signed, ShrinkMode::OneSidedPaper] {
            assert_eq!(soft_threshold(&a, 0.0, mode).unwrap(), a);
        }
    }

    #[test]
    fn signed_examples_match_grid_oracle() {
        for &(a, want) in &[(0.8, 0.3), (-0.3, 0.0), (-0.9, -0.4)] {
            let got = shrink_scalar(a, 0.5, ShrinkMode::Signed);
            assert!((got - want).abs() < 1e-12);
            assert!((got - grid_prox(a, 0.5, 1e-4)).abs() <= 1e-4);
        }
    }

    #[test]
    fn one_sided_examples() {
        let out = soft_threshold(&t(&[0.8, -0.9, 0.5]), 0.5, ShrinkMode::OneSidedPaper).unwrap();
        assert!((out.as_slice()[0] - 0.3).abs() < 1e-12);
        assert_eq!(&out.as_slice()[1..], &[0.0, 0.0]);
    }

    #[test]
    fn negative_threshold_rejected() {
        assert!(soft_threshold(&t(&[1.0]), -0.1, ShrinkMode::Signed).is_err());
        assert!(soft_threshold(&t(&[1.0]), f64::NAN, ShrinkMode::Signed).is_err());
    }

    #[test]
    fn in_place_matches() {
        let a = t(&[1.0, -2.0, 0.1]);
        let mut b = a.clone();
        soft_threshold_in_place(&mut b, 0.4, ShrinkMode::Signed);
        assert_eq!(b, soft_threshold(&a, 0.4, ShrinkMode::Signed).unwrap());
    }

    proptest! {
        #[test]
        fn signed_is_nonexpansive(a in -5.0f64..5.0, b in -5.0f64..5.0, v in 0.0f64..2.0) {
            let (sa, sb) = (shrink_scalar(a, v, ShrinkMode::Signed), shrink_scalar(b, v, ShrinkMode::Signed));
            prop_assert!((sa - sb).abs() <= (a - b).abs() + 1e-15);
        }

        #[test]
        fn both_modes_shrink(a in -5.0f64..5.0, v in 0.0f64..2.0) {
            prop_assert!(shrink_scalar(a, v, ShrinkMode::Signed).abs() <= a.abs());
            prop_assert!(shrink_scalar(a, v, ShrinkMode::OneSidedPaper).abs() <= a.abs());
        }

        #[test]
        fn signed_is_the_prox(a in -3.0f64..3.0, v in 0.0f64..1.5) {
            let h = 1e-3;
            prop_assert!((shrink_scalar(a, v, ShrinkMode::Signed) - grid_prox(a, v, h)).abs() <= h);
        }
    }
}
