//! Sample-averaged reconstruction losses and the combined weak/adversarial/strong objective.

use ndarray::{ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Basis, Latent};
use crate::scalar::Scalar;

/// Squared Frobenius residual `||U - W H||_F^2`.
pub fn residual_energy<T: Scalar>(w: &Basis<T>, u: ArrayView2<'_, T>, h: &Latent<T>) -> Result<T> {
    if w.features() != u.nrows() {
        return Err(Error::dim("loss feature dimension", w.features(), u.nrows()));
    }
    if h.atoms() != w.atoms() || h.cols() != u.ncols() {
        return Err(Error::dim(
            "loss latent shape",
            format!("{}x{}", w.atoms(), u.ncols()),
            format!("{}x{}", h.atoms(), h.cols()),
        ));
    }
    let recon = w.view().dot(h.matrix());
    Ok(Zip::from(&recon)
        .and(u)
        .fold(T::zero(), |a, &r, &x| a + (x - r) * (x - r)))
}

/// Mean squared reconstruction error per sample, `||U - W H||_F^2 / N`.
pub fn weak_loss<T: Scalar>(w: &Basis<T>, u: ArrayView2<'_, T>, h: &Latent<T>) -> Result<T> {
    let n = T::from_usize(u.ncols()).expect("column count fits scalar");
    Ok(residual_energy(w, u, h)? / n)
}

/// Relative weights of the three loss terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermWeights<T> {
    pub weak: T,
    pub adversarial: T,
    pub strong: T,
}

impl<T: Scalar> TermWeights<T> {
    pub fn new(weak: T, adversarial: T, strong: T) -> Self {
        TermWeights { weak, adversarial, strong }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("tau_w", self.weak), ("tau_a", self.adversarial), ("tau_s", self.strong)] {
            if !v.is_finite() || v < T::zero() {
                return Err(Error::Config(format!("{name} must be a finite value >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// A data matrix paired with its codes.
#[derive(Debug, Clone, Copy)]
pub struct Term<'a, T> {
    pub data: ArrayView2<'a, T>,
    pub latent: &'a Latent<T>,
}

impl<'a, T> Term<'a, T> {
    pub fn new(data: ArrayView2<'a, T>, latent: &'a Latent<T>) -> Self {
        Term { data, latent }
    }
}

/// The per-source terms entering the combined objective. `strong` pairs the true component
/// `U~_i` with this source's block of the jointly encoded mixture codes.
#[derive(Debug, Clone, Copy, Default)]
pub struct TermSet<'a, T> {
    pub weak: Option<Term<'a, T>>,
    pub adversarial: Option<Term<'a, T>>,
    pub strong: Option<Term<'a, T>>,
}

fn half_mean<T: Scalar>(w: &Basis<T>, term: Option<Term<'_, T>>, weight: T, name: &str) -> Result<T> {
    if weight == T::zero() {
        return Ok(T::zero());
    }
    let term = term.ok_or_else(|| Error::Config(format!("{name} weight is non-zero but no {name} data was supplied")))?;
    Ok(T::of(0.5) * weak_loss(w, term.data, term.latent)?)
}

/// Combined objective for one source,
/// `tau_W/(2N) ||U - W H||^2 - tau_A/(2N^) ||U^ - W H^||^2 + tau_S/(2N~) ||U~ - W H~||^2`.
///
/// The quadratic terms carry the factor 1/2 so that the multiplicative basis update is a
/// majorize-minimize step for exactly this function (plus `gamma |W|_1`).
pub fn full_loss<T: Scalar>(w: &Basis<T>, terms: &TermSet<'_, T>, weights: &TermWeights<T>) -> Result<T> {
    weights.validate()?;
    let weak = half_mean(w, terms.weak, weights.weak, "weak")?;
    let adv = half_mean(w, terms.adversarial, weights.adversarial, "adversarial")?;
    let strong = half_mean(w, terms.strong, weights.strong, "strong")?;
    Ok(weights.weak * weak - weights.adversarial * adv + weights.strong * strong)
}

/// `full_loss + gamma |W|_1`: the function the basis update never increases with codes fixed.
pub fn regularized_loss<T: Scalar>(
    w: &Basis<T>,
    terms: &TermSet<'_, T>,
    weights: &TermWeights<T>,
    gamma: T,
) -> Result<T> {
    let l1 = w.matrix().iter().fold(T::zero(), |a, v| a + *v);
    Ok(full_loss(w, terms, weights)? + gamma * l1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn b(m: ndarray::Array2<f64>) -> Basis<f64> {
        Basis::new(m).unwrap()
    }
    fn l(m: ndarray::Array2<f64>) -> Latent<f64> {
        Latent::new(m).unwrap()
    }

    #[test]
    fn weak_loss_examples() {
        let w = b(array![[1.0]]);
        assert_eq!(weak_loss(&w, array![[1.0]].view(), &l(array![[1.0]])).unwrap(), 0.0);
        assert_eq!(weak_loss(&w, array![[1.0]].view(), &l(array![[0.0]])).unwrap(), 1.0);
        let w2 = b(array![[1.0], [0.0]]);
        assert_eq!(weak_loss(&w2, array![[1.0], [0.0]].view(), &l(array![[0.5]])).unwrap(), 0.25);
    }

    #[test]
    fn weak_only_is_half_weak_loss() {
        let w = b(array![[1.0, 0.5], [0.2, 0.1]]);
        let u = array![[1.0, 2.0, 0.0], [0.5, 0.1, 3.0]];
        let h = l(array![[0.2, 0.4, 1.0], [0.0, 1.0, 0.3]]);
        let terms = TermSet { weak: Some(Term::new(u.view(), &h)), ..Default::default() };
        let f = full_loss(&w, &terms, &TermWeights::new(1.0, 0.0, 0.0)).unwrap();
        assert!((f - 0.5 * weak_loss(&w, u.view(), &h).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn equal_residuals_cancel() {
        let w = b(array![[1.0]]);
        let u = array![[2.0]];
        let h = l(array![[1.0]]);
        let terms = TermSet {
            weak: Some(Term::new(u.view(), &h)),
            adversarial: Some(Term::new(u.view(), &h)),
            strong: None,
        };
        assert_eq!(full_loss(&w, &terms, &TermWeights::new(1.0, 1.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn scalar_hand_evaluation() {
        // w=1, u=2, H=1, u^=1, H^=1: 1/2 (2-1)^2 - 1/2 (1-1)^2
        let w = b(array![[1.0]]);
        let u = array![[2.0]];
        let ua = array![[1.0]];
        let h = l(array![[1.0]]);
        let terms = TermSet {
            weak: Some(Term::new(u.view(), &h)),
            adversarial: Some(Term::new(ua.view(), &h)),
            strong: None,
        };
        assert_eq!(full_loss(&w, &terms, &TermWeights::new(1.0, 1.0, 0.0)).unwrap(), 0.5);
        assert_eq!(regularized_loss(&w, &terms, &TermWeights::new(1.0, 1.0, 0.0), 0.0).unwrap(), 0.5);
    }

    #[test]
    fn missing_term_with_weight_is_config_error() {
        let w = b(array![[1.0]]);
        let terms: TermSet<'_, f64> = TermSet::default();
        assert!(matches!(
            full_loss(&w, &terms, &TermWeights::new(0.0, 0.0, 1.0)),
            Err(Error::Config(_))
        ));
        assert_eq!(full_loss(&w, &terms, &TermWeights::new(0.0, 0.0, 0.0)).unwrap(), 0.0);
    }
}
