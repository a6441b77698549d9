use ndarray::{Array2, ArrayView2, Zip};

use crate::error::{Error, Result};
use crate::loss::TermWeights;
use crate::model::Basis;
use crate::scalar::Scalar;

/// A batch of data columns with the matching code columns.
#[derive(Debug, Clone, Copy)]
pub struct BatchTerm<'a, T> {
    pub data: ArrayView2<'a, T>,
    pub latent: ArrayView2<'a, T>,
}

impl<'a, T> BatchTerm<'a, T> {
    pub fn new(data: ArrayView2<'a, T>, latent: ArrayView2<'a, T>) -> Self {
        BatchTerm { data, latent }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BatchTerms<'a, T> {
    pub weak: Option<BatchTerm<'a, T>>,
    pub adversarial: Option<BatchTerm<'a, T>>,
    pub strong: Option<BatchTerm<'a, T>>,
}

fn check_term<T: Scalar>(w: &Basis<T>, t: &BatchTerm<'_, T>, name: &'static str) -> Result<()> {
    if t.data.nrows() != w.features() {
        return Err(Error::dim(name, w.features(), t.data.nrows()));
    }
    if t.latent.nrows() != w.atoms() || t.latent.ncols() != t.data.ncols() {
        return Err(Error::dim(
            name,
            format!("{}x{}", w.atoms(), t.data.ncols()),
            format!("{}x{}", t.latent.nrows(), t.latent.ncols()),
        ));
    }
    Ok(())
}

/// Adds `scale * data latent^T` to `attract` and `scale * W latent latent^T` to `repel`.
fn accumulate<T: Scalar>(
    w: ArrayView2<'_, T>,
    t: &BatchTerm<'_, T>,
    scale: T,
    data_side: &mut Array2<T>,
    model_side: &mut Array2<T>,
) {
    let ht = t.latent.t();
    data_side.scaled_add(scale, &t.data.dot(&ht));
    model_side.scaled_add(scale, &w.dot(&t.latent.dot(&ht)));
}

/// Multiplicative basis update for the combined objective:
///
/// `W <- W * [tau_W U H^T/N + tau_A W H^ H^^T/N^ + tau_S U~ H~^T/N~]
///          / [tau_W W H H^T/N + tau_A U^ H^^T/N^ + tau_S W H~ H~^T/N~ + gamma]`
///
/// where each count is the number of columns in the corresponding batch. Terms with zero weight
/// may be absent.
pub fn w_update_step<T: Scalar>(
    w: &Basis<T>,
    terms: &BatchTerms<'_, T>,
    weights: &TermWeights<T>,
    gamma: T,
    entry_floor: Option<T>,
) -> Result<Basis<T>> {
    weights.validate()?;
    if !gamma.is_finite() || gamma <= T::zero() {
        return Err(Error::Config(format!("gamma must be > 0, got {gamma}")));
    }
    let shape = (w.features(), w.atoms());
    let mut numer = Array2::<T>::zeros(shape);
    let mut denom = Array2::<T>::zeros(shape);
    let wv = w.view();

    let entries = [
        (terms.weak, weights.weak, "weak batch"),
        (terms.adversarial, weights.adversarial, "adversarial batch"),
        (terms.strong, weights.strong, "strong batch"),
    ];
    for (idx, (term, tau, name)) in entries.into_iter().enumerate() {
        if tau == T::zero() {
            continue;
        }
        let t = term.ok_or_else(|| Error::Config(format!("{name} has non-zero weight but no data")))?;
        check_term(w, &t, name)?;
        if t.data.ncols() == 0 {
            continue;
        }
        let scale = tau / T::from_usize(t.data.ncols()).expect("count fits scalar");
        if idx == 1 {
            // the adversarial term enters with opposite sign
            accumulate(wv, &t, scale, &mut denom, &mut numer);
        } else {
            accumulate(wv, &t, scale, &mut numer, &mut denom);
        }
    }

    let mut next = w.matrix().clone();
    Zip::from(&mut next)
        .and(&numer)
        .and(&denom)
        .for_each(|x, &n, &d| {
            let mut v = *x * n / (d + gamma);
            if let Some(f) = entry_floor {
                v = v.max(f);
            }
            *x = v;
        });
    Ok(Basis::from_trusted(next))
}
