use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{normalize_columns, Basis};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Atoms are randomly drawn data columns.
    #[default]
    Exemplar,
    /// Atoms are uniform random vectors.
    Random,
}

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Basis of `d` data columns drawn uniformly with replacement, each scaled to unit norm.
///
/// With zero training epochs this is the exemplar NMF dictionary.
pub fn init_exemplar<T: Scalar>(u: ArrayView2<'_, T>, d: usize, seed: u64) -> Result<Basis<T>> {
    let mut rng = rng_for(seed, 0);
    exemplar_with(u, d, &mut rng)
}

pub(crate) fn exemplar_with<T: Scalar>(u: ArrayView2<'_, T>, d: usize, rng: &mut ChaCha8Rng) -> Result<Basis<T>> {
    if u.ncols() == 0 || u.nrows() == 0 {
        return Err(Error::Config("exemplar initialization needs at least one data column".into()));
    }
    if d == 0 {
        return Err(Error::Config("number of atoms must be at least 1".into()));
    }
    let mut m = Array2::zeros((u.nrows(), d));
    for k in 0..d {
        let j = rng.random_range(0..u.ncols());
        m.column_mut(k).assign(&u.column(j));
    }
    let mut basis = Basis::new(m)?;
    normalize_columns(&mut basis, &mut [])?;
    Ok(basis)
}

pub(crate) fn random_with<T: Scalar>(features: usize, d: usize, rng: &mut ChaCha8Rng) -> Result<Basis<T>> {
    if d == 0 || features == 0 {
        return Err(Error::Config("random initialization needs positive dimensions".into()));
    }
    let m = Array2::from_shape_simple_fn((features, d), || T::of(rng.random::<f64>()));
    let mut basis = Basis::from_trusted(m);
    normalize_columns(&mut basis, &mut [])?;
    Ok(basis)
}

/// Uniform random basis with unit-norm columns.
pub fn init_random<T: Scalar>(features: usize, d: usize, seed: u64) -> Result<Basis<T>> {
    random_with(features, d, &mut rng_for(seed, 0))
}
