//! Non-negative model types: dictionaries (bases), latent codes and encoder settings.

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Checks that a data matrix is non-empty and every entry is finite and non-negative.
pub fn validate_nonnegative<T: Scalar>(m: ArrayView2<'_, T>, what: &str) -> Result<()> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::Validation(format!(
            "{what} must have at least one row and one column, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if let Some(((r, c), v)) = m
        .indexed_iter()
        .find(|(_, v)| !v.is_finite() || **v < T::zero())
    {
        return Err(Error::Validation(format!(
            "{what} entry ({r}, {c}) = {v} is negative or not finite"
        )));
    }
    Ok(())
}

/// Dictionary of non-negative atoms, one per column (`features x atoms`).
#[derive(Debug, Clone, PartialEq)]
pub struct Basis<T> {
    matrix: Array2<T>,
}

impl<T: Scalar> Basis<T> {
    pub fn new(matrix: Array2<T>) -> Result<Self> {
        validate_nonnegative(matrix.view(), "basis")?;
        Ok(Basis { matrix })
    }

    /// Wraps a matrix the caller knows to be non-negative (update outputs).
    pub(crate) fn from_trusted(matrix: Array2<T>) -> Self {
        debug_assert!(matrix.iter().all(|v| *v >= T::zero()));
        Basis { matrix }
    }

    pub fn features(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn atoms(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &Array2<T> {
        &self.matrix
    }

    pub fn view(&self) -> ArrayView2<'_, T> {
        self.matrix.view()
    }

    pub fn into_inner(self) -> Array2<T> {
        self.matrix
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut Array2<T> {
        &mut self.matrix
    }

    pub fn column_norms(&self) -> Array1<T> {
        self.matrix
            .columns()
            .into_iter()
            .map(|c| c.dot(&c).sqrt())
            .collect()
    }

    /// Side-by-side concatenation `[W_1 W_2 ... W_S]`.
    pub fn concat(parts: &[Basis<T>]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Config("cannot concatenate an empty list of bases".into()))?;
        for p in parts {
            if p.features() != first.features() {
                return Err(Error::dim("basis concatenation", first.features(), p.features()));
            }
        }
        let views: Vec<_> = parts.iter().map(|p| p.view()).collect();
        let matrix = concatenate(Axis(1), &views).expect("row counts checked");
        Ok(Basis { matrix })
    }

    /// Reconstruction `W H`.
    pub fn reconstruct(&self, latent: &Latent<T>) -> Result<Array2<T>> {
        if latent.atoms() != self.atoms() {
            return Err(Error::dim("reconstruction", self.atoms(), latent.atoms()));
        }
        Ok(self.matrix.dot(&latent.matrix))
    }
}

/// Non-negative latent codes, one column per data sample (`atoms x samples`).
#[derive(Debug, Clone, PartialEq)]
pub struct Latent<T> {
    matrix: Array2<T>,
}

impl<T: Scalar> Latent<T> {
    pub fn new(matrix: Array2<T>) -> Result<Self> {
        validate_nonnegative(matrix.view(), "latent")?;
        Ok(Latent { matrix })
    }

    pub(crate) fn from_trusted(matrix: Array2<T>) -> Self {
        debug_assert!(matrix.iter().all(|v| *v >= T::zero()));
        Latent { matrix }
    }

    pub fn atoms(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &Array2<T> {
        &self.matrix
    }

    pub fn view(&self) -> ArrayView2<'_, T> {
        self.matrix.view()
    }

    pub fn into_inner(self) -> Array2<T> {
        self.matrix
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut Array2<T> {
        &mut self.matrix
    }

    /// Rows `start..end`, i.e. the block of codes belonging to one source.
    pub fn row_block(&self, start: usize, end: usize) -> Latent<T> {
        Latent {
            matrix: self.matrix.slice(s![start..end, ..]).to_owned(),
        }
    }

    /// Entrywise l1 norm.
    pub fn l1(&self) -> T {
        self.matrix.iter().fold(T::zero(), |acc, v| acc + *v)
    }
}

/// Settings for the sparse non-negative encoder.
///
/// The penalty on entry `(k, j)` of the code is `base_k * column_scale_j`, where `base_k` is
/// `atom_sparsity[k]` when given and `sparsity` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodeConfig<T> {
    pub sparsity: T,
    pub max_iters: usize,
    pub rel_tol: T,
    /// Per-column multipliers of the penalty (adversarial data scaling).
    pub column_sparsity: Option<Array1<T>>,
    /// Per-atom absolute penalties; used when sources carry different sparsity.
    pub atom_sparsity: Option<Array1<T>>,
    /// Lower bound applied to codes after every update; `None` keeps exact zeros absorbing.
    pub entry_floor: Option<T>,
}

impl<T: Scalar> EncodeConfig<T> {
    pub fn new(sparsity: T) -> Self {
        EncodeConfig {
            sparsity,
            max_iters: 200,
            rel_tol: T::of(1e-6),
            column_sparsity: None,
            atom_sparsity: None,
            entry_floor: None,
        }
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_rel_tol(mut self, rel_tol: T) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_column_sparsity(mut self, scale: Array1<T>) -> Self {
        self.column_sparsity = Some(scale);
        self
    }

    pub fn with_atom_sparsity(mut self, penalties: Array1<T>) -> Self {
        self.atom_sparsity = Some(penalties);
        self
    }

    pub fn with_entry_floor(mut self, floor: Option<T>) -> Self {
        self.entry_floor = floor;
        self
    }

    pub fn validate(&self, atoms: usize, cols: usize) -> Result<()> {
        let bad = |v: T| !v.is_finite() || v < T::zero();
        if bad(self.sparsity) {
            return Err(Error::Validation(format!("sparsity must be >= 0, got {}", self.sparsity)));
        }
        if self.max_iters == 0 {
            return Err(Error::Validation("max_iters must be at least 1".into()));
        }
        if bad(self.rel_tol) {
            return Err(Error::Validation(format!("rel_tol must be >= 0, got {}", self.rel_tol)));
        }
        if let Some(scale) = &self.column_sparsity {
            if scale.len() != cols {
                return Err(Error::dim("per-column sparsity", cols, scale.len()));
            }
            if scale.iter().any(|v| bad(*v)) {
                return Err(Error::Validation("per-column sparsity must be >= 0".into()));
            }
        }
        if let Some(pen) = &self.atom_sparsity {
            if pen.len() != atoms {
                return Err(Error::dim("per-atom sparsity", atoms, pen.len()));
            }
            if pen.iter().any(|v| bad(*v)) {
                return Err(Error::Validation("per-atom sparsity must be >= 0".into()));
            }
        }
        if let Some(f) = self.entry_floor {
            if bad(f) {
                return Err(Error::Validation("entry floor must be >= 0".into()));
            }
        }
        Ok(())
    }

    /// Penalty matrix `atoms x cols`.
    pub(crate) fn penalty(&self, atoms: usize, cols: usize) -> Array2<T> {
        let rows: Array1<T> = match &self.atom_sparsity {
            Some(p) => p.clone(),
            None => Array1::from_elem(atoms, self.sparsity),
        };
        let colscale: Array1<T> = match &self.column_sparsity {
            Some(c) => c.clone(),
            None => Array1::from_elem(cols, T::one()),
        };
        Array2::from_shape_fn((atoms, cols), |(k, j)| rows[k] * colscale[j])
    }
}

/// Scales every non-zero column of `basis` to unit Euclidean norm and multiplies the matching
/// row of each attached latent by the former norm, so every product `W H` is preserved.
///
/// All-zero columns are left untouched. Returns the former column norms.
pub fn normalize_columns<T: Scalar>(basis: &mut Basis<T>, attached: &mut [&mut Latent<T>]) -> Result<Array1<T>> {
    for lat in attached.iter() {
        if lat.atoms() != basis.atoms() {
            return Err(Error::dim("normalize_columns latent rows", basis.atoms(), lat.atoms()));
        }
    }
    let norms = basis.column_norms();
    for (k, &n) in norms.iter().enumerate() {
        if n > T::zero() && n != T::one() {
            basis.matrix.column_mut(k).mapv_inplace(|v| v / n);
            for lat in attached.iter_mut() {
                lat.matrix.row_mut(k).mapv_inplace(|v| v * n);
            }
        }
    }
    Ok(norms)
}

/// Rescales the rows `offset..offset + norms.len()` of a latent by the given norms.
pub(crate) fn rescale_rows<T: Scalar>(latent: &mut Latent<T>, offset: usize, norms: &Array1<T>) {
    for (k, &n) in norms.iter().enumerate() {
        if n > T::zero() && n != T::one() {
            latent.matrix.row_mut(offset + k).mapv_inplace(|v| v * n);
        }
    }
}
