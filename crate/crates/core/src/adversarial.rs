//! Adversarial data construction: pseudo-inverse of the mixing operator, mixture weights over
//! the adversarial pool and square-root weight scaling of the pooled columns.

use ndarray::{concatenate, Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const WEIGHT_TOL: f64 = 1e-12;

/// Mixing weights `a` with `v = sum_i a_i u_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingSpec<T> {
    /// Every mixture uses the same weights.
    Deterministic(Vec<T>),
    /// Observed weight vectors, e.g. one per mixture.
    Sampled(Vec<Vec<T>>),
}

fn check_weights<T: Scalar>(a: &[T]) -> Result<()> {
    if a.is_empty() {
        return Err(Error::Validation("mixing weights must not be empty".into()));
    }
    if a.iter().any(|v| !v.is_finite() || *v < T::zero() || *v > T::one()) {
        return Err(Error::Validation(format!("mixing weights must lie in [0, 1], got {a:?}")));
    }
    let sum = a.iter().fold(T::zero(), |s, v| s + *v);
    if (sum - T::one()).abs() > T::of(WEIGHT_TOL) {
        return Err(Error::Validation(format!("mixing weights must sum to 1, got {sum}")));
    }
    Ok(())
}

impl<T: Scalar> MixingSpec<T> {
    pub fn validate(&self) -> Result<()> {
        match self {
            MixingSpec::Deterministic(a) => check_weights(a),
            MixingSpec::Sampled(list) => {
                let first = list
                    .first()
                    .ok_or_else(|| Error::Validation("sampled mixing weights must not be empty".into()))?;
                for a in list {
                    if a.len() != first.len() {
                        return Err(Error::dim("sampled mixing weights", first.len(), a.len()));
                    }
                    check_weights(a)?;
                }
                Ok(())
            }
        }
    }

    pub fn sources(&self) -> usize {
        match self {
            MixingSpec::Deterministic(a) => a.len(),
            MixingSpec::Sampled(list) => list.first().map_or(0, Vec::len),
        }
    }
}

/// Factor `a_i / sum_j a_j^2` of the pseudo-inverse for component `i`.
pub fn inversion_factor<T: Scalar>(a: &[T], i: usize) -> Result<T> {
    let energy = a.iter().fold(T::zero(), |s, v| s + *v * *v);
    if energy == T::zero() {
        return Err(Error::Division("mixing weights are all zero".into()));
    }
    let ai = *a
        .get(i)
        .ok_or_else(|| Error::Config(format!("source index {i} out of range for {} weights", a.len())))?;
    Ok(ai / energy)
}

/// Components of `A^+ v` for the mixing operator `A u = sum_i a_i u_i`.
pub fn naive_invert<T: Scalar>(a: &[T], v: ArrayView1<'_, T>) -> Result<Vec<Array1<T>>> {
    check_weights(a)?;
    if v.iter().any(|x| !x.is_finite() || *x < T::zero()) {
        return Err(Error::Validation("mixture must be finite and non-negative".into()));
    }
    (0..a.len())
        .map(|i| inversion_factor(a, i).map(|f| v.mapv(|x| x * f)))
        .collect()
}

/// `v = sum_i a_i u_i`.
pub fn mix_signals<T: Scalar>(a: &[T], sources: &[ArrayView1<'_, T>]) -> Result<Array1<T>> {
    check_weights(a)?;
    if a.len() != sources.len() {
        return Err(Error::dim("mix_signals source count", a.len(), sources.len()));
    }
    let len = sources[0].len();
    let mut v = Array1::zeros(len);
    for (ai, u) in a.iter().zip(sources) {
        if u.len() != len {
            return Err(Error::dim("mix_signals signal length", len, u.len()));
        }
        v.scaled_add(*ai, u);
    }
    Ok(v)
}

/// Column-wise mixing of equally sized source matrices.
pub fn mix_matrices<T: Scalar>(a: &[T], sources: &[ArrayView2<'_, T>]) -> Result<Array2<T>> {
    check_weights(a)?;
    if a.len() != sources.len() {
        return Err(Error::dim("mix_matrices source count", a.len(), sources.len()));
    }
    let shape = sources[0].dim();
    let mut v = Array2::zeros(shape);
    for (ai, u) in a.iter().zip(sources) {
        if u.dim() != shape {
            return Err(Error::dim("mix_matrices shape", format!("{shape:?}"), format!("{:?}", u.dim())));
        }
        v.scaled_add(*ai, u);
    }
    Ok(v)
}

/// `beta_i = E_a[(a_i / sum_j a_j^2)^2]`, with the sample mean for sampled weights.
pub fn beta<T: Scalar>(mix: &MixingSpec<T>, i: usize) -> Result<T> {
    mix.validate()?;
    match mix {
        MixingSpec::Deterministic(a) => inversion_factor(a, i).map(|f| f * f),
        MixingSpec::Sampled(list) => {
            let mut total = T::zero();
            for a in list {
                let f = inversion_factor(a, i)?;
                total += f * f;
            }
            Ok(total / T::from_usize(list.len()).expect("count fits scalar"))
        }
    }
}

/// Data-proportional adversarial weights for source `i`:
/// `omega_ij = N_j / N^_i` for `j != i` and `omega_ii` (the mixed-data weight) takes the rest,
/// where `N^_i = N_V + sum_{j != i} N_j`.
pub fn default_omega<T: Scalar>(counts: &[usize], mixed: usize, i: usize) -> Result<Vec<T>> {
    if i >= counts.len() {
        return Err(Error::Config(format!("source index {i} out of range for {} sources", counts.len())));
    }
    let total: usize = mixed + counts.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, n)| n).sum::<usize>();
    if total == 0 {
        return Err(Error::Config(format!("source {i} has no adversarial data available")));
    }
    let total_t = T::from_usize(total).expect("count fits scalar");
    let mut omega: Vec<T> = counts
        .iter()
        .map(|&n| T::from_usize(n).expect("count fits scalar") / total_t)
        .collect();
    omega[i] = T::zero();
    let rest = omega.iter().fold(T::zero(), |s, v| s + *v);
    omega[i] = T::one() - rest;
    Ok(omega)
}

/// Adversarial pool configuration for all sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarialSpec<T> {
    /// `omega[i][j]` weights source `j`'s data in source `i`'s pool; the diagonal weights
    /// naively inverted mixtures.
    pub omega: Vec<Vec<T>>,
    pub include_naive_inversion: bool,
    /// Explicit `beta_i`; when present the mixed columns enter as raw `V` scaled by
    /// `sqrt(omega_ii beta_i)` instead of per-column inversion.
    pub beta: Option<Vec<T>>,
}

impl<T: Scalar> AdversarialSpec<T> {
    /// Proportional weights for every source.
    pub fn proportional(counts: &[usize], mixed: usize) -> Result<Self> {
        let omega = (0..counts.len())
            .map(|i| default_omega(counts, mixed, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(AdversarialSpec {
            omega,
            include_naive_inversion: mixed > 0,
            beta: None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.omega.len();
        for (i, row) in self.omega.iter().enumerate() {
            if row.len() != s {
                return Err(Error::dim("omega row length", s, row.len()));
            }
            check_weights(row).map_err(|e| Error::Config(format!("omega row {i}: {e}")))?;
        }
        if let Some(b) = &self.beta {
            if b.len() != s {
                return Err(Error::dim("beta length", s, b.len()));
            }
            if b.iter().any(|v| !v.is_finite() || *v <= T::zero()) {
                return Err(Error::Config("beta values must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Adversarial data `U^_i` with the per-column sparsity multipliers `sqrt(omega)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledDataset<T> {
    pub data: Array2<T>,
    pub lambda_scale: Array1<T>,
}

impl<T: Scalar> ScaledDataset<T> {
    pub fn cols(&self) -> usize {
        self.data.ncols()
    }
}

/// Builds `U^_i = [sqrt(w_i1) U_1 ... sqrt(w_iS) U_S  sqrt(w_ii) V_i]` (own source excluded).
///
/// Mixed columns are inverted exactly when the weights of every mixture are known
/// (deterministic weights, or one sampled weight vector per mixture column); otherwise, or when
/// `spec.beta` is set, raw mixtures are scaled by `sqrt(omega_ii beta_i)`. Datasets with zero
/// weight are left out of the pool.
pub fn assemble_adversarial<T: Scalar>(
    i: usize,
    sources: &[ArrayView2<'_, T>],
    mixed: Option<ArrayView2<'_, T>>,
    spec: &AdversarialSpec<T>,
    mix: &MixingSpec<T>,
) -> Result<ScaledDataset<T>> {
    spec.validate()?;
    mix.validate()?;
    let s = spec.omega.len();
    if sources.len() != s {
        return Err(Error::dim("assemble_adversarial source count", s, sources.len()));
    }
    if i >= s {
        return Err(Error::Config(format!("source index {i} out of range for {s} sources")));
    }
    let m = sources[i].nrows();
    let omega = &spec.omega[i];
    let mut blocks: Vec<Array2<T>> = Vec::new();
    let mut scales: Vec<T> = Vec::new();

    for (j, u) in sources.iter().enumerate() {
        if u.nrows() != m {
            return Err(Error::dim("adversarial feature dimension", m, u.nrows()));
        }
        if j == i || omega[j] == T::zero() || u.ncols() == 0 {
            continue;
        }
        let root = omega[j].sqrt();
        blocks.push(u.mapv(|x| x * root));
        scales.extend(std::iter::repeat_n(root, u.ncols()));
    }

    if spec.include_naive_inversion && omega[i] > T::zero() {
        if let Some(v) = mixed.filter(|v| v.ncols() > 0) {
            if v.nrows() != m {
                return Err(Error::dim("adversarial mixed feature dimension", m, v.nrows()));
            }
            if mix.sources() != s {
                return Err(Error::dim("mixing weight count", s, mix.sources()));
            }
            let root = omega[i].sqrt();
            let per_column: Option<Vec<T>> = match (&spec.beta, mix) {
                (Some(_), _) => None,
                (None, MixingSpec::Deterministic(a)) => Some(vec![inversion_factor(a, i)?; v.ncols()]),
                (None, MixingSpec::Sampled(list)) if list.len() == v.ncols() => Some(
                    list.iter()
                        .map(|a| inversion_factor(a, i))
                        .collect::<Result<Vec<_>>>()?,
                ),
                (None, MixingSpec::Sampled(_)) => None,
            };
            let block = match per_column {
                Some(factors) => {
                    let mut block = v.to_owned();
                    for (mut col, f) in block.columns_mut().into_iter().zip(factors) {
                        let k = root * f;
                        col.mapv_inplace(|x| x * k);
                    }
                    block
                }
                None => {
                    let b = match &spec.beta {
                        Some(b) => b[i],
                        None => beta(mix, i)?,
                    };
                    let k = (omega[i] * b).sqrt();
                    v.mapv(|x| x * k)
                }
            };
            scales.extend(std::iter::repeat_n(root, block.ncols()));
            blocks.push(block);
        }
    }

    if blocks.is_empty() {
        return Err(Error::Config(format!(
            "adversarial pool for source {i} is empty: all weight lies on empty datasets"
        )));
    }
    let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
    let data = concatenate(Axis(1), &views).expect("feature dimensions checked");
    Ok(ScaledDataset {
        data,
        lambda_scale: Array1::from(scales),
    })
}
