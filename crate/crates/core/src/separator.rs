//! Separation of mixtures with trained bases: joint sparse coding over the concatenated
//! dictionary followed by a magnitude-domain Wiener filter.

use ndarray::{Array1, Array2, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use crate::encode::encode;
use crate::error::{Error, Result};
use crate::model::{validate_nonnegative, Basis, EncodeConfig, Latent};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"), default)]
pub struct SeparationConfig<T> {
    pub sparsity: T,
    /// Per-source sparsity overriding `sparsity`.
    pub source_sparsity: Option<Vec<T>>,
    /// Safe-division constant of the Wiener filter.
    pub epsilon: T,
    pub max_iters: usize,
    pub rel_tol: T,
}

impl<T: Scalar> Default for SeparationConfig<T> {
    fn default() -> Self {
        Self::new(T::of(1e-2))
    }
}

impl<T: Scalar> SeparationConfig<T> {
    pub fn new(sparsity: T) -> Self {
        SeparationConfig {
            sparsity,
            source_sparsity: None,
            epsilon: T::of(1e-12),
            max_iters: 200,
            rel_tol: T::of(1e-6),
        }
    }

    pub fn validate(&self, sources: usize) -> Result<()> {
        if !self.epsilon.is_finite() || self.epsilon <= T::zero() {
            return Err(Error::Config(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if let Some(s) = &self.source_sparsity {
            if s.len() != sources {
                return Err(Error::dim("per-source test sparsity", sources, s.len()));
            }
        }
        Ok(())
    }

    fn sparsity_for(&self, i: usize) -> T {
        self.source_sparsity
            .as_ref()
            .and_then(|s| s.get(i).copied())
            .unwrap_or(self.sparsity)
    }
}

#[derive(Debug, Clone)]
pub struct SeparationResult<T> {
    /// Wiener-filtered estimate of each source's component of the mixture.
    pub components: Vec<Array2<T>>,
    /// Codes of each source.
    pub latents: Vec<Latent<T>>,
    /// `||V - sum_i W_i H_i||_F` of the joint coding.
    pub residual_norm: T,
    /// Set when the joint reconstruction vanished everywhere; components are then all zero.
    pub degenerate: bool,
}

/// Entrywise `v * part_i / (sum_j part_j + epsilon)`.
pub fn wiener_filter<T: Scalar>(v: ArrayView2<'_, T>, parts: &[Array2<T>], epsilon: T) -> Result<Vec<Array2<T>>> {
    if !epsilon.is_finite() || epsilon <= T::zero() {
        return Err(Error::Config(format!("epsilon must be > 0, got {epsilon}")));
    }
    let mut total = Array2::<T>::zeros(v.dim());
    for p in parts {
        if p.dim() != v.dim() {
            return Err(Error::dim("wiener_filter part shape", format!("{:?}", v.dim()), format!("{:?}", p.dim())));
        }
        total += p;
    }
    let denom = total.mapv(|r| r + epsilon);
    Ok(parts
        .iter()
        .map(|p| {
            let mut out = Array2::zeros(v.dim());
            Zip::from(&mut out)
                .and(v)
                .and(p)
                .and(&denom)
                .for_each(|o, &x, &pi, &d| *o = x * pi / d);
            out
        })
        .collect())
}

/// Jointly codes `v` over `[W_1 ... W_S]` and splits it with the Wiener filter.
pub fn separate<T: Scalar>(
    bases: &[Basis<T>],
    v: ArrayView2<'_, T>,
    cfg: &SeparationConfig<T>,
) -> Result<SeparationResult<T>> {
    cfg.validate(bases.len())?;
    validate_nonnegative(v, "mixture")?;
    let w = Basis::concat(bases)?;
    if w.features() != v.nrows() {
        return Err(Error::dim("separate feature dimension", w.features(), v.nrows()));
    }
    let penalties: Array1<T> = bases
        .iter()
        .enumerate()
        .flat_map(|(i, b)| std::iter::repeat_n(cfg.sparsity_for(i), b.atoms()))
        .collect();
    let enc = EncodeConfig::new(cfg.sparsity)
        .with_atom_sparsity(penalties)
        .with_max_iters(cfg.max_iters)
        .with_rel_tol(cfg.rel_tol);
    let h = encode(&w, v, &enc, None)?;

    let mut latents = Vec::with_capacity(bases.len());
    let mut parts = Vec::with_capacity(bases.len());
    let mut offset = 0;
    for b in bases {
        let block = h.row_block(offset, offset + b.atoms());
        offset += b.atoms();
        parts.push(b.reconstruct(&block)?);
        latents.push(block);
    }
    let mut total = Array2::<T>::zeros(v.dim());
    for p in &parts {
        total += p;
    }
    let residual_norm = Zip::from(&total)
        .and(v)
        .fold(T::zero(), |a, &r, &x| a + (x - r) * (x - r))
        .sqrt();
    let degenerate = total.iter().all(|r| *r == T::zero());
    if degenerate {
        log::warn!("joint reconstruction is identically zero; separated components are zero");
    }
    let components = wiener_filter(v, &parts, cfg.epsilon)?;
    Ok(SeparationResult {
        components,
        latents,
        residual_norm,
        degenerate,
    })
}
