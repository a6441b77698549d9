//! Sparse non-negative encoding: multiplicative updates for
//! `min_{H >= 0} 1/2 ||U - W H||_F^2 + sum_kj lambda_kj H_kj`.

use ndarray::{Array2, ArrayView2, Zip};

use crate::error::{Error, Result};
use crate::model::{validate_nonnegative, Basis, EncodeConfig, Latent};
use crate::scalar::Scalar;

fn check_shapes<T: Scalar>(w: &Basis<T>, u: ArrayView2<'_, T>) -> Result<()> {
    if w.features() != u.nrows() {
        return Err(Error::dim("encoder feature dimension", w.features(), u.nrows()));
    }
    Ok(())
}

/// One multiplicative step `H <- H * (W^T U) / (W^T W H + lambda)` given precomputed
/// `W^T U` and `W^T W H`. Writes into `h` in place.
pub(crate) fn apply_h_step<T: Scalar>(
    h: &mut Array2<T>,
    wtu: ArrayView2<'_, T>,
    wtwh: ArrayView2<'_, T>,
    penalty: ArrayView2<'_, T>,
    floor: Option<T>,
) {
    let guard = T::division_guard();
    Zip::from(h)
        .and(wtu)
        .and(wtwh)
        .and(penalty)
        .for_each(|h, &num, &den, &lam| {
            let d = (den + lam).max(guard);
            let mut v = *h * num / d;
            if let Some(f) = floor {
                v = v.max(f);
            }
            *h = v;
        });
}

/// Single multiplicative update of the codes.
///
/// Entries that are exactly zero stay zero unless an entry floor is configured.
pub fn h_update_step<T: Scalar>(
    h: &Latent<T>,
    w: &Basis<T>,
    u: ArrayView2<'_, T>,
    cfg: &EncodeConfig<T>,
) -> Result<Latent<T>> {
    check_shapes(w, u)?;
    if h.atoms() != w.atoms() || h.cols() != u.ncols() {
        return Err(Error::dim(
            "h_update_step latent shape",
            format!("{}x{}", w.atoms(), u.ncols()),
            format!("{}x{}", h.atoms(), h.cols()),
        ));
    }
    validate_nonnegative(u, "data")?;
    cfg.validate(w.atoms(), u.ncols())?;
    let wt = w.view().reversed_axes();
    let wtu = wt.dot(&u);
    let wtwh = wt.dot(&w.view()).dot(h.matrix());
    let penalty = cfg.penalty(w.atoms(), u.ncols());
    let mut next = h.matrix().clone();
    apply_h_step(&mut next, wtu.view(), wtwh.view(), penalty.view(), cfg.entry_floor);
    Ok(Latent::from_trusted(next))
}

/// Default starting point: `W^T U` clamped from below at `1e-3 * max(W^T U)`.
///
/// The floor is relative so that scaling the data scales the starting point.
pub fn initial_codes<T: Scalar>(w: &Basis<T>, u: ArrayView2<'_, T>) -> Latent<T> {
    let wtu = w.view().reversed_axes().dot(&u);
    let peak = wtu.iter().fold(T::zero(), |a, v| a.max(*v));
    let floor = if peak > T::zero() { peak * T::of(1e-3) } else { T::of(1e-3) };
    Latent::from_trusted(wtu.mapv(|v| v.max(floor)))
}

/// Cached products for repeated encoding against a fixed basis.
pub(crate) struct Encoder<T> {
    wtu: Array2<T>,
    wtw: Array2<T>,
    penalty: Array2<T>,
    data_energy: T,
    floor: Option<T>,
}

impl<T: Scalar> Encoder<T> {
    pub(crate) fn new(w: ArrayView2<'_, T>, u: ArrayView2<'_, T>, cfg: &EncodeConfig<T>) -> Self {
        let wt = w.reversed_axes();
        Encoder {
            wtu: wt.dot(&u),
            wtw: wt.dot(&w),
            penalty: cfg.penalty(w.ncols(), u.ncols()),
            data_energy: u.iter().fold(T::zero(), |a, v| a + *v * *v),
            floor: cfg.entry_floor,
        }
    }

    /// Objective from cached quantities:
    /// `1/2 ||U||^2 - <H, W^T U> + 1/2 <H, W^T W H> + <lambda, H>`.
    fn objective(&self, h: &Array2<T>, wtwh: &Array2<T>) -> T {
        let half = T::of(0.5);
        let mut cross = T::zero();
        let mut quad = T::zero();
        let mut pen = T::zero();
        Zip::from(h)
            .and(&self.wtu)
            .and(wtwh)
            .and(&self.penalty)
            .for_each(|&h, &a, &b, &l| {
                cross += h * a;
                quad += h * b;
                pen += h * l;
            });
        let fit = (half * self.data_energy - cross + half * quad).max(T::zero());
        fit + pen
    }

    /// One step in place; returns the objective *before* the step.
    pub(crate) fn step(&self, h: &mut Array2<T>) -> T {
        let wtwh = self.wtw.dot(h);
        let obj = self.objective(h, &wtwh);
        apply_h_step(h, self.wtu.view(), wtwh.view(), self.penalty.view(), self.floor);
        obj
    }

    pub(crate) fn run(&self, h: &mut Array2<T>, max_iters: usize, rel_tol: T) -> usize {
        let mut prev: Option<T> = None;
        for it in 0..max_iters {
            let obj = self.step(h);
            if let Some(p) = prev {
                let scale = p.abs().max(obj.abs()).max(T::min_positive_value());
                if (p - obj).abs() <= rel_tol * scale {
                    return it + 1;
                }
            }
            prev = Some(obj);
        }
        max_iters
    }
}

/// Encodes `u` against `w`, iterating multiplicative updates until the relative change of the
/// objective drops below `cfg.rel_tol` or `cfg.max_iters` steps have run.
pub fn encode<T: Scalar>(
    w: &Basis<T>,
    u: ArrayView2<'_, T>,
    cfg: &EncodeConfig<T>,
    init: Option<&Latent<T>>,
) -> Result<Latent<T>> {
    check_shapes(w, u)?;
    validate_nonnegative(u, "data")?;
    cfg.validate(w.atoms(), u.ncols())?;
    let mut h = match init {
        Some(h0) => {
            if h0.atoms() != w.atoms() || h0.cols() != u.ncols() {
                return Err(Error::dim(
                    "encode initial latent",
                    format!("{}x{}", w.atoms(), u.ncols()),
                    format!("{}x{}", h0.atoms(), h0.cols()),
                ));
            }
            h0.matrix().clone()
        }
        None => initial_codes(w, u).into_inner(),
    };
    let enc = Encoder::new(w.view(), u, cfg);
    let iters = enc.run(&mut h, cfg.max_iters, cfg.rel_tol);
    log::trace!("encode: {iters} iterations for {} columns", u.ncols());
    Ok(Latent::from_trusted(h))
}

/// Projection of `u` onto the cone spanned by `w`: `W encode(W, U)`.
pub fn project<T: Scalar>(w: &Basis<T>, u: ArrayView2<'_, T>, cfg: &EncodeConfig<T>) -> Result<Array2<T>> {
    let h = encode(w, u, cfg, None)?;
    w.reconstruct(&h)
}

/// Encoder objective `1/2 ||U - W H||_F^2 + sum lambda_kj H_kj`, evaluated from the explicit residual.
pub fn encode_objective<T: Scalar>(
    w: &Basis<T>,
    u: ArrayView2<'_, T>,
    h: &Latent<T>,
    cfg: &EncodeConfig<T>,
) -> Result<T> {
    check_shapes(w, u)?;
    let recon = w.reconstruct(h)?;
    if recon.dim() != u.dim() {
        return Err(Error::dim("encode_objective", format!("{:?}", u.dim()), format!("{:?}", recon.dim())));
    }
    let fit = Zip::from(&recon)
        .and(u)
        .fold(T::zero(), |a, &r, &x| a + (x - r) * (x - r));
    let penalty = cfg.penalty(w.atoms(), u.ncols());
    let pen = Zip::from(h.matrix())
        .and(&penalty)
        .fold(T::zero(), |a, &hv, &l| a + hv * l);
    Ok(T::of(0.5) * fit + pen)
}
