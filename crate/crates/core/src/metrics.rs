//! Separation quality metrics and their aggregation over items and sources.

use std::fmt;

use ndarray::{ArrayView1, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A decibel score; `Exact` marks a perfect estimate (zero error).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Db {
    Value(f64),
    Exact,
}

impl Db {
    pub fn as_f64(self) -> f64 {
        match self {
            Db::Value(v) => v,
            Db::Exact => f64::INFINITY,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Db::Exact)
    }

    pub fn parse(s: &str) -> Option<Db> {
        match s.trim() {
            "exact" | "inf" => Some(Db::Exact),
            other => other.parse::<f64>().ok().map(Db::Value),
        }
    }
}

impl fmt::Display for Db {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Db::Value(v) => write!(f, "{v:.6}"),
            Db::Exact => f.write_str("exact"),
        }
    }
}

/// `10 log10(peak^2 / MSE)`.
pub fn psnr<T: Scalar>(reference: ArrayView2<'_, T>, estimate: ArrayView2<'_, T>, peak: f64) -> Result<Db> {
    if reference.dim() != estimate.dim() {
        return Err(Error::dim(
            "psnr shapes",
            format!("{:?}", reference.dim()),
            format!("{:?}", estimate.dim()),
        ));
    }
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::Validation(format!("psnr peak must be > 0, got {peak}")));
    }
    if reference.is_empty() {
        return Err(Error::Validation("psnr of empty arrays".into()));
    }
    let sse = Zip::from(reference)
        .and(estimate)
        .fold(0.0f64, |a, &r, &e| {
            let d = (r - e).as_f64();
            a + d * d
        });
    let mse = sse / reference.len() as f64;
    if mse == 0.0 {
        return Ok(Db::Exact);
    }
    Ok(Db::Value(10.0 * (peak * peak / mse).log10()))
}

/// PSNR of every column (one image per column).
pub fn psnr_columns<T: Scalar>(reference: ArrayView2<'_, T>, estimate: ArrayView2<'_, T>, peak: f64) -> Result<Vec<Db>> {
    if reference.dim() != estimate.dim() {
        return Err(Error::dim(
            "psnr shapes",
            format!("{:?}", reference.dim()),
            format!("{:?}", estimate.dim()),
        ));
    }
    reference
        .columns()
        .into_iter()
        .zip(estimate.columns())
        .map(|(r, e)| psnr(r.insert_axis(ndarray::Axis(1)), e.insert_axis(ndarray::Axis(1)), peak))
        .collect()
}

/// Scale-invariant signal-to-distortion ratio with mean removal.
///
/// Distortion at the rounding floor (energy ratio below `(n eps)^2`) is reported as exact, so a
/// positively scaled copy of the reference scores exact for every scale.
pub fn si_sdr<T: Scalar>(reference: ArrayView1<'_, T>, estimate: ArrayView1<'_, T>) -> Result<Db> {
    if reference.len() != estimate.len() {
        return Err(Error::dim("si_sdr lengths", reference.len(), estimate.len()));
    }
    if reference.is_empty() {
        return Err(Error::Validation("si_sdr of empty signals".into()));
    }
    let n = reference.len() as f64;
    let rm = reference.iter().map(|v| v.as_f64()).sum::<f64>() / n;
    let em = estimate.iter().map(|v| v.as_f64()).sum::<f64>() / n;
    let s: Vec<f64> = reference.iter().map(|v| v.as_f64() - rm).collect();
    let e: Vec<f64> = estimate.iter().map(|v| v.as_f64() - em).collect();
    let energy: f64 = s.iter().map(|x| x * x).sum();
    if energy == 0.0 {
        return Err(Error::Validation("si_sdr reference is zero after mean removal".into()));
    }
    let alpha = s.iter().zip(&e).map(|(a, b)| a * b).sum::<f64>() / energy;
    let target: f64 = alpha * alpha * energy;
    let noise: f64 = s.iter().zip(&e).map(|(a, b)| (alpha * a - b).powi(2)).sum();
    let floor = (n * f64::EPSILON).powi(2);
    if noise <= floor * target {
        return Ok(Db::Exact);
    }
    Ok(Db::Value(10.0 * (target / noise).log10()))
}

/// Summary of per-item scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub items: Vec<Db>,
    pub weights: Option<Vec<f64>>,
    /// Number of items entering the statistics (finite scores).
    pub count: usize,
    pub exact_count: usize,
    pub mean: f64,
    pub median: f64,
    pub standard_error: f64,
}

fn median_of(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Statistics of a list of scores. Exact scores are counted separately and excluded from the
/// mean, median and standard error, which are NaN if no finite score is left.
pub fn summarize(items: Vec<Db>) -> Result<MetricReport> {
    if items.is_empty() {
        return Err(Error::Validation("cannot aggregate an empty list of scores".into()));
    }
    let mut finite: Vec<f64> = items.iter().map(|d| d.as_f64()).filter(|v| v.is_finite()).collect();
    let exact_count = items.iter().filter(|d| d.is_exact()).count();
    let n = finite.len();
    let (mean, median, se) = if n == 0 {
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        finite.sort_by(f64::total_cmp);
        let mean = finite.iter().sum::<f64>() / n as f64;
        let se = if n > 1 {
            let var = finite.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        (mean, median_of(&finite), se)
    };
    Ok(MetricReport {
        items,
        weights: None,
        count: n,
        exact_count,
        mean,
        median,
        standard_error: se,
    })
}

/// Combines per-source scores (`scores[source][item]`) into one score per item using the
/// weighted mean over sources, then summarizes the items. Sources with weight zero are ignored.
pub fn aggregate(scores: &[Vec<Db>], weights: &[f64]) -> Result<MetricReport> {
    if scores.is_empty() || scores[0].is_empty() {
        return Err(Error::Validation("cannot aggregate an empty list of scores".into()));
    }
    if weights.len() != scores.len() {
        return Err(Error::dim("aggregate weights", scores.len(), weights.len()));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || weights.iter().all(|w| *w == 0.0) {
        return Err(Error::Validation(format!("weights must be >= 0 and not all zero, got {weights:?}")));
    }
    let items = scores[0].len();
    if scores.iter().any(|s| s.len() != items) {
        return Err(Error::Validation("every source needs the same number of scores".into()));
    }
    let total: f64 = weights.iter().sum();
    let combined: Vec<Db> = (0..items)
        .map(|k| {
            let active = scores.iter().zip(weights).filter(|(_, w)| **w > 0.0);
            let mut acc = 0.0;
            for (s, w) in active {
                match s[k] {
                    Db::Exact => return Db::Exact,
                    Db::Value(v) => acc += w * v,
                }
            }
            Db::Value(acc / total)
        })
        .collect();
    let mut report = summarize(combined)?;
    report.weights = Some(weights.to_vec());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1};

    #[test]
    fn psnr_examples() {
        let r = array![[0.5, 0.5], [0.5, 0.5]];
        assert_eq!(psnr(r.view(), r.view(), 1.0).unwrap(), Db::Exact);
        let e = r.mapv(|v| v + 0.1);
        let p = psnr(r.view(), e.view(), 1.0).unwrap().as_f64();
        assert!((p - 20.0).abs() < 1e-9);
        let e = r.mapv(|v| v + 1.0);
        assert!(psnr(r.view(), e.view(), 1.0).unwrap().as_f64().abs() < 1e-12);
        assert!(psnr(r.view(), array![[1.0]].view(), 1.0).is_err());
    }

    #[test]
    fn psnr_detects_shift_symmetrically() {
        let r = Array1::linspace(0.0, 1.0, 16).into_shape_with_order((4, 4)).unwrap();
        let mut last = f64::INFINITY;
        for c in [0.01, 0.05, 0.2, 0.5] {
            let up = psnr(r.view(), r.mapv(|v| v + c).view(), 1.0).unwrap().as_f64();
            let down = psnr(r.view(), r.mapv(|v| v - c).view(), 1.0).unwrap().as_f64();
            assert!((up - down).abs() < 1e-9);
            assert!(up < last);
            last = up;
        }
    }

    #[test]
    fn si_sdr_scale_invariance() {
        let s = array![0.1, -0.4, 0.9, 0.3, -0.2];
        for c in [0.01, 1.0, 7.5] {
            assert_eq!(si_sdr(s.view(), s.mapv(|x| x * c).view()).unwrap(), Db::Exact);
        }
        assert!(si_sdr(array![1.0, 1.0].view(), array![1.0, 2.0].view()).is_err());
    }

    #[test]
    fn si_sdr_orthogonal_error_ten_db() {
        // zero-mean reference and a zero-mean error orthogonal to it with 1/10 the energy
        let s = array![1.0, -1.0, 1.0, -1.0];
        let e = array![1.0, 1.0, -1.0, -1.0].mapv(|x: f64| x * (0.1f64).sqrt());
        let est = &s + &e;
        let v = si_sdr(s.view(), est.view()).unwrap().as_f64();
        assert!((v - 10.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn si_sdr_negated_reference() {
        let s = array![0.3, -0.1, 0.5, -0.7];
        let est = s.mapv(|x| -x);
        // alpha = -1, error = -s - (-s)... exactly representable: alpha s - est = 0
        assert_eq!(si_sdr(s.view(), est.view()).unwrap(), Db::Exact);
        let est = s.mapv(|x| -x) + array![0.05, 0.0, 0.0, 0.0];
        let v = si_sdr(s.view(), est.view()).unwrap().as_f64();
        assert!(v.is_finite());
    }

    #[test]
    fn aggregate_examples() {
        let r = aggregate(&[vec![Db::Value(10.0)], vec![Db::Value(20.0)]], &[1.0, 1.0]).unwrap();
        assert_eq!(r.mean, 15.0);
        let r = aggregate(&[vec![Db::Value(10.0)], vec![Db::Value(20.0)]], &[1.0, 0.0]).unwrap();
        assert_eq!(r.mean, 10.0);
        let r = summarize(vec![Db::Value(3.5)]).unwrap();
        assert_eq!((r.mean, r.median, r.standard_error), (3.5, 3.5, 0.0));
        assert!(summarize(vec![]).is_err());
        assert!(aggregate(&[vec![Db::Value(1.0)]], &[0.0]).is_err());
    }

    #[test]
    fn summary_statistics() {
        let r = summarize(vec![Db::Value(1.0), Db::Value(2.0), Db::Value(4.0), Db::Exact]).unwrap();
        assert_eq!(r.count, 3);
        assert_eq!(r.exact_count, 1);
        assert_eq!(r.median, 2.0);
        assert!((r.mean - 7.0 / 3.0).abs() < 1e-15);
        let var = ((1.0 - 7.0 / 3.0f64).powi(2) + (2.0 - 7.0 / 3.0f64).powi(2) + (4.0 - 7.0 / 3.0f64).powi(2)) / 2.0;
        assert!((r.standard_error - (var / 3.0).sqrt()).abs() < 1e-15);
        let even = summarize(vec![Db::Value(1.0), Db::Value(3.0)]).unwrap();
        assert_eq!(even.median, 2.0);
    }
}
