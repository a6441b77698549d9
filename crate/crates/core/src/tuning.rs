//! Random hyperparameter search with optional k-fold cross-validation.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trainer::init::rng_for;

/// Sampling law of one hyperparameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "law")]
pub enum Distribution {
    LogUniform { lo: f64, hi: f64 },
    Uniform { lo: f64, hi: f64 },
    /// Inclusive integer range.
    UniformInt { lo: i64, hi: i64 },
    Categorical { values: Vec<f64> },
}

impl Distribution {
    fn validate(&self, name: &str) -> Result<()> {
        let ok = match self {
            Distribution::LogUniform { lo, hi } => *lo > 0.0 && lo < hi && hi.is_finite(),
            Distribution::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            Distribution::UniformInt { lo, hi } => lo < hi,
            Distribution::Categorical { values } => !values.is_empty() && values.iter().all(|v| v.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid sampling law for `{name}`: {self:?}")))
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> ParamValue {
        match self {
            Distribution::LogUniform { lo, hi } => {
                let (a, b) = (lo.ln(), hi.ln());
                ParamValue::Real((a + (b - a) * rng.random::<f64>()).exp().clamp(*lo, *hi))
            }
            Distribution::Uniform { lo, hi } => ParamValue::Real(lo + (hi - lo) * rng.random::<f64>()),
            Distribution::UniformInt { lo, hi } => ParamValue::Int(rng.random_range(*lo..=*hi)),
            Distribution::Categorical { values } => ParamValue::Real(values[rng.random_range(0..values.len())]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
}

impl ParamValue {
    pub fn as_f64(self) -> f64 {
        match self {
            ParamValue::Int(v) => v as f64,
            ParamValue::Real(v) => v,
        }
    }
}

pub type ParamSet = BTreeMap<String, ParamValue>;

/// Missing fields take the values of [`SearchSpace::default_space`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSpace {
    /// Hyperparameters in sampling order.
    pub params: Vec<(String, Distribution)>,
    pub trials: usize,
    /// Cross-validation folds; `None` evaluates each trial once.
    pub folds: Option<usize>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self::default_space()
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trial count must be at least 1".into()));
        }
        if let Some(k) = self.folds {
            if k < 2 {
                return Err(Error::Config(format!("cross-validation needs at least 2 folds, got {k}")));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for (name, law) in &self.params {
            if !seen.insert(name.as_str()) {
                return Err(Error::Config(format!("hyperparameter `{name}` listed twice")));
            }
            law.validate(name)?;
        }
        Ok(())
    }

    /// Stand-in defaults: penalties and weights log-uniform on [1e-10, 1], 5..=100 epochs,
    /// batch size from {16, 32, 64, 128}, 30 trials, 5 folds.
    pub fn default_space() -> Self {
        let log = || Distribution::LogUniform { lo: 1e-10, hi: 1.0 };
        SearchSpace {
            params: vec![
                ("sparsity".into(), log()),
                ("gamma".into(), log()),
                ("tau_a".into(), log()),
                ("tau_s".into(), log()),
                ("epochs".into(), Distribution::UniformInt { lo: 5, hi: 100 }),
                ("batch".into(), Distribution::Categorical { values: vec![16.0, 32.0, 64.0, 128.0] }),
            ],
            trials: 30,
            folds: Some(5),
        }
    }

    /// Draws every trial's parameters up front so the sequence does not depend on evaluation.
    pub fn sample(&self, seed: u64) -> Result<Vec<ParamSet>> {
        self.validate()?;
        let mut rng = rng_for(seed, 0);
        Ok((0..self.trials)
            .map(|_| self.params.iter().map(|(n, law)| (n.clone(), law.sample(&mut rng))).collect())
            .collect())
    }
}

/// Which part of the data a trial evaluation should hold out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fold {
    pub index: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub params: ParamSet,
    pub fold_scores: Vec<f64>,
    /// Mean over folds; NaN for failed trials.
    pub mean_score: f64,
    pub status: TrialStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    /// Index into `trials` of the best completed trial (first one on ties).
    pub best: usize,
    pub trials: Vec<TrialRecord>,
}

impl SearchOutcome {
    pub fn best_trial(&self) -> &TrialRecord {
        &self.trials[self.best]
    }

    /// CSV with header `trial,params_json,fold_scores,mean_score,status`; fold scores are
    /// `;`-separated.
    pub fn trials_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["trial", "params_json", "fold_scores", "mean_score", "status"])?;
        for t in &self.trials {
            let mut folds = String::new();
            for (k, s) in t.fold_scores.iter().enumerate() {
                if k > 0 {
                    folds.push(';');
                }
                write!(folds, "{s:e}").expect("writing to a string");
            }
            let status = match &t.status {
                TrialStatus::Ok => "ok".to_string(),
                TrialStatus::Failed(msg) => format!("failed: {msg}"),
            };
            w.write_record([
                t.trial.to_string(),
                serde_json::to_string(&t.params)?,
                folds,
                format!("{:e}", t.mean_score),
                status,
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Search(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Search(e.to_string()))
    }
}

/// Samples `space.trials` configurations, scores each with `evaluate` (once per fold when
/// folds are configured, averaging the fold scores) and returns the highest mean score.
///
/// Trials run in parallel; records are ordered by trial index. A trial whose evaluation
/// errors or yields a non-finite score is recorded as failed.
pub fn random_search<F>(space: &SearchSpace, seed: u64, evaluate: F) -> Result<SearchOutcome>
where
    F: Fn(&ParamSet, Option<Fold>) -> Result<f64> + Sync,
{
    let samples = space.sample(seed)?;
    let folds: Vec<Option<Fold>> = match space.folds {
        Some(count) => (0..count).map(|index| Some(Fold { index, count })).collect(),
        None => vec![None],
    };
    let trials: Vec<TrialRecord> = samples
        .into_par_iter()
        .enumerate()
        .map(|(trial, params)| {
            let mut scores = Vec::with_capacity(folds.len());
            let mut status = TrialStatus::Ok;
            for f in &folds {
                match evaluate(&params, *f) {
                    Ok(s) if s.is_finite() => scores.push(s),
                    Ok(s) => {
                        status = TrialStatus::Failed(format!("non-finite score {s}"));
                        break;
                    }
                    Err(e) => {
                        status = TrialStatus::Failed(e.to_string());
                        break;
                    }
                }
            }
            let mean_score = if status == TrialStatus::Ok {
                scores.iter().sum::<f64>() / scores.len() as f64
            } else {
                log::warn!("trial {trial} failed: {status:?}");
                f64::NAN
            };
            TrialRecord { trial, params, fold_scores: scores, mean_score, status }
        })
        .collect();
    let best = trials
        .iter()
        .filter(|t| t.status == TrialStatus::Ok)
        .fold(None::<&TrialRecord>, |acc, t| match acc {
            Some(b) if b.mean_score >= t.mean_score => Some(b),
            _ => Some(t),
        })
        .map(|t| t.trial)
        .ok_or_else(|| Error::Search(format!("all {} trials failed", trials.len())))?;
    Ok(SearchOutcome { best, trials })
}

/// Splits `0..n` into `k` shuffled folds of near-equal size (sizes differ by at most one).
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > n {
        return Err(Error::Config(format!("cannot split {n} items into {k} folds")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_for(seed, 1));
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (p, i) in idx.into_iter().enumerate() {
        folds[p % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Train and validation index sets of one fold.
pub fn fold_split(folds: &[Vec<usize>], fold: usize) -> (Vec<usize>, Vec<usize>) {
    let mut train: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != fold)
        .flat_map(|(_, f)| f.iter().copied())
        .collect();
    train.sort_unstable();
    (train, folds[fold].clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_param(trials: usize) -> SearchSpace {
        SearchSpace {
            params: vec![("x".into(), Distribution::LogUniform { lo: 1e-4, hi: 1e2 })],
            trials,
            folds: None,
        }
    }

    fn unimodal(p: &ParamSet, _: Option<Fold>) -> Result<f64> {
        let x = p["x"].as_f64().log10();
        Ok(-(x - 0.3).powi(2))
    }

    #[test]
    fn single_trial_is_winner() {
        let space = one_param(1);
        let out = random_search(&space, 3, unimodal).unwrap();
        assert_eq!(out.best, 0);
        assert_eq!(out.best_trial().params, space.sample(3).unwrap()[0]);
    }

    #[test]
    fn argmax_over_samples() {
        let out = random_search(&one_param(30), 11, unimodal).unwrap();
        let max = out.trials.iter().map(|t| t.mean_score).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(out.best_trial().mean_score, max);
        for t in &out.trials {
            let x = t.params["x"].as_f64();
            assert!((1e-4..=1e2).contains(&x));
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let a = random_search(&one_param(30), 5, unimodal).unwrap();
        let b = random_search(&one_param(30), 5, unimodal).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trials_csv().unwrap(), b.trials_csv().unwrap());
        let c = random_search(&one_param(30), 6, unimodal).unwrap();
        assert_ne!(a.trials[0].params, c.trials[0].params);
    }

    #[test]
    fn failures_recorded_and_all_failed_is_error() {
        let space = one_param(8);
        let out = random_search(&space, 1, |p, _| {
            if p["x"].as_f64() < 1.0 {
                Err(Error::Search("boom".into()))
            } else {
                Ok(1.0)
            }
        });
        if let Ok(out) = out {
            assert!(out.trials.iter().all(|t| (t.status == TrialStatus::Ok) == (t.params["x"].as_f64() >= 1.0)));
            assert_eq!(out.best_trial().status, TrialStatus::Ok);
        }
        assert!(matches!(
            random_search(&space, 1, |_, _| Err(Error::Search("x".into()))),
            Err(Error::Search(_))
        ));
    }

    #[test]
    fn cv_averages_fold_scores() {
        let mut space = one_param(4);
        space.folds = Some(3);
        let out = random_search(&space, 2, |_, f| Ok(f.unwrap().index as f64)).unwrap();
        for t in &out.trials {
            assert_eq!(t.fold_scores, vec![0.0, 1.0, 2.0]);
            assert_eq!(t.mean_score, 1.0);
        }
        assert_eq!(out.best, 0);
    }

    #[test]
    fn invalid_spaces() {
        let mut s = one_param(0);
        assert!(s.validate().is_err());
        s.trials = 1;
        s.folds = Some(1);
        assert!(s.validate().is_err());
        s.folds = None;
        s.params[0].1 = Distribution::Uniform { lo: 1.0, hi: 1.0 };
        assert!(s.validate().is_err());
        assert!(SearchSpace::default_space().validate().is_ok());
    }

    #[test]
    fn integer_and_categorical_laws() {
        let space = SearchSpace::default_space();
        for p in space.sample(0).unwrap() {
            let e = p["epochs"];
            assert!(matches!(e, ParamValue::Int(v) if (5..=100).contains(&v)));
            assert!([16.0, 32.0, 64.0, 128.0].contains(&p["batch"].as_f64()));
        }
    }

    #[test]
    fn kfold_partitions() {
        let folds = kfold_indices(11, 5, 9).unwrap();
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..11).collect::<Vec<_>>());
        assert!(folds.iter().all(|f| f.len() == 2 || f.len() == 3));
        let (train, val) = fold_split(&folds, 2);
        assert_eq!(train.len() + val.len(), 11);
        assert!(kfold_indices(3, 5, 0).is_err());
    }

    #[test]
    fn csv_layout() {
        let out = random_search(&one_param(2), 0, |_, _| Ok(0.5)).unwrap();
        let csv = out.trials_csv().unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("trial,params_json,fold_scores,mean_score,status"));
        assert!(lines.next().unwrap().starts_with("0,\"{\"\"x\"\":"));
    }
}
