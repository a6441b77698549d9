//! Batch scheduling for loss terms backed by datasets of different sizes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BatchStrategy {
    /// Batch sizes follow the dataset sizes so every term has the designated term's batch count.
    Proportional,
    /// The epoch ends once the term with the fewest batches is exhausted.
    Undersample,
    /// The epoch ends once the term with the most batches is exhausted; shorter terms wrap
    /// around circularly from their first columns.
    #[default]
    Oversample,
    /// Every term keeps its own cursor and reshuffles only when it runs out.
    Iterative,
}

/// Which loss term a dataset belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    #[default]
    Weak,
    Adversarial,
    Strong,
}

impl TermKind {
    pub const ALL: [TermKind; 3] = [TermKind::Weak, TermKind::Adversarial, TermKind::Strong];

    pub fn index(self) -> usize {
        match self {
            TermKind::Weak => 0,
            TermKind::Adversarial => 1,
            TermKind::Strong => 2,
        }
    }
}

/// Per-epoch schedule: batch count plus the batch size used for each active term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchPlan {
    pub strategy: BatchStrategy,
    pub num_batches: usize,
    /// `(dataset size, batch size)` per term; `None` for terms that are not trained.
    pub terms: [Option<(usize, usize)>; 3],
}

fn batches_for(size: usize, batch: usize) -> usize {
    size.div_ceil(batch)
}

/// Computes the schedule. `sizes[t]` / `batch_sizes[t]` give dataset and requested batch size of
/// term `t` (indexed as [`TermKind::index`]); a requested batch of `None` means the full dataset.
pub fn batch_plan(
    sizes: [Option<usize>; 3],
    batch_sizes: [Option<usize>; 3],
    strategy: BatchStrategy,
    designated: TermKind,
) -> Result<BatchPlan> {
    let mut terms: [Option<(usize, usize)>; 3] = [None; 3];
    for t in 0..3 {
        if let Some(n) = sizes[t] {
            if n == 0 {
                continue;
            }
            let b = match batch_sizes[t] {
                Some(0) => return Err(Error::Config("batch sizes must be at least 1".into())),
                Some(b) => b.min(n),
                None => n,
            };
            terms[t] = Some((n, b));
        }
    }
    let (des_n, des_b) = terms[designated.index()].ok_or_else(|| {
        Error::Config(format!("designated term {designated:?} has no data to sample from"))
    })?;
    let counts = terms.iter().flatten().map(|&(n, b)| batches_for(n, b));
    let num_batches = match strategy {
        BatchStrategy::Undersample => counts.min().expect("designated term present"),
        BatchStrategy::Oversample => counts.max().expect("designated term present"),
        BatchStrategy::Proportional | BatchStrategy::Iterative => batches_for(des_n, des_b),
    };
    if strategy == BatchStrategy::Proportional {
        for t in terms.iter_mut().flatten() {
            t.1 = batches_for(t.0, num_batches).max(1);
        }
        terms[designated.index()] = Some((des_n, des_b));
    }
    Ok(BatchPlan {
        strategy,
        num_batches,
        terms,
    })
}

impl BatchPlan {
    pub fn batch_size(&self, term: TermKind) -> Option<usize> {
        self.terms[term.index()].map(|(_, b)| b)
    }

    /// Positions (into the term's shuffled order) of batch `b` for the stateless strategies.
    ///
    /// A term walks through its data in order; once exhausted it wraps around circularly from
    /// its first position. The final batch of a term is truncated rather than wrapped.
    pub fn positions(&self, term: TermKind, b: usize) -> Vec<usize> {
        let Some((n, size)) = self.terms[term.index()] else {
            return Vec::new();
        };
        let own = batches_for(n, size);
        let start = b * size;
        if b < own {
            (start..(start + size).min(n)).collect()
        } else {
            (start..start + size).map(|p| p % n).collect()
        }
    }
}

/// Sampling state of one term for the iterative strategy.
#[derive(Debug, Clone)]
pub(crate) struct Cursor {
    pub pos: usize,
}

impl Cursor {
    /// Next batch of positions; returns `true` in the second slot when the data was exhausted
    /// and should be reshuffled before the next call.
    pub(crate) fn next(&mut self, n: usize, size: usize) -> (Vec<usize>, bool) {
        let end = (self.pos + size).min(n);
        let out: Vec<usize> = (self.pos..end).collect();
        self.pos = end;
        let exhausted = self.pos >= n;
        if exhausted {
            self.pos = 0;
        }
        (out, exhausted)
    }
}
