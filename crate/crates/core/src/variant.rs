//! Method presets and the term-weight patterns each method admits.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::TermWeights;
use crate::scalar::Scalar;
use crate::trainer::{InitMode, TrainConfig};

/// Default adversarial weight for the adversarial variants.
pub const DEFAULT_TAU_A: f64 = 0.2;
/// Default strong weight for the combined variant.
pub const DEFAULT_TAU_S: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "nmf")]
    Nmf,
    /// Exemplar NMF: atoms are training columns, no updates.
    #[serde(rename = "enmf")]
    Enmf,
    #[serde(rename = "mdnmf")]
    Mdnmf,
    #[serde(rename = "dnmf")]
    Dnmf,
    #[serde(rename = "d+mdnmf")]
    DMdnmf,
    /// Semi-supervised: known sources are fitted with weak and optional adversarial terms, the
    /// last source is estimated from mixtures.
    #[serde(rename = "semi")]
    Semi,
}

/// Explicit weights requested by the user; `None` keeps the preset value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeightOverrides<T> {
    pub weak: Option<T>,
    pub adversarial: Option<T>,
    pub strong: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Zero,
    One,
    Positive,
    NonNegative,
}

impl Slot {
    fn admits(self, v: f64) -> bool {
        match self {
            Slot::Zero => v == 0.0,
            Slot::One => v == 1.0,
            Slot::Positive => v > 0.0,
            Slot::NonNegative => v >= 0.0,
        }
    }

    fn describe(self) -> &'static str {
        match self {
            Slot::Zero => "= 0",
            Slot::One => "= 1",
            Slot::Positive => "> 0",
            Slot::NonNegative => ">= 0",
        }
    }
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Nmf,
        Variant::Enmf,
        Variant::Mdnmf,
        Variant::Dnmf,
        Variant::DMdnmf,
        Variant::Semi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Nmf => "nmf",
            Variant::Enmf => "enmf",
            Variant::Mdnmf => "mdnmf",
            Variant::Dnmf => "dnmf",
            Variant::DMdnmf => "d+mdnmf",
            Variant::Semi => "semi",
        }
    }

    fn pattern(self) -> [Slot; 3] {
        use Slot::*;
        match self {
            Variant::Nmf | Variant::Enmf => [One, Zero, Zero],
            Variant::Mdnmf => [One, Positive, Zero],
            Variant::Dnmf => [Zero, Zero, One],
            Variant::DMdnmf => [Positive, Positive, Positive],
            Variant::Semi => [One, NonNegative, Zero],
        }
    }

    /// Preset weights `(tau_W, tau_A, tau_S)`.
    pub fn preset<T: Scalar>(self) -> TermWeights<T> {
        let (w, a, s) = match self {
            Variant::Nmf | Variant::Enmf | Variant::Semi => (1.0, 0.0, 0.0),
            Variant::Mdnmf => (1.0, DEFAULT_TAU_A, 0.0),
            Variant::Dnmf => (0.0, 0.0, 1.0),
            Variant::DMdnmf => (1.0, DEFAULT_TAU_A, DEFAULT_TAU_S),
        };
        TermWeights::new(T::of(w), T::of(a), T::of(s))
    }

    /// Initialization the method uses by default.
    pub fn default_init(self) -> InitMode {
        match self {
            Variant::DMdnmf => InitMode::Random,
            _ => InitMode::Exemplar,
        }
    }

    /// Whether the method trains from adversarial data.
    pub fn needs_adversarial<T: Scalar>(self, weights: &TermWeights<T>) -> bool {
        weights.adversarial > T::zero()
    }

    /// Checks that `weights` follows this method's pattern.
    pub fn check<T: Scalar>(self, weights: &TermWeights<T>) -> Result<()> {
        weights.validate()?;
        let values = [weights.weak, weights.adversarial, weights.strong];
        let names = ["tau_W", "tau_A", "tau_S"];
        for ((slot, v), name) in self.pattern().iter().zip(values).zip(names) {
            if !slot.admits(v.to_f64().unwrap_or(f64::NAN)) {
                return Err(Error::Config(format!(
                    "mode {} requires {name} {}, got {v}",
                    self.name(),
                    slot.describe()
                )));
            }
        }
        Ok(())
    }

    /// Preset weights with `overrides` applied, rejected when they leave the pattern.
    pub fn resolve<T: Scalar>(self, overrides: &WeightOverrides<T>) -> Result<TermWeights<T>> {
        let p = self.preset::<T>();
        let w = TermWeights::new(
            overrides.weak.unwrap_or(p.weak),
            overrides.adversarial.unwrap_or(p.adversarial),
            overrides.strong.unwrap_or(p.strong),
        );
        self.check(&w)?;
        Ok(w)
    }

    /// Checks a full training configuration against the method.
    pub fn check_config<T: Scalar>(self, cfg: &TrainConfig<T>) -> Result<()> {
        self.check(&cfg.weights)?;
        if self == Variant::Enmf {
            if cfg.epochs != 0 {
                return Err(Error::Config(format!(
                    "mode enmf performs no updates, got epochs = {}",
                    cfg.epochs
                )));
            }
            if cfg.init != InitMode::Exemplar {
                return Err(Error::Config("mode enmf requires exemplar initialization".into()));
            }
        }
        Ok(())
    }

    /// A training configuration carrying this method's preset.
    pub fn config<T: Scalar>(self, atoms: usize) -> TrainConfig<T> {
        let mut cfg = TrainConfig::new(atoms, self.preset());
        cfg.init = self.default_init();
        if self == Variant::Enmf {
            cfg.epochs = 0;
        }
        cfg
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == key)
            .ok_or_else(|| Error::Config(format!("unknown mode {s:?}")))
    }
}
