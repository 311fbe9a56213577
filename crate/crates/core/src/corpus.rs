//! Named qubit parameter sets loaded from structured text.
//!
//! Records use cyclic units at the boundary (GHz for frequencies, MHz for
//! rate/2π) and convert to angular [`TransmonQubit`] values on demand. The
//! built-in corpus ships the chain-averaged set and the individually
//! characterized qubits.

use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::qubit::TransmonQubit;
use crate::units::{ghz, mhz};

const BUILTIN: &str = include_str!("../data/qubits.toml");

/// A rate that may not have been measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Measured {
    Value(f64),
    Missing,
}

impl Measured {
    pub fn value(self) -> Option<f64> {
        match self {
            Measured::Value(v) => Some(v),
            Measured::Missing => None,
        }
    }
}

impl Serialize for Measured {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Measured::Value(v) => s.serialize_f64(*v),
            Measured::Missing => s.serialize_str("missing"),
        }
    }
}

impl<'de> Deserialize<'de> for Measured {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Measured::Value(v)),
            Raw::Text(t) if t == "missing" => Ok(Measured::Missing),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "expected a number or \"missing\", found \"{t}\""
            ))),
        }
    }
}

/// One qubit row in cyclic units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitRecord {
    pub label: String,
    #[serde(rename = "frequency_GHz")]
    pub frequency_ghz: f64,
    #[serde(rename = "Gamma10_MHz")]
    pub radiative_rate_mhz: f64,
    /// Tabulated γ₁₀, kept for cross-checks; the model derives γ₁₀ = Γ₁₀/2 + Γ_nr.
    #[serde(rename = "gamma10_MHz", default, skip_serializing_if = "Option::is_none")]
    pub decoherence_10_mhz: Option<f64>,
    #[serde(rename = "Gamma_nr_MHz")]
    pub nonradiative_rate_mhz: f64,
    #[serde(rename = "gamma20_MHz")]
    pub dephasing_20_mhz: Measured,
    #[serde(rename = "anharmonicity_MHz")]
    pub anharmonicity_mhz: f64,
    #[serde(rename = "Gamma21_MHz", default, skip_serializing_if = "Option::is_none")]
    pub radiative_rate_21_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extinction_percent: Option<f64>,
    #[serde(rename = "f01_max_GHz", default, skip_serializing_if = "Option::is_none")]
    pub f01_max_ghz: Option<f64>,
    #[serde(rename = "f01_min_GHz", default, skip_serializing_if = "Option::is_none")]
    pub f01_min_ghz: Option<f64>,
}

impl QubitRecord {
    /// Converts to angular units. `dephasing_20_fallback` (rad/s) replaces a
    /// missing γ₂₀; without one a missing value is a configuration error.
    pub fn to_qubit(&self, dephasing_20_fallback: Option<f64>) -> Result<TransmonQubit> {
        let g20 = match (self.dephasing_20_mhz, dephasing_20_fallback) {
            (Measured::Value(v), _) => mhz(v),
            (Measured::Missing, Some(f)) => f,
            (Measured::Missing, None) => {
                return Err(Error::Config(format!(
                    "{}: gamma20 is missing and no fallback was configured",
                    self.label
                )))
            }
        };
        let mut q = TransmonQubit::new(
            ghz(self.frequency_ghz),
            mhz(self.anharmonicity_mhz),
            mhz(self.radiative_rate_mhz),
            mhz(self.nonradiative_rate_mhz),
            g20,
        )
        .map_err(|e| Error::Config(format!("{}: {e}", self.label)))?;
        q.radiative_rate_21 = self.radiative_rate_21_mhz.map(mhz);
        Ok(q)
    }

    /// Resonant extinction `1 − |1 − Γ₁₀/(2γ₁₀)|²` from the tabulated γ₁₀.
    pub fn tabulated_extinction(&self) -> Option<f64> {
        let g10 = self.decoherence_10_mhz?;
        Some(1.0 - (1.0 - self.radiative_rate_mhz / (2.0 * g10)).powi(2))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterSet {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(rename = "qubit")]
    pub qubits: Vec<QubitRecord>,
}

impl ParameterSet {
    pub fn record(&self, label: &str) -> Result<&QubitRecord> {
        self.qubits
            .iter()
            .find(|q| q.label == label)
            .ok_or_else(|| Error::Config(format!("set '{}' has no qubit '{label}'", self.name)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Corpus {
    #[serde(rename = "set")]
    pub sets: Vec<ParameterSet>,
}

impl Corpus {
    pub fn builtin() -> Self {
        Self::from_toml_str(BUILTIN).expect("bundled corpus parses")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let c: Corpus = toml::from_str(text).map_err(|e| Error::Config(format!("qubit corpus: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let c: Corpus = serde_json::from_str(text).map_err(|e| Error::Config(format!("qubit corpus: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    /// Loads TOML, or JSON when the extension is `.json`.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
    }

    fn validate(&self) -> Result<()> {
        for (i, s) in self.sets.iter().enumerate() {
            if s.qubits.is_empty() {
                return Err(Error::Config(format!("parameter set '{}' has no qubits", s.name)));
            }
            if self.sets[..i].iter().any(|o| o.name == s.name) {
                return Err(Error::Config(format!("duplicate parameter set '{}'", s.name)));
            }
        }
        Ok(())
    }

    pub fn set(&self, name: &str) -> Result<&ParameterSet> {
        self.sets.iter().find(|s| s.name == name).ok_or_else(|| {
            let known: Vec<_> = self.sets.iter().map(|s| s.name.as_str()).collect();
            Error::Config(format!("unknown parameter set '{name}' (known: {})", known.join(", ")))
        })
    }
}
