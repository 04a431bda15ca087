//! JSON scenario files. Level indices are 1-based on disk.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{CouplingProfile, CouplingSpec, LevelSpec, ModelError, PairSet, Scenario, SweepGrid};

#[derive(Debug, Error)]
pub enum FileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed scenario JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexValue {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl From<Complex64> for ComplexValue {
    fn from(z: Complex64) -> Self {
        ComplexValue { re: z.re, im: z.im }
    }
}

impl From<ComplexValue> for Complex64 {
    fn from(z: ComplexValue) -> Self {
        Complex64::new(z.re, z.im)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelEntry {
    pub e: String,
    pub gamma_half: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileName {
    Constant,
    Gaussian,
    EnergyWeightedGaussian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PairsEntry {
    Keyword(String),
    List(Vec<[usize; 2]>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingEntry {
    pub omega: ComplexValue,
    pub profile: ProfileName,
    pub pairs: PairsEntry,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub selfenergy: BTreeMap<String, ComplexValue>,
    /// Anchor level of the energy-weighted profile; defaults to the last level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEntry {
    pub a_min: f64,
    pub a_max: f64,
    pub steps: usize,
}

/// On-disk representation of a [`Scenario`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub label: String,
    pub levels: Vec<LevelEntry>,
    pub coupling: CouplingEntry,
    pub sweep: SweepEntry,
}

fn to_zero_based(index: usize, n: usize, what: &str) -> Result<usize, FileError> {
    if index == 0 || index > n {
        return Err(FileError::Format(format!(
            "{what} index {index} out of range 1..={n}"
        )));
    }
    Ok(index - 1)
}

impl ScenarioFile {
    pub fn from_scenario(s: &Scenario) -> Self {
        let c = s.coupling();
        let (profile, anchor) = match c.profile {
            CouplingProfile::Constant => (ProfileName::Constant, None),
            CouplingProfile::Gaussian => (ProfileName::Gaussian, None),
            CouplingProfile::EnergyWeightedGaussian { anchor } => {
                (ProfileName::EnergyWeightedGaussian, Some(anchor + 1))
            }
        };
        let pairs = match &c.pairs {
            PairSet::All => PairsEntry::Keyword("all".into()),
            PairSet::Explicit(set) => PairsEntry::List(set.iter().map(|&(i, j)| [i + 1, j + 1]).collect()),
        };
        let grid = s.grid();
        ScenarioFile {
            label: s.label().to_string(),
            levels: s
                .levels()
                .iter()
                .map(|l| LevelEntry {
                    e: l.energy.source().to_string(),
                    gamma_half: l.half_width,
                })
                .collect(),
            coupling: CouplingEntry {
                omega: c.omega.into(),
                profile,
                pairs,
                selfenergy: c
                    .selfenergy
                    .iter()
                    .map(|(&k, &v)| ((k + 1).to_string(), v.into()))
                    .collect(),
                anchor,
            },
            sweep: SweepEntry {
                a_min: grid.a_min,
                a_max: grid.a_max,
                steps: grid.steps,
            },
        }
    }

    pub fn into_scenario(self) -> Result<Scenario, FileError> {
        let n = self.levels.len();
        let levels = self
            .levels
            .iter()
            .enumerate()
            .map(|(level, entry)| {
                LevelSpec::new(&entry.e, entry.gamma_half)
                    .map_err(|source| ModelError::Expression { level, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let c = self.coupling;
        let profile = match c.profile {
            ProfileName::Constant | ProfileName::Gaussian if c.anchor.is_some() => {
                return Err(FileError::Format(
                    "`anchor` is only valid with the energy_weighted_gaussian profile".into(),
                ))
            }
            ProfileName::Constant => CouplingProfile::Constant,
            ProfileName::Gaussian => CouplingProfile::Gaussian,
            ProfileName::EnergyWeightedGaussian => CouplingProfile::EnergyWeightedGaussian {
                anchor: to_zero_based(c.anchor.unwrap_or(n), n, "anchor")?,
            },
        };
        let pairs = match c.pairs {
            PairsEntry::Keyword(k) if k == "all" => PairSet::All,
            PairsEntry::Keyword(k) => {
                return Err(FileError::Format(format!(
                    "pairs must be \"all\" or a list of index pairs, got \"{k}\""
                )))
            }
            PairsEntry::List(list) => {
                let mut converted = Vec::with_capacity(list.len());
                for [i, j] in list {
                    converted.push((to_zero_based(i, n, "pair")?, to_zero_based(j, n, "pair")?));
                }
                PairSet::explicit(converted)
            }
        };
        let mut selfenergy = BTreeMap::new();
        for (key, value) in c.selfenergy {
            let index: usize = key
                .trim()
                .parse()
                .map_err(|_| FileError::Format(format!("selfenergy key `{key}` is not an index")))?;
            selfenergy.insert(to_zero_based(index, n, "selfenergy")?, value.into());
        }
        let coupling = CouplingSpec {
            omega: c.omega.into(),
            profile,
            pairs,
            selfenergy,
        };
        let grid = SweepGrid::new(self.sweep.a_min, self.sweep.a_max, self.sweep.steps)?;
        Ok(Scenario::new(self.label, levels, coupling, grid)?)
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario, FileError> {
        serde_json::from_str::<ScenarioFile>(text)?.into_scenario()
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&ScenarioFile::from_scenario(self))
            .expect("scenario file serialization cannot fail");
        text.push('\n');
        text
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Scenario, FileError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| FileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Scenario::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), FileError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| FileError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{preset, PresetId};

    #[test]
    fn every_preset_round_trips() {
        for id in PresetId::ALL {
            let s = preset(id);
            let back = Scenario::from_json(&s.to_json()).unwrap();
            assert_eq!(back, s, "{id:?}");
            for (x, y) in back.levels().iter().zip(s.levels()) {
                assert_eq!(x.half_width.to_bits(), y.half_width.to_bits());
            }
        }
    }

    #[test]
    fn parses_minimal_document() {
        let text = r#"{
            "label": "pair",
            "levels": [{"e": "1 - a/2", "gamma_half": 0.5}, {"e": "a", "gamma_half": 0.6}],
            "coupling": {"omega": {"re": 0.05, "im": 0.0}, "profile": "constant", "pairs": "all",
                         "selfenergy": {"2": {"re": 0.01, "im": -0.02}}},
            "sweep": {"a_min": 0, "a_max": 1.5, "steps": 11}
        }"#;
        let s = Scenario::from_json(text).unwrap();
        assert_eq!(s.order(), 2);
        assert_eq!(s.coupling().selfenergy[&1], Complex64::new(0.01, -0.02));
        assert_eq!(s.grid().steps, 11);
    }

    #[test]
    fn rejects_bad_indices_and_expressions() {
        let base = |pairs: &str, e2: &str| {
            format!(
                r#"{{"label": "x", "levels": [{{"e": "a", "gamma_half": 0.5}}, {{"e": "{e2}", "gamma_half": 0.5}}],
                "coupling": {{"omega": {{"re": 0.05, "im": 0}}, "profile": "gaussian", "pairs": {pairs}}},
                "sweep": {{"a_min": 0, "a_max": 1, "steps": 3}}}}"#
            )
        };
        assert!(Scenario::from_json(&base("[[1, 2]]", "1 - a")).is_ok());
        assert!(matches!(Scenario::from_json(&base("[[0, 1]]", "1 - a")), Err(FileError::Format(_))));
        assert!(matches!(Scenario::from_json(&base("[[1, 3]]", "1 - a")), Err(FileError::Format(_))));
        assert!(matches!(Scenario::from_json(&base("\"some\"", "1 - a")), Err(FileError::Format(_))));
        assert!(matches!(
            Scenario::from_json(&base("\"all\"", "1 - b")),
            Err(FileError::Model(ModelError::Expression { level: 1, .. }))
        ));
        assert!(matches!(Scenario::from_json("{"), Err(FileError::Json(_))));
    }

    #[test]
    fn missing_file_names_path() {
        let err = Scenario::load("/nonexistent/missing.json").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/missing.json"));
    }
}
