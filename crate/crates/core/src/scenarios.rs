//! Built-in scenarios: two crossing levels and one level crossing three others.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::model::{CouplingProfile, CouplingSpec, LevelSpec, PairSet, Scenario, SweepGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PresetId {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
    TwoCrossTwo,
}

impl PresetId {
    pub const ALL: [PresetId; 10] = [
        PresetId::Fig1,
        PresetId::Fig2,
        PresetId::Fig3,
        PresetId::Fig4,
        PresetId::Fig5,
        PresetId::Fig6,
        PresetId::Fig7,
        PresetId::Fig8,
        PresetId::Fig9,
        PresetId::TwoCrossTwo,
    ];

    /// The nine figure presets, without the illustrative variant.
    pub const FIGURES: [PresetId; 9] = [
        PresetId::Fig1,
        PresetId::Fig2,
        PresetId::Fig3,
        PresetId::Fig4,
        PresetId::Fig5,
        PresetId::Fig6,
        PresetId::Fig7,
        PresetId::Fig8,
        PresetId::Fig9,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PresetId::Fig1 => "fig1",
            PresetId::Fig2 => "fig2",
            PresetId::Fig3 => "fig3",
            PresetId::Fig4 => "fig4",
            PresetId::Fig5 => "fig5",
            PresetId::Fig6 => "fig6",
            PresetId::Fig7 => "fig7",
            PresetId::Fig8 => "fig8",
            PresetId::Fig9 => "fig9",
            PresetId::TwoCrossTwo => "two_cross_two",
        }
    }

    pub fn is_two_level(self) -> bool {
        matches!(self, PresetId::Fig1 | PresetId::Fig2 | PresetId::Fig3)
    }
}

impl fmt::Display for PresetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PresetId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PresetId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = PresetId::ALL.iter().map(|id| id.name()).collect();
                format!("unknown preset `{s}` (expected one of {})", names.join(", "))
            })
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn levels(spec: &[(&str, f64)]) -> Vec<LevelSpec> {
    spec.iter()
        .map(|&(e, w)| LevelSpec::new(e, w).expect("preset expressions are valid"))
        .collect()
}

fn grid(a_min: f64, a_max: f64) -> SweepGrid {
    SweepGrid::new(a_min, a_max, 2001).expect("preset grids are valid")
}

/// Level 4 crossing levels 1 to 3; only the pairs that actually cross couple.
fn crossing_pairs() -> PairSet {
    PairSet::explicit([(0, 3), (1, 3), (2, 3)])
}

const TWO_LEVEL: [&str; 2] = ["1 - a/2", "a"];
const LINEAR_FOUR: [&str; 4] = ["1 - a/2", "1.05 - a/2", "1.1 - a/2", "a"];
const COULOMB_FOUR: [&str; 4] = ["1 - 1/(a+1)", "1.05 - 1/(a+1)", "1.1 - 1/(a+1)", "1/(a+1)"];
const ASYMMETRIC_WIDTHS: [f64; 4] = [0.5, 0.4, 0.6, 0.58523];

fn four(energies: [&str; 4], widths: [f64; 4]) -> Vec<LevelSpec> {
    levels(&[
        (energies[0], widths[0]),
        (energies[1], widths[1]),
        (energies[2], widths[2]),
        (energies[3], widths[3]),
    ])
}

fn build(label: &str, levels: Vec<LevelSpec>, coupling: CouplingSpec, grid: SweepGrid) -> Scenario {
    Scenario::new(label, levels, coupling, grid).expect("preset scenarios are valid")
}

/// Preset scenario with its default coupling profile.
pub fn preset(id: PresetId) -> Scenario {
    let omega = c(0.05, 0.05);
    let two_level_grid = grid(-1.5, 3.5);
    let linear_grid = grid(-0.5, 2.5);
    let weighted = CouplingProfile::EnergyWeightedGaussian { anchor: 3 };
    match id {
        PresetId::Fig1 => build(
            "fig1",
            levels(&[(TWO_LEVEL[0], 0.5), (TWO_LEVEL[1], 0.5999)]),
            CouplingSpec::new(c(0.05, 0.0), CouplingProfile::Constant, PairSet::All),
            two_level_grid,
        ),
        PresetId::Fig2 => build(
            "fig2",
            levels(&[(TWO_LEVEL[0], 0.5), (TWO_LEVEL[1], 0.5980)]),
            CouplingSpec::new(omega, CouplingProfile::Constant, PairSet::All),
            two_level_grid,
        ),
        PresetId::Fig3 => build(
            "fig3",
            levels(&[(TWO_LEVEL[0], 0.5), (TWO_LEVEL[1], 0.5)]),
            CouplingSpec::new(c(0.0, 0.05), CouplingProfile::Constant, PairSet::All),
            two_level_grid,
        ),
        PresetId::Fig4 => build(
            "fig4",
            four(LINEAR_FOUR, ASYMMETRIC_WIDTHS),
            CouplingSpec::new(omega, CouplingProfile::Gaussian, crossing_pairs()),
            linear_grid,
        ),
        PresetId::Fig5 => build(
            "fig5",
            four(LINEAR_FOUR, [0.5; 4]),
            CouplingSpec::new(omega, CouplingProfile::Gaussian, crossing_pairs()),
            linear_grid,
        ),
        PresetId::Fig6 => build(
            "fig6",
            four(LINEAR_FOUR, [0.5; 4]),
            CouplingSpec::new(omega, weighted, crossing_pairs()),
            linear_grid,
        ),
        PresetId::Fig7 => build(
            "fig7",
            four(LINEAR_FOUR, [0.5; 4]),
            CouplingSpec::new(omega, weighted, crossing_pairs()).with_selfenergy(3, omega),
            linear_grid,
        ),
        PresetId::Fig8 => build(
            "fig8",
            four(LINEAR_FOUR, [0.5; 4]),
            CouplingSpec::new(c(0.05, 0.005), weighted, crossing_pairs()),
            linear_grid,
        ),
        PresetId::Fig9 => build(
            "fig9",
            four(COULOMB_FOUR, ASYMMETRIC_WIDTHS),
            CouplingSpec::new(omega, CouplingProfile::Gaussian, crossing_pairs()),
            grid(0.0, 4.0),
        ),
        PresetId::TwoCrossTwo => build(
            "two_cross_two",
            four(["1 - a/2", "1.05 - a/2", "0.05 + a", "a"], ASYMMETRIC_WIDTHS),
            CouplingSpec::new(
                omega,
                CouplingProfile::Gaussian,
                PairSet::explicit([(0, 2), (0, 3), (1, 2), (1, 3)]),
            ),
            linear_grid,
        ),
    }
}

/// Two-level preset with the coupling profile switched; other presets are
/// returned unchanged when `profile` is `None`.
pub fn preset_with_profile(id: PresetId, profile: Option<CouplingProfile>) -> Result<Scenario, String> {
    let base = preset(id);
    match profile {
        None => Ok(base),
        Some(p) if id.is_two_level() => base.with_profile(p).map_err(|e| e.to_string()),
        Some(_) => Err(format!("the profile switch applies to fig1, fig2 and fig3 only, not {id}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_parameters() {
        assert_eq!(preset(PresetId::Fig4).levels()[3].half_width, 0.58523);
        assert!(preset(PresetId::Fig6).coupling().selfenergy.is_empty());
        assert_eq!(preset(PresetId::Fig7).coupling().selfenergy[&3], c(0.05, 0.05));
        assert_eq!(preset(PresetId::Fig8).coupling().omega, c(0.05, 0.05 / 10.0));
        assert_eq!(preset(PresetId::Fig9).levels()[0].energy.eval(0.0).unwrap(), 0.0);
        assert_eq!(preset(PresetId::Fig1).levels()[1].half_width, 0.5999);
        assert_eq!(preset(PresetId::Fig2).levels()[1].half_width, 0.5980);
        assert_eq!(preset(PresetId::Fig3).coupling().omega, c(0.0, 0.05));
    }

    #[test]
    fn observer_symmetry_premise() {
        for id in [PresetId::Fig4, PresetId::Fig5, PresetId::Fig9] {
            let s = preset(id);
            for k in 0..=40 {
                let a = k as f64 * 0.1;
                let e: Vec<f64> = s.levels().iter().map(|l| l.energy.eval(a).unwrap()).collect();
                assert!((e[1] - (e[0] + e[2]) / 2.0).abs() < 1e-15, "{id} at a = {a}");
            }
        }
    }

    #[test]
    fn names_parse_back() {
        for id in PresetId::ALL {
            assert_eq!(id.name().parse::<PresetId>().unwrap(), id);
        }
        assert!("fig10".parse::<PresetId>().is_err());
    }

    #[test]
    fn profile_switch_is_limited_to_two_level_presets() {
        let g = preset_with_profile(PresetId::Fig1, Some(CouplingProfile::Gaussian)).unwrap();
        assert_eq!(g.coupling().profile, CouplingProfile::Gaussian);
        assert!(preset_with_profile(PresetId::Fig4, Some(CouplingProfile::Constant)).is_err());
    }
}
