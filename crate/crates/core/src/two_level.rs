//! Closed-form solution of the two-level problem.
//!
//! ```text
//! lambda = (eps1 + eps2)/2 +- Z,   Z = sqrt((eps1 - eps2)^2 + 4 w^2) / 2
//! ```
//!
//! `Z` is the principal square root, so `Re Z >= 0`. Which root belongs to
//! which physical state is decided by the sweep, not here.

use num_complex::Complex64;
use thiserror::Error;

use crate::dd::ComplexDd;
use crate::expr::EvalError;
use crate::model::{CouplingProfile, LevelSpec};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoLevelInput {
    pub eps1: Complex64,
    pub eps2: Complex64,
    /// Effective coupling after the profile has been applied.
    pub omega: Complex64,
}

/// `(eps1 - eps2)^2 + 4 w^2`, formed in double-double and rounded once.
pub fn discriminant(input: &TwoLevelInput) -> Complex64 {
    let d = ComplexDd::from(input.eps1) - ComplexDd::from(input.eps2);
    let w = ComplexDd::from(input.omega);
    let four_w2 = w * w * ComplexDd::from(Complex64::new(4.0, 0.0));
    (d * d + four_w2).to_c64()
}

/// Half splitting `Z`.
pub fn half_splitting(input: &TwoLevelInput) -> Complex64 {
    discriminant(input).sqrt() * 0.5
}

/// `(mean + Z, mean - Z)`.
pub fn two_level_eigenvalues(input: &TwoLevelInput) -> (Complex64, Complex64) {
    let mean = (ComplexDd::from(input.eps1) + ComplexDd::from(input.eps2))
        .div_f64(2.0)
        .to_c64();
    let z = half_splitting(input);
    (mean + z, mean - z)
}

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticError {
    #[error("level {level} energy is not affine in a; use the numeric finder")]
    NotAffine { level: usize },
    #[error("the energy difference does not depend on a; no isolated exceptional point")]
    NoSolution,
    #[error("no closed form for the {0} profile; use the numeric finder")]
    UnsupportedProfile(&'static str),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Exceptional point of the two-level family, tuning the half-width of the
/// second level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpSolution {
    pub a: f64,
    pub half_width2: f64,
    /// Sign `s` in `eps1 - eps2 = 2 i s w`.
    pub branch: i8,
}

/// Returns `(intercept, slope)` if `e(a)` is affine, checked at a few probes.
fn affine(level: &LevelSpec, index: usize) -> Result<(f64, f64), AnalyticError> {
    let e0 = level.energy.eval(0.0)?;
    let slope = level.energy.eval(1.0)? - e0;
    for a in [-1.0, 0.5, 2.5] {
        let v = level.energy.eval(a)?;
        let expect = e0 + slope * a;
        if (v - expect).abs() > 1e-12 * (1.0 + v.abs().max(expect.abs())) {
            return Err(AnalyticError::NotAffine { level: index });
        }
    }
    Ok((e0, slope))
}

/// Solves `x + c exp(-x^2) = 0` by Newton iteration from `x = -c`.
fn gaussian_root(c: f64) -> f64 {
    let mut x = -c;
    for _ in 0..100 {
        let g = (-x * x).exp();
        let f = x + c * g;
        let df = 1.0 - 2.0 * c * x * g;
        let step = f / df;
        x -= step;
        if step.abs() <= 1e-17 * (1.0 + x.abs()) {
            break;
        }
    }
    x
}

/// Solves `Z = 0` for the parameter `a` and the half-width of level 2.
///
/// Writing `eps1 - eps2 = x - i y` with `x = e1 - e2`, `y = gamma1/2 - gamma2/2`,
/// the condition `(eps1 - eps2)^2 = -4 w^2` splits into
/// `x = -2 s Im w` and `gamma2/2 = gamma1/2 + 2 s Re w` for `s = +-1`.
/// With the gaussian profile `w` carries the factor `exp(-x^2)` and the first
/// equation is solved by Newton iteration. Solutions with a negative width
/// are dropped.
pub fn ep_condition_2level(
    level1: &LevelSpec,
    level2: &LevelSpec,
    omega: Complex64,
    profile: CouplingProfile,
) -> Result<Vec<EpSolution>, AnalyticError> {
    if let CouplingProfile::EnergyWeightedGaussian { .. } = profile {
        return Err(AnalyticError::UnsupportedProfile(profile.name()));
    }
    let (p1, q1) = affine(level1, 0)?;
    let (p2, q2) = affine(level2, 1)?;
    let (dp, dq) = (p1 - p2, q1 - q2);
    if dq == 0.0 {
        return Err(AnalyticError::NoSolution);
    }
    let mut out: Vec<EpSolution> = Vec::new();
    for s in [1i8, -1] {
        let sf = f64::from(s);
        let (x, factor) = match profile {
            CouplingProfile::Constant => (-2.0 * sf * omega.im, 1.0),
            _ => {
                let x = gaussian_root(2.0 * sf * omega.im);
                (x, (-x * x).exp())
            }
        };
        let half_width2 = level1.half_width + 2.0 * sf * omega.re * factor;
        if half_width2 < 0.0 {
            continue;
        }
        let candidate = EpSolution {
            a: (x - dp) / dq,
            half_width2,
            branch: s,
        };
        if !out.iter().any(|o| o.a == candidate.a && o.half_width2 == candidate.half_width2) {
            out.push(candidate);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{preset, PresetId};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn decoupled_levels() {
        let input = TwoLevelInput {
            eps1: c(0.3, -0.5),
            eps2: c(0.9, -0.4),
            omega: c(0.0, 0.0),
        };
        let (hi, lo) = two_level_eigenvalues(&input);
        let mut got = [hi, lo];
        got.sort_by(|x, y| x.re.total_cmp(&y.re));
        assert!((got[0] - input.eps1).norm() < 1e-16);
        assert!((got[1] - input.eps2).norm() < 1e-16);
    }

    #[test]
    fn degenerate_levels_repel_in_energy() {
        let eps = c(0.7, -0.25);
        let (hi, lo) = two_level_eigenvalues(&TwoLevelInput {
            eps1: eps,
            eps2: eps,
            omega: c(0.05, 0.0),
        });
        assert!((hi - c(0.75, -0.25)).norm() < 1e-15);
        assert!((lo - c(0.65, -0.25)).norm() < 1e-15);
    }

    #[test]
    fn imaginary_coupling_bifurcates_widths() {
        let eps = c(2.0 / 3.0, -0.5);
        let (hi, lo) = two_level_eigenvalues(&TwoLevelInput {
            eps1: eps,
            eps2: eps,
            omega: c(0.0, 0.05),
        });
        assert!((hi - c(2.0 / 3.0, -0.45)).norm() < 1e-16);
        assert!((lo - c(2.0 / 3.0, -0.55)).norm() < 1e-16);
        assert!(half_splitting(&TwoLevelInput { eps1: eps, eps2: eps, omega: c(0.0, 0.05) }).re >= 0.0);
    }

    fn family(id: PresetId) -> (LevelSpec, LevelSpec, Complex64) {
        let s = preset(id);
        (s.levels()[0].clone(), s.levels()[1].clone(), s.coupling().omega)
    }

    #[test]
    fn real_coupling_ep_sits_on_the_energy_crossing() {
        let (l1, l2, w) = family(PresetId::Fig1);
        let sol = ep_condition_2level(&l1, &l2, w, CouplingProfile::Constant).unwrap();
        assert_eq!(sol.len(), 2);
        let up = sol.iter().find(|s| s.branch == 1).unwrap();
        assert!((up.a - 2.0 / 3.0).abs() < 1e-15);
        assert!((up.half_width2 - 0.6).abs() < 1e-15);
        let down = sol.iter().find(|s| s.branch == -1).unwrap();
        assert!((down.a - 2.0 / 3.0).abs() < 1e-15);
        assert!((down.half_width2 - 0.4).abs() < 1e-15);
    }

    #[test]
    fn complex_coupling_shifts_the_ep() {
        let (l1, l2, w) = family(PresetId::Fig2);
        let sol = ep_condition_2level(&l1, &l2, w, CouplingProfile::Constant).unwrap();
        let up = sol.iter().find(|s| s.branch == 1).unwrap();
        // e1 - e2 = 1 - 3a/2 = -0.1
        assert!((up.a - 11.0 / 15.0).abs() < 1e-15);
        assert!((up.half_width2 - 0.6).abs() < 1e-15);
        let down = sol.iter().find(|s| s.branch == -1).unwrap();
        assert!((down.a - 0.6).abs() < 1e-15);
        assert!((down.half_width2 - 0.4).abs() < 1e-15);
        for s in &sol {
            assert!(((s.a - 2.0 / 3.0).abs() - 1.0 / 15.0).abs() < 1e-15);
        }
    }

    #[test]
    fn gaussian_profile_solutions() {
        let (l1, l2, w) = family(PresetId::Fig1);
        let sol = ep_condition_2level(&l1, &l2, w, CouplingProfile::Gaussian).unwrap();
        // real coupling: x = 0, the gaussian factor is 1
        let up = sol.iter().find(|s| s.branch == 1).unwrap();
        assert!((up.half_width2 - 0.6).abs() < 1e-15);

        let (l1, l2, w) = family(PresetId::Fig2);
        let sol = ep_condition_2level(&l1, &l2, w, CouplingProfile::Gaussian).unwrap();
        let up = sol.iter().find(|s| s.branch == 1).unwrap();
        let x = 1.0 - 1.5 * up.a;
        // x + 0.1 exp(-x^2) = 0
        assert!((x + 0.1 * (-x * x).exp()).abs() < 1e-16);
        assert!((up.half_width2 - (0.5 + 0.1 * (-x * x).exp())).abs() < 1e-15);
        assert!(up.half_width2 < 0.6 && up.half_width2 > 0.598);
    }

    #[test]
    fn solutions_zero_the_discriminant() {
        for id in [PresetId::Fig1, PresetId::Fig2, PresetId::Fig3] {
            for profile in [CouplingProfile::Constant, CouplingProfile::Gaussian] {
                let (l1, l2, w) = family(id);
                for s in ep_condition_2level(&l1, &l2, w, profile).unwrap() {
                    let e1 = l1.energy.eval(s.a).unwrap();
                    let e2 = l2.energy.eval(s.a).unwrap();
                    let factor = match profile {
                        CouplingProfile::Gaussian => (-(e1 - e2) * (e1 - e2)).exp(),
                        _ => 1.0,
                    };
                    let input = TwoLevelInput {
                        eps1: c(e1, -l1.half_width),
                        eps2: c(e2, -s.half_width2),
                        omega: w * factor,
                    };
                    assert!(discriminant(&input).norm() < 1e-12, "{id} {profile:?} {s:?}");
                }
            }
        }
    }

    #[test]
    fn uncoupled_and_degenerate_families() {
        let l1 = LevelSpec::new("1 - a/2", 0.5).unwrap();
        let l2 = LevelSpec::new("a", 0.3).unwrap();
        let sol = ep_condition_2level(&l1, &l2, c(0.0, 0.0), CouplingProfile::Constant).unwrap();
        assert_eq!(sol.len(), 1);
        assert!((sol[0].a - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(sol[0].half_width2, 0.5);

        let parallel = LevelSpec::new("2 - a/2", 0.3).unwrap();
        assert_eq!(
            ep_condition_2level(&l1, &parallel, c(0.05, 0.0), CouplingProfile::Constant),
            Err(AnalyticError::NoSolution)
        );
        let curved = LevelSpec::new("a^2", 0.3).unwrap();
        assert_eq!(
            ep_condition_2level(&l1, &curved, c(0.05, 0.0), CouplingProfile::Constant),
            Err(AnalyticError::NotAffine { level: 1 })
        );
    }
}
