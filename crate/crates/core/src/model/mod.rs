//! Scenario definitions and assembly of the complex-symmetric Hamiltonian
//!
//! ```text
//! H[i][i] = e_i(a) - i*gamma_i/2 + omega_ii
//! H[i][j] = H[j][i] = omega_ij(a)
//! ```
//!
//! The off-diagonal couplings follow one of three profiles (see
//! [`CouplingProfile`]); only the unordered pairs listed in the scenario
//! couple.

mod file;
mod matrix;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::expr::{parse_expr, EvalError, Expr, ParseError};

pub use file::{ScenarioFile, FileError};
pub use matrix::ComplexMatrix;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("level {level}: invalid energy expression: {source}")]
    Expression { level: usize, source: ParseError },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("level {level}: half-width must be finite and >= 0, got {value}")]
    HalfWidth { level: usize, value: f64 },
    #[error("scenario needs at least one level")]
    NoLevels,
    #[error("level index {index} out of range for {n} levels")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("pair ({0}, {0}) couples a level to itself; use the selfenergy map")]
    SelfPair(usize),
    #[error("energy-weighted profile: pair ({i}, {j}) does not contain the anchor level {anchor}")]
    PairWithoutAnchor { i: usize, j: usize, anchor: usize },
    #[error("invalid sweep grid: {0}")]
    Grid(String),
    #[error("coupling constant must be finite")]
    NonFiniteCoupling,
}

/// Energy trajectory `e_i(a)` together with the text it was parsed from.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyExpr {
    source: String,
    ast: Expr,
}

impl EnergyExpr {
    pub fn parse(source: &str) -> Result<Self, ParseError> {
        Ok(EnergyExpr {
            source: source.to_string(),
            ast: parse_expr(source)?,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    pub fn eval(&self, a: f64) -> Result<f64, EvalError> {
        self.ast.eval(a)
    }
}

impl fmt::Display for EnergyExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

/// One unperturbed level: energy trajectory and half-width `gamma/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSpec {
    pub energy: EnergyExpr,
    pub half_width: f64,
}

impl LevelSpec {
    pub fn new(energy: &str, half_width: f64) -> Result<Self, ParseError> {
        Ok(LevelSpec {
            energy: EnergyExpr::parse(energy)?,
            half_width,
        })
    }

    /// Unperturbed complex energy `e(a) - i*gamma/2`.
    pub fn complex_energy(&self, a: f64) -> Result<Complex64, EvalError> {
        Ok(Complex64::new(self.energy.eval(a)?, -self.half_width))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CouplingProfile {
    /// `omega_ij = omega`
    Constant,
    /// `omega_ij = omega * exp(-(e_i - e_j)^2)`
    Gaussian,
    /// `omega_ik = omega_ki = omega * e_i(a) * exp(-(e_i - e_k)^2)` for the
    /// anchor level `k`; every active pair must contain the anchor.
    EnergyWeightedGaussian { anchor: usize },
}

impl CouplingProfile {
    pub fn name(&self) -> &'static str {
        match self {
            CouplingProfile::Constant => "constant",
            CouplingProfile::Gaussian => "gaussian",
            CouplingProfile::EnergyWeightedGaussian { .. } => "energy_weighted_gaussian",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PairSet {
    All,
    /// Unordered pairs stored as `(min, max)`.
    Explicit(BTreeSet<(usize, usize)>),
}

impl PairSet {
    pub fn explicit<I: IntoIterator<Item = (usize, usize)>>(pairs: I) -> Self {
        PairSet::Explicit(pairs.into_iter().map(|(i, j)| (i.min(j), i.max(j))).collect())
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        match self {
            PairSet::All => true,
            PairSet::Explicit(set) => set.contains(&(i.min(j), i.max(j))),
        }
    }

    /// All active pairs `(i, j)`, `i < j`, for `n` levels.
    pub fn resolve(&self, n: usize) -> Vec<(usize, usize)> {
        match self {
            PairSet::All => (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
            PairSet::Explicit(set) => set.iter().copied().collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CouplingSpec {
    pub omega: Complex64,
    pub profile: CouplingProfile,
    pub pairs: PairSet,
    /// Additive diagonal terms `omega_ii`, keyed by 0-based level index.
    pub selfenergy: BTreeMap<usize, Complex64>,
}

impl CouplingSpec {
    pub fn new(omega: Complex64, profile: CouplingProfile, pairs: PairSet) -> Self {
        CouplingSpec {
            omega,
            profile,
            pairs,
            selfenergy: BTreeMap::new(),
        }
    }

    pub fn with_selfenergy(mut self, level: usize, value: Complex64) -> Self {
        self.selfenergy.insert(level, value);
        self
    }

    /// Coupling of an active pair given the two level energies.
    fn value(&self, i: usize, e_i: f64, e_j: f64) -> Complex64 {
        let gauss = || (-(e_i - e_j) * (e_i - e_j)).exp();
        match self.profile {
            CouplingProfile::Constant => self.omega,
            CouplingProfile::Gaussian => self.omega * gauss(),
            CouplingProfile::EnergyWeightedGaussian { anchor } => {
                let partner = if i == anchor { e_j } else { e_i };
                self.omega * (partner * gauss())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepGrid {
    pub a_min: f64,
    pub a_max: f64,
    pub steps: usize,
}

impl SweepGrid {
    pub fn new(a_min: f64, a_max: f64, steps: usize) -> Result<Self, ModelError> {
        let grid = SweepGrid { a_min, a_max, steps };
        grid.validate()?;
        Ok(grid)
    }

    fn validate(&self) -> Result<(), ModelError> {
        if !(self.a_min.is_finite() && self.a_max.is_finite()) {
            return Err(ModelError::Grid("bounds must be finite".into()));
        }
        if self.a_min >= self.a_max {
            return Err(ModelError::Grid(format!(
                "a_min ({}) must be below a_max ({})",
                self.a_min, self.a_max
            )));
        }
        if self.steps < 2 {
            return Err(ModelError::Grid(format!("steps must be >= 2, got {}", self.steps)));
        }
        Ok(())
    }

    /// Parameter of grid point `k`; the last point is exactly `a_max`.
    pub fn point(&self, k: usize) -> f64 {
        if k + 1 == self.steps {
            return self.a_max;
        }
        let t = k as f64 / (self.steps - 1) as f64;
        self.a_min + t * (self.a_max - self.a_min)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.steps).map(|k| self.point(k)).collect()
    }
}

/// Scalar scenario parameter that an exceptional-point search may vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tunable {
    /// Replace `gamma_i/2` of the level.
    HalfWidth(usize),
    /// Add a constant to `e_i(a)` of the level.
    EnergyOffset(usize),
}

impl Tunable {
    pub fn level(&self) -> usize {
        match *self {
            Tunable::HalfWidth(i) | Tunable::EnergyOffset(i) => i,
        }
    }
}

impl fmt::Display for Tunable {
    /// 1-based, in the `kind:level` syntax accepted by [`str::parse`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tunable::HalfWidth(i) => write!(f, "gamma_half:{}", i + 1),
            Tunable::EnergyOffset(i) => write!(f, "energy_offset:{}", i + 1),
        }
    }
}

impl std::str::FromStr for Tunable {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, level) = s
            .split_once(':')
            .ok_or_else(|| format!("expected `kind:level`, got `{s}`"))?;
        let level: usize = level
            .trim()
            .parse()
            .map_err(|_| format!("invalid level index `{level}`"))?;
        if level == 0 {
            return Err("level indices are 1-based".into());
        }
        match kind.trim() {
            "gamma_half" => Ok(Tunable::HalfWidth(level - 1)),
            "energy_offset" => Ok(Tunable::EnergyOffset(level - 1)),
            other => Err(format!("unknown tunable `{other}` (gamma_half or energy_offset)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tuning {
    pub param: Tunable,
    pub value: f64,
}

/// Complete problem definition. Construction validates every invariant, so
/// a `Scenario` value is always assemblable.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    label: String,
    levels: Vec<LevelSpec>,
    coupling: CouplingSpec,
    grid: SweepGrid,
}

impl Scenario {
    pub fn new(
        label: impl Into<String>,
        levels: Vec<LevelSpec>,
        coupling: CouplingSpec,
        grid: SweepGrid,
    ) -> Result<Self, ModelError> {
        let scenario = Scenario {
            label: label.into(),
            levels,
            coupling,
            grid,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    fn validate(&self) -> Result<(), ModelError> {
        let n = self.levels.len();
        if n == 0 {
            return Err(ModelError::NoLevels);
        }
        for (level, spec) in self.levels.iter().enumerate() {
            if !(spec.half_width.is_finite() && spec.half_width >= 0.0) {
                return Err(ModelError::HalfWidth {
                    level,
                    value: spec.half_width,
                });
            }
        }
        let c = &self.coupling;
        if !(c.omega.re.is_finite() && c.omega.im.is_finite())
            || c.selfenergy.values().any(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(ModelError::NonFiniteCoupling);
        }
        let check = |index: usize| {
            if index < n {
                Ok(())
            } else {
                Err(ModelError::IndexOutOfRange { index, n })
            }
        };
        if let PairSet::Explicit(set) = &c.pairs {
            for &(i, j) in set {
                check(i)?;
                check(j)?;
                if i == j {
                    return Err(ModelError::SelfPair(i));
                }
            }
        }
        for &level in c.selfenergy.keys() {
            check(level)?;
        }
        if let CouplingProfile::EnergyWeightedGaussian { anchor } = c.profile {
            check(anchor)?;
            for (i, j) in c.pairs.resolve(n) {
                if i != anchor && j != anchor {
                    return Err(ModelError::PairWithoutAnchor { i, j, anchor });
                }
            }
        }
        self.grid.validate()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn levels(&self) -> &[LevelSpec] {
        &self.levels
    }

    pub fn coupling(&self) -> &CouplingSpec {
        &self.coupling
    }

    pub fn grid(&self) -> SweepGrid {
        self.grid
    }

    pub fn order(&self) -> usize {
        self.levels.len()
    }

    pub fn with_grid(mut self, grid: SweepGrid) -> Result<Self, ModelError> {
        grid.validate()?;
        self.grid = grid;
        Ok(self)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_profile(mut self, profile: CouplingProfile) -> Result<Self, ModelError> {
        self.coupling.profile = profile;
        self.validate()?;
        Ok(self)
    }

    /// Replaces the half-width of one level.
    pub fn with_half_width(mut self, level: usize, half_width: f64) -> Result<Self, ModelError> {
        let n = self.order();
        self.levels
            .get_mut(level)
            .ok_or(ModelError::IndexOutOfRange { index: level, n })?
            .half_width = half_width;
        self.validate()?;
        Ok(self)
    }

    pub fn with_coupling(mut self, coupling: CouplingSpec) -> Result<Self, ModelError> {
        self.coupling = coupling;
        self.validate()?;
        Ok(self)
    }

    fn check_tuning(&self, tuning: Option<Tuning>) -> Result<(), ModelError> {
        if let Some(t) = tuning {
            let n = self.order();
            if t.param.level() >= n {
                return Err(ModelError::IndexOutOfRange {
                    index: t.param.level(),
                    n,
                });
            }
            if let Tunable::HalfWidth(level) = t.param {
                if !(t.value.is_finite() && t.value >= 0.0) {
                    return Err(ModelError::HalfWidth {
                        level,
                        value: t.value,
                    });
                }
            }
        }
        Ok(())
    }

    /// Level energies `e_i(a)` including any tuned offset.
    pub fn level_energies(&self, a: f64, tuning: Option<Tuning>) -> Result<Vec<f64>, ModelError> {
        self.check_tuning(tuning)?;
        let mut energies = self
            .levels
            .iter()
            .map(|l| l.energy.eval(a))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(Tuning {
            param: Tunable::EnergyOffset(level),
            value,
        }) = tuning
        {
            energies[level] += value;
        }
        Ok(energies)
    }

    pub fn half_widths(&self, tuning: Option<Tuning>) -> Vec<f64> {
        let mut widths: Vec<f64> = self.levels.iter().map(|l| l.half_width).collect();
        if let Some(Tuning {
            param: Tunable::HalfWidth(level),
            value,
        }) = tuning
        {
            if level < widths.len() {
                widths[level] = value;
            }
        }
        widths
    }

    /// Assembles `H(a)`, optionally with one parameter overridden.
    pub fn hamiltonian_tuned(
        &self,
        a: f64,
        tuning: Option<Tuning>,
    ) -> Result<ComplexMatrix, ModelError> {
        let energies = self.level_energies(a, tuning)?;
        let widths = self.half_widths(tuning);
        let n = self.order();
        let mut h = ComplexMatrix::zeros(n);
        for i in 0..n {
            let self_term = self.coupling.selfenergy.get(&i).copied().unwrap_or_default();
            h.set(i, i, Complex64::new(energies[i], -widths[i]) + self_term);
        }
        for (i, j) in self.coupling.pairs.resolve(n) {
            let w = self.coupling.value(i, energies[i], energies[j]);
            h.set_symmetric(i, j, w);
        }
        Ok(h)
    }
}

/// Off-diagonal coupling `omega_ij(a)`; zero for inactive pairs.
pub fn coupling_at(scenario: &Scenario, i: usize, j: usize, a: f64) -> Result<Complex64, ModelError> {
    let n = scenario.order();
    for index in [i, j] {
        if index >= n {
            return Err(ModelError::IndexOutOfRange { index, n });
        }
    }
    if i == j {
        return Err(ModelError::SelfPair(i));
    }
    if !scenario.coupling.pairs.contains(i, j) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let e_i = scenario.levels[i].energy.eval(a)?;
    let e_j = scenario.levels[j].energy.eval(a)?;
    Ok(scenario.coupling.value(i, e_i, e_j))
}

/// Assembles the Hamiltonian at parameter `a`.
pub fn build_hamiltonian(scenario: &Scenario, a: f64) -> Result<ComplexMatrix, ModelError> {
    scenario.hamiltonian_tuned(a, None)
}
