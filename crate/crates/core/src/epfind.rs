//! Numerical search for exceptional points over the sweep parameter `a` and
//! one tunable scenario parameter.
//!
//! The objective is the squared minimum eigenvalue distance. A coarse scan
//! of the search box seeds Nelder-Mead refinements from the best local
//! minima; a final Newton step on the squared pair difference, which is
//! smooth at the coalescence, resolves the last digits.

use num_complex::Complex64;
use thiserror::Error;

use crate::eig::{solve, EigError, Spectrum};
use crate::model::{ModelError, Scenario, Tunable, Tuning};
use crate::par::{map_indexed, Execution};

#[derive(Debug, Error)]
pub enum EpError {
    #[error("degenerate search box: {0}")]
    DegenerateBox(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("at a = {a}, {tunable} = {value}: {source}")]
    Solver {
        a: f64,
        tunable: Tunable,
        value: f64,
        source: EigError,
    },
}

/// Rectangle `[a_min, a_max] x [t_min, t_max]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchBox {
    pub a: (f64, f64),
    pub tunable: (f64, f64),
}

impl SearchBox {
    pub fn new(a: (f64, f64), tunable: (f64, f64)) -> Result<Self, EpError> {
        let b = SearchBox { a, tunable };
        b.validate()?;
        Ok(b)
    }

    fn validate(&self) -> Result<(), EpError> {
        for (name, (lo, hi)) in [("a", self.a), ("tunable", self.tunable)] {
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(EpError::DegenerateBox(format!("{name} bounds must be finite")));
            }
            if lo >= hi {
                return Err(EpError::DegenerateBox(format!("{name} range {lo}..{hi} is empty")));
            }
        }
        Ok(())
    }

    fn clamp(&self, p: [f64; 2]) -> [f64; 2] {
        [p[0].clamp(self.a.0, self.a.1), p[1].clamp(self.tunable.0, self.tunable.1)]
    }

    fn extents(&self) -> [f64; 2] {
        [self.a.1 - self.a.0, self.tunable.1 - self.tunable.0]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpOptions {
    /// Scan points per axis.
    pub scan: usize,
    pub max_iterations: usize,
    /// Gap below which a point counts as an exceptional point.
    pub threshold: f64,
    /// Number of scan minima refined.
    pub starts: usize,
    /// Probe distance for the norm blow-up, as a fraction of the box extents.
    pub probe_fraction: f64,
    pub execution: Execution,
}

impl Default for EpOptions {
    fn default() -> Self {
        EpOptions {
            scan: 51,
            max_iterations: 400,
            threshold: 1e-8,
            starts: 4,
            probe_fraction: 1e-3,
            execution: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpReport {
    pub tunable: Tunable,
    /// `(a*, tunable*)`.
    pub location: (f64, f64),
    pub gap: f64,
    /// Levels carrying the largest weight in the coalescing eigenvector.
    pub pair: (usize, usize),
    /// Largest `A` of the coalescing pair at the probes around the optimum.
    pub norm_blowup: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn spectrum_at(scenario: &Scenario, a: f64, tuning: Option<Tuning>) -> Result<Spectrum, EpError> {
    let h = scenario.hamiltonian_tuned(a, tuning)?;
    solve(&h).map_err(|source| EpError::Solver {
        a,
        tunable: tuning.map_or(Tunable::HalfWidth(0), |t| t.param),
        value: tuning.map_or(f64::NAN, |t| t.value),
        source,
    })
}

/// Minimum pairwise eigenvalue distance of the (optionally tuned) scenario
/// at `a`; infinite for a single level.
pub fn coalescence_gap(scenario: &Scenario, a: f64, tuning: Option<Tuning>) -> Result<f64, EpError> {
    let spectrum = spectrum_at(scenario, a, tuning)?;
    Ok(spectrum.min_gap().map_or(f64::INFINITY, |(g, _, _)| g))
}

struct Objective<'a> {
    scenario: &'a Scenario,
    tunable: Tunable,
}

impl Objective<'_> {
    fn tuning(&self, t: f64) -> Option<Tuning> {
        Some(Tuning {
            param: self.tunable,
            value: t,
        })
    }

    /// Squared gap; invalid points (negative widths, poles) are infinite.
    fn eval(&self, p: [f64; 2]) -> f64 {
        match coalescence_gap(self.scenario, p[0], self.tuning(p[1])) {
            Ok(g) => g * g,
            Err(_) => f64::INFINITY,
        }
    }

    /// Squared difference of the closest pair, smooth across coalescence.
    fn pair_square(&self, p: [f64; 2]) -> Option<Complex64> {
        let s = spectrum_at(self.scenario, p[0], self.tuning(p[1])).ok()?;
        let (_, i, j) = s.min_gap()?;
        let d = s.pairs[i].value - s.pairs[j].value;
        Some(d * d)
    }
}

struct Simplex {
    points: [[f64; 2]; 3],
    values: [f64; 3],
}

/// Nelder-Mead with standard coefficients, projected onto the box.
fn nelder_mead(obj: &Objective, bx: &SearchBox, start: [f64; 2], step: [f64; 2], max_iter: usize, target: f64) -> ([f64; 2], f64, usize) {
    let mut s = Simplex {
        points: [
            start,
            bx.clamp([start[0] + step[0], start[1]]),
            bx.clamp([start[0], start[1] + step[1]]),
        ],
        values: [0.0; 3],
    };
    if s.points[1] == start {
        s.points[1] = bx.clamp([start[0] - step[0], start[1]]);
    }
    if s.points[2] == start {
        s.points[2] = bx.clamp([start[0], start[1] - step[1]]);
    }
    for k in 0..3 {
        s.values[k] = obj.eval(s.points[k]);
    }
    let lerp = |x: [f64; 2], y: [f64; 2], t: f64| [x[0] + t * (y[0] - x[0]), x[1] + t * (y[1] - x[1])];
    let mut iterations = 0;
    while iterations < max_iter {
        let mut order = [0, 1, 2];
        order.sort_by(|&x, &y| s.values[x].total_cmp(&s.values[y]));
        let (best, mid, worst) = (order[0], order[1], order[2]);
        if s.values[best] < target {
            break;
        }
        let size = (0..3)
            .map(|k| {
                let d = [s.points[k][0] - s.points[best][0], s.points[k][1] - s.points[best][1]];
                d[0].abs().max(d[1].abs())
            })
            .fold(0.0, f64::max);
        if size == 0.0 {
            break;
        }
        iterations += 1;
        let centroid = lerp(s.points[best], s.points[mid], 0.5);
        let reflected = bx.clamp(lerp(centroid, s.points[worst], -1.0));
        let fr = obj.eval(reflected);
        if fr < s.values[best] {
            let expanded = bx.clamp(lerp(centroid, s.points[worst], -2.0));
            let fe = obj.eval(expanded);
            if fe < fr {
                s.points[worst] = expanded;
                s.values[worst] = fe;
            } else {
                s.points[worst] = reflected;
                s.values[worst] = fr;
            }
            continue;
        }
        if fr < s.values[mid] {
            s.points[worst] = reflected;
            s.values[worst] = fr;
            continue;
        }
        let (contracted, fc) = if fr < s.values[worst] {
            let p = bx.clamp(lerp(centroid, reflected, 0.5));
            (p, obj.eval(p))
        } else {
            let p = lerp(centroid, s.points[worst], 0.5);
            (p, obj.eval(p))
        };
        if fc < s.values[worst].min(fr) {
            s.points[worst] = contracted;
            s.values[worst] = fc;
            continue;
        }
        for k in [mid, worst] {
            s.points[k] = lerp(s.points[best], s.points[k], 0.5);
            s.values[k] = obj.eval(s.points[k]);
        }
    }
    let best = (0..3).min_by(|&x, &y| s.values[x].total_cmp(&s.values[y])).unwrap_or(0);
    (s.points[best], s.values[best], iterations)
}

/// Newton iteration on the squared pair difference with a finite-difference
/// Jacobian; keeps a step only if it lowers the objective.
fn newton_polish(obj: &Objective, bx: &SearchBox, mut p: [f64; 2], mut f: f64, target: f64) -> ([f64; 2], f64) {
    let ext = bx.extents();
    for _ in 0..20 {
        if f < target {
            break;
        }
        let Some(g0) = obj.pair_square(p) else { break };
        let h = [1e-7 * ext[0], 1e-7 * ext[1]];
        let Some(ga) = obj.pair_square([p[0] + h[0], p[1]]) else { break };
        let Some(gt) = obj.pair_square([p[0], p[1] + h[1]]) else { break };
        let da = (ga - g0) / h[0];
        let dt = (gt - g0) / h[1];
        // [re da, re dt; im da, im dt] * step = -g0
        let det = da.re * dt.im - dt.re * da.im;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let sa = (-g0.re * dt.im + dt.re * g0.im) / det;
        let st = (-da.re * g0.im + da.im * g0.re) / det;
        let q = bx.clamp([p[0] + sa, p[1] + st]);
        let fq = obj.eval(q);
        if fq < f {
            p = q;
            f = fq;
        } else {
            break;
        }
    }
    (p, f)
}

/// Indices of scan points that are minima of their 8-neighbourhood,
/// ordered by value.
fn scan_minima(values: &[f64], n: usize) -> Vec<usize> {
    let mut minima: Vec<usize> = (0..n * n)
        .filter(|&idx| {
            let v = values[idx];
            if !v.is_finite() {
                return false;
            }
            let (i, j) = ((idx / n) as isize, (idx % n) as isize);
            (-1..=1).all(|di| {
                (-1..=1).all(|dj| {
                    let (ii, jj) = (i + di, j + dj);
                    if (di == 0 && dj == 0) || ii < 0 || jj < 0 || ii >= n as isize || jj >= n as isize {
                        return true;
                    }
                    v <= values[ii as usize * n + jj as usize]
                })
            })
        })
        .collect();
    minima.sort_by(|&x, &y| values[x].total_cmp(&values[y]).then(x.cmp(&y)));
    minima
}

fn nominal_value(scenario: &Scenario, tunable: Tunable) -> f64 {
    match tunable {
        Tunable::HalfWidth(k) => scenario.levels().get(k).map_or(0.0, |l| l.half_width),
        Tunable::EnergyOffset(_) => 0.0,
    }
}

/// Largest `A` of the closest eigenvalue pair at the four axis probes at
/// distance `delta` around `location`. Probes landing on a defective point
/// move outward by doubling.
pub fn norm_blowup_at(
    scenario: &Scenario,
    tunable: Tunable,
    location: (f64, f64),
    delta: (f64, f64),
) -> Result<f64, EpError> {
    let mut worst: f64 = 0.0;
    for dir in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
        let mut scale = 1.0;
        for attempt in 0..8 {
            let a = location.0 + dir.0 * delta.0 * scale;
            let t = location.1 + dir.1 * delta.1 * scale;
            let tuning = Some(Tuning { param: tunable, value: t });
            let s = spectrum_at(scenario, a, tuning)?;
            let Some((_, i, j)) = s.min_gap() else {
                return Ok(1.0);
            };
            let (pi, pj) = (&s.pairs[i], &s.pairs[j]);
            if (pi.defective || pj.defective) && attempt < 7 {
                scale *= 2.0;
                continue;
            }
            worst = worst.max(pi.norm_a.max(pj.norm_a));
            break;
        }
    }
    Ok(worst)
}

fn dominant_levels(spectrum: &Spectrum) -> (usize, usize) {
    let Some((_, i, _)) = spectrum.min_gap() else {
        return (0, 0);
    };
    let v = &spectrum.pairs[i].vector;
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&x, &y| v[y].norm().total_cmp(&v[x].norm()).then(x.cmp(&y)));
    let (p, q) = (idx[0], idx[1]);
    (p.min(q), p.max(q))
}

/// Locates the exceptional point in `bx` closest to the scenario's own value
/// of the tunable parameter.
pub fn find_ep(scenario: &Scenario, tunable: Tunable, bx: SearchBox, options: &EpOptions) -> Result<EpReport, EpError> {
    bx.validate()?;
    if tunable.level() >= scenario.order() {
        return Err(ModelError::IndexOutOfRange {
            index: tunable.level(),
            n: scenario.order(),
        }
        .into());
    }
    if scenario.order() < 2 {
        return Err(EpError::DegenerateBox("a single level cannot coalesce".into()));
    }
    let obj = Objective { scenario, tunable };
    let n = options.scan.max(2);
    let ext = bx.extents();
    let cell = [ext[0] / (n - 1) as f64, ext[1] / (n - 1) as f64];
    let node = |idx: usize| {
        let (i, j) = (idx / n, idx % n);
        [bx.a.0 + i as f64 * cell[0], bx.tunable.0 + j as f64 * cell[1]]
    };
    let values = map_indexed(n * n, options.execution, |idx| obj.eval(node(idx)));

    let target = options.threshold * options.threshold;
    let nominal = nominal_value(scenario, tunable);
    let mut candidates: Vec<([f64; 2], f64, usize)> = Vec::new();
    for idx in scan_minima(&values, n).into_iter().take(options.starts.max(1)) {
        let (p, f, iters) = nelder_mead(&obj, &bx, node(idx), cell, options.max_iterations, target);
        let (p, f) = newton_polish(&obj, &bx, p, f, target);
        candidates.push((p, f, iters));
    }
    let converged = |c: &([f64; 2], f64, usize)| c.1 < target;
    let pick = if candidates.iter().any(converged) {
        candidates
            .iter()
            .filter(|c| converged(c))
            .min_by(|x, y| (x.0[1] - nominal).abs().total_cmp(&(y.0[1] - nominal).abs()))
    } else {
        candidates.iter().min_by(|x, y| x.1.total_cmp(&y.1))
    };
    let Some(&(p, f, iterations)) = pick else {
        return Ok(EpReport {
            tunable,
            location: (f64::NAN, f64::NAN),
            gap: f64::INFINITY,
            pair: (0, 0),
            norm_blowup: f64::NAN,
            converged: false,
            iterations: 0,
        });
    };
    let location = (p[0], p[1]);
    let spectrum = spectrum_at(scenario, p[0], obj.tuning(p[1]))?;
    let delta = (options.probe_fraction * ext[0], options.probe_fraction * ext[1]);
    Ok(EpReport {
        tunable,
        location,
        gap: f.sqrt(),
        pair: dominant_levels(&spectrum),
        norm_blowup: norm_blowup_at(scenario, tunable, location, delta)?,
        converged: f < target,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CouplingProfile, CouplingSpec, LevelSpec, PairSet, SweepGrid};
    use crate::scenarios::{preset, PresetId};

    fn fig_box() -> SearchBox {
        SearchBox::new((0.3, 1.0), (0.4, 0.8)).unwrap()
    }

    #[test]
    fn finds_the_real_coupling_ep() {
        let r = find_ep(&preset(PresetId::Fig1), Tunable::HalfWidth(1), fig_box(), &EpOptions::default()).unwrap();
        assert!(r.converged, "{r:?}");
        assert!((r.location.0 - 2.0 / 3.0).abs() < 1e-4);
        assert!((r.location.1 - 0.6).abs() < 1e-4);
        assert!(r.gap < 1e-8);
        assert_eq!(r.pair, (0, 1));
        assert!(r.norm_blowup > 10.0);
    }

    #[test]
    fn complex_coupling_ep_is_shifted() {
        let r = find_ep(&preset(PresetId::Fig2), Tunable::HalfWidth(1), fig_box(), &EpOptions::default()).unwrap();
        assert!(r.converged, "{r:?}");
        assert!(((r.location.0 - 2.0 / 3.0).abs() - 1.0 / 15.0).abs() < 1e-4, "{r:?}");
        assert!((r.location.1 - 0.6).abs() < 1e-4);
    }

    #[test]
    fn no_ep_on_a_real_symmetric_slice() {
        // equal widths and real coupling: (e1 - e2)^2 + 4 w^2 > 0 everywhere
        let s = Scenario::new(
            "slice",
            vec![LevelSpec::new("1 - a/2", 0.5).unwrap(), LevelSpec::new("a", 0.5).unwrap()],
            CouplingSpec::new(Complex64::new(0.05, 0.0), CouplingProfile::Constant, PairSet::All),
            SweepGrid::new(0.0, 1.5, 11).unwrap(),
        )
        .unwrap();
        let bx = SearchBox::new((0.3, 1.0), (-0.2, 0.2)).unwrap();
        let r = find_ep(&s, Tunable::EnergyOffset(0), bx, &EpOptions::default()).unwrap();
        assert!(!r.converged);
        assert!(r.gap > 0.09, "{r:?}");
    }

    #[test]
    fn gap_examples() {
        let s = preset(PresetId::Fig1);
        let eps1 = Complex64::new(1.0, -0.5);
        let eps2 = Complex64::new(0.0, -0.5999);
        let g = coalescence_gap(&s, 0.0, None).unwrap();
        // first order: the coupling shifts each level by w^2/(eps1 - eps2)
        let d = (eps1 - eps2).norm();
        assert!((g - d).abs() < 2.0 * 0.0025 / d * 1.1, "{g} vs {d}");
        let decoupled = Scenario::new(
            "d",
            vec![
                LevelSpec::new("0.3", 0.1).unwrap(),
                LevelSpec::new("0.5", 0.2).unwrap(),
                LevelSpec::new("1", 0.3).unwrap(),
            ],
            CouplingSpec::new(Complex64::new(0.0, 0.0), CouplingProfile::Constant, PairSet::All),
            SweepGrid::new(0.0, 1.0, 2).unwrap(),
        )
        .unwrap();
        let g = coalescence_gap(&decoupled, 0.0, None).unwrap();
        assert_eq!(g, (Complex64::new(0.3, -0.1) - Complex64::new(0.5, -0.2)).norm());
    }

    #[test]
    fn degenerate_boxes_are_rejected() {
        assert!(SearchBox::new((1.0, 1.0), (0.4, 0.8)).is_err());
        assert!(SearchBox::new((0.0, 1.0), (0.8, 0.4)).is_err());
        assert!(SearchBox::new((0.0, f64::NAN), (0.4, 0.8)).is_err());
    }

    #[test]
    fn deterministic_and_execution_independent() {
        let s = preset(PresetId::Fig1);
        let seq = EpOptions {
            execution: Execution::Sequential,
            ..EpOptions::default()
        };
        let a = find_ep(&s, Tunable::HalfWidth(1), fig_box(), &seq).unwrap();
        let b = find_ep(&s, Tunable::HalfWidth(1), fig_box(), &EpOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}
