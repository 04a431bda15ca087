//! Parameter sweeps: solve the spectrum on a grid, connect eigenpairs into
//! continuous branches and classify the crossing events between them.

use num_complex::Complex64;
use thiserror::Error;

use crate::eig::{solve, EigError, EigenPair, Spectrum};
use crate::model::{build_hamiltonian, ModelError, Scenario};
use crate::par::{map_indexed, Execution};

/// Energies closer than this count as equal.
pub const ENERGY_TOLERANCE: f64 = 1e-6;
/// Objective values within this distance are treated as tied.
pub const MATCH_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("at a = {a}: {source}")]
    Model { a: f64, source: ModelError },
    #[error("at a = {a}: {source}")]
    Solver { a: f64, source: EigError },
}

impl SweepError {
    pub fn parameter(&self) -> f64 {
        match *self {
            SweepError::Model { a, .. } | SweepError::Solver { a, .. } => a,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SweepOptions {
    pub execution: Execution,
}

impl SweepOptions {
    pub fn sequential() -> Self {
        SweepOptions {
            execution: Execution::Sequential,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchPoint {
    pub a: f64,
    pub pair: EigenPair,
}

impl BranchPoint {
    pub fn energy(&self) -> f64 {
        self.pair.value.re
    }

    pub fn half_width(&self) -> f64 {
        -self.pair.value.im
    }
}

/// One continuous branch. Branch `k` starts on unperturbed level `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub branch_id: usize,
    pub points: Vec<BranchPoint>,
    /// Unperturbed `e_k(a) - i*gamma_k/2` of the origin level at each point.
    pub unperturbed: Vec<Complex64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.points.iter().map(BranchPoint::energy).collect()
    }

    pub fn half_widths(&self) -> Vec<f64> {
        self.points.iter().map(BranchPoint::half_width).collect()
    }

    pub fn values(&self) -> Vec<Complex64> {
        self.points.iter().map(|p| p.pair.value).collect()
    }
}

fn solve_at(scenario: &Scenario, a: f64) -> Result<Spectrum, SweepError> {
    let h = build_hamiltonian(scenario, a).map_err(|source| SweepError::Model { a, source })?;
    solve(&h).map_err(|source| SweepError::Solver { a, source })
}

/// Next permutation in lexicographic order; false after the last one.
fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

fn cosine_overlap(u: &[Complex64], v: &[Complex64]) -> f64 {
    let dot: Complex64 = u.iter().zip(v).map(|(x, y)| x.conj() * y).sum();
    let nu: f64 = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        0.0
    } else {
        dot.norm() / (nu * nv)
    }
}

/// Assignment `perm` with `curr.pairs[perm[i]]` continuing `prev.pairs[i]`.
///
/// Maximizes the summed Hermitian overlap of the (length-normalized)
/// eigenvectors over all permutations. Ties are broken by the smallest
/// summed eigenvalue distance, then by lexicographic order. When either
/// spectrum holds a defective pair the overlaps are meaningless and the
/// eigenvalue distance alone decides.
pub fn match_branches(prev: &Spectrum, curr: &Spectrum) -> Vec<usize> {
    let n = prev.order();
    assert_eq!(n, curr.order(), "spectra of different order");
    let by_distance = prev.any_defective() || curr.any_defective();
    let mut overlap = vec![0.0; n * n];
    let mut distance = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let (p, c) = (&prev.pairs[i], &curr.pairs[j]);
            distance[i * n + j] = (p.value - c.value).norm();
            if !by_distance {
                overlap[i * n + j] = cosine_overlap(&p.vector, &c.vector);
            }
        }
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = perm.clone();
    let mut best_score = (f64::NEG_INFINITY, f64::INFINITY);
    loop {
        let score: f64 = (0..n).map(|i| overlap[i * n + perm[i]]).sum();
        let dist: f64 = (0..n).map(|i| distance[i * n + perm[i]]).sum();
        let better = score > best_score.0 + MATCH_TIE_TOLERANCE
            || ((score - best_score.0).abs() <= MATCH_TIE_TOLERANCE && dist < best_score.1);
        if better {
            best_score = (score, dist);
            best.copy_from_slice(&perm);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    best
}

/// Reference spectrum of the uncoupled basis: unit vectors with the
/// diagonal of `H` as eigenvalues.
fn basis_spectrum(scenario: &Scenario, a: f64) -> Result<Spectrum, SweepError> {
    let h = build_hamiltonian(scenario, a).map_err(|source| SweepError::Model { a, source })?;
    let n = h.order();
    let pairs = (0..n)
        .map(|k| {
            let mut vector = vec![Complex64::new(0.0, 0.0); n];
            vector[k] = Complex64::new(1.0, 0.0);
            EigenPair {
                value: h.get(k, k),
                vector,
                norm_a: 1.0,
                cross_norms: vec![0.0; n],
                defective: false,
            }
        })
        .collect();
    Ok(Spectrum { pairs, residual: 0.0 })
}

/// Solves every grid point of the scenario and connects the eigenpairs into
/// one trajectory per level.
pub fn run_sweep(scenario: &Scenario, options: &SweepOptions) -> Result<Vec<Trajectory>, SweepError> {
    let points = scenario.grid().points();
    let solved = map_indexed(points.len(), options.execution, |k| solve_at(scenario, points[k]));
    let n = scenario.order();
    let widths = scenario.half_widths(None);
    let mut trajectories: Vec<Trajectory> = (0..n)
        .map(|b| Trajectory {
            branch_id: b,
            points: Vec::with_capacity(points.len()),
            unperturbed: Vec::with_capacity(points.len()),
        })
        .collect();
    let mut previous = basis_spectrum(scenario, points[0])?;
    for (k, spectrum) in solved.into_iter().enumerate() {
        let spectrum = spectrum?;
        let a = points[k];
        let energies = scenario
            .level_energies(a, None)
            .map_err(|source| SweepError::Model { a, source })?;
        let perm = match_branches(&previous, &spectrum);
        let ordered = Spectrum {
            pairs: perm.iter().map(|&j| spectrum.pairs[j].clone()).collect(),
            residual: spectrum.residual,
        };
        for (b, t) in trajectories.iter_mut().enumerate() {
            t.points.push(BranchPoint {
                a,
                pair: ordered.pairs[b].clone(),
            });
            t.unperturbed.push(Complex64::new(energies[b], -widths[b]));
        }
        previous = ordered;
    }
    Ok(trajectories)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrossingKind {
    /// Energies repel while the widths cross.
    AvoidedEnergy,
    /// Energies coincide while the widths bifurcate.
    TrueEnergy,
    /// Both eigenpairs are defective.
    Coalescence,
}

impl CrossingKind {
    pub fn name(self) -> &'static str {
        match self {
            CrossingKind::AvoidedEnergy => "avoided_energy",
            CrossingKind::TrueEnergy => "true_energy",
            CrossingKind::Coalescence => "coalescence",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrossingReport {
    pub kind: CrossingKind,
    pub a_cr: f64,
    /// Branch ids, smaller first.
    pub branches: (usize, usize),
    /// Largest `|Gamma_i/2 - Gamma_j/2|` over the event.
    pub max_width_split: f64,
    /// At the end of the sweep one branch sits closest to the other's origin level.
    pub exchange_detected: bool,
}

struct PairSeries {
    a: Vec<f64>,
    de: Vec<f64>,
    dw: Vec<f64>,
}

fn max_abs_in(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// True if no third branch has its energy strictly between the pair's.
fn adjacent(trajectories: &[Trajectory], i: usize, j: usize, k: usize) -> bool {
    let (ei, ej) = (trajectories[i].points[k].energy(), trajectories[j].points[k].energy());
    let (lo, hi) = (ei.min(ej), ei.max(ej));
    trajectories
        .iter()
        .enumerate()
        .filter(|&(m, _)| m != i && m != j)
        .all(|(_, t)| {
            let e = t.points[k].energy();
            !(e > lo && e < hi)
        })
}

fn nearest_level(value: Complex64, levels: &[Complex64]) -> usize {
    levels
        .iter()
        .enumerate()
        .min_by(|x, y| (value - x.1).norm().total_cmp(&(value - y.1).norm()))
        .map(|(k, _)| k)
        .unwrap_or(0)
}

fn exchanged(trajectories: &[Trajectory], i: usize, j: usize) -> bool {
    let levels: Vec<Complex64> = trajectories
        .iter()
        .map(|t| *t.unperturbed.last().expect("non-empty trajectory"))
        .collect();
    let end = |b: usize| trajectories[b].points.last().expect("non-empty trajectory").pair.value;
    nearest_level(end(i), &levels) == j || nearest_level(end(j), &levels) == i
}

fn pair_events(trajectories: &[Trajectory], i: usize, j: usize) -> Vec<CrossingReport> {
    let (ti, tj) = (&trajectories[i], &trajectories[j]);
    let m = ti.len();
    let s = PairSeries {
        a: ti.points.iter().map(|p| p.a).collect(),
        de: (0..m).map(|k| ti.points[k].energy() - tj.points[k].energy()).collect(),
        dw: (0..m)
            .map(|k| ti.points[k].half_width() - tj.points[k].half_width())
            .collect(),
    };
    let mut found: Vec<(CrossingKind, f64, usize, f64)> = Vec::new();

    // coalescence: runs where both pairs are defective
    let mut k = 0;
    while k < m {
        if ti.points[k].pair.defective && tj.points[k].pair.defective {
            let start = k;
            while k < m && ti.points[k].pair.defective && tj.points[k].pair.defective {
                k += 1;
            }
            let mid = (start + k - 1) / 2;
            found.push((CrossingKind::Coalescence, s.a[mid], mid, max_abs_in(&s.dw[start..k])));
        } else {
            k += 1;
        }
    }

    // true crossings: equal energies over a run, or a sign change of the
    // energy difference, with a width-split maximum inside
    let mut k = 0;
    while k < m {
        let (start, end, zero) = if s.de[k].abs() < ENERGY_TOLERANCE {
            let start = k;
            while k < m && s.de[k].abs() < ENERGY_TOLERANCE {
                k += 1;
            }
            (start, k - 1, None)
        } else if k + 1 < m
            && s.de[k + 1].abs() >= ENERGY_TOLERANCE
            && s.de[k].signum() != s.de[k + 1].signum()
        {
            let t = s.de[k] / (s.de[k] - s.de[k + 1]);
            let zero = s.a[k] + t * (s.a[k + 1] - s.a[k]);
            k += 1;
            (k - 1, k, Some(zero))
        } else {
            k += 1;
            continue;
        };
        let arg = (start..=end)
            .max_by(|&x, &y| s.dw[x].abs().total_cmp(&s.dw[y].abs()).then(y.cmp(&x)))
            .expect("non-empty region");
        let peak = s.dw[arg].abs();
        let left_ok = start == 0 || s.dw[start - 1].abs() <= peak;
        let right_ok = end + 1 >= m || s.dw[end + 1].abs() <= peak;
        if left_ok && right_ok {
            found.push((CrossingKind::TrueEnergy, zero.unwrap_or(s.a[arg]), arg, peak));
        }
    }

    // avoided crossings: strict local minimum of the energy gap with the
    // widths crossing nearby
    let window = (m / 50).max(2);
    for k in 1..m.saturating_sub(1) {
        let gap = s.de[k].abs();
        if gap < ENERGY_TOLERANCE || gap >= s.de[k - 1].abs() || gap >= s.de[k + 1].abs() {
            continue;
        }
        let lo = k.saturating_sub(window);
        let hi = (k + window).min(m - 1);
        let w = &s.dw[lo..=hi];
        let crosses = w.iter().any(|&x| x < -MATCH_TIE_TOLERANCE) && w.iter().any(|&x| x > MATCH_TIE_TOLERANCE);
        if crosses {
            found.push((CrossingKind::AvoidedEnergy, s.a[k], k, max_abs_in(w)));
        }
    }

    let exchange = exchanged(trajectories, i, j);
    found
        .into_iter()
        .filter(|&(_, _, k, _)| adjacent(trajectories, i, j, k))
        .map(|(kind, a_cr, _, split)| CrossingReport {
            kind,
            a_cr,
            branches: (i, j),
            max_width_split: split,
            exchange_detected: exchange,
        })
        .collect()
}

/// Classifies crossing events between every pair of branches, ordered by
/// `a_cr`.
pub fn detect_crossings(trajectories: &[Trajectory]) -> Vec<CrossingReport> {
    let n = trajectories.len();
    if n < 2 || trajectories[0].len() < 3 {
        return Vec::new();
    }
    let mut events: Vec<CrossingReport> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .flat_map(|(i, j)| pair_events(trajectories, i, j))
        .collect();
    events.sort_by(|x, y| x.a_cr.total_cmp(&y.a_cr).then(x.branches.cmp(&y.branches)));
    events
}
