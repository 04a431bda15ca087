//! Eigen-decomposition of small dense complex-symmetric matrices.
//!
//! Eigenvalues are the roots of the characteristic polynomial, which is
//! built and evaluated in double-double arithmetic so that nearly coalescing
//! eigenvalues keep full double precision. Eigenvectors come from the null
//! space of `H - lambda*I` and are normalized with the unconjugated product
//! `v.v = 1`, which for `H = H^T` makes left and right eigenvectors
//! transposes of each other.

use num_complex::Complex64;
use thiserror::Error;

use crate::dd::ComplexDd;
use crate::model::ComplexMatrix;

pub const MAX_ORDER: usize = 8;

/// Relative step size at which a root is considered converged.
pub const ROOT_TOLERANCE: f64 = 1e-13;
pub const MAX_ROOT_ITERATIONS: usize = 500;
/// A pair is defective when `|v.v| < DEFECT_THRESHOLD * sum |v_j|^2`.
pub const DEFECT_THRESHOLD: f64 = 1e-10;
/// Bound on `|v_i.v_j|` for distinct, well separated eigenvalues.
pub const BIORTHOGONALITY_TOLERANCE: f64 = 1e-8;
/// Eigenvalue gap above which the biorthogonality check applies.
pub const SEPARATION_FOR_CHECK: f64 = 1e-6;

/// Unit roundoff of double-double arithmetic, slightly padded.
const DD_EPS: f64 = 2.5e-32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigError {
    #[error("matrix order {0} outside the supported range 1..=8")]
    UnsupportedOrder(usize),
    #[error("matrix has a non-finite entry")]
    NonFinite,
    #[error("root finder did not converge in {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("eigenvectors {i} and {j} are not biorthogonal: |v_i.v_j| = {overlap:.3e}")]
    Biorthogonality { i: usize, j: usize, overlap: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    /// Complex eigenvalue `E - i*Gamma/2`.
    pub value: Complex64,
    /// Expansion coefficients in the unperturbed basis.
    pub vector: Vec<Complex64>,
    /// `A = sum |v_j|^2`; infinite for defective pairs.
    pub norm_a: f64,
    /// `|B_i^j| = |sum conj(v_i) v_j|` for every `j`; the own entry is zero.
    pub cross_norms: Vec<f64>,
    pub defective: bool,
}

impl EigenPair {
    pub fn energy(&self) -> f64 {
        self.value.re
    }

    pub fn half_width(&self) -> f64 {
        -self.value.im
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub pairs: Vec<EigenPair>,
    /// `max_i ||H v_i - lambda_i v_i||_inf`.
    pub residual: f64,
}

impl Spectrum {
    pub fn order(&self) -> usize {
        self.pairs.len()
    }

    pub fn values(&self) -> Vec<Complex64> {
        self.pairs.iter().map(|p| p.value).collect()
    }

    pub fn any_defective(&self) -> bool {
        self.pairs.iter().any(|p| p.defective)
    }

    /// Smallest pairwise eigenvalue distance, with the indices attaining it.
    pub fn min_gap(&self) -> Option<(f64, usize, usize)> {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..self.pairs.len() {
            for j in i + 1..self.pairs.len() {
                let d = (self.pairs[i].value - self.pairs[j].value).norm();
                if best.is_none_or(|(b, _, _)| d < b) {
                    best = Some((d, i, j));
                }
            }
        }
        best
    }
}

fn check_matrix(h: &ComplexMatrix) -> Result<(), EigError> {
    let n = h.order();
    if n == 0 || n > MAX_ORDER {
        return Err(EigError::UnsupportedOrder(n));
    }
    if h.as_slice().iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(EigError::NonFinite);
    }
    Ok(())
}

/// Faddeev-LeVerrier recursion in double-double; returns `c_0..c_{n-1}` of
/// the monic characteristic polynomial.
fn char_poly_dd(h: &ComplexMatrix) -> Vec<ComplexDd> {
    let n = h.order();
    let a: Vec<ComplexDd> = h.as_slice().iter().map(|&z| ComplexDd::from(z)).collect();
    let mut coeffs = vec![ComplexDd::ZERO; n + 1];
    coeffs[n] = ComplexDd::ONE;
    // am holds A*M_{k-1}; M_0 = 0
    let mut m = vec![ComplexDd::ZERO; n * n];
    let mut am = vec![ComplexDd::ZERO; n * n];
    for k in 1..=n {
        let shift = coeffs[n - k + 1];
        m.copy_from_slice(&am);
        for i in 0..n {
            m[i * n + i] = m[i * n + i] + shift;
        }
        let mut trace = ComplexDd::ZERO;
        for i in 0..n {
            for j in 0..n {
                let mut s = ComplexDd::ZERO;
                for l in 0..n {
                    s = s + a[i * n + l] * m[l * n + j];
                }
                am[i * n + j] = s;
            }
            trace = trace + am[i * n + i];
        }
        coeffs[n - k] = (-trace).div_f64(k as f64);
    }
    coeffs.truncate(n);
    coeffs
}

/// Coefficients `c_0..c_{n-1}` of `det(lambda*I - H) = lambda^n + ... + c_0`.
pub fn char_poly(h: &ComplexMatrix) -> Result<Vec<Complex64>, EigError> {
    check_matrix(h)?;
    Ok(char_poly_dd(h).into_iter().map(ComplexDd::to_c64).collect())
}

struct Eval {
    p: Complex64,
    dp: Complex64,
    /// Rounding-error bound of `p`.
    noise: f64,
}

/// Horner evaluation of the monic polynomial and its derivative in
/// double-double.
fn eval_poly(coeffs: &[ComplexDd], z: Complex64) -> Eval {
    let n = coeffs.len();
    let zd = ComplexDd::from(z);
    let mut p = ComplexDd::ONE;
    let mut dp = ComplexDd::ZERO;
    let r = z.norm();
    let mut abs_sum = 1.0;
    for k in (0..n).rev() {
        dp = dp * zd + p;
        p = p * zd + coeffs[k];
        abs_sum = abs_sum * r + coeffs[k].to_c64().norm();
    }
    Eval {
        p: p.to_c64(),
        dp: dp.to_c64(),
        noise: 4.0 * (n as f64 + 1.0) * DD_EPS * abs_sum,
    }
}

fn sort_roots(roots: &mut [Complex64]) {
    roots.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
}

/// Aberth-Ehrlich simultaneous iteration on double-double coefficients.
fn roots_dd(coeffs: &[ComplexDd]) -> Result<Vec<Complex64>, EigError> {
    let n = coeffs.len();
    if n == 1 {
        return Ok(vec![(-coeffs[0]).to_c64()]);
    }
    let radius = 1.0 + coeffs.iter().map(|c| c.to_c64().norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let theta = std::f64::consts::TAU * k as f64 / n as f64 + 0.4;
            Complex64::from_polar(radius, theta)
        })
        .collect();
    let mut frozen = vec![false; n];
    let mut iterations = 0;
    while iterations < MAX_ROOT_ITERATIONS && frozen.iter().any(|f| !f) {
        iterations += 1;
        for k in 0..n {
            if frozen[k] {
                continue;
            }
            let e = eval_poly(coeffs, z[k]);
            if e.p.norm() <= e.noise {
                frozen[k] = true;
                continue;
            }
            let newton = e.p / e.dp;
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != k && z[j] != z[k])
                .map(|j| (z[k] - z[j]).inv())
                .sum();
            let mut step = newton / (Complex64::new(1.0, 0.0) - newton * repulsion);
            if !(step.re.is_finite() && step.im.is_finite()) {
                // zero derivative or a coincident neighbour: nudge off it
                step = Complex64::from_polar(1e-8 * radius, 1.0 + k as f64);
            }
            z[k] -= step;
            if step.norm() <= ROOT_TOLERANCE * z[k].norm() || step.norm() <= 1e-30 * radius {
                frozen[k] = true;
            }
        }
    }
    if frozen.iter().any(|f| !f) {
        let residual = z
            .iter()
            .map(|&r| eval_poly(coeffs, r).p.norm())
            .fold(0.0, f64::max);
        return Err(EigError::NoConvergence {
            iterations,
            residual,
        });
    }
    for root in z.iter_mut() {
        for _ in 0..3 {
            let e = eval_poly(coeffs, *root);
            if e.p == Complex64::new(0.0, 0.0) {
                break;
            }
            let candidate = *root - e.p / e.dp;
            if !(candidate.re.is_finite() && candidate.im.is_finite()) {
                break;
            }
            if eval_poly(coeffs, candidate).p.norm() < e.p.norm() {
                *root = candidate;
            } else {
                break;
            }
        }
    }
    sort_roots(&mut z);
    Ok(z)
}

/// All roots of the monic polynomial `lambda^n + c_{n-1} lambda^{n-1} + ... + c_0`
/// given `coeffs = [c_0, ..., c_{n-1}]`, sorted by real then imaginary part.
pub fn poly_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>, EigError> {
    if coeffs.is_empty() {
        return Err(EigError::UnsupportedOrder(0));
    }
    if coeffs.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(EigError::NonFinite);
    }
    let dd: Vec<ComplexDd> = coeffs.iter().map(|&c| ComplexDd::from(c)).collect();
    roots_dd(&dd)
}

/// LU factorization with complete pivoting, `P (A - shift) Q = L U`.
struct PivotedLu {
    m: usize,
    lu: Vec<Complex64>,
    rows: Vec<usize>,
    cols: Vec<usize>,
}

impl PivotedLu {
    fn new(a: &ComplexMatrix, shift: Complex64) -> Self {
        let m = a.order();
        let mut lu: Vec<Complex64> = a.as_slice().to_vec();
        for i in 0..m {
            lu[i * m + i] -= shift;
        }
        let mut rows: Vec<usize> = (0..m).collect();
        let mut cols: Vec<usize> = (0..m).collect();
        for k in 0..m {
            let (mut pi, mut pj, mut best) = (k, k, -1.0);
            for i in k..m {
                for j in k..m {
                    let v = lu[i * m + j].norm();
                    if v > best {
                        best = v;
                        pi = i;
                        pj = j;
                    }
                }
            }
            if pi != k {
                for j in 0..m {
                    lu.swap(k * m + j, pi * m + j);
                }
                rows.swap(k, pi);
            }
            if pj != k {
                for i in 0..m {
                    lu.swap(i * m + k, i * m + pj);
                }
                cols.swap(k, pj);
            }
            let pivot = lu[k * m + k];
            if pivot == Complex64::new(0.0, 0.0) {
                continue;
            }
            for i in k + 1..m {
                let l = lu[i * m + k] / pivot;
                lu[i * m + k] = l;
                for j in k + 1..m {
                    let u = lu[k * m + j];
                    lu[i * m + j] -= l * u;
                }
            }
        }
        PivotedLu { m, lu, rows, cols }
    }

    fn pivot(&self, k: usize) -> Complex64 {
        self.lu[k * self.m + k]
    }

    /// Number of trailing pivots with magnitude at most `threshold`.
    fn small_pivots(&self, threshold: f64) -> usize {
        (0..self.m)
            .rev()
            .take_while(|&k| self.pivot(k).norm() <= threshold)
            .count()
    }

    /// Null vectors of `U` for the last `dim` (free) columns, in original
    /// column order.
    fn null_basis(&self, dim: usize) -> Vec<Vec<Complex64>> {
        let m = self.m;
        let bound = m - dim;
        (bound..m)
            .map(|free| {
                let mut y = vec![Complex64::new(0.0, 0.0); m];
                y[free] = Complex64::new(1.0, 0.0);
                for k in (0..bound).rev() {
                    let mut s = Complex64::new(0.0, 0.0);
                    for j in k + 1..m {
                        s += self.lu[k * m + j] * y[j];
                    }
                    y[k] = -s / self.pivot(k);
                }
                let mut x = vec![Complex64::new(0.0, 0.0); m];
                for k in 0..m {
                    x[self.cols[k]] = y[k];
                }
                x
            })
            .collect()
    }

    /// Solves `(A - shift) x = b` with tiny pivots raised to `floor`.
    fn solve(&self, b: &[Complex64], floor: f64) -> Vec<Complex64> {
        let m = self.m;
        let mut y: Vec<Complex64> = (0..m).map(|k| b[self.rows[k]]).collect();
        for i in 0..m {
            for j in 0..i {
                let l = self.lu[i * m + j];
                let yj = y[j];
                y[i] -= l * yj;
            }
        }
        for k in (0..m).rev() {
            let mut s = y[k];
            for j in k + 1..m {
                s -= self.lu[k * m + j] * y[j];
            }
            let mut p = self.pivot(k);
            if p.norm() < floor {
                p = if p == Complex64::new(0.0, 0.0) {
                    Complex64::new(floor, 0.0)
                } else {
                    p * (floor / p.norm())
                };
            }
            y[k] = s / p;
        }
        let mut x = vec![Complex64::new(0.0, 0.0); m];
        for k in 0..m {
            x[self.cols[k]] = y[k];
        }
        x
    }
}

fn residual_inf(a: &ComplexMatrix, lambda: Complex64, v: &[Complex64]) -> f64 {
    a.mul_vec(v)
        .iter()
        .zip(v)
        .map(|(hv, &x)| (hv - lambda * x).norm())
        .fold(0.0, f64::max)
}

fn max_abs(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn scale(v: &mut [Complex64], s: Complex64) {
    for x in v.iter_mut() {
        *x *= s;
    }
}

fn bilinear(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Eigenvector for a simple eigenvalue with one polishing step of inverse
/// iteration.
fn simple_vector(a: &ComplexMatrix, lambda: Complex64, norm: f64) -> Vec<Complex64> {
    let lu = PivotedLu::new(a, lambda);
    let mut v = lu.null_basis(1).pop().expect("one free column");
    let mx = max_abs(&v);
    scale(&mut v, Complex64::new(1.0 / mx, 0.0));
    let floor = f64::EPSILON * norm.max(f64::MIN_POSITIVE);
    let mut w = lu.solve(&v, floor);
    let mw = max_abs(&w);
    if mw.is_finite() && mw > 0.0 {
        scale(&mut w, Complex64::new(1.0 / mw, 0.0));
        if residual_inf(a, lambda, &w) < residual_inf(a, lambda, &v) {
            v = w;
        }
    }
    v
}

/// Groups sorted roots whose mutual distance is below `tol` (transitively).
fn clusters(roots: &[Complex64], tol: f64) -> Vec<Vec<usize>> {
    let n = roots.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        label[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (roots[i] - roots[j]).norm() <= tol {
                let (ri, rj) = (find(&mut label, i), find(&mut label, j));
                label[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_of_root: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let r = find(&mut label, i);
        match group_of_root[r] {
            Some(g) => groups[g].push(i),
            None => {
                group_of_root[r] = Some(groups.len());
                groups.push(vec![i]);
            }
        }
    }
    groups
}

/// Orthogonalizes a basis with respect to the unconjugated product.
fn symmetric_gram_schmidt(basis: Vec<Vec<Complex64>>) -> Vec<Vec<Complex64>> {
    let mut out: Vec<Vec<Complex64>> = Vec::with_capacity(basis.len());
    for mut v in basis {
        for q in &out {
            let qq = bilinear(q, q);
            if qq.norm() > 0.0 {
                let c = bilinear(q, &v) / qq;
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= c * y;
                }
            }
        }
        let mx = max_abs(&v);
        if mx > 0.0 {
            scale(&mut v, Complex64::new(1.0 / mx, 0.0));
        }
        out.push(v);
    }
    out
}

/// Eigenvalues and unnormalized eigenvectors of one coupled block.
fn solve_block(a: &ComplexMatrix) -> Result<Vec<(Complex64, Vec<Complex64>)>, EigError> {
    let m = a.order();
    if m == 1 {
        return Ok(vec![(a.get(0, 0), vec![Complex64::new(1.0, 0.0)])]);
    }
    let roots = roots_dd(&char_poly_dd(a))?;
    let norm = a.norm_inf();
    let mut out = Vec::with_capacity(m);
    for group in clusters(&roots, 1e-9 * (1.0 + norm)) {
        if group.len() > 1 {
            let mean: Complex64 =
                group.iter().map(|&i| roots[i]).sum::<Complex64>() / group.len() as f64;
            let lu = PivotedLu::new(a, mean);
            let dim = lu.small_pivots(1e-8 * norm).min(group.len());
            if dim >= 2 {
                let basis = symmetric_gram_schmidt(lu.null_basis(dim));
                for (k, v) in basis.into_iter().enumerate() {
                    let vv = bilinear(&v, &v);
                    let value = if vv.norm() > DEFECT_THRESHOLD * v.iter().map(|z| z.norm_sqr()).sum::<f64>() {
                        bilinear(&v, &a.mul_vec(&v)) / vv
                    } else {
                        roots[group[k]]
                    };
                    out.push((value, v));
                }
                // any remaining roots of the cluster sit on the defective part
                for &i in &group[dim..] {
                    out.push((roots[i], simple_vector(a, roots[i], norm)));
                }
                continue;
            }
        }
        for &i in &group {
            out.push((roots[i], simple_vector(a, roots[i], norm)));
        }
    }
    Ok(out)
}

/// Connected components of the coupling graph, each sorted.
fn components(h: &ComplexMatrix) -> Vec<Vec<usize>> {
    let n = h.order();
    let zero = Complex64::new(0.0, 0.0);
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if !seen[j] && (h.get(i, j) != zero || h.get(j, i) != zero) {
                    seen[j] = true;
                    comp.push(j);
                    stack.push(j);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Scales `v` to `v.v = 1`, or flags it defective and scales it to unit
/// Euclidean length. The largest component is made to have `Re >= 0`.
fn normalize(v: &mut [Complex64]) -> bool {
    let euclid: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    let vv = bilinear(v, v);
    let defective = vv.norm() < DEFECT_THRESHOLD * euclid;
    let factor = if defective {
        Complex64::new(1.0 / euclid.sqrt(), 0.0)
    } else {
        vv.sqrt().inv()
    };
    scale(v, factor);
    let lead = v
        .iter()
        .copied()
        .fold(Complex64::new(0.0, 0.0), |best, z| if z.norm() > best.norm() { z } else { best });
    if lead.re < 0.0 || (lead.re == 0.0 && lead.im < 0.0) {
        scale(v, Complex64::new(-1.0, 0.0));
    }
    defective
}

fn fill_observables(pairs: &mut [EigenPair]) {
    let vectors: Vec<Vec<Complex64>> = pairs.iter().map(|p| p.vector.clone()).collect();
    for (i, pair) in pairs.iter_mut().enumerate() {
        pair.norm_a = if pair.defective {
            f64::INFINITY
        } else {
            pair.vector.iter().map(|z| z.norm_sqr()).sum()
        };
        pair.cross_norms = vectors
            .iter()
            .enumerate()
            .map(|(j, w)| {
                if i == j {
                    0.0
                } else {
                    pair.vector.iter().zip(w).map(|(a, b)| a.conj() * b).sum::<Complex64>().norm()
                }
            })
            .collect();
    }
}

/// All eigenpairs of `h` (order 1 to 8), sorted by eigenvalue.
///
/// Uncoupled blocks are solved independently, so levels without coupling
/// keep their diagonal value exactly.
pub fn eig_small(h: &ComplexMatrix) -> Result<Spectrum, EigError> {
    check_matrix(h)?;
    let n = h.order();
    let mut pairs = Vec::with_capacity(n);
    for comp in components(h) {
        let block = h.submatrix(&comp);
        for (value, local) in solve_block(&block)? {
            let mut vector = vec![Complex64::new(0.0, 0.0); n];
            for (k, &idx) in comp.iter().enumerate() {
                vector[idx] = local[k];
            }
            let defective = normalize(&mut vector);
            pairs.push(EigenPair {
                value,
                vector,
                norm_a: f64::NAN,
                cross_norms: Vec::new(),
                defective,
            });
        }
    }
    pairs.sort_by(|x, y| {
        x.value
            .re
            .total_cmp(&y.value.re)
            .then(x.value.im.total_cmp(&y.value.im))
    });
    fill_observables(&mut pairs);
    let residual = pairs
        .iter()
        .map(|p| residual_inf(h, p.value, &p.vector))
        .fold(0.0, f64::max);
    Ok(Spectrum { pairs, residual })
}

/// Recomputes `A_i` and `|B_i^j|` and checks `v_i.v_j = 0` for distinct,
/// well separated, non-defective pairs.
pub fn normalize_biorthogonal(mut spectrum: Spectrum) -> Result<Spectrum, EigError> {
    fill_observables(&mut spectrum.pairs);
    let pairs = &spectrum.pairs;
    for i in 0..pairs.len() {
        for j in i + 1..pairs.len() {
            if pairs[i].defective || pairs[j].defective {
                continue;
            }
            if (pairs[i].value - pairs[j].value).norm() <= SEPARATION_FOR_CHECK {
                continue;
            }
            let overlap = bilinear(&pairs[i].vector, &pairs[j].vector).norm();
            if overlap.is_nan() || overlap >= BIORTHOGONALITY_TOLERANCE {
                return Err(EigError::Biorthogonality { i, j, overlap });
            }
        }
    }
    Ok(spectrum)
}

/// [`eig_small`] followed by [`normalize_biorthogonal`].
pub fn solve(h: &ComplexMatrix) -> Result<Spectrum, EigError> {
    normalize_biorthogonal(eig_small(h)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_hamiltonian, Tunable, Tuning};
    use crate::scenarios::{preset, PresetId};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(x: Complex64, y: Complex64, tol: f64) -> bool {
        (x - y).norm() <= tol
    }

    #[test]
    fn char_poly_small_cases() {
        let d = ComplexMatrix::diagonal(&[c(1.0, 0.0), c(2.0, 0.0)]);
        assert_eq!(char_poly(&d).unwrap(), vec![c(2.0, 0.0), c(-3.0, 0.0)]);
        let z = ComplexMatrix::zeros(2);
        assert_eq!(char_poly(&z).unwrap(), vec![c(0.0, 0.0), c(0.0, 0.0)]);
        let h = build_hamiltonian(&preset(PresetId::Fig1), 0.0).unwrap();
        let cp = char_poly(&h).unwrap();
        assert!(close(-cp[1], c(1.0, -1.0999), 1e-15));
    }

    #[test]
    fn char_poly_trace_and_determinant_3x3() {
        let h = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.5), c(0.2, 0.0), c(0.0, 0.3)],
            vec![c(0.2, 0.0), c(-1.0, 0.0), c(0.4, -0.1)],
            vec![c(0.0, 0.3), c(0.4, -0.1), c(0.5, 0.5)],
        ]);
        let cp = char_poly(&h).unwrap();
        assert!(close(cp[2], -h.trace(), 1e-15));
        // cofactor expansion along the first row
        let g = |i, j| h.get(i, j);
        let det = g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1))
            - g(0, 1) * (g(1, 0) * g(2, 2) - g(1, 2) * g(2, 0))
            + g(0, 2) * (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0));
        assert!(close(-cp[0], det, 1e-15));
    }

    #[test]
    fn roots_of_simple_polynomials() {
        assert_eq!(poly_roots(&[c(-1.0, 0.0), c(0.0, 0.0)]).unwrap(), vec![c(-1.0, 0.0), c(1.0, 0.0)]);
        let double = poly_roots(&[c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(double.iter().all(|z| z.norm() < 1e-15));
        let r = poly_roots(&[c(2.0, 0.0), c(-3.0, 0.0)]).unwrap();
        assert!(close(r[0], c(1.0, 0.0), 1e-15) && close(r[1], c(2.0, 0.0), 1e-15));
        assert_eq!(poly_roots(&[c(-0.5, 0.25)]).unwrap(), vec![c(0.5, -0.25)]);
        assert!(poly_roots(&[]).is_err());
    }

    #[test]
    fn clustered_roots_converge() {
        // (x - 1)^4 and (x - 0.3i)^3 (x + 2)
        let quad = poly_roots(&[c(1.0, 0.0), c(-4.0, 0.0), c(6.0, 0.0), c(-4.0, 0.0)]).unwrap();
        assert!(quad.iter().all(|z| (z - c(1.0, 0.0)).norm() < 1e-7));
        let r0 = c(0.0, 0.3);
        // expand (x - r0)^3 (x + 2)
        let mut p = vec![c(1.0, 0.0)];
        for root in [r0, r0, r0, c(-2.0, 0.0)] {
            let mut next = vec![c(0.0, 0.0); p.len() + 1];
            for (k, &a) in p.iter().enumerate() {
                next[k + 1] += a;
                next[k] -= a * root;
            }
            p = next;
        }
        p.pop();
        let r = poly_roots(&p).unwrap();
        assert!(close(r[0], c(-2.0, 0.0), 1e-12));
        assert!(r[1..].iter().all(|z| (z - r0).norm() < 1e-5));
    }

    #[test]
    fn diagonal_matrix_gives_unit_basis() {
        let eps = [c(0.3, -0.5), c(1.2, -0.6), c(-0.4, -0.1)];
        let s = solve(&ComplexMatrix::diagonal(&eps)).unwrap();
        for p in &s.pairs {
            let k = eps.iter().position(|&e| e == p.value).expect("exact diagonal value");
            for (j, &x) in p.vector.iter().enumerate() {
                assert_eq!(x, if j == k { c(1.0, 0.0) } else { c(0.0, 0.0) });
            }
            assert_eq!(p.norm_a, 1.0);
            assert!(p.cross_norms.iter().all(|&b| b == 0.0));
            assert!(!p.defective);
        }
        assert_eq!(s.residual, 0.0);
    }

    #[test]
    fn width_bifurcation_at_energy_crossing() {
        let h = build_hamiltonian(&preset(PresetId::Fig3), 2.0 / 3.0).unwrap();
        let s = solve(&h).unwrap();
        let mut v = s.values();
        v.sort_by(|x, y| x.im.total_cmp(&y.im));
        let e = h.get(0, 0).re;
        assert!(close(v[0], c(e, -0.55), 1e-12));
        assert!(close(v[1], c(e, -0.45), 1e-12));
    }

    #[test]
    fn exact_exceptional_point_is_flagged_defective() {
        // binary-exact inputs: (e1 - e2)^2 + 4 w^2 = (0.125 i)^2 + 4 * 0.0625^2 = 0
        let h = ComplexMatrix::from_rows(&[
            vec![c(0.5, -0.5), c(0.0625, 0.0)],
            vec![c(0.0625, 0.0), c(0.5, -0.625)],
        ]);
        let spec = eig_small(&h).unwrap();
        assert!(spec.pairs.iter().all(|p| p.defective));
        assert!(spec.pairs.iter().all(|p| p.norm_a.is_infinite()));
        assert!(spec.pairs.iter().all(|p| close(p.value, c(0.5, -0.5625), 1e-14)));
        assert!(solve(&h).is_ok());
    }

    #[test]
    fn rounded_exceptional_point_has_huge_norm() {
        // 2/3 and 0.6 are not representable; the stored matrix sits about
        // 1e-17 away from the exact coalescence, which opens a gap of
        // order sqrt(1e-17)
        let s = preset(PresetId::Fig1);
        let t = Tuning {
            param: Tunable::HalfWidth(1),
            value: 0.6,
        };
        let h = s.hamiltonian_tuned(2.0 / 3.0, Some(t)).unwrap();
        let spec = solve(&h).unwrap();
        let (gap, _, _) = spec.min_gap().unwrap();
        assert!(gap < 1e-8, "gap {gap:e}");
        assert!(spec.pairs.iter().all(|p| p.norm_a > 1e6));
    }

    #[test]
    fn norm_grows_towards_the_exceptional_point() {
        let s = preset(PresetId::Fig1);
        let norms: Vec<f64> = [0.59, 0.599, 0.5999]
            .iter()
            .map(|&w| {
                let t = Tuning {
                    param: Tunable::HalfWidth(1),
                    value: w,
                };
                let spec = solve(&s.hamiltonian_tuned(2.0 / 3.0, Some(t)).unwrap()).unwrap();
                assert!(spec.pairs.iter().all(|p| !p.defective && p.norm_a > 1.0));
                spec.pairs[0].norm_a
            })
            .collect();
        assert!(norms[0] < norms[1] && norms[1] < norms[2], "{norms:?}");
    }

    #[test]
    fn degenerate_diagonalizable_block() {
        // direct sum of a coupled 2x2 block with a degenerate eigenvalue
        // equal to a third level: the null space is two dimensional
        let h = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
            vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)],
        ]);
        let s = solve(&h).unwrap();
        let mut v = s.values();
        sort_roots(&mut v);
        assert!(close(v[0], c(0.0, 0.0), 1e-14));
        assert!(close(v[1], c(2.0, 0.0), 1e-14));
        assert!(close(v[2], c(2.0, 0.0), 1e-14));
        assert!(s.residual < 1e-13);
        assert!(s.pairs.iter().all(|p| !p.defective));
        // the two vectors for eigenvalue 2 are biorthogonal
        let twos: Vec<_> = s.pairs.iter().filter(|p| (p.value - c(2.0, 0.0)).norm() < 1e-9).collect();
        assert!(bilinear(&twos[0].vector, &twos[1].vector).norm() < 1e-12);
    }

    #[test]
    fn sign_convention_and_normalization() {
        let h = ComplexMatrix::from_rows(&[
            vec![c(0.5, -0.5), c(0.07, 0.02)],
            vec![c(0.07, 0.02), c(0.6, -0.4)],
        ]);
        let s = solve(&h).unwrap();
        for p in &s.pairs {
            assert!((bilinear(&p.vector, &p.vector) - c(1.0, 0.0)).norm() < 1e-13);
            let lead = p.vector.iter().copied().fold(c(0.0, 0.0), |b, z| if z.norm() > b.norm() { z } else { b });
            assert!(lead.re >= 0.0);
        }
    }

    #[test]
    fn rejects_unsupported_input() {
        assert!(matches!(eig_small(&ComplexMatrix::zeros(0)), Err(EigError::UnsupportedOrder(0))));
        assert!(matches!(eig_small(&ComplexMatrix::zeros(9)), Err(EigError::UnsupportedOrder(9))));
        let mut h = ComplexMatrix::zeros(2);
        h.set(0, 0, c(f64::NAN, 0.0));
        assert!(matches!(eig_small(&h), Err(EigError::NonFinite)));
    }
}
