use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use levelcross::eig::eig_small;
use levelcross::model::ComplexMatrix;
use levelcross::two_level::{two_level_eigenvalues, TwoLevelInput};

/// Closed form written independently of the library: roots of
/// `x^2 - (p + q) x + (p q - w^2)` by the quadratic formula.
fn quadratic_roots(p: Complex64, q: Complex64, w: Complex64) -> [Complex64; 2] {
    let b = p + q;
    let c = p * q - w * w;
    let disc = (b * b - 4.0 * c).sqrt();
    [(b + disc) / 2.0, (b - disc) / 2.0]
}

fn set_distance(got: &[Complex64], want: [Complex64; 2]) -> f64 {
    let direct = (got[0] - want[0]).norm().max((got[1] - want[1]).norm());
    let crossed = (got[0] - want[1]).norm().max((got[1] - want[0]).norm());
    direct.min(crossed)
}

fn in_disc(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::from_polar(rng.gen::<f64>().sqrt(), rng.gen::<f64>() * std::f64::consts::TAU)
}

fn numeric(p: Complex64, q: Complex64, w: Complex64) -> Vec<Complex64> {
    let h = ComplexMatrix::from_rows(&[vec![p, w], vec![w, q]]);
    eig_small(&h).unwrap().values()
}

#[test]
fn random_inputs_match_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let (p, q, w) = (in_disc(&mut rng), in_disc(&mut rng), in_disc(&mut rng));
        let got = numeric(p, q, w);
        let (hi, lo) = two_level_eigenvalues(&TwoLevelInput { eps1: p, eps2: q, omega: w });
        worst = worst.max(set_distance(&got, [hi, lo]));
    }
    assert!(worst <= 1e-12, "worst set distance {worst:e}");
}

#[test]
fn library_closed_form_matches_quadratic_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10_000 {
        let (p, q, w) = (in_disc(&mut rng), in_disc(&mut rng), in_disc(&mut rng));
        let (hi, lo) = two_level_eigenvalues(&TwoLevelInput { eps1: p, eps2: q, omega: w });
        let d = set_distance(&[hi, lo], quadratic_roots(p, q, w));
        assert!(d <= 1e-12, "{p} {q} {w}: {d:e}");
    }
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -1.0..0.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

proptest! {
    #[test]
    fn eigenvalues_are_set_equal(p in complex(), q in complex(), wr in -0.3..0.3f64, wi in -0.3..0.3f64) {
        let w = Complex64::new(wr, wi);
        let got = numeric(p, q, w);
        let (hi, lo) = two_level_eigenvalues(&TwoLevelInput { eps1: p, eps2: q, omega: w });
        prop_assert!(set_distance(&got, [hi, lo]) <= 1e-12);
    }
}
