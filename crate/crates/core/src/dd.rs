//! Double-double ("dd") real and complex arithmetic.
//!
//! A value is the unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`, giving
//! roughly 106 bits of significand. Only the handful of operations needed by
//! the characteristic polynomial and the root finder are provided.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn div_f64(self, b: f64) -> Dd {
        let q1 = self.hi / b;
        let (p1, p2) = two_prod(q1, b);
        let (s, e) = two_sum(self.hi, -p1);
        let e = e - p2 + self.lo;
        let q2 = (s + e) / b;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, b.hi);
        let p2 = p2 + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct ComplexDd {
    pub re: Dd,
    pub im: Dd,
}

impl ComplexDd {
    pub const ZERO: ComplexDd = ComplexDd {
        re: Dd::ZERO,
        im: Dd::ZERO,
    };
    pub const ONE: ComplexDd = ComplexDd {
        re: Dd::ONE,
        im: Dd::ZERO,
    };

    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn div_f64(self, b: f64) -> ComplexDd {
        ComplexDd {
            re: self.re.div_f64(b),
            im: self.im.div_f64(b),
        }
    }
}

impl From<Complex64> for ComplexDd {
    fn from(z: Complex64) -> Self {
        ComplexDd {
            re: Dd::from_f64(z.re),
            im: Dd::from_f64(z.im),
        }
    }
}

impl Add for ComplexDd {
    type Output = ComplexDd;
    #[inline]
    fn add(self, b: ComplexDd) -> ComplexDd {
        ComplexDd {
            re: self.re + b.re,
            im: self.im + b.im,
        }
    }
}

impl Sub for ComplexDd {
    type Output = ComplexDd;
    #[inline]
    fn sub(self, b: ComplexDd) -> ComplexDd {
        ComplexDd {
            re: self.re - b.re,
            im: self.im - b.im,
        }
    }
}

impl Neg for ComplexDd {
    type Output = ComplexDd;
    #[inline]
    fn neg(self) -> ComplexDd {
        ComplexDd {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl Mul for ComplexDd {
    type Output = ComplexDd;
    #[inline]
    fn mul(self, b: ComplexDd) -> ComplexDd {
        ComplexDd {
            re: self.re * b.re - self.im * b.im,
            im: self.re * b.im + self.im * b.re,
        }
    }
}
