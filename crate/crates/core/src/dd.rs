//! Minimal double-double arithmetic (~31 significant digits).
//!
//! Used only where an identity must be verified to an absolute tolerance
//! far below what plain f64 cancellation allows. Not a general-purpose
//! extended float: just the handful of ops the certificate checks need.

#[derive(Debug, Clone, Copy)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[cfg(feature = "std")]
#[inline]
fn fma(a: f64, b: f64, c: f64) -> f64 {
    a.mul_add(b, c)
}

#[cfg(not(feature = "std"))]
#[inline]
fn fma(a: f64, b: f64, c: f64) -> f64 {
    libm::fma(a, b, c)
}

#[inline]
fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    Dd { hi: s, lo: err }
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

#[inline]
fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    Dd { hi: p, lo: fma(a, b, -p) }
}

impl Dd {
    pub fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn add(self, other: Dd) -> Dd {
        let s = two_sum(self.hi, other.hi);
        let lo = s.lo + self.lo + other.lo;
        quick_two_sum(s.hi, lo)
    }

    pub fn sub(self, other: Dd) -> Dd {
        self.add(Dd { hi: -other.hi, lo: -other.lo })
    }

    pub fn mul(self, other: Dd) -> Dd {
        let p = two_prod(self.hi, other.hi);
        let lo = p.lo + self.hi * other.lo + self.lo * other.hi;
        quick_two_sum(p.hi, lo)
    }

    pub fn div(self, other: Dd) -> Dd {
        let q1 = self.hi / other.hi;
        let r = self.sub(other.mul(Dd::from(q1)));
        let q2 = r.hi / other.hi;
        let r2 = r.sub(other.mul(Dd::from(q2)));
        let q3 = r2.hi / other.hi;
        quick_two_sum(q1, q2).add(Dd::from(q3))
    }

    pub fn sqrt(self) -> Dd {
        if self.hi == 0.0 {
            return Dd::from(0.0);
        }
        let s0 = crate::math::sqrt(self.hi);
        // One Newton refinement: s = s0 + (x - s0^2) / (2 s0).
        let s0dd = Dd::from(s0);
        let diff = self.sub(s0dd.mul(s0dd));
        let corr = diff.hi / (2.0 * s0);
        quick_two_sum(s0, corr)
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            Dd { hi: -self.hi, lo: -self.lo }
        } else {
            self
        }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mul_and_sqrt_roundtrip() {
        let x = Dd::from(2.0).sqrt();
        let two = x.mul(x);
        assert!((two.to_f64() - 2.0).abs() < 1e-30);
        assert!(two.sub(Dd::from(2.0)).to_f64().abs() < 1e-30);
    }

    #[test]
    fn division() {
        let x = Dd::from(1.0).div(Dd::from(3.0));
        let back = x.mul(Dd::from(3.0)).sub(Dd::from(1.0));
        assert!(back.to_f64().abs() < 1e-30);
    }
}
