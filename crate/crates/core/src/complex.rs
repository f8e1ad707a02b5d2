//! Minimal complex arithmetic generic over the scalar backend.

use crate::real::Real;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Complex value with finite components; the container for every amplitude
/// and kernel value in the crate.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Complex<R> {
    pub re: R,
    pub im: R,
}

/// Shorthand for the native-precision complex type used by the asymptotics.
pub type C64 = Complex<f64>;

impl<R: Real> Complex<R> {
    #[inline]
    pub fn new(re: R, im: R) -> Self {
        Complex { re, im }
    }

    #[inline]
    pub fn real(re: R) -> Self {
        Complex {
            re,
            im: R::zero(),
        }
    }

    #[inline]
    pub fn zero() -> Self {
        Complex {
            re: R::zero(),
            im: R::zero(),
        }
    }

    #[inline]
    pub fn one() -> Self {
        Complex {
            re: R::one(),
            im: R::zero(),
        }
    }

    #[inline]
    pub fn i() -> Self {
        Complex {
            re: R::zero(),
            im: R::one(),
        }
    }

    #[inline]
    pub fn from_f64(re: f64, im: f64) -> Self {
        Complex {
            re: R::from_f64(re),
            im: R::from_f64(im),
        }
    }

    #[inline]
    pub fn conj(self) -> Self {
        Complex {
            re: self.re,
            im: -self.im,
        }
    }

    #[inline]
    pub fn scale(self, s: R) -> Self {
        Complex {
            re: self.re * s,
            im: self.im * s,
        }
    }

    /// Multiplication by `i`.
    #[inline]
    pub fn mul_i(self) -> Self {
        Complex {
            re: -self.im,
            im: self.re,
        }
    }

    #[inline]
    pub fn norm_sqr(self) -> R {
        self.re * self.re + self.im * self.im
    }

    /// Modulus, scaled to avoid overflow of the intermediate squares.
    pub fn abs(self) -> R {
        let ar = self.re.abs();
        let ai = self.im.abs();
        let (big, small) = if ar >= ai { (ar, ai) } else { (ai, ar) };
        if big == R::zero() {
            return R::zero();
        }
        let r = small / big;
        big * (R::one() + r * r).sqrt()
    }

    #[inline]
    pub fn arg(self) -> R {
        self.im.atan2(self.re)
    }

    pub fn exp(self) -> Self {
        let m = self.re.exp();
        let (s, c) = self.im.sin_cos();
        Complex {
            re: m * c,
            im: m * s,
        }
    }

    /// Principal branch logarithm (cut along the negative real axis).
    pub fn ln(self) -> Self {
        Complex {
            re: self.abs().ln(),
            im: self.arg(),
        }
    }

    pub fn recip(self) -> Self {
        // scaled division avoiding overflow of |z|^2
        let ar = self.re.abs();
        let ai = self.im.abs();
        if ar >= ai {
            let r = self.im / self.re;
            let d = self.re + self.im * r;
            Complex {
                re: R::one() / d,
                im: -r / d,
            }
        } else {
            let r = self.re / self.im;
            let d = self.re * r + self.im;
            Complex {
                re: r / d,
                im: -(R::one()) / d,
            }
        }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn to_c64(self) -> C64 {
        Complex {
            re: self.re.to_f64(),
            im: self.im.to_f64(),
        }
    }
}

impl<R: Real> Serialize for Complex<R> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("Complex", 2)?;
        st.serialize_field("re", &self.re.to_f64())?;
        st.serialize_field("im", &self.im.to_f64())?;
        st.end()
    }
}

/// exp(i x) for a real phase.
#[inline]
pub fn cis<R: Real>(x: R) -> Complex<R> {
    let (s, c) = x.sin_cos();
    Complex { re: c, im: s }
}

impl<R: Real> Add for Complex<R> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Complex {
            re: self.re + o.re,
            im: self.im + o.im,
        }
    }
}

impl<R: Real> Sub for Complex<R> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Complex {
            re: self.re - o.re,
            im: self.im - o.im,
        }
    }
}

impl<R: Real> Neg for Complex<R> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Complex {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl<R: Real> Mul for Complex<R> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Complex {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }
}

impl<R: Real> Div for Complex<R> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl<R: Real> Mul<R> for Complex<R> {
    type Output = Self;
    #[inline]
    fn mul(self, s: R) -> Self {
        self.scale(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_ops() {
        let a = C64::new(3.0, -4.0);
        let b = C64::new(-1.0, 2.0);
        let q = a / b;
        let back = q * b;
        assert!((back - a).abs() < 1e-14);
        assert!((a.abs() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn ln_exp_principal() {
        let z = C64::new(-2.0, 1.0);
        let w = z.ln().exp();
        assert!((w - z).abs() < 1e-14);
        let neg = C64::new(-1.0, 0.0);
        assert!((neg.ln().im - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn abs_avoids_overflow() {
        let z = C64::new(1e200, 1e200);
        assert!(z.abs().is_finite());
    }
}
