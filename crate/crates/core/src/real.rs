//! Scalar abstraction over the two arithmetic backends: native `f64` and the
//! double-double type [`Dd`] used for extended-precision solver runs.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Floating-point scalar usable by the kernels, special functions and solver.
///
/// Implementations must be value types with deterministic arithmetic; all
/// higher-level code is generic over this trait.
pub trait Real:
    Copy
    + Clone
    + PartialEq
    + PartialOrd
    + fmt::Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn zero() -> Self;
    fn one() -> Self;
    /// Machine epsilon of the backend (unit roundoff scale).
    fn eps() -> f64;
    /// Decimal digits the backend can carry.
    fn digits() -> u32;

    fn pi() -> Self;
    fn tau() -> Self;
    fn frac_pi_2() -> Self;
    fn ln_2() -> Self;
    fn euler_gamma() -> Self;

    fn abs(self) -> Self;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sin_cos(self) -> (Self, Self);
    fn atan2(self, other: Self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn floor(self) -> Self;
    fn round(self) -> Self;
    fn is_finite(self) -> bool;

    /// Full-precision decimal rendering (round-trip for f64, 33 significant
    /// digits for double-double).
    fn format_full(self) -> String;
}

impl Real for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn zero() -> Self {
        0.0
    }
    #[inline]
    fn one() -> Self {
        1.0
    }
    #[inline]
    fn eps() -> f64 {
        f64::EPSILON
    }
    #[inline]
    fn digits() -> u32 {
        16
    }
    #[inline]
    fn pi() -> Self {
        std::f64::consts::PI
    }
    #[inline]
    fn tau() -> Self {
        std::f64::consts::TAU
    }
    #[inline]
    fn frac_pi_2() -> Self {
        std::f64::consts::FRAC_PI_2
    }
    #[inline]
    fn ln_2() -> Self {
        std::f64::consts::LN_2
    }
    #[inline]
    fn euler_gamma() -> Self {
        0.577_215_664_901_532_9
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn sin_cos(self) -> (Self, Self) {
        f64::sin_cos(self)
    }
    #[inline]
    fn atan2(self, other: Self) -> Self {
        f64::atan2(self, other)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    #[inline]
    fn floor(self) -> Self {
        f64::floor(self)
    }
    #[inline]
    fn round(self) -> Self {
        f64::round(self)
    }
    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn format_full(self) -> String {
        format!("{self}")
    }
}

/// Unevaluated sum of two doubles, `hi + lo` with `|lo| <= ulp(hi)/2`.
///
/// Carries roughly 31 significant decimal digits. Arithmetic follows the
/// classic error-free transformations (Dekker/Knuth); transcendentals use
/// argument reduction plus Taylor series, all branch-free of tables.
#[derive(Copy, Clone, Debug, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

// Dekker split, valid for |a| < 2^996.
#[inline]
fn split(a: f64) -> (f64, f64) {
    let t = 134_217_729.0 * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    let err = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    (p, err)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    pub const PI: Dd = Dd {
        hi: 3.141592653589793,
        lo: 1.2246467991473532e-16,
    };
    pub const TAU: Dd = Dd {
        hi: 6.283185307179586,
        lo: 2.4492935982947064e-16,
    };
    pub const FRAC_PI_2: Dd = Dd {
        hi: 1.5707963267948966,
        lo: 6.123233995736766e-17,
    };
    pub const LN_2: Dd = Dd {
        hi: 0.6931471805599453,
        lo: 2.3190468138462996e-17,
    };
    pub const EULER_GAMMA: Dd = Dd {
        hi: 0.5772156649015329,
        lo: -4.942915152430645e-18,
    };

    #[inline]
    pub fn new(hi: f64, lo: f64) -> Dd {
        let (s, e) = quick_two_sum(hi, lo);
        Dd { hi: s, lo: e }
    }

    #[inline]
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Dd {
        let (p1, p2) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p1, p2 + self.lo * b);
        Dd { hi, lo }
    }

    pub fn recip(self) -> Dd {
        Dd::ONE / self
    }

    /// Nearest-integer part, exact.
    pub fn round_int(self) -> Dd {
        let r = self.hi.round();
        if (r - self.hi).abs() == 0.5 {
            // hi is a midpoint; lo decides the direction
            let r2 = if self.lo > 0.0 {
                self.hi.ceil()
            } else if self.lo < 0.0 {
                self.hi.floor()
            } else {
                r
            };
            Dd::from_f64(r2)
        } else if r == self.hi {
            Dd::new(r, self.lo.round())
        } else {
            Dd::from_f64(r)
        }
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

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
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

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, b.hi);
        let p2 = p2 + self.hi * b.lo + self.lo * b.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    #[inline]
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }
}

impl PartialEq for Dd {
    fn eq(&self, other: &Dd) -> bool {
        self.hi == other.hi && self.lo == other.lo
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Dd) -> Option<std::cmp::Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(std::cmp::Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

impl Real for Dd {
    #[inline]
    fn from_f64(x: f64) -> Self {
        Dd::from_f64(x)
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
    #[inline]
    fn zero() -> Self {
        Dd::ZERO
    }
    #[inline]
    fn one() -> Self {
        Dd::ONE
    }
    #[inline]
    fn eps() -> f64 {
        4.93e-32 // 2^-104
    }
    #[inline]
    fn digits() -> u32 {
        31
    }
    #[inline]
    fn pi() -> Self {
        Dd::PI
    }
    #[inline]
    fn tau() -> Self {
        Dd::TAU
    }
    #[inline]
    fn frac_pi_2() -> Self {
        Dd::FRAC_PI_2
    }
    #[inline]
    fn ln_2() -> Self {
        Dd::LN_2
    }
    #[inline]
    fn euler_gamma() -> Self {
        Dd::EULER_GAMMA
    }

    #[inline]
    fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    fn sqrt(self) -> Self {
        if self.hi == 0.0 && self.lo == 0.0 {
            return Dd::ZERO;
        }
        // Karp's method: one f64 seed plus a single double-double correction.
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let axd = Dd::from_f64(ax);
        let err = self - axd * axd;
        axd + Dd::from_f64(err.hi * (x * 0.5))
    }

    fn exp(self) -> Self {
        // exp(x) = 2^n * (e^r)^512 with r = (x - n ln2)/512, |r| small.
        if self.hi > 709.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        if self.hi < -709.0 {
            return Dd::ZERO;
        }
        let n = (self.hi / std::f64::consts::LN_2).round();
        let r = (self - Dd::LN_2.mul_f64(n)).mul_f64(1.0 / 512.0);
        // expm1(r) by Taylor; |r| <= ln2/1024 + slack
        let mut term = r;
        let mut sum = r;
        let mut k = 2.0;
        loop {
            term = term * r / Dd::from_f64(k);
            sum = sum + term;
            if term.hi.abs() < 1e-37 * sum.hi.abs() || k > 24.0 {
                break;
            }
            k += 1.0;
        }
        // undo the /512 reduction: e^{2r}-1 = (e^r-1)^2 + 2(e^r-1)
        let mut p = sum;
        for _ in 0..9 {
            p = p * p + p.mul_f64(2.0);
        }
        let e = p + Dd::ONE;
        let scale = f64::powi(2.0, n as i32);
        Dd {
            hi: e.hi * scale,
            lo: e.lo * scale,
        }
    }

    fn ln(self) -> Self {
        // Newton iteration on exp(y) = x from an f64 seed.
        let mut y = Dd::from_f64(self.hi.ln());
        for _ in 0..2 {
            y = y + self * (-y).exp() - Dd::ONE;
        }
        y
    }

    fn sin(self) -> Self {
        self.sin_cos().0
    }

    fn cos(self) -> Self {
        self.sin_cos().1
    }

    fn sin_cos(self) -> (Self, Self) {
        // Reduce modulo pi/2; accuracy degrades gracefully for |x| >> 1e12.
        let q = (self.hi / std::f64::consts::FRAC_PI_2).round();
        let r = self - Dd::FRAC_PI_2 * Dd::from_f64(q);
        let quadrant = ((q % 4.0) + 4.0) % 4.0;
        let (s, c) = sin_cos_taylor(r);
        match quadrant as i32 {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }

    fn atan2(self, other: Self) -> Self {
        let y = self;
        let x = other;
        if x.hi == 0.0 && x.lo == 0.0 && y.hi == 0.0 && y.lo == 0.0 {
            return Dd::ZERO;
        }
        // f64 seed plus two Newton corrections on the residual rotation.
        let mut z = Dd::from_f64(y.hi.atan2(x.hi));
        for _ in 0..2 {
            let (s, c) = z.sin_cos();
            let num = y * c - x * s;
            let den = x * c + y * s;
            if den.hi == 0.0 {
                break;
            }
            z = z + num / den;
        }
        z
    }

    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Dd::ONE;
        }
        let mut base = if n < 0 { self.recip() } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = Dd::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    fn floor(self) -> Self {
        let f = self.hi.floor();
        if f == self.hi {
            Dd::new(f, self.lo.floor())
        } else {
            Dd::from_f64(f)
        }
    }

    fn round(self) -> Self {
        self.round_int()
    }

    #[inline]
    fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    fn format_full(self) -> String {
        format_dd(self, 33)
    }
}

fn sin_cos_taylor(r: Dd) -> (Dd, Dd) {
    // |r| <= pi/4 + rounding slack; divisors are exact small integers
    let r2 = r * r;
    let mut s = r;
    let mut term = r;
    let mut k = 1.0;
    loop {
        term = term * r2 / Dd::from_f64(-((k + 1.0) * (k + 2.0)));
        s = s + term;
        k += 2.0;
        if term.hi.abs() < 1e-37 || k > 40.0 {
            break;
        }
    }
    let mut c = Dd::ONE;
    let mut term = Dd::ONE;
    let mut k = 0.0;
    loop {
        term = term * r2 / Dd::from_f64(-((k + 1.0) * (k + 2.0)));
        c = c + term;
        k += 2.0;
        if term.hi.abs() < 1e-37 || k > 40.0 {
            break;
        }
    }
    (s, c)
}

fn format_dd(x: Dd, sig: usize) -> String {
    if !x.is_finite() {
        return format!("{}", x.hi);
    }
    if x.hi == 0.0 && x.lo == 0.0 {
        return "0".to_string();
    }
    let neg = x.hi < 0.0;
    let mut a = x.abs();
    let mut e10 = a.hi.abs().log10().floor() as i32;
    // normalize into [1, 10)
    let ten = Dd::from_f64(10.0);
    a = a / ten.powi(e10);
    if a.hi >= 10.0 {
        a = a / ten;
        e10 += 1;
    } else if a.hi < 1.0 {
        a = a * ten;
        e10 -= 1;
    }
    let mut digits = Vec::with_capacity(sig);
    for _ in 0..sig {
        let d = a.hi.floor();
        digits.push(d as i32);
        a = (a - Dd::from_f64(d)) * ten;
    }
    // carry-correct any 10/-1 artifacts from the last extraction steps
    for i in (1..digits.len()).rev() {
        if digits[i] >= 10 {
            digits[i] -= 10;
            digits[i - 1] += 1;
        } else if digits[i] < 0 {
            digits[i] += 10;
            digits[i - 1] -= 1;
        }
    }
    if digits[0] >= 10 {
        digits.insert(0, 1);
        digits[1] -= 10;
        digits.pop();
        e10 += 1;
    }
    let mantissa: String = digits
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let c = char::from_digit(*d as u32, 10).unwrap_or('0');
            if i == 0 {
                format!("{c}.")
            } else {
                c.to_string()
            }
        })
        .collect();
    format!("{}{}e{}", if neg { "-" } else { "" }, mantissa, e10)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dd(hi: f64, lo: f64) -> Dd {
        Dd::new(hi, lo)
    }

    #[test]
    fn add_mul_div_roundtrip() {
        let a = dd(1.0, 1e-20);
        let b = dd(3.0, -2e-19);
        let c = a / b * b;
        assert!((c - a).abs().to_f64() < 1e-30);
    }

    #[test]
    fn sqrt_squares_back() {
        let x = Dd::from_f64(2.0).sqrt();
        let err = (x * x - Dd::from_f64(2.0)).abs();
        assert!(err.to_f64() < 1e-30);
    }

    #[test]
    fn exp_ln_inverse() {
        let x = dd(1.2345678901234567, 0.0);
        let y = x.exp().ln();
        assert!((y - x).abs().to_f64() < 1e-29);
        // e^1 against a frozen 40-digit reference
        let e1 = Dd::ONE.exp();
        let reference = dd(2.718281828459045, 1.4456468917292502e-16);
        assert!((e1 - reference).abs().to_f64() < 1e-30);
    }

    #[test]
    fn sin_cos_identities() {
        for &x in &[0.1, 1.0, 3.0, 10.0, 100.0, 12345.6789] {
            let v = Dd::from_f64(x);
            let (s, c) = v.sin_cos();
            let one = s * s + c * c;
            assert!((one - Dd::ONE).abs().to_f64() < 1e-29, "x={x}");
        }
        let s = Dd::PI.sin();
        assert!(s.abs().to_f64() < 1e-31);
    }

    #[test]
    fn atan2_matches_f64_and_refines() {
        let y = Dd::from_f64(1.0);
        let x = Dd::from_f64(1.0);
        let z = y.atan2(x);
        let quarter_pi = Dd::PI.mul_f64(0.25);
        assert!((z - quarter_pi).abs().to_f64() < 1e-30);
    }

    #[test]
    fn format_full_prints_33_digits() {
        let third = Dd::ONE / Dd::from_f64(3.0);
        let s = third.format_full();
        assert!(s.starts_with("3.33333333333333333333333333333"), "{s}");
        assert!(s.ends_with("e-1"), "{s}");
    }

    #[test]
    fn rounding_helpers() {
        assert_eq!(dd(2.5, 1e-20).round_int().to_f64(), 3.0);
        assert_eq!(dd(2.5, -1e-20).round_int().to_f64(), 2.0);
        assert_eq!(dd(7.0, -1e-20).floor().to_f64(), 6.0);
    }
}
