//! Sine/cosine integrals and the complex exponential integral.
//!
//! Small arguments use Taylor series; large arguments route through the
//! continued fraction for E1, which also serves the complex plane. Both
//! paths are generic over the scalar backend so the extended-precision
//! solver reuses them unchanged.

use crate::complex::Complex;
use crate::error::{Error, Result};
use crate::real::Real;

/// Crossover between the Taylor series and the E1-based evaluation of Si/Ci.
const TAYLOR_MAX: f64 = 9.0;

/// Euler's constant at the backend's precision.
#[inline]
pub fn euler_gamma<R: Real>() -> R {
    R::euler_gamma()
}

/// Si(x) = ∫₀ˣ sin t / t dt. Entire and odd.
pub fn sin_integral<R: Real>(x: R) -> Result<R> {
    if !x.is_finite() {
        return Err(Error::InvalidDomain("sin_integral: non-finite argument".into()));
    }
    let ax = x.abs();
    let v = if ax.to_f64() <= TAYLOR_MAX {
        si_series(ax)
    } else {
        // Si(x) = pi/2 + Im E1(ix) for x > 0
        let e1 = e1_continued_fraction(Complex::new(R::zero(), ax))?;
        R::frac_pi_2() + e1.im
    };
    Ok(if x < R::zero() { -v } else { v })
}

/// Ci(x) = γ + ln x + ∫₀ˣ (cos t − 1)/t dt for x > 0.
pub fn cos_integral<R: Real>(x: R) -> Result<R> {
    if !x.is_finite() || x <= R::zero() {
        return Err(Error::InvalidDomain(format!(
            "cos_integral: argument must be positive and finite, got {:?}",
            x.to_f64()
        )));
    }
    if x.to_f64() <= TAYLOR_MAX {
        Ok(R::euler_gamma() + x.ln() - cin_series(x))
    } else {
        let e1 = e1_continued_fraction(Complex::new(R::zero(), x))?;
        Ok(-e1.re)
    }
}

/// Cin(x) = ∫₀ˣ (1 − cos t)/t dt = γ + ln x − Ci(x); stable near x = 0.
pub fn cin<R: Real>(x: R) -> Result<R> {
    if !x.is_finite() || x < R::zero() {
        return Err(Error::InvalidDomain("cin: argument must be >= 0".into()));
    }
    if x.to_f64() <= TAYLOR_MAX {
        Ok(cin_series(x))
    } else {
        Ok(R::euler_gamma() + x.ln() - cos_integral(x)?)
    }
}

/// E1(z) on the principal branch. Errors on z = 0 and on the cut
/// (negative real axis).
pub fn exp_integral_e1<R: Real>(z: Complex<R>) -> Result<Complex<R>> {
    if !z.is_finite() {
        return Err(Error::InvalidDomain("exp_integral_e1: non-finite argument".into()));
    }
    if z.im == R::zero() && z.re <= R::zero() {
        return Err(Error::BranchPoint(
            "exp_integral_e1: argument on the negative real axis".into(),
        ));
    }
    let r = z.abs().to_f64();
    // The power series is cheap and cancellation-safe up to |z| ~ 4; keep it
    // a bit longer in the left half plane where the fraction converges slowly.
    if r <= 4.0 || (z.re.to_f64() < 0.0 && r <= 12.0) {
        e1_series(z)
    } else {
        e1_continued_fraction(z)
    }
}

fn si_series<R: Real>(x: R) -> R {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 0.0f64;
    loop {
        let num = -(2.0 * k + 1.0);
        let den = (2.0 * k + 3.0) * (2.0 * k + 3.0) * (2.0 * k + 2.0);
        term = term * x2 * R::from_f64(num) / R::from_f64(den);
        sum = sum + term;
        k += 1.0;
        if term.abs().to_f64() <= R::eps() * sum.abs().to_f64().max(1e-300) || k > 200.0 {
            return sum;
        }
    }
}

fn cin_series<R: Real>(x: R) -> R {
    let x2 = x * x;
    let mut term = x2 * R::from_f64(0.25);
    let mut sum = term;
    let mut k = 1.0f64;
    loop {
        let num = -(2.0 * k);
        let den = (2.0 * k + 2.0) * (2.0 * k + 2.0) * (2.0 * k + 1.0);
        term = term * x2 * R::from_f64(num) / R::from_f64(den);
        sum = sum + term;
        k += 1.0;
        if term.abs().to_f64() <= R::eps() * sum.abs().to_f64().max(1e-300) || k > 200.0 {
            return sum;
        }
    }
}

fn e1_series<R: Real>(z: Complex<R>) -> Result<Complex<R>> {
    let mut term = z;
    let mut sum = z;
    let mut k = 1.0f64;
    loop {
        k += 1.0;
        // term_k = (-1)^{k+1} z^k / (k * k!) via the ratio -z (k-1)/k^2
        term = term * z * (R::from_f64(-(k - 1.0)) / R::from_f64(k * k));
        sum = sum + term;
        if term.abs().to_f64() <= R::eps() * sum.abs().to_f64().max(1e-300) {
            break;
        }
        if k > 500.0 {
            return Err(Error::NonConvergence("e1_series: did not converge".into()));
        }
    }
    let g = Complex::real(R::euler_gamma());
    Ok(sum - g - z.ln())
}

fn e1_continued_fraction<R: Real>(z: Complex<R>) -> Result<Complex<R>> {
    // Modified Lentz on E1(z) = e^{-z} / (z+1 - 1/(z+3 - 4/(z+5 - ...)))
    let tiny = R::from_f64(1e-290);
    let one = Complex::<R>::one();
    let mut b = z + Complex::one();
    let mut c = Complex::real(R::one() / tiny);
    let mut d = b.recip();
    let mut h = d;
    let eps = R::eps() * 4.0;
    for i in 1..40_000u64 {
        let a = Complex::real(R::from_f64(-((i * i) as f64)));
        b = b + Complex::from_f64(2.0, 0.0);
        let mut den = a * d + b;
        if den.abs() == R::zero() {
            den = Complex::real(tiny);
        }
        d = den.recip();
        let mut cn = b + a * c.recip();
        if cn.abs() == R::zero() {
            cn = Complex::real(tiny);
        }
        c = cn;
        let delta = c * d;
        h = h * delta;
        if (delta - one).abs().to_f64() < eps {
            return Ok((-z).exp() * h);
        }
    }
    Err(Error::NonConvergence(format!(
        "e1_continued_fraction: no convergence at z = {:?}+{:?}i",
        z.re.to_f64(),
        z.im.to_f64()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::C64;
    use crate::real::Dd;

    #[test]
    fn si_frozen_values() {
        assert_eq!(sin_integral(0.0).unwrap(), 0.0);
        assert!((sin_integral(1.0).unwrap() - 0.9460830703671830).abs() < 1e-15);
        assert!((sin_integral(10.0).unwrap() - 1.6583475942188740).abs() < 1e-14);
    }

    #[test]
    fn si_odd_and_limit() {
        for &x in &[0.3, 2.0, 7.5, 40.0, 1234.5] {
            let p = sin_integral(x).unwrap();
            let m = sin_integral(-x).unwrap();
            assert_eq!(p, -m);
        }
        let tail = (sin_integral(1e6).unwrap() - std::f64::consts::FRAC_PI_2).abs();
        assert!(tail < 2e-6, "tail={tail}");
    }

    #[test]
    fn ci_frozen_and_small_argument() {
        assert!((cos_integral(1.0).unwrap() - 0.3374039229009681).abs() < 1e-15);
        assert!(cos_integral(0.0).is_err());
        assert!(cos_integral(-2.0).is_err());
        // Ci(x) ~ gamma + ln x for tiny x
        let x = 1e-9;
        let v = cos_integral(x).unwrap();
        assert!((v - (euler_gamma::<f64>() + x.ln())).abs() < 1e-15);
        // log cancellation: Ci(999e-10) - Ci(1e-10) = ln 999
        let d = cos_integral(999e-10).unwrap() - cos_integral(1e-10).unwrap();
        assert!((d - 6.9067547786485539).abs() < 1e-12, "d={d}");
    }

    #[test]
    fn derivative_checks() {
        // central differences of Si and Ci against their integrands
        for &x in &[0.5f64, 2.0, 5.0, 9.0, 31.0] {
            let h = 1e-5 * x.max(1.0);
            let dsi = (sin_integral(x + h).unwrap() - sin_integral(x - h).unwrap()) / (2.0 * h);
            assert!((dsi - x.sin() / x).abs() <= 1e-6 * (x.sin() / x).abs().max(1e-3));
            let dci = (cos_integral(x + h).unwrap() - cos_integral(x - h).unwrap()) / (2.0 * h);
            assert!((dci - x.cos() / x).abs() <= 1e-6 * (x.cos() / x).abs().max(1e-3));
        }
    }

    #[test]
    fn taylor_cf_crossover_is_continuous() {
        let below = sin_integral(TAYLOR_MAX - 1e-12).unwrap();
        let above = sin_integral(TAYLOR_MAX + 1e-12).unwrap();
        assert!((below - above).abs() < 5e-13, "Si jump {below} vs {above}");
        assert!((below - 1.6650400758296025).abs() < 1e-12);
        let below = cos_integral(TAYLOR_MAX - 1e-12).unwrap();
        let above = cos_integral(TAYLOR_MAX + 1e-12).unwrap();
        assert!((below - above).abs() < 5e-13, "Ci jump {below} vs {above}");
        assert!((below - 0.05534753133313361).abs() < 1e-12);
    }

    #[test]
    fn e1_frozen_and_errors() {
        let v = exp_integral_e1(C64::new(1.0, 0.0)).unwrap();
        assert!((v.re - 0.2193839343955203).abs() < 1e-15);
        assert!(v.im.abs() < 1e-18);
        assert!(exp_integral_e1(C64::new(0.0, 0.0)).is_err());
        assert!(exp_integral_e1(C64::new(-3.0, 0.0)).is_err());
    }

    #[test]
    fn e1_complex_reference_values() {
        // frozen from a 40-digit independent evaluation
        let cases = [
            (C64::new(0.5, 2.0), C64::new(-0.23812693789267187, -0.025877115590053965)),
            (C64::new(-3.0, 4.0), C64::new(4.15409165164269, 1.1528259664345642)),
            (C64::new(0.0, 30.0), C64::new(0.033032417282071144, -0.004039786764545508)),
            (C64::new(-20.0, -200.0), C64::new(1988206.7909749472, 1370673.9516738732)),
        ];
        for (z, want) in cases {
            let got = exp_integral_e1(z).unwrap();
            let rel = (got - want).abs() / want.abs();
            assert!(rel < 1e-13, "z={z:?} got={got:?} rel={rel}");
        }
    }

    #[test]
    fn e1_asymptotic_regime() {
        // |z| >= 50: matches e^{-z}/z (1 - 1/z) to 1e-3 relative
        for z in [C64::new(60.0, 10.0), C64::new(-30.0, 45.0), C64::new(3.0, -55.0)] {
            let v = exp_integral_e1(z).unwrap();
            let asym = (-z).exp() / z * (C64::one() - z.recip());
            assert!((v - asym).abs() / v.abs() < 1e-3);
        }
    }

    #[test]
    fn e1_schwarz_reflection() {
        for z in [C64::new(2.0, 3.0), C64::new(-4.0, 7.0), C64::new(9.0, -2.0)] {
            let a = exp_integral_e1(z.conj()).unwrap();
            let b = exp_integral_e1(z).unwrap().conj();
            assert!((a - b).abs() / b.abs() < 1e-13);
        }
    }

    #[test]
    fn e1_real_positive_monotone() {
        let mut prev = f64::INFINITY;
        for i in 1..60 {
            let x = 0.2 * i as f64;
            let v = exp_integral_e1(C64::new(x, 0.0)).unwrap().re;
            assert!(v > 0.0 && v < prev, "x={x} v={v} prev={prev}");
            prev = v;
        }
    }

    #[test]
    fn gamma_constants() {
        let g: f64 = euler_gamma();
        assert!((g - 0.5772156649015329).abs() < 1e-16);
        assert!(((g * 1e6).round() / 1e6 - 0.577216).abs() < 1e-12);
        assert!((g.exp() - 1.7810724179901980).abs() < 1e-15);
    }

    #[test]
    fn dd_backend_agrees_with_f64() {
        for &x in &[0.7, 3.0, 5.9, 6.1, 25.0, 400.0] {
            let a = sin_integral(Dd::from_f64(x)).unwrap().to_f64();
            let b = sin_integral(x).unwrap();
            assert!((a - b).abs() <= 4e-15 * b.abs().max(1.0), "x={x}");
            let a = cos_integral(Dd::from_f64(x)).unwrap().to_f64();
            let b = cos_integral(x).unwrap();
            assert!((a - b).abs() <= 4e-15 * b.abs().max(1.0), "x={x}");
        }
        // 31-digit reference: Si(1) computed independently
        let si1 = sin_integral(Dd::from_f64(1.0)).unwrap();
        let reference = Dd::new(0.946083070367183, 3.8273689561954647e-17);
        assert!((si1 - reference).abs().to_f64() < 1e-28);
    }
}
