//! The regularized memory kernels, their regime approximations, and the
//! exact interval moments the product-integration solver consumes.
//!
//! Dimensionless convention throughout: the decay rate is 1, time is
//! `tau = Gamma0 t`. The two kernel edge frequencies are
//! `A = b_tilde` and `B = lambda_c - b_tilde = (lambda_tilde - 1) b_tilde`.

use crate::complex::{cis, Complex, C64};
use crate::error::{Error, Result};
use crate::params::{Params, ParamsLifted};
use crate::real::Real;
use crate::special::{cin, sin_integral};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Selector for kernel evaluation: the two exact regularized kernels, the
/// closed-form regime approximations, and the differential kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelKind {
    Kappa0Reg,
    Kappa1Reg,
    Kappa0Small,
    Kappa0Intermediate,
    Kappa0Large,
    Kappa1Large,
    K0Differential,
    K1Differential,
}

/// Below `arg = max(A,B)·u` of this size, kernel values and moments switch
/// to their Taylor branches.
const SERIES_ARG_MAX: f64 = 0.5;
/// Threshold for the removable singularity of the n = 1 correction term.
const CORRECTION_SERIES_ARG: f64 = 1e-3;

/// cos(x) - 1 without cancellation.
#[inline]
fn cos_m1<R: Real>(x: R) -> R {
    let s = (x * R::from_f64(0.5)).sin();
    R::from_f64(-2.0) * s * s
}

/// Ci(B u) - Ci(A u), stable down to u = 0 where it limits to ln(B/A).
fn ci_diff<R: Real>(a: R, b: R, u: R) -> Result<R> {
    Ok((b / a).ln() + cin(a * u)? - cin(b * u)?)
}

/// Exact regularized kernel for the n = 0 subtraction scheme.
///
/// At `tau = 0` this is the analytic limit `-i ln(lambda_tilde - 1)/2pi`.
pub fn kappa0_reg<R: Real>(tau: R, p: &ParamsLifted<R>) -> Result<Complex<R>> {
    if tau < R::zero() {
        return Err(Error::InvalidDomain("kappa0_reg: tau must be >= 0".into()));
    }
    let (a, b) = (p.freq_slow, p.freq_fast);
    let inv_2pi = R::one() / R::tau();
    let re = -inv_2pi * (sin_integral(b * tau)? + sin_integral(a * tau)?);
    let im = -inv_2pi * ci_diff(a, b, tau)?;
    Ok(Complex::new(re, im))
}

/// Correction term `(e^{-iBu} - e^{iAu}) / (2 pi A u)` with its removable
/// singularity at u = 0 replaced by the series value `-i lambda_tilde/2pi`.
pub fn kappa1_correction<R: Real>(tau: R, p: &ParamsLifted<R>) -> Complex<R> {
    let (a, b) = (p.freq_slow, p.freq_fast);
    let arg = (a * tau).abs().to_f64().max((b * tau).abs().to_f64());
    if arg < CORRECTION_SERIES_ARG {
        correction_series(tau, p)
    } else {
        correction_closed(tau, p)
    }
}

pub(crate) fn correction_series<R: Real>(tau: R, p: &ParamsLifted<R>) -> Complex<R> {
    let (a, b) = (p.freq_slow, p.freq_fast);
    let inv_2pi_a = R::one() / (R::tau() * a);
    // sum_{k>=1} [(-iB)^k - (iA)^k] u^{k-1} / (2 pi A k!)
    let mut sum = Complex::<R>::zero();
    let mut pow_b = Complex::new(R::zero(), -b); // (-iB)^k
    let mut pow_a = Complex::new(R::zero(), a); // (iA)^k
    let mut u_pow = R::one();
    let mut fact = 1.0f64;
    for k in 1..=10u32 {
        sum = sum + (pow_b - pow_a).scale(u_pow / R::from_f64(fact));
        pow_b = pow_b * Complex::new(R::zero(), -b);
        pow_a = pow_a * Complex::new(R::zero(), a);
        u_pow = u_pow * tau;
        fact *= (k + 1) as f64;
    }
    sum.scale(inv_2pi_a)
}

pub(crate) fn correction_closed<R: Real>(tau: R, p: &ParamsLifted<R>) -> Complex<R> {
    let (a, b) = (p.freq_slow, p.freq_fast);
    let inv_2pi_a = R::one() / (R::tau() * a);
    let eb = cis(-(b * tau));
    let ea = cis(a * tau);
    (eb - ea).scale(inv_2pi_a / tau)
}

/// Exact regularized kernel for the n = 1 (mass-renormalized) scheme.
pub fn kappa1_reg<R: Real>(tau: R, p: &ParamsLifted<R>) -> Result<Complex<R>> {
    Ok(kappa0_reg(tau, p)? + kappa1_correction(tau, p))
}

/// Pre-renormalization n = 1 kernel written with `b_prime`; diagnostic only,
/// the solver pipeline always applies the mass counter-term.
pub fn kappa1_pre_renormalization(tau: f64, p: &Params) -> Result<C64> {
    if p.b_prime <= 0.0 {
        return Err(Error::InvalidDomain(format!(
            "pre-renormalization kernel needs b_prime > 0, got {}",
            p.b_prime
        )));
    }
    let a = p.b_prime;
    let b = (p.lambda - 1.0) * p.b_prime;
    let inv_2pi = 1.0 / TAU;
    let re = -inv_2pi * (sin_integral(b * tau)? + sin_integral(a * tau)?);
    let im = -inv_2pi * ci_diff(a, b, tau)?;
    let lifted = ParamsLifted::<f64> {
        b_a: p.b_a,
        lambda: p.lambda,
        b_tilde: a,
        lambda_tilde: p.lambda,
        lambda_c: p.lambda * a,
        freq_slow: a,
        freq_fast: b,
    };
    Ok(Complex::new(re, im) + kappa1_correction(tau, &lifted))
}

/// Closed-form regime approximations. The exact kernels have dedicated
/// entry points and are rejected here.
pub fn kernel_regime(kind: KernelKind, tau: f64, p: &Params) -> Result<C64> {
    let lp = p.lift::<f64>();
    match kind {
        KernelKind::Kappa0Small => Ok(C64::new(
            -p.lambda * lp.b_tilde * tau / TAU,
            -(p.lambda - 1.0).ln() / TAU,
        )),
        KernelKind::Kappa0Intermediate => {
            if tau <= 0.0 {
                return Err(Error::InvalidDomain("intermediate kernel needs tau > 0".into()));
            }
            Ok(C64::new(
                -0.25,
                (f64::euler_gamma() + (lp.b_tilde * tau).ln()) / TAU,
            ))
        }
        KernelKind::Kappa0Large => {
            if tau <= 0.0 {
                return Err(Error::InvalidDomain("large-time kernel needs tau > 0".into()));
            }
            let x = lp.b_tilde * tau;
            Ok(C64::new(-0.5, 0.0) + cis(x).scale(1.0 / (TAU * x)))
        }
        KernelKind::Kappa1Large => {
            if tau <= 0.0 {
                return Err(Error::InvalidDomain("large-time kernel needs tau > 0".into()));
            }
            let x = lp.b_tilde * tau;
            Ok(C64::new(-0.5, 0.0) + cis(-(lp.lambda_tilde - 1.0) * x).scale(1.0 / (TAU * x)))
        }
        KernelKind::Kappa0Reg | KernelKind::Kappa1Reg => Err(Error::UnsupportedKind(
            "use kappa0_reg/kappa1_reg for the exact kernels".into(),
        )),
        KernelKind::K0Differential | KernelKind::K1Differential => Err(Error::UnsupportedKind(
            "use k_differential for the differential kernels".into(),
        )),
    }
}

/// Differential kernels: the frequency integral
/// `-(1/2pi) ∫₀^{lambda_c} dx (x/b_A)^n e^{-i(x - b_tilde) tau}` in closed form.
pub fn k_differential(kind: KernelKind, tau: f64, p: &Params) -> Result<C64> {
    if tau <= 0.0 {
        return Err(Error::InvalidDomain("k_differential: tau must be > 0".into()));
    }
    let lp = p.lift::<f64>();
    let y = lp.lambda_c * tau;
    match kind {
        KernelKind::K0Differential => {
            // (1 - e^{-iy})/i = sin y + i (cos y - 1)
            let band = C64::new(y.sin(), cos_m1(y));
            Ok(-(cis(lp.b_tilde * tau) * band).scale(1.0 / (TAU * tau)))
        }
        KernelKind::K1Differential => {
            // -(e^{i b~ tau}/(2 pi b_A)) h(y)/tau^2, h(y) = ∫₀^y t e^{-it} dt
            let h = if y.abs() < SERIES_ARG_MAX {
                h_series(y)
            } else {
                h_closed(y)
            };
            Ok(-(cis(lp.b_tilde * tau) * h).scale(1.0 / (TAU * p.b_a * tau * tau)))
        }
        _ => Err(Error::UnsupportedKind(
            "k_differential accepts K0Differential or K1Differential".into(),
        )),
    }
}

/// Series form of `∫₀^y t e^{-it} dt`.
pub(crate) fn h_series(y: f64) -> C64 {
    let mut sum = C64::zero();
    let mut pow = C64::new(1.0, 0.0); // (-i)^j
    let y2 = y * y;
    let mut ypow = y2; // y^{j+2}
    let mut fact = 1.0; // j!
    for j in 0..24u32 {
        sum = sum + pow.scale(ypow / ((j as f64 + 2.0) * fact));
        pow = pow * C64::new(0.0, -1.0);
        ypow *= y;
        fact *= (j + 1) as f64;
    }
    sum
}

/// Closed form of `∫₀^y t e^{-it} dt = i y e^{-iy} + e^{-iy} - 1`.
pub(crate) fn h_closed(y: f64) -> C64 {
    let e = cis(-y);
    C64::new(0.0, y) * e + e - C64::one()
}

/// Interval moments of a kernel: `F(u) = ∫₀ᵘ k` and `G(u) = ∫₀ᵘ t k(t) dt`,
/// both normalized to vanish at zero. The solver differences these across
/// grid intervals, so the kernel's fast oscillation never has to be resolved
/// by the step size.
pub(crate) trait SolverKernel<R: Real>: Sync {
    fn value(&self, u: R) -> Result<Complex<R>>;
    /// `(F(u), G(u))`; `None` when the kernel only supports nodal sampling.
    fn moments(&self, u: R) -> Result<Option<(Complex<R>, Complex<R>)>>;
}

/// n = 0 kernel with exact moments.
pub(crate) struct Kappa0<R: Real> {
    pub p: ParamsLifted<R>,
}

/// n = 1 kernel with exact moments.
pub(crate) struct Kappa1<R: Real> {
    pub p: ParamsLifted<R>,
}

fn kappa0_series_fg<R: Real>(a: R, b: R, u: R) -> (Complex<R>, Complex<R>) {
    let inv_2pi = R::one() / R::tau();
    let c0 = Complex::new(R::zero(), -inv_2pi * (b / a).ln());
    let mut f = c0.scale(u);
    let mut g = c0.scale(u * u * R::from_f64(0.5));
    // odd coefficients c_{2m+1} (real), even c_{2m} (imaginary)
    let mut pow_a = a; // A^k
    let mut pow_b = b;
    let mut u_pow = u * u; // u^{k+1}
    let mut fact = 1.0f64; // k!
    let mut k = 1u32;
    loop {
        let kf = k as f64;
        let c: Complex<R> = if k % 2 == 1 {
            let m_sign = if ((k - 1) / 2) % 2 == 0 { -1.0 } else { 1.0 };
            Complex::new(
                (pow_b + pow_a).scale_div(kf * fact, m_sign) * inv_2pi,
                R::zero(),
            )
        } else {
            let m_sign = if (k / 2) % 2 == 1 { 1.0 } else { -1.0 };
            Complex::new(
                R::zero(),
                (pow_b - pow_a).scale_div(kf * fact, m_sign) * inv_2pi,
            )
        };
        f = f + c.scale(u_pow / R::from_f64(kf + 1.0));
        g = g + c.scale(u_pow * u / R::from_f64(kf + 2.0));
        if (c.abs() * u_pow).to_f64() < 1e-40 || k >= 40 {
            break;
        }
        pow_a = pow_a * a;
        pow_b = pow_b * b;
        u_pow = u_pow * u;
        fact *= (k + 1) as f64;
        k += 1;
    }
    (f, g)
}

/// Helper: x / d * sign with exact division in the backend.
trait ScaleDiv<R: Real> {
    fn scale_div(self, d: f64, sign: f64) -> R;
}
impl<R: Real> ScaleDiv<R> for R {
    #[inline]
    fn scale_div(self, d: f64, sign: f64) -> R {
        self * R::from_f64(sign) / R::from_f64(d)
    }
}

impl<R: Real> Kappa0<R> {
    fn fg(&self, u: R) -> Result<(Complex<R>, Complex<R>)> {
        let (a, b) = (self.p.freq_slow, self.p.freq_fast);
        if u == R::zero() {
            return Ok((Complex::zero(), Complex::zero()));
        }
        let arg = (b * u).abs().to_f64().max((a * u).abs().to_f64());
        if arg < SERIES_ARG_MAX {
            return Ok(kappa0_series_fg(a, b, u));
        }
        let inv_2pi = R::one() / R::tau();
        let half = R::from_f64(0.5);
        let (sa, sb) = (sin_integral(a * u)?, sin_integral(b * u)?);
        let cdiff = ci_diff(a, b, u)?;
        let (sin_a, cos_a) = (a * u).sin_cos();
        let (sin_b, cos_b) = (b * u).sin_cos();
        let cm1_a = cos_m1(a * u);
        let cm1_b = cos_m1(b * u);
        let f_re = -inv_2pi * (u * (sb + sa) + cm1_b / b + cm1_a / a);
        let f_im = -inv_2pi * (u * cdiff - sin_b / b + sin_a / a);
        let u2h = u * u * half;
        let g_re = -inv_2pi
            * (u2h * (sb + sa)
                - (sin_b - b * u * cos_b) / (b * b) * half
                - (sin_a - a * u * cos_a) / (a * a) * half);
        let g_im = -inv_2pi
            * (u2h * cdiff - (cm1_b + b * u * sin_b) / (b * b) * half
                + (cm1_a + a * u * sin_a) / (a * a) * half);
        Ok((Complex::new(f_re, f_im), Complex::new(g_re, g_im)))
    }
}

impl<R: Real> SolverKernel<R> for Kappa0<R> {
    fn value(&self, u: R) -> Result<Complex<R>> {
        kappa0_reg(u, &self.p)
    }
    fn moments(&self, u: R) -> Result<Option<(Complex<R>, Complex<R>)>> {
        Ok(Some(self.fg(u)?))
    }
}

impl<R: Real> Kappa1<R> {
    fn correction_fg(&self, u: R) -> Result<(Complex<R>, Complex<R>)> {
        let (a, b) = (self.p.freq_slow, self.p.freq_fast);
        if u == R::zero() {
            return Ok((Complex::zero(), Complex::zero()));
        }
        let inv_2pi_a = R::one() / (R::tau() * a);
        let f = Complex::new(
            cin(a * u)? - cin(b * u)?,
            -(sin_integral(b * u)? + sin_integral(a * u)?),
        )
        .scale(inv_2pi_a);
        let (sin_a, _) = (a * u).sin_cos();
        let (sin_b, _) = (b * u).sin_cos();
        let g = Complex::new(sin_b / b - sin_a / a, cos_m1(b * u) / b + cos_m1(a * u) / a)
            .scale(inv_2pi_a);
        Ok((f, g))
    }
}

impl<R: Real> SolverKernel<R> for Kappa1<R> {
    fn value(&self, u: R) -> Result<Complex<R>> {
        kappa1_reg(u, &self.p)
    }
    fn moments(&self, u: R) -> Result<Option<(Complex<R>, Complex<R>)>> {
        let base = Kappa0 { p: self.p };
        let (f0, g0) = base.fg(u)?;
        let (fc, gc) = self.correction_fg(u)?;
        Ok(Some((f0 + fc, g0 + gc)))
    }
}

/// Kernel defined by a closure over nodal values; used by the solver's
/// nodal-trapezoid scheme and by tests.
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) struct ClosureKernel<R, F>
where
    F: Fn(R) -> Result<Complex<R>> + Sync,
    R: Real,
{
    pub f: F,
    pub _marker: std::marker::PhantomData<R>,
}

impl<R: Real, F: Fn(R) -> Result<Complex<R>> + Sync> SolverKernel<R> for ClosureKernel<R, F> {
    fn value(&self, u: R) -> Result<Complex<R>> {
        (self.f)(u)
    }
    fn moments(&self, _u: R) -> Result<Option<(Complex<R>, Complex<R>)>> {
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Params;

    fn fig_params() -> Params {
        Params::from_b_tilde(10.0, 1000.0, 0).unwrap()
    }

    #[test]
    fn kappa0_at_zero_is_lamb_shift_limit() {
        let p = fig_params().lift::<f64>();
        let v = kappa0_reg(0.0, &p).unwrap();
        assert_eq!(v.re, 0.0);
        assert!((v.im - -(p.lambda_tilde - 1.0).ln() / TAU).abs() < 1e-14);
    }

    #[test]
    fn kappa0_small_time_regime() {
        // large b_A so ln(lambda_tilde - 1) ~ ln(lambda - 1)
        let p = Params::from_b_tilde(1000.0, 1000.0, 0).unwrap();
        let lp = p.lift::<f64>();
        let tau = 1e-4 / lp.b_tilde;
        let exact = kappa0_reg(tau, &lp).unwrap();
        let small = C64::new(
            -lp.lambda_tilde * lp.b_tilde * tau / TAU,
            -(p.lambda - 1.0).ln() / TAU,
        );
        assert!((exact - small).abs() / small.abs() < 1e-3);
    }

    #[test]
    fn kappa0_large_time_regime() {
        let p = fig_params();
        let lp = p.lift::<f64>();
        let tau = 30.0;
        let exact = kappa0_reg(tau, &lp).unwrap();
        let approx = kernel_regime(KernelKind::Kappa0Large, tau, &p).unwrap();
        assert!((exact - approx).abs() < 1e-3);
        // real part approaches -1/2 like 1/(pi b~ tau)
        for &t in &[15.0, 40.0, 200.0] {
            let v = kappa0_reg(t, &lp).unwrap();
            assert!((v.re - -0.5).abs() < 1.0 / (std::f64::consts::PI * lp.b_tilde * t) + 1e-6);
        }
    }

    #[test]
    fn kappa1_at_zero_and_identity() {
        let p = Params::from_b_tilde(10.0, 1000.0, 1).unwrap();
        let lp = p.lift::<f64>();
        let v0 = kappa1_reg(0.0, &lp).unwrap();
        let want = kappa0_reg(0.0, &lp).unwrap() + C64::new(0.0, -lp.lambda_tilde / TAU);
        assert!((v0 - want).abs() < 1e-12);
        // correction equals the closed form exactly at moderate tau
        for &tau in &[0.01, 0.5, 3.0, 17.0] {
            let k1 = kappa1_reg(tau, &lp).unwrap();
            let k0 = kappa0_reg(tau, &lp).unwrap();
            let corr = (cis(-(lp.freq_fast * tau)) - cis(lp.freq_slow * tau))
                .scale(1.0 / (TAU * lp.freq_slow * tau));
            assert!(((k1 - k0) - corr).abs() <= 1e-15 * corr.abs().max(1.0));
        }
    }

    #[test]
    fn kappa1_large_time_regime() {
        let p = Params::from_b_tilde(1000.0, 1000.0, 1).unwrap();
        let lp = p.lift::<f64>();
        let tau = 20.0;
        let exact = kappa1_reg(tau, &lp).unwrap();
        let approx = kernel_regime(KernelKind::Kappa1Large, tau, &p).unwrap();
        assert!((exact - approx).abs() < 1e-4, "{:?}", (exact - approx).abs());
    }

    #[test]
    fn identity_on_random_samples() {
        // n=1 minus n=0 equals the correction for 1000 pseudo-random draws
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut rnd = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..1000 {
            let b_tilde = 1.0 + 999.0 * rnd();
            let lambda = 2.0 + 5000.0 * rnd();
            let tau = 1e-6 + 50.0 * rnd();
            let p = Params::from_b_tilde(b_tilde, lambda, 1).unwrap().lift::<f64>();
            let k0 = kappa0_reg(tau, &p).unwrap();
            let k1 = kappa1_reg(tau, &p).unwrap();
            let corr = kappa1_correction(tau, &p);
            assert!(((k1 - k0) - corr).abs() <= 1e-12 * (1.0 + corr.abs()));
            assert!(k1.is_finite() && k0.is_finite());
        }
    }

    #[test]
    fn correction_series_branch_is_continuous() {
        // both branches evaluated at the same point: the switch argument
        let p = Params::from_b_tilde(10.0, 1000.0, 1).unwrap();
        let lp = p.lift::<f64>();
        let u_switch = CORRECTION_SERIES_ARG / lp.freq_fast.max(lp.freq_slow);
        let series = correction_series(u_switch, &lp);
        let closed = correction_closed(u_switch, &lp);
        assert!((series - closed).abs() < 1e-10 * series.abs().max(1.0));
    }

    #[test]
    fn regime_formulas_by_hand() {
        let p = fig_params();
        let lp = p.lift::<f64>();
        let tau = 0.03;
        let inter = kernel_regime(KernelKind::Kappa0Intermediate, tau, &p).unwrap();
        assert_eq!(inter.re, -0.25);
        assert!(
            (inter.im - (0.5772156649015329 + (lp.b_tilde * tau).ln()) / TAU).abs() < 1e-15
        );
        let small = kernel_regime(KernelKind::Kappa0Small, tau, &p).unwrap();
        assert!((small.re - -(1000.0 * lp.b_tilde * tau / TAU)).abs() < 1e-12);
        assert!((small.im - -(999f64.ln() / TAU)).abs() < 1e-15);
        assert!(kernel_regime(KernelKind::Kappa0Reg, tau, &p).is_err());
    }

    #[test]
    fn differential_kernel_closed_form_and_limit() {
        let p = fig_params();
        let lp = p.lift::<f64>();
        let tau = 0.37;
        let v = k_differential(KernelKind::K0Differential, tau, &p).unwrap();
        let direct = -(cis(lp.b_tilde * tau)
            * (C64::one() - cis(-lp.lambda_c * tau))
            / C64::new(0.0, tau))
        .scale(1.0 / TAU);
        assert!((v - direct).abs() < 1e-12);
        let near_zero = k_differential(KernelKind::K0Differential, 1e-12, &p).unwrap();
        assert!((near_zero.re - -(lp.lambda_c / TAU)).abs() / (lp.lambda_c / TAU) < 1e-9);
        assert!(k_differential(KernelKind::Kappa0Reg, tau, &p).is_err());
        assert!(k_differential(KernelKind::K0Differential, 0.0, &p).is_err());
    }

    #[test]
    fn k1_differential_series_matches_closed_form() {
        let p = Params::from_b_tilde(3.0, 20.0, 1).unwrap();
        let lp = p.lift::<f64>();
        // both h branches at the switch argument
        let y = SERIES_ARG_MAX;
        assert!((h_series(y) - h_closed(y)).abs() < 1e-12 * h_closed(y).abs());
        // tau -> 0 limit: -lambda_c^2/(4 pi b_A)
        let tiny = k_differential(KernelKind::K1Differential, 1e-10, &p).unwrap();
        let want = -lp.lambda_c * lp.lambda_c / (2.0 * TAU * p.b_a);
        assert!((tiny.re - want).abs() / want.abs() < 1e-8, "{tiny:?} vs {want}");
    }

    #[test]
    fn integrated_differential_kernel_matches_kappa0() {
        // ∫₀^tau K0 = kappa0(tau) + i ln(lambda_tilde - 1)/2pi, checked by
        // adaptive Simpson on a small cutoff so the oscillation stays cheap
        let p = Params::from_b_tilde(5.0, 50.0, 0).unwrap();
        let lp = p.lift::<f64>();
        let tau = 0.7;
        let mut integral = C64::zero();
        let n = 400_000usize;
        let h = tau / n as f64;
        // composite Simpson
        for i in 0..=n {
            let t = (i as f64) * h;
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let v = if t == 0.0 {
                C64::new(-lp.lambda_c / TAU, 0.0)
            } else {
                k_differential(KernelKind::K0Differential, t, &p).unwrap()
            };
            integral = integral + v.scale(w);
        }
        integral = integral.scale(h / 3.0);
        let want = kappa0_reg(tau, &lp).unwrap() + C64::new(0.0, (lp.lambda_tilde - 1.0).ln() / TAU);
        assert!((integral - want).abs() < 1e-6, "{:?}", (integral - want).abs());
    }

    #[test]
    fn moments_match_quadrature() {
        // F and G against brute-force Simpson for both kernels
        let p = Params::from_b_tilde(7.0, 40.0, 1).unwrap();
        let lp = p.lift::<f64>();
        let k0 = Kappa0 { p: lp };
        let k1 = Kappa1 { p: lp };
        for &u in &[0.004, 0.09, 0.8, 2.0] {
            for (name, kern) in [("k0", &k0 as &dyn SolverKernel<f64>), ("k1", &k1)] {
                let (f, g) = kern.moments(u).unwrap().unwrap();
                let n = 40_000usize;
                let h = u / n as f64;
                let mut fq = C64::zero();
                let mut gq = C64::zero();
                for i in 0..=n {
                    let t = (i as f64) * h;
                    let w = if i == 0 || i == n {
                        1.0
                    } else if i % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    let v = kern.value(t).unwrap();
                    fq = fq + v.scale(w);
                    gq = gq + v.scale(w * t);
                }
                fq = fq.scale(h / 3.0);
                gq = gq.scale(h / 3.0);
                assert!((f - fq).abs() < 1e-7, "{name} F at u={u}: {:?}", (f - fq).abs());
                assert!((g - gq).abs() < 1e-7, "{name} G at u={u}: {:?}", (g - gq).abs());
            }
        }
    }

    #[test]
    fn moment_series_branch_continuity() {
        let p = Params::from_b_tilde(10.0, 1000.0, 0).unwrap();
        let lp = p.lift::<f64>();
        let k0 = Kappa0 { p: lp };
        let u_switch = SERIES_ARG_MAX / lp.freq_fast;
        let (f1, g1) = k0.moments(u_switch * 0.9999999).unwrap().unwrap();
        let (f2, g2) = k0.moments(u_switch * 1.0000001).unwrap().unwrap();
        assert!((f1 - f2).abs() < 1e-10);
        assert!((g1 - g2).abs() < 1e-10);
    }

    #[test]
    fn finite_over_wide_range() {
        for p in [fig_params(), Params::from_b_tilde(1000.0, 1000.0, 1).unwrap()] {
            let lp = p.lift::<f64>();
            let mut tau = 1e-9;
            while tau <= 1e6 {
                assert!(kappa0_reg(tau, &lp).unwrap().is_finite());
                assert!(kappa1_reg(tau, &lp).unwrap().is_finite());
                tau *= 3.7;
            }
        }
    }
}
