//! Dimensionless model parameters and their construction from physical data.
//!
//! Everything downstream works in units of the vacuum decay rate: time is
//! `tau = Gamma0 * t`, frequencies are divided by `Gamma0`. The shifted
//! frequency `b_tilde = b_a - ln(Lambda - 1)/2pi` absorbs the cutoff
//! logarithm, and `lambda_c = Lambda * b_a` is the cutoff in rate units.

use crate::error::{Error, Result};
use crate::real::Real;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// CODATA-2018 values used by [`Params::from_physical`].
pub mod constants {
    /// Vacuum permeability, N A^-2.
    pub const MU_0: f64 = 1.256_637_062_12e-6;
    /// Bohr magneton, J T^-1.
    pub const MU_B: f64 = 9.274_010_078_3e-24;
    /// Reduced Planck constant, J s.
    pub const HBAR: f64 = 1.054_571_817e-34;
    /// Speed of light, m s^-1.
    pub const C: f64 = 299_792_458.0;
}

/// Dimensionless parameter set; immutable after construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Params {
    /// Transition frequency over decay rate, `omega_A / Gamma0`.
    pub b_a: f64,
    /// Cutoff over transition frequency, `omega_c / omega_A`.
    pub lambda: f64,
    /// Kernel power: 0 (triple subtraction) or 1 (mass-renormalized).
    pub n: u8,
    /// Shifted frequency `b_a - ln(lambda - 1)/2pi`.
    pub b_tilde: f64,
    /// Shifted cutoff ratio `lambda * b_a / b_tilde`.
    pub lambda_tilde: f64,
    /// Cutoff over decay rate, `lambda * b_a`, stored as that exact product.
    pub lambda_c: f64,
    /// Pre-renormalization frequency `b_a - lambda/2pi`; bookkeeping for the
    /// n = 1 route before the mass counter-term is applied.
    pub b_prime: f64,
    /// When set, `lambda_tilde` is pinned to `lambda` for literature
    /// comparison instead of the exact ratio.
    pub approx_lambda_tilde: bool,
    /// Decay rate in SI units when constructed from physical input.
    pub gamma0_si: Option<f64>,
}

/// Physical description of a magnetic spin-flip transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalInput {
    /// Transition angular frequency, rad/s.
    pub omega_a: f64,
    /// Dimensionless spin factor S^2.
    pub s2: f64,
    /// Gyromagnetic factor.
    pub g_s: f64,
    /// Cutoff angular frequency, rad/s.
    pub omega_c: f64,
}

impl Params {
    /// Build from the dimensionless inputs, populating the derived fields.
    pub fn from_dimensionless(b_a: f64, lambda: f64, n: u8) -> Result<Params> {
        Self::with_options(b_a, lambda, n, false)
    }

    /// As [`from_dimensionless`](Self::from_dimensionless) with the
    /// `lambda_tilde := lambda` comparison flag.
    pub fn with_options(b_a: f64, lambda: f64, n: u8, approx_lambda_tilde: bool) -> Result<Params> {
        if !(b_a > 0.0) || !b_a.is_finite() {
            return Err(Error::InvalidDomain(format!("b_A must be positive, got {b_a}")));
        }
        if !(lambda > 1.0) || !lambda.is_finite() {
            return Err(Error::InvalidDomain(format!(
                "Lambda must exceed 1 (log of Lambda - 1 must exist), got {lambda}"
            )));
        }
        if n > 1 {
            return Err(Error::InvalidDomain(format!("kernel power n must be 0 or 1, got {n}")));
        }
        let b_tilde = b_a - (lambda - 1.0).ln() / TAU;
        if !(b_tilde > 0.0) {
            return Err(Error::InvalidDomain(format!(
                "derived b_tilde = {b_tilde} <= 0: cutoff shift exceeds the transition frequency"
            )));
        }
        let lambda_tilde = if approx_lambda_tilde {
            lambda
        } else {
            lambda * b_a / b_tilde
        };
        Ok(Params {
            b_a,
            lambda,
            n,
            b_tilde,
            lambda_tilde,
            lambda_c: lambda * b_a,
            b_prime: b_a - lambda / TAU,
            approx_lambda_tilde,
            gamma0_si: None,
        })
    }

    /// Build from physical data: the free-space spin-flip rate
    /// `Gamma0 = mu0 (muB gS)^2 k^3 S^2 / (3 pi hbar)` fixes the scale.
    pub fn from_physical(input: &PhysicalInput, n: u8) -> Result<Params> {
        let PhysicalInput { omega_a, s2, g_s, omega_c } = *input;
        for (name, v) in [("omega_A", omega_a), ("S2", s2), ("g_S", g_s), ("omega_c", omega_c)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidDomain(format!("{name} must be positive, got {v}")));
            }
        }
        let k_a = omega_a / constants::C;
        let gamma_bar = constants::MU_0 * (constants::MU_B * g_s).powi(2) * k_a.powi(3)
            / (3.0 * PI * constants::HBAR);
        let gamma0 = gamma_bar * s2;
        if gamma0 == 0.0 || !gamma0.is_finite() {
            return Err(Error::Overflow(format!(
                "Gamma0 = {gamma0} underflows or overflows the working precision"
            )));
        }
        let b_a = omega_a / gamma0;
        let lambda = omega_c / omega_a;
        let mut p = Self::from_dimensionless(b_a, lambda, n)?;
        p.gamma0_si = Some(gamma0);
        Ok(p)
    }

    /// Circuit-QED style preset: rate 0.5e-2 of the line frequency and a
    /// one-percent cutoff shift, i.e. `b_A = 2pi/0.005`, `ln(Lambda-1) = 8pi^2`.
    pub fn artificial_atom(n: u8) -> Params {
        let b_a = TAU / 0.005;
        let lambda = 1.0 + (8.0 * PI * PI).exp();
        Self::from_dimensionless(b_a, lambda, n).expect("preset parameters are valid")
    }

    /// Magnetically trapped atom preset: the quoted `b_A = 3e32`,
    /// `Lambda = 2e14` (cutoff at the electron rest energy).
    pub fn atom_chip(n: u8) -> Params {
        Self::from_dimensionless(3e32, 2e14, n).expect("preset parameters are valid")
    }

    /// Invert `b_tilde` to `b_a` at fixed `lambda` and construct.
    pub fn from_b_tilde(b_tilde: f64, lambda: f64, n: u8) -> Result<Params> {
        if !(lambda > 1.0) || !lambda.is_finite() {
            return Err(Error::InvalidDomain(format!(
                "Lambda must exceed 1 (log of Lambda - 1 must exist), got {lambda}"
            )));
        }
        Self::from_dimensionless(b_tilde + (lambda - 1.0).ln() / TAU, lambda, n)
    }

    /// Derived quantities recomputed at the precision of the backend `R`.
    pub fn lift<R: Real>(&self) -> ParamsLifted<R> {
        let b_a = R::from_f64(self.b_a);
        let lambda = R::from_f64(self.lambda);
        let b_tilde = b_a - (lambda - R::one()).ln() / R::tau();
        let lambda_c = lambda * b_a;
        let lambda_tilde = if self.approx_lambda_tilde {
            lambda
        } else {
            lambda_c / b_tilde
        };
        ParamsLifted {
            b_a,
            lambda,
            b_tilde,
            lambda_tilde,
            lambda_c,
            // kernel frequencies: slow edge at b_tilde, fast edge at the
            // cutoff minus the shifted line
            freq_slow: b_tilde,
            freq_fast: lambda_c - b_tilde,
        }
    }
}

/// Parameter values lifted to a scalar backend, with the two kernel edge
/// frequencies precomputed.
#[derive(Debug, Clone, Copy)]
pub struct ParamsLifted<R> {
    pub b_a: R,
    pub lambda: R,
    pub b_tilde: R,
    pub lambda_tilde: R,
    pub lambda_c: R,
    pub freq_slow: R,
    pub freq_fast: R,
}

/// On-disk parameter file: either dimensionless or physical.
///
/// ```json
/// {"b_A": 11.1, "Lambda": 1000.0, "n": 0}
/// {"physical": {"omega_A_hz": 560000.0, "S2": 0.125, "g_S": 2.0, "Lambda": 2e14}}
/// ```
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum ParamsFile {
    Dimensionless {
        #[serde(rename = "b_A")]
        b_a: f64,
        #[serde(rename = "Lambda")]
        lambda: f64,
        #[serde(default)]
        n: u8,
    },
    Physical {
        physical: PhysicalJson,
        #[serde(default)]
        n: u8,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalJson {
    /// Transition frequency as an ordinary frequency, Hz.
    #[serde(rename = "omega_A_hz")]
    pub omega_a_hz: f64,
    #[serde(rename = "S2")]
    pub s2: f64,
    #[serde(rename = "g_S")]
    pub g_s: f64,
    #[serde(rename = "Lambda")]
    pub lambda: f64,
}

/// Parse a parameter file, rejecting unknown keys.
pub fn params_from_json(text: &str) -> Result<Params> {
    // serde's untagged enums swallow deny_unknown_fields on the variants, so
    // validate the key set by hand before dispatch.
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| Error::InvalidInput(format!("parameter file is not valid JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::InvalidInput("parameter file must be a JSON object".into()))?;
    let allowed_top: &[&str] = if obj.contains_key("physical") {
        &["physical", "n"]
    } else {
        &["b_A", "Lambda", "n"]
    };
    for k in obj.keys() {
        if !allowed_top.contains(&k.as_str()) {
            return Err(Error::InvalidInput(format!("unknown key '{k}' in parameter file")));
        }
    }
    let file: ParamsFile = serde_json::from_value(value)
        .map_err(|e| Error::InvalidInput(format!("parameter file: {e}")))?;
    match file {
        ParamsFile::Dimensionless { b_a, lambda, n } => Params::from_dimensionless(b_a, lambda, n),
        ParamsFile::Physical { physical, n } => {
            let omega_a = TAU * physical.omega_a_hz;
            let input = PhysicalInput {
                omega_a,
                s2: physical.s2,
                g_s: physical.g_s,
                omega_c: physical.lambda * omega_a,
            };
            Params::from_physical(&input, n)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn figure_preset_inversion() {
        // b_A chosen so that b_tilde comes out at exactly 10
        let p = Params::from_dimensionless(10.0 + 999f64.ln() / TAU, 1000.0, 0).unwrap();
        assert!((p.b_tilde - 10.0).abs() < 1e-12);
        assert_eq!(p.lambda_c, p.lambda * p.b_a);
        let q = Params::from_b_tilde(10.0, 1000.0, 0).unwrap();
        assert!((q.b_tilde - 10.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_at_unity_rejected() {
        assert!(Params::from_dimensionless(5.0, 1.0, 0).is_err());
        assert!(Params::from_dimensionless(5.0, 0.5, 0).is_err());
        assert!(Params::from_dimensionless(-2.0, 10.0, 0).is_err());
        assert!(Params::from_dimensionless(5.0, 10.0, 2).is_err());
        // shift exceeding the line frequency
        assert!(Params::from_dimensionless(0.1, 1e6, 0).is_err());
    }

    #[test]
    fn n1_preset_lambda_c() {
        let p = Params::from_dimensionless(1000.0 + 999f64.ln() / TAU, 1000.0, 1).unwrap();
        assert!((p.b_tilde - 1000.0).abs() < 1e-10);
        assert!((p.lambda_c / 1.0011e6 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn physical_rate_scalings() {
        let base = PhysicalInput {
            omega_a: TAU * 560e3,
            s2: 0.125,
            g_s: 2.0,
            omega_c: 2e14 * TAU * 560e3,
        };
        let p = Params::from_physical(&base, 0).unwrap();
        let gamma0 = p.gamma0_si.unwrap();
        // frozen from an independent CODATA-2018 evaluation of the rate formula
        assert!((gamma0 / 8.7922e-26 - 1.0).abs() < 1e-3, "gamma0={gamma0}");
        assert!((p.b_a / 4.0019e31 - 1.0).abs() < 1e-3, "b_A={}", p.b_a);
        assert!((p.lambda / 2e14 - 1.0).abs() < 1e-12);

        // doubling g_S quadruples the rate and quarters b_A
        let doubled = PhysicalInput { g_s: 4.0, ..base };
        let q = Params::from_physical(&doubled, 0).unwrap();
        assert!((q.gamma0_si.unwrap() / gamma0 - 4.0).abs() < 1e-12);
        assert!((p.b_a / q.b_a - 4.0).abs() < 1e-12);

        let zero_spin = PhysicalInput { s2: 0.0, ..base };
        assert!(Params::from_physical(&zero_spin, 0).is_err());
    }

    #[test]
    fn artificial_atom_numbers() {
        let p = Params::artificial_atom(0);
        assert!((p.b_a - 1256.6370614359172).abs() < 1e-9);
        assert!(((p.lambda - 1.0).ln() - 78.95683520871487).abs() < 1e-10);
        // one-percent cutoff shift: b_A - b_tilde = 0.01 b_A exactly
        assert!(((p.b_a - p.b_tilde) / p.b_a - 0.01).abs() < 1e-12);
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let p = Params::from_dimensionless(17.25, 4321.5, 1).unwrap();
        let q = Params::from_dimensionless(p.b_a, p.lambda, p.n).unwrap();
        assert_eq!(p.b_tilde.to_bits(), q.b_tilde.to_bits());
        assert_eq!(p.lambda_tilde.to_bits(), q.lambda_tilde.to_bits());
        assert_eq!(p.lambda_c.to_bits(), q.lambda_c.to_bits());
        assert_eq!(p.b_prime.to_bits(), q.b_prime.to_bits());
    }

    #[test]
    fn lambda_tilde_limit() {
        for &b_a in &[2e2, 1e4, 1e8] {
            let p = Params::from_dimensionless(b_a, 1000.0, 0).unwrap();
            let bound = 999f64.ln() / (TAU * b_a) * 1.01;
            assert!((p.lambda_tilde / p.lambda - 1.0).abs() < bound);
        }
    }

    #[test]
    fn json_forms() {
        let p = params_from_json(r#"{"b_A": 11.0, "Lambda": 1000.0, "n": 1}"#).unwrap();
        assert_eq!(p.n, 1);
        assert_eq!(p.b_a, 11.0);
        let p = params_from_json(
            r#"{"physical": {"omega_A_hz": 560000.0, "S2": 0.125, "g_S": 2.0, "Lambda": 2e14}}"#,
        )
        .unwrap();
        assert!(p.gamma0_si.is_some());
        assert!(params_from_json(r#"{"b_A": 11.0, "Lambda": 1000.0, "bogus": 3}"#).is_err());
        assert!(params_from_json(
            r#"{"physical": {"omega_A_hz": 1.0, "S2": 1.0, "g_S": 2.0, "Lambda": 10.0, "x": 0}}"#
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn monotone_in_lambda(b_a in 2.0f64..1e6, l1 in 1.5f64..1e8, factor in 1.1f64..100.0) {
            let l2 = l1 * factor;
            let p1 = Params::from_dimensionless(b_a, l1, 0);
            let p2 = Params::from_dimensionless(b_a, l2, 0);
            if let (Ok(p1), Ok(p2)) = (p1, p2) {
                prop_assert!(p2.b_tilde < p1.b_tilde);
            }
        }
    }
}
