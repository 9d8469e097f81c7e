//! Current-voltage law of a resonant-tunnelling diode.
//!
//! The total current is the sum of a tunnelling term, which produces the
//! first positive-resistance branch and the negative differential
//! resistance (NDR) region, and a thermionic-like resonant term that takes
//! over at high bias:
//!
//! ```text
//! I(V)   = I_t(V) + I_r(V)
//! I_t(V) = a * ln[(1 + e^(alpha + eta V)) / (1 + e^(alpha - eta V))]
//!            * (pi/2 + atan((c - n1 V) / d))
//! I_r(V) = h * (e^(gamma V) - 1)
//! alpha  = q (b - c) / (k_B T),  eta = q n1 / (k_B T),  gamma = q n2 / (k_B T)
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Elementary charge (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602176634e-19;
/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Default central-difference step for [`DeviceParams::differential_conductance`].
pub const DEFAULT_DV: f64 = 1e-4;

/// Fitted parameters of the I-V law plus the operating temperature.
///
/// `q/(k_B T)` is cached and kept in sync with the temperature, so the
/// temperature is only reachable through accessors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawParams<T>",
    into = "RawParams<T>",
    bound(
        serialize = "T: Scalar + Serialize",
        deserialize = "T: Scalar + Deserialize<'de>"
    )
)]
pub struct DeviceParams<T> {
    /// Tunnelling current scale (A).
    pub a: T,
    /// Resonance voltage parameter (V).
    pub b: T,
    /// Voltage parameter (V).
    pub c: T,
    /// Resonance width (V). Never zero.
    pub d: T,
    pub n1: T,
    pub n2: T,
    /// Resonant current scale (A).
    pub h: T,
    temperature: T,
    q_over_kt: T,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams<T> {
    a: T,
    b: T,
    c: T,
    d: T,
    n1: T,
    n2: T,
    h: T,
    temperature: T,
}

impl<T: Scalar> TryFrom<RawParams<T>> for DeviceParams<T> {
    type Error = Error;

    fn try_from(r: RawParams<T>) -> Result<Self> {
        DeviceParams::new(r.a, r.b, r.c, r.d, r.n1, r.n2, r.h, r.temperature)
    }
}

impl<T: Scalar> From<DeviceParams<T>> for RawParams<T> {
    fn from(p: DeviceParams<T>) -> Self {
        RawParams {
            a: p.a,
            b: p.b,
            c: p.c,
            d: p.d,
            n1: p.n1,
            n2: p.n2,
            h: p.h,
            temperature: p.temperature,
        }
    }
}

/// Exponents derived from the fitted parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams<T> {
    pub alpha: T,
    /// 1/V
    pub eta: T,
    /// 1/V
    pub gamma: T,
}

/// `q / (k_B T)` in 1/V.
pub fn thermal_inverse_voltage<T: Scalar>(temperature: T) -> T {
    T::lit(ELEMENTARY_CHARGE) / (T::lit(BOLTZMANN) * temperature)
}

/// Operating point used by all experiments: `b` amplified tenfold to 5 V.
pub fn default_params<T: Scalar>() -> DeviceParams<T> {
    DeviceParams {
        b: T::lit(5.0),
        ..reference_params()
    }
}

/// Published fit with `b = 0.5 V`.
pub fn reference_params<T: Scalar>() -> DeviceParams<T> {
    let temperature = T::lit(300.0);
    DeviceParams {
        a: T::lit(0.0039),
        b: T::lit(0.5),
        c: T::lit(0.0874),
        d: T::lit(0.0073),
        n1: T::lit(0.0352),
        n2: T::lit(0.0031),
        h: T::lit(0.0367),
        temperature,
        q_over_kt: thermal_inverse_voltage(temperature),
    }
}

impl<T: Scalar> Default for DeviceParams<T> {
    fn default() -> Self {
        default_params()
    }
}

impl<T: Scalar> DeviceParams<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(a: T, b: T, c: T, d: T, n1: T, n2: T, h: T, temperature: T) -> Result<Self> {
        let all = [a, b, c, d, n1, n2, h, temperature];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("device parameters must be finite".into()));
        }
        if d == T::zero() {
            return Err(Error::InvalidParameter("d must be non-zero".into()));
        }
        if temperature <= T::zero() {
            return Err(Error::InvalidParameter(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        Ok(DeviceParams {
            a,
            b,
            c,
            d,
            n1,
            n2,
            h,
            temperature,
            q_over_kt: thermal_inverse_voltage(temperature),
        })
    }

    pub fn temperature(&self) -> T {
        self.temperature
    }

    /// Cached `q / (k_B T)` (1/V).
    pub fn q_over_kt(&self) -> T {
        self.q_over_kt
    }

    pub fn set_temperature(&mut self, temperature: T) -> Result<()> {
        if !(temperature > T::zero()) || !temperature.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        self.temperature = temperature;
        self.q_over_kt = thermal_inverse_voltage(temperature);
        Ok(())
    }

    pub fn derive(&self) -> DerivedParams<T> {
        DerivedParams {
            alpha: self.q_over_kt * (self.b - self.c),
            eta: self.q_over_kt * self.n1,
            gamma: self.q_over_kt * self.n2,
        }
    }

    /// Tunnelling component `I_t(V)` in amperes.
    pub fn tunnel_current(&self, v: T) -> T {
        let DerivedParams { alpha, eta, .. } = self.derive();
        let half_span = eta * v;
        let log_ratio = softplus_difference(alpha + half_span, alpha - half_span, half_span + half_span);
        self.a * log_ratio * half_pi_plus_atan((self.c - self.n1 * v) / self.d)
    }

    /// Resonant component `I_r(V)` in amperes.
    ///
    /// Overflows to infinity only for `gamma * V` above ~709 (f64), i.e.
    /// thousands of volts for the published fit.
    pub fn resonant_current(&self, v: T) -> T {
        self.h * (self.q_over_kt * self.n2 * v).exp_m1()
    }

    pub fn total_current(&self, v: T) -> T {
        self.tunnel_current(v) + self.resonant_current(v)
    }

    pub fn total_current_batch(&self, volts: &[T]) -> Vec<T> {
        volts.iter().map(|&v| self.total_current(v)).collect()
    }

    /// Central-difference dI/dV in siemens.
    pub fn differential_conductance(&self, v: T, dv: T) -> Result<T> {
        if !(dv > T::zero()) || !dv.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "finite-difference step must be positive, got {dv}"
            )));
        }
        Ok((self.total_current(v + dv) - self.total_current(v - dv)) / (dv + dv))
    }

    pub fn from_toml_str(s: &str) -> Result<Self>
    where
        T: for<'de> Deserialize<'de>,
    {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String
    where
        T: Serialize,
    {
        toml::to_string(self).expect("flat numeric table serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self>
    where
        T: for<'de> Deserialize<'de>,
    {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()>
    where
        T: Serialize,
    {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml_string()).map_err(|e| Error::io(path, e))
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus<T: Scalar>(x: T) -> T {
    x.max(T::zero()) + (-x.abs()).exp().ln_1p()
}

/// `softplus(u) - softplus(w)`, where `diff = u - w` is supplied exactly.
///
/// When both arguments share a sign the large linear parts cancel
/// analytically, leaving only `ln_1p` corrections.
fn softplus_difference<T: Scalar>(u: T, w: T, diff: T) -> T {
    let zero = T::zero();
    if u > zero && w > zero {
        diff + (-u).exp().ln_1p() - (-w).exp().ln_1p()
    } else if u <= zero && w <= zero {
        u.exp().ln_1p() - w.exp().ln_1p()
    } else {
        softplus(u) - softplus(w)
    }
}

/// `pi/2 + atan(z)`, evaluated as `atan(-1/z)` for negative `z` to avoid
/// cancellation.
fn half_pi_plus_atan<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::FRAC_PI_2() + z.atan()
    } else {
        (-z.recip()).atan()
    }
}
