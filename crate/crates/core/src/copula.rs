//! Archimedean copulas: generators, Kendall's tau and conditional sampling.
//!
//! A copula couples the two marginal survival functions through a generator
//! `phi`: `C(u, v) = phi^-1(phi(u) + phi(v))`. Three families are supported.
//!
//! | family       | `phi(u)`                                   | tau                      |
//! |--------------|--------------------------------------------|--------------------------|
//! | Independence | `-ln u`                                    | 0                        |
//! | Clayton      | `(u^-theta - 1) / theta`, theta > 0        | `theta / (theta + 2)`    |
//! | Frank        | `-ln((e^-theta u - 1) / (e^-theta - 1))`   | `1 - 4 (1 - D1(theta)) / theta` |
//!
//! `D1` is the first-order Debye function. All three generators satisfy
//! `phi(0) = inf`, so the pseudo-inverse coincides with the inverse.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Independence,
    Clayton,
    Frank,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Independence => "independence",
            Family::Clayton => "clayton",
            Family::Frank => "frank",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "independence" | "indep" => Ok(Family::Independence),
            "clayton" => Ok(Family::Clayton),
            "frank" => Ok(Family::Frank),
            other => Err(Error::Spec(format!(
                "unknown copula family `{other}` (expected independence, clayton or frank)"
            ))),
        }
    }
}

/// A validated copula family and dependence parameter.
///
/// `theta` and `tau` are kept consistent by construction; use the
/// constructors rather than building the struct by hand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopulaSpec {
    family: Family,
    theta: f64,
    tau: f64,
}

impl CopulaSpec {
    pub fn independence() -> Self {
        Self {
            family: Family::Independence,
            theta: 0.0,
            tau: 0.0,
        }
    }

    pub fn clayton(theta: f64) -> Result<Self> {
        Self::from_theta(Family::Clayton, theta)
    }

    pub fn frank(theta: f64) -> Result<Self> {
        Self::from_theta(Family::Frank, theta)
    }

    pub fn from_theta(family: Family, theta: f64) -> Result<Self> {
        let tau = theta_to_tau(family, theta)?;
        Ok(Self { family, theta, tau })
    }

    pub fn from_tau(family: Family, tau: f64) -> Result<Self> {
        if family == Family::Independence {
            if tau != 0.0 {
                return Err(Error::Spec(format!(
                    "independence copula has tau = 0, got {tau}"
                )));
            }
            return Ok(Self::independence());
        }
        let theta = tau_to_theta(family, tau)?;
        Ok(Self { family, theta, tau })
    }

    /// Build from a family and exactly one of `tau` / `theta`.
    pub fn from_parts(family: Family, tau: Option<f64>, theta: Option<f64>) -> Result<Self> {
        match (family, tau, theta) {
            (_, Some(_), Some(_)) => Err(Error::Spec(
                "give exactly one of tau or theta, not both".into(),
            )),
            (Family::Independence, None, None) => Ok(Self::independence()),
            (Family::Independence, Some(t), None) | (Family::Independence, None, Some(t))
                if t == 0.0 =>
            {
                Ok(Self::independence())
            }
            (_, Some(t), None) => Self::from_tau(family, t),
            (_, None, Some(t)) => Self::from_theta(family, t),
            (_, None, None) => Err(Error::Spec(format!(
                "{family} copula needs tau or theta"
            ))),
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `phi(u)` for `u` in `(0, 1]`.
    pub fn generator_eval(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u <= 1.0) {
            return Err(Error::Domain(format!("generator argument must lie in (0, 1], got {u}")));
        }
        Ok(self.phi(u))
    }

    /// `phi^-1(y)` for `y >= 0` (including `y = inf`, which maps to 0).
    pub fn generator_inverse(&self, y: f64) -> Result<f64> {
        if y.is_nan() || y < 0.0 {
            return Err(Error::Domain(format!("generator inverse argument must be >= 0, got {y}")));
        }
        Ok(self.phi_inv(y))
    }

    /// Unchecked generator; `phi(0) = inf`.
    #[inline]
    pub(crate) fn phi(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return f64::INFINITY;
        }
        match self.family {
            Family::Independence => -u.ln(),
            Family::Clayton => (-self.theta * u.ln()).exp_m1() / self.theta,
            Family::Frank => {
                if u == 1.0 {
                    return 0.0;
                }
                let theta = self.theta;
                let ratio = (-theta * u).exp_m1() / (-theta).exp_m1();
                if ratio < 0.5 {
                    -ratio.ln()
                } else {
                    // ratio - 1 without cancellation.
                    let d = -(-theta * u).exp() * (-theta * (1.0 - u)).exp_m1() / (-theta).exp_m1();
                    -d.ln_1p()
                }
            }
        }
    }

    /// Unchecked inverse generator; `phi^-1(inf) = 0`.
    #[inline]
    pub(crate) fn phi_inv(&self, y: f64) -> f64 {
        if y == f64::INFINITY {
            return 0.0;
        }
        match self.family {
            Family::Independence => (-y).exp(),
            Family::Clayton => (-(self.theta * y).ln_1p() / self.theta).exp(),
            Family::Frank => {
                if y == 0.0 {
                    return 1.0;
                }
                let theta = self.theta;
                let x = (-y).exp() * (-theta).exp_m1();
                let log_arg = if x > -0.5 {
                    x.ln_1p()
                } else {
                    // 1 + x = 1 - e^-y + e^-(y + theta), formed without cancellation.
                    (-(-y).exp_m1() + (-(y + theta)).exp()).ln()
                };
                (-log_arg / theta).clamp(0.0, 1.0)
            }
        }
    }

    /// Draw `(U, V)` with uniform margins coupled by this copula.
    ///
    /// `U` is drawn first, then `V` by inverting the conditional distribution
    /// `dC(u, v)/du` at a second independent uniform.
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> UniformPair {
        loop {
            let u = open_unit(rng);
            let w = open_unit(rng);
            let v = self.conditional_inverse(u, w);
            if v > 0.0 && v < 1.0 {
                return UniformPair { u, v };
            }
        }
    }

    /// The `v` solving `dC(u, v)/du = w`.
    pub fn conditional_inverse(&self, u: f64, w: f64) -> f64 {
        let theta = self.theta;
        match self.family {
            Family::Independence => w,
            Family::Clayton => {
                // v = ((w^(-theta/(1+theta)) - 1) u^-theta + 1)^(-1/theta)
                let a = (-theta / (1.0 + theta) * w.ln()).exp_m1();
                let b = (-theta * u.ln()).exp();
                (-(a * b).ln_1p() / theta).exp()
            }
            Family::Frank => {
                let y = w * (-theta).exp_m1() / ((-theta * u).exp() - w * (-theta * u).exp_m1());
                -(y.ln_1p()) / theta
            }
        }
    }
}

impl fmt::Display for CopulaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(theta={}, tau={})", self.family, self.theta, self.tau)
    }
}

/// A pair of dependent uniforms on the open unit square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformPair {
    pub u: f64,
    pub v: f64,
}

fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let x: f64 = rng.random();
        if x > 0.0 {
            return x;
        }
    }
}

/// Kendall's tau implied by `theta`.
pub fn theta_to_tau(family: Family, theta: f64) -> Result<f64> {
    if !theta.is_finite() {
        return Err(Error::Spec(format!("theta must be finite, got {theta}")));
    }
    match family {
        Family::Independence => {
            if theta == 0.0 {
                Ok(0.0)
            } else {
                Err(Error::Spec(format!("independence copula has theta = 0, got {theta}")))
            }
        }
        Family::Clayton => {
            if theta > 0.0 {
                Ok(theta / (theta + 2.0))
            } else {
                Err(Error::Spec(format!("clayton theta must be > 0, got {theta}")))
            }
        }
        Family::Frank => {
            if theta == 0.0 {
                return Err(Error::Spec("frank theta must be non-zero".into()));
            }
            Ok(theta.signum() * frank_tau(theta.abs()))
        }
    }
}

/// Dependence parameter for Kendall's tau in `(0, 1)`.
pub fn tau_to_theta(family: Family, tau: f64) -> Result<f64> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Domain(format!("tau must lie in (0, 1), got {tau}")));
    }
    match family {
        Family::Independence => Err(Error::Spec(
            "independence copula has no dependence parameter".into(),
        )),
        Family::Clayton => Ok(2.0 * tau / (1.0 - tau)),
        Family::Frank => Ok(frank_theta(tau)),
    }
}

/// `B_2k / ((2k + 1) (2k)!)` for k = 1..=14.
const DEBYE_SERIES: [f64; 14] = {
    const B: [(f64, f64); 14] = [
        (1.0, 6.0),
        (-1.0, 30.0),
        (1.0, 42.0),
        (-1.0, 30.0),
        (5.0, 66.0),
        (-691.0, 2730.0),
        (7.0, 6.0),
        (-3617.0, 510.0),
        (43867.0, 798.0),
        (-174611.0, 330.0),
        (854513.0, 138.0),
        (-236364091.0, 2730.0),
        (8553103.0, 6.0),
        (-23749461029.0, 870.0),
    ];
    let mut out = [0.0; 14];
    let mut k = 0;
    let mut fact = 1.0; // (2k)!
    while k < 14 {
        let two_k = 2.0 * (k as f64 + 1.0);
        fact *= (two_k - 1.0) * two_k;
        out[k] = B[k].0 / B[k].1 / ((two_k + 1.0) * fact);
        k += 1;
    }
    out
};

/// Frank tau for theta > 0.
fn frank_tau(theta: f64) -> f64 {
    if theta < 2.0 {
        // tau = (4 / theta) * sum_k c_k theta^(2k), free of the 1 - D1 cancellation.
        let x2 = theta * theta;
        let mut power = x2;
        let mut sum = 0.0;
        for c in DEBYE_SERIES {
            sum += c * power;
            power *= x2;
        }
        4.0 * sum / theta
    } else {
        1.0 - 4.0 / theta * (1.0 - debye1(theta))
    }
}

/// First-order Debye function `D1(x) = x^-1 int_0^x t / (e^t - 1) dt`, x >= 2.
fn debye1(x: f64) -> f64 {
    let mut tail = 0.0;
    for k in 1..=80 {
        let kf = k as f64;
        let term = (-kf * x).exp() * (x / kf + 1.0 / (kf * kf));
        tail += term;
        if term < 1e-18 * tail {
            break;
        }
    }
    (std::f64::consts::PI * std::f64::consts::PI / 6.0 - tail) / x
}

fn frank_theta(tau: f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = 1.0;
    while frank_tau(hi) < tau {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if frank_tau(mid) < tau {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi.max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}
