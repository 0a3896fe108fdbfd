//! Absorption coefficients `h = exp(-ℓ(d))` built from a decay profile `ℓ`
//! and a distance to the degeneracy set.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{anisotropic_distance, parabolic_distance, Curve};

/// `-ℓ` below this value makes `exp` underflow to a subnormal or zero.
const LN_MIN_POSITIVE: f64 = -708.3964185322641;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum DecayProfile {
    /// `A / r^2`
    InverseSquare { amplitude: f64 },
    /// `A / r^θ`
    Power { amplitude: f64, exponent: f64 },
    /// `A ln(1/r)` for `r < 1`, `0` beyond.
    Log { amplitude: f64 },
}

impl DecayProfile {
    pub fn inverse_square(amplitude: f64) -> Result<Self> {
        Self::InverseSquare { amplitude }.validated()
    }

    pub fn power(amplitude: f64, exponent: f64) -> Result<Self> {
        Self::Power {
            amplitude,
            exponent,
        }
        .validated()
    }

    pub fn log(amplitude: f64) -> Result<Self> {
        Self::Log { amplitude }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        let a = self.amplitude();
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::config(format!(
                "profile amplitude must be positive, got {a}"
            )));
        }
        if let Self::Power { exponent, .. } = self {
            if !(exponent > 0.0 && exponent.is_finite()) {
                return Err(Error::config(format!(
                    "power exponent must be positive, got {exponent}"
                )));
            }
        }
        Ok(self)
    }

    pub fn amplitude(&self) -> f64 {
        match *self {
            Self::InverseSquare { amplitude }
            | Self::Power { amplitude, .. }
            | Self::Log { amplitude } => amplitude,
        }
    }

    pub fn with_amplitude(self, amplitude: f64) -> Self {
        match self {
            Self::InverseSquare { .. } => Self::InverseSquare { amplitude },
            Self::Power { exponent, .. } => Self::Power {
                amplitude,
                exponent,
            },
            Self::Log { .. } => Self::Log { amplitude },
        }
    }

    /// `ℓ(r)` for `r > 0`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::domain(format!(
                "decay profile evaluated at r = {r} <= 0"
            )));
        }
        Ok(match *self {
            Self::InverseSquare { amplitude } => amplitude / (r * r),
            Self::Power {
                amplitude,
                exponent,
            } => amplitude / r.powf(exponent),
            Self::Log { amplitude } => {
                if r >= 1.0 {
                    0.0
                } else {
                    -amplitude * r.ln()
                }
            }
        })
    }

    /// `liminf_{r→0} r^2 ℓ(r)`: positive means the profile is at least
    /// inverse-square flat near 0.
    pub fn square_liminf(&self) -> f64 {
        match *self {
            Self::InverseSquare { amplitude } => amplitude,
            Self::Power {
                amplitude,
                exponent,
            } => {
                if exponent > 2.0 {
                    f64::INFINITY
                } else if exponent == 2.0 {
                    amplitude
                } else {
                    0.0
                }
            }
            Self::Log { .. } => 0.0,
        }
    }
}

/// Which distance feeds the profile.
#[derive(Debug, Clone)]
pub enum DistanceSource {
    /// Parabolic distance to a curve.
    Parabolic(Arc<Curve>),
    /// `max(sqrt(t), |x'|)`, distance to the `x_1` axis of the initial plane.
    Anisotropic,
    /// `h ≡ β`, no degeneracy.
    ConstantFloor(f64),
}

/// Value of `h` at one point together with an underflow flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HValue {
    pub value: f64,
    /// `exp(-ℓ)` fell below the smallest normal double and was set to 0.
    pub underflow: bool,
}

#[derive(Debug, Clone)]
pub struct Potential {
    pub profile: DecayProfile,
    pub distance: DistanceSource,
}

impl Potential {
    pub fn parabolic(profile: DecayProfile, curve: Arc<Curve>) -> Self {
        Self {
            profile,
            distance: DistanceSource::Parabolic(curve),
        }
    }

    pub fn anisotropic(profile: DecayProfile) -> Self {
        Self {
            profile,
            distance: DistanceSource::Anisotropic,
        }
    }

    pub fn constant(profile: DecayProfile, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::config(format!(
                "constant floor must be positive, got {beta}"
            )));
        }
        Ok(Self {
            profile,
            distance: DistanceSource::ConstantFloor(beta),
        })
    }

    /// Distance of `(x, t)` to the degeneracy set (`+inf` when the curve lies
    /// entirely in the future of `t`).
    pub fn distance(&self, x: &[f64], t: f64) -> Result<f64> {
        match &self.distance {
            DistanceSource::Parabolic(curve) => Ok(parabolic_distance(x, t, curve)?.value()),
            DistanceSource::Anisotropic => {
                if x.is_empty() {
                    return Err(Error::config(
                        "anisotropic distance needs at least one coordinate",
                    ));
                }
                if !(t >= 0.0) {
                    return Err(Error::domain(format!("time must be nonnegative, got {t}")));
                }
                Ok(anisotropic_distance(x[0], &x[1..], t))
            }
            DistanceSource::ConstantFloor(_) => Ok(f64::INFINITY),
        }
    }

    /// `ln h = -ℓ(d)`; `-inf` on the degeneracy set.
    pub fn ln_h(&self, x: &[f64], t: f64) -> Result<f64> {
        if let DistanceSource::ConstantFloor(beta) = self.distance {
            return Ok(beta.ln());
        }
        let d = self.distance(x, t)?;
        if d == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        if d.is_infinite() {
            // no curve point in the past: ℓ(∞) is the infimum of the profile
            return Ok(-self.profile_at_infinity());
        }
        Ok(-self.profile.eval(d)?)
    }

    fn profile_at_infinity(&self) -> f64 {
        match self.profile {
            DecayProfile::Log { .. } => 0.0,
            _ => 0.0,
        }
    }

    pub fn eval_h_flagged(&self, x: &[f64], t: f64) -> Result<HValue> {
        let ln = self.ln_h(x, t)?;
        if ln == f64::NEG_INFINITY {
            return Ok(HValue {
                value: 0.0,
                underflow: false,
            });
        }
        if ln < LN_MIN_POSITIVE {
            return Ok(HValue {
                value: 0.0,
                underflow: true,
            });
        }
        Ok(HValue {
            value: ln.exp(),
            underflow: false,
        })
    }

    pub fn eval_h(&self, x: &[f64], t: f64) -> Result<f64> {
        Ok(self.eval_h_flagged(x, t)?.value)
    }

    /// `(s^γ, exp(-ℓ(s) + γ ln s))` with `s = max(sqrt(t), |x'|)`; the
    /// product is `h(x, t)`.
    pub fn split_h(&self, gamma: f64, x: &[f64], t: f64) -> Result<(f64, f64)> {
        if !matches!(self.distance, DistanceSource::Anisotropic) {
            return Err(Error::config(
                "the weighted split needs the anisotropic distance",
            ));
        }
        if !(gamma >= 0.0) {
            return Err(Error::config(format!(
                "weight exponent must be nonnegative, got {gamma}"
            )));
        }
        let s = self.distance(x, t)?;
        if s == 0.0 {
            return Ok((if gamma == 0.0 { 1.0 } else { 0.0 }, 0.0));
        }
        let weight = s.powf(gamma);
        let reduced = self.profile.eval(s)? - gamma * s.ln();
        Ok((weight, (-reduced).exp()))
    }
}

/// Reject weight exponents that are too small for the supercritical line
/// construction: `γ` must exceed `N(p-1) - 2`.
pub fn validate_split_exponent(gamma: f64, dim: usize, p: f64) -> Result<()> {
    let bound = dim as f64 * (p - 1.0) - 2.0;
    if gamma > bound {
        Ok(())
    } else {
        Err(Error::config(format!(
            "weight exponent {gamma} must exceed N(p-1) - 2 = {bound}"
        )))
    }
}

/// Distance functional name used in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceKind {
    Parabolic,
    Anisotropic,
    ConstantFloor,
}

/// Configuration-file form of a potential (`[potential]` section).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub family: String,
    pub amplitude: f64,
    #[serde(default)]
    pub exponent: Option<f64>,
    pub distance: DistanceKind,
    /// Value of `h` for the constant-floor distance.
    #[serde(default)]
    pub floor: Option<f64>,
    /// Weight exponent of the split form.
    #[serde(default)]
    pub gamma: Option<f64>,
}

impl PotentialSpec {
    pub fn profile(&self) -> Result<DecayProfile> {
        match self.family.as_str() {
            "inverse-square" => DecayProfile::inverse_square(self.amplitude),
            "power" => DecayProfile::power(
                self.amplitude,
                self.exponent
                    .ok_or_else(|| Error::config("power family needs potential.exponent"))?,
            ),
            "log" => DecayProfile::log(self.amplitude),
            other => Err(Error::config(format!("unknown profile family `{other}`"))),
        }
    }

    pub fn build(&self, curve: Option<Arc<Curve>>) -> Result<Potential> {
        let profile = self.profile()?;
        match self.distance {
            DistanceKind::Parabolic => {
                let curve =
                    curve.ok_or_else(|| Error::config("parabolic distance needs a curve"))?;
                Ok(Potential::parabolic(profile, curve))
            }
            DistanceKind::Anisotropic => Ok(Potential::anisotropic(profile)),
            DistanceKind::ConstantFloor => Potential::constant(
                profile,
                self.floor.ok_or_else(|| {
                    Error::config("constant-floor distance needs potential.floor")
                })?,
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_examples() {
        assert!(
            (DecayProfile::inverse_square(10.0)
                .unwrap()
                .eval(0.1)
                .unwrap()
                - 1000.0)
                .abs()
                < 1e-9
        );
        assert_eq!(
            DecayProfile::power(1.0, 1.0).unwrap().eval(0.5).unwrap(),
            2.0
        );
        let l = DecayProfile::log(1.0)
            .unwrap()
            .eval((-1.0f64).exp())
            .unwrap();
        assert!((l - 1.0).abs() < 1e-15);
        assert_eq!(DecayProfile::log(1.0).unwrap().eval(3.0).unwrap(), 0.0);
        assert!(matches!(
            DecayProfile::inverse_square(1.0).unwrap().eval(0.0),
            Err(Error::Domain(_))
        ));
        assert!(DecayProfile::power(1.0, 0.0).is_err());
    }

    #[test]
    fn h_on_curve_and_at_unit_distance() {
        let curve = Arc::new(Curve::straight(&[0.0], 1.0, 11).unwrap());
        let pot = Potential::parabolic(DecayProfile::inverse_square(10.0).unwrap(), curve);
        assert_eq!(pot.eval_h(&[0.0], 0.5).unwrap(), 0.0);
        // d = |x| + 0 at t = 0 with the origin sample
        let h = pot.eval_h(&[1.0], 0.0).unwrap();
        assert!((h - (-10.0f64).exp()).abs() < 1e-18);
    }

    #[test]
    fn underflow_flagged() {
        let pot = Potential::anisotropic(DecayProfile::inverse_square(10.0).unwrap());
        let v = pot.eval_h_flagged(&[0.0, 0.01], 0.0).unwrap();
        assert_eq!(v.value, 0.0);
        assert!(v.underflow);
    }

    #[test]
    fn constant_floor() {
        let pot = Potential::constant(DecayProfile::log(1.0).unwrap(), 1.0).unwrap();
        assert_eq!(pot.eval_h(&[3.0], 2.0).unwrap(), 1.0);
    }

    #[test]
    fn split_gating() {
        assert!(validate_split_exponent(2.5, 2, 3.0).is_ok());
        assert!(validate_split_exponent(2.0, 2, 3.0).is_err());
        let pot = Potential::anisotropic(DecayProfile::inverse_square(1.0).unwrap());
        let (w, e) = pot.split_h(0.0, &[0.0, 0.5], 0.1).unwrap();
        assert_eq!(w, 1.0);
        assert!((e - pot.eval_h(&[0.0, 0.5], 0.1).unwrap()).abs() < 1e-16);
    }
}
