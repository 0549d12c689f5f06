use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Degree-of-truth function for one linguistic term.
///
/// Piecewise-linear functions interpolate between breakpoints and hold the
/// first/last degree constant outside the breakpoint range. A crisp point is
/// 1 exactly at `location` and 0 everywhere else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MembershipFunction {
    PiecewiseLinear { breakpoints: Vec<(f64, f64)> },
    CrispPoint { location: f64 },
}

impl MembershipFunction {
    pub fn piecewise(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        let mf = MembershipFunction::PiecewiseLinear { breakpoints };
        mf.validate()?;
        Ok(mf)
    }

    pub fn crisp(location: f64) -> Self {
        MembershipFunction::CrispPoint { location }
    }

    /// Ramp from degree 0 at `zero_at` to degree 1 at `one_at`. Either
    /// direction is allowed.
    pub fn ramp(zero_at: f64, one_at: f64) -> Result<Self> {
        if zero_at < one_at {
            Self::piecewise(vec![(zero_at, 0.0), (one_at, 1.0)])
        } else {
            Self::piecewise(vec![(one_at, 1.0), (zero_at, 0.0)])
        }
    }

    pub fn triangle(left: f64, peak: f64, right: f64) -> Result<Self> {
        Self::piecewise(vec![(left, 0.0), (peak, 1.0), (right, 0.0)])
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MembershipFunction::PiecewiseLinear { breakpoints } => {
                if breakpoints.is_empty() {
                    return Err(Error::param("piecewise-linear membership needs at least one breakpoint"));
                }
                for &(x, d) in breakpoints {
                    if !x.is_finite() || !(0.0..=1.0).contains(&d) {
                        return Err(Error::param(format!(
                            "breakpoint ({x}, {d}) outside finite abscissa / [0,1] degree"
                        )));
                    }
                }
                if breakpoints.windows(2).any(|w| w[0].0 >= w[1].0) {
                    return Err(Error::param("breakpoint abscissas must be strictly increasing"));
                }
                Ok(())
            }
            MembershipFunction::CrispPoint { location } => {
                if location.is_finite() {
                    Ok(())
                } else {
                    Err(Error::param("crisp-point location must be finite"))
                }
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            MembershipFunction::CrispPoint { location } => {
                if x == *location {
                    1.0
                } else {
                    0.0
                }
            }
            MembershipFunction::PiecewiseLinear { breakpoints } => {
                let (x0, d0) = breakpoints[0];
                if x <= x0 {
                    return d0;
                }
                let (xn, dn) = breakpoints[breakpoints.len() - 1];
                if x >= xn {
                    return dn;
                }
                // first segment whose right end is beyond x
                let k = breakpoints.partition_point(|&(bx, _)| bx <= x);
                let (xa, da) = breakpoints[k - 1];
                let (xb, db) = breakpoints[k];
                let s = (x - xa) / (xb - xa);
                (da + s * (db - da)).clamp(0.0, 1.0)
            }
        }
    }
}
