//! Textual prior specifications shared by the models and the CLI.
//!
//! Grammar: `family[:key=value,...]`, e.g. `global:m=-0.56,v=0.0144`,
//! `truncbeta:a=5100,b=4900,l=0.5,u=1`, `halfnormal:s=0.02`, `flat`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::engine::Locality;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorSpec {
    /// `N(mean, variance)`, independent of the tested value.
    GlobalNormal { mean: f64, variance: f64 },
    /// `N(theta0, variance)`, centred on the tested value.
    LocalNormal { variance: f64 },
    /// Point mass at `theta0 + shift`.
    PointShift { shift: f64 },
    /// `Beta(a, b)` truncated to `[lower, upper]`.
    TruncBeta { a: f64, b: f64, lower: f64, upper: f64 },
    HalfNormal { scale: f64 },
    /// Improper uniform prior.
    Flat,
}

impl PriorSpec {
    pub fn locality(&self) -> Locality {
        match self {
            PriorSpec::LocalNormal { .. } | PriorSpec::PointShift { .. } => Locality::Local,
            _ => Locality::Global,
        }
    }

    pub fn is_proper(&self) -> bool {
        !matches!(self, PriorSpec::Flat)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::domain(alloc::format!("prior parameter {name} must be > 0, got {v}")))
            }
        };
        match *self {
            PriorSpec::GlobalNormal { mean, variance } => {
                if !mean.is_finite() {
                    return Err(Error::domain("prior mean must be finite"));
                }
                positive("v", variance)
            }
            PriorSpec::LocalNormal { variance } => positive("v", variance),
            PriorSpec::PointShift { shift } => positive("d", shift),
            PriorSpec::TruncBeta { a, b, lower, upper } => {
                positive("a", a)?;
                positive("b", b)?;
                if !(0.0 <= lower && lower < upper && upper <= 1.0) {
                    return Err(Error::domain(alloc::format!(
                        "truncation needs 0 <= l < u <= 1, got [{lower}, {upper}]"
                    )));
                }
                Ok(())
            }
            PriorSpec::HalfNormal { scale } => positive("s", scale),
            PriorSpec::Flat => Ok(()),
        }
    }
}

impl fmt::Display for PriorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorSpec::GlobalNormal { mean, variance } => write!(f, "global:m={mean},v={variance}"),
            PriorSpec::LocalNormal { variance } => write!(f, "local:v={variance}"),
            PriorSpec::PointShift { shift } => write!(f, "point:d={shift}"),
            PriorSpec::TruncBeta { a, b, lower, upper } => {
                write!(f, "truncbeta:a={a},b={b},l={lower},u={upper}")
            }
            PriorSpec::HalfNormal { scale } => write!(f, "halfnormal:s={scale}"),
            PriorSpec::Flat => write!(f, "flat"),
        }
    }
}

fn parse_params(family: &str, body: &str) -> Result<Vec<(String, f64)>> {
    if body.trim().is_empty() {
        return Ok(Vec::new());
    }
    body.split(',')
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::domain(alloc::format!("{family}: expected key=value, got '{kv}'")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::domain(alloc::format!("{family}: '{v}' is not a number")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

impl FromStr for PriorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (family, body) = s.split_once(':').unwrap_or((s, ""));
        let family = family.trim().to_ascii_lowercase();
        let params = parse_params(&family, body)?;
        let take = |key: &str| -> Result<f64> {
            params
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::domain(alloc::format!("prior '{family}' needs parameter '{key}'")))
        };
        let spec = match family.as_str() {
            "global" | "normal" => PriorSpec::GlobalNormal { mean: take("m")?, variance: take("v")? },
            "local" => PriorSpec::LocalNormal { variance: take("v")? },
            "point" | "shift" => PriorSpec::PointShift { shift: take("d")? },
            "truncbeta" => PriorSpec::TruncBeta {
                a: take("a")?,
                b: take("b")?,
                lower: take("l")?,
                upper: take("u")?,
            },
            "beta" => PriorSpec::TruncBeta { a: take("a")?, b: take("b")?, lower: 0.0, upper: 1.0 },
            "halfnormal" => PriorSpec::HalfNormal { scale: take("s")? },
            "flat" => PriorSpec::Flat,
            other => return Err(Error::domain(alloc::format!("unknown prior family '{other}'"))),
        };
        let known: &[&str] = match spec {
            PriorSpec::GlobalNormal { .. } => &["m", "v"],
            PriorSpec::LocalNormal { .. } => &["v"],
            PriorSpec::PointShift { .. } => &["d"],
            PriorSpec::TruncBeta { .. } if family == "beta" => &["a", "b"],
            PriorSpec::TruncBeta { .. } => &["a", "b", "l", "u"],
            PriorSpec::HalfNormal { .. } => &["s"],
            PriorSpec::Flat => &[],
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !known.contains(&k.as_str())) {
            return Err(Error::domain(alloc::format!("prior '{family}' has no parameter '{k}'")));
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn parses_each_family() {
        assert_eq!(
            "global:m=-0.56,v=0.0144".parse::<PriorSpec>().unwrap(),
            PriorSpec::GlobalNormal { mean: -0.56, variance: 0.0144 }
        );
        assert_eq!("local:v=4".parse::<PriorSpec>().unwrap(), PriorSpec::LocalNormal { variance: 4.0 });
        assert_eq!("point:d=0.1".parse::<PriorSpec>().unwrap(), PriorSpec::PointShift { shift: 0.1 });
        assert_eq!(
            "truncbeta:a=5100,b=4900,l=0.5,u=1".parse::<PriorSpec>().unwrap(),
            PriorSpec::TruncBeta { a: 5100.0, b: 4900.0, lower: 0.5, upper: 1.0 }
        );
        assert_eq!("halfnormal:s=0.02".parse::<PriorSpec>().unwrap(), PriorSpec::HalfNormal { scale: 0.02 });
        assert_eq!("flat".parse::<PriorSpec>().unwrap(), PriorSpec::Flat);
    }

    #[test]
    fn display_roundtrips() {
        for s in ["global:m=-0.56,v=0.0144", "local:v=4", "truncbeta:a=2,b=3,l=0.1,u=0.9", "flat"] {
            let p: PriorSpec = s.parse().unwrap();
            assert_eq!(p.to_string().parse::<PriorSpec>().unwrap(), p);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!("global:m=0".parse::<PriorSpec>().is_err());
        assert!("global:m=0,v=-1".parse::<PriorSpec>().is_err());
        assert!("local:v=1,x=2".parse::<PriorSpec>().is_err());
        assert!("truncbeta:a=1,b=1,l=0.6,u=0.4".parse::<PriorSpec>().is_err());
        assert!("cauchy:s=1".parse::<PriorSpec>().is_err());
        assert!("local:v=abc".parse::<PriorSpec>().is_err());
    }
}
