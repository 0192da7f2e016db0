//! Named catalog of profile functions.
//!
//! Initial profiles, boundary densities and test functions are drawn from a
//! small declarative catalog so that experiment configs stay portable text.
//! Descriptors parse from and print to a canonical `name(args)` form:
//!
//! ```text
//!   constant(0.5)
//!   cosine(1,0.5,0.25)     base + amp * cos(pi * u_axis)   (axis is 1-based)
//!   sine(1,0.5,0.25)       base + amp * sin(pi * u_axis)
//!   affine(0.5,0.1,-0.2)   base + sum_i slope_i * u_i      (one slope per axis)
//! ```

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileFn<F: Scalar> {
    Constant { value: F },
    /// `base + amplitude * cos(pi * u[axis])`, axis 0-based internally.
    Cosine { axis: usize, base: F, amplitude: F },
    /// `base + amplitude * sin(pi * u[axis])`.
    Sine { axis: usize, base: F, amplitude: F },
    /// `base + sum_i slopes[i] * u[i]`.
    Affine { base: F, slopes: Vec<F> },
}

impl<F: Scalar> ProfileFn<F> {
    pub fn constant(value: F) -> Self {
        ProfileFn::Constant { value }
    }

    pub fn eval(&self, u: &[F]) -> F {
        let pi = F::of(std::f64::consts::PI);
        match self {
            ProfileFn::Constant { value } => *value,
            ProfileFn::Cosine { axis, base, amplitude } => {
                *base + *amplitude * (pi * u[*axis]).cos()
            }
            ProfileFn::Sine { axis, base, amplitude } => {
                *base + *amplitude * (pi * u[*axis]).sin()
            }
            ProfileFn::Affine { base, slopes } => {
                let mut acc = *base;
                for (s, x) in slopes.iter().zip(u) {
                    acc += *s * *x;
                }
                acc
            }
        }
    }

    /// Check the descriptor makes sense in dimension `d`.
    pub fn validate_dim(&self, d: usize) -> Result<()> {
        match self {
            ProfileFn::Constant { .. } => Ok(()),
            ProfileFn::Cosine { axis, .. } | ProfileFn::Sine { axis, .. } => {
                if *axis < d {
                    Ok(())
                } else {
                    Err(Error::Config(format!(
                        "axis {} out of range for dimension {d}",
                        axis + 1
                    )))
                }
            }
            ProfileFn::Affine { slopes, .. } => {
                if slopes.len() == d {
                    Ok(())
                } else {
                    Err(Error::Config(format!(
                        "affine profile has {} slopes, expected {d}",
                        slopes.len()
                    )))
                }
            }
        }
    }

    /// Exact range of the function over the closed unit hypercube.
    pub fn range(&self, _d: usize) -> (F, F) {
        match self {
            ProfileFn::Constant { value } => (*value, *value),
            ProfileFn::Cosine { base, amplitude, .. } => {
                // cos spans [-1, 1] over u in [0, 1]
                (*base - amplitude.abs(), *base + amplitude.abs())
            }
            ProfileFn::Sine { base, amplitude, .. } => {
                // sin spans [0, 1] over u in [0, 1]
                let a = *base;
                let b = *base + *amplitude;
                (a.min(b), a.max(b))
            }
            ProfileFn::Affine { base, slopes } => {
                let mut lo = *base;
                let mut hi = *base;
                for &s in slopes {
                    lo += s.min(F::zero());
                    hi += s.max(F::zero());
                }
                (lo, hi)
            }
        }
    }

    /// Exact range over the boundary of the hypercube. In `d >= 2` every
    /// single-coordinate value is attained on some face, so this matches
    /// [`range`](Self::range); in `d = 1` the boundary is the two endpoints.
    pub fn boundary_range(&self, d: usize) -> (F, F) {
        if d >= 2 {
            return self.range(d);
        }
        let lo = self.eval(&[F::zero()]);
        let hi = self.eval(&[F::one()]);
        (lo.min(hi), lo.max(hi))
    }

    /// Sup norm over the closed hypercube.
    pub fn sup_norm(&self, d: usize) -> F {
        let (lo, hi) = self.range(d);
        lo.abs().max(hi.abs())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let open = text
            .find('(')
            .ok_or_else(|| Error::Config(format!("malformed profile `{text}`: missing `(`")))?;
        if !text.ends_with(')') {
            return Err(Error::Config(format!(
                "malformed profile `{text}`: missing `)`"
            )));
        }
        let name = &text[..open];
        let args: Vec<&str> = text[open + 1..text.len() - 1]
            .split(',')
            .map(str::trim)
            .collect();
        let num = |s: &str| -> Result<F> {
            s.parse::<f64>()
                .map(F::of)
                .map_err(|_| Error::Config(format!("bad number `{s}` in profile `{text}`")))
        };
        let axis = |s: &str| -> Result<usize> {
            let a: usize = s
                .parse()
                .map_err(|_| Error::Config(format!("bad axis `{s}` in profile `{text}`")))?;
            if a == 0 {
                return Err(Error::Config(format!("axes are 1-based in `{text}`")));
            }
            Ok(a - 1)
        };
        match name {
            "constant" => {
                if args.len() != 1 {
                    return Err(Error::Config(format!("constant takes 1 arg: `{text}`")));
                }
                Ok(ProfileFn::Constant { value: num(args[0])? })
            }
            "cosine" | "sine" => {
                if args.len() != 3 {
                    return Err(Error::Config(format!("{name} takes 3 args: `{text}`")));
                }
                let (a, base, amplitude) = (axis(args[0])?, num(args[1])?, num(args[2])?);
                Ok(if name == "cosine" {
                    ProfileFn::Cosine { axis: a, base, amplitude }
                } else {
                    ProfileFn::Sine { axis: a, base, amplitude }
                })
            }
            "affine" => {
                if args.len() < 2 {
                    return Err(Error::Config(format!(
                        "affine takes base plus one slope per axis: `{text}`"
                    )));
                }
                let base = num(args[0])?;
                let slopes = args[1..].iter().map(|s| num(s)).collect::<Result<_>>()?;
                Ok(ProfileFn::Affine { base, slopes })
            }
            other => Err(Error::Config(format!("unknown profile `{other}`"))),
        }
    }
}

impl<F: Scalar> std::fmt::Display for ProfileFn<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProfileFn::Constant { value } => write!(f, "constant({value})"),
            ProfileFn::Cosine { axis, base, amplitude } => {
                write!(f, "cosine({},{base},{amplitude})", axis + 1)
            }
            ProfileFn::Sine { axis, base, amplitude } => {
                write!(f, "sine({},{base},{amplitude})", axis + 1)
            }
            ProfileFn::Affine { base, slopes } => {
                write!(f, "affine({base}")?;
                for s in slopes {
                    write!(f, ",{s}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl<F: Scalar> serde::Serialize for ProfileFn<F> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de, F: Scalar> serde::Deserialize<'de> for ProfileFn<F> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        ProfileFn::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        for text in [
            "constant(0.5)",
            "cosine(1,0.5,0.25)",
            "sine(2,0.5,-0.25)",
            "affine(0.35,0.3,0)",
        ] {
            let p = ProfileFn::<f64>::parse(text).unwrap();
            assert_eq!(p.to_string(), text);
            let again = ProfileFn::<f64>::parse(&p.to_string()).unwrap();
            assert_eq!(again, p);
        }
        assert!(ProfileFn::<f64>::parse("bogus(1)").is_err());
        assert!(ProfileFn::<f64>::parse("cosine(0,0.5,0.2)").is_err());
        assert!(ProfileFn::<f64>::parse("constant()").is_err());
    }

    #[test]
    fn eval_matches_definitions() {
        let p = ProfileFn::<f64>::parse("cosine(1,0.5,0.25)").unwrap();
        assert!((p.eval(&[0.0, 0.9]) - 0.75).abs() < 1e-15);
        assert!((p.eval(&[1.0, 0.1]) - 0.25).abs() < 1e-15);
        let p = ProfileFn::<f64>::parse("sine(1,0.5,0.25)").unwrap();
        assert!((p.eval(&[0.5]) - 0.75).abs() < 1e-15);
        let p = ProfileFn::<f64>::parse("affine(0.2,0.1,0.3)").unwrap();
        assert!((p.eval(&[1.0, 0.5]) - 0.45).abs() < 1e-15);
    }

    #[test]
    fn ranges() {
        let p = ProfileFn::<f64>::parse("cosine(1,0.5,-0.2)").unwrap();
        assert_eq!(p.range(2), (0.3, 0.7));
        let p = ProfileFn::<f64>::parse("sine(1,0.5,0.25)").unwrap();
        assert_eq!(p.range(2), (0.5, 0.75));
        // in d = 1 the sine bump vanishes at both boundary points
        assert_eq!(p.boundary_range(1), (0.5, 0.5));
        assert_eq!(p.boundary_range(2), (0.5, 0.75));
        let p = ProfileFn::<f64>::parse("affine(0.5,0.2,-0.1)").unwrap();
        assert_eq!(p.range(2), (0.4, 0.7));
        assert_eq!(p.sup_norm(2), 0.7);
    }
}
