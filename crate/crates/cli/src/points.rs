//! Point literals (`z1=a+bi,z2=c+di,v=e`) and seeded sampling.
//!
//! Every point is held as exact rationals. Decimal input is accepted but
//! remembered, since the exact backend refuses it.

use crparallax_core::{Base, Scalar};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sampling grid: coordinates are multiples of `1 / GRID`.
pub const GRID: i64 = 1000;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("bad point '{input}': {message}")]
pub struct PointError {
    pub input: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ComplexQ {
    pub re: BigRational,
    pub im: BigRational,
}

impl ComplexQ {
    pub fn to_scalar<S: Scalar>(&self) -> S {
        S::from_gaussian(&self.re, &self.im)
    }

    fn add(&self, o: &ComplexQ) -> ComplexQ {
        ComplexQ {
            re: &self.re + &o.re,
            im: &self.im + &o.im,
        }
    }
}

/// A base point with rational coordinates. `v` is real.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PointSpec {
    pub z1: ComplexQ,
    pub z2: ComplexQ,
    pub v: BigRational,
    /// Some coordinate was written as a decimal.
    pub decimal: bool,
}

impl PointSpec {
    /// Parses `z1=...,z2=...,v=...`; missing coordinates are 0.
    pub fn parse(s: &str) -> Result<Self, PointError> {
        let err = |m: &str| PointError {
            input: s.to_owned(),
            message: m.to_owned(),
        };
        let mut p = PointSpec::default();
        let mut seen = [false; 3];
        for part in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (key, val) = part.split_once('=').ok_or_else(|| err("expected key=value"))?;
            let (c, dec) = parse_complex(val.trim()).map_err(|m| err(&m))?;
            p.decimal |= dec;
            let slot = match key.trim() {
                "z1" => 0,
                "z2" => 1,
                "v" => 2,
                k => return Err(err(&format!("unknown coordinate '{k}'"))),
            };
            if seen[slot] {
                return Err(err("coordinate given twice"));
            }
            seen[slot] = true;
            match slot {
                0 => p.z1 = c,
                1 => p.z2 = c,
                _ => {
                    if !c.im.is_zero() {
                        return Err(err("v must be real"));
                    }
                    p.v = c.re;
                }
            }
        }
        Ok(p)
    }

    pub fn base<S: Scalar>(&self) -> Base<S> {
        Base {
            z1: self.z1.to_scalar(),
            z2: self.z2.to_scalar(),
            v: S::from_gaussian(&self.v, &BigRational::zero()),
        }
    }

    pub fn swapped(&self) -> PointSpec {
        PointSpec {
            z1: self.z2.clone(),
            z2: self.z1.clone(),
            ..self.clone()
        }
    }

    fn offset(&self, by: &PointSpec) -> PointSpec {
        PointSpec {
            z1: self.z1.add(&by.z1),
            z2: self.z2.add(&by.z2),
            v: &self.v + &by.v,
            decimal: self.decimal || by.decimal,
        }
    }
}

fn parse_real(s: &str) -> Result<(BigRational, bool), String> {
    let bad = || format!("cannot read number '{s}'");
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    if body.is_empty() {
        return Err(bad());
    }
    let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    let (value, decimal) = if let Some((n, d)) = body.split_once('/') {
        if !digits(n) || !digits(d) {
            return Err(bad());
        }
        let d: BigInt = d.parse().unwrap();
        if d.is_zero() {
            return Err(format!("zero denominator in '{s}'"));
        }
        (BigRational::new(n.parse().unwrap(), d), false)
    } else if let Some((w, f)) = body.split_once('.') {
        if !(w.is_empty() || digits(w)) || !(f.is_empty() || digits(f)) || (w.is_empty() && f.is_empty()) {
            return Err(bad());
        }
        let n: BigInt = format!("{w}{f}").parse().unwrap();
        let d = num_traits::pow(BigInt::from(10), f.len());
        (BigRational::new(n, d), true)
    } else if digits(body) {
        (BigRational::from_integer(body.parse().unwrap()), false)
    } else {
        return Err(bad());
    };
    Ok((if neg { -value } else { value }, decimal))
}

/// `a`, `bi`, `a+bi`, `a-bi`, `i`, `-i`, with rational or decimal parts.
pub fn parse_complex(s: &str) -> Result<(ComplexQ, bool), String> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err("empty number".to_owned());
    }
    let Some(head) = s.strip_suffix('i') else {
        let (re, dec) = parse_real(&s)?;
        return Ok((ComplexQ { re, im: BigRational::zero() }, dec));
    };
    let split = head.rfind(['+', '-']).filter(|&p| p > 0);
    let (re_part, im_part) = match split {
        Some(p) => (&head[..p], &head[p..]),
        None => ("", head),
    };
    let (re, d1) = if re_part.is_empty() {
        (BigRational::zero(), false)
    } else {
        parse_real(re_part)?
    };
    let (im, d2) = match im_part {
        "" | "+" => (BigRational::one(), false),
        "-" => (-BigRational::one(), false),
        t => parse_real(t)?,
    };
    Ok((ComplexQ { re, im }, d1 || d2))
}

/// `count` candidates: z1 and z2 uniform on the grid inside discs of radius
/// `radius`, v uniform on the grid in `[-radius, radius]`, all offset by
/// `center`.
pub fn sample(seed: u64, count: usize, radius: f64, center: &PointSpec) -> Vec<PointSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = (radius * GRID as f64).floor().max(0.0) as i64;
    let q = |n: i64| BigRational::new(BigInt::from(n), BigInt::from(GRID));
    let disc = |rng: &mut ChaCha8Rng| loop {
        let (a, b) = (rng.random_range(-r..=r), rng.random_range(-r..=r));
        if a * a + b * b <= r * r {
            return ComplexQ { re: q(a), im: q(b) };
        }
    };
    (0..count)
        .map(|_| {
            let z1 = disc(&mut rng);
            let z2 = disc(&mut rng);
            let v = q(rng.random_range(-r..=r));
            PointSpec {
                z1,
                z2,
                v,
                decimal: false,
            }
            .offset(center)
        })
        .collect()
}

fn render_q(q: &BigRational) -> String {
    q.to_string()
}

fn render_c(c: &ComplexQ) -> String {
    if c.im.is_zero() {
        return render_q(&c.re);
    }
    let sign = if c.im.is_negative() { "-" } else { "+" };
    format!("{}{}{}i", render_q(&c.re), sign, render_q(&c.im.abs()))
}

impl std::fmt::Display for PointSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "z1={},z2={},v={}", render_c(&self.z1), render_c(&self.z2), render_q(&self.v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crparallax_core::C64;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn complex_forms() {
        let c = |s| parse_complex(s).unwrap().0;
        assert_eq!(c("1/2-3i"), ComplexQ { re: q(1, 2), im: q(-3, 1) });
        assert_eq!(c("i"), ComplexQ { re: q(0, 1), im: q(1, 1) });
        assert_eq!(c("-i"), ComplexQ { re: q(0, 1), im: q(-1, 1) });
        assert_eq!(c("-2/7i"), ComplexQ { re: q(0, 1), im: q(-2, 7) });
        assert_eq!(c("0.25+0.5i"), ComplexQ { re: q(1, 4), im: q(1, 2) });
        assert!(parse_complex("0.25").unwrap().1);
        assert!(!parse_complex("1/4").unwrap().1);
        assert!(parse_complex("1/0").is_err());
        assert!(parse_complex("abc").is_err());
        assert!(parse_complex("1..2").is_err());
    }

    #[test]
    fn point_literal() {
        let p = PointSpec::parse("z1=1/10+1/5i,z2=-1/5+1/10i,v=1/7").unwrap();
        assert_eq!(p.z1, ComplexQ { re: q(1, 10), im: q(1, 5) });
        assert_eq!(p.v, q(1, 7));
        assert!(!p.decimal);
        let b: Base<C64> = p.base();
        assert_eq!(b.z2, C64::new(-0.2, 0.1));
        assert_eq!(PointSpec::parse("z2=1").unwrap().z1, ComplexQ::default());
        assert!(PointSpec::parse("v=i").is_err());
        assert!(PointSpec::parse("w=1").is_err());
        assert!(PointSpec::parse("z1=1,z1=2").is_err());
    }

    #[test]
    fn sampling_is_reproducible_and_in_box() {
        let center = PointSpec::parse("z1=1,z2=1").unwrap();
        let a = sample(7, 50, 0.2, &center);
        assert_eq!(a, sample(7, 50, 0.2, &center));
        assert_ne!(a, sample(8, 50, 0.2, &center));
        for p in &a {
            let b: Base<C64> = p.base();
            assert!((b.z1 - C64::new(1.0, 0.0)).norm() <= 0.2 + 1e-12);
            assert!((b.z2 - C64::new(1.0, 0.0)).norm() <= 0.2 + 1e-12);
            assert!(b.v.re.abs() <= 0.2 && b.v.im == 0.0);
        }
    }

    proptest! {
        #[test]
        fn display_round_trips(a in -50i64..50, b in 1i64..20, c in -50i64..50, d in -50i64..50) {
            let p = PointSpec {
                z1: ComplexQ { re: q(a, b), im: q(c, b) },
                z2: ComplexQ { re: q(d, 3), im: q(0, 1) },
                v: q(c, 7),
                decimal: false,
            };
            prop_assert_eq!(PointSpec::parse(&p.to_string()).unwrap(), p);
        }
    }
}
