//! Coordinate arithmetic for the two numeric modes.
//!
//! Exact mode works in the real quadratic field Q(√D): every value is
//! `a + b√D` with rational `a`, `b`, and all comparisons are decided by exact
//! sign computations (no rounding anywhere). Float mode is plain `f64`; any
//! boundary decision in float mode is made by the caller against the scheme
//! tolerance.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

/// Numeric mode of a scheme and everything derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Mode {
    /// Exact arithmetic in Q(√D). Supported discriminants: 2, 3, 5.
    Exact { d: u32 },
    /// Double precision with a global comparison tolerance.
    Float { tolerance: f64 },
}

impl Mode {
    pub fn is_exact(&self) -> bool {
        matches!(self, Mode::Exact { .. })
    }

    /// Tolerance used for membership decisions; zero in exact mode.
    pub fn tolerance(&self) -> f64 {
        match self {
            Mode::Exact { .. } => 0.0,
            Mode::Float { tolerance } => *tolerance,
        }
    }
}

/// Element `a + b√d` of a real quadratic field, exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadRat {
    pub a: BigRational,
    pub b: BigRational,
    pub d: u32,
}

fn big(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl QuadRat {
    pub fn new(a: BigRational, b: BigRational, d: u32) -> Self {
        QuadRat { a, b, d }
    }

    pub fn from_int(n: i64, d: u32) -> Self {
        QuadRat::new(big(n), BigRational::zero(), d)
    }

    pub fn zero(d: u32) -> Self {
        QuadRat::from_int(0, d)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    /// Galois conjugate `a - b√d`.
    pub fn conjugate(&self) -> Self {
        QuadRat::new(self.a.clone(), -self.b.clone(), self.d)
    }

    /// Sign of the real value, computed without rounding.
    pub fn sign(&self) -> Ordering {
        let sa = sign_of(&self.a);
        if self.b.is_zero() {
            return sa;
        }
        let sb = sign_of(&self.b);
        if self.a.is_zero() {
            return sb;
        }
        if sa == sb {
            return sa;
        }
        // Opposite signs: compare |a|^2 against d*|b|^2. The sign of the sum
        // follows the larger magnitude.
        let a2 = &self.a * &self.a;
        let db2 = &self.b * &self.b * big(self.d as i64);
        match a2.cmp(&db2) {
            Ordering::Greater => sa,
            Ordering::Less => sb,
            Ordering::Equal => Ordering::Equal,
        }
    }

    pub fn checked_add(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.d, rhs.d, "mixed discriminants");
        QuadRat::new(&self.a + &rhs.a, &self.b + &rhs.b, self.d)
    }

    pub fn checked_sub(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.d, rhs.d, "mixed discriminants");
        QuadRat::new(&self.a - &rhs.a, &self.b - &rhs.b, self.d)
    }

    pub fn checked_mul(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.d, rhs.d, "mixed discriminants");
        let d = big(self.d as i64);
        QuadRat::new(
            &self.a * &rhs.a + &self.b * &rhs.b * &d,
            &self.a * &rhs.b + &self.b * &rhs.a,
            self.d,
        )
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inverse(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        // 1/(a + b√d) = (a - b√d) / (a² - d b²); the norm is nonzero because
        // √d is irrational for the supported d.
        let norm = &self.a * &self.a - &self.b * &self.b * big(self.d as i64);
        debug_assert!(!norm.is_zero());
        Some(QuadRat::new(&self.a / &norm, -&self.b / &norm, self.d))
    }

    pub fn neg(&self) -> Self {
        QuadRat::new(-self.a.clone(), -self.b.clone(), self.d)
    }

    pub fn to_f64(&self) -> f64 {
        let a = self.a.to_f64().unwrap_or(f64::NAN);
        let b = self.b.to_f64().unwrap_or(f64::NAN);
        a + b * (self.d as f64).sqrt()
    }

    /// Largest integer `n` with `n <= self`, decided exactly.
    pub fn floor_int(&self) -> BigInt {
        if self.b.is_zero() {
            return self.a.floor().to_integer();
        }
        let approx = self.to_f64().floor();
        let mut n = BigInt::from_f64(approx).unwrap_or_else(BigInt::zero);
        // Correct the float guess exactly; at most a couple of steps.
        loop {
            let lo = QuadRat::new(BigRational::from_integer(n.clone()), BigRational::zero(), self.d);
            if self.cmp_exact(&lo) == Ordering::Less {
                n -= 1;
                continue;
            }
            let hi = QuadRat::new(
                BigRational::from_integer(&n + BigInt::one()),
                BigRational::zero(),
                self.d,
            );
            if self.cmp_exact(&hi) != Ordering::Less {
                n += 1;
                continue;
            }
            return n;
        }
    }

    pub fn cmp_exact(&self, rhs: &Self) -> Ordering {
        self.checked_sub(rhs).sign()
    }
}

/// A coordinate in either numeric mode.
///
/// Arithmetic between the two variants is a logic error and panics; all values
/// flowing through one scheme share its mode.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Exact(QuadRat),
    Float(f64),
}

impl Scalar {
    pub fn zero(mode: Mode) -> Self {
        match mode {
            Mode::Exact { d } => Scalar::Exact(QuadRat::zero(d)),
            Mode::Float { .. } => Scalar::Float(0.0),
        }
    }

    pub fn from_int(n: i64, mode: Mode) -> Self {
        match mode {
            Mode::Exact { d } => Scalar::Exact(QuadRat::from_int(n, d)),
            Mode::Float { .. } => Scalar::Float(n as f64),
        }
    }

    /// Exact conversion of an `f64` (every finite float is rational).
    pub fn from_f64(v: f64, mode: Mode) -> Self {
        match mode {
            Mode::Exact { d } => {
                let r = BigRational::from_f64(v).expect("finite float");
                Scalar::Exact(QuadRat::new(r, BigRational::zero(), d))
            }
            Mode::Float { .. } => Scalar::Float(v),
        }
    }

    pub fn from_rational(num: i64, den: i64, mode: Mode) -> Self {
        match mode {
            Mode::Exact { d } => Scalar::Exact(QuadRat::new(
                BigRational::new(BigInt::from(num), BigInt::from(den)),
                BigRational::zero(),
                d,
            )),
            Mode::Float { .. } => Scalar::Float(num as f64 / den as f64),
        }
    }

    /// `a/b + (c/e)·√D` in exact mode; evaluated numerically in float mode.
    pub fn from_parts(a: (i64, i64), b: (i64, i64), mode: Mode) -> Self {
        match mode {
            Mode::Exact { d } => Scalar::Exact(QuadRat::new(
                BigRational::new(BigInt::from(a.0), BigInt::from(a.1)),
                BigRational::new(BigInt::from(b.0), BigInt::from(b.1)),
                d,
            )),
            Mode::Float { .. } => {
                panic!("from_parts needs an exact mode to carry a surd part")
            }
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(q) => q.to_f64(),
            Scalar::Float(v) => *v,
        }
    }

    pub fn add(&self, rhs: &Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a.checked_add(b)),
            (Scalar::Float(a), Scalar::Float(b)) => Scalar::Float(a + b),
            _ => panic!("mixed scalar modes"),
        }
    }

    pub fn sub(&self, rhs: &Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a.checked_sub(b)),
            (Scalar::Float(a), Scalar::Float(b)) => Scalar::Float(a - b),
            _ => panic!("mixed scalar modes"),
        }
    }

    pub fn mul(&self, rhs: &Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a.checked_mul(b)),
            (Scalar::Float(a), Scalar::Float(b)) => Scalar::Float(a * b),
            _ => panic!("mixed scalar modes"),
        }
    }

    pub fn neg(&self) -> Scalar {
        match self {
            Scalar::Exact(a) => Scalar::Exact(a.neg()),
            Scalar::Float(a) => Scalar::Float(-a),
        }
    }

    pub fn abs(&self) -> Scalar {
        match self.sign() {
            Ordering::Less => self.neg(),
            _ => self.clone(),
        }
    }

    pub fn inverse(&self) -> Option<Scalar> {
        match self {
            Scalar::Exact(a) => a.inverse().map(Scalar::Exact),
            Scalar::Float(a) => {
                if *a == 0.0 {
                    None
                } else {
                    Some(Scalar::Float(1.0 / a))
                }
            }
        }
    }

    pub fn sign(&self) -> Ordering {
        match self {
            Scalar::Exact(a) => a.sign(),
            Scalar::Float(a) => a.partial_cmp(&0.0).expect("NaN scalar"),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign() == Ordering::Equal
    }

    /// Total order; exact in exact mode, IEEE order (no NaN) in float mode.
    pub fn cmp_total(&self, rhs: &Scalar) -> Ordering {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a.cmp_exact(b),
            (Scalar::Float(a), Scalar::Float(b)) => a.partial_cmp(b).expect("NaN scalar"),
            _ => panic!("mixed scalar modes"),
        }
    }

    /// Equality up to `tol`; exact equality when `tol == 0`.
    pub fn eq_tol(&self, rhs: &Scalar, tol: f64) -> bool {
        if tol == 0.0 {
            return self.cmp_total(rhs) == Ordering::Equal;
        }
        (self.to_f64() - rhs.to_f64()).abs() <= tol
    }

    pub fn min(self, rhs: Scalar) -> Scalar {
        if self.cmp_total(&rhs) == Ordering::Greater {
            rhs
        } else {
            self
        }
    }

    pub fn max(self, rhs: Scalar) -> Scalar {
        if self.cmp_total(&rhs) == Ordering::Less {
            rhs
        } else {
            self
        }
    }

    pub fn floor_int(&self) -> i64 {
        match self {
            Scalar::Exact(q) => q.floor_int().to_i64().expect("floor fits i64"),
            Scalar::Float(v) => v.floor() as i64,
        }
    }

    /// Fractional part in `[0, 1)`.
    pub fn fract(&self) -> Scalar {
        match self {
            Scalar::Exact(q) => {
                let n = q.floor_int();
                Scalar::Exact(QuadRat::new(
                    &q.a - BigRational::from_integer(n),
                    q.b.clone(),
                    q.d,
                ))
            }
            Scalar::Float(v) => Scalar::Float(v - v.floor()),
        }
    }
}

fn sign_of(r: &BigRational) -> Ordering {
    if r.is_zero() {
        Ordering::Equal
    } else if r.is_positive() {
        Ordering::Greater
    } else {
        Ordering::Less
    }
}

fn fmt_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for Scalar {
    /// Text form used by the point-set files: `p/q`, `p/q+r/s√D` or a decimal.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(q) => {
                if q.b.is_zero() {
                    write!(f, "{}", fmt_rational(&q.a))
                } else {
                    let sign = if q.b.is_negative() { "-" } else { "+" };
                    let babs = q.b.abs();
                    write!(f, "{}{}{}√{}", fmt_rational(&q.a), sign, fmt_rational(&babs), q.d)
                }
            }
            Scalar::Float(v) => write!(f, "{v}"),
        }
    }
}

/// Parse the text form produced by `Display`, in the given mode.
///
/// Exact mode accepts `p`, `p/q`, `p/q+r/s√D`, `p/q-r/s√D` (also with the
/// ASCII spelling `sqrtD`). Float mode accepts any decimal literal.
pub fn parse_scalar(s: &str, mode: Mode) -> Result<Scalar, String> {
    let s = s.trim();
    match mode {
        Mode::Float { .. } => s
            .parse::<f64>()
            .map(Scalar::Float)
            .map_err(|e| format!("bad float literal {s:?}: {e}")),
        Mode::Exact { d } => {
            let (rat_part, surd_part) = split_surd(s)?;
            let a = parse_big_rational(rat_part)?;
            let b = match surd_part {
                None => BigRational::zero(),
                Some((coeff, surd_d)) => {
                    if surd_d != d {
                        return Err(format!("surd √{surd_d} does not match scheme √{d}"));
                    }
                    parse_big_rational(&coeff)?
                }
            };
            Ok(Scalar::Exact(QuadRat::new(a, b, d)))
        }
    }
}

/// Split `a±b√D` into the rational part and an optional signed surd part.
fn split_surd(s: &str) -> Result<(&str, Option<(String, u32)>), String> {
    let marker = if let Some(i) = s.find('√') {
        Some((i, '√'.len_utf8()))
    } else {
        s.find("sqrt").map(|i| (i, 4))
    };
    let Some((mi, mlen)) = marker else {
        return Ok((s, None));
    };
    let d: u32 = s[mi + mlen..]
        .trim()
        .parse()
        .map_err(|_| format!("bad surd discriminant in {s:?}"))?;
    let head = &s[..mi];
    // Find the +/- that separates the parts (not a leading sign, not inside
    // a fraction).
    let bytes = head.as_bytes();
    let mut split = None;
    for i in (1..bytes.len()).rev() {
        if bytes[i] == b'+' || bytes[i] == b'-' {
            split = Some(i);
            break;
        }
    }
    match split {
        Some(i) => {
            let sign = if bytes[i] == b'-' { "-" } else { "" };
            let coeff_raw = head[i + 1..].trim();
            let coeff = if coeff_raw.is_empty() {
                format!("{sign}1")
            } else {
                format!("{sign}{coeff_raw}")
            };
            Ok((&head[..i], Some((coeff, d))))
        }
        None => {
            // Pure surd term like `√5` or `3/2√5`.
            let coeff_raw = head.trim();
            let coeff = if coeff_raw.is_empty() || coeff_raw == "-" {
                format!("{coeff_raw}1")
            } else {
                coeff_raw.to_string()
            };
            Ok(("0", Some((coeff, d))))
        }
    }
}

fn parse_big_rational(s: &str) -> Result<BigRational, String> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|_| format!("bad numerator {num:?}"))?;
        let d: BigInt = den.trim().parse().map_err(|_| format!("bad denominator {den:?}"))?;
        if d.is_zero() {
            return Err("zero denominator".into());
        }
        Ok(BigRational::new(n, d))
    } else {
        let n: BigInt = s.parse().map_err(|_| format!("bad integer {s:?}"))?;
        Ok(BigRational::from_integer(n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXACT5: Mode = Mode::Exact { d: 5 };

    fn tau() -> Scalar {
        Scalar::from_parts((1, 2), (1, 2), EXACT5)
    }

    #[test]
    fn golden_ratio_identities() {
        let t = tau();
        let one = Scalar::from_int(1, EXACT5);
        // τ² = τ + 1
        assert_eq!(t.mul(&t), t.add(&one));
        // τ · τ' = -1
        let tp = match &t {
            Scalar::Exact(q) => Scalar::Exact(q.conjugate()),
            _ => unreachable!(),
        };
        assert_eq!(t.mul(&tp), Scalar::from_int(-1, EXACT5));
    }

    #[test]
    fn sign_without_rounding() {
        // Continued-fraction convergents of √5 straddle it by ~1e-5.
        let above = Scalar::from_parts((161, 72), (-1, 1), EXACT5);
        assert_eq!(above.sign(), Ordering::Greater);
        let below = Scalar::from_parts((38, 17), (-1, 1), EXACT5);
        assert_eq!(below.sign(), Ordering::Less);
        let zero = Scalar::from_parts((0, 1), (1, 1), EXACT5)
            .sub(&Scalar::from_parts((0, 1), (1, 1), EXACT5));
        assert_eq!(zero.sign(), Ordering::Equal);
    }

    #[test]
    fn floor_of_surds() {
        assert_eq!(tau().floor_int(), 1);
        assert_eq!(tau().neg().floor_int(), -2);
        assert_eq!(Scalar::from_parts((0, 1), (1, 1), EXACT5).floor_int(), 2);
        assert_eq!(Scalar::from_int(-3, EXACT5).floor_int(), -3);
    }

    #[test]
    fn fract_in_unit_interval() {
        let f = tau().fract();
        assert!(f.sign() != Ordering::Less);
        assert!(f.cmp_total(&Scalar::from_int(1, EXACT5)) == Ordering::Less);
        let expected = tau().sub(&Scalar::from_int(1, EXACT5));
        assert_eq!(f, expected);
    }

    #[test]
    fn parse_format_round_trip() {
        for s in ["0", "-7/3", "1/2+1/2√5", "-5/14+1/2√5", "0-2/3√5", "3+√5"] {
            let v = parse_scalar(s, EXACT5).unwrap();
            let v2 = parse_scalar(&v.to_string(), EXACT5).unwrap();
            assert_eq!(v, v2, "round trip through {s}");
        }
        let f = parse_scalar("-0.125", Mode::Float { tolerance: 1e-9 }).unwrap();
        assert_eq!(f, Scalar::Float(-0.125));
    }

    #[test]
    fn parse_ascii_surd() {
        let v = parse_scalar("1/2+1/2sqrt5", EXACT5).unwrap();
        assert_eq!(v, tau());
    }

    #[test]
    fn parse_rejects_wrong_discriminant() {
        assert!(parse_scalar("1+1√3", EXACT5).is_err());
    }

    #[test]
    fn from_f64_is_exact() {
        let v = Scalar::from_f64(0.3, EXACT5);
        // 0.3 is not 3/10 in binary; the conversion must preserve the float.
        assert_eq!(v.to_f64(), 0.3);
    }
}
