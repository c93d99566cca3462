//! Exact arithmetic in real quadratic fields Q(sqrt(n)).
//!
//! A [`QuadReal`] stores `p + q*sqrt(disc)` with arbitrary-precision rational
//! `p`, `q` and square-free `disc >= 2`. All ring operations, Galois
//! conjugation and comparisons are exact; the only route to floating point is
//! the explicit [`QuadReal::to_f64`] escape hatch. Since sqrt(disc) is
//! irrational the representation is unique, so equality is coefficient-wise.
//!
//! Values with `q == 0` are plain rationals and combine with any
//! discriminant; mixing two irrational values from different fields is a
//! [`Error::DiscMismatch`].

use crate::error::{Error, Result};
use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

/// Element `p + q*sqrt(disc)` of a real quadratic field.
#[derive(Clone, Debug)]
pub struct QuadReal {
    p: BigRational,
    q: BigRational,
    disc: u64,
}

fn is_square_free(n: u64) -> bool {
    if n % 4 == 0 {
        return false;
    }
    let mut n = n;
    let mut f = 2u64;
    while f * f <= n {
        if n % (f * f) == 0 {
            return false;
        }
        if n % f == 0 {
            n /= f;
        }
        f += 1;
    }
    true
}

pub fn validate_disc(disc: u64) -> Result<()> {
    if disc < 2 || !is_square_free(disc) {
        return Err(Error::InvalidDisc(disc));
    }
    Ok(())
}

impl QuadReal {
    /// `p + q*sqrt(disc)`; `disc` must be square-free and `>= 2`.
    pub fn new(p: BigRational, q: BigRational, disc: u64) -> Result<Self> {
        validate_disc(disc)?;
        Ok(QuadReal { p, q, disc })
    }

    /// A plain rational, usable with any discriminant.
    pub fn rational(p: BigRational) -> Self {
        QuadReal { p, q: BigRational::zero(), disc: 0 }
    }

    pub fn from_i64(n: i64) -> Self {
        Self::rational(BigRational::from_i64(n).unwrap())
    }

    /// Exact conversion of a float (every finite f64 is rational).
    pub fn from_f64_exact(x: f64) -> Result<Self> {
        BigRational::from_float(x)
            .map(Self::rational)
            .ok_or_else(|| Error::Parse(format!("non-finite float {x}")))
    }

    pub fn zero() -> Self {
        Self::rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Self::rational(BigRational::one())
    }

    /// sqrt(disc) itself.
    pub fn sqrt_disc(disc: u64) -> Result<Self> {
        validate_disc(disc)?;
        Ok(QuadReal { p: BigRational::zero(), q: BigRational::one(), disc })
    }

    /// The golden ratio tau = (1 + sqrt(5))/2.
    pub fn tau() -> Self {
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        QuadReal { p: half.clone(), q: half, disc: 5 }
    }

    /// The silver ratio 1 + sqrt(2).
    pub fn silver() -> Self {
        QuadReal { p: BigRational::one(), q: BigRational::one(), disc: 2 }
    }

    pub fn p(&self) -> &BigRational {
        &self.p
    }

    pub fn q(&self) -> &BigRational {
        &self.q
    }

    /// Effective discriminant: 0 for plain rationals.
    pub fn disc(&self) -> u64 {
        if self.q.is_zero() {
            0
        } else {
            self.disc
        }
    }

    pub fn is_rational(&self) -> bool {
        self.q.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.q.is_zero() && self.p.is_integer()
    }

    pub fn is_zero(&self) -> bool {
        self.p.is_zero() && self.q.is_zero()
    }

    /// Discriminant to use for the result of a binary op, or an error if the
    /// two irrational operands live in different fields.
    fn join_disc(&self, other: &Self) -> Result<u64> {
        match (self.q.is_zero(), other.q.is_zero()) {
            (true, true) => Ok(if self.disc != 0 { self.disc } else { other.disc }),
            (false, true) => Ok(self.disc),
            (true, false) => Ok(other.disc),
            (false, false) => {
                if self.disc == other.disc {
                    Ok(self.disc)
                } else {
                    Err(Error::DiscMismatch(self.disc, other.disc))
                }
            }
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        let disc = self.join_disc(other)?;
        Ok(QuadReal { p: &self.p + &other.p, q: &self.q + &other.q, disc })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        let disc = self.join_disc(other)?;
        Ok(QuadReal { p: &self.p - &other.p, q: &self.q - &other.q, disc })
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        let disc = self.join_disc(other)?;
        let n = BigRational::from_integer(BigInt::from(disc));
        let p = &self.p * &other.p + &self.q * &other.q * &n;
        let q = &self.p * &other.q + &self.q * &other.p;
        Ok(QuadReal { p, q, disc })
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        if other.is_zero() {
            return Err(Error::DivisionByZero);
        }
        // 1/(p + q*sqrt(n)) = (p - q*sqrt(n)) / (p^2 - n*q^2); the norm is
        // nonzero for nonzero elements because sqrt(n) is irrational.
        let disc = self.join_disc(other)?;
        let n = BigRational::from_integer(BigInt::from(disc.max(2)));
        let norm = &other.p * &other.p - &other.q * &other.q * &n;
        debug_assert!(!norm.is_zero());
        let inv = QuadReal { p: &other.p / &norm, q: -(&other.q / &norm), disc };
        self.checked_mul(&inv)
    }

    /// Galois conjugate `p - q*sqrt(disc)`: a ring homomorphism.
    pub fn conj(&self) -> Self {
        QuadReal { p: self.p.clone(), q: -self.q.clone(), disc: self.disc }
    }

    /// Field norm `x * conj(x) = p^2 - disc*q^2`.
    pub fn norm(&self) -> BigRational {
        let n = BigRational::from_integer(BigInt::from(self.disc().max(2)));
        &self.p * &self.p - &self.q * &self.q * &n
    }

    /// Exact sign: -1, 0, or 1.
    pub fn signum(&self) -> i8 {
        let sp = rational_sign(&self.p);
        let sq = rational_sign(&self.q);
        match (sp, sq) {
            (0, 0) => 0,
            (s, 0) => s,
            (0, s) => s,
            (sp, sq) if sp == sq => sp,
            (sp, sq) => {
                // p and q*sqrt(n) pull in opposite directions; compare p^2
                // with n*q^2. Equality would make sqrt(n) rational.
                let n = BigRational::from_integer(BigInt::from(self.disc));
                let p2 = &self.p * &self.p;
                let nq2 = &self.q * &self.q * &n;
                match p2.cmp(&nq2) {
                    Ordering::Greater => sp,
                    Ordering::Less => sq,
                    Ordering::Equal => unreachable!("sqrt of square-free disc is irrational"),
                }
            }
        }
    }

    /// Exact comparison via the sign of the difference.
    pub fn checked_cmp(&self, other: &Self) -> Result<Ordering> {
        let diff = self.checked_sub(other)?;
        Ok(match diff.signum() {
            -1 => Ordering::Less,
            0 => Ordering::Equal,
            _ => Ordering::Greater,
        })
    }

    pub fn abs(&self) -> Self {
        if self.signum() < 0 {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Floating-point escape hatch. Not used internally by exact code paths.
    pub fn to_f64(&self) -> f64 {
        let q = self.q.to_f64().unwrap_or(f64::NAN);
        if self.q.is_zero() {
            self.p.to_f64().unwrap_or(f64::NAN)
        } else {
            self.p.to_f64().unwrap_or(f64::NAN) + q * (self.disc as f64).sqrt()
        }
    }

    /// Largest integer `<= self`, computed exactly (float guess, exact fixup).
    pub fn floor_int(&self) -> BigInt {
        let guess = self.to_f64().floor();
        let mut k = BigInt::from_f64(guess).unwrap_or_else(BigInt::zero);
        loop {
            let lo = Self::rational(BigRational::from_integer(k.clone()));
            let hi = Self::rational(BigRational::from_integer(&k + 1));
            let ge_lo = self.checked_cmp(&lo).expect("compatible") != Ordering::Less;
            let lt_hi = self.checked_cmp(&hi).expect("compatible") == Ordering::Less;
            match (ge_lo, lt_hi) {
                (true, true) => return k,
                (false, _) => k -= 1,
                (_, false) => k += 1,
            }
        }
    }
}

fn rational_sign(r: &BigRational) -> i8 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

impl PartialEq for QuadReal {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.q == other.q && (self.q.is_zero() || self.disc == other.disc)
    }
}

impl Eq for QuadReal {}

impl Hash for QuadReal {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.p.hash(state);
        self.q.hash(state);
        if !self.q.is_zero() {
            self.disc.hash(state);
        }
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait for &QuadReal {
            type Output = QuadReal;
            fn $method(self, rhs: &QuadReal) -> QuadReal {
                self.$checked(rhs).expect("quadratic arithmetic")
            }
        }
        impl $trait for QuadReal {
            type Output = QuadReal;
            fn $method(self, rhs: QuadReal) -> QuadReal {
                (&self).$checked(&rhs).expect("quadratic arithmetic")
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);
forward_binop!(Div, div, checked_div);

impl Neg for QuadReal {
    type Output = QuadReal;
    fn neg(self) -> QuadReal {
        QuadReal { p: -self.p, q: -self.q, disc: self.disc }
    }
}

impl Neg for &QuadReal {
    type Output = QuadReal;
    fn neg(self) -> QuadReal {
        QuadReal { p: -self.p.clone(), q: -self.q.clone(), disc: self.disc }
    }
}

impl fmt::Display for QuadReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.q.is_zero() {
            write!(f, "{}", self.p)
        } else if self.p.is_zero() {
            write!(f, "{}*sqrt{}", self.q, self.disc)
        } else {
            write!(f, "{} + {}*sqrt{}", self.p, self.q, self.disc)
        }
    }
}

// JSON form: {"p":"num/den","q":"num/den","disc":5}. Plain rationals carry
// disc 0.
impl serde::Serialize for QuadReal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("QuadReal", 3)?;
        st.serialize_field("p", &self.p.to_string())?;
        st.serialize_field("q", &self.q.to_string())?;
        st.serialize_field("disc", &self.disc())?;
        st.end()
    }
}

impl<'de> serde::Deserialize<'de> for QuadReal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(serde::Deserialize)]
        struct Raw {
            p: String,
            q: String,
            disc: u64,
        }
        let raw = Raw::deserialize(d)?;
        let p = parse_rational(&raw.p).map_err(serde::de::Error::custom)?;
        let q = parse_rational(&raw.q).map_err(serde::de::Error::custom)?;
        if q.is_zero() {
            Ok(QuadReal::rational(p))
        } else {
            QuadReal::new(p, q, raw.disc).map_err(serde::de::Error::custom)
        }
    }
}

/// Parse "3", "-7/2", or a decimal "1.25" into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("invalid rational '{s}'"));
    if let Some((num, den)) = s.split_once('/') {
        let n = BigInt::from_str(num.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(den.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::DivisionByZero);
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let int = if int.is_empty() || int == "-" { format!("{int}0") } else { int.to_string() };
        let neg = int.starts_with('-');
        let i = BigInt::from_str(&int).map_err(|_| bad())?;
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let f = BigInt::from_str(frac).map_err(|_| bad())?;
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac_part = BigRational::new(if neg { -f } else { f }, scale);
        return Ok(BigRational::from_integer(i) + frac_part);
    }
    BigInt::from_str(s).map(BigRational::from_integer).map_err(|_| bad())
}

/// Parse an exact scalar expression: rationals/decimals, `tau`, `sqrt2`,
/// `sqrtN`, `silver`, combined with + - * / and parentheses.
pub fn parse_quad(input: &str) -> Result<QuadReal> {
    let mut p = ExprParser { s: input.as_bytes(), i: 0 };
    let v = p.expr()?;
    p.skip_ws();
    if p.i != p.s.len() {
        return Err(Error::Parse(format!("trailing input in '{input}'")));
    }
    Ok(v)
}

struct ExprParser<'a> {
    s: &'a [u8],
    i: usize,
}

impl ExprParser<'_> {
    fn skip_ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.i).copied()
    }

    fn expr(&mut self) -> Result<QuadReal> {
        let mut acc = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                b'+' => {
                    self.i += 1;
                    acc = acc.checked_add(&self.term()?)?;
                }
                b'-' => {
                    self.i += 1;
                    acc = acc.checked_sub(&self.term()?)?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<QuadReal> {
        let mut acc = self.factor()?;
        while let Some(c) = self.peek() {
            match c {
                b'*' => {
                    self.i += 1;
                    acc = acc.checked_mul(&self.factor()?)?;
                }
                b'/' => {
                    self.i += 1;
                    acc = acc.checked_div(&self.factor()?)?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<QuadReal> {
        match self.peek() {
            Some(b'-') => {
                self.i += 1;
                Ok(-self.factor()?)
            }
            Some(b'(') => {
                self.i += 1;
                let v = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(Error::Parse("unbalanced parentheses".into()));
                }
                self.i += 1;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.word(),
            _ => Err(Error::Parse("expected a value".into())),
        }
    }

    fn number(&mut self) -> Result<QuadReal> {
        let start = self.i;
        while self.i < self.s.len() && (self.s[self.i].is_ascii_digit() || self.s[self.i] == b'.') {
            self.i += 1;
        }
        let text = std::str::from_utf8(&self.s[start..self.i]).expect("ascii");
        Ok(QuadReal::rational(parse_rational(text)?))
    }

    fn word(&mut self) -> Result<QuadReal> {
        let start = self.i;
        while self.i < self.s.len() && self.s[self.i].is_ascii_alphanumeric() {
            self.i += 1;
        }
        let w = std::str::from_utf8(&self.s[start..self.i]).expect("ascii");
        match w {
            "tau" | "phi" => Ok(QuadReal::tau()),
            "silver" => Ok(QuadReal::silver()),
            _ => {
                if let Some(n) = w.strip_prefix("sqrt") {
                    let disc: u64 =
                        n.parse().map_err(|_| Error::Parse(format!("bad sqrt argument '{w}'")))?;
                    QuadReal::sqrt_disc(disc)
                } else {
                    Err(Error::Parse(format!("unknown symbol '{w}'")))
                }
            }
        }
    }
}

/// Rational bounds `lo <= sqrt(n) <= hi` with `hi - lo <= 2^-bits`.
/// Used by tests as a float-free comparison oracle.
pub fn sqrt_bounds(n: u64, bits: u32) -> (BigRational, BigRational) {
    let scaled = BigInt::from(n) << (2 * bits);
    let s = scaled.sqrt();
    let den = BigInt::one() << bits;
    let lo = BigRational::new(s.clone(), den.clone());
    let hi = BigRational::new(s + 1, den);
    (lo, hi)
}

/// Round-half-even for rationals; exact counterpart of f64::round_ties_even.
pub fn round_half_even(r: &BigRational) -> BigInt {
    let f = r.floor().to_integer();
    let frac = r - BigRational::from_integer(f.clone());
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    match frac.cmp(&half) {
        Ordering::Less => f,
        Ordering::Greater => f + 1,
        Ordering::Equal => {
            if (&f % 2i32).sign() == Sign::NoSign {
                f
            } else {
                f + 1
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn q(p: (i64, i64), q_: (i64, i64), disc: u64) -> QuadReal {
        QuadReal::new(rat(p.0, p.1), rat(q_.0, q_.1), disc).unwrap()
    }

    #[test]
    fn tau_squared_is_tau_plus_one() {
        let tau = QuadReal::tau();
        let lhs = tau.checked_mul(&tau).unwrap();
        let rhs = tau.checked_add(&QuadReal::one()).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn additive_identity() {
        let x = q((3, 7), (-2, 5), 5);
        assert_eq!(x.checked_add(&QuadReal::zero()).unwrap(), x);
    }

    #[test]
    fn silver_conjugate_product_is_one() {
        // (3 + 2*sqrt2)(3 - 2*sqrt2) = 9 - 8 = 1
        let x = q((3, 1), (2, 1), 2);
        let y = x.conj();
        assert_eq!(x.checked_mul(&y).unwrap(), QuadReal::one());
    }

    #[test]
    fn division_by_zero_detected() {
        let x = QuadReal::tau();
        assert!(matches!(x.checked_div(&QuadReal::zero()), Err(Error::DivisionByZero)));
    }

    #[test]
    fn disc_mismatch_detected() {
        let a = QuadReal::tau();
        let b = QuadReal::silver();
        assert!(matches!(a.checked_add(&b), Err(Error::DiscMismatch(5, 2))));
    }

    #[test]
    fn rational_coerces_across_discs() {
        let a = QuadReal::tau();
        let b = QuadReal::rational(rat(3, 2));
        let s = a.checked_add(&b).unwrap();
        assert_eq!(s.disc(), 5);
        assert_eq!(s.checked_sub(&a).unwrap(), b);
    }

    #[test]
    fn conj_fixes_rationals() {
        let r = QuadReal::rational(rat(-9, 4));
        assert_eq!(r.conj(), r);
    }

    #[test]
    fn conj_of_tau() {
        // conj(tau) = (1 - sqrt5)/2 = 1 - tau
        let tau = QuadReal::tau();
        let expected = QuadReal::one().checked_sub(&tau).unwrap();
        assert_eq!(tau.conj(), expected);
    }

    #[test]
    fn cmp_tau_vs_three_halves() {
        let tau = QuadReal::tau();
        let x = QuadReal::rational(rat(3, 2));
        assert_eq!(tau.checked_cmp(&x).unwrap(), Ordering::Greater);
    }

    #[test]
    fn cmp_reflexive() {
        let x = q((-1, 3), (2, 7), 2);
        assert_eq!(x.checked_cmp(&x).unwrap(), Ordering::Equal);
    }

    #[test]
    fn one_minus_tau_is_negative() {
        let x = QuadReal::one().checked_sub(&QuadReal::tau()).unwrap();
        assert_eq!(x.checked_cmp(&QuadReal::zero()).unwrap(), Ordering::Less);
        assert_eq!(x.signum(), -1);
    }

    #[test]
    fn floor_of_tau_powers() {
        let tau = QuadReal::tau();
        let mut x = QuadReal::one();
        // floor(tau^k) for k = 1..8: 1, 2, 4, 6, 11, 17, 29, 46
        let expected = [1i64, 2, 4, 6, 11, 17, 29, 46];
        for e in expected {
            x = x.checked_mul(&tau).unwrap();
            assert_eq!(x.floor_int(), BigInt::from(e));
        }
    }

    #[test]
    fn parse_expressions() {
        assert_eq!(parse_quad("tau").unwrap(), QuadReal::tau());
        assert_eq!(parse_quad("-tau/2").unwrap(), -QuadReal::tau().checked_div(&QuadReal::from_i64(2)).unwrap());
        assert_eq!(parse_quad("3/2").unwrap(), QuadReal::rational(rat(3, 2)));
        assert_eq!(parse_quad("1.25").unwrap(), QuadReal::rational(rat(5, 4)));
        assert_eq!(parse_quad("1+2*sqrt2").unwrap(), q((1, 1), (2, 1), 2));
        assert_eq!(parse_quad("(1+sqrt5)/2").unwrap(), QuadReal::tau());
        assert!(parse_quad("sqrt2 + tau").is_err());
        assert!(parse_quad("frob").is_err());
    }

    #[test]
    fn json_round_trip() {
        let tau = QuadReal::tau();
        let s = serde_json::to_string(&tau).unwrap();
        assert_eq!(s, r#"{"p":"1/2","q":"1/2","disc":5}"#);
        let back: QuadReal = serde_json::from_str(&s).unwrap();
        assert_eq!(back, tau);
    }

    #[test]
    fn invalid_disc_rejected() {
        assert!(QuadReal::new(rat(1, 1), rat(1, 1), 4).is_err());
        assert!(QuadReal::new(rat(1, 1), rat(1, 1), 12).is_err());
        assert!(QuadReal::new(rat(1, 1), rat(1, 1), 1).is_err());
        assert!(QuadReal::new(rat(1, 1), rat(1, 1), 45).is_err());
        assert!(QuadReal::new(rat(1, 1), rat(1, 1), 46).is_ok());
    }

    #[test]
    fn sign_agrees_with_rational_sqrt_bounds() {
        // Float-free oracle: decide sign of p + q*sqrt(n) from rational
        // bounds on sqrt(n), then compare against signum() over a seeded
        // sample of 10^4 elements.
        let (lo5, hi5) = sqrt_bounds(5, 128);
        let (lo2, hi2) = sqrt_bounds(2, 128);
        let mut state = 0x9E3779B97F4A7C15u64;
        let mut next = || {
            // splitmix64 step
            state = state.wrapping_add(0x9E3779B97F4A7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
            z ^ (z >> 31)
        };
        for _ in 0..10_000 {
            let pn = (next() % 2001) as i64 - 1000;
            let pd = (next() % 40) as i64 + 1;
            let qn = (next() % 2001) as i64 - 1000;
            let qd = (next() % 40) as i64 + 1;
            let disc = if next() % 2 == 0 { 5 } else { 2 };
            let (lo, hi) = if disc == 5 { (&lo5, &hi5) } else { (&lo2, &hi2) };
            let x = q((pn, pd), (qn, qd), disc);
            let qv = rat(qn, qd);
            let bound_a = rat(pn, pd) + &qv * lo;
            let bound_b = rat(pn, pd) + &qv * hi;
            let (blo, bhi) = if bound_a <= bound_b { (bound_a, bound_b) } else { (bound_b, bound_a) };
            let oracle = if blo.is_positive() {
                1i8
            } else if bhi.is_negative() {
                -1i8
            } else if qv.is_zero() && blo.is_zero() && bhi.is_zero() {
                0i8
            } else {
                continue; // bounds straddle zero only for |x| < 2^-120; regenerate
            };
            assert_eq!(x.signum(), oracle, "sign mismatch for {x}");
        }
    }

    proptest! {
        #[test]
        fn field_axioms(
            a in -50i64..50, b in -50i64..50, c in -50i64..50,
            d in -50i64..50, e in -50i64..50, f in -50i64..50,
        ) {
            let x = q((a, 3), (b, 2), 5);
            let y = q((c, 4), (d, 3), 5);
            let z = q((e, 2), (f, 5), 5);
            // associativity and commutativity
            prop_assert_eq!(&(&x + &y) + &z, &x + &(&y + &z));
            prop_assert_eq!(&(&x * &y) * &z, &x * &(&y * &z));
            prop_assert_eq!(&x + &y, &y + &x);
            prop_assert_eq!(&x * &y, &y * &x);
            // distributivity
            prop_assert_eq!(&x * &(&y + &z), &(&x * &y) + &(&x * &z));
            // conjugation is a ring homomorphism
            prop_assert_eq!((&x + &y).conj(), &x.conj() + &y.conj());
            prop_assert_eq!((&x * &y).conj(), &x.conj() * &y.conj());
            // division inverts multiplication
            if !y.is_zero() {
                prop_assert_eq!(&(&x * &y) / &y, x.clone());
            }
            // comparison is a total order compatible with addition
            let ord = x.checked_cmp(&y).unwrap();
            prop_assert_eq!((&x + &z).checked_cmp(&(&y + &z)).unwrap(), ord);
        }

        #[test]
        fn round_half_even_matches_f64(n in -10_000i64..10_000, d in 1i64..60) {
            let r = rat(n, d);
            let exact = round_half_even(&r);
            let viaf = (n as f64 / d as f64).round_ties_even();
            prop_assert_eq!(exact.to_f64().unwrap(), viaf);
        }
    }
}
