//! Exact coefficients: rationals and rational functions in the formal level `k`.
//!
//! A [`Scalar`] is stored as a reduced fraction of two polynomials in `k` over
//! the rationals, with a monic denominator, so structural equality is equality
//! of values.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScalarError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("pole at evaluation point k = {0}")]
    PoleAtEvaluationPoint(String),
    #[error("denominator {0} is not a product of registered pole factors")]
    DisallowedPole(String),
    #[error("cannot parse scalar: {0}")]
    Parse(String),
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn fmt_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Dense univariate polynomial in `k`, coefficients from low to high degree.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Poly {
    c: Vec<Rational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { c: Vec::new() }
    }

    pub fn constant(r: Rational) -> Self {
        let mut p = Poly { c: vec![r] };
        p.trim();
        p
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    /// The variable `k`.
    pub fn k() -> Self {
        Poly { c: vec![Rational::zero(), Rational::one()] }
    }

    pub fn from_coeffs(c: Vec<Rational>) -> Self {
        let mut p = Poly { c };
        p.trim();
        p
    }

    /// `k + a`, the typical pole factor.
    pub fn k_plus(a: i64) -> Self {
        Poly::from_coeffs(vec![rat(a, 1), Rational::one()])
    }

    fn trim(&mut self) {
        while self.c.last().is_some_and(|x| x.is_zero()) {
            self.c.pop();
        }
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.c
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.c.len() == 1 && self.c[0].is_one()
    }

    pub fn is_constant(&self) -> bool {
        self.c.len() <= 1
    }

    pub fn degree(&self) -> Option<usize> {
        self.c.len().checked_sub(1)
    }

    pub fn lead(&self) -> Rational {
        self.c.last().cloned().unwrap_or_else(Rational::zero)
    }

    pub fn constant_term(&self) -> Rational {
        self.c.first().cloned().unwrap_or_else(Rational::zero)
    }

    pub fn scale(&self, r: &Rational) -> Poly {
        if r.is_zero() {
            return Poly::zero();
        }
        Poly { c: self.c.iter().map(|x| x * r).collect() }
    }

    pub fn monic(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let l = self.lead().recip();
        self.scale(&l)
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let n = self.c.len().max(o.c.len());
        let mut c = Vec::with_capacity(n);
        for i in 0..n {
            let a = self.c.get(i);
            let b = o.c.get(i);
            c.push(match (a, b) {
                (Some(a), Some(b)) => a + b,
                (Some(a), None) => a.clone(),
                (None, Some(b)) => b.clone(),
                (None, None) => unreachable!(),
            });
        }
        Poly::from_coeffs(c)
    }

    pub fn neg(&self) -> Poly {
        Poly { c: self.c.iter().map(|x| -x).collect() }
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        let mut c = vec![Rational::zero(); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly::from_coeffs(c)
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn divrem(&self, d: &Poly) -> (Poly, Poly) {
        assert!(!d.is_zero(), "polynomial division by zero");
        let dd = d.c.len() - 1;
        let inv = d.lead().recip();
        let mut r = self.c.clone();
        if r.len() < d.c.len() {
            return (Poly::zero(), self.clone());
        }
        let mut q = vec![Rational::zero(); r.len() - dd];
        for i in (0..q.len()).rev() {
            let coef = &r[i + dd] * &inv;
            if coef.is_zero() {
                continue;
            }
            for (j, dj) in d.c.iter().enumerate() {
                r[i + j] -= &coef * dj;
            }
            q[i] = coef;
        }
        r.truncate(dd);
        (Poly::from_coeffs(q), Poly::from_coeffs(r))
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, o: &Poly) -> Poly {
        let mut a = self.clone();
        let mut b = o.clone();
        while !b.is_zero() {
            let (_, r) = a.divrem(&b);
            a = b;
            b = r.monic();
        }
        a.monic()
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.c.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// The polynomial `p(k + d)`.
    pub fn shift(&self, d: &Rational) -> Poly {
        let lin = Poly::from_coeffs(vec![d.clone(), Rational::one()]);
        let mut acc = Poly::zero();
        for c in self.c.iter().rev() {
            acc = acc.mul(&lin).add(&Poly::constant(c.clone()));
        }
        acc
    }

    fn fmt_terms(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, c) in self.c.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let a = c.abs();
            let body = match i {
                0 => fmt_rational(&a),
                _ => {
                    let var = if i == 1 { "k".to_string() } else { format!("k^{i}") };
                    if a.is_one() {
                        var
                    } else {
                        format!("{}*{}", fmt_rational(&a), var)
                    }
                }
            };
            if out.is_empty() {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            out.push_str(&body);
        }
        out
    }

    fn term_count(&self) -> usize {
        self.c.iter().filter(|x| !x.is_zero()).count()
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.fmt_terms())
    }
}

/// Reduced rational function in `k`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Scalar {
    num: Poly,
    den: Poly,
}

impl Default for Scalar {
    fn default() -> Self {
        Scalar::zero()
    }
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar { num: Poly::zero(), den: Poly::one() }
    }

    pub fn one() -> Self {
        Scalar { num: Poly::one(), den: Poly::one() }
    }

    pub fn k() -> Self {
        Scalar { num: Poly::k(), den: Poly::one() }
    }

    /// `k + a`.
    pub fn k_plus(a: i64) -> Self {
        Scalar { num: Poly::k_plus(a), den: Poly::one() }
    }

    pub fn int(n: i64) -> Self {
        Scalar::from_rational(rat(n, 1))
    }

    pub fn frac(n: i64, d: i64) -> Self {
        Scalar::from_rational(rat(n, d))
    }

    pub fn from_rational(r: Rational) -> Self {
        Scalar { num: Poly::constant(r), den: Poly::one() }
    }

    pub fn from_bigint(n: BigInt) -> Self {
        Scalar::from_rational(Rational::from_integer(n))
    }

    pub fn from_poly(p: Poly) -> Self {
        Scalar { num: p, den: Poly::one() }
    }

    /// Builds `num/den` in normal form.
    pub fn from_parts(num: Poly, den: Poly) -> Result<Self, ScalarError> {
        if den.is_zero() {
            return Err(ScalarError::ZeroDenominator);
        }
        if num.is_zero() {
            return Ok(Scalar::zero());
        }
        if den.is_constant() {
            let inv = den.lead().recip();
            return Ok(Scalar { num: num.scale(&inv), den: Poly::one() });
        }
        let g = num.gcd(&den);
        let (mut n, mut d) = (num, den);
        if !g.is_one() {
            n = n.divrem(&g).0;
            d = d.divrem(&g).0;
        }
        let inv = d.lead().recip();
        Ok(Scalar { num: n.scale(&inv), den: d.scale(&inv) })
    }

    /// Returns the normal form of the given representative.
    pub fn normalize(&self) -> Result<Self, ScalarError> {
        Scalar::from_parts(self.num.clone(), self.den.clone())
    }

    pub fn numer(&self) -> &Poly {
        &self.num
    }

    pub fn denom(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn is_constant(&self) -> bool {
        self.num.is_constant() && self.den.is_one()
    }

    pub fn as_rational(&self) -> Option<Rational> {
        self.is_constant().then(|| self.num.constant_term())
    }

    /// The value as a machine integer when it is an integral constant.
    pub fn as_i64(&self) -> Option<i64> {
        let r = self.as_rational()?;
        if r.denom().is_one() {
            r.numer().to_i64()
        } else {
            None
        }
    }

    pub fn eval(&self, k0: &Rational) -> Result<Rational, ScalarError> {
        let d = self.den.eval(k0);
        if d.is_zero() {
            return Err(ScalarError::PoleAtEvaluationPoint(fmt_rational(k0)));
        }
        Ok(self.num.eval(k0) / d)
    }

    pub fn recip(&self) -> Result<Self, ScalarError> {
        Scalar::from_parts(self.den.clone(), self.num.clone())
    }

    pub fn checked_div(&self, o: &Scalar) -> Result<Self, ScalarError> {
        if o.is_zero() {
            return Err(ScalarError::ZeroDenominator);
        }
        Scalar::from_parts(self.num.mul(&o.den), self.den.mul(&o.num))
    }

    pub fn pow(&self, e: i32) -> Self {
        let base = if e < 0 { self.recip().expect("negative power of zero") } else { self.clone() };
        let mut acc = Scalar::one();
        for _ in 0..e.unsigned_abs() {
            acc = &acc * &base;
        }
        acc
    }

    pub fn scale_rational(&self, r: &Rational) -> Self {
        if r.is_zero() {
            return Scalar::zero();
        }
        Scalar { num: self.num.scale(r), den: self.den.clone() }
    }

    /// Checks that the denominator factors over the given monic pole factors.
    pub fn check_poles(&self, factors: &[Poly]) -> Result<(), ScalarError> {
        let mut d = self.den.clone();
        for f in factors {
            let f = f.monic();
            if f.is_constant() {
                continue;
            }
            loop {
                let (q, r) = d.divrem(&f);
                if r.is_zero() && !d.is_constant() {
                    d = q;
                } else {
                    break;
                }
            }
        }
        if d.is_constant() {
            Ok(())
        } else {
            Err(ScalarError::DisallowedPole(self.den.to_string()))
        }
    }

    pub fn parse(s: &str) -> Result<Self, ScalarError> {
        let mut p = Parser { s: s.as_bytes(), i: 0 };
        let v = p.expr()?;
        p.ws();
        if p.i != p.s.len() {
            return Err(ScalarError::Parse(format!("trailing input at {}", p.i)));
        }
        Ok(v)
    }

    /// Substitutes `k -> k + d`.
    pub fn shift_level(&self, d: i64) -> Self {
        let d = Rational::from_integer(d.into());
        Scalar::from_parts(self.num.shift(&d), self.den.shift(&d)).expect("shifted denominator stays nonzero")
    }

    /// True when printing needs parentheses as a factor of a product.
    pub fn is_compound(&self) -> bool {
        !self.den.is_one() || self.num.term_count() > 1 || self.num.lead().is_negative()
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $m(self, o: &Scalar) -> Scalar {
                let f: fn(&Scalar, &Scalar) -> Scalar = $body;
                f(self, o)
            }
        }
        impl $tr<Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, o: Scalar) -> Scalar {
                (&self).$m(&o)
            }
        }
        impl $tr<&Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, o: &Scalar) -> Scalar {
                (&self).$m(o)
            }
        }
        impl $tr<Scalar> for &Scalar {
            type Output = Scalar;
            fn $m(self, o: Scalar) -> Scalar {
                self.$m(&o)
            }
        }
    };
}

binop!(Add, add, |a, b| {
    if a.is_zero() {
        return b.clone();
    }
    if b.is_zero() {
        return a.clone();
    }
    if a.den == b.den {
        if a.den.is_one() {
            return Scalar { num: a.num.add(&b.num), den: Poly::one() };
        }
        return Scalar::from_parts(a.num.add(&b.num), a.den.clone()).unwrap();
    }
    Scalar::from_parts(a.num.mul(&b.den).add(&b.num.mul(&a.den)), a.den.mul(&b.den)).unwrap()
});

binop!(Sub, sub, |a, b| a + &(-b));

binop!(Mul, mul, |a, b| {
    if a.is_zero() || b.is_zero() {
        return Scalar::zero();
    }
    if a.den.is_one() && b.den.is_one() {
        return Scalar { num: a.num.mul(&b.num), den: Poly::one() };
    }
    Scalar::from_parts(a.num.mul(&b.num), a.den.mul(&b.den)).unwrap()
});

binop!(Div, div, |a, b| a.checked_div(b).expect("scalar division by zero"));

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar { num: self.num.neg(), den: self.den.clone() }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

impl AddAssign<&Scalar> for Scalar {
    fn add_assign(&mut self, o: &Scalar) {
        *self = &*self + o;
    }
}

impl SubAssign<&Scalar> for Scalar {
    fn sub_assign(&mut self, o: &Scalar) {
        *self = &*self - o;
    }
}

impl MulAssign<&Scalar> for Scalar {
    fn mul_assign(&mut self, o: &Scalar) {
        *self = &*self * o;
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::int(n)
    }
}

impl From<Rational> for Scalar {
    fn from(r: Rational) -> Self {
        Scalar::from_rational(r)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            return f.write_str(&self.num.fmt_terms());
        }
        let n = if self.num.term_count() > 1 {
            format!("({})", self.num)
        } else {
            self.num.to_string()
        };
        let d = if self.den.term_count() > 1 || !self.den.lead().is_one() {
            format!("({})", self.den)
        } else {
            self.den.to_string()
        };
        write!(f, "{n}/{d}")
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Scalar::parse(&s).map_err(serde::de::Error::custom)
    }
}

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
}

impl Parser<'_> {
    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.s.get(self.i).copied()
    }

    fn err<T>(&self, msg: &str) -> Result<T, ScalarError> {
        Err(ScalarError::Parse(format!("{msg} at {}", self.i)))
    }

    fn expr(&mut self) -> Result<Scalar, ScalarError> {
        let mut acc = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                b'+' => {
                    self.i += 1;
                    acc = acc + self.term()?;
                }
                b'-' => {
                    self.i += 1;
                    acc = acc - self.term()?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Scalar, ScalarError> {
        let mut acc = self.unary()?;
        while let Some(c) = self.peek() {
            match c {
                b'*' => {
                    self.i += 1;
                    acc = acc * self.unary()?;
                }
                b'/' => {
                    self.i += 1;
                    let d = self.unary()?;
                    acc = acc.checked_div(&d)?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Scalar, ScalarError> {
        match self.peek() {
            Some(b'-') => {
                self.i += 1;
                Ok(-self.unary()?)
            }
            Some(b'+') => {
                self.i += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Scalar, ScalarError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.i += 1;
            let neg = if self.peek() == Some(b'-') {
                self.i += 1;
                true
            } else {
                false
            };
            let e = self.integer()?.to_i32().ok_or(ScalarError::Parse("exponent too large".into()))?;
            if neg && base.is_zero() {
                return Err(ScalarError::ZeroDenominator);
            }
            return Ok(base.pow(if neg { -e } else { e }));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<BigInt, ScalarError> {
        self.ws();
        let st = self.i;
        while self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
            self.i += 1;
        }
        if st == self.i {
            return self.err("expected integer");
        }
        let txt = std::str::from_utf8(&self.s[st..self.i]).unwrap();
        Ok(txt.parse::<BigInt>().unwrap())
    }

    fn atom(&mut self) -> Result<Scalar, ScalarError> {
        match self.peek() {
            Some(b'(') => {
                self.i += 1;
                let v = self.expr()?;
                if self.peek() != Some(b')') {
                    return self.err("expected ')'");
                }
                self.i += 1;
                Ok(v)
            }
            Some(b'k') => {
                self.i += 1;
                Ok(Scalar::k())
            }
            Some(c) if c.is_ascii_digit() => Ok(Scalar::from_bigint(self.integer()?)),
            _ => self.err("expected number, 'k' or '('"),
        }
    }
}

/// Outcome of [`solve_linear`] when the system is not uniquely solvable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinearFailure {
    Inconsistent,
    Underdetermined(usize),
}

/// Solves `rows · x = rhs` exactly (Gauss-Jordan over rational functions).
/// Overdetermined consistent systems are accepted.
pub fn solve_linear(mut rows: Vec<Vec<Scalar>>, mut rhs: Vec<Scalar>, nvars: usize) -> Result<Vec<Scalar>, LinearFailure> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..nvars {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else { continue };
        rows.swap(r, p);
        rhs.swap(r, p);
        let inv = rows[r][c].recip().expect("nonzero pivot");
        for x in rows[r].iter_mut() {
            *x *= &inv;
        }
        rhs[r] *= &inv;
        for i in 0..rows.len() {
            if i == r || rows[i][c].is_zero() {
                continue;
            }
            let f = rows[i][c].clone();
            for j in 0..nvars {
                let d = &f * &rows[r][j];
                rows[i][j] -= &d;
            }
            let d = &f * &rhs[r];
            rhs[i] -= &d;
        }
        pivots.push(c);
        r += 1;
    }
    if rhs[r..].iter().any(|x| !x.is_zero()) {
        return Err(LinearFailure::Inconsistent);
    }
    if pivots.len() < nvars {
        return Err(LinearFailure::Underdetermined(nvars - pivots.len()));
    }
    Ok(rhs.into_iter().take(nvars).collect())
}

#[cfg(test)]
mod tests {
    #[test]
    fn level_shift() {
        let s = Scalar::parse("(k^2 + 1)/(k + 2)").unwrap();
        let t = s.shift_level(-2);
        assert_eq!(t, Scalar::parse("(k^2 - 4*k + 5)/k").unwrap());
        assert_eq!(t.shift_level(2), s);
    }

    use super::*;

    fn s(x: &str) -> Scalar {
        Scalar::parse(x).unwrap()
    }

    #[test]
    fn normalizes_common_factor() {
        assert_eq!(s("(k^2-1)/(k-1)"), s("k+1"));
        assert_eq!(s("0/(k+2)"), Scalar::zero());
        assert_eq!(s("((k+2)*(k+3))/((k+3)*(k+2))"), Scalar::one());
    }

    #[test]
    fn denominator_is_monic() {
        let x = s("1/(2*k+4)");
        assert!(x.denom().lead().is_one());
        assert_eq!(x.to_string(), "1/2/(k + 2)");
        assert_eq!(x, Scalar::frac(1, 2) / Scalar::k_plus(2));
    }

    #[test]
    fn zero_denominator_rejected() {
        assert_eq!(Scalar::from_parts(Poly::one(), Poly::zero()), Err(ScalarError::ZeroDenominator));
        assert!(Scalar::parse("1/0").is_err());
    }

    #[test]
    fn evaluation() {
        assert_eq!(s("(k+1)/(k+2)").eval(&rat(0, 1)).unwrap(), rat(1, 2));
        assert_eq!(s("k+1").eval(&rat(-1, 1)).unwrap(), rat(0, 1));
        assert!(matches!(s("1/(k+2)").eval(&rat(-2, 1)), Err(ScalarError::PoleAtEvaluationPoint(_))));
    }

    #[test]
    fn display_roundtrip() {
        for t in ["0", "1", "-1/2", "k + 1", "-k^2 + 3/4*k - 2", "1/(k + 2)", "(k + 1)/(k^2 + 5*k + 6)", "-3/(k + 3)"] {
            let v = s(t);
            assert_eq!(s(&v.to_string()), v, "{t}");
        }
        assert_eq!(s("k+1").to_string(), "k + 1");
        assert_eq!(s("-1/(k+3)").to_string(), "-1/(k + 3)");
    }

    #[test]
    fn registered_poles() {
        let f = [Poly::k_plus(2)];
        assert!(s("1/(k+2)^3").check_poles(&f).is_ok());
        assert!(s("k").check_poles(&f).is_ok());
        assert!(s("1/(k+1)").check_poles(&f).is_err());
    }

    #[test]
    fn powers() {
        assert_eq!(s("(k+1)^3"), s("k^3+3*k^2+3*k+1"));
        assert_eq!(s("(k+2)^-2") * s("(k+2)^2"), Scalar::one());
    }

    #[test]
    fn linear_systems() {
        let rows = vec![vec![s("1"), s("1")], vec![s("1"), s("-1")], vec![s("2"), s("0")]];
        let x = solve_linear(rows, vec![s("k"), s("1"), s("k+1")], 2).unwrap();
        assert_eq!(x, vec![s("(k+1)/2"), s("(k-1)/2")]);
        let rows = vec![vec![s("1"), s("1")], vec![s("2"), s("2")]];
        assert_eq!(solve_linear(rows.clone(), vec![s("1"), s("2")], 2), Err(LinearFailure::Underdetermined(1)));
        assert_eq!(solve_linear(rows, vec![s("1"), s("3")], 2), Err(LinearFailure::Inconsistent));
    }
}
