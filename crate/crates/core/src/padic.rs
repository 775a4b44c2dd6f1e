//! Fixed-precision p-adic integers, the ramified extension `Q_p(sqrt p)`,
//! valuations and Newton polygons.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational used for slopes and valuations.
pub type Rational = Ratio<i64>;

/// `p^e` as a big integer.
pub fn pow_p(p: u64, e: u32) -> BigInt {
    num_traits::pow(BigInt::from(p), e as usize)
}

/// Largest `e` with `p^e | x`, or `None` for `x = 0`.
pub fn valuation(x: &BigInt, p: u64) -> Option<u32> {
    if x.is_zero() {
        return None;
    }
    let p = BigInt::from(p);
    let mut x = x.abs();
    let mut e = 0;
    loop {
        let (q, r) = x.div_rem(&p);
        if !r.is_zero() {
            return Some(e);
        }
        x = q;
        e += 1;
    }
}

/// Valuation of a machine integer.
pub fn valuation_i64(x: i64, p: u64) -> Option<u32> {
    valuation(&BigInt::from(x), p)
}

/// Valuation of a rational `a/b`; `None` for zero.
pub fn valuation_ratio(x: &num_rational::BigRational, p: u64) -> Option<i64> {
    let n = valuation(x.numer(), p)?;
    let d = valuation(x.denom(), p).expect("nonzero denominator");
    Some(n as i64 - d as i64)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Inverse of a unit modulo `m`.
pub fn inv_mod(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let g = a.mod_floor(m).extended_gcd(m);
    if !g.gcd.is_one() {
        return None;
    }
    Some(g.x.mod_floor(m))
}

/// A valuation that is either known exactly or only bounded below
/// (the element vanishes at the working precision).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Val {
    Exact(Rational),
    AtLeast(Rational),
}

impl Val {
    pub fn value(self) -> Rational {
        match self {
            Val::Exact(v) | Val::AtLeast(v) => v,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Val::Exact(_))
    }

    /// Compare with a threshold; `None` when the bound does not decide.
    pub fn cmp_with(self, t: Rational) -> Option<Ordering> {
        match self {
            Val::Exact(v) => Some(v.cmp(&t)),
            Val::AtLeast(v) if v > t => Some(Ordering::Greater),
            Val::AtLeast(v) if v == t => None,
            Val::AtLeast(_) => None,
        }
    }

    pub fn shift(self, d: Rational) -> Val {
        match self {
            Val::Exact(v) => Val::Exact(v + d),
            Val::AtLeast(v) => Val::AtLeast(v + d),
        }
    }
}

impl fmt::Display for Val {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Val::Exact(v) => write!(f, "{v}"),
            Val::AtLeast(v) => write!(f, ">={v}"),
        }
    }
}

/// An element of `Z_p` known modulo `p^N` (absolute precision `N`).
///
/// Precision propagates as for absolute-precision p-adics: sums keep the
/// smaller precision, products gain from the valuation of the other factor,
/// and division by `p^e u` costs `e` digits (plus the error of the divisor).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PadicScalar {
    p: u64,
    prec: u32,
    residue: BigInt,
}

impl PadicScalar {
    pub fn new(p: u64, value: &BigInt, prec: u32) -> Self {
        let residue = value.mod_floor(&pow_p(p, prec));
        PadicScalar { p, prec, residue }
    }

    pub fn from_i64(p: u64, value: i64, prec: u32) -> Self {
        Self::new(p, &BigInt::from(value), prec)
    }

    /// Reduce a p-integral rational.
    pub fn from_ratio(p: u64, value: &num_rational::BigRational, prec: u32) -> Result<Self> {
        let m = pow_p(p, prec);
        let inv = inv_mod(value.denom(), &m).ok_or(Error::NonIntegral(p))?;
        Ok(Self::new(p, &(value.numer() * inv), prec))
    }

    pub fn zero(p: u64, prec: u32) -> Self {
        Self::from_i64(p, 0, prec)
    }

    pub fn one(p: u64, prec: u32) -> Self {
        Self::from_i64(p, 1, prec)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn residue(&self) -> &BigInt {
        &self.residue
    }

    /// Representative in `(-p^N/2, p^N/2]`.
    pub fn symmetric(&self) -> BigInt {
        let m = pow_p(self.p, self.prec);
        if &self.residue * 2 > m {
            &self.residue - m
        } else {
            self.residue.clone()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.residue.is_zero()
    }

    pub fn valuation(&self) -> Val {
        match valuation(&self.residue, self.p) {
            Some(e) => Val::Exact(Rational::from_integer(e as i64)),
            None => Val::AtLeast(Rational::from_integer(self.prec as i64)),
        }
    }

    /// Integer valuation, or the precision when the residue is zero.
    fn val_floor(&self) -> u32 {
        valuation(&self.residue, self.p).unwrap_or(self.prec)
    }

    pub fn is_unit(&self) -> bool {
        self.prec > 0 && self.val_floor() == 0
    }

    /// Lower the precision to `n` (no-op when already below).
    pub fn with_prec(&self, n: u32) -> Self {
        if n >= self.prec {
            return self.clone();
        }
        Self::new(self.p, &self.residue, n)
    }

    /// Agreement modulo `p^m`; fails when `m` exceeds either precision.
    pub fn congruent(&self, other: &Self, m: u32) -> Result<bool> {
        self.same_prime(other)?;
        if m > self.prec.min(other.prec) {
            return Err(Error::PrecisionInsufficient(format!("congruence mod p^{m} needs precision {m}")));
        }
        let md = pow_p(self.p, m);
        Ok((&self.residue - &other.residue).mod_floor(&md).is_zero())
    }

    fn same_prime(&self, other: &Self) -> Result<()> {
        if self.p != other.p {
            return Err(Error::PrimeMismatch(self.p, other.p));
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.same_prime(other)?;
        let n = self.prec.min(other.prec);
        Ok(Self::new(self.p, &(&self.residue + &other.residue), n))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.same_prime(other)?;
        let n = self.prec.min(other.prec);
        Ok(Self::new(self.p, &(&self.residue - &other.residue), n))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.same_prime(other)?;
        let n = (self.prec + other.val_floor()).min(other.prec + self.val_floor());
        Ok(Self::new(self.p, &(&self.residue * &other.residue), n))
    }

    /// Exact quotient; requires a divisor of known valuation not exceeding
    /// the dividend's.
    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        self.same_prime(other)?;
        let e = match valuation(&other.residue, self.p) {
            Some(e) => e,
            None => return Err(Error::NotAUnit(format!("{other}"))),
        };
        let va = self.val_floor();
        if va < e {
            return Err(Error::NonIntegral(self.p));
        }
        let pe = pow_p(self.p, e);
        let n = (self.prec - e).min(other.prec + va - 2 * e);
        let m = pow_p(self.p, n.max(1));
        let u = &other.residue / &pe;
        let inv = inv_mod(&u, &m).expect("unit");
        let a = &self.residue / &pe;
        Ok(Self::new(self.p, &(a * inv), n))
    }

    pub fn inverse(&self) -> Result<Self> {
        if !self.is_unit() {
            return Err(Error::NotAUnit(format!("{self}")));
        }
        Self::one(self.p, self.prec).checked_div(self)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one(self.p, self.prec);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Multiply by an exact integer.
    pub fn scale(&self, c: &BigInt) -> Self {
        self * &Self::new(self.p, c, self.prec + valuation(c, self.p).unwrap_or(0))
    }
}

impl fmt::Display for PadicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + O({}^{})", self.symmetric(), self.p, self.prec)
    }
}

impl Add for &PadicScalar {
    type Output = PadicScalar;
    fn add(self, rhs: &PadicScalar) -> PadicScalar {
        self.checked_add(rhs).expect("prime mismatch")
    }
}

impl Sub for &PadicScalar {
    type Output = PadicScalar;
    fn sub(self, rhs: &PadicScalar) -> PadicScalar {
        self.checked_sub(rhs).expect("prime mismatch")
    }
}

impl Mul for &PadicScalar {
    type Output = PadicScalar;
    fn mul(self, rhs: &PadicScalar) -> PadicScalar {
        self.checked_mul(rhs).expect("prime mismatch")
    }
}

impl Neg for &PadicScalar {
    type Output = PadicScalar;
    fn neg(self) -> PadicScalar {
        PadicScalar::new(self.p, &-&self.residue, self.prec)
    }
}

/// `x + y sqrt(p)` with `x, y` in `Z_p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RamifiedScalar {
    pub x: PadicScalar,
    pub y: PadicScalar,
}

impl RamifiedScalar {
    pub fn new(x: PadicScalar, y: PadicScalar) -> Result<Self> {
        x.same_prime(&y)?;
        Ok(RamifiedScalar { x, y })
    }

    pub fn from_padic(x: PadicScalar) -> Self {
        let y = PadicScalar::zero(x.p, x.prec);
        RamifiedScalar { x, y }
    }

    pub fn p(&self) -> u64 {
        self.x.p
    }

    /// `min(v(x), v(y) + 1/2)`; the two candidates never tie, so the result
    /// is exact whenever the attaining part is known exactly.
    pub fn valuation(&self) -> Val {
        let vx = self.x.valuation();
        let vy = self.y.valuation().shift(Rational::new(1, 2));
        if vx.value() < vy.value() {
            vx
        } else {
            vy
        }
    }

    pub fn checked_add(&self, o: &Self) -> Result<Self> {
        Ok(RamifiedScalar { x: self.x.checked_add(&o.x)?, y: self.y.checked_add(&o.y)? })
    }

    pub fn checked_sub(&self, o: &Self) -> Result<Self> {
        Ok(RamifiedScalar { x: self.x.checked_sub(&o.x)?, y: self.y.checked_sub(&o.y)? })
    }

    pub fn checked_mul(&self, o: &Self) -> Result<Self> {
        let p = PadicScalar::new(self.p(), &BigInt::from(self.p()), self.x.prec.max(o.x.prec) + 1);
        let yy = self.y.checked_mul(&o.y)?.checked_mul(&p)?;
        let x = self.x.checked_mul(&o.x)?.checked_add(&yy)?;
        let y = self.x.checked_mul(&o.y)?.checked_add(&self.y.checked_mul(&o.x)?)?;
        Ok(RamifiedScalar { x, y })
    }

    pub fn square(&self) -> Self {
        self.checked_mul(self).expect("same prime")
    }
}

impl fmt::Display for RamifiedScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) + ({})*sqrt({})", self.x, self.y, self.p())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    #[serde(with = "ratio_string")]
    pub slope: Rational,
    pub mult: usize,
}

/// Lower convex hull of the points `(i, v_i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewtonPolygon {
    pub degree: usize,
    pub vertices: Vec<(usize, Rational)>,
    pub segments: Vec<Segment>,
}

impl NewtonPolygon {
    /// Slopes repeated by multiplicity.
    pub fn slopes(&self) -> Vec<Rational> {
        self.segments.iter().flat_map(|s| std::iter::repeat_n(s.slope, s.mult)).collect()
    }

    /// Index range `(i0, i1)` of the segment with the given slope.
    pub fn segment_span(&self, slope: Rational) -> Option<(usize, usize)> {
        self.segments
            .iter()
            .position(|s| s.slope == slope)
            .map(|k| (self.vertices[k].0, self.vertices[k + 1].0))
    }
}

/// Newton polygon of a coefficient valuation list (`None` = infinite).
pub fn newton_polygon(vals: &[Option<Rational>]) -> Result<NewtonPolygon> {
    let pts: Vec<(usize, Rational)> =
        vals.iter().enumerate().filter_map(|(i, v)| v.map(|v| (i, v))).collect();
    if pts.is_empty() {
        return Err(Error::ZeroSeries);
    }
    let mut hull: Vec<(usize, Rational)> = Vec::new();
    for &pt in &pts {
        while hull.len() >= 2 {
            let (i1, v1) = hull[hull.len() - 2];
            let (i2, v2) = hull[hull.len() - 1];
            // Drop the middle point unless it lies strictly below the chord.
            let lhs = (v2 - v1) * Rational::from_integer((pt.0 - i1) as i64);
            let rhs = (pt.1 - v1) * Rational::from_integer((i2 - i1) as i64);
            if lhs >= rhs {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    let segments = hull
        .windows(2)
        .map(|w| {
            let len = w[1].0 - w[0].0;
            Segment { slope: (w[1].1 - w[0].1) / Rational::from_integer(len as i64), mult: len }
        })
        .collect();
    Ok(NewtonPolygon { degree: vals.len().saturating_sub(1), vertices: hull, segments })
}

/// Newton polygon of exact integer coefficients.
pub fn newton_polygon_of(coeffs: &[BigInt], p: u64) -> Result<NewtonPolygon> {
    let vals: Vec<Option<Rational>> =
        coeffs.iter().map(|c| valuation(c, p).map(|e| Rational::from_integer(e as i64))).collect();
    newton_polygon(&vals)
}

fn eval_mod(coeffs: &[BigInt], x: &BigInt, m: &BigInt) -> BigInt {
    coeffs.iter().rev().fold(BigInt::zero(), |acc, c| (acc * x + c).mod_floor(m))
}

fn derivative(coeffs: &[BigInt]) -> Vec<BigInt> {
    coeffs.iter().enumerate().skip(1).map(|(i, c)| c * i).collect()
}

/// The root of valuation `v` of `sum c_i X^i`, where the Newton polygon has a
/// segment of length one with root valuation `v` (polygon slope `-v`).
///
/// Coefficients are exact when `known_prec` is `None`, otherwise known modulo
/// `p^known_prec`. The root is returned to precision at most `target`.
pub fn simple_root(
    coeffs: &[BigInt],
    p: u64,
    v: u32,
    known_prec: Option<u32>,
    target: u32,
) -> Result<PadicScalar> {
    let pv = pow_p(p, v);
    // g(Y) = f(p^v Y) / p^m
    let mut scaled: Vec<BigInt> = Vec::with_capacity(coeffs.len());
    let mut pw = BigInt::one();
    for c in coeffs {
        scaled.push(c * &pw);
        pw *= &pv;
    }
    let m = scaled.iter().filter_map(|c| valuation(c, p)).min().ok_or(Error::ZeroSeries)?;
    let pm = pow_p(p, m);
    let g: Vec<BigInt> = scaled.iter().map(|c| c / &pm).collect();
    let avail = match known_prec {
        Some(n) => {
            // f known mod p^n; coefficient i of g known mod p^(n + v i - m) >= p^(n-m).
            if n <= m {
                return Err(Error::PrecisionInsufficient(format!(
                    "root of valuation {v} needs more than {n} digits"
                )));
            }
            n - m
        }
        None => target,
    };
    let digits = avail.min(target.saturating_sub(v)).max(1);
    let pp = BigInt::from(p);
    let gd = derivative(&g);
    let nz: Vec<usize> =
        g.iter().enumerate().filter(|(_, c)| !c.mod_floor(&pp).is_zero()).map(|(i, _)| i).collect();
    if nz.len() != 2 || nz[1] != nz[0] + 1 {
        return Err(Error::InvalidArgument(format!("no simple root of valuation {v}")));
    }
    let a = &g[nz[0]];
    let b = &g[nz[1]];
    let mut y = (-(a * inv_mod(b, &pp).expect("unit"))).mod_floor(&pp);
    let mut k = 1u32;
    while k < digits {
        k = (2 * k).min(digits);
        let mk = pow_p(p, k);
        let num = eval_mod(&g, &y, &mk);
        let den = eval_mod(&gd, &y, &mk);
        let inv = inv_mod(&den, &mk)
            .ok_or_else(|| Error::InvalidArgument(format!("root of valuation {v} is not simple")))?;
        y = (&y - num * inv).mod_floor(&mk);
    }
    Ok(PadicScalar::new(p, &(y * pv), digits + v))
}

/// Serde adapter writing rationals as `"a/b"` (or `"a"` when integral).
pub mod ratio_string {
    use super::{parse_rational, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(r)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// Rational from a string `a` or `a/b`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    match s.split_once('/') {
        Some((a, b)) => {
            let a: i64 = a.trim().parse().map_err(|_| bad())?;
            let b: i64 = b.trim().parse().map_err(|_| bad())?;
            if b == 0 {
                return Err(bad());
            }
            Ok(Rational::new(a, b))
        }
        None => Ok(Rational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

pub fn rational_to_f64(r: Rational) -> f64 {
    r.numer().to_f64().unwrap_or(0.0) / r.denom().to_f64().unwrap_or(1.0)
}

pub fn ceil(r: Rational) -> i64 {
    r.ceil().to_integer()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(a: i64) -> Option<Rational> {
        Some(Rational::from_integer(a))
    }

    fn segs(np: &NewtonPolygon) -> Vec<(Rational, usize)> {
        np.segments.iter().map(|s| (s.slope, s.mult)).collect()
    }

    fn trial_division_valuation(mut x: u64, p: u64) -> u32 {
        let mut e = 0;
        while x.is_multiple_of(p) {
            x /= p;
            e += 1;
        }
        e
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(valuation_i64(5, 5), Some(1));
        assert_eq!(valuation_i64(12, 5), Some(0));
        assert_eq!(valuation_i64(4830, 5), Some(trial_division_valuation(4830, 5)));
        assert_eq!(valuation_i64(4830, 5), Some(1));
        assert_eq!(valuation_i64(0, 7), None);
        assert_eq!(valuation_i64(-16744, 7), Some(1));
    }

    #[test]
    fn polygon_examples() {
        let one = |a| Rational::from_integer(a);
        assert_eq!(segs(&newton_polygon(&[r(0), r(0)]).unwrap()), vec![(one(0), 1)]);
        assert_eq!(
            segs(&newton_polygon(&[r(0), r(0), r(1), r(3)]).unwrap()),
            vec![(one(0), 1), (one(1), 1), (one(2), 1)]
        );
        assert_eq!(segs(&newton_polygon(&[r(11), r(1), r(0)]).unwrap()), vec![(one(-10), 1), (one(-1), 1)]);
        assert_eq!(newton_polygon(&[None, None]), Err(Error::ZeroSeries));
    }

    #[test]
    fn polygon_skips_infinite_and_merges_collinear() {
        let np = newton_polygon(&[r(0), None, r(2), r(3), r(4)]).unwrap();
        assert_eq!(segs(&np), vec![(Rational::from_integer(1), 4)]);
        let np = newton_polygon(&[r(0), r(1), r(1)]).unwrap();
        assert_eq!(segs(&np), vec![(Rational::new(1, 2), 2)]);
    }

    #[test]
    fn precision_tracking() {
        let p = 5;
        let a = PadicScalar::from_i64(p, 25, 6);
        let b = PadicScalar::from_i64(p, 3, 4);
        // 25 * (3 + O(5^4)) is known mod 5^6
        assert_eq!((&a * &b).prec(), 6);
        let c = PadicScalar::from_i64(p, 26, 6);
        let d = &c - &PadicScalar::from_i64(p, 1, 6);
        assert_eq!(d.valuation(), Val::Exact(Rational::from_integer(2)));
        let z = &c - &c;
        assert_eq!(z.valuation(), Val::AtLeast(Rational::from_integer(6)));
        let q = a.checked_div(&PadicScalar::from_i64(p, 5, 6)).unwrap();
        assert_eq!(q.residue(), &BigInt::from(5));
        assert_eq!(q.prec(), 5);
        assert!(PadicScalar::from_i64(p, 1, 6).checked_div(&PadicScalar::from_i64(p, 5, 6)).is_err());
    }

    #[test]
    fn ratio_reduction() {
        let x = num_rational::BigRational::new(BigInt::from(1), BigInt::from(3));
        let s = PadicScalar::from_ratio(5, &x, 4).unwrap();
        assert_eq!((&s * &PadicScalar::from_i64(5, 3, 4)).residue(), &BigInt::from(1));
        let y = num_rational::BigRational::new(BigInt::from(1), BigInt::from(5));
        assert!(PadicScalar::from_ratio(5, &y, 4).is_err());
    }

    #[test]
    fn ramified_valuation() {
        let p = 7;
        let x = PadicScalar::from_i64(p, 49, 10);
        let y = PadicScalar::from_i64(p, 7, 10);
        let z = RamifiedScalar::new(x, y).unwrap();
        assert_eq!(z.valuation(), Val::Exact(Rational::new(3, 2)));
        let sq = RamifiedScalar::new(PadicScalar::zero(p, 10), PadicScalar::one(p, 10)).unwrap().square();
        assert_eq!(sq.x.residue(), &BigInt::from(7));
        assert_eq!(sq.valuation(), Val::Exact(Rational::from_integer(1)));
    }

    #[test]
    fn stabilization_roots_of_delta_at_7() {
        // X^2 + 16744 X + 7^11
        let coeffs = vec![pow_p(7, 11), BigInt::from(16744), BigInt::one()];
        let np = newton_polygon_of(&coeffs, 7).unwrap();
        assert_eq!(np.slopes(), vec![Rational::from_integer(-10), Rational::from_integer(-1)]);
        let a = simple_root(&coeffs, 7, 1, None, 12).unwrap();
        let b = simple_root(&coeffs, 7, 10, None, 20).unwrap();
        assert_eq!(a.valuation(), Val::Exact(Rational::from_integer(1)));
        assert_eq!(b.valuation(), Val::Exact(Rational::from_integer(10)));
        let m = pow_p(7, 12);
        let val = eval_mod(&coeffs, a.residue(), &m);
        assert!(val.is_zero());
        let sum = (&a + &b).with_prec(12);
        assert_eq!(sum.symmetric(), BigInt::from(-16744));
    }

    proptest! {
        #![proptest_config(crate::test_config(64))]

        #[test]
        fn slopes_sorted_and_counted(vals in proptest::collection::vec(proptest::option::weighted(0.8, 0i64..30), 1..12)) {
            let vs: Vec<Option<Rational>> = vals.iter().map(|v| v.map(Rational::from_integer)).collect();
            match newton_polygon(&vs) {
                Err(_) => prop_assert!(vals.iter().all(|v| v.is_none())),
                Ok(np) => {
                    let first = vals.iter().position(|v| v.is_some()).unwrap();
                    let last = vals.iter().rposition(|v| v.is_some()).unwrap();
                    let total: usize = np.segments.iter().map(|s| s.mult).sum();
                    prop_assert_eq!(total, last - first);
                    for w in np.segments.windows(2) {
                        prop_assert!(w[0].slope < w[1].slope);
                    }
                    let rise: Rational = np.segments.iter().map(|s| s.slope * Rational::from_integer(s.mult as i64)).sum();
                    prop_assert_eq!(rise, Rational::from_integer(vals[last].unwrap() - vals[first].unwrap()));
                    // every input point lies on or above the polygon
                    for (i, v) in vs.iter().enumerate() {
                        if let Some(v) = v {
                            let k = np.vertices.iter().rposition(|(j, _)| *j <= i).unwrap();
                            let (j0, v0) = np.vertices[k];
                            let height = if k < np.segments.len() {
                                v0 + np.segments[k].slope * Rational::from_integer((i - j0) as i64)
                            } else { v0 };
                            prop_assert!(*v >= height);
                        }
                    }
                }
            }
        }

        #[test]
        fn product_of_linear_factors(vs in proptest::collection::vec(0u32..6, 1..7), units in proptest::collection::vec(1i64..4, 7)) {
            let p = 5u64;
            // prod (1 - c_i T) with v(c_i) = vs[i]
            let mut poly = vec![BigInt::one()];
            for (i, v) in vs.iter().enumerate() {
                let c = pow_p(p, *v) * units[i];
                let mut next = vec![BigInt::zero(); poly.len() + 1];
                for (j, a) in poly.iter().enumerate() {
                    next[j] += a;
                    next[j + 1] -= a * &c;
                }
                poly = next;
            }
            let np = newton_polygon_of(&poly, p).unwrap();
            let mut expected: Vec<Rational> = vs.iter().map(|v| Rational::from_integer(*v as i64)).collect();
            expected.sort();
            prop_assert_eq!(np.slopes(), expected);
        }

        #[test]
        fn valuations_of_products_add(a in 1i64..100000, b in 1i64..100000, p in prop::sample::select(vec![5u64, 7, 11])) {
            let x = PadicScalar::from_i64(p, a, 12);
            let y = PadicScalar::from_i64(p, b, 12);
            let prod = &x * &y;
            prop_assert_eq!(prod.valuation().value(), x.valuation().value() + y.valuation().value());
            let s = &x + &y;
            let (vx, vy) = (x.valuation().value(), y.valuation().value());
            prop_assert!(s.valuation().value() >= vx.min(vy));
            if vx != vy {
                prop_assert_eq!(s.valuation().value(), vx.min(vy));
            }
        }
    }
}
