//! Truncated q-expansions of level-one forms and the operators acting on them.

use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::padic::{
    inv_mod, newton_polygon_of, pow_p, simple_root, valuation, PadicScalar, RamifiedScalar, Rational, Val,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Level {
    One,
    OneWithP,
}

/// A q-expansion `sum_{n <= n_max} (coeffs[n] / denom) q^n`.
///
/// When `precision` is set the coefficients are residues modulo `p^precision`
/// and `denom` is 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "QSeriesJson", into = "QSeriesJson")]
pub struct QSeries {
    pub coeffs: Vec<BigInt>,
    pub denom: BigInt,
    pub weight: i64,
    pub p: Option<u64>,
    pub precision: Option<u32>,
    pub level: Level,
    pub cuspidal: bool,
}

#[derive(Serialize, Deserialize)]
struct QSeriesJson {
    p: Option<u64>,
    weight: i64,
    coeffs: Vec<String>,
    cuspidal: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    precision: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    denominator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    level: Option<Level>,
}

impl TryFrom<QSeriesJson> for QSeries {
    type Error = Error;
    fn try_from(j: QSeriesJson) -> Result<Self> {
        let parse =
            |s: &str| s.trim().parse::<BigInt>().map_err(|_| Error::Parse(format!("not an integer: {s:?}")));
        let coeffs = j.coeffs.iter().map(|s| parse(s)).collect::<Result<Vec<_>>>()?;
        if coeffs.is_empty() {
            return Err(Error::Parse("empty coefficient list".into()));
        }
        let denom = match &j.denominator {
            Some(d) => parse(d)?,
            None => BigInt::one(),
        };
        if denom.is_zero() {
            return Err(Error::Parse("zero denominator".into()));
        }
        if j.precision.is_some() && j.p.is_none() {
            return Err(Error::Parse("precision given without p".into()));
        }
        if j.cuspidal && !coeffs[0].is_zero() {
            return Err(Error::Parse("cuspidal series with nonzero constant term".into()));
        }
        Ok(QSeries {
            coeffs,
            denom,
            weight: j.weight,
            p: j.p,
            precision: j.precision,
            level: j.level.unwrap_or(Level::One),
            cuspidal: j.cuspidal,
        })
    }
}

impl From<QSeries> for QSeriesJson {
    fn from(f: QSeries) -> Self {
        QSeriesJson {
            p: f.p,
            weight: f.weight,
            coeffs: f.coeffs.iter().map(|c| c.to_string()).collect(),
            cuspidal: f.cuspidal,
            precision: f.precision,
            denominator: (!f.denom.is_one()).then(|| f.denom.to_string()),
            level: (f.level != Level::One).then_some(f.level),
        }
    }
}

impl QSeries {
    /// Integral series of the given weight; cuspidal iff `a_0 = 0`.
    pub fn from_ints(coeffs: Vec<BigInt>, weight: i64) -> Self {
        let cuspidal = coeffs.first().is_none_or(|c| c.is_zero());
        QSeries {
            coeffs,
            denom: BigInt::one(),
            weight,
            p: None,
            precision: None,
            level: Level::One,
            cuspidal,
        }
    }

    pub fn from_i64s(coeffs: &[i64], weight: i64) -> Self {
        Self::from_ints(coeffs.iter().map(|&c| BigInt::from(c)).collect(), weight)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    pub fn n_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, n: usize) -> BigRational {
        BigRational::new(self.coeffs[n].clone(), self.denom.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Residue class `k mod (p-1)` of the weight.
    pub fn component(&self) -> Option<i64> {
        self.p.map(|p| self.weight.rem_euclid(p as i64 - 1))
    }

    pub fn truncate(&self, n_max: usize) -> Self {
        let mut f = self.clone();
        f.coeffs.truncate(n_max + 1);
        f
    }

    fn with_coeffs(&self, coeffs: Vec<BigInt>) -> Self {
        let mut f = self.clone();
        f.coeffs = coeffs;
        f.normalize();
        f
    }

    fn modulus(&self) -> Option<BigInt> {
        match (self.p, self.precision) {
            (Some(p), Some(n)) => Some(pow_p(p, n)),
            _ => None,
        }
    }

    fn normalize(&mut self) {
        if let Some(m) = self.modulus() {
            for c in &mut self.coeffs {
                *c = c.mod_floor(&m);
            }
            return;
        }
        if self.denom.is_negative() {
            self.denom = -&self.denom;
            for c in &mut self.coeffs {
                *c = -&*c;
            }
        }
        let g = self.coeffs.iter().fold(self.denom.clone(), |g, c| g.gcd(c));
        if !g.is_one() && !g.is_zero() {
            self.denom = &self.denom / &g;
            for c in &mut self.coeffs {
                *c = &*c / &g;
            }
        }
    }

    /// Reduce modulo `p^n`; fails if the denominator is divisible by `p`.
    pub fn reduce(&self, p: u64, n: u32) -> Result<Self> {
        if let Some(q) = self.p {
            if q != p {
                return Err(Error::PrimeMismatch(q, p));
            }
        }
        let n = self.precision.map_or(n, |m| m.min(n));
        let m = pow_p(p, n);
        let inv = inv_mod(&self.denom, &m).ok_or(Error::NonIntegral(p))?;
        let coeffs = self.coeffs.iter().map(|c| (c * &inv).mod_floor(&m)).collect();
        Ok(QSeries { coeffs, denom: BigInt::one(), p: Some(p), precision: Some(n), ..self.clone() })
    }

    /// Coefficient `n` as a p-adic scalar.
    pub fn padic_coeff(&self, n: usize, p: u64, prec: u32) -> Result<PadicScalar> {
        let prec = self.precision.map_or(prec, |m| m.min(prec));
        PadicScalar::from_ratio(p, &self.coeff(n), prec)
    }

    fn common(&self, other: &Self) -> Result<(Option<u64>, Option<u32>)> {
        let p = match (self.p, other.p) {
            (Some(a), Some(b)) if a != b => return Err(Error::PrimeMismatch(a, b)),
            (a, b) => a.or(b),
        };
        let prec = match (self.precision, other.precision) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        Ok((p, prec))
    }

    fn combine(&self, other: &Self, sign: i32) -> Result<Self> {
        let (p, precision) = self.common(other)?;
        let len = self.len().min(other.len());
        let coeffs = (0..len)
            .map(|i| {
                let a = &self.coeffs[i] * &other.denom;
                let b = &other.coeffs[i] * &self.denom;
                if sign > 0 {
                    a + b
                } else {
                    a - b
                }
            })
            .collect();
        let mut f = QSeries {
            coeffs,
            denom: &self.denom * &other.denom,
            weight: self.weight,
            p,
            precision,
            level: if self.level == other.level { self.level } else { Level::OneWithP },
            cuspidal: self.cuspidal && other.cuspidal,
        };
        if precision.is_some() {
            let m = f.modulus().unwrap();
            let inv = inv_mod(&f.denom, &m).ok_or(Error::NonIntegral(p.unwrap()))?;
            f.coeffs = f.coeffs.iter().map(|c| c * &inv).collect();
            f.denom = BigInt::one();
        }
        f.normalize();
        Ok(f)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, 1)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, -1)
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        self.with_coeffs(self.coeffs.iter().map(|a| a * c).collect())
    }

    /// Truncated product; weights add.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let (p, precision) = self.common(other)?;
        let len = self.len().min(other.len());
        let mut f = QSeries {
            coeffs: Vec::new(),
            denom: &self.denom * &other.denom,
            weight: self.weight + other.weight,
            p,
            precision,
            level: if self.level == other.level { self.level } else { Level::OneWithP },
            cuspidal: self.cuspidal || other.cuspidal,
        };
        let m = f.modulus();
        f.coeffs = mul_trunc(&self.coeffs, &other.coeffs, len, m.as_ref());
        f.normalize();
        Ok(f)
    }

    pub fn pow(&self, e: u32) -> Result<Self> {
        let mut acc = QSeries {
            coeffs: one_series(self.len()),
            denom: BigInt::one(),
            weight: 0,
            cuspidal: false,
            ..self.clone()
        };
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }
}

fn one_series(len: usize) -> Vec<BigInt> {
    let mut v = vec![BigInt::zero(); len];
    if len > 0 {
        v[0] = BigInt::one();
    }
    v
}

/// Truncated product of coefficient lists, optionally reduced mod `m`.
pub(crate) fn mul_trunc(a: &[BigInt], b: &[BigInt], len: usize, m: Option<&BigInt>) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); len];
    for (i, x) in a.iter().enumerate().take(len) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    if let Some(m) = m {
        for c in &mut out {
            *c = c.mod_floor(m);
        }
    }
    out
}

fn bernoulli_table() -> &'static Mutex<Vec<BigRational>> {
    static TABLE: OnceLock<Mutex<Vec<BigRational>>> = OnceLock::new();
    TABLE.get_or_init(|| Mutex::new(vec![BigRational::one()]))
}

fn binomial(n: usize, k: usize) -> BigInt {
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// Bernoulli number `B_n` with `B_1 = -1/2`.
pub fn bernoulli(n: usize) -> BigRational {
    let mut table = bernoulli_table().lock().unwrap_or_else(|e| e.into_inner());
    while table.len() <= n {
        let m = table.len();
        let s: BigRational = (0..m).map(|j| BigRational::from_integer(binomial(m + 1, j)) * &table[j]).sum();
        table.push(-s / BigRational::from_integer(BigInt::from(m + 1)));
    }
    table[n].clone()
}

/// `sigma_e(n)` for `0 <= n < len` (with `sigma_e(0) = 0`).
pub fn divisor_sums(e: u32, len: usize) -> Vec<BigInt> {
    let mut s = vec![BigInt::zero(); len];
    for d in 1..len {
        let de = num_traits::pow(BigInt::from(d), e as usize);
        for m in (d..len).step_by(d) {
            s[m] += &de;
        }
    }
    s
}

/// `E_k = 1 - (2k / B_k) sum sigma_{k-1}(n) q^n`.
pub fn eisenstein(k: i64, n_max: usize) -> Result<QSeries> {
    if k < 4 || k % 2 != 0 {
        return Err(Error::InvalidArgument(format!("Eisenstein series needs even weight >= 4, got {k}")));
    }
    let c = -BigRational::from_integer(BigInt::from(2 * k)) / bernoulli(k as usize);
    let sig = divisor_sums(k as u32 - 1, n_max + 1);
    let mut coeffs: Vec<BigInt> = sig.iter().map(|s| s * c.numer()).collect();
    coeffs[0] = c.denom().clone();
    let mut f = QSeries::from_ints(coeffs, k);
    f.denom = c.denom().clone();
    f.cuspidal = false;
    f.normalize();
    Ok(f)
}

/// The Hecke eigenform `sum_{n>=1} sigma_{k-1}(n) q^n` of weight `k`.
///
/// The constant term `-B_k/2k` is dropped: it is not p-integral in general
/// and plays no role in congruences at positive indices.
pub fn eisenstein_eigenform(k: i64, n_max: usize) -> Result<QSeries> {
    if k < 4 || k % 2 != 0 {
        return Err(Error::InvalidArgument(format!("Eisenstein series needs even weight >= 4, got {k}")));
    }
    let mut f = QSeries::from_ints(divisor_sums(k as u32 - 1, n_max + 1), k);
    f.cuspidal = false;
    Ok(f)
}

fn delta_cache() -> &'static Mutex<Vec<BigInt>> {
    static CACHE: OnceLock<Mutex<Vec<BigInt>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(Vec::new()))
}

/// `Delta = q prod (1 - q^n)^24`.
pub fn delta(n_max: usize) -> QSeries {
    let mut cache = delta_cache().lock().unwrap_or_else(|e| e.into_inner());
    if cache.len() <= n_max {
        let len = (n_max + 1).max(2 * cache.len());
        // Euler: prod (1 - q^n) = sum (-1)^m q^{m(3m-1)/2} over all integers m.
        let mut euler = vec![BigInt::zero(); len];
        euler[0] = BigInt::one();
        for m in 1i64.. {
            let sign = if m % 2 == 0 { 1 } else { -1 };
            let lo = (m * (3 * m - 1) / 2) as usize;
            if lo >= len {
                break;
            }
            euler[lo] += sign;
            let hi = (m * (3 * m + 1) / 2) as usize;
            if hi < len {
                euler[hi] += sign;
            }
        }
        let e2 = mul_trunc(&euler, &euler, len, None);
        let e4 = mul_trunc(&e2, &e2, len, None);
        let e8 = mul_trunc(&e4, &e4, len, None);
        let e16 = mul_trunc(&e8, &e8, len, None);
        let e24 = mul_trunc(&e16, &e8, len, None);
        let mut d = vec![BigInt::zero(); len];
        d[1..].clone_from_slice(&e24[..len - 1]);
        *cache = d;
    }
    let mut f = QSeries::from_ints(cache[..=n_max].to_vec(), 12);
    f.cuspidal = true;
    f
}

/// `tau(n)` for `n <= n_max`.
pub fn ramanujan_tau(n: usize) -> BigInt {
    delta(n).coeffs[n].clone()
}

/// `dim M_k(SL_2(Z))`.
pub fn dim_mk(k: i64) -> usize {
    if k < 0 || k % 2 != 0 || k == 2 {
        return 0;
    }
    let base = (k / 12) as usize;
    if k % 12 == 2 {
        base
    } else {
        base + 1
    }
}

/// `dim S_k(SL_2(Z))`.
pub fn dim_sk(k: i64) -> usize {
    if k < 12 {
        return 0;
    }
    dim_mk(k) - 1
}

/// Exponents `(a, b)` with `4a + 6b = w`, `b` in {0, 1}.
fn e4_e6_exponents(w: i64) -> Option<(u32, u32)> {
    if w < 0 || w % 2 != 0 || w == 2 {
        return None;
    }
    if w % 4 == 0 {
        Some(((w / 4) as u32, 0))
    } else {
        Some((((w - 6) / 4) as u32, 1))
    }
}

/// `E_4^a E_6^b Delta^c` of weight `k`, leading term `q^c`, for
/// `0 <= c < dim M_k`.
pub fn miller_generator(k: i64, c: usize, n_max: usize) -> Result<QSeries> {
    let (a, b) = e4_e6_exponents(k - 12 * c as i64)
        .ok_or_else(|| Error::InvalidArgument(format!("no generator of weight {k} with Delta^{c}")))?;
    let e4 = eisenstein(4, n_max)?;
    let e6 = eisenstein(6, n_max)?;
    let f = e4.pow(a)?.mul(&e6.pow(b)?)?.mul(&delta(n_max).pow(c as u32)?)?;
    let mut f = QSeries { weight: k, ..f };
    f.cuspidal = c > 0;
    Ok(f)
}

/// Echelonized integral basis of `M_k(1)` (or `S_k(1)`): `a_i(f_j) = delta_ij`
/// for `i` below the dimension (shifted by one in the cuspidal case).
pub fn miller_basis(k: i64, cuspidal: bool, n_max: usize) -> Result<Vec<QSeries>> {
    if k < 0 || k % 2 != 0 {
        return Err(Error::InvalidArgument(format!("weight {k} is not even and non-negative")));
    }
    let d = dim_mk(k);
    let first = usize::from(cuspidal);
    let dim = d.saturating_sub(first);
    if n_max < dim + 1 {
        return Err(Error::TruncationTooShort { needed: dim + 1, available: n_max });
    }
    let mut basis: Vec<QSeries> = (first..d).map(|c| miller_generator(k, c, n_max)).collect::<Result<_>>()?;
    for j in (0..basis.len()).rev() {
        for i in (j + 1)..basis.len() {
            let c = basis[j].coeffs[i + first].clone();
            if !c.is_zero() {
                basis[j] = basis[j].sub(&basis[i].scale(&c))?;
            }
        }
    }
    Ok(basis)
}

/// `theta = q d/dq`: `a_n -> n a_n`, weight `+2`.
pub fn theta(f: &QSeries) -> QSeries {
    let coeffs = f.coeffs.iter().enumerate().map(|(n, a)| a * n).collect();
    let mut g = f.with_coeffs(coeffs);
    g.weight += 2;
    g.cuspidal = true;
    g
}

/// `theta^(kappa-1) f`.
pub fn theta_power(f: &QSeries, kappa: u32) -> Result<QSeries> {
    if kappa < 2 {
        return Err(Error::InvalidArgument(format!("kappa must be >= 2, got {kappa}")));
    }
    let e = kappa as usize - 1;
    let coeffs = f.coeffs.iter().enumerate().map(|(n, a)| a * num_traits::pow(BigInt::from(n), e)).collect();
    let mut g = f.with_coeffs(coeffs);
    g.weight += 2 * e as i64;
    g.cuspidal = true;
    Ok(g)
}

/// `U_p`: `b_n = a_{pn}`, keeping every index the input determines.
pub fn u_operator(f: &QSeries, p: u64) -> Result<QSeries> {
    let p = p as usize;
    if f.n_max() < p {
        return Err(Error::TruncationTooShort { needed: p, available: f.n_max() });
    }
    let coeffs = f.coeffs.iter().step_by(p).cloned().collect();
    let mut g = f.with_coeffs(coeffs);
    g.level = Level::OneWithP;
    Ok(g)
}

/// `V_p`: `f(q) -> f(q^p)`, same truncation.
pub fn v_operator(f: &QSeries, p: u64) -> QSeries {
    let p = p as usize;
    let mut coeffs = vec![BigInt::zero(); f.len()];
    for (n, a) in f.coeffs.iter().enumerate() {
        if n * p >= coeffs.len() {
            break;
        }
        coeffs[n * p] = a.clone();
    }
    let mut g = f.with_coeffs(coeffs);
    g.level = Level::OneWithP;
    g
}

/// Level-one Hecke operator `T_n` at the series' weight:
/// `a_m(T_n f) = sum_{d | (m, n)} d^{k-1} a_{mn/d^2}`.
pub fn hecke_tn(f: &QSeries, n: usize) -> Result<QSeries> {
    if n == 0 {
        return Err(Error::InvalidArgument("T_0 is undefined".into()));
    }
    if f.weight < 1 {
        return Err(Error::InvalidArgument(format!("weight {} for T_n", f.weight)));
    }
    let out_len = f.n_max() / n + 1;
    let k1 = (f.weight - 1) as usize;
    let divisors: Vec<usize> = (1..=n).filter(|d| n.is_multiple_of(*d)).collect();
    let coeffs = (0..out_len)
        .map(|m| {
            divisors
                .iter()
                .filter(|&&d| m % d == 0)
                .map(|&d| num_traits::pow(BigInt::from(d), k1) * &f.coeffs[m * n / (d * d)])
                .sum()
        })
        .collect();
    Ok(f.with_coeffs(coeffs))
}

/// Matrix of `T_n` on the echelonized basis of `S_k(1)`, column `j` holding
/// the coordinates of `T_n f_j`.
pub(crate) fn hecke_matrix(k: i64, n: usize) -> Result<Matrix> {
    let d = dim_sk(k);
    if d == 0 {
        return Ok(Vec::new());
    }
    let basis = miller_basis(k, true, n * (d + 1))?;
    let images: Vec<QSeries> = basis.iter().map(|f| hecke_tn(f, n)).collect::<Result<_>>()?;
    Ok((0..d).map(|i| images.iter().map(|g| g.coeffs[i + 1].clone()).collect()).collect())
}

/// `det(X - T_n | S_k(1))`, coefficients lowest degree first.
pub fn hecke_charpoly(k: i64, n: usize) -> Result<Vec<BigInt>> {
    let mut c = linalg::charpoly(&hecke_matrix(k, n)?, None);
    c.reverse();
    Ok(c)
}

/// `floor(w (p+1) / 12) + 1`.
pub fn sturm_depth(w_max: i64, p: u64) -> usize {
    (w_max.max(0) as usize * (p as usize + 1)) / 12 + 1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Congruence {
    pub holds: bool,
    pub first_failure: Option<usize>,
    pub depth: usize,
}

/// Whether `a_n(f) = a_n(g) mod p^m` for all `n <= depth`.
pub fn congruent_mod(f: &QSeries, g: &QSeries, p: u64, m: u32, depth: usize) -> Result<Congruence> {
    let avail = f.n_max().min(g.n_max());
    if depth > avail {
        return Err(Error::TruncationTooShort { needed: depth, available: avail });
    }
    for s in [f, g] {
        if let Some(n) = s.precision {
            if n < m {
                return Err(Error::PrecisionInsufficient(format!(
                    "series known mod p^{n}, congruence asked mod p^{m}"
                )));
            }
        }
    }
    let a = f.reduce(p, m)?;
    let b = g.reduce(p, m)?;
    let first_failure = (0..=depth).find(|&n| a.coeffs[n] != b.coeffs[n]);
    Ok(Congruence { holds: first_failure.is_none(), first_failure, depth })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootChoice {
    SmallSlope,
    LargeSlope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ClassicalLevel1,
    PStabilized(RootChoice),
    SyntheticFixture,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Eigenvalue {
    Padic(PadicScalar),
    Ramified(RamifiedScalar),
}

impl Eigenvalue {
    pub fn valuation(&self) -> Val {
        match self {
            Eigenvalue::Padic(a) => a.valuation(),
            Eigenvalue::Ramified(a) => a.valuation(),
        }
    }

    pub fn as_padic(&self) -> Option<&PadicScalar> {
        match self {
            Eigenvalue::Padic(a) => Some(a),
            Eigenvalue::Ramified(_) => None,
        }
    }
}

/// A normalized eigenform with its `U_p` or `T_p` eigenvalue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EigenformRecord {
    pub series: QSeries,
    pub p: u64,
    pub slope: Rational,
    pub a_p: Eigenvalue,
    pub provenance: Provenance,
}

impl EigenformRecord {
    /// Record for an exact level-one eigenform; `a_p` is read off the series.
    pub fn classical(series: QSeries, p: u64, prec: u32, provenance: Provenance) -> Result<Self> {
        if series.n_max() < p as usize {
            return Err(Error::TruncationTooShort { needed: p as usize, available: series.n_max() });
        }
        let a_p = series.padic_coeff(p as usize, p, prec)?;
        let slope = match a_p.valuation() {
            Val::Exact(v) => v,
            Val::AtLeast(_) => {
                return Err(Error::PrecisionInsufficient(format!("a_{p} vanishes mod {p}^{prec}")))
            }
        };
        Ok(EigenformRecord { series, p, slope, a_p: Eigenvalue::Padic(a_p), provenance })
    }

    pub fn weight(&self) -> i64 {
        self.series.weight
    }
}

/// `f - beta f(q^p)` for a root `beta` of `X^2 - a_p X + p^(k-1)`; the result
/// is a `U_p`-eigenform with eigenvalue the other root.
pub fn p_stabilize(f: &EigenformRecord, choice: RootChoice, prec: u32) -> Result<EigenformRecord> {
    let p = f.p;
    let k = f.weight();
    let a = f.a_p.as_padic().ok_or_else(|| Error::WildStabilization("a_p outside Q_p".into()))?;
    let va = match a.valuation() {
        Val::Exact(v) => v,
        Val::AtLeast(v) => {
            return Err(Error::WildStabilization(format!(
                "v(a_p) >= {v} leaves the root slopes undetermined"
            )))
        }
    };
    if va * 2 >= Rational::from_integer(k - 1) {
        return Err(Error::WildStabilization(format!(
            "v(a_p) = {va} >= (k-1)/2: both roots have slope {}/2",
            k - 1
        )));
    }
    let va = va.to_integer() as u32;
    let big = (k - 1) as u32;
    let coeffs = vec![pow_p(p, big), -a.symmetric(), BigInt::one()];
    let np = newton_polygon_of(&coeffs, p)?;
    debug_assert_eq!(np.segments.len(), 2);
    let known = a.prec();
    let alpha = simple_root(&coeffs, p, va, Some(known), prec + big)?;
    let beta = a.checked_sub(&alpha)?;
    let (eig, other, slope) = match choice {
        RootChoice::SmallSlope => (alpha, beta, va),
        RootChoice::LargeSlope => (beta, alpha, big - va),
    };
    let n = prec.min(other.prec()).min(eig.prec());
    let base = f.series.reduce(p, n)?;
    let shifted = v_operator(&base, p).scale(other.residue());
    let mut series = base.sub(&shifted)?;
    series.level = Level::OneWithP;
    Ok(EigenformRecord {
        series,
        p,
        slope: Rational::from_integer(slope as i64),
        a_p: Eigenvalue::Padic(eig.with_prec(n)),
        provenance: Provenance::PStabilized(choice),
    })
}

/// Both roots of `X^2 - a X + p^(k-1)` for an exact integer `a` with
/// `v(a) < (k-1)/2`.
pub fn stabilization_roots(a: &BigInt, k: i64, p: u64, prec: u32) -> Result<(PadicScalar, PadicScalar)> {
    let va = valuation(a, p).ok_or_else(|| Error::WildStabilization("a_p = 0".into()))?;
    if 2 * va as i64 >= k - 1 {
        return Err(Error::WildStabilization(format!("v(a_p) = {va} >= (k-1)/2")));
    }
    let big = (k - 1) as u32;
    let coeffs = vec![pow_p(p, big), -a, BigInt::one()];
    let alpha = simple_root(&coeffs, p, va, None, prec)?;
    let beta = simple_root(&coeffs, p, big - va, None, prec)?;
    Ok((alpha, beta))
}

/// Decimal `to_f64` helper for display.
pub fn to_f64(x: &BigRational) -> f64 {
    x.numer().to_f64().unwrap_or(f64::NAN) / x.denom().to_f64().unwrap_or(f64::NAN)
}
