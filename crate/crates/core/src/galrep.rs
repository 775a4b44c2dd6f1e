//! Mod-p local shapes on inertia and the reduction classifier.
//!
//! A shape is either `omega^a + omega^b` (reducible, exponents mod `p-1`) or
//! `ind(omega_2^t)` (irreducible, exponent mod `p^2-1` up to `t ~ pt`).
//! Everything here is exponent arithmetic; no characters are represented.

use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic::{is_prime, valuation_i64, PadicScalar, RamifiedScalar, Rational, Val};
use crate::qexp::Eigenvalue;

/// Extension class of a reducible shape, tracked only where a Serre weight
/// depends on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Star {
    Zero,
    Nonzero,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ShapeKind {
    Reducible { a: u64, b: u64, star: Star },
    Irreducible { t: u64 },
    NotCovered { reason: String },
}

/// A canonicalized inertial shape at the prime `p`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ShapeJson", into = "ShapeJson")]
pub struct LocalShape {
    p: u64,
    kind: ShapeKind,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum ShapeJson {
    Red {
        p: u64,
        a: i64,
        b: i64,
        #[serde(default = "unknown_star")]
        star: Star,
    },
    Irr {
        p: u64,
        t: i64,
    },
    NotCovered {
        p: u64,
        reason: String,
    },
}

fn unknown_star() -> Star {
    Star::Unknown
}

impl TryFrom<ShapeJson> for LocalShape {
    type Error = Error;

    fn try_from(j: ShapeJson) -> Result<Self> {
        match j {
            ShapeJson::Red { p, a, b, star } => Ok(LocalShape::reducible(p, a, b)?.with_star(star)),
            ShapeJson::Irr { p, t } => LocalShape::irreducible(p, t),
            ShapeJson::NotCovered { p, reason } => LocalShape::not_covered(p, reason),
        }
    }
}

impl From<LocalShape> for ShapeJson {
    fn from(s: LocalShape) -> Self {
        let p = s.p;
        match s.kind {
            ShapeKind::Reducible { a, b, star } => ShapeJson::Red { p, a: a as i64, b: b as i64, star },
            ShapeKind::Irreducible { t } => ShapeJson::Irr { p, t: t as i64 },
            ShapeKind::NotCovered { reason } => ShapeJson::NotCovered { p, reason },
        }
    }
}

fn check_prime(p: u64) -> Result<()> {
    if p < 3 || !is_prime(p) {
        return Err(Error::InvalidArgument(format!("p = {p} must be an odd prime")));
    }
    Ok(())
}

fn md(x: i64, m: u64) -> u64 {
    x.rem_euclid(m as i64) as u64
}

impl LocalShape {
    /// `omega^a + omega^b` with unknown extension class.
    pub fn reducible(p: u64, a: i64, b: i64) -> Result<Self> {
        check_prime(p)?;
        let (a, b) = (md(a, p - 1), md(b, p - 1));
        Ok(LocalShape { p, kind: ShapeKind::Reducible { a: a.max(b), b: a.min(b), star: Star::Unknown } })
    }

    /// `ind(omega_2^t)`; rejects `p+1 | t`.
    pub fn irreducible(p: u64, t: i64) -> Result<Self> {
        check_prime(p)?;
        let q = p * p - 1;
        let t = md(t, q);
        if t.is_multiple_of(p + 1) {
            return Err(Error::InvalidArgument(format!(
                "ind(omega_2^{t}) is reducible: p+1 = {} divides {t}",
                p + 1
            )));
        }
        let pt = (t * p) % q;
        Ok(LocalShape { p, kind: ShapeKind::Irreducible { t: t.min(pt) } })
    }

    pub fn not_covered(p: u64, reason: impl Into<String>) -> Result<Self> {
        check_prime(p)?;
        Ok(LocalShape { p, kind: ShapeKind::NotCovered { reason: reason.into() } })
    }

    pub fn with_star(mut self, s: Star) -> Self {
        if let ShapeKind::Reducible { star, .. } = &mut self.kind {
            *star = s;
        }
        self
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn kind(&self) -> &ShapeKind {
        &self.kind
    }

    pub fn is_irreducible(&self) -> bool {
        matches!(self.kind, ShapeKind::Irreducible { .. })
    }

    pub fn is_covered(&self) -> bool {
        !matches!(self.kind, ShapeKind::NotCovered { .. })
    }

    /// Parse `red(a,b)`, `red(a,b);star=0|1` or `irr(t)`.
    pub fn parse(p: u64, s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::Parse(format!("not a shape: {s:?}"));
        let (body, star) = match s.split_once(';') {
            Some((body, rest)) => {
                let star = match rest {
                    "star=0" => Star::Zero,
                    "star=1" => Star::Nonzero,
                    "star=?" => Star::Unknown,
                    _ => return Err(bad()),
                };
                (body, star)
            }
            None => (s.as_str(), Star::Unknown),
        };
        let args = |prefix: &str| -> Option<Vec<i64>> {
            let inner = body.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?;
            inner.split(',').map(|x| x.parse().ok()).collect()
        };
        if let Some(v) = args("red") {
            if v.len() == 2 {
                return Ok(LocalShape::reducible(p, v[0], v[1])?.with_star(star));
            }
        } else if let Some(v) = args("irr") {
            if v.len() == 1 && star == Star::Unknown {
                return LocalShape::irreducible(p, v[0]);
            }
        }
        Err(bad())
    }

    /// `omega^j` times the shape.
    pub fn twist(&self, j: i64) -> Self {
        let p = self.p;
        match &self.kind {
            ShapeKind::Reducible { a, b, star } => LocalShape::reducible(p, *a as i64 + j, *b as i64 + j)
                .expect("prime already checked")
                .with_star(*star),
            ShapeKind::Irreducible { t } => {
                let q = (p * p - 1) as i64;
                let shift = (j.rem_euclid(q) * (p as i64 + 1)).rem_euclid(q);
                LocalShape::irreducible(p, *t as i64 + shift).expect("twist keeps p+1 coprime")
            }
            ShapeKind::NotCovered { .. } => self.clone(),
        }
    }

    /// Exponent of the determinant on inertia, mod `p-1`.
    pub fn det_exponent(&self) -> Result<u64> {
        match &self.kind {
            ShapeKind::Reducible { a, b, .. } => Ok((a + b) % (self.p - 1)),
            ShapeKind::Irreducible { t } => Ok(t % (self.p - 1)),
            ShapeKind::NotCovered { reason } => Err(Error::NotCovered(reason.clone())),
        }
    }
}

impl fmt::Display for LocalShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ShapeKind::Reducible { a, b, star } => {
                write!(f, "red({a},{b})")?;
                match star {
                    Star::Zero => write!(f, ";star=0"),
                    Star::Nonzero => write!(f, ";star=1"),
                    Star::Unknown => Ok(()),
                }
            }
            ShapeKind::Irreducible { t } => write!(f, "irr({t})"),
            ShapeKind::NotCovered { reason } => write!(f, "notcovered({reason})"),
        }
    }
}

/// Equality up to the orbit and ordering rules; stars compare only when both
/// are known.
pub fn shapes_equal(s1: &LocalShape, s2: &LocalShape) -> Result<bool> {
    if s1.p != s2.p {
        return Err(Error::PrimeMismatch(s1.p, s2.p));
    }
    Ok(match (&s1.kind, &s2.kind) {
        (ShapeKind::Reducible { a: a1, b: b1, star: x }, ShapeKind::Reducible { a: a2, b: b2, star: y }) => {
            a1 == a2 && b1 == b2 && (*x == Star::Unknown || *y == Star::Unknown || x == y)
        }
        (ShapeKind::Irreducible { t: t1 }, ShapeKind::Irreducible { t: t2 }) => t1 == t2,
        _ => false,
    })
}

/// Classifier input: weight, exact slope and optionally the eigenvalue.
#[derive(Debug, Clone)]
pub struct ReductionInput {
    pub p: u64,
    pub weight: i64,
    pub slope: Rational,
    pub a_p: Option<Eigenvalue>,
}

impl ReductionInput {
    pub fn new(p: u64, weight: i64, slope: Rational) -> Result<Self> {
        check_prime(p)?;
        if weight < 2 {
            return Err(Error::InvalidArgument(format!("weight {weight} < 2")));
        }
        if slope < Rational::zero() {
            return Err(Error::InvalidArgument(format!("negative slope {slope}")));
        }
        Ok(ReductionInput { p, weight, slope, a_p: None })
    }

    pub fn with_eigenvalue(mut self, a_p: Eigenvalue) -> Self {
        self.a_p = Some(a_p);
        self
    }

    pub fn r(&self) -> i64 {
        self.weight - 2
    }

    /// `b` in `{2, ..., p}` with `b = r mod (p-1)`.
    pub fn b(&self) -> i64 {
        2 + (self.r() - 2).rem_euclid(self.p as i64 - 1)
    }

    /// `t` in `{1, ..., p-1}` with `t - 1 = k - 2 mod (p-1)`.
    pub fn t(&self) -> i64 {
        1 + (self.weight - 2).rem_euclid(self.p as i64 - 1)
    }
}

/// The three regimes that need the extra invariants `t, tau`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    SlopeOne,
    SlopeHalf,
    SlopeThreeHalves,
}

impl Regime {
    pub fn slope(self) -> Rational {
        match self {
            Regime::SlopeOne => Rational::from_integer(1),
            Regime::SlopeHalf => Rational::new(1, 2),
            Regime::SlopeThreeHalves => Rational::new(3, 2),
        }
    }

    fn offset(self) -> i64 {
        match self {
            Regime::SlopeOne => 4,
            Regime::SlopeHalf => 3,
            Regime::SlopeThreeHalves => 5,
        }
    }
}

/// `t` (or `t'`) and `tau` (or `tau'`); `t = None` means `v(0)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExceptionalParams {
    pub regime: Regime,
    pub t: Option<u32>,
    pub tau: Val,
    pub precision: Option<u32>,
}

impl ExceptionalParams {
    /// Parameters given symbolically, with `t` read off the weight.
    pub fn symbolic(p: u64, weight: i64, regime: Regime, tau: Rational) -> Self {
        ExceptionalParams {
            regime,
            t: valuation_i64(weight - regime.offset(), p),
            tau: Val::Exact(tau),
            precision: None,
        }
    }

    fn undecidable(&self, what: &str) -> Error {
        Error::Undecidable { what: what.to_string(), precision: self.precision.unwrap_or(0) }
    }

    fn tau_cmp(&self, x: Rational, what: &str) -> Result<std::cmp::Ordering> {
        self.tau.cmp_with(x).ok_or_else(|| self.undecidable(what))
    }
}

fn binom2(n: i64) -> BigInt {
    BigInt::from(n) * BigInt::from(n - 1) / 2
}

/// The constant subtracted from `a_p^2` in the definition of `tau`.
fn tau_shift(p: u64, weight: i64, regime: Regime) -> BigInt {
    let pb = BigInt::from(p);
    match regime {
        Regime::SlopeOne => binom2(weight - 2) * &pb * &pb,
        Regime::SlopeHalf => BigInt::from(weight - 2) * &pb,
        Regime::SlopeThreeHalves => BigInt::from(weight - 4) * binom2(weight - 3) * &pb * &pb * &pb,
    }
}

/// `t = v(k - c)` and `tau = v((a_p^2 - C) / (p a_p))` for the regime.
pub fn params(p: u64, weight: i64, a_p: &Eigenvalue, regime: Regime) -> Result<ExceptionalParams> {
    check_prime(p)?;
    let va = match a_p.valuation() {
        Val::Exact(v) if v == regime.slope() => v,
        v => {
            return Err(Error::InvalidArgument(format!(
                "v(a_p) = {v} does not match slope {}",
                regime.slope()
            )))
        }
    };
    let a: RamifiedScalar = match a_p {
        Eigenvalue::Padic(x) => RamifiedScalar::from_padic(x.clone()),
        Eigenvalue::Ramified(x) => x.clone(),
    };
    if a.p() != p {
        return Err(Error::PrimeMismatch(a.p(), p));
    }
    let sq = a.square();
    let c = PadicScalar::new(p, &tau_shift(p, weight, regime), sq.x.prec().max(sq.y.prec()) + 1);
    let diff = RamifiedScalar::new(sq.x.checked_sub(&c)?, sq.y.clone())?;
    let tau = diff.valuation().shift(-va - 1);
    Ok(ExceptionalParams {
        regime,
        t: valuation_i64(weight - regime.offset(), p),
        tau,
        precision: Some(a.x.prec().min(a.y.prec())),
    })
}

fn divides(p: u64, x: i128) -> bool {
    x.rem_euclid(p as i128) == 0
}

fn params_for<'a>(
    input: &ReductionInput,
    given: Option<&'a ExceptionalParams>,
    regime: Regime,
    owned: &'a mut Option<ExceptionalParams>,
) -> Result<Option<&'a ExceptionalParams>> {
    if let Some(g) = given {
        if g.regime != regime {
            return Err(Error::InvalidArgument(format!(
                "parameters for {:?} given in the {regime:?} regime",
                g.regime
            )));
        }
        return Ok(Some(g));
    }
    if let Some(a) = &input.a_p {
        *owned = Some(params(input.p, input.weight, a, regime)?);
        return Ok(owned.as_ref());
    }
    Ok(None)
}

/// Shape of the reduction on inertia in the regimes the tables cover.
///
/// Inputs outside the displayed guards return a `NotCovered` shape naming
/// the guard; slopes of 2 or more are refused.
pub fn classify(input: &ReductionInput, given: Option<&ExceptionalParams>) -> Result<LocalShape> {
    let p = input.p;
    let w = input.weight;
    let s = input.slope;
    let one = Rational::from_integer(1);
    let two = Rational::from_integer(2);
    let nc = |reason: String| LocalShape::not_covered(p, reason);
    if s.is_zero() {
        return LocalShape::reducible(p, w - 1, 0);
    }
    if w <= p as i64 + 1 {
        return LocalShape::irreducible(p, w - 1);
    }
    if s >= two {
        return Err(Error::UseExtrapolate(s));
    }
    let mut owned = None;
    if s < one {
        if s == Rational::new(1, 2) && md(w, p - 1) == md(3, p - 1) {
            let Some(pr) = params_for(input, given, Regime::SlopeHalf, &mut owned)? else {
                return nc("slope 1/2 with k = 3 mod (p-1) needs a_p or (t, tau)".into());
            };
            let below = match pr.t {
                None => match pr.tau {
                    Val::Exact(_) => true,
                    Val::AtLeast(_) => return Err(pr.undecidable("tau < t with t infinite")),
                },
                Some(t) => pr.tau_cmp(Rational::from_integer(t as i64), "tau < t")?.is_lt(),
            };
            return if below { LocalShape::irreducible(p, 2) } else { LocalShape::reducible(p, 1, 1) };
        }
        return LocalShape::irreducible(p, input.t());
    }
    let r = input.r() as i128;
    let b = input.b();
    let pi = p as i64;
    if s == one {
        if b == 2 {
            let Some(pr) = params_for(input, given, Regime::SlopeOne, &mut owned)? else {
                return nc("b = 2 needs b_p or (t', tau') to test tau' = 0 = t'".into());
            };
            if pr.t != Some(0) {
                return nc(format!("b = 2 requires t' = 0, have t' = {}", t_str(pr.t)));
            }
            return if pr.tau_cmp(Rational::zero(), "tau' = 0")?.is_eq() {
                LocalShape::reducible(p, b, 1)
            } else {
                nc(format!("b = 2 requires tau' = 0, have tau' = {}", pr.tau))
            };
        }
        if b < pi {
            return if divides(p, r - b as i128) {
                nc(format!("b = {b} requires p not dividing r - b"))
            } else {
                LocalShape::reducible(p, b, 1)
            };
        }
        return if divides(p, r - b as i128) {
            LocalShape::reducible(p, 1, 1)
        } else {
            nc("b = p requires p | r - b".into())
        };
    }
    if s == Rational::new(3, 2) && md(w, p - 1) == md(5, p - 1) {
        let Some(pr) = params_for(input, given, Regime::SlopeThreeHalves, &mut owned)? else {
            return nc("slope 3/2 with l = 5 mod (p-1) needs b_p or (t', tau')".into());
        };
        if pr.t != Some(0) {
            return nc(format!("slope 3/2 exceptional requires t' = 0, have t' = {}", t_str(pr.t)));
        }
        if pr.tau_cmp(Rational::new(1, 2), "tau' >= 1/2")?.is_lt() {
            return nc(format!("tau' = {} is below 1/2", pr.tau));
        }
        return if pr.tau_cmp(one, "tau' < 1")?.is_lt() {
            LocalShape::irreducible(p, pi + 3)
        } else {
            LocalShape::reducible(p, 2, 2)
        };
    }
    let bb = b as i128;
    if b == 2 {
        if divides(p, r * (r - 1)) {
            LocalShape::irreducible(p, b + pi)
        } else {
            nc("b = 2 requires p | r(r-1)".into())
        }
    } else if b < pi {
        if divides(p, r - bb) {
            nc(format!("b = {b} requires p not dividing r - b"))
        } else {
            LocalShape::irreducible(p, b + pi)
        }
    } else if (r - bb).rem_euclid((p * p) as i128) != 0 {
        LocalShape::irreducible(p, 2 * pi)
    } else {
        nc("b = p requires p^2 not dividing r - b".into())
    }
}

/// Which comparison table to replay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Table {
    Table1,
    Table2,
    Table3,
}

impl std::str::FromStr for Table {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "1" | "table1" => Ok(Table::Table1),
            "2" | "table2" => Ok(Table::Table2),
            "3" | "table3" => Ok(Table::Table3),
            _ => Err(Error::Parse(format!("unknown table {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompatEntry {
    pub branch: String,
    pub k: i64,
    pub l: i64,
    pub f_shape: String,
    pub twisted: String,
    pub direct: String,
    pub pass: bool,
    pub irreducibility_agrees: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompatReport {
    pub p: u64,
    pub table: Table,
    pub entries: Vec<CompatEntry>,
    pub implications: Vec<String>,
}

impl CompatReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass && e.irreducibility_agrees)
    }
}

fn compat_entry(
    branch: String,
    f: (&ReductionInput, Option<&ExceptionalParams>),
    g: (&ReductionInput, Option<&ExceptionalParams>),
) -> CompatEntry {
    let f_shape = classify(f.0, f.1);
    let twisted = f_shape.clone().map(|s| s.twist(1));
    let direct = classify(g.0, g.1);
    let show = |x: &Result<LocalShape>| match x {
        Ok(s) => s.to_string(),
        Err(e) => format!("error: {e}"),
    };
    let (pass, irr) = match (&twisted, &direct) {
        (Ok(a), Ok(b)) => (
            shapes_equal(a, b).unwrap_or(false),
            a.is_covered() && b.is_covered() && a.is_irreducible() == b.is_irreducible(),
        ),
        _ => (false, false),
    };
    CompatEntry {
        branch,
        k: f.0.weight,
        l: g.0.weight,
        f_shape: show(&f_shape),
        twisted: show(&twisted),
        direct: show(&direct),
        pass,
        irreducibility_agrees: irr,
    }
}

/// Weight `k p^M + 2 + n (p-1) p^M` of the form `g` built from `f`.
pub fn lifted_weight(p: u64, k: i64, m: u32, n: i64) -> i64 {
    let pm = (p as i64).pow(m);
    k * pm + 2 + n * (p as i64 - 1) * pm
}

/// Replays a comparison table: for each residue class and parameter branch,
/// twists the classification of `f` and compares with the direct
/// classification of `g` at a weight satisfying the table's hypothesis on `M`.
pub fn compat_check(p: u64, table: Table) -> Result<CompatReport> {
    check_prime(p)?;
    let pi = p as i64;
    let mut entries = Vec::new();
    let mut implications = Vec::new();
    match table {
        Table::Table1 => {
            for b in 2..=pi {
                for j in 1..=2 {
                    let k = b + j * (pi - 1);
                    let l = lifted_weight(p, k, 1, 1);
                    let f = ReductionInput::new(p, k, Rational::zero())?;
                    let g = ReductionInput::new(p, l, Rational::from_integer(1))?;
                    let pr = (b == 2)
                        .then(|| ExceptionalParams::symbolic(p, l, Regime::SlopeOne, Rational::zero()));
                    entries.push(compat_entry(format!("case b={b}"), (&f, None), (&g, pr.as_ref())));
                }
            }
        }
        Table::Table2 => {
            for t in 1..pi {
                for j in 1..=2 {
                    let k = t + 1 + j * (pi - 1);
                    let l = lifted_weight(p, k, 2, 1);
                    let f = ReductionInput::new(p, k, Rational::new(1, 3))?;
                    let g = ReductionInput::new(p, l, Rational::new(4, 3))?;
                    entries.push(compat_entry(format!("t={t}, b={}", g.b()), (&f, None), (&g, None)));
                }
            }
        }
        Table::Table3 => {
            let k = 3 + (pi - 1);
            let l = lifted_weight(p, k, 1, 1);
            let f = ReductionInput::new(p, k, Rational::new(1, 2))?;
            let g = ReductionInput::new(p, l, Rational::new(3, 2))?;
            let t = valuation_i64(k - 3, p).unwrap_or(0) as i64;
            let branches = [
                ("tau < t", Rational::from_integer(t) - Rational::new(1, 2), Rational::new(1, 2)),
                ("tau >= t", Rational::from_integer(t), Rational::from_integer(1)),
            ];
            for (label, tau, tau2) in branches {
                let pf = ExceptionalParams::symbolic(p, k, Regime::SlopeHalf, tau);
                let pg = ExceptionalParams::symbolic(p, l, Regime::SlopeThreeHalves, tau2);
                entries.push(compat_entry(label.to_string(), (&f, Some(&pf)), (&g, Some(&pg))));
            }
            implications.push("tau < t  <=>  tau' < 1".to_string());
            implications.push("tau >= t  <=>  tau' >= 1".to_string());
        }
    }
    Ok(CompatReport { p, table, entries, implications })
}

/// Candidate shapes for slopes in `[2, 3)` obtained by twisting the slope
/// `[1, 2)` classification.
pub fn extrapolate_slope2(p: u64, l: i64, slope: Rational) -> Result<Vec<LocalShape>> {
    check_prime(p)?;
    let (two, three) = (Rational::from_integer(2), Rational::from_integer(3));
    if slope < two || slope >= three {
        return Err(Error::SlopeNotCovered(slope));
    }
    let pi = p as i64;
    let b = 2 + (l - 6).rem_euclid(pi - 1);
    let mut out = Vec::new();
    if slope == two {
        if b < pi {
            out.push(LocalShape::irreducible(p, b + pi + 2)?);
        }
        out.push(LocalShape::reducible(p, b + 1, 2)?);
        if b == 2 || b == pi {
            out.push(LocalShape::irreducible(p, b + 2 * pi + 1)?);
        }
    } else if slope == Rational::new(5, 2) && md(l, p - 1) == md(7, p - 1) {
        out.push(LocalShape::irreducible(p, pi + 5)?);
        out.push(LocalShape::reducible(p, 4, 2)?);
        out.push(LocalShape::irreducible(p, 2 * pi + 4)?);
        out.push(LocalShape::reducible(p, 3, 3)?);
    } else {
        if b < pi {
            out.push(LocalShape::irreducible(p, b + pi + 2)?);
        }
        out.push(LocalShape::irreducible(p, b + 2 * pi + 1)?);
        if b == pi {
            out.push(LocalShape::reducible(p, 2, 2)?);
        }
    }
    Ok(out)
}

/// Lower bound on the radius `M`, or the parameter relation forced instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadiusConstraint {
    MAtLeast(u32),
    ParamEquality,
    ParamStrict,
}

impl fmt::Display for RadiusConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadiusConstraint::MAtLeast(m) => write!(f, "M>={m}"),
            RadiusConstraint::ParamEquality => write!(f, "tau'=t'"),
            RadiusConstraint::ParamStrict => write!(f, "tau'>t'"),
        }
    }
}

impl Serialize for RadiusConstraint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Constraint on the family through `g` of the given slope and weight `l`.
pub fn radius_constraint(slope: Rational, l: i64, p: u64) -> Result<RadiusConstraint> {
    check_prime(p)?;
    let one = Rational::from_integer(1);
    let res = md(l, p - 1);
    if slope == one {
        return Ok(if res == md(4, p - 1) {
            RadiusConstraint::ParamEquality
        } else {
            RadiusConstraint::MAtLeast(1)
        });
    }
    if slope > one && slope < Rational::from_integer(2) {
        if slope == Rational::new(3, 2) && res == md(5, p - 1) {
            return Ok(RadiusConstraint::ParamStrict);
        }
        return Ok(if res == md(3, p - 1) {
            RadiusConstraint::MAtLeast(2)
        } else {
            RadiusConstraint::MAtLeast(1)
        });
    }
    Err(Error::SlopeNotCovered(slope))
}

/// The aggregate lower bound `ceil(alpha + 1)` for `alpha` in `[0, 1)`.
pub fn corollary_bound(alpha: Rational) -> Result<i64> {
    if alpha < Rational::zero() || alpha >= Rational::from_integer(1) {
        return Err(Error::SlopeNotCovered(alpha));
    }
    Ok((alpha + 1).ceil().to_integer())
}

/// Serre weight of the two worked configurations: the twisted ordinary
/// shape `1 + omega` (star decides) and `omega^2 + omega^2`.
pub fn serre_weight_fixture(shape: &LocalShape) -> Result<u64> {
    let p = shape.p;
    if shapes_equal(shape, &LocalShape::reducible(p, 1, 0)?)? {
        if let ShapeKind::Reducible { star, .. } = shape.kind {
            return match star {
                Star::Zero => Ok(2),
                Star::Nonzero => Ok(2 * p),
                Star::Unknown => Err(Error::InvalidArgument(
                    "the weight of red(1,0) depends on the extension class; give star=0 or star=1".into(),
                )),
            };
        }
    }
    if shapes_equal(shape, &LocalShape::reducible(p, 2, 2)?)? {
        return Ok(2 * p + 3);
    }
    Err(Error::RecipeNotImplemented)
}

/// Outcome of matching a required shape against every classifier branch.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "result", rename_all = "lowercase")]
pub enum Obstruction {
    Consistent { matching: Vec<String> },
    Contradiction { witness: Vec<(String, LocalShape)> },
}

/// Every shape `classify` can return at `(p, weight, slope)`, labelled by
/// parameter branch. Given parameters pin a single branch.
pub fn possible_shapes(
    p: u64,
    weight: i64,
    slope: Rational,
    given: Option<&ExceptionalParams>,
) -> Result<Vec<(String, LocalShape)>> {
    let input = ReductionInput::new(p, weight, slope)?;
    if let Some(pr) = given {
        return Ok(vec![(format!("tau = {}", pr.tau), classify(&input, Some(pr))?)]);
    }
    let base = classify(&input, None)?;
    if base.is_covered() {
        return Ok(vec![("unique".into(), base)]);
    }
    let regime = if slope == Rational::from_integer(1) {
        Regime::SlopeOne
    } else if slope == Rational::new(1, 2) {
        Regime::SlopeHalf
    } else if slope == Rational::new(3, 2) {
        Regime::SlopeThreeHalves
    } else {
        return Ok(vec![("unique".into(), base)]);
    };
    let t = valuation_i64(weight - regime.offset(), p);
    let reps: Vec<Rational> = match regime {
        Regime::SlopeOne => vec![Rational::zero(), Rational::from_integer(1)],
        Regime::SlopeThreeHalves => vec![Rational::new(1, 2), Rational::from_integer(1)],
        Regime::SlopeHalf => match t {
            None => vec![Rational::zero()],
            Some(t) => {
                vec![Rational::from_integer(t as i64) - Rational::new(1, 2), Rational::from_integer(t as i64)]
            }
        },
    };
    let mut out = Vec::new();
    for tau in reps {
        let pr = ExceptionalParams::symbolic(p, weight, regime, tau);
        out.push((format!("tau = {tau}"), classify(&input, Some(&pr))?));
    }
    Ok(out)
}

/// Whether a form of the given weight and slope can have the required shape.
pub fn slope_obstruction(
    required: &LocalShape,
    weight: i64,
    slope: Rational,
    given: Option<&ExceptionalParams>,
) -> Result<Obstruction> {
    let branches = possible_shapes(required.p, weight, slope, given)?;
    let mut matching = Vec::new();
    for (label, s) in &branches {
        if shapes_equal(required, s)? {
            matching.push(label.clone());
        }
    }
    Ok(if matching.is_empty() {
        Obstruction::Contradiction { witness: branches }
    } else {
        Obstruction::Consistent { matching }
    })
}

fn t_str(t: Option<u32>) -> String {
    t.map_or_else(|| "unknown".to_string(), |t| t.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::valuation;
    use proptest::prelude::*;

    fn red(p: u64, a: i64, b: i64) -> LocalShape {
        LocalShape::reducible(p, a, b).unwrap()
    }

    fn irr(p: u64, t: i64) -> LocalShape {
        LocalShape::irreducible(p, t).unwrap()
    }

    fn cls(p: u64, k: i64, s: Rational) -> LocalShape {
        classify(&ReductionInput::new(p, k, s).unwrap(), None).unwrap()
    }

    fn q(a: i64, b: i64) -> Rational {
        Rational::new(a, b)
    }

    #[test]
    fn canonical_forms() {
        assert_eq!(red(7, 1, 4), red(7, 10, 7));
        assert_eq!(irr(5, 3), irr(5, 15));
        assert!(LocalShape::irreducible(5, 12).is_err());
        assert!(LocalShape::reducible(9, 1, 0).is_err());
        assert!(shapes_equal(&red(5, 1, 0).with_star(Star::Zero), &red(5, 1, 0)).unwrap());
        assert!(!shapes_equal(&red(5, 1, 0).with_star(Star::Zero), &red(5, 1, 0).with_star(Star::Nonzero))
            .unwrap());
        let nc = LocalShape::not_covered(5, "x").unwrap();
        assert!(!shapes_equal(&nc, &nc).unwrap());
        assert!(shapes_equal(&red(5, 1, 0), &red(7, 1, 0)).is_err());
    }

    #[test]
    fn parse_and_print() {
        for s in ["red(4,1)", "red(1,0);star=0", "red(1,0);star=1", "irr(3)"] {
            assert_eq!(LocalShape::parse(7, s).unwrap().to_string(), s);
        }
        assert_eq!(LocalShape::parse(7, "red(1, 4)").unwrap(), red(7, 4, 1));
        assert!(LocalShape::parse(7, "irr(8)").is_err());
        assert!(LocalShape::parse(7, "red(1)").is_err());
        let s = red(7, 4, 1).with_star(Star::Nonzero);
        let j = serde_json::to_string(&s).unwrap();
        assert!(j.contains("\"kind\":\"red\""));
        assert_eq!(serde_json::from_str::<LocalShape>(&j).unwrap(), s);
        let j = serde_json::to_string(&irr(7, 3)).unwrap();
        assert_eq!(serde_json::from_str::<LocalShape>(&j).unwrap(), irr(7, 3));
    }

    #[test]
    fn classify_examples() {
        assert_eq!(cls(11, 12, Rational::zero()), red(11, 1, 0));
        assert_eq!(cls(7, 16, q(1, 3)), irr(7, 3));
        assert_eq!(cls(7, 12, q(1, 1)), red(7, 4, 1));
        assert!(matches!(
            classify(&ReductionInput::new(7, 30, q(2, 1)).unwrap(), None),
            Err(Error::UseExtrapolate(_))
        ));
        // weight below p + 2 with positive slope
        assert_eq!(cls(3, 2, q(1, 1)), irr(3, 1));
    }

    #[test]
    fn slope_one_guards() {
        // b = p: covered only when p | r - b
        assert!(!cls(5, 11, q(1, 1)).is_covered());
        assert_eq!(cls(5, 27, q(1, 1)), red(5, 1, 1));
        // 3 <= b <= p-1 needs p not dividing r - b
        assert!(!cls(7, 4 + 6 * 7 + 2, q(1, 1)).is_covered());
        // b = 2 without parameters
        assert!(!cls(7, 10, q(1, 1)).is_covered());
        let pr = ExceptionalParams::symbolic(7, 10, Regime::SlopeOne, Rational::zero());
        let s = classify(&ReductionInput::new(7, 10, q(1, 1)).unwrap(), Some(&pr)).unwrap();
        assert_eq!(s, red(7, 2, 1));
        let pr = ExceptionalParams::symbolic(7, 10, Regime::SlopeOne, q(1, 1));
        assert!(!classify(&ReductionInput::new(7, 10, q(1, 1)).unwrap(), Some(&pr)).unwrap().is_covered());
    }

    #[test]
    fn params_examples() {
        // t = v(k - 3) with k - 3 = p - 1
        let a = RamifiedScalar::new(PadicScalar::zero(7, 10), PadicScalar::from_i64(7, 1, 10)).unwrap();
        let pr = params(7, 9, &Eigenvalue::Ramified(a), Regime::SlopeHalf).unwrap();
        assert_eq!(pr.t, Some(0));
        // b_p^2 of valuation 3 against a subtracted term of valuation 4
        let p = 5;
        let l = 8;
        assert_eq!(valuation(&tau_shift(p, l, Regime::SlopeThreeHalves), p), Some(4));
        let b = RamifiedScalar::new(PadicScalar::zero(p, 12), PadicScalar::from_i64(p, 5 * 2, 12)).unwrap();
        let pr = params(p, l, &Eigenvalue::Ramified(b), Regime::SlopeThreeHalves).unwrap();
        assert_eq!(pr.tau, Val::Exact(q(1, 2)));
        // slope 1 at l = k p + 2 has t' = 0
        let l = lifted_weight(7, 12, 1, 0);
        let pr =
            params(7, l, &Eigenvalue::Padic(PadicScalar::from_i64(7, 7 * 3, 10)), Regime::SlopeOne).unwrap();
        assert_eq!(pr.t, Some(0));
        assert!(params(7, l, &Eigenvalue::Padic(PadicScalar::from_i64(7, 3, 10)), Regime::SlopeOne).is_err());
    }

    #[test]
    fn undecidable_comparison_is_reported() {
        // a_p^2 = (k-2) p exactly to working precision
        let p = 5;
        let k = 3 + 4 * 5;
        let a = PadicScalar::from_i64(p, 0, 6);
        let y = PadicScalar::new(p, &BigInt::from(1), 6);
        let ram = RamifiedScalar::new(a, y).unwrap();
        // a^2 = p, so a^2 - (k-2)p = p(1 - 21) = -20p: exact valuation 2
        let pr = params(p, k, &Eigenvalue::Ramified(ram), Regime::SlopeHalf).unwrap();
        assert_eq!(pr.tau, Val::Exact(q(1, 2)));
        let undecided = ExceptionalParams {
            regime: Regime::SlopeHalf,
            t: Some(1),
            tau: Val::AtLeast(q(1, 2)),
            precision: Some(6),
        };
        let input = ReductionInput::new(p, k, q(1, 2)).unwrap();
        assert!(matches!(classify(&input, Some(&undecided)), Err(Error::Undecidable { precision: 6, .. })));
    }

    #[test]
    fn twist_rules() {
        assert_eq!(red(7, 11, 0).twist(1), red(7, 12, 1));
        assert_eq!(irr(7, 3).twist(1), irr(7, 3 + 8));
        assert_eq!(red(7, 3, 0).twist(1), cls(7, 12, q(1, 1)));
    }

    #[test]
    fn compat_small_primes() {
        for p in [5, 7] {
            for t in [Table::Table1, Table::Table2, Table::Table3] {
                let r = compat_check(p, t).unwrap();
                assert!(r.all_pass(), "{p} {t:?} {:#?}", r.entries);
            }
        }
        // at p = 3 the lifted weight has l - 5 divisible by p, so t' = 0 fails
        assert!(!compat_check(3, Table::Table3).unwrap().all_pass());
        assert!(compat_check(3, Table::Table1).unwrap().all_pass());
    }

    #[test]
    fn extrapolation_cases() {
        let c = extrapolate_slope2(7, 4 + 7 + 6, q(5, 2)).unwrap();
        assert_eq!(c, vec![irr(7, 22), red(7, 2, 2)]);
        let c = extrapolate_slope2(7, 7, q(5, 2)).unwrap();
        assert_eq!(c.len(), 4);
        assert!(extrapolate_slope2(7, 7, q(3, 1)).is_err());
        for p in [5u64, 7, 11] {
            for l in 2..(3 * p as i64) {
                for s in [q(2, 1), q(5, 2), q(7, 3)] {
                    for c in extrapolate_slope2(p, l, s).unwrap() {
                        assert_eq!(c.det_exponent().unwrap(), md(l - 1, p - 1));
                    }
                }
            }
        }
    }

    #[test]
    fn radius_examples() {
        assert_eq!(radius_constraint(q(1, 1), 12, 7).unwrap(), RadiusConstraint::MAtLeast(1));
        assert_eq!(radius_constraint(q(1, 1), 10, 7).unwrap(), RadiusConstraint::ParamEquality);
        assert_eq!(radius_constraint(q(3, 2), 7, 5).unwrap(), RadiusConstraint::MAtLeast(2));
        assert_eq!(radius_constraint(q(3, 2), 9, 5).unwrap(), RadiusConstraint::ParamStrict);
        assert_eq!(radius_constraint(q(4, 3), 9, 5).unwrap(), RadiusConstraint::MAtLeast(1));
        assert!(radius_constraint(q(1, 2), 9, 5).is_err());
        assert_eq!(RadiusConstraint::MAtLeast(2).to_string(), "M>=2");
        assert_eq!(corollary_bound(Rational::zero()).unwrap(), 1);
        assert_eq!(corollary_bound(q(1, 2)).unwrap(), 2);
    }

    #[test]
    fn serre_fixtures() {
        assert_eq!(serre_weight_fixture(&red(3, 1, 0).with_star(Star::Zero)).unwrap(), 2);
        assert_eq!(serre_weight_fixture(&red(3, 1, 0).with_star(Star::Nonzero)).unwrap(), 6);
        assert!(serre_weight_fixture(&red(3, 1, 0)).is_err());
        assert_eq!(serre_weight_fixture(&red(11, 2, 2)).unwrap(), 25);
        assert_eq!(serre_weight_fixture(&irr(11, 3)), Err(Error::RecipeNotImplemented));
    }

    #[test]
    fn obstructions() {
        for p in [5u64, 7, 11] {
            let l = 2 * p as i64 + 3;
            let forced = ExceptionalParams::symbolic(p, l, Regime::SlopeThreeHalves, q(1, 2));
            let o = slope_obstruction(&red(p, 2, 2), l, q(3, 2), Some(&forced)).unwrap();
            assert!(matches!(o, Obstruction::Contradiction { .. }));
        }
        let split = red(3, 0, 1).with_star(Star::Zero);
        assert!(matches!(
            slope_obstruction(&split, 2, q(1, 1), None).unwrap(),
            Obstruction::Contradiction { .. }
        ));
        assert!(matches!(
            slope_obstruction(&irr(7, 3), 16, q(1, 3), None).unwrap(),
            Obstruction::Consistent { .. }
        ));
    }

    fn shape_strategy() -> impl Strategy<Value = LocalShape> {
        prop_oneof![Just(5u64), Just(7), Just(11), Just(13)].prop_flat_map(|p| {
            prop_oneof![
                (0..p as i64, 0..p as i64).prop_map(move |(a, b)| red(p, a, b)),
                (1..(p * p) as i64)
                    .prop_filter("p+1 | t", move |t| t % (p as i64 + 1) != 0)
                    .prop_map(move |t| irr(p, t)),
            ]
        })
    }

    proptest! {
        #![proptest_config(crate::test_config(256))]

        #[test]
        fn twist_det_and_period(s in shape_strategy(), j in -50i64..50) {
            let p = s.p();
            let d = s.det_exponent().unwrap();
            prop_assert_eq!(s.twist(j).det_exponent().unwrap(), md(d as i64 + 2 * j, p - 1));
            prop_assert_eq!(s.twist(p as i64 - 1), s.clone());
            prop_assert_eq!(s.twist(j).twist(-j), s.clone());
            let again = LocalShape::parse(p, &s.to_string()).unwrap();
            prop_assert!(shapes_equal(&s, &again).unwrap());
        }
    }
}
