//! `U_p` on a Katz basis of overconvergent forms of tame level one.
//!
//! Fix `E = E_{p-1}` and write the weight as `k = k0 + j(p-1)` with
//! `0 <= k0 < p-1`. For each level `i >= 0` let `W_i` be spanned by the Miller
//! generators `E_4^a E_6^b Delta^t` of weight `k0 + i(p-1)` whose leading
//! exponent `t` is new at that level (`dim M_{k0+(i-1)(p-1)} <= t < dim M_{k0+i(p-1)}`).
//! The elements `b / E^i` with `b` in `W_i` form the basis. Weight `k` is
//! reached by twisting with `(E / V E)^j`, so the operator on the basis is
//! `h -> U_p(h (E/VE)^j)`. The `t`-th basis element has leading term `q^t`,
//! which makes every coordinate computation a unitriangular solve.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::padic::{inv_mod, newton_polygon, pow_p, ratio_string, valuation, PadicScalar, Rational, Segment};
use crate::qexp::{self, dim_mk, mul_trunc};

/// Limits for the automatic growth of dimension and precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub max_dimension: usize,
    pub max_precision: u32,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { max_dimension: 120, max_precision: 2000 }
    }
}

/// Finite block of `U_p` on the first `dimension` Katz basis elements,
/// reduced mod `p^precision`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpMatrix {
    pub p: u64,
    pub weight: i64,
    pub component: i64,
    pub dimension: usize,
    pub precision: u32,
    /// Level of the first basis element left out.
    pub excluded_level: usize,
    /// Slopes below this bound are treated as independent of the truncation.
    pub trust_budget: Rational,
    entries: Matrix,
    levels: Vec<usize>,
}

impl UpMatrix {
    pub fn entry(&self, i: usize, j: usize) -> PadicScalar {
        PadicScalar::new(self.p, &self.entries[i][j], self.precision)
    }

    pub fn raw_entries(&self) -> &Matrix {
        &self.entries
    }

    /// Matrix from explicit integer entries (reduced mod `p^precision`),
    /// with the given budget.
    pub fn from_entries(p: u64, entries: Matrix, precision: u32, trust_budget: Rational) -> Self {
        let m = pow_p(p, precision);
        let entries: Matrix =
            entries.into_iter().map(|row| row.into_iter().map(|x| x.mod_floor(&m)).collect()).collect();
        UpMatrix {
            p,
            weight: 0,
            component: 0,
            dimension: entries.len(),
            precision,
            excluded_level: 0,
            trust_budget,
            levels: vec![0; entries.len()],
            entries,
        }
    }
}

/// Slopes with multiplicities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlopeSequence {
    pub p: u64,
    pub weight: i64,
    pub component: i64,
    pub cuspidal: bool,
    pub slopes: Vec<Segment>,
    #[serde(with = "ratio_string")]
    pub trust_budget: Rational,
    pub dimension: usize,
    pub precision: u32,
}

impl SlopeSequence {
    /// Slopes repeated by multiplicity.
    pub fn flat(&self) -> Vec<Rational> {
        self.slopes.iter().flat_map(|s| std::iter::repeat_n(s.slope, s.mult)).collect()
    }

    pub fn multiplicity(&self, slope: Rational) -> usize {
        self.slopes.iter().filter(|s| s.slope == slope).map(|s| s.mult).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }
}

fn check_inputs(p: u64, k: i64) -> Result<()> {
    if p < 5 || !crate::padic::is_prime(p) {
        return Err(Error::InvalidArgument(format!("p = {p} must be a prime >= 5")));
    }
    if k % 2 != 0 {
        return Err(Error::InvalidArgument(format!("odd weight {k}: the space of level-one forms is empty")));
    }
    if k < 0 {
        return Err(Error::InvalidArgument(format!("negative weight {k}")));
    }
    Ok(())
}

fn series_mod(f: &qexp::QSeries, len: usize, m: &BigInt) -> Vec<BigInt> {
    let inv = inv_mod(&f.denom, m).expect("p-integral generator");
    (0..len).map(|n| (f.coeffs.get(n).cloned().unwrap_or_default() * &inv).mod_floor(m)).collect()
}

fn inverse_series(f: &[BigInt], m: &BigInt) -> Vec<BigInt> {
    let len = f.len();
    let g0 = inv_mod(&f[0], m).expect("unit constant term");
    let mut g = vec![BigInt::zero(); len];
    g[0] = g0.clone();
    for n in 1..len {
        let s = (1..=n).fold(BigInt::zero(), |acc, i| acc + &f[i] * &g[n - i]);
        g[n] = (-(s * &g0)).mod_floor(m);
    }
    g
}

/// Level at which the `t`-th basis element lives: the least `i` with
/// `t < dim M_{k0 + i(p-1)}`.
fn level_of(t: usize, k0: i64, p: u64) -> usize {
    (0..).find(|&i| t < dim_mk(k0 + i as i64 * (p as i64 - 1))).expect("dimensions grow without bound")
}

fn budget_for(excluded_level: usize, p: u64) -> Rational {
    Rational::new((p as i64 - 1) * excluded_level as i64, p as i64 + 1) - Rational::one()
}

/// The `dim x dim` block of `U_p` at weight `k`, without the stability check.
pub fn build_up_matrix(p: u64, k: i64, dim: usize, prec: u32) -> Result<UpMatrix> {
    check_inputs(p, k)?;
    if dim == 0 || prec == 0 {
        return Err(Error::InvalidArgument("dimension and precision must be positive".into()));
    }
    let pm1 = p as i64 - 1;
    let k0 = k.rem_euclid(pm1);
    let j = (k - k0) / pm1;
    let m = pow_p(p, prec);
    let pu = p as usize;
    let levels: Vec<usize> = (0..dim).map(|t| level_of(t, k0, p)).collect();
    let n = levels[dim - 1];
    let excluded_level = level_of(dim, k0, p);
    let len = pu * (dim - 1) + 1;

    let e = series_mod(&qexp::eisenstein(pm1, len)?, len, &m);
    let e4 = series_mod(&qexp::eisenstein(4, len)?, len, &m);
    let e6 = series_mod(&qexp::eisenstein(6, len)?, len, &m);
    let dl = series_mod(&qexp::delta(len), len, &m);

    // (E / V E) and its inverse.
    let mut ve = vec![BigInt::zero(); len];
    for (i, c) in e.iter().enumerate() {
        if i * pu >= len {
            break;
        }
        ve[i * pu] = c.clone();
    }
    let f = mul_trunc(&e, &inverse_series(&ve, &m), len, Some(&m));
    let f_inv = mul_trunc(&ve, &inverse_series(&e, &m), len, Some(&m));
    let mut twist = one(len);
    let base = if j >= 0 { &f } else { &f_inv };
    for _ in 0..j.unsigned_abs() {
        twist = mul_trunc(&twist, base, len, Some(&m));
    }
    let mut twist_level = 0usize;

    // Generators b_t = E4^a E6^b Delta^t of weight k0 + level(t)(p-1).
    let mut e4_pows = vec![one(len)];
    let mut delta_pows = vec![one(len)];
    let mut generators = Vec::with_capacity(dim);
    for (t, &lev) in levels.iter().enumerate() {
        let w = k0 + lev as i64 * pm1 - 12 * t as i64;
        let (a, b) = if w % 4 == 0 { (w / 4, 0) } else { ((w - 6) / 4, 1) };
        while e4_pows.len() <= a as usize {
            let next = mul_trunc(e4_pows.last().unwrap(), &e4, len, Some(&m));
            e4_pows.push(next);
        }
        while delta_pows.len() <= t {
            let next = mul_trunc(delta_pows.last().unwrap(), &dl, len, Some(&m));
            delta_pows.push(next);
        }
        let mut g = mul_trunc(&e4_pows[a as usize], &delta_pows[t], len, Some(&m));
        if b == 1 {
            g = mul_trunc(&g, &e6, len, Some(&m));
        }
        generators.push(g);
    }

    // Powers of E truncated to `dim` coefficients, and the reference basis
    // B_t = b_t E^(n - level(t)) of M_{k0 + n(p-1)}.
    let mut e_pows = vec![one(dim)];
    let short_e: Vec<BigInt> = e[..dim].to_vec();
    for _ in 0..n {
        let next = mul_trunc(e_pows.last().unwrap(), &short_e, dim, Some(&m));
        e_pows.push(next);
    }
    let reference: Vec<Vec<BigInt>> = generators
        .iter()
        .zip(&levels)
        .map(|(g, &lev)| mul_trunc(&g[..dim], &e_pows[n - lev], dim, Some(&m)))
        .collect();

    let mut columns: Vec<Vec<BigInt>> = Vec::with_capacity(dim);
    for (t, &lev) in levels.iter().enumerate() {
        // (E/VE)^(j - lev), stepping down one power per level.
        while twist_level < lev {
            twist = mul_trunc(&twist, &f_inv, len, Some(&m));
            twist_level += 1;
        }
        let g = mul_trunc(&generators[t], &twist, len, Some(&m));
        let u: Vec<BigInt> = g.iter().step_by(pu).take(dim).cloned().collect();
        let mut y = mul_trunc(&u, &e_pows[n - lev], dim, Some(&m));
        let mut coords = vec![BigInt::zero(); dim];
        for s in 0..dim {
            let c = y[s].clone();
            if !c.is_zero() {
                for (yi, ri) in y.iter_mut().zip(&reference[s]).skip(s) {
                    *yi = (&*yi - &c * ri).mod_floor(&m);
                }
            }
            coords[s] = c;
        }
        columns.push(coords);
    }
    let entries: Matrix = (0..dim).map(|i| columns.iter().map(|c| c[i].clone()).collect()).collect();
    Ok(UpMatrix {
        p,
        weight: k,
        component: k0,
        dimension: dim,
        precision: prec,
        excluded_level,
        trust_budget: budget_for(excluded_level, p),
        entries,
        levels,
    })
}

fn one(len: usize) -> Vec<BigInt> {
    let mut v = vec![BigInt::zero(); len];
    v[0] = BigInt::one();
    v
}

/// Growth step used by the self-consistency check.
fn growth_step(dim: usize) -> usize {
    (dim / 4).max(2)
}

/// `U_p` block with the self-consistency check: slopes below the budget must
/// survive enlarging the dimension by one growth step and the precision by 2.
pub fn up_matrix(p: u64, k: i64, dim: usize, prec: u32) -> Result<UpMatrix> {
    let a = build_up_matrix(p, k, dim, prec)?;
    let b = build_up_matrix(p, k, dim + growth_step(dim), prec + 2)?;
    let ra = analyze(&a)?;
    let rb = analyze(&b)?;
    let bound = ra.range.min(rb.range);
    if ra.below(bound) != rb.below(bound) {
        return Err(Error::Unstable(format!(
            "slopes of U_{p} at weight {k} change between dimension {dim} and {}",
            b.dimension
        )));
    }
    Ok(a)
}

/// `det(1 - T m)` mod `p^N`, coefficients `c_0 = 1, c_1, ..., c_dim`.
pub fn char_series(m: &UpMatrix) -> Vec<PadicScalar> {
    let modulus = pow_p(m.p, m.precision);
    linalg::charpoly(&m.entries, Some(&modulus))
        .into_iter()
        .map(|c| PadicScalar::new(m.p, &c, m.precision))
        .collect()
}

/// Certified part of a Newton polygon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Analysis {
    /// Segments with slope below `range`; these are all slopes below `range`.
    pub segments: Vec<Segment>,
    /// Every slope below this bound is listed in `segments`.
    pub range: Rational,
    /// Whether the truncation budget (rather than precision) limits `range`.
    pub budget_bound: bool,
}

impl Analysis {
    fn below(&self, bound: Rational) -> Vec<Segment> {
        self.segments.iter().filter(|s| s.slope < bound).copied().collect()
    }
}

/// Certify Newton slopes of a series known modulo `p^N`: coefficients that
/// vanish are only known to have valuation `>= N`.
#[cfg(test)]
fn certify(coeffs: &[PadicScalar], precision: u32, budget: Rational) -> Result<Analysis> {
    certify_with_floors(coeffs, precision, budget, &[])
}

/// As [`certify`], with extra lower bounds `floors[j] <= v(c_j)`.
pub(crate) fn certify_with_floors(
    coeffs: &[PadicScalar],
    precision: u32,
    budget: Rational,
    floors: &[Rational],
) -> Result<Analysis> {
    let n = Rational::from_integer(precision as i64);
    let lower = |j: usize| floors.get(j).map_or(n, |f| n.max(*f));
    let vals: Vec<Option<Rational>> =
        coeffs.iter().map(|c| c.valuation()).map(|v| v.is_exact().then(|| v.value())).collect();
    let unknown: Vec<usize> = (0..vals.len()).filter(|&i| vals[i].is_none()).collect();
    let np = newton_polygon(&vals)?;
    let mut segments = Vec::new();
    let mut floor: Option<Rational> = None;
    for (idx, seg) in np.segments.iter().enumerate() {
        let (i0, v0) = np.vertices[idx];
        let safe =
            unknown.iter().all(|&j| lower(j) > v0 + seg.slope * Rational::from_integer(j as i64 - i0 as i64));
        if !safe {
            floor = Some(seg.slope);
            break;
        }
        segments.push(*seg);
    }
    // Lowest slope still possible after the last certified vertex.
    let (i_last, v_last) = np.vertices[segments.len()];
    let mut next = floor;
    for &j in unknown.iter().filter(|&&j| j > i_last) {
        let s = (lower(j) - v_last) / Rational::from_integer((j - i_last) as i64);
        next = Some(next.map_or(s, |x: Rational| x.min(s)));
    }
    if floor.is_none() && segments.len() < np.segments.len() {
        next = Some(np.segments[segments.len()].slope);
    }
    let (range, budget_bound) = match next {
        Some(x) if x < budget => (x, false),
        _ => (budget, true),
    };
    segments.retain(|s| s.slope < range);
    Ok(Analysis { segments, range, budget_bound })
}

/// Lower bounds `B_j` for `v(c_j)`: a `j x j` principal minor of `D A D^-1`
/// has valuation at least the sum of its rows' minima, and conjugating by a
/// diagonal `D = diag(p^(c * level))` leaves the minors unchanged.
fn coefficient_floors(m: &UpMatrix) -> Vec<Rational> {
    let n = m.dimension;
    let cap = Rational::from_integer(m.precision as i64);
    let vals: Vec<Vec<Rational>> = m
        .entries
        .iter()
        .map(|row| {
            row.iter().map(|x| valuation(x, m.p).map_or(cap, |e| Rational::from_integer(e as i64))).collect()
        })
        .collect();
    let mut best = vec![Rational::zero(); n + 1];
    for step in 0..=8 {
        let c = Rational::new(-step, 4 * (m.p as i64 + 1));
        let lam: Vec<Rational> = m.levels.iter().map(|&l| c * Rational::from_integer(l as i64)).collect();
        let mut mins: Vec<Rational> =
            (0..n).map(|s| (0..n).map(|i| vals[s][i] + lam[s] - lam[i]).min().unwrap_or(cap)).collect();
        mins.sort();
        let mut acc = Rational::zero();
        for (j, v) in mins.iter().enumerate() {
            acc += *v;
            best[j + 1] = best[j + 1].max(acc);
        }
    }
    best
}

pub(crate) fn analyze(m: &UpMatrix) -> Result<Analysis> {
    certify_with_floors(&char_series(m), m.precision, m.trust_budget, &coefficient_floors(m))
}

/// What a slope computation has to certify.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// The first `n` slopes with multiplicity.
    Count(usize),
    /// Every slope `<= bound`.
    UpTo(Rational),
}

fn drop_eisenstein(segments: &mut Vec<Segment>) {
    if let Some(first) = segments.first_mut() {
        if first.slope.is_zero() {
            first.mult -= 1;
            if first.mult == 0 {
                segments.remove(0);
            }
        }
    }
}

fn satisfied(a: &Analysis, target: Target, cuspidal: bool) -> bool {
    match target {
        Target::Count(c) => {
            let have: usize = a.segments.iter().map(|s| s.mult).sum();
            have >= c + usize::from(cuspidal)
        }
        Target::UpTo(b) => a.range > b,
    }
}

fn initial_dimension(p: u64, k: i64, target: Target) -> usize {
    let k0 = k.rem_euclid(p as i64 - 1);
    let want = match target {
        Target::Count(c) => Rational::from_integer(c as i64 + 2),
        Target::UpTo(b) => b + Rational::from_integer(2),
    };
    // Smallest excluded level whose budget exceeds `want`.
    let level =
        ((want + Rational::one()) * Rational::new(p as i64 + 1, p as i64 - 1)).ceil().to_integer().max(1)
            as usize;
    dim_mk(k0 + (level as i64 - 1) * (p as i64 - 1)).max(2)
}

/// Certified slopes of the (cuspidal) characteristic series at weight `k`,
/// growing dimension and precision until the target is met and stable.
pub fn certified_slopes(p: u64, k: i64, target: Target, cuspidal: bool, caps: Caps) -> Result<SlopeSequence> {
    check_inputs(p, k)?;
    let mut dim = initial_dimension(p, k, target);
    let mut prec = crate::DEFAULT_PRECISION.max(20);
    loop {
        if dim > caps.max_dimension || prec > caps.max_precision {
            return Err(Error::ResourceCap(format!(
                "dimension {dim} / precision {prec} exceeds caps ({} / {})",
                caps.max_dimension, caps.max_precision
            )));
        }
        let m = build_up_matrix(p, k, dim, prec)?;
        let a = analyze(&m)?;
        if !satisfied(&a, target, cuspidal) {
            if a.budget_bound {
                dim += growth_step(dim);
            } else {
                prec += prec / 2 + 5;
            }
            continue;
        }
        let big = build_up_matrix(p, k, dim + growth_step(dim), prec + 2)?;
        let b = analyze(&big)?;
        let bound = a.range.min(b.range);
        if a.below(bound) != b.below(bound) || !satisfied(&b, target, cuspidal) {
            dim += growth_step(dim);
            prec += 2;
            continue;
        }
        let mut segments = a.segments.clone();
        if cuspidal {
            drop_eisenstein(&mut segments);
        }
        let segments = match target {
            Target::Count(c) => take_count(&segments, c),
            Target::UpTo(b) => segments.into_iter().filter(|s| s.slope <= b).collect(),
        };
        return Ok(SlopeSequence {
            p,
            weight: k,
            component: m.component,
            cuspidal,
            slopes: segments,
            trust_budget: a.range,
            dimension: dim,
            precision: prec,
        });
    }
}

fn take_count(segments: &[Segment], c: usize) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut left = c;
    for s in segments {
        if left == 0 {
            break;
        }
        let take = s.mult.min(left);
        out.push(Segment { slope: s.slope, mult: take });
        left -= take;
    }
    out
}

/// The first `count` slopes (with multiplicity) at weight `k`.
pub fn slope_sequence(p: u64, k: i64, count: usize, cuspidal: bool) -> Result<SlopeSequence> {
    slope_sequence_with(p, k, count, cuspidal, Caps::default())
}

pub fn slope_sequence_with(
    p: u64,
    k: i64,
    count: usize,
    cuspidal: bool,
    caps: Caps,
) -> Result<SlopeSequence> {
    if count == 0 {
        check_inputs(p, k)?;
        return Ok(SlopeSequence {
            p,
            weight: k,
            component: k.rem_euclid(p as i64 - 1),
            cuspidal,
            slopes: Vec::new(),
            trust_budget: Rational::zero(),
            dimension: 0,
            precision: 0,
        });
    }
    certified_slopes(p, k, Target::Count(count), cuspidal, caps)
}

/// All slopes `<= bound` at weight `k`.
pub fn slopes_up_to(p: u64, k: i64, bound: Rational, cuspidal: bool) -> Result<SlopeSequence> {
    certified_slopes(p, k, Target::UpTo(bound), cuspidal, Caps::default())
}

/// Slopes of the p-stabilizations of level-one cusp forms of weight `k`,
/// from `det(X - T_p | S_k(1))`, keeping those below `k - 1`.
pub fn classical_slopes(p: u64, k: i64) -> Result<Vec<Rational>> {
    if k < 0 || k % 2 != 0 {
        return Err(Error::InvalidArgument(format!("weight {k} is not even and non-negative")));
    }
    let poly = qexp::hecke_charpoly(k, p as usize)?;
    let top = Rational::from_integer(k - 1);
    let half = top / 2;
    let mut out = Vec::new();
    // Eigenvalues a_p = 0 (zero constant terms) stabilize to two slopes (k-1)/2.
    let zeros = poly.iter().take_while(|c| c.is_zero()).count();
    out.extend(std::iter::repeat_n(half, 2 * zeros));
    if poly.len() > 1 {
        for v in crate::padic::newton_polygon_of(&poly, p)?.slopes() {
            let v = -v;
            if v < half {
                out.push(v);
                out.push(top - v);
            } else {
                out.push(half);
                out.push(half);
            }
        }
    }
    out.retain(|s| *s < top);
    out.sort();
    Ok(out)
}

/// Number of slope-`alpha` zeros of the (cuspidal) characteristic series.
pub fn slope_multiplicity(p: u64, k: i64, alpha: Rational, cuspidal: bool) -> Result<usize> {
    if alpha < Rational::zero() {
        return Ok(0);
    }
    Ok(slopes_up_to(p, k, alpha, cuspidal)?.multiplicity(alpha))
}

/// Evidence for the radius of the family through a slope-`alpha` form of
/// weight `k0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RadiusReport {
    pub p: u64,
    pub k0: i64,
    #[serde(with = "ratio_string")]
    pub alpha: Rational,
    pub base_multiplicity: usize,
    pub estimate: u32,
    pub vacuous: bool,
    pub probes: Vec<RadiusProbe>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RadiusProbe {
    pub weight: i64,
    /// `None` when the probe was skipped (other component or weight too small).
    pub multiplicity: Option<usize>,
    /// `v_p(k' - k0)`.
    pub distance: Option<u32>,
}

/// Smallest `M <= cap` such that no probed weight `k' = k0 mod (p-1)p^M` shows a
/// smaller slope-`alpha` multiplicity than `k0`. With no usable probes the
/// answer is `cap`, flagged vacuous.
pub fn radius_search(p: u64, k0: i64, alpha: Rational, probes: &[i64], cap: u32) -> Result<RadiusReport> {
    let base = slope_multiplicity(p, k0, alpha, true)?;
    let pm1 = p as i64 - 1;
    let min_weight = alpha + Rational::one();
    let mut report = Vec::new();
    let mut estimate = 0u32;
    let mut used = 0usize;
    for &w in probes {
        let usable =
            w != k0 && (w - k0).rem_euclid(pm1) == 0 && Rational::from_integer(w) > min_weight && w >= 0;
        if !usable {
            report.push(RadiusProbe { weight: w, multiplicity: None, distance: None });
            continue;
        }
        used += 1;
        let d = slope_multiplicity(p, w, alpha, true)?;
        let dist = valuation(&BigInt::from(w - k0), p).unwrap_or(0);
        if d < base {
            estimate = estimate.max(dist + 1);
        }
        report.push(RadiusProbe { weight: w, multiplicity: Some(d), distance: Some(dist) });
    }
    let vacuous = used == 0;
    Ok(RadiusReport {
        p,
        k0,
        alpha,
        base_multiplicity: base,
        estimate: if vacuous { cap } else { estimate.min(cap) },
        vacuous,
        probes: report,
    })
}
