//! Search for a classical eigenform `g` of slope `alpha + kappa - 1` with
//! `g = theta^(kappa-1) f (mod p)`.
//!
//! Candidate weights run over `l = (k-2+kappa) p^M + kappa + n (p-1) p^M`
//! with `l > 2 alpha + 2 kappa`; at each weight the level-one `T_p`
//! eigenforms are computed p-adically from the Miller basis.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::galrep::{self, LocalShape, ReductionInput};
use crate::linalg::{self, mat_vec};
use crate::padic::{
    newton_polygon_of, pow_p, ratio_string, simple_root, valuation, valuation_i64, PadicScalar, Rational,
    Segment, Val,
};
use crate::qexp::{
    self, congruent_mod, dim_sk, hecke_tn, miller_basis, sturm_depth, EigenformRecord, Eigenvalue, Level,
    Provenance, QSeries,
};

/// Candidate weights for one value of `M`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WeightGrid {
    pub k: i64,
    pub kappa: u32,
    pub p: u64,
    pub m: u32,
    pub n_range: (i64, i64),
    pub weights: Vec<i64>,
}

fn grid_base_step(k: i64, kappa: u32, p: u64, m: u32) -> (i64, i64) {
    let pm = (p as i64).pow(m);
    ((k - 2 + kappa as i64) * pm + kappa as i64, (p as i64 - 1) * pm)
}

/// `l = (k-2+kappa) p^M + kappa + n (p-1) p^M` for `n` in the range, keeping
/// `l > 2 alpha + 2 kappa`.
pub fn weight_grid(
    k: i64,
    kappa: u32,
    alpha: Rational,
    p: u64,
    m: u32,
    n_range: (i64, i64),
) -> Result<WeightGrid> {
    if kappa < 2 {
        return Err(Error::InvalidArgument(format!("kappa must be >= 2, got {kappa}")));
    }
    let (base, step) = grid_base_step(k, kappa, p, m);
    let floor = alpha * 2 + Rational::from_integer(2 * kappa as i64);
    let weights: Vec<i64> = (n_range.0..=n_range.1)
        .map(|n| base + n * step)
        .filter(|&l| Rational::from_integer(l) > floor)
        .collect();
    if weights.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no weights in the grid for n in [{}, {}]",
            n_range.0, n_range.1
        )));
    }
    Ok(WeightGrid { k, kappa, p, m, n_range, weights })
}

/// Eigenforms found at one weight: resolved records and unresolved clusters.
#[derive(Debug, Clone)]
pub struct Level1Eigenforms {
    pub weight: i64,
    pub records: Vec<EigenformRecord>,
    pub clusters: Vec<Segment>,
}

impl Level1Eigenforms {
    /// Slopes of every eigenvalue, clusters included with multiplicity.
    pub fn slopes(&self) -> Vec<Rational> {
        let mut out: Vec<Rational> = self.records.iter().map(|r| r.slope).collect();
        for c in &self.clusters {
            out.extend(std::iter::repeat_n(c.slope, c.mult));
        }
        out.sort();
        out
    }
}

fn horner_eigenvector(a: &linalg::Matrix, q: &[BigInt], j: usize, m: &BigInt) -> Vec<BigInt> {
    let d = a.len();
    let e: Vec<BigInt> = (0..d).map(|i| if i == j { BigInt::one() } else { BigInt::zero() }).collect();
    let mut v: Vec<BigInt> = e.iter().map(|x| x * &q[0]).collect();
    for b in &q[1..] {
        v = mat_vec(a, &v, Some(m));
        for (vi, ei) in v.iter_mut().zip(&e) {
            *vi = (&*vi + ei * b).mod_floor(m);
        }
    }
    v
}

/// The `T_p` eigenforms of `S_l(1)` whose Newton segment has length one,
/// to precision `p^prec` and q-depth `depth`.
pub fn eigenforms_level1(l: i64, p: u64, prec: u32, depth: usize) -> Result<Level1Eigenforms> {
    if l < 4 || l % 2 != 0 {
        return Err(Error::InvalidArgument(format!("weight {l} must be even and >= 4")));
    }
    let d = dim_sk(l);
    let mut out = Level1Eigenforms { weight: l, records: Vec::new(), clusters: Vec::new() };
    if d == 0 {
        return Ok(out);
    }
    let a = qexp::hecke_matrix(l, p as usize)?;
    let chi = linalg::charpoly(&a, None);
    let low_first: Vec<BigInt> = chi.iter().rev().cloned().collect();
    let np = newton_polygon_of(&low_first, p)?;
    let depth = depth.max(d + 1).max(p as usize);
    let basis = miller_basis(l, true, depth)?;
    // Root valuations are the negated polygon slopes.
    for seg in np.segments.iter().rev() {
        let slope = -seg.slope;
        if seg.mult > 1 {
            out.clusters.push(Segment { slope, mult: seg.mult });
            continue;
        }
        let v = slope.to_integer() as u32;
        let mut work = prec + 8;
        loop {
            let lambda = simple_root(&low_first, p, v, None, work + v)?;
            let w = lambda.prec();
            let m = pow_p(p, w);
            // chi(X) / (X - lambda), highest degree first
            let mut q = Vec::with_capacity(d);
            q.push(BigInt::one());
            for c in &chi[1..d] {
                let next = (c + lambda.residue() * q.last().expect("nonempty")).mod_floor(&m);
                q.push(next);
            }
            let mut best: Option<(u32, Vec<BigInt>)> = None;
            for j in 0..d {
                let vec = horner_eigenvector(&a, &q, j, &m);
                if let Some(e) = valuation(&vec[0], p).filter(|&e| e < w) {
                    if best.as_ref().is_none_or(|(b, _)| e < *b) {
                        best = Some((e, vec));
                    }
                    if e == 0 {
                        break;
                    }
                }
            }
            let Some((loss, vec)) = best else {
                return Err(Error::PrecisionInsufficient(format!(
                    "eigenvector for slope {slope} at weight {l} vanishes mod {p}^{w}"
                )));
            };
            let n_out = w - loss;
            if n_out < prec {
                if work > 50 * prec + 200 {
                    return Err(Error::PrecisionInsufficient(format!(
                        "eigenvector normalization at weight {l} loses {loss} digits"
                    )));
                }
                work += loss + 8;
                continue;
            }
            let mo = pow_p(p, prec);
            let scale = PadicScalar::new(p, &vec[0], w);
            let coords: Vec<BigInt> = vec
                .iter()
                .map(|x| {
                    let c = PadicScalar::new(p, x, w).checked_div(&scale)?;
                    Ok(c.residue().mod_floor(&mo))
                })
                .collect::<Result<_>>()?;
            let mut coeffs = vec![BigInt::zero(); depth + 1];
            for (c, f) in coords.iter().zip(&basis) {
                for (acc, x) in coeffs.iter_mut().zip(&f.coeffs) {
                    *acc += c * x;
                }
            }
            let series = QSeries {
                coeffs: coeffs.into_iter().map(|x| x.mod_floor(&mo)).collect(),
                denom: BigInt::one(),
                weight: l,
                p: Some(p),
                precision: Some(prec),
                level: Level::One,
                cuspidal: true,
            };
            out.records.push(EigenformRecord {
                series,
                p,
                slope,
                a_p: Eigenvalue::Padic(lambda.with_prec(prec)),
                provenance: Provenance::ClassicalLevel1,
            });
            break;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Certified,
    Heuristic,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "certified" => Ok(Mode::Certified),
            "heuristic" => Ok(Mode::Heuristic),
            _ => Err(Error::Parse(format!("unknown mode {s:?}"))),
        }
    }
}

/// Search bounds.
#[derive(Debug, Clone, Copy)]
pub struct LiftBounds {
    pub m_max: u32,
    pub l_max: i64,
    pub precision: u32,
    /// Congruence depth; in certified mode the Sturm-type bound is a floor.
    pub depth: Option<usize>,
    pub mode: Mode,
    /// Largest `dim S_l(1)` examined before giving up.
    pub max_dimension: usize,
}

impl Default for LiftBounds {
    fn default() -> Self {
        LiftBounds {
            m_max: 1,
            l_max: 60,
            precision: crate::DEFAULT_PRECISION,
            depth: None,
            mode: Mode::Certified,
            max_dimension: 40,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LiftInput {
    pub weight: i64,
    #[serde(with = "ratio_string")]
    pub slope: Rational,
    pub p: u64,
    pub provenance: Provenance,
}

/// The congruence hypothesis `k = 2 - kappa mod p^M'` as far as it can be
/// checked: `m_prime = v_p(k - 2 + kappa)` (`None` when infinite).
#[derive(Debug, Clone, Serialize)]
pub struct Hypothesis {
    pub m_prime: Option<u32>,
    pub zero: bool,
    pub kappa_in_range: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Candidate {
    pub m: u32,
    pub l: i64,
    pub slopes: Vec<String>,
    pub clusters: Vec<Segment>,
    pub congruent: bool,
    pub depth: usize,
    pub mode: Mode,
}

#[derive(Debug, Clone, Serialize)]
pub struct FoundForm {
    pub m: u32,
    pub l: i64,
    #[serde(with = "ratio_string")]
    pub slope: Rational,
    pub a_p: String,
    pub precision: u32,
    pub depth: usize,
    pub p_old_check: bool,
    pub series: QSeries,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Outcome {
    Found { g: FoundForm },
    Exhausted { m_max: u32, l_max: i64 },
    Capped { reason: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct LiftReport {
    pub input: LiftInput,
    pub kappa: u32,
    #[serde(with = "ratio_string")]
    pub target_slope: Rational,
    pub hypothesis: Hypothesis,
    pub grid: Vec<WeightGrid>,
    pub candidates: Vec<Candidate>,
    pub outcome: Outcome,
}

impl LiftReport {
    pub fn found(&self) -> Option<&FoundForm> {
        match &self.outcome {
            Outcome::Found { g } => Some(g),
            _ => None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

fn hypothesis(k: i64, kappa: u32, p: u64) -> Hypothesis {
    let m_prime = valuation_i64(k - 2 + kappa as i64, p);
    let kappa_in_range = match m_prime {
        None => true,
        Some(m) => (kappa as u128) <= (p as u128).saturating_pow(m) + 1,
    };
    Hypothesis { m_prime, zero: m_prime == Some(0), kappa_in_range }
}

fn congruence_depth(bounds: &LiftBounds, l: i64, p: u64) -> usize {
    match bounds.mode {
        Mode::Certified => sturm_depth(bounds.l_max, p).max(bounds.depth.unwrap_or(0)),
        Mode::Heuristic => bounds.depth.unwrap_or_else(|| sturm_depth(l, p)),
    }
}

/// `theta^(kappa-1) (f mod p)`.
pub fn lift_target(f: &EigenformRecord, kappa: u32) -> Result<QSeries> {
    qexp::theta_power(&f.series.reduce(f.p, 1)?, kappa)
}

/// Walks `M = 0..=m_max` and the grid weights up to `l_max`, returning the
/// first eigenform of slope `alpha + kappa - 1` congruent to the target.
pub fn lift_search(f: &EigenformRecord, kappa: u32, bounds: &LiftBounds) -> Result<LiftReport> {
    let p = f.p;
    if p < 5 || !crate::padic::is_prime(p) {
        return Err(Error::InvalidArgument(format!("p = {p} must be a prime >= 5")));
    }
    let k = f.weight();
    let target_slope = f.slope + Rational::from_integer(kappa as i64 - 1);
    let depth_needed = congruence_depth(bounds, bounds.l_max, p);
    if f.series.n_max() < depth_needed {
        return Err(Error::TruncationTooShort { needed: depth_needed, available: f.series.n_max() });
    }
    let target = lift_target(f, kappa)?;
    let mut report = LiftReport {
        input: LiftInput { weight: k, slope: f.slope, p, provenance: f.provenance },
        kappa,
        target_slope,
        hypothesis: hypothesis(k, kappa, p),
        grid: Vec::new(),
        candidates: Vec::new(),
        outcome: Outcome::Exhausted { m_max: bounds.m_max, l_max: bounds.l_max },
    };
    let floor = f.slope * 2 + Rational::from_integer(2 * kappa as i64);
    for m in 0..=bounds.m_max {
        let (base, step) = grid_base_step(k, kappa, p, m);
        if base > bounds.l_max + step {
            break;
        }
        // smallest n with l > floor, largest with l <= l_max
        let lo = (floor - Rational::from_integer(base)) / step;
        let n_lo = lo.floor().to_integer() + 1;
        let n_hi = Integer::div_floor(&(bounds.l_max - base), &step);
        let Ok(grid) = weight_grid(k, kappa, f.slope, p, m, (n_lo, n_hi)) else {
            continue;
        };
        let weights = grid.weights.clone();
        report.grid.push(grid);
        for l in weights {
            if l % 2 != 0 || l < 4 {
                continue;
            }
            if dim_sk(l) > bounds.max_dimension {
                report.outcome = Outcome::Capped {
                    reason: format!("dim S_{l}(1) = {} exceeds {}", dim_sk(l), bounds.max_dimension),
                };
                return Ok(report);
            }
            let depth = congruence_depth(bounds, l, p);
            let forms = eigenforms_level1(l, p, bounds.precision, depth)?;
            let mut cand = Candidate {
                m,
                l,
                slopes: forms.slopes().iter().map(|s| s.to_string()).collect(),
                clusters: forms.clusters.clone(),
                congruent: false,
                depth,
                mode: bounds.mode,
            };
            let mut found = None;
            for g in forms.records.iter().filter(|g| g.slope == target_slope) {
                if congruent_mod(&g.series, &target, p, 1, depth)?.holds {
                    let p_new = Rational::new(l - 2, 2);
                    found = Some(FoundForm {
                        m,
                        l,
                        slope: g.slope,
                        a_p: g.a_p.as_padic().map(|a| a.symmetric().to_string()).unwrap_or_default(),
                        precision: bounds.precision,
                        depth,
                        p_old_check: g.slope != p_new,
                        series: g.series.truncate(depth),
                    });
                    break;
                }
            }
            cand.congruent = found.is_some();
            report.candidates.push(cand);
            if let Some(g) = found {
                debug_assert!(g.p_old_check);
                report.outcome = Outcome::Found { g };
                return Ok(report);
            }
        }
    }
    Ok(report)
}

/// Checks recomputed from scratch for a found form.
#[derive(Debug, Clone, Serialize)]
pub struct Reverification {
    pub slope_matches: bool,
    pub in_grid: bool,
    pub weight_condition: bool,
    pub in_cusp_space: bool,
    pub tp_eigen: bool,
    pub t2_eigen: bool,
    pub congruent: bool,
}

impl Reverification {
    pub fn all(&self) -> bool {
        self.slope_matches
            && self.in_grid
            && self.weight_condition
            && self.in_cusp_space
            && self.tp_eigen
            && self.t2_eigen
            && self.congruent
    }
}

/// Re-derives a found certificate: rebuilds `g` from a fresh Miller basis
/// using its first coefficients, checks the Hecke eigen-relations directly on
/// q-expansions, the slope, grid membership and the congruence with a freshly
/// computed target.
pub fn reverify(f: &EigenformRecord, kappa: u32, g: &FoundForm) -> Result<Reverification> {
    let p = f.p;
    let l = g.l;
    let k = f.weight();
    let n = g.precision;
    let mo = pow_p(p, n);
    let d = dim_sk(l);
    let long = p as usize * (g.depth + 1);
    let basis = miller_basis(l, true, long)?;
    let mut coeffs = vec![BigInt::zero(); long + 1];
    for (i, b) in basis.iter().enumerate() {
        let c = &g.series.coeffs[i + 1];
        for (acc, x) in coeffs.iter_mut().zip(&b.coeffs) {
            *acc += c * x;
        }
    }
    let mut gl = QSeries::from_ints(coeffs.into_iter().map(|x| x.mod_floor(&mo)).collect(), l);
    gl.p = Some(p);
    gl.precision = Some(n);
    let in_cusp_space = d > 0 && (0..=g.depth).all(|i| gl.coeffs[i] == g.series.coeffs[i]);
    let eigen = |m: usize| -> Result<bool> {
        let tg = hecke_tn(&gl, m)?;
        let am = &gl.coeffs[m];
        let top = tg.n_max().min(g.depth);
        Ok((1..=top).all(|i| ((&tg.coeffs[i] - am * &gl.coeffs[i]).mod_floor(&mo)).is_zero()))
    };
    let a_p = PadicScalar::new(p, &gl.coeffs[p as usize], n);
    let slope_matches = match a_p.valuation() {
        Val::Exact(v) => v == g.slope && v == f.slope + Rational::from_integer(kappa as i64 - 1),
        Val::AtLeast(_) => false,
    };
    let (base, step) = grid_base_step(k, kappa, p, g.m);
    let in_grid =
        (l - base).rem_euclid(step) == 0 && (l - (k - 2 + 2 * kappa as i64)).rem_euclid(p as i64 - 1) == 0;
    let weight_condition = Rational::from_integer(l) > f.slope * 2 + Rational::from_integer(2 * kappa as i64);
    let target = qexp::theta_power(&f.series.reduce(p, 1)?, kappa)?;
    let congruent = congruent_mod(&gl, &target, p, 1, g.depth)?.holds;
    Ok(Reverification {
        slope_matches,
        in_grid,
        weight_condition,
        in_cusp_space,
        tp_eigen: eigen(p as usize)?,
        t2_eigen: eigen(2)?,
        congruent,
    })
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum TwistCheck {
    Pass { f_shape: LocalShape, twisted: LocalShape, g_shape: LocalShape },
    Fail { f_shape: LocalShape, twisted: LocalShape, g_shape: LocalShape },
    NotCheckable { reason: String },
}

fn shape_of(r: &EigenformRecord) -> Result<LocalShape> {
    let input = ReductionInput::new(r.p, r.weight(), r.slope)?.with_eigenvalue(r.a_p.clone());
    galrep::classify(&input, None)
}

/// Compares `shape(f) (x) omega^j` with `shape(g)`.
pub fn twist_consistency(f: &EigenformRecord, g: &EigenformRecord, j: i64) -> Result<TwistCheck> {
    if f.p != g.p {
        return Err(Error::PrimeMismatch(f.p, g.p));
    }
    let (sf, sg) = match (shape_of(f), shape_of(g)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return Ok(TwistCheck::NotCheckable { reason: e.to_string() }),
    };
    for s in [&sf, &sg] {
        if !s.is_covered() {
            return Ok(TwistCheck::NotCheckable { reason: s.to_string() });
        }
    }
    let twisted = sf.twist(j);
    Ok(if galrep::shapes_equal(&twisted, &sg)? {
        TwistCheck::Pass { f_shape: sf, twisted, g_shape: sg }
    } else {
        TwistCheck::Fail { f_shape: sf, twisted, g_shape: sg }
    })
}
