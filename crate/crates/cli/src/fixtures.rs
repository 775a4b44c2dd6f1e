//! Named q-expansion fixtures and JSON series files.

use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use padic_theta::qexp::{self, Provenance};
use padic_theta::{EigenformRecord, QSeries};

use crate::{usage, Fail};

/// Series named by `arg` with coefficients through `q^depth`.
///
/// Names: `delta`, `e4`, `e6`, `eis:k`, `miller:k:j`, `random:k`; anything
/// else is read as a JSON series file.
pub fn load(arg: &str, depth: usize, seed: u64) -> Result<QSeries, Fail> {
    if let Some(f) = named(arg, depth, seed)? {
        return Ok(f);
    }
    let path = Path::new(arg);
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{arg}: {e}")))?;
    QSeries::from_json(&text).map_err(|e| usage(format!("{arg}: {e}")))
}

/// Eigenform record for `arg`; the series must be normalized (`a_1 = 1`).
pub fn record(arg: &str, p: u64, prec: u32, depth: usize, seed: u64) -> Result<EigenformRecord, Fail> {
    let provenance =
        if named_kind(arg).is_some() { Provenance::ClassicalLevel1 } else { Provenance::SyntheticFixture };
    if matches!(named_kind(arg), Some("miller" | "random")) {
        return Err(usage(format!("{arg} is not an eigenform")));
    }
    let f = load(arg, depth, seed)?;
    if f.coeffs.get(1).is_none_or(|a| !a.is_one()) || !f.denom.is_one() {
        return Err(usage(format!("{arg}: expected a normalized eigenform with a_1 = 1")));
    }
    Ok(EigenformRecord::classical(f, p, prec, provenance)?)
}

fn named_kind(arg: &str) -> Option<&'static str> {
    let head = arg.split(':').next().unwrap_or("");
    ["delta", "e4", "e6", "eis", "miller", "random"].into_iter().find(|k| *k == head)
}

fn cache_path(arg: &str, depth: usize, seed: u64) -> Option<PathBuf> {
    let dir = std::env::var_os("PTL_CACHE_DIR")?;
    let name = arg.replace(':', "_");
    let tag = if arg.starts_with("random") { format!("-{seed:x}") } else { String::new() };
    Some(PathBuf::from(dir).join(format!("{name}{tag}-{depth}.json")))
}

fn named(arg: &str, depth: usize, seed: u64) -> Result<Option<QSeries>, Fail> {
    let Some(kind) = named_kind(arg) else {
        return Ok(None);
    };
    let cache = cache_path(arg, depth, seed);
    if let Some(path) = &cache {
        if let Ok(text) = std::fs::read_to_string(path) {
            if let Ok(f) = QSeries::from_json(&text) {
                return Ok(Some(f));
            }
        }
    }
    let args: Vec<&str> = arg.split(':').skip(1).collect();
    let int = |i: usize| -> Result<i64, Fail> {
        args.get(i)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| usage(format!("fixture {arg:?}: expected {kind}:<int>...")))
    };
    let arity = match kind {
        "delta" | "e4" | "e6" => 0,
        "eis" | "random" => 1,
        _ => 2,
    };
    if args.len() != arity {
        return Err(usage(format!("fixture {arg:?} takes {arity} argument(s)")));
    }
    let f = match kind {
        "delta" => qexp::delta(depth),
        "e4" => qexp::eisenstein_eigenform(4, depth)?,
        "e6" => qexp::eisenstein_eigenform(6, depth)?,
        "eis" => qexp::eisenstein_eigenform(int(0)?, depth)?,
        "miller" => {
            let (k, j) = (int(0)?, int(1)?);
            let basis = qexp::miller_basis(k, false, depth)?;
            basis
                .get(j as usize)
                .cloned()
                .ok_or_else(|| usage(format!("M_{k} has dimension {}", basis.len())))?
        }
        _ => {
            let k = int(0)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut acc: Option<QSeries> = None;
            for g in qexp::miller_basis(k, true, depth)? {
                let c = BigInt::from(rng.gen_range(-9i64..=9));
                let t = g.scale(&c);
                acc = Some(match acc {
                    Some(a) => a.add(&t)?,
                    None => t,
                });
            }
            acc.ok_or_else(|| usage(format!("S_{k} is zero")))?
        }
    };
    if let Some(path) = cache {
        let _ = std::fs::create_dir_all(path.parent().unwrap_or(Path::new(".")));
        let _ = std::fs::write(&path, f.to_json());
    }
    Ok(Some(f))
}
