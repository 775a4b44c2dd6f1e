//! Dense matrices over `Z` or `Z/m` with big-integer entries.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

pub(crate) type Matrix = Vec<Vec<BigInt>>;

fn reduce(x: BigInt, m: Option<&BigInt>) -> BigInt {
    match m {
        Some(m) => x.mod_floor(m),
        None => x,
    }
}

pub(crate) fn mat_vec(a: &Matrix, v: &[BigInt], m: Option<&BigInt>) -> Vec<BigInt> {
    a.iter()
        .map(|row| {
            let s = row.iter().zip(v).fold(BigInt::zero(), |acc, (x, y)| acc + x * y);
            reduce(s, m)
        })
        .collect()
}

fn row_vec(r: &[BigInt], a: &Matrix, m: Option<&BigInt>) -> Vec<BigInt> {
    let n = a.first().map_or(0, |row| row.len());
    (0..n)
        .map(|j| {
            let s = r.iter().zip(a).fold(BigInt::zero(), |acc, (x, row)| acc + x * &row[j]);
            reduce(s, m)
        })
        .collect()
}

/// Coefficients `[1, c_1, ..., c_n]` of `det(X I - A)` (highest degree
/// first), by Berkowitz's division-free algorithm. Equivalently
/// `det(1 - T A) = sum c_i T^i`.
pub(crate) fn charpoly(a: &Matrix, m: Option<&BigInt>) -> Vec<BigInt> {
    let n = a.len();
    let mut poly = vec![BigInt::one()];
    for r in 0..n {
        // Leading (r+1)x(r+1) block split as [[S, C], [R, a_rr]].
        let s: Matrix = a[..r].iter().map(|row| row[..r].to_vec()).collect();
        let col: Vec<BigInt> = a[..r].iter().map(|row| row[r].clone()).collect();
        let mut rvec: Vec<BigInt> = a[r][..r].to_vec();
        let mut t = Vec::with_capacity(r + 2);
        t.push(BigInt::one());
        t.push(reduce(-&a[r][r], m));
        for _ in 0..r {
            let dot = rvec.iter().zip(&col).fold(BigInt::zero(), |acc, (x, y)| acc + x * y);
            t.push(reduce(-dot, m));
            rvec = row_vec(&rvec, &s, m);
        }
        let mut next = vec![BigInt::zero(); poly.len() + 1];
        for (i, ti) in t.iter().enumerate() {
            for (j, pj) in poly.iter().enumerate() {
                if i + j < next.len() {
                    next[i + j] += ti * pj;
                }
            }
        }
        poly = next.into_iter().map(|x| reduce(x, m)).collect();
    }
    poly
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[i64]]) -> Matrix {
        rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
    }

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    // Leibniz expansion of det(X I - A) evaluated at integer points, compared
    // against the polynomial.
    fn det(a: &Matrix) -> BigInt {
        let n = a.len();
        if n == 0 {
            return BigInt::one();
        }
        let mut total = BigInt::zero();
        for c in 0..n {
            let minor: Matrix = a[1..]
                .iter()
                .map(|row| row.iter().enumerate().filter(|(j, _)| *j != c).map(|(_, x)| x.clone()).collect())
                .collect();
            let term = &a[0][c] * det(&minor);
            if c % 2 == 0 {
                total += term;
            } else {
                total -= term;
            }
        }
        total
    }

    #[test]
    fn small_cases() {
        assert_eq!(charpoly(&mat(&[&[7]]), None), ints(&[1, -7]));
        assert_eq!(charpoly(&mat(&[&[5, 0], &[0, 25]]), None), ints(&[1, -30, 125]));
        assert_eq!(charpoly(&vec![], None), ints(&[1]));
    }

    #[test]
    fn agrees_with_determinant_expansion() {
        let a = mat(&[&[2, -1, 3, 0], &[4, 5, -2, 1], &[0, 7, 1, -3], &[6, 2, 2, 9]]);
        let cp = charpoly(&a, None);
        for x in -3i64..=3 {
            let shifted: Matrix = a
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    row.iter()
                        .enumerate()
                        .map(|(j, v)| if i == j { BigInt::from(x) - v } else { -v })
                        .collect()
                })
                .collect();
            let val = cp.iter().fold(BigInt::zero(), |acc, c| acc * BigInt::from(x) + c);
            assert_eq!(val, det(&shifted));
        }
        let m = BigInt::from(125);
        let reduced = charpoly(&a, Some(&m));
        for (x, y) in cp.iter().zip(&reduced) {
            assert_eq!(x.mod_floor(&m), *y);
        }
    }
}
