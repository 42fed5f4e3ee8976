use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::{Matrix, Rational};

/// Rank by fraction-free (Bareiss) elimination.
///
/// Each row is first scaled by the lcm of its denominators, which leaves the
/// rank unchanged, so all elimination happens on integers and every division
/// is exact.
pub fn bareiss_rank(m: &Matrix<Rational>) -> usize {
    bareiss_rank_int(integer_rows(m), m.cols())
}

/// Exact rank. Small matrices go through Bareiss elimination; larger ones use
/// the certified modular rank and fall back to Bareiss if it gives up.
pub fn exact_rank(m: &Matrix<Rational>) -> usize {
    let a = integer_rows(m);
    if m.rows() * m.cols() <= 32 * 32 {
        return bareiss_rank_int(a, m.cols());
    }
    match super::modular::certified_rank(&a, m.cols(), 64) {
        Some(r) => r,
        None => bareiss_rank_int(a, m.cols()),
    }
}

/// Rows scaled by the lcm of their denominators.
pub(super) fn integer_rows(m: &Matrix<Rational>) -> Vec<Vec<BigInt>> {
    (0..m.rows())
        .map(|i| {
            let row = m.row(i);
            let l = row.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
            row.iter().map(|q| q.numer() * (&l / q.denom())).collect()
        })
        .collect()
}

fn bareiss_rank_int(mut a: Vec<Vec<BigInt>>, cols: usize) -> usize {
    let rows = a.len();

    let mut prev = BigInt::one();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(p, r);
        let (top, bottom) = a.split_at_mut(r + 1);
        let pivot_row = &top[r];
        let pivot = &pivot_row[c];
        for row in bottom.iter_mut() {
            let lead = row[c].clone();
            for j in c + 1..cols {
                let v = pivot * &row[j] - &lead * &pivot_row[j];
                row[j] = v / &prev;
            }
            row[c] = BigInt::zero();
        }
        prev = pivot.clone();
        r += 1;
    }
    r
}

/// Reduced row echelon form and pivot columns.
pub fn rref(m: &Matrix<Rational>) -> (Matrix<Rational>, Vec<usize>) {
    let rows = m.rows();
    let cols = m.cols();
    let mut a = m.clone();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[(i, c)].is_zero()) else {
            continue;
        };
        if p != r {
            for j in 0..cols {
                let tmp = a[(p, j)].clone();
                a[(p, j)] = a[(r, j)].clone();
                a[(r, j)] = tmp;
            }
        }
        let inv = a[(r, c)].recip();
        for j in c..cols {
            a[(r, j)] = &a[(r, j)] * &inv;
        }
        for i in 0..rows {
            if i == r || a[(i, c)].is_zero() {
                continue;
            }
            let f = a[(i, c)].clone();
            for j in c..cols {
                let v = &a[(i, j)] - &f * &a[(r, j)];
                a[(i, j)] = v;
            }
        }
        pivots.push(c);
        r += 1;
    }
    (a, pivots)
}

/// One solution of `m z = b`, or `None` when the system is inconsistent.
/// Free variables are set to zero.
pub fn solve(m: &Matrix<Rational>, b: &[Rational]) -> Option<Vec<Rational>> {
    let cols = m.cols();
    let aug = Matrix::from_fn(m.rows(), cols + 1, |i, j| if j < cols { m[(i, j)].clone() } else { b[i].clone() });
    let (r, pivots) = rref(&aug);
    if pivots.last() == Some(&cols) {
        return None;
    }
    let mut z = vec![Rational::zero(); cols];
    for (k, &c) in pivots.iter().enumerate() {
        z[c] = r[(k, cols)].clone();
    }
    Some(z)
}

/// Exact null-space basis: one vector per free column of the RREF.
pub fn kernel_basis(m: &Matrix<Rational>) -> Vec<Vec<Rational>> {
    let (red, pivots) = rref(m);
    let cols = m.cols();
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Rational::zero(); cols];
            v[f] = Rational::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -red[(row, f)].clone();
            }
            v
        })
        .collect()
}
