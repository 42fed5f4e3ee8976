//! Small dense two-phase simplex with Bland's rule.
//!
//! Generic over [`Scalar`], so the same code runs exactly over rationals
//! (margin ignored) and in `f64` with an absolute pivot margin.

use std::cmp::Ordering;

use super::{Matrix, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome<T> {
    Optimal { x: Vec<T>, value: T },
    Infeasible,
    Unbounded,
}

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    rhs: Vec<T>,
    basis: Vec<usize>,
    margin: f64,
}

impl<T: Scalar> Tableau<T> {
    fn positive(&self, v: &T) -> bool {
        v.sign_with_margin(self.margin) == Ordering::Greater
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let inv = T::one() / self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v = v.clone() * inv.clone();
        }
        self.rhs[r] = self.rhs[r].clone() * inv;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][c].clone();
            if f.is_zero() {
                continue;
            }
            for (v, p) in self.rows[i].iter_mut().zip(&pivot_row) {
                *v = v.clone() - f.clone() * p.clone();
            }
            self.rhs[i] = self.rhs[i].clone() - f * pivot_rhs.clone();
        }
        self.basis[r] = c;
    }

    fn reduced_costs(&self, cost: &[T]) -> Vec<T> {
        (0..cost.len())
            .map(|j| {
                self.basis.iter().enumerate().fold(cost[j].clone(), |acc, (i, &b)| {
                    acc - cost[b].clone() * self.rows[i][j].clone()
                })
            })
            .collect()
    }

    /// Runs simplex iterations for `cost` over the allowed columns.
    /// Returns false when unbounded.
    fn optimize(&mut self, cost: &[T], allowed: usize) -> bool {
        loop {
            let reduced = self.reduced_costs(cost);
            let Some(enter) = (0..allowed).find(|&j| self.positive(&reduced[j])) else {
                return true;
            };
            let mut best: Option<(usize, T)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][enter];
                if !self.positive(a) {
                    continue;
                }
                let ratio = self.rhs[i].clone() / a.clone();
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        let diff = ratio.clone() - br.clone();
                        match diff.sign_with_margin(self.margin) {
                            Ordering::Less => Some((i, ratio)),
                            Ordering::Equal if self.basis[i] < self.basis[bi] => Some((i, ratio)),
                            _ => Some((bi, br)),
                        }
                    }
                };
            }
            let Some((leave, _)) = best else {
                return false;
            };
            self.pivot(leave, enter);
        }
    }

    fn objective(&self, cost: &[T]) -> T {
        self.basis
            .iter()
            .zip(&self.rhs)
            .fold(T::zero(), |acc, (&b, r)| acc + cost[b].clone() * r.clone())
    }
}

/// Maximize `c·x` subject to `A x = b`, `x ≥ 0`.
pub fn solve_standard<T: Scalar>(a: &Matrix<T>, b: &[T], c: &[T], margin: f64) -> LpOutcome<T> {
    let m = a.rows();
    let n = a.cols();
    assert_eq!(b.len(), m);
    assert_eq!(c.len(), n);

    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for i in 0..m {
        let flip = b[i].sign_with_margin(0.0) == Ordering::Less;
        let mut row: Vec<T> = a.row(i).iter().map(|v| if flip { -v.clone() } else { v.clone() }).collect();
        row.extend((0..m).map(|k| if k == i { T::one() } else { T::zero() }));
        rows.push(row);
        rhs.push(if flip { -b[i].clone() } else { b[i].clone() });
    }
    let mut t = Tableau { rows, rhs, basis: (n..n + m).collect(), margin };

    // Phase 1: maximize −Σ artificials.
    let mut phase1 = vec![T::zero(); n + m];
    for v in phase1.iter_mut().skip(n) {
        *v = -T::one();
    }
    t.optimize(&phase1, n + m);
    if t.objective(&phase1).sign_with_margin(margin) == Ordering::Less {
        return LpOutcome::Infeasible;
    }
    // Drive remaining artificials out of the basis where possible.
    for i in 0..m {
        if t.basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| t.rows[i][j].sign_with_margin(margin) != Ordering::Equal) {
                t.pivot(i, j);
            }
        }
    }

    let mut phase2 = c.to_vec();
    phase2.extend((0..m).map(|_| T::zero()));
    if !t.optimize(&phase2, n) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![T::zero(); n];
    for (i, &bcol) in t.basis.iter().enumerate() {
        if bcol < n {
            x[bcol] = t.rhs[i].clone();
        }
    }
    let value = c.iter().zip(&x).fold(T::zero(), |acc, (ci, xi)| acc + ci.clone() * xi.clone());
    LpOutcome::Optimal { x, value }
}

/// Nonnegative coefficients `c` with `Σ cᵢ gᵢ = x`, if any exist.
pub fn conic_combination<T: Scalar>(generators: &[Vec<T>], x: &[T], margin: f64) -> Option<Vec<T>> {
    if generators.is_empty() {
        return x.iter().all(|v| v.sign_with_margin(margin) == Ordering::Equal).then(Vec::new);
    }
    let d = x.len();
    let a = Matrix::from_fn(d, generators.len(), |i, j| generators[j][i].clone());
    match solve_standard(&a, x, &vec![T::zero(); generators.len()], margin) {
        LpOutcome::Optimal { x, .. } => Some(x),
        _ => None,
    }
}

/// Maximize `c·y` over free `y` subject to `rows·y ≤ h`.
pub fn maximize_free<T: Scalar>(rows: &[Vec<T>], h: &[T], c: &[T], margin: f64) -> LpOutcome<T> {
    let m = rows.len();
    let n = c.len();
    let a = Matrix::from_fn(m, 2 * n + m, |i, j| {
        if j < n {
            rows[i][j].clone()
        } else if j < 2 * n {
            -rows[i][j - n].clone()
        } else if j - 2 * n == i {
            T::one()
        } else {
            T::zero()
        }
    });
    let mut cost: Vec<T> = c.to_vec();
    cost.extend(c.iter().map(|v| -v.clone()));
    cost.extend((0..m).map(|_| T::zero()));
    match solve_standard(&a, h, &cost, margin) {
        LpOutcome::Optimal { x, value } => {
            let y = (0..n).map(|j| x[j].clone() - x[n + j].clone()).collect();
            LpOutcome::Optimal { x: y, value }
        }
        other => other,
    }
}
