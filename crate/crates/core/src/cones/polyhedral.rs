//! Finitely generated cones with exact dual generators.
//!
//! Extremal rays of the dual cone `{y : ⟨g, y⟩ ≥ 0 for every generator g}`
//! come from the double-description method, run once in exact arithmetic at
//! construction. After that every membership query is a loop of dot products.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::linalg::simplex::{solve_standard, LpOutcome};
use crate::linalg::{exact_rank, rational_from_f64, rref, Matrix, Rational, ScalarMode, Vector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("a polyhedral cone needs at least one generator")]
    Empty,
    #[error("generator {index} has length {got}, expected {expected}")]
    Ragged { index: usize, expected: usize, got: usize },
    #[error("generator {0} has a non-finite entry")]
    NonFinite(usize),
    #[error("generators span a subspace of dimension {rank} < {dim}: the cone has empty interior")]
    NotSpanning { rank: usize, dim: usize },
    #[error("the cone contains a line (some nonnegative combination of generators vanishes)")]
    NotPointed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolyCone {
    dim: usize,
    generators: Vec<Vec<Rational>>,
    extremals: Vec<Vec<Rational>>,
    dual_extremals: Vec<Vec<Rational>>,
    // Unit-length float copies for tolerance tests.
    extremals_unit: Vec<Vec<f64>>,
    dual_unit: Vec<Vec<f64>>,
}

impl PolyCone {
    pub fn new(generators: Vec<Vec<Rational>>) -> Result<Self, PolyError> {
        let dim = generators.first().ok_or(PolyError::Empty)?.len();
        if dim == 0 {
            return Err(PolyError::Empty);
        }
        for (index, g) in generators.iter().enumerate() {
            if g.len() != dim {
                return Err(PolyError::Ragged { index, expected: dim, got: g.len() });
            }
        }
        let gm = Matrix::from_rows(generators.clone()).expect("rows checked above");
        let rank = exact_rank(&gm);
        if rank < dim {
            return Err(PolyError::NotSpanning { rank, dim });
        }
        if !is_pointed(&generators) {
            return Err(PolyError::NotPointed);
        }

        let dual_extremals = double_description(&generators, dim);
        let extremals = extremal_subset(&generators, &dual_extremals, dim);
        Ok(PolyCone {
            dim,
            extremals_unit: extremals.iter().map(|v| unit_f64(v)).collect(),
            dual_unit: dual_extremals.iter().map(|v| unit_f64(v)).collect(),
            generators,
            extremals,
            dual_extremals,
        })
    }

    /// Float generators are taken at their exact binary values.
    pub fn from_f64(generators: &[Vec<f64>]) -> Result<Self, PolyError> {
        let exact = generators
            .iter()
            .enumerate()
            .map(|(i, g)| g.iter().map(|&v| rational_from_f64(v)).collect::<Option<Vec<_>>>().ok_or(PolyError::NonFinite(i)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(exact)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[Vec<Rational>] {
        &self.generators
    }

    /// Minimal generating subset, in input order.
    pub fn extremals(&self) -> &[Vec<Rational>] {
        &self.extremals
    }

    /// Extremal rays of the dual cone as primitive integer vectors.
    pub fn dual_extremals(&self) -> &[Vec<Rational>] {
        &self.dual_extremals
    }

    pub fn contains(&self, x: &Vector, mode: &ScalarMode) -> bool {
        all_pairings(&self.dual_extremals, &self.dual_unit, x, mode, false)
    }

    pub fn interior_contains(&self, x: &Vector, mode: &ScalarMode) -> bool {
        all_pairings(&self.dual_extremals, &self.dual_unit, x, mode, true)
    }

    pub fn dual_contains(&self, y: &Vector, mode: &ScalarMode) -> bool {
        all_pairings(&self.extremals, &self.extremals_unit, y, mode, false)
    }

    pub fn interior_dual_contains(&self, y: &Vector, mode: &ScalarMode) -> bool {
        all_pairings(&self.extremals, &self.extremals_unit, y, mode, true)
    }
}

/// `⟨row, x⟩ ≥ 0` (or `> 0` when `strict`) for every row. Exact when both the
/// mode and `x` are exact; otherwise against unit-length rows with a margin
/// of `eps_interior·‖x‖`.
fn all_pairings(rows: &[Vec<Rational>], unit_rows: &[Vec<f64>], x: &Vector, mode: &ScalarMode, strict: bool) -> bool {
    if let (true, Some(xe)) = (mode.is_exact(), x.exact()) {
        return rows.iter().all(|r| {
            let s = r.iter().zip(xe).fold(Rational::zero(), |acc, (a, b)| acc + a * b);
            if strict {
                s.is_positive()
            } else {
                !s.is_negative()
            }
        });
    }
    let xf = x.to_float();
    let margin = mode.tol.eps_interior * crate::linalg::norm2(&xf);
    unit_rows.iter().all(|r| {
        let s = crate::linalg::dot(r, &xf);
        if strict {
            s > margin
        } else {
            s >= -margin
        }
    })
}

fn unit_f64(v: &[Rational]) -> Vec<f64> {
    use crate::linalg::Scalar;
    let f: Vec<f64> = v.iter().map(Scalar::as_f64).collect();
    let n = crate::linalg::norm2(&f);
    f.iter().map(|x| x / n).collect()
}

/// Pointed iff no convex combination of the generators is zero, i.e. the LP
/// `Σ cᵢ gᵢ = 0, Σ cᵢ = 1, c ≥ 0` is infeasible.
fn is_pointed(generators: &[Vec<Rational>]) -> bool {
    let n = generators.len();
    let d = generators[0].len();
    let a = Matrix::from_fn(d + 1, n, |i, j| if i < d { generators[j][i].clone() } else { Rational::one() });
    let mut b = vec![Rational::zero(); d + 1];
    b[d] = Rational::one();
    let c = vec![Rational::zero(); n];
    matches!(solve_standard(&a, &b, &c, 0.0), LpOutcome::Infeasible)
}

/// Positive multiple with coprime integer entries.
fn primitive(v: Vec<Rational>) -> Vec<Rational> {
    let l = v.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    let ints: Vec<BigInt> = v.iter().map(|q| q.numer() * (&l / q.denom())).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return v;
    }
    ints.into_iter().map(|x| Rational::from_integer(x / &g)).collect()
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

struct Ray {
    v: Vec<Rational>,
    /// Indices of processed constraints that are tight at this ray.
    zeros: Vec<bool>,
}

/// Extremal rays of `{y : ⟨a_i, y⟩ ≥ 0}` for spanning constraint rows `a_i`.
fn double_description(rows: &[Vec<Rational>], d: usize) -> Vec<Vec<Rational>> {
    let n = rows.len();

    // Start from d independent constraints: their cone is simplicial, with
    // rays given by the columns of the inverse.
    let mut basis: Vec<usize> = Vec::with_capacity(d);
    for i in 0..n {
        let mut trial: Vec<Vec<Rational>> = basis.iter().map(|&k| rows[k].clone()).collect();
        trial.push(rows[i].clone());
        if exact_rank(&Matrix::from_rows(trial).expect("nonempty")) == basis.len() + 1 {
            basis.push(i);
        }
        if basis.len() == d {
            break;
        }
    }
    let aug = Matrix::from_fn(d, 2 * d, |i, j| {
        if j < d {
            rows[basis[i]][j].clone()
        } else if j - d == i {
            Rational::one()
        } else {
            Rational::zero()
        }
    });
    let (red, _) = rref(&aug);
    let mut rays: Vec<Ray> = (0..d)
        .map(|j| {
            let v = primitive((0..d).map(|i| red[(i, d + j)].clone()).collect());
            let mut zeros = vec![false; n];
            for (k, &b) in basis.iter().enumerate() {
                zeros[b] = k != j;
            }
            Ray { v, zeros }
        })
        .collect();

    let mut processed: Vec<bool> = vec![false; n];
    for &b in &basis {
        processed[b] = true;
    }

    for i in 0..n {
        if processed[i] {
            continue;
        }
        let a = &rows[i];
        let vals: Vec<Rational> = rays.iter().map(|r| dot(a, &r.v)).collect();
        let plus: Vec<usize> = (0..rays.len()).filter(|&k| vals[k].is_positive()).collect();
        let minus: Vec<usize> = (0..rays.len()).filter(|&k| vals[k].is_negative()).collect();

        let mut fresh = Vec::new();
        for &p in &plus {
            for &m in &minus {
                let common: Vec<bool> = (0..n).map(|c| rays[p].zeros[c] && rays[m].zeros[c]).collect();
                if common.iter().filter(|&&z| z).count() + 2 < d {
                    continue;
                }
                // Combinatorial adjacency: no third ray is tight on all of `common`.
                let adjacent = (0..rays.len())
                    .filter(|&t| t != p && t != m)
                    .all(|t| !(0..n).all(|c| !common[c] || rays[t].zeros[c]));
                if !adjacent {
                    continue;
                }
                let v: Vec<Rational> = rays[m]
                    .v
                    .iter()
                    .zip(&rays[p].v)
                    .map(|(mv, pv)| &vals[p] * mv - &vals[m] * pv)
                    .collect();
                let mut zeros = common;
                zeros[i] = true;
                fresh.push(Ray { v: primitive(v), zeros });
            }
        }

        let mut kept: Vec<Ray> = Vec::with_capacity(rays.len() + fresh.len());
        for (k, mut r) in rays.into_iter().enumerate() {
            if vals[k].is_negative() {
                continue;
            }
            if vals[k].is_zero() {
                r.zeros[i] = true;
            }
            kept.push(r);
        }
        kept.extend(fresh);
        rays = kept;
        processed[i] = true;
    }
    rays.into_iter().map(|r| r.v).collect()
}

/// A nonzero generator is extremal iff the dual extremals vanishing on it
/// span a hyperplane. Parallel copies keep only their first occurrence.
fn extremal_subset(generators: &[Vec<Rational>], duals: &[Vec<Rational>], d: usize) -> Vec<Vec<Rational>> {
    let mut seen: Vec<Vec<Rational>> = Vec::new();
    let mut out = Vec::new();
    for g in generators {
        if g.iter().all(Zero::is_zero) {
            continue;
        }
        let p = primitive(g.clone());
        if seen.contains(&p) {
            continue;
        }
        seen.push(p);
        let tight: Vec<Vec<Rational>> = duals.iter().filter(|y| dot(y, g).is_zero()).cloned().collect();
        let rank = if tight.is_empty() { 0 } else { exact_rank(&Matrix::from_rows(tight).expect("nonempty")) };
        if rank + 1 == d {
            out.push(g.clone());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::simplex::conic_combination;
    use proptest::prelude::*;

    fn ints(rows: &[&[i64]]) -> Vec<Vec<Rational>> {
        rows.iter().map(|r| r.iter().map(|&v| Rational::from_integer(v.into())).collect()).collect()
    }

    fn sorted(mut v: Vec<Vec<Rational>>) -> Vec<Vec<Rational>> {
        v.sort();
        v
    }

    #[test]
    fn square_cone_dual_is_the_diamond_cone() {
        let k = PolyCone::new(ints(&[&[1, 1, 1], &[1, 1, -1], &[1, -1, 1], &[1, -1, -1]])).unwrap();
        let want = ints(&[&[1, 1, 0], &[1, -1, 0], &[1, 0, 1], &[1, 0, -1]]);
        assert_eq!(sorted(k.dual_extremals().to_vec()), sorted(want));
        assert_eq!(k.extremals().len(), 4);
    }

    #[test]
    fn redundant_generator_is_dropped() {
        let k = PolyCone::new(ints(&[&[1, 0], &[0, 1], &[1, 1], &[2, 0]])).unwrap();
        assert_eq!(k.extremals(), &ints(&[&[1, 0], &[0, 1]])[..]);
    }

    #[test]
    fn degenerate_cones_are_rejected() {
        assert_eq!(PolyCone::new(ints(&[&[1, 0], &[2, 0]])), Err(PolyError::NotSpanning { rank: 1, dim: 2 }));
        assert_eq!(PolyCone::new(ints(&[&[1, 0], &[-1, 0], &[0, 1]])), Err(PolyError::NotPointed));
        assert_eq!(PolyCone::new(vec![]), Err(PolyError::Empty));
    }

    #[test]
    fn dual_membership_by_hand() {
        let k = PolyCone::new(ints(&[&[1, 0], &[1, 1]])).unwrap();
        let m = ScalarMode::exact();
        assert!(k.dual_contains(&Vector::from_ints(&[0, 1]), &m));
        // ⟨[-1,2],[1,0]⟩ = -1 < 0.
        assert!(!k.dual_contains(&Vector::from_ints(&[-1, 2]), &m));
    }

    fn random_pointed_gens() -> impl Strategy<Value = Vec<Vec<Rational>>> {
        // Generators with positive first coordinate give a pointed cone.
        (2usize..=4)
            .prop_flat_map(|d| prop::collection::vec(prop::collection::vec(-3i64..=3, d - 1), d..=d + 3).prop_map(move |tails| (d, tails)))
            .prop_map(|(_, tails)| {
                tails
                    .into_iter()
                    .map(|t| std::iter::once(1i64).chain(t).map(|v| Rational::from_integer(v.into())).collect())
                    .collect()
            })
    }

    proptest! {
        #[test]
        fn membership_matches_conic_combination_lp(
            gens in random_pointed_gens(),
            x in prop::collection::vec(-4i64..=4, 4),
        ) {
            let Ok(k) = PolyCone::new(gens.clone()) else { return Ok(()); };
            let x: Vec<Rational> = x[..k.dim()].iter().map(|&v| Rational::from_integer(v.into())).collect();
            let by_lp = conic_combination(&gens, &x, 0.0).is_some();
            prop_assert_eq!(k.contains(&Vector::Exact(x), &ScalarMode::exact()), by_lp);
        }

        #[test]
        fn extremal_subset_matches_lp(gens in random_pointed_gens()) {
            let Ok(k) = PolyCone::new(gens.clone()) else { return Ok(()); };
            for (i, g) in gens.iter().enumerate() {
                let others: Vec<Vec<Rational>> = gens.iter().enumerate().filter(|&(j, h)| j != i && primitive(h.clone()) != primitive(g.clone())).map(|(_, h)| h.clone()).collect();
                let redundant = conic_combination(&others, g, 0.0).is_some();
                let first_copy = gens[..i].iter().all(|h| primitive(h.clone()) != primitive(g.clone()));
                if first_copy {
                    prop_assert_eq!(k.extremals().contains(g), !redundant);
                }
            }
        }

        #[test]
        fn dual_extremals_are_exactly_the_tight_rays(gens in random_pointed_gens()) {
            let Ok(k) = PolyCone::new(gens.clone()) else { return Ok(()); };
            let d = k.dim();
            for y in k.dual_extremals() {
                prop_assert!(gens.iter().all(|g| !dot(g, y).is_negative()));
                let tight: Vec<Vec<Rational>> = gens.iter().filter(|g| dot(g, y).is_zero()).cloned().collect();
                prop_assert_eq!(exact_rank(&Matrix::from_rows(tight).unwrap()), d - 1);
            }
        }
    }
}
