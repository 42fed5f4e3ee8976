//! Dense real matrix kernel with an exact-rational path and a floating-point path.
//!
//! Matrices are stored row-major in [`Matrix<T>`]. The [`Mat`] and [`Vector`]
//! enums carry either exact rationals or `f64` entries; rank and kernel
//! computations on exact data never round. Eigenvalues are always computed in
//! floating point (over the complex numbers) and, when an eigenvalue happens to
//! be rational, can be certified exactly with [`certified_spectral_radius`].

mod exact;
mod float;
mod modular;
pub mod simplex;

use std::cmp::Ordering;
use std::fmt::Debug;
use std::ops::{Index, IndexMut, Neg};

use num_complex::Complex64;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use exact::{bareiss_rank, exact_rank, rref};

/// Arbitrary-precision rational used by the exact path.
pub type Rational = num_rational::BigRational;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix must have at least one row and one column")]
    Empty,
    #[error("ragged rows: row {row} has {got} entries, expected {expected}")]
    Ragged { row: usize, got: usize, expected: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// Field operations shared by the exact and floating-point paths.
pub trait Scalar:
    Clone + Debug + PartialEq + Num + Neg<Output = Self> + Send + Sync + 'static
{
    /// True when arithmetic on this type never rounds.
    const EXACT: bool;

    fn from_int(v: i64) -> Self;
    fn as_f64(&self) -> f64;
    fn magnitude(&self) -> Self;

    /// Sign of `self`, treating `|self| <= margin` as zero. Exact scalars
    /// ignore the margin.
    fn sign_with_margin(&self, margin: f64) -> Ordering;
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_int(v: i64) -> Self {
        v as f64
    }
    fn as_f64(&self) -> f64 {
        *self
    }
    fn magnitude(&self) -> Self {
        self.abs()
    }
    fn sign_with_margin(&self, margin: f64) -> Ordering {
        if *self > margin {
            Ordering::Greater
        } else if *self < -margin {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_int(v: i64) -> Self {
        Rational::from_integer(v.into())
    }
    fn as_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn magnitude(&self) -> Self {
        self.abs()
    }
    fn sign_with_margin(&self, _margin: f64) -> Ordering {
        if self.is_positive() {
            Ordering::Greater
        } else if self.is_negative() {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }
}

/// Exact rational value of a finite `f64` (every finite double is a dyadic rational).
pub fn rational_from_f64(v: f64) -> Option<Rational> {
    Rational::from_f64(v)
}

/// Parse a rational literal: integers, `p/q`, and plain decimals such as `-0.125`.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let t = text.trim();
    if let Some((p, q)) = t.split_once('/') {
        let p = parse_rational(p)?;
        let q = parse_rational(q)?;
        if q.is_zero() {
            return None;
        }
        return Some(p / q);
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    if body.is_empty() {
        return None;
    }
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
        || (int_part.is_empty() && frac_part.is_empty())
    {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: num_bigint::BigInt = digits.parse().ok()?;
    let denom = num_bigint::BigInt::from(10u32).pow(frac_part.len() as u32);
    let r = Rational::new(numer, denom);
    Some(if neg { -r } else { r })
}

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T> Matrix<T> {
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
    pub fn data(&self) -> &[T] {
        &self.data
    }
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }
    pub fn row_vecs(&self) -> Vec<Vec<T>>
    where
        T: Clone,
    {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self, LinalgError> {
        let n = rows.len();
        let m = rows.first().map(Vec::len).unwrap_or(0);
        if n == 0 || m == 0 {
            return Err(LinalgError::Empty);
        }
        let mut data = Vec::with_capacity(n * m);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != m {
                return Err(LinalgError::Ragged { row: i, got: r.len(), expected: m });
            }
            data.extend(r);
        }
        Ok(Matrix { rows: n, cols: m, data })
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = a.clone() * other[(k, j)].clone();
                    let cell = &mut out[(i, j)];
                    *cell = cell.clone() + prod;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.cols, x.len(), "mul_vec shape mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .filter(|(a, _)| !a.is_zero())
                    .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a.clone() + b.clone()).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a.clone() - b.clone()).collect(),
        }
    }

    pub fn scale(&self, s: &T) -> Self {
        self.map(|a| a.clone() * s.clone())
    }

    /// `self − λ·I`.
    pub fn shift(&self, lambda: &T) -> Self {
        let mut out = self.clone();
        for i in 0..self.rows.min(self.cols) {
            out[(i, i)] = out[(i, i)].clone() - lambda.clone();
        }
        out
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (p, q) = (other.rows, other.cols);
        Self::from_fn(self.rows * p, self.cols * q, |i, j| {
            self[(i / p, j / q)].clone() * other[(i % p, j % q)].clone()
        })
    }

    /// `selfⁿ` by repeated squaring; `self⁰ = I`.
    pub fn pow(&self, mut n: u64) -> Self {
        assert!(self.is_square(), "pow of non-square matrix");
        let mut result = Self::identity(self.rows);
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                result = result.matmul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.matmul(&base);
            }
        }
        result
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        self.map(Scalar::as_f64)
    }
}

impl Matrix<f64> {
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// A real matrix whose entries are exact rationals or floats.
#[derive(Clone, Debug, PartialEq)]
pub enum Mat {
    Exact(Matrix<Rational>),
    Float(Matrix<f64>),
}

impl Mat {
    pub fn from_f64_rows(rows: Vec<Vec<f64>>) -> Result<Self, LinalgError> {
        let m = Matrix::from_rows(rows)?;
        if let Some(pos) = m.data.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite { row: pos / m.cols, col: pos % m.cols });
        }
        Ok(Mat::Float(m))
    }

    pub fn from_rational_rows(rows: Vec<Vec<Rational>>) -> Result<Self, LinalgError> {
        Ok(Mat::Exact(Matrix::from_rows(rows)?))
    }

    /// Exact matrix from integer numerators over a common denominator.
    pub fn from_ratios(rows: &[&[(i64, i64)]]) -> Result<Self, LinalgError> {
        Self::from_rational_rows(
            rows.iter()
                .map(|r| r.iter().map(|&(p, q)| Rational::new(p.into(), q.into())).collect())
                .collect(),
        )
    }

    /// Exact matrix with integer entries.
    pub fn from_ints(rows: &[&[i64]]) -> Result<Self, LinalgError> {
        Self::from_rational_rows(
            rows.iter().map(|r| r.iter().map(|&v| Rational::from_int(v)).collect()).collect(),
        )
    }

    pub fn identity(n: usize, exact: bool) -> Self {
        if exact {
            Mat::Exact(Matrix::identity(n))
        } else {
            Mat::Float(Matrix::identity(n))
        }
    }

    pub fn rows(&self) -> usize {
        match self {
            Mat::Exact(m) => m.rows(),
            Mat::Float(m) => m.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Mat::Exact(m) => m.cols(),
            Mat::Float(m) => m.cols(),
        }
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Mat::Exact(_))
    }

    pub fn exact(&self) -> Option<&Matrix<Rational>> {
        match self {
            Mat::Exact(m) => Some(m),
            Mat::Float(_) => None,
        }
    }

    pub fn to_float(&self) -> Matrix<f64> {
        match self {
            Mat::Exact(m) => m.to_f64(),
            Mat::Float(m) => m.clone(),
        }
    }

    /// Same matrix on the float path.
    pub fn into_float(self) -> Mat {
        Mat::Float(self.to_float())
    }

    pub fn entry_f64(&self, i: usize, j: usize) -> f64 {
        match self {
            Mat::Exact(m) => m[(i, j)].as_f64(),
            Mat::Float(m) => m[(i, j)],
        }
    }

    /// Sign of an entry; exact for rational matrices, strict comparison with zero otherwise.
    pub fn entry_sign(&self, i: usize, j: usize) -> Ordering {
        match self {
            Mat::Exact(m) => m[(i, j)].sign_with_margin(0.0),
            Mat::Float(m) => m[(i, j)].sign_with_margin(0.0),
        }
    }

    pub fn transpose(&self) -> Mat {
        match self {
            Mat::Exact(m) => Mat::Exact(m.transpose()),
            Mat::Float(m) => Mat::Float(m.transpose()),
        }
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        match (self, other) {
            (Mat::Exact(a), Mat::Exact(b)) => Mat::Exact(a.matmul(b)),
            _ => Mat::Float(self.to_float().matmul(&other.to_float())),
        }
    }

    pub fn add(&self, other: &Mat) -> Mat {
        match (self, other) {
            (Mat::Exact(a), Mat::Exact(b)) => Mat::Exact(a.add(b)),
            _ => Mat::Float(self.to_float().add(&other.to_float())),
        }
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        match (self, other) {
            (Mat::Exact(a), Mat::Exact(b)) => Mat::Exact(a.sub(b)),
            _ => Mat::Float(self.to_float().sub(&other.to_float())),
        }
    }

    pub fn mul_vec(&self, x: &Vector) -> Vector {
        match (self, x) {
            (Mat::Exact(a), Vector::Exact(v)) => Vector::Exact(a.mul_vec(v)),
            _ => Vector::Float(self.to_float().mul_vec(&x.to_float())),
        }
    }

    pub fn shift_identity(&self, lambda: &Rational) -> Mat {
        match self {
            Mat::Exact(m) => Mat::Exact(m.shift(lambda)),
            Mat::Float(m) => Mat::Float(m.shift(&lambda.as_f64())),
        }
    }
}

/// A real vector whose entries are exact rationals or floats.
#[derive(Clone, Debug, PartialEq)]
pub enum Vector {
    Exact(Vec<Rational>),
    Float(Vec<f64>),
}

impl Vector {
    pub fn len(&self) -> usize {
        match self {
            Vector::Exact(v) => v.len(),
            Vector::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Vector::Exact(_))
    }

    pub fn from_ints(v: &[i64]) -> Vector {
        Vector::Exact(v.iter().map(|&x| Rational::from_int(x)).collect())
    }

    pub fn to_float(&self) -> Vec<f64> {
        match self {
            Vector::Exact(v) => v.iter().map(Scalar::as_f64).collect(),
            Vector::Float(v) => v.clone(),
        }
    }

    pub fn exact(&self) -> Option<&[Rational]> {
        match self {
            Vector::Exact(v) => Some(v),
            Vector::Float(_) => None,
        }
    }

    /// Exact copy; float entries are converted to their exact dyadic values.
    pub fn to_exact(&self) -> Option<Vec<Rational>> {
        match self {
            Vector::Exact(v) => Some(v.clone()),
            Vector::Float(v) => v.iter().map(|&x| rational_from_f64(x)).collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.to_float().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Vector) -> Value {
        match (self, other) {
            (Vector::Exact(a), Vector::Exact(b)) => {
                Value::Exact(a.iter().zip(b).fold(Rational::zero(), |s, (x, y)| s + x * y))
            }
            _ => Value::Float(dot(&self.to_float(), &other.to_float())),
        }
    }

    pub fn scale(&self, s: &Value) -> Vector {
        match (self, s) {
            (Vector::Exact(a), Value::Exact(c)) => Vector::Exact(a.iter().map(|x| x * c).collect()),
            _ => {
                let c = s.as_f64();
                Vector::Float(self.to_float().iter().map(|x| x * c).collect())
            }
        }
    }

    pub fn kron(&self, other: &Vector) -> Vector {
        match (self, other) {
            (Vector::Exact(a), Vector::Exact(b)) => {
                Vector::Exact(a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect())
            }
            _ => {
                let b = other.to_float();
                Vector::Float(self.to_float().iter().flat_map(|x| b.iter().map(move |y| x * y)).collect())
            }
        }
    }

    pub fn neg(&self) -> Vector {
        match self {
            Vector::Exact(v) => Vector::Exact(v.iter().map(|x| -x).collect()),
            Vector::Float(v) => Vector::Float(v.iter().map(|x| -x).collect()),
        }
    }
}

/// A single scalar on either path.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Exact(Rational),
    Float(f64),
}

impl Value {
    pub fn as_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => r.as_f64(),
            Value::Float(v) => *v,
        }
    }

    pub fn is_zero_exact(&self) -> bool {
        matches!(self, Value::Exact(r) if r.is_zero())
    }

    pub fn recip(&self) -> Option<Value> {
        match self {
            Value::Exact(r) if !r.is_zero() => Some(Value::Exact(r.recip())),
            Value::Float(v) if *v != 0.0 => Some(Value::Float(1.0 / v)),
            _ => None,
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn kron_vec(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative singular-value cutoff for numerical rank.
    pub eps_rank: f64,
    /// Absolute radius for grouping eigenvalues (applied after normalizing by r(A)).
    pub eps_cluster: f64,
    /// Relative margin for strict positivity / interior tests.
    pub eps_interior: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { eps_rank: 1e-9, eps_cluster: 1e-7, eps_interior: 1e-10 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("eps_rank", self.eps_rank),
            ("eps_cluster", self.eps_cluster),
            ("eps_interior", self.eps_interior),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} must be a positive finite number, got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arithmetic {
    #[serde(rename = "rational")]
    ExactRational,
    Float,
}

/// Arithmetic context for rank, kernel and membership decisions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarMode {
    pub arithmetic: Arithmetic,
    pub tol: Tolerances,
}

impl Default for ScalarMode {
    fn default() -> Self {
        ScalarMode::exact()
    }
}

impl ScalarMode {
    pub fn exact() -> Self {
        ScalarMode { arithmetic: Arithmetic::ExactRational, tol: Tolerances::default() }
    }

    pub fn float() -> Self {
        ScalarMode { arithmetic: Arithmetic::Float, tol: Tolerances::default() }
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn is_exact(&self) -> bool {
        self.arithmetic == Arithmetic::ExactRational
    }
}

/// A decision together with a flag raised when a float threshold was close.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Decision<T> {
    pub value: T,
    pub marginal: bool,
}

impl<T> Decision<T> {
    pub fn exact(value: T) -> Self {
        Decision { value, marginal: false }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiplicityPair {
    pub geometric: usize,
    pub algebraic: usize,
}

/// Standard Kronecker product. Exact when both operands are exact.
pub fn kron(a: &Mat, b: &Mat) -> Mat {
    match (a, b) {
        (Mat::Exact(x), Mat::Exact(y)) => Mat::Exact(x.kron(y)),
        _ => Mat::Float(a.to_float().kron(&b.to_float())),
    }
}

pub fn mat_power(m: &Mat, n: u64) -> Mat {
    match m {
        Mat::Exact(x) => Mat::Exact(x.pow(n)),
        Mat::Float(x) => Mat::Float(x.pow(n)),
    }
}

pub fn rank(m: &Mat, mode: &ScalarMode) -> Decision<usize> {
    match (m, mode.arithmetic) {
        (Mat::Exact(x), Arithmetic::ExactRational) => Decision::exact(exact_rank(x)),
        _ => float::rank(&m.to_float(), mode.tol.eps_rank),
    }
}

/// Dimension of the null space of a square matrix.
pub fn kernel_dim(m: &Mat, mode: &ScalarMode) -> usize {
    kernel_dim_checked(m, mode).value
}

pub fn kernel_dim_checked(m: &Mat, mode: &ScalarMode) -> Decision<usize> {
    let r = rank(m, mode);
    Decision { value: m.cols() - r.value, marginal: r.marginal }
}

/// Basis of the null space. Exact input in exact mode yields exact vectors.
pub fn kernel_basis(m: &Mat, mode: &ScalarMode) -> Vec<Vector> {
    match (m, mode.arithmetic) {
        (Mat::Exact(x), Arithmetic::ExactRational) => {
            exact::kernel_basis(x).into_iter().map(Vector::Exact).collect()
        }
        _ => float::kernel_basis(&m.to_float(), mode.tol.eps_rank)
            .into_iter()
            .map(Vector::Float)
            .collect(),
    }
}

/// One solution of `m z = b`; `None` when inconsistent (numerically, in
/// float mode).
pub fn solve(m: &Mat, b: &Vector, mode: &ScalarMode) -> Option<Vector> {
    match (m, b, mode.arithmetic) {
        (Mat::Exact(x), Vector::Exact(v), Arithmetic::ExactRational) => exact::solve(x, v).map(Vector::Exact),
        _ => float::solve(&m.to_float(), &b.to_float(), mode.tol.eps_rank).map(Vector::Float),
    }
}

/// Eigenvalues over the complex numbers (float path).
pub fn eigenvalues(m: &Mat) -> Vec<Complex64> {
    float::eigenvalues(&m.to_float())
}

pub fn spectral_radius(m: &Mat) -> f64 {
    eigenvalues(m).iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Spectral radius with an exactness certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralRadius {
    pub value: f64,
    /// Set when the matrix is exact and `exact` is verified to be an eigenvalue
    /// (`A − exact·I` is singular in exact arithmetic).
    pub exact: Option<Rational>,
}

impl SpectralRadius {
    pub fn is_certified(&self) -> bool {
        self.exact.is_some()
    }
}

pub fn certified_spectral_radius(m: &Mat) -> SpectralRadius {
    let eigs = eigenvalues(m);
    let value = eigs.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    let exact = m.exact().and_then(|x| {
        // A defective Perron root of index k splits into a ring of radius
        // ~eps^{1/k}; the ring's mean is accurate, so it is tried first, and
        // a coarse snap is still safe because candidates are verified exactly.
        let (_, mean) = eigen_cluster(&eigs, value, 1e-3 * value.max(1.0));
        let scale = value.abs().max(1.0);
        [(mean, 1 << 20, 1e-9), (value, 1 << 20, 1e-9), (mean, 1 << 12, 1e-5)]
            .into_iter()
            .find_map(|(x0, den, tol)| {
                let q = snap_rational(x0, den, tol * scale)?;
                (exact_rank(&x.shift(&q)) < x.rows()).then_some(q)
            })
    });
    SpectralRadius { value, exact }
}

/// Snap `approx` to a nearby rational with small denominator and keep it only
/// if it is verified to be an exact eigenvalue of `m`.
pub fn certify_rational_eigenvalue(m: &Matrix<Rational>, approx: f64) -> Option<Rational> {
    let candidate = snap_rational(approx, 1 << 20, 1e-9 * approx.abs().max(1.0))?;
    let shifted = m.shift(&candidate);
    (exact_rank(&shifted) < m.rows()).then_some(candidate)
}

/// Continued-fraction approximation of `x` with denominator at most `max_den`
/// and error below `tol`.
pub fn snap_rational(x: f64, max_den: i64, tol: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut frac = x;
    for _ in 0..64 {
        let a = frac.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > max_den as i128 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let approx = h1 as f64 / k1 as f64;
        if (approx - x).abs() <= tol {
            let p = num_bigint::BigInt::from(h1);
            let q = num_bigint::BigInt::from(k1);
            return Some(Rational::new(p, q));
        }
        let rem = frac - a;
        if rem.abs() < 1e-300 {
            break;
        }
        frac = 1.0 / rem;
    }
    None
}

/// Geometric and algebraic multiplicity of `lambda`.
///
/// In exact mode with an exact matrix, `lambda` is snapped to a rational and
/// verified; the algebraic multiplicity is then `dim Ker (m − λI)^d`.
/// Otherwise eigenvalues within `eps_cluster` of `lambda` are counted.
pub fn multiplicities(m: &Mat, lambda: f64, mode: &ScalarMode) -> MultiplicityPair {
    multiplicities_checked(m, lambda, mode).value
}

pub fn multiplicities_checked(m: &Mat, lambda: f64, mode: &ScalarMode) -> Decision<MultiplicityPair> {
    if let (Mat::Exact(x), Arithmetic::ExactRational) = (m, mode.arithmetic) {
        if let Some(q) = snap_rational(lambda, 1 << 20, 1e-9 * lambda.abs().max(1.0)) {
            return Decision::exact(multiplicities_exact(x, &q));
        }
    }
    float_multiplicities(&m.to_float(), lambda, &mode.tol)
}

pub fn multiplicities_exact(m: &Matrix<Rational>, lambda: &Rational) -> MultiplicityPair {
    let chain = kernel_chain(m, lambda);
    match (chain.first(), chain.last()) {
        (Some(&geometric), Some(&algebraic)) => MultiplicityPair { geometric, algebraic },
        _ => MultiplicityPair::default(),
    }
}

/// `dim Ker (m − λI)^k` for k = 1, 2, … until it stops growing. The sequence
/// is strictly increasing up to the index of `lambda` and constant after, so
/// its last entry is the algebraic multiplicity. Empty if `lambda` is not an
/// eigenvalue.
fn kernel_chain(m: &Matrix<Rational>, lambda: &Rational) -> Vec<usize> {
    let d = m.rows();
    let shifted = m.shift(lambda);
    let mut dims = Vec::new();
    let mut power = shifted.clone();
    loop {
        let k = d - exact_rank(&power);
        if k == 0 || dims.last() == Some(&k) {
            break;
        }
        dims.push(k);
        if k == d {
            break;
        }
        power = power.matmul(&shifted);
    }
    dims
}

/// Size of the largest Jordan block of `lambda`: the smallest `k` with
/// `dim Ker (m − λI)^k` equal to the algebraic multiplicity. Zero if `lambda`
/// is not an eigenvalue.
pub fn jordan_degree_exact(m: &Matrix<Rational>, lambda: &Rational) -> usize {
    kernel_chain(m, lambda).len()
}

fn float_multiplicities(m: &Matrix<f64>, lambda: f64, tol: &Tolerances) -> Decision<MultiplicityPair> {
    let eigs = float::eigenvalues(m);
    let target = Complex64::new(lambda, 0.0);
    let mut marginal = false;
    let mut cluster = Vec::new();
    for z in &eigs {
        let dist = (z - target).norm();
        if dist <= tol.eps_cluster {
            cluster.push(*z);
        }
        if dist > tol.eps_cluster / 10.0 && dist < tol.eps_cluster * 10.0 {
            marginal = true;
        }
    }
    if cluster.is_empty() {
        return Decision { value: MultiplicityPair::default(), marginal };
    }
    let algebraic = cluster.len();
    // The cluster mean is far more accurate than individual members of a
    // defective cluster, so the geometric test is run at the mean.
    let centre = cluster.iter().sum::<Complex64>() / cluster.len() as f64;
    let r = float::rank_scaled(&m.shift(&centre.re), tol.eps_rank, m.frobenius());
    marginal |= r.marginal;
    let mut geometric = m.rows() - r.value;
    if geometric == 0 || geometric > algebraic {
        marginal = true;
        geometric = geometric.clamp(1, algebraic);
    }
    Decision { value: MultiplicityPair { geometric, algebraic }, marginal }
}

/// Eigenvalues of a float matrix within `radius` of `centre`, and their mean.
pub fn eigen_cluster(eigs: &[Complex64], centre: f64, radius: f64) -> (usize, f64) {
    let target = Complex64::new(centre, 0.0);
    let members: Vec<_> = eigs.iter().filter(|z| (*z - target).norm() <= radius).collect();
    if members.is_empty() {
        return (0, centre);
    }
    let mean = members.iter().map(|z| z.re).sum::<f64>() / members.len() as f64;
    (members.len(), mean)
}

pub(crate) use float::{hermitian_eigenvalues, kernel_basis_scaled as float_kernel_basis, rank_scaled as float_rank};
#[cfg(test)]
pub(crate) use float::singular_values;

#[cfg(test)]
mod tests;
