//! Linear maps on a cone's ambient space, with a unit element and a record
//! of where the matrix came from.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cones::{superoperator, ConeError, ConeSpec, HermBasis, UnitElement};
use crate::linalg::{hermitian_eigenvalues, Mat, Rational, ScalarMode, Vector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("map matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: cone has dimension {cone}, matrix has {matrix}")]
    DimensionMismatch { cone: usize, matrix: usize },
    #[error("NegativeEntry: entry ({row}, {col}) is negative")]
    NegativeEntry { row: usize, col: usize },
    #[error("ColumnSumViolation: column {col} sums to {sum}, expected 1")]
    ColumnSumViolation { col: usize, sum: String },
    #[error("a channel needs at least one Kraus operator")]
    NoKrausOperators,
    #[error("Kraus operator {index} is {rows}x{cols}, expected {h}x{h}")]
    KrausShape { index: usize, rows: usize, cols: usize, h: usize },
    #[error(transparent)]
    Cone(#[from] ConeError),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    Raw,
    Stochastic,
    /// `independent` is the number of linearly independent Kraus operators.
    Kraus { ops: Vec<DMatrix<Complex64>>, independent: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DynMap {
    m: Mat,
    cone: ConeSpec,
    unit: UnitElement,
    provenance: Provenance,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Positivity {
    Yes,
    No,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivityVerdict {
    pub value: Positivity,
    pub certificate: String,
}

impl PositivityVerdict {
    fn new(value: Positivity, certificate: impl Into<String>) -> Self {
        PositivityVerdict { value, certificate: certificate.into() }
    }
}

/// Sampling used when a psd map is not completely positive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PositivityOptions {
    pub samples: usize,
    pub seed: u64,
}

impl Default for PositivityOptions {
    fn default() -> Self {
        PositivityOptions { samples: 512, seed: 0x00c0_ffee }
    }
}

impl DynMap {
    /// A map with an explicit or default unit. The unit is validated.
    pub fn new(m: Mat, cone: ConeSpec, unit: Option<Vector>, mode: &ScalarMode) -> Result<Self, MapError> {
        if !m.is_square() {
            return Err(MapError::NotSquare { rows: m.rows(), cols: m.cols() });
        }
        if m.rows() != cone.dim() {
            return Err(MapError::DimensionMismatch { cone: cone.dim(), matrix: m.rows() });
        }
        let unit = match unit {
            Some(u) => UnitElement::new(&cone, u, mode)?,
            None => UnitElement::default_for(&cone),
        };
        Ok(DynMap { m, cone, unit, provenance: Provenance::Raw })
    }

    /// Column-stochastic matrix on the orthant. Exact matrices are checked
    /// exactly; float column sums must be within 1e-12 of 1.
    pub fn from_stochastic(w: Mat) -> Result<Self, MapError> {
        if !w.is_square() {
            return Err(MapError::NotSquare { rows: w.rows(), cols: w.cols() });
        }
        let d = w.rows();
        for j in 0..d {
            for i in 0..d {
                if w.entry_sign(i, j) == Ordering::Less {
                    return Err(MapError::NegativeEntry { row: i, col: j });
                }
            }
        }
        for j in 0..d {
            match &w {
                Mat::Exact(x) => {
                    let s = (0..d).fold(Rational::zero(), |acc, i| acc + &x[(i, j)]);
                    if !s.is_one() {
                        return Err(MapError::ColumnSumViolation { col: j, sum: s.to_string() });
                    }
                }
                Mat::Float(x) => {
                    let s: f64 = (0..d).map(|i| x[(i, j)]).sum();
                    if (s - 1.0).abs() > 1e-12 {
                        return Err(MapError::ColumnSumViolation { col: j, sum: format!("{s}") });
                    }
                }
            }
        }
        let cone = ConeSpec::orthant(d)?;
        let unit = UnitElement::default_for(&cone);
        Ok(DynMap { m: w, cone, unit, provenance: Provenance::Stochastic })
    }

    /// Superoperator of `ρ ↦ Σ Kᵢ ρ Kᵢ†` in Hermitian-basis coordinates.
    pub fn from_kraus(ops: Vec<DMatrix<Complex64>>) -> Result<Self, MapError> {
        let h = ops.first().ok_or(MapError::NoKrausOperators)?.nrows();
        for (index, k) in ops.iter().enumerate() {
            if k.nrows() != h || k.ncols() != h {
                return Err(MapError::KrausShape { index, rows: k.nrows(), cols: k.ncols(), h });
            }
        }
        let cone = ConeSpec::psd(h)?;
        let basis = cone.herm_basis().expect("psd cone");
        let rows = superoperator(basis, |rho| {
            ops.iter().fold(DMatrix::zeros(h, h), |acc, k| acc + k * rho * k.adjoint())
        });
        let m = Mat::from_f64_rows(rows).expect("superoperator is square and finite");
        let independent = independent_count(&ops);
        let unit = UnitElement::default_for(&cone);
        Ok(DynMap { m, cone, unit, provenance: Provenance::Kraus { ops, independent } })
    }

    pub fn matrix(&self) -> &Mat {
        &self.m
    }

    pub fn cone(&self) -> &ConeSpec {
        &self.cone
    }

    pub fn unit(&self) -> &UnitElement {
        &self.unit
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn dim(&self) -> usize {
        self.m.rows()
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        self.m.mul_vec(x)
    }

    /// Replaces the unit, validating it against the cone.
    pub fn with_unit(mut self, u: Vector, mode: &ScalarMode) -> Result<Self, MapError> {
        if u.len() != self.cone.dim() {
            return Err(ConeError::DimensionMismatch { expected: self.cone.dim(), got: u.len() }.into());
        }
        self.unit = UnitElement::new(&self.cone, u, mode)?;
        Ok(self)
    }

    /// Transpose acting on the dual cone. Self-dual cones are kept; otherwise
    /// the dual cone is built explicitly and its default unit is used.
    pub fn adjoint(&self) -> Result<DynMap, MapError> {
        let cone = self.cone.dual()?;
        let unit = if self.cone.is_self_dual() { self.unit.clone() } else { UnitElement::default_for(&cone) };
        Ok(DynMap { m: self.m.transpose(), cone, unit, provenance: Provenance::Raw })
    }

    /// `A* u = u`, exactly when everything is rational.
    pub fn is_dup(&self, mode: &ScalarMode) -> bool {
        let u = self.unit.vector();
        let image = self.m.transpose().mul_vec(u);
        if let (true, Some(a), Some(b)) = (mode.is_exact(), image.exact(), u.exact()) {
            return a == b;
        }
        let (a, b) = (image.to_float(), u.to_float());
        let scale = 1.0 + self.m.to_float().max_abs();
        let tol = 1e-12 * scale * (1.0 + crate::linalg::norm2(&b));
        a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= tol)
    }

    pub fn is_positive(&self) -> PositivityVerdict {
        self.is_positive_with(&PositivityOptions::default())
    }

    pub fn is_positive_with(&self, opts: &PositivityOptions) -> PositivityVerdict {
        match &self.cone {
            ConeSpec::Orthant(_) => self.orthant_positivity(),
            ConeSpec::Psd(basis) => self.psd_positivity(basis, opts),
            _ => match self.cone.extremal_generators() {
                Ok(gens) => self.generator_positivity(&gens),
                Err(e) => PositivityVerdict::new(Positivity::Unknown, e.to_string()),
            },
        }
    }

    fn orthant_positivity(&self) -> PositivityVerdict {
        let d = self.dim();
        let margin = ScalarMode::float().tol.eps_interior * self.m.to_float().max_abs();
        for i in 0..d {
            for j in 0..d {
                let negative = match &self.m {
                    Mat::Exact(_) => self.m.entry_sign(i, j) == Ordering::Less,
                    Mat::Float(x) => x[(i, j)] < -margin,
                };
                if negative {
                    return PositivityVerdict::new(Positivity::No, format!("negative entry ({i}, {j})"));
                }
            }
        }
        PositivityVerdict::new(Positivity::Yes, "all entries nonnegative")
    }

    fn generator_positivity(&self, gens: &[Vector]) -> PositivityVerdict {
        let mode = if self.m.is_exact() { ScalarMode::exact() } else { ScalarMode::float() };
        for (k, g) in gens.iter().enumerate() {
            match self.cone.contains(&self.apply(g), &mode) {
                Ok(true) => {}
                Ok(false) => {
                    return PositivityVerdict::new(Positivity::No, format!("image of extremal generator {k} leaves the cone"))
                }
                Err(e) => return PositivityVerdict::new(Positivity::Unknown, e.to_string()),
            }
        }
        PositivityVerdict::new(Positivity::Yes, format!("all {} extremal generators map into the cone", gens.len()))
    }

    /// Image of an arbitrary complex matrix under the linear extension of the map.
    fn apply_matrix(&self, basis: &HermBasis, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let h = basis.hdim();
        let coords: Vec<Complex64> = basis.elements().iter().map(|b| crate::cones::trace_product(b, x)).collect();
        let m = self.m.to_float();
        let mut out = DMatrix::zeros(h, h);
        for (i, b) in basis.elements().iter().enumerate() {
            let c: Complex64 = (0..coords.len()).map(|j| coords[j] * m[(i, j)]).sum();
            out += b * c;
        }
        out
    }

    fn psd_positivity(&self, basis: &HermBasis, opts: &PositivityOptions) -> PositivityVerdict {
        let h = basis.hdim();
        let mut choi = DMatrix::<Complex64>::zeros(h * h, h * h);
        for i in 0..h {
            for j in 0..h {
                let mut e = DMatrix::zeros(h, h);
                e[(i, j)] = Complex64::one();
                let img = self.apply_matrix(basis, &e);
                for a in 0..h {
                    for b in 0..h {
                        choi[(i * h + a, j * h + b)] = img[(a, b)];
                    }
                }
            }
        }
        let scale = choi.norm().max(1e-300);
        let min_choi = hermitian_eigenvalues(&choi)[0];
        if min_choi >= -1e-10 * scale {
            return PositivityVerdict::new(Positivity::Yes, format!("choi matrix is positive semidefinite (min eigenvalue {min_choi:.3e})"));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for s in 0..opts.samples {
            let psi: Vec<Complex64> = (0..h)
                .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
                .collect();
            let n = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let psi = DMatrix::from_fn(h, 1, |i, _| psi[i] / n);
            let rho = &psi * psi.adjoint();
            let out = self.apply_matrix(basis, &rho);
            let out = (&out + out.adjoint()) * Complex64::new(0.5, 0.0);
            let min = hermitian_eigenvalues(&out)[0];
            if min < -1e-9 * out.norm().max(1.0) {
                return PositivityVerdict::new(
                    Positivity::No,
                    format!("sampled pure state {s} maps to a matrix with eigenvalue {min:.6e}"),
                );
            }
        }
        PositivityVerdict::new(
            Positivity::Unknown,
            format!(
                "choi matrix has eigenvalue {min_choi:.6e} but no violation among {} sampled pure states: \
                 positive but not completely positive",
                opts.samples
            ),
        )
    }
}

/// Number of linearly independent operators (complex rank of their stacked
/// entries, relative cutoff 1e-10).
fn independent_count(ops: &[DMatrix<Complex64>]) -> usize {
    let h2 = ops[0].len();
    let stacked = DMatrix::from_fn(h2, ops.len(), |i, j| ops[j][i]);
    let sv = stacked.svd(false, false).singular_values;
    let max = sv.iter().fold(0.0f64, |a, &b| a.max(b));
    sv.iter().filter(|&&v| v > 1e-10 * max).count()
}

#[cfg(test)]
mod tests;
