//! Closed convex cones with nonempty interior: membership, interior, dual
//! tests, extremal generators and minimal tensor products.
//!
//! Psd cones live in the real coordinates of an orthonormal Hermitian basis
//! ([`HermBasis`]), so the ambient inner product is the trace inner product
//! and every supported cone except tensor cones is represented in coordinates
//! where its dual is taken with respect to the plain dot product.

mod herm;
mod polyhedral;

use std::sync::Arc;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::linalg::{hermitian_eigenvalues, norm2, Rational, ScalarMode, Vector};

pub use herm::{superoperator, trace_product, HermBasis};
pub use polyhedral::{PolyCone, PolyError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConeError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cone dimension must be at least 1")]
    ZeroDimension,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid unit element: {0}")]
    InvalidUnit(String),
    #[error(transparent)]
    Polyhedral(#[from] PolyError),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConeSpec {
    Orthant(usize),
    Psd(Arc<HermBasis>),
    Polyhedral(Arc<PolyCone>),
    Tensor(Arc<TensorCone>),
}

/// Minimal tensor cone: the conic hull of products `a ⊗ b`.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorCone {
    pub left: ConeSpec,
    pub right: ConeSpec,
    /// Generated by products of operand extremals when both operands are
    /// finitely generated.
    finite: Option<PolyCone>,
}

impl ConeSpec {
    pub fn orthant(d: usize) -> Result<Self, ConeError> {
        if d == 0 {
            return Err(ConeError::ZeroDimension);
        }
        Ok(ConeSpec::Orthant(d))
    }

    pub fn psd(h: usize) -> Result<Self, ConeError> {
        if h == 0 {
            return Err(ConeError::ZeroDimension);
        }
        Ok(ConeSpec::Psd(Arc::new(HermBasis::new(h))))
    }

    pub fn polyhedral(generators: Vec<Vec<Rational>>) -> Result<Self, ConeError> {
        Ok(ConeSpec::Polyhedral(Arc::new(PolyCone::new(generators)?)))
    }

    pub fn polyhedral_f64(generators: &[Vec<f64>]) -> Result<Self, ConeError> {
        Ok(ConeSpec::Polyhedral(Arc::new(PolyCone::from_f64(generators)?)))
    }

    /// Psd operands are accepted, but then only product-vector interior
    /// queries are available (general separability is not decided).
    pub fn tensor(left: ConeSpec, right: ConeSpec) -> Result<Self, ConeError> {
        let finite = match (left.extremal_generators(), right.extremal_generators()) {
            (Ok(a), Ok(b)) => {
                let gens = a
                    .iter()
                    .flat_map(|x| b.iter().map(move |y| x.kron(y)))
                    .map(|v| v.to_exact().expect("extremals are exact"))
                    .collect();
                Some(PolyCone::new(gens)?)
            }
            _ => None,
        };
        Ok(ConeSpec::Tensor(Arc::new(TensorCone { left, right, finite })))
    }

    pub fn dim(&self) -> usize {
        match self {
            ConeSpec::Orthant(d) => *d,
            ConeSpec::Psd(b) => b.dim(),
            ConeSpec::Polyhedral(p) => p.dim(),
            ConeSpec::Tensor(t) => t.left.dim() * t.right.dim(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ConeSpec::Orthant(_) => "orthant",
            ConeSpec::Psd(_) => "psd",
            ConeSpec::Polyhedral(_) => "polyhedral",
            ConeSpec::Tensor(_) => "tensor",
        }
    }

    pub fn herm_basis(&self) -> Option<&HermBasis> {
        match self {
            ConeSpec::Psd(b) => Some(b),
            _ => None,
        }
    }

    /// The finitely generated representation, if any: polyhedral cones and
    /// tensor cones of finitely generated operands.
    pub fn finite(&self) -> Option<&PolyCone> {
        match self {
            ConeSpec::Polyhedral(p) => Some(p),
            ConeSpec::Tensor(t) => t.finite.as_ref(),
            _ => None,
        }
    }

    pub fn is_self_dual(&self) -> bool {
        matches!(self, ConeSpec::Orthant(_) | ConeSpec::Psd(_))
    }

    fn check(&self, x: &Vector) -> Result<(), ConeError> {
        if x.len() != self.dim() {
            return Err(ConeError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    fn unsupported_tensor(&self, what: &str) -> ConeError {
        ConeError::Unsupported(format!("{what} for a tensor cone with a psd operand (separability is not decided)"))
    }

    pub fn contains(&self, x: &Vector, mode: &ScalarMode) -> Result<bool, ConeError> {
        self.check(x)?;
        Ok(match self {
            ConeSpec::Orthant(_) => orthant_test(x, mode, false),
            ConeSpec::Psd(b) => psd_test(b, x, mode, false),
            ConeSpec::Polyhedral(p) => p.contains(x, mode),
            ConeSpec::Tensor(t) => t.finite.as_ref().ok_or_else(|| self.unsupported_tensor("membership"))?.contains(x, mode),
        })
    }

    pub fn interior_contains(&self, x: &Vector, mode: &ScalarMode) -> Result<bool, ConeError> {
        self.check(x)?;
        Ok(match self {
            ConeSpec::Orthant(_) => orthant_test(x, mode, true),
            ConeSpec::Psd(b) => psd_test(b, x, mode, true),
            ConeSpec::Polyhedral(p) => p.interior_contains(x, mode),
            ConeSpec::Tensor(t) => {
                t.finite.as_ref().ok_or_else(|| self.unsupported_tensor("interior membership"))?.interior_contains(x, mode)
            }
        })
    }

    /// Interior test for a product vector `a ⊗ b`: it is interior exactly when
    /// both factors are. Works for every tensor cone, including psd operands.
    pub fn interior_contains_product(&self, a: &Vector, b: &Vector, mode: &ScalarMode) -> Result<bool, ConeError> {
        let ConeSpec::Tensor(t) = self else {
            return self.interior_contains(&a.kron(b), mode);
        };
        Ok(t.left.interior_contains(a, mode)? && t.right.interior_contains(b, mode)?)
    }

    pub fn dual_contains(&self, y: &Vector, mode: &ScalarMode) -> Result<bool, ConeError> {
        self.check(y)?;
        Ok(match self {
            ConeSpec::Orthant(_) => orthant_test(y, mode, false),
            ConeSpec::Psd(b) => psd_test(b, y, mode, false),
            ConeSpec::Polyhedral(p) => p.dual_contains(y, mode),
            ConeSpec::Tensor(t) => {
                t.finite.as_ref().ok_or_else(|| self.unsupported_tensor("dual membership"))?.dual_contains(y, mode)
            }
        })
    }

    /// `y ∈ (K*)°`: strictly positive on every nonzero element of K.
    pub fn interior_dual_contains(&self, y: &Vector, mode: &ScalarMode) -> Result<bool, ConeError> {
        self.check(y)?;
        Ok(match self {
            ConeSpec::Orthant(_) => orthant_test(y, mode, true),
            ConeSpec::Psd(b) => psd_test(b, y, mode, true),
            ConeSpec::Polyhedral(p) => p.interior_dual_contains(y, mode),
            ConeSpec::Tensor(t) => t
                .finite
                .as_ref()
                .ok_or_else(|| self.unsupported_tensor("dual interior membership"))?
                .interior_dual_contains(y, mode),
        })
    }

    /// Sufficient test for `u ⊗ v ∈ (K₁ ⊗ K₂)*°`: both factors dual-interior.
    pub fn interior_dual_contains_product(&self, u: &Vector, v: &Vector, mode: &ScalarMode) -> Result<bool, ConeError> {
        let ConeSpec::Tensor(t) = self else {
            return self.interior_dual_contains(&u.kron(v), mode);
        };
        Ok(t.left.interior_dual_contains(u, mode)? && t.right.interior_dual_contains(v, mode)?)
    }

    /// Extremal rays as exact vectors. Psd cones have a continuum of them.
    pub fn extremal_generators(&self) -> Result<Vec<Vector>, ConeError> {
        match self {
            ConeSpec::Orthant(d) => Ok(standard_basis(*d)),
            ConeSpec::Psd(_) => Err(ConeError::Unsupported("extremal rays of a psd cone form a continuum".into())),
            ConeSpec::Polyhedral(p) => Ok(p.extremals().iter().cloned().map(Vector::Exact).collect()),
            ConeSpec::Tensor(t) => match &t.finite {
                Some(p) => Ok(p.extremals().iter().cloned().map(Vector::Exact).collect()),
                None => Err(self.unsupported_tensor("extremal generators")),
            },
        }
    }

    /// Extremal rays of the dual cone.
    pub fn dual_extremal_generators(&self) -> Result<Vec<Vector>, ConeError> {
        match self {
            ConeSpec::Orthant(d) => Ok(standard_basis(*d)),
            ConeSpec::Psd(_) => Err(ConeError::Unsupported("extremal rays of a psd cone form a continuum".into())),
            _ => match self.finite() {
                Some(p) => Ok(p.dual_extremals().iter().cloned().map(Vector::Exact).collect()),
                None => Err(self.unsupported_tensor("dual extremal generators")),
            },
        }
    }

    /// The dual cone as a cone in its own right.
    pub fn dual(&self) -> Result<ConeSpec, ConeError> {
        match self {
            ConeSpec::Orthant(_) | ConeSpec::Psd(_) => Ok(self.clone()),
            _ => match self.finite() {
                Some(p) => ConeSpec::polyhedral(p.dual_extremals().to_vec()),
                None => Err(self.unsupported_tensor("the dual cone")),
            },
        }
    }

    /// Orthant: all ones. Psd: the identity. Polyhedral: the sum of the dual
    /// extremal rays. Tensor: the product of the operand defaults.
    pub fn default_unit(&self) -> Vector {
        match self {
            ConeSpec::Orthant(d) => Vector::Exact(vec![Rational::from_integer(1.into()); *d]),
            ConeSpec::Psd(b) => Vector::Float(b.identity_coords()),
            ConeSpec::Polyhedral(p) => {
                let mut s = vec![Rational::zero(); p.dim()];
                for y in p.dual_extremals() {
                    for (a, b) in s.iter_mut().zip(y) {
                        *a += b;
                    }
                }
                Vector::Exact(s)
            }
            ConeSpec::Tensor(t) => t.left.default_unit().kron(&t.right.default_unit()),
        }
    }
}

fn standard_basis(d: usize) -> Vec<Vector> {
    (0..d)
        .map(|i| Vector::Exact((0..d).map(|j| Rational::from_integer(((i == j) as i64).into())).collect()))
        .collect()
}

fn orthant_test(x: &Vector, mode: &ScalarMode, strict: bool) -> bool {
    if let (true, Some(xe)) = (mode.is_exact(), x.exact()) {
        return xe.iter().all(|v| if strict { v.is_positive() } else { !v.is_negative() });
    }
    let xf = x.to_float();
    let margin = mode.tol.eps_interior * norm2(&xf);
    xf.iter().all(|&v| if strict { v > margin } else { v >= -margin })
}

/// Minimum eigenvalue of `mat(x)` against `±eps_interior·‖x‖`. Always in
/// floating point: the basis itself carries irrational scale factors.
fn psd_test(basis: &HermBasis, x: &Vector, mode: &ScalarMode, strict: bool) -> bool {
    let xf = x.to_float();
    let margin = mode.tol.eps_interior * norm2(&xf);
    let min = hermitian_eigenvalues(&basis.mat(&xf))[0];
    if strict {
        min > margin
    } else {
        min >= -margin
    }
}

/// A unit element `u ∈ (K*)°`, which fixes the normalization `⟨u, x⟩ = 1`
/// of states.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitElement(Vector);

impl UnitElement {
    pub fn new(cone: &ConeSpec, u: Vector, mode: &ScalarMode) -> Result<Self, ConeError> {
        if !cone.interior_dual_contains(&u, mode)? {
            return Err(ConeError::InvalidUnit("not in the interior of the dual cone".into()));
        }
        Ok(UnitElement(u))
    }

    pub fn default_for(cone: &ConeSpec) -> Self {
        UnitElement(cone.default_unit())
    }

    pub fn vector(&self) -> &Vector {
        &self.0
    }
}
