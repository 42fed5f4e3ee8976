//! Trajectories of normalized dynamics: Cesàro averages, powers and the
//! decoupling distance of bipartite maps, plus u-norms and reduced states.
//!
//! All trajectories run in float arithmetic, normalized by the float spectral
//! radius. Trajectory verdicts are advisory; the classify verdicts are the
//! authoritative answers. Where the limit converges too slowly for the window
//! test (Jordan blocks give `1/n` rates), [`asymptotic_limit`] computes it
//! directly from the generalized Perron eigenspace.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cones::{ConeError, ConeSpec, UnitElement};
use crate::linalg::{
    certified_spectral_radius, dot, eigenvalues, kron_vec, norm2, simplex, solve, Mat, Rational, ScalarMode, Vector,
};
use crate::maps::DynMap;

/// Consecutive small steps required for convergence.
pub const WINDOW: usize = 10;
/// Successive-difference tolerance for convergence.
pub const STEP_TOL: f64 = 1e-10;
/// Decoupling distance below which a step counts as decoupled.
pub const DECOUPLING_TOL: f64 = 1e-6;
/// Iterate norm treated as divergence.
pub const NORM_CEILING: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("ZeroSpectralRadius: the map is nilpotent")]
    ZeroSpectralRadius,
    #[error("NormalizationVanished: ⟨u, Aⁿx⟩ vanished at step {step}")]
    NormalizationVanished { step: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("InitNotInCone: the initial vector is not in the cone")]
    InitNotInCone,
    #[error(transparent)]
    Cone(#[from] ConeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryMode {
    Cesaro,
    Power,
    Decoupling,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum TrajectoryVerdict {
    /// `limit` is the final iterate; `at_step` opens the window of small steps.
    /// Cesàro averages approach their limit like 1/n, so after n steps `limit`
    /// can still be about n·tol away; `asymptotic` on the record is exact.
    Converged { limit: Vec<f64>, at_step: usize },
    /// Norm increase per step over the final window.
    Diverged { growth_estimate: f64 },
    Undecided,
}

impl fmt::Display for TrajectoryVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrajectoryVerdict::Converged { at_step, .. } => write!(f, "Converged at step {at_step}"),
            TrajectoryVerdict::Diverged { growth_estimate } => write!(f, "Diverged (growth {growth_estimate:.6e} per step)"),
            TrajectoryVerdict::Undecided => write!(f, "Undecided"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub mode: TrajectoryMode,
    /// Step index of `iterates[0]`: 1 for Cesàro averages, 0 otherwise.
    pub first_step: usize,
    /// d-vectors, or one-element distance vectors in decoupling mode.
    pub iterates: Vec<Vec<f64>>,
    pub verdict: TrajectoryVerdict,
    /// Last normalized state `ξₙ` (decoupling mode only).
    pub final_state: Option<Vec<f64>>,
    /// Limit computed from the generalized Perron eigenspace, when it exists.
    pub asymptotic: Option<Vec<f64>>,
}

impl TrajectoryRecord {
    pub fn last_step(&self) -> usize {
        self.first_step + self.iterates.len() - 1
    }
}

/// Verdict from the iterates so far, or `None` to keep iterating. With
/// `bounded` set (the normalized powers are known not to grow), only the norm
/// ceiling can declare divergence: transients may grow for a while.
fn judge(iterates: &[Vec<f64>], first_step: usize, tol: f64, bounded: bool) -> Option<TrajectoryVerdict> {
    let n = iterates.len();
    let last = iterates.last()?;
    if last.iter().any(|v| !v.is_finite()) || norm2(last) > NORM_CEILING {
        return Some(TrajectoryVerdict::Diverged { growth_estimate: f64::INFINITY });
    }
    if n <= WINDOW {
        return None;
    }
    let diff = |k: usize| norm2(&iterates[k].iter().zip(&iterates[k - 1]).map(|(a, b)| a - b).collect::<Vec<_>>());
    if (n - WINDOW..n).all(|k| diff(k) < tol) {
        // Earliest start of the current run of small steps.
        let mut start = n - WINDOW;
        while start > 1 && diff(start - 1) < tol {
            start -= 1;
        }
        return Some(TrajectoryVerdict::Converged { limit: last.clone(), at_step: first_step + start - 1 });
    }
    if bounded {
        return None;
    }
    let norms: Vec<f64> = iterates[n - WINDOW - 1..].iter().map(|v| norm2(v)).collect();
    let inc: Vec<f64> = norms.windows(2).map(|w| w[1] - w[0]).collect();
    let growing = inc.iter().all(|&d| d > tol) && inc.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-9));
    growing.then(|| TrajectoryVerdict::Diverged { growth_estimate: (norms[WINDOW] - norms[0]) / WINDOW as f64 })
}

fn check_dim(a: &DynMap, x: &Vector) -> Result<(), DynamicsError> {
    if x.len() != a.dim() {
        return Err(DynamicsError::DimensionMismatch { expected: a.dim(), got: x.len() });
    }
    Ok(())
}

/// Float matrix divided by its float spectral radius.
fn normalized(a: &DynMap) -> Result<(Vec<Vec<f64>>, f64), DynamicsError> {
    let r = crate::linalg::spectral_radius(a.matrix());
    let scale = a.matrix().to_float().max_abs();
    if !(r > 1e-12 * scale.max(f64::MIN_POSITIVE)) {
        return Err(DynamicsError::ZeroSpectralRadius);
    }
    Ok((a.matrix().to_float().scale(&(1.0 / r)).row_vecs(), r))
}

fn apply(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, x)).collect()
}

/// Running averages `(1/n) Σ_{k<n} (A/r)ᵏ x` for `n = 1 … n_max`.
pub fn cesaro_trajectory(a: &DynMap, x: &Vector, n_max: usize) -> Result<TrajectoryRecord, DynamicsError> {
    check_dim(a, x)?;
    let (m, _) = normalized(a)?;
    let asymptotic = asymptotic_limit(a, x);
    let bounded = asymptotic.as_ref().is_some_and(|l| l.growth_degree == 0);
    let mut power = x.to_float();
    let mut sum = vec![0.0; power.len()];
    let mut iterates = Vec::new();
    let mut verdict = TrajectoryVerdict::Undecided;
    for n in 1..=n_max.max(1) {
        for (s, p) in sum.iter_mut().zip(&power) {
            *s += p;
        }
        iterates.push(sum.iter().map(|s| s / n as f64).collect());
        if let Some(v) = judge(&iterates, 1, STEP_TOL, bounded) {
            verdict = v;
            break;
        }
        power = apply(&m, &power);
    }
    let asymptotic = asymptotic.filter(|l| l.growth_degree == 0 && l.peripheral_simple).map(|l| l.leading);
    Ok(TrajectoryRecord { mode: TrajectoryMode::Cesaro, first_step: 1, iterates, verdict, final_state: None, asymptotic })
}

/// Iterates `(A/r)ⁿ x` for `n = 0 … n_max`.
pub fn power_trajectory(a: &DynMap, x: &Vector, n_max: usize) -> Result<TrajectoryRecord, DynamicsError> {
    check_dim(a, x)?;
    let (m, _) = normalized(a)?;
    let asymptotic = asymptotic_limit(a, x);
    let bounded = asymptotic.as_ref().is_some_and(|l| l.growth_degree == 0);
    let mut iterates = vec![x.to_float()];
    let mut verdict = TrajectoryVerdict::Undecided;
    for _ in 0..n_max {
        let next = apply(&m, iterates.last().expect("nonempty"));
        iterates.push(next);
        if let Some(v) = judge(&iterates, 0, STEP_TOL, bounded) {
            verdict = v;
            break;
        }
    }
    let asymptotic = asymptotic.filter(|l| l.growth_degree == 0 && l.dominant).map(|l| l.leading);
    Ok(TrajectoryRecord { mode: TrajectoryMode::Power, first_step: 0, iterates, verdict, final_state: None, asymptotic })
}

/// Leading behaviour of `(A/r)ⁿ x`.
#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticLimit {
    /// Largest `j` with `(A − rI)ʲ g ≠ 0`, where `g` is the component of `x`
    /// in the generalized eigenspace of `r`; `(A/r)ⁿ x` grows like `nʲ`.
    pub growth_degree: usize,
    /// `(A − rI)ʲ g`, the direction `(A/r)ⁿ x` approaches. Equal to the limit
    /// of the powers when `j = 0` and `r` is strictly dominant.
    pub leading: Vec<f64>,
    /// Every other eigenvalue has modulus below `r`.
    pub dominant: bool,
    /// Every other peripheral eigenvalue is simple, so Cesàro averages
    /// converge when `j = 0`.
    pub peripheral_simple: bool,
}

/// Splits `x = g + h` with `g ∈ Ker Nᵈ` and `h ∈ Ran Nᵈ` (`N = A − rI`) by
/// solving `N²ᵈ z = Nᵈ x`, then follows `g` up its Jordan chain. Exact when
/// the matrix and `r` are rational; float otherwise. When `g = 0` the leading
/// term is the zero vector.
pub fn asymptotic_limit(a: &DynMap, x: &Vector) -> Option<AsymptoticLimit> {
    let d = a.dim();
    let sr = certified_spectral_radius(a.matrix());
    if sr.value <= 0.0 {
        return None;
    }
    let (n, x, mode) = match (a.matrix(), &sr.exact, x.to_exact()) {
        (Mat::Exact(m), Some(q), Some(xe)) => (Mat::Exact(m.shift(q)), Vector::Exact(xe), ScalarMode::exact()),
        _ => {
            let m = a.matrix().to_float().scale(&(1.0 / sr.value));
            (Mat::Float(m.shift(&1.0)), Vector::Float(x.to_float()), ScalarMode::float())
        }
    };
    let nd = crate::linalg::mat_power(&n, d as u64);
    let n2d = nd.matmul(&nd);
    let z = solve(&n2d, &nd.mul_vec(&x), &mode)?;
    let h = nd.mul_vec(&z);
    let g = sub(&x, &h);
    let scale = x.norm().max(f64::MIN_POSITIVE);
    let vanishes = |v: &Vector| match v {
        Vector::Exact(e) => e.iter().all(num_traits::Zero::is_zero),
        Vector::Float(f) => norm2(f) <= 1e-9 * scale,
    };
    let mut leading = g;
    let mut degree = 0;
    while !vanishes(&leading) {
        let next = n.mul_vec(&leading);
        if vanishes(&next) || degree == d {
            break;
        }
        leading = next;
        degree += 1;
    }
    let eigs = eigenvalues(&Mat::Float(a.matrix().to_float().scale(&(1.0 / sr.value))));
    let eps = mode.tol.eps_cluster;
    let one = Complex64::new(1.0, 0.0);
    let peripheral: Vec<Complex64> = eigs.iter().copied().filter(|z| (z - one).norm() > eps && z.norm() >= 1.0 - eps).collect();
    let peripheral_simple = peripheral.iter().all(|z| peripheral.iter().filter(|w| (*w - z).norm() <= eps).count() == 1);
    // (A/r)ⁿ applies `rʲ`-scaled powers of N, so rescale the float leading term.
    let leading = match &leading {
        Vector::Exact(_) => {
            let r = sr.value.powi(degree as i32);
            leading.to_float().iter().map(|v| v / r).collect()
        }
        Vector::Float(f) => f.clone(),
    };
    Some(AsymptoticLimit { growth_degree: degree, leading, dominant: peripheral.is_empty(), peripheral_simple })
}

fn sub(a: &Vector, b: &Vector) -> Vector {
    match (a, b) {
        (Vector::Exact(x), Vector::Exact(y)) => Vector::Exact(x.iter().zip(y).map(|(p, q)| p - q).collect()),
        _ => Vector::Float(a.to_float().iter().zip(b.to_float()).map(|(p, q)| p - q).collect()),
    }
}

/// Operand cones and units of a bipartite system on `K₁ ⊗ K₂`.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteLayout {
    pub left: ConeSpec,
    pub right: ConeSpec,
    pub u1: UnitElement,
    pub u2: UnitElement,
    pub tensor: ConeSpec,
}

impl BipartiteLayout {
    /// Units default per operand cone; explicit units must lie in the interior
    /// of the operand dual cones.
    pub fn new(
        left: ConeSpec,
        right: ConeSpec,
        u1: Option<Vector>,
        u2: Option<Vector>,
        mode: &ScalarMode,
    ) -> Result<Self, DynamicsError> {
        let unit = |k: &ConeSpec, u: Option<Vector>| match u {
            Some(v) if v.len() != k.dim() => Err(DynamicsError::DimensionMismatch { expected: k.dim(), got: v.len() }),
            Some(v) => UnitElement::new(k, v, mode).map_err(DynamicsError::from),
            None => Ok(UnitElement::default_for(k)),
        };
        let u1 = unit(&left, u1)?;
        let u2 = unit(&right, u2)?;
        let tensor = ConeSpec::tensor(left.clone(), right.clone())?;
        Ok(BipartiteLayout { left, right, u1, u2, tensor })
    }

    pub fn d1(&self) -> usize {
        self.left.dim()
    }

    pub fn d2(&self) -> usize {
        self.right.dim()
    }

    pub fn dim(&self) -> usize {
        self.d1() * self.d2()
    }

    /// `u¹ ⊗ u²`.
    pub fn unit(&self) -> Vec<f64> {
        kron_vec(&self.u1.vector().to_float(), &self.u2.vector().to_float())
    }
}

/// Reduced states `π₁(x) = Σ_j x_{ij} u²_j` and `π₂(x) = Σ_i u¹_i x_{ij}`,
/// with `x_{ij}` the coefficient of `e_i ⊗ e_j`.
pub fn reduced_states(x: &[f64], layout: &BipartiteLayout) -> Result<(Vec<f64>, Vec<f64>), DynamicsError> {
    let (d1, d2) = (layout.d1(), layout.d2());
    if x.len() != d1 * d2 {
        return Err(DynamicsError::DimensionMismatch { expected: d1 * d2, got: x.len() });
    }
    let u1 = layout.u1.vector().to_float();
    let u2 = layout.u2.vector().to_float();
    let p1 = (0..d1).map(|i| dot(&x[i * d2..(i + 1) * d2], &u2)).collect();
    let p2 = (0..d2).map(|j| (0..d1).map(|i| u1[i] * x[i * d2 + j]).sum()).collect();
    Ok((p1, p2))
}

/// `‖x‖_u = max { |⟨y, x⟩| : −u ≤ y ≤ u in the order of K* }`.
///
/// Orthant: `Σ uᵢ|xᵢ|`. Psd: trace norm of `U^{1/2} X U^{1/2}`. Finitely
/// generated cones: linear program over `|⟨g, y⟩| ≤ ⟨g, u⟩` for the extremal
/// rays `g` of K, exact when `x` and `u` are exact.
pub fn u_norm(x: &Vector, u: &UnitElement, cone: &ConeSpec) -> Result<f64, DynamicsError> {
    let d = cone.dim();
    if x.len() != d {
        return Err(DynamicsError::DimensionMismatch { expected: d, got: x.len() });
    }
    let uv = u.vector();
    if uv.len() != d {
        return Err(ConeError::InvalidUnit(format!("unit has dimension {}, cone {d}", uv.len())).into());
    }
    match cone {
        ConeSpec::Orthant(_) => Ok(x.to_float().iter().zip(uv.to_float()).map(|(a, b)| a.abs() * b).sum()),
        ConeSpec::Psd(basis) => {
            let root = psd_sqrt(&basis.mat(&uv.to_float()));
            let y = &root * basis.mat(&x.to_float()) * &root;
            let eig = SymmetricEigen::new((&y + y.adjoint()) * Complex64::new(0.5, 0.0));
            Ok(eig.eigenvalues.iter().map(|v| v.abs()).sum())
        }
        _ => {
            let gens = cone.extremal_generators()?;
            match (x.exact(), uv.exact()) {
                (Some(xe), Some(ue)) => {
                    let mut rows = Vec::new();
                    let mut h = Vec::new();
                    for g in &gens {
                        let g = g.exact().expect("extremals are exact");
                        let gu: Rational = g.iter().zip(ue).map(|(a, b)| a * b).sum();
                        rows.push(g.to_vec());
                        rows.push(g.iter().map(|v| -v).collect());
                        h.push(gu.clone());
                        h.push(gu);
                    }
                    lp_value(simplex::maximize_free(&rows, &h, xe, 0.0))
                }
                _ => {
                    let (xf, uf) = (x.to_float(), uv.to_float());
                    let mut rows = Vec::new();
                    let mut h = Vec::new();
                    for g in &gens {
                        let g = g.to_float();
                        let n = norm2(&g);
                        let g: Vec<f64> = g.iter().map(|v| v / n).collect();
                        let gu = dot(&g, &uf);
                        rows.push(g.clone());
                        rows.push(g.iter().map(|v| -v).collect());
                        h.push(gu);
                        h.push(gu);
                    }
                    lp_value(simplex::maximize_free(&rows, &h, &xf, 1e-12))
                }
            }
        }
    }
}

fn lp_value<T: crate::linalg::Scalar>(outcome: simplex::LpOutcome<T>) -> Result<f64, DynamicsError> {
    match outcome {
        simplex::LpOutcome::Optimal { value, .. } => Ok(value.as_f64().max(0.0)),
        // The order interval is bounded and contains 0 whenever u ∈ (K*)°.
        _ => Err(ConeError::InvalidUnit("order interval [−u, u] is not a bounded neighbourhood of 0".into()).into()),
    }
}

fn psd_sqrt(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let roots = eig.eigenvalues.map(|v| Complex64::new(v.max(0.0).sqrt(), 0.0));
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&roots) * v.adjoint()
}

/// Per-step distance `‖ξₙ − π₁(ξₙ) ⊗ π₂(ξₙ)‖₂` for `ξₙ = Ãⁿx / ⟨u¹⊗u², Ãⁿx⟩`.
/// The state is renormalized every step.
pub fn decoupling_trace(
    a: &DynMap,
    x: &Vector,
    layout: &BipartiteLayout,
    n_max: usize,
) -> Result<TrajectoryRecord, DynamicsError> {
    check_dim(a, x)?;
    if layout.dim() != a.dim() {
        return Err(DynamicsError::DimensionMismatch { expected: a.dim(), got: layout.dim() });
    }
    let mode = if x.is_exact() { ScalarMode::exact() } else { ScalarMode::float() };
    match layout.tensor.contains(x, &mode) {
        Ok(false) => return Err(DynamicsError::InitNotInCone),
        // Psd ⊗ Psd membership is not decidable here; positivity of the
        // normalization is still checked below.
        Ok(true) | Err(ConeError::Unsupported(_)) => {}
        Err(e) => return Err(e.into()),
    }
    let m = a.matrix().to_float().row_vecs();
    let u = layout.unit();
    let normalize = |y: Vec<f64>, step: usize| -> Result<Vec<f64>, DynamicsError> {
        let s = dot(&u, &y);
        if !(s > 1e-300 && s > 1e-14 * norm2(&y) * norm2(&u)) {
            return Err(DynamicsError::NormalizationVanished { step });
        }
        Ok(y.iter().map(|v| v / s).collect())
    };
    let mut xi = normalize(x.to_float(), 0)?;
    let mut iterates = vec![vec![product_distance(&xi, layout)?]];
    let mut verdict = TrajectoryVerdict::Undecided;
    let mut run = usize::from(iterates[0][0] < DECOUPLING_TOL);
    for step in 1..=n_max {
        xi = normalize(apply(&m, &xi), step)?;
        let dist = product_distance(&xi, layout)?;
        iterates.push(vec![dist]);
        run = if dist < DECOUPLING_TOL { run + 1 } else { 0 };
        if run >= WINDOW {
            verdict = TrajectoryVerdict::Converged { limit: vec![dist], at_step: step + 1 - run };
            break;
        }
    }
    let asymptotic = asymptotic_limit(a, x).filter(|l| l.dominant).and_then(|l| {
        let s = dot(&u, &l.leading);
        (s.abs() > 1e-12 * norm2(&l.leading)).then(|| l.leading.iter().map(|v| v / s).collect())
    });
    Ok(TrajectoryRecord {
        mode: TrajectoryMode::Decoupling,
        first_step: 0,
        iterates,
        verdict,
        final_state: Some(xi),
        asymptotic,
    })
}

/// `‖ξ − π₁(ξ) ⊗ π₂(ξ)‖₂`.
pub fn product_distance(xi: &[f64], layout: &BipartiteLayout) -> Result<f64, DynamicsError> {
    let (p1, p2) = reduced_states(xi, layout)?;
    Ok(norm2(&xi.iter().zip(kron_vec(&p1, &p2)).map(|(a, b)| a - b).collect::<Vec<_>>()))
}
