//! Decision procedures for ergodicity, mixing, irreducibility and primitivity.
//!
//! Every property is decided by one authoritative route and cross-checked by
//! the others that apply to the cone at hand. Disagreements never change the
//! verdict silently; they are recorded as hypothesis flags in the report.
//!
//! Routes work on the exact matrix when the mode is exact, the matrix is
//! rational and the spectral radius is a certified rational. Otherwise they
//! work on the float matrix normalized by its spectral radius, so the
//! Perron eigenvalue sits at 1 and `eps_cluster` is scale-free.

mod graph;

use std::cell::OnceCell;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cones::{ConeError, ConeSpec};
use crate::linalg::{
    certified_spectral_radius, eigen_cluster, eigenvalues, exact_rank, float_kernel_basis, float_rank, jordan_degree_exact,
    kernel_basis, multiplicities_checked, multiplicities_exact, Arithmetic, Decision, Mat, Matrix, MultiplicityPair,
    Rational, ScalarMode, Scalar, Value, Vector,
};
use crate::maps::{DynMap, Positivity, PositivityVerdict, Provenance};

pub use graph::{period, strongly_connected, tensor_scc_count, Digraph, GraphError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("ZeroSpectralRadius: the map is nilpotent")]
    ZeroSpectralRadius,
    #[error("NotPositive: {0}")]
    NotPositive(String),
    #[error(transparent)]
    Cone(#[from] ConeError),
}

/// Why no stationary pair exists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NotErgodic {
    /// `dim Ker(A − rI)`.
    pub geometric: usize,
    /// `dim Ker(A* − rI)`.
    pub dual_geometric: usize,
    /// `⟨y, x⟩` for the cone-signed eigenvectors, when both are one-dimensional.
    pub pairing: Option<f64>,
    pub reason: String,
}

impl fmt::Display for NotErgodic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NotErgodic: {}", self.reason)
    }
}

/// Perron eigenvectors `x₀ ∈ K`, `y₀ ∈ K*` with `⟨u, x₀⟩ = 1`, `⟨y₀, x₀⟩ = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct StationaryPair {
    pub x0: Vector,
    pub y0: Vector,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    Ergodic,
    Mixing,
    Irreducible,
    Primitive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    /// `dim Ker(A − I) = 1` for a dual-unit-preserving map.
    ErgodicKernel,
    /// The spectral radius is an algebraically simple eigenvalue.
    ErgodicAlgebraicMultiplicity,
    /// One-dimensional Perron eigenspaces with nonvanishing pairing.
    ErgodicStationaryPairing,
    /// `dim Ker(A⊗A − I) = 1` for a dual-unit-preserving map.
    MixingKronKernel,
    /// `r²` is a geometrically simple eigenvalue of `A⊗A`.
    MixingKronGeometricMultiplicity,
    /// `r` algebraically simple and strictly dominant in modulus.
    MixingSpectralCondition,
    IrreducibleInteriorEigenvectors,
    /// `(I + A)^{d−1} g ∈ K°` for every extremal `g`.
    IrreducibleResolventPower,
    /// Every extremal pair `(g, h)` has `⟨h, Aⁿg⟩ > 0` for some `n < d`.
    IrreducibleExtremalReachability,
    IrreducibleStrongConnectivity,
    PrimitiveInteriorEigenvectors,
    /// The digraph of `W⊗W` is strongly connected.
    PrimitiveKronConnectivity,
    /// Strongly connected with period 1.
    PrimitiveAperiodic,
    /// `A⊗A` passes the resolvent-power test on the tensor cone.
    PrimitiveKronIrreducible,
    /// Some power maps every nonzero cone element into the interior, within
    /// the Wielandt-type cap.
    PrimitivePowerProbe,
}

impl Criterion {
    pub fn name(self) -> String {
        serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RouteRecord {
    pub property: Property,
    pub criterion: Criterion,
    pub value: bool,
    pub marginal: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub value: bool,
    pub decisive: Criterion,
    pub routes: Vec<RouteRecord>,
    pub flags: Vec<String>,
}

impl Verdict {
    pub fn route(&self, c: Criterion) -> Option<bool> {
        self.routes.iter().find(|r| r.criterion == c).map(|r| r.value)
    }

    fn build(property: Property, routes: Vec<RouteRecord>) -> Verdict {
        let decisive = routes[0].criterion;
        let value = routes[0].value;
        let mut flags = Vec::new();
        for r in &routes {
            if r.marginal {
                flags.push(format!("tolerance-marginal: {} route {}", prop_name(property), r.criterion.name()));
            }
        }
        for r in &routes[1..] {
            if r.value != value {
                flags.push(format!(
                    "route disagreement: {} says {} but {} says {}",
                    decisive.name(),
                    value,
                    r.criterion.name(),
                    r.value
                ));
            }
        }
        Verdict { value, decisive, routes, flags }
    }
}

fn prop_name(p: Property) -> &'static str {
    match p {
        Property::Ergodic => "ergodic",
        Property::Mixing => "mixing",
        Property::Irreducible => "irreducible",
        Property::Primitive => "primitive",
    }
}

fn record(property: Property, criterion: Criterion, d: Decision<bool>) -> RouteRecord {
    RouteRecord { property, criterion, value: d.value, marginal: d.marginal }
}

/// Result of the direct power probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerProbe {
    pub cap: usize,
    /// Smallest `n ≤ cap` whose power maps the cone into its interior.
    pub first_interior_power: Option<usize>,
    pub note: String,
}

/// Matrix the routes operate on.
#[derive(Clone, Debug)]
enum Work {
    /// Rational matrix and its certified rational spectral radius.
    Exact { m: Matrix<Rational>, q: Rational },
    /// Float matrix divided by its spectral radius.
    Float { m: Matrix<f64> },
}

/// Shared state for all routes on one map.
pub struct Analysis<'a> {
    map: &'a DynMap,
    mode: ScalarMode,
    r: f64,
    r_exact: Option<Rational>,
    work: Work,
    dup: bool,
    positivity: PositivityVerdict,
    setup_flags: Vec<String>,
    eigs: OnceCell<Vec<Complex64>>,
    stationary: OnceCell<Result<StationaryPair, NotErgodic>>,
    ergodic: OnceCell<Verdict>,
    mixing: OnceCell<Verdict>,
    irreducible: OnceCell<Verdict>,
    primitive: OnceCell<Verdict>,
}

impl<'a> Analysis<'a> {
    pub fn new(map: &'a DynMap, mode: &ScalarMode) -> Result<Self, ClassifyError> {
        let positivity = map.is_positive();
        if positivity.value == Positivity::No {
            return Err(ClassifyError::NotPositive(positivity.certificate));
        }
        Self::with_positivity(map, mode, positivity)
    }

    fn with_positivity(map: &'a DynMap, mode: &ScalarMode, positivity: PositivityVerdict) -> Result<Self, ClassifyError> {
        let mut setup_flags = Vec::new();
        if positivity.value == Positivity::Unknown {
            setup_flags.push(format!("positivity unknown: {}", positivity.certificate));
        }
        let use_exact = mode.is_exact() && map.matrix().is_exact();
        let m = if use_exact { map.matrix().clone() } else { map.matrix().clone().into_float() };
        if is_nilpotent(&m) {
            return Err(ClassifyError::ZeroSpectralRadius);
        }
        let sr = certified_spectral_radius(&m);
        if sr.value <= 0.0 {
            return Err(ClassifyError::ZeroSpectralRadius);
        }
        let work = match (&m, &sr.exact) {
            (Mat::Exact(x), Some(q)) if q.is_positive() => Work::Exact { m: x.clone(), q: q.clone() },
            _ => {
                if use_exact {
                    setup_flags.push(format!(
                        "spectral radius {:.12} is not a certified rational; float routes used",
                        sr.value
                    ));
                }
                Work::Float { m: m.to_float().scale(&(1.0 / sr.value)) }
            }
        };
        let effective = match work {
            Work::Exact { .. } => *mode,
            Work::Float { .. } => ScalarMode { arithmetic: Arithmetic::Float, tol: mode.tol },
        };
        let dup = map.is_dup(&effective);
        if !dup {
            setup_flags.push("map is not dual-unit-preserving: general spectral routes used".into());
        }
        let r_exact = match &work {
            Work::Exact { q, .. } => Some(q.clone()),
            Work::Float { .. } => None,
        };
        Ok(Analysis {
            map,
            mode: effective,
            r: sr.value,
            r_exact,
            work,
            dup,
            positivity,
            setup_flags,
            eigs: OnceCell::new(),
            stationary: OnceCell::new(),
            ergodic: OnceCell::new(),
            mixing: OnceCell::new(),
            irreducible: OnceCell::new(),
            primitive: OnceCell::new(),
        })
    }

    pub fn spectral_radius(&self) -> f64 {
        self.r
    }

    pub fn spectral_radius_exact(&self) -> Option<&Rational> {
        self.r_exact.as_ref()
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.work, Work::Exact { .. })
    }

    pub fn is_dup(&self) -> bool {
        self.dup
    }

    pub fn positivity(&self) -> &PositivityVerdict {
        &self.positivity
    }

    fn cone(&self) -> &ConeSpec {
        self.map.cone()
    }

    fn dim(&self) -> usize {
        self.map.dim()
    }

    /// Matrix scaled so that the routes see spectral radius 1 (exact: the
    /// original matrix, whose Perron value is `q`).
    fn mat(&self) -> Mat {
        match &self.work {
            Work::Exact { m, .. } => Mat::Exact(m.clone()),
            Work::Float { m } => Mat::Float(m.clone()),
        }
    }

    /// Eigenvalues of the normalized matrix.
    fn normalized_eigs(&self) -> &[Complex64] {
        self.eigs.get_or_init(|| {
            let m = match &self.work {
                Work::Exact { m, q } => m.to_f64().scale(&(1.0 / q.as_f64())),
                Work::Float { m } => m.clone(),
            };
            eigenvalues(&Mat::Float(m))
        })
    }

    /// `Ker(M − λI)` where λ is the Perron value of the working matrix.
    fn perron_kernel(&self, transpose: bool) -> Vec<Vector> {
        match &self.work {
            Work::Exact { m, q } => {
                let m = if transpose { m.transpose() } else { m.clone() };
                kernel_basis(&Mat::Exact(m.shift(q)), &self.mode)
            }
            Work::Float { m } => {
                let (_, mean) = eigen_cluster(self.normalized_eigs(), 1.0, self.mode.tol.eps_cluster);
                let m = if transpose { m.transpose() } else { m.clone() };
                float_kernel_basis(&m.shift(&mean), self.mode.tol.eps_rank, m.frobenius()).into_iter().map(Vector::Float).collect()
            }
        }
    }

    pub fn multiplicity_r(&self) -> Decision<MultiplicityPair> {
        match &self.work {
            Work::Exact { m, q } => Decision::exact(multiplicities_exact(m, q)),
            Work::Float { m } => multiplicities_checked(&Mat::Float(m.clone()), 1.0, &self.mode),
        }
    }

    /// Multiplicities of `r²` for `A⊗A`. The algebraic count uses exact
    /// elimination up to 64×64 and eigenvalue clustering above.
    pub fn multiplicity_r2_kron(&self) -> Decision<MultiplicityPair> {
        match &self.work {
            Work::Exact { m, q } => {
                let k = m.kron(m);
                let q2 = q * q;
                if k.rows() <= 64 {
                    return Decision::exact(multiplicities_exact(&k, &q2));
                }
                let geometric = k.rows() - exact_rank(&k.shift(&q2));
                let scaled = k.to_f64().scale(&(1.0 / q2.as_f64()));
                let eigs = eigenvalues(&Mat::Float(scaled));
                let (count, _) = eigen_cluster(&eigs, 1.0, self.mode.tol.eps_cluster);
                let algebraic = count.max(geometric);
                Decision { value: MultiplicityPair { geometric, algebraic }, marginal: count < geometric }
            }
            Work::Float { m } => multiplicities_checked(&Mat::Float(m.kron(m)), 1.0, &self.mode),
        }
    }

    pub fn jordan_degree(&self) -> Option<usize> {
        match &self.work {
            Work::Exact { m, q } => Some(jordan_degree_exact(m, q)),
            Work::Float { .. } => None,
        }
    }

    /// `dim Ker(A − rI)`.
    pub fn kernel_dim_shifted(&self) -> Decision<usize> {
        match &self.work {
            Work::Exact { m, q } => Decision::exact(m.rows() - exact_rank(&m.shift(q))),
            Work::Float { m } => {
                let (_, mean) = eigen_cluster(self.normalized_eigs(), 1.0, self.mode.tol.eps_cluster);
                let r = float_rank(&m.shift(&mean), self.mode.tol.eps_rank, m.frobenius());
                Decision { value: m.rows() - r.value, marginal: r.marginal }
            }
        }
    }

    pub fn stationary_pair(&self) -> &Result<StationaryPair, NotErgodic> {
        self.stationary.get_or_init(|| self.compute_stationary())
    }

    fn compute_stationary(&self) -> Result<StationaryPair, NotErgodic> {
        let right = self.perron_kernel(false);
        let left = self.perron_kernel(true);
        let fail = |pairing, reason: &str| NotErgodic {
            geometric: right.len(),
            dual_geometric: left.len(),
            pairing,
            reason: reason.into(),
        };
        if right.len() != 1 || left.len() != 1 {
            return Err(fail(None, "the Perron eigenvalue is not geometrically simple"));
        }
        let cone = self.cone();
        let x = signed_into(&right[0], |v| cone.contains(v, &self.mode)).ok_or_else(|| fail(None, "no Perron eigenvector lies in the cone"))?;
        let y = signed_into(&left[0], |v| cone.dual_contains(v, &self.mode))
            .ok_or_else(|| fail(None, "no dual Perron eigenvector lies in the dual cone"))?;
        let pairing = y.dot(&x);
        let vanishes = match &pairing {
            Value::Exact(p) => p.is_zero(),
            Value::Float(p) => p.abs() <= self.mode.tol.eps_interior * x.norm() * y.norm(),
        };
        if vanishes {
            return Err(fail(Some(pairing.as_f64()), "the Perron eigenvectors pair to zero"));
        }
        let ux = self.map.unit().vector().dot(&x);
        let x0 = x.scale(&ux.recip().ok_or_else(|| fail(Some(pairing.as_f64()), "stationary vector has zero unit pairing"))?);
        let y0 = y.scale(&y.dot(&x0).recip().expect("pairing checked nonzero"));
        Ok(StationaryPair { x0, y0 })
    }

    pub fn ergodic(&self) -> &Verdict {
        self.ergodic.get_or_init(|| {
            let p = Property::Ergodic;
            let mut routes = Vec::new();
            if self.dup {
                let k = kernel_dim_minus_identity(&self.mat(), &self.mode);
                routes.push(record(p, Criterion::ErgodicKernel, Decision { value: k.value == 1, marginal: k.marginal }));
            }
            let mult = self.multiplicity_r();
            routes.push(record(
                p,
                Criterion::ErgodicAlgebraicMultiplicity,
                Decision { value: mult.value.algebraic == 1, marginal: mult.marginal },
            ));
            routes.push(RouteRecord {
                property: p,
                criterion: Criterion::ErgodicStationaryPairing,
                value: self.stationary_pair().is_ok(),
                marginal: false,
            });
            Verdict::build(p, routes)
        })
    }

    pub fn mixing(&self) -> &Verdict {
        self.mixing.get_or_init(|| {
            let p = Property::Mixing;
            let mut routes = Vec::new();
            let m = self.mat();
            if self.dup {
                let kk = crate::linalg::kron(&m, &m);
                let k = kernel_dim_minus_identity(&kk, &self.mode);
                routes.push(record(p, Criterion::MixingKronKernel, Decision { value: k.value == 1, marginal: k.marginal }));
            }
            let geometric = match &self.work {
                Work::Exact { m, q } => Decision::exact(m.rows() * m.rows() - exact_rank(&m.kron(m).shift(&(q * q)))),
                Work::Float { m } => {
                    let k = m.kron(m);
                    let r = float_rank(&k.shift(&1.0), self.mode.tol.eps_rank, k.frobenius());
                    Decision { value: k.rows() - r.value, marginal: r.marginal }
                }
            };
            routes.push(record(
                p,
                Criterion::MixingKronGeometricMultiplicity,
                Decision { value: geometric.value == 1, marginal: geometric.marginal },
            ));
            routes.push(record(p, Criterion::MixingSpectralCondition, self.spectral_condition()));
            Verdict::build(p, routes)
        })
    }

    /// Float check: one eigenvalue within `eps_cluster` of 1, all others of
    /// modulus below `1 − eps_cluster`.
    fn spectral_condition(&self) -> Decision<bool> {
        let eps = self.mode.tol.eps_cluster;
        let mut near_one = 0;
        let mut dominated = true;
        let mut marginal = false;
        for z in self.normalized_eigs() {
            let dist = (z - Complex64::new(1.0, 0.0)).norm();
            if dist <= eps {
                near_one += 1;
            } else if z.norm() >= 1.0 - eps {
                dominated = false;
            }
            let gap = (1.0 - z.norm()).abs();
            if (dist > eps / 10.0 && dist < eps * 10.0) || (dist > eps && gap > eps / 10.0 && gap < eps * 10.0) {
                marginal = true;
            }
        }
        Decision { value: near_one == 1 && dominated, marginal }
    }

    /// Interior test on the stationary pair; `None` when unsupported.
    fn interior_pair(&self) -> Option<Decision<bool>> {
        let Ok(pair) = self.stationary_pair() else {
            return Some(Decision::exact(false));
        };
        let cone = self.cone();
        let x_in = cone.interior_contains(&pair.x0, &self.mode).ok()?;
        let y_in = cone.interior_dual_contains(&pair.y0, &self.mode).ok()?;
        let marginal = !self.is_exact() && (near_boundary(cone, &pair.x0, &self.mode, false) || near_boundary(cone, &pair.y0, &self.mode, true));
        Some(Decision { value: x_in && y_in, marginal })
    }

    pub fn irreducible(&self) -> &Verdict {
        self.irreducible.get_or_init(|| {
            let p = Property::Irreducible;
            let mut routes = Vec::new();
            let ergodic = self.ergodic().value;
            let interior = self.interior_pair();
            let universal = match interior {
                Some(d) => Decision { value: ergodic && d.value, marginal: d.marginal },
                None => Decision { value: false, marginal: true },
            };
            routes.push(record(p, Criterion::IrreducibleInteriorEigenvectors, universal));
            if let Some((gens, duals)) = self.finite_extremals() {
                routes.push(record(p, Criterion::IrreducibleResolventPower, self.resolvent_power(&self.mat(), self.cone(), &gens)));
                routes.push(record(p, Criterion::IrreducibleExtremalReachability, self.extremal_reachability(&gens, &duals)));
            }
            if matches!(self.cone(), ConeSpec::Orthant(_)) {
                let g = Digraph::from_matrix(&self.mat());
                routes.push(record(p, Criterion::IrreducibleStrongConnectivity, Decision::exact(strongly_connected(&g))));
            }
            let mut v = Verdict::build(p, routes);
            if interior.is_none() {
                v.flags.push("interior test unsupported for this cone: irreducibility not decided".into());
            }
            v
        })
    }

    pub fn primitive(&self) -> &Verdict {
        self.primitive.get_or_init(|| {
            let p = Property::Primitive;
            let mut routes = Vec::new();
            let mixing = self.mixing().value;
            let universal = match self.interior_pair() {
                Some(d) => Decision { value: mixing && d.value, marginal: d.marginal },
                None => Decision { value: false, marginal: true },
            };
            routes.push(record(p, Criterion::PrimitiveInteriorEigenvectors, universal));
            let m = self.mat();
            match self.cone() {
                ConeSpec::Orthant(_) => {
                    let g = Digraph::from_matrix(&m);
                    routes.push(record(p, Criterion::PrimitiveKronConnectivity, Decision::exact(strongly_connected(&g.tensor_square()))));
                    routes.push(record(p, Criterion::PrimitiveAperiodic, Decision::exact(period(&g) == Ok(1))));
                }
                cone => {
                    if let (Some(_), true) = (cone.finite(), self.dim() <= 5) {
                        if let Ok(t) = ConeSpec::tensor(cone.clone(), cone.clone()) {
                            let gens = t.extremal_generators().expect("finite tensor cone");
                            let kk = crate::linalg::kron(&m, &m);
                            routes.push(record(p, Criterion::PrimitiveKronIrreducible, self.resolvent_power(&kk, &t, &gens)));
                        }
                    }
                }
            }
            if let Some(probe) = self.power_probe() {
                let cross_checked = matches!(self.cone(), ConeSpec::Orthant(_)) || matches!(self.map.provenance(), Provenance::Kraus { .. });
                if cross_checked {
                    routes.push(RouteRecord {
                        property: p,
                        criterion: Criterion::PrimitivePowerProbe,
                        value: probe.first_interior_power.is_some(),
                        marginal: false,
                    });
                }
            }
            Verdict::build(p, routes)
        })
    }

    /// Extremal rays of K and K*, for finitely generated cones.
    fn finite_extremals(&self) -> Option<(Vec<Vector>, Vec<Vector>)> {
        let cone = self.cone();
        if matches!(cone, ConeSpec::Psd(_)) {
            return None;
        }
        Some((cone.extremal_generators().ok()?, cone.dual_extremal_generators().ok()?))
    }

    fn as_mode(&self, v: &Vector) -> Vector {
        match (&self.work, v) {
            (Work::Exact { .. }, _) => v.clone(),
            (Work::Float { .. }, Vector::Exact(_)) => Vector::Float(v.to_float()),
            _ => v.clone(),
        }
    }

    /// `(I + M)^{d−1} g ∈ K°` for every generator.
    fn resolvent_power(&self, m: &Mat, cone: &ConeSpec, gens: &[Vector]) -> Decision<bool> {
        let d = m.rows();
        let b = crate::linalg::mat_power(&m.add(&Mat::identity(d, m.is_exact())), (d - 1) as u64);
        let mut marginal = false;
        let value = gens.iter().all(|g| {
            let img = b.mul_vec(&self.as_mode(g));
            if !self.is_exact() {
                marginal |= near_boundary(cone, &img, &self.mode, false);
            }
            cone.interior_contains(&img, &self.mode).unwrap_or(false)
        });
        Decision { value, marginal }
    }

    /// For every extremal pair `(g, h)`, some `n < d` has `⟨h, Aⁿ g⟩ > 0`.
    fn extremal_reachability(&self, gens: &[Vector], duals: &[Vector]) -> Decision<bool> {
        let m = self.mat();
        let d = self.dim();
        let eps = self.mode.tol.eps_interior;
        let mut marginal = false;
        let value = gens.iter().all(|g| {
            let mut orbit = Vec::with_capacity(d);
            let mut v = self.as_mode(g);
            for _ in 0..d {
                let next = m.mul_vec(&v);
                orbit.push(v);
                v = next;
            }
            duals.iter().all(|h| {
                orbit.iter().any(|v| match h.dot(v) {
                    Value::Exact(s) => s.is_positive(),
                    Value::Float(s) => {
                        let margin = eps * h.norm() * v.norm();
                        if s > margin / 10.0 && s < margin * 10.0 {
                            marginal = true;
                        }
                        s > margin
                    }
                })
            })
        });
        Decision { value, marginal }
    }

    /// Smallest power mapping the cone into its interior, up to the cap:
    /// `(d−1)² + 1` for finitely generated cones, `h²(h²−N+1)` for channels
    /// with `N` independent Kraus operators (decided by the span of Kraus words).
    pub fn power_probe(&self) -> Option<PowerProbe> {
        if let Provenance::Kraus { ops, independent } = self.map.provenance() {
            let h = ops[0].nrows();
            let cap = h * h * (h * h + 1 - independent);
            let first = kraus_word_span(ops, cap);
            return Some(PowerProbe {
                cap,
                first_interior_power: first,
                note: match first {
                    Some(n) => format!("Kraus words of length {n} span all matrices"),
                    None => "not primitive by bound".into(),
                },
            });
        }
        let (gens, _) = self.finite_extremals()?;
        let d = self.dim();
        let cap = (d - 1) * (d - 1) + 1;
        let m = self.mat();
        let cone = self.cone();
        let mut images: Vec<Vector> = gens.iter().map(|g| self.as_mode(g)).collect();
        for n in 1..=cap {
            images = images.iter().map(|v| normalize_float(m.mul_vec(v))).collect();
            if images.iter().all(|v| cone.interior_contains(v, &self.mode).unwrap_or(false)) {
                return Some(PowerProbe { cap, first_interior_power: Some(n), note: format!("A^{n} maps the cone into its interior") });
            }
        }
        Some(PowerProbe { cap, first_interior_power: None, note: "not primitive by bound".into() })
    }
}

/// Float vectors are rescaled to unit length to avoid overflow in long probes.
fn normalize_float(v: Vector) -> Vector {
    match v {
        Vector::Float(x) => {
            let n = crate::linalg::norm2(&x);
            if n > 0.0 {
                Vector::Float(x.iter().map(|a| a / n).collect())
            } else {
                Vector::Float(x)
            }
        }
        e => e,
    }
}

fn is_nilpotent(m: &Mat) -> bool {
    let d = m.rows();
    match m {
        Mat::Exact(x) => {
            // Quick float screen before the exact power.
            if crate::linalg::spectral_radius(m) > 1e-3 * (1.0 + x.to_f64().max_abs()) {
                return false;
            }
            x.pow(d as u64).data().iter().all(Zero::is_zero)
        }
        Mat::Float(x) => {
            let s = x.max_abs();
            if s == 0.0 {
                return true;
            }
            let p = x.scale(&(1.0 / s)).pow(d as u64);
            p.max_abs() <= 1e-12
        }
    }
}

fn kernel_dim_minus_identity(m: &Mat, mode: &ScalarMode) -> Decision<usize> {
    match m {
        Mat::Exact(x) if mode.is_exact() => Decision::exact(x.rows() - exact_rank(&x.shift(&Rational::from_int(1)))),
        _ => {
            let x = m.to_float();
            let r = float_rank(&x.shift(&1.0), mode.tol.eps_rank, x.frobenius());
            Decision { value: x.rows() - r.value, marginal: r.marginal }
        }
    }
}

/// Sign so that the largest-magnitude entry is positive, then check `accept`;
/// failing that, try the negation.
fn signed_into(v: &Vector, accept: impl Fn(&Vector) -> Result<bool, ConeError>) -> Option<Vector> {
    let f = v.to_float();
    let (mut best, mut idx) = (0.0, 0);
    for (i, x) in f.iter().enumerate() {
        if x.abs() > best {
            best = x.abs();
            idx = i;
        }
    }
    let first = if f[idx] < 0.0 { v.neg() } else { v.clone() };
    for cand in [first.clone(), first.neg()] {
        match accept(&cand) {
            Ok(true) => return Some(cand),
            Ok(false) => {}
            // Membership undecidable here (psd tensor cones): keep the sign rule.
            Err(_) => return Some(first),
        }
    }
    None
}

/// Whether a float interior decision sits within 10× of the margin.
fn near_boundary(cone: &ConeSpec, v: &Vector, mode: &ScalarMode, dual: bool) -> bool {
    let loose = ScalarMode { tol: crate::linalg::Tolerances { eps_interior: mode.tol.eps_interior * 10.0, ..mode.tol }, ..*mode };
    let tight = ScalarMode { tol: crate::linalg::Tolerances { eps_interior: mode.tol.eps_interior / 10.0, ..mode.tol }, ..*mode };
    let test = |m: &ScalarMode| {
        if dual {
            cone.interior_dual_contains(v, m)
        } else {
            cone.interior_contains(v, m)
        }
    };
    matches!((test(&loose), test(&tight)), (Ok(a), Ok(b)) if a != b)
}

/// Smallest `n ≤ cap` such that all Kraus words of length `n` span the full
/// matrix algebra.
fn kraus_word_span(ops: &[DMatrix<Complex64>], cap: usize) -> Option<usize> {
    let h = ops[0].nrows();
    let full = h * h;
    let mut span: Vec<DMatrix<Complex64>> = vec![DMatrix::identity(h, h)];
    for n in 1..=cap {
        let words: Vec<DMatrix<Complex64>> = span.iter().flat_map(|s| ops.iter().map(move |k| k * s)).collect();
        span = orthonormal_span(&words);
        if span.len() == full {
            return Some(n);
        }
        if span.is_empty() {
            return None;
        }
    }
    None
}

/// Orthonormal basis (Hilbert–Schmidt) of the span, relative cutoff 1e-10.
fn orthonormal_span(mats: &[DMatrix<Complex64>]) -> Vec<DMatrix<Complex64>> {
    let scale = mats.iter().map(|m| m.norm()).fold(0.0f64, f64::max);
    let mut basis: Vec<DMatrix<Complex64>> = Vec::new();
    for m in mats {
        let mut v = m.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = b.dotc(&v);
                v -= b * c;
            }
        }
        let n = v.norm();
        if n > 1e-10 * scale.max(1e-300) {
            basis.push(v / Complex64::new(n, 0.0));
        }
    }
    basis
}

/// Stationary pair of a positive map, or the reason it does not exist.
pub fn stationary_pair(a: &DynMap, mode: &ScalarMode) -> Result<Result<StationaryPair, NotErgodic>, ClassifyError> {
    Ok(Analysis::new(a, mode)?.stationary_pair().clone())
}

pub fn is_ergodic(a: &DynMap, mode: &ScalarMode) -> Result<bool, ClassifyError> {
    Ok(Analysis::new(a, mode)?.ergodic().value)
}

pub fn is_mixing(a: &DynMap, mode: &ScalarMode) -> Result<bool, ClassifyError> {
    Ok(Analysis::new(a, mode)?.mixing().value)
}

pub fn is_irreducible(a: &DynMap, mode: &ScalarMode) -> Result<bool, ClassifyError> {
    Ok(Analysis::new(a, mode)?.irreducible().value)
}

pub fn is_primitive(a: &DynMap, mode: &ScalarMode) -> Result<bool, ClassifyError> {
    Ok(Analysis::new(a, mode)?.primitive().value)
}

/// A vector in a report: float values always, exact strings when available.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportVector {
    pub float: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<Vec<String>>,
}

impl From<&Vector> for ReportVector {
    fn from(v: &Vector) -> Self {
        ReportVector { float: v.to_float(), exact: v.exact().map(|e| e.iter().map(|q| q.to_string()).collect()) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub dimension: usize,
    pub cone: String,
    pub arithmetic: Arithmetic,
    pub positivity: PositivityVerdict,
    pub dual_unit_preserving: bool,
    pub r: f64,
    pub r_exact: Option<String>,
    pub ergodic: bool,
    pub mixing: bool,
    pub irreducible: bool,
    pub primitive: bool,
    pub stationary: Option<ReportVector>,
    pub dual_stationary: Option<ReportVector>,
    pub not_ergodic: Option<NotErgodic>,
    /// `dim Ker(A − rI)`.
    pub kernel_dim_shifted: usize,
    pub multiplicity_r: MultiplicityPair,
    pub multiplicity_r2_kron: MultiplicityPair,
    pub jordan_degree: Option<usize>,
    pub strongly_connected: Option<bool>,
    pub period: Option<usize>,
    pub power_probe: Option<PowerProbe>,
    pub routes: Vec<RouteRecord>,
    pub criteria_fired: Vec<Criterion>,
    pub hypothesis_flags: Vec<String>,
}

/// Runs every applicable route. Never fails: degenerate inputs produce a
/// report with all verdicts false and an explanatory flag.
pub fn classify(a: &DynMap, mode: &ScalarMode) -> ClassificationReport {
    let positivity = a.is_positive();
    let mut report = ClassificationReport {
        dimension: a.dim(),
        cone: a.cone().kind().into(),
        arithmetic: if mode.is_exact() && a.matrix().is_exact() { Arithmetic::ExactRational } else { Arithmetic::Float },
        positivity: positivity.clone(),
        dual_unit_preserving: a.is_dup(mode),
        r: crate::linalg::spectral_radius(a.matrix()),
        r_exact: None,
        ergodic: false,
        mixing: false,
        irreducible: false,
        primitive: false,
        stationary: None,
        dual_stationary: None,
        not_ergodic: None,
        kernel_dim_shifted: 0,
        multiplicity_r: MultiplicityPair::default(),
        multiplicity_r2_kron: MultiplicityPair::default(),
        jordan_degree: None,
        strongly_connected: None,
        period: None,
        power_probe: None,
        routes: Vec::new(),
        criteria_fired: Vec::new(),
        hypothesis_flags: Vec::new(),
    };
    if matches!(a.cone(), ConeSpec::Orthant(_)) {
        let g = Digraph::from_matrix(a.matrix());
        report.strongly_connected = Some(strongly_connected(&g));
        report.period = period(&g).ok();
    }
    if positivity.value == Positivity::No {
        report.hypothesis_flags.push(format!("map is not positive on the cone: {}", positivity.certificate));
        return report;
    }
    let an = match Analysis::with_positivity(a, mode, positivity) {
        Ok(an) => an,
        Err(e) => {
            report.hypothesis_flags.push(e.to_string());
            return report;
        }
    };
    report.arithmetic = an.mode.arithmetic;
    report.dual_unit_preserving = an.dup;
    report.r = an.r;
    report.r_exact = an.r_exact.as_ref().map(|q| q.to_string());
    report.hypothesis_flags.extend(an.setup_flags.iter().cloned());

    let ks = an.kernel_dim_shifted();
    report.kernel_dim_shifted = ks.value;
    let mr = an.multiplicity_r();
    report.multiplicity_r = mr.value;
    let mk = an.multiplicity_r2_kron();
    report.multiplicity_r2_kron = mk.value;
    report.jordan_degree = an.jordan_degree();
    for (name, marginal) in [("kernel dimension", ks.marginal), ("multiplicity of r", mr.marginal), ("multiplicity of r² in A⊗A", mk.marginal)] {
        if marginal {
            report.hypothesis_flags.push(format!("tolerance-marginal: {name}"));
        }
    }

    match an.stationary_pair() {
        Ok(pair) => {
            report.stationary = Some((&pair.x0).into());
            report.dual_stationary = Some((&pair.y0).into());
            if !an.dup && an.cone().interior_dual_contains(&pair.y0, &an.mode) == Ok(false) {
                report.hypothesis_flags.push("dual stationary vector is not in the interior of the dual cone".into());
            }
        }
        Err(ne) => report.not_ergodic = Some(ne.clone()),
    }

    let verdicts = [an.ergodic(), an.mixing(), an.irreducible(), an.primitive()];
    for v in verdicts {
        report.routes.extend(v.routes.iter().cloned());
        report.criteria_fired.push(v.decisive);
        report.hypothesis_flags.extend(v.flags.iter().cloned());
    }
    let (e, m, i, p) = (verdicts[0].value, verdicts[1].value, verdicts[2].value, verdicts[3].value);
    report.ergodic = e;
    report.mixing = m && e;
    report.irreducible = i && e;
    report.primitive = p && report.mixing && report.irreducible;
    if m && !e {
        report.hypothesis_flags.push("lattice: mixing without ergodicity cleared".into());
    }
    if i && !e {
        report.hypothesis_flags.push("lattice: irreducible without ergodicity cleared".into());
    }
    if p && !(report.mixing && report.irreducible) {
        report.hypothesis_flags.push("lattice: primitive without mixing and irreducibility cleared".into());
    }
    report.power_probe = an.power_probe();
    report
}

#[cfg(test)]
mod tests;
