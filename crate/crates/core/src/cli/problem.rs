//! Problem file schema: cone, map, optional unit, arithmetic mode and
//! tolerances, as JSON.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cones::ConeSpec;
use crate::linalg::{parse_rational, Arithmetic, Mat, Rational, ScalarMode, Tolerances, Vector};
use crate::maps::DynMap;

use super::CliError;

/// Numeric literal: an integer, a float, or a string such as `"1/2"`,
/// `"-3"` or `"0.25"`. Integers and strings are exact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Literal {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Literal {
    pub fn is_rational(&self) -> bool {
        !matches!(self, Literal::Float(_))
    }

    /// Exact value. Floats are read through their shortest decimal form, so
    /// `0.1` becomes `1/10`.
    pub fn to_rational(&self) -> Result<Rational, CliError> {
        match self {
            Literal::Int(v) => Ok(Rational::from_integer((*v).into())),
            Literal::Float(v) if v.is_finite() => {
                parse_rational(&format!("{v}")).ok_or_else(|| CliError::schema(format!("cannot read {v} as a rational")))
            }
            Literal::Float(v) => Err(CliError::schema(format!("non-finite literal {v}"))),
            Literal::Text(t) => parse_rational(t).ok_or_else(|| CliError::schema(format!("invalid rational literal {t:?}"))),
        }
    }

    pub fn to_f64(&self) -> Result<f64, CliError> {
        match self {
            Literal::Float(v) if v.is_finite() => Ok(*v),
            _ => Ok(num_traits::ToPrimitive::to_f64(&self.to_rational()?).unwrap_or(f64::NAN)),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(v) => write!(f, "{v}"),
            Literal::Float(v) => write!(f, "{v}"),
            Literal::Text(t) => write!(f, "{t}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ConeFile {
    Orthant { dim: usize },
    Psd { hdim: usize },
    Polyhedral { generators: Vec<Vec<Literal>> },
    Tensor { left: Box<ConeFile>, right: Box<ConeFile> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KrausFile {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum MapFile {
    Matrix { data: Vec<Vec<Literal>> },
    Stochastic { data: Vec<Vec<Literal>> },
    Kraus { ops: Vec<KrausFile> },
}

/// Partial tolerance override; missing keys keep the lower-precedence value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_rank: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_cluster: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_interior: Option<f64>,
}

impl ToleranceFile {
    pub fn apply(&self, mut tol: Tolerances) -> Tolerances {
        if let Some(v) = self.eps_rank {
            tol.eps_rank = v;
        }
        if let Some(v) = self.eps_cluster {
            tol.eps_cluster = v;
        }
        if let Some(v) = self.eps_interior {
            tol.eps_interior = v;
        }
        tol
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub cone: ConeFile,
    pub map: MapFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<Vec<Literal>>,
    /// Operand units `[u¹, u²]` for decoupling on a tensor cone.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bipartite_units: Option<[Vec<Literal>; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Arithmetic>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceFile>,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::schema(format!("line {}, column {}: {e}", e.line(), e.column())))
    }

    /// Rational iff every literal in the map, cone and unit is exact.
    pub fn inferred_mode(&self) -> Arithmetic {
        let mut lits: Vec<&Literal> = Vec::new();
        match &self.map {
            MapFile::Matrix { data } | MapFile::Stochastic { data } => lits.extend(data.iter().flatten()),
            MapFile::Kraus { .. } => return Arithmetic::Float,
        }
        lits.extend(self.unit.iter().flatten());
        for u in self.bipartite_units.iter().flatten() {
            lits.extend(u.iter());
        }
        if lits.iter().all(|l| l.is_rational()) && self.cone.all_rational() {
            Arithmetic::ExactRational
        } else {
            Arithmetic::Float
        }
    }
}

impl ConeFile {
    fn all_rational(&self) -> bool {
        match self {
            ConeFile::Orthant { .. } | ConeFile::Psd { .. } => true,
            // Generators are stored exactly either way.
            ConeFile::Polyhedral { .. } => true,
            ConeFile::Tensor { left, right } => left.all_rational() && right.all_rational(),
        }
    }

    pub fn build(&self) -> Result<ConeSpec, CliError> {
        Ok(match self {
            ConeFile::Orthant { dim } => ConeSpec::orthant(*dim)?,
            ConeFile::Psd { hdim } => ConeSpec::psd(*hdim)?,
            ConeFile::Polyhedral { generators } => {
                let gens = generators
                    .iter()
                    .map(|g| g.iter().map(Literal::to_rational).collect::<Result<Vec<_>, _>>())
                    .collect::<Result<Vec<_>, _>>()?;
                ConeSpec::polyhedral(gens)?
            }
            ConeFile::Tensor { left, right } => ConeSpec::tensor(left.build()?, right.build()?)?,
        })
    }
}

/// Converts literals to a vector in the given arithmetic.
pub fn vector(lits: &[Literal], arithmetic: Arithmetic) -> Result<Vector, CliError> {
    Ok(match arithmetic {
        Arithmetic::ExactRational => Vector::Exact(lits.iter().map(Literal::to_rational).collect::<Result<_, _>>()?),
        Arithmetic::Float => Vector::Float(lits.iter().map(Literal::to_f64).collect::<Result<_, _>>()?),
    })
}

fn matrix(data: &[Vec<Literal>], arithmetic: Arithmetic) -> Result<Mat, CliError> {
    let result = match arithmetic {
        Arithmetic::ExactRational => Mat::from_rational_rows(
            data.iter().map(|r| r.iter().map(Literal::to_rational).collect::<Result<Vec<_>, _>>()).collect::<Result<_, _>>()?,
        ),
        Arithmetic::Float => {
            Mat::from_f64_rows(data.iter().map(|r| r.iter().map(Literal::to_f64).collect::<Result<Vec<_>, _>>()).collect::<Result<_, _>>()?)
        }
    };
    result.map_err(|e| CliError::schema(e.to_string()))
}

/// A problem resolved into library objects.
pub struct Problem {
    pub file: ProblemFile,
    pub map: DynMap,
    pub mode: ScalarMode,
}

impl Problem {
    /// `mode_override` beats the file's mode, which beats inference.
    /// Tolerances: file over `base` (defaults already merged with the
    /// environment).
    pub fn build(file: ProblemFile, mode_override: Option<Arithmetic>, base: Tolerances) -> Result<Self, CliError> {
        let arithmetic = mode_override.or(file.mode).unwrap_or_else(|| file.inferred_mode());
        let tol = file.tolerances.as_ref().map_or(base, |t| t.apply(base));
        tol.validate().map_err(CliError::schema)?;
        let mode = ScalarMode { arithmetic, tol };
        let cone = file.cone.build()?;
        let map = match &file.map {
            MapFile::Matrix { data } => DynMap::new(matrix(data, arithmetic)?, cone.clone(), None, &mode)?,
            MapFile::Stochastic { data } => {
                if !matches!(cone, ConeSpec::Orthant(_)) {
                    return Err(CliError::schema("stochastic maps require an orthant cone"));
                }
                let m = DynMap::from_stochastic(matrix(data, arithmetic)?)?;
                if m.dim() != cone.dim() {
                    return Err(CliError::schema(format!("cone has dimension {}, matrix has {}", cone.dim(), m.dim())));
                }
                m
            }
            MapFile::Kraus { ops } => {
                let mats = ops
                    .iter()
                    .enumerate()
                    .map(|(i, k)| kraus_matrix(i, k))
                    .collect::<Result<Vec<_>, _>>()?;
                let m = DynMap::from_kraus(mats)?;
                if m.cone() != &cone {
                    return Err(CliError::schema(format!(
                        "Kraus operators act on a psd cone of dimension {}, the file declares {} of dimension {}",
                        m.dim(),
                        cone.kind(),
                        cone.dim()
                    )));
                }
                m
            }
        };
        let map = match &file.unit {
            Some(u) => map.with_unit(vector(u, arithmetic)?, &mode)?,
            None => map,
        };
        Ok(Problem { file, map, mode })
    }
}

fn kraus_matrix(index: usize, k: &KrausFile) -> Result<DMatrix<Complex64>, CliError> {
    let h = k.re.len();
    let bad = || CliError::schema(format!("Kraus operator {index} must be square with matching re/im parts"));
    if k.re.iter().any(|r| r.len() != h) {
        return Err(bad());
    }
    if let Some(im) = &k.im {
        if im.len() != h || im.iter().any(|r| r.len() != h) {
            return Err(bad());
        }
    }
    Ok(DMatrix::from_fn(h, h, |i, j| Complex64::new(k.re[i][j], k.im.as_ref().map_or(0.0, |im| im[i][j]))))
}
