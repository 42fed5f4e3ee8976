use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use super::*;
use crate::cones::ConeSpec;
use crate::linalg::{Matrix, Scalar};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn cm(rows: [[Complex64; 2]; 2]) -> DMatrix<Complex64> {
    DMatrix::from_fn(2, 2, |i, j| rows[i][j])
}

fn raw(rows: &[&[i64]]) -> DynMap {
    let m = Mat::from_ints(rows).unwrap();
    let d = m.rows();
    DynMap::new(m, ConeSpec::orthant(d).unwrap(), None, &ScalarMode::exact()).unwrap()
}

fn stochastic(rows: &[&[(i64, i64)]]) -> DynMap {
    DynMap::from_stochastic(Mat::from_ratios(rows).unwrap()).unwrap()
}

fn four_state_chain() -> DynMap {
    stochastic(&[
        &[(0, 1), (1, 1), (0, 1), (1, 1)],
        &[(1, 2), (0, 1), (0, 1), (0, 1)],
        &[(1, 2), (0, 1), (0, 1), (0, 1)],
        &[(0, 1), (0, 1), (1, 1), (0, 1)],
    ])
}

fn exact() -> ScalarMode {
    ScalarMode::exact()
}

fn parallel(a: &Vector, b: &[f64]) -> bool {
    let a = a.to_float();
    let s = crate::linalg::dot(&a, b) / crate::linalg::dot(b, b);
    s > 0.0 && a.iter().zip(b).all(|(x, y)| (x - s * y).abs() < 1e-10)
}

#[test]
fn jordan_block_is_not_ergodic() {
    let a = raw(&[&[1, 1], &[0, 1]]);
    let report = classify(&a, &exact());
    assert_eq!(report.arithmetic, Arithmetic::ExactRational);
    assert!(!report.ergodic && !report.mixing && !report.irreducible && !report.primitive);
    assert_eq!(report.kernel_dim_shifted, 1);
    assert_eq!(report.multiplicity_r, MultiplicityPair { geometric: 1, algebraic: 2 });
    assert_eq!(report.jordan_degree, Some(2));
    let diag = report.not_ergodic.expect("diagnostic");
    assert_eq!((diag.geometric, diag.dual_geometric), (1, 1));
    assert_eq!(diag.pairing, Some(0.0));
    assert!(report.hypothesis_flags.iter().any(|f| f.contains("not dual-unit-preserving")));
}

#[test]
fn lower_triangular_is_mixing_but_reducible() {
    let a = raw(&[&[2, 0], &[1, 1]]);
    let an = Analysis::new(&a, &exact()).unwrap();
    assert_eq!(an.spectral_radius_exact(), Some(&Rational::from_int(2)));
    assert!(an.ergodic().value && an.mixing().value);
    assert!(!an.irreducible().value && !an.primitive().value);
    let pair = an.stationary_pair().as_ref().unwrap();
    assert!(parallel(&pair.x0, &[1.0, 1.0]));
    assert!(parallel(&pair.y0, &[1.0, 0.0]));
    assert_eq!(pair.x0, Vector::Exact(vec![Rational::new(1.into(), 2.into()), Rational::new(1.into(), 2.into())]));
    assert_eq!(pair.y0.dot(&pair.x0), Value::Exact(Rational::from_int(1)));
    let report = classify(&a, &exact());
    assert!(report.hypothesis_flags.iter().any(|f| f.contains("dual stationary vector is not in the interior")));
    assert!((report.r - 2.0).abs() < 1e-10);
    assert!(!report.hypothesis_flags.iter().any(|f| f.contains("disagreement")), "{:?}", report.hypothesis_flags);
}

#[test]
fn upper_triangular_with_dominant_root_is_mixing() {
    let a = raw(&[&[2, 1], &[0, 1]]);
    assert!(is_mixing(&a, &exact()).unwrap());
    assert!(!is_irreducible(&a, &exact()).unwrap());
}

#[test]
fn four_state_chain_is_primitive_by_every_route() {
    let a = four_state_chain();
    let an = Analysis::new(&a, &exact()).unwrap();
    let p = an.primitive();
    assert!(p.value);
    for c in [
        Criterion::PrimitiveInteriorEigenvectors,
        Criterion::PrimitiveKronConnectivity,
        Criterion::PrimitiveAperiodic,
        Criterion::PrimitivePowerProbe,
    ] {
        assert_eq!(p.route(c), Some(true), "{c:?}");
    }
    let report = classify(&a, &exact());
    assert_eq!(report.period, Some(1));
    assert_eq!(report.strongly_connected, Some(true));
    assert!(report.hypothesis_flags.is_empty(), "{:?}", report.hypothesis_flags);
    assert_eq!(report.criteria_fired.len(), 4);
}

#[test]
fn swap_chain_is_irreducible_but_not_mixing() {
    let a = stochastic(&[&[(0, 1), (1, 1)], &[(1, 1), (0, 1)]]);
    let report = classify(&a, &exact());
    assert!(report.ergodic && report.irreducible);
    assert!(!report.mixing && !report.primitive);
    assert_eq!(report.period, Some(2));
    assert!(report.hypothesis_flags.is_empty(), "{:?}", report.hypothesis_flags);
}

#[test]
fn identity_is_not_ergodic() {
    let a = stochastic(&[&[(1, 1), (0, 1)], &[(0, 1), (1, 1)]]);
    let report = classify(&a, &exact());
    assert!(!report.ergodic);
    assert_eq!(report.not_ergodic.unwrap().geometric, 2);
}

#[test]
fn nilpotent_map_is_rejected() {
    let a = raw(&[&[0, 1], &[0, 0]]);
    assert_eq!(is_ergodic(&a, &exact()), Err(ClassifyError::ZeroSpectralRadius));
    let report = classify(&a, &exact());
    assert!(!report.ergodic);
    assert!(report.hypothesis_flags.iter().any(|f| f.starts_with("ZeroSpectralRadius")));
}

#[test]
fn non_positive_map_is_rejected() {
    let a = DynMap::new(Mat::from_ints(&[&[1, -1], &[0, 1]]).unwrap(), ConeSpec::orthant(2).unwrap(), None, &exact()).unwrap();
    assert!(matches!(is_ergodic(&a, &exact()), Err(ClassifyError::NotPositive(_))));
    let report = classify(&a, &exact());
    assert!(!report.ergodic && report.hypothesis_flags[0].contains("not positive"));
}

#[test]
fn irrational_radius_falls_back_to_float() {
    let a = raw(&[&[1, 1], &[1, 0]]);
    let report = classify(&a, &exact());
    assert_eq!(report.arithmetic, Arithmetic::Float);
    assert!(report.primitive);
    assert!((report.r - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
    assert!(report.hypothesis_flags.iter().any(|f| f.contains("not a certified rational")));
}

fn qubit(ops: Vec<DMatrix<Complex64>>) -> DynMap {
    DynMap::from_kraus(ops).unwrap()
}

fn pauli() -> [DMatrix<Complex64>; 4] {
    let (o, l, i) = (c(0.0), c(1.0), Complex64::new(0.0, 1.0));
    [cm([[l, o], [o, l]]), cm([[o, l], [l, o]]), cm([[o, -i], [i, o]]), cm([[l, o], [o, -l]])]
}

#[test]
fn quantum_fixtures() {
    let m = ScalarMode::float();
    let [id, x, y, z] = pauli();

    let identity = classify(&qubit(vec![id.clone()]), &m);
    assert!(!identity.ergodic);
    assert_eq!(identity.kernel_dim_shifted, 4);

    let dep = qubit(vec![id.clone() * c(0.5), x * c(0.5), y * c(0.5), z.clone() * c(0.5)]);
    let report = classify(&dep, &m);
    assert!(report.primitive && report.mixing && report.irreducible);
    assert_eq!(report.power_probe.as_ref().unwrap().first_interior_power, Some(1));
    assert!(report.hypothesis_flags.is_empty(), "{:?}", report.hypothesis_flags);

    let h = c(0.5f64.sqrt());
    let deph = classify(&qubit(vec![id * h, z * h]), &m);
    assert!(!deph.ergodic && !deph.mixing);

    let o = c(0.0);
    let g = 0.5f64;
    let ad = qubit(vec![cm([[c(1.0), o], [o, c((1.0 - g).sqrt())]]), cm([[o, c(g.sqrt())], [o, o]])]);
    let report = classify(&ad, &m);
    assert!(report.ergodic && report.mixing, "{report:?}");
    assert!(!report.irreducible && !report.primitive);
    assert_eq!(report.power_probe.as_ref().unwrap().first_interior_power, None);
    assert!(!report.hypothesis_flags.iter().any(|f| f.contains("disagreement")), "{:?}", report.hypothesis_flags);
}

#[test]
fn square_cone_rotation() {
    let k = ConeSpec::polyhedral(vec![
        vec![1, 1, 1],
        vec![1, 1, -1],
        vec![1, -1, -1],
        vec![1, -1, 1],
    ]
    .into_iter()
    .map(|r| r.into_iter().map(Rational::from_int).collect())
    .collect())
    .unwrap();
    // Quarter turn of the square cross-section cycles the four extremal rays.
    let rot = Mat::from_ints(&[&[1, 0, 0], &[0, 0, -1], &[0, 1, 0]]).unwrap();
    let a = DynMap::new(rot.clone(), k.clone(), None, &exact()).unwrap();
    let report = classify(&a, &exact());
    assert!(report.ergodic && report.irreducible);
    assert!(!report.mixing && !report.primitive);
    assert!(!report.hypothesis_flags.iter().any(|f| f.contains("disagreement")), "{:?}", report.hypothesis_flags);

    let lazy = Mat::Exact(rot.exact().unwrap().add(&Matrix::identity(3)).scale(&Rational::new(1.into(), 2.into())));
    let b = DynMap::new(lazy, k, None, &exact()).unwrap();
    let report = classify(&b, &exact());
    assert!(report.primitive, "{report:?}");
    assert!(!report.hypothesis_flags.iter().any(|f| f.contains("disagreement")), "{:?}", report.hypothesis_flags);
}

#[test]
fn reports_are_deterministic() {
    for a in [four_state_chain(), raw(&[&[2, 0], &[1, 1]]), raw(&[&[1, 1], &[0, 1]])] {
        let one = serde_json::to_string(&classify(&a, &exact())).unwrap();
        let two = serde_json::to_string(&classify(&a, &exact())).unwrap();
        assert_eq!(one, two);
    }
}

/// Random column-stochastic rational matrix with a random zero pattern.
fn random_stochastic() -> impl Strategy<Value = Mat> {
    (2usize..=4).prop_flat_map(|d| prop::collection::vec(0i64..4, d * d).prop_map(move |w| {
        let mut cols: Vec<Vec<i64>> = (0..d).map(|j| (0..d).map(|i| w[i * d + j]).collect()).collect();
        for (j, col) in cols.iter_mut().enumerate() {
            if col.iter().all(|&v| v == 0) {
                col[j] = 1;
            }
        }
        let rows: Vec<Vec<Rational>> = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| Rational::new(cols[j][i].into(), cols[j].iter().sum::<i64>().into()))
                    .collect()
            })
            .collect();
        Mat::from_rational_rows(rows).unwrap()
    }))
}

fn random_nonnegative() -> impl Strategy<Value = Mat> {
    (2usize..=4).prop_flat_map(|d| {
        prop::collection::vec(prop_oneof![3 => Just(0i64), 2 => 1i64..5], d * d).prop_map(move |w| {
            let rows: Vec<Vec<Rational>> = w.chunks(d).map(|r| r.iter().map(|&v| Rational::from_int(v)).collect()).collect();
            Mat::from_rational_rows(rows).unwrap()
        })
    })
}

fn no_disagreement(report: &ClassificationReport) -> bool {
    !report.hypothesis_flags.iter().any(|f| f.contains("disagreement"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stochastic_routes_agree(m in random_stochastic()) {
        let a = DynMap::from_stochastic(m).unwrap();
        let an = Analysis::new(&a, &exact()).unwrap();
        prop_assert!(an.is_exact());
        let e = an.ergodic();
        prop_assert_eq!(e.route(Criterion::ErgodicKernel), Some(e.value));
        let report = classify(&a, &exact());
        prop_assert!(no_disagreement(&report), "{:?}", report.hypothesis_flags);
        prop_assert!(!report.mixing || report.ergodic);
        prop_assert!(!report.irreducible || report.ergodic);
        prop_assert_eq!(report.primitive, report.mixing && report.irreducible);
    }

    #[test]
    fn nonnegative_routes_agree(m in random_nonnegative()) {
        let d = m.rows();
        let a = DynMap::new(m, ConeSpec::orthant(d).unwrap(), None, &exact()).unwrap();
        let report = classify(&a, &exact());
        prop_assert!(no_disagreement(&report), "{:?}", report.hypothesis_flags);
    }

    /// A map and its adjoint on the dual cone share ergodicity.
    #[test]
    fn adjoint_shares_ergodicity(m in random_stochastic()) {
        let a = DynMap::from_stochastic(m).unwrap();
        let adj = a.adjoint().unwrap();
        prop_assert_eq!(is_ergodic(&a, &exact()).unwrap(), is_ergodic(&adj, &exact()).unwrap());
        prop_assert_eq!(is_mixing(&a, &exact()).unwrap(), is_mixing(&adj, &exact()).unwrap());
    }

    /// Mixing survives mixing with a little of a strictly positive chain.
    #[test]
    fn lazy_perturbation_of_ergodic_chain_is_primitive(m in random_stochastic()) {
        let a = DynMap::from_stochastic(m.clone()).unwrap();
        prop_assume!(is_irreducible(&a, &exact()).unwrap());
        let d = m.rows();
        let x = m.exact().unwrap();
        let lazy = x.add(&Matrix::identity(d)).scale(&Rational::new(1.into(), 2.into()));
        let b = DynMap::from_stochastic(Mat::Exact(lazy)).unwrap();
        prop_assert!(is_primitive(&b, &exact()).unwrap());
    }

    #[test]
    fn float_mode_matches_exact(m in random_stochastic()) {
        let a = DynMap::from_stochastic(m).unwrap();
        let e = classify(&a, &exact());
        let f = classify(&a, &ScalarMode::float());
        prop_assert_eq!((e.ergodic, e.mixing, e.irreducible, e.primitive), (f.ergodic, f.mixing, f.irreducible, f.primitive));
    }
}
