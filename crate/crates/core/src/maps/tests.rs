use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::linalg::{eigenvalues, Matrix, Scalar};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn cm(rows: &[[Complex64; 2]; 2]) -> DMatrix<Complex64> {
    DMatrix::from_fn(2, 2, |i, j| rows[i][j])
}

fn paulis() -> [DMatrix<Complex64>; 4] {
    let o = c(0.0, 0.0);
    let l = c(1.0, 0.0);
    [
        cm(&[[l, o], [o, l]]),
        cm(&[[o, l], [l, o]]),
        cm(&[[o, c(0.0, -1.0)], [c(0.0, 1.0), o]]),
        cm(&[[l, o], [o, -l]]),
    ]
}

fn amplitude_damping(gamma: f64) -> Vec<DMatrix<Complex64>> {
    let o = c(0.0, 0.0);
    vec![
        cm(&[[c(1.0, 0.0), o], [o, c((1.0 - gamma).sqrt(), 0.0)]]),
        cm(&[[o, c(gamma.sqrt(), 0.0)], [o, o]]),
    ]
}

fn transpose_map() -> DynMap {
    // ρ ↦ ρᵀ fixes I, X, Z and negates Y.
    let m = Mat::from_f64_rows(vec![
        vec![1.0, 0.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0, 0.0],
        vec![0.0, 0.0, -1.0, 0.0],
        vec![0.0, 0.0, 0.0, 1.0],
    ])
    .unwrap();
    DynMap::new(m, ConeSpec::psd(2).unwrap(), None, &ScalarMode::float()).unwrap()
}

#[test]
fn stochastic_construction() {
    let swap = DynMap::from_stochastic(Mat::from_ints(&[&[0, 1], &[1, 0]]).unwrap()).unwrap();
    assert!(swap.is_dup(&ScalarMode::exact()));
    let fig = Mat::from_ratios(&[
        &[(0, 1), (1, 1), (0, 1), (1, 1)],
        &[(1, 2), (0, 1), (0, 1), (0, 1)],
        &[(1, 2), (0, 1), (0, 1), (0, 1)],
        &[(0, 1), (0, 1), (1, 1), (0, 1)],
    ])
    .unwrap();
    assert!(DynMap::from_stochastic(fig).unwrap().is_dup(&ScalarMode::exact()));
    assert_eq!(
        DynMap::from_stochastic(Mat::from_ints(&[&[1, 1], &[0, 1]]).unwrap()),
        Err(MapError::ColumnSumViolation { col: 1, sum: "2".into() })
    );
    assert_eq!(
        DynMap::from_stochastic(Mat::from_ints(&[&[2, 1], &[-1, 0]]).unwrap()),
        Err(MapError::NegativeEntry { row: 1, col: 0 })
    );
}

#[test]
fn identity_channel_is_the_identity_matrix() {
    let id = DynMap::from_kraus(vec![DMatrix::identity(2, 2)]).unwrap();
    let m = id.matrix().to_float();
    assert!(m.sub(&Matrix::identity(4)).max_abs() < 1e-15);
}

#[test]
fn depolarizing_spectrum() {
    let ops: Vec<_> = paulis().into_iter().map(|p| p * c(0.5, 0.0)).collect();
    let a = DynMap::from_kraus(ops).unwrap();
    let mut eig: Vec<f64> = eigenvalues(a.matrix()).iter().map(|z| z.norm()).collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    assert!((eig[0] - 1.0).abs() < 1e-12 && eig[1..].iter().all(|v| v.abs() < 1e-12));
    assert!(matches!(a.provenance(), Provenance::Kraus { independent: 4, .. }));
}

#[test]
fn amplitude_damping_is_trace_preserving() {
    let ops = amplitude_damping(0.5);
    let sum = ops.iter().fold(DMatrix::<Complex64>::zeros(2, 2), |acc, k| acc + k.adjoint() * k);
    assert!((sum - DMatrix::identity(2, 2)).norm() < 1e-15);
    let a = DynMap::from_kraus(ops).unwrap();
    assert!(a.is_dup(&ScalarMode::float()));
    assert_eq!(a.is_positive().value, Positivity::Yes);
}

#[test]
fn adjoint_examples() {
    let a = DynMap::new(Mat::from_ints(&[&[1, 1], &[0, 1]]).unwrap(), ConeSpec::orthant(2).unwrap(), None, &ScalarMode::exact()).unwrap();
    let t = a.adjoint().unwrap();
    assert_eq!(t.matrix(), &Mat::from_ints(&[&[1, 0], &[1, 1]]).unwrap());
    assert_eq!(t.adjoint().unwrap(), a);
    let w = DynMap::from_stochastic(Mat::from_ratios(&[&[(1, 3), (1, 2)], &[(2, 3), (1, 2)]]).unwrap()).unwrap();
    let ones = Vector::from_ints(&[1, 1]);
    assert_eq!(w.adjoint().unwrap().apply(&ones), ones);
}

#[test]
fn dup_examples() {
    let a = DynMap::new(Mat::from_ints(&[&[2, 0], &[1, 1]]).unwrap(), ConeSpec::orthant(2).unwrap(), None, &ScalarMode::exact()).unwrap();
    assert!(!a.is_dup(&ScalarMode::exact()));
}

#[test]
fn positivity_examples() {
    let m = ScalarMode::exact();
    let jordan = DynMap::new(Mat::from_ints(&[&[1, 1], &[0, 1]]).unwrap(), ConeSpec::orthant(2).unwrap(), None, &m).unwrap();
    assert_eq!(jordan.is_positive().value, Positivity::Yes);
    let neg = DynMap::new(Mat::from_ints(&[&[1, -1], &[0, 1]]).unwrap(), ConeSpec::orthant(2).unwrap(), None, &m).unwrap();
    let v = neg.is_positive();
    assert_eq!(v.value, Positivity::No);
    assert!(v.certificate.contains("(0, 1)"));

    let t = transpose_map().is_positive();
    assert_eq!(t.value, Positivity::Unknown);
    assert!(t.certificate.contains("positive but not completely positive"));

    // Negating a channel breaks positivity, caught by sampling.
    let flip = DynMap::new(
        Mat::from_f64_rows(vec![
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, -3.0],
        ])
        .unwrap(),
        ConeSpec::psd(2).unwrap(),
        None,
        &ScalarMode::float(),
    )
    .unwrap();
    assert_eq!(flip.is_positive().value, Positivity::No);

    let square = ConeSpec::polyhedral(vec![
        vec![Rational::from_int(1), Rational::from_int(1), Rational::from_int(1)],
        vec![Rational::from_int(1), Rational::from_int(1), Rational::from_int(-1)],
        vec![Rational::from_int(1), Rational::from_int(-1), Rational::from_int(1)],
        vec![Rational::from_int(1), Rational::from_int(-1), Rational::from_int(-1)],
    ])
    .unwrap();
    let rot = DynMap::new(Mat::from_ints(&[&[1, 0, 0], &[0, 0, -1], &[0, 1, 0]]).unwrap(), square.clone(), None, &m).unwrap();
    assert_eq!(rot.is_positive().value, Positivity::Yes);
    let shear = DynMap::new(Mat::from_ints(&[&[1, 0, 0], &[0, 1, 1], &[0, 0, 1]]).unwrap(), square, None, &m).unwrap();
    assert_eq!(shear.is_positive().value, Positivity::No);
}

fn random_hermitian(rng: &mut ChaCha8Rng, h: usize) -> DMatrix<Complex64> {
    let a = DMatrix::from_fn(h, h, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    (&a + a.adjoint()) * c(0.5, 0.0)
}

proptest! {
    #[test]
    fn superoperator_matches_kraus_action(seed in any::<u64>(), n_ops in 1usize..4, h in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ops: Vec<DMatrix<Complex64>> = (0..n_ops)
            .map(|_| DMatrix::from_fn(h, h, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
            .collect();
        let a = DynMap::from_kraus(ops.clone()).unwrap();
        let basis = HermBasis::new(h);
        let rho = random_hermitian(&mut rng, h);
        let direct = ops.iter().fold(DMatrix::zeros(h, h), |acc, k| acc + k * &rho * k.adjoint());
        let want = basis.vec(&direct);
        let got = a.apply(&Vector::Float(basis.vec(&rho))).to_float();
        for (x, y) in want.iter().zip(&got) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn stochastic_maps_preserve_total_mass(
        cols in prop::collection::vec(prop::collection::vec(0u32..5, 3), 3),
        x in prop::collection::vec(-5i64..5, 3),
    ) {
        prop_assume!(cols.iter().all(|c| c.iter().sum::<u32>() > 0));
        let w = Mat::from_rational_rows((0..3).map(|i| (0..3).map(|j| {
            Rational::new(cols[j][i].into(), cols[j].iter().sum::<u32>().into())
        }).collect()).collect()).unwrap();
        let a = DynMap::from_stochastic(w).unwrap();
        let x = Vector::from_ints(&x);
        let u = a.unit().vector().clone();
        prop_assert_eq!(u.dot(&a.apply(&x)), u.dot(&x));
    }

    #[test]
    fn dup_maps_have_unit_spectral_radius(
        cols in prop::collection::vec(prop::collection::vec(0u32..5, 4), 4),
    ) {
        prop_assume!(cols.iter().all(|c| c.iter().sum::<u32>() > 0));
        let w = Mat::from_f64_rows((0..4).map(|i| (0..4).map(|j| {
            cols[j][i] as f64 / cols[j].iter().sum::<u32>() as f64
        }).collect()).collect()).unwrap();
        let Ok(a) = DynMap::from_stochastic(w) else { return Ok(()); };
        prop_assert!((crate::linalg::spectral_radius(a.matrix()) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn adjoint_of_positive_map_is_dual_positive(
        weights in prop::collection::vec(0i64..3, 16),
        y in prop::collection::vec(0u8..4, 4),
    ) {
        let square = ConeSpec::polyhedral(vec![
            vec![Rational::from_int(1), Rational::from_int(1), Rational::from_int(1)],
            vec![Rational::from_int(1), Rational::from_int(1), Rational::from_int(-1)],
            vec![Rational::from_int(1), Rational::from_int(-1), Rational::from_int(1)],
            vec![Rational::from_int(1), Rational::from_int(-1), Rational::from_int(-1)],
        ]).unwrap();
        let gens = square.extremal_generators().unwrap();
        let duals = square.dual_extremal_generators().unwrap();
        // Σ c_ij g_i y_jᵀ with c ≥ 0 maps the cone into itself.
        let mut m = Matrix::<Rational>::zeros(3, 3);
        for (i, g) in gens.iter().enumerate() {
            for (j, h) in duals.iter().enumerate() {
                let c = Rational::from_int(weights[4 * i + j]);
                for r in 0..3 {
                    for s in 0..3 {
                        m[(r, s)] += &c * &g.exact().unwrap()[r] * &h.exact().unwrap()[s];
                    }
                }
            }
        }
        let a = DynMap::new(Mat::Exact(m), square.clone(), None, &ScalarMode::exact()).unwrap();
        prop_assert_eq!(a.is_positive().value, Positivity::Yes);
        let mut sample = vec![Rational::zero(); 3];
        for (g, &c) in duals.iter().zip(&y) {
            for (s, v) in sample.iter_mut().zip(g.exact().unwrap()) {
                *s += v * Rational::from_int(c as i64);
            }
        }
        let image = a.adjoint().unwrap().apply(&Vector::Exact(sample));
        prop_assert!(square.dual_contains(&image, &ScalarMode::exact()).unwrap());
    }
}
