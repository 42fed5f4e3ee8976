use num_traits::Zero;
use proptest::prelude::*;

use super::*;

fn q(p: i64, d: i64) -> Rational {
    Rational::new(p.into(), d.into())
}

/// Rank from the largest nonvanishing minor, determinants by cofactor
/// expansion. Independent of the elimination code; only for tiny matrices.
fn rank_by_minors(m: &Matrix<Rational>) -> usize {
    fn det(a: &[Vec<Rational>]) -> Rational {
        let n = a.len();
        if n == 1 {
            return a[0][0].clone();
        }
        let mut total = Rational::zero();
        for j in 0..n {
            let minor: Vec<Vec<Rational>> = a[1..]
                .iter()
                .map(|row| row.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, v)| v.clone()).collect())
                .collect();
            let term = &a[0][j] * det(&minor);
            total = if j % 2 == 0 { total + term } else { total - term };
        }
        total
    }
    fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        if n < k {
            return vec![];
        }
        let mut out = subsets(n - 1, k);
        for mut s in subsets(n - 1, k - 1) {
            s.push(n - 1);
            out.push(s);
        }
        out
    }
    for k in (1..=m.rows().min(m.cols())).rev() {
        for rs in subsets(m.rows(), k) {
            for cs in subsets(m.cols(), k) {
                let sub: Vec<Vec<Rational>> =
                    rs.iter().map(|&i| cs.iter().map(|&j| m[(i, j)].clone()).collect()).collect();
                if !det(&sub).is_zero() {
                    return k;
                }
            }
        }
    }
    0
}

fn jordan() -> Mat {
    Mat::from_ints(&[&[1, 1], &[0, 1]]).unwrap()
}

fn lower() -> Mat {
    Mat::from_ints(&[&[2, 0], &[1, 1]]).unwrap()
}

#[test]
fn kron_identity_and_scalar() {
    let i2 = Mat::identity(2, true);
    assert_eq!(kron(&i2, &i2), Mat::identity(4, true));
    let a = Mat::from_ints(&[&[2]]).unwrap();
    let b = Mat::from_ints(&[&[3]]).unwrap();
    assert_eq!(kron(&a, &b), Mat::from_ints(&[&[6]]).unwrap());
}

#[test]
fn kron_of_jordan_powers() {
    let a = jordan();
    let aa = kron(&a, &a);
    for n in [0u64, 1, 2, 5, 13] {
        let lhs = mat_power(&aa, n);
        let an = mat_power(&a, n);
        assert_eq!(lhs, kron(&an, &an));
        let n = n as i64;
        let expected = Mat::from_ints(&[
            &[1, n, n, n * n],
            &[0, 1, 0, n],
            &[0, 0, 1, n],
            &[0, 0, 0, 1],
        ])
        .unwrap();
        assert_eq!(lhs, expected);
    }
}

#[test]
fn kernel_dim_examples() {
    let mode = ScalarMode::exact();
    let zero = Mat::from_ints(&[&[0, 0, 0], &[0, 0, 0], &[0, 0, 0]]).unwrap();
    assert_eq!(kernel_dim(&zero, &mode), 3);
    assert_eq!(kernel_dim(&Mat::identity(2, true), &mode), 0);
    let a_minus_i = jordan().sub(&Mat::identity(2, true));
    assert_eq!(kernel_dim(&a_minus_i, &mode), 1);
    assert_eq!(kernel_dim(&a_minus_i, &ScalarMode::float()), 1);
    assert_eq!(kernel_dim(&zero, &ScalarMode::float()), 3);
}

#[test]
fn spectral_radius_examples() {
    assert!((spectral_radius(&jordan()) - 1.0).abs() < 1e-12);
    assert!((spectral_radius(&lower()) - 2.0).abs() < 1e-12);
    assert_eq!(spectral_radius(&Mat::from_ints(&[&[0]]).unwrap()), 0.0);
    let r = certified_spectral_radius(&lower());
    assert_eq!(r.exact, Some(q(2, 1)));
}

#[test]
fn multiplicities_examples() {
    let exact = ScalarMode::exact();
    // (A − I) = [[0,1],[0,0]] has rank 1; (A − I)² = 0 has rank 0.
    assert_eq!(multiplicities(&jordan(), 1.0, &exact), MultiplicityPair { geometric: 1, algebraic: 2 });
    assert_eq!(
        multiplicities(&Mat::identity(2, true), 1.0, &exact),
        MultiplicityPair { geometric: 2, algebraic: 2 }
    );
    // Eigenvalues 2 and 1 are distinct; A − 2I = [[0,0],[1,−1]] has rank 1.
    assert_eq!(multiplicities(&lower(), 2.0, &exact), MultiplicityPair { geometric: 1, algebraic: 1 });
    assert_eq!(multiplicities(&lower(), 3.0, &exact), MultiplicityPair::default());

    let float = ScalarMode::float();
    assert_eq!(multiplicities(&jordan(), 1.0, &float), MultiplicityPair { geometric: 1, algebraic: 2 });
    assert_eq!(multiplicities(&lower(), 2.0, &float), MultiplicityPair { geometric: 1, algebraic: 1 });
    assert_eq!(multiplicities(&lower(), 3.0, &float), MultiplicityPair::default());
}

#[test]
fn jordan_degree_diagnostic() {
    let a = jordan();
    assert_eq!(jordan_degree_exact(a.exact().unwrap(), &q(1, 1)), 2);
    assert_eq!(jordan_degree_exact(Mat::identity(3, true).exact().unwrap(), &q(1, 1)), 1);
    assert_eq!(jordan_degree_exact(a.exact().unwrap(), &q(5, 1)), 0);
}

#[test]
fn mat_power_examples() {
    assert_eq!(mat_power(&jordan(), 0), Mat::identity(2, true));
    assert_eq!(mat_power(&jordan(), 7), Mat::from_ints(&[&[1, 7], &[0, 1]]).unwrap());
    let half = match lower() {
        Mat::Exact(m) => Mat::Exact(m.scale(&q(1, 2))),
        _ => unreachable!(),
    };
    for n in [1u32, 2, 6, 10] {
        let p = 2i64.pow(n);
        let expected = Mat::from_ratios(&[&[(1, 1), (0, 1)], &[(p - 1, p), (1, p)]]).unwrap();
        assert_eq!(mat_power(&half, n as u64), expected);
    }
}

#[test]
fn rational_parsing() {
    assert_eq!(parse_rational("1/2"), Some(q(1, 2)));
    assert_eq!(parse_rational("-0.125"), Some(q(-1, 8)));
    assert_eq!(parse_rational(" 3 "), Some(q(3, 1)));
    assert_eq!(parse_rational("2/0"), None);
    assert_eq!(parse_rational("1e3"), None);
    assert_eq!(parse_rational("."), None);
}

#[test]
fn snapping() {
    assert_eq!(snap_rational(0.5, 100, 1e-12), Some(q(1, 2)));
    assert_eq!(snap_rational(2.0 / 3.0, 100, 1e-12), Some(q(2, 3)));
    assert_eq!(snap_rational(std::f64::consts::SQRT_2, 1000, 1e-12), None);
}

#[test]
fn simplex_small_cases() {
    use simplex::*;
    // max x + y s.t. x + 2y <= 4, 3x + y <= 6 → optimum (8/5, 6/5), value 14/5.
    let rows = vec![vec![q(1, 1), q(2, 1)], vec![q(3, 1), q(1, 1)]];
    let out = maximize_free(&rows, &[q(4, 1), q(6, 1)], &[q(1, 1), q(1, 1)], 0.0);
    match out {
        LpOutcome::Optimal { x, value } => {
            assert_eq!(value, q(14, 5));
            assert_eq!(x, vec![q(8, 5), q(6, 5)]);
        }
        other => panic!("{other:?}"),
    }
    // [1,1] = [1,0] + [0,1]; [-1,0] is not a conic combination.
    let gens = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    assert!(conic_combination(&gens, &[1.0, 1.0], 1e-12).is_some());
    assert!(conic_combination(&gens, &[-1.0, 0.0], 1e-12).is_none());
    // Unbounded: max y with only y >= -1.
    let out = maximize_free(&[vec![0.0, -1.0]], &[1.0], &[0.0, 1.0], 1e-12);
    assert_eq!(out, LpOutcome::Unbounded);
}

fn small_rational_matrix(n: usize, m: usize) -> impl Strategy<Value = Matrix<Rational>> {
    prop::collection::vec((-3i64..=3, 1i64..=3), n * m).prop_map(move |v| {
        let rows = v.chunks(m).map(|c| c.iter().map(|&(p, d)| q(p, d)).collect()).collect();
        Matrix::from_rows(rows).unwrap()
    })
}

fn small_float_matrix(n: usize) -> impl Strategy<Value = Matrix<f64>> {
    prop::collection::vec(-2.0f64..2.0, n * n)
        .prop_map(move |v| Matrix::from_rows(v.chunks(n).map(|c| c.to_vec()).collect()).unwrap())
}

proptest! {
    #[test]
    fn bareiss_matches_minor_rank(m in (1usize..=4, 1usize..=4).prop_flat_map(|(r, c)| small_rational_matrix(r, c))) {
        prop_assert_eq!(bareiss_rank(&m), rank_by_minors(&m));
        prop_assert_eq!(rref(&m).1.len(), rank_by_minors(&m));
    }

    #[test]
    fn modular_rank_matches_bareiss(
        (k, left, right) in (1usize..=6).prop_flat_map(|k| (Just(k), small_rational_matrix(7, k), small_rational_matrix(k, 8)))
    ) {
        // Products of 7×k and k×8 factors have rank at most k.
        let m = left.matmul(&right);
        let ints = exact::integer_rows(&m);
        let certified = modular::certified_rank(&ints, m.cols(), 64);
        prop_assert_eq!(certified, Some(bareiss_rank(&m)));
        let _ = k;
    }

    #[test]
    fn exact_kernel_vectors_annihilate(m in (1usize..=4).prop_flat_map(|n| small_rational_matrix(n, n))) {
        let basis = exact::kernel_basis(&m);
        prop_assert_eq!(basis.len(), m.cols() - bareiss_rank(&m));
        for v in basis {
            prop_assert!(m.mul_vec(&v).iter().all(|x| x.is_zero()));
        }
    }

    #[test]
    fn exact_and_float_kernel_dims_agree(m in (1usize..=4).prop_flat_map(|n| small_rational_matrix(n, n))) {
        let float = m.to_f64();
        let s = singular_values(&float);
        let smax = s[0];
        let cutoff = ScalarMode::float().tol.eps_rank * smax;
        // Skip matrices whose singular values sit near the cutoff.
        prop_assume!(s.iter().all(|&v| v < 1e-14 * smax.max(1.0) || v > 10.0 * cutoff));
        let exact_dim = kernel_dim(&Mat::Exact(m.clone()), &ScalarMode::exact());
        let float_dim = kernel_dim(&Mat::Float(float), &ScalarMode::float());
        prop_assert_eq!(exact_dim, float_dim);
    }

    #[test]
    fn kron_mixed_product(a in small_float_matrix(2), b in small_float_matrix(3),
                          x in prop::collection::vec(-1.0f64..1.0, 2),
                          y in prop::collection::vec(-1.0f64..1.0, 3)) {
        let lhs = a.kron(&b).mul_vec(&kron_vec(&x, &y));
        let rhs = kron_vec(&a.mul_vec(&x), &b.mul_vec(&y));
        for (l, r) in lhs.iter().zip(&rhs) {
            prop_assert!((l - r).abs() < 1e-12);
        }
    }

    #[test]
    fn kron_is_multiplicative(a in small_float_matrix(2), b in small_float_matrix(2),
                              c in small_float_matrix(2), d in small_float_matrix(2)) {
        let lhs = a.kron(&b).matmul(&c.kron(&d));
        let rhs = a.matmul(&c).kron(&b.matmul(&d));
        for (l, r) in lhs.data().iter().zip(rhs.data()) {
            prop_assert!((l - r).abs() < 1e-10);
        }
    }

    #[test]
    fn spectral_radius_of_kron_and_transpose(a in (1usize..=4).prop_flat_map(small_float_matrix),
                                             b in (1usize..=4).prop_flat_map(small_float_matrix)) {
        let (ma, mb) = (Mat::Float(a.clone()), Mat::Float(b));
        let rk = spectral_radius(&kron(&ma, &mb));
        let prod = spectral_radius(&ma) * spectral_radius(&mb);
        prop_assert!((rk - prod).abs() <= 1e-8 * prod.max(1.0), "{} vs {}", rk, prod);
        let rt = spectral_radius(&Mat::Float(a.transpose()));
        prop_assert!((rt - spectral_radius(&ma)).abs() <= 1e-8 * rt.max(1.0));
    }

    #[test]
    fn multiplicities_are_consistent(a in (1usize..=4).prop_flat_map(small_float_matrix)) {
        let m = Mat::Float(a);
        let tol = Tolerances::default();
        let eigs = eigenvalues(&m);
        let mut seen: Vec<num_complex::Complex64> = Vec::new();
        let mut total = 0;
        for z in &eigs {
            if seen.iter().any(|s| (s - z).norm() <= tol.eps_cluster) {
                continue;
            }
            seen.push(*z);
            let count = eigs.iter().filter(|w| (*w - z).norm() <= tol.eps_cluster).count();
            total += count;
            if z.im.abs() <= tol.eps_cluster {
                let p = multiplicities(&m, z.re, &ScalarMode::float());
                prop_assert!(p.geometric >= 1 && p.geometric <= p.algebraic);
            }
        }
        prop_assert_eq!(total, m.rows());
    }
}
