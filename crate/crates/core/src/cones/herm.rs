use nalgebra::DMatrix;
use num_complex::Complex64;

/// Orthonormal real basis of the h×h Hermitian matrices under `Tr(AB)`.
///
/// Order: `I/√h`, then for each pair `j < k` the symmetric element
/// `(E_jk + E_kj)/√2` and the antisymmetric `i(E_kj − E_jk)/√2`, then the
/// traceless diagonal elements. For qubits this is the Pauli basis over √2.
#[derive(Clone, Debug)]
pub struct HermBasis {
    h: usize,
    elements: Vec<DMatrix<Complex64>>,
}

impl PartialEq for HermBasis {
    fn eq(&self, other: &Self) -> bool {
        self.h == other.h
    }
}

impl HermBasis {
    pub fn new(h: usize) -> Self {
        assert!(h >= 1, "Hermitian basis needs h >= 1");
        let zero = || DMatrix::<Complex64>::zeros(h, h);
        let s2 = std::f64::consts::FRAC_1_SQRT_2;
        let mut elements = Vec::with_capacity(h * h);

        let mut id = zero();
        for i in 0..h {
            id[(i, i)] = Complex64::new(1.0 / (h as f64).sqrt(), 0.0);
        }
        elements.push(id);

        for j in 0..h {
            for k in j + 1..h {
                let mut sym = zero();
                sym[(j, k)] = Complex64::new(s2, 0.0);
                sym[(k, j)] = Complex64::new(s2, 0.0);
                elements.push(sym);
                let mut anti = zero();
                anti[(j, k)] = Complex64::new(0.0, -s2);
                anti[(k, j)] = Complex64::new(0.0, s2);
                elements.push(anti);
            }
        }

        for l in 1..h {
            let norm = ((l * (l + 1)) as f64).sqrt();
            let mut diag = zero();
            for m in 0..l {
                diag[(m, m)] = Complex64::new(1.0 / norm, 0.0);
            }
            diag[(l, l)] = Complex64::new(-(l as f64) / norm, 0.0);
            elements.push(diag);
        }
        HermBasis { h, elements }
    }

    pub fn hdim(&self) -> usize {
        self.h
    }

    /// Ambient real dimension h².
    pub fn dim(&self) -> usize {
        self.h * self.h
    }

    pub fn elements(&self) -> &[DMatrix<Complex64>] {
        &self.elements
    }

    /// Coordinates `Tr(B_i M)` of a Hermitian matrix. Only the real part is
    /// kept; it is the whole value when `m` is Hermitian.
    pub fn vec(&self, m: &DMatrix<Complex64>) -> Vec<f64> {
        self.elements.iter().map(|b| trace_product(b, m).re).collect()
    }

    pub fn mat(&self, x: &[f64]) -> DMatrix<Complex64> {
        assert_eq!(x.len(), self.dim(), "coordinate vector has the wrong length");
        let mut m = DMatrix::zeros(self.h, self.h);
        for (b, &c) in self.elements.iter().zip(x) {
            if c != 0.0 {
                m += b * Complex64::new(c, 0.0);
            }
        }
        m
    }

    /// Coordinates of the identity matrix: `[√h, 0, …, 0]`.
    pub fn identity_coords(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        v[0] = (self.h as f64).sqrt();
        v
    }
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Complex64 {
    let n = a.nrows();
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            s += a[(i, k)] * b[(k, i)];
        }
    }
    s
}

/// Real matrix `M_ij = Tr(B_i Φ(B_j))` of a linear map on Hermitian matrices.
pub fn superoperator(basis: &HermBasis, phi: impl Fn(&DMatrix<Complex64>) -> DMatrix<Complex64>) -> Vec<Vec<f64>> {
    let images: Vec<DMatrix<Complex64>> = basis.elements.iter().map(&phi).collect();
    basis
        .elements
        .iter()
        .map(|bi| images.iter().map(|img| trace_product(bi, img).re).collect())
        .collect()
}
