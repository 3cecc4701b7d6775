//! Scalar field tags and the interleaved real/complex coordinate kernel.
//!
//! Complex coordinates are stored as interleaved real pairs: a vector with
//! `c` complex components occupies `2c` real slots `[re_1, im_1, re_2, ...]`.
//! All maps then run through one real-valued numeric kernel; complex-linearity
//! of a matrix is the statement that it commutes with the block multiplication-
//! by-i matrix returned by [`mul_i_matrix`].

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Fiberwise matrix map over base coordinates (frames, Gram matrices).
pub type MatrixFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// Scalar field of a chart, bundle, or atlas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Field {
    Real,
    Complex,
}

impl Field {
    /// Real slots occupied by one field component.
    pub fn slots(self) -> usize {
        match self {
            Field::Real => 1,
            Field::Complex => 2,
        }
    }

    /// Real dimension of an `n`-component vector over this field.
    pub fn real_dim(self, n: usize) -> usize {
        n * self.slots()
    }

    /// Number of field components of an interleaved slice.
    pub fn components(self, v: &[f64]) -> usize {
        debug_assert_eq!(v.len() % self.slots(), 0);
        v.len() / self.slots()
    }

    /// The `j`-th field component of an interleaved vector.
    pub fn get(self, v: &[f64], j: usize) -> Complex64 {
        match self {
            Field::Real => Complex64::new(v[j], 0.0),
            Field::Complex => Complex64::new(v[2 * j], v[2 * j + 1]),
        }
    }

    /// Writes the `j`-th field component of an interleaved vector.
    pub fn set(self, v: &mut [f64], j: usize, z: Complex64) {
        match self {
            Field::Real => v[j] = z.re,
            Field::Complex => {
                v[2 * j] = z.re;
                v[2 * j + 1] = z.im;
            }
        }
    }

    /// Interleaved vector with `n` components, all zero.
    pub fn zeros(self, n: usize) -> Vec<f64> {
        vec![0.0; self.real_dim(n)]
    }

    /// Rescales an interleaved vector by a field scalar.
    pub fn scale(self, v: &[f64], t: Complex64) -> Vec<f64> {
        let n = self.components(v);
        let mut out = self.zeros(n);
        for j in 0..n {
            self.set(&mut out, j, self.get(v, j) * t);
        }
        out
    }
}

/// Block-diagonal multiplication-by-i matrix on `n` complex slots (`2n x 2n`).
pub fn mul_i_matrix(n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        m[(2 * k, 2 * k + 1)] = -1.0;
        m[(2 * k + 1, 2 * k)] = 1.0;
    }
    m
}

/// Operator-norm defect of complex-linearity: `||M J - J M||` for the
/// multiplication-by-i matrix `J`. Zero exactly when `M` is the real form of
/// a complex-linear matrix. For `Field::Real` this is defined as zero.
pub fn complex_linearity_defect(field: Field, m: &DMatrix<f64>) -> f64 {
    match field {
        Field::Real => 0.0,
        Field::Complex => {
            let n = m.nrows() / 2;
            let j = mul_i_matrix(n);
            let comm = m * &j - &j * m;
            comm.norm()
        }
    }
}

/// Real `2n x 2n` form of a complex `n x n` matrix given in row-major order.
pub fn complex_matrix(n: usize, entries: &[Complex64]) -> DMatrix<f64> {
    assert_eq!(entries.len(), n * n);
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for r in 0..n {
        for c in 0..n {
            let z = entries[r * n + c];
            m[(2 * r, 2 * c)] = z.re;
            m[(2 * r, 2 * c + 1)] = -z.im;
            m[(2 * r + 1, 2 * c)] = z.im;
            m[(2 * r + 1, 2 * c + 1)] = z.re;
        }
    }
    m
}

/// Euclidean norm of an interleaved vector (equals the Hermitian norm over C).
pub fn vec_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Euclidean distance between interleaved vectors.
pub fn vec_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Applies a real matrix to a slice, returning a `Vec`.
pub fn mat_apply(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    debug_assert_eq!(m.ncols(), v.len());
    let mut out = vec![0.0; m.nrows()];
    for r in 0..m.nrows() {
        let mut acc = 0.0;
        for c in 0..m.ncols() {
            acc += m[(r, c)] * v[c];
        }
        out[r] = acc;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_components_interleave() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(Field::Complex.get(&v, 0), Complex64::new(1.0, 2.0));
        assert_eq!(Field::Complex.get(&v, 1), Complex64::new(3.0, 4.0));
        assert_eq!(Field::Complex.components(&v), 2);
        assert_eq!(Field::Real.components(&v), 4);
    }

    #[test]
    fn complex_matrix_commutes_with_i() {
        let m = complex_matrix(
            2,
            &[
                Complex64::new(1.0, 2.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(3.0, 0.5),
                Complex64::new(2.0, 2.0),
            ],
        );
        assert!(complex_linearity_defect(Field::Complex, &m) < 1e-14);
    }

    #[test]
    fn conjugation_has_defect_two() {
        // z -> conj(z) as a real 2x2 matrix; the commutator with i has norm 2
        // in the operator sense (Frobenius norm 2*sqrt(2), max entry 2).
        let conj = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let j = mul_i_matrix(1);
        let comm = &conj * &j - &j * &conj;
        let op_norm = comm.singular_values(); // largest singular value first
        assert!((op_norm[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn complex_matrix_multiplication_matches_real_form() {
        let a = Complex64::new(0.3, -1.2);
        let b = Complex64::new(2.0, 0.7);
        let m = complex_matrix(1, &[a]);
        let v = [b.re, b.im];
        let prod = mat_apply(&m, &v);
        let want = a * b;
        assert!((prod[0] - want.re).abs() < 1e-15);
        assert!((prod[1] - want.im).abs() < 1e-15);
    }
}
