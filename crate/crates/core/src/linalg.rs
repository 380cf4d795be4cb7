//! Thin wrappers over nalgebra decompositions.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

pub type CMatrix = DMatrix<C64>;

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| C64::new(x, 0.0))
}

/// Determinant from the LU factorization with partial pivoting.
pub fn det(m: &CMatrix) -> C64 {
    m.clone().lu().determinant()
}

/// Geometric mean of the row 2-norms; sets the scale of |det|.
pub fn row_norm_scale(m: &CMatrix) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 1.0;
    }
    let s: f64 = (0..n).map(|i| m.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().ln()).sum();
    (s / n as f64).exp()
}

/// True if |det m| is below `rel`·(row-norm scale)ᴺ.
pub fn is_near_singular(m: &CMatrix, d: C64, rel: f64) -> bool {
    let n = m.nrows() as i32;
    let scale = row_norm_scale(m);
    !(d.norm() > rel * scale.powi(n)) || !d.is_finite()
}

/// Eigenvalues of a real square matrix (real or conjugate pairs).
pub fn eigenvalues_real(m: &DMatrix<f64>) -> Vec<C64> {
    m.complex_eigenvalues().iter().cloned().collect()
}

/// Eigenvalues of a complex square matrix via the complex Schur form.
pub fn eigenvalues_complex(m: &CMatrix) -> Vec<C64> {
    match m.clone().schur().eigenvalues() {
        Some(e) => e.iter().cloned().collect(),
        None => {
            // the complex Schur form is always triangular; keep a safe fallback
            let t = m.clone().schur().unpack().1;
            (0..t.nrows()).map(|i| t[(i, i)]).collect()
        }
    }
}

/// Sorted eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut e: Vec<f64> = m.clone().symmetric_eigenvalues().iter().cloned().collect();
    e.sort_by(|a, b| a.total_cmp(b));
    e
}

/// Singular values in ascending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.singular_values().iter().cloned().collect();
    s.sort_by(|a, b| a.total_cmp(b));
    s
}
