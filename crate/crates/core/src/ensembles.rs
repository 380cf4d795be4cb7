//! Real Ginibre sampling, parametric matrix fields and the spherical ensemble.

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::specfun::Vector2C;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Square real matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    data: DMatrix<f64>,
}

impl RealMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::InvalidDimension(format!("matrix must be square, got {}x{}", data.nrows(), data.ncols())));
        }
        if data.nrows() == 0 {
            return Err(Error::InvalidDimension("matrix dimension must be at least 1".into()));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("matrix entries must be finite".into()));
        }
        Ok(Self { data })
    }

    pub fn from_rows(n: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != n * n {
            return Err(Error::DimensionMismatch(format!("expected {} entries, got {}", n * n, rows.len())));
        }
        Self::new(DMatrix::from_row_slice(n, n, rows))
    }

    pub fn identity(n: usize) -> Self {
        Self { data: DMatrix::identity(n, n) }
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }
}

/// Coefficient functions of the field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum FieldCoeffs {
    /// a(p) = cos p, b(p) = i sin p.
    Trig,
    /// a(p) = Σⱼ aⱼ e^{i(j−1)p}, likewise b, with real coefficients.
    Fourier { a: Vec<f64>, b: Vec<f64> },
}

/// The parametric model K(p) = a(p)K₁ + b(p)K₂.
///
/// `rotation` applies a fixed SO(2) rotation to v(p) = (a(p), b(p)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixField {
    pub n: usize,
    pub coeffs: FieldCoeffs,
    #[serde(default)]
    pub rotation: f64,
}

const VALIDATION_GRID: usize = 1024;

impl MatrixField {
    pub fn new(n: usize, coeffs: FieldCoeffs) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::InvalidDimension(format!(
                "the block dimension N must be even and at least 2 (got {n})"
            )));
        }
        let field = Self { n, coeffs, rotation: 0.0 };
        field.validate()?;
        Ok(field)
    }

    pub fn trig(n: usize) -> Result<Self> {
        Self::new(n, FieldCoeffs::Trig)
    }

    pub fn fourier(n: usize, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        Self::new(n, FieldCoeffs::Fourier { a, b })
    }

    pub fn with_rotation(mut self, theta: f64) -> Self {
        self.rotation = theta;
        self
    }

    /// Re-check the invariants (useful after deserialization).
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.n % 2 != 0 {
            return Err(Error::InvalidDimension(format!(
                "the block dimension N must be even and at least 2 (got {})",
                self.n
            )));
        }
        if let FieldCoeffs::Fourier { a, b } = &self.coeffs {
            if a.iter().chain(b).any(|x| !x.is_finite()) {
                return Err(Error::InvalidField("Fourier coefficients must be finite".into()));
            }
            let norm: f64 = a.iter().chain(b).map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::InvalidField("v(p) vanishes identically".into()));
            }
            for k in 0..VALIDATION_GRID {
                let p = 2.0 * PI * k as f64 / VALIDATION_GRID as f64;
                if self.v(p).norm() <= 1e-10 * norm {
                    return Err(Error::InvalidField(format!("v(p) vanishes near p = {p:.6}")));
                }
            }
        }
        if !self.rotation.is_finite() {
            return Err(Error::InvalidField("rotation angle must be finite".into()));
        }
        Ok(())
    }

    fn raw(&self, p: f64) -> (Vector2C, Vector2C) {
        match &self.coeffs {
            FieldCoeffs::Trig => {
                let (s, c) = p.sin_cos();
                (
                    Vector2C::new(C64::new(c, 0.0), C64::new(0.0, s)),
                    Vector2C::new(C64::new(-s, 0.0), C64::new(0.0, c)),
                )
            }
            FieldCoeffs::Fourier { a, b } => {
                let series = |coef: &[f64]| {
                    let mut v = C64::new(0.0, 0.0);
                    let mut dv = C64::new(0.0, 0.0);
                    for (j, &cj) in coef.iter().enumerate() {
                        let e = C64::from_polar(1.0, j as f64 * p);
                        v += cj * e;
                        dv += cj * C64::new(0.0, j as f64) * e;
                    }
                    (v, dv)
                };
                let (va, da) = series(a);
                let (vb, db) = series(b);
                (Vector2C::new(va, vb), Vector2C::new(da, db))
            }
        }
    }

    /// v(p) = (a(p), b(p)).
    pub fn v(&self, p: f64) -> Vector2C {
        self.raw(p).0.rotated(self.rotation)
    }

    /// dv/dp.
    pub fn dv(&self, p: f64) -> Vector2C {
        self.raw(p).1.rotated(self.rotation)
    }

    /// κ(p) = a(p)/b(p).
    pub fn kappa(&self, p: f64) -> C64 {
        self.v(p).kappa()
    }
}

/// One draw (K₁, K₂).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldRealization {
    pub k1: RealMatrix,
    pub k2: RealMatrix,
}

impl FieldRealization {
    pub fn new(k1: RealMatrix, k2: RealMatrix) -> Result<Self> {
        if k1.n() != k2.n() {
            return Err(Error::DimensionMismatch(format!("K1 is {0}x{0} but K2 is {1}x{1}", k1.n(), k2.n())));
        }
        Ok(Self { k1, k2 })
    }

    pub fn sample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        Ok(Self { k1: sample_ginibre(n, rng)?, k2: sample_ginibre(n, rng)? })
    }

    pub fn identity(n: usize) -> Self {
        Self { k1: RealMatrix::identity(n), k2: RealMatrix::identity(n) }
    }

    pub fn n(&self) -> usize {
        self.k1.n()
    }

    /// (K₁, K₂) → U(K₁, K₂) for the SO(2) rotation U by θ; pairs with
    /// `MatrixField::with_rotation(θ)` so that K(p) is unchanged.
    pub fn rotated(&self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let k1 = self.k1.as_matrix() * c - self.k2.as_matrix() * s;
        let k2 = self.k1.as_matrix() * s + self.k2.as_matrix() * c;
        Self { k1: RealMatrix { data: k1 }, k2: RealMatrix { data: k2 } }
    }

    /// K₂ → −K₂.
    pub fn flipped(&self) -> Self {
        Self { k1: self.k1.clone(), k2: RealMatrix { data: -self.k2.as_matrix() } }
    }

    /// uᵀ(K₁, K₂) = u_a K₁ + u_b K₂ for an arbitrary coefficient vector.
    pub fn combine(&self, u: &Vector2C) -> CMatrix {
        let k1 = self.k1.as_matrix();
        let k2 = self.k2.as_matrix();
        CMatrix::from_fn(self.n(), self.n(), |i, j| u.a * k1[(i, j)] + u.b * k2[(i, j)])
    }
}

/// n×n matrix of i.i.d. standard normal entries (mean 0, variance 1).
pub fn sample_ginibre<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<RealMatrix> {
    if n == 0 {
        return Err(Error::InvalidDimension("Ginibre dimension must be at least 1".into()));
    }
    let data = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    Ok(RealMatrix { data })
}

fn check_dims(field: &MatrixField, real: &FieldRealization) -> Result<()> {
    if field.n != real.n() {
        return Err(Error::DimensionMismatch(format!("field has N = {} but realization has N = {}", field.n, real.n())));
    }
    Ok(())
}

/// K(p) = a(p)K₁ + b(p)K₂.
pub fn field_eval(field: &MatrixField, real: &FieldRealization, p: f64) -> Result<CMatrix> {
    check_dims(field, real)?;
    Ok(real.combine(&field.v(p)))
}

/// K′(p) = a′(p)K₁ + b′(p)K₂.
pub fn field_deriv(field: &MatrixField, real: &FieldRealization, p: f64) -> Result<CMatrix> {
    check_dims(field, real)?;
    Ok(real.combine(&field.dv(p)))
}

const SPHERICAL_RETRIES: usize = 100;

/// Y = K₁⁻¹K₂ for independent Ginibre K₁, K₂; K₁ is redrawn if numerically singular.
pub fn sample_spherical<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<RealMatrix> {
    for _ in 0..SPHERICAL_RETRIES {
        let k1 = sample_ginibre(n, rng)?;
        let k2 = sample_ginibre(n, rng)?;
        let lu = k1.data.clone().lu();
        let u = lu.u();
        let diag: Vec<f64> = (0..n).map(|i| u[(i, i)].abs()).collect();
        let max = diag.iter().cloned().fold(0.0, f64::max);
        let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min > 1e-13 * max) {
            continue;
        }
        if let Some(y) = lu.solve(&k2.data) {
            if y.iter().all(|x| x.is_finite()) {
                return Ok(RealMatrix { data: y });
            }
        }
    }
    Err(Error::Sampling(format!("K1 numerically singular in {SPHERICAL_RETRIES} consecutive draws")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigenvalues_real;
    use crate::rng::StreamSeed;

    #[test]
    fn ginibre_is_reproducible() {
        let s = StreamSeed::new(11);
        let a = sample_ginibre(4, &mut s.stream(0)).unwrap();
        let b = sample_ginibre(4, &mut s.stream(0)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.as_matrix().len(), 16);
        assert!(a.as_matrix().iter().all(|x| x.is_finite()));
        assert!(sample_ginibre(0, &mut s.stream(0)).is_err());
    }

    #[test]
    fn ginibre_moments() {
        let m = sample_ginibre(100, &mut StreamSeed::new(5).stream(0)).unwrap();
        let xs = m.as_matrix();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 4.0 / n.sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn trig_field_values() {
        let mut rng = StreamSeed::new(3).stream(0);
        let r = FieldRealization::sample(4, &mut rng).unwrap();
        let f = MatrixField::trig(4).unwrap();
        let k0 = field_eval(&f, &r, 0.0).unwrap();
        for (z, x) in k0.iter().zip(r.k1.as_matrix().iter()) {
            assert_eq!(z.im, 0.0);
            assert_eq!(z.re, *x);
        }
        let kh = field_eval(&f, &r, PI / 2.0).unwrap();
        for (z, x) in kh.iter().zip(r.k2.as_matrix().iter()) {
            assert!((z - C64::new(0.0, *x)).norm() < 1e-15);
        }
        let d0 = field_deriv(&f, &r, 0.0).unwrap();
        for (z, x) in d0.iter().zip(r.k2.as_matrix().iter()) {
            assert_eq!(*z, C64::new(0.0, *x));
        }
    }

    #[test]
    fn constant_fourier_field() {
        let mut rng = StreamSeed::new(4).stream(0);
        let r = FieldRealization::sample(2, &mut rng).unwrap();
        let f = MatrixField::fourier(2, vec![1.0, 0.0], vec![0.0]).unwrap();
        for p in [0.0, 0.7, 3.0] {
            let k = field_eval(&f, &r, p).unwrap();
            for (z, x) in k.iter().zip(r.k1.as_matrix().iter()) {
                assert!((z - C64::new(*x, 0.0)).norm() < 1e-15);
            }
            assert!(field_deriv(&f, &r, p).unwrap().iter().all(|z| z.norm() == 0.0));
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let mut rng = StreamSeed::new(8).stream(0);
        let r = FieldRealization::sample(4, &mut rng).unwrap();
        let fields = [MatrixField::trig(4).unwrap(), MatrixField::fourier(4, vec![0.3, -1.0, 0.5, 0.2], vec![1.0, 0.4, -0.7, 0.1]).unwrap()];
        let h = 1e-5;
        for f in &fields {
            for p in [0.1, 1.3, 4.0] {
                let fd = (field_eval(f, &r, p + h).unwrap() - field_eval(f, &r, p - h).unwrap()) / C64::new(2.0 * h, 0.0);
                let d = field_deriv(f, &r, p).unwrap();
                assert!((fd - d).iter().all(|z| z.norm() < 1e-8));
            }
        }
    }

    #[test]
    fn time_reversal_conjugation() {
        let seed = StreamSeed::new(9);
        let mut rng = seed.stream(0);
        let r = FieldRealization::sample(4, &mut rng).unwrap();
        let fields = [MatrixField::trig(4).unwrap(), MatrixField::fourier(4, vec![0.3, -1.0, 0.5, 0.2], vec![1.0, 0.4, -0.7, 0.1]).unwrap()];
        let mut prng = seed.stream(1);
        for f in &fields {
            for _ in 0..100 {
                let p: f64 = prng.random_range(-PI..PI);
                let a = field_eval(f, &r, p).unwrap().map(|z| z.conj());
                let b = field_eval(f, &r, -p).unwrap();
                assert!((a - b).iter().all(|z| z.norm() < 1e-13));
            }
        }
    }

    #[test]
    fn field_validation() {
        assert!(MatrixField::trig(3).is_err());
        assert!(MatrixField::trig(0).is_err());
        assert!(MatrixField::fourier(2, vec![0.0], vec![0.0]).is_err());
        // a = 1 + e^{ip}, b = 0 vanishes at p = π
        assert!(MatrixField::fourier(2, vec![1.0, 1.0], vec![0.0]).is_err());
        let r = FieldRealization::identity(4);
        assert!(field_eval(&MatrixField::trig(2).unwrap(), &r, 0.0).is_err());
    }

    #[test]
    fn rotation_leaves_field_invariant() {
        let mut rng = StreamSeed::new(10).stream(0);
        let r = FieldRealization::sample(4, &mut rng).unwrap();
        let f = MatrixField::trig(4).unwrap();
        let th = 0.83;
        let fr = f.clone().with_rotation(th);
        let rr = r.rotated(th);
        for p in [0.2, 2.5] {
            let a = field_eval(&f, &r, p).unwrap();
            let b = field_eval(&fr, &rr, p).unwrap();
            assert!((a - b).iter().all(|z| z.norm() < 1e-13));
        }
    }

    #[test]
    fn spherical_samples() {
        let seed = StreamSeed::new(12);
        let y = sample_spherical(2, &mut seed.stream(0)).unwrap();
        assert!(y.as_matrix().iter().all(|x| x.is_finite()));
        for k in 0..20 {
            let y = sample_spherical(6, &mut seed.stream(k)).unwrap();
            let ev = eigenvalues_real(y.as_matrix());
            let mut im: Vec<f64> = ev.iter().map(|z| z.im).filter(|v| v.abs() > 1e-12).collect();
            im.sort_by(|a, b| a.total_cmp(b));
            let n = im.len();
            for i in 0..n / 2 {
                assert!((im[i] + im[n - 1 - i]).abs() < 1e-10);
            }
            let d = ev.iter().fold(C64::new(1.0, 0.0), |a, b| a * b);
            assert!(d.im.abs() < 1e-10 * d.norm().max(1.0));
        }
    }
}
