//! Pfaffians, Cauchy/Vandermonde determinants, moment matrices and the
//! assembly of the generating function Z_{k|k}(q, p).

use crate::ensembles::MatrixField;
use crate::error::{Error, Result};
use crate::json::ComplexValue;
use crate::kernels::{
    bilinear_symplectic, check_pairing, kernel1, kernel2_with, kernel3_alternative, kernel3_reduced, Kernel3Route,
    KernelContext, KernelValue, RatioPolynomial,
};
use crate::linalg::{det, CMatrix};
use crate::pair::FunctionFamily;
use crate::specfun::Vector2C;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Relative tolerance of the A + Aᵀ = 0 check.
pub const SKEW_TOL: f64 = 1e-12;

/// A square complex matrix with A + Aᵀ = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewMatrix {
    entries: CMatrix,
}

impl SkewMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::InvalidDimension(format!(
                "skew matrix must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let scale = entries.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let d = entries.nrows();
        for i in 0..d {
            for j in i..d {
                let s = (entries[(i, j)] + entries[(j, i)]).norm();
                if s > SKEW_TOL * scale || !s.is_finite() {
                    return Err(Error::NotSkew(format!("|A[{i},{j}] + A[{j},{i}]| = {s:.3e} (scale {scale:.3e})")));
                }
            }
        }
        Ok(Self { entries })
    }

    /// Build from the strict upper triangle: A[i,j] = f(i, j) for i < j.
    pub fn from_upper(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in i + 1..dim {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = -v;
            }
        }
        Self { entries: m }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[(i, j)]
    }

    /// The matrix with rows and columns `i` and `j` removed.
    pub fn minor(&self, i: usize, j: usize) -> SkewMatrix {
        let keep: Vec<usize> = (0..self.dim()).filter(|&r| r != i && r != j).collect();
        let d = keep.len();
        Self { entries: CMatrix::from_fn(d, d, |r, c| self.entries[(keep[r], keep[c])]) }
    }
}

/// Pfaffian by Parlett–Reid elimination with column pivoting. Convention:
/// Pf [[0, 1], [−1, 0]] = 1, so Pf of a block-diagonal of such blocks is 1.
pub fn pfaffian(m: &SkewMatrix) -> Result<C64> {
    let n = m.dim();
    if n % 2 != 0 {
        return Err(Error::InvalidDimension(format!("Pfaffian needs an even dimension, got {n}")));
    }
    let mut a = m.entries.clone();
    let mut pf = ONE;
    for k in (0..n.saturating_sub(1)).step_by(2) {
        let mut kp = k + 1;
        let mut best = a[(k + 1, k)].norm();
        for r in k + 2..n {
            let v = a[(r, k)].norm();
            if v > best {
                best = v;
                kp = r;
            }
        }
        if kp != k + 1 {
            a.swap_rows(k + 1, kp);
            a.swap_columns(k + 1, kp);
            pf = -pf;
        }
        let piv = a[(k, k + 1)];
        if piv == ZERO {
            return Ok(ZERO);
        }
        pf *= piv;
        if k + 2 < n {
            let tau: Vec<C64> = (k + 2..n).map(|j| a[(k, j)] / piv).collect();
            let col: Vec<C64> = (k + 2..n).map(|i| a[(i, k + 1)]).collect();
            for (ii, i) in (k + 2..n).enumerate() {
                for (jj, j) in (k + 2..n).enumerate() {
                    a[(i, j)] += tau[ii] * col[jj] - col[ii] * tau[jj];
                }
            }
        }
    }
    Ok(pf)
}

/// Pfaffian with a first-order error bound from per-entry errors
/// (`errors[(i, j)]`, upper triangle used): ∂Pf/∂A_ij = ±Pf(minor_ij).
pub fn pfaffian_with_error(m: &SkewMatrix, errors: &DMatrix<f64>) -> Result<(C64, f64)> {
    let pf = pfaffian(m)?;
    let mut err = 0.0;
    for i in 0..m.dim() {
        for j in i + 1..m.dim() {
            let e = errors[(i, j)];
            if e > 0.0 {
                err += e * pfaffian(&m.minor(i, j))?.norm();
            }
        }
    }
    Ok((pf, err))
}

/// ∏_{a<b} (z_b − z_a).
pub fn vandermonde(z: &[C64]) -> C64 {
    let mut d = ONE;
    for b in 0..z.len() {
        for a in 0..b {
            d *= z[b] - z[a];
        }
    }
    d
}

/// Relative difference between Δ_N(z)·∏ 1/(κ̂ + z_j) and
/// (−1)^{N+1} det[z_a^{b−1} (b < N) | 1/(z_a + κ̂)].
pub fn berezinian_identity_check(z: &[C64], kappa_hat: C64) -> Result<f64> {
    let n = z.len();
    if n == 0 {
        return Err(Error::InvalidDimension("need at least one point".into()));
    }
    for &zj in z {
        if (zj + kappa_hat).norm() <= 1e-14 * (1.0 + zj.norm()) {
            return Err(Error::SingularArgument(format!("z = {zj} coincides with -kappa_hat")));
        }
    }
    let lhs = z.iter().fold(vandermonde(z), |acc, &zj| acc / (kappa_hat + zj));
    let m = CMatrix::from_fn(n, n, |a, b| if b + 1 < n { z[a].powi(b as i32) } else { 1.0 / (z[a] + kappa_hat) });
    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
    let rhs = sign * det(&m);
    let scale = lhs.norm().max(rhs.norm());
    Ok(if scale == 0.0 { 0.0 } else { (lhs - rhs).norm() / scale })
}

/// det[1/pair(v_{q_m}, v_{p_n})].
pub fn cauchy_berezinian(vq: &[Vector2C], vp: &[Vector2C]) -> Result<C64> {
    if vq.len() != vp.len() || vq.is_empty() {
        return Err(Error::DimensionMismatch(format!("need |q| = |p| >= 1, got {} and {}", vq.len(), vp.len())));
    }
    let k = vq.len();
    let mut m = CMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            m[(i, j)] = 1.0 / check_pairing(&vq[i], &vp[j])?;
        }
    }
    Ok(det(&m))
}

/// ln C_{μ,ν}^{(N)}, the normalization of the even-N joint eigenvalue density.
pub fn ln_norm_constant(n: usize, mu: f64, nu: f64) -> Result<f64> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::InvalidDimension(format!("norm constant needs even N >= 2, got {n}")));
    }
    let lg = |x: f64| -> Result<f64> {
        if x > 0.0 && x.is_finite() {
            Ok(ln_gamma(x))
        } else {
            Err(Error::Domain(format!("Gamma argument {x} is not positive (mu = {mu}, nu = {nu})")))
        }
    };
    let nf = n as f64;
    let m = n / 2;
    let mf = m as f64;
    let s = mu + nu;
    let mut acc = -0.5 * nf * 2f64.ln() + (-mf * mf + mf * (nf - 1.0) - nf * (nf - 1.0) / 4.0) * PI.ln() - lg(mf + 1.0)?;
    for j in 1..=n {
        let jf = j as f64;
        acc += lg(s + (nf + jf) / 2.0)? - lg(nu + jf / 2.0)? - lg(mu + jf / 2.0)?;
    }
    for j in 1..=m {
        let jf = j as f64;
        acc += lg(nf / 2.0 + s + 0.5)? + lg(nf / 2.0 + s + 1.0)? - lg(nf + s + 0.5 - jf)? - lg(nf + s + 1.0 - jf)?;
    }
    Ok(acc)
}

/// C_{μ,ν}^{(N)}.
pub fn norm_constant(n: usize, mu: f64, nu: f64) -> Result<f64> {
    ln_norm_constant(n, mu, nu).map(f64::exp)
}

/// Pf D^{(d)} for the weight of dimension N from the normalization:
/// 1/((d/2)!·C^{(d)}_{(N−d)/2, 0}).
pub fn moment_pfaffian_closed_form(n: usize, d: usize) -> Result<f64> {
    if d == 0 || d % 2 != 0 || d > n {
        return Err(Error::InvalidDimension(format!("need even 2 <= d <= N, got d = {d}, N = {n}")));
    }
    let mu = (n - d) as f64 / 2.0;
    Ok((-ln_norm_constant(d, mu, 0.0)? - ln_gamma(d as f64 / 2.0 + 1.0)).exp())
}

/// The skew moment matrix D_ab = 2∫g z₁^{a−1} z₂^{b−1} with per-entry errors.
#[derive(Debug, Clone)]
pub struct MomentMatrix {
    pub matrix: SkewMatrix,
    pub errors: DMatrix<f64>,
    pub evaluations: usize,
}

/// D^{(d)} for the weight of `ctx`, by quadrature on both reduced manifolds.
pub fn moment_matrix(d: usize, ctx: &KernelContext) -> Result<MomentMatrix> {
    if d == 0 || d > ctx.n {
        return Err(Error::InvalidDimension(format!("moment matrix needs 1 <= d <= N = {}, got {d}", ctx.n)));
    }
    let g = ctx.functional().moments(d)?;
    Ok(MomentMatrix {
        matrix: SkewMatrix::from_upper(d, |a, b| g.get(a, b)),
        errors: DMatrix::from_fn(d, d, |a, b| g.err(a, b)),
        evaluations: g.evaluations,
    })
}

/// Below this, min|b|/|v| over the q-vectors triggers a global rotation
/// before K̂₃ is evaluated.
pub const ROTATION_TRIGGER: f64 = 0.25;
const ROTATION_SCAN: usize = 720;

fn b_ratio(vs: &[Vector2C], theta: f64) -> f64 {
    vs.iter().map(|v| v.rotated(theta).b.norm() / v.norm()).fold(f64::INFINITY, f64::min)
}

/// SO(2) angle applied to all vectors so that every q-vector has a
/// well-conditioned b component; 0 when none is needed.
pub fn choose_rotation(vq: &[Vector2C]) -> f64 {
    if b_ratio(vq, 0.0) >= ROTATION_TRIGGER {
        return 0.0;
    }
    let mut best = (0.0, b_ratio(vq, 0.0));
    for s in 1..ROTATION_SCAN {
        let t = PI * s as f64 / ROTATION_SCAN as f64;
        let r = b_ratio(vq, t);
        if r > best.1 {
            best = (t, r);
        }
    }
    best.0
}

/// How the global rotation is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Rotation {
    #[default]
    Auto,
    Fixed(f64),
}

/// Analytic value of Z_{k|k} for explicit vectors, with bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assembly {
    pub value: C64,
    pub err_est: f64,
    pub rotation: f64,
    pub evaluations: usize,
    /// |error| of each K̂₂(p_m, q_n), row-major.
    pub kernel2_errors: Vec<f64>,
    /// |error| of each K̂₃(q_m, q_n), m < n in row-major order.
    pub kernel3_errors: Vec<f64>,
}

/// Z_{k|k}(q, p) = (−1)^{k(k−1)/2} Pf[[K̂₁, K̂₂], [−K̂₂ᵀ, K̂₃]] / det[1/pair(q_m, p_n)].
///
/// The sign factor converts the block layout to the interleaved ordering
/// (p₁, q₁, p₂, q₂, …) in which the k = 1 blocks sit on the diagonal.
pub fn assemble(
    vq: &[Vector2C],
    vp: &[Vector2C],
    ctx: &KernelContext,
    route: Kernel3Route,
    rotation: Rotation,
) -> Result<Assembly> {
    let k = vq.len();
    if k == 0 || vp.len() != k {
        return Err(Error::DimensionMismatch(format!("need |q| = |p| >= 1, got {} and {}", vq.len(), vp.len())));
    }
    let theta = match rotation {
        Rotation::Auto => choose_rotation(vq),
        Rotation::Fixed(t) => t,
    };
    let vq: Vec<Vector2C> = vq.iter().map(|v| v.rotated(theta)).collect();
    let vp: Vec<Vector2C> = vp.iter().map(|v| v.rotated(theta)).collect();

    let cauchy = cauchy_berezinian(&vq, &vp)?;
    let cauchy_scale: f64 = (0..k)
        .map(|i| (0..k).map(|j| 1.0 / bilinear_symplectic(&vq[i], &vp[j]).norm()).fold(0.0, f64::max))
        .product();
    if !(cauchy.norm() > 1e-12 * cauchy_scale) {
        return Err(Error::DegenerateMomenta("the Cauchy determinant vanishes (repeated momenta)".into()));
    }

    let polys: Vec<RatioPolynomial> =
        vq.par_iter().map(|v| RatioPolynomial::fit(v, ctx)).collect::<Result<Vec<_>>>()?;
    let mut k2 = vec![KernelValue::exact(ZERO); k * k];
    for m in 0..k {
        for n in 0..k {
            k2[m * k + n] = kernel2_with(&polys[n], &vp[m])?;
        }
    }
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|m| (m + 1..k).map(move |n| (m, n))).collect();
    let k3: Vec<KernelValue> = pairs
        .par_iter()
        .map(|&(m, n)| match route {
            Kernel3Route::Reduced => kernel3_reduced(&vq[m], &vq[n], ctx),
            Kernel3Route::Alternative => kernel3_alternative(&polys[m], &vq[n], ctx),
        })
        .collect::<Result<Vec<_>>>()?;

    let d = 2 * k;
    let mut a = CMatrix::zeros(d, d);
    let mut e = DMatrix::<f64>::zeros(d, d);
    for m in 0..k {
        for n in m + 1..k {
            let v = kernel1(&vp[m], &vp[n], ctx);
            a[(m, n)] = v;
            a[(n, m)] = -v;
        }
        for n in 0..k {
            let kv = k2[m * k + n];
            a[(m, k + n)] = kv.value;
            a[(k + n, m)] = -kv.value;
            e[(m, k + n)] = kv.err_est;
        }
    }
    for (&(m, n), kv) in pairs.iter().zip(&k3) {
        a[(k + m, k + n)] = kv.value;
        a[(k + n, k + m)] = -kv.value;
        e[(k + m, k + n)] = kv.err_est;
    }
    let skew = SkewMatrix::new(a).map_err(|err| Error::Internal(format!("assembled kernel matrix: {err}")))?;
    let (pf, pf_err) = pfaffian_with_error(&skew, &e)?;
    let sign = if (k * (k - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let evaluations = polys.iter().map(|p| p.evaluations).sum::<usize>() + k3.iter().map(|v| v.evaluations).sum::<usize>();
    Ok(Assembly {
        value: sign * pf / cauchy,
        err_est: pf_err / cauchy.norm(),
        rotation: theta,
        evaluations,
        kernel2_errors: k2.iter().map(|v| v.err_est).collect(),
        kernel3_errors: k3.iter().map(|v| v.err_est).collect(),
    })
}

/// Independent route to Z_{k|k}: with Y = K₁⁻¹K₂ and
/// f(z) = ∏(κ_{p_j} + z)/∏(κ_{q_j} + z),
/// Z = ∏(b_p/b_q)^N ⟨∏ f(z_j)⟩ = ∏(b_p/b_q)^N Pf[Dᶠ]/Pf[D],
/// where Dᶠ is the N×N moment matrix with f inserted in both variables.
pub fn z_debruijn(vq: &[Vector2C], vp: &[Vector2C], ctx: &KernelContext) -> Result<KernelValue> {
    let k = vq.len();
    if k == 0 || vp.len() != k {
        return Err(Error::DimensionMismatch(format!("need |q| = |p| >= 1, got {} and {}", vq.len(), vp.len())));
    }
    let theta = choose_rotation(vq);
    let vq: Vec<Vector2C> = vq.iter().map(|v| v.rotated(theta)).collect();
    let vp: Vec<Vector2C> = vp.iter().map(|v| v.rotated(theta)).collect();
    for v in vp.iter() {
        if !(v.b.norm() > 1e-12 * v.norm()) {
            return Err(Error::Domain("de Bruijn route needs b(p) != 0 after rotation".into()));
        }
    }
    let kq: Vec<C64> = vq.iter().map(|v| v.kappa()).collect();
    let kp: Vec<C64> = vp.iter().map(|v| v.kappa()).collect();
    let n = ctx.n;
    let poles: Vec<C64> = kq.iter().map(|&c| -c).collect();
    let fam = {
        let (kq, kp) = (kq.clone(), kp.clone());
        FunctionFamily::new(n, poles, move |z, out| {
            let mut f = ONE;
            for (a, b) in kp.iter().zip(&kq) {
                f *= (a + z) / (b + z);
            }
            for o in out.iter_mut() {
                *o = f;
                f *= z;
            }
        })
    };
    let g = ctx.functional().eval(&fam, &fam)?;
    let df = SkewMatrix::from_upper(n, |a, b| g.get(a, b) - g.get(b, a));
    let ef = DMatrix::from_fn(n, n, |a, b| g.err(a, b) + g.err(b, a));
    let (pf, pf_err) = pfaffian_with_error(&df, &ef)?;
    let pf_d = moment_pfaffian_closed_form(n, n)?;
    let mut pre = ONE;
    for (p, q) in vp.iter().zip(&vq) {
        pre *= (p.b / q.b).powi(n as i32);
    }
    Ok(KernelValue { value: pre * pf / pf_d, err_est: pre.norm() * pf_err / pf_d, evaluations: g.evaluations })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Momenta {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Budgets {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdiv: usize,
    pub evaluations: usize,
    pub kernel2_errors: Vec<f64>,
    pub kernel3_errors: Vec<f64>,
}

/// Z_{k|k}(q, p) for a matrix field, ready for JSON emission.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZResult {
    pub value: ComplexValue,
    pub err_est: f64,
    pub k: usize,
    pub n: usize,
    pub momenta: Momenta,
    pub rotation: f64,
    pub route: Kernel3Route,
    pub budgets: Budgets,
}

impl ZResult {
    pub fn complex(&self) -> C64 {
        self.value.into()
    }
}

pub fn z_generating(
    field: &MatrixField,
    q: &[f64],
    p: &[f64],
    ctx: &KernelContext,
    route: Kernel3Route,
) -> Result<ZResult> {
    if field.n != ctx.n {
        return Err(Error::DimensionMismatch(format!("field has N = {} but the kernels use N = {}", field.n, ctx.n)));
    }
    field.validate()?;
    let vq: Vec<Vector2C> = q.iter().map(|&x| field.v(x)).collect();
    let vp: Vec<Vector2C> = p.iter().map(|&x| field.v(x)).collect();
    let a = assemble(&vq, &vp, ctx, route, Rotation::Auto)?;
    Ok(ZResult {
        value: a.value.into(),
        err_est: a.err_est,
        k: q.len(),
        n: ctx.n,
        momenta: Momenta { q: q.to_vec(), p: p.to_vec() },
        rotation: a.rotation,
        route,
        budgets: Budgets {
            rel_tol: ctx.quad.rel_tol,
            abs_tol: ctx.quad.abs_tol,
            max_subdiv: ctx.quad.max_subdiv,
            evaluations: a.evaluations,
            kernel2_errors: a.kernel2_errors,
            kernel3_errors: a.kernel3_errors,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::QuadConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use statrs::function::gamma::gamma;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_skew(d: usize, rng: &mut ChaCha8Rng) -> SkewMatrix {
        SkewMatrix::from_upper(d, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn elementary_pfaffians() {
        let j = SkewMatrix::from_upper(2, |_, _| ONE);
        assert_eq!(pfaffian(&j).unwrap(), ONE);
        let blocks = SkewMatrix::from_upper(6, |i, jj| if i % 2 == 0 && jj == i + 1 { ONE } else { ZERO });
        assert!((pfaffian(&blocks).unwrap() - ONE).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_skew(4, &mut rng);
        let g = |i: usize, j: usize| a.get(i - 1, j - 1);
        let expect = g(1, 2) * g(3, 4) - g(1, 3) * g(2, 4) + g(1, 4) * g(2, 3);
        assert!((pfaffian(&a).unwrap() - expect).norm() < 1e-14);
        assert_eq!(pfaffian(&SkewMatrix::from_upper(0, |_, _| ONE)).unwrap(), ONE);
    }

    #[test]
    fn pfaffian_rejects_bad_input() {
        assert!(matches!(pfaffian(&SkewMatrix::from_upper(3, |_, _| ONE)), Err(Error::InvalidDimension(_))));
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = ONE;
        m[(1, 0)] = ONE;
        assert!(matches!(SkewMatrix::new(m), Err(Error::NotSkew(_))));
    }

    #[test]
    fn pfaffian_needs_pivoting() {
        // leading pivot is zero
        let a = SkewMatrix::from_upper(4, |i, j| match (i, j) {
            (0, 1) => ZERO,
            (0, 2) => ONE,
            (1, 3) => c(2.0, 0.0),
            (2, 3) => c(0.5, 0.0),
            _ => ZERO,
        });
        // a₁₂a₃₄ − a₁₃a₂₄ + a₁₄a₂₃ = −2
        assert!((pfaffian(&a).unwrap() - c(-2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn vandermonde_examples() {
        assert_eq!(vandermonde(&[c(3.0, 1.0)]), ONE);
        assert_eq!(vandermonde(&[ZERO, ONE, c(2.0, 0.0)]), c(2.0, 0.0));
        assert_eq!(vandermonde(&[ONE, c(2.0, 0.0), ONE]), ZERO);
    }

    #[test]
    fn berezinian_identity_small_cases() {
        // N = 2 by hand: (z₂ − z₁)/((κ+z₁)(κ+z₂)) = −det[[1, 1/(z₁+κ)], [1, 1/(z₂+κ)]]
        let d = berezinian_identity_check(&[c(0.2, 0.1), c(-1.0, 0.4)], c(0.7, 0.3)).unwrap();
        assert!(d < 1e-12, "{d}");
        let d = berezinian_identity_check(&[c(0.2, 0.1), c(-1.0, 0.4), c(0.5, -0.9), c(1.5, 0.0)], c(0.7, 0.3)).unwrap();
        assert!(d < 1e-10, "{d}");
        let kh = c(0.7, 0.3);
        assert!(matches!(berezinian_identity_check(&[ONE, -kh], kh), Err(Error::SingularArgument(_))));
    }

    #[test]
    fn cauchy_k1_and_k2() {
        let q = [Vector2C::real(1.0, 0.5), Vector2C::new(c(0.3, 0.2), c(1.0, 0.0))];
        let p = [Vector2C::real(0.2, 1.0), Vector2C::new(c(1.0, 0.0), c(0.0, 0.7))];
        let one = cauchy_berezinian(&q[..1], &p[..1]).unwrap();
        assert!((one - 1.0 / bilinear_symplectic(&q[0], &p[0])).norm() < 1e-15);
        let two = cauchy_berezinian(&q, &p).unwrap();
        let e = |i: usize, j: usize| 1.0 / bilinear_symplectic(&q[i], &p[j]);
        assert!((two - (e(0, 0) * e(1, 1) - e(0, 1) * e(1, 0))).norm() < 1e-14);
        // Cauchy closed form in κ: pair(q,p) = b_q b_p (κ_q − κ_p)
        let (kq, kp): (Vec<C64>, Vec<C64>) = (q.iter().map(|v| v.kappa()).collect(), p.iter().map(|v| v.kappa()).collect());
        let bb: C64 = q.iter().chain(&p).map(|v| v.b).product();
        let closed = (kq[1] - kq[0]) * (kp[0] - kp[1])
            / ((kq[0] - kp[0]) * (kq[0] - kp[1]) * (kq[1] - kp[0]) * (kq[1] - kp[1]))
            / bb;
        assert!((two - closed).norm() < 1e-12 * two.norm(), "{two} vs {closed}");
        let swapped = cauchy_berezinian(&[q[1], q[0]], &p).unwrap();
        assert!((swapped + two).norm() < 1e-14);
        let err = cauchy_berezinian(&q[..1], &q[..1]).unwrap_err();
        assert!(matches!(err, Error::DegenerateMomenta(_)));
    }

    fn norm_constant_direct(n: usize, mu: f64, nu: f64) -> f64 {
        let nf = n as f64;
        let m = (n / 2) as f64;
        let mut v = 2f64.powf(-nf / 2.0) * PI.powf(-m * m + m * (nf - 1.0) - nf * (nf - 1.0) / 4.0) / gamma(m + 1.0);
        for j in 1..=n {
            let j = j as f64;
            v *= gamma(mu + nu + (nf + j) / 2.0) / (gamma(nu + j / 2.0) * gamma(mu + j / 2.0));
        }
        for j in 1..=n / 2 {
            let j = j as f64;
            let s = mu + nu;
            v *= gamma(nf / 2.0 + s + 0.5) * gamma(nf / 2.0 + s + 1.0) / (gamma(nf + s + 0.5 - j) * gamma(nf + s + 1.0 - j));
        }
        v
    }

    #[test]
    fn norm_constant_values() {
        assert!((norm_constant(2, 0.0, 0.0).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!((norm_constant(4, 0.0, 0.0).unwrap() - 9.0 / (8.0 * PI * PI)).abs() < 1e-14);
        assert!((norm_constant(2, 1.0, 0.0).unwrap() - 3.0 / (2.0 * PI)).abs() < 1e-14);
        for &(n, mu, nu) in &[(2, 0.0, 0.0), (4, 0.5, 0.0), (6, 1.0, 0.5), (8, 0.0, 1.0)] {
            let a = norm_constant(n, mu, nu).unwrap();
            let b = norm_constant_direct(n, mu, nu);
            assert!((a - b).abs() < 1e-12 * b, "{n} {mu} {nu}: {a} vs {b}");
        }
        assert!(matches!(norm_constant(2, -1.0, 0.0), Err(Error::Domain(_))));
        assert!(norm_constant(3, 0.0, 0.0).is_err());
    }

    #[test]
    fn moment_pfaffian_ratio_closed_form() {
        let r = moment_pfaffian_closed_form(4, 2).unwrap() / moment_pfaffian_closed_form(4, 4).unwrap();
        assert!((r - 3.0 / (2.0 * PI)).abs() < 1e-14);
    }

    #[test]
    fn moment_matrix_n2_matches_normalization() {
        let ctx = KernelContext::new(2, QuadConfig::default()).unwrap();
        let d = moment_matrix(2, &ctx).unwrap();
        assert_eq!(d.matrix.get(0, 0), ZERO);
        let pf = pfaffian(&d.matrix).unwrap();
        let expect = moment_pfaffian_closed_form(2, 2).unwrap();
        assert!((pf - expect).norm() < 1e-6 * expect, "{pf} vs {expect}");
    }

    #[test]
    fn rotation_only_when_needed() {
        assert_eq!(choose_rotation(&[Vector2C::real(0.0, 1.0)]), 0.0);
        let t = choose_rotation(&[Vector2C::real(1.0, 0.0)]);
        assert!((t - PI / 2.0).abs() < 1e-2, "{t}");
        let rot = Vector2C::real(1.0, 0.0).rotated(t);
        assert!(rot.b.norm() > 0.99);
    }
}
