//! The three kernel functions and the averages they are built from.
//!
//! Notation: for v = (a, b), w = (a′, b′)
//! pair(v, w) = a b′ − b a′ and inner(v, w) = a a′ + b b′, both SO(2) invariant.
//! κ̂ = inner/pair. F(κ̂) = ⟨1/det(κ̂ + Y)⟩ over the spherical ensemble is the
//! one nontrivial average; it splits into a real-eigenvalue part I_R (closed
//! form) and a conjugate-pair part I_C (plane quadrature).

use crate::error::{Error, Result};
use crate::pair::{FunctionFamily, PairFunctional};
use crate::quad::{integrate_1d_breaks, integrate_1d_pv, Domain, QuadConfig, QuadResult};
use crate::specfun::{gen_binom, hyp2f1_series, PairWeightParams, Vector2C};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Relative size below which a symplectic pairing counts as zero.
pub const DEGENERATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelContext {
    pub n: usize,
    pub quad: QuadConfig,
}

impl KernelContext {
    pub fn new(n: usize, quad: QuadConfig) -> Result<Self> {
        PairWeightParams::new(n)?;
        quad.validate()?;
        Ok(Self { n, quad })
    }

    pub fn params(&self) -> PairWeightParams {
        PairWeightParams::new(self.n).expect("validated at construction")
    }

    pub fn functional(&self) -> PairFunctional {
        PairFunctional::new(self.params(), self.quad)
    }

    /// N(N−1)/(4π).
    pub fn prefactor(&self) -> f64 {
        let n = self.n as f64;
        n * (n - 1.0) / (4.0 * PI)
    }
}

/// A kernel or average together with its propagated quadrature error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelValue {
    pub value: C64,
    pub err_est: f64,
    pub evaluations: usize,
}

impl KernelValue {
    pub fn exact(value: C64) -> Self {
        Self { value, err_est: 0.0, evaluations: 0 }
    }

    fn scaled(self, s: C64) -> Self {
        Self { value: self.value * s, err_est: self.err_est * s.norm(), evaluations: self.evaluations }
    }
}

impl From<QuadResult> for KernelValue {
    fn from(q: QuadResult) -> Self {
        Self { value: q.value, err_est: q.err_est, evaluations: q.evaluations }
    }
}

/// a_v b_w − b_v a_w, i.e. i vᵀτ₂w with τ₂ = [[0, −i], [i, 0]].
#[inline]
pub fn bilinear_symplectic(v: &Vector2C, w: &Vector2C) -> C64 {
    v.a * w.b - v.b * w.a
}

/// vᵀw = a_v a_w + b_v b_w (no conjugation).
#[inline]
pub fn inner(v: &Vector2C, w: &Vector2C) -> C64 {
    v.a * w.a + v.b * w.b
}

pub(crate) fn check_pairing(v: &Vector2C, w: &Vector2C) -> Result<C64> {
    let p = bilinear_symplectic(v, w);
    if !(p.norm() > DEGENERATE_TOL * v.norm() * w.norm()) {
        return Err(Error::DegenerateMomenta(format!(
            "pairing of ({}, {}) and ({}, {}) vanishes: {p}",
            v.a, v.b, w.a, w.b
        )));
    }
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaHat {
    pub value: C64,
}

impl KappaHat {
    pub fn new(value: C64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::Domain(format!("kappa-hat must be finite, got {value}")));
        }
        Ok(Self { value })
    }

    /// κ̂ = inner(v, w)/pair(v, w).
    pub fn from_vectors(v: &Vector2C, w: &Vector2C) -> Result<Self> {
        let p = check_pairing(v, w)?;
        Self::new(inner(v, w) / p)
    }

    pub fn is_real(&self) -> bool {
        self.value.im.abs() <= 1e-12 * (1.0 + self.value.norm())
    }
}

/// Ξ₁ = ⟨det(a₁K₁+b₁K₂) det(a₂K₁+b₂K₂)⟩/⟨det²K₁⟩ = (a₁a₂ + b₁b₂)^{N−2}.
pub fn xi1(a1: C64, b1: C64, a2: C64, b2: C64, n: usize) -> C64 {
    (a1 * a2 + b1 * b2).powi(n as i32 - 2)
}

fn i_r_prefactor(ctx: &KernelContext) -> f64 {
    let n = ctx.n as f64;
    let sign = if (ctx.n / 2) % 2 == 0 { 1.0 } else { -1.0 };
    sign * 2.0 * PI * ctx.params().beta() / (n - 1.0)
}

fn i_r_sum(k: C64, ctx: &KernelContext) -> C64 {
    let n = ctx.n;
    let alpha = (n as f64 - 1.0) / 2.0;
    let q = ONE + k * k;
    let mut s = ZERO;
    for l in 0..n {
        let sign = if (n - 1 - l) % 2 == 0 { 1.0 } else { -1.0 };
        s += sign * gen_binom(alpha, l) / q.powi((n - l) as i32);
    }
    s += (-(k * k)).powf(alpha) / q.powi(n as i32);
    i_r_prefactor(ctx) * s
}

/// I_R(κ̂) by the residue-theorem finite sum (principal branch). Real κ̂ is
/// the average of the limits from κ̂ ± iε, which reproduces the principal
/// value; a non-real average signals an inconsistent limit and is an error.
pub fn i_r(kh: &KappaHat, ctx: &KernelContext) -> Result<C64> {
    let k = kh.value;
    let q = ONE + k * k;
    if q.norm() <= 1e-14 {
        return Err(Error::SingularArgument(format!("1 + kappa-hat^2 vanishes at kappa-hat = {k}")));
    }
    if !kh.is_real() {
        return Ok(i_r_sum(k, ctx));
    }
    let eps = 1e-8 * k.norm().max(1.0);
    let up = i_r_sum(C64::new(k.re, eps), ctx);
    let dn = i_r_sum(C64::new(k.re, -eps), ctx);
    let avg = 0.5 * (up + dn);
    if avg.im.abs() > 1e-6 * avg.norm().max(1e-3) {
        return Err(Error::Internal(format!(
            "one-sided limits of I_R at real kappa-hat {} do not average to a real value: {avg}",
            k.re
        )));
    }
    Ok(C64::new(avg.re, 0.0))
}

/// I_R from its defining integral 2B/(N−1) ∫ x^{N−1}(1+x²)^{−N}/(x+κ̂) dx,
/// as a principal value when κ̂ is real.
pub fn i_r_quadrature(kh: &KappaHat, ctx: &KernelContext) -> Result<QuadResult> {
    let n = ctx.n as i32;
    let k = kh.value;
    let scale = 2.0 * ctx.params().beta() / (ctx.n as f64 - 1.0);
    let weight = move |x: f64| x.powi(n - 1) * (1.0 + x * x).powi(-n);
    let r = if kh.is_real() {
        let x0 = -k.re;
        let f = |x: f64| C64::new(weight(x) / (x + k.re), 0.0);
        let w = 10.0 + x0.abs();
        let mut mid = integrate_1d_pv(f, x0, x0 - w, x0 + w, &ctx.quad)?;
        for (lo, hi) in [(f64::NEG_INFINITY, x0 - w), (x0 + w, f64::INFINITY)] {
            let t = integrate_1d_breaks(f, &Domain::new(lo, hi), &ctx.quad);
            mid.value += t.value;
            mid.err_est += t.err_est;
            mid.evaluations += t.evaluations;
            mid.converged &= t.converged;
        }
        mid
    } else {
        let dom = Domain::real_line().with_breaks([-k.re]);
        integrate_1d_breaks(|x| weight(x) / (x + k), &dom, &ctx.quad)
    };
    let mut r = r.require_converged("I_R quadrature")?;
    r.value *= scale;
    r.err_est *= scale;
    Ok(r)
}

/// I_R through ₂F₁(1, (N+1)/2; N+1; 1+κ̂²), valid for |1+κ̂²| < 1.
pub fn i_r_hyp2f1(kh: &KappaHat, ctx: &KernelContext) -> Result<C64> {
    let n = ctx.n as f64;
    let x = ONE + kh.value * kh.value;
    let f = hyp2f1_series(1.0, (n + 1.0) / 2.0, n + 1.0, x)?;
    Ok(i_r_prefactor(ctx) * gen_binom((n - 1.0) / 2.0, ctx.n) * f)
}

/// Production I_R: the finite sum, except close to κ̂² = −1 where the sum
/// cancels catastrophically and the defining integral is used instead.
pub fn i_r_auto(kh: &KappaHat, ctx: &KernelContext) -> Result<KernelValue> {
    let q = ONE + kh.value * kh.value;
    if q.norm().powi(ctx.n as i32) < 1e-6 {
        return Ok(i_r_quadrature(kh, ctx)?.into());
    }
    Ok(KernelValue::exact(i_r(kh, ctx)?))
}

/// I_C(κ̂) = 2i ∫ d[z] sgn(ℑz) z^{N−2}/(z̄+κ̂) Q/|1+z²|^{N+1}.
pub fn i_c(kh: &KappaHat, ctx: &KernelContext) -> Result<KernelValue> {
    let n = ctx.n;
    let k = kh.value;
    let phi = FunctionFamily::new(1, Vec::new(), move |z, out| out[0] = z.powi(n as i32 - 2));
    let psi = FunctionFamily::linear_inverse(k, ONE);
    let r = ctx.functional().complex_part(&phi, &psi)?;
    if !r.converged {
        return Err(Error::NotConverged(format!("I_C at kappa-hat {k}: error estimate {:.3e}", r.errors[0])));
    }
    Ok(KernelValue { value: r.values[0], err_est: r.errors[0], evaluations: r.evaluations })
}

/// F(κ̂) = ⟨1/det(κ̂ + Y)⟩ = −N(N−1)/(4π)·[I_R(κ̂) + I_C(κ̂)].
pub fn inv_det_average(kh: &KappaHat, ctx: &KernelContext) -> Result<KernelValue> {
    let ir = i_r_auto(kh, ctx)?;
    let ic = i_c(kh, ctx)?;
    let s = -ctx.prefactor();
    Ok(KernelValue {
        value: s * (ir.value + ic.value),
        err_est: s.abs() * (ir.err_est + ic.err_est),
        evaluations: ir.evaluations + ic.evaluations,
    })
}

/// Ξ₂(v₁, v₂) = ⟨det(v₁·K)/det(v₂·K)⟩ for real v₁, by rotating v₁ onto the
/// first axis: (v₁ᵀv₁/pair)^N·F(κ̂).
pub fn xi2_closed_form(v1: &Vector2C, v2: &Vector2C, ctx: &KernelContext) -> Result<KernelValue> {
    if !v1.is_real(1e-12) {
        return Err(Error::Domain("the closed form needs a real numerator vector; use xi2".into()));
    }
    let v1 = Vector2C::real(v1.a.re, v1.b.re);
    let p = check_pairing(&v1, v2)?;
    let kh = KappaHat::new(inner(&v1, v2) / p)?;
    let f = inv_det_average(&kh, ctx)?;
    Ok(f.scaled((inner(&v1, &v1) / p).powi(ctx.n as i32)))
}

/// Ξ₂(·, v_den) as the homogeneous degree-N polynomial of the numerator
/// vector, P(a, b) = Σₗ dₗ (a+ib)ˡ (a−ib)^{N−l}. The coefficients are fitted
/// exactly from N+1 real directions, where the closed form holds; this is
/// the analytic continuation to complex numerator vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioPolynomial {
    pub n: usize,
    pub denominator: Vector2C,
    pub coeffs: Vec<C64>,
    /// Uniform error bound on every coefficient.
    pub coeff_err: f64,
    pub evaluations: usize,
}

/// Offset of the fitting directions; any value avoiding the denominator's
/// own direction works.
const FIT_OFFSET: f64 = 0.1;

impl RatioPolynomial {
    pub fn fit(v_den: &Vector2C, ctx: &KernelContext) -> Result<Self> {
        let n = ctx.n;
        let m = n + 1;
        let mut samples = Vec::with_capacity(m);
        let mut err = 0.0;
        let mut evals = 0;
        let thetas: Vec<f64> = (0..m).map(|k| FIT_OFFSET + k as f64 * PI / m as f64).collect();
        for &t in &thetas {
            let s = xi2_closed_form(&Vector2C::direction(t), v_den, ctx)?;
            err += s.err_est;
            evals += s.evaluations;
            samples.push(s.value);
        }
        let mut coeffs = vec![ZERO; m];
        for (l, c) in coeffs.iter_mut().enumerate() {
            let mut acc = ZERO;
            for (k, &t) in thetas.iter().enumerate() {
                acc += samples[k] * C64::from_polar(1.0, (n as f64 - 2.0 * l as f64) * t);
            }
            *c = acc / m as f64;
        }
        Ok(Self { n, denominator: *v_den, coeffs, coeff_err: err / m as f64, evaluations: evals })
    }

    fn basis(&self, v: &Vector2C) -> Vec<C64> {
        let i = C64::new(0.0, 1.0);
        let (u, w) = (v.a + i * v.b, v.a - i * v.b);
        (0..=self.n).map(|l| u.powi(l as i32) * w.powi((self.n - l) as i32)).collect()
    }

    pub fn eval(&self, v: &Vector2C) -> KernelValue {
        let basis = self.basis(v);
        let value = self.coeffs.iter().zip(&basis).map(|(c, b)| c * b).sum();
        let err_est = self.coeff_err * basis.iter().map(|b| b.norm()).sum::<f64>();
        KernelValue { value, err_est, evaluations: self.evaluations }
    }

    /// Coefficients (c₀, …, c_N) of z ↦ P(z, −1), with a matching bound on
    /// each coefficient's error.
    pub fn z_polynomial(&self) -> (Vec<C64>, Vec<f64>) {
        let n = self.n;
        let i = C64::new(0.0, 1.0);
        let mut out = vec![ZERO; n + 1];
        let mut abs = vec![0.0; n + 1];
        for (l, &d) in self.coeffs.iter().enumerate() {
            // (z − i)ˡ (z + i)^{N−l}
            let mut p = vec![ONE];
            for _ in 0..l {
                p = poly_mul_linear(&p, -i);
            }
            for _ in l..n {
                p = poly_mul_linear(&p, i);
            }
            for (j, c) in p.iter().enumerate() {
                out[j] += d * c;
                abs[j] += c.norm();
            }
        }
        (out, abs.into_iter().map(|a| a * self.coeff_err).collect())
    }
}

/// p(z)·(z + r).
fn poly_mul_linear(p: &[C64], r: C64) -> Vec<C64> {
    let mut q = vec![ZERO; p.len() + 1];
    for (j, &c) in p.iter().enumerate() {
        q[j] += c * r;
        q[j + 1] += c;
    }
    q
}

/// Ξ₂(v₁, v₂) = ⟨det(v₁·K)/det(v₂·K)⟩ for arbitrary complex vectors.
pub fn xi2(v1: &Vector2C, v2: &Vector2C, ctx: &KernelContext) -> Result<KernelValue> {
    if v1.is_real(1e-12) {
        return xi2_closed_form(v1, v2, ctx);
    }
    check_pairing(v1, v2)?;
    Ok(RatioPolynomial::fit(v2, ctx)?.eval(v1))
}

/// K̂₁(p_m, p_n) = N(N−1)/(4π)·pair(v_n, v_m)·inner(v_m, v_n)^{N−2}.
pub fn kernel1(v_m: &Vector2C, v_n: &Vector2C, ctx: &KernelContext) -> C64 {
    ctx.prefactor() * bilinear_symplectic(v_n, v_m) * inner(v_m, v_n).powi(ctx.n as i32 - 2)
}

/// K̂₂(p, q) = Z_{1|1}(q, p)/pair(v_q, v_p).
pub fn kernel2(v_p: &Vector2C, v_q: &Vector2C, ctx: &KernelContext) -> Result<KernelValue> {
    let pq = check_pairing(v_q, v_p)?;
    Ok(xi2(v_p, v_q, ctx)?.scaled(1.0 / pq))
}

/// K̂₂ reusing a fitted polynomial for the q-vector.
pub fn kernel2_with(poly: &RatioPolynomial, v_p: &Vector2C) -> Result<KernelValue> {
    let pq = check_pairing(&poly.denominator, v_p)?;
    Ok(poly.eval(v_p).scaled(1.0 / pq))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Kernel3Route {
    /// J₁ − N(N−1)/(4π)·J₂ with J₂ factorized into one-pair moments.
    #[default]
    Reduced,
    /// Single pair integral against the continued ratio polynomial.
    Alternative,
}

impl fmt::Display for Kernel3Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kernel3Route::Reduced => "reduced",
            Kernel3Route::Alternative => "alternative",
        })
    }
}

impl FromStr for Kernel3Route {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reduced" => Ok(Kernel3Route::Reduced),
            "alternative" => Ok(Kernel3Route::Alternative),
            other => Err(Error::Domain(format!("unknown K3 route '{other}' (expected reduced or alternative)"))),
        }
    }
}

/// Below this |b|/|v| the 1/bᴺ prefactor of K̂₃ is considered ill-conditioned.
pub const B_COMPONENT_TOL: f64 = 1e-12;

fn check_b(v: &Vector2C) -> Result<()> {
    if !(v.b.norm() > B_COMPONENT_TOL * v.norm()) {
        return Err(Error::Domain(format!(
            "K3 needs b != 0 (got v = ({}, {})); apply a global rotation first",
            v.a, v.b
        )));
    }
    Ok(())
}

/// K̂₃(q_m, q_n) by the chosen route.
pub fn kernel3(v_m: &Vector2C, v_n: &Vector2C, ctx: &KernelContext, route: Kernel3Route) -> Result<KernelValue> {
    match route {
        Kernel3Route::Reduced => kernel3_reduced(v_m, v_n, ctx),
        Kernel3Route::Alternative => kernel3_alternative(&RatioPolynomial::fit(v_m, ctx)?, v_n, ctx),
    }
}

/// One-pair moments M_v(j) = G[zʲ, 1/(a+bz)], j = 0..N.
pub fn pair_moments(v: &Vector2C, ctx: &KernelContext) -> Result<(Vec<C64>, Vec<f64>, usize)> {
    let g = ctx.functional().eval(&FunctionFamily::monomials(ctx.n), &FunctionFamily::linear_inverse(v.a, v.b))?;
    Ok((g.values, g.errors, g.evaluations))
}

pub fn kernel3_reduced(v_m: &Vector2C, v_n: &Vector2C, ctx: &KernelContext) -> Result<KernelValue> {
    check_b(v_m)?;
    check_b(v_n)?;
    let n = ctx.n;
    let g = ctx.functional();
    let j1 = g.eval(&FunctionFamily::linear_inverse(v_m.a, v_m.b), &FunctionFamily::linear_inverse(v_n.a, v_n.b))?;
    let (mm, em, ev_m) = pair_moments(v_m, ctx)?;
    let (mn, en, ev_n) = pair_moments(v_n, ctx)?;
    // (z₃ − z₁)(z₁z₃ + 1)^{N−2} = Σᵢ C(N−2, i) z₁ⁱz₃ⁱ (z₃ − z₁)
    let mut j2 = ZERO;
    let mut j2_err = 0.0;
    for i in 0..=n - 2 {
        let c = gen_binom((n - 2) as f64, i);
        j2 += c * (mm[i] * mn[i + 1] - mm[i + 1] * mn[i]);
        j2_err += c
            * (mm[i].norm() * en[i + 1]
                + em[i] * mn[i + 1].norm()
                + mm[i + 1].norm() * en[i]
                + em[i + 1] * mn[i].norm());
    }
    let pre = ctx.prefactor();
    let scale = (v_m.b * v_n.b).powi(-(n as i32));
    Ok(KernelValue {
        value: scale * (j1.get(0, 0) - pre * j2),
        err_est: scale.norm() * (j1.err(0, 0) + pre * j2_err),
        evaluations: j1.evaluations + ev_m + ev_n,
    })
}

/// K̂₃ as b_n^{−N}·G[P_m(z, −1)/(a_m + b_m z), 1/(a_n + b_n z)], with P_m the
/// ratio polynomial whose denominator is v_m.
pub fn kernel3_alternative(poly_m: &RatioPolynomial, v_n: &Vector2C, ctx: &KernelContext) -> Result<KernelValue> {
    let v_m = poly_m.denominator;
    check_b(&v_m)?;
    check_b(v_n)?;
    let n = ctx.n;
    let (c, c_err) = poly_m.z_polynomial();
    let (a, b) = (v_m.a, v_m.b);
    let phi = FunctionFamily::new(n + 1, vec![-a / b], move |z, out| {
        let mut p = 1.0 / (a + b * z);
        for o in out.iter_mut() {
            *o = p;
            p *= z;
        }
    });
    let g = ctx.functional().eval(&phi, &FunctionFamily::linear_inverse(v_n.a, v_n.b))?;
    let mut value = ZERO;
    let mut err = 0.0;
    for j in 0..=n {
        value += c[j] * g.get(j, 0);
        err += c[j].norm() * g.err(j, 0) + c_err[j] * g.get(j, 0).norm();
    }
    let scale = v_n.b.powi(-(n as i32));
    Ok(KernelValue {
        value: scale * value,
        err_est: scale.norm() * err,
        evaluations: g.evaluations + poly_m.evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(n: usize) -> KernelContext {
        KernelContext::new(n, QuadConfig::default()).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn symplectic_pairing() {
        let v = Vector2C::new(c(0.3, 1.0), c(-2.0, 0.5));
        let w = Vector2C::real(0.0, 1.0);
        assert_eq!(bilinear_symplectic(&v, &v), ZERO);
        assert_eq!(bilinear_symplectic(&Vector2C::real(1.0, 0.0), &w), ONE);
        assert_eq!(bilinear_symplectic(&v, &w), -bilinear_symplectic(&w, &v));
        // τ₂ contraction oracle
        let tau2 = [[ZERO, c(0.0, -1.0)], [c(0.0, 1.0), ZERO]];
        let (vv, ww) = ([v.a, v.b], [w.a, w.b]);
        let mut s = ZERO;
        for i in 0..2 {
            for j in 0..2 {
                s += vv[i] * tau2[i][j] * ww[j];
            }
        }
        assert!((c(0.0, 1.0) * s - bilinear_symplectic(&v, &w)).norm() < 1e-15);
    }

    #[test]
    fn xi1_values() {
        assert_eq!(xi1(ONE, ZERO, ONE, ZERO, 6), ONE);
        assert_eq!(xi1(ONE, ONE, ONE, -ONE, 4), ZERO);
        assert_eq!(xi1(c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0), 4), c(121.0, 0.0));
    }

    #[test]
    fn kernel1_closed_form() {
        let k = kernel1(&Vector2C::real(1.0, 0.0), &Vector2C::real(1.0, 1.0), &ctx(4));
        assert!((k.re + 3.0 / PI).abs() < 1e-15 && k.im == 0.0);
        let v = Vector2C::new(c(0.4, 0.1), c(0.2, -0.9));
        assert_eq!(kernel1(&v, &v, &ctx(4)), ZERO);
    }

    #[test]
    fn i_r_at_zero() {
        let kh = KappaHat::new(ZERO).unwrap();
        let want = PI * PI / 64.0;
        let s = i_r(&kh, &ctx(4)).unwrap();
        let q = i_r_quadrature(&kh, &ctx(4)).unwrap();
        assert!((s.re - want).abs() < 1e-12 && s.im.abs() < 1e-12, "{s}");
        assert!((q.value.re - want).abs() < 1e-9, "{}", q.value);
    }

    #[test]
    fn i_r_sum_matches_quadrature_off_axis() {
        for &(re, im) in &[(0.5, 0.5), (0.3, -0.5), (-0.2, 1.3), (2.0, -0.1), (-1.5, 0.7)] {
            for n in [2usize, 4, 6] {
                let kh = KappaHat::new(c(re, im)).unwrap();
                let s = i_r(&kh, &ctx(n)).unwrap();
                let q = i_r_quadrature(&kh, &ctx(n)).unwrap();
                assert!((s - q.value).norm() < 1e-8 * (1.0 + s.norm()), "N={n} k={re}+{im}i: {s} vs {}", q.value);
            }
        }
    }

    #[test]
    fn i_r_sum_matches_hypergeometric_inside_disk() {
        for &(re, im) in &[(0.2, 0.9), (-0.3, 0.8), (0.1, -0.7)] {
            let kh = KappaHat::new(c(re, im)).unwrap();
            assert!((ONE + kh.value * kh.value).norm() < 1.0);
            let s = i_r(&kh, &ctx(4)).unwrap();
            let h = i_r_hyp2f1(&kh, &ctx(4)).unwrap();
            assert!((s - h).norm() < 1e-10 * (1.0 + s.norm()), "{s} vs {h}");
        }
    }

    #[test]
    fn i_r_real_argument_is_principal_value() {
        for k in [0.7, -1.3, 3.0] {
            let kh = KappaHat::new(c(k, 0.0)).unwrap();
            let s = i_r(&kh, &ctx(4)).unwrap();
            let q = i_r_quadrature(&kh, &ctx(4)).unwrap();
            assert!(s.im == 0.0);
            assert!((s.re - q.value.re).abs() < 1e-7, "{k}: {s} vs {}", q.value);
        }
    }

    #[test]
    fn i_r_near_singular_argument_falls_back() {
        let kh = KappaHat::new(c(1e-4, 1.0 + 1e-4)).unwrap();
        let a = i_r_auto(&kh, &ctx(4)).unwrap();
        let q = i_r_quadrature(&kh, &ctx(4)).unwrap();
        assert!((a.value - q.value).norm() < 1e-12);
        assert!(matches!(i_r(&KappaHat::new(c(0.0, 1.0)).unwrap(), &ctx(4)), Err(Error::SingularArgument(_))));
    }

    #[test]
    fn i_c_conjugation_symmetry() {
        let k = c(0.4, -0.6);
        let a = i_c(&KappaHat::new(k).unwrap(), &ctx(4)).unwrap();
        let b = i_c(&KappaHat::new(k.conj()).unwrap(), &ctx(4)).unwrap();
        assert!((a.value.conj() - b.value).norm() < 10.0 * (a.err_est + b.err_est) + 1e-9);
        let z = i_c(&KappaHat::new(c(1e-3, 0.5)).unwrap(), &ctx(4)).unwrap();
        assert!(z.value.is_finite());
    }

    #[test]
    fn ratio_polynomial_reproduces_real_directions() {
        let ctx = ctx(4);
        let den = Vector2C::new(c(0.45, 0.0), c(0.0, 0.89));
        let poly = RatioPolynomial::fit(&den, &ctx).unwrap();
        let v = Vector2C::direction(1.234);
        let direct = xi2_closed_form(&v, &den, &ctx).unwrap();
        let p = poly.eval(&v);
        assert!((p.value - direct.value).norm() < 1e-6, "{} vs {}", p.value, direct.value);
        // homogeneity of degree N
        let scaled = poly.eval(&Vector2C::new(v.a * 2.0, v.b * 2.0));
        assert!((scaled.value - 16.0 * p.value).norm() < 1e-12 * (1.0 + scaled.value.norm()));
        // the z-polynomial agrees with evaluating P at (z, −1)
        let (zc, _) = poly.z_polynomial();
        let z = c(0.3, -0.8);
        let horner = zc.iter().rev().fold(ZERO, |acc, &cj| acc * z + cj);
        let at = poly.eval(&Vector2C::new(z, -ONE)).value;
        assert!((horner - at).norm() < 1e-12 * (1.0 + at.norm()));
    }

    #[test]
    fn kernel3_vanishes_on_the_diagonal() {
        let v = Vector2C::new(c(0.3, 0.1), c(0.2, 1.0));
        let k = kernel3_reduced(&v, &v, &ctx(2)).unwrap();
        assert!(k.value.norm() < 10.0 * k.err_est + 1e-9, "{}", k.value);
    }

    #[test]
    fn routes_parse() {
        assert_eq!("alternative".parse::<Kernel3Route>().unwrap(), Kernel3Route::Alternative);
        assert!("other".parse::<Kernel3Route>().is_err());
        assert_eq!(Kernel3Route::Reduced.to_string(), "reduced");
    }
}
