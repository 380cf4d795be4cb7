//! The antisymmetric pair functional
//!
//! G[φ, ψ] = ∫ d[z] g(z₁, z₂) φ(z₁) ψ(z₂)
//!
//! evaluated on the two reduced manifolds of g: real pairs (x₁, x₂) ∈ ℝ² and
//! conjugate pairs z₁ = z, z₂ = z̄ with z in the plane off the real axis.
//! Every kernel, moment matrix and normalization in the crate is a linear
//! combination of such values.

use crate::error::{Error, Result};
use crate::quad::{adapt_pv, integrate_plane_with_poles, Domain, QuadConfig, VecQuadResult};
use crate::specfun::{g_complex_weight, g_real_weight, PairWeightParams};
use num_complex::Complex64 as C64;
use std::cell::RefCell;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// A family of test functions evaluated together: `eval(z, out)` writes
/// `len` values, and `poles` lists the singularities shared by the family.
pub struct FunctionFamily<'a> {
    pub len: usize,
    pub poles: Vec<C64>,
    eval: Box<dyn Fn(C64, &mut [C64]) + Sync + 'a>,
}

impl<'a> FunctionFamily<'a> {
    pub fn new(len: usize, poles: Vec<C64>, eval: impl Fn(C64, &mut [C64]) + Sync + 'a) -> Self {
        Self { len, poles, eval: Box::new(eval) }
    }

    /// zʲ for j = 0..len.
    pub fn monomials(len: usize) -> Self {
        Self::new(len, Vec::new(), move |z, out| {
            let mut p = C64::new(1.0, 0.0);
            for o in out.iter_mut() {
                *o = p;
                p *= z;
            }
        })
    }

    /// The single function 1/(a + b z).
    pub fn linear_inverse(a: C64, b: C64) -> Self {
        let poles = if b.norm() > 0.0 { vec![-a / b] } else { Vec::new() };
        Self::new(1, poles, move |z, out| out[0] = 1.0 / (a + b * z))
    }

    #[inline]
    pub fn eval(&self, z: C64, out: &mut [C64]) {
        (self.eval)(z, out)
    }
}

/// An m×n table of functional values G[φᵢ, ψⱼ] with error estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct PairValues {
    pub m: usize,
    pub n: usize,
    pub values: Vec<C64>,
    pub errors: Vec<f64>,
    pub evaluations: usize,
}

impl PairValues {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.values[i * self.n + j]
    }

    #[inline]
    pub fn err(&self, i: usize, j: usize) -> f64 {
        self.errors[i * self.n + j]
    }

    fn from_parts(m: usize, n: usize, real: &VecQuadResult, cplx: &VecQuadResult) -> Self {
        let values = real.values.iter().zip(&cplx.values).map(|(a, b)| a + b).collect();
        let errors = real.errors.iter().zip(&cplx.errors).map(|(a, b)| a + b).collect();
        Self { m, n, values, errors, evaluations: real.evaluations + cplx.evaluations }
    }
}

fn is_real_pole(p: C64) -> bool {
    p.im.abs() <= 1e-9 * (1.0 + p.norm())
}

/// The real-axis pole of a family, if any; principal values handle one.
fn single_real_pole(f: &FunctionFamily) -> Result<Option<f64>> {
    let mut real = f.poles.iter().filter(|p| p.is_finite() && is_real_pole(**p));
    match (real.next(), real.next()) {
        (None, _) => Ok(None),
        (Some(p), None) => Ok(Some(p.re)),
        (Some(p), Some(_)) => Err(Error::Pole { re: p.re, im: p.im }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairFunctional {
    pub params: PairWeightParams,
    pub cfg: QuadConfig,
}

impl PairFunctional {
    pub fn new(params: PairWeightParams, cfg: QuadConfig) -> Self {
        Self { params, cfg }
    }

    /// Real-pair part: ∫∫ dx₁dx₂ g_ℝ(x₁, x₂) φᵢ(x₁) ψⱼ(x₂), integrated as
    /// x₂ outside and x₁ inside with the sign jump on a breakpoint. A simple
    /// pole of φ or ψ on the real axis is taken as a principal value.
    pub fn real_part(&self, phi: &FunctionFamily, psi: &FunctionFamily) -> Result<VecQuadResult> {
        let pv_phi = single_real_pole(phi)?;
        let pv_psi = single_real_pole(psi)?;
        let (m, n) = (phi.len, psi.len);
        let dim = m * n;
        let xb_phi: Vec<f64> = phi.poles.iter().filter(|p| p.is_finite()).map(|p| p.re).collect();
        let xb_psi: Vec<f64> = psi.poles.iter().filter(|p| p.is_finite()).map(|p| p.re).collect();
        let params = self.params;
        let cfg = self.cfg;
        let mut fa = vec![ZERO; m];
        let mut fb = vec![ZERO; n];
        let mut evaluations = 0usize;
        let mut inner_ok = true;
        // the inner integral is log-singular where x₂ meets a pole of φ
        let outer_dom = Domain::real_line().with_breaks(xb_psi.iter().chain(&xb_phi).cloned());
        let outer = adapt_pv(
            |x2, out: &mut [C64]| {
                psi.eval(C64::new(x2, 0.0), &mut fb);
                let inner = adapt_pv(
                    |x1, o: &mut [C64]| {
                        let w = g_real_weight(x1, x2, &params);
                        if w == 0.0 {
                            o.iter_mut().for_each(|v| *v = ZERO);
                            return;
                        }
                        phi.eval(C64::new(x1, 0.0), &mut fa);
                        for i in 0..m {
                            let wi = fa[i] * w;
                            for j in 0..n {
                                o[i * n + j] = wi * fb[j];
                            }
                        }
                    },
                    &Domain::real_line().with_breaks(xb_phi.iter().cloned().chain([x2])),
                    pv_phi,
                    dim,
                    dim,
                    &cfg,
                );
                evaluations += inner.evaluations;
                inner_ok &= inner.converged;
                for k in 0..dim {
                    out[k] = inner.values[k];
                    out[dim + k] = C64::new(inner.errors[k], 0.0);
                }
            },
            &outer_dom,
            pv_psi,
            2 * dim,
            dim,
            &cfg,
        );
        let mut r = VecQuadResult::zeros(dim);
        for k in 0..dim {
            r.values[k] = outer.values[k];
            r.errors[k] = outer.errors[k] + outer.values[dim + k].re.abs();
        }
        r.evaluations = evaluations;
        r.converged = outer.converged && inner_ok;
        Ok(r)
    }

    /// Conjugate-pair part: ∫_ℝ² dx dy g_ℂ(x, y) φᵢ(z) ψⱼ(z̄).
    pub fn complex_part(&self, phi: &FunctionFamily, psi: &FunctionFamily) -> Result<VecQuadResult> {
        let (m, n) = (phi.len, psi.len);
        let dim = m * n;
        // ψ(z̄) is singular where z̄ hits a pole of ψ
        let poles: Vec<C64> = phi.poles.iter().cloned().chain(psi.poles.iter().map(|p| p.conj())).collect();
        let bufs = RefCell::new((vec![ZERO; m], vec![ZERO; n]));
        let params = self.params;
        integrate_plane_with_poles(
            |x, y, out| {
                let w = match g_complex_weight(x, y, &params) {
                    Ok(w) if w != ZERO => w,
                    _ => {
                        out.iter_mut().for_each(|o| *o = ZERO);
                        return;
                    }
                };
                let z = C64::new(x, y);
                let mut b = bufs.borrow_mut();
                let (fa, fb) = &mut *b;
                phi.eval(z, fa);
                psi.eval(z.conj(), fb);
                for i in 0..m {
                    let wi = fa[i] * w;
                    for j in 0..n {
                        out[i * n + j] = wi * fb[j];
                    }
                }
            },
            &poles,
            dim,
            &self.cfg,
        )
    }

    /// Full functional on both manifolds.
    pub fn eval(&self, phi: &FunctionFamily, psi: &FunctionFamily) -> Result<PairValues> {
        if phi.len == 0 || psi.len == 0 {
            return Err(Error::InvalidDimension("empty function family".into()));
        }
        let real = self.real_part(phi, psi)?;
        let cplx = self.complex_part(phi, psi)?;
        if !(real.converged && cplx.converged) {
            let err = real.errors.iter().chain(&cplx.errors).cloned().fold(0.0, f64::max);
            return Err(Error::NotConverged(format!("pair functional: error estimate {err:.3e}")));
        }
        Ok(PairValues::from_parts(phi.len, psi.len, &real, &cplx))
    }

    /// Antisymmetrized moments 2∫g z₁^{a} z₂^{b}, a, b = 0..d, as G[a,b] − G[b,a].
    pub fn moments(&self, d: usize) -> Result<PairValues> {
        let g = self.eval(&FunctionFamily::monomials(d), &FunctionFamily::monomials(d))?;
        let mut out = g.clone();
        for a in 0..d {
            for b in 0..d {
                out.values[a * d + b] = g.get(a, b) - g.get(b, a);
                out.errors[a * d + b] = g.err(a, b) + g.err(b, a);
            }
        }
        Ok(out)
    }
}
