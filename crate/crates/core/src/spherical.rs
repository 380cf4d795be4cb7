//! The real (induced) spherical ensemble Y = K₁⁻¹K₂: matrix and eigenvalue
//! densities, the normalization check, and Monte Carlo statistics.

use crate::ensembles::{sample_spherical, RealMatrix};
use crate::error::{Error, Result};
use crate::linalg::eigenvalues_real;
use crate::oracle::{estimate, MCEstimate, Scheme, DEFAULT_BATCHES};
use crate::pfassembly::{ln_norm_constant, vandermonde};
use crate::quad::{integrate_nested, integrate_plane_with_poles, Domain, QuadConfig};
use crate::rng::StreamSeed;
use crate::specfun::{g_complex_weight, g_real_weight, PairWeightParams};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

/// An eigenvalue configuration on the reduced manifolds: real eigenvalues
/// and conjugate pairs (x, y) with y > 0 standing for x ± iy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenConfig {
    pub n: usize,
    pub real: Vec<f64>,
    pub pairs: Vec<(f64, f64)>,
}

impl EigenConfig {
    pub fn new(n: usize, real: Vec<f64>, pairs: Vec<(f64, f64)>) -> Result<Self> {
        if real.len() + 2 * pairs.len() != n {
            return Err(Error::InvalidDimension(format!(
                "{} real values and {} pairs do not make N = {n} eigenvalues",
                real.len(),
                pairs.len()
            )));
        }
        if real.iter().chain(pairs.iter().flat_map(|p| [&p.0, &p.1])).any(|x| !x.is_finite()) {
            return Err(Error::Domain("eigenvalues must be finite".into()));
        }
        if let Some(p) = pairs.iter().find(|p| !(p.1 > 0.0)) {
            return Err(Error::Domain(format!("conjugate pairs need y > 0, got {p:?}")));
        }
        Ok(Self { n, real, pairs })
    }

    /// Canonical labeling: sorted reals, then z, z̄ for each pair.
    pub fn labeled(&self) -> Vec<C64> {
        let mut r = self.real.clone();
        r.sort_by(|a, b| a.total_cmp(b));
        let mut z: Vec<C64> = r.into_iter().map(|x| C64::new(x, 0.0)).collect();
        for &(x, y) in &self.pairs {
            z.push(C64::new(x, y));
            z.push(C64::new(x, -y));
        }
        z
    }
}

fn check_gamma(x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(ln_gamma(x))
    } else {
        Err(Error::Domain(format!("Gamma argument {x} is not positive")))
    }
}

/// G̃_{μ,ν}(Y) = π^{−N²/2} ∏ⱼ Γ(j/2)Γ(μ+ν+(N+j)/2)/(Γ(ν+j/2)Γ(μ+j/2))
///             · |det Y|^{2ν} / det^{N+μ+ν}(1 + Y Yᵀ).
pub fn matrix_density_eval(y: &RealMatrix, mu: f64, nu: f64) -> Result<f64> {
    let n = y.n();
    let nf = n as f64;
    let mut ln_pre = -0.5 * nf * nf * PI.ln();
    for j in 1..=n {
        let jf = j as f64;
        ln_pre += check_gamma(jf / 2.0)? + check_gamma(mu + nu + (nf + jf) / 2.0)?
            - check_gamma(nu + jf / 2.0)?
            - check_gamma(mu + jf / 2.0)?;
    }
    let m = y.as_matrix();
    let g = DMatrix::identity(n, n) + m * m.transpose();
    let det_g = g.determinant();
    let det_y = m.determinant().abs();
    let num = if nu == 0.0 { 1.0 } else { det_y.powf(2.0 * nu) };
    if num == 0.0 {
        return Ok(0.0);
    }
    Ok((ln_pre - (nf + mu + nu) * det_g.ln()).exp() * num)
}

/// C·Δ_N(z)·∏ g over the canonically labeled configuration (reals paired
/// consecutively, then each conjugate pair). N must be even.
pub fn joint_density_eval(cfg: &EigenConfig, mu: f64, nu: f64) -> Result<f64> {
    let n = cfg.n;
    if n % 2 != 0 {
        return Err(Error::InvalidDimension(format!("the joint density is implemented for even N, got {n}")));
    }
    if cfg.real.len() % 2 != 0 {
        return Err(Error::InvalidDimension("even N forces an even number of real eigenvalues".into()));
    }
    let params = PairWeightParams::induced(n, mu, nu)?;
    let z = cfg.labeled();
    let mut val = vandermonde(&z);
    let nr = cfg.real.len();
    for i in (0..nr).step_by(2) {
        val *= g_real_weight(z[i].re, z[i + 1].re, &params);
    }
    for &(x, y) in &cfg.pairs {
        val *= g_complex_weight(x, y, &params)?;
    }
    val *= ln_norm_constant(n, mu, nu)?.exp();
    if val.im.abs() > 1e-8 * val.norm() {
        return Err(Error::Internal(format!("joint density has an imaginary residue: {val}")));
    }
    Ok(val.re)
}

/// Total probability of the N = 2 joint density: both orderings of the two
/// real eigenvalues plus the conjugate pair over the whole plane.
pub fn normalization_n2(mu: f64, nu: f64, quad: &QuadConfig) -> Result<(f64, f64)> {
    let params = PairWeightParams::induced(2, mu, nu)?;
    let c = ln_norm_constant(2, mu, nu)?.exp();
    let real = integrate_nested(
        |level, pre| if level == 0 { Domain::real_line() } else { Domain::real_line().with_breaks([pre[0]]) },
        |pt, out| out[0] = C64::new((pt[1] - pt[0]) * g_real_weight(pt[0], pt[1], &params), 0.0),
        2,
        1,
        quad,
    );
    let cplx = integrate_plane_with_poles(
        |x, y, out| {
            out[0] = match g_complex_weight(x, y, &params) {
                Ok(w) => C64::new(0.0, -2.0 * y) * w,
                Err(_) => C64::new(0.0, 0.0),
            }
        },
        &[],
        1,
        quad,
    )?;
    if !(real.converged && cplx.converged) {
        return Err(Error::NotConverged("N = 2 normalization integral".into()));
    }
    let total = c * (real.values[0] + cplx.values[0]);
    if total.im.abs() > 1e-8 {
        return Err(Error::Internal(format!("normalization is not real: {total}")));
    }
    Ok((total.re, c * (real.errors[0] + cplx.errors[0])))
}

/// Median-of-means estimate of ⟨det(x − Y)⟩ over the spherical ensemble.
pub fn char_poly_mc(x: C64, n: usize, samples: usize, seed: StreamSeed, scheme: Scheme) -> Result<MCEstimate> {
    estimate(samples, DEFAULT_BATCHES, seed, scheme, |rng| {
        let y = sample_spherical(n, rng).ok()?;
        let m = DMatrix::from_fn(n, n, |i, j| {
            let d = if i == j { x } else { C64::new(0.0, 0.0) };
            d - y.as_matrix()[(i, j)]
        });
        Some(m.lu().determinant())
    })
}

/// Real when |ℑz| < 1e−8·(1+|z|).
pub fn is_real_eigenvalue(z: C64) -> bool {
    z.im.abs() < 1e-8 * (1.0 + z.norm())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealCountStats {
    pub n: usize,
    pub samples: usize,
    pub mean: f64,
    pub stderr: f64,
    /// Count histogram indexed by the number of real eigenvalues.
    pub histogram: Vec<usize>,
    pub all_parity_ok: bool,
    pub failed_draws: usize,
}

/// Mean and standard error of the number of real eigenvalues of Y.
pub fn real_count_stats(n: usize, samples: usize, seed: StreamSeed) -> Result<RealCountStats> {
    if samples == 0 {
        return Err(Error::Domain("samples must be at least 1".into()));
    }
    let batches = DEFAULT_BATCHES.min(samples);
    let per = samples.div_ceil(batches);
    let parts: Vec<(Vec<usize>, usize)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = seed.stream(b as u64);
            let mut hist = vec![0usize; n + 1];
            let mut failed = 0;
            let todo = per.min(samples.saturating_sub(b * per));
            for _ in 0..todo {
                match sample_spherical(n, &mut rng) {
                    Ok(y) => {
                        let k = eigenvalues_real(y.as_matrix()).into_iter().filter(|&z| is_real_eigenvalue(z)).count();
                        hist[k.min(n)] += 1;
                    }
                    Err(_) => failed += 1,
                }
            }
            (hist, failed)
        })
        .collect();
    let mut histogram = vec![0usize; n + 1];
    let mut failed_draws = 0;
    for (h, f) in parts {
        for (a, b) in histogram.iter_mut().zip(h) {
            *a += b;
        }
        failed_draws += f;
    }
    let total: usize = histogram.iter().sum();
    if total == 0 {
        return Err(Error::Sampling("no spherical draw succeeded".into()));
    }
    let t = total as f64;
    let mean = histogram.iter().enumerate().map(|(k, &c)| k as f64 * c as f64).sum::<f64>() / t;
    let var = histogram.iter().enumerate().map(|(k, &c)| (k as f64 - mean).powi(2) * c as f64).sum::<f64>()
        / (t - 1.0).max(1.0);
    let all_parity_ok = histogram.iter().enumerate().all(|(k, &c)| c == 0 || k % 2 == n % 2);
    Ok(RealCountStats { n, samples: total, mean, stderr: (var / t).sqrt(), histogram, all_parity_ok, failed_draws })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::sample_ginibre;

    #[test]
    fn matrix_density_at_zero() {
        let y = RealMatrix::new(DMatrix::zeros(2, 2)).unwrap();
        let v = matrix_density_eval(&y, 0.0, 0.0).unwrap();
        assert!((v - 1.0 / (2.0 * PI * PI)).abs() < 1e-14, "{v}");
        assert_eq!(matrix_density_eval(&y, 0.0, 1.0).unwrap(), 0.0);
        let r = sample_ginibre(3, &mut StreamSeed::new(1).stream(0)).unwrap();
        assert!(matrix_density_eval(&r, 0.0, 0.0).unwrap() > 0.0);
    }

    #[test]
    fn matrix_density_normalization_n2_importance_check() {
        // Cauchy proposal per entry: the density decays like |y|^{-4} along
        // any single entry, so the weights stay bounded
        use rand::Rng;
        let mut rng = StreamSeed::new(9).stream(0);
        let m = 200_000;
        let mut acc = 0.0;
        for _ in 0..m {
            let e: Vec<f64> = (0..4).map(|_| (PI * (rng.random::<f64>() - 0.5)).tan()).collect();
            let pdf: f64 = e.iter().map(|x| 1.0 / (PI * (1.0 + x * x))).product();
            let y = RealMatrix::from_rows(2, &e).unwrap();
            acc += matrix_density_eval(&y, 0.0, 0.0).unwrap() / pdf;
        }
        let total = acc / m as f64;
        assert!((total - 1.0).abs() < 0.05, "{total}");
    }

    #[test]
    fn joint_density_values() {
        let cfg = EigenConfig::new(2, vec![0.0, 1.0], vec![]).unwrap();
        let v = joint_density_eval(&cfg, 0.0, 0.0).unwrap();
        let params = PairWeightParams::new(2).unwrap();
        let oracle = g_real_weight(0.0, 1.0, &params) / (4.0 * PI);
        assert!((v - oracle).abs() < 1e-15 && v > 0.0);
        // reversing the order of the input reals does not matter
        let rev = EigenConfig::new(2, vec![1.0, 0.0], vec![]).unwrap();
        assert_eq!(joint_density_eval(&rev, 0.0, 0.0).unwrap(), v);
        let same = EigenConfig::new(2, vec![0.5, 0.5], vec![]).unwrap();
        assert_eq!(joint_density_eval(&same, 0.0, 0.0).unwrap(), 0.0);
        let mixed = EigenConfig::new(4, vec![-0.3, 1.2], vec![(0.4, 0.7)]).unwrap();
        assert!(joint_density_eval(&mixed, 0.0, 0.0).unwrap() > 0.0);
        let swapped = EigenConfig::new(4, vec![1.2, -0.3], vec![(0.4, 0.7)]).unwrap();
        assert_eq!(joint_density_eval(&swapped, 0.0, 0.0).unwrap(), joint_density_eval(&mixed, 0.0, 0.0).unwrap());
        assert!(EigenConfig::new(2, vec![], vec![(0.0, -1.0)]).is_err());
    }

    #[test]
    fn n2_normalization_is_one() {
        let (t, e) = normalization_n2(0.0, 0.0, &QuadConfig::default().with_rel_tol(1e-10)).unwrap();
        assert!((t - 1.0).abs() < 1e-6, "{t} ± {e}");
    }

    #[test]
    fn real_count_parity_and_bounds() {
        let s = real_count_stats(4, 2000, StreamSeed::new(3)).unwrap();
        assert!(s.all_parity_ok);
        assert_eq!(s.histogram.len(), 5);
        assert_eq!(s.samples, 2000);
        // N = 2: P(both real) = π/4 from the joint density, so E[count] = π/2
        let s2 = real_count_stats(2, 40_000, StreamSeed::new(4)).unwrap();
        assert!((s2.mean - PI / 2.0).abs() < 4.0 * s2.stderr, "{} ± {}", s2.mean, s2.stderr);
    }

    #[test]
    fn char_poly_at_zero_and_two() {
        let z = char_poly_mc(C64::new(0.0, 0.0), 4, 20_000, StreamSeed::new(5), Scheme::MedianOfMeans).unwrap();
        assert!(z.value().norm() < 3.0 * z.stderr + 1e-12, "{:?} ± {}", z.mean, z.stderr);
        let t = char_poly_mc(C64::new(2.0, 0.0), 2, 20_000, StreamSeed::new(6), Scheme::MedianOfMeans).unwrap();
        assert!((t.value() - 4.0).norm() < 3.0 * t.stderr, "{:?} ± {}", t.mean, t.stderr);
    }
}
