//! Monte Carlo estimates of the ensemble averages the analytic route predicts,
//! and the statistical comparison between the two.
//!
//! Every estimate is split into batches; batch `b` draws from stream `b` of
//! the master seed and batches are reduced in index order, so results are
//! bit-identical regardless of thread scheduling.

use crate::ensembles::{field_eval, FieldRealization, MatrixField};
use crate::error::{Error, Result};
use crate::json::ComplexValue;
use crate::linalg::{det, is_near_singular};
use crate::rng::StreamSeed;
use crate::specfun::Vector2C;
use num_complex::Complex64 as C64;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

mod suite;
pub use suite::{validate_suite, SuiteBudgets};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Batches used by median-of-means.
pub const DEFAULT_BATCHES: usize = 32;
/// Absolute floor of the comparison rule.
pub const ABS_FLOOR: f64 = 1e-3;
/// A skip fraction above this is flagged.
pub const SKIP_WARN: f64 = 1e-3;
/// Relative |det| threshold below which a denominator counts as singular.
pub const SINGULAR_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Scheme {
    #[serde(rename = "mean")]
    Mean,
    #[default]
    #[serde(rename = "mom")]
    MedianOfMeans,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Mean => "mean",
            Scheme::MedianOfMeans => "mom",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Scheme::Mean),
            "mom" => Ok(Scheme::MedianOfMeans),
            other => Err(Error::Domain(format!("unknown scheme '{other}' (expected mom or mean)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: ComplexValue,
    pub stderr: f64,
    /// Samples drawn (a multiple of `n_batches`), including skipped ones.
    pub n_samples: usize,
    pub n_batches: usize,
    pub scheme: Scheme,
    pub skipped: usize,
    pub skip_fraction: f64,
    /// Set when the skip fraction exceeds the warning level.
    pub unstable: bool,
}

impl MCEstimate {
    pub fn value(&self) -> C64 {
        self.mean.into()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Batch {
    sum: C64,
    sum_sq: f64,
    count: usize,
    skipped: usize,
}

impl Batch {
    fn mean(&self) -> Option<C64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Robust scale: 1.4826·MAD, the normal-consistent σ.
fn robust_sigma(xs: &[f64], centre: f64) -> f64 {
    1.4826 * median(xs.iter().map(|x| (x - centre).abs()).collect())
}

/// Samples per batch and the number of batches for a budget.
pub fn batch_layout(samples: usize, batches: usize) -> Result<(usize, usize)> {
    if samples == 0 || batches == 0 {
        return Err(Error::Domain("samples and batches must be at least 1".into()));
    }
    let b = batches.min(samples);
    Ok((samples / b, b))
}

fn run_batches<F>(samples: usize, batches: usize, seed: StreamSeed, f: &F) -> Result<(usize, Vec<Batch>)>
where
    F: Fn(&mut ChaCha8Rng) -> Option<C64> + Sync,
{
    let (per, b) = batch_layout(samples, batches)?;
    let out = (0..b)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.stream(i as u64);
            let mut acc = Batch::default();
            for _ in 0..per {
                match f(&mut rng) {
                    Some(x) if x.is_finite() => {
                        acc.sum += x;
                        acc.sum_sq += x.norm_sqr();
                        acc.count += 1;
                    }
                    _ => acc.skipped += 1,
                }
            }
            acc
        })
        .collect();
    Ok((per, out))
}

/// Monte Carlo estimate of E[f] where `f` returns `None` for a skipped draw.
///
/// `Mean`: pooled sample mean with the pooled standard error.
/// `MedianOfMeans`: componentwise median of the batch means; the standard
/// error is 1.2533·σ_robust/√B with σ_robust the MAD-based spread of the
/// batch means (asymptotic efficiency of the median).
pub fn estimate<F>(samples: usize, batches: usize, seed: StreamSeed, scheme: Scheme, f: F) -> Result<MCEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> Option<C64> + Sync,
{
    let batches = match scheme {
        Scheme::Mean => batches,
        Scheme::MedianOfMeans => batches.max(DEFAULT_BATCHES).min(samples.max(1)),
    };
    let (per, out) = run_batches(samples, batches, seed, &f)?;
    let b = out.len();
    let n_samples = per * b;
    let skipped: usize = out.iter().map(|x| x.skipped).sum();
    let count: usize = out.iter().map(|x| x.count).sum();
    if count == 0 {
        return Err(Error::Sampling(format!("all {n_samples} samples were skipped")));
    }
    let (mean, stderr) = match scheme {
        Scheme::Mean => {
            let sum: C64 = out.iter().map(|x| x.sum).sum();
            let sq: f64 = out.iter().map(|x| x.sum_sq).sum();
            let m = sum / count as f64;
            let var = if count > 1 {
                ((sq - count as f64 * m.norm_sqr()) / (count - 1) as f64).max(0.0)
            } else {
                0.0
            };
            (m, (var / count as f64).sqrt())
        }
        Scheme::MedianOfMeans => {
            let means: Vec<C64> = out.iter().filter_map(|x| x.mean()).collect();
            let re: Vec<f64> = means.iter().map(|z| z.re).collect();
            let im: Vec<f64> = means.iter().map(|z| z.im).collect();
            let (mr, mi) = (median(re.clone()), median(im.clone()));
            let k = means.len() as f64;
            let se = 1.2533 * (robust_sigma(&re, mr).powi(2) + robust_sigma(&im, mi).powi(2)).sqrt() / k.sqrt();
            (C64::new(mr, mi), se)
        }
    };
    let skip_fraction = skipped as f64 / n_samples as f64;
    Ok(MCEstimate {
        mean: mean.into(),
        stderr,
        n_samples,
        n_batches: b,
        scheme,
        skipped,
        skip_fraction,
        unstable: skip_fraction > SKIP_WARN,
    })
}

/// E[X]/E[Y] from joint draws (X, Y) with a delete-one-batch jackknife error.
pub fn estimate_ratio<F>(samples: usize, batches: usize, seed: StreamSeed, f: F) -> Result<MCEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> Option<(C64, C64)> + Sync,
{
    let (per, b) = batch_layout(samples, batches.max(2).min(samples.max(2)))?;
    if b < 2 {
        return Err(Error::Domain("a jackknife ratio needs at least two samples".into()));
    }
    let parts: Vec<(C64, C64, usize, usize)> = (0..b)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.stream(i as u64);
            let (mut sx, mut sy, mut n, mut skip) = (ZERO, ZERO, 0, 0);
            for _ in 0..per {
                match f(&mut rng) {
                    Some((x, y)) if x.is_finite() && y.is_finite() => {
                        sx += x;
                        sy += y;
                        n += 1;
                    }
                    _ => skip += 1,
                }
            }
            (sx, sy, n, skip)
        })
        .collect();
    let tx: C64 = parts.iter().map(|p| p.0).sum();
    let ty: C64 = parts.iter().map(|p| p.1).sum();
    if ty == ZERO {
        return Err(Error::Sampling("ratio denominator averaged to zero".into()));
    }
    let full = tx / ty;
    let loo: Vec<C64> = parts.iter().map(|p| (tx - p.0) / (ty - p.1)).collect();
    let bf = b as f64;
    let lbar: C64 = loo.iter().sum::<C64>() / bf;
    let var = (bf - 1.0) / bf * loo.iter().map(|l| (l - lbar).norm_sqr()).sum::<f64>();
    let skipped: usize = parts.iter().map(|p| p.3).sum();
    let n_samples = per * b;
    let skip_fraction = skipped as f64 / n_samples as f64;
    Ok(MCEstimate {
        mean: full.into(),
        stderr: var.sqrt(),
        n_samples,
        n_batches: b,
        scheme: Scheme::Mean,
        skipped,
        skip_fraction,
        unstable: skip_fraction > SKIP_WARN,
    })
}

/// Z_{k|l}(q, p) = ⟨∏ det K(p_j) / ∏ det K(q_j)⟩ by LU determinants. Draws
/// with a numerically singular denominator are skipped and counted.
pub fn mc_ratio_estimate(
    field: &MatrixField,
    q: &[f64],
    p: &[f64],
    samples: usize,
    seed: StreamSeed,
    scheme: Scheme,
) -> Result<MCEstimate> {
    field.validate()?;
    let n = field.n;
    estimate(samples, DEFAULT_BATCHES, seed, scheme, |rng| {
        let real = FieldRealization::sample(n, rng).ok()?;
        let mut v = C64::new(1.0, 0.0);
        for &x in q {
            let k = field_eval(field, &real, x).ok()?;
            let d = det(&k);
            if is_near_singular(&k, d, SINGULAR_REL) {
                return None;
            }
            v /= d;
        }
        for &x in p {
            v *= det(&field_eval(field, &real, x).ok()?);
        }
        Some(v)
    })
}

/// ⟨det(v₁·K) det(v₂·K)⟩ / ⟨det² K₁⟩ from the same draws (jackknife error).
///
/// Ξ₁ at ensemble size `n` is the two-determinant average left after two
/// eigenvalues are split off, so the matrices here are (n−2)×(n−2).
pub fn xi1_mc(v1: &Vector2C, v2: &Vector2C, n: usize, samples: usize, seed: StreamSeed) -> Result<MCEstimate> {
    if n < 3 {
        return Err(Error::InvalidDimension(format!("Xi1 sampling needs n >= 3, got {n}")));
    }
    let m = n - 2;
    estimate_ratio(samples, DEFAULT_BATCHES, seed, |rng| {
        let real = FieldRealization::sample(m, rng).ok()?;
        let d1 = det(&real.combine(v1));
        let d2 = det(&real.combine(v2));
        let k1 = det(&real.combine(&Vector2C::real(1.0, 0.0)));
        Some((d1 * d2, k1 * k1))
    })
}

/// One comparison line: analytic value (or exact target) against a
/// measurement, with the pass rule diff ≤ threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub name: String,
    pub analytic: ComplexValue,
    pub analytic_err: f64,
    pub measured: ComplexValue,
    pub measured_err: f64,
    pub mc: Option<MCEstimate>,
    pub abs_diff: f64,
    pub sigma_combined: f64,
    pub threshold: f64,
    pub pass: bool,
    pub message: Option<String>,
}

impl Report {
    /// A deterministic check with an explicit absolute tolerance.
    pub fn exact(name: impl Into<String>, expected: C64, measured: C64, measured_err: f64, tol: f64) -> Self {
        let abs_diff = (measured - expected).norm();
        Self {
            name: name.into(),
            analytic: expected.into(),
            analytic_err: 0.0,
            measured: measured.into(),
            measured_err,
            mc: None,
            abs_diff,
            sigma_combined: measured_err,
            threshold: tol,
            pass: abs_diff <= tol,
            message: None,
        }
    }

    /// A failed entry caused by an error rather than a mismatch.
    pub fn failed(name: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            analytic: ZERO.into(),
            analytic_err: 0.0,
            measured: C64::new(f64::NAN, f64::NAN).into(),
            measured_err: 0.0,
            mc: None,
            abs_diff: f64::NAN,
            sigma_combined: 0.0,
            threshold: 0.0,
            pass: false,
            message: Some(message.into()),
        }
    }

    pub fn with_message(mut self, message: impl Into<String>) -> Self {
        self.message = Some(message.into());
        self
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// One human-readable line.
    pub fn line(&self) -> String {
        let m: C64 = self.measured.into();
        let a: C64 = self.analytic.into();
        let mut s = format!(
            "[{}] {}: measured {:.6}{:+.6}i vs {:.6}{:+.6}i, |diff| {:.3e} <= {:.3e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            m.re,
            m.im,
            a.re,
            a.im,
            self.abs_diff,
            self.threshold
        );
        if let Some(msg) = &self.message {
            s.push_str(" — ");
            s.push_str(msg);
        }
        s
    }
}

/// σ = √(stderr² + err_est²); pass iff |analytic − mc| ≤ max(3σ, 1e−3).
pub fn compare(analytic: C64, err_est: f64, mc: &MCEstimate) -> Report {
    let m = mc.value();
    let sigma = (mc.stderr.powi(2) + err_est.powi(2)).sqrt();
    let abs_diff = (analytic - m).norm();
    let threshold = (3.0 * sigma).max(ABS_FLOOR);
    Report {
        name: String::new(),
        analytic: analytic.into(),
        analytic_err: err_est,
        measured: mc.mean,
        measured_err: mc.stderr,
        mc: Some(mc.clone()),
        abs_diff,
        sigma_combined: sigma,
        threshold,
        pass: abs_diff <= threshold,
        message: mc.unstable.then(|| format!("skip fraction {:.3e} above {SKIP_WARN:e}", mc.skip_fraction)),
    }
}
