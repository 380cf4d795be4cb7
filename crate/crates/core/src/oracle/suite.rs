//! The validation suite: every cross-check between the analytic and Monte
//! Carlo routes, as a list of machine-readable reports.

use super::{compare, mc_ratio_estimate, xi1_mc, Report, Scheme};
use crate::ensembles::{FieldRealization, MatrixField};
use crate::error::{Error, Result};
use crate::kernels::{
    i_r, i_r_quadrature, kernel3_alternative, kernel3_reduced, xi1, KappaHat, Kernel3Route, KernelContext, RatioPolynomial,
};
use crate::linalg::{det, CMatrix};
use crate::pfassembly::{
    assemble, berezinian_identity_check, choose_rotation, moment_matrix, pfaffian, Rotation, SkewMatrix,
};
use crate::quad::QuadConfig;
use crate::rng::StreamSeed;
use crate::specfun::Vector2C;
use crate::spherical::{char_poly_mc, normalization_n2, real_count_stats};
use crate::winding::{loop_integral_real_part, winding_number};
use num_complex::Complex64 as C64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Sample sizes and tolerances of the suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteBudgets {
    pub seed: u64,
    /// Samples for the Ξ₁ and characteristic-polynomial averages.
    pub mc_samples: usize,
    /// Samples for the Z₁|₁ ratio estimate.
    pub z_samples: usize,
    pub winding_realizations: usize,
    pub winding_grid: usize,
    pub real_count_samples: usize,
    /// Random inputs per identity check (K̂₃ routes use at most 5).
    pub random_inputs: usize,
    pub quad: QuadConfig,
}

impl Default for SuiteBudgets {
    fn default() -> Self {
        Self {
            seed: 20240501,
            mc_samples: 100_000,
            z_samples: 400_000,
            winding_realizations: 1000,
            winding_grid: 256,
            real_count_samples: 10_000,
            random_inputs: 100,
            quad: QuadConfig::default(),
        }
    }
}

impl SuiteBudgets {
    /// A fast configuration: 10² samples and few random inputs.
    pub fn smoke() -> Self {
        Self {
            mc_samples: 128,
            z_samples: 128,
            winding_realizations: 50,
            real_count_samples: 200,
            random_inputs: 5,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if [self.mc_samples, self.z_samples, self.winding_realizations, self.real_count_samples, self.random_inputs]
            .contains(&0)
        {
            return Err(Error::Domain("all suite budgets must be positive".into()));
        }
        if self.winding_grid < crate::winding::MIN_GRID {
            return Err(Error::Domain(format!("winding grid must be at least {}", crate::winding::MIN_GRID)));
        }
        self.quad.validate()
    }
}

fn guarded(name: &str, f: impl FnOnce() -> Result<Report>) -> Report {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(r)) => r.named(name),
        Ok(Err(e)) => Report::failed(name, e.to_string()),
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Report::failed(name, format!("panicked: {msg}"))
        }
    }
}

fn relative(name: &str, expected: f64, measured: C64, err: f64, rel: f64) -> Report {
    Report::exact(name, C64::new(expected, 0.0), measured, err, rel * expected.abs())
}

fn trig_vectors(field: &MatrixField, q: &[f64], p: &[f64]) -> (Vec<Vector2C>, Vec<Vector2C>) {
    (q.iter().map(|&x| field.v(x)).collect(), p.iter().map(|&x| field.v(x)).collect())
}

/// Run every check; deterministic for a given budget (including the seed).
pub fn validate_suite(b: &SuiteBudgets) -> Result<Vec<Report>> {
    b.validate()?;
    let seed = StreamSeed::new(b.seed);
    let ctx4 = KernelContext::new(4, b.quad)?;
    let trig4 = MatrixField::trig(4)?;
    let mut out = Vec::new();

    out.push(guarded("xi1_closed_form_mc", || {
        let (v1, v2) = (Vector2C::real(1.0, 2.0), Vector2C::real(3.0, 4.0));
        let mc = xi1_mc(&v1, &v2, 4, b.mc_samples, seed.fork(1))?;
        Ok(compare(xi1(v1.a, v1.b, v2.a, v2.b, 4), 0.0, &mc))
    }));

    for (i, (n, target)) in [(2usize, 4.0), (4, 16.0)].into_iter().enumerate() {
        out.push(guarded(&format!("char_poly_monomial_n{n}"), || {
            let mc = char_poly_mc(C64::new(2.0, 0.0), n, b.mc_samples, seed.fork(10 + i as u64), Scheme::MedianOfMeans)?;
            Ok(compare(C64::new(target, 0.0), 0.0, &mc))
        }));
    }

    out.push(guarded("moment_pfaffian_ratio_n4", || {
        let d2 = moment_matrix(2, &ctx4)?;
        let d4 = moment_matrix(4, &ctx4)?;
        let (p2, p4) = (pfaffian(&d2.matrix)?, pfaffian(&d4.matrix)?);
        Ok(relative("", 3.0 / (2.0 * PI), p2 / p4, 0.0, 1e-3))
    }));

    out.push(guarded("moment_pfaffian_n2", || {
        let ctx2 = KernelContext::new(2, b.quad)?;
        let d = moment_matrix(2, &ctx2)?;
        let pf = pfaffian(&d.matrix)?;
        Ok(relative("", 4.0 * PI.sqrt(), pf, d.errors[(0, 1)], 1e-3)
            .with_message("target 4*sqrt(pi); the normalized N=2 density requires Pf D = 1/C = 4*pi"))
    }));

    out.push(guarded("joint_density_normalization_n2", || {
        let (t, e) = normalization_n2(0.0, 0.0, &b.quad.with_rel_tol(b.quad.rel_tol.min(1e-10)))?;
        Ok(Report::exact("", C64::new(1.0, 0.0), C64::new(t, 0.0), e, 1e-6))
    }));

    out.push(guarded("i_r_closed_form_vs_quadrature", || {
        let zero = KappaHat::new(C64::new(0.0, 0.0))?;
        let sum = i_r(&zero, &ctx4)?;
        let quad = i_r_quadrature(&zero, &ctx4)?.value;
        let target = C64::new(PI * PI / 64.0, 0.0);
        let mut worst = (sum - target).norm().max((quad - target).norm());
        let mut rng = seed.fork(30).stream(0);
        for _ in 0..b.random_inputs.min(20) {
            let im: f64 = rng.random_range(0.1..2.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
            let kh = KappaHat::new(C64::new(rng.random_range(-2.0..2.0), im))?;
            worst = worst.max((i_r(&kh, &ctx4)? - i_r_quadrature(&kh, &ctx4)?.value).norm());
        }
        Ok(Report::exact("", target, target + worst, 0.0, 1e-8)
            .with_message("measured = target + worst deviation over all inputs"))
    }));

    out.push(guarded("z11_pfaffian_vs_mc", || {
        let (vq, vp) = trig_vectors(&trig4, &[1.1], &[0.3]);
        let a = assemble(&vq, &vp, &ctx4, Kernel3Route::Reduced, Rotation::Auto)?;
        let mc = mc_ratio_estimate(&trig4, &[1.1], &[0.3], b.z_samples, seed.fork(40), Scheme::MedianOfMeans)?;
        Ok(compare(a.value, a.err_est, &mc))
    }));

    out.push(guarded("k3_route_equivalence", || {
        let mut rng = seed.fork(50).stream(0);
        let pairs: Vec<(f64, f64)> =
            (0..b.random_inputs.min(5)).map(|_| (rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI))).collect();
        let worst = pairs
            .par_iter()
            .map(|&(qm, qn)| -> Result<f64> {
                let (vm, vn) = (trig4.v(qm), trig4.v(qn));
                let t = choose_rotation(&[vm, vn]);
                let (vm, vn) = (vm.rotated(t), vn.rotated(t));
                let r = kernel3_reduced(&vm, &vn, &ctx4)?;
                let a = kernel3_alternative(&RatioPolynomial::fit(&vm, &ctx4)?, &vn, &ctx4)?;
                Ok((r.value - a.value).norm() / r.value.norm().max(1e-300))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        Ok(Report::exact("", C64::new(0.0, 0.0), C64::new(worst, 0.0), 0.0, 1e-3)
            .with_message("measured = worst relative route difference"))
    }));

    out.push(guarded("o2_invariance_z11", || {
        let theta = seed.fork(60).stream(0).random_range(0.0..2.0 * PI);
        let (vq, vp) = trig_vectors(&trig4, &[1.1], &[0.3]);
        let a = assemble(&vq, &vp, &ctx4, Kernel3Route::Reduced, Rotation::Fixed(0.0))?;
        let r = assemble(&vq, &vp, &ctx4, Kernel3Route::Reduced, Rotation::Fixed(theta))?;
        let tol = 10.0 * (a.err_est + r.err_est);
        Ok(Report::exact("", a.value, r.value, r.err_est, tol))
    }));

    out.push(guarded("berezinian_identity", || {
        let mut rng = seed.fork(70).stream(0);
        let mut worst: f64 = 0.0;
        for n in [2usize, 4, 6] {
            for _ in 0..b.random_inputs {
                let z: Vec<C64> = (0..n).map(|_| C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))).collect();
                let kh = C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                worst = worst.max(berezinian_identity_check(&z, kh)?);
            }
        }
        Ok(Report::exact("", C64::new(0.0, 0.0), C64::new(worst, 0.0), 0.0, 1e-10)
            .with_message("measured = worst relative difference"))
    }));

    out.extend(winding_reports(&trig4, b, seed.fork(80)));

    out.push(guarded("real_eigenvalue_count_n16", || {
        let s = real_count_stats(16, b.real_count_samples, seed.fork(90))?;
        let target = (8.0 * PI).sqrt();
        Ok(Report::exact("", C64::new(target, 0.0), C64::new(s.mean, 0.0), s.stderr, 0.1 * target))
    }));

    out.push(guarded("pfaffian_properties", || {
        let mut rng = seed.fork(100).stream(0);
        let mut worst: f64 = 0.0;
        for d in (2..=12).step_by(2) {
            for _ in 0..10 {
                let a = SkewMatrix::from_upper(d, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
                let pf = pfaffian(&a)?;
                let dt = det(a.entries());
                worst = worst.max((pf * pf - dt).norm() / dt.norm());
                let bm = CMatrix::from_fn(d, d, |_, _| C64::new(rng.random_range(-1.0..1.0), 0.0));
                let cong = SkewMatrix::new(&bm * a.entries() * bm.transpose())?;
                let lhs = pfaffian(&cong)?;
                let rhs = det(&bm) * pf;
                worst = worst.max((lhs - rhs).norm() / rhs.norm());
            }
            let blocks = SkewMatrix::from_upper(d, |i, j| if i % 2 == 0 && j == i + 1 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
            worst = worst.max((pfaffian(&blocks)? - 1.0).norm());
        }
        Ok(Report::exact("", C64::new(0.0, 0.0), C64::new(worst, 0.0), 0.0, 1e-10)
            .with_message("measured = worst relative deviation"))
    }));

    Ok(out)
}

fn winding_reports(field: &MatrixField, b: &SuiteBudgets, seed: StreamSeed) -> Vec<Report> {
    let runs: Vec<Result<(i64, f64, f64)>> = (0..b.winding_realizations)
        .into_par_iter()
        .map(|i| {
            let real = FieldRealization::sample(field.n, &mut seed.stream(i as u64))?;
            // Near-critical draws get a finer grid; the criterion is about W, not the grid.
            let mut grid = b.winding_grid;
            let w = loop {
                match winding_number(field, &real, grid) {
                    Err(Error::Resolution(_)) if grid < 64 * b.winding_grid => grid *= 16,
                    r => break r?,
                }
            };
            let re = loop_integral_real_part(field, &real, w.grid)?;
            Ok((w.w_value, (w.raw - w.w_value as f64).abs(), re.abs()))
        })
        .collect();
    let mut failures = 0;
    let (mut odd, mut dev, mut re_dev): (usize, f64, f64) = (0, 0.0, 0.0);
    let mut first_err = None;
    for r in runs {
        match r {
            Ok((w, d, re)) => {
                odd += (w % 2 != 0) as usize;
                dev = dev.max(d);
                re_dev = re_dev.max(re);
            }
            Err(e) => {
                failures += 1;
                first_err.get_or_insert(e.to_string());
            }
        }
    }
    let note = |s: String| match &first_err {
        Some(e) => format!("{s}; {failures} runs failed, first: {e}"),
        None => s,
    };
    let mut parity = Report::exact("winding_parity_integer", C64::new(0.0, 0.0), C64::new(dev, 0.0), 0.0, 1e-6)
        .with_message(note(format!("{odd} odd windings; measured = worst |raw - W|")));
    parity.pass &= odd == 0 && failures == 0;
    let mut loop_re = Report::exact("winding_real_part_loop_integral", C64::new(0.0, 0.0), C64::new(re_dev, 0.0), 0.0, 1e-6)
        .with_message(note("measured = worst |integral of Re w|".into()));
    loop_re.pass &= failures == 0;
    vec![parity, loop_re]
}
