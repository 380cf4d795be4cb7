//! Determinant tracks, winding densities and winding numbers of a matrix field
//! over the closed contour p ∈ [0, 2π].

use crate::ensembles::{field_deriv, field_eval, FieldRealization, MatrixField};
use crate::error::{Error, Result};
use crate::linalg::{det, eigenvalues_complex, hermitian_eigenvalues, is_near_singular, CMatrix};
use crate::oracle::{estimate, MCEstimate, Scheme, DEFAULT_BATCHES};
use crate::rng::StreamSeed;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

/// |det K| below this times (row-norm scale)ᴺ is treated as singular.
pub const SINGULAR_REL: f64 = 1e-12;
/// |raw − W| above this means the grid did not resolve the phase.
pub const INTEGER_TOL: f64 = 1e-3;
/// Largest phase step between neighbouring grid points that counts as resolved.
pub const MAX_PHASE_STEP: f64 = PI / 2.0;
pub const MIN_GRID: usize = 16;
/// Skip fraction above which a correlator estimate is flagged.
pub const CORR_SKIP_WARN: f64 = 0.01;

fn grid_point(j: usize, grid: usize) -> f64 {
    2.0 * PI * j as f64 / grid as f64
}

/// w(p) = d/dp ln det K(p) = tr K(p)⁻¹ K′(p).
pub fn winding_density(field: &MatrixField, real: &FieldRealization, p: f64) -> Result<C64> {
    let k = field_eval(field, real, p)?;
    let lu = k.clone().lu();
    let d = lu.determinant();
    if is_near_singular(&k, d, SINGULAR_REL) {
        return Err(Error::NearSingular { p });
    }
    let dk = field_deriv(field, real, p)?;
    let x = lu.solve(&dk).ok_or(Error::NearSingular { p })?;
    Ok(x.trace())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindingResult {
    pub w_value: i64,
    /// Total unwrapped phase change / 2π before rounding.
    pub raw: f64,
    /// Grid actually used (after a possible refinement).
    pub grid: usize,
}

fn det_at(field: &MatrixField, real: &FieldRealization, p: f64) -> Result<C64> {
    let k = field_eval(field, real, p)?;
    let d = det(&k);
    if is_near_singular(&k, d, SINGULAR_REL) {
        return Err(Error::NearSingular { p });
    }
    Ok(d)
}

enum Unwrap {
    Resolved(f64),
    Unresolved(String),
}

fn unwrap_phase(field: &MatrixField, real: &FieldRealization, grid: usize) -> Result<Unwrap> {
    let mut prev = det_at(field, real, 0.0)?;
    let mut total = 0.0;
    let mut worst: f64 = 0.0;
    for j in 1..=grid {
        let d = if j == grid { det_at(field, real, 2.0 * PI)? } else { det_at(field, real, grid_point(j, grid))? };
        let step = (d / prev).arg();
        worst = worst.max(step.abs());
        total += step;
        prev = d;
    }
    let raw = total / (2.0 * PI);
    if worst > MAX_PHASE_STEP {
        return Ok(Unwrap::Unresolved(format!("phase step {worst:.3} rad exceeds pi/2 on a {grid}-point grid")));
    }
    if (raw - raw.round()).abs() > INTEGER_TOL {
        return Ok(Unwrap::Unresolved(format!("raw winding {raw} is not an integer on a {grid}-point grid")));
    }
    Ok(Unwrap::Resolved(raw))
}

/// W = (1/2π)·(unwrapped phase change of det K over [0, 2π]); one retry on a
/// 4× finer grid if the phase is not resolved.
pub fn winding_number(field: &MatrixField, real: &FieldRealization, grid: usize) -> Result<WindingResult> {
    if grid < MIN_GRID {
        return Err(Error::Domain(format!("grid must have at least {MIN_GRID} points, got {grid}")));
    }
    let mut g = grid;
    for attempt in 0..2 {
        match unwrap_phase(field, real, g)? {
            Unwrap::Resolved(raw) => return Ok(WindingResult { w_value: raw.round() as i64, raw, grid: g }),
            Unwrap::Unresolved(msg) if attempt == 1 => return Err(Error::Resolution(msg)),
            Unwrap::Unresolved(_) => g *= 4,
        }
    }
    unreachable!("the loop returns on the second attempt")
}

/// Periodic trapezoidal rule for (1/2πi)·∮ w(p) dp.
pub fn winding_from_density(field: &MatrixField, real: &FieldRealization, grid: usize) -> Result<C64> {
    let h = 2.0 * PI / grid as f64;
    let mut s = C64::new(0.0, 0.0);
    for j in 0..grid {
        s += winding_density(field, real, grid_point(j, grid))?;
    }
    Ok(s * h / C64::new(0.0, 2.0 * PI))
}

/// Periodic trapezoidal rule for ∮ Re w(p) dp (zero for every realization).
pub fn loop_integral_real_part(field: &MatrixField, real: &FieldRealization, grid: usize) -> Result<f64> {
    let h = 2.0 * PI / grid as f64;
    let mut s = 0.0;
    for j in 0..grid {
        s += winding_density(field, real, grid_point(j, grid))?.re;
    }
    Ok(s * h)
}

/// Spectral data of H(p) = [[0, K], [K†, 0]] and K(p) along the contour.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowData {
    pub grid: Vec<f64>,
    /// Sorted 2N eigenvalues of H at each grid point.
    pub h_eigs: Vec<Vec<f64>>,
    /// N eigenvalues of K, continued between neighbouring grid points.
    pub k_eigs: Vec<Vec<C64>>,
    pub det_track: Vec<C64>,
}

fn chiral_block(k: &CMatrix) -> CMatrix {
    let n = k.nrows();
    let mut h = CMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, n), (n, n)).copy_from(k);
    h.view_mut((n, 0), (n, n)).copy_from(&k.adjoint());
    h
}

/// Greedy nearest-neighbour relabeling of `new` to follow `prev`.
fn continue_eigs(prev: &[C64], mut new: Vec<C64>) -> Vec<C64> {
    let mut out = Vec::with_capacity(prev.len());
    for &p in prev {
        let (idx, _) = new
            .iter()
            .enumerate()
            .map(|(i, z)| (i, (z - p).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("same length");
        out.push(new.swap_remove(idx));
    }
    out
}

/// Flow over grid_size + 1 points p_j = 2πj/grid_size (both endpoints).
pub fn flow_trace(field: &MatrixField, real: &FieldRealization, grid_size: usize) -> Result<FlowData> {
    if grid_size < 2 {
        return Err(Error::Domain(format!("flow grid needs at least 2 intervals, got {grid_size}")));
    }
    let pts: Vec<f64> = (0..=grid_size).map(|j| grid_point(j, grid_size)).collect();
    let per_point: Vec<(Vec<f64>, Vec<C64>, C64)> = pts
        .par_iter()
        .map(|&p| {
            let k = field_eval(field, real, p)?;
            let h = hermitian_eigenvalues(&chiral_block(&k));
            Ok((h, eigenvalues_complex(&k), det(&k)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut h_eigs = Vec::with_capacity(pts.len());
    let mut k_eigs: Vec<Vec<C64>> = Vec::with_capacity(pts.len());
    let mut det_track = Vec::with_capacity(pts.len());
    for (h, mut ke, d) in per_point {
        ke = match k_eigs.last() {
            Some(prev) => continue_eigs(prev, ke),
            None => {
                ke.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
                ke
            }
        };
        h_eigs.push(h);
        k_eigs.push(ke);
        det_track.push(d);
    }
    Ok(FlowData { grid: pts, h_eigs, k_eigs, det_track })
}

impl FlowData {
    pub fn header(&self) -> Vec<String> {
        let n = self.k_eigs.first().map_or(0, |k| k.len());
        let mut h = vec!["p".to_string(), "reDet".into(), "imDet".into()];
        h.extend((1..=2 * n).map(|j| format!("h_eig_{j}")));
        for j in 1..=n {
            h.push(format!("reK_eig_{j}"));
            h.push(format!("imK_eig_{j}"));
        }
        h
    }

    /// CSV with a header row; an optional leading `# …` comment line.
    pub fn write_csv<W: Write>(&self, mut w: W, comment: Option<&str>) -> std::io::Result<()> {
        if let Some(c) = comment {
            for line in c.lines() {
                writeln!(w, "# {line}")?;
            }
        }
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.header())?;
        for i in 0..self.grid.len() {
            let mut row = vec![self.grid[i].to_string(), self.det_track[i].re.to_string(), self.det_track[i].im.to_string()];
            row.extend(self.h_eigs[i].iter().map(|x| x.to_string()));
            for z in &self.k_eigs[i] {
                row.push(z.re.to_string());
                row.push(z.im.to_string());
            }
            out.write_record(&row)?;
        }
        out.flush()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindingStats {
    pub histogram: BTreeMap<i64, usize>,
    /// One entry per realization; `None` for a rejected run.
    pub values: Vec<Option<i64>>,
    pub rejected: usize,
    /// Largest |raw − W| among accepted runs.
    pub max_integer_dev: f64,
}

/// Winding numbers of `samples` independent realizations; realization i
/// draws from stream i. Unresolved or singular runs are rejected and counted.
pub fn winding_histogram(field: &MatrixField, samples: usize, grid_size: usize, seed: StreamSeed) -> Result<WindingStats> {
    winding_histogram_with(field, samples, grid_size, seed, |r| r)
}

/// As [`winding_histogram`], with a map applied to each realization first
/// (e.g. K₂ → −K₂ for the W → −W symmetry check).
pub fn winding_histogram_with<M>(
    field: &MatrixField,
    samples: usize,
    grid_size: usize,
    seed: StreamSeed,
    map: M,
) -> Result<WindingStats>
where
    M: Fn(FieldRealization) -> FieldRealization + Sync,
{
    if samples == 0 {
        return Err(Error::Domain("samples must be at least 1".into()));
    }
    if grid_size < MIN_GRID {
        return Err(Error::Domain(format!("grid must have at least {MIN_GRID} points, got {grid_size}")));
    }
    field.validate()?;
    let runs: Vec<Result<Option<WindingResult>>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let real = map(FieldRealization::sample(field.n, &mut seed.stream(i as u64))?);
            match winding_number(field, &real, grid_size) {
                Ok(w) => Ok(Some(w)),
                Err(Error::Resolution(_)) | Err(Error::NearSingular { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut histogram = BTreeMap::new();
    let mut values = Vec::with_capacity(samples);
    let mut rejected = 0;
    let mut max_dev: f64 = 0.0;
    for r in runs {
        match r? {
            Some(w) => {
                *histogram.entry(w.w_value).or_insert(0) += 1;
                max_dev = max_dev.max((w.raw - w.w_value as f64).abs());
                values.push(Some(w.w_value));
            }
            None => {
                rejected += 1;
                values.push(None);
            }
        }
    }
    Ok(WindingStats { histogram, values, rejected, max_integer_dev: max_dev })
}

/// C_k = ⟨w(p₁)⋯w(p_k)⟩; draws with a singular K at any momentum are skipped.
pub fn corr_mc(field: &MatrixField, momenta: &[f64], samples: usize, seed: StreamSeed, scheme: Scheme) -> Result<MCEstimate> {
    if momenta.is_empty() {
        return Err(Error::Domain("need at least one momentum".into()));
    }
    field.validate()?;
    let mut e = estimate(samples, DEFAULT_BATCHES, seed, scheme, |rng| {
        let real = FieldRealization::sample(field.n, rng).ok()?;
        let mut v = C64::new(1.0, 0.0);
        for &p in momenta {
            v *= winding_density(field, &real, p).ok()?;
        }
        Some(v)
    })?;
    e.unstable = e.skip_fraction > CORR_SKIP_WARN;
    Ok(e)
}
