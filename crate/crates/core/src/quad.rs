//! Adaptive Gauss–Kronrod integration.
//!
//! Everything is built on a single vector-valued 21-point Gauss–Kronrod
//! bisection driver. Infinite ranges are mapped algebraically, multi-D
//! integrals are nested 1D integrals, and integrands with isolated
//! 1/|z − z₀| singularities in the plane use a smooth partition of unity
//! with polar coordinates around each pole.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdiv: usize,
    /// Split point between the central region and the mapped tails.
    pub radial_cut: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_subdiv: 2000,
            radial_cut: 50.0,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Domain("quadrature tolerances must be positive".into()));
        }
        if self.max_subdiv < 1 {
            return Err(Error::Domain("max_subdiv must be at least 1".into()));
        }
        if !(self.radial_cut > 0.0) {
            return Err(Error::Domain("radial_cut must be positive".into()));
        }
        Ok(())
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: C64,
    pub err_est: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl QuadResult {
    pub fn exact(value: C64) -> Self {
        Self { value, err_est: 0.0, evaluations: 0, converged: true }
    }

    /// Turn a not-converged result into an error.
    pub fn require_converged(self, what: &str) -> Result<Self> {
        if self.converged && self.err_est.is_finite() && self.value.is_finite() {
            Ok(self)
        } else {
            Err(Error::NotConverged(format!(
                "{what}: value {} with error estimate {:.3e}",
                self.value, self.err_est
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VecQuadResult {
    pub values: Vec<C64>,
    pub errors: Vec<f64>,
    pub evaluations: usize,
    pub converged: bool,
}

impl VecQuadResult {
    pub(crate) fn zeros(dim: usize) -> Self {
        Self { values: vec![C64::new(0.0, 0.0); dim], errors: vec![0.0; dim], evaluations: 0, converged: true }
    }

    pub fn component(&self, i: usize) -> QuadResult {
        QuadResult {
            value: self.values[i],
            err_est: self.errors[i],
            evaluations: self.evaluations,
            converged: self.converged,
        }
    }

    fn accumulate(&mut self, other: &VecQuadResult) {
        for (v, o) in self.values.iter_mut().zip(&other.values) {
            *v += o;
        }
        for (e, o) in self.errors.iter_mut().zip(&other.errors) {
            *e += o;
        }
        self.evaluations += other.evaluations;
        self.converged &= other.converged;
    }
}

/// One integration axis. Endpoints may be infinite; `breaks` are interior
/// points where the integrand is known to be non-smooth.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
    pub breaks: Vec<f64>,
}

impl Domain {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi, breaks: Vec::new() }
    }

    pub fn real_line() -> Self {
        Self::new(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn with_breaks(mut self, breaks: impl IntoIterator<Item = f64>) -> Self {
        self.breaks.extend(breaks);
        self
    }
}

// 21-point Kronrod abscissae with the embedded 10-point Gauss rule.
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600134054769,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[derive(Debug, Clone, Copy)]
enum Map {
    Finite,
    /// x = t/(1−t²), t ∈ (−1, 1)
    Both,
    /// x = a + t/(1−t), t ∈ [0, 1)
    Upper(f64),
    /// x = b − t/(1−t), t ∈ [0, 1)
    Lower(f64),
}

impl Map {
    fn for_range(lo: f64, hi: f64) -> (Map, f64, f64) {
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => (Map::Finite, lo, hi),
            (false, false) => (Map::Both, -1.0, 1.0),
            (true, false) => (Map::Upper(lo), 0.0, 1.0),
            (false, true) => (Map::Lower(hi), 0.0, 1.0),
        }
    }

    #[inline]
    fn apply(&self, t: f64) -> (f64, f64) {
        match *self {
            Map::Finite => (t, 1.0),
            Map::Both => {
                let d = 1.0 - t * t;
                (t / d, (1.0 + t * t) / (d * d))
            }
            Map::Upper(a) => {
                let d = 1.0 - t;
                (a + t / d, 1.0 / (d * d))
            }
            Map::Lower(b) => {
                let d = 1.0 - t;
                (b - t / d, 1.0 / (d * d))
            }
        }
    }

    fn inverse(&self, x: f64) -> f64 {
        match *self {
            Map::Finite => x,
            Map::Both => {
                if x == 0.0 {
                    0.0
                } else {
                    2.0 * x / (1.0 + (1.0 + 4.0 * x * x).sqrt())
                }
            }
            Map::Upper(a) => (x - a) / (1.0 + x - a),
            Map::Lower(b) => (b - x) / (1.0 + b - x),
        }
    }
}

struct Piece {
    a: f64,
    b: f64,
    vals: Vec<C64>,
    errs: Vec<f64>,
    key: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.key.total_cmp(&other.key) == Ordering::Equal
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        // ties broken by position so the schedule is fully deterministic
        self.key.total_cmp(&other.key).then_with(|| other.a.total_cmp(&self.a))
    }
}

struct Rule {
    fv: Vec<C64>,
    resk: Vec<C64>,
    resg: Vec<C64>,
    absv: Vec<f64>,
}

impl Rule {
    fn new(dim: usize) -> Self {
        Self {
            fv: vec![C64::new(0.0, 0.0); 21 * dim],
            resk: vec![C64::new(0.0, 0.0); dim],
            resg: vec![C64::new(0.0, 0.0); dim],
            absv: vec![0.0; dim],
        }
    }
}

/// One GK21 panel on [a, b] in mapped coordinates. Writes the integral and
/// the error estimate of each component.
fn gk21<F>(f: &mut F, map: Map, a: f64, b: f64, dim: usize, rule: &mut Rule, vals: &mut [C64], errs: &mut [f64])
where
    F: FnMut(f64, &mut [C64]),
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    // node order: 0 = centre, then ±XGK[j] for j = 0..10
    for k in 0..21 {
        let t = if k == 0 {
            c
        } else {
            let j = (k - 1) / 2;
            if k % 2 == 1 {
                c - h * XGK[j]
            } else {
                c + h * XGK[j]
            }
        };
        let (x, jac) = map.apply(t);
        let out = &mut rule.fv[k * dim..(k + 1) * dim];
        for o in out.iter_mut() {
            *o = C64::new(0.0, 0.0);
        }
        if jac.is_finite() && x.is_finite() {
            f(x, out);
            for o in out.iter_mut() {
                *o *= jac;
            }
        }
    }
    for i in 0..dim {
        let fc = rule.fv[i];
        let mut resk = fc * WGK[10];
        let mut resg = C64::new(0.0, 0.0);
        let mut resabs = fc.norm() * WGK[10];
        for j in 0..10 {
            let f1 = rule.fv[(2 * j + 1) * dim + i];
            let f2 = rule.fv[(2 * j + 2) * dim + i];
            resk += (f1 + f2) * WGK[j];
            resabs += (f1.norm() + f2.norm()) * WGK[j];
            if j % 2 == 1 {
                resg += (f1 + f2) * WG[j / 2];
            }
        }
        let mean = resk * 0.5;
        let mut resasc = (fc - mean).norm() * WGK[10];
        for j in 0..10 {
            let f1 = rule.fv[(2 * j + 1) * dim + i];
            let f2 = rule.fv[(2 * j + 2) * dim + i];
            resasc += ((f1 - mean).norm() + (f2 - mean).norm()) * WGK[j];
        }
        rule.resk[i] = resk * h;
        rule.resg[i] = resg * h;
        rule.absv[i] = resabs * h.abs();
        let resasc = resasc * h.abs();
        let mut err = ((resk - resg) * h).norm();
        if resasc != 0.0 && err != 0.0 {
            err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
        }
        let floor = 50.0 * f64::EPSILON * rule.absv[i];
        if floor > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            err = err.max(floor);
        }
        vals[i] = rule.resk[i];
        errs[i] = err;
    }
}

/// Vector-valued adaptive integration of `f` over `[lo, hi]` (either end may
/// be infinite). Only the first `n_conv` components drive refinement; the
/// remaining ones are integrated along (used to carry inner error estimates
/// through nested integrals).
fn adapt<F>(mut f: F, dom: &Domain, dim: usize, n_conv: usize, cfg: &QuadConfig) -> VecQuadResult
where
    F: FnMut(f64, &mut [C64]),
{
    let mut res = VecQuadResult::zeros(dim);
    if dom.lo == dom.hi {
        return res;
    }
    if dom.lo > dom.hi {
        let flipped = Domain { lo: dom.hi, hi: dom.lo, breaks: dom.breaks.clone() };
        let mut r = adapt(f, &flipped, dim, n_conv, cfg);
        for v in r.values.iter_mut() {
            *v = -*v;
        }
        return r;
    }
    let (map, t0, t1) = Map::for_range(dom.lo, dom.hi);
    let mut cuts: Vec<f64> = vec![t0, t1];
    for &x in &dom.breaks {
        if x > dom.lo && x < dom.hi && x.is_finite() {
            cuts.push(map.inverse(x));
        }
    }
    // Doubly infinite ranges: separate the core from the mapped tails.
    if let Map::Both = map {
        let r = cfg.radial_cut;
        cuts.push(0.0);
        cuts.push(map.inverse(r));
        cuts.push(map.inverse(-r));
    }
    cuts.sort_by(|a, b| a.total_cmp(b));
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * (1.0 + b.abs()));

    let mut rule = Rule::new(dim);
    let mut heap = BinaryHeap::new();
    let mut done: Vec<Piece> = Vec::new();
    let mut evals = 0usize;
    let mut tot_v = vec![C64::new(0.0, 0.0); dim];
    let mut tot_e = vec![0.0; dim];

    let mut eval_piece = |a: f64, b: f64, rule: &mut Rule, evals: &mut usize| -> Piece {
        let mut vals = vec![C64::new(0.0, 0.0); dim];
        let mut errs = vec![0.0; dim];
        gk21(&mut f, map, a, b, dim, rule, &mut vals, &mut errs);
        *evals += 21;
        let key = errs[..n_conv].iter().cloned().fold(0.0, f64::max);
        Piece { a, b, vals, errs, key }
    };

    for w in cuts.windows(2) {
        let p = eval_piece(w[0], w[1], &mut rule, &mut evals);
        for i in 0..dim {
            tot_v[i] += p.vals[i];
            tot_e[i] += p.errs[i];
        }
        heap.push(p);
    }

    let mut n_pieces = heap.len();
    let mut converged = false;
    loop {
        let scale = tot_v[..n_conv].iter().map(|v| v.norm()).fold(0.0, f64::max);
        let err = tot_e[..n_conv].iter().cloned().fold(0.0, f64::max);
        if err <= cfg.abs_tol.max(cfg.rel_tol * scale) {
            converged = true;
            break;
        }
        if n_pieces >= cfg.max_subdiv {
            break;
        }
        let Some(worst) = heap.pop() else {
            // everything left is at machine resolution
            converged = err <= 1e3 * cfg.abs_tol.max(cfg.rel_tol * scale);
            break;
        };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) || (worst.b - worst.a) < 1e-14 * (1.0 + mid.abs()) {
            done.push(worst);
            continue;
        }
        let left = eval_piece(worst.a, mid, &mut rule, &mut evals);
        let right = eval_piece(mid, worst.b, &mut rule, &mut evals);
        for i in 0..dim {
            tot_v[i] += left.vals[i] + right.vals[i] - worst.vals[i];
            tot_e[i] += left.errs[i] + right.errs[i] - worst.errs[i];
        }
        heap.push(left);
        heap.push(right);
        n_pieces += 1;
    }

    // Re-sum deterministically in order of position.
    let mut all: Vec<Piece> = heap.into_vec();
    all.extend(done);
    all.sort_by(|p, q| p.a.total_cmp(&q.a));
    for p in &all {
        for i in 0..dim {
            res.values[i] += p.vals[i];
            res.errors[i] += p.errs[i];
        }
    }
    res.evaluations = evals;
    res.converged = converged;
    res
}

/// ∫ f over `[lo, hi]`; infinite endpoints allowed.
pub fn integrate_1d<F>(f: F, lo: f64, hi: f64, cfg: &QuadConfig) -> QuadResult
where
    F: Fn(f64) -> C64,
{
    integrate_1d_breaks(f, &Domain::new(lo, hi), cfg)
}

pub fn integrate_1d_breaks<F>(f: F, dom: &Domain, cfg: &QuadConfig) -> QuadResult
where
    F: Fn(f64) -> C64,
{
    adapt(|x, out: &mut [C64]| out[0] = f(x), dom, 1, 1, cfg).component(0)
}

/// Vector-valued 1D integral; `f(x, out)` fills `dim` components.
pub fn integrate_1d_vec<F>(f: F, dom: &Domain, dim: usize, cfg: &QuadConfig) -> VecQuadResult
where
    F: FnMut(f64, &mut [C64]),
{
    adapt(f, dom, dim, dim, cfg)
}

/// Cauchy principal value of ∫ f over `[lo, hi]` for a simple pole at `pole`,
/// computed by pairing f(pole + t) + f(pole − t).
pub fn integrate_1d_pv<F>(f: F, pole: f64, lo: f64, hi: f64, cfg: &QuadConfig) -> Result<QuadResult>
where
    F: Fn(f64) -> C64,
{
    if !(pole > lo && pole < hi) || !pole.is_finite() {
        return Err(Error::Domain(format!("principal-value pole {pole} must lie strictly inside ({lo}, {hi})")));
    }
    let left = pole - lo;
    let right = hi - pole;
    let d = left.min(right);
    let sym = integrate_1d(|t| f(pole + t) + f(pole - t), 0.0, d, cfg);
    let mut out = sym;
    if left > d {
        let r = integrate_1d(&f, lo, pole - d, cfg);
        out.value += r.value;
        out.err_est += r.err_est;
        out.evaluations += r.evaluations;
        out.converged &= r.converged;
    }
    if right > d {
        let r = integrate_1d(&f, pole + d, hi, cfg);
        out.value += r.value;
        out.err_est += r.err_est;
        out.evaluations += r.evaluations;
        out.converged &= r.converged;
    }
    Ok(out)
}

/// Vector-valued integral over `dom` in which a simple real pole at `pole`
/// (if inside the domain) is taken as a principal value: a symmetric window
/// around it is integrated as f(x₀ + t) + f(x₀ − t).
pub fn integrate_1d_vec_pv<F>(f: F, dom: &Domain, pole: Option<f64>, dim: usize, cfg: &QuadConfig) -> VecQuadResult
where
    F: FnMut(f64, &mut [C64]),
{
    adapt_pv(f, dom, pole, dim, dim, cfg)
}

pub(crate) fn adapt_pv<F>(mut f: F, dom: &Domain, pole: Option<f64>, dim: usize, n_conv: usize, cfg: &QuadConfig) -> VecQuadResult
where
    F: FnMut(f64, &mut [C64]),
{
    let (lo, hi) = (dom.lo.min(dom.hi), dom.lo.max(dom.hi));
    let x0 = match pole {
        Some(x0) if x0 > lo && x0 < hi && x0.is_finite() => x0,
        _ => return adapt(f, dom, dim, n_conv, cfg),
    };
    let flip = dom.lo > dom.hi;
    let d = (x0 - lo).min(hi - x0).min(1.0 + x0.abs());
    let mut total = VecQuadResult::zeros(dim);
    let mut tmp = vec![C64::new(0.0, 0.0); dim];
    let sym_breaks: Vec<f64> = dom.breaks.iter().map(|b| (b - x0).abs()).filter(|&t| t > 0.0 && t < d).collect();
    {
        let sym = adapt(
            |t, out: &mut [C64]| {
                f(x0 + t, out);
                f(x0 - t, &mut tmp);
                for (o, v) in out.iter_mut().zip(&tmp) {
                    *o += v;
                }
            },
            &Domain::new(0.0, d).with_breaks(sym_breaks),
            dim,
            n_conv,
            cfg,
        );
        total.accumulate(&sym);
    }
    for (a, b) in [(lo, x0 - d), (x0 + d, hi)] {
        if b > a {
            let inner: Vec<f64> = dom.breaks.iter().cloned().filter(|&x| x > a && x < b).collect();
            let r = adapt(&mut f, &Domain::new(a, b).with_breaks(inner), dim, n_conv, cfg);
            total.accumulate(&r);
        }
    }
    if flip {
        total.values.iter_mut().for_each(|v| *v = -*v);
    }
    total
}

/// Nested integration over several axes; the domain of each axis may depend
/// on the values of the outer axes. `f(x, out)` receives the full point.
pub fn integrate_nested<D, F>(domain: D, f: F, axes: usize, dim: usize, cfg: &QuadConfig) -> VecQuadResult
where
    D: Fn(usize, &[f64]) -> Domain,
    F: Fn(&[f64], &mut [C64]),
{
    let counter = Cell::new(0usize);
    let mut point = vec![0.0; axes];
    let mut r = nested_level(&domain, &f, 0, axes, &mut point, dim, cfg, &counter);
    r.evaluations = counter.get();
    r
}

#[allow(clippy::too_many_arguments)]
fn nested_level<D, F>(
    domain: &D,
    f: &F,
    level: usize,
    axes: usize,
    point: &mut Vec<f64>,
    dim: usize,
    cfg: &QuadConfig,
    counter: &Cell<usize>,
) -> VecQuadResult
where
    D: Fn(usize, &[f64]) -> Domain,
    F: Fn(&[f64], &mut [C64]),
{
    let dom = domain(level, &point[..level]);
    if level + 1 == axes {
        let mut pt = point.clone();
        let r = adapt(
            |x, out: &mut [C64]| {
                pt[level] = x;
                f(&pt, out);
            },
            &dom,
            dim,
            dim,
            cfg,
        );
        counter.set(counter.get() + r.evaluations);
        return r;
    }
    // inner values in the first `dim` slots, inner error estimates after
    let mut conv = true;
    let outer = {
        let conv_ref = &mut conv;
        let mut pt = point.clone();
        adapt(
            |x, out: &mut [C64]| {
                pt[level] = x;
                let inner = nested_level(domain, f, level + 1, axes, &mut pt, dim, cfg, counter);
                *conv_ref &= inner.converged;
                for i in 0..dim {
                    out[i] = inner.values[i];
                    out[dim + i] = C64::new(inner.errors[i], 0.0);
                }
            },
            &dom,
            2 * dim,
            dim,
            cfg,
        )
    };
    let mut r = VecQuadResult::zeros(dim);
    for i in 0..dim {
        r.values[i] = outer.values[i];
        r.errors[i] = outer.errors[i] + outer.values[dim + i].re.abs();
    }
    r.converged = outer.converged && conv;
    r
}

/// ∫∫ over the upper half-plane y > 0 of f(x, y).
pub fn integrate_halfplane<F>(f: F, cfg: &QuadConfig) -> QuadResult
where
    F: Fn(f64, f64) -> C64,
{
    integrate_halfplane_vec(|x, y, out: &mut [C64]| out[0] = f(x, y), 1, cfg).component(0)
}

pub fn integrate_halfplane_vec<F>(f: F, dim: usize, cfg: &QuadConfig) -> VecQuadResult
where
    F: Fn(f64, f64, &mut [C64]),
{
    integrate_nested(
        |level, _| if level == 0 { Domain::real_line() } else { Domain::new(0.0, f64::INFINITY) },
        |pt, out| f(pt[0], pt[1], out),
        2,
        dim,
        cfg,
    )
}

/// Nested integration over a fixed box of up to four axes.
pub fn integrate_product<F>(f: F, domains: &[Domain], cfg: &QuadConfig) -> Result<QuadResult>
where
    F: Fn(&[f64]) -> C64,
{
    if domains.is_empty() || domains.len() > 4 {
        return Err(Error::InvalidDimension(format!("integrate_product supports 1 to 4 axes, got {}", domains.len())));
    }
    let r = integrate_nested(|level, _| domains[level].clone(), |pt, out| out[0] = f(pt), domains.len(), 1, cfg);
    Ok(r.component(0))
}

/// C∞ bump: 1 on [0, ½], 0 on [1, ∞).
#[inline]
pub fn bump(r: f64) -> f64 {
    if r <= 0.5 {
        1.0
    } else if r >= 1.0 {
        0.0
    } else {
        let s = 2.0 * (r - 0.5);
        let e0 = (-1.0 / s).exp();
        let e1 = (-1.0 / (1.0 - s)).exp();
        1.0 - e0 / (e0 + e1)
    }
}

/// Integral over the whole plane of an integrand that may jump across the
/// real axis and may carry integrable 1/|z − zₖ| singularities at `poles`
/// (anywhere, including on the real axis).
pub fn integrate_plane_with_poles<F>(f: F, poles: &[C64], dim: usize, cfg: &QuadConfig) -> Result<VecQuadResult>
where
    F: Fn(f64, f64, &mut [C64]),
{
    let mut centres: Vec<C64> = Vec::new();
    for &p in poles {
        if p.re.is_nan() || p.im.is_nan() {
            return Err(Error::Domain(format!("pole location is NaN: {p}")));
        }
        if !p.is_finite() {
            continue;
        }
        if p.im.abs() <= 1e-9 * (1.0 + p.norm()) {
            // on the axis itself: still an integrable 1/|z − z₀| point
            let p = C64::new(p.re, 0.0);
            if !centres.iter().any(|c| (c - p).norm() <= 1e-12 * (1.0 + p.norm())) {
                centres.push(p);
            }
            continue;
        }
        if !centres.iter().any(|c| (c - p).norm() <= 1e-12 * (1.0 + p.norm())) {
            centres.push(p);
        }
    }
    let radii: Vec<f64> = centres
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let mut r: f64 = 0.5;
            for (j, &o) in centres.iter().enumerate() {
                if j != k {
                    r = r.min(0.45 * (c - o).norm());
                }
            }
            r
        })
        .collect();
    let chi_sum = |x: f64, y: f64| -> f64 {
        centres
            .iter()
            .zip(&radii)
            .map(|(c, &r)| bump(((x - c.re).powi(2) + (y - c.im).powi(2)).sqrt() / r))
            .sum()
    };

    let mut total = VecQuadResult::zeros(dim);
    let mut buf_dim = dim;
    if buf_dim == 0 {
        buf_dim = 1;
    }

    // remainder on each half-plane
    for sign in [1.0f64, -1.0] {
        let xb: Vec<f64> = centres.iter().zip(&radii).filter(|(c, _)| c.im * sign > 0.0).flat_map(|(c, &r)| [c.re - r, c.re, c.re + r]).collect();
        let yb: Vec<f64> = centres.iter().filter(|c| c.im * sign > 0.0).map(|c| c.im.abs()).collect();
        let r = integrate_nested(
            |level, _| {
                if level == 0 {
                    Domain::real_line().with_breaks(xb.iter().cloned())
                } else {
                    Domain::new(0.0, f64::INFINITY).with_breaks(yb.iter().cloned())
                }
            },
            |pt, out| {
                let x = pt[0];
                let y = sign * pt[1];
                let w = 1.0 - chi_sum(x, y);
                if w <= 0.0 {
                    out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
                    return;
                }
                f(x, y, out);
                out.iter_mut().for_each(|o| *o *= w);
            },
            2,
            buf_dim,
            cfg,
        );
        total.accumulate(&r);
    }

    // polar discs
    for (c, &rho) in centres.iter().zip(&radii) {
        let (x0, y0) = (c.re, c.im);
        let mut tb = vec![0.0, 0.5 * PI, PI, 1.5 * PI, 2.0 * PI];
        if y0.abs() < rho {
            let t1 = (-y0 / rho).asin().rem_euclid(2.0 * PI);
            let t2 = (PI - (-y0 / rho).asin()).rem_euclid(2.0 * PI);
            tb.push(t1);
            tb.push(t2);
        }
        tb.sort_by(|a, b| a.total_cmp(b));
        tb.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        let mut seg = VecQuadResult::zeros(buf_dim);
        for w in tb.windows(2) {
            let r = integrate_nested(
                |level, pre| {
                    if level == 0 {
                        Domain::new(w[0], w[1])
                    } else {
                        let s = pre[0].sin();
                        let mut d = Domain::new(0.0, rho).with_breaks([0.5 * rho]);
                        if s != 0.0 {
                            let rs = -y0 / s;
                            if rs > 0.0 && rs < rho {
                                d.breaks.push(rs);
                            }
                        }
                        d
                    }
                },
                |pt, out| {
                    let (th, r) = (pt[0], pt[1]);
                    let x = x0 + r * th.cos();
                    let y = y0 + r * th.sin();
                    let wgt = r * bump(r / rho);
                    if wgt == 0.0 || y == 0.0 {
                        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
                        return;
                    }
                    f(x, y, out);
                    out.iter_mut().for_each(|o| *o *= wgt);
                },
                2,
                buf_dim,
                cfg,
            );
            seg.accumulate(&r);
        }
        total.accumulate(&seg);
    }
    total.values.truncate(dim);
    total.errors.truncate(dim);
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> QuadConfig {
        QuadConfig::default().with_rel_tol(1e-11).with_abs_tol(1e-14)
    }

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn linear_on_unit_interval() {
        let r = integrate_1d(re, 0.0, 1.0, &cfg());
        assert!((r.value.re - 0.5).abs() < 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn beta_integral_on_real_line() {
        let r = integrate_1d(|x| re(x * x / (1.0 + x * x).powi(4)), f64::NEG_INFINITY, f64::INFINITY, &cfg());
        assert!((r.value.re - PI / 16.0).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn cosine_cubed_integral() {
        let r = integrate_1d(|x| re((1.0 + x * x).powf(-2.5)), f64::NEG_INFINITY, f64::INFINITY, &cfg());
        assert!((r.value.re - 4.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn semi_infinite_and_reversed() {
        let r = integrate_1d(|x| re((-x).exp()), 0.0, f64::INFINITY, &cfg());
        assert!((r.value.re - 1.0).abs() < 1e-11);
        let r = integrate_1d(|x| re(x.exp()), f64::NEG_INFINITY, 0.0, &cfg());
        assert!((r.value.re - 1.0).abs() < 1e-11);
        let r = integrate_1d(re, 1.0, 0.0, &cfg());
        assert!((r.value.re + 0.5).abs() < 1e-12);
    }

    #[test]
    fn principal_values() {
        let c = cfg();
        let r = integrate_1d_pv(|x| re(1.0 / x), 0.0, -1.0, 1.0, &c).unwrap();
        assert!(r.value.norm() < 1e-12);
        let r = integrate_1d_pv(|x| re(1.0 / (x - 1.0)), 1.0, 0.0, 2.0, &c).unwrap();
        assert!(r.value.norm() < 1e-12);
        let r = integrate_1d_pv(|x| re(1.0 / ((x - 1.0) * (1.0 + x * x))), 1.0, f64::NEG_INFINITY, f64::INFINITY, &c).unwrap();
        assert!((r.value.re + PI / 2.0).abs() < 1e-9, "{}", r.value);
        assert!(integrate_1d_pv(|x| re(1.0 / x), 0.0, 0.0, 1.0, &c).is_err());
    }

    #[test]
    fn gaussian_halfplane() {
        let r = integrate_halfplane(|x, y| re((-x * x - y * y).exp()), &cfg());
        assert!((r.value.re - PI / 2.0).abs() < 1e-9);
    }

    #[test]
    fn algebraic_halfplane() {
        // polar: ∫₀^π dθ ∫₀^∞ r dr (1+r²)^{−3} = π/4
        let r = integrate_halfplane(|x, y| re((1.0 + x * x + y * y).powi(-3)), &cfg());
        assert!((r.value.re - PI / 4.0).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn four_axis_polynomial_and_three_axis_gaussian() {
        let d = vec![Domain::new(0.0, 1.0); 4];
        let r = integrate_product(|x| re(x[0] * x[1] * x[1] * x[2] * x[2] * x[2] * (1.0 + x[3])), &d, &cfg()).unwrap();
        assert!((r.value.re - 1.5 / 24.0).abs() < 1e-12, "{}", r.value);
        let d = vec![Domain::real_line(); 3];
        let c = QuadConfig::default().with_rel_tol(1e-7);
        let r = integrate_product(|x| re((-x.iter().map(|v| v * v).sum::<f64>()).exp()), &d, &c).unwrap();
        assert!((r.value.re - PI.powf(1.5)).abs() < 1e-6, "{}", r.value);
    }

    #[test]
    fn product_one_axis_matches_1d() {
        let f = |x: f64| re(1.0 / (1.0 + x.powi(4)));
        let a = integrate_product(|p| f(p[0]), &[Domain::real_line()], &cfg()).unwrap();
        let b = integrate_1d(f, f64::NEG_INFINITY, f64::INFINITY, &cfg());
        assert!((a.value - b.value).norm() < 1e-13);
    }

    #[test]
    fn product_two_axes_matches_halfplane() {
        let f = |x: f64, y: f64| C64::new(1.0 + x, y) / (1.0 + x * x + y * y).powi(3);
        let a = integrate_product(|p| f(p[0], p[1]), &[Domain::real_line(), Domain::new(0.0, f64::INFINITY)], &cfg())
            .unwrap();
        let b = integrate_halfplane(f, &cfg());
        assert!((a.value - b.value).norm() < 1e-10);
    }

    #[test]
    fn plane_with_pole_matches_polar_closed_form() {
        // ∫ e^{−|z−z₀|²}/|z − z₀| d²z = π^{3/2}, with a pole close to the real axis
        let c = cfg().with_rel_tol(1e-10);
        for z0 in [C64::new(0.3, 0.2), C64::new(-1.0, -0.05)] {
            let r = integrate_plane_with_poles(
                |x, y, out| {
                    let d2 = (x - z0.re).powi(2) + (y - z0.im).powi(2);
                    out[0] = re((-d2).exp() / d2.sqrt());
                },
                &[z0],
                1,
                &c,
            )
            .unwrap();
            assert!((r.values[0].re - PI.powf(1.5)).abs() < 1e-8, "{}", r.values[0]);
            assert!(r.converged);
        }
    }

    #[test]
    fn plane_with_pole_on_the_axis() {
        // sgn(y)/(z̄ − x₀)·e^{−|z|²}: the jump and the pole meet at x₀
        let x0 = 0.3;
        let f = |x: f64, y: f64| C64::new(y.signum(), 0.0) / C64::new(x - x0, -y) * (-(x * x + y * y)).exp();
        let r = integrate_plane_with_poles(|x, y, out| out[0] = f(x, y), &[C64::new(x0, 0.0)], 1, &cfg()).unwrap();
        // oracle: the real part is odd in y and cancels; the imaginary part is
        // 2∫_{y>0} y e^{−x²−y²}/((x−x₀)²+y²), done in polar coordinates about x₀
        let o = integrate_product(
            |p| {
                let (th, rr) = (p[0], p[1]);
                let (x, y) = (x0 + rr * th.cos(), rr * th.sin());
                C64::new(2.0 * th.sin() * (-(x * x + y * y)).exp(), 0.0)
            },
            &[Domain::new(0.0, PI), Domain::new(0.0, f64::INFINITY)],
            &cfg(),
        )
        .unwrap();
        assert!(r.values[0].re.abs() < 1e-9, "{}", r.values[0]);
        assert!((r.values[0].im - o.value.re).abs() < 1e-8, "{} vs {}", r.values[0], o.value);
    }

    #[test]
    fn bump_is_partition_friendly() {
        assert_eq!(bump(0.2), 1.0);
        assert_eq!(bump(1.2), 0.0);
        let mid = bump(0.75);
        assert!((mid - 0.5).abs() < 1e-12);
    }
}
