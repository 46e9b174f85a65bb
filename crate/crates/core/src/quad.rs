//! Adaptive Gauss-Kronrod quadrature in one dimension and nested box integration.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { rel_tol: 1e-6, abs_tol: 1e-12, max_subdivisions: 4000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
// Gauss weights for the odd-indexed Kronrod nodes
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut fv = [(0.0, 0.0); 7];
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    let mut abs = WGK[7] * fc.abs();
    for i in 0..7 {
        let dx = h * XGK[i];
        let (f1, f2) = (f(c - dx), f(c + dx));
        fv[i] = (f1, f2);
        k += WGK[i] * (f1 + f2);
        abs += WGK[i] * (f1.abs() + f2.abs());
        if i % 2 == 1 {
            g += WG[i / 2] * (f1 + f2);
        }
    }
    // error heuristic of the classical QUADPACK rule, robust to kinks between nodes
    let mean = 0.5 * k;
    let mut asc = WGK[7] * (fc - mean).abs();
    for i in 0..7 {
        asc += WGK[i] * ((fv[i].0 - mean).abs() + (fv[i].1 - mean).abs());
    }
    let h = h.abs();
    let (asc, abs) = (asc * h, abs * h);
    let mut err = ((k - g) * h).abs();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    if abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * abs);
    }
    (k * 0.5 * (b - a), err)
}

struct Interval {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive 15-point Gauss-Kronrod integration of `f` over `[a, b]`.
///
/// Returns the best estimate even when `max_subdivisions` is exhausted; the
/// caller can compare `error` with the requested tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<Quadrature> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidArgument(format!("integration limits [{a}, {b}] must be finite")));
    }
    if a == b {
        return Ok(Quadrature { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let (v, e) = kronrod15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Interval { a, b, value: v, error: e });
    let (mut total, mut err) = (v, e);
    let mut evaluations = 15;
    for _ in 0..opts.max_subdivisions {
        if !total.is_finite() {
            return Err(Error::InvalidArgument("integrand is not finite".into()));
        }
        if err <= opts.abs_tol.max(opts.rel_tol * total.abs()) {
            break;
        }
        let worst = heap.pop().expect("heap holds at least one interval");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            heap.push(worst);
            break;
        }
        let (v1, e1) = kronrod15(&f, worst.a, mid);
        let (v2, e2) = kronrod15(&f, mid, worst.b);
        evaluations += 30;
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Interval { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Interval { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // resum to shed accumulated cancellation
    let value = heap.iter().map(|i| i.value).sum();
    let error = heap.iter().map(|i| i.error).sum();
    Ok(Quadrature { value, error, evaluations })
}

/// Integrates a nonnegative `f` over `[a, b]` restricted to its support.
///
/// The support is located by sampling on a uniform mesh and bisecting each
/// transition between zero and positive samples; each support interval is then
/// integrated adaptively. This avoids the blind spot of fixed-node rules for
/// integrands such as `(λ - V)_+^q`, whose kink may fall between all nodes.
/// Support components narrower than the sampling mesh can be missed.
pub fn integrate_nonnegative<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<Quadrature> {
    const SAMPLES: usize = 256;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidArgument(format!("integration limits [{a}, {b}] must be finite")));
    }
    let xs: Vec<f64> = (0..=SAMPLES).map(|i| a + (b - a) * i as f64 / SAMPLES as f64).collect();
    let positive: Vec<bool> = xs.iter().map(|&x| f(x) > 0.0).collect();
    let mut evaluations = xs.len();
    let edge = |mut inside: f64, mut outside: f64, evaluations: &mut usize| {
        for _ in 0..64 {
            let mid = 0.5 * (inside + outside);
            if mid == inside || mid == outside {
                break;
            }
            *evaluations += 1;
            if f(mid) > 0.0 {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        outside
    };
    let mut total = Quadrature { value: 0.0, error: 0.0, evaluations: 0 };
    let mut i = 0;
    while i < xs.len() {
        if !positive[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < xs.len() && positive[i + 1] {
            i += 1;
        }
        let lo = if start == 0 { a } else { edge(xs[start], xs[start - 1], &mut evaluations) };
        let hi = if i + 1 == xs.len() { b } else { edge(xs[i], xs[i + 1], &mut evaluations) };
        let q = integrate(&f, lo, hi, opts)?;
        total.value += q.value;
        total.error += q.error;
        total.evaluations += q.evaluations;
        i += 1;
    }
    total.evaluations += evaluations;
    Ok(total)
}

/// Iterated adaptive integration of `f` over the box `lower × upper`.
pub fn integrate_box(f: &(dyn Fn(&[f64]) -> f64 + Sync), lower: &[f64], upper: &[f64], opts: &QuadOptions) -> Result<Quadrature> {
    nested_entry(f, lower, upper, opts, false)
}

/// As [`integrate_box`] for nonnegative integrands, using [`integrate_nonnegative`] on every axis.
pub fn integrate_box_nonnegative(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    lower: &[f64],
    upper: &[f64],
    opts: &QuadOptions,
) -> Result<Quadrature> {
    nested_entry(f, lower, upper, opts, true)
}

fn nested_entry(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    lower: &[f64],
    upper: &[f64],
    opts: &QuadOptions,
    support: bool,
) -> Result<Quadrature> {
    if lower.len() != upper.len() || lower.is_empty() {
        return Err(Error::InvalidArgument("box bounds must have equal, nonzero length".into()));
    }
    nested(f, lower, upper, opts, &[], support)
}

fn nested(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    lower: &[f64],
    upper: &[f64],
    opts: &QuadOptions,
    prefix: &[f64],
    support: bool,
) -> Result<Quadrature> {
    let depth = prefix.len();
    let last = depth + 1 == lower.len();
    let inner_opts = QuadOptions { rel_tol: opts.rel_tol * 0.1, abs_tol: opts.abs_tol * 0.1, ..*opts };
    let evaluations = std::cell::Cell::new(0usize);
    let failure: std::cell::RefCell<Option<Error>> = std::cell::RefCell::new(None);
    let integrand = |x: f64| {
        let mut p = prefix.to_vec();
        p.push(x);
        if last {
            evaluations.set(evaluations.get() + 1);
            f(&p)
        } else {
            match nested(f, lower, upper, &inner_opts, &p, support) {
                Ok(q) => {
                    evaluations.set(evaluations.get() + q.evaluations);
                    q.value
                }
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    0.0
                }
            }
        }
    };
    let q = if support {
        integrate_nonnegative(integrand, lower[depth], upper[depth], opts)?
    } else {
        integrate(integrand, lower[depth], upper[depth], opts)?
    };
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(Quadrature { value: q.value, error: q.error, evaluations: evaluations.get() })
}
