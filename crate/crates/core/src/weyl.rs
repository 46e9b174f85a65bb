//! Counting-function predictions: phase-space volumes, regime formulas for
//! homogeneous and degenerate potentials, and empirical exponent fits.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

use crate::bornopp::{transverse_mu, TransverseOptions};
use crate::eigensolve::count_below;
use crate::error::{Error, Result};
use crate::grid::SparseSymMatrix;
use crate::potential::{Evaluator, PotentialSpec};
use crate::quad::{integrate_box_nonnegative, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterKind {
    /// Spectral parameter `λ → ∞`.
    Lambda,
    /// Semiclassical parameter `1/h → ∞`.
    InverseH,
}

/// `N ∼ C t^e (ln t)^[log]` in the parameter `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticPrediction {
    pub formula_id: String,
    pub exponent: f64,
    pub has_log: bool,
    /// Absent when only the order of growth is known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    pub parameter: ParameterKind,
    /// Inconsistencies in the inputs that were flagged rather than rejected.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub anomalies: Vec<String>,
    pub inputs: BTreeMap<String, f64>,
}

impl AsymptoticPrediction {
    fn new(formula_id: &str, exponent: f64, has_log: bool, parameter: ParameterKind, inputs: &[(&str, f64)]) -> Self {
        AsymptoticPrediction {
            formula_id: formula_id.to_string(),
            exponent,
            has_log,
            constant: None,
            parameter,
            anomalies: Vec::new(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    /// `t^e (ln t)^[log]`, the law without its constant.
    pub fn shape(&self, t: f64) -> f64 {
        let p = t.powf(self.exponent);
        if self.has_log {
            p * t.ln()
        } else {
            p
        }
    }

    /// The predicted count at `t`, when the constant is known.
    pub fn evaluate(&self, t: f64) -> Option<f64> {
        self.constant.map(|c| c * self.shape(t))
    }
}

/// Volume of the unit ball in `R^m`.
pub fn unit_ball_volume(m: usize) -> f64 {
    let m = m as f64;
    (0.5 * m * PI.ln() - ln_gamma(0.5 * m + 1.0)).exp()
}

/// Directions used to probe sublevel sets: coordinate axes, diagonals of
/// coordinate planes and a fixed pseudo-random cloud.
fn probe_directions(dim: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    if dim == 1 {
        return vec![vec![1.0], vec![-1.0]];
    }
    if dim == 2 {
        let n = 4096;
        return (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                vec![t.cos(), t.sin()]
            })
            .collect();
    }
    for i in 0..dim {
        for s in [-1.0, 1.0] {
            let mut d = vec![0.0; dim];
            d[i] = s;
            dirs.push(d);
        }
        for j in i + 1..dim {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut d = vec![0.0; dim];
                d[i] = si * std::f64::consts::FRAC_1_SQRT_2;
                d[j] = sj * std::f64::consts::FRAC_1_SQRT_2;
                dirs.push(d);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x51de);
    while dirs.len() < 8192 {
        let v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 && n <= 1.0 {
            dirs.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    dirs
}

/// Radius `R` such that `w ≥ level` on every probed sphere of radius `≥ R`.
///
/// Spheres are probed at radii growing geometrically from `2^-10` to `2^20`.
/// Returns `Ok(None)` when `w ≥ level` on every probed sphere including the
/// origin (empty sublevel set) and an error when the condition fails on the
/// outermost sphere.
pub fn sublevel_radius(w: &dyn Fn(&[f64]) -> f64, dim: usize, level: f64) -> Result<Option<f64>> {
    let dirs = probe_directions(dim);
    let mut radii = Vec::new();
    let mut r = 2f64.powi(-10);
    while r <= 2f64.powi(20) {
        radii.push(r);
        r *= 1.25;
    }
    let mut x = vec![0.0; dim];
    let mut last_fail: Option<usize> = None;
    if w(&x) < level {
        last_fail = Some(0);
    }
    for (k, &r) in radii.iter().enumerate() {
        let below = dirs.iter().any(|d| {
            for (xi, di) in x.iter_mut().zip(d) {
                *xi = r * di;
            }
            w(&x) < level
        });
        if below {
            last_fail = Some(k + 1);
        }
    }
    match last_fail {
        None => Ok(None),
        Some(k) if k >= radii.len() => Err(Error::InfinitePhaseVolume { lambda: level }),
        Some(k) => Ok(Some(radii[k])),
    }
}

/// `∫ (λ - V(x))_+^{m/2} dx` over `R^m`, or over `bbox` when given.
pub fn phase_volume(v: &PotentialSpec, lambda: f64, quad: &QuadOptions, bbox: Option<&[(f64, f64)]>) -> Result<f64> {
    v.validate()?;
    phase_volume_of(&v.evaluator(), lambda, quad, bbox)
}

/// [`phase_volume`] for a plain evaluator.
pub fn phase_volume_of(ev: &Evaluator, lambda: f64, quad: &QuadOptions, bbox: Option<&[(f64, f64)]>) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} must be positive")));
    }
    let m = ev.dim();
    let (lower, upper): (Vec<f64>, Vec<f64>) = match bbox {
        Some(b) => {
            if b.len() != m {
                return Err(Error::DimensionMismatch { expected: m, got: b.len() });
            }
            b.iter().copied().unzip()
        }
        None => match sublevel_radius(&|x| ev.eval(x), m, lambda)? {
            None => return Ok(0.0),
            Some(r) => (vec![-r; m], vec![r; m]),
        },
    };
    let half = 0.5 * m as f64;
    let f = |x: &[f64]| {
        let d = lambda - ev.eval(x);
        if d > 0.0 {
            d.powf(half)
        } else {
            0.0
        }
    };
    Ok(integrate_box_nonnegative(&f, &lower, &upper, quad)?.value)
}

/// Semiclassical Weyl count `h^-m (2π)^-m v_m ∫ (λ - V)_+^{m/2} dx`.
pub fn weyl_prediction(h: f64, lambda: f64, v: &PotentialSpec, quad: &QuadOptions) -> Result<f64> {
    v.validate()?;
    weyl_prediction_of(h, lambda, &v.evaluator(), quad)
}

/// [`weyl_prediction`] for a plain evaluator.
pub fn weyl_prediction_of(h: f64, lambda: f64, v: &Evaluator, quad: &QuadOptions) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("h = {h} must be positive")));
    }
    let m = v.dim();
    let phi = phase_volume_of(v, lambda, quad, None)?;
    Ok((2.0 * PI * h).powi(-(m as i32)) * unit_ball_volume(m) * phi)
}

/// `γ_{m,a} = (2π)^-m v_m B(m/a, m/2 + 1) / a`, the constant obtained from the
/// Weyl count by integrating out the radial variable.
pub fn gamma_const(m: usize, a: f64) -> Result<f64> {
    if m == 0 || !(a > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma_const needs m >= 1 and a > 0, got m = {m}, a = {a}")));
    }
    let mf = m as f64;
    let b = ln_beta(mf / a, 0.5 * mf + 1.0).exp();
    Ok((2.0 * PI).powi(-(m as i32)) * unit_ball_volume(m) * b / a)
}

/// Midpoint rule on `S^{dim-1}` at refinement `level`: nodes and weights.
fn sphere_rule(dim: usize, level: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    match dim {
        1 => Ok(vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)]),
        2 => {
            let n = 16usize << level;
            let w = 2.0 * PI / n as f64;
            Ok((0..n)
                .map(|i| {
                    let t = (i as f64 + 0.5) * w;
                    (vec![t.cos(), t.sin()], w)
                })
                .collect())
        }
        3 => {
            let nt = 8usize << level;
            let np = 2 * nt;
            let (dt, dp) = (PI / nt as f64, 2.0 * PI / np as f64);
            let mut out = Vec::with_capacity(nt * np);
            for i in 0..nt {
                let t = (i as f64 + 0.5) * dt;
                for j in 0..np {
                    let p = (j as f64 + 0.5) * dp;
                    out.push((vec![t.sin() * p.cos(), t.sin() * p.sin(), t.cos()], t.sin() * dt * dp));
                }
            }
            Ok(out)
        }
        _ => Err(Error::InvalidArgument(format!("angular integrals are implemented for dimension <= 3, got {dim}"))),
    }
}

fn max_level(dims: &[usize]) -> usize {
    match dims.iter().filter(|&&d| d > 1).map(|&d| d - 1).sum::<usize>() {
        0 => 0,
        1 => 9,
        2 => 5,
        _ => 3,
    }
}

/// `∫ w(x)^power` over the product of unit spheres `S^{d1-1} × S^{d2-1} × ...`.
///
/// The rule is refined by doubling; the integral is declared divergent when a
/// sample has `w ≤ 0`, or when successive increments fail to shrink (ratio
/// above 0.9) on three consecutive levels.
pub fn angular_integral(w: &dyn Fn(&[f64]) -> f64, dims: &[usize], power: f64) -> Result<f64> {
    let top = max_level(dims);
    let mut values: Vec<f64> = Vec::new();
    let mut stalled = 0;
    for level in 0..=top {
        let rules = dims.iter().map(|&d| sphere_rule(d, level)).collect::<Result<Vec<_>>>()?;
        let mut total = 0.0;
        let mut bad = false;
        let mut idx = vec![0usize; rules.len()];
        let mut x = Vec::with_capacity(dims.iter().sum());
        'outer: loop {
            x.clear();
            let mut weight = 1.0;
            for (r, &i) in rules.iter().zip(&idx) {
                x.extend_from_slice(&r[i].0);
                weight *= r[i].1;
            }
            let v = w(&x);
            if !(v > 0.0) || !v.is_finite() {
                bad = true;
                break;
            }
            total += weight * v.powf(power);
            for k in (0..idx.len()).rev() {
                idx[k] += 1;
                if idx[k] < rules[k].len() {
                    continue 'outer;
                }
                idx[k] = 0;
            }
            break;
        }
        if bad {
            return Err(Error::DivergentAngularIntegral);
        }
        if top == 0 {
            return Ok(total);
        }
        values.push(total);
        let l = values.len();
        if l >= 2 {
            let d = (values[l - 1] - values[l - 2]).abs();
            if d <= 1e-11 * values[l - 1].abs() {
                return Ok(values[l - 1]);
            }
            if l >= 3 {
                let prev = (values[l - 2] - values[l - 3]).abs();
                if d > 0.9 * prev {
                    stalled += 1;
                    if stalled >= 3 {
                        return Err(Error::DivergentAngularIntegral);
                    }
                } else {
                    stalled = 0;
                }
            }
        }
    }
    // slowly convergent: extrapolate the geometric tail of the increments
    let l = values.len();
    let (d1, d0) = (values[l - 1] - values[l - 2], values[l - 2] - values[l - 3]);
    let r = d1 / d0;
    if r.is_finite() && r.abs() < 0.9 {
        Ok(values[l - 1] + d1 * r / (1.0 - r))
    } else {
        Ok(values[l - 1])
    }
}

/// `N(λ) ∼ γ_{m,a} J(V) λ^{m/2 + m/a}` for an `a`-homogeneous potential, with
/// `J(V) = ∫_{S^{m-1}} V^{-m/a}`.
pub fn homogeneous_prediction(v: &PotentialSpec) -> Result<AsymptoticPrediction> {
    let PotentialSpec::Homogeneous { a, g } = v else {
        return Err(Error::InvalidArgument(format!("homogeneous prediction needs a homogeneous potential, got {}", v.name())));
    };
    v.validate()?;
    let m = g.dim();
    let mf = m as f64;
    let j = angular_integral(&|x| g.eval(x), &[m], -mf / a)?;
    let gamma = gamma_const(m, *a)?;
    let mut p = AsymptoticPrediction::new(
        "weyl-homogeneous",
        (2.0 * mf + a * mf) / (2.0 * a),
        false,
        ParameterKind::Lambda,
        &[("m", mf), ("a", *a), ("gamma", gamma), ("J", j)],
    );
    p.constant = Some(gamma * j);
    Ok(p)
}

/// Regime of a bi-homogeneous `F(sy, tz) = s^b t^(a-b) F(y, z)` on `R^n × R^p`.
///
/// The exponent is `(2m + am)/(2b)` with `m = n + p`; the logarithmic branch is
/// selected when `n/b = m/a`. The printed branch conditions cannot both be met
/// together with `a < b`; such inputs are flagged, not rejected. Only the
/// logarithmic branch has a computable constant, and it is dropped when its
/// prefactor `a(a+2)/(2b(a-b))` makes it nonpositive.
pub fn solomyak_prediction(n: usize, p: usize, a: f64, b: f64, big_f: Option<&Evaluator>) -> Result<AsymptoticPrediction> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidArgument("n and p must be positive".into()));
    }
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidArgument(format!("degrees a = {a}, b = {b} must be positive")));
    }
    if !(2.0 + a - b > 0.0) {
        return Err(Error::InvalidArgument(format!("s undefined: 2 + a - b = {} <= 0", 2.0 + a - b)));
    }
    let m = (n + p) as f64;
    let s = 2.0 * b / (2.0 + a - b);
    let (lhs, rhs) = (n as f64 / b, m / a);
    let has_log = (lhs - rhs).abs() <= 1e-12 * rhs;
    let id = if has_log { "solomyak-log" } else { "solomyak-power" };
    let mut pred = AsymptoticPrediction::new(
        id,
        (2.0 * m + a * m) / (2.0 * b),
        has_log,
        ParameterKind::Lambda,
        &[("n", n as f64), ("p", p as f64), ("a", a), ("b", b), ("s", s)],
    );
    if !(a < b) {
        pred.anomalies.push(format!("a < b does not hold (a = {a}, b = {b})"));
    }
    if !has_log && lhs < rhs {
        pred.anomalies.push(format!("neither branch condition holds: n/b = {lhs} < m/a = {rhs}"));
    }
    if has_log {
        if let Some(f) = big_f {
            if f.dim() != n + p {
                return Err(Error::DimensionMismatch { expected: n + p, got: f.dim() });
            }
            let prefactor = a * (a + 2.0) / (2.0 * b * (a - b)) * gamma_const(n + p, a)?;
            match angular_integral(&|x| f.eval(x), &[n, p], -m / a) {
                Ok(k) if prefactor * k > 0.0 => pred.constant = Some(prefactor * k),
                Ok(k) => pred.anomalies.push(format!("constant {} is nonpositive and was dropped", prefactor * k)),
                Err(e) => pred.anomalies.push(format!("constant unavailable: {e}")),
            }
        }
    }
    Ok(pred)
}

/// Regime of `y^{2k} (1 + z^2)^l` on `R^2`.
pub fn robert_regime(k: u32, l: u32) -> Result<AsymptoticPrediction> {
    if k == 0 || l == 0 {
        return Err(Error::InvalidArgument("k and l must be positive".into()));
    }
    let (kf, lf) = (k as f64, l as f64);
    let inputs = [("k", kf), ("l", lf)];
    Ok(match k.cmp(&l) {
        std::cmp::Ordering::Greater => {
            AsymptoticPrediction::new("robert-k-gt-l", (lf + kf + 1.0) / (2.0 * lf), false, ParameterKind::Lambda, &inputs)
        }
        std::cmp::Ordering::Equal => {
            AsymptoticPrediction::new("robert-k-eq-l", (2.0 * kf + 1.0) / (2.0 * kf), true, ParameterKind::Lambda, &inputs)
        }
        std::cmp::Ordering::Less => {
            AsymptoticPrediction::new("robert-k-lt-l", (2.0 * kf + 1.0) / (2.0 * kf), false, ParameterKind::Lambda, &inputs)
        }
    })
}

/// Controls the fiber trace `Σ_j μ_j^-ν` of `-d²/dz² + |z|^β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceOptions {
    /// Number of fiber levels summed explicitly.
    pub levels: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions { levels: 40 }
    }
}

/// `μ_j` of `-d²/dz² + |z|^β` from the WKB quantization rule.
pub fn wkb_level(beta: f64, j: f64) -> f64 {
    let b = ln_beta(1.0 / beta, 1.5).exp();
    ((j - 0.5) * PI * beta / (2.0 * b)).powf(2.0 * beta / (beta + 2.0))
}

/// `Σ_j μ_j^-ν` for `-d²/dz² + |z|^β`, with the levels beyond `levels`
/// replaced by the WKB tail rescaled to match the last computed level.
pub fn simon_trace(beta: f64, nu: f64, opts: &TraceOptions) -> Result<(f64, f64)> {
    let q = 2.0 * beta / (beta + 2.0);
    if !(q * nu > 1.0) {
        return Err(Error::InvalidArgument(format!("trace diverges: (2β/(β+2))ν = {} <= 1", q * nu)));
    }
    let g = Evaluator::new(format!("|z|^{beta}"), 1, move |z| z[0].abs().powf(beta));
    let ts = transverse_mu(&g, beta, opts.levels, &TransverseOptions::default())?;
    let head: f64 = ts.mu.iter().map(|m| m.powf(-nu)).sum();
    let jn = ts.mu.len() as f64;
    let scale = ts.mu[ts.mu.len() - 1] / wkb_level(beta, jn);
    // with μ_j ≈ c (j - 1/2)^q, Σ_{j>J} μ_j^-ν ≈ ∫_J^∞ (c t^q)^-ν dt
    let c = scale * wkb_level(beta, 1.5);
    let tail = c.powf(-nu) * jn.powf(1.0 - q * nu) / (q * nu - 1.0);
    Ok((head + tail, tail))
}

/// Regime of `|y|^α |z|^β` on `R^2`, `α ≤ β`.
///
/// For `α < β` the constant `c_ν = (2ν/π) B(ν, 3/2) Σ_j μ_j^-ν` needs the fiber
/// trace and is only computed when `trace` is given.
pub fn simon_prediction(alpha: f64, beta: f64, trace: Option<&TraceOptions>) -> Result<AsymptoticPrediction> {
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::InvalidArgument(format!("exponents alpha = {alpha}, beta = {beta} must be positive")));
    }
    if alpha > beta {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} > beta = {beta}: swap coordinates")));
    }
    if alpha == beta {
        let mut p = AsymptoticPrediction::new("simon-log", 1.0 + 1.0 / alpha, true, ParameterKind::Lambda, &[("alpha", alpha), ("beta", beta)]);
        p.constant = Some(1.0 / PI);
        return Ok(p);
    }
    let nu = (beta + 2.0) / (2.0 * alpha);
    let mut p = AsymptoticPrediction::new(
        "simon-power",
        (2.0 * nu + 1.0) / 2.0,
        false,
        ParameterKind::Lambda,
        &[("alpha", alpha), ("beta", beta), ("nu", nu)],
    );
    if let Some(opts) = trace {
        let (sum, tail) = simon_trace(beta, nu, opts)?;
        p.inputs.insert("trace".into(), sum);
        p.inputs.insert("trace_tail".into(), tail);
        p.constant = Some(2.0 * nu / PI * ln_beta(nu, 1.5).exp() * sum);
    }
    Ok(p)
}

/// Regime in `1/h` for `f(y) g(z)` with `|y|^k ≲ f(y) ≲ |y|^k` at infinity and
/// `g` homogeneous of degree `a` on `R^p`.
pub fn product_growth_regime(k: f64, a: f64, n: usize, p: usize) -> Result<AsymptoticPrediction> {
    if !(k > 0.0 && a > 0.0) || n == 0 || p == 0 {
        return Err(Error::InvalidArgument(format!("need k, a > 0 and n, p >= 1, got k = {k}, a = {a}, n = {n}, p = {p}")));
    }
    let (nf, pf) = (n as f64, p as f64);
    let inputs = [("k", k), ("a", a), ("n", nf), ("p", pf)];
    let m = nf + pf;
    Ok(if k > a {
        AsymptoticPrediction::new("product-growth-fast", m, false, ParameterKind::InverseH, &inputs)
    } else if k == a {
        AsymptoticPrediction::new("product-growth-critical", m, true, ParameterKind::InverseH, &inputs)
    } else {
        AsymptoticPrediction::new("product-growth-slow", nf + pf * a / k, false, ParameterKind::InverseH, &inputs)
    })
}

/// Min-max counting function
/// `h^-n (2π)^-n v_n ∫ Σ_j [λ - h^{2a/(2+a)} f^{2/(2+a)}(y) μ_j]_+^{n/2} dy`.
///
/// `mu` must be long enough that its last term vanishes identically.
pub fn minmax_counting(h: f64, lambda: f64, f: &Evaluator, a: f64, mu: &[f64], quad: &QuadOptions) -> Result<f64> {
    if !(h > 0.0 && a > 0.0) {
        return Err(Error::InvalidArgument(format!("need h > 0 and a > 0, got h = {h}, a = {a}")));
    }
    if mu.is_empty() {
        return Err(Error::InvalidArgument("mu list is empty".into()));
    }
    let n = f.dim();
    let c = h.powf(2.0 * a / (2.0 + a));
    let e = 2.0 / (2.0 + a);
    let band = |y: &[f64], mu: f64| c * f.eval(y).powf(e) * mu;
    let Some(r) = sublevel_radius(&|y| band(y, mu[0]), n, lambda)? else {
        return Ok(0.0);
    };
    // the last band must stay above λ on the support of the first
    let last = *mu.last().unwrap();
    let mut fmin = f.eval(&vec![0.0; n]);
    for d in probe_directions(n) {
        for i in 1..=64 {
            let y: Vec<f64> = d.iter().map(|x| x * r * i as f64 / 64.0).collect();
            fmin = fmin.min(f.eval(&y));
        }
    }
    if c * fmin.powf(e) * last < lambda {
        return Err(Error::Truncation(format!(
            "band {} reaches below lambda = {lambda}; supply more fiber levels",
            mu.len()
        )));
    }
    let half = 0.5 * n as f64;
    let integrand = |y: &[f64]| {
        let base = c * f.eval(y).powf(e);
        mu.iter()
            .map(|&m| lambda - base * m)
            .take_while(|&d| d > 0.0)
            .map(|d| d.powf(half))
            .sum::<f64>()
    };
    let q = integrate_box_nonnegative(&integrand, &vec![-r; n], &vec![r; n], quad)?;
    Ok((2.0 * PI * h).powi(-(n as i32)) * unit_ball_volume(n) * q.value)
}

/// Count smoothed across a degenerate level: `(N(λ - δ) + N(λ + δ)) / 2`.
pub fn midpoint_count(a: &SparseSymMatrix, lambda: f64, delta: f64) -> Result<f64> {
    Ok(0.5 * (count_below(a, lambda - delta)? + count_below(a, lambda + delta)?) as f64)
}

/// Sampled counting function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingCurve {
    pub samples: Vec<(f64, usize)>,
    pub parameter: ParameterKind,
}

impl CountingCurve {
    pub fn new(samples: Vec<(f64, usize)>, parameter: ParameterKind) -> Result<Self> {
        if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidArgument("counting curve parameters must be strictly increasing".into()));
        }
        if samples.windows(2).any(|w| w[1].1 < w[0].1) {
            return Err(Error::InvalidArgument("counts must be nondecreasing".into()));
        }
        Ok(CountingCurve { samples, parameter })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub exponent: f64,
    pub constant: f64,
    pub r_squared: f64,
}

/// Least-squares fit of `ln N = ln C + e ln t (+ ln ln t)` over the upper half of the samples.
pub fn fit_exponent(curve: &CountingCurve, assume_log: bool) -> Result<ExponentFit> {
    if curve.samples.len() < 5 || curve.samples.iter().any(|s| s.1 == 0) {
        return Err(Error::InvalidArgument("exponent fit needs at least 5 samples with positive counts".into()));
    }
    let upper = &curve.samples[curve.samples.len() / 2..];
    let mut pts = Vec::with_capacity(upper.len());
    for &(t, n) in upper {
        let mut y = (n as f64).ln();
        if assume_log {
            if !(t > 1.0) {
                return Err(Error::InvalidArgument(format!("log fit needs parameters > 1, got {t}")));
            }
            y -= t.ln().ln();
        }
        pts.push((t.ln(), y));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidArgument("degenerate fit: parameter has zero variance".into()));
    }
    let e = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(ExponentFit { exponent: e, constant: (my - e * mx).exp(), r_squared: r2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;
    use approx::assert_relative_eq;

    fn quad() -> QuadOptions {
        QuadOptions { rel_tol: 1e-9, ..Default::default() }
    }

    #[test]
    fn phase_volume_examples() {
        let v = PotentialSpec::Homogeneous { a: 2.0, g: Evaluator::new("x^2", 1, |x| x[0] * x[0]) };
        assert_relative_eq!(phase_volume(&v, 1.0, &quad(), None).unwrap(), PI / 2.0, max_relative = 1e-8);
        let v = PotentialSpec::Homogeneous { a: 2.0, g: Evaluator::new("r^2", 2, |x| x[0] * x[0] + x[1] * x[1]) };
        assert_relative_eq!(phase_volume(&v, 1.0, &quad(), None).unwrap(), PI / 2.0, max_relative = 1e-7);
        // homogeneity in λ
        let p4 = phase_volume(&v, 4.0, &quad(), None).unwrap();
        assert_relative_eq!(p4, 4f64.powi(2) * PI / 2.0, max_relative = 1e-7);
        let v = PotentialSpec::PowerProduct { alpha: 1.0, beta: 1.0 };
        assert!(matches!(phase_volume(&v, 1.0, &quad(), None), Err(Error::InfinitePhaseVolume { .. })));
    }

    #[test]
    fn weyl_examples() {
        let v = PotentialSpec::Homogeneous { a: 2.0, g: Evaluator::new("x^2", 1, |x| x[0] * x[0]) };
        assert_relative_eq!(weyl_prediction(0.01, 1.0, &v, &quad()).unwrap(), 50.0, max_relative = 1e-8);
        assert_relative_eq!(weyl_prediction(0.02, 1.0, &v, &quad()).unwrap(), 25.0, max_relative = 1e-8);
        let v = PotentialSpec::Homogeneous { a: 2.0, g: Evaluator::new("r^2", 2, |x| x[0] * x[0] + x[1] * x[1]) };
        assert_relative_eq!(weyl_prediction(0.05, 1.0, &v, &quad()).unwrap(), 50.0, max_relative = 1e-6);
    }

    #[test]
    fn gamma_matches_radial_quadrature() {
        let o = QuadOptions { rel_tol: 1e-13, abs_tol: 1e-15, max_subdivisions: 20000 };
        for m in 1..=3usize {
            for a in [1.0, 2.0, 3.0, 4.0] {
                let mf = m as f64;
                let radial = integrate(|u: f64| u.powf(mf - 1.0) * (1.0 - u.powf(a)).max(0.0).powf(0.5 * mf), 0.0, 1.0, &o).unwrap();
                let numeric = (2.0 * PI).powi(-(m as i32)) * unit_ball_volume(m) * radial.value;
                assert_relative_eq!(gamma_const(m, a).unwrap(), numeric, max_relative = 1e-10);
            }
        }
        assert_relative_eq!(gamma_const(1, 2.0).unwrap(), 0.25, max_relative = 1e-14);
        assert_relative_eq!(gamma_const(1, 1e7).unwrap(), 1.0 / PI, max_relative = 1e-6);
    }

    #[test]
    fn homogeneous_examples() {
        let v = PotentialSpec::Homogeneous { a: 2.0, g: Evaluator::new("x^2", 1, |x| x[0] * x[0]) };
        let p = homogeneous_prediction(&v).unwrap();
        assert_eq!(p.exponent, 1.0);
        assert_relative_eq!(p.evaluate(10.0).unwrap(), 5.0, max_relative = 1e-14);
        let v = PotentialSpec::Homogeneous { a: 3.0, g: Evaluator::new("|z|^3", 1, |x| x[0].abs().powi(3)) };
        assert_relative_eq!(homogeneous_prediction(&v).unwrap().exponent, 5.0 / 6.0);
        let v = PotentialSpec::Homogeneous { a: 2.0, g: Evaluator::new("|yz|", 2, |x| (x[0] * x[1]).abs()) };
        assert!(matches!(homogeneous_prediction(&v), Err(Error::DivergentAngularIntegral)));
        // smooth anisotropic case: ∫ (c² + 4 s²)^-1 dθ = 2π / (1·2)
        let v = PotentialSpec::Homogeneous { a: 2.0, g: Evaluator::new("y^2+4z^2", 2, |x| x[0] * x[0] + 4.0 * x[1] * x[1]) };
        let p = homogeneous_prediction(&v).unwrap();
        assert_relative_eq!(p.inputs["J"], PI, max_relative = 1e-10);
    }

    #[test]
    fn solomyak_examples() {
        let p = solomyak_prediction(1, 1, 2.0, 3.0, None).unwrap();
        assert_relative_eq!(p.inputs["s"], 6.0);
        assert_relative_eq!(p.exponent, 4.0 / 3.0);
        assert!(!p.has_log && !p.anomalies.is_empty());
        assert!(solomyak_prediction(1, 1, 2.0, 4.0, None).is_err());
        let p = solomyak_prediction(1, 1, 4.0, 2.0, None).unwrap();
        assert!(p.has_log);
    }

    #[test]
    fn regime_tables() {
        let r = robert_regime(2, 1).unwrap();
        assert_eq!((r.exponent, r.has_log), (2.0, false));
        let r = robert_regime(1, 1).unwrap();
        assert_eq!((r.exponent, r.has_log), (1.5, true));
        let r = robert_regime(1, 2).unwrap();
        assert_eq!((r.exponent, r.has_log), (1.5, false));

        let s = simon_prediction(1.0, 2.0, None).unwrap();
        assert_eq!((s.exponent, s.inputs["nu"], s.constant), (2.5, 2.0, None));
        let s = simon_prediction(1.0, 1.0, None).unwrap();
        assert_eq!((s.exponent, s.has_log, s.constant), (2.0, true, Some(1.0 / PI)));
        let s = simon_prediction(2.0, 2.0, None).unwrap();
        assert_eq!((s.exponent, s.has_log), (1.5, true));
        assert!(simon_prediction(2.0, 1.0, None).is_err());

        let g = product_growth_regime(4.0, 2.0, 1, 1).unwrap();
        assert_eq!((g.exponent, g.has_log, g.parameter), (2.0, false, ParameterKind::InverseH));
        let g = product_growth_regime(2.0, 2.0, 1, 1).unwrap();
        assert_eq!((g.exponent, g.has_log), (2.0, true));
        let g = product_growth_regime(1.0, 2.0, 1, 1).unwrap();
        assert_eq!((g.exponent, g.has_log), (3.0, false));
    }

    #[test]
    fn simon_constant_uses_harmonic_trace() {
        // β = 2: μ_j = 2j - 1 and ν = 2 for α = 1, so Σ μ_j^-2 = π²/8
        let (sum, _) = simon_trace(2.0, 2.0, &TraceOptions { levels: 30 }).unwrap();
        assert_relative_eq!(sum, PI * PI / 8.0, max_relative = 1e-6);
    }

    #[test]
    fn minmax_examples() {
        let f = Evaluator::new("1+y^2", 1, |y| 1.0 + y[0] * y[0]);
        let mu: Vec<f64> = (1..=60).map(|j| 2.0 * j as f64 - 1.0).collect();
        assert_eq!(minmax_counting(0.05, 0.04, &f, 2.0, &mu, &quad()).unwrap(), 0.0);
        let a = minmax_counting(0.05, 1.0, &f, 2.0, &mu, &quad()).unwrap();
        let b = minmax_counting(0.025, 1.0, &f, 2.0, &mu, &quad()).unwrap();
        assert!(a > 0.0 && b >= 2.0 * a, "{a} {b}");
        assert!(matches!(minmax_counting(0.05, 1.0, &f, 2.0, &mu[..3], &quad()), Err(Error::Truncation(_))));
    }

    #[test]
    fn fit_examples() {
        let c = CountingCurve::new((1..=20).map(|i| (i as f64, i * i)).collect(), ParameterKind::Lambda).unwrap();
        let fit = fit_exponent(&c, false).unwrap();
        assert_relative_eq!(fit.exponent, 2.0, max_relative = 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, max_relative = 1e-12);
        // exact λ^{3/2} ln λ needs real-valued counts; use large λ so rounding is negligible
        let c = CountingCurve::new(
            (1..=20).map(|i| {
                let l = 1e4 * i as f64;
                (l, (l.powf(1.5) * l.ln()).round() as usize)
            }).collect(),
            ParameterKind::Lambda,
        )
        .unwrap();
        assert_relative_eq!(fit_exponent(&c, true).unwrap().exponent, 1.5, max_relative = 1e-6);
        assert!(CountingCurve::new(vec![(1.0, 2), (2.0, 1)], ParameterKind::Lambda).is_err());
    }
}
