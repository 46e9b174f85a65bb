//! Potential families, evaluation, and numerical checks of their structural hypotheses.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;

type Func = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A labelled scalar function on `R^dim`.
///
/// Evaluators must be free of side effects; they are called from worker threads.
#[derive(Clone)]
pub struct Evaluator {
    label: String,
    dim: usize,
    func: Func,
}

impl fmt::Debug for Evaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Evaluator({}, dim={})", self.label, self.dim)
    }
}

impl Evaluator {
    pub fn new(label: impl Into<String>, dim: usize, func: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Evaluator { label: label.into(), dim, func: Arc::new(func) }
    }

    /// Compiles an expression whose variables are `vars`, in argument order.
    pub fn from_expr(source: &str, vars: &[&str]) -> Result<Self> {
        let e = Expr::parse(source, vars)?;
        Ok(Evaluator::new(source.trim(), vars.len(), move |x| e.eval(x)))
    }

    pub fn constant(value: f64, dim: usize) -> Self {
        Evaluator::new(format!("{value}"), dim, move |_| value)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.func)(x)
    }

    /// `x -> c * self(x)`.
    pub fn scaled(&self, c: f64) -> Evaluator {
        let inner = self.clone();
        Evaluator::new(format!("{c}*({})", self.label), self.dim, move |x| c * inner.eval(x))
    }
}

/// Parametrized planar curve `s -> (x(s), y(s))`.
#[derive(Clone)]
pub struct Curve {
    label: String,
    point: Arc<dyn Fn(f64) -> [f64; 2] + Send + Sync>,
    /// Parameter interval.
    pub domain: (f64, f64),
    /// Whether the curve closes up over `domain`.
    pub closed: bool,
}

impl fmt::Debug for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Curve({}, {:?}, closed={})", self.label, self.domain, self.closed)
    }
}

impl Curve {
    pub fn parametric(
        label: impl Into<String>,
        domain: (f64, f64),
        closed: bool,
        point: impl Fn(f64) -> [f64; 2] + Send + Sync + 'static,
    ) -> Curve {
        Curve { label: label.into(), point: Arc::new(point), domain, closed }
    }

    /// Counter-clockwise circle, parametrized by angle.
    pub fn circle(center: [f64; 2], radius: f64) -> Curve {
        Curve::parametric(format!("circle({}, {}; {radius})", center[0], center[1]), (0.0, std::f64::consts::TAU), true, move |s| {
            [center[0] + radius * s.cos(), center[1] + radius * s.sin()]
        })
    }

    /// Straight line through `origin` along `direction`, parametrized by arc length.
    pub fn line(origin: [f64; 2], direction: [f64; 2]) -> Curve {
        let n = direction[0].hypot(direction[1]);
        let d = [direction[0] / n, direction[1] / n];
        Curve::parametric("line", (-10.0, 10.0), false, move |s| [origin[0] + s * d[0], origin[1] + s * d[1]])
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn point(&self, s: f64) -> [f64; 2] {
        (self.point)(s)
    }

    /// `dγ/ds` by a fourth-order central difference.
    pub fn velocity(&self, s: f64) -> [f64; 2] {
        let h = 1e-4 * (self.domain.1 - self.domain.0).abs().max(1.0);
        let p = |t: f64| self.point(s + t);
        let (a, b, c, d) = (p(-2.0 * h), p(-h), p(h), p(2.0 * h));
        let mut v = [0.0; 2];
        for i in 0..2 {
            v[i] = (a[i] - 8.0 * b[i] + 8.0 * c[i] - d[i]) / (12.0 * h);
        }
        v
    }

    pub fn speed(&self, s: f64) -> f64 {
        let v = self.velocity(s);
        v[0].hypot(v[1])
    }

    /// Unit normal: the unit tangent rotated clockwise (outward for a counter-clockwise circle).
    pub fn normal(&self, s: f64) -> [f64; 2] {
        let v = self.velocity(s);
        let n = v[0].hypot(v[1]);
        [v[1] / n, -v[0] / n]
    }
}

/// The potential families handled by the crate.
#[derive(Debug, Clone)]
pub enum PotentialSpec {
    /// `g` on `R^p`, positive away from 0, with `g(tz) = t^a g(z)`.
    Homogeneous { a: f64, g: Evaluator },
    /// `V(y, z) = f(y) g(z)` with `g` homogeneous of degree `a`.
    ProductFG { f: Evaluator, g: Evaluator, a: f64 },
    /// `F(sy, tz) = s^b t^(a-b) F(y, z)` on `R^n × R^p`.
    BiHomogeneous { n: usize, p: usize, a: f64, b: f64, big_f: Evaluator },
    /// `|y|^alpha |z|^beta` on `R^2`.
    PowerProduct { alpha: f64, beta: f64 },
    /// `y^(2k) (1 + z^2)^l` on `R^2`.
    RobertPotential { k: u32, l: u32 },
    /// `V` on `R^2` vanishing to order `2m` on the curve `gamma`.
    HypersurfaceWell { m: usize, v: Evaluator, gamma: Curve, f_on_gamma: Option<Evaluator> },
}

impl PotentialSpec {
    pub fn dim(&self) -> usize {
        match self {
            PotentialSpec::Homogeneous { g, .. } => g.dim(),
            PotentialSpec::ProductFG { f, g, .. } => f.dim() + g.dim(),
            PotentialSpec::BiHomogeneous { n, p, .. } => n + p,
            PotentialSpec::PowerProduct { .. } | PotentialSpec::RobertPotential { .. } => 2,
            PotentialSpec::HypersurfaceWell { v, .. } => v.dim(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PotentialSpec::Homogeneous { .. } => "homogeneous",
            PotentialSpec::ProductFG { .. } => "product",
            PotentialSpec::BiHomogeneous { .. } => "bihomogeneous",
            PotentialSpec::PowerProduct { .. } => "power-product",
            PotentialSpec::RobertPotential { .. } => "robert",
            PotentialSpec::HypersurfaceWell { .. } => "hypersurface-well",
        }
    }

    /// Checks the parameter constraints of the family.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        match self {
            PotentialSpec::Homogeneous { a, .. } if !(*a > 0.0) => bad(format!("degree a = {a} must be positive")),
            PotentialSpec::ProductFG { a, .. } if !(*a > 0.0) => bad(format!("degree a = {a} must be positive")),
            PotentialSpec::BiHomogeneous { a, b, n, p, big_f } => {
                if !(*a > 0.0 && *b > 0.0) {
                    return bad(format!("degrees a = {a}, b = {b} must be positive"));
                }
                if n + p != big_f.dim() {
                    return Err(Error::DimensionMismatch { expected: n + p, got: big_f.dim() });
                }
                Ok(())
            }
            PotentialSpec::PowerProduct { alpha, beta } if !(*alpha > 0.0 && *beta > 0.0) => {
                bad(format!("exponents alpha = {alpha}, beta = {beta} must be positive"))
            }
            PotentialSpec::RobertPotential { k, l } if *k == 0 || *l == 0 => bad("k and l must be positive".into()),
            PotentialSpec::HypersurfaceWell { m, v, .. } => {
                if *m == 0 {
                    return bad("vanishing order m must be positive".into());
                }
                if v.dim() != 2 {
                    return bad("hypersurface wells are supported in the plane only".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// The potential as a plain evaluator on `R^dim`.
    pub fn evaluator(&self) -> Evaluator {
        match self {
            PotentialSpec::Homogeneous { g, .. } => g.clone(),
            PotentialSpec::ProductFG { f, g, .. } => {
                let (f, g) = (f.clone(), g.clone());
                let n = f.dim();
                Evaluator::new(format!("({})*({})", f.label(), g.label()), n + g.dim(), move |x| f.eval(&x[..n]) * g.eval(&x[n..]))
            }
            PotentialSpec::BiHomogeneous { big_f, .. } => big_f.clone(),
            PotentialSpec::PowerProduct { alpha, beta } => {
                let (a, b) = (*alpha, *beta);
                Evaluator::new(format!("|y|^{a}|z|^{b}"), 2, move |x| x[0].abs().powf(a) * x[1].abs().powf(b))
            }
            PotentialSpec::RobertPotential { k, l } => {
                let (k, l) = (*k as i32, *l as i32);
                Evaluator::new(format!("y^{}(1+z^2)^{l}", 2 * k), 2, move |x| x[0].powi(2 * k) * (1.0 + x[1] * x[1]).powi(l))
            }
            PotentialSpec::HypersurfaceWell { v, .. } => v.clone(),
        }
    }
}

/// `V(x)` with dimension, finiteness and sign checks.
pub fn eval(spec: &PotentialSpec, x: &[f64]) -> Result<f64> {
    if x.len() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), got: x.len() });
    }
    let v = spec.evaluator().eval(x);
    if !v.is_finite() {
        return Err(Error::NonFinitePotential { index: 0, coords: x.to_vec() });
    }
    if v < 0.0 {
        return Err(Error::InvalidArgument(format!("potential is negative ({v}) at {x:?}")));
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// Worst-case residual of the check.
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, residual: f64) -> Check {
        Check { name: name.into(), pass, residual, note: None }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Check {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub checks: Vec<Check>,
    pub overall: bool,
}

impl HypothesisReport {
    pub fn new(checks: Vec<Check>) -> Self {
        let overall = checks.iter().all(|c| c.pass);
        HypothesisReport { checks, overall }
    }

    pub fn merge(mut self, other: HypothesisReport) -> Self {
        self.checks.extend(other.checks);
        self.overall = self.checks.iter().all(|c| c.pass);
        self
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Randomized test of `g(tz) = t^a g(z)` with `t ∈ [0.1, 10]` log-uniform and `z ∈ [-2, 2]^p`.
pub fn check_homogeneity(g: &Evaluator, a: f64, sample_count: usize, seed: u64) -> Result<HypothesisReport> {
    if !(a > 0.0) {
        return Err(Error::InvalidArgument(format!("degree a = {a} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = g.dim();
    let mut worst: f64 = 0.0;
    let mut positivity = true;
    let mut pos_residual: f64 = 0.0;
    let mut z = vec![0.0f64; p];
    let mut tz = vec![0.0; p];
    for _ in 0..sample_count.max(1) {
        loop {
            z.iter_mut().for_each(|v| *v = rng.random_range(-2.0..2.0));
            if z.iter().any(|v| v.abs() > 1e-3) {
                break;
            }
        }
        let t = 10f64.powf(rng.random_range(-1.0..1.0));
        tz.iter_mut().zip(&z).for_each(|(o, v)| *o = t * v);
        let gz = g.eval(&z);
        let gtz = g.eval(&tz);
        if !(gz.is_finite() && gz > 0.0) {
            positivity = false;
            pos_residual = pos_residual.max(if gz.is_finite() { -gz } else { f64::INFINITY });
            continue;
        }
        let expected = t.powf(a) * gz;
        let r = (gtz - expected).abs() / expected.max(f64::MIN_POSITIVE);
        worst = worst.max(if r.is_finite() { r } else { f64::INFINITY });
    }
    Ok(HypothesisReport::new(vec![
        Check::new("g positive away from 0", positivity, pos_residual),
        Check::new(format!("g homogeneous of degree {a}"), worst < 1e-10, worst),
    ]))
}

/// Randomized test of `F(sy, tz) = s^b t^(a-b) F(y, z)` on `R^n × R^p`, with
/// `s, t ∈ [0.1, 10]` log-uniform and points in `[-2, 2]^(n+p)`.
pub fn check_bihomogeneity(big_f: &Evaluator, n: usize, a: f64, b: f64, sample_count: usize, seed: u64) -> Result<HypothesisReport> {
    if n == 0 || n >= big_f.dim() {
        return Err(Error::InvalidArgument(format!("split n = {n} must lie in 1..{}", big_f.dim())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = big_f.dim();
    let mut worst: f64 = 0.0;
    let mut nonneg = true;
    let mut x = vec![0.0f64; d];
    let mut sx = vec![0.0f64; d];
    for _ in 0..sample_count.max(1) {
        x.iter_mut().for_each(|v| *v = rng.random_range(-2.0..2.0));
        let s = 10f64.powf(rng.random_range(-1.0..1.0));
        let t = 10f64.powf(rng.random_range(-1.0..1.0));
        for i in 0..d {
            sx[i] = if i < n { s * x[i] } else { t * x[i] };
        }
        let fx = big_f.eval(&x);
        if !(fx.is_finite() && fx >= 0.0) {
            nonneg = false;
            continue;
        }
        let expected = s.powf(b) * t.powf(a - b) * fx;
        let r = (big_f.eval(&sx) - expected).abs() / expected.abs().max(1e-300);
        if expected > 1e-12 {
            worst = worst.max(if r.is_finite() { r } else { f64::INFINITY });
        }
    }
    Ok(HypothesisReport::new(vec![
        Check::new("F nonnegative", nonneg, 0.0),
        Check::new(format!("F bihomogeneous of degrees ({b}, {})", a - b), worst < 1e-10, worst),
    ]))
}

fn sample_ball(n: usize, radius: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    match n {
        1 => (0..=2000).map(|i| vec![-radius + 2.0 * radius * i as f64 / 2000.0]).collect(),
        2 => {
            let k = 100;
            let mut pts = Vec::with_capacity((k + 1) * (k + 1));
            for i in 0..=k {
                for j in 0..=k {
                    let p = vec![-radius + 2.0 * radius * i as f64 / k as f64, -radius + 2.0 * radius * j as f64 / k as f64];
                    if p[0].hypot(p[1]) <= radius {
                        pts.push(p);
                    }
                }
            }
            pts
        }
        _ => (0..4000)
            .map(|_| loop {
                let p: Vec<f64> = (0..n).map(|_| rng.random_range(-radius..radius)).collect();
                if p.iter().map(|v| v * v).sum::<f64>() <= radius * radius {
                    break p;
                }
            })
            .collect(),
    }
}

/// Points on the sphere of radius `r` in `R^n`.
pub fn sample_sphere(n: usize, radius: f64, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![-radius], vec![radius]],
        2 => (0..count)
            .map(|i| {
                let t = std::f64::consts::TAU * (i as f64 + 0.5) / count as f64;
                vec![radius * t.cos(), radius * t.sin()]
            })
            .collect(),
        _ => (0..count)
            .map(|_| loop {
                let p: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let r = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                if r > 1e-3 && r <= 1.0 {
                    break p.iter().map(|v| radius * v / r).collect();
                }
            })
            .collect(),
    }
}

/// Numerical checks of the hypotheses on `f`: positivity at 0, minimum at 0,
/// positive definite Hessian at 0, and `f(0) < f(∞)`.
///
/// `f_inf` is the declared `liminf f` at infinity (`f64::INFINITY` allowed); when
/// absent it is estimated as the minimum over the sphere of radius
/// `probe_radius`, and the check is labelled heuristic.
pub fn check_f_hypotheses(f: &Evaluator, probe_radius: f64, f_inf: Option<f64>) -> Result<HypothesisReport> {
    if !(probe_radius > 0.0) {
        return Err(Error::InvalidArgument("probe radius must be positive".into()));
    }
    let n = f.dim();
    let origin = vec![0.0; n];
    let f0 = f.eval(&origin);
    let mut rng = ChaCha8Rng::seed_from_u64(0x0f0f);
    let mut checks = vec![Check::new("f(0) > 0", f0.is_finite() && f0 > 0.0, f0)];

    let mut deficit: f64 = 0.0;
    let mut finite = true;
    for y in sample_ball(n, probe_radius, &mut rng) {
        let v = f.eval(&y);
        finite &= v.is_finite();
        deficit = deficit.max(f0 - v);
    }
    checks.push(Check::new("f(0) = inf f on probe ball", finite && deficit <= 1e-12 * f0.abs().max(1.0), deficit.max(0.0)));

    match hessian_at(f, &origin, 1e-3) {
        Ok(h) => {
            let min_eig = h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
            checks.push(Check::new("hessian of f at 0 positive definite", min_eig > 1e-8, min_eig));
        }
        Err(_) => checks.push(Check::new("hessian of f at 0 positive definite", false, f64::NAN)),
    }

    let check = match f_inf {
        Some(v) => Check::new("f(0) < f(inf)", v > f0, v - f0).with_note("declared"),
        None => {
            let shell = sample_sphere(n, probe_radius, 720, &mut rng)
                .iter()
                .map(|y| f.eval(y))
                .fold(f64::INFINITY, f64::min);
            Check::new("f(0) < f(inf)", shell > f0, shell - f0).with_note(format!("heuristic: min over |y| = {probe_radius} is {shell}"))
        }
    };
    checks.push(check);
    Ok(HypothesisReport::new(checks))
}

fn hessian_raw(f: &Evaluator, x: &[f64], h: f64) -> Result<DMatrix<f64>> {
    let n = x.len();
    let at = |shifts: &[(usize, f64)]| -> Result<f64> {
        let mut q = x.to_vec();
        for &(i, d) in shifts {
            q[i] += d;
        }
        let v = f.eval(&q);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinitePotential { index: 0, coords: q })
        }
    };
    let f0 = at(&[])?;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let fp = at(&[(i, h)])?;
        let fm = at(&[(i, -h)])?;
        m[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in 0..i {
            let pp = at(&[(i, h), (j, h)])?;
            let pm = at(&[(i, h), (j, -h)])?;
            let mp = at(&[(i, -h), (j, h)])?;
            let mm = at(&[(i, -h), (j, -h)])?;
            let v = (pp - pm - mp + mm) / (4.0 * h * h);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Central-difference Hessian with one Richardson step (`step` and `step/2`).
pub fn hessian_at(f: &Evaluator, point: &[f64], step: f64) -> Result<DMatrix<f64>> {
    if !(step > 0.0) {
        return Err(Error::InvalidArgument("hessian step must be positive".into()));
    }
    if point.len() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: point.len() });
    }
    let coarse = hessian_raw(f, point, step)?;
    let fine = hessian_raw(f, point, 0.5 * step)?;
    let h = (fine * 4.0 - coarse) / 3.0;
    Ok((&h + h.transpose()) * 0.5)
}

/// `Σ √ν_i` over the eigenvalues of a symmetric positive definite matrix.
pub fn tr_sqrt(m: &DMatrix<f64>) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::InvalidArgument("tr_sqrt needs a square matrix".into()));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigenvalues();
    if let Some(v) = eig.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument(format!("matrix is not positive definite (eigenvalue {v})")));
    }
    Ok(eig.iter().map(|v| v.sqrt()).sum())
}

/// Stencil half-width for the normal fit.
pub const NORMAL_T0: f64 = 1e-2;

/// Coefficient of `t^(2m)` in `V(γ(s) + t N(s))`, i.e. `(N·∇)^(2m) V / (2m)!`.
///
/// Fits a polynomial in `u = t / t0` on a symmetric stencil of at least 7
/// points and rejects the result when any lower-order coefficient is
/// not negligible next to the `u^(2m)` one.
pub fn normal_well_coefficient(v: &Evaluator, gamma: &Curve, s: f64, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidArgument("vanishing order m must be positive".into()));
    }
    let order = 2 * m;
    let npts = (order + 3).max(7) | 1;
    let degree = npts - 1;
    let half = (npts / 2) as f64;
    let p = gamma.point(s);
    let nrm = gamma.normal(s);
    let us: Vec<f64> = (0..npts).map(|i| (i as f64 - half) / half).collect();
    let vals: Vec<f64> = us
        .iter()
        .map(|&u| {
            let t = u * NORMAL_T0;
            v.eval(&[p[0] + t * nrm[0], p[1] + t * nrm[1]])
        })
        .collect();
    if vals.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinitePotential { index: 0, coords: p.to_vec() });
    }
    let a = DMatrix::from_fn(npts, degree + 1, |i, k| us[i].powi(k as i32));
    let b = nalgebra::DVector::from_vec(vals.clone());
    let c = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::Solver(format!("normal fit: {e}")))?;
    let lead = c[order];
    let scale = vals.iter().fold(0.0f64, |s, x| s.max(x.abs()));
    let lower = (0..order).map(|k| c[k].abs()).fold(0.0, f64::max);
    let residual = lower / lead.abs().max(f64::MIN_POSITIVE);
    if !(lead > 0.0) || lower > 1e-6 * lead.abs() + 1e-13 * scale {
        return Err(Error::VanishingOrder { order, residual });
    }
    Ok(lead / NORMAL_T0.powi(order as i32))
}

/// Structural checks for a planar well: `V ≥ 0`, `V = 0` on the curve, the
/// normal coefficient positive along the curve (two-sided distance bound), and
/// `V` bounded below by a positive constant on a large circle.
pub fn check_well_hypotheses(v: &Evaluator, gamma: &Curve, m: usize, samples: usize) -> HypothesisReport {
    let samples = samples.max(8);
    let (s0, s1) = gamma.domain;
    let ss: Vec<f64> = (0..samples)
        .map(|i| s0 + (s1 - s0) * (i as f64 + if gamma.closed { 0.0 } else { 0.5 }) / samples as f64)
        .collect();
    let on_curve = ss.iter().map(|&s| v.eval(&gamma.point(s)).abs()).fold(0.0, f64::max);
    let mut min_f = f64::INFINITY;
    let mut order_ok = true;
    for &s in &ss {
        match normal_well_coefficient(v, gamma, s, m) {
            Ok(f) => min_f = min_f.min(f),
            Err(_) => order_ok = false,
        }
    }
    let extent = ss.iter().map(|&s| {
        let p = gamma.point(s);
        p[0].hypot(p[1])
    });
    let radius = 10.0 * extent.fold(1.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let far = sample_sphere(2, radius, 720, &mut rng).iter().map(|x| v.eval(x)).fold(f64::INFINITY, f64::min);
    HypothesisReport::new(vec![
        Check::new("V vanishes on the curve", on_curve < 1e-10, on_curve),
        Check::new(format!("V ~ d^{} near the curve", 2 * m), order_ok && min_f > 1e-8, if order_ok { min_f } else { 0.0 }),
        Check::new("V bounded below at infinity", far > 0.0, far).with_note(format!("heuristic: min over |s| = {radius}")),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ev(src: &str, vars: &[&str]) -> Evaluator {
        Evaluator::from_expr(src, vars).unwrap()
    }

    #[test]
    fn eval_examples() {
        let pp = PotentialSpec::PowerProduct { alpha: 1.0, beta: 2.0 };
        assert_eq!(eval(&pp, &[2.0, 3.0]).unwrap(), 18.0);
        let r = PotentialSpec::RobertPotential { k: 1, l: 2 };
        assert_eq!(eval(&r, &[1.0, 1.0]).unwrap(), 4.0);
        let fg = PotentialSpec::ProductFG { f: ev("1+y1^2", &["y1"]), g: ev("z1^2", &["z1"]), a: 2.0 };
        assert_eq!(eval(&fg, &[0.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(eval(&fg, &[0.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn homogeneity_examples() {
        let g = ev("z1^2", &["z1"]);
        let r = check_homogeneity(&g, 2.0, 200, 1).unwrap();
        assert!(r.overall);
        assert!(r.checks[1].residual < 1e-15);
        assert!(!check_homogeneity(&g, 3.0, 200, 1).unwrap().overall);
        assert!(check_homogeneity(&ev("abs(z1)^1.5", &["z1"]), 1.5, 200, 1).unwrap().overall);
        assert!(!check_homogeneity(&ev("z1^2 - 1", &["z1"]), 2.0, 200, 1).unwrap().overall);
    }

    #[test]
    fn f_hypothesis_examples() {
        let r = check_f_hypotheses(&ev("1+y1^2", &["y1"]), 3.0, None).unwrap();
        assert!(r.overall, "{r:?}");
        let r = check_f_hypotheses(&ev("1-y1^2", &["y1"]), 0.5, None).unwrap();
        assert!(!r.checks[1].pass);
        let r = check_f_hypotheses(&ev("1+y1^4", &["y1"]), 3.0, None).unwrap();
        assert!(r.checks[1].pass && !r.checks[2].pass);
    }

    #[test]
    fn hessian_examples() {
        let h = hessian_at(&ev("1+y1^2", &["y1"]), &[0.0], 1e-3).unwrap();
        assert_abs_diff_eq!(h[(0, 0)], 2.0, epsilon = 1e-6);
        let h = hessian_at(&ev("1+y1^2+3*y2^2", &["y1", "y2"]), &[0.0, 0.0], 1e-3).unwrap();
        assert_abs_diff_eq!(h[(0, 0)], 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(h[(1, 1)], 6.0, epsilon = 1e-6);
        assert_abs_diff_eq!(h[(0, 1)], 0.0, epsilon = 1e-6);
        let h = hessian_at(&ev("cos(y1)", &["y1"]), &[0.0], 1e-3).unwrap();
        assert_abs_diff_eq!(h[(0, 0)], -1.0, epsilon = 1e-6);
    }

    #[test]
    fn tr_sqrt_examples() {
        assert_abs_diff_eq!(tr_sqrt(&DMatrix::from_row_slice(1, 1, &[2.0])).unwrap(), 2f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(tr_sqrt(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 9.0]))).unwrap(), 5.0, epsilon = 1e-14);
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert_abs_diff_eq!(tr_sqrt(&m).unwrap(), 1.0 + 3f64.sqrt(), epsilon = 1e-13);
        assert!(tr_sqrt(&DMatrix::from_row_slice(1, 1, &[-1.0])).is_err());
    }

    #[test]
    fn normal_coefficient_examples() {
        let circle_well = ev("(x1^2+x2^2-1)^2", &["x1", "x2"]);
        let c = Curve::circle([0.0, 0.0], 1.0);
        for s in [0.0, 0.7, 2.0, 4.5] {
            assert_abs_diff_eq!(normal_well_coefficient(&circle_well, &c, s, 1).unwrap(), 4.0, epsilon = 1e-7);
        }
        let line_well = ev("x2^2", &["x1", "x2"]);
        let l = Curve::line([0.0, 0.0], [1.0, 0.0]);
        assert_abs_diff_eq!(normal_well_coefficient(&line_well, &l, 0.3, 1).unwrap(), 1.0, epsilon = 1e-9);
        assert!(matches!(normal_well_coefficient(&line_well, &l, 0.3, 2), Err(Error::VanishingOrder { .. })));
    }
}
