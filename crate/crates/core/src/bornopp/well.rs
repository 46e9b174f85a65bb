//! Planar wells `-h²Δ + V` where `V` vanishes to order `2m` on a curve `Γ`.
//!
//! Near `Γ` the transverse model is `-d²/dt² + f(s) t^{2m}`, with `f` the
//! normal coefficient of `V`. The low levels concentrate at the minima of `f`
//! and are predicted by
//!
//! `h^{2m/(m+1)} [η₀^{1/(m+1)} μ_j + h^{1/(m+1)} μ_j^{1/2} A_ℓ(α)]`,
//!
//! `A_ℓ(α) = (2α ρ(s_ℓ) + Tr⁺) / (η₀^{m/(2m+2)} (m+1)^{1/2})`,
//!
//! where `ρ²` are the eigenvalues of the arc-length Hessian of `f` at `s_ℓ`.
//! Expanding `f^{1/(m+1)}` to second order at the minimum gives the same form
//! with `ρ` replaced by `ρ/√2`; both coefficients are reported.

use serde::{Deserialize, Serialize};

use super::report::{fit_order, BOReport, ReportRow};
use super::{transverse_mu, TransverseOptions};
use crate::eigensolve::{lowest_k, SolveOptions};
use crate::error::{Error, Result};
use crate::grid::{add_diagonal_potential, kinetic_on_grid, richardson, Axis, BoundaryCondition, Grid};
use crate::par::{self, Execution};
use crate::potential::{check_well_hypotheses, normal_well_coefficient, Curve, Evaluator, PotentialSpec};

/// Default validity threshold on `μ_j h^{4m/((m+1)(2m+3))}`.
pub const DEFAULT_WELL_GATE: f64 = 0.25;

/// `μ_1..μ_{j_max}` of `-d²/dt² + t^{2m}`.
pub fn well_mu(m: usize, j_max: usize) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::InvalidArgument("vanishing order m must be positive".into()));
    }
    let k = 2 * m as i32;
    let g = Evaluator::new(format!("t^{k}"), 1, move |t| t[0].powi(k));
    Ok(transverse_mu(&g, 2.0 * m as f64, j_max, &TransverseOptions::default())?.mu)
}

/// A minimum of `f` on `Γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellMinimum {
    /// Curve parameter.
    pub s: f64,
    pub point: [f64; 2],
    /// Square roots of the arc-length Hessian eigenvalues (one in the plane).
    pub rho: Vec<f64>,
    pub tr_plus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellModel {
    pub m: usize,
    /// `min f` on `Γ`.
    pub eta0: f64,
    pub minima: Vec<WellMinimum>,
    /// `μ_1..μ_{j_max + 1}`; the extra level bounds the matched range.
    pub mu: Vec<f64>,
}

fn parts(spec: &PotentialSpec) -> Result<(usize, &Evaluator, &Curve, Option<&Evaluator>)> {
    match spec {
        PotentialSpec::HypersurfaceWell { m, v, gamma, f_on_gamma } => {
            spec.validate()?;
            Ok((*m, v, gamma, f_on_gamma.as_ref()))
        }
        other => Err(Error::InvalidArgument(format!("expected a hypersurface well, got {}", other.name()))),
    }
}

/// `f(s)` from the supplied profile or from the normal expansion of `V`.
fn coefficient<'a>(v: &'a Evaluator, gamma: &'a Curve, f_on_gamma: Option<&'a Evaluator>, m: usize) -> impl Fn(f64) -> Result<f64> + 'a {
    move |s| match f_on_gamma {
        Some(f) => Ok(f.eval(&[s])),
        None => normal_well_coefficient(v, gamma, s, m),
    }
}

fn golden_min(f: &dyn Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
        if (b - a).abs() < 1e-10 {
            break;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

/// Locates the minima of `f` on `Γ` and their curvature data.
pub fn well_model(spec: &PotentialSpec, j_max: usize) -> Result<WellModel> {
    const SAMPLES: usize = 720;
    let (m, v, gamma, f_on) = parts(spec)?;
    let f = coefficient(v, gamma, f_on, m);
    let (s0, s1) = gamma.domain;
    let step = (s1 - s0) / SAMPLES as f64;
    let ss: Vec<f64> = (0..SAMPLES).map(|i| s0 + step * (i as f64 + if gamma.closed { 0.0 } else { 0.5 })).collect();
    let fs = ss.iter().map(|&s| f(s)).collect::<Result<Vec<f64>>>()?;
    if let Some(bad) = fs.iter().find(|&&x| !(x > 0.0)) {
        return Err(Error::InvalidArgument(format!("normal coefficient must be positive on the curve, found {bad}")));
    }
    let mut cands = Vec::new();
    for i in 0..SAMPLES {
        let (prev, next) = if gamma.closed {
            ((i + SAMPLES - 1) % SAMPLES, (i + 1) % SAMPLES)
        } else {
            if i == 0 || i + 1 == SAMPLES {
                continue;
            }
            (i - 1, i + 1)
        };
        if fs[i] <= fs[prev] && fs[i] < fs[next] {
            cands.push(golden_min(&f, ss[i] - step, ss[i] + step)?);
        }
    }
    let eta0 = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    if !eta0.is_finite() {
        return Err(Error::InvalidArgument("f has no interior minimum on the curve".into()));
    }
    let mut minima = Vec::new();
    for &(s, fs) in &cands {
        if fs > eta0 * (1.0 + 1e-5) {
            continue;
        }
        // arc-length second derivative at a critical point
        let ds = 1e-3 * (s1 - s0).abs().max(1.0) / 6.0;
        let fss = (f(s + ds)? - 2.0 * fs + f(s - ds)?) / (ds * ds);
        let speed = gamma.speed(s);
        let hess = fss / (speed * speed);
        if !(hess > 0.0) {
            return Err(Error::InvalidArgument(format!("minimum of f at s = {s} is degenerate (f_ss = {hess})")));
        }
        let rho = hess.sqrt();
        minima.push(WellMinimum { s, point: gamma.point(s), rho: vec![rho], tr_plus: rho });
    }
    let mu = well_mu(m, j_max + 1)?;
    Ok(WellModel { m, eta0, minima, mu })
}

/// Printed coefficient `A_ℓ(α)`.
pub fn well_coefficient(model: &WellModel, l: usize, alpha: usize) -> f64 {
    let m = model.m as f64;
    let w = &model.minima[l];
    (2.0 * alpha as f64 * w.rho[0] + w.tr_plus) / (model.eta0.powf(m / (2.0 * m + 2.0)) * (m + 1.0).sqrt())
}

/// `A_ℓ(α)` from the second-order expansion of `f^{1/(m+1)}`, i.e. with `ρ/√2`.
pub fn derived_well_coefficient(model: &WellModel, l: usize, alpha: usize) -> f64 {
    well_coefficient(model, l, alpha) / std::f64::consts::SQRT_2
}

/// `μ_j h^{4m/((m+1)(2m+3))}`.
pub fn gate_value(m: usize, mu_j: f64, h: f64) -> f64 {
    let m = m as f64;
    mu_j * h.powf(4.0 * m / ((m + 1.0) * (2.0 * m + 3.0)))
}

/// Leading term and correction coefficient used by a prediction.
fn predict(model: &WellModel, h: f64, j: usize, coef: f64) -> f64 {
    let m = model.m as f64;
    let mu = model.mu[j - 1];
    h.powf(2.0 * m / (m + 1.0)) * (model.eta0.powf(1.0 / (m + 1.0)) * mu + h.powf(1.0 / (m + 1.0)) * mu.sqrt() * coef)
}

/// The two-term prediction for `(j, ℓ, α)`, refused outside the validity gate.
pub fn well_prediction(model: &WellModel, h: f64, j: usize, l: usize, alpha: usize, gate: f64) -> Result<f64> {
    if j == 0 || j > model.mu.len() {
        return Err(Error::InvalidArgument(format!("band j = {j} outside 1..={}", model.mu.len())));
    }
    if l >= model.minima.len() {
        return Err(Error::InvalidArgument(format!("minimum index {l} outside 0..{}", model.minima.len())));
    }
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::InvalidArgument(format!("h = {h} must lie in (0, 1]")));
    }
    let g = gate_value(model.m, model.mu[j - 1], h);
    if g > gate {
        return Err(Error::Gate(format!("outside validity range: mu_j h^(4m/((m+1)(2m+3))) = {g:.4} > {gate}")));
    }
    Ok(predict(model, h, j, well_coefficient(model, l, alpha)))
}

/// One side of the computational box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisSpan {
    pub lo: f64,
    pub hi: f64,
    pub lo_bc: BoundaryCondition,
    pub hi_bc: BoundaryCondition,
}

impl AxisSpan {
    pub fn dirichlet(lo: f64, hi: f64) -> Self {
        AxisSpan { lo, hi, lo_bc: BoundaryCondition::Dirichlet, hi_bc: BoundaryCondition::Dirichlet }
    }
}

#[derive(Debug, Clone)]
pub struct WellConfig {
    pub spec: PotentialSpec,
    pub h_list: Vec<f64>,
    pub j_max: usize,
    pub alpha_max: usize,
    /// Box in `(x, y)`; a side through a minimum acts as a reflection plane.
    pub domain: [AxisSpan; 2],
    /// Coarse spacing in units of the transverse length `(h²/η₀)^{1/(2m+2)}`.
    pub resolution: f64,
    pub gate: f64,
    pub warn_only: bool,
    pub exec: Execution,
}

/// Quantum numbers a box admits at a minimum: a reflection plane through the
/// point restricts `α` (plane normal along the tangent) or `j` (along the normal).
fn admitted(gamma: &Curve, w: &WellMinimum, domain: &[AxisSpan; 2]) -> (Option<usize>, Option<usize>) {
    let t = gamma.velocity(w.s);
    let tn = t[0].hypot(t[1]);
    let (mut alpha_parity, mut j_parity) = (None, None);
    for (axis, span) in domain.iter().enumerate() {
        for (plane, bc) in [(span.lo, span.lo_bc), (span.hi, span.hi_bc)] {
            if (w.point[axis] - plane).abs() > 1e-6 * (1.0 + plane.abs()) {
                continue;
            }
            let parity = if bc == BoundaryCondition::Neumann { 0 } else { 1 };
            if (t[axis] / tn).abs() > 0.999 {
                alpha_parity = Some(parity);
            } else if (t[axis] / tn).abs() < 1e-3 {
                // transverse levels alternate parity starting from even j = 1
                j_parity = Some(parity);
            }
        }
    }
    (alpha_parity, j_parity)
}

fn inside(p: [f64; 2], domain: &[AxisSpan; 2]) -> bool {
    (0..2).all(|i| p[i] >= domain[i].lo - 1e-6 && p[i] <= domain[i].hi + 1e-6)
}

/// Lowest `k` eigenvalues of `-h²Δ + V` on the box, Richardson-extrapolated
/// from a spacing pair. Returns values and correction sizes.
pub fn box_levels(v: &Evaluator, h: f64, domain: &[AxisSpan; 2], spacing: f64, k: usize) -> Result<Vec<(f64, f64)>> {
    let axes = domain.iter().map(|d| Axis::spanning(d.lo, d.hi, spacing, d.lo_bc, d.hi_bc)).collect::<Result<Vec<_>>>()?;
    let coarse = Grid::new(axes)?;
    let mut values = Vec::new();
    let mut spacings = Vec::new();
    for grid in [coarse.clone(), coarse.refined()] {
        let op = add_diagonal_potential(&kinetic_on_grid(&grid, &[h * h, h * h])?, &grid, |x| v.eval(x))?;
        let s = lowest_k(&op, &SolveOptions::with_k(k))?;
        if !s.converged {
            return Err(Error::Solver(format!("well eigensolve at h = {h} did not converge")));
        }
        values.push(s.values);
        spacings.push(grid.axes[0].spacing);
    }
    (0..k).map(|i| richardson(&[values[0][i], values[1][i]], &spacings, 2)).collect()
}

/// Sweeps `h`, matches the sorted predictions inside the box to the lowest
/// eigenvalues by rank, and fits remainder orders and correction coefficients.
pub fn well_compare(cfg: &WellConfig) -> Result<BOReport> {
    let (m, v, gamma, _) = parts(&cfg.spec)?;
    if cfg.h_list.is_empty() || cfg.j_max == 0 {
        return Err(Error::InvalidArgument("well sweep needs h values and j_max >= 1".into()));
    }
    let mut report = BOReport::new("well", 2.0 * m as f64);
    let hyp = check_well_hypotheses(v, gamma, m, 360);
    if !hyp.overall {
        let failed: Vec<&str> = hyp.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        if !cfg.warn_only {
            return Err(Error::Gate(format!("well hypotheses fail: {}", failed.join("; "))));
        }
        report.skipped.push(format!("warning: well hypotheses fail: {}", failed.join("; ")));
    }
    report.hypotheses = Some(hyp);
    let model = well_model(&cfg.spec, cfg.j_max)?;
    report.extra.insert("eta0".into(), model.eta0);
    let local: Vec<usize> = (0..model.minima.len()).filter(|&l| inside(model.minima[l].point, &cfg.domain)).collect();
    if local.is_empty() {
        return Err(Error::InvalidArgument("no minimum of f lies in the computational box".into()));
    }
    for &l in &local {
        let w = &model.minima[l];
        report.extra.insert(format!("rho_l{}", l + 1), w.rho[0]);
        report.extra.insert(format!("A_printed_l{}", l + 1), well_coefficient(&model, l, 0));
        report.extra.insert(format!("A_derived_l{}", l + 1), derived_well_coefficient(&model, l, 0));
    }

    // (j, l, alpha) labels admitted by the box, with the cutoff below which the list is complete
    let mut labels = Vec::new();
    let mut cutoff = f64::INFINITY;
    for &l in &local {
        let (ap, jp) = admitted(gamma, &model.minima[l], &cfg.domain);
        let js: Vec<usize> = (1..=cfg.j_max + 1).filter(|j| jp.is_none_or(|p| (j - 1) % 2 == p)).collect();
        let alphas: Vec<usize> = (0..=cfg.alpha_max + 2).filter(|a| ap.is_none_or(|p| a % 2 == p)).collect();
        let (j_top, a_top) = (*js.iter().rfind(|&&j| j <= cfg.j_max).unwrap_or(&0), *alphas.iter().rfind(|&&a| a <= cfg.alpha_max).unwrap_or(&0));
        for &j in &js {
            for &a in &alphas {
                if j <= j_top && a <= a_top {
                    labels.push((j, l, a));
                } else {
                    // first excluded levels bound the complete range, at the smallest h
                    let h0 = cfg.h_list.iter().cloned().fold(f64::INFINITY, f64::min);
                    let lead = h0.powf(2.0 * m as f64 / (m as f64 + 1.0));
                    cutoff = cutoff.min(predict(&model, h0, j, well_coefficient(&model, l, a)) / lead);
                }
            }
        }
    }

    let mf = m as f64;
    let cells: Vec<f64> = cfg.h_list.clone();
    let results = par::map(cfg.exec, &cells, |&h| -> Result<(Vec<ReportRow>, Vec<String>)> {
        let lead = h.powf(2.0 * mf / (mf + 1.0));
        let mut preds: Vec<(f64, (usize, usize, usize))> = labels
            .iter()
            .map(|&(j, l, a)| (predict(&model, h, j, well_coefficient(&model, l, a)), (j, l, a)))
            .filter(|(p, _)| p / lead < cutoff)
            .collect();
        preds.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut skipped = Vec::new();
        if preds.is_empty() {
            return Ok((Vec::new(), skipped));
        }
        let spacing = cfg.resolution * (h * h / model.eta0).powf(1.0 / (2.0 * mf + 2.0));
        let levels = box_levels(v, h, &cfg.domain, spacing, preds.len())?;
        let mut rows = Vec::new();
        for (rank, &(p, (j, l, a))) in preds.iter().enumerate() {
            let g = gate_value(m, model.mu[j - 1], h);
            if g > cfg.gate {
                skipped.push(format!("h {h}: (j={j}, l={}, alpha={a}) outside validity range ({g:.4} > {})", l + 1, cfg.gate));
                continue;
            }
            let (full, err) = levels[rank];
            let mut flags = Vec::new();
            let lo = if rank > 0 { preds[rank - 1].0 } else { f64::NEG_INFINITY };
            let hi = preds.get(rank + 1).map(|x| x.0).unwrap_or(f64::INFINITY);
            if (full - p).abs() > 0.5 * (p - lo).min(hi - p) {
                flags.push("ambiguous".to_string());
            }
            rows.push(ReportRow {
                hbar: None,
                h,
                j,
                k: None,
                l: Some(l + 1),
                alpha: Some(a),
                mu_j: model.mu[j - 1],
                full,
                full_error: err,
                effective: None,
                effective_error: None,
                prediction: p,
                err_effective: None,
                err_prediction: (full - p).abs(),
                flags,
            });
        }
        Ok((rows, skipped))
    });
    for r in results {
        let (rows, skipped) = r?;
        report.rows.extend(rows);
        report.skipped.extend(skipped);
    }
    report.rows.sort_by(|x, y| (x.j, x.l, x.alpha).cmp(&(y.j, y.l, y.alpha)).then(y.h.total_cmp(&x.h)));
    report.fit_orders();

    // correction coefficient c(h) = (λ/h^{2m/(m+1)} - η₀^{1/(m+1)} μ_j) / (h^{1/(m+1)} μ_j^{1/2}),
    // extrapolated linearly in h^{1/(m+1)}
    let mut keys: Vec<(usize, usize, usize)> = report.rows.iter().map(|r| (r.j, r.l.unwrap(), r.alpha.unwrap())).collect();
    keys.dedup();
    for (j, l, a) in keys {
        let pts: Vec<(f64, f64, f64)> = report
            .rows
            .iter()
            .filter(|r| r.j == j && r.l == Some(l) && r.alpha == Some(a))
            .map(|r| {
                let lead = r.h.powf(2.0 * mf / (mf + 1.0));
                let x = r.h.powf(1.0 / (mf + 1.0));
                let ratio = r.full / (lead * model.eta0.powf(1.0 / (mf + 1.0)) * r.mu_j);
                (x, (r.full / lead - model.eta0.powf(1.0 / (mf + 1.0)) * r.mu_j) / (x * r.mu_j.sqrt()), ratio)
            })
            .collect();
        let tag = format!("j{j}_l{l}_a{a}");
        if let Some(last) = pts.iter().min_by(|p, q| p.0.total_cmp(&q.0)) {
            report.extra.insert(format!("leading_ratio_{tag}"), last.2);
            report.extra.insert(format!("correction_smallest_h_{tag}"), last.1);
        }
        if pts.len() >= 2 {
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            if sxx > 0.0 {
                report.extra.insert(format!("correction_intercept_{tag}"), my - sxy / sxx * mx);
            }
        }
        let rem: Vec<(f64, f64)> = report
            .rows
            .iter()
            .filter(|r| r.j == j && r.l == Some(l) && r.alpha == Some(a))
            .map(|r| (r.h, r.err_prediction))
            .collect();
        let derived: Vec<(f64, f64)> = report
            .rows
            .iter()
            .filter(|r| r.j == j && r.l == Some(l) && r.alpha == Some(a))
            .map(|r| (r.h, (r.full - predict(&model, r.h, j, derived_well_coefficient(&model, l - 1, a))).abs()))
            .collect();
        if rem.len() >= 3 {
            if let Ok((order, _)) = fit_order(&rem) {
                report.extra.insert(format!("remainder_order_{tag}"), order);
            }
            if let Ok((order, _)) = fit_order(&derived) {
                report.extra.insert(format!("remainder_order_derived_{tag}"), order);
            }
        }
    }
    Ok(report)
}
