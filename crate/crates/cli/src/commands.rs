//! The six subcommands. Each computes everything first and then writes its
//! files in a fixed order, so output bytes do not depend on scheduling.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use degenspec::bornopp::well::{well_compare, WellConfig, DEFAULT_WELL_GATE};
use degenspec::bornopp::{bo_compare, full_model, transverse_mu, BOConfig, BOReport, Numerics, Regime, TransverseOptions};
use degenspec::eigensolve::{count_curve, lowest_pairs, residuals, SolveOptions};
use degenspec::grid::{add_diagonal_potential, kinetic_on_grid, richardson, Grid, SparseSymMatrix};
use degenspec::par::Execution;
use degenspec::potential::{
    check_bihomogeneity, check_f_hypotheses, check_homogeneity, check_well_hypotheses, Check, HypothesisReport, PotentialSpec,
};
use degenspec::quad::QuadOptions;
use degenspec::weyl::{
    homogeneous_prediction, minmax_counting, product_growth_regime, robert_regime, simon_prediction, solomyak_prediction,
    weyl_prediction_of, AsymptoticPrediction, TraceOptions,
};
use serde_json::json;

use crate::config::Config;
use crate::error::CliError;
use crate::model::{grid, model, span, Model};

/// CSV layout version written on the first line of every table.
pub const CSV_SCHEMA: u32 = 1;

/// Run-wide settings from the command line.
#[derive(Debug, Clone)]
pub struct Context {
    pub out: PathBuf,
    pub seed: u64,
    pub warn_only: bool,
    pub exec: Execution,
}

/// Files written by a command and its human-readable summary.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

fn num(x: f64) -> String {
    format!("{x:.12e}")
}

/// RFC 4180 table preceded by `# schema=N`.
pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(std::io::Error::other(e.to_string()));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    let body = w.into_inner().map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))?;
    Ok(format!("# schema={CSV_SCHEMA}\r\n{}", String::from_utf8(body).expect("csv output is utf-8")))
}

fn prefix(cfg: &Config, default: &str) -> String {
    cfg.str("output", "prefix").unwrap_or(default).to_string()
}

fn write(out: &mut Outcome, dir: &Path, name: String, contents: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    out.files.push(path);
    Ok(())
}

fn hypotheses(m: &Model, cfg: &Config, seed: u64) -> Result<HypothesisReport, CliError> {
    let samples = cfg.get_or("validate", "samples", 200usize)?;
    let r = match &m.spec {
        None => {
            let v0 = m.v.eval(&vec![0.0; m.v.dim()]);
            HypothesisReport::new(vec![Check::new("V finite at the origin", v0.is_finite(), v0)])
        }
        Some(PotentialSpec::Homogeneous { a, g }) => check_homogeneity(g, *a, samples, seed)?,
        Some(PotentialSpec::ProductFG { f, g, a }) => {
            let probe = cfg.get_or("validate", "probe_radius", 3.0)?;
            check_homogeneity(g, *a, samples, seed)?.merge(check_f_hypotheses(f, probe, m.f_inf)?)
        }
        Some(PotentialSpec::BiHomogeneous { n, a, b, big_f, .. }) => check_bihomogeneity(big_f, *n, *a, *b, samples, seed)?,
        Some(PotentialSpec::HypersurfaceWell { m: order, v, gamma, .. }) => check_well_hypotheses(v, gamma, *order, 360),
        Some(_) => HypothesisReport::new(vec![Check::new("parameters in range", true, 0.0)]),
    };
    Ok(r)
}

fn check_table(r: &HypothesisReport) -> String {
    let mut s = String::new();
    for c in &r.checks {
        let _ = write!(s, "{}  {}  residual={:.3e}", if c.pass { "pass" } else { "FAIL" }, c.name, c.residual);
        if let Some(n) = &c.note {
            let _ = write!(s, "  ({n})");
        }
        s.push('\n');
    }
    s
}

pub fn validate(cfg: &Config, ctx: &Context) -> Result<Outcome, CliError> {
    let m = model(cfg)?;
    let report = hypotheses(&m, cfg, ctx.seed)?;
    let mut out = Outcome { summary: check_table(&report), ..Default::default() };
    let json = serde_json::to_string_pretty(&json!({ "family": m.family, "report": report })).expect("serializable");
    write(&mut out, &ctx.out, format!("{}.json", prefix(cfg, "validate")), &json)?;
    if !report.overall && !ctx.warn_only {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        print!("{}", out.summary);
        return Err(CliError::CheckFailed(format!("hypothesis checks failed: {}", failed.join("; "))));
    }
    Ok(out)
}

/// `-h²Δ + V` on `grid`, or `ℏ²Δ_y + Δ_z + f g` for product models when `hbar` is set.
fn operator(m: &Model, grid: &Grid, scale: f64, semiclassical: bool) -> Result<SparseSymMatrix, CliError> {
    if let (false, Some(PotentialSpec::ProductFG { f, g, .. })) = (semiclassical, &m.spec) {
        return Ok(full_model(f, g, scale, grid)?);
    }
    let kin = kinetic_on_grid(grid, &vec![scale * scale; grid.dim()])?;
    Ok(add_diagonal_potential(&kin, grid, |x| m.v.eval(x))?)
}

/// `(scale, semiclassical)`: `h` values for `-h²Δ + V`, or `ℏ` values for product models.
fn scales(cfg: &Config, m: &Model) -> Result<Vec<(f64, bool)>, CliError> {
    if let Some(hb) = cfg.list::<f64>("sweep", "hbar")? {
        if !matches!(m.spec, Some(PotentialSpec::ProductFG { .. })) {
            return Err(cfg.require("sweep", "hbar")?.error("hbar sweeps need a product model; use h"));
        }
        return Ok(hb.into_iter().map(|x| (x, false)).collect());
    }
    let hs = cfg.list::<f64>("sweep", "h")?.unwrap_or_else(|| vec![1.0]);
    if let Some(bad) = hs.iter().find(|&&h| !(h > 0.0 && h <= 1.0)) {
        return Err(cfg.require("sweep", "h")?.error(format!("h = {bad} must lie in (0, 1]")));
    }
    Ok(hs.into_iter().map(|x| (x, true)).collect())
}

pub fn solve(cfg: &Config, ctx: &Context) -> Result<Outcome, CliError> {
    let m = model(cfg)?;
    let grid = grid(cfg, m.v.dim())?;
    let opts = SolveOptions {
        k: cfg.get_or("solver", "k", 4usize)?,
        tol: cfg.get_or("solver", "tol", 1e-8)?,
        max_iterations: cfg.get_or("solver", "max_iterations", SolveOptions::default().max_iterations)?,
        ..SolveOptions::default()
    };
    let extrapolate = cfg.flag("solver", "richardson")?;
    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut failure = None;
    for (scale, semi) in scales(cfg, &m)? {
        let a = operator(&m, &grid, scale, semi)?;
        let pairs = lowest_pairs(&a, &opts)?;
        let res = residuals(&a, &pairs.spectrum, &pairs.vectors)?;
        let fine = if extrapolate {
            let fine = grid.refined();
            Some(degenspec::eigensolve::lowest_k(&operator(&m, &fine, scale, semi)?, &opts)?)
        } else {
            None
        };
        if !pairs.spectrum.converged || fine.as_ref().is_some_and(|s| !s.converged) {
            failure.get_or_insert(format!("eigensolve at scale {scale} did not converge"));
        }
        for (i, &v) in pairs.spectrum.values.iter().enumerate() {
            let (ext, err) = match &fine {
                Some(f) if i < f.values.len() => {
                    let (e, c) = richardson(&[v, f.values[i]], &[grid.axes[0].spacing, grid.axes[0].spacing * 0.5], 2)?;
                    (Some(e), Some(c))
                }
                _ => (None, None),
            };
            rows.push(vec![
                num(scale),
                (i + 1).to_string(),
                num(v),
                num(res[i]),
                ext.map(num).unwrap_or_default(),
                err.map(num).unwrap_or_default(),
            ]);
            records.push(json!({"scale": scale, "k": i + 1, "value": v, "residual": res[i], "extrapolated": ext, "richardson_error": err}));
        }
    }
    let scale_name = if cfg.entry("sweep", "hbar").is_some() { "hbar" } else { "h" };
    let csv = csv_table(&[scale_name, "k", "value", "residual", "extrapolated", "richardson_error"], &rows)?;
    let mut out = Outcome::default();
    let p = prefix(cfg, "solve");
    write(&mut out, &ctx.out, format!("{p}.csv"), &csv)?;
    let json = serde_json::to_string_pretty(&json!({"family": m.family, "grid": grid.shape(), "levels": records})).expect("serializable");
    write(&mut out, &ctx.out, format!("{p}.json"), &json)?;
    out.summary = rows.iter().map(|r| format!("{} = {}  k = {}  lambda = {}\n", scale_name, r[0], r[1], r[2])).collect();
    match failure {
        Some(msg) => Err(CliError::Core(degenspec::Error::Solver(msg))),
        None => Ok(out),
    }
}

fn lambdas(cfg: &Config) -> Result<Vec<f64>, CliError> {
    if let Some(l) = cfg.list::<f64>("sweep", "lambda")? {
        return Ok(l);
    }
    if let Some(e) = cfg.entry("sweep", "lambda_range") {
        let r: Vec<f64> = e.parse_list()?;
        if r.len() != 3 || !(r[2] > 0.0) || r[1] < r[0] {
            return Err(e.error("expected 'start, stop, step' with step > 0"));
        }
        let n = ((r[1] - r[0]) / r[2] + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| r[0] + r[2] * i as f64).collect());
    }
    Ok(Vec::new())
}

pub fn count(cfg: &Config, ctx: &Context) -> Result<Outcome, CliError> {
    let m = model(cfg)?;
    let ls = lambdas(cfg)?;
    if ls.is_empty() {
        return Err(CliError::Config("count needs a nonempty lambda list ([sweep] lambda or lambda_range)".into()));
    }
    let h = cfg.get_or("sweep", "h", 1.0)?;
    let grid = grid(cfg, m.v.dim())?;
    let a = operator(&m, &grid, h, true)?;
    let counts = count_curve(&a, &ls, ctx.exec).into_iter().collect::<Result<Vec<usize>, _>>()?;
    let quad = QuadOptions::default();
    let weyl = if cfg.flag("count", "weyl")? {
        Some(ls.iter().map(|&l| weyl_prediction_of(h, l, &m.v, &quad)).collect::<Result<Vec<f64>, _>>()?)
    } else {
        None
    };
    let minmax = if cfg.flag("count", "minmax")? {
        let Some(PotentialSpec::ProductFG { f, g, a }) = &m.spec else {
            return Err(cfg.require("count", "minmax")?.error("min-max counting needs a product model"));
        };
        let j_max = cfg.get_or("count", "j_max", 40usize)?;
        let mu = transverse_mu(g, *a, j_max, &TransverseOptions::default())?.mu;
        Some(ls.iter().map(|&l| minmax_counting(h, l, f, *a, &mu, &quad)).collect::<Result<Vec<f64>, _>>()?)
    } else {
        None
    };
    let mut header = vec!["lambda", "count"];
    if weyl.is_some() {
        header.push("weyl");
    }
    if minmax.is_some() {
        header.push("minmax");
    }
    let rows: Vec<Vec<String>> = (0..ls.len())
        .map(|i| {
            let mut r = vec![num(ls[i]), counts[i].to_string()];
            if let Some(w) = &weyl {
                r.push(num(w[i]));
            }
            if let Some(w) = &minmax {
                r.push(num(w[i]));
            }
            r
        })
        .collect();
    let mut out = Outcome::default();
    write(&mut out, &ctx.out, format!("{}.csv", prefix(cfg, "count")), &csv_table(&header, &rows)?)?;
    out.summary = rows.iter().map(|r| format!("N({}) = {}\n", r[0], r[1])).collect();
    Ok(out)
}

pub fn regime(cfg: &Config, ctx: &Context) -> Result<Outcome, CliError> {
    let m = model(cfg)?;
    let family = cfg.require("model", "family")?;
    let pred: AsymptoticPrediction = match &m.spec {
        Some(spec @ PotentialSpec::Homogeneous { .. }) => homogeneous_prediction(spec)?,
        Some(PotentialSpec::BiHomogeneous { n, p, a, b, big_f }) => solomyak_prediction(*n, *p, *a, *b, Some(big_f))?,
        Some(PotentialSpec::PowerProduct { alpha, beta }) => {
            let trace = if cfg.flag("regime", "trace")? { Some(TraceOptions::default()) } else { None };
            simon_prediction(*alpha, *beta, trace.as_ref())?
        }
        Some(PotentialSpec::RobertPotential { k, l }) => robert_regime(*k, *l)?,
        Some(PotentialSpec::ProductFG { a, .. }) => match m.growth {
            Some(k) => product_growth_regime(k, *a, m.n, m.p)?,
            None => return Err(family.error("product models need a declared growth exponent ('growth = k') for regime dispatch")),
        },
        _ => return Err(family.error("no counting regime is defined for this family")),
    };
    let json = serde_json::to_string_pretty(&pred).expect("serializable");
    let mut out = Outcome::default();
    write(&mut out, &ctx.out, format!("{}.json", prefix(cfg, "regime")), &json)?;
    out.summary = format!(
        "{}: exponent {}{}{}\n",
        pred.formula_id,
        pred.exponent,
        if pred.has_log { " with log" } else { "" },
        pred.constant.map(|c| format!(", constant {c}")).unwrap_or_default()
    );
    for a in &pred.anomalies {
        let _ = writeln!(out.summary, "anomaly: {a}");
    }
    Ok(out)
}

fn numerics(cfg: &Config, exec: Execution) -> Result<Numerics, CliError> {
    let d = Numerics::default();
    Ok(Numerics {
        resolution: cfg.get_or("numerics", "resolution", d.resolution)?,
        action: cfg.get_or("numerics", "action", d.action)?,
        window: cfg.get_or("numerics", "window", d.window)?,
        exec,
    })
}

fn emit_report(cfg: &Config, ctx: &Context, report: &BOReport, default: &str, summary: String) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let p = prefix(cfg, default);
    write(&mut out, &ctx.out, format!("{p}.csv"), &report.to_csv()?)?;
    write(&mut out, &ctx.out, format!("{p}.json"), &report.to_json()?)?;
    write(&mut out, &ctx.out, format!("{p}_summary.txt"), &summary)?;
    out.summary = summary;
    Ok(out)
}

pub fn bo(cfg: &Config, ctx: &Context) -> Result<Outcome, CliError> {
    let m = model(cfg)?;
    let family = cfg.require("model", "family")?;
    let Some(PotentialSpec::ProductFG { f, g, a }) = &m.spec else {
        return Err(family.error("bo needs a product model"));
    };
    let f_inf = match m.f_inf {
        Some(v) if v.is_infinite() => None,
        Some(v) => Some(v),
        None => return Err(CliError::Config("bo needs 'f_inf' in [model] (a number or inf)".into())),
    };
    let regime = match cfg.str("sweep", "regime").unwrap_or("low") {
        "low" => Regime::LowEnergy,
        "middle" => Regime::MiddleEnergy,
        other => return Err(cfg.require("sweep", "regime")?.error(format!("unknown regime {other:?} (low or middle)"))),
    };
    let hbars = cfg.list::<f64>("sweep", "hbar")?.ok_or_else(|| CliError::Config("bo needs [sweep] hbar".into()))?;
    let bc = BOConfig {
        f: f.clone(),
        g: g.clone(),
        a: *a,
        f_inf,
        hbars,
        j_max: cfg.get_or("sweep", "j_max", 1usize)?,
        k_max: cfg.get_or("sweep", "k_max", 1usize)?,
        regime,
        warn_only: ctx.warn_only,
        numerics: numerics(cfg, ctx.exec)?,
    };
    let report = bo_compare(&bc)?;
    let min_order = cfg.get_or("summary", "min_order", 1.8)?;
    let mut s = String::new();
    let _ = writeln!(s, "f scale {}; {} rows; {} skipped cells", report.f_scale, report.rows.len(), report.skipped.len());
    for r in &report.skipped {
        let _ = writeln!(s, "skipped: {r}");
    }
    for fit in &report.fits {
        // higher k carry no second-order expansion, so only k = 1 and the effective comparison are held to the bound
        let judged = fit.quantity == "err_effective" || fit.k == 1;
        let verdict = if !judged {
            "info".to_string()
        } else if fit.order >= min_order {
            format!("order >= {min_order}: PASS")
        } else {
            format!("order >= {min_order}: FAIL")
        };
        let _ = writeln!(s, "j={} k={} {} order {:.3} constant {:.3e} ({} samples)  {}", fit.j, fit.k, fit.quantity, fit.order, fit.constant, fit.samples, verdict);
    }
    for (k, v) in &report.extra {
        let _ = writeln!(s, "{k} = {v:.6e}");
    }
    emit_report(cfg, ctx, &report, "bo", s)
}

pub fn well(cfg: &Config, ctx: &Context) -> Result<Outcome, CliError> {
    let m = model(cfg)?;
    let family = cfg.require("model", "family")?;
    let Some(spec @ PotentialSpec::HypersurfaceWell { .. }) = &m.spec else {
        return Err(family.error("well needs a well model"));
    };
    let h_list = cfg.list::<f64>("sweep", "h")?.ok_or_else(|| CliError::Config("well needs [sweep] h".into()))?;
    let wc = WellConfig {
        spec: spec.clone(),
        h_list,
        j_max: cfg.get_or("sweep", "j_max", 1usize)?,
        alpha_max: cfg.get_or("sweep", "alpha_max", 0usize)?,
        domain: [span(cfg, "x")?, span(cfg, "y")?],
        resolution: cfg.get_or("numerics", "resolution", 0.2)?,
        gate: cfg.get_or("sweep", "gate", DEFAULT_WELL_GATE)?,
        warn_only: ctx.warn_only,
        exec: ctx.exec,
    };
    let report = well_compare(&wc)?;
    let mut s = String::new();
    let _ = writeln!(s, "{:>10} {:>3} {:>3} {:>5} {:>16} {:>16} {:>10}", "h", "j", "l", "alpha", "eigenvalue", "prediction", "ratio");
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{:>10} {:>3} {:>3} {:>5} {:>16.9e} {:>16.9e} {:>10.6}",
            r.h,
            r.j,
            r.l.unwrap_or(0),
            r.alpha.unwrap_or(0),
            r.full,
            r.prediction,
            r.full / r.prediction
        );
    }
    for r in &report.skipped {
        let _ = writeln!(s, "skipped: {r}");
    }
    for (k, v) in &report.extra {
        let _ = writeln!(s, "{k} = {v:.6}");
    }
    let leading_tol = cfg.get_or("summary", "leading_tol", 0.15)?;
    let correction_tol = cfg.get_or("summary", "correction_tol", 0.25)?;
    let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
    for (k, v) in &report.extra {
        if let Some(tag) = k.strip_prefix("leading_ratio_") {
            let _ = writeln!(s, "{tag}: leading ratio {v:.4} within {leading_tol} of 1: {}", verdict((v - 1.0).abs() <= leading_tol));
        }
        if let Some(tag) = k.strip_prefix("correction_smallest_h_") {
            let l = tag.split('_').find_map(|p| p.strip_prefix('l')).unwrap_or("1");
            for kind in ["printed", "derived"] {
                if let Some(a) = report.extra.get(&format!("A_{kind}_l{l}")) {
                    let ok = ((v - a) / a).abs() <= correction_tol;
                    let _ = writeln!(s, "{tag}: correction {v:.4} vs {kind} coefficient {a:.4} within {correction_tol}: {}", verdict(ok));
                }
            }
        }
    }
    emit_report(cfg, ctx, &report, "well", s)
}
