//! Building potentials, grids and curves from a [`Config`].

use degenspec::expr::yz_names;
use degenspec::grid::{Axis, BoundaryCondition, Grid};
use degenspec::potential::{Curve, Evaluator, PotentialSpec};

use crate::config::{Config, Entry};
use crate::error::CliError;

/// The `[model]` section, resolved.
#[derive(Debug, Clone)]
pub struct Model {
    pub family: String,
    /// `None` for a plain `potential`.
    pub spec: Option<PotentialSpec>,
    /// The full potential on `R^dim`.
    pub v: Evaluator,
    /// `n` for product-type families.
    pub n: usize,
    pub p: usize,
    /// Declared `liminf f` at infinity for product families, possibly infinite.
    pub f_inf: Option<f64>,
    /// Declared growth exponent for the product-growth regime.
    pub growth: Option<f64>,
}

fn expr(e: &Entry, vars: &[String]) -> Result<Evaluator, CliError> {
    let names: Vec<&str> = vars.iter().map(|s| s.as_str()).collect();
    Evaluator::from_expr(&e.value, &names).map_err(|err| e.error(err.to_string()))
}

fn xs(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("x{i}")).collect()
}

fn real_or_inf(e: &Entry) -> Result<f64, CliError> {
    match e.value.as_str() {
        "inf" | "infinity" => Ok(f64::INFINITY),
        _ => e.parse(),
    }
}

pub fn model(cfg: &Config) -> Result<Model, CliError> {
    let family = cfg.require("model", "family")?;
    let (mut n, mut p, mut f_inf, mut growth) = (0, 0, None, None);
    let spec = match family.value.as_str() {
        "homogeneous" => {
            p = cfg.get_or("model", "p", 1usize)?;
            PotentialSpec::Homogeneous { a: cfg.req("model", "a")?, g: expr(cfg.require("model", "g")?, &yz_names(0, p))? }
        }
        "product" => {
            (n, p) = (cfg.get_or("model", "n", 1usize)?, cfg.get_or("model", "p", 1usize)?);
            if let Some(e) = cfg.entry("model", "f_inf") {
                f_inf = Some(real_or_inf(e)?);
            }
            growth = cfg.get("model", "growth")?;
            PotentialSpec::ProductFG {
                f: expr(cfg.require("model", "f")?, &yz_names(n, 0))?,
                g: expr(cfg.require("model", "g")?, &yz_names(0, p))?,
                a: cfg.req("model", "a")?,
            }
        }
        "bihomogeneous" => {
            (n, p) = (cfg.get_or("model", "n", 1usize)?, cfg.get_or("model", "p", 1usize)?);
            PotentialSpec::BiHomogeneous {
                n,
                p,
                a: cfg.req("model", "a")?,
                b: cfg.req("model", "b")?,
                big_f: expr(cfg.require("model", "F")?, &yz_names(n, p))?,
            }
        }
        "power-product" => PotentialSpec::PowerProduct { alpha: cfg.req("model", "alpha")?, beta: cfg.req("model", "beta")? },
        "robert" => PotentialSpec::RobertPotential { k: cfg.req("model", "k")?, l: cfg.req("model", "l")? },
        "well" => {
            let v = expr(cfg.require("model", "v")?, &xs(2))?;
            let gamma = curve(cfg)?;
            let f_on_gamma = cfg.entry("model", "f_on_curve").map(|e| expr(e, &["s".to_string()])).transpose()?;
            PotentialSpec::HypersurfaceWell { m: cfg.req("model", "m")?, v, gamma, f_on_gamma }
        }
        "potential" => {
            let d = cfg.get_or("model", "dim", 1usize)?;
            let v = expr(cfg.require("model", "v")?, &xs(d))?;
            return Ok(Model { family: family.value.clone(), spec: None, v, n, p, f_inf, growth });
        }
        other => {
            return Err(family.error(format!(
                "unknown family {other:?} (expected homogeneous, product, bihomogeneous, power-product, robert, well or potential)"
            )))
        }
    };
    spec.validate().map_err(|e| family.error(e.to_string()))?;
    Ok(Model { family: family.value.clone(), v: spec.evaluator(), spec: Some(spec), n, p, f_inf, growth })
}

fn curve(cfg: &Config) -> Result<Curve, CliError> {
    let kind = cfg.require("model", "curve")?;
    match kind.value.as_str() {
        "circle" => {
            let c: Vec<f64> = cfg.list("model", "center")?.unwrap_or_else(|| vec![0.0, 0.0]);
            let r: f64 = cfg.req("model", "radius")?;
            if c.len() != 2 || !(r > 0.0) {
                return Err(kind.error("circle needs a 2D center and a positive radius"));
            }
            Ok(Curve::circle([c[0], c[1]], r))
        }
        "line" => {
            let o: Vec<f64> = cfg.list("model", "origin")?.unwrap_or_else(|| vec![0.0, 0.0]);
            let d: Vec<f64> = cfg.list("model", "direction")?.unwrap_or_else(|| vec![1.0, 0.0]);
            if o.len() != 2 || d.len() != 2 {
                return Err(kind.error("line needs 2D origin and direction"));
            }
            Ok(Curve::line([o[0], o[1]], [d[0], d[1]]))
        }
        other => Err(kind.error(format!("unknown curve {other:?} (expected circle or line)"))),
    }
}

pub fn boundary(e: &Entry, s: &str) -> Result<BoundaryCondition, CliError> {
    match s {
        "dirichlet" => Ok(BoundaryCondition::Dirichlet),
        "neumann" => Ok(BoundaryCondition::Neumann),
        other => Err(e.error(format!("unknown boundary condition {other:?}"))),
    }
}

/// `[grid]` with `axis1 = lo, hi, points[, lo_bc, hi_bc]`, `axis2 = ...`.
pub fn grid(cfg: &Config, dim: usize) -> Result<Grid, CliError> {
    let mut axes = Vec::with_capacity(dim);
    for i in 1..=dim {
        let e = cfg.require("grid", &format!("axis{i}"))?;
        let parts: Vec<&str> = e.value.split(',').map(str::trim).collect();
        if parts.len() != 3 && parts.len() != 5 {
            return Err(e.error("expected 'lo, hi, points' optionally followed by two boundary conditions"));
        }
        let lo: f64 = parts[0].parse().map_err(|_| e.error("bad lower bound"))?;
        let hi: f64 = parts[1].parse().map_err(|_| e.error("bad upper bound"))?;
        let n: usize = parts[2].parse().map_err(|_| e.error("bad point count"))?;
        let mut axis = Axis::new(lo, hi, n).map_err(|err| e.error(err.to_string()))?;
        if parts.len() == 5 {
            axis = axis.with_bc(boundary(e, parts[3])?, boundary(e, parts[4])?);
        }
        axes.push(axis);
    }
    if let Some(extra) = cfg.section("grid").and_then(|s| s.entries.iter().find(|e| e.key.starts_with("axis") && e.key[4..].parse::<usize>().is_ok_and(|k| k > dim))) {
        return Err(extra.error(format!("model has dimension {dim}")));
    }
    Ok(Grid::new(axes)?)
}

/// `lo, hi, lo_bc, hi_bc`.
pub fn span(cfg: &Config, key: &str) -> Result<degenspec::bornopp::well::AxisSpan, CliError> {
    let e = cfg.require("domain", key)?;
    let parts: Vec<&str> = e.value.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(e.error("expected 'lo, hi, lo_bc, hi_bc'"));
    }
    Ok(degenspec::bornopp::well::AxisSpan {
        lo: parts[0].parse().map_err(|_| e.error("bad lower bound"))?,
        hi: parts[1].parse().map_err(|_| e.error("bad upper bound"))?,
        lo_bc: boundary(e, parts[2])?,
        hi_bc: boundary(e, parts[3])?,
    })
}
