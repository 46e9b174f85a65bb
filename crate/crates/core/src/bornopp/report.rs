//! Comparison reports and their CSV/JSON serializations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::HypothesisReport;

/// CSV layout version written on the first line.
pub const CSV_SCHEMA: u32 = 1;

/// One compared eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub hbar: Option<f64>,
    pub h: f64,
    pub j: usize,
    pub k: Option<usize>,
    /// Index of the well minimum, for hypersurface wells.
    pub l: Option<usize>,
    /// Longitudinal quantum number, for hypersurface wells.
    pub alpha: Option<usize>,
    pub mu_j: f64,
    pub full: f64,
    pub full_error: f64,
    pub effective: Option<f64>,
    pub effective_error: Option<f64>,
    pub prediction: f64,
    pub err_effective: Option<f64>,
    pub err_prediction: f64,
    pub flags: Vec<String>,
}

/// Log-log fit `quantity ≈ constant · x^order` over a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub j: usize,
    /// `k` for Born-Oppenheimer rows, `alpha` for well rows.
    pub k: usize,
    pub l: Option<usize>,
    pub quantity: String,
    pub order: f64,
    pub constant: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BOReport {
    pub kind: String,
    pub a: f64,
    /// `f(0)`, divided out before solving.
    pub f_scale: f64,
    pub rows: Vec<ReportRow>,
    pub fits: Vec<OrderFit>,
    /// Cells refused by a gate, with reasons.
    pub skipped: Vec<String>,
    pub extra: BTreeMap<String, f64>,
    pub hypotheses: Option<HypothesisReport>,
}

/// Least-squares slope and intercept of `ln y` against `ln x`.
pub fn fit_order(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return Err(Error::InvalidArgument("order fit needs two positive samples".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("order fit needs distinct abscissae".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, (my - slope * mx).exp()))
}

fn num(x: f64) -> String {
    format!("{x:.12e}")
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl BOReport {
    pub fn new(kind: &str, a: f64) -> Self {
        BOReport {
            kind: kind.to_string(),
            a,
            f_scale: 1.0,
            rows: Vec::new(),
            fits: Vec::new(),
            skipped: Vec::new(),
            extra: BTreeMap::new(),
            hypotheses: None,
        }
    }

    /// Fits error orders in `ℏ` (or `h` when rows carry no `ℏ`) per `(j, k)`.
    pub fn fit_orders(&mut self) {
        let key = |r: &ReportRow| (r.j, r.k.or(r.alpha).unwrap_or(0), r.l);
        let mut keys: Vec<_> = self.rows.iter().map(key).collect();
        keys.sort();
        keys.dedup();
        self.fits.clear();
        for (j, k, l) in keys {
            let sel: Vec<&ReportRow> = self.rows.iter().filter(|r| key(r) == (j, k, l)).collect();
            let x = |r: &ReportRow| r.hbar.unwrap_or(r.h);
            let mut qs: Vec<(&str, Vec<(f64, f64)>)> = vec![("err_prediction", sel.iter().map(|r| (x(r), r.err_prediction)).collect())];
            if sel.iter().all(|r| r.err_effective.is_some()) {
                qs.push(("err_effective", sel.iter().map(|r| (x(r), r.err_effective.unwrap())).collect()));
            }
            for (name, pts) in qs {
                let mut xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
                xs.sort_by(f64::total_cmp);
                xs.dedup();
                if xs.len() < 3 {
                    continue;
                }
                if let Ok((order, constant)) = fit_order(&pts) {
                    self.fits.push(OrderFit { j, k, l, quantity: name.into(), order, constant, samples: pts.len() });
                }
            }
        }
    }

    /// RFC 4180 CSV preceded by `# schema=N`; byte-identical for identical reports.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
        w.write_record([
            "kind", "hbar", "h", "j", "k", "l", "alpha", "mu_j", "full", "full_error", "effective", "effective_error", "prediction",
            "err_effective", "err_prediction", "flags",
        ])
        .map_err(io)?;
        for r in &self.rows {
            w.write_record([
                self.kind.clone(),
                opt(r.hbar.map(num)),
                num(r.h),
                r.j.to_string(),
                opt(r.k),
                opt(r.l),
                opt(r.alpha),
                num(r.mu_j),
                num(r.full),
                num(r.full_error),
                opt(r.effective.map(num)),
                opt(r.effective_error.map(num)),
                num(r.prediction),
                opt(r.err_effective.map(num)),
                num(r.err_prediction),
                r.flags.join(";"),
            ])
            .map_err(io)?;
        }
        let body = w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        let mut out = format!("# schema={CSV_SCHEMA}\r\n");
        out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidArgument(format!("json: {e}")))
    }
}
