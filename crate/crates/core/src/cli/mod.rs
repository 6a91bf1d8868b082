//! Command-line front end: problem files, subcommands and report output.

pub mod expr;
pub mod problem_file;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::floquet::{
    floquet_decompose, matfun::CMatrix, spectral_report, theta_parts, transition_matrix, SPECTRAL_TOL,
};
use crate::solver::{
    check_conditions, solve_picard, verify_solution, ConditionOptions, ConditionReport, NeutralProblem,
    PeriodicVectorFunction, PicardOptions, PicardOutcome, DEFAULT_HORIZON, DEFAULT_LIPSCHITZ_SAMPLES,
};
use crate::timescale::{default_period_sample, default_sample, verify_period, verify_shift_axioms, ShiftSystem};
use problem_file::{build_system, resolve_problem, LoadedProblem, Scalar, TimescaleSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check the shift axioms and derived identities on a sample.
    Axioms,
    /// Transition matrix over the closed first window.
    Transition,
    /// Monodromy, spectrum, and the R, e_R and L tables.
    Floquet,
    /// Theta, m and the off-orbit correction over the horizon.
    Theta,
    /// Constants and hypotheses of the existence and uniqueness theorems.
    Check,
    /// Picard iteration for the periodic solution.
    Solve,
    /// Residuals of a solution (the computed one unless --solution is given).
    Verify,
    /// Everything above in one document.
    Report,
}

#[derive(Clone, Debug, Parser)]
#[command(name = "shift-periodic", version, about = "Periodic solutions in shifts on isolated time scales")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Problem file, or a bundled name: paper_example, coupled.
    #[arg(long, global = true, default_value = "paper_example")]
    pub problem: String,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Step-norm tolerance of the Picard iteration.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    /// Seed for sampled checks and Lipschitz estimates.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of windows scanned for sup norms and the theta table.
    #[arg(long, global = true, default_value_t = DEFAULT_HORIZON)]
    pub horizon_periods: usize,
    /// Iterate with damping even without a contraction certificate.
    #[arg(long, global = true)]
    pub force_noncontractive: bool,
    /// JSON solution to verify (as written by `solve`).
    #[arg(long, global = true)]
    pub solution: Option<PathBuf>,
    /// Time scale for `axioms`/`theta` instead of the problem's, as KIND or KIND:PARAM.
    #[arg(long, global = true)]
    pub scale: Option<String>,
    /// Initial point for --scale.
    #[arg(long, global = true)]
    pub t0: Option<f64>,
    /// Period for --scale.
    #[arg(long, global = true)]
    pub period: Option<f64>,
}

/// Rendered output plus an optional failure that sets the exit status.
#[derive(Debug)]
pub struct Outcome {
    pub text: String,
    pub failure: Option<Error>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        self.failure.as_ref().map_or(0, Error::exit_code)
    }
}

struct Section {
    json: Value,
    csv: String,
    failure: Option<Error>,
}

impl Section {
    fn ok(json: Value, csv: String) -> Self {
        Section { json, csv, failure: None }
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn matrix_json(m: &nalgebra::DMatrix<f64>) -> Value {
    to_value(m.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn cmatrix_json(m: &CMatrix) -> Value {
    let part = |f: fn(&nalgebra::Complex<f64>) -> f64| {
        m.row_iter().map(|r| r.iter().map(f).collect::<Vec<_>>()).collect::<Vec<_>>()
    };
    json!({ "re": part(|c| c.re), "im": part(|c| c.im) })
}

fn header(names: impl IntoIterator<Item = String>) -> String {
    let mut s = names.into_iter().collect::<Vec<_>>().join(",");
    s.push('\n');
    s
}

fn entry_names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).flat_map(|i| (1..=n).map(move |j| format!("{prefix}{i}{j}"))).collect()
}

fn scale_from_flag(cli: &Cli) -> Result<Option<ShiftSystem>> {
    let Some(flag) = &cli.scale else { return Ok(None) };
    let (kind, arg) = match flag.split_once(':') {
        Some((k, a)) => (k, Some(a)),
        None => (flag.as_str(), None),
    };
    let key = match kind {
        "integers" => "step",
        "geometric" | "logistic" => "q",
        "power" => "base",
        _ => "",
    };
    let mut params = BTreeMap::new();
    if let Some(a) = arg {
        if key.is_empty() {
            return Err(Error::Parse(format!("scale '{kind}' takes no parameter")));
        }
        params.insert(key.to_string(), Scalar::Text(a.to_string()));
    }
    let ts = TimescaleSpec {
        kind: kind.to_string(),
        params,
        t0: cli.t0.map(Scalar::Float),
    };
    build_system(&ts, cli.period).map(Some)
}

fn axioms(sys: &ShiftSystem) -> Section {
    let report = verify_shift_axioms(sys, &default_sample(sys));
    let period = sys.period().map(|p| verify_period(sys, p, &default_period_sample(sys)));
    let mut csv = header(["check", "checked", "failures"].map(String::from));
    for c in &report.checks {
        let _ = writeln!(csv, "{},{},{}", c.name, c.checked, c.failures);
    }
    if let Some(p) = &period {
        let _ = writeln!(csv, "period,{},{}", p.checked, if p.holds { 0 } else { 1 });
    }
    let passed = report.all_passed() && period.as_ref().is_none_or(|p| p.holds);
    let failure = (!passed).then(|| {
        let names: Vec<_> = report.failed().map(|c| c.name).collect();
        Error::invariant("shift axioms", format!("failed: {}", names.join(", ")))
    });
    Section {
        json: json!({
            "scale": sys.scale().kind_name(),
            "t0": sys.t0(),
            "period": sys.period(),
            "all_passed": passed,
            "checks": to_value(&report.checks),
            "skipped_pairs": report.skipped_pairs,
            "period_check": to_value(&period),
        }),
        csv,
        failure,
    }
}

fn closed_window(p: &NeutralProblem) -> Result<Vec<f64>> {
    let mut pts = p.window();
    pts.push(p.system().shift_plus(p.period(), p.system().t0())?);
    Ok(pts)
}

fn transition(p: &NeutralProblem) -> Result<Section> {
    let n = p.dim();
    let t0 = p.system().t0();
    let mut csv = header(std::iter::once("t".to_string()).chain(entry_names("phi", n)));
    let mut rows = Vec::new();
    for t in closed_window(p)? {
        let phi = transition_matrix(p.a(), t, t0)?;
        let _ = writeln!(csv, "{},{}", num(t), phi.transpose().iter().map(|v| num(*v)).collect::<Vec<_>>().join(","));
        rows.push(json!({ "t": t, "phi": matrix_json(&phi) }));
    }
    Ok(Section::ok(json!({ "t0": t0, "period": p.period(), "rows": rows }), csv))
}

fn floquet(p: &NeutralProblem) -> Result<Section> {
    let data = floquet_decompose(p.a(), p.period())?;
    let spectral = spectral_report(&data.monodromy, SPECTRAL_TOL)?;
    let n = p.dim();
    let names = ["R_re", "R_im", "L_re", "L_im"].into_iter().flat_map(|s| entry_names(&format!("{s}_"), n));
    let mut csv = header(["t", "exponent"].map(String::from).into_iter().chain(names));
    let mut rows = Vec::new();
    for (k, &t) in data.window.iter().enumerate() {
        let x = data.exponent.exponent(t)?;
        let (r, l) = (&data.r[k], &data.l[k]);
        let parts = |m: &CMatrix| {
            let tr = m.transpose();
            let re: Vec<_> = tr.iter().map(|c| num(c.re)).collect();
            let im: Vec<_> = tr.iter().map(|c| num(c.im)).collect();
            [re.join(","), im.join(",")].join(",")
        };
        let _ = writeln!(csv, "{},{},{},{}", num(t), num(x), parts(r), parts(l));
        rows.push(json!({
            "t": t,
            "exponent": x,
            "R": cmatrix_json(r),
            "e_R": cmatrix_json(&data.e_r[k]),
            "L": cmatrix_json(l),
        }));
    }
    Ok(Section::ok(
        json!({
            "period": data.period,
            "t0": data.t0,
            "monodromy": matrix_json(&data.monodromy),
            "spectrum": spectral.spectrum,
            "distance_to_one": spectral.distance_to_one,
            "critical": spectral.critical,
            "normalizer": data.exponent.normalizer(),
            "log_monodromy": cmatrix_json(data.exponent.log_monodromy()),
            "monodromy_residual": data.monodromy_residual,
            "rows": rows,
        }),
        csv,
    ))
}

fn theta_table(sys: &ShiftSystem, period: f64, horizon: usize) -> Result<Section> {
    let end = sys.iterate_shift(period, sys.t0(), horizon as i64)?;
    let pts = sys.scale().points_in(sys.t0(), end)?;
    let mut csv = header(["t", "m", "sum", "g", "in_orbit", "theta"].map(String::from));
    let mut rows = Vec::new();
    for t in pts {
        let tp = theta_parts(sys, period, t)?;
        let _ = writeln!(csv, "{},{},{},{},{},{}", num(t), tp.m, num(tp.sum), num(tp.g), tp.in_orbit, num(tp.theta));
        rows.push(to_value(tp));
    }
    Ok(Section::ok(json!({ "t0": sys.t0(), "period": period, "rows": rows }), csv))
}

fn condition_options(cli: &Cli, lp: &LoadedProblem) -> ConditionOptions {
    let d = ConditionOptions::default();
    ConditionOptions {
        horizon: cli.horizon_periods,
        j: lp.solver.j.unwrap_or(d.j),
        samples: DEFAULT_LIPSCHITZ_SAMPLES,
        seed: cli.seed.unwrap_or(d.seed),
    }
}

fn check_section(p: &NeutralProblem, rep: &ConditionReport) -> Section {
    let mut csv = header(["quantity", "value"].map(String::from));
    let v = to_value(rep);
    if let Value::Object(map) = &v {
        for (k, val) in map {
            let s = match val {
                Value::Number(x) => num(x.as_f64().unwrap_or(f64::NAN)),
                Value::Null => "inf".into(),
                Value::Array(a) => a.iter().map(|x| num(x.as_f64().unwrap_or(f64::NAN))).collect::<Vec<_>>().join(";"),
                other => other.to_string(),
            };
            let _ = writeln!(csv, "{k},{s}");
        }
    }
    Section::ok(json!({ "conditions": v, "assumptions": to_value(p.assumptions()) }), csv)
}

fn solution_section(x: &PeriodicVectorFunction) -> (Value, String) {
    let n = x.values().first().map_or(0, |v| v.len());
    let mut csv = header(std::iter::once("t".to_string()).chain((1..=n).map(|i| format!("x{i}"))));
    let mut rows = Vec::new();
    for (t, v) in x.window_points().into_iter().zip(x.values()) {
        let _ = writeln!(csv, "{},{}", num(t), v.iter().map(|c| num(*c)).collect::<Vec<_>>().join(","));
        rows.push(json!({ "t": t, "x": v.as_slice() }));
    }
    (Value::Array(rows), csv)
}

fn picard(cli: &Cli, lp: &LoadedProblem, rep: &ConditionReport) -> Result<PicardOutcome> {
    let d = PicardOptions::default();
    let opts = PicardOptions {
        tol: cli.tol.or(lp.solver.tol).unwrap_or(d.tol),
        max_iter: cli.max_iter.or(lp.solver.max_iter).unwrap_or(d.max_iter),
        force: cli.force_noncontractive,
    };
    solve_picard(&lp.problem, &lp.problem.zero_state(), rep, &opts)
}

fn solve(p: &NeutralProblem, out: &PicardOutcome) -> Result<Section> {
    let res = verify_solution(p, &out.solution)?;
    let (sol, mut csv) = solution_section(&out.solution);
    let d = &out.diagnostics;
    let _ = write!(
        csv,
        "\niterations,max_ratio,contraction_constant,ratios_within_bound,integral_residual,differential_residual,periodicity_residual\n{},{},{},{},{},{},{}\n",
        d.iterations,
        num(d.max_ratio),
        num(d.contraction_constant),
        d.ratios_within_bound,
        num(res.integral),
        num(res.differential),
        num(res.periodicity)
    );
    Ok(Section::ok(
        json!({ "solution": sol, "diagnostics": to_value(d), "residuals": to_value(res) }),
        csv,
    ))
}

fn read_solution(p: &NeutralProblem, path: &PathBuf) -> Result<PeriodicVectorFunction> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("solution file: {e}")))?;
    let rows = doc.get("solution").unwrap_or(&doc);
    #[derive(serde::Deserialize)]
    struct Row {
        t: f64,
        x: Vec<f64>,
    }
    let rows: Vec<Row> =
        serde_json::from_value(rows.clone()).map_err(|e| Error::Parse(format!("solution file: {e}")))?;
    let window = p.window();
    if rows.len() != window.len() {
        return Err(Error::Parse(format!(
            "solution file has {} rows, the window has {} points",
            rows.len(),
            window.len()
        )));
    }
    let mut values = Vec::with_capacity(rows.len());
    for (row, &t) in rows.iter().zip(&window) {
        if row.t != t || row.x.len() != p.dim() {
            return Err(Error::Parse(format!("solution row at t = {} does not match window point {t}", row.t)));
        }
        values.push(nalgebra::DVector::from_vec(row.x.clone()));
    }
    PeriodicVectorFunction::from_values(p.system(), p.period(), values)
}

fn verify(p: &NeutralProblem, x: &PeriodicVectorFunction) -> Result<Section> {
    let res = verify_solution(p, x)?;
    let csv = format!(
        "integral,differential,periodicity\n{},{},{}\n",
        num(res.integral),
        num(res.differential),
        num(res.periodicity)
    );
    Ok(Section::ok(to_value(res), csv))
}

fn dispatch(cli: &Cli) -> Result<Section> {
    if let (Command::Axioms | Command::Theta, Some(sys)) = (cli.command, scale_from_flag(cli)?) {
        return match cli.command {
            Command::Axioms => Ok(axioms(&sys)),
            _ => {
                let period = sys
                    .period()
                    .ok_or_else(|| Error::invariant("scale period", "this scale needs --period"))?;
                theta_table(&sys, period, cli.horizon_periods)
            }
        };
    }
    let lp = resolve_problem(&cli.problem)?;
    let p = &lp.problem;
    match cli.command {
        Command::Axioms => Ok(axioms(p.system())),
        Command::Transition => transition(p),
        Command::Floquet => floquet(p),
        Command::Theta => theta_table(p.system(), p.period(), cli.horizon_periods),
        Command::Check => Ok(check_section(p, &check_conditions(p, None, &condition_options(cli, &lp))?)),
        Command::Solve => {
            let rep = check_conditions(p, None, &condition_options(cli, &lp))?;
            solve(p, &picard(cli, &lp, &rep)?)
        }
        Command::Verify => {
            let x = match &cli.solution {
                Some(path) => read_solution(p, path)?,
                None => {
                    let rep = check_conditions(p, None, &condition_options(cli, &lp))?;
                    picard(cli, &lp, &rep)?.solution
                }
            };
            verify(p, &x)
        }
        Command::Report => {
            let rep = check_conditions(p, None, &condition_options(cli, &lp))?;
            let parts = vec![
                ("axioms", axioms(p.system())),
                ("transition", transition(p)?),
                ("floquet", floquet(p)?),
                ("theta", theta_table(p.system(), p.period(), cli.horizon_periods)?),
                ("check", check_section(p, &rep)),
                ("solve", solve(p, &picard(cli, &lp, &rep)?)?),
            ];
            let mut json = serde_json::Map::new();
            let mut csv = String::new();
            let mut failure = None;
            for (name, s) in parts {
                let _ = write!(csv, "# {name}\n{}\n", s.csv);
                json.insert(name.to_string(), s.json);
                failure = failure.or(s.failure);
            }
            Ok(Section { json: Value::Object(json), csv, failure })
        }
    }
}

/// Runs one command and renders its output.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let s = dispatch(cli)?;
    let text = match cli.format {
        Format::Json => {
            let mut t = serde_json::to_string_pretty(&s.json).expect("json values serialize");
            t.push('\n');
            t
        }
        Format::Csv => s.csv,
    };
    Ok(Outcome { text, failure: s.failure })
}
