//! TOML problem files.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use super::expr::{parse_expression, Env, Expr, Scope};
use crate::error::{Error, Result};
use crate::floquet::MatrixFunction;
use crate::solver::{GFn, NeutralProblem, QFn};
use crate::timescale::{IsolatedTimeScale, ShiftSystem};

/// The worked example shipped with the crate.
pub const PAPER_EXAMPLE: &str = include_str!("../../problems/paper_example.toml");
/// A coupled system with a nonconstant solution.
pub const COUPLED_EXAMPLE: &str = include_str!("../../problems/coupled.toml");

/// A number or a constant expression such as `"1/8"`.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Scalar {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Scalar {
    fn to_expr(&self, what: &str) -> Result<Expr> {
        match self {
            Scalar::Int(v) => Ok(Expr::Num(*v as f64)),
            Scalar::Float(v) => Ok(Expr::Num(*v)),
            Scalar::Text(s) => parse_expression(s).map_err(|e| Error::Parse(format!("{what}: {e}"))),
        }
    }

    pub fn value(&self, what: &str) -> Result<f64> {
        self.to_expr(what)?
            .eval_constant()
            .map_err(|e| Error::Parse(format!("{what}: {e}")))
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimescaleSpec {
    pub kind: String,
    #[serde(default)]
    pub params: BTreeMap<String, Scalar>,
    pub t0: Option<Scalar>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LipschitzSpec {
    #[serde(rename = "E1")]
    pub e1: Scalar,
    #[serde(rename = "E2")]
    pub e2: Scalar,
    #[serde(rename = "E3")]
    pub e3: Scalar,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub tol: Option<Scalar>,
    pub max_iter: Option<usize>,
    #[serde(rename = "J")]
    pub j: Option<Scalar>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub timescale: TimescaleSpec,
    /// Scale period `P`; the kind's default when absent.
    pub period: Option<Scalar>,
    /// Function period `T`.
    pub function_period: Scalar,
    pub delay: Scalar,
    pub dimension: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<Scalar>>,
    #[serde(rename = "Q")]
    pub q: Vec<Scalar>,
    #[serde(rename = "G")]
    pub g: Vec<Scalar>,
    pub lipschitz: Option<LipschitzSpec>,
    #[serde(default)]
    pub solver: SolverSpec,
}

/// Solver settings read from the file.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSettings {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub j: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct LoadedProblem {
    pub problem: NeutralProblem,
    pub spec: ProblemSpec,
    pub solver: SolverSettings,
}

pub fn parse_spec(text: &str) -> Result<ProblemSpec> {
    toml::from_str(text).map_err(|e| Error::Parse(format!("problem file: {e}")))
}

fn param(ts: &TimescaleSpec, name: &str, default: Option<f64>) -> Result<f64> {
    match ts.params.get(name) {
        Some(v) => v.value(&format!("timescale.params.{name}")),
        None => default.ok_or_else(|| Error::Parse(format!("timescale kind '{}' needs params.{name}", ts.kind))),
    }
}

/// Builds the shift system named by a `[timescale]` table.
pub fn build_system(ts: &TimescaleSpec, period: Option<f64>) -> Result<ShiftSystem> {
    let known: &[&str] = match ts.kind.as_str() {
        "integers" => &["step", "offset"],
        "geometric" => &["q"],
        "power" => &["base"],
        "logistic" => &["q"],
        "square_root" | "signed_squares" => &[],
        other => {
            return Err(Error::Parse(format!(
                "unknown timescale kind '{other}' (expected integers, geometric, power, square_root, signed_squares or logistic)"
            )))
        }
    };
    if let Some(extra) = ts.params.keys().find(|k| !known.contains(&k.as_str())) {
        return Err(Error::Parse(format!("timescale kind '{}' has no parameter '{extra}'", ts.kind)));
    }
    let t0 = ts.t0.as_ref().map(|v| v.value("timescale.t0")).transpose()?;
    let (scale, t0, default_p) = match ts.kind.as_str() {
        "integers" => {
            let step = param(ts, "step", Some(1.0))?;
            let offset = param(ts, "offset", Some(0.0))?;
            let t0 = t0.unwrap_or(offset);
            (IsolatedTimeScale::IntegerLattice { step, offset }, t0, Some(t0 + step))
        }
        "geometric" => {
            let q = param(ts, "q", None)?;
            (IsolatedTimeScale::Geometric { q }, t0.unwrap_or(1.0), Some(q))
        }
        "power" => {
            let base = param(ts, "base", None)?;
            (IsolatedTimeScale::Power { base }, t0.unwrap_or(1.0), Some(base))
        }
        "square_root" => (IsolatedTimeScale::SquareRoot, t0.unwrap_or(0.0), None),
        "signed_squares" => (IsolatedTimeScale::SignedSquares, t0.unwrap_or(0.0), Some(1.0)),
        _ => {
            let sys = ShiftSystem::logistic(param(ts, "q", None)?)?;
            let fixed = |given: Option<f64>, have: Option<f64>, what: &str| match (given, have) {
                (Some(g), Some(h)) if g != h => Err(Error::invariant(
                    "time scale",
                    format!("the logistic scale fixes {what} = {h}, got {g}"),
                )),
                _ => Ok(()),
            };
            fixed(t0, Some(sys.t0()), "t0")?;
            fixed(period, sys.period(), "the period")?;
            return Ok(sys);
        }
    };
    ShiftSystem::new(scale, t0, period.or(default_p))
}

fn compile(src: &Scalar, what: &str, scope: Scope) -> Result<Expr> {
    let e = src.to_expr(what)?;
    e.check_scope(&scope).map_err(|err| Error::Parse(format!("{what}: {err}")))?;
    Ok(e)
}

fn eval_all(exprs: &[Expr], env: &Env) -> Result<DVector<f64>> {
    let vals = exprs.iter().map(|e| e.eval(env)).collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(DVector::from_vec(vals))
}

/// Builds the problem and runs its construction checks.
pub fn build_problem(spec: ProblemSpec) -> Result<LoadedProblem> {
    let n = spec.dimension;
    if n == 0 {
        return Err(Error::Parse("dimension must be positive".into()));
    }
    if spec.a.len() != n || spec.a.iter().any(|row| row.len() != n) {
        return Err(Error::Parse(format!("A must be a {n}x{n} array of rows")));
    }
    if spec.q.len() != n || spec.g.len() != n {
        return Err(Error::Parse(format!("Q and G must have {n} components")));
    }
    let period = spec.period.as_ref().map(|v| v.value("period")).transpose()?;
    let sys = build_system(&spec.timescale, period)?;
    let big_t = spec.function_period.value("function_period")?;
    let delay = spec.delay.value("delay")?;

    let a_scope = Scope { t: true, x: false, u: false, dim: n };
    let q_scope = Scope { t: true, x: false, u: true, dim: n };
    let g_scope = Scope { t: true, x: true, u: true, dim: n };
    let mut a_exprs = Vec::with_capacity(n * n);
    for (i, row) in spec.a.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            a_exprs.push(compile(v, &format!("A[{}][{}]", i + 1, j + 1), a_scope)?);
        }
    }
    let q_exprs = spec
        .q
        .iter()
        .enumerate()
        .map(|(i, v)| compile(v, &format!("Q[{}]", i + 1), q_scope))
        .collect::<Result<Vec<_>>>()?;
    let g_exprs = spec
        .g
        .iter()
        .enumerate()
        .map(|(i, v)| compile(v, &format!("G[{}]", i + 1), g_scope))
        .collect::<Result<Vec<_>>>()?;

    let a = MatrixFunction::fallible(&sys, n, move |t| {
        let env = Env { t, x: &[], u: &[] };
        let vals = eval_all(&a_exprs, &env)?;
        Ok(DMatrix::from_row_slice(n, n, vals.as_slice()))
    })
    .with_delta_period(big_t);
    let q: QFn = Arc::new(move |t, u| eval_all(&q_exprs, &Env { t, x: &[], u: u.as_slice() }));
    let g: GFn = Arc::new(move |t, x, u| eval_all(&g_exprs, &Env { t, x: x.as_slice(), u: u.as_slice() }));
    let mut problem = NeutralProblem::new(a, q, g, delay, big_t)?;
    if let Some(l) = &spec.lipschitz {
        problem = problem.with_lipschitz(l.e1.value("lipschitz.E1")?, l.e2.value("lipschitz.E2")?, l.e3.value("lipschitz.E3")?);
    }
    let solver = SolverSettings {
        tol: spec.solver.tol.as_ref().map(|v| v.value("solver.tol")).transpose()?,
        max_iter: spec.solver.max_iter,
        j: spec.solver.j.as_ref().map(|v| v.value("solver.J")).transpose()?,
    };
    Ok(LoadedProblem { problem, spec, solver })
}

pub fn load_problem_str(text: &str) -> Result<LoadedProblem> {
    build_problem(parse_spec(text)?)
}

pub fn load_problem(path: impl AsRef<Path>) -> Result<LoadedProblem> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    load_problem_str(&text)
}

/// Resolves a bundled problem name or a path.
pub fn resolve_problem(name: &str) -> Result<LoadedProblem> {
    match name {
        "paper_example" => load_problem_str(PAPER_EXAMPLE),
        "coupled" => load_problem_str(COUPLED_EXAMPLE),
        path => load_problem(path),
    }
}
