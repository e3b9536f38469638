//! Batch front-end: a JSON run config in, a JSON or CSV report out.
//!
//! ```json
//! {"command": "curvature", "seed": 7,
//!  "inputs": {"chain": {"graph": {"complete": 2}}, "mode": "upsilon"},
//!  "output": {"path": "report.json", "format": "json"}}
//! ```
//!
//! Exit status: 0 on success, 2 when the run found a violated inequality
//! (or, for `cd-counterexample`, certified one), 1 on errors.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::curvature::{
    classical_optimal_kappa, estimate_upsilon_kappa, fit_cd_function_with, verify_cd_upsilon,
    Budget, CurvatureMode, EnvelopeOptions,
};
use crate::error::{Error, Result};
use crate::frac::{
    bump_grid, estimate_cly, frac_kernel, harnack_fit, random_frac_pairs,
    search_bump_counterexample, verify_cd_counterexample, CdClassification, CounterexampleOptions,
    FracGrid, GridFunction, HarnackSource, TailModel,
};
use crate::lattice::{
    build_lattice_kernel, harnack_check, initial_datum, li_yau_check, random_harnack_pairs,
    InitialDatum, LatticeEnvelope, LatticeKernel,
};
use crate::markov::{
    chain_from_path, standard_graph, tensor_product, Chain, ProbabilityDensity, StandardGraph,
};
use crate::relaxation::{solve_relaxation, CDFunctionSpec};
use crate::semigroup::{
    check_decay_and_gradient_bound, check_entropy_identities, estimate_mlsi, evolve,
};

pub const COMMANDS: [&str; 10] = [
    "curvature",
    "mlsi",
    "evolve",
    "relaxation",
    "lattice-liyau",
    "lattice-harnack",
    "frac-kernel",
    "frac-cly",
    "frac-harnack",
    "cd-counterexample",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainInput {
    Graph(StandardGraph),
    File(PathBuf),
    Product(Box<ChainInput>, Box<ChainInput>),
}

impl ChainInput {
    fn build(&self) -> Result<Chain> {
        match self {
            ChainInput::Graph(g) => standard_graph(*g),
            ChainInput::File(p) => chain_from_path(p),
            ChainInput::Product(a, b) => Ok(tensor_product(&a.build()?, &b.build()?)),
        }
    }

    fn files(&self, out: &mut Vec<PathBuf>) {
        match self {
            ChainInput::Graph(_) => {}
            ChainInput::File(p) => out.push(p.clone()),
            ChainInput::Product(a, b) => {
                a.files(out);
                b.files(out);
            }
        }
    }
}

fn default_budget() -> Budget {
    Budget::default()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureInputs {
    pub chain: ChainInput,
    pub mode: CurvatureMode,
    /// Dimension for the classical mode; omitted means `d = ∞`.
    #[serde(default)]
    pub d: Option<f64>,
    /// With `verify`, the κ to test.
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub verify: bool,
    #[serde(default)]
    pub cd_function: Option<CDFunctionSpec>,
    #[serde(default = "default_budget")]
    pub budget: Budget,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlsiInputs {
    pub chain: ChainInput,
    #[serde(default = "default_mlsi_samples")]
    pub samples: usize,
}

fn default_mlsi_samples() -> usize {
    2000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveInputs {
    pub chain: ChainInput,
    /// Initial values; normalised to a density.
    pub f0: Vec<f64>,
    pub t_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    /// When given, the entropy decay and gradient bounds are checked with this κ.
    #[serde(default)]
    pub kappa: Option<f64>,
}

fn default_points() -> usize {
    101
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxationInputs {
    pub cd_function: CDFunctionSpec,
    pub t_min: f64,
    pub t_max: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CdFunctionChoice {
    Fit { samples: usize },
    Spec(CDFunctionSpec),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeCommon {
    pub beta: f64,
    #[serde(default = "one")]
    pub c: f64,
    #[serde(rename = "J")]
    pub j_max: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub u0: InitialDatum,
    #[serde(rename = "F")]
    pub cd_function: CdFunctionChoice,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeRange {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeLiYauInputs {
    #[serde(flatten)]
    pub lattice: LatticeCommon,
    /// Log-spaced times.
    pub times: TimeRange,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeHarnackInputs {
    #[serde(flatten)]
    pub lattice: LatticeCommon,
    pub t_lo: f64,
    pub t_hi: f64,
    pub pairs: usize,
    #[serde(default)]
    pub with_zero: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FracKernelInputs {
    pub beta: f64,
    pub t: f64,
    #[serde(rename = "X")]
    pub x_half_width: f64,
    pub h: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FracClyInputs {
    pub beta: f64,
    pub times: Vec<f64>,
    #[serde(default)]
    pub grid: FracGrid,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FracHarnackInputs {
    pub beta: f64,
    pub c_ly: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub x_max: f64,
    pub pairs: usize,
    pub source: HarnackSource,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CounterexampleFunction {
    Bump {
        center: f64,
        width: f64,
        height: f64,
        lo: f64,
        hi: f64,
        h: f64,
    },
    /// Grid values, zero beyond the grid.
    Values { x0: f64, h: f64, values: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BumpSearch {
    pub radius: f64,
    pub budget: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleInputs {
    pub beta: f64,
    pub kappa: f64,
    #[serde(rename = "N")]
    pub n_dim: f64,
    pub u: CounterexampleFunction,
    pub xs: Vec<f64>,
    #[serde(default)]
    pub options: CounterexampleOptions,
    /// Optional diagnostic search; needs a seed.
    #[serde(default)]
    pub search: Option<BumpSearch>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", content = "inputs", rename_all = "kebab-case")]
pub enum Command {
    Curvature(CurvatureInputs),
    Mlsi(MlsiInputs),
    Evolve(EvolveInputs),
    Relaxation(RelaxationInputs),
    LatticeLiyau(LatticeLiYauInputs),
    LatticeHarnack(LatticeHarnackInputs),
    FracKernel(FracKernelInputs),
    FracCly(FracClyInputs),
    FracHarnack(FracHarnackInputs),
    CdCounterexample(CounterexampleInputs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Curvature(_) => "curvature",
            Command::Mlsi(_) => "mlsi",
            Command::Evolve(_) => "evolve",
            Command::Relaxation(_) => "relaxation",
            Command::LatticeLiyau(_) => "lattice-liyau",
            Command::LatticeHarnack(_) => "lattice-harnack",
            Command::FracKernel(_) => "frac-kernel",
            Command::FracCly(_) => "frac-cly",
            Command::FracHarnack(_) => "frac-harnack",
            Command::CdCounterexample(_) => "cd-counterexample",
        }
    }

    pub fn is_stochastic(&self) -> bool {
        let lattice_random = |l: &LatticeCommon| {
            matches!(l.u0, InitialDatum::Random { .. })
                || matches!(l.cd_function, CdFunctionChoice::Fit { .. })
        };
        match self {
            Command::Curvature(c) => c.mode == CurvatureMode::Upsilon || c.verify,
            Command::Mlsi(_) | Command::LatticeHarnack(_) | Command::FracHarnack(_) => true,
            Command::LatticeLiyau(l) => lattice_random(&l.lattice),
            Command::CdCounterexample(c) => c.search.is_some(),
            _ => false,
        }
    }

    fn files(&self) -> Vec<PathBuf> {
        let mut out = Vec::new();
        match self {
            Command::Curvature(c) => c.chain.files(&mut out),
            Command::Mlsi(c) => c.chain.files(&mut out),
            Command::Evolve(c) => c.chain.files(&mut out),
            _ => {}
        }
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub command: Command,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Option<OutputSpec>,
}

/// Parses and checks a config, collecting every problem found.
pub fn parse_config(text: &str) -> std::result::Result<RunConfig, Vec<String>> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| vec![format!("malformed JSON: {e}")])?;
    let mut problems = Vec::new();
    let Some(obj) = value.as_object() else {
        return Err(vec!["config must be a JSON object".into()]);
    };
    for key in obj.keys() {
        if !["command", "inputs", "seed", "output"].contains(&key.as_str()) {
            problems.push(format!("field `{key}`: unknown top-level field"));
        }
    }
    match obj.get("command").and_then(Value::as_str) {
        None => problems.push("field `command`: missing or not a string".into()),
        Some(c) if !COMMANDS.contains(&c) => problems.push(format!(
            "field `command`: unknown command \"{c}\" (expected one of {})",
            COMMANDS.join(", ")
        )),
        Some(_) => {}
    }
    if let Some(seed) = obj.get("seed") {
        if !seed.is_u64() {
            problems.push("field `seed`: must be a non-negative integer".into());
        }
    }
    if !problems.is_empty() {
        return Err(problems);
    }
    let mut value = value;
    if value.get("inputs").is_none() {
        value["inputs"] = json!({});
    }
    let cfg: RunConfig = match serde_json::from_value(value) {
        Ok(c) => c,
        Err(e) => return Err(vec![format!("field `inputs`: {e}")]),
    };
    if cfg.command.is_stochastic() && cfg.seed.is_none() {
        problems.push(format!(
            "field `seed`: required for stochastic command \"{}\"",
            cfg.command.name()
        ));
    }
    for f in cfg.command.files() {
        if !f.exists() {
            problems.push(format!(
                "field `inputs.chain`: file {} does not exist",
                f.display()
            ));
        }
    }
    if problems.is_empty() {
        Ok(cfg)
    } else {
        Err(problems)
    }
}

pub fn load_config(path: &Path) -> std::result::Result<RunConfig, Vec<String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| vec![format!("cannot read {}: {e}", path.display())])?;
    parse_config(&text)
}

/// Diagnostics for `curvlab validate`; `["ok"]` when the config is valid.
pub fn validate(path: &Path) -> Vec<String> {
    match load_config(path) {
        Ok(_) => vec!["ok".into()],
        Err(p) => p,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Ok,
    Violation,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Ok => 0,
            Outcome::Violation => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub outcome: Outcome,
    pub report: Value,
    pub csv: String,
}

impl RunResult {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                serde_json::to_string_pretty(&self.report).expect("report serializes") + "\n"
            }
            Format::Csv => self.csv.clone(),
        }
    }
}

fn lattice_setup(
    l: &LatticeCommon,
    seed: u64,
) -> Result<(LatticeKernel, Vec<f64>, CDFunctionSpec, Value)> {
    let kern = build_lattice_kernel(l.beta, l.c, l.j_max, l.m, None)?.0;
    let u0 = initial_datum(&kern, &l.u0, seed)?;
    let (spec, fit) = match &l.cd_function {
        CdFunctionChoice::Spec(s) => (s.clone(), Value::Null),
        CdFunctionChoice::Fit { samples } => {
            let opts = EnvelopeOptions {
                samples: *samples,
                ..Default::default()
            };
            let fit = fit_cd_function_with(&LatticeEnvelope::new(&kern), &opts, seed)?;
            (
                fit.spec.clone(),
                json!({"c": fit.c, "gamma_hat": fit.gamma_hat}),
            )
        }
    };
    Ok((kern, u0, spec, fit))
}

fn log_times(r: &TimeRange) -> Result<Vec<f64>> {
    if !(r.lo > 0.0 && r.hi > r.lo) || r.count < 2 {
        return Err(Error::Config(
            "times need 0 < lo < hi and count >= 2".into(),
        ));
    }
    Ok(crate::numeric::logspace(r.lo, r.hi, r.count))
}

fn csv_rows(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = format!("{header}\n");
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

fn num(v: f64) -> String {
    format!("{v:.17e}")
}

fn execute(cmd: &Command, seed: u64) -> Result<(Outcome, Value, String)> {
    Ok(match cmd {
        Command::Curvature(c) => {
            let chain = c.chain.build()?;
            if c.verify {
                let kappa = c
                    .kappa
                    .ok_or_else(|| Error::Config("verify needs `kappa`".into()))?;
                let rep = verify_cd_upsilon(&chain, kappa, c.cd_function.as_ref(), c.budget, seed)?;
                let outcome = if rep.violation_found {
                    Outcome::Violation
                } else {
                    Outcome::Ok
                };
                let csv = csv_rows(
                    "kappa,violation_found,min_normalized_slack",
                    [vec![
                        num(kappa),
                        rep.violation_found.to_string(),
                        num(rep.min_normalized_slack),
                    ]],
                );
                (outcome, serde_json::to_value(&rep)?, csv)
            } else {
                let rep = match c.mode {
                    CurvatureMode::Classical => {
                        classical_optimal_kappa(&chain, c.d.unwrap_or(f64::INFINITY))?
                    }
                    CurvatureMode::Upsilon => estimate_upsilon_kappa(&chain, c.budget, seed)?,
                };
                let csv = csv_rows(
                    "state,kappa",
                    rep.per_state
                        .iter()
                        .enumerate()
                        .map(|(i, k)| vec![i.to_string(), num(*k)]),
                );
                (Outcome::Ok, serde_json::to_value(&rep)?, csv)
            }
        }
        Command::Mlsi(m) => {
            let rep = estimate_mlsi(&m.chain.build()?, m.samples, seed)?;
            let csv = csv_rows("kappa_mlsi", [vec![num(rep.kappa_mlsi)]]);
            (Outcome::Ok, serde_json::to_value(&rep)?, csv)
        }
        Command::Evolve(e) => {
            let chain = e.chain.build()?;
            if !(e.t_max > 0.0) || e.points < 5 {
                return Err(Error::Config(
                    "evolve needs t_max > 0 and at least 5 points".into(),
                ));
            }
            let times = crate::numeric::linspace(0.0, e.t_max, e.points);
            let f0 = ProbabilityDensity::normalized(&chain, e.f0.clone())?;
            let trace = evolve(&chain, &f0, &times)?;
            let identities = check_entropy_identities(&chain, &trace)?;
            let decay = match e.kappa {
                Some(k) => Some(check_decay_and_gradient_bound(
                    &chain,
                    k,
                    f0.values(),
                    &times,
                )?),
                None => None,
            };
            let violated = decay
                .as_ref()
                .is_some_and(|d| !d.entropy_bound_holds || !d.gradient_bound_holds);
            let csv = trace.to_csv();
            let report = json!({"trace": trace, "identities": identities, "decay": decay});
            (
                if violated {
                    Outcome::Violation
                } else {
                    Outcome::Ok
                },
                report,
                csv,
            )
        }
        Command::Relaxation(r) => {
            let p = solve_relaxation(&r.cd_function, r.t_min, r.t_max, r.tol)?;
            let csv = p.to_csv();
            let report = json!({
                "metadata": p.metadata(),
                "log_convex": p.min_log_second_difference() >= -1e-9,
                "strictly_decreasing": p.is_strictly_decreasing(),
                "profile": p,
            });
            (Outcome::Ok, report, csv)
        }
        Command::LatticeLiyau(l) => {
            let (kern, u0, spec, fit) = lattice_setup(&l.lattice, seed)?;
            let times = log_times(&l.times)?;
            let rep = li_yau_check(&kern, &u0, &spec, &times)?;
            let outcome = if rep.violations > 0 {
                Outcome::Violation
            } else {
                Outcome::Ok
            };
            let csv = rep.to_csv();
            (
                outcome,
                json!({"fit": fit, "cd_function": spec, "li_yau": rep}),
                csv,
            )
        }
        Command::LatticeHarnack(l) => {
            let (kern, u0, spec, fit) = lattice_setup(&l.lattice, seed)?;
            let pairs = random_harnack_pairs(&kern, l.t_lo, l.t_hi, l.pairs, l.with_zero, seed);
            let rep = harnack_check(&kern, &u0, &spec, &pairs)?;
            let outcome = if rep.all_hold {
                Outcome::Ok
            } else {
                Outcome::Violation
            };
            let csv = csv_rows(
                "t1,x1,t2,x2,residual",
                rep.residuals.iter().map(|r| {
                    vec![
                        num(r.pair.t1),
                        r.pair.x1.to_string(),
                        num(r.pair.t2),
                        r.pair.x2.to_string(),
                        num(r.residual),
                    ]
                }),
            );
            (
                outcome,
                json!({"fit": fit, "cd_function": spec, "harnack": rep}),
                csv,
            )
        }
        Command::FracKernel(k) => {
            let g = frac_kernel(k.beta, k.t, k.x_half_width, k.h)?;
            let csv = g.to_csv();
            (Outcome::Ok, serde_json::to_value(&g)?, csv)
        }
        Command::FracCly(c) => {
            let rep = estimate_cly(c.beta, &c.times, c.grid)?;
            let csv = csv_rows(
                "t,S,S_error,T,DH",
                rep.rows.iter().map(|r| {
                    vec![
                        num(r.t),
                        num(r.s),
                        num(r.s_error),
                        num(r.t_ratio),
                        num(r.dh),
                    ]
                }),
            );
            let report = json!({
                "beta": rep.beta, "t": c.times, "X": rep.grid.half_width, "h": rep.grid.h,
                "C_LY_hat": rep.c_ly,
                "S_per_t": rep.rows.iter().map(|r| r.s).collect::<Vec<_>>(),
                "T_per_t": rep.rows.iter().map(|r| r.t_ratio).collect::<Vec<_>>(),
                "DH_per_t": rep.rows.iter().map(|r| r.dh).collect::<Vec<_>>(),
                "errors": rep.rows.iter().map(|r| r.s_error).collect::<Vec<_>>(),
            });
            (Outcome::Ok, report, csv)
        }
        Command::FracHarnack(h) => {
            let pairs = random_frac_pairs(h.t_lo, h.t_hi, h.x_max, h.pairs, seed);
            let rep = harnack_fit(h.beta, h.c_ly, &pairs, &h.source)?;
            let csv = csv_rows(
                "t1,x1,t2,x2,log_ratio,c_required",
                rep.rows.iter().map(|r| {
                    vec![
                        num(r.pair.t1),
                        num(r.pair.x1),
                        num(r.pair.t2),
                        num(r.pair.x2),
                        num(r.log_ratio),
                        num(r.c_required),
                    ]
                }),
            );
            (Outcome::Ok, serde_json::to_value(&rep)?, csv)
        }
        Command::CdCounterexample(c) => {
            let u = match &c.u {
                CounterexampleFunction::Bump {
                    center,
                    width,
                    height,
                    lo,
                    hi,
                    h,
                } => bump_grid(*center, *width, *height, *lo, *hi, *h),
                CounterexampleFunction::Values { x0, h, values } => GridFunction::new(
                    *x0,
                    *h,
                    values.clone(),
                    Some(TailModel::Constant {
                        left: 0.0,
                        right: 0.0,
                    }),
                ),
            };
            let rep = verify_cd_counterexample(c.beta, &u, c.kappa, c.n_dim, &c.xs, c.options)?;
            let search = match &c.search {
                Some(s) => Some(search_bump_counterexample(
                    c.beta, c.kappa, c.n_dim, s.radius, s.budget, seed,
                )?),
                None => None,
            };
            let outcome = if rep.classification == CdClassification::Certificate {
                Outcome::Violation
            } else {
                Outcome::Ok
            };
            let csv = csv_rows(
                "x,gamma,gamma2,gamma2_error,Lu,upper,classification",
                rep.points.iter().map(|p| {
                    vec![
                        num(p.x),
                        num(p.gamma),
                        num(p.gamma2),
                        num(p.gamma2_error),
                        num(p.lu),
                        num(p.upper),
                        serde_json::to_value(p.classification)
                            .unwrap()
                            .as_str()
                            .unwrap_or("")
                            .to_string(),
                    ]
                }),
            );
            (outcome, json!({"verification": rep, "search": search}), csv)
        }
    })
}

/// Runs a parsed config. The report embeds the resolved config.
pub fn run(config: &RunConfig) -> Result<RunResult> {
    if config.command.is_stochastic() && config.seed.is_none() {
        return Err(Error::Config(format!(
            "field `seed`: required for stochastic command \"{}\"",
            config.command.name()
        )));
    }
    let seed = config.seed.unwrap_or(0);
    let (outcome, result, csv) = execute(&config.command, seed)
        .map_err(|e| Error::Config(format!("{} failed: {e}", config.command.name())))?;
    let report = json!({
        "config": config,
        "outcome": outcome,
        "result": result,
    });
    Ok(RunResult {
        outcome,
        report,
        csv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_names_the_field() {
        let e = parse_config(r#"{"command": "bogus"}"#).unwrap_err();
        assert!(e[0].contains("`command`") && e[0].contains("bogus"));
        let e =
            parse_config(r#"{"command": "mlsi", "inputs": {"chain": {"graph": {"complete": 2}}}}"#)
                .unwrap_err();
        assert!(e[0].contains("`seed`"));
        let e = parse_config(
            r#"{"command": "mlsi", "seed": 1, "inputs": {"chain": {"file": "/nonexistent.json"}}}"#,
        )
        .unwrap_err();
        assert!(e[0].contains("does not exist"));
        assert!(parse_config("{").is_err());
        let ok = parse_config(
            r#"{"command": "frac-kernel", "inputs": {"beta": 1, "t": 1, "X": 2, "h": 0.5}}"#,
        );
        assert!(ok.is_ok());
    }

    #[test]
    fn curvature_examples_and_exit_codes() {
        let cfg = parse_config(
            r#"{"command": "curvature", "seed": 3,
                "inputs": {"chain": {"graph": {"complete": 2}}, "mode": "upsilon", "budget": {"samples": 2000, "descents": 4}}}"#,
        )
        .unwrap();
        let r = run(&cfg).unwrap();
        assert_eq!(r.outcome.exit_code(), 0);
        let k = r.report["result"]["global_kappa"].as_f64().unwrap();
        assert!((k - 2.0).abs() < 1e-2, "{k}");
        let again = run(&cfg).unwrap();
        assert_eq!(r.render(Format::Json), again.render(Format::Json));
        assert_eq!(r.report["config"]["seed"], 3);

        let cfg = parse_config(
            r#"{"command": "curvature", "seed": 3,
                "inputs": {"chain": {"graph": {"star": 3}}, "mode": "upsilon", "kappa": 0, "verify": true,
                           "budget": {"samples": 2000, "descents": 4}}}"#,
        )
        .unwrap();
        assert_eq!(run(&cfg).unwrap().outcome.exit_code(), 2);
    }

    #[test]
    fn csv_outputs() {
        let cfg = parse_config(
            r#"{"command": "frac-kernel", "inputs": {"beta": 1, "t": 1, "X": 2, "h": 0.5}}"#,
        )
        .unwrap();
        let r = run(&cfg).unwrap();
        assert!(r.render(Format::Csv).starts_with("x,G\n"));
        let cfg = parse_config(
            r#"{"command": "relaxation", "inputs": {"cd_function": {"family": "power", "nu": 0.6666666666666666, "gamma": 2}, "t_min": 0.001, "t_max": 10}}"#,
        )
        .unwrap();
        assert!(run(&cfg).unwrap().render(Format::Csv).lines().count() > 10);
    }
}
