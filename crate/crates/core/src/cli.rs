//! Experiment runner behind the `ergolab` binary.
//!
//! An [`ExperimentConfig`] names a command, the systems and function it acts
//! on, and the scan parameters. [`run`] turns it into a [`Table`], written as
//! CSV (with `#` header lines) or as one JSON object. Configs load from TOML
//! or JSON files, or are assembled from command-line flags.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::arithmetic::{self, ClassifyMethod, ContinuedFraction, FixedPointFrac};
use crate::dynamics::{Iet, Permutation, Point, SystemSpec, TorusPoint};
use crate::potentials::{self, GordonVerdict, PotentialWindow, SamplingFunction};
use crate::repetition::{self, sample_rng, SearchOutcome};
use crate::spectral;

pub const THREADS_ENV: &str = "ERGOLAB_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Cf,
    Classify,
    Orbit,
    Repeat,
    ConstructQ,
    PrpMeasure,
    Veech,
    Gordon,
    Transfer,
    Spectrum,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Cf => "cf",
            CommandKind::Classify => "classify",
            CommandKind::Orbit => "orbit",
            CommandKind::Repeat => "repeat",
            CommandKind::ConstructQ => "construct-q",
            CommandKind::PrpMeasure => "prp-measure",
            CommandKind::Veech => "veech",
            CommandKind::Gordon => "gordon",
            CommandKind::Transfer => "transfer",
            CommandKind::Spectrum => "spectrum",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Scan parameters; each command reads the ones it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub alpha: Vec<FixedPointFrac>,
    pub depth: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    pub method: ClassifyMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_max: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub eps: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub r: Vec<f64>,
    /// Explicit starting points; random ones are drawn when `samples` is set.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub omega: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    pub n_min: i64,
    pub n_max: i64,
    pub lambda: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub q_list: Vec<u64>,
    /// Use the convergent denominators `≤ q_max` of the system's `α` as `q_list`.
    pub convergents: bool,
    pub c_list: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub energies: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u0: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sizes: Vec<usize>,
    /// Number of intervals for randomly drawn irreducible exchanges.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random_iet: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub periodic: Vec<f64>,
    pub v_max: f64,
    pub e_max: f64,
    pub det_block: i64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            alpha: Vec::new(),
            depth: 64,
            c: None,
            method: ClassifyMethod::Convergents,
            q_max: None,
            eps: Vec::new(),
            r: Vec::new(),
            omega: Vec::new(),
            samples: None,
            n_min: 0,
            n_max: 20,
            lambda: vec![1.0],
            q_list: Vec::new(),
            convergents: false,
            c_list: vec![2.0],
            energies: Vec::new(),
            q: None,
            u0: None,
            sizes: Vec::new(),
            random_iet: None,
            periodic: Vec::new(),
            v_max: 4.0,
            e_max: 6.0,
            det_block: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: CommandKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub systems: Vec<SystemSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<SamplingFunction>,
    #[serde(default)]
    pub params: Params,
}

impl ExperimentConfig {
    pub fn new(command: CommandKind) -> Self {
        Self {
            command,
            seed: None,
            format: OutputFormat::Csv,
            output: None,
            systems: Vec::new(),
            function: None,
            params: Params::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(format!("{e}")))
    }

    /// Loads by extension: `.json` as JSON, anything else as TOML.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn is_stochastic(&self) -> bool {
        match self.command {
            CommandKind::PrpMeasure => true,
            CommandKind::Repeat | CommandKind::ConstructQ | CommandKind::Veech | CommandKind::Transfer => {
                self.params.samples.is_some()
            }
            _ => false,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.params;
        let bad = |field: &'static str, msg: String| Err(ConfigError::Field { field, message: msg });
        if self.is_stochastic() && self.seed.is_none() {
            return bad("seed", format!("`{}` draws random samples and needs a seed", self.command.name()));
        }
        for s in &self.systems {
            if let Err(e) = s.validate() {
                return bad("systems", e.to_string());
            }
        }
        let need_systems = matches!(
            self.command,
            CommandKind::Orbit | CommandKind::Repeat | CommandKind::PrpMeasure | CommandKind::Gordon
        ) || (self.command == CommandKind::Veech && p.random_iet.is_none())
            || (self.command == CommandKind::Spectrum && p.periodic.is_empty())
            || (self.command == CommandKind::Transfer && p.samples.is_none() && p.periodic.is_empty());
        if need_systems && self.systems.is_empty() {
            return bad("systems", "no system given".into());
        }
        let need_alpha = matches!(self.command, CommandKind::Cf | CommandKind::Classify | CommandKind::ConstructQ);
        if need_alpha && p.alpha.is_empty() {
            return bad("params.alpha", "no rotation number given".into());
        }
        let need_eps = matches!(
            self.command,
            CommandKind::Repeat | CommandKind::ConstructQ | CommandKind::PrpMeasure | CommandKind::Veech
        );
        if need_eps && p.eps.is_empty() {
            return bad("params.eps", "empty ε grid".into());
        }
        if p.eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return bad("params.eps", "every ε must be positive".into());
        }
        if p.r.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return bad("params.r", "every r must be positive".into());
        }
        if matches!(self.command, CommandKind::Repeat | CommandKind::PrpMeasure | CommandKind::Veech) && p.q_max.unwrap_or(0) == 0 {
            return bad("params.q_max", "q_max must be at least 1".into());
        }
        if matches!(self.command, CommandKind::Repeat | CommandKind::PrpMeasure) && p.r.is_empty() {
            return bad("params.r", "empty r grid".into());
        }
        if self.command == CommandKind::Classify && p.c.is_none() {
            return bad("params.c", "classify needs c".into());
        }
        if self.command == CommandKind::Gordon {
            if p.q_list.is_empty() && !p.convergents {
                return bad("params.q_list", "empty q grid".into());
            }
            if p.convergents && p.q_max.is_none() {
                return bad("params.q_max", "convergent q grid needs q_max".into());
            }
            if self.function.is_none() {
                return bad("function", "gordon needs a sampling function".into());
            }
        }
        if matches!(self.command, CommandKind::Gordon | CommandKind::Transfer | CommandKind::Spectrum) && p.lambda.is_empty() {
            return bad("params.lambda", "empty λ grid".into());
        }
        if self.command == CommandKind::Transfer {
            if p.samples.is_none() && p.energies.is_empty() {
                return bad("params.energies", "empty energy grid".into());
            }
            if p.samples.is_some() && p.q_max.is_none() {
                return bad("params.q_max", "random periodic potentials need q_max".into());
            }
            if p.samples.is_none() && p.q.is_none() && p.periodic.is_empty() {
                return bad("params.q", "transfer needs q".into());
            }
        }
        if self.command == CommandKind::Spectrum {
            if p.sizes.is_empty() {
                return bad("params.sizes", "empty size grid".into());
            }
            if p.sizes.contains(&0) {
                return bad("params.sizes", "sizes must be positive".into());
            }
        }
        if p.samples == Some(0) {
            return bad("params.samples", "samples must be at least 1".into());
        }
        if let Some(m) = p.random_iet {
            if !(2..=8).contains(&m) {
                return bad("params.random_iet", "random exchanges need 2 to 8 intervals".into());
            }
        }
        if matches!(self.command, CommandKind::Gordon | CommandKind::Spectrum | CommandKind::Transfer)
            && self.function.is_none()
            && !self.systems.is_empty()
            && p.periodic.is_empty()
            && p.samples.is_none()
        {
            return bad("function", "a system potential needs a sampling function".into());
        }
        if let Some(f) = &self.function {
            for s in &self.systems {
                if let Err(e) = f.validate(s.dim()) {
                    return bad("function", e.to_string());
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config read error: {0}")]
    Io(String),
    #[error("invalid field `{field}`: {message}")]
    Field { field: &'static str, message: String },
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Runtime(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Runtime(_) => 1,
        }
    }
}

fn runtime<E: std::fmt::Display>(e: E) -> RunError {
    RunError::Runtime(e.to_string())
}

/// Output rows with a versioned column schema.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub schema: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    fn new(command: CommandKind, columns: &[&'static str]) -> Self {
        Self {
            schema: format!("ergolab.{}.v1", command.name()),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Value>> {
        let i = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }
}

fn big(x: u128) -> Value {
    match u64::try_from(x) {
        Ok(v) => json!(v),
        Err(_) => json!(x.to_string()),
    }
}

fn opt<T: Into<Value>>(x: Option<T>) -> Value {
    x.map_or(Value::Null, Into::into)
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Writes the `#` header block and CSV rows, or a single JSON object.
///
/// The echoed config leaves out the destination path.
pub fn write_table<W: Write>(config: &ExperimentConfig, table: &Table, mut out: W) -> std::io::Result<()> {
    let echoed = ExperimentConfig { output: None, ..config.clone() };
    let echo = serde_json::to_string(&echoed).expect("config serializes");
    match config.format {
        OutputFormat::Csv => {
            writeln!(out, "# ergolab {}", env!("CARGO_PKG_VERSION"))?;
            writeln!(out, "# schema: {}", table.schema)?;
            match config.seed {
                Some(s) => writeln!(out, "# seed: {s}")?,
                None => writeln!(out, "# seed: none")?,
            }
            writeln!(out, "# config: {echo}")?;
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&table.columns)?;
            for row in &table.rows {
                w.write_record(row.iter().map(cell))?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|r| Value::Object(table.columns.iter().map(|c| c.to_string()).zip(r.iter().cloned()).collect()))
                .collect();
            let doc = json!({
                "version": env!("CARGO_PKG_VERSION"),
                "schema": table.schema,
                "seed": config.seed,
                "config": echoed,
                "rows": rows,
            });
            serde_json::to_writer_pretty(&mut out, &doc)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Thread count from the explicit flag, then the environment, then rayon's default.
pub fn resolve_threads(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| std::env::var(THREADS_ENV).ok()?.trim().parse().ok()).filter(|n| *n > 0)
}

/// Runs the experiment on a dedicated pool of `threads` workers; the result
/// does not depend on the count.
pub fn run_with_threads(config: &ExperimentConfig, threads: Option<usize>) -> Result<Table, RunError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(runtime)?;
    pool.install(|| run(config))
}

/// Runs the experiment and writes to `config.output`, or stdout.
pub fn run_to_output(config: &ExperimentConfig, threads: Option<usize>) -> Result<(), RunError> {
    let table = run_with_threads(config, threads)?;
    match &config.output {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| RunError::Runtime(format!("{}: {e}", path.display())))?;
            let mut w = std::io::BufWriter::new(file);
            write_table(config, &table, &mut w).map_err(runtime)?;
            w.flush().map_err(runtime)
        }
        None => write_table(config, &table, std::io::stdout().lock()).map_err(runtime),
    }
}

pub fn run(config: &ExperimentConfig) -> Result<Table, RunError> {
    config.validate()?;
    match config.command {
        CommandKind::Cf => run_cf(config),
        CommandKind::Classify => run_classify(config),
        CommandKind::Orbit => run_orbit(config),
        CommandKind::Repeat => run_repeat(config),
        CommandKind::ConstructQ => run_construct(config),
        CommandKind::PrpMeasure => run_prp(config),
        CommandKind::Veech => run_veech(config),
        CommandKind::Gordon => run_gordon(config),
        CommandKind::Transfer => run_transfer(config),
        CommandKind::Spectrum => run_spectrum(config),
    }
}

fn run_cf(config: &ExperimentConfig) -> Result<Table, RunError> {
    let mut t = Table::new(config.command, &["alpha", "k", "partial_quotient", "p", "q", "q_norm", "precision_exhausted"]);
    for &alpha in &config.params.alpha {
        let cf = ContinuedFraction::expand_trusted(alpha, config.params.depth);
        for (i, (a, c)) in cf.partial_quotients.iter().zip(&cf.convergents).enumerate() {
            let norm = alpha.mul_int(c.q as i128).norm().to_f64();
            t.push(vec![
                json!(format!("{alpha:?}")),
                json!(i + 1),
                big(*a),
                big(c.p),
                big(c.q),
                json!(norm),
                json!(cf.precision_exhausted),
            ]);
        }
    }
    Ok(t)
}

fn run_classify(config: &ExperimentConfig) -> Result<Table, RunError> {
    let p = &config.params;
    let q_max = p.q_max.unwrap_or(10_000);
    let mut t = Table::new(config.command, &["alpha", "c", "q_max", "method", "verdict", "witness_q", "max_partial_quotient"]);
    for &alpha in &p.alpha {
        let v = arithmetic::classify_badly_approximable(alpha, p.c.unwrap_or(0.0), q_max as u128, p.method).map_err(|e| {
            ConfigError::Field { field: "params", message: e.to_string() }
        })?;
        t.push(vec![
            json!(format!("{alpha:?}")),
            json!(v.c),
            json!(q_max),
            serde_json::to_value(v.method).unwrap(),
            serde_json::to_value(v.verdict).unwrap(),
            opt(v.witness_q.map(big)),
            opt(v.max_partial_quotient.map(big)),
        ]);
    }
    Ok(t)
}

fn parse_point(system: &SystemSpec, coords: &[f64]) -> Result<Point, ConfigError> {
    let field = "params.omega";
    if let SystemSpec::Iet(iet) = system {
        return match coords {
            [x] if *x >= 0.0 && *x < iet.total() => Ok(Point::Interval(*x)),
            _ => Err(ConfigError::Field { field, message: format!("need one coordinate in [0, {})", iet.total()) }),
        };
    }
    if coords.len() != system.dim() || coords.iter().any(|x| !x.is_finite()) {
        return Err(ConfigError::Field {
            field,
            message: format!("need {} finite coordinates, got {}", system.dim(), coords.len()),
        });
    }
    Ok(Point::Torus(TorusPoint::from_f64s(coords)))
}

/// Explicit points, or `samples` Lebesgue-random ones from counter-derived streams.
fn start_points(config: &ExperimentConfig, system: &SystemSpec, stream_offset: u64) -> Result<Vec<Point>, ConfigError> {
    let p = &config.params;
    if let Some(n) = p.samples {
        let seed = config.seed.unwrap_or(0);
        return Ok((0..n).map(|i| system.sample_uniform(&mut sample_rng(seed, stream_offset + i))).collect());
    }
    if p.omega.is_empty() {
        return Ok(vec![match system {
            SystemSpec::Iet(_) => Point::Interval(0.0),
            _ => Point::Torus(TorusPoint::zero(system.dim())),
        }]);
    }
    p.omega.iter().map(|c| parse_point(system, c)).collect()
}

fn point_label(p: &Point) -> Value {
    json!(p.to_f64s().iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "))
}

fn run_orbit(config: &ExperimentConfig) -> Result<Table, RunError> {
    let p = &config.params;
    let mut t = Table::new(config.command, &["system", "start", "n", "point"]);
    for (si, sys) in config.systems.iter().enumerate() {
        for omega in start_points(config, sys, 0)? {
            let orbit = sys.orbit(&omega, p.n_min, p.n_max).map_err(runtime)?;
            for (i, x) in orbit.iter().enumerate() {
                t.push(vec![json!(si), point_label(&omega), json!(p.n_min + i as i64), point_label(x)]);
            }
        }
    }
    Ok(t)
}

fn run_repeat(config: &ExperimentConfig) -> Result<Table, RunError> {
    let p = &config.params;
    let q_max = p.q_max.unwrap();
    let r_top = p.r.iter().copied().fold(0.0, f64::max);
    let mut t = Table::new(
        config.command,
        &["system", "sample", "omega", "eps", "r", "found", "q", "k_max", "max_dist", "best_q", "best_prefix", "best_dist", "verified"],
    );
    for (si, sys) in config.systems.iter().enumerate() {
        let points = start_points(config, sys, (si as u64) << 32)?;
        let blocks: Vec<Vec<Vec<Value>>> = points
            .par_iter()
            .enumerate()
            .map(|(i, omega)| {
                let search = repetition::OrbitSearch::new(sys, omega, r_top, q_max).map_err(runtime)?;
                let mut rows = Vec::new();
                for &eps in &p.eps {
                    for &r in &p.r {
                        let out = search.find(eps, r, q_max).map_err(runtime)?;
                        let head = vec![json!(si), json!(i), point_label(omega), json!(eps), json!(r)];
                        let tail = match &out {
                            SearchOutcome::Found(c) => vec![
                                json!(true),
                                json!(c.q),
                                json!(c.k_max),
                                json!(c.max_dist),
                                Value::Null,
                                Value::Null,
                                Value::Null,
                                json!(repetition::verify_certificate_against_definition(c, sys)),
                            ],
                            SearchOutcome::NotFound { best_q, best_prefix, best_dist } => vec![
                                json!(false),
                                Value::Null,
                                Value::Null,
                                Value::Null,
                                json!(best_q),
                                json!(best_prefix),
                                json!(best_dist),
                                Value::Null,
                            ],
                        };
                        rows.push([head, tail].concat());
                    }
                }
                Ok(rows)
            })
            .collect::<Result<_, RunError>>()?;
        blocks.into_iter().flatten().for_each(|r| t.push(r));
    }
    Ok(t)
}

fn run_construct(config: &ExperimentConfig) -> Result<Table, RunError> {
    let p = &config.params;
    let r_list = if p.r.is_empty() { vec![1.0] } else { p.r.clone() };
    let mut t = Table::new(
        config.command,
        &[
            "alpha", "omega1", "eps", "r", "status", "q_k", "m", "q_tilde", "first", "omega_term", "quadratic_term",
            "linear_term", "max_dist", "verified", "q_times_step", "witness_q", "witness_value",
        ],
    );
    for (ai, &alpha) in p.alpha.iter().enumerate() {
        let cf = ContinuedFraction::expand_trusted(alpha, p.depth);
        let omegas: Vec<FixedPointFrac> = match p.samples {
            Some(n) => (0..n)
                .map(|i| FixedPointFrac::from_raw(sample_rng(config.seed.unwrap_or(0), ((ai as u64) << 32) + i).random()))
                .collect(),
            None if p.omega.is_empty() => vec![FixedPointFrac::ZERO],
            None => p.omega.iter().map(|c| FixedPointFrac::from_f64(c.first().copied().unwrap_or(0.0))).collect(),
        };
        let sys = SystemSpec::SkewShift { alpha };
        let mut jobs: Vec<(FixedPointFrac, f64, f64)> = Vec::new();
        for &w in &omegas {
            for &e in &p.eps {
                jobs.extend(r_list.iter().map(|&r| (w, e, r)));
            }
        }
        let rows: Vec<Vec<Value>> = jobs
            .par_iter()
            .map(|&(w, eps, r)| {
                let head = vec![json!(format!("{alpha:?}")), json!(w.to_f64()), json!(eps), json!(r)];
                match repetition::skewshift_constructive_q(alpha, w, eps, r, &cf) {
                    Ok(c) => {
                        let verified = repetition::verify_certificate_against_definition(&c.certificate, &sys);
                        let obs = repetition::badly_approximable_obstruction(alpha, eps, &c.certificate).ok();
                        [
                            head,
                            vec![
                                json!("found"),
                                big(c.q_k),
                                json!(c.m),
                                json!(c.q_tilde),
                                json!(c.terms.first),
                                json!(c.terms.omega_term),
                                json!(c.terms.quadratic_term),
                                json!(c.terms.linear_term),
                                json!(c.certificate.max_dist),
                                json!(verified),
                                opt(obs.as_ref().map(|o| o.q_times_step)),
                                opt(obs.as_ref().map(|o| o.witness_q)),
                                opt(obs.as_ref().map(|o| o.witness_value)),
                            ],
                        ]
                        .concat()
                    }
                    Err(_) => [head, vec![json!("not_available")], vec![Value::Null; 12]].concat(),
                }
            })
            .collect();
        rows.into_iter().for_each(|r| t.push(r));
    }
    Ok(t)
}

fn run_prp(config: &ExperimentConfig) -> Result<Table, RunError> {
    let p = &config.params;
    let seed = config.seed.unwrap();
    let n = p.samples.unwrap_or(100);
    let q_max = p.q_max.unwrap();
    let mut t = Table::new(
        config.command,
        &["system", "eps", "r", "q_max", "n_samples", "n_hits", "fraction", "ci_lo", "ci_hi"],
    );
    for (si, sys) in config.systems.iter().enumerate() {
        for &eps in &p.eps {
            for &r in &p.r {
                let e = repetition::estimate_prp_fraction(sys, eps, r, q_max, n, seed).map_err(runtime)?;
                t.push(vec![
                    json!(si),
                    json!(eps),
                    json!(r),
                    json!(q_max),
                    json!(e.n_samples),
                    json!(e.n_hits),
                    json!(e.fraction),
                    json!(e.wilson_ci.0),
                    json!(e.wilson_ci.1),
                ]);
            }
        }
    }
    Ok(t)
}

/// Uniformly chosen irreducible permutation of `m` symbols and lengths in `[0.05, 1)`.
pub fn random_iet<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Iet {
    let mut perms = Vec::new();
    let mut cur: Vec<usize> = (1..=m).collect();
    permutations(&mut cur, 0, &mut perms);
    perms.retain(|p| Permutation::from_one_based(p).is_ok_and(|p| p.is_irreducible()));
    perms.sort();
    let pi = Permutation::from_one_based(&perms[rng.random_range(0..perms.len())]).expect("valid");
    let lambda = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
    Iet::new(lambda, pi).expect("valid exchange")
}

fn permutations(cur: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == cur.len() {
        out.push(cur.clone());
        return;
    }
    for i in k..cur.len() {
        cur.swap(k, i);
        permutations(cur, k + 1, out);
        cur.swap(k, i);
    }
}

fn run_veech(config: &ExperimentConfig) -> Result<Table, RunError> {
    let p = &config.params;
    let q_max = p.q_max.unwrap();
    let iets: Vec<Iet> = match p.random_iet {
        Some(m) => (0..p.samples.unwrap_or(1)).map(|i| random_iet(m, &mut sample_rng(config.seed.unwrap_or(0), i))).collect(),
        None => config
            .systems
            .iter()
            .map(|s| match s {
                SystemSpec::Iet(iet) => Ok(iet.clone()),
                SystemSpec::Shift { alpha } if alpha.len() == 1 => Iet::rotation(alpha[0].to_f64()).map_err(runtime),
                _ => Err(RunError::Config(ConfigError::Field {
                    field: "systems",
                    message: "veech needs an interval exchange or a circle rotation".into(),
                })),
            })
            .collect::<Result<_, _>>()?,
    };
    let mut t = Table::new(
        config.command,
        &["iet", "lambda", "pi", "eps", "found", "q", "j_lo", "j_hi", "coverage", "return_overlap", "overlap_ratio"],
    );
    let jobs: Vec<(usize, f64)> = (0..iets.len()).flat_map(|i| p.eps.iter().map(move |&e| (i, e))).collect();
    let rows: Vec<Vec<Value>> = jobs
        .par_iter()
        .map(|&(i, eps)| {
            let iet = &iets[i];
            let (found, tower) = match repetition::veech_tower_search(iet, eps, q_max) {
                Ok(tw) => (true, Some(tw)),
                Err(miss) => (false, miss.best),
            };
            let lam: Vec<String> = iet.lambda().iter().map(|x| x.to_string()).collect();
            let pi: Vec<String> = iet.permutation().one_based().iter().map(|x| x.to_string()).collect();
            vec![
                json!(i),
                json!(lam.join(" ")),
                json!(pi.join(" ")),
                json!(eps),
                json!(found),
                opt(tower.map(|t| t.q)),
                opt(tower.map(|t| t.j_lo)),
                opt(tower.map(|t| t.j_hi)),
                opt(tower.map(|t| t.coverage)),
                opt(tower.map(|t| t.return_overlap)),
                opt(tower.filter(|t| t.len() > 0.0).map(|t| t.return_overlap / t.len())),
            ]
        })
        .collect();
    rows.into_iter().for_each(|r| t.push(r));
    Ok(t)
}

fn system_alpha(sys: &SystemSpec) -> Option<FixedPointFrac> {
    match sys {
        SystemSpec::Shift { alpha } => alpha.first().copied(),
        SystemSpec::SkewShift { alpha } | SystemSpec::SkewProduct { alpha, .. } => Some(*alpha),
        SystemSpec::Iet(_) => None,
    }
}

fn run_gordon(config: &ExperimentConfig) -> Result<Table, RunError> {
    let p = &config.params;
    let f = config.function.as_ref().unwrap();
    let mut t = Table::new(
        config.command,
        &["system", "omega", "lambda", "q", "gamma", "modulus_bound_ref", "verdict", "c_max"],
    );
    for (si, sys) in config.systems.iter().enumerate() {
        let q_list: Vec<u64> = if p.convergents {
            let alpha = system_alpha(sys).ok_or_else(|| ConfigError::Field {
                field: "params.convergents",
                message: "system has no rotation number".into(),
            })?;
            let q_max = p.q_max.unwrap();
            ContinuedFraction::expand_trusted(alpha, p.depth)
                .denominators()
                .into_iter()
                .take_while(|&q| q <= q_max as u128)
                .map(|q| q as u64)
                .collect()
        } else {
            p.q_list.clone()
        };
        if q_list.is_empty() || q_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::Field { field: "params.q_list", message: "q grid must be nonempty and increasing".into() }.into());
        }
        for omega in start_points(config, sys, (si as u64) << 32)? {
            let q_top = *q_list.last().unwrap() as i64;
            let base = potentials::sample_potential(sys, f, 1.0, &omega, 1 - q_top, 2 * q_top).map_err(runtime)?;
            for &lambda in &p.lambda {
                let w = base.with_lambda(lambda);
                let entries: Vec<potentials::GordonEntry> = q_list
                    .par_iter()
                    .map(|&q| potentials::gordon_gamma(&w, q).map(|gamma| potentials::GordonEntry { q, gamma }))
                    .collect::<Result<_, _>>()
                    .map_err(runtime)?;
                let profile = potentials::profile_from_entries(entries, &p.c_list);
                let (verdict, c_max) = match profile.verdict {
                    GordonVerdict::DecayConsistent { c_max } => ("DECAY_CONSISTENT", Some(c_max)),
                    GordonVerdict::NoDecayAtHorizon => ("NO_DECAY_AT_HORIZON", None),
                };
                for e in &profile.entries {
                    let reference = system_alpha(sys)
                        .filter(|_| matches!(sys, SystemSpec::Shift { .. }))
                        .and_then(|a| potentials::modulus_bound(f, a.mul_int(e.q as i128).norm().to_f64()).ok())
                        .map(|b| b * lambda.abs());
                    t.push(vec![
                        json!(si),
                        point_label(&omega),
                        json!(lambda),
                        json!(e.q),
                        json!(e.gamma),
                        opt(reference),
                        json!(verdict),
                        opt(c_max),
                    ]);
                }
            }
        }
    }
    Ok(t)
}

fn periodic_window(period: &[f64], q: i64) -> PotentialWindow {
    let n_min = 1 - q;
    let values = (n_min..=(2 * q).max(1)).map(|n| period[n.rem_euclid(period.len() as i64) as usize]).collect();
    PotentialWindow::from_values(n_min, values)
}

fn check_row(report: &spectral::CheckReport, det_drift: f64, lead: Vec<Value>) -> Vec<Value> {
    [
        lead,
        vec![
            json!(report.q),
            json!(report.energy),
            json!(report.norm_plus_q),
            json!(report.norm_plus_2q),
            json!(report.norm_minus_q),
            json!(report.min_ratio),
            json!(report.gamma),
            json!(report.cayley_hamilton_residual),
            json!(det_drift),
        ],
    ]
    .concat()
}

fn run_transfer(config: &ExperimentConfig) -> Result<Table, RunError> {
    let p = &config.params;
    let mut t = Table::new(
        config.command,
        &[
            "source", "lambda", "q", "energy", "norm_plus_q", "norm_plus_2q", "norm_minus_q", "min_ratio", "gamma",
            "cayley_hamilton_residual", "det_drift",
        ],
    );
    let det_len = p.det_block.max(1);
    if let Some(n) = p.samples {
        let seed = config.seed.unwrap();
        let q_max = p.q_max.unwrap().max(1);
        let rows: Vec<Vec<Value>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = sample_rng(seed, i);
                let q = rng.random_range(1..=q_max) as i64;
                let period: Vec<f64> = (0..q).map(|_| rng.random_range(-p.v_max..=p.v_max)).collect();
                let energy = rng.random_range(-p.e_max..=p.e_max);
                let theta = rng.random_range(0.0..std::f64::consts::TAU);
                let u0 = [theta.cos(), theta.sin()];
                let w = periodic_window(&period, q);
                let report = spectral::gordon_three_block_check(&w, energy, q as u64, u0).map_err(runtime)?;
                let long = PotentialWindow::from_values(1, (0..det_len).map(|n| period[(n % q) as usize]).collect());
                let drift = spectral::transfer_block(&long, energy, 1, det_len).map_err(runtime)?.det_drift();
                Ok(check_row(&report, drift, vec![json!(format!("sample {i}")), json!(1.0)]))
            })
            .collect::<Result<_, RunError>>()?;
        rows.into_iter().for_each(|r| t.push(r));
        return Ok(t);
    }
    let u0 = p.u0.unwrap_or([1.0, 0.0]);
    let mut windows: Vec<(String, f64, i64, PotentialWindow)> = Vec::new();
    if !p.periodic.is_empty() {
        let q = p.q.map_or(p.periodic.len() as i64, |q| q as i64);
        for &lambda in &p.lambda {
            windows.push(("periodic".into(), lambda, q, periodic_window(&p.periodic, q).with_lambda(lambda)));
        }
    } else {
        let f = config.function.as_ref().unwrap();
        let q = p.q.unwrap() as i64;
        for (si, sys) in config.systems.iter().enumerate() {
            for omega in start_points(config, sys, 0)? {
                let base = potentials::sample_potential(sys, f, 1.0, &omega, 1 - q, (2 * q).max(det_len)).map_err(runtime)?;
                for &lambda in &p.lambda {
                    windows.push((format!("system {si}"), lambda, q, base.with_lambda(lambda)));
                }
            }
        }
    }
    for (source, lambda, q, w) in &windows {
        for &energy in &p.energies {
            let report = spectral::gordon_three_block_check(w, energy, *q as u64, u0).map_err(runtime)?;
            let hi = w.n_max.min(det_len);
            let drift = spectral::transfer_block(w, energy, 1, hi.max(1)).map_err(runtime)?.det_drift();
            t.push(check_row(&report, drift, vec![json!(source), json!(lambda)]));
        }
    }
    Ok(t)
}

fn run_spectrum(config: &ExperimentConfig) -> Result<Table, RunError> {
    let p = &config.params;
    let n_top = *p.sizes.iter().max().unwrap();
    let mut t = Table::new(
        config.command,
        &["source", "lambda", "size", "index", "eigenvalue", "ipr", "edge_mass"],
    );
    let mut windows: Vec<(String, f64, PotentialWindow)> = Vec::new();
    if !p.periodic.is_empty() {
        let values: Vec<f64> = (0..n_top).map(|i| p.periodic[i % p.periodic.len()]).collect();
        for &lambda in &p.lambda {
            windows.push(("periodic".into(), lambda, PotentialWindow::from_values(0, values.clone()).with_lambda(lambda)));
        }
    } else {
        let f = config.function.as_ref().unwrap();
        for (si, sys) in config.systems.iter().enumerate() {
            for omega in start_points(config, sys, 0)? {
                let base = potentials::sample_potential(sys, f, 1.0, &omega, 0, n_top as i64 - 1).map_err(runtime)?;
                for &lambda in &p.lambda {
                    windows.push((format!("system {si}"), lambda, base.with_lambda(lambda)));
                }
            }
        }
    }
    let jobs: Vec<(usize, usize)> = (0..windows.len()).flat_map(|w| p.sizes.iter().map(move |&n| (w, n))).collect();
    let reports: Vec<spectral::SpectralReport> = jobs
        .par_iter()
        .map(|&(w, n)| spectral::truncated_spectrum(&windows[w].2, n, false).map_err(runtime))
        .collect::<Result<_, _>>()?;
    for (&(w, n), r) in jobs.iter().zip(&reports) {
        for k in 0..r.size {
            t.push(vec![
                json!(windows[w].0),
                json!(windows[w].1),
                json!(n),
                json!(k),
                json!(r.eigenvalues[k]),
                json!(r.ipr[k]),
                json!(r.edge_mass[k]),
            ]);
        }
    }
    Ok(t)
}

/// Command line of the `ergolab` binary.
#[derive(Debug, Parser)]
#[command(name = "ergolab", version, about = "Repetition, Gordon defects and transfer matrices along orbits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Continued-fraction expansion and convergents.
    Cf(Flags),
    /// Bounded-horizon badly-approximable test.
    Classify(Flags),
    /// Orbit segment of a starting point.
    Orbit(Flags),
    /// Smallest repetition time per (ε, r).
    Repeat(Flags),
    /// Skew-shift repetition times m·q_k.
    ConstructQ(Flags),
    /// Monte Carlo fraction of repeating points.
    PrpMeasure(Flags),
    /// Veech tower search for interval exchanges.
    Veech(Flags),
    /// Gordon defect profile.
    Gordon(Flags),
    /// Three-block transfer-matrix check.
    Transfer(Flags),
    /// Dirichlet truncation eigenvalues and localization statistics.
    Spectrum(Flags),
    /// Runs a TOML or JSON experiment file.
    Run {
        config: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        /// Overrides the output path of the file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SystemKind {
    Shift,
    SkewShift,
    SkewProduct,
    Iet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FunctionKind {
    Cosine,
    Coding,
    Bourgain,
    Constant,
}

#[derive(Debug, Clone, Args)]
pub struct Flags {
    #[arg(long, value_enum)]
    pub system: Option<SystemKind>,
    /// Rotation numbers: presets (golden, sqrt2, liouville10), p/q, 0x-raw or decimals.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<FixedPointFrac>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub lengths: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub perm: Vec<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub omega: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub r: Vec<f64>,
    #[arg(long)]
    pub qmax: Option<u64>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub exhaustive: bool,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    pub n_min: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub n_max: Option<i64>,
    #[arg(long = "func", value_enum)]
    pub function: Option<FunctionKind>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub k: Vec<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub phase: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub breaks: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub values: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub lambda: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub q_list: Vec<u64>,
    #[arg(long)]
    pub convergents: bool,
    #[arg(long, value_delimiter = ',')]
    pub c_list: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub energies: Vec<f64>,
    #[arg(long)]
    pub q: Option<u64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 2)]
    pub u0: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<usize>,
    #[arg(long)]
    pub random_iet: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub periodic: Vec<f64>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Worker threads; defaults to $ERGOLAB_THREADS.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Print the assembled config as TOML instead of running it.
    #[arg(long)]
    pub print_config: bool,
}

impl Flags {
    fn system(&self, command: CommandKind) -> Result<Option<SystemSpec>, ConfigError> {
        let field = "--system";
        let first_alpha = || {
            self.alpha.first().copied().ok_or(ConfigError::Field { field: "--alpha", message: "missing".into() })
        };
        let kind = match self.system {
            Some(k) => k,
            None if matches!(command, CommandKind::Cf | CommandKind::Classify | CommandKind::ConstructQ) => return Ok(None),
            None if !self.lengths.is_empty() => SystemKind::Iet,
            None if !self.alpha.is_empty() => SystemKind::Shift,
            None => return Ok(None),
        };
        Ok(Some(match kind {
            SystemKind::Shift => {
                first_alpha()?;
                SystemSpec::Shift { alpha: self.alpha.clone() }
            }
            SystemKind::SkewShift => SystemSpec::SkewShift { alpha: first_alpha()? },
            SystemKind::SkewProduct => SystemSpec::SkewProduct { d: self.d.unwrap_or(2), alpha: first_alpha()? },
            SystemKind::Iet => {
                let iet = if self.lengths.is_empty() {
                    Iet::rotation(first_alpha()?.to_f64())
                } else {
                    let pi = if self.perm.is_empty() {
                        Ok(Permutation::reversal(self.lengths.len()))
                    } else {
                        Permutation::from_one_based(&self.perm)
                    };
                    pi.and_then(|pi| Iet::new(self.lengths.clone(), pi))
                };
                SystemSpec::Iet(iet.map_err(|e| ConfigError::Field { field, message: e.to_string() })?)
            }
        }))
    }

    fn function(&self, dim: usize) -> Option<SamplingFunction> {
        Some(match self.function? {
            FunctionKind::Cosine => {
                let k = if self.k.is_empty() {
                    let mut k = vec![0; dim];
                    k[0] = 1;
                    k
                } else {
                    self.k.clone()
                };
                SamplingFunction::Cosine { k, phase: self.phase.unwrap_or(0.0) }
            }
            FunctionKind::Coding => SamplingFunction::PiecewiseConstant {
                breakpoints: self.breaks.clone(),
                values: self.values.clone(),
            },
            FunctionKind::Bourgain => SamplingFunction::BourgainQuadratic,
            FunctionKind::Constant => SamplingFunction::constant(self.values.first().copied().unwrap_or(1.0), dim),
        })
    }

    pub fn to_config(&self, command: CommandKind) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = ExperimentConfig::new(command);
        cfg.seed = self.seed;
        cfg.format = self.format;
        cfg.output = self.output.clone();
        let system = self.system(command)?;
        let dim = system.as_ref().map_or(1, |s| s.dim());
        cfg.function = self.function(dim);
        cfg.systems.extend(system);
        let p = &mut cfg.params;
        if matches!(command, CommandKind::Cf | CommandKind::Classify | CommandKind::ConstructQ) {
            p.alpha = self.alpha.clone();
        }
        if let Some(d) = self.depth {
            p.depth = d;
        }
        p.c = self.c;
        if self.exhaustive {
            p.method = ClassifyMethod::ExhaustiveScan;
        }
        p.q_max = self.qmax;
        p.eps = self.eps.clone();
        p.r = self.r.clone();
        if !self.omega.is_empty() {
            p.omega = vec![self.omega.clone()];
        }
        p.samples = self.samples;
        if let Some(n) = self.n_min {
            p.n_min = n;
        }
        if let Some(n) = self.n_max {
            p.n_max = n;
        }
        if !self.lambda.is_empty() {
            p.lambda = self.lambda.clone();
        }
        p.q_list = self.q_list.clone();
        p.convergents = self.convergents;
        if !self.c_list.is_empty() {
            p.c_list = self.c_list.clone();
        }
        p.energies = self.energies.clone();
        p.q = self.q;
        if let [a, b] = self.u0[..] {
            p.u0 = Some([a, b]);
        }
        p.sizes = self.sizes.clone();
        p.random_iet = self.random_iet;
        p.periodic = self.periodic.clone();
        Ok(cfg)
    }
}

/// Runs a parsed command line; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let (config, threads, print) = match cli.command {
        CliCommand::Run { config, threads, output } => match ExperimentConfig::load(&config) {
            Ok(mut c) => {
                if output.is_some() {
                    c.output = output;
                }
                (c, threads, false)
            }
            Err(e) => {
                eprintln!("error: {e}");
                return 2;
            }
        },
        other => {
            let (kind, flags) = match other {
                CliCommand::Cf(f) => (CommandKind::Cf, f),
                CliCommand::Classify(f) => (CommandKind::Classify, f),
                CliCommand::Orbit(f) => (CommandKind::Orbit, f),
                CliCommand::Repeat(f) => (CommandKind::Repeat, f),
                CliCommand::ConstructQ(f) => (CommandKind::ConstructQ, f),
                CliCommand::PrpMeasure(f) => (CommandKind::PrpMeasure, f),
                CliCommand::Veech(f) => (CommandKind::Veech, f),
                CliCommand::Gordon(f) => (CommandKind::Gordon, f),
                CliCommand::Transfer(f) => (CommandKind::Transfer, f),
                CliCommand::Spectrum(f) => (CommandKind::Spectrum, f),
                CliCommand::Run { .. } => unreachable!(),
            };
            match flags.to_config(kind) {
                Ok(c) => (c, flags.threads, flags.print_config),
                Err(e) => {
                    eprintln!("error: {e}");
                    return 2;
                }
            }
        }
    };
    if print {
        print!("{}", config.to_toml());
        return 0;
    }
    match run_to_output(&config, resolve_threads(threads)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
