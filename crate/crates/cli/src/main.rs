use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Map, Value};

use cubic_dist::charfn::CharFn;
use cubic_dist::density::{invert, invert_auto, linspace_step, DensityError, QuadParams};
use cubic_dist::eisenstein::{write_moduli_csv, write_primes_csv};
use cubic_dist::empirics::{count_c, empirical_cdf, ks_distance, SampleCache};
use cubic_dist::lfunction::{CaseKind, EvalParams, Evaluator, LError, Smoothing};
use cubic_dist::randmodel::{ModelConfig, Sampler};
use cubic_dist::reproduce::{reproduce, Profile, CRITERIA, VERSION};
use cubic_dist::{enumerate_c, enumerate_primes, symbol, EisensteinInt, ModulusC};

#[derive(Parser, Debug)]
#[command(name = "cubic-dist", version, about = "Value distribution of L-functions of cubic characters of Q(w)")]
struct Cli {
    /// Write output to this file instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads, 0 for one per core
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// JSON output instead of CSV
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Prime ideals of Z[w] with norm up to a bound
    Primes(MaxNorm),
    /// Moduli c = 1 mod 9, square-free, with norm up to a bound
    Moduli(MaxNorm),
    /// Cubic residue symbol (alpha / lambda)_3
    Symbol(SymbolArgs),
    /// log L_c or L_c'/L_c at one modulus
    Lvalue(LvalueArgs),
    /// Case values for every modulus with norm up to a bound
    Lvalues(LvaluesArgs),
    /// Characteristic function of the limiting distribution on a y-grid
    Charfn(CharfnArgs),
    /// Density and CDF of the limiting distribution by Fourier inversion
    Density(DensityArgs),
    /// KS distance between the moduli's values and the limiting CDF
    Compare(CompareArgs),
    /// Counts of moduli against the predicted slope
    Count(MaxNorm),
    /// Draws from the random Euler-product model
    Montecarlo(MonteCarloArgs),
    /// Runs the acceptance criteria and prints a JSON report
    Reproduce(ReproduceArgs),
}

#[derive(Args, Debug, Serialize)]
struct MaxNorm {
    #[arg(long)]
    max_norm: u64,
}

#[derive(Args, Debug, Serialize)]
struct SymbolArgs {
    /// numerator A,B meaning A + B w
    #[arg(long, allow_hyphen_values = true)]
    #[serde(serialize_with = "as_string")]
    alpha: EisensteinInt,
    /// denominator, prime to 1 - w
    #[arg(long, allow_hyphen_values = true)]
    #[serde(serialize_with = "as_string")]
    lambda: EisensteinInt,
}

#[derive(Args, Debug, Serialize, Clone, Copy)]
struct CaseArgs {
    #[arg(long, allow_hyphen_values = true)]
    sigma: f64,
    #[arg(long)]
    #[serde(serialize_with = "case_str")]
    case: CaseKind,
}

#[derive(Args, Debug, Serialize)]
struct ParamArgs {
    /// largest prime norm in Euler products
    #[arg(long)]
    cutoff: Option<u64>,
    /// fixed smoothing length X instead of a multiple of N(c)
    #[arg(long)]
    smooth: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
struct LvalueArgs {
    #[arg(long, allow_hyphen_values = true)]
    #[serde(serialize_with = "as_string")]
    c: EisensteinInt,
    #[command(flatten)]
    #[serde(flatten)]
    case: CaseArgs,
    #[command(flatten)]
    #[serde(flatten)]
    params: ParamArgs,
}

#[derive(Args, Debug, Serialize)]
struct LvaluesArgs {
    #[arg(long)]
    max_norm: u64,
    #[command(flatten)]
    #[serde(flatten)]
    case: CaseArgs,
    #[command(flatten)]
    #[serde(flatten)]
    params: ParamArgs,
}

#[derive(Args, Debug, Serialize)]
struct CharfnArgs {
    #[command(flatten)]
    #[serde(flatten)]
    case: CaseArgs,
    #[arg(long, allow_hyphen_values = true)]
    y_min: f64,
    #[arg(long, allow_hyphen_values = true)]
    y_max: f64,
    #[arg(long)]
    y_step: f64,
    #[arg(long, default_value_t = 100_000)]
    cutoff: u64,
}

#[derive(Args, Debug, Serialize)]
struct DensityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    case: CaseArgs,
    #[arg(long, allow_hyphen_values = true, requires_all = ["z_max", "z_step"])]
    z_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires_all = ["z_min", "z_step"])]
    z_max: Option<f64>,
    #[arg(long, requires_all = ["z_min", "z_max"])]
    z_step: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    cutoff: u64,
}

#[derive(Args, Debug, Serialize)]
struct CompareArgs {
    #[command(flatten)]
    #[serde(flatten)]
    case: CaseArgs,
    #[arg(long)]
    max_norm: u64,
    /// also report the KS distance of the e^{-N(c)/Y}-weighted CDF
    #[arg(long)]
    weighted: bool,
    /// prime cutoff of the predicted distribution
    #[arg(long, default_value_t = 100_000)]
    cutoff: u64,
}

#[derive(Args, Debug, Serialize)]
struct MonteCarloArgs {
    #[command(flatten)]
    #[serde(flatten)]
    case: CaseArgs,
    #[arg(long, default_value_t = 100_000)]
    cutoff: u64,
    #[arg(long)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
struct ReproduceArgs {
    #[arg(long, default_value = "quick")]
    #[serde(serialize_with = "as_string")]
    profile: Profile,
}

fn as_string<T: ToString, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

fn case_str<S: serde::Serializer>(v: &CaseKind, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(v.as_str())
}

/// Exit status classes: 1 for bad input, 2 for numerical non-convergence.
enum Failure {
    Invalid(String),
    NoConvergence(String),
    Io(io::Error),
    CriteriaFailed,
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.into())
    }
}

impl From<LError> for Failure {
    fn from(e: LError) -> Self {
        match e {
            LError::NearZero(_) => Failure::NoConvergence(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

impl From<DensityError> for Failure {
    fn from(e: DensityError) -> Self {
        match e {
            DensityError::NoDecay { .. } | DensityError::NotConverged { .. } => Failure::NoConvergence(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Invalid(msg.into())
}

/// 12 significant digits, fixed notation for moderate magnitudes.
fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return String::new();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-5..12).contains(&mag) {
        let decimals = (11 - mag).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.11e}")
    }
}

fn json_num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

/// Output sink carrying the resolved configuration for the header.
struct Sink {
    w: Box<dyn Write>,
    json: bool,
    command: &'static str,
    config: Map<String, Value>,
}

impl Sink {
    fn header_lines(&mut self) -> io::Result<()> {
        writeln!(self.w, "# cubic-dist {VERSION}")?;
        writeln!(self.w, "# command: {}", self.command)?;
        for (k, v) in &self.config {
            let v = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            writeln!(self.w, "# {k}: {v}")?;
        }
        Ok(())
    }

    fn envelope(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("tool".into(), json!("cubic-dist"));
        m.insert("version".into(), json!(VERSION));
        m.insert("command".into(), json!(self.command));
        m.insert("config".into(), Value::Object(self.config.clone()));
        m
    }

    /// Numeric table: CSV with header comments, or JSON rows.
    fn table(&mut self, columns: &[&str], rows: impl Iterator<Item = Vec<Cell>>) -> Result<(), Failure> {
        if self.json {
            let rows: Vec<Value> = rows
                .map(|r| {
                    let obj: Map<String, Value> = columns.iter().map(|c| c.to_string()).zip(r.into_iter().map(Cell::json)).collect();
                    Value::Object(obj)
                })
                .collect();
            let mut m = self.envelope();
            m.insert("rows".into(), Value::Array(rows));
            serde_json::to_writer_pretty(&mut self.w, &Value::Object(m)).map_err(io::Error::from)?;
            writeln!(self.w)?;
        } else {
            self.header_lines()?;
            let mut w = csv::Writer::from_writer(&mut self.w);
            w.write_record(columns)?;
            for r in rows {
                w.write_record(r.into_iter().map(Cell::text))?;
            }
            w.flush()?;
        }
        Ok(())
    }

    fn finish(mut self) -> io::Result<()> {
        self.w.flush()
    }
}

enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Missing,
}

impl Cell {
    fn text(self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => num(x),
            Cell::Text(s) => s,
            Cell::Missing => String::new(),
        }
    }

    fn json(self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Num(x) => json_num(x),
            Cell::Text(s) => json!(s),
            Cell::Missing => Value::Null,
        }
    }
}

fn check_sigma(sigma: f64) -> Result<(), Failure> {
    if sigma > 0.5 && sigma.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("sigma must exceed 1/2, got {sigma}")))
    }
}

fn eval_params(p: &ParamArgs, batch: bool) -> Result<EvalParams, Failure> {
    let mut e = if batch { EvalParams::batch() } else { EvalParams::default() };
    if let Some(c) = p.cutoff {
        e.prime_cutoff = c;
        e.series_cutoff = e.series_cutoff.max(c);
    }
    if let Some(x) = p.smooth {
        e.smoothing = Smoothing::Fixed(x);
    }
    e.validate()?;
    Ok(e)
}

/// Records the resolved evaluation parameters in the output header.
fn echo_params(config: &mut Map<String, Value>, p: &EvalParams) {
    config.insert("cutoff".into(), json!(p.prime_cutoff));
    config.insert(
        "smooth".into(),
        match p.smoothing {
            Smoothing::Fixed(x) => json!(x),
            Smoothing::Scaled(f) => json!(format!("{f} N(c)")),
        },
    );
    config.insert("series_cutoff".into(), json!(p.series_cutoff));
    config.insert("weight_span".into(), json!(p.weight_span));
}

fn grid(lo: f64, hi: f64, step: f64, what: &str) -> Result<Vec<f64>, Failure> {
    if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(invalid(format!("{what} grid needs min <= max and step > 0")));
    }
    if (hi - lo) / step > 1e8 {
        return Err(invalid(format!("{what} grid has more than 1e8 points")));
    }
    Ok(linspace_step(lo, hi, step))
}

fn config_of<T: Serialize>(args: &T) -> Map<String, Value> {
    match serde_json::to_value(args) {
        Ok(Value::Object(m)) => m,
        _ => Map::new(),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| invalid(e.to_string()))?;
    }
    let (command, mut config) = match &cli.command {
        Command::Primes(a) => ("primes", config_of(a)),
        Command::Moduli(a) => ("moduli", config_of(a)),
        Command::Symbol(a) => ("symbol", config_of(a)),
        Command::Lvalue(a) => ("lvalue", config_of(a)),
        Command::Lvalues(a) => ("lvalues", config_of(a)),
        Command::Charfn(a) => ("charfn", config_of(a)),
        Command::Density(a) => ("density", config_of(a)),
        Command::Compare(a) => ("compare", config_of(a)),
        Command::Count(a) => ("count", config_of(a)),
        Command::Montecarlo(a) => ("montecarlo", config_of(a)),
        Command::Reproduce(a) => ("reproduce", config_of(a)),
    };
    config.insert("output_format".into(), json!(if cli.json { "json" } else { "csv" }));
    config.insert("threads".into(), json!(cli.threads));
    if let Some(p) = &cli.output {
        config.insert("output_path".into(), json!(p.display().to_string()));
    }
    let w: Box<dyn Write> = match &cli.output {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let mut sink = Sink {
        w,
        json: cli.json,
        command,
        config,
    };
    match cli.command {
        Command::Primes(a) => {
            if a.max_norm < 3 {
                return Err(invalid("max-norm must be at least 3"));
            }
            let primes = enumerate_primes(a.max_norm);
            if sink.json {
                let mut m = sink.envelope();
                m.insert("rows".into(), serde_json::to_value(&primes).map_err(io::Error::from)?);
                serde_json::to_writer_pretty(&mut sink.w, &Value::Object(m)).map_err(io::Error::from)?;
                writeln!(sink.w)?;
            } else {
                sink.header_lines()?;
                write_primes_csv(&mut sink.w, &primes)?;
            }
        }
        Command::Moduli(a) => {
            if a.max_norm < 1 {
                return Err(invalid("max-norm must be at least 1"));
            }
            let moduli = enumerate_c(a.max_norm);
            if sink.json {
                let mut m = sink.envelope();
                m.insert("rows".into(), serde_json::to_value(&moduli).map_err(io::Error::from)?);
                serde_json::to_writer_pretty(&mut sink.w, &Value::Object(m)).map_err(io::Error::from)?;
                writeln!(sink.w)?;
            } else {
                sink.header_lines()?;
                write_moduli_csv(&mut sink.w, &moduli)?;
            }
        }
        Command::Symbol(a) => {
            let v = symbol(a.alpha, a.lambda).map_err(|e| invalid(e.to_string()))?;
            if sink.json {
                let mut m = sink.envelope();
                m.insert("value".into(), json!(v.to_string()));
                m.insert("exponent".into(), v.exponent().map_or(Value::Null, |e| json!(e)));
                serde_json::to_writer_pretty(&mut sink.w, &Value::Object(m)).map_err(io::Error::from)?;
                writeln!(sink.w)?;
            } else {
                sink.header_lines()?;
                writeln!(sink.w, "{v}")?;
            }
        }
        Command::Lvalue(a) => {
            check_sigma(a.case.sigma)?;
            let c = ModulusC::new(a.c).map_err(|e| invalid(e.to_string()))?;
            let params = eval_params(&a.params, false)?;
            echo_params(&mut sink.config, &params);
            let v = Evaluator::new(a.case.sigma, params)?.eval(&c, a.case.case)?;
            sink.table(
                &["norm", "a", "b", "sigma", "case", "value", "err_est"],
                std::iter::once(vec![
                    Cell::Int(c.norm as i64),
                    Cell::Int(c.value.a),
                    Cell::Int(c.value.b),
                    Cell::Num(a.case.sigma),
                    Cell::Text(a.case.case.as_str().into()),
                    Cell::Num(v.value),
                    Cell::Num(v.err_est),
                ]),
            )?;
        }
        Command::Lvalues(a) => {
            check_sigma(a.case.sigma)?;
            let params = eval_params(&a.params, true)?;
            echo_params(&mut sink.config, &params);
            let ev = Evaluator::new(a.case.sigma, params)?;
            let moduli = enumerate_c(a.max_norm);
            use rayon::prelude::*;
            let values: Vec<_> = moduli.par_iter().map(|c| ev.eval(c, a.case.case)).collect();
            // excluded moduli (|L_c| numerically zero) get empty value fields
            sink.table(
                &["norm", "a", "b", "value", "err_est"],
                moduli.iter().zip(values).map(|(c, v)| {
                    let (val, err) = match v {
                        Ok(v) => (Cell::Num(v.value), Cell::Num(v.err_est)),
                        Err(_) => (Cell::Missing, Cell::Missing),
                    };
                    vec![Cell::Int(c.norm as i64), Cell::Int(c.value.a), Cell::Int(c.value.b), val, err]
                }),
            )?;
        }
        Command::Charfn(a) => {
            check_sigma(a.case.sigma)?;
            if a.cutoff < 7 {
                return Err(invalid("cutoff must be at least 7"));
            }
            let ys = grid(a.y_min, a.y_max, a.y_step, "y")?;
            let cf = CharFn::real(a.case.sigma, a.case.case, a.cutoff);
            use rayon::prelude::*;
            let vals: Vec<_> = ys.par_iter().map(|&y| cf.eval(y)).collect();
            sink.table(
                &["y", "re", "im", "abs", "tail_est"],
                ys.iter().zip(vals).map(|(&y, v)| {
                    vec![
                        Cell::Num(y),
                        Cell::Num(v.value.re),
                        Cell::Num(v.value.im),
                        Cell::Num(v.value.norm()),
                        Cell::Num(v.tail_est),
                    ]
                }),
            )?;
        }
        Command::Density(a) => {
            check_sigma(a.case.sigma)?;
            if a.cutoff < 7 {
                return Err(invalid("cutoff must be at least 7"));
            }
            let q = QuadParams {
                prime_cutoff: a.cutoff,
                ..QuadParams::default()
            };
            let g = match (a.z_min, a.z_max, a.z_step) {
                (Some(lo), Some(hi), Some(step)) => invert(a.case.sigma, a.case.case, &grid(lo, hi, step, "z")?, &q)?,
                _ => invert_auto(a.case.sigma, a.case.case, &q)?,
            };
            sink.config.insert("y_max".into(), json_num(g.y_max));
            sink.config.insert("y_step".into(), json_num(g.y_step));
            sink.config.insert("refine_change".into(), json_num(g.refine_change));
            let rows = g
                .z_values
                .iter()
                .zip(&g.m_values)
                .zip(&g.cdf_values)
                .map(|((&z, &m), &f)| vec![Cell::Num(z), Cell::Num(m), Cell::Num(f)]);
            sink.table(&["z", "density", "cdf"], rows)?;
        }
        Command::Compare(a) => {
            check_sigma(a.case.sigma)?;
            let q = QuadParams {
                prime_cutoff: a.cutoff,
                ..QuadParams::default()
            };
            let cache = SampleCache::from_env();
            let set = empirical_cdf(a.max_norm, a.case.sigma, a.case.case, &EvalParams::batch(), Some(&cache))?;
            if set.samples.len() == set.n_excluded() {
                return Err(invalid(format!("no moduli with norm <= {}", a.max_norm)));
            }
            let g = invert_auto(a.case.sigma, a.case.case, &q)?;
            let mut cells = vec![
                Cell::Int(set.samples.len() as i64),
                Cell::Int(set.n_excluded() as i64),
                Cell::Num(ks_distance(&set.cdf(), &g)),
            ];
            let mut cols = vec!["n_samples", "n_excluded", "ks"];
            if a.weighted {
                cols.push("ks_weighted");
                cells.push(Cell::Num(ks_distance(&set.weighted_cdf(), &g)));
            }
            if sink.json {
                let mut m = sink.envelope();
                for (c, v) in cols.iter().zip(cells) {
                    m.insert(c.to_string(), v.json());
                }
                serde_json::to_writer_pretty(&mut sink.w, &Value::Object(m)).map_err(io::Error::from)?;
                writeln!(sink.w)?;
            } else {
                sink.table(&cols, std::iter::once(cells))?;
            }
        }
        Command::Count(a) => {
            if a.max_norm < 1 {
                return Err(invalid("max-norm must be at least 1"));
            }
            let r = count_c(a.max_norm);
            let y = a.max_norm as f64;
            sink.table(
                &["y", "count", "weighted", "count_over_y", "weighted_over_y", "predicted_slope"],
                std::iter::once(vec![
                    Cell::Int(a.max_norm as i64),
                    Cell::Int(r.count as i64),
                    Cell::Num(r.weighted),
                    Cell::Num(r.count as f64 / y),
                    Cell::Num(r.weighted / y),
                    Cell::Num(r.predicted_slope),
                ]),
            )?;
        }
        Command::Montecarlo(a) => {
            let cfg = ModelConfig {
                sigma: a.case.sigma,
                case: a.case.case,
                prime_cutoff: a.cutoff,
                n_samples: a.samples,
                seed: a.seed,
            };
            let sampler = Sampler::from_config(&cfg).map_err(|e| invalid(e.to_string()))?;
            let draws = sampler.draws(a.samples);
            sink.table(
                &["sample_index", "value"],
                draws.into_iter().enumerate().map(|(i, v)| vec![Cell::Int(i as i64), Cell::Num(v)]),
            )?;
        }
        Command::Reproduce(a) => {
            let cache = SampleCache::from_env();
            let report = reproduce(a.profile, Some(cache), |r| eprintln!("{}", r.line()));
            debug_assert_eq!(report.criteria.len(), CRITERIA.len());
            let mut m = sink.envelope();
            m.insert("report".into(), serde_json::to_value(&report).map_err(io::Error::from)?);
            serde_json::to_writer_pretty(&mut sink.w, &Value::Object(m)).map_err(io::Error::from)?;
            writeln!(sink.w)?;
            sink.finish()?;
            return if report.passed { Ok(()) } else { Err(Failure::CriteriaFailed) };
        }
    }
    sink.finish()?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::NoConvergence(msg)) => {
            eprintln!("error: numerical non-convergence: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::CriteriaFailed) => {
            eprintln!("error: some acceptance criteria failed");
            ExitCode::from(3)
        }
    }
}
