//! Batch commands for the fracppk library: `pmf`, `sample`, `field` and `verify`.
//!
//! Every command is deterministic given its flags and `--seed`. Output goes
//! to `--out` (written atomically) or to stdout.

use clap::{Args, Parser, Subcommand, ValueEnum};
use fracppk::combinatorics::OrderParams;
use fracppk::fields::{count_in_region, sample_field, BoxRegion, MarkedPointField};
use fracppk::io::{atomic_write, fmt_f64, json_document, CsvDoc};
use fracppk::processes::{
    pmf_table, sample_fractional_with_step, sample_ppok_path, sample_tf_path, ppok_count_at, FracParams, FracVariant,
    MarkedEventPath, PmfTable, PmfVariant, DEFAULT_STEP_FRACTION,
};
use fracppk::subordinators::SubordinatorSpec;
use fracppk::verify::{
    compare_pmf, estimate_pmf, governing_residual_sf_pgf, governing_residual_tf, martingale_check, Compensator,
    GofReport, MartingaleOptions, MartingaleReport,
};
use fracppk::RngStream;
use serde_json::{json, Value};
use std::io::Write;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "FRACPPK_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("error: {0}")]
    Usage(String),
    #[error("numerical error: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<fracppk::Error> for CliError {
    fn from(e: fracppk::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "fracppk", version, about = "Fractional Poisson processes and fields of order k")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate an exact pmf for n = 0..=nmax.
    Pmf(PmfArgs),
    /// Draw counts (or whole event paths) from a sampler.
    Sample(SampleArgs),
    /// Generate a marked Poisson field of order k in a box.
    Field(FieldArgs),
    /// Run verification suites and write a JSON report.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct OrderArgs {
    /// Order k: jumps are uniform on {1..k}.
    #[arg(short = 'k', long = "order", default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
}

impl OrderArgs {
    fn params(&self) -> CliResult<OrderParams> {
        Ok(OrderParams::new(self.k, self.lambda)?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct FracArgs {
    /// Space-fractional index in (0,1].
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Time-fractional index in (0,1].
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Space tempering.
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
    /// Time tempering.
    #[arg(long, default_value_t = 0.0)]
    pub nu: f64,
}

impl FracArgs {
    fn params(&self) -> CliResult<FracParams> {
        Ok(FracParams::new(self.alpha, self.beta, self.mu, self.nu)?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; stdout when omitted.
    #[arg(short = 'o', long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PmfVariantArg {
    Ppok,
    Tfppok,
    Sfppok,
    Field,
}

impl From<PmfVariantArg> for PmfVariant {
    fn from(v: PmfVariantArg) -> Self {
        match v {
            PmfVariantArg::Ppok => PmfVariant::Ppok,
            PmfVariantArg::Tfppok => PmfVariant::Tfppok,
            PmfVariantArg::Sfppok => PmfVariant::Sfppok,
            PmfVariantArg::Field => PmfVariant::Field,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PmfArgs {
    #[arg(long, value_enum)]
    pub variant: PmfVariantArg,
    #[command(flatten)]
    pub order: OrderArgs,
    #[command(flatten)]
    pub frac: FracArgs,
    /// Time, or region measure for `--variant field`.
    #[arg(short = 't', long = "time", visible_alias = "area", default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value_t = 60)]
    pub nmax: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SampleVariantArg {
    Ppok,
    Tf,
    Sf,
    Ttsf,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[arg(long, value_enum)]
    pub variant: SampleVariantArg,
    #[command(flatten)]
    pub order: OrderArgs,
    #[command(flatten)]
    pub frac: FracArgs,
    #[arg(short = 't', long = "time", default_value_t = 1.0)]
    pub t: f64,
    /// Number of draws or paths.
    #[arg(short = 'n', long = "n-samples", default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Emit full marked event paths on [0, t] (ppok and tf only).
    #[arg(long)]
    pub path: bool,
    /// Grid step of inverse tempered clocks, relative to t.
    #[arg(long, default_value_t = DEFAULT_STEP_FRACTION)]
    pub step_fraction: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FieldArgs {
    #[command(flatten)]
    pub order: OrderArgs,
    /// Lower corner, comma separated; zeros when omitted.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub lower: Vec<f64>,
    /// Upper corner, comma separated.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub upper: Vec<f64>,
    /// Query box `l1,l2,..:u1,u2,..`; its mark sum is reported. Repeatable.
    #[arg(long, allow_hyphen_values = true)]
    pub query: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    PmfGof,
    Governing,
    Martingale,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpecKind {
    Stable,
    MixedStable,
    TemperedStable,
    MixtureTemperedStable,
    Gamma,
    InverseGaussian,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(short = 'k', long = "order", default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Stable index: SFPPoK in pmf-gof, and the `stable`/`tempered-stable` clocks.
    #[arg(long, default_value_t = 0.7)]
    pub alpha: f64,
    /// Inverse-stable index of TFPPoK in pmf-gof and governing.
    #[arg(long, default_value_t = 0.7)]
    pub beta: f64,
    /// Draws per sampler in pmf-gof.
    #[arg(long, default_value_t = 100_000)]
    pub n_samples: usize,
    /// Paths per martingale check.
    #[arg(long, default_value_t = 20_000)]
    pub n_paths: usize,
    /// Martingale clock; all six kinds when omitted.
    #[arg(long, value_enum)]
    pub spec: Option<SpecKind>,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [0.4, 0.6])]
    pub weights: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.8])]
    pub alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 2.0])]
    pub mus: Vec<f64>,
    /// Gamma subordinator shape.
    #[arg(long, default_value_t = 2.0)]
    pub shape: f64,
    /// Gamma subordinator rate.
    #[arg(long, default_value_t = 1.0)]
    pub rate: f64,
    /// Inverse Gaussian δ.
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Inverse Gaussian γ.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Use the wrong compensator λt; the martingale suite must then fail.
    #[arg(long)]
    pub negative_control: bool,
    /// Report file; stdout when omitted.
    #[arg(short = 'o', long)]
    pub out: Option<PathBuf>,
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub body: Vec<u8>,
    pub passed: bool,
    /// Human-readable summary printed on stderr.
    pub summary: Option<String>,
}

impl Outcome {
    fn ok(body: String) -> Self {
        Self {
            body: body.into_bytes(),
            passed: true,
            summary: None,
        }
    }
}

/// Caps the global rayon pool at `FRACPPK_THREADS` when set.
pub fn init_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(CliError::Usage(format!("{THREADS_ENV} must be at least 1")));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs a parsed command and returns its output without writing it.
pub fn execute(cli: &Cli) -> CliResult<Outcome> {
    match &cli.command {
        Command::Pmf(a) => cmd_pmf(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Field(a) => cmd_field(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

/// Runs a command and delivers its output to `--out` or `stdout`; returns the exit code.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let outcome = match init_threads().and_then(|_| execute(cli)) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            return e.exit_code();
        }
    };
    let out = match &cli.command {
        Command::Pmf(a) => a.output.out.clone(),
        Command::Sample(a) => a.output.out.clone(),
        Command::Field(a) => a.output.out.clone(),
        Command::Verify(a) => a.out.clone(),
    };
    let written = match out {
        Some(path) => atomic_write(&path, &outcome.body).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => stdout.write_all(&outcome.body).map_err(|e| format!("cannot write output: {e}")),
    };
    if let Err(m) = written {
        let _ = writeln!(stderr, "error: {m}");
        return EXIT_USAGE;
    }
    if let Some(s) = &outcome.summary {
        let _ = write!(stderr, "{s}");
    }
    if outcome.passed {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    }
}

fn render_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn json_doc<P: serde::Serialize, D: serde::Serialize>(command: &str, params: &P, data: &D) -> CliResult<String> {
    let v = json_document(command, params, data).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(render_json(&v))
}

fn frac_params_echo(doc: &mut CsvDoc, f: &FracParams) {
    doc.param("alpha", f.alpha).param("beta", f.beta).param("mu", f.mu).param("nu", f.nu);
}

pub fn cmd_pmf(a: &PmfArgs) -> CliResult<Outcome> {
    let p = a.order.params()?;
    let f = a.frac.params()?;
    let variant: PmfVariant = a.variant.into();
    if variant == PmfVariant::Field && a.t < 0.0 || variant != PmfVariant::Field && a.t <= 0.0 {
        return Err(CliError::Usage(format!("time/area must be positive, got {}", a.t)));
    }
    let table = pmf_table(variant, &p, &f, a.t, a.nmax)?;
    let body = match a.output.format {
        Format::Csv => pmf_csv(&table).render(),
        Format::Json => json_doc("pmf", &json!({"variant": variant.name()}), &table)?,
    };
    Ok(Outcome::ok(body))
}

pub fn pmf_csv(table: &PmfTable) -> CsvDoc {
    let mut doc = CsvDoc::new("pmf", &["n", "prob"]);
    doc.param("variant", table.variant.name())
        .param("k", table.order.k)
        .param("lambda", table.order.lambda);
    frac_params_echo(&mut doc, &table.frac);
    doc.param(if table.variant == PmfVariant::Field { "area" } else { "t" }, table.t)
        .param("nmax", table.n_max())
        .param("truncation_mass", fmt_f64(table.truncation_mass));
    for (n, q) in table.probs.iter().enumerate() {
        doc.row(vec![n.to_string(), fmt_f64(*q)]);
    }
    doc
}

fn sample_variant(v: SampleVariantArg) -> Option<FracVariant> {
    match v {
        SampleVariantArg::Ppok => None,
        SampleVariantArg::Tf => Some(FracVariant::Tf),
        SampleVariantArg::Sf => Some(FracVariant::Sf),
        SampleVariantArg::Ttsf => Some(FracVariant::Ttsf),
    }
}

fn variant_name(v: SampleVariantArg) -> &'static str {
    match v {
        SampleVariantArg::Ppok => "ppok",
        SampleVariantArg::Tf => "tf",
        SampleVariantArg::Sf => "sf",
        SampleVariantArg::Ttsf => "ttsf",
    }
}

pub fn cmd_sample(a: &SampleArgs) -> CliResult<Outcome> {
    let p = a.order.params()?;
    let f = a.frac.params()?;
    if a.n == 0 {
        return Err(CliError::Usage("--n-samples must be at least 1".into()));
    }
    if !(a.t > 0.0 && a.t.is_finite()) {
        return Err(CliError::Usage(format!("time must be positive, got {}", a.t)));
    }
    if !(a.step_fraction > 0.0 && a.step_fraction <= 1.0) {
        return Err(CliError::Usage(format!("--step-fraction must lie in (0,1], got {}", a.step_fraction)));
    }
    let stream = RngStream::new(a.seed, 0);
    let params = json!({
        "variant": variant_name(a.variant), "k": p.k, "lambda": p.lambda,
        "alpha": f.alpha, "beta": f.beta, "mu": f.mu, "nu": f.nu,
        "t": a.t, "n": a.n, "seed": a.seed, "path": a.path, "step_fraction": a.step_fraction,
    });
    let doc_params = |doc: &mut CsvDoc| {
        doc.param("variant", variant_name(a.variant)).param("k", p.k).param("lambda", p.lambda);
        frac_params_echo(doc, &f);
        doc.param("t", a.t).param("n", a.n).param("seed", a.seed).param("step_fraction", a.step_fraction);
    };

    if a.path {
        let paths: Vec<MarkedEventPath> = match a.variant {
            SampleVariantArg::Ppok => stream.try_par_map(a.n, |r| sample_ppok_path(&p, a.t, r))?,
            SampleVariantArg::Tf => stream.try_par_map(a.n, |r| sample_tf_path(&p, f.beta, a.t, r))?,
            _ => return Err(CliError::Usage("--path is available for --variant ppok and tf only".into())),
        };
        let body = match a.output.format {
            Format::Csv => {
                let mut doc = CsvDoc::new("sample", &["path", "time", "mark", "count"]);
                doc_params(&mut doc);
                doc.param("path", true);
                for (i, path) in paths.iter().enumerate() {
                    for ((t, m), c) in path.event_times.iter().zip(&path.marks).zip(&path.counts) {
                        doc.row(vec![i.to_string(), fmt_f64(*t), m.to_string(), c.to_string()]);
                    }
                }
                doc.render()
            }
            Format::Json => json_doc("sample", &params, &paths)?,
        };
        return Ok(Outcome::ok(body));
    }

    let step = a.step_fraction * a.t;
    let draws: Vec<u64> = match sample_variant(a.variant) {
        None => stream.par_map(a.n, |r| ppok_count_at(&p, a.t, r)),
        Some(v) => stream.try_par_map(a.n, |r| sample_fractional_with_step(&p, &f, v, a.t, step, r))?,
    };
    let body = match a.output.format {
        Format::Csv => {
            let mut doc = CsvDoc::new("sample", &["draw", "count"]);
            doc_params(&mut doc);
            for (i, d) in draws.iter().enumerate() {
                doc.row(vec![i.to_string(), d.to_string()]);
            }
            doc.render()
        }
        Format::Json => json_doc("sample", &params, &draws)?,
    };
    Ok(Outcome::ok(body))
}

fn parse_query(q: &str, dim: usize) -> CliResult<BoxRegion> {
    let bad = || CliError::Usage(format!("query {q:?} must look like l1,..,ld:u1,..,ud with d = {dim}"));
    let (lo, hi) = q.split_once(':').ok_or_else(bad)?;
    let parse = |s: &str| -> CliResult<Vec<f64>> { s.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| bad())).collect() };
    let (lo, hi) = (parse(lo)?, parse(hi)?);
    if lo.len() != dim || hi.len() != dim {
        return Err(bad());
    }
    Ok(BoxRegion::new(lo, hi)?)
}

/// Samples the field described by `a`; zero-measure boxes give an empty field.
pub fn field_points(a: &FieldArgs) -> CliResult<(MarkedPointField, Vec<(BoxRegion, u64)>)> {
    let p = a.order.params()?;
    let lower = if a.lower.is_empty() { vec![0.0; a.upper.len()] } else { a.lower.clone() };
    let ambient = BoxRegion::new(lower, a.upper.clone())?;
    let queries: Vec<BoxRegion> = a.query.iter().map(|q| parse_query(q, ambient.dim())).collect::<CliResult<_>>()?;
    let field = if ambient.measure() > 0.0 {
        sample_field(&p, &ambient, &mut RngStream::new(a.seed, 0).rng())?
    } else {
        MarkedPointField {
            ambient: ambient.clone(),
            points: Vec::new(),
            marks: Vec::new(),
        }
    };
    let counts = queries
        .into_iter()
        .map(|q| {
            let c = count_in_region(&field, &q)?;
            Ok((q, c))
        })
        .collect::<CliResult<_>>()?;
    Ok((field, counts))
}

pub fn cmd_field(a: &FieldArgs) -> CliResult<Outcome> {
    let (field, counts) = field_points(a)?;
    let d = field.ambient.dim();
    let body = match a.output.format {
        Format::Csv => {
            let cols: Vec<String> = (1..=d).map(|i| format!("x{i}")).chain(std::iter::once("mark".into())).collect();
            let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
            let mut doc = CsvDoc::new("field", &col_refs);
            doc.param("k", a.order.k)
                .param("lambda", a.order.lambda)
                .param("lower", join(&field.ambient.lower))
                .param("upper", join(&field.ambient.upper))
                .param("seed", a.seed)
                .param("points", field.len());
            for (x, m) in field.points.iter().zip(&field.marks) {
                let mut row: Vec<String> = x.iter().map(|v| fmt_f64(*v)).collect();
                row.push(m.to_string());
                doc.row(row);
            }
            for (q, c) in &counts {
                doc.trailer.push(format!("query lower={} upper={} count={c}", join(&q.lower), join(&q.upper)));
            }
            doc.render()
        }
        Format::Json => {
            let queries: Vec<Value> = counts
                .iter()
                .map(|(q, c)| json!({"lower": q.lower, "upper": q.upper, "count": c}))
                .collect();
            json_doc(
                "field",
                &json!({"k": a.order.k, "lambda": a.order.lambda, "seed": a.seed}),
                &json!({"field": field, "queries": queries}),
            )?
        }
    };
    Ok(Outcome::ok(body))
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(";")
}

fn spec_of(kind: SpecKind, a: &VerifyArgs) -> SubordinatorSpec {
    match kind {
        SpecKind::Stable => SubordinatorSpec::Stable { alpha: a.alpha },
        SpecKind::MixedStable => SubordinatorSpec::MixedStable {
            weights: a.weights.clone(),
            alphas: a.alphas.clone(),
        },
        SpecKind::TemperedStable => SubordinatorSpec::TemperedStable { alpha: a.alpha, mu: a.mu },
        SpecKind::MixtureTemperedStable => SubordinatorSpec::MixtureTemperedStable {
            weights: a.weights.clone(),
            alphas: a.alphas.clone(),
            mus: a.mus.clone(),
        },
        SpecKind::Gamma => SubordinatorSpec::Gamma { p: a.shape, rate: a.rate },
        SpecKind::InverseGaussian => SubordinatorSpec::InverseGaussian {
            delta: a.delta,
            gamma: a.gamma,
        },
    }
}

const ALL_SPECS: [SpecKind; 6] = [
    SpecKind::Stable,
    SpecKind::MixedStable,
    SpecKind::TemperedStable,
    SpecKind::MixtureTemperedStable,
    SpecKind::Gamma,
    SpecKind::InverseGaussian,
];

/// Thresholds of the `pmf-gof` suite.
pub const GOF_MAX_TV: f64 = 0.01;
pub const GOF_MIN_P: f64 = 0.001;
/// Thresholds of the `governing` suite.
pub const TF_RESIDUAL_TOL: f64 = 5e-2;
pub const SF_RESIDUAL_TOL: f64 = 1e-6;

struct SuiteResult {
    name: &'static str,
    pass: bool,
    details: Value,
    lines: Vec<String>,
}

fn suite_pmf_gof(a: &VerifyArgs) -> CliResult<SuiteResult> {
    let p = OrderParams::new(a.k, a.lambda)?;
    let f = FracParams::new(a.alpha, a.beta, 0.0, 0.0)?;
    let n_max = 30;
    let cases: [(&str, PmfVariant, Option<FracVariant>); 3] = [
        ("ppok", PmfVariant::Ppok, None),
        ("tfppok", PmfVariant::Tfppok, Some(FracVariant::Tf)),
        ("sfppok", PmfVariant::Sfppok, Some(FracVariant::Sf)),
    ];
    let mut pass = true;
    let mut details = Vec::new();
    let mut lines = Vec::new();
    for (i, (name, pv, fv)) in cases.iter().enumerate() {
        let table = pmf_table(*pv, &p, &f, 1.0, n_max)?;
        let stream = RngStream::new(a.seed, 100 + i as u64);
        let emp = match fv {
            None => estimate_pmf(|r| Ok(ppok_count_at(&p, 1.0, r)), n_max, a.n_samples, &stream)?,
            Some(v) => estimate_pmf(|r| fracppk::processes::sample_fractional(&p, &f, *v, 1.0, r), n_max, a.n_samples, &stream)?,
        };
        let rep: GofReport = compare_pmf(&emp, &table)?;
        let ok = rep.tv_distance < GOF_MAX_TV && rep.p_value > GOF_MIN_P;
        pass &= ok;
        lines.push(format!(
            "  {name:<8} tv={:.4} chi2={:.1} dof={} p={:.4} {}",
            rep.tv_distance,
            rep.chi2_stat,
            rep.dof,
            rep.p_value,
            if ok { "ok" } else { "FAIL" }
        ));
        details.push(json!({"process": name, "pass": ok, "report": rep}));
    }
    Ok(SuiteResult {
        name: "pmf-gof",
        pass,
        details: Value::Array(details),
        lines,
    })
}

fn suite_governing(a: &VerifyArgs) -> CliResult<SuiteResult> {
    let p = OrderParams::new(a.k, a.lambda)?;
    let grid: Vec<f64> = (0..500).map(|i| i as f64 * 2.0 / 499.0).collect();
    let mut tf = Vec::new();
    for n in 0..=5 {
        tf.push(governing_residual_tf(&p, a.beta, n, &grid)?);
    }
    let sf_grid: Vec<f64> = (1..=50).map(|i| i as f64 * 0.04).collect();
    let sf = governing_residual_sf_pgf(&p, a.alpha, 0.5, &sf_grid, 1e-4)?;
    let tf_max = tf.iter().cloned().fold(0.0, f64::max);
    let pass = tf_max < TF_RESIDUAL_TOL && sf < SF_RESIDUAL_TOL;
    Ok(SuiteResult {
        name: "governing",
        pass,
        details: json!({"tf_residuals": tf, "tf_tolerance": TF_RESIDUAL_TOL, "sf_pgf_residual": sf, "sf_tolerance": SF_RESIDUAL_TOL}),
        lines: vec![
            format!("  tf  max residual n<=5: {tf_max:.3e} (tol {TF_RESIDUAL_TOL:e})"),
            format!("  sf  pgf residual:      {sf:.3e} (tol {SF_RESIDUAL_TOL:e})"),
        ],
    })
}

fn suite_martingale(a: &VerifyArgs) -> CliResult<SuiteResult> {
    let grid = [0.5, 1.0, 1.5, 2.0];
    let kinds: Vec<SpecKind> = match a.spec {
        Some(k) => vec![k],
        None => ALL_SPECS.to_vec(),
    };
    let opts = |c: Compensator| MartingaleOptions {
        n_paths: a.n_paths,
        compensator: c,
        ..Default::default()
    };
    let main = if a.negative_control { Compensator::Linear } else { Compensator::Clock };
    let mut pass = true;
    let mut reports: Vec<MartingaleReport> = Vec::new();
    let mut lines = Vec::new();
    for (i, kind) in kinds.iter().enumerate() {
        let spec = spec_of(*kind, a);
        let rep = martingale_check(&spec, a.lambda, &grid, &opts(main), &RngStream::new(a.seed, 200 + i as u64))?;
        pass &= rep.pass;
        lines.push(format!(
            "  {:<24} max|z|={:.2} (threshold {:.2}) {}",
            rep.subordinator,
            rep.max_abs_z.iter().cloned().fold(0.0, f64::max),
            rep.z_threshold,
            if rep.pass { "ok" } else { "FAIL" }
        ));
        reports.push(rep);
    }
    // without --negative-control, the wrong compensator must be rejected
    let mut control = Value::Null;
    if !a.negative_control {
        let spec = SubordinatorSpec::Stable { alpha: 0.7 };
        let rep = martingale_check(&spec, a.lambda, &grid, &opts(Compensator::Linear), &RngStream::new(a.seed, 299))?;
        let rejected = !rep.pass;
        pass &= rejected;
        lines.push(format!(
            "  negative control (λt)    {}",
            if rejected { "rejected, ok" } else { "NOT rejected, FAIL" }
        ));
        control = json!({"rejected": rejected, "report": rep});
    }
    Ok(SuiteResult {
        name: "martingale",
        pass,
        details: json!({"checks": reports, "negative_control": control}),
        lines,
    })
}

pub fn cmd_verify(a: &VerifyArgs) -> CliResult<Outcome> {
    let suites: Vec<fn(&VerifyArgs) -> CliResult<SuiteResult>> = match a.suite {
        Suite::PmfGof => vec![suite_pmf_gof],
        Suite::Governing => vec![suite_governing],
        Suite::Martingale => vec![suite_martingale],
        Suite::All => vec![suite_pmf_gof, suite_governing, suite_martingale],
    };
    let mut results = Vec::new();
    for s in suites {
        results.push(s(a)?);
    }
    let pass = results.iter().all(|r| r.pass);
    let mut summary = String::new();
    for r in &results {
        summary.push_str(&format!("{:<11} {}\n", r.name, if r.pass { "PASS" } else { "FAIL" }));
        for l in &r.lines {
            summary.push_str(l);
            summary.push('\n');
        }
    }
    let params = json!({
        "suite": format!("{:?}", a.suite).to_lowercase(), "seed": a.seed, "k": a.k, "lambda": a.lambda,
        "alpha": a.alpha, "beta": a.beta, "n_samples": a.n_samples, "n_paths": a.n_paths,
        "negative_control": a.negative_control,
    });
    let data = json!({
        "pass": pass,
        "suites": results.iter().map(|r| json!({"name": r.name, "pass": r.pass, "details": r.details})).collect::<Vec<_>>(),
    });
    Ok(Outcome {
        body: json_doc("verify", &params, &data)?.into_bytes(),
        passed: pass,
        summary: Some(summary),
    })
}
