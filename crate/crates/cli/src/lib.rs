//! The `sptk` command line: extract, generate, roundtrip, bench, compare.
//!
//! Exit codes: 0 success, 1 I/O or format error, 2 infeasible or
//! unsupported request, 3 feature mismatch.

mod config;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use sptk_core::extraction::{
    build_counts, build_counts_hash, decision_metric, extract, hybrid_path, select_top3_modes, Method,
    MethodChoice, Path as DecisionPath,
};
use sptk_core::features::{self, FeatureSet, Format, Scope};
use sptk_core::generator::{generate, spec_from_features, GeneratorSpec};
use sptk_core::{load_frostt, write_frostt, CooTensor, DuplicatePolicy, ModeOrder};

pub use config::Config;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] sptk_core::Error),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("{0} features differ")]
    Mismatch(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use sptk_core::Error as E;
        match self {
            CliError::Core(e) => match e {
                E::Io(_)
                | E::Format { .. }
                | E::Index { .. }
                | E::Bounds { .. }
                | E::Duplicate { .. }
                | E::Parse(_)
                | E::InvalidTensor(_)
                | E::Arity { .. } => 1,
                _ => 2,
            },
            CliError::File { .. } => 1,
            CliError::Usage(_) | CliError::Unsupported(_) => 2,
            CliError::Mismatch(_) => 3,
        }
    }
}

type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Parser)]
#[command(name = "sptk", version, about = "Sparse tensor feature extraction and generation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Default)]
pub struct Common {
    /// Worker threads (default: available cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// JSON or key=value file supplying any flag; flags on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Omit wall times and worker counts so outputs are byte-stable.
    #[arg(long)]
    pub reproducible: bool,
}

#[derive(Debug, Clone, Args, Default)]
pub struct ExtractOpts {
    /// hash, sort, group or hybrid.
    #[arg(long)]
    pub method: Option<String>,
    /// all or top3.
    #[arg(long)]
    pub modes: Option<String>,
    /// Hybrid threshold on the product of the two leading mode sizes.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Auxiliary-memory cap of the grouping method, in words.
    #[arg(long)]
    pub group_cap_words: Option<u128>,
    /// reject or sum.
    #[arg(long)]
    pub duplicates: Option<String>,
}

#[derive(Debug, Clone, Args, Default)]
pub struct SpecOpts {
    /// Mode sizes, e.g. 100,100,100.
    #[arg(long)]
    pub dims: Option<String>,
    #[arg(long)]
    pub d_slc: Option<f64>,
    #[arg(long)]
    pub d_fib: Option<f64>,
    #[arg(long)]
    pub d_nz: Option<f64>,
    #[arg(long)]
    pub cv_fib: Option<f64>,
    #[arg(long)]
    pub cv_nz: Option<f64>,
    #[arg(long)]
    pub imbal_fib: Option<f64>,
    #[arg(long)]
    pub imbal_nz: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract the feature set of a .tns tensor.
    Extract {
        input: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: ExtractOpts,
        /// Declared mode sizes; default is the largest index per mode.
        #[arg(long)]
        dims: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// json or csv.
        #[arg(long)]
        format: Option<String>,
    },
    /// Generate a synthetic tensor from target features.
    Generate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        spec: SpecOpts,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Only tns is supported.
        #[arg(long)]
        format: Option<String>,
    },
    /// Extract, generate from the features, re-extract and report ratios.
    Roundtrip {
        input: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
        /// Sizes of the generated tensor; default is the input's.
        #[arg(long)]
        dims: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        duplicates: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Time each method per mode.
    Bench {
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
        /// Comma-separated methods (default: all four).
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        modes: Option<String>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compare two feature files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Relative tolerance on real features.
        #[arg(long, default_value_t = 1e-12)]
        tolerance: f64,
    },
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = stdout.write_all(text.as_bytes());
            } else {
                let _ = stderr.write_all(text.as_bytes());
            }
            return code;
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn common_of(cmd: &Command) -> Option<&Common> {
    match cmd {
        Command::Extract { common, .. }
        | Command::Generate { common, .. }
        | Command::Roundtrip { common, .. }
        | Command::Bench { common, .. } => Some(common),
        Command::Compare { .. } => None,
    }
}

fn dispatch(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let cfg = match common_of(&cmd).and_then(|c| c.config.as_ref()) {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let threads = match common_of(&cmd) {
        Some(c) => cfg.pick(c.threads, "threads")?,
        None => None,
    };
    let threads = match threads {
        Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    // Output is buffered so the pool closure only captures Send data.
    let mut out = Vec::new();
    let mut err = Vec::new();
    let result = pool.install(|| {
        let (stdout, stderr): (&mut dyn Write, &mut dyn Write) = (&mut out, &mut err);
        match cmd {
        Command::Extract {
            input,
            common,
            opts,
            dims,
            output,
            format,
        } => cmd_extract(&cfg, input, &common, &opts, dims, output, format, threads, stdout),
        Command::Generate {
            common,
            spec,
            output,
            format,
        } => cmd_generate(&cfg, &common, &spec, output, format, stdout, stderr),
        Command::Roundtrip {
            input,
            common,
            dims,
            seed,
            duplicates,
            output,
        } => cmd_roundtrip(&cfg, input, &common, dims, seed, duplicates, output, stdout, stderr),
        Command::Bench {
            inputs,
            common: _,
            method,
            modes,
            lambda,
            reps,
            output,
        } => cmd_bench(&cfg, inputs, method, modes, lambda, reps, output, stdout),
        Command::Compare { a, b, tolerance } => cmd_compare(&a, &b, tolerance, stdout),
        }
    });
    let flush = |w: &mut dyn Write, bytes: &[u8]| {
        w.write_all(bytes).and_then(|_| w.flush()).map_err(|source| CliError::File {
            path: "<stdout>".into(),
            source,
        })
    };
    flush(stdout, &out)?;
    flush(stderr, &err)?;
    result
}

pub fn parse_dims(s: &str) -> Result<Vec<u64>> {
    s.split([',', 'x'])
        .map(|x| {
            x.trim()
                .parse::<u64>()
                .map_err(|_| CliError::Usage(format!("bad mode size {x:?} in {s:?}")))
        })
        .collect()
}

fn parse_policy(s: Option<String>) -> Result<DuplicatePolicy> {
    match s.as_deref() {
        None | Some("reject") => Ok(DuplicatePolicy::Reject),
        Some("sum") | Some("sum-merge") => Ok(DuplicatePolicy::SumMerge),
        Some(o) => Err(CliError::Usage(format!("unknown duplicate policy {o:?}"))),
    }
}

fn load(path: &Path, dims: Option<&[u64]>, policy: DuplicatePolicy) -> Result<CooTensor> {
    let f = File::open(path).map_err(|source| CliError::File {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(load_frostt(BufReader::new(f), dims, policy)?)
}

fn check_output(path: Option<&Path>) -> Result<()> {
    if let Some(p) = path {
        let parent = p.parent().filter(|d| !d.as_os_str().is_empty());
        if let Some(d) = parent {
            if !d.is_dir() {
                return Err(CliError::File {
                    path: p.to_path_buf(),
                    source: std::io::Error::new(std::io::ErrorKind::NotFound, "output directory does not exist"),
                });
            }
        }
    }
    Ok(())
}

fn emit(path: Option<&Path>, bytes: &[u8], stdout: &mut dyn Write) -> Result<()> {
    let wrap = |source| CliError::File {
        path: path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf),
        source,
    };
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(wrap),
        None => stdout.write_all(bytes).map_err(wrap),
    }
}

fn require_input(input: Option<PathBuf>, cfg: &Config) -> Result<PathBuf> {
    cfg.pick::<PathBuf>(input, "input")?
        .ok_or_else(|| CliError::Usage("an input .tns path is required".into()))
}

fn feature_format(flag: Option<String>, cfg: &Config, output: Option<&Path>) -> Result<Format> {
    let from_ext = output
        .and_then(|p| p.extension())
        .and_then(|e| e.to_str())
        .filter(|e| *e == "csv")
        .map(|_| "csv".to_string());
    match cfg.pick(flag, "format")?.or(from_ext).as_deref() {
        None | Some("json") => Ok(Format::Json),
        Some("csv") => Ok(Format::Csv),
        Some(o) => Err(CliError::Unsupported(format!(
            "feature sets are written as json or csv, not {o}"
        ))),
    }
}

fn method_choice(cfg: &Config, opts: &ExtractOpts) -> Result<MethodChoice> {
    let mut c = MethodChoice::default();
    if let Some(m) = cfg.pick::<String>(opts.method.clone(), "method")? {
        c.method = m.parse()?;
    }
    if let Some(s) = cfg.pick::<String>(opts.modes.clone(), "modes")? {
        c.scope = s.parse()?;
    }
    if let Some(l) = cfg.pick(opts.lambda, "lambda")? {
        c.lambda = l;
    }
    if let Some(w) = cfg.pick(opts.group_cap_words, "group_cap_words")? {
        c.group_cap_words = w;
    }
    Ok(c)
}

#[allow(clippy::too_many_arguments)]
fn cmd_extract(
    cfg: &Config,
    input: Option<PathBuf>,
    common: &Common,
    opts: &ExtractOpts,
    dims: Option<String>,
    output: Option<PathBuf>,
    format: Option<String>,
    threads: usize,
    stdout: &mut dyn Write,
) -> Result<()> {
    let input = require_input(input, cfg)?;
    let output = cfg.pick(output, "output")?;
    check_output(output.as_deref())?;
    let format = feature_format(format, cfg, output.as_deref())?;
    let choice = method_choice(cfg, opts)?;
    let policy = parse_policy(cfg.pick(opts.duplicates.clone(), "duplicates")?)?;
    let dims = cfg.pick::<String>(dims, "dims")?.map(|d| parse_dims(&d)).transpose()?;
    let reproducible = common.reproducible || cfg.pick(None, "reproducible")?.unwrap_or(false);

    let t = load(&input, dims.as_deref(), policy)?;
    let start = Instant::now();
    let mut fs = extract(&t, &choice)?;
    if !reproducible {
        fs.meta.wall_time_s = Some(start.elapsed().as_secs_f64());
        fs.meta.workers = Some(threads);
    }
    emit(output.as_deref(), &features::serialize(&fs, format)?, stdout)
}

fn build_spec(cfg: &Config, s: &SpecOpts) -> Result<GeneratorSpec> {
    let need = |v: Option<f64>, key: &str| -> Result<f64> {
        cfg.pick(v, key)?
            .ok_or_else(|| CliError::Usage(format!("--{} is required", key.replace('_', "-"))))
    };
    let dims = cfg
        .pick::<String>(s.dims.clone(), "dims")?
        .ok_or_else(|| CliError::Usage("--dims is required".into()))?;
    Ok(GeneratorSpec {
        dims: parse_dims(&dims)?,
        d_slc: need(s.d_slc, "d_slc")?,
        d_fib: need(s.d_fib, "d_fib")?,
        d_nz: need(s.d_nz, "d_nz")?,
        cv_fib: cfg.pick(s.cv_fib, "cv_fib")?.unwrap_or(0.0),
        cv_nz: cfg.pick(s.cv_nz, "cv_nz")?.unwrap_or(0.0),
        imbal_fib: cfg.pick(s.imbal_fib, "imbal_fib")?.unwrap_or(0.0),
        imbal_nz: cfg.pick(s.imbal_nz, "imbal_nz")?.unwrap_or(0.0),
        seed: cfg.pick(s.seed, "seed")?.unwrap_or(0),
    })
}

#[derive(Serialize)]
struct GenerateSummary<'a> {
    nnz: u64,
    nslc: u64,
    nfib: u64,
    nnz_target: f64,
    nfib_target: f64,
    clamped_fraction: f64,
    warnings: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    elapsed_s: Option<f64>,
}

fn cmd_generate(
    cfg: &Config,
    common: &Common,
    s: &SpecOpts,
    output: Option<PathBuf>,
    format: Option<String>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<()> {
    let output = cfg.pick(output, "output")?;
    check_output(output.as_deref())?;
    match cfg.pick::<String>(format, "format")?.as_deref() {
        None | Some("tns") => {}
        Some(o) => return Err(CliError::Unsupported(format!("tensors are written as tns, not {o}"))),
    }
    let reproducible = common.reproducible || cfg.pick(None, "reproducible")?.unwrap_or(false);
    let spec = build_spec(cfg, s)?;
    let start = Instant::now();
    let (t, report) = generate(&spec)?;
    let elapsed = start.elapsed().as_secs_f64();
    let mut body = Vec::new();
    write_frostt(&t, &mut body)?;
    let summary = GenerateSummary {
        nnz: report.nnz,
        nslc: report.nslc,
        nfib: report.nfib,
        nnz_target: report.nnz_target,
        nfib_target: report.nfib_target,
        clamped_fraction: report.clamped_fraction,
        warnings: &report.warnings,
        elapsed_s: (!reproducible).then_some(elapsed),
    };
    let line = serde_json::to_string(&summary).expect("summary serializes") + "\n";
    for w in &report.warnings {
        let _ = writeln!(stderr, "warning: {w}");
    }
    match output {
        Some(p) => {
            emit(Some(&p), &body, stdout)?;
            emit(None, line.as_bytes(), stdout)
        }
        None => {
            emit(None, &body, stdout)?;
            stderr.write_all(line.as_bytes()).map_err(|source| CliError::File {
                path: "<stderr>".into(),
                source,
            })
        }
    }
}

/// Color band of a generated/original ratio.
pub fn band(ratio: f64) -> &'static str {
    if (0.9..=1.1).contains(&ratio) {
        "green"
    } else if !(0.5..=2.0).contains(&ratio) {
        "red"
    } else {
        "orange"
    }
}

/// Below this the original cv is treated as zero and its ratio omitted.
pub const CV_FLOOR: f64 = 0.1;

#[allow(clippy::too_many_arguments)]
fn cmd_roundtrip(
    cfg: &Config,
    input: Option<PathBuf>,
    _common: &Common,
    dims: Option<String>,
    seed: Option<u64>,
    duplicates: Option<String>,
    output: Option<PathBuf>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<()> {
    let input = require_input(input, cfg)?;
    let output = cfg.pick(output, "output")?;
    check_output(output.as_deref())?;
    let policy = parse_policy(cfg.pick(duplicates, "duplicates")?)?;
    let dims = cfg.pick::<String>(dims, "dims")?.map(|d| parse_dims(&d)).transpose()?;
    let seed = cfg.pick(seed, "seed")?.unwrap_or(0);

    let t = load(&input, None, policy)?;
    let choice = MethodChoice::new(Method::Hash, Scope::AllModes);
    let original = spec_from_features(&extract(&t, &choice)?, dims.as_deref(), seed)?;
    let (g, report) = generate(&original)?;
    let generated = spec_from_features(&extract(&g, &choice)?, None, seed)?;

    let mut out = String::new();
    out.push_str(&format!("# nnz_original={}\n# nnz_generated={}\n", t.nnz(), g.nnz()));
    out.push_str(&format!("# clamped_fraction={:.6}\n", report.clamped_fraction));
    out.push_str("feature,original,generated,ratio,band\n");
    let rows = [
        ("d_slc", original.d_slc, generated.d_slc, false),
        ("d_fib", original.d_fib, generated.d_fib, false),
        ("d_nz", original.d_nz, generated.d_nz, false),
        ("cv_fib_per_slice", original.cv_fib, generated.cv_fib, true),
        ("cv_nz_per_fiber", original.cv_nz, generated.cv_nz, true),
    ];
    for (name, a, b, is_cv) in rows {
        if is_cv && a < CV_FLOOR {
            out.push_str(&format!("{name},{a:.6e},{b:.6e},-,-\n"));
        } else {
            let r = b / a;
            out.push_str(&format!("{name},{a:.6e},{b:.6e},{r:.6},{}\n", band(r)));
        }
    }
    for w in &report.warnings {
        let _ = writeln!(stderr, "warning: {w}");
    }
    emit(output.as_deref(), out.as_bytes(), stdout)
}

fn time_reps<T>(reps: usize, mut f: impl FnMut() -> sptk_core::Result<T>) -> Result<Vec<f64>, String> {
    (0..reps)
        .map(|_| {
            let start = Instant::now();
            f().map_err(|e| e.to_string())?;
            Ok(start.elapsed().as_secs_f64())
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    cfg: &Config,
    inputs: Vec<PathBuf>,
    method: Option<String>,
    modes: Option<String>,
    lambda: Option<f64>,
    reps: Option<usize>,
    output: Option<PathBuf>,
    stdout: &mut dyn Write,
) -> Result<()> {
    let inputs = if inputs.is_empty() {
        vec![require_input(None, cfg)?]
    } else {
        inputs
    };
    let output = cfg.pick(output, "output")?;
    check_output(output.as_deref())?;
    let methods: Vec<Method> = match cfg.pick::<String>(method, "method")? {
        None => Method::ALL.to_vec(),
        Some(s) => s.split(',').map(|m| m.trim().parse()).collect::<Result<_, _>>()?,
    };
    let scope: Scope = match cfg.pick::<String>(modes, "modes")? {
        Some(s) => s.parse()?,
        None => Scope::Only3Mode,
    };
    let lambda = cfg.pick(lambda, "lambda")?.unwrap_or(sptk_core::extraction::DEFAULT_LAMBDA);
    let reps = cfg.pick(reps, "reps")?.unwrap_or(3);
    if reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }

    let mut out = String::from("tensor,method,mode,decision_metric,path");
    for r in 1..=reps {
        out.push_str(&format!(",rep{r}"));
    }
    if reps > 1 {
        out.push_str(",mean");
    }
    out.push('\n');
    let row = |out: &mut String, cells: [String; 5], times: Result<Vec<f64>, String>| {
        out.push_str(&cells.join(","));
        match times {
            Ok(ts) => {
                for t in &ts {
                    out.push_str(&format!(",{t:.6}"));
                }
                if reps > 1 {
                    out.push_str(&format!(",{:.6}", ts.iter().sum::<f64>() / ts.len() as f64));
                }
            }
            Err(e) => {
                out.push_str(&format!(",failed: {}", e.replace(',', ";")));
            }
        }
        out.push('\n');
    };

    for path in &inputs {
        let t = load(path, None, DuplicatePolicy::Reject)?;
        let name = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
        let covered: Vec<usize> = match scope {
            Scope::AllModes => (0..t.order()).collect(),
            Scope::Only3Mode => select_top3_modes(t.dims())?.to_vec(),
        };
        for &m in &methods {
            let mut choice = MethodChoice::new(m, scope);
            choice.lambda = lambda;
            let total = match choice.validate(t.order()) {
                Ok(()) => time_reps(reps, || extract(&t, &choice)),
                Err(e) => Err(e.to_string()),
            };
            let failed = total.is_err();
            row(
                &mut out,
                [name.clone(), m.to_string(), "total".into(), String::new(), String::new()],
                total,
            );
            if failed {
                continue;
            }
            if m == Method::Hash {
                row(
                    &mut out,
                    [name.clone(), m.to_string(), "all".into(), String::new(), "hash".into()],
                    time_reps(reps, || build_counts_hash(&t, &covered)),
                );
                continue;
            }
            let work = if covered.len() == t.order() { t.clone() } else { t.project(&covered)? };
            for mo in ModeOrder::cyclic_set() {
                let metric = decision_metric(work.dims(), &mo);
                let exact: u128 = work.dims()[mo.perm()[0]] as u128 * work.dims()[mo.perm()[1]] as u128;
                let planned = match m {
                    Method::Sort => DecisionPath::Sort,
                    Method::Group => DecisionPath::Group,
                    _ => hybrid_path(metric, lambda),
                };
                let mut fell_back = false;
                let times = time_reps(reps, || {
                    let (c, note) = build_counts(&work, &mo, &choice)?;
                    fell_back |= note.is_some();
                    Ok(c)
                });
                let path_label = if fell_back { format!("{planned}->sort") } else { planned.to_string() };
                row(
                    &mut out,
                    [
                        name.clone(),
                        m.to_string(),
                        (covered[mo.perm()[0]] + 1).to_string(),
                        exact.to_string(),
                        path_label,
                    ],
                    times,
                );
            }
        }
    }
    emit(output.as_deref(), out.as_bytes(), stdout)
}

fn read_features(path: &Path) -> Result<FeatureSet> {
    let bytes = std::fs::read(path).map_err(|source| CliError::File {
        path: path.to_path_buf(),
        source,
    })?;
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => Format::Csv,
        _ => Format::Json,
    };
    Ok(features::deserialize(&bytes, format)?)
}

fn cmd_compare(a: &Path, b: &Path, tol: f64, stdout: &mut dyn Write) -> Result<()> {
    let fa = read_features(a)?;
    let fb = read_features(b)?;
    let diffs = fa.compare(&fb, tol);
    if diffs.is_empty() {
        return Ok(());
    }
    let listing: String = diffs.par_iter().map(|d| format!("{d}\n")).collect();
    emit(None, listing.as_bytes(), stdout)?;
    Err(CliError::Mismatch(diffs.len()))
}
