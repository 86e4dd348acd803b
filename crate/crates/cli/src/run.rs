use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gaf_zeros::admissibility::{check_type1, check_type2, AdmissibilityParams};
use gaf_zeros::covariance::{central_index, tilted_window};
use gaf_zeros::mc::{mc_stats_window, McOptions};
use gaf_zeros::restriction::{export, similarity_report};
use gaf_zeros::roots::CountOptions;
use gaf_zeros::variance::{bounds_from_stats, j_split_window, variance_of_window};
use gaf_zeros::CoefficientModel;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, GridPoint};
use crate::row::{write_csv, write_dat, ResultRow};
use crate::RunError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Mean,
    VarExact,
    VarMc,
    Bounds,
    Jsplit,
    Admissible,
    Restrict,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Mean => "mean",
            Command::VarExact => "var-exact",
            Command::VarMc => "var-mc",
            Command::Bounds => "bounds",
            Command::Jsplit => "jsplit",
            Command::Admissible => "admissible",
            Command::Restrict => "restrict",
            Command::Sweep => "sweep",
        }
    }

    fn wants(self, part: Part, cfg: &ExperimentConfig) -> bool {
        use Command::*;
        match part {
            Part::Exact => matches!(self, VarExact | Sweep),
            Part::Bounds => matches!(self, Bounds | Sweep),
            Part::Split => matches!(self, Jsplit | Sweep),
            Part::Mc => self == VarMc || (self == Sweep && cfg.mc.samples.is_some()),
            Part::Admissible => matches!(self, Admissible | Sweep),
        }
    }
}

#[derive(Clone, Copy)]
enum Part {
    Exact,
    Bounds,
    Split,
    Mc,
    Admissible,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Overrides `[output] dir`.
    pub out: Option<PathBuf>,
    /// Overrides `[mc] seed`.
    pub seed: Option<u64>,
    /// Worker threads for grid points and samples. Never changes results.
    pub threads: Option<usize>,
}

#[derive(Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub rows: Vec<ResultRow>,
    /// Grid points whose evaluation failed; their rows carry an `error=` flag.
    pub row_errors: Vec<String>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.row_errors.is_empty() {
            0
        } else {
            3
        }
    }
}

const DEFAULT_OUT: &str = "gafz-out";

struct Evaluated {
    row: ResultRow,
    error: Option<String>,
    admissibility: Option<Value>,
    millis: f64,
}

fn error_kind(e: &gaf_zeros::Error) -> &'static str {
    use gaf_zeros::Error as E;
    match e {
        E::WindowTooLarge { .. } => "window_too_large",
        E::OutsideDomain { .. } => "outside_domain",
        E::TooManyFailures { .. } => "mc_failures",
        E::BoundedVariance { .. } => "bounded_variance",
        E::NotIncreasing { .. } => "not_increasing",
        E::EmptyBlock { .. } => "empty_block",
        _ => "numerical",
    }
}

fn admissibility_params(cfg: &ExperimentConfig) -> AdmissibilityParams {
    AdmissibilityParams {
        c_g: cfg.params.c_g,
        epsilon: cfg.params.epsilon,
        ..AdmissibilityParams::default()
    }
}

fn evaluate(
    cmd: Command,
    cfg: &ExperimentConfig,
    model: &CoefficientModel,
    p: GridPoint,
) -> Evaluated {
    let start = Instant::now();
    let mut row = ResultRow::new(p.t, p.r);
    let mut admissibility = None;
    let result = fill(cmd, cfg, model, p, &mut row, &mut admissibility);
    let error = result.err().map(|e| {
        row.flag(format!("error={}", error_kind(&e)));
        format!("t = {}: {e}", p.t)
    });
    Evaluated {
        row,
        error,
        admissibility,
        millis: start.elapsed().as_secs_f64() * 1e3,
    }
}

fn fill(
    cmd: Command,
    cfg: &ExperimentConfig,
    model: &CoefficientModel,
    p: GridPoint,
    row: &mut ResultRow,
    admissibility: &mut Option<Value>,
) -> gaf_zeros::Result<()> {
    let window = tilted_window(model, p.t, &cfg.window_options())?;
    let stats = window.stats();
    let b = bounds_from_stats(stats.a, stats.b, cfg.params.epsilon, cfg.params.c_g);
    row.mean_exact = Some(stats.a);
    if cmd == Command::Mean {
        let info = central_index(model, p.r, cfg.params.gamma)?;
        row.flag(format!("central_index={}", info.n));
    } else {
        row.upper = Some(stats.b);
    }
    if cmd.wants(Part::Exact, cfg) {
        let q = variance_of_window(&window, cfg.tolerances.quad);
        row.var_exact = Some(q.value);
        row.var_err = Some(q.abs_error_estimate);
        if !q.converged {
            row.flag("var_unconverged");
        }
    }
    if cmd.wants(Part::Exact, cfg) || cmd.wants(Part::Bounds, cfg) {
        row.asymptotic = Some(b.asymptotic_type_i);
    }
    if cmd.wants(Part::Bounds, cfg) {
        row.lower_general = Some(b.lower_general);
        row.lower_monotone = Some(b.lower_monotone);
        if b.delta.is_none() {
            row.flag("delta_undefined");
        }
    }
    if cmd.wants(Part::Split, cfg) {
        let s = j_split_window(&window, cfg.params.c_g, cfg.tolerances.quad);
        row.j1 = Some(s.j1);
        row.j2 = Some(s.j2);
        if s.degenerate {
            row.flag("split_degenerate");
        }
        if !s.converged {
            row.flag("split_unconverged");
        }
    }
    if cmd.wants(Part::Mc, cfg) {
        let opts = McOptions {
            threads: None,
            count: CountOptions::default(),
            max_failure_rate: cfg.tolerances.mc_failure_rate,
            window: cfg.window_options(),
        };
        let seed = cfg.mc.seed.expect("validated");
        let samples = cfg.mc.samples.expect("validated");
        let mc = mc_stats_window(&window, samples, seed, &opts)?;
        row.mc_mean = Some(mc.mean);
        row.mc_var = Some(mc.variance);
        row.mc_mean_stderr = Some(mc.mean_stderr);
        row.mc_var_stderr = Some(mc.var_stderr);
        row.mc_failed = Some(mc.failed_counts as u64);
    }
    if cmd.wants(Part::Admissible, cfg) {
        let params = admissibility_params(cfg);
        let t1 = check_type1(model, p.t, &params)?;
        let t2 = check_type2(model, p.t, &params)?;
        for (name, rep) in [("type1", &t1), ("type2", &t2)] {
            row.flag(format!("{name}={}", if rep.passed() { "pass" } else { "fail" }));
            for c in rep.conditions.iter().filter(|c| !c.passed) {
                row.flag(format!("{name}.{}=fail", c.condition));
            }
        }
        *admissibility = Some(json!({
            "t": p.t,
            "r": p.r,
            "type1": t1.to_json(),
            "type2": t2.to_json(),
        }));
    }
    Ok(())
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> RunError + '_ {
    move |e| RunError::Io(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, RunError> {
    fs::File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn ratio(num: Option<f64>, den: Option<f64>) -> f64 {
    match (num, den) {
        (Some(n), Some(d)) if d > 0.0 => n / d,
        _ => f64::NAN,
    }
}

/// Plot data derived from the rows; files without any finite entry are
/// skipped.
fn plot_files(rows: &[ResultRow]) -> Vec<(&'static str, Vec<&'static str>, Vec<Vec<f64>>)> {
    let mut out = Vec::new();
    let typei: Vec<Vec<f64>> = rows
        .iter()
        .filter(|r| r.var_exact.is_some() && r.asymptotic.is_some_and(|a| a > 0.0))
        .map(|r| vec![r.t, ratio(r.var_exact, r.asymptotic)])
        .collect();
    if !typei.is_empty() {
        out.push(("ratio_typeI.dat", vec!["t", "var_exact/asymptotic"], typei));
    }
    let over_b: Vec<Vec<f64>> = rows
        .iter()
        .filter(|r| r.upper.is_some_and(|b| b > 0.0) && (r.var_exact.is_some() || r.mc_var.is_some()))
        .map(|r| vec![r.t, ratio(r.var_exact, r.upper), ratio(r.mc_var, r.upper)])
        .collect();
    if !over_b.is_empty() {
        out.push(("var_over_b.dat", vec!["t", "var_exact/upper", "mc_var/upper"], over_b));
    }
    out
}

/// Runs `cmd` over the configured grid and writes its artifacts.
///
/// Validation problems are reported before anything is written.
pub fn run(cmd: Command, mut cfg: ExperimentConfig, opts: &RunOptions) -> Result<RunSummary, RunError> {
    let started = Instant::now();
    if opts.seed.is_some() {
        cfg.mc.seed = opts.seed;
    }
    if opts.threads == Some(0) {
        return Err(RunError::Validation("--threads must be positive".into()));
    }
    cfg.validate(cmd.wants(Part::Mc, &cfg))?;
    if cmd == Command::Restrict && cfg.model.restrict.is_none() {
        return Err(RunError::Validation("`restrict` needs a [model.restrict] section".into()));
    }
    let models = cfg.build_model()?;
    let model = models.target();
    let grid = cfg.grid(model)?;
    let out_dir = opts
        .out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads.unwrap_or(0))
        .build()
        .map_err(|e| RunError::Io(format!("thread pool: {e}")))?;
    let evaluated: Vec<Evaluated> =
        pool.install(|| grid.par_iter().map(|&p| evaluate(cmd, &cfg, model, p)).collect());

    fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;
    let mut files = Vec::new();
    let mut rows: Vec<ResultRow> = evaluated.iter().map(|e| e.row.clone()).collect();
    let row_errors: Vec<String> = evaluated.iter().filter_map(|e| e.error.clone()).collect();

    let mut restriction = Value::Null;
    if let (Command::Restrict, Some(r)) = (cmd, &models.restricted) {
        let ts: Vec<f64> = grid.iter().map(|p| p.t).collect();
        let sim = similarity_report(&models.base, &r.model, &r.partition, &ts)?;
        for (row, s) in rows.iter_mut().zip(&sim) {
            match s.ell {
                Some(ell) => row.flag(format!("ell={ell}")),
                None => row.flag("outside_interior"),
            }
        }
        let path = out_dir.join("similarity.dat");
        let lines: Vec<Vec<f64>> = sim
            .iter()
            .map(|s| vec![s.t, s.a_ratio, s.b_ratio, s.ell.map_or(f64::NAN, |l| l as f64)])
            .collect();
        write_dat(create(&path)?, &["t", "a_ratio", "b_ratio", "ell"], &lines).map_err(io_err(&path))?;
        files.push(path);
        let path = out_dir.join("restricted_coefficients.txt");
        let mut w = create(&path)?;
        export(&r.model, &r.plan, &mut w).map_err(io_err(&path))?;
        drop(w);
        files.push(path);
        restriction = json!({ "partition": r.partition, "plan": r.plan });
    }

    let csv_path = out_dir.join("results.csv");
    write_csv(create(&csv_path)?, &rows)?;
    files.push(csv_path);

    for (name, header, lines) in plot_files(&rows) {
        let path = out_dir.join(name);
        write_dat(create(&path)?, &header, &lines).map_err(io_err(&path))?;
        files.push(path);
    }

    let reports: Vec<&Value> = evaluated.iter().filter_map(|e| e.admissibility.as_ref()).collect();
    if !reports.is_empty() {
        let path = out_dir.join("admissibility.json");
        serde_json::to_writer_pretty(create(&path)?, &reports)
            .map_err(|e| RunError::Io(e.to_string()))?;
        files.push(path);
    }

    let manifest = json!({
        "tool": "gafz",
        "version": env!("CARGO_PKG_VERSION"),
        "core_version": gaf_zeros::VERSION,
        "command": cmd.name(),
        "config": cfg,
        "model": { "tag": model.tag(), "params": model.params(), "t_g": model.t_g() },
        "fixed": {
            "count": CountOptions::default(),
            "window_max_index": cfg.window_options().max_index,
            "admissibility": admissibility_params(&cfg),
            "admissibility_note": "admissibility flags are advisory for user-supplied models",
        },
        "restriction": restriction,
        "threads": opts.threads,
        "row_errors": row_errors,
        "timings_ms": {
            "rows": evaluated.iter().map(|e| e.millis).collect::<Vec<_>>(),
            "total": started.elapsed().as_secs_f64() * 1e3,
        },
        "files": files.iter().map(|f| f.file_name().unwrap().to_string_lossy()).collect::<Vec<_>>(),
    });
    let path = out_dir.join("manifest.json");
    serde_json::to_writer_pretty(create(&path)?, &manifest).map_err(|e| RunError::Io(e.to_string()))?;
    files.push(path);

    Ok(RunSummary {
        out_dir,
        files,
        rows,
        row_errors,
    })
}
