//! Command-line front end: kernel ranking, code construction, BLER
//! sweeps, and plot-data export.
//!
//! Every run is reproducible: all value flags have defaults, a plain-text
//! config file (`key = value`, `#` comments, keys named like the long
//! flags) can overlay the defaults, explicit flags win over the config
//! file, and the base seed falls back to the `NBPOLAR_SEED` environment
//! variable. Exit codes: 0 success, 1 runtime failure (including sweeps
//! with unresolved zero-error points), 2 usage errors.

use std::collections::HashMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand};
use serde::Serialize;

use crate::channel::ebn0_to_sigma2;
use crate::construction::{
    load_frozen_sets, load_or_estimate, save_frozen_sets, select_frozen_pair, ConstructionConfig,
};
use crate::gf::{Field, Symbol};
use crate::kernel::{rank_kernels, KernelReport, RankMode, VarianceForm};
use crate::polar::CodeConfig;
use crate::sim::{
    Campaign, CampaignProvenance, CSV_HEADER, DEFAULT_MAX_BLOCKS, DEFAULT_MIN_BLOCK_ERRORS,
};

const DEFAULT_Q: usize = 16;
const DEFAULT_N: u32 = 7;
const DEFAULT_ALPHA_U: Symbol = 5;
const DEFAULT_ALPHA_V: Symbol = 3;
const DEFAULT_M: &str = "N/4";
const DEFAULT_RATE: f64 = 0.5;
const DEFAULT_SWEEP: &str = "3:7:9";
const DEFAULT_SIGMA_SWEEP: &str = "0.3:1.2:10";
const DEFAULT_TRIALS: u64 = 100_000;

/// Entry point for the binary: parses `std::env::args_os`.
pub fn main_from_env() -> i32 {
    run(std::env::args_os())
}

/// Parses and executes a full command line (first element = program name).
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let res = match cli.cmd {
        Cmd::RankKernels(a) => cmd_rank_kernels(a),
        Cmd::Construct(a) => cmd_construct(a),
        Cmd::Simulate(a) => cmd_simulate(a),
        Cmd::Plotdata(a) => cmd_plotdata(a),
    };
    match res {
        Ok(code) => code,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            2
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            1
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "nbpolar",
    version,
    about = "Non-binary polar codes on the two-user adder channel: kernel ranking, Monte Carlo code construction, and BLER simulation"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Rank kernel factors by analytic error estimates over a noise sweep
    #[command(name = "rank-kernels")]
    RankKernels(RankKernelsArgs),
    /// Estimate per-position reliabilities and choose frozen sets
    Construct(ConstructArgs),
    /// Run a BLER campaign over an Eb/N0 sweep
    Simulate(SimulateArgs),
    /// Merge campaign CSVs into one long-format table for plotting
    Plotdata(PlotdataArgs),
}

#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// Field size q = 2^r (a power of two in 2..=256) [default: 16]
    #[arg(long)]
    q: Option<usize>,
    /// Primitive polynomial bit mask, e.g. 19 = x^4+x+1 [default: built-in per q]
    #[arg(long)]
    poly: Option<u32>,
    /// Plain-text config file overlaying flag defaults (key = value)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: .]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base RNG seed [default: env NBPOLAR_SEED, else 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, 0 = one per core [default: 0]
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct CodeArgs {
    /// Block-length exponent, N = 2^n [default: 7]
    #[arg(long)]
    n: Option<u32>,
    /// Kernel factor of user 1 [default: 5]
    #[arg(long = "alpha-u")]
    alpha_u: Option<Symbol>,
    /// Kernel factor of user 2 [default: 3]
    #[arg(long = "alpha-v")]
    alpha_v: Option<Symbol>,
    /// Stage split: an integer or a fraction like N/4 [default: N/4]
    #[arg(long = "M")]
    m: Option<String>,
    /// Sum rate over both users; each user gets K = R*N/2 [default: 0.5]
    #[arg(long = "R")]
    rate: Option<f64>,
    /// Read --R as the per-user rate instead (K = R*N)
    #[arg(long = "rate-per-user", action = ArgAction::SetTrue)]
    rate_per_user: bool,
}

#[derive(Args, Debug, Default)]
struct RankKernelsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// single (stage-three kernel) or joint (stage-two kernel, needs --alpha-u)
    #[arg(long)]
    mode: Option<String>,
    /// Fixed user-1 kernel factor for joint mode [default: 5]
    #[arg(long = "alpha-u")]
    alpha_u: Option<Symbol>,
    /// Noise sweep lo:hi:steps in sigma [default: 0.3:1.2:10]
    #[arg(long = "sigma-sweep")]
    sigma_sweep: Option<String>,
    /// sum-of-squares | squared-difference [default: sum-of-squares]
    #[arg(long = "variance-form")]
    variance_form: Option<String>,
}

#[derive(Args, Debug, Default)]
struct ConstructArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    code: CodeArgs,
    /// Design Eb/N0 in dB [default: midpoint of --sweep]
    #[arg(long = "design-snr")]
    design_snr: Option<f64>,
    /// Monte Carlo trials [default: 100000]
    #[arg(long)]
    trials: Option<u64>,
    /// Eb/N0 sweep lo:hi:steps, used only for the design-SNR default
    #[arg(long)]
    sweep: Option<String>,
}

#[derive(Args, Debug, Default)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    code: CodeArgs,
    /// Eb/N0 sweep lo:hi:steps in dB [default: 3:7:9]
    #[arg(long)]
    sweep: Option<String>,
    /// Joint block errors to stop a point at [default: 100]
    #[arg(long = "min-errors")]
    min_errors: Option<u64>,
    /// Block cap per point [default: 2000000]
    #[arg(long = "max-blocks")]
    max_blocks: Option<u64>,
    /// Design Eb/N0 for auto-construction [default: sweep midpoint]
    #[arg(long = "design-snr")]
    design_snr: Option<f64>,
    /// Construction trials for auto-construction [default: 100000]
    #[arg(long)]
    trials: Option<u64>,
    /// Use this frozen-set file instead of auto-construction
    #[arg(long = "frozen-file")]
    frozen_file: Option<PathBuf>,
    /// Fail instead of auto-constructing when no frozen-set file is given
    #[arg(long = "no-auto-construct", action = ArgAction::SetTrue)]
    no_auto_construct: bool,
    /// Abort the sweep at the first point with zero block errors
    #[arg(long, action = ArgAction::SetTrue)]
    strict: bool,
    /// Output file label [default: derived from the code parameters]
    #[arg(long)]
    label: Option<String>,
}

#[derive(Args, Debug)]
struct PlotdataArgs {
    /// Campaign CSV files to merge
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Plain-text config file overlaying flag defaults (key = value)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: .]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
}

fn usage(m: impl Into<String>) -> CliError {
    CliError::Usage(m.into())
}

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

// ---------------------------------------------------------------------------
// Config-file overlay and value resolution
// ---------------------------------------------------------------------------

const KNOWN_KEYS: &[&str] = &[
    "q",
    "poly",
    "n",
    "alpha-u",
    "alpha-v",
    "m",
    "r",
    "sweep",
    "sigma-sweep",
    "mode",
    "variance-form",
    "seed",
    "workers",
    "min-errors",
    "max-blocks",
    "design-snr",
    "trials",
    "out",
    "strict",
    "frozen-file",
    "no-auto-construct",
    "rate-per-user",
    "label",
];

/// Parsed config file: normalized keys, raw string values.
#[derive(Default)]
struct Overlay {
    map: HashMap<String, String>,
}

impl Overlay {
    fn load(path: Option<&Path>) -> Result<Overlay, CliError> {
        let Some(path) = path else {
            return Ok(Overlay::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("config file {}: {e}", path.display())))?;
        Overlay::parse(&text).map_err(|m| usage(format!("config file {}: {m}", path.display())))
    }

    fn parse(text: &str) -> Result<Overlay, String> {
        let mut map = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", lineno + 1))?;
            let key = k.trim().to_ascii_lowercase().replace('_', "-");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(format!("line {}: unknown key {:?}", lineno + 1, k.trim()));
            }
            if map.insert(key, v.trim().to_string()).is_some() {
                return Err(format!("line {}: duplicate key {:?}", lineno + 1, k.trim()));
            }
        }
        Ok(Overlay { map })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    /// Flag wins, then config value, then `None`.
    fn pick<T, F>(&self, flag: Option<T>, key: &str, parse: F) -> Result<Option<T>, CliError>
    where
        F: FnOnce(&str) -> Result<T, String>,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.raw(key) {
            Some(v) => parse(v)
                .map(Some)
                .map_err(|m| usage(format!("config key {key}: {m}"))),
            None => Ok(None),
        }
    }

    fn pick_parse<T: std::str::FromStr>(
        &self,
        flag: Option<T>,
        key: &str,
    ) -> Result<Option<T>, CliError> {
        self.pick(flag, key, |v| {
            v.parse().map_err(|_| format!("cannot parse value {v:?}"))
        })
    }

    fn pick_bool(&self, flag: bool, key: &str) -> Result<bool, CliError> {
        if flag {
            return Ok(true);
        }
        match self.raw(key) {
            None => Ok(false),
            Some(v) => match v.to_ascii_lowercase().as_str() {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(usage(format!("config key {key}: not a boolean: {v:?}"))),
            },
        }
    }
}

/// Seed precedence: flag, config, environment, 0.
fn resolve_seed(
    flag: Option<u64>,
    overlay: &Overlay,
    env: Option<&str>,
) -> Result<u64, CliError> {
    if let Some(s) = overlay.pick_parse(flag, "seed")? {
        return Ok(s);
    }
    match env {
        Some(v) => v
            .trim()
            .parse()
            .map_err(|_| usage(format!("NBPOLAR_SEED: cannot parse {v:?}"))),
        None => Ok(0),
    }
}

fn parse_sweep(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, steps] = parts.as_slice() else {
        return Err(format!("sweep {s:?} must look like lo:hi:steps"));
    };
    let lo: f64 = lo.parse().map_err(|_| format!("bad sweep start {lo:?}"))?;
    let hi: f64 = hi.parse().map_err(|_| format!("bad sweep end {hi:?}"))?;
    let steps: usize = steps.parse().map_err(|_| format!("bad sweep steps {steps:?}"))?;
    if steps == 0 {
        return Err("sweep needs at least one step".into());
    }
    if steps == 1 {
        if lo != hi {
            return Err("a single-step sweep needs lo == hi".into());
        }
        return Ok(vec![lo]);
    }
    if !(lo < hi) {
        return Err(format!("sweep start {lo} must be below end {hi}"));
    }
    Ok((0..steps)
        .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
        .collect())
}

/// Stage split: a plain integer, `N` for the whole block, or `N/k`.
fn parse_stage_split(s: &str, big_n: usize) -> Result<usize, String> {
    let t = s.trim();
    if t.eq_ignore_ascii_case("n") {
        return Ok(big_n);
    }
    if let Some(rest) = t
        .strip_prefix("N/")
        .or_else(|| t.strip_prefix("n/"))
    {
        let d: usize = rest
            .trim()
            .parse()
            .map_err(|_| format!("bad stage-split divisor {rest:?}"))?;
        if d == 0 || d > big_n {
            return Err(format!("stage-split divisor {d} outside 1..={big_n}"));
        }
        return Ok(big_n / d);
    }
    t.parse().map_err(|_| format!("bad stage split {t:?}"))
}

fn build_field(q: usize, poly: Option<u32>) -> Result<Field, CliError> {
    if !q.is_power_of_two() || !(2..=256).contains(&q) {
        return Err(usage(format!("field size {q} must be a power of two in 2..=256")));
    }
    let r = q.trailing_zeros();
    match poly {
        Some(p) => Field::new(r, p),
        None => Field::with_default_poly(r),
    }
    .map_err(|e| usage(e.to_string()))
}

/// Fully resolved code parameters shared by construct and simulate.
struct ResolvedCode {
    field: Field,
    n: u32,
    alpha_u: Symbol,
    alpha_v: Symbol,
    m: usize,
    rate: f64,
    info_len: usize,
}

impl ResolvedCode {
    fn big_n(&self) -> usize {
        1 << self.n
    }

    fn resolve(common: &CommonArgs, code: &CodeArgs, overlay: &Overlay) -> Result<ResolvedCode, CliError> {
        let q = overlay.pick_parse(common.q, "q")?.unwrap_or(DEFAULT_Q);
        let poly = overlay.pick_parse(common.poly, "poly")?;
        let field = build_field(q, poly)?;
        let n = overlay.pick_parse(code.n, "n")?.unwrap_or(DEFAULT_N);
        if n == 0 || n > 20 {
            return Err(usage(format!("block exponent n={n} outside 1..=20")));
        }
        let big_n = 1usize << n;
        let alpha_u = overlay
            .pick_parse(code.alpha_u, "alpha-u")?
            .unwrap_or(DEFAULT_ALPHA_U);
        let alpha_v = overlay
            .pick_parse(code.alpha_v, "alpha-v")?
            .unwrap_or(DEFAULT_ALPHA_V);
        let m_spec = overlay
            .pick_parse(code.m.clone(), "m")?
            .unwrap_or_else(|| DEFAULT_M.to_string());
        let m = parse_stage_split(&m_spec, big_n).map_err(usage)?;
        let rate = overlay.pick_parse(code.rate, "r")?.unwrap_or(DEFAULT_RATE);
        let per_user = overlay.pick_bool(code.rate_per_user, "rate-per-user")?;
        let info_len = CodeConfig::info_len_for_rate(big_n, rate, per_user)
            .map_err(|e| usage(e.to_string()))?;
        Ok(ResolvedCode {
            field,
            n,
            alpha_u,
            alpha_v,
            m,
            rate,
            info_len,
        })
    }

    fn label(&self) -> String {
        format!(
            "q{}_n{}_au{}_av{}_m{}",
            self.field.q(),
            self.n,
            self.alpha_u,
            self.alpha_v,
            self.m
        )
    }

    /// File-name fragment for construction outputs.
    fn construction_key(&self, design_snr: f64, trials: u64, seed: u64) -> String {
        let snr = format!("{design_snr:.2}").replace('.', "p").replace('-', "m");
        format!(
            "q{}_p{}_n{}_au{}_av{}_m{}_d{}_t{}_s{}",
            self.field.q(),
            self.field.poly(),
            self.n,
            self.alpha_u,
            self.alpha_v,
            self.m,
            snr,
            trials,
            seed
        )
    }
}

fn out_dir(common: &CommonArgs, overlay: &Overlay) -> Result<PathBuf, CliError> {
    let dir = overlay
        .pick(common.out.clone(), "out", |v| Ok(PathBuf::from(v)))?
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)
        .map_err(|e| runtime(format!("creating output directory {}: {e}", dir.display())))?;
    Ok(dir)
}

fn parse_variance_form(v: &str) -> Result<VarianceForm, String> {
    match v {
        "sum-of-squares" => Ok(VarianceForm::SumOfSquares),
        "squared-difference" => Ok(VarianceForm::SquaredDifference),
        _ => Err(format!(
            "variance form {v:?} must be sum-of-squares or squared-difference"
        )),
    }
}

// ---------------------------------------------------------------------------
// rank-kernels
// ---------------------------------------------------------------------------

fn cmd_rank_kernels(a: RankKernelsArgs) -> Result<i32, CliError> {
    let overlay = Overlay::load(a.common.config.as_deref())?;
    let q = overlay.pick_parse(a.common.q, "q")?.unwrap_or(DEFAULT_Q);
    let poly = overlay.pick_parse(a.common.poly, "poly")?;
    let field = build_field(q, poly)?;
    let mode_str = overlay
        .pick_parse(a.mode, "mode")?
        .unwrap_or_else(|| "single".to_string());
    let mode = match mode_str.as_str() {
        "single" => RankMode::Single,
        "joint" => RankMode::Joint,
        other => return Err(usage(format!("mode {other:?} must be single or joint"))),
    };
    let alpha_u = overlay
        .pick_parse(a.alpha_u, "alpha-u")?
        .unwrap_or(DEFAULT_ALPHA_U);
    let sweep_spec = overlay
        .pick_parse(a.sigma_sweep, "sigma-sweep")?
        .unwrap_or_else(|| DEFAULT_SIGMA_SWEEP.to_string());
    let sigmas = parse_sweep(&sweep_spec).map_err(usage)?;
    if sigmas.iter().any(|&s| s <= 0.0) {
        return Err(usage("sigma sweep values must be positive"));
    }
    let form = overlay
        .pick(a.variance_form.map(|v| parse_variance_form(&v)).transpose().map_err(usage)?,
              "variance-form", parse_variance_form)?
        .unwrap_or_default();
    let dir = out_dir(&a.common, &overlay)?;

    let fixed = (mode == RankMode::Joint).then_some(alpha_u);
    let mut reports: Vec<KernelReport> = Vec::with_capacity(sigmas.len());
    for &sigma in &sigmas {
        reports.push(rank_kernels(&field, sigma, mode, fixed, form).map_err(runtime)?);
    }

    // Matrix CSV: one row per kernel factor, one column per sigma.
    let mut csv = String::new();
    csv.push_str(&format!("# field: GF({}) poly={}\n", field.q(), field.poly()));
    match fixed {
        Some(au) => csv.push_str(&format!("# mode: {mode} (alpha_u={au})\n")),
        None => csv.push_str(&format!("# mode: {mode}\n")),
    }
    csv.push_str(&format!(
        "# variance-form: {}\n",
        match form {
            VarianceForm::SumOfSquares => "sum-of-squares",
            VarianceForm::SquaredDifference => "squared-difference",
        }
    ));
    csv.push_str("alpha");
    for &s in &sigmas {
        csv.push_str(&format!(",sigma={s}"));
    }
    csv.push('\n');
    for alpha in field.nonzero_symbols() {
        csv.push_str(&alpha.to_string());
        for rep in &reports {
            let err = rep
                .entries
                .iter()
                .find(|e| e.alpha == alpha)
                .expect("every nonzero factor is ranked")
                .error;
            csv.push_str(&format!(",{err}"));
        }
        csv.push('\n');
    }
    let path = dir.join(format!("rank_{mode}.csv"));
    std::fs::write(&path, csv).map_err(runtime)?;

    for (s, rep) in sigmas.iter().zip(&reports) {
        let top: Vec<String> = rep
            .entries
            .iter()
            .take(3)
            .map(|e| format!("{} ({:.3e})", e.alpha, e.error))
            .collect();
        println!("sigma={s}: best {}", top.join(", "));
    }
    println!("wrote {}", path.display());
    Ok(0)
}

// ---------------------------------------------------------------------------
// construct
// ---------------------------------------------------------------------------

/// Design-SNR default: the midpoint of the (possibly defaulted) sweep.
fn resolve_design_snr(
    flag: Option<f64>,
    sweep_flag: Option<String>,
    overlay: &Overlay,
) -> Result<(f64, Vec<f64>), CliError> {
    let sweep_spec = overlay
        .pick_parse(sweep_flag, "sweep")?
        .unwrap_or_else(|| DEFAULT_SWEEP.to_string());
    let grid = parse_sweep(&sweep_spec).map_err(usage)?;
    let mid = (grid[0] + grid[grid.len() - 1]) / 2.0;
    let snr = overlay.pick_parse(flag, "design-snr")?.unwrap_or(mid);
    Ok((snr, grid))
}

struct ConstructionOutcome {
    cfg: ConstructionConfig,
    frozen_u: Vec<usize>,
    frozen_v: Vec<usize>,
    cache_path: PathBuf,
    from_cache: bool,
}

fn run_construction(
    rc: &ResolvedCode,
    design_snr: f64,
    trials: u64,
    seed: u64,
    workers: usize,
    dir: &Path,
) -> Result<ConstructionOutcome, CliError> {
    let sigma2 = ebn0_to_sigma2(design_snr, rc.rate).map_err(|e| usage(e.to_string()))?;
    let cfg = ConstructionConfig {
        field: rc.field.clone(),
        n: rc.n,
        alpha_u: rc.alpha_u,
        alpha_v: rc.alpha_v,
        m: rc.m,
        sigma2,
        design_ebn0_db: Some(design_snr),
        trials,
        seed,
    };
    let key = rc.construction_key(design_snr, trials, seed);
    let cache_path = dir.join(format!("reliability_{key}.txt"));
    let (profile, from_cache) =
        load_or_estimate(&cache_path, &cfg, workers).map_err(runtime)?;
    let (frozen_u, frozen_v) = select_frozen_pair(&profile, rc.info_len).map_err(runtime)?;
    Ok(ConstructionOutcome {
        cfg,
        frozen_u,
        frozen_v,
        cache_path,
        from_cache,
    })
}

fn cmd_construct(a: ConstructArgs) -> Result<i32, CliError> {
    let overlay = Overlay::load(a.common.config.as_deref())?;
    let rc = ResolvedCode::resolve(&a.common, &a.code, &overlay)?;
    let (design_snr, _) = resolve_design_snr(a.design_snr, a.sweep, &overlay)?;
    let trials = overlay.pick_parse(a.trials, "trials")?.unwrap_or(DEFAULT_TRIALS);
    let seed = resolve_seed(a.common.seed, &overlay, std::env::var("NBPOLAR_SEED").ok().as_deref())?;
    let workers = overlay.pick_parse(a.common.workers, "workers")?.unwrap_or(0);
    let dir = out_dir(&a.common, &overlay)?;

    let outcome = run_construction(&rc, design_snr, trials, seed, workers, &dir)?;
    let key = rc.construction_key(design_snr, trials, seed);
    let frozen_path = dir.join(format!("frozen_{key}.txt"));
    save_frozen_sets(
        &frozen_path,
        &outcome.cfg,
        rc.info_len,
        &outcome.frozen_u,
        &outcome.frozen_v,
    )
    .map_err(runtime)?;

    println!(
        "reliability profile: {} ({})",
        outcome.cache_path.display(),
        if outcome.from_cache { "cached" } else { "estimated" }
    );
    println!(
        "frozen sets (k={} of N={}): {}",
        rc.info_len,
        rc.big_n(),
        frozen_path.display()
    );
    Ok(0)
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SimulateProvenance {
    label: String,
    csv_file: String,
    campaign: CampaignProvenance,
    design_ebn0_db: Option<f64>,
    construction_trials: Option<u64>,
    frozen_file: Option<String>,
}

fn cmd_simulate(a: SimulateArgs) -> Result<i32, CliError> {
    let overlay = Overlay::load(a.common.config.as_deref())?;
    let rc = ResolvedCode::resolve(&a.common, &a.code, &overlay)?;
    let (design_snr, grid) = resolve_design_snr(a.design_snr, a.sweep, &overlay)?;
    let trials = overlay.pick_parse(a.trials, "trials")?.unwrap_or(DEFAULT_TRIALS);
    let min_errors = overlay
        .pick_parse(a.min_errors, "min-errors")?
        .unwrap_or(DEFAULT_MIN_BLOCK_ERRORS);
    let max_blocks = overlay
        .pick_parse(a.max_blocks, "max-blocks")?
        .unwrap_or(DEFAULT_MAX_BLOCKS);
    let seed = resolve_seed(a.common.seed, &overlay, std::env::var("NBPOLAR_SEED").ok().as_deref())?;
    let workers = overlay.pick_parse(a.common.workers, "workers")?.unwrap_or(0);
    let strict = overlay.pick_bool(a.strict, "strict")?;
    let no_auto = overlay.pick_bool(a.no_auto_construct, "no-auto-construct")?;
    let frozen_file = overlay.pick(a.frozen_file, "frozen-file", |v| Ok(PathBuf::from(v)))?;
    let dir = out_dir(&a.common, &overlay)?;
    let label = overlay
        .pick_parse(a.label, "label")?
        .unwrap_or_else(|| rc.label());

    // Frozen sets: explicit file, or cached/fresh auto-construction.
    let (frozen_u, frozen_v, design_used, trials_used, frozen_src) = match frozen_file {
        Some(path) => {
            let f = load_frozen_sets(&path).map_err(runtime)?;
            if f.r != rc.field.r()
                || f.poly != rc.field.poly()
                || f.n != rc.n
                || f.alpha_u != rc.alpha_u
                || f.alpha_v != rc.alpha_v
                || f.m != rc.m
                || f.info_len != rc.info_len
            {
                return Err(runtime(format!(
                    "frozen-set file {} was built for different code parameters",
                    path.display()
                )));
            }
            (
                f.frozen_u,
                f.frozen_v,
                None,
                None,
                Some(path.display().to_string()),
            )
        }
        None if no_auto => {
            return Err(runtime(
                "no frozen-set file given and auto-construction is disabled",
            ));
        }
        None => {
            let outcome = run_construction(&rc, design_snr, trials, seed, workers, &dir)?;
            eprintln!(
                "construction: {} ({})",
                outcome.cache_path.display(),
                if outcome.from_cache { "cached" } else { "estimated" }
            );
            (
                outcome.frozen_u,
                outcome.frozen_v,
                Some(design_snr),
                Some(trials),
                None,
            )
        }
    };

    let cfg = CodeConfig::new(
        rc.field.clone(),
        rc.n,
        rc.alpha_u,
        rc.alpha_v,
        &frozen_u,
        &frozen_v,
        rc.m,
    )
    .map_err(runtime)?;
    let mut campaign = Campaign::new(cfg, grid.clone());
    campaign.rate = rc.rate;
    campaign.min_block_errors = min_errors;
    campaign.max_blocks = max_blocks;
    campaign.seed = seed;
    campaign.workers = workers;

    let csv_path = dir.join(format!("bler_{label}.csv"));
    let json_path = dir.join(format!("bler_{label}.json"));
    let provenance = SimulateProvenance {
        label: label.clone(),
        csv_file: csv_path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        campaign: campaign.provenance(),
        design_ebn0_db: design_used,
        construction_trials: trials_used,
        frozen_file: frozen_src,
    };
    std::fs::write(
        &json_path,
        serde_json::to_string_pretty(&provenance).map_err(runtime)?,
    )
    .map_err(runtime)?;

    let file = std::fs::File::create(&csv_path).map_err(runtime)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "{CSV_HEADER}").map_err(runtime)?;
    let mut zero_points = 0usize;
    for i in 0..campaign.ebn0_grid_db.len() {
        let p = campaign.run_point(i).map_err(runtime)?;
        writeln!(w, "{}", p.csv_row()).map_err(runtime)?;
        w.flush().map_err(runtime)?;
        println!(
            "ebn0={} dB: bler={} ({} errors / {} blocks)",
            p.ebn0_db, p.bler_joint, p.blkerr_joint, p.blocks
        );
        if p.blkerr_joint == 0 {
            zero_points += 1;
            eprintln!(
                "warning: no block errors at {} dB within {} blocks",
                p.ebn0_db, p.blocks
            );
            if strict {
                return Err(runtime(format!(
                    "aborting (strict): zero block errors at {} dB",
                    p.ebn0_db
                )));
            }
        }
    }
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(if zero_points > 0 { 1 } else { 0 })
}

// ---------------------------------------------------------------------------
// plotdata
// ---------------------------------------------------------------------------

fn cmd_plotdata(a: PlotdataArgs) -> Result<i32, CliError> {
    let overlay = Overlay::load(a.config.as_deref())?;
    let common = CommonArgs {
        out: a.out,
        ..CommonArgs::default()
    };
    let dir = out_dir(&common, &overlay)?;
    let mut out = String::from("system_label,ebn0_db,bler,ci\n");
    for input in &a.inputs {
        let text = std::fs::read_to_string(input)
            .map_err(|e| runtime(format!("{}: {e}", input.display())))?;
        let label = input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let label = label.strip_prefix("bler_").unwrap_or(&label).to_string();
        let mut lines = text.lines().filter(|l| !l.starts_with('#'));
        match lines.next() {
            Some(h) if h == CSV_HEADER => {}
            _ => {
                return Err(runtime(format!(
                    "{}: not a campaign CSV (missing header)",
                    input.display()
                )))
            }
        }
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 9 {
                return Err(runtime(format!(
                    "{}: row {}: expected 9 columns, found {}",
                    input.display(),
                    lineno + 2,
                    cols.len()
                )));
            }
            // Copy the fields verbatim: no reformatting of numbers.
            out.push_str(&format!("{},{},{},{}\n", label, cols[0], cols[5], cols[6]));
        }
    }
    let path = dir.join("plotdata.csv");
    std::fs::write(&path, out).map_err(runtime)?;
    println!("wrote {}", path.display());
    Ok(0)
}
