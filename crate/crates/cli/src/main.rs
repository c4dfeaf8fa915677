//! `geocontract`: generate marked spaces, compute profiles, run the
//! verification suites and plot CSV output.

mod plot;
mod suites;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use geocontract::asymptotics::ConstantBox;
use geocontract::divergence::{divergence_profile, DivergenceParams, SGrid};
use geocontract::document::{load_space, save_space};
use geocontract::function::FunctionSpec;
use geocontract::morse::{morse_profile, PairPlan};
use geocontract::projection::{contraction_profile, geodesic_image_profile, ProjectionParams};
use geocontract::report;
use geocontract::sampling::{rounded_geometric_grid, DEFAULT_PER_BAND, DEFAULT_SEED};
use geocontract::spaces::{generate, FamilyParams, MarkedSpace};
use geocontract::{with_jobs, SamplingPlan};
use serde::Serialize;
use serde_json::json;

pub const OUT_ENV: &str = "GEOCONTRACT_OUT";

#[derive(Parser)]
#[command(name = "geocontract", version, about = "Contraction, divergence and Morse profiles of marked graphs")]
struct Cli {
    /// Worker threads for the analyzers; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Output directory (default: $GEOCONTRACT_OUT, then the working directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a space document for one of the built-in families.
    Generate(GenerateArgs),
    /// Compute a profile and write it as CSV.
    Profile(ProfileArgs),
    /// Run a verification suite and write its report.
    Verify(VerifyArgs),
    /// Render a profile CSV as SVG.
    Plot(PlotArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum FamilyArg {
    CycleArc,
    Tree,
    GridL1,
    LogSpace,
    Necklace,
    DivergenceNecklace,
    Halfplane,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[arg(long)]
    branching: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    /// Cycle length for cycle_arc, truncation index for log_space.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    arc_len: Option<usize>,
    /// Contraction function ρ of a log space, e.g. `lin:0.5`.
    #[arg(long)]
    rho: Option<String>,
    /// Abel constant A of a log space.
    #[arg(long)]
    a: Option<f64>,
    /// Bead function of a divergence necklace, e.g. `pow:2`.
    #[arg(long)]
    f: Option<String>,
    /// Bead function of a necklace, e.g. `ceil:sqrt`.
    #[arg(long)]
    rho2: Option<String>,
    /// Bead index range `i:j` (inclusive).
    #[arg(long)]
    range: Option<String>,
    #[arg(long)]
    extent: Option<f64>,
    #[arg(long)]
    resolution: Option<f64>,
    /// Document path (default: <out>/<family>.json).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Contraction,
    Divergence,
    Morse,
    GeodesicImage,
}

impl KindArg {
    fn name(self) -> &'static str {
        match self {
            KindArg::Contraction => "contraction",
            KindArg::Divergence => "divergence",
            KindArg::Morse => "morse",
            KindArg::GeodesicImage => "geodesic-image",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlanArg {
    Auto,
    Exhaustive,
    Stratified,
}

#[derive(Args, Clone)]
struct SamplingArgs {
    /// Base-point sampling plan.
    #[arg(long, value_enum, default_value = "auto")]
    plan: PlanArg,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Seeded draws per distance band for the stratified plan.
    #[arg(long, default_value_t = DEFAULT_PER_BAND)]
    per_band: usize,
}

impl SamplingArgs {
    fn plan(&self) -> SamplingPlan {
        match self.plan {
            PlanArg::Auto => SamplingPlan::Auto,
            PlanArg::Exhaustive => SamplingPlan::Exhaustive,
            PlanArg::Stratified => SamplingPlan::Stratified { seed: self.seed, per_band: self.per_band },
        }
    }
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Space document.
    #[arg(long)]
    space: PathBuf,
    /// CSV path (default: <out>/<space stem>-<kind>.csv).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Projection slack ε.
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    /// Ball function ρ₁ of the contraction profile.
    #[arg(long, default_value = "id")]
    rho1: String,
    /// Largest contraction radius (default: the valid radius).
    #[arg(long)]
    r_max: Option<f64>,
    /// Divergence radii, comma separated (default: geometric, 4 per octave).
    #[arg(long)]
    radii: Option<String>,
    /// Divergence parameters `L,A,lambda,kappa`.
    #[arg(long, default_value = "1,0,1,1")]
    params: String,
    /// Divergence centres every `k`-th vertex of γ (default: every vertex).
    #[arg(long)]
    s_stride: Option<usize>,
    /// Quasi-geodesic constants L for the Morse profile, comma separated.
    #[arg(long, default_value = "1.5,2,3,4")]
    l_grid: String,
    /// Morse pair separations, comma separated (default: geometric).
    #[arg(long)]
    separations: Option<String>,
    /// Morse start positions along γ; 0 means every vertex.
    #[arg(long, default_value_t = 8)]
    starts: usize,
    /// Minimum distance to Y for geodesic-image segments.
    #[arg(long, default_value_t = 4.0)]
    c: f64,
    #[command(flatten)]
    sampling: SamplingArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Theorem14,
    Theorem15,
    Git,
    Abel,
    Robustness,
}

impl SuiteArg {
    pub fn name(self) -> &'static str {
        match self {
            SuiteArg::Theorem14 => "theorem14",
            SuiteArg::Theorem15 => "theorem15",
            SuiteArg::Git => "git",
            SuiteArg::Abel => "abel",
            SuiteArg::Robustness => "robustness",
        }
    }
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(value_enum)]
    suite: SuiteArg,
    /// Run on the built-in example set (the default without --space).
    #[arg(long, conflicts_with = "space")]
    builtin: bool,
    /// Run on a single space document instead.
    #[arg(long)]
    space: Option<PathBuf>,
    #[command(flatten)]
    sampling: SamplingArgs,
}

#[derive(Args)]
struct PlotArgs {
    /// Profile CSV with `r,value` leading columns.
    #[arg(long)]
    csv: PathBuf,
    /// SVG path (default: the CSV path with an .svg extension).
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Everything that determines an output besides the space itself.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub sampling: SamplingPlan,
    pub constant_box: ConstantBox,
    /// Relative tolerance used in every comparison: `1e-9·max(1, |x|)`.
    pub tolerance: f64,
    pub tolerance_overrides: serde_json::Map<String, serde_json::Value>,
    pub output_dir: String,
}

impl RunConfig {
    fn new(sampling: &SamplingArgs, out: &Path) -> Self {
        RunConfig {
            seed: sampling.seed,
            sampling: sampling.plan(),
            constant_box: ConstantBox::default(),
            tolerance: 1e-9,
            tolerance_overrides: serde_json::Map::new(),
            output_dir: out.display().to_string(),
        }
    }
}

/// A failed command: stable code, message, exit status and optional witness.
#[derive(Debug)]
pub struct Failure {
    pub code: String,
    pub message: String,
    pub exit: u8,
    pub witness: Option<serde_json::Value>,
}

impl Failure {
    pub fn usage(code: &str, message: impl Into<String>) -> Self {
        Failure { code: code.into(), message: message.into(), exit: 2, witness: None }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Failure::usage("io-error", format!("{}: {e}", path.display()))
    }

    fn emit(&self) {
        let mut body = json!({ "error": self.code, "message": self.message });
        if let Some(w) = &self.witness {
            body["witness"] = w.clone();
        }
        eprintln!("{body}");
    }
}

impl From<geocontract::Error> for Failure {
    fn from(e: geocontract::Error) -> Self {
        let exit = if matches!(e, geocontract::Error::WindowViolation(_)) { 3 } else { 2 };
        Failure { code: e.code().into(), message: e.to_string(), exit, witness: None }
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Failure::io(path, e))
}

pub fn read_space(path: &Path) -> CliResult<MarkedSpace> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    Ok(load_space(&text)?)
}

fn need<T>(value: Option<T>, flag: &str, family: &str) -> CliResult<T> {
    value.ok_or_else(|| Failure::usage("missing-param", format!("--{flag} is required for family {family}")))
}

fn function(text: &str) -> CliResult<FunctionSpec> {
    Ok(FunctionSpec::parse(text)?)
}

fn parse_range(text: &str) -> CliResult<(usize, usize)> {
    let bad = || Failure::usage("invalid-params", format!("--range expects i:j, got `{text}`"));
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn parse_list(text: &str, flag: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Failure::usage("invalid-params", format!("--{flag}: cannot parse `{t}`"))))
        .collect()
}

fn family_params(a: &GenerateArgs) -> CliResult<FamilyParams> {
    let name = a.family.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    let fam = name.as_str();
    Ok(match a.family {
        FamilyArg::CycleArc => FamilyParams::CycleArc { n: need(a.n, "n", fam)?, arc_len: need(a.arc_len, "arc-len", fam)? },
        FamilyArg::Tree => FamilyParams::Tree { branching: need(a.branching, "branching", fam)?, depth: need(a.depth, "depth", fam)? },
        FamilyArg::GridL1 => FamilyParams::GridL1 { width: need(a.width, "width", fam)?, height: need(a.height, "height", fam)? },
        FamilyArg::LogSpace => FamilyParams::LogSpace {
            rho: function(need(a.rho.as_deref(), "rho", fam)?)?,
            a: need(a.a, "a", fam)?,
            n: need(a.n, "n", fam)?,
        },
        FamilyArg::Necklace => {
            let (i_min, i_max) = parse_range(need(a.range.as_deref(), "range", fam)?)?;
            FamilyParams::Necklace { rho2: function(need(a.rho2.as_deref(), "rho2", fam)?)?, i_min, i_max }
        }
        FamilyArg::DivergenceNecklace => {
            let (i_min, i_max) = parse_range(need(a.range.as_deref(), "range", fam)?)?;
            FamilyParams::DivergenceNecklace { f: function(need(a.f.as_deref(), "f", fam)?)?, i_min, i_max }
        }
        FamilyArg::Halfplane => {
            FamilyParams::Halfplane { extent: need(a.extent, "extent", fam)?, resolution: a.resolution.unwrap_or(1.0) }
        }
    })
}

fn cmd_generate(a: &GenerateArgs, out: &Path) -> CliResult<()> {
    let params = family_params(a)?;
    let s = generate(&params)?;
    let path = a.output.clone().unwrap_or_else(|| out.join(format!("{}.json", s.meta.family.name())));
    write_file(&path, &save_space(&s))?;
    println!("{}", path.display());
    Ok(())
}

/// Default divergence radii: geometric (4 per octave) from the first radius
/// with a positive forbidden radius up to the largest radius with an
/// admissible centre.
pub fn default_radii(s: &MarkedSpace, dp: &DivergenceParams) -> CliResult<Vec<f64>> {
    let top = s.valid_radius().min(s.gamma()?.length() / 2.0);
    let step = s.graph.resolution();
    let mut lo = step;
    while dp.forbidden_radius(lo) <= 0.0 && lo <= top {
        lo += step;
    }
    if lo > top {
        return Err(Failure::from(geocontract::Error::WindowViolation(format!(
            "no radius up to {top} has a positive forbidden radius"
        ))));
    }
    Ok(rounded_geometric_grid(lo, top, 4, step).into_iter().filter(|&r| r >= lo && r <= top).collect())
}

fn cmd_profile(a: &ProfileArgs, out: &Path) -> CliResult<()> {
    let s = read_space(&a.space)?;
    let run = RunConfig::new(&a.sampling, out);
    let proj = ProjectionParams::new(a.epsilon)?;
    let (csv, result) = match a.kind {
        KindArg::Contraction => {
            let rho1 = function(&a.rho1)?;
            let r_max = a.r_max.unwrap_or(s.valid_radius());
            let p = contraction_profile(&s, proj, &rho1, r_max, run.sampling)?;
            (report::profile_table(&p).to_csv(), serde_json::to_value(&p))
        }
        KindArg::Divergence => {
            let v = parse_list(&a.params, "params")?;
            let [l, aa, lambda, kappa] = v[..] else {
                return Err(Failure::usage("invalid-params", "--params expects L,A,lambda,kappa"));
            };
            let dp = DivergenceParams::new(l, aa, lambda, kappa)?;
            let rs = match &a.radii {
                Some(t) => parse_list(t, "radii")?,
                None => default_radii(&s, &dp)?,
            };
            let grid = a.s_stride.map_or(SGrid::EveryVertex, |step| SGrid::Stride { step });
            let p = divergence_profile(&s, &dp, &rs, &grid)?;
            (report::divergence_table(&p).to_csv(), serde_json::to_value(&p))
        }
        KindArg::Morse => {
            let ls = parse_list(&a.l_grid, "l-grid")?;
            let separations = a.separations.as_deref().map(|t| parse_list(t, "separations")).transpose()?.unwrap_or_default();
            let p = morse_profile(&s, &ls, &PairPlan { separations, starts: a.starts })?;
            (report::morse_table(&p).to_csv(), serde_json::to_value(&p))
        }
        KindArg::GeodesicImage => {
            let p = geodesic_image_profile(&s, proj, a.c, run.sampling)?;
            (report::geodesic_image_table(&p).to_csv(), serde_json::to_value(&p))
        }
    };
    let stem = a.space.file_stem().map_or("space".into(), |t| t.to_string_lossy().into_owned());
    let path = a.output.clone().unwrap_or_else(|| out.join(format!("{stem}-{}.csv", a.kind.name())));
    write_file(&path, &csv)?;
    let sidecar = json!({
        "kind": a.kind.name(),
        "space": a.space.display().to_string(),
        "run_config": run,
        "result": result.map_err(|e| Failure::usage("internal", e.to_string()))?,
    });
    write_file(&path.with_extension("run.json"), &format!("{sidecar:#}\n"))?;
    println!("{}", path.display());
    Ok(())
}

fn cmd_verify(a: &VerifyArgs, out: &Path) -> CliResult<()> {
    let run = RunConfig::new(&a.sampling, out);
    let dir = out.join(format!("verify-{}", a.suite.name()));
    let report = suites::run_suite(a.suite, a.space.as_deref(), &run, &dir)?;
    let path = dir.join("report.json");
    write_file(&path, &format!("{:#}\n", serde_json::to_value(&report).expect("report serializes")))?;
    for r in &report.spaces {
        println!("{:<5} {} ({})", if r.outcome_ok { "PASS" } else { "FAIL" }, r.space, r.expectation.name());
    }
    println!("{}", path.display());
    match report.failure_witness() {
        None => Ok(()),
        Some(w) => Err(Failure { code: "verification-failed".into(), message: format!("suite {} failed", a.suite.name()), exit: 1, witness: Some(w) }),
    }
}

fn cmd_plot(a: &PlotArgs) -> CliResult<()> {
    let text = fs::read_to_string(&a.csv).map_err(|e| Failure::io(&a.csv, e))?;
    let svg = plot::render(&text, &a.csv.display().to_string())?;
    let path = a.output.clone().unwrap_or_else(|| a.csv.with_extension("svg"));
    write_file(&path, &svg)?;
    println!("{}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = e.print();
                    ExitCode::SUCCESS
                }
                ErrorKind::MissingRequiredArgument | ErrorKind::MissingSubcommand => {
                    Failure::usage("missing-param", e.render().to_string().trim()).emit();
                    ExitCode::from(2)
                }
                _ => {
                    Failure::usage("usage", e.render().to_string().trim()).emit();
                    ExitCode::from(2)
                }
            };
        }
    };
    let out = cli.out.clone().or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("."));
    let result = with_jobs(cli.jobs, || match &cli.command {
        Command::Generate(a) => cmd_generate(a, &out),
        Command::Profile(a) => cmd_profile(a, &out),
        Command::Verify(a) => cmd_verify(a, &out),
        Command::Plot(a) => cmd_plot(a),
    });
    match result.map_err(Failure::from).and_then(|r| r) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            f.emit();
            ExitCode::from(f.exit)
        }
    }
}
