//! `weyl`: batch front-end writing CSV tables and `CHECK` summary lines.
//!
//! Exit status: 0 when every check passes, 1 when some check fails, 2 on input or
//! computation errors.

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::FRAC_PI_2;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use weyl_core::estimates::{
    band_constant, certified_band, cor_t5_check, positive_increase_diagnostic, prop_a4_report, ratio_bands,
    slow_variation, theorem1_report, EstimateOptions, IncreaseVerdict,
};
use weyl_core::report::{all_pass, fmt_f64, write_csv, Check};
use weyl_core::scales::{self, DEFAULT_ETA};
use weyl_core::spec_file::{read_toml, GridSpec, ModelFile, RunOptions, SlFile, StringFile};
use weyl_core::strings_sl::{theorem_a41_check, theorem_t9_check};
use weyl_core::tails::{at0_check, y74_empirical, y74_quantity, At0Options, ComparisonFunction, DEFAULT_EPS};
use weyl_core::verify;
use weyl_core::weyl::{eval_q, propagate, weyl_disk};
use weyl_core::{zoo, HamiltonianModel, WeylError, C64};

#[derive(Parser)]
#[command(name = "weyl", version, about = "Weyl coefficients of canonical systems: evaluation, envelopes and checks")]
struct Cli {
    /// CSV destination; standard output when absent
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// TOML model file with a `[model]` table and optional `[grid]`, `[options]`
    #[arg(long, conflicts_with = "zoo")]
    model: Option<PathBuf>,
    /// built-in model name
    #[arg(long)]
    zoo: Option<String>,
}

#[derive(Args, Clone, Default)]
struct GridArgs {
    #[arg(long)]
    r_min: Option<f64>,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    per_decade: Option<f64>,
}

#[derive(Args, Clone, Default)]
struct KnobArgs {
    /// normalization of the scale functions
    #[arg(long)]
    eta: Option<f64>,
    /// ray angle in (0, pi)
    #[arg(long)]
    theta: Option<f64>,
    /// per-point certificate relative to A(r)
    #[arg(long)]
    tol_factor: Option<f64>,
    /// dilation factor
    #[arg(long)]
    k: Option<f64>,
    /// largest band constant accepted for empirical ratio bands
    #[arg(long, default_value_t = 10.0)]
    band_limit: f64,
}

#[derive(Subcommand)]
enum Command {
    /// q(r e^{i theta}) on an r grid
    Q {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        knobs: KnobArgs,
        /// absolute certificate per point
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// scale functions and the envelopes A, L
    Envelopes {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        knobs: KnobArgs,
    },
    /// estimate records and their ratio bands
    Theorem1 {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        knobs: KnobArgs,
    },
    /// the explicit two-sided band
    Band {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        knobs: KnobArgs,
    },
    /// tangent versus its Omega prediction
    Prop24 {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        knobs: KnobArgs,
    },
    /// distances to omega3/omega2 at r and kr
    Cor25 {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        knobs: KnobArgs,
    },
    /// |q(ikr)/q(ir) - 1| and the positive-increase diagnostic
    Slowvar {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        knobs: KnobArgs,
    },
    /// construct a built-in model and run its self-checks
    Zoo {
        name: String,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        knobs: KnobArgs,
    },
    /// Krein string scale check
    String {
        /// TOML file with a `[string]` table
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        knobs: KnobArgs,
    },
    /// Sturm-Liouville scale check
    Sl {
        /// TOML file with a `[problem]` table
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        knobs: KnobArgs,
    },
    /// spectral tail diagnostics
    Tails {
        #[command(flatten)]
        model: ModelArgs,
        /// exponent of f(r) = r^e in the integrability comparison
        #[arg(long, default_value_t = 0.0)]
        f_exponent: f64,
        /// exponent of g(r) = r^e in the growth comparison
        #[arg(long, default_value_t = 1.0)]
        g_exponent: f64,
        /// right end of the Omega-side integral
        #[arg(long)]
        a_prime: Option<f64>,
    },
    /// the acceptance suite
    VerifyAll {
        /// run only these criteria
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
    },
}

/// Resolved run inputs: model, grid and knobs after merging file and flags.
struct Run {
    model: HamiltonianModel,
    grid: Vec<f64>,
    opts: RunOptions,
}

fn merge_grid(file: Option<GridSpec>, flags: &GridArgs, default: GridSpec) -> Result<Vec<f64>, WeylError> {
    let base = file.unwrap_or(default);
    GridSpec {
        r_min: flags.r_min.unwrap_or(base.r_min),
        r_max: flags.r_max.unwrap_or(base.r_max),
        per_decade: flags.per_decade.unwrap_or(base.per_decade),
    }
    .points()
}

fn merge_opts(file: RunOptions, k: &KnobArgs) -> Result<RunOptions, WeylError> {
    let o = RunOptions {
        eta: k.eta.or(file.eta),
        theta: k.theta.or(file.theta),
        tol_factor: k.tol_factor.or(file.tol_factor),
        k: k.k.or(file.k),
        a_prime: file.a_prime,
    };
    o.validate()?;
    Ok(o)
}

const DEFAULT_GRID: GridSpec = GridSpec { r_min: 1.0, r_max: 1e6, per_decade: 5.0 };

fn load(model: &ModelArgs, grid: &GridArgs, knobs: &KnobArgs) -> Result<Run, WeylError> {
    let (built, file_grid, file_opts) = match (&model.model, &model.zoo) {
        (Some(path), _) => {
            let f: ModelFile = read_toml(path)?;
            (f.model.build()?, f.grid, f.options)
        }
        (None, Some(name)) => (zoo::by_name(name)?, None, RunOptions::default()),
        (None, None) => {
            return Err(WeylError::Config { key: "--model".into(), msg: "give --model FILE or --zoo NAME".into() })
        }
    };
    Ok(Run { model: built, grid: merge_grid(file_grid, grid, DEFAULT_GRID)?, opts: merge_opts(file_opts, knobs)? })
}

fn estimate_options(o: &RunOptions) -> EstimateOptions {
    let d = EstimateOptions::default();
    EstimateOptions { eta: o.eta.unwrap_or(d.eta), tol_factor: o.tol_factor.unwrap_or(d.tol_factor) }
}

/// Margin of `c <= limit`, relative to the limit.
fn band_check(name: &str, c: f64, limit: f64) -> Check {
    let margin = if c.is_finite() { 1.0 - c / limit } else { f64::NEG_INFINITY };
    Check::new(name, margin, format!("band constant {c:.6}"))
}

struct Output {
    csv: String,
    checks: Vec<Check>,
    notes: Vec<String>,
}

fn csv<T: Serialize>(rows: &[T]) -> Result<String, WeylError> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8_lossy(&buf).into_owned())
}

#[derive(Serialize)]
struct QRow {
    r: f64,
    theta: f64,
    q: (f64, f64),
    error_radius: f64,
    t_used: f64,
}

#[derive(Serialize)]
struct CheckRow<'a> {
    criterion: u32,
    name: &'a str,
    pass: bool,
    margin: f64,
    seconds: f64,
    detail: &'a str,
}

fn execute(cmd: &Command) -> Result<Output, WeylError> {
    match cmd {
        Command::Q { model, grid, knobs, tol } => {
            let run = load(model, grid, knobs)?;
            let theta = run.opts.theta.unwrap_or(FRAC_PI_2);
            let rows = run
                .grid
                .par_iter()
                .map(|&r| {
                    let v = eval_q(&run.model, C64::from_polar(r, theta), *tol)?;
                    Ok(QRow { r, theta, q: v.value, error_radius: v.error_radius, t_used: v.t_used })
                })
                .collect::<Result<Vec<_>, WeylError>>()?;
            let worst = rows.iter().map(|r| r.error_radius).fold(0.0, f64::max);
            let checks = vec![Check::new("q.certificate", 1.0 - worst / tol, format!("largest error radius {worst:e}"))];
            Ok(Output { csv: csv(&rows)?, checks, notes: vec![] })
        }
        Command::Envelopes { model, grid, knobs } => {
            let run = load(model, grid, knobs)?;
            let eta = run.opts.eta.unwrap_or(DEFAULT_ETA);
            let rows = run
                .grid
                .par_iter()
                .map(|&r| scales::envelopes(&run.model, r, eta))
                .collect::<Result<Vec<_>, WeylError>>()?;
            let ordered = rows.iter().all(|e| e.l_env <= e.a_env * (1.0 + 1e-12));
            let checks = vec![Check::new("envelopes.l_below_a", if ordered { 0.0 } else { -1.0 }, "")];
            Ok(Output { csv: csv(&rows)?, checks, notes: vec![] })
        }
        Command::Theorem1 { model, grid, knobs } => {
            let run = load(model, grid, knobs)?;
            let recs = theorem1_report(&run.model, &run.grid, &estimate_options(&run.opts))?;
            let b = ratio_bands(&recs);
            let checks = vec![
                band_check("theorem1.ratio_im", b.ratio_im, knobs.band_limit),
                band_check("theorem1.ratio_inv", b.ratio_inv, knobs.band_limit),
                band_check("theorem1.ratio_center", b.ratio_center, knobs.band_limit),
            ];
            Ok(Output { csv: csv(&recs)?, checks, notes: vec![] })
        }
        Command::Band { model, grid, knobs } => {
            let run = load(model, grid, knobs)?;
            let res = certified_band(&run.model, &run.grid, run.opts.theta.unwrap_or(FRAC_PI_2))?;
            let c = res.constants;
            let notes = vec![format!(
                "constants eta={} theta={} lower={} upper={} ratio={}",
                fmt_f64(c.eta),
                fmt_f64(c.theta),
                fmt_f64(c.lower()),
                fmt_f64(c.upper()),
                fmt_f64(c.ratio())
            )];
            let checks = vec![Check::new("band.inequality", res.margin, "smallest log slack")];
            Ok(Output { csv: csv(&res.records)?, checks, notes })
        }
        Command::Prop24 { model, grid, knobs } => {
            let run = load(model, grid, knobs)?;
            let recs = prop_a4_report(&run.model, &run.grid, &estimate_options(&run.opts))?;
            let c = band_constant(&recs.iter().map(|r| r.tangent_ratio).collect::<Vec<_>>());
            let a = band_constant(&recs.iter().map(|r| r.abs_ratio).collect::<Vec<_>>());
            let checks = vec![band_check("prop24.tangent_ratio", c, knobs.band_limit), band_check("prop24.abs_ratio", a, knobs.band_limit)];
            Ok(Output { csv: csv(&recs)?, checks, notes: vec![] })
        }
        Command::Cor25 { model, grid, knobs } => {
            let run = load(model, grid, knobs)?;
            let res = cor_t5_check(&run.model, &run.grid, run.opts.k.unwrap_or(2.0), &estimate_options(&run.opts))?;
            let spread = |e: (f64, f64)| (e.1 / e.0).sqrt();
            let checks = vec![
                band_check("cor25.im_over_distance", spread(res.im_dist_extent), knobs.band_limit),
                band_check("cor25.distance_ratio", spread(res.dist_extent), knobs.band_limit),
            ];
            Ok(Output { csv: csv(&res.records)?, checks, notes: vec![] })
        }
        Command::Slowvar { model, grid, knobs } => {
            let run = load(model, grid, knobs)?;
            let opts = estimate_options(&run.opts);
            let recs = slow_variation(&run.model, run.opts.k.unwrap_or(2.0), &run.grid, &opts)?;
            let (first, last) = (recs.first().map_or(f64::NAN, |r| r.deviation), recs.last().map_or(f64::NAN, |r| r.deviation));
            let checks =
                vec![Check::new("slowvar.nonincreasing", first - last, format!("deviation {first:.6} -> {last:.6}"))];
            let samples = run
                .grid
                .par_iter()
                .map(|&r| Ok((r, eval_q(&run.model, C64::new(0.0, r), 1e-9 * (1.0 + r))?.q().norm())))
                .collect::<Result<Vec<_>, WeylError>>()?;
            let note = match positive_increase_diagnostic(&samples) {
                Ok(d) => format!(
                    "positive increase: {}",
                    if d.verdict == IncreaseVerdict::PositivelyIncreasing { "positively_increasing" } else { "inconclusive" }
                ),
                Err(e) => format!("positive increase: not assessed ({e})"),
            };
            Ok(Output { csv: csv(&recs)?, checks, notes: vec![note] })
        }
        Command::Zoo { name, grid, knobs } => {
            let model = zoo::by_name(name)?;
            let run = Run { model, grid: merge_grid(None, grid, DEFAULT_GRID)?, opts: merge_opts(RunOptions::default(), knobs)? };
            let mut checks = vec![match run.model.validate() {
                Ok(()) => Check::new("zoo.validate", 0.0, ""),
                Err(e) => Check::error("zoo.validate", &e),
            }];
            let recs = theorem1_report(&run.model, &run.grid, &estimate_options(&run.opts))?;
            let min_im = recs.iter().map(|r| r.im_q).fold(f64::INFINITY, f64::min);
            checks.push(Check::new("zoo.im_q_positive", if min_im > 0.0 { 0.0 } else { -1.0 }, format!("min Im q {min_im:e}")));
            let r = recs[recs.len() / 2].r;
            let t = scales::t_hat(&run.model, r, DEFAULT_ETA)?;
            let w = propagate(&run.model, t, C64::new(0.0, r), 1e-10)?;
            let err = if w.ln_norm() > 0.0 {
                let wn = w.w.scale(1.0 / w.w.max_abs());
                (wn.det() - (-2.0 * w.ln_norm()).exp()).norm()
            } else {
                (w.det() - 1.0).norm()
            };
            checks.push(Check::new("zoo.det_w", 1.0 - err / 1e-10, format!("|det W - 1| / |W|^2 = {err:e}")));
            checks.push(match weyl_disk(&w) {
                Ok(d) => Check::new("zoo.disk", if d.radius.is_finite() { 0.0 } else { -1.0 }, format!("radius {:e}", d.radius)),
                Err(e) => Check::error("zoo.disk", &e),
            });
            Ok(Output { csv: csv(&recs)?, checks, notes: vec![] })
        }
        Command::String { spec, grid, knobs } => {
            let f: StringFile = read_toml(spec)?;
            let g = merge_grid(f.grid, grid, GridSpec { r_min: 1.0, r_max: 1e4, per_decade: 5.0 })?;
            let recs = theorem_a41_check(&f.string, &g)?;
            let c = band_constant(&recs.iter().map(|r| r.ratio).collect::<Vec<_>>());
            Ok(Output { csv: csv(&recs)?, checks: vec![band_check("string.ratio", c, knobs.band_limit)], notes: vec![] })
        }
        Command::Sl { spec, grid, knobs } => {
            let f: SlFile = read_toml(spec)?;
            let g = merge_grid(f.grid, grid, GridSpec { r_min: 1.0, r_max: 1e4, per_decade: 5.0 })?;
            let recs = theorem_t9_check(&f.problem, &g)?;
            let cs = band_constant(&recs.iter().map(|r| r.ratio_s).collect::<Vec<_>>());
            let cc = band_constant(&recs.iter().map(|r| r.ratio_c).collect::<Vec<_>>());
            let checks = vec![band_check("sl.ratio_s", cs, knobs.band_limit), band_check("sl.ratio_c", cc, knobs.band_limit)];
            Ok(Output { csv: csv(&recs)?, checks, notes: vec![] })
        }
        Command::Tails { model, f_exponent, g_exponent, a_prime } => {
            let run = load(model, &GridArgs::default(), &KnobArgs::default())?;
            let a_hat = run.model.indivisible_info()?.a_hat;
            let ap = a_prime.or(run.opts.a_prime).unwrap_or(a_hat + 1.0);
            let f = ComparisonFunction::power(*f_exponent);
            let g = ComparisonFunction::power(*g_exponent);
            let at0 = at0_check(&run.model, &f, ap, &At0Options::default())?;
            let s = ap - a_hat;
            let t_grid: Vec<f64> = (0..40).map(|k| a_hat + s * 10f64.powf(-0.2 * k as f64)).collect();
            let y = y74_quantity(&run.model, &g, &t_grid)?;
            let r_grid: Vec<f64> = (0..20).map(|k| 10f64.powf(0.2 * k as f64)).collect();
            let ye = y74_empirical(&run.model, &g, &r_grid, &DEFAULT_EPS)?;
            let checks = vec![
                Check::new("tails.at0_agree", if at0.agree { 0.0 } else { -1.0 }, format!("lhs {:?}, rhs {:?}", at0.lhs.verdict, at0.rhs.verdict)),
                Check::new("tails.y74_agree", if y.class == ye.class { 0.0 } else { -1.0 }, format!("omega side {:?}, spectral side {:?}", y.class, ye.class)),
            ];
            let notes = vec![format!("at0 lhs total {} (r <= {}), rhs total {}", fmt_f64(at0.lhs.total), fmt_f64(at0.r_max), fmt_f64(at0.rhs.total))];
            Ok(Output { csv: csv(&y.samples.iter().map(|s| Y74Row { t: s.0, quantity: s.1 }).collect::<Vec<_>>())?, checks, notes })
        }
        Command::VerifyAll { only } => {
            let reports = if only.is_empty() {
                verify::run_all()
            } else {
                only.iter().map(|&id| verify::run_criterion(id)).collect::<Result<Vec<_>, _>>()?
            };
            let mut checks = Vec::new();
            let mut rows = Vec::new();
            let mut notes = Vec::new();
            for rep in &reports {
                for c in &rep.checks {
                    rows.push(CheckRow { criterion: rep.id, name: &c.name, pass: c.pass, margin: c.margin, seconds: rep.seconds, detail: &c.detail });
                }
                notes.push(format!(
                    "CRITERION {} {} {} ({:.1}s)",
                    rep.id,
                    if rep.pass() { "PASS" } else { "FAIL" },
                    rep.title,
                    rep.seconds
                ));
                checks.extend(rep.checks.iter().cloned());
            }
            Ok(Output { csv: csv(&rows)?, checks, notes })
        }
    }
}

#[derive(Serialize)]
struct Y74Row {
    t: f64,
    quantity: f64,
}

fn configure_threads() -> Result<(), WeylError> {
    if let Ok(v) = std::env::var("WEYL_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| WeylError::Config { key: "WEYL_THREADS".into(), msg: format!("expected a positive integer, got '{v}'") })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| WeylError::Config { key: "WEYL_THREADS".into(), msg: e.to_string() })?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool, WeylError> {
    configure_threads()?;
    let out = execute(&cli.command)?;
    let io_err = |e: io::Error| WeylError::Config { key: "--out".into(), msg: e.to_string() };
    let summary: Box<dyn Write> = match &cli.out {
        Some(path) => {
            File::create(path).and_then(|mut f| f.write_all(out.csv.as_bytes())).map_err(io_err)?;
            Box::new(io::stdout())
        }
        None => {
            io::stdout().write_all(out.csv.as_bytes()).map_err(io_err)?;
            Box::new(io::stderr())
        }
    };
    let mut summary = summary;
    for c in &out.checks {
        writeln!(summary, "{c}").map_err(io_err)?;
    }
    for n in &out.notes {
        writeln!(summary, "{n}").map_err(io_err)?;
    }
    Ok(all_pass(&out.checks))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
