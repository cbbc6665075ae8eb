use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use sqint::group::{
    make_affine, make_exotic, make_exotic_quotient, make_polarized_wh, make_standard_wh, make_wh_quotient,
};
use sqint::io::{read_signal, read_transform, write_signal, write_transform};
use sqint::measures::RhoKind;
use sqint::quadrature::{haar_grid_axes, GridAxis};
use sqint::rep::{affine_rep, displacement_rep, Representation};
use sqint::state::{DiscretizedState, StateGrid};
use sqint::transform::{analyze_with_tail, clip_axes, default_affine_axes, duflo_moore, synthesize, DmConfig};
use sqint::vectors;
use sqint::verify::{self, GroupChoice, SuiteKind, VerifyConfig};

#[derive(Parser)]
#[command(name = "sqint", version, about = "Square-integrable representations: verification suites and transforms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the chart, product, Haar density and modular function of each group in a family.
    Conventions {
        #[arg(long)]
        group: GroupChoice,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the verification suites and emit a JSON report.
    Verify {
        #[command(flatten)]
        opts: SuiteOpts,
        /// Report path; stdout when absent.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the suites and write their plot tables as CSV next to the report.
    Report {
        #[command(flatten)]
        opts: SuiteOpts,
        #[arg(long, default_value = "report")]
        out_dir: PathBuf,
    },
    /// Coefficients of a signal file against an analyzing vector.
    Analyze(AnalyzeArgs),
    /// Reconstruct a signal from a coefficient file.
    Synthesize(SynthesizeArgs),
}

#[derive(Args, Clone, Default)]
struct SuiteOpts {
    /// TOML file with any of the flag fields; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    group: Option<GroupChoice>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    kcheck: Option<f64>,
    /// Analyzing vector: gaussian, morlet, mexican_hat, hermiteK, exoticK.
    #[arg(long)]
    psi: Option<String>,
    #[arg(long)]
    rho: Option<RhoKind>,
    #[arg(long)]
    rho_width: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Exotic state-grid resolution per axis.
    #[arg(long)]
    resolution: Option<usize>,
    /// Comma-separated subset of group,multiplier,rep,measure,transform.
    #[arg(long, value_delimiter = ',')]
    suites: Option<Vec<SuiteKind>>,
    /// Threshold override, `name=value`; repeatable.
    #[arg(long = "tol", value_parser = parse_tol)]
    tolerances: Vec<(String, f64)>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    group: Option<GroupChoice>,
    n: Option<usize>,
    kcheck: Option<f64>,
    psi: Option<String>,
    rho: Option<RhoKind>,
    rho_width: Option<f64>,
    seed: Option<u64>,
    samples: Option<usize>,
    resolution: Option<usize>,
    suites: Option<Vec<SuiteKind>>,
    #[serde(default)]
    tolerances: BTreeMap<String, f64>,
}

fn parse_tol(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected name=value")?;
    let v = v.parse::<f64>().map_err(|e| e.to_string())?;
    Ok((k.to_string(), v))
}

impl SuiteOpts {
    fn resolve(&self) -> Result<VerifyConfig> {
        let file = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                toml::from_str::<FileConfig>(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => FileConfig::default(),
        };
        let group =
            self.group.or(file.group).ok_or_else(|| anyhow!("no group selected (use --group or a config file)"))?;
        let mut cfg = VerifyConfig::new(group);
        macro_rules! pick {
            ($f:ident) => {
                if let Some(v) = self.$f.clone().or(file.$f) {
                    cfg.$f = v;
                }
            };
        }
        pick!(n);
        pick!(kcheck);
        pick!(psi);
        pick!(rho);
        pick!(rho_width);
        pick!(seed);
        pick!(samples);
        pick!(resolution);
        pick!(suites);
        cfg.tolerances = file.tolerances;
        cfg.tolerances.extend(self.tolerances.iter().cloned());
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    /// wh or affine; signals are one-dimensional.
    #[arg(long)]
    group: GroupChoice,
    /// Signal CSV; its JSON header sits next to it with extension `.json`.
    #[arg(long)]
    input: PathBuf,
    /// Named analyzing vector, or `file:PATH` for a signal CSV on the same grid.
    #[arg(long)]
    psi: Option<String>,
    /// Half-width of the translation box (`q, p` for wh, `b` for affine).
    #[arg(long)]
    half_width: Option<f64>,
    /// Nodes per translation axis.
    #[arg(long)]
    res: Option<usize>,
    /// Coefficient CSV; the header goes to the same path with extension `.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthesizeArgs {
    #[arg(long)]
    group: GroupChoice,
    /// Coefficient CSV written by `analyze`.
    #[arg(long)]
    input: PathBuf,
    /// Analyzing vector; defaults to the one recorded in the coefficient header.
    #[arg(long)]
    psi: Option<String>,
    /// Original signal, for the round-trip error.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Reconstructed signal CSV (header at extension `.json`).
    #[arg(long)]
    out: PathBuf,
    /// JSON report path; stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
}

/// Failures of the suites, as opposed to usage or IO errors.
struct ChecksFailed;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Conventions { group, n, out } => conventions(group, n, out.as_deref()).map(|_| true),
        Command::Verify { opts, report } => cmd_verify(&opts, report.as_deref()).map(|r| r.is_ok()),
        Command::Report { opts, out_dir } => cmd_report(&opts, &out_dir).map(|r| r.is_ok()),
        Command::Analyze(a) => cmd_analyze(&a).map(|_| true),
        Command::Synthesize(a) => cmd_synthesize(&a).map(|_| true),
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn conventions(group: GroupChoice, n: usize, out: Option<&Path>) -> Result<()> {
    let groups = match group {
        GroupChoice::Wh => vec![make_polarized_wh(n)?, make_standard_wh(n)?, make_wh_quotient(n)?],
        GroupChoice::Affine => vec![make_affine(n)?],
        GroupChoice::Exotic => vec![make_exotic(n)?, make_exotic_quotient(n)?],
    };
    let sheets: Vec<_> = groups.iter().map(|g| g.conventions()).collect();
    emit(out, &json(&sheets)?)
}

fn summarize(report: &verify::Report) {
    for c in &report.checks {
        let tail = c.tail.map(|t| format!(" tail {t:.3e}")).unwrap_or_default();
        let status = c.status.as_deref().map(|s| format!(" [{s}]")).unwrap_or_default();
        eprintln!(
            "{} {}: {:.3e} <= {:.1e}{tail}{status}",
            if c.pass { "ok  " } else { "FAIL" },
            c.name,
            c.measured,
            c.threshold
        );
    }
    for n in &report.notes {
        eprintln!("note: {n}");
    }
}

fn cmd_verify(opts: &SuiteOpts, report: Option<&Path>) -> Result<std::result::Result<(), ChecksFailed>> {
    let cfg = opts.resolve()?;
    let out = verify::run(&cfg)?;
    summarize(&out.report);
    emit(report, &json(&out.report)?)?;
    Ok(if out.report.pass { Ok(()) } else { Err(ChecksFailed) })
}

fn cmd_report(opts: &SuiteOpts, dir: &Path) -> Result<std::result::Result<(), ChecksFailed>> {
    let cfg = opts.resolve()?;
    let out = verify::run(&cfg)?;
    summarize(&out.report);
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("report.json"), json(&out.report)?)?;
    for (name, t) in &out.tables {
        fs::write(dir.join(format!("{name}.csv")), t.to_csv())?;
    }
    Ok(if out.report.pass { Ok(()) } else { Err(ChecksFailed) })
}

fn header_path(p: &Path) -> PathBuf {
    p.with_extension("json")
}

fn signal_rep(group: GroupChoice) -> Result<(Box<dyn Representation>, DmConfig)> {
    match group {
        GroupChoice::Wh => Ok((Box::new(displacement_rep(1)?), DmConfig::Gabor)),
        GroupChoice::Affine => Ok((Box::new(affine_rep(1)?), DmConfig::Affine)),
        GroupChoice::Exotic => bail!("signal files are supported for the wh and affine groups only"),
    }
}

fn load_psi(name: &str, grid: &StateGrid) -> Result<DiscretizedState> {
    if let Some(p) = name.strip_prefix("file:") {
        let p = Path::new(p);
        let (f, h) = read_signal(p, &header_path(p)).with_context(|| format!("reading {}", p.display()))?;
        if &h.grid != grid {
            bail!("analyzing vector {} is not on the signal grid", p.display());
        }
        Ok(f)
    } else {
        Ok(vectors::by_name(name, grid)?)
    }
}

fn cmd_analyze(a: &AnalyzeArgs) -> Result<()> {
    let (rep, dm) = signal_rep(a.group)?;
    let (phi, _) =
        read_signal(&a.input, &header_path(&a.input)).with_context(|| format!("reading {}", a.input.display()))?;
    if phi.grid().dim() != 1 {
        bail!("signals must be one-dimensional");
    }
    let psi_name = a.psi.clone().unwrap_or_else(|| a.group.default_psi().to_string());
    let psi = load_psi(&psi_name, phi.grid())?;
    let mut axes = match a.group {
        GroupChoice::Wh => vec![GridAxis::uniform(-8.0, 8.0, 64); 2],
        _ => default_affine_axes(),
    };
    let translations = if a.group == GroupChoice::Wh { 2 } else { 1 };
    for ax in axes.iter_mut().take(translations) {
        let h = a.half_width.unwrap_or(ax.hi);
        *ax = GridAxis::uniform(-h, h, a.res.unwrap_or(ax.count));
    }
    let (axes, clipped) = clip_axes(rep.as_ref(), &psi, &axes);
    let grid = haar_grid_axes(rep.group(), axes)?;
    let mut r = analyze_with_tail(rep.as_ref(), &psi, &phi, &grid)?;
    r.analyzing_vector_id = psi_name;
    if clipped {
        r.meta.notes.push("box clipped to the grid-safe range of psi".into());
    }
    let norm = duflo_moore(dm)?.norm_of(&psi)?;
    let r = r.with_dm_norm(norm);
    write_transform(&a.out, &header_path(&a.out), &r, Some(phi.grid()))?;
    Ok(())
}

#[derive(Serialize)]
struct SynthesisReport {
    input: String,
    psi: String,
    dm_norm: f64,
    tail_estimate: Option<f64>,
    round_trip_relative_l2: Option<f64>,
}

fn cmd_synthesize(a: &SynthesizeArgs) -> Result<()> {
    let (rep, _) = signal_rep(a.group)?;
    let (r, header) = read_transform(&a.input, &header_path(&a.input), rep.group())
        .with_context(|| format!("reading {}", a.input.display()))?;
    let grid = header.signal_grid.clone().ok_or_else(|| anyhow!("coefficient header has no signal grid"))?;
    let psi_name = a.psi.clone().unwrap_or_else(|| header.psi.clone());
    let psi = load_psi(&psi_name, &grid)?;
    let f = synthesize(&r, rep.as_ref(), &psi)?;
    write_signal(&a.out, &header_path(&a.out), &f, "synthesized")?;
    let err = match &a.reference {
        Some(p) => {
            let (g, _) = read_signal(p, &header_path(p)).with_context(|| format!("reading {}", p.display()))?;
            let n = g.norm();
            let d = f.distance(&g)?;
            Some(if n > 0.0 { d / n } else { d })
        }
        None => None,
    };
    let rep_out = SynthesisReport {
        input: a.input.display().to_string(),
        psi: psi_name,
        dm_norm: r.dm_norm.unwrap_or(f64::NAN),
        tail_estimate: r.meta.tail_estimate,
        round_trip_relative_l2: err,
    };
    emit(a.report.as_deref(), &json(&rep_out)?)
}
