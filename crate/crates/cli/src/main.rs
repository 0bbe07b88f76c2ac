//! `torus-equidist`: solve sparse Laurent systems and report how their
//! zeros distribute on the unit polycircle.
//!
//! Exit codes: 0 success, 1 other failure, 2 degenerate system (vanishing
//! directional resultant, zero face polynomial, mixed volume 0), 64 parse
//! error, 65 unsupported dimension.

mod output;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use torus_equidist::cycles::{discrepancy_report, histograms, AxisHistogram, DiscrepancyReport};
use torus_equidist::et_bounds::{
    angle_report, eta, positive_degree_report, radius_report, tomography_report, BoundReport, EtaBreakdown,
};
use torus_equidist::experiments::{
    discrepancy_trend, tube_measure_estimate, write_trend_csv, ExperimentConfig, TubeReport,
};
use torus_equidist::laurent::{LaurentPolynomial, SystemSpec};
use torus_equidist::solver::{fmt17, zero_cycle, ZeroCycle};
use torus_equidist::window::window_check;
use torus_equidist::Error;

use output::{write_csv_with_manifest, write_json, RunManifest};

#[derive(Parser)]
#[command(name = "torus-equidist", version, about = "Zeros of sparse Laurent systems on the unit polycircle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Omit the timestamp from the manifest (byte-identical reruns).
    #[arg(long, global = true)]
    no_timestamp: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Clone)]
#[group(required = true, multiple = false)]
struct SystemInput {
    /// System file: JSON `{"n":..,"polynomials":[..]}` or text with
    /// polynomials separated by `;`.
    #[arg(long)]
    system: Option<PathBuf>,
    /// System given inline, polynomials separated by `;`.
    #[arg(long)]
    inline: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Zero cycle with its Bernstein certificate.
    Solve {
        #[command(flatten)]
        input: SystemInput,
    },
    /// Discrepancies, eta and bound verdicts.
    Report {
        #[command(flatten)]
        input: SystemInput,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.2")]
        eps: Vec<f64>,
        /// Largest |a| searched for theta.
        #[arg(long, default_value_t = 64.0)]
        theta_max_norm: f64,
    },
    /// The size eta with its per-direction breakdown.
    Eta {
        #[command(flatten)]
        input: SystemInput,
    },
    /// Per-axis argument and modulus histograms.
    Hist {
        #[command(flatten)]
        input: SystemInput,
        #[arg(long, default_value_t = 24)]
        bins: usize,
    },
    /// Discrepancy trend over dilates of a base support.
    Trend {
        /// Experiment configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the configuration.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Monte Carlo tube measure of homogeneous polynomials.
    Tube {
        /// Tube configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Window integral identities and Fourier bounds.
    WindowCheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TubeConfig {
    polynomials: Vec<String>,
    /// Number of homogeneous coordinates; defaults to the largest variable.
    n: Option<usize>,
    delta: f64,
    #[serde(default = "default_samples")]
    samples: usize,
    #[serde(default)]
    seed: u64,
}

fn default_samples() -> usize {
    100_000
}

/// Error wrapper carrying the process exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let err = e.into();
        let code = err.downcast_ref::<Error>().map_or(1, exit_code);
        Failure { code, err }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } => 64,
        Error::UnsupportedDimension { .. } => 65,
        Error::VanishingResultant { .. } | Error::ZeroFacePolynomial { .. } | Error::DegenerateMixedVolume(_) => 2,
        _ => 1,
    }
}

struct Loaded {
    system: SystemSpec,
    inputs: Value,
}

fn load_system(input: &SystemInput) -> Result<Loaded, Failure> {
    if let Some(text) = &input.inline {
        let system = SystemSpec::parse(text).map_err(|e| annotate(e, text))?;
        return Ok(Loaded { system, inputs: json!({ "inline": text }) });
    }
    let path = input.system.as_ref().expect("clap enforces one input");
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let system = if text.trim_start().starts_with('{') {
        SystemSpec::from_json_str(&text)
    } else {
        SystemSpec::parse(text.trim())
    }
    .map_err(|e| annotate(e, &text))?;
    let inputs = json!({ "system": path.display().to_string(), "text": system.to_text() });
    Ok(Loaded { system, inputs })
}

/// Parse errors on short single-line input get a caret under the position.
fn annotate(e: Error, text: &str) -> Failure {
    let code = exit_code(&e);
    let err = match &e {
        Error::Parse { pos, .. } if !text.contains('\n') && text.len() < 200 => {
            anyhow::anyhow!("{e}\n  {text}\n  {}^", " ".repeat((*pos).min(text.len())))
        }
        _ => anyhow::Error::new(e),
    };
    Failure { code, err }
}

#[derive(Serialize)]
struct SolveOutput {
    n: usize,
    degree: u64,
    mixed_volume: u64,
    certified: bool,
    cycle: ZeroCycle,
}

#[derive(Serialize)]
struct ReportOutput {
    discrepancy: DiscrepancyReport,
    eta: EtaBreakdown,
    bounds: Vec<BoundReport>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var("TORUS_EQUIDIST_THREADS") {
        match v.parse::<usize>() {
            Ok(k) if k > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
            }
            _ => {
                eprintln!("error: TORUS_EQUIDIST_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(1);
            }
        }
    }
    let stdout = io::stdout();
    match run(&cli, stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

fn run<W: Write>(cli: &Cli, mut out: W) -> Result<(), Failure> {
    let stamp = !cli.no_timestamp;
    match &cli.command {
        Command::Solve { input } => {
            let l = load_system(input)?;
            let z = zero_cycle(&l.system)?;
            let mv = l.system.bernstein_number()?;
            let m = RunManifest::new("solve", l.inputs, json!({}), None, stamp);
            match cli.format {
                Format::Json => write_json(
                    &mut out,
                    &m,
                    &SolveOutput {
                        n: z.n,
                        degree: z.degree(),
                        mixed_volume: mv,
                        certified: z.degree() == mv,
                        cycle: z,
                    },
                )?,
                Format::Csv => {
                    let mut body = Vec::new();
                    z.write_csv(&mut body)?;
                    write_csv_with_manifest(&mut out, &m, &body)?;
                }
            }
        }
        Command::Report { input, eps, theta_max_norm } => {
            let l = load_system(input)?;
            let n = l.system.n();
            let z = zero_cycle(&l.system)?;
            let disc = discrepancy_report(&z, eps, *theta_max_norm)?;
            let e = eta(&l.system)?;
            let mut bounds = vec![angle_report(disc.delta_ang, e.eta_interval, n)?];
            for d in &disc.delta_rad {
                bounds.push(radius_report(d.value, e.eta_interval, n, d.eps)?);
            }
            if disc.theta > 0.0 {
                bounds.push(tomography_report(disc.delta_ang, disc.theta, n)?);
            }
            bounds.push(positive_degree_report(&z, e.eta_interval)?);
            let m = RunManifest::new(
                "report",
                l.inputs,
                json!({ "eps": eps, "theta_max_norm": theta_max_norm }),
                None,
                stamp,
            );
            match cli.format {
                Format::Json => write_json(&mut out, &m, &ReportOutput { discrepancy: disc, eta: e, bounds })?,
                Format::Csv => {
                    let mut body = Vec::new();
                    write_bounds_csv(&bounds, &mut body)?;
                    write_csv_with_manifest(&mut out, &m, &body)?;
                }
            }
        }
        Command::Eta { input } => {
            let l = load_system(input)?;
            let e = eta(&l.system)?;
            let m = RunManifest::new("eta", l.inputs, json!({}), None, stamp);
            match cli.format {
                Format::Json => write_json(&mut out, &m, &e)?,
                Format::Csv => {
                    let mut body = Vec::new();
                    {
                        let mut w = csv::Writer::from_writer(&mut body);
                        w.write_record(["v", "log_abs_res", "weight"])?;
                        for t in &e.per_direction {
                            let v: Vec<String> = t.v.0.iter().map(|x| x.to_string()).collect();
                            w.write_record([v.join(" "), fmt17(t.log_abs_res), fmt17(t.weight)])?;
                        }
                        w.flush()?;
                    }
                    write_csv_with_manifest(&mut out, &m, &body)?;
                }
            }
        }
        Command::Hist { input, bins } => {
            let l = load_system(input)?;
            let z = zero_cycle(&l.system)?;
            let h = histograms(&z, *bins)?;
            let m = RunManifest::new("hist", l.inputs, json!({ "bins": bins }), None, stamp);
            match cli.format {
                Format::Json => write_json(&mut out, &m, &json!({ "degree": z.degree(), "axes": h }))?,
                Format::Csv => {
                    let mut body = Vec::new();
                    write_hist_csv(&h, &mut body)?;
                    write_csv_with_manifest(&mut out, &m, &body)?;
                }
            }
        }
        Command::Trend { config, seed } => {
            let text = fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
            let mut c = ExperimentConfig::from_json_str(&text)?;
            if let Some(s) = seed {
                c.seed = *s;
            }
            let report = discrepancy_trend(&c)?;
            let m = RunManifest::new(
                "trend",
                json!({ "config": config.display().to_string() }),
                serde_json::to_value(&c)?,
                Some(c.seed),
                stamp,
            );
            match cli.format {
                Format::Json => write_json(&mut out, &m, &report)?,
                Format::Csv => {
                    let mut body = Vec::new();
                    write_trend_csv(&report.rows, &mut body)?;
                    write_csv_with_manifest(&mut out, &m, &body)?;
                }
            }
        }
        Command::Tube { config, seed } => {
            let text = fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
            let mut c: TubeConfig = serde_json::from_str(&text).map_err(Error::from)?;
            if let Some(s) = seed {
                c.seed = *s;
            }
            let reports = run_tube(&c)?;
            let m = RunManifest::new(
                "tube",
                json!({ "config": config.display().to_string() }),
                serde_json::to_value(&c)?,
                Some(c.seed),
                stamp,
            );
            match cli.format {
                Format::Json => write_json(&mut out, &m, &reports)?,
                Format::Csv => {
                    let mut body = Vec::new();
                    write_tube_csv(&c, &reports, &mut body)?;
                    write_csv_with_manifest(&mut out, &m, &body)?;
                }
            }
        }
        Command::WindowCheck { seed } => {
            let rows = window_check(*seed);
            let m = RunManifest::new("window-check", Value::Null, json!({}), Some(*seed), stamp);
            match cli.format {
                Format::Json => write_json(&mut out, &m, &rows)?,
                Format::Csv => {
                    let mut body = Vec::new();
                    {
                        let mut w = csv::Writer::from_writer(&mut body);
                        w.write_record(["name", "value", "expected", "tolerance", "pass"])?;
                        for r in &rows {
                            w.write_record([
                                r.name.clone(),
                                fmt17(r.value),
                                fmt17(r.expected),
                                fmt17(r.tolerance),
                                r.pass.to_string(),
                            ])?;
                        }
                        w.flush()?;
                    }
                    write_csv_with_manifest(&mut out, &m, &body)?;
                }
            }
            let failed = rows.iter().filter(|r| !r.pass).count();
            if failed > 0 {
                return Err(anyhow::anyhow!("{failed} window checks failed").into());
            }
        }
    }
    Ok(())
}

fn run_tube(c: &TubeConfig) -> Result<Vec<TubeReport>, Failure> {
    let parsed: Vec<LaurentPolynomial> = c
        .polynomials
        .iter()
        .map(|p| match c.n {
            Some(n) => LaurentPolynomial::parse_in(p, n),
            None => LaurentPolynomial::parse(p),
        })
        .collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for (i, f) in parsed.iter().enumerate() {
        out.push(tube_measure_estimate(f, c.delta, c.samples, c.seed.wrapping_add(i as u64))?);
    }
    Ok(out)
}

fn write_bounds_csv<W: Write>(bounds: &[BoundReport], w: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["name", "measured", "bound_lower", "bound_upper", "verdict"])?;
    for b in bounds {
        let verdict = serde_json::to_value(b.verdict)?;
        w.write_record([
            b.name.clone(),
            fmt17(b.delta_measured),
            fmt17(b.bound_value.lower),
            fmt17(b.bound_value.upper),
            verdict.as_str().unwrap_or_default().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_hist_csv<W: Write>(h: &[AxisHistogram], w: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["axis", "quantity", "bin", "lower", "upper", "count"])?;
    for a in h {
        for (quantity, edges, counts) in
            [("arg", &a.arg_edges, &a.arg_counts), ("modulus", &a.mod_edges, &a.mod_counts)]
        {
            for (k, c) in counts.iter().enumerate() {
                w.write_record([
                    (a.axis + 1).to_string(),
                    quantity.to_string(),
                    k.to_string(),
                    fmt17(edges[k]),
                    fmt17(edges[k + 1]),
                    c.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn write_tube_csv<W: Write>(c: &TubeConfig, reports: &[TubeReport], w: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record([
        "polynomial",
        "n",
        "degree",
        "delta",
        "samples",
        "estimate",
        "sigma",
        "bound_lower",
        "bound_upper",
        "verdict",
    ])?;
    for (p, r) in c.polynomials.iter().zip(reports) {
        let verdict = serde_json::to_value(r.verdict)?;
        w.write_record([
            p.clone(),
            r.n.to_string(),
            r.degree.to_string(),
            fmt17(r.delta),
            r.samples.to_string(),
            fmt17(r.estimate),
            fmt17(r.sigma),
            fmt17(r.bound.lower),
            fmt17(r.bound.upper),
            verdict.as_str().unwrap_or_default().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
