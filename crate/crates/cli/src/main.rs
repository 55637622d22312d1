//! `compass`: build, compose, diagnose and render policy compasses, tally
//! votes, and serve live sessions.
//!
//! Exit codes: 0 success, 1 invalid input (every problem is printed), 2 I/O
//! failure (unreadable or unwritable path, port in use).

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use policy_compass::elicitation::{angle_from_votes, Ballot, Intensity};
use policy_compass::io::{from_json_bytes, load_config, parse_table, to_json_bytes, LoadedConfig, TableFormat};
use policy_compass::render::{render_compass, render_ecological, render_trajectory, RenderOptions, Stage};
use policy_compass::robustness::{
    assess_table, convergence_report, ecological_diff, gerrymander_diff, grade, influence_report,
};
use policy_compass::{
    compass_reading, compose_spheres, CompassReading, EcologicalCompass, IndicatorTable, Quality, Sphere,
};

#[derive(Parser)]
#[command(name = "compass", version, about = "Policy compass construction and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Flat TOML config; defaults apply when absent.
    #[arg(long, env = "COMPASS_CONFIG")]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the reading for one table.
    Build {
        /// CSV or JSON table.
        table: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
        /// Reading JSON destination [default: stdout].
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also render an SVG here.
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long, default_value = "final_arrow")]
        stage: Stage,
    },
    /// Compose eco, socio and econo tables and print the sustainability verdict.
    Ee {
        eco: PathBuf,
        socio: PathBuf,
        econo: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
        /// Ecological compass JSON destination.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Convergence and leave-one-out influence reports with a robustness grade.
    Diagnose {
        table: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
        /// Table whose rows, in file order, form the convergence stream
        /// [default: the table itself].
        #[arg(long)]
        stream: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render tables, readings or ecological compasses as SVG. Several
    /// inputs with `--stage trajectory` draw a time trajectory.
    Render {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value = "final_arrow")]
        stage: Stage,
        #[arg(long, default_value_t = 400)]
        size: u32,
        #[arg(long)]
        no_labels: bool,
        /// SVG destination [default: stdout].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Field-level differences between two readings or ecological compasses.
    Diff { before: PathBuf, after: PathBuf },
    /// Offset implied by a ballots file for an indicator of `quality`.
    Vote {
        /// JSON array of ballots, or CSV with voter,toward[,weight,intensity].
        ballots: PathBuf,
        #[arg(long)]
        quality: Quality,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Run the session service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        #[arg(long, default_value = "compass-state")]
        state_dir: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
    },
}

enum Failure {
    Invalid(Vec<String>),
    Io(String),
}

impl Failure {
    fn invalid(e: impl Display) -> Self {
        Failure::Invalid(vec![e.to_string()])
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Outcome {
    std::fs::write(path, bytes).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Outcome {
    match out {
        Some(p) => write(p, bytes),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes).map_err(|e| Failure::Io(e.to_string()))
        }
    }
}

fn config(arg: &ConfigArg) -> Result<LoadedConfig, Failure> {
    let Some(path) = &arg.config else { return Ok(LoadedConfig::default()) };
    let loaded = load_config(&read(path)?)
        .map_err(|errs| Failure::Invalid(errs.iter().map(|e| format!("{}: {e}", path.display())).collect()))?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    Ok(loaded)
}

fn table(path: &Path, cfg: &LoadedConfig) -> Result<IndicatorTable, Failure> {
    let bytes = read(path)?;
    parse_table(&bytes, TableFormat::from_path(path), &cfg.compass.layout)
        .map_err(|errs| Failure::Invalid(errs.0.iter().map(|e| format!("{}: {e}", path.display())).collect()))
}

fn reading(t: &IndicatorTable, cfg: &LoadedConfig) -> Result<CompassReading, Failure> {
    compass_reading(t, &cfg.compass).map_err(Failure::invalid)
}

fn build(t: &Path, c: &ConfigArg, out: Option<&Path>, svg: Option<&Path>, stage: Stage) -> Outcome {
    let cfg = config(c)?;
    let table = table(t, &cfg)?;
    let r = reading(&table, &cfg)?;
    if let Some(svg) = svg {
        let grade = assess_table(&table, &cfg.compass, &cfg.robustness).map_err(Failure::invalid)?;
        let opts = RenderOptions { stage, grade: Some(grade), ..RenderOptions::default() };
        write(svg, render_compass(&r, &opts).as_bytes())?;
    }
    emit(out, &to_json_bytes(&r))?;
    if out.is_some() {
        println!("classification: {}", r.classification);
    }
    Ok(())
}

fn ee(paths: [&Path; 3], c: &ConfigArg, out: Option<&Path>, svg: Option<&Path>) -> Outcome {
    let cfg = config(c)?;
    let mut readings = Vec::new();
    let mut problems = Vec::new();
    for (path, sphere) in paths.into_iter().zip(Sphere::NESTED) {
        match table(path, &cfg) {
            Ok(t) if t.sphere() == Sphere::Unspecified => readings.push(reading(&t.with_sphere(sphere), &cfg)?),
            Ok(t) => readings.push(reading(&t, &cfg)?),
            Err(Failure::Invalid(mut p)) => problems.append(&mut p),
            Err(io) => return Err(io),
        }
    }
    if !problems.is_empty() {
        return Err(Failure::Invalid(problems));
    }
    let readings: [CompassReading; 3] = readings.try_into().unwrap_or_else(|_| unreachable!());
    let ec = compose_spheres(readings, cfg.weights, cfg.sphere_arrow, &cfg.compass).map_err(Failure::invalid)?;
    if let Some(out) = out {
        write(out, &to_json_bytes(&ec))?;
    }
    if let Some(svg) = svg {
        write(svg, render_ecological(&ec, &RenderOptions::stage(Stage::Composition)).as_bytes())?;
    }
    println!("classification: {}", ec.classification);
    println!("sustainable: {}", ec.sustainable);
    Ok(())
}

fn diagnose(t: &Path, c: &ConfigArg, stream: Option<&Path>, out: Option<&Path>) -> Outcome {
    let cfg = config(c)?;
    let table = table(t, &cfg)?;
    let stream = match stream {
        Some(p) => self::table(p, &cfg)?,
        None => table.clone(),
    };
    let s = &cfg.robustness;
    let conv = convergence_report(stream.indicators(), &cfg.compass, s.epsilon, s.window).map_err(Failure::invalid)?;
    let inf = if table.is_empty() {
        None
    } else {
        Some(influence_report(&table, &cfg.compass, s.outlier_threshold).map_err(Failure::invalid)?)
    };
    let g = grade(inf.as_ref(), Some(&conv));
    let report = serde_json::json!({ "convergence": conv, "influence": inf, "grade": g });
    emit(out, &to_json_bytes(&report))?;
    if out.is_some() {
        match &g {
            policy_compass::robustness::RobustnessGrade::Robust => println!("grade: robust"),
            policy_compass::robustness::RobustnessGrade::Hesitant { reasons } => {
                println!("grade: hesitant");
                for r in reasons {
                    println!("  {r}");
                }
            }
        }
    }
    Ok(())
}

enum Renderable {
    Reading(Box<CompassReading>),
    Ecological(Box<EcologicalCompass>),
}

/// Accepts a reading or ecological compass JSON written by this tool, or a table.
fn renderable(path: &Path, cfg: &LoadedConfig) -> Result<Renderable, Failure> {
    if TableFormat::from_path(path) == TableFormat::Json {
        let bytes = read(path)?;
        if let Ok(r) = from_json_bytes::<CompassReading>(&bytes) {
            return Ok(Renderable::Reading(Box::new(r)));
        }
        if let Ok(ec) = from_json_bytes::<EcologicalCompass>(&bytes) {
            return Ok(Renderable::Ecological(Box::new(ec)));
        }
    }
    let t = table(path, cfg)?;
    Ok(Renderable::Reading(Box::new(reading(&t, cfg)?)))
}

fn render(inputs: &[PathBuf], c: &ConfigArg, stage: Stage, size: u32, labels: bool, out: Option<&Path>) -> Outcome {
    if size == 0 {
        return Err(Failure::invalid("--size must be positive"));
    }
    let cfg = config(c)?;
    let opts = RenderOptions { stage, size_px: size, show_labels: labels, ..RenderOptions::default() };
    let svg = if stage == Stage::Trajectory {
        let mut snaps = Vec::new();
        for p in inputs {
            let Renderable::Reading(r) = renderable(p, &cfg)? else {
                return Err(Failure::invalid(format!("{}: trajectories need single readings", p.display())));
            };
            let label = match r.table.snapshot_time() {
                Some(t) => t.format("%Y-%m-%d").to_string(),
                None => p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            };
            snaps.push((label, *r));
        }
        render_trajectory(&snaps, &opts)
    } else {
        if inputs.len() != 1 {
            return Err(Failure::invalid("only the trajectory stage takes several inputs"));
        }
        match renderable(&inputs[0], &cfg)? {
            Renderable::Reading(r) => render_compass(&r, &opts),
            Renderable::Ecological(ec) => render_ecological(&ec, &opts),
        }
    };
    emit(out, svg.as_bytes())
}

fn diff(before: &Path, after: &Path) -> Outcome {
    let cfg = LoadedConfig::default();
    let report = match (renderable(before, &cfg)?, renderable(after, &cfg)?) {
        (Renderable::Reading(a), Renderable::Reading(b)) => {
            serde_json::to_value(gerrymander_diff(&a, &b).map_err(Failure::invalid)?)
        }
        (Renderable::Ecological(a), Renderable::Ecological(b)) => {
            serde_json::to_value(ecological_diff(&a, &b).map_err(Failure::invalid)?)
        }
        _ => return Err(Failure::invalid("cannot diff a reading against an ecological compass")),
    };
    emit(None, &to_json_bytes(&report.expect("diff serializes")))
}

fn ballots(path: &Path) -> Result<Vec<Ballot>, Failure> {
    let bytes = read(path)?;
    if TableFormat::from_path(path) == TableFormat::Json {
        return from_json_bytes(&bytes).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())));
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(bytes.as_slice());
    let headers = rdr.headers().map_err(Failure::invalid)?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (Some(voter), Some(toward)) = (col("voter"), col("toward")) else {
        return Err(Failure::invalid(format!("{}: ballots need voter and toward columns", path.display())));
    };
    let (weight, intensity) = (col("weight"), col("intensity"));
    let mut out = Vec::new();
    let mut problems = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(Failure::invalid)?;
        let cell = |c: Option<usize>| c.and_then(|c| rec.get(c)).filter(|s| !s.is_empty());
        let mut b = match cell(Some(toward)).unwrap_or("").parse::<Quality>() {
            Ok(q) => Ballot::new(cell(Some(voter)).unwrap_or(""), q),
            Err(e) => {
                problems.push(format!("{}: line {line}: {e}", path.display()));
                continue;
            }
        };
        if let Some(w) = cell(weight) {
            match w.parse() {
                Ok(w) => b = b.weighted(w),
                Err(_) => problems.push(format!("{}: line {line}: weight `{w}` is not a number", path.display())),
            }
        }
        if let Some(s) = cell(intensity) {
            match s.to_ascii_lowercase().as_str() {
                "light" => {}
                "medium" => b = b.with_intensity(Intensity::Medium),
                "strong" => b = b.with_intensity(Intensity::Strong),
                other => problems.push(format!("{}: line {line}: unknown intensity `{other}`", path.display())),
            }
        }
        out.push(b);
    }
    if problems.is_empty() {
        Ok(out)
    } else {
        Err(Failure::Invalid(problems))
    }
}

fn vote(path: &Path, quality: Quality, c: &ConfigArg) -> Outcome {
    let cfg = config(c)?;
    let ballots = ballots(path)?;
    let layout = cfg.compass.layout;
    let offset = angle_from_votes(&ballots, quality, &layout).map_err(Failure::invalid)?;
    println!("offset: {offset}");
    println!("absolute angle: {}", layout.absolute_angle(quality, offset));
    if offset == 0.0 || offset == 120.0 {
        eprintln!("warning: the arrow sits on a sector boundary; mark it boundary_ok or choose another statistic");
    }
    Ok(())
}

fn serve(bind: &str, state_dir: &Path, c: &ConfigArg) -> Outcome {
    let cfg = config(c)?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Io(e.to_string()))?;
    runtime.block_on(async {
        let (state, problems) = compass_service::AppState::open(state_dir, cfg.robustness)
            .map_err(|e| Failure::Io(e.to_string()))?;
        for p in problems {
            eprintln!("warning: {p}");
        }
        let listener = compass_service::bind(bind).await.map_err(|e| Failure::Io(e.to_string()))?;
        let addr = compass_service::local_addr(&listener).map_err(|e| Failure::Io(e.to_string()))?;
        println!("listening on http://{addr}");
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        compass_service::serve(listener, state, shutdown).await.map_err(|e| Failure::Io(e.to_string()))
    })
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Build { table, config, out, svg, stage } => {
            build(&table, &config, out.as_deref(), svg.as_deref(), stage)
        }
        Command::Ee { eco, socio, econo, config, out, svg } => {
            ee([&eco, &socio, &econo], &config, out.as_deref(), svg.as_deref())
        }
        Command::Diagnose { table, config, stream, out } => {
            diagnose(&table, &config, stream.as_deref(), out.as_deref())
        }
        Command::Render { inputs, config, stage, size, no_labels, out } => {
            render(&inputs, &config, stage, size, !no_labels, out.as_deref())
        }
        Command::Diff { before, after } => diff(&before, &after),
        Command::Vote { ballots, quality, config } => vote(&ballots, quality, &config),
        Command::Serve { bind, state_dir, config } => serve(&bind, &state_dir, &config),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(problems)) => {
            for p in problems {
                eprintln!("error: {p}");
            }
            ExitCode::from(1)
        }
        Err(Failure::Io(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
