use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use assouad_lab::bounds::{self, ExponentContext};
use assouad_lab::estimators::{self, ScaleWindow, SpectrumEstimate};
use assouad_lab::families::{self, Family, FamilySpec};
use assouad_lab::geometry::{MultiScaleIndex, PointSet};
use assouad_lab::io::{self, SCHEMA};
use assouad_lab::qcmaps::PlanarMap;
use assouad_lab::verify::{self, Scenario};
use assouad_lab::Error;

const EXIT_USAGE: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_VERIFY_FAILED: u8 = 4;

#[derive(Parser)]
#[command(name = "assouad-lab", version, about = "Multiscale dimension estimates and quasiconformal distortion bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one of the example families
    Gen(GenArgs),
    /// Occupied cell counts of the multiscale index
    IndexStats(IndexStatsArgs),
    /// Estimate a dimension of a point set
    Estimate(EstimateArgs),
    /// Apply a planar map to a point set
    Map(MapArgs),
    /// Evaluate a distortion bound
    Bounds(BoundsArgs),
    /// Check the spectrum distortion bounds on a mapped spiral
    Verify(VerifyArgs),
    /// Minimal dilatation between two polynomial spirals
    Classify(ClassifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyKind {
    Spiral,
    Logspiral,
    Cantor,
    Sequence,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Output {
    /// Output file (stdout when absent or "-")
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Omit the CSV header row
    #[arg(long)]
    no_header: bool,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: FamilyKind,
    /// Polynomial spiral exponent
    #[arg(long)]
    a: Option<f64>,
    /// Logarithmic spiral rate
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    xmax: Option<f64>,
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long)]
    depth: Option<u32>,
    /// Sequence exponent
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    mmax: Option<u64>,
    /// Target resolution; defaults to the gap scale for Cantor and sequence sets
    #[arg(long)]
    res: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct Input {
    /// Point file (CSV or JSON), "-" for stdin
    input: PathBuf,
    /// Resolution, overriding the file's declared value
    #[arg(long)]
    res: Option<f64>,
}

#[derive(Args)]
struct IndexStatsArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long)]
    max_level: Option<u32>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Box,
    Spectrum,
    Assouad,
    Qa,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, value_enum)]
    mode: Mode,
    /// Explicit θ values (comma separated); overrides the range flags
    #[arg(long, value_delimiter = ',')]
    theta: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.05)]
    theta_min: f64,
    #[arg(long, default_value_t = 0.9)]
    theta_max: f64,
    #[arg(long, default_value_t = 0.05)]
    theta_step: f64,
    #[arg(long)]
    rmin: Option<f64>,
    #[arg(long)]
    rmax: Option<f64>,
    #[arg(long, default_value_t = estimators::DEFAULT_CENTER_BUDGET)]
    centers: usize,
    /// θ standing in for the limit θ → 1 in quasi-Assouad mode
    #[arg(long, default_value_t = estimators::DEFAULT_THETA_HI)]
    theta_hi: f64,
    /// Tolerance for the phase transition estimate
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Also write a (theta, regularized) CSV for plotting
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct MapArgs {
    #[command(flatten)]
    input: Input,
    /// Map expression, e.g. "radial:K=2|similarity:s=1+2i,t=0"
    #[arg(long)]
    map: String,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundKind {
    Beta,
    Symmetric,
    Spectrum,
    Assouad,
    Biholder,
    Ours,
    Compare,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, value_enum)]
    kind: BoundKind,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long = "K")]
    k: f64,
    /// Integrability exponent (required for n >= 3 unless K = 1)
    #[arg(long)]
    p: Option<f64>,
    /// Exponent for the lower bound; defaults to the one for K^(n-1)
    #[arg(long)]
    inner_p: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    /// Source spectrum value (biholder: at θ/K², ours: at θ(t/K))
    #[arg(long)]
    source_value: Option<f64>,
    /// Source spectrum from the closed form of the spiral with this exponent
    #[arg(long)]
    source_spiral: Option<f64>,
    /// Source spectrum from an estimate JSON file
    #[arg(long)]
    source_json: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Source set, "spiral:a=A"
    #[arg(long)]
    set: String,
    #[arg(long, default_value = "identity")]
    map: String,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long, default_value_t = verify::DEFAULT_SLACK)]
    eps: f64,
    #[arg(long, default_value_t = 1e-3)]
    res: f64,
    #[arg(long, default_value_t = estimators::DEFAULT_CENTER_BUDGET)]
    centers: usize,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    a: f64,
    #[arg(long)]
    b: f64,
}

enum Failure {
    Lib(Error),
    Usage(String),
    Verify,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn need<T>(v: Option<T>, flag: &str) -> std::result::Result<T, Failure> {
    v.ok_or_else(|| Failure::Usage(format!("missing --{flag}")))
}

fn emit(out: Option<&std::path::Path>, mut v: Value) -> CmdResult {
    if let Value::Object(m) = &mut v {
        m.insert("schema".into(), json!(SCHEMA));
    }
    io::with_output(out, |w| {
        serde_json::to_writer_pretty(&mut *w, &v).map_err(|e| Error::Io(e.into()))?;
        writeln!(w)?;
        Ok(())
    })?;
    Ok(())
}

fn write_set(set: &PointSet, o: &Output) -> CmdResult {
    io::with_output(o.out.as_deref(), |w| match o.format {
        Format::Csv => io::write_points_csv(w, set, !o.no_header),
        Format::Json => io::write_points_json(w, set),
    })?;
    Ok(())
}

fn cmd_gen(a: GenArgs) -> CmdResult {
    let family = match a.family {
        FamilyKind::Spiral => Family::PolySpiral {
            a: need(a.a, "a")?,
            x_max: need(a.xmax, "xmax")?,
        },
        FamilyKind::Logspiral => Family::LogSpiral {
            c: need(a.c, "c")?,
            x_max: need(a.xmax, "xmax")?,
        },
        FamilyKind::Cantor => Family::Cantor {
            ratio: need(a.ratio, "ratio")?,
            depth: need(a.depth, "depth")?,
        },
        FamilyKind::Sequence => Family::SequenceSet {
            p: need(a.p, "p")?,
            m_max: need(a.mmax, "mmax")?,
        },
    };
    let res = match (a.res, &family) {
        (Some(r), _) => r,
        (None, Family::Cantor { ratio, depth }) => ratio.powi(*depth as i32),
        (None, Family::SequenceSet { p, m_max }) => {
            let m = *m_max as f64;
            (m.powf(-*p) - (m + 1.0).powf(-*p)).max(f64::MIN_POSITIVE)
        }
        (None, _) => return Err(Failure::Usage("missing --res".into())),
    };
    let set = families::sample_family(&FamilySpec::new(family, res))?;
    write_set(&set, &a.output)
}

fn cmd_index_stats(a: IndexStatsArgs) -> CmdResult {
    let set = io::read_points(&a.input.input, a.input.res, None)?;
    let idx = match a.max_level {
        Some(m) => MultiScaleIndex::build(&set, m)?,
        None => MultiScaleIndex::build_auto(&set)?,
    };
    let levels: Vec<Value> = (0..=idx.max_level())
        .map(|m| {
            json!({
                "level": m,
                "cellSide": idx.cell_side(m),
                "occupied": idx.occupied_count(m).expect("level in range"),
            })
        })
        .collect();
    emit(
        None,
        json!({
            "command": "index-stats",
            "dim": idx.dim(),
            "points": idx.num_points(),
            "resolution": idx.resolution(),
            "root": idx.root(),
            "diameter": idx.diameter(),
            "maxLevel": idx.max_level(),
            "levels": levels,
        }),
    )
}

fn window_for(idx: &MultiScaleIndex, a: &EstimateArgs, spectrum: bool) -> assouad_lab::Result<ScaleWindow> {
    let d = if spectrum {
        ScaleWindow::spectrum_default_for(idx)
    } else {
        ScaleWindow::default_for(idx)
    };
    ScaleWindow::new(a.rmin.unwrap_or(d.r_min), a.rmax.unwrap_or(d.r_max))
}

fn spectrum_json(spec: &SpectrumEstimate) -> Value {
    serde_json::to_value(spec).expect("serializable")
}

fn cmd_estimate(a: EstimateArgs) -> CmdResult {
    let set = io::read_points(&a.input.input, a.input.res, None)?;
    let idx = MultiScaleIndex::build_auto(&set)?;
    let mut v = json!({ "command": "estimate", "points": set.len(), "resolution": set.resolution() });
    match a.mode {
        Mode::Box => {
            let w = window_for(&idx, &a, false)?;
            let e = estimators::estimate_box_dim(&idx, &w)?;
            v["mode"] = json!("box");
            v["estimate"] = serde_json::to_value(&e).expect("serializable");
            v["value"] = json!(e.value);
        }
        Mode::Assouad => {
            let w = window_for(&idx, &a, false)?;
            let e = estimators::estimate_assouad(&idx, &w, a.centers)?;
            v["mode"] = json!("assouad");
            v["centerBudget"] = json!(a.centers);
            v["estimate"] = serde_json::to_value(&e).expect("serializable");
            v["value"] = json!(e.value);
        }
        Mode::Qa => {
            let w = window_for(&idx, &a, true)?;
            let e = estimators::estimate_quasi_assouad(&idx, &w, a.centers, a.theta_hi)?;
            v["mode"] = json!("qa");
            v["thetaHi"] = json!(a.theta_hi);
            v["centerBudget"] = json!(a.centers);
            v["estimate"] = serde_json::to_value(&e).expect("serializable");
            v["value"] = json!(e.value);
        }
        Mode::Spectrum => {
            let w = window_for(&idx, &a, true)?;
            let grid = match &a.theta {
                Some(g) => g.clone(),
                None => estimators::theta_range(a.theta_min, a.theta_max, a.theta_step),
            };
            let spec = estimators::estimate_spectrum(&idx, &grid, &w, a.centers)?;
            let absent: Vec<f64> = spec
                .theta
                .iter()
                .zip(&spec.value)
                .filter(|(_, v)| v.is_none())
                .map(|(t, _)| *t)
                .collect();
            if !absent.is_empty() {
                eprintln!("warning: no admissible scale pairs for theta = {absent:?}; reported as absent");
            }
            let rho = estimators::estimate_rho(&spec, idx.dim(), a.epsilon);
            if let Some(p) = &a.plot {
                std::fs::write(p, spec.to_plot_csv()).map_err(Error::from)?;
            }
            v["mode"] = json!("spectrum");
            v["window"] = serde_json::to_value(w).expect("serializable");
            v["centerBudget"] = json!(a.centers);
            v["rho"] = json!(rho);
            v["epsilon"] = json!(a.epsilon);
            v["absentTheta"] = json!(absent);
            if let (Value::Object(m), Value::Object(s)) = (&mut v, spectrum_json(&spec)) {
                m.extend(s);
            }
        }
    }
    emit(a.out.as_deref(), v)
}

fn cmd_map(a: MapArgs) -> CmdResult {
    let set = io::read_points(&a.input.input, a.input.res, Some(2))?;
    let map: PlanarMap = a.map.parse()?;
    let out = map.apply(&set)?;
    eprintln!(
        "map {map}: dilatation bound {}, resolution {:e} -> {:e}",
        map.dilatation_bound(),
        set.resolution(),
        out.resolution()
    );
    write_set(&out, &a.output)
}

fn source_fn(a: &BoundsArgs) -> std::result::Result<Box<dyn Fn(f64) -> Option<f64>>, Failure> {
    if let Some(s) = a.source_spiral {
        families::oracle_spiral_spectrum(s, 0.5)?;
        return Ok(Box::new(move |th| families::oracle_spiral_spectrum(s, th).ok()));
    }
    if let Some(p) = &a.source_json {
        let text = std::fs::read_to_string(p).map_err(Error::from)?;
        let spec: SpectrumEstimate = serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("spectrum JSON: {e}")))?;
        return Ok(Box::new(move |th| spec.regularized_at(th)));
    }
    Err(Failure::Usage("need --source-spiral or --source-json".into()))
}

fn cmd_bounds(a: BoundsArgs) -> CmdResult {
    let ctx = ExponentContext::new(a.n, a.k, a.p, a.lambda)?;
    let inputs = json!({
        "n": a.n, "K": a.k, "p": if ctx.p.is_finite() { json!(ctx.p) } else { json!("inf") },
        "innerP": a.inner_p, "lambda": ctx.lambda, "alpha": a.alpha, "t": a.t, "theta": a.theta,
        "sourceValue": a.source_value, "sourceSpiral": a.source_spiral,
    });
    let (formula, values, assumptions): (&str, Value, Vec<String>) = match a.kind {
        BoundKind::Beta => (
            "p*alpha/(p-n+alpha)",
            json!({ "upper": bounds::beta_upper(need(a.alpha, "alpha")?, &ctx)? }),
            vec![],
        ),
        BoundKind::Symmetric => ("1-n/p", json!({ "coefficient": bounds::symmetric_coeff(&ctx) }), vec![]),
        BoundKind::Spectrum => {
            let t = need(a.t, "t")?;
            let src = source_fn(&a)?;
            let b = bounds::spectrum_bounds(t, &ctx, &*src, a.inner_p)?;
            let notes = b.assumptions.clone();
            (
                "(1-n/p)(1/d(theta(t/K))-1/n) <= 1/D(theta(t))-1/n <= (1-n/p')^-1 (1/d(theta(Kt))-1/n)",
                serde_json::to_value(b).expect("serializable"),
                notes,
            )
        }
        BoundKind::Assouad => {
            let b = bounds::assouad_bounds(need(a.alpha, "alpha")?, &ctx, a.inner_p, None)?;
            let notes = b.assumptions.clone();
            (
                "(1-n/p)(1/alpha-1/n) <= 1/D-1/n <= (1-n/p')^-1 (1/alpha-1/n)",
                serde_json::to_value(b).expect("serializable"),
                notes,
            )
        }
        BoundKind::Biholder => (
            "K(1-theta/K^2)/(1-theta) * d(theta/K^2), capped at 2",
            json!({ "upper": bounds::biholder_upper(need(a.theta, "theta")?, a.k, need(a.source_value, "source-value")?)? }),
            vec![],
        ),
        BoundKind::Ours => (
            "K d/(1+(K-1)d/2)",
            json!({ "upper": bounds::ours_upper(need(a.t, "t")?, a.k, need(a.source_value, "source-value")?)? }),
            vec![],
        ),
        BoundKind::Compare => {
            let src = source_fn(&a)?;
            let c = bounds::compare_bounds(need(a.t, "t")?, a.k, &*src)?;
            ("ours <= biholder when theta(t) < 1/K^2 and theta(t) <= d/2", serde_json::to_value(c).expect("serializable"), vec![])
        }
    };
    emit(
        None,
        json!({
            "command": "bounds",
            "inputs": inputs,
            "formula": formula,
            "values": values,
            "assumptions": assumptions,
        }),
    )
}

fn parse_set(s: &str) -> std::result::Result<f64, Failure> {
    let bad = || Failure::Usage(format!("--set must look like spiral:a=A, got {s:?}"));
    let rest = s.strip_prefix("spiral:").ok_or_else(bad)?;
    let v = rest.strip_prefix("a=").ok_or_else(bad)?;
    v.trim().parse().map_err(|_| bad())
}

fn cmd_verify(a: VerifyArgs) -> CmdResult {
    let mut sc = Scenario::new(parse_set(&a.set)?, &a.map);
    sc.t = a.t;
    sc.slack = a.eps;
    sc.resolution = a.res;
    sc.center_budget = a.centers;
    let report = verify::run(&sc)?;
    let pass = report.pass;
    emit(
        a.out.as_deref(),
        json!({ "command": "verify", "report": report }),
    )?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}

fn cmd_classify(a: ClassifyArgs) -> CmdResult {
    let c = bounds::classify_spirals(a.a, a.b)?;
    let note = if c.via_inverse {
        "via inverse-map symmetry"
    } else {
        "direct"
    };
    println!("{:?}, witness {} ({note})", c.k, c.witness);
    Ok(())
}

fn init_threads() {
    if let Ok(v) = std::env::var("ASSOUAD_LAB_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring ASSOUAD_LAB_THREADS={v:?}"),
        }
    }
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::IndexStats(a) => cmd_index_stats(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Map(a) => cmd_map(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Classify(a) => cmd_classify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Verify) => {
            eprintln!("verification failed");
            ExitCode::from(EXIT_VERIFY_FAILED)
        }
        // the reader went away (e.g. `| head`); nothing left to report
        Err(Failure::Lib(Error::Io(e))) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            if e.is_numeric_infeasibility() {
                ExitCode::from(EXIT_INFEASIBLE)
            } else {
                ExitCode::from(EXIT_USAGE)
            }
        }
    }
}
