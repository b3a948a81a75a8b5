//! `lab`: deterministic runner for the invariant-metric experiments.
//!
//! One binary, one subcommand per experiment plus `run` (spec file) and
//! `list`. A spec file together with its seed determines every emitted
//! number; rerunning into a fresh directory reproduces the artifacts byte
//! for byte. Exit status: 0 when every experiment passes its thresholds,
//! 1 when any fails, 2 on configuration or execution errors.

mod jval;
mod report;
mod run;
mod spec;

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use lab_core::cones::ProductShape;
use lab_core::leviflat::{catalog_entries, TracePath, WirtingerTerm};
use lab_core::planar::PlanarDomain;

use spec::{
    parse_payload, run_hash, FunctionSpec, Pair, Payload, ResolvedSpec, DEFAULT_OUT,
    EXPERIMENT_DESCRIPTIONS, EXPERIMENT_IDS,
};

#[derive(Parser)]
#[command(
    name = "lab",
    version,
    about = "Deterministic experiments on invariant metrics, cone asymptotics, and Levi-flat surfaces",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every experiment listed in a JSON spec file.
    Run(RunArgs),
    /// List experiment ids and the built-in defining functions.
    List,
    /// Boundary ratio of two cone measures against its closed-form limit.
    RatioLimit(RatioArgs),
    /// Cone density audit: printed form vs pullback, dilation, small radii.
    ConeDensity(ConeArgs),
    /// Optimizer bounds sandwiching the closed-form measure.
    OracleCompare(OracleArgs),
    /// Outer/inner product measure ratio driven to 1 along a cone schedule.
    ProductSandwich(SandwichArgs),
    /// Trace a leaf of a Levi-flat surface over a base path.
    FoliationTrace(TraceArgs),
    /// Straightening multiplier from boundary normal arguments.
    DfNormalize(NormalizeArgs),
    /// Peak function modulus bound on the wedge product.
    PeakCheck(PeakArgs),
    /// Caratheodory-vs-Eisenman gap on a disc-annulus product.
    AnnulusGap(GapArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON spec file: one experiment object or an array of them.
    #[arg(long)]
    spec: PathBuf,
    /// Output directory override for every experiment in the run.
    #[arg(long)]
    out: Option<String>,
    /// Seed override for every seeded experiment in the run.
    #[arg(long)]
    seed: Option<u64>,
}

/// Flags shared by the per-experiment subcommands.
#[derive(Args)]
struct CommonArgs {
    /// Optional spec file for this experiment; flags override its keys.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output directory (default "lab-out").
    #[arg(long)]
    out: Option<String>,
    /// Seed override (seeded experiments only).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RatioArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    theta1: Option<f64>,
    #[arg(long)]
    theta2: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Drift the approach angle toward alpha instead of holding it fixed.
    #[arg(long = "angle_approach")]
    angle_approach: Option<bool>,
    #[arg(long)]
    eps1: Option<f64>,
    #[arg(long)]
    eps2: Option<f64>,
    #[arg(long)]
    r0: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct ConeArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long = "dilation_scale")]
    dilation_scale: Option<f64>,
    #[arg(long = "dilation_tol")]
    dilation_tol: Option<f64>,
    #[arg(long = "asymptote_r")]
    asymptote_r: Option<f64>,
    #[arg(long = "asymptote_tol")]
    asymptote_tol: Option<f64>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Planar factors as a JSON array of domain descriptors.
    #[arg(long)]
    factors: Option<String>,
    /// Evaluation point as a JSON array of [re, im] pairs.
    #[arg(long)]
    point: Option<String>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long = "max_evals")]
    max_evals: Option<u64>,
    #[arg(long = "rel_tol")]
    rel_tol: Option<f64>,
}

#[derive(Args)]
struct SandwichArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Factor structure: cone_cone or disc_cone.
    #[arg(long)]
    shape: Option<String>,
    /// Disc factor radius (disc_cone only).
    #[arg(long = "disc_radius")]
    disc_radius: Option<f64>,
    /// Schedule stages, comma-separated (e.g. 5,10,20).
    #[arg(long)]
    ms: Option<String>,
    #[arg(long = "angle_gap")]
    angle_gap: Option<f64>,
    #[arg(long = "eps_outer_factor")]
    eps_outer_factor: Option<f64>,
    #[arg(long = "eps_inner_factor")]
    eps_inner_factor: Option<f64>,
    #[arg(long = "seq_r0_factor")]
    seq_r0_factor: Option<f64>,
    #[arg(long = "seq_q")]
    seq_q: Option<f64>,
    #[arg(long = "seq_count")]
    seq_count: Option<usize>,
    #[arg(long = "ratio_floor")]
    ratio_floor: Option<f64>,
}

/// Defining-function selection shared by the Levi-flat subcommands.
#[derive(Args)]
struct FunctionArgs {
    /// Catalog id of the defining function.
    #[arg(long)]
    catalog: Option<String>,
    /// Coefficient table as a JSON array of {coeff, powers} terms.
    #[arg(long)]
    poly: Option<String>,
    /// Name for a table-defined function.
    #[arg(long)]
    name: Option<String>,
}

impl FunctionArgs {
    fn merge_into(&self, slot: &mut FunctionSpec) -> Result<()> {
        match (&self.catalog, &self.poly) {
            (Some(_), Some(_)) => bail!("pass either --catalog or --poly, not both"),
            (Some(id), None) => *slot = FunctionSpec::catalog(id),
            (None, Some(raw)) => {
                let terms: Vec<WirtingerTerm> =
                    serde_json::from_str(raw).context("parsing --poly")?;
                *slot = FunctionSpec::Poly(spec::PolyRef {
                    name: self.name.clone(),
                    poly: terms,
                });
            }
            (None, None) => {
                if self.name.is_some() {
                    bail!("--name only applies together with --poly");
                }
            }
        }
        Ok(())
    }
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    function: FunctionArgs,
    /// Starting surface point as JSON [[re, im], [re, im]].
    #[arg(long)]
    start: Option<String>,
    /// Base path descriptor as JSON (segment, circle, or polyline).
    #[arg(long)]
    path: Option<String>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long = "residual_tol")]
    residual_tol: Option<f64>,
    #[arg(long = "projection_iters")]
    projection_iters: Option<usize>,
    #[arg(long = "defect_tol")]
    defect_tol: Option<f64>,
}

#[derive(Args)]
struct NormalizeArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    function: FunctionArgs,
    /// Circle radii, comma-separated and strictly increasing in (0, 1).
    #[arg(long)]
    radii: Option<String>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long = "spread_tol")]
    spread_tol: Option<f64>,
}

#[derive(Args)]
struct PeakArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long = "min_distance")]
    min_distance: Option<f64>,
}

#[derive(Args)]
struct GapArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long = "r_inner")]
    r_inner: Option<f64>,
    #[arg(long = "r_outer")]
    r_outer: Option<f64>,
    /// Disc factor point as JSON [re, im].
    #[arg(long = "disc_point")]
    disc_point: Option<String>,
    /// Annulus factor point as JSON [re, im].
    #[arg(long = "annulus_point")]
    annulus_point: Option<String>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long = "max_evals")]
    max_evals: Option<u64>,
}

fn main() {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => {}
        Ok(false) => std::process::exit(1),
        Err(err) => {
            eprintln!("lab: error: {err:#}");
            std::process::exit(2);
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::List => {
            print_list();
            Ok(true)
        }
        Cmd::Run(args) => {
            let specs = spec::load_spec_file(&args.spec, args.out.as_deref(), args.seed)?;
            execute_and_report(specs)
        }
        Cmd::RatioLimit(args) => single(args.common, "ratio-limit", |payload| {
            let Payload::Ratio(p) = payload else { unreachable!() };
            set(&mut p.theta1, args.theta1);
            set(&mut p.theta2, args.theta2);
            set(&mut p.alpha, args.alpha);
            set(&mut p.angle_approach, args.angle_approach);
            set(&mut p.eps1, args.eps1);
            set(&mut p.eps2, args.eps2);
            set(&mut p.r0, args.r0);
            set(&mut p.q, args.q);
            set(&mut p.count, args.count);
            set(&mut p.tol, args.tol);
            Ok(())
        }),
        Cmd::ConeDensity(args) => single(args.common, "cone-density", |payload| {
            let Payload::Cone(p) = payload else { unreachable!() };
            set(&mut p.theta, args.theta);
            set(&mut p.eps, args.eps);
            set(&mut p.grid, args.grid);
            set(&mut p.dilation_scale, args.dilation_scale);
            set(&mut p.dilation_tol, args.dilation_tol);
            set(&mut p.asymptote_r, args.asymptote_r);
            set(&mut p.asymptote_tol, args.asymptote_tol);
            Ok(())
        }),
        Cmd::OracleCompare(args) => single(args.common, "oracle-compare", |payload| {
            let Payload::Oracle(p) = payload else { unreachable!() };
            if let Some(raw) = &args.factors {
                p.factors = serde_json::from_str::<Vec<PlanarDomain>>(raw)
                    .context("parsing --factors")?;
            }
            if let Some(raw) = &args.point {
                p.point = serde_json::from_str::<Vec<Pair>>(raw).context("parsing --point")?;
            }
            set(&mut p.degree, args.degree);
            set(&mut p.restarts, args.restarts);
            set(&mut p.grid, args.grid);
            set(&mut p.max_evals, args.max_evals);
            set(&mut p.rel_tol, args.rel_tol);
            Ok(())
        }),
        Cmd::ProductSandwich(args) => single(args.common, "product-sandwich", |payload| {
            let Payload::Sandwich(p) = payload else { unreachable!() };
            match args.shape.as_deref() {
                Some("cone_cone") => p.shape = ProductShape::ConeCone,
                Some("disc_cone") => {
                    p.shape =
                        ProductShape::DiscCone { disc_radius: args.disc_radius.unwrap_or(1.0) };
                }
                Some(other) => bail!("unknown shape \"{other}\"; use cone_cone or disc_cone"),
                None => {
                    if let Some(radius) = args.disc_radius {
                        match &mut p.shape {
                            ProductShape::DiscCone { disc_radius } => *disc_radius = radius,
                            ProductShape::ConeCone => {
                                bail!("--disc_radius requires --shape disc_cone")
                            }
                        }
                    }
                }
            }
            if let Some(raw) = &args.ms {
                p.ms = parse_list(raw).context("parsing --ms")?;
            }
            set(&mut p.angle_gap, args.angle_gap);
            set(&mut p.eps_outer_factor, args.eps_outer_factor);
            set(&mut p.eps_inner_factor, args.eps_inner_factor);
            set(&mut p.seq_r0_factor, args.seq_r0_factor);
            set(&mut p.seq_q, args.seq_q);
            set(&mut p.seq_count, args.seq_count);
            set(&mut p.ratio_floor, args.ratio_floor);
            Ok(())
        }),
        Cmd::FoliationTrace(args) => single(args.common, "foliation-trace", |payload| {
            let Payload::Trace(p) = payload else { unreachable!() };
            args.function.merge_into(&mut p.function)?;
            if let Some(raw) = &args.start {
                let pairs: [Pair; 2] = serde_json::from_str(raw).context("parsing --start")?;
                p.start = pairs;
            }
            if let Some(raw) = &args.path {
                p.path = serde_json::from_str::<TracePath>(raw).context("parsing --path")?;
            }
            set(&mut p.steps, args.steps);
            set(&mut p.residual_tol, args.residual_tol);
            set(&mut p.projection_iters, args.projection_iters);
            set(&mut p.defect_tol, args.defect_tol);
            Ok(())
        }),
        Cmd::DfNormalize(args) => single(args.common, "df-normalize", |payload| {
            let Payload::Normalize(p) = payload else { unreachable!() };
            args.function.merge_into(&mut p.function)?;
            if let Some(raw) = &args.radii {
                p.radii = parse_list(raw).context("parsing --radii")?;
            }
            set(&mut p.nodes, args.nodes);
            set(&mut p.spread_tol, args.spread_tol);
            Ok(())
        }),
        Cmd::PeakCheck(args) => single(args.common, "peak-check", |payload| {
            let Payload::Peak(p) = payload else { unreachable!() };
            set(&mut p.count, args.count);
            set(&mut p.radius, args.radius);
            set(&mut p.min_distance, args.min_distance);
            Ok(())
        }),
        Cmd::AnnulusGap(args) => single(args.common, "annulus-gap", |payload| {
            let Payload::Gap(p) = payload else { unreachable!() };
            set(&mut p.r_inner, args.r_inner);
            set(&mut p.r_outer, args.r_outer);
            if let Some(raw) = &args.disc_point {
                p.disc_point = serde_json::from_str(raw).context("parsing --disc_point")?;
            }
            if let Some(raw) = &args.annulus_point {
                p.annulus_point =
                    serde_json::from_str(raw).context("parsing --annulus_point")?;
            }
            set(&mut p.degree, args.degree);
            set(&mut p.restarts, args.restarts);
            set(&mut p.grid, args.grid);
            set(&mut p.max_evals, args.max_evals);
            Ok(())
        }),
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn parse_list<T: std::str::FromStr>(raw: &str) -> Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    raw.split(',')
        .map(|part| part.trim().parse::<T>().map_err(Into::into))
        .collect::<Result<_>>()
}

/// Builds and runs a single experiment from defaults, an optional spec
/// file, and flag overrides, in that precedence order.
fn single(
    common: CommonArgs,
    id: &str,
    apply: impl FnOnce(&mut Payload) -> Result<()>,
) -> Result<bool> {
    let mut resolved = match &common.spec {
        Some(path) => {
            let mut specs =
                spec::load_spec_file(path, common.out.as_deref(), common.seed)?;
            if specs.len() != 1 {
                bail!(
                    "spec file {} holds {} experiments; the {id} subcommand takes exactly one",
                    path.display(),
                    specs.len()
                );
            }
            let entry = specs.remove(0);
            if entry.payload.id() != id {
                bail!(
                    "spec file {} describes \"{}\", not \"{id}\"",
                    path.display(),
                    entry.payload.id()
                );
            }
            entry
        }
        None => {
            let payload = parse_payload(id, None)?;
            let seed = payload.seed();
            ResolvedSpec {
                payload,
                seed,
                out: PathBuf::from(common.out.as_deref().unwrap_or(DEFAULT_OUT)),
            }
        }
    };
    apply(&mut resolved.payload)?;
    if let Some(seed) = common.seed {
        resolved.payload.override_seed(seed);
    }
    resolved.seed = resolved.payload.seed();
    execute_and_report(vec![resolved])
}

fn execute_and_report(specs: Vec<ResolvedSpec>) -> Result<bool> {
    let hash = run_hash(&specs);
    let outputs = report::execute(&specs)?;
    let written = report::write_artifacts(&specs, outputs, &hash)?;
    for line in &written.lines {
        println!("{line}");
    }
    let (total, word) = (written.lines.len(), if written.passed { "all passed" } else { "FAILED" });
    println!(
        "manifest {} ({total} experiment{}, {word})",
        written.manifest_path.display(),
        if total == 1 { "" } else { "s" }
    );
    Ok(written.passed)
}

fn print_list() {
    println!("experiments:");
    for (id, description) in EXPERIMENT_IDS.iter().zip(EXPERIMENT_DESCRIPTIONS) {
        println!("  {id:<17} {description}");
    }
    println!();
    println!("defining functions (catalog ids for --catalog or {{\"catalog\": id}}):");
    for &(id, description) in catalog_entries() {
        println!("  {id:<17} {description}");
    }
}
