//! `carnot`: stratified groups and their submanifolds from the command
//! line. Every subcommand reads one configuration file (see the grammar in
//! [`config`]), applies flag overrides, validates, computes, and emits a
//! deterministic report: identical configuration and seed give identical
//! bytes.
//!
//! Exit codes: 0 success, 1 group-axiom violation, 2 mathematical
//! precondition failure, 3 numerical failure (including expectation
//! mismatches in `engel-suite`), 4 I/O or syntax error.

use carnot_cli::{config, report};

use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use carnot::algebra::{AlgebraError, BracketRule, StratifiedAlgebra};
use carnot::blowup::{self, BlowupError, LimitSet, SubgroupWitness};
use carnot::catalog::{self, CatalogError};
use carnot::group::{
    calibrate_norm, CalibrationConfig, GroupError, GroupLaw, HomogeneousNorm,
};
use carnot::manifold::{ManifoldError, Submanifold};
use carnot::measure::{self, DensityConfig, MeasureError, Quadrature};

use crate::config::{Format, LimitSpec, Method, RunConfig};
use crate::report::{
    BchReport, BlowupEntry, BlowupResult, CurvesResult, DegreeResult, Envelope,
    ExpectationResult, MeasureResult, MetricFactorEntry, MetricFactorResult, StrataResult,
    Stratum, SubgroupResult, SuiteResult, ValidateReport,
};

#[derive(Parser)]
#[command(name = "carnot", version, about = "Stratified groups and their submanifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the exact group-law axioms.
    ValidateGroup(CommonArgs),
    /// Print the exact polynomial group law.
    Bch(CommonArgs),
    /// Submanifold degree over a parameter grid.
    Degree(CommonArgs),
    /// Classify grid points by pointwise degree.
    Strata(CommonArgs),
    /// Intrinsic measure of a parameter region.
    Measure(CommonArgs),
    /// Metric factor and density-ratio sequence at a point.
    MetricFactor(CommonArgs),
    /// Blow-up convergence table with a subgroup check of the limit.
    Blowup(CommonArgs),
    /// Integrate a tangency curve and extract its graded expansion.
    Curves(CommonArgs),
    /// Run every stored expectation of a catalog group.
    EngelSuite(CommonArgs),
    /// Write the configured group and submanifold as an inline definition file.
    Export(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Report format: json or csv.
    #[arg(long, value_parser = ["json", "csv"])]
    format: Option<String>,
    /// Suppress the human summary.
    #[arg(long)]
    quiet: bool,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Failure {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<AlgebraError> for Failure {
    fn from(err: AlgebraError) -> Failure {
        Failure::new(1, err.to_string())
    }
}

impl From<ManifoldError> for Failure {
    fn from(err: ManifoldError) -> Failure {
        let code = match err {
            ManifoldError::Parse { .. } => 4,
            _ => 2,
        };
        Failure::new(code, err.to_string())
    }
}

impl From<MeasureError> for Failure {
    fn from(err: MeasureError) -> Failure {
        match err {
            MeasureError::Manifold(inner) => inner.into(),
            MeasureError::TruncatedSupport { .. } => Failure::new(3, err.to_string()),
            _ => Failure::new(2, err.to_string()),
        }
    }
}

impl From<GroupError> for Failure {
    fn from(err: GroupError) -> Failure {
        match err {
            GroupError::Algebra(inner) => inner.into(),
            GroupError::NotSubalgebra { .. } => Failure::new(2, err.to_string()),
            GroupError::CalibrationFailed { .. } => Failure::new(3, err.to_string()),
        }
    }
}

impl From<BlowupError> for Failure {
    fn from(err: BlowupError) -> Failure {
        match err {
            BlowupError::Manifold(inner) => inner.into(),
            BlowupError::Measure(inner) => inner.into(),
            BlowupError::EmptyCloud | BlowupError::RadiusSchedule => {
                Failure::new(2, err.to_string())
            }
            _ => Failure::new(3, err.to_string()),
        }
    }
}

impl From<CatalogError> for Failure {
    fn from(err: CatalogError) -> Failure {
        match err {
            CatalogError::Algebra(inner) => inner.into(),
            CatalogError::Manifold(inner) => inner.into(),
            CatalogError::Measure(inner) => inner.into(),
            CatalogError::BadExpression(_) => Failure::new(4, err.to_string()),
            _ => Failure::new(2, err.to_string()),
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 4,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    if let Err(failure) = run(cli) {
        eprintln!("error: {}", failure.message);
        std::process::exit(failure.code);
    }
}

struct Ctx {
    cfg: RunConfig,
    law: Arc<GroupLaw>,
    norm: HomogeneousNorm,
    command: &'static str,
    config_sha256: String,
}

impl Ctx {
    fn body<T: Serialize>(&self, result: T) -> String {
        report::render(&Envelope {
            schema: report::SCHEMA,
            command: self.command.to_string(),
            config_sha256: self.config_sha256.clone(),
            group: group_label(&self.cfg),
            manifold: manifold_label(&self.cfg),
            seed: self.cfg.seed,
            epsilons: self.norm.epsilons().to_vec(),
            result,
        })
    }

    fn manifold(&self) -> Result<Submanifold, Failure> {
        build_manifold(&self.cfg, self.law.clone())
    }
}

struct Output {
    body: String,
    csv: Option<String>,
    human: Vec<String>,
    /// Returned after the report is written: a red result is still a report.
    failure: Option<Failure>,
}

fn run(cli: Cli) -> Result<(), Failure> {
    type Handler = fn(&Ctx) -> Result<Output, Failure>;
    let (command, args, handler): (&'static str, CommonArgs, Handler) = match cli.command {
        Command::ValidateGroup(a) => ("validate-group", a, cmd_validate_group),
        Command::Bch(a) => ("bch", a, cmd_bch),
        Command::Degree(a) => ("degree", a, cmd_degree),
        Command::Strata(a) => ("strata", a, cmd_strata),
        Command::Measure(a) => ("measure", a, cmd_measure),
        Command::MetricFactor(a) => ("metric-factor", a, cmd_metric_factor),
        Command::Blowup(a) => ("blowup", a, cmd_blowup),
        Command::Curves(a) => ("curves", a, cmd_curves),
        Command::EngelSuite(a) => ("engel-suite", a, cmd_engel_suite),
        Command::Export(a) => ("export", a, cmd_export),
    };

    let text = fs::read_to_string(&args.config)
        .map_err(|err| Failure::new(4, format!("cannot read {}: {err}", args.config.display())))?;
    let mut cfg = RunConfig::parse(&text).map_err(|err| Failure::new(4, format!("config: {err}")))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(format) = &args.format {
        cfg.format = match format.as_str() {
            "csv" => Format::Csv,
            _ => Format::Json,
        };
    }
    if let Some(output) = &args.output {
        cfg.output = Some(output.display().to_string());
    }
    if args.quiet {
        cfg.quiet = true;
    }
    cfg.validate().map_err(|err| Failure::new(2, format!("config: {err}")))?;
    if cfg.format == Format::Csv
        && matches!(
            command,
            "validate-group" | "bch" | "measure" | "engel-suite" | "export"
        )
    {
        return Err(Failure::new(
            2,
            format!("{command} has no csv table; use format = json"),
        ));
    }

    let config_sha256 = report::sha256_hex(cfg.canonical_for_hash().as_bytes());
    let law = build_law(&cfg)?;
    let norm = build_norm(&cfg, &law)?;
    let ctx = Ctx {
        cfg,
        law,
        norm,
        command,
        config_sha256,
    };

    let output = handler(&ctx)?;
    emit(&ctx.cfg, output)
}

fn emit(cfg: &RunConfig, output: Output) -> Result<(), Failure> {
    let body = match cfg.format {
        Format::Json => output.body,
        Format::Csv => output
            .csv
            .expect("csv availability is prechecked per command"),
    };
    match &cfg.output {
        Some(path) => {
            fs::write(path, &body)
                .map_err(|err| Failure::new(4, format!("cannot write {path}: {err}")))?;
            if !cfg.quiet {
                for line in &output.human {
                    println!("{line}");
                }
            }
        }
        None => {
            if !cfg.quiet {
                for line in &output.human {
                    eprintln!("{line}");
                }
            }
            print!("{body}");
        }
    }
    match output.failure {
        Some(failure) => Err(failure),
        None => Ok(()),
    }
}

fn group_label(cfg: &RunConfig) -> String {
    match &cfg.group {
        Some(name) => name.clone(),
        None => {
            let dims: Vec<String> = cfg.layers.iter().map(|d| d.to_string()).collect();
            format!("layers {}", dims.join(" "))
        }
    }
}

fn manifold_label(cfg: &RunConfig) -> Option<String> {
    match &cfg.manifold {
        Some(name) => Some(name.clone()),
        None if !cfg.components.is_empty() => Some("inline".to_string()),
        None => None,
    }
}

fn build_law(cfg: &RunConfig) -> Result<Arc<GroupLaw>, Failure> {
    if let Some(name) = &cfg.group {
        Ok(catalog::entry(name)?.law())
    } else {
        let rules: Vec<BracketRule> = cfg
            .brackets
            .iter()
            .map(|b| BracketRule {
                i: b.i,
                j: b.j,
                terms: b.terms.clone(),
            })
            .collect();
        let algebra = StratifiedAlgebra::new(&cfg.layers, &rules)?;
        Ok(Arc::new(GroupLaw::new(algebra)))
    }
}

fn build_manifold(cfg: &RunConfig, law: Arc<GroupLaw>) -> Result<Submanifold, Failure> {
    if let Some(name) = &cfg.manifold {
        let group = cfg.group.as_ref().expect("validated: named manifold has a group");
        Ok(catalog::entry(group)?.build(name)?)
    } else if !cfg.components.is_empty() {
        let parameters: Vec<&str> = cfg.parameters.iter().map(String::as_str).collect();
        let components: Vec<&str> = cfg.components.iter().map(String::as_str).collect();
        Ok(Submanifold::parse(law, &parameters, &cfg.domain, &components)?)
    } else {
        Err(Failure::new(
            2,
            "this command needs a submanifold: give \"manifold\" or \"component\" lines",
        ))
    }
}

fn build_norm(cfg: &RunConfig, law: &GroupLaw) -> Result<HomogeneousNorm, Failure> {
    match &cfg.epsilons {
        Some(epsilons) => {
            let step = law.grading().step();
            if epsilons.len() != step {
                return Err(Failure::new(
                    2,
                    format!(
                        "\"epsilons\" needs one entry per layer: step {step}, got {}",
                        epsilons.len()
                    ),
                ));
            }
            Ok(HomogeneousNorm::with_epsilons(
                law.grading().clone(),
                epsilons.clone(),
            ))
        }
        None => {
            let calibration = CalibrationConfig {
                seed: cfg.seed,
                ..CalibrationConfig::default()
            };
            Ok(calibrate_norm(law, &calibration)?)
        }
    }
}

fn parameter_point(cfg: &RunConfig, m: &Submanifold) -> Result<Vec<f64>, Failure> {
    match &cfg.point {
        Some(point) if point.len() == m.parameter_count() => Ok(point.clone()),
        Some(point) => Err(Failure::new(
            2,
            format!(
                "\"point\" needs {} coordinates, got {}",
                m.parameter_count(),
                point.len()
            ),
        )),
        None => Ok(m.domain().iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect()),
    }
}

fn grid_resolution(cfg: &RunConfig, p: usize) -> Result<Vec<usize>, Failure> {
    let resolution = match cfg.grid.len() {
        0 => vec![25; p],
        1 => vec![cfg.grid[0]; p],
        n if n == p => cfg.grid.clone(),
        n => {
            return Err(Failure::new(
                2,
                format!("\"grid\" needs 1 or {p} entries, got {n}"),
            ))
        }
    };
    if resolution.iter().any(|&n| n < 2) {
        return Err(Failure::new(2, "\"grid\" entries must be at least 2"));
    }
    Ok(resolution)
}

fn default_radii(cfg: &RunConfig) -> Vec<f64> {
    if cfg.radii.is_empty() {
        vec![0.4, 0.2, 0.1, 0.05]
    } else {
        cfg.radii.clone()
    }
}

fn fit_slope(entries: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = entries
        .iter()
        .filter(|&&(r, d)| r > 0.0 && d > 0.0)
        .map(|&(r, d)| (r.ln(), d.ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    sxy / sxx
}

fn describe_witness(witness: &SubgroupWitness) -> String {
    match witness {
        SubgroupWitness::Product { a, b, product } => format!(
            "product escapes the set: a = {a:?}, b = {b:?}, a*b = {product:?}"
        ),
        SubgroupWitness::Inverse { a, inverse } => {
            format!("inverse escapes the set: a = {a:?}, a^-1 = {inverse:?}")
        }
    }
}

fn cmd_validate_group(ctx: &Ctx) -> Result<Output, Failure> {
    let algebra = ctx.law.algebra();
    let result = ValidateReport {
        dimension: algebra.dimension(),
        step: algebra.step(),
        homogeneous_dimension: algebra.homogeneous_dimension(),
        associativity: ctx.law.associativity_holds(),
        inverse: ctx.law.inverse_identity_holds(),
        homogeneity: ctx.law.homogeneity_holds(),
        remainder_structure: ctx.law.remainder_structure_holds(),
    };
    let mut failed = Vec::new();
    for (name, ok) in [
        ("associativity", result.associativity),
        ("inverse", result.inverse),
        ("homogeneity", result.homogeneity),
        ("remainder structure", result.remainder_structure),
    ] {
        if !ok {
            failed.push(name);
        }
    }
    let human = vec![format!(
        "{}: dimension {}, step {}, homogeneous dimension {}; {}",
        group_label(&ctx.cfg),
        result.dimension,
        result.step,
        result.homogeneous_dimension,
        if failed.is_empty() {
            "all axioms hold exactly".to_string()
        } else {
            format!("FAILED: {}", failed.join(", "))
        }
    )];
    let failure = if failed.is_empty() {
        None
    } else {
        Some(Failure::new(
            1,
            format!("group axioms failed: {}", failed.join(", ")),
        ))
    };
    Ok(Output {
        body: ctx.body(result),
        csv: None,
        human,
        failure,
    })
}

fn cmd_bch(ctx: &Ctx) -> Result<Output, Failure> {
    let q = ctx.law.dimension();
    let namer = move |j: usize| {
        if j < q {
            format!("x{}", j + 1)
        } else {
            format!("y{}", j + 1 - q)
        }
    };
    let polynomials: Vec<String> = (0..q)
        .map(|i| ctx.law.law_polynomial(i).display_with(&namer).to_string())
        .collect();
    let human: Vec<String> = polynomials
        .iter()
        .enumerate()
        .map(|(i, p)| format!("P{} = {p}", i + 1))
        .collect();
    let result = BchReport {
        dimension: q,
        step: ctx.law.algebra().step(),
        polynomials,
    };
    Ok(Output {
        body: ctx.body(result),
        csv: None,
        human,
        failure: None,
    })
}

fn parameter_header(m: &Submanifold, last: &str) -> Vec<String> {
    let mut header: Vec<String> = m.parameters().to_vec();
    header.push(last.to_string());
    header
}

fn cmd_degree(ctx: &Ctx) -> Result<Output, Failure> {
    let m = ctx.manifold()?;
    let resolution = grid_resolution(&ctx.cfg, m.parameter_count())?;
    let report = m.degree_on_grid(&resolution)?;
    let result = DegreeResult {
        degree: report.degree,
        witness: report.maximizer.clone(),
        samples: report.samples,
        near_degenerate: report.near_degenerate,
    };
    let human = vec![format!(
        "degree {} (witness u = {:?}, {} samples, {} near-degenerate)",
        report.degree, report.maximizer, report.samples, report.near_degenerate
    )];
    let mut rows = Vec::new();
    for u in m.grid(&resolution) {
        let degree = m.pointwise_degree(&u, ctx.cfg.tolerance)?;
        let mut row: Vec<String> = u.iter().map(|x| x.to_string()).collect();
        row.push(degree.to_string());
        rows.push(row);
    }
    let header = parameter_header(&m, "degree");
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    Ok(Output {
        body: ctx.body(result),
        csv: Some(report::csv(&header_refs, &rows)),
        human,
        failure: None,
    })
}

fn cmd_strata(ctx: &Ctx) -> Result<Output, Failure> {
    let m = ctx.manifold()?;
    let resolution = grid_resolution(&ctx.cfg, m.parameter_count())?;
    let grid = m.grid(&resolution);
    let report = catalog::strata_classification(&m, &grid, ctx.cfg.tolerance)?;
    let mut rows = Vec::new();
    let mut strata = Vec::new();
    let mut human = Vec::new();
    for (&degree, points) in &report.strata {
        human.push(format!("degree {degree}: {} points", points.len()));
        strata.push(Stratum {
            degree,
            count: points.len(),
            samples: points.iter().take(32).cloned().collect(),
        });
        for u in points {
            let mut row: Vec<String> = u.iter().map(|x| x.to_string()).collect();
            row.push(degree.to_string());
            rows.push(row);
        }
    }
    human.push(format!("{} near-degenerate points", report.near_degenerate));
    let result = StrataResult {
        grid: resolution,
        tolerance: ctx.cfg.tolerance,
        strata,
        near_degenerate: report.near_degenerate,
    };
    let header = parameter_header(&m, "degree");
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    Ok(Output {
        body: ctx.body(result),
        csv: Some(report::csv(&header_refs, &rows)),
        human,
        failure: None,
    })
}

fn cmd_measure(ctx: &Ctx) -> Result<Output, Failure> {
    let m = ctx.manifold()?;
    let region = if ctx.cfg.region.is_empty() {
        m.domain().to_vec()
    } else {
        ctx.cfg.region.clone()
    };
    let degree = match ctx.cfg.degree {
        Some(degree) => degree,
        None => m.degree_on_grid(&vec![9; m.parameter_count()])?.degree,
    };
    let quadrature = match ctx.cfg.method {
        Method::Grid => Quadrature::GaussLegendre {
            nodes: ctx.cfg.nodes,
        },
        Method::MonteCarlo => Quadrature::MonteCarlo {
            samples: ctx.cfg.samples,
            seed: ctx.cfg.seed,
        },
    };
    let outcome = measure::intrinsic_measure(&m, &region, degree, &quadrature)?;
    let human = vec![match outcome.standard_error {
        Some(se) => format!(
            "measure = {} +/- {se:.3e} (degree {degree}, {}, {} samples)",
            outcome.value,
            outcome.method.as_str(),
            outcome.sample_count
        ),
        None => format!(
            "measure = {} (degree {degree}, {}, {} nodes per axis)",
            outcome.value,
            outcome.method.as_str(),
            ctx.cfg.nodes
        ),
    }];
    let result = MeasureResult {
        degree,
        method: outcome.method.as_str().to_string(),
        value: outcome.value,
        standard_error: outcome.standard_error,
        sample_count: outcome.sample_count,
    };
    Ok(Output {
        body: ctx.body(result),
        csv: None,
        human,
        failure: None,
    })
}

fn cmd_metric_factor(ctx: &Ctx) -> Result<Output, Failure> {
    let m = ctx.manifold()?;
    let u = parameter_point(&ctx.cfg, &m)?;
    let radii = default_radii(&ctx.cfg);
    let density_config = DensityConfig {
        samples: ctx.cfg.samples,
        seed: ctx.cfg.seed,
        margin: ctx.cfg.margin,
    };
    let report = measure::verify_density_limit(&m, &u, &radii, &ctx.norm, &density_config)?;
    let degree = m.tangent_pvector(&u)?.point_degree;
    let mut human = vec![format!(
        "theta = {} +/- {:.3e}, |tau_d| = {}, target ratio = {}",
        report.theta.theta, report.theta.standard_error, report.tau_d_norm, report.target
    )];
    let mut entries = Vec::new();
    let mut rows = Vec::new();
    for entry in &report.entries {
        human.push(format!(
            "r = {}: ratio = {} +/- {:.3e} (relative gap {:.4})",
            entry.radius, entry.estimate.ratio, entry.estimate.standard_error, entry.relative_gap
        ));
        rows.push(vec![
            entry.radius.to_string(),
            entry.estimate.ratio.to_string(),
            entry.estimate.standard_error.to_string(),
            entry.relative_gap.to_string(),
        ]);
        entries.push(MetricFactorEntry {
            radius: entry.radius,
            ratio: entry.estimate.ratio,
            standard_error: entry.estimate.standard_error,
            sample_count: entry.estimate.sample_count,
            hits: entry.estimate.hits,
            relative_gap: entry.relative_gap,
        });
    }
    let result = MetricFactorResult {
        point: u,
        degree,
        theta: report.theta.theta,
        theta_standard_error: report.theta.standard_error,
        theta_sample_count: report.theta.sample_count,
        tau_d_norm: report.tau_d_norm,
        target: report.target,
        entries,
    };
    Ok(Output {
        body: ctx.body(result),
        csv: Some(report::csv(
            &["radius", "ratio", "standard_error", "relative_gap"],
            &rows,
        )),
        human,
        failure: None,
    })
}

fn cmd_blowup(ctx: &Ctx) -> Result<Output, Failure> {
    let m = ctx.manifold()?;
    let u = parameter_point(&ctx.cfg, &m)?;
    let radii = default_radii(&ctx.cfg);
    let law = m.law();

    let (entries, slope, coordinate_slope, sample_count, undersampled, limit_set) =
        match ctx.cfg.limit {
            LimitSpec::PiSigma => {
                let report = blowup::verify_blowup(
                    &m,
                    &u,
                    &radii,
                    ctx.cfg.window,
                    ctx.cfg.count,
                    &ctx.norm,
                    ctx.cfg.seed,
                )?;
                let frame = m.adapted_frame(&u)?;
                let span = frame.pi_sigma(frame.degree())?;
                let entries: Vec<BlowupEntry> = report
                    .entries
                    .iter()
                    .zip(&report.coordinate_entries)
                    .map(|(&(radius, distance), &(_, coordinate))| BlowupEntry {
                        radius,
                        distance,
                        coordinate_distance: coordinate,
                        cloud_to_limit: None,
                        limit_to_cloud: None,
                    })
                    .collect();
                (
                    entries,
                    report.slope,
                    report.coordinate_slope,
                    report.sample_count,
                    report.undersampled,
                    LimitSet::Subspace(span),
                )
            }
            LimitSpec::HalfPlane(i, j) => {
                let q = law.dimension();
                if i > q || j > q || i == j {
                    return Err(Failure::new(
                        2,
                        format!("\"limit\" axes must be distinct and at most {q}"),
                    ));
                }
                let mut axis = vec![0.0; q];
                axis[i - 1] = 1.0;
                let mut ray = vec![0.0; q];
                ray[j - 1] = 1.0;
                let limit = LimitSet::HalfPlane { u: axis, v: ray };
                let limit_cloud =
                    limit.sample(&ctx.norm, ctx.cfg.window, ctx.cfg.count, ctx.cfg.seed ^ 0x5eed)?;
                let mut entries = Vec::new();
                let mut undersampled = false;
                let mut rho = Vec::new();
                let mut coordinate = Vec::new();
                for (index, &radius) in radii.iter().enumerate() {
                    let (cloud, under) = blowup::dilated_sample(
                        &m,
                        &u,
                        radius,
                        ctx.cfg.window,
                        ctx.cfg.count,
                        &ctx.norm,
                        ctx.cfg.seed.wrapping_add(index as u64),
                    )?;
                    undersampled |= under;
                    let to_limit = blowup::directed_distance(&cloud, &limit_cloud, law, &ctx.norm)?;
                    let from_limit =
                        blowup::directed_distance(&limit_cloud, &cloud, law, &ctx.norm)?;
                    let coord = blowup::coordinate_hausdorff_distance(&cloud, &limit_cloud)?;
                    rho.push((radius, to_limit.max(from_limit)));
                    coordinate.push((radius, coord));
                    entries.push(BlowupEntry {
                        radius,
                        distance: to_limit.max(from_limit),
                        coordinate_distance: coord,
                        cloud_to_limit: Some(to_limit),
                        limit_to_cloud: Some(from_limit),
                    });
                }
                (
                    entries,
                    fit_slope(&rho),
                    fit_slope(&coordinate),
                    ctx.cfg.count,
                    undersampled,
                    limit,
                )
            }
        };

    let subgroup = blowup::subgroup_check(&limit_set, law, 256, ctx.cfg.seed)?;
    let mut human = Vec::new();
    let mut rows = Vec::new();
    for entry in &entries {
        human.push(format!(
            "r = {}: distance = {:.6} (coordinate {:.6})",
            entry.radius, entry.distance, entry.coordinate_distance
        ));
        rows.push(vec![
            entry.radius.to_string(),
            entry.distance.to_string(),
            entry.coordinate_distance.to_string(),
        ]);
    }
    human.push(format!(
        "slope = {slope:.3} (coordinate {coordinate_slope:.3}); limit {} a subgroup",
        if subgroup.closed { "is" } else { "is NOT" }
    ));
    let result = BlowupResult {
        point: u,
        limit: ctx.cfg.limit.as_text(),
        entries,
        slope,
        coordinate_slope,
        sample_count,
        undersampled,
        subgroup: SubgroupResult {
            closed: subgroup.closed,
            bracket_closed: subgroup.bracket.as_ref().map(|b| b.closed),
            witness: subgroup.witness.as_ref().map(describe_witness),
        },
    };
    Ok(Output {
        body: ctx.body(result),
        csv: Some(report::csv(
            &["radius", "distance", "coordinate_distance"],
            &rows,
        )),
        human,
        failure: None,
    })
}

fn cmd_curves(ctx: &Ctx) -> Result<Output, Failure> {
    let m = ctx.manifold()?;
    let u = parameter_point(&ctx.cfg, &m)?;
    if ctx.cfg.lambda.len() != m.parameter_count() {
        return Err(Failure::new(
            2,
            format!(
                "\"lambda\" needs one coefficient per parameter ({}), got {}",
                m.parameter_count(),
                ctx.cfg.lambda.len()
            ),
        ));
    }
    let frame = m.adapted_frame(&u)?;
    let solution = blowup::integrate_curve(&m, &frame, &ctx.cfg.lambda, ctx.cfg.t_max, ctx.cfg.steps)?;
    let fit = blowup::extract_g(&m, &frame, &solution)?;
    let human = vec![
        format!(
            "max tangency residual {:.3e} over {} steps",
            solution.max_residual, ctx.cfg.steps
        ),
        format!("G = {:?}", fit.g),
    ];
    let mut header: Vec<String> = vec!["t".to_string()];
    for i in 0..ctx.law.dimension() {
        header.push(format!("x{}", i + 1));
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut rows = Vec::new();
    for (t, state) in solution.t_grid.iter().zip(&solution.states) {
        let mut row = vec![t.to_string()];
        row.extend(state.iter().map(|x| x.to_string()));
        rows.push(row);
    }
    let result = CurvesResult {
        point: u,
        lambda: ctx.cfg.lambda.clone(),
        t_max: ctx.cfg.t_max,
        steps: ctx.cfg.steps,
        max_residual: solution.max_residual,
        g: fit.g,
        residual_slopes: fit.residual_slopes,
    };
    Ok(Output {
        body: ctx.body(result),
        csv: Some(report::csv(&header_refs, &rows)),
        human,
        failure: None,
    })
}

fn cmd_engel_suite(ctx: &Ctx) -> Result<Output, Failure> {
    let name = ctx.cfg.group.as_ref().ok_or_else(|| {
        Failure::new(2, "engel-suite needs a catalog group, not an inline one")
    })?;
    let entry = catalog::entry(name)?;
    let outcomes = catalog::check_expectations(&entry)?;
    let mut human = Vec::new();
    let mut expectations = Vec::new();
    let mut failed = 0usize;
    for outcome in outcomes {
        if !outcome.passed {
            failed += 1;
        }
        human.push(format!(
            "{} {}: {} [{}] {}",
            if outcome.passed { "pass" } else { "FAIL" },
            outcome.manifold,
            outcome.statement,
            outcome.source,
            outcome.detail
        ));
        expectations.push(ExpectationResult {
            manifold: outcome.manifold,
            statement: outcome.statement,
            source: outcome.source,
            passed: outcome.passed,
            detail: outcome.detail,
        });
    }
    let passed = expectations.len() - failed;
    human.push(format!("{passed} passed, {failed} failed"));
    let result = SuiteResult {
        passed,
        failed,
        expectations,
    };
    let failure = if failed > 0 {
        Some(Failure::new(3, format!("{failed} expectation(s) failed")))
    } else {
        None
    };
    Ok(Output {
        body: ctx.body(result),
        csv: None,
        human,
        failure,
    })
}

/// The body is the configuration grammar itself, not a JSON report: the
/// named group and submanifold come back as an equivalent inline definition.
fn cmd_export(ctx: &Ctx) -> Result<Output, Failure> {
    let inline = ctx
        .cfg
        .inlined()
        .map_err(|err| Failure::new(2, format!("export: {err}")))?;
    let mut what = group_label(&ctx.cfg);
    if let Some(manifold) = manifold_label(&ctx.cfg) {
        what.push_str(&format!(", manifold {manifold}"));
    }
    Ok(Output {
        body: inline.canonical(),
        csv: None,
        human: vec![format!("inline definition of {what}")],
        failure: None,
    })
}
