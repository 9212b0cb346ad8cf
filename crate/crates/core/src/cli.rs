//! Command-line front end. [`run`] maps an argument vector to an exit code:
//! 0 on success (including `--help`), 1 on invalid input or unwritable
//! output, 2 when a single solve fails numerically. Per-cell failures inside
//! a grid are recorded in the CSV and do not change the exit code.

use crate::error::{invalid, Error, Result};
use crate::experiments::{
    fit_loglog_slope, run_circle_exact, run_constraint_validity, run_sphere_scaling, run_torus_convergence,
    write_csv, EpsilonGrid, ExperimentConfig, WeightMode, WindowPolicy,
};
use crate::geometry::{
    cost_matrix, equispaced_circle, sample_sphere, sample_torus, CostScale, ManifoldSpec, PointCloud, TestFunction,
};
use crate::pme::{support_radius_comparison, BarenblattProfile};
use crate::scaling::ScalingConstants;
use crate::solver::{marginal_residual, solve_semismooth_newton, QotProblem, SolveOptions};
use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(name = "qotgraph", version, about = "Quadratically regularised optimal transport experiments")]
#[command(args_override_self = true)]
struct Cli {
    /// Worker threads for grid experiments (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one problem and write its plan as `i,j,value` triplets.
    Solve(SolveArgs),
    /// Mean optimal potential against eps on a sampled sphere.
    SphereScaling(SphereArgs),
    /// Rescaled graph operator at a base point of the torus.
    TorusLaplacian(TorusArgs),
    /// Solved, exact and closed-form thresholds on the equispaced circle.
    CircleExact(CircleArgs),
    /// Empirical constraint statistic against its expansion on a sphere.
    ConstraintValidity(ValidityArgs),
    /// Support-radius exponents of the porous medium profile and the plan.
    PmeCompare(PmeArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat `key = value` file; keys are flag names without dashes.
    /// Flags given on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Marginal residual tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// sphere, torus or circle (equispaced).
    #[arg(long, default_value = "sphere")]
    manifold: String,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    major: f64,
    #[arg(long, default_value_t = 0.5)]
    minor: f64,
    /// Read points from a CSV (`idx,x0,..`) instead of sampling.
    #[arg(long)]
    points: Option<PathBuf>,
    #[arg(long)]
    eps: f64,
    /// Cost scale: 1 for `|x-y|^2`, 0.5 for `|x-y|^2/2`.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Also write the solve report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EpsArgs {
    /// Explicit eps values.
    #[arg(long, value_delimiter = ',')]
    eps: Vec<f64>,
    #[arg(long)]
    eps_min: Option<f64>,
    #[arg(long)]
    eps_max: Option<f64>,
    #[arg(long)]
    eps_count: Option<usize>,
    /// Scheduled exponents: eps = eps_constant * N^alpha.
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    eps_constant: f64,
}

impl EpsArgs {
    fn grid(&self) -> Result<EpsilonGrid> {
        let range = self.eps_min.is_some() || self.eps_max.is_some() || self.eps_count.is_some();
        let chosen = [!self.eps.is_empty(), range, !self.alpha.is_empty()].iter().filter(|b| **b).count();
        if chosen != 1 {
            return Err(invalid("give exactly one of --eps, --eps-min/--eps-max/--eps-count, --alpha"));
        }
        if !self.eps.is_empty() {
            return Ok(EpsilonGrid::Values(self.eps.clone()));
        }
        if !self.alpha.is_empty() {
            if !(self.eps_constant > 0.0) {
                return Err(invalid("--eps-constant must be positive"));
            }
            return Ok(EpsilonGrid::Powers { alphas: self.alpha.clone(), constant: self.eps_constant });
        }
        match (self.eps_min, self.eps_max, self.eps_count) {
            (Some(a), Some(b), Some(c)) => EpsilonGrid::log_spaced(a, b, c),
            _ => Err(invalid("--eps-min, --eps-max and --eps-count go together")),
        }
    }
}

#[derive(Args, Debug)]
struct SphereArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    eps: EpsArgs,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, value_delimiter = ',', default_value = "1000")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
}

#[derive(Args, Debug)]
struct TorusArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    eps: EpsArgs,
    #[arg(long, value_delimiter = ',', default_value = "1000")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long, default_value_t = 1.0)]
    major: f64,
    #[arg(long, default_value_t = 0.5)]
    minor: f64,
    /// Base point, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,0")]
    base: Vec<f64>,
    #[arg(long, default_value = "weighted_quadratic")]
    function: String,
    /// `solved` (row-normalized plan) or `plugin` (`(N+1)(K - c)_+ / eps`).
    #[arg(long, default_value = "solved")]
    weights: String,
}

#[derive(Args, Debug)]
struct CircleArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', default_value = "1000")]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    eps: Vec<f64>,
    /// Target neighbour counts `k`, mapped to `eps = 16 pi^2 k^3 / (3N)`.
    #[arg(long, value_delimiter = ',')]
    neighbors: Vec<f64>,
}

#[derive(Args, Debug)]
struct ValidityArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    eps: EpsArgs,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, value_delimiter = ',', default_value = "1000")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
}

#[derive(Args, Debug)]
struct PmeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 1.0)]
    mass: f64,
    /// Centre of the eps decade for the plan radius fit.
    #[arg(long, default_value_t = 100.0)]
    eps: f64,
    #[arg(long, default_value_t = 1000)]
    n: usize,
}

/// Expands `key = value` lines into flags. `true`/`false` values become a
/// bare flag or nothing.
fn config_tokens(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
    let mut tokens = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| invalid(format!("config line {}: expected key = value", lineno + 1)))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key == "config" {
            return Err(invalid("config files cannot include other config files"));
        }
        match value {
            "true" => tokens.push(format!("--{key}")),
            "false" => {}
            _ => {
                tokens.push(format!("--{key}"));
                tokens.push(value.to_string());
            }
        }
    }
    Ok(tokens)
}

/// Inserts the config-file flags right after the subcommand. Flags given on
/// the command line take precedence.
fn merge_config(argv: &[String]) -> Result<Vec<String>> {
    let pos = argv.iter().position(|a| a == "--config" || a.starts_with("--config="));
    let Some(pos) = pos else { return Ok(argv.to_vec()) };
    let path = match argv[pos].strip_prefix("--config=") {
        Some(p) => p.to_string(),
        None => argv.get(pos + 1).cloned().ok_or_else(|| invalid("--config needs a path"))?,
    };
    let sub = argv
        .iter()
        .skip(1)
        .position(|a| !a.starts_with('-'))
        .map(|p| p + 1)
        .ok_or_else(|| invalid("--config needs a subcommand"))?;
    // list flags append instead of overriding, so drop config keys that the
    // command line sets itself
    let given: Vec<&str> =
        argv.iter().filter_map(|a| a.strip_prefix("--")).map(|a| a.split('=').next().unwrap_or(a)).collect();
    let mut out = argv[..=sub].to_vec();
    let mut skipping = false;
    for token in config_tokens(Path::new(&path))? {
        match token.strip_prefix("--") {
            Some(key) => {
                skipping = given.contains(&key);
                if !skipping {
                    out.push(token);
                }
            }
            None if !skipping => out.push(token),
            None => {}
        }
    }
    out.extend_from_slice(&argv[sub + 1..]);
    Ok(out)
}

fn output_path(common: &Common) -> Result<&Path> {
    common.out.as_deref().ok_or_else(|| invalid("--out is required"))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))
}

fn base_config(common: &Common) -> ExperimentConfig {
    ExperimentConfig { seed: common.seed, tol: common.tol, max_iter: common.max_iter, ..Default::default() }
}

fn count_ok<'a>(statuses: impl Iterator<Item = &'a str>) -> (usize, usize) {
    statuses.fold((0, 0), |(all, ok), s| (all + 1, ok + s.starts_with("ok") as usize))
}

fn read_points(path: &Path, manifold: ManifoldSpec) -> Result<PointCloud> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')).skip(1) {
        let row = line
            .split(',')
            .skip(1)
            .map(|v| v.trim().parse::<f64>().map_err(|_| invalid(format!("bad number in points file: {line}"))))
            .collect::<Result<Vec<f64>>>()?;
        manifold.check_on_manifold(&row)?;
        rows.push(row);
    }
    let p = manifold.ambient_dim();
    if rows.is_empty() || rows.iter().any(|r| r.len() != p) {
        return Err(invalid(format!("points file needs at least one row of {p} coordinates")));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let n = flat.len() / p;
    PointCloud::new(Array2::from_shape_vec((n, p), flat).expect("shape checked"), manifold, 0)
}

fn solve(args: &SolveArgs) -> Result<String> {
    let out = output_path(&args.common)?;
    let scale = CostScale::from_value(args.gamma)?;
    let manifold = match args.manifold.as_str() {
        "sphere" => ManifoldSpec::sphere(args.d)?,
        "torus" => ManifoldSpec::torus(args.major, args.minor)?,
        "circle" => ManifoldSpec::equispaced_circle(args.n)?,
        other => return Err(Error::UnsupportedManifold(other.to_string())),
    };
    let cloud = match (&args.points, args.manifold.as_str()) {
        (Some(path), _) => read_points(path, manifold)?,
        (None, "sphere") => sample_sphere(args.d, args.n, args.common.seed)?,
        (None, "torus") => sample_torus(args.major, args.minor, args.n, args.common.seed)?,
        (None, _) => equispaced_circle(args.n)?,
    };
    let problem = QotProblem::from_cost(&cost_matrix(&cloud, scale), args.eps)?;
    let mut options = SolveOptions { tol: args.common.tol, max_iter: args.common.max_iter, init: None };
    if args.manifold != "circle" {
        let constants = ScalingConstants::for_manifold(&manifold);
        options = options.with_init(constants.ansatz_potential(args.eps, cloud.len(), scale));
    }
    let mut writer = create(out)?;
    let report_writer = args.report.as_deref().map(create).transpose()?;
    let sol = solve_semismooth_newton(&problem, &options)?;
    sol.coupling.plan.write_coo_csv(&mut writer)?;
    if let Some(mut w) = report_writer {
        use std::io::Write;
        writeln!(w, "{}", sol.report.to_json())?;
    }
    Ok(format!(
        "solve: N={} eps={} iterations={} residual={:.3e} mean potential={:.6e} nnz={} -> {}",
        cloud.len(),
        args.eps,
        sol.report.iterations,
        marginal_residual(&problem, &sol.coupling),
        sol.potential.mean(),
        sol.coupling.plan.nnz(),
        out.display()
    ))
}

fn sphere_scaling(args: &SphereArgs) -> Result<String> {
    let out = output_path(&args.common)?;
    let config = ExperimentConfig {
        d: args.d,
        n_list: args.n.clone(),
        eps: args.eps.grid()?,
        scale: CostScale::from_value(args.gamma)?,
        ..base_config(&args.common)
    };
    if !(1..=3).contains(&args.d) {
        return Err(invalid("sphere-scaling supports d in 1..=3"));
    }
    let mut writer = create(out)?;
    let rows = run_sphere_scaling(&config)?;
    write_csv(&rows, &mut writer)?;
    let (all, ok) = count_ok(rows.iter().map(|r| r.status.as_str()));
    let (x, y): (Vec<f64>, Vec<f64>) =
        rows.iter().filter(|r| r.status.starts_with("ok")).map(|r| (r.epsilon, r.mean_potential)).unzip();
    let slope = match fit_loglog_slope(&x, &y, WindowPolicy::default()) {
        Ok(f) => format!("slope {:.4} over {} points", f.fit.slope, f.window.1 - f.window.0),
        Err(e) => format!("no slope ({e})"),
    };
    Ok(format!("sphere-scaling: {all} rows, {ok} ok, {slope} -> {}", out.display()))
}

fn torus(args: &TorusArgs) -> Result<String> {
    let out = output_path(&args.common)?;
    let weights = match args.weights.as_str() {
        "solved" => WeightMode::Solved,
        "plugin" => WeightMode::Plugin,
        other => return Err(invalid(format!("--weights must be solved or plugin, got {other}"))),
    };
    let config = ExperimentConfig {
        n_list: args.n.clone(),
        eps: args.eps.grid()?,
        repeats: args.repeats,
        major: args.major,
        minor: args.minor,
        base_point: args.base.clone(),
        function: TestFunction::from_name(&args.function)?,
        weights,
        ..base_config(&args.common)
    };
    let mut writer = create(out)?;
    let rows = run_torus_convergence(&config)?;
    write_csv(&rows, &mut writer)?;
    let (all, ok) = count_ok(rows.iter().map(|r| r.status.as_str()));
    Ok(format!("torus-laplacian: {all} rows, {ok} ok -> {}", out.display()))
}

fn circle(args: &CircleArgs) -> Result<String> {
    let out = output_path(&args.common)?;
    let eps = match (args.eps.is_empty(), args.neighbors.is_empty()) {
        (false, true) => EpsilonGrid::Values(args.eps.clone()),
        (true, false) => EpsilonGrid::Neighbors(args.neighbors.clone()),
        _ => return Err(invalid("give exactly one of --eps, --neighbors")),
    };
    let config = ExperimentConfig { n_list: args.n.clone(), eps, ..base_config(&args.common) };
    let mut writer = create(out)?;
    let rows = run_circle_exact(&config)?;
    write_csv(&rows, &mut writer)?;
    let (all, ok) = count_ok(rows.iter().map(|r| r.status.as_str()));
    let worst = rows.iter().map(|r| r.rel_err).filter(|v| v.is_finite()).fold(0.0, f64::max);
    Ok(format!("circle-exact: {all} rows, {ok} ok, max closed-form error {worst:.3e} -> {}", out.display()))
}

fn validity(args: &ValidityArgs) -> Result<String> {
    let out = output_path(&args.common)?;
    let config = ExperimentConfig {
        d: args.d,
        n_list: args.n.clone(),
        eps: args.eps.grid()?,
        repeats: args.repeats,
        ..base_config(&args.common)
    };
    let mut writer = create(out)?;
    let rows = run_constraint_validity(&config)?;
    write_csv(&rows, &mut writer)?;
    let (all, ok) = count_ok(rows.iter().map(|r| r.status.as_str()));
    let mean = rows.iter().map(|r| r.empirical).sum::<f64>() / rows.len() as f64;
    Ok(format!("constraint-validity: {all} rows, {ok} ok, mean statistic {mean:.4} -> {}", out.display()))
}

fn pme(args: &PmeArgs) -> Result<String> {
    let out = output_path(&args.common)?;
    let profile = BarenblattProfile::from_mass(args.d, args.mass)?;
    let constants = ScalingConstants::new(args.d, ManifoldSpec::sphere(args.d)?.volume())?;
    let cmp = support_radius_comparison(&profile, &constants, args.eps, args.n)?;
    cmp.write_csv(create(out)?)?;
    let worst = cmp.rows.iter().map(|r| r.abs_error).fold(0.0, f64::max);
    Ok(format!("pme-compare: d={} max exponent error {worst:.2e} -> {}", args.d, out.display()))
}

fn dispatch(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Solve(a) => solve(a),
        Command::SphereScaling(a) => sphere_scaling(a),
        Command::TorusLaplacian(a) => torus(a),
        Command::CircleExact(a) => circle(a),
        Command::ConstraintValidity(a) => validity(a),
        Command::PmeCompare(a) => pme(a),
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let argv = match merge_config(&argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.threads {
        Some(0) => Err(invalid("--threads must be at least 1")),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| invalid(e.to_string()))
            .and_then(|pool| pool.install(|| dispatch(&cli))),
        None => dispatch(&cli),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}
