//! Command-line front end: solve the memory-kernel decay dynamics, tabulate
//! the closed-form models, reproduce the figure data sets, and report the
//! crossover times as machine-readable CSV/JSON.

use clap::{Args, Parser, Subcommand, ValueEnum};
use memkernel::asymptotics::{
    amplitude_model, branch_cut_integrals, crossover_times, knight_milonni_integral,
    AsymptoticModel,
};
use memkernel::complex::C64;
use memkernel::grid::Grid;
use memkernel::kernels::KernelKind;
use memkernel::params::{params_from_json, Params, PhysicalInput};
use memkernel::precision::{Backend, PrecisionConfig};
use memkernel::real::{Dd, Real};
use memkernel::solver::{solve_with_options, unitarity_audit, Scheme, SolveOptions, Trajectory};
use memkernel::Error as CoreError;
use serde_json::json;
use std::f64::consts::TAU;
use std::io::Write;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "memkernel", version, about = "Memory-kernel decay dynamics of a two-level emitter")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the Volterra equation and write the trajectory.
    Solve(SolveArgs),
    /// Solve and tabulate alongside a closed-form model.
    Compare(CompareArgs),
    /// Emit the data behind one of the five figure presets.
    Figure(FigureArgs),
    /// Crossover times for a parameter set (JSON).
    Crossover(ParamArgs),
    /// Dimensionless parameters and crossovers from physical data (JSON).
    Physical(PhysicalArgs),
    /// Branch-cut integrals against their closed-form asymptotes (JSON).
    AppendixCheck(AppendixArgs),
    /// Probability-conservation audit of a solved trajectory.
    Unitarity(UnitarityArgs),
}

#[derive(Args, Clone)]
struct ParamArgs {
    /// Transition frequency over decay rate.
    #[arg(long = "b-A", conflicts_with = "b_tilde")]
    b_a: Option<f64>,
    /// Shifted frequency; b_A is reconstructed from it.
    #[arg(long = "b-tilde")]
    b_tilde: Option<f64>,
    /// Cutoff over transition frequency.
    #[arg(long = "Lambda")]
    lambda: Option<f64>,
    /// Kernel power (0 or 1).
    #[arg(long)]
    n: Option<u8>,
    /// JSON parameter file; flags override its values.
    #[arg(long)]
    params_json: Option<String>,
    /// Named parameter set; flags override individual values.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Pin lambda_tilde to lambda instead of the exact ratio.
    #[arg(long, default_value_t = false)]
    approx_lambda_tilde: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Fig1,
    Fig3,
    Fig5,
    Atomchip,
    Artificial,
}

impl ParamArgs {
    fn resolve(&self) -> Result<Params, CoreError> {
        let base: Option<Params> = match (&self.preset, &self.params_json) {
            (Some(_), Some(_)) => {
                return Err(CoreError::InvalidInput(
                    "--preset and --params-json are mutually exclusive".into(),
                ))
            }
            (Some(p), None) => Some(match p {
                Preset::Fig1 | Preset::Fig3 => Params::from_b_tilde(10.0, 1000.0, 0)?,
                Preset::Fig5 => Params::from_b_tilde(1000.0, 1000.0, 1)?,
                Preset::Atomchip => Params::atom_chip(0),
                Preset::Artificial => Params::artificial_atom(0),
            }),
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CoreError::InvalidInput(format!("cannot read {path}: {e}")))?;
                Some(params_from_json(&text)?)
            }
            (None, None) => None,
        };
        let lambda = self
            .lambda
            .or(base.map(|p| p.lambda))
            .ok_or_else(|| CoreError::InvalidInput("--Lambda (or a preset/file) is required".into()))?;
        let n = self.n.or(base.map(|p| p.n)).unwrap_or(0);
        let params = if let Some(bt) = self.b_tilde {
            Params::from_b_tilde(bt, lambda, n)?
        } else if let Some(ba) = self.b_a {
            Params::from_dimensionless(ba, lambda, n)?
        } else if let Some(p) = base {
            Params::from_dimensionless(p.b_a, lambda, n)?
        } else {
            return Err(CoreError::InvalidInput(
                "provide --b-A or --b-tilde (or a preset/file)".into(),
            ));
        };
        if self.approx_lambda_tilde {
            return Params::with_options(params.b_a, params.lambda, params.n, true);
        }
        Ok(params)
    }
}

#[derive(Args, Clone)]
struct GridArgs {
    /// Final dimensionless time.
    #[arg(long, default_value_t = 10.0)]
    tau_max: f64,
    /// Uniform step.
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
    /// Optional graded head: "SPLIT:HEAD_STEP" refines [0, SPLIT].
    #[arg(long)]
    graded_head: Option<String>,
}

impl GridArgs {
    fn build(&self) -> Result<Grid, CoreError> {
        match &self.graded_head {
            None => Grid::uniform(self.tau_max, self.step),
            Some(spec) => {
                let (split, head) = spec.split_once(':').ok_or_else(|| {
                    CoreError::InvalidInput("--graded-head expects SPLIT:HEAD_STEP".into())
                })?;
                let split: f64 = split
                    .parse()
                    .map_err(|e| CoreError::InvalidInput(format!("--graded-head: {e}")))?;
                let head: f64 = head
                    .parse()
                    .map_err(|e| CoreError::InvalidInput(format!("--graded-head: {e}")))?;
                Grid::two_segment(split, head, self.tau_max, self.step)
            }
        }
    }
}

#[derive(Args, Clone)]
struct NumericsArgs {
    /// Working precision in decimal digits (16 = f64, 17..=31 = extended).
    #[arg(long, default_value_t = 16)]
    digits: u32,
    /// Absolute tolerance for the solver's error estimate.
    #[arg(long, default_value_t = 1e-3)]
    abs_tol: f64,
    /// Relative tolerance for quadrature consistency checks.
    #[arg(long, default_value_t = 1e-6)]
    rel_tol: f64,
    /// Discretization scheme.
    #[arg(long, value_enum, default_value_t = SchemeArg::Product)]
    scheme: SchemeArg,
    /// Skip the step-halving error estimate.
    #[arg(long, default_value_t = false)]
    no_error_estimate: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Product,
    Nodal,
}

impl NumericsArgs {
    fn precision(&self) -> Result<PrecisionConfig, CoreError> {
        PrecisionConfig::new(self.digits, self.abs_tol, self.rel_tol)
    }
    fn options(&self) -> SolveOptions {
        SolveOptions {
            scheme: match self.scheme {
                SchemeArg::Product => Scheme::ProductTrapezoid,
                SchemeArg::Nodal => Scheme::NodalTrapezoid,
            },
            estimate_error: !self.no_error_estimate,
        }
    }
}

#[derive(Args, Clone)]
struct OutputArgs {
    /// Output path; "-" writes to stdout.
    #[arg(long, default_value = "-")]
    out: String,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    numerics: NumericsArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    numerics: NumericsArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Closed-form model for the comparison column.
    #[arg(long, value_enum)]
    model: ModelArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Small,
    SmallSeke,
    Intermediate,
    Km0,
    AppendixA,
    ThreeTerm,
    KmIntegral,
    KmAsymptote,
}

impl From<ModelArg> for AsymptoticModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Small => AsymptoticModel::SmallTime,
            ModelArg::SmallSeke => AsymptoticModel::SmallTimeSeke,
            ModelArg::Intermediate => AsymptoticModel::Intermediate,
            ModelArg::Km0 => AsymptoticModel::LargeKM0,
            ModelArg::AppendixA => AsymptoticModel::AppendixAExact,
            ModelArg::ThreeTerm => AsymptoticModel::GeneralThreeTerm,
            ModelArg::KmIntegral => AsymptoticModel::KnightMilonniIntegral,
            ModelArg::KmAsymptote => AsymptoticModel::KnightMilonniAsymptote,
        }
    }
}

#[derive(Args)]
struct FigureArgs {
    /// Figure number, 1 through 5.
    number: u8,
    #[arg(long)]
    tau_max: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    digits: Option<u32>,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct PhysicalArgs {
    /// Transition frequency, Hz.
    #[arg(long)]
    omega_a_hz: f64,
    /// Spin factor S^2.
    #[arg(long)]
    s2: f64,
    /// Gyromagnetic factor.
    #[arg(long, default_value_t = 2.0)]
    g_s: f64,
    /// Cutoff over transition frequency.
    #[arg(long = "Lambda")]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    n: u8,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct AppendixArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Comma-separated times.
    #[arg(long, default_value = "10,30,100")]
    tau: String,
    /// Gauss-Laguerre order.
    #[arg(long, default_value_t = 64)]
    quad_order: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct UnitarityArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    numerics: NumericsArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Minimum number of frequency panels.
    #[arg(long, default_value_t = 1000)]
    n_omega: usize,
    /// Comma-separated checkpoint times.
    #[arg(long, default_value = "1,5,10")]
    checkpoints: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, kind) = classify(&e);
            let diag = json!({"error": kind, "detail": e.to_string()});
            eprintln!("{diag}");
            ExitCode::from(code)
        }
    }
}

/// Domain-style failures exit with 2, convergence/precision failures with 3.
fn classify(e: &CoreError) -> (u8, &'static str) {
    match e {
        CoreError::InvalidDomain(_) => (2, "invalid-domain"),
        CoreError::BranchPoint(_) => (2, "branch-point"),
        CoreError::InvalidInput(_) => (2, "invalid-input"),
        CoreError::UnsupportedKind(_) => (2, "unsupported-kind"),
        CoreError::NonConvergence(_) => (3, "non-convergence"),
        CoreError::Quadrature(_) => (3, "quadrature-failure"),
        CoreError::PrecisionExhausted(_) => (3, "precision-exhausted"),
        CoreError::Overflow(_) => (3, "overflow"),
        CoreError::Resolution(_) => (3, "resolution"),
    }
}

fn run(cmd: Command) -> Result<(), CoreError> {
    match cmd {
        Command::Solve(a) => cmd_solve(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Figure(a) => cmd_figure(a),
        Command::Crossover(a) => cmd_crossover(a),
        Command::Physical(a) => cmd_physical(a),
        Command::AppendixCheck(a) => cmd_appendix(a),
        Command::Unitarity(a) => cmd_unitarity(a),
    }
}

fn open_out(path: &str) -> Result<Box<dyn Write>, CoreError> {
    if path == "-" {
        Ok(Box::new(std::io::stdout().lock()))
    } else {
        let f = std::fs::File::create(path)
            .map_err(|e| CoreError::InvalidInput(format!("cannot create {path}: {e}")))?;
        Ok(Box::new(std::io::BufWriter::new(f)))
    }
}

/// Trajectory rows in a backend-independent form.
struct Rows {
    tau: Vec<f64>,
    re: Vec<String>,
    im: Vec<String>,
    abs2: Vec<String>,
    abs2_f64: Vec<f64>,
    est_error: f64,
    warnings: Vec<String>,
}

fn solve_rows(params: &Params, grid: &Grid, numerics: &NumericsArgs) -> Result<Rows, CoreError> {
    let prec = numerics.precision()?;
    let kernel = if params.n == 0 {
        KernelKind::Kappa0Reg
    } else {
        KernelKind::Kappa1Reg
    };
    match prec.backend()? {
        Backend::F64 => {
            let t = solve_with_options::<f64>(params, kernel, grid, &prec, numerics.options())?;
            Ok(rows_from(&t))
        }
        Backend::DoubleDouble => {
            let t = solve_with_options::<Dd>(params, kernel, grid, &prec, numerics.options())?;
            Ok(rows_from(&t))
        }
    }
}

fn rows_from<R: Real>(t: &Trajectory<R>) -> Rows {
    Rows {
        tau: t.grid.nodes().to_vec(),
        re: t.amplitude.iter().map(|c| c.re.format_full()).collect(),
        im: t.amplitude.iter().map(|c| c.im.format_full()).collect(),
        abs2: t
            .amplitude
            .iter()
            .map(|c| (c.re * c.re + c.im * c.im).format_full())
            .collect(),
        abs2_f64: (0..t.amplitude.len()).map(|k| t.abs2(k)).collect(),
        est_error: t.est_error,
        warnings: t.warnings.clone(),
    }
}

fn cmd_solve(a: SolveArgs) -> Result<(), CoreError> {
    let params = a.params.resolve()?;
    let grid = a.grid.build()?;
    let rows = solve_rows(&params, &grid, &a.numerics)?;
    for w in &rows.warnings {
        eprintln!("{}", json!({"warning": w}));
    }
    let mut out = open_out(&a.output.out)?;
    match a.output.format {
        Format::Csv => {
            writeln!(out, "tau,re_c,im_c,abs2,est_error,quality").map_err(io_err)?;
            for k in 0..rows.tau.len() {
                let quality =
                    if rows.est_error > 0.0 && rows.abs2_f64[k] < rows.est_error * rows.est_error {
                        "noisy"
                    } else {
                        "ok"
                    };
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    rows.tau[k], rows.re[k], rows.im[k], rows.abs2[k], rows.est_error, quality
                )
                .map_err(io_err)?;
            }
        }
        Format::Json => {
            let obj = json!({
                "params": params,
                "est_error": rows.est_error,
                "warnings": rows.warnings,
                "rows": rows.tau.iter().enumerate().map(|(k, &tau)| json!({
                    "tau": tau,
                    "re_c": rows.re[k],
                    "im_c": rows.im[k],
                    "abs2": rows.abs2[k],
                })).collect::<Vec<_>>(),
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&obj).unwrap()).map_err(io_err)?;
        }
    }
    Ok(())
}

fn io_err(e: std::io::Error) -> CoreError {
    CoreError::InvalidInput(format!("write failed: {e}"))
}

fn cmd_compare(a: CompareArgs) -> Result<(), CoreError> {
    let params = a.params.resolve()?;
    let grid = a.grid.build()?;
    let rows = solve_rows(&params, &grid, &a.numerics)?;
    let model: AsymptoticModel = a.model.into();
    let mut out = open_out(&a.output.out)?;
    writeln!(out, "tau,abs2_exact,abs2_model,rel_dev").map_err(io_err)?;
    for (k, &tau) in rows.tau.iter().enumerate() {
        let m = if tau == 0.0 {
            C64::one()
        } else {
            amplitude_model(model, tau, &params)?
        };
        let m2 = m.norm_sqr();
        let e2 = rows.abs2_f64[k];
        let rel = if e2 != 0.0 { (m2 - e2).abs() / e2 } else { 0.0 };
        writeln!(out, "{tau},{e2},{m2},{rel}").map_err(io_err)?;
    }
    Ok(())
}

fn cmd_figure(a: FigureArgs) -> Result<(), CoreError> {
    // captioned parameter sets; any value is overridable by flag
    let (def_params, def_tau, def_step, def_digits): (Params, f64, f64, u32) = match a.number {
        1 => (Params::from_b_tilde(10.0, 1000.0, 0)?, 1.0, 1e-4, 16),
        2 => (Params::from_b_tilde(10.0, 1000.0, 0)?, 0.1, 1e-5, 16),
        3 => (Params::from_b_tilde(10.0, 1000.0, 0)?, 40.0, 1e-3, 16),
        4 => (Params::from_b_tilde(10.0, 1000.0, 0)?, 40.0, 1e-3, 16),
        5 => (Params::from_b_tilde(1000.0, 1000.0, 1)?, 150.0, 1e-3, 31),
        n => {
            return Err(CoreError::InvalidInput(format!(
                "figure number must be 1..=5, got {n}"
            )))
        }
    };
    let mut pa = a.params.clone();
    if pa.b_a.is_none() && pa.b_tilde.is_none() && pa.preset.is_none() && pa.params_json.is_none() {
        pa.b_a = Some(def_params.b_a);
    }
    if pa.lambda.is_none() {
        pa.lambda = Some(def_params.lambda);
    }
    if pa.n.is_none() {
        pa.n = Some(def_params.n);
    }
    let params = pa.resolve()?;
    let numerics = NumericsArgs {
        digits: a.digits.unwrap_or(def_digits),
        abs_tol: 1e-3,
        rel_tol: 1e-6,
        scheme: SchemeArg::Product,
        no_error_estimate: false,
    };
    let grid = Grid::uniform(a.tau_max.unwrap_or(def_tau), a.step.unwrap_or(def_step))?;
    let rows = solve_rows(&params, &grid, &numerics)?;
    let mut out = open_out(&a.output.out)?;
    match a.number {
        1 | 2 => {
            writeln!(out, "tau,abs2_exact,abs2_intermediate,abs2_exp").map_err(io_err)?;
            for (k, &tau) in rows.tau.iter().enumerate() {
                let inter = amplitude_model(AsymptoticModel::Intermediate, tau, &params)?;
                writeln!(
                    out,
                    "{tau},{},{},{}",
                    rows.abs2_f64[k],
                    inter.norm_sqr(),
                    (-tau).exp()
                )
                .map_err(io_err)?;
            }
        }
        3 => {
            writeln!(out, "tau,abs2_exact,abs2_km0").map_err(io_err)?;
            for (k, &tau) in rows.tau.iter().enumerate() {
                // the asymptote diverges at tau = 0; anchor the first row at
                // the shared initial value
                let km0 = if tau == 0.0 {
                    1.0
                } else {
                    amplitude_model(AsymptoticModel::LargeKM0, tau, &params)?.norm_sqr()
                };
                writeln!(out, "{tau},{},{km0}", rows.abs2_f64[k]).map_err(io_err)?;
            }
        }
        4 => {
            writeln!(out, "tau,abs2_exact,abs2_km_integral,abs2_exp").map_err(io_err)?;
            for (k, &tau) in rows.tau.iter().enumerate() {
                let km = if tau == 0.0 {
                    1.0
                } else {
                    knight_milonni_integral(tau, &params, 64)?.norm_sqr()
                };
                writeln!(out, "{tau},{},{km},{}", rows.abs2_f64[k], (-tau).exp())
                    .map_err(io_err)?;
            }
        }
        _ => {
            writeln!(out, "tau,abs2_exact,abs2_km_integral,abs2_km_asymptote").map_err(io_err)?;
            for (k, &tau) in rows.tau.iter().enumerate() {
                let (km, asym) = if tau == 0.0 {
                    (1.0, 1.0)
                } else {
                    (
                        knight_milonni_integral(tau, &params, 64)?.norm_sqr(),
                        amplitude_model(AsymptoticModel::KnightMilonniAsymptote, tau, &params)?
                            .norm_sqr(),
                    )
                };
                writeln!(out, "{tau},{},{km},{asym}", rows.abs2[k]).map_err(io_err)?;
            }
        }
    }
    Ok(())
}

fn cmd_crossover(a: ParamArgs) -> Result<(), CoreError> {
    let params = a.resolve()?;
    let times = crossover_times(&params)?;
    let obj = json!({"params": params, "crossovers": times});
    println!("{}", serde_json::to_string_pretty(&obj).unwrap());
    Ok(())
}

fn cmd_physical(a: PhysicalArgs) -> Result<(), CoreError> {
    let omega_a = TAU * a.omega_a_hz;
    let input = PhysicalInput {
        omega_a,
        s2: a.s2,
        g_s: a.g_s,
        omega_c: a.lambda * omega_a,
    };
    let params = Params::from_physical(&input, a.n)?;
    let times = crossover_times(&params)?;
    let obj = json!({
        "input": input,
        "params": params,
        "crossovers": times,
    });
    let mut out = open_out(&a.output.out)?;
    writeln!(out, "{}", serde_json::to_string_pretty(&obj).unwrap()).map_err(io_err)?;
    Ok(())
}

fn cmd_appendix(a: AppendixArgs) -> Result<(), CoreError> {
    let params = a.params.resolve()?;
    let taus: Vec<f64> = a
        .tau
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| CoreError::InvalidInput(format!("--tau: {e}")))
        })
        .collect::<Result<_, _>>()?;
    let lp = params.lift::<f64>();
    let mut entries = Vec::new();
    for &tau in &taus {
        let pieces = branch_cut_integrals(tau, &params, a.quad_order)?;
        let entry = if params.n == 0 {
            let a0 = lp.b_tilde - (lp.b_tilde * tau).ln() / TAU;
            let a2 = lp.lambda_c - params.b_a - (lp.lambda_c * tau).ln() / TAU;
            json!({
                "tau": tau,
                "pole_u1": pieces.pole_u1,
                "residue_z1": pieces.residue_z1,
                "i1": pieces.i1,
                "i1_asymptote_modulus": 1.0 / (a0 * a0),
                "i1_rel_dev": (pieces.i1.abs() - 1.0 / (a0 * a0)).abs() * a0 * a0,
                "i1_re_over_im": pieces.i1.re.abs() / pieces.i1.im.abs(),
                "i2": pieces.i2,
                "i2_asymptote_modulus": 1.0 / (a2 * a2),
                "reconstructed_c": pieces.reconstructed_c,
                "reconstructed_abs2": pieces.reconstructed_c.norm_sqr(),
            })
        } else {
            let a0 = params.b_a - (lp.lambda_c * tau).ln() / TAU;
            json!({
                "tau": tau,
                "pole_u1": pieces.pole_u1,
                "residue_z1": pieces.residue_z1,
                "j1": pieces.i1,
                "j1_asymptote_modulus": 1.0 / (params.b_a.powi(3) * tau),
                "j1_rel_dev": (pieces.i1.abs() - 1.0 / (params.b_a.powi(3) * tau)).abs()
                    * params.b_a.powi(3) * tau,
                "j2": pieces.i2,
                "j2_asymptote_modulus": 1.0 / (params.lambda * a0 * a0),
                "j2_rel_dev_from_logless_form": (pieces.i2.abs()
                    - 1.0 / (lp.lambda_tilde * a0 * a0)).abs() * lp.lambda_tilde * a0 * a0,
                "reconstructed_c": pieces.reconstructed_c,
                "reconstructed_abs2": pieces.reconstructed_c.norm_sqr(),
            })
        };
        entries.push(entry);
    }
    let obj = json!({"params": params, "entries": entries});
    let mut out = open_out(&a.output.out)?;
    writeln!(out, "{}", serde_json::to_string_pretty(&obj).unwrap()).map_err(io_err)?;
    Ok(())
}

fn cmd_unitarity(a: UnitarityArgs) -> Result<(), CoreError> {
    let params = a.params.resolve()?;
    if params.n != 0 {
        return Err(CoreError::UnsupportedKind(
            "the unitarity audit is defined for the n = 0 kernel".into(),
        ));
    }
    let grid = a.grid.build()?;
    let prec = a.numerics.precision()?;
    let checkpoints: Vec<f64> = a
        .checkpoints
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| CoreError::InvalidInput(format!("--checkpoints: {e}")))
        })
        .collect::<Result<_, _>>()?;
    let t = solve_with_options::<f64>(
        &params,
        KernelKind::Kappa0Reg,
        &grid,
        &prec,
        a.numerics.options(),
    )?;
    let report = unitarity_audit(&t, a.n_omega, &checkpoints)?;
    let mut out = open_out(&a.output.out)?;
    match a.output.format {
        Format::Csv => {
            writeln!(out, "tau,excited_prob,emitted_prob,defect").map_err(io_err)?;
            for k in 0..report.taus.len() {
                writeln!(
                    out,
                    "{},{},{},{}",
                    report.taus[k],
                    report.excited_prob[k],
                    report.emitted_prob[k],
                    report.defect[k]
                )
                .map_err(io_err)?;
            }
        }
        Format::Json => {
            let obj = json!({"params": params, "report": report});
            writeln!(out, "{}", serde_json::to_string_pretty(&obj).unwrap()).map_err(io_err)?;
        }
    }
    Ok(())
}
