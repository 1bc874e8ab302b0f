//! `affine-shapes` command-line front end: thresholds, shape classification,
//! curve export, theorem/oracle sweeps and Monte Carlo price checks.
//!
//! Exit codes: 0 ok, 1 I/O or numerical failure, 2 usage or validation error,
//! 3 no negative root of `R(c) = 1`, 4 short rate outside the state space,
//! 5 theorem/oracle disagreement, 6 Monte Carlo check failed.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use affine_shapes::classifier::{classify_forward, classify_yield};
use affine_shapes::model::*;
use affine_shapes::montecarlo::{mc_check, min_steps};
use affine_shapes::oracle::verify_sweep;
use affine_shapes::riccati::{forward_curve, geometric_grid, solve_ab_on_grid, yield_curve, Curve, DEFAULT_POINTS, DEFAULT_X_MIN};
use affine_shapes::{compute_thresholds, Error};
use clap::{ArgGroup, Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "affine-shapes", version, about = "Yield and forward curve shapes for affine short-rate models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the shape thresholds of a model as JSON.
    Thresholds {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Export a yield or forward curve.
    Curve(CurveArgs),
    /// Classify the yield and forward curve shapes at a short rate.
    Classify {
        #[command(flatten)]
        model: ModelArgs,
        /// Current short rate.
        #[arg(long, allow_negative_numbers = true)]
        r: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Compare theorem labels with a numerical oracle over random models.
    Verify(VerifyArgs),
    /// Compare a Monte Carlo bond price with the affine price.
    McCheck(McArgs),
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["model", "spec"])))]
struct ModelArgs {
    /// Built-in model (vasicek, cir, gamma_ou) with inline parameters.
    #[arg(long)]
    model: Option<ModelKind>,
    /// JSON model specification file: {"kind": ..., "params": {...}}.
    #[arg(long, value_name = "FILE")]
    spec: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    sigma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    k: Option<f64>,
}

#[derive(Args)]
struct OutputArgs {
    /// Write to this file instead of standard output.
    #[arg(long, short, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Yield,
    Forward,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value = "yield")]
    kind: Kind,
    /// Current short rate.
    #[arg(long, allow_negative_numbers = true)]
    r: f64,
    /// Longest maturity in years.
    #[arg(long, allow_negative_numbers = true, default_value_t = 30.0)]
    x_max: f64,
    /// Shortest maturity of the geometric grid.
    #[arg(long, default_value_t = DEFAULT_X_MIN)]
    x_min: f64,
    #[arg(long, default_value_t = DEFAULT_POINTS)]
    points: usize,
    /// ODE tolerance (absolute and relative).
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 50)]
    n_models: usize,
    /// Short rates per model, spread over the theorem regions.
    #[arg(long, default_value_t = 20)]
    n_r: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Rates within exclusion·max(1, |t|) of a threshold t are skipped.
    #[arg(long, default_value_t = 1e-4)]
    exclusion: f64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct McArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, allow_negative_numbers = true)]
    r0: f64,
    /// Maturity in years.
    #[arg(long)]
    x: f64,
    #[arg(long, default_value_t = 100_000)]
    n_paths: usize,
    /// Time steps; defaults to 200 per year of maturity.
    #[arg(long)]
    n_steps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutputArgs,
}

/// A failure together with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoRoot => 3,
            Error::OutOfStateSpace { .. } => 4,
            Error::Disagreement(_) => 5,
            Error::DomainEscape { .. }
            | Error::NonFinite { .. }
            | Error::StepSizeUnderflow { .. }
            | Error::QuadratureFailure { .. }
            | Error::AllDead
            | Error::GenerationExhausted { .. } => 1,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

type CmdResult = Result<u8, Failure>;

impl ModelArgs {
    fn spec(&self) -> Result<ModelSpec, Failure> {
        if let Some(path) = &self.spec {
            let stray = [self.lambda, self.theta, self.sigma, self.a, self.k].iter().any(Option::is_some);
            if stray {
                return Err(usage("inline parameters cannot be combined with --spec"));
            }
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            return Ok(ModelSpec::from_json(&text)?);
        }
        let kind = self.model.expect("clap enforces a model source");
        let need = |name: &str, v: Option<f64>| {
            v.ok_or_else(|| usage(format!("--model {} requires --{name}", kind_label(kind))))
        };
        let forbid = |name: &str, v: Option<f64>| match v {
            Some(_) => Err(usage(format!("--{name} is not a parameter of --model {}", kind_label(kind)))),
            None => Ok(()),
        };
        Ok(match kind {
            ModelKind::Vasicek => {
                forbid("a", self.a)?;
                forbid("k", self.k)?;
                ModelSpec::Vasicek(VasicekParams {
                    lambda: need("lambda", self.lambda)?,
                    theta: need("theta", self.theta)?,
                    sigma: need("sigma", self.sigma)?,
                })
            }
            ModelKind::Cir => {
                forbid("lambda", self.lambda)?;
                forbid("k", self.k)?;
                ModelSpec::Cir(CirParams {
                    a: need("a", self.a)?,
                    theta: need("theta", self.theta)?,
                    sigma: need("sigma", self.sigma)?,
                })
            }
            ModelKind::GammaOu => {
                forbid("a", self.a)?;
                forbid("sigma", self.sigma)?;
                ModelSpec::GammaOu(GammaOuParams {
                    lambda: need("lambda", self.lambda)?,
                    k: need("k", self.k)?,
                    theta: need("theta", self.theta)?,
                })
            }
        })
    }

    fn build(&self) -> Result<AffineModel, Failure> {
        Ok(self.spec()?.build()?)
    }
}

fn kind_label(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Vasicek => "vasicek",
        ModelKind::Cir => "cir",
        ModelKind::GammaOu => "gamma_ou",
    }
}

impl OutputArgs {
    /// Writes `text` (LF line endings, trailing newline added if missing).
    fn emit(&self, text: &str) -> Result<(), Failure> {
        let mut text = text.to_string();
        if !text.ends_with('\n') {
            text.push('\n');
        }
        let result = match &self.output {
            Some(path) => fs::write(path, text.as_bytes()),
            None => io::stdout().lock().write_all(text.as_bytes()),
        };
        result.map_err(|e| Failure { code: 1, message: format!("write failed: {e}") })
    }
}

fn thresholds_json(m: &AffineModel) -> Result<Value, Failure> {
    let th = compute_thresholds(m)?;
    let mut v = serde_json::to_value(th).expect("thresholds serialize");
    let obj = v.as_object_mut().expect("object");
    obj.insert("model".into(), json!(m.name()));
    obj.insert("state_space".into(), json!(m.state_space().label()));
    obj.insert("ordering".into(), json!("b_fw_norm < b_y_norm < b_asymp < b_inv"));
    Ok(v)
}

fn cmd_thresholds(model: &ModelArgs, out: &OutputArgs) -> CmdResult {
    let m = model.build()?;
    out.emit(&thresholds_json(&m)?.to_string())?;
    Ok(0)
}

fn cmd_classify(model: &ModelArgs, r: f64, out: &OutputArgs) -> CmdResult {
    let m = model.build()?;
    let th = compute_thresholds(&m)?;
    let y = classify_yield(&th, r)?;
    let f = classify_forward(&th, r)?;
    let v = json!({
        "model": m.name(),
        "r": r,
        "yield_shape": y.label,
        "forward_shape": f.label,
        "thresholds": th,
    });
    out.emit(&v.to_string())?;
    Ok(0)
}

fn cmd_curve(args: &CurveArgs) -> CmdResult {
    if !(args.x_max.is_finite() && args.x_max > 0.0) {
        return Err(usage(format!("--x-max must be positive, got {}", args.x_max)));
    }
    if args.points < 2 {
        return Err(usage("--points must be at least 2"));
    }
    let m = args.model.build()?;
    m.ensure_valid()?;
    if !m.state_space().contains(args.r) {
        return Err(Error::OutOfStateSpace { r: args.r, state_space: m.state_space().label() }.into());
    }
    let x_min = args.x_min.min(args.x_max * 1e-4);
    let grid = geometric_grid(x_min, args.x_max, args.points)?;
    let ab = solve_ab_on_grid(&m, &grid, args.tol)?;
    let curve = match args.kind {
        Kind::Yield => yield_curve(args.r, &ab),
        Kind::Forward => {
            // Drop the x = 0 node so both kinds share the requested grid.
            let full = forward_curve(&m, args.r, &ab);
            Curve { kind: full.kind, xs: full.xs[1..].to_vec(), values: full.values[1..].to_vec() }
        }
    };
    let text = match args.format {
        Format::Csv => curve.to_csv(),
        Format::Json => json!({
            "model": m.name(),
            "kind": curve.kind,
            "r": args.r,
            "x": curve.xs,
            "value": curve.values,
        })
        .to_string(),
    };
    args.out.emit(&text)?;
    Ok(0)
}

fn cmd_verify(args: &VerifyArgs) -> CmdResult {
    if args.n_models == 0 {
        return Err(usage("--n-models must be at least 1"));
    }
    if args.n_r == 0 {
        return Err(usage("--n-r must be at least 1"));
    }
    if !(args.exclusion >= 0.0 && args.exclusion.is_finite()) {
        return Err(usage(format!("--exclusion must be non-negative, got {}", args.exclusion)));
    }
    let mut lines = String::new();
    let (mut rows, mut skipped, mut disagreements) = (0, 0, 0);
    for report in verify_sweep(args.seed, args.n_models, args.n_r, args.exclusion) {
        let report = report?;
        for row in &report.rows {
            lines.push_str(&serde_json::to_string(row).expect("row serializes"));
            lines.push('\n');
            disagreements += usize::from(!row.agree);
        }
        rows += report.rows.len();
        skipped += report.skipped.len();
    }
    let summary = json!({
        "summary": {
            "seed": args.seed,
            "models": args.n_models,
            "rows": rows,
            "skipped": skipped,
            "disagreements": disagreements,
        }
    });
    lines.push_str(&summary.to_string());
    args.out.emit(&lines)?;
    if disagreements > 0 {
        eprintln!("affine-shapes: {disagreements} theorem/oracle disagreements");
        return Ok(5);
    }
    Ok(0)
}

fn cmd_mc_check(args: &McArgs) -> CmdResult {
    if !(args.x.is_finite() && args.x > 0.0) {
        return Err(usage(format!("--x must be positive, got {}", args.x)));
    }
    let m = args.model.build()?;
    m.ensure_valid()?;
    let n_steps = args.n_steps.unwrap_or(4 * min_steps(args.x));
    let check = mc_check(&m, args.r0, args.x, args.n_paths, n_steps, args.seed)?;
    args.out.emit(&check.to_json())?;
    if !check.passed() {
        eprintln!("affine-shapes: |z| = {} exceeds 3 after a fresh-seed retry", check.z_score.abs());
        return Ok(6);
    }
    Ok(0)
}

fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Thresholds { model, out } => cmd_thresholds(model, out),
        Command::Curve(args) => cmd_curve(args),
        Command::Classify { model, r, out } => cmd_classify(model, *r, out),
        Command::Verify(args) => cmd_verify(args),
        Command::McCheck(args) => cmd_mc_check(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("affine-shapes: {}", f.message);
            if f.code == 2 {
                eprintln!("{}", Cli::command().render_usage());
            }
            ExitCode::from(f.code)
        }
    }
}
