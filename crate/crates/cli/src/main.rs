//! `fermat`: generate solution families, check them numerically and measure
//! their Nevanlinna growth. Reports go to stdout as JSON (CSV for growth
//! curves); exit code 0 on success, 1 on a failed check or numeric failure,
//! 2 on usage, degeneracy and constraint errors.

use std::path::Path;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fermat_core::elliptic::{diagnostics, wp_pair_guarded, wp_zeros_in_cell};
use fermat_core::families::{self, eq5_pair, FamilyError};
use fermat_core::format::{complex_json, real_json};
use fermat_core::nevanlinna::{
    self, characteristic, order_estimate, pole_enumerator_for, pole_enumerator_for_expr, GrowthCurve,
};
use fermat_core::verify::{self, check_eq6, check_eq7};
use fermat_core::{
    equianharmonic_lattice, Complex64, Expr, FamilyKind, FamilySpec, NevanlinnaError, PoleEnumerator, SamplePlan,
    VerifyError, SCHEMA_VERSION,
};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "fermat", version, about = "Fermat-type functional equations: families, residuals, growth")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Periods, area and invariants of the equianharmonic lattice.
    LatticeInfo {
        /// Also check (℘′)² = 4℘³ − 1 at this many sampled non-pole points.
        #[arg(long, default_value_t = 0)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    #[command(subcommand)]
    Family(FamilyCommand),
    /// Sample the residual of the equation a family claims to solve.
    Verify {
        /// Family spec: a JSON file path or an inline JSON document.
        #[arg(long)]
        spec: String,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Shift identity of the cubic parametrization.
    Eq6 {
        /// Inner entire function h, as an expression.
        #[arg(long, default_value = "(exp z)")]
        h: String,
        #[arg(long, allow_hyphen_values = true)]
        c: String,
        #[arg(long, allow_hyphen_values = true, default_value = "1")]
        eta: String,
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        /// k in e^{αc/3}·e^{2πik/3}.
        #[arg(long, default_value_t = 0)]
        selector: u8,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Cubic rearrangement identity linking f, ℘(h) and e^{αz+β}.
    Eq7 {
        #[arg(long, default_value = "(exp z)")]
        h: String,
        /// Candidate f; defaults to the cubic form built from h.
        #[arg(long)]
        f: Option<String>,
        #[arg(long, allow_hyphen_values = true, default_value = "0")]
        alpha: String,
        #[arg(long, allow_hyphen_values = true, default_value = "0")]
        beta: String,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Growth curve r, m, N, T as CSV.
    Nevanlinna {
        #[command(flatten)]
        target: Target,
        /// Comma-separated increasing radii.
        #[arg(long, value_delimiter = ',', required = true)]
        radii: Vec<f64>,
        #[arg(long, default_value_t = nevanlinna::DEFAULT_QUAD_ORDER)]
        quad_order: usize,
    },
    /// Least-squares order of growth from a growth curve.
    Order {
        #[command(flatten)]
        target: Target,
        #[arg(long, value_delimiter = ',', conflicts_with_all = ["rmin", "rmax"])]
        radii: Option<Vec<f64>>,
        #[arg(long, requires = "rmax")]
        rmin: Option<f64>,
        #[arg(long, requires = "rmin")]
        rmax: Option<f64>,
        /// Number of evenly spaced radii between --rmin and --rmax.
        #[arg(long, default_value_t = 10)]
        points: usize,
        #[arg(long, default_value_t = nevanlinna::DEFAULT_QUAD_ORDER)]
        quad_order: usize,
    },
}

#[derive(Subcommand)]
enum FamilyCommand {
    /// Build a family and print its expressions.
    Gen {
        #[arg(long)]
        spec: String,
    },
    /// List the available family kinds.
    List,
}

#[derive(Args)]
struct Sampling {
    #[arg(long, default_value_t = 0.5)]
    rmin: f64,
    #[arg(long, default_value_t = 3.0)]
    rmax: f64,
    #[arg(long, default_value_t = 500)]
    count: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = fermat_core::expr::DEFAULT_POLE_GUARD)]
    pole_guard: f64,
}

impl Sampling {
    fn plan(&self) -> SamplePlan {
        SamplePlan {
            r_min: self.rmin,
            r_max: self.rmax,
            count: self.count,
            seed: self.seed,
            pole_guard: self.pole_guard,
            tolerance: self.tol,
        }
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Target {
    /// Expression, or one of the aliases `wp`, `exp`, `wp-exp`.
    #[arg(long = "fn")]
    function: Option<String>,
    /// Family spec (file path or inline JSON).
    #[arg(long)]
    spec: Option<String>,
}

/// An error with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    fn numeric(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }
}

impl From<FamilyError> for Failure {
    fn from(e: FamilyError) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<VerifyError> for Failure {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Precondition(_) => Failure::usage(e.to_string()),
            _ => Failure::numeric(e.to_string()),
        }
    }
}

impl From<NevanlinnaError> for Failure {
    fn from(e: NevanlinnaError) -> Self {
        match e {
            NevanlinnaError::PoleOnCircle { .. }
            | NevanlinnaError::NonConvergence { .. }
            | NevanlinnaError::DegenerateCurve => Failure::numeric(e.to_string()),
            _ => Failure::usage(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome { report, pass }) => {
            print!("{report}");
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

struct Outcome {
    report: String,
    pass: bool,
}

impl Outcome {
    fn json(v: Value, pass: bool) -> Self {
        let mut report = serde_json::to_string_pretty(&v).expect("report serializes");
        report.push('\n');
        Outcome { report, pass }
    }
}

fn run(command: Command) -> Result<Outcome, Failure> {
    match command {
        Command::LatticeInfo { samples, seed } => {
            let mut v = lattice_info();
            let mut pass = true;
            if samples > 0 {
                let check = identity_check(samples, seed)?;
                pass = check["pass"] == true;
                v["identity_check"] = check;
            }
            Ok(Outcome::json(v, pass))
        }
        Command::Family(FamilyCommand::List) => {
            let kinds: Vec<Value> = FamilyKind::ALL
                .iter()
                .map(|k| json!({ "kind": k.name(), "summary": k.summary() }))
                .collect();
            Ok(Outcome::json(json!({ "schema": SCHEMA_VERSION, "families": kinds }), true))
        }
        Command::Family(FamilyCommand::Gen { spec }) => {
            let spec = load_spec(&spec)?;
            let g = families::generate(&spec)?;
            let mut v = json!({
                "schema": SCHEMA_VERSION,
                "config": { "spec": spec },
                "kind": g.kind.name(),
                "f": g.f.to_string(),
                "mode": g.mode,
                "alpha": complex_json(g.alpha),
                "beta": complex_json(g.beta),
            });
            if let Some(second) = &g.g {
                v["g"] = json!(second.to_string());
            }
            Ok(Outcome::json(v, true))
        }
        Command::Verify { spec, sampling } => {
            let spec = load_spec(&spec)?;
            let plan = sampling.plan();
            let g = families::generate(&spec)?;
            let report = verify::verify_generated(&g, &plan)?;
            let mut v = report.to_json();
            v["config"] = json!({ "spec": spec, "f": g.f.to_string(), "plan": plan_json(&plan) });
            Ok(Outcome::json(v, report.pass))
        }
        Command::Eq6 { h, c, eta, alpha, selector, sampling } => {
            let h = parse_expr(&h)?;
            let (c, eta, alpha) = (parse_complex(&c)?, parse_complex(&eta)?, parse_complex(&alpha)?);
            let plan = sampling.plan();
            let report = check_eq6(&h, c, eta, alpha, selector, &plan)?;
            let mut v = report.to_json();
            v["config"] = json!({
                "h": h.to_string(),
                "c": complex_json(c),
                "eta": complex_json(eta),
                "alpha": complex_json(alpha),
                "selector": selector,
                "plan": plan_json(&plan),
            });
            Ok(Outcome::json(v, report.pass))
        }
        Command::Eq7 { h, f, alpha, beta, sampling } => {
            let h = parse_expr(&h)?;
            let (alpha, beta) = (parse_complex(&alpha)?, parse_complex(&beta)?);
            let f = match f {
                Some(text) => parse_expr(&text)?,
                None => eq5_pair(&h, alpha, beta, Complex64::new(1.0, 0.0)).0,
            };
            let plan = sampling.plan();
            let report = check_eq7(&f, &h, alpha, beta, &plan)?;
            let mut v = report.to_json();
            v["config"] = json!({
                "f": f.to_string(),
                "h": h.to_string(),
                "alpha": complex_json(alpha),
                "beta": complex_json(beta),
                "plan": plan_json(&plan),
            });
            Ok(Outcome::json(v, report.pass))
        }
        Command::Nevanlinna { target, radii, quad_order } => {
            let (name, f, pe) = resolve_target(&target, &radii)?;
            let curve = characteristic(&f, &pe, &radii, quad_order)?;
            let mut report = format!("# fn: {name}\n# f: {f}\n# quad_order: {quad_order}\n");
            report.push_str(&curve.to_csv());
            Ok(Outcome { report, pass: true })
        }
        Command::Order { target, radii, rmin, rmax, points, quad_order } => {
            let radii = match (radii, rmin, rmax) {
                (Some(r), _, _) => r,
                (None, Some(a), Some(b)) => linspace(a, b, points)?,
                _ => default_radii(&target)?,
            };
            let (name, f, pe) = resolve_target(&target, &radii)?;
            let curve = characteristic(&f, &pe, &radii, quad_order)?;
            let estimate = order_estimate(&curve)?;
            let mut v = estimate.to_json();
            v["config"] = json!({
                "fn": name,
                "f": f.to_string(),
                "radii": radii.iter().map(|r| real_json(*r)).collect::<Vec<_>>(),
                "quad_order": quad_order,
            });
            v["curve"] = curve_json(&curve);
            Ok(Outcome::json(v, true))
        }
    }
}

fn lattice_info() -> Value {
    let d = diagnostics();
    let l = d.lattice;
    json!({
        "schema": SCHEMA_VERSION,
        "g2": 0,
        "g3": 1,
        "omega1": complex_json(l.omega1),
        "omega2": complex_json(l.omega2),
        "area": real_json(l.area),
        "e1": real_json(l.e1),
        "half_period": real_json(l.half_period),
        "wp_zeros_in_cell": wp_zeros_in_cell().into_iter().map(complex_json).collect::<Vec<_>>(),
        "config": {
            "coefficient_table_len": d.coefficient_table_len,
            "halving_threshold": real_json(d.halving_threshold),
            "series_terms_at_threshold": d.series_terms_at_threshold,
        },
    })
}

/// Max of `|(℘′)² − 4℘³ + 1| / (1 + |℘|³)` over non-pole points of the annulus
/// `0.1 ≤ |z| ≤ 10`, passing below `1e−9`.
fn identity_check(samples: usize, seed: u64) -> Result<Value, Failure> {
    let plan = SamplePlan::annulus(0.1, 10.0).with_count(samples).with_seed(seed);
    let mut worst = 0.0f64;
    let mut used = 0;
    for z in plan.candidates(plan.max_attempts()) {
        if used == samples {
            break;
        }
        let Ok((p, dp)) = wp_pair_guarded(z, plan.pole_guard) else { continue };
        used += 1;
        worst = worst.max((dp * dp - 4.0 * p * p * p + 1.0).norm() / (1.0 + p.norm().powi(3)));
    }
    if used < samples {
        return Err(Failure::numeric("too many pole rejections"));
    }
    let tolerance = 1e-9;
    Ok(json!({
        "samples": used,
        "seed": seed,
        "rmin": 0.1,
        "rmax": 10.0,
        "max_rel": real_json(worst),
        "tolerance": tolerance,
        "pass": worst <= tolerance,
    }))
}

fn plan_json(p: &SamplePlan) -> Value {
    json!({
        "rmin": real_json(p.r_min),
        "rmax": real_json(p.r_max),
        "count": p.count,
        "seed": p.seed,
        "pole_guard": real_json(p.pole_guard),
        "tol": real_json(p.tolerance),
    })
}

fn curve_json(curve: &GrowthCurve) -> Value {
    json!(curve
        .records
        .iter()
        .map(|r| json!({ "r": real_json(r.r), "m": real_json(r.m), "N": real_json(r.n), "T": real_json(r.t) }))
        .collect::<Vec<_>>())
}

/// Reads a spec from a file, or parses it directly when it looks like JSON.
fn load_spec(arg: &str) -> Result<FamilySpec, Failure> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(Path::new(arg)).map_err(|e| Failure::usage(format!("cannot read spec {arg}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("invalid spec: {e}")))
}

fn parse_expr(text: &str) -> Result<Expr, Failure> {
    text.parse().map_err(|e| Failure::usage(format!("invalid expression {text:?}: {e}")))
}

/// `re`, `re,im`, or a constant expression such as `(* 2 pi i)`.
fn parse_complex(text: &str) -> Result<Complex64, Failure> {
    let bad = || Failure::usage(format!("invalid complex number {text:?}"));
    if let Some((re, im)) = text.split_once(',') {
        let re = re.trim().parse().map_err(|_| bad())?;
        let im = im.trim().parse().map_err(|_| bad())?;
        return Ok(Complex64::new(re, im));
    }
    if let Ok(x) = text.trim().parse::<f64>() {
        return Ok(Complex64::new(x, 0.0));
    }
    fermat_core::expr::parse_constant(text).map_err(|_| bad())
}

fn linspace(a: f64, b: f64, k: usize) -> Result<Vec<f64>, Failure> {
    if k < 2 || !(a > 0.0 && a < b) {
        return Err(Failure::usage("need 0 < rmin < rmax and at least 2 points"));
    }
    Ok((0..k).map(|j| a + (b - a) * j as f64 / (k - 1) as f64).collect())
}

fn alias(name: &str) -> Option<Expr> {
    match name {
        "wp" => Some(Expr::z().wp()),
        "exp" => Some(Expr::z().exp()),
        "wp-exp" => Some(Expr::z().exp().wp()),
        _ => None,
    }
}

/// Radii used by `order` for the aliases when none are given.
fn default_radii(target: &Target) -> Result<Vec<f64>, Failure> {
    let w = equianharmonic_lattice().omega1.norm();
    match target.function.as_deref() {
        Some("wp") => linspace(5.0 * w, 25.0 * w, 10),
        Some("exp") => linspace(5.0, 100.0, 12),
        Some("wp-exp") => linspace(2.0, 8.0, 8),
        _ => Err(Failure::usage("give --radii or --rmin/--rmax")),
    }
}

fn resolve_target(target: &Target, radii: &[f64]) -> Result<(String, Expr, PoleEnumerator), Failure> {
    let r_max = radii.iter().copied().fold(0.0f64, f64::max);
    if let Some(name) = &target.function {
        let f = match alias(name) {
            Some(f) => f,
            None => parse_expr(name)?,
        };
        let pe = pole_enumerator_for_expr(&f)?;
        return Ok((name.clone(), f, pe));
    }
    let spec_arg = target.spec.as_deref().expect("clap enforces one target");
    let spec = load_spec(spec_arg)?;
    let g = families::generate(&spec)?;
    // Slack for the outward radius nudges.
    let pe = pole_enumerator_for(&spec, r_max * 1.01)?;
    Ok((spec.kind.name().to_string(), g.f, pe))
}
