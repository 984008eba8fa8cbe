//! Command-line front end.

use super::case::{load_case, CaseError, CaseFile};
use super::fixtures::{fixture, NAMES};
use super::output::{
    fmt_num, summary_json, with_file, write_convergence, write_pairs, write_prices, write_schedules,
};
use super::synthetic::synthetic_case;
use crate::analytics::{run_subgradient, sweep_dual, uplift_report, StepRule, SubgradientConfig};
use crate::cg::{run_cg, ChResult, CgConfig, InitMode};
use crate::milp::{MilpOptions, MilpStatus};
use crate::model::{PriceVector, Sense, UcInstance};
use crate::ucbuild::{solve_full_uc, solve_integer_relaxation, PricingMethod, UcSolution};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CONVERGED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "chprice", version, about = "Convex hull prices for unit commitment by column generation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and validate a case.
    Validate(CaseArgs),
    /// Solve the unit-commitment MILP by branch and bound.
    SolveUc {
        #[command(flatten)]
        case: CaseArgs,
        /// Relative optimality gap.
        #[arg(long, default_value_t = 1e-9)]
        gap: f64,
        #[arg(long, default_value_t = 200_000)]
        node_limit: usize,
    },
    /// Convex hull prices by column generation.
    PriceCh {
        #[command(flatten)]
        case: CaseArgs,
        #[command(flatten)]
        cg: CgArgs,
    },
    /// Prices of the integer relaxation.
    PriceIr(CaseArgs),
    /// Sub-gradient ascent on the Lagrangian dual.
    PriceSubgradient {
        #[command(flatten)]
        case: CaseArgs,
        /// `c/k`, `c/sqrt(k)` or a constant.
        #[arg(long, default_value = "10/k")]
        step: String,
        #[arg(long, default_value_t = 10_000)]
        iterations: usize,
        /// Starting prices, comma separated, constraint by constraint.
        #[arg(long)]
        start: Option<String>,
        #[arg(long)]
        parallel: bool,
    },
    /// Settle the market dispatch at convex hull prices.
    Report {
        #[command(flatten)]
        case: CaseArgs,
        #[command(flatten)]
        cg: CgArgs,
    },
    /// Evaluate the dual function along one price coordinate.
    SweepDual {
        #[command(flatten)]
        case: CaseArgs,
        #[command(flatten)]
        cg: CgArgs,
        /// Constraint id; the first power balance by default.
        #[arg(long)]
        constraint: Option<String>,
        /// Hour, counted from 1.
        #[arg(long, default_value_t = 1)]
        hour: usize,
        #[arg(long, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, allow_hyphen_values = true)]
        to: f64,
        #[arg(long, default_value_t = 111)]
        points: usize,
        /// Base prices, comma separated, constraint by constraint. Convex
        /// hull prices when absent.
        #[arg(long)]
        at: Option<String>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct CaseArgs {
    /// Case file, built-in example name or `synthetic:<units>x<hours>`.
    #[arg(long)]
    pub case: String,
    /// Directory for result files.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Seed for synthetic cases.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Flat,
    Warm,
    Trivial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PricingArg {
    Runs,
    Milp,
}

#[derive(Debug, Clone, Args)]
pub struct CgArgs {
    #[arg(long, value_enum, default_value = "trivial")]
    pub init: InitArg,
    /// Relative gap for MILP subproblems in intermediate iterations.
    #[arg(long, default_value_t = 1e-9)]
    pub gap: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    #[arg(long)]
    pub parallel: bool,
    /// Reduced-cost tolerance.
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    #[arg(long, value_enum, default_value = "runs")]
    pub pricing: PricingArg,
}

impl CgArgs {
    fn config(&self) -> CgConfig {
        CgConfig {
            init_mode: match self.init {
                InitArg::Flat => InitMode::Flat,
                InitArg::Warm => InitMode::Warm,
                InitArg::Trivial => InitMode::Trivial,
            },
            reduced_cost_tolerance: self.tolerance,
            max_iterations: self.max_iters,
            subproblem_gap: self.gap,
            parallel_subproblems: self.parallel,
            pricing: match self.pricing {
                PricingArg::Runs => PricingMethod::Runs,
                PricingArg::Milp => PricingMethod::Milp,
            },
            ..CgConfig::default()
        }
    }
}

/// Failure with its exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn input(msg: impl ToString) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: msg.to_string(),
    }
}

fn solver(msg: impl ToString) -> Failure {
    Failure {
        code: EXIT_NOT_CONVERGED,
        message: msg.to_string(),
    }
}

struct Loaded {
    case: CaseFile,
    /// Feasible dispatch shipped with a synthetic case.
    reference: Option<UcSolution>,
}

fn load(args: &CaseArgs) -> Result<Loaded, Failure> {
    let spec = args.case.as_str();
    if let Some(shape) = spec.strip_prefix("synthetic:") {
        let (n, t) = shape
            .split_once('x')
            .and_then(|(n, t)| Some((n.parse::<usize>().ok()?, t.parse::<usize>().ok()?)))
            .filter(|&(n, t)| n > 0 && t > 0)
            .ok_or_else(|| input(format!("bad synthetic shape `{shape}`, expected <units>x<hours>")))?;
        let s = synthetic_case(n, t, args.seed);
        return Ok(Loaded {
            case: CaseFile::new(spec, s.instance),
            reference: Some(s.reference),
        });
    }
    let path = Path::new(spec);
    let case = if path.exists() {
        load_case(path)
    } else if NAMES.contains(&spec) {
        fixture(spec)
    } else {
        Err(CaseError::Unknown(spec.to_string()))
    }
    .map_err(input)?;
    Ok(Loaded { case, reference: None })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum MarketSource {
    Dispatch,
    UcOptimum,
    Reference,
}

/// The schedules settled by the market: the case's dispatch, a synthetic
/// reference, or the unit-commitment optimum.
fn market(loaded: &Loaded) -> Result<(UcSolution, MarketSource), Failure> {
    let inst = &loaded.case.instance;
    if let Some(s) = loaded.case.dispatch_schedules().map_err(input)? {
        return Ok((UcSolution::from_schedules(inst, s).map_err(input)?, MarketSource::Dispatch));
    }
    if let Some(r) = &loaded.reference {
        return Ok((r.clone(), MarketSource::Reference));
    }
    let uc = solve_full_uc(inst, &MilpOptions::default()).map_err(solver)?;
    Ok((uc, MarketSource::UcOptimum))
}

fn parse_prices(instance: &UcInstance, text: &str) -> Result<PriceVector, Failure> {
    let vals: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| input(format!("bad price `{s}`"))))
        .collect::<Result<_, _>>()?;
    let t = instance.horizon;
    let c = instance.constraints.len();
    if vals.len() != c * t {
        return Err(input(format!(
            "expected {} prices ({c} constraints x {t} hours), got {}",
            c * t,
            vals.len()
        )));
    }
    let mut p = PriceVector::zeros(instance);
    for (k, row) in p.values.iter_mut().enumerate() {
        row.copy_from_slice(&vals[k * t..(k + 1) * t]);
    }
    Ok(p)
}

struct Output<'a> {
    dir: Option<&'a Path>,
}

impl Output<'_> {
    fn file<F>(&self, name: &str, f: F) -> Result<(), Failure>
    where
        F: FnOnce(&mut std::fs::File) -> std::io::Result<()>,
    {
        match self.dir {
            Some(d) => with_file(&d.join(name), f).map_err(|e| input(format!("{}: {e}", d.join(name).display()))),
            None => Ok(()),
        }
    }

    /// Print the summary and store it as `summary.json`.
    fn summary<T: Serialize>(&self, value: &T) -> Result<(), Failure> {
        let text = summary_json(value).map_err(solver)?;
        print!("{text}");
        self.file("summary.json", |f| std::io::Write::write_all(f, text.as_bytes()))
    }
}

#[derive(Serialize)]
struct ValidateSummary<'a> {
    case: &'a str,
    units: usize,
    hours: usize,
    constraints: usize,
    valid: bool,
}

#[derive(Serialize)]
struct UcSummary {
    status: String,
    objective: f64,
    bound: f64,
    gap: f64,
}

#[derive(Serialize)]
struct ChSummary<'a> {
    case: &'a str,
    init: String,
    converged: bool,
    iterations: usize,
    rmp_objective: f64,
    market: MarketSource,
    market_cost: f64,
    duality_gap: f64,
    prices: &'a PriceVector,
    columns: usize,
}

#[derive(Serialize)]
struct IrSummary<'a> {
    case: &'a str,
    objective: f64,
    prices: &'a PriceVector,
}

#[derive(Serialize)]
struct SubgradientSummary<'a> {
    case: &'a str,
    step: String,
    iterations: usize,
    best_value: f64,
    best_prices: &'a PriceVector,
    final_prices: &'a PriceVector,
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    case: &'a str,
    constraint: &'a str,
    hour: usize,
    points: usize,
    argmax: f64,
    max: f64,
    concave: bool,
}

fn price_ch(loaded: &Loaded, cg: &CgArgs, market: &UcSolution) -> Result<ChResult, Failure> {
    let config = cg.config();
    run_cg(&loaded.case.instance, &config, Some(market)).map_err(|e| match e {
        crate::cg::CgError::Config(_) | crate::cg::CgError::EmptyPool { .. } => input(e),
        other => solver(other),
    })
}

fn init_name(a: InitArg) -> String {
    format!("{a:?}").to_lowercase()
}

/// Concave within `tol` on a uniform grid: the finite values form one run
/// and their second differences are never positive.
pub fn is_concave(values: &[f64], tol: f64) -> bool {
    let finite: Vec<usize> = (0..values.len()).filter(|&k| values[k].is_finite()).collect();
    if finite.windows(2).any(|w| w[1] != w[0] + 1) {
        return false;
    }
    values
        .windows(3)
        .all(|w| !w.iter().all(|v| v.is_finite()) || w[0] + w[2] - 2.0 * w[1] <= tol * (1.0 + w[1].abs()))
}

pub fn execute(cli: Cli) -> Result<i32, Failure> {
    match cli.command {
        Command::Validate(args) => {
            let loaded = load(&args)?;
            let inst = &loaded.case.instance;
            if loaded.case.dispatch_schedules().map_err(input)?.is_some() {
                eprintln!("dispatch table checked");
            }
            Output { dir: args.out_dir.as_deref() }.summary(&ValidateSummary {
                case: &loaded.case.name,
                units: inst.units.len(),
                hours: inst.horizon,
                constraints: inst.constraints.len(),
                valid: true,
            })?;
            Ok(EXIT_OK)
        }
        Command::SolveUc { case, gap, node_limit } => {
            let loaded = load(&case)?;
            let inst = &loaded.case.instance;
            let opts = MilpOptions {
                gap_target: gap,
                node_limit,
                ..MilpOptions::default()
            };
            let uc = solve_full_uc(inst, &opts).map_err(solver)?;
            let out = Output { dir: case.out_dir.as_deref() };
            out.file("schedules.csv", |f| write_schedules(f, inst, &uc.schedules))?;
            out.summary(&UcSummary {
                status: format!("{:?}", uc.status).to_lowercase(),
                objective: uc.objective,
                bound: uc.bound,
                gap: if uc.objective == 0.0 { 0.0 } else { (uc.objective - uc.bound) / uc.objective.abs().max(1.0) },
            })?;
            Ok(if uc.status == MilpStatus::Optimal { EXIT_OK } else { EXIT_NOT_CONVERGED })
        }
        Command::PriceCh { case, cg } => {
            let loaded = load(&case)?;
            let (m, source) = market(&loaded)?;
            let ch = price_ch(&loaded, &cg, &m)?;
            let out = Output { dir: case.out_dir.as_deref() };
            out.file("prices.csv", |f| write_prices(f, &ch.prices))?;
            out.file("convergence.csv", |f| write_convergence(f, &ch.logs))?;
            out.summary(&ChSummary {
                case: &loaded.case.name,
                init: init_name(cg.init),
                converged: ch.converged,
                iterations: ch.iterations(),
                rmp_objective: ch.rmp_objective,
                market: source,
                market_cost: m.evaluated_cost(&loaded.case.instance),
                duality_gap: ch.duality_gap.unwrap_or(f64::NAN),
                prices: &ch.prices,
                columns: ch.pool.len(),
            })?;
            if !ch.converged {
                eprintln!("column generation stopped after {} iterations without converging", ch.iterations());
                return Ok(EXIT_NOT_CONVERGED);
            }
            Ok(EXIT_OK)
        }
        Command::PriceIr(case) => {
            let loaded = load(&case)?;
            let (sol, prices) = solve_integer_relaxation(&loaded.case.instance).map_err(solver)?;
            let out = Output { dir: case.out_dir.as_deref() };
            out.file("prices.csv", |f| write_prices(f, &prices))?;
            out.summary(&IrSummary {
                case: &loaded.case.name,
                objective: sol.objective,
                prices: &prices,
            })?;
            Ok(EXIT_OK)
        }
        Command::PriceSubgradient {
            case,
            step,
            iterations,
            start,
            parallel,
        } => {
            let loaded = load(&case)?;
            let inst = &loaded.case.instance;
            let rule: StepRule = step.parse().map_err(input)?;
            let initial = start.as_deref().map(|s| parse_prices(inst, s)).transpose()?;
            let config = SubgradientConfig {
                step: rule,
                iterations,
                initial,
                parallel,
            };
            let r = run_subgradient(inst, &config).map_err(input)?;
            let out = Output { dir: case.out_dir.as_deref() };
            out.file("subgradient.csv", |f| {
                let rows: Vec<(f64, f64)> = r.values.iter().enumerate().map(|(k, &v)| ((k + 1) as f64, v)).collect();
                write_pairs(f, ["iteration", "dual_value"], &rows)
            })?;
            out.file("prices.csv", |f| write_prices(f, &r.best_prices))?;
            out.summary(&SubgradientSummary {
                case: &loaded.case.name,
                step: rule.to_string(),
                iterations,
                best_value: r.best_value,
                best_prices: &r.best_prices,
                final_prices: &r.final_prices,
            })?;
            Ok(EXIT_OK)
        }
        Command::Report { case, cg } => {
            let loaded = load(&case)?;
            let inst = &loaded.case.instance;
            let (m, _) = market(&loaded)?;
            let ch = price_ch(&loaded, &cg, &m)?;
            let report = uplift_report(inst, &m, &ch).map_err(solver)?;
            let out = Output { dir: case.out_dir.as_deref() };
            out.file("loc.csv", |f| {
                let mut w = csv::Writer::from_writer(f);
                w.write_record(["unit", "market_profit", "self_profit", "loc"])?;
                for u in &report.units {
                    w.write_record([u.unit.clone(), fmt_num(u.market_profit), fmt_num(u.self_profit), fmt_num(u.loc)])?;
                }
                w.flush()
            })?;
            out.summary(&report)?;
            Ok(if ch.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
        }
        Command::SweepDual {
            case,
            cg,
            constraint,
            hour,
            from,
            to,
            points,
            at,
        } => {
            let loaded = load(&case)?;
            let inst = &loaded.case.instance;
            let c = match constraint.as_deref() {
                Some(id) => inst
                    .constraints
                    .iter()
                    .position(|k| k.id == id)
                    .ok_or_else(|| input(format!("unknown constraint `{id}`")))?,
                None => *inst
                    .balance_constraints()
                    .first()
                    .ok_or_else(|| input("case has no power balance constraint"))?,
            };
            if hour == 0 || hour > inst.horizon {
                return Err(input(format!("hour must be in 1..={}", inst.horizon)));
            }
            if points < 2 || !(to > from) {
                return Err(input("need --to > --from and at least two points"));
            }
            let base = match at.as_deref() {
                Some(s) => parse_prices(inst, s)?,
                None => {
                    let (m, _) = market(&loaded)?;
                    price_ch(&loaded, &cg, &m)?.prices
                }
            };
            let grid: Vec<f64> = (0..points)
                .map(|k| from + (to - from) * k as f64 / (points - 1) as f64)
                .collect();
            let sign_ok = |x: f64| match inst.constraints[c].sense {
                Sense::GreaterEqual => x >= 0.0,
                Sense::LessEqual => x <= 0.0,
                Sense::Equality => true,
            };
            if !grid.iter().all(|&x| sign_ok(x)) {
                return Err(input("grid crosses the sign restriction of the constraint"));
            }
            let curve = sweep_dual(inst, &base, c, hour - 1, &grid).map_err(input)?;
            let (argmax, max) = curve
                .iter()
                .copied()
                .fold((f64::NAN, f64::NEG_INFINITY), |best, (x, q)| if q > best.1 { (x, q) } else { best });
            let values: Vec<f64> = curve.iter().map(|p| p.1).collect();
            let out = Output { dir: case.out_dir.as_deref() };
            out.file("sweep.csv", |f| write_pairs(f, ["price", "dual_value"], &curve))?;
            out.summary(&SweepSummary {
                case: &loaded.case.name,
                constraint: &inst.constraints[c].id,
                hour,
                points,
                argmax,
                max,
                concave: is_concave(&values, 1e-9),
            })?;
            Ok(EXIT_OK)
        }
    }
}

/// Parse `args` and run; returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
