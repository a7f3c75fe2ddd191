//! Command-line front end: reads distributions from JSON, runs one library
//! operation and prints JSON or CSV.
//!
//! Exit codes: 0 on success, 2 on input errors, 1 on internal errors or a
//! failed suite.

mod output;
mod suite;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde_json::{json, Value};

use phiribbon::oracle::brute_maximal_correlation;
use phiribbon::ribbon_mc::{grid_sweep, mc_membership_gram, sprime_membership_gram, tilde_membership_gram};
use phiribbon::{
    brute_min_objective, eta_phi, gaussian_mc_membership, gram_matrix, i_phi_channel_test,
    maximal_correlation_full, normalized_phi_ribbon_membership, phi_ribbon_membership,
    ribbon_boundary_trace, Channel, ClassF, DistFile, GridSpec, JointDist, LambdaPoint,
    MembershipResult, PhiSpec, SearchOpts,
};

use output::{num, nums, write_json, Table};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Internal(String),
}

impl From<phiribbon::Error> for CliError {
    fn from(e: phiribbon::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "phiribbon", version, about = "Phi-entropic correlation measures for discrete distributions")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for every randomized search.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output format; traces and suites default to csv, everything else to json.
    #[arg(long, global = true)]
    format: Option<Format>,
    /// Write output to this file instead of standard out.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Maximal correlation of a bipartite distribution.
    Rho(DistArg),
    /// Multi-start estimate of the SDPI constant η_Φ (or η_{Φ,Ψ}).
    Eta(EtaArgs),
    /// Gram matrix of the per-coordinate orthonormal bases and its spectrum.
    Gram(DistArg),
    /// Exact MC-ribbon queries.
    #[command(subcommand)]
    Ribbon(RibbonCmd),
    /// Φ-ribbon queries by certified-violation search.
    #[command(subcommand, name = "phi-ribbon")]
    PhiRibbon(PhiRibbonCmd),
    /// MC-ribbon test for a correlation matrix.
    #[command(subcommand)]
    Gaussian(GaussianCmd),
    /// Exhaustive grid evaluators for tiny instances.
    #[command(subcommand)]
    Oracle(OracleCmd),
    /// Runs a named reproduction bundle and prints a pass/fail table.
    Suite {
        #[arg(value_enum)]
        name: suite::SuiteName,
    },
}

#[derive(Args)]
struct DistArg {
    /// Distribution file: {"alphabet_sizes":[..],"probs":[..]}.
    #[arg(long)]
    dist: PathBuf,
}

#[derive(Args)]
struct SearchArgs {
    /// Number of restarts (defaults depend on the command).
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
}

impl SearchArgs {
    fn opts(&self, base: SearchOpts, seed: u64) -> SearchOpts {
        let mut o = base.with_seed(seed);
        if let Some(r) = self.restarts {
            o.restarts = r;
        }
        if let Some(m) = self.max_iters {
            o.max_iters = m;
        }
        o
    }
}

#[derive(Args)]
struct EtaArgs {
    #[arg(long)]
    dist: PathBuf,
    #[arg(long)]
    phi: String,
    #[arg(long)]
    psi: Option<String>,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Mc,
    Tilde,
    Sprime,
}

#[derive(Subcommand)]
enum RibbonCmd {
    /// Membership of one λ.
    Check {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long)]
        lambda: String,
        #[arg(long, value_enum, default_value = "mc")]
        kind: Kind,
    },
    /// Membership over an N^k grid on [0,1]^k.
    Trace {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long)]
        grid: usize,
        #[arg(long, value_enum, default_value = "mc")]
        kind: Kind,
    },
}

#[derive(Subcommand)]
enum PhiRibbonCmd {
    Check {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long)]
        phi: String,
        #[arg(long)]
        lambda: String,
        /// Restrict to f ≥ 0 with E[f] = 1.
        #[arg(long)]
        normalized: bool,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Boundary along rays through the simplex (k = 2 or 3).
    Trace {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long)]
        phi: String,
        #[arg(long, default_value_t = 64)]
        directions: usize,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// I_Φ gap for an auxiliary channel from the whole tuple.
    ChannelTest {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long)]
        phi: String,
        /// Channel file: {"matrix":[[..],..]} with one row per joint atom.
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        lambda: String,
    },
}

#[derive(Subcommand)]
enum GaussianCmd {
    Check {
        /// Correlation matrix file: [[..],..].
        #[arg(long = "R", alias = "r")]
        r: PathBuf,
        #[arg(long)]
        lambda: String,
    },
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Grid minimum of the Φ-ribbon gap.
    MinGap {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long)]
        phi: String,
        #[arg(long)]
        lambda: String,
        #[arg(long, default_value_t = 21)]
        resolution: usize,
    },
    /// Grid lower bound on the maximal correlation.
    Rho {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long, default_value_t = 21)]
        resolution: usize,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn load_dist(path: &Path) -> Result<JointDist, CliError> {
    let file: DistFile = serde_json::from_str(&read(path)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    JointDist::from_file(file).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn parse_phi(s: &str) -> Result<PhiSpec, CliError> {
    s.parse::<PhiSpec>().map_err(|e| CliError::Input(format!("--phi: {e}")))
}

fn parse_lambda(s: &str) -> Result<LambdaPoint, CliError> {
    let values = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| CliError::Input(format!("--lambda: cannot parse '{v}'"))))
        .collect::<Result<Vec<_>, _>>()?;
    LambdaPoint::new(values).map_err(|e| CliError::Input(format!("--lambda: {e}")))
}

fn class_name(c: ClassF) -> &'static str {
    match c {
        ClassF::Verified => "verified",
        ClassF::Refuted => "refuted",
        ClassF::Unchecked => "unchecked",
    }
}

fn membership_json(r: &MembershipResult) -> Value {
    let witness = r.witness.as_ref().map(|w| {
        json!({
            "coefficients": nums(&w.coefficients),
            "functions": w.functions.iter().map(|f| nums(&f.values)).collect::<Vec<_>>(),
            "gap": num(w.gap),
        })
    });
    json!({
        "verdict": if r.is_member() { "member" } else { "non_member" },
        "min_eigenvalue": num(r.min_eigenvalue),
        "witness": witness,
    })
}

struct Ctx {
    seed: u64,
    format: Option<Format>,
    out: Option<PathBuf>,
}

impl Ctx {
    fn emit_json(&self, v: Value) -> Result<(), CliError> {
        if self.format == Some(Format::Csv) {
            return Err(CliError::Input("this command only produces json".into()));
        }
        write_json(self.out.as_deref(), v)
    }

    /// Tables default to CSV.
    fn emit_table(&self, t: &Table) -> Result<(), CliError> {
        match self.format {
            Some(Format::Json) => write_json(self.out.as_deref(), t.to_json()),
            _ => t.write_csv(self.out.as_deref()),
        }
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let ctx = Ctx {
        seed: cli.seed,
        format: cli.format,
        out: cli.out,
    };
    match cli.command {
        Command::Rho(a) => {
            let d = load_dist(&a.dist)?;
            let r = maximal_correlation_full(&d)?;
            ctx.emit_json(json!({ "rho": num(r.rho) }))?;
        }
        Command::Eta(a) => {
            let d = load_dist(&a.dist)?;
            let phi = parse_phi(&a.phi)?;
            let psi = a.psi.as_deref().map(parse_phi).transpose()?;
            let opts = a.search.opts(SearchOpts::for_eta(), ctx.seed);
            let e = eta_phi(&d, &phi, psi.as_ref(), &opts)?;
            ctx.emit_json(json!({
                "value": num(e.value),
                "lower_bound_rho2": num(e.lower_bound_rho2),
                "witness": nums(&e.witness.values),
                "converged": e.converged,
                "restarts_used": e.restarts_used,
            }))?;
        }
        Command::Gram(a) => {
            let d = load_dist(&a.dist)?;
            let g = gram_matrix(&d);
            let rows: Vec<Value> = (0..g.dim())
                .map(|i| nums(&(0..g.dim()).map(|j| g.m[(i, j)]).collect::<Vec<_>>()))
                .collect();
            ctx.emit_json(json!({
                "block_dims": g.block_dims,
                "matrix": rows,
                "eigenvalues": nums(&g.eigenvalues()),
            }))?;
        }
        Command::Ribbon(RibbonCmd::Check { dist, lambda, kind }) => {
            let d = load_dist(&dist)?;
            let l = parse_lambda(&lambda)?;
            l.require_k(d.k())?;
            let g = gram_matrix(&d);
            let r = match kind {
                Kind::Mc => mc_membership_gram(&d, &g, &l),
                Kind::Sprime => sprime_membership_gram(&d, &g, &l),
                Kind::Tilde => tilde_membership_gram(&d, &g, &l),
            };
            ctx.emit_json(membership_json(&r))?;
        }
        Command::Ribbon(RibbonCmd::Trace { dist, grid, kind }) => {
            let d = load_dist(&dist)?;
            let g = gram_matrix(&d);
            let sweep = grid_sweep(d.k(), grid, |l| {
                let l = LambdaPoint { values: l.to_vec() };
                match kind {
                    Kind::Mc => mc_membership_gram(&d, &g, &l),
                    Kind::Sprime => sprime_membership_gram(&d, &g, &l),
                    Kind::Tilde => tilde_membership_gram(&d, &g, &l),
                }
                .is_member()
            })?;
            let mut header: Vec<String> = (1..=d.k()).map(|i| format!("lambda_{i}")).collect();
            header.push("member".into());
            let mut t = Table::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
            for (l, m) in sweep {
                let mut row: Vec<Value> = l.iter().map(|&x| num(x)).collect();
                row.push(json!(m as u8));
                t.push(row);
            }
            ctx.emit_table(&t)?;
        }
        Command::PhiRibbon(PhiRibbonCmd::Check {
            dist,
            phi,
            lambda,
            normalized,
            search,
        }) => {
            let d = load_dist(&dist)?;
            let phi = parse_phi(&phi)?;
            let l = parse_lambda(&lambda)?;
            let opts = search.opts(SearchOpts::default(), ctx.seed);
            let v = if normalized {
                normalized_phi_ribbon_membership(&d, &phi, &l, &opts)?
            } else {
                phi_ribbon_membership(&d, &phi, &l, &opts)?
            };
            ctx.emit_json(json!({
                "status": if v.is_violated() { "violated" } else { "holds_up_to_search" },
                "gap": num(v.gap),
                "witness": v.witness.as_ref().map(|f| nums(&f.values)),
                "phi_class_f": class_name(v.phi_class_f),
                "restarts_used": v.restarts_used,
            }))?;
        }
        Command::PhiRibbon(PhiRibbonCmd::Trace {
            dist,
            phi,
            directions,
            search,
        }) => {
            let d = load_dist(&dist)?;
            let phi = parse_phi(&phi)?;
            let opts = search.opts(SearchOpts::default(), ctx.seed);
            let pts = ribbon_boundary_trace(&d, &phi, directions, &opts)?;
            let mut header = vec!["direction_index".to_string()];
            header.extend((1..=d.k()).map(|i| format!("lambda_{i}")));
            header.push("verdict".into());
            let mut t = Table::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
            for p in &pts {
                let mut row = vec![json!(p.direction_index)];
                row.extend(p.inner.iter().map(|&x| num(x)));
                row.push(json!("member"));
                t.push(row);
                if let Some(o) = &p.outer {
                    let mut row = vec![json!(p.direction_index)];
                    row.extend(o.iter().map(|&x| num(x)));
                    row.push(json!("non_member"));
                    t.push(row);
                }
            }
            ctx.emit_table(&t)?;
        }
        Command::PhiRibbon(PhiRibbonCmd::ChannelTest {
            dist,
            phi,
            channel,
            lambda,
        }) => {
            let d = load_dist(&dist)?;
            let phi = parse_phi(&phi)?;
            let l = parse_lambda(&lambda)?;
            let ch: Channel = serde_json::from_str(&read(&channel)?)
                .map_err(|e| CliError::Input(format!("{}: {e}", channel.display())))?;
            let gap = i_phi_channel_test(&d, &phi, &l, &ch)?;
            ctx.emit_json(json!({ "gap": num(gap), "violated": gap < 0.0 }))?;
        }
        Command::Gaussian(GaussianCmd::Check { r, lambda }) => {
            let rows: Vec<Vec<f64>> = serde_json::from_str(&read(&r)?)
                .map_err(|e| CliError::Input(format!("{}: {e}", r.display())))?;
            let k = rows.len();
            if rows.iter().any(|row| row.len() != k) {
                return Err(CliError::Input(format!("{}: matrix is not square", r.display())));
            }
            let m = DMatrix::from_fn(k, k, |i, j| rows[i][j]);
            let l = parse_lambda(&lambda)?;
            let res = gaussian_mc_membership(&m, &l)?;
            ctx.emit_json(json!({
                "verdict": if res.is_member() { "member" } else { "non_member" },
                "min_eigenvalue": num(res.min_eigenvalue),
            }))?;
        }
        Command::Oracle(OracleCmd::MinGap {
            dist,
            phi,
            lambda,
            resolution,
        }) => {
            let d = load_dist(&dist)?;
            let phi = parse_phi(&phi)?;
            let l = parse_lambda(&lambda)?;
            let (gap, f) = brute_min_objective(&d, &phi, &l, &GridSpec::new(resolution))?;
            ctx.emit_json(json!({ "gap": num(gap), "argmin": nums(&f.values), "resolution": resolution }))?;
        }
        Command::Oracle(OracleCmd::Rho { dist, resolution }) => {
            let d = load_dist(&dist)?;
            let r = brute_maximal_correlation(&d, &GridSpec::new(resolution))?;
            ctx.emit_json(json!({ "rho_lower_bound": num(r), "resolution": resolution }))?;
        }
        Command::Suite { name } => {
            let rows = suite::run(name, ctx.seed)?;
            let passed = rows.iter().all(|r| r.pass);
            let mut t = Table::new(&["case", "measured", "expected", "tolerance", "pass"]);
            for r in rows {
                t.push(vec![json!(r.case), num(r.measured), num(r.expected), num(r.tolerance), json!(r.pass)]);
            }
            ctx.emit_table(&t)?;
            return Ok(passed);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        #[cfg(feature = "parallel")]
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size the thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(1)
        }
    }
}
