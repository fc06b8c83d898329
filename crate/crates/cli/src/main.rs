mod io;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use upblab::canonical::{invariant_scan, orthogonalize_upb, Orthogonalization, PENTAGON_PERMUTATIONS};
use upblab::gupb::{is_gupb, is_gupb_multipartite, is_minimal_gupb, vandermonde_gupb};
use upblab::harness::pentagram_sample;
use upblab::linalg::Tolerance;
use upblab::rng::{self, trial_rng};
use upblab::segre::products_in_kernel;
use upblab::signtables::{enumerate_with, AdmissibleTable, ConstraintSet, CONSTRAINTS_JSON, TABLE2_JSON};
use upblab::states::{analyze, classify, state_from_gupb, Classification, GupbState, PptState};
use upblab::Error;

use io::{read_state, read_vectors, StateFile, VectorFile};

#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Numerical(_) | Error::Singular => 3,
            _ => 2,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(name = "upblab", version, about = "Unextendible product bases and rank-4 PPT states on 3x3")]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Opts {
    /// input JSON file
    #[arg(long, global = true)]
    file: Option<PathBuf>,
    /// write the JSON result here
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 100)]
    trials: u64,
    #[arg(long, global = true, env = "UPBLAB_THREADS")]
    threads: Option<usize>,
    /// relative singular-value threshold for rank decisions
    #[arg(long, global = true)]
    tol_rank: Option<f64>,
    /// residual threshold for accepting solutions
    #[arg(long, global = true)]
    tol_residual: Option<f64>,
    /// print machine JSON instead of the summary
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// product-basis certification and canonical forms
    #[command(subcommand)]
    Gupb(GupbCmd),
    /// states built from or analysed through their kernels
    #[command(subcommand)]
    State(StateCmd),
    /// sign tables of the closed-form state
    #[command(subcommand)]
    Tables(TablesCmd),
    /// seeded end-to-end experiments
    #[command(subcommand)]
    Demo(DemoCmd),
}

#[derive(Subcommand)]
enum GupbCmd {
    /// certify a set of product vectors
    Check,
    /// minimal gUPB from moment vectors
    Vandermonde {
        #[arg(long, num_args = 2, value_names = ["N", "M"], default_values_t = [3, 3])]
        dims: Vec<usize>,
        /// first-factor nodes; random from the seed when omitted
        #[arg(long, num_args = 1.., allow_negative_numbers = true)]
        alphas: Option<Vec<f64>>,
        /// second-factor nodes; random from the seed when omitted
        #[arg(long, num_args = 1.., allow_negative_numbers = true)]
        betas: Option<Vec<f64>>,
    },
    /// invariants under the twelve representative orders
    Invariants,
    /// map five product vectors to an orthogonal pentagram UPB
    Orthogonalize,
}

#[derive(Subcommand)]
enum StateCmd {
    /// the PPT state whose kernel contains the five given products
    FromGupb,
    /// full analysis of a rank-4 state on 3x3
    Analyze,
    /// product vectors in the kernel
    KernelProducts,
}

#[derive(Subcommand)]
enum TablesCmd {
    /// count admissible sign configurations
    Enumerate,
    /// check the data files and the table bijection
    Verify {
        /// directory with constraints.json and table2.json; embedded copies when omitted
        #[arg(long)]
        data: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum DemoCmd {
    /// construct moved pentagram states and classify them
    Roundtrip {
        /// condition-number cap of the local maps
        #[arg(long, default_value_t = upblab::harness::MAX_CONDITION)]
        max_cond: f64,
        /// reconstruction residual each trial must meet
        #[arg(long, default_value_t = 1e-6)]
        max_residual: f64,
    },
}

/// Verdict of a command that ran to completion.
enum Status {
    Pass,
    Negative,
}

struct Output {
    status: Status,
    summary: String,
    json: String,
}

fn output<T: Serialize>(status: Status, summary: String, value: &T) -> Result<Output, CliError> {
    let json = serde_json::to_string_pretty(value).map_err(|e| CliError::input(format!("serialize: {e}")))?;
    Ok(Output { status, summary, json })
}

fn tolerance(opts: &Opts) -> Result<Tolerance, CliError> {
    let mut t = Tolerance::default();
    if let Some(r) = opts.tol_rank {
        t.rank_rel = r;
    }
    if let Some(r) = opts.tol_residual {
        t.residual = r;
    }
    Ok(t.validated()?)
}

fn input_file(opts: &Opts) -> Result<&Path, CliError> {
    opts.file.as_deref().ok_or_else(|| CliError::input("--file is required"))
}

fn threads(opts: &Opts) -> usize {
    opts.threads.filter(|t| *t > 0).unwrap_or_else(rayon::current_num_threads)
}

fn gupb_cmd(cmd: &GupbCmd, opts: &Opts, tol: &Tolerance) -> Result<Output, CliError> {
    match cmd {
        GupbCmd::Check => {
            let file = read_vectors(input_file(opts)?)?;
            let cert = if file.dims.len() > 2 {
                is_gupb_multipartite(&file.vectors, &file.dims, tol)?
            } else {
                let dims = file.bipartite_dims()?;
                if file.vectors.len() == dims.0 + dims.1 - 1 {
                    is_minimal_gupb(&file.vectors, dims, tol)?
                } else {
                    is_gupb(&file.vectors, dims, tol)?
                }
            };
            let summary = format!(
                "{:?} test on {} vectors: {} ({} partitions checked)",
                cert.kind,
                file.vectors.len(),
                if cert.verdict { "gUPB" } else { "not a gUPB, witness found" },
                cert.checked_partitions
            );
            output(if cert.verdict { Status::Pass } else { Status::Negative }, summary, &cert)
        }
        GupbCmd::Vandermonde { dims, alphas, betas } => {
            let (n, m) = (dims[0], dims[1]);
            if n < 2 || m < 2 {
                return Err(CliError::input("dims must be at least 2"));
            }
            let need = n + m - 1;
            let mut rng = trial_rng(opts.seed, 0);
            let mut nodes = |given: &Option<Vec<f64>>| {
                given
                    .clone()
                    .unwrap_or_else(|| (0..need).map(|_| rng.random_range(-3.0..3.0)).collect())
            };
            let a = nodes(alphas);
            let b = nodes(betas);
            let vectors = vandermonde_gupb(n, m, &a, &b)?;
            let file = VectorFile {
                dims: vec![n, m],
                vectors,
            };
            output(Status::Pass, format!("{} moment vectors in {n}x{m}", file.vectors.len()), &file)
        }
        GupbCmd::Invariants => {
            let file = read_vectors(input_file(opts)?)?;
            if file.bipartite_dims()? != (3, 3) {
                return Err(CliError::input("invariants need vectors in 3x3"));
            }
            let scan = invariant_scan(&file.vectors);
            #[derive(Serialize)]
            struct Row {
                permutation: usize,
                order: [usize; 5],
                invariants: Option<upblab::canonical::InvariantQuadruple>,
                all_positive: bool,
            }
            let rows: Vec<Row> = scan
                .iter()
                .zip(PENTAGON_PERMUTATIONS.iter())
                .enumerate()
                .map(|(k, (inv, order))| Row {
                    permutation: k + 1,
                    order: *order,
                    invariants: *inv,
                    all_positive: inv.is_some_and(|q| q.all_real_positive()),
                })
                .collect();
            let mut summary = String::new();
            for r in &rows {
                let vals = match &r.invariants {
                    Some(q) => q
                        .values()
                        .iter()
                        .map(|z| format!("{:.6}{:+.2e}i", z.re, z.im))
                        .collect::<Vec<_>>()
                        .join("  "),
                    None => "vanishing denominator".into(),
                };
                summary.push_str(&format!(
                    "sigma{:<2} {:?} {}{}\n",
                    r.permutation,
                    r.order,
                    vals,
                    if r.all_positive { "  positive" } else { "" }
                ));
            }
            output(Status::Pass, summary.trim_end().to_string(), &rows)
        }
        GupbCmd::Orthogonalize => {
            let file = read_vectors(input_file(opts)?)?;
            if file.bipartite_dims()? != (3, 3) {
                return Err(CliError::input("orthogonalization needs vectors in 3x3"));
            }
            let res = orthogonalize_upb(&file.vectors, tol)?;
            match &res {
                Orthogonalization::Orthogonalized { permutation, residual, .. } => output(
                    Status::Pass,
                    format!("orthogonalized via sigma{permutation}, residual {residual:.2e}"),
                    &res,
                ),
                Orthogonalization::NotOrthogonalizable { .. } => {
                    output(Status::Negative, "not orthogonalizable".into(), &res)
                }
            }
        }
    }
}

fn load_state(opts: &Opts, tol: &Tolerance) -> Result<PptState, CliError> {
    let file: StateFile = read_state(input_file(opts)?)?;
    Ok(PptState::new(file.matrix, file.dims, tol)?)
}

fn state_cmd(cmd: &StateCmd, opts: &Opts, tol: &Tolerance) -> Result<Output, CliError> {
    match cmd {
        StateCmd::FromGupb => {
            let file = read_vectors(input_file(opts)?)?;
            if file.bipartite_dims()? != (3, 3) {
                return Err(CliError::input("needs five vectors in 3x3"));
            }
            match state_from_gupb(&file.vectors, tol)? {
                GupbState::State { state, sign, kernel_residual, .. } => {
                    #[derive(Serialize)]
                    struct Out<'a> {
                        dims: (usize, usize),
                        #[serde(with = "upblab::json::matrix")]
                        matrix: &'a upblab::CMatrix,
                        sign: upblab::signtables::Sign,
                        rank: usize,
                        rank_t1: usize,
                        min_eig: f64,
                        min_eig_t1: f64,
                        kernel_residual: f64,
                    }
                    let summary = format!(
                        "sign {sign} state: rank {}, partial-transpose rank {}, min eigenvalue {:.2e}, kernel residual {kernel_residual:.2e}",
                        state.rank, state.rank_t1, state.min_eig
                    );
                    let out = Out {
                        dims: state.dims,
                        matrix: &state.rho,
                        sign,
                        rank: state.rank,
                        rank_t1: state.rank_t1,
                        min_eig: state.min_eig,
                        min_eig_t1: state.min_eig_t1,
                        kernel_residual,
                    };
                    output(Status::Pass, summary, &out)
                }
                res @ GupbState::NoPptState { relative_min_eigs, .. } => output(
                    Status::Negative,
                    format!(
                        "no PPT state: relative minimal eigenvalues {:.2e} (+), {:.2e} (-)",
                        relative_min_eigs[0], relative_min_eigs[1]
                    ),
                    &res,
                ),
            }
        }
        StateCmd::Analyze => {
            let state = load_state(opts, tol)?;
            let report = analyze(&state, tol)?;
            let summary = format!(
                "psd {}, ppt {}, ranks {}/{}, kernel products {}, gUPB {}, edge {}, classification {}",
                report.is_psd,
                report.is_ppt,
                report.rank,
                report.rank_t1,
                report.kernel_products.len(),
                report.gupb.verdict,
                report.is_edge,
                report.classification.name()
            );
            let status = match report.classification {
                Classification::Undetermined { .. } => Status::Negative,
                _ => Status::Pass,
            };
            output(status, summary, &report)
        }
        StateCmd::KernelProducts => {
            let state = load_state(opts, tol)?;
            if state.dims != (3, 3) || state.rank != 4 {
                return Err(CliError::input(format!(
                    "kernel search needs a rank-4 state on 3x3, got rank {} on {:?}",
                    state.rank, state.dims
                )));
            }
            let sol = products_in_kernel(&state.kernel, tol)?;
            let mut summary = format!("{} product vectors in the kernel", sol.len());
            for (p, r) in sol.points.iter().zip(&sol.residuals) {
                let fmt = |v: &upblab::CVector| {
                    v.iter()
                        .map(|z| format!("{:.4}{:+.4}i", z.re, z.im))
                        .collect::<Vec<_>>()
                        .join(", ")
                };
                summary.push_str(&format!("\n  ({}) x ({})  residual {r:.1e}", fmt(p.phi()), fmt(p.psi())));
            }
            output(Status::Pass, summary, &sol)
        }
    }
}

fn tables_cmd(cmd: &TablesCmd, opts: &Opts) -> Result<Output, CliError> {
    let workers = threads(opts);
    match cmd {
        TablesCmd::Enumerate => {
            let rep = enumerate_with(ConstraintSet::embedded(), AdmissibleTable::embedded(), workers)?;
            let summary = format!(
                "admissible: {} (+), {} (-); positive configurations: {} ({} +, {} -)",
                rep.count_plus,
                rep.count_minus,
                rep.positive_configs.len(),
                rep.count(upblab::signtables::Sign::Plus),
                rep.count(upblab::signtables::Sign::Minus)
            );
            output(Status::Pass, summary, &rep)
        }
        TablesCmd::Verify { data } => {
            let (constraints, table) = match data {
                Some(dir) => {
                    let read = |name: &str| {
                        let path = dir.join(name);
                        std::fs::read_to_string(&path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
                    };
                    (ConstraintSet::parse(&read("constraints.json")?)?, AdmissibleTable::parse(&read("table2.json")?)?)
                }
                None => (ConstraintSet::parse(CONSTRAINTS_JSON)?, AdmissibleTable::parse(TABLE2_JSON)?),
            };
            let rep = enumerate_with(&constraints, &table, workers)?;
            let mut matched: Vec<usize> = rep.positive_configs.iter().filter_map(|c| c.table2_row).collect();
            matched.sort();
            matched.dedup();
            let single = rep.positive_configs.iter().all(|c| c.table1_rows.len() == 1);
            let ok = matched.len() == table.rows.len() && rep.positive_configs.len() == table.rows.len() && single;
            #[derive(Serialize)]
            struct Verify {
                matched: usize,
                rows: usize,
                positive_configs: usize,
                single_permutation_row: bool,
            }
            let v = Verify {
                matched: matched.len(),
                rows: table.rows.len(),
                positive_configs: rep.positive_configs.len(),
                single_permutation_row: single,
            };
            let summary = format!(
                "checksums ok; {}/{} table rows matched by positive configurations; one positive permutation each: {single}",
                v.matched, v.rows
            );
            output(if ok { Status::Pass } else { Status::Negative }, summary, &v)
        }
    }
}

#[derive(Serialize)]
struct TrialResult {
    trial: u64,
    classification: String,
    residual: Option<f64>,
    pass: bool,
}

#[derive(Serialize)]
struct RoundTrip {
    rng: &'static str,
    seed: u64,
    trials: u64,
    max_cond: f64,
    max_residual: f64,
    passes: u64,
    failing_trials: Vec<u64>,
    results: Vec<TrialResult>,
}

fn demo_cmd(cmd: &DemoCmd, opts: &Opts, tol: &Tolerance) -> Result<Output, CliError> {
    let DemoCmd::Roundtrip { max_cond, max_residual } = cmd;
    if max_cond.is_nan() || *max_cond < 1.0 {
        return Err(CliError::input("--max-cond must be at least 1"));
    }
    let seed = opts.seed;
    let results: Vec<TrialResult> = (0..opts.trials)
        .into_par_iter()
        .map(|trial| {
            let outcome = pentagram_sample(seed, trial, *max_cond, tol).and_then(|s| classify(&s.state, tol));
            match outcome {
                Ok(c) => {
                    let residual = match &c {
                        Classification::EntangledUpbForm { residual, .. } => Some(*residual),
                        _ => None,
                    };
                    TrialResult {
                        trial,
                        classification: c.name().to_string(),
                        residual,
                        pass: residual.is_some_and(|r| r <= *max_residual),
                    }
                }
                Err(e) => TrialResult {
                    trial,
                    classification: format!("error: {e}"),
                    residual: None,
                    pass: false,
                },
            }
        })
        .collect();
    let failing: Vec<u64> = results.iter().filter(|r| !r.pass).map(|r| r.trial).collect();
    let rt = RoundTrip {
        rng: rng::ALGORITHM,
        seed,
        trials: opts.trials,
        max_cond: *max_cond,
        max_residual: *max_residual,
        passes: opts.trials - failing.len() as u64,
        failing_trials: failing.clone(),
        results,
    };
    let mut summary = format!(
        "round trip, seed {seed}, rng {}: {}/{} trials pass (cond ≤ {max_cond}, residual ≤ {max_residual:.0e})",
        rng::ALGORITHM,
        rt.passes,
        rt.trials
    );
    for r in &rt.results {
        let res = r.residual.map_or("-".to_string(), |x| format!("{x:.2e}"));
        summary.push_str(&format!("\n  trial {:>4}  {:<20} {res}", r.trial, r.classification));
    }
    if !failing.is_empty() {
        summary.push_str(&format!("\nfailing: seed {seed} trials {failing:?}"));
    }
    let status = if failing.is_empty() { Status::Pass } else { Status::Negative };
    output(status, summary, &rt)
}

fn run(cli: &Cli) -> Result<Output, CliError> {
    let opts = &cli.opts;
    let tol = tolerance(opts)?;
    if let Some(n) = opts.threads.filter(|t| *t > 0) {
        // ignore failure when a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::Gupb(c) => gupb_cmd(c, opts, &tol),
        Command::State(c) => state_cmd(c, opts, &tol),
        Command::Tables(c) => tables_cmd(c, opts),
        Command::Demo(c) => demo_cmd(c, opts, &tol),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(out) => {
            if let Some(path) = &cli.opts.out {
                if let Err(e) = std::fs::write(path, format!("{}\n", out.json)) {
                    eprintln!("error: {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            let text = if cli.opts.json { &out.json } else { &out.summary };
            // a closed pipe on stdout is not an error of the command
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            match out.status {
                Status::Pass => ExitCode::SUCCESS,
                Status::Negative => ExitCode::from(1),
            }
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
