mod config;

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use sigmak::continuation::{SolveReport, SWEEP_COLUMNS};
use sigmak::geomgrid::dump;
use sigmak::oracle::check_identities;
use sigmak::{certify, continuation_solve, t_sweep, SolveError};

use config::{Built, Overrides, RhsSpec, RunConfig};

const EXIT_CERTIFICATE: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_USAGE: u8 = 64;
/// Largest admissible error of a residual-consistent manufactured solve.
const MMS_EXACT_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "sigmak", version, about = "Newton-homotopy solver for sigma_k^{1/k}(A) = f < 0 on periodic grids")]
struct Cli {
    /// Random seed for sampled checks.
    #[arg(long, global = true, default_value_t = sigmak::oracle::DEFAULT_SEED)]
    seed: u64,
    /// Newton tolerance relative to max rho^k.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Newton iteration cap per continuation step.
    #[arg(long, global = true)]
    max_newton: Option<usize>,
    #[arg(long, global = true, value_enum)]
    preset: Option<Preset>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// k = n, t = 0.
    DetRicci,
}

#[derive(Subcommand)]
enum Command {
    /// Randomized checks of the symmetric-function identities.
    CheckIdentities {
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Largest matrix dimension sampled.
        #[arg(long, default_value_t = 5)]
        nmax: usize,
    },
    /// Solves the configured problem and writes `<out>.csv`, `.report` and `.log`.
    Solve {
        config: PathBuf,
        /// Output prefix (default: the config path without extension).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recomputes the certificates of a stored solution.
    Verify { solution: PathBuf, config: PathBuf },
    /// Grid-refinement study against the configured exact solution.
    Mms {
        config: PathBuf,
        /// Nodes per axis, one entry per grid.
        #[arg(long, value_delimiter = ',', required = true)]
        grids: Vec<usize>,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solves for each t and tabulates the results.
    SweepT {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        t_list: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A failure with a chosen exit status.
struct Exit(u8, anyhow::Error);

trait WithStatus<T> {
    fn status(self, code: u8) -> Result<T, Exit>;
}

impl<T, E: Into<anyhow::Error>> WithStatus<T> for Result<T, E> {
    fn status(self, code: u8) -> Result<T, Exit> {
        self.map_err(|e| Exit(code, e.into()))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Exit(code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}

fn overrides(cli: &Cli) -> Overrides {
    Overrides {
        tol: cli.tol,
        max_newton: cli.max_newton,
        det_ricci: matches!(cli.preset, Some(Preset::DetRicci)),
    }
}

fn load(cli: &Cli, path: &Path) -> Result<RunConfig, Exit> {
    let mut c = RunConfig::from_file(path).status(EXIT_USAGE)?;
    c.apply(&overrides(cli));
    Ok(c)
}

fn run(cli: &Cli) -> Result<u8, Exit> {
    match &cli.command {
        Command::CheckIdentities { trials, nmax } => {
            let report = check_identities(*trials, cli.seed, *nmax);
            print!("{report}");
            Ok(if report.all_passed() { 0 } else { EXIT_CERTIFICATE })
        }
        Command::Solve { config, out } => {
            let cfg = load(cli, config)?;
            let built = cfg.build().status(EXIT_USAGE)?;
            let prefix = out.clone().unwrap_or_else(|| config.with_extension(""));
            solve(cli, &built, &prefix).status(EXIT_USAGE)?
        }
        Command::Verify { solution, config } => {
            let cfg = load(cli, config)?;
            let built = cfg.build().status(EXIT_USAGE)?;
            let file = File::open(solution)
                .with_context(|| format!("opening {}", solution.display()))
                .status(EXIT_USAGE)?;
            let w = dump::read_scalar(BufReader::new(file)).status(EXIT_USAGE)?;
            if w.grid() != built.problem.grid() {
                return Err(Exit(
                    EXIT_USAGE,
                    anyhow::anyhow!(
                        "solution grid '{}' does not match config grid '{}'",
                        dump::header(w.grid()),
                        dump::header(built.problem.grid())
                    ),
                ));
            }
            let (cert, margins, bounds) = certify(&built.problem, &w).status(EXIT_USAGE)?;
            print!("{}", certificate_lines(&cert, &margins, bounds));
            Ok(if cert.all() { 0 } else { EXIT_CERTIFICATE })
        }
        Command::Mms { config, grids, out } => {
            let cfg = load(cli, config)?;
            mms(&cfg, grids, out.as_deref())
        }
        Command::SweepT { config, t_list, out } => {
            let cfg = load(cli, config)?;
            let built = cfg.build().status(EXIT_USAGE)?;
            let rows = t_sweep(&built.problem, t_list);
            let mut text = format!("{}\n{SWEEP_COLUMNS}\n", dump::header(built.problem.grid()));
            for row in &rows {
                writeln!(text, "{row}").unwrap();
                if let Some(e) = &row.error {
                    eprintln!("t = {}: {e}", row.t);
                }
            }
            emit(out.as_deref(), &text).status(EXIT_USAGE)?;
            Ok(if rows.iter().any(|r| r.converged) { 0 } else { EXIT_SOLVER })
        }
    }
}

fn certificate_lines(cert: &sigmak::continuation::Certified, m: &sigmak::continuation::Margins, bounds: (f64, f64)) -> String {
    let mut s = String::new();
    writeln!(s, "certified_residual={}", cert.residual).unwrap();
    writeln!(s, "certified_cone={}", cert.cone).unwrap();
    writeln!(s, "certified_bounds={}", cert.bounds).unwrap();
    writeln!(s, "residual_root={:e}", m.residual_root).unwrap();
    writeln!(s, "residual_tolerance={:e}", m.residual_tolerance).unwrap();
    writeln!(s, "cone_margin={:e}", m.cone).unwrap();
    writeln!(s, "ellipticity_margin={:e}", m.ellipticity).unwrap();
    writeln!(s, "min_w={}", m.min_w).unwrap();
    writeln!(s, "max_w={}", m.max_w).unwrap();
    writeln!(s, "lower_bound={}", bounds.0).unwrap();
    writeln!(s, "upper_bound={}", bounds.1).unwrap();
    s
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Runs the solve and writes its artifacts; the inner value is the exit code.
fn solve(cli: &Cli, built: &Built, prefix: &Path) -> Result<Result<u8, Exit>> {
    let p = &built.problem;
    let mut report = format!("grid={}\nk={}\nt={}\nseed={}\n", dump::header(p.grid()), p.k(), p.t(), cli.seed);
    let result = continuation_solve(p);
    let log_path = with_suffix(prefix, ".log");
    let report_path = with_suffix(prefix, ".report");
    match result {
        Ok(rep) => {
            write_solution(&rep, built, prefix, &log_path, &mut report)?;
            std::fs::write(&report_path, &report).with_context(|| format!("writing {}", report_path.display()))?;
            print!("{report}");
            Ok(Ok(if rep.certified.all() { 0 } else { EXIT_CERTIFICATE }))
        }
        Err(SolveError::Problem(e)) => Ok(Err(Exit(EXIT_USAGE, e.into()))),
        Err(e @ SolveError::StepUnderflow { .. }) => {
            let SolveError::StepUnderflow { last_good_s, .. } = &e else { unreachable!() };
            writeln!(report, "status=failed\nlast_good_s={last_good_s}\nerror={e}").unwrap();
            std::fs::write(&report_path, &report).with_context(|| format!("writing {}", report_path.display()))?;
            Ok(Err(Exit(EXIT_SOLVER, e.into())))
        }
    }
}

fn write_solution(rep: &SolveReport, built: &Built, prefix: &Path, log_path: &Path, report: &mut String) -> Result<()> {
    let csv = with_suffix(prefix, ".csv");
    let mut out = BufWriter::new(File::create(&csv).with_context(|| format!("creating {}", csv.display()))?);
    dump::write_scalar(&mut out, &rep.w)?;
    out.flush()?;
    let mut log = String::new();
    for rec in &rep.log {
        writeln!(log, "{rec}").unwrap();
    }
    std::fs::write(log_path, log).with_context(|| format!("writing {}", log_path.display()))?;

    let status = if rep.certified.all() { "certified" } else { "uncertified" };
    writeln!(report, "status={status}").unwrap();
    let accepted = rep.path.iter().filter(|e| e.accepted).count();
    writeln!(report, "steps_accepted={accepted}").unwrap();
    writeln!(report, "steps_rejected={}", rep.path.len() - accepted).unwrap();
    writeln!(report, "newton_iterations={}", rep.path.iter().map(|e| e.iterations).sum::<usize>()).unwrap();
    report.push_str(&certificate_lines(&rep.certified, &rep.margins, rep.bounds));
    if let Some(exact) = &built.w_exact {
        writeln!(report, "max_error={:e}", rep.w.max_abs_diff(exact)).unwrap();
    }
    writeln!(report, "solution={}", csv.display()).unwrap();
    Ok(())
}

fn mms(cfg: &RunConfig, grids: &[usize], out: Option<&Path>) -> Result<u8, Exit> {
    let exact_mode = match cfg.f {
        RhsSpec::Manufactured => true,
        RhsSpec::Analytic => false,
        RhsSpec::Field(_) => {
            return Err(Exit(EXIT_USAGE, anyhow::anyhow!("mms needs f = manufactured or f = analytic")));
        }
    };
    let mode = if exact_mode { "residual-consistent" } else { "analytic" };
    let mut text = format!(
        "# mms mode={mode} dim={} k={} t={}\nsize,h,max_error,order\n",
        cfg.sizes.len(),
        cfg.k,
        cfg.t
    );
    let mut code = 0;
    let mut prev: Option<(f64, f64)> = None;
    for &size in grids {
        let c = cfg.with_size(size);
        let built = c.build().status(EXIT_USAGE)?;
        let h = built.problem.grid().max_spacing();
        let rep = match continuation_solve(&built.problem) {
            Ok(rep) => rep,
            Err(e) => {
                emit(out, &text).status(EXIT_USAGE)?;
                return Err(Exit(EXIT_SOLVER, anyhow::anyhow!("grid {size}: {e}")));
            }
        };
        let err = rep.w.max_abs_diff(built.w_exact.as_ref().expect("checked at load"));
        let order = match prev {
            // errors sit at roundoff in residual-consistent mode
            Some((h0, e0)) if !exact_mode && err > 0.0 && e0 > 0.0 => format!("{:.3}", (e0 / err).ln() / (h0 / h).ln()),
            _ => String::new(),
        };
        writeln!(text, "{size},{h},{err:e},{order}").unwrap();
        if exact_mode && !(err <= MMS_EXACT_TOL) {
            eprintln!("grid {size}: error {err:e} exceeds {MMS_EXACT_TOL:e}");
            code = EXIT_CERTIFICATE;
        }
        prev = Some((h, err));
    }
    emit(out, &text).status(EXIT_USAGE)?;
    Ok(code)
}

