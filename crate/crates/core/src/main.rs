use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use atmodg::adapt::{Driver, StepRecord};
use atmodg::bench::studies::{balance_table, conservation, implicit_vs_semi};
use atmodg::bench::{line_profile, RunSummary};
use atmodg::io::{csv, vtu, Checkpoint, RunConfig};
use atmodg::{Error, Result};

#[derive(Parser)]
#[command(name = "atmodg", version, about = "Space-time adaptive DG solver for atmospheric flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a case described by a configuration file.
    Run {
        config: PathBuf,
        /// Override a configuration key, e.g. `--override TOL=0.01`.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Continue from a checkpoint instead of the initial state.
        #[arg(long)]
        restart: Option<PathBuf>,
    },
    /// Run one of the built-in studies.
    Study {
        kind: StudyKind,
        config: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Hand the remaining arguments to the Python plotting package.
    Postprocess {
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        args: Vec<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StudyKind {
    BcTable,
    ImplicitVsSemi,
    Conservation,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::Range { .. } | Error::UnknownCase(_) | Error::VersionMismatch { .. } | Error::Json(_) | Error::Format(_) => 2,
        Error::AdaptStall { .. } | Error::NoConvergence(_) => 4,
        _ => 3,
    }
}

fn config_error(e: Error) -> (u8, Error) {
    let code = if matches!(e, Error::Io(_)) { 2 } else { exit_code(&e) };
    (code, e)
}

struct Outputs {
    dir: PathBuf,
    steps: File,
    solver: File,
    adapt: File,
    written_iters: usize,
    written_adapt: usize,
}

impl Outputs {
    fn open(dir: &Path, append: bool) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let open = |name: &str, header: &str| -> Result<File> {
            let path = dir.join(name);
            if append && path.exists() {
                Ok(fs::OpenOptions::new().append(true).open(path)?)
            } else {
                let mut f = File::create(path)?;
                writeln!(f, "{header}")?;
                Ok(f)
            }
        };
        Ok(Outputs {
            dir: dir.to_path_buf(),
            steps: open("steps.csv", csv::STEP_HEADER)?,
            solver: open("solver.csv", csv::SOLVER_HEADER)?,
            adapt: open("adapt.csv", csv::ADAPT_HEADER)?,
            written_iters: 0,
            written_adapt: 0,
        })
    }

    fn record(&mut self, d: &Driver, r: &StepRecord) -> Result<()> {
        writeln!(self.steps, "{}", csv::step_line(r))?;
        for l in &d.log.iterations[self.written_iters..] {
            writeln!(self.solver, "{}", csv::solver_line(l))?;
        }
        self.written_iters = d.log.iterations.len();
        for a in &d.log.adaptations[self.written_adapt..] {
            writeln!(self.adapt, "{}", csv::adapt_line(a))?;
        }
        self.written_adapt = d.log.adaptations.len();
        Ok(())
    }

    fn fields(&self, d: &Driver, name: &str) -> Result<()> {
        vtu::write(&self.dir.join(name), &d.state.trace, &d.bg, &d.case.constants(), d.state.t)
    }
}

fn write_profile(dir: &Path, d: &Driver) -> Result<()> {
    let (x, y) = (d.case.x, d.case.y);
    let h = 0.5 * (y[0] + y[1]);
    let pts = line_profile(&d.state.trace, [x[0], h], [x[1], h], 1000, d.case.quantity, &d.bg, &d.case.constants())?;
    let mut s = String::from("x1,x2,value\n");
    for p in pts {
        s.push_str(&format!("{:?},{:?},{:?}\n", p[0], p[1], p[2]));
    }
    fs::write(dir.join("profile.csv"), s)?;
    Ok(())
}

fn write_summary(dir: &Path, name: &str, s: &RunSummary) -> Result<()> {
    let text = format!(
        "steps = {}\ngmres_total = {}\nfinal_tau = {:?}\nfinal_cells = {}\nmax_cells = {}\ndelta_mass = {:e}\ndelta_energy = {:e}\nmax_eta_interp = {:e}\nmax_algebraic_ratio = {:e}\nmax_cfl = {:?}\nseconds = {:.1}\n",
        s.steps, s.gmres_total, s.final_tau, s.final_cells, s.max_cells, s.delta_mass, s.delta_energy, s.max_eta_interp, s.max_algebraic_ratio, s.max_cfl, s.seconds
    );
    fs::write(dir.join(name), text)?;
    Ok(())
}

fn set_threads(cfg: &RunConfig) {
    if cfg.threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global();
    }
}

fn run(config: &Path, overrides: &[String], restart: Option<&Path>) -> std::result::Result<(), (u8, Error)> {
    let (cfg, mut driver) = match restart {
        Some(path) => {
            let cp = Checkpoint::load(path).map_err(config_error)?;
            let (mut cfg, state) = cp.restore().map_err(config_error)?;
            // the configuration file may still move the output directory or extend T
            let file = RunConfig::from_file(config, overrides).map_err(config_error)?;
            cfg.case.t_end = file.case.t_end;
            cfg.output_dir = file.output_dir;
            cfg.output_every = file.output_every;
            cfg.checkpoint_every = file.checkpoint_every;
            let d = Driver::resume(cfg.case.clone(), cfg.run.clone(), state).map_err(|e| (3, e))?;
            (cfg, d)
        }
        None => {
            let cfg = RunConfig::from_file(config, overrides).map_err(config_error)?;
            let d = Driver::new(cfg.case.clone(), cfg.run.clone()).map_err(config_error)?;
            (cfg, d)
        }
    };
    set_threads(&cfg);
    let solver = |e: Error| (exit_code(&e), e);
    let dir = cfg.output_dir.clone();
    let mut out = Outputs::open(&dir, restart.is_some()).map_err(solver)?;
    fs::write(dir.join("config.txt"), cfg.echo()).map_err(|e| (2, e.into()))?;
    if restart.is_none() {
        out.fields(&driver, "fields_0000.vtu").map_err(solver)?;
    }
    let start = std::time::Instant::now();
    let result = driver.run(|d, r| {
        out.record(d, r)?;
        if cfg.output_every > 0 && r.m % cfg.output_every == 0 {
            out.fields(d, &format!("fields_{:04}.vtu", r.m))?;
        }
        if cfg.checkpoint_every > 0 && r.m % cfg.checkpoint_every == 0 {
            Checkpoint::capture(&cfg, &d.state).save(&dir.join("checkpoint.json"))?;
        }
        Ok(())
    });
    if let Err(e) = result {
        Checkpoint::capture(&cfg, &driver.state).save(&dir.join("checkpoint.json")).ok();
        return Err(solver(e));
    }
    out.fields(&driver, "fields_final.vtu").map_err(solver)?;
    write_profile(&dir, &driver).map_err(solver)?;
    write_summary(&dir, "summary.txt", &RunSummary::of(&driver, start.elapsed().as_secs_f64())).map_err(solver)?;
    Ok(())
}

fn study(kind: StudyKind, config: &Path, overrides: &[String]) -> std::result::Result<(), (u8, Error)> {
    let cfg = RunConfig::from_file(config, overrides).map_err(config_error)?;
    set_threads(&cfg);
    let solver = |e: Error| (exit_code(&e), e);
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| (2, e.into()))?;
    match kind {
        StudyKind::BcTable => {
            let rows = balance_table(&[1, 2, 3, 4, 5], cfg.case.t_end, cfg.case.tau0).map_err(solver)?;
            let mut s = String::from("p,cells,dof,min,max,delta\n");
            for r in &rows {
                s.push_str(&format!("{},{},{},{:e},{:e},{:e}\n", r.p, r.n_cells, r.dof, r.min, r.max, r.delta));
            }
            print!("{s}");
            fs::write(dir.join("bc_table.csv"), s).map_err(|e| (3, e.into()))?;
        }
        StudyKind::ImplicitVsSemi => {
            let ((imp, si), (semi, ss)) = implicit_vs_semi(&cfg).map_err(solver)?;
            for (name, d, s) in [("implicit", &imp, &si), ("semi", &semi, &ss)] {
                let trace = csv::table("m,t,tau,gmres_total", &d.log.steps, |r| format!("{},{:?},{:?},{}", r.m, r.t, r.tau, r.gmres_total));
                fs::write(dir.join(format!("trace_{name}.csv")), trace).map_err(|e| (3, e.into()))?;
                write_summary(&dir, &format!("summary_{name}.txt"), s).map_err(solver)?;
                println!("{name}: steps {} gmres {} final tau {:.4} time {:.0} s", s.steps, s.gmres_total, s.final_tau, s.seconds);
            }
        }
        StudyKind::Conservation => {
            let tol = if cfg.case.tol.is_finite() { cfg.case.tol } else { 0.02 };
            let ((_, fixed), (_, adapted)) = conservation(&cfg, tol).map_err(solver)?;
            for (name, s) in [("fixed", &fixed), ("adapted", &adapted)] {
                write_summary(&dir, &format!("summary_{name}.txt"), s).map_err(solver)?;
                println!("{name}: cells {} dmass {:e} denergy {:e}", s.final_cells, s.delta_mass, s.delta_energy);
            }
        }
    }
    Ok(())
}

fn postprocess(args: &[String]) -> std::result::Result<(), (u8, Error)> {
    let python = std::env::var("PYTHON").unwrap_or_else(|_| "python3".into());
    let status = std::process::Command::new(&python)
        .arg("-m")
        .arg("postproc")
        .args(args)
        .status()
        .map_err(|e| (2, Error::Io(e)))?;
    match status.code() {
        Some(0) => Ok(()),
        Some(c) => Err((c.clamp(1, 255) as u8, Error::Format(format!("postproc exited with status {c}")))),
        None => Err((3, Error::Format("postproc was terminated".into()))),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, overrides, restart } => run(config, overrides, restart.as_deref()),
        Command::Study { kind, config, overrides } => study(*kind, config, overrides),
        Command::Postprocess { args } => postprocess(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, e)) => {
            eprintln!("error: {e}");
            ExitCode::from(code)
        }
    }
}
