use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use septrans::commands::{cmd_generate, cmd_lsa, cmd_oracle, cmd_radial, cmd_render, cmd_transit, cmd_verify};
use septrans::generate::GenerateParams;
use septrans::{Config, Error, PivotRule};

const EXIT_VERIFY: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(name = "septrans", version, about = "Separation-preserving transitions between clusterings")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML file with solver settings, budget and seed.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    tol_feas: Option<f64>,
    #[arg(long, global = true)]
    tol_opt: Option<f64>,
    #[arg(long, global = true)]
    pivot: Option<PivotRule>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Maximum number of assignments the oracle may enumerate.
    #[arg(long, global = true)]
    budget: Option<u64>,
}

impl Global {
    fn overrides_solver(&self) -> bool {
        self.config.is_some() || self.tol_feas.is_some() || self.tol_opt.is_some() || self.pivot.is_some()
    }

    fn load(&self) -> Result<Config, Error> {
        let mut cfg = match &self.config {
            Some(p) => Config::from_toml(&read(p)?)?,
            None => Config::default(),
        };
        if let Some(v) = self.tol_feas {
            cfg.solver.tol_feas = v;
        }
        if let Some(v) = self.tol_opt {
            cfg.solver.tol_opt = v;
        }
        if let Some(v) = self.pivot {
            cfg.solver.pivot = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.budget {
            cfg.budget = v;
        }
        cfg.solver.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute and verify a transition between the two endpoints of an instance.
    Transit {
        instance: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Constrained least-squares assignment of fixed shape for the source sites.
    Lsa {
        instance: PathBuf,
        /// Cluster sizes, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        shape: Vec<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Radial clustering for the source sites within the instance bounds.
    Radial {
        instance: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Re-check a transition file.
    Verify {
        file: PathBuf,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Draw one clustering of a planar transition file as SVG.
    Render {
        file: PathBuf,
        /// 0-based position in the clustering list.
        #[arg(long, default_value_t = 0)]
        step: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Cross-check the solver against brute-force enumeration.
    Oracle { instance: PathBuf },
    /// Write a random instance with two constrained LSA endpoints.
    Generate {
        #[arg(short, default_value_t = 20)]
        n: usize,
        #[arg(short, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        perturbation: f64,
        #[arg(long)]
        same_shape: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Error> {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse { line, column, message } => Error::Parse {
            line,
            column,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    let cfg = cli.global.load()?;
    info!("config: {cfg:?}");
    match cli.command {
        Command::Transit { instance, output } => {
            let out = cmd_transit(&read(&instance)?, &cfg).map_err(|e| with_path(&instance, e))?;
            eprint!("{}", out.report.summary());
            if !out.report.passed {
                return Ok(EXIT_VERIFY);
            }
            eprintln!("{} steps", out.steps);
            emit(output.as_deref(), &out.file)?;
        }
        Command::Lsa { instance, shape, output } => {
            let out = cmd_lsa(&read(&instance)?, &shape, &cfg.solver).map_err(|e| with_path(&instance, e))?;
            emit(output.as_deref(), &out)?;
        }
        Command::Radial { instance, output } => {
            let out = cmd_radial(&read(&instance)?, &cfg.solver).map_err(|e| with_path(&instance, e))?;
            emit(output.as_deref(), &out)?;
        }
        Command::Verify { file, json } => {
            let solver = cli.global.overrides_solver().then_some(cfg.solver);
            let rep = cmd_verify(&read(&file)?, solver.as_ref()).map_err(|e| with_path(&file, e))?;
            if json {
                println!("{}", rep.to_json());
            } else {
                print!("{}", rep.summary());
            }
            if !rep.passed {
                return Ok(EXIT_VERIFY);
            }
        }
        Command::Render { file, step, output } => {
            let svg = cmd_render(&read(&file)?, step).map_err(|e| with_path(&file, e))?;
            emit(output.as_deref(), &svg)?;
        }
        Command::Oracle { instance } => {
            let out = cmd_oracle(&read(&instance)?, &cfg).map_err(|e| with_path(&instance, e))?;
            for l in &out.lines {
                println!("{l}");
            }
            if !out.passed {
                return Ok(EXIT_VERIFY);
            }
        }
        Command::Generate {
            n,
            k,
            dim,
            perturbation,
            same_shape,
            output,
        } => {
            let params = GenerateParams {
                n,
                k,
                dim,
                seed: cfg.seed,
                perturbation,
                same_shape,
            };
            emit(output.as_deref(), &cmd_generate(&params, &cfg.solver)?)?;
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { EXIT_INPUT } else { EXIT_INTERNAL })
        }
    }
}
