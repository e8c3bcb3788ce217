use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ddtime::scenario::{self, Config, Method};

#[derive(Parser)]
#[command(name = "ddtime", version, about = "Space-time domain decomposition benchmarks")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Run the configured method and write report, snapshots and manifest.
    Run(Common),
    #[command(subcommand)]
    Study(Study),
    /// Print and write optimized Robin parameters per interface.
    OptimizeRobin(Common),
    /// Direct monodomain solve.
    Reference(Common),
}

#[derive(Subcommand)]
enum Study {
    /// Errors against step size on the four time-grid layouts.
    TimeOrder(Common),
    /// Jacobi residual over a grid of Robin parameters.
    RobinLandscape(Common),
}

#[derive(Args)]
struct Common {
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long)]
    method: Option<Method>,
}

impl Common {
    fn config(&self) -> ddtime::Result<Config> {
        let mut c = Config::load(&self.config)?;
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.tol {
            c.tol = v;
        }
        if let Some(v) = self.max_iter {
            c.max_iter = v;
        }
        if let Some(v) = self.scale {
            c.scale = v;
        }
        if let Some(v) = self.method {
            c.method = v;
        }
        Ok(c)
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> ddtime::Result<()> {
    match cli.verb {
        Verb::Run(a) => {
            let out = scenario::run(&a.config()?, &a.out_dir)?;
            println!("{}", serde_json::to_string_pretty(&out.manifest.summary).unwrap());
        }
        Verb::Reference(a) => {
            scenario::run_reference(&a.config()?, &a.out_dir)?;
            println!("reference written to {}", a.out_dir.display());
        }
        Verb::OptimizeRobin(a) => {
            let (params, details, _) = scenario::run_optimize(&a.config()?, &a.out_dir)?;
            for (k, (a12, a21)) in params.pairs.iter().enumerate() {
                let rho = details.get(k).map_or(f64::NAN, |d| d.rho);
                println!("interface {k}: alpha12 = {a12:.6e}, alpha21 = {a21:.6e}, rho = {rho:.4}");
            }
        }
        Verb::Study(Study::TimeOrder(a)) => {
            let (study, _) = scenario::run_study(&a.config()?, &a.out_dir, &mut |r| {
                eprintln!("grid {} level {}: err_c {:.4e} err_r {:.4e} ({} it)", r.grid, r.level, r.err_c, r.err_r, r.iterations);
            })?;
            for s in &study.slopes {
                println!("grid {}: slope_c {:.3} slope_r {:.3}", s.grid, s.slope_c, s.slope_r);
            }
        }
        Verb::Study(Study::RobinLandscape(a)) => {
            let (out, _) = scenario::run_landscape(&a.config()?, &a.out_dir)?;
            let (i, j, min) = out.landscape.min();
            println!(
                "grid minimum {min:.4e} at ({:.4e}, {:.4e}); optimized ({:.4e}, {:.4e}) gives {:.4e}",
                out.landscape.alpha12[i], out.landscape.alpha21[j], out.optimized.0, out.optimized.1, out.residual_at_optimized
            );
        }
    }
    Ok(())
}
