//! Nine-subdomain repository problem with strip-optimized Robin parameters.
//! Writes report, probe history and snapshots to `out/repository`.

use std::path::Path;

use ddtime::robin_opt::OptMode;
use ddtime::scenario::{run, Config, Method, RobinSource, ScenarioSpec};

fn main() -> ddtime::Result<()> {
    let mut cfg = Config::new(ScenarioSpec::Test2 { final_years: 2e5 });
    cfg.scale = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4.0);
    cfg.method = Method::Method2Gmres;
    cfg.robin = RobinSource::Opt2 { mode: OptMode::TwoSided };
    cfg.snapshots = vec![5e4, 1e5, 2e5];
    let out = run(&cfg, Path::new("out/repository"))?;
    let rep = &out.outcome.as_ref().unwrap().report;
    println!("{} iterations, residual {:.2e}", rep.iterations, rep.final_residual());
    for (t, c) in out.probe.unwrap().series() {
        println!("{:8.0} yr  {c:.4e}", t / ddtime::scenario::YEAR);
    }
    Ok(())
}
