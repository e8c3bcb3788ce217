//! Method 1: GMRES on the Steklov-Poincare interface problem, with and without
//! Neumann-Neumann preconditioning, on nonconforming time grids.

use ddtime::scenario::{build_scenario, solve, Config, Discard, Method, ScenarioSpec, Settings};
use ddtime::solvers::IterOptions;

fn main() -> ddtime::Result<()> {
    let mut cfg = Config::new(ScenarioSpec::Test1 { ratio: 100, steps: None });
    cfg.scale = 4.0;
    cfg.method = Method::Method1;
    let problem = build_scenario(&cfg)?.problem()?;
    for pre in [false, true] {
        let mut s = Settings::from_config(&cfg);
        s.precondition = pre;
        s.opts = IterOptions::residual(1e-10, 200);
        let out = solve(&problem, &s, None, None, &mut Discard)?;
        println!(
            "preconditioned {pre}: {} iterations, {} subdomain solves, residual {:.2e}",
            out.report.iterations,
            out.report.total_solves(),
            out.report.final_residual()
        );
    }
    Ok(())
}
