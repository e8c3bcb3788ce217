//! Method 2 as a Jacobi waveform relaxation from a random start on zero data,
//! so the printed errors are the iteration errors themselves.

use ddtime::scenario::{build_scenario, robin_params, solve, Config, Discard, Guess, Method, ScenarioSpec, Settings};
use ddtime::solvers::{IterOptions, ReferenceSummary};

fn main() -> ddtime::Result<()> {
    let mut cfg = Config::new(ScenarioSpec::Test1 { ratio: 10, steps: None });
    cfg.scale = 4.0;
    cfg.homogeneous = true;
    cfg.guess = Guess::Random;
    cfg.seed = 1;
    cfg.method = Method::Method2Jacobi;
    let problem = build_scenario(&cfg)?.problem()?;
    let (alpha, opt) = robin_params(&problem, &cfg.robin);
    println!("alpha12 {:.4e} alpha21 {:.4e} rho {:.4}", alpha.pairs[0].0, alpha.pairs[0].1, opt[0].rho);
    let zero = ReferenceSummary::zero(&problem)?;
    let mut s = Settings::from_config(&cfg);
    s.opts = IterOptions::error(1e-8, 100);
    let out = solve(&problem, &s, Some(&alpha), Some(&zero), &mut Discard)?;
    for (k, (c, r)) in out.report.err_c.iter().zip(&out.report.err_r).enumerate() {
        println!("sweep {k:2}  max_t |c| {c:.3e}  |r| {r:.3e}");
    }
    Ok(())
}
