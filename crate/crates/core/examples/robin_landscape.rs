//! Jacobi residual over a small grid of Robin parameters, next to the optimizer's choice.

use ddtime::scenario::{build_scenario, robin_landscape, Config, Guess, Method, ScenarioSpec};

fn main() -> ddtime::Result<()> {
    let mut cfg = Config::new(ScenarioSpec::Test1 { ratio: 10, steps: None });
    cfg.scale = 8.0;
    cfg.homogeneous = true;
    cfg.guess = Guess::Random;
    cfg.method = Method::Method2Jacobi;
    cfg.landscape.n = 7;
    cfg.landscape.sweeps = 10;
    let out = robin_landscape(&build_scenario(&cfg)?, &cfg)?;
    for (i, row) in out.landscape.residual.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| format!("{:6.2}", v.log10())).collect();
        println!("{:9.3e} | {}", out.landscape.alpha12[i], cells.join(" "));
    }
    let (i, j, min) = out.landscape.min();
    println!("grid minimum {min:.3e} at ({:.3e}, {:.3e})", out.landscape.alpha12[i], out.landscape.alpha21[j]);
    println!("optimized ({:.3e}, {:.3e}) gives {:.3e}", out.optimized.0, out.optimized.1, out.residual_at_optimized);
    Ok(())
}
