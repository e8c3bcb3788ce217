//! Errors against step size for the four time-grid layouts, at a coarse mesh.
//!
//! `cargo run --release --example time_order_study -- [scale]`

use ddtime::scenario::{build_scenario, time_grid_study, Config, Method, ScenarioSpec};

fn main() -> ddtime::Result<()> {
    let mut cfg = Config::new(ScenarioSpec::Test1 { ratio: 100, steps: None });
    cfg.scale = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(8.0);
    cfg.method = Method::Method2Gmres;
    cfg.study.levels = 3;
    cfg.study.reference_factor = 16;
    let base = build_scenario(&cfg)?;
    let study = time_grid_study(&base, &cfg, &mut |r| {
        println!("grid {} dt_f {:.3e}: err_c {:.4e} err_r {:.4e}", r.grid, r.dt_fine, r.err_c, r.err_r)
    })?;
    for s in &study.slopes {
        println!("grid {}: slope c {:.3}, r {:.3}", s.grid, s.slope_c, s.slope_r);
    }
    Ok(())
}
