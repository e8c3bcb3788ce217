//! Convergence factor of the Robin iteration and its optimized parameters.

use ddtime::robin_opt::{adapted_optimize, convergence_factor, optimize, FrequencyBox, OptMode, SideData};

fn main() {
    let freq = FrequencyBox::from_grid(1.0, 1.0 / 200.0, 1.0, 1.0 / 200.0);
    for (d1, d2) in [(0.02, 0.2), (0.002, 0.2), (0.0002, 0.2)] {
        let sym = optimize(d1, d2, 1.0, 1.0, &freq, OptMode::Symmetric);
        let two = optimize(d1, d2, 1.0, 1.0, &freq, OptMode::TwoSided);
        println!(
            "d1 {d1:e}: symmetric a = {:.4e} rho {:.4}; two-sided ({:.4e}, {:.4e}) rho {:.4}",
            sym.alpha12, sym.rho, two.alpha12, two.alpha21, two.rho
        );
    }
    let rho = convergence_factor(1.0, 1.0, 10.0, 5.0, 0.02, 0.2, 1.0, 1.0);
    println!("rho at alpha = 1, omega = 10, k = 5: {rho:.4}");

    let yr = 3.15576e7;
    let freq = FrequencyBox::from_grid(2e5 * yr, 2000.0 * yr, 2950.0, 2950.0 / 300.0);
    let rep = SideData { diffusion: 2e-9, porosity: 0.2, width: 10.0 };
    let clay = SideData { diffusion: 5e-12, porosity: 0.05, width: 65.0 };
    let half = optimize(2e-9, 5e-12, 0.2, 0.05, &freq, OptMode::TwoSided);
    let strip = adapted_optimize(rep, clay, &freq, OptMode::TwoSided);
    println!("repository/clay half-space ({:.3e}, {:.3e}), strip ({:.3e}, {:.3e})", half.alpha12, half.alpha21, strip.alpha12, strip.alpha21);
}
