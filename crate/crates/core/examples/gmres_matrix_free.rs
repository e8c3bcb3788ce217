//! Matrix-free GMRES on a small nonsymmetric operator with a diagonal preconditioner.

use ddtime::solvers::{gmres, Hooks, IterOptions};

fn main() -> ddtime::Result<()> {
    let n = 50;
    let apply_a = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let mut v = (2.0 + i as f64 * 0.1) * x[i];
                if i + 1 < n {
                    v += 0.7 * x[i + 1];
                }
                if i > 0 {
                    v -= 0.3 * x[i - 1];
                }
                v
            })
            .collect()
    };
    let b: Vec<f64> = (0..n).map(|i| ((i + 1) as f64).ln()).collect();
    let mut op = |x: &[f64]| Ok(apply_a(x));
    let mut pc = |x: &[f64]| Ok(x.iter().enumerate().map(|(i, v)| v / (2.0 + i as f64 * 0.1)).collect());
    let opts = IterOptions::residual(1e-12, 100);
    let (x, rep) = gmres(&mut op, Some(&mut pc), &b, &vec![0.0; n], &opts, Hooks::default())?;
    let ax = apply_a(&x);
    let res: f64 = ax.iter().zip(&b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    println!("{} iterations, true residual {res:.2e}", rep.iterations);
    for (k, r) in rep.rel_residual.iter().enumerate() {
        println!("{k:3} {r:.3e}");
    }
    Ok(())
}
