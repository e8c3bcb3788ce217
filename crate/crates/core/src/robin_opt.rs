//! Optimized Robin parameters from the two-half-space convergence factor.

use std::path::Path;

use num_complex::Complex64;

use crate::error::Result;
use crate::interface::{DdProblem, RobinParams};
use crate::solvers::{jacobi_oswr, IterOptions};

/// Physical data of one side of an interface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideData {
    pub diffusion: f64,
    pub porosity: f64,
    /// Width of the subdomain normal to the interface, used by the strip symbol.
    pub width: f64,
}

/// Frequencies resolved by the space-time grids.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FrequencyBox {
    pub omega_min: f64,
    pub omega_max: f64,
    pub k_min: f64,
    pub k_max: f64,
}

impl FrequencyBox {
    /// `[pi/T, pi/dt_min] x [pi/L, pi/dx]`.
    pub fn from_grid(t_final: f64, dt_min: f64, interface_length: f64, dx: f64) -> Self {
        let pi = std::f64::consts::PI;
        Self {
            omega_min: pi / t_final,
            omega_max: pi / dt_min,
            k_min: pi / interface_length,
            k_max: pi / dx,
        }
    }

    /// Log-spaced `n x n` sample of the box.
    pub fn samples(&self, n: usize) -> Vec<(f64, f64)> {
        let ws = log_space(self.omega_min, self.omega_max, n);
        let ks = log_space(self.k_min, self.k_max, n);
        ws.iter().flat_map(|&w| ks.iter().map(move |&k| (w, k))).collect()
    }
}

/// `n` log-spaced points from `a` to `b` inclusive.
pub fn log_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![(a * b).sqrt()];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Principal `sigma = sqrt((porosity * i omega + d k^2) / d)`..
fn sigma(omega: f64, k: f64, s: &SideData) -> Complex64 {
    (Complex64::new(s.diffusion * k * k, s.porosity * omega) / s.diffusion).sqrt()
}

fn coth(z: Complex64) -> Complex64 {
    let e = (-2.0 * z).exp();
    (1.0 + e) / (1.0 - e)
}

/// Symbol `d sigma`, or `d sigma coth(sigma L)` for a strip of width `L`.
fn symbol(omega: f64, k: f64, s: &SideData, strip: bool) -> Complex64 {
    let sg = sigma(omega, k, s);
    let base = s.diffusion * sg;
    if strip && s.width.is_finite() {
        base * coth(sg * s.width)
    } else {
        base
    }
}

/// Convergence factor of one Robin iteration on two half-spaces.
///
/// `alpha12` is the parameter of the condition imposed on side 1.
#[allow(clippy::too_many_arguments)]
pub fn convergence_factor(alpha12: f64, alpha21: f64, omega: f64, k: f64, d1: f64, d2: f64, w1: f64, w2: f64) -> f64 {
    let s1 = SideData { diffusion: d1, porosity: w1, width: f64::INFINITY };
    let s2 = SideData { diffusion: d2, porosity: w2, width: f64::INFINITY };
    factor_with(alpha12, alpha21, omega, k, &s1, &s2, false)
}

fn factor_with(a12: f64, a21: f64, omega: f64, k: f64, s1: &SideData, s2: &SideData, strip: bool) -> f64 {
    let p1 = symbol(omega, k, s1, strip);
    let p2 = symbol(omega, k, s2, strip);
    ((p1 - a21) * (p2 - a12)).norm() / ((p1 + a12) * (p2 + a21)).norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptMode {
    Symmetric,
    TwoSided,
}

/// Parameters found by the optimizer with the achieved min-max factor.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct OptimizedRobin {
    pub alpha12: f64,
    pub alpha21: f64,
    pub rho: f64,
}

/// Min-max objective over a fixed frequency sample.
#[derive(Debug, Clone)]
pub struct Objective {
    s1: SideData,
    s2: SideData,
    strip: bool,
    samples: Vec<(f64, f64)>,
}

/// Samples per frequency direction.
pub const SAMPLES: usize = 40;

impl Objective {
    pub fn new(s1: SideData, s2: SideData, freq: &FrequencyBox, strip: bool) -> Self {
        Self { s1, s2, strip, samples: freq.samples(SAMPLES) }
    }

    pub fn eval(&self, a12: f64, a21: f64) -> f64 {
        self.samples
            .iter()
            .map(|&(w, k)| factor_with(a12, a21, w, k, &self.s1, &self.s2, self.strip))
            .fold(0.0, f64::max)
    }

    /// Range of `|d sigma|` over the sample, used to bound the search.
    pub fn alpha_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for &(w, k) in &self.samples {
            for s in [&self.s1, &self.s2] {
                let v = symbol(w, k, s, self.strip).norm();
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo / 10.0, hi * 10.0)
    }
}

fn golden(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Coarse log grid, then golden section on the bracketing interval.
fn minimize_1d(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let n = 48;
    let grid: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let best = (0..n).min_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap();
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(n - 1)];
    let (x, v) = golden(f, a, b, 60);
    if v <= vals[best] {
        (x, v)
    } else {
        (grid[best], vals[best])
    }
}

fn search(obj: &Objective, mode: OptMode) -> OptimizedRobin {
    let (lo, hi) = obj.alpha_range();
    let (llo, lhi) = (lo.ln(), hi.ln());
    let (s, vs) = minimize_1d(&|la| obj.eval(la.exp(), la.exp()), llo, lhi);
    if mode == OptMode::Symmetric {
        return OptimizedRobin { alpha12: s.exp(), alpha21: s.exp(), rho: vs };
    }
    // coarse 2D grid so coordinate descent starts in the right basin
    let n = 32;
    let grid: Vec<f64> = (0..n).map(|i| llo + (lhi - llo) * i as f64 / (n - 1) as f64).collect();
    let (mut x, mut y, mut v) = (s, s, vs);
    for &a in &grid {
        for &b in &grid {
            let f = obj.eval(a.exp(), b.exp());
            if f < v {
                (x, y, v) = (a, b, f);
            }
        }
    }
    let mut width = (lhi - llo) / (n - 1) as f64 * 2.0;
    for _ in 0..40 {
        let (nx, fx) = golden(&|a| obj.eval(a.exp(), y.exp()), x - width, x + width, 40);
        if fx < v {
            x = nx;
            v = fx;
        }
        let (ny, fy) = golden(&|b| obj.eval(x.exp(), b.exp()), y - width, y + width, 40);
        if fy < v {
            y = ny;
            v = fy;
        }
        // diagonal moves help along the valley of a non-smooth max
        let (t, ft) = golden(&|t| obj.eval((x + t).exp(), (y + t).exp()), -width, width, 40);
        if ft < v {
            x += t;
            y += t;
            v = ft;
        }
        let (t, ft) = golden(&|t| obj.eval((x + t).exp(), (y - t).exp()), -width, width, 40);
        if ft < v {
            x += t;
            y -= t;
            v = ft;
        }
        width *= 0.7;
    }
    OptimizedRobin { alpha12: x.exp(), alpha21: y.exp(), rho: v }
}

/// Minimize the largest half-space convergence factor over the frequency box.
pub fn optimize(d1: f64, d2: f64, w1: f64, w2: f64, freq: &FrequencyBox, mode: OptMode) -> OptimizedRobin {
    let s1 = SideData { diffusion: d1, porosity: w1, width: f64::INFINITY };
    let s2 = SideData { diffusion: d2, porosity: w2, width: f64::INFINITY };
    search(&Objective::new(s1, s2, freq, false), mode)
}

/// Same search with the strip symbol `d sigma coth(sigma L)` on each side.
pub fn adapted_optimize(s1: SideData, s2: SideData, freq: &FrequencyBox, mode: OptMode) -> OptimizedRobin {
    search(&Objective::new(s1, s2, freq, true), mode)
}

/// Per-interface optimized parameters for a decomposed problem.
pub fn problem_params(problem: &DdProblem, mode: OptMode, strip: bool) -> (RobinParams, Vec<OptimizedRobin>) {
    let mut pairs = Vec::new();
    let mut details = Vec::new();
    for g in &problem.decomposition.interfaces {
        let (a, b) = (g.first, g.second);
        let sub_a = &problem.decomposition.subdomains[a];
        let sub_b = &problem.decomposition.subdomains[b];
        let width = |r: crate::geometry::Rect| match g.normal {
            crate::geometry::Normal::X => r.width(),
            crate::geometry::Normal::Y => r.height(),
        };
        let s1 = SideData { diffusion: problem.diffusion[a], porosity: problem.porosity[a], width: width(sub_a.rect()) };
        let s2 = SideData { diffusion: problem.diffusion[b], porosity: problem.porosity[b], width: width(sub_b.rect()) };
        let dt = problem.partitions[a].min_dt().min(problem.partitions[b].min_dt());
        let dx = g.lengths.iter().cloned().fold(f64::INFINITY, f64::min);
        let freq = FrequencyBox::from_grid(problem.final_time(), dt, g.length(), dx);
        let opt = search(&Objective::new(s1, s2, &freq, strip), mode);
        pairs.push((opt.alpha12, opt.alpha21));
        details.push(opt);
    }
    (RobinParams { pairs }, details)
}

/// Residuals after a fixed number of Jacobi sweeps on an `(alpha12, alpha21)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    pub alpha12: Vec<f64>,
    pub alpha21: Vec<f64>,
    /// Row-major, `residual[i][j]` for `alpha12[i]`, `alpha21[j]`.
    pub residual: Vec<Vec<f64>>,
}

impl Landscape {
    pub fn min(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, f64::INFINITY);
        for (i, row) in self.residual.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v < best.2 {
                    best = (i, j, v);
                }
            }
        }
        best
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["alpha12", "alpha21", "log10_residual"])?;
        for (i, row) in self.residual.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                w.write_record([
                    format!("{:e}", self.alpha12[i]),
                    format!("{:e}", self.alpha21[j]),
                    format!("{:e}", v.log10()),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Residual after exactly `sweeps` Jacobi sweeps from `x0` with the same
/// parameters on every interface.
pub fn jacobi_residual(problem: &DdProblem, a12: f64, a21: f64, x0: &[f64], sweeps: usize) -> Result<f64> {
    let alpha = RobinParams { pairs: vec![(a12, a21); problem.n_interfaces()] };
    let opts = IterOptions::residual(f64::MIN_POSITIVE, sweeps.saturating_sub(1));
    let out = match jacobi_oswr(problem, &alpha, x0, &opts, None) {
        Ok((_, rep)) => rep.final_residual(),
        Err(crate::Error::Diverged { residual, .. }) => residual,
        Err(e) => return Err(e),
    };
    for s in &problem.systems {
        s.clear_cache();
    }
    Ok(out)
}

/// Scan the residual after `sweeps` Jacobi sweeps over a grid of parameters.
pub fn landscape_scan(problem: &DdProblem, alpha12: &[f64], alpha21: &[f64], x0: &[f64], sweeps: usize) -> Result<Landscape> {
    let mut residual = Vec::with_capacity(alpha12.len());
    for &a in alpha12 {
        let mut row = Vec::with_capacity(alpha21.len());
        for &b in alpha21 {
            row.push(jacobi_residual(problem, a, b, x0, sweeps)?);
        }
        residual.push(row);
    }
    Ok(Landscape { alpha12: alpha12.to_vec(), alpha21: alpha21.to_vec(), residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn boxed() -> FrequencyBox {
        FrequencyBox::from_grid(1.0, 1.0 / 200.0, 1.0, 1.0 / 200.0)
    }

    #[test]
    fn absorbing_parameters_vanish() {
        let (w, k, d1, d2) = (7.0, 3.0, 0.02, 0.2);
        let s1 = SideData { diffusion: d1, porosity: 1.0, width: f64::INFINITY };
        let s2 = SideData { diffusion: d2, porosity: 1.0, width: f64::INFINITY };
        // real-valued parameters cannot match a complex symbol, so use k-dominated frequencies
        let p1 = symbol(0.0, k, &s1, false).re;
        let p2 = symbol(0.0, k, &s2, false).re;
        assert!(convergence_factor(p2, p1, 0.0, k, d1, d2, 1.0, 1.0) < 1e-14);
        assert!(convergence_factor(p2, p1, w, k, d1, d2, 1.0, 1.0) < 1.0);
    }

    #[test]
    fn swap_symmetry() {
        let a = convergence_factor(0.3, 2.0, 5.0, 4.0, 0.02, 0.2, 1.0, 0.5);
        let b = convergence_factor(2.0, 0.3, 5.0, 4.0, 0.2, 0.02, 0.5, 1.0);
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn asymmetric_parameters_can_amplify() {
        // the factor is not bounded by one for arbitrary pairs
        let rho = convergence_factor(1e-3, 1e3, 0.0, 1.0, 1.0, 100.0, 1.0, 1.0);
        assert!(rho > 1.0);
    }

    #[test]
    fn symmetric_mode_on_symmetric_data() {
        let o = optimize(0.1, 0.1, 1.0, 1.0, &boxed(), OptMode::Symmetric);
        assert_eq!(o.alpha12, o.alpha21);
        let t = optimize(0.1, 0.1, 1.0, 1.0, &boxed(), OptMode::TwoSided);
        assert!(t.rho <= o.rho + 1e-12);
        assert!(t.rho < 1.0);
    }

    #[test]
    fn optimizer_beats_brute_force_grid() {
        let freq = boxed();
        let s1 = SideData { diffusion: 0.02, porosity: 1.0, width: f64::INFINITY };
        let s2 = SideData { diffusion: 0.2, porosity: 1.0, width: f64::INFINITY };
        let obj = Objective::new(s1, s2, &freq, false);
        let opt = optimize(0.02, 0.2, 1.0, 1.0, &freq, OptMode::TwoSided);
        assert!((opt.rho - obj.eval(opt.alpha12, opt.alpha21)).abs() < 1e-14);
        let (lo, hi) = obj.alpha_range();
        let grid = log_space(lo, hi, 50);
        let best = grid
            .iter()
            .flat_map(|&a| grid.iter().map(move |&b| (a, b)))
            .map(|(a, b)| obj.eval(a, b))
            .fold(f64::INFINITY, f64::min);
        assert!(opt.rho <= best * 1.05, "{} vs {}", opt.rho, best);
        assert!(opt.rho < 1.0);
    }

    #[test]
    fn strip_recovers_half_space() {
        let freq = boxed();
        let wide = |d| SideData { diffusion: d, porosity: 1.0, width: 1e6 };
        let a = adapted_optimize(wide(0.02), wide(0.2), &freq, OptMode::TwoSided);
        let b = optimize(0.02, 0.2, 1.0, 1.0, &freq, OptMode::TwoSided);
        assert!((a.alpha12 / b.alpha12 - 1.0).abs() < 1e-6);
        assert!((a.alpha21 / b.alpha21 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn thin_layer_changes_parameters() {
        let yr = 3.15576e7;
        let freq = FrequencyBox::from_grid(2e5 * yr, 2000.0 * yr, 2950.0, 2950.0 / 600.0);
        let rep = SideData { diffusion: 2e-9, porosity: 0.2, width: 10.0 };
        let clay = SideData { diffusion: 5e-12, porosity: 0.05, width: 65.0 };
        let a = adapted_optimize(rep, clay, &freq, OptMode::TwoSided);
        let b = optimize(2e-9, 5e-12, 0.2, 0.05, &freq, OptMode::TwoSided);
        assert!((a.alpha12 / b.alpha12 - 1.0).abs() > 0.05 || (a.alpha21 / b.alpha21 - 1.0).abs() > 0.05);
    }

    proptest! {
        #[test]
        fn equal_parameters_contract(
            la in -6.0f64..3.0, lw in -2.0f64..4.0, lk in -1.0f64..3.0,
            ld1 in -4.0f64..0.0, ld2 in -4.0f64..0.0, w1 in 0.05f64..1.0, w2 in 0.05f64..1.0,
        ) {
            let a = 10f64.powf(la);
            let rho = convergence_factor(a, a, 10f64.powf(lw), 10f64.powf(lk), 10f64.powf(ld1), 10f64.powf(ld2), w1, w2);
            prop_assert!(rho < 1.0);
        }
    }
}
