//! Krylov and fixed-point drivers over interface vectors, plus error measurement.

use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::interface::{DdProblem, FieldMonitor, RobinParams};
use crate::linalg::{dot, norm};
use crate::mixedfem::{cell_norm_sq, flux_norm_sq, SpaceTimeField, SubdomainSystem};
use crate::timegrid::{overlaps, TimePartition, TIME_TOL};

/// Per-iteration history of one interface solve.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct SolveReport {
    pub method: String,
    pub iterations: usize,
    pub converged: bool,
    pub rel_residual: Vec<f64>,
    pub subdomain_solves: Vec<usize>,
    pub err_c: Vec<f64>,
    pub err_r: Vec<f64>,
    pub seed: Option<u64>,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        *self.rel_residual.last().unwrap_or(&f64::NAN)
    }

    pub fn total_solves(&self) -> usize {
        *self.subdomain_solves.last().unwrap_or(&0)
    }

    /// Solves spent when both errors first fell below `tol`.
    pub fn solves_to_error(&self, tol: f64) -> Option<usize> {
        (0..self.err_c.len())
            .find(|&k| self.err_c[k] < tol && self.err_r[k] < tol)
            .map(|k| self.subdomain_solves[k])
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["iteration", "subdomain_solves", "rel_residual", "err_c", "err_r"])?;
        let fmt = |v: Option<&f64>| v.map_or(String::new(), |x| format!("{x:e}"));
        for k in 0..self.rel_residual.len() {
            w.write_record([
                k.to_string(),
                self.subdomain_solves.get(k).map_or(String::new(), |s| s.to_string()),
                format!("{:e}", self.rel_residual[k]),
                fmt(self.err_c.get(k)),
                fmt(self.err_r.get(k)),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Stopping rule shared by both drivers.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopRule {
    /// Relative residual below `tol`.
    Residual,
    /// Both monitored errors below `tol`.
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub stop: StopRule,
}

impl IterOptions {
    pub fn residual(tol: f64, max_iter: usize) -> Self {
        Self { tol, max_iter, stop: StopRule::Residual }
    }

    pub fn error(tol: f64, max_iter: usize) -> Self {
        Self { tol, max_iter, stop: StopRule::Error }
    }
}

pub type Operator<'a> = &'a mut dyn FnMut(&[f64]) -> Result<Vec<f64>>;

/// Optional observers for a Krylov run.
#[derive(Default)]
pub struct Hooks<'a> {
    /// Running count of subdomain solves.
    pub solves: Option<&'a dyn Fn() -> usize>,
    /// Errors `(err_c, err_r)` of the field built from an iterate.
    pub errors: Option<&'a mut dyn FnMut(&[f64]) -> Result<(f64, f64)>>,
}

impl Hooks<'_> {
    fn record(&mut self, report: &mut SolveReport, x: Option<&[f64]>) -> Result<Option<(f64, f64)>> {
        report.subdomain_solves.push(self.solves.map_or(0, |f| f()));
        match (self.errors.as_deref_mut(), x) {
            (Some(f), Some(x)) => {
                let e = f(x)?;
                report.err_c.push(e.0);
                report.err_r.push(e.1);
                Ok(Some(e))
            }
            _ => Ok(None),
        }
    }
}

fn done(opts: &IterOptions, rel: f64, err: Option<(f64, f64)>) -> bool {
    match opts.stop {
        StopRule::Residual => rel <= opts.tol,
        StopRule::Error => err.is_some_and(|(c, r)| c < opts.tol && r < opts.tol),
    }
}

fn back_substitute(h: &[Vec<f64>], g: &[f64], k: usize) -> Vec<f64> {
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = g[i];
        for j in i + 1..k {
            s -= h[j][i] * y[j];
        }
        y[i] = s / h[i][i];
    }
    y
}

fn combine(x0: &[f64], basis: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let mut x = x0.to_vec();
    for (v, &c) in basis.iter().zip(y) {
        for (xi, vi) in x.iter_mut().zip(v) {
            *xi += c * vi;
        }
    }
    x
}

/// Full GMRES with modified Gram-Schmidt and left preconditioning.
///
/// The residual is measured in the preconditioned norm relative to `|M^-1 b|`,
/// or to the initial residual when `b = 0`.
pub fn gmres(
    apply: Operator,
    mut precond: Option<Operator>,
    rhs: &[f64],
    x0: &[f64],
    opts: &IterOptions,
    mut hooks: Hooks,
) -> Result<(Vec<f64>, SolveReport)> {
    if !(opts.tol > 0.0) {
        return Err(Error::Config(format!("tolerance {}", opts.tol)));
    }
    if rhs.len() != x0.len() {
        return Err(Error::Dimension("rhs and initial guess differ in length".into()));
    }
    let mut prec = |v: Vec<f64>| -> Result<Vec<f64>> {
        match precond.as_deref_mut() {
            Some(m) => m(&v),
            None => Ok(v),
        }
    };
    let mut report = SolveReport { method: "gmres".into(), ..Default::default() };
    let ax0 = if x0.iter().all(|&v| v == 0.0) { vec![0.0; rhs.len()] } else { apply(x0)? };
    let r0 = prec(rhs.iter().zip(&ax0).map(|(b, a)| b - a).collect())?;
    let beta = norm(&r0);
    let mb = if rhs.iter().all(|&v| v == 0.0) { 0.0 } else { norm(&prec(rhs.to_vec())?) };
    let denom = if mb > 0.0 { mb } else { beta };
    let rel0 = if denom > 0.0 { beta / denom } else { 0.0 };
    report.rel_residual.push(rel0);
    let e0 = hooks.record(&mut report, Some(x0))?;
    if beta == 0.0 || done(opts, rel0, e0) {
        report.converged = true;
        return Ok((x0.to_vec(), report));
    }

    let mut basis = vec![r0.iter().map(|v| v / beta).collect::<Vec<f64>>()];
    let mut h: Vec<Vec<f64>> = Vec::new();
    let (mut cs, mut sn): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    let mut g = vec![beta];
    for j in 0..opts.max_iter {
        let mut w = prec(apply(&basis[j])?)?;
        let wnorm0 = norm(&w);
        let mut col = vec![0.0; j + 2];
        for _pass in 0..2 {
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&w, v);
                col[i] += hij;
                for (wk, vk) in w.iter_mut().zip(v) {
                    *wk -= hij * vk;
                }
            }
        }
        let hnext = norm(&w);
        if !hnext.is_finite() || col.iter().any(|v| !v.is_finite()) {
            return Err(Error::Breakdown(j + 1));
        }
        col[j + 1] = hnext;
        for i in 0..j {
            let (a, b) = (col[i], col[i + 1]);
            col[i] = cs[i] * a + sn[i] * b;
            col[i + 1] = -sn[i] * a + cs[i] * b;
        }
        let (a, b) = (col[j], col[j + 1]);
        let rho = a.hypot(b);
        if rho == 0.0 {
            return Err(Error::Breakdown(j + 1));
        }
        cs.push(a / rho);
        sn.push(b / rho);
        col[j] = rho;
        col[j + 1] = 0.0;
        g.push(-sn[j] * g[j]);
        g[j] *= cs[j];
        h.push(col);

        let rel = g[j + 1].abs() / denom;
        report.rel_residual.push(rel);
        report.iterations = j + 1;
        let happy = hnext <= 1e-14 * wnorm0.max(f64::MIN_POSITIVE);
        let last = happy || j + 1 == opts.max_iter;
        let x = if hooks.errors.is_some() || last || opts.stop == StopRule::Residual && rel <= opts.tol {
            Some(combine(x0, &basis, &back_substitute(&h, &g, j + 1)))
        } else {
            None
        };
        let e = hooks.record(&mut report, x.as_deref())?;
        if happy || done(opts, rel, e) {
            report.converged = true;
            return Ok((x.unwrap(), report));
        }
        if last {
            return Ok((x.unwrap(), report));
        }
        basis.push(w.iter().map(|v| v / hnext).collect());
    }
    Ok((x0.to_vec(), report))
}

/// Initial guess uniform in `[-1, 1]` per entry.
pub fn random_guess(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

/// A field monitor that can be reset and queried between sweeps.
pub trait ErrorMonitor: FieldMonitor {
    fn begin(&mut self);
    /// `(err_c, err_r)` for the sweep just finished.
    fn finish(&mut self) -> (f64, f64);
}

/// Robin Jacobi iteration `x_{k+1} = Pi(outgoing(x_k, f, c0))`.
///
/// Sweep `k` solves every subdomain with `x_k`, so its fields and residual
/// `|x_{k+1} - x_k|` belong to iterate `k`. The residual is relative to
/// `|x_0|`, or to `|x_1|` when `x_0 = 0`.
pub fn jacobi_oswr(
    problem: &DdProblem,
    alpha: &RobinParams,
    x0: &[f64],
    opts: &IterOptions,
    mut monitor: Option<&mut dyn ErrorMonitor>,
) -> Result<(Vec<f64>, SolveReport)> {
    let mut report = SolveReport { method: "jacobi".into(), ..Default::default() };
    let start = problem.solve_count();
    let mut x = x0.to_vec();
    let mut denom = norm(x0);
    for k in 0..=opts.max_iter {
        if let Some(m) = monitor.as_deref_mut() {
            m.begin();
        }
        let next = problem.robin_exchange(
            &x,
            alpha,
            false,
            true,
            monitor.as_deref_mut().map(|m| m as &mut dyn FieldMonitor),
        )?;
        let diff: Vec<f64> = next.iter().zip(&x).map(|(a, b)| a - b).collect();
        if denom == 0.0 {
            denom = norm(&next);
        }
        let rel = if denom > 0.0 { norm(&diff) / denom } else { 0.0 };
        report.rel_residual.push(rel);
        report.subdomain_solves.push(problem.solve_count() - start);
        let err = monitor.as_deref_mut().map(|m| m.finish());
        if let Some((c, r)) = err {
            report.err_c.push(c);
            report.err_r.push(r);
        }
        report.iterations = k;
        if done(opts, rel, err) {
            report.converged = true;
            return Ok((x, report));
        }
        if !rel.is_finite() || rel > 1e6 * report.rel_residual[0].max(f64::MIN_POSITIVE) {
            return Err(Error::Diverged { iterations: k, residual: rel });
        }
        if k == opts.max_iter {
            break;
        }
        x = next;
    }
    Ok((x, report))
}

/// Summary of a reference solution on a partition `Q` refining every
/// subdomain grid: slab means per subdomain plus the within-slab spread.
#[derive(Debug, Clone)]
pub struct ReferenceSummary {
    pub partition: Arc<TimePartition>,
    zero: bool,
    c_mean: Vec<Vec<f64>>,
    r_mean: Vec<Vec<f64>>,
    spread_c: f64,
    spread_r: f64,
    norm_c: f64,
    norm_r: f64,
}

/// Merged partition of several partitions on the same `(0, T]`.
pub fn merged_partition(parts: &[&TimePartition]) -> Result<TimePartition> {
    let t = parts[0].final_time();
    let mut all: Vec<f64> = parts.iter().flat_map(|p| p.bounds().iter().copied()).collect();
    all.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(all.len());
    for v in all {
        if out.last().is_none_or(|&l| v - l > TIME_TOL * t) {
            out.push(v);
        }
    }
    *out.last_mut().unwrap() = t;
    TimePartition::new(out)
}

impl ReferenceSummary {
    /// The zero solution, as used by the homogeneous convergence studies.
    pub fn zero(problem: &DdProblem) -> Result<Self> {
        let parts: Vec<&TimePartition> = problem.partitions.iter().map(|p| &**p).collect();
        Ok(Self {
            partition: Arc::new(merged_partition(&parts)?),
            zero: true,
            c_mean: Vec::new(),
            r_mean: Vec::new(),
            spread_c: 0.0,
            spread_r: 0.0,
            norm_c: 0.0,
            norm_r: 0.0,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    /// `(int |c|^2 dt, int |r|^2 dt)` of the reference over all subdomains.
    pub fn norms_sq(&self) -> (f64, f64) {
        (self.norm_c, self.norm_r)
    }

    /// March the monodomain problem on `fine` and compress it onto `q`.
    pub fn from_monodomain(problem: &DdProblem, q: Arc<TimePartition>, fine: &TimePartition) -> Result<Self> {
        let slab_of = ref_to_q(fine, &q)?;
        let system = problem.monodomain_system()?;
        let n = problem.n_subdomains();
        let nq = q.n_slabs();
        let mut c_mean: Vec<Vec<f64>> = (0..n).map(|i| vec![0.0; nq * problem.systems[i].n_cells()]).collect();
        let mut r_mean: Vec<Vec<f64>> = (0..n).map(|i| vec![0.0; nq * problem.systems[i].n_edges()]).collect();
        let mut weight = vec![0.0; nq];
        let (mut spread_c, mut spread_r, mut norm_c, mut norm_r) = (0.0, 0.0, 0.0, 0.0);
        problem.solve_monodomain_streaming(&system, fine, &mut |m, c, r| {
            let dt = fine.dt(m);
            let j = slab_of[m];
            let w_old = weight[j];
            let w_new = w_old + dt;
            weight[j] = w_new;
            for i in 0..n {
                let sys = &problem.systems[i];
                let (ci, ri) = problem.restrict(i, c, r);
                norm_c += dt * cell_norm_sq(sys, &ci, false);
                norm_r += dt * flux_norm_sq(sys, &ri);
                let (nc, ne) = (sys.n_cells(), sys.n_edges());
                let cm = &mut c_mean[i][j * nc..(j + 1) * nc];
                let dc_old: Vec<f64> = ci.iter().zip(cm.iter()).map(|(x, m)| x - m).collect();
                for (mv, d) in cm.iter_mut().zip(&dc_old) {
                    *mv += dt / w_new * d;
                }
                let dc_new: Vec<f64> = ci.iter().zip(cm.iter()).map(|(x, m)| x - m).collect();
                spread_c += dt * sys.cell_areas().iter().zip(dc_old.iter().zip(&dc_new)).map(|(a, (u, v))| a * u * v).sum::<f64>();
                let rm = &mut r_mean[i][j * ne..(j + 1) * ne];
                let dr_old: Vec<f64> = ri.iter().zip(rm.iter()).map(|(x, m)| x - m).collect();
                for (mv, d) in rm.iter_mut().zip(&dr_old) {
                    *mv += dt / w_new * d;
                }
                let dr_new: Vec<f64> = ri.iter().zip(rm.iter()).map(|(x, m)| x - m).collect();
                let mass = sys.unit_flux_mass();
                spread_r += dt * (0..ne).map(|e| dr_new[e] * mass.row_dot(e, &dr_old)).sum::<f64>();
            }
        })?;
        Ok(Self {
            partition: q,
            zero: false,
            c_mean,
            r_mean,
            spread_c,
            spread_r,
            norm_c,
            norm_r,
        })
    }

    /// Summary of a stored reference split per subdomain (for tests and small cases).
    pub fn from_fields(problem: &DdProblem, q: Arc<TimePartition>, fields: &[SpaceTimeField]) -> Result<Self> {
        let fine = fields[0].partition.clone();
        let slab_of = ref_to_q(&fine, &q)?;
        let n = problem.n_subdomains();
        let nq = q.n_slabs();
        let mut c_mean: Vec<Vec<f64>> = (0..n).map(|i| vec![0.0; nq * fields[i].n_cells]).collect();
        let mut r_mean: Vec<Vec<f64>> = (0..n).map(|i| vec![0.0; nq * fields[i].n_edges]).collect();
        let (mut norm_c, mut norm_r) = (0.0, 0.0);
        for m in 0..fine.n_slabs() {
            let dt = fine.dt(m);
            let j = slab_of[m];
            let frac = dt / q.dt(j);
            for i in 0..n {
                let sys = &problem.systems[i];
                let (c, r) = (fields[i].c_slab(m), fields[i].r_slab(m));
                norm_c += dt * cell_norm_sq(sys, c, false);
                norm_r += dt * flux_norm_sq(sys, r);
                let nc = c.len();
                for (mv, v) in c_mean[i][j * nc..(j + 1) * nc].iter_mut().zip(c) {
                    *mv += frac * v;
                }
                let ne = r.len();
                for (mv, v) in r_mean[i][j * ne..(j + 1) * ne].iter_mut().zip(r) {
                    *mv += frac * v;
                }
            }
        }
        let mut spread_c = norm_c;
        let mut spread_r = norm_r;
        for j in 0..nq {
            for i in 0..n {
                let sys = &problem.systems[i];
                let nc = sys.n_cells();
                let ne = sys.n_edges();
                spread_c -= q.dt(j) * cell_norm_sq(sys, &c_mean[i][j * nc..(j + 1) * nc], false);
                spread_r -= q.dt(j) * flux_norm_sq(sys, &r_mean[i][j * ne..(j + 1) * ne]);
            }
        }
        Ok(Self {
            partition: q,
            zero: false,
            c_mean,
            r_mean,
            spread_c: spread_c.max(0.0),
            spread_r: spread_r.max(0.0),
            norm_c,
            norm_r,
        })
    }
}

fn ref_to_q(fine: &TimePartition, q: &TimePartition) -> Result<Vec<usize>> {
    let mut slab_of = vec![usize::MAX; fine.n_slabs()];
    for (m, j, w) in overlaps(fine, q)? {
        if slab_of[m] != usize::MAX && slab_of[m] != j && w > TIME_TOL * fine.final_time() {
            return Err(Error::TimeGrid("reference grid does not refine the summary grid".into()));
        }
        if slab_of[m] == usize::MAX {
            slab_of[m] = j;
        }
    }
    Ok(slab_of)
}

/// Streams subdomain slabs and accumulates `L2(0,T;L2)` errors against a reference summary.
pub struct ErrorAccumulator<'a> {
    problem: &'a DdProblem,
    reference: &'a ReferenceSummary,
    pieces: Vec<Vec<Vec<(usize, f64)>>>,
    per_q_c: Vec<f64>,
    sum_c: f64,
    sum_r: f64,
    relative: bool,
}

impl<'a> ErrorAccumulator<'a> {
    pub fn new(problem: &'a DdProblem, reference: &'a ReferenceSummary) -> Result<Self> {
        let q = &reference.partition;
        let mut pieces = Vec::with_capacity(problem.n_subdomains());
        for p in &problem.partitions {
            let mut per: Vec<Vec<(usize, f64)>> = vec![Vec::new(); p.n_slabs()];
            let mut seen = vec![usize::MAX; q.n_slabs()];
            for (m, j, w) in overlaps(p, q)? {
                if w <= TIME_TOL * q.final_time() {
                    continue;
                }
                if seen[j] != usize::MAX && seen[j] != m {
                    return Err(Error::TimeGrid("summary grid does not refine a subdomain grid".into()));
                }
                seen[j] = m;
                per[m].push((j, w));
            }
            pieces.push(per);
        }
        Ok(Self {
            problem,
            reference,
            pieces,
            per_q_c: vec![0.0; q.n_slabs()],
            sum_c: 0.0,
            sum_r: 0.0,
            relative: true,
        })
    }

    /// Report absolute errors even when the reference is nonzero.
    pub fn absolute(mut self) -> Self {
        self.relative = false;
        self
    }

    /// `(err_c, err_r)` in `L2(0,T;L2)`, relative to the reference norm when it is nonzero.
    pub fn l2_errors(&self) -> (f64, f64) {
        let refs = self.reference;
        let c = (self.sum_c + refs.spread_c).max(0.0).sqrt();
        let r = (self.sum_r + refs.spread_r).max(0.0).sqrt();
        if refs.zero || !self.relative {
            (c, r)
        } else {
            (c / refs.norm_c.sqrt(), r / refs.norm_r.sqrt())
        }
    }

    /// Largest `L2` error in `c` over the summary slabs.
    pub fn linf_c(&self) -> f64 {
        let m = self.per_q_c.iter().cloned().fold(0.0, f64::max).sqrt();
        if self.reference.zero || !self.relative {
            m
        } else {
            m / (self.reference.norm_c / self.reference.partition.final_time()).sqrt()
        }
    }
}

impl FieldMonitor for ErrorAccumulator<'_> {
    fn observe(&mut self, sub: usize, slab: usize, c: &[f64], r: &[f64]) {
        let sys: &SubdomainSystem = &self.problem.systems[sub];
        for &(j, w) in &self.pieces[sub][slab] {
            let (ec, er) = if self.reference.zero {
                (cell_norm_sq(sys, c, false), flux_norm_sq(sys, r))
            } else {
                let (nc, ne) = (c.len(), r.len());
                let cm = &self.reference.c_mean[sub][j * nc..(j + 1) * nc];
                let rm = &self.reference.r_mean[sub][j * ne..(j + 1) * ne];
                let dc: Vec<f64> = c.iter().zip(cm).map(|(a, b)| a - b).collect();
                let dr: Vec<f64> = r.iter().zip(rm).map(|(a, b)| a - b).collect();
                (cell_norm_sq(sys, &dc, false), flux_norm_sq(sys, &dr))
            };
            self.per_q_c[j] += ec;
            self.sum_c += w * ec;
            self.sum_r += w * er;
        }
    }
}

impl ErrorMonitor for ErrorAccumulator<'_> {
    fn begin(&mut self) {
        self.per_q_c.iter_mut().for_each(|v| *v = 0.0);
        self.sum_c = 0.0;
        self.sum_r = 0.0;
    }

    fn finish(&mut self) -> (f64, f64) {
        (self.linf_c(), self.l2_errors().1)
    }
}

/// Relative `L2(0,T;L2)` errors of per-subdomain fields against a stored monodomain
/// reference on a refinement of every subdomain grid.
pub fn error_norms(problem: &DdProblem, fields: &[SpaceTimeField], reference: &SpaceTimeField) -> Result<(f64, f64)> {
    if fields.len() != problem.n_subdomains() || reference.n_cells != problem.mesh.n_cells() {
        return Err(Error::Dimension("fields do not match the decomposition".into()));
    }
    let (mut ec, mut er, mut nc, mut nr) = (0.0, 0.0, 0.0, 0.0);
    for (i, f) in fields.iter().enumerate() {
        let sys = &problem.systems[i];
        if f.n_cells != sys.n_cells() || f.n_edges != sys.n_edges() {
            return Err(Error::Dimension(format!("field {i} has the wrong shape")));
        }
        for (m, n, w) in overlaps(&f.partition, &reference.partition)? {
            let (rc, rr) = problem.restrict(i, reference.c_slab(n), reference.r_slab(n));
            let dc: Vec<f64> = f.c_slab(m).iter().zip(&rc).map(|(a, b)| a - b).collect();
            let dr: Vec<f64> = f.r_slab(m).iter().zip(&rr).map(|(a, b)| a - b).collect();
            ec += w * cell_norm_sq(sys, &dc, false);
            er += w * flux_norm_sq(sys, &dr);
            nc += w * cell_norm_sq(sys, &rc, false);
            nr += w * flux_norm_sq(sys, &rr);
        }
    }
    let rel = |e: f64, n: f64| if n > 0.0 { (e / n).sqrt() } else { e.sqrt() };
    Ok((rel(ec, nc), rel(er, nr)))
}

/// Zero-error-reference helper: errors of the subdomain fields built from an
/// interface vector with homogeneous data.
pub fn homogeneous_errors(
    problem: &DdProblem,
    reference: &ReferenceSummary,
    build: &dyn Fn(&mut dyn FieldMonitor) -> Result<()>,
) -> Result<(f64, f64, f64)> {
    let mut acc = ErrorAccumulator::new(problem, reference)?;
    build(&mut acc)?;
    let (c, r) = acc.l2_errors();
    Ok((c, r, acc.linf_c()))
}
