//! Multidomain problem and the matrix-free interface operators of both methods.
//!
//! Method 1 unknown: one concentration value per (interface, slab of the
//! interface's lambda partition, edge). Method 2 unknown: one Robin value per
//! (interface, side, slab of that side's partition, edge), where side 0 is the
//! datum seen by `Interface::first`.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{decompose, Decomposition, Rect, RectMesh, Side};
use crate::mixedfem::{
    BcKind, BoundarySpec, CellCoefficients, Forcing, SpaceTimeField, SubdomainSystem,
};
use crate::timegrid::{Projection, TimePartition};

/// Condition on one outer side of the domain, constant in time.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum OuterBc {
    Dirichlet(f64),
    Neumann(f64),
}

impl OuterBc {
    fn kind(self) -> BcKind {
        match self {
            OuterBc::Dirichlet(_) => BcKind::Dirichlet,
            OuterBc::Neumann(_) => BcKind::Neumann,
        }
    }

    fn value(self) -> f64 {
        match self {
            OuterBc::Dirichlet(v) | OuterBc::Neumann(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OuterBoundary {
    pub left: OuterBc,
    pub right: OuterBc,
    pub bottom: OuterBc,
    pub top: OuterBc,
}

impl OuterBoundary {
    pub fn get(&self, side: Side) -> OuterBc {
        match side {
            Side::Left => self.left,
            Side::Right => self.right,
            Side::Bottom => self.bottom,
            Side::Top => self.top,
        }
    }

    pub fn dirichlet_zero() -> Self {
        let d = OuterBc::Dirichlet(0.0);
        Self { left: d, right: d, bottom: d, top: d }
    }
}

/// Initial concentration `c0(x, y)`, sampled at cell centres.
#[derive(Clone, Default)]
pub enum InitialData {
    #[default]
    Zero,
    Field(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl InitialData {
    pub fn new(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        InitialData::Field(Arc::new(f))
    }

    pub fn sample(&self, mesh: &RectMesh) -> Vec<f64> {
        match self {
            InitialData::Zero => vec![0.0; mesh.n_cells()],
            InitialData::Field(f) => (0..mesh.n_cells())
                .map(|k| {
                    let (x, y) = mesh.cell_centre(k);
                    f(x, y)
                })
                .collect(),
        }
    }
}

impl std::fmt::Debug for InitialData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitialData::Zero => write!(f, "InitialData::Zero"),
            InitialData::Field(_) => write!(f, "InitialData::Field(..)"),
        }
    }
}

/// Which time partition carries the Method 1 unknown on each interface.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum LambdaChoice {
    /// Side with the larger diffusion; ties go to the higher-numbered subdomain.
    #[default]
    LargerDiffusion,
    HigherNumbered,
    LowerNumbered,
    /// One explicit partition shared by every interface.
    Explicit(TimePartition),
}

/// Everything needed to set up a decomposed problem.
#[derive(Debug, Clone)]
pub struct ProblemDef {
    pub mesh: RectMesh,
    pub boxes: Vec<Rect>,
    pub porosity: Vec<f64>,
    pub diffusion: Vec<f64>,
    pub partitions: Vec<TimePartition>,
    pub outer: OuterBoundary,
    pub c0: InitialData,
    pub forcing: Forcing,
    pub lambda: LambdaChoice,
}

/// Robin parameter pair per interface: `(alpha_first, alpha_second)`, where
/// `alpha_first` enters the condition imposed on `Interface::first`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RobinParams {
    pub pairs: Vec<(f64, f64)>,
}

impl RobinParams {
    pub fn uniform(n_interfaces: usize, alpha: f64) -> Self {
        Self { pairs: vec![(alpha, alpha); n_interfaces] }
    }

    pub fn alpha(&self, interface: usize, side: usize) -> f64 {
        let p = self.pairs[interface];
        if side == 0 {
            p.0
        } else {
            p.1
        }
    }

    pub fn validate(&self, n_interfaces: usize) -> Result<()> {
        if self.pairs.len() != n_interfaces {
            return Err(Error::Dimension(format!(
                "{} Robin pairs for {n_interfaces} interfaces",
                self.pairs.len()
            )));
        }
        for &(a, b) in &self.pairs {
            if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                return Err(Error::Coefficient(format!("Robin parameters ({a}, {b})")));
            }
        }
        Ok(())
    }
}

/// Receives each subdomain slab produced during a run.
pub trait FieldMonitor {
    fn observe(&mut self, sub: usize, slab: usize, c: &[f64], r: &[f64]);
}

/// Collects full fields per subdomain.
#[derive(Debug, Clone)]
pub struct FieldCollector {
    pub fields: Vec<SpaceTimeField>,
}

impl FieldCollector {
    pub fn new(problem: &DdProblem) -> Self {
        let fields = (0..problem.n_subdomains())
            .map(|i| {
                let s = &problem.systems[i];
                SpaceTimeField::zeros(problem.partitions[i].clone(), s.n_cells(), s.n_edges())
            })
            .collect();
        Self { fields }
    }
}

impl FieldMonitor for FieldCollector {
    fn observe(&mut self, sub: usize, slab: usize, c: &[f64], r: &[f64]) {
        self.fields[sub].set_slab(slab, c, r);
    }
}

#[derive(Debug, Clone)]
struct SubInfo {
    cell_map: Vec<usize>,
    edge_map: Vec<usize>,
    spec_edges: Vec<usize>,
    outer_slots: Vec<(usize, OuterBc)>,
    iface_slots: Vec<Vec<usize>>,
    iface_edges: Vec<Vec<usize>>,
    iface_sign: Vec<f64>,
    c0: Vec<f64>,
}

/// Projections attached to one interface.
#[derive(Debug, Clone)]
struct IfaceProj {
    lambda_to_side: [Projection; 2],
    side_to_lambda: [Projection; 2],
    /// `[first -> second, second -> first]`.
    cross: [Projection; 2],
}

/// Traces a subdomain solve leaves on its interfaces, slab-major on its own partition.
#[derive(Debug, Clone)]
pub struct LocalTraces {
    /// Outward normal flux `r_i . n_i`.
    pub flux: Vec<Vec<f64>>,
    /// Hybrid concentration trace.
    pub conc: Vec<Vec<f64>>,
}

/// Decomposed problem with assembled subdomain systems.
#[derive(Debug)]
pub struct DdProblem {
    pub mesh: RectMesh,
    pub decomposition: Decomposition,
    pub porosity: Vec<f64>,
    pub diffusion: Vec<f64>,
    pub systems: Vec<SubdomainSystem>,
    pub partitions: Vec<Arc<TimePartition>>,
    pub lambda_partitions: Vec<Arc<TimePartition>>,
    pub outer: OuterBoundary,
    pub c0: InitialData,
    pub forcing: Forcing,
    info: Vec<SubInfo>,
    proj: Vec<IfaceProj>,
    lambda_offsets: Vec<usize>,
    robin_offsets: Vec<[usize; 2]>,
    solves: AtomicUsize,
}

impl DdProblem {
    pub fn new(def: ProblemDef) -> Result<Self> {
        let decomposition = decompose(&def.mesh, &def.boxes)?;
        let n = decomposition.n_subdomains();
        if def.porosity.len() != n || def.diffusion.len() != n || def.partitions.len() != n {
            return Err(Error::Scenario(format!(
                "{n} subdomains but {} porosities, {} diffusions, {} partitions",
                def.porosity.len(),
                def.diffusion.len(),
                def.partitions.len()
            )));
        }
        let t_final = def.partitions[0].final_time();
        for p in &def.partitions {
            if (p.final_time() - t_final).abs() > 1e-12 * t_final {
                return Err(Error::FinalTimeMismatch(t_final, p.final_time()));
            }
        }
        let partitions: Vec<Arc<TimePartition>> = def.partitions.into_iter().map(Arc::new).collect();
        let mut systems = Vec::with_capacity(n);
        let mut info = Vec::with_capacity(n);
        for (i, sub) in decomposition.subdomains.iter().enumerate() {
            let local = sub.mesh.clone();
            let coeffs = CellCoefficients::uniform(local.n_cells(), def.porosity[i], def.diffusion[i]);
            let sys = SubdomainSystem::assemble(local, coeffs).map_err(Error::at("assemble"))?;
            let m = sys.mesh();
            let cell_map = (0..m.n_cells()).map(|k| sub.global_cell(&def.mesh, k)).collect();
            let edge_map: Vec<usize> = (0..m.n_edges()).map(|e| sub.global_edge(&def.mesh, e)).collect();
            let spec_edges: Vec<usize> = (0..m.n_edges()).filter(|&e| m.boundary_side(e).is_some()).collect();
            let mut slot_of = vec![usize::MAX; m.n_edges()];
            for (s, &e) in spec_edges.iter().enumerate() {
                slot_of[e] = s;
            }
            let mut on_iface = vec![false; m.n_edges()];
            let mut iface_slots = Vec::new();
            let mut iface_edges = Vec::new();
            let mut iface_sign = Vec::new();
            for &k in &sub.interfaces {
                let g = &decomposition.interfaces[k];
                let edges = g.local_edges(i).to_vec();
                for &e in &edges {
                    on_iface[e] = true;
                }
                iface_slots.push(edges.iter().map(|&e| slot_of[e]).collect());
                iface_edges.push(edges);
                iface_sign.push(g.sign(i));
            }
            let mut outer_slots = Vec::new();
            for (s, &e) in spec_edges.iter().enumerate() {
                if !on_iface[e] {
                    let side = def.mesh.boundary_side(edge_map[e]).ok_or_else(|| {
                        Error::Decomposition(format!("subdomain {i}: edge {e} is neither interface nor outer"))
                    })?;
                    outer_slots.push((s, def.outer.get(side)));
                }
            }
            let c0 = def.c0.sample(m);
            info.push(SubInfo {
                cell_map,
                edge_map,
                spec_edges,
                outer_slots,
                iface_slots,
                iface_edges,
                iface_sign,
                c0,
            });
            systems.push(sys);
        }

        let mut lambda_partitions = Vec::new();
        let mut proj = Vec::new();
        let mut lambda_offsets = vec![0];
        let mut robin_offsets = Vec::new();
        let mut robin_len = 0;
        for g in &decomposition.interfaces {
            let (a, b) = (g.first, g.second);
            let lam = match &def.lambda {
                LambdaChoice::LargerDiffusion => {
                    if def.diffusion[a] > def.diffusion[b] {
                        partitions[a].clone()
                    } else {
                        partitions[b].clone()
                    }
                }
                LambdaChoice::HigherNumbered => partitions[b].clone(),
                LambdaChoice::LowerNumbered => partitions[a].clone(),
                LambdaChoice::Explicit(p) => Arc::new(p.clone()),
            };
            let (pa, pb) = (&partitions[a], &partitions[b]);
            proj.push(IfaceProj {
                lambda_to_side: [Projection::new(&lam, pa)?, Projection::new(&lam, pb)?],
                side_to_lambda: [Projection::new(pa, &lam)?, Projection::new(pb, &lam)?],
                cross: [Projection::new(pa, pb)?, Projection::new(pb, pa)?],
            });
            let ne = g.n_edges();
            lambda_offsets.push(lambda_offsets.last().unwrap() + lam.n_slabs() * ne);
            lambda_partitions.push(lam);
            let first = robin_len;
            robin_len += pa.n_slabs() * ne;
            let second = robin_len;
            robin_len += pb.n_slabs() * ne;
            robin_offsets.push([first, second]);
        }
        robin_offsets.push([robin_len, robin_len]);

        Ok(Self {
            mesh: def.mesh,
            decomposition,
            porosity: def.porosity,
            diffusion: def.diffusion,
            systems,
            partitions,
            lambda_partitions,
            outer: def.outer,
            c0: def.c0,
            forcing: def.forcing,
            info,
            proj,
            lambda_offsets,
            robin_offsets,
            solves: AtomicUsize::new(0),
        })
    }

    pub fn n_subdomains(&self) -> usize {
        self.systems.len()
    }

    pub fn n_interfaces(&self) -> usize {
        self.decomposition.interfaces.len()
    }

    pub fn final_time(&self) -> f64 {
        self.partitions[0].final_time()
    }

    /// Counted subdomain solves so far.
    pub fn solve_count(&self) -> usize {
        self.solves.load(Ordering::Relaxed)
    }

    pub fn reset_solve_count(&self) {
        self.solves.store(0, Ordering::Relaxed);
    }

    pub fn lambda_len(&self) -> usize {
        *self.lambda_offsets.last().unwrap()
    }

    pub fn robin_len(&self) -> usize {
        self.robin_offsets.last().unwrap()[0]
    }

    /// Range of interface `k` in a Method 1 vector.
    pub fn lambda_range(&self, k: usize) -> std::ops::Range<usize> {
        self.lambda_offsets[k]..self.lambda_offsets[k + 1]
    }

    /// Range of the datum on `side` (0 = first) of interface `k` in a Method 2 vector.
    pub fn robin_range(&self, k: usize, side: usize) -> std::ops::Range<usize> {
        let start = self.robin_offsets[k][side];
        let end = if side == 0 {
            self.robin_offsets[k][1]
        } else {
            self.robin_offsets[k + 1][0]
        };
        start..end
    }

    /// Local-to-global cell map of subdomain `i`.
    pub fn cell_map(&self, i: usize) -> &[usize] {
        &self.info[i].cell_map
    }

    /// Local-to-global edge map of subdomain `i`.
    pub fn edge_map(&self, i: usize) -> &[usize] {
        &self.info[i].edge_map
    }

    /// Local edges of subdomain `i` on its `l`-th interface, in interface order.
    pub fn interface_edges(&self, i: usize, l: usize) -> &[usize] {
        &self.info[i].iface_edges[l]
    }

    pub fn initial_data(&self, i: usize) -> &[f64] {
        &self.info[i].c0
    }

    fn side_of(&self, k: usize, i: usize) -> usize {
        usize::from(self.decomposition.interfaces[k].first != i)
    }

    fn spec(&self, i: usize, kinds: &[BcKind]) -> Result<BoundarySpec> {
        let inf = &self.info[i];
        let mut all = vec![BcKind::Dirichlet; inf.spec_edges.len()];
        for &(s, bc) in &inf.outer_slots {
            all[s] = bc.kind();
        }
        for (l, slots) in inf.iface_slots.iter().enumerate() {
            for &s in slots {
                all[s] = kinds[l];
            }
        }
        BoundarySpec::new(self.systems[i].mesh(), inf.spec_edges.clone(), all)
    }

    /// Solve subdomain `i` with one condition kind per local interface and the
    /// matching data on its own partition. `homogeneous` zeroes `f`, `c0` and outer data.
    pub fn solve_local(
        &self,
        i: usize,
        kinds: &[BcKind],
        data: &[&[f64]],
        homogeneous: bool,
        count: bool,
        monitor: Option<&mut dyn FieldMonitor>,
    ) -> Result<LocalTraces> {
        let inf = &self.info[i];
        let sys = &self.systems[i];
        let part = &self.partitions[i];
        let n_if = inf.iface_edges.len();
        if kinds.len() != n_if || data.len() != n_if {
            return Err(Error::Dimension(format!("subdomain {i} has {n_if} interfaces")));
        }
        for (l, d) in data.iter().enumerate() {
            if d.len() != part.n_slabs() * inf.iface_edges[l].len() {
                return Err(Error::Dimension(format!(
                    "subdomain {i} interface {l}: {} values",
                    d.len()
                )));
            }
        }
        let spec = self.spec(i, kinds)?;
        let zero_c0;
        let (c0, forcing) = if homogeneous {
            zero_c0 = vec![0.0; sys.n_cells()];
            (&zero_c0[..], &Forcing::Zero)
        } else {
            (&inf.c0[..], &self.forcing)
        };
        let mut flux: Vec<Vec<f64>> = inf.iface_edges.iter().map(|e| vec![0.0; e.len() * part.n_slabs()]).collect();
        let mut conc = flux.clone();
        let mut supply = |m: usize, out: &mut [f64]| {
            for &(s, bc) in &inf.outer_slots {
                out[s] = if homogeneous { 0.0 } else { bc.value() };
            }
            for (l, slots) in inf.iface_slots.iter().enumerate() {
                let n = slots.len();
                for (q, &s) in slots.iter().enumerate() {
                    out[s] = data[l][m * n + q];
                }
            }
        };
        let mut monitor = monitor;
        let mut observe = |m: usize, c: &[f64], r: &[f64]| {
            for (l, edges) in inf.iface_edges.iter().enumerate() {
                let n = edges.len();
                let sign = inf.iface_sign[l];
                for (q, &e) in edges.iter().enumerate() {
                    flux[l][m * n + q] = sign * r[e];
                    conc[l][m * n + q] = sys.hybrid_trace(e, c, r);
                }
            }
            if let Some(mon) = monitor.as_deref_mut() {
                mon.observe(i, m, c, r);
            }
        };
        sys.march(&spec, part, c0, forcing, &mut supply, &mut observe)
            .map_err(Error::at("subdomain solve"))?;
        if count {
            self.solves.fetch_add(1, Ordering::Relaxed);
        }
        Ok(LocalTraces { flux, conc })
    }

    fn lambda_data(&self, i: usize, lambda: &[f64]) -> Vec<Vec<f64>> {
        self.decomposition.subdomains[i]
            .interfaces
            .iter()
            .map(|&k| {
                let ne = self.decomposition.interfaces[k].n_edges();
                self.proj[k].lambda_to_side[self.side_of(k, i)].apply(&lambda[self.lambda_range(k)], ne)
            })
            .collect()
    }

    /// Flux sum `sum_i Pi(r_i . n_i)` on the lambda partitions for Dirichlet data `lambda`.
    fn dirichlet_flux_sum(
        &self,
        lambda: &[f64],
        homogeneous: bool,
        count: bool,
        mut monitor: Option<&mut dyn FieldMonitor>,
    ) -> Result<Vec<f64>> {
        if lambda.len() != self.lambda_len() {
            return Err(Error::Dimension(format!(
                "lambda has {} values, expected {}",
                lambda.len(),
                self.lambda_len()
            )));
        }
        let mut out = vec![0.0; self.lambda_len()];
        for i in 0..self.n_subdomains() {
            let data = self.lambda_data(i, lambda);
            let refs: Vec<&[f64]> = data.iter().map(|d| &d[..]).collect();
            let kinds = vec![BcKind::Dirichlet; refs.len()];
            let tr = self.solve_local(i, &kinds, &refs, homogeneous, count, monitor.as_deref_mut().map(|m| m as &mut dyn FieldMonitor))?;
            for (l, &k) in self.decomposition.subdomains[i].interfaces.iter().enumerate() {
                let ne = self.decomposition.interfaces[k].n_edges();
                let back = self.proj[k].side_to_lambda[self.side_of(k, i)].apply(&tr.flux[l], ne);
                for (o, v) in out[self.lambda_range(k)].iter_mut().zip(back) {
                    *o += v;
                }
            }
        }
        Ok(out)
    }

    /// Steklov-Poincare action `S lambda = -sum_i Pi(r_i(lambda, 0, 0) . n_i)`.
    pub fn apply_s(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        let mut v = self.dirichlet_flux_sum(lambda, true, true, None)?;
        v.iter_mut().for_each(|x| *x = -*x);
        Ok(v)
    }

    /// Right-hand side `chi = sum_i Pi(r_i(0, f, c0) . n_i)`.
    pub fn compute_chi(&self) -> Result<Vec<f64>> {
        let zero = vec![0.0; self.lambda_len()];
        self.dirichlet_flux_sum(&zero, false, true, None)
    }

    /// Weight of subdomain `i` on interface `k`: `d_i^2 / (d_i^2 + d_j^2)`.
    pub fn nn_weight(&self, k: usize, i: usize) -> f64 {
        let j = self.decomposition.interfaces[k].other(i);
        let (a, b) = (self.diffusion[i].powi(2), self.diffusion[j].powi(2));
        a / (a + b)
    }

    /// Weighted Neumann-Neumann preconditioner `sum_i sigma_i S_i^{-1}`.
    pub fn apply_nn(&self, residual: &[f64]) -> Result<Vec<f64>> {
        self.apply_nn_on(residual, None)
    }

    /// Preconditioner restricted to the given subdomains (all when `None`), unweighted
    /// when a single subdomain is selected.
    pub fn apply_nn_on(&self, residual: &[f64], only: Option<&[usize]>) -> Result<Vec<f64>> {
        if residual.len() != self.lambda_len() {
            return Err(Error::Dimension("residual length".into()));
        }
        let mut out = vec![0.0; self.lambda_len()];
        let subs: Vec<usize> = only.map_or_else(|| (0..self.n_subdomains()).collect(), |s| s.to_vec());
        let weighted = only.is_none_or(|s| s.len() > 1);
        for &i in &subs {
            let ifaces = &self.decomposition.subdomains[i].interfaces;
            let data: Vec<Vec<f64>> = self
                .lambda_data(i, residual)
                .into_iter()
                .map(|d| d.into_iter().map(|x| -x).collect())
                .collect();
            let refs: Vec<&[f64]> = data.iter().map(|d| &d[..]).collect();
            let kinds = vec![BcKind::Neumann; ifaces.len()];
            let tr = self.solve_local(i, &kinds, &refs, true, true, None)?;
            for (l, &k) in ifaces.iter().enumerate() {
                let ne = self.decomposition.interfaces[k].n_edges();
                let back = self.proj[k].side_to_lambda[self.side_of(k, i)].apply(&tr.conc[l], ne);
                let w = if weighted { self.nn_weight(k, i) } else { 1.0 };
                for (o, v) in out[self.lambda_range(k)].iter_mut().zip(back) {
                    *o += w * v;
                }
            }
        }
        Ok(out)
    }

    fn robin_data<'a>(&self, i: usize, xi: &'a [f64]) -> Vec<&'a [f64]> {
        self.decomposition.subdomains[i]
            .interfaces
            .iter()
            .map(|&k| &xi[self.robin_range(k, self.side_of(k, i))])
            .collect()
    }

    fn robin_kinds(&self, i: usize, alpha: &RobinParams) -> Vec<BcKind> {
        self.decomposition.subdomains[i]
            .interfaces
            .iter()
            .map(|&k| BcKind::Robin(alpha.alpha(k, self.side_of(k, i))))
            .collect()
    }

    /// Outgoing Robin data `Pi(r_i . n_i + alpha_{j,i} c_i)` sent to every neighbor,
    /// assembled in Method 2 layout.
    pub fn robin_exchange(
        &self,
        xi: &[f64],
        alpha: &RobinParams,
        homogeneous: bool,
        count: bool,
        mut monitor: Option<&mut dyn FieldMonitor>,
    ) -> Result<Vec<f64>> {
        if xi.len() != self.robin_len() {
            return Err(Error::Dimension(format!(
                "Robin vector has {} values, expected {}",
                xi.len(),
                self.robin_len()
            )));
        }
        alpha.validate(self.n_interfaces())?;
        let mut out = vec![0.0; self.robin_len()];
        for i in 0..self.n_subdomains() {
            let data = self.robin_data(i, xi);
            let kinds = self.robin_kinds(i, alpha);
            let tr = self.solve_local(i, &kinds, &data, homogeneous, count, monitor.as_deref_mut().map(|m| m as &mut dyn FieldMonitor))?;
            for (l, &k) in self.decomposition.subdomains[i].interfaces.iter().enumerate() {
                let side = self.side_of(k, i);
                let other = 1 - side;
                let a_other = alpha.alpha(k, other);
                let ne = self.decomposition.interfaces[k].n_edges();
                let outgoing: Vec<f64> = tr.flux[l].iter().zip(&tr.conc[l]).map(|(f, c)| f + a_other * c).collect();
                let projected = self.proj[k].cross[side].apply(&outgoing, ne);
                out[self.robin_range(k, other)].copy_from_slice(&projected);
            }
        }
        Ok(out)
    }

    /// Robin-to-Robin action `S_R xi = xi - Pi(outgoing(xi, 0, 0))`.
    pub fn apply_sr(&self, xi: &[f64], alpha: &RobinParams) -> Result<Vec<f64>> {
        let g = self.robin_exchange(xi, alpha, true, true, None)?;
        Ok(xi.iter().zip(g).map(|(x, g)| x - g).collect())
    }

    /// Right-hand side `chi_R = Pi(outgoing(0, f, c0))`.
    pub fn compute_chi_r(&self, alpha: &RobinParams) -> Result<Vec<f64>> {
        let zero = vec![0.0; self.robin_len()];
        self.robin_exchange(&zero, alpha, false, true, None)
    }

    /// Final per-subdomain solves with real data from a Method 1 unknown.
    pub fn reconstruct_dirichlet(&self, lambda: &[f64], monitor: &mut dyn FieldMonitor) -> Result<()> {
        self.reconstruct_dirichlet_with(lambda, false, monitor)
    }

    pub fn reconstruct_dirichlet_with(&self, lambda: &[f64], homogeneous: bool, monitor: &mut dyn FieldMonitor) -> Result<()> {
        self.dirichlet_flux_sum(lambda, homogeneous, false, Some(monitor)).map(|_| ())
    }

    /// Final per-subdomain solves with real data from a Method 2 unknown.
    pub fn reconstruct_robin(&self, xi: &[f64], alpha: &RobinParams, monitor: &mut dyn FieldMonitor) -> Result<()> {
        self.reconstruct_robin_with(xi, alpha, false, monitor)
    }

    pub fn reconstruct_robin_with(
        &self,
        xi: &[f64],
        alpha: &RobinParams,
        homogeneous: bool,
        monitor: &mut dyn FieldMonitor,
    ) -> Result<()> {
        self.robin_exchange(xi, alpha, homogeneous, false, Some(monitor)).map(|_| ())
    }

    /// Monodomain system on the full mesh.
    pub fn monodomain_system(&self) -> Result<SubdomainSystem> {
        let labels = &self.decomposition.labels;
        let porosity = labels.iter().map(|&l| self.porosity[l]).collect();
        let diffusion: Vec<f64> = labels.iter().map(|&l| self.diffusion[l]).collect();
        SubdomainSystem::assemble(self.mesh.clone(), CellCoefficients::isotropic(porosity, &diffusion))
    }

    /// Direct march of the whole domain on one partition, streaming slabs to `observer`.
    pub fn solve_monodomain_streaming(
        &self,
        system: &SubdomainSystem,
        partition: &TimePartition,
        observer: &mut dyn FnMut(usize, &[f64], &[f64]),
    ) -> Result<()> {
        let mesh = system.mesh();
        let spec = BoundarySpec::from_fn(mesh, |_, side| self.outer.get(side).kind());
        let values: Vec<f64> = spec
            .edges()
            .iter()
            .map(|&e| self.outer.get(mesh.boundary_side(e).unwrap()).value())
            .collect();
        let c0 = self.c0.sample(mesh);
        system
            .march(
                &spec,
                partition,
                &c0,
                &self.forcing,
                &mut |_, out| out.copy_from_slice(&values),
                observer,
            )
            .map_err(Error::at("monodomain solve"))
    }

    /// Direct monodomain solve storing the full field.
    pub fn solve_monodomain(&self, partition: Arc<TimePartition>) -> Result<SpaceTimeField> {
        let system = self.monodomain_system()?;
        let mut field = SpaceTimeField::zeros(partition.clone(), system.n_cells(), system.n_edges());
        self.solve_monodomain_streaming(&system, &partition, &mut |m, c, r| field.set_slab(m, c, r))?;
        Ok(field)
    }

    /// Restriction of global slab data to subdomain `i`.
    pub fn restrict(&self, i: usize, c: &[f64], r: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let inf = &self.info[i];
        (
            inf.cell_map.iter().map(|&g| c[g]).collect(),
            inf.edge_map.iter().map(|&g| r[g]).collect(),
        )
    }

    /// Split a monodomain field into per-subdomain fields on the same partition.
    pub fn split_field(&self, field: &SpaceTimeField) -> Vec<SpaceTimeField> {
        (0..self.n_subdomains())
            .map(|i| {
                let s = &self.systems[i];
                let mut out = SpaceTimeField::zeros(field.partition.clone(), s.n_cells(), s.n_edges());
                for m in 0..field.n_slabs() {
                    let (c, r) = self.restrict(i, field.c_slab(m), field.r_slab(m));
                    out.set_slab(m, &c, &r);
                }
                out
            })
            .collect()
    }

    /// Interface unknowns of both methods taken from a monodomain field whose
    /// partition matches every subdomain partition.
    pub fn interface_data_from(&self, field: &SpaceTimeField, alpha: Option<&RobinParams>) -> Result<(Vec<f64>, Vec<f64>)> {
        if self.partitions.iter().any(|p| **p != *field.partition)
            || self.lambda_partitions.iter().any(|p| **p != *field.partition)
        {
            return Err(Error::Scenario("monodomain partition must match all subdomain grids".into()));
        }
        let parts = self.split_field(field);
        let mut lambda = vec![0.0; self.lambda_len()];
        let mut xi = vec![0.0; self.robin_len()];
        for (k, g) in self.decomposition.interfaces.iter().enumerate() {
            let ne = g.n_edges();
            for (side, &i) in [g.first, g.second].iter().enumerate() {
                let l = self.decomposition.subdomains[i].interfaces.iter().position(|&x| x == k).unwrap();
                let edges = &self.info[i].iface_edges[l];
                let sign = self.info[i].iface_sign[l];
                let sys = &self.systems[i];
                let f = &parts[i];
                let range = self.robin_range(k, side);
                for m in 0..f.n_slabs() {
                    let (c, r) = (f.c_slab(m), f.r_slab(m));
                    for (q, &e) in edges.iter().enumerate() {
                        let trace = sys.hybrid_trace(e, c, r);
                        if side == 1 {
                            lambda[self.lambda_offsets[k] + m * ne + q] = trace;
                        }
                        if let Some(a) = alpha {
                            xi[range.start + m * ne + q] = -sign * r[e] + a.alpha(k, side) * trace;
                        }
                    }
                }
            }
        }
        Ok((lambda, xi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, norm};

    fn two_domain(nx: usize, m1: usize, m2: usize, d: (f64, f64), c0: InitialData) -> DdProblem {
        let mesh = RectMesh::uniform(Rect::new(0.0, 1.0, 0.0, 1.0), nx, nx).unwrap();
        let n = OuterBc::Neumann(0.0);
        DdProblem::new(ProblemDef {
            mesh,
            boxes: vec![Rect::new(0.0, 0.5, 0.0, 1.0), Rect::new(0.5, 1.0, 0.0, 1.0)],
            porosity: vec![1.0, 1.0],
            diffusion: vec![d.0, d.1],
            partitions: vec![TimePartition::uniform(1.0, m1).unwrap(), TimePartition::uniform(1.0, m2).unwrap()],
            outer: OuterBoundary {
                left: OuterBc::Dirichlet(0.0),
                right: OuterBc::Dirichlet(0.0),
                bottom: n,
                top: n,
            },
            c0,
            forcing: Forcing::Zero,
            lambda: LambdaChoice::default(),
        })
        .unwrap()
    }

    fn bump() -> InitialData {
        InitialData::new(|x: f64, y: f64| ((x - 0.55).powi(2) + 0.5 * (y - 0.5).powi(2)).exp())
    }

    #[test]
    fn zero_maps_to_zero() {
        let p = two_domain(6, 4, 5, (0.1, 1.0), InitialData::Zero);
        let z = vec![0.0; p.lambda_len()];
        assert!(p.apply_s(&z).unwrap().iter().all(|&x| x == 0.0));
        assert!(p.compute_chi().unwrap().iter().all(|&x| x == 0.0));
        assert!(p.apply_nn(&z).unwrap().iter().all(|&x| x == 0.0));
        let a = RobinParams::uniform(1, 2.0);
        let zr = vec![0.0; p.robin_len()];
        assert!(p.apply_sr(&zr, &a).unwrap().iter().all(|&x| x == 0.0));
        assert!(p.compute_chi_r(&a).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn lambda_partition_default_is_larger_diffusion() {
        let p = two_domain(4, 3, 5, (1.0, 0.1), InitialData::Zero);
        assert_eq!(p.lambda_partitions[0].n_slabs(), 3);
        let q = two_domain(4, 3, 5, (0.1, 0.1), InitialData::Zero);
        assert_eq!(q.lambda_partitions[0].n_slabs(), 5);
    }

    #[test]
    fn weights_sum_to_one() {
        let p = two_domain(4, 3, 3, (0.02, 0.2), InitialData::Zero);
        let (a, b) = (p.nn_weight(0, 0), p.nn_weight(0, 1));
        assert!((a + b - 1.0).abs() < 1e-15);
        assert!((a - 0.0004 / 0.0404).abs() < 1e-15);
    }

    #[test]
    fn monodomain_traces_solve_both_problems() {
        let p = two_domain(8, 6, 6, (0.05, 0.5), bump());
        let alpha = RobinParams { pairs: vec![(0.7, 3.0)] };
        let mono = p.solve_monodomain(p.partitions[0].clone()).unwrap();
        let (lambda, xi) = p.interface_data_from(&mono, Some(&alpha)).unwrap();
        let s = p.apply_s(&lambda).unwrap();
        let chi = p.compute_chi().unwrap();
        let res: Vec<f64> = s.iter().zip(&chi).map(|(a, b)| a - b).collect();
        assert!(norm(&res) <= 1e-10 * norm(&chi).max(1.0), "{}", norm(&res));
        let sr = p.apply_sr(&xi, &alpha).unwrap();
        let chir = p.compute_chi_r(&alpha).unwrap();
        let res: Vec<f64> = sr.iter().zip(&chir).map(|(a, b)| a - b).collect();
        assert!(norm(&res) <= 1e-10 * norm(&chir), "{}", norm(&res));
    }

    #[test]
    fn dirichlet_reconstruction_matches_monodomain() {
        let p = two_domain(8, 5, 5, (0.02, 0.2), bump());
        let mono = p.solve_monodomain(p.partitions[0].clone()).unwrap();
        let (lambda, _) = p.interface_data_from(&mono, None).unwrap();
        let mut col = FieldCollector::new(&p);
        p.reconstruct_dirichlet(&lambda, &mut col).unwrap();
        for (i, part) in p.split_field(&mono).iter().enumerate() {
            let f = &col.fields[i];
            let dc: f64 = f.c.iter().zip(&part.c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let dr: f64 = f.r.iter().zip(&part.r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(dc < 1e-10 && dr < 1e-10, "{dc} {dr}");
        }
    }

    fn mirrored(c0: InitialData) -> DdProblem {
        let mesh = RectMesh::uniform(Rect::new(0.0, 1.0, 0.0, 1.0), 8, 4).unwrap();
        DdProblem::new(ProblemDef {
            mesh,
            boxes: vec![Rect::new(0.0, 0.5, 0.0, 1.0), Rect::new(0.5, 1.0, 0.0, 1.0)],
            porosity: vec![1.0, 1.0],
            diffusion: vec![0.3, 0.3],
            partitions: vec![TimePartition::uniform(1.0, 4).unwrap(); 2],
            outer: OuterBoundary::dirichlet_zero(),
            c0,
            forcing: Forcing::Zero,
            lambda: LambdaChoice::default(),
        })
        .unwrap()
    }

    #[test]
    fn antisymmetric_data_gives_zero_chi() {
        let p = mirrored(InitialData::new(|x: f64, y: f64| (x - 0.5) * (-(x - 0.5).powi(2)).exp() * y));
        let chi = p.compute_chi().unwrap();
        assert!(norm(&chi) < 1e-12, "{}", norm(&chi));
    }

    #[test]
    fn symmetric_data_gives_equal_robin_data() {
        let p = mirrored(InitialData::new(|x: f64, y: f64| (-(x - 0.5).powi(2)).exp() * y));
        let a = RobinParams::uniform(1, 1.5);
        let chir = p.compute_chi_r(&a).unwrap();
        let (r0, r1) = (p.robin_range(0, 0), p.robin_range(0, 1));
        assert!(norm(&chir) > 0.0);
        for q in 0..r0.len() {
            let (u, v) = (chir[r0.start + q], chir[r1.start + q]);
            assert!((u - v).abs() < 1e-12 * u.abs().max(1.0));
        }
    }

    #[test]
    fn operators_are_linear() {
        let p = two_domain(6, 4, 7, (0.02, 0.2), InitialData::Zero);
        let n = p.lambda_len();
        let x: Vec<f64> = (0..n).map(|k| (k as f64 * 0.7).sin()).collect();
        let y: Vec<f64> = (0..n).map(|k| (k as f64 * 1.3).cos()).collect();
        let z: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 2.0 * a - 0.5 * b).collect();
        let (sx, sy, sz) = (p.apply_s(&x).unwrap(), p.apply_s(&y).unwrap(), p.apply_s(&z).unwrap());
        for q in 0..n {
            assert!((sz[q] - 2.0 * sx[q] + 0.5 * sy[q]).abs() < 1e-12 * norm(&sz));
        }
        let a = RobinParams { pairs: vec![(0.3, 5.0)] };
        let n = p.robin_len();
        let x: Vec<f64> = (0..n).map(|k| (k as f64 * 0.7).sin()).collect();
        let y: Vec<f64> = (0..n).map(|k| (k as f64 * 1.3).cos()).collect();
        let z: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 2.0 * a - 0.5 * b).collect();
        let (sx, sy, sz) = (p.apply_sr(&x, &a).unwrap(), p.apply_sr(&y, &a).unwrap(), p.apply_sr(&z, &a).unwrap());
        for q in 0..n {
            assert!((sz[q] - 2.0 * sx[q] + 0.5 * sy[q]).abs() < 1e-12 * norm(&sz));
        }
    }

    #[test]
    fn schur_form_is_positive() {
        let p = two_domain(6, 5, 5, (0.02, 0.2), InitialData::Zero);
        let lam = &p.lambda_partitions[0];
        let ne = p.decomposition.interfaces[0].n_edges();
        for seed in 0..5 {
            let x: Vec<f64> = (0..p.lambda_len()).map(|k| ((k * 7 + seed * 13) as f64 * 0.9).sin()).collect();
            let s = p.apply_s(&x).unwrap();
            let q: f64 = (0..lam.n_slabs())
                .map(|m| lam.dt(m) * dot(&s[m * ne..(m + 1) * ne], &x[m * ne..(m + 1) * ne]))
                .sum();
            assert!(q > 0.0);
        }
    }

    #[test]
    fn single_side_preconditioner_inverts_its_schur_part() {
        let p = two_domain(6, 4, 4, (0.1, 1.0), InitialData::Zero);
        let x: Vec<f64> = (0..p.lambda_len()).map(|k| (k as f64 * 0.37).cos()).collect();
        // S_0 lambda from subdomain 0 alone
        let data = p.lambda_data(0, &x);
        let refs: Vec<&[f64]> = data.iter().map(|d| &d[..]).collect();
        let tr = p.solve_local(0, &[BcKind::Dirichlet], &refs, true, false, None).unwrap();
        let s0: Vec<f64> = tr.flux[0].iter().map(|v| -v).collect();
        let back = p.apply_nn_on(&s0, Some(&[0])).unwrap();
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}
