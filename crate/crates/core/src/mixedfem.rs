//! Lowest-order Raviart-Thomas mixed systems on rectangles, marched with DG0 in time.
//!
//! Flux unknowns are normal flux densities in the global +x / +y orientation,
//! concentration unknowns are cell values. Each slab solves
//!
//! ```text
//! (W/dt) c + B r      = W c_prev / dt + F
//!   -B^T c + A~ r     = G
//! ```
//!
//! after eliminating `c` cell by cell, which leaves an SPD system in the free
//! flux unknowns.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::geometry::{RectMesh, Side};
use crate::linalg::{Csr, SpdFactor};
use crate::timegrid::{TimePartition, TraceFunction};

/// Per-cell porosity and inverse diffusion tensor `[k_xx, k_xy, k_yy]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellCoefficients {
    pub porosity: Vec<f64>,
    pub inv_diffusion: Vec<[f64; 3]>,
}

impl CellCoefficients {
    pub fn uniform(n_cells: usize, porosity: f64, diffusion: f64) -> Self {
        Self {
            porosity: vec![porosity; n_cells],
            inv_diffusion: vec![[1.0 / diffusion, 0.0, 1.0 / diffusion]; n_cells],
        }
    }

    /// Isotropic coefficients from per-cell porosity and scalar diffusion.
    pub fn isotropic(porosity: Vec<f64>, diffusion: &[f64]) -> Self {
        let inv_diffusion = diffusion.iter().map(|d| [1.0 / d, 0.0, 1.0 / d]).collect();
        Self {
            porosity,
            inv_diffusion,
        }
    }

    fn validate(&self, n_cells: usize) -> Result<()> {
        if self.porosity.len() != n_cells || self.inv_diffusion.len() != n_cells {
            return Err(Error::Coefficient(format!(
                "coefficient arrays do not match {n_cells} cells"
            )));
        }
        for (c, (&w, k)) in self.porosity.iter().zip(&self.inv_diffusion).enumerate() {
            let det = k[0] * k[2] - k[1] * k[1];
            if !(w > 0.0) || !(k[0] > 0.0) || !(det > 0.0) || !w.is_finite() {
                return Err(Error::Coefficient(format!(
                    "cell {c}: porosity {w}, inverse diffusion {k:?}"
                )));
            }
        }
        Ok(())
    }
}

/// Condition imposed on one boundary edge of a subdomain mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BcKind {
    /// Data is the concentration trace.
    Dirichlet,
    /// Data is the outward normal flux `r . n`.
    Neumann,
    /// Data is `xi` in `-r . n + alpha c = xi`.
    Robin(f64),
}

impl BcKind {
    fn code(self) -> u64 {
        match self {
            BcKind::Dirichlet => 0,
            BcKind::Neumann => 1,
            BcKind::Robin(a) => a.to_bits() | 1 << 63,
        }
    }
}

/// One condition per boundary edge. Data vectors are ordered like `edges()`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    edges: Vec<usize>,
    kinds: Vec<BcKind>,
}

impl BoundarySpec {
    pub fn new(mesh: &RectMesh, edges: Vec<usize>, kinds: Vec<BcKind>) -> Result<Self> {
        if edges.len() != kinds.len() {
            return Err(Error::Dimension("edge and kind lists differ in length".into()));
        }
        let mut seen = vec![false; mesh.n_edges()];
        for &e in &edges {
            if e >= mesh.n_edges() || mesh.boundary_side(e).is_none() {
                return Err(Error::NotInterfaceEdge(e));
            }
            if std::mem::replace(&mut seen[e], true) {
                return Err(Error::Dimension(format!("edge {e} has two conditions")));
            }
        }
        let missing = (0..mesh.n_edges()).find(|&e| mesh.boundary_side(e).is_some() && !seen[e]);
        if let Some(e) = missing {
            return Err(Error::Dimension(format!("boundary edge {e} has no condition")));
        }
        for k in &kinds {
            if let BcKind::Robin(a) = k {
                if !(*a > 0.0) || !a.is_finite() {
                    return Err(Error::Coefficient(format!("Robin parameter {a}")));
                }
            }
        }
        Ok(Self { edges, kinds })
    }

    /// Assign a condition to every boundary edge in mesh order.
    pub fn from_fn(mesh: &RectMesh, mut kind: impl FnMut(usize, Side) -> BcKind) -> Self {
        let (edges, kinds) = (0..mesh.n_edges())
            .filter_map(|e| mesh.boundary_side(e).map(|s| (e, kind(e, s))))
            .unzip();
        Self { edges, kinds }
    }

    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    pub fn kinds(&self) -> &[BcKind] {
        &self.kinds
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Position of edge `e` in the data vector.
    pub fn slot(&self, e: usize) -> Option<usize> {
        self.edges.iter().position(|&x| x == e)
    }

    fn key(&self) -> Vec<u64> {
        self.kinds.iter().map(|k| k.code()).collect()
    }
}

/// Factorized one-slab operator for a fixed time step and boundary pattern.
#[derive(Debug)]
pub struct SlabOperator {
    dt: f64,
    spec: BoundarySpec,
    free_index: Vec<usize>,
    free: Vec<usize>,
    has_pinned: bool,
    factor: SpdFactor,
}

impl SlabOperator {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn spec(&self) -> &BoundarySpec {
        &self.spec
    }
}

type CacheKey = (u64, Vec<u64>);

/// Assembled mixed system on one (sub)domain mesh.
#[derive(Debug)]
pub struct SubdomainSystem {
    mesh: RectMesh,
    coeffs: CellCoefficients,
    a: Csr,
    unit_mass: Csr,
    w: Vec<f64>,
    area: Vec<f64>,
    cell_edges: Vec<[usize; 4]>,
    cell_b: Vec<[f64; 4]>,
    edge_len: Vec<f64>,
    edge_sign: Vec<f64>,
    edge_cell: Vec<usize>,
    cache: Mutex<HashMap<CacheKey, Arc<SlabOperator>>>,
}

/// RT0 flux mass on one rectangle for the tensor `k`, ordered left, right, bottom, top.
pub fn cell_flux_mass(hx: f64, hy: f64, k: [f64; 3]) -> [[f64; 4]; 4] {
    let area = hx * hy;
    let (d, o) = (area / 3.0, area / 6.0);
    let q = area / 4.0;
    let mut m = [[0.0; 4]; 4];
    m[0][0] = k[0] * d;
    m[1][1] = k[0] * d;
    m[0][1] = k[0] * o;
    m[1][0] = k[0] * o;
    m[2][2] = k[2] * d;
    m[3][3] = k[2] * d;
    m[2][3] = k[2] * o;
    m[3][2] = k[2] * o;
    for a in 0..2 {
        for b in 2..4 {
            m[a][b] = k[1] * q;
            m[b][a] = k[1] * q;
        }
    }
    m
}

impl SubdomainSystem {
    pub fn assemble(mesh: RectMesh, coeffs: CellCoefficients) -> Result<Self> {
        coeffs.validate(mesh.n_cells())?;
        let nc = mesh.n_cells();
        let ne = mesh.n_edges();
        let mut trips = Vec::with_capacity(nc * 20);
        let mut unit = Vec::with_capacity(nc * 8);
        let mut w = Vec::with_capacity(nc);
        let mut area = Vec::with_capacity(nc);
        let mut cell_edges = Vec::with_capacity(nc);
        let mut cell_b = Vec::with_capacity(nc);
        for c in 0..nc {
            let (hx, hy) = mesh.cell_size(c);
            let edges = mesh.cell_edges(c);
            let m = cell_flux_mass(hx, hy, coeffs.inv_diffusion[c]);
            let mu = cell_flux_mass(hx, hy, [1.0, 0.0, 1.0]);
            for a in 0..4 {
                for b in 0..4 {
                    if m[a][b] != 0.0 {
                        trips.push((edges[a], edges[b], m[a][b]));
                    }
                    if mu[a][b] != 0.0 {
                        unit.push((edges[a], edges[b], mu[a][b]));
                    }
                }
            }
            w.push(coeffs.porosity[c] * hx * hy);
            area.push(hx * hy);
            cell_edges.push(edges);
            cell_b.push([-hy, hy, -hx, hx]);
        }
        let mut edge_len = vec![0.0; ne];
        let mut edge_sign = vec![0.0; ne];
        let mut edge_cell = vec![usize::MAX; ne];
        for e in 0..ne {
            let g = mesh.edge(e);
            edge_len[e] = g.length;
            if let Some(side) = mesh.boundary_side(e) {
                edge_sign[e] = side.outward_sign();
                edge_cell[e] = g.cells[0].or(g.cells[1]).unwrap();
            }
        }
        Ok(Self {
            a: Csr::from_triplets(ne, ne, &trips),
            unit_mass: Csr::from_triplets(ne, ne, &unit),
            mesh,
            coeffs,
            w,
            area,
            cell_edges,
            cell_b,
            edge_len,
            edge_sign,
            edge_cell,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn mesh(&self) -> &RectMesh {
        &self.mesh
    }

    pub fn coefficients(&self) -> &CellCoefficients {
        &self.coeffs
    }

    pub fn n_cells(&self) -> usize {
        self.w.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edge_len.len()
    }

    /// Flux mass matrix for `D^{-1}`.
    pub fn flux_mass(&self) -> &Csr {
        &self.a
    }

    /// Flux mass matrix with the identity tensor, used for error norms.
    pub fn unit_flux_mass(&self) -> &Csr {
        &self.unit_mass
    }

    /// Porosity-weighted cell mass (diagonal).
    pub fn porosity_mass(&self) -> &[f64] {
        &self.w
    }

    pub fn cell_areas(&self) -> &[f64] {
        &self.area
    }

    /// Divergence entries per cell, aligned with `RectMesh::cell_edges`.
    pub fn divergence(&self, c: usize) -> ([usize; 4], [f64; 4]) {
        (self.cell_edges[c], self.cell_b[c])
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        self.edge_len[e]
    }

    /// Outward normal sign of a boundary edge, 0 for interior edges.
    pub fn boundary_sign(&self, e: usize) -> f64 {
        self.edge_sign[e]
    }

    /// Factorized slab operator, cached per time step and boundary pattern.
    pub fn operator(&self, spec: &BoundarySpec, dt: f64) -> Result<Arc<SlabOperator>> {
        let key = (dt.to_bits(), spec.key());
        if let Some(op) = self.cache.lock().unwrap().get(&key) {
            if op.spec.edges == spec.edges {
                return Ok(op.clone());
            }
        }
        let op = Arc::new(self.factor(spec, dt)?);
        self.cache.lock().unwrap().insert(key, op.clone());
        Ok(op)
    }

    pub fn clear_cache(&self) {
        self.cache.lock().unwrap().clear();
    }

    fn factor(&self, spec: &BoundarySpec, dt: f64) -> Result<SlabOperator> {
        if !(dt > 0.0) {
            return Err(Error::TimeGrid(format!("time step {dt}")));
        }
        let ne = self.n_edges();
        let mut pinned = vec![false; ne];
        let mut robin = vec![0.0; ne];
        for (&e, &k) in spec.edges.iter().zip(&spec.kinds) {
            match k {
                BcKind::Neumann => pinned[e] = true,
                BcKind::Robin(alpha) => robin[e] = self.edge_len[e] / alpha,
                BcKind::Dirichlet => {}
            }
        }
        let mut free_index = vec![usize::MAX; ne];
        let mut free = Vec::with_capacity(ne);
        for e in 0..ne {
            if !pinned[e] {
                free_index[e] = free.len();
                free.push(e);
            }
        }
        let mut trips: Vec<(usize, usize, f64)> = Vec::with_capacity(self.a.nnz() + 16 * self.n_cells());
        for (i, j, v) in self.a.triplets() {
            let (fi, fj) = (free_index[i], free_index[j]);
            if fi != usize::MAX && fj != usize::MAX && fi >= fj {
                trips.push((fi, fj, v));
            }
        }
        for &e in &free {
            if robin[e] != 0.0 {
                trips.push((free_index[e], free_index[e], robin[e]));
            }
        }
        for c in 0..self.n_cells() {
            let s = dt / self.w[c];
            let (edges, b) = (self.cell_edges[c], self.cell_b[c]);
            for p in 0..4 {
                for q in 0..4 {
                    let (fi, fj) = (free_index[edges[p]], free_index[edges[q]]);
                    if fi != usize::MAX && fj != usize::MAX && fi >= fj {
                        trips.push((fi, fj, s * b[p] * b[q]));
                    }
                }
            }
        }
        let factor = SpdFactor::new(free.len(), &trips).map_err(|reason| Error::Factorization {
            slab: None,
            dt,
            reason,
        })?;
        Ok(SlabOperator {
            dt,
            spec: spec.clone(),
            free_index,
            free,
            has_pinned: pinned.iter().any(|&p| p),
            factor,
        })
    }

    fn boundary_load(&self, op: &SlabOperator, data: &[f64], r: &mut [f64], g: &mut [f64]) {
        for ((&e, &k), &v) in op.spec.edges.iter().zip(&op.spec.kinds).zip(data) {
            let (len, s) = (self.edge_len[e], self.edge_sign[e]);
            match k {
                BcKind::Dirichlet => g[e] = -len * s * v,
                BcKind::Neumann => r[e] = s * v,
                BcKind::Robin(alpha) => g[e] = -len * s * v / alpha,
            }
        }
    }

    /// One slab. `source` is the slab-averaged source per cell, `data` follows the spec order.
    pub fn step(
        &self,
        op: &SlabOperator,
        c_prev: &[f64],
        source: Option<&[f64]>,
        data: &[f64],
        c: &mut [f64],
        r: &mut [f64],
    ) {
        let (nc, ne) = (self.n_cells(), self.n_edges());
        assert_eq!(data.len(), op.spec.len());
        assert!(c_prev.len() == nc && c.len() == nc && r.len() == ne);
        let dt = op.dt;
        r.iter_mut().for_each(|x| *x = 0.0);
        let mut g = vec![0.0; ne];
        self.boundary_load(op, data, r, &mut g);

        let mut rhs1 = vec![0.0; nc];
        for k in 0..nc {
            let mut v = self.w[k] * c_prev[k] / dt;
            if let Some(f) = source {
                v += self.area[k] * f[k];
            }
            if op.has_pinned {
                let (edges, b) = (self.cell_edges[k], self.cell_b[k]);
                for p in 0..4 {
                    v -= b[p] * r[edges[p]];
                }
            }
            rhs1[k] = v;
        }

        let mut rhs = vec![0.0; op.free.len()];
        for (i, &e) in op.free.iter().enumerate() {
            rhs[i] = g[e];
        }
        if op.has_pinned {
            for (i, &e) in op.free.iter().enumerate() {
                rhs[i] -= self.a.row_dot(e, r);
            }
        }
        for k in 0..nc {
            let s = dt * rhs1[k] / self.w[k];
            let (edges, b) = (self.cell_edges[k], self.cell_b[k]);
            for p in 0..4 {
                let fi = op.free_index[edges[p]];
                if fi != usize::MAX {
                    rhs[fi] += s * b[p];
                }
            }
        }
        op.factor.solve_in_place(&mut rhs);
        for (i, &e) in op.free.iter().enumerate() {
            r[e] = rhs[i];
        }
        for k in 0..nc {
            let (edges, b) = (self.cell_edges[k], self.cell_b[k]);
            let mut v = rhs1[k];
            for p in 0..4 {
                if op.free_index[edges[p]] != usize::MAX {
                    v -= b[p] * r[edges[p]];
                }
            }
            c[k] = dt * v / self.w[k];
        }
    }

    /// Relative residual of both slab equations for a computed pair.
    #[allow(clippy::too_many_arguments)]
    pub fn slab_residual(
        &self,
        op: &SlabOperator,
        c_prev: &[f64],
        source: Option<&[f64]>,
        data: &[f64],
        c: &[f64],
        r: &[f64],
    ) -> f64 {
        let (nc, ne) = (self.n_cells(), self.n_edges());
        let dt = op.dt;
        let mut pin = vec![0.0; ne];
        let mut g = vec![0.0; ne];
        self.boundary_load(op, data, &mut pin, &mut g);
        let mut res = 0.0f64;
        let mut scale = 0.0f64;
        for k in 0..nc {
            let (edges, b) = (self.cell_edges[k], self.cell_b[k]);
            let div: f64 = (0..4).map(|p| b[p] * r[edges[p]]).sum();
            let mass = self.w[k] * c[k] / dt;
            let load = self.w[k] * c_prev[k] / dt + source.map_or(0.0, |f| self.area[k] * f[k]);
            res = res.max((mass + div - load).abs());
            scale = scale.max(mass.abs()).max(div.abs()).max(load.abs());
        }
        let mut btc = vec![0.0; ne];
        for k in 0..nc {
            let (edges, b) = (self.cell_edges[k], self.cell_b[k]);
            for p in 0..4 {
                btc[edges[p]] += b[p] * c[k];
            }
        }
        let mut robin = vec![0.0; ne];
        for (&e, &kind) in op.spec.edges.iter().zip(&op.spec.kinds) {
            if let BcKind::Robin(alpha) = kind {
                robin[e] = self.edge_len[e] / alpha;
            }
        }
        for e in 0..ne {
            if op.free_index[e] == usize::MAX {
                res = res.max((r[e] - pin[e]).abs() * self.edge_len[e]);
                scale = scale.max(pin[e].abs() * self.edge_len[e]);
                continue;
            }
            let ar = self.a.row_dot(e, r) + robin[e] * r[e];
            res = res.max((ar - btc[e] - g[e]).abs());
            scale = scale.max(ar.abs()).max(btc[e].abs()).max(g[e].abs());
        }
        if scale == 0.0 {
            res
        } else {
            res / scale
        }
    }

    /// Concentration trace on a boundary edge recovered from that edge's flux equation.
    pub fn hybrid_trace(&self, e: usize, c: &[f64], r: &[f64]) -> f64 {
        let k = self.edge_cell[e];
        debug_assert!(k != usize::MAX, "edge {e} is interior");
        let p = self.cell_edges[k].iter().position(|&x| x == e).unwrap();
        let btc = self.cell_b[k][p] * c[k];
        -(self.a.row_dot(e, r) - btc) / (self.edge_len[e] * self.edge_sign[e])
    }

    /// Per-cell slab load for a forcing term, `None` when it vanishes.
    pub fn source_load(&self, forcing: &Forcing, t0: f64, t1: f64) -> Option<Vec<f64>> {
        match forcing {
            Forcing::Zero => None,
            Forcing::Field(f) => Some(
                (0..self.n_cells())
                    .map(|k| {
                        let (x, y) = self.mesh.cell_centre(k);
                        f(x, y, t0, t1)
                    })
                    .collect(),
            ),
        }
    }

    /// March all slabs of `partition`, handing each slab's `(c, r)` to `observer`.
    pub fn march(
        &self,
        spec: &BoundarySpec,
        partition: &TimePartition,
        c0: &[f64],
        forcing: &Forcing,
        data: &mut dyn FnMut(usize, &mut [f64]),
        observer: &mut dyn FnMut(usize, &[f64], &[f64]),
    ) -> Result<()> {
        if c0.len() != self.n_cells() {
            return Err(Error::Dimension(format!(
                "initial data has {} values for {} cells",
                c0.len(),
                self.n_cells()
            )));
        }
        let mut c_prev = c0.to_vec();
        let mut c = vec![0.0; self.n_cells()];
        let mut r = vec![0.0; self.n_edges()];
        let mut bdata = vec![0.0; spec.len()];
        let mut op: Option<Arc<SlabOperator>> = None;
        for m in 0..partition.n_slabs() {
            let dt = partition.dt(m);
            if op.as_ref().is_none_or(|o| o.dt != dt) {
                op = Some(self.operator(spec, dt).map_err(|e| match e {
                    Error::Factorization { dt, reason, .. } => Error::Factorization {
                        slab: Some(m),
                        dt,
                        reason,
                    },
                    other => other,
                })?);
            }
            let (t0, t1) = partition.slab(m);
            let load = self.source_load(forcing, t0, t1);
            data(m, &mut bdata);
            self.step(op.as_ref().unwrap(), &c_prev, load.as_deref(), &bdata, &mut c, &mut r);
            observer(m, &c, &r);
            std::mem::swap(&mut c_prev, &mut c);
        }
        Ok(())
    }
}

/// Space-time source term, evaluated as `f(x, y, t0, t1)` = time average over `(t0, t1]`.
#[derive(Clone, Default)]
pub enum Forcing {
    #[default]
    Zero,
    Field(Arc<dyn Fn(f64, f64, f64, f64) -> f64 + Send + Sync>),
}

impl Forcing {
    pub fn new(f: impl Fn(f64, f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Forcing::Field(Arc::new(f))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Forcing::Zero)
    }
}

impl std::fmt::Debug for Forcing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Forcing::Zero => write!(f, "Forcing::Zero"),
            Forcing::Field(_) => write!(f, "Forcing::Field(..)"),
        }
    }
}

/// Concentration per (slab, cell) and flux per (slab, edge).
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    pub partition: Arc<TimePartition>,
    pub n_cells: usize,
    pub n_edges: usize,
    pub c: Vec<f64>,
    pub r: Vec<f64>,
}

impl SpaceTimeField {
    pub fn zeros(partition: Arc<TimePartition>, n_cells: usize, n_edges: usize) -> Self {
        let m = partition.n_slabs();
        Self {
            partition,
            n_cells,
            n_edges,
            c: vec![0.0; m * n_cells],
            r: vec![0.0; m * n_edges],
        }
    }

    pub fn n_slabs(&self) -> usize {
        self.partition.n_slabs()
    }

    pub fn c_slab(&self, m: usize) -> &[f64] {
        &self.c[m * self.n_cells..(m + 1) * self.n_cells]
    }

    pub fn r_slab(&self, m: usize) -> &[f64] {
        &self.r[m * self.n_edges..(m + 1) * self.n_edges]
    }

    pub fn set_slab(&mut self, m: usize, c: &[f64], r: &[f64]) {
        self.c[m * self.n_cells..(m + 1) * self.n_cells].copy_from_slice(c);
        self.r[m * self.n_edges..(m + 1) * self.n_edges].copy_from_slice(r);
    }

    /// Concentration export with columns `t, cell_x, cell_y, c` (t is the slab end).
    pub fn write_c_csv(&self, mesh: &RectMesh, path: &Path) -> Result<()> {
        let slabs: Vec<usize> = (0..self.n_slabs()).collect();
        self.write_c_slabs(mesh, &slabs, path)
    }

    /// Flux export with columns `t, edge_id, r`.
    pub fn write_r_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "edge_id", "r"])?;
        for m in 0..self.n_slabs() {
            let t = format!("{:e}", self.partition.slab(m).1);
            for (e, v) in self.r_slab(m).iter().enumerate() {
                w.write_record([t.as_str(), &e.to_string(), &format!("{v:e}")])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Concentration at the slabs containing the requested times.
    pub fn write_snapshot(&self, mesh: &RectMesh, t: f64, path: &Path) -> Result<()> {
        self.write_c_slabs(mesh, &[self.partition.slab_of(t)], path)
    }

    fn write_c_slabs(&self, mesh: &RectMesh, slabs: &[usize], path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "cell_x", "cell_y", "c"])?;
        for &m in slabs {
            let t = format!("{:e}", self.partition.slab(m).1);
            for (k, v) in self.c_slab(m).iter().enumerate() {
                let (x, y) = mesh.cell_centre(k);
                w.write_record([t.as_str(), &format!("{x:e}"), &format!("{y:e}"), &format!("{v:e}")])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Full space-time solve with boundary data given as a trace over the spec edges.
pub fn solve_subdomain(
    system: &SubdomainSystem,
    spec: &BoundarySpec,
    c0: &[f64],
    forcing: &Forcing,
    data: &TraceFunction,
) -> Result<SpaceTimeField> {
    if data.n_edges() != spec.len() {
        return Err(Error::Dimension(format!(
            "boundary data has {} edges, spec has {}",
            data.n_edges(),
            spec.len()
        )));
    }
    let partition = data.partition().clone();
    let mut field = SpaceTimeField::zeros(partition.clone(), system.n_cells(), system.n_edges());
    system.march(
        spec,
        &partition,
        c0,
        forcing,
        &mut |m, out| out.copy_from_slice(data.slab_values(m)),
        &mut |m, c, r| field.set_slab(m, c, r),
    )?;
    Ok(field)
}

/// Signed normal flux `sign * r_e` on the given edges.
pub fn extract_normal_flux(field: &SpaceTimeField, edges: &[usize], sign: f64) -> Result<TraceFunction> {
    if let Some(&e) = edges.iter().find(|&&e| e >= field.n_edges) {
        return Err(Error::NotInterfaceEdge(e));
    }
    let mut values = Vec::with_capacity(field.n_slabs() * edges.len());
    for m in 0..field.n_slabs() {
        let r = field.r_slab(m);
        values.extend(edges.iter().map(|&e| sign * r[e]));
    }
    TraceFunction::from_values(field.partition.clone(), edges.len(), values)
}

/// Hybrid concentration trace on boundary edges of a subdomain field.
pub fn extract_trace(system: &SubdomainSystem, field: &SpaceTimeField, edges: &[usize]) -> Result<TraceFunction> {
    if let Some(&e) = edges
        .iter()
        .find(|&&e| e >= system.n_edges() || system.boundary_sign(e) == 0.0)
    {
        return Err(Error::NotInterfaceEdge(e));
    }
    let mut values = Vec::with_capacity(field.n_slabs() * edges.len());
    for m in 0..field.n_slabs() {
        let (c, r) = (field.c_slab(m), field.r_slab(m));
        values.extend(edges.iter().map(|&e| system.hybrid_trace(e, c, r)));
    }
    TraceFunction::from_values(field.partition.clone(), edges.len(), values)
}

/// Squared `L2` norm of cell data, optionally weighted by porosity.
pub fn cell_norm_sq(system: &SubdomainSystem, c: &[f64], porosity: bool) -> f64 {
    let w = if porosity { system.porosity_mass() } else { system.cell_areas() };
    w.iter().zip(c).map(|(w, c)| w * c * c).sum()
}

/// Squared norm of flux data in the unweighted RT0 mass.
pub fn flux_norm_sq(system: &SubdomainSystem, r: &[f64]) -> f64 {
    let m = system.unit_flux_mass();
    (0..r.len()).map(|e| r[e] * m.row_dot(e, r)).sum()
}
