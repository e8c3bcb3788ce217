//! Structured rectangular meshes and box decompositions.
//!
//! Edges are numbered in two blocks. Vertical edges (normal along +x) come
//! first, indexed `i + j * (nx + 1)` for `i in 0..=nx`, `j in 0..ny`.
//! Horizontal edges (normal along +y) follow, indexed
//! `n_vertical + i + j * nx` for `i in 0..nx`, `j in 0..=ny`.
//! Cells are indexed `i + j * nx`.

use crate::error::{Error, Result};

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

/// Direction of an edge normal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Normal {
    X,
    Y,
}

/// Which outer side of the domain a boundary edge lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    /// Sign of the outward normal relative to the global +x / +y orientation.
    pub fn outward_sign(self) -> f64 {
        match self {
            Side::Left | Side::Bottom => -1.0,
            Side::Right | Side::Top => 1.0,
        }
    }
}

/// How one axis of the mesh is subdivided.
#[derive(Debug, Clone, PartialEq)]
pub enum AxisSpec {
    Uniform {
        cells: usize,
    },
    /// Uniform cells inside `band`, geometric growth by `factor` outside it.
    Graded {
        band: (f64, f64),
        band_cells: usize,
        factor: f64,
    },
}

/// Coarsest graded cell may be at most this many times the band cell width.
pub const MAX_GRADING_RATIO: f64 = 50.0;

fn uniform_coords(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|k| {
            if k == n {
                b
            } else {
                a + (b - a) * k as f64 / n as f64
            }
        })
        .collect()
}

/// Widths of the cells covering a stretch of length `len`, starting next to a
/// band of width `h` and growing by `factor` per cell (capped).
fn graded_widths(len: f64, h: f64, factor: f64) -> Vec<f64> {
    if len <= 0.0 {
        return Vec::new();
    }
    let mut widths = Vec::new();
    let mut total = 0.0;
    let mut w = h;
    while total < len * (1.0 - 1e-12) {
        w = (w * factor).min(h * MAX_GRADING_RATIO);
        widths.push(w);
        total += w;
    }
    let scale = len / total;
    widths.iter_mut().for_each(|w| *w *= scale);
    widths
}

fn axis_coords(a: f64, b: f64, spec: &AxisSpec) -> Result<Vec<f64>> {
    if !(b > a) {
        return Err(Error::Mesh(format!("non-positive extent [{a}, {b}]")));
    }
    match *spec {
        AxisSpec::Uniform { cells } => {
            if cells == 0 {
                return Err(Error::Mesh("cell count must be at least 1".into()));
            }
            Ok(uniform_coords(a, b, cells))
        }
        AxisSpec::Graded {
            band: (lo, hi),
            band_cells,
            factor,
        } => {
            if band_cells == 0 {
                return Err(Error::Mesh("band cell count must be at least 1".into()));
            }
            if !(factor >= 1.0) {
                return Err(Error::Mesh(format!("grading factor {factor} < 1")));
            }
            if !(lo >= a && hi <= b && hi > lo) {
                return Err(Error::Mesh(format!(
                    "band [{lo}, {hi}] not inside [{a}, {b}]"
                )));
            }
            let h = (hi - lo) / band_cells as f64;
            let left = graded_widths(lo - a, h, factor);
            let right = graded_widths(b - hi, h, factor);
            let mut xs = Vec::with_capacity(left.len() + band_cells + right.len() + 1);
            let mut x = a;
            xs.push(a);
            for w in left.iter().rev() {
                x += w;
                xs.push(x);
            }
            *xs.last_mut().unwrap() = lo;
            for k in 1..=band_cells {
                xs.push(if k == band_cells {
                    hi
                } else {
                    lo + h * k as f64
                });
            }
            x = hi;
            for w in &right {
                x += w;
                xs.push(x);
            }
            *xs.last_mut().unwrap() = b;
            Ok(xs)
        }
    }
}

/// Geometry of one mesh edge.
#[derive(Debug, Clone, Copy)]
pub struct EdgeGeom {
    pub normal: Normal,
    pub length: f64,
    pub midpoint: (f64, f64),
    /// Cell on the negative side (left / below), then on the positive side.
    pub cells: [Option<usize>; 2],
}

/// Tensor-product rectangular mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct RectMesh {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl RectMesh {
    pub fn from_coords(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        for (name, v) in [("x", &xs), ("y", &ys)] {
            if v.len() < 2 {
                return Err(Error::Mesh(format!("{name}: need at least one cell")));
            }
            if v.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::Mesh(format!("{name}: coordinates not increasing")));
            }
        }
        Ok(Self { xs, ys })
    }

    pub fn uniform(domain: Rect, nx: usize, ny: usize) -> Result<Self> {
        build_mesh(
            domain,
            &AxisSpec::Uniform { cells: nx },
            &AxisSpec::Uniform { cells: ny },
        )
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn nx(&self) -> usize {
        self.xs.len() - 1
    }

    pub fn ny(&self) -> usize {
        self.ys.len() - 1
    }

    pub fn n_cells(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn n_vertical_edges(&self) -> usize {
        (self.nx() + 1) * self.ny()
    }

    pub fn n_edges(&self) -> usize {
        self.n_vertical_edges() + self.nx() * (self.ny() + 1)
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(
            self.xs[0],
            *self.xs.last().unwrap(),
            self.ys[0],
            *self.ys.last().unwrap(),
        )
    }

    pub fn cell(&self, i: usize, j: usize) -> usize {
        i + j * self.nx()
    }

    pub fn cell_ij(&self, c: usize) -> (usize, usize) {
        (c % self.nx(), c / self.nx())
    }

    pub fn cell_size(&self, c: usize) -> (f64, f64) {
        let (i, j) = self.cell_ij(c);
        (self.xs[i + 1] - self.xs[i], self.ys[j + 1] - self.ys[j])
    }

    pub fn cell_area(&self, c: usize) -> f64 {
        let (hx, hy) = self.cell_size(c);
        hx * hy
    }

    pub fn cell_rect(&self, c: usize) -> Rect {
        let (i, j) = self.cell_ij(c);
        Rect::new(self.xs[i], self.xs[i + 1], self.ys[j], self.ys[j + 1])
    }

    pub fn cell_centre(&self, c: usize) -> (f64, f64) {
        let r = self.cell_rect(c);
        (0.5 * (r.x0 + r.x1), 0.5 * (r.y0 + r.y1))
    }

    pub fn vertical_edge(&self, i: usize, j: usize) -> usize {
        i + j * (self.nx() + 1)
    }

    pub fn horizontal_edge(&self, i: usize, j: usize) -> usize {
        self.n_vertical_edges() + i + j * self.nx()
    }

    /// Edges of a cell in the order left, right, bottom, top.
    pub fn cell_edges(&self, c: usize) -> [usize; 4] {
        let (i, j) = self.cell_ij(c);
        [
            self.vertical_edge(i, j),
            self.vertical_edge(i + 1, j),
            self.horizontal_edge(i, j),
            self.horizontal_edge(i, j + 1),
        ]
    }

    /// Lattice position of an edge: normal direction and `(i, j)`.
    pub fn edge_ij(&self, e: usize) -> (Normal, usize, usize) {
        let nv = self.n_vertical_edges();
        if e < nv {
            (Normal::X, e % (self.nx() + 1), e / (self.nx() + 1))
        } else {
            let k = e - nv;
            (Normal::Y, k % self.nx(), k / self.nx())
        }
    }

    pub fn edge(&self, e: usize) -> EdgeGeom {
        let (nx, ny) = (self.nx(), self.ny());
        match self.edge_ij(e) {
            (Normal::X, i, j) => EdgeGeom {
                normal: Normal::X,
                length: self.ys[j + 1] - self.ys[j],
                midpoint: (self.xs[i], 0.5 * (self.ys[j] + self.ys[j + 1])),
                cells: [
                    (i > 0).then(|| self.cell(i - 1, j)),
                    (i < nx).then(|| self.cell(i, j)),
                ],
            },
            (Normal::Y, i, j) => EdgeGeom {
                normal: Normal::Y,
                length: self.xs[i + 1] - self.xs[i],
                midpoint: (0.5 * (self.xs[i] + self.xs[i + 1]), self.ys[j]),
                cells: [
                    (j > 0).then(|| self.cell(i, j - 1)),
                    (j < ny).then(|| self.cell(i, j)),
                ],
            },
        }
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        match self.edge_ij(e) {
            (Normal::X, _, j) => self.ys[j + 1] - self.ys[j],
            (Normal::Y, i, _) => self.xs[i + 1] - self.xs[i],
        }
    }

    /// Outer side of a boundary edge, `None` for interior edges.
    pub fn boundary_side(&self, e: usize) -> Option<Side> {
        match self.edge_ij(e) {
            (Normal::X, 0, _) => Some(Side::Left),
            (Normal::X, i, _) if i == self.nx() => Some(Side::Right),
            (Normal::Y, _, 0) => Some(Side::Bottom),
            (Normal::Y, _, j) if j == self.ny() => Some(Side::Top),
            _ => None,
        }
    }

    /// Sub-mesh made of cells `i0..i1` by `j0..j1`.
    pub fn block(&self, i0: usize, i1: usize, j0: usize, j1: usize) -> RectMesh {
        RectMesh {
            xs: self.xs[i0..=i1].to_vec(),
            ys: self.ys[j0..=j1].to_vec(),
        }
    }
}

/// Build a mesh of `domain` with the given per-axis subdivision.
pub fn build_mesh(domain: Rect, x: &AxisSpec, y: &AxisSpec) -> Result<RectMesh> {
    let xs = axis_coords(domain.x0, domain.x1, x)?;
    let ys = axis_coords(domain.y0, domain.y1, y)?;
    RectMesh::from_coords(xs, ys)
}

/// One subdomain: a block of cells with its own local mesh.
#[derive(Debug, Clone)]
pub struct Subdomain {
    pub id: usize,
    pub cells_x: (usize, usize),
    pub cells_y: (usize, usize),
    pub mesh: RectMesh,
    /// Indices into [`Decomposition::interfaces`].
    pub interfaces: Vec<usize>,
    pub neighbors: Vec<usize>,
}

impl Subdomain {
    pub fn rect(&self) -> Rect {
        self.mesh.bounds()
    }

    pub fn global_cell(&self, global: &RectMesh, local: usize) -> usize {
        let (i, j) = self.mesh.cell_ij(local);
        global.cell(i + self.cells_x.0, j + self.cells_y.0)
    }

    pub fn global_edge(&self, global: &RectMesh, local: usize) -> usize {
        let (i0, j0) = (self.cells_x.0, self.cells_y.0);
        match self.mesh.edge_ij(local) {
            (Normal::X, i, j) => global.vertical_edge(i + i0, j + j0),
            (Normal::Y, i, j) => global.horizontal_edge(i + i0, j + j0),
        }
    }

    /// Local index of a global edge lying on this subdomain's closure.
    pub fn local_edge(&self, global: &RectMesh, e: usize) -> Option<usize> {
        let (i0, i1) = self.cells_x;
        let (j0, j1) = self.cells_y;
        match global.edge_ij(e) {
            (Normal::X, i, j) if (i0..=i1).contains(&i) && (j0..j1).contains(&j) => {
                Some(self.mesh.vertical_edge(i - i0, j - j0))
            }
            (Normal::Y, i, j) if (i0..i1).contains(&i) && (j0..=j1).contains(&j) => {
                Some(self.mesh.horizontal_edge(i - i0, j - j0))
            }
            _ => None,
        }
    }
}

/// Interface between two subdomains, `first < second`.
#[derive(Debug, Clone)]
pub struct Interface {
    pub first: usize,
    pub second: usize,
    pub normal: Normal,
    /// Global edge ids, ordered along the interface.
    pub edges: Vec<usize>,
    pub lengths: Vec<f64>,
    /// Local edge ids in `first` and `second`.
    pub local_first: Vec<usize>,
    pub local_second: Vec<usize>,
    /// Outward normal sign of `first` relative to the global orientation;
    /// the sign seen by `second` is the opposite.
    pub sign_first: f64,
}

impl Interface {
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn length(&self) -> f64 {
        self.lengths.iter().sum()
    }

    pub fn other(&self, side: usize) -> usize {
        if side == self.first {
            self.second
        } else {
            self.first
        }
    }

    /// Outward normal sign seen from subdomain `side`.
    pub fn sign(&self, side: usize) -> f64 {
        if side == self.first {
            self.sign_first
        } else {
            -self.sign_first
        }
    }

    pub fn local_edges(&self, side: usize) -> &[usize] {
        if side == self.first {
            &self.local_first
        } else {
            &self.local_second
        }
    }

    /// Per-edge outward signs seen from `side`.
    pub fn signs(&self, side: usize) -> Vec<f64> {
        vec![self.sign(side); self.edges.len()]
    }
}

/// Partition of a mesh into rectangular subdomains with pairwise interfaces.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub labels: Vec<usize>,
    pub subdomains: Vec<Subdomain>,
    pub interfaces: Vec<Interface>,
}

fn snap(coords: &[f64], v: f64) -> Option<usize> {
    let span = coords[coords.len() - 1] - coords[0];
    let k = coords.partition_point(|&c| c < v - 1e-9 * span);
    (k < coords.len() && (coords[k] - v).abs() <= 1e-9 * span).then_some(k)
}

/// Split `mesh` into the given boxes, which must tile the domain along mesh lines.
pub fn decompose(mesh: &RectMesh, boxes: &[Rect]) -> Result<Decomposition> {
    if boxes.is_empty() {
        return Err(Error::Decomposition("no boxes".into()));
    }
    let mut subdomains = Vec::with_capacity(boxes.len());
    let mut labels = vec![usize::MAX; mesh.n_cells()];
    for (id, b) in boxes.iter().enumerate() {
        let snapped = (
            snap(mesh.xs(), b.x0),
            snap(mesh.xs(), b.x1),
            snap(mesh.ys(), b.y0),
            snap(mesh.ys(), b.y1),
        );
        let (Some(i0), Some(i1), Some(j0), Some(j1)) = snapped else {
            return Err(Error::Decomposition(format!(
                "box {id} {b:?} does not lie on mesh lines"
            )));
        };
        if i1 <= i0 || j1 <= j0 {
            return Err(Error::Decomposition(format!("box {id} is empty")));
        }
        for j in j0..j1 {
            for i in i0..i1 {
                let c = mesh.cell(i, j);
                if labels[c] != usize::MAX {
                    return Err(Error::Decomposition(format!(
                        "boxes {} and {id} overlap",
                        labels[c]
                    )));
                }
                labels[c] = id;
            }
        }
        subdomains.push(Subdomain {
            id,
            cells_x: (i0, i1),
            cells_y: (j0, j1),
            mesh: mesh.block(i0, i1, j0, j1),
            interfaces: Vec::new(),
            neighbors: Vec::new(),
        });
    }
    if let Some(c) = labels.iter().position(|&l| l == usize::MAX) {
        return Err(Error::Decomposition(format!(
            "cell {c} at {:?} is not covered",
            mesh.cell_centre(c)
        )));
    }

    let mut interfaces = Vec::new();
    for a in 0..subdomains.len() {
        for b in a + 1..subdomains.len() {
            let (sa, sb) = (&subdomains[a], &subdomains[b]);
            let overlap = |p: (usize, usize), q: (usize, usize)| (p.0.max(q.0), p.1.min(q.1));
            let mut found: Option<(Normal, f64, Vec<usize>)> = None;
            if sa.cells_x.1 == sb.cells_x.0 || sa.cells_x.0 == sb.cells_x.1 {
                let (lo, hi) = overlap(sa.cells_y, sb.cells_y);
                if lo < hi {
                    let (i, sign) = if sa.cells_x.1 == sb.cells_x.0 {
                        (sa.cells_x.1, 1.0)
                    } else {
                        (sa.cells_x.0, -1.0)
                    };
                    found = Some((
                        Normal::X,
                        sign,
                        (lo..hi).map(|j| mesh.vertical_edge(i, j)).collect(),
                    ));
                }
            }
            if sa.cells_y.1 == sb.cells_y.0 || sa.cells_y.0 == sb.cells_y.1 {
                let (lo, hi) = overlap(sa.cells_x, sb.cells_x);
                if lo < hi {
                    let (j, sign) = if sa.cells_y.1 == sb.cells_y.0 {
                        (sa.cells_y.1, 1.0)
                    } else {
                        (sa.cells_y.0, -1.0)
                    };
                    found = Some((
                        Normal::Y,
                        sign,
                        (lo..hi).map(|i| mesh.horizontal_edge(i, j)).collect(),
                    ));
                }
            }
            if let Some((normal, sign_first, edges)) = found {
                let local_first = edges
                    .iter()
                    .map(|&e| sa.local_edge(mesh, e).expect("edge on box a"))
                    .collect();
                let local_second = edges
                    .iter()
                    .map(|&e| sb.local_edge(mesh, e).expect("edge on box b"))
                    .collect();
                let lengths = edges.iter().map(|&e| mesh.edge_length(e)).collect();
                interfaces.push(Interface {
                    first: a,
                    second: b,
                    normal,
                    edges,
                    lengths,
                    local_first,
                    local_second,
                    sign_first,
                });
            }
        }
    }
    for (k, iface) in interfaces.iter().enumerate() {
        subdomains[iface.first].interfaces.push(k);
        subdomains[iface.first].neighbors.push(iface.second);
        subdomains[iface.second].interfaces.push(k);
        subdomains[iface.second].neighbors.push(iface.first);
    }
    Ok(Decomposition {
        labels,
        subdomains,
        interfaces,
    })
}

impl Decomposition {
    pub fn n_subdomains(&self) -> usize {
        self.subdomains.len()
    }

    /// Interface index shared by `a` and `b`, if they are neighbors.
    pub fn interface_between(&self, a: usize, b: usize) -> Option<usize> {
        self.subdomains[a]
            .interfaces
            .iter()
            .copied()
            .find(|&k| self.interfaces[k].other(a) == b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Rect {
        Rect::new(0.0, 1.0, 0.0, 1.0)
    }

    fn interior_edges(m: &RectMesh) -> usize {
        (0..m.n_edges())
            .filter(|&e| m.edge(e).cells.iter().all(Option::is_some))
            .count()
    }

    #[test]
    fn smallest_mesh() {
        let m = RectMesh::uniform(unit(), 1, 1).unwrap();
        assert_eq!(m.n_cells(), 1);
        assert_eq!(m.n_edges(), 4);
        assert_eq!(interior_edges(&m), 0);
    }

    #[test]
    fn two_cells() {
        let m = RectMesh::uniform(unit(), 2, 1).unwrap();
        assert_eq!(m.n_cells(), 2);
        assert_eq!(m.n_edges(), 7);
        assert_eq!(interior_edges(&m), 1);
    }

    #[test]
    fn edge_adjacency_and_counts() {
        let m = RectMesh::uniform(Rect::new(0.0, 3.0, 0.0, 2.0), 5, 3).unwrap();
        assert_eq!(m.n_edges(), 5 * 4 + 3 * 6);
        let mut seen = vec![0usize; m.n_edges()];
        for c in 0..m.n_cells() {
            for e in m.cell_edges(c) {
                seen[e] += 1;
                assert!(m.edge(e).cells.contains(&Some(c)));
            }
        }
        for e in 0..m.n_edges() {
            let expected = if m.boundary_side(e).is_some() { 1 } else { 2 };
            assert_eq!(seen[e], expected, "edge {e}");
            assert!(m.edge_length(e) > 0.0);
        }
    }

    #[test]
    fn full_resolution() {
        let m = RectMesh::uniform(unit(), 200, 200).unwrap();
        for c in [0, 1234, m.n_cells() - 1] {
            let (hx, hy) = m.cell_size(c);
            assert!((hx - 1.0 / 200.0).abs() < 1e-15);
            assert!((hy - 1.0 / 200.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RectMesh::uniform(unit(), 0, 3).is_err());
        assert!(RectMesh::uniform(Rect::new(1.0, 1.0, 0.0, 1.0), 2, 2).is_err());
        let graded = AxisSpec::Graded {
            band: (0.4, 0.6),
            band_cells: 4,
            factor: 0.9,
        };
        assert!(build_mesh(unit(), &graded, &AxisSpec::Uniform { cells: 2 }).is_err());
    }

    #[test]
    fn graded_growth_is_exact() {
        let spec = AxisSpec::Graded {
            band: (500.0, 3450.0),
            band_cells: 600,
            factor: 1.05,
        };
        let m = build_mesh(
            Rect::new(0.0, 3950.0, 0.0, 1.0),
            &spec,
            &AxisSpec::Uniform { cells: 1 },
        )
        .unwrap();
        let w: Vec<f64> = m.xs().windows(2).map(|p| p[1] - p[0]).collect();
        let band_start = m.xs().iter().position(|&x| x == 500.0).unwrap();
        let band_end = m.xs().iter().position(|&x| x == 3450.0).unwrap();
        assert_eq!(band_end - band_start, 600);
        let h = 2950.0 / 600.0;
        for k in band_start..band_end {
            assert!((w[k] - h).abs() < 1e-9);
        }
        for k in band_end + 1..w.len() {
            assert!((w[k] / w[k - 1] - 1.05).abs() < 1e-12);
        }
        for k in 0..band_start.saturating_sub(1) {
            assert!((w[k] / w[k + 1] - 1.05).abs() < 1e-12);
        }
        let max = w.iter().cloned().fold(0.0, f64::max);
        assert!(max <= MAX_GRADING_RATIO * h);
    }

    #[test]
    fn split_at_half() {
        let m = RectMesh::uniform(unit(), 4, 4).unwrap();
        let d = decompose(
            &m,
            &[Rect::new(0.0, 0.5, 0.0, 1.0), Rect::new(0.5, 1.0, 0.0, 1.0)],
        )
        .unwrap();
        assert_eq!(d.interfaces.len(), 1);
        let g = &d.interfaces[0];
        assert_eq!(g.n_edges(), 4);
        assert_eq!(g.sign(0) + g.sign(1), 0.0);
        for (k, &e) in g.edges.iter().enumerate() {
            assert_eq!(d.subdomains[0].global_edge(&m, g.local_first[k]), e);
            assert_eq!(d.subdomains[1].global_edge(&m, g.local_second[k]), e);
        }
    }

    #[test]
    fn nine_boxes() {
        let xs = [0.0, 500.0, 3450.0, 3950.0];
        let ys = [0.0, 65.0, 75.0, 140.0];
        let mut boxes = Vec::new();
        for j in 0..3 {
            for i in 0..3 {
                boxes.push(Rect::new(xs[i], xs[i + 1], ys[j], ys[j + 1]));
            }
        }
        let m = RectMesh::from_coords(
            vec![0.0, 250.0, 500.0, 1000.0, 3450.0, 3950.0],
            vec![0.0, 65.0, 70.0, 75.0, 140.0],
        )
        .unwrap();
        let d = decompose(&m, &boxes).unwrap();
        let mut n5 = d.subdomains[4].neighbors.clone();
        n5.sort();
        assert_eq!(n5, vec![1, 3, 5, 7]);
        assert_eq!(d.interfaces.len(), 12);
        for (c, &l) in d.labels.iter().enumerate() {
            let (x, y) = m.cell_centre(c);
            assert!(boxes[l].contains(x, y));
        }
    }

    #[test]
    fn single_box() {
        let m = RectMesh::uniform(unit(), 3, 3).unwrap();
        let d = decompose(&m, &[unit()]).unwrap();
        assert_eq!(d.n_subdomains(), 1);
        assert!(d.interfaces.is_empty());
    }

    #[test]
    fn bad_tilings() {
        let m = RectMesh::uniform(unit(), 4, 4).unwrap();
        let overlap = [Rect::new(0.0, 0.75, 0.0, 1.0), Rect::new(0.5, 1.0, 0.0, 1.0)];
        assert!(decompose(&m, &overlap).is_err());
        let gap = [Rect::new(0.0, 0.25, 0.0, 1.0), Rect::new(0.5, 1.0, 0.0, 1.0)];
        assert!(decompose(&m, &gap).is_err());
        let cut = [Rect::new(0.0, 0.3, 0.0, 1.0), Rect::new(0.3, 1.0, 0.0, 1.0)];
        assert!(decompose(&m, &cut).is_err());
    }
}
