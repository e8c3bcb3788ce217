//! Backward Euler march of one subdomain with all-Dirichlet data, printing energy and mass balance.

use ddtime::geometry::{Rect, RectMesh};
use ddtime::mixedfem::{BcKind, BoundarySpec, CellCoefficients, Forcing, SubdomainSystem};
use ddtime::timegrid::TimePartition;

fn main() -> ddtime::Result<()> {
    let mesh = RectMesh::uniform(Rect::new(0.0, 1.0, 0.0, 1.0), 40, 40)?;
    let n = mesh.n_cells();
    let c0: Vec<f64> = (0..n)
        .map(|k| {
            let (x, y) = mesh.cell_centre(k);
            (-40.0 * ((x - 0.4).powi(2) + (y - 0.6).powi(2))).exp()
        })
        .collect();
    let sys = SubdomainSystem::assemble(mesh, CellCoefficients::uniform(n, 1.0, 0.05))?;
    let spec = BoundarySpec::from_fn(sys.mesh(), |_, _| BcKind::Dirichlet);
    let part = TimePartition::uniform(1.0, 20)?;
    let mut prev = c0.clone();
    sys.march(&spec, &part, &c0, &Forcing::Zero, &mut |_, d| d.fill(0.0), &mut |m, c, r| {
        let dt = part.dt(m);
        let energy: f64 = (0..n).map(|k| sys.porosity_mass()[k] * c[k] * c[k]).sum();
        let storage: f64 = (0..n).map(|k| sys.porosity_mass()[k] * (c[k] - prev[k]) / dt).sum();
        let outflow: f64 = spec.edges().iter().map(|&e| sys.edge_length(e) * sys.boundary_sign(e) * r[e]).sum();
        println!("slab {m:2}  energy {energy:.6e}  mass defect {:.1e}", (storage + outflow).abs());
        prev.copy_from_slice(c);
    })?;
    Ok(())
}
