//! L2 projection of piecewise-constant traces between nonconforming time grids.

use std::sync::Arc;

use ddtime::timegrid::{integrate_in_time, project, TimePartition, TraceFunction};

fn main() -> ddtime::Result<()> {
    let coarse = Arc::new(TimePartition::uniform(1.0, 3)?);
    let fine = Arc::new(TimePartition::uniform(1.0, 7)?);
    let f = TraceFunction::from_values(coarse.clone(), 1, vec![1.0, -2.0, 4.0])?;
    let g = project(&f, &fine)?;
    println!("coarse {:?}", f.values());
    println!("on fine {:?}", g.values());
    println!("integrals {:?} {:?}", integrate_in_time(&f), integrate_in_time(&g));
    let back = project(&project(&f, &Arc::new(coarse.refine(4)))?, &coarse)?;
    println!("coarse -> refined -> coarse {:?}", back.values());
    Ok(())
}
