//! Time partitions, piecewise-constant traces and the L2 projection between partitions.

use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Relative tolerance under which two slab boundaries are treated as the same instant.
pub const TIME_TOL: f64 = 1e-12;

/// Slabs `(t_{m-1}, t_m]` covering `(0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimePartition {
    bounds: Vec<f64>,
}

impl TimePartition {
    pub fn new(bounds: Vec<f64>) -> Result<Self> {
        if bounds.len() < 2 {
            return Err(Error::TimeGrid("need at least one slab".into()));
        }
        if bounds[0] != 0.0 {
            return Err(Error::TimeGrid(format!("partition starts at {}", bounds[0])));
        }
        if bounds.windows(2).any(|w| !(w[1] > w[0])) || !bounds.iter().all(|t| t.is_finite()) {
            return Err(Error::TimeGrid("boundaries not strictly increasing".into()));
        }
        Ok(Self { bounds })
    }

    /// `m` equal slabs on `(0, T]`.
    pub fn uniform(t_final: f64, m: usize) -> Result<Self> {
        if m == 0 || !(t_final > 0.0) {
            return Err(Error::TimeGrid(format!("bad uniform grid T={t_final}, M={m}")));
        }
        let bounds = (0..=m)
            .map(|k| if k == m { t_final } else { t_final * k as f64 / m as f64 })
            .collect();
        Self::new(bounds)
    }

    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    pub fn final_time(&self) -> f64 {
        *self.bounds.last().unwrap()
    }

    pub fn n_slabs(&self) -> usize {
        self.bounds.len() - 1
    }

    pub fn slab(&self, m: usize) -> (f64, f64) {
        (self.bounds[m], self.bounds[m + 1])
    }

    pub fn dt(&self, m: usize) -> f64 {
        self.bounds[m + 1] - self.bounds[m]
    }

    pub fn dts(&self) -> Vec<f64> {
        self.bounds.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn min_dt(&self) -> f64 {
        self.dts().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max_dt(&self) -> f64 {
        self.dts().into_iter().fold(0.0, f64::max)
    }

    /// Split every slab into `k` equal pieces.
    pub fn refine(&self, k: usize) -> Self {
        assert!(k >= 1);
        let mut bounds = Vec::with_capacity(self.n_slabs() * k + 1);
        bounds.push(0.0);
        for m in 0..self.n_slabs() {
            let (a, b) = self.slab(m);
            for q in 1..=k {
                bounds.push(if q == k { b } else { a + (b - a) * q as f64 / k as f64 });
            }
        }
        Self { bounds }
    }

    /// Slab containing `t` under the `(t_{m-1}, t_m]` convention; `t = 0` maps to slab 0.
    pub fn slab_of(&self, t: f64) -> usize {
        let k = self.bounds.partition_point(|&b| b < t);
        k.saturating_sub(1).min(self.n_slabs() - 1)
    }

    fn same_final_time(&self, other: &TimePartition) -> Result<()> {
        let (a, b) = (self.final_time(), other.final_time());
        if (a - b).abs() > TIME_TOL * a.max(b) {
            return Err(Error::FinalTimeMismatch(a, b));
        }
        Ok(())
    }
}

/// Pieces `(source_slab, target_slab, overlap_length)` of the merged partition, in time order.
pub fn overlaps(source: &TimePartition, target: &TimePartition) -> Result<Vec<(usize, usize, f64)>> {
    source.same_final_time(target)?;
    let tol = TIME_TOL * target.final_time();
    let (a, b) = (source.bounds(), target.bounds());
    let (ms, mt) = (source.n_slabs(), target.n_slabs());
    let mut out = Vec::with_capacity(ms + mt);
    let (mut i, mut j) = (0, 0);
    let mut start = 0.0;
    while i < ms && j < mt {
        let (ea, eb) = (a[i + 1], b[j + 1]);
        let end;
        if (ea - eb).abs() <= tol || (i + 1 == ms && j + 1 == mt) {
            end = eb;
            out.push((i, j, end - start));
            i += 1;
            j += 1;
        } else if ea < eb {
            end = ea;
            out.push((i, j, end - start));
            i += 1;
        } else {
            end = eb;
            out.push((i, j, end - start));
            j += 1;
        }
        start = end;
    }
    Ok(out)
}

/// Reusable projection operator from one partition onto another.
#[derive(Debug, Clone)]
pub struct Projection {
    pieces: Vec<(usize, usize, f64)>,
    target_len: Vec<f64>,
    identity: bool,
    n_source: usize,
}

impl Projection {
    pub fn new(source: &TimePartition, target: &TimePartition) -> Result<Self> {
        let identity = source == target;
        let pieces = overlaps(source, target)?;
        let mut target_len = vec![0.0; target.n_slabs()];
        for &(_, j, w) in &pieces {
            target_len[j] += w;
        }
        Ok(Self {
            pieces,
            target_len,
            identity,
            n_source: source.n_slabs(),
        })
    }

    pub fn n_target(&self) -> usize {
        self.target_len.len()
    }

    pub fn n_source(&self) -> usize {
        self.n_source
    }

    /// Project slab-major data with `n_edges` values per slab.
    pub fn apply(&self, values: &[f64], n_edges: usize) -> Vec<f64> {
        assert_eq!(values.len(), self.n_source * n_edges);
        if self.identity {
            return values.to_vec();
        }
        let mut out = vec![0.0; self.n_target() * n_edges];
        for &(i, j, w) in &self.pieces {
            let frac = w / self.target_len[j];
            let src = &values[i * n_edges..(i + 1) * n_edges];
            let dst = &mut out[j * n_edges..(j + 1) * n_edges];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += frac * s;
            }
        }
        out
    }
}

/// Piecewise-constant-in-time data on a set of interface edges.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceFunction {
    partition: Arc<TimePartition>,
    n_edges: usize,
    values: Vec<f64>,
}

impl TraceFunction {
    pub fn zeros(partition: Arc<TimePartition>, n_edges: usize) -> Self {
        let values = vec![0.0; partition.n_slabs() * n_edges];
        Self { partition, n_edges, values }
    }

    pub fn from_values(partition: Arc<TimePartition>, n_edges: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != partition.n_slabs() * n_edges {
            return Err(Error::Dimension(format!(
                "trace has {} values, expected {} slabs x {} edges",
                values.len(),
                partition.n_slabs(),
                n_edges
            )));
        }
        Ok(Self { partition, n_edges, values })
    }

    pub fn constant(partition: Arc<TimePartition>, n_edges: usize, v: f64) -> Self {
        let values = vec![v; partition.n_slabs() * n_edges];
        Self { partition, n_edges, values }
    }

    pub fn partition(&self) -> &Arc<TimePartition> {
        &self.partition
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn n_slabs(&self) -> usize {
        self.partition.n_slabs()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, slab: usize, edge: usize) -> f64 {
        self.values[slab * self.n_edges + edge]
    }

    pub fn slab_values(&self, slab: usize) -> &[f64] {
        &self.values[slab * self.n_edges..(slab + 1) * self.n_edges]
    }

    pub fn set_slab(&mut self, slab: usize, v: &[f64]) {
        self.values[slab * self.n_edges..(slab + 1) * self.n_edges].copy_from_slice(v);
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["slab_index", "t_begin", "t_end", "edge_index", "value"])?;
        for m in 0..self.n_slabs() {
            let (a, b) = self.partition.slab(m);
            for e in 0..self.n_edges {
                w.write_record(&[
                    m.to_string(),
                    format!("{a:e}"),
                    format!("{b:e}"),
                    e.to_string(),
                    format!("{:e}", self.get(m, e)),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Average `source` over each slab of `target`.
pub fn project(source: &TraceFunction, target: &Arc<TimePartition>) -> Result<TraceFunction> {
    let p = Projection::new(&source.partition, target)?;
    TraceFunction::from_values(target.clone(), source.n_edges, p.apply(&source.values, source.n_edges))
}

/// Per-edge time integral.
pub fn integrate_in_time(f: &TraceFunction) -> Vec<f64> {
    let mut out = vec![0.0; f.n_edges];
    for m in 0..f.n_slabs() {
        let dt = f.partition.dt(m);
        for (o, v) in out.iter_mut().zip(f.slab_values(m)) {
            *o += dt * v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn part(b: &[f64]) -> Arc<TimePartition> {
        Arc::new(TimePartition::new(b.to_vec()).unwrap())
    }

    #[test]
    fn identity_is_exact() {
        let p = part(&[0.0, 0.1, 0.37, 1.0]);
        let f = TraceFunction::from_values(p.clone(), 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(project(&f, &p).unwrap(), f);
    }

    #[test]
    fn halves_to_whole() {
        let f = TraceFunction::from_values(part(&[0.0, 0.5, 1.0]), 1, vec![3.0, 7.0]).unwrap();
        let g = project(&f, &part(&[0.0, 1.0])).unwrap();
        assert!((g.get(0, 0) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn constant_reproduced() {
        let f = TraceFunction::constant(part(&[0.0, 1.0]), 3, 2.5);
        let g = project(&f, &part(&[0.0, 0.1, 0.25, 0.9, 1.0])).unwrap();
        assert!(g.values().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn hand_integration() {
        let f = TraceFunction::from_values(part(&[0.0, 0.3, 1.0]), 1, vec![1.0, 0.0]).unwrap();
        let g = project(&f, &part(&[0.0, 0.5, 1.0])).unwrap();
        assert!((g.get(0, 0) - 0.6).abs() < 1e-15);
        assert_eq!(g.get(1, 0), 0.0);
    }

    #[test]
    fn integrals() {
        let f = TraceFunction::constant(part(&[0.0, 0.2, 2.0]), 1, 1.0);
        assert!((integrate_in_time(&f)[0] - 2.0).abs() < 1e-15);
        let g = TraceFunction::from_values(part(&[0.0, 0.5, 1.0]), 1, vec![1.0, 4.0]).unwrap();
        assert!((integrate_in_time(&g)[0] - 2.5).abs() < 1e-15);
    }

    #[test]
    fn mismatched_final_time() {
        let f = TraceFunction::zeros(part(&[0.0, 1.0]), 1);
        assert!(matches!(
            project(&f, &part(&[0.0, 2.0])),
            Err(Error::FinalTimeMismatch(..))
        ));
    }

    #[test]
    fn invalid_partitions() {
        assert!(TimePartition::new(vec![0.0]).is_err());
        assert!(TimePartition::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(TimePartition::new(vec![0.1, 1.0]).is_err());
        assert!(TimePartition::uniform(1.0, 0).is_err());
    }

    #[test]
    fn slab_lookup() {
        let p = TimePartition::uniform(1.0, 4).unwrap();
        assert_eq!(p.slab_of(0.0), 0);
        assert_eq!(p.slab_of(0.25), 0);
        assert_eq!(p.slab_of(0.2500001), 1);
        assert_eq!(p.slab_of(1.0), 3);
    }

    #[test]
    fn nearly_equal_bounds_merge() {
        let a = TimePartition::uniform(1.0, 3).unwrap();
        let b = TimePartition::new(vec![0.0, 1.0 / 3.0 + 1e-15, 1.0]).unwrap();
        let pieces = overlaps(&a, &b).unwrap();
        assert_eq!(pieces.len(), 3);
        assert!(pieces.iter().all(|p| p.2 > 0.1));
    }

    #[test]
    fn csv_dump() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let f = TraceFunction::constant(part(&[0.0, 0.5, 1.0]), 2, 1.0);
        f.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("slab_index,t_begin,t_end,edge_index,value"));
        assert_eq!(text.lines().count(), 5);
    }

    fn partition_strategy() -> impl Strategy<Value = TimePartition> {
        prop::collection::vec(0.01f64..1.0, 1..12).prop_map(|w| {
            let total: f64 = w.iter().sum();
            let mut b = vec![0.0];
            let mut t = 0.0;
            for x in &w {
                t += x / total;
                b.push(t);
            }
            *b.last_mut().unwrap() = 1.0;
            TimePartition::new(b).unwrap()
        })
    }

    proptest! {
        #[test]
        fn conservation_and_bounds(
            src in partition_strategy(),
            dst in partition_strategy(),
            seed in prop::collection::vec(-5.0f64..5.0, 12 * 2),
        ) {
            let src = Arc::new(src);
            let dst = Arc::new(dst);
            let vals = seed[..src.n_slabs() * 2].to_vec();
            let f = TraceFunction::from_values(src, 2, vals.clone()).unwrap();
            let g = project(&f, &dst).unwrap();
            let (i0, i1) = (integrate_in_time(&f), integrate_in_time(&g));
            let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for e in 0..2 {
                prop_assert!((i0[e] - i1[e]).abs() <= 1e-13 * scale);
            }
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for &v in g.values() {
                prop_assert!(v >= lo - 1e-13 * scale && v <= hi + 1e-13 * scale);
            }
        }

        #[test]
        fn coarse_fine_coarse(coarse in partition_strategy(), k in 1usize..5, seed in prop::collection::vec(-5.0f64..5.0, 12)) {
            let coarse = Arc::new(coarse);
            let fine = Arc::new(coarse.refine(k));
            let vals = seed[..coarse.n_slabs()].to_vec();
            let f = TraceFunction::from_values(coarse.clone(), 1, vals.clone()).unwrap();
            let back = project(&project(&f, &fine).unwrap(), &coarse).unwrap();
            for (a, b) in back.values().iter().zip(&vals) {
                prop_assert!((a - b).abs() <= 1e-13 * b.abs().max(1.0));
            }
        }
    }
}
