use anyhow::{bail, Context, Result};
use sof_core::Grid;

/// Parses `circle:R:N` or `box:B:NxM`.
pub fn parse_grid(spec: &str) -> Result<Grid> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["circle", r, n] => {
            let radius: f64 = r.parse().with_context(|| format!("bad circle radius {r:?}"))?;
            let count: usize = n.parse().with_context(|| format!("bad point count {n:?}"))?;
            Ok(Grid::circle(radius, count))
        }
        ["box", b, dims] => {
            let bound: f64 = b.parse().with_context(|| format!("bad box bound {b:?}"))?;
            let (nx, ny) = match dims.split_once('x') {
                Some((nx, ny)) => (
                    nx.parse().with_context(|| format!("bad grid size {dims:?}"))?,
                    ny.parse().with_context(|| format!("bad grid size {dims:?}"))?,
                ),
                None => bail!("box grid size must look like NxM, got {dims:?}"),
            };
            Ok(Grid::box_grid(bound, nx, ny))
        }
        _ => bail!("grid must be circle:R:N or box:B:NxM, got {spec:?}"),
    }
}
