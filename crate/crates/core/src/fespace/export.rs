use std::io::{BufRead, Write};
use std::sync::Arc;

use super::{BoxMesh, FeFunction};
use crate::error::{Error, Result};

/// Legacy ASCII VTK unstructured grid with point data `u`.
pub fn write_vtk(u: &FeFunction, out: &mut impl Write) -> Result<()> {
    let mesh = u.mesh();
    let d = mesh.dim();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "finsler-dp solution")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", mesh.n_vertices())?;
    for v in 0..mesh.n_vertices() {
        let x = mesh.vertex(v);
        let z = if d == 3 { x[2] } else { 0.0 };
        writeln!(out, "{:e} {:e} {:e}", x[0], x[1], z)?;
    }
    let n = mesh.n_simplices();
    writeln!(out, "CELLS {} {}", n, n * (d + 2))?;
    for k in 0..n {
        let ids: Vec<String> = mesh.simplex(k).iter().map(|v| v.to_string()).collect();
        writeln!(out, "{} {}", d + 1, ids.join(" "))?;
    }
    writeln!(out, "CELL_TYPES {n}")?;
    let cell_type = if d == 3 { 10 } else { 5 };
    for _ in 0..n {
        writeln!(out, "{cell_type}")?;
    }
    writeln!(out, "POINT_DATA {}", mesh.n_vertices())?;
    writeln!(out, "SCALARS u double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for c in u.coefficients() {
        writeln!(out, "{c:e}")?;
    }
    Ok(())
}

/// CSV rows `x,y[,z],u` in vertex order.
pub fn write_csv(u: &FeFunction, out: &mut impl Write) -> Result<()> {
    let mesh = u.mesh();
    let header = if mesh.dim() == 3 { "x,y,z,u" } else { "x,y,u" };
    writeln!(out, "{header}")?;
    for v in 0..mesh.n_vertices() {
        let cols: Vec<String> = mesh.vertex(v).iter().map(|c| format!("{c:e}")).collect();
        writeln!(out, "{},{:e}", cols.join(","), u.coefficients()[v])?;
    }
    Ok(())
}

/// Reads a CSV written by [`write_csv`] back onto `mesh`; coordinates must
/// match the vertex order to 1e-9.
pub fn read_csv(mesh: Arc<BoxMesh>, input: impl BufRead) -> Result<FeFunction> {
    let d = mesh.dim();
    let mut coeffs = Vec::with_capacity(mesh.n_vertices());
    for (line_no, line) in input.lines().enumerate().skip(1) {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("solution csv line {}: {e}", line_no + 1)))?;
        if vals.len() != d + 1 {
            return Err(Error::Config(format!("solution csv line {} has {} columns", line_no + 1, vals.len())));
        }
        let v = coeffs.len();
        if v >= mesh.n_vertices() || mesh.vertex(v).iter().zip(&vals).any(|(a, b)| (a - b).abs() > 1e-9) {
            return Err(Error::Config(format!("solution csv line {} does not match the mesh", line_no + 1)));
        }
        coeffs.push(vals[d]);
    }
    FeFunction::from_coefficients(mesh, coeffs)
}
