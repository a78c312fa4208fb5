//! Legacy ASCII VTK export of the state and the per-element control and
//! multiplier data.

use crate::CliError;
use morley_oc::mesh::Mesh;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Writes an unstructured triangle grid: one point scalar field plus any
/// number of cell scalar fields. Appends `.vtk` when the path has no
/// extension.
pub fn export_vtk(
    mesh: &Mesh,
    point_data: (&str, &[f64]),
    cell_data: &[(&str, Vec<f64>)],
    path: &Path,
) -> Result<PathBuf, CliError> {
    assert_eq!(point_data.1.len(), mesh.vertices.len(), "one value per vertex");
    for (name, values) in cell_data {
        assert_eq!(values.len(), mesh.triangles.len(), "one {name} value per cell");
    }
    let path = if path.extension().is_none() {
        path.with_extension("vtk")
    } else {
        path.to_path_buf()
    };
    let file = std::fs::File::create(&path)
        .map_err(|e| CliError::Io { path: path.clone(), source: e })?;
    let mut out = std::io::BufWriter::new(file);
    let io_err = |e: std::io::Error, path: &Path| CliError::Io { path: path.to_path_buf(), source: e };

    (|| -> std::io::Result<()> {
        writeln!(out, "# vtk DataFile Version 3.0")?;
        writeln!(out, "discrete state and control")?;
        writeln!(out, "ASCII")?;
        writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
        writeln!(out, "POINTS {} double", mesh.vertices.len())?;
        for v in &mesh.vertices {
            writeln!(out, "{} {} 0", v[0], v[1])?;
        }
        writeln!(out, "CELLS {} {}", mesh.triangles.len(), 4 * mesh.triangles.len())?;
        for t in &mesh.triangles {
            writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
        }
        writeln!(out, "CELL_TYPES {}", mesh.triangles.len())?;
        for _ in &mesh.triangles {
            writeln!(out, "5")?;
        }
        writeln!(out, "POINT_DATA {}", mesh.vertices.len())?;
        writeln!(out, "SCALARS {} double 1", point_data.0)?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for v in point_data.1 {
            writeln!(out, "{v}")?;
        }
        if !cell_data.is_empty() {
            writeln!(out, "CELL_DATA {}", mesh.triangles.len())?;
            for (name, values) in cell_data {
                writeln!(out, "SCALARS {name} double 1")?;
                writeln!(out, "LOOKUP_TABLE default")?;
                for v in values {
                    writeln!(out, "{v}")?;
                }
            }
        }
        out.flush()
    })()
    .map_err(|e| io_err(e, &path))?;
    Ok(path)
}
