//! Plain-text writers and readers: mesh and field CSVs, legacy ASCII VTK.
//!
//! Floats use Rust's shortest round-trip formatting, so reading a file back
//! reproduces the written values bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fem::DofVector;
use crate::geometry::Region;
use crate::material::ElementState;
use crate::mesh::Mesh;
use crate::vec2::Vec2;

pub const FIELDS_HEADER: &str = "element,x,y,Bx,By,Hx,Hy,region";

pub fn vertices_csv(mesh: &Mesh) -> String {
    let mut s = String::from("vertex,x,y,boundary\n");
    for (i, v) in mesh.vertices.iter().enumerate() {
        let _ = writeln!(s, "{i},{:e},{:e},{}", v[0], v[1], mesh.boundary[i] as u8);
    }
    s
}

pub fn triangles_csv(mesh: &Mesh) -> String {
    let mut s = String::from("element,v0,v1,v2,region\n");
    for (e, t) in mesh.triangles.iter().enumerate() {
        let _ = writeln!(
            s,
            "{e},{},{},{},{}",
            t[0],
            t[1],
            t[2],
            mesh.regions[e].name()
        );
    }
    s
}

pub fn fields_csv(mesh: &Mesh, states: &[ElementState]) -> String {
    let mut s = String::with_capacity(80 * states.len());
    s.push_str(FIELDS_HEADER);
    s.push('\n');
    for (e, st) in states.iter().enumerate() {
        let c = mesh.centroid(e);
        let _ = writeln!(
            s,
            "{e},{:e},{:e},{:e},{:e},{:e},{:e},{}",
            c[0],
            c[1],
            st.b[0],
            st.b[1],
            st.h[0],
            st.h[1],
            mesh.regions[e].name()
        );
    }
    s
}

/// Contents of a fields CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTable {
    pub centroids: Vec<Vec2>,
    pub states: Vec<ElementState>,
    pub regions: Vec<Region>,
}

pub fn parse_fields_csv(text: &str, path: &Path) -> Result<FieldTable> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == FIELDS_HEADER => {}
        _ => return Err(err(1, format!("expected header `{FIELDS_HEADER}`"))),
    }
    let mut table = FieldTable {
        centroids: Vec::new(),
        states: Vec::new(),
        regions: Vec::new(),
    };
    for (i, line) in lines {
        let ln = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 8 {
            return Err(err(ln, format!("expected 8 columns, found {}", cols.len())));
        }
        let id: usize = cols[0]
            .parse()
            .map_err(|_| err(ln, format!("bad element id `{}`", cols[0])))?;
        if id != table.states.len() {
            return Err(err(
                ln,
                format!("element ids must be consecutive, got {id}"),
            ));
        }
        let mut v = [0.0; 6];
        for k in 0..6 {
            v[k] = cols[k + 1]
                .parse()
                .map_err(|_| err(ln, format!("bad number `{}`", cols[k + 1])))?;
        }
        let region = Region::from_name(cols[7])
            .ok_or_else(|| err(ln, format!("unknown region `{}`", cols[7])))?;
        table.centroids.push([v[0], v[1]]);
        table
            .states
            .push(ElementState::new([v[4], v[5]], [v[2], v[3]]));
        table.regions.push(region);
    }
    Ok(table)
}

pub fn read_fields_csv(path: impl AsRef<Path>) -> Result<FieldTable> {
    let path = path.as_ref();
    parse_fields_csv(&fs::read_to_string(path)?, path)
}

/// Legacy ASCII VTK unstructured grid with region codes, optional element
/// fields and an optional nodal potential.
pub fn vtk(mesh: &Mesh, states: Option<&[ElementState]>, a: Option<&DofVector>) -> String {
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\nddmag\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", mesh.n_vertices());
    for v in &mesh.vertices {
        let _ = writeln!(s, "{:e} {:e} 0", v[0], v[1]);
    }
    let ne = mesh.n_elements();
    let _ = writeln!(s, "CELLS {ne} {}", 4 * ne);
    for t in &mesh.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {ne}");
    for _ in 0..ne {
        s.push_str("5\n");
    }
    let _ = writeln!(
        s,
        "CELL_DATA {ne}\nSCALARS region int 1\nLOOKUP_TABLE default"
    );
    for r in &mesh.regions {
        let _ = writeln!(s, "{}", r.code());
    }
    if let Some(states) = states {
        for (name, pick) in [("B", 0usize), ("H", 1)] {
            let _ = writeln!(s, "VECTORS {name} double");
            for st in states {
                let v = if pick == 0 { st.b } else { st.h };
                let _ = writeln!(s, "{:e} {:e} 0", v[0], v[1]);
            }
        }
    }
    if let Some(a) = a {
        let _ = writeln!(
            s,
            "POINT_DATA {}\nSCALARS A double 1\nLOOKUP_TABLE default",
            mesh.n_vertices()
        );
        for v in &a.0 {
            let _ = writeln!(s, "{v:e}");
        }
    }
    s
}

/// Writes `vertices.csv`, `triangles.csv` and `mesh.vtk` into `dir`.
pub fn write_mesh(dir: impl AsRef<Path>, mesh: &Mesh) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let files = [
        ("vertices.csv", vertices_csv(mesh)),
        ("triangles.csv", triangles_csv(mesh)),
        ("mesh.vtk", vtk(mesh, None, None)),
    ];
    let mut out = Vec::new();
    for (name, body) in files {
        let p = dir.join(name);
        fs::write(&p, body)?;
        out.push(p);
    }
    Ok(out)
}

/// Writes `fields.csv` and `fields.vtk` into `dir`.
pub fn write_fields(
    dir: impl AsRef<Path>,
    mesh: &Mesh,
    states: &[ElementState],
    a: &DofVector,
) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    fs::write(dir.join("fields.csv"), fields_csv(mesh, states))?;
    fs::write(dir.join("fields.vtk"), vtk(mesh, Some(states), Some(a)))?;
    Ok(())
}
