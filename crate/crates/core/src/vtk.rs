//! Legacy ASCII VTK output.

use std::io::Write;

use crate::discretization::{Discretization, FieldVectors};
use crate::geometry::{BackgroundMesh, CellKind, Point, Tag};

fn cell_type(kind: CellKind) -> u8 {
    match kind {
        CellKind::Triangle => 5,
        CellKind::Quad => 9,
    }
}

fn tag_code(t: Tag) -> u8 {
    match t {
        Tag::Fluid => 0,
        Tag::Cut => 1,
        Tag::Solid => 2,
    }
}

fn write_grid(w: &mut impl Write, mesh: &BackgroundMesh, title: &str) -> std::io::Result<()> {
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.vertices().len())?;
    for p in mesh.vertices() {
        writeln!(w, "{} {} 0", p[0], p[1])?;
    }
    let ne = mesh.num_elements();
    let nv = mesh.kind().vertices_per_element();
    writeln!(w, "CELLS {} {}", ne, ne * (nv + 1))?;
    for e in 0..ne {
        let ids: Vec<String> = mesh.element(e).iter().map(|v| v.to_string()).collect();
        writeln!(w, "{} {}", nv, ids.join(" "))?;
    }
    writeln!(w, "CELL_TYPES {ne}")?;
    let ct = cell_type(mesh.kind());
    for _ in 0..ne {
        writeln!(w, "{ct}")?;
    }
    Ok(())
}

fn write_tags(w: &mut impl Write, tags: &[Tag]) -> std::io::Result<()> {
    writeln!(w, "CELL_DATA {}", tags.len())?;
    writeln!(w, "SCALARS tag int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for &t in tags {
        writeln!(w, "{}", tag_code(t))?;
    }
    Ok(())
}

/// Background mesh with optional element tags (0 fluid, 1 cut, 2 solid).
pub fn write_mesh(w: &mut impl Write, mesh: &BackgroundMesh, tags: Option<&[Tag]>) -> std::io::Result<()> {
    write_grid(w, mesh, "background mesh")?;
    if let Some(t) = tags {
        write_tags(w, t)?;
    }
    Ok(())
}

/// Velocity and pressure sampled at mesh vertices. Vertices that only touch
/// solid elements get zero.
pub fn write_fields(w: &mut impl Write, disc: &Discretization, fields: &FieldVectors, title: &str) -> std::io::Result<()> {
    let mesh = &disc.mesh;
    let tags = &disc.rules.class.tags;
    let nvert = mesh.vertices().len();
    let mut owner = vec![usize::MAX; nvert];
    for e in 0..mesh.num_elements() {
        if tags[e] == Tag::Solid {
            continue;
        }
        for &v in mesh.element(e) {
            if owner[v] == usize::MAX {
                owner[v] = e;
            }
        }
    }
    let mut vel = vec![[0.0; 2]; nvert];
    let mut pre = vec![0.0; nvert];
    for v in 0..nvert {
        let e = owner[v];
        if e == usize::MAX {
            continue;
        }
        let map = mesh.affine_map(e);
        let pv = fields.eval(disc, e, &map, mesh.vertices()[v]);
        vel[v] = pv.u;
        pre[v] = pv.p;
    }
    write_grid(w, mesh, title)?;
    writeln!(w, "POINT_DATA {nvert}")?;
    writeln!(w, "SCALARS velocity_magnitude double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for u in &vel {
        writeln!(w, "{:.10e}", u[0].hypot(u[1]))?;
    }
    writeln!(w, "SCALARS pressure double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for p in &pre {
        writeln!(w, "{p:.10e}")?;
    }
    writeln!(w, "VECTORS velocity double")?;
    for u in &vel {
        writeln!(w, "{:.10e} {:.10e} 0", u[0], u[1])?;
    }
    write_tags(w, tags)
}

/// Fluid sub-polygons of cut elements and their interface chords as
/// polydata.
pub fn write_cut_geometry(w: &mut impl Write, disc: &Discretization) -> std::io::Result<()> {
    let mut points: Vec<Point> = Vec::new();
    let mut polys: Vec<Vec<usize>> = Vec::new();
    let mut lines: Vec<[usize; 2]> = Vec::new();
    for e in disc.rules.class.cut_elements() {
        let Some(r) = disc.rules.rule(e) else { continue };
        for poly in &r.polygons {
            let start = points.len();
            points.extend_from_slice(poly);
            polys.push((start..points.len()).collect());
        }
        for c in &r.chords {
            let start = points.len();
            points.extend_from_slice(c);
            lines.push([start, start + 1]);
        }
    }
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "cut geometry")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET POLYDATA")?;
    writeln!(w, "POINTS {} double", points.len())?;
    for p in &points {
        writeln!(w, "{} {} 0", p[0], p[1])?;
    }
    let size: usize = polys.iter().map(|p| p.len() + 1).sum();
    writeln!(w, "POLYGONS {} {}", polys.len(), size)?;
    for p in &polys {
        let ids: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{} {}", p.len(), ids.join(" "))?;
    }
    writeln!(w, "LINES {} {}", lines.len(), 3 * lines.len())?;
    for l in &lines {
        writeln!(w, "2 {} {}", l[0], l[1])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fe::FeTriplet;
    use crate::geometry::{classify_elements, Circle};

    #[test]
    fn mesh_file_counts() {
        let mesh = BackgroundMesh::new(3, CellKind::Quad).unwrap();
        let class = classify_elements(&mesh, &Circle::new([0.5, 0.5], 0.21));
        let mut buf = Vec::new();
        write_mesh(&mut buf, &mesh, Some(&class.tags)).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.contains("POINTS 16 double"));
        assert!(s.contains("CELLS 9 45"));
        assert_eq!(s.lines().filter(|l| *l == "9").count(), 9);
        assert!(s.contains("CELL_DATA 9"));
    }

    #[test]
    fn field_and_cut_dumps() {
        let disc = Discretization::new(6, FeTriplet::P2P1P0, &Circle::new([0.5, 0.5], 0.21)).unwrap();
        let u = |x: Point| [x[0], -x[1]];
        let fields = disc.interpolate(&u, &|x: Point| x[0], &|_, _| [0.0, 0.0]);
        let mut buf = Vec::new();
        write_fields(&mut buf, &disc, &fields, "t").unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.contains("POINT_DATA 49"));
        // Vertex (1/6, 0) sits in a fluid element: |u| = 1/6.
        let vals: Vec<f64> = s.lines().skip_while(|l| !l.starts_with("SCALARS velocity_magnitude")).skip(2).take(49).map(|l| l.parse().unwrap()).collect();
        assert!((vals[1] - 1.0 / 6.0).abs() < 1e-9);

        let mut buf = Vec::new();
        write_cut_geometry(&mut buf, &disc).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let ncut = disc.rules.class.count(Tag::Cut);
        assert!(s.contains(&format!("LINES {ncut} {}", 3 * ncut)));
    }
}
