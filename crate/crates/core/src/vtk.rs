//! Legacy ASCII VTK output of the reconstructed surface with nodal fields
//! interpolated to triangle corners, plus a reader used to verify that a
//! written file reloads bit-identically.

use std::fs::File;
use std::io::{self, BufWriter, Read as IoRead, Write as IoWrite};
use std::path::Path;

use thiserror::Error;

use crate::cut::CutComplex;
use crate::geom::Vec3;

#[derive(Debug, Error)]
pub enum VtkError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("malformed vtk file: {0}")]
    Parse(String),
}

/// Writes the surface triangulation as an unstructured grid. Triangles are
/// written non-indexed (three fresh points each), so duplicated cut vertices
/// stay duplicated; each named field is one SCALARS block of per-corner
/// values of the P1 solution. Floats go through `{}`, which prints the
/// shortest digit string that parses back to the same bits.
pub fn write_surface_vtk(
    path: &Path,
    cut: &CutComplex,
    fields: &[(&str, &[f64])],
) -> io::Result<()> {
    let f = File::create(path)?;
    let mut w = BufWriter::new(f);
    let ntri = cut.tris.len();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "surface snapshot")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", 3 * ntri)?;
    for tri in &cut.tris {
        for p in &tri.v {
            writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
        }
    }
    writeln!(w, "CELLS {} {}", ntri, 4 * ntri)?;
    for i in 0..ntri {
        writeln!(w, "3 {} {} {}", 3 * i, 3 * i + 1, 3 * i + 2)?;
    }
    writeln!(w, "CELL_TYPES {ntri}")?;
    for _ in 0..ntri {
        writeln!(w, "5")?;
    }
    writeln!(w, "POINT_DATA {}", 3 * ntri)?;
    for (name, values) in fields {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for tri in &cut.tris {
            for v in cut.tri_corner_values(tri, values) {
                writeln!(w, "{v}")?;
            }
        }
    }
    w.flush()
}

/// Contents of a reloaded snapshot.
#[derive(Debug, Clone)]
pub struct VtkSurface {
    pub points: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    pub fields: Vec<(String, Vec<f64>)>,
}

/// Reads back a file produced by [`write_surface_vtk`]. Only the subset of
/// the legacy format that the writer emits is accepted.
pub fn read_surface_vtk(path: &Path) -> Result<VtkSurface, VtkError> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    let mut toks = text.split_whitespace().peekable();

    // Header: the title line is free-form but the writer pins it.
    for expect in ["#", "vtk", "DataFile", "Version", "3.0"] {
        let got = toks.next().ok_or_else(|| bad("truncated header"))?;
        if got != expect {
            return Err(bad(&format!("header token `{got}`, wanted `{expect}`")));
        }
    }
    for expect in ["surface", "snapshot", "ASCII", "DATASET", "UNSTRUCTURED_GRID"] {
        let got = toks.next().ok_or_else(|| bad("truncated header"))?;
        if got != expect {
            return Err(bad(&format!("header token `{got}`, wanted `{expect}`")));
        }
    }

    expect_tok(&mut toks, "POINTS")?;
    let npts: usize = next_num(&mut toks)?;
    expect_tok(&mut toks, "double")?;
    let mut points = Vec::with_capacity(npts);
    for _ in 0..npts {
        let x: f64 = next_num(&mut toks)?;
        let y: f64 = next_num(&mut toks)?;
        let z: f64 = next_num(&mut toks)?;
        points.push(Vec3::new(x, y, z));
    }

    expect_tok(&mut toks, "CELLS")?;
    let ncells: usize = next_num(&mut toks)?;
    let list_len: usize = next_num(&mut toks)?;
    if list_len != 4 * ncells {
        return Err(bad("cell list length is not 4 per triangle"));
    }
    let mut triangles = Vec::with_capacity(ncells);
    for _ in 0..ncells {
        let n: usize = next_num(&mut toks)?;
        if n != 3 {
            return Err(bad("non-triangle cell"));
        }
        let a = next_num(&mut toks)?;
        let b = next_num(&mut toks)?;
        let c = next_num(&mut toks)?;
        if a >= npts || b >= npts || c >= npts {
            return Err(bad("cell index out of range"));
        }
        triangles.push([a, b, c]);
    }

    expect_tok(&mut toks, "CELL_TYPES")?;
    let ntypes: usize = next_num(&mut toks)?;
    if ntypes != ncells {
        return Err(bad("CELL_TYPES count mismatch"));
    }
    for _ in 0..ntypes {
        let t: usize = next_num(&mut toks)?;
        if t != 5 {
            return Err(bad("cell type is not triangle"));
        }
    }

    expect_tok(&mut toks, "POINT_DATA")?;
    let ndata: usize = next_num(&mut toks)?;
    if ndata != npts {
        return Err(bad("POINT_DATA count mismatch"));
    }
    let mut fields = Vec::new();
    while toks.peek().is_some() {
        expect_tok(&mut toks, "SCALARS")?;
        let name = toks.next().ok_or_else(|| bad("missing field name"))?.to_string();
        expect_tok(&mut toks, "double")?;
        expect_tok(&mut toks, "1")?;
        expect_tok(&mut toks, "LOOKUP_TABLE")?;
        expect_tok(&mut toks, "default")?;
        let mut vals = Vec::with_capacity(npts);
        for _ in 0..npts {
            vals.push(next_num::<f64>(&mut toks)?);
        }
        fields.push((name, vals));
    }
    Ok(VtkSurface { points, triangles, fields })
}

fn bad(msg: &str) -> VtkError {
    VtkError::Parse(msg.to_string())
}

fn expect_tok<'a, I: Iterator<Item = &'a str>>(
    toks: &mut I,
    expect: &str,
) -> Result<(), VtkError> {
    let got = toks.next().ok_or_else(|| bad(&format!("missing `{expect}`")))?;
    if got != expect {
        return Err(bad(&format!("token `{got}`, wanted `{expect}`")));
    }
    Ok(())
}

fn next_num<'a, T: std::str::FromStr>(
    toks: &mut impl Iterator<Item = &'a str>,
) -> Result<T, VtkError> {
    let got = toks.next().ok_or_else(|| bad("truncated number list"))?;
    got.parse().map_err(|_| bad(&format!("bad number `{got}`")))
}
