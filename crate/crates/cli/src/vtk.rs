//! Field snapshots: legacy VTK structured-points ASCII for viewers, and
//! raw little-endian f64 dumps with a JSON sidecar for refinement studies.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use kschem_core::{Grid, ScalarField};

use crate::csv::fmt_real;
use crate::error::CliError;

/// Legacy VTK STRUCTURED_POINTS ASCII snapshot of one field.
pub fn write_vtk(
    path: &Path,
    grid: &Grid,
    field: &ScalarField,
    name: &str,
    t: f64,
) -> Result<(), CliError> {
    let [nx, ny, nz] = grid.n();
    let [hx, hy, hz] = grid.h();
    let lo = grid.spec().lo;
    let fh = fs::File::create(path)?;
    let mut w = BufWriter::new(fh);
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{name} at t={}", fmt_real(t))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {nx} {ny} {nz}")?;
    writeln!(w, "ORIGIN {} {} {}", fmt_real(lo[0]), fmt_real(lo[1]), fmt_real(lo[2]))?;
    writeln!(w, "SPACING {} {} {}", fmt_real(hx), fmt_real(hy), fmt_real(hz))?;
    writeln!(w, "POINT_DATA {}", grid.len())?;
    writeln!(w, "SCALARS {name} double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    // VTK expects x-fastest order, which matches the storage layout.
    for &v in field.values() {
        writeln!(w, "{}", fmt_real(v))?;
    }
    w.flush()?;
    Ok(())
}

/// Raw little-endian f64 node values (x-fastest) plus a `.json` sidecar
/// describing the lattice.
pub fn write_raw(
    path: &Path,
    grid: &Grid,
    field: &ScalarField,
    name: &str,
    step: u64,
    t: f64,
) -> Result<(), CliError> {
    let mut bytes = Vec::with_capacity(field.values().len() * 8);
    for &v in field.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, &bytes)?;

    let spec = grid.spec();
    let sidecar = format!(
        concat!(
            "{{\n",
            "  \"field\": \"{}\",\n",
            "  \"step\": {},\n",
            "  \"t\": {},\n",
            "  \"dtype\": \"f64le\",\n",
            "  \"order\": \"x-fastest\",\n",
            "  \"n\": [{}, {}, {}],\n",
            "  \"lo\": [{}, {}, {}],\n",
            "  \"hi\": [{}, {}, {}]\n",
            "}}\n"
        ),
        name,
        step,
        fmt_real(t),
        spec.n[0],
        spec.n[1],
        spec.n[2],
        fmt_real(spec.lo[0]),
        fmt_real(spec.lo[1]),
        fmt_real(spec.lo[2]),
        fmt_real(spec.hi[0]),
        fmt_real(spec.hi[1]),
        fmt_real(spec.hi[2]),
    );
    fs::write(path.with_extension("json"), sidecar)?;
    Ok(())
}
