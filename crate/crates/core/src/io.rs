//! CSV tables, state checkpoints and VTK legacy output.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{EnergyReport, State};
use crate::fespace::FeSpace;
use crate::seal::SealRow;
use crate::verify::ConvergenceRow;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ConvergenceRecord {
    h: f64,
    k: f64,
    p: usize,
    energy_error: f64,
    l2_error: f64,
    wall_seconds: f64,
}

/// One line of the energy ledger CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub t: f64,
    pub kinetic: f64,
    pub elastic: f64,
    pub viscoelastic_total: f64,
    pub dissipated: f64,
    pub total: f64,
}

impl From<&EnergyReport> for LedgerRow {
    fn from(r: &EnergyReport) -> Self {
        Self {
            t: r.t,
            kinetic: r.kinetic,
            elastic: r.elastic,
            viscoelastic_total: r.viscoelastic_total(),
            dissipated: r.dissipated,
            total: r.total(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct SealRecord {
    omega: f64,
    station: f64,
    p_min: f64,
    p_max: f64,
}

fn write_records<T: Serialize>(w: impl Write, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

fn read_records<T: for<'de> Deserialize<'de>>(r: impl Read) -> Result<Vec<T>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(Error::from)
}

/// Header `h,k,p,energy_error,l2_error,wall_seconds`.
pub fn write_convergence_csv(w: impl Write, rows: &[ConvergenceRow]) -> Result<()> {
    write_records(
        w,
        rows.iter().map(|r| ConvergenceRecord {
            h: r.h,
            k: r.k,
            p: r.p,
            energy_error: r.energy_error,
            l2_error: r.l2_error,
            wall_seconds: r.wall_seconds,
        }),
    )
}

pub fn read_convergence_csv(r: impl Read) -> Result<Vec<ConvergenceRow>> {
    Ok(read_records::<ConvergenceRecord>(r)?
        .into_iter()
        .map(|r| ConvergenceRow {
            h: r.h,
            k: r.k,
            p: r.p,
            energy_error: r.energy_error,
            l2_error: r.l2_error,
            wall_seconds: r.wall_seconds,
        })
        .collect())
}

/// Header `t,kinetic,elastic,viscoelastic_total,dissipated,total`.
pub fn write_ledger_csv(w: impl Write, reports: &[EnergyReport]) -> Result<()> {
    write_records(w, reports.iter().map(LedgerRow::from))
}

pub fn read_ledger_csv(r: impl Read) -> Result<Vec<LedgerRow>> {
    read_records(r)
}

/// Header `omega,station,p_min,p_max`.
pub fn write_seal_csv(w: impl Write, rows: &[SealRow]) -> Result<()> {
    write_records(
        w,
        rows.iter().map(|r| SealRecord {
            omega: r.omega,
            station: r.station,
            p_min: r.p_min,
            p_max: r.p_max,
        }),
    )
}

pub fn read_seal_csv(r: impl Read) -> Result<Vec<SealRow>> {
    Ok(read_records::<SealRecord>(r)?
        .into_iter()
        .map(|r| SealRow {
            omega: r.omega,
            station: r.station,
            p_min: r.p_min,
            p_max: r.p_max,
        })
        .collect())
}

/// Checkpoint: one row per DOF, `t,dof,u1,u0,ve1,…,veM`. Floats are written
/// in shortest round-trip form, so reading restores the state bit for bit.
pub fn write_state_csv(w: impl Write, state: &State) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string(), "dof".into(), "u1".into(), "u0".into()];
    header.extend((1..=state.ve.len()).map(|m| format!("ve{m}")));
    out.write_record(&header)?;
    let mut buf = ryu::Buffer::new();
    for i in 0..state.n_dofs() {
        let mut record = csv::StringRecord::new();
        record.push_field(buf.format(state.t));
        record.push_field(&i.to_string());
        record.push_field(buf.format(state.u1[i]));
        record.push_field(buf.format(state.u0[i]));
        for ve in &state.ve {
            record.push_field(buf.format(ve[i]));
        }
        out.write_record(&record)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_state_csv(r: impl Read) -> Result<State> {
    let bad = |detail: String| Error::Format {
        what: "state checkpoint",
        detail,
    };
    let mut reader = csv::Reader::from_reader(r);
    let n_arms = reader
        .headers()?
        .len()
        .checked_sub(4)
        .ok_or_else(|| bad("fewer than 4 columns".into()))?;
    let mut state = State::zero(0, n_arms, 0.0);
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let num = |c: usize| -> Result<f64> {
            record[c]
                .parse()
                .map_err(|e| bad(format!("row {}, column {}: {e}", row + 1, c + 1)))
        };
        if record[1] != row.to_string() {
            return Err(bad(format!("row {} has dof {}", row + 1, &record[1])));
        }
        let t = num(0)?;
        if row == 0 {
            state.t = t;
        } else if t.to_bits() != state.t.to_bits() {
            return Err(bad(format!("row {} has time {t}, expected {}", row + 1, state.t)));
        }
        state.u1.push(num(2)?);
        state.u0.push(num(3)?);
        for m in 0..n_arms {
            state.ve[m].push(num(4 + m)?);
        }
    }
    Ok(state)
}

/// Point data for [`write_vtk`]; vectors are per mesh vertex.
#[derive(Clone, Debug, Default)]
pub struct VtkFields {
    pub displacement: Vec<[f64; 3]>,
    pub velocity: Vec<[f64; 3]>,
    pub von_mises: Vec<f64>,
    /// `None` off the slip surface; written as 0.
    pub contact_pressure: Vec<Option<f64>>,
}

impl VtkFields {
    /// Vertex values of displacement and velocity; derived scalars start at zero.
    pub fn from_state(space: &FeSpace, state: &State) -> Self {
        let nv = space.mesh().vertices().len();
        let pick = |field: &[f64], v: usize| {
            let node = space.vertex_node(v);
            [field[3 * node], field[3 * node + 1], field[3 * node + 2]]
        };
        Self {
            displacement: (0..nv).map(|v| pick(&state.u0, v)).collect(),
            velocity: (0..nv).map(|v| pick(&state.u1, v)).collect(),
            von_mises: vec![0.0; nv],
            contact_pressure: vec![None; nv],
        }
    }
}

/// VTK legacy ASCII unstructured grid of linear tetrahedra.
pub fn write_vtk(mut w: impl Write, space: &FeSpace, fields: &VtkFields, title: &str) -> Result<()> {
    let mesh = space.mesh();
    let nv = mesh.vertices().len();
    let nt = mesh.tets().len();
    if fields.displacement.len() != nv
        || fields.velocity.len() != nv
        || fields.von_mises.len() != nv
        || fields.contact_pressure.len() != nv
    {
        return Err(Error::InvalidInput(format!("VTK fields must have {nv} vertex values")));
    }
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {nv} double")?;
    for x in mesh.vertices() {
        writeln!(w, "{:e} {:e} {:e}", x[0], x[1], x[2])?;
    }
    writeln!(w, "CELLS {nt} {}", 5 * nt)?;
    for t in mesh.tets() {
        writeln!(w, "4 {} {} {} {}", t[0], t[1], t[2], t[3])?;
    }
    writeln!(w, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(w, "10")?;
    }
    writeln!(w, "POINT_DATA {nv}")?;
    for (name, data) in [("displacement", &fields.displacement), ("velocity", &fields.velocity)] {
        writeln!(w, "VECTORS {name} double")?;
        for v in data {
            writeln!(w, "{:e} {:e} {:e}", v[0], v[1], v[2])?;
        }
    }
    writeln!(w, "SCALARS von_mises double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for s in &fields.von_mises {
        writeln!(w, "{s:e}")?;
    }
    writeln!(w, "SCALARS contact_pressure double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for s in &fields.contact_pressure {
        writeln!(w, "{:e}", s.unwrap_or(0.0))?;
    }
    Ok(())
}

pub fn write_vtk_file(path: impl AsRef<Path>, space: &FeSpace, fields: &VtkFields, title: &str) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_vtk(&mut w, space, fields, title)?;
    w.flush()?;
    Ok(())
}

/// Sizes and point data recovered from a file written by [`write_vtk`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VtkSummary {
    pub n_points: usize,
    pub n_cells: usize,
    pub cell_types: Vec<u8>,
    pub vectors: Vec<(String, Vec<[f64; 3]>)>,
    pub scalars: Vec<(String, Vec<f64>)>,
}

/// Minimal reader for the subset of the legacy format produced here.
pub fn read_vtk(r: impl Read) -> Result<VtkSummary> {
    let bad = |detail: String| Error::Format { what: "VTK file", detail };
    let mut tokens = Vec::new();
    for (i, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        // header, title, format
        if i < 3 {
            if i == 2 && line.trim() != "ASCII" {
                return Err(bad(format!("expected ASCII, got '{line}'")));
            }
            continue;
        }
        tokens.extend(line.split_whitespace().map(str::to_string));
    }
    let mut it = tokens.into_iter();
    let mut next = |what: &str| it.next().ok_or_else(|| bad(format!("unexpected end before {what}")));
    let mut summary = VtkSummary::default();
    let parse_usize = |s: String| s.parse::<usize>().map_err(|e| bad(format!("'{s}': {e}")));
    let parse_f64 = |s: String| s.parse::<f64>().map_err(|e| bad(format!("'{s}': {e}")));
    loop {
        let Some(key) = next("keyword").ok() else { break };
        match key.as_str() {
            "DATASET" => {
                let kind = next("dataset type")?;
                if kind != "UNSTRUCTURED_GRID" {
                    return Err(bad(format!("unsupported dataset {kind}")));
                }
            }
            "POINTS" => {
                summary.n_points = parse_usize(next("point count")?)?;
                next("point type")?;
                for _ in 0..3 * summary.n_points {
                    parse_f64(next("coordinate")?)?;
                }
            }
            "CELLS" => {
                summary.n_cells = parse_usize(next("cell count")?)?;
                let size = parse_usize(next("cell list size")?)?;
                for _ in 0..size {
                    parse_usize(next("connectivity")?)?;
                }
            }
            "CELL_TYPES" => {
                let n = parse_usize(next("cell type count")?)?;
                for _ in 0..n {
                    let t = next("cell type")?;
                    summary.cell_types.push(t.parse().map_err(|e| bad(format!("'{t}': {e}")))?);
                }
            }
            "POINT_DATA" => {
                let n = parse_usize(next("point data count")?)?;
                if n != summary.n_points {
                    return Err(bad(format!("POINT_DATA {n} but {} points", summary.n_points)));
                }
            }
            "VECTORS" => {
                let name = next("vector name")?;
                next("vector type")?;
                let mut data = Vec::with_capacity(summary.n_points);
                for _ in 0..summary.n_points {
                    data.push([
                        parse_f64(next("vector")?)?,
                        parse_f64(next("vector")?)?,
                        parse_f64(next("vector")?)?,
                    ]);
                }
                summary.vectors.push((name, data));
            }
            "SCALARS" => {
                let name = next("scalar name")?;
                next("scalar type")?;
                next("component count")?;
                if next("lookup table")? != "LOOKUP_TABLE" {
                    return Err(bad("missing LOOKUP_TABLE".into()));
                }
                next("table name")?;
                let mut data = Vec::with_capacity(summary.n_points);
                for _ in 0..summary.n_points {
                    data.push(parse_f64(next("scalar")?)?);
                }
                summary.scalars.push((name, data));
            }
            other => return Err(bad(format!("unexpected keyword {other}"))),
        }
    }
    Ok(summary)
}
