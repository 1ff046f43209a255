//! File formats: binary grid dumps and CSV tables.
//!
//! Grid dump layout, all little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 8 | magic `OUTFLOW1` |
//! | 4 | `u32` dimension |
//! | 12 | `u32` node counts `n1 n2 n3` (`n3 = 1` in 2-D) |
//! | 24 | `f64` spacings `h1 h2 h3` |
//! | 8 | `f64` normal extent `L` |
//! | 16 | `f64` tangential origin `x2_0 x3_0` |
//! | 8 | `f64` time stamp |
//! | 4 | `u32` field count `F` |
//! | F x (4 + len) | `u32` name length then UTF-8 name |
//! | F x 8 n1 n2 n3 | `f64` samples, one field after another, `i1` fastest then `i2`, `i3` |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::diagnostics::NormReport;
use crate::error::{Error, Result};
use crate::geometry::MappedGrid;
use crate::profile::PlanarProfile;
use crate::solver::PerturbationState;

pub const MAGIC: &[u8; 8] = b"OUTFLOW1";

/// Contents of a grid dump.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDump {
    pub dim: u32,
    pub n: [u32; 3],
    pub h: [f64; 3],
    pub length: f64,
    pub origin: [f64; 2],
    pub t: f64,
    pub fields: Vec<(String, Vec<f64>)>,
}

impl GridDump {
    pub fn field(&self, name: &str) -> Option<&[f64]> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }
}

pub fn write_grid_dump(path: &Path, grid: &MappedGrid, t: f64, fields: &[(&str, &[f64])]) -> Result<()> {
    for (name, f) in fields {
        grid.check_len(f, name)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(grid.dim as u32).to_le_bytes())?;
    for n in grid.n {
        w.write_all(&(n as u32).to_le_bytes())?;
    }
    for v in grid.h.iter().chain([grid.length].iter()).chain(grid.origin.iter()).chain([t].iter()) {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&(fields.len() as u32).to_le_bytes())?;
    for (name, _) in fields {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
    }
    for (_, f) in fields {
        for v in f.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Dumps `phi` and the `psi` components of a state.
pub fn write_state_dump(path: &Path, state: &PerturbationState) -> Result<()> {
    let names = ["phi", "psi1", "psi2", "psi3"];
    let fields: Vec<(&str, &[f64])> = state.fields().zip(names).map(|(f, n)| (n, f.as_slice())).collect();
    write_grid_dump(path, &state.grid, state.t, &fields)
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_grid_dump(path: &Path) -> Result<GridDump> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Config(format!("{} is not a grid dump", path.display())));
    }
    let dim = read_u32(&mut r)?;
    let n = [read_u32(&mut r)?, read_u32(&mut r)?, read_u32(&mut r)?];
    let h = [read_f64(&mut r)?, read_f64(&mut r)?, read_f64(&mut r)?];
    let length = read_f64(&mut r)?;
    let origin = [read_f64(&mut r)?, read_f64(&mut r)?];
    let t = read_f64(&mut r)?;
    let count = read_u32(&mut r)? as usize;
    let mut names = Vec::with_capacity(count);
    for _ in 0..count {
        let len = read_u32(&mut r)? as usize;
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf)?;
        names.push(String::from_utf8(buf).map_err(|e| Error::Config(e.to_string()))?);
    }
    let nodes = n.iter().map(|&v| v as usize).product::<usize>();
    let mut fields = Vec::with_capacity(count);
    for name in names {
        let mut data = Vec::with_capacity(nodes);
        for _ in 0..nodes {
            data.push(read_f64(&mut r)?);
        }
        fields.push((name, data));
    }
    Ok(GridDump {
        dim,
        n,
        h,
        length,
        origin,
        t,
        fields,
    })
}

fn write_rows(path: &Path, header: &str, rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{header}")?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Profile table with header `x1,rho,u1`.
pub fn write_profile_csv(path: &Path, profile: &PlanarProfile) -> Result<()> {
    write_rows(
        path,
        "x1,rho,u1",
        (0..profile.len()).map(|i| vec![profile.x1[i], profile.rho[i], profile.u1[i]]),
    )
}

pub const TIME_SERIES_HEADER: &str = "t,E0,E3,weighted_L2,residual_mass,residual_momentum,dphi_dt_norm";

pub fn write_time_series(path: &Path, reports: &[NormReport]) -> Result<()> {
    write_rows(
        path,
        TIME_SERIES_HEADER,
        reports.iter().map(|r| {
            vec![
                r.t,
                r.e0_beta,
                r.e3_beta,
                r.weighted_l2,
                r.residual_mass,
                r.residual_momentum,
                r.dissipation.dphi_dt,
            ]
        }),
    )
}

/// Generic two-or-more column table.
pub fn write_columns(path: &Path, names: &[&str], columns: &[&[f64]]) -> Result<()> {
    let len = columns.first().map_or(0, |c| c.len());
    if names.len() != columns.len() || columns.iter().any(|c| c.len() != len) {
        return Err(Error::GridMismatch("CSV columns differ in length".into()));
    }
    write_rows(path, &names.join(","), (0..len).map(|i| columns.iter().map(|c| c[i]).collect()))
}

/// Line of nodes along `y1` at tangential node `t`: columns
/// `y1,x1,<fields>`.
pub fn write_normal_slice(path: &Path, grid: &MappedGrid, t: usize, fields: &[(&str, &[f64])]) -> Result<()> {
    let (i2, i3) = (t % grid.n[1], t / grid.n[1]);
    let mut header = vec!["y1", "x1"];
    header.extend(fields.iter().map(|f| f.0));
    write_rows(
        path,
        &header.join(","),
        (0..grid.n[0]).map(|i1| {
            let i = [i1, i2, i3];
            let idx = grid.index(i);
            let mut row = vec![grid.y1(i1), grid.x(i)[0]];
            row.extend(fields.iter().map(|f| f.1[idx]));
            row
        }),
    )
}

/// Tangential section at normal index `i1` (`i1 = 0` is the boundary):
/// columns `x2,x3,x1,<fields>`.
pub fn write_tangential_slice(path: &Path, grid: &MappedGrid, i1: usize, fields: &[(&str, &[f64])]) -> Result<()> {
    let mut header = vec!["x2", "x3", "x1"];
    header.extend(fields.iter().map(|f| f.0));
    write_rows(
        path,
        &header.join(","),
        (0..grid.n_tangential()).map(|t| {
            let i = [i1, t % grid.n[1], t / grid.n[1]];
            let x = grid.x(i);
            let idx = grid.index(i);
            let mut row = vec![x[1], x[2], x[0]];
            row.extend(fields.iter().map(|f| f.1[idx]));
            row
        }),
    )
}
