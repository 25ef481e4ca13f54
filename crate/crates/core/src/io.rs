//! Plain-text output and input: snapshot CSV files, run metadata and study
//! reports. Numbers are written with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::dynamics::{Snapshot, Trajectory};
use crate::error::{invalid, Result};
use crate::regimes::RateFit;
use crate::spectral::{Grid1D, RealField};
use crate::states::{HydroState, SGState, SpinState};

/// Scientific notation with 17 significant digits; parses back to the same `f64`.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_table(header: &str, grid: &Grid1D, cols: &[&RealField]) -> String {
    let mut out = String::with_capacity(32 * (cols.len() + 1) * grid.num_points());
    out.push_str(header);
    out.push('\n');
    for n in 0..grid.num_points() {
        out.push_str(&fmt17(grid.node(n)));
        for c in cols {
            out.push(',');
            out.push_str(&fmt17(c.samples()[n]));
        }
        out.push('\n');
    }
    out
}

/// CSV text of one snapshot: `x,u,phi` for pairs, `x,m1,m2,m3` for spins.
pub fn snapshot_csv(s: &Snapshot) -> String {
    match s {
        Snapshot::Hydro(h) => csv_table("x,u,phi", h.grid(), &[&h.u, &h.phi]),
        Snapshot::Sg(h) => csv_table("x,u,phi", h.grid(), &[&h.u, &h.phi]),
        Snapshot::Spin(m) => csv_table("x,m1,m2,m3", m.grid(), &[&m.m1, &m.m2, &m.m3]),
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[derive(Serialize)]
struct MetaFile<'a> {
    #[serde(flatten)]
    meta: &'a crate::dynamics::TrajectoryMeta,
    times: &'a [f64],
    snapshots: Vec<String>,
}

/// Writes `meta.json` and one `snap_%06d.csv` per snapshot into `dir`.
pub fn write_trajectory(dir: &Path, traj: &Trajectory) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut names = Vec::with_capacity(traj.states.len());
    let mut paths = Vec::with_capacity(traj.states.len());
    for (i, s) in traj.states.iter().enumerate() {
        let name = format!("snap_{i:06}.csv");
        let path = dir.join(&name);
        fs::write(&path, snapshot_csv(s))?;
        names.push(name);
        paths.push(path);
    }
    write_json(
        &dir.join("meta.json"),
        &MetaFile {
            meta: &traj.meta,
            times: &traj.times,
            snapshots: names,
        },
    )?;
    Ok(paths)
}

/// A parsed snapshot table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub grid: Grid1D,
    pub header: Vec<String>,
    /// Columns after `x`.
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    fn column(&self, name: &str) -> Result<&[f64]> {
        self.header
            .iter()
            .skip(1)
            .position(|h| h == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| invalid(format!("column '{name}' missing (have {})", self.header.join(","))))
    }

    fn field(&self, name: &str) -> Result<RealField> {
        RealField::new(self.grid, self.column(name)?.to_vec())
    }
}

/// Parses a snapshot CSV. The grid is recovered from the `x` column, which
/// must hold the nodes `-L + n 2L/N`.
pub fn parse_table(text: &str) -> Result<Table> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| invalid("empty table"))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    if header.first().map(String::as_str) != Some("x") || header.len() < 2 {
        return Err(invalid(format!("table header must start with x, got {}", header.join(","))));
    }
    let mut xs = Vec::new();
    let mut columns = vec![Vec::new(); header.len() - 1];
    for (row, line) in lines.enumerate() {
        let vals = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| invalid(format!("row {}: {e}", row + 1)))?;
        if vals.len() != header.len() {
            return Err(invalid(format!("row {} has {} fields, expected {}", row + 1, vals.len(), header.len())));
        }
        xs.push(vals[0]);
        for (c, v) in columns.iter_mut().zip(&vals[1..]) {
            c.push(*v);
        }
    }
    if xs.is_empty() {
        return Err(invalid("table has no rows"));
    }
    let grid = Grid1D::new(-xs[0], xs.len())?;
    let tol = 1e-9 * grid.half_length();
    if let Some(n) = (0..xs.len()).find(|&n| (grid.node(n) - xs[n]).abs() > tol) {
        return Err(invalid(format!("x column is not a uniform periodic grid (row {})", n + 1)));
    }
    Ok(Table { grid, header, columns })
}

pub fn read_table(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    parse_table(&text)
}

/// `(u, phi)` columns; the phase winding is rounded to a multiple of `pi`.
fn pair_fields(t: &Table) -> Result<(RealField, RealField)> {
    let u = t.field("u")?.with_inferred_jump();
    let phi = t.field("phi")?.with_phase_jump();
    Ok((u, phi))
}

pub fn hydro_from_table(t: &Table) -> Result<HydroState> {
    let (u, phi) = pair_fields(t)?;
    HydroState::new(u, phi)
}

pub fn sg_from_table(t: &Table) -> Result<SGState> {
    let (u, phi) = pair_fields(t)?;
    SGState::new(phi, u)
}

pub fn spin_from_table(t: &Table) -> Result<SpinState> {
    SpinState::new(
        t.field("m1")?.with_inferred_jump(),
        t.field("m2")?.with_inferred_jump(),
        t.field("m3")?.with_inferred_jump(),
    )
}

/// `rates.csv`: `eps_or_sigma,error,fitted`.
pub fn rates_csv(fit: &RateFit) -> String {
    let mut out = String::from("eps_or_sigma,error,fitted\n");
    for &(x, e) in &fit.samples {
        let _ = writeln!(out, "{},{},{}", fmt17(x), fmt17(e), fmt17(fit.predict(x)));
    }
    out
}
