//! CSV and JSON artifacts. Floats are written in shortest round-trip form.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::energycoords::{DirectorInitialData, EnergyGrid};
use crate::initial::planar_data;
use crate::planar::TraceSample;
use crate::reconstruct::TimeSlice;
use crate::refsolver::RunDifference;
use crate::vec3::{dot, norm, normalize, reject, Vec3};

/// Largest accepted `| |n| - 1 |` in imported data.
pub const IMPORT_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct InputError {
    /// 1-based data row (header excluded).
    pub row: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.row {
            Some(r) => write!(f, "row {r}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for InputError {}

fn input(row: Option<usize>, message: impl Into<String>) -> InputError {
    InputError { row, message: message.into() }
}

fn read_rows(path: &Path, columns: &[&str]) -> Result<Vec<Vec<f64>>, InputError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| input(None, format!("cannot read {}: {e}", path.display())))?;
    let header = reader.headers().map_err(|e| input(None, e.to_string()))?.clone();
    let index: Vec<usize> = columns
        .iter()
        .map(|c| header.iter().position(|h| h == *c).ok_or_else(|| input(None, format!("missing column `{c}`"))))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let row = k + 1;
        let rec = rec.map_err(|e| input(Some(row), e.to_string()))?;
        let values = index
            .iter()
            .zip(columns)
            .map(|(&i, c)| {
                let field = rec.get(i).ok_or_else(|| input(Some(row), format!("missing `{c}`")))?;
                let v: f64 = field.parse().map_err(|_| input(Some(row), format!("`{c}` = `{field}` is not a number")))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(input(Some(row), format!("`{c}` is not finite")))
                }
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(values);
    }
    if rows.len() < 2 {
        return Err(input(None, "need at least two data rows"));
    }
    for k in 1..rows.len() {
        if !(rows[k][0] > rows[k - 1][0]) {
            return Err(input(Some(k + 1), "x must be strictly increasing"));
        }
    }
    Ok(rows)
}

/// Derivative of samples on a non-uniform grid: three-point centered
/// formula inside, one-sided at the ends.
fn differentiate(x: &[f64], f: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut d = vec![0.0; n];
    if n == 2 {
        let s = (f[1] - f[0]) / (x[1] - x[0]);
        return vec![s, s];
    }
    for i in 1..n - 1 {
        let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
        d[i] = (h0 * h0 * (f[i + 1] - f[i]) + h1 * h1 * (f[i] - f[i - 1])) / (h0 * h1 * (h0 + h1));
    }
    let one_sided = |a: usize, b: usize, c: usize| {
        let (h0, h1) = (x[b] - x[a], x[c] - x[b]);
        let (fa, fb, fc) = (f[a], f[b], f[c]);
        // derivative at x[a] of the quadratic through the three points
        -(2.0 * h0 + h1) / (h0 * (h0 + h1)) * fa + (h0 + h1) / (h0 * h1) * fb - h0 / (h1 * (h0 + h1)) * fc
    };
    d[0] = one_sided(0, 1, 2);
    // mirror for the right end
    let (h0, h1) = (x[n - 1] - x[n - 2], x[n - 2] - x[n - 3]);
    d[n - 1] = (2.0 * h0 + h1) / (h0 * (h0 + h1)) * f[n - 1] - (h0 + h1) / (h0 * h1) * f[n - 2]
        + h0 / (h1 * (h0 + h1)) * f[n - 3];
    d
}

/// Reads director samples (`x, n1, n2, n3, nt1, nt2, nt3`) or planar
/// samples (`x, u, ut`); spatial derivatives are computed by differencing.
pub fn load_initial_csv(path: &Path, planar: bool) -> Result<DirectorInitialData, InputError> {
    if planar {
        let rows = read_rows(path, &["x", "u", "ut"])?;
        let x: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let u: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        let ut: Vec<f64> = rows.iter().map(|r| r[2]).collect();
        let ux = differentiate(&x, &u);
        return planar_data(&x, &u, &ut, &ux).map_err(|e| input(None, e.to_string()));
    }
    let rows = read_rows(path, &["x", "n1", "n2", "n3", "nt1", "nt2", "nt3"])?;
    let x: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let mut n: Vec<Vec3> = Vec::with_capacity(rows.len());
    let mut nt: Vec<Vec3> = Vec::with_capacity(rows.len());
    for (k, r) in rows.iter().enumerate() {
        let mut v = [r[1], r[2], r[3]];
        let dev = (norm(v) - 1.0).abs();
        if dev > IMPORT_NORM_TOLERANCE {
            return Err(input(Some(k + 1), format!("| |n| - 1 | = {dev:e} exceeds {IMPORT_NORM_TOLERANCE:e}")));
        }
        if dev > crate::energycoords::curve::NORM_TOLERANCE {
            v = normalize(v);
        }
        let mut w = [r[4], r[5], r[6]];
        if dot(v, w).abs() > crate::energycoords::curve::ORTHOGONALITY_TOLERANCE * (1.0 + norm(w)) {
            if dot(v, w).abs() > IMPORT_NORM_TOLERANCE * (1.0 + norm(w)) {
                return Err(input(Some(k + 1), format!("n . n_t = {:e} is not zero", dot(v, w))));
            }
            w = reject(w, v);
        }
        n.push(v);
        nt.push(w);
    }
    let comps: Vec<Vec<f64>> =
        (0..3).map(|c| differentiate(&x, &n.iter().map(|v| v[c]).collect::<Vec<_>>())).collect();
    let nx: Vec<Vec3> = (0..x.len()).map(|i| reject([comps[0][i], comps[1][i], comps[2][i]], n[i])).collect();
    DirectorInitialData::new(x, n, nt, nx).map_err(|e| input(None, e.to_string()))
}

fn create(path: &Path) -> std::io::Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(path)?)))
}

fn f(v: f64) -> String {
    format!("{v}")
}

pub fn write_initial_csv(path: &Path, data: &DirectorInitialData) -> std::io::Result<()> {
    let mut w = create(path)?;
    w.write_record(["x", "n1", "n2", "n3", "nt1", "nt2", "nt3"])?;
    for i in 0..data.len() {
        let (n, nt) = (data.n[i], data.n_t[i]);
        w.write_record([data.x[i], n[0], n[1], n[2], nt[0], nt[1], nt[2]].map(f))?;
    }
    w.flush()
}

pub fn write_slice_csv(path: &Path, slice: &TimeSlice) -> std::io::Result<()> {
    let mut w = create(path)?;
    w.write_record(["x", "n1", "n2", "n3", "nt1", "nt2", "nt3", "nx1", "nx2", "nx3", "singular_flag"])?;
    let opt = |v: Option<Vec3>| v.map_or(["nan".to_string(), "nan".into(), "nan".into()], |v| v.map(f));
    for p in &slice.points {
        let mut rec: Vec<String> = vec![f(p.x)];
        rec.extend(p.n.map(f));
        rec.extend(opt(p.n_t));
        rec.extend(opt(p.n_x));
        rec.push(if p.singular { "1" } else { "0" }.into());
        w.write_record(&rec)?;
    }
    w.flush()
}

/// One row per computed node.
pub fn write_grid_csv(path: &Path, grid: &EnergyGrid) -> std::io::Result<()> {
    let mut w = create(path)?;
    w.write_record([
        "X", "Y", "status", "n1", "n2", "n3", "ell1", "ell2", "ell3", "m1", "m2", "m3", "h1", "h2", "p", "q", "t", "x",
    ])?;
    for (i, j) in grid.active_indices() {
        let node = grid.node(i, j);
        let s = &node.state;
        let mut rec: Vec<String> = vec![f(grid.coord_x(i)), f(grid.coord_y(j)), node.status.as_str().into()];
        rec.extend(s.n.map(f));
        rec.extend(s.ell.map(f));
        rec.extend(s.m.map(f));
        rec.extend([s.h1, s.h2, s.p, s.q, node.t, node.x].map(f));
        w.write_record(&rec)?;
    }
    w.flush()
}

pub fn write_trace_csv(path: &Path, trace: &[TraceSample]) -> std::io::Result<()> {
    let mut w = create(path)?;
    w.write_record(["t", "max_abs_R", "max_abs_S", "energy"])?;
    for s in trace {
        w.write_record([s.time, s.max_abs_r, s.max_abs_s, s.energy].map(f))?;
    }
    w.flush()
}

pub fn write_compare_csv(path: &Path, diffs: &[RunDifference]) -> std::io::Result<()> {
    let mut w = create(path)?;
    w.write_record(["time", "linf_error", "l2_error"])?;
    for d in diffs {
        w.write_record([d.time, d.linf, d.l2].map(f))?;
    }
    w.flush()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn differencing_is_exact_for_quadratics() {
        let x = [0.0, 0.1, 0.25, 0.3, 0.5];
        let f: Vec<f64> = x.iter().map(|v| 2.0 * v * v - v + 1.0).collect();
        let d = differentiate(&x, &f);
        for (xi, di) in x.iter().zip(d) {
            assert!((di - (4.0 * xi - 1.0)).abs() < 1e-12, "{xi} {di}");
        }
    }
}
