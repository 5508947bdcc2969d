//! CSV persistence. Floats are written with 17 significant digits so that a
//! written file reads back bit-for-bit.

use std::io::{Read, Write};

use crate::belavkin::DensityMatrix;
use crate::error::{Error, Result};
use crate::graph_metric::{graph_of, Column, PlanarSet};
use crate::path::Path;
use crate::spike_limit::{JumpChain, LimitGraph, SpikeSet};

#[inline]
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Header line plus one row per item of `rows`.
pub fn write_columns<W: Write, const N: usize>(
    mut w: W,
    header: [&str; N],
    rows: impl IntoIterator<Item = [f64; N]>,
) -> Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let mut line = String::with_capacity(24 * N);
        for (i, x) in row.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&num(*x));
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_path<W: Write>(w: W, path: &Path) -> Result<()> {
    write_columns(w, ["t", "q"], path.iter().map(|(t, q)| [t, q]))
}

/// `t,re_rho_11,im_rho_11,re_rho_12,...` in row-major entry order.
pub fn write_density_trajectory<W: Write>(mut w: W, times: &[f64], states: &[DensityMatrix]) -> Result<()> {
    if times.len() != states.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            found: states.len(),
        });
    }
    let n = states.first().map_or(0, |s| s.dim());
    let mut header = vec!["t".to_string()];
    for i in 1..=n {
        for j in 1..=n {
            header.push(format!("re_rho_{i}{j}"));
            header.push(format!("im_rho_{i}{j}"));
        }
    }
    writeln!(w, "{}", header.join(","))?;
    for (t, rho) in times.iter().zip(states) {
        if rho.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: rho.dim(),
            });
        }
        let mut line = num(*t);
        for i in 0..n {
            for j in 0..n {
                let z = rho.entry(i, j);
                line.push(',');
                line.push_str(&num(z.re));
                line.push(',');
                line.push_str(&num(z.im));
            }
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_spikes<W: Write>(mut w: W, spikes: &SpikeSet) -> Result<()> {
    writeln!(w, "t,state,m")?;
    for e in &spikes.events {
        writeln!(w, "{},{},{}", num(e.t), e.state, num(e.m))?;
    }
    w.flush()?;
    Ok(())
}

/// One row for the initial state at `t = 0`, then one per jump with the new state.
pub fn write_chain<W: Write>(mut w: W, chain: &JumpChain) -> Result<()> {
    writeln!(w, "t,state")?;
    writeln!(w, "{},{}", num(0.0), chain.initial_state())?;
    let mut state = chain.initial_state();
    for &t in chain.jump_times() {
        state = 1 - state;
        writeln!(w, "{},{}", num(t), state)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_column_set<W: Write>(w: W, columns: &[Column]) -> Result<()> {
    write_columns(w, ["t", "y_low", "y_high"], columns.iter().map(|c| [c.t, c.lo, c.hi]))
}

pub fn write_limit_graph<W: Write>(w: W, graph: &LimitGraph) -> Result<()> {
    write_column_set(w, &graph.columns)
}

fn parse_err(record: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        record,
        message: message.into(),
    }
}

/// Header and numeric records of a CSV file.
pub fn read_table<R: Read>(r: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| parse_err(0, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(k + 1, e.to_string()))?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| parse_err(k + 1, format!("`{f}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

fn column_pairs(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    rows.iter().map(|r| (r[0], r[1])).unzip()
}

/// Reads a `t,q` trajectory.
pub fn read_path<R: Read>(r: R) -> Result<Path> {
    let (header, rows) = read_table(r)?;
    if header.len() != 2 {
        return Err(parse_err(0, format!("expected two columns, found {}", header.len())));
    }
    let (t, q) = column_pairs(&rows);
    Path::new(t, q)
}

/// Reads any of the set formats written by this crate:
///
/// * `t,q` is a trajectory and becomes its interpolated graph,
/// * `t,y` is a bare point set,
/// * `t,y_low,y_high` is a column set (binned graphs, limit-graph columns).
pub fn read_planar_set<R: Read>(r: R, horizon: f64, delta: f64) -> Result<PlanarSet> {
    let (header, rows) = read_table(r)?;
    let names: Vec<&str> = header.iter().map(String::as_str).collect();
    match names.as_slice() {
        ["t", "q"] => {
            let (t, q) = column_pairs(&rows);
            graph_of(&Path::new(t, q)?, horizon, delta)
        }
        ["t", "y"] => PlanarSet::from_points(horizon, delta, rows.iter().map(|r| (r[0], r[1]))),
        ["t", "y_low", "y_high"] => PlanarSet::from_columns(
            horizon,
            delta,
            rows.iter().map(|r| Column { t: r[0], lo: r[1], hi: r[2] }).collect(),
        ),
        _ => Err(parse_err(0, format!("unrecognized set header `{}`", header.join(",")))),
    }
}
