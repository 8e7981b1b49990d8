//! CSV files for trajectories, datasets and per-run series.
//!
//! Floats are written in Rust's shortest round-trip form, so reading a file
//! back yields bit-identical values.

use std::io::{Read, Write};
use std::path::Path;

use crate::dynamics::{LogisticSystemParams, Trajectory};
use crate::embedding::EmbeddedDataset;
use crate::error::{Error, Result};

pub const TRAJECTORY_HEADER: [&str; 4] = ["t", "x", "y", "z"];
pub const DATASET_HEADER: [&str; 5] = ["y_t", "y_prev", "x_prev", "x_target", "z_truth"];

/// Writes named columns of equal length. A leading integer `t` column is
/// added when `with_index` is set.
pub fn write_columns<W: Write>(
    out: W,
    names: &[&str],
    columns: &[&[f64]],
    with_index: bool,
) -> Result<()> {
    assert_eq!(names.len(), columns.len());
    let n = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::Length("CSV columns differ in length".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = Vec::with_capacity(names.len() + 1);
    if with_index {
        header.push("t");
    }
    header.extend_from_slice(names);
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for i in 0..n {
        row.clear();
        if with_index {
            row.push(i.to_string());
        }
        row.extend(columns.iter().map(|c| c[i].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_columns_file(
    path: &Path,
    names: &[&str],
    columns: &[&[f64]],
    with_index: bool,
) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_columns(std::io::BufWriter::new(file), names, columns, with_index)
}

/// Header and float columns of a CSV file (the `t` column, if any, is kept
/// as a column like the others).
pub struct Columns {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Columns {
    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.header
            .iter()
            .position(|h| h == name)
            .map(|i| self.columns[i].as_slice())
    }

    fn require(&self, name: &str) -> Result<Vec<f64>> {
        self.get(name)
            .map(<[f64]>::to_vec)
            .ok_or_else(|| Error::Format(format!("missing column `{name}`")))
    }

    pub fn has_header(&self, expected: &[&str]) -> bool {
        self.header.len() == expected.len() && self.header.iter().zip(expected).all(|(a, b)| a == b)
    }
}

pub fn read_columns<R: Read>(input: R) -> Result<Columns> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut columns = vec![Vec::new(); header.len()];
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for (col, field) in columns.iter_mut().zip(rec.iter()) {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::Format(format!("row {}: `{field}` is not a number", line + 1))
            })?;
            col.push(v);
        }
    }
    Ok(Columns { header, columns })
}

pub fn read_columns_file(path: &Path) -> Result<Columns> {
    read_columns(std::fs::File::open(path)?)
}

pub fn write_trajectory<W: Write>(out: W, traj: &Trajectory) -> Result<()> {
    write_columns(
        out,
        &TRAJECTORY_HEADER[1..],
        &[traj.x(), traj.y(), traj.z()],
        true,
    )
}

pub fn trajectory_from_columns(
    cols: &Columns,
    params: LogisticSystemParams,
    seed: u64,
) -> Result<Trajectory> {
    if !cols.has_header(&TRAJECTORY_HEADER) {
        return Err(Error::Format(format!(
            "expected header {}, found {}",
            TRAJECTORY_HEADER.join(","),
            cols.header.join(",")
        )));
    }
    Trajectory::from_series(
        cols.require("x")?,
        cols.require("y")?,
        cols.require("z")?,
        params,
        seed,
    )
}

pub fn write_dataset<W: Write>(out: W, ds: &EmbeddedDataset) -> Result<()> {
    let y_t: Vec<f64> = ds.y_embed.iter().map(|r| r[0]).collect();
    let y_prev: Vec<f64> = ds.y_embed.iter().map(|r| r[1]).collect();
    write_columns(
        out,
        &DATASET_HEADER,
        &[&y_t, &y_prev, &ds.x_prev, &ds.x_target, &ds.z_truth],
        false,
    )
}

pub fn dataset_from_columns(cols: &Columns) -> Result<EmbeddedDataset> {
    if !cols.has_header(&DATASET_HEADER) {
        return Err(Error::Format(format!(
            "expected header {}, found {}",
            DATASET_HEADER.join(","),
            cols.header.join(",")
        )));
    }
    let y_embed = cols
        .require("y_t")?
        .into_iter()
        .zip(cols.require("y_prev")?)
        .map(|(a, b)| [a, b])
        .collect();
    EmbeddedDataset::from_columns(
        y_embed,
        cols.require("x_prev")?,
        cols.require("x_target")?,
        cols.require("z_truth")?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::simulate;
    use crate::embedding::build_dataset;
    use proptest::prelude::*;

    fn weak() -> LogisticSystemParams {
        LogisticSystemParams {
            r: 3.99,
            beta_xz: 0.01,
            beta_yz: 0.01,
        }
    }

    #[test]
    fn trajectory_csv_layout() {
        let traj = simulate(&weak(), 3, 0, 1).unwrap();
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &traj).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x,y,z");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,"));
        assert!(lines[3].starts_with("2,"));
    }

    #[test]
    fn trajectory_round_trip_is_bit_exact() {
        let traj = simulate(&weak(), 500, 10, 2).unwrap();
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &traj).unwrap();
        let cols = read_columns(buf.as_slice()).unwrap();
        let back = trajectory_from_columns(&cols, weak(), 2).unwrap();
        assert_eq!(back, traj);
    }

    #[test]
    fn dataset_round_trip() {
        let ds = build_dataset(&simulate(&weak(), 100, 10, 3).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &ds).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("y_t,y_prev,x_prev,x_target,z_truth\n"));
        let back = dataset_from_columns(&read_columns(buf.as_slice()).unwrap()).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn wrong_header_rejected() {
        let cols = read_columns("a,b\n1,2\n".as_bytes()).unwrap();
        assert!(matches!(dataset_from_columns(&cols), Err(Error::Format(_))));
        assert!(matches!(
            trajectory_from_columns(&cols, weak(), 0),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            read_columns("t,x\n1,zz\n".as_bytes()),
            Err(Error::Format(_))
        ));
    }

    proptest! {
        #[test]
        fn floats_survive_csv(values in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..50)) {
            let mut buf = Vec::new();
            write_columns(&mut buf, &["v"], &[&values], false).unwrap();
            let cols = read_columns(buf.as_slice()).unwrap();
            let back = cols.get("v").unwrap();
            prop_assert_eq!(
                back.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
        }
    }
}
