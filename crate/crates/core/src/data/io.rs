//! CSV + manifest persistence for [`DataSet`].
//!
//! Layout of an export directory:
//!
//! ```text
//! manifest.toml   metadata and the declared noise bound
//! I.csv O1.csv O2.csv O1plus.csv [O2plus.csv]
//! D.csv Psi.csv   only when the simulator record is exported
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DataMeta, DataSet, DesignView, NoiseBound, SimulatorRecord};

use crate::{Error, Matrix, Result};

pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Serialize, Deserialize)]
struct Manifest {
    order: usize,
    samples: usize,
    psi_bar: f64,
    /// Row-major `gamma gamma^T`.
    gamma_gram: Vec<f64>,
    has_o2_plus: bool,
    has_simulator_record: bool,
    meta: DataMeta,
}

/// Writes the data set to `dir`; the simulator record (disturbance samples and
/// realized noise) is written only when `include_record` is set.
pub fn export(ds: &DataSet, dir: &Path, include_record: bool) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let v = ds.view();
    write_matrix(&dir.join("I.csv"), &v.input, "u")?;
    write_matrix(&dir.join("O1.csv"), &v.o1, "x")?;
    write_matrix(&dir.join("O2.csv"), &v.o2, "x")?;
    write_matrix(&dir.join("O1plus.csv"), &v.o1_plus, "dx")?;
    if let Some(p) = &v.o2_plus {
        write_matrix(&dir.join("O2plus.csv"), p, "dx")?;
    }
    let record = ds.simulator_record().filter(|_| include_record);
    if let Some(r) = record {
        write_matrix(&dir.join("D.csv"), &r.disturbance, "d")?;
        write_matrix(&dir.join("Psi.csv"), &r.noise, "psi")?;
    }
    let g = &v.bound.gamma_gram;
    let manifest = Manifest {
        order: v.order(),
        samples: v.samples(),
        psi_bar: v.bound.psi_bar,
        gamma_gram: (0..g.nrows())
            .flat_map(|i| (0..g.ncols()).map(move |j| g[(i, j)]))
            .collect(),
        has_o2_plus: v.o2_plus.is_some(),
        has_simulator_record: record.is_some(),
        meta: ds.meta().clone(),
    };
    let text = toml::to_string(&manifest)
        .map_err(|e| Error::Config(format!("cannot serialize manifest: {e}")))?;
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

/// Reads a directory written by [`export`].
pub fn import(dir: &Path) -> Result<DataSet> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest =
        toml::from_str(&text).map_err(|e| Error::parse(&path, e.to_string()))?;
    let m = manifest
        .order
        .checked_sub(1)
        .filter(|&m| m > 0)
        .ok_or_else(|| {
            Error::parse(
                &path,
                format!("plant order must be at least 2, got {}", manifest.order),
            )
        })?;
    if manifest.gamma_gram.len() != m * m {
        return Err(Error::parse(
            &path,
            "gamma_gram has the wrong number of entries",
        ));
    }
    let t = manifest.samples;
    let read = |name: &str, rows: usize| read_matrix(&dir.join(name), rows, t);
    let view = DesignView {
        input: read("I.csv", 1)?,
        o1: read("O1.csv", m)?,
        o2: read("O2.csv", 1)?,
        o1_plus: read("O1plus.csv", m)?,
        o2_plus: if manifest.has_o2_plus {
            Some(read("O2plus.csv", 1)?)
        } else {
            None
        },
        bound: NoiseBound {
            gamma_gram: Matrix::from_row_slice(m, m, &manifest.gamma_gram),
            psi_bar: manifest.psi_bar,
        },
    };
    let record = if manifest.has_simulator_record {
        Some(SimulatorRecord {
            disturbance: read("D.csv", 1)?,
            noise: read("Psi.csv", m)?,
        })
    } else {
        None
    };
    DataSet::new(view, manifest.meta, record)
}

/// Writes `m` row-major with a header `prefix0,prefix1,...` naming the rows
/// (one CSV column per matrix row, one CSV record per sample).
pub(crate) fn write_matrix(path: &Path, m: &Matrix, prefix: &str) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let header: Vec<String> = (0..m.nrows()).map(|i| format!("{prefix}{i}")).collect();
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for k in 0..m.ncols() {
        let rec: Vec<String> = (0..m.nrows())
            .map(|i| format!("{:.16e}", m[(i, k)]))
            .collect();
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn read_matrix(path: &Path, rows: usize, cols: usize) -> Result<Matrix> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let width = r.headers().map_err(|e| csv_err(path, e))?.len();
    if width != rows {
        return Err(Error::parse(
            path,
            format!("expected {rows} columns, found {width}"),
        ));
    }
    let mut m = Matrix::zeros(rows, cols);
    let mut k = 0;
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        if k >= cols {
            return Err(Error::parse(path, format!("more than {cols} records")));
        }
        for (i, field) in rec.iter().enumerate() {
            m[(i, k)] = field
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, format!("bad number '{field}' in record {k}")))?;
        }
        k += 1;
    }
    if k != cols {
        return Err(Error::parse(
            path,
            format!("expected {cols} records, found {k}"),
        ));
    }
    Ok(m)
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::parse(path, e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{collect, DerivativeMode, ExperimentConfig, NoiseSpec};
    use crate::plant::{benchmark_plant, BenchmarkId, InputSignal};
    use crate::Vector;

    fn sample() -> DataSet {
        let (p, d) = benchmark_plant(BenchmarkId::B3);
        let cfg = ExperimentConfig {
            t0: 0.0,
            tau: 0.5,
            samples: 15,
            input: InputSignal::Sine {
                amplitude: -1.0,
                frequency: 1.0,
            },
            noise: NoiseSpec::Uniform { halfwidth: 0.1 },
            derivative_mode: DerivativeMode::ExactPlusNoise,
            seed: 7,
            dt: 1e-3,
        };
        collect(&p, &d, &Vector::from_vec(vec![7.0, -7.0, 3.5, -3.5]), &cfg).unwrap()
    }

    #[test]
    fn export_import_is_lossless() {
        let ds = sample();
        let dir = tempfile::tempdir().unwrap();
        export(&ds, dir.path(), true).unwrap();
        let back = import(dir.path()).unwrap();
        assert_eq!(back.view(), ds.view());
        assert_eq!(back.simulator_record(), ds.simulator_record());
        assert_eq!(back.meta(), ds.meta());
    }

    #[test]
    fn design_export_omits_simulator_record() {
        let ds = sample();
        let dir = tempfile::tempdir().unwrap();
        export(&ds, dir.path(), false).unwrap();
        assert!(!dir.path().join("D.csv").exists());
        assert!(!dir.path().join("Psi.csv").exists());
        let back = import(dir.path()).unwrap();
        assert!(back.simulator_record().is_none());
        assert_eq!(back.view(), ds.view());
    }

    #[test]
    fn csv_has_header_and_full_precision() {
        let ds = sample();
        let dir = tempfile::tempdir().unwrap();
        export(&ds, dir.path(), false).unwrap();
        let text = fs::read_to_string(dir.path().join("O1.csv")).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "x0,x1,x2");
        let first = lines.next().unwrap().split(',').next().unwrap();
        assert_eq!(first, "7.0000000000000000e0");
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let ds = sample();
        let dir = tempfile::tempdir().unwrap();
        export(&ds, dir.path(), false).unwrap();
        fs::write(dir.path().join("O2.csv"), "x0\n1.0\n").unwrap();
        assert!(matches!(import(dir.path()), Err(Error::Parse { .. })));
    }
}
