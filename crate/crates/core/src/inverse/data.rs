use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::discretization::{snapshot::fmt_f64, Grid, SourceSpec};
use crate::error::{check_len, Error, Result};

/// Boundary data `phi = (u - u0)|_boundary`, one row per source and one
/// column per receiver, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringData {
    sources: Vec<SourceSpec>,
    receivers: Vec<[f64; 2]>,
    values: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    source: usize,
    receiver: usize,
    source_x: f64,
    source_y: f64,
    scale: f64,
    wavenumber: f64,
    receiver_x: f64,
    receiver_y: f64,
    value: f64,
}

impl ScatteringData {
    pub fn new(sources: Vec<SourceSpec>, receivers: Vec<[f64; 2]>, values: Vec<f64>) -> Result<Self> {
        check_len(sources.len() * receivers.len(), values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("scattering data must be finite".into()));
        }
        Ok(Self {
            sources,
            receivers,
            values,
        })
    }

    pub fn zeros(sources: Vec<SourceSpec>, receivers: Vec<[f64; 2]>) -> Self {
        let values = vec![0.0; sources.len() * receivers.len()];
        Self {
            sources,
            receivers,
            values,
        }
    }

    pub fn sources(&self) -> &[SourceSpec] {
        &self.sources
    }

    pub fn receivers(&self) -> &[[f64; 2]] {
        &self.receivers
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, source: usize) -> &[f64] {
        let n = self.receivers.len();
        &self.values[source * n..(source + 1) * n]
    }

    pub fn source_count(&self) -> usize {
        self.sources.len()
    }

    pub fn receiver_count(&self) -> usize {
        self.receivers.len()
    }

    /// Root mean square over all (source, receiver) pairs.
    pub fn norm_l2(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64).sqrt()
    }

    pub fn norm_sup(&self) -> f64 {
        crate::discretization::sup_norm(&self.values)
    }

    /// Boundary node of `grid` for every receiver. Receivers must coincide
    /// with boundary nodes up to `1e-9`.
    pub fn receiver_nodes(&self, grid: &Grid) -> Result<Vec<usize>> {
        self.receivers
            .iter()
            .map(|&p| {
                let node = grid.boundary()[grid.nearest_boundary_slot(p)];
                let q = grid.coords()[node];
                if (p[0] - q[0]).hypot(p[1] - q[1]) > 1e-9 {
                    return Err(Error::Config(format!(
                        "receiver at ({}, {}) is not a boundary node of the inversion grid",
                        p[0], p[1]
                    )));
                }
                Ok(node)
            })
            .collect()
    }

    /// `source,receiver,source_x,source_y,scale,wavenumber,receiver_x,receiver_y,value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "source",
            "receiver",
            "source_x",
            "source_y",
            "scale",
            "wavenumber",
            "receiver_x",
            "receiver_y",
            "value",
        ])
        .map_err(csv_err)?;
        for (s, src) in self.sources.iter().enumerate() {
            for (r, rec) in self.receivers.iter().enumerate() {
                w.write_record([
                    s.to_string(),
                    r.to_string(),
                    fmt_f64(src.location[0]),
                    fmt_f64(src.location[1]),
                    fmt_f64(src.scale),
                    fmt_f64(src.wavenumber),
                    fmt_f64(rec[0]),
                    fmt_f64(rec[1]),
                    fmt_f64(self.values[s * self.receivers.len() + r]),
                ])
                .map_err(csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(input);
        let rows: Vec<Row> = rd
            .deserialize()
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("phi csv: {e}")))?;
        if rows.is_empty() {
            return Err(Error::Parse("phi csv has no rows".into()));
        }
        let ns = rows.iter().map(|r| r.source).max().unwrap() + 1;
        let nr = rows.iter().map(|r| r.receiver).max().unwrap() + 1;
        if rows.len() != ns * nr {
            return Err(Error::Parse(format!(
                "phi csv has {} rows, expected {ns} sources x {nr} receivers",
                rows.len()
            )));
        }
        let mut sources: Vec<Option<SourceSpec>> = vec![None; ns];
        let mut receivers: Vec<Option<[f64; 2]>> = vec![None; nr];
        let mut values = vec![f64::NAN; ns * nr];
        let mut seen = vec![false; ns * nr];
        for r in &rows {
            let idx = r.source * nr + r.receiver;
            if std::mem::replace(&mut seen[idx], true) {
                return Err(Error::Parse(format!(
                    "duplicate row for source {} receiver {}",
                    r.source, r.receiver
                )));
            }
            let spec = SourceSpec {
                location: [r.source_x, r.source_y],
                scale: r.scale,
                wavenumber: r.wavenumber,
            };
            match &sources[r.source] {
                Some(s) if *s != spec => {
                    return Err(Error::Parse(format!("inconsistent descriptor for source {}", r.source)))
                }
                _ => sources[r.source] = Some(spec),
            }
            let loc = [r.receiver_x, r.receiver_y];
            match receivers[r.receiver] {
                Some(p) if p != loc => {
                    return Err(Error::Parse(format!("inconsistent location for receiver {}", r.receiver)))
                }
                _ => receivers[r.receiver] = Some(loc),
            }
            values[idx] = r.value;
        }
        Self::new(
            sources.into_iter().map(|s| s.expect("all seen")).collect(),
            receivers.into_iter().map(|p| p.expect("all seen")).collect(),
            values,
        )
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
