//! Ring-down records: a one-line JSON header followed by raw little-endian
//! f32 series, one per probe or flux plane, each `steps` samples long.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Axis, Component, SolverError};

const MAGIC: &str = "nanobeam-ringdown 1";
const END: &str = "end_header";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SeriesKind {
    /// Field sample at the Yee site nearest the requested point.
    Probe {
        component: Component,
        position_nm: [f64; 3],
    },
    /// Poynting flux through a plane (normalized units).
    Flux { axis: Axis, position_nm: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesInfo {
    pub name: String,
    #[serde(flatten)]
    pub kind: SeriesKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordHeader {
    /// SHA-256 over the simulation config and the permittivity grid.
    pub config_hash: String,
    pub dt_s: f64,
    pub courant: f64,
    pub cell_size_nm: f64,
    pub dims: [usize; 3],
    pub steps: usize,
    /// Last step with any source current.
    pub shutoff_step: usize,
    pub series: Vec<SeriesInfo>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RingdownRecord {
    pub header: RecordHeader,
    /// Sample `n` of each series is taken after step `n + 1`.
    pub series: Vec<Vec<f32>>,
}

impl RingdownRecord {
    pub fn series_index(&self, name: &str) -> Option<usize> {
        self.header.series.iter().position(|s| s.name == name)
    }

    pub fn series_by_name(&self, name: &str) -> Option<&[f32]> {
        self.series_index(name).map(|i| self.series[i].as_slice())
    }

    /// Samples after the source has switched off.
    pub fn ringdown(&self, index: usize) -> &[f32] {
        let s = &self.series[index];
        &s[self.header.shutoff_step.min(s.len())..]
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), SolverError> {
        if self.series.len() != self.header.series.len() {
            return Err(SolverError::Format(
                "series count does not match header".into(),
            ));
        }
        if self.series.iter().any(|s| s.len() != self.header.steps) {
            return Err(SolverError::Format(
                "series length does not match step count".into(),
            ));
        }
        let json =
            serde_json::to_string(&self.header).map_err(|e| SolverError::Format(e.to_string()))?;
        writeln!(w, "{MAGIC}")?;
        writeln!(w, "{json}")?;
        writeln!(w, "{END}")?;
        let mut buf = Vec::with_capacity(4 * self.header.steps);
        for s in &self.series {
            buf.clear();
            for v in s {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self, SolverError> {
        let mut r = BufReader::new(r);
        let mut line = String::new();
        r.read_line(&mut line)?;
        if line.trim_end() != MAGIC {
            return Err(SolverError::Format("not a ring-down record".into()));
        }
        line.clear();
        r.read_line(&mut line)?;
        let header: RecordHeader = serde_json::from_str(line.trim_end())
            .map_err(|e| SolverError::Format(format!("header: {e}")))?;
        line.clear();
        r.read_line(&mut line)?;
        if line.trim_end() != END {
            return Err(SolverError::Format("missing end_header line".into()));
        }
        let mut bytes = vec![0u8; 4 * header.steps];
        let mut series = Vec::with_capacity(header.series.len());
        for info in &header.series {
            r.read_exact(&mut bytes)
                .map_err(|_| SolverError::Format(format!("series {:?} is truncated", info.name)))?;
            series.push(
                bytes
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                    .collect(),
            );
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(SolverError::Format(
                "trailing bytes after last series".into(),
            ));
        }
        Ok(RingdownRecord { header, series })
    }

    /// Write atomically: a temporary sibling file is renamed into place.
    pub fn write(&self, path: &Path) -> Result<(), SolverError> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        crate::io::write_atomic(path, &buf)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, SolverError> {
        Self::read_from(std::fs::File::open(path)?)
    }
}
