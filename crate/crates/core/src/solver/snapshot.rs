//! Field snapshots: single node planes for plotting and full E volumes for
//! mode-volume and energy-density work.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Axis, Component, SolverError};
use crate::geometry::GridLayout;

const MAGIC: &str = "nanobeam-plane 1";

/// All six components and the permittivity on one node plane. Arrays are
/// indexed `[iu * nv + iv]` where `u < v` are the two in-plane axes; every
/// component is read at its own Yee site belonging to that node.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneSnapshot {
    pub axis: Axis,
    pub index: usize,
    pub position_nm: f64,
    pub step: usize,
    pub cell_size_nm: f64,
    /// Node coordinates (nm) along the two in-plane axes.
    pub coords: [Vec<f64>; 2],
    /// Ex, Ey, Ez, Hx, Hy, Hz.
    pub fields: [Vec<f32>; 6],
    pub eps: [Vec<f32>; 3],
}

#[derive(Serialize, Deserialize)]
struct PlaneHeader {
    axis: Axis,
    index: usize,
    position_nm: f64,
    step: usize,
    cell_size_nm: f64,
    coords: [Vec<f64>; 2],
}

impl PlaneSnapshot {
    pub fn in_plane_axes(&self) -> [Axis; 2] {
        let a = self.axis.index();
        let mut o = (0..3).filter(|&b| b != a).map(Axis::from_index);
        [o.next().unwrap(), o.next().unwrap()]
    }

    pub fn shape(&self) -> [usize; 2] {
        [self.coords[0].len(), self.coords[1].len()]
    }

    pub fn field(&self, c: Component) -> &[f32] {
        &self.fields[c as usize]
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), SolverError> {
        let header = PlaneHeader {
            axis: self.axis,
            index: self.index,
            position_nm: self.position_nm,
            step: self.step,
            cell_size_nm: self.cell_size_nm,
            coords: self.coords.clone(),
        };
        writeln!(w, "{MAGIC}")?;
        writeln!(
            w,
            "{}",
            serde_json::to_string(&header).map_err(|e| SolverError::Format(e.to_string()))?
        )?;
        writeln!(w, "end_header")?;
        for arr in self.fields.iter().chain(self.eps.iter()) {
            let bytes: Vec<u8> = arr.iter().flat_map(|v| v.to_le_bytes()).collect();
            w.write_all(&bytes)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self, SolverError> {
        let mut r = BufReader::new(r);
        let mut line = String::new();
        r.read_line(&mut line)?;
        if line.trim_end() != MAGIC {
            return Err(SolverError::Format("not a plane snapshot".into()));
        }
        line.clear();
        r.read_line(&mut line)?;
        let h: PlaneHeader = serde_json::from_str(line.trim_end())
            .map_err(|e| SolverError::Format(e.to_string()))?;
        line.clear();
        r.read_line(&mut line)?;
        if line.trim_end() != "end_header" {
            return Err(SolverError::Format("missing end_header line".into()));
        }
        let len = h.coords[0].len() * h.coords[1].len();
        let mut bytes = vec![0u8; 4 * len];
        let mut arrays = Vec::with_capacity(9);
        for _ in 0..9 {
            r.read_exact(&mut bytes)
                .map_err(|_| SolverError::Format("snapshot is truncated".into()))?;
            arrays.push(
                bytes
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                    .collect::<Vec<_>>(),
            );
        }
        let mut it = arrays.into_iter();
        let mut next = || it.next().unwrap();
        Ok(PlaneSnapshot {
            axis: h.axis,
            index: h.index,
            position_nm: h.position_nm,
            step: h.step,
            cell_size_nm: h.cell_size_nm,
            coords: h.coords,
            fields: [next(), next(), next(), next(), next(), next()],
            eps: [next(), next(), next()],
        })
    }

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

/// E field (optionally complex) and permittivity over the whole grid,
/// unpadded, indexed like [`GridLayout::index`].
#[derive(Debug, Clone, PartialEq)]
pub struct FieldVolume {
    pub layout: GridLayout,
    pub eps: [Vec<f32>; 3],
    pub e: [Vec<f32>; 3],
    pub e_im: Option<[Vec<f32>; 3]>,
}

impl FieldVolume {
    /// `|E_c|^2` at the Yee site of component `c` of node `idx`.
    pub fn intensity(&self, c: usize, idx: usize) -> f64 {
        let re = self.e[c][idx] as f64;
        let im = self.e_im.as_ref().map_or(0.0, |v| v[c][idx] as f64);
        re * re + im * im
    }
}
