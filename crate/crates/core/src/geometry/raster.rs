use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::GeometrySpec;
use super::structure::{Material, Structure};
use super::GeometryError;

/// Approximate solver footprint per grid node: three permittivity
/// coefficients plus six field components, f32, with headroom for ghost
/// layers and absorbing-layer state.
pub const SOLVER_BYTES_PER_CELL: usize = 4 * 12;

const SUBSAMPLES: usize = 4;

/// Which part of the cavity the grid covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetry {
    /// Whole structure; x = 0 and z = 0 fall on grid nodes at the centre.
    Full,
    /// x >= 0, z >= 0 with the mirror planes on the first node.
    Quadrant,
}

/// Node lattice in physical units. Node `(i, j, k)` sits at
/// `origin + (i, j, k) * cell_size`; the E-component `c` sample of that node
/// is displaced by half a cell along axis `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridLayout {
    pub cell_size: f64,
    pub dims: [usize; 3],
    pub origin: [f64; 3],
}

impl GridLayout {
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    /// Physical position of node `(i, j, k)` shifted by `offset` cells.
    pub fn position(&self, idx: [usize; 3], offset: [f64; 3]) -> [f64; 3] {
        let mut p = [0.0; 3];
        for a in 0..3 {
            p[a] = self.origin[a] + (idx[a] as f64 + offset[a]) * self.cell_size;
        }
        p
    }

    /// Grid around the cavity with `padding` nm of vacuum on every open side.
    pub fn for_cavity(
        spec: &GeometrySpec,
        cell_size: f64,
        padding: f64,
        symmetry: Symmetry,
    ) -> Self {
        let half_x = 0.5 * spec.beam_width + padding;
        let half_z = 0.5 * spec.beam_length + padding;
        let nodes = |len: f64| (len / cell_size).ceil() as usize;
        let top = nodes(padding);
        let ny = top + nodes(spec.beam_height + padding) + 1;
        let origin_y = -(top as f64) * cell_size;
        match symmetry {
            Symmetry::Full => {
                let (ix, iz) = (nodes(half_x), nodes(half_z));
                GridLayout {
                    cell_size,
                    dims: [2 * ix + 1, ny, 2 * iz + 1],
                    origin: [-(ix as f64) * cell_size, origin_y, -(iz as f64) * cell_size],
                }
            }
            Symmetry::Quadrant => GridLayout {
                cell_size,
                dims: [nodes(half_x) + 1, ny, nodes(half_z) + 1],
                origin: [0.0, origin_y, 0.0],
            },
        }
    }

    /// One lattice period along z, groove centred in the cell. With
    /// `half_x` only x >= 0 is covered (for a mirror plane at x = 0).
    pub fn unit_cell(
        spec: &GeometrySpec,
        cell_size: f64,
        padding: f64,
        half_x: bool,
    ) -> Result<Self, GeometryError> {
        let per = spec.lattice_constant / cell_size;
        let nz = per.round() as usize;
        if nz == 0 || (per - nz as f64).abs() > 1e-6 * per {
            return Err(GeometryError::invalid(
                "cell_size",
                format!(
                    "lattice constant {} is not a whole number of {cell_size} nm cells",
                    spec.lattice_constant
                ),
            ));
        }
        let mut layout = GridLayout::for_cavity(
            spec,
            cell_size,
            padding,
            if half_x {
                Symmetry::Quadrant
            } else {
                Symmetry::Full
            },
        );
        layout.dims[2] = nz;
        layout.origin[2] = -0.5 * spec.lattice_constant;
        Ok(layout)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RasterOptions {
    pub absorbing_cells: usize,
    pub memory_budget_bytes: usize,
}

impl Default for RasterOptions {
    fn default() -> Self {
        RasterOptions {
            absorbing_cells: 10,
            memory_budget_bytes: 1 << 30,
        }
    }
}

/// Relative permittivity sampled at the three staggered E-field locations.
#[derive(Debug, Clone, PartialEq)]
pub struct DielectricGrid {
    pub layout: GridLayout,
    /// `eps[c]` is sampled at node + half a cell along axis `c`.
    pub eps: [Vec<f32>; 3],
    /// Largest permittivity present in the material set (n²).
    pub eps_max: f64,
}

impl DielectricGrid {
    pub fn vacuum(layout: GridLayout) -> Self {
        let n = layout.len();
        DielectricGrid {
            layout,
            eps: [vec![1.0; n], vec![1.0; n], vec![1.0; n]],
            eps_max: 1.0,
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.layout.dims
    }

    pub fn cell_size(&self) -> f64 {
        self.layout.cell_size
    }

    pub fn eps_at(&self, component: usize, i: usize, j: usize, k: usize) -> f32 {
        self.eps[component][self.layout.index(i, j, k)]
    }

    /// Estimated dielectric volume `sum((eps - 1) / (n² - 1)) * cell³` using
    /// the samples of one component.
    pub fn dielectric_volume(&self, component: usize) -> f64 {
        if self.eps_max <= 1.0 {
            return 0.0;
        }
        let d3 = self.layout.cell_size.powi(3);
        self.eps[component]
            .iter()
            .map(|&e| (e as f64 - 1.0) / (self.eps_max - 1.0))
            .sum::<f64>()
            * d3
    }
}

pub fn required_memory(layout: &GridLayout) -> usize {
    let [nx, ny, nz] = layout.dims;
    (nx + 2) * (ny + 2) * (nz + 2) * SOLVER_BYTES_PER_CELL
}

/// Rasterize `structure` on `layout` with 4x4x4 volume-fraction averaging:
/// `eps = f * n² + (1 - f)`.
pub fn rasterize(
    structure: &dyn Structure,
    layout: GridLayout,
    options: &RasterOptions,
) -> Result<DielectricGrid, GeometryError> {
    if !(layout.cell_size.is_finite() && layout.cell_size > 0.0) {
        return Err(GeometryError::invalid("cell_size", "must be > 0"));
    }
    let required = required_memory(&layout);
    if required > options.memory_budget_bytes {
        return Err(GeometryError::MemoryBudget {
            required,
            budget: options.memory_budget_bytes,
        });
    }
    let n2 = structure.index().powi(2);
    let bounds = structure.bounds();
    let [_, ny, nz] = layout.dims;
    let d = layout.cell_size;
    let offsets: Vec<f64> = (0..SUBSAMPLES)
        .map(|s| ((s as f64 + 0.5) / SUBSAMPLES as f64 - 0.5) * d)
        .collect();
    let total = (SUBSAMPLES * SUBSAMPLES * SUBSAMPLES) as f64;

    let sample = |c: usize| -> Vec<f32> {
        let mut shift = [0.0; 3];
        shift[c] = 0.5;
        let mut out = vec![1.0f32; layout.len()];
        out.par_chunks_mut(ny * nz)
            .enumerate()
            .for_each(|(i, slab)| {
                for j in 0..ny {
                    for k in 0..nz {
                        let p = layout.position([i, j, k], shift);
                        let lo = [p[0] - 0.5 * d, p[1] - 0.5 * d, p[2] - 0.5 * d];
                        let hi = [p[0] + 0.5 * d, p[1] + 0.5 * d, p[2] + 0.5 * d];
                        let touches = bounds.is_some_and(|b| b.intersects(lo, hi));
                        if !touches {
                            continue;
                        }
                        let mut solid = 0usize;
                        for ox in &offsets {
                            for oy in &offsets {
                                for oz in &offsets {
                                    if structure.material_at([p[0] + ox, p[1] + oy, p[2] + oz])
                                        == Material::Diamond
                                    {
                                        solid += 1;
                                    }
                                }
                            }
                        }
                        let f = solid as f64 / total;
                        slab[j * nz + k] = (f * n2 + (1.0 - f)) as f32;
                    }
                }
            });
        out
    };
    let eps = [sample(0), sample(1), sample(2)];
    let eps_max = if bounds.is_some() { n2 } else { 1.0 };
    Ok(DielectricGrid {
        layout,
        eps,
        eps_max,
    })
}
