//! Convolutional PML: auxiliary psi fields in the absorbing slabs, one per
//! (corrected component, derivative axis, side). kappa is fixed at 1.

use super::grid::{FieldSet, Padded, Range3};
use super::{Boundary, PmlParams};

struct Region {
    axis: usize,
    electric: bool,
    component: usize,
    source: usize,
    sign: f32,
    range: Range3,
    /// One psi buffer per field set (two for complex Bloch runs).
    psi: Vec<Vec<f32>>,
    b: Vec<f32>,
    c: Vec<f32>,
}

pub(crate) struct Cpml {
    regions: Vec<Region>,
}

fn intersect(a: Range3, b: Range3) -> Option<Range3> {
    let mut r = [[0; 2]; 3];
    for ax in 0..3 {
        r[ax] = [a[ax][0].max(b[ax][0]), a[ax][1].min(b[ax][1])];
        if r[ax][0] >= r[ax][1] {
            return None;
        }
    }
    Some(r)
}

/// Profile coefficients seen along one contiguous z row: either constant
/// (absorbing axis is x or y) or varying per element (axis z).
#[derive(Clone, Copy)]
enum Coef<'a> {
    Const(f32),
    Row(&'a [f32]),
}

impl Coef<'_> {
    #[inline(always)]
    fn get(self, t: usize) -> f32 {
        match self {
            Coef::Const(v) => v,
            Coef::Row(r) => r[t],
        }
    }
}

struct Rows<'a> {
    axis: usize,
    range: Range3,
    b: &'a [f32],
    c: &'a [f32],
}

impl Rows<'_> {
    /// Visit each contiguous z row of the region with its padded start
    /// index, psi slice and profile coefficients.
    fn each(
        &self,
        pad: &Padded,
        psi: &mut [f32],
        mut f: impl FnMut(usize, &mut [f32], Coef, Coef),
    ) {
        let r = self.range;
        let len = r[2][1] - r[2][0];
        let mut p = 0;
        for i in r[0][0]..r[0][1] {
            for j in r[1][0]..r[1][1] {
                let g = pad.at(i, j, r[2][0]);
                let (b, c) = match self.axis {
                    0 => (
                        Coef::Const(self.b[i - r[0][0]]),
                        Coef::Const(self.c[i - r[0][0]]),
                    ),
                    1 => (
                        Coef::Const(self.b[j - r[1][0]]),
                        Coef::Const(self.c[j - r[1][0]]),
                    ),
                    _ => (Coef::Row(&self.b), Coef::Row(&self.c)),
                };
                f(g, &mut psi[p..p + len], b, c);
                p += len;
            }
        }
    }
}

impl Cpml {
    /// `ranges[f]` is the update range of field component `f` (0..3 E, 3..6 H).
    pub fn new(
        params: &PmlParams,
        boundaries: &[Boundary; 3],
        n: [usize; 3],
        ranges: &[Range3; 6],
        dt: f64,
        field_sets: usize,
    ) -> Self {
        let m = params.cells as f64;
        let sigma_max = params.sigma_scale * 0.8 * (params.order + 1.0);
        let mut regions = Vec::new();
        for axis in 0..3 {
            let bc = boundaries[axis];
            let len = n[axis];
            let mut sides = Vec::new();
            if bc.absorbs_low() {
                sides.push(false);
            }
            if bc.absorbs_high() {
                sides.push(true);
            }
            for high in sides {
                let interface = if high { (len as f64 - 1.0) - m } else { m };
                let depth = |x: f64| {
                    let rho = if high {
                        (x - interface) / m
                    } else {
                        (interface - x) / m
                    };
                    rho.clamp(0.0, 1.0)
                };
                for electric in [true, false] {
                    let base_offset = if electric { 0.0 } else { 0.5 };
                    let span = if electric {
                        if high {
                            [(interface as usize) + 1, len - 1]
                        } else {
                            [1, params.cells]
                        }
                    } else if high {
                        [interface as usize, len - 1]
                    } else {
                        [0, params.cells]
                    };
                    for component in 0..3 {
                        if component == axis {
                            continue;
                        }
                        let (source, sign) = if axis == (component + 1) % 3 {
                            ((component + 2) % 3, 1.0)
                        } else {
                            ((component + 1) % 3, -1.0)
                        };
                        let mut slab = [[0, n[0]], [0, n[1]], [0, n[2]]];
                        slab[axis] = span;
                        let upd = ranges[if electric { component } else { 3 + component }];
                        let Some(range) = intersect(slab, upd) else {
                            continue;
                        };
                        let (b, c): (Vec<f32>, Vec<f32>) = (range[axis][0]..range[axis][1])
                            .map(|i| {
                                let rho = depth(i as f64 + base_offset);
                                let sigma = sigma_max * rho.powf(params.order);
                                let alpha = params.alpha_max * (1.0 - rho);
                                let b = (-(sigma + alpha) * dt).exp();
                                let c = if sigma > 0.0 {
                                    sigma / (sigma + alpha) * (b - 1.0)
                                } else {
                                    0.0
                                };
                                (b as f32, c as f32)
                            })
                            .unzip();
                        let cells: usize = range.iter().map(|r| r[1] - r[0]).product();
                        regions.push(Region {
                            axis,
                            electric,
                            component,
                            source,
                            sign,
                            range,
                            psi: vec![vec![0.0; cells]; field_sets],
                            b,
                            c,
                        });
                    }
                }
            }
        }
        Cpml { regions }
    }

    /// Apply the E-field corrections after the bulk E update.
    pub fn correct_e(&mut self, pad: &Padded, fields: &mut [FieldSet], coef: &[Vec<f32>; 3]) {
        for r in self.regions.iter_mut().filter(|r| r.electric) {
            let s = pad.stride[r.axis];
            let rows = Rows {
                axis: r.axis,
                range: r.range,
                b: &r.b,
                c: &r.c,
            };
            let sign = r.sign;
            for (set, psi) in fields.iter_mut().zip(r.psi.iter_mut()) {
                let (src, dst) = (&set.h[r.source], &mut set.e[r.component]);
                let cf = &coef[r.component];
                rows.each(pad, psi, |g, psi, b, c| {
                    let len = psi.len();
                    let d = &mut dst[g..g + len];
                    let (h0, h1, cf) =
                        (&src[g..g + len], &src[g - s..g - s + len], &cf[g..g + len]);
                    for t in 0..len {
                        let (bt, ct) = (b.get(t), c.get(t));
                        psi[t] = bt * psi[t] + ct * (h0[t] - h1[t]);
                        d[t] += cf[t] * sign * psi[t];
                    }
                });
            }
        }
    }

    /// Apply the H-field corrections after the bulk H update.
    pub fn correct_h(&mut self, pad: &Padded, fields: &mut [FieldSet], dt: f32) {
        for r in self.regions.iter_mut().filter(|r| !r.electric) {
            let s = pad.stride[r.axis];
            let rows = Rows {
                axis: r.axis,
                range: r.range,
                b: &r.b,
                c: &r.c,
            };
            let k = dt * r.sign;
            for (set, psi) in fields.iter_mut().zip(r.psi.iter_mut()) {
                let (src, dst) = (&set.e[r.source], &mut set.h[r.component]);
                rows.each(pad, psi, |g, psi, b, c| {
                    let len = psi.len();
                    let d = &mut dst[g..g + len];
                    let (e0, e1) = (&src[g..g + len], &src[g + s..g + s + len]);
                    for t in 0..len {
                        let (bt, ct) = (b.get(t), c.get(t));
                        psi[t] = bt * psi[t] + ct * (e1[t] - e0[t]);
                        d[t] -= k * psi[t];
                    }
                });
            }
        }
    }

    pub fn memory_bytes(&self) -> usize {
        self.regions
            .iter()
            .map(|r| r.psi.iter().map(|p| p.len() * 4).sum::<usize>())
            .sum()
    }
}
