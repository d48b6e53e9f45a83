use super::spec::GeometrySpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Material {
    Diamond,
    Vacuum,
}

/// Axis-aligned box, nm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Bounds {
    pub fn intersects(&self, min: [f64; 3], max: [f64; 3]) -> bool {
        (0..3).all(|a| min[a] <= self.max[a] && max[a] >= self.min[a])
    }

    pub fn everywhere() -> Self {
        Bounds {
            min: [f64::NEG_INFINITY; 3],
            max: [f64::INFINITY; 3],
        }
    }
}

/// A two-material structure that can be sampled pointwise.
pub trait Structure: Sync {
    fn material_at(&self, p: [f64; 3]) -> Material;

    /// Refractive index of the solid material.
    fn index(&self) -> f64;

    /// Box outside of which everything is vacuum. `None` means empty space.
    fn bounds(&self) -> Option<Bounds>;
}

/// The finite nanobeam cavity described by a [`GeometrySpec`].
pub struct NanobeamCavity<'a> {
    spec: &'a GeometrySpec,
    grooves: Vec<f64>,
}

impl<'a> NanobeamCavity<'a> {
    pub fn new(spec: &'a GeometrySpec) -> Self {
        NanobeamCavity {
            spec,
            grooves: spec.groove_centers(),
        }
    }

    pub fn spec(&self) -> &GeometrySpec {
        self.spec
    }

    fn in_groove(&self, x: f64, y: f64, z: f64) -> bool {
        let s = self.spec;
        if y < 0.0 || y > s.groove_depth || x.abs() > 0.5 * s.groove_length {
            return false;
        }
        let half = 0.5 * s.groove_width;
        // Grooves are sorted; only the two nearest centres can contain z.
        let idx = self.grooves.partition_point(|&c| c < z);
        let near = |i: usize| self.grooves.get(i).is_some_and(|c| (z - c).abs() <= half);
        near(idx) || (idx > 0 && near(idx - 1))
    }
}

fn in_triangle(spec: &GeometrySpec, x: f64, y: f64) -> bool {
    (0.0..=spec.beam_height).contains(&y) && x.abs() <= spec.half_width_at(y)
}

impl Structure for NanobeamCavity<'_> {
    fn material_at(&self, [x, y, z]: [f64; 3]) -> Material {
        if (!self.spec.anchored_ends && z.abs() > 0.5 * self.spec.beam_length)
            || !in_triangle(self.spec, x, y)
            || self.in_groove(x, y, z)
        {
            Material::Vacuum
        } else {
            Material::Diamond
        }
    }

    fn index(&self) -> f64 {
        self.spec.refractive_index
    }

    fn bounds(&self) -> Option<Bounds> {
        let s = self.spec;
        let half = if s.anchored_ends {
            f64::INFINITY
        } else {
            0.5 * s.beam_length
        };
        Some(Bounds {
            min: [-0.5 * s.beam_width, 0.0, -half],
            max: [0.5 * s.beam_width, s.beam_height, half],
        })
    }
}

/// Infinite beam with grooves of period `a` centred on `z = m·a`, used for
/// unit-cell band structure. With `grooved == false` the beam is uniform.
pub struct PeriodicBeam<'a> {
    pub spec: &'a GeometrySpec,
    pub grooved: bool,
}

impl Structure for PeriodicBeam<'_> {
    fn material_at(&self, [x, y, z]: [f64; 3]) -> Material {
        let s = self.spec;
        if !in_triangle(s, x, y) {
            return Material::Vacuum;
        }
        if self.grooved && y <= s.groove_depth && x.abs() <= 0.5 * s.groove_length {
            let a = s.lattice_constant;
            let local = z - a * (z / a).round();
            if local.abs() <= 0.5 * s.groove_width {
                return Material::Vacuum;
            }
        }
        Material::Diamond
    }

    fn index(&self) -> f64 {
        self.spec.refractive_index
    }

    fn bounds(&self) -> Option<Bounds> {
        let s = self.spec;
        Some(Bounds {
            min: [-0.5 * s.beam_width, 0.0, f64::NEG_INFINITY],
            max: [0.5 * s.beam_width, s.beam_height, f64::INFINITY],
        })
    }
}

pub struct EmptySpace;

impl Structure for EmptySpace {
    fn material_at(&self, _: [f64; 3]) -> Material {
        Material::Vacuum
    }
    fn index(&self) -> f64 {
        1.0
    }
    fn bounds(&self) -> Option<Bounds> {
        None
    }
}

/// Solid for `p[axis] < offset`, vacuum beyond.
pub struct HalfSpace {
    pub axis: usize,
    pub offset: f64,
    pub index: f64,
}

impl Structure for HalfSpace {
    fn material_at(&self, p: [f64; 3]) -> Material {
        if p[self.axis] < self.offset {
            Material::Diamond
        } else {
            Material::Vacuum
        }
    }
    fn index(&self) -> f64 {
        self.index
    }
    fn bounds(&self) -> Option<Bounds> {
        let mut b = Bounds::everywhere();
        b.max[self.axis] = self.offset;
        Some(b)
    }
}

/// Planar solid layers stacked along z, each `[z_start, z_end)`.
pub struct LayerStack {
    pub layers: Vec<(f64, f64)>,
    pub index: f64,
}

impl LayerStack {
    /// `pairs` repetitions of (solid, vacuum) quarter-wave layers at the
    /// vacuum design wavelength, starting at `z0`.
    pub fn quarter_wave(z0: f64, design_wavelength: f64, index: f64, pairs: usize) -> Self {
        let solid = design_wavelength / (4.0 * index);
        let gap = design_wavelength / 4.0;
        let layers = (0..pairs)
            .map(|p| {
                let start = z0 + p as f64 * (solid + gap);
                (start, start + solid)
            })
            .collect();
        LayerStack { layers, index }
    }
}

impl Structure for LayerStack {
    fn material_at(&self, p: [f64; 3]) -> Material {
        if self.layers.iter().any(|&(lo, hi)| p[2] >= lo && p[2] < hi) {
            Material::Diamond
        } else {
            Material::Vacuum
        }
    }
    fn index(&self) -> f64 {
        self.index
    }
    fn bounds(&self) -> Option<Bounds> {
        let lo = self
            .layers
            .iter()
            .map(|l| l.0)
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .layers
            .iter()
            .map(|l| l.1)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut b = Bounds::everywhere();
        b.min[2] = lo;
        b.max[2] = hi;
        (lo < hi).then_some(b)
    }
}
