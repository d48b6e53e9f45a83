//! Padded field storage. Every array carries one ghost layer on each side of
//! every axis; interior node `(i, j, k)` lives at padded `(i+1, j+1, k+1)`.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Padded {
    pub n: [usize; 3],
    pub stride: [usize; 3],
}

impl Padded {
    pub fn new(n: [usize; 3]) -> Self {
        let sz = 1;
        let sy = n[2] + 2;
        let sx = (n[1] + 2) * sy;
        Padded {
            n,
            stride: [sx, sy, sz],
        }
    }

    pub fn total(&self) -> usize {
        (self.n[0] + 2) * self.stride[0]
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> usize {
        (i + 1) * self.stride[0] + (j + 1) * self.stride[1] + k + 1
    }

    /// Padded index for a possibly ghost coordinate in `-1..=n`.
    #[inline]
    pub fn at_signed(&self, p: [isize; 3]) -> usize {
        ((p[0] + 1) as usize) * self.stride[0]
            + ((p[1] + 1) as usize) * self.stride[1]
            + (p[2] + 1) as usize
    }

    /// Copy an unpadded array (x-major, z fastest) into padded storage.
    pub fn embed(&self, src: &[f32], fill: f32) -> Vec<f32> {
        let [nx, ny, nz] = self.n;
        let mut out = vec![fill; self.total()];
        for i in 0..nx {
            for j in 0..ny {
                let s = (i * ny + j) * nz;
                let d = self.at(i, j, 0);
                out[d..d + nz].copy_from_slice(&src[s..s + nz]);
            }
        }
        out
    }

    /// Strip ghosts from a padded array.
    pub fn extract(&self, src: &[f32]) -> Vec<f32> {
        let [nx, ny, nz] = self.n;
        let mut out = Vec::with_capacity(nx * ny * nz);
        for i in 0..nx {
            for j in 0..ny {
                let d = self.at(i, j, 0);
                out.extend_from_slice(&src[d..d + nz]);
            }
        }
        out
    }
}

/// Half-open index ranges per axis.
pub(crate) type Range3 = [[usize; 2]; 3];

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct FieldSet {
    pub e: [Vec<f32>; 3],
    pub h: [Vec<f32>; 3],
}

impl FieldSet {
    pub fn zeros(len: usize) -> Self {
        let z = || vec![0.0f32; len];
        FieldSet {
            e: [z(), z(), z()],
            h: [z(), z(), z()],
        }
    }

    pub fn all_finite(&self) -> bool {
        self.e
            .iter()
            .chain(self.h.iter())
            .all(|a| a.iter().all(|v| v.is_finite()))
    }
}
