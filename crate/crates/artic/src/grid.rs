//! Dense voxel-grid plumbing shared by the sensing, part-tracking, and
//! meshing stages.
//!
//! All volumetric data in the pipeline lives on axis-aligned grids described
//! by a [`GridSpec`]: integer dimensions plus world-space bounds. Samples sit
//! at voxel centers.

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

/// Geometry of a dense axis-aligned voxel grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dims: [usize; 3],
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl GridSpec {
    pub fn new(dims: [usize; 3], lo: [f64; 3], hi: [f64; 3]) -> Self {
        assert!(dims.iter().all(|&d| d >= 2), "grid dims must be >= 2");
        Self { dims, lo, hi }
    }

    /// The canonical 96^3 grid over [-1.2, 1.2]^3: the normalized object cube
    /// plus 20% margin for articulated excursions.
    pub fn canonical() -> Self {
        Self::new([96, 96, 96], [-1.2; 3], [1.2; 3])
    }

    pub fn voxel_size(&self) -> Vector3<f64> {
        Vector3::new(
            (self.hi[0] - self.lo[0]) / self.dims[0] as f64,
            (self.hi[1] - self.lo[1]) / self.dims[1] as f64,
            (self.hi[2] - self.lo[2]) / self.dims[2] as f64,
        )
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Voxel containing a world point, or `None` when out of bounds.
    pub fn index_of(&self, p: &Point3<f64>) -> Option<[usize; 3]> {
        let h = self.voxel_size();
        let mut idx = [0usize; 3];
        for a in 0..3 {
            let f = (p[a] - self.lo[a]) / h[a];
            if f < 0.0 || f >= self.dims[a] as f64 {
                return None;
            }
            idx[a] = f as usize;
        }
        Some(idx)
    }

    /// World-space center of a voxel.
    pub fn center(&self, idx: [usize; 3]) -> Point3<f64> {
        let h = self.voxel_size();
        Point3::new(
            self.lo[0] + (idx[0] as f64 + 0.5) * h[0],
            self.lo[1] + (idx[1] as f64 + 0.5) * h[1],
            self.lo[2] + (idx[2] as f64 + 0.5) * h[2],
        )
    }

    pub fn linear(&self, idx: [usize; 3]) -> usize {
        (idx[2] * self.dims[1] + idx[1]) * self.dims[0] + idx[0]
    }

    pub fn unlinear(&self, lin: usize) -> [usize; 3] {
        let x = lin % self.dims[0];
        let y = (lin / self.dims[0]) % self.dims[1];
        let z = lin / (self.dims[0] * self.dims[1]);
        [x, y, z]
    }

    /// Iterate all voxel indices in x-fastest order (matches `linear`).
    pub fn iter_indices(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        let [nx, ny, nz] = self.dims;
        (0..nz).flat_map(move |z| (0..ny).flat_map(move |y| (0..nx).map(move |x| [x, y, z])))
    }
}

/// Dense scalar field sampled at voxel centers.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub spec: GridSpec,
    pub data: Vec<f32>,
}

impl ScalarField {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            data: vec![0.0; spec.len()],
            spec,
        }
    }

    pub fn constant(spec: GridSpec, v: f32) -> Self {
        Self {
            data: vec![v; spec.len()],
            spec,
        }
    }

    pub fn get(&self, idx: [usize; 3]) -> f32 {
        self.data[self.spec.linear(idx)]
    }

    pub fn set(&mut self, idx: [usize; 3], v: f32) {
        let lin = self.spec.linear(idx);
        self.data[lin] = v;
    }

    /// Separable Gaussian blur with the kernel truncated at three sigma and
    /// renormalized, so interior mass is conserved.
    pub fn gaussian_blur(&mut self, sigma: f64) {
        if sigma <= 0.0 {
            return;
        }
        let radius = (3.0 * sigma).ceil() as isize;
        let mut kernel = Vec::with_capacity((2 * radius + 1) as usize);
        for k in -radius..=radius {
            kernel.push((-(k * k) as f64 / (2.0 * sigma * sigma)).exp());
        }
        let norm: f64 = kernel.iter().sum();
        let kernel: Vec<f32> = kernel.iter().map(|w| (w / norm) as f32).collect();

        let [nx, ny, nz] = self.spec.dims;
        let mut tmp = vec![0.0f32; self.data.len()];
        let strides = [1isize, nx as isize, (nx * ny) as isize];
        let dims = [nx as isize, ny as isize, nz as isize];
        for axis in 0..3 {
            let stride = strides[axis];
            let n = dims[axis];
            for z in 0..nz as isize {
                for y in 0..ny as isize {
                    for x in 0..nx as isize {
                        let pos = [x, y, z];
                        let lin = x + y * strides[1] + z * strides[2];
                        let mut acc = 0.0f32;
                        for (ki, w) in kernel.iter().enumerate() {
                            let off = ki as isize - radius;
                            let c = pos[axis] + off;
                            if c >= 0 && c < n {
                                acc += w * self.data[(lin + off * stride) as usize];
                            }
                        }
                        tmp[lin as usize] = acc;
                    }
                }
            }
            std::mem::swap(&mut self.data, &mut tmp);
        }
    }
}

/// Offsets of the six face-adjacent neighbors.
pub const FACE_NEIGHBORS: [[isize; 3]; 6] = [
    [1, 0, 0],
    [-1, 0, 0],
    [0, 1, 0],
    [0, -1, 0],
    [0, 0, 1],
    [0, 0, -1],
];

/// Apply an index offset, returning `None` when it leaves the grid.
pub fn offset_index(spec: &GridSpec, idx: [usize; 3], off: [isize; 3]) -> Option<[usize; 3]> {
    let mut out = [0usize; 3];
    for a in 0..3 {
        let v = idx[a] as isize + off[a];
        if v < 0 || v >= spec.dims[a] as isize {
            return None;
        }
        out[a] = v as usize;
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_center_roundtrip() {
        let g = GridSpec::canonical();
        let idx = [0, 47, 95];
        let c = g.center(idx);
        assert_eq!(g.index_of(&c), Some(idx));
    }

    #[test]
    fn out_of_bounds_is_none() {
        let g = GridSpec::canonical();
        assert_eq!(g.index_of(&Point3::new(1.25, 0.0, 0.0)), None);
        assert_eq!(g.index_of(&Point3::new(-1.2000001, 0.0, 0.0)), None);
    }

    #[test]
    fn linear_unlinear_roundtrip() {
        let g = GridSpec::new([4, 5, 6], [0.0; 3], [1.0; 3]);
        for lin in 0..g.len() {
            assert_eq!(g.linear(g.unlinear(lin)), lin);
        }
    }

    #[test]
    fn blur_conserves_interior_mass() {
        let g = GridSpec::new([32, 32, 32], [0.0; 3], [1.0; 3]);
        let mut f = ScalarField::zeros(g);
        f.set([16, 16, 16], 1.0);
        f.gaussian_blur(0.75);
        let total: f32 = f.data.iter().sum();
        assert!((total - 1.0).abs() < 1e-5, "mass {total}");
    }
}
