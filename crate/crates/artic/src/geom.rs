//! Low-level geometric queries shared by rendering and the contact model.

use nalgebra::{Point3, Vector3};

/// A ray with precomputed data for the watertight triangle test: the
/// dominant-axis permutation and shear constants of Woop et al.
#[derive(Debug, Clone, Copy)]
pub struct Ray {
    pub origin: Point3<f64>,
    pub dir: Vector3<f64>,
    k: [usize; 3],
    shear: Vector3<f64>,
}

impl Ray {
    pub fn new(origin: Point3<f64>, dir: Vector3<f64>) -> Self {
        let kz = dir.iamax();
        let mut kx = (kz + 1) % 3;
        let mut ky = (kx + 1) % 3;
        if dir[kz] < 0.0 {
            std::mem::swap(&mut kx, &mut ky);
        }
        let shear = Vector3::new(dir[kx] / dir[kz], dir[ky] / dir[kz], 1.0 / dir[kz]);
        Self {
            origin,
            dir,
            k: [kx, ky, kz],
            shear,
        }
    }

    pub fn at(&self, t: f64) -> Point3<f64> {
        self.origin + self.dir * t
    }

    /// Watertight ray-triangle intersection. Returns the hit parameter `t`
    /// (in units of `dir`) when `t_min < t < t_max`. Edges and vertices
    /// shared between adjacent triangles never produce cracks: the scaled
    /// barycentric signs are computed identically for both.
    pub fn hit_triangle(
        &self,
        a: &Point3<f64>,
        b: &Point3<f64>,
        c: &Point3<f64>,
        t_min: f64,
        t_max: f64,
    ) -> Option<f64> {
        let [kx, ky, kz] = self.k;
        let (sx, sy, sz) = (self.shear.x, self.shear.y, self.shear.z);
        let av = a - self.origin;
        let bv = b - self.origin;
        let cv = c - self.origin;
        let ax = av[kx] - sx * av[kz];
        let ay = av[ky] - sy * av[kz];
        let bx = bv[kx] - sx * bv[kz];
        let by = bv[ky] - sy * bv[kz];
        let cx = cv[kx] - sx * cv[kz];
        let cy = cv[ky] - sy * cv[kz];
        let u = cx * by - cy * bx;
        let v = ax * cy - ay * cx;
        let w = bx * ay - by * ax;
        if (u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0) {
            return None;
        }
        let det = u + v + w;
        if det == 0.0 {
            return None;
        }
        let az = sz * av[kz];
        let bz = sz * bv[kz];
        let cz = sz * cv[kz];
        let t = (u * az + v * bz + w * cz) / det;
        (t > t_min && t < t_max).then_some(t)
    }

    /// Slab test against an axis-aligned box; true when the ray can hit it.
    pub fn hits_aabb(&self, lo: &Point3<f64>, hi: &Point3<f64>, t_max: f64) -> bool {
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for a in 0..3 {
            let inv = 1.0 / self.dir[a];
            let mut near = (lo[a] - self.origin[a]) * inv;
            let mut far = (hi[a] - self.origin[a]) * inv;
            if near > far {
                std::mem::swap(&mut near, &mut far);
            }
            t0 = t0.max(near);
            t1 = t1.min(far);
            if t0 > t1 {
                return false;
            }
        }
        true
    }
}

/// Closest point on triangle `abc` to `p` (Ericson, Real-Time Collision
/// Detection, 5.1.5).
pub fn closest_point_on_triangle(
    p: &Point3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> Point3<f64> {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ray_hits_triangle_straight_on() {
        let ray = Ray::new(Point3::new(0.2, 0.2, -1.0), Vector3::new(0.0, 0.0, 1.0));
        let t = ray
            .hit_triangle(
                &Point3::new(0.0, 0.0, 1.0),
                &Point3::new(1.0, 0.0, 1.0),
                &Point3::new(0.0, 1.0, 1.0),
                0.0,
                f64::INFINITY,
            )
            .unwrap();
        assert!((t - 2.0).abs() < 1e-12);
    }

    #[test]
    fn shared_edge_is_watertight() {
        // Two triangles sharing the diagonal of a quad: a ray through the
        // shared edge must hit exactly one of them (never neither).
        let a = Point3::new(0.0, 0.0, 1.0);
        let b = Point3::new(1.0, 0.0, 1.0);
        let c = Point3::new(1.0, 1.0, 1.0);
        let d = Point3::new(0.0, 1.0, 1.0);
        let mut misses = 0;
        let mut doubles = 0;
        for i in 0..200 {
            let s = i as f64 / 199.0;
            // Points on the diagonal b-d.
            let p = Point3::new(1.0 - s, s, 0.0);
            let ray = Ray::new(p, Vector3::new(0.0, 0.0, 1.0));
            let h1 = ray.hit_triangle(&a, &b, &d, 0.0, 10.0).is_some();
            let h2 = ray.hit_triangle(&b, &c, &d, 0.0, 10.0).is_some();
            if !h1 && !h2 {
                misses += 1;
            }
            if h1 && h2 {
                doubles += 1;
            }
        }
        assert_eq!(misses, 0);
        // Hits directly on the shared edge may register on both; that is
        // fine for depth rendering (same t), but cracks are not.
        assert!(doubles <= 200);
    }

    #[test]
    fn closest_point_regions() {
        let a = Point3::new(0.0, 0.0, 0.0);
        let b = Point3::new(1.0, 0.0, 0.0);
        let c = Point3::new(0.0, 1.0, 0.0);
        // Interior projection.
        let q = closest_point_on_triangle(&Point3::new(0.2, 0.2, 5.0), &a, &b, &c);
        assert!((q - Point3::new(0.2, 0.2, 0.0)).norm() < 1e-12);
        // Vertex region.
        let q = closest_point_on_triangle(&Point3::new(-1.0, -1.0, 0.0), &a, &b, &c);
        assert!((q - a).norm() < 1e-12);
        // Edge region.
        let q = closest_point_on_triangle(&Point3::new(0.5, -2.0, 0.0), &a, &b, &c);
        assert!((q - Point3::new(0.5, 0.0, 0.0)).norm() < 1e-12);
    }
}
