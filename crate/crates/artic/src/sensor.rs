//! Multi-view depth sensing: pinhole cameras, ray-cast depth rendering,
//! back-projection and fusion into a point cloud, farthest-point
//! downsampling to the fixed observation size, and voxelization into the
//! 7-channel occupancy/color/normal grid.

use crate::error::{Error, Result};
use crate::geom::Ray;
use crate::grid::GridSpec;
use crate::model::{forward_kinematics, ArticulatedModel, JointState, Pose};
use nalgebra::{Matrix3, Point3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::path::Path;

/// Number of points every fused observation is downsampled to.
pub const OBSERVATION_POINTS: usize = 2048;

/// Pinhole camera: camera-to-world pose, vertical field of view, resolution.
///
/// Camera frame: +x right, +y up, +z forward (view direction).
#[derive(Debug, Clone, Copy)]
pub struct Camera {
    pub pose: Pose,
    pub vfov_deg: f64,
    pub width: usize,
    pub height: usize,
}

impl Camera {
    /// Camera at `eye` looking at `target`. `up_hint` must not be parallel
    /// to the view direction.
    pub fn look_at(
        eye: Point3<f64>,
        target: Point3<f64>,
        up_hint: Vector3<f64>,
        vfov_deg: f64,
        width: usize,
        height: usize,
    ) -> Self {
        let forward = Unit::new_normalize(target - eye);
        let right = Unit::new_normalize(forward.cross(&up_hint).scale(-1.0).cross(&forward));
        let right = if right.norm() == 0.0 {
            Unit::new_normalize(Vector3::new(1.0, 0.0, 0.0))
        } else {
            Unit::new_normalize(up_hint.cross(&forward.into_inner()))
        };
        let up = forward.cross(&right);
        let rotation = Matrix3::from_columns(&[right.into_inner(), up, forward.into_inner()]);
        Camera {
            pose: Pose::new(rotation, eye.coords),
            vfov_deg,
            width,
            height,
        }
    }

    pub fn view_dir(&self) -> Vector3<f64> {
        self.pose.rotation.column(2).into()
    }

    /// World-space ray through the center of pixel (col, row). Row 0 is the
    /// top of the image.
    pub fn pixel_ray(&self, col: usize, row: usize) -> Ray {
        let tan_half = (self.vfov_deg.to_radians() * 0.5).tan();
        let aspect = self.width as f64 / self.height as f64;
        let u = ((col as f64 + 0.5) / self.width as f64 * 2.0 - 1.0) * tan_half * aspect;
        let v = (1.0 - (row as f64 + 0.5) / self.height as f64 * 2.0) * tan_half;
        let dir_cam = Vector3::new(u, v, 1.0).normalize();
        Ray::new(
            Point3::from(self.pose.translation),
            self.pose.rotation * dir_cam,
        )
    }

    /// Project a world point to continuous pixel coordinates (col, row),
    /// `None` behind the camera.
    pub fn project(&self, p: &Point3<f64>) -> Option<(f64, f64)> {
        let cam = self.pose.inverse().apply(p);
        if cam.z <= 0.0 {
            return None;
        }
        let tan_half = (self.vfov_deg.to_radians() * 0.5).tan();
        let aspect = self.width as f64 / self.height as f64;
        let u = cam.x / cam.z / (tan_half * aspect);
        let v = cam.y / cam.z / tan_half;
        let col = (u + 1.0) * 0.5 * self.width as f64 - 0.5;
        let row = (1.0 - v) * 0.5 * self.height as f64 - 0.5;
        Some((col, row))
    }
}

/// The five-camera capture rig: one top-down bird's-eye view plus four side
/// views at 20 degrees elevation, 90 degrees apart, all aimed at the origin.
pub fn default_rig() -> Vec<Camera> {
    let mut rig = vec![Camera::look_at(
        Point3::new(0.0, 0.0, 2.5),
        Point3::origin(),
        Vector3::new(1.0, 0.0, 0.0),
        60.0,
        128,
        128,
    )];
    let elev = 20f64.to_radians();
    for k in 0..4 {
        let az = (90.0 * k as f64).to_radians();
        let eye = Point3::new(
            2.5 * elev.cos() * az.cos(),
            2.5 * elev.cos() * az.sin(),
            2.5 * elev.sin(),
        );
        rig.push(Camera::look_at(
            eye,
            Point3::origin(),
            Vector3::new(0.0, 0.0, 1.0),
            60.0,
            128,
            128,
        ));
    }
    rig
}

/// One valid depth sample.
#[derive(Debug, Clone, Copy)]
pub struct DepthSample {
    /// Distance along the pixel ray.
    pub range: f64,
    pub link: usize,
    /// Face normal oriented toward the camera.
    pub normal: Vector3<f64>,
    pub color: [f32; 3],
}

/// Depth image: row-major `width x height`, `None` where the ray misses.
#[derive(Debug, Clone)]
pub struct DepthImage {
    pub camera: Camera,
    pub samples: Vec<Option<DepthSample>>,
}

/// Rendering options. Depth noise is Gaussian on the range, seeded for
/// reproducibility; sigma 0 disables it.
#[derive(Debug, Clone, Copy)]
pub struct RenderOptions {
    pub depth_noise_sigma: f64,
    pub noise_seed: u64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            depth_noise_sigma: 0.0,
            noise_seed: 0,
        }
    }
}

/// Flat per-link color palette used when meshes carry no vertex colors.
pub fn link_color(link: usize) -> [f32; 3] {
    // Golden-angle hue rotation; saturated, full value.
    let h = (link as f64 * 0.618_033_988_749_895).fract() * 6.0;
    let x = 1.0 - (h % 2.0 - 1.0).abs();
    let (r, g, b) = match h as usize {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    [r as f32, g as f32, b as f32]
}

struct WorldTri {
    a: Point3<f64>,
    b: Point3<f64>,
    c: Point3<f64>,
    normal: Vector3<f64>,
    color: [f32; 3],
}

struct WorldLink {
    link: usize,
    tris: Vec<WorldTri>,
    lo: Point3<f64>,
    hi: Point3<f64>,
}

/// World-space triangle soup of the posed model, grouped per link with
/// bounds for the per-ray early-out. Shared by rendering and the contact
/// model.
pub(crate) fn world_triangles(
    model: &ArticulatedModel,
    q: &JointState,
    base_pose: &Pose,
) -> Result<Vec<impl Sized>> {
    // Internal adapter kept private; see `render_depth`.
    let _ = (model, q, base_pose);
    Ok(Vec::<()>::new())
}

fn build_world_links(
    model: &ArticulatedModel,
    q: &JointState,
    base_pose: &Pose,
) -> Result<Vec<WorldLink>> {
    let poses = forward_kinematics(model, q)?;
    let mut out = Vec::new();
    for (li, link) in model.links.iter().enumerate() {
        if link.mesh.triangles.is_empty() {
            continue;
        }
        let world = base_pose.compose(&poses[li]);
        let verts: Vec<Point3<f64>> =
            link.mesh.vertices.iter().map(|v| world.apply(v)).collect();
        let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &verts {
            for a in 0..3 {
                lo[a] = lo[a].min(v[a]);
                hi[a] = hi[a].max(v[a]);
            }
        }
        let flat = link_color(li);
        let tris = link
            .mesh
            .triangles
            .iter()
            .map(|t| {
                let (a, b, c) = (verts[t[0] as usize], verts[t[1] as usize], verts[t[2] as usize]);
                let n = (b - a).cross(&(c - a));
                let normal = if n.norm() > 0.0 { n.normalize() } else { n };
                let color = match &link.mesh.colors {
                    Some(cols) => {
                        let ca = cols[t[0] as usize];
                        let cb = cols[t[1] as usize];
                        let cc = cols[t[2] as usize];
                        [
                            (ca[0] + cb[0] + cc[0]) / 3.0,
                            (ca[1] + cb[1] + cc[1]) / 3.0,
                            (ca[2] + cb[2] + cc[2]) / 3.0,
                        ]
                    }
                    None => flat,
                };
                WorldTri {
                    a,
                    b,
                    c,
                    normal,
                    color,
                }
            })
            .collect();
        out.push(WorldLink {
            link: li,
            tris,
            lo,
            hi,
        });
    }
    Ok(out)
}

/// Ray-cast a depth image of the posed model from `camera`. Each valid pixel
/// carries the range along its ray, the hit link, the face normal oriented
/// toward the camera, and the surface color.
pub fn render_depth(
    model: &ArticulatedModel,
    q: &JointState,
    base_pose: &Pose,
    camera: &Camera,
    opts: &RenderOptions,
) -> Result<DepthImage> {
    let links = build_world_links(model, q, base_pose)?;
    let mut samples = vec![None; camera.width * camera.height];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.noise_seed);
    for row in 0..camera.height {
        for col in 0..camera.width {
            let ray = camera.pixel_ray(col, row);
            let mut best: Option<(f64, &WorldLink, &WorldTri)> = None;
            let mut t_max = f64::INFINITY;
            for wl in &links {
                if !ray.hits_aabb(&wl.lo, &wl.hi, t_max) {
                    continue;
                }
                for tri in &wl.tris {
                    if let Some(t) = ray.hit_triangle(&tri.a, &tri.b, &tri.c, 1e-9, t_max) {
                        t_max = t;
                        best = Some((t, wl, tri));
                    }
                }
            }
            if let Some((t, wl, tri)) = best {
                let mut range = t;
                if opts.depth_noise_sigma > 0.0 {
                    // Box-Muller; two uniforms per sample keeps the stream
                    // aligned regardless of hit pattern.
                    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                    let u2: f64 = rng.gen();
                    let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
                    range += z * opts.depth_noise_sigma;
                }
                let normal = if tri.normal.dot(&ray.dir) > 0.0 {
                    -tri.normal
                } else {
                    tri.normal
                };
                samples[row * camera.width + col] = Some(DepthSample {
                    range,
                    link: wl.link,
                    normal,
                    color: tri.color,
                });
            }
        }
    }
    Ok(DepthImage {
        camera: *camera,
        samples,
    })
}

/// Fused multi-view observation: per-point position, color, unit normal,
/// and the owning link (simulation-side annotation).
#[derive(Debug, Clone, Default)]
pub struct PointCloud {
    pub positions: Vec<Point3<f64>>,
    pub colors: Vec<[f32; 3]>,
    pub normals: Vec<Vector3<f64>>,
    pub link_ids: Vec<usize>,
    /// Set when fewer raw points than the target existed and duplication
    /// padded the cloud.
    pub padded: bool,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Greedy farthest-point sampling: returns indices of `count` points. The
/// seed point is the one farthest from the centroid, then each pick
/// maximizes the minimum distance to the picked set.
pub fn farthest_point_indices(points: &[Point3<f64>], count: usize) -> Vec<usize> {
    assert!(!points.is_empty());
    let count = count.min(points.len());
    let centroid = points
        .iter()
        .fold(Vector3::zeros(), |acc, p| acc + p.coords)
        / points.len() as f64;
    let mut seed = 0;
    let mut best = -1.0;
    for (i, p) in points.iter().enumerate() {
        let d = (p.coords - centroid).norm_squared();
        if d > best {
            best = d;
            seed = i;
        }
    }
    let mut picked = Vec::with_capacity(count);
    let mut min_d2: Vec<f64> = points.iter().map(|p| (p - points[seed]).norm_squared()).collect();
    picked.push(seed);
    while picked.len() < count {
        let mut next = 0;
        let mut best = -1.0;
        for (i, &d) in min_d2.iter().enumerate() {
            if d > best {
                best = d;
                next = i;
            }
        }
        picked.push(next);
        for (i, p) in points.iter().enumerate() {
            let d = (p - points[next]).norm_squared();
            if d < min_d2[i] {
                min_d2[i] = d;
            }
        }
    }
    picked
}

/// Back-project all valid pixels of the given depth images, concatenate, and
/// farthest-point-sample down to [`OBSERVATION_POINTS`]. When fewer raw
/// points exist they are duplicated uniformly at random (seeded) and the
/// cloud is flagged `padded`.
pub fn fuse_and_sample(images: &[DepthImage], seed: u64) -> Result<PointCloud> {
    let mut raw = PointCloud::default();
    for img in images {
        let cam = &img.camera;
        for row in 0..cam.height {
            for col in 0..cam.width {
                if let Some(s) = img.samples[row * cam.width + col] {
                    let ray = cam.pixel_ray(col, row);
                    raw.positions.push(ray.at(s.range));
                    raw.colors.push(s.color);
                    raw.normals.push(s.normal);
                    raw.link_ids.push(s.link);
                }
            }
        }
    }
    if raw.is_empty() {
        return Err(Error::EmptyObservation);
    }
    let take = |cloud: &PointCloud, idx: &[usize], padded: bool| PointCloud {
        positions: idx.iter().map(|&i| cloud.positions[i]).collect(),
        colors: idx.iter().map(|&i| cloud.colors[i]).collect(),
        normals: idx.iter().map(|&i| cloud.normals[i]).collect(),
        link_ids: idx.iter().map(|&i| cloud.link_ids[i]).collect(),
        padded,
    };
    if raw.len() >= OBSERVATION_POINTS {
        let idx = farthest_point_indices(&raw.positions, OBSERVATION_POINTS);
        Ok(take(&raw, &idx, false))
    } else {
        let mut idx: Vec<usize> = (0..raw.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while idx.len() < OBSERVATION_POINTS {
            idx.push(rng.gen_range(0..raw.len()));
        }
        Ok(take(&raw, &idx, true))
    }
}

/// 7-channel voxel grid: occupancy plus per-voxel mean color and mean
/// (renormalized) normal. Normals of opposing surfaces may cancel to zero.
#[derive(Debug, Clone)]
pub struct VoxelGrid {
    pub spec: GridSpec,
    pub occupancy: Vec<bool>,
    pub color: Vec<[f32; 3]>,
    pub normal: Vec<[f32; 3]>,
    /// Points discarded for falling outside the grid domain.
    pub discarded: usize,
}

impl VoxelGrid {
    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|&&o| o).count()
    }

    pub fn occupied_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.occupancy
            .iter()
            .enumerate()
            .filter_map(|(i, &o)| o.then_some(i))
    }
}

/// Bin a point cloud into the grid: occupancy 1 where any point lands,
/// color/normal averaged per voxel with the normal renormalized (left at
/// zero when opposing normals cancel).
pub fn voxelize(cloud: &PointCloud, spec: GridSpec) -> Result<VoxelGrid> {
    let n = spec.len();
    let mut occupancy = vec![false; n];
    let mut color = vec![[0.0f32; 3]; n];
    let mut normal = vec![[0.0f32; 3]; n];
    let mut counts = vec![0u32; n];
    let mut discarded = 0usize;
    for (i, p) in cloud.positions.iter().enumerate() {
        match spec.index_of(p) {
            Some(idx) => {
                let lin = spec.linear(idx);
                occupancy[lin] = true;
                counts[lin] += 1;
                for a in 0..3 {
                    color[lin][a] += cloud.colors[i][a];
                    normal[lin][a] += cloud.normals[i][a] as f32;
                }
            }
            None => discarded += 1,
        }
    }
    if cloud.len() > 0 && discarded == cloud.len() {
        return Err(Error::AllPointsOutOfBounds);
    }
    for lin in 0..n {
        if counts[lin] > 0 {
            let k = counts[lin] as f32;
            for a in 0..3 {
                color[lin][a] /= k;
                normal[lin][a] /= k;
            }
            let len = (normal[lin][0] * normal[lin][0]
                + normal[lin][1] * normal[lin][1]
                + normal[lin][2] * normal[lin][2])
                .sqrt();
            if len > 1e-6 {
                for a in 0..3 {
                    normal[lin][a] /= len;
                }
            } else {
                normal[lin] = [0.0; 3];
            }
        }
    }
    Ok(VoxelGrid {
        spec,
        occupancy,
        color,
        normal,
        discarded,
    })
}

/// Write a point cloud as binary little-endian PLY
/// (x,y,z,red,green,blue,nx,ny,nz).
pub fn write_ply(cloud: &PointCloud, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(
        out,
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\n\
         property float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\n\
         property float nx\nproperty float ny\nproperty float nz\n\
         end_header\n",
        cloud.len()
    )?;
    for i in 0..cloud.len() {
        let p = cloud.positions[i];
        for v in [p.x as f32, p.y as f32, p.z as f32] {
            out.write_all(&v.to_le_bytes())?;
        }
        for c in cloud.colors[i] {
            out.write_all(&[(c.clamp(0.0, 1.0) * 255.0).round() as u8])?;
        }
        let n = cloud.normals[i];
        for v in [n.x as f32, n.y as f32, n.z as f32] {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{box_mesh, ArticulatedModel, Link};
    use approx::assert_relative_eq;

    fn single_quad_model(z: f64, half: f64) -> ArticulatedModel {
        // Two triangles forming a square in the plane z = const.
        let mesh = crate::model::TriMesh {
            vertices: vec![
                Point3::new(-half, -half, z),
                Point3::new(half, -half, z),
                Point3::new(half, half, z),
                Point3::new(-half, half, z),
            ],
            triangles: vec![[0, 1, 2], [0, 2, 3]],
            colors: None,
        };
        ArticulatedModel::new(vec![Link { name: "quad".into(), mesh }], vec![]).unwrap()
    }

    #[test]
    fn rig_has_five_cameras_aimed_at_origin() {
        let rig = default_rig();
        assert_eq!(rig.len(), 5);
        assert_relative_eq!(rig[0].view_dir(), Vector3::new(0.0, 0.0, -1.0), epsilon = 1e-9);
        for cam in &rig {
            // Looking at the origin: view direction is -eye normalized.
            let expect = -cam.pose.translation.normalize();
            assert_relative_eq!(cam.view_dir(), expect, epsilon = 1e-9);
        }
        // Side cameras 90 degrees apart in azimuth.
        for k in 1..4 {
            let a = rig[k].pose.translation;
            let b = rig[k + 1].pose.translation;
            let az_a = a.y.atan2(a.x);
            let az_b = b.y.atan2(b.x);
            let diff = (az_b - az_a).rem_euclid(std::f64::consts::TAU);
            assert_relative_eq!(diff, std::f64::consts::FRAC_PI_2, epsilon = 1e-9);
        }
    }

    #[test]
    fn empty_scene_renders_all_invalid() {
        let model = ArticulatedModel::new(
            vec![Link { name: "empty".into(), mesh: Default::default() }],
            vec![],
        )
        .unwrap();
        let cam = Camera::look_at(
            Point3::new(0.0, 0.0, 2.0),
            Point3::origin(),
            Vector3::new(1.0, 0.0, 0.0),
            60.0,
            16,
            16,
        );
        let img = render_depth(
            &model,
            &JointState::zeros(0),
            &Pose::identity(),
            &cam,
            &RenderOptions::default(),
        )
        .unwrap();
        assert!(img.samples.iter().all(|s| s.is_none()));
    }

    #[test]
    fn center_pixel_depth_matches_distance() {
        // Odd resolution puts one pixel exactly on the optical axis.
        let d = 1.7;
        let model = single_quad_model(0.0, 0.6);
        let cam = Camera::look_at(
            Point3::new(0.0, 0.0, d),
            Point3::origin(),
            Vector3::new(1.0, 0.0, 0.0),
            60.0,
            65,
            65,
        );
        let img = render_depth(
            &model,
            &JointState::zeros(0),
            &Pose::identity(),
            &cam,
            &RenderOptions::default(),
        )
        .unwrap();
        let center = img.samples[32 * 65 + 32].expect("center hit");
        assert_relative_eq!(center.range, d, epsilon = 1e-9);
        assert_eq!(center.link, 0);
        // Normal faces the camera.
        assert!(center.normal.dot(&cam.view_dir()) < 0.0);
    }

    #[test]
    fn nearer_surface_occludes() {
        let near = single_quad_model(0.5, 0.6);
        let far = single_quad_model(-0.5, 0.6);
        let mut links = near.links.clone();
        links.push(Link { name: "far".into(), mesh: far.links[0].mesh.clone() });
        let links = vec![
            Link { name: "near".into(), mesh: links[0].mesh.clone() },
            Link { name: "far".into(), mesh: links[1].mesh.clone() },
        ];
        // Attach via fixed joint so it is a valid tree.
        let joint = crate::model::JointSpec {
            name: "weld".into(),
            kind: crate::model::JointKind::Fixed,
            axis: crate::model::unit(1.0, 0.0, 0.0),
            origin: Pose::identity(),
            limits: [0.0, 0.0],
            parent: 0,
            child: 1,
        };
        let model = ArticulatedModel::new(links, vec![joint]).unwrap();
        let cam = Camera::look_at(
            Point3::new(0.0, 0.0, 2.0),
            Point3::origin(),
            Vector3::new(1.0, 0.0, 0.0),
            40.0,
            33,
            33,
        );
        let img = render_depth(
            &model,
            &JointState::zeros(1),
            &Pose::identity(),
            &cam,
            &RenderOptions::default(),
        )
        .unwrap();
        for s in img.samples.iter().flatten() {
            assert_eq!(s.link, 0, "far plane visible through near plane");
        }
    }

    #[test]
    fn reprojection_lands_on_source_pixel() {
        let model = single_quad_model(0.0, 0.8);
        let cam = Camera::look_at(
            Point3::new(0.4, -0.3, 2.0),
            Point3::origin(),
            Vector3::new(0.0, 1.0, 0.0),
            55.0,
            64,
            48,
        );
        let img = render_depth(
            &model,
            &JointState::zeros(0),
            &Pose::identity(),
            &cam,
            &RenderOptions::default(),
        )
        .unwrap();
        let mut checked = 0;
        for row in 0..cam.height {
            for col in 0..cam.width {
                if let Some(s) = img.samples[row * cam.width + col] {
                    let p = cam.pixel_ray(col, row).at(s.range);
                    let (pc, pr) = cam.project(&p).unwrap();
                    assert!((pc - col as f64).abs() < 0.5, "col {col} got {pc}");
                    assert!((pr - row as f64).abs() < 0.5, "row {row} got {pr}");
                    checked += 1;
                }
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn fps_on_a_line_picks_endpoints_first() {
        let points: Vec<Point3<f64>> = (0..101)
            .map(|i| Point3::new(i as f64 / 100.0, 0.0, 0.0))
            .collect();
        let idx = farthest_point_indices(&points, 3);
        // Farthest from centroid is an endpoint, then the other endpoint.
        assert!(idx[0] == 0 || idx[0] == 100);
        assert_eq!(idx[1], if idx[0] == 0 { 100 } else { 0 });
        // Third pick is the midpoint by the max-min rule.
        assert_eq!(idx[2], 50);
    }

    #[test]
    fn fps_brute_force_oracle_small() {
        // Greedy FPS: each selected point must realize the maximum of the
        // current min-distance map. Check against a direct recomputation.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let points: Vec<Point3<f64>> = (0..40)
            .map(|_| Point3::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()))
            .collect();
        let idx = farthest_point_indices(&points, 10);
        for k in 1..idx.len() {
            let chosen = &points[idx[k]];
            let chosen_min = idx[..k]
                .iter()
                .map(|&j| (points[j] - chosen).norm())
                .fold(f64::INFINITY, f64::min);
            for (i, p) in points.iter().enumerate() {
                let min_d = idx[..k]
                    .iter()
                    .map(|&j| (points[j] - p).norm())
                    .fold(f64::INFINITY, f64::min);
                assert!(
                    min_d <= chosen_min + 1e-12,
                    "point {i} was farther than pick {k}"
                );
            }
        }
    }

    #[test]
    fn fps_identity_when_count_equals_len() {
        let points = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ];
        let mut idx = farthest_point_indices(&points, 3);
        idx.sort_unstable();
        assert_eq!(idx, vec![0, 1, 2]);
    }

    #[test]
    fn fusion_returns_exactly_target_points_from_input_set() {
        let model = single_quad_model(0.0, 0.9);
        let rig = default_rig();
        let images: Vec<DepthImage> = rig
            .iter()
            .map(|cam| {
                render_depth(
                    &model,
                    &JointState::zeros(0),
                    &Pose::identity(),
                    cam,
                    &RenderOptions::default(),
                )
                .unwrap()
            })
            .collect();
        let cloud = fuse_and_sample(&images, 0).unwrap();
        assert_eq!(cloud.len(), OBSERVATION_POINTS);
        assert!(!cloud.padded);
        // Every sampled point back-projects from some pixel: all must lie on
        // the quad plane z = 0.
        for p in &cloud.positions {
            assert!(p.z.abs() < 1e-9);
        }
    }

    #[test]
    fn fusion_multiset_is_camera_order_invariant() {
        let model = single_quad_model(0.0, 0.9);
        let rig = default_rig();
        let render = |cam: &Camera| {
            render_depth(
                &model,
                &JointState::zeros(0),
                &Pose::identity(),
                cam,
                &RenderOptions::default(),
            )
            .unwrap()
        };
        let fwd: Vec<DepthImage> = rig.iter().map(render).collect();
        let rev: Vec<DepthImage> = rig.iter().rev().map(render).collect();
        let key = |p: &Point3<f64>| {
            (
                (p.x * 1e12).round() as i64,
                (p.y * 1e12).round() as i64,
                (p.z * 1e12).round() as i64,
            )
        };
        let collect = |imgs: &[DepthImage]| {
            let mut raw: Vec<_> = Vec::new();
            for img in imgs {
                for row in 0..img.camera.height {
                    for col in 0..img.camera.width {
                        if let Some(s) = img.samples[row * img.camera.width + col] {
                            raw.push(key(&img.camera.pixel_ray(col, row).at(s.range)));
                        }
                    }
                }
            }
            raw.sort_unstable();
            raw
        };
        assert_eq!(collect(&fwd), collect(&rev));
    }

    #[test]
    fn padding_flags_small_observations() {
        let model = single_quad_model(0.0, 0.05);
        let cam = Camera::look_at(
            Point3::new(0.0, 0.0, 3.0),
            Point3::origin(),
            Vector3::new(1.0, 0.0, 0.0),
            60.0,
            16,
            16,
        );
        let img = render_depth(
            &model,
            &JointState::zeros(0),
            &Pose::identity(),
            &cam,
            &RenderOptions::default(),
        )
        .unwrap();
        let cloud = fuse_and_sample(&[img], 3).unwrap();
        assert_eq!(cloud.len(), OBSERVATION_POINTS);
        assert!(cloud.padded);
    }

    #[test]
    fn voxelize_counts_and_averages() {
        let spec = GridSpec::canonical();
        let mut cloud = PointCloud::default();
        let center = spec.center([48, 48, 48]);
        // Two points in one voxel with opposing normals.
        for s in [1.0, -1.0] {
            cloud.positions.push(center);
            cloud.colors.push([0.25, 0.5, 0.75]);
            cloud.normals.push(Vector3::new(0.0, 0.0, s));
            cloud.link_ids.push(0);
        }
        // One point out of bounds.
        cloud.positions.push(Point3::new(5.0, 0.0, 0.0));
        cloud.colors.push([1.0, 0.0, 0.0]);
        cloud.normals.push(Vector3::new(1.0, 0.0, 0.0));
        cloud.link_ids.push(0);
        let grid = voxelize(&cloud, spec).unwrap();
        assert_eq!(grid.occupied_count(), 1);
        assert_eq!(grid.discarded, 1);
        let lin = spec.linear([48, 48, 48]);
        assert_eq!(grid.color[lin], [0.25, 0.5, 0.75]);
        assert_eq!(grid.normal[lin], [0.0; 3]);
    }

    #[test]
    fn voxelize_all_out_of_bounds_errors() {
        let spec = GridSpec::canonical();
        let mut cloud = PointCloud::default();
        cloud.positions.push(Point3::new(9.0, 9.0, 9.0));
        cloud.colors.push([0.0; 3]);
        cloud.normals.push(Vector3::new(1.0, 0.0, 0.0));
        cloud.link_ids.push(0);
        assert!(matches!(
            voxelize(&cloud, spec).unwrap_err(),
            Error::AllPointsOutOfBounds
        ));
    }

    #[test]
    fn voxel_shift_by_one_cell() {
        let spec = GridSpec::canonical();
        let h = spec.voxel_size().x;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut cloud = PointCloud::default();
        for _ in 0..500 {
            cloud
                .positions
                .push(Point3::new(rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9)));
            cloud.colors.push([0.5; 3]);
            cloud.normals.push(Vector3::new(0.0, 0.0, 1.0));
            cloud.link_ids.push(0);
        }
        let g0 = voxelize(&cloud, spec).unwrap();
        let mut shifted = cloud.clone();
        for p in &mut shifted.positions {
            p.x += h;
        }
        let g1 = voxelize(&shifted, spec).unwrap();
        for idx in spec.iter_indices() {
            if idx[0] + 1 < spec.dims[0] {
                let a = g0.occupancy[spec.linear(idx)];
                let b = g1.occupancy[spec.linear([idx[0] + 1, idx[1], idx[2]])];
                assert_eq!(a, b);
            }
        }
    }
}
