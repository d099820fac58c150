//! Articulated object representation: kinematic tree of mesh links connected
//! by revolute/prismatic/fixed joints, forward kinematics, and normalization
//! into the canonical two-unit cube.
//!
//! A model is immutable after construction; every operation here is a pure
//! function from model + joint state to derived data.

mod obj;
mod urdf;

pub use obj::{read_obj, write_obj};
pub use urdf::{parse_urdf, write_urdf};

use crate::error::{Error, Result};
use nalgebra::{Matrix3, Point3, Rotation3, Unit, UnitVector3, Vector3};
use std::collections::HashMap;

/// Rigid transform: orthonormal rotation plus translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self::new(Matrix3::identity(), t)
    }

    /// Rotation by `angle` about `axis` passing through `point`.
    pub fn rotation_about_line(
        axis: &UnitVector3<f64>,
        point: &Point3<f64>,
        angle: f64,
    ) -> Self {
        let r = Rotation3::from_axis_angle(axis, angle);
        let rm = *r.matrix();
        let t = point.coords - rm * point.coords;
        Self::new(rm, t)
    }

    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn compose(&self, rhs: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * rhs.rotation,
            translation: self.rotation * rhs.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Check the rotation is special orthogonal within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        let gram = self.rotation.transpose() * self.rotation;
        (gram - Matrix3::identity()).norm() <= tol * 3.0
            && (self.rotation.determinant() - 1.0).abs() <= tol
    }
}

impl std::ops::Mul for Pose {
    type Output = Pose;
    fn mul(self, rhs: Pose) -> Pose {
        self.compose(&rhs)
    }
}

/// Joint kind of the supported description subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Revolute,
    Prismatic,
    Fixed,
}

impl JointKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            JointKind::Revolute => "revolute",
            JointKind::Prismatic => "prismatic",
            JointKind::Fixed => "fixed",
        }
    }
}

/// One joint connecting a parent link to a child link.
#[derive(Debug, Clone)]
pub struct JointSpec {
    pub name: String,
    pub kind: JointKind,
    /// Motion axis in the joint frame, unit length.
    pub axis: UnitVector3<f64>,
    /// Joint frame expressed in the parent link frame.
    pub origin: Pose,
    /// [lo, hi]; radians for revolute, scene units for prismatic.
    pub limits: [f64; 2],
    pub parent: usize,
    pub child: usize,
}

impl JointSpec {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.limits[0] + self.limits[1])
    }

    pub fn range(&self) -> f64 {
        self.limits[1] - self.limits[0]
    }

    /// Transform contributed by the joint value `q` in the joint frame.
    pub fn motion(&self, q: f64) -> Pose {
        match self.kind {
            JointKind::Revolute => Pose::new(
                *Rotation3::from_axis_angle(&self.axis, q).matrix(),
                Vector3::zeros(),
            ),
            JointKind::Prismatic => Pose::from_translation(self.axis.into_inner() * q),
            JointKind::Fixed => Pose::identity(),
        }
    }
}

/// Indexed triangle mesh with optional per-vertex color.
#[derive(Debug, Clone, Default)]
pub struct TriMesh {
    pub vertices: Vec<Point3<f64>>,
    pub triangles: Vec<[u32; 3]>,
    /// RGB in [0,1], one entry per vertex when present.
    pub colors: Option<Vec<[f32; 3]>>,
}

impl TriMesh {
    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len() as u32;
        for t in &self.triangles {
            if t[0] >= n || t[1] >= n || t[2] >= n {
                return Err(Error::DegenerateGeometry(format!(
                    "triangle index out of range: {t:?} with {n} vertices"
                )));
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::DegenerateGeometry(format!(
                    "degenerate triangle with repeated indices: {t:?}"
                )));
            }
        }
        if let Some(c) = &self.colors {
            if c.len() != self.vertices.len() {
                return Err(Error::DegenerateGeometry(
                    "color count does not match vertex count".into(),
                ));
            }
        }
        Ok(())
    }

    /// Append another mesh, remapping its indices.
    pub fn merge(&mut self, other: &TriMesh) {
        let base = self.vertices.len() as u32;
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles
            .extend(other.triangles.iter().map(|t| [t[0] + base, t[1] + base, t[2] + base]));
        match (&mut self.colors, &other.colors) {
            (Some(mine), Some(theirs)) => mine.extend_from_slice(theirs),
            (Some(mine), None) => mine.extend(std::iter::repeat([0.5; 3]).take(other.vertices.len())),
            (None, Some(theirs)) => {
                let mut c = vec![[0.5; 3]; self.vertices.len() - other.vertices.len()];
                c.extend_from_slice(theirs);
                self.colors = Some(c);
            }
            (None, None) => {}
        }
    }

    pub fn transformed(&self, pose: &Pose) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(|v| pose.apply(v)).collect(),
            triangles: self.triangles.clone(),
            colors: self.colors.clone(),
        }
    }

    /// Axis-aligned bounds, `None` for an empty mesh.
    pub fn aabb(&self) -> Option<(Point3<f64>, Point3<f64>)> {
        let first = *self.vertices.first()?;
        let mut lo = first;
        let mut hi = first;
        for v in &self.vertices {
            for a in 0..3 {
                lo[a] = lo[a].min(v[a]);
                hi[a] = hi[a].max(v[a]);
            }
        }
        Some((lo, hi))
    }
}

/// Named link.
#[derive(Debug, Clone)]
pub struct Link {
    pub name: String,
    pub mesh: TriMesh,
}

/// Per-joint configuration vector.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState(pub Vec<f64>);

impl JointState {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }
}

/// Kinematic tree of links and joints.
///
/// `joints` are stored in an order where every parent link appears before its
/// children (enforced by [`ArticulatedModel::validate`]), so forward
/// kinematics is a single pass.
#[derive(Debug, Clone)]
pub struct ArticulatedModel {
    pub links: Vec<Link>,
    pub joints: Vec<JointSpec>,
    pub root: usize,
}

impl ArticulatedModel {
    /// Build and validate. Joints are re-sorted into topological order.
    pub fn new(links: Vec<Link>, joints: Vec<JointSpec>) -> Result<Self> {
        let n = links.len();
        if n == 0 {
            return Err(Error::EmptyGeometry);
        }
        let mut parent_of: Vec<Option<usize>> = vec![None; n];
        for j in &joints {
            if j.parent >= n || j.child >= n {
                return Err(Error::CyclicKinematics(format!(
                    "joint {} references a missing link",
                    j.name
                )));
            }
            if j.parent == j.child {
                return Err(Error::CyclicKinematics(format!(
                    "joint {} connects link to itself",
                    j.name
                )));
            }
            if j.limits[0] > j.limits[1] {
                return Err(Error::InvalidConfig(format!(
                    "joint {} has lo > hi",
                    j.name
                )));
            }
            if parent_of[j.child].is_some() {
                return Err(Error::CyclicKinematics(format!(
                    "link {} is the child of two joints",
                    links[j.child].name
                )));
            }
            parent_of[j.child] = Some(j.parent);
        }
        let roots: Vec<usize> = (0..n).filter(|&i| parent_of[i].is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::CyclicKinematics(format!(
                "expected exactly one root link, found {}",
                roots.len()
            )));
        }
        let root = roots[0];
        // Reachability check also rejects cycles among non-root links.
        let mut order = vec![root];
        let mut joints = joints;
        let mut sorted: Vec<JointSpec> = Vec::with_capacity(joints.len());
        while let Some(&link) = order.last() {
            order.pop();
            let mut children: Vec<usize> = Vec::new();
            joints.retain(|j| {
                if j.parent == link {
                    sorted.push(j.clone());
                    children.push(j.child);
                    false
                } else {
                    true
                }
            });
            order.extend(children.into_iter().rev());
        }
        if !joints.is_empty() {
            return Err(Error::CyclicKinematics(
                "joint subgraph not reachable from root".into(),
            ));
        }
        let model = Self {
            links,
            joints: sorted,
            root,
        };
        for l in &model.links {
            l.mesh.validate()?;
        }
        Ok(model)
    }

    pub fn link_index(&self, name: &str) -> Option<usize> {
        self.links.iter().position(|l| l.name == name)
    }

    /// Joint whose child is `link`, if any.
    pub fn joint_above(&self, link: usize) -> Option<usize> {
        self.joints.iter().position(|j| j.child == link)
    }

    /// Links in the subtree hanging off `joint`'s child, child included.
    pub fn subtree_links(&self, joint: usize) -> Vec<usize> {
        let mut out = vec![self.joints[joint].child];
        let mut i = 0;
        while i < out.len() {
            let link = out[i];
            out.extend(self.joints.iter().filter(|j| j.parent == link).map(|j| j.child));
            i += 1;
        }
        out
    }

    pub fn midpoint_state(&self) -> JointState {
        JointState(self.joints.iter().map(|j| j.midpoint()).collect())
    }

    fn check_state(&self, q: &JointState) -> Result<()> {
        if q.0.len() != self.joints.len() {
            return Err(Error::MisalignedInputs(format!(
                "state has {} values for {} joints",
                q.0.len(),
                self.joints.len()
            )));
        }
        for (i, (j, &v)) in self.joints.iter().zip(&q.0).enumerate() {
            let slack = 1e-9 + 1e-9 * j.range().abs();
            if v < j.limits[0] - slack || v > j.limits[1] + slack {
                return Err(Error::JointStateOutOfRange {
                    joint: i,
                    value: v,
                    lo: j.limits[0],
                    hi: j.limits[1],
                });
            }
        }
        Ok(())
    }
}

/// Pose of every link for the given joint state; root pose is the identity.
pub fn forward_kinematics(model: &ArticulatedModel, q: &JointState) -> Result<Vec<Pose>> {
    model.check_state(q)?;
    let mut poses = vec![Pose::identity(); model.links.len()];
    for (i, j) in model.joints.iter().enumerate() {
        poses[j.child] = poses[j.parent].compose(&j.origin).compose(&j.motion(q.0[i]));
    }
    Ok(poses)
}

/// Uniformly scale and recenter a model so its bounding box at the canonical
/// joint state (all joints at limit midpoints) has maximum side exactly 2.
///
/// Scales vertices, joint-origin translations, and prismatic limits; revolute
/// limits are untouched. Returns the scaled model and the scale factor.
pub fn normalize_to_cube(model: &ArticulatedModel) -> Result<(ArticulatedModel, f64)> {
    let q = model.midpoint_state();
    let poses = forward_kinematics(model, &q)?;
    let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut any = false;
    for (link, pose) in model.links.iter().zip(&poses) {
        for v in &link.mesh.vertices {
            let w = pose.apply(v);
            for a in 0..3 {
                lo[a] = lo[a].min(w[a]);
                hi[a] = hi[a].max(w[a]);
            }
            any = true;
        }
    }
    if !any {
        return Err(Error::EmptyGeometry);
    }
    let extent = (hi - lo).amax();
    if extent <= 0.0 {
        return Err(Error::EmptyGeometry);
    }
    let scale = 2.0 / extent;
    let center = nalgebra::center(&lo, &hi).coords * scale;

    let mut out = model.clone();
    for (i, link) in out.links.iter_mut().enumerate() {
        for v in &mut link.mesh.vertices {
            v.coords *= scale;
            if i == out.root {
                v.coords -= center;
            }
        }
    }
    for j in &mut out.joints {
        j.origin.translation *= scale;
        if j.parent == out.root {
            j.origin.translation -= center;
        }
        if j.kind == JointKind::Prismatic {
            j.limits[0] *= scale;
            j.limits[1] *= scale;
        }
    }
    Ok((out, scale))
}

/// Merge every fixed-joint child into its parent link (geometry transformed
/// by the joint origin). Used when ingesting descriptions that model one
/// semantic part as several rigidly attached links.
pub fn collapse_fixed_joints(model: &ArticulatedModel) -> Result<ArticulatedModel> {
    if model.joints.iter().all(|j| j.kind != JointKind::Fixed) {
        return Ok(model.clone());
    }
    // Absorb child geometry top-down; `model.joints` is already topo-sorted,
    // so a fixed chain collapses fully in one pass.
    let mut meshes: Vec<TriMesh> = model.links.iter().map(|l| l.mesh.clone()).collect();
    // target[i]: surviving link index + accumulated transform into it.
    let mut target: Vec<(usize, Pose)> = (0..model.links.len())
        .map(|i| (i, Pose::identity()))
        .collect();
    for j in &model.joints {
        if j.kind == JointKind::Fixed {
            let (host, host_pose) = target[j.parent];
            let into_host = host_pose.compose(&j.origin);
            let moved = meshes[j.child].transformed(&into_host);
            meshes[host].merge(&moved);
            target[j.child] = (host, into_host);
        }
    }
    let keep: Vec<usize> = (0..model.links.len())
        .filter(|&i| target[i].0 == i)
        .collect();
    let remap: HashMap<usize, usize> = keep.iter().enumerate().map(|(n, &i)| (i, n)).collect();
    let links: Vec<Link> = keep
        .iter()
        .map(|&i| Link {
            name: model.links[i].name.clone(),
            mesh: std::mem::take(&mut meshes[i]),
        })
        .collect();
    let joints: Vec<JointSpec> = model
        .joints
        .iter()
        .filter(|j| j.kind != JointKind::Fixed)
        .map(|j| {
            let (host, host_pose) = target[j.parent];
            let mut out = j.clone();
            out.parent = remap[&host];
            out.child = remap[&j.child];
            out.origin = host_pose.compose(&j.origin);
            out
        })
        .collect();
    ArticulatedModel::new(links, joints)
}

/// Axis-aligned box mesh helper used by fixtures and tests.
pub fn box_mesh(center: Point3<f64>, half_extents: Vector3<f64>) -> TriMesh {
    let c = center;
    let h = half_extents;
    let signs = [-1.0, 1.0];
    let mut vertices = Vec::with_capacity(8);
    for &sz in &signs {
        for &sy in &signs {
            for &sx in &signs {
                vertices.push(Point3::new(c.x + sx * h.x, c.y + sy * h.y, c.z + sz * h.z));
            }
        }
    }
    // Outward-facing CCW winding per face.
    let triangles = vec![
        [0, 2, 1],
        [1, 2, 3], // -z
        [4, 5, 6],
        [5, 7, 6], // +z
        [0, 1, 4],
        [1, 5, 4], // -y
        [2, 6, 3],
        [3, 6, 7], // +y
        [0, 4, 2],
        [2, 4, 6], // -x
        [1, 3, 5],
        [3, 7, 5], // +x
    ];
    TriMesh {
        vertices,
        triangles,
        colors: None,
    }
}

/// Unit axis helper.
pub fn unit(x: f64, y: f64, z: f64) -> UnitVector3<f64> {
    Unit::new_normalize(Vector3::new(x, y, z))
}
