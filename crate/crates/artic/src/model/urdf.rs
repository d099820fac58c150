//! Parser and writer for the robot-description subset the pipeline consumes:
//! `link/visual/geometry/mesh` and `joint` with type, origin, axis, and
//! limits. Visual origins and mesh scales are baked into link vertices at
//! parse time, so a parsed model carries geometry directly in link frames.
//!
//! Unsupported elements are skipped and reported in the returned warning
//! list rather than rejected; `continuous` joints are mapped to revolute
//! with limits [-pi, pi].

use super::{ArticulatedModel, JointKind, JointSpec, Link, Pose, TriMesh};
use crate::error::{Error, Result};
use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use std::io::Write;
use std::path::Path;

fn parse_triple(s: &str) -> Option<Vector3<f64>> {
    let mut it = s.split_whitespace().map(|t| t.parse::<f64>());
    match (it.next(), it.next(), it.next()) {
        (Some(Ok(x)), Some(Ok(y)), Some(Ok(z))) => Some(Vector3::new(x, y, z)),
        _ => None,
    }
}

fn parse_origin(node: roxmltree::Node) -> Pose {
    let xyz = node
        .attribute("xyz")
        .and_then(parse_triple)
        .unwrap_or_else(Vector3::zeros);
    let rpy = node
        .attribute("rpy")
        .and_then(parse_triple)
        .unwrap_or_else(Vector3::zeros);
    let rot = Rotation3::from_euler_angles(rpy.x, rpy.y, rpy.z);
    Pose::new(*rot.matrix(), xyz)
}

const KNOWN_LINK_CHILDREN: &[&str] = &["visual"];
const KNOWN_VISUAL_CHILDREN: &[&str] = &["origin", "geometry"];
const KNOWN_JOINT_CHILDREN: &[&str] = &["origin", "parent", "child", "axis", "limit"];

/// Parse a description document. Mesh file references are resolved relative
/// to `mesh_root`. Returns the validated model and a list of warnings for
/// skipped or coerced content.
pub fn parse_urdf(text: &str, mesh_root: &Path) -> Result<(ArticulatedModel, Vec<String>)> {
    let doc = roxmltree::Document::parse(text).map_err(|e| Error::MalformedXml(e.to_string()))?;
    let robot = doc.root_element();
    if robot.tag_name().name() != "robot" {
        return Err(Error::MalformedXml(format!(
            "expected <robot> root, found <{}>",
            robot.tag_name().name()
        )));
    }
    let mut warnings = Vec::new();
    let mut links: Vec<Link> = Vec::new();
    let mut joints_raw: Vec<(String, JointKind, Pose, Vector3<f64>, [f64; 2], String, String)> =
        Vec::new();

    for node in robot.children().filter(|n| n.is_element()) {
        match node.tag_name().name() {
            "link" => {
                let name = node
                    .attribute("name")
                    .ok_or_else(|| Error::MalformedXml("link without name".into()))?
                    .to_string();
                let mut mesh = TriMesh::default();
                for child in node.children().filter(|n| n.is_element()) {
                    let tag = child.tag_name().name();
                    if tag == "visual" {
                        let origin = child
                            .children()
                            .find(|n| n.has_tag_name("origin"))
                            .map(parse_origin)
                            .unwrap_or_else(Pose::identity);
                        let Some(geom) = child.children().find(|n| n.has_tag_name("geometry"))
                        else {
                            warnings.push(format!("link {name}: visual without geometry"));
                            continue;
                        };
                        for shape in geom.children().filter(|n| n.is_element()) {
                            if shape.has_tag_name("mesh") {
                                let Some(fname) = shape.attribute("filename") else {
                                    warnings
                                        .push(format!("link {name}: mesh without filename"));
                                    continue;
                                };
                                let mut part = super::read_obj(&mesh_root.join(fname))?;
                                if let Some(scale) =
                                    shape.attribute("scale").and_then(parse_triple)
                                {
                                    for v in &mut part.vertices {
                                        v.x *= scale.x;
                                        v.y *= scale.y;
                                        v.z *= scale.z;
                                    }
                                }
                                mesh.merge(&part.transformed(&origin));
                            } else {
                                warnings.push(format!(
                                    "link {name}: skipping unsupported geometry <{}>",
                                    shape.tag_name().name()
                                ));
                            }
                        }
                        for sub in child.children().filter(|n| n.is_element()) {
                            if !KNOWN_VISUAL_CHILDREN.contains(&sub.tag_name().name()) {
                                warnings.push(format!(
                                    "link {name}: skipping <{}> in visual",
                                    sub.tag_name().name()
                                ));
                            }
                        }
                    } else if !KNOWN_LINK_CHILDREN.contains(&tag) {
                        warnings.push(format!("link {name}: skipping <{tag}>"));
                    }
                }
                links.push(Link { name, mesh });
            }
            "joint" => {
                let name = node
                    .attribute("name")
                    .ok_or_else(|| Error::MalformedXml("joint without name".into()))?
                    .to_string();
                let type_str = node.attribute("type").unwrap_or("");
                let kind = match type_str {
                    "revolute" => JointKind::Revolute,
                    "prismatic" => JointKind::Prismatic,
                    "fixed" => JointKind::Fixed,
                    "continuous" => {
                        warnings.push(format!(
                            "joint {name}: continuous mapped to revolute with limits [-pi, pi]"
                        ));
                        JointKind::Revolute
                    }
                    other => return Err(Error::UnsupportedJointType(other.to_string())),
                };
                let origin = node
                    .children()
                    .find(|n| n.has_tag_name("origin"))
                    .map(parse_origin)
                    .unwrap_or_else(Pose::identity);
                // Axis defaults to (1,0,0) per convention.
                let axis = node
                    .children()
                    .find(|n| n.has_tag_name("axis"))
                    .and_then(|n| n.attribute("xyz"))
                    .and_then(parse_triple)
                    .unwrap_or_else(|| Vector3::new(1.0, 0.0, 0.0));
                let limits = if type_str == "continuous" {
                    [-std::f64::consts::PI, std::f64::consts::PI]
                } else if kind == JointKind::Fixed {
                    [0.0, 0.0]
                } else {
                    let limit = node.children().find(|n| n.has_tag_name("limit"));
                    let get = |attr: &str| {
                        limit
                            .and_then(|n| n.attribute(attr))
                            .and_then(|s| s.parse::<f64>().ok())
                    };
                    match (get("lower"), get("upper")) {
                        (Some(lo), Some(hi)) => [lo, hi],
                        _ => {
                            warnings.push(format!("joint {name}: missing limits, using [0, 0]"));
                            [0.0, 0.0]
                        }
                    }
                };
                let get_link = |tag: &str| -> Result<String> {
                    node.children()
                        .find(|n| n.has_tag_name(tag))
                        .and_then(|n| n.attribute("link"))
                        .map(str::to_string)
                        .ok_or_else(|| Error::MalformedXml(format!("joint {name}: missing {tag}")))
                };
                let parent = get_link("parent")?;
                let child = get_link("child")?;
                for sub in node.children().filter(|n| n.is_element()) {
                    if !KNOWN_JOINT_CHILDREN.contains(&sub.tag_name().name()) {
                        warnings.push(format!(
                            "joint {name}: skipping <{}>",
                            sub.tag_name().name()
                        ));
                    }
                }
                joints_raw.push((name, kind, origin, axis, limits, parent, child));
            }
            other => warnings.push(format!("skipping <{other}> in robot")),
        }
    }

    let index_of = |name: &str| -> Result<usize> {
        links
            .iter()
            .position(|l| l.name == name)
            .ok_or_else(|| Error::MalformedXml(format!("joint references unknown link {name}")))
    };
    let mut joints = Vec::with_capacity(joints_raw.len());
    for (name, kind, origin, axis, limits, parent, child) in joints_raw {
        if axis.norm() < 1e-12 {
            return Err(Error::MalformedXml(format!("joint {name}: zero axis")));
        }
        joints.push(JointSpec {
            parent: index_of(&parent)?,
            child: index_of(&child)?,
            name,
            kind,
            axis: Unit::new_normalize(axis),
            origin,
            limits,
        });
    }
    let model = ArticulatedModel::new(links, joints)?;
    Ok((model, warnings))
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Write `model` as a description document at `urdf_path`, with one OBJ per
/// link in the sibling directory `mesh_subdir`, referenced by relative path.
/// The emitted document re-parses to a model equal to the input.
pub fn write_urdf(model: &ArticulatedModel, urdf_path: &Path, mesh_subdir: &str) -> Result<()> {
    let parent = urdf_path.parent().unwrap_or_else(|| Path::new("."));
    let mesh_dir = parent.join(mesh_subdir);
    std::fs::create_dir_all(&mesh_dir)?;

    let robot_name = urdf_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("object");
    let mut out = std::io::BufWriter::new(std::fs::File::create(urdf_path)?);
    writeln!(out, "<?xml version=\"1.0\"?>")?;
    writeln!(out, "<robot name=\"{}\">", xml_escape(robot_name))?;
    for link in &model.links {
        let fname = format!("{}/{}.obj", mesh_subdir, link.name);
        super::write_obj(&link.mesh, &parent.join(&fname))?;
        writeln!(out, "  <link name=\"{}\">", xml_escape(&link.name))?;
        writeln!(out, "    <visual>")?;
        writeln!(out, "      <geometry>")?;
        writeln!(out, "        <mesh filename=\"{}\"/>", xml_escape(&fname))?;
        writeln!(out, "      </geometry>")?;
        writeln!(out, "    </visual>")?;
        writeln!(out, "  </link>")?;
    }
    for j in &model.joints {
        let rot = Rotation3::from_matrix_unchecked(j.origin.rotation);
        let (r, p, y) = rot.euler_angles();
        writeln!(
            out,
            "  <joint name=\"{}\" type=\"{}\">",
            xml_escape(&j.name),
            j.kind.as_str()
        )?;
        writeln!(
            out,
            "    <origin xyz=\"{} {} {}\" rpy=\"{} {} {}\"/>",
            j.origin.translation.x, j.origin.translation.y, j.origin.translation.z, r, p, y
        )?;
        writeln!(out, "    <parent link=\"{}\"/>", xml_escape(&model.links[j.parent].name))?;
        writeln!(out, "    <child link=\"{}\"/>", xml_escape(&model.links[j.child].name))?;
        writeln!(out, "    <axis xyz=\"{} {} {}\"/>", j.axis.x, j.axis.y, j.axis.z)?;
        if j.kind != JointKind::Fixed {
            writeln!(
                out,
                "    <limit lower=\"{}\" upper=\"{}\"/>",
                j.limits[0], j.limits[1]
            )?;
        }
        writeln!(out, "  </joint>")?;
    }
    writeln!(out, "</robot>")?;
    Ok(())
}

#[allow(dead_code)]
fn rotation_roundtrip_check(m: &Matrix3<f64>) -> f64 {
    let rot = Rotation3::from_matrix_unchecked(*m);
    let (r, p, y) = rot.euler_angles();
    (Rotation3::from_euler_angles(r, p, y).matrix() - m).norm()
}
