//! Wavefront OBJ mesh IO: `v x y z [r g b]` vertices and 1-indexed `f` faces.
//! Faces with more than three indices are fan-triangulated.

use super::TriMesh;
use crate::error::{Error, Result};
use nalgebra::Point3;
use std::io::Write;
use std::path::Path;

pub fn read_obj(path: &Path) -> Result<TriMesh> {
    let text = std::fs::read_to_string(path)
        .map_err(|_| Error::MissingMeshFile(path.to_path_buf()))?;
    let mut mesh = TriMesh::default();
    let mut colors: Vec<[f32; 3]> = Vec::new();
    let mut any_color = false;
    for (lineno, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let nums: Vec<f64> = it.map_while(|t| t.parse().ok()).collect();
                if nums.len() < 3 {
                    return Err(Error::DegenerateGeometry(format!(
                        "{}:{}: vertex needs 3 coordinates",
                        path.display(),
                        lineno + 1
                    )));
                }
                mesh.vertices.push(Point3::new(nums[0], nums[1], nums[2]));
                if nums.len() >= 6 {
                    colors.push([nums[3] as f32, nums[4] as f32, nums[5] as f32]);
                    any_color = true;
                } else {
                    colors.push([0.5; 3]);
                }
            }
            Some("f") => {
                let idx: Vec<u32> = it
                    .map(|tok| {
                        let first = tok.split('/').next().unwrap_or("");
                        first.parse::<i64>().ok().and_then(|i| {
                            // OBJ allows negative (relative) indices.
                            let n = mesh.vertices.len() as i64;
                            let abs = if i < 0 { n + i } else { i - 1 };
                            (abs >= 0 && abs < n).then_some(abs as u32)
                        })
                    })
                    .collect::<Option<Vec<u32>>>()
                    .ok_or_else(|| {
                        Error::DegenerateGeometry(format!(
                            "{}:{}: bad face index",
                            path.display(),
                            lineno + 1
                        ))
                    })?;
                if idx.len() < 3 {
                    return Err(Error::DegenerateGeometry(format!(
                        "{}:{}: face needs 3+ indices",
                        path.display(),
                        lineno + 1
                    )));
                }
                for k in 1..idx.len() - 1 {
                    mesh.triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    if any_color {
        mesh.colors = Some(colors);
    }
    mesh.validate()?;
    Ok(mesh)
}

pub fn write_obj(mesh: &TriMesh, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for (i, v) in mesh.vertices.iter().enumerate() {
        match &mesh.colors {
            Some(c) => writeln!(
                out,
                "v {} {} {} {} {} {}",
                v.x, v.y, v.z, c[i][0], c[i][1], c[i][2]
            )?,
            None => writeln!(out, "v {} {} {}", v.x, v.y, v.z)?,
        }
    }
    for t in &mesh.triangles {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    #[test]
    fn obj_roundtrip_preserves_geometry() {
        let mesh = super::super::box_mesh(Point3::new(0.1, -0.2, 0.3), Vector3::new(0.5, 0.25, 1.0));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("box.obj");
        write_obj(&mesh, &path).unwrap();
        let back = read_obj(&path).unwrap();
        assert_eq!(back.vertices.len(), mesh.vertices.len());
        assert_eq!(back.triangles, mesh.triangles);
        for (a, b) in mesh.vertices.iter().zip(&back.vertices) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn obj_parses_slash_faces_and_quads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("quad.obj");
        std::fs::write(
            &path,
            "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1 2/2 3/3 4/4\n",
        )
        .unwrap();
        let mesh = read_obj(&path).unwrap();
        assert_eq!(mesh.triangles, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn missing_file_is_reported() {
        let err = read_obj(Path::new("/nonexistent/mesh.obj")).unwrap_err();
        assert!(matches!(err, Error::MissingMeshFile(_)));
    }
}
