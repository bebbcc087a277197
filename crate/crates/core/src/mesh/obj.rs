//! ASCII OBJ subset (`v x y z`, `f i j k`, 1-based) and sidecar index files.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::TriMesh;
use crate::error::{Error, Result};
use crate::geom::Vec3;

/// Parses OBJ text into raw vertex and face lists without validating the mesh.
pub fn parse_obj(text: &str, path: &Path) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    let malformed = |line: usize, msg: String| Error::Malformed {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut ignored = BTreeSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let tag = tokens.next().unwrap_or("");
        let rest: Vec<&str> = tokens.collect();
        match tag {
            "v" => {
                if rest.len() != 3 {
                    return Err(malformed(
                        lineno,
                        format!("vertex record needs 3 coordinates, found {}", rest.len()),
                    ));
                }
                let mut xyz = [0.0; 3];
                for (c, tok) in rest.iter().enumerate() {
                    xyz[c] = tok
                        .parse::<f64>()
                        .map_err(|e| malformed(lineno, format!("bad coordinate {tok:?}: {e}")))?;
                }
                vertices.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
            }
            "f" => {
                if rest.len() != 3 {
                    return Err(malformed(
                        lineno,
                        format!("only triangles are supported, found {} indices", rest.len()),
                    ));
                }
                let mut face = [0usize; 3];
                for (c, tok) in rest.iter().enumerate() {
                    // `i`, `i/t`, `i//n` and `i/t/n` all carry the position index first
                    let head = tok.split('/').next().unwrap_or("");
                    let one_based: usize = head
                        .parse()
                        .map_err(|_| malformed(lineno, format!("bad face index {tok:?}")))?;
                    if one_based == 0 {
                        return Err(malformed(lineno, "face index 0 (indices are 1-based)".into()));
                    }
                    face[c] = one_based - 1;
                }
                faces.push(face);
            }
            other => {
                ignored.insert(other.to_string());
            }
        }
    }
    for tag in ignored {
        log::warn!("{}: ignoring `{tag}` records", path.display());
    }
    Ok((vertices, faces))
}

/// Loads and validates an OBJ triangle mesh. Vertex order follows the file.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (vertices, faces) = parse_obj(&text, path)?;
    TriMesh::new(vertices, faces)
}

/// Formats vertices and faces as OBJ text.
///
/// Coordinates use the shortest representation that round-trips exactly.
pub fn write_obj(vertices: &[Vec3], faces: &[[usize; 3]]) -> String {
    let mut out = String::with_capacity(32 * (vertices.len() + faces.len()));
    for v in vertices {
        let _ = writeln!(out, "v {:?} {:?} {:?}", v.x, v.y, v.z);
    }
    for f in faces {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

pub fn save_mesh(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_obj(mesh.vertices(), mesh.faces())).map_err(|e| Error::io(path, e))
}

/// Reads a sidecar label file: one 0-based vertex index per line.
pub fn read_index_file(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(line.parse().map_err(|_| Error::Malformed {
            path: path.to_path_buf(),
            line: idx + 1,
            msg: format!("bad vertex index {line:?}"),
        })?);
    }
    Ok(out)
}

pub fn write_index_file(path: impl AsRef<Path>, indices: &[usize]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for i in indices {
        let _ = writeln!(out, "{i}");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_triangle() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("tri.obj");
        fs::write(&p, "# tri\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1 2 3\n").unwrap();
        let m = load_mesh(&p).unwrap();
        assert_eq!(m.vertex_count(), 3);
        assert_eq!(m.faces(), &[[0, 1, 2]]);
        assert_eq!(m.vertices()[1], Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn zero_index_is_malformed() {
        let err = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n", Path::new("x.obj")).unwrap_err();
        match err {
            Error::Malformed { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn slash_indices_and_quads() {
        let (_, f) = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1/1 2//2 3/3\n", Path::new("x")).unwrap();
        assert_eq!(f, vec![[0, 1, 2]]);
        assert!(parse_obj("f 1 2 3 4\n", Path::new("x")).is_err());
        assert!(parse_obj("v 1 2\n", Path::new("x")).is_err());
    }

    #[test]
    fn invalid_mesh_names_face() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.obj");
        fs::write(&p, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 2\n").unwrap();
        let err = load_mesh(&p).unwrap_err();
        assert!(err.to_string().contains("face 0"), "{err}");
    }

    #[test]
    fn index_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("boundary.idx");
        write_index_file(&p, &[3, 1, 4]).unwrap();
        assert_eq!(read_index_file(&p).unwrap(), vec![3, 1, 4]);
    }

    proptest! {
        #[test]
        fn coordinates_round_trip_bit_exact(coords in prop::collection::vec(-1e6f64..1e6, 9)) {
            let verts: Vec<Vec3> = coords.chunks(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect();
            let text = write_obj(&verts, &[[0, 1, 2]]);
            let (back, faces) = parse_obj(&text, Path::new("mem")).unwrap();
            prop_assert_eq!(faces, vec![[0, 1, 2]]);
            for (a, b) in verts.iter().zip(&back) {
                for c in 0..3 {
                    prop_assert_eq!(a[c].to_bits(), b[c].to_bits());
                }
            }
        }
    }
}
