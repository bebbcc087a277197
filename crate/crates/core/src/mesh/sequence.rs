use std::fs;
use std::path::Path;

use super::{load_mesh, obj::write_obj, TriMesh};
use crate::error::{Error, Result};
use crate::geom::Vec3;

/// Frames of vertex positions sharing one face list.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshSequence {
    faces: Vec<[usize; 3]>,
    frames: Vec<Vec<Vec3>>,
    dt: f64,
}

impl MeshSequence {
    pub fn new(faces: Vec<[usize; 3]>, frames: Vec<Vec<Vec3>>, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Invalid(format!("frame time step must be positive, got {dt}")));
        }
        if let Some(first) = frames.first() {
            if let Some(t) = frames.iter().position(|f| f.len() != first.len()) {
                return Err(Error::Invalid(format!(
                    "frame {t} has {} vertices, frame 0 has {}",
                    frames[t].len(),
                    first.len()
                )));
            }
        }
        Ok(MeshSequence { faces, frames, dt })
    }

    /// A one-frame sequence holding `mesh`.
    pub fn from_mesh(mesh: &TriMesh, dt: f64) -> Result<Self> {
        Self::new(mesh.faces().to_vec(), vec![mesh.vertices().to_vec()], dt)
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn frames(&self) -> &[Vec<Vec3>] {
        &self.frames
    }

    pub fn frame(&self, t: usize) -> &[Vec3] {
        &self.frames[t]
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn vertex_count(&self) -> usize {
        self.frames.first().map_or(0, Vec::len)
    }

    pub(crate) fn push(&mut self, frame: Vec<Vec3>) {
        debug_assert_eq!(frame.len(), self.vertex_count());
        self.frames.push(frame);
    }

    /// The first `n` frames.
    pub fn truncated(&self, n: usize) -> MeshSequence {
        MeshSequence {
            faces: self.faces.clone(),
            frames: self.frames[..n.min(self.frames.len())].to_vec(),
            dt: self.dt,
        }
    }

    /// Frame `t` as a validated mesh.
    pub fn mesh_at(&self, t: usize) -> Result<TriMesh> {
        TriMesh::new(self.frames[t].clone(), self.faces.clone())
    }
}

pub fn frame_file_name(t: usize) -> String {
    format!("frame_{t:04}.obj")
}

/// Writes `frame_0000.obj`, `frame_0001.obj`, ... into `dir`.
pub fn save_sequence(seq: &MeshSequence, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (t, frame) in seq.frames.iter().enumerate() {
        let path = dir.join(frame_file_name(t));
        fs::write(&path, write_obj(frame, &seq.faces)).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Reads consecutive `frame_%04d.obj` files starting at `frame_0000.obj`.
pub fn load_sequence(dir: impl AsRef<Path>, dt: f64) -> Result<MeshSequence> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "sequence directory not found"),
        ));
    }
    let mut faces: Option<Vec<[usize; 3]>> = None;
    let mut frames: Vec<Vec<Vec3>> = Vec::new();
    loop {
        let path = dir.join(frame_file_name(frames.len()));
        if !path.exists() {
            break;
        }
        let mesh = load_mesh(&path)?;
        match (&faces, frames.first()) {
            (Some(f), Some(first)) if f.as_slice() != mesh.faces() || first.len() != mesh.vertex_count() => {
                return Err(Error::Invalid(format!(
                    "{} does not share the topology of frame 0",
                    path.display()
                )));
            }
            (None, _) => faces = Some(mesh.faces().to_vec()),
            _ => {}
        }
        frames.push(mesh.vertices().to_vec());
    }
    let Some(faces) = faces else {
        return Err(Error::Invalid(format!("no frame_0000.obj in {}", dir.display())));
    };
    MeshSequence::new(faces, frames, dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri_seq() -> MeshSequence {
        let base = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ];
        let moved: Vec<Vec3> = base.iter().map(|p| p + Vec3::new(0.1, 0.2, 0.3)).collect();
        MeshSequence::new(vec![[0, 1, 2]], vec![base, moved], 0.04).unwrap()
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let seq = tri_seq();
        save_sequence(&seq, dir.path()).unwrap();
        assert!(dir.path().join("frame_0001.obj").exists());
        let back = load_sequence(dir.path(), 0.04).unwrap();
        assert_eq!(back, seq);
    }

    #[test]
    fn rejects_bad_dt_and_ragged_frames() {
        assert!(MeshSequence::new(vec![], vec![], 0.0).is_err());
        let err = MeshSequence::new(vec![], vec![vec![Vec3::zeros(); 3], vec![Vec3::zeros(); 2]], 0.1);
        assert!(err.is_err());
    }

    #[test]
    fn empty_dir_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_sequence(dir.path(), 0.04).is_err());
    }
}
