use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh::{load_sequence, MeshSequence, TriMesh};

/// Prescribed positions of the boundary vertices, one row per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrack {
    pub indices: Vec<usize>,
    /// `positions[t][k]` is where `indices[k]` sits at frame `t`.
    pub positions: Vec<Vec<Vec3>>,
}

impl BoundaryTrack {
    pub fn new(indices: Vec<usize>, positions: Vec<Vec<Vec3>>) -> Result<Self> {
        for (t, row) in positions.iter().enumerate() {
            if row.len() != indices.len() {
                return Err(Error::Invalid(format!(
                    "boundary frame {t} has {} positions for {} indices",
                    row.len(),
                    indices.len()
                )));
            }
            if row.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
                return Err(Error::Invalid(format!("boundary frame {t} has non-finite positions")));
            }
        }
        Ok(BoundaryTrack { indices, positions })
    }

    /// Boundary vertices held at their positions in `mesh` for `frames` frames.
    pub fn fixed(mesh: &TriMesh, indices: &[usize], frames: usize) -> Result<Self> {
        let row = pick(mesh.vertices(), indices)?;
        Self::new(indices.to_vec(), vec![row; frames])
    }

    /// Boundary positions read off a reference sequence.
    pub fn from_sequence(seq: &MeshSequence, indices: &[usize]) -> Result<Self> {
        let rows = seq
            .frames()
            .iter()
            .map(|f| pick(f, indices))
            .collect::<Result<Vec<_>>>()?;
        Self::new(indices.to_vec(), rows)
    }

    pub fn frame_count(&self) -> usize {
        self.positions.len()
    }

    pub fn at(&self, t: usize) -> &[Vec3] {
        &self.positions[t]
    }
}

fn pick(x: &[Vec3], indices: &[usize]) -> Result<Vec<Vec3>> {
    indices
        .iter()
        .map(|&i| {
            x.get(i)
                .copied()
                .ok_or_else(|| Error::Invalid(format!("boundary index {i} out of range ({} vertices)", x.len())))
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    frame: usize,
    vertex: usize,
    x: f64,
    y: f64,
    z: f64,
}

/// Reads `frame,vertex,x,y,z` rows. Every frame must list the same vertices
/// in the same order, and frames must be numbered from 0 without gaps.
pub fn load_boundary_csv(path: impl AsRef<Path>) -> Result<BoundaryTrack> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut indices: Vec<usize> = Vec::new();
    let mut positions: Vec<Vec<Vec3>> = Vec::new();
    let mut per_frame: Vec<Vec<usize>> = Vec::new();
    for (k, rec) in reader.deserialize::<Row>().enumerate() {
        let line = k + 2;
        let row = rec.map_err(|e| Error::Malformed {
            path: path.into(),
            line,
            msg: e.to_string(),
        })?;
        if row.frame > positions.len() {
            return Err(Error::Malformed {
                path: path.into(),
                line,
                msg: format!("frame {} skips frame {}", row.frame, positions.len()),
            });
        }
        if row.frame == positions.len() {
            positions.push(Vec::new());
            per_frame.push(Vec::new());
        }
        positions[row.frame].push(Vec3::new(row.x, row.y, row.z));
        per_frame[row.frame].push(row.vertex);
        if row.frame == 0 {
            indices.push(row.vertex);
        }
    }
    for (t, ids) in per_frame.iter().enumerate() {
        if *ids != indices {
            return Err(Error::Malformed {
                path: path.into(),
                line: 0,
                msg: format!("frame {t} lists different boundary vertices than frame 0"),
            });
        }
    }
    BoundaryTrack::new(indices, positions)
}

pub fn save_boundary_csv(track: &BoundaryTrack, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(Vec::new());
    for (t, row) in track.positions.iter().enumerate() {
        for (&v, p) in track.indices.iter().zip(row) {
            w.serialize(Row {
                frame: t,
                vertex: v,
                x: p.x,
                y: p.y,
                z: p.z,
            })
            .map_err(|e| Error::Invalid(e.to_string()))?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Boundary track from a directory of per-frame OBJ files and an index list.
pub fn load_boundary_frames(dir: impl AsRef<Path>, indices: &[usize], dt: f64) -> Result<BoundaryTrack> {
    BoundaryTrack::from_sequence(&load_sequence(dir, dt)?, indices)
}
