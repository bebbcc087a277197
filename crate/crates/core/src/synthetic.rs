//! Ground-truth scenarios: a hanging cloth patch whose pinned top edge swings
//! back and forth, simulated with known parameters.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::energy::{save_colliders, ColliderSet, ModelConstants, PhysicsParams};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh::{save_sequence, write_index_file, MeshSequence, TriMesh, VertexLabels};
use crate::sim::{save_boundary_csv, BoundaryTrack, Simulator, StepConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PinSelector {
    TopRow,
    None,
}

/// Sinusoidal displacement of the pinned vertices along `axis`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Swing {
    pub amplitude: f64,
    /// Hz.
    pub frequency: f64,
    pub axis: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    /// Cloth extent along x and y, m.
    pub size: [f64; 2],
    /// Vertices along x and y.
    pub resolution: [usize; 2],
    pub pinned: PinSelector,
    pub swing: Swing,
    pub colliders: ColliderSet,
    pub truth: PhysicsParams,
    pub constants: ModelConstants,
    pub step: StepConfig,
    /// Simulated steps; the sequence has `frames + 1` frames.
    pub frames: usize,
    /// Standard deviation of the Gaussian noise on tracker targets, m.
    pub noise: f64,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            size: [0.5, 0.5],
            resolution: [20, 20],
            pinned: PinSelector::TopRow,
            swing: Swing {
                amplitude: 0.1,
                frequency: 0.5,
                axis: [0.0, 0.0, 1.0],
            },
            colliders: ColliderSet::empty(),
            truth: PhysicsParams {
                rho: 400.0,
                kappa_s: 1.0,
                kappa_b: 0.5,
            },
            constants: ModelConstants::default(),
            step: StepConfig::default(),
            frames: 24,
            noise: 0.0,
            seed: 0,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.resolution[0] < 2 || self.resolution[1] < 2 {
            return Err(Error::Invalid(format!(
                "grid resolution must be at least 2x2, got {:?}",
                self.resolution
            )));
        }
        if !(self.size[0] > 0.0 && self.size[1] > 0.0) {
            return Err(Error::Invalid(format!(
                "cloth size must be positive, got {:?}",
                self.size
            )));
        }
        if self.frames < 1 {
            return Err(Error::Invalid("scenario needs at least one frame".into()));
        }
        if !(self.noise >= 0.0) {
            return Err(Error::Invalid(format!(
                "noise must be non-negative, got {}",
                self.noise
            )));
        }
        self.truth.check()?;
        self.step.validate()
    }

    pub fn boundary_indices(&self) -> Vec<usize> {
        match self.pinned {
            PinSelector::TopRow => {
                let [nx, ny] = self.resolution;
                ((ny - 1) * nx..ny * nx).collect()
            }
            PinSelector::None => Vec::new(),
        }
    }

    fn swing_offset(&self, t: usize) -> Vec3 {
        let time = t as f64 * self.step.dt;
        Vec3::from(self.swing.axis) * (self.swing.amplitude * (2.0 * PI * self.swing.frequency * time).sin())
    }

    /// Pinned-vertex positions for frames `0..=frames`.
    pub fn boundary_track(&self, mesh: &TriMesh) -> Result<BoundaryTrack> {
        let indices = self.boundary_indices();
        let rows = (0..=self.frames)
            .map(|t| {
                let off = self.swing_offset(t);
                indices.iter().map(|&i| mesh.vertices()[i] + off).collect()
            })
            .collect();
        BoundaryTrack::new(indices, rows)
    }
}

/// Vertical cloth in the x-y plane, bottom edge at y = 0, row-major from the
/// bottom. Quads are split along alternating diagonals.
pub fn make_cloth_grid(spec: &ScenarioSpec) -> Result<TriMesh> {
    spec.validate()?;
    let [nx, ny] = spec.resolution;
    let [w, h] = spec.size;
    let mut vertices = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            vertices.push(Vec3::new(
                w * i as f64 / (nx - 1) as f64,
                h * j as f64 / (ny - 1) as f64,
                0.0,
            ));
        }
    }
    let id = |i: usize, j: usize| j * nx + i;
    let mut faces = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                faces.push([a, b, c]);
                faces.push([a, c, d]);
            } else {
                faces.push([a, b, d]);
                faces.push([b, c, d]);
            }
        }
    }
    TriMesh::with_labels(
        vertices,
        faces,
        VertexLabels {
            garment: None,
            boundary: spec.boundary_indices(),
        },
    )
}

#[derive(Debug, Clone)]
pub struct Reference {
    pub mesh: TriMesh,
    pub sequence: MeshSequence,
    pub boundary: BoundaryTrack,
    pub colliders: ColliderSet,
    /// Noisy copies of the sequence for the tracker; equal to it when the noise is zero.
    pub targets: MeshSequence,
}

/// Simulates the scenario with its true parameters and derives tracker targets.
pub fn gen_reference(spec: &ScenarioSpec) -> Result<Reference> {
    let mesh = make_cloth_grid(spec)?;
    let boundary = spec.boundary_track(&mesh)?;
    let sim = Simulator::new(&mesh, &boundary.indices, spec.truth, spec.constants, spec.step)?;
    let (sequence, _) = sim.run(mesh.vertices(), &boundary, &spec.colliders, spec.frames)?;
    let targets = add_noise(&sequence, spec.noise, spec.seed)?;
    Ok(Reference {
        mesh,
        sequence,
        boundary,
        colliders: spec.colliders.clone(),
        targets,
    })
}

/// I.i.d. Gaussian noise of standard deviation `sigma` on every coordinate.
pub fn add_noise(seq: &MeshSequence, sigma: f64, seed: u64) -> Result<MeshSequence> {
    if sigma == 0.0 {
        return Ok(seq.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Invalid(format!("noise: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frames = seq
        .frames()
        .iter()
        .map(|f| {
            f.iter()
                .map(|p| {
                    p + Vec3::new(
                        normal.sample(&mut rng),
                        normal.sample(&mut rng),
                        normal.sample(&mut rng),
                    )
                })
                .collect()
        })
        .collect();
    MeshSequence::new(seq.faces().to_vec(), frames, seq.dt())
}

/// Writes `reference/frame_%04d.obj`, `boundary.idx`, `boundary.csv`,
/// `colliders.toml`, `truth.csv` and, with noise, `targets/frame_%04d.obj`.
pub fn write_reference(reference: &Reference, spec: &ScenarioSpec, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_sequence(&reference.sequence, dir.join("reference"))?;
    if spec.noise > 0.0 {
        save_sequence(&reference.targets, dir.join("targets"))?;
    }
    write_index_file(dir.join("boundary.idx"), &reference.boundary.indices)?;
    save_boundary_csv(&reference.boundary, dir.join("boundary.csv"))?;
    save_colliders(&reference.colliders, dir.join("colliders.toml"))?;
    let t = spec.truth;
    let truth = format!(
        "rho,kappa_s,kappa_b,frames,dt,noise,seed\n{},{},{},{},{},{},{}\n",
        t.rho, t.kappa_s, t.kappa_b, spec.frames, spec.step.dt, spec.noise, spec.seed
    );
    let path = dir.join("truth.csv");
    fs::write(&path, truth).map_err(|e| Error::io(&path, e))
}
