//! Analytic-vs-central-difference gradient checks over seeded random configurations.

use std::f64::consts::PI;

use nalgebra::{Isometry3, Translation3, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::energy::{
    bending_energy_grad, contact_energy_grad, gravity_energy_grad, membrane_energy_grad, Collider, ColliderSet,
    ModelConstants, Primitive, DENSITY_RANGE, STIFFNESS_RANGE,
};
use crate::error::{Error, Result};
use crate::geom::{bbox_diagonal, Vec3};
use crate::mesh::{build_rest_state, RestState, TriMesh};

/// Relative error the check must stay under.
pub const TOLERANCE: f64 = 1e-4;
/// Finite-difference step as a fraction of the configuration's bbox diagonal.
pub const STEP_FRACTION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Term {
    Membrane,
    Bending,
    Gravity,
    Contact,
}

impl Term {
    pub const ALL: [Term; 4] = [Term::Membrane, Term::Bending, Term::Gravity, Term::Contact];

    pub fn name(self) -> &'static str {
        match self {
            Term::Membrane => "membrane",
            Term::Bending => "bending",
            Term::Gravity => "gravity",
            Term::Contact => "contact",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermReport {
    pub term: Term,
    pub configs: usize,
    pub max_rel_error: f64,
    /// Configuration index with the largest error.
    pub worst: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradcheckReport {
    pub seed: u64,
    pub terms: Vec<TermReport>,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.terms.iter().all(|t| t.max_rel_error < TOLERANCE)
    }
}

/// One random configuration: a jittered, curved grid with a displaced current
/// state, random parameters and a collider just below the surface.
struct Config {
    rest: RestState,
    x: Vec<Vec3>,
    kappa_s: f64,
    kappa_b: f64,
    constants: ModelConstants,
    colliders: ColliderSet,
}

const GRID: usize = 4;
const SPACING: f64 = 0.05;

fn config(seed: u64, index: usize) -> Result<Config> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index as u64);
    let mut u = |lo: f64, hi: f64| rng.random_range(lo..hi);

    let mut rest_pos = Vec::new();
    for j in 0..GRID {
        for i in 0..GRID {
            rest_pos.push(Vec3::new(
                (i as f64 + u(-0.2, 0.2)) * SPACING,
                (j as f64 + u(-0.2, 0.2)) * SPACING,
                u(-0.1, 0.1) * SPACING,
            ));
        }
    }
    let mut faces = Vec::new();
    for j in 0..GRID - 1 {
        for i in 0..GRID - 1 {
            let a = j * GRID + i;
            let (b, c, d) = (a + 1, a + GRID + 1, a + GRID);
            if (i + j) % 2 == 0 {
                faces.extend([[a, b, c], [a, c, d]]);
            } else {
                faces.extend([[a, b, d], [b, c, d]]);
            }
        }
    }
    let mesh = TriMesh::new(rest_pos, faces)?;
    let density = u(DENSITY_RANGE.0, DENSITY_RANGE.1);
    let constants = ModelConstants::default();
    let rest = build_rest_state(&mesh, density, constants.thickness)?;

    // Displace, then place rigidly somewhere.
    let rot = UnitQuaternion::from_euler_angles(u(-PI, PI), u(-PI, PI), u(-PI, PI));
    let shift = Vector3::new(u(-1.0, 1.0), u(-1.0, 1.0), u(-1.0, 1.0));
    let iso = Isometry3::from_parts(Translation3::from(shift), rot);
    let x: Vec<Vec3> = mesh
        .vertices()
        .iter()
        .map(|p| {
            let d = Vec3::new(u(-0.1, 0.1), u(-0.1, 0.1), u(-0.2, 0.2)) * SPACING;
            (iso * nalgebra::Point3::from(p + d)).coords
        })
        .collect();

    let kappa_s = u(STIFFNESS_RANGE.0, STIFFNESS_RANGE.1);
    let kappa_b = u(STIFFNESS_RANGE.0, STIFFNESS_RANGE.1);
    let colliders = contact_collider(&x, &mut rng, constants.barrier_dhat, index % 3)?;
    Ok(Config {
        rest,
        x,
        kappa_s,
        kappa_b,
        constants,
        colliders,
    })
}

/// A collider whose closest approach to `x` is a random fraction of `dhat`, so
/// at least one vertex is inside the barrier's support.
fn contact_collider(x: &[Vec3], rng: &mut ChaCha8Rng, dhat: f64, kind: usize) -> Result<ColliderSet> {
    let gap = rng.random_range(0.2..0.8) * dhat;
    let mut r = || rng.random_range(-1.0..1.0);
    let dir = Vec3::new(r(), r(), r()).normalize();
    let centroid = x.iter().sum::<Vec3>() / x.len() as f64;
    let primitive = match kind {
        0 => {
            // Half-space below the lowest point along `dir`.
            let low = x.iter().map(|p| p.dot(&dir)).fold(f64::INFINITY, f64::min);
            Primitive::HalfSpace {
                point: dir * (low - gap),
                normal: dir,
            }
        }
        1 => {
            let center = centroid - dir * 0.5;
            let near = x.iter().map(|p| (p - center).norm()).fold(f64::INFINITY, f64::min);
            Primitive::Sphere {
                center,
                radius: near - gap,
            }
        }
        _ => {
            let side = dir.cross(&Vec3::new(0.3, 0.5, 0.8)).normalize();
            let (a, b) = (centroid - dir * 0.4 - side * 0.1, centroid - dir * 0.4 + side * 0.1);
            let seg = |p: &Vec3| {
                let t = ((p - a).dot(&(b - a)) / (b - a).norm_squared()).clamp(0.0, 1.0);
                (p - (a + (b - a) * t)).norm()
            };
            let near = x.iter().map(seg).fold(f64::INFINITY, f64::min);
            Primitive::Capsule {
                a,
                b,
                radius: near - gap,
            }
        }
    };
    ColliderSet::new(vec![Collider::fixed(primitive)])
}

fn evaluate(term: Term, c: &Config, x: &[Vec3]) -> Result<(f64, Vec<Vec3>)> {
    match term {
        Term::Membrane => membrane_energy_grad(x, &c.rest, c.kappa_s, &c.constants),
        Term::Bending => bending_energy_grad(x, &c.rest, c.kappa_b, &c.constants),
        Term::Gravity => Ok(gravity_energy_grad(x, &c.rest, &c.constants)),
        Term::Contact => contact_energy_grad(x, &c.colliders, 0, &c.constants),
    }
}

/// `|g_fd - g| / max(|g_fd|, |g|)` in the Euclidean norm over all coordinates.
fn relative_error(term: Term, c: &Config) -> Result<f64> {
    let (_, g) = evaluate(term, c, &c.x)?;
    let h = STEP_FRACTION * bbox_diagonal(&c.x);
    let mut x = c.x.clone();
    let (mut diff, mut norm_fd, mut norm_an) = (0.0, 0.0, 0.0);
    for v in 0..x.len() {
        for k in 0..3 {
            let orig = x[v][k];
            x[v][k] = orig + h;
            let ep = evaluate(term, c, &x)?.0;
            x[v][k] = orig - h;
            let em = evaluate(term, c, &x)?.0;
            x[v][k] = orig;
            let fd = (ep - em) / (2.0 * h);
            diff += (fd - g[v][k]).powi(2);
            norm_fd += fd * fd;
            norm_an += g[v][k] * g[v][k];
        }
    }
    let scale = norm_fd.max(norm_an).sqrt();
    if !(scale > 0.0) {
        return Err(Error::Numeric(format!(
            "{} gradient vanishes in gradcheck configuration",
            term.name()
        )));
    }
    Ok(diff.sqrt() / scale)
}

/// Runs `configs` random configurations per term. Deterministic in `seed`.
pub fn run_gradcheck(seed: u64, configs: usize) -> Result<GradcheckReport> {
    let setups = (0..configs)
        .into_par_iter()
        .map(|i| config(seed, i))
        .collect::<Result<Vec<_>>>()?;
    let terms = Term::ALL
        .iter()
        .map(|&term| {
            let errors = setups
                .par_iter()
                .map(|c| relative_error(term, c))
                .collect::<Result<Vec<_>>>()?;
            let (worst, max_rel_error) =
                errors
                    .iter()
                    .copied()
                    .enumerate()
                    .fold((0, 0.0), |best, (i, e)| if e > best.1 { (i, e) } else { best });
            Ok(TermReport {
                term,
                configs,
                max_rel_error,
                worst,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GradcheckReport { seed, terms })
}
