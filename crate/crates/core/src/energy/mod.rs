//! Elastic, gravitational and contact energies of the thin-shell garment.
//!
//! Every term exposes its energy with an analytic gradient, plus a positive
//! semidefinite Hessian approximation delivered block-by-block to a sink so the
//! solver can assemble whatever sparse layout it uses.

mod bending;
mod collider;
mod contact;
mod gravity;
mod membrane;

pub use bending::{bending_energy_grad, bending_hessian};
pub use collider::{
    collider_distance, colliders_to_toml, load_colliders, parse_colliders, save_colliders, Collider, ColliderSet,
    Primitive,
};
pub use contact::{barrier, barrier_derivative, barrier_second_derivative, contact_energy_grad, contact_hessian};
pub use gravity::gravity_energy_grad;
pub use membrane::{membrane_energy_grad, membrane_hessian};

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh::RestState;

/// Legal range of the volumetric density, kg/m³.
pub const DENSITY_RANGE: (f64, f64) = (200.0, 640.0);
/// Legal range of the membrane and bending stiffness scales.
pub const STIFFNESS_RANGE: (f64, f64) = (0.1, 8.0);

/// The estimated material triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicsParams {
    /// Volumetric density, kg/m³.
    pub rho: f64,
    /// Membrane stiffness scale.
    pub kappa_s: f64,
    /// Bending stiffness scale.
    pub kappa_b: f64,
}

impl PhysicsParams {
    pub fn new(rho: f64, kappa_s: f64, kappa_b: f64) -> Result<Self> {
        let p = PhysicsParams { rho, kappa_s, kappa_b };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<()> {
        let within = |v: f64, (lo, hi): (f64, f64)| v >= lo && v <= hi;
        if within(self.rho, DENSITY_RANGE)
            && within(self.kappa_s, STIFFNESS_RANGE)
            && within(self.kappa_b, STIFFNESS_RANGE)
        {
            Ok(())
        } else {
            Err(Error::Invalid(format!(
                "parameters out of range: rho={} (200..640), kappa_s={} (0.1..8), kappa_b={} (0.1..8)",
                self.rho, self.kappa_s, self.kappa_b
            )))
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.rho, self.kappa_s, self.kappa_b]
    }

    /// Builds from an array, clamping each entry into its legal range.
    pub fn from_array_clamped(a: [f64; 3]) -> Self {
        PhysicsParams {
            rho: a[0].clamp(DENSITY_RANGE.0, DENSITY_RANGE.1),
            kappa_s: a[1].clamp(STIFFNESS_RANGE.0, STIFFNESS_RANGE.1),
            kappa_b: a[2].clamp(STIFFNESS_RANGE.0, STIFFNESS_RANGE.1),
        }
    }

    pub fn ranges() -> [(f64, f64); 3] {
        [DENSITY_RANGE, STIFFNESS_RANGE, STIFFNESS_RANGE]
    }
}

/// Physical constants mapping the dimensionless scales onto SI quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConstants {
    /// Young's modulus at `kappa_s = 1`, Pa.
    pub youngs_base: f64,
    pub poisson: f64,
    /// Shell thickness, m.
    pub thickness: f64,
    /// Bending stiffness at `kappa_b = 1`, N·m.
    pub bending_base: f64,
    /// Gravitational acceleration, m/s².
    pub gravity: [f64; 3],
    /// Barrier activation distance, m.
    pub barrier_dhat: f64,
    pub barrier_stiffness: f64,
}

impl Default for ModelConstants {
    fn default() -> Self {
        ModelConstants {
            youngs_base: 1e5,
            poisson: 0.3,
            thickness: 3e-4,
            bending_base: 1e-4,
            gravity: [0.0, -9.8, 0.0],
            barrier_dhat: 1e-3,
            barrier_stiffness: 1e3,
        }
    }
}

impl ModelConstants {
    /// Plane-stress Lamé parameters `(mu, lambda)` for membrane scale `kappa_s`.
    pub fn lame(&self, kappa_s: f64) -> (f64, f64) {
        let y = kappa_s * self.youngs_base;
        let nu = self.poisson;
        (y / (2.0 * (1.0 + nu)), y * nu / (1.0 - nu * nu))
    }

    pub fn gravity_vec(&self) -> Vec3 {
        Vec3::from(self.gravity)
    }
}

/// Per-term energies (J) and gradients (N).
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTerms {
    pub membrane: (f64, Vec<Vec3>),
    pub bending: (f64, Vec<Vec3>),
    pub gravity: (f64, Vec<Vec3>),
    pub contact: (f64, Vec<Vec3>),
}

impl EnergyTerms {
    pub fn total_energy(&self) -> f64 {
        self.membrane.0 + self.bending.0 + self.gravity.0 + self.contact.0
    }

    pub fn total_gradient(&self) -> Vec<Vec3> {
        let mut g = self.membrane.1.clone();
        for terms in [&self.bending.1, &self.gravity.1, &self.contact.1] {
            for (a, b) in g.iter_mut().zip(terms) {
                *a += b;
            }
        }
        g
    }
}

/// Everything needed to evaluate the garment energy at one instant.
#[derive(Debug, Clone, Copy)]
pub struct EnergyModel<'a> {
    pub rest: &'a RestState,
    pub params: PhysicsParams,
    pub constants: &'a ModelConstants,
    pub colliders: &'a ColliderSet,
    pub frame: usize,
}

impl EnergyModel<'_> {
    pub fn terms(&self, x: &[Vec3]) -> Result<EnergyTerms> {
        Ok(EnergyTerms {
            membrane: membrane_energy_grad(x, self.rest, self.params.kappa_s, self.constants)?,
            bending: bending_energy_grad(x, self.rest, self.params.kappa_b, self.constants)?,
            gravity: gravity_energy_grad(x, self.rest, self.constants),
            contact: contact_energy_grad(x, self.colliders, self.frame, self.constants)?,
        })
    }

    /// Sum of all terms with its gradient.
    pub fn total(&self, x: &[Vec3]) -> Result<(f64, Vec<Vec3>)> {
        let t = self.terms(x)?;
        Ok((t.total_energy(), t.total_gradient()))
    }

    /// Visits PSD Hessian blocks `(i, j, H_ij)` of the total energy. Each
    /// element reports its full block set, so `(i, j)` and `(j, i)` both appear.
    pub fn hessian(&self, x: &[Vec3], sink: &mut dyn FnMut(usize, usize, &Matrix3<f64>)) -> Result<()> {
        membrane_hessian(x, self.rest, self.params.kappa_s, self.constants, sink)?;
        bending_hessian(x, self.rest, self.params.kappa_b, self.constants, sink)?;
        contact_hessian(x, self.colliders, self.frame, self.constants, sink)?;
        Ok(())
    }
}
