use super::ModelConstants;
use crate::geom::Vec3;
use crate::mesh::RestState;

/// `-sum_i m_i g . x_i` and its (constant) gradient.
pub fn gravity_energy_grad(x: &[Vec3], rest: &RestState, constants: &ModelConstants) -> (f64, Vec<Vec3>) {
    let g = constants.gravity_vec();
    let mut energy = 0.0;
    let grad = x
        .iter()
        .zip(&rest.masses)
        .map(|(p, &m)| {
            energy -= m * g.dot(p);
            -g * m
        })
        .collect();
    (energy, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_rest_state, TriMesh};

    fn rest_with_unit_masses() -> RestState {
        let m = TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let mut rest = build_rest_state(&m, 400.0, 3e-4).unwrap();
        rest.masses = vec![1.0; 3];
        rest
    }

    #[test]
    fn unit_mass_at_height() {
        let rest = rest_with_unit_masses();
        let x = vec![Vec3::new(0.0, 2.0, 0.0), Vec3::zeros(), Vec3::zeros()];
        let (e, g) = gravity_energy_grad(&x, &rest, &ModelConstants::default());
        assert!((e - 9.8 * 2.0).abs() < 1e-12);
        assert_eq!(g[0], Vec3::new(0.0, 9.8, 0.0));
    }

    #[test]
    fn ground_level_is_zero_and_linear_in_mass() {
        let m = TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 0.0, 1.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let c = ModelConstants::default();
        let rest = build_rest_state(&m, 400.0, 3e-4).unwrap();
        assert_eq!(gravity_energy_grad(m.vertices(), &rest, &c).0, 0.0);
        let lifted: Vec<Vec3> = m.vertices().iter().map(|p| p + Vec3::new(0.0, 0.7, 0.0)).collect();
        let e1 = gravity_energy_grad(&lifted, &rest, &c).0;
        let e2 = gravity_energy_grad(&lifted, &rest.with_density(800.0), &c).0;
        assert!((e2 - 2.0 * e1).abs() < 1e-15);
    }
}
