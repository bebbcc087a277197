use drapefit::energy::{
    barrier, bending_energy_grad, collider_distance, contact_energy_grad, gravity_energy_grad, membrane_energy_grad,
    Collider, ColliderSet, ModelConstants, Primitive,
};
use drapefit::mesh::{build_rest_state, RestState, TriMesh};
use drapefit::Vec3;
use nalgebra::{Isometry3, Point3, Translation3, UnitQuaternion, Vector3};
use proptest::prelude::*;

const N: usize = 4;

fn grid_faces() -> Vec<[usize; 3]> {
    let mut f = Vec::new();
    for j in 0..N - 1 {
        for i in 0..N - 1 {
            let a = j * N + i;
            f.push([a, a + 1, a + N + 1]);
            f.push([a, a + N + 1, a + N]);
        }
    }
    f
}

fn rest(jitter: &[f64]) -> (TriMesh, RestState) {
    let v = (0..N * N)
        .map(|k| {
            let (i, j) = (k % N, k / N);
            Vec3::new(
                0.1 * (i as f64 + 0.2 * jitter[3 * k]),
                0.1 * (j as f64 + 0.2 * jitter[3 * k + 1]),
                0.02 * jitter[3 * k + 2],
            )
        })
        .collect();
    let mesh = TriMesh::new(v, grid_faces()).unwrap();
    let rest = build_rest_state(&mesh, 400.0, 3e-4).unwrap();
    (mesh, rest)
}

fn deformed(mesh: &TriMesh, d: &[f64]) -> Vec<Vec3> {
    mesh.vertices()
        .iter()
        .enumerate()
        .map(|(k, p)| p + Vec3::new(d[3 * k], d[3 * k + 1], d[3 * k + 2]) * 0.01)
        .collect()
}

fn unit_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, len)
}

fn rigid() -> impl Strategy<Value = Isometry3<f64>> {
    (unit_vec(3), unit_vec(3)).prop_map(|(r, t)| {
        Isometry3::from_parts(
            Translation3::new(t[0] * 2.0, t[1] * 2.0, t[2] * 2.0),
            UnitQuaternion::from_euler_angles(r[0] * 3.1, r[1] * 3.1, r[2] * 3.1),
        )
    })
}

fn apply(iso: &Isometry3<f64>, x: &[Vec3]) -> Vec<Vec3> {
    x.iter().map(|p| (iso * Point3::from(*p)).coords).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn elastic_energies_are_rigid_invariant(j in unit_vec(3 * N * N), d in unit_vec(3 * N * N), iso in rigid()) {
        let (mesh, rest) = rest(&j);
        let c = ModelConstants::default();
        let x = deformed(&mesh, &d);
        let y = apply(&iso, &x);
        for (e0, e1) in [
            (membrane_energy_grad(&x, &rest, 1.3, &c).unwrap().0, membrane_energy_grad(&y, &rest, 1.3, &c).unwrap().0),
            (bending_energy_grad(&x, &rest, 0.7, &c).unwrap().0, bending_energy_grad(&y, &rest, 0.7, &c).unwrap().0),
        ] {
            prop_assert!((e1 - e0).abs() < 1e-10 * (1.0 + e0.abs()), "{e0} vs {e1}");
        }
    }

    #[test]
    fn internal_forces_are_self_equilibrated(j in unit_vec(3 * N * N), d in unit_vec(3 * N * N)) {
        let (mesh, rest) = rest(&j);
        let c = ModelConstants::default();
        let x = deformed(&mesh, &d);
        for g in [
            membrane_energy_grad(&x, &rest, 2.0, &c).unwrap().1,
            bending_energy_grad(&x, &rest, 2.0, &c).unwrap().1,
        ] {
            let sum: Vec3 = g.iter().sum();
            prop_assert!(sum.norm() < 1e-8, "{sum:?}");
        }
    }

    #[test]
    fn energies_are_linear_in_stiffness(j in unit_vec(3 * N * N), d in unit_vec(3 * N * N), k in 0.1f64..4.0) {
        let (mesh, rest) = rest(&j);
        let c = ModelConstants::default();
        let x = deformed(&mesh, &d);
        let b1 = bending_energy_grad(&x, &rest, k, &c).unwrap().0;
        let b2 = bending_energy_grad(&x, &rest, 2.0 * k, &c).unwrap().0;
        prop_assert_eq!(b2, 2.0 * b1);
        let m1 = membrane_energy_grad(&x, &rest, k, &c).unwrap().0;
        let m2 = membrane_energy_grad(&x, &rest, 2.0 * k, &c).unwrap().0;
        prop_assert!((m2 - 2.0 * m1).abs() <= 1e-14 * m2.abs());
    }

    #[test]
    fn barrier_is_decreasing_inside_support(a in 0.001f64..0.999, b in 0.001f64..0.999) {
        let (dhat, k) = (1e-3, 1e3);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-9);
        prop_assert!(barrier(lo * dhat, dhat, k) > barrier(hi * dhat, dhat, k));
    }
}

#[test]
fn rest_state_has_zero_elastic_energy() {
    let (mesh, rest) = rest(&[0.3; 3 * N * N]);
    let c = ModelConstants::default();
    let (e, g) = membrane_energy_grad(mesh.vertices(), &rest, 1.0, &c).unwrap();
    assert!(e.abs() < 1e-20 && g.iter().all(|v| v.norm() < 1e-12));
    let (e, g) = bending_energy_grad(mesh.vertices(), &rest, 1.0, &c).unwrap();
    assert!(e.abs() < 1e-20 && g.iter().all(|v| v.norm() < 1e-12));
}

#[test]
fn uniform_stretch_energy() {
    // F = 1.1 I on a right triangle: E = 0.105 I, Psi = 2 mu 0.105^2 + 2 lambda 0.105^2.
    let mesh = TriMesh::new(
        vec![Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)],
        vec![[0, 1, 2]],
    )
    .unwrap();
    let rest = build_rest_state(&mesh, 400.0, 3e-4).unwrap();
    let c = ModelConstants::default();
    let x: Vec<Vec3> = mesh.vertices().iter().map(|p| p * 1.1).collect();
    let (mu, lambda) = c.lame(1.0);
    let expect = 0.5 * 3e-4 * (2.0 * mu * 0.105f64.powi(2) + 2.0 * lambda * 0.105f64.powi(2));
    let e = membrane_energy_grad(&x, &rest, 1.0, &c).unwrap().0;
    assert!((e - expect).abs() < 1e-12 * expect, "{e} vs {expect}");
}

#[test]
fn right_angle_hinge_energy() {
    // |e| = 1, rest height 1/3 (unit-area faces), flat rest, folded 90 degrees.
    let flat = TriMesh::new(
        vec![
            Vec3::zeros(),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.5, 1.0, 0.0),
            Vec3::new(0.5, -1.0, 0.0),
        ],
        vec![[0, 1, 2], [1, 0, 3]],
    )
    .unwrap();
    let rest = build_rest_state(&flat, 400.0, 3e-4).unwrap();
    assert!((rest.hinges[0].weight() - 3.0).abs() < 1e-14);
    let mut x = flat.vertices().to_vec();
    x[3] = Vec3::new(0.5, 0.0, 1.0);
    let c = ModelConstants {
        bending_base: 1.0,
        ..ModelConstants::default()
    };
    let e = bending_energy_grad(&x, &rest, 1.0, &c).unwrap().0;
    assert!((e - 7.402203).abs() < 1e-6, "{e}");
}

#[test]
fn gravity_energy_examples() {
    let mesh = TriMesh::new(
        vec![
            Vec3::new(0.0, 2.0, 0.0),
            Vec3::new(1.0, 2.0, 0.0),
            Vec3::new(0.0, 2.0, 1.0),
        ],
        vec![[0, 2, 1]],
    )
    .unwrap();
    let c = ModelConstants::default();
    let r1 = build_rest_state(&mesh, 300.0, 3e-4).unwrap();
    let r2 = build_rest_state(&mesh, 600.0, 3e-4).unwrap();
    let (e1, g1) = gravity_energy_grad(mesh.vertices(), &r1, &c);
    let (e2, _) = gravity_energy_grad(mesh.vertices(), &r2, &c);
    assert!((e1 - 9.8 * 2.0 * r1.total_mass).abs() < 1e-15);
    assert!((e2 - 2.0 * e1).abs() < 1e-15);
    assert!((g1[0] - Vec3::new(0.0, 9.8 * r1.masses[0], 0.0)).norm() < 1e-15);
}

#[test]
fn contact_examples() {
    let c = ModelConstants::default();
    let floor = ColliderSet::new(vec![Collider::fixed(Primitive::HalfSpace {
        point: Vec3::zeros(),
        normal: Vec3::y(),
    })])
    .unwrap();
    let (e, g) = contact_energy_grad(&[Vec3::new(0.0, 5e-4, 0.0)], &floor, 0, &c).unwrap();
    assert!((e - 1.7329e-4).abs() < 1e-8, "{e}");
    assert!(g[0].y < 0.0);
    let (e, g) = contact_energy_grad(&[Vec3::new(0.0, 2e-3, 0.0)], &floor, 0, &c).unwrap();
    assert_eq!((e, g[0]), (0.0, Vec3::zeros()));
    assert!(contact_energy_grad(&[Vec3::new(0.0, -1e-4, 0.0)], &floor, 0, &c).is_err());
}

#[test]
fn collider_distance_examples() {
    let id = Isometry3::identity();
    let sphere = Primitive::Sphere {
        center: Vec3::zeros(),
        radius: 0.1,
    };
    assert!((collider_distance(&Vec3::new(0.2, 0.0, 0.0), &sphere, &id) - 0.1).abs() < 1e-15);
    let half = Primitive::HalfSpace {
        point: Vec3::zeros(),
        normal: Vec3::y(),
    };
    assert!((collider_distance(&Vec3::new(0.0, 0.05, 0.0), &half, &id) - 0.05).abs() < 1e-15);
    // Moving the collider moves the distance field with it.
    let moved = Isometry3::translation(0.0, 1.0, 0.0);
    assert!((collider_distance(&Vec3::new(0.2, 1.0, 0.0), &sphere, &moved) - 0.1).abs() < 1e-15);
    let tilted = Isometry3::from_parts(
        Translation3::identity(),
        UnitQuaternion::from_axis_angle(&Vector3::z_axis(), std::f64::consts::FRAC_PI_2),
    );
    // Rotated half-space now faces -x.
    assert!((collider_distance(&Vec3::new(-0.3, 0.0, 0.0), &half, &tilted) - 0.3).abs() < 1e-15);
}
