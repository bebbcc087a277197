//! Small geometric kernels shared by the mesh, energy and tracking code.

use nalgebra::{Quaternion, SMatrix, UnitQuaternion, Vector3};

pub type Vec3 = Vector3<f64>;

/// Wraps a quaternion read from a file. One that is already unit to rounding
/// is kept bit-for-bit so saved poses load back exactly.
pub fn unit_quaternion(q: Quaternion<f64>) -> UnitQuaternion<f64> {
    if (q.norm() - 1.0).abs() <= 4.0 * f64::EPSILON {
        UnitQuaternion::new_unchecked(q)
    } else {
        UnitQuaternion::from_quaternion(q)
    }
}

/// Unnormalized normal `(b - a) x (c - a)`; its length is twice the triangle area.
#[inline]
pub fn area_normal(a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    (b - a).cross(&(c - a))
}

#[inline]
pub fn triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    0.5 * area_normal(a, b, c).norm()
}

/// Signed dihedral angle of the hinge `(i, j, k, l)`.
///
/// Face one is `(i, j, k)`, face two is `(j, i, l)`. The angle is measured from
/// the normal of face one to the normal of face two about the edge direction
/// `i -> j`. It is positive for a convex fold, i.e. when the normals open away
/// from each other on the side face one's normal points to. Returns `None` if
/// either face is degenerate.
pub fn dihedral_angle(x: [&Vec3; 4]) -> Option<f64> {
    let e = x[1] - x[0];
    let n1 = e.cross(&(x[2] - x[0]));
    let n2 = (x[3] - x[1]).cross(&e);
    let elen = e.norm();
    if elen <= 0.0 || n1.norm_squared() <= 0.0 || n2.norm_squared() <= 0.0 {
        return None;
    }
    let sin = n1.cross(&n2).dot(&e) / elen;
    let cos = n1.dot(&n2);
    Some(sin.atan2(cos))
}

/// Gradient of [`dihedral_angle`] with respect to the four hinge vertices.
pub fn dihedral_angle_gradient(x: [&Vec3; 4]) -> Option<[Vec3; 4]> {
    let e = x[1] - x[0];
    let n1 = e.cross(&(x[2] - x[0]));
    let n2 = (x[3] - x[1]).cross(&e);
    let elen = e.norm();
    let n1sq = n1.norm_squared();
    let n2sq = n2.norm_squared();
    if elen <= 0.0 || n1sq <= 0.0 || n2sq <= 0.0 {
        return None;
    }
    let ehat = e / elen;
    let a = n1 / n1sq;
    let b = n2 / n2sq;
    Some([
        a * (x[1] - x[2]).dot(&ehat) + b * (x[1] - x[3]).dot(&ehat),
        a * (x[2] - x[0]).dot(&ehat) + b * (x[3] - x[0]).dot(&ehat),
        -a * elen,
        -b * elen,
    ])
}

/// Hessian of the dihedral angle, obtained by central differencing the analytic
/// gradient. Step is relative to the hinge edge length.
pub fn dihedral_angle_hessian(x: [&Vec3; 4]) -> Option<SMatrix<f64, 12, 12>> {
    let h = 1e-6 * (x[1] - x[0]).norm();
    let mut pts = [*x[0], *x[1], *x[2], *x[3]];
    let mut hess = SMatrix::<f64, 12, 12>::zeros();
    for col in 0..12 {
        let (v, c) = (col / 3, col % 3);
        let orig = pts[v][c];
        pts[v][c] = orig + h;
        let gp = dihedral_angle_gradient([&pts[0], &pts[1], &pts[2], &pts[3]])?;
        pts[v][c] = orig - h;
        let gm = dihedral_angle_gradient([&pts[0], &pts[1], &pts[2], &pts[3]])?;
        pts[v][c] = orig;
        for row in 0..12 {
            let (w, r) = (row / 3, row % 3);
            hess[(row, col)] = (gp[w][r] - gm[w][r]) / (2.0 * h);
        }
    }
    Some((hess + hess.transpose()) * 0.5)
}

/// Wraps an angle difference into `(-pi, pi]`.
#[inline]
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Closest point on triangle `abc` to `p`, returned as barycentric weights.
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> [f64; 3] {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return [1.0, 0.0, 0.0];
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return [0.0, 1.0, 0.0];
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return [1.0 - v, v, 0.0];
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return [0.0, 0.0, 1.0];
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return [1.0 - w, 0.0, w];
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return [0.0, 1.0 - w, w];
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    [1.0 - v - w, v, w]
}

/// Diagonal length of the axis-aligned bounding box.
pub fn bbox_diagonal(points: &[Vec3]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let mut lo = points[0];
    let mut hi = points[0];
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (hi - lo).norm()
}
