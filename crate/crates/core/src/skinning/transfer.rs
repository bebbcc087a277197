//! Two-stage weight transfer: closest-point matching, then Laplace inpainting.

use rayon::prelude::*;

use super::{canonical_row, SkinWeights};
use crate::error::{Error, Result};
use crate::geom::{area_normal, bbox_diagonal, closest_point_on_triangle, Vec3};
use crate::linalg::{reverse_cuthill_mckee, BandMatrix};
use crate::mesh::{Finding, TriMesh, ValidationReport};

/// Matching thresholds. `None` picks the defaults from the source mesh.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TransferConfig {
    /// Max distance to the source surface. Default: 5% of the source bbox diagonal.
    pub d_max: Option<f64>,
    /// Max angle between target vertex normal and source face normal, radians. Default: 60°.
    pub theta_max: Option<f64>,
}

impl TransferConfig {
    pub fn resolve(&self, source: &TriMesh) -> (f64, f64) {
        (
            self.d_max.unwrap_or_else(|| 0.05 * bbox_diagonal(source.vertices())),
            self.theta_max.unwrap_or(60f64.to_radians()),
        )
    }
}

/// Weights on matched vertices only; unmatched rows are empty.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialWeights {
    pub rows: Vec<Vec<(usize, f64)>>,
    pub matched: Vec<bool>,
    pub bones: usize,
}

impl PartialWeights {
    pub fn matched_count(&self) -> usize {
        self.matched.iter().filter(|&&m| m).count()
    }
}

/// Closest-point transfer from `source` onto the vertices of `target`.
pub fn transfer_weights_direct(
    source: &TriMesh,
    weights: &SkinWeights,
    target: &TriMesh,
    d_max: f64,
    theta_max: f64,
) -> Result<PartialWeights> {
    if source.face_count() == 0 {
        return Err(Error::Validation(ValidationReport {
            findings: vec![Finding::EmptyMesh],
        }));
    }
    if weights.len() != source.vertex_count() {
        return Err(Error::Invalid(format!(
            "{} source vertices, {} weight rows",
            source.vertex_count(),
            weights.len()
        )));
    }
    let sv = source.vertices();
    let face_normals: Vec<Vec3> = source
        .faces()
        .iter()
        .map(|f| area_normal(&sv[f[0]], &sv[f[1]], &sv[f[2]]).normalize())
        .collect();
    let cos_max = theta_max.cos();
    let target_normals = target.vertex_normals();

    let mut rows = Vec::with_capacity(target.vertex_count());
    let mut matched = Vec::with_capacity(target.vertex_count());
    for (p, n) in target.vertices().iter().zip(&target_normals) {
        // Nearest face; equal distances prefer the better-aligned normal.
        let mut best: Option<(f64, f64, usize, [f64; 3])> = None;
        for (fi, f) in source.faces().iter().enumerate() {
            let bary = closest_point_on_triangle(p, &sv[f[0]], &sv[f[1]], &sv[f[2]]);
            let q = sv[f[0]] * bary[0] + sv[f[1]] * bary[1] + sv[f[2]] * bary[2];
            let d = (p - q).norm();
            let c = n.dot(&face_normals[fi]);
            let better = match best {
                None => true,
                Some((bd, bc, _, _)) => d < bd || (d == bd && c > bc),
            };
            if better {
                best = Some((d, c, fi, bary));
            }
        }
        let (d, c, fi, bary) = best.expect("source has faces");
        if d <= d_max && c >= cos_max {
            let f = source.faces()[fi];
            let mut row = Vec::new();
            for k in 0..3 {
                if bary[k] != 0.0 {
                    row.extend(weights.row(f[k]).iter().map(|&(b, w)| (b, w * bary[k])));
                }
            }
            rows.push(canonical_row(&row));
            matched.push(true);
        } else {
            rows.push(Vec::new());
            matched.push(false);
        }
    }
    Ok(PartialWeights {
        rows,
        matched,
        bones: weights.bones(),
    })
}

/// Edge weights of the Laplace operator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Laplacian {
    #[default]
    Uniform,
    /// Cotangent weights, clipped at zero so the system stays positive definite.
    Cotangent,
}

fn edge_weights(mesh: &TriMesh, kind: Laplacian) -> Vec<Vec<(usize, f64)>> {
    let rings = mesh.vertex_rings();
    match kind {
        Laplacian::Uniform => rings.iter().map(|r| r.iter().map(|&u| (u, 1.0)).collect()).collect(),
        Laplacian::Cotangent => {
            let x = mesh.vertices();
            let mut w: Vec<Vec<(usize, f64)>> = rings.iter().map(|r| r.iter().map(|&u| (u, 0.0)).collect()).collect();
            let mut add = |a: usize, b: usize, v: f64| {
                let i = w[a].binary_search_by_key(&b, |&(u, _)| u).unwrap();
                w[a][i].1 += v;
            };
            for &[a, b, c] in mesh.faces() {
                for (i, j, k) in [(a, b, c), (b, c, a), (c, a, b)] {
                    let (e1, e2) = (x[i] - x[k], x[j] - x[k]);
                    let cot = e1.dot(&e2) / e1.cross(&e2).norm();
                    add(i, j, 0.5 * cot);
                    add(j, i, 0.5 * cot);
                }
            }
            for row in &mut w {
                for (_, v) in row.iter_mut() {
                    *v = v.max(0.0);
                }
            }
            w
        }
    }
}

fn components(rings: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = rings.len();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut i = 0;
        while i < comp.len() {
            for &u in &rings[comp[i]] {
                if !seen[u] {
                    seen[u] = true;
                    comp.push(u);
                }
            }
            i += 1;
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Dense per-bone Laplace solution before clamping: matched rows are copied,
/// unmatched rows solve `L w = 0` with the matched rows as Dirichlet data.
pub fn harmonic_fill(target: &TriMesh, partial: &PartialWeights, kind: Laplacian) -> Result<Vec<Vec<f64>>> {
    let n = target.vertex_count();
    if partial.rows.len() != n || partial.matched.len() != n {
        return Err(Error::Invalid(format!(
            "{n} target vertices, {} partial rows",
            partial.rows.len()
        )));
    }
    let rings = target.vertex_rings();
    for comp in components(&rings) {
        if comp.iter().any(|&v| !partial.matched[v]) && !comp.iter().any(|&v| partial.matched[v]) {
            return Err(Error::UnconstrainedRegion { vertices: comp });
        }
    }

    let bones = partial.bones;
    let mut dense = vec![vec![0.0; bones]; n];
    for (v, row) in partial.rows.iter().enumerate() {
        if partial.matched[v] {
            for &(b, w) in row {
                dense[v][b] += w;
            }
        }
    }
    let unknown: Vec<usize> = (0..n).filter(|&v| !partial.matched[v]).collect();
    if unknown.is_empty() {
        return Ok(dense);
    }

    let mut local = vec![usize::MAX; n];
    for (i, &v) in unknown.iter().enumerate() {
        local[v] = i;
    }
    let adjacency: Vec<Vec<usize>> = unknown
        .iter()
        .map(|&v| {
            rings[v]
                .iter()
                .filter(|&&u| local[u] != usize::MAX)
                .map(|&u| local[u])
                .collect()
        })
        .collect();
    let order = reverse_cuthill_mckee(&adjacency);
    let mut slot = vec![0; unknown.len()];
    for (pos, &i) in order.iter().enumerate() {
        slot[i] = pos;
    }
    let slot_ref = &slot;
    let bandwidth = adjacency
        .iter()
        .enumerate()
        .flat_map(|(i, nb)| nb.iter().map(move |&j| slot_ref[i].abs_diff(slot_ref[j])))
        .max()
        .unwrap_or(0);

    let weights = edge_weights(target, kind);
    let mut a = BandMatrix::zeros(unknown.len(), bandwidth);
    // rhs[bone][slot]
    let mut rhs = vec![vec![0.0; unknown.len()]; bones];
    for (i, &v) in unknown.iter().enumerate() {
        let si = slot[i];
        for &(u, w) in &weights[v] {
            a.add(si, si, w);
            if partial.matched[u] {
                for (b, r) in rhs.iter_mut().enumerate() {
                    r[si] += w * dense[u][b];
                }
            } else if slot[local[u]] < si {
                a.add(si, slot[local[u]], -w);
            }
        }
    }
    let factor = a.cholesky().map_err(|e| match e {
        Error::Numeric(msg) => Error::Numeric(format!("inpainting Laplacian: {msg}")),
        other => other,
    })?;
    let solved: Vec<Vec<f64>> = rhs.par_iter().map(|r| factor.solve(r)).collect();
    for (i, &v) in unknown.iter().enumerate() {
        for b in 0..bones {
            dense[v][b] = solved[b][slot[i]];
        }
    }
    Ok(dense)
}

/// Fills unmatched rows by harmonic interpolation, clamps negatives and
/// renormalizes each row.
pub fn inpaint_weights(target: &TriMesh, partial: &PartialWeights, kind: Laplacian) -> Result<SkinWeights> {
    let dense = harmonic_fill(target, partial, kind)?;
    let rows = dense
        .into_iter()
        .enumerate()
        .map(|(v, row)| {
            if partial.matched[v] {
                return Ok(partial.rows[v].clone());
            }
            let clamped: Vec<f64> = row.iter().map(|w| w.max(0.0)).collect();
            let sum: f64 = clamped.iter().sum();
            if !(sum > 0.0) || !sum.is_finite() {
                return Err(Error::Numeric(format!("vertex {v}: inpainted row sums to {sum}")));
            }
            Ok(clamped
                .iter()
                .enumerate()
                .filter(|&(_, &w)| w > 0.0)
                .map(|(b, &w)| (b, w / sum))
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    SkinWeights::new(rows, partial.bones)
}
