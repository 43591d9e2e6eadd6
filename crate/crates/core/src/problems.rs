//! Model operators: 5-point finite differences and P1 finite elements for
//! `-div(a grad u) = f` on the unit square with Dirichlet boundary.
//!
//! Grid unknowns are numbered `k = iy * n + ix` with `ix` running fastest,
//! so `I ⊗ T` couples neighbours along x and `T ⊗ I` neighbours along y.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::sparse::SparseMatrix;

/// Grid direction carrying the anisotropy factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoefficientField {
    Constant,
    /// `eps` multiplies the couplings along `axis`.
    Anisotropic { eps: f64, axis: Axis },
    /// 3 in the quadrant x > 1/2, y > 1/2 and 1 elsewhere.
    Jump,
    /// 0.1 + η with η uniform on [0, 1), one sample per grid node or triangle.
    Random { seed: u64 },
    /// Tensor R(θ) diag(1, ε) R(θ)ᵀ.
    RotatedTensor { theta: f64, eps: f64 },
}

impl CoefficientField {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CoefficientField::Anisotropic { eps, .. } if !(eps > 0.0) => {
                Err(Error::Invalid("anisotropy must be positive".into()))
            }
            CoefficientField::RotatedTensor { theta, eps }
                if !(eps > 0.0) || !(0.0..core::f64::consts::PI).contains(&theta) =>
            {
                Err(Error::Invalid("rotated tensor needs eps > 0 and theta in [0, pi)".into()))
            }
            _ => Ok(()),
        }
    }

    fn jump(x: f64, y: f64) -> f64 {
        if x > 0.5 && y > 0.5 {
            3.0
        } else {
            1.0
        }
    }

    /// Conductivity tensor [[k11, k12], [k12, k22]] at a point; `sample` serves random fields.
    fn tensor(&self, x: f64, y: f64, sample: f64) -> [f64; 3] {
        match *self {
            CoefficientField::Constant => [1.0, 0.0, 1.0],
            CoefficientField::Anisotropic { eps, axis: Axis::X } => [eps, 0.0, 1.0],
            CoefficientField::Anisotropic { eps, axis: Axis::Y } => [1.0, 0.0, eps],
            CoefficientField::Jump => {
                let a = Self::jump(x, y);
                [a, 0.0, a]
            }
            CoefficientField::Random { .. } => [sample, 0.0, sample],
            CoefficientField::RotatedTensor { theta, eps } => {
                let (s, c) = (libm::sin(theta), libm::cos(theta));
                [c * c + eps * s * s, (1.0 - eps) * c * s, s * s + eps * c * c]
            }
        }
    }
}

/// 5-point discretization on the n × n interior grid of the unit square.
///
/// Face coefficients are arithmetic means of the nodal coefficient, and the
/// matrix is not scaled by h⁻², so the constant field gives exactly
/// `I ⊗ T + T ⊗ I` with `T = tridiag(-1, 2, -1)`.
pub fn gen_fd_diffusion(n: usize, field: &CoefficientField) -> Result<SparseMatrix> {
    if n < 2 {
        return Err(Error::Invalid("grid size must be at least 2".into()));
    }
    field.validate()?;
    let m = n + 2;
    let h = 1.0 / (n as f64 + 1.0);
    let (cx, cy) = match *field {
        CoefficientField::Anisotropic { eps, axis: Axis::X } => (eps, 1.0),
        CoefficientField::Anisotropic { eps, axis: Axis::Y } => (1.0, eps),
        CoefficientField::RotatedTensor { .. } => {
            return Err(Error::Invalid("rotated tensor requires the P1 discretization".into()))
        }
        _ => (1.0, 1.0),
    };
    let mut nodal = vec![1.0; m * m];
    match *field {
        CoefficientField::Jump => {
            for iy in 0..m {
                for ix in 0..m {
                    nodal[iy * m + ix] = CoefficientField::jump(ix as f64 * h, iy as f64 * h);
                }
            }
        }
        CoefficientField::Random { seed } => {
            let mut r = Stream::new(seed);
            for v in nodal.iter_mut() {
                *v = 0.1 + r.unit();
            }
        }
        _ => {}
    }
    let a = |ix: usize, iy: usize| nodal[iy * m + ix];
    let mut trip = Vec::with_capacity(5 * n * n);
    for iy in 1..=n {
        for ix in 1..=n {
            let k = (iy - 1) * n + (ix - 1);
            let c = a(ix, iy);
            let faces = [
                (ix - 1, iy, cx),
                (ix + 1, iy, cx),
                (ix, iy - 1, cy),
                (ix, iy + 1, cy),
            ];
            let mut diag = 0.0;
            for &(jx, jy, s) in &faces {
                let f = s * 0.5 * (c + a(jx, jy));
                diag += f;
                if (1..=n).contains(&jx) && (1..=n).contains(&jy) {
                    trip.push((k, (jy - 1) * n + (jx - 1), -f));
                }
            }
            trip.push((k, k, diag));
        }
    }
    SparseMatrix::from_triplets(n * n, n * n, &trip)
}

/// Triangulation with per-vertex Dirichlet flags.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<bool>,
}

impl TriMesh {
    /// Twice the signed area of triangle `t`.
    pub fn double_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (p, q, r) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        (q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1])
    }

    /// Indices of the non-Dirichlet vertices in increasing order.
    pub fn interior(&self) -> Vec<usize> {
        (0..self.vertices.len()).filter(|&v| !self.boundary[v]).collect()
    }

    /// Checks orientation, conformity, boundary flags and duplicate vertices.
    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        if self.boundary.len() != nv {
            return Err(Error::DimensionMismatch { expected: nv, found: self.boundary.len() });
        }
        let mut edges: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::Invalid("triangle references a missing vertex".into()));
            }
            if !(self.double_area(t) > 2e-14) {
                return Err(Error::DegenerateTriangle { index: t });
            }
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        for (&(a, b), &count) in &edges {
            if count > 2 {
                return Err(Error::Invalid("non-conforming triangulation".into()));
            }
            if count == 1 && !(self.boundary[a] && self.boundary[b]) {
                return Err(Error::Invalid("boundary edge with unflagged vertex".into()));
            }
        }
        let mut order: Vec<usize> = (0..nv).collect();
        order.sort_by(|&a, &b| self.vertices[a][0].total_cmp(&self.vertices[b][0]));
        for (k, &a) in order.iter().enumerate() {
            for &b in &order[k + 1..] {
                if self.vertices[b][0] - self.vertices[a][0] > 1e-12 {
                    break;
                }
                if (self.vertices[b][1] - self.vertices[a][1]).abs() <= 1e-12 {
                    return Err(Error::Invalid("duplicate vertex".into()));
                }
            }
        }
        Ok(())
    }
}

/// Unit square split along its main diagonal, refined `levels` times by midpoints.
pub fn gen_structured_trimesh(levels: usize) -> TriMesh {
    let mut vertices = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let mut triangles = vec![[0, 1, 2], [0, 2, 3]];
    for _ in 0..levels {
        let mut mid: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut next = Vec::with_capacity(4 * triangles.len());
        for tri in &triangles {
            let mut m = [0usize; 3];
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                let key = (a.min(b), a.max(b));
                m[e] = *mid.entry(key).or_insert_with(|| {
                    let (p, q) = (vertices[a], vertices[b]);
                    vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                    vertices.len() - 1
                });
            }
            next.push([tri[0], m[0], m[2]]);
            next.push([m[0], tri[1], m[1]]);
            next.push([m[2], m[1], tri[2]]);
            next.push([m[0], m[1], m[2]]);
        }
        triangles = next;
    }
    let boundary = vertices
        .iter()
        .map(|p: &[f64; 2]| p[0].abs() < 1e-12 || p[1].abs() < 1e-12 || (p[0] - 1.0).abs() < 1e-12 || (p[1] - 1.0).abs() < 1e-12)
        .collect();
    TriMesh { vertices, triangles, boundary }
}

/// P1 stiffness matrix on the interior vertices, coefficient taken at centroids.
pub fn assemble_p1(mesh: &TriMesh, field: &CoefficientField) -> Result<SparseMatrix> {
    field.validate()?;
    let interior = mesh.interior();
    if interior.len() == mesh.vertices.len() {
        return Err(Error::Invalid("mesh has no Dirichlet vertices".into()));
    }
    let mut local = vec![usize::MAX; mesh.vertices.len()];
    for (k, &v) in interior.iter().enumerate() {
        local[v] = k;
    }
    let mut stream = match *field {
        CoefficientField::Random { seed } => Some(Stream::new(seed)),
        _ => None,
    };
    let mut trip = Vec::with_capacity(9 * mesh.triangles.len());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let area2 = mesh.double_area(t);
        if !(area2.abs() > 2e-14) {
            return Err(Error::DegenerateTriangle { index: t });
        }
        let p: [[f64; 2]; 3] = [mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]];
        let cx = (p[0][0] + p[1][0] + p[2][0]) / 3.0;
        let cy = (p[0][1] + p[1][1] + p[2][1]) / 3.0;
        let sample = stream.as_mut().map(|s| 0.1 + s.unit()).unwrap_or(1.0);
        let k = field.tensor(cx, cy, sample);
        let mut grad = [[0.0; 2]; 3];
        for i in 0..3 {
            let (j, l) = ((i + 1) % 3, (i + 2) % 3);
            grad[i] = [(p[j][1] - p[l][1]) / area2, (p[l][0] - p[j][0]) / area2];
        }
        let area = 0.5 * area2.abs();
        for i in 0..3 {
            let gi = local[tri[i]];
            if gi == usize::MAX {
                continue;
            }
            for j in 0..3 {
                let gj = local[tri[j]];
                if gj == usize::MAX {
                    continue;
                }
                let kg = [k[0] * grad[j][0] + k[1] * grad[j][1], k[1] * grad[j][0] + k[2] * grad[j][1]];
                trip.push((gi, gj, area * (grad[i][0] * kg[0] + grad[i][1] * kg[1])));
            }
        }
    }
    let n = interior.len();
    SparseMatrix::from_triplets(n, n, &trip)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_two_by_two() {
        let a = gen_fd_diffusion(2, &CoefficientField::Constant).unwrap();
        assert_eq!(a.n(), 4);
        for i in 0..4 {
            assert_eq!(a.get(i, i), 4.0);
        }
        assert_eq!(a.get(0, 1), -1.0);
        assert_eq!(a.get(0, 2), -1.0);
        assert_eq!(a.get(0, 3), 0.0);
        assert_eq!(a.get(1, 2), 0.0);
    }

    #[test]
    fn constant_interior_row() {
        let n = 12;
        let a = gen_fd_diffusion(n, &CoefficientField::Constant).unwrap();
        let k = 5 * n + 5;
        let (c, v) = a.row(k);
        assert_eq!(c.len(), 5);
        assert_eq!(v.iter().sum::<f64>(), 0.0);
        assert_eq!(a.get(k, k), 4.0);
    }

    #[test]
    fn anisotropic_interior_row() {
        let n = 12;
        let a = gen_fd_diffusion(n, &CoefficientField::Anisotropic { eps: 100.0, axis: Axis::X }).unwrap();
        let k = 5 * n + 5;
        assert_eq!(a.get(k, k), 202.0);
        assert_eq!(a.get(k, k + 1), -100.0);
        assert_eq!(a.get(k, k - 1), -100.0);
        assert_eq!(a.get(k, k + n), -1.0);
        assert_eq!(a.get(k, k - n), -1.0);
    }

    #[test]
    fn rejects_tiny_grid() {
        assert!(gen_fd_diffusion(1, &CoefficientField::Constant).is_err());
    }

    #[test]
    fn random_field_is_reproducible_and_bounded() {
        let f = CoefficientField::Random { seed: 9 };
        let a = gen_fd_diffusion(8, &f).unwrap();
        assert_eq!(a, gen_fd_diffusion(8, &f).unwrap());
        for i in 0..a.n() {
            let off: f64 = a.off_diagonal(i).map(|(_, v)| -v).sum();
            assert!(off >= 0.1 && a.get(i, i) <= 4.0 * 1.1 + 1e-12);
        }
    }

    #[test]
    fn reference_triangle_single_dof() {
        let mesh = TriMesh {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2]],
            boundary: vec![false, true, true],
        };
        let a = assemble_p1(&mesh, &CoefficientField::Constant).unwrap();
        assert_eq!(a.n(), 1);
        assert!((a.get(0, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn structured_mesh_counts() {
        let m0 = gen_structured_trimesh(0);
        assert_eq!((m0.vertices.len(), m0.triangles.len()), (4, 2));
        let m3 = gen_structured_trimesh(3);
        assert_eq!(m3.triangles.len(), 2 * 64);
        assert_eq!(m3.vertices.len(), 81);
        m3.validate().unwrap();
    }

    #[test]
    fn structured_triangulation_reproduces_five_point_stencil() {
        let mesh = gen_structured_trimesh(3);
        let a = assemble_p1(&mesh, &CoefficientField::Constant).unwrap();
        assert_eq!(a.n(), 49);
        for i in 0..a.n() {
            assert!((a.get(i, i) - 4.0).abs() < 1e-12);
            for (_, v) in a.off_diagonal(i) {
                assert!(v.abs() < 1e-12 || (v + 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_tensor_equals_scalar() {
        let mesh = gen_structured_trimesh(2);
        let a = assemble_p1(&mesh, &CoefficientField::Constant).unwrap();
        let b = assemble_p1(&mesh, &CoefficientField::RotatedTensor { theta: 0.0, eps: 1.0 }).unwrap();
        for i in 0..a.n() {
            for j in 0..a.n() {
                assert!((a.get(i, j) - b.get(i, j)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn degenerate_triangle_rejected() {
        let mesh = TriMesh {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]],
            triangles: vec![[0, 1, 2]],
            boundary: vec![false, true, true],
        };
        assert_eq!(assemble_p1(&mesh, &CoefficientField::Constant), Err(Error::DegenerateTriangle { index: 0 }));
    }
}
