//! First-order nodal finite elements for the 2D curl-curl problems.
//!
//! With `A = A_z e_z` the curl of a P1 function is the rotated gradient
//! `(dA/dy, -dA/dx)`, constant on each triangle. All element integrals below
//! therefore use one quadrature point and are exact.

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::vec2::{dot, Vec2};

/// Symmetric 2x2 tensor acting on flux-density vectors.
pub type Tensor2 = [[f64; 2]; 2];

/// One scalar per mesh vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct DofVector(pub Vec<f64>);

impl DofVector {
    pub fn zeros(n: usize) -> Self {
        DofVector(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Numbering of the unconstrained vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    free_of: Vec<Option<usize>>,
    vertex_of: Vec<usize>,
}

impl DofMap {
    /// Homogeneous Dirichlet on every flagged boundary vertex.
    pub fn new(mesh: &Mesh) -> Self {
        Self::from_mask(&mesh.boundary)
    }

    pub fn unconstrained(n_vertices: usize) -> Self {
        Self::from_mask(&vec![false; n_vertices])
    }

    fn from_mask(constrained: &[bool]) -> Self {
        let mut free_of = vec![None; constrained.len()];
        let mut vertex_of = Vec::new();
        for (v, &c) in constrained.iter().enumerate() {
            if !c {
                free_of[v] = Some(vertex_of.len());
                vertex_of.push(v);
            }
        }
        DofMap { free_of, vertex_of }
    }

    pub fn n_free(&self) -> usize {
        self.vertex_of.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.free_of.len()
    }

    pub fn free_index(&self, vertex: usize) -> Option<usize> {
        self.free_of[vertex]
    }

    pub fn gather(&self, v: &DofVector) -> Vec<f64> {
        self.vertex_of.iter().map(|&i| v.0[i]).collect()
    }

    pub fn scatter(&self, free: &[f64]) -> DofVector {
        let mut out = DofVector::zeros(self.n_vertices());
        for (k, &v) in self.vertex_of.iter().enumerate() {
            out.0[v] = free[k];
        }
        out
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            vals: vec![1.0; n],
        }
    }

    /// Sum duplicate entries of `(row, col, value)` triplets.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[row.clone()].binary_search(&j) {
            Ok(k) => self.vals[row.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.col_idx[k]];
            }
            y[i] = s;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.vals.iter_mut().for_each(|v| *v *= factor);
    }

    fn max_asymmetry(&self) -> (f64, f64) {
        let mut amax = 0.0f64;
        let mut dmax = 0.0f64;
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                amax = amax.max(self.vals[k].abs());
                dmax = dmax.max((self.vals[k] - self.get(j, i)).abs());
            }
        }
        (dmax, amax)
    }
}

/// Symmetric matrix with positive diagonal over the free dofs of a [`DofMap`].
#[derive(Debug, Clone)]
pub struct SparseSpd {
    matrix: CsrMatrix,
    dofs: DofMap,
}

impl SparseSpd {
    /// Rejects matrices that are not symmetric to 1e-12 relative or that
    /// have a non-positive diagonal entry.
    pub fn new(matrix: CsrMatrix, dofs: DofMap) -> Result<Self> {
        if matrix.dim() != dofs.n_free() {
            return Err(Error::NotSpd(format!(
                "matrix dimension {} does not match {} free dofs",
                matrix.dim(),
                dofs.n_free()
            )));
        }
        let (asym, amax) = matrix.max_asymmetry();
        if asym > 1e-12 * amax {
            return Err(Error::NotSpd(format!(
                "asymmetry {asym:e} relative to max entry {amax:e}"
            )));
        }
        if let Some(i) = matrix.diagonal().iter().position(|&d| !(d > 0.0)) {
            return Err(Error::NotSpd(format!("diagonal entry {i} is not positive")));
        }
        Ok(SparseSpd { matrix, dofs })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    /// `K x` on the free dofs, zero on constrained ones.
    pub fn apply(&self, x: &DofVector) -> DofVector {
        let xf = self.dofs.gather(x);
        let mut yf = vec![0.0; xf.len()];
        self.matrix.mul_vec(&xf, &mut yf);
        self.dofs.scatter(&yf)
    }
}

/// Rotated gradient: `curl (phi e_z) = (d phi/dy, -d phi/dx)`.
#[inline]
pub fn rot(g: Vec2) -> Vec2 {
    [g[1], -g[0]]
}

/// `B = curl A` on element `e`.
pub fn element_curl(mesh: &Mesh, a: &DofVector, e: usize) -> Vec2 {
    let tri = mesh.triangles[e];
    let g = &mesh.grads[e];
    let mut out = [0.0; 2];
    for k in 0..3 {
        let c = rot(g[k]);
        out[0] += a.0[tri[k]] * c[0];
        out[1] += a.0[tri[k]] * c[1];
    }
    out
}

pub fn curl_field(mesh: &Mesh, a: &DofVector) -> Vec<Vec2> {
    (0..mesh.n_elements())
        .map(|e| element_curl(mesh, a, e))
        .collect()
}

/// Precomputed sparsity pattern for repeated assembly on one mesh.
#[derive(Debug, Clone)]
pub struct Assembler {
    pattern: CsrMatrix,
    dofs: DofMap,
    /// Value slot of each local pair `(i, j)` per element, `None` when either
    /// vertex is constrained.
    slots: Vec<[Option<usize>; 9]>,
}

impl Assembler {
    pub fn new(mesh: &Mesh, dofs: &DofMap) -> Self {
        let mut triplets = Vec::with_capacity(9 * mesh.n_elements());
        for tri in &mesh.triangles {
            for &vi in tri {
                for &vj in tri {
                    if let (Some(i), Some(j)) = (dofs.free_index(vi), dofs.free_index(vj)) {
                        triplets.push((i, j, 0.0));
                    }
                }
            }
        }
        let pattern = CsrMatrix::from_triplets(dofs.n_free(), triplets);
        let slots = mesh
            .triangles
            .iter()
            .map(|tri| {
                let mut s = [None; 9];
                for a in 0..3 {
                    for b in 0..3 {
                        if let (Some(i), Some(j)) =
                            (dofs.free_index(tri[a]), dofs.free_index(tri[b]))
                        {
                            let row = pattern.row_ptr[i]..pattern.row_ptr[i + 1];
                            let k = pattern.col_idx[row.clone()].binary_search(&j).unwrap();
                            s[3 * a + b] = Some(row.start + k);
                        }
                    }
                }
                s
            })
            .collect();
        Assembler {
            pattern,
            dofs: dofs.clone(),
            slots,
        }
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    /// `(T curl u, curl w)` with one tensor per element.
    pub fn tensor_stiffness(&self, mesh: &Mesh, tensors: &[Tensor2]) -> Result<SparseSpd> {
        check_len(mesh, tensors.len())?;
        let mut m = self.pattern.clone();
        for e in 0..mesh.n_elements() {
            let t = &tensors[e];
            let c = mesh.grads[e].map(rot);
            let area = mesh.areas[e];
            for a in 0..3 {
                let tc = [
                    t[0][0] * c[a][0] + t[0][1] * c[a][1],
                    t[1][0] * c[a][0] + t[1][1] * c[a][1],
                ];
                for b in 0..3 {
                    if let Some(k) = self.slots[e][3 * a + b] {
                        m.vals[k] += area * dot(tc, c[b]);
                    }
                }
            }
        }
        SparseSpd::new(m, self.dofs.clone())
    }

    /// `(nu curl u, curl w)` with a diagonal weight `diag(nu_x, nu_y)` per
    /// element.
    pub fn stiffness(&self, mesh: &Mesh, nu: &[Vec2]) -> Result<SparseSpd> {
        check_len(mesh, nu.len())?;
        for (element, n) in nu.iter().enumerate() {
            if let Some(&value) = n.iter().find(|v| !(**v > 0.0)) {
                return Err(Error::NonPositiveWeight { element, value });
            }
        }
        let tensors: Vec<Tensor2> = nu.iter().map(|n| [[n[0], 0.0], [0.0, n[1]]]).collect();
        self.tensor_stiffness(mesh, &tensors)
    }
}

fn check_len(mesh: &Mesh, n: usize) -> Result<()> {
    if n != mesh.n_elements() {
        Err(Error::MeshMismatch {
            expected: mesh.n_elements(),
            actual: n,
        })
    } else {
        Ok(())
    }
}

/// Weighted curl-curl stiffness with homogeneous Dirichlet conditions on the
/// mesh boundary eliminated.
pub fn assemble_stiffness(mesh: &Mesh, nu: &[Vec2]) -> Result<SparseSpd> {
    Assembler::new(mesh, &DofMap::new(mesh)).stiffness(mesh, nu)
}

/// `l1(w) = (nu B_x, curl w)` over all vertices.
pub fn assemble_rhs_b(mesh: &Mesh, nu: &[Vec2], bx: &[Vec2]) -> Result<DofVector> {
    check_len(mesh, nu.len())?;
    check_len(mesh, bx.len())?;
    let mut out = DofVector::zeros(mesh.n_vertices());
    for e in 0..mesh.n_elements() {
        let weighted = [nu[e][0] * bx[e][0], nu[e][1] * bx[e][1]];
        scatter_curl(mesh, e, weighted, &mut out);
    }
    Ok(out)
}

/// `l2(w) = (H_x, curl w) - (J, w)` over all vertices.
pub fn assemble_rhs_h_j(mesh: &Mesh, hx: &[Vec2], j: &[f64]) -> Result<DofVector> {
    check_len(mesh, hx.len())?;
    check_len(mesh, j.len())?;
    let mut out = DofVector::zeros(mesh.n_vertices());
    for e in 0..mesh.n_elements() {
        scatter_curl(mesh, e, hx[e], &mut out);
        if j[e] != 0.0 {
            let share = j[e] * mesh.areas[e] / 3.0;
            for &v in &mesh.triangles[e] {
                out.0[v] -= share;
            }
        }
    }
    Ok(out)
}

#[inline]
fn scatter_curl(mesh: &Mesh, e: usize, field: Vec2, out: &mut DofVector) {
    let area = mesh.areas[e];
    let tri = mesh.triangles[e];
    for k in 0..3 {
        out.0[tri[k]] += area * dot(field, rot(mesh.grads[e][k]));
    }
}

/// Weak Ampere residual `(H, curl w) - (J, w)` on the free dofs, relative to
/// the larger of the two terms' norms.
pub fn weak_ampere_residual(mesh: &Mesh, dofs: &DofMap, h: &[Vec2], j: &[f64]) -> Result<f64> {
    let zero_j = vec![0.0; j.len()];
    let zero_h = vec![[0.0; 2]; h.len()];
    let r = dofs.gather(&assemble_rhs_h_j(mesh, h, j)?);
    let h_term = dofs.gather(&assemble_rhs_h_j(mesh, h, &zero_j)?);
    let j_term = dofs.gather(&assemble_rhs_h_j(mesh, &zero_h, j)?);
    let n = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = n(&h_term).max(n(&j_term));
    Ok(if scale > 0.0 { n(&r) / scale } else { 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Relative residual target `||b - K x|| <= tol ||b||`.
    pub tol: f64,
    /// `None` picks `10 n + 100`.
    pub max_iterations: Option<usize>,
}

impl CgOptions {
    pub fn with_tol(tol: f64) -> Self {
        CgOptions {
            tol,
            max_iterations: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub rel_residual: f64,
    pub converged: bool,
}

/// Jacobi-preconditioned conjugate gradients, starting from `x`.
pub fn pcg(a: &CsrMatrix, b: &[f64], x: &mut [f64], opts: &CgOptions) -> CgStats {
    let n = a.dim();
    let max_it = opts.max_iterations.unwrap_or(10 * n + 100);
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return CgStats {
            iterations: 0,
            rel_residual: 0.0,
            converged: true,
        };
    }
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
    let mut r = vec![0.0; n];
    a.mul_vec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut rel = norm(&r) / bnorm;
    if rel <= opts.tol {
        return CgStats {
            iterations: 0,
            rel_residual: rel,
            converged: true,
        };
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for it in 1..=max_it {
        a.mul_vec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return CgStats {
                iterations: it,
                rel_residual: rel,
                converged: false,
            };
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rel = norm(&r) / bnorm;
        if rel <= opts.tol {
            return CgStats {
                iterations: it,
                rel_residual: rel,
                converged: true,
            };
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    CgStats {
        iterations: max_it,
        rel_residual: rel,
        converged: false,
    }
}

/// Solve `K x = rhs` on the free dofs; constrained entries of the result are
/// zero.
pub fn solve_spd(m: &SparseSpd, rhs: &DofVector, tol: f64) -> Result<DofVector> {
    solve_spd_from(m, rhs, None, &CgOptions::with_tol(tol)).map(|(x, _)| x)
}

/// As [`solve_spd`], warm-started from `x0` when given.
pub fn solve_spd_from(
    m: &SparseSpd,
    rhs: &DofVector,
    x0: Option<&DofVector>,
    opts: &CgOptions,
) -> Result<(DofVector, CgStats)> {
    if !(opts.tol > 0.0) {
        return Err(Error::Config(format!(
            "solver tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let b = m.dofs.gather(rhs);
    let mut x = match x0 {
        Some(v) => m.dofs.gather(v),
        None => vec![0.0; b.len()],
    };
    let stats = pcg(&m.matrix, &b, &mut x, opts);
    if !stats.converged {
        return Err(Error::NoConvergence {
            iterations: stats.iterations,
            residual: stats.rel_residual,
        });
    }
    Ok((m.dofs.scatter(&x), stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Rect, Region, RegionLayout};
    use crate::mesh::{triangulate, MeshOptions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square(h: f64) -> Mesh {
        triangulate(
            &RegionLayout::empty(Rect::new(0.0, 1.0, 0.0, 1.0)),
            &MeshOptions::uniform(h),
        )
        .unwrap()
    }

    fn reference_triangle() -> Mesh {
        Mesh::from_parts(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![Region::Air],
            vec![false; 3],
        )
        .unwrap()
    }

    #[test]
    fn curl_of_linear_fields() {
        let m = reference_triangle();
        let c = DofVector(vec![2.5; 3]);
        assert_eq!(element_curl(&m, &c, 0), [0.0, 0.0]);
        let x = DofVector(m.vertices.iter().map(|v| v[0]).collect());
        assert_eq!(element_curl(&m, &x, 0), [0.0, -1.0]);
        let y = DofVector(m.vertices.iter().map(|v| v[1]).collect());
        assert_eq!(element_curl(&m, &y, 0), [1.0, 0.0]);
    }

    #[test]
    fn interior_diagonal_is_four() {
        let m = square(0.5);
        let k = assemble_stiffness(&m, &vec![[1.0, 1.0]; m.n_elements()]).unwrap();
        assert_eq!(k.matrix().dim(), 1);
        assert!((k.matrix().get(0, 0) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn doubling_weights_doubles_entries() {
        let m = square(0.25);
        let k1 = assemble_stiffness(&m, &vec![[1.0, 3.0]; m.n_elements()]).unwrap();
        let k2 = assemble_stiffness(&m, &vec![[2.0, 6.0]; m.n_elements()]).unwrap();
        let mut scaled = k1.matrix().clone();
        scaled.scale(2.0);
        assert_eq!(&scaled, k2.matrix());
    }

    #[test]
    fn constants_in_kernel_without_constraints() {
        let m = square(0.2);
        let dofs = DofMap::unconstrained(m.n_vertices());
        let k = Assembler::new(&m, &dofs)
            .stiffness(&m, &vec![[1.7, 0.3]; m.n_elements()])
            .unwrap();
        let ones = DofVector(vec![1.0; m.n_vertices()]);
        assert!(k.apply(&ones).0.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn non_positive_weight_is_rejected() {
        let m = square(0.5);
        let mut nu = vec![[1.0, 1.0]; m.n_elements()];
        nu[3] = [1.0, 0.0];
        assert!(matches!(
            assemble_stiffness(&m, &nu),
            Err(Error::NonPositiveWeight { element: 3, .. })
        ));
    }

    #[test]
    fn rhs_b_hand_assembly() {
        let m = reference_triangle();
        let rhs = assemble_rhs_b(&m, &[[1.0, 1.0]], &[[1.0, 0.0]]).unwrap();
        // gradients (-1,-1), (1,0), (0,1); rot g = (g_y, -g_x); area 1/2
        // entries 1/2 * (B . rot g) = 1/2 * g_y
        assert_eq!(rhs.0, vec![-0.5, 0.0, 0.5]);
        assert_eq!(
            assemble_rhs_b(&m, &[[1.0, 1.0]], &[[0.0, 0.0]]).unwrap().0,
            vec![0.0; 3]
        );
    }

    #[test]
    fn rhs_load_vector() {
        let m = reference_triangle();
        let r = assemble_rhs_h_j(&m, &[[0.0, 0.0]], &[1.0]).unwrap();
        for v in r.0 {
            assert!((v + 0.5 / 3.0).abs() < 1e-15);
        }
        assert_eq!(
            assemble_rhs_h_j(&m, &[[0.0, 0.0]], &[0.0]).unwrap().0,
            vec![0.0; 3]
        );
    }

    #[test]
    fn manufactured_ampere_field_has_small_residual() {
        // H = (-y/2, x/2) has curl_z H = 1
        let m = square(0.05);
        let h: Vec<Vec2> = (0..m.n_elements())
            .map(|e| {
                let c = m.centroid(e);
                [-0.5 * c[1], 0.5 * c[0]]
            })
            .collect();
        let j = vec![1.0; m.n_elements()];
        let r = assemble_rhs_h_j(&m, &h, &j).unwrap();
        let dofs = DofMap::new(&m);
        let free = dofs.gather(&r);
        let max = free.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        // element-centroid sampling of a linear field is exact in the weak form
        assert!(max < 1e-15, "max residual {max}");
    }

    #[test]
    fn cg_identity() {
        let mut x = vec![0.0; 4];
        let b = vec![1.0, -2.0, 3.0, 0.5];
        let s = pcg(
            &CsrMatrix::identity(4),
            &b,
            &mut x,
            &CgOptions::with_tol(1e-14),
        );
        assert!(s.converged);
        assert_eq!(x, b);
    }

    #[test]
    fn cg_recovers_known_vector() {
        let m = square(0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let nu: Vec<Vec2> = (0..m.n_elements())
            .map(|_| [rng.gen_range(0.5..5.0), rng.gen_range(0.5..5.0)])
            .collect();
        let k = assemble_stiffness(&m, &nu).unwrap();
        let dofs = k.dofs().clone();
        let xf: Vec<f64> = (0..dofs.n_free())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let x = dofs.scatter(&xf);
        let b = k.apply(&x);
        let sol = solve_spd(&k, &b, 1e-12).unwrap();
        let err = sol
            .0
            .iter()
            .zip(&x.0)
            .fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
        assert!(err < 1e-8, "max error {err}");
    }

    #[test]
    fn asymmetric_matrix_is_rejected() {
        let m = CsrMatrix::from_triplets(2, vec![(0, 0, 2.0), (0, 1, 1.0), (1, 1, 2.0)]);
        assert!(matches!(
            SparseSpd::new(m, DofMap::unconstrained(2)),
            Err(Error::NotSpd(_))
        ));
        let m = CsrMatrix::from_triplets(2, vec![(0, 0, -1.0), (1, 1, 2.0)]);
        assert!(SparseSpd::new(m, DofMap::unconstrained(2)).is_err());
    }

    #[test]
    fn rayleigh_quotients_are_positive() {
        let m = square(0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let nu: Vec<Vec2> = (0..m.n_elements())
            .map(|_| [rng.gen_range(1e-3..1e3), rng.gen_range(1e-3..1e3)])
            .collect();
        let k = assemble_stiffness(&m, &nu).unwrap();
        let n = k.dofs().n_free();
        let mut y = vec![0.0; n];
        for _ in 0..100 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            k.matrix().mul_vec(&x, &mut y);
            let q: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
            assert!(q > 0.0);
        }
    }

    #[test]
    fn linear_field_is_reproduced() {
        // A = 2x + 3y is harmonic; impose it on the boundary through a lift
        let m = square(0.1);
        let exact: Vec<f64> = m.vertices.iter().map(|v| 2.0 * v[0] + 3.0 * v[1]).collect();
        let lift = DofVector(
            exact
                .iter()
                .zip(&m.boundary)
                .map(|(&a, &b)| if b { a } else { 0.0 })
                .collect(),
        );
        let nu = vec![[4.0, 4.0]; m.n_elements()];
        let k = assemble_stiffness(&m, &nu).unwrap();
        // K A_0 = -K_fb A_b  <=>  l1 with B_x = -curl(lift)
        let b_lift: Vec<Vec2> = curl_field(&m, &lift)
            .into_iter()
            .map(|b| [-b[0], -b[1]])
            .collect();
        let rhs = assemble_rhs_b(&m, &nu, &b_lift).unwrap();
        let a0 = solve_spd(&k, &rhs, 1e-13).unwrap();
        for v in 0..m.n_vertices() {
            let a = a0.0[v] + lift.0[v];
            assert!((a - exact[v]).abs() < 1e-10);
        }
    }
}
