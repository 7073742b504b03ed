use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::par::Execution;

/// Simplicial mesh of the box ∏[0, Lᵢ], each cell split into N! Kuhn
/// simplices sharing the cell's main diagonal. Uniform 2× refinement of a
/// Kuhn mesh produces a refinement of the coarse simplices, so the P1
/// spaces are nested.
#[derive(Debug, Clone)]
pub struct BoxMesh {
    dim: usize,
    extents: Vec<f64>,
    subdivisions: Vec<usize>,
    coords: Vec<f64>,
    simplices: Vec<usize>,
    volumes: Vec<f64>,
    // per simplex: (dim + 1) gradients of the barycentric coordinates
    basis_grads: Vec<f64>,
    boundary: Vec<bool>,
    interior: Vec<usize>,
    interior_slot: Vec<Option<usize>>,
    exec: Execution,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 1 {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// Builds the mesh for N ∈ {2, 3}, extents Lᵢ > 0 and mᵢ ≥ 2 cells per axis.
pub fn build_mesh(dim: usize, extents: &[f64], subdivisions: &[usize]) -> Result<BoxMesh> {
    if dim != 2 && dim != 3 {
        return Err(Error::Config(format!("mesh dimension must be 2 or 3, got {dim}")));
    }
    if extents.len() != dim || subdivisions.len() != dim {
        return Err(Error::Config(format!(
            "mesh needs {dim} extents and subdivisions, got {} and {}",
            extents.len(),
            subdivisions.len()
        )));
    }
    if let Some(l) = extents.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
        return Err(Error::Config(format!("mesh extent {l} must be positive")));
    }
    if let Some(m) = subdivisions.iter().find(|m| **m < 2) {
        return Err(Error::Config(format!("mesh subdivision {m} must be at least 2")));
    }

    let counts: Vec<usize> = subdivisions.iter().map(|m| m + 1).collect();
    let n_vertices: usize = counts.iter().product();
    let flat = |multi: &[usize]| -> usize {
        let mut idx = 0;
        for axis in (0..dim).rev() {
            idx = idx * counts[axis] + multi[axis];
        }
        idx
    };
    let unflat = |mut idx: usize| -> Vec<usize> {
        let mut multi = vec![0; dim];
        for axis in 0..dim {
            multi[axis] = idx % counts[axis];
            idx /= counts[axis];
        }
        multi
    };

    let mut coords = Vec::with_capacity(n_vertices * dim);
    let mut boundary = Vec::with_capacity(n_vertices);
    for v in 0..n_vertices {
        let multi = unflat(v);
        for axis in 0..dim {
            coords.push(extents[axis] * multi[axis] as f64 / subdivisions[axis] as f64);
        }
        boundary.push((0..dim).any(|a| multi[a] == 0 || multi[a] == subdivisions[a]));
    }

    let perms = permutations(dim);
    let n_cells: usize = subdivisions.iter().product();
    let mut simplices = Vec::with_capacity(n_cells * perms.len() * (dim + 1));
    for cell in 0..n_cells {
        let mut corner = vec![0; dim];
        let mut c = cell;
        for axis in 0..dim {
            corner[axis] = c % subdivisions[axis];
            c /= subdivisions[axis];
        }
        for perm in &perms {
            let mut path = vec![flat(&corner)];
            let mut cur = corner.clone();
            for &axis in perm {
                cur[axis] += 1;
                path.push(flat(&cur));
            }
            simplices.extend(path);
        }
    }

    let mut mesh = BoxMesh {
        dim,
        extents: extents.to_vec(),
        subdivisions: subdivisions.to_vec(),
        coords,
        simplices,
        volumes: Vec::new(),
        basis_grads: Vec::new(),
        interior: (0..n_vertices).filter(|&v| !boundary[v]).collect(),
        interior_slot: vec![None; n_vertices],
        boundary,
        exec: Execution::default(),
    };
    for (slot, &v) in mesh.interior.iter().enumerate() {
        mesh.interior_slot[v] = Some(slot);
    }
    mesh.orient_and_precompute()?;
    Ok(mesh)
}

fn factorial(n: usize) -> f64 {
    (1..=n).product::<usize>() as f64
}

impl BoxMesh {
    fn edge_matrix(&self, k: usize) -> DMatrix<f64> {
        let d = self.dim;
        let s = self.simplex(k);
        let v0 = self.vertex(s[0]);
        DMatrix::from_fn(d, d, |row, col| self.vertex(s[col + 1])[row] - v0[row])
    }

    /// Flips odd Kuhn simplices to positive orientation and caches volumes
    /// and barycentric gradients.
    fn orient_and_precompute(&mut self) -> Result<()> {
        let d = self.dim;
        let n = self.n_simplices();
        self.volumes = Vec::with_capacity(n);
        self.basis_grads = Vec::with_capacity(n * (d + 1) * d);
        for k in 0..n {
            let mut det = self.edge_matrix(k).determinant();
            if det < 0.0 {
                let base = k * (d + 1);
                self.simplices.swap(base + d - 1, base + d);
                det = -det;
            }
            if !(det > 0.0) {
                return Err(Error::Numerical(format!("degenerate simplex {k}")));
            }
            self.volumes.push(det / factorial(d));
            let inv = self
                .edge_matrix(k)
                .try_inverse()
                .ok_or_else(|| Error::Numerical(format!("singular simplex {k}")))?;
            // ∇λ_j = row (j−1) of J⁻¹ for j ≥ 1, ∇λ_0 = −Σ_j ∇λ_j
            let mut grads = vec![0.0; (d + 1) * d];
            for j in 1..=d {
                for c in 0..d {
                    grads[j * d + c] = inv[(j - 1, c)];
                    grads[c] -= inv[(j - 1, c)];
                }
            }
            self.basis_grads.extend(grads);
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents
    }

    pub fn subdivisions(&self) -> &[usize] {
        &self.subdivisions
    }

    pub fn n_vertices(&self) -> usize {
        self.boundary.len()
    }

    pub fn n_simplices(&self) -> usize {
        self.simplices.len() / (self.dim + 1)
    }

    pub fn vertex(&self, v: usize) -> &[f64] {
        &self.coords[v * self.dim..(v + 1) * self.dim]
    }

    pub fn simplex(&self, k: usize) -> &[usize] {
        &self.simplices[k * (self.dim + 1)..(k + 1) * (self.dim + 1)]
    }

    pub fn volume(&self, k: usize) -> f64 {
        self.volumes[k]
    }

    /// Gradient of the barycentric coordinate of local vertex `j` on simplex `k`.
    pub fn basis_gradient(&self, k: usize, j: usize) -> &[f64] {
        let d = self.dim;
        let base = k * (d + 1) * d + j * d;
        &self.basis_grads[base..base + d]
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    /// Interior vertices in increasing index order.
    pub fn interior_vertices(&self) -> &[usize] {
        &self.interior
    }

    /// Position of vertex `v` in [`Self::interior_vertices`].
    pub fn interior_slot(&self, v: usize) -> Option<usize> {
        self.interior_slot[v]
    }

    /// |Ω| = ∏ Lᵢ.
    pub fn domain_volume(&self) -> f64 {
        self.extents.iter().product()
    }

    /// Physical point with barycentric coordinates `bary` on simplex `k`.
    pub fn point(&self, k: usize, bary: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (&v, &l) in self.simplex(k).iter().zip(bary) {
            for (o, c) in out.iter_mut().zip(self.vertex(v)) {
                *o += l * c;
            }
        }
    }

    /// Unique undirected edges as (low, high) vertex pairs.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for k in 0..self.n_simplices() {
            let s = self.simplex(k);
            for i in 0..s.len() {
                for j in i + 1..s.len() {
                    edges.push((s[i].min(s[j]), s[i].max(s[j])));
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    pub fn execution(&self) -> Execution {
        self.exec
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }
}
