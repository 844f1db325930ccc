//! Sparse symmetric system support for the two staggered fields.
//!
//! The sparsity pattern of each field is fixed between re-meshings, so it is
//! computed once per mesh together with per-element scatter positions; each
//! assembly then only writes values. Solves go through a sparse Cholesky
//! factorization by default, with a Jacobi-preconditioned conjugate gradient
//! backend as an alternative.

use crate::error::{Error, Result};
use nalgebra::DVector;
use nalgebra_sparse::{factorization::CscCholesky, CscMatrix};
use serde::{Deserialize, Serialize};

/// Compressed-row pattern plus, per element, the value index of every local
/// (row, col) pair in element-dof order.
#[derive(Debug, Clone)]
pub struct AssemblyPattern {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    /// scatter[e][i * n_loc + j] = position in the value array.
    pub scatter: Vec<Vec<u32>>,
}

impl AssemblyPattern {
    /// Builds the pattern from per-element global dof lists.
    pub fn build(n: usize, element_dofs: &[Vec<usize>]) -> Self {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for dofs in element_dofs {
            for &i in dofs {
                for &j in dofs {
                    rows[i].push(j);
                }
            }
        }
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        indptr.push(0);
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
            indices.extend_from_slice(row);
            indptr.push(indices.len());
        }
        let scatter = element_dofs
            .iter()
            .map(|dofs| {
                let mut map = Vec::with_capacity(dofs.len() * dofs.len());
                for &i in dofs {
                    let row = &indices[indptr[i]..indptr[i + 1]];
                    for &j in dofs {
                        let k = row.binary_search(&j).expect("dof in pattern");
                        map.push((indptr[i] + k) as u32);
                    }
                }
                map
            })
            .collect();
        AssemblyPattern {
            n,
            indptr,
            indices,
            scatter,
        }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }
}

/// Symmetric sparse matrix over a shared [`AssemblyPattern`].
#[derive(Debug, Clone)]
pub struct SparseSym<'a> {
    pub pattern: &'a AssemblyPattern,
    pub values: Vec<f64>,
}

impl<'a> SparseSym<'a> {
    pub fn zeros(pattern: &'a AssemblyPattern) -> Self {
        SparseSym {
            pattern,
            values: vec![0.0; pattern.nnz()],
        }
    }

    /// Adds a dense local matrix through the precomputed scatter map.
    pub fn add_local(&mut self, element: usize, local: &[f64]) {
        let map = &self.pattern.scatter[element];
        debug_assert_eq!(map.len(), local.len());
        for (pos, &v) in map.iter().zip(local) {
            self.values[*pos as usize] += v;
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = &self.pattern.indices[self.pattern.indptr[i]..self.pattern.indptr[i + 1]];
        match row.binary_search(&j) {
            Ok(k) => self.values[self.pattern.indptr[i] + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        let p = self.pattern;
        for i in 0..p.n {
            let mut acc = 0.0;
            for k in p.indptr[i]..p.indptr[i + 1] {
                acc += self.values[k] * x[p.indices[k]];
            }
            y[i] = acc;
        }
    }

    /// Largest relative row-wise asymmetry; zero for exactly symmetric values.
    pub fn symmetry_defect(&self) -> f64 {
        let p = self.pattern;
        let scale = self
            .values
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for i in 0..p.n {
            for k in p.indptr[i]..p.indptr[i + 1] {
                let j = p.indices[k];
                if j > i {
                    worst = worst.max((self.values[k] - self.get(j, i)).abs());
                }
            }
        }
        worst / scale
    }

    /// Dense copy for the small-instance oracles.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let p = self.pattern;
        let mut m = nalgebra::DMatrix::zeros(p.n, p.n);
        for i in 0..p.n {
            for k in p.indptr[i]..p.indptr[i + 1] {
                m[(i, p.indices[k])] = self.values[k];
            }
        }
        m
    }

    fn to_csc(&self) -> Result<CscMatrix<f64>> {
        // symmetric full storage: CSR arrays double as CSC arrays
        CscMatrix::try_from_csc_data(
            self.pattern.n,
            self.pattern.n,
            self.pattern.indptr.clone(),
            self.pattern.indices.clone(),
            self.values.clone(),
        )
        .map_err(|e| Error::Solve(format!("csc conversion: {e}")))
    }
}

/// Linear solver backend for the SPD systems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "backend")]
pub enum SolverBackend {
    /// Sparse Cholesky factorization (default).
    Cholesky,
    /// Jacobi-preconditioned conjugate gradients.
    Cg {
        #[serde(default = "default_cg_tol")]
        tol: f64,
        #[serde(default = "default_cg_iters")]
        max_iters: usize,
    },
}

fn default_cg_tol() -> f64 {
    1e-10
}

fn default_cg_iters() -> usize {
    50_000
}

impl Default for SolverBackend {
    fn default() -> Self {
        SolverBackend::Cholesky
    }
}

/// Solves the SPD system K x = b.
pub fn solve_spd(k: &SparseSym, b: &[f64], backend: SolverBackend) -> Result<Vec<f64>> {
    match backend {
        SolverBackend::Cholesky => {
            let csc = k.to_csc()?;
            let chol = CscCholesky::factor(&csc)
                .map_err(|e| Error::Solve(format!("cholesky factorization: {e:?}")))?;
            let rhs = DVector::from_column_slice(b);
            let x = chol.solve(&rhs);
            Ok(x.column(0).iter().copied().collect())
        }
        SolverBackend::Cg { tol, max_iters } => cg_jacobi(k, b, tol, max_iters),
    }
}

fn cg_jacobi(k: &SparseSym, b: &[f64], tol: f64, max_iters: usize) -> Result<Vec<f64>> {
    let n = b.len();
    let p_inv: Vec<f64> = (0..n)
        .map(|i| {
            let d = k.get(i, i);
            if d <= 0.0 {
                0.0
            } else {
                1.0 / d
            }
        })
        .collect();
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&p_inv).map(|(ri, pi)| ri * pi).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    for _ in 0..max_iters {
        k.mul_vec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(Error::Solve(
                "conjugate gradients: matrix not positive definite".into(),
            ));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm <= tol * bnorm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * p_inv[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solve(format!(
        "conjugate gradients did not reach {tol:.1e} in {max_iters} iterations"
    )))
}

/// One eliminated Dirichlet constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletDof {
    pub dof: usize,
    pub value: f64,
}

/// Row/column elimination with symmetric restoration.
///
/// Free rows move the known column contributions to the right-hand side;
/// constrained rows become identity with the prescribed value. The matrix
/// stays symmetric, so both backends apply.
pub fn apply_dirichlet(k: &mut SparseSym, f: &mut [f64], bcs: &[DirichletDof]) -> Result<()> {
    let n = k.pattern.n;
    let mut constrained = vec![false; n];
    let mut value = vec![0.0; n];
    for bc in bcs {
        if bc.dof >= n {
            return Err(Error::Boundary(format!(
                "dirichlet dof {} out of range (system size {n})",
                bc.dof
            )));
        }
        if constrained[bc.dof] && value[bc.dof] != bc.value {
            return Err(Error::Boundary(format!(
                "conflicting dirichlet values {} and {} on dof {}",
                value[bc.dof], bc.value, bc.dof
            )));
        }
        constrained[bc.dof] = true;
        value[bc.dof] = bc.value;
    }
    let p = k.pattern;
    for i in 0..n {
        if constrained[i] {
            for idx in p.indptr[i]..p.indptr[i + 1] {
                k.values[idx] = if p.indices[idx] == i { 1.0 } else { 0.0 };
            }
            f[i] = value[i];
        } else {
            for idx in p.indptr[i]..p.indptr[i + 1] {
                let j = p.indices[idx];
                if constrained[j] {
                    f[i] -= k.values[idx] * value[j];
                    k.values[idx] = 0.0;
                }
            }
        }
    }
    Ok(())
}
