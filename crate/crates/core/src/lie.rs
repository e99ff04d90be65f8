//! Compact-type Lie algebra data with a fixed bi-invariant inner product.
//!
//! An algebra is stored through its structure constants relative to a basis
//! that is orthonormal for the bi-invariant inner product `b`, so `b` itself
//! is always the Euclidean dot product in coordinates.  Other normalizations
//! of `b` are reached through [`LieAlgebra::with_metric_scale`], which
//! rescales the orthonormal basis and hence the constants.
//!
//! Each algebra also carries the diameter of its associated compact group
//! with the metric induced by `b`: tori for abelian algebras, the 3-sphere of
//! radius 2 for `su(2)`, its antipodal quotient for `so(3)`, and Pythagorean
//! combination for direct sums.

use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{orthonormalize, BivectorIndex, Tensor3, RANK_TOL};

/// Defect threshold for [`LieAlgebra::validate`].
pub const STRUCTURE_TOL: f64 = 1e-12;

/// A finite-dimensional real Lie algebra with structure constants in a
/// `b`-orthonormal basis.
#[derive(Clone, Debug)]
pub struct LieAlgebra {
    name: String,
    dim: usize,
    /// `constants.get(a, b, c)` is the coefficient of `e_c` in `[e_a, e_b]`.
    constants: Tensor3,
    group_diameter: f64,
}

impl LieAlgebra {
    /// Abelian algebra of rank `r`; the group is the flat torus with all
    /// circle factors of circumference `2 pi`.
    pub fn abelian(r: usize) -> Result<Self> {
        if r == 0 {
            return Err(Error::Input("abelian rank must be positive".into()));
        }
        Ok(LieAlgebra {
            name: format!("abelian:{r}"),
            dim: r,
            constants: Tensor3::zeros(r),
            group_diameter: PI * (r as f64).sqrt(),
        })
    }

    /// `su(2)` with `[e1,e2] = e3` cyclically; the group is the 3-sphere of
    /// radius 2 (sectional curvature 1/4 for this normalization of `b`).
    pub fn su2() -> Self {
        LieAlgebra {
            name: "su2".into(),
            dim: 3,
            constants: epsilon_constants(),
            group_diameter: 2.0 * PI,
        }
    }

    /// `so(3)`: same constants as `su(2)`, but the group is the antipodal
    /// quotient of the radius-2 sphere, which halves the diameter.
    pub fn so3() -> Self {
        LieAlgebra {
            name: "so3".into(),
            dim: 3,
            constants: epsilon_constants(),
            group_diameter: PI,
        }
    }

    /// Orthogonal direct sum.  Its group is the metric product, so the
    /// diameter combines Pythagorean-style.
    pub fn direct_sum(a: &LieAlgebra, b: &LieAlgebra) -> Self {
        let dim = a.dim + b.dim;
        let mut constants = Tensor3::zeros(dim);
        for (offset, part) in [(0usize, a), (a.dim, b)] {
            for i in 0..part.dim {
                for j in 0..part.dim {
                    for k in 0..part.dim {
                        constants.set(offset + i, offset + j, offset + k, part.constants.get(i, j, k));
                    }
                }
            }
        }
        LieAlgebra {
            name: format!("sum:{}+{}", a.name, b.name),
            dim,
            constants,
            group_diameter: a.group_diameter.hypot(b.group_diameter),
        }
    }

    /// Rescale the bi-invariant metric `b -> s^2 b`.  In the new orthonormal
    /// basis the structure constants shrink by `1/s` and group distances grow
    /// by `s`.
    pub fn with_metric_scale(&self, s: f64) -> Result<Self> {
        if !(s > 0.0) {
            return Err(Error::Input(format!("metric scale must be positive, got {s}")));
        }
        let mut constants = Tensor3::zeros(self.dim);
        for a in 0..self.dim {
            for b in 0..self.dim {
                for c in 0..self.dim {
                    constants.set(a, b, c, self.constants.get(a, b, c) / s);
                }
            }
        }
        Ok(LieAlgebra {
            name: self.name.clone(),
            dim: self.dim,
            constants,
            group_diameter: self.group_diameter * s,
        })
    }

    /// Parse the algebra grammar: `abelian:<r>`, `su2`, `so3`, or
    /// `sum:<a>+<b>[+<c>...]` with atomic summands.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if let Some(rest) = spec.strip_prefix("sum:") {
            let parts: Vec<&str> = rest.split('+').collect();
            if parts.len() < 2 {
                return Err(Error::Input(format!(
                    "sum algebra needs at least two summands, got '{spec}'"
                )));
            }
            let mut acc: Option<LieAlgebra> = None;
            for part in parts {
                if part.starts_with("sum:") {
                    return Err(Error::Input(
                        "nested sums are not supported; list all summands in one sum".into(),
                    ));
                }
                let alg = LieAlgebra::parse(part)?;
                acc = Some(match acc {
                    None => alg,
                    Some(prev) => LieAlgebra::direct_sum(&prev, &alg),
                });
            }
            return Ok(acc.expect("at least two summands"));
        }
        match spec {
            "su2" => Ok(LieAlgebra::su2()),
            "so3" => Ok(LieAlgebra::so3()),
            _ => {
                if let Some(r) = spec.strip_prefix("abelian:") {
                    let r: usize = r.parse().map_err(|_| {
                        Error::Input(format!("bad abelian rank in '{spec}'"))
                    })?;
                    LieAlgebra::abelian(r)
                } else {
                    Err(Error::Input(format!(
                        "unknown algebra '{spec}'; expected abelian:<r>, su2, so3, or sum:<a>+<b>"
                    )))
                }
            }
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Diameter of the associated compact group in the metric induced by `b`.
    pub fn group_diameter(&self) -> f64 {
        self.group_diameter
    }

    pub fn constants(&self) -> &Tensor3 {
        &self.constants
    }

    /// Bi-invariant inner product; the stored basis is orthonormal for it.
    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.dot(v)
    }

    /// `[e_a, e_b]` in coordinates.
    pub fn bracket_basis(&self, a: usize, b: usize) -> DVector<f64> {
        DVector::from_fn(self.dim, |c, _| self.constants.get(a, b, c))
    }

    /// `[u, v]` in coordinates.
    pub fn bracket(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        for a in 0..self.dim {
            if u[a] == 0.0 {
                continue;
            }
            for b in 0..self.dim {
                if v[b] == 0.0 {
                    continue;
                }
                let coeff = u[a] * v[b];
                for c in 0..self.dim {
                    out[c] += coeff * self.constants.get(a, b, c);
                }
            }
        }
        out
    }

    /// Matrix of `ad_u = [u, .]` acting on coordinates.
    pub fn ad_matrix(&self, u: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |c, b| {
            (0..self.dim).map(|a| u[a] * self.constants.get(a, b, c)).sum()
        })
    }

    /// The commutator subalgebra `[g, g]` as a subspace, spanned by all
    /// basis brackets.
    pub fn commutator_subalgebra(&self) -> Subspace {
        let mut spanning = Vec::new();
        for a in 0..self.dim {
            for b in (a + 1)..self.dim {
                spanning.push(self.bracket_basis(a, b));
            }
        }
        Subspace::from_spanning(self.dim, &spanning, RANK_TOL)
    }

    /// Curvature tensor of the bi-invariant metric:
    /// `R(u, v, w, z) = -1/4 b([u,v], [w,z])`, so that the sectional
    /// curvature `R(u, v, v, u)` of an orthonormal pair is `|[u,v]|^2 / 4`.
    pub fn biinvariant_curvature(
        &self,
        u: &DVector<f64>,
        v: &DVector<f64>,
        w: &DVector<f64>,
        z: &DVector<f64>,
    ) -> f64 {
        -0.25 * self.inner(&self.bracket(u, v), &self.bracket(w, z))
    }

    /// Curvature operator of the bi-invariant metric on bivectors of the
    /// orthonormal basis: the Gram matrix `1/4 b([e_a,e_b], [e_c,e_d])`,
    /// which is positive semidefinite.
    pub fn curvature_operator(&self) -> DMatrix<f64> {
        let idx = BivectorIndex::new(self.dim);
        let brackets: Vec<DVector<f64>> = idx
            .pairs()
            .iter()
            .map(|&(a, b)| self.bracket_basis(a, b))
            .collect();
        DMatrix::from_fn(idx.len(), idx.len(), |p, q| {
            0.25 * brackets[p].dot(&brackets[q])
        })
    }

    /// Structural diagnostics: antisymmetry of the bracket, total
    /// antisymmetry of the lowered constants, and the Jacobi identity.
    pub fn validate(&self) -> AlgebraDiagnostics {
        let d = self.dim;
        let mut antisymmetry: f64 = 0.0;
        let mut total_antisymmetry: f64 = 0.0;
        let mut jacobi: f64 = 0.0;
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    let cab = self.constants.get(a, b, c);
                    antisymmetry = antisymmetry.max((cab + self.constants.get(b, a, c)).abs());
                    // Lowered constants with b = id: swap of the last two
                    // slots must flip the sign for ad-invariance.
                    total_antisymmetry =
                        total_antisymmetry.max((cab + self.constants.get(a, c, b)).abs());
                }
            }
        }
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for e in 0..d {
                        let mut sum = 0.0;
                        for f in 0..d {
                            sum += self.constants.get(a, b, f) * self.constants.get(f, c, e)
                                + self.constants.get(b, c, f) * self.constants.get(f, a, e)
                                + self.constants.get(c, a, f) * self.constants.get(f, b, e);
                        }
                        jacobi = jacobi.max(sum.abs());
                    }
                }
            }
        }
        AlgebraDiagnostics {
            antisymmetry,
            total_antisymmetry,
            jacobi,
        }
    }
}

/// Defects reported by [`LieAlgebra::validate`].
#[derive(Clone, Copy, Debug)]
pub struct AlgebraDiagnostics {
    pub antisymmetry: f64,
    pub total_antisymmetry: f64,
    pub jacobi: f64,
}

impl AlgebraDiagnostics {
    pub fn max_defect(&self) -> f64 {
        self.antisymmetry.max(self.total_antisymmetry).max(self.jacobi)
    }

    pub fn is_valid(&self) -> bool {
        self.max_defect() <= STRUCTURE_TOL
    }
}

fn epsilon_constants() -> Tensor3 {
    let mut c = Tensor3::zeros(3);
    for &(a, b, k, sign) in &[
        (0usize, 1usize, 2usize, 1.0),
        (1, 2, 0, 1.0),
        (2, 0, 1, 1.0),
        (1, 0, 2, -1.0),
        (2, 1, 0, -1.0),
        (0, 2, 1, -1.0),
    ] {
        c.set(a, b, k, sign);
    }
    c
}

/// A linear subspace of Euclidean `R^n`, stored through an orthonormal
/// basis.
#[derive(Clone, Debug)]
pub struct Subspace {
    ambient: usize,
    basis: Vec<DVector<f64>>,
}

impl Subspace {
    /// Span of `vectors` inside `R^ambient`, with near-dependent directions
    /// dropped at relative tolerance `tol`.
    pub fn from_spanning(ambient: usize, vectors: &[DVector<f64>], tol: f64) -> Self {
        Subspace {
            ambient,
            basis: orthonormalize(vectors, tol),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[DVector<f64>] {
        &self.basis
    }

    /// Orthogonal projection onto the subspace.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.ambient);
        for b in &self.basis {
            out += b * b.dot(v);
        }
        out
    }

    /// Distance from `v` to the subspace.
    pub fn distance(&self, v: &DVector<f64>) -> f64 {
        (v - self.project(v)).norm()
    }

    /// Orthogonal complement, built by sieving coordinate vectors.
    pub fn orthogonal_complement(&self) -> Subspace {
        let mut candidates = self.basis.clone();
        let split = candidates.len();
        for i in 0..self.ambient {
            candidates.push(DVector::from_fn(self.ambient, |j, _| {
                if i == j {
                    1.0
                } else {
                    0.0
                }
            }));
        }
        let full = orthonormalize(&candidates, RANK_TOL);
        Subspace {
            ambient: self.ambient,
            basis: full.into_iter().skip(split).collect(),
        }
    }
}
