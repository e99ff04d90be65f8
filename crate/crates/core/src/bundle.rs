//! Principal connections over a chart of the base, given through their
//! local connection form ("potential") `A`, and the derived curvature data.
//!
//! The curvature form is computed from the structure equation
//!
//! ```text
//! Omega_{mu nu} = d_mu A_nu - d_nu A_mu + [A_mu, A_nu]
//! ```
//!
//! with central finite differences for the derivative terms, optionally
//! Richardson-checked.  The eigenvalue criterion for collapsing metrics only
//! needs the image of `Omega` relative to the commutator subalgebra, which
//! [`Connection::anco_criterion`] measures on sample points.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BaseManifold;
use crate::lie::LieAlgebra;
use crate::linalg::BivectorIndex;

/// Relative finite-difference step for first derivatives of the potential.
pub const POTENTIAL_FD_STEP: f64 = 1e-5;

/// Relative step for the outer derivative in the Bianchi diagnostic.
pub const BIANCHI_FD_STEP: f64 = 1e-4;

/// One monomial term of a polynomial potential: contributes
/// `coeff * x^powers` to the `algebra_index` component of `A_mu`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolyTerm {
    pub mu: usize,
    pub algebra_index: usize,
    pub coeff: f64,
    pub powers: Vec<u32>,
}

/// Local connection form on the base chart.
#[derive(Clone, Debug)]
pub enum Potential {
    /// The trivial (product) connection.
    Zero,
    /// Polynomial coefficient table in chart coordinates.
    Polynomial(Vec<PolyTerm>),
    /// Circle-type potential over complex projective factors: factor `f`
    /// contributes `2 * weights[f]` times the standard area potential of
    /// that factor, valued in the first algebra basis direction.  With all
    /// fiber circles of circumference `2 pi`, integer weight `k` gives a
    /// bundle with Euler number `k` over the factor's projective line.
    KahlerCircle { weights: Vec<f64> },
}

/// A principal connection: base model, structure algebra, and potential.
#[derive(Clone, Debug)]
pub struct Connection {
    pub base: BaseManifold,
    pub algebra: LieAlgebra,
    pub potential: Potential,
    pub label: String,
}

/// Curvature form at one chart point, in coordinate and frame components.
#[derive(Clone, Debug)]
pub struct CurvatureForm {
    pairs: BivectorIndex,
    coord: Vec<DVector<f64>>,
    frame: Vec<DVector<f64>>,
}

impl CurvatureForm {
    /// `Omega(d_mu, d_nu)` with orientation sign handled.
    pub fn coord(&self, mu: usize, nu: usize) -> DVector<f64> {
        match self.pairs.index_of(mu, nu) {
            Some((idx, sign)) => &self.coord[idx] * sign,
            None => DVector::zeros(self.coord.first().map_or(0, |v| v.len())),
        }
    }

    /// `Omega(E_i, E_j)` in the orthonormal base frame.
    pub fn frame(&self, i: usize, j: usize) -> DVector<f64> {
        match self.pairs.index_of(i, j) {
            Some((idx, sign)) => &self.frame[idx] * sign,
            None => DVector::zeros(self.frame.first().map_or(0, |v| v.len())),
        }
    }

    pub fn pairs(&self) -> &BivectorIndex {
        &self.pairs
    }

    /// Frame components in pair order.
    pub fn frame_components(&self) -> &[DVector<f64>] {
        &self.frame
    }

    /// Largest frame component norm.
    pub fn max_frame_norm(&self) -> f64 {
        self.frame.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Verdict of the eigenvalue criterion's algebraic obstruction test.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriterionReport {
    /// True when the curvature form's image is orthogonal to the commutator
    /// subalgebra on every sample.
    pub holds: bool,
    /// Largest norm of a curvature component projected onto the commutator
    /// subalgebra.
    pub max_violation: f64,
    /// Dimension of the commutator subalgebra.
    pub commutator_dim: usize,
    /// Tolerance the verdict was taken at.
    pub tolerance: f64,
}

impl Connection {
    pub fn new(
        base: BaseManifold,
        algebra: LieAlgebra,
        potential: Potential,
        label: impl Into<String>,
    ) -> Result<Self> {
        let n = base.dim();
        let r = algebra.dim();
        match &potential {
            Potential::Zero => {}
            Potential::Polynomial(terms) => {
                for (idx, term) in terms.iter().enumerate() {
                    if term.mu >= n {
                        return Err(Error::Input(format!(
                            "potential term {idx} uses coordinate {} on a base of dimension {n}",
                            term.mu
                        )));
                    }
                    if term.algebra_index >= r {
                        return Err(Error::Input(format!(
                            "potential term {idx} uses algebra direction {} in an algebra of rank {r}",
                            term.algebra_index
                        )));
                    }
                    if term.powers.len() != n {
                        return Err(Error::Input(format!(
                            "potential term {idx} has {} exponents, expected {n}",
                            term.powers.len()
                        )));
                    }
                }
            }
            Potential::KahlerCircle { weights } => {
                let factors = projective_factors(&base)?;
                if weights.len() != factors.len() {
                    return Err(Error::Input(format!(
                        "{} weights for {} projective factors",
                        weights.len(),
                        factors.len()
                    )));
                }
                if r == 0 {
                    return Err(Error::Input("circle potential needs an algebra".into()));
                }
            }
        }
        Ok(Connection {
            base,
            algebra,
            potential,
            label: label.into(),
        })
    }

    /// Named experiment presets.
    ///
    /// * `flat`: trivial connection over the flat 2-torus, circle fiber.
    /// * `su2-demo`: `A = x^1 e_3 dx^2` over the flat 2-torus with
    ///   `su(2)` fibers; its curvature sits inside the commutator subalgebra.
    /// * `hopf`: weight-1 circle potential over `cp:1:4`; fiber scale 1
    ///   reproduces the round 3-sphere of radius 1.
    /// * `pkl:<k>:<l>`: circle potential with weights `(k, l)` over
    ///   `cp:1:4 * cp:2:4`.
    pub fn preset(name: &str) -> Result<Self> {
        let name = name.trim();
        if let Some(rest) = name.strip_prefix("pkl:") {
            let parts: Vec<&str> = rest.split(':').collect();
            let [k, l] = parts.as_slice() else {
                return Err(Error::Input(format!("expected pkl:<k>:<l>, got '{name}'")));
            };
            let k: f64 = k
                .parse()
                .map_err(|_| Error::Input(format!("bad weight '{k}' in '{name}'")))?;
            let l: f64 = l
                .parse()
                .map_err(|_| Error::Input(format!("bad weight '{l}' in '{name}'")))?;
            let base = BaseManifold::parse("product:cp:1:4*cp:2:4")?;
            return Connection::new(
                base,
                LieAlgebra::abelian(1)?,
                Potential::KahlerCircle { weights: vec![k, l] },
                name,
            );
        }
        match name {
            "flat" => Connection::new(
                BaseManifold::flat(2)?,
                LieAlgebra::abelian(1)?,
                Potential::Zero,
                name,
            ),
            "su2-demo" => Connection::new(
                BaseManifold::flat(2)?,
                LieAlgebra::su2(),
                Potential::Polynomial(vec![PolyTerm {
                    mu: 1,
                    algebra_index: 2,
                    coeff: 1.0,
                    powers: vec![1, 0],
                }]),
                name,
            ),
            "hopf" => Connection::new(
                BaseManifold::complex_projective(1, 4.0)?,
                LieAlgebra::abelian(1)?,
                Potential::KahlerCircle { weights: vec![1.0] },
                name,
            ),
            _ => Err(Error::Input(format!(
                "unknown preset '{name}'; expected flat, su2-demo, hopf, or pkl:<k>:<l>"
            ))),
        }
    }

    /// `count` seeded sample points in the inner half of the base chart box.
    pub fn sample_points(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        if count == 0 {
            return Err(Error::Input("need at least one sample point".into()));
        }
        let widths = self.base.chart_half_widths();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..count)
            .map(|_| {
                widths
                    .iter()
                    .map(|w| rng.random_range(-0.5 * w..0.5 * w))
                    .collect()
            })
            .collect())
    }

    /// Potential `A_mu(x)` for all chart directions.
    pub fn potential_at(&self, x: &[f64]) -> Result<Vec<DVector<f64>>> {
        self.base.check_point(x)?;
        let n = self.base.dim();
        let r = self.algebra.dim();
        let mut a = vec![DVector::zeros(r); n];
        match &self.potential {
            Potential::Zero => {}
            Potential::Polynomial(terms) => {
                for term in terms {
                    let mut value = term.coeff;
                    for (coord, pow) in x.iter().zip(&term.powers) {
                        value *= coord.powi(*pow as i32);
                    }
                    a[term.mu][term.algebra_index] += value;
                }
            }
            Potential::KahlerCircle { weights } => {
                let factors = projective_factors(&self.base)?;
                for ((offset, m), w) in factors.into_iter().zip(weights) {
                    let chunk = &x[offset..offset + 2 * m];
                    let u = 1.0 + chunk.iter().map(|v| v * v).sum::<f64>();
                    for p in 0..m {
                        let (xp, yp) = (chunk[2 * p], chunk[2 * p + 1]);
                        // 2w times the area potential (x dy - y dx) / (2u).
                        a[offset + 2 * p][0] += -w * yp / u;
                        a[offset + 2 * p + 1][0] += w * xp / u;
                    }
                }
            }
        }
        Ok(a)
    }

    /// Curvature form at `x` from the structure equation, with central
    /// differences of relative step [`POTENTIAL_FD_STEP`].
    pub fn curvature_form(&self, x: &[f64]) -> Result<CurvatureForm> {
        self.curvature_form_with_step(x, POTENTIAL_FD_STEP)
    }

    fn curvature_form_with_step(&self, x: &[f64], rel_step: f64) -> Result<CurvatureForm> {
        self.base.check_point(x)?;
        let n = self.base.dim();
        let widths = self.base.chart_half_widths();
        let a = self.potential_at(x)?;
        // d_mu A for every direction.
        let mut da = Vec::with_capacity(n);
        for mu in 0..n {
            let h = rel_step * widths[mu];
            let mut up = x.to_vec();
            up[mu] += h;
            let mut down = x.to_vec();
            down[mu] -= h;
            let (au, ad) = (self.potential_at(&up)?, self.potential_at(&down)?);
            let diff: Vec<DVector<f64>> = au
                .iter()
                .zip(&ad)
                .map(|(u, d)| (u - d) / (2.0 * h))
                .collect();
            da.push(diff);
        }
        let pairs = BivectorIndex::new(n);
        let mut coord = Vec::with_capacity(pairs.len());
        for &(mu, nu) in pairs.pairs() {
            let omega = &da[mu][nu] - &da[nu][mu] + self.algebra.bracket(&a[mu], &a[nu]);
            coord.push(omega);
        }
        let frame = self.base.orthonormal_frame_at(x)?;
        let mut frame_comps = Vec::with_capacity(pairs.len());
        for &(i, j) in pairs.pairs() {
            let mut acc = DVector::zeros(self.algebra.dim());
            for (idx, &(mu, nu)) in pairs.pairs().iter().enumerate() {
                let weight = frame[i][mu] * frame[j][nu] - frame[i][nu] * frame[j][mu];
                if weight != 0.0 {
                    acc += &coord[idx] * weight;
                }
            }
            frame_comps.push(acc);
        }
        Ok(CurvatureForm {
            pairs,
            coord,
            frame: frame_comps,
        })
    }

    /// Richardson consistency of the curvature derivatives: recompute with a
    /// halved step and return the largest extrapolated correction.  Small
    /// values certify the finite-difference step choice.
    pub fn curvature_richardson_defect(&self, x: &[f64]) -> Result<f64> {
        let full = self.curvature_form_with_step(x, POTENTIAL_FD_STEP)?;
        let half = self.curvature_form_with_step(x, 0.5 * POTENTIAL_FD_STEP)?;
        let mut worst = 0.0f64;
        for (a, b) in full.coord.iter().zip(&half.coord) {
            // Central differences have O(h^2) error, so the corrected value
            // is (4 b - a) / 3 and the defect is its distance from b.
            let defect = ((b - a) / 3.0).norm();
            worst = worst.max(defect);
        }
        Ok(worst)
    }

    /// Agreement between 4th- and 6th-order stencils for the potential's
    /// first derivatives: a smoothness certificate for chart data.
    pub fn smoothness_defect(&self, x: &[f64]) -> Result<f64> {
        self.base.check_point(x)?;
        let n = self.base.dim();
        let widths = self.base.chart_half_widths();
        let mut worst = 0.0f64;
        for mu in 0..n {
            let h = 1e-2 * widths[mu];
            let eval = |s: f64| -> Result<Vec<DVector<f64>>> {
                let mut p = x.to_vec();
                p[mu] += s;
                self.potential_at(&p)
            };
            let (m3, m2, m1, p1, p2, p3) = (
                eval(-3.0 * h)?,
                eval(-2.0 * h)?,
                eval(-h)?,
                eval(h)?,
                eval(2.0 * h)?,
                eval(3.0 * h)?,
            );
            for nu in 0..n {
                let fourth = (&m2[nu] - &p2[nu] + (&p1[nu] - &m1[nu]) * 8.0) / (12.0 * h);
                let sixth = ((&p3[nu] - &m3[nu]) + (&m2[nu] - &p2[nu]) * 9.0
                    + (&p1[nu] - &m1[nu]) * 45.0)
                    / (60.0 * h);
                worst = worst.max((fourth - sixth).norm());
            }
        }
        Ok(worst)
    }

    /// Splits every frame curvature component into its part inside the
    /// commutator subalgebra and the orthogonal rest.
    pub fn quotient_split(&self, x: &[f64]) -> Result<(Vec<DVector<f64>>, Vec<DVector<f64>>)> {
        let omega = self.curvature_form(x)?;
        let comm = self.algebra.commutator_subalgebra();
        let mut inside = Vec::with_capacity(omega.frame.len());
        let mut outside = Vec::with_capacity(omega.frame.len());
        for v in &omega.frame {
            let p = comm.project(v);
            outside.push(v - &p);
            inside.push(p);
        }
        Ok((inside, outside))
    }

    /// Algebraic obstruction test on sample points: the collapsing family
    /// admits almost nonnegative curvature operators exactly when the
    /// curvature form's image stays orthogonal to the commutator subalgebra.
    pub fn anco_criterion(&self, points: &[Vec<f64>], tolerance: f64) -> Result<CriterionReport> {
        let comm = self.algebra.commutator_subalgebra();
        let mut max_violation = 0.0f64;
        for x in points {
            let omega = self.curvature_form(x)?;
            for v in &omega.frame {
                max_violation = max_violation.max(comm.project(v).norm());
            }
        }
        Ok(CriterionReport {
            holds: max_violation <= tolerance,
            max_violation,
            commutator_dim: comm.dim(),
            tolerance,
        })
    }

    /// Gram matrix of the shrunken metric in the adapted frame
    /// (horizontal lifts of a base-orthonormal frame, then canonical
    /// vertical fields): `diag(I_n, t^2 I_r)`.
    pub fn shrunken_gram(&self, t: f64) -> DMatrix<f64> {
        let n = self.base.dim();
        let r = self.algebra.dim();
        let mut g = DMatrix::identity(n + r, n + r);
        for a in 0..r {
            g[(n + a, n + a)] = t * t;
        }
        g
    }

    /// Cyclic-sum Bianchi defect of the curvature form,
    /// `max |sum_cyc (d_mu Omega_{nu rho} + [A_mu, Omega_{nu rho}])|`,
    /// over coordinate triples.  Returns 0 for bases of dimension < 3.
    pub fn bianchi_defect(&self, x: &[f64]) -> Result<f64> {
        self.base.check_point(x)?;
        let n = self.base.dim();
        if n < 3 {
            return Ok(0.0);
        }
        let widths = self.base.chart_half_widths();
        let a = self.potential_at(x)?;
        // d_mu Omega for every direction, by differencing the curvature form.
        let mut domega: Vec<Vec<DVector<f64>>> = Vec::with_capacity(n);
        let pairs = BivectorIndex::new(n);
        for mu in 0..n {
            let h = BIANCHI_FD_STEP * widths[mu];
            let mut up = x.to_vec();
            up[mu] += h;
            let mut down = x.to_vec();
            down[mu] -= h;
            let (ou, od) = (self.curvature_form(&up)?, self.curvature_form(&down)?);
            domega.push(
                ou.coord
                    .iter()
                    .zip(&od.coord)
                    .map(|(u, d)| (u - d) / (2.0 * h))
                    .collect(),
            );
        }
        let omega = self.curvature_form(x)?;
        let term = |mu: usize, nu: usize, rho: usize| -> DVector<f64> {
            let (idx, sign) = pairs.index_of(nu, rho).expect("distinct indices");
            &domega[mu][idx] * sign + self.algebra.bracket(&a[mu], &omega.coord(nu, rho))
        };
        let mut worst = 0.0f64;
        for mu in 0..n {
            for nu in (mu + 1)..n {
                for rho in (nu + 1)..n {
                    let total = term(mu, nu, rho) + term(nu, rho, mu) + term(rho, mu, nu);
                    worst = worst.max(total.norm());
                }
            }
        }
        Ok(worst)
    }
}

/// Offsets and complex dimensions of the projective factors of a base, in
/// order.  Errors when the base contains any non-projective factor.
pub(crate) fn projective_factors(base: &BaseManifold) -> Result<Vec<(usize, usize)>> {
    match base {
        BaseManifold::ComplexProjective { m, .. } => Ok(vec![(0, *m)]),
        BaseManifold::Product { factors } => {
            let mut out = Vec::with_capacity(factors.len());
            let mut offset = 0;
            for f in factors {
                match f {
                    BaseManifold::ComplexProjective { m, .. } => {
                        out.push((offset, *m));
                        offset += 2 * m;
                    }
                    other => {
                        return Err(Error::Input(format!(
                            "circle potentials need projective factors, found {}",
                            other.name()
                        )))
                    }
                }
            }
            Ok(out)
        }
        other => Err(Error::Input(format!(
            "circle potentials need projective factors, found {}",
            other.name()
        ))),
    }
}
