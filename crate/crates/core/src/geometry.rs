//! Model base manifolds with closed-form metrics, curvature, and diameters.
//!
//! Every model carries a single distinguished chart: stereographic
//! coordinates for spheres, an affine chart for complex projective space,
//! the fundamental box of a flat torus, and concatenated coordinates for
//! products.  All curvature data follows the convention
//!
//! ```text
//! R(X, Y)Z = grad_X grad_Y Z - grad_Y grad_X Z - grad_[X,Y] Z
//! R(X, Y, Z, W) = g(R(X, Y)Z, W)
//! ```
//!
//! so that the sectional curvature of an orthonormal pair is
//! `R(X, Y, Y, X)` and the curvature operator on bivectors has entries
//! `Rhat[(i,j),(k,l)] = R(E_i, E_j, E_l, E_k)`, making the operator of the
//! unit sphere the identity.

use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{gram_schmidt_metric, BivectorIndex, Tensor4};

/// A closed model manifold together with its distinguished chart.
#[derive(Clone, Debug, PartialEq)]
pub enum BaseManifold {
    /// Round sphere of the given dimension and radius, in stereographic
    /// coordinates centered at a pole.
    Sphere { dim: usize, radius: f64 },
    /// Complex projective space of complex dimension `m` with constant
    /// holomorphic sectional curvature `hol_sec`, in an affine chart with
    /// interleaved real coordinates `(x1, y1, ..., xm, ym)`.
    ComplexProjective { m: usize, hol_sec: f64 },
    /// Flat torus with all periods `2 pi`, chart is the fundamental box.
    Flat { dim: usize },
    /// Riemannian product with concatenated chart coordinates.
    Product { factors: Vec<BaseManifold> },
}

impl BaseManifold {
    pub fn sphere(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Input("sphere dimension must be positive".into()));
        }
        if !(radius > 0.0) {
            return Err(Error::Input(format!(
                "sphere radius must be positive, got {radius}"
            )));
        }
        Ok(BaseManifold::Sphere { dim, radius })
    }

    pub fn complex_projective(m: usize, hol_sec: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Input(
                "complex projective space needs complex dimension >= 1".into(),
            ));
        }
        if !(hol_sec > 0.0) {
            return Err(Error::Input(format!(
                "holomorphic sectional curvature must be positive, got {hol_sec}"
            )));
        }
        Ok(BaseManifold::ComplexProjective { m, hol_sec })
    }

    pub fn flat(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Input("flat torus dimension must be positive".into()));
        }
        Ok(BaseManifold::Flat { dim })
    }

    pub fn product(factors: Vec<BaseManifold>) -> Result<Self> {
        if factors.len() < 2 {
            return Err(Error::Input("a product needs at least two factors".into()));
        }
        if factors.iter().any(|f| matches!(f, BaseManifold::Product { .. })) {
            return Err(Error::Input(
                "nested products are not supported; list all factors in one product".into(),
            ));
        }
        Ok(BaseManifold::Product { factors })
    }

    /// Parse the model grammar: `sphere:<n>:<r>`, `cp:<m>:<c>`, `flat:<n>`,
    /// or `product:<a>*<b>[*<c>...]` with atomic factors.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if let Some(rest) = spec.strip_prefix("product:") {
            let parts: Vec<&str> = rest.split('*').collect();
            if parts.len() < 2 {
                return Err(Error::Input(format!(
                    "product needs at least two factors, got '{spec}'"
                )));
            }
            let factors = parts
                .iter()
                .map(|p| BaseManifold::parse(p))
                .collect::<Result<Vec<_>>>()?;
            return BaseManifold::product(factors);
        }
        let fields: Vec<&str> = spec.split(':').collect();
        match fields.as_slice() {
            ["sphere", n, r] => {
                let dim = n
                    .parse()
                    .map_err(|_| Error::Input(format!("bad sphere dimension in '{spec}'")))?;
                let radius = r
                    .parse()
                    .map_err(|_| Error::Input(format!("bad sphere radius in '{spec}'")))?;
                BaseManifold::sphere(dim, radius)
            }
            ["cp", m, c] => {
                let m = m
                    .parse()
                    .map_err(|_| Error::Input(format!("bad complex dimension in '{spec}'")))?;
                let c = c
                    .parse()
                    .map_err(|_| Error::Input(format!("bad curvature parameter in '{spec}'")))?;
                BaseManifold::complex_projective(m, c)
            }
            ["flat", n] => {
                let dim = n
                    .parse()
                    .map_err(|_| Error::Input(format!("bad flat dimension in '{spec}'")))?;
                BaseManifold::flat(dim)
            }
            _ => Err(Error::Input(format!(
                "unknown base manifold '{spec}'; expected sphere:<n>:<r>, cp:<m>:<c>, \
                 flat:<n>, or product:<a>*<b>"
            ))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            BaseManifold::Sphere { dim, radius } => format!("sphere:{dim}:{radius}"),
            BaseManifold::ComplexProjective { m, hol_sec } => format!("cp:{m}:{hol_sec}"),
            BaseManifold::Flat { dim } => format!("flat:{dim}"),
            BaseManifold::Product { factors } => {
                let names: Vec<String> = factors.iter().map(|f| f.name()).collect();
                format!("product:{}", names.join("*"))
            }
        }
    }

    /// Real dimension.
    pub fn dim(&self) -> usize {
        match self {
            BaseManifold::Sphere { dim, .. } => *dim,
            BaseManifold::ComplexProjective { m, .. } => 2 * m,
            BaseManifold::Flat { dim } => *dim,
            BaseManifold::Product { factors } => factors.iter().map(|f| f.dim()).sum(),
        }
    }

    /// Half-width of the chart box per coordinate.
    pub fn chart_half_widths(&self) -> Vec<f64> {
        match self {
            BaseManifold::Sphere { dim, radius } => vec![*radius; *dim],
            BaseManifold::ComplexProjective { m, .. } => vec![1.0; 2 * m],
            BaseManifold::Flat { dim } => vec![PI; *dim],
            BaseManifold::Product { factors } => factors
                .iter()
                .flat_map(|f| f.chart_half_widths())
                .collect(),
        }
    }

    /// Rejects points outside the chart box.
    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        let widths = self.chart_half_widths();
        if x.len() != widths.len() {
            return Err(Error::Domain(format!(
                "point dimension {} does not match chart dimension {}",
                x.len(),
                widths.len()
            )));
        }
        for (i, (coord, w)) in x.iter().zip(&widths).enumerate() {
            if !coord.is_finite() || coord.abs() > *w {
                return Err(Error::Domain(format!(
                    "coordinate {i} = {coord} leaves the chart box of half-width {w}"
                )));
            }
        }
        Ok(())
    }

    /// Chart metric at `x`.
    pub fn metric_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_point(x)?;
        Ok(self.metric_unchecked(x))
    }

    fn metric_unchecked(&self, x: &[f64]) -> DMatrix<f64> {
        match self {
            BaseManifold::Sphere { dim, radius } => {
                let lambda = conformal_factor(*radius, x);
                DMatrix::from_diagonal_element(*dim, *dim, lambda * lambda)
            }
            BaseManifold::ComplexProjective { m, hol_sec } => fubini_study_metric(*m, *hol_sec, x),
            BaseManifold::Flat { dim } => DMatrix::identity(*dim, *dim),
            BaseManifold::Product { factors } => {
                let n = self.dim();
                let mut g = DMatrix::zeros(n, n);
                let mut offset = 0;
                for f in factors {
                    let d = f.dim();
                    let block = f.metric_unchecked(&x[offset..offset + d]);
                    g.view_mut((offset, offset), (d, d)).copy_from(&block);
                    offset += d;
                }
                g
            }
        }
    }

    /// Complex structure in chart coordinates, when the model carries one
    /// compatible with the metric.
    pub fn complex_structure_at(&self, x: &[f64]) -> Result<Option<DMatrix<f64>>> {
        self.check_point(x)?;
        Ok(self.complex_structure_unchecked())
    }

    fn complex_structure_unchecked(&self) -> Option<DMatrix<f64>> {
        match self {
            BaseManifold::ComplexProjective { m, .. } => Some(standard_complex_structure(*m)),
            BaseManifold::Product { factors } => {
                let blocks: Option<Vec<DMatrix<f64>>> = factors
                    .iter()
                    .map(|f| f.complex_structure_unchecked())
                    .collect();
                blocks.map(|blocks| {
                    let n = self.dim();
                    let mut j = DMatrix::zeros(n, n);
                    let mut offset = 0;
                    for b in blocks {
                        let d = b.nrows();
                        j.view_mut((offset, offset), (d, d)).copy_from(&b);
                        offset += d;
                    }
                    j
                })
            }
            _ => None,
        }
    }

    /// Coordinate curvature tensor `R_{mu nu rho sigma}` at `x`.
    pub fn curvature_at(&self, x: &[f64]) -> Result<Tensor4> {
        self.check_point(x)?;
        Ok(self.curvature_unchecked(x))
    }

    fn curvature_unchecked(&self, x: &[f64]) -> Tensor4 {
        let n = self.dim();
        let mut r = Tensor4::zeros(n);
        match self {
            BaseManifold::Sphere { radius, .. } => {
                let g = self.metric_unchecked(x);
                let c = 1.0 / (radius * radius);
                constant_curvature_tensor(&mut r, &g, c, 0);
            }
            BaseManifold::ComplexProjective { m, hol_sec } => {
                let g = self.metric_unchecked(x);
                let j = standard_complex_structure(*m);
                kaehler_constant_tensor(&mut r, &g, &j, *hol_sec, 0);
            }
            BaseManifold::Flat { .. } => {}
            BaseManifold::Product { factors } => {
                let mut offset = 0;
                for f in factors {
                    let d = f.dim();
                    let sub = f.curvature_unchecked(&x[offset..offset + d]);
                    for a in 0..d {
                        for b in 0..d {
                            for c in 0..d {
                                for e in 0..d {
                                    let v = sub.get(a, b, c, e);
                                    if v != 0.0 {
                                        r.set(offset + a, offset + b, offset + c, offset + e, v);
                                    }
                                }
                            }
                        }
                    }
                    offset += d;
                }
            }
        }
        r
    }

    /// Deterministic orthonormal frame at `x`: Gram-Schmidt of the
    /// coordinate basis in order.
    pub fn orthonormal_frame_at(&self, x: &[f64]) -> Result<Vec<DVector<f64>>> {
        let g = self.metric_at(x)?;
        let n = self.dim();
        let basis: Vec<DVector<f64>> = (0..n)
            .map(|i| DVector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 }))
            .collect();
        gram_schmidt_metric(&g, &basis)
    }

    /// Curvature operator on bivectors of the orthonormal frame at `x`:
    /// `Rhat[(i,j),(k,l)] = R(E_i, E_j, E_l, E_k)`, a symmetric matrix of
    /// size `n(n-1)/2`.
    pub fn curvature_operator_at(&self, x: &[f64]) -> Result<(BivectorIndex, DMatrix<f64>)> {
        let r = self.curvature_at(x)?;
        let frame = self.orthonormal_frame_at(x)?;
        let rf = curvature_in_frame(&r, &frame);
        let idx = BivectorIndex::new(self.dim());
        let rhat = DMatrix::from_fn(idx.len(), idx.len(), |p, q| {
            let (i, j) = idx.pair(p);
            let (k, l) = idx.pair(q);
            rf.get(i, j, l, k)
        });
        Ok((idx, rhat))
    }

    /// Sectional curvature of the plane spanned by chart vectors `u, v`.
    pub fn sectional_curvature(&self, x: &[f64], u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        let g = self.metric_at(x)?;
        let r = self.curvature_unchecked(x);
        let n = self.dim();
        let mut num = 0.0;
        for mu in 0..n {
            for nu in 0..n {
                for rho in 0..n {
                    for sigma in 0..n {
                        num += r.get(mu, nu, rho, sigma) * u[mu] * v[nu] * v[rho] * u[sigma];
                    }
                }
            }
        }
        let uu = u.dot(&(&g * u));
        let vv = v.dot(&(&g * v));
        let uv = u.dot(&(&g * v));
        let area2 = uu * vv - uv * uv;
        if area2 <= 1e-14 * uu.max(vv).powi(2) {
            return Err(Error::Domain(
                "sectional curvature needs linearly independent directions".into(),
            ));
        }
        Ok(num / area2)
    }

    /// Exact diameter of the model.
    pub fn diameter(&self) -> f64 {
        match self {
            BaseManifold::Sphere { radius, .. } => PI * radius,
            BaseManifold::ComplexProjective { hol_sec, .. } => PI / hol_sec.sqrt(),
            BaseManifold::Flat { dim } => PI * (*dim as f64).sqrt(),
            BaseManifold::Product { factors } => factors
                .iter()
                .map(|f| f.diameter().powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }
}

fn conformal_factor(radius: f64, x: &[f64]) -> f64 {
    let norm2: f64 = x.iter().map(|v| v * v).sum();
    2.0 * radius * radius / (radius * radius + norm2)
}

/// Fubini-Study metric in the affine chart, as a real symmetric matrix in
/// interleaved coordinates.  Derived from the Hermitian matrix
/// `h_{pq} = (4/c) [delta_pq (1+|z|^2) - conj(z_p) z_q] / (1+|z|^2)^2`.
fn fubini_study_metric(m: usize, c: f64, coords: &[f64]) -> DMatrix<f64> {
    let xs: Vec<f64> = (0..m).map(|p| coords[2 * p]).collect();
    let ys: Vec<f64> = (0..m).map(|p| coords[2 * p + 1]).collect();
    let z2: f64 = coords.iter().map(|v| v * v).sum();
    let denom = (1.0 + z2) * (1.0 + z2);
    let scale = 4.0 / c;
    let mut g = DMatrix::zeros(2 * m, 2 * m);
    for p in 0..m {
        for q in 0..m {
            let delta = if p == q { 1.0 } else { 0.0 };
            let re = scale * (delta * (1.0 + z2) - (xs[p] * xs[q] + ys[p] * ys[q])) / denom;
            let im = -scale * (xs[p] * ys[q] - ys[p] * xs[q]) / denom;
            g[(2 * p, 2 * q)] = re;
            g[(2 * p + 1, 2 * q + 1)] = re;
            g[(2 * p, 2 * q + 1)] = im;
            g[(2 * p + 1, 2 * q)] = -im;
        }
    }
    g
}

/// Constant complex structure of the affine chart: `J dx_p = dy_p`,
/// `J dy_p = -dx_p` on tangent vectors.
fn standard_complex_structure(m: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * m, 2 * m);
    for p in 0..m {
        j[(2 * p + 1, 2 * p)] = 1.0;
        j[(2 * p, 2 * p + 1)] = -1.0;
    }
    j
}

/// Writes `R_{mu nu rho sigma} = c (g_{mu sigma} g_{nu rho} - g_{mu rho} g_{nu sigma})`
/// into the block starting at `offset`.
fn constant_curvature_tensor(r: &mut Tensor4, g: &DMatrix<f64>, c: f64, offset: usize) {
    let n = g.nrows();
    for mu in 0..n {
        for nu in 0..n {
            for rho in 0..n {
                for sigma in 0..n {
                    let v = c * (g[(mu, sigma)] * g[(nu, rho)] - g[(mu, rho)] * g[(nu, sigma)]);
                    if v != 0.0 {
                        r.set(offset + mu, offset + nu, offset + rho, offset + sigma, v);
                    }
                }
            }
        }
    }
}

/// Curvature of a constant-holomorphic-sectional-curvature Kaehler metric:
///
/// ```text
/// R(X,Y,Z,W) = c/4 [ g(X,W) g(Y,Z) - g(X,Z) g(Y,W)
///                  + g(X,JW) g(Y,JZ) - g(X,JZ) g(Y,JW) - 2 g(X,JY) g(Z,JW) ]
/// ```
fn kaehler_constant_tensor(r: &mut Tensor4, g: &DMatrix<f64>, j: &DMatrix<f64>, c: f64, offset: usize) {
    let n = g.nrows();
    let k = g * j;
    let q = c / 4.0;
    for mu in 0..n {
        for nu in 0..n {
            for rho in 0..n {
                for sigma in 0..n {
                    let v = q
                        * (g[(mu, sigma)] * g[(nu, rho)] - g[(mu, rho)] * g[(nu, sigma)]
                            + k[(mu, sigma)] * k[(nu, rho)]
                            - k[(mu, rho)] * k[(nu, sigma)]
                            - 2.0 * k[(mu, nu)] * k[(rho, sigma)]);
                    if v != 0.0 {
                        r.set(offset + mu, offset + nu, offset + rho, offset + sigma, v);
                    }
                }
            }
        }
    }
}

/// Expresses a coordinate curvature tensor in a frame: four successive
/// contractions with the frame columns.
pub fn curvature_in_frame(r: &Tensor4, frame: &[DVector<f64>]) -> Tensor4 {
    let n = r.dim();
    let f = frame.len();
    // Contract one slot at a time to keep the cost at O(n^5).
    let mut a = vec![0.0; f * n * n * n];
    for i in 0..f {
        for nu in 0..n {
            for rho in 0..n {
                for sigma in 0..n {
                    let mut s = 0.0;
                    for mu in 0..n {
                        s += r.get(mu, nu, rho, sigma) * frame[i][mu];
                    }
                    a[((i * n + nu) * n + rho) * n + sigma] = s;
                }
            }
        }
    }
    let mut b = vec![0.0; f * f * n * n];
    for i in 0..f {
        for j in 0..f {
            for rho in 0..n {
                for sigma in 0..n {
                    let mut s = 0.0;
                    for nu in 0..n {
                        s += a[((i * n + nu) * n + rho) * n + sigma] * frame[j][nu];
                    }
                    b[((i * f + j) * n + rho) * n + sigma] = s;
                }
            }
        }
    }
    let mut c = vec![0.0; f * f * f * n];
    for i in 0..f {
        for j in 0..f {
            for k in 0..f {
                for sigma in 0..n {
                    let mut s = 0.0;
                    for rho in 0..n {
                        s += b[((i * f + j) * n + rho) * n + sigma] * frame[k][rho];
                    }
                    c[((i * f + j) * f + k) * n + sigma] = s;
                }
            }
        }
    }
    let mut out = Tensor4::zeros(f);
    for i in 0..f {
        for j in 0..f {
            for k in 0..f {
                for l in 0..f {
                    let mut s = 0.0;
                    for sigma in 0..n {
                        s += c[((i * f + j) * f + k) * n + sigma] * frame[l][sigma];
                    }
                    out.set(i, j, k, l, s);
                }
            }
        }
    }
    out
}

/// Length of a piecewise-linear chart path under the manifold metric,
/// midpoint rule per segment.
pub fn chart_path_length(manifold: &BaseManifold, path: &[Vec<f64>]) -> Result<f64> {
    if path.len() < 2 {
        return Err(Error::Domain("a path needs at least two points".into()));
    }
    let mut total = 0.0;
    for w in path.windows(2) {
        let (p, q) = (&w[0], &w[1]);
        manifold.check_point(p)?;
        manifold.check_point(q)?;
        let mid: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
        let g = manifold.metric_unchecked(&mid);
        let delta = DVector::from_fn(p.len(), |i, _| q[i] - p[i]);
        total += delta.dot(&(&g * &delta)).max(0.0).sqrt();
    }
    Ok(total)
}

/// Fixed-iteration curve shortening between two chart points: start from the
/// straight segment, move interior nodes downhill in path length by
/// finite-difference gradient steps.  Returns the final path and its length.
/// This gives upper bounds on distance that tighten with iterations; it is a
/// diagnostic, not an exact geodesic solver.
pub fn shorten_path(
    manifold: &BaseManifold,
    from: &[f64],
    to: &[f64],
    segments: usize,
    iterations: usize,
) -> Result<(Vec<Vec<f64>>, f64)> {
    if segments < 2 {
        return Err(Error::Domain("curve shortening needs at least 2 segments".into()));
    }
    manifold.check_point(from)?;
    manifold.check_point(to)?;
    let n = from.len();
    let mut path: Vec<Vec<f64>> = (0..=segments)
        .map(|k| {
            let s = k as f64 / segments as f64;
            (0..n).map(|i| from[i] + s * (to[i] - from[i])).collect()
        })
        .collect();
    let widths = manifold.chart_half_widths();
    let fd = 1e-6;
    for _ in 0..iterations {
        for k in 1..segments {
            let local = |node: &[f64]| -> f64 {
                let tri = vec![path[k - 1].clone(), node.to_vec(), path[k + 1].clone()];
                chart_path_length(manifold, &tri).unwrap_or(f64::INFINITY)
            };
            let base = local(&path[k]);
            let mut grad = vec![0.0; n];
            let mut node = path[k].clone();
            for i in 0..n {
                let save = node[i];
                node[i] = save + fd;
                let up = local(&node);
                node[i] = save - fd;
                let down = local(&node);
                node[i] = save;
                grad[i] = (up - down) / (2.0 * fd);
            }
            let gnorm: f64 = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
            if gnorm < 1e-12 {
                continue;
            }
            let mut step = 0.05 * base / gnorm;
            for _ in 0..4 {
                let candidate: Vec<f64> = (0..n)
                    .map(|i| (node[i] - step * grad[i]).clamp(-widths[i], widths[i]))
                    .collect();
                if local(&candidate) < base {
                    path[k] = candidate;
                    break;
                }
                step *= 0.25;
            }
        }
    }
    let len = chart_path_length(manifold, &path)?;
    Ok((path, len))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::symmetric_eigenvalues;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_point(manifold: &BaseManifold, rng: &mut ChaCha8Rng) -> Vec<f64> {
        manifold
            .chart_half_widths()
            .iter()
            .map(|w| rng.random_range(-0.5 * w..0.5 * w))
            .collect()
    }

    #[test]
    fn parse_and_names_round_trip() {
        for spec in [
            "sphere:3:1",
            "sphere:2:2.5",
            "cp:2:4",
            "flat:2",
            "product:cp:1:4*cp:2:4",
            "product:sphere:2:1*flat:3",
        ] {
            let m = BaseManifold::parse(spec).unwrap();
            assert_eq!(m.name(), spec);
        }
        assert!(BaseManifold::parse("sphere:0:1").is_err());
        assert!(BaseManifold::parse("cp:1:-4").is_err());
        assert!(BaseManifold::parse("klein:2").is_err());
        assert!(BaseManifold::parse("product:cp:1:4").is_err());
    }

    #[test]
    fn sphere_metric_is_conformal() {
        let s = BaseManifold::sphere(3, 2.0).unwrap();
        let x = [0.3, -0.4, 1.1];
        let g = s.metric_at(&x).unwrap();
        let r2 = 4.0;
        let norm2: f64 = x.iter().map(|v| v * v).sum();
        let lambda = 2.0 * r2 / (r2 + norm2);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { lambda * lambda } else { 0.0 };
                assert!((g[(i, j)] - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn sphere_sectional_curvature_is_constant() {
        let s = BaseManifold::sphere(4, 1.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let x = sample_point(&s, &mut rng);
            let u = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
            let v = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
            let sec = s.sectional_curvature(&x, &u, &v).unwrap();
            assert!((sec - 1.0 / 2.25).abs() < 1e-10, "sec = {sec}");
        }
    }

    #[test]
    fn unit_sphere_operator_is_identity() {
        let s = BaseManifold::sphere(4, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let x = sample_point(&s, &mut rng);
            let (idx, rhat) = s.curvature_operator_at(&x).unwrap();
            assert_eq!(idx.len(), 6);
            let id = DMatrix::<f64>::identity(6, 6);
            assert!(
                (&rhat - &id).norm() < 1e-10,
                "operator differs from identity by {:.3e}",
                (&rhat - &id).norm()
            );
        }
    }

    #[test]
    fn fubini_study_is_kaehler_compatible() {
        let cp2 = BaseManifold::complex_projective(2, 4.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let x = sample_point(&cp2, &mut rng);
            let g = cp2.metric_at(&x).unwrap();
            let j = cp2.complex_structure_at(&x).unwrap().unwrap();
            // J^2 = -1.
            assert!((&j * &j + DMatrix::<f64>::identity(4, 4)).norm() < 1e-14);
            // g(JX, JY) = g(X, Y).
            assert!((j.transpose() * &g * &j - &g).norm() < 1e-12);
            // The associated 2-form g J is antisymmetric.
            let k = &g * &j;
            assert!((&k + k.transpose()).norm() < 1e-12);
            // Positive definite metric.
            let eigs = symmetric_eigenvalues(&g).unwrap();
            assert!(eigs[0] > 0.0);
        }
    }

    #[test]
    fn cp_holomorphic_and_orthogonal_sectional_curvatures() {
        let c = 4.0;
        let cp2 = BaseManifold::complex_projective(2, c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let x = sample_point(&cp2, &mut rng);
            let j = cp2.complex_structure_at(&x).unwrap().unwrap();
            let u = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
            let ju = &j * &u;
            let hol = cp2.sectional_curvature(&x, &u, &ju).unwrap();
            assert!((hol - c).abs() < 1e-9, "holomorphic sec = {hol}");
        }
        // At the chart origin the frame is Euclidean: span(e1, e3) is a
        // totally real plane with curvature c/4.
        let x = [0.0; 4];
        let u = DVector::from_column_slice(&[1.0, 0.0, 0.0, 0.0]);
        let v = DVector::from_column_slice(&[0.0, 0.0, 1.0, 0.0]);
        let sec = cp2.sectional_curvature(&x, &u, &v).unwrap();
        assert!((sec - c / 4.0).abs() < 1e-12);
    }

    #[test]
    fn cp1_matches_round_sphere_invariants() {
        // CP^1 with holomorphic sectional curvature c is the round 2-sphere
        // of radius 1/sqrt(c).
        let c = 2.5;
        let cp1 = BaseManifold::complex_projective(1, c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..5 {
            let x = sample_point(&cp1, &mut rng);
            let u = DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
            let v = DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
            if let Ok(sec) = cp1.sectional_curvature(&x, &u, &v) {
                assert!((sec - c).abs() < 1e-10);
            }
        }
        let sphere = BaseManifold::sphere(2, 1.0 / c.sqrt()).unwrap();
        assert!((cp1.diameter() - sphere.diameter()).abs() < 1e-12);
    }

    #[test]
    fn cp2_curvature_operator_golden_spectrum() {
        let cp2 = BaseManifold::complex_projective(2, 4.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..6 {
            let x = sample_point(&cp2, &mut rng);
            let (_, rhat) = cp2.curvature_operator_at(&x).unwrap();
            let eigs = symmetric_eigenvalues(&rhat).unwrap();
            let expected = [0.0, 0.0, 2.0, 2.0, 2.0, 6.0];
            for (e, g) in expected.iter().zip(&eigs) {
                assert!(
                    (e - g).abs() < 1e-9,
                    "spectrum {eigs:?} differs from {expected:?}"
                );
            }
            // Trace is half the scalar curvature m(m+1)c = 24.
            assert!((rhat.trace() - 12.0).abs() < 1e-9);
        }
    }

    #[test]
    fn product_operator_block_structure() {
        let prod = BaseManifold::parse("product:sphere:2:1*sphere:2:1").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let x = sample_point(&prod, &mut rng);
        let (idx, rhat) = prod.curvature_operator_at(&x).unwrap();
        assert_eq!(idx.len(), 6);
        let eigs = symmetric_eigenvalues(&rhat).unwrap();
        let expected = [0.0, 0.0, 0.0, 0.0, 1.0, 1.0];
        for (e, g) in expected.iter().zip(&eigs) {
            assert!((e - g).abs() < 1e-10, "eigs {eigs:?}");
        }
    }

    #[test]
    fn flat_torus_is_flat() {
        let t = BaseManifold::flat(3).unwrap();
        let x = [0.5, -1.0, 2.0];
        assert_eq!(t.curvature_at(&x).unwrap().max_abs(), 0.0);
        let g = t.metric_at(&x).unwrap();
        assert!((g - DMatrix::<f64>::identity(3, 3)).norm() == 0.0);
    }

    #[test]
    fn diameters_match_closed_forms() {
        assert!((BaseManifold::sphere(3, 2.0).unwrap().diameter() - 2.0 * PI).abs() < 1e-12);
        assert!(
            (BaseManifold::complex_projective(2, 4.0).unwrap().diameter() - PI / 2.0).abs() < 1e-12
        );
        assert!((BaseManifold::flat(4).unwrap().diameter() - 2.0 * PI).abs() < 1e-12);
        let prod = BaseManifold::parse("product:cp:1:4*cp:2:4").unwrap();
        let expect = (2.0f64 * (PI / 2.0).powi(2)).sqrt();
        assert!((prod.diameter() - expect).abs() < 1e-12);
    }

    #[test]
    fn radial_path_lengths_match_closed_forms() {
        // Straight radial chart lines are geodesics on spheres and complex
        // projective space by rotational symmetry of the charts.
        let r = 1.5;
        let s = BaseManifold::sphere(2, r).unwrap();
        let reach = 0.9 * r;
        let path: Vec<Vec<f64>> = (0..=400)
            .map(|k| vec![reach * k as f64 / 400.0, 0.0])
            .collect();
        let len = chart_path_length(&s, &path).unwrap();
        let exact = 2.0 * r * (reach / r).atan();
        assert!((len - exact).abs() < 1e-4, "sphere radial {len} vs {exact}");

        let c = 4.0;
        let cp2 = BaseManifold::complex_projective(2, c).unwrap();
        let reach = 0.9;
        let path: Vec<Vec<f64>> = (0..=400)
            .map(|k| vec![reach * k as f64 / 400.0, 0.0, 0.0, 0.0])
            .collect();
        let len = chart_path_length(&cp2, &path).unwrap();
        let exact = (2.0 / c.sqrt()) * (reach.atan());
        assert!((len - exact).abs() < 1e-4, "cp radial {len} vs {exact}");
    }

    #[test]
    fn sampled_distances_respect_diameter() {
        let models = [
            BaseManifold::sphere(2, 1.0).unwrap(),
            BaseManifold::complex_projective(1, 4.0).unwrap(),
            BaseManifold::parse("product:cp:1:4*cp:2:4").unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for m in &models {
            for _ in 0..5 {
                let a = sample_point(m, &mut rng);
                let b = sample_point(m, &mut rng);
                // Straight line at the same discretization the shortener
                // uses, so the lengths are directly comparable.
                let mut path = Vec::new();
                for k in 0..=16 {
                    let s = k as f64 / 16.0;
                    path.push(
                        a.iter()
                            .zip(&b)
                            .map(|(p, q)| p + s * (q - p))
                            .collect::<Vec<f64>>(),
                    );
                }
                let len = chart_path_length(m, &path).unwrap();
                // Node moves only ever accept decreases, so shortening can
                // not lengthen the path.
                let (_, shortened) = shorten_path(m, &a, &b, 16, 30).unwrap();
                assert!(shortened <= len + 1e-9);
                assert!(
                    shortened <= m.diameter() * (1.0 + 1e-6),
                    "{}: sampled distance {shortened} exceeds diameter {}",
                    m.name(),
                    m.diameter()
                );
            }
        }
    }

    #[test]
    fn curve_shortening_recovers_radial_distance() {
        let s = BaseManifold::sphere(2, 1.0).unwrap();
        let from = [0.0, 0.0];
        let to = [0.8, 0.0];
        let (_, len) = shorten_path(&s, &from, &to, 16, 40).unwrap();
        let exact = 2.0 * (0.8f64).atan();
        assert!(
            (len - exact).abs() < 5e-3 * exact,
            "shortened {len} vs exact {exact}"
        );
    }

    #[test]
    fn check_point_rejects_outside_chart() {
        let s = BaseManifold::sphere(2, 1.0).unwrap();
        assert!(s.check_point(&[0.5, 0.5]).is_ok());
        assert!(s.check_point(&[1.5, 0.0]).is_err());
        assert!(s.check_point(&[0.0]).is_err());
        assert!(s.check_point(&[f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn curvature_tensor_symmetries_hold() {
        let models = [
            BaseManifold::sphere(3, 1.2).unwrap(),
            BaseManifold::complex_projective(2, 3.0).unwrap(),
            BaseManifold::parse("product:cp:1:2*sphere:2:1").unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for m in &models {
            let x = sample_point(m, &mut rng);
            let r = m.curvature_at(&x).unwrap();
            let n = m.dim();
            let scale = r.max_abs().max(1.0);
            for mu in 0..n {
                for nu in 0..n {
                    for rho in 0..n {
                        for sigma in 0..n {
                            let v = r.get(mu, nu, rho, sigma);
                            assert!((v + r.get(nu, mu, rho, sigma)).abs() < 1e-12 * scale);
                            assert!((v + r.get(mu, nu, sigma, rho)).abs() < 1e-12 * scale);
                            assert!((v - r.get(rho, sigma, mu, nu)).abs() < 1e-12 * scale);
                            let bianchi = v
                                + r.get(nu, rho, mu, sigma)
                                + r.get(rho, mu, nu, sigma);
                            assert!(bianchi.abs() < 1e-12 * scale);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn frame_is_orthonormal_for_metric() {
        let m = BaseManifold::parse("product:cp:1:4*cp:2:4").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let x = sample_point(&m, &mut rng);
        let g = m.metric_at(&x).unwrap();
        let frame = m.orthonormal_frame_at(&x).unwrap();
        assert_eq!(frame.len(), 6);
        for (i, a) in frame.iter().enumerate() {
            for (j, b) in frame.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((a.dot(&(&g * b)) - expect).abs() < 1e-10);
            }
        }
    }
}
