//! Chart-level Riemannian geometry of one manifold.
//!
//! Everything pointwise is computed from a [`Geo`]: the metric, its inverse
//! and the Christoffel symbols as jets seeded at the sample point, so that
//! their first derivatives (curvature) come for free. Vector fields are
//! `Vec<PJ>`: components together with their derivatives at the point.

use crate::error::{Error, Result};
use crate::expr::{Env, Expr};
use crate::jet::{Jet2, Scalar};
use crate::linalg::{self, Mat};
use crate::report::{CheckReport, Residuals};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A jet seeded at the current sample point of the total space.
pub type PJ = Jet2<f64>;

/// A vector field known through its value and derivatives at one point.
pub type Field = Vec<PJ>;

pub const DEGENERATE_EIGENVALUE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldSpec {
    pub label: String,
    pub coords: Vec<String>,
    /// Upper triangle of the metric, row by row.
    pub metric: Vec<Expr>,
    /// Almost complex structure, row-major: `(J v)^i = J[i][j] v^j`.
    pub j: Option<Vec<Expr>>,
    pub domain: Vec<(f64, f64)>,
}

pub fn tri_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

impl ManifoldSpec {
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn metric_entry(&self, i: usize, j: usize) -> &Expr {
        &self.metric[tri_index(self.dim(), i, j)]
    }

    pub fn j_entry(&self, i: usize, j: usize) -> Option<&Expr> {
        self.j.as_ref().map(|m| &m[i * self.dim() + j])
    }

    pub fn require_j(&self) -> Result<&[Expr]> {
        self.j
            .as_deref()
            .ok_or_else(|| Error::MissingJ(self.label.clone()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projector {
    Vertical,
    Horizontal,
    D1,
    D2,
    JD2,
    Mu,
}

/// Anything that can supply the smooth projector families at a point.
pub trait ProjectorSource {
    fn projector(&self, which: Projector) -> Option<&Mat<PJ>>;
}

#[derive(Debug, Clone, PartialEq)]
pub enum VectorField {
    Components(Vec<Expr>),
    Constant(Vec<f64>),
    /// `P(x) · c` for a projector family `P` and constant coefficients `c`.
    Projected { projector: Projector, coeffs: Vec<f64> },
}

impl VectorField {
    pub fn eval(
        &self,
        coords: &[String],
        x: &[PJ],
        projectors: Option<&dyn ProjectorSource>,
    ) -> Result<Field> {
        match self {
            VectorField::Components(es) => es
                .iter()
                .map(|e| {
                    e.eval(&Env::new(coords, x))
                        .map_err(|err| Error::eval(&values(x), err))
                })
                .collect(),
            VectorField::Constant(c) => Ok(constant_field(c)),
            VectorField::Projected { projector, coeffs } => {
                let p = projectors.and_then(|s| s.projector(*projector)).ok_or_else(|| {
                    Error::Validation(format!("no {projector:?} projector available here"))
                })?;
                Ok(p.matvec(&constant_field(coeffs)))
            }
        }
    }
}

pub fn constant_field(c: &[f64]) -> Field {
    c.iter().map(|v| PJ::constant(*v)).collect()
}

pub fn values(f: &[PJ]) -> Vec<f64> {
    f.iter().map(|c| c.val).collect()
}

/// Derivative of `f` in direction `x`. Exact in value and gradient.
pub fn directional(x: &[PJ], f: &PJ) -> PJ {
    let mut acc = PJ::zero();
    for (i, xi) in x.iter().enumerate() {
        let d = f.partial(i);
        if d.nvars() == 0 && d.val == 0.0 {
            continue;
        }
        acc = acc + xi.clone() * d;
    }
    acc
}

/// `[X, Y]^k = X(Y^k) − Y(X^k)`.
pub fn bracket(x: &[PJ], y: &[PJ]) -> Field {
    x.iter()
        .zip(y)
        .map(|(xk, yk)| directional(x, yk) - directional(y, xk))
        .collect()
}

/// Metric, inverse metric, Christoffel symbols and (optionally) J at one
/// point, as jets in the coordinates of the sample point.
#[derive(Debug, Clone)]
pub struct Geo {
    pub n: usize,
    pub g: Mat<PJ>,
    pub ginv: Mat<PJ>,
    /// `Γ^k_ij` at `k·n² + i·n + j`.
    pub gamma: Vec<PJ>,
    pub j: Option<Mat<PJ>>,
}

impl Geo {
    pub fn at(m: &ManifoldSpec, p: &[f64]) -> Result<Geo> {
        Geo::at_jets(m, &Jet2::seed(p))
    }

    /// Geometry of `m` at the point whose coordinates are the jets `x`.
    /// For a base manifold, `x` is `F` of the sample point, so every
    /// derivative is taken with respect to the total-space coordinates.
    pub fn at_jets(m: &ManifoldSpec, x: &[PJ]) -> Result<Geo> {
        let n = m.dim();
        let point = values(x);
        let mut g = Mat::<PJ>::zeros(n, n);
        let mut dg = vec![PJ::zero(); n * n * n];
        for i in 0..n {
            for j in i..n {
                let e = m.metric_entry(i, j);
                let v: Jet2<PJ> = e
                    .eval_jet2(&m.coords, x)
                    .map_err(|err| Error::eval(&point, err))?;
                for l in 0..n {
                    let d = v.grad_at(l);
                    dg[(i * n + j) * n + l] = d.clone();
                    dg[(j * n + i) * n + l] = d;
                }
                g.set(i, j, v.val.clone());
                g.set(j, i, v.val);
            }
        }
        let (eigs, _) = linalg::symmetric_eigen(&g.values());
        let min_eig = eigs.first().copied().unwrap_or(f64::NAN);
        if !(min_eig > DEGENERATE_EIGENVALUE) {
            return Err(Error::DegenerateMetric {
                label: m.label.clone(),
                point,
                min_eig,
            });
        }
        let ginv = g.inverse().map_err(|_| Error::DegenerateMetric {
            label: m.label.clone(),
            point: point.clone(),
            min_eig,
        })?;
        let d = |i: usize, j: usize, l: usize| dg[(i * n + j) * n + l].clone();
        let mut gamma = vec![PJ::zero(); n * n * n];
        for i in 0..n {
            for j in i..n {
                let lowered: Vec<PJ> = (0..n)
                    .map(|l| (d(j, l, i) + d(i, l, j) - d(i, j, l)).scale(0.5))
                    .collect();
                for k in 0..n {
                    let mut acc = PJ::zero();
                    for (l, low) in lowered.iter().enumerate() {
                        acc = acc + ginv.at(k, l).clone() * low.clone();
                    }
                    gamma[k * n * n + i * n + j] = acc.clone();
                    gamma[k * n * n + j * n + i] = acc;
                }
            }
        }
        let j = match &m.j {
            None => None,
            Some(es) => {
                let mut data = Vec::with_capacity(n * n);
                for e in es {
                    data.push(
                        e.eval(&Env::new(&m.coords, x))
                            .map_err(|err| Error::eval(&point, err))?,
                    );
                }
                Some(Mat { rows: n, cols: n, data })
            }
        };
        Ok(Geo { n, g, ginv, gamma, j })
    }

    pub fn gamma_at(&self, k: usize, i: usize, j: usize) -> &PJ {
        &self.gamma[k * self.n * self.n + i * self.n + j]
    }

    pub fn inner(&self, a: &[PJ], b: &[PJ]) -> PJ {
        linalg::inner(&self.g, a, b)
    }

    pub fn norm(&self, a: &[PJ]) -> f64 {
        self.inner(a, a).val.max(0.0).sqrt()
    }

    /// `Γ(X, Y)^k = Γ^k_ij X^i Y^j`.
    pub fn gamma_apply(&self, x: &[PJ], y: &[PJ]) -> Field {
        let n = self.n;
        (0..n)
            .map(|k| {
                let mut acc = PJ::zero();
                for i in 0..n {
                    for j in 0..n {
                        let c = self.gamma_at(k, i, j);
                        if c.nvars() == 0 && c.val == 0.0 {
                            continue;
                        }
                        acc = acc + c.clone() * x[i].clone() * y[j].clone();
                    }
                }
                acc
            })
            .collect()
    }

    /// Levi-Civita derivative `∇_X Y`, exact in value and first derivatives.
    pub fn nabla(&self, x: &[PJ], y: &[PJ]) -> Field {
        let gxy = self.gamma_apply(x, y);
        y.iter()
            .zip(gxy)
            .map(|(yk, gk)| directional(x, yk) + gk)
            .collect()
    }

    pub fn j_apply(&self, v: &[PJ]) -> Option<Field> {
        self.j.as_ref().map(|j| j.matvec(v))
    }

    pub fn metric_values(&self) -> Mat<f64> {
        self.g.values()
    }

    /// `R(X,Y)Z` at the seed point. Only meaningful when the jets were seeded
    /// in this manifold's own coordinates (see [`Geo::at`]).
    pub fn riemann(&self, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
        let n = self.n;
        let gv = |k: usize, i: usize, j: usize| self.gamma_at(k, i, j).val;
        let dg = |k: usize, i: usize, j: usize, d: usize| self.gamma_at(k, i, j).grad_at(d);
        let mut out = vec![0.0; n];
        for (l, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in 0..n {
                if x[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    if y[j] == 0.0 {
                        continue;
                    }
                    for k in 0..n {
                        if z[k] == 0.0 {
                            continue;
                        }
                        let mut r = dg(l, j, k, i) - dg(l, i, k, j);
                        for mm in 0..n {
                            r += gv(l, i, mm) * gv(mm, j, k) - gv(l, j, mm) * gv(mm, i, k);
                        }
                        acc += r * x[i] * y[j] * z[k];
                    }
                }
            }
            *o = acc;
        }
        out
    }

    pub fn inner_f64(&self, a: &[f64], b: &[f64]) -> f64 {
        linalg::inner(&self.metric_values(), a, b)
    }

    /// `g(R(X,Y)Y, X) / (|X|²|Y|² − g(X,Y)²)`.
    pub fn sectional_curvature(&self, x: &[f64], y: &[f64]) -> f64 {
        let r = self.riemann(x, y, y);
        let gm = self.metric_values();
        let num = linalg::inner(&gm, &r, x);
        let xx = linalg::inner(&gm, x, x);
        let yy = linalg::inner(&gm, y, y);
        let xy = linalg::inner(&gm, x, y);
        num / (xx * yy - xy * xy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Christoffel {
    /// `Γ^k_ij`.
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[k * self.n * self.n + i * self.n + j]
    }
}

pub fn metric_at(m: &ManifoldSpec, p: &[f64]) -> Result<Mat<f64>> {
    let n = m.dim();
    let mut g = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v: f64 = m
                .metric_entry(i, j)
                .eval(&Env::new(&m.coords, p))
                .map_err(|err| Error::eval(p, err))?;
            g.set(i, j, v);
            g.set(j, i, v);
        }
    }
    let (eigs, _) = linalg::symmetric_eigen(&g);
    let min_eig = eigs.first().copied().unwrap_or(f64::NAN);
    if !(min_eig > DEGENERATE_EIGENVALUE) {
        return Err(Error::DegenerateMetric {
            label: m.label.clone(),
            point: p.to_vec(),
            min_eig,
        });
    }
    Ok(g)
}

/// Christoffel symbols from a single (non-nested) jet pass.
pub fn christoffel_at(m: &ManifoldSpec, p: &[f64]) -> Result<Christoffel> {
    let n = m.dim();
    let g = metric_at(m, p)?;
    let ginv = g.inverse().map_err(|_| Error::DegenerateMetric {
        label: m.label.clone(),
        point: p.to_vec(),
        min_eig: 0.0,
    })?;
    let mut dg = vec![0.0; n * n * n];
    for i in 0..n {
        for j in i..n {
            let v = m
                .metric_entry(i, j)
                .eval_jet2(&m.coords, p)
                .map_err(|err| Error::eval(p, err))?;
            for l in 0..n {
                dg[(i * n + j) * n + l] = v.grad_at(l);
                dg[(j * n + i) * n + l] = v.grad_at(l);
            }
        }
    }
    let d = |i: usize, j: usize, l: usize| dg[(i * n + j) * n + l];
    let mut data = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                data[k * n * n + i * n + j] = (0..n)
                    .map(|l| ginv.at(k, l) * 0.5 * (d(j, l, i) + d(i, l, j) - d(i, j, l)))
                    .sum();
            }
        }
    }
    Ok(Christoffel { n, data })
}

pub fn lie_bracket_at(m: &ManifoldSpec, x: &VectorField, y: &VectorField, p: &[f64]) -> Result<Vec<f64>> {
    let seed = Jet2::seed(p);
    let xf = x.eval(&m.coords, &seed, None)?;
    let yf = y.eval(&m.coords, &seed, None)?;
    Ok(values(&bracket(&xf, &yf)))
}

pub fn covariant_derivative_at(
    m: &ManifoldSpec,
    x: &VectorField,
    y: &VectorField,
    p: &[f64],
) -> Result<Vec<f64>> {
    let geo = Geo::at(m, p)?;
    let seed = Jet2::seed(p);
    let xf = x.eval(&m.coords, &seed, None)?;
    let yf = y.eval(&m.coords, &seed, None)?;
    Ok(values(&geo.nabla(&xf, &yf)))
}

pub fn riemann_at(m: &ManifoldSpec, p: &[f64], x: &[f64], y: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    Ok(Geo::at(m, p)?.riemann(x, y, z))
}

/// Finite-difference curvature: central differences (step `h`) of
/// [`christoffel_at`] in place of the AD derivatives. Test oracle only.
pub fn riemann_fd_at(
    m: &ManifoldSpec,
    p: &[f64],
    x: &[f64],
    y: &[f64],
    z: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    let n = m.dim();
    let c0 = christoffel_at(m, p)?;
    let mut dc = Vec::with_capacity(n);
    for d in 0..n {
        let mut a = p.to_vec();
        let mut b = p.to_vec();
        a[d] += h;
        b[d] -= h;
        let ca = christoffel_at(m, &a)?;
        let cb = christoffel_at(m, &b)?;
        dc.push(
            ca.data
                .iter()
                .zip(&cb.data)
                .map(|(u, v)| (u - v) / (2.0 * h))
                .collect::<Vec<f64>>(),
        );
    }
    let idx = |k: usize, i: usize, j: usize| k * n * n + i * n + j;
    let mut out = vec![0.0; n];
    for (l, o) in out.iter_mut().enumerate() {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut r = dc[i][idx(l, j, k)] - dc[j][idx(l, i, k)];
                    for mm in 0..n {
                        r += c0.get(l, i, mm) * c0.get(mm, j, k) - c0.get(l, j, mm) * c0.get(mm, i, k);
                    }
                    *o += r * x[i] * y[j] * z[k];
                }
            }
        }
    }
    Ok(out)
}

/// Seeded uniform samples, each interval shrunk 5% inward from both ends.
pub fn sample_points(domain: &[(f64, f64)], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            domain
                .iter()
                .map(|&(a, b)| {
                    let w = b - a;
                    rng.gen_range((a + 0.05 * w)..(b - 0.05 * w))
                })
                .collect()
        })
        .collect()
}

/// Random vectors with entries uniform in (−1, 1).
pub fn random_vectors(rng: &mut ChaCha8Rng, dim: usize, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}

/// A random vector field given by its second-order Taylor data at the seed
/// point: value, first and (symmetric) second derivatives uniform in (−1, 1).
pub fn random_field(rng: &mut ChaCha8Rng, n: usize) -> Field {
    (0..n)
        .map(|_| {
            let val = rng.gen_range(-1.0..1.0);
            let grad: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut hess = vec![0.0; n * n];
            for i in 0..n {
                for j in i..n {
                    let h = rng.gen_range(-1.0..1.0);
                    hess[i * n + j] = h;
                    hess[j * n + i] = h;
                }
            }
            Jet2 { val, grad, hess }
        })
        .collect()
}

pub const LEVI_CIVITA_TOL: f64 = 1e-9;
pub const CURVATURE_SYMMETRY_TOL: f64 = 1e-8;
const FIELD_TRIALS: usize = 4;

/// Christoffel symmetry, torsion-freeness and metric compatibility with
/// random second-order fields.
pub fn levi_civita_residuals(geo: &Geo, rng: &mut ChaCha8Rng) -> Residuals {
    let n = geo.n;
    let mut r = Residuals::default();
    let mut sym: f64 = 0.0;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                sym = sym.max((geo.gamma_at(k, i, j).val - geo.gamma_at(k, j, i).val).abs());
            }
        }
    }
    r.add("christoffel_symmetry", sym);
    for _ in 0..FIELD_TRIALS {
        let (x, y, z) = (random_field(rng, n), random_field(rng, n), random_field(rng, n));
        let torsion = linalg::vsub(&linalg::vsub(&geo.nabla(&x, &y), &geo.nabla(&y, &x)), &bracket(&x, &y));
        r.add("torsion", linalg::max_abs(&values(&torsion)));
        let lhs = directional(&x, &geo.inner(&y, &z)).val;
        let rhs = geo.inner(&geo.nabla(&x, &y), &z).val + geo.inner(&y, &geo.nabla(&x, &z)).val;
        r.add("metric_compatibility", (lhs - rhs).abs());
    }
    r
}

/// Antisymmetries, first Bianchi identity and pair symmetry of `R`.
pub fn curvature_symmetry_residuals(geo: &Geo, rng: &mut ChaCha8Rng) -> Residuals {
    let n = geo.n;
    let gm = geo.metric_values();
    let mut r = Residuals::default();
    for _ in 0..FIELD_TRIALS {
        let v = random_vectors(rng, n, 4);
        let (x, y, z, w) = (&v[0], &v[1], &v[2], &v[3]);
        let rm = |a: &[f64], b: &[f64], c: &[f64], d: &[f64]| linalg::inner(&gm, &geo.riemann(a, b, c), d);
        r.add("skew_xy", (rm(x, y, z, w) + rm(y, x, z, w)).abs());
        r.add("skew_zw", (rm(x, y, z, w) + rm(x, y, w, z)).abs());
        r.add("pair_symmetry", (rm(x, y, z, w) - rm(z, w, x, y)).abs());
        let bianchi = linalg::vadd(
            &linalg::vadd(&geo.riemann(x, y, z), &geo.riemann(y, z, x)),
            &geo.riemann(z, x, y),
        );
        r.add("bianchi", linalg::max_abs(&bianchi));
    }
    r
}

fn per_sample(
    m: &ManifoldSpec,
    samples: &[Vec<f64>],
    mut report: CheckReport,
    seed: u64,
    f: impl Fn(&Geo, &mut ChaCha8Rng) -> Residuals,
) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all = Residuals::default();
    for (i, p) in samples.iter().enumerate() {
        let res = f(&Geo::at(m, p)?, &mut rng);
        report.record(i, p, res.max());
        all.absorb(&res);
    }
    all.into_items(&mut report);
    Ok(report.finish())
}

pub fn check_levi_civita(label: &str, m: &ManifoldSpec, samples: &[Vec<f64>], seed: u64, tol_scale: f64) -> Result<CheckReport> {
    let name = format!("levi_civita_{}", m.label);
    let report = CheckReport::new(label, &name, LEVI_CIVITA_TOL * tol_scale);
    per_sample(m, samples, report, seed, levi_civita_residuals)
}

pub fn check_curvature_symmetries(
    label: &str,
    m: &ManifoldSpec,
    samples: &[Vec<f64>],
    seed: u64,
    tol_scale: f64,
) -> Result<CheckReport> {
    let name = format!("curvature_symmetries_{}", m.label);
    let report = CheckReport::new(label, &name, CURVATURE_SYMMETRY_TOL * tol_scale);
    per_sample(m, samples, report, seed, curvature_symmetry_residuals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_str;

    fn manifold(coords: &[&str], diag: &[&str]) -> ManifoldSpec {
        let n = coords.len();
        let mut metric = Vec::new();
        for i in 0..n {
            for j in i..n {
                metric.push(if i == j {
                    parse_str(diag[i]).unwrap()
                } else {
                    Expr::Const(0.0)
                });
            }
        }
        ManifoldSpec {
            label: "test".into(),
            coords: coords.iter().map(|s| s.to_string()).collect(),
            metric,
            j: None,
            domain: vec![(-1.0, 1.0); n],
        }
    }

    fn sphere() -> ManifoldSpec {
        manifold(&["x1", "x2"], &["1", "sin(x1)^2"])
    }

    fn fubini_study() -> ManifoldSpec {
        let s = "1/(1+x1^2+x2^2)^2";
        manifold(&["x1", "x2"], &[s, s])
    }

    #[test]
    fn metric_values() {
        let flat = manifold(&["a", "b", "c"], &["1", "1", "1"]);
        assert_eq!(metric_at(&flat, &[0.3, -1.0, 2.0]).unwrap(), Mat::identity(3));
        let g = metric_at(&sphere(), &[std::f64::consts::FRAC_PI_2, 0.4]).unwrap();
        assert_eq!(g, Mat::identity(2));
        assert_eq!(metric_at(&fubini_study(), &[0.0, 0.0]).unwrap(), Mat::identity(2));
        assert!(matches!(
            metric_at(&sphere(), &[0.0, 0.0]),
            Err(Error::DegenerateMetric { .. })
        ));
    }

    #[test]
    fn tri_index_covers_upper_triangle() {
        let n = 4;
        let mut seen = vec![false; n * (n + 1) / 2];
        for i in 0..n {
            for j in i..n {
                let k = tri_index(n, i, j);
                assert!(!seen[k]);
                seen[k] = true;
                assert_eq!(k, tri_index(n, j, i));
            }
        }
        assert!(seen.iter().all(|s| *s));
    }

    #[test]
    fn sphere_christoffels() {
        let x1 = 0.7;
        let c = christoffel_at(&sphere(), &[x1, 0.2]).unwrap();
        assert!((c.get(0, 1, 1) + x1.sin() * x1.cos()).abs() < 1e-14);
        assert!((c.get(1, 0, 1) - x1.cos() / x1.sin()).abs() < 1e-14);
        assert!((c.get(1, 1, 0) - c.get(1, 0, 1)).abs() == 0.0);
        let geo = Geo::at(&sphere(), &[x1, 0.2]).unwrap();
        for (a, b) in geo.gamma.iter().zip(&c.data) {
            assert!((a.val - b).abs() < 1e-14);
        }
    }

    #[test]
    fn flat_and_fubini_study_origin_have_zero_christoffels() {
        let c = christoffel_at(&manifold(&["a", "b"], &["1", "1"]), &[0.5, 0.5]).unwrap();
        assert!(c.data.iter().all(|v| *v == 0.0));
        let c = christoffel_at(&fubini_study(), &[0.0, 0.0]).unwrap();
        assert!(c.data.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn brackets() {
        let m = manifold(&["x1", "x2"], &["1", "1"]);
        let e1 = VectorField::Constant(vec![1.0, 0.0]);
        let e2 = VectorField::Constant(vec![0.0, 1.0]);
        assert_eq!(lie_bracket_at(&m, &e1, &e2, &[0.1, 0.2]).unwrap(), vec![0.0, 0.0]);
        let x = VectorField::Components(vec![parse_str("x2").unwrap(), Expr::Const(0.0)]);
        assert_eq!(lie_bracket_at(&m, &x, &e2, &[0.1, 0.2]).unwrap(), vec![-1.0, 0.0]);
    }

    fn poly_field(coeffs: &[f64], p: &[f64]) -> Field {
        // Y^k = c0 + c1 x_k + c2 x_{k+1}^2 + c3 sin(x_0)
        let x = Jet2::seed(p);
        let n = p.len();
        (0..n)
            .map(|k| {
                let c = &coeffs[4 * k..4 * k + 4];
                PJ::constant(c[0])
                    + x[k].scale(c[1])
                    + x[(k + 1) % n].powi(2).scale(c[2])
                    + x[0].sin().scale(c[3])
            })
            .collect()
    }

    #[test]
    fn torsion_free_and_metric_compatible_on_sphere() {
        let m = sphere();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in sample_points(&[(0.3, 2.8), (-1.0, 1.0)], 16, 42) {
            let geo = Geo::at(&m, &p).unwrap();
            let cs = random_vectors(&mut rng, 8, 3);
            let (x, y, z) = (poly_field(&cs[0], &p), poly_field(&cs[1], &p), poly_field(&cs[2], &p));
            let torsion = linalg::vsub(&linalg::vsub(&geo.nabla(&x, &y), &geo.nabla(&y, &x)), &bracket(&x, &y));
            assert!(torsion.iter().all(|t| t.val.abs() < 1e-12));
            let lhs = directional(&x, &geo.inner(&y, &z)).val;
            let rhs = geo.inner(&geo.nabla(&x, &y), &z).val + geo.inner(&y, &geo.nabla(&x, &z)).val;
            assert!((lhs - rhs).abs() < 1e-11, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn leibniz_and_tensoriality() {
        let m = sphere();
        let p = [1.1, 0.3];
        let geo = Geo::at(&m, &p).unwrap();
        let x = poly_field(&[0.2, 1.0, -0.5, 0.3, 0.1, -1.0, 0.7, 0.4], &p);
        let y = poly_field(&[1.0, -0.3, 0.2, 0.6, -0.4, 0.5, 0.1, -0.2], &p);
        let f = Jet2::seed(&p)[0].cos() + PJ::constant(2.0);
        let fy: Field = y.iter().map(|c| c.clone() * f.clone()).collect();
        let lhs = values(&geo.nabla(&x, &fy));
        let xf = directional(&x, &f).val;
        let base = values(&geo.nabla(&x, &y));
        for k in 0..2 {
            assert!((lhs[k] - (xf * y[k].val + f.val * base[k])).abs() < 1e-13);
        }
        let fx: Field = x.iter().map(|c| c.clone() * f.clone()).collect();
        let scaled = values(&geo.nabla(&fx, &y));
        for k in 0..2 {
            assert!((scaled[k] - f.val * base[k]).abs() < 1e-13);
        }
    }

    #[test]
    fn sectional_curvatures() {
        let e1 = [1.0, 0.0];
        let e2 = [0.0, 1.0];
        for p in sample_points(&[(0.3, 2.8), (-1.0, 1.0)], 8, 42) {
            let k = Geo::at(&sphere(), &p).unwrap().sectional_curvature(&e1, &e2);
            assert!((k - 1.0).abs() < 1e-12, "{k}");
        }
        for p in sample_points(&[(-0.9, 0.9), (-0.9, 0.9)], 8, 42) {
            let k = Geo::at(&fubini_study(), &p).unwrap().sectional_curvature(&e1, &e2);
            assert!((k - 4.0).abs() < 1e-10, "{k}");
        }
    }

    #[test]
    fn curvature_matches_finite_differences() {
        let m = fubini_study();
        let p = [0.3, -0.5];
        let (x, y, z) = ([0.3, 1.0], [-0.7, 0.2], [0.5, 0.5]);
        let ad = riemann_at(&m, &p, &x, &y, &z).unwrap();
        let fd = riemann_fd_at(&m, &p, &x, &y, &z, 1e-4).unwrap();
        for (a, b) in ad.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
        let flat = manifold(&["a", "b"], &["1", "1"]);
        assert_eq!(riemann_at(&flat, &p, &x, &y, &z).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn sampling_is_seeded_and_shrunk() {
        let d = [(-2.0, 2.0), (0.0, 1.0)];
        let a = sample_points(&d, 16, 42);
        assert_eq!(a, sample_points(&d, 16, 42));
        assert_ne!(a, sample_points(&d, 16, 43));
        for p in &a {
            assert!(p[0] >= -1.8 && p[0] < 1.8);
            assert!(p[1] >= 0.05 && p[1] < 0.95);
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]
        #[test]
        fn connection_and_curvature_symmetries_on_random_metrics(
            a in 0.5f64..2.0,
            b in -0.4f64..0.4,
            c in 0.1f64..1.0,
            p in proptest::collection::vec(-1.0f64..1.0, 3),
            seed in 0u64..1000,
        ) {
            let m = manifold(
                &["x", "y", "z"],
                &[&format!("{a:?} + {c:?}*y^2"), &format!("1 + {c:?}*sin(x)^2"), &format!("exp({b:?}*x*y)")],
            );
            let geo = Geo::at(&m, &p).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let lc = levi_civita_residuals(&geo, &mut rng);
            let cs = curvature_symmetry_residuals(&geo, &mut rng);
            proptest::prop_assert!(lc.max() < 1e-9, "{:?}", lc.entries);
            proptest::prop_assert!(cs.max() < 1e-8, "{:?}", cs.entries);
        }
    }
}
