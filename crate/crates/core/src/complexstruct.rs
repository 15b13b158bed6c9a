//! The almost complex structure: Hermitian compatibility, the Kähler
//! condition and the complex-space-form curvature model.

use crate::error::Result;
use crate::geometry::{self, constant_field, values, Geo, ManifoldSpec};
use crate::linalg::{self, Mat};
use crate::report::CheckReport;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const KAEHLER_TOL: f64 = 1e-7;
pub const NOT_SPACE_FORM: f64 = 1e-5;
pub const FIT_TRIPLES: usize = 10;

/// `max |J² + I|` entrywise and `max |g(Jx,Jy) − g(x,y)|` over random pairs.
pub fn hermitian_residuals(geo: &Geo, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let j = geo.j.as_ref().expect("caller checked J").values();
    let n = geo.n;
    let jj = j.matmul(&j);
    let mut sq: f64 = 0.0;
    for i in 0..n {
        for k in 0..n {
            let want = if i == k { -1.0 } else { 0.0 };
            sq = sq.max((jj.at(i, k) - want).abs());
        }
    }
    let g = geo.metric_values();
    let mut herm: f64 = 0.0;
    for pair in geometry::random_vectors(rng, n, 8).chunks(2) {
        let (x, y) = (&pair[0], &pair[1]);
        let (jx, jy) = (j.matvec(x), j.matvec(y));
        herm = herm.max((linalg::inner(&g, &jx, &jy) - linalg::inner(&g, x, y)).abs());
    }
    (sq, herm)
}

pub fn validate_almost_hermitian(
    m: &ManifoldSpec,
    samples: &[Vec<f64>],
    seed: u64,
    tol_scale: f64,
) -> Result<CheckReport> {
    m.require_j()?;
    let mut report = CheckReport::new(&m.label, "almost_hermitian", HERMITIAN_TOL * tol_scale);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sq_max, mut herm_max) = (0.0f64, 0.0f64);
    for (i, p) in samples.iter().enumerate() {
        let geo = Geo::at(m, p)?;
        let (sq, herm) = hermitian_residuals(&geo, &mut rng);
        sq_max = sq_max.max(sq);
        herm_max = herm_max.max(herm);
        report.record(i, p, sq.max(herm));
    }
    report.item("j_squared_plus_identity", sq_max);
    report.item("metric_compatibility", herm_max);
    Ok(report.finish())
}

/// `(∇_X J)Y` for constant fields `x`, `y` at the seed point of `geo`.
pub fn kaehler_defect(geo: &Geo, x: &[f64], y: &[f64]) -> Vec<f64> {
    let j = geo.j.as_ref().expect("caller checked J");
    let (xf, yf) = (constant_field(x), constant_field(y));
    let jy = j.matvec(&yf);
    let a = geo.nabla(&xf, &jy);
    let b = j.matvec(&geo.nabla(&xf, &yf));
    values(&linalg::vsub(&a, &b))
}

pub fn kaehler_defect_at(m: &ManifoldSpec, p: &[f64], x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    m.require_j()?;
    Ok(kaehler_defect(&Geo::at(m, p)?, x, y))
}

/// Largest `|(∇_{e_a} J) e_b|` over a g-orthonormal basis.
pub fn kaehler_defect_norm(geo: &Geo) -> f64 {
    let g = geo.metric_values();
    let coord: Vec<Vec<f64>> = (0..geo.n)
        .map(|i| (0..geo.n).map(|k| if i == k { 1.0 } else { 0.0 }).collect())
        .collect();
    let basis = linalg::gram_schmidt(&g, &coord);
    let mut worst: f64 = 0.0;
    for a in &basis {
        for b in &basis {
            worst = worst.max(linalg::norm_with(&g, &kaehler_defect(geo, a, b)));
        }
    }
    worst
}

pub fn check_kaehler(m: &ManifoldSpec, samples: &[Vec<f64>], tol_scale: f64) -> Result<CheckReport> {
    m.require_j()?;
    let mut report = CheckReport::new(&m.label, "kaehler", KAEHLER_TOL * tol_scale);
    for (i, p) in samples.iter().enumerate() {
        report.record(i, p, kaehler_defect_norm(&Geo::at(m, p)?));
    }
    Ok(report.finish())
}

/// `(c/4)[g(Y,Z)X − g(X,Z)Y + g(JY,Z)JX − g(JX,Z)JY + 2g(X,JY)JZ]`.
pub fn space_form_curvature_with(c: f64, g: &Mat<f64>, j: &Mat<f64>, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
    let (jx, jy, jz) = (j.matvec(x), j.matvec(y), j.matvec(z));
    let ip = |a: &[f64], b: &[f64]| linalg::inner(g, a, b);
    let coeffs = [
        (ip(y, z), x),
        (-ip(x, z), y),
        (ip(&jy, z), &jx[..]),
        (-ip(&jx, z), &jy[..]),
        (2.0 * ip(x, &jy), &jz[..]),
    ];
    let mut out = vec![0.0; x.len()];
    for (k, v) in coeffs {
        for (o, vi) in out.iter_mut().zip(v) {
            *o += k * vi;
        }
    }
    out.iter().map(|v| v * c / 4.0).collect()
}

pub fn space_form_curvature(
    c: f64,
    m: &ManifoldSpec,
    p: &[f64],
    x: &[f64],
    y: &[f64],
    z: &[f64],
) -> Result<Vec<f64>> {
    m.require_j()?;
    let geo = Geo::at(m, p)?;
    let j = geo.j.as_ref().unwrap().values();
    Ok(space_form_curvature_with(c, &geo.metric_values(), &j, x, y, z))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceFormFit {
    pub c_estimate: f64,
    pub residual_max: f64,
    pub per_point: Vec<f64>,
}

impl SpaceFormFit {
    pub fn is_space_form(&self) -> bool {
        self.residual_max <= NOT_SPACE_FORM
    }
}

/// Least-squares `c` with `R ≈ c·R₁`, `R₁` the unit model tensor, over
/// seeded random triples at every sample point.
pub fn fit_space_form_constant(m: &ManifoldSpec, samples: &[Vec<f64>], seed: u64) -> Result<SpaceFormFit> {
    m.require_j()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triples = Vec::new();
    let (mut num, mut den) = (0.0, 0.0);
    let mut per_point = Vec::with_capacity(samples.len());
    for p in samples {
        let geo = Geo::at(m, p)?;
        let g = geo.metric_values();
        let j = geo.j.as_ref().unwrap().values();
        let (mut pn, mut pd) = (0.0, 0.0);
        for t in geometry::random_vectors(&mut rng, m.dim(), 3 * FIT_TRIPLES).chunks(3) {
            let r = geo.riemann(&t[0], &t[1], &t[2]);
            let unit = space_form_curvature_with(1.0, &g, &j, &t[0], &t[1], &t[2]);
            pn += linalg::inner(&g, &r, &unit);
            pd += linalg::inner(&g, &unit, &unit);
            triples.push((g.clone(), r, unit));
        }
        per_point.push(if pd > 0.0 { pn / pd } else { 0.0 });
        num += pn;
        den += pd;
    }
    let c = if den > 0.0 { num / den } else { 0.0 };
    let residual_max = triples
        .iter()
        .map(|(g, r, unit)| {
            let diff: Vec<f64> = r.iter().zip(unit).map(|(a, b)| a - c * b).collect();
            linalg::norm_with(g, &diff)
        })
        .fold(0.0, f64::max);
    Ok(SpaceFormFit {
        c_estimate: c,
        residual_max,
        per_point,
    })
}

pub fn check_space_form_fit(m: &ManifoldSpec, samples: &[Vec<f64>], seed: u64) -> Result<(CheckReport, SpaceFormFit)> {
    let fit = fit_space_form_constant(m, samples, seed)?;
    let mut report = CheckReport::new(&m.label, "space_form_fit", NOT_SPACE_FORM);
    report.item("c_estimate", fit.c_estimate);
    report.item("residual_max", fit.residual_max);
    if fit.is_space_form() {
        for (i, (p, c)) in samples.iter().zip(&fit.per_point).enumerate() {
            report.record(i, p, (c - fit.c_estimate).abs());
        }
        report.max_residual = fit.residual_max;
        Ok((report.finish(), fit))
    } else {
        report.status = crate::report::Status::NotApplicable;
        report.max_residual = fit.residual_max;
        report.gate_reason = Some(format!(
            "NotSpaceForm: curvature deviates from every c-model by {:.3e}",
            fit.residual_max
        ));
        Ok((report, fit))
    }
}
