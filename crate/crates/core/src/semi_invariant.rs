//! The 𝒟₁/𝒟₂/μ splitting, the operators φ, ω, ℬ, 𝒞, classification and
//! the condition checkers of the semi-invariant theory.

use crate::complexstruct::SpaceFormFit;
use crate::error::{Error, Result};
use crate::geometry::{bracket, constant_field, values, Field, Projector, PJ};
use crate::linalg::{self, Mat};
use crate::oneill::{FiberFlags, FiberGeometry};
use crate::report::{CheckReport, Residuals, Status};
use crate::submersion::{base_basis, horizontal_basis, vertical_basis, LocalData};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt;

pub const SPECTRUM_TOL: f64 = 1e-9;
pub const SPECTRUM_GATE: f64 = 1e-6;
pub const OPERATOR_TOL: f64 = 1e-10;
pub const CONDITION_TOL: f64 = 1e-7;
pub const AGREEMENT_TOL: f64 = 1e-6;
pub const SPACE_FORM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Invariant,
    AntiInvariant,
    SemiInvariant,
    Generic,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Invariant => "invariant",
            Kind::AntiInvariant => "anti_invariant",
            Kind::SemiInvariant => "semi_invariant",
            Kind::Generic => "generic",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Orthonormal bases of every distribution at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentSplit {
    pub at: Vec<f64>,
    pub vertical_basis: Vec<Vec<f64>>,
    pub horizontal_basis: Vec<Vec<f64>>,
    pub d1_basis: Vec<Vec<f64>>,
    pub d2_basis: Vec<Vec<f64>>,
    pub jd2_basis: Vec<Vec<f64>>,
    pub mu_basis: Vec<Vec<f64>>,
    /// Eigenvalues of `−φ²`, ascending.
    pub phi_sq_spectrum: Vec<f64>,
    /// Some eigenvalue lies outside `{0, 1} ± 1e-6`.
    pub mixed: bool,
}

fn combination(basis: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; basis[0].len()];
    for (b, c) in basis.iter().zip(coeffs) {
        out = linalg::axpy(&out, *c, b);
    }
    out
}

/// Splits `ker F∗` into the eigenspaces of `−φ²` (eigenvalue 1 → 𝒟₁,
/// 0 → 𝒟₂; ties go to 𝒟₂) and the horizontal space into `J𝒟₂ ⊕ μ`.
pub fn split_at(ld: &LocalData) -> TangentSplit {
    let vb = vertical_basis(ld);
    let hb = horizontal_basis(ld);
    let k = vb.len();
    let jv: Vec<Vec<f64>> = vb.iter().map(|e| ld.j_f64(e)).collect();
    let phi = Mat::from_fn(k, k, |a, b| ld.g1(&vb[a], &jv[b]));
    let minus_phi_sq = Mat::from_fn(k, k, |a, b| -(0..k).map(|c| phi.at(a, c) * phi.at(c, b)).sum::<f64>());
    let (spectrum, vecs) = linalg::symmetric_eigen(&minus_phi_sq);
    let mut d1 = Vec::new();
    let mut d2 = Vec::new();
    let mut mixed = false;
    for (lambda, v) in spectrum.iter().zip(&vecs) {
        if (lambda - 1.0).abs() > SPECTRUM_GATE && lambda.abs() > SPECTRUM_GATE {
            mixed = true;
        }
        let w = combination(&vb, v);
        if (lambda - 1.0).abs() < lambda.abs() {
            d1.push(w);
        } else {
            d2.push(w);
        }
    }
    let g = ld.total.metric_values();
    let d1_basis = linalg::gram_schmidt(&g, &d1);
    let d2_basis = linalg::gram_schmidt(&g, &d2);
    let jd2_basis: Vec<Vec<f64>> = d2_basis.iter().map(|e| ld.j_f64(e)).collect();
    let mut candidates: Vec<Vec<f64>> = jd2_basis.iter().map(|e| ld.apply_f64(Projector::Horizontal, e)).collect();
    let skip = linalg::gram_schmidt(&g, &candidates).len();
    candidates.extend(hb.iter().cloned());
    let mu_basis = linalg::gram_schmidt(&g, &candidates).split_off(skip);
    TangentSplit {
        at: ld.point.clone(),
        vertical_basis: vb,
        horizontal_basis: hb,
        d1_basis,
        d2_basis,
        jd2_basis,
        mu_basis,
        phi_sq_spectrum: spectrum,
        mixed,
    }
}

/// φ, ω, ℬ, 𝒞 as matrices in the vertical and horizontal bases of a split.
#[derive(Debug, Clone, PartialEq)]
pub struct PointOperators {
    pub phi: Mat<f64>,
    pub omega: Mat<f64>,
    pub b: Mat<f64>,
    pub c: Mat<f64>,
}

pub fn point_operators(ld: &LocalData, split: &TangentSplit) -> PointOperators {
    let (vb, hb) = (&split.vertical_basis, &split.horizontal_basis);
    let (k, m) = (vb.len(), hb.len());
    let jv: Vec<Vec<f64>> = vb.iter().map(|e| ld.j_f64(e)).collect();
    let jh: Vec<Vec<f64>> = hb.iter().map(|e| ld.j_f64(e)).collect();
    PointOperators {
        phi: Mat::from_fn(k, k, |a, b| ld.g1(&vb[a], &jv[b])),
        omega: Mat::from_fn(m, k, |a, b| ld.g1(&hb[a], &jv[b])),
        b: Mat::from_fn(k, m, |a, b| ld.g1(&vb[a], &jh[b])),
        c: Mat::from_fn(m, m, |a, b| ld.g1(&hb[a], &jh[b])),
    }
}

impl PointOperators {
    /// The four consequences of `J² = −I`, as maximal entry residuals.
    pub fn identity_residuals(&self) -> [(&'static str, f64); 4] {
        let plus_identity = |mut a: Mat<f64>| {
            for i in 0..a.rows {
                let v = *a.at(i, i) + 1.0;
                a.set(i, i, v);
            }
            linalg::max_abs(&a.data)
        };
        let sum = |a: Mat<f64>, b: Mat<f64>| linalg::max_abs(&a.add(&b).data);
        [
            ("phi2_plus_b_omega", plus_identity(self.phi.matmul(&self.phi).add(&self.b.matmul(&self.omega)))),
            ("omega_phi_plus_c_omega", sum(self.omega.matmul(&self.phi), self.c.matmul(&self.omega))),
            ("phi_b_plus_b_c", sum(self.phi.matmul(&self.b), self.b.matmul(&self.c))),
            ("omega_b_plus_c2", plus_identity(self.omega.matmul(&self.b).add(&self.c.matmul(&self.c)))),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub kind: Kind,
    pub dim_d1: usize,
    pub dim_d2: usize,
    pub dim_mu: usize,
    /// Per-point eigenvalues of `−φ²`.
    pub spectra: Vec<Vec<f64>>,
}

impl Classification {
    pub fn line(&self) -> String {
        format!(
            "CLASSIFICATION {} dimD1={} dimD2={} dimMu={}",
            self.kind, self.dim_d1, self.dim_d2, self.dim_mu
        )
    }

    /// Invariant and anti-invariant submersions are the degenerate cases of
    /// the semi-invariant theory.
    pub fn is_semi_invariant_family(&self) -> bool {
        self.kind != Kind::Generic
    }
}

pub fn classify(splits: &[TangentSplit]) -> Result<Classification> {
    let dims = |s: &TangentSplit| (s.d1_basis.len(), s.d2_basis.len(), s.mu_basis.len());
    let first = splits.first().ok_or_else(|| Error::Validation("no sample points".into()))?;
    let (d1, d2, mu) = dims(first);
    let generic = splits.iter().any(|s| s.mixed);
    if !generic {
        if let Some(s) = splits.iter().find(|s| dims(s) != (d1, d2, mu)) {
            let (a, b, c) = dims(s);
            return Err(Error::RankInstability(format!(
                "(dimD1, dimD2, dimMu) = ({d1}, {d2}, {mu}) at {:?} but ({a}, {b}, {c}) at {:?}",
                first.at, s.at
            )));
        }
    }
    let kind = if generic {
        Kind::Generic
    } else if d2 == 0 {
        Kind::Invariant
    } else if d1 == 0 {
        Kind::AntiInvariant
    } else {
        Kind::SemiInvariant
    };
    Ok(Classification {
        kind,
        dim_d1: d1,
        dim_d2: d2,
        dim_mu: mu,
        spectra: splits.iter().map(|s| s.phi_sq_spectrum.clone()).collect(),
    })
}

impl LocalData {
    pub fn phi(&self, v: &[PJ]) -> Field {
        self.vertical(&self.j(v))
    }

    pub fn omega(&self, v: &[PJ]) -> Field {
        self.horizontal(&self.j(v))
    }

    /// `∇̂_U W = 𝒱∇_U W`.
    pub fn nabla_hat(&self, u: &[PJ], w: &[PJ]) -> Field {
        self.vertical(&self.nabla(u, w))
    }

    /// `(∇_V φ)W = ∇̂_V φW − φ∇̂_V W` and `(∇_V ω)W = ℋ∇_V ωW − ω∇̂_V W`.
    pub fn nabla_phi_omega(&self, v: &[PJ], w: &[PJ]) -> (Vec<f64>, Vec<f64>) {
        let hat = self.nabla_hat(v, w);
        let dphi = linalg::vsub(&values(&self.nabla_hat(v, &self.phi(w))), &values(&self.phi(&hat)));
        let domega = linalg::vsub(
            &values(&self.horizontal(&self.nabla(v, &self.omega(w)))),
            &values(&self.omega(&hat)),
        );
        (dphi, domega)
    }

    fn norm_in(&self, which: Projector, v: &[f64]) -> f64 {
        self.norm1(&self.apply_f64(which, v))
    }
}

/// Everything the condition checkers need besides the per-point data.
pub struct Context<'a> {
    pub label: &'a str,
    pub lds: &'a [LocalData],
    pub splits: &'a [TangentSplit],
    pub classification: &'a Classification,
    pub kaehler: bool,
    pub geoms: &'a [FiberGeometry],
    pub fibers: FiberFlags,
    pub fit: Option<&'a SpaceFormFit>,
    pub seed: u64,
    pub tol_scale: f64,
}

pub enum Gate {
    Kaehler,
    SemiFamily,
    D1,
    D2,
    Umbilical,
    Proper,
    SpaceForm,
}

impl Context<'_> {
    fn tol(&self, base: f64) -> f64 {
        base * self.tol_scale
    }

    fn gated(&self, name: &str, tol: f64, gates: &[Gate]) -> Option<CheckReport> {
        let c = self.classification;
        for g in gates {
            let reason = match g {
                Gate::Kaehler if !self.kaehler => Some("total space is not Kähler".to_string()),
                Gate::SemiFamily if c.kind == Kind::Generic => {
                    Some("generic: spectrum of −φ² is not contained in {0, 1}".into())
                }
                Gate::D1 if c.dim_d1 == 0 => Some("𝒟₁ = {0}".into()),
                Gate::D2 if c.dim_d2 == 0 => Some("𝒟₂ = {0}".into()),
                Gate::Umbilical if !self.fibers.umbilical => Some("fibres are not totally umbilical".into()),
                Gate::Proper if c.kind != Kind::SemiInvariant => Some(format!("kind is {}", c.kind)),
                Gate::SpaceForm => match self.fit {
                    None => Some("no space-form fit".into()),
                    Some(f) if !f.is_space_form() => Some(format!(
                        "NotSpaceForm: residual {:.3e}",
                        f.residual_max
                    )),
                    _ => None,
                },
                _ => None,
            };
            if let Some(r) = reason {
                return Some(CheckReport::not_applicable(self.label, name, tol, r));
            }
        }
        None
    }

    fn per_point(
        &self,
        name: &str,
        tol: f64,
        f: impl Fn(&LocalData, &TangentSplit, &mut ChaCha8Rng) -> Residuals,
    ) -> (CheckReport, Residuals) {
        let mut report = CheckReport::new(self.label, name, tol);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut all = Residuals::default();
        for (i, (ld, split)) in self.lds.iter().zip(self.splits).enumerate() {
            let r = f(ld, split, &mut rng);
            report.record(i, &ld.point, r.max());
            all.absorb(&r);
        }
        (report, all)
    }
}

pub fn check_phi_spectrum_bounds(ctx: &Context) -> CheckReport {
    let (mut report, all) = ctx.per_point("phi_spectrum_bounds", ctx.tol(SPECTRUM_TOL), |ld, s, _| {
        let mut r = Residuals::default();
        let lo = s.phi_sq_spectrum.first().copied().unwrap_or(0.0);
        let hi = s.phi_sq_spectrum.last().copied().unwrap_or(0.0);
        r.add("below_zero", (-lo).max(0.0));
        r.add("above_one", (hi - 1.0).max(0.0));
        if !s.mixed {
            for e in &s.d1_basis {
                let je = ld.j_f64(e);
                r.add("j_d1_in_d1", ld.norm1(&linalg::vsub(&je, &ld.apply_f64(Projector::D1, &je))));
            }
            for e in &s.d2_basis {
                r.add("j_d2_horizontal", ld.norm_in(Projector::Vertical, &ld.j_f64(e)));
            }
        }
        r
    });
    all.into_items(&mut report);
    let eigs: Vec<f64> = ctx.splits.iter().flat_map(|s| s.phi_sq_spectrum.iter().copied()).collect();
    report.item("min_eigenvalue", eigs.iter().copied().fold(f64::INFINITY, f64::min));
    report.item("max_eigenvalue", eigs.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    report.finish()
}

pub fn check_point_operator_identities(ctx: &Context) -> CheckReport {
    let (mut report, all) = ctx.per_point("point_operator_identities", ctx.tol(OPERATOR_TOL), |ld, s, rng| {
        let mut r = Residuals::default();
        for (name, v) in point_operators(ld, s).identity_residuals() {
            r.add(name, v);
        }
        for pair in crate::geometry::random_vectors(rng, ld.n(), 4).chunks(2) {
            let (x, y) = (&pair[0], &pair[1]);
            r.add("j_skew", (ld.g1(&ld.j_f64(x), y) + ld.g1(x, &ld.j_f64(y))).abs());
        }
        r
    });
    all.into_items(&mut report);
    report.finish()
}

pub fn check_nabla_phi_omega(ctx: &Context) -> CheckReport {
    let tol = ctx.tol(CONDITION_TOL);
    if let Some(r) = ctx.gated("nabla_phi_omega", tol, &[Gate::Kaehler]) {
        return r;
    }
    let (mut report, all) = ctx.per_point("nabla_phi_omega", tol, |ld, s, _| {
        let mut r = Residuals::default();
        for v in &s.vertical_basis {
            for w in &s.vertical_basis {
                let vf = constant_field(v);
                let wf = ld.frame(Projector::Vertical, w);
                let (dphi, domega) = ld.nabla_phi_omega(&vf, &wf);
                let tvw = ld.t(&vf, &wf);
                let rhs_phi = linalg::vsub(&values(&ld.vertical(&ld.j(&tvw))), &values(&ld.t(&vf, &ld.omega(&wf))));
                let rhs_omega =
                    linalg::vsub(&values(&ld.horizontal(&ld.j(&tvw))), &values(&ld.t(&vf, &ld.phi(&wf))));
                r.add("eq_nabla_phi", ld.norm1(&linalg::vsub(&dphi, &rhs_phi)));
                r.add("eq_nabla_omega", ld.norm1(&linalg::vsub(&domega, &rhs_omega)));
            }
        }
        r
    });
    all.into_items(&mut report);
    report.finish()
}

fn max_nabla_phi(ld: &LocalData, s: &TangentSplit) -> f64 {
    let mut worst: f64 = 0.0;
    for v in &s.vertical_basis {
        for w in &s.vertical_basis {
            let (dphi, _) = ld.nabla_phi_omega(&constant_field(v), &ld.frame(Projector::Vertical, w));
            worst = worst.max(ld.norm1(&dphi));
        }
    }
    worst
}

pub fn check_fiber_local_product(ctx: &Context) -> CheckReport {
    let tol = ctx.tol(CONDITION_TOL);
    if let Some(r) = ctx.gated("fiber_local_product", tol, &[Gate::Kaehler, Gate::SemiFamily]) {
        return r;
    }
    let (report, _) = ctx.per_point("fiber_local_product", tol, |ld, s, _| {
        let mut r = Residuals::default();
        r.add("nabla_phi", max_nabla_phi(ld, s));
        r
    });
    report.finish()
}

pub fn check_d2_integrability(ctx: &Context) -> CheckReport {
    let tol = ctx.tol(CONDITION_TOL);
    if let Some(r) = ctx.gated("d2_integrability", tol, &[Gate::Kaehler, Gate::SemiFamily, Gate::D2]) {
        return r;
    }
    let (mut report, all) = ctx.per_point("d2_integrability", tol, |ld, s, _| {
        let mut r = Residuals::default();
        let frames: Vec<Field> = s.d2_basis.iter().map(|e| ld.frame(Projector::D2, e)).collect();
        r.add("bracket_outside_d2", 0.0);
        for (a, x) in frames.iter().enumerate() {
            for y in &frames[a + 1..] {
                let br = values(&bracket(x, y));
                let outside = linalg::vsub(&br, &ld.apply_f64(Projector::D2, &br));
                r.add("bracket_outside_d2", ld.norm1(&outside));
            }
        }
        r
    });
    all.into_items(&mut report);
    report.finish()
}

/// Per-point values of two (or three) independent evaluations of one
/// condition, combined into a single agreement-aware report.
struct DualPaths {
    names: Vec<&'static str>,
    worst: Vec<f64>,
    gap: f64,
}

impl DualPaths {
    fn new(names: &[&'static str]) -> Self {
        DualPaths {
            names: names.to_vec(),
            worst: vec![0.0; names.len()],
            gap: 0.0,
        }
    }

    fn absorb(&mut self, vals: &[f64]) {
        for (w, v) in self.worst.iter_mut().zip(vals) {
            if v.is_nan() || *v > *w {
                *w = *v;
            }
        }
        for a in vals {
            for b in vals {
                self.gap = self.gap.max((a - b).abs());
            }
        }
    }

    /// Status from the first (direct) path; disagreement in verdict or a
    /// gap above the agreement tolerance is a theorem violation.
    fn finish(self, mut report: CheckReport, agreement_tol: f64) -> CheckReport {
        let verdicts: Vec<bool> = self.worst.iter().map(|w| *w < report.tolerance).collect();
        let agree = verdicts.iter().all(|v| *v == verdicts[0]) && self.gap < agreement_tol;
        for (n, w) in self.names.iter().zip(&self.worst) {
            report.item(n, *w);
        }
        report.item("gap", self.gap);
        report.item("agreement", agree as u8 as f64);
        let mut report = report.finish();
        if !agree {
            report.status = Status::TheoremViolation;
            report.warn(format!(
                "independent evaluations disagree: {}; gap {:.3e}",
                self.names
                    .iter()
                    .zip(&self.worst)
                    .map(|(n, w)| format!("{n}={w:.3e}"))
                    .collect::<Vec<_>>()
                    .join(", "),
                self.gap
            ));
        }
        report
    }
}

fn run_dual(
    ctx: &Context,
    name: &str,
    paths: &[&'static str],
    f: impl Fn(&LocalData, &TangentSplit) -> Vec<f64>,
) -> CheckReport {
    let tol = ctx.tol(CONDITION_TOL);
    let mut report = CheckReport::new(ctx.label, name, tol);
    let mut dual = DualPaths::new(paths);
    for (i, (ld, s)) in ctx.lds.iter().zip(ctx.splits).enumerate() {
        let vals = f(ld, s);
        report.record(i, &ld.point, vals[0]);
        dual.absorb(&vals);
    }
    dual.finish(report, AGREEMENT_TOL * ctx.tol_scale)
}

/// Path (a): `‖P_{𝒟₂}[X,Y]‖` over 𝒟₁ frames; path (b): the components
/// `g(𝒯_X JY − 𝒯_Y JX, JZ)` over an orthonormal basis of 𝒟₂.
pub fn d1_integrability_paths(ld: &LocalData, s: &TangentSplit) -> Vec<f64> {
    let (mut bracket_path, mut tensor_path) = (0.0f64, 0.0f64);
    for (a, x) in s.d1_basis.iter().enumerate() {
        for y in &s.d1_basis[a + 1..] {
            let (xf, yf) = (ld.frame(Projector::D1, x), ld.frame(Projector::D1, y));
            let br = values(&bracket(&xf, &yf));
            let outside = linalg::vsub(&br, &ld.apply_f64(Projector::D1, &br));
            bracket_path = bracket_path.max(ld.norm1(&outside));
            let t = linalg::vsub(&ld.t_at(x, &ld.j_f64(y)), &ld.t_at(y, &ld.j_f64(x)));
            let sq: f64 = s.d2_basis.iter().map(|z| ld.g1(&t, &ld.j_f64(z)).powi(2)).sum();
            tensor_path = tensor_path.max(sq.sqrt());
        }
    }
    vec![bracket_path, tensor_path]
}

pub fn check_d1_integrability(ctx: &Context) -> CheckReport {
    let name = "d1_integrability";
    let gates = [Gate::Kaehler, Gate::SemiFamily, Gate::D1, Gate::D2];
    if let Some(r) = ctx.gated(name, ctx.tol(CONDITION_TOL), &gates) {
        return r;
    }
    run_dual(ctx, name, &["bracket_path", "tensor_path"], d1_integrability_paths)
}

fn split_norm(ld: &LocalData, a: &[f64], pa: Projector, b: &[f64], pb: Projector) -> f64 {
    (ld.norm_in(pa, a).powi(2) + ld.norm_in(pb, b).powi(2)).sqrt()
}

/// Direct: `‖(∇F∗)(E₁,E₂)‖` over all basis pairs. Condition: the 𝒟₂/μ parts
/// of `∇̂_XφY + 𝒯_XωY`, `𝒯_XφY + ℋ∇_XωY` and of the ℬ/𝒞 analogues for
/// basic `Z`.
pub fn totally_geodesic_paths(ld: &LocalData, s: &TangentSplit) -> Vec<f64> {
    let (mut direct, mut condition) = (0.0f64, 0.0f64);
    let basics: Vec<Field> = base_basis(ld).iter().map(|w| ld.basic(w)).collect();
    for x in &s.vertical_basis {
        let xf = constant_field(x);
        for y in &s.vertical_basis {
            let yf = ld.frame(Projector::Vertical, y);
            direct = direct.max(ld.norm2(&ld.second_fundamental_form(&xf, &yf)));
            let (phy, omy) = (ld.phi(&yf), ld.omega(&yf));
            let a = linalg::vadd(&values(&ld.nabla_hat(&xf, &phy)), &values(&ld.t(&xf, &omy)));
            let b = linalg::vadd(&values(&ld.t(&xf, &phy)), &values(&ld.horizontal(&ld.nabla(&xf, &omy))));
            condition = condition.max(split_norm(ld, &a, Projector::D2, &b, Projector::Mu));
        }
        for z in &basics {
            direct = direct.max(ld.norm2(&ld.second_fundamental_form(&xf, z)));
            let jz = ld.j(z);
            let (bz, cz) = (ld.vertical(&jz), ld.horizontal(&jz));
            let a = linalg::vadd(&values(&ld.nabla_hat(&xf, &bz)), &values(&ld.t(&xf, &cz)));
            let b = linalg::vadd(&values(&ld.t(&xf, &bz)), &values(&ld.horizontal(&ld.nabla(&xf, &cz))));
            condition = condition.max(split_norm(ld, &a, Projector::D2, &b, Projector::Mu));
        }
    }
    for z1 in &basics {
        for z2 in &basics {
            direct = direct.max(ld.norm2(&ld.second_fundamental_form(z1, z2)));
        }
    }
    vec![direct, condition]
}

pub fn check_totally_geodesic_map(ctx: &Context) -> CheckReport {
    let name = "totally_geodesic_map";
    if let Some(r) = ctx.gated(name, ctx.tol(CONDITION_TOL), &[Gate::Kaehler, Gate::SemiFamily]) {
        return r;
    }
    run_dual(ctx, name, &["direct_path", "condition_path"], totally_geodesic_paths)
}

/// Direct: `‖𝒱∇_{Z₁}Z₂‖` over projected horizontal frames. Condition: the J𝒟₂
/// part of `𝒜_{Z₁}ℬZ₂ + ℋ∇_{Z₁}𝒞Z₂` and the 𝒟₁ part of
/// `𝒜_{Z₁}𝒞Z₂ + 𝒱∇_{Z₁}ℬZ₂`.
pub fn horizontal_foliation_paths(ld: &LocalData, s: &TangentSplit) -> Vec<f64> {
    let (mut direct, mut condition) = (0.0f64, 0.0f64);
    for z1 in &s.horizontal_basis {
        let z1f = constant_field(z1);
        for z2 in &s.horizontal_basis {
            let z2f = ld.frame(Projector::Horizontal, z2);
            direct = direct.max(ld.norm1(&values(&ld.vertical(&ld.nabla(&z1f, &z2f)))));
            let jz = ld.j(&z2f);
            let (bz, cz) = (ld.vertical(&jz), ld.horizontal(&jz));
            let h = linalg::vadd(&values(&ld.a(&z1f, &bz)), &values(&ld.horizontal(&ld.nabla(&z1f, &cz))));
            let v = linalg::vadd(&values(&ld.a(&z1f, &cz)), &values(&ld.vertical(&ld.nabla(&z1f, &bz))));
            condition = condition.max(split_norm(ld, &h, Projector::JD2, &v, Projector::D1));
        }
    }
    vec![direct, condition]
}

pub fn check_horizontal_foliation(ctx: &Context) -> CheckReport {
    let name = "horizontal_foliation";
    if let Some(r) = ctx.gated(name, ctx.tol(CONDITION_TOL), &[Gate::Kaehler, Gate::SemiFamily]) {
        return r;
    }
    run_dual(ctx, name, &["direct_path", "condition_path"], horizontal_foliation_paths)
}

/// (iii) `‖𝒯_{X₁}X₂‖`; (i) the 𝒟₂/μ parts of `∇̂_{X₁}φX₂ + 𝒯_{X₁}ωX₂` and
/// `𝒯_{X₁}φX₂ + ℋ∇_{X₁}ωX₂`; (ii) the two families of scalar equalities
/// `g₂((∇F∗)(X₁,X₂), F∗JZ)` (Z ∈ 𝒟₂) and
/// `g₂((∇F∗)(X₁,ωX₂), F∗W) + g₁(𝒯_{X₁}W, φX₂)` (W ∈ μ).
pub fn vertical_foliation_paths(ld: &LocalData, s: &TangentSplit) -> Vec<f64> {
    let (mut direct, mut condition, mut scalar) = (0.0f64, 0.0f64, 0.0f64);
    for x1 in &s.vertical_basis {
        let x1f = constant_field(x1);
        for x2 in &s.vertical_basis {
            let x2f = ld.frame(Projector::Vertical, x2);
            direct = direct.max(ld.norm1(&values(&ld.t(&x1f, &x2f))));
            let (phx, omx) = (ld.phi(&x2f), ld.omega(&x2f));
            let a = linalg::vadd(&values(&ld.nabla_hat(&x1f, &phx)), &values(&ld.t(&x1f, &omx)));
            let b = linalg::vadd(&values(&ld.t(&x1f, &phx)), &values(&ld.horizontal(&ld.nabla(&x1f, &omx))));
            condition = condition.max(split_norm(ld, &a, Projector::D2, &b, Projector::Mu));
            let sff = ld.second_fundamental_form(&x1f, &x2f);
            let mut sq = 0.0;
            for z in &s.d2_basis {
                sq += ld.g2(&sff, &ld.push_f64(&ld.j_f64(z))).powi(2);
            }
            let omx_at = constant_field(&values(&omx));
            let phx_at = values(&phx);
            let sff_omega = ld.second_fundamental_form(&x1f, &omx_at);
            for w in &s.mu_basis {
                let e2 = ld.g2(&sff_omega, &ld.push_f64(w)) + ld.g1(&ld.t_at(x1, w), &phx_at);
                sq += e2 * e2;
            }
            scalar = scalar.max(sq.sqrt());
        }
    }
    vec![direct, condition, scalar]
}

pub fn check_vertical_foliation(ctx: &Context) -> CheckReport {
    let name = "vertical_foliation";
    if let Some(r) = ctx.gated(name, ctx.tol(CONDITION_TOL), &[Gate::Kaehler, Gate::SemiFamily]) {
        return r;
    }
    run_dual(
        ctx,
        name,
        &["direct_path", "condition_path", "scalar_path"],
        vertical_foliation_paths,
    )
}

fn item(report: &CheckReport, name: &str) -> f64 {
    report.items.iter().find(|i| i.name == name).map_or(f64::NAN, |i| i.value)
}

/// Local product verdicts composed from the fibre, horizontal and vertical
/// foliation conditions.
pub fn check_product_structure(
    ctx: &Context,
    local_product: &CheckReport,
    horizontal: &CheckReport,
    vertical: &CheckReport,
) -> CheckReport {
    let name = "product_structure";
    let tol = ctx.tol(CONDITION_TOL);
    if let Some(r) = ctx.gated(name, tol, &[Gate::Kaehler, Gate::SemiFamily]) {
        return r;
    }
    let mut report = CheckReport::new(ctx.label, name, tol);
    let horizontal_res = horizontal.max_residual;
    let nabla_phi = local_product.max_residual;
    let scalar = item(vertical, "scalar_path");
    let via_phi = nabla_phi.max(horizontal_res);
    let via_foliations = scalar.max(horizontal_res);
    for (i, ld) in ctx.lds.iter().enumerate() {
        let h = horizontal.details.get(i).map_or(0.0, |d| d.residual);
        let p = local_product.details.get(i).map_or(0.0, |d| d.residual);
        let v = vertical.details.get(i).map_or(0.0, |d| d.residual);
        report.record(i, &ld.point, h.max(p).max(v));
    }
    report.max_residual = via_phi.max(via_foliations);
    report.item("nabla_phi", nabla_phi);
    report.item("horizontal_foliation", horizontal_res);
    report.item("vertical_foliation_scalar", scalar);
    report.item("product_via_nabla_phi", (via_phi < tol) as u8 as f64);
    report.item("product_via_foliations", (via_foliations < tol) as u8 as f64);
    if [horizontal, vertical].iter().any(|r| r.status == Status::TheoremViolation) {
        report.status = Status::TheoremViolation;
        report.warn("a component check reports disagreeing evaluations");
    }
    report.finish()
}

pub fn check_mean_curvature_location(ctx: &Context) -> CheckReport {
    let name = "mean_curvature_location";
    let tol = ctx.tol(CONDITION_TOL);
    if let Some(r) = ctx.gated(name, tol, &[Gate::Umbilical, Gate::SemiFamily, Gate::Kaehler]) {
        return r;
    }
    let mut report = CheckReport::new(ctx.label, name, tol);
    let mut h_norm: f64 = 0.0;
    for (i, (ld, g)) in ctx.lds.iter().zip(ctx.geoms).enumerate() {
        report.record(i, &ld.point, ld.norm_in(Projector::Mu, &g.mean_curvature));
        h_norm = h_norm.max(g.mean_curvature_norm);
    }
    report.item("max_mean_curvature_norm", h_norm);
    report.finish()
}

/// Umbilical fibres of a proper semi-invariant submersion from a complex
/// space form force `c = 0`, and `dim 𝒟₂ = 1` unless the fibres are totally
/// geodesic.
pub fn check_space_form_consistency(ctx: &Context) -> CheckReport {
    let name = "space_form_consistency";
    let tol = ctx.tol(SPACE_FORM_TOL);
    let gates = [Gate::Kaehler, Gate::SpaceForm, Gate::Proper, Gate::Umbilical];
    if let Some(r) = ctx.gated(name, tol, &gates) {
        return r;
    }
    let fit = ctx.fit.expect("gated on the fit");
    let mut report = CheckReport::new(ctx.label, name, tol);
    let dimension_clause = !ctx.fibers.totally_geodesic && ctx.classification.dim_d2 != 1;
    let residual = fit.c_estimate.abs().max(if dimension_clause { 1.0 } else { 0.0 });
    for (i, ld) in ctx.lds.iter().enumerate() {
        report.record(i, &ld.point, residual);
    }
    report.item("c_estimate", fit.c_estimate);
    report.item("dim_d2", ctx.classification.dim_d2 as f64);
    report.item("totally_geodesic", ctx.fibers.totally_geodesic as u8 as f64);
    let mut report = report.finish();
    if report.status == Status::Fail {
        report.status = Status::TheoremViolation;
    }
    report
}
