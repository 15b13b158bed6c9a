//! The map `F`, its differential, the vertical/horizontal splitting and the
//! second fundamental form of the map.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{
    bracket, constant_field, directional, random_field, values, Field, Geo, ManifoldSpec, Projector, ProjectorSource, PJ,
};
use crate::jet::Jet2;
use crate::linalg::{self, Mat};
use crate::report::{CheckReport, Residuals};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const RANK_TOL: f64 = 1e-7;
pub const ISOMETRY_TOL: f64 = 1e-9;
pub const PROJECTOR_TOL: f64 = 1e-11;
pub const SECOND_FORM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothMapSpec {
    pub source: ManifoldSpec,
    pub target: ManifoldSpec,
    pub components: Vec<Expr>,
}

impl SmoothMapSpec {
    pub fn eval_at(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.components
            .iter()
            .map(|c| {
                c.eval(&crate::expr::Env::new(&self.source.coords, p))
                    .map_err(|e| Error::eval(p, e))
            })
            .collect()
    }

    pub fn jacobian_at(&self, p: &[f64]) -> Result<Mat<f64>> {
        let n = self.source.dim();
        let mut data = Vec::with_capacity(self.components.len() * n);
        for c in &self.components {
            let j = c.eval_jet2(&self.source.coords, p).map_err(|e| Error::eval(p, e))?;
            data.extend((0..n).map(|i| j.grad_at(i)));
        }
        Ok(Mat {
            rows: self.components.len(),
            cols: n,
            data,
        })
    }
}

pub fn pushforward_at(f: &SmoothMapSpec, p: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    Ok(f.jacobian_at(p)?.matvec(v))
}

/// Smallest over largest singular value.
pub fn rank_ratio(jac: &Mat<f64>) -> f64 {
    let sv = linalg::singular_values(jac);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
        _ => 0.0,
    }
}

pub fn vertical_projector_at(f: &SmoothMapSpec, p: &[f64]) -> Result<Mat<f64>> {
    Ok(LocalData::new(f, p)?.pv.values())
}

/// Semi-invariant projector families built from `φ̃ = P_V J P_V`; they are
/// the true projectors only when `−φ²` has spectrum in {0, 1}.
#[derive(Debug, Clone)]
pub struct SemiProjectors {
    pub d1: Mat<PJ>,
    pub d2: Mat<PJ>,
    pub jd2: Mat<PJ>,
    pub mu: Mat<PJ>,
}

/// Everything about the submersion at one sample point, as jets seeded there.
#[derive(Debug, Clone)]
pub struct LocalData {
    pub point: Vec<f64>,
    pub total: Geo,
    /// Base geometry at `F(x)`, differentiated in total-space coordinates.
    pub base: Geo,
    pub fx: Vec<PJ>,
    pub jac: Mat<PJ>,
    pub pv: Mat<PJ>,
    pub ph: Mat<PJ>,
    /// `G⁻¹Jᵀ(JG⁻¹Jᵀ)⁻¹`: lifts base coordinate vectors to basic fields.
    pub lift: Mat<PJ>,
    pub semi: Option<SemiProjectors>,
}

impl LocalData {
    pub fn new(f: &SmoothMapSpec, p: &[f64]) -> Result<LocalData> {
        let n = f.source.dim();
        let m = f.target.dim();
        let jac_plain = f.jacobian_at(p)?;
        let ratio = rank_ratio(&jac_plain);
        if ratio < RANK_TOL {
            return Err(Error::RankDeficient {
                point: p.to_vec(),
                ratio,
            });
        }
        let total = Geo::at(&f.source, p)?;
        let seed = Jet2::seed(p);
        let mut fx = Vec::with_capacity(m);
        let mut jac = Mat::<PJ>::zeros(m, n);
        for (a, c) in f.components.iter().enumerate() {
            let v: Jet2<PJ> = c.eval_jet2(&f.source.coords, &seed).map_err(|e| Error::eval(p, e))?;
            for i in 0..n {
                jac.set(a, i, v.grad_at(i));
            }
            fx.push(v.val);
        }
        let base = Geo::at_jets(&f.target, &fx)?;
        let gi_jt = total.ginv.matmul(&jac.transpose());
        let gram = jac.matmul(&gi_jt);
        let gram_inv = gram.inverse().map_err(|_| Error::RankDeficient {
            point: p.to_vec(),
            ratio,
        })?;
        let lift = gi_jt.matmul(&gram_inv);
        let ph = lift.matmul(&jac);
        let pv = Mat::<PJ>::identity(n).sub(&ph);
        let semi = total.j.as_ref().map(|j| {
            let phi = pv.matmul(j).matmul(&pv);
            let d1 = Mat::<PJ>::zeros(n, n).sub(&phi.matmul(&phi));
            let d2 = pv.sub(&d1);
            let jd2 = Mat::<PJ>::zeros(n, n).sub(&j.matmul(&d2).matmul(j));
            let mu = ph.sub(&jd2);
            SemiProjectors { d1, d2, jd2, mu }
        });
        Ok(LocalData {
            point: p.to_vec(),
            total,
            base,
            fx,
            jac,
            pv,
            ph,
            lift,
            semi,
        })
    }

    pub fn n(&self) -> usize {
        self.total.n
    }

    pub fn proj(&self, which: Projector) -> &Mat<PJ> {
        self.projector(which).expect("projector requires an almost complex structure")
    }

    pub fn apply(&self, which: Projector, v: &[PJ]) -> Field {
        self.proj(which).matvec(v)
    }

    pub fn apply_f64(&self, which: Projector, v: &[f64]) -> Vec<f64> {
        self.proj(which).values().matvec(v)
    }

    pub fn vertical(&self, v: &[PJ]) -> Field {
        self.pv.matvec(v)
    }

    pub fn horizontal(&self, v: &[PJ]) -> Field {
        self.ph.matvec(v)
    }

    pub fn j(&self, v: &[PJ]) -> Field {
        self.total.j_apply(v).expect("total space has J")
    }

    pub fn j_f64(&self, v: &[f64]) -> Vec<f64> {
        self.total.j.as_ref().expect("total space has J").values().matvec(v)
    }

    /// `P(x)·c`: the projected frame field through `c`.
    pub fn frame(&self, which: Projector, c: &[f64]) -> Field {
        self.apply(which, &constant_field(c))
    }

    /// The basic field F-related to the constant base field `w`.
    pub fn basic(&self, w: &[f64]) -> Field {
        self.lift.matvec(&constant_field(w))
    }

    pub fn push(&self, v: &[PJ]) -> Field {
        self.jac.matvec(v)
    }

    pub fn push_f64(&self, v: &[f64]) -> Vec<f64> {
        self.jac.values().matvec(v)
    }

    pub fn g1(&self, a: &[f64], b: &[f64]) -> f64 {
        self.total.inner_f64(a, b)
    }

    pub fn norm1(&self, a: &[f64]) -> f64 {
        self.g1(a, a).max(0.0).sqrt()
    }

    pub fn g2(&self, a: &[f64], b: &[f64]) -> f64 {
        self.base.inner_f64(a, b)
    }

    pub fn norm2(&self, a: &[f64]) -> f64 {
        self.g2(a, a).max(0.0).sqrt()
    }

    pub fn nabla(&self, x: &[PJ], y: &[PJ]) -> Field {
        self.total.nabla(x, y)
    }

    /// `(∇F∗)(X,Y) = ∇^F_X F∗Y − F∗(∇¹_X Y)`, valued at `F(p)`.
    pub fn second_fundamental_form(&self, x: &[PJ], y: &[PJ]) -> Vec<f64> {
        let fy = self.push(y);
        let fx = self.push(x);
        let along: Vec<f64> = fy.iter().map(|c| directional(x, c).val).collect();
        let gamma = values(&self.base.gamma_apply(&fx, &fy));
        let inner = self.push_f64(&values(&self.nabla(x, y)));
        along
            .iter()
            .zip(&gamma)
            .zip(&inner)
            .map(|((a, b), c)| a + b - c)
            .collect()
    }
}

impl ProjectorSource for LocalData {
    fn projector(&self, which: Projector) -> Option<&Mat<PJ>> {
        match which {
            Projector::Vertical => Some(&self.pv),
            Projector::Horizontal => Some(&self.ph),
            Projector::D1 => self.semi.as_ref().map(|s| &s.d1),
            Projector::D2 => self.semi.as_ref().map(|s| &s.d2),
            Projector::JD2 => self.semi.as_ref().map(|s| &s.jd2),
            Projector::Mu => self.semi.as_ref().map(|s| &s.mu),
        }
    }
}

/// g-orthonormal basis of the image of the projector `p` at the point.
pub fn basis_of(ld: &LocalData, p: &Mat<f64>) -> Vec<Vec<f64>> {
    let n = ld.n();
    let candidates: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|k| *p.at(k, i)).collect()).collect();
    linalg::gram_schmidt(&ld.total.metric_values(), &candidates)
}

pub fn vertical_basis(ld: &LocalData) -> Vec<Vec<f64>> {
    basis_of(ld, &ld.pv.values())
}

pub fn horizontal_basis(ld: &LocalData) -> Vec<Vec<f64>> {
    basis_of(ld, &ld.ph.values())
}

/// g₂-orthonormal basis at `F(p)`, as base coordinate vectors.
pub fn base_basis(ld: &LocalData) -> Vec<Vec<f64>> {
    let m = ld.base.n;
    let coord: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|k| if i == k { 1.0 } else { 0.0 }).collect())
        .collect();
    linalg::gram_schmidt(&ld.base.metric_values(), &coord)
}

/// S1 (maximal rank) and S2 (horizontal isometry) at one point. A rank
/// drop counts as residual 1.
pub fn submersion_residual_at(f: &SmoothMapSpec, p: &[f64]) -> Result<(f64, f64)> {
    let jac = f.jacobian_at(p)?;
    let ratio = rank_ratio(&jac);
    let g1 = crate::geometry::metric_at(&f.source, p)?;
    let g2 = crate::geometry::metric_at(&f.target, &f.eval_at(p)?)?;
    let ginv = g1.inverse().map_err(|_| Error::DegenerateMetric {
        label: f.source.label.clone(),
        point: p.to_vec(),
        min_eig: 0.0,
    })?;
    let candidates: Vec<Vec<f64>> = (0..jac.rows)
        .map(|a| ginv.matvec(&(0..jac.cols).map(|i| *jac.at(a, i)).collect::<Vec<_>>()))
        .collect();
    let horizontal = linalg::gram_schmidt(&g1, &candidates);
    let pushed: Vec<Vec<f64>> = horizontal.iter().map(|h| jac.matvec(h)).collect();
    let mut s2: f64 = 0.0;
    for (a, pa) in pushed.iter().enumerate() {
        for (b, pb) in pushed.iter().enumerate() {
            let want = if a == b { 1.0 } else { 0.0 };
            s2 = s2.max((linalg::inner(&g2, pa, pb) - want).abs());
        }
    }
    let s1: f64 = if ratio < RANK_TOL || horizontal.len() < jac.rows {
        1.0
    } else {
        0.0
    };
    Ok((ratio, s1.max(s2)))
}

pub fn check_riemannian_submersion(
    label: &str,
    f: &SmoothMapSpec,
    samples: &[Vec<f64>],
    tol_scale: f64,
) -> Result<CheckReport> {
    let mut report = CheckReport::new(label, "riemannian_submersion", ISOMETRY_TOL * tol_scale);
    if f.source.dim() <= f.target.dim() {
        return Ok(CheckReport::not_applicable(
            label,
            "riemannian_submersion",
            report.tolerance,
            "total dimension must exceed base dimension",
        ));
    }
    let mut min_ratio = f64::INFINITY;
    for (i, p) in samples.iter().enumerate() {
        let (ratio, residual) = submersion_residual_at(f, p)?;
        if ratio < RANK_TOL {
            report.warn(format!("S1 fails at sample {i}: singular value ratio {ratio:.3e}"));
        }
        min_ratio = min_ratio.min(ratio);
        report.record(i, p, residual);
    }
    report.item("s1_min_singular_ratio", min_ratio);
    Ok(report.finish())
}

fn max_entry(m: &Mat<f64>) -> f64 {
    linalg::max_abs(&m.data)
}

/// Idempotence, complementarity, `F∗∘P_V = 0` and g-self-adjointness of the
/// vertical and horizontal projectors.
pub fn projector_residuals(ld: &LocalData) -> Residuals {
    let n = ld.n();
    let (pv, ph) = (ld.pv.values(), ld.ph.values());
    let g = ld.total.metric_values();
    let mut r = Residuals::default();
    r.add("idempotent", max_entry(&pv.matmul(&pv).sub(&pv)).max(max_entry(&ph.matmul(&ph).sub(&ph))));
    r.add("complementary", max_entry(&pv.add(&ph).sub(&Mat::identity(n))));
    r.add("orthogonal", max_entry(&pv.matmul(&ph)));
    r.add("kills_vertical", max_entry(&ld.jac.values().matmul(&pv)));
    let gp = g.matmul(&pv);
    r.add("self_adjoint", max_entry(&gp.sub(&gp.transpose())));
    r
}

pub fn check_projector_identities(label: &str, lds: &[LocalData], tol_scale: f64) -> CheckReport {
    let mut report = CheckReport::new(label, "projector_identities", PROJECTOR_TOL * tol_scale);
    let mut all = Residuals::default();
    for (i, ld) in lds.iter().enumerate() {
        let r = projector_residuals(ld);
        report.record(i, &ld.point, r.max());
        all.absorb(&r);
    }
    all.into_items(&mut report);
    report.finish()
}

/// Symmetry of `∇F∗` on random fields, its dependence on pointwise values
/// only, and its vanishing on pairs of basic horizontal fields.
pub fn second_form_residuals(ld: &LocalData, rng: &mut ChaCha8Rng) -> Residuals {
    let n = ld.n();
    let mut r = Residuals::default();
    for _ in 0..3 {
        let x = random_field(rng, n);
        let y = random_field(rng, n);
        let xy = ld.second_fundamental_form(&x, &y);
        let yx = ld.second_fundamental_form(&y, &x);
        r.add("symmetry", ld.norm2(&linalg::vsub(&xy, &yx)));
        let frozen = ld.second_fundamental_form(&constant_field(&values(&x)), &constant_field(&values(&y)));
        r.add("tensorial", ld.norm2(&linalg::vsub(&xy, &frozen)));
    }
    let base = base_basis(ld);
    for w1 in &base {
        for w2 in &base {
            let b = ld.second_fundamental_form(&ld.basic(w1), &ld.basic(w2));
            r.add("horizontal_pairs", ld.norm2(&b));
        }
    }
    r
}

pub fn check_map_second_fundamental_form(label: &str, lds: &[LocalData], seed: u64, tol_scale: f64) -> CheckReport {
    let mut report = CheckReport::new(label, "map_second_fundamental_form", SECOND_FORM_TOL * tol_scale);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all = Residuals::default();
    for (i, ld) in lds.iter().enumerate() {
        let r = second_form_residuals(ld, &mut rng);
        report.record(i, &ld.point, r.max());
        all.absorb(&r);
    }
    all.into_items(&mut report);
    report.finish()
}

/// For basic lifts `X`, `Y` of constant base fields `w1`, `w2`:
/// `g₁(X,Y) = g₂(w1,w2)∘F`, `F∗(H[X,Y]) = 0` and `F∗(H∇_X Y) = ∇²_{w1}w2`.
pub fn basic_field_residuals(ld: &LocalData) -> Residuals {
    let m = ld.base.n;
    let coord: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|k| if i == k { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut r = Residuals::default();
    for w1 in &coord {
        for w2 in &coord {
            let (x, y) = (ld.basic(w1), ld.basic(w2));
            r.add("metric", (ld.total.inner(&x, &y).val - ld.g2(w1, w2)).abs());
            let br = ld.push_f64(&values(&ld.horizontal(&bracket(&x, &y))));
            r.add("bracket", linalg::max_abs(&br));
            let cov = ld.push_f64(&values(&ld.horizontal(&ld.nabla(&x, &y))));
            let want = values(&ld.base.gamma_apply(&constant_field(w1), &constant_field(w2)));
            r.add("connection", linalg::max_abs(&linalg::vsub(&cov, &want)));
        }
    }
    r
}

pub fn check_basic_field_lemma(label: &str, lds: &[LocalData], tol_scale: f64) -> CheckReport {
    let mut report = CheckReport::new(label, "basic_field_lemma", SECOND_FORM_TOL * tol_scale);
    let mut all = Residuals::default();
    for (i, ld) in lds.iter().enumerate() {
        let r = basic_field_residuals(ld);
        report.record(i, &ld.point, r.max());
        all.absorb(&r);
    }
    all.into_items(&mut report);
    report.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_str;
    use crate::report::Status;

    pub(crate) fn flat(coords: &[&str]) -> ManifoldSpec {
        let n = coords.len();
        let mut metric = Vec::new();
        for i in 0..n {
            for j in i..n {
                metric.push(Expr::Const(if i == j { 1.0 } else { 0.0 }));
            }
        }
        ManifoldSpec {
            label: "flat".into(),
            coords: coords.iter().map(|s| s.to_string()).collect(),
            metric,
            j: None,
            domain: vec![(-2.0, 2.0); n],
        }
    }

    fn map(src: &[&str], dst: &[&str], comps: &[&str]) -> SmoothMapSpec {
        SmoothMapSpec {
            source: flat(src),
            target: flat(dst),
            components: comps.iter().map(|s| parse_str(s).unwrap()).collect(),
        }
    }

    fn example3() -> SmoothMapSpec {
        map(
            &["x1", "x2", "x3", "x4", "x5", "x6"],
            &["y1", "y2", "y3"],
            &["(x1+x2)/sqrt(2)", "(x3+x5)/sqrt(2)", "(x4+x6)/sqrt(2)"],
        )
    }

    fn samples(n: usize) -> Vec<Vec<f64>> {
        crate::geometry::sample_points(&vec![(-2.0, 2.0); n], 16, 42)
    }

    #[test]
    fn pushforward_example3() {
        let f = example3();
        let p = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let x1 = pushforward_at(&f, &p, &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((x1[0] - 2f64.sqrt()).abs() < 1e-15 && x1[1] == 0.0 && x1[2] == 0.0);
        let v1 = pushforward_at(&f, &p, &[-1.0, 1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(v1.iter().all(|c| c.abs() < 1e-15));
        assert_eq!(pushforward_at(&f, &p, &[0.0; 6]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn projectors_example3() {
        let f = example3();
        for p in samples(6) {
            let pv = vertical_projector_at(&f, &p).unwrap();
            let sq = pv.matmul(&pv).sub(&pv);
            assert!(linalg::max_abs(&sq.data) < 1e-12);
            let v2 = [0.0, 0.0, -1.0, 0.0, 1.0, 0.0];
            let pv2 = pv.matvec(&v2);
            for (a, b) in pv2.iter().zip(&v2) {
                assert!((a - b).abs() < 1e-15);
            }
            let trace: f64 = (0..6).map(|i| pv.at(i, i)).sum();
            assert!((trace - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn submersion_verdicts() {
        let f = example3();
        assert_eq!(check_riemannian_submersion("e3", &f, &samples(6), 1.0).unwrap().status, Status::Pass);
        let shear = map(&["x1", "x2"], &["y1"], &["x1+x2"]);
        let r = check_riemannian_submersion("shear", &shear, &samples(2), 1.0).unwrap();
        assert_eq!(r.status, Status::Fail);
        assert!((r.max_residual - 1.0).abs() < 1e-12);
        let drop = map(&["x1", "x2", "x3"], &["y1", "y2"], &["x1", "x1"]);
        let r = check_riemannian_submersion("drop", &drop, &samples(3), 1.0).unwrap();
        assert_eq!(r.status, Status::Fail);
        assert!(!r.warnings.is_empty());
        assert!(matches!(
            LocalData::new(&drop, &[0.0, 0.0, 0.0]),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn second_fundamental_form_example3() {
        let f = example3();
        let p = [0.3, -0.2, 1.0, 0.5, -1.1, 0.7];
        let ld = LocalData::new(&f, &p).unwrap();
        let x2 = ld.frame(Projector::Horizontal, &[0.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        let v1 = ld.frame(Projector::Vertical, &[-1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        for v in [&x2, &v1] {
            assert!(ld.second_fundamental_form(v, v).iter().all(|c| c.abs() < 1e-14));
        }
    }

    #[test]
    fn lift_is_basic_section() {
        let f = map(&["x1", "x2", "x3"], &["y1"], &["sqrt(x1^2+x2^2+x3^2)"]);
        let ld = LocalData::new(&f, &[0.3, 0.4, 1.2]).unwrap();
        let b = ld.basic(&[1.0]);
        let pushed = ld.push(&b);
        assert!((pushed[0].val - 1.0).abs() < 1e-14);
        assert!(pushed[0].grad.iter().all(|g| g.abs() < 1e-13));
        let vb = ld.vertical(&b);
        assert!(vb.iter().all(|c| c.val.abs() < 1e-14));
    }

    fn fibration_sphere() -> (SmoothMapSpec, Vec<Vec<f64>>) {
        let f = map(&["x1", "x2", "x3"], &["y1"], &["sqrt(x1^2+x2^2+x3^2)"]);
        (f, crate::geometry::sample_points(&[(0.3, 1.5); 3], 8, 3))
    }

    #[test]
    fn submersion_checks_pass_on_curved_fibration() {
        let (f, pts) = fibration_sphere();
        let lds: Vec<LocalData> = pts.iter().map(|p| LocalData::new(&f, p).unwrap()).collect();
        for r in [
            check_projector_identities("s", &lds, 1.0),
            check_map_second_fundamental_form("s", &lds, 1, 1.0),
            check_basic_field_lemma("s", &lds, 1.0),
        ] {
            assert_eq!(r.status, Status::Pass, "{}", r.human_line());
        }
    }

    #[test]
    fn second_form_detects_non_harmonic_fibres() {
        let f = map(&["x1", "x2"], &["y1"], &["x1^2/2"]);
        let ld = LocalData::new(&f, &[1.0, 0.5]).unwrap();
        let r = second_form_residuals(&ld, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(r.get("horizontal_pairs") > 0.1);
        assert!(r.get("symmetry") < 1e-12);
    }
}
