//! O'Neill's fundamental tensors `T` and `A`, their structural identities,
//! fibre geometry and the mixed curvature relation.

use crate::geometry::{bracket, constant_field, random_field, values, Field, Projector, PJ};
use crate::jet::Scalar;
use crate::linalg;
use crate::report::{CheckReport, Residuals};
use crate::error::Result;
use crate::submersion::{horizontal_basis, vertical_basis, LocalData, SmoothMapSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const IDENTITY_TOL: f64 = 1e-9;
pub const EXTENSION_TOL: f64 = 1e-8;
pub const CURVATURE_TOL: f64 = 1e-6;
pub const FIBER_TOL: f64 = 1e-7;

impl LocalData {
    /// `T_E F = H∇_{VE} VF + V∇_{VE} HF`.
    pub fn t(&self, e: &[PJ], f: &[PJ]) -> Field {
        let ve = self.vertical(e);
        let a = self.horizontal(&self.nabla(&ve, &self.vertical(f)));
        let b = self.vertical(&self.nabla(&ve, &self.horizontal(f)));
        linalg::vadd(&a, &b)
    }

    /// `A_E F = V∇_{HE} HF + H∇_{HE} VF`.
    pub fn a(&self, e: &[PJ], f: &[PJ]) -> Field {
        let he = self.horizontal(e);
        let a = self.vertical(&self.nabla(&he, &self.horizontal(f)));
        let b = self.horizontal(&self.nabla(&he, &self.vertical(f)));
        linalg::vadd(&a, &b)
    }

    pub fn t_at(&self, e: &[f64], f: &[f64]) -> Vec<f64> {
        values(&self.t(&constant_field(e), &constant_field(f)))
    }

    pub fn a_at(&self, e: &[f64], f: &[f64]) -> Vec<f64> {
        values(&self.a(&constant_field(e), &constant_field(f)))
    }

    /// `(∇_W T)_Y Z = ∇_W(T_Y Z) − T_{∇_W Y} Z − T_Y(∇_W Z)`, value only.
    pub fn nabla_t(&self, w: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
        let (w, y, z) = (constant_field(w), constant_field(y), constant_field(z));
        let outer = values(&self.nabla(&w, &self.t(&y, &z)));
        let a = values(&self.t(&self.nabla(&w, &y), &z));
        let b = values(&self.t(&y, &self.nabla(&w, &z)));
        linalg::vsub(&linalg::vsub(&outer, &a), &b)
    }

    fn gnorm(&self, v: &[f64]) -> f64 {
        self.norm1(v)
    }
}

/// g-orthonormal frame fields spanning the image of a projector, built by
/// Gram–Schmidt on jets so the frame carries its own derivatives.
pub fn orthonormal_frame(ld: &LocalData, which: Projector) -> Vec<Field> {
    let n = ld.n();
    let mut frame: Vec<Field> = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        let c = ld.frame(which, &e);
        let original = ld.total.norm(&c);
        if original < 1e-12 {
            continue;
        }
        let mut v = c;
        for b in &frame {
            let k = ld.total.inner(b, &v);
            v = linalg::vsub(&v, &linalg::vscale(b, k));
        }
        let nv = ld.total.norm(&v);
        if nv < 1e-9 * original {
            continue;
        }
        let len = ld.total.inner(&v, &v).sqrt();
        frame.push(v.iter().map(|c| c.clone() / len.clone()).collect());
    }
    frame
}

fn combine(frame: &[Field], coeffs: &[f64]) -> Field {
    let n = frame[0].len();
    let mut out = vec![PJ::constant(0.0); n];
    for (f, c) in frame.iter().zip(coeffs) {
        out = linalg::vadd(&out, &linalg::vscale(f, PJ::constant(*c)));
    }
    out
}

pub fn identity_residuals(ld: &LocalData, rng: &mut ChaCha8Rng) -> Residuals {
    let n = ld.n();
    let mut r = Residuals::default();
    let vecs = crate::geometry::random_vectors(rng, n, 6);
    let (pv, ph) = (ld.pv.values(), ld.ph.values());
    let (u, v) = (pv.matvec(&vecs[0]), pv.matvec(&vecs[1]));
    let (x, y) = (ph.matvec(&vecs[2]), ph.matvec(&vecs[3]));
    r.add("t_symmetric", ld.gnorm(&linalg::vsub(&ld.t_at(&u, &v), &ld.t_at(&v, &u))));
    r.add("a_alternating", ld.gnorm(&linalg::vadd(&ld.a_at(&x, &y), &ld.a_at(&y, &x))));
    let (xf, yf) = (ld.frame(Projector::Horizontal, &vecs[2]), ld.frame(Projector::Horizontal, &vecs[3]));
    let half_bracket: Vec<f64> = values(&ld.vertical(&bracket(&xf, &yf))).iter().map(|c| 0.5 * c).collect();
    r.add("a_half_bracket", ld.gnorm(&linalg::vsub(&values(&ld.a(&xf, &yf)), &half_bracket)));
    let (e, f, g) = (&vecs[3], &vecs[4], &vecs[5]);
    let skew_t = ld.g1(&ld.t_at(e, f), g) + ld.g1(f, &ld.t_at(e, g));
    let skew_a = ld.g1(&ld.a_at(e, f), g) + ld.g1(f, &ld.a_at(e, g));
    r.add("skew_adjoint", skew_t.abs().max(skew_a.abs()));
    let reversal = [
        ph.matvec(&ld.t_at(&u, &x)),
        pv.matvec(&ld.t_at(&u, &v)),
        pv.matvec(&ld.a_at(&x, &u)),
        ph.matvec(&ld.a_at(&x, &y)),
        ld.t_at(&x, e),
        ld.a_at(&u, e),
    ];
    r.add("reversal", reversal.iter().map(|w| linalg::max_abs(w)).fold(0.0, f64::max));
    r
}

fn run(
    label: &str,
    name: &str,
    tol: f64,
    lds: &[LocalData],
    seed: u64,
    f: impl Fn(&LocalData, &mut ChaCha8Rng) -> Residuals,
) -> CheckReport {
    let mut report = CheckReport::new(label, name, tol);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all = Residuals::default();
    for (i, ld) in lds.iter().enumerate() {
        let r = f(ld, &mut rng);
        report.record(i, &ld.point, r.max());
        all.absorb(&r);
    }
    all.into_items(&mut report);
    report.finish()
}

pub fn check_oneill_identities(label: &str, lds: &[LocalData], seed: u64, tol_scale: f64) -> CheckReport {
    run(label, "oneill_identities", IDENTITY_TOL * tol_scale, lds, seed, identity_residuals)
}

/// `T` and `A` evaluated on three extensions of the same pointwise vectors:
/// projected constant frames, Gram–Schmidt jet frames and projected random
/// fields.
pub fn extension_residuals(ld: &LocalData, rng: &mut ChaCha8Rng) -> Residuals {
    let mut r = Residuals::default();
    for (which, name) in [(Projector::Vertical, "t"), (Projector::Horizontal, "a")] {
        let frame = orthonormal_frame(ld, which);
        if frame.is_empty() {
            continue;
        }
        let k = frame.len();
        let c1 = crate::geometry::random_vectors(rng, k, 2);
        let (e, f) = (combine(&frame, &c1[0]), combine(&frame, &c1[1]));
        let (ev, fv) = (values(&e), values(&f));
        let op = |x: &[PJ], y: &[PJ]| if name == "t" { ld.t(x, y) } else { ld.a(x, y) };
        let reference = values(&op(&ld.frame(which, &ev), &ld.frame(which, &fv)));
        let gs = values(&op(&e, &f));
        let mut noise = random_field(rng, ld.n());
        for (c, v) in noise.iter_mut().zip(&fv) {
            c.val = *v;
        }
        let random = values(&op(&ld.frame(which, &ev), &ld.apply(which, &noise)));
        r.add(
            name,
            ld.gnorm(&linalg::vsub(&reference, &gs)).max(ld.gnorm(&linalg::vsub(&reference, &random))),
        );
    }
    r
}

pub fn check_extension_independence(label: &str, lds: &[LocalData], seed: u64, tol_scale: f64) -> CheckReport {
    run(label, "oneill_extension_independence", EXTENSION_TOL * tol_scale, lds, seed, extension_residuals)
}

/// The four splittings of `∇` along `V ⊕ H` and `H∇_U X = A_X U` for a
/// basic field `X`.
pub fn fundamental_residuals(ld: &LocalData, rng: &mut ChaCha8Rng) -> Residuals {
    let n = ld.n();
    let mut r = Residuals::default();
    let vecs = crate::geometry::random_vectors(rng, n, 4);
    let u = ld.frame(Projector::Vertical, &vecs[0]);
    let v = ld.frame(Projector::Vertical, &vecs[1]);
    let x = ld.frame(Projector::Horizontal, &vecs[2]);
    let y = ld.frame(Projector::Horizontal, &vecs[3]);
    let cases: [(&str, &Field, &Field, Field); 4] = [
        ("vv", &u, &v, ld.t(&u, &v)),
        ("vh", &u, &x, ld.t(&u, &x)),
        ("hv", &x, &u, ld.a(&x, &u)),
        ("hh", &x, &y, ld.a(&x, &y)),
    ];
    for (name, e, f, tensor) in cases {
        let full = values(&ld.nabla(e, f));
        let (tangent_part, tensor_part) = match name {
            "vv" | "hv" => (ld.apply_f64(Projector::Vertical, &full), ld.apply_f64(Projector::Horizontal, &full)),
            _ => (ld.apply_f64(Projector::Horizontal, &full), ld.apply_f64(Projector::Vertical, &full)),
        };
        let tensor = values(&tensor);
        let recombined = linalg::vadd(&tangent_part, &tensor);
        let off = ld.gnorm(&linalg::vsub(&tensor_part, &tensor));
        r.add(&format!("split_{name}"), ld.gnorm(&linalg::vsub(&full, &recombined)).max(off));
    }
    let m = ld.base.n;
    let w = crate::geometry::random_vectors(rng, m, 1).remove(0);
    let basic = ld.basic(&w);
    let lhs = ld.apply_f64(Projector::Horizontal, &values(&ld.nabla(&u, &basic)));
    let rhs = values(&ld.a(&basic, &u));
    r.add("basic_vertical_derivative", ld.gnorm(&linalg::vsub(&lhs, &rhs)));
    r
}

pub fn check_fundamental_equations(label: &str, lds: &[LocalData], seed: u64, tol_scale: f64) -> CheckReport {
    run(label, "fundamental_equations", IDENTITY_TOL * tol_scale, lds, seed, fundamental_residuals)
}

/// Second fundamental form data of the fibre through one point.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberGeometry {
    pub max_t_norm: f64,
    pub umbilicity_defect: f64,
    /// Mean curvature vector `H = (1/k) Σ T_{e_a} e_a`.
    pub mean_curvature: Vec<f64>,
    pub mean_curvature_norm: f64,
}

impl FiberGeometry {
    pub fn at(ld: &LocalData) -> FiberGeometry {
        let basis = vertical_basis(ld);
        let k = basis.len();
        let mut mean = vec![0.0; ld.n()];
        let mut tt = vec![vec![Vec::new(); k]; k];
        let mut max_t: f64 = 0.0;
        for a in 0..k {
            for b in 0..k {
                let t = ld.t_at(&basis[a], &basis[b]);
                max_t = max_t.max(ld.gnorm(&t));
                tt[a][b] = t;
            }
            mean = linalg::vadd(&mean, &tt[a][a]);
        }
        if k > 0 {
            mean = linalg::vscale(&mean, 1.0 / k as f64);
        }
        let mut defect: f64 = 0.0;
        for a in 0..k {
            for b in 0..k {
                let want = if a == b { mean.clone() } else { vec![0.0; ld.n()] };
                defect = defect.max(ld.gnorm(&linalg::vsub(&tt[a][b], &want)));
            }
        }
        let mean_curvature_norm = ld.gnorm(&mean);
        FiberGeometry {
            max_t_norm: max_t,
            umbilicity_defect: defect,
            mean_curvature: mean,
            mean_curvature_norm,
        }
    }
}

/// Fibre flags over all sample points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberFlags {
    pub totally_geodesic: bool,
    pub umbilical: bool,
    pub minimal: bool,
}

pub fn fiber_flags(geoms: &[FiberGeometry], tol: f64) -> FiberFlags {
    let worst = |f: fn(&FiberGeometry) -> f64| geoms.iter().map(f).fold(0.0, f64::max);
    FiberFlags {
        totally_geodesic: worst(|g| g.max_t_norm) < tol,
        umbilical: worst(|g| g.umbilicity_defect) < tol,
        minimal: worst(|g| g.mean_curvature_norm) < tol,
    }
}

/// Always PASS: reports how far the fibres are from each flag. The recorded
/// residual is the smallest distance to any of the three conditions.
pub fn check_fiber_geometry(label: &str, lds: &[LocalData], geoms: &[FiberGeometry], tol_scale: f64) -> CheckReport {
    let tol = FIBER_TOL * tol_scale;
    let mut report = CheckReport::new(label, "fiber_geometry", f64::INFINITY);
    for (i, (ld, g)) in lds.iter().zip(geoms).enumerate() {
        report.record(i, &ld.point, g.max_t_norm.min(g.umbilicity_defect).min(g.mean_curvature_norm));
    }
    let flags = fiber_flags(geoms, tol);
    let worst = |f: fn(&FiberGeometry) -> f64| geoms.iter().map(f).fold(0.0, f64::max);
    report.item("max_t_norm", worst(|g| g.max_t_norm));
    report.item("umbilicity_defect", worst(|g| g.umbilicity_defect));
    report.item("max_mean_curvature_norm", worst(|g| g.mean_curvature_norm));
    report.item("min_mean_curvature_norm", geoms.iter().map(|g| g.mean_curvature_norm).fold(f64::INFINITY, f64::min));
    report.item("totally_geodesic", flags.totally_geodesic as u8 as f64);
    report.item("umbilical", flags.umbilical as u8 as f64);
    report.item("minimal", flags.minimal as u8 as f64);
    report.tolerance = tol;
    report.status = crate::report::Status::Pass;
    report
}

/// `g(R(X1,X2)X3, Z)` against the `∇T` terms for vertical `Xi` and
/// horizontal `Z`. `oneill` is consistent with `R(X,Y) = [∇_X, ∇_Y] − ∇_{[X,Y]}`;
/// `opposite_sign` has both `∇T` terms with the opposite sign. The `*_side`
/// entries are the magnitudes of the two sides.
pub fn curvature_residuals(ld: &LocalData, _rng: &mut ChaCha8Rng) -> Residuals {
    let vb = vertical_basis(ld);
    let hb = horizontal_basis(ld);
    let mut r = Residuals::default();
    for x1 in &vb {
        for x2 in &vb {
            for x3 in &vb {
                let rv = ld.total.riemann(x1, x2, x3);
                let d21 = ld.nabla_t(x2, x1, x3);
                let d12 = ld.nabla_t(x1, x2, x3);
                for z in &hb {
                    let (rz, a, b) = (ld.g1(&rv, z), ld.g1(&d21, z), ld.g1(&d12, z));
                    r.add("oneill", (rz + a - b).abs());
                    r.add("opposite_sign", (rz - a + b).abs());
                    r.add("curvature_side", rz.abs());
                    r.add("tensor_side", (a - b).abs());
                }
            }
        }
    }
    r
}

/// Status follows the O'Neill-orientation residual; the opposite-sign orientation
/// is reported as an item.
pub fn check_curvature_relation(label: &str, lds: &[LocalData], tol_scale: f64) -> CheckReport {
    let mut report = CheckReport::new(label, "curvature_relation", CURVATURE_TOL * tol_scale);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut all = Residuals::default();
    for (i, ld) in lds.iter().enumerate() {
        let r = curvature_residuals(ld, &mut rng);
        report.record(i, &ld.point, r.get("oneill"));
        all.absorb(&r);
    }
    all.into_items(&mut report);
    report.finish()
}

/// `(∇_W T)_Y Z` with the derivative of `T` by central differences (step
/// `h`) of the pointwise tensor. Test oracle for [`LocalData::nabla_t`].
pub fn nabla_t_fd(f: &SmoothMapSpec, p: &[f64], w: &[f64], y: &[f64], z: &[f64], h: f64) -> Result<Vec<f64>> {
    let ld = LocalData::new(f, p)?;
    let shifted = |s: f64| -> Result<Vec<f64>> {
        let q: Vec<f64> = p.iter().zip(w).map(|(a, b)| a + s * h * b).collect();
        Ok(LocalData::new(f, &q)?.t_at(y, z))
    };
    let (plus, minus) = (shifted(1.0)?, shifted(-1.0)?);
    let deriv: Vec<f64> = plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect();
    let wf = constant_field(w);
    let gamma = |v: &[f64]| values(&ld.total.gamma_apply(&wf, &constant_field(v)));
    let mut out = linalg::vadd(&deriv, &gamma(&ld.t_at(y, z)));
    out = linalg::vsub(&out, &ld.t_at(&gamma(y), z));
    Ok(linalg::vsub(&out, &ld.t_at(y, &gamma(z))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::geometry::sample_points;
    use crate::report::Status;

    fn local(f: &crate::submersion::SmoothMapSpec, pts: &[Vec<f64>]) -> Vec<LocalData> {
        pts.iter().map(|p| LocalData::new(f, p).unwrap()).collect()
    }

    fn sphere_fibration() -> Vec<LocalData> {
        let f = fixtures::map(fixtures::flat(&["x1", "x2", "x3"]), fixtures::flat(&["y"]), &["sqrt(x1^2+x2^2+x3^2)"]);
        local(&f, &sample_points(&[(0.3, 1.5); 3], 8, 5))
    }

    #[test]
    fn round_spheres_are_umbilical() {
        let lds = sphere_fibration();
        for ld in &lds {
            let g = FiberGeometry::at(ld);
            let r = linalg::norm_with(&crate::linalg::Mat::identity(3), &ld.point);
            assert!(g.umbilicity_defect < 1e-12);
            assert!((g.mean_curvature_norm - 1.0 / r).abs() < 1e-12);
            let outward: f64 = linalg::dot(&g.mean_curvature, &ld.point);
            assert!(outward < 0.0);
        }
        let flags = fiber_flags(&lds.iter().map(FiberGeometry::at).collect::<Vec<_>>(), 1e-7);
        assert!(flags.umbilical && !flags.totally_geodesic && !flags.minimal);
    }

    #[test]
    fn heisenberg_has_totally_geodesic_fibres_and_nonzero_a() {
        let f = fixtures::heisenberg();
        let lds = local(&f, &sample_points(&[(-1.0, 1.0); 3], 6, 1));
        for ld in &lds {
            assert!(FiberGeometry::at(ld).max_t_norm < 1e-12);
            let hb = horizontal_basis(ld);
            let a = ld.a_at(&hb[0], &hb[1]);
            assert!((ld.norm1(&a) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn structural_checks_pass() {
        for (name, lds) in [
            ("spheres", sphere_fibration()),
            ("heisenberg", local(&fixtures::heisenberg(), &sample_points(&[(-1.0, 1.0); 3], 6, 1))),
            ("cp2", local(&fixtures::cp2_spheres(), &sample_points(&[(0.2, 0.9); 4], 4, 2))),
        ] {
            for r in [
                check_oneill_identities(name, &lds, 3, 1.0),
                check_extension_independence(name, &lds, 3, 1.0),
                check_fundamental_equations(name, &lds, 3, 1.0),
                check_curvature_relation(name, &lds, 1.0),
            ] {
                assert_eq!(r.status, Status::Pass, "{name}: {}", r.human_line());
            }
        }
    }

    #[test]
    fn opposite_sign_orientation_differs_on_cp2() {
        let lds = local(&fixtures::cp2_spheres(), &sample_points(&[(0.2, 0.9); 4], 4, 2));
        let r = check_curvature_relation("cp2", &lds, 1.0);
        let opposite = r.items.iter().find(|i| i.name == "opposite_sign").unwrap().value;
        assert!(opposite > 1e-2, "{opposite}");
    }

    #[test]
    fn nabla_t_matches_finite_differences() {
        let f = fixtures::cp2_spheres();
        let p = [0.4, 0.3, 0.5, 0.2];
        let ld = LocalData::new(&f, &p).unwrap();
        let (w, y, z) = ([0.3, -0.5, 0.2, 0.7], [1.0, 0.2, -0.4, 0.1], [-0.3, 0.8, 0.5, -0.6]);
        let fd = nabla_t_fd(&f, &p, &w, &y, &z, 1e-5).unwrap();
        let ad = ld.nabla_t(&w, &y, &z);
        for (a, b) in ad.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
    }
}
