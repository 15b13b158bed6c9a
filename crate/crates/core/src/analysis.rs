//! Runs every check on one scenario and on the built-in suite.

use crate::complexstruct::{check_kaehler, check_space_form_fit, validate_almost_hermitian};
use crate::error::{Error, Result};
use crate::geometry::{check_curvature_symmetries, check_levi_civita, sample_points};
use crate::oneill::{self, FiberGeometry, FIBER_TOL};
use crate::report::{CheckReport, Status};
use crate::scenarios::{self, ScenarioSpec};
use crate::semi_invariant::{self as si, classify, split_at, Classification, Context};
use crate::submersion::{self, LocalData};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub tol_scale: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            seed: None,
            samples: None,
            tol_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub label: String,
    pub classification: Option<Classification>,
    pub reports: Vec<CheckReport>,
    /// Set when the run stopped on a numerical degeneracy.
    pub degeneracy: Option<Error>,
}

impl Analysis {
    pub fn report(&self, check_name: &str) -> Option<&CheckReport> {
        self.reports.iter().find(|r| r.check_name == check_name)
    }

    pub fn has_failure(&self) -> bool {
        self.reports.iter().any(|r| r.status.is_failure())
    }

    pub fn exit_code(&self) -> i32 {
        match &self.degeneracy {
            Some(e) => e.exit_code(),
            None if self.has_failure() => 1,
            None => 0,
        }
    }
}

/// Sample points and per-point submersion data, shared by `classify` and
/// `analyze`.
pub struct Prepared {
    pub seed: u64,
    pub points: Vec<Vec<f64>>,
}

pub fn prepare(spec: &ScenarioSpec, settings: &Settings) -> Prepared {
    let seed = settings.seed.unwrap_or(spec.seed);
    let samples = settings.samples.unwrap_or(spec.samples).max(1);
    Prepared {
        seed,
        points: sample_points(&spec.total().domain, samples, seed),
    }
}

pub fn local_data(spec: &ScenarioSpec, points: &[Vec<f64>]) -> Result<Vec<LocalData>> {
    points.iter().map(|p| LocalData::new(&spec.map, p)).collect()
}

pub fn classification(spec: &ScenarioSpec, settings: &Settings) -> Result<Classification> {
    let prep = prepare(spec, settings);
    let lds = local_data(spec, &prep.points)?;
    let splits: Vec<_> = lds.iter().map(split_at).collect();
    classify(&splits)
}

const SUBMERSION_DEPENDENT: &[&str] = &[
    "projector_identities",
    "map_second_fundamental_form",
    "basic_field_lemma",
    "oneill_identities",
    "oneill_extension_independence",
    "fundamental_equations",
    "fiber_geometry",
    "curvature_relation",
    "phi_spectrum_bounds",
    "point_operator_identities",
    "nabla_phi_omega",
    "fiber_local_product",
    "d2_integrability",
    "d1_integrability",
    "totally_geodesic_map",
    "horizontal_foliation",
    "vertical_foliation",
    "product_structure",
    "mean_curvature_location",
    "space_form_consistency",
];

pub fn analyze(spec: &ScenarioSpec, settings: &Settings) -> Analysis {
    let mut analysis = Analysis {
        label: spec.label.clone(),
        classification: None,
        reports: Vec::new(),
        degeneracy: None,
    };
    if let Err(e) = run(spec, settings, &mut analysis) {
        analysis.degeneracy = Some(e);
    }
    for r in &mut analysis.reports {
        r.scenario = spec.label.clone();
    }
    analysis.reports.sort_by(|a, b| a.check_name.cmp(&b.check_name));
    analysis
}

fn run(spec: &ScenarioSpec, settings: &Settings, out: &mut Analysis) -> Result<()> {
    let Prepared { seed, points } = prepare(spec, settings);
    let ts = settings.tol_scale;
    let label = spec.label.as_str();
    let (total, base) = (spec.total(), spec.base());

    out.reports.push(validate_almost_hermitian(total, &points, seed, ts)?);
    out.reports.push(check_levi_civita(label, total, &points, seed, ts)?);
    out.reports.push(check_curvature_symmetries(label, total, &points, seed, ts)?);
    let images = points.iter().map(|p| spec.map.eval_at(p)).collect::<Result<Vec<_>>>()?;
    out.reports.push(check_levi_civita(label, base, &images, seed, ts)?);
    out.reports.push(check_curvature_symmetries(label, base, &images, seed, ts)?);
    let kaehler = check_kaehler(total, &points, ts)?;
    let is_kaehler = kaehler.status == Status::Pass;
    out.reports.push(kaehler);
    let (fit_report, fit) = check_space_form_fit(total, &points, seed)?;
    out.reports.push(fit_report);

    let s = submersion::check_riemannian_submersion(label, &spec.map, &points, ts)?;
    if s.status != Status::Pass {
        let reason = format!("not a Riemannian submersion (S1/S2 residual {:.3e})", s.max_residual);
        out.reports.push(s);
        out.reports.extend(
            SUBMERSION_DEPENDENT
                .iter()
                .map(|name| CheckReport::not_applicable(label, name, f64::NAN, reason.clone())),
        );
        return Ok(());
    }
    out.reports.push(s);

    let lds = local_data(spec, &points)?;
    out.reports.push(submersion::check_projector_identities(label, &lds, ts));
    out.reports.push(submersion::check_map_second_fundamental_form(label, &lds, seed, ts));
    out.reports.push(submersion::check_basic_field_lemma(label, &lds, ts));
    out.reports.push(oneill::check_oneill_identities(label, &lds, seed, ts));
    out.reports.push(oneill::check_extension_independence(label, &lds, seed, ts));
    out.reports.push(oneill::check_fundamental_equations(label, &lds, seed, ts));
    let geoms: Vec<FiberGeometry> = lds.iter().map(FiberGeometry::at).collect();
    let fibers = oneill::fiber_flags(&geoms, FIBER_TOL * ts);
    out.reports.push(oneill::check_fiber_geometry(label, &lds, &geoms, ts));
    out.reports.push(oneill::check_curvature_relation(label, &lds, ts));

    let splits: Vec<_> = lds.iter().map(split_at).collect();
    let classification = classify(&splits)?;
    let ctx = Context {
        label,
        lds: &lds,
        splits: &splits,
        classification: &classification,
        kaehler: is_kaehler,
        geoms: &geoms,
        fibers,
        fit: Some(&fit),
        seed,
        tol_scale: ts,
    };
    out.reports.push(si::check_phi_spectrum_bounds(&ctx));
    out.reports.push(si::check_point_operator_identities(&ctx));
    out.reports.push(si::check_nabla_phi_omega(&ctx));
    let local_product = si::check_fiber_local_product(&ctx);
    out.reports.push(si::check_d2_integrability(&ctx));
    out.reports.push(si::check_d1_integrability(&ctx));
    out.reports.push(si::check_totally_geodesic_map(&ctx));
    let horizontal = si::check_horizontal_foliation(&ctx);
    let vertical = si::check_vertical_foliation(&ctx);
    out.reports.push(si::check_product_structure(&ctx, &local_product, &horizontal, &vertical));
    out.reports.extend([local_product, horizontal, vertical]);
    out.reports.push(si::check_mean_curvature_location(&ctx));
    out.reports.push(si::check_space_form_consistency(&ctx));
    out.classification = Some(classification);
    Ok(())
}

/// Checks that are expected to FAIL on a built-in: the witnesses exist to
/// exhibit exactly these failures.
pub fn expected_failures(name: &str) -> &'static [&'static str] {
    match name {
        "scaled_fiber" | "umbilical_witness" => &[
            "d1_integrability",
            "fiber_local_product",
            "product_structure",
            "totally_geodesic_map",
            "vertical_foliation",
        ],
        "shear_horizontal" => &["horizontal_foliation", "product_structure", "totally_geodesic_map", "vertical_foliation"],
        "cp1_spaceform" => &["product_structure", "totally_geodesic_map", "vertical_foliation"],
        _ => &[],
    }
}

#[derive(Debug, Clone)]
pub struct SuiteEntry {
    pub name: &'static str,
    pub analysis: Analysis,
    /// Checks whose status differs from the expectation table.
    pub unexpected: Vec<String>,
}

impl SuiteEntry {
    pub fn ok(&self) -> bool {
        self.analysis.degeneracy.is_none() && self.unexpected.is_empty()
    }
}

pub fn run_suite(settings: &Settings) -> Vec<SuiteEntry> {
    scenarios::BUILTINS
        .iter()
        .map(|b| {
            let spec = scenarios::builtin(b.name).expect("built-in scenarios are valid");
            let analysis = analyze(&spec, settings);
            let expected = expected_failures(b.name);
            let mut unexpected = Vec::new();
            for r in &analysis.reports {
                let want_fail = expected.contains(&r.check_name.as_str());
                let ok = match r.status {
                    Status::TheoremViolation => false,
                    Status::Fail => want_fail,
                    Status::Pass | Status::NotApplicable => !want_fail,
                };
                if !ok {
                    unexpected.push(format!("{} {}", r.check_name, r.status));
                }
            }
            for name in expected {
                if analysis.report(name).is_none() {
                    unexpected.push(format!("{name} missing"));
                }
            }
            SuiteEntry {
                name: b.name,
                analysis,
                unexpected,
            }
        })
        .collect()
}
