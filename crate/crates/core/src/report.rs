use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Status {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "NOT-APPLICABLE")]
    NotApplicable,
    #[serde(rename = "THEOREM-VIOLATION")]
    TheoremViolation,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::NotApplicable => "NOT-APPLICABLE",
            Status::TheoremViolation => "THEOREM-VIOLATION",
        }
    }

    pub fn is_failure(self) -> bool {
        matches!(self, Status::Fail | Status::TheoremViolation)
    }

    pub fn parse(s: &str) -> Option<Status> {
        [Status::Pass, Status::Fail, Status::NotApplicable, Status::TheoremViolation]
            .into_iter()
            .find(|st| st.as_str() == s)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRecord {
    pub index: usize,
    pub point: Vec<f64>,
    pub residual: f64,
}

/// A named sub-quantity of a check (a sub-residual or a diagnostic value).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Item {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub scenario: String,
    pub check_name: String,
    pub status: Status,
    pub max_residual: f64,
    pub tolerance: f64,
    pub worst_point: Option<Vec<f64>>,
    pub details: Vec<PointRecord>,
    pub gate_reason: Option<String>,
    pub items: Vec<Item>,
    pub warnings: Vec<String>,
}

impl CheckReport {
    pub fn new(scenario: &str, check_name: &str, tolerance: f64) -> Self {
        Self {
            scenario: scenario.to_string(),
            check_name: check_name.to_string(),
            status: Status::Pass,
            max_residual: 0.0,
            tolerance,
            worst_point: None,
            details: Vec::new(),
            gate_reason: None,
            items: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn not_applicable(scenario: &str, check_name: &str, tolerance: f64, reason: impl Into<String>) -> Self {
        let mut r = Self::new(scenario, check_name, tolerance);
        r.status = Status::NotApplicable;
        r.gate_reason = Some(reason.into());
        r
    }

    /// Records the residual at one sample point and tracks the worst one.
    /// NaN counts as worse than anything.
    pub fn record(&mut self, index: usize, point: &[f64], residual: f64) {
        let worse = residual.is_nan() || residual > self.max_residual || self.worst_point.is_none();
        if worse && !self.max_residual.is_nan() {
            self.max_residual = residual;
            self.worst_point = Some(point.to_vec());
        }
        self.details.push(PointRecord {
            index,
            point: point.to_vec(),
            residual,
        });
    }

    pub fn item(&mut self, name: &str, value: f64) {
        self.items.push(Item {
            name: name.to_string(),
            value,
        });
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    /// PASS exactly when the max residual is below tolerance.
    pub fn finish(mut self) -> Self {
        if self.status == Status::Pass {
            self.status = if self.max_residual < self.tolerance {
                Status::Pass
            } else {
                Status::Fail
            };
        }
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    pub fn human_line(&self) -> String {
        let mut s = format!(
            "{:<17} {:<30} max_residual={:<10.3e} tol={:.1e}",
            self.status.as_str(),
            self.check_name,
            self.max_residual,
            self.tolerance
        );
        if let Some(reason) = &self.gate_reason {
            s.push_str(&format!("  [{reason}]"));
        }
        for w in &self.warnings {
            s.push_str(&format!("\n{:<17} warning: {w}", ""));
        }
        s
    }
}

/// Running maximum of named sub-residuals at one sample point.
#[derive(Debug, Default, Clone)]
pub struct Residuals {
    pub entries: Vec<(String, f64)>,
}

impl Residuals {
    pub fn add(&mut self, name: &str, value: f64) {
        match self.entries.iter_mut().find(|(n, _)| n == name) {
            Some((_, v)) => {
                if value.is_nan() || value > *v {
                    *v = value;
                }
            }
            None => self.entries.push((name.to_string(), value)),
        }
    }

    pub fn max(&self) -> f64 {
        self.entries
            .iter()
            .map(|(_, v)| *v)
            .fold(0.0, |m, v| if v.is_nan() || v > m { v } else { m })
    }

    pub fn get(&self, name: &str) -> f64 {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
            .unwrap_or(0.0)
    }

    /// Merges per-point maxima into running totals across points.
    pub fn absorb(&mut self, other: &Residuals) {
        for (n, v) in &other.entries {
            self.add(n, *v);
        }
    }

    pub fn into_items(self, report: &mut CheckReport) {
        for (n, v) in self.entries {
            report.item(&n, v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_iff_below_tolerance() {
        let mut r = CheckReport::new("s", "c", 1e-9);
        r.record(0, &[0.0], 1e-12);
        r.record(1, &[1.0], 5e-10);
        let r = r.finish();
        assert_eq!(r.status, Status::Pass);
        assert_eq!(r.worst_point, Some(vec![1.0]));

        let mut r = CheckReport::new("s", "c", 1e-9);
        r.record(0, &[0.0], 1e-9);
        assert_eq!(r.finish().status, Status::Fail);

        let mut r = CheckReport::new("s", "c", 1e-9);
        r.record(0, &[0.0], f64::NAN);
        r.record(1, &[1.0], 0.5);
        let r = r.finish();
        assert_eq!(r.status, Status::Fail);
        assert_eq!(r.worst_point, Some(vec![0.0]));
    }

    #[test]
    fn json_mirrors_fields() {
        let r = CheckReport::not_applicable("example3", "kaehler", 1e-7, "no J");
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["status"], "NOT-APPLICABLE");
        assert_eq!(v["gate_reason"], "no J");
        for key in ["check_name", "max_residual", "tolerance", "worst_point", "details", "items", "warnings"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn residual_maxima() {
        let mut a = Residuals::default();
        a.add("x", 1.0);
        a.add("x", 0.5);
        a.add("y", 2.0);
        assert_eq!(a.get("x"), 1.0);
        assert_eq!(a.max(), 2.0);
    }
}
