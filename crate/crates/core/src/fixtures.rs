use crate::expr::{parse_str, Expr};
use crate::geometry::ManifoldSpec;
use crate::submersion::SmoothMapSpec;

fn names(coords: &[&str]) -> Vec<String> {
    coords.iter().map(|s| s.to_string()).collect()
}

/// Manifold from the full metric matrix (upper triangle is read) and an
/// optional row-major J.
pub fn manifold(label: &str, coords: &[&str], metric: &[&str], j: Option<&[&str]>, domain: (f64, f64)) -> ManifoldSpec {
    let n = coords.len();
    let mut upper = Vec::new();
    for i in 0..n {
        for k in i..n {
            upper.push(parse_str(metric[i * n + k]).unwrap());
        }
    }
    ManifoldSpec {
        label: label.into(),
        coords: names(coords),
        metric: upper,
        j: j.map(|js| js.iter().map(|s| parse_str(s).unwrap()).collect()),
        domain: vec![domain; n],
    }
}

pub fn flat(coords: &[&str]) -> ManifoldSpec {
    let n = coords.len();
    let metric: Vec<&str> = (0..n * n).map(|k| if k / n == k % n { "1" } else { "0" }).collect();
    manifold("flat", coords, &metric, None, (-2.0, 2.0))
}

pub fn map(source: ManifoldSpec, target: ManifoldSpec, comps: &[&str]) -> SmoothMapSpec {
    SmoothMapSpec {
        source,
        target,
        components: comps.iter().map(|s| parse_str(s).unwrap()).collect::<Vec<Expr>>(),
    }
}

/// `R³ → R³`-like Heisenberg metric `dx² + dy² + (dz − x dy)²` over `(x, y)`:
/// totally geodesic fibres, non-integrable horizontal distribution.
pub fn heisenberg() -> SmoothMapSpec {
    let total = manifold(
        "heisenberg",
        &["x", "y", "z"],
        &["1", "0", "0", "0", "1+x^2", "-x", "0", "-x", "1"],
        None,
        (-1.0, 1.0),
    );
    map(total, flat(&["u", "v"]), &["x", "y"])
}

/// Fubini–Study CP² in the affine chart (holomorphic sectional curvature 4),
/// with J(∂1)=∂2, J(∂3)=∂4.
pub fn cp2() -> ManifoldSpec {
    let x = ["x1", "x2", "x3", "x4"];
    let p = x;
    let q = ["-x2", "x1", "-x4", "x3"];
    let rho = "(x1^2+x2^2+x3^2+x4^2)";
    let mut metric = Vec::new();
    for i in 0..4 {
        for k in 0..4 {
            let diag = if i == k { format!("1/(1+{rho})") } else { "0".into() };
            metric.push(format!(
                "{diag} - (({})*({}) + ({})*({}))/(1+{rho})^2",
                p[i], p[k], q[i], q[k]
            ));
        }
    }
    let metric: Vec<&str> = metric.iter().map(|s| s.as_str()).collect();
    let j = [
        "0", "-1", "0", "0", "1", "0", "0", "0", "0", "0", "0", "-1", "0", "0", "1", "0",
    ];
    manifold("cp2", &x, &metric, Some(&j), (0.2, 0.9))
}

/// CP² → R along the distance-like function `sqrt(ρ)` with base metric
/// `dy²/(1+y²)²`: the geodesic-sphere fibration.
pub fn cp2_spheres() -> SmoothMapSpec {
    let base = manifold("line", &["y1"], &["1/(1+y1^2)^2"], None, (0.0, 1.0));
    map(cp2(), base, &["sqrt(x1^2+x2^2+x3^2+x4^2)"])
}
