//! Scenario files and the built-in registry.
//!
//! ```text
//! scenario := total base map option* ;
//! total    := "total" "{" "dim" INT "coords" IDENT+ "metric" matrix "J" matrix ["domain" ranges] "}" ;
//! base     := "base"  "{" "dim" INT "coords" IDENT+ "metric" matrix ["domain" ranges] "}" ;
//! map      := "map" "{" (IDENT "=" EXPR)+ "}" ;
//! matrix   := "diag" "(" EXPR ("," EXPR)* ")" | "rows" "[" row+ "]" ;
//! row      := "[" EXPR ("," EXPR)* "]" ;
//! ranges   := (IDENT "in" "(" NUM "," NUM ")")* ;
//! option   := "seed" INT | "samples" INT | "label" STRING ;
//! ```

use crate::error::{Error, Result};
use crate::expr::{parse_expr, tokenize, Env, Expr, ParseError, Position, SyntaxError, TokenKind, TokenStream};
use crate::geometry::{sample_points, tri_index, ManifoldSpec};
use crate::submersion::SmoothMapSpec;
use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_SAMPLES: usize = 16;
pub const DEFAULT_RANGE: (f64, f64) = (-2.0, 2.0);
pub const SYMMETRY_PROBES: usize = 8;
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub label: String,
    pub map: SmoothMapSpec,
    pub seed: u64,
    pub samples: usize,
}

impl ScenarioSpec {
    pub fn total(&self) -> &ManifoldSpec {
        &self.map.source
    }

    pub fn base(&self) -> &ManifoldSpec {
        &self.map.target
    }
}

enum Matrix {
    Diag(Vec<Expr>),
    Rows(Vec<Vec<Expr>>),
}

struct Block {
    dim: usize,
    dim_pos: Position,
    coords: Vec<String>,
    metric: (Matrix, Position),
    j: Option<(Matrix, Position)>,
    domain: Vec<(String, f64, f64, Position)>,
}

struct Parser<'a> {
    ts: TokenStream<'a>,
}

fn keyword_error(ts: &TokenStream<'_>, kw: &str) -> ParseError {
    ts.error(&[&format!("'{kw}'")])
}

impl<'a> Parser<'a> {
    fn keyword(&mut self, kw: &str) -> std::result::Result<(), ParseError> {
        if self.ts.peek_ident() == Some(kw) {
            self.ts.advance();
            Ok(())
        } else {
            Err(keyword_error(&self.ts, kw))
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        self.ts.peek_ident() == Some(kw)
    }

    fn integer(&mut self) -> std::result::Result<i64, ParseError> {
        match self.ts.peek() {
            Some(TokenKind::Integer(v)) => {
                let v = *v;
                self.ts.advance();
                Ok(v)
            }
            _ => Err(self.ts.error(&["integer"])),
        }
    }

    fn number(&mut self) -> std::result::Result<f64, ParseError> {
        let negative = self.ts.eat(&TokenKind::Minus);
        let v = match self.ts.peek() {
            Some(TokenKind::Integer(v)) => *v as f64,
            Some(TokenKind::Number(v)) => *v,
            _ => return Err(self.ts.error(&["number"])),
        };
        self.ts.advance();
        Ok(if negative { -v } else { v })
    }

    fn expr_list(&mut self, close: &TokenKind, close_name: &str) -> std::result::Result<Vec<Expr>, ParseError> {
        let mut out = vec![parse_expr(&mut self.ts)?];
        while self.ts.eat(&TokenKind::Comma) {
            out.push(parse_expr(&mut self.ts)?);
        }
        self.ts.expect(close, close_name)?;
        Ok(out)
    }

    fn matrix(&mut self) -> std::result::Result<(Matrix, Position), ParseError> {
        let pos = self.ts.position();
        if self.at_keyword("diag") {
            self.ts.advance();
            self.ts.expect(&TokenKind::LParen, "'('")?;
            return Ok((Matrix::Diag(self.expr_list(&TokenKind::RParen, "',' or ')'")?), pos));
        }
        if self.at_keyword("rows") {
            self.ts.advance();
            self.ts.expect(&TokenKind::LBracket, "'['")?;
            let mut rows = Vec::new();
            while self.ts.eat(&TokenKind::LBracket) {
                rows.push(self.expr_list(&TokenKind::RBracket, "',' or ']'")?);
            }
            if rows.is_empty() {
                return Err(self.ts.error(&["'['"]));
            }
            self.ts.expect(&TokenKind::RBracket, "'[' or ']'")?;
            return Ok((Matrix::Rows(rows), pos));
        }
        Err(self.ts.error(&["'diag'", "'rows'"]))
    }

    fn block(&mut self, name: &str, with_j: bool) -> std::result::Result<Block, ParseError> {
        self.keyword(name)?;
        self.ts.expect(&TokenKind::LBrace, "'{'")?;
        self.keyword("dim")?;
        let dim_pos = self.ts.position();
        let dim = self.integer()?.max(0) as usize;
        self.keyword("coords")?;
        let mut coords = Vec::new();
        while let Some(id) = self.ts.peek_ident() {
            if id == "metric" {
                break;
            }
            self.ts.advance();
            coords.push(id.to_string());
        }
        if coords.is_empty() {
            return Err(self.ts.error(&["coordinate name"]));
        }
        self.keyword("metric")?;
        let metric = self.matrix()?;
        let j = if with_j {
            self.keyword("J")?;
            Some(self.matrix()?)
        } else {
            None
        };
        let mut domain = Vec::new();
        if self.at_keyword("domain") {
            self.ts.advance();
            while let Some(id) = self.ts.peek_ident() {
                let pos = self.ts.position();
                self.ts.advance();
                self.keyword("in")?;
                self.ts.expect(&TokenKind::LParen, "'('")?;
                let a = self.number()?;
                self.ts.expect(&TokenKind::Comma, "','")?;
                let b = self.number()?;
                self.ts.expect(&TokenKind::RParen, "')'")?;
                domain.push((id.to_string(), a, b, pos));
            }
        }
        let expected: &[&str] = if with_j { &["'domain'", "'}'"] } else { &["'J' (only allowed in total)", "'domain'", "'}'"] };
        if !self.ts.eat(&TokenKind::RBrace) {
            if !with_j && self.at_keyword("J") {
                return Err(self.ts.error(&["'domain'", "'}' ('J' is only allowed in total)"]));
            }
            return Err(self.ts.error(expected));
        }
        Ok(Block {
            dim,
            dim_pos,
            coords,
            metric,
            j,
            domain,
        })
    }

    fn map_block(&mut self) -> std::result::Result<Vec<(String, Expr, Position)>, ParseError> {
        self.keyword("map")?;
        self.ts.expect(&TokenKind::LBrace, "'{'")?;
        let mut out = Vec::new();
        loop {
            let pos = self.ts.position();
            match self.ts.ident() {
                Some(id) => {
                    self.ts.expect(&TokenKind::Equals, "'='")?;
                    out.push((id.to_string(), parse_expr(&mut self.ts)?, pos));
                }
                None if !out.is_empty() && self.ts.eat(&TokenKind::RBrace) => return Ok(out),
                None => {
                    let expected: &[&str] = if out.is_empty() { &["base coordinate"] } else { &["base coordinate", "'}'"] };
                    return Err(self.ts.error(expected));
                }
            }
        }
    }
}

struct Options {
    seed: Option<u64>,
    samples: Option<usize>,
    label: Option<String>,
}

fn syntax(source_name: &str, err: SyntaxError) -> Error {
    Error::Syntax {
        source_name: source_name.to_string(),
        pos: err.position(),
        message: match err {
            SyntaxError::Lex(e) => format!("unexpected character '{}'", e.ch),
            SyntaxError::Parse(e) => format!("expected {}, found {}", e.expected.join(" or "), e.found),
        },
    }
}

fn invalid(source_name: &str, pos: Position, msg: impl fmt::Display) -> Error {
    Error::Validation(format!("{source_name}:{pos}: {msg}"))
}

/// Parses and validates scenario text. `source_name` prefixes diagnostics.
pub fn load_scenario(text: &str, source_name: &str) -> Result<ScenarioSpec> {
    let tokens = tokenize(text).map_err(|e| syntax(source_name, e.into()))?;
    let mut p = Parser {
        ts: TokenStream::new(&tokens),
    };
    let parsed = (|| {
        let total = p.block("total", true)?;
        let base = p.block("base", false)?;
        let map = p.map_block()?;
        let mut opts = Options {
            seed: None,
            samples: None,
            label: None,
        };
        while !p.ts.at_end() {
            if p.at_keyword("seed") {
                p.ts.advance();
                opts.seed = Some(p.integer()?.max(0) as u64);
            } else if p.at_keyword("samples") {
                p.ts.advance();
                opts.samples = Some(p.integer()?.max(0) as usize);
            } else if p.at_keyword("label") {
                p.ts.advance();
                match p.ts.peek() {
                    Some(TokenKind::Str(s)) => {
                        opts.label = Some(s.clone());
                        p.ts.advance();
                    }
                    _ => return Err(p.ts.error(&["string"])),
                }
            } else {
                return Err(p.ts.error(&["'seed'", "'samples'", "'label'", "end of input"]));
            }
        }
        Ok((total, base, map, opts))
    })();
    let (total, base, map, opts) = parsed.map_err(|e: ParseError| syntax(source_name, e.into()))?;
    build(source_name, total, base, map, opts)
}

fn check_vars(source_name: &str, pos: Position, e: &Expr, coords: &[String], what: &str) -> Result<()> {
    for v in e.variables() {
        if !coords.contains(&v) {
            return Err(invalid(
                source_name,
                pos,
                format!("{what} references undeclared variable '{v}' (declared: {})", coords.join(", ")),
            ));
        }
    }
    Ok(())
}

fn square(source_name: &str, m: Matrix, pos: Position, n: usize, what: &str) -> Result<Vec<Vec<Expr>>> {
    match m {
        Matrix::Diag(d) => {
            if d.len() != n {
                return Err(invalid(source_name, pos, format!("{what} diag has {} entries, expected {n}", d.len())));
            }
            Ok((0..n)
                .map(|i| (0..n).map(|k| if i == k { d[i].clone() } else { Expr::Const(0.0) }).collect())
                .collect())
        }
        Matrix::Rows(rows) => {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(invalid(source_name, pos, format!("{what} must be {n}×{n}")));
            }
            Ok(rows)
        }
    }
}

fn manifold(source_name: &str, label: &str, b: Block) -> Result<ManifoldSpec> {
    let n = b.coords.len();
    if b.dim != n {
        return Err(invalid(
            source_name,
            b.dim_pos,
            format!("{label}: dim {} but {n} coordinates", b.dim),
        ));
    }
    let mut seen = BTreeSet::new();
    for c in &b.coords {
        if !seen.insert(c) {
            return Err(invalid(source_name, b.dim_pos, format!("{label}: duplicate coordinate '{c}'")));
        }
    }
    let (metric, mpos) = b.metric;
    let full = square(source_name, metric, mpos, n, &format!("{label} metric"))?;
    for e in full.iter().flatten() {
        check_vars(source_name, mpos, e, &b.coords, &format!("{label} metric"))?;
    }
    let j = match b.j {
        None => None,
        Some((m, jpos)) => {
            let rows = square(source_name, m, jpos, n, "J")?;
            for e in rows.iter().flatten() {
                check_vars(source_name, jpos, e, &b.coords, "J")?;
            }
            Some(rows.into_iter().flatten().collect())
        }
    };
    let mut domain = vec![DEFAULT_RANGE; n];
    for (id, a, c, pos) in b.domain {
        let Some(i) = b.coords.iter().position(|x| *x == id) else {
            return Err(invalid(source_name, pos, format!("{label} domain: unknown coordinate '{id}'")));
        };
        if !(a < c) {
            return Err(invalid(source_name, pos, format!("{label} domain: empty range ({a}, {c}) for '{id}'")));
        }
        domain[i] = (a, c);
    }
    let mut upper = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for k in i..n {
            upper.push(full[i][k].clone());
        }
    }
    let spec = ManifoldSpec {
        label: label.to_string(),
        coords: b.coords,
        metric: upper,
        j,
        domain,
    };
    check_symmetry(source_name, mpos, &spec, &full)?;
    Ok(spec)
}

fn check_symmetry(source_name: &str, pos: Position, m: &ManifoldSpec, full: &[Vec<Expr>]) -> Result<()> {
    let n = m.dim();
    let off_diagonal = (0..n).any(|i| (i + 1..n).any(|k| full[i][k] != full[k][i]));
    if !off_diagonal {
        return Ok(());
    }
    for p in sample_points(&m.domain, SYMMETRY_PROBES, 0) {
        let env = Env::new(&m.coords, &p);
        for i in 0..n {
            for k in i + 1..n {
                let a = full[i][k].eval(&env);
                let b = full[k][i].eval(&env);
                if let (Ok(a), Ok(b)) = (a, b) {
                    if (a - b).abs() > SYMMETRY_TOL {
                        return Err(invalid(
                            source_name,
                            pos,
                            format!(
                                "{} metric is not symmetric: entry ({},{}) = {a} but ({},{}) = {b} at {p:?}",
                                m.label,
                                i + 1,
                                k + 1,
                                k + 1,
                                i + 1
                            ),
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}

fn build(
    source_name: &str,
    total: Block,
    base: Block,
    map: Vec<(String, Expr, Position)>,
    opts: Options,
) -> Result<ScenarioSpec> {
    let total_pos = total.dim_pos;
    let base_pos = base.dim_pos;
    let total = manifold(source_name, "total", total)?;
    let base = manifold(source_name, "base", base)?;
    if base.dim() >= total.dim() {
        return Err(invalid(
            source_name,
            base_pos,
            format!("base dim {} must be smaller than total dim {}", base.dim(), total.dim()),
        ));
    }
    if let Some(c) = total.coords.iter().find(|c| base.coords.contains(c)) {
        return Err(invalid(source_name, total_pos, format!("coordinate '{c}' declared in both total and base")));
    }
    let mut components: Vec<Option<Expr>> = vec![None; base.dim()];
    for (id, e, pos) in map {
        let Some(i) = base.coords.iter().position(|c| *c == id) else {
            return Err(invalid(source_name, pos, format!("map assigns '{id}', which is not a base coordinate")));
        };
        if components[i].is_some() {
            return Err(invalid(source_name, pos, format!("map assigns '{id}' twice")));
        }
        check_vars(source_name, pos, &e, &total.coords, &format!("map component '{id}'"))?;
        components[i] = Some(e);
    }
    let components = components
        .into_iter()
        .zip(&base.coords)
        .map(|(e, c)| e.ok_or_else(|| Error::Validation(format!("{source_name}: map does not assign '{c}'"))))
        .collect::<Result<Vec<_>>>()?;
    let samples = opts.samples.unwrap_or(DEFAULT_SAMPLES);
    if samples == 0 {
        return Err(Error::Validation(format!("{source_name}: samples must be positive")));
    }
    Ok(ScenarioSpec {
        label: opts.label.unwrap_or_else(|| "scenario".to_string()),
        map: SmoothMapSpec {
            source: total,
            target: base,
            components,
        },
        seed: opts.seed.unwrap_or(DEFAULT_SEED),
        samples,
    })
}

fn write_matrix(out: &mut String, name: &str, n: usize, entry: impl Fn(usize, usize) -> Expr) {
    let diagonal = (0..n).all(|i| (0..n).all(|k| i == k || entry(i, k).is_zero_const()));
    if diagonal {
        let d: Vec<String> = (0..n).map(|i| entry(i, i).to_string()).collect();
        let _ = writeln!(out, "  {name} diag({})", d.join(", "));
        return;
    }
    let _ = writeln!(out, "  {name} rows [");
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|k| entry(i, k).to_string()).collect();
        let _ = writeln!(out, "    [{}]", row.join(", "));
    }
    let _ = writeln!(out, "  ]");
}

fn write_block(out: &mut String, name: &str, m: &ManifoldSpec) {
    let n = m.dim();
    let _ = writeln!(out, "{name} {{");
    let _ = writeln!(out, "  dim {n}");
    let _ = writeln!(out, "  coords {}", m.coords.join(" "));
    write_matrix(out, "metric", n, |i, k| m.metric[tri_index(n, i.min(k), i.max(k))].clone());
    if let Some(j) = &m.j {
        write_matrix(out, "J", n, |i, k| j[i * n + k].clone());
    }
    let ranges: Vec<String> = m
        .coords
        .iter()
        .zip(&m.domain)
        .map(|(c, (a, b))| format!("{c} in ({a:?}, {b:?})"))
        .collect();
    let _ = writeln!(out, "  domain {}", ranges.join(" "));
    let _ = writeln!(out, "}}");
}

impl fmt::Display for ScenarioSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        write_block(&mut out, "total", self.total());
        write_block(&mut out, "base", self.base());
        let _ = writeln!(out, "map {{");
        for (c, e) in self.base().coords.iter().zip(&self.map.components) {
            let _ = writeln!(out, "  {c} = {e}");
        }
        let _ = writeln!(out, "}}");
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "samples {}", self.samples);
        let _ = writeln!(out, "label \"{}\"", self.label.replace('\\', "\\\\").replace('"', "\\\""));
        f.write_str(&out)
    }
}

pub struct Builtin {
    pub name: &'static str,
    pub description: &'static str,
    pub source: &'static str,
}

pub const BUILTINS: &[Builtin] = &[
    Builtin {
        name: "example3",
        description: "R⁶ → R³, ((x1+x2)/√2, (x3+x5)/√2, (x4+x6)/√2)",
        source: include_str!("../scenarios/example3.scn"),
    },
    Builtin {
        name: "anti_invariant_r2",
        description: "R² → R, x ↦ x2",
        source: include_str!("../scenarios/anti_invariant_r2.scn"),
    },
    Builtin {
        name: "invariant_r4",
        description: "R⁴ → R², complex projection onto (x3, x4)",
        source: include_str!("../scenarios/invariant_r4.scn"),
    },
    Builtin {
        name: "generic_rotated",
        description: "R⁶ → R⁴ with kernel span{e1, (e2+e3)/√2}; −φ² has eigenvalue ½",
        source: include_str!("../scenarios/generic_rotated.scn"),
    },
    Builtin {
        name: "product_spheres",
        description: "CP¹ × CP¹ → CP¹ (Fubini–Study factors), projection to the second factor",
        source: include_str!("../scenarios/product_spheres.scn"),
    },
    Builtin {
        name: "cp1_spaceform",
        description: "CP¹ → R, distance-like radius of the affine chart",
        source: include_str!("../scenarios/cp1_spaceform.scn"),
    },
    Builtin {
        name: "scaled_fiber",
        description: "CP² → R, geodesic spheres as fibres (non-umbilical, 𝒯 ≠ 0)",
        source: include_str!("../scenarios/scaled_fiber.scn"),
    },
    Builtin {
        name: "umbilical_witness",
        description: "R⁴ → R, x ↦ |x|: round-sphere fibres with H ≠ 0",
        source: include_str!("../scenarios/umbilical_witness.scn"),
    },
    Builtin {
        name: "shear_horizontal",
        description: "R⁶ → R³, Hopf cone on (x1..x4): non-integrable horizontal distribution",
        source: include_str!("../scenarios/shear_horizontal.scn"),
    },
];

pub fn builtin(name: &str) -> Result<ScenarioSpec> {
    let b = BUILTINS
        .iter()
        .find(|b| b.name == name)
        .ok_or_else(|| Error::UnknownScenario(name.to_string()))?;
    load_scenario(b.source, &format!("builtin:{name}"))
}

/// Resolves `builtin:NAME` or reads a scenario file.
pub fn resolve(arg: &str) -> Result<ScenarioSpec> {
    if let Some(name) = arg.strip_prefix("builtin:") {
        return builtin(name);
    }
    let text = std::fs::read_to_string(arg).map_err(|e| Error::Io {
        path: arg.to_string(),
        message: e.to_string(),
    })?;
    load_scenario(&text, arg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_load_and_round_trip() {
        for b in BUILTINS {
            let spec = builtin(b.name).unwrap();
            assert_eq!(spec.label, b.name);
            assert_eq!(spec.seed, 42);
            let printed = spec.to_string();
            let again = load_scenario(&printed, "printed").unwrap();
            assert_eq!(spec, again, "{}", b.name);
        }
    }

    #[test]
    fn example3_map_components() {
        let spec = builtin("example3").unwrap();
        let comps: Vec<String> = spec.map.components.iter().map(|e| e.to_string()).collect();
        assert_eq!(comps, ["(x1 + x2) / sqrt(2.0)", "(x3 + x5) / sqrt(2.0)", "(x4 + x6) / sqrt(2.0)"]);
    }

    #[test]
    fn unknown_builtin() {
        assert!(matches!(builtin("unknown"), Err(Error::UnknownScenario(_))));
        assert_eq!(builtin("unknown").unwrap_err().exit_code(), 2);
    }

    const SMALL: &str = "total { dim 2 coords x1 x2 metric diag(1, 1) J rows [[0, -1] [1, 0]] }
base { dim 1 coords y metric diag(1) }
map { y = x2 }";

    #[test]
    fn defaults_apply() {
        let s = load_scenario(SMALL, "t").unwrap();
        assert_eq!((s.seed, s.samples, s.label.as_str()), (42, 16, "scenario"));
        assert_eq!(s.total().domain, vec![(-2.0, 2.0); 2]);
    }

    fn err(text: &str) -> Error {
        load_scenario(text, "bad.scn").unwrap_err()
    }

    #[test]
    fn validation_errors() {
        let e = err(&SMALL.replace("y = x2", "y = x3"));
        assert!(matches!(&e, Error::Validation(m) if m.contains("'x3'")), "{e}");
        let e = err(&SMALL.replace("dim 1 coords y metric diag(1)", "dim 2 coords y z metric diag(1, 1)"));
        assert!(matches!(&e, Error::Validation(m) if m.contains("smaller")), "{e}");
        let e = err(&SMALL.replace("diag(1, 1) J", "rows [[1, x1] [0, 1]] J"));
        assert!(matches!(&e, Error::Validation(m) if m.contains("not symmetric")), "{e}");
        let e = err(&SMALL.replace("dim 2 coords x1 x2", "dim 3 coords x1 x2"));
        assert!(matches!(e, Error::Validation(_)));
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let e = err(&SMALL.replace("map { y = x2 }", "map { y = x2 + }"));
        match &e {
            Error::Syntax { pos, .. } => assert_eq!((pos.line, pos.column), (3, 16)),
            other => panic!("{other:?}"),
        }
        assert_eq!(e.exit_code(), 2);
        let e = err(&SMALL.replace("base { dim 1 coords y metric diag(1) }", "base { dim 1 coords y metric diag(1) J diag(1) }"));
        assert!(e.to_string().contains("only allowed in total"), "{e}");
        let e = err(&SMALL.replace("metric diag(1, 1)", "metric diag(1, 1) $"));
        assert!(e.to_string().starts_with("bad.scn:1:"), "{e}");
    }

    proptest::proptest! {
        #[test]
        fn printed_specs_reparse_equal(
            seed in 0u64..1_000_000,
            samples in 1usize..64,
            lo in -5.0f64..0.0,
            width in 0.01f64..5.0,
            label in "[ -~]{0,12}",
        ) {
            let mut spec = load_scenario(SMALL, "t").unwrap();
            spec.seed = seed;
            spec.samples = samples;
            spec.label = label;
            spec.map.source.domain[1] = (lo, lo + width);
            let again = load_scenario(&spec.to_string(), "printed").unwrap();
            proptest::prop_assert_eq!(spec, again);
        }
    }
}
