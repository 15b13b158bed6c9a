//! Scalar expression language used for metrics, complex structures and maps.

mod ast;
mod eval;
mod lexer;
mod parser;

pub use ast::{Expr, Func};
pub use eval::{Env, EvalError};
pub use lexer::{tokenize, LexError, Position, Token, TokenKind};
pub use parser::{parse, parse_expr, ParseError, TokenStream};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SyntaxError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

impl SyntaxError {
    pub fn position(&self) -> Position {
        match self {
            SyntaxError::Lex(e) => e.pos,
            SyntaxError::Parse(e) => e.pos,
        }
    }
}

/// Tokenizes and parses a single expression.
pub fn parse_str(source: &str) -> Result<Expr, SyntaxError> {
    let tokens = tokenize(source)?;
    Ok(parse(&tokens)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Jet2;
    use proptest::prelude::*;

    fn x(n: &str) -> Box<Expr> {
        Box::new(Expr::var(n))
    }

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(
            parse_str("x1 + x2 * x3").unwrap(),
            Expr::Add(x("x1"), Box::new(Expr::Mul(x("x2"), x("x3"))))
        );
        assert_eq!(
            parse_str("-x1^2").unwrap(),
            Expr::Neg(Box::new(Expr::Pow(x("x1"), 2)))
        );
        assert_eq!(
            parse_str("a - b - c").unwrap(),
            Expr::Sub(Box::new(Expr::Sub(x("a"), x("b"))), x("c"))
        );
        assert_eq!(
            parse_str("a / b * c").unwrap(),
            Expr::Mul(Box::new(Expr::Div(x("a"), x("b"))), x("c"))
        );
    }

    #[test]
    fn parse_errors() {
        let e = parse_str("sin(").unwrap_err();
        match e {
            SyntaxError::Parse(p) => {
                assert!(p.expected.iter().any(|s| s == "expression"));
                assert_eq!(p.pos.column, 5);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_str("x^2.5").is_err());
        assert!(parse_str("tan(x)").is_err());
        assert!(parse_str("x y").is_err());
        assert!(matches!(parse_str("x1 @ x2"), Err(SyntaxError::Lex(_))));
    }

    #[test]
    fn evaluates_example_map_component() {
        let e = parse_str("(x1+x2)/sqrt(2)").unwrap();
        let n = names(&["x1", "x2"]);
        let v = e.eval(&Env::new(&n, &[1.0, 1.0])).unwrap();
        assert!((v - std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        let n = names(&["x1"]);
        for src in ["1/x1", "log(x1)", "x1^-1"] {
            let e = parse_str(src).unwrap();
            assert!(matches!(
                e.eval(&Env::new(&n, &[0.0])),
                Err(EvalError::Domain { .. })
            ));
        }
        let e = parse_str("sqrt(x1)").unwrap();
        assert!(e.eval(&Env::new(&n, &[-1.0])).is_err());
        assert!(e.eval(&Env::new(&n, &[0.0])).is_ok());
        assert!(e.eval_jet2(&n, &[0.0]).is_err());
        let e = parse_str("y").unwrap();
        assert_eq!(
            e.eval(&Env::new(&n, &[0.0])),
            Err(EvalError::Unbound("y".into()))
        );
    }

    #[test]
    fn jet_of_square() {
        let e = parse_str("x1^2").unwrap();
        let j = e.eval_jet2(&names(&["x1"]), &[3.0]).unwrap();
        assert_eq!((j.val, j.grad.clone(), j.hess.clone()), (9.0, vec![6.0], vec![2.0]));
    }

    #[test]
    fn nested_outer_derivatives() {
        let n = names(&["x1"]);
        let cube = parse_str("x1^3").unwrap().eval_jet2_nested(&n, &[2.0]).unwrap();
        assert_eq!(cube.grad_at(0).grad[0], 12.0);

        let sine = parse_str("sin(x1)").unwrap().eval_jet2_nested(&n, &[0.0]).unwrap();
        assert_eq!(sine.grad_at(0).grad[0], 0.0);

        // Third derivative of x^4 at 1: analytic 24, and central differences
        // of the inner second derivative with h = 1e-4.
        let quart = parse_str("x1^4").unwrap();
        let third = quart.eval_jet2_nested(&n, &[1.0]).unwrap().hess_at(0, 0).grad[0];
        let h = 1e-4;
        let d2 = |x: f64| quart.eval_jet2(&n, &[x]).unwrap().hess[0];
        let fd = (d2(1.0 + h) - d2(1.0 - h)) / (2.0 * h);
        assert!((third - 24.0).abs() < 1e-12);
        assert!((third - fd).abs() < 1e-6);
    }

    #[test]
    fn reals_match_jet_values_exactly() {
        let e = parse_str("exp(sin(x1) * x2) / (1 + x1^2) - sqrt(x2) * log(x2 + 3)").unwrap();
        let n = names(&["x1", "x2"]);
        let p = [0.3, 1.7];
        let plain: f64 = e.eval(&Env::new(&n, &p)).unwrap();
        let jet: Jet2<f64> = e.eval_jet2(&n, &p).unwrap();
        assert_eq!(plain, jet.val);
    }

    // Random ASTs over x1, x2, x3 built only from operations that stay in
    // the domain (no division by, or log/sqrt of, a possibly small value).
    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..50).prop_map(|k| Expr::Const(k as f64 / 8.0)),
            prop_oneof![Just("x1"), Just("x2"), Just("x3")].prop_map(Expr::var),
        ];
        leaf.prop_recursive(6, 48, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| {
                    // a / (2 + b^2) keeps the denominator away from zero.
                    let den = Expr::Add(Box::new(Expr::Const(2.0)), Box::new(Expr::Pow(Box::new(b), 2)));
                    Expr::Div(Box::new(a), Box::new(den))
                }),
                (inner.clone(), 0i32..4).prop_map(|(a, n)| Expr::Pow(Box::new(a), n)),
                inner.clone().prop_map(|a| Expr::Call(Func::Sin, Box::new(a))),
                inner.clone().prop_map(|a| Expr::Call(Func::Cos, Box::new(a))),
                inner.clone().prop_map(|a| {
                    let damped = Expr::Div(
                        Box::new(a.clone()),
                        Box::new(Expr::Add(Box::new(Expr::Const(1.0)), Box::new(Expr::Pow(Box::new(a), 2)))),
                    );
                    Expr::Call(Func::Exp, Box::new(damped))
                }),
                inner.clone().prop_map(|a| {
                    let pos = Expr::Add(Box::new(Expr::Const(1.0)), Box::new(Expr::Pow(Box::new(a), 2)));
                    Expr::Call(Func::Log, Box::new(pos))
                }),
                inner.prop_map(|a| {
                    let pos = Expr::Add(Box::new(Expr::Const(0.5)), Box::new(Expr::Pow(Box::new(a), 2)));
                    Expr::Call(Func::Sqrt, Box::new(pos))
                }),
            ]
        })
    }

    fn rel_close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let printed = e.to_string();
            let back = parse_str(&printed).unwrap();
            prop_assert_eq!(back, e);
        }

        #[test]
        fn jets_match_central_differences(
            e in arb_expr(),
            p in proptest::array::uniform3(-1.0f64..1.0),
        ) {
            let n = names(&["x1", "x2", "x3"]);
            let f = |q: &[f64]| -> f64 { e.eval(&Env::new(&n, q)).unwrap() };
            let jet = e.eval_jet2(&n, &p).unwrap();
            prop_assume!(jet.val.abs() < 1e3 && (0..3).all(|i| jet.grad_at(i).abs() < 1e3));
            prop_assert_eq!(jet.val, f(&p));
            let h = 1e-5;
            for i in 0..3 {
                let mut a = p; a[i] += h;
                let mut b = p; b[i] -= h;
                let fd = (f(&a) - f(&b)) / (2.0 * h);
                prop_assert!(rel_close(jet.grad_at(i), fd, 1e-6), "grad {} {} vs {}", i, jet.grad_at(i), fd);
                for j in 0..3 {
                    // Second differences of values only, h = 1e-4.
                    let hh = 1e-4;
                    let shifted = |si: f64, sj: f64| {
                        let mut q = p;
                        q[i] += si * hh;
                        q[j] += sj * hh;
                        f(&q)
                    };
                    let fdh = (shifted(1.0, 1.0) - shifted(1.0, -1.0) - shifted(-1.0, 1.0)
                        + shifted(-1.0, -1.0)) / (4.0 * hh * hh);
                    prop_assert!(rel_close(jet.hess_at(i, j), fdh, 1e-4),
                        "hess {} {}: {} vs {}", i, j, jet.hess_at(i, j), fdh);
                    prop_assert_eq!(jet.hess_at(i, j), jet.hess_at(j, i));
                }
            }
        }
    }
}
