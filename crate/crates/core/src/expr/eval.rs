use super::ast::{Expr, Func};
use crate::jet::{Jet2, Scalar};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("domain error in '{node}': offending value {value}")]
    Domain { node: String, value: f64 },
    #[error("unbound variable '{0}'")]
    Unbound(String),
}

/// Variable bindings: parallel slices of names and values.
#[derive(Debug, Clone, Copy)]
pub struct Env<'a, S> {
    pub names: &'a [String],
    pub values: &'a [S],
}

impl<'a, S: Scalar> Env<'a, S> {
    pub fn new(names: &'a [String], values: &'a [S]) -> Self {
        debug_assert_eq!(names.len(), values.len());
        Self { names, values }
    }

    fn get(&self, name: &str) -> Option<&S> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.values[i])
    }
}

fn domain(node: &Expr, value: f64) -> EvalError {
    EvalError::Domain {
        node: node.to_string(),
        value,
    }
}

impl Expr {
    /// Evaluates in any scalar algebra. Division by zero, `log` of a
    /// nonpositive number and `sqrt` of a negative number are errors; so is
    /// `sqrt` at zero when derivatives are requested, since the derivative
    /// is unbounded there.
    pub fn eval<S: Scalar>(&self, env: &Env<'_, S>) -> Result<S, EvalError> {
        Ok(match self {
            Expr::Const(v) => S::from_f64(*v),
            Expr::Var(n) => env
                .get(n)
                .cloned()
                .ok_or_else(|| EvalError::Unbound(n.clone()))?,
            Expr::Neg(a) => -a.eval(env)?,
            Expr::Add(a, b) => a.eval(env)? + b.eval(env)?,
            Expr::Sub(a, b) => a.eval(env)? - b.eval(env)?,
            Expr::Mul(a, b) => a.eval(env)? * b.eval(env)?,
            Expr::Div(a, b) => {
                let num = a.eval(env)?;
                let den = b.eval(env)?;
                if den.value() == 0.0 {
                    return Err(domain(self, 0.0));
                }
                num / den
            }
            Expr::Pow(a, n) => {
                let base = a.eval(env)?;
                if *n < 0 && base.value() == 0.0 {
                    return Err(domain(self, 0.0));
                }
                base.powi(*n)
            }
            Expr::Call(f, a) => {
                let x = a.eval(env)?;
                let v = x.value();
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Log => {
                        if !(v > 0.0) {
                            return Err(domain(self, v));
                        }
                        x.ln()
                    }
                    Func::Sqrt => {
                        if v < 0.0 || v.is_nan() || (v == 0.0 && !x.is_constant()) {
                            return Err(domain(self, v));
                        }
                        x.sqrt()
                    }
                }
            }
        })
    }

    /// Evaluates with value, gradient and Hessian with respect to every bound
    /// variable, in the order of `names`.
    pub fn eval_jet2<S: Scalar>(&self, names: &[String], point: &[S]) -> Result<Jet2<S>, EvalError> {
        let vars = Jet2::seed(point);
        self.eval(&Env::new(names, &vars))
    }

    /// Jets over jets: the inner layer differentiates the expression, the
    /// outer layer differentiates everything the inner layer produced once
    /// more. Returns the inner jet whose entries are outer jets.
    pub fn eval_jet2_nested(
        &self,
        names: &[String],
        point: &[f64],
    ) -> Result<Jet2<Jet2<f64>>, EvalError> {
        let outer = Jet2::seed(point);
        self.eval_jet2(names, &outer)
    }
}
