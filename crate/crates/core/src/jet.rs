//! Second-order forward-mode jets and the scalar algebra they live in.
//!
//! [`Jet2`] carries a value, a gradient and a Hessian with respect to a set
//! of active variables. It is generic over its own scalar type, so
//! `Jet2<Jet2<f64>>` differentiates a quantity that was itself built from
//! first and second derivatives: the outer layer sees the inner gradient as
//! an ordinary value and differentiates it once more.
//!
//! Constants are stored with empty gradient and Hessian vectors; every
//! operation treats a missing derivative block as zero.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar algebra used by the expression evaluator and the geometry kernels.
pub trait Scalar:
    Clone
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;

    /// Plain value, with every derivative layer stripped.
    fn value(&self) -> f64;

    /// True when the scalar carries no derivative information.
    fn is_constant(&self) -> bool;

    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sqrt(&self) -> Self;

    /// Integer power. Callers guarantee a nonzero base for negative exponents.
    fn powi(&self, n: i32) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }

    fn scale(&self, k: f64) -> Self {
        self.clone() * Self::from_f64(k)
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn is_constant(&self) -> bool {
        true
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn powi(&self, n: i32) -> Self {
        f64::powi(*self, n)
    }
    fn scale(&self, k: f64) -> Self {
        self * k
    }
}

/// Value, gradient and Hessian of a scalar function of `n` active variables.
///
/// `hess` is row-major `n × n`. An empty `grad` (and `hess`) means the jet is
/// a constant.
#[derive(Clone, PartialEq)]
pub struct Jet2<S> {
    pub val: S,
    pub grad: Vec<S>,
    pub hess: Vec<S>,
}

impl<S: Scalar> Jet2<S> {
    pub fn constant(val: S) -> Self {
        Self {
            val,
            grad: Vec::new(),
            hess: Vec::new(),
        }
    }

    /// The `index`-th of `n` independent variables, valued at `val`.
    pub fn variable(val: S, index: usize, n: usize) -> Self {
        let mut grad = vec![S::zero(); n];
        grad[index] = S::one();
        Self {
            val,
            grad,
            hess: vec![S::zero(); n * n],
        }
    }

    /// Seeds one variable per coordinate.
    pub fn seed(point: &[S]) -> Vec<Self> {
        let n = point.len();
        point
            .iter()
            .enumerate()
            .map(|(i, v)| Self::variable(v.clone(), i, n))
            .collect()
    }

    /// Number of active variables (0 for constants).
    pub fn nvars(&self) -> usize {
        self.grad.len()
    }

    pub fn grad_at(&self, i: usize) -> S {
        self.grad.get(i).cloned().unwrap_or_else(S::zero)
    }

    pub fn hess_at(&self, i: usize, j: usize) -> S {
        let n = self.grad.len();
        if n == 0 {
            S::zero()
        } else {
            self.hess[i * n + j].clone()
        }
    }

    /// Applies a unary function given its value and first two derivatives at `self.val`.
    pub fn chain(&self, f0: S, f1: S, f2: S) -> Self {
        if self.grad.is_empty() {
            return Self::constant(f0);
        }
        let n = self.grad.len();
        let grad: Vec<S> = self.grad.iter().map(|g| f1.clone() * g.clone()).collect();
        let hess = symmetric(n, |i, j| {
            f2.clone() * self.grad[i].clone() * self.grad[j].clone()
                + f1.clone() * self.hess[i * n + j].clone()
        });
        Self { val: f0, grad, hess }
    }

    fn recip(&self) -> Self {
        let inv = S::one() / self.val.clone();
        let inv2 = inv.clone() * inv.clone();
        let f2 = (inv2.clone() * inv).scale(2.0);
        self.chain(S::one() / self.val.clone(), -inv2, f2)
    }

    fn scale_by(&self, k: &S) -> Self {
        Self {
            val: self.val.clone() * k.clone(),
            grad: self.grad.iter().map(|g| g.clone() * k.clone()).collect(),
            hess: self.hess.iter().map(|h| h.clone() * k.clone()).collect(),
        }
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        let val = if sign > 0.0 {
            self.val.clone() + other.val.clone()
        } else {
            self.val.clone() - other.val.clone()
        };
        let pick = |a: &[S], b: &[S]| -> Vec<S> {
            match (a.is_empty(), b.is_empty()) {
                (true, true) => Vec::new(),
                (false, true) => a.to_vec(),
                (true, false) => {
                    if sign > 0.0 {
                        b.to_vec()
                    } else {
                        b.iter().map(|x| -x.clone()).collect()
                    }
                }
                (false, false) => a
                    .iter()
                    .zip(b)
                    .map(|(x, y)| {
                        if sign > 0.0 {
                            x.clone() + y.clone()
                        } else {
                            x.clone() - y.clone()
                        }
                    })
                    .collect(),
            }
        };
        Self {
            val,
            grad: pick(&self.grad, &other.grad),
            hess: pick(&self.hess, &other.hess),
        }
    }

    fn product(&self, other: &Self) -> Self {
        if other.grad.is_empty() {
            return self.scale_by(&other.val);
        }
        if self.grad.is_empty() {
            return other.scale_by(&self.val);
        }
        let n = self.grad.len();
        let (a, b) = (&self.val, &other.val);
        let grad = (0..n)
            .map(|i| self.grad[i].clone() * b.clone() + a.clone() * other.grad[i].clone())
            .collect();
        let hess = symmetric(n, |i, j| {
            self.hess[i * n + j].clone() * b.clone()
                + self.grad[i].clone() * other.grad[j].clone()
                + self.grad[j].clone() * other.grad[i].clone()
                + a.clone() * other.hess[i * n + j].clone()
        });
        Self {
            val: a.clone() * b.clone(),
            grad,
            hess,
        }
    }
}

// Fills the upper triangle and mirrors it so the result is exactly symmetric.
fn symmetric<S: Scalar>(n: usize, f: impl Fn(usize, usize) -> S) -> Vec<S> {
    let mut out = vec![S::zero(); n * n];
    for i in 0..n {
        for j in i..n {
            let v = f(i, j);
            out[j * n + i] = v.clone();
            out[i * n + j] = v;
        }
    }
    out
}

impl Jet2<f64> {
    /// First partial derivative as a jet of the same variables.
    ///
    /// The value and gradient of the result are exact; its Hessian would need
    /// third derivatives, which a `Jet2` does not carry, so it is filled with
    /// NaN. Anything computed from the result therefore has an exact value and
    /// gradient and a poisoned Hessian.
    pub fn partial(&self, i: usize) -> Self {
        let n = self.grad.len();
        if n == 0 {
            return Self::constant(0.0);
        }
        Self {
            val: self.grad[i],
            grad: self.hess[i * n..(i + 1) * n].to_vec(),
            hess: vec![f64::NAN; n * n],
        }
    }
}

impl<S: Scalar> fmt::Debug for Jet2<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet2")
            .field("val", &self.val)
            .field("grad", &self.grad)
            .field("hess", &self.hess)
            .finish()
    }
}

impl<S: Scalar> Add for Jet2<S> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.combine(&rhs, 1.0)
    }
}

impl<S: Scalar> Sub for Jet2<S> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.combine(&rhs, -1.0)
    }
}

impl<S: Scalar> Mul for Jet2<S> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.product(&rhs)
    }
}

impl<S: Scalar> Div for Jet2<S> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let val = self.val.clone() / rhs.val.clone();
        let mut out = if rhs.grad.is_empty() {
            let inv = S::one() / rhs.val;
            self.scale_by(&inv)
        } else {
            self.product(&rhs.recip())
        };
        out.val = val;
        out
    }
}

impl<S: Scalar> Neg for Jet2<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            val: -self.val,
            grad: self.grad.into_iter().map(|g| -g).collect(),
            hess: self.hess.into_iter().map(|h| -h).collect(),
        }
    }
}

impl<S: Scalar> Scalar for Jet2<S> {
    fn from_f64(v: f64) -> Self {
        Self::constant(S::from_f64(v))
    }

    fn value(&self) -> f64 {
        self.val.value()
    }

    fn is_constant(&self) -> bool {
        self.grad.is_empty() && self.val.is_constant()
    }

    fn sin(&self) -> Self {
        let (s, c) = (self.val.sin(), self.val.cos());
        self.chain(s.clone(), c, -s)
    }

    fn cos(&self) -> Self {
        let (s, c) = (self.val.sin(), self.val.cos());
        self.chain(c.clone(), -s, -c)
    }

    fn exp(&self) -> Self {
        let e = self.val.exp();
        self.chain(e.clone(), e.clone(), e)
    }

    fn ln(&self) -> Self {
        let inv = S::one() / self.val.clone();
        let inv2 = inv.clone() * inv.clone();
        self.chain(self.val.ln(), inv, -inv2)
    }

    fn sqrt(&self) -> Self {
        let r = self.val.sqrt();
        let d1 = S::one() / r.clone().scale(2.0);
        let d2 = -(d1.clone() / self.val.clone()).scale(0.5);
        self.chain(r, d1, d2)
    }

    fn powi(&self, n: i32) -> Self {
        match n {
            0 => Self::from_f64(1.0),
            1 => self.clone(),
            n if n < 0 => {
                let mut out = Self::one() / self.powi(-n);
                out.val = self.val.powi(n);
                out
            }
            n => {
                let f0 = self.val.powi(n);
                let f1 = self.val.powi(n - 1).scale(n as f64);
                let f2 = self.val.powi(n - 2).scale((n * (n - 1)) as f64);
                self.chain(f0, f1, f2)
            }
        }
    }

    fn scale(&self, k: f64) -> Self {
        self.scale_by(&S::from_f64(k))
    }
}
