//! Expression evaluation over jets.
//!
//! A single code path serves both plain values (order 0) and derivative
//! carriers (orders 1 to 3), so the value semantics of every function are
//! identical no matter how many derivatives the caller asks for.

use thiserror::Error;

use super::{BinOp, Expr, Func, ParamBindings};
use crate::jets::{Jet, JetError, MAX_ORDER};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),
    #[error("{message} in `{subexpr}`")]
    Domain { message: String, subexpr: String },
}

impl EvalError {
    fn domain(err: JetError, at: &Expr) -> EvalError {
        EvalError::Domain {
            message: err.to_string(),
            subexpr: at.to_string(),
        }
    }
}

impl Expr {
    /// Evaluates to a jet of the requested order at `point`. Coefficients are
    /// the exact partial derivatives of the expression, to rounding error.
    pub fn eval_jet(
        &self,
        point: [f64; 2],
        params: &ParamBindings,
        order: usize,
    ) -> Result<Jet, EvalError> {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        match self {
            Expr::Num(v) => Ok(Jet::constant(*v, order)),
            Expr::Coord(0) => Ok(Jet::var1(point[0], order)),
            Expr::Coord(_) => Ok(Jet::var2(point[1], order)),
            Expr::Param(name) => params
                .get(name)
                .map(|&v| Jet::constant(v, order))
                .ok_or_else(|| EvalError::UnboundParameter(name.clone())),
            Expr::Neg(e) => Ok(-e.eval_jet(point, params, order)?),
            Expr::Bin(op, l, r) => {
                let a = l.eval_jet(point, params, order)?;
                let b = r.eval_jet(point, params, order)?;
                match op {
                    BinOp::Add => Ok(a + b),
                    BinOp::Sub => Ok(a - b),
                    BinOp::Mul => Ok(a * b),
                    BinOp::Div => a.try_div(&b).map_err(|e| EvalError::domain(e, self)),
                    BinOp::Pow => pow_jet(&a, &b).map_err(|e| EvalError::domain(e, self)),
                }
            }
            Expr::Call(func, arg) => {
                let a = arg.eval_jet(point, params, order)?;
                let out = match func {
                    Func::Sin => Ok(a.sin()),
                    Func::Cos => Ok(a.cos()),
                    Func::Exp => Ok(a.exp()),
                    Func::Ln => a.ln(),
                    Func::Sqrt => a.sqrt(),
                    Func::Abs => a.abs(),
                    Func::Sgn => a.signum(),
                };
                out.map_err(|e| EvalError::domain(e, self))
            }
        }
    }

    /// Plain value evaluation (order-0 jet).
    pub fn eval(&self, point: [f64; 2], params: &ParamBindings) -> Result<f64, EvalError> {
        Ok(self.eval_jet(point, params, 0)?.value())
    }
}

/// `base ^ exponent` with an integer fast path. A constant integral exponent
/// uses repeated multiplication (valid for any base); a constant real
/// exponent or a genuinely variable exponent requires a positive base.
fn pow_jet(base: &Jet, exponent: &Jet) -> Result<Jet, JetError> {
    let constant_exponent = (1..=exponent.order()).all(|n| {
        (0..=n).all(|b| exponent.coeff(n - b, b) == 0.0)
    });
    if constant_exponent {
        let p = exponent.value();
        if p.fract() == 0.0 && p.abs() <= 2_147_483_647.0 {
            return base.powi(p as i64);
        }
        return base.powf(p);
    }
    // f^g = exp(g ln f)
    let lnf = base.ln()?;
    Ok((*exponent * lnf).exp())
}
