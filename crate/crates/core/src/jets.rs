//! Truncated Taylor arithmetic in two variables, up to third order.
//!
//! A [`Jet`] holds the value of a scalar function of `(t1, t2)` together with
//! its partial derivatives up to a fixed order `K <= 3`. Coefficients are
//! stored as raw derivative values (not Taylor coefficients), so `c[(a, b)]`
//! is exactly `d^(a+b) f / dt1^a dt2^b` at the base point. All arithmetic
//! propagates derivatives exactly through order `K` via Leibniz and truncated
//! composition, which keeps every downstream curvature quantity free of
//! finite-difference noise.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use thiserror::Error;

/// Highest supported derivative order.
pub const MAX_ORDER: usize = 3;

/// Exponent pairs `(a, b)` in storage order, grouped by total degree.
const EXPONENTS: [(usize, usize); 10] = [
    (0, 0),
    (1, 0),
    (0, 1),
    (2, 0),
    (1, 1),
    (0, 2),
    (3, 0),
    (2, 1),
    (1, 2),
    (0, 3),
];

const BINOMIAL: [[f64; 4]; 4] = [
    [1.0, 0.0, 0.0, 0.0],
    [1.0, 1.0, 0.0, 0.0],
    [1.0, 2.0, 1.0, 0.0],
    [1.0, 3.0, 3.0, 1.0],
];

#[inline]
const fn coeff_count(order: usize) -> usize {
    (order + 1) * (order + 2) / 2
}

#[inline]
const fn index_of(a: usize, b: usize) -> usize {
    let n = a + b;
    n * (n + 1) / 2 + b
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("division by a jet with zero value part")]
    DivisionByZero,
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("non-differentiable point: {0}")]
    NonDifferentiable(&'static str),
    #[error("jet order {have} is insufficient (need at least {need})")]
    InsufficientOrder { need: usize, have: usize },
}

/// Value and partial derivatives of a scalar at one point of the surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    order: usize,
    c: [f64; 10],
}

impl Jet {
    /// Constant function: value `v`, all derivatives zero.
    pub fn constant(v: f64, order: usize) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let mut c = [0.0; 10];
        c[0] = v;
        Jet { order, c }
    }

    /// The coordinate `t1` seeded at value `v`.
    pub fn var1(v: f64, order: usize) -> Self {
        let mut j = Jet::constant(v, order);
        if order >= 1 {
            j.c[index_of(1, 0)] = 1.0;
        }
        j
    }

    /// The coordinate `t2` seeded at value `v`.
    pub fn var2(v: f64, order: usize) -> Self {
        let mut j = Jet::constant(v, order);
        if order >= 1 {
            j.c[index_of(0, 1)] = 1.0;
        }
        j
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Derivative value `d^(a+b) f / dt1^a dt2^b`; `a + b` must not exceed the order.
    pub fn coeff(&self, a: usize, b: usize) -> f64 {
        assert!(a + b <= self.order, "coefficient ({a},{b}) beyond jet order {}", self.order);
        self.c[index_of(a, b)]
    }

    pub fn gradient(&self) -> Result<[f64; 2], JetError> {
        if self.order < 1 {
            return Err(JetError::InsufficientOrder { need: 1, have: self.order });
        }
        Ok([self.c[index_of(1, 0)], self.c[index_of(0, 1)]])
    }

    pub fn hessian(&self) -> Result<[[f64; 2]; 2], JetError> {
        if self.order < 2 {
            return Err(JetError::InsufficientOrder { need: 2, have: self.order });
        }
        let h11 = self.c[index_of(2, 0)];
        let h12 = self.c[index_of(1, 1)];
        let h22 = self.c[index_of(0, 2)];
        Ok([[h11, h12], [h12, h22]])
    }

    /// Drops coefficients above `order`. Lowering the order is the only legal
    /// way to combine jets built at different orders.
    pub fn truncated(&self, order: usize) -> Self {
        assert!(order <= self.order, "cannot extend jet order {} to {order}", self.order);
        let mut c = [0.0; 10];
        c[..coeff_count(order)].copy_from_slice(&self.c[..coeff_count(order)]);
        Jet { order, c }
    }

    /// Partial derivative with respect to `t1`, one order lower.
    pub fn d1(&self) -> Self {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let order = self.order - 1;
        let mut c = [0.0; 10];
        for (i, &(a, b)) in EXPONENTS.iter().enumerate().take(coeff_count(order)) {
            c[i] = self.c[index_of(a + 1, b)];
        }
        Jet { order, c }
    }

    /// Partial derivative with respect to `t2`, one order lower.
    pub fn d2(&self) -> Self {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let order = self.order - 1;
        let mut c = [0.0; 10];
        for (i, &(a, b)) in EXPONENTS.iter().enumerate().take(coeff_count(order)) {
            c[i] = self.c[index_of(a, b + 1)];
        }
        Jet { order, c }
    }

    /// Largest absolute coefficient; the local scale used by relative tolerances.
    pub fn max_abs_coeff(&self) -> f64 {
        self.c[..coeff_count(self.order)]
            .iter()
            .fold(0.0, |m, &v| m.max(v.abs()))
    }

    fn assert_same_order(&self, rhs: &Jet) {
        assert_eq!(
            self.order, rhs.order,
            "jet order mismatch: {} vs {}",
            self.order, rhs.order
        );
    }

    pub fn recip(&self) -> Result<Jet, JetError> {
        Jet::constant(1.0, self.order).try_div(self)
    }

    pub fn try_div(&self, rhs: &Jet) -> Result<Jet, JetError> {
        self.assert_same_order(rhs);
        if rhs.c[0] == 0.0 {
            return Err(JetError::DivisionByZero);
        }
        // Solve f = q * g for q coefficient by coefficient, lowest degree first.
        let mut q = [0.0; 10];
        for (k, &(a, b)) in EXPONENTS.iter().enumerate().take(coeff_count(self.order)) {
            let mut acc = self.c[k];
            for i in 0..=a {
                for j in 0..=b {
                    if i == a && j == b {
                        continue;
                    }
                    acc -= BINOMIAL[a][i]
                        * BINOMIAL[b][j]
                        * q[index_of(i, j)]
                        * rhs.c[index_of(a - i, b - j)];
                }
            }
            q[k] = acc / rhs.c[0];
        }
        Ok(Jet { order: self.order, c: q })
    }

    /// Composes a smooth univariate function onto this jet. `derivs[n]` must
    /// hold the n-th derivative of the outer function at `self.value()`, for
    /// `n <= order`.
    pub fn compose(&self, derivs: &[f64; 4]) -> Jet {
        // Taylor expansion of the outer function around the value part. The
        // shifted jet w has zero value, so w^(n) contributes nothing below
        // total degree n and the truncated cubic reproduces all derivatives
        // through order 3 exactly.
        let mut w = *self;
        w.c[0] = 0.0;
        let mut result = Jet::constant(derivs[0], self.order);
        if self.order >= 1 {
            result = result + w * derivs[1];
        }
        if self.order >= 2 {
            let w2 = w * w;
            result = result + w2 * (derivs[2] / 2.0);
            if self.order >= 3 {
                result = result + (w2 * w) * (derivs[3] / 6.0);
            }
        }
        result
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&[e, e, e, e])
    }

    pub fn ln(&self) -> Result<Jet, JetError> {
        let v = self.value();
        if v <= 0.0 {
            return Err(JetError::Domain("ln of a non-positive value"));
        }
        Ok(self.compose(&[v.ln(), 1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v)]))
    }

    /// `ln |f|`; defined for nonzero values of either sign since d ln|u| = du/u.
    pub fn ln_abs(&self) -> Result<Jet, JetError> {
        let v = self.value();
        if v == 0.0 {
            return Err(JetError::Domain("ln of a zero value"));
        }
        Ok(self.compose(&[v.abs().ln(), 1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v)]))
    }

    pub fn sqrt(&self) -> Result<Jet, JetError> {
        let v = self.value();
        if v < 0.0 {
            return Err(JetError::Domain("sqrt of a negative value"));
        }
        if v == 0.0 {
            if self.order == 0 {
                return Ok(Jet::constant(0.0, 0));
            }
            return Err(JetError::NonDifferentiable("sqrt at zero"));
        }
        let r = v.sqrt();
        Ok(self.compose(&[
            r,
            0.5 / r,
            -0.25 / (r * v),
            0.375 / (r * v * v),
        ]))
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose(&[s, c, -s, -c])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose(&[c, -s, -c, s])
    }

    pub fn abs(&self) -> Result<Jet, JetError> {
        let v = self.value();
        if v > 0.0 {
            Ok(*self)
        } else if v < 0.0 {
            Ok(-*self)
        } else if self.order == 0 {
            Ok(Jet::constant(0.0, 0))
        } else {
            Err(JetError::NonDifferentiable("abs at zero"))
        }
    }

    /// Sign function; zero maps to zero, derivatives at a kink are refused.
    pub fn signum(&self) -> Result<Jet, JetError> {
        let v = self.value();
        if v != 0.0 {
            Ok(Jet::constant(v.signum(), self.order))
        } else if self.order == 0 {
            Ok(Jet::constant(0.0, 0))
        } else {
            Err(JetError::NonDifferentiable("sgn at zero"))
        }
    }

    /// Integer power by repeated multiplication; exact for polynomial input.
    pub fn powi(&self, n: i64) -> Result<Jet, JetError> {
        if n < 0 {
            let base = self.powi(-n)?;
            return base.recip();
        }
        let mut acc = Jet::constant(1.0, self.order);
        let mut base = *self;
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base;
            }
            k >>= 1;
            if k > 0 {
                base = base * base;
            }
        }
        Ok(acc)
    }

    /// Real power of a strictly positive base.
    pub fn powf(&self, p: f64) -> Result<Jet, JetError> {
        let v = self.value();
        if v <= 0.0 {
            return Err(JetError::Domain("real power of a non-positive base"));
        }
        let f = v.powf(p);
        Ok(self.compose(&[
            f,
            p * f / v,
            p * (p - 1.0) * f / (v * v),
            p * (p - 1.0) * (p - 2.0) * f / (v * v * v),
        ]))
    }
}

impl fmt::Display for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "jet{}[", self.order)?;
        for (i, &(a, b)) in EXPONENTS.iter().enumerate().take(coeff_count(self.order)) {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "({a},{b})={}", self.c[i])?;
        }
        write!(f, "]")
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        self.assert_same_order(&rhs);
        let mut c = self.c;
        for i in 0..coeff_count(self.order) {
            c[i] += rhs.c[i];
        }
        Jet { order: self.order, c }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self.assert_same_order(&rhs);
        let mut c = self.c;
        for i in 0..coeff_count(self.order) {
            c[i] -= rhs.c[i];
        }
        Jet { order: self.order, c }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        let mut c = self.c;
        for v in c.iter_mut().take(coeff_count(self.order)) {
            *v = -*v;
        }
        Jet { order: self.order, c }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        self.assert_same_order(&rhs);
        // Leibniz rule with binomial weights, since coefficients are raw
        // derivative values.
        let mut c = [0.0; 10];
        for (k, &(a, b)) in EXPONENTS.iter().enumerate().take(coeff_count(self.order)) {
            let mut acc = 0.0;
            for i in 0..=a {
                for j in 0..=b {
                    acc += BINOMIAL[a][i]
                        * BINOMIAL[b][j]
                        * self.c[index_of(i, j)]
                        * rhs.c[index_of(a - i, b - j)];
                }
            }
            c[k] = acc;
        }
        Jet { order: self.order, c }
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        let mut c = self.c;
        for v in c.iter_mut().take(coeff_count(self.order)) {
            *v *= rhs;
        }
        Jet { order: self.order, c }
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        let mut c = self.c;
        c[0] += rhs;
        Jet { order: self.order, c }
    }
}

impl Div for Jet {
    type Output = Jet;
    /// Panics on a zero value part; use [`Jet::try_div`] where the
    /// denominator is not known to be nonzero.
    fn div(self, rhs: Jet) -> Jet {
        self.try_div(&rhs).expect("jet division by zero value part")
    }
}
