//! Vacuum-case machinery: the Einstein-residual check against the 4D oracle,
//! the quantities `I_1 .. I_4`, the four relations tying second-order
//! invariants to first-order ones, and the recovery of directional
//! derivatives from first-order data.
//!
//! The relations are pinned by numeric validation on Einstein metrics of
//! both surface signatures, which fixes every convention they depend on:
//! `eps = -sgn(det g)` (minus in the elliptic case, plus in the hyperbolic
//! case), the cosmological constant enters the second relation as
//! `4 Lambda`, and the fourth relation reads
//!
//! ```text
//! -eps C_gamma I1 YC_chi/4 + eps I1 YQ_gamma/2 - I2 XQ_gamma/2
//!     + I3 XC_chi/2 + I4 XQ_chi
//!   = I4 ((C_rho/2 + 4 Lambda)(Q_gamma - Q_chi) + 2 I3)
//!     - I3 C_rho (3 C_rho/4 + 4 Lambda)/8
//! ```
//!
//! With these conventions all four relations hold to machine precision on
//! the vacuum family; flipping either the sign of `eps` or the sign of the
//! two `eps`-carrying terms above breaks them by many orders of magnitude.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invariants::{BasicInvariant, InvariantRecord, SecondOrder};
use crate::metric::MetricDefinition;
use crate::surface::is_negligible;

/// First-order data entering the vacuum relations.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VacuumQuantities {
    pub lambda: f64,
    /// `-sgn(det g)`: minus in the elliptic case, plus in the hyperbolic.
    pub eps: f64,
    pub c_rho: f64,
    pub c_gamma: f64,
    pub q_chi: f64,
    pub q_gamma: f64,
    pub i1_squared: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
}

impl VacuumQuantities {
    /// Builds the `I` quantities from basic invariants. `eps_g` is the sign
    /// of `det g`.
    pub fn new(
        (c_rho, c_chi, q_chi, q_gamma): (f64, f64, f64, f64),
        eps_g: f64,
        lambda: f64,
    ) -> Self {
        let c_gamma = c_chi - 0.25 * c_rho;
        let eps = -eps_g;
        let i1_squared = eps
            * ((q_gamma - q_chi).powi(2)
                - 0.25 * c_rho * (c_gamma * q_chi - (c_gamma + 0.25 * c_rho) * q_gamma));
        let i2 = -(q_gamma + q_chi) + 0.5 * c_gamma * (c_gamma + 0.25 * c_rho);
        let i3 = 0.5 * c_gamma * (q_gamma - q_chi) + 0.25 * c_rho * q_gamma;
        let i4 = 0.25 * c_gamma * c_gamma - q_gamma;
        VacuumQuantities {
            lambda,
            eps,
            c_rho,
            c_gamma,
            q_chi,
            q_gamma,
            i1_squared,
            i2,
            i3,
            i4,
        }
    }

    pub fn from_record(rec: &InvariantRecord, eps_g: f64, lambda: f64) -> Self {
        Self::new((rec.c_rho, rec.c_chi, rec.q_chi, rec.q_gamma), eps_g, lambda)
    }
}

/// Normalized max-norm of the Einstein tensor plus `Lambda g`, from the
/// brute-force 4D curvature.
pub fn vacuum_residual(def: &MetricDefinition, lambda: f64, point: [f64; 2]) -> Result<f64> {
    let c = crate::oracle::full_curvature(def, point)?;
    let mut scale: f64 = 1.0;
    for a in 0..4 {
        for b in 0..4 {
            scale = scale
                .max(c.ricci[a][b].abs())
                .max((lambda * c.metric[a][b]).abs());
        }
    }
    Ok(c.einstein_residual(lambda) / scale)
}

/// The four left-minus-right residuals of the vacuum relations, each
/// normalized by the size of its terms. The sign of `I_1` is taken from the
/// first relation and reused in the later ones.
pub fn vacuum_relations(rec: &InvariantRecord, eps_g: f64, lambda: f64) -> [f64; 4] {
    let q = VacuumQuantities::from_record(rec, eps_g, lambda);
    let so = rec.second_order();
    let i1 = -so.yc_rho / 8.0;

    // 1: YC_rho = -8 I_1, checked sign-free as YC_rho^2 = 64 I_1^2
    let r1_terms = [so.yc_rho * so.yc_rho, 64.0 * q.i1_squared];
    let r1 = r1_terms[0] - r1_terms[1];

    // 2: XC_rho = 8 (Q_gamma - Q_chi) + C_rho (C_gamma - 3 C_rho/4 - 4 Lambda)
    let rhs2 = 8.0 * (q.q_gamma - q.q_chi)
        + q.c_rho * (q.c_gamma - 0.75 * q.c_rho - 4.0 * lambda);
    let r2 = so.xc_rho - rhs2;

    let (lhs3, rhs3) = relation3(&q, i1, &so);
    let (lhs4, rhs4) = relation4(&q, i1, &so);

    let norm = |r: f64, terms: &[f64]| {
        r.abs() / (1.0 + terms.iter().fold(0.0f64, |m, t| m.max(t.abs())))
    };
    [
        norm(r1, &r1_terms),
        norm(r2, &[so.xc_rho, rhs2]),
        norm(lhs3 - rhs3, &[lhs3, rhs3]),
        norm(lhs4 - rhs4, &[lhs4, rhs4]),
    ]
}

fn relation3(q: &VacuumQuantities, i1: f64, so: &SecondOrder) -> (f64, f64) {
    let lhs = 0.25 * q.c_gamma * i1 * so.xc_chi - 0.5 * i1 * so.xq_gamma
        + 0.5 * q.i2 * so.yq_gamma
        - 0.5 * q.i3 * so.yc_chi
        - q.i4 * so.yq_chi;
    let rhs = i1
        * (q.i4 * (q.c_gamma - 0.5 * q.c_rho + 4.0 * q.lambda)
            - (1.0 / 16.0) * q.c_gamma * q.c_rho * (0.75 * q.c_rho + 4.0 * q.lambda));
    (lhs, rhs)
}

fn relation4(q: &VacuumQuantities, i1: f64, so: &SecondOrder) -> (f64, f64) {
    let lhs = -0.25 * q.eps * q.c_gamma * i1 * so.yc_chi + 0.5 * q.eps * i1 * so.yq_gamma
        - 0.5 * q.i2 * so.xq_gamma
        + 0.5 * q.i3 * so.xc_chi
        + q.i4 * so.xq_chi;
    let rhs = q.i4 * ((0.5 * q.c_rho + 4.0 * q.lambda) * (q.q_gamma - q.q_chi) + 2.0 * q.i3)
        - 0.125 * q.i3 * q.c_rho * (0.75 * q.c_rho + 4.0 * q.lambda);
    (lhs, rhs)
}

/// Directional derivatives recovered from first-order data via the vacuum
/// relations: `XC_rho` and `YC_rho` come from the first two, and `(Xq, Yq)`
/// for the chosen invariant from the last two, with the remaining
/// second-order values taken from `known` (closed-loop use).
#[derive(Debug, Clone, Copy)]
pub struct Recovered {
    pub xc_rho: f64,
    pub yc_rho: f64,
    pub xq: f64,
    pub yq: f64,
}

/// Solves the last two relations for the derivatives of `q_choice`.
/// `i1_sign` picks the branch of `I_1 = +-sqrt(I_1^2)`; the result matches
/// direct computation up to that sign and the frame orientation.
pub fn recover_second_order(
    rec: &InvariantRecord,
    eps_g: f64,
    lambda: f64,
    q_choice: BasicInvariant,
    i1_sign: f64,
    known: &SecondOrder,
) -> Result<Recovered> {
    if q_choice == BasicInvariant::CRho {
        return Err(Error::NotGeneric(
            "the chart invariant must differ from C_rho, whose derivatives come from \
             the first two relations"
                .into(),
        ));
    }
    let q = VacuumQuantities::from_record(rec, eps_g, lambda);
    let scale = 1.0
        + [q.c_rho, q.c_gamma, q.q_chi, q.q_gamma]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
    if is_negligible(q.i4, scale * scale) {
        return Err(Error::NotGeneric("I_4 = 0: the relations cannot be solved".into()));
    }
    if q.i1_squared < 0.0 && !is_negligible(q.i1_squared, scale * scale) {
        return Err(Error::NotGeneric("I_1^2 < 0: not a vacuum configuration".into()));
    }
    let i1 = i1_sign.signum() * q.i1_squared.max(0.0).sqrt();

    let xc_rho = 8.0 * (q.q_gamma - q.q_chi)
        + q.c_rho * (q.c_gamma - 0.75 * q.c_rho - 4.0 * lambda);
    let yc_rho = -8.0 * i1;

    // Write relations 3 and 4 as A [Xq, Yq]^T = b, moving every known term
    // to the right-hand side.
    let coeff3 = |inv: BasicInvariant| -> (f64, f64) {
        match inv {
            BasicInvariant::CChi => (0.25 * q.c_gamma * i1, -0.5 * q.i3),
            BasicInvariant::QChi => (0.0, -q.i4),
            BasicInvariant::QGamma => (-0.5 * i1, 0.5 * q.i2),
            BasicInvariant::CRho => (0.0, 0.0),
        }
    };
    let coeff4 = |inv: BasicInvariant| -> (f64, f64) {
        match inv {
            BasicInvariant::CChi => (0.5 * q.i3, -0.25 * q.eps * q.c_gamma * i1),
            BasicInvariant::QChi => (q.i4, 0.0),
            BasicInvariant::QGamma => (-0.5 * q.i2, 0.5 * q.eps * i1),
            BasicInvariant::CRho => (0.0, 0.0),
        }
    };
    let (_, rhs3) = relation3(&q, i1, known);
    let (_, rhs4) = relation4(&q, i1, known);
    let others = [BasicInvariant::CChi, BasicInvariant::QChi, BasicInvariant::QGamma]
        .into_iter()
        .filter(|&inv| inv != q_choice);
    let mut b3 = rhs3;
    let mut b4 = rhs4;
    for inv in others {
        let (x, y) = known.along(inv);
        let (c3x, c3y) = coeff3(inv);
        b3 -= c3x * x + c3y * y;
        let (c4x, c4y) = coeff4(inv);
        b4 -= c4x * x + c4y * y;
    }
    let (a11, a12) = coeff3(q_choice);
    let (a21, a22) = coeff4(q_choice);
    let det = a11 * a22 - a12 * a21;
    let mat_scale = [a11, a12, a21, a22].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if is_negligible(det, mat_scale * mat_scale) {
        return Err(Error::NotGeneric(format!(
            "singular system for the derivatives of {q_choice}"
        )));
    }
    let xq = (b3 * a22 - a12 * b4) / det;
    let yq = (a11 * b4 - b3 * a21) / det;
    Ok(Recovered { xc_rho, yc_rho, xq, yq })
}
