//! The invariant stack of the orbit surface: the forms rho, chi, gamma, nu,
//! the basic first-order scalars `C_rho, C_chi, Q_chi, Q_gamma`, the invariant
//! frame `(X, Y)`, directional derivatives of the basic scalars along the
//! frame, and the Weyl scalar `Psi_2`.
//!
//! Conventions. `x = det h` and all logarithms of `x` are `ln |x|`, which
//! changes nothing since only `dx/x` and its covariant derivatives appear.
//! The frame uses `eps^{12} = -eps^{21} = -1`; the opposite orientation flips
//! the sign of `Y` and of every `Y`-derivative, which the equivalence engine
//! compensates with a single global sign flip.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::Jet;
use crate::metric::MetricDefinition;
use crate::surface::{
    self, covariant_hessian, is_negligible, scalar_curvature, trace_and_qdet, Form2,
    SurfaceMetric,
};
use crate::wlp;

/// The Killing-block coefficients as jets, with the determinant `x = det h`
/// and its sign.
#[derive(Debug, Clone, Copy)]
pub struct KillingBlock {
    pub form: Form2,
    pub x: Jet,
    /// Sign of `det h`.
    pub eps: f64,
}

impl KillingBlock {
    pub fn new(form: Form2, point: [f64; 2]) -> Result<Self> {
        let x = form.det();
        if is_negligible(x.value(), form.max_abs_coeff()) {
            return Err(Error::Degenerate { which: "Killing block", point });
        }
        Ok(KillingBlock { form, x, eps: x.value().signum() })
    }

    fn dh(&self, k: usize, l: usize, i: usize) -> Jet {
        let e = self.form.entry(k, l);
        if i == 0 {
            e.d1()
        } else {
            e.d2()
        }
    }
}

/// `rho_ij = x_,i x_,j / x^2`, the squared logarithmic differential of the
/// block determinant. Rank one by construction, so `Q_rho = 0`.
pub fn form_rho(block: &KillingBlock) -> Form2 {
    let target = block.x.order() - 1;
    let xi = [block.x.d1(), block.x.d2()];
    let inv_x = block.x.truncated(target).recip().expect("x != 0 by construction");
    let r = |i: usize, j: usize| xi[i] * xi[j] * inv_x * inv_x;
    Form2::new(r(0, 0), r(0, 1), r(1, 1))
}

/// The symmetrized determinant form
/// `chi_ij = (h11_,i h22_,j + h11_,j h22_,i - 2 h12_,i h12_,j) / (2x)`.
pub fn form_chi(block: &KillingBlock) -> Form2 {
    let target = block.x.order() - 1;
    let inv_x = block.x.truncated(target).recip().expect("x != 0 by construction");
    let c = |i: usize, j: usize| -> Jet {
        (block.dh(0, 0, i) * block.dh(1, 1, j) + block.dh(0, 0, j) * block.dh(1, 1, i)
            - block.dh(0, 1, i) * block.dh(0, 1, j) * 2.0)
            * inv_x
            * 0.5
    };
    Form2::new(c(0, 0), c(0, 1), c(1, 1))
}

/// The Cosgrove form `gamma = chi - rho/4`; of constant curvature -1 where
/// nondegenerate.
pub fn form_gamma(block: &KillingBlock) -> Form2 {
    form_chi(block).sub(&form_rho(block).scale(0.25))
}

/// `nu_ij = Hess_ij ln|x|`; scalings of `x` cancel.
pub fn nu_form(g: &SurfaceMetric, block: &KillingBlock) -> Result<Form2> {
    let lnx = block.x.ln_abs()?;
    covariant_hessian(g, &lnx)
}

/// The four basic first-order invariants (plus the dependent `C_gamma`) as
/// jets, so each carries its own gradient and Hessian when the coefficient
/// jets allow it.
#[derive(Debug, Clone, Copy)]
pub struct BasicJets {
    pub c_rho: Jet,
    pub c_chi: Jet,
    pub q_chi: Jet,
    pub q_gamma: Jet,
    pub c_gamma: Jet,
}

impl BasicJets {
    pub fn get(&self, inv: BasicInvariant) -> Jet {
        match inv {
            BasicInvariant::CRho => self.c_rho,
            BasicInvariant::CChi => self.c_chi,
            BasicInvariant::QChi => self.q_chi,
            BasicInvariant::QGamma => self.q_gamma,
        }
    }
}

/// Names of the basic first-order invariants, in fixed order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasicInvariant {
    #[serde(rename = "C_rho")]
    CRho,
    #[serde(rename = "C_chi")]
    CChi,
    #[serde(rename = "Q_chi")]
    QChi,
    #[serde(rename = "Q_gamma")]
    QGamma,
}

impl BasicInvariant {
    pub const ALL: [BasicInvariant; 4] = [
        BasicInvariant::CRho,
        BasicInvariant::CChi,
        BasicInvariant::QChi,
        BasicInvariant::QGamma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BasicInvariant::CRho => "C_rho",
            BasicInvariant::CChi => "C_chi",
            BasicInvariant::QChi => "Q_chi",
            BasicInvariant::QGamma => "Q_gamma",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|i| i.name() == name)
    }
}

impl std::fmt::Display for BasicInvariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub fn basic_invariant_jets(g: &SurfaceMetric, block: &KillingBlock) -> BasicJets {
    let rho = form_rho(block);
    let chi = form_chi(block);
    let gamma = chi.sub(&rho.scale(0.25));
    let (c_rho, _) = trace_and_qdet(g, &rho);
    let (c_chi, q_chi) = trace_and_qdet(g, &chi);
    let (_, q_gamma) = trace_and_qdet(g, &gamma);
    let c_gamma = c_chi - c_rho * 0.25;
    BasicJets { c_rho, c_chi, q_chi, q_gamma, c_gamma }
}

/// Values of the basic invariants `(C_rho, C_chi, Q_chi, Q_gamma)`.
pub fn basic_invariants(g: &SurfaceMetric, block: &KillingBlock) -> (f64, f64, f64, f64) {
    let b = basic_invariant_jets(g, block);
    (b.c_rho.value(), b.c_chi.value(), b.q_chi.value(), b.q_gamma.value())
}

/// Relative deviation between `Q_gamma = det gamma / det g` and its
/// squared-determinant closed form
/// `det[[h11, h12, h22], [h11_,1, h12_,1, h22_,1], [h11_,2, h12_,2, h22_,2]]^2
///  / (4 x^3 det g)`.
pub fn qgamma_crosscheck(g: &SurfaceMetric, block: &KillingBlock) -> f64 {
    let b = basic_invariant_jets(g, block);
    let v = |k: usize, l: usize| block.form.entry(k, l).value();
    let d = |k: usize, l: usize, i: usize| block.dh(k, l, i).value();
    let det3 = v(0, 0) * (d(0, 1, 0) * d(1, 1, 1) - d(1, 1, 0) * d(0, 1, 1))
        - v(0, 1) * (d(0, 0, 0) * d(1, 1, 1) - d(1, 1, 0) * d(0, 0, 1))
        + v(1, 1) * (d(0, 0, 0) * d(0, 1, 1) - d(0, 1, 0) * d(0, 0, 1));
    let x = block.x.value();
    let closed = det3 * det3 / (4.0 * x * x * x * g.det.value());
    let q = b.q_gamma.value();
    (q - closed).abs() / (1.0 + q.abs().max(closed.abs()))
}

/// The invariant frame `(X, Y)` as plain component values.
///
/// `X^i = g^ij x_,j / x` and `Y^i = eps^ij x_,j / (x sqrt|det g|)` with
/// `eps^{12} = -1`. Defined where `C_rho` is nonzero.
pub fn invariant_frame(
    g: &SurfaceMetric,
    block: &KillingBlock,
    point: [f64; 2],
) -> Result<([f64; 2], [f64; 2])> {
    let b = basic_invariant_jets(g, block);
    let scale = block.form.max_abs_coeff().max(g.form.max_abs_coeff());
    if is_negligible(b.c_rho.value(), scale) {
        return Err(Error::NullGradient { point });
    }
    let x = block.x.value();
    let dlx = [block.x.d1().value() / x, block.x.d2().value() / x];
    let inv = g.inverse();
    let xv = [
        inv.a11.value() * dlx[0] + inv.a12.value() * dlx[1],
        inv.a12.value() * dlx[0] + inv.a22.value() * dlx[1],
    ];
    let vol = g.sqrt_abs_det().value();
    let yv = [-dlx[1] / vol, dlx[0] / vol];
    Ok((xv, yv))
}

/// Components of `chi` in the invariant frame: `(chi(X,X), chi(X,Y), chi(Y,Y))`
/// by direct contraction.
pub fn frame_components_chi(
    g: &SurfaceMetric,
    block: &KillingBlock,
    point: [f64; 2],
) -> Result<(f64, f64, f64)> {
    let (xv, yv) = invariant_frame(g, block, point)?;
    let chi = form_chi(block);
    Ok((chi.contract(xv, xv), chi.contract(xv, yv), chi.contract(yv, yv)))
}

/// Directional derivatives of the four basic invariants along the frame.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SecondOrder {
    pub xc_rho: f64,
    pub yc_rho: f64,
    pub xc_chi: f64,
    pub yc_chi: f64,
    pub xq_chi: f64,
    pub yq_chi: f64,
    pub xq_gamma: f64,
    pub yq_gamma: f64,
}

impl SecondOrder {
    pub fn along(&self, inv: BasicInvariant) -> (f64, f64) {
        match inv {
            BasicInvariant::CRho => (self.xc_rho, self.yc_rho),
            BasicInvariant::CChi => (self.xc_chi, self.yc_chi),
            BasicInvariant::QChi => (self.xq_chi, self.yq_chi),
            BasicInvariant::QGamma => (self.xq_gamma, self.yq_gamma),
        }
    }
}

/// Second-order invariants `Xp, Yp` for the four basic `p`, computed by
/// carrying the whole pipeline in jets and contracting the exact gradients
/// with the frame. Needs coefficient jets of order at least 2.
pub fn second_order_invariants(
    g: &SurfaceMetric,
    block: &KillingBlock,
    point: [f64; 2],
) -> Result<SecondOrder> {
    let b = basic_invariant_jets(g, block);
    let (xv, yv) = invariant_frame(g, block, point)?;
    let along = |j: &Jet| -> Result<(f64, f64)> {
        let grad = j.gradient().map_err(Error::from)?;
        Ok((
            xv[0] * grad[0] + xv[1] * grad[1],
            yv[0] * grad[0] + yv[1] * grad[1],
        ))
    };
    let (xc_rho, yc_rho) = along(&b.c_rho)?;
    let (xc_chi, yc_chi) = along(&b.c_chi)?;
    let (xq_chi, yq_chi) = along(&b.q_chi)?;
    let (xq_gamma, yq_gamma) = along(&b.q_gamma)?;
    Ok(SecondOrder {
        xc_rho,
        yc_rho,
        xc_chi,
        yc_chi,
        xq_chi,
        yq_chi,
        xq_gamma,
        yq_gamma,
    })
}

/// Residuals of the first-order expressions for the full Ricci tensor against
/// the brute-force 4D curvature, all normalized by the scale of the terms
/// involved.
#[derive(Debug, Clone, Copy)]
pub struct RicciResiduals {
    /// `Ric|_S = (R/2) g - nu/2 - rho/4 + chi/2`, componentwise worst case.
    pub surface_block: f64,
    /// `Ric_{2+i,2+j} = -lap(h_ij)/2 + X h_ij / 4 - C_chi h_ij / 2`.
    pub killing_block: f64,
    /// `Rfull = R - C_nu - C_rho/2 + C_chi/2`.
    pub scalar: f64,
}

impl RicciResiduals {
    pub fn worst(&self) -> f64 {
        self.surface_block.max(self.killing_block).max(self.scalar)
    }
}

/// Checks the linear-combination expressions for the restricted Ricci tensor
/// and the full scalar curvature against the independent 4D computation.
pub fn ricci_restriction_identity(
    def: &MetricDefinition,
    point: [f64; 2],
) -> Result<RicciResiduals> {
    let geo = PointGeometry::new(def, point, 3)?;
    let g = &geo.g;
    let block = &geo.block;
    let oracle = crate::oracle::full_curvature(def, point)?;
    let b = basic_invariant_jets(g, block);
    let r2 = scalar_curvature(g)?.value();
    let rho = form_rho(block);
    let chi = form_chi(block);
    let nu = nu_form(g, block)?;

    let mut scale: f64 = 1.0;
    for a in 0..4 {
        for bb in 0..4 {
            scale = scale.max(oracle.ricci[a][bb].abs());
        }
    }

    // In two dimensions the Ricci tensor of g is (R/2) g.
    let mut surface_block: f64 = 0.0;
    for (i, j, slot) in [(0, 0, 0), (0, 1, 1), (1, 1, 2)] {
        let gij = g.form.entry(i, j).value();
        let rhs =
            0.5 * r2 * gij - 0.5 * nu.values()[slot] - 0.25 * rho.values()[slot]
                + 0.5 * chi.values()[slot];
        surface_block = surface_block.max((oracle.ricci[i][j] - rhs).abs() / scale);
    }

    let (xv, _) = invariant_frame(g, block, point)?;
    let mut killing_block: f64 = 0.0;
    for (i, j) in [(0, 0), (0, 1), (1, 1)] {
        let hij = block.form.entry(i, j);
        let lap = surface::laplace_beltrami(g, &hij)?.value();
        let xh = xv[0] * hij.d1().value() + xv[1] * hij.d2().value();
        let rhs = -0.5 * lap + 0.25 * xh - 0.5 * b.c_chi.value() * hij.value();
        killing_block = killing_block.max((oracle.ricci[2 + i][2 + j] - rhs).abs() / scale);
    }

    let lnx = block.x.ln_abs()?;
    let c_nu = surface::laplace_beltrami(g, &lnx)?.value();
    let r_pred = r2 - c_nu - 0.5 * b.c_rho.value() + 0.5 * b.c_chi.value();
    let scalar = (oracle.scalar - r_pred).abs() / (1.0 + oracle.scalar.abs().max(r_pred.abs()));

    Ok(RicciResiduals { surface_block, killing_block, scalar })
}

/// Real and imaginary part of the Weyl scalar `Psi_2` for Lorentzian blocks:
/// `Re Psi_2 = C_chi/16 - R/8 + Rfull/24`, `Im Psi_2 = sqrt(-Q_gamma)/4`.
pub fn psi2(g: &SurfaceMetric, block: &KillingBlock, point: [f64; 2]) -> Result<(f64, f64)> {
    let b = basic_invariant_jets(g, block);
    let q_gamma = b.q_gamma.value();
    if g.eps * block.eps > 0.0 {
        return Err(Error::NonLorentzian { q_gamma });
    }
    let tol_scale = b.q_gamma.max_abs_coeff();
    if q_gamma > 0.0 && !is_negligible(q_gamma, tol_scale) {
        return Err(Error::NonLorentzian { q_gamma });
    }
    let r = scalar_curvature(g)?.value();
    let lnx = block.x.ln_abs()?;
    let c_nu = surface::laplace_beltrami(g, &lnx)?.value();
    let _ = point;
    let r_full = r - c_nu - 0.5 * b.c_rho.value() + 0.5 * b.c_chi.value();
    let re = b.c_chi.value() / 16.0 - r / 8.0 + r_full / 24.0;
    let im = 0.25 * (-q_gamma).max(0.0).sqrt();
    Ok((re, im))
}

/// All scalar invariants at one surface point, in serialization form.
/// `R2` is the scalar curvature of the surface metric, `Rfull` the scalar
/// curvature of the 4-metric via its first-order expression. The `Psi_2`
/// fields are present for Lorentzian blocks only, and the `r, s, w` block
/// parameters are present where `h11` is nonzero.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[allow(clippy::upper_case_acronyms)]
pub struct InvariantRecord {
    pub t1: f64,
    pub t2: f64,
    #[serde(rename = "C_rho")]
    pub c_rho: f64,
    #[serde(rename = "C_chi")]
    pub c_chi: f64,
    #[serde(rename = "Q_chi")]
    pub q_chi: f64,
    #[serde(rename = "Q_gamma")]
    pub q_gamma: f64,
    #[serde(rename = "C_gamma")]
    pub c_gamma: f64,
    #[serde(rename = "C_nu")]
    pub c_nu: f64,
    #[serde(rename = "R2")]
    pub r2: f64,
    #[serde(rename = "Rfull")]
    pub r_full: f64,
    #[serde(rename = "RePsi2", skip_serializing_if = "Option::is_none")]
    pub re_psi2: Option<f64>,
    #[serde(rename = "ImPsi2", skip_serializing_if = "Option::is_none")]
    pub im_psi2: Option<f64>,
    #[serde(rename = "X")]
    pub x_frame: [f64; 2],
    #[serde(rename = "Y")]
    pub y_frame: [f64; 2],
    #[serde(rename = "XC_rho")]
    pub xc_rho: f64,
    #[serde(rename = "YC_rho")]
    pub yc_rho: f64,
    #[serde(rename = "XC_chi")]
    pub xc_chi: f64,
    #[serde(rename = "YC_chi")]
    pub yc_chi: f64,
    #[serde(rename = "XQ_chi")]
    pub xq_chi: f64,
    #[serde(rename = "YQ_chi")]
    pub yq_chi: f64,
    #[serde(rename = "XQ_gamma")]
    pub xq_gamma: f64,
    #[serde(rename = "YQ_gamma")]
    pub yq_gamma: f64,
    #[serde(rename = "r", skip_serializing_if = "Option::is_none")]
    pub wlp_r: Option<f64>,
    #[serde(rename = "s", skip_serializing_if = "Option::is_none")]
    pub wlp_s: Option<f64>,
    #[serde(rename = "w", skip_serializing_if = "Option::is_none")]
    pub wlp_w: Option<f64>,
}

impl InvariantRecord {
    pub fn basic(&self, inv: BasicInvariant) -> f64 {
        match inv {
            BasicInvariant::CRho => self.c_rho,
            BasicInvariant::CChi => self.c_chi,
            BasicInvariant::QChi => self.q_chi,
            BasicInvariant::QGamma => self.q_gamma,
        }
    }

    pub fn second_order(&self) -> SecondOrder {
        SecondOrder {
            xc_rho: self.xc_rho,
            yc_rho: self.yc_rho,
            xc_chi: self.xc_chi,
            yc_chi: self.yc_chi,
            xq_chi: self.xq_chi,
            yq_chi: self.yq_chi,
            xq_gamma: self.xq_gamma,
            yq_gamma: self.yq_gamma,
        }
    }
}

/// Evaluated geometry at one point: the surface metric and Killing block as
/// jets, ready for the individual invariant operations.
#[derive(Debug, Clone, Copy)]
pub struct PointGeometry {
    pub g: SurfaceMetric,
    pub block: KillingBlock,
    pub point: [f64; 2],
}

impl PointGeometry {
    /// Evaluates the coefficient jets at the given order (3 by default
    /// covers every invariant including curvature of derived forms).
    pub fn new(def: &MetricDefinition, point: [f64; 2], order: usize) -> Result<Self> {
        let b = def.eval_block(point, order)?;
        Ok(PointGeometry {
            g: SurfaceMetric::new(b.g, point)?,
            block: KillingBlock::new(b.h, point)?,
            point,
        })
    }
}

/// Evaluates the full invariant record at a point. Uses coefficient jets of
/// order 3 so the second-order invariants come from exact gradients.
pub fn evaluate_record(def: &MetricDefinition, point: [f64; 2]) -> Result<InvariantRecord> {
    let geo = PointGeometry::new(def, point, 3)?;
    let g = &geo.g;
    let block = &geo.block;
    let b = basic_invariant_jets(g, block);
    let (xv, yv) = invariant_frame(g, block, point)?;
    let so = second_order_invariants(g, block, point)?;
    let r2 = scalar_curvature(g)?.value();
    let lnx = block.x.ln_abs()?;
    let c_nu = surface::laplace_beltrami(g, &lnx)?.value();
    let r_full = r2 - c_nu - 0.5 * b.c_rho.value() + 0.5 * b.c_chi.value();
    let (re_psi2, im_psi2) = match psi2(g, block, point) {
        Ok((re, im)) => (Some(re), Some(im)),
        Err(Error::NonLorentzian { .. }) => (None, None),
        Err(e) => return Err(e),
    };
    let wlp_params = wlp::to_wlp(block, point).ok();
    Ok(InvariantRecord {
        t1: point[0],
        t2: point[1],
        c_rho: b.c_rho.value(),
        c_chi: b.c_chi.value(),
        q_chi: b.q_chi.value(),
        q_gamma: b.q_gamma.value(),
        c_gamma: b.c_gamma.value(),
        c_nu,
        r2,
        r_full,
        re_psi2,
        im_psi2,
        x_frame: xv,
        y_frame: yv,
        xc_rho: so.xc_rho,
        yc_rho: so.yc_rho,
        xc_chi: so.xc_chi,
        yc_chi: so.yc_chi,
        xq_chi: so.xq_chi,
        yq_chi: so.yq_chi,
        xq_gamma: so.xq_gamma,
        yq_gamma: so.yq_gamma,
        wlp_r: wlp_params.as_ref().map(|p| p.r.value()),
        wlp_s: wlp_params.as_ref().map(|p| p.s.value()),
        wlp_w: wlp_params.map(|p| p.w.value()),
    })
}
