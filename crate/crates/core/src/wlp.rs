//! The (r, s, w) block parametrization: `r = sqrt|det h|`, `s = r/h11`,
//! `w = h12/h11`, defined wherever the first Killing generator is non-null.
//!
//! In these variables `x = det h = eps_h r^2` and the Cosgrove form has the
//! closed expression
//!
//! ```text
//! gamma = chi - rho/4 = -(ds^2 + eps_h dw^2) / s^2
//! ```
//!
//! with `eps_h = sgn det h`. The overall sign is fixed against the
//! invariant-stack definition of gamma; [`gamma_wlp_identity`] reports which
//! sign reconciles the two routes and the residual after applying it.
//! `Q_gamma = eps_h (s_,1 w_,2 - s_,2 w_,1)^2 / (s^4 det g)` holds with the
//! same branch bookkeeping.

use crate::error::{Error, Result};
use crate::invariants::{basic_invariant_jets, form_gamma, KillingBlock};
use crate::jets::Jet;
use crate::surface::{is_negligible, Form2, SurfaceMetric};

#[derive(Debug, Clone, Copy)]
pub struct WlpParams {
    pub r: Jet,
    pub s: Jet,
    pub w: Jet,
    /// Sign of `det h`; the branch of the parametrization.
    pub eps_h: f64,
}

/// Extracts the block parameters at a point. Requires `h11 != 0`; a null
/// first generator is repaired by a constant change of Killing basis, which
/// the error message suggests.
pub fn to_wlp(block: &KillingBlock, point: [f64; 2]) -> Result<WlpParams> {
    let h11 = block.form.a11;
    if is_negligible(h11.value(), block.form.max_abs_coeff()) {
        return Err(Error::NullKillingLeader { point });
    }
    let abs_x = if block.eps > 0.0 { block.x } else { -block.x };
    let r = abs_x.sqrt().expect("nonzero by construction");
    let s = r / h11;
    let w = block.form.a12 / h11;
    Ok(WlpParams { r, s, w, eps_h: block.eps })
}

/// Rebuilds the block coefficients from the parameters:
/// `h11 = r/s`, `h12 = r w / s`, `h22 = r (w^2 + eps_h s^2) / s`.
pub fn reconstruct(params: &WlpParams) -> Form2 {
    let WlpParams { r, s, w, eps_h } = *params;
    let h11 = r / s;
    let h12 = h11 * w;
    let h22 = h11 * (w * w + s * s * eps_h);
    Form2::new(h11, h12, h22)
}

/// Maximum relative reconstruction error `h -> (r,s,w) -> h`.
pub fn roundtrip_residual(block: &KillingBlock, point: [f64; 2]) -> Result<f64> {
    let params = to_wlp(block, point)?;
    let back = reconstruct(&params);
    let scale = 1.0 + block.form.max_abs_coeff();
    let mut worst: f64 = 0.0;
    for (a, b) in back.values().iter().zip(block.form.values()) {
        worst = worst.max((a - b).abs() / scale);
    }
    Ok(worst)
}

/// Residuals of the closed forms in the block parameters against the
/// invariant stack.
#[derive(Debug, Clone, Copy)]
pub struct WlpGammaReport {
    /// Sign `sigma` such that `gamma = sigma * (ds^2 - eps dw^2)/s^2` (with
    /// `eps = -eps_h`) matched componentwise; resolves to -1.
    pub gamma_sign: f64,
    /// Componentwise residual of gamma after applying the sign.
    pub gamma_residual: f64,
    /// Residual of the `C_gamma` closed form.
    pub c_gamma_residual: f64,
    /// Residual of the `Q_gamma` closed form.
    pub q_gamma_residual: f64,
}

pub fn gamma_wlp_identity(
    g: &SurfaceMetric,
    block: &KillingBlock,
    point: [f64; 2],
) -> Result<WlpGammaReport> {
    let params = to_wlp(block, point)?;
    let target = params.s.order() - 1;
    let s_val = params.s.truncated(target);
    let ds = [params.s.d1(), params.s.d2()];
    let dw = [params.w.d1(), params.w.d2()];
    let inv_s2 = (s_val * s_val).recip().expect("s != 0");
    // (ds^2 - eps dw^2)/s^2 with eps = -eps_h, i.e. (ds^2 + eps_h dw^2)/s^2
    let model = |i: usize, j: usize| -> Jet {
        (ds[i] * ds[j] + dw[i] * dw[j] * params.eps_h) * inv_s2
    };
    let model_form = Form2::new(model(0, 0), model(0, 1), model(1, 1));
    let gamma = form_gamma(block);
    let scale = 1.0 + gamma.max_abs_coeff().max(model_form.max_abs_coeff());

    let resid_with = |sigma: f64| -> f64 {
        let mut worst: f64 = 0.0;
        for (a, b) in gamma.values().iter().zip(model_form.values()) {
            worst = worst.max((a - sigma * b).abs() / scale);
        }
        worst
    };
    let (gamma_sign, gamma_residual) = if resid_with(-1.0) <= resid_with(1.0) {
        (-1.0, resid_with(-1.0))
    } else {
        (1.0, resid_with(1.0))
    };

    let basics = basic_invariant_jets(g, block);
    let inv = g.inverse().truncated(target);
    let contract = |u: &[Jet; 2], v: &[Jet; 2]| -> Jet {
        inv.a11 * u[0] * v[0] + inv.a12 * (u[0] * v[1] + u[1] * v[0]) + inv.a22 * u[1] * v[1]
    };
    // C_gamma = -g^ij (s_i s_j + eps_h w_i w_j)/s^2
    let c_closed =
        -((contract(&ds, &ds) + contract(&dw, &dw) * params.eps_h) * inv_s2).value();
    let c_gamma = basics.c_gamma.value();
    let c_gamma_residual = (c_gamma - c_closed).abs() / (1.0 + c_gamma.abs().max(c_closed.abs()));

    // Q_gamma = eps_h (s_1 w_2 - s_2 w_1)^2 / (s^4 det g)
    let jac = ds[0].value() * dw[1].value() - ds[1].value() * dw[0].value();
    let s4 = params.s.value().powi(4);
    let q_closed = params.eps_h * jac * jac / (s4 * g.det.value());
    let q_gamma = basics.q_gamma.value();
    let q_gamma_residual = (q_gamma - q_closed).abs() / (1.0 + q_gamma.abs().max(q_closed.abs()));

    Ok(WlpGammaReport { gamma_sign, gamma_residual, c_gamma_residual, q_gamma_residual })
}

/// Scalar curvature of the constant-curvature orientation of the Cosgrove
/// form, `rho/4 - chi = -gamma`; the expected value is -2 wherever the form
/// is nondegenerate (`gamma` itself, being the negative, has curvature +2).
///
/// The value is an algebraic identity in the block coefficient jets, but the
/// cancellation amplifies rounding by about `1/Q_gamma^2` near the
/// degeneracy locus, so the form and its curvature are evaluated in
/// double-double arithmetic.
pub fn cosgrove_curvature(block: &KillingBlock, point: [f64; 2]) -> Result<f64> {
    let gamma = form_gamma(block);
    let scale = gamma.max_abs_coeff();
    if is_negligible(gamma.det().value(), scale * scale) {
        return Err(Error::Degenerate { which: "Cosgrove form", point });
    }
    let form = crate::highprec::cosgrove_form(&block.form);
    Ok(crate::highprec::scalar_curvature(&form))
}

/// Killing-operator norms of the three sl2 generators on the constant
/// curvature form in the `(s, w)` chart:
///
/// ```text
/// V1 = d_w,   V2 = s d_s + w d_w,   V3 = s w d_s + (w^2 + eps s^2)/2 d_w
/// ```
///
/// with `eps = -eps_h`. Applicable where gamma is nondegenerate; a vanishing
/// Jacobian of `(s, w)` means `Q_gamma = 0` and the check does not apply.
pub fn sl2_killing_check(block: &KillingBlock, point: [f64; 2]) -> Result<[f64; 3]> {
    let params = to_wlp(block, point)?;
    let jac = params.s.d1().value() * params.w.d2().value()
        - params.s.d2().value() * params.w.d1().value();
    let scale = params.s.max_abs_coeff().max(params.w.max_abs_coeff());
    if is_negligible(jac, scale * scale) {
        return Err(Error::NotGeneric(
            "gamma is degenerate (Q_gamma = 0); the sl2 Killing check does not apply".into(),
        ));
    }
    Ok(killing_residuals(params.s.value(), params.w.value(), -params.eps_h))
}

/// Evaluates the Killing residuals at explicit `(s, w)` chart values for the
/// branch `eps`; exposed for direct evaluation in tests.
pub fn killing_residuals(s: f64, w: f64, eps: f64) -> [f64; 3] {
    // Metric components of (ds^2 - eps dw^2)/s^2 in the (s, w) chart, as jets
    // in the chart variables; the overall sign of gamma drops out of the
    // Killing operator.
    let order = 1;
    let sj = Jet::var1(s, order);
    let gamma = move |a: usize, b: usize| -> Jet {
        let inv_s2 = (sj * sj).recip().expect("s != 0");
        match (a, b) {
            (0, 0) => inv_s2,
            (1, 1) => inv_s2 * (-eps),
            _ => Jet::constant(0.0, order),
        }
    };
    let wj = Jet::var2(w, order);
    let generators: [[Jet; 2]; 3] = [
        [Jet::constant(0.0, order), Jet::constant(1.0, order)],
        [sj, wj],
        [sj * wj, (wj * wj + sj * sj * eps) * 0.5],
    ];
    let gamma_scale = gamma(0, 0).value().abs().max(gamma(1, 1).value().abs());
    let mut out = [0.0; 3];
    for (slot, v) in generators.iter().enumerate() {
        let d = |jet: &Jet, c: usize| if c == 0 { jet.d1().value() } else { jet.d2().value() };
        let mut norm: f64 = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                // (L_V gamma)_ab = V^c d_c gamma_ab + gamma_cb d_a V^c + gamma_ac d_b V^c
                let mut lie = 0.0;
                for c in 0..2 {
                    lie += v[c].value() * d(&gamma(a, b), c);
                    lie += gamma(c, b).value() * d(&v[c], a);
                    lie += gamma(a, c).value() * d(&v[c], b);
                }
                norm = norm.max(lie.abs());
            }
        }
        out[slot] = norm / gamma_scale;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::invariants::PointGeometry;

    #[test]
    fn cylindrical_fixture_parameters() {
        let entry = catalog::minkowski_cyl();
        let geo = PointGeometry::new(&entry.def, [2.0, 5.0], 2).unwrap();
        let p = to_wlp(&geo.block, [2.0, 5.0]).unwrap();
        assert!((p.r.value() - 2.0).abs() < 1e-14);
        assert!((p.s.value() + 2.0).abs() < 1e-14);
        assert!(p.w.value().abs() < 1e-14);
        assert_eq!(p.eps_h, -1.0);
        assert!(roundtrip_residual(&geo.block, [2.0, 5.0]).unwrap() < 1e-14);
    }

    #[test]
    fn constant_diagonal_block() {
        use crate::expr::parse;
        let def = crate::metric::MetricDefinition {
            name: "const".into(),
            coords: ["t1".into(), "t2".into()],
            params: Default::default(),
            g11: parse("1").unwrap(),
            g12: parse("0").unwrap(),
            g22: parse("1").unwrap(),
            h11: parse("2").unwrap(),
            h12: parse("0").unwrap(),
            h22: parse("2").unwrap(),
            domain: crate::metric::DomainBox::new([0.0, 1.0], [0.0, 1.0]),
        };
        let geo = PointGeometry::new(&def, [0.5, 0.5], 2).unwrap();
        let p = to_wlp(&geo.block, [0.5, 0.5]).unwrap();
        assert!((p.r.value() - 2.0).abs() < 1e-14);
        assert!((p.s.value() - 1.0).abs() < 1e-14);
        assert_eq!(p.w.value(), 0.0);
        assert_eq!(p.eps_h, 1.0);
    }

    #[test]
    fn roundtrip_on_catalog_metrics() {
        for entry in catalog::all() {
            for pt in entry.def.domain.grid(4, 4) {
                let geo = PointGeometry::new(&entry.def, pt, 2).unwrap();
                match roundtrip_residual(&geo.block, pt) {
                    Ok(res) => assert!(res < 1e-10, "{} at {pt:?}: {res}", entry.def.name),
                    Err(Error::NullKillingLeader { .. }) => {} // h11 can vanish pointwise
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }

    #[test]
    fn x_equals_signed_r_squared() {
        for entry in catalog::all() {
            let pt = entry.def.domain.center();
            let geo = PointGeometry::new(&entry.def, pt, 2).unwrap();
            if let Ok(p) = to_wlp(&geo.block, pt) {
                let x = geo.block.x.value();
                let r2 = p.r.value() * p.r.value();
                assert!(
                    (x - p.eps_h * r2).abs() < 1e-12 * (1.0 + r2),
                    "{}: x = {x}, eps r^2 = {}",
                    entry.def.name,
                    p.eps_h * r2
                );
            }
        }
    }

    #[test]
    fn gamma_closed_form_matches_cylindrical_fixture() {
        // gamma_11 = -1/t1^2 from the invariant stack; s = -t1, w = 0.
        let entry = catalog::minkowski_cyl();
        let geo = PointGeometry::new(&entry.def, [2.0, 5.0], 3).unwrap();
        let report = gamma_wlp_identity(&geo.g, &geo.block, [2.0, 5.0]).unwrap();
        assert_eq!(report.gamma_sign, -1.0, "resolved sign");
        assert!(report.gamma_residual < 1e-12);
        assert!(report.c_gamma_residual < 1e-12);
        assert!(report.q_gamma_residual < 1e-12);
    }

    #[test]
    fn gamma_closed_form_on_both_branches() {
        use crate::expr::parse;
        // det h < 0 branch: Kerr-NUT; det h > 0 branch: a made-up block with
        // nonconstant s and w.
        let kerr = catalog::kerr_nut_desitter(1.0, 0.4, 2.0, 0.0);
        for pt in kerr.def.domain.grid(3, 3) {
            let geo = PointGeometry::new(&kerr.def, pt, 3).unwrap();
            let report = gamma_wlp_identity(&geo.g, &geo.block, pt).unwrap();
            assert_eq!(report.gamma_sign, -1.0);
            assert!(report.gamma_residual < 1e-9, "at {pt:?}: {}", report.gamma_residual);
            assert!(report.c_gamma_residual < 1e-9);
            assert!(report.q_gamma_residual < 1e-9);
        }

        let def = crate::metric::MetricDefinition {
            name: "posdet".into(),
            coords: ["t1".into(), "t2".into()],
            params: Default::default(),
            g11: parse("1").unwrap(),
            g12: parse("0").unwrap(),
            g22: parse("1").unwrap(),
            h11: parse("2+t1").unwrap(),
            h12: parse("t2/2").unwrap(),
            h22: parse("1+t2^2").unwrap(),
            domain: crate::metric::DomainBox::new([0.5, 1.5], [0.5, 1.5]),
        };
        for pt in def.domain.grid(3, 3) {
            let geo = PointGeometry::new(&def, pt, 3).unwrap();
            assert!(geo.block.eps > 0.0);
            let report = gamma_wlp_identity(&geo.g, &geo.block, pt).unwrap();
            assert_eq!(report.gamma_sign, -1.0, "positive branch sign at {pt:?}");
            assert!(report.gamma_residual < 1e-9, "at {pt:?}: {}", report.gamma_residual);
            assert!(report.c_gamma_residual < 1e-9);
            assert!(report.q_gamma_residual < 1e-9);
        }
    }

    #[test]
    fn sl2_generators_are_killing() {
        // Direct evaluation on both branches at scattered chart points.
        for eps in [1.0, -1.0] {
            for &(s, w) in &[(2.0, 0.5), (0.7, -1.3), (3.0, 2.0)] {
                let res = killing_residuals(s, w, eps);
                assert!(res[0] < 1e-12, "d_w generator: {res:?}");
                assert!(res[1] < 1e-12, "scaling generator: {res:?}");
                assert!(res[2] < 1e-9, "quadratic generator: {res:?}");
            }
        }
    }

    #[test]
    fn sl2_check_on_kerr_nut_and_degenerate_rejection() {
        let kerr = catalog::kerr_nut_desitter(1.0, 0.0, 2.0, 0.0);
        let pt = [1.1, 0.8];
        let geo = PointGeometry::new(&kerr.def, pt, 2).unwrap();
        let res = sl2_killing_check(&geo.block, pt).unwrap();
        for r in res {
            assert!(r < 1e-9, "{res:?}");
        }

        let e1 = catalog::minkowski_cyl();
        let geo = PointGeometry::new(&e1.def, [2.0, 5.0], 2).unwrap();
        assert!(matches!(
            sl2_killing_check(&geo.block, [2.0, 5.0]),
            Err(Error::NotGeneric(_))
        ));
    }
}
