//! The built-in identity battery: closed-form and cross-route checks that
//! every catalog metric must satisfy. The command line exposes these as
//! `verify-paper`; the acceptance suite runs them with pinned tolerances.
//!
//! Sign conventions the checks rely on, each fixed by derivation and
//! numeric arbitration:
//! * the Cosgrove constant-curvature value -2 belongs to `rho/4 - chi`; the
//!   form `chi - rho/4` has curvature +2;
//! * the cubic-inversion coefficients are
//!   `I_plus = 4 (L (C_chi + 4 Lambda/3) - 2 M S) / D` and
//!   `I_minus = 4 (M (C_chi + 4 Lambda/3) + 2 L S) / D` with `S^2 = -Q_gamma`
//!   and `D = (C_chi + 4 Lambda/3)^2 - 4 Q_gamma`; the sign of `S` is not an
//!   invariant and both branches are tried;
//! * the closed-form frame components match the computed frame up to one
//!   global sign of `Y`, fixed by the orientation convention `eps^{12} = -1`.

use serde::Serialize;

use crate::catalog::{self, CatalogEntry};
use crate::equivalence::par_map;
use crate::error::Result;
use crate::invariants::{
    basic_invariant_jets, evaluate_record, frame_components_chi, invariant_frame, psi2,
    qgamma_crosscheck, ricci_restriction_identity, PointGeometry,
};
use crate::metric::MetricDefinition;
use crate::vacuum;
use crate::wlp;

/// One identity check outcome.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityCheck {
    pub entry: String,
    pub name: &'static str,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

fn check(
    entry: &str,
    name: &'static str,
    tolerance: f64,
    max_residual: f64,
    detail: String,
) -> IdentityCheck {
    IdentityCheck {
        entry: entry.to_owned(),
        name,
        max_residual,
        tolerance,
        pass: max_residual <= tolerance,
        detail,
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

/// `(M, L, A, Lambda)` when the definition carries the family parameters.
fn family_params(def: &MetricDefinition) -> Option<(f64, f64, f64, f64)> {
    Some((
        *def.params.get("M")?,
        *def.params.get("L")?,
        *def.params.get("A")?,
        *def.params.get("Lambda")?,
    ))
}

/// `Q_gamma` and `C_chi` against their closed forms in the family
/// parameters.
pub fn check_pq_closed_forms(
    def: &MetricDefinition,
    points: &[[f64; 2]],
    tolerance: f64,
) -> Result<IdentityCheck> {
    let (m, l, _, lambda) = family_params(def).expect("family entry");
    let mut worst: f64 = 0.0;
    for &pt in points {
        let geo = PointGeometry::new(def, pt, 2)?;
        let b = basic_invariant_jets(&geo.g, &geo.block);
        let (t1, t2) = (pt[0], pt[1]);
        let w3 = (t1 * t1 + t2 * t2).powi(3);
        let q_gamma_cf = -4.0
            * ((l * t2 * (t2 * t2 - 3.0 * t1 * t1) - m * t1 * (3.0 * t2 * t2 - t1 * t1)) / w3)
                .powi(2);
        let c_chi_cf = 4.0
            * (m * t2 * (t2 * t2 - 3.0 * t1 * t1) + l * t1 * (3.0 * t2 * t2 - t1 * t1))
            / w3
            - 4.0 / 3.0 * lambda;
        worst = worst.max(rel(b.q_gamma.value(), q_gamma_cf));
        worst = worst.max(rel(b.c_chi.value(), c_chi_cf));
    }
    Ok(check(&def.name, "closed-form-pq", tolerance, worst, String::new()))
}

/// `(C_chi + 4 Lambda/3)^2 - 4 Q_gamma = 16 (M^2 + L^2) / (t1^2 + t2^2)^3`.
pub fn check_simple_relation(
    def: &MetricDefinition,
    points: &[[f64; 2]],
    tolerance: f64,
) -> Result<IdentityCheck> {
    let (m, l, _, lambda) = family_params(def).expect("family entry");
    let mut worst: f64 = 0.0;
    for &pt in points {
        let geo = PointGeometry::new(def, pt, 2)?;
        let b = basic_invariant_jets(&geo.g, &geo.block);
        let lhs = (4.0 / 3.0 * lambda + b.c_chi.value()).powi(2) - 4.0 * b.q_gamma.value();
        let w3 = (pt[0] * pt[0] + pt[1] * pt[1]).powi(3);
        let rhs = 16.0 * (m * m + l * l) / w3;
        worst = worst.max(rel(lhs, rhs));
    }
    Ok(check(&def.name, "simple-relation", tolerance, worst, String::new()))
}

/// The coordinates solve the cubics `4 t1^3 - 3 I t1 + I_plus = 0` and
/// `4 t2^3 - 3 I t2 - I_minus = 0` built from invariants.
pub fn check_cubic_inversion(
    def: &MetricDefinition,
    points: &[[f64; 2]],
    tolerance: f64,
) -> Result<IdentityCheck> {
    let (m, l, _, lambda) = family_params(def).expect("family entry");
    let mut worst: f64 = 0.0;
    for &pt in points {
        let geo = PointGeometry::new(def, pt, 2)?;
        let b = basic_invariant_jets(&geo.g, &geo.block);
        let c = b.c_chi.value() + 4.0 / 3.0 * lambda;
        let d = c * c - 4.0 * b.q_gamma.value();
        let i = (16.0 * (m * m + l * l) / d).cbrt();
        let s_mag = (-b.q_gamma.value()).max(0.0).sqrt();
        // the sign of S = +-sqrt(-Q_gamma) is not an invariant; take the
        // branch that solves both cubics
        let residual = [1.0f64, -1.0]
            .iter()
            .map(|&sgn| {
                let s = sgn * s_mag;
                let i_plus = 4.0 * (l * c - 2.0 * m * s) / d;
                let i_minus = 4.0 * (m * c + 2.0 * l * s) / d;
                let r1 = 4.0 * pt[0].powi(3) - 3.0 * i * pt[0] + i_plus;
                let r2 = 4.0 * pt[1].powi(3) - 3.0 * i * pt[1] - i_minus;
                let scale = 1.0
                    + (4.0 * pt[0].powi(3)).abs().max((3.0 * i * pt[0]).abs())
                    + (4.0 * pt[1].powi(3)).abs().max((3.0 * i * pt[1]).abs());
                r1.abs().max(r2.abs()) / scale
            })
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(residual);
    }
    Ok(check(&def.name, "cubic-inversion", tolerance, worst, String::new()))
}

/// Scalar curvature of the constant-curvature orientation `rho/4 - chi`
/// equals -2 wherever the Cosgrove form is nondegenerate.
pub fn check_cosgrove_curvature(
    def: &MetricDefinition,
    points: &[[f64; 2]],
    q_gamma_cutoff: f64,
    tolerance: f64,
) -> Result<IdentityCheck> {
    let mut worst: f64 = 0.0;
    let mut used = 0usize;
    for &pt in points {
        let geo = PointGeometry::new(def, pt, 3)?;
        let b = basic_invariant_jets(&geo.g, &geo.block);
        if b.q_gamma.value().abs() <= q_gamma_cutoff {
            continue;
        }
        used += 1;
        let r = wlp::cosgrove_curvature(&geo.block, pt)?;
        worst = worst.max((r + 2.0).abs());
    }
    Ok(check(
        &def.name,
        "cosgrove-curvature",
        tolerance,
        worst,
        format!("{used} of {} points above the cutoff", points.len()),
    ))
}

/// Frame components against the family closed forms; `X` matches directly,
/// `Y` up to one global orientation sign.
pub fn check_frame_closed_forms(
    def: &MetricDefinition,
    points: &[[f64; 2]],
    tolerance: f64,
) -> Result<IdentityCheck> {
    let (m, l, a, lambda) = family_params(def).expect("family entry");
    let mut worst_x: f64 = 0.0;
    let mut worst_y = [0.0f64; 2]; // per global sign choice
    for &pt in points {
        let geo = PointGeometry::new(def, pt, 2)?;
        let (xv, yv) = invariant_frame(&geo.g, &geo.block, pt)?;
        let (t1, t2) = (pt[0], pt[1]);
        let w = t1 * t1 + t2 * t2;
        let p = (a * a - t1 * t1) * (1.0 + lambda / 3.0 * t1 * t1) + 2.0 * l * t1;
        let q = (a * a + t2 * t2) * (1.0 - lambda / 3.0 * t2 * t2) - 2.0 * m * t2;
        let x1 =
            -2.0 / 3.0 * (2.0 * lambda * t1.powi(3) - (lambda * a * a - 3.0) * t1 - 3.0 * l) / w;
        let x2 =
            -2.0 / 3.0 * (2.0 * lambda * t2.powi(3) + (lambda * a * a - 3.0) * t2 + 3.0 * m) / w;
        let y1 = q.signum() * (p / q).abs().sqrt() * x2;
        let y2 = -p.signum() * (q / p).abs().sqrt() * x1;
        worst_x = worst_x.max(rel(xv[0], x1)).max(rel(xv[1], x2));
        for (slot, sign) in [(0usize, 1.0f64), (1, -1.0)] {
            worst_y[slot] = worst_y[slot]
                .max(rel(yv[0], sign * y1))
                .max(rel(yv[1], sign * y2));
        }
    }
    let (y_sign, worst_y) = if worst_y[0] <= worst_y[1] {
        (1.0, worst_y[0])
    } else {
        (-1.0, worst_y[1])
    };
    Ok(check(
        &def.name,
        "frame-closed-form",
        tolerance,
        worst_x.max(worst_y),
        format!("global Y sign {y_sign:+}"),
    ))
}

/// The frame identities: `X ln x = C_rho`, `Y ln x = 0`, the frame
/// components of `g` and `rho`, and the `chi` component relations including
/// the product identity.
pub fn check_frame_identities(
    def: &MetricDefinition,
    points: &[[f64; 2]],
    tolerance: f64,
) -> Result<IdentityCheck> {
    let mut worst: f64 = 0.0;
    for &pt in points {
        let geo = PointGeometry::new(def, pt, 2)?;
        let b = basic_invariant_jets(&geo.g, &geo.block);
        let (xv, yv) = invariant_frame(&geo.g, &geo.block, pt)?;
        let c_rho = b.c_rho.value();
        let sign = geo.g.eps;
        let x = geo.block.x;
        let dlx = [x.d1().value() / x.value(), x.d2().value() / x.value()];
        worst = worst.max(rel(xv[0] * dlx[0] + xv[1] * dlx[1], c_rho));
        worst = worst.max((yv[0] * dlx[0] + yv[1] * dlx[1]).abs() / (1.0 + c_rho.abs()));
        let gf = &geo.g.form;
        worst = worst.max(rel(gf.contract(xv, xv), c_rho));
        worst = worst.max(gf.contract(xv, yv).abs() / (1.0 + c_rho.abs()));
        worst = worst.max(rel(gf.contract(yv, yv), sign * c_rho));
        let rho = crate::invariants::form_rho(&geo.block);
        worst = worst.max(rel(rho.contract(xv, xv), c_rho * c_rho));
        worst = worst.max(rho.contract(xv, yv).abs() / (1.0 + c_rho * c_rho));
        worst = worst.max(rho.contract(yv, yv).abs() / (1.0 + c_rho * c_rho));
        let (xx, xy, yy) = frame_components_chi(&geo.g, &geo.block, pt)?;
        let (c_chi, q_chi, q_gamma) = (b.c_chi.value(), b.q_chi.value(), b.q_gamma.value());
        worst = worst.max(rel(xx, c_rho * c_chi - 4.0 * q_chi + 4.0 * q_gamma));
        worst = worst.max(rel(yy, sign * 4.0 * (q_chi - q_gamma)));
        worst = worst.max(rel(xx * yy - xy * xy, sign * c_rho * c_rho * q_chi));
    }
    Ok(check(&def.name, "frame-identities", tolerance, worst, String::new()))
}

/// `Q_gamma` against the squared-determinant closed form.
pub fn check_qgamma_crosscheck(
    def: &MetricDefinition,
    points: &[[f64; 2]],
    tolerance: f64,
) -> Result<IdentityCheck> {
    let mut worst: f64 = 0.0;
    for &pt in points {
        let geo = PointGeometry::new(def, pt, 2)?;
        worst = worst.max(qgamma_crosscheck(&geo.g, &geo.block));
    }
    Ok(check(&def.name, "qgamma-crosscheck", tolerance, worst, String::new()))
}

/// The restricted-Ricci and scalar-curvature expressions against the 4D
/// oracle.
pub fn check_ricci_restriction(
    def: &MetricDefinition,
    points: &[[f64; 2]],
    tolerance: f64,
) -> Result<IdentityCheck> {
    let mut worst: f64 = 0.0;
    for &pt in points {
        worst = worst.max(ricci_restriction_identity(def, pt)?.worst());
    }
    Ok(check(&def.name, "ricci-restriction", tolerance, worst, String::new()))
}

/// The three listed Weyl components against their first-order expressions.
pub fn check_weyl_components(
    def: &MetricDefinition,
    points: &[[f64; 2]],
    tolerance: f64,
) -> Result<IdentityCheck> {
    let mut worst: f64 = 0.0;
    for &pt in points {
        let geo = PointGeometry::new(def, pt, 3)?;
        let b = basic_invariant_jets(&geo.g, &geo.block);
        let c = crate::oracle::full_curvature(def, pt)?;
        let det_g = geo.g.det.value();
        let det_h = geo.block.x.value();
        let r2 = crate::surface::scalar_curvature(&geo.g)?.value();
        let lnx = geo.block.x.ln_abs()?;
        let dlnx = crate::surface::laplace_beltrami(&geo.g, &lnx)?.value();
        // C_1234 = sqrt(Q_gamma det h det g)/2, up to Killing orientation
        let arg = b.q_gamma.value() * det_h * det_g;
        let pred_1234 = 0.5 * arg.max(0.0).sqrt();
        worst = worst.max(rel(c.weyl_1234().abs(), pred_1234));
        let fac = r2 + 0.5 * dlnx + 0.25 * b.c_rho.value() - b.c_chi.value();
        worst = worst.max(rel(c.weyl_1212(), fac / 6.0 * det_g));
        worst = worst.max(rel(c.weyl_3434(), fac / 6.0 * det_h));
    }
    Ok(check(&def.name, "weyl-components", tolerance, worst, String::new()))
}

/// Einstein-space residual `Ric = Lambda g` via the oracle.
pub fn check_einstein(
    def: &MetricDefinition,
    lambda: f64,
    points: &[[f64; 2]],
    tolerance: f64,
) -> Result<IdentityCheck> {
    let mut worst: f64 = 0.0;
    for &pt in points {
        worst = worst.max(vacuum::vacuum_residual(def, lambda, pt)?);
    }
    Ok(check(&def.name, "einstein-residual", tolerance, worst, String::new()))
}

/// The four vacuum relations.
pub fn check_vacuum_relations(
    def: &MetricDefinition,
    lambda: f64,
    points: &[[f64; 2]],
    tolerance: f64,
) -> Result<IdentityCheck> {
    let mut worst: f64 = 0.0;
    for &pt in points {
        let rec = evaluate_record(def, pt)?;
        let eps_g = PointGeometry::new(def, pt, 1)?.g.eps;
        let res = vacuum::vacuum_relations(&rec, eps_g, lambda);
        worst = res.iter().fold(worst, |m, r| m.max(*r));
    }
    Ok(check(&def.name, "vacuum-relations", tolerance, worst, String::new()))
}

/// Closed-loop recovery of second-order invariants from first-order data.
pub fn check_vacuum_recovery(
    def: &MetricDefinition,
    lambda: f64,
    points: &[[f64; 2]],
    tolerance: f64,
) -> Result<IdentityCheck> {
    use crate::invariants::BasicInvariant;
    let mut worst: f64 = 0.0;
    for &pt in points {
        let rec = evaluate_record(def, pt)?;
        let eps_g = PointGeometry::new(def, pt, 1)?.g.eps;
        let so = rec.second_order();
        for q_choice in [BasicInvariant::CChi, BasicInvariant::QChi, BasicInvariant::QGamma] {
            let (dx, dy) = so.along(q_choice);
            let best = [1.0f64, -1.0]
                .iter()
                .map(|&sign| {
                    match vacuum::recover_second_order(&rec, eps_g, lambda, q_choice, sign, &so)
                    {
                        Ok(r) => rel(r.xq, dx)
                            .max(rel(r.yq, dy))
                            .max(rel(r.xc_rho, so.xc_rho))
                            .max(rel(r.yc_rho.abs(), so.yc_rho.abs())),
                        Err(_) => f64::INFINITY,
                    }
                })
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(best);
        }
    }
    Ok(check(&def.name, "vacuum-recovery", tolerance, worst, String::new()))
}

/// First-order vacuum identities: `C_nu = -C_rho/2 - 4 Lambda`,
/// `R = -C_chi/2`, `Rfull = 4 Lambda`.
pub fn check_vacuum_first_order(
    def: &MetricDefinition,
    lambda: f64,
    points: &[[f64; 2]],
    tolerance: f64,
) -> Result<IdentityCheck> {
    let mut worst: f64 = 0.0;
    for &pt in points {
        let rec = evaluate_record(def, pt)?;
        worst = worst.max((rec.c_nu + 0.5 * rec.c_rho + 4.0 * lambda).abs());
        worst = worst.max((rec.r2 + 0.5 * rec.c_chi).abs());
        worst = worst.max((rec.r_full - 4.0 * lambda).abs());
    }
    Ok(check(&def.name, "vacuum-first-order", tolerance, worst, String::new()))
}

/// `Re Psi_2 = C_chi/8 + Lambda/6` in vacuum, and `Q_gamma <= 0` wherever
/// the block is Lorentzian.
pub fn check_psi2_vacuum(
    def: &MetricDefinition,
    lambda: f64,
    points: &[[f64; 2]],
    tolerance: f64,
) -> Result<IdentityCheck> {
    let mut worst: f64 = 0.0;
    for &pt in points {
        let geo = PointGeometry::new(def, pt, 3)?;
        let (re, im) = psi2(&geo.g, &geo.block, pt)?;
        let b = basic_invariant_jets(&geo.g, &geo.block);
        worst = worst.max((re - (b.c_chi.value() / 8.0 + lambda / 6.0)).abs());
        let q_gamma = b.q_gamma.value();
        if q_gamma > 0.0 {
            worst = worst.max(q_gamma);
        }
        worst = worst.max((im - 0.25 * (-q_gamma).max(0.0).sqrt()).abs());
    }
    Ok(check(&def.name, "psi2-vacuum", tolerance, worst, String::new()))
}

/// Block-parameter closed forms for `gamma`, `C_gamma` and `Q_gamma`, plus
/// the sl2 Killing residuals of the constant-curvature form.
pub fn check_block_parametrization(
    def: &MetricDefinition,
    points: &[[f64; 2]],
    tolerance: f64,
) -> Result<IdentityCheck> {
    let mut worst: f64 = 0.0;
    let mut sign = 0.0f64;
    for &pt in points {
        let geo = PointGeometry::new(def, pt, 3)?;
        let report = match wlp::gamma_wlp_identity(&geo.g, &geo.block, pt) {
            Ok(r) => r,
            Err(crate::error::Error::NullKillingLeader { .. }) => continue,
            Err(e) => return Err(e),
        };
        worst = worst
            .max(report.gamma_residual)
            .max(report.c_gamma_residual)
            .max(report.q_gamma_residual);
        sign = report.gamma_sign;
        worst = worst.max(wlp::roundtrip_residual(&geo.block, pt)?);
        match wlp::sl2_killing_check(&geo.block, pt) {
            Ok(res) => worst = res.iter().fold(worst, |m, r| m.max(*r)),
            Err(crate::error::Error::NotGeneric(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(check(
        &def.name,
        "block-parametrization",
        tolerance,
        worst,
        format!("gamma sign {sign:+}"),
    ))
}

/// Runs every applicable check for one catalog entry on its sample grid.
pub fn run_entry(entry: &CatalogEntry) -> Vec<IdentityCheck> {
    let def = &entry.def;
    let points = def.domain.grid(5, 5);
    let mut out = Vec::new();
    let mut push = |r: Result<IdentityCheck>, name: &'static str| match r {
        Ok(c) => out.push(c),
        Err(e) => out.push(IdentityCheck {
            entry: def.name.clone(),
            name,
            max_residual: f64::INFINITY,
            tolerance: 0.0,
            pass: false,
            detail: format!("failed to evaluate: {e}"),
        }),
    };

    if family_params(def).is_some() {
        push(check_pq_closed_forms(def, &points, 1e-9), "closed-form-pq");
        push(check_simple_relation(def, &points, 1e-9), "simple-relation");
        push(check_cubic_inversion(def, &points, 1e-7), "cubic-inversion");
        push(check_frame_closed_forms(def, &points, 1e-9), "frame-closed-form");
    }
    push(check_qgamma_crosscheck(def, &points, 1e-10), "qgamma-crosscheck");
    push(
        check_cosgrove_curvature(def, &points, 1e-6, 1e-6),
        "cosgrove-curvature",
    );
    if entry.facts.killing_dim == 2 {
        push(check_frame_identities(def, &points, 1e-9), "frame-identities");
        push(check_block_parametrization(def, &points, 1e-9), "block-parametrization");
        push(check_ricci_restriction(def, &points, 1e-7), "ricci-restriction");
        push(check_weyl_components(def, &points, 1e-7), "weyl-components");
    }
    if entry.facts.vacuum {
        let lambda = entry.facts.lambda;
        push(check_einstein(def, lambda, &points, 1e-7), "einstein-residual");
        if entry.facts.has_independent_pair {
            push(
                check_vacuum_relations(def, lambda, &points, 1e-6),
                "vacuum-relations",
            );
            push(check_vacuum_recovery(def, lambda, &points, 1e-5), "vacuum-recovery");
            push(
                check_vacuum_first_order(def, lambda, &points, 1e-8),
                "vacuum-first-order",
            );
            push(check_psi2_vacuum(def, lambda, &points, 1e-9), "psi2-vacuum");
        }
    }
    out
}

/// Runs the battery for one entry by name, or for the whole catalog.
pub fn run_all(entry_name: Option<&str>) -> Vec<IdentityCheck> {
    let entries: Vec<CatalogEntry> = match entry_name {
        Some(name) => catalog::find(name).into_iter().collect(),
        None => catalog::all(),
    };
    let per_entry = par_map(entries.len(), 1, |i| run_entry(&entries[i]));
    per_entry.into_iter().flatten().collect()
}
