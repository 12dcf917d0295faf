//! Intrinsic geometry of the two-dimensional orbit surface.
//!
//! Everything here works on jets of the metric coefficients, so Christoffel
//! symbols, curvature, Hessians and traces come out with exact derivatives
//! rather than nested finite differences. Each derivative taken lowers the
//! jet order by one; callers supply coefficients at a high enough order for
//! the quantity they want.

use crate::error::{Error, Result};
use crate::jets::{Jet, JetError};

/// Relative threshold below which a scalar counts as zero, measured against
/// the largest jet coefficient that entered its computation.
pub const NEAR_ZERO: f64 = 1e-10;

pub fn is_negligible(value: f64, local_scale: f64) -> bool {
    value.abs() < NEAR_ZERO * (1.0 + local_scale)
}

/// Symmetric 2x2 form with jet-valued entries; only the upper triangle is
/// stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Form2 {
    pub a11: Jet,
    pub a12: Jet,
    pub a22: Jet,
}

impl Form2 {
    pub fn new(a11: Jet, a12: Jet, a22: Jet) -> Self {
        assert!(
            a11.order() == a12.order() && a12.order() == a22.order(),
            "form entries must share one jet order"
        );
        Form2 { a11, a12, a22 }
    }

    pub fn zero(order: usize) -> Self {
        let z = Jet::constant(0.0, order);
        Form2 { a11: z, a12: z, a22: z }
    }

    pub fn order(&self) -> usize {
        self.a11.order()
    }

    pub fn det(&self) -> Jet {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    pub fn truncated(&self, order: usize) -> Form2 {
        Form2 {
            a11: self.a11.truncated(order),
            a12: self.a12.truncated(order),
            a22: self.a22.truncated(order),
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> Jet {
        match (i, j) {
            (0, 0) => self.a11,
            (1, 1) => self.a22,
            _ => self.a12,
        }
    }

    pub fn add(&self, rhs: &Form2) -> Form2 {
        Form2 {
            a11: self.a11 + rhs.a11,
            a12: self.a12 + rhs.a12,
            a22: self.a22 + rhs.a22,
        }
    }

    pub fn sub(&self, rhs: &Form2) -> Form2 {
        Form2 {
            a11: self.a11 - rhs.a11,
            a12: self.a12 - rhs.a12,
            a22: self.a22 - rhs.a22,
        }
    }

    pub fn scale(&self, factor: f64) -> Form2 {
        Form2 {
            a11: self.a11 * factor,
            a12: self.a12 * factor,
            a22: self.a22 * factor,
        }
    }

    pub fn scale_jet(&self, factor: Jet) -> Form2 {
        Form2 {
            a11: self.a11 * factor,
            a12: self.a12 * factor,
            a22: self.a22 * factor,
        }
    }

    /// Bilinear contraction with two vectors of plain values.
    pub fn contract(&self, u: [f64; 2], v: [f64; 2]) -> f64 {
        self.a11.value() * u[0] * v[0]
            + self.a12.value() * (u[0] * v[1] + u[1] * v[0])
            + self.a22.value() * u[1] * v[1]
    }

    pub fn values(&self) -> [f64; 3] {
        [self.a11.value(), self.a12.value(), self.a22.value()]
    }

    /// Congruence transform by a constant matrix: `a'_kl = m^i_k m^j_l a_ij`
    /// with `m[i][k]` the matrix entries.
    pub fn congruence(&self, m: [[f64; 2]; 2]) -> Form2 {
        let t = |k: usize, l: usize| -> Jet {
            self.a11 * (m[0][k] * m[0][l])
                + self.a12 * (m[0][k] * m[1][l] + m[1][k] * m[0][l])
                + self.a22 * (m[1][k] * m[1][l])
        };
        Form2 { a11: t(0, 0), a12: t(0, 1), a22: t(1, 1) }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.a11
            .max_abs_coeff()
            .max(self.a12.max_abs_coeff())
            .max(self.a22.max_abs_coeff())
    }
}

/// The surface metric `g` with cached determinant and signature flag.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceMetric {
    pub form: Form2,
    pub det: Jet,
    /// +1 where `det g > 0` (elliptic), -1 where `det g < 0` (hyperbolic).
    pub eps: f64,
}

impl SurfaceMetric {
    pub fn new(form: Form2, point: [f64; 2]) -> Result<Self> {
        let det = form.det();
        if is_negligible(det.value(), form.max_abs_coeff()) {
            return Err(Error::Degenerate { which: "surface metric", point });
        }
        let eps = det.value().signum();
        Ok(SurfaceMetric { form, det, eps })
    }

    pub fn order(&self) -> usize {
        self.form.order()
    }

    /// Inverse metric, same jet order.
    pub fn inverse(&self) -> Form2 {
        let inv_det = self.det.recip().expect("nondegenerate by construction");
        Form2 {
            a11: self.form.a22 * inv_det,
            a12: -(self.form.a12 * inv_det),
            a22: self.form.a11 * inv_det,
        }
    }

    /// `sqrt(|det g|)` as a jet.
    pub fn sqrt_abs_det(&self) -> Jet {
        let d = if self.eps > 0.0 { self.det } else { -self.det };
        d.sqrt().expect("positive by construction")
    }

    /// Raises the index of a covector given by jet components.
    pub fn raise(&self, cov: [Jet; 2]) -> [Jet; 2] {
        let inv = self.inverse().truncated(cov[0].order().min(self.order()));
        let c0 = cov[0].truncated(inv.order());
        let c1 = cov[1].truncated(inv.order());
        [inv.a11 * c0 + inv.a12 * c1, inv.a12 * c0 + inv.a22 * c1]
    }
}

/// Christoffel symbols of the Levi-Civita connection, one order below the
/// metric jets; `sym[k][i][j]` is `Gamma^k_ij`.
#[derive(Debug, Clone, Copy)]
pub struct Christoffels {
    pub sym: [[[Jet; 2]; 2]; 2],
}

pub fn christoffel(g: &SurfaceMetric) -> Result<Christoffels> {
    if g.order() < 1 {
        return Err(Error::Jet(JetError::InsufficientOrder { need: 1, have: g.order() }));
    }
    let target = g.order() - 1;
    let inv = g.inverse().truncated(target);
    let full = |i: usize, j: usize| g.form.entry(i, j);
    // dg[i][j][k] = d g_ij / d t^k at the reduced order
    let dg = |i: usize, j: usize, k: usize| -> Jet {
        if k == 0 {
            full(i, j).d1()
        } else {
            full(i, j).d2()
        }
    };
    let invm = [[inv.a11, inv.a12], [inv.a12, inv.a22]];
    let mut sym = [[[Jet::constant(0.0, target); 2]; 2]; 2];
    for k in 0..2 {
        for i in 0..2 {
            for j in i..2 {
                let mut acc = Jet::constant(0.0, target);
                for l in 0..2 {
                    acc = acc + invm[k][l] * (dg(l, i, j) + dg(l, j, i) - dg(i, j, l)) * 0.5;
                }
                sym[k][i][j] = acc;
                sym[k][j][i] = acc;
            }
        }
    }
    Ok(Christoffels { sym })
}

/// Scalar curvature of the two-dimensional Levi-Civita connection. Needs
/// metric jets of order at least 2 and returns a jet two orders lower.
pub fn scalar_curvature(g: &SurfaceMetric) -> Result<Jet> {
    if g.order() < 2 {
        return Err(Error::Jet(JetError::InsufficientOrder { need: 2, have: g.order() }));
    }
    let gamma = christoffel(g)?.sym;
    let target = g.order() - 2;
    let dgamma = |k: usize, i: usize, j: usize, m: usize| -> Jet {
        if m == 0 {
            gamma[k][i][j].d1()
        } else {
            gamma[k][i][j].d2()
        }
    };
    let gt = |k: usize, i: usize, j: usize| gamma[k][i][j].truncated(target);
    // Ric_sn = d_m Gamma^m_ns - d_n Gamma^m_ms + Gamma^m_ml Gamma^l_ns
    //          - Gamma^m_nl Gamma^l_ms
    let mut ric = [[Jet::constant(0.0, target); 2]; 2];
    for s in 0..2 {
        for n in 0..2 {
            let mut acc = Jet::constant(0.0, target);
            for m in 0..2 {
                acc = acc + dgamma(m, n, s, m) - dgamma(m, m, s, n);
                for l in 0..2 {
                    acc = acc + gt(m, m, l) * gt(l, n, s) - gt(m, n, l) * gt(l, m, s);
                }
            }
            ric[s][n] = acc;
        }
    }
    let inv = g.inverse().truncated(target);
    let invm = [[inv.a11, inv.a12], [inv.a12, inv.a22]];
    let mut r = Jet::constant(0.0, target);
    for s in 0..2 {
        for n in 0..2 {
            r = r + invm[s][n] * ric[s][n];
        }
    }
    Ok(r)
}

/// Covariant Hessian `Hess_ij f = f_,ij - Gamma^k_ij f_,k`.
pub fn covariant_hessian(g: &SurfaceMetric, f: &Jet) -> Result<Form2> {
    if f.order() < 2 {
        return Err(Error::Jet(JetError::InsufficientOrder { need: 2, have: f.order() }));
    }
    let gamma = christoffel(g)?.sym;
    let target = (f.order() - 2).min(g.order() - 1);
    let df = [f.d1().truncated(target), f.d2().truncated(target)];
    let ddf = |i: usize, j: usize| -> Jet {
        let d = if i == 0 { f.d1() } else { f.d2() };
        (if j == 0 { d.d1() } else { d.d2() }).truncated(target)
    };
    let mut entries = [Jet::constant(0.0, target); 3];
    let mut slot = 0;
    for i in 0..2 {
        for j in i..2 {
            let mut acc = ddf(i, j);
            for k in 0..2 {
                acc = acc - gamma[k][i][j].truncated(target) * df[k];
            }
            entries[slot] = acc;
            slot += 1;
        }
    }
    Ok(Form2::new(entries[0], entries[1], entries[2]))
}

/// Laplace-Beltrami operator: the `g`-trace of the covariant Hessian.
pub fn laplace_beltrami(g: &SurfaceMetric, f: &Jet) -> Result<Jet> {
    let hess = covariant_hessian(g, f)?;
    let (trace, _) = trace_and_qdet(g, &hess);
    Ok(trace)
}

/// The two basic scalars a quadratic form defines against the metric:
/// the trace `C = g^ij a_ij` and the determinant ratio `Q = det a / det g`,
/// which are the characteristic polynomial coefficients of `a` against `g`.
pub fn trace_and_qdet(g: &SurfaceMetric, alpha: &Form2) -> (Jet, Jet) {
    let target = alpha.order().min(g.order());
    let inv = g.inverse().truncated(target);
    let a = alpha.truncated(target);
    let c = inv.a11 * a.a11 + inv.a12 * a.a12 * 2.0 + inv.a22 * a.a22;
    let q = a.det() / g.det.truncated(target);
    (c, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, ParamBindings};

    fn metric_from(g11: &str, g12: &str, g22: &str, point: [f64; 2], order: usize) -> SurfaceMetric {
        let params = ParamBindings::new();
        let j = |src: &str| parse(src).unwrap().eval_jet(point, &params, order).unwrap();
        SurfaceMetric::new(Form2::new(j(g11), j(g12), j(g22)), point).unwrap()
    }

    #[test]
    fn flat_metric_has_no_connection_or_curvature() {
        let g = metric_from("1", "0", "1", [0.3, 0.8], 2);
        let gamma = christoffel(&g).unwrap();
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    assert_eq!(gamma.sym[k][i][j].value(), 0.0);
                }
            }
        }
        assert_eq!(scalar_curvature(&g).unwrap().value(), 0.0);
    }

    #[test]
    fn polar_type_metric_christoffels() {
        // g = diag(1, t1^2): Gamma^1_22 = -t1, Gamma^2_12 = 1/t1
        let g = metric_from("1", "0", "t1^2", [2.0, 0.0], 2);
        let gamma = christoffel(&g).unwrap();
        assert!((gamma.sym[0][1][1].value() + 2.0).abs() < 1e-14);
        assert!((gamma.sym[1][0][1].value() - 0.5).abs() < 1e-14);
        assert!(gamma.sym[0][0][0].value().abs() < 1e-14);
        assert!(gamma.sym[1][1][1].value().abs() < 1e-14);
        assert!(gamma.sym[0][0][1].value().abs() < 1e-14);
        assert!(gamma.sym[1][0][0].value().abs() < 1e-14);
    }

    #[test]
    fn round_sphere_curvature_is_two() {
        let g = metric_from("1", "0", "sin(t1)^2", [0.9, 0.4], 2);
        let r = scalar_curvature(&g).unwrap().value();
        assert!((r - 2.0).abs() < 1e-12, "R = {r}");
    }

    #[test]
    fn conformal_curvature_formula() {
        // g = f (dt1^2 + dt2^2) with f = exp(t1^2 + t2^2):
        // R = -laplacian0(ln f)/f = -4/f
        let point = [0.4, -0.7];
        let g = metric_from(
            "exp(t1^2+t2^2)",
            "0",
            "exp(t1^2+t2^2)",
            point,
            2,
        );
        let f = (point[0] * point[0] + point[1] * point[1]).exp();
        let r = scalar_curvature(&g).unwrap().value();
        assert!((r + 4.0 / f).abs() < 1e-12 * (1.0 + 4.0 / f), "R = {r}");
    }

    #[test]
    fn hessian_flat_and_curved() {
        let params = ParamBindings::new();
        let flat = metric_from("1", "0", "1", [1.0, 2.0], 2);
        let f = parse("t1^2").unwrap().eval_jet([1.0, 2.0], &params, 2).unwrap();
        let hess = covariant_hessian(&flat, &f).unwrap();
        assert_eq!(hess.values(), [2.0, 0.0, 0.0]);

        let polar = metric_from("1", "0", "t1^2", [2.0, 0.0], 2);
        let lin = parse("t1").unwrap().eval_jet([2.0, 0.0], &params, 2).unwrap();
        let hess = covariant_hessian(&polar, &lin).unwrap();
        assert!((hess.a22.value() - 2.0).abs() < 1e-14);
        assert!(hess.a11.value().abs() < 1e-14);
    }

    #[test]
    fn log_radius_is_harmonic_in_polar_metric() {
        let params = ParamBindings::new();
        for t1 in [0.5, 1.0, 2.0, 3.7] {
            let g = metric_from("1", "0", "t1^2", [t1, 0.3], 2);
            let f = parse("ln(t1)").unwrap().eval_jet([t1, 0.3], &params, 2).unwrap();
            let lap = laplace_beltrami(&g, &f).unwrap().value();
            assert!(lap.abs() < 1e-13, "laplacian = {lap} at t1 = {t1}");
        }
    }

    #[test]
    fn flat_laplacian_of_square_norm() {
        let params = ParamBindings::new();
        let g = metric_from("1", "0", "1", [0.2, 0.5], 2);
        let f = parse("t1^2+t2^2").unwrap().eval_jet([0.2, 0.5], &params, 2).unwrap();
        assert_eq!(laplace_beltrami(&g, &f).unwrap().value(), 4.0);
    }

    #[test]
    fn trace_and_qdet_basics() {
        let g = metric_from("1+t1", "t2/4", "2", [0.5, 0.8], 2);
        let (c, q) = trace_and_qdet(&g, &g.form);
        assert!((c.value() - 2.0).abs() < 1e-14);
        assert!((q.value() - 1.0).abs() < 1e-14);
        let zero = Form2::zero(2);
        let (c0, q0) = trace_and_qdet(&g, &zero);
        assert_eq!(c0.value(), 0.0);
        assert_eq!(q0.value(), 0.0);
    }

    #[test]
    fn inverse_is_exact() {
        let g = metric_from("1+t1^2", "t1*t2", "2+sin(t2)", [0.7, 1.1], 2);
        let inv = g.inverse();
        let f = &g.form;
        let id00 = inv.a11 * f.a11 + inv.a12 * f.a12;
        let id01 = inv.a11 * f.a12 + inv.a12 * f.a22;
        let id11 = inv.a12 * f.a12 + inv.a22 * f.a22;
        assert!((id00.value() - 1.0).abs() < 1e-12);
        assert!(id01.value().abs() < 1e-12);
        assert!((id11.value() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn metric_is_covariantly_constant() {
        let point = [0.8, 1.3];
        let g = metric_from("1+t1^2", "t1*t2/3", "2+cos(t2)", point, 2);
        let gamma = christoffel(&g).unwrap().sym;
        let target = g.order() - 1;
        let e = |i: usize, j: usize| g.form.entry(i, j);
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let dg = if k == 0 { e(i, j).d1() } else { e(i, j).d2() };
                    let mut nabla = dg.truncated(target);
                    for l in 0..2 {
                        nabla = nabla
                            - gamma[l][k][i] * e(l, j).truncated(target)
                            - gamma[l][k][j] * e(i, l).truncated(target);
                    }
                    assert!(
                        nabla.value().abs() < 1e-10,
                        "nabla_{k} g_{i}{j} = {}",
                        nabla.value()
                    );
                }
            }
        }
    }

    #[test]
    fn christoffels_match_finite_differences_on_a_curved_family_member() {
        let entry = crate::catalog::kerr_nut_desitter(1.0, 0.0, 2.0, 0.0);
        let pt = [1.0, 1.0];
        let h = 1e-6;
        let eval_g = |p: [f64; 2], order: usize| -> SurfaceMetric {
            let b = entry.def.eval_block(p, order).unwrap();
            SurfaceMetric::new(b.g, p).unwrap()
        };
        let g = eval_g(pt, 2);
        let gamma = christoffel(&g).unwrap().sym;
        // finite-difference Christoffels from metric values alone
        let gv = |p: [f64; 2]| -> [[f64; 2]; 2] {
            let b = entry.def.eval_block(p, 0).unwrap();
            [
                [b.g.a11.value(), b.g.a12.value()],
                [b.g.a12.value(), b.g.a22.value()],
            ]
        };
        let dg = |i: usize, j: usize, k: usize| -> f64 {
            let mut up = pt;
            let mut dn = pt;
            up[k] += h;
            dn[k] -= h;
            (gv(up)[i][j] - gv(dn)[i][j]) / (2.0 * h)
        };
        let m = gv(pt);
        let det = m[0][0] * m[1][1] - m[0][1] * m[0][1];
        let inv = [
            [m[1][1] / det, -m[0][1] / det],
            [-m[0][1] / det, m[0][0] / det],
        ];
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let mut fd = 0.0;
                    for l in 0..2 {
                        fd += 0.5 * inv[k][l] * (dg(l, i, j) + dg(l, j, i) - dg(i, j, l));
                    }
                    let exact = gamma[k][i][j].value();
                    assert!(
                        (exact - fd).abs() < 1e-6 * (1.0 + exact.abs()),
                        "Gamma^{k}_{i}{j}: jet {exact} vs fd {fd}"
                    );
                }
            }
        }
    }

    #[test]
    fn degenerate_metric_is_rejected() {
        let params = ParamBindings::new();
        let j = |src: &str| parse(src).unwrap().eval_jet([1.0, 1.0], &params, 2).unwrap();
        let res = SurfaceMetric::new(Form2::new(j("1"), j("1"), j("1")), [1.0, 1.0]);
        assert!(res.is_err());
    }
}
