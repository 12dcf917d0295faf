//! Brute-force curvature of the 4-metric `g_ij dt^i dt^j + h_kl du^k du^l`
//! from first principles: Christoffel symbols, Riemann and Ricci tensors,
//! scalar curvature and the listed Weyl components, in adapted coordinates
//! ordered `(t1, t2, u1, u2)`.
//!
//! This path shares the jet arithmetic but none of the invariant formulas,
//! so it serves as the independent check for every first-order expression of
//! the curvature derived elsewhere.

use crate::error::{Error, Result};
use crate::jets::Jet;
use crate::metric::MetricDefinition;
use crate::surface::is_negligible;

/// Curvature data of the block metric at one point. Index order is
/// `(t1, t2, u1, u2)`; the Riemann tensor is fully lowered.
#[derive(Debug, Clone)]
pub struct FullCurvature {
    pub metric: [[f64; 4]; 4],
    pub ricci: [[f64; 4]; 4],
    pub scalar: f64,
    pub riemann: [[[[f64; 4]; 4]; 4]; 4],
    pub weyl: [[[[f64; 4]; 4]; 4]; 4],
}

impl FullCurvature {
    /// `C_1234` in one-based adapted labels.
    pub fn weyl_1234(&self) -> f64 {
        self.weyl[0][1][2][3]
    }

    pub fn weyl_1212(&self) -> f64 {
        self.weyl[0][1][0][1]
    }

    pub fn weyl_3434(&self) -> f64 {
        self.weyl[2][3][2][3]
    }

    /// Max-norm of `Ric - (R/2) g + Lambda g` over all components.
    pub fn einstein_residual(&self, lambda: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                let e = self.ricci[a][b] - 0.5 * self.scalar * self.metric[a][b]
                    + lambda * self.metric[a][b];
                worst = worst.max(e.abs());
            }
        }
        worst
    }
}

/// Computes the full curvature from coefficient jets of order 2. The
/// coefficients depend on the surface coordinates only, so derivatives along
/// the Killing directions vanish identically.
pub fn full_curvature(def: &MetricDefinition, point: [f64; 2]) -> Result<FullCurvature> {
    let block = def.eval_block(point, 2)?;
    let zero2 = Jet::constant(0.0, 2);
    let mut g4 = [[zero2; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            g4[i][j] = block.g.entry(i, j);
            g4[2 + i][2 + j] = block.h.entry(i, j);
        }
    }

    let det_g = block.g.det();
    let det_h = block.h.det();
    if is_negligible(det_g.value(), block.g.max_abs_coeff())
        || is_negligible(det_h.value(), block.h.max_abs_coeff())
    {
        return Err(Error::Degenerate { which: "4-metric", point });
    }
    let mut inv4 = [[zero2; 4]; 4];
    let ig = det_g.recip().expect("nondegenerate");
    inv4[0][0] = block.g.a22 * ig;
    inv4[0][1] = -(block.g.a12 * ig);
    inv4[1][0] = inv4[0][1];
    inv4[1][1] = block.g.a11 * ig;
    let ih = det_h.recip().expect("nondegenerate");
    inv4[2][2] = block.h.a22 * ih;
    inv4[2][3] = -(block.h.a12 * ih);
    inv4[3][2] = inv4[2][3];
    inv4[3][3] = block.h.a11 * ih;

    // d_c of an entry: nonzero only along the surface directions
    let d = |e: &Jet, c: usize| -> Jet {
        match c {
            0 => e.d1(),
            1 => e.d2(),
            _ => Jet::constant(0.0, e.order() - 1),
        }
    };

    // Christoffel symbols as order-1 jets
    let zero1 = Jet::constant(0.0, 1);
    let mut gamma = [[[zero1; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for c in b..4 {
                let mut acc = zero1;
                for e in 0..4 {
                    let sym = d(&g4[e][c], b) + d(&g4[e][b], c) - d(&g4[b][c], e);
                    acc = acc + inv4[a][e].truncated(1) * sym * 0.5;
                }
                gamma[a][b][c] = acc;
                gamma[a][c][b] = acc;
            }
        }
    }

    // R^a_bcd = d_c Gamma^a_db - d_d Gamma^a_cb + Gamma^a_ce Gamma^e_db
    //           - Gamma^a_de Gamma^e_cb
    let zero0 = Jet::constant(0.0, 0);
    let mut riem_up = [[[[zero0; 4]; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for dd in 0..4 {
                    let mut acc = d(&gamma[a][dd][b], c) - d(&gamma[a][c][b], dd);
                    for e in 0..4 {
                        acc = acc
                            + gamma[a][c][e].truncated(0) * gamma[e][dd][b].truncated(0)
                            - gamma[a][dd][e].truncated(0) * gamma[e][c][b].truncated(0);
                    }
                    riem_up[a][b][c][dd] = acc;
                }
            }
        }
    }

    let gv = |i: usize, j: usize| g4[i][j].value();
    let mut riemann = [[[[0.0; 4]; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for dd in 0..4 {
                    let mut acc = 0.0;
                    for e in 0..4 {
                        acc += gv(a, e) * riem_up[e][b][c][dd].value();
                    }
                    riemann[a][b][c][dd] = acc;
                }
            }
        }
    }

    let mut ricci = [[0.0; 4]; 4];
    for b in 0..4 {
        for dd in 0..4 {
            let mut acc = 0.0;
            for a in 0..4 {
                acc += riem_up[a][b][a][dd].value();
            }
            ricci[b][dd] = acc;
        }
    }
    let mut scalar = 0.0;
    for b in 0..4 {
        for dd in 0..4 {
            scalar += inv4[b][dd].value() * ricci[b][dd];
        }
    }

    // Weyl tensor in four dimensions:
    // C_abcd = R_abcd - (g_a[c R_d]b - g_b[c R_d]a) + (R/3) g_a[c g_d]b
    let mut weyl = [[[[0.0; 4]; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for dd in 0..4 {
                    let ga_c = gv(a, c);
                    let ga_d = gv(a, dd);
                    let gb_c = gv(b, c);
                    let gb_d = gv(b, dd);
                    weyl[a][b][c][dd] = riemann[a][b][c][dd]
                        - 0.5
                            * (ga_c * ricci[dd][b] - ga_d * ricci[c][b] - gb_c * ricci[dd][a]
                                + gb_d * ricci[c][a])
                        + scalar / 6.0 * (ga_c * gb_d - ga_d * gb_c);
                }
            }
        }
    }

    let mut metric = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            metric[a][b] = gv(a, b);
        }
    }

    Ok(FullCurvature { metric, ricci, scalar, riemann, weyl })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn max_abs4(t: &[[[[f64; 4]; 4]; 4]; 4]) -> f64 {
        let mut m: f64 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        m = m.max(t[a][b][c][d].abs());
                    }
                }
            }
        }
        m
    }

    #[test]
    fn flat_fixture_has_zero_curvature() {
        let entry = catalog::minkowski_cyl();
        for pt in entry.def.domain.grid(3, 3) {
            let c = full_curvature(&entry.def, pt).unwrap();
            assert!(max_abs4(&c.riemann) < 1e-12, "Riemann at {pt:?}");
            for a in 0..4 {
                for b in 0..4 {
                    assert!(c.ricci[a][b].abs() < 1e-12);
                }
            }
            assert!(c.scalar.abs() < 1e-12);
            assert!(max_abs4(&c.weyl) < 1e-12);
        }
    }

    #[test]
    fn riemann_symmetries() {
        for entry in [
            catalog::kerr_nut_desitter(1.0, 0.0, 2.0, 0.0),
            catalog::kerr_nut_desitter(1.3, 0.4, 2.0, 0.1),
            catalog::degenerate_hc(),
        ] {
            for pt in entry.def.domain.grid(3, 3) {
                let c = full_curvature(&entry.def, pt).unwrap();
                let scale = max_abs4(&c.riemann).max(1.0);
                let r = &c.riemann;
                for a in 0..4 {
                    for b in 0..4 {
                        for cc in 0..4 {
                            for d in 0..4 {
                                // antisymmetry in each pair
                                assert!((r[a][b][cc][d] + r[b][a][cc][d]).abs() <= 1e-10 * scale);
                                assert!((r[a][b][cc][d] + r[a][b][d][cc]).abs() <= 1e-10 * scale);
                                // pair exchange
                                assert!((r[a][b][cc][d] - r[cc][d][a][b]).abs() <= 1e-10 * scale);
                                // first Bianchi identity
                                let bianchi =
                                    r[a][b][cc][d] + r[a][cc][d][b] + r[a][d][b][cc];
                                assert!(bianchi.abs() <= 1e-10 * scale, "{}", entry.def.name);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn mixed_ricci_blocks_vanish() {
        for entry in catalog::all() {
            for pt in entry.def.domain.grid(3, 3) {
                let c = full_curvature(&entry.def, pt).unwrap();
                let scale = (0..4)
                    .flat_map(|a| (0..4).map(move |b| (a, b)))
                    .fold(1.0f64, |m, (a, b)| m.max(c.ricci[a][b].abs()));
                for i in 0..2 {
                    for j in 2..4 {
                        assert!(
                            c.ricci[i][j].abs() <= 1e-10 * scale,
                            "{} Ric[{i}][{j}] at {pt:?}",
                            entry.def.name
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn kerr_nut_desitter_is_einstein() {
        for (m, l, lambda) in [(1.0, 0.0, 0.0), (1.0, 0.4, 0.0), (1.3, 0.4, 0.1)] {
            let entry = catalog::kerr_nut_desitter(m, l, 2.0, lambda);
            for pt in entry.def.domain.grid(4, 4) {
                let c = full_curvature(&entry.def, pt).unwrap();
                // Einstein space: Ric = Lambda g and R = 4 Lambda
                let mut worst: f64 = 0.0;
                for a in 0..4 {
                    for b in 0..4 {
                        worst = worst.max((c.ricci[a][b] - lambda * c.metric[a][b]).abs());
                    }
                }
                assert!(worst < 1e-7, "({m},{l},{lambda}) at {pt:?}: {worst}");
                assert!((c.scalar - 4.0 * lambda).abs() < 1e-7);
                assert!(c.einstein_residual(lambda) < 1e-7);
            }
        }
    }

    #[test]
    fn weyl_is_trace_free() {
        let entry = catalog::kerr_nut_desitter(1.3, 0.4, 2.0, 0.1);
        let pt = [1.1, 0.8];
        let c = full_curvature(&entry.def, pt).unwrap();
        let block = entry.def.eval_block(pt, 2).unwrap();
        let mut inv = [[0.0f64; 4]; 4];
        let dg = block.g.det().value();
        let dh = block.h.det().value();
        inv[0][0] = block.g.a22.value() / dg;
        inv[0][1] = -block.g.a12.value() / dg;
        inv[1][0] = inv[0][1];
        inv[1][1] = block.g.a11.value() / dg;
        inv[2][2] = block.h.a22.value() / dh;
        inv[2][3] = -block.h.a12.value() / dh;
        inv[3][2] = inv[2][3];
        inv[3][3] = block.h.a11.value() / dh;
        let scale = max_abs4(&c.weyl).max(1.0);
        for b in 0..4 {
            for d in 0..4 {
                let mut tr = 0.0;
                for a in 0..4 {
                    for cc in 0..4 {
                        tr += inv[a][cc] * c.weyl[a][b][cc][d];
                    }
                }
                assert!(tr.abs() <= 1e-9 * scale, "trace at [{b}][{d}] = {tr}");
            }
        }
    }
}
