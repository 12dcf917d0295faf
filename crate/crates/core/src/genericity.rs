//! Decides whether a metric satisfies the genericity assumptions on a sample
//! domain and reports which fail: nondegeneracy of both blocks, a nonzero
//! `C_rho`, at least two functionally independent basic invariants, the
//! dimension of the Killing algebra inside the block span, and `I_4 != 0`
//! in the vacuum case.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::invariants::{basic_invariant_jets, BasicInvariant, KillingBlock, PointGeometry};
use crate::metric::{DomainBox, MetricDefinition};
use crate::surface::is_negligible;

#[derive(Debug, Clone, Copy)]
pub struct GenericityConfig {
    /// Samples per axis of the domain grid.
    pub grid: (usize, usize),
    /// A pair counts as independent where its Jacobian score exceeds this.
    pub independence_threshold: f64,
    /// Fraction of samples that must pass for a domain-level verdict.
    pub pass_fraction: f64,
    /// Scaled threshold under which all six minors count as zero.
    pub killing_dim_threshold: f64,
}

impl Default for GenericityConfig {
    fn default() -> Self {
        GenericityConfig {
            grid: (12, 12),
            independence_threshold: 1e-6,
            pass_fraction: 0.9,
            killing_dim_threshold: 1e-9,
        }
    }
}

/// Independence score of one invariant pair over the sample domain.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PairScore {
    pub p: BasicInvariant,
    pub q: BasicInvariant,
    /// Median over samples of `|det J| / (|grad p| |grad q| + eta)`.
    pub median_score: f64,
    /// Fraction of samples whose score exceeds the threshold.
    pub pass_fraction: f64,
    pub independent: bool,
}

/// Normalized Jacobian score of a pair of scalars from their gradients.
fn jacobian_score(gp: [f64; 2], gq: [f64; 2]) -> f64 {
    let det = gp[0] * gq[1] - gp[1] * gq[0];
    let np = (gp[0] * gp[0] + gp[1] * gp[1]).sqrt();
    let nq = (gq[0] * gq[0] + gq[1] * gq[1]).sqrt();
    det.abs() / (np * nq + 1e-30)
}

/// Ranks all six pairs of basic invariants by functional independence over
/// the domain, most independent first.
pub fn functional_independence(
    def: &MetricDefinition,
    domain: &DomainBox,
    config: &GenericityConfig,
) -> Result<Vec<PairScore>> {
    let points = domain.grid(config.grid.0, config.grid.1);
    let mut grads: Vec<[[f64; 2]; 4]> = Vec::with_capacity(points.len());
    for pt in &points {
        let geo = PointGeometry::new(def, *pt, 2)?;
        let b = basic_invariant_jets(&geo.g, &geo.block);
        grads.push([
            b.c_rho.gradient()?,
            b.c_chi.gradient()?,
            b.q_chi.gradient()?,
            b.q_gamma.gradient()?,
        ]);
    }
    let mut out = Vec::with_capacity(6);
    for i in 0..4 {
        for j in (i + 1)..4 {
            let mut scores: Vec<f64> = grads
                .iter()
                .map(|g| jacobian_score(g[i], g[j]))
                .collect();
            scores.sort_by(|a, b| a.total_cmp(b));
            let median = scores[scores.len() / 2];
            let passing = scores
                .iter()
                .filter(|&&s| s > config.independence_threshold)
                .count();
            let pass_fraction = passing as f64 / scores.len() as f64;
            out.push(PairScore {
                p: BasicInvariant::ALL[i],
                q: BasicInvariant::ALL[j],
                median_score: median,
                pass_fraction,
                independent: median > config.independence_threshold
                    && pass_fraction >= config.pass_fraction,
            });
        }
    }
    out.sort_by(|a, b| b.median_score.total_cmp(&a.median_score));
    Ok(out)
}

/// The six minors whose simultaneous vanishing characterizes a block with
/// proportional coefficients (and hence a third Killing vector in the span).
pub fn killing_minors(block: &KillingBlock) -> [f64; 6] {
    let h = |k: usize, l: usize| block.form.entry(k, l).value();
    let d = |k: usize, l: usize, i: usize| {
        let e = block.form.entry(k, l);
        if i == 0 {
            e.d1().value()
        } else {
            e.d2().value()
        }
    };
    let x = block.x.value();
    [
        8.0 * (h(0, 0) * d(0, 1, 0) - h(0, 1) * d(0, 0, 0)) * x,
        4.0 * (h(0, 0) * d(1, 1, 0) - h(1, 1) * d(0, 0, 0)) * x,
        8.0 * (h(0, 1) * d(1, 1, 0) - h(1, 1) * d(0, 1, 0)) * x,
        8.0 * (h(0, 0) * d(0, 1, 1) - h(0, 1) * d(0, 0, 1)) * x,
        4.0 * (h(0, 0) * d(1, 1, 1) - h(1, 1) * d(0, 0, 1)) * x,
        8.0 * (h(0, 1) * d(1, 1, 1) - h(1, 1) * d(0, 1, 1)) * x,
    ]
}

/// Dimension of the Killing algebra spanning the block directions: 3 exactly
/// when the coefficients are constant multiples of one matrix, else 2.
pub fn killing_dimension(
    def: &MetricDefinition,
    domain: &DomainBox,
    config: &GenericityConfig,
) -> Result<u8> {
    for pt in domain.grid(config.grid.0, config.grid.1) {
        let geo = PointGeometry::new(def, pt, 1)?;
        let block = &geo.block;
        let minors = killing_minors(block);
        let d_max = minors.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let h_max = block.form.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let dh_max = {
            let mut m = 0.0f64;
            for k in 0..2 {
                for l in k..2 {
                    m = m.max(block.form.entry(k, l).d1().value().abs());
                    m = m.max(block.form.entry(k, l).d2().value().abs());
                }
            }
            m
        };
        let scale = block.x.value().abs() * dh_max * h_max;
        if scale == 0.0 {
            // no derivatives at all: the minors vanish identically here
            if d_max != 0.0 {
                return Ok(2);
            }
        } else if d_max > config.killing_dim_threshold * scale {
            return Ok(2);
        }
    }
    Ok(3)
}

/// Outcome of the genericity battery on a sample domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenericityReport {
    pub det_g_ok: bool,
    pub det_h_ok: bool,
    pub c_rho_nonzero: bool,
    pub independence_ok: bool,
    pub killing_dim: u8,
    /// Present when the metric is checked as a vacuum solution.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub i4_nonzero: Option<bool>,
    /// The best independent chart, when one exists.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chosen_pair: Option<(BasicInvariant, BasicInvariant)>,
    pub pairs: Vec<PairScore>,
    pub samples: usize,
    pub diagnostics: Vec<String>,
}

impl GenericityReport {
    /// True when the assumptions needed by the equivalence procedure hold.
    pub fn generic(&self) -> bool {
        self.det_g_ok && self.det_h_ok && self.c_rho_nonzero && self.independence_ok
    }
}

/// Runs every genericity check over the domain. `vacuum` carries the
/// cosmological constant when the vacuum-only `I_4` condition should be
/// reported as well. Failures become report entries, not errors.
pub fn genericity_report(
    def: &MetricDefinition,
    domain: &DomainBox,
    vacuum: Option<f64>,
    config: &GenericityConfig,
) -> GenericityReport {
    let points = domain.grid(config.grid.0, config.grid.1);
    let samples = points.len();
    let mut diagnostics = Vec::new();

    let mut degenerate_g = 0usize;
    let mut degenerate_h = 0usize;
    let mut c_rho_zero = 0usize;
    let mut i4_zero = 0usize;
    let mut eval_failures = 0usize;
    let mut c_gamma_max: f64 = 0.0;
    let mut c_chi_4crho_max: f64 = 0.0;

    for pt in &points {
        let geo = match PointGeometry::new(def, *pt, 2) {
            Ok(g) => g,
            Err(crate::error::Error::Degenerate { which, .. }) => {
                if which.contains("surface") {
                    degenerate_g += 1;
                } else {
                    degenerate_h += 1;
                }
                continue;
            }
            Err(e) => {
                eval_failures += 1;
                if diagnostics.len() < 8 {
                    diagnostics.push(format!("evaluation failed at {pt:?}: {e}"));
                }
                continue;
            }
        };
        let b = basic_invariant_jets(&geo.g, &geo.block);
        let scale = geo.block.form.max_abs_coeff().max(geo.g.form.max_abs_coeff());
        if is_negligible(b.c_rho.value(), scale) {
            c_rho_zero += 1;
        }
        let i4 = 0.25 * b.c_gamma.value() * b.c_gamma.value() - b.q_gamma.value();
        if is_negligible(i4, scale) {
            i4_zero += 1;
        }
        c_gamma_max = c_gamma_max.max(b.c_gamma.value().abs());
        c_chi_4crho_max =
            c_chi_4crho_max.max((b.c_chi.value() - 4.0 * b.c_rho.value()).abs());
    }

    let usable = samples - degenerate_g.max(degenerate_h) - eval_failures;
    let frac = |bad: usize| -> f64 {
        if usable == 0 {
            0.0
        } else {
            (usable - bad.min(usable)) as f64 / usable as f64
        }
    };

    let det_g_ok = degenerate_g == 0 && eval_failures == 0 && usable > 0;
    let det_h_ok = degenerate_h == 0 && eval_failures == 0 && usable > 0;
    let c_rho_nonzero = frac(c_rho_zero) >= config.pass_fraction;
    if !c_rho_nonzero {
        diagnostics.push(format!(
            "C_rho vanishes at {c_rho_zero} of {usable} samples"
        ));
    }

    let killing_dim = killing_dimension(def, domain, config).unwrap_or(2);
    if killing_dim == 3 {
        // proportional coefficients: log the degenerate-family identities
        diagnostics.push(format!(
            "block coefficients are proportional: |C_gamma| <= {c_gamma_max:.3e} \
             (C_chi = C_rho/4 holds), |C_chi - 4 C_rho| up to {c_chi_4crho_max:.3e}"
        ));
    }

    let pairs = functional_independence(def, domain, config).unwrap_or_default();
    let mut independence_ok = pairs.iter().any(|p| p.independent);
    if killing_dim == 3 {
        independence_ok = false;
    }
    let chosen_pair = if independence_ok {
        pairs
            .iter()
            .find(|p| p.independent)
            .map(|p| (p.p, p.q))
    } else {
        None
    };

    let i4_nonzero = vacuum.map(|_| frac(i4_zero) >= config.pass_fraction);

    GenericityReport {
        det_g_ok,
        det_h_ok,
        c_rho_nonzero,
        independence_ok,
        killing_dim,
        i4_nonzero,
        chosen_pair,
        pairs,
        samples,
        diagnostics,
    }
}
