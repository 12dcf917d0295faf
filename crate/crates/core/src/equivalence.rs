//! The local-isometry decision procedure: sample the invariants of a metric
//! over a chart made of two functionally independent basic invariants, store
//! the remaining invariants and the frame derivatives as a signature, and
//! compare another metric by locating the same chart values and comparing
//! everything else.
//!
//! Verdicts are local to the sampled chart region. Coordinates never enter
//! the comparison; samples are matched purely by chart values. Orientation
//! of the invariant frame is not fixed by the construction, so `Y`
//! derivatives are compared up to one global sign flip.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genericity::{genericity_report, GenericityConfig};
use crate::invariants::{
    basic_invariant_jets, evaluate_record, BasicInvariant, InvariantRecord, PointGeometry,
};
use crate::metric::{DomainBox, MetricDefinition};

#[derive(Debug, Clone, Copy)]
pub struct EquivalenceConfig {
    /// Sample grid for signature construction.
    pub grid: (usize, usize),
    /// Minimum number of valid samples a signature must contain.
    pub n_min: usize,
    /// Minimum sample separation in the chart plane, as a fraction of the
    /// chart diameter.
    pub dedupe_rel: f64,
    /// Local Jacobian score below which a sample is rejected.
    pub independence_threshold: f64,
    /// Relative tolerance for invariant comparison.
    pub tau_cmp: f64,
    /// Required fraction of signature samples locatable in the other metric.
    pub locatable_fraction: f64,
    /// Required fraction of locatable samples that match.
    pub match_fraction: f64,
    /// Worker threads for grid evaluation; results are order-stabilized.
    pub threads: usize,
}

impl Default for EquivalenceConfig {
    fn default() -> Self {
        EquivalenceConfig {
            grid: (24, 24),
            n_min: 200,
            dedupe_rel: 1e-4,
            independence_threshold: 1e-6,
            tau_cmp: 1e-5,
            locatable_fraction: 0.8,
            match_fraction: 0.99,
            threads: 1,
        }
    }
}

/// Maps `f` over `0..n` on up to `threads` scoped workers; output order is
/// independent of the thread count.
pub(crate) fn par_map<T, F>(n: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = threads.max(1).min(n.max(1));
    if threads == 1 {
        return (0..n).map(f).collect();
    }
    let chunk = n.div_ceil(threads);
    let mut slots: Vec<Option<T>> = (0..n).map(|_| None).collect();
    std::thread::scope(|scope| {
        let f = &f;
        let mut rest = slots.as_mut_slice();
        let mut start = 0;
        let mut handles = Vec::new();
        while !rest.is_empty() {
            let take = chunk.min(rest.len());
            let (head, tail) = rest.split_at_mut(take);
            let begin = start;
            handles.push(scope.spawn(move || {
                for (off, slot) in head.iter_mut().enumerate() {
                    *slot = Some(f(begin + off));
                }
            }));
            rest = tail;
            start += take;
        }
        for h in handles {
            h.join().expect("worker panicked");
        }
    });
    slots.into_iter().map(|s| s.expect("all slots filled")).collect()
}

/// One signature sample: chart values, the remaining two invariants, and the
/// frame derivatives of the chart invariants, plus the source point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SignatureSample {
    pub p: f64,
    pub q: f64,
    pub rest: [f64; 2],
    #[serde(rename = "Xp")]
    pub xp: f64,
    #[serde(rename = "Yp")]
    pub yp: f64,
    #[serde(rename = "Xq")]
    pub xq: f64,
    #[serde(rename = "Yq")]
    pub yq: f64,
    pub t1: f64,
    pub t2: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SignatureTolerances {
    pub tau_cmp: f64,
    pub independence_threshold: f64,
    pub dedupe_rel: f64,
}

/// The comparison artifact: a sampled table of invariants over the chart.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Signature {
    pub sigfmt: u32,
    pub chart: (BasicInvariant, BasicInvariant),
    pub rest_names: (BasicInvariant, BasicInvariant),
    pub metric_fingerprint: String,
    pub domain: DomainBox,
    pub tolerances: SignatureTolerances,
    pub samples: Vec<SignatureSample>,
}

impl Signature {
    pub fn to_json(&self) -> Result<String> {
        Ok(crate::jsonfmt::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Signature> {
        let sig: Signature =
            serde_json::from_str(text).map_err(|e| Error::SignatureFile(e.to_string()))?;
        if sig.sigfmt != 1 {
            return Err(Error::SignatureFile(format!(
                "unsupported signature format {}",
                sig.sigfmt
            )));
        }
        Ok(sig)
    }
}

fn rest_of(chart: (BasicInvariant, BasicInvariant)) -> (BasicInvariant, BasicInvariant) {
    let rest: Vec<BasicInvariant> = BasicInvariant::ALL
        .into_iter()
        .filter(|&b| b != chart.0 && b != chart.1)
        .collect();
    (rest[0], rest[1])
}

/// Chart values and their gradients at one point, from coefficient jets of
/// order 2 (enough for Newton steps and seeding).
fn chart_jets(
    def: &MetricDefinition,
    chart: (BasicInvariant, BasicInvariant),
    pt: [f64; 2],
) -> Result<(f64, f64, [f64; 2], [f64; 2])> {
    let geo = PointGeometry::new(def, pt, 2)?;
    let b = basic_invariant_jets(&geo.g, &geo.block);
    let pj = b.get(chart.0);
    let qj = b.get(chart.1);
    Ok((pj.value(), qj.value(), pj.gradient()?, qj.gradient()?))
}

fn jacobian_score(gp: [f64; 2], gq: [f64; 2]) -> f64 {
    let det = gp[0] * gq[1] - gp[1] * gq[0];
    let np = (gp[0] * gp[0] + gp[1] * gp[1]).sqrt();
    let nq = (gq[0] * gq[0] + gq[1] * gq[1]).sqrt();
    det.abs() / (np * nq + 1e-30)
}

/// Builds the signature of a metric over a domain box. Without an explicit
/// chart the best independent pair from the genericity battery is used.
pub fn build_signature(
    def: &MetricDefinition,
    domain: &DomainBox,
    chart: Option<(BasicInvariant, BasicInvariant)>,
    config: &EquivalenceConfig,
) -> Result<Signature> {
    let gcfg = GenericityConfig {
        independence_threshold: config.independence_threshold,
        ..GenericityConfig::default()
    };
    let report = genericity_report(def, domain, None, &gcfg);
    if !report.c_rho_nonzero || !report.det_g_ok || !report.det_h_ok {
        return Err(Error::NotGeneric(format!(
            "genericity fails on the domain: det_g_ok={} det_h_ok={} c_rho_nonzero={}",
            report.det_g_ok, report.det_h_ok, report.c_rho_nonzero
        )));
    }
    let chart = match chart {
        Some(c) => {
            if c.0 == c.1 {
                return Err(Error::NoIndependentPair);
            }
            let ok = report.pairs.iter().any(|p| {
                p.independent
                    && ((p.p, p.q) == c || (p.q, p.p) == c)
            });
            if !ok {
                return Err(Error::NoIndependentPair);
            }
            c
        }
        None => report.chosen_pair.ok_or(Error::NoIndependentPair)?,
    };
    let rest_names = rest_of(chart);

    let points = domain.grid(config.grid.0, config.grid.1);
    // the block-parameter branch is taken once per metric: a sign change of
    // det h across the domain means the box straddles a degeneracy
    let mut seen_sign = 0.0f64;
    for &pt in &points {
        if let Ok(geo) = PointGeometry::new(def, pt, 0) {
            let sign = geo.block.eps;
            if seen_sign == 0.0 {
                seen_sign = sign;
            } else if sign != seen_sign {
                return Err(Error::SignSplit);
            }
        }
    }
    let records: Vec<Option<SignatureSample>> =
        par_map(points.len(), config.threads, |i| {
            let pt = points[i];
            let rec = evaluate_record(def, pt).ok()?;
            let (_, _, gp, gq) = chart_jets(def, chart, pt).ok()?;
            if jacobian_score(gp, gq) <= config.independence_threshold {
                return None;
            }
            let so = rec.second_order();
            let (xp, yp) = so.along(chart.0);
            let (xq, yq) = so.along(chart.1);
            Some(SignatureSample {
                p: rec.basic(chart.0),
                q: rec.basic(chart.1),
                rest: [rec.basic(rest_names.0), rec.basic(rest_names.1)],
                xp,
                yp,
                xq,
                yq,
                t1: pt[0],
                t2: pt[1],
            })
        });

    let valid: Vec<SignatureSample> = records.into_iter().flatten().collect();
    if valid.len() < config.n_min {
        return Err(Error::DomainTooSmall { valid: valid.len(), needed: config.n_min });
    }

    // chart diameter for deduplication
    let (mut pmin, mut pmax, mut qmin, mut qmax) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for s in &valid {
        pmin = pmin.min(s.p);
        pmax = pmax.max(s.p);
        qmin = qmin.min(s.q);
        qmax = qmax.max(s.q);
    }
    let diam = ((pmax - pmin).powi(2) + (qmax - qmin).powi(2)).sqrt().max(1e-300);
    let min_sep = config.dedupe_rel * diam;
    let mut samples: Vec<SignatureSample> = Vec::with_capacity(valid.len());
    for s in valid {
        let close = samples
            .iter()
            .any(|t| ((t.p - s.p).powi(2) + (t.q - s.q).powi(2)).sqrt() < min_sep);
        if !close {
            samples.push(s);
        }
    }
    if samples.len() < config.n_min {
        return Err(Error::DomainTooSmall { valid: samples.len(), needed: config.n_min });
    }

    Ok(Signature {
        sigfmt: 1,
        chart,
        rest_names,
        metric_fingerprint: def.fingerprint(),
        domain: *domain,
        tolerances: SignatureTolerances {
            tau_cmp: config.tau_cmp,
            independence_threshold: config.independence_threshold,
            dedupe_rel: config.dedupe_rel,
        },
        samples,
    })
}

/// Newton inversion of the chart map: finds the surface point where the
/// chart invariants take the target values, staying inside the domain box
/// (with a small margin).
pub fn locate(
    def: &MetricDefinition,
    chart: (BasicInvariant, BasicInvariant),
    target: (f64, f64),
    seed: [f64; 2],
    domain: &DomainBox,
    residual_tol: f64,
) -> Result<[f64; 2]> {
    let scale = 1.0 + target.0.abs() + target.1.abs();
    let tol = residual_tol * scale;
    let mut t = seed;
    let mut residual_norm = f64::INFINITY;
    for _ in 0..25 {
        let (p, q, gp, gq) = chart_jets(def, chart, t)?;
        let r = [p - target.0, q - target.1];
        residual_norm = (r[0] * r[0] + r[1] * r[1]).sqrt();
        if residual_norm <= tol {
            return Ok(t);
        }
        let det = gp[0] * gq[1] - gp[1] * gq[0];
        if det.abs() < 1e-300 {
            return Err(Error::NoConvergence { target: [target.0, target.1] });
        }
        let step = [
            -(r[0] * gq[1] - gp[1] * r[1]) / det,
            -(gp[0] * r[1] - r[0] * gq[0]) / det,
        ];
        // backtracking on the residual norm
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..8 {
            let cand = [t[0] + lambda * step[0], t[1] + lambda * step[1]];
            if !domain.contains(cand, 0.1) {
                lambda *= 0.5;
                continue;
            }
            if let Ok((p2, q2, _, _)) = chart_jets(def, chart, cand) {
                let r2 = ((p2 - target.0).powi(2) + (q2 - target.1).powi(2)).sqrt();
                if r2 < residual_norm {
                    t = cand;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence { target: [target.0, target.1] });
        }
    }
    if residual_norm <= tol {
        Ok(t)
    } else if !domain.contains(t, 0.0) {
        Err(Error::LeftDomain { point: t })
    } else {
        Err(Error::NoConvergence { target: [target.0, target.1] })
    }
}

/// A confirmed discrepancy: the chart value, the divergent invariant and its
/// value in both metrics, with the source points for re-evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Witness {
    pub p: f64,
    pub q: f64,
    pub invariant: String,
    pub value_a: f64,
    pub value_b: f64,
    pub point_a: [f64; 2],
    pub point_b: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum Verdict {
    Equivalent {
        samples: usize,
        locatable: usize,
        matched: usize,
        /// Whether the match required the global orientation flip of `Y`.
        y_flipped: bool,
    },
    Inequivalent {
        witness: Witness,
    },
    Inconclusive {
        reason: String,
    },
}

impl Verdict {
    /// Stable machine interface: 0 equivalent, 1 inequivalent, 2 inconclusive.
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Equivalent { .. } => 0,
            Verdict::Inequivalent { .. } => 1,
            Verdict::Inconclusive { .. } => 2,
        }
    }
}

/// Invariant name with the two diverging values and the located point.
type Mismatch = (String, f64, f64, [f64; 2]);
/// A located sample either matched with the recorded Y orientation, or
/// failed with its worst offender.
type SampleOutcome = (std::result::Result<f64, Mismatch>, f64);

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Comparison of one signature sample against a record of the other metric,
/// for a fixed Y orientation. Returns the worst offender when it fails.
fn sample_matches(
    sample: &SignatureSample,
    rec: &InvariantRecord,
    chart: (BasicInvariant, BasicInvariant),
    rest_names: (BasicInvariant, BasicInvariant),
    y_sign: f64,
    tau: f64,
) -> std::result::Result<(), (String, f64, f64)> {
    let so = rec.second_order();
    let (xp_b, yp_b) = so.along(chart.0);
    let (xq_b, yq_b) = so.along(chart.1);
    let checks: [(&str, f64, f64); 6] = [
        (rest_names.0.name(), sample.rest[0], rec.basic(rest_names.0)),
        (rest_names.1.name(), sample.rest[1], rec.basic(rest_names.1)),
        ("Xp", sample.xp, xp_b),
        ("Xq", sample.xq, xq_b),
        ("Yp", sample.yp, y_sign * yp_b),
        ("Yq", sample.yq, y_sign * yq_b),
    ];
    let mut worst: Option<(String, f64, f64, f64)> = None;
    for (name, a, b) in checks {
        if !rel_close(a, b, tau) {
            let dev = (a - b).abs() / (1.0 + a.abs().max(b.abs()));
            if worst.as_ref().is_none_or(|w| dev > w.3) {
                worst = Some((name.to_owned(), a, b, dev));
            }
        }
    }
    match worst {
        None => Ok(()),
        Some((name, a, b, _)) => Err((name, a, b)),
    }
}

/// Distinct chart preimages of the target in metric B, located from the
/// nearest pre-scan seeds.
fn locate_preimages(
    def_b: &MetricDefinition,
    chart: (BasicInvariant, BasicInvariant),
    target: (f64, f64),
    prescan: &[([f64; 2], f64, f64)],
    domain_b: &DomainBox,
    chart_scale: (f64, f64),
) -> Vec<[f64; 2]> {
    let mut seeds: Vec<([f64; 2], f64)> = prescan
        .iter()
        .map(|&(pt, p, q)| {
            let dp = (p - target.0) / chart_scale.0;
            let dq = (q - target.1) / chart_scale.1;
            (pt, dp * dp + dq * dq)
        })
        .collect();
    seeds.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut preimages: Vec<[f64; 2]> = Vec::new();
    let sep1 = 1e-6 * (domain_b.t1[1] - domain_b.t1[0]);
    let sep2 = 1e-6 * (domain_b.t2[1] - domain_b.t2[0]);
    for (seed, _) in seeds.into_iter().take(6) {
        if preimages.len() >= 3 {
            break;
        }
        if let Ok(found) = locate(def_b, chart, target, seed, domain_b, 1e-10) {
            let dup = preimages
                .iter()
                .any(|p| (p[0] - found[0]).abs() < sep1 && (p[1] - found[1]).abs() < sep2);
            if !dup {
                preimages.push(found);
            }
        }
    }
    preimages
}

/// Decides local equivalence of the metric behind `sig` and `def_b` on
/// `domain_b`. Samples are matched by chart values only; a single global
/// orientation flip of `Y` is allowed; the verdict is local to the sampled
/// region.
pub fn compare(
    sig: &Signature,
    def_b: &MetricDefinition,
    domain_b: &DomainBox,
    config: &EquivalenceConfig,
) -> Result<Verdict> {
    let gcfg = GenericityConfig {
        independence_threshold: config.independence_threshold,
        ..GenericityConfig::default()
    };
    let report = genericity_report(def_b, domain_b, None, &gcfg);
    if !report.generic() {
        return Ok(Verdict::Inconclusive {
            reason: format!(
                "genericity fails on the comparison domain: det_g_ok={} det_h_ok={} \
                 c_rho_nonzero={} independence_ok={} killing_dim={}",
                report.det_g_ok,
                report.det_h_ok,
                report.c_rho_nonzero,
                report.independence_ok,
                report.killing_dim
            ),
        });
    }

    // coarse pre-scan of B in the chart of A
    let prescan_pts = domain_b.grid(16, 16);
    let prescan: Vec<([f64; 2], f64, f64)> = par_map(prescan_pts.len(), config.threads, |i| {
        let pt = prescan_pts[i];
        chart_jets(def_b, sig.chart, pt).ok().map(|(p, q, _, _)| (pt, p, q))
    })
    .into_iter()
    .flatten()
    .collect();
    if prescan.is_empty() {
        return Ok(Verdict::Inconclusive {
            reason: "the comparison metric cannot be evaluated on its domain".into(),
        });
    }
    let chart_scale = {
        let (mut sp, mut sq) = (0.0f64, 0.0f64);
        for &(_, p, q) in &prescan {
            sp = sp.max(p.abs());
            sq = sq.max(q.abs());
        }
        (1.0 + sp, 1.0 + sq)
    };

    let tau = config.tau_cmp;
    let outcomes: Vec<Option<SampleOutcome>> =
        par_map(sig.samples.len(), config.threads, |i| {
            let sample = &sig.samples[i];
            let target = (sample.p, sample.q);
            let preimages =
                locate_preimages(def_b, sig.chart, target, &prescan, domain_b, chart_scale);
            if preimages.is_empty() {
                return None; // unlocatable
            }
            // try to match any preimage, with either orientation
            let mut best_fail: Option<Mismatch> = None;
            for &pt in &preimages {
                let rec = match evaluate_record(def_b, pt) {
                    Ok(r) => r,
                    Err(_) => continue,
                };
                for y_sign in [1.0, -1.0] {
                    match sample_matches(sample, &rec, sig.chart, sig.rest_names, y_sign, tau)
                    {
                        Ok(()) => return Some((Ok(y_sign), y_sign)),
                        Err((name, a, b)) => {
                            if best_fail.is_none() {
                                best_fail = Some((name, a, b, pt));
                            }
                        }
                    }
                }
            }
            let fail = best_fail.expect("at least one preimage evaluated");
            Some((Err(fail), 0.0))
        });

    let samples = sig.samples.len();
    let mut locatable = 0usize;
    let mut matched = 0usize;
    let mut flip_votes = (0usize, 0usize);
    let mut first_mismatch: Option<(usize, Mismatch)> = None;
    for (i, o) in outcomes.iter().enumerate() {
        match o {
            None => {}
            Some((Ok(y_sign), _)) => {
                locatable += 1;
                matched += 1;
                if *y_sign > 0.0 {
                    flip_votes.0 += 1;
                } else {
                    flip_votes.1 += 1;
                }
            }
            Some((Err(fail), _)) => {
                locatable += 1;
                if first_mismatch.is_none() {
                    first_mismatch = Some((i, fail.clone()));
                }
            }
        }
    }

    // A mismatch is confirmed by re-locating at tighter tolerance and
    // re-comparing before it becomes a verdict.
    if let Some((idx, (name, a, b, pt_b))) = first_mismatch {
        let sample = &sig.samples[idx];
        let confirmed = match locate(
            def_b,
            sig.chart,
            (sample.p, sample.q),
            pt_b,
            domain_b,
            1e-12,
        ) {
            Ok(refined) => match evaluate_record(def_b, refined) {
                Ok(rec) => [1.0, -1.0].iter().all(|&s| {
                    sample_matches(sample, &rec, sig.chart, sig.rest_names, s, tau).is_err()
                }),
                Err(_) => true,
            },
            Err(_) => true,
        };
        if confirmed {
            return Ok(Verdict::Inequivalent {
                witness: Witness {
                    p: sample.p,
                    q: sample.q,
                    invariant: name,
                    value_a: a,
                    value_b: b,
                    point_a: [sample.t1, sample.t2],
                    point_b: pt_b,
                },
            });
        }
    }

    // orientation must be globally consistent: samples matching only the
    // minority orientation count as mismatches
    let y_flipped = flip_votes.1 > flip_votes.0;

    let locatable_frac = locatable as f64 / samples.max(1) as f64;
    if locatable_frac < config.locatable_fraction {
        return Ok(Verdict::Inconclusive {
            reason: format!(
                "only {locatable} of {samples} signature samples are realized in the \
                 comparison domain (need {:.0}%)",
                config.locatable_fraction * 100.0
            ),
        });
    }
    let match_frac = matched as f64 / locatable.max(1) as f64;
    if match_frac >= config.match_fraction {
        Ok(Verdict::Equivalent { samples, locatable, matched, y_flipped })
    } else {
        Ok(Verdict::Inconclusive {
            reason: format!(
                "{matched} of {locatable} locatable samples match; below the required \
                 {:.0}% without a confirmed counterexample",
                config.match_fraction * 100.0
            ),
        })
    }
}
