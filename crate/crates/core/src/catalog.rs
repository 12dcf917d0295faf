//! Built-in metric definitions with known properties; used as test fixtures
//! and exposed as CLI presets.

use crate::expr::{parse, ParamBindings};
use crate::metric::{DomainBox, MetricDefinition};

/// Facts a catalog entry is expected to satisfy; the test suite executes
/// these as assertions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnownFacts {
    /// Solves the Einstein vacuum equations with the stored cosmological
    /// constant.
    pub vacuum: bool,
    pub lambda: f64,
    /// Block signature `det g * det h < 0`.
    pub lorentzian: bool,
    /// All 4D curvature vanishes.
    pub flat: bool,
    /// Dimension of the Killing algebra inside the span of the two
    /// generators: 2, or 3 when the block coefficients are proportional.
    pub killing_dim: u8,
    /// Whether two functionally independent basic invariants exist on the
    /// default domain.
    pub has_independent_pair: bool,
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub def: MetricDefinition,
    pub facts: KnownFacts,
}

/// The Kerr-NUT-(anti)de Sitter family. `m` is the mass, `l` the NUT
/// parameter, `a` the angular-momentum-like parameter and `lambda` the
/// cosmological constant. The default domain box keeps both polynomial
/// factors bounded away from zero for the preset parameter choices.
pub fn kerr_nut_desitter(m: f64, l: f64, a: f64, lambda: f64) -> CatalogEntry {
    kerr_nut_desitter_named(m, l, a, lambda, "kerr-nut-desitter")
}

fn kerr_nut_desitter_named(m: f64, l: f64, a: f64, lambda: f64, name: &str) -> CatalogEntry {
    let p = "((A^2 - t1^2)*(1 + Lambda/3*t1^2) + 2*L*t1)";
    let q = "((A^2 + t2^2)*(1 - Lambda/3*t2^2) - 2*M*t2)";
    let w = "(t1^2 + t2^2)";
    let mut params = ParamBindings::new();
    params.insert("M".into(), m);
    params.insert("L".into(), l);
    params.insert("A".into(), a);
    params.insert("Lambda".into(), lambda);
    let def = MetricDefinition {
        name: name.to_owned(),
        coords: ["t1".into(), "t2".into()],
        params,
        g11: parse(&format!("{w}/{p}")).unwrap(),
        g12: parse("0").unwrap(),
        g22: parse(&format!("{w}/{q}")).unwrap(),
        h11: parse(&format!("({p} - {q})/{w}")).unwrap(),
        h12: parse(&format!("({p}*t2^2 + {q}*t1^2)/{w}")).unwrap(),
        h22: parse(&format!("({p}*t2^4 - {q}*t1^4)/{w}")).unwrap(),
        domain: DomainBox::new([0.6, 1.4], [0.6, 1.4]),
    };
    CatalogEntry {
        def,
        facts: KnownFacts {
            vacuum: true,
            lambda,
            lorentzian: true,
            flat: false,
            killing_dim: 2,
            has_independent_pair: true,
        },
    }
}

/// Flat spacetime written with a rotational Killing pair; a degenerate
/// fixture on which every invariant depends on `t1` alone.
pub fn minkowski_cyl() -> CatalogEntry {
    let def = MetricDefinition {
        name: "minkowski-cyl".to_owned(),
        coords: ["t1".into(), "t2".into()],
        params: ParamBindings::new(),
        g11: parse("1").unwrap(),
        g12: parse("0").unwrap(),
        g22: parse("1").unwrap(),
        h11: parse("-1").unwrap(),
        h12: parse("0").unwrap(),
        h22: parse("t1^2").unwrap(),
        domain: DomainBox::new([1.0, 3.0], [4.0, 6.0]),
    };
    CatalogEntry {
        def,
        facts: KnownFacts {
            vacuum: true,
            lambda: 0.0,
            lorentzian: true,
            flat: true,
            killing_dim: 2,
            has_independent_pair: false,
        },
    }
}

/// Killing block proportional to a constant matrix; the family with a
/// three-dimensional Killing algebra inside the block span.
pub fn degenerate_hc() -> CatalogEntry {
    let def = MetricDefinition {
        name: "degenerate-hc".to_owned(),
        coords: ["t1".into(), "t2".into()],
        params: ParamBindings::new(),
        g11: parse("1").unwrap(),
        g12: parse("0").unwrap(),
        g22: parse("1").unwrap(),
        h11: parse("exp(t1)").unwrap(),
        h12: parse("0").unwrap(),
        h22: parse("2*exp(t1)").unwrap(),
        domain: DomainBox::new([0.0, 1.0], [0.0, 1.0]),
    };
    CatalogEntry {
        def,
        facts: KnownFacts {
            vacuum: false,
            lambda: 0.0,
            lorentzian: false,
            flat: false,
            killing_dim: 3,
            has_independent_pair: false,
        },
    }
}

/// All registered presets, stable order.
pub fn all() -> Vec<CatalogEntry> {
    vec![
        kerr_nut_desitter_named(1.0, 0.0, 2.0, 0.0, "kerr-nut"),
        kerr_nut_desitter_named(1.0, 0.4, 2.0, 0.0, "kerr-nut-l"),
        kerr_nut_desitter_named(1.3, 0.4, 2.0, 0.1, "kerr-nut-ds"),
        minkowski_cyl(),
        degenerate_hc(),
    ]
}

pub fn find(name: &str) -> Option<CatalogEntry> {
    all().into_iter().find(|e| e.def.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_entry_parses_and_evaluates() {
        for entry in all() {
            let c = entry.def.domain.center();
            let block = entry.def.eval_block(c, 2).unwrap();
            let det_g = block.g.det().value();
            let det_h = block.h.det().value();
            assert!(det_g != 0.0 && det_h != 0.0, "{}", entry.def.name);
            assert_eq!(
                det_g * det_h < 0.0,
                entry.facts.lorentzian,
                "{} signature",
                entry.def.name
            );
        }
    }

    #[test]
    fn kerr_nut_block_matches_hand_values() {
        // At (1,1) with M=1, L=0, A=2, Lambda=0: P = Q = 3, so
        // h = [[0, 3], [3, 0]], det h = -9, g = diag(2/3, 2/3).
        let entry = kerr_nut_desitter(1.0, 0.0, 2.0, 0.0);
        let b = entry.def.eval_block([1.0, 1.0], 2).unwrap();
        assert!((b.h.a11.value()).abs() < 1e-14);
        assert!((b.h.a12.value() - 3.0).abs() < 1e-14);
        assert!((b.h.a22.value()).abs() < 1e-14);
        assert!((b.h.det().value() + 9.0).abs() < 1e-13);
        assert!((b.g.a11.value() - 2.0 / 3.0).abs() < 1e-14);
        assert!((b.g.a22.value() - 2.0 / 3.0).abs() < 1e-14);
        // det h = -P*Q everywhere
        let b2 = entry.def.eval_block([0.8, 1.2], 2).unwrap();
        let p = (4.0 - 0.64) * 1.0;
        let q = 4.0 + 1.44 - 2.4;
        assert!((b2.h.det().value() + p * q).abs() < 1e-12);
    }

    #[test]
    fn domain_boxes_avoid_zeros_of_p_and_q() {
        for entry in all() {
            let grid = entry.def.domain.grid(7, 7);
            for pt in grid {
                let b = entry.def.eval_block(pt, 1).unwrap();
                assert!(b.g.det().value().abs() > 1e-6, "{} at {pt:?}", entry.def.name);
                assert!(b.h.det().value().abs() > 1e-6, "{} at {pt:?}", entry.def.name);
            }
        }
    }

    #[test]
    fn find_by_name() {
        assert!(find("kerr-nut").is_some());
        assert!(find("nope").is_none());
    }
}
