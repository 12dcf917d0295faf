//! Metric definitions: six coefficient expressions of the two surface
//! coordinates, parameter bindings, and a sample domain.
//!
//! The 4-metric is block diagonal in adapted coordinates `(t1, t2, u1, u2)`:
//! a surface part `g_ij dt^i dt^j` and a Killing part `h_kl du^k du^l`, all
//! six coefficients functions of `(t1, t2)` only. Definitions round-trip
//! through a TOML file format used by the command line tools.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::expr::{parse_with_coords, Expr, ParamBindings, ParseError};
use crate::jets::Jet;
use crate::surface::Form2;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DomainBox {
    pub t1: [f64; 2],
    pub t2: [f64; 2],
}

impl DomainBox {
    pub fn new(t1: [f64; 2], t2: [f64; 2]) -> Self {
        assert!(t1[0] < t1[1] && t2[0] < t2[1], "empty domain box");
        DomainBox { t1, t2 }
    }

    pub fn contains(&self, p: [f64; 2], margin: f64) -> bool {
        let m1 = margin * (self.t1[1] - self.t1[0]);
        let m2 = margin * (self.t2[1] - self.t2[0]);
        p[0] >= self.t1[0] - m1
            && p[0] <= self.t1[1] + m1
            && p[1] >= self.t2[0] - m2
            && p[1] <= self.t2[1] + m2
    }

    pub fn center(&self) -> [f64; 2] {
        [
            0.5 * (self.t1[0] + self.t1[1]),
            0.5 * (self.t2[0] + self.t2[1]),
        ]
    }

    /// Row-major interior grid, `n1 x n2` points, cell-centered so no sample
    /// sits on the boundary.
    pub fn grid(&self, n1: usize, n2: usize) -> Vec<[f64; 2]> {
        let mut pts = Vec::with_capacity(n1 * n2);
        for i in 0..n1 {
            let x = self.t1[0] + (self.t1[1] - self.t1[0]) * (i as f64 + 0.5) / n1 as f64;
            for j in 0..n2 {
                let y = self.t2[0] + (self.t2[1] - self.t2[0]) * (j as f64 + 0.5) / n2 as f64;
                pts.push([x, y]);
            }
        }
        pts
    }
}

#[derive(Debug, Error)]
pub enum MetricFileError {
    #[error("invalid TOML: {0}")]
    Toml(String),
    #[error("missing `{0}`")]
    Missing(&'static str),
    #[error("`{field}` must be {expected}")]
    BadValue { field: String, expected: &'static str },
    #[error("in `{field}`: {source}")]
    BadExpr { field: String, source: ParseError },
    #[error("domain bounds must satisfy min < max")]
    BadDomain,
}

/// Jets of the six coefficients at one surface point.
#[derive(Debug, Clone, Copy)]
pub struct BlockJets {
    pub g: Form2,
    pub h: Form2,
}

/// One metric of the class under study, as definition data.
#[derive(Debug, Clone)]
pub struct MetricDefinition {
    pub name: String,
    pub coords: [String; 2],
    pub params: ParamBindings,
    pub g11: Expr,
    pub g12: Expr,
    pub g22: Expr,
    pub h11: Expr,
    pub h12: Expr,
    pub h22: Expr,
    pub domain: DomainBox,
}

/// A coordinate change of the surface together with its Jacobian entries,
/// everything given in closed form.
#[derive(Debug, Clone)]
pub struct CoordinateMap {
    /// New coordinates expressed in the old ones: `t^i' = forward[i](t)`.
    pub forward: [Expr; 2],
    /// `jacobian[i][j] = d forward[i] / d t^j`.
    pub jacobian: [[Expr; 2]; 2],
}

impl MetricDefinition {
    /// Evaluates all six coefficients as jets of the given order.
    pub fn eval_block(&self, point: [f64; 2], order: usize) -> Result<BlockJets> {
        let ev = |e: &Expr| -> Result<Jet> {
            e.eval_jet(point, &self.params, order).map_err(Error::from)
        };
        Ok(BlockJets {
            g: Form2::new(ev(&self.g11)?, ev(&self.g12)?, ev(&self.g22)?),
            h: Form2::new(ev(&self.h11)?, ev(&self.h12)?, ev(&self.h22)?),
        })
    }

    /// Pulls the metric back along a coordinate change: the Killing-block
    /// coefficients transform as scalars, the surface part as a quadratic
    /// form. The sample domain is kept; adjust it when the map moves the
    /// region of interest.
    pub fn pullback(&self, map: &CoordinateMap, new_name: &str) -> MetricDefinition {
        let compose = |e: &Expr| e.substitute(&map.forward[0], &map.forward[1]);
        let j = &map.jacobian;
        // g'_ij = sum_kl (g_kl . phi) J^k_i J^l_j
        let gp = |i: usize, l: usize| -> Expr {
            let g11 = compose(&self.g11);
            let g12 = compose(&self.g12);
            let g22 = compose(&self.g22);
            g11 * j[0][i].clone() * j[0][l].clone()
                + g12.clone() * j[0][i].clone() * j[1][l].clone()
                + g12 * j[1][i].clone() * j[0][l].clone()
                + g22 * j[1][i].clone() * j[1][l].clone()
        };
        MetricDefinition {
            name: new_name.to_owned(),
            coords: self.coords.clone(),
            params: self.params.clone(),
            g11: gp(0, 0),
            g12: gp(0, 1),
            g22: gp(1, 1),
            h11: compose(&self.h11),
            h12: compose(&self.h12),
            h22: compose(&self.h22),
            domain: self.domain,
        }
    }

    /// Change of Killing basis by a constant matrix: `h'_kl = a^i_k a^j_l h_ij`
    /// with `a[i][k]` the matrix entries.
    pub fn gl2_transform(&self, a: [[f64; 2]; 2], new_name: &str) -> MetricDefinition {
        let n = Expr::num;
        let term = |k: usize, l: usize| -> Expr {
            n(a[0][k] * a[0][l]) * self.h11.clone()
                + n(a[0][k] * a[1][l] + a[1][k] * a[0][l]) * self.h12.clone()
                + n(a[1][k] * a[1][l]) * self.h22.clone()
        };
        MetricDefinition {
            name: new_name.to_owned(),
            coords: self.coords.clone(),
            params: self.params.clone(),
            g11: self.g11.clone(),
            g12: self.g12.clone(),
            g22: self.g22.clone(),
            h11: term(0, 0),
            h12: term(0, 1),
            h22: term(1, 1),
            domain: self.domain,
        }
    }

    /// Hash of the definition content (coefficients and parameter values;
    /// not the name or the sample domain).
    pub fn fingerprint(&self) -> String {
        let mut text = String::new();
        for e in [&self.g11, &self.g12, &self.g22, &self.h11, &self.h12, &self.h22] {
            let _ = writeln!(text, "{e}");
        }
        for (k, v) in &self.params {
            let _ = writeln!(text, "{k}={v:.17e}");
        }
        let digest = Sha256::digest(text.as_bytes());
        let mut hex = String::with_capacity(64);
        for byte in digest {
            let _ = write!(hex, "{byte:02x}");
        }
        hex
    }

    /// Parses the TOML metric file format.
    pub fn parse_file(text: &str) -> std::result::Result<Self, MetricFileError> {
        let value: toml::Value =
            toml::from_str(text).map_err(|e| MetricFileError::Toml(e.to_string()))?;
        let table = value
            .as_table()
            .ok_or(MetricFileError::Missing("top-level table"))?;

        let name = table
            .get("name")
            .and_then(|v| v.as_str())
            .unwrap_or("metric")
            .to_owned();

        let coords: [String; 2] = match table.get("coordinates") {
            Some(c) => {
                let names = c
                    .get("names")
                    .and_then(|v| v.as_array())
                    .ok_or(MetricFileError::Missing("coordinates.names"))?;
                if names.len() != 2 || !names.iter().all(|n| n.is_str()) {
                    return Err(MetricFileError::BadValue {
                        field: "coordinates.names".to_owned(),
                        expected: "an array of two strings",
                    });
                }
                [
                    names[0].as_str().unwrap().to_owned(),
                    names[1].as_str().unwrap().to_owned(),
                ]
            }
            None => ["t1".to_owned(), "t2".to_owned()],
        };

        let mut params = ParamBindings::new();
        if let Some(p) = table.get("parameters") {
            let p = p.as_table().ok_or(MetricFileError::BadValue {
                field: "parameters".to_owned(),
                expected: "a table of numbers",
            })?;
            for (k, v) in p {
                let num = v.as_float().or_else(|| v.as_integer().map(|i| i as f64));
                match num {
                    Some(n) => {
                        params.insert(k.clone(), n);
                    }
                    None => {
                        return Err(MetricFileError::BadValue {
                            field: format!("parameters.{k}"),
                            expected: "a number",
                        })
                    }
                }
            }
        }

        let metric = table
            .get("metric")
            .and_then(|v| v.as_table())
            .ok_or(MetricFileError::Missing("[metric]"))?;
        let coord_refs = [coords[0].as_str(), coords[1].as_str()];
        let coeff = |key: &'static str| -> std::result::Result<Expr, MetricFileError> {
            let src = metric
                .get(key)
                .and_then(|v| v.as_str())
                .ok_or(MetricFileError::Missing(key))?;
            parse_with_coords(src, coord_refs).map_err(|source| MetricFileError::BadExpr {
                field: key.to_owned(),
                source,
            })
        };
        let g11 = coeff("g11")?;
        let g12 = coeff("g12")?;
        let g22 = coeff("g22")?;
        let h11 = coeff("h11")?;
        let h12 = coeff("h12")?;
        let h22 = coeff("h22")?;

        let domain = table
            .get("domain")
            .and_then(|v| v.as_table())
            .ok_or(MetricFileError::Missing("[domain]"))?;
        let range = |key: &str| -> std::result::Result<[f64; 2], MetricFileError> {
            let arr = domain
                .get(key)
                .and_then(|v| v.as_array())
                .ok_or(MetricFileError::BadValue {
                    field: format!("domain.{key}"),
                    expected: "an array [min, max]",
                })?;
            if arr.len() != 2 {
                return Err(MetricFileError::BadDomain);
            }
            let get = |v: &toml::Value| v.as_float().or_else(|| v.as_integer().map(|i| i as f64));
            match (get(&arr[0]), get(&arr[1])) {
                (Some(a), Some(b)) if a < b => Ok([a, b]),
                _ => Err(MetricFileError::BadDomain),
            }
        };
        let domain = DomainBox {
            t1: range(&coords[0]).or_else(|_| range("t1"))?,
            t2: range(&coords[1]).or_else(|_| range("t2"))?,
        };

        Ok(MetricDefinition {
            name,
            coords,
            params,
            g11,
            g12,
            g22,
            h11,
            h12,
            h22,
            domain,
        })
    }

    /// Renders the definition in the TOML file format, deterministically.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "name = {:?}", self.name);
        let _ = writeln!(out);
        let _ = writeln!(out, "[coordinates]");
        let _ = writeln!(out, "names = [{:?}, {:?}]", self.coords[0], self.coords[1]);
        let _ = writeln!(out);
        let _ = writeln!(out, "[parameters]");
        for (k, v) in &self.params {
            let _ = writeln!(out, "{k} = {v}");
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "[metric]");
        for (key, e) in [
            ("g11", &self.g11),
            ("g12", &self.g12),
            ("g22", &self.g22),
            ("h11", &self.h11),
            ("h12", &self.h12),
            ("h22", &self.h22),
        ] {
            let _ = writeln!(out, "{key} = {:?}", e.to_string());
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "[domain]");
        let _ = writeln!(out, "{} = [{}, {}]", self.coords[0], self.domain.t1[0], self.domain.t1[1]);
        let _ = writeln!(out, "{} = [{}, {}]", self.coords[1], self.domain.t2[0], self.domain.t2[1]);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn simple_def() -> MetricDefinition {
        MetricDefinition {
            name: "flat".into(),
            coords: ["t1".into(), "t2".into()],
            params: ParamBindings::new(),
            g11: parse("1").unwrap(),
            g12: parse("0").unwrap(),
            g22: parse("1").unwrap(),
            h11: parse("-1").unwrap(),
            h12: parse("0").unwrap(),
            h22: parse("t1^2").unwrap(),
            domain: DomainBox::new([1.0, 3.0], [4.0, 6.0]),
        }
    }

    #[test]
    fn file_roundtrip() {
        let def = simple_def();
        let text = def.to_file_string();
        let back = MetricDefinition::parse_file(&text).unwrap();
        assert_eq!(back.name, def.name);
        assert_eq!(back.h22, def.h22);
        assert_eq!(back.domain, def.domain);
        assert_eq!(back.fingerprint(), def.fingerprint());
    }

    #[test]
    fn missing_metric_section() {
        let err = MetricDefinition::parse_file("name = \"x\"\n").unwrap_err();
        assert!(matches!(err, MetricFileError::Missing("[metric]")));
    }

    #[test]
    fn substituted_coefficient_evaluates_at_mapped_point() {
        let def = simple_def();
        let cube = CoordinateMap {
            forward: [parse("t1^3").unwrap(), parse("t2").unwrap()],
            jacobian: [
                [parse("3*t1^2").unwrap(), parse("0").unwrap()],
                [parse("0").unwrap(), parse("1").unwrap()],
            ],
        };
        let pulled = def.pullback(&cube, "flat-cubed");
        // h22 transforms as a scalar: h22'(t) = h22(t1^3, t2)
        let v = pulled.h22.eval([1.1, 0.7], &def.params).unwrap();
        let w = def.h22.eval([1.1f64.powi(3), 0.7], &def.params).unwrap();
        assert!((v - w).abs() < 1e-14);
        // g22' picks up the squared Jacobian on the first slot only for g11
        let g11p = pulled.g11.eval([1.1, 0.7], &def.params).unwrap();
        assert!((g11p - (3.0 * 1.1f64.powi(2)).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn gl2_transform_scales_determinant() {
        let def = simple_def();
        let a = [[2.0, 1.0], [0.5, 3.0]];
        let t = def.gl2_transform(a, "flat-gl2");
        let p = [2.0, 5.0];
        let h = |d: &MetricDefinition| -> [f64; 3] {
            [
                d.h11.eval(p, &d.params).unwrap(),
                d.h12.eval(p, &d.params).unwrap(),
                d.h22.eval(p, &d.params).unwrap(),
            ]
        };
        let [h11, h12, h22] = h(&def);
        let [k11, k12, k22] = h(&t);
        let det_a = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let lhs = k11 * k22 - k12 * k12;
        let rhs = det_a * det_a * (h11 * h22 - h12 * h12);
        assert!((lhs - rhs).abs() < 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn fingerprint_ignores_name_but_not_params() {
        let mut a = simple_def();
        let mut b = simple_def();
        b.name = "other".into();
        assert_eq!(a.fingerprint(), b.fingerprint());
        a.params.insert("M".into(), 1.0);
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
