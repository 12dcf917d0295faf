//! Double-double arithmetic for the one computation that needs it.
//!
//! The curvature of the Cosgrove form is an algebraic identity in the jet of
//! the Killing-block coefficients, but evaluating it in plain doubles loses
//! about `1/Q_gamma^2` digits to cancellation near the degeneracy locus.
//! Carrying roughly 32 significant digits through the form and its curvature
//! restores the identity to far below every acceptance tolerance. Only the
//! operations this path touches are implemented: add, sub, mul, div on
//! scalars and on jets in two variables up to order 3.

use crate::jets::Jet;

/// Unevaluated sum of two doubles, `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn from_f64(v: f64) -> Dd {
        Dd { hi: v, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn add(self, rhs: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, rhs.hi);
        let e = e + self.lo + rhs.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }

    fn sub(self, rhs: Dd) -> Dd {
        self.add(Dd { hi: -rhs.hi, lo: -rhs.lo })
    }

    fn mul(self, rhs: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, rhs.hi);
        let e = e + self.hi * rhs.lo + self.lo * rhs.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    fn div(self, rhs: Dd) -> Dd {
        let q1 = self.hi / rhs.hi;
        let r = self.sub(rhs.mul(Dd::from_f64(q1)));
        let q2 = r.hi / rhs.hi;
        let r = r.sub(rhs.mul(Dd::from_f64(q2)));
        let q3 = r.hi / rhs.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        let (hi, lo2) = quick_two_sum(hi, lo + q3);
        Dd { hi, lo: lo2 }
    }

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

const EXPONENTS: [(usize, usize); 10] = [
    (0, 0),
    (1, 0),
    (0, 1),
    (2, 0),
    (1, 1),
    (0, 2),
    (3, 0),
    (2, 1),
    (1, 2),
    (0, 3),
];

const BINOMIAL: [[f64; 4]; 4] = [
    [1.0, 0.0, 0.0, 0.0],
    [1.0, 1.0, 0.0, 0.0],
    [1.0, 2.0, 1.0, 0.0],
    [1.0, 3.0, 3.0, 1.0],
];

#[inline]
const fn coeff_count(order: usize) -> usize {
    (order + 1) * (order + 2) / 2
}

#[inline]
const fn index_of(a: usize, b: usize) -> usize {
    let n = a + b;
    n * (n + 1) / 2 + b
}

/// Jet in two variables with double-double coefficients; mirrors the
/// derivative-value layout of [`Jet`].
#[derive(Debug, Clone, Copy)]
pub struct DdJet {
    order: usize,
    c: [Dd; 10],
}

impl DdJet {
    pub fn constant(v: f64, order: usize) -> DdJet {
        let mut c = [Dd::ZERO; 10];
        c[0] = Dd::from_f64(v);
        DdJet { order, c }
    }

    pub fn from_jet(j: &Jet) -> DdJet {
        let order = j.order();
        let mut c = [Dd::ZERO; 10];
        for (i, &(a, b)) in EXPONENTS.iter().enumerate().take(coeff_count(order)) {
            c[i] = Dd::from_f64(j.coeff(a, b));
        }
        DdJet { order, c }
    }

    pub fn value(&self) -> f64 {
        self.c[0].to_f64()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn truncated(&self, order: usize) -> DdJet {
        assert!(order <= self.order);
        let mut c = [Dd::ZERO; 10];
        c[..coeff_count(order)].copy_from_slice(&self.c[..coeff_count(order)]);
        DdJet { order, c }
    }

    pub fn d1(&self) -> DdJet {
        assert!(self.order >= 1);
        let order = self.order - 1;
        let mut c = [Dd::ZERO; 10];
        for (i, &(a, b)) in EXPONENTS.iter().enumerate().take(coeff_count(order)) {
            c[i] = self.c[index_of(a + 1, b)];
        }
        DdJet { order, c }
    }

    pub fn d2(&self) -> DdJet {
        assert!(self.order >= 1);
        let order = self.order - 1;
        let mut c = [Dd::ZERO; 10];
        for (i, &(a, b)) in EXPONENTS.iter().enumerate().take(coeff_count(order)) {
            c[i] = self.c[index_of(a, b + 1)];
        }
        DdJet { order, c }
    }

    pub fn add(&self, rhs: &DdJet) -> DdJet {
        assert_eq!(self.order, rhs.order);
        let mut c = self.c;
        for i in 0..coeff_count(self.order) {
            c[i] = c[i].add(rhs.c[i]);
        }
        DdJet { order: self.order, c }
    }

    pub fn sub(&self, rhs: &DdJet) -> DdJet {
        assert_eq!(self.order, rhs.order);
        let mut c = self.c;
        for i in 0..coeff_count(self.order) {
            c[i] = c[i].sub(rhs.c[i]);
        }
        DdJet { order: self.order, c }
    }

    pub fn neg(&self) -> DdJet {
        let mut c = self.c;
        for v in c.iter_mut().take(coeff_count(self.order)) {
            *v = v.neg();
        }
        DdJet { order: self.order, c }
    }

    pub fn scale(&self, factor: f64) -> DdJet {
        let f = Dd::from_f64(factor);
        let mut c = self.c;
        for v in c.iter_mut().take(coeff_count(self.order)) {
            *v = v.mul(f);
        }
        DdJet { order: self.order, c }
    }

    pub fn mul(&self, rhs: &DdJet) -> DdJet {
        assert_eq!(self.order, rhs.order);
        let mut c = [Dd::ZERO; 10];
        for (k, &(a, b)) in EXPONENTS.iter().enumerate().take(coeff_count(self.order)) {
            let mut acc = Dd::ZERO;
            for i in 0..=a {
                for j in 0..=b {
                    let w = BINOMIAL[a][i] * BINOMIAL[b][j];
                    let term = self.c[index_of(i, j)].mul(rhs.c[index_of(a - i, b - j)]);
                    acc = acc.add(term.mul(Dd::from_f64(w)));
                }
            }
            c[k] = acc;
        }
        DdJet { order: self.order, c }
    }

    pub fn div(&self, rhs: &DdJet) -> DdJet {
        assert_eq!(self.order, rhs.order);
        assert!(rhs.c[0].to_f64() != 0.0, "double-double jet division by zero");
        let mut q = [Dd::ZERO; 10];
        for (k, &(a, b)) in EXPONENTS.iter().enumerate().take(coeff_count(self.order)) {
            let mut acc = self.c[k];
            for i in 0..=a {
                for j in 0..=b {
                    if i == a && j == b {
                        continue;
                    }
                    let w = BINOMIAL[a][i] * BINOMIAL[b][j];
                    let term = q[index_of(i, j)].mul(rhs.c[index_of(a - i, b - j)]);
                    acc = acc.sub(term.mul(Dd::from_f64(w)));
                }
            }
            q[k] = acc.div(rhs.c[0]);
        }
        DdJet { order: self.order, c: q }
    }
}

/// Symmetric form with double-double jet entries.
#[derive(Debug, Clone, Copy)]
pub struct DdForm {
    pub a11: DdJet,
    pub a12: DdJet,
    pub a22: DdJet,
}

impl DdForm {
    fn entry(&self, i: usize, j: usize) -> DdJet {
        match (i, j) {
            (0, 0) => self.a11,
            (1, 1) => self.a22,
            _ => self.a12,
        }
    }

    fn det(&self) -> DdJet {
        self.a11.mul(&self.a22).sub(&self.a12.mul(&self.a12))
    }
}

/// The Cosgrove orientation `rho/4 - chi` from the block coefficient jets.
pub fn cosgrove_form(h: &crate::surface::Form2) -> DdForm {
    let h11 = DdJet::from_jet(&h.a11);
    let h12 = DdJet::from_jet(&h.a12);
    let h22 = DdJet::from_jet(&h.a22);
    let x = h11.mul(&h22).sub(&h12.mul(&h12));
    let target = x.order() - 1;
    let xt = x.truncated(target);
    let xi = [x.d1(), x.d2()];
    let dh = |k: usize, l: usize, i: usize| -> DdJet {
        let e = match (k, l) {
            (0, 0) => &h11,
            (1, 1) => &h22,
            _ => &h12,
        };
        if i == 0 {
            e.d1()
        } else {
            e.d2()
        }
    };
    let mut entries = [DdJet::constant(0.0, target); 3];
    let mut slot = 0;
    for i in 0..2 {
        for j in i..2 {
            // rho/4 - chi, both over the common denominators
            let rho = xi[i].mul(&xi[j]).div(&xt).div(&xt).scale(0.25);
            let chi = dh(0, 0, i)
                .mul(&dh(1, 1, j))
                .add(&dh(0, 0, j).mul(&dh(1, 1, i)))
                .sub(&dh(0, 1, i).mul(&dh(0, 1, j)).scale(2.0))
                .div(&xt)
                .scale(0.5);
            entries[slot] = rho.sub(&chi);
            slot += 1;
        }
    }
    DdForm { a11: entries[0], a12: entries[1], a22: entries[2] }
}

/// Scalar curvature of a form given by order-2 double-double jets.
pub fn scalar_curvature(form: &DdForm) -> f64 {
    assert!(form.a11.order() >= 2);
    let det = form.det();
    let target = form.a11.order() - 1;
    let dett = det.truncated(target);
    let inv = [
        [form.a22.truncated(target).div(&dett), form.a12.truncated(target).div(&dett).neg()],
        [form.a12.truncated(target).div(&dett).neg(), form.a11.truncated(target).div(&dett)],
    ];
    let dg = |i: usize, j: usize, k: usize| -> DdJet {
        let e = form.entry(i, j);
        if k == 0 {
            e.d1()
        } else {
            e.d2()
        }
    };
    let mut gamma = [[[DdJet::constant(0.0, target); 2]; 2]; 2];
    for k in 0..2 {
        for i in 0..2 {
            for j in i..2 {
                let mut acc = DdJet::constant(0.0, target);
                for l in 0..2 {
                    let sym = dg(l, i, j).add(&dg(l, j, i)).sub(&dg(i, j, l));
                    acc = acc.add(&inv[k][l].mul(&sym).scale(0.5));
                }
                gamma[k][i][j] = acc;
                gamma[k][j][i] = acc;
            }
        }
    }
    let rtarget = target - 1;
    let dgamma = |k: usize, i: usize, j: usize, m: usize| -> DdJet {
        if m == 0 {
            gamma[k][i][j].d1()
        } else {
            gamma[k][i][j].d2()
        }
    };
    let gt = |k: usize, i: usize, j: usize| gamma[k][i][j].truncated(rtarget);
    let mut r = DdJet::constant(0.0, rtarget);
    let invt = [
        [inv[0][0].truncated(rtarget), inv[0][1].truncated(rtarget)],
        [inv[1][0].truncated(rtarget), inv[1][1].truncated(rtarget)],
    ];
    for s in 0..2 {
        for n in 0..2 {
            let mut ric = DdJet::constant(0.0, rtarget);
            for m in 0..2 {
                ric = ric.add(&dgamma(m, n, s, m)).sub(&dgamma(m, m, s, n));
                for l in 0..2 {
                    ric = ric
                        .add(&gt(m, m, l).mul(&gt(l, n, s)))
                        .sub(&gt(m, n, l).mul(&gt(l, m, s)));
                }
            }
            r = r.add(&invt[s][n].mul(&ric));
        }
    }
    r.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dd_arithmetic_keeps_extra_digits() {
        // (1 + 2^-60) - 1 survives in double-double
        let tiny = 2.0f64.powi(-60);
        let one = Dd::from_f64(1.0);
        let sum = one.add(Dd::from_f64(tiny));
        let back = sum.sub(one);
        assert_eq!(back.to_f64(), tiny);
        // division: 1/3 * 3 = 1 to ~1e-32
        let third = Dd::from_f64(1.0).div(Dd::from_f64(3.0));
        let recon = third.mul(Dd::from_f64(3.0)).sub(one);
        assert!(recon.to_f64().abs() < 1e-31);
    }

    #[test]
    fn dd_jet_matches_f64_jet_on_benign_input() {
        let a = Jet::var1(1.3, 3);
        let b = Jet::var2(0.7, 3);
        let f = (a * b + a) / (b + Jet::constant(2.0, 3));
        let fa = DdJet::from_jet(&(a * b + a));
        let fb = DdJet::from_jet(&(b + Jet::constant(2.0, 3)));
        let q = fa.div(&fb);
        for n in 0..=3usize {
            for bb in 0..=n {
                let aa = n - bb;
                let got = q.c[index_of(aa, bb)].to_f64();
                let want = f.coeff(aa, bb);
                assert!((got - want).abs() <= 1e-13 * (1.0 + want.abs()));
            }
        }
    }

    #[test]
    fn curvature_of_round_sphere_in_dd() {
        // g = diag(1, sin^2 t1) at t1 = 0.9: R = 2
        use crate::expr::{parse, ParamBindings};
        let params = ParamBindings::new();
        let j = |src: &str| parse(src).unwrap().eval_jet([0.9, 0.4], &params, 3).unwrap();
        let form = DdForm {
            a11: DdJet::from_jet(&j("1")),
            a12: DdJet::from_jet(&j("0")),
            a22: DdJet::from_jet(&j("sin(t1)^2")),
        };
        let r = scalar_curvature(&form);
        assert!((r - 2.0).abs() < 1e-14, "R = {r}");
    }
}
