//! Exact two-variable Laurent polynomial arithmetic and the polynomial-level
//! link invariants: the Kauffman bracket state sum with values in the skein
//! module of RP^3 (free on the empty link and the orientation-reversing
//! generator `x`), and its writhe normalization.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::diagram::ProjectiveDiagram;
use crate::resolve::{resolve, CircleKind};
use crate::state::StateVector;

/// A Laurent polynomial in the variables `A` and `z` with integer
/// coefficients. Zero coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LaurentPoly2 {
    terms: BTreeMap<(i64, i64), BigInt>,
}

impl LaurentPoly2 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(0, 0, BigInt::one())
    }

    pub fn monomial(a_exp: i64, z_exp: i64, coeff: impl Into<BigInt>) -> Self {
        let mut p = Self::default();
        p.add_term(a_exp, z_exp, coeff.into());
        p
    }

    /// `A^n`.
    pub fn a_pow(n: i64) -> Self {
        Self::monomial(n, 0, 1)
    }

    /// The loop value `-A^2 - A^-2` of a trivial circle.
    pub fn circle_factor() -> Self {
        let mut p = Self::monomial(2, 0, -1);
        p.add_term(-2, 0, BigInt::from(-1));
        p
    }

    /// `z + z^-1`, the Poincare polynomial of a projective circle.
    pub fn z_plus_z_inv() -> Self {
        let mut p = Self::monomial(0, 1, 1);
        p.add_term(0, -1, BigInt::one());
        p
    }

    /// `(-A^3)^w` for any integer `w`, including negative values.
    pub fn writhe_factor(w: i64) -> Self {
        let sign = if w.rem_euclid(2) == 0 { 1 } else { -1 };
        Self::monomial(3 * w, 0, sign)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, a_exp: i64, z_exp: i64) -> BigInt {
        self.terms
            .get(&(a_exp, z_exp))
            .cloned()
            .unwrap_or_else(BigInt::zero)
    }

    /// Iterate terms as `((a_exp, z_exp), coeff)` in ascending key order.
    pub fn terms(&self) -> impl Iterator<Item = (&(i64, i64), &BigInt)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn add_term(&mut self, a_exp: i64, z_exp: i64, coeff: BigInt) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry((a_exp, z_exp)).or_insert_with(BigInt::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.terms.remove(&(a_exp, z_exp));
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&(a, z), c) in other.terms.iter() {
            out.add_term(a, z, c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = Self::default();
        for (&(a, z), c) in self.terms.iter() {
            out.add_term(a, z, -c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::default();
        for (&(a1, z1), c1) in self.terms.iter() {
            for (&(a2, z2), c2) in other.terms.iter() {
                out.add_term(a1 + a2, z1 + z2, c1 * c2);
            }
        }
        out
    }

    pub fn scalar(&self, s: impl Into<BigInt>) -> Self {
        let s = s.into();
        let mut out = Self::default();
        for (&(a, z), c) in self.terms.iter() {
            out.add_term(a, z, c * &s);
        }
        out
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// True if no term involves `z`.
    pub fn is_a_only(&self) -> bool {
        self.terms.keys().all(|&(_, z)| z == 0)
    }

    fn fmt_term(f: &mut fmt::Formatter<'_>, a: i64, z: i64, coeff: &BigInt, first: bool) -> fmt::Result {
        let negative = coeff.is_negative();
        let abs = coeff.abs();
        if first {
            if negative {
                write!(f, "-")?;
            }
        } else if negative {
            write!(f, " - ")?;
        } else {
            write!(f, " + ")?;
        }
        let mut factors: Vec<String> = Vec::new();
        match a {
            0 => {}
            1 => factors.push("A".into()),
            e => factors.push(format!("A^{}", e)),
        }
        match z {
            0 => {}
            1 => factors.push("z".into()),
            e => factors.push(format!("z^{}", e)),
        }
        if factors.is_empty() {
            write!(f, "{}", abs)?;
        } else {
            if !abs.is_one() {
                write!(f, "{} ", abs)?;
            }
            write!(f, "{}", factors.join(" "))?;
        }
        Ok(())
    }
}

impl fmt::Display for LaurentPoly2 {
    /// Canonical form: terms sorted by A-exponent descending, then
    /// z-exponent descending, e.g. `-A^4 - A^-4`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (&(a, z), c)) in self.terms.iter().rev().enumerate() {
            Self::fmt_term(f, a, z, c, idx == 0)?;
        }
        Ok(())
    }
}

/// An element of the skein module of RP^3 written in the standard basis:
/// a coefficient of the empty link and a coefficient of the generator `x`.
/// Both coefficients are Laurent polynomials in `A` alone.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KbsmElement {
    pub empty: LaurentPoly2,
    pub x: LaurentPoly2,
}

impl KbsmElement {
    pub fn new(empty: LaurentPoly2, x: LaurentPoly2) -> Self {
        debug_assert!(empty.is_a_only() && x.is_a_only());
        Self { empty, x }
    }

    pub fn is_zero(&self) -> bool {
        self.empty.is_zero() && self.x.is_zero()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            empty: self.empty.add(&other.empty),
            x: self.x.add(&other.x),
        }
    }

    pub fn mul_poly(&self, p: &LaurentPoly2) -> Self {
        Self {
            empty: self.empty.mul(p),
            x: self.x.mul(p),
        }
    }

    /// Replace the generator `x` by `z + z^-1`.
    pub fn substitute_x(&self) -> LaurentPoly2 {
        self.empty.add(&self.x.mul(&LaurentPoly2::z_plus_z_inv()))
    }
}

impl fmt::Display for KbsmElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let x_part = if self.x.is_zero() {
            None
        } else if self.x == LaurentPoly2::one() {
            Some("x".to_string())
        } else {
            Some(format!("({})*x", self.x))
        };
        match (self.empty.is_zero(), x_part) {
            (false, None) => write!(f, "{}", self.empty),
            (true, Some(x)) => write!(f, "{}", x),
            (false, Some(x)) => write!(f, "{} + {}", self.empty, x),
            (true, None) => unreachable!(),
        }
    }
}

/// Kauffman bracket state sum in the skein module basis, with the empty
/// link normalized to 1. Each state contributes
/// `A^(#0 - #1) * (-A^2 - A^-2)^(trivial circles)`, landing on the `x`
/// coefficient when the state contains a projective circle.
pub fn kbsm(diagram: &ProjectiveDiagram) -> KbsmElement {
    let n = diagram.n_crossings;
    let mut out = KbsmElement::default();
    for state in StateVector::all(n) {
        let rs = resolve(diagram, &state);
        let trivial = rs
            .circles
            .iter()
            .filter(|c| c.kind == CircleKind::Trivial)
            .count();
        let projective = rs.circles.len() - trivial;
        let exp = state.count0() as i64 - state.count1() as i64;
        let term = LaurentPoly2::a_pow(exp).mul(&LaurentPoly2::circle_factor().pow(trivial as u32));
        if projective == 0 {
            out.empty = out.empty.add(&term);
        } else {
            out.x = out.x.add(&term);
        }
    }
    out
}

/// `(-A^3)^(-w)` times the bracket, the invariant of unframed links.
pub fn bracket_normalized(diagram: &ProjectiveDiagram) -> KbsmElement {
    let w = diagram.crossing_signs().writhe;
    kbsm(diagram).mul_poly(&LaurentPoly2::writhe_factor(-w))
}
