//! Sparse multivariate polynomials over `f64`.
//!
//! A [`Polynomial`] stores only nonzero coefficients, keyed by
//! [`ExponentVector`] in graded-lex order. Variable names are not part of
//! the polynomial; callers carry the ordered name list alongside it.

mod monomial;
mod parse;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

pub use monomial::{basis_size, monomial_basis, ExponentVector, MonomialBasis};
pub use parse::parse_polynomial;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("variable count mismatch: {left} vs {right}")]
    VarCountMismatch { left: usize, right: usize },
    #[error("point has {got} coordinates, polynomial has {expected} variables")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("syntax error at position {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("invalid exponent at position {pos}: {message}")]
    BadExponent { pos: usize, message: String },
    #[error("variable `{0}` is missing from the target variable list")]
    MissingVariable(String),
    #[error("exponent {exponent} is outside a basis of order {order}")]
    ExponentOutOfRange { exponent: String, order: usize },
}

#[derive(Clone, PartialEq, Debug)]
pub struct Polynomial {
    num_vars: usize,
    terms: BTreeMap<ExponentVector, f64>,
}

impl Polynomial {
    pub fn zero(num_vars: usize) -> Self {
        Self {
            num_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(num_vars: usize, c: f64) -> Self {
        let mut p = Self::zero(num_vars);
        p.add_term(ExponentVector::zero(num_vars), c);
        p
    }

    /// The coordinate polynomial `z_var`.
    pub fn var(num_vars: usize, var: usize) -> Self {
        Self::monomial(ExponentVector::unit(num_vars, var), 1.0)
    }

    pub fn monomial(alpha: ExponentVector, coeff: f64) -> Self {
        let mut p = Self::zero(alpha.num_vars());
        p.add_term(alpha, coeff);
        p
    }

    /// Builds a polynomial from `(exponent, coefficient)` pairs, summing duplicates.
    pub fn from_terms<I>(num_vars: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (ExponentVector, f64)>,
    {
        let mut p = Self::zero(num_vars);
        for (a, c) in terms {
            assert_eq!(a.num_vars(), num_vars, "exponent length mismatch");
            p.add_term(a, c);
        }
        p
    }

    fn add_term(&mut self, alpha: ExponentVector, c: f64) {
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(alpha);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = *o.get() + c;
                if s == 0.0 {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|a| a.degree()).max().unwrap_or(0)
    }

    /// Highest exponent of `var` appearing in any term.
    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|a| a.get(var)).max().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ExponentVector, f64)> + '_ {
        self.terms.iter().map(|(a, &c)| (a, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, alpha: &ExponentVector) -> f64 {
        self.terms.get(alpha).copied().unwrap_or(0.0)
    }

    /// Constant term.
    pub fn constant_term(&self) -> f64 {
        self.coeff(&ExponentVector::zero(self.num_vars))
    }

    fn check_vars(&self, other: &Polynomial) -> Result<(), PolyError> {
        if self.num_vars != other.num_vars {
            return Err(PolyError::VarCountMismatch {
                left: self.num_vars,
                right: other.num_vars,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_vars(other)?;
        let mut out = self.clone();
        for (a, &c) in &other.terms {
            out.add_term(a.clone(), c);
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_vars(other)?;
        let mut out = self.clone();
        for (a, &c) in &other.terms {
            out.add_term(a.clone(), -c);
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_vars(other)?;
        let mut out = Polynomial::zero(self.num_vars);
        for (a, &c) in &self.terms {
            for (b, &d) in &other.terms {
                out.add_term(a.add(b), c * d);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        Polynomial::from_terms(
            self.num_vars,
            self.terms.iter().map(|(a, &c)| (a.clone(), c * s)),
        )
    }

    pub fn add_constant(&self, c: f64) -> Polynomial {
        let mut out = self.clone();
        out.add_term(ExponentVector::zero(self.num_vars), c);
        out
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut acc = Polynomial::constant(self.num_vars, 1.0);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Drops coefficients with `|c| <= eps`. With `eps = 0` this is a no-op.
    pub fn prune(&self, eps: f64) -> Polynomial {
        Polynomial {
            num_vars: self.num_vars,
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.abs() > eps)
                .map(|(a, &c)| (a.clone(), c))
                .collect(),
        }
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<f64, PolyError> {
        if point.len() != self.num_vars {
            return Err(PolyError::DimensionMismatch {
                expected: self.num_vars,
                got: point.len(),
            });
        }
        Ok(self.eval(point))
    }

    /// Unchecked evaluation; `point` must have `num_vars` entries.
    pub fn eval(&self, point: &[f64]) -> f64 {
        self.terms.iter().map(|(a, &c)| c * a.eval(point)).sum()
    }

    /// Rewrites the polynomial over `target_vars`, mapping each source variable
    /// to the target position with the same name.
    pub fn embed(&self, source_vars: &[String], target_vars: &[String]) -> Result<Polynomial, PolyError> {
        if source_vars.len() != self.num_vars {
            return Err(PolyError::VarCountMismatch {
                left: self.num_vars,
                right: source_vars.len(),
            });
        }
        let map = source_vars
            .iter()
            .map(|s| {
                target_vars
                    .iter()
                    .position(|t| t == s)
                    .ok_or_else(|| PolyError::MissingVariable(s.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.remap(&map, target_vars.len()))
    }

    /// Moves variable `i` to position `map[i]` in a space of `target_len` variables.
    pub fn remap(&self, map: &[usize], target_len: usize) -> Polynomial {
        Polynomial::from_terms(
            target_len,
            self.terms.iter().map(|(a, &c)| {
                let mut e = vec![0u32; target_len];
                for (i, &x) in a.as_slice().iter().enumerate() {
                    e[map[i]] += x;
                }
                (ExponentVector::new(e), c)
            }),
        )
    }

    /// Substitutes `z_var = 0` and removes that variable from the space.
    pub fn drop_variable_at_zero(&self, var: usize) -> Polynomial {
        Polynomial::from_terms(
            self.num_vars - 1,
            self.terms.iter().filter(|(a, _)| a.get(var) == 0).map(|(a, &c)| {
                let mut e = a.as_slice().to_vec();
                e.remove(var);
                (ExponentVector::new(e), c)
            }),
        )
    }

    /// Substitutes `z_i = scale_i * z_i'` for every variable.
    pub fn rescale_vars(&self, scales: &[f64]) -> Polynomial {
        Polynomial::from_terms(
            self.num_vars,
            self.terms.iter().map(|(a, &c)| {
                let f: f64 = a
                    .as_slice()
                    .iter()
                    .zip(scales)
                    .map(|(&e, &s)| s.powi(e as i32))
                    .product();
                (a.clone(), c * f)
            }),
        )
    }

    /// Formats with the given variable names, in a form [`parse_polynomial`] reads back exactly.
    pub fn display<'a>(&'a self, names: &'a [String]) -> PolyDisplay<'a> {
        PolyDisplay { poly: self, names }
    }

    /// Key usable for hashing, with coefficients compared bitwise.
    pub fn structural_key(&self) -> Vec<(ExponentVector, u64)> {
        self.terms.iter().map(|(a, c)| (a.clone(), c.to_bits())).collect()
    }
}

pub struct PolyDisplay<'a> {
    poly: &'a Polynomial,
    names: &'a [String],
}

impl fmt::Display for PolyDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return write!(f, "0");
        }
        // Highest degree first reads naturally.
        for (k, (a, &c)) in self.poly.terms.iter().rev().enumerate() {
            let mag = c.abs();
            if k == 0 {
                if c < 0.0 {
                    write!(f, "-")?;
                }
            } else if c < 0.0 {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mut factors = Vec::new();
            if mag != 1.0 || a.is_zero() {
                factors.push(format!("{mag}"));
            }
            for (i, &e) in a.as_slice().iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(self.names[i].clone()),
                    _ => factors.push(format!("{}^{e}", self.names[i])),
                }
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    /// Panics on a variable-count mismatch; use [`Polynomial::checked_add`] to recover.
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.checked_add(rhs).expect("polynomial add")
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.checked_sub(rhs).expect("polynomial sub")
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.checked_mul(rhs).expect("polynomial mul")
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rho() -> Polynomial {
        Polynomial::var(1, 0)
    }

    #[test]
    fn difference_of_squares() {
        let one = Polynomial::constant(1, 1.0);
        let p = &(&rho() - &one) * &(&rho() + &one);
        let want = Polynomial::from_terms(
            1,
            [(ExponentVector::new(vec![2]), 1.0), (ExponentVector::new(vec![0]), -1.0)],
        );
        assert_eq!(p, want);
        assert_eq!(p.degree(), 2);
    }

    #[test]
    fn additive_inverse_is_canonical_zero() {
        let p = parse_polynomial("rho^3 - 0.25*rho + 7", &["rho".into()]).unwrap();
        let z = &p + &(-&p);
        assert!(z.is_zero());
        assert_eq!(z.num_terms(), 0);
        assert_eq!(z.degree(), 0);
    }

    #[test]
    fn scale_then_evaluate() {
        let p = rho().pow(2).add_constant(1.0).scale(0.5);
        assert_eq!(p.evaluate(&[2.0]).unwrap(), 2.5);
    }

    #[test]
    fn mismatched_operands() {
        let a = Polynomial::var(1, 0);
        let b = Polynomial::var(2, 1);
        assert!(matches!(a.checked_add(&b), Err(PolyError::VarCountMismatch { .. })));
        assert!(matches!(a.checked_mul(&b), Err(PolyError::VarCountMismatch { .. })));
        assert!(matches!(a.evaluate(&[1.0, 2.0]), Err(PolyError::DimensionMismatch { .. })));
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(Polynomial::constant(3, 1.0).evaluate(&[4.0, -1.0, 9.0]).unwrap(), 1.0);
        let lam = &rho() - &Polynomial::constant(1, 1.0);
        assert_eq!(lam.evaluate(&[1.0]).unwrap(), 0.0);
        let vars: Vec<String> = vec!["s".into(), "r".into()];
        let p = parse_polynomial(
            "s^2 + (5.3 + 2*r + r^2)*s + 0.96 + 4.8*r + 15.9*r^2 + 2*r^3 - 2*r^4",
            &vars,
        )
        .unwrap();
        assert!((p.evaluate(&[1.0, 0.0]).unwrap() - 7.26).abs() < 1e-12);
    }

    #[test]
    fn embed_into_lifted_space() {
        let src: Vec<String> = vec!["rho".into()];
        let dst: Vec<String> = vec!["rho".into(), "lre".into(), "x1".into(), "x2".into()];
        let f2 = rho().embed(&src, &dst).unwrap();
        assert_eq!(f2, Polynomial::monomial(ExponentVector::new(vec![1, 0, 0, 0]), 1.0));
        let c = Polynomial::constant(1, 1.0).embed(&src, &dst).unwrap();
        assert_eq!(c, Polynomial::constant(4, 1.0));
        let sq = rho().pow(2).embed(&src, &dst).unwrap();
        assert_eq!(sq.evaluate(&[0.5, 3.0, -1.0, 2.0]).unwrap(), 0.25);
        let missing: Vec<String> = vec!["lre".into()];
        assert!(matches!(rho().embed(&src, &missing), Err(PolyError::MissingVariable(_))));
    }

    #[test]
    fn drop_variable() {
        let names: Vec<String> = vec!["lre".into(), "lim".into()];
        let p = parse_polynomial("lre^2 + lim^2 - 1 + lre*lim", &names).unwrap();
        let q = p.drop_variable_at_zero(1);
        assert_eq!(q.num_vars(), 1);
        assert_eq!(q.evaluate(&[2.0]).unwrap(), 3.0);
    }

    #[test]
    fn display_round_trip() {
        let names: Vec<String> = vec!["x".into(), "y".into()];
        let p = parse_polynomial("-3*x^2*y + 0.1*y - x + 1e-3", &names).unwrap();
        let s = p.display(&names).to_string();
        assert_eq!(parse_polynomial(&s, &names).unwrap(), p);
        assert_eq!(Polynomial::zero(2).display(&names).to_string(), "0");
    }

    #[test]
    fn prune_off_by_default() {
        let p = Polynomial::from_terms(1, [(ExponentVector::new(vec![1]), 1e-14)]);
        assert_eq!(p.prune(0.0), p);
        assert!(p.prune(1e-12).is_zero());
    }
}
