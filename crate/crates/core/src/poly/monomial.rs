use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use super::PolyError;

/// Exponent vector `α ∈ N^n` of a monomial `z^α`.
///
/// Ordering is graded lexicographic: lower total degree first, and within a
/// degree the vector with the larger leading exponent comes first, so the
/// degree-one monomials are ordered `z1, z2, ..., zn`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct ExponentVector(Vec<u32>);

impl ExponentVector {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self(exponents)
    }

    pub fn zero(num_vars: usize) -> Self {
        Self(vec![0; num_vars])
    }

    /// Unit vector `e_i`.
    pub fn unit(num_vars: usize, var: usize) -> Self {
        let mut e = vec![0; num_vars];
        e[var] = 1;
        Self(e)
    }

    pub fn num_vars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, var: usize) -> u32 {
        self.0[var]
    }

    /// Componentwise sum, i.e. the exponent of `z^α · z^β`.
    pub fn add(&self, other: &ExponentVector) -> ExponentVector {
        debug_assert_eq!(self.0.len(), other.0.len());
        ExponentVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Evaluates `z^α` at `point`.
    pub fn eval(&self, point: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(point)
            .filter(|(&e, _)| e > 0)
            .map(|(&e, &x)| x.powi(e as i32))
            .product()
    }
}

impl Ord for ExponentVector {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for ExponentVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for ExponentVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<u32>> for ExponentVector {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

impl From<&[u32]> for ExponentVector {
    fn from(v: &[u32]) -> Self {
        Self(v.to_vec())
    }
}

/// Number of monomials of total degree at most `order` in `n` variables,
/// `binomial(n + order, order)`.
pub fn basis_size(n: usize, order: usize) -> usize {
    let mut acc: u128 = 1;
    for i in 1..=order as u128 {
        acc = acc * (n as u128 + i) / i;
    }
    acc as usize
}

/// The canonical basis `b_τ(z)`: all monomials of degree `≤ τ` in graded-lex order.
#[derive(Clone, Debug)]
pub struct MonomialBasis {
    num_vars: usize,
    order: usize,
    elements: Vec<ExponentVector>,
    index: HashMap<ExponentVector, usize>,
}

impl MonomialBasis {
    pub fn new(num_vars: usize, order: usize) -> Self {
        let mut elements = Vec::with_capacity(basis_size(num_vars, order));
        let mut scratch = vec![0u32; num_vars];
        for d in 0..=order as u32 {
            push_degree(&mut elements, &mut scratch, 0, d);
        }
        let index = elements
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        Self {
            num_vars,
            order,
            elements,
            index,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[ExponentVector] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &ExponentVector {
        &self.elements[i]
    }

    /// Position of `alpha` in the basis.
    pub fn index_of(&self, alpha: &ExponentVector) -> Result<usize, PolyError> {
        self.index
            .get(alpha)
            .copied()
            .ok_or_else(|| PolyError::ExponentOutOfRange {
                exponent: format!("{alpha:?}"),
                order: self.order,
            })
    }

    /// Number of basis elements of degree `≤ d` (a prefix of the basis).
    pub fn prefix_len(&self, d: usize) -> usize {
        basis_size(self.num_vars, d.min(self.order))
    }

    /// Evaluates every basis monomial at `point`.
    pub fn eval(&self, point: &[f64]) -> Vec<f64> {
        self.elements.iter().map(|a| a.eval(point)).collect()
    }
}

// Exponents of degree exactly `remaining` over variables `var..`, largest
// leading exponent first.
fn push_degree(out: &mut Vec<ExponentVector>, scratch: &mut [u32], var: usize, remaining: u32) {
    let n = scratch.len();
    if var + 1 == n {
        scratch[var] = remaining;
        out.push(ExponentVector(scratch.to_vec()));
        scratch[var] = 0;
        return;
    }
    if n == 0 {
        if remaining == 0 {
            out.push(ExponentVector(Vec::new()));
        }
        return;
    }
    for e in (0..=remaining).rev() {
        scratch[var] = e;
        push_degree(out, scratch, var + 1, remaining - e);
    }
    scratch[var] = 0;
}

/// Convenience wrapper matching the operation name used across the crate.
pub fn monomial_basis(n: usize, order: usize) -> MonomialBasis {
    MonomialBasis::new(n, order)
}
