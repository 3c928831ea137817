//! Moment vectors and the moment/localizing matrices as linear pencils in `m`.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::poly::{ExponentVector, MonomialBasis, Polynomial};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MomentError {
    #[error("moment vector of order {have} cannot supply degree-{need} moments")]
    OrderTooLow { have: usize, need: u32 },
    #[error("moment vector has {got} entries, expected {expected}")]
    Length { expected: usize, got: usize },
    #[error("variable count mismatch: {expected} vs {got}")]
    VarCount { expected: usize, got: usize },
    #[error("negative atom weight {0}")]
    NegativeWeight(f64),
    #[error("atom weights sum to {0}, expected 1")]
    WeightSum(f64),
    #[error("{atoms} atoms but {weights} weights")]
    WeightCount { atoms: usize, weights: usize },
}

/// Shared graded-lex basis of all monomials of degree `≤ degree` in `n` variables.
pub fn shared_basis(n: usize, degree: usize) -> Arc<MonomialBasis> {
    static CACHE: OnceLock<RwLock<HashMap<(usize, usize), Arc<MonomialBasis>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(b) = cache.read().unwrap().get(&(n, degree)) {
        return b.clone();
    }
    let b = Arc::new(MonomialBasis::new(n, degree));
    cache.write().unwrap().entry((n, degree)).or_insert(b).clone()
}

/// Truncated moment sequence `m_α`, `|α| ≤ 2τ`, in graded-lex order.
#[derive(Debug, Clone)]
pub struct MomentVector {
    order: usize,
    basis: Arc<MonomialBasis>,
    values: Vec<f64>,
}

impl PartialEq for MomentVector {
    fn eq(&self, other: &Self) -> bool {
        self.order == other.order && self.num_vars() == other.num_vars() && self.values == other.values
    }
}

impl MomentVector {
    /// `values` must have length `binomial(n + 2τ, 2τ)`.
    pub fn new(num_vars: usize, order: usize, values: Vec<f64>) -> Result<Self, MomentError> {
        let basis = shared_basis(num_vars, 2 * order);
        if values.len() != basis.len() {
            return Err(MomentError::Length {
                expected: basis.len(),
                got: values.len(),
            });
        }
        Ok(Self { order, basis, values })
    }

    pub fn zeros(num_vars: usize, order: usize) -> Self {
        let basis = shared_basis(num_vars, 2 * order);
        let values = vec![0.0; basis.len()];
        Self { order, basis, values }
    }

    pub fn num_vars(&self) -> usize {
        self.basis.num_vars()
    }

    /// Relaxation order `τ`; moments go up to degree `2τ`.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn mass(&self) -> f64 {
        self.values[0]
    }

    pub fn get(&self, alpha: &ExponentVector) -> Option<f64> {
        self.basis.index_of(alpha).ok().map(|i| self.values[i])
    }

    /// `L_m(p) = Σ p_α m_α`.
    pub fn integrate(&self, p: &Polynomial) -> Result<f64, MomentError> {
        if p.num_vars() != self.num_vars() {
            return Err(MomentError::VarCount {
                expected: self.num_vars(),
                got: p.num_vars(),
            });
        }
        let mut acc = 0.0;
        for (a, c) in p.terms() {
            let v = self.get(a).ok_or(MomentError::OrderTooLow {
                have: self.order,
                need: a.degree(),
            })?;
            acc += c * v;
        }
        Ok(acc)
    }

    /// First-order moments `m_{e_i}`.
    pub fn first_order(&self) -> Vec<f64> {
        let n = self.num_vars();
        (0..n)
            .map(|i| self.values.get(1 + i).copied().unwrap_or(0.0))
            .collect()
    }

    /// The same sequence cut to order `order ≤ self.order()`.
    pub fn truncate(&self, order: usize) -> Result<Self, MomentError> {
        if order > self.order {
            return Err(MomentError::OrderTooLow {
                have: self.order,
                need: 2 * order as u32,
            });
        }
        let basis = shared_basis(self.num_vars(), 2 * order);
        let values = self.values[..basis.len()].to_vec();
        Ok(Self { order, basis, values })
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= a);
        out
    }

    pub fn combine(&self, a: f64, other: &MomentVector, b: f64) -> Result<Self, MomentError> {
        if self.num_vars() != other.num_vars() || self.order != other.order {
            return Err(MomentError::Length {
                expected: self.len(),
                got: other.len(),
            });
        }
        let mut out = self.clone();
        for (v, w) in out.values.iter_mut().zip(&other.values) {
            *v = a * *v + b * w;
        }
        Ok(out)
    }
}

/// Symmetric matrix pencil `Σ_α C_α m_α` with sparse coefficients.
///
/// Each coefficient keeps only its upper triangle (`row ≤ col`).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMatrixForm {
    dimension: usize,
    terms: BTreeMap<ExponentVector, Vec<(usize, usize, f64)>>,
}

impl LinearMatrixForm {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            terms: BTreeMap::new(),
        }
    }

    /// Adds `value` at `(row, col)` and its mirror to the coefficient of `m_α`.
    pub fn add_entry(&mut self, alpha: ExponentVector, row: usize, col: usize, value: f64) {
        assert!(row < self.dimension && col < self.dimension);
        let (r, c) = if row <= col { (row, col) } else { (col, row) };
        let entries = self.terms.entry(alpha).or_default();
        match entries.iter_mut().find(|(i, j, _)| *i == r && *j == c) {
            Some(e) => e.2 += value,
            None => entries.push((r, c, value)),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// `(α, upper-triangular entries of C_α)` in graded-lex order of `α`.
    pub fn terms(&self) -> impl Iterator<Item = (&ExponentVector, &[(usize, usize, f64)])> {
        self.terms.iter().map(|(a, v)| (a, v.as_slice()))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(|a| a.degree()).max().unwrap_or(0)
    }

    /// Dense coefficient `C_α` (zero if `α` does not occur).
    pub fn coefficient(&self, alpha: &ExponentVector) -> DMatrix<f64> {
        let mut c = DMatrix::zeros(self.dimension, self.dimension);
        if let Some(es) = self.terms.get(alpha) {
            for &(i, j, v) in es {
                c[(i, j)] += v;
                if i != j {
                    c[(j, i)] += v;
                }
            }
        }
        c
    }
}

/// `M_τ(m)`: entry `(i, j)` is `m_{α_i + α_j}` over the basis `b_τ`.
pub fn moment_matrix_form(n: usize, order: usize) -> Arc<LinearMatrixForm> {
    localizing_matrix_form(&Polynomial::constant(n, 1.0), n, order)
}

/// `M_τj(q m)`: entry `(i, j)` is `Σ_γ q_γ m_{α_i + α_j + γ}`. Cached per `(q, n, τ_j)`.
pub fn localizing_matrix_form(q: &Polynomial, n: usize, order: usize) -> Arc<LinearMatrixForm> {
    type Key = (Vec<(ExponentVector, u64)>, usize, usize);
    static CACHE: OnceLock<RwLock<HashMap<Key, Arc<LinearMatrixForm>>>> = OnceLock::new();
    assert_eq!(q.num_vars(), n, "localizer polynomial must have {n} variables");
    let cache = CACHE.get_or_init(Default::default);
    let key = (q.structural_key(), n, order);
    if let Some(f) = cache.read().unwrap().get(&key) {
        return f.clone();
    }
    let form = Arc::new(build_localizing(q, n, order));
    cache.write().unwrap().entry(key).or_insert(form).clone()
}

fn build_localizing(q: &Polynomial, n: usize, order: usize) -> LinearMatrixForm {
    let basis = shared_basis(n, order);
    let dim = basis.len();
    let mut terms: BTreeMap<ExponentVector, Vec<(usize, usize, f64)>> = BTreeMap::new();
    for i in 0..dim {
        for j in i..dim {
            let ab = basis.element(i).add(basis.element(j));
            for (g, c) in q.terms() {
                terms.entry(ab.add(g)).or_default().push((i, j, c));
            }
        }
    }
    LinearMatrixForm { dimension: dim, terms }
}

/// Dense `Σ_α C_α m_α`.
pub fn assemble(form: &LinearMatrixForm, m: &MomentVector) -> Result<DMatrix<f64>, MomentError> {
    let d = form.dimension;
    let mut out = DMatrix::zeros(d, d);
    for (alpha, entries) in &form.terms {
        if alpha.num_vars() != m.num_vars() {
            return Err(MomentError::VarCount {
                expected: m.num_vars(),
                got: alpha.num_vars(),
            });
        }
        let v = m.get(alpha).ok_or(MomentError::OrderTooLow {
            have: m.order(),
            need: alpha.degree(),
        })?;
        for &(i, j, c) in entries {
            out[(i, j)] += c * v;
        }
    }
    for i in 0..d {
        for j in 0..i {
            out[(i, j)] = out[(j, i)];
        }
    }
    Ok(out)
}

/// Moments `m_α = Σ_k w_k z_k^α` of an atomic probability measure.
pub fn moments_of_atomic(
    atoms: &[Vec<f64>],
    weights: &[f64],
    n: usize,
    order: usize,
) -> Result<MomentVector, MomentError> {
    if atoms.len() != weights.len() {
        return Err(MomentError::WeightCount {
            atoms: atoms.len(),
            weights: weights.len(),
        });
    }
    if let Some(&w) = weights.iter().find(|&&w| w < 0.0) {
        return Err(MomentError::NegativeWeight(w));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(MomentError::WeightSum(total));
    }
    if let Some(a) = atoms.iter().find(|a| a.len() != n) {
        return Err(MomentError::VarCount {
            expected: n,
            got: a.len(),
        });
    }
    let mut m = MomentVector::zeros(n, order);
    let basis = m.basis.clone();
    for (atom, &w) in atoms.iter().zip(weights) {
        for (v, alpha) in m.values.iter_mut().zip(basis.elements()) {
            *v += w * alpha.eval(atom);
        }
    }
    Ok(m)
}
