//! Solver-side view of an [`SDPProblem`]: every moment is a free variable,
//! PSD pencils are blocks of `S = Σ y_k F_k`, one-sided moment constraints
//! become `1×1` blocks and equalities (including `m_0 = 1`) rows of `E y = e`.

use nalgebra::{DMatrix, DVector};

use crate::exec::Execution;
use crate::problem::MomentRelation;
use crate::relax::SDPProblem;

/// A block `Σ_v y[vars[v]] F_v` with each `F_v` as its full symmetric entry list.
#[derive(Debug, Clone)]
pub(crate) struct Block {
    pub dim: usize,
    pub vars: Vec<usize>,
    pub entries: Vec<Vec<(u32, u32, f64)>>,
}

impl Block {
    fn from_upper(dim: usize, terms: &[(usize, Vec<(usize, usize, f64)>)]) -> Self {
        let mut vars = Vec::with_capacity(terms.len());
        let mut entries = Vec::with_capacity(terms.len());
        for (k, es) in terms {
            let mut full = Vec::with_capacity(2 * es.len());
            for &(i, j, c) in es {
                if c == 0.0 {
                    continue;
                }
                full.push((i as u32, j as u32, c));
                if i != j {
                    full.push((j as u32, i as u32, c));
                }
            }
            if !full.is_empty() {
                vars.push(*k);
                entries.push(full);
            }
        }
        Self { dim, vars, entries }
    }

    /// `Σ y_k F_k`.
    pub fn eval(&self, y: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        for (v, es) in self.vars.iter().zip(&self.entries) {
            let yv = y[*v];
            if yv == 0.0 {
                continue;
            }
            for &(p, q, c) in es {
                out[(p as usize, q as usize)] += c * yv;
            }
        }
        out
    }

    /// Adds `⟨F_k, H⟩` into `out[k]` for every variable of the block.
    pub fn adjoint_into(&self, h: &DMatrix<f64>, out: &mut [f64]) {
        for (v, es) in self.vars.iter().zip(&self.entries) {
            let mut s = 0.0;
            for &(p, q, c) in es {
                s += c * h[(p as usize, q as usize)];
            }
            out[*v] += s;
        }
    }
}

/// How a linear constraint of the problem is represented in the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum RowKind {
    /// Row of `E`; `None` if dropped as linearly dependent.
    Equality(Option<usize>),
    /// `1×1` block at this index, with the sign of `F` relative to the row.
    Inequality { block: usize, sign: f64 },
}

#[derive(Debug, Clone)]
pub(crate) struct Model {
    pub n: usize,
    pub c: DVector<f64>,
    pub blocks: Vec<Block>,
    pub e_mat: DMatrix<f64>,
    pub e_rhs: DVector<f64>,
    pub rows: Vec<RowKind>,
    /// For each variable, the `(block, local index)` pairs it appears in.
    pub occurrences: Vec<Vec<(usize, usize)>>,
}

impl Model {
    pub fn new(sdp: &SDPProblem) -> Self {
        let n = sdp.num_moments();
        let mut blocks: Vec<Block> = sdp
            .blocks
            .iter()
            .map(|b| Block::from_upper(b.dimension(), &b.terms))
            .collect();
        let mut rows = Vec::with_capacity(sdp.constraints.len());
        let mut eq: Vec<(usize, &[(usize, f64)], f64)> = Vec::new();
        for (i, c) in sdp.constraints.iter().enumerate() {
            match c.relation {
                MomentRelation::Eq => {
                    eq.push((i, &c.coeffs, c.rhs));
                    rows.push(RowKind::Equality(None));
                }
                rel => {
                    // Homogenized with m_0: sign·(Σ a_k m_k − rhs·m_0) ≥ 0.
                    let sign = if rel == MomentRelation::Ge { 1.0 } else { -1.0 };
                    let mut terms: Vec<(usize, Vec<(usize, usize, f64)>)> =
                        c.coeffs.iter().map(|&(k, a)| (k, vec![(0, 0, sign * a)])).collect();
                    terms.push((sdp.normalization_index, vec![(0, 0, -sign * c.rhs)]));
                    terms.sort_by_key(|t| t.0);
                    let mut merged: Vec<(usize, Vec<(usize, usize, f64)>)> = Vec::new();
                    for (k, e) in terms {
                        match merged.last_mut() {
                            Some(last) if last.0 == k => last.1[0].2 += e[0].2,
                            _ => merged.push((k, e)),
                        }
                    }
                    rows.push(RowKind::Inequality {
                        block: blocks.len(),
                        sign,
                    });
                    blocks.push(Block::from_upper(1, &merged));
                }
            }
        }

        let keep = independent_rows(n, &eq);
        let mut e_mat = DMatrix::zeros(keep.len(), n);
        let mut e_rhs = DVector::zeros(keep.len());
        for (r, &idx) in keep.iter().enumerate() {
            let (orig, coeffs, rhs) = eq[idx];
            for &(k, a) in coeffs {
                e_mat[(r, k)] += a;
            }
            e_rhs[r] = rhs;
            rows[orig] = RowKind::Equality(Some(r));
        }

        let mut occurrences = vec![Vec::new(); n];
        for (b, blk) in blocks.iter().enumerate() {
            for (a, &v) in blk.vars.iter().enumerate() {
                occurrences[v].push((b, a));
            }
        }
        let c = DVector::from_column_slice(&sdp.objective);
        Self {
            n,
            c,
            blocks,
            e_mat,
            e_rhs,
            rows,
            occurrences,
        }
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).sum()
    }

    /// `A*(H) = (⟨F_k, H⟩)_k` summed over blocks.
    pub fn adjoint(&self, h: &[DMatrix<f64>]) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        for (blk, hb) in self.blocks.iter().zip(h) {
            blk.adjoint_into(hb, out.as_mut_slice());
        }
        out
    }

    /// Schur complement `M_ij = Σ_b tr(F_i X_b F_j T_b)`, lower triangle only.
    pub fn schur(&self, x: &[DMatrix<f64>], t: &[DMatrix<f64>], exec: Execution) -> DMatrix<f64> {
        let n = self.n;
        let mut m = DMatrix::zeros(n, n);
        exec.for_each_chunk_mut(m.as_mut_slice(), n, |i, col| {
            for &(b, a) in &self.occurrences[i] {
                let blk = &self.blocks[b];
                let xb = &x[b];
                let tb = &t[b];
                let dim = blk.dim;
                let xs = xb.as_slice();
                let ts = tb.as_slice();
                let fi = &blk.entries[a];
                for (bj, fj) in blk.entries.iter().enumerate().skip(a) {
                    let j = blk.vars[bj];
                    // tr(F_i X F_j T) = Σ F_i[p,q] X[q,r] F_j[r,s] T[s,p]; X and T
                    // are symmetric, so both reads walk down a column.
                    let mut s = 0.0;
                    for &(p, q, ci) in fi {
                        let xq = &xs[dim * q as usize..dim * (q as usize + 1)];
                        let tp = &ts[dim * p as usize..dim * (p as usize + 1)];
                        let mut inner = 0.0;
                        for &(r, ss, cj) in fj {
                            inner += cj * xq[r as usize] * tp[ss as usize];
                        }
                        s += ci * inner;
                    }
                    col[j] += s;
                }
            }
        });
        m
    }
}

// Greedy selection of linearly independent equality rows by Gram-Schmidt,
// in the given order.
fn independent_rows(n: usize, eq: &[(usize, &[(usize, f64)], f64)]) -> Vec<usize> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut keep = Vec::new();
    for (idx, (_, coeffs, _)) in eq.iter().enumerate() {
        let mut v = DVector::zeros(n);
        for &(k, a) in coeffs.iter() {
            v[k] += a;
        }
        let norm0 = v.norm();
        if norm0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for b in &basis {
                let d = b.dot(&v);
                v.axpy(-d, b, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-9 * norm0 {
            basis.push(v / norm);
            keep.push(idx);
        }
    }
    keep
}
