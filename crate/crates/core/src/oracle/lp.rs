//! Dense two-phase simplex with Bland's rule.

use crate::problem::MomentRelation;

const EPS: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

/// One row `a·x (=|≤|≥) b`.
pub(crate) struct Row {
    pub a: Vec<f64>,
    pub relation: MomentRelation,
    pub b: f64,
}

struct Tableau {
    /// `rows × (cols + 1)`, the last column holding the right-hand side.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    fn reduced_cost(&self, obj: &[f64], j: usize) -> f64 {
        obj[j]
            - self
                .basis
                .iter()
                .zip(&self.t)
                .map(|(&b, row)| obj[b] * row[j])
                .sum::<f64>()
    }

    fn value(&self, obj: &[f64]) -> f64 {
        self.basis
            .iter()
            .zip(&self.t)
            .map(|(&b, row)| obj[b] * row[self.cols])
            .sum()
    }

    /// Maximizes `obj·x` over the columns marked `allowed`. Returns false if unbounded.
    fn optimize(&mut self, obj: &[f64], allowed: &[bool]) -> bool {
        loop {
            let entering = (0..self.cols).find(|&j| allowed[j] && self.reduced_cost(obj, j) > EPS);
            let Some(c) = entering else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.t.iter().enumerate() {
                if row[c] > EPS {
                    let ratio = row[self.cols] / row[c];
                    let better = match leave {
                        None => true,
                        Some((l, best)) => {
                            ratio < best - EPS || (ratio <= best + EPS && self.basis[i] < self.basis[l])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, c),
                None => return false,
            }
        }
    }
}

/// Maximizes `c·x` subject to `rows`, `x ≥ 0`.
pub(crate) fn maximize(c: &[f64], rows: &[Row]) -> LpOutcome {
    let n = c.len();
    let m = rows.len();
    let slacks = rows.iter().filter(|r| r.relation != MomentRelation::Eq).count();
    let cols = n + slacks + m;
    let art0 = n + slacks;
    let mut t = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut next_slack = n;
    for (i, row) in rows.iter().enumerate() {
        let flip = if row.b < 0.0 { -1.0 } else { 1.0 };
        let mut line = vec![0.0; cols + 1];
        for (j, a) in row.a.iter().enumerate() {
            line[j] = flip * a;
        }
        line[cols] = flip * row.b;
        let slack_sign = match row.relation {
            MomentRelation::Le => Some(1.0),
            MomentRelation::Ge => Some(-1.0),
            MomentRelation::Eq => None,
        };
        if let Some(s) = slack_sign {
            line[next_slack] = flip * s;
            next_slack += 1;
        }
        // Every row starts on its artificial; phase one prices them out.
        line[art0 + i] = 1.0;
        basis.push(art0 + i);
        t.push(line);
    }
    let mut tab = Tableau { t, basis, cols };

    let mut phase1 = vec![0.0; cols];
    phase1[art0..].iter_mut().for_each(|v| *v = -1.0);
    let all = vec![true; cols];
    tab.optimize(&phase1, &all);
    let scale = 1.0 + rows.iter().map(|r| r.b.abs()).fold(0.0, f64::max);
    if tab.value(&phase1) < -1e-9 * scale {
        return LpOutcome::Infeasible;
    }
    // Drive zero-valued artificials out of the basis where possible.
    for r in 0..m {
        if tab.basis[r] >= art0 {
            if let Some(c) = (0..art0).find(|&j| tab.t[r][j].abs() > 1e-9) {
                tab.pivot(r, c);
            }
        }
    }

    let mut obj = vec![0.0; cols];
    obj[..n].copy_from_slice(c);
    let allowed: Vec<bool> = (0..cols).map(|j| j < art0).collect();
    if !tab.optimize(&obj, &allowed) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![0.0; n];
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.t[r][cols].max(0.0);
        }
    }
    let value = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    LpOutcome::Optimal { x, value }
}

#[cfg(test)]
mod tests {
    use super::*;
    use MomentRelation::*;

    fn row(a: &[f64], relation: MomentRelation, b: f64) -> Row {
        Row {
            a: a.to_vec(),
            relation,
            b,
        }
    }

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36.
        let rows = [row(&[1.0, 0.0], Le, 4.0), row(&[0.0, 2.0], Le, 12.0), row(&[3.0, 2.0], Le, 18.0)];
        let LpOutcome::Optimal { x, value } = maximize(&[3.0, 5.0], &rows) else {
            panic!()
        };
        assert!((value - 36.0).abs() < 1e-12);
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn equality_and_ge_rows() {
        // max w2 s.t. w0+w1+w2 = 1, 0.5 w1 + w2 = 0.5.
        let rows = [row(&[1.0, 1.0, 1.0], Eq, 1.0), row(&[0.0, 0.5, 1.0], Eq, 0.5)];
        let LpOutcome::Optimal { x, value } = maximize(&[0.0, 0.0, 1.0], &rows) else {
            panic!()
        };
        assert!((value - 0.5).abs() < 1e-12);
        assert!((x[0] - 0.5).abs() < 1e-12 && x[1].abs() < 1e-12);
        let rows = [row(&[1.0, 1.0], Ge, 2.0), row(&[1.0, 0.0], Le, 1.0)];
        let LpOutcome::Optimal { value, .. } = maximize(&[-1.0, -1.0], &rows) else {
            panic!()
        };
        assert!((value + 2.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let rows = [row(&[1.0], Eq, 1.0), row(&[1.0], Eq, 2.0)];
        assert_eq!(maximize(&[1.0], &rows), LpOutcome::Infeasible);
        let rows = [row(&[1.0, -1.0], Le, 1.0)];
        assert_eq!(maximize(&[0.0, 1.0], &rows), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_equalities() {
        let rows = [row(&[1.0, 1.0], Eq, 1.0), row(&[2.0, 2.0], Eq, 2.0), row(&[-1.0, 0.0], Le, -0.25)];
        let LpOutcome::Optimal { x, value } = maximize(&[0.0, 1.0], &rows) else {
            panic!()
        };
        assert!((value - 0.75).abs() < 1e-12 && (x[0] - 0.25).abs() < 1e-12);
    }
}
