//! Order-`τ` moment relaxation of a [`LiftedProblem`] as an SDP in the moments.
//!
//! The relaxation is
//!
//! ```text
//! maximize    Σ h_α m_α
//! subject to  m_0 = 1,  Σ f̃_{i,α} m_α (=|≤|≥) μ_i,
//!             M_τ(m) ⪰ 0,  M_{τ-⌈deg q_j/2⌉}(q_j m) ⪰ 0.
//! ```
//!
//! By default the variables are rescaled internally (`z = s ⊙ z'`, with `s`
//! taken from variable bounds) before assembly. The optimal value does not
//! change; the conditioning of the SDP does. Moment vectors crossing the API
//! are always in the original coordinates.

use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::moments::{localizing_matrix_form, moment_matrix_form, shared_basis, LinearMatrixForm, MomentError, MomentVector};
use crate::poly::{MonomialBasis, Polynomial};
use crate::problem::{minimal_order, LiftedProblem, MomentRelation};
use crate::sets::Relation;

pub use crate::sdp::{SDPSolution, SolverStatus};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RelaxError {
    #[error("relaxation order {order} is below the minimal order {minimal}")]
    OrderTooLow { order: usize, minimal: usize },
    #[error(transparent)]
    Moment(#[from] MomentError),
}

/// How `q(z) = 0` constraints of the support enter the relaxation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum EqualityEncoding {
    /// Two localizing blocks, for `q ≥ 0` and `-q ≥ 0`.
    InequalityPair,
    /// Linear constraints `L_m(q z^β) = 0` for every `|β| ≤ 2(τ - ⌈deg q/2⌉)`,
    /// i.e. the localizing matrix of `q` is zero.
    #[default]
    ZeroLocalizer,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxOptions {
    pub encoding: EqualityEncoding,
    /// Rescale variables to unit bounds before assembly.
    pub rescale: bool,
    /// Drop polynomial coefficients with magnitude below this (0 = off).
    pub prune_eps: f64,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self {
            encoding: EqualityEncoding::default(),
            rescale: true,
            prune_eps: 0.0,
        }
    }
}

/// `Σ_k coeffs_k m_k (=|≤|≥) rhs`, sparse over moment indices.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub label: String,
    pub coeffs: Vec<(usize, f64)>,
    pub relation: MomentRelation,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn eval(&self, m: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(k, c)| c * m[k]).sum()
    }

    /// Amount by which `m` violates the constraint (0 when satisfied).
    pub fn violation(&self, m: &[f64]) -> f64 {
        let v = self.eval(m) - self.rhs;
        match self.relation {
            MomentRelation::Eq => v.abs(),
            MomentRelation::Le => v.max(0.0),
            MomentRelation::Ge => (-v).max(0.0),
        }
    }
}

/// One PSD constraint `Σ_k C_k m_k ⪰ 0`.
#[derive(Debug, Clone)]
pub struct PsdBlock {
    pub label: String,
    pub form: Arc<LinearMatrixForm>,
    /// `(moment index, upper-triangular entries of C_k)`, ascending in the index.
    pub terms: Vec<(usize, Vec<(usize, usize, f64)>)>,
}

impl PsdBlock {
    fn new(label: String, form: Arc<LinearMatrixForm>, basis: &MonomialBasis) -> Result<Self, RelaxError> {
        let mut terms = Vec::with_capacity(form.num_terms());
        for (alpha, entries) in form.terms() {
            let k = basis.index_of(alpha).map_err(|_| MomentError::OrderTooLow {
                have: basis.order() / 2,
                need: alpha.degree(),
            })?;
            terms.push((k, entries.to_vec()));
        }
        terms.sort_by_key(|t| t.0);
        Ok(Self { label, form, terms })
    }

    pub fn dimension(&self) -> usize {
        self.form.dimension()
    }

    /// Dense `Σ_k C_k m_k`.
    pub fn assemble(&self, m: &[f64]) -> DMatrix<f64> {
        let d = self.dimension();
        let mut out = DMatrix::zeros(d, d);
        for (k, entries) in &self.terms {
            for &(i, j, c) in entries {
                out[(i, j)] += c * m[*k];
            }
        }
        for i in 0..d {
            for j in 0..i {
                out[(i, j)] = out[(j, i)];
            }
        }
        out
    }
}

/// The assembled relaxation, in internal (possibly rescaled) coordinates.
#[derive(Debug, Clone)]
pub struct SDPProblem {
    pub z_vars: Vec<String>,
    pub order: usize,
    pub basis: Arc<MonomialBasis>,
    /// Objective coefficients `h_α`, maximized.
    pub objective: Vec<f64>,
    /// Normalization first, then the moment constraints, then any zero-localizer rows.
    pub constraints: Vec<LinearConstraint>,
    pub blocks: Vec<PsdBlock>,
    pub normalization_index: usize,
    /// Internal coordinates are `z' = z / scales`.
    pub scales: Vec<f64>,
    pub encoding: EqualityEncoding,
}

impl SDPProblem {
    pub fn num_vars(&self) -> usize {
        self.z_vars.len()
    }

    pub fn num_moments(&self) -> usize {
        self.basis.len()
    }

    fn moment_scales(&self) -> Vec<f64> {
        self.basis
            .elements()
            .iter()
            .map(|a| a.eval(&self.scales))
            .collect()
    }

    /// Converts original-coordinate moments to the internal ones.
    pub fn to_internal(&self, m: &MomentVector) -> Result<Vec<f64>, RelaxError> {
        let n = self.num_moments();
        if m.num_vars() != self.num_vars() || m.len() < n {
            return Err(MomentError::OrderTooLow {
                have: m.order(),
                need: 2 * self.order as u32,
            }
            .into());
        }
        Ok(m.values()[..n]
            .iter()
            .zip(self.moment_scales())
            .map(|(v, s)| v / s)
            .collect())
    }

    /// Converts internal moments back to the original coordinates.
    pub fn from_internal(&self, y: &[f64]) -> MomentVector {
        let values = y.iter().zip(self.moment_scales()).map(|(v, s)| v * s).collect();
        MomentVector::new(self.num_vars(), self.order, values).expect("length matches basis")
    }

    pub fn objective_value(&self, y: &[f64]) -> f64 {
        self.objective.iter().zip(y).map(|(c, v)| c * v).sum()
    }

    /// Largest linear-constraint violation and most negative block eigenvalue
    /// (as a nonnegative number) at internal moments `y`.
    pub fn infeasibility(&self, y: &[f64]) -> (f64, f64) {
        let lin = self
            .constraints
            .iter()
            .map(|c| c.violation(y))
            .fold(0.0, f64::max);
        let psd = self
            .blocks
            .iter()
            .map(|b| (-b.assemble(y).symmetric_eigenvalues().min()).max(0.0))
            .fold(0.0, f64::max);
        (lin, psd)
    }

    /// Writes the SDP in the plain-text export format (see [`write_sdp`]).
    pub fn export(&self, out: &mut dyn Write) -> io::Result<()> {
        write_sdp(self, out)
    }
}

/// Size summary of an assembled relaxation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemStats {
    pub num_vars: usize,
    pub order: usize,
    pub num_moments: usize,
    pub block_dims: Vec<usize>,
    pub largest_block: usize,
    pub equality_constraints: usize,
    pub inequality_constraints: usize,
}

impl fmt::Display for ProblemStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "variables n_z      {}", self.num_vars)?;
        writeln!(f, "order tau          {}", self.order)?;
        writeln!(f, "moments N          {}", self.num_moments)?;
        writeln!(f, "psd blocks         {}", self.block_dims.len())?;
        writeln!(f, "largest block      {}", self.largest_block)?;
        writeln!(f, "equalities         {}", self.equality_constraints)?;
        write!(f, "inequalities       {}", self.inequality_constraints)
    }
}

pub fn problem_stats(sdp: &SDPProblem) -> ProblemStats {
    let block_dims: Vec<usize> = sdp.blocks.iter().map(|b| b.dimension()).collect();
    let eq = sdp
        .constraints
        .iter()
        .filter(|c| c.relation == MomentRelation::Eq)
        .count();
    ProblemStats {
        num_vars: sdp.num_vars(),
        order: sdp.order,
        num_moments: sdp.num_moments(),
        largest_block: block_dims.iter().copied().max().unwrap_or(0),
        block_dims,
        equality_constraints: eq,
        inequality_constraints: sdp.constraints.len() - eq,
    }
}

/// Per-variable scales: the largest bound magnitude where bounds are known.
fn variable_scales(lifted: &LiftedProblem) -> Vec<f64> {
    let bounds = lifted.support.variable_bounds();
    let mut s: Vec<f64> = bounds
        .iter()
        .map(|b| match b {
            Some((lo, hi)) => lo.abs().max(hi.abs()),
            None => 1.0,
        })
        .collect();
    if let Some(r) = lifted.lambda_radius {
        s[lifted.layout.lambda_re] = r;
        if let Some(im) = lifted.layout.lambda_im {
            s[im] = r;
        }
    }
    for i in lifted.layout.x_re.clone().chain(lifted.layout.x_im.clone().unwrap_or(0..0)) {
        s[i] = 1.0;
    }
    for v in &mut s {
        if !(v.is_finite() && *v > 0.0) {
            *v = 1.0;
        }
    }
    s
}

fn normalized(p: &Polynomial) -> Polynomial {
    let big = p.terms().map(|(_, c)| c.abs()).fold(0.0, f64::max);
    if big > 0.0 {
        p.scale(1.0 / big)
    } else {
        p.clone()
    }
}

fn sparse_row(p: &Polynomial, basis: &MonomialBasis, order: usize) -> Result<Vec<(usize, f64)>, RelaxError> {
    let mut row = Vec::with_capacity(p.num_terms());
    for (a, c) in p.terms() {
        let k = basis.index_of(a).map_err(|_| MomentError::OrderTooLow {
            have: order,
            need: a.degree(),
        })?;
        row.push((k, c));
    }
    row.sort_by_key(|e| e.0);
    Ok(row)
}

/// Assembles the order-`order` relaxation with default options.
pub fn assemble_relaxation(lifted: &LiftedProblem, order: usize) -> Result<SDPProblem, RelaxError> {
    assemble_relaxation_with(lifted, order, RelaxOptions::default())
}

pub fn assemble_relaxation_with(
    lifted: &LiftedProblem,
    order: usize,
    opts: RelaxOptions,
) -> Result<SDPProblem, RelaxError> {
    let minimal = minimal_order(lifted);
    if order < minimal {
        return Err(RelaxError::OrderTooLow { order, minimal });
    }
    let nz = lifted.num_vars();
    let basis = shared_basis(nz, 2 * order);
    let scales = if opts.rescale {
        variable_scales(lifted)
    } else {
        vec![1.0; nz]
    };
    let prep = |p: &Polynomial| {
        let q = p.rescale_vars(&scales);
        if opts.prune_eps > 0.0 {
            q.prune(opts.prune_eps)
        } else {
            q
        }
    };

    let objective_poly = prep(&lifted.objective);
    let mut objective = vec![0.0; basis.len()];
    for (k, c) in sparse_row(&objective_poly, &basis, order)? {
        objective[k] += c;
    }

    let mut constraints = Vec::new();
    for (i, mc) in lifted.moment_constraints.iter().enumerate() {
        let label = if i == 0 {
            "normalization".to_string()
        } else {
            format!("moment {i}")
        };
        constraints.push(LinearConstraint {
            label,
            coeffs: sparse_row(&prep(&mc.f), &basis, order)?,
            relation: mc.relation,
            rhs: mc.target,
        });
    }
    // The normalization is always the first row and exactly m_0 = 1.
    constraints[0].coeffs = vec![(0, 1.0)];
    constraints[0].rhs = 1.0;

    let mut blocks = vec![PsdBlock::new("moment".into(), moment_matrix_form(nz, order), &basis)?];
    for (j, c) in lifted.support.constraints().iter().enumerate() {
        let q = normalized(&prep(&c.poly));
        let half = c.poly.degree().div_ceil(2) as usize;
        let sub = order - half;
        match (c.relation, opts.encoding) {
            (Relation::GreaterEqualZero, _) => {
                blocks.push(PsdBlock::new(
                    format!("q{}", j + 1),
                    localizing_matrix_form(&q, nz, sub),
                    &basis,
                )?);
            }
            (Relation::EqualZero, EqualityEncoding::InequalityPair) => {
                blocks.push(PsdBlock::new(
                    format!("q{}+", j + 1),
                    localizing_matrix_form(&q, nz, sub),
                    &basis,
                )?);
                blocks.push(PsdBlock::new(
                    format!("q{}-", j + 1),
                    localizing_matrix_form(&-&q, nz, sub),
                    &basis,
                )?);
            }
            (Relation::EqualZero, EqualityEncoding::ZeroLocalizer) => {
                let shifts = shared_basis(nz, 2 * sub);
                for (b, beta) in shifts.elements().iter().enumerate() {
                    let shifted = &q * &Polynomial::monomial(beta.clone(), 1.0);
                    constraints.push(LinearConstraint {
                        label: format!("q{}·z^{b}", j + 1),
                        coeffs: sparse_row(&shifted, &basis, order)?,
                        relation: MomentRelation::Eq,
                        rhs: 0.0,
                    });
                }
            }
        }
    }

    Ok(SDPProblem {
        z_vars: lifted.z_vars.clone(),
        order,
        basis,
        objective,
        constraints,
        blocks,
        normalization_index: 0,
        scales,
        encoding: opts.encoding,
    })
}

/// Plain-text export:
///
/// ```text
/// dstab-sdp 1
/// vars <n_z> order <τ> moments <N> constraints <K> blocks <B>
/// scales <s_1> ... <s_nz>
/// basis
/// <k> <α_1> ... <α_nz>          (N lines)
/// objective <nnz>
/// <k> <h_k>
/// constraint <i> <=|<=|>=> <rhs> <nnz> <label>
/// <k> <coef>
/// block <b> <dim> <nterms> <label>
/// <k> <row> <col> <coef>       (upper triangle, 0-based)
/// ```
///
/// The problem is: maximize `Σ h_k m_k` subject to the constraints and every
/// block `Σ_k C_k m_k ⪰ 0`, in internal coordinates `m_k`.
pub fn write_sdp(sdp: &SDPProblem, out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "dstab-sdp 1")?;
    writeln!(
        out,
        "vars {} order {} moments {} constraints {} blocks {}",
        sdp.num_vars(),
        sdp.order,
        sdp.num_moments(),
        sdp.constraints.len(),
        sdp.blocks.len()
    )?;
    let scales: Vec<String> = sdp.scales.iter().map(|s| format!("{s:e}")).collect();
    writeln!(out, "scales {}", scales.join(" "))?;
    writeln!(out, "basis")?;
    for (k, a) in sdp.basis.elements().iter().enumerate() {
        let e: Vec<String> = a.as_slice().iter().map(|x| x.to_string()).collect();
        writeln!(out, "{k} {}", e.join(" "))?;
    }
    let nnz: Vec<(usize, f64)> = sdp
        .objective
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, c)| *c != 0.0)
        .collect();
    writeln!(out, "objective {}", nnz.len())?;
    for (k, c) in nnz {
        writeln!(out, "{k} {c:e}")?;
    }
    for (i, c) in sdp.constraints.iter().enumerate() {
        writeln!(
            out,
            "constraint {i} {} {:e} {} {}",
            c.relation.symbol(),
            c.rhs,
            c.coeffs.len(),
            c.label
        )?;
        for &(k, v) in &c.coeffs {
            writeln!(out, "{k} {v:e}")?;
        }
    }
    for (b, blk) in sdp.blocks.iter().enumerate() {
        let nterms: usize = blk.terms.iter().map(|t| t.1.len()).sum();
        writeln!(out, "block {b} {} {nterms} {}", blk.dimension(), blk.label)?;
        for (k, entries) in &blk.terms {
            for &(i, j, c) in entries {
                writeln!(out, "{k} {i} {j} {c:e}")?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::moments_of_atomic;
    use crate::poly::ExponentVector;
    use crate::problem::{build_lifted, DStabilityProblem, MomentConstraint, UncertainMatrix};
    use crate::sets::{box_set, region_preset, RegionPreset};

    fn running(mean: bool) -> LiftedProblem {
        let vars = vec!["rho".to_string()];
        let a = UncertainMatrix::parse(vars.clone(), 2, &["rho - 1", "0", "0", "-1"]).unwrap();
        let d = box_set(vars, &[0.0], &[1.0]).unwrap();
        let mut p = DStabilityProblem::new(a, d, region_preset(RegionPreset::LeftHalfPlaneClosure)).unwrap();
        if mean {
            p = p
                .with_moment(MomentConstraint::new(Polynomial::var(1, 0), MomentRelation::Eq, 0.5))
                .unwrap();
        }
        build_lifted(&p).unwrap()
    }

    #[test]
    fn running_example_structure() {
        let l = running(true);
        let pair = RelaxOptions {
            encoding: EqualityEncoding::InequalityPair,
            ..Default::default()
        };
        let sdp = assemble_relaxation_with(&l, 2, pair).unwrap();
        assert_eq!(sdp.num_moments(), 70);
        let idx = |e: [u32; 4]| sdp.basis.index_of(&ExponentVector::new(e.to_vec())).unwrap();
        let nz: Vec<(usize, f64)> = sdp
            .objective
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, c)| *c != 0.0)
            .collect();
        assert_eq!(nz, vec![(idx([0, 0, 2, 0]), 1.0), (idx([0, 0, 0, 2]), 1.0)]);
        assert_eq!(sdp.constraints.len(), 2);
        assert_eq!(sdp.constraints[0].coeffs, vec![(0, 1.0)]);
        assert_eq!(sdp.constraints[1].coeffs, vec![(idx([1, 0, 0, 0]), 1.0)]);
        assert_eq!(sdp.constraints[1].rhs, 0.5);
        // moment block + 5 inequalities + 2 equalities as pairs.
        assert_eq!(sdp.blocks.len(), 1 + 5 + 4);
        assert_eq!(sdp.blocks[0].dimension(), 15);
        let stats = problem_stats(&sdp);
        assert_eq!(stats.num_moments, 70);
        assert_eq!(stats.largest_block, 15);
        // Degree-two localizers get order one: dimension 5.
        assert!(sdp.blocks[1..].iter().all(|b| b.dimension() == 5));
    }

    #[test]
    fn support_only_drops_mean_row() {
        let pair = RelaxOptions {
            encoding: EqualityEncoding::InequalityPair,
            ..Default::default()
        };
        let sdp = assemble_relaxation_with(&running(false), 2, pair).unwrap();
        assert_eq!(sdp.constraints.len(), 1);
    }

    #[test]
    fn zero_localizer_rows() {
        // Two degree-two equalities, each zeroing all moments of degree ≤ 2
        // of q·z^β: binomial(6, 2) = 15 rows apiece.
        let sdp = assemble_relaxation(&running(true), 2).unwrap();
        assert_eq!(sdp.encoding, EqualityEncoding::ZeroLocalizer);
        assert_eq!(sdp.constraints.len(), 2 + 2 * 15);
        assert_eq!(sdp.blocks.len(), 1 + 5);
        assert!(sdp.constraints[2..].iter().all(|c| c.relation == MomentRelation::Eq && c.rhs == 0.0));
    }

    #[test]
    fn order_checked() {
        let l = running(false);
        assert_eq!(
            assemble_relaxation(&l, 0).unwrap_err(),
            RelaxError::OrderTooLow { order: 0, minimal: 1 }
        );
    }

    #[test]
    fn stats_for_small_sizes() {
        let vars = vec!["a".to_string()];
        let a = UncertainMatrix::parse(vars.clone(), 1, &["a"]).unwrap();
        let d = box_set(vars, &[-1.0], &[-0.5]).unwrap();
        let p = DStabilityProblem::new(a, d, region_preset(RegionPreset::LeftHalfPlaneClosure)).unwrap();
        let sdp = assemble_relaxation(&build_lifted(&p).unwrap(), 1).unwrap();
        let s = problem_stats(&sdp);
        assert_eq!(s.num_vars, 3);
        assert_eq!(s.num_moments, 10);
        assert_eq!(s.largest_block, 4);
    }

    #[test]
    fn feasibility_transfer_for_an_atom() {
        let l = running(true);
        for enc in [EqualityEncoding::InequalityPair, EqualityEncoding::ZeroLocalizer] {
            let opts = RelaxOptions {
                encoding: enc,
                ..Default::default()
            };
            let sdp = assemble_relaxation_with(&l, 2, opts).unwrap();
            // 0.5 δ(ρ=0, λ=0, x=0) + 0.5 δ(ρ=1, λ=0, x=(1,0)).
            let m = moments_of_atomic(
                &[vec![0.0, 0.0, 0.0, 0.0], vec![1.0, 0.0, 1.0, 0.0]],
                &[0.5, 0.5],
                4,
                2,
            )
            .unwrap();
            let y = sdp.to_internal(&m).unwrap();
            let (lin, psd) = sdp.infeasibility(&y);
            assert!(lin <= 1e-12 && psd <= 1e-12, "{enc:?}: {lin} {psd}");
            assert!((sdp.objective_value(&y) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn rescaling_round_trips() {
        let vars = vec!["rho".to_string()];
        let a = UncertainMatrix::parse(vars.clone(), 2, &["-2.4 - rho^2", "6 - rho^2", "1 - 2*rho^2", "-2.9 - 2*rho"])
            .unwrap();
        let d = box_set(vars, &[-0.1], &[3.4]).unwrap();
        let p = DStabilityProblem::new(a, d, region_preset(RegionPreset::LeftHalfPlaneClosure)).unwrap();
        let l = build_lifted(&p).unwrap();
        let sdp = assemble_relaxation(&l, 2).unwrap();
        assert_eq!(sdp.scales[0], 3.4);
        assert!(sdp.scales[1] > 1.0);
        let m = moments_of_atomic(&[vec![1.5, 0.3, -0.2, 0.1, 0.2, 0.3, 0.4]], &[1.0], 7, 2).unwrap();
        let back = sdp.from_internal(&sdp.to_internal(&m).unwrap());
        for (a, b) in back.values().iter().zip(m.values()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn export_has_header_and_sections() {
        let sdp = assemble_relaxation(&running(true), 1).unwrap();
        let mut buf = Vec::new();
        sdp.export(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("dstab-sdp 1"));
        assert!(lines.next().unwrap().starts_with("vars 4 order 1 moments 15"));
        assert!(text.contains("\nobjective 2\n"));
        assert_eq!(text.matches("\nblock ").count(), sdp.blocks.len());
    }
}
