//! Brute-force checks that do not go through the moment relaxation: dense
//! spectra on a grid over `Δ`, and a linear program over atomic measures.
//!
//! A witness found here proves violability (so `p̄ = 1` in the support-only
//! case); the LP value is a lower bound on `p̄`. Grids can miss thin
//! violation sets, so neither ever proves stability.

mod eigen;
mod lp;

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::exec::Execution;
use crate::problem::{DStabilityProblem, EigenSpace};
use crate::sets::{Relation, SemialgebraicSet};

pub use eigen::{eigen_residual, eigenvalues, MAX_DIMENSION};

/// Region membership tolerance: eigenvalues on the boundary of `D^c` violate.
pub const VIOLATION_TOL: f64 = 1e-9;
/// Upper limit on the number of candidate points of one search.
pub const MAX_GRID_POINTS: usize = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix dimension {0} exceeds the dense eigensolver limit")]
    TooLarge(usize),
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("QR iteration did not converge for a {0}x{0} matrix")]
    NoConvergence(usize),
    #[error("grid needs at least one point per axis")]
    EmptyGrid,
    #[error("grid of {0} points exceeds the limit")]
    GridTooLarge(f64),
    #[error("the uncertainty set has no bounding box; cannot grid it")]
    UnboundedDelta,
    #[error("atom {index} has {got} coordinates, expected {expected}")]
    AtomDimension { index: usize, expected: usize, got: usize },
    #[error("atom {0} lies outside the uncertainty set")]
    AtomOutsideDelta(usize),
    #[error("no atoms given")]
    NoAtoms,
    #[error("moment constraints cannot be met by a measure on these atoms")]
    LpInfeasible,
    #[error("atomic LP is unbounded")]
    LpUnbounded,
}

/// A point of `Δ` where `A(ρ)` has an eigenvalue in `D^c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolationWitness {
    pub rho: Vec<f64>,
    pub lambda: Complex<f64>,
    /// Depth of `λ` inside `D^c` (minimum constraint slack, ≥ −1e-9).
    pub min_region_residual: f64,
    /// `‖(A(ρ) − λI)v‖` for the best unit vector `v`.
    pub eig_residual: f64,
    /// Grid index of `rho` (lowest wins ties).
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    pub points_per_axis: usize,
    /// Seed for rejection sampling when `Δ` is not a box.
    pub seed: u64,
    pub execution: Execution,
}

impl GridOptions {
    pub fn new(points_per_axis: usize) -> Self {
        Self {
            points_per_axis,
            seed: 0,
            execution: Execution::default(),
        }
    }
}

/// Candidate points over `Δ`. A box gets the tensor grid with
/// `points_per_axis` evenly spaced values per axis (row-major, last variable
/// fastest); any other set gets the same number of uniform samples from its
/// bounding box, filtered by membership.
pub fn grid_points(delta: &SemialgebraicSet, opts: &GridOptions) -> Result<Vec<Vec<f64>>, OracleError> {
    let k = opts.points_per_axis;
    if k == 0 {
        return Err(OracleError::EmptyGrid);
    }
    let bounds = delta.bounding_box().ok_or(OracleError::UnboundedDelta)?;
    let d = bounds.len();
    let total = (k as f64).powi(d as i32);
    if total > MAX_GRID_POINTS as f64 {
        return Err(OracleError::GridTooLarge(total));
    }
    let total = total as usize;
    let axis = |i: usize, j: usize| {
        let (lo, hi) = bounds[i];
        if k == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * j as f64 / (k - 1) as f64
        }
    };
    if is_box(delta) {
        return Ok((0..total)
            .map(|mut idx| {
                let mut p = vec![0.0; d];
                for i in (0..d).rev() {
                    p[i] = axis(i, idx % k);
                    idx /= k;
                }
                p
            })
            .collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut out = Vec::new();
    for _ in 0..total {
        let p: Vec<f64> = bounds
            .iter()
            .map(|&(lo, hi)| if hi > lo { rng.random_range(lo..=hi) } else { lo })
            .collect();
        if delta.depth(&p) >= -VIOLATION_TOL {
            out.push(p);
        }
    }
    Ok(out)
}

// Every constraint is a bound on a single variable.
fn is_box(delta: &SemialgebraicSet) -> bool {
    delta.constraints().iter().all(|c| {
        c.relation == Relation::GreaterEqualZero
            && c.poly.degree() <= 1
            && c.poly.terms().filter(|(a, _)| !a.is_zero()).count() == 1
    })
}

/// The eigenvalues the problem cares about at `rho`: all of them, or only
/// the real ones when a real eigen-space was forced on a non-symmetric matrix.
pub fn spectrum_at(problem: &DStabilityProblem, rho: &[f64]) -> Result<(DMatrix<f64>, Vec<Complex<f64>>), OracleError> {
    let a = problem.matrix().eval(rho);
    let mut eig = eigenvalues(&a)?;
    if problem.eigen_space() == EigenSpace::Real && !problem.matrix().is_symmetric() {
        let tol = 1e-9 * (1.0 + a.norm());
        eig.retain(|l| l.im.abs() <= tol);
        eig.iter_mut().for_each(|l| l.im = 0.0);
    } else if problem.eigen_space() == EigenSpace::Real {
        eig.iter_mut().for_each(|l| l.im = 0.0);
    }
    Ok((a, eig))
}

/// The deepest eigenvalue of `A(rho)` in `D^c`, if any lies within the tolerance.
pub fn point_violation(problem: &DStabilityProblem, rho: &[f64]) -> Result<Option<ViolationWitness>, OracleError> {
    let (a, eig) = spectrum_at(problem, rho)?;
    let region = problem.region();
    let best = eig
        .iter()
        .map(|&l| (region.depth(l.re, l.im), l))
        .filter(|(d, _)| *d >= -VIOLATION_TOL)
        .fold(None::<(f64, Complex<f64>)>, |acc, cur| match acc {
            Some(b) if b.0 >= cur.0 => Some(b),
            _ => Some(cur),
        });
    Ok(best.map(|(depth, lambda)| ViolationWitness {
        rho: rho.to_vec(),
        lambda,
        min_region_residual: depth,
        eig_residual: eigen_residual(&a, lambda),
        index: 0,
    }))
}

/// Scans [`grid_points`] for eigenvalues in `D^c` and returns the deepest
/// witness, lowest grid index on ties.
pub fn grid_violation_search(
    problem: &DStabilityProblem,
    opts: &GridOptions,
) -> Result<Option<ViolationWitness>, OracleError> {
    let points = grid_points(problem.delta(), opts)?;
    let found = opts.execution.map(points.len(), |i| point_violation(problem, &points[i]));
    let mut best: Option<ViolationWitness> = None;
    for (i, w) in found.into_iter().enumerate() {
        if let Some(mut w) = w? {
            if best.as_ref().is_none_or(|b| w.min_region_residual > b.min_region_residual) {
                w.index = i;
                best = Some(w);
            }
        }
    }
    Ok(best)
}

/// Largest real part of the spectrum over the grid, with its point (lowest
/// index on ties).
pub fn grid_max_real_part(problem: &DStabilityProblem, opts: &GridOptions) -> Result<(Vec<f64>, f64), OracleError> {
    let points = grid_points(problem.delta(), opts)?;
    let vals = opts.execution.map(points.len(), |i| {
        spectrum_at(problem, &points[i]).map(|(_, e)| e.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max))
    });
    let mut best = (usize::MAX, f64::NEG_INFINITY);
    for (i, v) in vals.into_iter().enumerate() {
        let v = v?;
        if best.0 == usize::MAX || v > best.1 {
            best = (i, v);
        }
    }
    if best.0 == usize::MAX {
        return Err(OracleError::EmptyGrid);
    }
    Ok((points[best.0].clone(), best.1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomicLPResult {
    pub atoms: Vec<Vec<f64>>,
    /// Whether `A(atom)` has an eigenvalue in `D^c`.
    pub violating: Vec<bool>,
    pub weights: Vec<f64>,
    /// Mass on violating atoms: a lower bound on `p̄`.
    pub lower_bound: f64,
}

/// Best violation probability over probability measures supported on
/// `atoms` that satisfy the problem's moment constraints.
pub fn atomic_lp_bound(problem: &DStabilityProblem, atoms: &[Vec<f64>]) -> Result<AtomicLPResult, OracleError> {
    atomic_lp_bound_with(problem, atoms, Execution::default())
}

pub fn atomic_lp_bound_with(
    problem: &DStabilityProblem,
    atoms: &[Vec<f64>],
    execution: Execution,
) -> Result<AtomicLPResult, OracleError> {
    if atoms.is_empty() {
        return Err(OracleError::NoAtoms);
    }
    let nv = problem.variables().len();
    for (index, a) in atoms.iter().enumerate() {
        if a.len() != nv {
            return Err(OracleError::AtomDimension {
                index,
                expected: nv,
                got: a.len(),
            });
        }
        if problem.delta().depth(a) < -VIOLATION_TOL {
            return Err(OracleError::AtomOutsideDelta(index));
        }
    }
    let flags = execution.map(atoms.len(), |i| point_violation(problem, &atoms[i]).map(|w| w.is_some()));
    let violating = flags.into_iter().collect::<Result<Vec<bool>, _>>()?;
    let c: Vec<f64> = violating.iter().map(|&v| if v { 1.0 } else { 0.0 }).collect();
    let rows: Vec<lp::Row> = problem
        .all_moment_constraints()
        .iter()
        .map(|mc| lp::Row {
            a: atoms.iter().map(|p| mc.f.eval(p)).collect(),
            relation: mc.relation,
            b: mc.target,
        })
        .collect();
    match lp::maximize(&c, &rows) {
        lp::LpOutcome::Optimal { x, value } => Ok(AtomicLPResult {
            atoms: atoms.to_vec(),
            violating,
            weights: x,
            lower_bound: value,
        }),
        lp::LpOutcome::Infeasible => Err(OracleError::LpInfeasible),
        lp::LpOutcome::Unbounded => Err(OracleError::LpUnbounded),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Polynomial;
    use crate::problem::{MomentConstraint, MomentRelation, UncertainMatrix};
    use crate::sets::{box_set, region_preset, Constraint, RegionPreset};

    fn running(lo: f64, hi: f64) -> DStabilityProblem {
        let v = vec!["rho".to_string()];
        let a = UncertainMatrix::parse(v.clone(), 2, &["rho - 1", "0", "0", "-1"]).unwrap();
        let d = box_set(v, &[lo], &[hi]).unwrap();
        DStabilityProblem::new(a, d, region_preset(RegionPreset::LeftHalfPlaneClosure)).unwrap()
    }

    fn with_mean(p: DStabilityProblem, mean: f64) -> DStabilityProblem {
        p.with_moment(MomentConstraint::new(Polynomial::var(1, 0), MomentRelation::Eq, mean))
            .unwrap()
    }

    #[test]
    fn box_grid_layout() {
        let d = box_set(vec!["a".into(), "b".into()], &[0.0, -1.0], &[1.0, 1.0]).unwrap();
        let pts = grid_points(&d, &GridOptions::new(3)).unwrap();
        assert_eq!(pts.len(), 9);
        assert_eq!(pts[0], vec![0.0, -1.0]);
        assert_eq!(pts[1], vec![0.0, 0.0]);
        assert_eq!(pts[8], vec![1.0, 1.0]);
        assert_eq!(grid_points(&d, &GridOptions::new(0)), Err(OracleError::EmptyGrid));
    }

    #[test]
    fn rejection_sampling_is_seeded() {
        let v = vec!["a".to_string(), "b".to_string()];
        let disk = (-&(&Polynomial::var(2, 0).pow(2) + &Polynomial::var(2, 1).pow(2))).add_constant(1.0);
        let d = box_set(v, &[-1.0, -1.0], &[1.0, 1.0])
            .unwrap()
            .with(Constraint::geq(disk))
            .unwrap();
        let opts = GridOptions { seed: 5, ..GridOptions::new(40) };
        let a = grid_points(&d, &opts).unwrap();
        assert_eq!(a, grid_points(&d, &opts).unwrap());
        assert!(a.iter().all(|p| p[0] * p[0] + p[1] * p[1] <= 1.0));
        // Roughly π/4 of the samples survive.
        assert!((a.len() as f64 / 1600.0 - std::f64::consts::FRAC_PI_4).abs() < 0.05);
    }

    #[test]
    fn running_example_witness() {
        let w = grid_violation_search(&running(0.0, 1.0), &GridOptions::new(101))
            .unwrap()
            .unwrap();
        assert_eq!(w.rho, vec![1.0]);
        assert_eq!(w.index, 100);
        assert_eq!(w.lambda, Complex::new(0.0, 0.0));
        assert!(w.eig_residual <= 1e-12);
        assert!(grid_violation_search(&running(0.0, 0.9), &GridOptions::new(101))
            .unwrap()
            .is_none());
    }

    #[test]
    fn modes_agree_on_witness() {
        let p = running(-1.0, 2.0);
        let seq = GridOptions {
            execution: Execution::Sequential,
            ..GridOptions::new(31)
        };
        let par = GridOptions {
            execution: Execution::Parallel,
            ..seq
        };
        assert_eq!(grid_violation_search(&p, &seq), grid_violation_search(&p, &par));
        // Deepest point is the right end, ρ = 2 with λ = 1.
        let w = grid_violation_search(&p, &seq).unwrap().unwrap();
        assert_eq!(w.rho, vec![2.0]);
    }

    #[test]
    fn max_real_part() {
        let (p, v) = grid_max_real_part(&running(0.0, 0.9), &GridOptions::new(10_000)).unwrap();
        assert!((v + 0.1).abs() < 1e-12);
        assert!((p[0] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn atomic_bounds() {
        let p = with_mean(running(0.0, 1.0), 0.5);
        let r = atomic_lp_bound(&p, &[vec![0.0], vec![0.5], vec![1.0]]).unwrap();
        assert_eq!(r.violating, vec![false, false, true]);
        assert!((r.lower_bound - 0.5).abs() < 1e-12);
        assert!((r.weights[0] - 0.5).abs() < 1e-12 && r.weights[1].abs() < 1e-12);
        assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-10);

        let r = atomic_lp_bound(&running(0.0, 1.0), &[vec![0.0], vec![1.0]]).unwrap();
        assert!((r.lower_bound - 1.0).abs() < 1e-12);

        let r = atomic_lp_bound(&p, &[vec![0.5]]).unwrap();
        assert_eq!(r.lower_bound, 0.0);

        assert_eq!(atomic_lp_bound(&p, &[vec![0.0]]), Err(OracleError::LpInfeasible));
        assert_eq!(atomic_lp_bound(&p, &[vec![2.0]]), Err(OracleError::AtomOutsideDelta(0)));
        assert_eq!(atomic_lp_bound(&p, &[]), Err(OracleError::NoAtoms));
    }

    #[test]
    fn refining_atoms_never_lowers_bound() {
        let p = with_mean(running(0.0, 1.0), 0.3);
        let mut last = 0.0;
        for k in [2usize, 3, 5, 9, 17] {
            let atoms: Vec<Vec<f64>> = (0..k).map(|i| vec![i as f64 / (k - 1) as f64]).collect();
            let b = atomic_lp_bound(&p, &atoms).unwrap().lower_bound;
            assert!(b >= last - 1e-12);
            last = b;
        }
        assert!((last - 0.3).abs() < 1e-12);
    }
}
