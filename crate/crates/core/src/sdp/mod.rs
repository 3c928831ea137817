//! Dense primal-dual interior-point solver for moment SDPs.
//!
//! The relaxation is solved in the form
//!
//! ```text
//! maximize  cᵀy   s.t.  S = Σ_k y_k F_k ⪰ 0,  E y = e
//! minimize  eᵀw   s.t.  A*(X) − Eᵀw = −c,  X ⪰ 0
//! ```
//!
//! with an infeasible-start HKM path-following method and Mehrotra
//! predictor-corrector steps. Each iteration forms the Schur complement
//! `M_ij = tr(F_i X F_j S⁻¹)` (rows in parallel, fixed summation order) and
//! solves the reduced KKT system with a dense Cholesky factorization.

mod linalg;
mod model;

use std::fmt;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::exec::Execution;
use crate::moments::MomentVector;
use crate::relax::SDPProblem;
use linalg::{cholesky_in_place, forward, inner, max_step, spd_inverse, symmetrize};
use model::{Model, RowKind};

pub use linalg::cholesky_in_place as dense_cholesky;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub max_iterations: usize,
    /// Relative primal and dual residual tolerance.
    pub feasibility_tol: f64,
    /// Relative duality gap tolerance.
    pub gap_tol: f64,
    /// Fraction of the step to the boundary of the cone, in `(0, 1)`.
    pub step_fraction: f64,
    /// Initial `X = S = scale·I`.
    pub initial_scale: f64,
    /// Objective or multiplier magnitude beyond which the problem is declared
    /// infeasible or unbounded.
    pub infeasibility_threshold: f64,
    pub execution: Execution,
    /// Keep one [`IterationRecord`] per iteration in the solution.
    pub log_iterations: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            feasibility_tol: 1e-8,
            gap_tol: 1e-8,
            step_fraction: 0.98,
            initial_scale: 1.0,
            infeasibility_threshold: 1e8,
            execution: Execution::default(),
            log_iterations: false,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.feasibility_tol > 0.0 && self.gap_tol > 0.0) {
            return Err("tolerances must be positive".into());
        }
        if !(self.step_fraction > 0.0 && self.step_fraction < 1.0) {
            return Err("step fraction must lie in (0, 1)".into());
        }
        if !(self.initial_scale > 0.0 && self.infeasibility_threshold > 0.0) {
            return Err("initial scale and infeasibility threshold must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverStatus {
    Optimal,
    /// The relaxation (primal) appears infeasible; see the certificate.
    Infeasible,
    Unbounded,
    /// Numerical breakdown or stalled steps; the best iterate is returned.
    SlowProgress,
    IterLimit,
}

impl fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolverStatus::Optimal => "Optimal",
            SolverStatus::Infeasible => "Infeasible",
            SolverStatus::Unbounded => "Unbounded",
            SolverStatus::SlowProgress => "SlowProgress",
            SolverStatus::IterLimit => "IterLimit",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Residuals {
    pub primal_infeas: f64,
    pub dual_infeas: f64,
    /// `dual_value − primal_value`.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub mu: f64,
    pub primal_infeas: f64,
    pub dual_infeas: f64,
    pub gap: f64,
    pub alpha_p: f64,
    pub alpha_d: f64,
}

impl IterationRecord {
    pub const HEADER: &'static str = " iter           mu        pinf        dinf         gap   alpha_p   alpha_d";
}

impl fmt::Display for IterationRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:>5} {:>12.4e} {:>11.3e} {:>11.3e} {:>11.3e} {:>9.6} {:>9.6}",
            self.iteration, self.mu, self.primal_infeas, self.dual_infeas, self.gap, self.alpha_p, self.alpha_d
        )
    }
}

/// Normalized dual ray `(X, ν)` with `A*(X) − Σ ν_i a_i ≈ 0` and `Σ ν_i b_i < 0`.
#[derive(Debug, Clone)]
pub struct InfeasibilityCertificate {
    pub dual_blocks: Vec<DMatrix<f64>>,
    pub multipliers: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct SDPSolution {
    pub status: SolverStatus,
    /// Optimal moments, in the original coordinates.
    pub moments: MomentVector,
    /// Moments in the solver's internal (rescaled) coordinates.
    pub internal: Vec<f64>,
    pub primal_value: f64,
    pub dual_value: f64,
    /// One multiplier per linear constraint of the problem (`≥ 0` for `≤`
    /// rows, `≤ 0` for `≥` rows); dual objective `Σ ν_i rhs_i`.
    pub dual_multipliers: Vec<f64>,
    /// Dual matrices `X`, `Y^(j)`, aligned with the problem's PSD blocks.
    pub dual_blocks: Vec<DMatrix<f64>>,
    pub iterations: usize,
    /// As reported by the final iteration.
    pub residuals: Residuals,
    pub certificate: Option<InfeasibilityCertificate>,
    pub log: Vec<IterationRecord>,
    pub seconds: f64,
}

struct Iterate {
    y: DVector<f64>,
    w: DVector<f64>,
    x: Vec<DMatrix<f64>>,
    s: Vec<DMatrix<f64>>,
}

struct Measures {
    pinf: f64,
    dinf: f64,
    pobj: f64,
    dobj: f64,
    relgap: f64,
    mu: f64,
}

impl Measures {
    fn merit(&self) -> f64 {
        self.pinf.max(self.dinf).max(self.relgap)
    }
}

struct Residual {
    rp: DVector<f64>,
    rs: Vec<DMatrix<f64>>,
    rd: DVector<f64>,
}

fn norm_inf(v: &DVector<f64>) -> f64 {
    v.amax()
}

fn evaluate(model: &Model, it: &Iterate) -> (Residual, Measures) {
    let ys = it.y.as_slice();
    let rp = &model.e_rhs - &model.e_mat * &it.y;
    let rs: Vec<DMatrix<f64>> = model
        .blocks
        .iter()
        .zip(&it.s)
        .map(|(b, s)| b.eval(ys) - s)
        .collect();
    let rd = -&model.c - model.adjoint(&it.x) + model.e_mat.transpose() * &it.w;
    let pobj = model.c.dot(&it.y);
    let dobj = model.e_rhs.dot(&it.w);
    let rs_norm = rs.iter().map(|m| m.amax()).fold(0.0, f64::max);
    let pinf = (norm_inf(&rp) / (1.0 + norm_inf(&model.e_rhs))).max(rs_norm / (1.0 + it.y.amax()));
    let dinf = norm_inf(&rd) / (1.0 + norm_inf(&model.c));
    let relgap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
    let xs: f64 = it.x.iter().zip(&it.s).map(|(x, s)| inner(x, s)).sum();
    let mu = xs / model.total_dim() as f64;
    (
        Residual { rp, rs, rd },
        Measures {
            pinf,
            dinf,
            pobj,
            dobj,
            relgap,
            mu,
        },
    )
}

struct Direction {
    dy: DVector<f64>,
    dw: DVector<f64>,
    dx: Vec<DMatrix<f64>>,
    ds: Vec<DMatrix<f64>>,
}

struct Kkt {
    /// Schur complement, lower triangle.
    m: DMatrix<f64>,
    /// Cholesky factor of the Schur complement.
    l: DMatrix<f64>,
    /// `M⁻¹ Eᵀ`.
    v: DMatrix<f64>,
    /// Cholesky factor of `E M⁻¹ Eᵀ`.
    g: DMatrix<f64>,
}

impl Kkt {
    fn new(model: &Model, m_lower: DMatrix<f64>) -> Option<Self> {
        let mut m = m_lower.clone();
        let n = m.nrows();
        // Tiny relative shift guards against a numerically singular M near the end.
        let diag_max = (0..n).map(|i| m[(i, i)]).fold(0.0, f64::max);
        for i in 0..n {
            m[(i, i)] += 1e-14 * diag_max;
        }
        cholesky_in_place(&mut m).ok()?;
        let k = model.e_mat.nrows();
        let mut v = model.e_mat.transpose();
        for j in 0..k {
            solve_with(&m, v.column_mut(j).as_mut_slice());
        }
        let mut g = &model.e_mat * &v;
        symmetrize(&mut g);
        let gmax = (0..k).map(|i| g[(i, i)]).fold(0.0, f64::max);
        for i in 0..k {
            g[(i, i)] += 1e-14 * gmax;
        }
        cholesky_in_place(&mut g).ok()?;
        Some(Self { m: m_lower, l: m, v, g })
    }

    /// Solves `[M Eᵀ; E 0][dy; dw] = [g; r]` with two rounds of iterative refinement.
    fn solve(&self, model: &Model, rhs_g: &DVector<f64>, r: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let (mut dy, mut dw) = self.solve_once(model, rhs_g, r);
        for _ in 0..2 {
            let r1 = rhs_g - lower_symmetric_mul(&self.m, &dy) - model.e_mat.tr_mul(&dw);
            let r2 = r - &model.e_mat * &dy;
            let (cy, cw) = self.solve_once(model, &r1, &r2);
            dy += cy;
            dw += cw;
        }
        (dy, dw)
    }

    fn solve_once(&self, model: &Model, rhs_g: &DVector<f64>, r: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let mut u = rhs_g.clone();
        solve_with(&self.l, u.as_mut_slice());
        let mut dw = &model.e_mat * &u - r;
        solve_with(&self.g, dw.as_mut_slice());
        let dy = u - &self.v * &dw;
        (dy, dw)
    }
}

// `M v` for a symmetric `M` stored in its lower triangle.
fn lower_symmetric_mul(m: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    let n = m.nrows();
    let mut out = DVector::zeros(n);
    for j in 0..n {
        let col = m.column(j);
        let vj = v[j];
        let mut acc = col[j] * vj;
        for i in j + 1..n {
            out[i] += col[i] * vj;
            acc += col[i] * v[i];
        }
        out[j] += acc;
    }
    out
}

fn solve_with(l: &DMatrix<f64>, b: &mut [f64]) {
    forward(l, b);
    linalg::backward(l, b);
}

// Newton direction for X S = target·I (HKM), with the optional Mehrotra
// second-order term of a predictor direction. Uses X directly rather than
// X S S⁻¹, which loses accuracy as S becomes ill-conditioned.
fn direction(
    model: &Model,
    kkt: &Kkt,
    it: &Iterate,
    t: &[DMatrix<f64>],
    res: &Residual,
    target: f64,
    predictor: Option<&Direction>,
) -> Direction {
    let second = |b: usize| predictor.map(|p| &p.dx[b] * &p.ds[b] * &t[b]);
    // Q_b = target·T − X − X rS T − dXa dSa T;  g = A*(Q) − r_d.
    let q: Vec<DMatrix<f64>> = (0..t.len())
        .map(|b| {
            let mut q = &t[b] * target - &it.x[b] - &it.x[b] * &res.rs[b] * &t[b];
            if let Some(c) = second(b) {
                q -= c;
            }
            q
        })
        .collect();
    let g = model.adjoint(&q) - &res.rd;
    let (mut dy, mut dw) = kkt.solve(model, &g, &res.rp);
    let complete = |dy: &DVector<f64>| {
        let ys = dy.as_slice();
        let ds: Vec<DMatrix<f64>> = model
            .blocks
            .iter()
            .zip(&res.rs)
            .map(|(b, rs)| b.eval(ys) + rs)
            .collect();
        let dx: Vec<DMatrix<f64>> = (0..t.len())
            .map(|b| {
                let mut d = -(&it.x[b] * &ds[b] * &t[b]);
                if let Some(c) = second(b) {
                    d -= c;
                }
                symmetrize(&mut d);
                d + &t[b] * target - &it.x[b]
            })
            .collect();
        (ds, dx)
    };
    let (mut ds, mut dx) = complete(&dy);
    // Refine against the dual equation A*(dX) − Eᵀdw = r_d itself, which the
    // stored Schur matrix only approximates once S is ill-conditioned.
    for _ in 0..REFINE_DIRECTION {
        let defect = model.adjoint(&dx) - model.e_mat.tr_mul(&dw) - &res.rd;
        let pdef = &res.rp - &model.e_mat * &dy;
        if defect.amax() <= f64::EPSILON * (1.0 + res.rd.amax()) {
            break;
        }
        let (cy, cw) = kkt.solve(model, &defect, &pdef);
        dy += cy;
        dw += cw;
        (ds, dx) = complete(&dy);
    }
    Direction { dy, dw, dx, ds }
}

const REFINE_DIRECTION: usize = 1;
const DIVERGENCE: f64 = 1e3;

fn step_lengths(lx: &[DMatrix<f64>], ls: &[DMatrix<f64>], d: &Direction) -> (f64, f64) {
    let ap = ls
        .iter()
        .zip(&d.ds)
        .map(|(l, ds)| max_step(l, ds))
        .fold(f64::INFINITY, f64::min);
    let ad = lx
        .iter()
        .zip(&d.dx)
        .map(|(l, dx)| max_step(l, dx))
        .fold(f64::INFINITY, f64::min);
    (ap, ad)
}

/// Solves the relaxation. Never panics on numerical trouble: breakdowns are
/// reported as [`SolverStatus::SlowProgress`] with the best iterate seen.
pub fn solve(sdp: &SDPProblem, settings: &SolverSettings) -> SDPSolution {
    let start = Instant::now();
    let model = Model::new(sdp);
    let n = model.n;
    let xi = settings.initial_scale;
    let mut it = Iterate {
        y: {
            let mut y = DVector::zeros(n);
            y[sdp.normalization_index] = 1.0;
            y
        },
        w: DVector::zeros(model.e_mat.nrows()),
        x: model.blocks.iter().map(|b| DMatrix::identity(b.dim, b.dim) * xi).collect(),
        s: model.blocks.iter().map(|b| DMatrix::identity(b.dim, b.dim) * xi).collect(),
    };
    let total_dim = model.total_dim() as f64;
    let mut log = Vec::new();
    let mut best: Option<(f64, Iterate, Measures)> = None;
    let mut status = SolverStatus::IterLimit;
    let mut stalls = 0;
    let mut iterations = 0;
    let mut last = None;

    for iter in 0..=settings.max_iterations {
        let (res, meas) = evaluate(&model, &it);
        if meas.merit() < best.as_ref().map_or(f64::INFINITY, |b| b.0) {
            best = Some((meas.merit(), clone_iterate(&it), clone_measures(&meas)));
        }
        iterations = iter;
        // Residuals that have grown far past the best seen mean the linear
        // algebra has broken down; keep the best iterate instead.
        if best.as_ref().is_some_and(|b| meas.merit() > DIVERGENCE * b.0) {
            status = SolverStatus::SlowProgress;
            break;
        }
        if meas.pinf <= settings.feasibility_tol
            && meas.dinf <= settings.feasibility_tol
            && meas.relgap <= settings.gap_tol
        {
            status = SolverStatus::Optimal;
            last = Some(meas);
            break;
        }
        let thr = settings.infeasibility_threshold;
        let ray_tol = settings.feasibility_tol.sqrt();
        // Dual ray: A*(X) − Eᵀw ≈ 0 with eᵀw < 0, after normalization.
        let dual_scale = it.x.iter().map(|x| x.trace()).sum::<f64>().max(it.w.amax());
        if dual_scale > thr {
            let homog = (&res.rd + &model.c).amax() / dual_scale;
            if homog <= ray_tol && meas.dobj / dual_scale < -ray_tol * ray_tol {
                status = SolverStatus::Infeasible;
                last = Some(meas);
                break;
            }
        }
        // Primal ray: A(y) ⪰ 0, E y ≈ 0 with cᵀy > 0.
        let primal_scale = it.y.amax();
        if primal_scale > thr {
            let homog = (&model.e_mat * &it.y).amax() / primal_scale;
            if homog <= ray_tol && meas.pobj / primal_scale > ray_tol * ray_tol {
                status = SolverStatus::Unbounded;
                last = Some(meas);
                break;
            }
        }
        if iter == settings.max_iterations {
            last = Some(meas);
            break;
        }

        let factors: Option<Vec<_>> = it.s.iter().map(spd_inverse).collect();
        let Some(factors) = factors else {
            status = SolverStatus::SlowProgress;
            break;
        };
        let (ls, t): (Vec<_>, Vec<_>) = factors.into_iter().unzip();
        let lx: Option<Vec<DMatrix<f64>>> = it
            .x
            .iter()
            .map(|x| {
                let mut l = x.clone();
                cholesky_in_place(&mut l).ok().map(|_| l)
            })
            .collect();
        let Some(lx) = lx else {
            status = SolverStatus::SlowProgress;
            break;
        };

        let m = model.schur(&it.x, &t, settings.execution);
        let Some(kkt) = Kkt::new(&model, m) else {
            status = SolverStatus::SlowProgress;
            break;
        };

        // Predictor.
        let d_aff = direction(&model, &kkt, &it, &t, &res, 0.0, None);
        let (ap, ad) = step_lengths(&lx, &ls, &d_aff);
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let mu_aff: f64 = it
            .x
            .iter()
            .zip(&d_aff.dx)
            .zip(it.s.iter().zip(&d_aff.ds))
            .map(|((x, dx), (s, ds))| inner(&(x + dx * ad), &(s + ds * ap)))
            .sum::<f64>()
            / total_dim;
        let sigma = if meas.mu > 0.0 {
            (mu_aff / meas.mu).clamp(0.0, 1.0).powi(3)
        } else {
            0.0
        };

        // Corrector.
        let d = direction(&model, &kkt, &it, &t, &res, sigma * meas.mu, Some(&d_aff));
        let (ap, ad) = step_lengths(&lx, &ls, &d);
        let gamma = settings.step_fraction;
        let ap = (gamma * ap).min(1.0);
        let ad = (gamma * ad).min(1.0);

        it.y.axpy(ap, &d.dy, 1.0);
        it.w.axpy(ad, &d.dw, 1.0);
        for (s, ds) in it.s.iter_mut().zip(&d.ds) {
            *s += ds * ap;
            symmetrize(s);
        }
        for (x, dx) in it.x.iter_mut().zip(&d.dx) {
            *x += dx * ad;
            symmetrize(x);
        }

        if settings.log_iterations {
            log.push(IterationRecord {
                iteration: iter + 1,
                mu: meas.mu,
                primal_infeas: meas.pinf,
                dual_infeas: meas.dinf,
                gap: meas.dobj - meas.pobj,
                alpha_p: ap,
                alpha_d: ad,
            });
        }
        log::trace!(
            "iter {} mu {:.3e} pinf {:.3e} dinf {:.3e} pobj {:.9} dobj {:.9} ap {:.3} ad {:.3}",
            iter,
            meas.mu,
            meas.pinf,
            meas.dinf,
            meas.pobj,
            meas.dobj,
            ap,
            ad
        );

        if ap.max(ad) < 1e-10 {
            stalls += 1;
            if stalls >= 3 {
                status = SolverStatus::SlowProgress;
                break;
            }
        } else {
            stalls = 0;
        }
    }

    // A stalled run whose best iterate is within 10x of the tolerances is
    // accepted: the last digits are lost to conditioning, not to a bad answer.
    let loose = 10.0 * settings.feasibility_tol.max(settings.gap_tol);
    if matches!(status, SolverStatus::SlowProgress | SolverStatus::IterLimit)
        && best.as_ref().is_some_and(|b| b.0 <= loose)
    {
        let (_, b, m) = best.take().expect("checked above");
        return finish(sdp, &model, b, m, SolverStatus::Optimal, iterations, log, start);
    }
    let (it, meas) = match (status, last) {
        (SolverStatus::SlowProgress, _) | (_, None) => {
            let (_, it, m) = best.expect("at least one iterate evaluated");
            (it, m)
        }
        (_, Some(meas)) => (it, meas),
    };
    finish(sdp, &model, it, meas, status, iterations, log, start)
}

fn clone_iterate(it: &Iterate) -> Iterate {
    Iterate {
        y: it.y.clone(),
        w: it.w.clone(),
        x: it.x.clone(),
        s: it.s.clone(),
    }
}

fn clone_measures(m: &Measures) -> Measures {
    Measures { ..*m }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    sdp: &SDPProblem,
    model: &Model,
    it: Iterate,
    meas: Measures,
    status: SolverStatus,
    iterations: usize,
    log: Vec<IterationRecord>,
    start: Instant,
) -> SDPSolution {
    let nu = multipliers(sdp, model, &it);
    let dual_blocks: Vec<DMatrix<f64>> = it.x[..sdp.blocks.len()].to_vec();
    let certificate = (status == SolverStatus::Infeasible).then(|| {
        let scale = it
            .x
            .iter()
            .map(|x| x.trace())
            .sum::<f64>()
            .max(it.w.amax())
            .max(f64::MIN_POSITIVE);
        InfeasibilityCertificate {
            dual_blocks: dual_blocks.iter().map(|x| x / scale).collect(),
            multipliers: nu.iter().map(|v| v / scale).collect(),
            objective: meas.dobj / scale,
        }
    });
    let y: Vec<f64> = it.y.iter().copied().collect();
    SDPSolution {
        status,
        moments: sdp.from_internal(&y),
        internal: y,
        primal_value: meas.pobj,
        dual_value: meas.dobj,
        dual_multipliers: nu,
        dual_blocks,
        iterations,
        residuals: Residuals {
            primal_infeas: meas.pinf,
            dual_infeas: meas.dinf,
            gap: meas.dobj - meas.pobj,
        },
        certificate,
        log,
        seconds: start.elapsed().as_secs_f64(),
    }
}

// Maps the model multipliers back to one ν per problem row; the
// normalization row absorbs the homogenizing terms of the one-sided rows.
fn multipliers(sdp: &SDPProblem, model: &Model, it: &Iterate) -> Vec<f64> {
    let mut nu = vec![0.0; sdp.constraints.len()];
    let mut norm_shift = 0.0;
    for (i, row) in model.rows.iter().enumerate() {
        match *row {
            RowKind::Equality(Some(r)) => nu[i] = it.w[r],
            RowKind::Equality(None) => {}
            RowKind::Inequality { block, sign } => {
                let x = it.x[block][(0, 0)];
                nu[i] = -sign * x;
                norm_shift += sign * x * sdp.constraints[i].rhs;
            }
        }
    }
    nu[sdp.normalization_index] += norm_shift;
    nu
}

/// Recomputes residuals of `solution` from the problem data alone.
///
/// `primal_infeas` is the largest linear-constraint violation or negative
/// block eigenvalue at the internal moments; `dual_infeas` the largest entry
/// of `c + Σ_b A_b*(X_b) − Σ_i ν_i a_i` relative to `1 + ‖c‖∞`, plus any
/// sign violation of `ν` or negative eigenvalue of `X`.
pub fn residuals(sdp: &SDPProblem, solution: &SDPSolution) -> Residuals {
    let y = &solution.internal;
    let (lin, psd) = sdp.infeasibility(y);
    let mut r: Vec<f64> = sdp.objective.clone();
    for (blk, x) in sdp.blocks.iter().zip(&solution.dual_blocks) {
        for (k, entries) in &blk.terms {
            for &(i, j, c) in entries {
                let f = if i == j { 1.0 } else { 2.0 };
                r[*k] += f * c * x[(i, j)];
            }
        }
    }
    let mut sign_violation: f64 = 0.0;
    for (c, &nu) in sdp.constraints.iter().zip(&solution.dual_multipliers) {
        for &(k, a) in &c.coeffs {
            r[k] -= nu * a;
        }
        sign_violation = sign_violation.max(match c.relation {
            crate::problem::MomentRelation::Le => (-nu).max(0.0),
            crate::problem::MomentRelation::Ge => nu.max(0.0),
            crate::problem::MomentRelation::Eq => 0.0,
        });
    }
    let cmax = sdp.objective.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    let stat = r.iter().fold(0.0f64, |a, v| a.max(v.abs())) / (1.0 + cmax);
    let xneg = solution
        .dual_blocks
        .iter()
        .map(|x| (-x.symmetric_eigenvalues().min()).max(0.0))
        .fold(0.0, f64::max);
    let primal_value = sdp.objective_value(y);
    let dual_value: f64 = sdp
        .constraints
        .iter()
        .zip(&solution.dual_multipliers)
        .map(|(c, nu)| c.rhs * nu)
        .sum();
    Residuals {
        primal_infeas: lin.max(psd),
        dual_infeas: stat.max(sign_violation).max(xneg),
        gap: dual_value - primal_value,
    }
}
