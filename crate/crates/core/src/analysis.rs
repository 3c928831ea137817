//! Solver driver: probability bounds, robustness certificates, hierarchies,
//! candidate extraction, sweeps and bisection.

use std::fmt;
use std::time::Instant;

use nalgebra::Complex;
use thiserror::Error;

use crate::poly::ExponentVector;
use crate::problem::{build_lifted, minimal_order, DStabilityProblem, LiftedProblem, ProblemError};
use crate::relax::{
    assemble_relaxation_with, problem_stats, EqualityEncoding, ProblemStats, RelaxError, RelaxOptions, SDPProblem,
};
use crate::sdp::{residuals, solve, Residuals, SDPSolution, SolverSettings, SolverStatus};
use crate::sets::Relation;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Relax(#[from] RelaxError),
    #[error("certification needs a support-only problem; this one has {0} moment constraint(s)")]
    HasMomentInformation(usize),
    #[error("order {order} is below the minimal order {minimal}")]
    OrderTooLow { order: usize, minimal: usize },
    #[error("empty order range {min}..={max}")]
    EmptyRange { min: usize, max: usize },
    #[error("empty sweep grid")]
    EmptyGrid,
    #[error("invalid setting: {0}")]
    Settings(String),
    #[error("family at {param}: {message}")]
    Family { param: f64, message: String },
    #[error("not bracketed: certification fails at the lower end {0}")]
    NotBracketed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSettings {
    /// Certification requires `raw < 1 − margin`.
    pub margin: f64,
    pub relax: RelaxOptions,
    pub solver: SolverSettings,
    /// A stalled solve whose residuals and relative gap are all below this is
    /// still used (flagged as reduced accuracy).
    pub accept_tol: f64,
    /// Allowed increase of the raw value from one order to the next.
    pub monotonicity_slack: f64,
    /// Re-solve with the other equality encoding when a solve is not reliable.
    pub encoding_fallback: bool,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self {
            margin: 1e-3,
            relax: RelaxOptions::default(),
            solver: SolverSettings::default(),
            accept_tol: 1e-6,
            monotonicity_slack: 1e-6,
            encoding_fallback: true,
        }
    }
}

impl AnalysisSettings {
    fn validate(&self) -> Result<(), AnalysisError> {
        if !(self.margin >= 0.0 && self.margin < 1.0) {
            return Err(AnalysisError::Settings(format!("margin {} not in [0, 1)", self.margin)));
        }
        if !(self.accept_tol > 0.0) || !(self.monotonicity_slack >= 0.0) {
            return Err(AnalysisError::Settings("tolerances must be positive".into()));
        }
        self.solver.validate().map_err(AnalysisError::Settings)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    CertifiedRobustlyDStable,
    ViolationProbabilityBound,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::CertifiedRobustlyDStable => "CertifiedRobustlyDStable",
            Verdict::ViolationProbabilityBound => "ViolationProbabilityBound",
            Verdict::Inconclusive => "Inconclusive",
        })
    }
}

/// Point estimate read off the first-order moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub rho: Vec<f64>,
    pub lambda: Complex<f64>,
    pub x_re: Vec<f64>,
    pub x_im: Vec<f64>,
    /// The full lifted point `z`.
    pub z: Vec<f64>,
    /// Per support constraint: how far `z` is from satisfying it (0 = satisfied).
    pub support_residuals: Vec<f64>,
    /// Largest per-coordinate variance `m_{2e_i} − m_{e_i}²` of the optimal
    /// measure; zero when it is a single atom at `z`.
    pub dispersion: f64,
}

impl Candidate {
    pub fn max_residual(&self) -> f64 {
        self.support_residuals.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub status: SolverStatus,
    /// Recomputed from the returned solution.
    pub residuals: Residuals,
    pub dual_value: f64,
    pub iterations: usize,
    /// The solve stalled but its residuals were within the acceptance tolerance.
    pub reduced_accuracy: bool,
    /// The order requested, when it had to be raised.
    pub requested_order: Option<usize>,
    pub stats: ProblemStats,
    /// Equality encoding of the solve that was kept.
    pub encoding: EqualityEncoding,
    pub seconds_solve: f64,
    pub seconds_total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub tau: usize,
    /// Upper bound on the violation probability, clipped to `[0, 1]`.
    pub p_upper: f64,
    /// Unclipped SDP optimum.
    pub raw_value: f64,
    /// `1 − p_upper`: lower bound on the probability of D-stability.
    pub p_lower_bound_on_stability: f64,
    pub verdict: Verdict,
    pub candidate: Option<Candidate>,
    pub diagnostics: Diagnostics,
}

impl AnalysisReport {
    /// The solve can be trusted (optimal, or stalled within the acceptance tolerance).
    pub fn is_reliable(&self) -> bool {
        self.diagnostics.status == SolverStatus::Optimal || self.diagnostics.reduced_accuracy
    }
}

/// Everything produced on the way to a report, for callers that want the
/// relaxation or the raw solution too.
#[derive(Debug, Clone)]
pub struct AnalysisRun {
    pub lifted: LiftedProblem,
    pub sdp: SDPProblem,
    pub solution: SDPSolution,
    pub report: AnalysisReport,
}

/// Solves the order-`τ` relaxation and reports `p̄^τ`. Orders below the
/// minimal one are raised to it.
pub fn upper_probability(
    problem: &DStabilityProblem,
    tau: usize,
    settings: &AnalysisSettings,
) -> Result<AnalysisReport, AnalysisError> {
    Ok(run_analysis(problem, tau, settings)?.report)
}

pub fn run_analysis(
    problem: &DStabilityProblem,
    tau: usize,
    settings: &AnalysisSettings,
) -> Result<AnalysisRun, AnalysisError> {
    settings.validate()?;
    let start = Instant::now();
    let lifted = build_lifted(problem)?;
    let minimal = minimal_order(&lifted);
    let (order, requested_order) = if tau < minimal {
        log::warn!("order {tau} is below the minimal order {minimal}; using {minimal}");
        (minimal, Some(tau))
    } else {
        (tau, None)
    };
    let mut att = attempt(&lifted, order, settings.relax, settings)?;
    if !att.reliable() && settings.encoding_fallback {
        let mut relax = settings.relax;
        relax.encoding = match relax.encoding {
            EqualityEncoding::ZeroLocalizer => EqualityEncoding::InequalityPair,
            EqualityEncoding::InequalityPair => EqualityEncoding::ZeroLocalizer,
        };
        log::info!("order {order}: {} solve not reliable, retrying with {:?}", att.solution.status, relax.encoding);
        let other = attempt(&lifted, order, relax, settings)?;
        if (other.reliable(), -other.merit) > (att.reliable(), -att.merit) {
            att = other;
        }
    }
    let Attempt {
        sdp,
        solution,
        reduced_accuracy,
        ..
    } = att;
    let stats = problem_stats(&sdp);
    let res = residuals(&sdp, &solution);
    let reliable = solution.status == SolverStatus::Optimal || reduced_accuracy;

    let raw = solution.primal_value;
    let p_upper = if raw.is_finite() { raw.clamp(0.0, 1.0) } else { 1.0 };
    let verdict = if !reliable {
        Verdict::Inconclusive
    } else if lifted.has_moment_information() {
        Verdict::ViolationProbabilityBound
    } else if raw < 1.0 - settings.margin {
        Verdict::CertifiedRobustlyDStable
    } else {
        Verdict::Inconclusive
    };
    let candidate = reliable.then(|| extract_candidate(&solution, &lifted));
    let report = AnalysisReport {
        tau: order,
        p_upper,
        raw_value: raw,
        p_lower_bound_on_stability: 1.0 - p_upper,
        verdict,
        candidate,
        diagnostics: Diagnostics {
            status: solution.status,
            residuals: res,
            dual_value: solution.dual_value,
            iterations: solution.iterations,
            reduced_accuracy,
            requested_order,
            stats,
            encoding: sdp.encoding,
            seconds_solve: solution.seconds,
            seconds_total: start.elapsed().as_secs_f64(),
        },
    };
    Ok(AnalysisRun {
        lifted,
        sdp,
        solution,
        report,
    })
}

struct Attempt {
    sdp: SDPProblem,
    solution: SDPSolution,
    /// Largest of the solver's own residuals and relative gap.
    merit: f64,
    reduced_accuracy: bool,
}

impl Attempt {
    fn reliable(&self) -> bool {
        self.solution.status == SolverStatus::Optimal || self.reduced_accuracy
    }
}

fn attempt(
    lifted: &LiftedProblem,
    order: usize,
    relax: RelaxOptions,
    settings: &AnalysisSettings,
) -> Result<Attempt, AnalysisError> {
    let sdp = assemble_relaxation_with(lifted, order, relax)?;
    let solution = solve(&sdp, &settings.solver);
    let own = &solution.residuals;
    let rel_gap = own.gap.abs() / (1.0 + solution.primal_value.abs() + solution.dual_value.abs());
    let merit = own.primal_infeas.max(own.dual_infeas).max(rel_gap);
    let merit = if merit.is_finite() { merit } else { f64::INFINITY };
    let reduced_accuracy =
        matches!(solution.status, SolverStatus::SlowProgress | SolverStatus::IterLimit) && merit <= settings.accept_tol;
    Ok(Attempt {
        sdp,
        solution,
        merit,
        reduced_accuracy,
    })
}

/// First-order moments as a point of `z`, with the support residuals of
/// that point. Meaningful mainly for support-only problems, whose optimal
/// measure tends to concentrate on a single violating point.
pub fn extract_candidate(solution: &SDPSolution, lifted: &LiftedProblem) -> Candidate {
    let z = solution.moments.first_order();
    let n = z.len();
    let dispersion = (0..n)
        .filter_map(|i| {
            let mut e = vec![0; n];
            e[i] = 2;
            solution.moments.get(&ExponentVector::new(e)).map(|m2| m2 - z[i] * z[i])
        })
        .fold(0.0, f64::max);
    let l = &lifted.layout;
    let support_residuals = lifted
        .support
        .constraints()
        .iter()
        .map(|c| {
            let v = c.poly.eval(&z);
            match c.relation {
                Relation::GreaterEqualZero => (-v).max(0.0),
                Relation::EqualZero => v.abs(),
            }
        })
        .collect();
    Candidate {
        rho: z[l.rho.clone()].to_vec(),
        lambda: Complex::new(z[l.lambda_re], l.lambda_im.map_or(0.0, |i| z[i])),
        x_re: z[l.x_re.clone()].to_vec(),
        x_im: l.x_im.clone().map_or_else(Vec::new, |r| z[r].to_vec()),
        z,
        support_residuals,
        dispersion,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Certification {
    CertifiedRobustlyDStable(AnalysisReport),
    NotCertified {
        report: AnalysisReport,
        candidate: Option<Candidate>,
    },
}

impl Certification {
    pub fn is_certified(&self) -> bool {
        matches!(self, Certification::CertifiedRobustlyDStable(_))
    }

    pub fn report(&self) -> &AnalysisReport {
        match self {
            Certification::CertifiedRobustlyDStable(r) => r,
            Certification::NotCertified { report, .. } => report,
        }
    }
}

/// Robust D-stability test: certified iff the support-only bound is below
/// `1 − margin`.
pub fn certify_robust(
    problem: &DStabilityProblem,
    tau: usize,
    settings: &AnalysisSettings,
) -> Result<Certification, AnalysisError> {
    if !problem.is_support_only() {
        return Err(AnalysisError::HasMomentInformation(problem.moment_constraints().len()));
    }
    let report = upper_probability(problem, tau, settings)?;
    Ok(if report.verdict == Verdict::CertifiedRobustlyDStable {
        Certification::CertifiedRobustlyDStable(report)
    } else {
        let candidate = report.candidate.clone();
        Certification::NotCertified { report, candidate }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityViolation {
    pub tau: usize,
    pub raw: f64,
    pub raw_next: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyReport {
    pub reports: Vec<AnalysisReport>,
    /// Orders where the raw value rose by more than the slack; a sign of
    /// solver inaccuracy, since the bounds are nonincreasing in theory.
    pub monotonicity_violations: Vec<MonotonicityViolation>,
}

/// Solves every order in `tau_min..=tau_max`.
pub fn hierarchy(
    problem: &DStabilityProblem,
    tau_min: usize,
    tau_max: usize,
    settings: &AnalysisSettings,
) -> Result<HierarchyReport, AnalysisError> {
    if tau_min > tau_max {
        return Err(AnalysisError::EmptyRange {
            min: tau_min,
            max: tau_max,
        });
    }
    let minimal = minimal_order(&build_lifted(problem)?);
    if tau_min < minimal {
        return Err(AnalysisError::OrderTooLow {
            order: tau_min,
            minimal,
        });
    }
    let reports = (tau_min..=tau_max)
        .map(|t| upper_probability(problem, t, settings))
        .collect::<Result<Vec<_>, _>>()?;
    let monotonicity_violations = reports
        .windows(2)
        .filter(|w| w[1].raw_value > w[0].raw_value + settings.monotonicity_slack)
        .map(|w| {
            log::warn!(
                "raw value rose from {} at order {} to {} at order {}",
                w[0].raw_value,
                w[0].tau,
                w[1].raw_value,
                w[1].tau
            );
            MonotonicityViolation {
                tau: w[0].tau,
                raw: w[0].raw_value,
                raw_next: w[1].raw_value,
            }
        })
        .collect();
    Ok(HierarchyReport {
        reports,
        monotonicity_violations,
    })
}

pub const SWEEP_CSV_HEADER: [&str; 6] = ["theta", "p_upper", "p_lower", "status", "tau", "seconds"];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub theta: f64,
    /// The report, or the error that stopped this point.
    pub outcome: Result<AnalysisReport, AnalysisError>,
    pub seconds: f64,
}

impl SweepPoint {
    pub fn status(&self) -> String {
        match &self.outcome {
            Ok(r) if r.is_reliable() => r.verdict.to_string(),
            Ok(r) => format!("Inconclusive({})", r.diagnostics.status),
            Err(_) => "Error".to_string(),
        }
    }
}

/// One report per grid value, in grid order. Failures are recorded per
/// point and do not stop the sweep.
pub fn sweep<F, E>(
    family: F,
    grid: &[f64],
    tau: usize,
    settings: &AnalysisSettings,
) -> Result<Vec<SweepPoint>, AnalysisError>
where
    F: Fn(f64) -> Result<DStabilityProblem, E>,
    E: fmt::Display,
{
    if grid.is_empty() {
        return Err(AnalysisError::EmptyGrid);
    }
    settings.validate()?;
    Ok(grid
        .iter()
        .map(|&theta| {
            let start = Instant::now();
            let outcome = family(theta)
                .map_err(|e| AnalysisError::Family {
                    param: theta,
                    message: e.to_string(),
                })
                .and_then(|p| upper_probability(&p, tau, settings));
            SweepPoint {
                theta,
                outcome,
                seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BisectionStep {
    pub k: f64,
    pub certified: bool,
    pub raw_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BisectionResult {
    /// Largest parameter found with a certificate.
    pub k: f64,
    /// Smallest parameter found without one (`None` if `k_hi` certified).
    pub k_fail: Option<f64>,
    pub steps: Vec<BisectionStep>,
}

/// Bisection on the certification predicate, assumed monotone in `k`:
/// certified at `k_lo`, and returns the largest certified `k` within `tol`.
pub fn bisect_margin<F, E>(
    family: F,
    k_lo: f64,
    k_hi: f64,
    tau: usize,
    tol: f64,
    settings: &AnalysisSettings,
) -> Result<BisectionResult, AnalysisError>
where
    F: Fn(f64) -> Result<DStabilityProblem, E>,
    E: fmt::Display,
{
    if !(tol > 0.0) || !(k_lo <= k_hi) {
        return Err(AnalysisError::Settings(format!(
            "need tol > 0 and k_lo <= k_hi, got tol={tol}, [{k_lo}, {k_hi}]"
        )));
    }
    let mut steps = Vec::new();
    let mut check = |k: f64| -> Result<bool, AnalysisError> {
        let p = family(k).map_err(|e| AnalysisError::Family {
            param: k,
            message: e.to_string(),
        })?;
        let c = certify_robust(&p, tau, settings)?;
        steps.push(BisectionStep {
            k,
            certified: c.is_certified(),
            raw_value: c.report().raw_value,
        });
        Ok(c.is_certified())
    };
    if !check(k_lo)? {
        return Err(AnalysisError::NotBracketed(k_lo));
    }
    if check(k_hi)? {
        return Ok(BisectionResult {
            k: k_hi,
            k_fail: None,
            steps,
        });
    }
    let (mut lo, mut hi) = (k_lo, k_hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if check(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(BisectionResult {
        k: lo,
        k_fail: Some(hi),
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Polynomial;
    use crate::problem::{MomentConstraint, MomentRelation, UncertainMatrix};
    use crate::sets::{box_set, region_preset, RegionPreset};

    fn running(hi: f64) -> DStabilityProblem {
        let v = vec!["rho".to_string()];
        let a = UncertainMatrix::parse(v.clone(), 2, &["rho - 1", "0", "0", "-1"]).unwrap();
        let d = box_set(v, &[0.0], &[hi]).unwrap();
        DStabilityProblem::new(a, d, region_preset(RegionPreset::LeftHalfPlaneClosure)).unwrap()
    }

    fn mean(p: DStabilityProblem, m: f64) -> DStabilityProblem {
        p.with_moment(MomentConstraint::new(Polynomial::var(1, 0), MomentRelation::Eq, m))
            .unwrap()
    }

    #[test]
    fn mean_bound_and_clipping() {
        let r = upper_probability(&mean(running(1.0), 0.5), 2, &AnalysisSettings::default()).unwrap();
        assert_eq!(r.verdict, Verdict::ViolationProbabilityBound);
        assert!((r.p_upper - 0.5).abs() < 1e-4);
        assert!(r.p_upper <= r.raw_value + 1e-12 || r.raw_value > 1.0);
        assert!((r.p_upper + r.p_lower_bound_on_stability - 1.0).abs() < 1e-15);
        // Candidate is the mixture mean; the spread of ρ exposes that.
        let c = r.candidate.unwrap();
        assert!((c.rho[0] - 0.5).abs() < 1e-4);
        assert!(c.dispersion > 0.2);
    }

    #[test]
    fn order_is_raised() {
        let r = upper_probability(&running(0.9), 0, &AnalysisSettings::default()).unwrap();
        assert_eq!(r.tau, 1);
        assert_eq!(r.diagnostics.requested_order, Some(0));
    }

    #[test]
    fn certification() {
        let s = AnalysisSettings::default();
        let c = certify_robust(&running(1.0), 2, &s).unwrap();
        assert!(!c.is_certified());
        let Certification::NotCertified { candidate, report } = c else {
            unreachable!()
        };
        assert!((report.raw_value - 1.0).abs() < 1e-4);
        let cand = candidate.unwrap();
        assert!((cand.rho[0] - 1.0).abs() < 1e-3);
        assert!(cand.lambda.re.abs() < 1e-3);

        assert!(certify_robust(&running(0.9), 2, &s).unwrap().is_certified());
        assert_eq!(
            certify_robust(&mean(running(1.0), 0.5), 2, &s),
            Err(AnalysisError::HasMomentInformation(1))
        );
    }

    #[test]
    fn constant_stable_matrix_is_zero_at_every_order() {
        let v = vec!["rho".to_string()];
        let a = UncertainMatrix::parse(v.clone(), 2, &["-1", "0", "0", "-1"]).unwrap();
        let d = box_set(v, &[-1.0], &[1.0]).unwrap();
        let p = DStabilityProblem::new(a, d, region_preset(RegionPreset::LeftHalfPlaneClosure)).unwrap();
        // Order 1 only sees the eigen equalities as scalar constraints and
        // stays at 1; from order 2 on the bound is exact.
        let h = hierarchy(&p, 1, 3, &AnalysisSettings::default()).unwrap();
        assert_eq!(h.reports.len(), 3);
        assert!((h.reports[0].raw_value - 1.0).abs() < 1e-6);
        for r in &h.reports[1..] {
            assert!(r.raw_value.abs() < 1e-6, "{}", r.raw_value);
            assert_eq!(r.verdict, Verdict::CertifiedRobustlyDStable);
        }
        assert!(h.monotonicity_violations.is_empty());
    }

    #[test]
    fn hierarchy_checks_range() {
        let s = AnalysisSettings::default();
        assert_eq!(
            hierarchy(&running(1.0), 3, 2, &s).unwrap_err(),
            AnalysisError::EmptyRange { min: 3, max: 2 }
        );
        assert_eq!(
            hierarchy(&running(1.0), 0, 2, &s).unwrap_err(),
            AnalysisError::OrderTooLow { order: 0, minimal: 1 }
        );
    }

    #[test]
    fn sweep_records_failures() {
        let s = AnalysisSettings::default();
        let pts = sweep(
            |m: f64| {
                if m < 0.0 {
                    Err("negative mean")
                } else {
                    Ok(mean(running(1.0), m))
                }
            },
            &[-1.0, 0.25],
            2,
            &s,
        )
        .unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0].status(), "Error");
        // Best measure puts 0.25 of its mass on ρ = 1.
        let r = pts[1].outcome.as_ref().unwrap();
        assert!((r.p_upper - 0.25).abs() < 1e-4);
        assert!(sweep(|_| Ok::<_, String>(running(1.0)), &[], 2, &s).is_err());
    }

    #[test]
    fn bisection_on_support_width() {
        let s = AnalysisSettings::default();
        let r = bisect_margin(|k| Ok::<_, String>(running(k)), 0.5, 1.5, 2, 1e-2, &s).unwrap();
        assert!(r.k <= 1.0 && r.k > 0.98, "{}", r.k);
        assert!(r.k_fail.unwrap() - r.k <= 1e-2);
        let r = bisect_margin(|k| Ok::<_, String>(running(k)), 0.2, 0.5, 2, 1e-2, &s).unwrap();
        assert_eq!(r.k, 0.5);
        assert_eq!(r.k_fail, None);
        assert_eq!(
            bisect_margin(|k| Ok::<_, String>(running(k)), 1.2, 1.5, 2, 1e-2, &s).unwrap_err(),
            AnalysisError::NotBracketed(1.2)
        );
    }
}
