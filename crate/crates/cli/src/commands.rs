use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use dstab_core::analysis::{
    bisect_margin, hierarchy, run_analysis, sweep, AnalysisError, AnalysisReport, AnalysisRun, AnalysisSettings,
    Verdict, SWEEP_CSV_HEADER,
};
use dstab_core::oracle::{atomic_lp_bound_with, grid_max_real_part, grid_points, grid_violation_search, GridOptions};
use dstab_core::problem::{build_lifted, minimal_order, DStabilityProblem};
use dstab_core::relax::{assemble_relaxation_with, problem_stats, write_sdp};
use dstab_core::sdp::IterationRecord;
use dstab_core::Execution;

use crate::format::{sig, vector};
use crate::problem_file::{parse_with, FileError, ProblemFile};

#[derive(Debug, Parser)]
#[command(name = "dstab", version, about = "Robust and probabilistic D-stability of polynomial uncertain matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Upper bound on the probability that an eigenvalue leaves the region.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Also write the assembled relaxation to this file.
        #[arg(long, value_name = "PATH")]
        export_sdp: Option<PathBuf>,
    },
    /// Certify robust D-stability over the whole uncertainty set.
    Certify {
        #[command(flatten)]
        common: Common,
    },
    /// Solve a range of relaxation orders.
    Hierarchy {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "N")]
        tau_max: Option<usize>,
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// Bound the violation probability as a file parameter varies.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Parameter declared in the file's [parameters] section.
        #[arg(long)]
        param: String,
        /// `lo:hi:count` (inclusive) or a comma-separated list.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// Largest parameter value for which robust stability is certified.
    Bisect {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        param: String,
        #[arg(long, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, allow_hyphen_values = true)]
        hi: f64,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
    /// Brute-force grid search and atomic LP bound.
    Oracle {
        #[command(flatten)]
        input: Input,
        /// Grid points per axis (or samples per axis for non-box sets).
        #[arg(long, default_value_t = 21, value_name = "N")]
        grid: usize,
        /// Seed for rejection sampling.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        sequential: bool,
    },
    /// Write the order-τ relaxation in the text SDP format.
    ExportSdp {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_name = "N")]
        tau: Option<usize>,
        /// Output path; standard output when omitted.
        #[arg(short, long, value_name = "PATH")]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct Input {
    /// Problem file.
    pub file: PathBuf,
    /// Override a file parameter, `name=value`. Repeatable.
    #[arg(long = "set", value_name = "NAME=VALUE", value_parser = parse_assignment)]
    pub set: Vec<(String, f64)>,
}

#[derive(Debug, Args)]
pub struct Common {
    #[command(flatten)]
    pub input: Input,
    /// Relaxation order (default: from the file, else the minimal order).
    #[arg(long, value_name = "N")]
    pub tau: Option<usize>,
    /// Certification needs raw < 1 − margin.
    #[arg(long, value_name = "EPS")]
    pub margin: Option<f64>,
    /// Print the interior-point iteration table.
    #[arg(long)]
    pub log_iterations: bool,
    /// Disable data-parallel linear algebra.
    #[arg(long)]
    pub sequential: bool,
}

fn parse_assignment(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected NAME=VALUE")?;
    let v = v.trim().parse::<f64>().map_err(|e| format!("bad value `{v}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

/// Exit status of a completed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Completed,
    /// Not certified, or the relaxation was inconclusive.
    NotCertified,
}

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Outcome::Completed => 0,
            Outcome::NotCertified => 2,
        }
    }
}

struct Loaded {
    text: String,
    overrides: BTreeMap<String, f64>,
    file: ProblemFile,
}

fn load(input: &Input) -> Result<Loaded> {
    let path = &input.file;
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let overrides: BTreeMap<String, f64> = input.set.iter().cloned().collect();
    let file = parse_with(&text, &overrides).with_context(|| path.display().to_string())?;
    Ok(Loaded { text, overrides, file })
}

impl Loaded {
    fn family(&self, param: &str) -> Result<impl Fn(f64) -> std::result::Result<DStabilityProblem, FileError> + '_> {
        if !self.file.parameters.iter().any(|(n, _)| n == param) {
            bail!("parameter `{param}` is not declared in [parameters]");
        }
        let param = param.to_string();
        Ok(move |theta: f64| {
            let mut o = self.overrides.clone();
            o.insert(param.clone(), theta);
            parse_with(&self.text, &o).map(|f| f.problem)
        })
    }
}

fn settings(common: &Common, file: &ProblemFile) -> AnalysisSettings {
    let mut s = AnalysisSettings::default();
    let o = &file.options;
    if let Some(m) = common.margin.or(o.margin) {
        s.margin = m;
    }
    if let Some(v) = o.feasibility_tol {
        s.solver.feasibility_tol = v;
    }
    if let Some(v) = o.gap_tol {
        s.solver.gap_tol = v;
    }
    if let Some(v) = o.max_iterations {
        s.solver.max_iterations = v;
    }
    if let Some(e) = o.encoding {
        s.relax.encoding = e;
    }
    if let Some(r) = o.rescale {
        s.relax.rescale = r;
    }
    s.solver.log_iterations = common.log_iterations;
    if common.sequential {
        s.solver.execution = Execution::Sequential;
    }
    s
}

fn order(tau: Option<usize>, file: &ProblemFile) -> Result<usize> {
    match tau.or(file.options.tau) {
        Some(t) => Ok(t),
        None => Ok(minimal_order(&build_lifted(&file.problem)?)),
    }
}

fn outcome_of(report: &AnalysisReport) -> Outcome {
    match report.verdict {
        Verdict::Inconclusive => Outcome::NotCertified,
        _ => Outcome::Completed,
    }
}

/// Runs a parsed command, writing the human-readable summary to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<Outcome> {
    match &cli.command {
        Command::Analyze { common, export_sdp } => {
            let l = load(&common.input)?;
            let tau = order(common.tau, &l.file)?;
            let run = run_analysis(&l.file.problem, tau, &settings(common, &l.file))?;
            if let Some(path) = export_sdp {
                export(&run, path)?;
            }
            print_run(out, &run, common.log_iterations)?;
            Ok(outcome_of(&run.report))
        }
        Command::Certify { common } => {
            let l = load(&common.input)?;
            let p = &l.file.problem;
            if !p.is_support_only() {
                return Err(AnalysisError::HasMomentInformation(p.moment_constraints().len()).into());
            }
            let tau = order(common.tau, &l.file)?;
            let run = run_analysis(p, tau, &settings(common, &l.file))?;
            let r = &run.report;
            let certified = r.verdict == Verdict::CertifiedRobustlyDStable;
            let label = if certified { "CertifiedRobustlyDStable" } else { "NotCertified" };
            writeln!(out, "{label}, raw={}", sig(r.raw_value))?;
            print_run(out, &run, common.log_iterations)?;
            Ok(if certified { Outcome::Completed } else { Outcome::NotCertified })
        }
        Command::Hierarchy { common, tau_max, csv } => {
            let l = load(&common.input)?;
            let lo = order(common.tau, &l.file)?;
            let hi = tau_max.or(l.file.options.tau_max).unwrap_or(lo + 1);
            let h = hierarchy(&l.file.problem, lo, hi, &settings(common, &l.file))?;
            writeln!(out, "{:>4} {:>16} {:>16} {:>14} {:>26} {:>10}", "tau", "p_upper", "raw", "status", "verdict", "seconds")?;
            for r in &h.reports {
                writeln!(
                    out,
                    "{:>4} {:>16} {:>16} {:>14} {:>26} {:>10}",
                    r.tau,
                    sig(r.p_upper),
                    sig(r.raw_value),
                    r.diagnostics.status.to_string(),
                    r.verdict.to_string(),
                    sig(r.diagnostics.seconds_total)
                )?;
            }
            for v in &h.monotonicity_violations {
                writeln!(
                    out,
                    "warning: raw value rose from {} (order {}) to {} (order {})",
                    sig(v.raw),
                    v.tau,
                    sig(v.raw_next),
                    v.tau + 1
                )?;
            }
            if let Some(path) = csv {
                let mut w = csv_writer(path)?;
                w.write_record(["tau", "p_upper", "p_lower", "raw", "status", "verdict", "seconds"])?;
                for r in &h.reports {
                    w.write_record([
                        r.tau.to_string(),
                        sig(r.p_upper),
                        sig(r.p_lower_bound_on_stability),
                        sig(r.raw_value),
                        r.diagnostics.status.to_string(),
                        r.verdict.to_string(),
                        sig(r.diagnostics.seconds_total),
                    ])?;
                }
                w.flush()?;
            }
            let last = h.reports.last().expect("nonempty order range");
            Ok(outcome_of(last))
        }
        Command::Sweep {
            common,
            param,
            values,
            csv,
        } => {
            let l = load(&common.input)?;
            let grid = parse_values(values)?;
            let tau = order(common.tau, &l.file)?;
            let points = sweep(l.family(param)?, &grid, tau, &settings(common, &l.file))?;
            writeln!(out, "{:>16} {:>16} {:>16} {:>26} {:>10}", param, "p_upper", "p_lower", "status", "seconds")?;
            let mut rows = Vec::with_capacity(points.len());
            for p in &points {
                let (upper, lower, tau) = match &p.outcome {
                    Ok(r) => (sig(r.p_upper), sig(r.p_lower_bound_on_stability), r.tau.to_string()),
                    Err(e) => {
                        log::error!("{param} = {}: {e}", p.theta);
                        ("".into(), "".into(), tau.to_string())
                    }
                };
                writeln!(out, "{:>16} {:>16} {:>16} {:>26} {:>10}", sig(p.theta), upper, lower, p.status(), sig(p.seconds))?;
                rows.push([sig(p.theta), upper, lower, p.status(), tau, sig(p.seconds)]);
            }
            if let Some(path) = csv {
                let mut w = csv_writer(path)?;
                w.write_record(SWEEP_CSV_HEADER)?;
                for r in rows {
                    w.write_record(r)?;
                }
                w.flush()?;
            }
            Ok(Outcome::Completed)
        }
        Command::Bisect {
            common,
            param,
            lo,
            hi,
            tol,
        } => {
            let l = load(&common.input)?;
            let tau = order(common.tau, &l.file)?;
            let result = bisect_margin(l.family(param)?, *lo, *hi, tau, *tol, &settings(common, &l.file));
            let result = match result {
                Err(AnalysisError::NotBracketed(k)) => {
                    writeln!(out, "NotCertified at {param} = {}", sig(k))?;
                    return Ok(Outcome::NotCertified);
                }
                r => r?,
            };
            for s in &result.steps {
                let label = if s.certified { "certified" } else { "not certified" };
                writeln!(out, "{param} = {:>16}  raw = {:>16}  {label}", sig(s.k), sig(s.raw_value))?;
            }
            writeln!(out, "certified up to {param} = {}", sig(result.k))?;
            match result.k_fail {
                Some(k) => writeln!(out, "first failure at {param} = {}", sig(k))?,
                None => writeln!(out, "certified over the whole range")?,
            }
            Ok(Outcome::Completed)
        }
        Command::Oracle {
            input,
            grid,
            seed,
            sequential,
        } => {
            let l = load(input)?;
            let p = &l.file.problem;
            let opts = GridOptions {
                points_per_axis: *grid,
                seed: *seed,
                execution: if *sequential { Execution::Sequential } else { Execution::Parallel },
            };
            let points = grid_points(p.delta(), &opts)?;
            if points.is_empty() {
                bail!("no grid or sample points lie in the uncertainty set (equality constraints are never hit by sampling)");
            }
            writeln!(out, "grid points: {}", points.len())?;
            match grid_violation_search(p, &opts)? {
                Some(w) => writeln!(
                    out,
                    "witness: rho={} lambda={} depth={} eig_residual={}",
                    vector(&w.rho),
                    complex(w.lambda.re, w.lambda.im),
                    sig(w.min_region_residual),
                    sig(w.eig_residual)
                )?,
                None => writeln!(out, "witness: none")?,
            }
            let (at, re) = grid_max_real_part(p, &opts)?;
            writeln!(out, "max real part: {} at rho={}", sig(re), vector(&at))?;
            match atomic_lp_bound_with(p, &points, opts.execution) {
                Ok(lp) => writeln!(
                    out,
                    "lp bound: {} ({} atoms, {} violating)",
                    sig(lp.lower_bound),
                    lp.atoms.len(),
                    lp.violating.iter().filter(|&&v| v).count()
                )?,
                Err(e) => writeln!(out, "lp bound: unavailable ({e})")?,
            }
            Ok(Outcome::Completed)
        }
        Command::ExportSdp { input, tau, output } => {
            let l = load(input)?;
            let lifted = build_lifted(&l.file.problem)?;
            let tau = tau.or(l.file.options.tau).unwrap_or_else(|| minimal_order(&lifted));
            let mut relax = dstab_core::relax::RelaxOptions::default();
            if let Some(e) = l.file.options.encoding {
                relax.encoding = e;
            }
            if let Some(r) = l.file.options.rescale {
                relax.rescale = r;
            }
            let sdp = assemble_relaxation_with(&lifted, tau, relax)?;
            match output {
                Some(path) => {
                    let mut w = BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?);
                    write_sdp(&sdp, &mut w)?;
                    w.flush()?;
                    writeln!(out, "wrote {}", path.display())?;
                    writeln!(out, "{}", problem_stats(&sdp))?;
                }
                None => write_sdp(&sdp, out)?,
            }
            Ok(Outcome::Completed)
        }
    }
}

fn export(run: &AnalysisRun, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?);
    write_sdp(&run.sdp, &mut w)?;
    w.flush()?;
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))
}

fn complex(re: f64, im: f64) -> String {
    if im == 0.0 {
        sig(re)
    } else if im < 0.0 {
        format!("{}-{}i", sig(re), sig(-im))
    } else {
        format!("{}+{}i", sig(re), sig(im))
    }
}

fn print_run(out: &mut dyn Write, run: &AnalysisRun, log_iterations: bool) -> Result<()> {
    let r = &run.report;
    let d = &r.diagnostics;
    if log_iterations {
        writeln!(out, "{}", IterationRecord::HEADER)?;
        for rec in &run.solution.log {
            writeln!(out, "{rec}")?;
        }
    }
    match d.requested_order {
        Some(req) => writeln!(out, "order: {} (raised from {req})", r.tau)?,
        None => writeln!(out, "order: {}", r.tau)?,
    }
    writeln!(out, "relaxation: {:?} encoding", d.encoding)?;
    for line in d.stats.to_string().lines() {
        writeln!(out, "  {line}")?;
    }
    let accuracy = if d.reduced_accuracy { " (reduced accuracy)" } else { "" };
    writeln!(out, "status: {}{accuracy}", d.status)?;
    writeln!(out, "verdict: {}", r.verdict)?;
    writeln!(out, "p_upper: {}", sig(r.p_upper))?;
    writeln!(out, "p_lower_stability: {}", sig(r.p_lower_bound_on_stability))?;
    writeln!(out, "raw: {}", sig(r.raw_value))?;
    writeln!(out, "dual: {}", sig(d.dual_value))?;
    writeln!(
        out,
        "residuals: primal={} dual={} gap={}",
        sig(d.residuals.primal_infeas),
        sig(d.residuals.dual_infeas),
        sig(d.residuals.gap)
    )?;
    writeln!(out, "iterations: {}", d.iterations)?;
    writeln!(out, "seconds: solve={} total={}", sig(d.seconds_solve), sig(d.seconds_total))?;
    if let Some(c) = &r.candidate {
        writeln!(
            out,
            "candidate: rho={} lambda={} residual={} dispersion={}",
            vector(&c.rho),
            complex(c.lambda.re, c.lambda.im),
            sig(c.max_residual()),
            sig(c.dispersion)
        )?;
    }
    Ok(())
}

/// `lo:hi:count` with both ends included, or `a,b,c`.
pub fn parse_values(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| s.trim().parse::<f64>().with_context(|| format!("bad number `{s}` in `{spec}`"));
    match parts.as_slice() {
        [lo, hi, count] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            let n: usize = count.trim().parse().with_context(|| format!("bad count in `{spec}`"))?;
            if n == 0 {
                bail!("empty range `{spec}`");
            }
            if n == 1 {
                return Ok(vec![lo]);
            }
            Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
        }
        [list] => list.split(',').filter(|s| !s.trim().is_empty()).map(num).collect(),
        _ => bail!("expected `lo:hi:count` or a comma-separated list, got `{spec}`"),
    }
}
