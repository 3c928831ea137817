//! The D-stability problem and its lift into the augmented variable `z`.
//!
//! The lifted support set `Z` encodes "`λ` is an eigenvalue of `A(ρ)` with
//! eigenvector `x`, `ρ ∈ Δ`, `λ ∈ D^c`, `‖x‖ ≤ 1`". Maximizing `E[‖x‖²]`
//! over measures on `Z` whose `ρ`-marginal satisfies the moment information
//! gives the worst-case violation probability.

use std::ops::Range;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::poly::{PolyError, Polynomial};
use crate::sets::{Constraint, SemialgebraicSet, SetError, StabilityRegionComplement, LAMBDA_IM, LAMBDA_RE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("matrix of size {size} needs {expected} entries, got {got}")]
    EntryCount { size: usize, expected: usize, got: usize },
    #[error("matrix entry ({row},{col}) is over {got} variables, expected {expected}")]
    EntryVariables { row: usize, col: usize, expected: usize, got: usize },
    #[error("uncertainty set variables {delta:?} differ from matrix variables {matrix:?}")]
    DeltaVariables { delta: Vec<String>, matrix: Vec<String> },
    #[error("moment function must be a polynomial in the uncertain parameters only")]
    MomentVariables,
    #[error("real eigen-space requested for a non-symmetric matrix; set the override to force it")]
    NonSymmetricReal,
    #[error("variable name `{0}` is reserved for the lifted problem")]
    ReservedName(String),
    #[error("spectral bound needs interval bounds for `{0}`; supply an explicit radius")]
    UnboundedVariable(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Set(#[from] SetError),
}

/// Square matrix with polynomial entries in the uncertain parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertainMatrix {
    size: usize,
    variables: Vec<String>,
    entries: Vec<Polynomial>,
}

impl UncertainMatrix {
    /// `entries` are row-major.
    pub fn new(variables: Vec<String>, size: usize, entries: Vec<Polynomial>) -> Result<Self, ProblemError> {
        if entries.len() != size * size {
            return Err(ProblemError::EntryCount {
                size,
                expected: size * size,
                got: entries.len(),
            });
        }
        for (k, e) in entries.iter().enumerate() {
            if e.num_vars() != variables.len() {
                return Err(ProblemError::EntryVariables {
                    row: k / size,
                    col: k % size,
                    expected: variables.len(),
                    got: e.num_vars(),
                });
            }
        }
        Ok(Self {
            size,
            variables,
            entries,
        })
    }

    /// Parses row-major entry expressions over `variables`.
    pub fn parse(variables: Vec<String>, size: usize, entries: &[&str]) -> Result<Self, ProblemError> {
        let polys = entries
            .iter()
            .map(|e| crate::poly::parse_polynomial(e, &variables))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(variables, size, polys)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn entry(&self, row: usize, col: usize) -> &Polynomial {
        &self.entries[row * self.size + col]
    }

    pub fn entries(&self) -> &[Polynomial] {
        &self.entries
    }

    pub fn degree(&self) -> u32 {
        self.entries.iter().map(|e| e.degree()).max().unwrap_or(0)
    }

    /// Symbolic symmetry: `A_ij - A_ji` is the zero polynomial for all pairs.
    pub fn is_symmetric(&self) -> bool {
        (0..self.size).all(|i| (0..i).all(|j| (self.entry(i, j) - self.entry(j, i)).is_zero()))
    }

    /// Numeric matrix `A(ρ)`.
    pub fn eval(&self, rho: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.size, self.size, |i, j| self.entry(i, j).eval(rho))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MomentRelation {
    Eq,
    Le,
    Ge,
}

impl MomentRelation {
    pub fn symbol(self) -> &'static str {
        match self {
            MomentRelation::Eq => "=",
            MomentRelation::Le => "<=",
            MomentRelation::Ge => ">=",
        }
    }

    /// Whether `value` satisfies the relation against `target` within `tol`.
    pub fn holds(self, value: f64, target: f64, tol: f64) -> bool {
        match self {
            MomentRelation::Eq => (value - target).abs() <= tol,
            MomentRelation::Le => value <= target + tol,
            MomentRelation::Ge => value >= target - tol,
        }
    }
}

/// `E[f(ρ)] (=|≤|≥) target`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentConstraint {
    pub f: Polynomial,
    pub relation: MomentRelation,
    pub target: f64,
}

impl MomentConstraint {
    pub fn new(f: Polynomial, relation: MomentRelation, target: f64) -> Self {
        Self { f, relation, target }
    }

    /// The probability normalization `E[1] = 1`.
    pub fn normalization(num_vars: usize) -> Self {
        Self::new(Polynomial::constant(num_vars, 1.0), MomentRelation::Eq, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EigenSpace {
    /// Real eigenvalues and eigenvectors only; exact for symmetric matrices.
    Real,
    Complex,
}

/// How the eigenvalue coordinates are kept bounded in the lifted set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaBound {
    /// Intersect an unbounded `D^c` with the disk of radius [`spectral_bound`].
    Auto,
    Off,
    Radius(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DStabilityProblem {
    matrix: UncertainMatrix,
    delta: SemialgebraicSet,
    region: StabilityRegionComplement,
    moment_constraints: Vec<MomentConstraint>,
    eigen_space: EigenSpace,
    force_real: bool,
    lambda_bound: LambdaBound,
}

const RESERVED: [&str; 2] = [LAMBDA_RE, LAMBDA_IM];

impl DStabilityProblem {
    /// Support-only problem; the eigen-space is real iff the matrix is symbolically symmetric.
    pub fn new(
        matrix: UncertainMatrix,
        delta: SemialgebraicSet,
        region: StabilityRegionComplement,
    ) -> Result<Self, ProblemError> {
        if delta.variables() != matrix.variables() {
            return Err(ProblemError::DeltaVariables {
                delta: delta.variables().to_vec(),
                matrix: matrix.variables().to_vec(),
            });
        }
        for v in matrix.variables() {
            if RESERVED.contains(&v.as_str()) || is_x_name(v) {
                return Err(ProblemError::ReservedName(v.clone()));
            }
        }
        let eigen_space = if matrix.is_symmetric() {
            EigenSpace::Real
        } else {
            EigenSpace::Complex
        };
        Ok(Self {
            matrix,
            delta,
            region,
            moment_constraints: Vec::new(),
            eigen_space,
            force_real: false,
            lambda_bound: LambdaBound::Auto,
        })
    }

    /// Selects the eigen-space. Forcing `Real` on a non-symmetric matrix also
    /// requires `force_real = true`; it then ignores complex eigenvalues.
    pub fn with_eigen_space(mut self, space: EigenSpace, force_real: bool) -> Self {
        self.eigen_space = space;
        self.force_real = force_real;
        self
    }

    pub fn with_lambda_bound(mut self, bound: LambdaBound) -> Self {
        self.lambda_bound = bound;
        self
    }

    pub fn with_moment(mut self, c: MomentConstraint) -> Result<Self, ProblemError> {
        self.add_moment(c)?;
        Ok(self)
    }

    pub fn add_moment(&mut self, c: MomentConstraint) -> Result<(), ProblemError> {
        if c.f.num_vars() != self.matrix.variables().len() {
            return Err(ProblemError::MomentVariables);
        }
        self.moment_constraints.push(c);
        Ok(())
    }

    /// Drops all user moment information, keeping only the support.
    pub fn support_only(&self) -> Self {
        let mut p = self.clone();
        p.moment_constraints.clear();
        p
    }

    pub fn matrix(&self) -> &UncertainMatrix {
        &self.matrix
    }

    pub fn delta(&self) -> &SemialgebraicSet {
        &self.delta
    }

    pub fn region(&self) -> &StabilityRegionComplement {
        &self.region
    }

    pub fn eigen_space(&self) -> EigenSpace {
        self.eigen_space
    }

    pub fn force_real(&self) -> bool {
        self.force_real
    }

    pub fn lambda_bound(&self) -> LambdaBound {
        self.lambda_bound
    }

    pub fn variables(&self) -> &[String] {
        self.matrix.variables()
    }

    /// User moment constraints, without the implicit normalization.
    pub fn moment_constraints(&self) -> &[MomentConstraint] {
        &self.moment_constraints
    }

    /// Normalization first, then the user constraints.
    pub fn all_moment_constraints(&self) -> Vec<MomentConstraint> {
        let mut v = vec![MomentConstraint::normalization(self.variables().len())];
        v.extend(self.moment_constraints.iter().cloned());
        v
    }

    pub fn is_support_only(&self) -> bool {
        self.moment_constraints.is_empty()
    }
}

fn is_x_name(v: &str) -> bool {
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    v.strip_prefix("xre").is_some_and(digits)
        || v.strip_prefix("xim").is_some_and(digits)
        || v.strip_prefix('x').is_some_and(digits)
}

/// Positions of each coordinate group inside `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZLayout {
    pub rho: Range<usize>,
    pub lambda_re: usize,
    pub lambda_im: Option<usize>,
    pub x_re: Range<usize>,
    pub x_im: Option<Range<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftedMomentConstraint {
    pub f: Polynomial,
    pub relation: MomentRelation,
    pub target: f64,
}

/// Augmented formulation over `z = (ρ, λre, [λim], x_re, [x_im])`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedProblem {
    pub z_vars: Vec<String>,
    pub layout: ZLayout,
    /// The set `Z`.
    pub support: SemialgebraicSet,
    /// `h(z) = ‖x‖²`.
    pub objective: Polynomial,
    /// All moment constraints including the normalization (first).
    pub moment_constraints: Vec<LiftedMomentConstraint>,
    /// Radius of the `λ` disk added to `Z`, if any.
    pub lambda_radius: Option<f64>,
    pub eigen_space: EigenSpace,
}

impl LiftedProblem {
    pub fn num_vars(&self) -> usize {
        self.z_vars.len()
    }

    /// User moment constraints are present beyond the normalization.
    pub fn has_moment_information(&self) -> bool {
        self.moment_constraints.len() > 1
    }
}

/// Builds `Z`, `h` and the lifted moment functions.
pub fn build_lifted(problem: &DStabilityProblem) -> Result<LiftedProblem, ProblemError> {
    let real = problem.eigen_space == EigenSpace::Real;
    if real && !problem.force_real && !problem.matrix.is_symmetric() {
        return Err(ProblemError::NonSymmetricReal);
    }
    let na = problem.matrix.size();
    let rho_vars = problem.variables();
    let nr = rho_vars.len();

    let mut z_vars: Vec<String> = rho_vars.to_vec();
    let lambda_re = z_vars.len();
    z_vars.push(LAMBDA_RE.to_string());
    let lambda_im = (!real).then(|| {
        z_vars.push(LAMBDA_IM.to_string());
        z_vars.len() - 1
    });
    let x_start = z_vars.len();
    if real {
        z_vars.extend((1..=na).map(|i| format!("x{i}")));
    } else {
        z_vars.extend((1..=na).map(|i| format!("xre{i}")));
        z_vars.extend((1..=na).map(|i| format!("xim{i}")));
    }
    let x_re = x_start..x_start + na;
    let x_im = (!real).then(|| x_start + na..x_start + 2 * na);
    let layout = ZLayout {
        rho: 0..nr,
        lambda_re,
        lambda_im,
        x_re: x_re.clone(),
        x_im: x_im.clone(),
    };
    let nz = z_vars.len();
    let rho_map: Vec<usize> = (0..nr).collect();
    let lift_rho = |p: &Polynomial| p.remap(&rho_map, nz);
    let var = |i: usize| Polynomial::var(nz, i);

    let mut support = SemialgebraicSet::new(z_vars.clone());
    for c in problem.delta.constraints() {
        support.push(Constraint {
            poly: lift_rho(&c.poly),
            relation: c.relation,
        })?;
    }

    let region = problem.region.clone().with_real_spectrum(real);
    let lambda_map: Vec<usize> = match lambda_im {
        Some(im) => vec![lambda_re, im],
        None => vec![lambda_re],
    };
    for c in region.active_constraints() {
        support.push(Constraint {
            poly: c.poly.remap(&lambda_map, nz),
            relation: c.relation,
        })?;
    }

    let lambda_radius = match problem.lambda_bound {
        LambdaBound::Off => None,
        LambdaBound::Radius(r) => Some(r),
        LambdaBound::Auto if region.is_known_bounded() => None,
        LambdaBound::Auto => Some(spectral_bound(&problem.matrix, &problem.delta)?),
    };
    if let Some(r) = lambda_radius {
        let mut disk = Polynomial::constant(nz, r * r);
        for &i in &lambda_map {
            disk = &disk - &var(i).pow(2);
        }
        support.push(Constraint::geq(disk))?;
    }

    // (A(ρ) - λre I) x_re + λim x_im = 0 and (A(ρ) - λre I) x_im - λim x_re = 0.
    let shifted = |i: usize, j: usize| {
        let a = lift_rho(problem.matrix.entry(i, j));
        if i == j {
            &a - &var(lambda_re)
        } else {
            a
        }
    };
    for i in 0..na {
        let mut row_re = Polynomial::zero(nz);
        for j in 0..na {
            row_re = &row_re + &(&shifted(i, j) * &var(x_re.start + j));
        }
        if let (Some(im), Some(xi)) = (lambda_im, &x_im) {
            row_re = &row_re + &(&var(im) * &var(xi.start + i));
        }
        support.push(Constraint::eq(row_re))?;
    }
    if let (Some(im), Some(xi)) = (lambda_im, &x_im) {
        for i in 0..na {
            let mut row_im = Polynomial::zero(nz);
            for j in 0..na {
                row_im = &row_im + &(&shifted(i, j) * &var(xi.start + j));
            }
            row_im = &row_im - &(&var(im) * &var(x_re.start + i));
            support.push(Constraint::eq(row_im))?;
        }
    }

    let mut objective = Polynomial::zero(nz);
    for i in x_re.clone().chain(x_im.clone().unwrap_or(0..0)) {
        objective = &objective + &var(i).pow(2);
    }
    support.push(Constraint::geq((-&objective).add_constant(1.0)))?;

    let moment_constraints = problem
        .all_moment_constraints()
        .into_iter()
        .map(|c| LiftedMomentConstraint {
            f: lift_rho(&c.f),
            relation: c.relation,
            target: c.target,
        })
        .collect();

    Ok(LiftedProblem {
        z_vars,
        layout,
        support,
        objective,
        moment_constraints,
        lambda_radius,
        eigen_space: problem.eigen_space,
    })
}

/// Bound `R` on `|λ|` for every eigenvalue of `A(ρ)`, `ρ ∈ Δ`: the largest row
/// sum of entrywise magnitude bounds, computed by interval arithmetic over the
/// bounding box of `Δ`.
pub fn spectral_bound(matrix: &UncertainMatrix, delta: &SemialgebraicSet) -> Result<f64, ProblemError> {
    let bounds = delta.variable_bounds();
    let n = matrix.size();
    let mut best = 0.0f64;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            let e = matrix.entry(i, j);
            row += interval_eval(e, &bounds, matrix.variables())?.magnitude();
        }
        best = best.max(row);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    fn add(self, o: Interval) -> Interval {
        Interval {
            lo: self.lo + o.lo,
            hi: self.hi + o.hi,
        }
    }

    fn mul(self, o: Interval) -> Interval {
        let c = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        Interval {
            lo: c.iter().copied().fold(f64::INFINITY, f64::min),
            hi: c.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    fn powi(self, e: u32) -> Interval {
        if e == 0 {
            return Interval::point(1.0);
        }
        let a = self.lo.powi(e as i32);
        let b = self.hi.powi(e as i32);
        if e % 2 == 0 {
            let lo = if self.lo <= 0.0 && self.hi >= 0.0 { 0.0 } else { a.min(b) };
            Interval { lo, hi: a.max(b) }
        } else {
            Interval { lo: a, hi: b }
        }
    }

    fn magnitude(self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }
}

fn interval_eval(p: &Polynomial, bounds: &[Option<(f64, f64)>], names: &[String]) -> Result<Interval, ProblemError> {
    let mut acc = Interval::point(0.0);
    for (a, c) in p.terms() {
        let mut term = Interval::point(c);
        for (v, &e) in a.as_slice().iter().enumerate() {
            if e == 0 {
                continue;
            }
            let (lo, hi) = bounds[v].ok_or_else(|| ProblemError::UnboundedVariable(names[v].clone()))?;
            term = term.mul(Interval { lo, hi }.powi(e));
        }
        acc = acc.add(term);
    }
    Ok(acc)
}

/// Smallest admissible relaxation order:
/// `max{1, ⌈deg f̃_i / 2⌉, ⌈deg q_j / 2⌉, ⌈deg h / 2⌉}`.
pub fn minimal_order(lifted: &LiftedProblem) -> usize {
    let half = |d: u32| d.div_ceil(2) as usize;
    let f = lifted.moment_constraints.iter().map(|c| half(c.f.degree()));
    let q = lifted.support.constraints().iter().map(|c| half(c.poly.degree()));
    f.chain(q)
        .chain(std::iter::once(half(lifted.objective.degree())))
        .fold(1, usize::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_polynomial;
    use crate::sets::Relation;
    use crate::sets::{box_set, region_preset, RegionPreset};

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    pub(crate) fn running_example() -> DStabilityProblem {
        let vars = names(&["rho"]);
        let a = UncertainMatrix::parse(vars.clone(), 2, &["rho - 1", "0", "0", "-1"]).unwrap();
        let d = box_set(vars, &[0.0], &[1.0]).unwrap();
        DStabilityProblem::new(a, d, region_preset(RegionPreset::LeftHalfPlaneClosure)).unwrap()
    }

    fn hurwitz_example() -> DStabilityProblem {
        let vars = names(&["rho"]);
        let a = UncertainMatrix::parse(
            vars.clone(),
            2,
            &["-2.4 - rho^2", "6 - rho^2", "1 - 2*rho^2", "-2.9 - 2*rho"],
        )
        .unwrap();
        let d = box_set(vars, &[-0.1], &[3.4]).unwrap();
        DStabilityProblem::new(a, d, region_preset(RegionPreset::LeftHalfPlaneClosure)).unwrap()
    }

    #[test]
    fn running_example_lift() {
        let p = running_example();
        assert_eq!(p.eigen_space(), EigenSpace::Real);
        let l = build_lifted(&p).unwrap();
        assert_eq!(l.z_vars, names(&["rho", "lre", "x1", "x2"]));
        let z = &l.z_vars;
        let q = |s: &str| parse_polynomial(s, z).unwrap();
        let cs = l.support.constraints();
        let want = [
            ("rho", Relation::GreaterEqualZero),
            ("1 - rho", Relation::GreaterEqualZero),
            ("lre", Relation::GreaterEqualZero),
            ("1 - lre^2", Relation::GreaterEqualZero),
            ("(rho - 1 - lre)*x1", Relation::EqualZero),
            ("(-1 - lre)*x2", Relation::EqualZero),
            ("1 - x1^2 - x2^2", Relation::GreaterEqualZero),
        ];
        assert_eq!(cs.len(), want.len());
        for (c, (s, r)) in cs.iter().zip(want) {
            assert_eq!(c.poly, q(s), "{s}");
            assert_eq!(c.relation, r);
        }
        assert_eq!(l.objective, q("x1^2 + x2^2"));
        assert_eq!(l.lambda_radius, Some(1.0));
        assert_eq!(minimal_order(&l), 1);
    }

    #[test]
    fn scalar_case() {
        let vars = names(&["rho"]);
        let a = UncertainMatrix::parse(vars.clone(), 1, &["rho"]).unwrap();
        let d = box_set(vars, &[0.0], &[1.0]).unwrap();
        let p = DStabilityProblem::new(a, d, region_preset(RegionPreset::LeftHalfPlaneClosure))
            .unwrap()
            .with_lambda_bound(LambdaBound::Off);
        let l = build_lifted(&p).unwrap();
        let q = |s: &str| parse_polynomial(s, &l.z_vars).unwrap();
        let got: Vec<_> = l.support.constraints().iter().map(|c| c.poly.clone()).collect();
        assert_eq!(
            got,
            vec![q("rho"), q("1 - rho"), q("lre"), q("(rho - lre)*x1"), q("1 - x1^2")]
        );
        assert_eq!(l.support.constraints()[3].relation, Relation::EqualZero);
    }

    #[test]
    fn hurwitz_lift_dimensions() {
        let p = hurwitz_example();
        assert_eq!(p.eigen_space(), EigenSpace::Complex);
        let l = build_lifted(&p).unwrap();
        assert_eq!(l.num_vars(), 7);
        let eig: Vec<_> = l
            .support
            .constraints()
            .iter()
            .filter(|c| c.relation == Relation::EqualZero)
            .collect();
        assert_eq!(eig.len(), 4);
        assert!(eig.iter().all(|c| c.poly.degree() == 3));
        assert_eq!(minimal_order(&l), 2);
        assert_eq!(l.layout.x_im, Some(5..7));
    }

    #[test]
    fn forcing_real_needs_override() {
        let p = hurwitz_example().with_eigen_space(EigenSpace::Real, false);
        assert_eq!(build_lifted(&p), Err(ProblemError::NonSymmetricReal));
        let p = hurwitz_example().with_eigen_space(EigenSpace::Real, true);
        assert_eq!(build_lifted(&p).unwrap().num_vars(), 4);
    }

    #[test]
    fn moment_constraints_are_lifted() {
        let p = running_example()
            .with_moment(MomentConstraint::new(Polynomial::var(1, 0), MomentRelation::Eq, 0.5))
            .unwrap();
        let l = build_lifted(&p).unwrap();
        assert_eq!(l.moment_constraints.len(), 2);
        assert_eq!(l.moment_constraints[0].f, Polynomial::constant(4, 1.0));
        assert_eq!(l.moment_constraints[1].f, Polynomial::var(4, 0));
        assert!(p
            .clone()
            .with_moment(MomentConstraint::new(Polynomial::var(2, 1), MomentRelation::Eq, 0.5))
            .is_err());
    }

    #[test]
    fn reserved_names_rejected() {
        let vars = names(&["lre"]);
        let a = UncertainMatrix::parse(vars.clone(), 1, &["lre"]).unwrap();
        let d = box_set(vars, &[0.0], &[1.0]).unwrap();
        let r = DStabilityProblem::new(a, d, region_preset(RegionPreset::Origin));
        assert!(matches!(r, Err(ProblemError::ReservedName(_))));
    }

    #[test]
    fn spectral_bounds() {
        let p = running_example();
        assert_eq!(spectral_bound(p.matrix(), p.delta()).unwrap(), 1.0);
        let vars = names(&["rho"]);
        let d = box_set(vars.clone(), &[-5.0], &[5.0]).unwrap();
        let eye = UncertainMatrix::parse(vars.clone(), 2, &["1", "0", "0", "1"]).unwrap();
        assert_eq!(spectral_bound(&eye, &d).unwrap(), 1.0);
        let zero = UncertainMatrix::parse(vars.clone(), 2, &["0", "0", "0", "0"]).unwrap();
        assert_eq!(spectral_bound(&zero, &d).unwrap(), 0.0);
        let unbounded = SemialgebraicSet::new(vars.clone());
        let a = UncertainMatrix::parse(vars, 1, &["rho"]).unwrap();
        assert!(matches!(
            spectral_bound(&a, &unbounded),
            Err(ProblemError::UnboundedVariable(_))
        ));
    }

    #[test]
    fn spectral_bound_dominates_grid_eigenvalues() {
        let p = hurwitz_example();
        let r = spectral_bound(p.matrix(), p.delta()).unwrap();
        for k in 0..500 {
            let rho = -0.1 + 3.5 * k as f64 / 499.0;
            let m = p.matrix().eval(&[rho]);
            for ev in m.complex_eigenvalues().iter() {
                assert!(ev.norm() <= r + 1e-9);
            }
        }
    }

    #[test]
    fn lift_is_sound_at_eigenpairs_and_at_zero() {
        let p = running_example();
        let l = build_lifted(&p).unwrap();
        for k in 0..=20 {
            let rho = k as f64 / 20.0;
            // x = 0 is always admissible.
            for lam in [0.0, 0.3, 1.0] {
                assert!(l.support.contains(&[rho, lam, 0.0, 0.0], 0.0).unwrap());
            }
        }
        // The only violating eigenpair on [0, 1] is at rho = 1.
        assert!(l.support.contains(&[1.0, 0.0, 1.0, 0.0], 1e-12).unwrap());
        assert!(!l.support.contains(&[0.5, 0.0, 1.0, 0.0], 1e-6).unwrap());
    }

    #[test]
    fn minimal_order_is_monotone() {
        let p = hurwitz_example();
        let mut l = build_lifted(&p).unwrap();
        let before = minimal_order(&l);
        let nz = l.num_vars();
        l.support.push(Constraint::geq(Polynomial::var(nz, 0).pow(5))).unwrap();
        assert!(minimal_order(&l) >= before);
        assert_eq!(minimal_order(&l), 3);
    }
}
