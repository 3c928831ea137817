//! Semialgebraic sets: the uncertainty set `Δ`, the instability region `D^c`,
//! and the lifted support set built from them.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::poly::{PolyError, Polynomial};

/// Default tolerance for numeric membership tests.
pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SetError {
    #[error("constraint has {got} variables, set has {expected}")]
    VarCountMismatch { expected: usize, got: usize },
    #[error("inverted bounds for `{var}`: lower {lower} > upper {upper}")]
    InvertedBounds { var: String, lower: f64, upper: f64 },
    #[error("expected {expected} bounds, got {got}")]
    BoundCount { expected: usize, got: usize },
    #[error("compactification radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("unknown region preset `{0}`")]
    UnknownPreset(String),
    #[error("region constraints must be over exactly (lre, lim)")]
    RegionVariables,
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    GreaterEqualZero,
    EqualZero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub poly: Polynomial,
    pub relation: Relation,
}

impl Constraint {
    pub fn geq(poly: Polynomial) -> Self {
        Self {
            poly,
            relation: Relation::GreaterEqualZero,
        }
    }

    pub fn eq(poly: Polynomial) -> Self {
        Self {
            poly,
            relation: Relation::EqualZero,
        }
    }

    /// Signed slack at `point`: the value itself for `≥ 0`, `-|value|` for `= 0`.
    /// Nonnegative exactly when the constraint holds.
    pub fn slack(&self, point: &[f64]) -> f64 {
        let v = self.poly.eval(point);
        match self.relation {
            Relation::GreaterEqualZero => v,
            Relation::EqualZero => -v.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemialgebraicSet {
    variables: Vec<String>,
    constraints: Vec<Constraint>,
}

impl SemialgebraicSet {
    /// The whole space over `variables`.
    pub fn new(variables: Vec<String>) -> Self {
        Self {
            variables,
            constraints: Vec::new(),
        }
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn push(&mut self, c: Constraint) -> Result<(), SetError> {
        if c.poly.num_vars() != self.variables.len() {
            return Err(SetError::VarCountMismatch {
                expected: self.variables.len(),
                got: c.poly.num_vars(),
            });
        }
        self.constraints.push(c);
        Ok(())
    }

    pub fn with(mut self, c: Constraint) -> Result<Self, SetError> {
        self.push(c)?;
        Ok(self)
    }

    /// Minimum signed slack over all constraints (`+∞` for the whole space).
    pub fn depth(&self, point: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.slack(point))
            .fold(f64::INFINITY, f64::min)
    }

    /// True iff every `≥` constraint is `≥ -tol` and every `=` constraint has `|value| ≤ tol`.
    pub fn contains(&self, point: &[f64], tol: f64) -> Result<bool, SetError> {
        if point.len() != self.variables.len() {
            return Err(PolyError::DimensionMismatch {
                expected: self.variables.len(),
                got: point.len(),
            }
            .into());
        }
        Ok(self.depth(point) >= -tol)
    }

    /// Rewrites each `p = 0` as the pair `p ≥ 0`, `-p ≥ 0`.
    pub fn expand_equalities(&self) -> SemialgebraicSet {
        let mut out = SemialgebraicSet::new(self.variables.clone());
        for c in &self.constraints {
            match c.relation {
                Relation::GreaterEqualZero => out.constraints.push(c.clone()),
                Relation::EqualZero => {
                    out.constraints.push(Constraint::geq(c.poly.clone()));
                    out.constraints.push(Constraint::geq(-&c.poly));
                }
            }
        }
        out
    }

    /// Intersects with the ball `radius² - ‖z‖² ≥ 0`.
    pub fn compactify(&self, radius: f64) -> Result<SemialgebraicSet, SetError> {
        if !(radius > 0.0) {
            return Err(SetError::NonPositiveRadius(radius));
        }
        let n = self.num_vars();
        let mut ball = Polynomial::constant(n, radius * radius);
        for i in 0..n {
            ball = &ball - &Polynomial::var(n, i).pow(2);
        }
        self.clone().with(Constraint::geq(ball))
    }

    /// Axis-aligned bounds implied by single-variable linear constraints, if
    /// every variable gets both a lower and an upper bound. The box contains
    /// the set (other constraints only shrink it).
    pub fn bounding_box(&self) -> Option<Vec<(f64, f64)>> {
        self.variable_bounds().into_iter().collect()
    }

    /// Per-variable bounds implied by single-variable linear constraints;
    /// `None` for a variable missing a lower or an upper bound.
    pub fn variable_bounds(&self) -> Vec<Option<(f64, f64)>> {
        let n = self.num_vars();
        let mut lo = vec![f64::NEG_INFINITY; n];
        let mut hi = vec![f64::INFINITY; n];
        for c in &self.constraints {
            if c.poly.degree() != 1 {
                continue;
            }
            let mut var = None;
            let mut slope = 0.0;
            let mut single = true;
            for (a, coef) in c.poly.terms() {
                if a.is_zero() {
                    continue;
                }
                let i = a.as_slice().iter().position(|&e| e == 1).unwrap();
                if var.is_some() {
                    single = false;
                    break;
                }
                var = Some(i);
                slope = coef;
            }
            let (Some(i), true) = (var, single) else {
                continue;
            };
            let root = -c.poly.constant_term() / slope;
            match c.relation {
                Relation::EqualZero => {
                    lo[i] = lo[i].max(root);
                    hi[i] = hi[i].min(root);
                }
                Relation::GreaterEqualZero if slope > 0.0 => lo[i] = lo[i].max(root),
                Relation::GreaterEqualZero => hi[i] = hi[i].min(root),
            }
        }
        lo.into_iter()
            .zip(hi)
            .map(|(l, h)| (l.is_finite() && h.is_finite()).then_some((l, h)))
            .collect()
    }
}

/// The box `lower_i ≤ v_i ≤ upper_i`, written as `2n` constraints
/// `v_i - lower_i ≥ 0`, `upper_i - v_i ≥ 0`.
pub fn box_set(variables: Vec<String>, lower: &[f64], upper: &[f64]) -> Result<SemialgebraicSet, SetError> {
    let n = variables.len();
    if lower.len() != n || upper.len() != n {
        return Err(SetError::BoundCount {
            expected: n,
            got: lower.len().min(upper.len()),
        });
    }
    for i in 0..n {
        if lower[i] > upper[i] {
            return Err(SetError::InvertedBounds {
                var: variables[i].clone(),
                lower: lower[i],
                upper: upper[i],
            });
        }
    }
    let mut set = SemialgebraicSet::new(variables);
    for i in 0..n {
        let v = Polynomial::var(n, i);
        set.push(Constraint::geq(v.add_constant(-lower[i])))?;
        set.push(Constraint::geq((-&v).add_constant(upper[i])))?;
    }
    Ok(set)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionPreset {
    /// `λre ≥ 0`: complement of the open left half plane (Hurwitz stability).
    LeftHalfPlaneClosure,
    /// `λre² + λim² - 1 ≥ 0`: complement of the open unit disk (Schur stability).
    UnitDiskExteriorClosure,
    /// `λre = 0`.
    ImaginaryAxis,
    /// `λre = 0, λim = 0` (nonsingularity).
    Origin,
}

impl RegionPreset {
    pub const ALL: [RegionPreset; 4] = [
        RegionPreset::LeftHalfPlaneClosure,
        RegionPreset::UnitDiskExteriorClosure,
        RegionPreset::ImaginaryAxis,
        RegionPreset::Origin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RegionPreset::LeftHalfPlaneClosure => "left_half_plane_closure",
            RegionPreset::UnitDiskExteriorClosure => "unit_disk_exterior_closure",
            RegionPreset::ImaginaryAxis => "imaginary_axis",
            RegionPreset::Origin => "origin",
        }
    }
}

impl fmt::Display for RegionPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegionPreset {
    type Err = SetError;
    fn from_str(s: &str) -> Result<Self, SetError> {
        RegionPreset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| SetError::UnknownPreset(s.to_string()))
    }
}

/// Names of the eigenvalue coordinates in region descriptions.
pub const LAMBDA_RE: &str = "lre";
pub const LAMBDA_IM: &str = "lim";

pub fn lambda_vars() -> Vec<String> {
    vec![LAMBDA_RE.to_string(), LAMBDA_IM.to_string()]
}

/// The closed instability region `D^c = {λ : d_i(λre, λim) ≥ 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRegionComplement {
    set: SemialgebraicSet,
    real_spectrum_only: bool,
    preset: Option<RegionPreset>,
    bounded: bool,
}

impl StabilityRegionComplement {
    pub fn preset(p: RegionPreset) -> Self {
        let vars = lambda_vars();
        let re = Polynomial::var(2, 0);
        let im = Polynomial::var(2, 1);
        let mut set = SemialgebraicSet::new(vars);
        let cs = match p {
            RegionPreset::LeftHalfPlaneClosure => vec![Constraint::geq(re)],
            RegionPreset::UnitDiskExteriorClosure => {
                vec![Constraint::geq((&re.pow(2) + &im.pow(2)).add_constant(-1.0))]
            }
            RegionPreset::ImaginaryAxis => vec![Constraint::eq(re)],
            RegionPreset::Origin => vec![Constraint::eq(re), Constraint::eq(im)],
        };
        for c in cs {
            set.push(c).expect("preset arity");
        }
        Self {
            set,
            real_spectrum_only: false,
            preset: Some(p),
            bounded: p == RegionPreset::Origin,
        }
    }

    /// A user-defined region over exactly `(lre, lim)`. Treated as unbounded.
    pub fn custom(set: SemialgebraicSet) -> Result<Self, SetError> {
        if set.variables() != lambda_vars().as_slice() {
            return Err(SetError::RegionVariables);
        }
        Ok(Self {
            set,
            real_spectrum_only: false,
            preset: None,
            bounded: false,
        })
    }

    /// Restricts attention to real eigenvalues (`λim = 0`).
    pub fn with_real_spectrum(mut self, real: bool) -> Self {
        self.real_spectrum_only = real;
        self
    }

    pub fn set(&self) -> &SemialgebraicSet {
        &self.set
    }

    pub fn preset_kind(&self) -> Option<RegionPreset> {
        self.preset
    }

    pub fn is_real_spectrum_only(&self) -> bool {
        self.real_spectrum_only
    }

    pub fn is_known_bounded(&self) -> bool {
        self.bounded
    }

    /// Active eigenvalue coordinates: `[lre]` in real mode, `[lre, lim]` otherwise.
    pub fn variables(&self) -> Vec<String> {
        if self.real_spectrum_only {
            vec![LAMBDA_RE.to_string()]
        } else {
            lambda_vars()
        }
    }

    /// Region constraints over the active coordinates (`λim` substituted by 0 in real mode).
    pub fn active_constraints(&self) -> Vec<Constraint> {
        self.set
            .constraints()
            .iter()
            .map(|c| {
                if self.real_spectrum_only {
                    Constraint {
                        poly: c.poly.drop_variable_at_zero(1),
                        relation: c.relation,
                    }
                } else {
                    c.clone()
                }
            })
            .collect()
    }

    /// How deep `λ` lies in the region (nonnegative iff inside).
    pub fn depth(&self, re: f64, im: f64) -> f64 {
        self.set.depth(&[re, im])
    }

    pub fn contains(&self, re: f64, im: f64, tol: f64) -> bool {
        self.depth(re, im) >= -tol
    }
}

pub fn region_preset(p: RegionPreset) -> StabilityRegionComplement {
    StabilityRegionComplement::preset(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_polynomial;

    fn rho_vars() -> Vec<String> {
        vec!["rho".to_string()]
    }

    #[test]
    fn presets() {
        let lhp = region_preset(RegionPreset::LeftHalfPlaneClosure);
        assert_eq!(lhp.set().constraints().len(), 1);
        assert_eq!(lhp.set().constraints()[0].poly, Polynomial::var(2, 0));
        assert!(!lhp.contains(-0.1, 0.0, 0.0));
        assert!(lhp.contains(0.0, 5.0, 0.0));

        let origin = region_preset(RegionPreset::Origin);
        assert_eq!(origin.set().constraints().len(), 2);
        assert!(origin
            .set()
            .constraints()
            .iter()
            .all(|c| c.relation == Relation::EqualZero));

        let disk = region_preset(RegionPreset::UnitDiskExteriorClosure);
        assert!(disk.contains(1.0, 0.0, 0.0));
        assert!(!disk.contains(0.5, 0.5, 0.0));

        for p in RegionPreset::ALL {
            assert_eq!(p.name().parse::<RegionPreset>().unwrap(), p);
        }
        assert!("right_half_plane".parse::<RegionPreset>().is_err());
    }

    #[test]
    fn preset_boundaries_are_exact() {
        let axis = region_preset(RegionPreset::ImaginaryAxis);
        let disk = region_preset(RegionPreset::UnitDiskExteriorClosure);
        for k in -32..=32 {
            assert_eq!(axis.depth(0.0, k as f64 * 0.37), 0.0);
        }
        // Points on the circle with exactly representable coordinates.
        for (a, b) in [(1.0, 0.0), (0.0, -1.0), (0.6, 0.8), (-0.28, 0.96)] {
            assert!(disk.depth(a, b).abs() < 1e-15);
        }
    }

    #[test]
    fn unit_interval_box() {
        let d = box_set(rho_vars(), &[0.0], &[1.0]).unwrap();
        let names = rho_vars();
        assert_eq!(d.constraints()[0].poly, parse_polynomial("rho", &names).unwrap());
        assert_eq!(d.constraints()[1].poly, parse_polynomial("1 - rho", &names).unwrap());
        assert!(d.contains(&[0.5], 0.0).unwrap());
        assert!(d.contains(&[1.0 + 1e-9], 1e-8).unwrap());
        assert!(!d.contains(&[1.0 + 1e-7], 1e-8).unwrap());
        assert!(d.contains(&[0.5, 0.1], 0.0).is_err());
        assert_eq!(d.bounding_box(), Some(vec![(0.0, 1.0)]));
    }

    #[test]
    fn degenerate_and_inverted_boxes() {
        let d = box_set(rho_vars(), &[0.3], &[0.3]).unwrap();
        assert!(d.contains(&[0.3], 0.0).unwrap());
        assert!(!d.contains(&[0.3 + 1e-12], 0.0).unwrap());
        assert!(matches!(
            box_set(rho_vars(), &[1.0], &[0.0]),
            Err(SetError::InvertedBounds { .. })
        ));
    }

    #[test]
    fn bifurcation_box_has_six_constraints() {
        let k = 1.0;
        let nominal = [9.0, 2.0, 2.0];
        let vars: Vec<String> = ["rho1", "rho2", "rho3"].iter().map(|s| s.to_string()).collect();
        let lo: Vec<f64> = nominal.iter().map(|c| c - k).collect();
        let hi: Vec<f64> = nominal.iter().map(|c| c + k).collect();
        let d = box_set(vars, &lo, &hi).unwrap();
        assert_eq!(d.constraints().len(), 6);
    }

    #[test]
    fn compactify_examples() {
        let ball = SemialgebraicSet::new(vec!["a".into(), "b".into()]).compactify(1.0).unwrap();
        assert!(ball.contains(&[0.6, 0.8], 1e-12).unwrap());
        assert!(!ball.contains(&[0.8, 0.8], 0.0).unwrap());

        let seg = region_preset(RegionPreset::ImaginaryAxis).set().compactify(2.0).unwrap();
        assert_eq!(seg.constraints().len(), 2);
        assert!(seg.contains(&[0.0, 2.0], 0.0).unwrap());
        assert!(!seg.contains(&[0.0, 2.1], 0.0).unwrap());
        assert!(!seg.contains(&[0.1, 0.0], 0.0).unwrap());

        assert!(matches!(ball.compactify(0.0), Err(SetError::NonPositiveRadius(_))));
        assert!(matches!(ball.compactify(-1.0), Err(SetError::NonPositiveRadius(_))));
    }

    #[test]
    fn real_spectrum_drops_imaginary_part() {
        let disk = region_preset(RegionPreset::UnitDiskExteriorClosure).with_real_spectrum(true);
        assert_eq!(disk.variables(), vec!["lre".to_string()]);
        let c = &disk.active_constraints()[0];
        assert_eq!(c.poly.num_vars(), 1);
        assert_eq!(c.poly.eval(&[2.0]), 3.0);
    }

    #[test]
    fn custom_region_requires_lambda_vars() {
        let bad = SemialgebraicSet::new(vec!["x".into(), "y".into()]);
        assert!(StabilityRegionComplement::custom(bad).is_err());
        let names = lambda_vars();
        let good = SemialgebraicSet::new(names.clone())
            .with(Constraint::geq(parse_polynomial("lre + 0.5", &names).unwrap()))
            .unwrap();
        let r = StabilityRegionComplement::custom(good).unwrap();
        assert!(r.contains(-0.5, 1.0, 0.0));
        assert!(!r.is_known_bounded());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn sample_set() -> SemialgebraicSet {
            let names: Vec<String> = vec!["a".into(), "b".into()];
            let p = |s: &str| parse_polynomial(s, &names).unwrap();
            SemialgebraicSet::new(names.clone())
                .with(Constraint::eq(p("a*b - 0.25")))
                .unwrap()
                .with(Constraint::geq(p("1 - a^2")))
                .unwrap()
                .with(Constraint::eq(p("a - b")))
                .unwrap()
        }

        proptest! {
            #[test]
            fn equality_expansion_preserves_membership(a in -2.0f64..2.0, b in -2.0f64..2.0, tol in 0.0f64..0.5) {
                let s = sample_set();
                prop_assert_eq!(
                    s.contains(&[a, b], tol).unwrap(),
                    s.expand_equalities().contains(&[a, b], tol).unwrap()
                );
            }

            #[test]
            fn compactify_keeps_points_in_ball(a in -1.0f64..1.0, b in -1.0f64..1.0, r in 1.5f64..4.0) {
                let s = sample_set();
                let c = s.compactify(r).unwrap();
                prop_assert_eq!(s.contains(&[a, b], 1e-3).unwrap(), c.contains(&[a, b], 1e-3).unwrap());
            }
        }
    }
}
