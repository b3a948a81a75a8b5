//! Boundary-approach experiments on truncated cones.
//!
//! A truncated cone of half-angle theta and radius eps carries an invariant
//! measure equal to the squared Poincare density. Along any sequence
//! z_j = r_j e^{i(pi+alpha_j)} with r_j -> 0 and alpha_j -> alpha, the ratio
//! of the measures of two such cones converges to
//! (theta2 cos(alpha pi/2theta2) / (theta1 cos(alpha pi/2theta1)))^2,
//! independently of the truncation radii. This module measures that limit
//! numerically ([`ratio_experiment`]), audits a printed closed form for the
//! cone measure against the authoritative chart pullback
//! ([`cone_density_closed_form`]), and runs the two-factor sandwich
//! experiment ([`product_sandwich_experiment`]) in which the
//! Caratheodory-over-Eisenman ratio of nested cone products is driven to 1
//! along a schedule of shrinking angle gaps.
//!
//! Ground truth is always the density pulled back through the conformal
//! chart. The printed expression evaluated by [`cone_density_closed_form`]
//! is kept verbatim as a validation target; its leading small-r behaviour is
//! proportional to 1/r where the pullback gives 1/r^2, so the two agree only
//! after removing a factor that tends to 4r. The discrepancy field reports
//! this and is never silently reconciled. The limit ratio is insensitive to
//! the normalization since it cancels in the quotient.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};
use crate::metrics::{caratheodory_measure, eisenman_measure, ProductDomain};
use crate::planar::{poincare_density, PlanarDomain};

/// Limit of the cone measure ratio along boundary sequences with approach
/// angle `alpha`: (theta2 cos(alpha pi/2theta2) / (theta1 cos(alpha pi/2theta1)))^2.
///
/// Requires 0 < theta1 < theta2 < pi and |alpha| < theta1; both cosines are
/// then automatically positive. The value exceeds 1 exactly when the cones
/// differ, since t |-> t cos(alpha pi / 2t) is strictly increasing on the
/// admissible range.
pub fn limit_ratio(theta1: f64, theta2: f64, alpha: f64) -> LabResult<f64> {
    check_angle_pair(theta1, theta2)?;
    if !(alpha.abs() < theta1) {
        return Err(LabError::InvalidDomain(format!(
            "approach angle must satisfy |alpha| < theta1, got alpha={alpha}, theta1={theta1}"
        )));
    }
    let num = theta2 * (alpha * PI / (2.0 * theta2)).cos();
    let den = theta1 * (alpha * PI / (2.0 * theta1)).cos();
    let root = num / den;
    Ok(root * root)
}

fn check_angle_pair(theta1: f64, theta2: f64) -> LabResult<()> {
    if !(theta1 > 0.0 && theta1 < theta2 && theta2 < PI) {
        return Err(LabError::InvalidDomain(format!(
            "cone angles must satisfy 0 < theta1 < theta2 < pi, got {theta1}, {theta2}"
        )));
    }
    Ok(())
}

/// Audit record for the printed cone measure expression at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeDensityReport {
    /// The printed closed form, evaluated verbatim.
    pub paper_expression: f64,
    /// Squared Poincare density through the conformal chart (authoritative).
    pub pullback_value: f64,
    /// |paper_expression - pullback_value| / pullback_value.
    pub relative_discrepancy: f64,
}

/// Evaluates the printed closed form for the cone measure next to the
/// authoritative chart pullback at z = r e^{i(pi+phi)}.
///
/// With t = (r/eps)^{pi/2theta} and s = sin(pi phi/2theta) the printed
/// expression reads
///
/// ```text
/// 1/(theta cos(pi phi/2theta))^2
///   * pi^2 (1 + t^2 - 2ts)(1 + t^2 + 2ts) / (4 r (1 - t^2)^2)
/// ```
///
/// Its small-r growth is 1/r while the pullback grows like 1/r^2, so the
/// relative discrepancy is large except near r where 4r crosses 1; the field
/// documents this instead of patching the expression.
pub fn cone_density_closed_form(
    theta: f64,
    eps: f64,
    r: f64,
    phi: f64,
) -> LabResult<ConeDensityReport> {
    let cone = PlanarDomain::truncated_cone(theta, eps)?;
    if !(r > 0.0 && r < eps) {
        return Err(LabError::OutsideDomain(format!(
            "radius must satisfy 0 < r < eps, got r={r}, eps={eps}"
        )));
    }
    if !(phi.abs() < theta) {
        return Err(LabError::OutsideDomain(format!(
            "angle must satisfy |phi| < theta, got phi={phi}, theta={theta}"
        )));
    }

    let half = PI / (2.0 * theta);
    let t = (r / eps).powf(half);
    let s = (half * phi).sin();
    let c = theta * (half * phi).cos();
    let a = 1.0 + t * t;
    let paper = (PI * PI * (a - 2.0 * t * s) * (a + 2.0 * t * s))
        / (4.0 * r * (1.0 - t * t) * (1.0 - t * t))
        / (c * c);

    let z = Complex64::from_polar(r, PI + phi);
    let lam = poincare_density(&cone, z)?;
    let pullback = lam * lam;

    Ok(ConeDensityReport {
        paper_expression: paper,
        pullback_value: pullback,
        relative_discrepancy: (paper - pullback).abs() / pullback,
    })
}

/// Angle schedule of a boundary sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AngleSchedule {
    /// alpha_j = value for every j.
    Constant { value: f64 },
    /// alpha_j = limit * (1 - 1/(j+1)), approaching `limit` from below in
    /// magnitude. The harmonic drift exercises extrapolation under a
    /// non-geometric error term.
    Approach { limit: f64 },
}

impl AngleSchedule {
    /// Limit angle alpha of the schedule.
    pub fn limit(&self) -> f64 {
        match *self {
            AngleSchedule::Constant { value } => value,
            AngleSchedule::Approach { limit } => limit,
        }
    }

    fn at(&self, j: usize) -> f64 {
        match *self {
            AngleSchedule::Constant { value } => value,
            AngleSchedule::Approach { limit } => limit * (1.0 - 1.0 / (j as f64 + 1.0)),
        }
    }
}

/// Boundary sequence z_j = r_j e^{i(pi+alpha_j)} with geometric radii
/// r_j = r0 * q^j, j = 0..count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySequence {
    pub r0: f64,
    pub q: f64,
    pub count: usize,
    pub angles: AngleSchedule,
}

/// One sequence point: index, polar data, and the complex position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequencePoint {
    pub j: usize,
    pub r: f64,
    pub alpha: f64,
    pub z: Complex64,
}

impl BoundarySequence {
    /// Geometric sequence with the default contraction q = 1/2 and 40 terms:
    /// the deepest radius is still far above the double-precision floor
    /// because only powers (r/eps)^{pi/2theta} of it enter any density.
    pub fn geometric(r0: f64, angles: AngleSchedule) -> Self {
        BoundarySequence { r0, q: 0.5, count: 40, angles }
    }

    pub fn validate(&self) -> LabResult<()> {
        if !(self.r0 > 0.0 && self.r0.is_finite()) {
            return Err(LabError::InvalidConfig(format!(
                "sequence start radius must be positive, got {}",
                self.r0
            )));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(LabError::InvalidConfig(format!(
                "radius contraction must lie in (0, 1), got {}",
                self.q
            )));
        }
        if self.count == 0 {
            return Err(LabError::InvalidConfig("sequence must have at least one term".into()));
        }
        if !self.angles.limit().is_finite() {
            return Err(LabError::InvalidConfig("angle limit must be finite".into()));
        }
        Ok(())
    }

    /// All sequence points in order of increasing j (decreasing radius).
    pub fn points(&self) -> Vec<SequencePoint> {
        (0..self.count)
            .map(|j| {
                let r = self.r0 * self.q.powi(j as i32);
                let alpha = self.angles.at(j);
                SequencePoint { j, r, alpha, z: Complex64::from_polar(r, PI + alpha) }
            })
            .collect()
    }
}

/// Configuration of a two-cone boundary ratio experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioExperimentConfig {
    pub theta1: f64,
    pub theta2: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub sequence: BoundarySequence,
}

impl RatioExperimentConfig {
    /// The acceptance configuration: theta1 = pi/3, theta2 = 2pi/3, radial
    /// approach, both truncations at 1, radii 2^-j for j <= 40. The j = 0
    /// point sits on the truncation circle and is skipped with a warning.
    pub fn golden() -> Self {
        RatioExperimentConfig {
            theta1: PI / 3.0,
            theta2: 2.0 * PI / 3.0,
            eps1: 1.0,
            eps2: 1.0,
            sequence: BoundarySequence {
                r0: 1.0,
                q: 0.5,
                count: 41,
                angles: AngleSchedule::Constant { value: 0.0 },
            },
        }
    }

    pub fn validate(&self) -> LabResult<()> {
        check_angle_pair(self.theta1, self.theta2)?;
        for (name, eps) in [("eps1", self.eps1), ("eps2", self.eps2)] {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(LabError::InvalidConfig(format!(
                    "{name} must be positive, got {eps}"
                )));
            }
        }
        self.sequence.validate()?;
        if !(self.sequence.angles.limit().abs() < self.theta1) {
            return Err(LabError::InvalidConfig(format!(
                "approach angle {} must stay below theta1 = {}",
                self.sequence.angles.limit(),
                self.theta1
            )));
        }
        Ok(())
    }
}

/// One table row of an experiment: the measures entering the ratio and the
/// ratio itself at one evaluation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentRow {
    pub j: usize,
    pub r: f64,
    pub alpha: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
}

/// Result of a ratio or sandwich experiment.
///
/// Rows are ordered by j. For [`ratio_experiment`] each row is one sequence
/// point; for [`product_sandwich_experiment`] each row summarizes one
/// schedule stage m (j holds m, r the stage eps, ratio the stage's
/// j-extrapolated value). `runtime` is kept in memory for reporting and is
/// excluded from emitted artifacts so repeated runs stay byte-identical.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<ExperimentRow>,
    /// Deepest-level extrapolated limit.
    pub limit_estimate: f64,
    /// Plain final ratio, reported next to the extrapolation.
    pub last_iterate: f64,
    pub target: f64,
    pub abs_error: f64,
    /// Earliest index from which the raw ratios are monotone to the end;
    /// None when the tail still alternates (diagnostic, not a failure).
    pub tail_monotone_from: Option<usize>,
    /// Skipped points and reduced-depth notices.
    pub warnings: Vec<String>,
    pub runtime: Duration,
}

/// Correction exponents p of the ratio error expansion in powers of r: the
/// sequence value behaves like L(1 + sum c_p r^p) with p drawn from
/// pi/2theta of either cone, their doubles, and their sum. Returns the three
/// smallest distinct exponents, the elimination targets for Richardson.
fn correction_exponents(theta1: f64, theta2: f64) -> Vec<f64> {
    let p1 = PI / (2.0 * theta1);
    let p2 = PI / (2.0 * theta2);
    let mut all = vec![p2, p1, 2.0 * p2, 2.0 * p1, p1 + p2];
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    all.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * b.abs().max(1.0));
    all.truncate(3);
    all
}

/// Richardson elimination for geometric sequences r_j = r0 * q^j: each level
/// removes one known power-law error term c * r^p via
/// V'_j = (V_{j+1} - sigma V_j) / (1 - sigma) with sigma = q^p. Returns the
/// last entry of the deepest level (it consumes the most asymptotic data).
fn richardson_geometric(values: &[f64], q: f64, exponents: &[f64]) -> f64 {
    let mut col = values.to_vec();
    for &p in exponents {
        if col.len() < 2 {
            break;
        }
        let sigma = q.powf(p);
        if (1.0 - sigma).abs() < 1e-6 {
            continue;
        }
        col = col.windows(2).map(|w| (w[1] - sigma * w[0]) / (1.0 - sigma)).collect();
    }
    *col.last().expect("at least one value survives every level")
}

/// Earliest index from which consecutive differences keep one sign through
/// the end of `values`; zero differences extend a run.
fn monotone_onset(values: &[f64]) -> Option<usize> {
    if values.len() < 2 {
        return None;
    }
    let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let mut sign = 0.0f64;
    for &d in diffs.iter().rev() {
        if d != 0.0 {
            sign = d.signum();
            break;
        }
    }
    if sign == 0.0 {
        return Some(0);
    }
    let mut onset = diffs.len();
    for (i, &d) in diffs.iter().enumerate().rev() {
        if d == 0.0 || d.signum() == sign {
            onset = i;
        } else {
            break;
        }
    }
    if onset == diffs.len() {
        None
    } else {
        Some(onset)
    }
}

/// Measures the cone density ratio along a boundary sequence and
/// extrapolates its limit.
///
/// Each valid point contributes one row with the squared pullback densities
/// of both truncated cones and their ratio. Points not strictly inside both
/// cones are skipped with a warning (the sequence enters the cones only once
/// r drops below the truncation radii). Extrapolation is Richardson in log r
/// over the three leading correction exponents; under a drifting angle
/// schedule the rows are first rescaled by target/limit_ratio(alpha_j),
/// which removes the smooth angle dependence without biasing the limit (a
/// wrong target rescales every row by one constant near the tail and is
/// still exposed). The plain last iterate is reported alongside.
pub fn ratio_experiment(config: &RatioExperimentConfig) -> LabResult<ExperimentReport> {
    let start = Instant::now();
    config.validate()?;
    let cone1 = PlanarDomain::truncated_cone(config.theta1, config.eps1)?;
    let cone2 = PlanarDomain::truncated_cone(config.theta2, config.eps2)?;
    let alpha = config.sequence.angles.limit();
    let target = limit_ratio(config.theta1, config.theta2, alpha)?;

    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let mut compensated = Vec::new();
    for p in config.sequence.points() {
        if !(cone1.contains(p.z).inside && cone2.contains(p.z).inside) {
            warnings.push(format!(
                "skipped j={}: point at r={} is not interior to both cones",
                p.j, p.r
            ));
            continue;
        }
        let lam1 = poincare_density(&cone1, p.z)?;
        let lam2 = poincare_density(&cone2, p.z)?;
        let m1 = lam1 * lam1;
        let m2 = lam2 * lam2;
        let ratio = m1 / m2;
        rows.push(ExperimentRow {
            j: p.j,
            r: p.r,
            alpha: p.alpha,
            numerator: m1,
            denominator: m2,
            ratio,
        });
        compensated.push(ratio * target / limit_ratio(config.theta1, config.theta2, p.alpha)?);
    }
    if rows.len() < 2 {
        return Err(LabError::InvalidConfig(format!(
            "sequence enters both cones at only {} point(s); lower r0 or extend the sequence",
            rows.len()
        )));
    }

    let exponents = correction_exponents(config.theta1, config.theta2);
    if rows.len() < exponents.len() + 1 {
        warnings.push(format!(
            "only {} valid points: extrapolation depth reduced below {} levels",
            rows.len(),
            exponents.len()
        ));
    }
    let limit_estimate = richardson_geometric(&compensated, config.sequence.q, &exponents);
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let last_iterate = *ratios.last().expect("rows checked non-empty");

    Ok(ExperimentReport {
        tail_monotone_from: monotone_onset(&ratios).map(|i| rows[i].j),
        abs_error: (limit_estimate - target).abs(),
        limit_estimate,
        last_iterate,
        target,
        rows,
        warnings,
        runtime: start.elapsed(),
    })
}

/// Factor structure of the sandwich experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProductShape {
    /// Both factors are cones; the sequence is diagonal (z_j, z_j).
    ConeCone,
    /// First factor is a fixed disc about 0, second a cone; the sequence is
    /// (0, z_j). The disc density enters both product measures and cancels
    /// through the product law.
    DiscCone { disc_radius: f64 },
}

/// Configuration of the product sandwich experiment.
///
/// Stage m of the schedule uses inner cones of half-angle
/// theta1 = pi/2 - gap/m and outer cones of half-angle theta2 = pi/2 + gap/m
/// with base truncation eps = 1/m; the outer cones are truncated at
/// `eps_outer_factor * eps` and the inner at `eps_inner_factor * eps`, so
/// the inner product sits inside the outer one. Along the diagonal sequence
/// the ratio of the outer Caratheodory measure to the inner Eisenman measure
/// is a lower bound for the same ratio on any domain sandwiched between
/// them, and the schedule drives it to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichConfig {
    pub shape: ProductShape,
    /// Schedule stages; the limit is extrapolated at 1/m -> 0.
    pub ms: Vec<u32>,
    /// Half-width g of the angle gap: theta = pi/2 -+ g/m.
    pub angle_gap: f64,
    /// Outer truncation radius as a multiple of eps = 1/m.
    pub eps_outer_factor: f64,
    /// Inner truncation radius as a multiple of eps = 1/m.
    pub eps_inner_factor: f64,
    /// Sequence start radius as a multiple of the smaller truncation radius.
    pub seq_r0_factor: f64,
    pub seq_q: f64,
    pub seq_count: usize,
}

impl Default for SandwichConfig {
    fn default() -> Self {
        SandwichConfig {
            shape: ProductShape::ConeCone,
            ms: vec![5, 10, 20],
            angle_gap: 1.0,
            eps_outer_factor: 2.0,
            eps_inner_factor: 0.5,
            seq_r0_factor: 0.4,
            seq_q: 0.5,
            seq_count: 40,
        }
    }
}

impl SandwichConfig {
    pub fn validate(&self) -> LabResult<()> {
        if self.ms.is_empty() {
            return Err(LabError::InvalidConfig("schedule must contain at least one stage".into()));
        }
        if !(self.angle_gap >= 0.0 && self.angle_gap.is_finite()) {
            return Err(LabError::InvalidConfig(format!(
                "angle gap must be nonnegative, got {}",
                self.angle_gap
            )));
        }
        for &m in &self.ms {
            if m == 0 {
                return Err(LabError::InvalidConfig("schedule stages must be positive".into()));
            }
            if self.angle_gap / m as f64 >= PI / 2.0 {
                return Err(LabError::InvalidConfig(format!(
                    "angle gap {} closes the inner cone at m={m}",
                    self.angle_gap
                )));
            }
        }
        for (name, f) in [
            ("eps_outer_factor", self.eps_outer_factor),
            ("eps_inner_factor", self.eps_inner_factor),
            ("seq_r0_factor", self.seq_r0_factor),
        ] {
            if !(f > 0.0 && f.is_finite()) {
                return Err(LabError::InvalidConfig(format!("{name} must be positive, got {f}")));
            }
        }
        if !(self.seq_q > 0.0 && self.seq_q < 1.0) {
            return Err(LabError::InvalidConfig(format!(
                "radius contraction must lie in (0, 1), got {}",
                self.seq_q
            )));
        }
        if let ProductShape::DiscCone { disc_radius } = self.shape {
            if !(disc_radius > 0.0 && disc_radius.is_finite()) {
                return Err(LabError::InvalidConfig(format!(
                    "disc radius must be positive, got {disc_radius}"
                )));
            }
        }
        Ok(())
    }

    fn stage(&self, m: u32) -> StageGeometry {
        let m = m as f64;
        let eps = 1.0 / m;
        StageGeometry {
            theta_inner: PI / 2.0 - self.angle_gap / m,
            theta_outer: PI / 2.0 + self.angle_gap / m,
            eps,
            eps_outer: self.eps_outer_factor * eps,
            eps_inner: self.eps_inner_factor * eps,
        }
    }
}

struct StageGeometry {
    theta_inner: f64,
    theta_outer: f64,
    eps: f64,
    eps_outer: f64,
    eps_inner: f64,
}

/// Runs the sandwich experiment: per stage m, the ratio of the outer product
/// Caratheodory measure to the inner product Eisenman measure is measured
/// along a diagonal boundary sequence and Richardson-extrapolated in j; the
/// per-stage limits are then extrapolated to 1/m -> 0 by evaluating the
/// Newton polynomial through the last three (h = 1/m, log ratio) nodes at
/// h = 0 and exponentiating. The target is 1.
///
/// The outer extrapolation works on logarithms because the stage limits are
/// products of reflected cosine quotients whose log expansion in h is odd:
/// a quadratic fit in log space is then accurate to h^3 while in linear
/// scale the missed h^3 term is two orders larger. Logs of exact ones are
/// exact zeros, so a degenerate schedule reproduces 1 bit for bit.
///
/// Both product measures are evaluated through the product law on the full
/// product domain; in the disc-cone variant the disc factor enters numerator
/// and denominator alike and cancels in the quotient numerically, never by
/// special-casing.
pub fn product_sandwich_experiment(config: &SandwichConfig) -> LabResult<ExperimentReport> {
    let start = Instant::now();
    config.validate()?;

    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for &m in &config.ms {
        let g = config.stage(m);
        let outer_cone = PlanarDomain::truncated_cone(g.theta_outer, g.eps_outer)?;
        let inner_cone = PlanarDomain::truncated_cone(g.theta_inner, g.eps_inner)?;
        let (outer, inner, fixed) = match config.shape {
            ProductShape::ConeCone => (
                ProductDomain::new(vec![outer_cone.clone(), outer_cone.clone()])?,
                ProductDomain::new(vec![inner_cone.clone(), inner_cone.clone()])?,
                None,
            ),
            ProductShape::DiscCone { disc_radius } => {
                let disc = PlanarDomain::disc(Complex64::new(0.0, 0.0), disc_radius)?;
                (
                    ProductDomain::new(vec![disc.clone(), outer_cone.clone()])?,
                    ProductDomain::new(vec![disc, inner_cone.clone()])?,
                    Some(Complex64::new(0.0, 0.0)),
                )
            }
        };

        let sequence = BoundarySequence {
            r0: config.seq_r0_factor * g.eps_outer.min(g.eps_inner),
            q: config.seq_q,
            count: config.seq_count,
            angles: AngleSchedule::Constant { value: 0.0 },
        };
        let mut ratios = Vec::new();
        let mut last_measures = (f64::NAN, f64::NAN);
        for p in sequence.points() {
            if !(outer_cone.contains(p.z).inside && inner_cone.contains(p.z).inside) {
                warnings.push(format!(
                    "m={m}: skipped j={} at r={}, not interior to both cones",
                    p.j, p.r
                ));
                continue;
            }
            let point: Vec<Complex64> = match fixed {
                Some(w) => vec![w, p.z],
                None => vec![p.z, p.z],
            };
            let num = caratheodory_measure(&outer, &point)?.value;
            let den = eisenman_measure(&inner, &point)?.value;
            ratios.push(num / den);
            last_measures = (num, den);
        }
        if ratios.len() < 2 {
            return Err(LabError::InvalidConfig(format!(
                "stage m={m} enters the cones at only {} point(s) before the sequence \
                 exhausts; extend it or lower seq_r0_factor",
                ratios.len()
            )));
        }
        let exponents = correction_exponents(g.theta_inner, g.theta_outer);
        if ratios.len() < exponents.len() + 1 {
            warnings.push(format!(
                "m={m}: only {} valid points, extrapolation depth reduced",
                ratios.len()
            ));
        }
        let stage_limit = richardson_geometric(&ratios, config.seq_q, &exponents);
        rows.push(ExperimentRow {
            j: m as usize,
            r: g.eps,
            alpha: config.angle_gap / m as f64,
            numerator: last_measures.0,
            denominator: last_measures.1,
            ratio: stage_limit,
        });
    }

    let stage_limits: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let hs: Vec<f64> = rows.iter().map(|r| r.r).collect();
    let tail = stage_limits.len().min(3);
    let tail_hs = &hs[hs.len() - tail..];
    let tail_vs = &stage_limits[stage_limits.len() - tail..];
    let limit_estimate = if tail_vs.iter().all(|&v| v > 0.0) {
        let logs: Vec<f64> = tail_vs.iter().map(|v| v.ln()).collect();
        newton_at_zero(tail_hs, &logs).exp()
    } else {
        newton_at_zero(tail_hs, tail_vs)
    };
    let last_iterate = *stage_limits.last().expect("schedule validated non-empty");

    Ok(ExperimentReport {
        tail_monotone_from: monotone_onset(&stage_limits).map(|i| rows[i].j),
        abs_error: (limit_estimate - 1.0).abs(),
        limit_estimate,
        last_iterate,
        target: 1.0,
        rows,
        warnings,
        runtime: start.elapsed(),
    })
}

/// Newton interpolating polynomial through (h_i, v_i), evaluated at h = 0.
/// Exact on constant data (all divided differences vanish); duplicate nodes
/// collapse to the latest value rather than dividing by zero.
fn newton_at_zero(hs: &[f64], vs: &[f64]) -> f64 {
    let n = hs.len();
    let mut dd = vs.to_vec();
    for k in 1..n {
        for i in (k..n).rev() {
            let denom = hs[i] - hs[i - k];
            if denom == 0.0 {
                return vs[n - 1];
            }
            dd[i] = (dd[i] - dd[i - 1]) / denom;
        }
    }
    let mut acc = dd[n - 1];
    for i in (0..n - 1).rev() {
        acc = dd[i] - hs[i] * acc;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn limit_ratio_golden_values() {
        let r = limit_ratio(PI / 3.0, 2.0 * PI / 3.0, 0.0).unwrap();
        assert!(rel(r, 4.0) < 1e-14, "got {r}");

        let r = limit_ratio(PI / 2.0, 3.0 * PI / 4.0, PI / 4.0).unwrap();
        assert!(rel(r, 27.0 / 8.0) < 1e-14, "got {r}");

        // (2 cos(pi/8) / 1)^2 with the inner cosine at pi/4: 8 cos^2(pi/8).
        let r = limit_ratio(PI / 4.0, PI / 2.0, PI / 8.0).unwrap();
        assert!(rel(r, 4.0 + 2.0 * 2.0f64.sqrt()) < 1e-13, "got {r}");
    }

    #[test]
    fn limit_ratio_tends_to_one_for_merging_cones() {
        let r = limit_ratio(1.0, 1.0 + 1e-9, 0.3).unwrap();
        assert!((r - 1.0).abs() < 1e-8, "got {r}");
    }

    #[test]
    fn limit_ratio_exceeds_one_on_grid() {
        for &t1 in &[0.3, 0.8, PI / 2.0, 2.2] {
            for &t2 in &[0.5, 1.1, 2.0, 3.0] {
                if t2 <= t1 {
                    continue;
                }
                for &frac in &[0.0, 0.35, -0.7, 0.95] {
                    let r = limit_ratio(t1, t2, frac * t1).unwrap();
                    assert!(r > 1.0, "ratio {r} at {t1}, {t2}, {frac}");
                }
            }
        }
    }

    #[test]
    fn limit_ratio_rejects_bad_arguments() {
        assert!(limit_ratio(1.0, 1.0, 0.0).is_err());
        assert!(limit_ratio(1.2, 1.0, 0.0).is_err());
        assert!(limit_ratio(0.5, PI, 0.0).is_err());
        assert!(limit_ratio(0.5, 1.0, 0.5).is_err());
        assert!(limit_ratio(0.5, 1.0, -0.6).is_err());
        assert!(limit_ratio(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn printed_expression_matches_radial_specialization() {
        // theta = pi/2, eps = 1, phi = 0 collapses to (1+r^2)^2 / (r(1-r^2)^2).
        for &r in &[0.05, 0.3, 0.7, 0.95] {
            let rep = cone_density_closed_form(PI / 2.0, 1.0, r, 0.0).unwrap();
            let direct = (1.0 + r * r).powi(2) / (r * (1.0 - r * r).powi(2));
            assert!(rel(rep.paper_expression, direct) < 1e-13);
        }
    }

    #[test]
    fn density_report_symmetric_in_phi() {
        for &(theta, eps, r, phi) in
            &[(1.0, 1.0, 0.4, 0.3), (2.4, 0.7, 0.1, 1.9), (PI / 2.0, 3.0, 2.0, 1.2)]
        {
            let plus = cone_density_closed_form(theta, eps, r, phi).unwrap();
            let minus = cone_density_closed_form(theta, eps, r, -phi).unwrap();
            assert_eq!(plus.paper_expression, minus.paper_expression);
            assert!(rel(plus.pullback_value, minus.pullback_value) < 1e-12);
        }
    }

    #[test]
    fn pullback_scales_inverse_quadratically_under_dilation() {
        for &theta in &[0.4, PI / 2.0, 2.0] {
            for &rho in &[0.1, 0.5, 0.9] {
                for &phi_frac in &[0.0, 0.45, -0.8] {
                    for &s in &[0.3, 2.0, 7.5] {
                        let phi = phi_frac * theta;
                        let base = cone_density_closed_form(theta, 1.0, rho, phi).unwrap();
                        let scaled =
                            cone_density_closed_form(theta, s, s * rho, phi).unwrap();
                        assert!(
                            rel(scaled.pullback_value * s * s, base.pullback_value) < 1e-10,
                            "theta={theta} rho={rho} phi={phi} s={s}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn pullback_approaches_sector_asymptote() {
        // r^2 M(r e^{i(pi+phi)}) -> pi^2 / (16 theta^2 cos^2(pi phi/2theta)).
        for &theta in &[PI / 2.0, 2.5, 0.7] {
            for &phi_frac in &[0.0, 0.4] {
                let phi = phi_frac * theta;
                let r = 1e-8;
                let rep = cone_density_closed_form(theta, 1.0, r, phi).unwrap();
                let c = (PI * phi / (2.0 * theta)).cos();
                let normalized =
                    rep.pullback_value * r * r * 16.0 * theta * theta * c * c / (PI * PI);
                assert!((normalized - 1.0).abs() < 1e-4, "theta={theta} phi={phi}: {normalized}");
            }
        }
    }

    #[test]
    fn printed_over_pullback_tends_to_four_r() {
        for &r in &[1e-4, 1e-6] {
            let rep = cone_density_closed_form(PI / 2.0, 1.0, r, 0.0).unwrap();
            let quotient = rep.paper_expression / rep.pullback_value;
            assert!(rel(quotient, 4.0 * r) < 1e-3, "r={r}: {quotient}");
        }
    }

    #[test]
    fn density_rejects_out_of_range_points() {
        assert!(cone_density_closed_form(1.0, 1.0, 1.0, 0.0).is_err());
        assert!(cone_density_closed_form(1.0, 1.0, 0.0, 0.0).is_err());
        assert!(cone_density_closed_form(1.0, 1.0, 0.5, 1.0).is_err());
        assert!(cone_density_closed_form(1.0, 1.0, -0.5, 0.0).is_err());
        assert!(cone_density_closed_form(0.0, 1.0, 0.5, 0.0).is_err());
        assert!(cone_density_closed_form(1.0, 0.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn radial_golden_run_reaches_four() {
        let report = ratio_experiment(&RatioExperimentConfig::golden()).unwrap();
        assert_eq!(report.rows.len(), 40);
        assert_eq!(report.warnings.len(), 1, "the r = eps start point is skipped");
        assert!(report.warnings[0].contains("j=0"));
        assert!(rel(report.target, 4.0) < 1e-14);
        assert!(report.abs_error < 1e-3, "estimate {}", report.limit_estimate);
        assert!(report.rows.windows(2).all(|w| w[0].j < w[1].j));
        assert!(report.tail_monotone_from.is_some());
    }

    #[test]
    fn drifting_angle_schedule_reaches_shifted_target() {
        let theta1 = PI / 3.0;
        let theta2 = 2.0 * PI / 3.0;
        let cfg = RatioExperimentConfig {
            theta1,
            theta2,
            eps1: 1.0,
            eps2: 1.0,
            sequence: BoundarySequence::geometric(
                0.5,
                AngleSchedule::Approach { limit: theta1 / 2.0 },
            ),
        };
        let report = ratio_experiment(&cfg).unwrap();
        let target = limit_ratio(theta1, theta2, theta1 / 2.0).unwrap();
        assert!(rel(report.target, target) < 1e-15);
        assert!(report.abs_error < 1e-3, "estimate {}", report.limit_estimate);
    }

    #[test]
    fn truncation_radii_do_not_move_the_limit() {
        let mut cfg = RatioExperimentConfig::golden();
        cfg.sequence.r0 = 0.25;
        cfg.sequence.count = 40;
        let base = ratio_experiment(&cfg).unwrap();
        cfg.eps1 = 0.3;
        cfg.eps2 = 2.0;
        let a = ratio_experiment(&cfg).unwrap();
        cfg.eps1 = 2.0;
        cfg.eps2 = 0.3;
        let b = ratio_experiment(&cfg).unwrap();
        assert!((a.limit_estimate - base.limit_estimate).abs() < 1e-3);
        assert!((b.limit_estimate - base.limit_estimate).abs() < 1e-3);
        assert!((a.limit_estimate - b.limit_estimate).abs() < 1e-3);
    }

    #[test]
    fn sequence_never_entering_cones_is_rejected() {
        let mut cfg = RatioExperimentConfig::golden();
        cfg.sequence.count = 1;
        let err = ratio_experiment(&cfg).unwrap_err();
        assert!(matches!(err, LabError::InvalidConfig(_)));
    }

    #[test]
    fn config_validation_rejects_bad_parameters() {
        let mut cfg = RatioExperimentConfig::golden();
        cfg.theta2 = cfg.theta1;
        assert!(ratio_experiment(&cfg).is_err());

        let mut cfg = RatioExperimentConfig::golden();
        cfg.eps2 = 0.0;
        assert!(ratio_experiment(&cfg).is_err());

        let mut cfg = RatioExperimentConfig::golden();
        cfg.sequence.q = 1.0;
        assert!(ratio_experiment(&cfg).is_err());

        let mut cfg = RatioExperimentConfig::golden();
        cfg.sequence.count = 0;
        assert!(ratio_experiment(&cfg).is_err());

        let mut cfg = RatioExperimentConfig::golden();
        cfg.sequence.angles = AngleSchedule::Constant { value: cfg.theta1 };
        assert!(ratio_experiment(&cfg).is_err());
    }

    #[test]
    fn cone_cone_sandwich_closes_to_one() {
        let report = product_sandwich_experiment(&SandwichConfig::default()).unwrap();
        assert_eq!(report.rows.len(), 3);
        assert!(report.rows.windows(2).all(|w| w[0].ratio < w[1].ratio));
        assert!(report.rows.iter().all(|r| r.ratio < 1.0));
        assert!(
            report.limit_estimate >= 1.0 - 5e-3,
            "estimate {}",
            report.limit_estimate
        );
        assert!(report.limit_estimate <= 1.0 + 5e-3);
    }

    #[test]
    fn disc_cone_sandwich_closes_to_one() {
        let cfg = SandwichConfig {
            shape: ProductShape::DiscCone { disc_radius: 1.0 },
            ..SandwichConfig::default()
        };
        let report = product_sandwich_experiment(&cfg).unwrap();
        assert!(
            report.limit_estimate >= 1.0 - 5e-3,
            "estimate {}",
            report.limit_estimate
        );
        assert!(report.limit_estimate <= 1.0 + 5e-3);
    }

    #[test]
    fn disc_factor_cancels_through_product_law() {
        // The disc-cone product ratio must reproduce the bare cone ratio:
        // the disc density enters numerator and denominator alike.
        let cfg = SandwichConfig::default();
        let g = cfg.stage(10);
        let outer_cone = PlanarDomain::truncated_cone(g.theta_outer, g.eps_outer).unwrap();
        let inner_cone = PlanarDomain::truncated_cone(g.theta_inner, g.eps_inner).unwrap();
        let disc = PlanarDomain::disc(Complex64::new(0.0, 0.0), 1.0).unwrap();
        let outer =
            ProductDomain::new(vec![disc.clone(), outer_cone.clone()]).unwrap();
        let inner = ProductDomain::new(vec![disc, inner_cone.clone()]).unwrap();
        let w = Complex64::new(0.0, 0.0);
        for &r in &[0.01, 0.001] {
            let z = Complex64::from_polar(r, PI);
            let num = caratheodory_measure(&outer, &[w, z]).unwrap().value;
            let den = eisenman_measure(&inner, &[w, z]).unwrap().value;
            let lo = poincare_density(&outer_cone, z).unwrap();
            let li = poincare_density(&inner_cone, z).unwrap();
            let bare = (lo * lo) / (li * li);
            assert!(rel(num / den, bare) < 1e-12);
        }
    }

    #[test]
    fn degenerate_sandwich_is_identically_one() {
        let cfg = SandwichConfig {
            angle_gap: 0.0,
            eps_outer_factor: 1.0,
            eps_inner_factor: 1.0,
            ..SandwichConfig::default()
        };
        let report = product_sandwich_experiment(&cfg).unwrap();
        assert!(report.rows.iter().all(|r| r.ratio == 1.0));
        assert_eq!(report.limit_estimate, 1.0);
        assert_eq!(report.abs_error, 0.0);
    }

    #[test]
    fn factor_exchange_leaves_diagonal_measures_unchanged() {
        let disc = PlanarDomain::disc(Complex64::new(0.0, 0.0), 1.0).unwrap();
        let cone = PlanarDomain::truncated_cone(1.2, 0.3).unwrap();
        let ab = ProductDomain::new(vec![disc.clone(), cone.clone()]).unwrap();
        let ba = ProductDomain::new(vec![cone, disc]).unwrap();
        let w = Complex64::new(0.1, 0.0);
        let z = Complex64::from_polar(0.01, PI + 0.2);
        let m_ab = eisenman_measure(&ab, &[w, z]).unwrap().value;
        let m_ba = eisenman_measure(&ba, &[z, w]).unwrap().value;
        assert_eq!(m_ab, m_ba);
        let c_ab = caratheodory_measure(&ab, &[w, z]).unwrap().value;
        let c_ba = caratheodory_measure(&ba, &[z, w]).unwrap().value;
        assert_eq!(c_ab, c_ba);
    }

    #[test]
    fn sandwich_rejects_exhausted_or_invalid_schedules() {
        let cfg = SandwichConfig { seq_count: 1, ..SandwichConfig::default() };
        assert!(matches!(
            product_sandwich_experiment(&cfg).unwrap_err(),
            LabError::InvalidConfig(_)
        ));

        let cfg = SandwichConfig { ms: vec![], ..SandwichConfig::default() };
        assert!(product_sandwich_experiment(&cfg).is_err());

        let cfg = SandwichConfig { ms: vec![1], angle_gap: 2.0, ..SandwichConfig::default() };
        assert!(product_sandwich_experiment(&cfg).is_err());

        let cfg = SandwichConfig { seq_q: 0.0, ..SandwichConfig::default() };
        assert!(product_sandwich_experiment(&cfg).is_err());

        let cfg = SandwichConfig {
            shape: ProductShape::DiscCone { disc_radius: 0.0 },
            ..SandwichConfig::default()
        };
        assert!(product_sandwich_experiment(&cfg).is_err());
    }

    #[test]
    fn monotone_onset_detects_tail_runs() {
        assert_eq!(monotone_onset(&[3.0, 1.0, 2.0, 3.0]), Some(1));
        assert_eq!(monotone_onset(&[1.0, 2.0, 3.0]), Some(0));
        assert_eq!(monotone_onset(&[1.0, 2.0, 1.5]), Some(1));
        assert_eq!(monotone_onset(&[2.0, 1.0, 2.0, 1.5]), Some(2));
        assert_eq!(monotone_onset(&[1.0]), None);
        assert_eq!(monotone_onset(&[1.0, 1.0, 1.0]), Some(0));
    }
}
