//! Numerical extremal-map oracles for the invariant metrics and measures.
//!
//! Each oracle searches over polynomial candidate maps and returns a bound
//! on the true quantity that is valid by construction:
//! - `kobayashi_upper_oracle` maximizes the derivative scale of analytic
//!   discs f: disc -> D with f(0) = z, f'(0) = lambda v; any certified
//!   feasible candidate yields the upper bound 1/lambda.
//! - `eisenman_upper_oracle` maximizes |det f'(0)|^2 over maps from the unit
//!   polydisc into D with f(0) = z; the bound is 1/|det f'(0)|^2.
//! - `caratheodory_lower_oracle` maximizes |det g'(z)|^2 over maps g: D ->
//!   polydisc with g(z) = 0; the bound is |det g'(z)|^2.
//!
//! On two-factor products the measure searches restrict to product
//! candidates (component i reads only variable i). The restriction keeps
//! every bound valid - any feasible candidate certifies its bound - and on
//! products it is also sharp, because extremal maps factor through the
//! product structure. It tames the search dimension and reduces every
//! feasibility question to a one-variable boundary certificate.
//!
//! Candidates are polynomials in a per-variable basis coordinate. On disc
//! factors of a Caratheodory search the basis coordinate is the disc
//! automorphism vanishing at the base point, so the degree cap never
//! penalizes the recentring itself: the identity polynomial is already the
//! exact factor extremal, mirroring the exact automorphism correction on
//! the Eisenman side for disc targets. Elsewhere the basis is affine.
//!
//! Candidates found by the derivative-free search are repaired to certified
//! feasibility before a bound is emitted (a source shrink for disc-source
//! problems, an exact renormalization for polydisc targets), so reported
//! bounds never sit on the wrong side of the truth, whatever the optimizer
//! did. Runs are deterministic for a fixed configuration.

mod certify;
mod nm;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};
use crate::metrics::ProductDomain;
use crate::planar::PlanarDomain;
use certify::{cert_margins_polydisc_source, cert_sups_boundary_product, CertSizes};

/// Search configuration. All fields shape the deterministic trajectory, so
/// two runs with equal configurations produce identical results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Total degree cap for candidate polynomials.
    pub degree: usize,
    /// Independent restarts; the first uses the analytic seed unperturbed.
    pub restarts: usize,
    /// Resolution of the in-loop feasibility grid.
    pub grid: usize,
    /// Escalating penalty weights, one search phase per entry.
    pub penalties: Vec<f64>,
    /// Seed for restart perturbations.
    pub seed: u64,
    /// Objective evaluation budget per phase and restart.
    pub max_evals: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            degree: 6,
            restarts: 32,
            grid: 128,
            penalties: vec![1e4, 1e7, 1e10],
            seed: 0x5EED,
            max_evals: 1500,
        }
    }
}

impl OptimizerConfig {
    /// Lighter deterministic configuration used when a measure falls back to
    /// the oracle internally.
    pub fn measure_default() -> Self {
        OptimizerConfig {
            degree: 5,
            restarts: 6,
            grid: 64,
            penalties: vec![1e4, 1e7, 1e10],
            seed: 0x17,
            max_evals: 900,
        }
    }

    fn validate(&self) -> LabResult<()> {
        if self.degree == 0 || self.degree > 12 {
            return Err(LabError::InvalidConfig(format!(
                "degree {} outside 1..=12",
                self.degree
            )));
        }
        if self.restarts == 0 {
            return Err(LabError::InvalidConfig("at least one restart".into()));
        }
        if self.grid < 16 {
            return Err(LabError::InvalidConfig("grid resolution below 16".into()));
        }
        if self.penalties.is_empty() {
            return Err(LabError::InvalidConfig("empty penalty schedule".into()));
        }
        if self.max_evals < 100 {
            return Err(LabError::InvalidConfig("evaluation budget below 100".into()));
        }
        Ok(())
    }
}

/// Which side of the true value a reported bound sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundDirection {
    Upper,
    Lower,
}

impl std::fmt::Display for BoundDirection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundDirection::Upper => write!(f, "upper"),
            BoundDirection::Lower => write!(f, "lower"),
        }
    }
}

/// Polynomial candidate map. Component `i` is a polynomial in the basis
/// coordinates u_v = phi_v((z_v - center_v)/scale_v), where phi_v is the
/// unit-disc automorphism vanishing at `mobius_v` (the identity when
/// mobius_v = 0). Disc-source candidates (Kobayashi, Eisenman) use center 0,
/// scale 1, mobius 0; Caratheodory candidates recentre each disc factor by
/// its exact automorphism so the degree cap applies past the recentring.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscCandidate {
    pub source_dim: usize,
    pub degree: usize,
    pub center: Vec<Complex64>,
    pub scale: Vec<f64>,
    /// Per-variable automorphism parameter of the basis coordinate.
    pub mobius: Vec<Complex64>,
    /// Per output component: (multi-index, coefficient) terms.
    pub coeffs: Vec<Vec<(Vec<u32>, Complex64)>>,
}

/// (x - a) / (1 - conj(a) x), the unit-disc automorphism sending a to 0.
fn mobius_chart(a: Complex64, x: Complex64) -> Complex64 {
    if a.norm_sqr() == 0.0 {
        return x;
    }
    (x - a) / (Complex64::new(1.0, 0.0) - a.conj() * x)
}

impl DiscCandidate {
    fn basis_coordinate(&self, v: usize, z: Complex64) -> Complex64 {
        mobius_chart(self.mobius[v], (z - self.center[v]) / self.scale[v])
    }

    pub fn eval_component(&self, comp: usize, z: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (idx, c) in &self.coeffs[comp] {
            let mut term = *c;
            for (v, &p) in idx.iter().enumerate() {
                if p > 0 {
                    term *= self.basis_coordinate(v, z[v]).powu(p);
                }
            }
            acc += term;
        }
        acc
    }

    pub fn eval(&self, z: &[Complex64]) -> Vec<Complex64> {
        (0..self.coeffs.len()).map(|i| self.eval_component(i, z)).collect()
    }

    /// Bound on |d component / d z_var| over the closed unit basis polydisc
    /// { |(z_v - center_v)/scale_v| <= 1 }. The polynomial part contributes
    /// sum k |c_k| (basis coordinates have modulus <= 1 there); the chart
    /// contributes sup |phi'| / scale, which is (1+|a|)/(1-|a|) / scale.
    pub(crate) fn partial_bound(&self, comp: usize, var: usize) -> f64 {
        let poly: f64 = self.coeffs[comp]
            .iter()
            .map(|(idx, c)| c.norm() * idx[var] as f64)
            .sum();
        let a = self.mobius[var].norm();
        if a == 0.0 {
            poly / self.scale[var]
        } else {
            poly * ((1.0 + a) / (1.0 - a)) / self.scale[var]
        }
    }

    pub(crate) fn is_monomial_basis(&self) -> bool {
        self.center.iter().all(|c| c.norm() == 0.0)
            && self.scale.iter().all(|&s| s == 1.0)
            && self.mobius.iter().all(|m| m.norm() == 0.0)
    }

    /// The single variable a component reads, when there is exactly one.
    pub(crate) fn single_variable(&self, comp: usize) -> Option<usize> {
        let mut var = None;
        for (idx, _) in &self.coeffs[comp] {
            for (v, &p) in idx.iter().enumerate() {
                if p > 0 {
                    match var {
                        None => var = Some(v),
                        Some(u) if u != v => return None,
                        _ => {}
                    }
                }
            }
        }
        var
    }

    /// Precomposition with z -> t z (monomial basis only).
    fn shrink(&self, t: f64) -> DiscCandidate {
        let coeffs = self
            .coeffs
            .iter()
            .map(|cs| {
                cs.iter()
                    .map(|(idx, c)| {
                        let total: u32 = idx.iter().sum();
                        (idx.clone(), c * t.powi(total as i32))
                    })
                    .collect()
            })
            .collect();
        DiscCandidate { coeffs, ..self.clone() }
    }
}

/// Outcome of one oracle run.
#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Short human-readable problem label.
    pub problem: String,
    /// The certified bound (see `direction` for its side).
    pub bound: f64,
    pub direction: BoundDirection,
    /// The feasible candidate backing the bound. For Eisenman bounds over
    /// disc targets the bound additionally includes an exact disc
    /// automorphism correction applied after the stored polynomial.
    pub candidate: DiscCandidate,
    /// Certified feasibility margin of the candidate (boundary margin for
    /// disc-source problems, 1 - sup for polydisc targets).
    pub feasibility_margin: f64,
    /// Total objective evaluations across restarts and phases.
    pub iterations: u64,
    pub converged: bool,
}

#[derive(Clone)]
enum Kind {
    Kobayashi { v: Vec<Complex64> },
    Eisenman,
    Caratheodory,
}

struct Problem<'a> {
    kind: Kind,
    domain: &'a ProductDomain,
    z: &'a [Complex64],
    degree: usize,
    /// Per component: multi-indices with 1 <= |alpha| <= degree. Measure
    /// searches on two-factor products use the product layout, where
    /// component i carries only the indices k e_i.
    indices: Vec<Vec<Vec<u32>>>,
    /// Per component, per variable: position of the unit index e_var in the
    /// component's list, if present.
    unit_pos: Vec<Vec<Option<usize>>>,
    source_dim: usize,
    n_comps: usize,
    center: Vec<Complex64>,
    scale: Vec<f64>,
    /// Per-variable automorphism parameter of the basis coordinate; zero
    /// outside Caratheodory disc factors.
    mobius: Vec<Complex64>,
    /// In-loop grid: per point, per variable, powers 0..=degree of the basis
    /// coordinate.
    grid_tables: Vec<Vec<Vec<Complex64>>>,
    /// Margins are taken against these factors (target factors for
    /// disc-source problems); empty for Caratheodory (sup form).
    margin_factors: Vec<PlanarDomain>,
    /// Measure search over a two-factor product: component i reads only
    /// variable i, and the search separates per component.
    product_structure: bool,
}

fn joint_indices(nvars: usize, degree: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for total in 1..=degree as u32 {
        let mut idx = vec![0u32; nvars];
        fill_indices(nvars, total, 0, &mut idx, &mut out);
    }
    out
}

fn fill_indices(
    nvars: usize,
    remaining: u32,
    var: usize,
    idx: &mut Vec<u32>,
    out: &mut Vec<Vec<u32>>,
) {
    if var + 1 == nvars {
        idx[var] = remaining;
        out.push(idx.clone());
        idx[var] = 0;
        return;
    }
    for p in 0..=remaining {
        idx[var] = p;
        fill_indices(nvars, remaining - p, var + 1, idx, out);
    }
    idx[var] = 0;
}

/// Indices k e_var for k = 1..=degree.
fn diagonal_indices(nvars: usize, var: usize, degree: usize) -> Vec<Vec<u32>> {
    (1..=degree as u32)
        .map(|k| {
            let mut idx = vec![0u32; nvars];
            idx[var] = k;
            idx
        })
        .collect()
}

fn unit_circle(m: usize) -> Vec<Complex64> {
    (0..m)
        .map(|j| Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / m as f64))
        .collect()
}

impl<'a> Problem<'a> {
    fn new(
        kind: Kind,
        domain: &'a ProductDomain,
        z: &'a [Complex64],
        cfg: &OptimizerConfig,
    ) -> LabResult<Self> {
        cfg.validate()?;
        domain.check_dim(z.len())?;
        let membership = domain.contains(z)?;
        if !membership.inside {
            return Err(LabError::OutsideDomain(format!(
                "oracle base point has margin {}",
                membership.margin
            )));
        }
        let n = domain.dim();
        let (source_dim, n_comps) = match &kind {
            Kind::Kobayashi { v } => {
                if v.len() != n {
                    return Err(LabError::Dimension(format!(
                        "direction has {} entries for a {n}-factor domain",
                        v.len()
                    )));
                }
                if v.iter().map(|c| c.norm()).sum::<f64>() < 1e-15 {
                    return Err(LabError::InvalidConfig(
                        "zero direction has no extremal disc".into(),
                    ));
                }
                (1, n)
            }
            Kind::Eisenman | Kind::Caratheodory => (n, n),
        };
        let product_structure = !matches!(kind, Kind::Kobayashi { .. }) && n == 2;

        let indices: Vec<Vec<Vec<u32>>> = (0..n_comps)
            .map(|i| {
                if product_structure {
                    diagonal_indices(source_dim, i, cfg.degree)
                } else {
                    joint_indices(source_dim, cfg.degree)
                }
            })
            .collect();
        let unit_pos: Vec<Vec<Option<usize>>> = indices
            .iter()
            .map(|list| {
                (0..source_dim)
                    .map(|v| {
                        list.iter().position(|idx| {
                            idx[v] == 1 && idx.iter().sum::<u32>() == 1
                        })
                    })
                    .collect()
            })
            .collect();

        let (center, scale, mobius, grid_tables, margin_factors) = match &kind {
            Kind::Caratheodory => {
                // Basis per factor: on discs, the exact automorphism chart
                // vanishing at z_i (so the identity polynomial is the factor
                // extremal); elsewhere an affine recentring at z_i scaled by
                // a sup bound of |z_i - w| over the factor closure. Either
                // way basis coordinates stay in the closed unit disc and
                // vanish at the base point.
                let mut center = Vec::with_capacity(n);
                let mut scale = Vec::with_capacity(n);
                let mut mobius = Vec::with_capacity(n);
                for (f, &zi) in domain.factors().iter().zip(z) {
                    match f {
                        PlanarDomain::UnitDisc | PlanarDomain::Disc { .. } => {
                            let (c, r) = disc_data(f);
                            center.push(c);
                            scale.push(r);
                            mobius.push((zi - c) / r);
                        }
                        _ => {
                            let (c, r) = f.enclosing_disc().ok_or_else(|| {
                                LabError::InvalidConfig(format!(
                                    "factor {f} is unbounded: no Caratheodory candidates"
                                ))
                            })?;
                            center.push(zi);
                            scale.push((zi - c).norm() + r);
                            mobius.push(Complex64::new(0.0, 0.0));
                        }
                    }
                }
                let per = cfg.grid.max(64);
                let boundaries: Vec<Vec<Complex64>> = domain
                    .factors()
                    .iter()
                    .map(|f| certify::factor_boundary(f, per).map(|(p, _)| p))
                    .collect::<LabResult<_>>()?;
                // One or two factors; two-factor searches are per-component,
                // so pairing the boundary lists (cycling the shorter) covers
                // each factor's full boundary.
                let points: Vec<Vec<Complex64>> = match n {
                    1 => boundaries[0].iter().map(|&b| vec![b]).collect(),
                    2 => {
                        let m = boundaries[0].len().max(boundaries[1].len());
                        (0..m)
                            .map(|j| {
                                vec![
                                    boundaries[0][j % boundaries[0].len()],
                                    boundaries[1][j % boundaries[1].len()],
                                ]
                            })
                            .collect()
                    }
                    _ => unreachable!(),
                };
                let tables = power_tables(&points, &center, &scale, &mobius, cfg.degree);
                (center, scale, mobius, tables, Vec::new())
            }
            Kind::Kobayashi { .. } => {
                let m = cfg.grid.max(32);
                let points: Vec<Vec<Complex64>> =
                    unit_circle(m).into_iter().map(|p| vec![p]).collect();
                let zeros = vec![Complex64::new(0.0, 0.0); 1];
                let tables = power_tables(&points, &zeros, &[1.0], &zeros, cfg.degree);
                (zeros.clone(), vec![1.0], zeros, tables, domain.factors().to_vec())
            }
            Kind::Eisenman => {
                // Product candidates only read their own variable, so the
                // diagonal of the torus exercises every component's full
                // circle.
                let m = cfg.grid.max(32);
                let points: Vec<Vec<Complex64>> =
                    unit_circle(m).into_iter().map(|p| vec![p; n]).collect();
                let zeros = vec![Complex64::new(0.0, 0.0); n];
                let tables = power_tables(&points, &zeros, &vec![1.0; n], &zeros, cfg.degree);
                (zeros.clone(), vec![1.0; n], zeros, tables, domain.factors().to_vec())
            }
        };

        Ok(Problem {
            kind,
            domain,
            z,
            degree: cfg.degree,
            indices,
            unit_pos,
            source_dim,
            n_comps,
            center,
            scale,
            mobius,
            grid_tables,
            margin_factors,
            product_structure,
        })
    }

    /// Parameter count for component i alone.
    fn comp_param_dim(&self, i: usize) -> usize {
        match &self.kind {
            Kind::Kobayashi { .. } => 2 * (self.degree.saturating_sub(1)),
            _ => 2 * self.indices[i].len(),
        }
    }

    fn param_dim(&self) -> usize {
        let base: usize = (0..self.n_comps).map(|i| self.comp_param_dim(i)).sum();
        match &self.kind {
            Kind::Kobayashi { .. } => 1 + base,
            _ => base,
        }
    }

    /// Parameter range of component i within the full vector.
    fn comp_range(&self, i: usize) -> std::ops::Range<usize> {
        let offset = if matches!(self.kind, Kind::Kobayashi { .. }) { 1 } else { 0 };
        let start: usize = offset + (0..i).map(|j| self.comp_param_dim(j)).sum::<usize>();
        start..start + self.comp_param_dim(i)
    }

    /// Coefficient values aligned with `indices[i]`, plus the fixed constant
    /// term, for each component.
    fn decode(&self, x: &[f64]) -> (Vec<Complex64>, Vec<Vec<Complex64>>) {
        match &self.kind {
            Kind::Kobayashi { v } => {
                let lambda = x[0];
                let mut consts = Vec::with_capacity(self.n_comps);
                let mut comps = Vec::with_capacity(self.n_comps);
                let mut at = 1;
                for i in 0..self.n_comps {
                    consts.push(self.z[i]);
                    let mut vals = vec![Complex64::new(0.0, 0.0); self.indices[i].len()];
                    vals[0] = v[i] * lambda;
                    for k in 1..self.degree {
                        vals[k] = Complex64::new(x[at], x[at + 1]);
                        at += 2;
                    }
                    comps.push(vals);
                }
                (consts, comps)
            }
            Kind::Eisenman | Kind::Caratheodory => {
                let constant = match self.kind {
                    Kind::Eisenman => self.z.to_vec(),
                    _ => vec![Complex64::new(0.0, 0.0); self.n_comps],
                };
                let mut comps = Vec::with_capacity(self.n_comps);
                let mut at = 0;
                for i in 0..self.n_comps {
                    let vals = (0..self.indices[i].len())
                        .map(|_| {
                            let c = Complex64::new(x[at], x[at + 1]);
                            at += 2;
                            c
                        })
                        .collect();
                    comps.push(vals);
                }
                (constant, comps)
            }
        }
    }

    /// d(basis coordinate)/dz at the base point: the chart derivative
    /// phi'(a) = 1/(1-|a|^2) over the affine scale. Real and positive.
    fn basis_deriv(&self, var: usize) -> f64 {
        1.0 / (self.scale[var] * (1.0 - self.mobius[var].norm_sqr()))
    }

    /// det of the complex Jacobian at the base point from the unit-index
    /// coefficients.
    fn det_at_base(&self, comps: &[Vec<Complex64>]) -> Complex64 {
        let j = |i: usize, var: usize| -> Complex64 {
            match self.unit_pos[i][var] {
                Some(pos) => comps[i][pos] * self.basis_deriv(var),
                None => Complex64::new(0.0, 0.0),
            }
        };
        match self.n_comps {
            1 => j(0, 0),
            2 => j(0, 0) * j(1, 1) - j(0, 1) * j(1, 0),
            _ => unreachable!(),
        }
    }

    fn objective(&self, x: &[f64], weight: f64) -> f64 {
        let (consts, comps) = self.decode(x);
        let primary = match &self.kind {
            Kind::Kobayashi { .. } => -x[0] + 1e4 * (-x[0]).max(0.0),
            Kind::Eisenman | Kind::Caratheodory => -self.det_at_base(&comps).norm_sqr(),
        };
        let mut viol = 0.0f64;
        for i in 0..self.n_comps {
            match &self.kind {
                Kind::Caratheodory => {
                    let mut sup = 0.0f64;
                    for table in &self.grid_tables {
                        sup = sup.max(
                            eval_with_table(&consts[i], &comps[i], &self.indices[i], table)
                                .norm(),
                        );
                    }
                    viol += (sup - 1.0).max(0.0).powi(2);
                }
                _ => {
                    let factor = &self.margin_factors[i];
                    let mut min_margin = f64::INFINITY;
                    for table in &self.grid_tables {
                        let w = eval_with_table(&consts[i], &comps[i], &self.indices[i], table);
                        min_margin = min_margin.min(factor.margin(w));
                    }
                    viol += (-min_margin).max(0.0).powi(2);
                }
            }
        }
        let total = primary + weight * viol;
        if total.is_finite() {
            total
        } else {
            f64::MAX
        }
    }

    fn candidate_from(&self, x: &[f64]) -> DiscCandidate {
        let (consts, comps) = self.decode(x);
        let coeffs = (0..self.n_comps)
            .map(|i| {
                let mut terms = Vec::with_capacity(1 + self.indices[i].len());
                if consts[i].norm() > 0.0 {
                    terms.push((vec![0u32; self.source_dim], consts[i]));
                }
                for (k, idx) in self.indices[i].iter().enumerate() {
                    terms.push((idx.clone(), comps[i][k]));
                }
                terms
            })
            .collect();
        DiscCandidate {
            source_dim: self.source_dim,
            degree: self.degree,
            center: self.center.clone(),
            scale: self.scale.clone(),
            mobius: self.mobius.clone(),
            coeffs,
        }
    }

    fn label(&self) -> String {
        let name = match &self.kind {
            Kind::Kobayashi { .. } => "kobayashi",
            Kind::Eisenman => "eisenman",
            Kind::Caratheodory => "caratheodory",
        };
        let factors: Vec<String> =
            self.domain.factors().iter().map(|f| f.to_string()).collect();
        let point: Vec<String> = self
            .z
            .iter()
            .map(|p| format!("{:.6}{:+.6}i", p.re, p.im))
            .collect();
        format!("{name}[{}] at ({})", factors.join(" x "), point.join(", "))
    }
}

fn power_tables(
    points: &[Vec<Complex64>],
    center: &[Complex64],
    scale: &[f64],
    mobius: &[Complex64],
    degree: usize,
) -> Vec<Vec<Vec<Complex64>>> {
    points
        .iter()
        .map(|pt| {
            pt.iter()
                .enumerate()
                .map(|(v, &p)| {
                    let xi = mobius_chart(mobius[v], (p - center[v]) / scale[v]);
                    let mut pows = Vec::with_capacity(degree + 1);
                    let mut acc = Complex64::new(1.0, 0.0);
                    pows.push(acc);
                    for _ in 0..degree {
                        acc *= xi;
                        pows.push(acc);
                    }
                    pows
                })
                .collect()
        })
        .collect()
}

fn eval_with_table(
    constant: &Complex64,
    vals: &[Complex64],
    indices: &[Vec<u32>],
    table: &[Vec<Complex64>],
) -> Complex64 {
    let mut acc = *constant;
    for (k, idx) in indices.iter().enumerate() {
        let mut term = vals[k];
        for (v, &p) in idx.iter().enumerate() {
            if p > 0 {
                term *= table[v][p as usize];
            }
        }
        acc += term;
    }
    acc
}

/// Analytic seed: exact extremal structure on disc-like factors, safe small
/// discs elsewhere. Returns the parameter vector.
fn analytic_seed(problem: &Problem<'_>) -> Vec<f64> {
    let mut x = vec![0.0; problem.param_dim()];
    match &problem.kind {
        Kind::Kobayashi { v } => {
            let mut lambda = f64::INFINITY;
            let mut truncated_tail = false;
            let mut discs: Vec<Option<(Complex64, f64)>> = Vec::new();
            for (f, &zi) in problem.domain.factors().iter().zip(problem.z) {
                let cap;
                match f {
                    PlanarDomain::UnitDisc | PlanarDomain::Disc { .. } => {
                        let (c, r) = disc_data(f);
                        let zh = (zi - c) / r;
                        discs.push(Some((zh, r)));
                        let vi = v[discs.len() - 1].norm();
                        cap = if vi < 1e-15 {
                            f64::INFINITY
                        } else {
                            if zh.norm() > 0.0 {
                                truncated_tail = true;
                            }
                            r * (1.0 - zh.norm_sqr()) / vi
                        };
                    }
                    _ => {
                        discs.push(None);
                        let vi = v[discs.len() - 1].norm();
                        cap = if vi < 1e-15 {
                            f64::INFINITY
                        } else {
                            0.95 * f.margin(zi) / vi
                        };
                    }
                }
                lambda = lambda.min(cap);
            }
            if !lambda.is_finite() {
                lambda = 1.0;
            }
            // A truncated Moebius tail can push the sup slightly past the
            // boundary; back off unless the seed is an exact rotation.
            if truncated_tail {
                lambda *= 0.999;
            }
            x[0] = lambda;
            // Taylor tail of the Moebius disc z -> phi_zh(mu zeta) on disc
            // factors; other factors keep a linear seed (tail zero).
            let mut at = 1;
            for i in 0..problem.n_comps {
                if let (Some((zh, r)), true) = (discs[i], v[i].norm() > 1e-15) {
                    let mu = lambda * v[i] / (r * (1.0 - zh.norm_sqr()));
                    for k in 2..=problem.degree {
                        let coeff = r
                            * (1.0 - zh.norm_sqr())
                            * (-zh.conj()).powu(k as u32 - 1)
                            * mu.powu(k as u32);
                        x[at + 2 * (k - 2)] = coeff.re;
                        x[at + 2 * (k - 2) + 1] = coeff.im;
                    }
                }
                at += 2 * (problem.degree - 1);
            }
        }
        Kind::Eisenman => {
            for (i, (f, &zi)) in problem.domain.factors().iter().zip(problem.z).enumerate() {
                let range = problem.comp_range(i);
                let base = range.start;
                match f {
                    PlanarDomain::UnitDisc | PlanarDomain::Disc { .. } => {
                        let (c, r) = disc_data(f);
                        let zh = (zi - c) / r;
                        for k in 1..=problem.degree {
                            let coeff =
                                r * (1.0 - zh.norm_sqr()) * (-zh.conj()).powu(k as u32 - 1);
                            let pos = diag_pos(problem, i, k);
                            x[base + 2 * pos] = coeff.re;
                            x[base + 2 * pos + 1] = coeff.im;
                        }
                    }
                    _ => {
                        let m0 = 0.9 * f.margin(zi);
                        let pos = diag_pos(problem, i, 1);
                        x[base + 2 * pos] = m0;
                    }
                }
            }
        }
        Kind::Caratheodory => {
            for (i, f) in problem.domain.factors().iter().enumerate() {
                let range = problem.comp_range(i);
                let base = range.start;
                match f {
                    PlanarDomain::UnitDisc | PlanarDomain::Disc { .. } => {
                        // The basis coordinate is the factor's extremal map,
                        // so the identity polynomial is the exact seed.
                        let pos = diag_pos(problem, i, 1);
                        x[base + 2 * pos] = 1.0;
                    }
                    _ => {
                        let pos = diag_pos(problem, i, 1);
                        x[base + 2 * pos] = 0.9;
                    }
                }
            }
        }
    }
    x
}

fn disc_data(f: &PlanarDomain) -> (Complex64, f64) {
    match f {
        PlanarDomain::UnitDisc => (Complex64::new(0.0, 0.0), 1.0),
        PlanarDomain::Disc { center, radius } => (*center, *radius),
        _ => unreachable!("disc_data called on a non-disc factor"),
    }
}

/// Position of k * e_i within component i's index list.
fn diag_pos(problem: &Problem<'_>, comp: usize, k: usize) -> usize {
    problem.indices[comp]
        .iter()
        .position(|idx| {
            idx[comp.min(problem.source_dim - 1)] == k as u32
                && idx.iter().sum::<u32>() == k as u32
        })
        .expect("diagonal index present by construction")
}

struct Restored {
    candidate: DiscCandidate,
    bound: f64,
    margin: f64,
}

/// Certify and repair a Kobayashi or Eisenman candidate by shrinking the
/// source until containment is certified. Returns None when no usable
/// shrink exists.
fn restore_disc_source(
    problem: &Problem<'_>,
    cand: &DiscCandidate,
    sizes: CertSizes,
) -> Option<Restored> {
    let feasible_margin = |c: &DiscCandidate| -> Option<f64> {
        let margins = cert_margins_polydisc_source(c, problem.domain, sizes).ok()?;
        let min = margins.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        Some(min)
    };
    let bound_of = |c: &DiscCandidate, t: f64| -> f64 {
        match &problem.kind {
            Kind::Kobayashi { .. } => {
                // lambda scales linearly with the shrink.
                let lambda = lambda_of(problem, c) * t;
                if lambda <= 1e-12 {
                    f64::INFINITY
                } else {
                    1.0 / lambda
                }
            }
            Kind::Eisenman => {
                let det = det_of(problem, c).norm_sqr() * t.powi(2 * problem.source_dim as i32);
                if det <= 1e-300 {
                    f64::INFINITY
                } else {
                    1.0 / det
                }
            }
            Kind::Caratheodory => unreachable!(),
        }
    };

    let m1 = feasible_margin(cand)?;
    if m1 >= 0.0 {
        return Some(Restored { candidate: cand.clone(), bound: bound_of(cand, 1.0), margin: m1 });
    }
    // Find a feasible shrink, then bisect toward 1.
    let mut lo = 0.7f64;
    let mut tries = 0;
    while feasible_margin(&cand.shrink(lo)).map_or(true, |m| m < 0.0) {
        lo *= 0.7;
        tries += 1;
        if tries > 60 {
            return None;
        }
    }
    let mut hi = if tries == 0 { 1.0 } else { lo / 0.7 };
    for _ in 0..45 {
        let mid = 0.5 * (lo + hi);
        if feasible_margin(&cand.shrink(mid)).map_or(false, |m| m >= 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let shrunk = cand.shrink(lo);
    let margin = feasible_margin(&shrunk)?;
    if margin < 0.0 {
        return None;
    }
    Some(Restored { candidate: shrunk.clone(), bound: bound_of(cand, lo), margin })
}

/// Eisenman repair over all-disc targets: renormalize each component toward
/// its target center using the certified sup, then correct the base point
/// with an exact disc automorphism. One certificate, no search.
fn restore_eisenman_disc_targets(
    problem: &Problem<'_>,
    cand: &DiscCandidate,
    sizes: CertSizes,
) -> Option<Restored> {
    let margins = cert_margins_polydisc_source(cand, problem.domain, sizes).ok()?;
    let det = det_of(problem, cand);
    if det.norm_sqr() <= 1e-300 {
        return None;
    }
    let mut coeffs = cand.coeffs.clone();
    let mut correction = 1.0f64;
    let mut reported_margin = f64::INFINITY;
    for (i, f) in problem.domain.factors().iter().enumerate() {
        let (c, r) = disc_data(f);
        let sup = r - margins[i];
        let rho = if sup > r { r / sup } else { 1.0 };
        reported_margin = reported_margin.min((r - rho * sup).max(0.0));
        let zh = (problem.z[i] - c) / r;
        let ah = rho * zh;
        let psi_prime = (1.0 - zh.norm_sqr()) / (1.0 - ah.norm_sqr());
        correction *= (rho * psi_prime).powi(2);
        if rho < 1.0 {
            for (idx, coeff) in coeffs[i].iter_mut() {
                if idx.iter().all(|&p| p == 0) {
                    *coeff = c + rho * (*coeff - c);
                } else {
                    *coeff *= rho;
                }
            }
        }
    }
    let bound = 1.0 / (det.norm_sqr() * correction);
    Some(Restored {
        candidate: DiscCandidate { coeffs, ..cand.clone() },
        bound,
        margin: reported_margin,
    })
}

/// Caratheodory repair: divide each component by its certified sup when it
/// exceeds 1. Exact, preserves g(z) = 0.
fn restore_caratheodory(
    problem: &Problem<'_>,
    cand: &DiscCandidate,
    sizes: CertSizes,
) -> Option<Restored> {
    let sups = cert_sups_boundary_product(cand, problem.domain, sizes).ok()?;
    let det = det_of(problem, cand);
    if det.norm_sqr() <= 1e-300 {
        return None;
    }
    let mut coeffs = cand.coeffs.clone();
    let mut det_scale = 1.0f64;
    let mut margin = f64::INFINITY;
    for (i, &s) in sups.iter().enumerate() {
        if s > 1.0 {
            for (_, c) in coeffs[i].iter_mut() {
                *c /= s;
            }
            det_scale /= s;
            margin = margin.min(0.0);
        } else {
            margin = margin.min(1.0 - s);
        }
    }
    let bound = (det.norm() * det_scale).powi(2);
    Some(Restored {
        candidate: DiscCandidate { coeffs, ..cand.clone() },
        bound,
        margin,
    })
}

fn lambda_of(problem: &Problem<'_>, cand: &DiscCandidate) -> f64 {
    // f'(0) = lambda v; recover lambda from the first nonzero direction.
    if let Kind::Kobayashi { v } = &problem.kind {
        for (i, vi) in v.iter().enumerate() {
            if vi.norm() > 1e-12 {
                let c1 = cand.coeffs[i]
                    .iter()
                    .find(|(idx, _)| idx.iter().sum::<u32>() == 1)
                    .map(|(_, c)| *c)
                    .unwrap_or_else(|| Complex64::new(0.0, 0.0));
                return (c1 / vi).re;
            }
        }
    }
    0.0
}

fn det_of(problem: &Problem<'_>, cand: &DiscCandidate) -> Complex64 {
    let coeff = |i: usize, var: usize| -> Complex64 {
        cand.coeffs[i]
            .iter()
            .find(|(idx, _)| idx[var] == 1 && idx.iter().sum::<u32>() == 1)
            .map(|(_, c)| *c)
            .unwrap_or_else(|| Complex64::new(0.0, 0.0))
            * problem.basis_deriv(var)
    };
    match problem.n_comps {
        1 => coeff(0, 0),
        2 => coeff(0, 0) * coeff(1, 1) - coeff(0, 1) * coeff(1, 0),
        _ => unreachable!(),
    }
}

/// Deterministic deep solve of the real-coefficient extremal problem on the
/// unit disc. Rotating the disc variable and the target reduces the general
/// disc-factor component problem to real coefficients and a base point in
/// [0,1), where six real parameters admit a much deeper search than the full
/// complex parametrization.
///
/// `into`: maximize c_1 subject to p(0) = base and sup |p| <= 1
///   (a disc mapped into the factor through the base point).
/// `!into`: maximize p'(base) subject to p(base) = 0 and sup |p| <= 1
///   (the factor mapped into the disc, vanishing at the base point).
///
/// Returns coefficients c_1..=c_degree; the constant term is implied (base,
/// or minus the sum pinning p(base) = 0).
fn disc_extremal_real(base: f64, degree: usize, into: bool) -> Vec<f64> {
    let m = 1024usize;
    // Real coefficients give conjugate symmetry, so the upper half circle
    // carries the full sup.
    let nodes: Vec<(Vec<f64>, Vec<f64>)> = (0..=m)
        .map(|j| {
            let t = std::f64::consts::PI * j as f64 / m as f64;
            let cos: Vec<f64> = (1..=degree).map(|k| (k as f64 * t).cos()).collect();
            let sin: Vec<f64> = (1..=degree).map(|k| (k as f64 * t).sin()).collect();
            (cos, sin)
        })
        .collect();
    let objective = |c: &[f64], w: f64| -> f64 {
        let konst = if into {
            base
        } else {
            -(1..=degree).map(|k| c[k - 1] * base.powi(k as i32)).sum::<f64>()
        };
        let mut sup_sq = 0.0f64;
        for (cos, sin) in &nodes {
            let mut re = konst;
            let mut im = 0.0;
            for k in 0..degree {
                re += c[k] * cos[k];
                im += c[k] * sin[k];
            }
            sup_sq = sup_sq.max(re * re + im * im);
        }
        let excess = (sup_sq.sqrt() - 1.0).max(0.0);
        let primary = if into {
            -c[0]
        } else {
            -(1..=degree)
                .map(|k| k as f64 * c[k - 1] * base.powi(k as i32 - 1))
                .sum::<f64>()
        };
        primary + w * excess * excess
    };
    // Truncated Moebius seed; for the reversed orientation the expansion of
    // (z - base)/(1 - base z) has the same coefficient moduli.
    let mut c: Vec<f64> = (1..=degree)
        .map(|k| {
            let sign = if into { (-base).powi(k as i32 - 1) } else { base.powi(k as i32 - 1) };
            (1.0 - base * base) * sign
        })
        .collect();
    for round in 0..3 {
        for (phase, &w) in [1e4, 1e7, 1e10].iter().enumerate() {
            let step = 0.1 / 3f64.powi(phase as i32) / 2f64.powi(round);
            let res = nm::minimize(|p| objective(p, w), &c, step, 4000, 1e-12);
            c = res.x;
        }
        for &radius in &[0.02, 0.004, 0.0008, 0.00016] {
            for i in 0..degree {
                let phi = 0.5 * (3.0 - 5f64.sqrt());
                let orig = c[i];
                let mut a = orig - radius;
                let mut b = orig + radius;
                let mut lo = a + phi * (b - a);
                let mut hi = b - phi * (b - a);
                let eval = |c: &mut Vec<f64>, i: usize, t: f64| {
                    c[i] = t;
                    objective(c, 1e10)
                };
                let mut flo = eval(&mut c, i, lo);
                let mut fhi = eval(&mut c, i, hi);
                for _ in 0..28 {
                    if flo <= fhi {
                        b = hi;
                        hi = lo;
                        fhi = flo;
                        lo = a + phi * (b - a);
                        flo = eval(&mut c, i, lo);
                    } else {
                        a = lo;
                        lo = hi;
                        flo = fhi;
                        hi = b - phi * (b - a);
                        fhi = eval(&mut c, i, hi);
                    }
                }
                let (t_new, f_new) = if flo <= fhi { (lo, flo) } else { (hi, fhi) };
                let f_orig = eval(&mut c, i, orig);
                if f_new < f_orig {
                    c[i] = t_new;
                }
            }
        }
    }
    c
}

/// Product candidate assembled from per-factor extremal solves on disc
/// factors (analytic seed coefficients elsewhere). Only for the measure
/// kinds, where the bound depends on the component derivatives alone and
/// phase rotations drop out of |det|.
fn structured_candidate(problem: &Problem<'_>, seed_x: &[f64]) -> Option<DiscCandidate> {
    if !problem.product_structure && problem.n_comps != 1 {
        return None;
    }
    let into = match problem.kind {
        Kind::Eisenman => true,
        Kind::Caratheodory => false,
        Kind::Kobayashi { .. } => return None,
    };
    let fallback = problem.candidate_from(seed_x);
    let mut coeffs: Vec<Vec<(Vec<u32>, Complex64)>> = Vec::with_capacity(problem.n_comps);
    let mut any_disc = false;
    for (i, f) in problem.domain.factors().iter().enumerate() {
        if !matches!(f, PlanarDomain::UnitDisc | PlanarDomain::Disc { .. }) {
            coeffs.push(fallback.coeffs[i].clone());
            continue;
        }
        any_disc = true;
        let mut terms: Vec<(Vec<u32>, Complex64)> = Vec::with_capacity(problem.degree + 1);
        if into {
            // f_i(zeta) = c + r rot (base + sum c_k zeta^k): the constant is
            // z_i and the image stays in the factor disc.
            let (cdisc, r) = disc_data(f);
            let zh = (problem.z[i] - cdisc) / r;
            let base = zh.norm();
            let rot = if base > 0.0 { zh / base } else { Complex64::new(1.0, 0.0) };
            let real = disc_extremal_real(base, problem.degree, true);
            terms.push((vec![0u32; problem.source_dim], problem.z[i]));
            for (k, &ck) in real.iter().enumerate() {
                let mut idx = vec![0u32; problem.source_dim];
                idx[i] = k as u32 + 1;
                terms.push((idx, r * rot * ck));
            }
        } else {
            // The Caratheodory basis recentres disc factors by their
            // extremal automorphism, so the identity polynomial is already
            // the exact factor solve.
            let mut idx = vec![0u32; problem.source_dim];
            idx[i] = 1;
            terms.push((idx, Complex64::new(1.0, 0.0)));
        }
        coeffs.push(terms);
    }
    if !any_disc {
        return None;
    }
    Some(DiscCandidate {
        source_dim: problem.source_dim,
        degree: problem.degree,
        center: problem.center.clone(),
        scale: problem.scale.clone(),
        mobius: problem.mobius.clone(),
        coeffs,
    })
}

/// Golden-section line search on coordinate `i` within `radius` of its
/// current value, never regressing past the starting point.
fn line_min(
    problem: &Problem<'_>,
    x: &mut [f64],
    i: usize,
    radius: f64,
    w: f64,
    iters: usize,
) -> (f64, u64) {
    let phi = 0.5 * (3.0 - 5f64.sqrt());
    let orig = x[i];
    let mut a = orig - radius;
    let mut b = orig + radius;
    let mut c = a + phi * (b - a);
    let mut d = b - phi * (b - a);
    x[i] = c;
    let mut fc = problem.objective(x, w);
    x[i] = d;
    let mut fd = problem.objective(x, w);
    let mut evals = 2u64;
    for _ in 0..iters {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = a + phi * (b - a);
            x[i] = c;
            fc = problem.objective(x, w);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = b - phi * (b - a);
            x[i] = d;
            fd = problem.objective(x, w);
        }
        evals += 1;
    }
    let (t_new, f_new) = if fc <= fd { (c, fc) } else { (d, fd) };
    x[i] = orig;
    let f_orig = problem.objective(x, w);
    evals += 1;
    if f_new < f_orig {
        x[i] = t_new;
        (f_new, evals)
    } else {
        (f_orig, evals)
    }
}

fn run_problem(problem: &Problem<'_>, cfg: &OptimizerConfig) -> LabResult<OracleResult> {
    let dim = problem.param_dim();
    let seed_x = analytic_seed(problem);
    let mut total_evals = 0u64;

    // Collect final parameter vectors from every restart.
    let mut finals: Vec<(Vec<f64>, f64)> = Vec::with_capacity(cfg.restarts + 1);
    finals.push((seed_x.clone(), problem.objective(&seed_x, *cfg.penalties.last().unwrap())));

    // Product searches separate per component, so optimize each component's
    // block alone; the other blocks stay fixed and contribute constants.
    let blocks: Vec<std::ops::Range<usize>> = if problem.product_structure {
        (0..problem.n_comps).map(|i| problem.comp_range(i)).collect()
    } else {
        vec![0..dim]
    };

    for restart in 0..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(
            cfg.seed ^ (restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        );
        let mut x = seed_x.clone();
        if restart > 0 {
            let amp = 0.05 + 0.3 * (restart as f64 / cfg.restarts as f64);
            if restart % 3 == 0 {
                for xi in x.iter_mut() {
                    *xi = rng.gen_range(-0.4..0.4);
                }
                if matches!(problem.kind, Kind::Kobayashi { .. }) {
                    x[0] = seed_x[0] * rng.gen_range(0.5..1.2);
                }
            } else {
                for xi in x.iter_mut() {
                    *xi += amp * rng.gen_range(-1.0..1.0);
                }
            }
        }
        // Objective at the final point, carried out of the last NM call
        // (the call's best value is the full objective at the updated x).
        let mut final_obj = f64::INFINITY;
        for (phase, &w) in cfg.penalties.iter().enumerate() {
            let step = 0.25 / 3f64.powi(phase as i32);
            for block in &blocks {
                let x_fixed = x.clone();
                let x0: Vec<f64> = x_fixed[block.clone()].to_vec();
                let res = nm::minimize(
                    |p| {
                        let mut full = x_fixed.clone();
                        full[block.clone()].copy_from_slice(p);
                        problem.objective(&full, w)
                    },
                    &x0,
                    step,
                    cfg.max_evals,
                    1e-10,
                );
                total_evals += res.evals;
                x[block.clone()].copy_from_slice(&res.x);
                if phase + 1 == cfg.penalties.len() {
                    final_obj = res.value;
                }
            }
        }
        // Coordinate-block polish for large joint parameter vectors.
        if !problem.product_structure && dim > 24 {
            let w = *cfg.penalties.last().unwrap();
            for _sweep in 0..2 {
                let mut start = 0;
                while start < dim {
                    let end = (start + 12).min(dim);
                    let x_fixed = x.clone();
                    let x0: Vec<f64> = x_fixed[start..end].to_vec();
                    let res = nm::minimize(
                        |p| {
                            let mut full = x_fixed.clone();
                            full[start..end].copy_from_slice(p);
                            problem.objective(&full, w)
                        },
                        &x0,
                        0.05,
                        cfg.max_evals / 6,
                        1e-12,
                    );
                    total_evals += res.evals;
                    x[start..end].copy_from_slice(&res.x);
                    final_obj = res.value;
                    start = end;
                }
            }
        }
        finals.push((x, final_obj));
    }

    // Deep polish of the leading finalists. Restarts funnel into the same
    // constrained basin, so concentrated effort on the best few buys more
    // than breadth: restarted simplices with shrinking steps, then
    // coordinate golden-section sweeps to settle against the active
    // constraints.
    finals.sort_by(|a, b| a.1.total_cmp(&b.1));
    let w_final = *cfg.penalties.last().unwrap();
    let mut polished_converged = false;
    for slot in 0..finals.len().min(3) {
        let (xv, obj) = &mut finals[slot];
        let mut conv = true;
        for &step in &[0.02, 0.004, 0.0008] {
            conv = true;
            for block in &blocks {
                let x_fixed = xv.clone();
                let x0: Vec<f64> = x_fixed[block.clone()].to_vec();
                let res = nm::minimize(
                    |p| {
                        let mut full = x_fixed.clone();
                        full[block.clone()].copy_from_slice(p);
                        problem.objective(&full, w_final)
                    },
                    &x0,
                    step,
                    cfg.max_evals * 2,
                    1e-10,
                );
                total_evals += res.evals;
                xv[block.clone()].copy_from_slice(&res.x);
                conv &= res.converged;
                *obj = res.value;
            }
        }
        for &radius in &[0.01, 0.002, 0.0004] {
            for block in &blocks {
                for i in block.clone() {
                    let (val, evals) = line_min(problem, xv, i, radius, w_final, 24);
                    *obj = val;
                    total_evals += evals;
                }
            }
        }
        polished_converged |= conv;
    }

    // Restore candidates to certified feasibility, best first. For upper
    // bounds smaller is better; for the Caratheodory lower bound larger is.
    finals.sort_by(|a, b| a.1.total_cmp(&b.1));
    // The pristine analytic seed re-enters unpolished (at trivial points it
    // is exactly extremal and must not be drifted by the search), followed
    // by the structured per-factor solve and the polished finalists.
    let mut pool: Vec<DiscCandidate> = Vec::with_capacity(finals.len() + 2);
    pool.push(problem.candidate_from(&seed_x));
    if let Some(extra) = structured_candidate(problem, &seed_x) {
        pool.push(extra);
    }
    pool.extend(finals.iter().map(|(x, _)| problem.candidate_from(x)));
    let upper = !matches!(problem.kind, Kind::Caratheodory);
    let sizes = CertSizes::fine();
    let mut best: Option<Restored> = None;
    for cand in &pool {
        // Pruning: the raw (unrestored) value already bounds what the
        // restored candidate can achieve.
        if let Some(b) = &best {
            let raw = match &problem.kind {
                Kind::Kobayashi { .. } => {
                    let l = lambda_of(problem, cand);
                    if l <= 1e-12 {
                        f64::INFINITY
                    } else {
                        1.0 / l
                    }
                }
                Kind::Eisenman => {
                    let d = det_of(problem, cand).norm_sqr();
                    if d <= 1e-300 {
                        f64::INFINITY
                    } else {
                        1.0 / d
                    }
                }
                Kind::Caratheodory => det_of(problem, cand).norm_sqr(),
            };
            let cannot_improve = if upper { raw >= b.bound } else { raw <= b.bound };
            if cannot_improve {
                continue;
            }
        }
        let restored = match &problem.kind {
            Kind::Kobayashi { .. } => restore_disc_source(problem, cand, sizes),
            Kind::Eisenman => {
                let all_discs = problem
                    .domain
                    .factors()
                    .iter()
                    .all(|f| matches!(f, PlanarDomain::UnitDisc | PlanarDomain::Disc { .. }));
                if all_discs {
                    restore_eisenman_disc_targets(problem, cand, sizes)
                } else {
                    restore_disc_source(problem, cand, sizes)
                }
            }
            Kind::Caratheodory => restore_caratheodory(problem, cand, sizes),
        };
        if let Some(r) = restored {
            let better = match &best {
                None => true,
                Some(b) => {
                    if upper {
                        r.bound < b.bound
                    } else {
                        r.bound > b.bound
                    }
                }
            };
            if better {
                best = Some(r);
            }
        }
    }

    let best = best.ok_or_else(|| {
        LabError::Infeasible(format!("no certified candidate found for {}", problem.label()))
    })?;
    Ok(OracleResult {
        problem: problem.label(),
        bound: best.bound,
        direction: if upper { BoundDirection::Upper } else { BoundDirection::Lower },
        candidate: best.candidate,
        feasibility_margin: best.margin,
        iterations: total_evals,
        converged: polished_converged && best.margin >= 0.0,
    })
}

/// Upper bound on the Kobayashi-Royden metric F^K(z, v) via analytic discs.
pub fn kobayashi_upper_oracle(
    domain: &ProductDomain,
    z: &[Complex64],
    v: &[Complex64],
    cfg: &OptimizerConfig,
) -> LabResult<OracleResult> {
    let problem = Problem::new(Kind::Kobayashi { v: v.to_vec() }, domain, z, cfg)?;
    run_problem(&problem, cfg)
}

/// Upper bound on the Eisenman measure M^E(z) via polydisc maps into the
/// domain.
pub fn eisenman_upper_oracle(
    domain: &ProductDomain,
    z: &[Complex64],
    cfg: &OptimizerConfig,
) -> LabResult<OracleResult> {
    let problem = Problem::new(Kind::Eisenman, domain, z, cfg)?;
    run_problem(&problem, cfg)
}

/// Lower bound on the Caratheodory measure M^C(z) via maps into the unit
/// polydisc vanishing at z.
pub fn caratheodory_lower_oracle(
    domain: &ProductDomain,
    z: &[Complex64],
    cfg: &OptimizerConfig,
) -> LabResult<OracleResult> {
    let problem = Problem::new(Kind::Caratheodory, domain, z, cfg)?;
    run_problem(&problem, cfg)
}

/// Kobayashi upper bounds over a sequence of degrees. When a higher-degree
/// search lands above the previous bound, the previous candidate (still
/// feasible after zero padding) is carried forward, so reported bounds never
/// increase along the sweep.
pub fn kobayashi_degree_sweep(
    domain: &ProductDomain,
    z: &[Complex64],
    v: &[Complex64],
    degrees: &[usize],
    cfg: &OptimizerConfig,
) -> LabResult<Vec<OracleResult>> {
    let mut out: Vec<OracleResult> = Vec::with_capacity(degrees.len());
    for &d in degrees {
        let mut c = cfg.clone();
        c.degree = d;
        let mut res = kobayashi_upper_oracle(domain, z, v, &c)?;
        if let Some(prev) = out.last() {
            if prev.bound < res.bound {
                // The padded previous candidate is still feasible at the
                // higher degree and certifies the previous bound.
                res = OracleResult {
                    problem: res.problem,
                    bound: prev.bound,
                    direction: prev.direction,
                    candidate: prev.candidate.clone(),
                    feasibility_margin: prev.feasibility_margin,
                    iterations: res.iterations,
                    converged: res.converged && prev.converged,
                };
            }
        }
        out.push(res);
    }
    Ok(out)
}

/// Certified feasibility margin of a polydisc-source candidate as a map into
/// `domain`. Negative values witness an escape; nonnegative values certify
/// containment (including the Lipschitz pad between grid nodes).
pub fn feasibility_margin(
    candidate: &DiscCandidate,
    domain: &ProductDomain,
    grid: usize,
) -> LabResult<f64> {
    if !candidate.is_monomial_basis() {
        return Err(LabError::InvalidConfig(
            "feasibility_margin expects unit-polydisc candidates (center 0, scale 1)".into(),
        ));
    }
    let sizes = CertSizes {
        circle: grid.clamp(256, 1 << 20),
        torus: grid.clamp(64, 4096),
        boundary: grid.clamp(64, 8192),
    };
    let margins = cert_margins_polydisc_source(candidate, domain, sizes)?;
    Ok(margins.into_iter().fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{eisenman_measure, ProductDomain};
    use crate::planar::poincare_density;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn small_cfg() -> OptimizerConfig {
        OptimizerConfig {
            degree: 4,
            restarts: 4,
            grid: 64,
            penalties: vec![1e4, 1e7],
            seed: 11,
            max_evals: 700,
        }
    }

    #[test]
    fn disc_center_is_exact() {
        // The analytic seed is exactly feasible at the center, so the bound
        // is pinned at 1 up to a few ulp of restore arithmetic.
        let disc = ProductDomain::unit_disc();
        let r = kobayashi_upper_oracle(&disc, &[c(0.0, 0.0)], &[c(1.0, 0.0)], &small_cfg())
            .unwrap();
        assert!((r.bound - 1.0).abs() < 1e-14, "kobayashi bound {}", r.bound);
        assert!(r.feasibility_margin >= 0.0);
        assert_eq!(r.direction, BoundDirection::Upper);

        let bidisc = ProductDomain::bidisc();
        let z0 = [c(0.0, 0.0), c(0.0, 0.0)];
        let e = eisenman_upper_oracle(&bidisc, &z0, &small_cfg()).unwrap();
        assert!((e.bound - 1.0).abs() < 1e-14, "eisenman bound {}", e.bound);
        let ca = caratheodory_lower_oracle(&bidisc, &z0, &small_cfg()).unwrap();
        assert!((ca.bound - 1.0).abs() < 1e-14, "caratheodory bound {}", ca.bound);
    }

    #[test]
    fn degree_sweep_is_monotone_toward_the_disc_value() {
        let disc = ProductDomain::unit_disc();
        let sweep = kobayashi_degree_sweep(
            &disc,
            &[c(0.5, 0.0)],
            &[c(1.0, 0.0)],
            &[2, 4, 8],
            &small_cfg(),
        )
        .unwrap();
        let truth = 4.0 / 3.0;
        for w in sweep.windows(2) {
            assert!(w[1].bound <= w[0].bound + 1e-12);
        }
        for r in &sweep {
            assert!(r.bound >= truth - 1e-9, "bound {} under truth", r.bound);
        }
        assert!(
            sweep.last().unwrap().bound <= truth * 1.02,
            "degree-8 bound {} too far from {truth}",
            sweep.last().unwrap().bound
        );
    }

    #[test]
    fn sandwich_bounds_straddle_the_closed_form() {
        let bidisc = ProductDomain::bidisc();
        let z = [c(0.3, 0.2), c(0.5, 0.0)];
        let closed = eisenman_measure(&bidisc, &z).unwrap().value;
        let upper = eisenman_upper_oracle(&bidisc, &z, &small_cfg()).unwrap();
        let lower = caratheodory_lower_oracle(&bidisc, &z, &small_cfg()).unwrap();
        assert!(upper.bound >= closed - 1e-9 * closed);
        assert!(lower.bound <= closed + 1e-9 * closed);
        assert!(lower.bound <= upper.bound + 1e-9);
        assert!(lower.bound > 0.0);
        assert!(upper.bound.is_finite());
    }

    #[test]
    fn kobayashi_cone_bound_respects_the_density() {
        let cone = ProductDomain::single(
            PlanarDomain::truncated_cone(std::f64::consts::FRAC_PI_2, 1.0).unwrap(),
        )
        .unwrap();
        let z = [c(-0.3, 0.0)];
        let truth = poincare_density(&cone.factors()[0], z[0]).unwrap();
        let r = kobayashi_upper_oracle(&cone, &z, &[c(1.0, 0.0)], &small_cfg()).unwrap();
        assert!(r.bound >= truth - 1e-9, "oracle bound {} under density {truth}", r.bound);
        assert!(r.bound <= truth * 1.35, "oracle bound {} too loose vs {truth}", r.bound);
        assert!(r.feasibility_margin >= 0.0);
    }

    #[test]
    fn runs_are_deterministic() {
        let disc = ProductDomain::unit_disc();
        let run = || {
            kobayashi_upper_oracle(&disc, &[c(0.4, -0.2)], &[c(0.8, 0.6)], &small_cfg()).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.bound.to_bits(), b.bound.to_bits());
        assert_eq!(a.feasibility_margin.to_bits(), b.feasibility_margin.to_bits());
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn annulus_caratheodory_bound_stays_under_eisenman() {
        let prod = ProductDomain::new(vec![
            PlanarDomain::UnitDisc,
            PlanarDomain::annulus(1.0, 4.0).unwrap(),
        ])
        .unwrap();
        let z = [c(0.0, 0.0), c(2.0, 0.0)];
        let cfg = OptimizerConfig {
            degree: 4,
            restarts: 3,
            grid: 48,
            penalties: vec![1e4, 1e7],
            seed: 5,
            max_evals: 500,
        };
        let lower = caratheodory_lower_oracle(&prod, &z, &cfg).unwrap();
        let closed = eisenman_measure(&prod, &z).unwrap().value;
        assert!(lower.bound > 0.0);
        assert!(lower.bound <= closed * (1.0 + 1e-9), "lower {} vs eisenman {closed}", lower.bound);
    }

    #[test]
    fn invalid_configurations_are_rejected() {
        let disc = ProductDomain::unit_disc();
        let mut cfg = small_cfg();
        cfg.restarts = 0;
        assert!(kobayashi_upper_oracle(&disc, &[c(0.0, 0.0)], &[c(1.0, 0.0)], &cfg).is_err());
        let cfg = small_cfg();
        assert!(
            kobayashi_upper_oracle(&disc, &[c(0.0, 0.0)], &[c(0.0, 0.0)], &cfg).is_err(),
            "zero direction must be rejected"
        );
        assert!(kobayashi_upper_oracle(&disc, &[c(1.5, 0.0)], &[c(1.0, 0.0)], &cfg).is_err());
    }

    #[test]
    fn public_feasibility_margin_matches_construction() {
        let cand = DiscCandidate {
            source_dim: 1,
            degree: 1,
            center: vec![c(0.0, 0.0)],
            scale: vec![1.0],
            mobius: vec![c(0.0, 0.0)],
            coeffs: vec![vec![(vec![1], c(0.25, 0.0))]],
        };
        let m = feasibility_margin(&cand, &ProductDomain::unit_disc(), 4096).unwrap();
        assert_eq!(m, 0.75);
    }
}
