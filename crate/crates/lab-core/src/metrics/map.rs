//! Holomorphic maps between products of planar domains.
//!
//! Components are either polynomials in the source coordinates or disc
//! automorphisms acting on a single coordinate. Feasibility (image contained
//! in the target) is never assumed: it is measured on sample grids and
//! reported as a margin.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{LabError, LabResult};
use crate::metrics::{ProductDomain, Tangent};
use crate::planar::PlanarDomain;

/// Polynomial in `nvars` complex variables, stored as (multi-index,
/// coefficient) terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    nvars: usize,
    terms: Vec<(Vec<u32>, Complex64)>,
}

impl Poly {
    pub fn new(nvars: usize, terms: Vec<(Vec<u32>, Complex64)>) -> LabResult<Self> {
        for (idx, _) in &terms {
            if idx.len() != nvars {
                return Err(LabError::Dimension(format!(
                    "multi-index length {} does not match {nvars} variables",
                    idx.len()
                )));
            }
        }
        Ok(Poly { nvars, terms })
    }

    pub fn constant(nvars: usize, value: Complex64) -> Self {
        Poly { nvars, terms: vec![(vec![0; nvars], value)] }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[(Vec<u32>, Complex64)] {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(idx, _)| idx.iter().sum())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        debug_assert_eq!(z.len(), self.nvars);
        let mut acc = Complex64::new(0.0, 0.0);
        for (idx, coeff) in &self.terms {
            let mut term = *coeff;
            for (var, &power) in idx.iter().enumerate() {
                for _ in 0..power {
                    term *= z[var];
                }
            }
            acc += term;
        }
        acc
    }

    /// Partial derivative with respect to variable `var`.
    pub fn partial(&self, var: usize) -> Poly {
        let terms = self
            .terms
            .iter()
            .filter(|(idx, _)| idx[var] > 0)
            .map(|(idx, coeff)| {
                let mut d = idx.clone();
                d[var] -= 1;
                (d, coeff * idx[var] as f64)
            })
            .collect();
        Poly { nvars: self.nvars, terms }
    }
}

/// One output component of a holomorphic map.
#[derive(Debug, Clone, PartialEq)]
pub enum MapComponent {
    Poly(Poly),
    /// phase * (z_k - a) / (1 - conj(a) z_k) acting on source coordinate k.
    Moebius { coord: usize, a: Complex64, phase: Complex64 },
}

impl MapComponent {
    fn eval(&self, z: &[Complex64]) -> Complex64 {
        match self {
            MapComponent::Poly(p) => p.eval(z),
            MapComponent::Moebius { coord, a, phase } => {
                let zk = z[*coord];
                phase * (zk - a) / (Complex64::new(1.0, 0.0) - a.conj() * zk)
            }
        }
    }

    fn partial(&self, z: &[Complex64], var: usize) -> Complex64 {
        match self {
            MapComponent::Poly(p) => p.partial(var).eval(z),
            MapComponent::Moebius { coord, a, phase } => {
                if var != *coord {
                    return Complex64::new(0.0, 0.0);
                }
                let den = Complex64::new(1.0, 0.0) - a.conj() * z[*coord];
                phase * (1.0 - a.norm_sqr()) / (den * den)
            }
        }
    }
}

/// Holomorphic map between equidimensional products of planar domains.
#[derive(Debug, Clone)]
pub struct HoloMap {
    source: ProductDomain,
    target: ProductDomain,
    components: Vec<MapComponent>,
}

impl HoloMap {
    pub fn new(
        source: ProductDomain,
        target: ProductDomain,
        components: Vec<MapComponent>,
    ) -> LabResult<Self> {
        if source.dim() != target.dim() {
            return Err(LabError::Dimension(format!(
                "source dimension {} differs from target dimension {}",
                source.dim(),
                target.dim()
            )));
        }
        if components.len() != target.dim() {
            return Err(LabError::Dimension(format!(
                "{} components for a {}-dimensional target",
                components.len(),
                target.dim()
            )));
        }
        for comp in &components {
            match comp {
                MapComponent::Poly(p) => {
                    if p.nvars() != source.dim() {
                        return Err(LabError::Dimension(format!(
                            "component polynomial has {} variables, source has {}",
                            p.nvars(),
                            source.dim()
                        )));
                    }
                }
                MapComponent::Moebius { coord, a, phase } => {
                    if *coord >= source.dim() {
                        return Err(LabError::Dimension(format!(
                            "coordinate {coord} out of range for {}-dimensional source",
                            source.dim()
                        )));
                    }
                    if a.norm() >= 1.0 {
                        return Err(LabError::InvalidConfig(
                            "automorphism center must lie in the open unit disc".into(),
                        ));
                    }
                    if (phase.norm() - 1.0).abs() > 1e-9 {
                        return Err(LabError::InvalidConfig(
                            "automorphism phase must be unimodular".into(),
                        ));
                    }
                }
            }
        }
        Ok(HoloMap { source, target, components })
    }

    pub fn source(&self) -> &ProductDomain {
        &self.source
    }

    pub fn target(&self) -> &ProductDomain {
        &self.target
    }

    pub fn components(&self) -> &[MapComponent] {
        &self.components
    }

    pub fn eval(&self, z: &[Complex64]) -> LabResult<Vec<Complex64>> {
        let m = self.source.contains(z)?;
        if !m.inside {
            return Err(LabError::OutsideDomain(format!(
                "evaluation point is outside the source (margin {})",
                m.margin
            )));
        }
        Ok(self.components.iter().map(|c| c.eval(z)).collect())
    }

    /// Complex Jacobian matrix J[i][j] = d f_i / d z_j.
    pub fn jacobian(&self, z: &[Complex64]) -> LabResult<Vec<Vec<Complex64>>> {
        let m = self.source.contains(z)?;
        if !m.inside {
            return Err(LabError::OutsideDomain(format!(
                "Jacobian point is outside the source (margin {})",
                m.margin
            )));
        }
        let n = self.source.dim();
        Ok(self
            .components
            .iter()
            .map(|c| (0..n).map(|j| c.partial(z, j)).collect())
            .collect())
    }

    pub fn det_jacobian(&self, z: &[Complex64]) -> LabResult<Complex64> {
        let j = self.jacobian(z)?;
        Ok(match j.len() {
            1 => j[0][0],
            2 => j[0][0] * j[1][1] - j[0][1] * j[1][0],
            _ => unreachable!("products carry at most two factors"),
        })
    }

    /// Pushforward (z, v) -> (f(z), J(z) v). The image point is reported as
    /// given; containment in the target is the caller's check.
    pub fn pushforward(&self, t: &Tangent) -> LabResult<Tangent> {
        let image = self.eval(&t.point)?;
        let j = self.jacobian(&t.point)?;
        let vector = j
            .iter()
            .map(|row| row.iter().zip(&t.vector).map(|(a, b)| a * b).sum())
            .collect();
        Tangent::new(image, vector)
    }

    /// Minimum target margin over the images of the supplied sample points.
    /// Negative values witness infeasibility.
    pub fn feasibility_margin(&self, samples: &[Vec<Complex64>]) -> LabResult<f64> {
        let mut worst = f64::INFINITY;
        for z in samples {
            let image = self.eval(z)?;
            worst = worst.min(self.target.contains(&image)?.margin);
        }
        Ok(worst)
    }

    /// Feasibility margin over a deterministic grid: per factor, `rings`
    /// concentric copies of `resolution` boundary points pulled inward to
    /// radii factors 0.999, 0.99, 0.9, plus the factor center when bounded.
    pub fn grid_feasibility_margin(&self, resolution: usize) -> LabResult<f64> {
        let mut per_factor: Vec<Vec<Complex64>> = Vec::new();
        for f in self.source.factors() {
            let mut pts = Vec::new();
            for shrink in [0.999, 0.99, 0.9] {
                pts.extend(shrunk_boundary(f, resolution, shrink)?);
            }
            per_factor.push(pts);
        }
        let samples: Vec<Vec<Complex64>> = match per_factor.len() {
            1 => per_factor[0].iter().map(|&z| vec![z]).collect(),
            2 => {
                // Pair the grids without forming the full product: matched
                // indices plus one offset diagonal keep growth linear.
                let (a, b) = (&per_factor[0], &per_factor[1]);
                let n = a.len().max(b.len());
                let mut out = Vec::with_capacity(2 * n);
                for i in 0..n {
                    out.push(vec![a[i % a.len()], b[i % b.len()]]);
                    out.push(vec![a[i % a.len()], b[(i + b.len() / 3) % b.len()]]);
                }
                out
            }
            _ => unreachable!(),
        };
        self.feasibility_margin(&samples)
    }

    /// Exact inverse, available when every component is a disc automorphism
    /// of a distinct coordinate.
    pub fn inverse(&self) -> Option<HoloMap> {
        let n = self.source.dim();
        let mut components: Vec<Option<MapComponent>> = vec![None; n];
        for (i, comp) in self.components.iter().enumerate() {
            match comp {
                MapComponent::Moebius { coord, a, phase } => {
                    if components[*coord].is_some() {
                        return None;
                    }
                    // w = phase (z - a)/(1 - conj(a) z) inverts to
                    // z = conj(phase) (w - a')/(1 - conj(a') w), a' = -phase a.
                    // Output i fixed source coordinate `coord`, so the
                    // inverse component for `coord` reads input coordinate i.
                    components[*coord] = Some(MapComponent::Moebius {
                        coord: i,
                        a: -phase * a,
                        phase: phase.conj(),
                    });
                }
                MapComponent::Poly(_) => return None,
            }
        }
        let components: Option<Vec<_>> = components.into_iter().collect();
        HoloMap::new(self.target.clone(), self.source.clone(), components?).ok()
    }
}

fn shrunk_boundary(
    f: &PlanarDomain,
    resolution: usize,
    shrink: f64,
) -> LabResult<Vec<Complex64>> {
    match f {
        PlanarDomain::UpperHalfPlane => {
            // No boundary grid for the unbounded factor; sample a horocycle.
            Ok((0..resolution)
                .map(|k| {
                    let x = -3.0 + 6.0 * (k as f64 + 0.5) / resolution as f64;
                    Complex64::new(x, (1.0 - shrink) * 10.0 + 0.05)
                })
                .collect())
        }
        _ => {
            let anchor = match f {
                PlanarDomain::UnitDisc => Complex64::new(0.0, 0.0),
                PlanarDomain::Disc { center, .. } => *center,
                PlanarDomain::TruncatedCone { theta, eps } => {
                    Complex64::from_polar(0.5 * eps, std::f64::consts::PI)
                        * Complex64::new((0.5 * theta).cos().max(0.2), 0.0)
                }
                PlanarDomain::Sector { .. } => Complex64::new(-1.0, 0.0),
                PlanarDomain::Annulus { r_inner, r_outer } => {
                    Complex64::new((r_inner * r_outer).sqrt(), 0.0)
                }
                PlanarDomain::UpperHalfPlane => unreachable!(),
            };
            let anchor = if f.contains(anchor).inside {
                anchor
            } else {
                return Err(LabError::InvalidDomain("no interior anchor for grid".into()));
            };
            Ok(f.boundary_points(resolution)?
                .into_iter()
                .map(|b| anchor + (b - anchor) * shrink)
                .filter(|z| f.contains(*z).inside)
                .collect())
        }
    }
}

/// Disc automorphism z -> e^{i phase_angle} (z - a)/(1 - conj(a) z).
pub fn disc_automorphism(a: Complex64, phase_angle: f64) -> LabResult<HoloMap> {
    HoloMap::new(
        ProductDomain::unit_disc(),
        ProductDomain::unit_disc(),
        vec![MapComponent::Moebius {
            coord: 0,
            a,
            phase: Complex64::from_polar(1.0, phase_angle),
        }],
    )
}

/// Coordinatewise bidisc automorphism with centers a1, a2 and unimodular
/// phases. Phases are renormalized to unit modulus.
pub fn bidisc_automorphism(
    a1: Complex64,
    a2: Complex64,
    phases: [Complex64; 2],
) -> LabResult<HoloMap> {
    let norm = |p: Complex64| -> LabResult<Complex64> {
        let n = p.norm();
        if n < 1e-12 {
            return Err(LabError::InvalidConfig("zero phase".into()));
        }
        Ok(p / n)
    };
    HoloMap::new(
        ProductDomain::bidisc(),
        ProductDomain::bidisc(),
        vec![
            MapComponent::Moebius { coord: 0, a: a1, phase: norm(phases[0])? },
            MapComponent::Moebius { coord: 1, a: a2, phase: norm(phases[1])? },
        ],
    )
}

/// Random polynomial with Wiener norm (sum of coefficient moduli) equal to
/// `mass`, guaranteeing the image of the closed polydisc stays in the disc
/// of radius `mass`.
pub(crate) fn random_wiener_poly<R: Rng>(
    rng: &mut R,
    nvars: usize,
    max_degree: u32,
    mass: f64,
) -> Poly {
    let mut indices = Vec::new();
    push_indices(nvars, max_degree, &mut vec![0; nvars], 0, &mut indices);
    let mut coeffs: Vec<Complex64> = indices
        .iter()
        .map(|_| {
            let re = rng.gen_range(-1.0..1.0);
            let im = rng.gen_range(-1.0..1.0);
            Complex64::new(re, im)
        })
        .collect();
    let total: f64 = coeffs.iter().map(|c| c.norm()).sum();
    if total > 0.0 {
        for c in &mut coeffs {
            *c *= mass / total;
        }
    }
    Poly { nvars, terms: indices.into_iter().zip(coeffs).collect() }
}

fn push_indices(
    nvars: usize,
    max_degree: u32,
    current: &mut Vec<u32>,
    var: usize,
    out: &mut Vec<Vec<u32>>,
) {
    if var == nvars {
        out.push(current.clone());
        return;
    }
    let used: u32 = current[..var].iter().sum();
    for p in 0..=(max_degree - used) {
        current[var] = p;
        push_indices(nvars, max_degree, current, var + 1, out);
    }
    current[var] = 0;
}
