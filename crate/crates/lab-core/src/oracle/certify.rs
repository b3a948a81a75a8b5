//! Sound feasibility certificates for polynomial candidates.
//!
//! Grid checks alone can miss excursions between nodes, so every certificate
//! combines a grid scan with an explicit Lipschitz pad derived from
//! coefficient bounds, or a Wiener-style coefficient-mass bound when that is
//! sharper. Certificates only err on the safe side: a nonnegative certified
//! margin implies genuine containment.
//!
//! Containment arguments by source dimension:
//! - one variable: a certified boundary margin plus simple connectivity of
//!   the target factor (winding argument) contains the whole image; annulus
//!   targets additionally require winding number zero around the hole.
//! - two variables, component reading a single variable: the component is a
//!   one-variable map in disguise and gets the circle certificate in that
//!   variable.
//! - two variables, mixed component: margins are evaluated through globally
//!   concave minorants of the factor margin, which are superharmonic along
//!   each variable, so the minimum over the closed bidisc is attained on the
//!   torus. Factors without a concave minorant (wide cones, annuli) are
//!   rejected on this path.

use num_complex::Complex64;

use crate::error::{LabError, LabResult};
use crate::oracle::DiscCandidate;
use crate::planar::PlanarDomain;

/// Grid sizes used by certificates.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CertSizes {
    /// Points on the source circle for one-variable candidates.
    pub circle: usize,
    /// Points per variable on the source torus for two-variable candidates.
    pub torus: usize,
    /// Points per factor boundary for sup certificates over product domains.
    pub boundary: usize,
}

impl CertSizes {
    pub fn fine() -> Self {
        CertSizes { circle: 262144, torus: 1024, boundary: 2048 }
    }
}

/// Globally concave 1-Lipschitz minorant of the factor margin, positive
/// exactly on the factor. None when the factor admits no such minorant here.
pub(crate) fn concave_margin(factor: &PlanarDomain, w: Complex64) -> Option<f64> {
    match factor {
        PlanarDomain::UnitDisc => Some(1.0 - w.norm()),
        PlanarDomain::Disc { center, radius } => Some(radius - (w - center).norm()),
        PlanarDomain::UpperHalfPlane => Some(w.im),
        PlanarDomain::Sector { theta } if *theta <= std::f64::consts::FRAC_PI_2 + 1e-12 => {
            Some(edge_margin(w, *theta))
        }
        PlanarDomain::TruncatedCone { theta, eps }
            if *theta <= std::f64::consts::FRAC_PI_2 + 1e-12 =>
        {
            Some((eps - w.norm()).min(edge_margin(w, *theta)))
        }
        _ => None,
    }
}

/// min of the two supporting half-plane functionals of the convex wedge
/// { |arg(-w)| < theta }, positive inside for theta <= pi/2.
fn edge_margin(w: Complex64, theta: f64) -> f64 {
    let plus = -(w * Complex64::from_polar(1.0, -(std::f64::consts::PI + theta))).im;
    let minus = (w * Complex64::from_polar(1.0, -(std::f64::consts::PI - theta))).im;
    plus.min(minus)
}

/// Certified per-component margins for a candidate map from the unit
/// polydisc into `target`. A nonnegative entry certifies that the component
/// image lies in the closed factor; by the max principle the open image then
/// lies in the open factor for nonconstant components.
pub(crate) fn cert_margins_polydisc_source(
    cand: &DiscCandidate,
    target: &crate::metrics::ProductDomain,
    sizes: CertSizes,
) -> LabResult<Vec<f64>> {
    if cand.source_dim != target.dim() {
        return Err(LabError::Dimension(format!(
            "candidate has {} source variables, target has {} factors",
            cand.source_dim,
            target.dim()
        )));
    }
    if !cand.is_monomial_basis() {
        return Err(LabError::InvalidConfig(
            "polydisc-source certificates need center-0 scale-1 candidates".into(),
        ));
    }
    let mut margins = Vec::with_capacity(cand.coeffs.len());
    for (comp, factor) in (0..cand.coeffs.len()).zip(target.factors()) {
        let wiener = wiener_margin(cand, comp, factor);
        if wiener >= 0.0 {
            margins.push(wiener);
            continue;
        }
        let grid = match (cand.source_dim, cand.single_variable(comp)) {
            (1, _) => circle_margin(cand, comp, factor, sizes.circle, 0)?,
            (2, Some(var)) => circle_margin(cand, comp, factor, sizes.circle, var)?,
            (2, None) => torus_margin(cand, comp, factor, sizes.torus)?,
            _ => unreachable!("sources have at most two variables"),
        };
        // NEG_INFINITY is the winding veto, not a margin estimate; it must
        // not be floored by the coefficient-mass bound.
        if grid == f64::NEG_INFINITY {
            margins.push(grid);
        } else {
            margins.push(grid.max(wiener));
        }
    }
    Ok(margins)
}

/// Coefficient-mass margin: every image point is within the coefficient mass
/// of the constant term, and the factor margin is 1-Lipschitz.
fn wiener_margin(cand: &DiscCandidate, comp: usize, factor: &PlanarDomain) -> f64 {
    let mut center_value = Complex64::new(0.0, 0.0);
    let mut mass = 0.0;
    for (idx, c) in &cand.coeffs[comp] {
        if idx.iter().all(|&p| p == 0) {
            center_value += c;
        } else {
            mass += c.norm();
        }
    }
    factor.margin(center_value) - mass
}

fn circle_margin(
    cand: &DiscCandidate,
    comp: usize,
    factor: &PlanarDomain,
    n: usize,
    var: usize,
) -> LabResult<f64> {
    let lip = cand.partial_bound(comp, var);
    let pad = std::f64::consts::PI / n as f64 * lip;
    let mut min_margin = f64::INFINITY;
    let mut images = Vec::new();
    let needs_winding = matches!(factor, PlanarDomain::Annulus { .. });
    // The component only reads `var`; other slots stay at the disc center.
    let mut z = vec![Complex64::new(0.0, 0.0); cand.source_dim];
    for j in 0..n {
        let theta = std::f64::consts::TAU * j as f64 / n as f64;
        z[var] = Complex64::from_polar(1.0, theta);
        let w = cand.eval_component(comp, &z);
        min_margin = min_margin.min(factor.margin(w));
        if needs_winding {
            images.push(w);
        }
    }
    if needs_winding {
        // Zero-free check: winding number 0 around the hole. Validity needs
        // inter-node motion small against the modulus.
        let min_mod = images.iter().map(|w| w.norm()).fold(f64::INFINITY, f64::min);
        let step = std::f64::consts::TAU / n as f64 * lip;
        if step >= 0.5 * min_mod {
            return Ok(f64::NEG_INFINITY);
        }
        match winding_number(&images) {
            Some(0) => {}
            _ => return Ok(f64::NEG_INFINITY),
        }
    }
    Ok(min_margin - pad)
}

fn torus_margin(
    cand: &DiscCandidate,
    comp: usize,
    factor: &PlanarDomain,
    n: usize,
) -> LabResult<f64> {
    if concave_margin(factor, Complex64::new(0.0, 0.0)).is_none() {
        return Err(LabError::InvalidConfig(format!(
            "no two-variable certificate for factor {factor}: wide cones and \
             annuli are not supported as targets of polydisc candidates"
        )));
    }
    let pad: f64 = (0..2)
        .map(|v| std::f64::consts::PI / n as f64 * cand.partial_bound(comp, v))
        .sum();
    let mut min_margin = f64::INFINITY;
    for j in 0..n {
        let t1 = std::f64::consts::TAU * j as f64 / n as f64;
        let z1 = Complex64::from_polar(1.0, t1);
        for k in 0..n {
            let t2 = std::f64::consts::TAU * k as f64 / n as f64;
            let z2 = Complex64::from_polar(1.0, t2);
            let w = cand.eval_component(comp, &[z1, z2]);
            let m = concave_margin(factor, w).expect("checked above");
            min_margin = min_margin.min(m);
        }
    }
    Ok(min_margin - pad)
}

/// Certified per-component sup of |g_comp| over the closure of `source`.
/// Uses the distinguished boundary (iterated max principle) with exact
/// arclength spacing pads, against the Wiener mass bound.
pub(crate) fn cert_sups_boundary_product(
    cand: &DiscCandidate,
    source: &crate::metrics::ProductDomain,
    sizes: CertSizes,
) -> LabResult<Vec<f64>> {
    let factors = source.factors();
    let mut fine_grids: Vec<Option<(Vec<Complex64>, f64)>> = vec![None; factors.len()];
    let mut coarse_grids: Vec<Option<(Vec<Complex64>, f64)>> = vec![None; factors.len()];
    let mut sups = Vec::with_capacity(cand.coeffs.len());
    for comp in 0..cand.coeffs.len() {
        let wiener: f64 = cand.coeffs[comp].iter().map(|(_, c)| c.norm()).sum();
        let single = match cand.source_dim {
            1 => Some(0),
            _ => cand.single_variable(comp),
        };
        let bounded = match single {
            Some(var) => {
                // One-variable component: its sup over the product closure
                // is a sup over its own factor alone, so a fine grid on that
                // factor boundary applies.
                if fine_grids[var].is_none() {
                    fine_grids[var] = Some(factor_boundary(&factors[var], sizes.circle)?);
                }
                let (pts, half) = fine_grids[var].as_ref().unwrap();
                let mut z = vec![Complex64::new(0.0, 0.0); cand.source_dim];
                let mut grid_sup = 0.0f64;
                for &b in pts {
                    z[var] = b;
                    grid_sup = grid_sup.max(cand.eval_component(comp, &z).norm());
                }
                grid_sup + half * cand.partial_bound(comp, var)
            }
            None => {
                for v in 0..factors.len() {
                    if coarse_grids[v].is_none() {
                        coarse_grids[v] = Some(factor_boundary(&factors[v], sizes.boundary)?);
                    }
                }
                let (p0, h0) = coarse_grids[0].as_ref().unwrap();
                let (p1, h1) = coarse_grids[1].as_ref().unwrap();
                let pad = h0 * cand.partial_bound(comp, 0) + h1 * cand.partial_bound(comp, 1);
                let mut grid_sup = 0.0f64;
                for &b1 in p0 {
                    for &b2 in p1 {
                        grid_sup = grid_sup.max(cand.eval_component(comp, &[b1, b2]).norm());
                    }
                }
                grid_sup + pad
            }
        };
        sups.push(wiener.min(bounded));
    }
    Ok(sups)
}

/// Boundary sample points of a bounded factor and the maximum half-spacing
/// in arclength between consecutive samples on their boundary piece.
pub(crate) fn factor_boundary(
    factor: &PlanarDomain,
    n: usize,
) -> LabResult<(Vec<Complex64>, f64)> {
    let n = n.max(16);
    match factor {
        PlanarDomain::UnitDisc => Ok(circle_points(Complex64::new(0.0, 0.0), 1.0, n)),
        PlanarDomain::Disc { center, radius } => Ok(circle_points(*center, *radius, n)),
        PlanarDomain::Annulus { r_inner, r_outer } => {
            let origin = Complex64::new(0.0, 0.0);
            let (mut pts, h1) = circle_points(origin, *r_inner, n / 2);
            let (outer, h2) = circle_points(origin, *r_outer, n - n / 2);
            pts.extend(outer);
            Ok((pts, h1.max(h2)))
        }
        PlanarDomain::TruncatedCone { theta, eps } => {
            // Boundary: arc of length 2 theta eps plus two radial edges of
            // length eps each.
            let arc_len = 2.0 * theta * eps;
            let total = arc_len + 2.0 * eps;
            let n_arc = ((n as f64 * arc_len / total).ceil() as usize).max(8);
            let n_edge = ((n as f64 * eps / total).ceil() as usize).max(8);
            let mut pts = Vec::with_capacity(n_arc + 2 * n_edge);
            let mut half = 0.0f64;
            for j in 0..n_arc {
                let phi = -theta + 2.0 * theta * (j as f64 + 0.5) / n_arc as f64;
                pts.push(Complex64::from_polar(*eps, std::f64::consts::PI + phi));
            }
            half = half.max(arc_len / n_arc as f64 / 2.0);
            for sign in [-1.0, 1.0] {
                let dir = Complex64::from_polar(1.0, std::f64::consts::PI + sign * theta);
                for j in 0..n_edge {
                    let r = eps * (j as f64 + 0.5) / n_edge as f64;
                    pts.push(dir * r);
                }
                half = half.max(eps / n_edge as f64 / 2.0);
            }
            Ok((pts, half))
        }
        PlanarDomain::Sector { .. } | PlanarDomain::UpperHalfPlane => Err(
            LabError::InvalidConfig(format!("factor {factor} is unbounded: no boundary grid")),
        ),
    }
}

fn circle_points(center: Complex64, radius: f64, n: usize) -> (Vec<Complex64>, f64) {
    let n = n.max(8);
    let pts = (0..n)
        .map(|j| center + Complex64::from_polar(radius, std::f64::consts::TAU * j as f64 / n as f64))
        .collect();
    (pts, std::f64::consts::PI * radius / n as f64)
}

/// Winding number of a closed polyline around the origin, or None when a
/// step turns by pi/2 or more (the discrete count would be unreliable).
fn winding_number(points: &[Complex64]) -> Option<i64> {
    let mut total = 0.0f64;
    for j in 0..points.len() {
        let a = points[j];
        let b = points[(j + 1) % points.len()];
        if a.norm() == 0.0 || b.norm() == 0.0 {
            return None;
        }
        let turn = (b / a).arg();
        if turn.abs() >= std::f64::consts::FRAC_PI_2 {
            return None;
        }
        total += turn;
    }
    Some((total / std::f64::consts::TAU).round() as i64)
}
