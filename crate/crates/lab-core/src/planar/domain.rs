use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};

/// A planar domain with a closed-form hyperbolic density.
///
/// `Sector` and `TruncatedCone` open around the negative real axis: they
/// contain the points z = r e^{i(pi+phi)} with |phi| < theta (and r < eps for
/// the truncated variant). `theta` is the half-opening angle in (0, pi).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum PlanarDomain {
    UnitDisc,
    Disc {
        #[serde(with = "super::complex_pair")]
        center: Complex64,
        radius: f64,
    },
    UpperHalfPlane,
    Sector { theta: f64 },
    TruncatedCone { theta: f64, eps: f64 },
    Annulus { r_inner: f64, r_outer: f64 },
}

/// Strict interior membership together with a signed, distance-like margin.
///
/// The margin is continuous, positive exactly on the interior, zero on the
/// boundary, and 1-Lipschitz in z; it doubles as the feasibility penalty for
/// the optimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membership {
    pub inside: bool,
    pub margin: f64,
}

impl PlanarDomain {
    pub fn disc(center: Complex64, radius: f64) -> LabResult<Self> {
        let d = PlanarDomain::Disc { center, radius };
        d.validate()?;
        Ok(d)
    }

    pub fn sector(theta: f64) -> LabResult<Self> {
        let d = PlanarDomain::Sector { theta };
        d.validate()?;
        Ok(d)
    }

    pub fn truncated_cone(theta: f64, eps: f64) -> LabResult<Self> {
        let d = PlanarDomain::TruncatedCone { theta, eps };
        d.validate()?;
        Ok(d)
    }

    pub fn annulus(r_inner: f64, r_outer: f64) -> LabResult<Self> {
        let d = PlanarDomain::Annulus { r_inner, r_outer };
        d.validate()?;
        Ok(d)
    }

    /// Checks constructor preconditions; deserialized values must be passed
    /// through this before use.
    pub fn validate(&self) -> LabResult<()> {
        let fail = |msg: String| Err(LabError::InvalidDomain(msg));
        match *self {
            PlanarDomain::UnitDisc | PlanarDomain::UpperHalfPlane => Ok(()),
            PlanarDomain::Disc { center, radius } => {
                if !(radius > 0.0) || !radius.is_finite() || !center.is_finite() {
                    return fail(format!("disc needs finite center and radius > 0, got {self}"));
                }
                Ok(())
            }
            PlanarDomain::Sector { theta } => {
                if !(theta > 0.0 && theta < PI) {
                    return fail(format!("sector half-angle must lie in (0, pi), got {theta}"));
                }
                Ok(())
            }
            PlanarDomain::TruncatedCone { theta, eps } => {
                if !(theta > 0.0 && theta < PI) {
                    return fail(format!("cone half-angle must lie in (0, pi), got {theta}"));
                }
                if !(eps > 0.0) || !eps.is_finite() {
                    return fail(format!("cone radius must be positive, got {eps}"));
                }
                Ok(())
            }
            PlanarDomain::Annulus { r_inner, r_outer } => {
                if !(r_inner > 0.0 && r_inner < r_outer) || !r_outer.is_finite() {
                    return fail(format!(
                        "annulus needs 0 < r_inner < r_outer, got ({r_inner}, {r_outer})"
                    ));
                }
                Ok(())
            }
        }
    }

    /// Strict interior membership with a signed margin (positive inside).
    pub fn contains(&self, z: Complex64) -> Membership {
        let margin = self.margin(z);
        Membership { inside: margin > 0.0, margin }
    }

    /// Signed distance-like margin: positive inside, zero on the boundary,
    /// negative outside, 1-Lipschitz in z.
    pub fn margin(&self, z: Complex64) -> f64 {
        match *self {
            PlanarDomain::UnitDisc => 1.0 - z.norm(),
            PlanarDomain::Disc { center, radius } => radius - (z - center).norm(),
            PlanarDomain::UpperHalfPlane => z.im,
            PlanarDomain::Sector { theta } => sector_margin(theta, z),
            PlanarDomain::TruncatedCone { theta, eps } => {
                sector_margin(theta, z).min(eps - z.norm())
            }
            PlanarDomain::Annulus { r_inner, r_outer } => {
                (z.norm() - r_inner).min(r_outer - z.norm())
            }
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, PlanarDomain::UpperHalfPlane | PlanarDomain::Sector { .. })
    }

    pub fn is_simply_connected(&self) -> bool {
        !matches!(self, PlanarDomain::Annulus { .. })
    }

    /// Convexity drives the sampling strategy of the feasibility certifier:
    /// convex targets admit supporting half-plane constraints.
    pub fn is_convex(&self) -> bool {
        match *self {
            PlanarDomain::UnitDisc | PlanarDomain::Disc { .. } | PlanarDomain::UpperHalfPlane => {
                true
            }
            PlanarDomain::Sector { theta } | PlanarDomain::TruncatedCone { theta, .. } => {
                theta <= FRAC_PI_2 + 1e-15
            }
            PlanarDomain::Annulus { .. } => false,
        }
    }

    /// Smallest enclosing disc (center, radius) for bounded variants.
    pub fn enclosing_disc(&self) -> Option<(Complex64, f64)> {
        match *self {
            PlanarDomain::UnitDisc => Some((Complex64::new(0.0, 0.0), 1.0)),
            PlanarDomain::Disc { center, radius } => Some((center, radius)),
            PlanarDomain::TruncatedCone { eps, .. } => Some((Complex64::new(0.0, 0.0), eps)),
            PlanarDomain::Annulus { r_outer, .. } => Some((Complex64::new(0.0, 0.0), r_outer)),
            _ => None,
        }
    }

    /// Samples the topological boundary, roughly uniform in arclength.
    /// Errors for unbounded variants, whose boundary is not compact.
    pub fn boundary_points(&self, n: usize) -> LabResult<Vec<Complex64>> {
        let n = n.max(8);
        let circle = |c: Complex64, r: f64, m: usize| -> Vec<Complex64> {
            (0..m)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / m as f64;
                    c + Complex64::from_polar(r, t)
                })
                .collect()
        };
        match *self {
            PlanarDomain::UnitDisc => Ok(circle(Complex64::new(0.0, 0.0), 1.0, n)),
            PlanarDomain::Disc { center, radius } => Ok(circle(center, radius, n)),
            PlanarDomain::Annulus { r_inner, r_outer } => {
                let mut pts = circle(Complex64::new(0.0, 0.0), r_inner, n / 2);
                pts.extend(circle(Complex64::new(0.0, 0.0), r_outer, n - n / 2));
                Ok(pts)
            }
            PlanarDomain::TruncatedCone { theta, eps } => {
                // Arc plus the two straight edges, sample counts by arclength.
                let arc_len = 2.0 * theta * eps;
                let total = arc_len + 2.0 * eps;
                let n_arc = ((n as f64 * arc_len / total).round() as usize).max(4);
                let n_edge = ((n - n_arc.min(n)) / 2).max(4);
                let mut pts = Vec::with_capacity(n_arc + 2 * n_edge);
                for k in 0..n_arc {
                    let phi = -theta + 2.0 * theta * (k as f64 + 0.5) / n_arc as f64;
                    pts.push(Complex64::from_polar(eps, PI + phi));
                }
                for k in 0..n_edge {
                    let t = eps * (k as f64 + 0.5) / n_edge as f64;
                    pts.push(Complex64::from_polar(t, PI + theta));
                    pts.push(Complex64::from_polar(t, PI - theta));
                }
                Ok(pts)
            }
            _ => Err(LabError::InvalidDomain(format!(
                "boundary sampling needs a bounded domain, got {self}"
            ))),
        }
    }

    /// Draws one interior point. Unbounded variants are sampled within a
    /// reference window (|z| < 3 worth of the domain).
    pub fn sample_point<R: Rng>(&self, rng: &mut R) -> Complex64 {
        match *self {
            PlanarDomain::UnitDisc => {
                let r = rng.gen_range(0.0f64..1.0).sqrt() * 0.999;
                let t = rng.gen_range(0.0..2.0 * PI);
                Complex64::from_polar(r, t)
            }
            PlanarDomain::Disc { center, radius } => {
                let r = rng.gen_range(0.0f64..1.0).sqrt() * 0.999 * radius;
                let t = rng.gen_range(0.0..2.0 * PI);
                center + Complex64::from_polar(r, t)
            }
            PlanarDomain::UpperHalfPlane => {
                Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(1e-3..3.0))
            }
            PlanarDomain::Sector { theta } => {
                let r = rng.gen_range(1e-3..3.0);
                let phi = rng.gen_range(-0.999 * theta..0.999 * theta);
                Complex64::from_polar(r, PI + phi)
            }
            PlanarDomain::TruncatedCone { theta, eps } => {
                let r = rng.gen_range(1e-3 * eps..0.999 * eps);
                let phi = rng.gen_range(-0.999 * theta..0.999 * theta);
                Complex64::from_polar(r, PI + phi)
            }
            PlanarDomain::Annulus { r_inner, r_outer } => {
                let pad = 1e-3 * (r_outer - r_inner);
                let r = rng.gen_range(r_inner + pad..r_outer - pad);
                let t = rng.gen_range(0.0..2.0 * PI);
                Complex64::from_polar(r, t)
            }
        }
    }
}

/// Margin to the sector of half-angle theta about the negative real axis.
///
/// Inside, this is the Euclidean distance to the nearer edge ray capped by
/// the distance to the vertex; outside, the negative of the distance to the
/// sector. The angular gap is clamped to pi/2 because beyond that the
/// nearest boundary point is the vertex itself.
fn sector_margin(theta: f64, z: Complex64) -> f64 {
    let r = z.norm();
    if r == 0.0 {
        return 0.0;
    }
    let phi = (-z).arg();
    let gap = (theta - phi.abs()).clamp(-FRAC_PI_2, FRAC_PI_2);
    r * gap.sin()
}

impl fmt::Display for PlanarDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            PlanarDomain::UnitDisc => write!(f, "UnitDisc"),
            PlanarDomain::Disc { center, radius } => {
                write!(f, "Disc(center {center}, radius {radius})")
            }
            PlanarDomain::UpperHalfPlane => write!(f, "UpperHalfPlane"),
            PlanarDomain::Sector { theta } => write!(f, "Sector(theta {theta})"),
            PlanarDomain::TruncatedCone { theta, eps } => {
                write!(f, "TruncatedCone(theta {theta}, eps {eps})")
            }
            PlanarDomain::Annulus { r_inner, r_outer } => {
                write!(f, "Annulus({r_inner}, {r_outer})")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn disc_center_margin_is_one() {
        let m = PlanarDomain::UnitDisc.contains(c(0.0, 0.0));
        assert!(m.inside);
        assert!((m.margin - 1.0).abs() < 1e-15);
    }

    #[test]
    fn half_disc_contains_negative_axis_point() {
        let d = PlanarDomain::truncated_cone(FRAC_PI_2, 1.0).unwrap();
        let m = d.contains(c(-0.5, 0.0));
        assert!(m.inside);
        assert!((m.margin - 0.5).abs() < 1e-15);
    }

    #[test]
    fn quarter_cone_excludes_positive_axis() {
        let d = PlanarDomain::truncated_cone(PI / 4.0, 1.0).unwrap();
        let m = d.contains(c(0.5, 0.0));
        assert!(!m.inside);
        assert!(m.margin < 0.0);
    }

    #[test]
    fn boundary_points_have_zero_margin() {
        let domains = [
            PlanarDomain::UnitDisc,
            PlanarDomain::disc(c(1.0, -2.0), 0.7).unwrap(),
            PlanarDomain::truncated_cone(2.2, 0.8).unwrap(),
            PlanarDomain::annulus(1.0, 4.0).unwrap(),
        ];
        for d in &domains {
            for p in d.boundary_points(64).unwrap() {
                assert!(
                    d.margin(p).abs() < 1e-12,
                    "{d}: boundary point {p} has margin {}",
                    d.margin(p)
                );
            }
        }
    }

    #[test]
    fn wide_sector_margin_matches_vertex_distance() {
        // Angular gap beyond pi/2: nearest boundary point is the vertex.
        let d = PlanarDomain::sector(3.0).unwrap();
        let z = c(-0.5, 0.0);
        assert!((d.margin(z) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(PlanarDomain::sector(PI).is_err());
        assert!(PlanarDomain::sector(0.0).is_err());
        assert!(PlanarDomain::truncated_cone(1.0, 0.0).is_err());
        assert!(PlanarDomain::annulus(2.0, 1.0).is_err());
        assert!(PlanarDomain::disc(c(0.0, 0.0), -1.0).is_err());
    }

    #[test]
    fn json_descriptor_round_trip() {
        let d: PlanarDomain =
            serde_json::from_str(r#"{"variant": "truncated_cone", "theta": 1.5707963, "eps": 1.0}"#)
                .unwrap();
        assert_eq!(d, PlanarDomain::TruncatedCone { theta: 1.5707963, eps: 1.0 });
        let text = serde_json::to_string(&PlanarDomain::annulus(1.0, 4.0).unwrap()).unwrap();
        let back: PlanarDomain = serde_json::from_str(&text).unwrap();
        assert_eq!(back, PlanarDomain::Annulus { r_inner: 1.0, r_outer: 4.0 });
    }

    #[test]
    fn sampled_points_are_interior() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let domains = [
            PlanarDomain::UnitDisc,
            PlanarDomain::UpperHalfPlane,
            PlanarDomain::sector(2.9).unwrap(),
            PlanarDomain::truncated_cone(0.4, 0.25).unwrap(),
            PlanarDomain::annulus(0.5, 1.5).unwrap(),
        ];
        for d in &domains {
            for _ in 0..500 {
                let z = d.sample_point(&mut rng);
                assert!(d.contains(z).inside, "{d}: sampled {z} not interior");
            }
        }
    }
}
