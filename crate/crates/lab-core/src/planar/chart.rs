use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use super::domain::PlanarDomain;
use crate::error::{LabError, LabResult};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Principal-branch power base^expo through the principal logarithm.
///
/// The cut lies on the negative real axis of `base`; every chart below
/// arranges its argument so the cut never meets the domain interior. A zero
/// base is admitted for positive exponents (limit value 0).
pub(crate) fn powc(base: Complex64, expo: f64) -> LabResult<Complex64> {
    if base.re == 0.0 && base.im == 0.0 {
        if expo > 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        return Err(LabError::BranchCut(
            "zero base with nonpositive exponent".to_string(),
        ));
    }
    if base.im == 0.0 && base.re < 0.0 {
        return Err(LabError::BranchCut(format!(
            "principal power of {base} evaluated on the cut"
        )));
    }
    Ok((base.ln() * expo).exp())
}

/// A conformal bijection from a model domain onto a reference domain
/// (unit disc or upper half-plane), with derivative and closed-form inverse.
#[derive(Debug, Clone)]
pub struct ConformalChart {
    source: PlanarDomain,
    target: PlanarDomain,
    kind: ChartKind,
    branch: &'static str,
}

#[derive(Debug, Clone)]
enum ChartKind {
    /// z -> ((1 + i u)/(1 - i u))^2 with u = (-z/eps)^{pi/2(theta)}.
    Cone { theta: f64, eps: f64 },
    /// z -> i(-z)^{pi/2(theta)}, infinite sector onto the half-plane.
    Sector { theta: f64 },
    /// Affine (z - center)/radius onto the unit disc.
    DiscAffine { center: Complex64, radius: f64 },
    /// Cayley transform z -> i(1 - z)/(1 + z), unit disc onto the half-plane.
    Cayley,
    /// Power map between cones: z -> -eps(-z/eps)^{theta_to/theta_from}.
    ConePower { theta_from: f64, theta_to: f64, eps: f64 },
}

impl ConformalChart {
    pub fn source(&self) -> &PlanarDomain {
        &self.source
    }

    pub fn target(&self) -> &PlanarDomain {
        &self.target
    }

    /// Describes the branch convention of any fractional power involved.
    pub fn branch_note(&self) -> &'static str {
        self.branch
    }

    /// Forward evaluation g(z). The point must lie in the open source domain.
    pub fn map(&self, z: Complex64) -> LabResult<Complex64> {
        self.check_source(z)?;
        match self.kind {
            ChartKind::Cone { theta, eps } => {
                let u = powc(-z / eps, FRAC_PI_2 / theta)?;
                let m = (ONE + I * u) / (ONE - I * u);
                Ok(m * m)
            }
            ChartKind::Sector { theta } => Ok(I * powc(-z, FRAC_PI_2 / theta)?),
            ChartKind::DiscAffine { center, radius } => Ok((z - center) / radius),
            ChartKind::Cayley => Ok(I * (ONE - z) / (ONE + z)),
            ChartKind::ConePower { theta_from, theta_to, eps } => {
                Ok(-eps * powc(-z / eps, theta_to / theta_from)?)
            }
        }
    }

    /// Derivative g'(z), nonvanishing on the source interior.
    pub fn derivative(&self, z: Complex64) -> LabResult<Complex64> {
        self.check_source(z)?;
        match self.kind {
            ChartKind::Cone { theta, eps } => {
                let p = FRAC_PI_2 / theta;
                let u = powc(-z / eps, p)?;
                let du = p * u / z;
                let denom = ONE - I * u;
                let m = (ONE + I * u) / denom;
                let dm = 2.0 * I * du / (denom * denom);
                Ok(2.0 * m * dm)
            }
            ChartKind::Sector { theta } => {
                let p = FRAC_PI_2 / theta;
                let u = powc(-z, p)?;
                Ok(I * p * u / z)
            }
            ChartKind::DiscAffine { radius, .. } => Ok(Complex64::new(1.0 / radius, 0.0)),
            ChartKind::Cayley => {
                let denom = ONE + z;
                Ok(-2.0 * I / (denom * denom))
            }
            ChartKind::ConePower { theta_from, theta_to, eps } => {
                let q = theta_to / theta_from;
                let u = powc(-z / eps, q)?;
                Ok(-eps * q * u / z)
            }
        }
    }

    /// Closed-form inverse. The point must lie in the open target domain.
    pub fn inverse(&self, w: Complex64) -> LabResult<Complex64> {
        let m = self.target.contains(w);
        if !m.inside {
            return Err(LabError::OutsideDomain(format!(
                "{w} is not interior to chart target {} (margin {})",
                self.target, m.margin
            )));
        }
        match self.kind {
            ChartKind::Cone { theta, eps } => {
                // Unwind squaring, Moebius stage, fractional power in turn.
                let mstage = powc(w, 0.5)?;
                let u = -I * (mstage - ONE) / (ONE + mstage);
                Ok(-eps * powc(u, 2.0 * theta / std::f64::consts::PI)?)
            }
            ChartKind::Sector { theta } => {
                let u = -I * w;
                Ok(-powc(u, 2.0 * theta / std::f64::consts::PI)?)
            }
            ChartKind::DiscAffine { center, radius } => Ok(center + radius * w),
            ChartKind::Cayley => Ok((I - w) / (I + w)),
            ChartKind::ConePower { theta_from, theta_to, eps } => {
                Ok(-eps * powc(-w / eps, theta_from / theta_to)?)
            }
        }
    }

    fn check_source(&self, z: Complex64) -> LabResult<()> {
        let m = self.source.contains(z);
        if !m.inside {
            return Err(LabError::OutsideDomain(format!(
                "{z} is not interior to chart source {} (margin {})",
                self.source, m.margin
            )));
        }
        Ok(())
    }
}

/// Chart from the truncated cone of half-angle theta and radius eps onto the
/// upper half-plane, the composite of the fractional power u = (-z/eps)^{pi/2 theta},
/// the Moebius stage (1 + iu)/(1 - iu), and squaring.
pub fn cone_chart(theta: f64, eps: f64) -> LabResult<ConformalChart> {
    let source = PlanarDomain::truncated_cone(theta, eps)?;
    Ok(ConformalChart {
        source,
        target: PlanarDomain::UpperHalfPlane,
        kind: ChartKind::Cone { theta, eps },
        branch: "principal branch for (-z/eps)^(pi/2 theta); cut on the positive real z-axis",
    })
}

/// Chart from the infinite sector of half-angle theta onto the upper half-plane.
pub fn sector_chart(theta: f64) -> LabResult<ConformalChart> {
    let source = PlanarDomain::sector(theta)?;
    Ok(ConformalChart {
        source,
        target: PlanarDomain::UpperHalfPlane,
        kind: ChartKind::Sector { theta },
        branch: "principal branch for (-z)^(pi/2 theta); cut on the positive real z-axis",
    })
}

/// Affine chart from a general disc onto the unit disc.
pub fn disc_chart(center: Complex64, radius: f64) -> LabResult<ConformalChart> {
    let source = PlanarDomain::disc(center, radius)?;
    Ok(ConformalChart {
        source,
        target: PlanarDomain::UnitDisc,
        kind: ChartKind::DiscAffine { center, radius },
        branch: "no fractional powers",
    })
}

/// Cayley transform from the unit disc onto the upper half-plane.
pub fn cayley_chart() -> ConformalChart {
    ConformalChart {
        source: PlanarDomain::UnitDisc,
        target: PlanarDomain::UpperHalfPlane,
        kind: ChartKind::Cayley,
        branch: "no fractional powers",
    }
}

/// Power map between truncated cones of the same radius, used to factor the
/// cone chart through an intermediate half-angle.
pub fn cone_power_chart(theta_from: f64, theta_to: f64, eps: f64) -> LabResult<ConformalChart> {
    let source = PlanarDomain::truncated_cone(theta_from, eps)?;
    let target = PlanarDomain::truncated_cone(theta_to, eps)?;
    Ok(ConformalChart {
        source,
        target,
        kind: ChartKind::ConePower { theta_from, theta_to, eps },
        branch: "principal branch for (-z/eps)^(theta_to/theta_from); cut on the positive real z-axis",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn half_disc_axis_maps_to_unit_circle_in_half_plane() {
        // theta = pi/2, eps = 1, z = -r: u = r, image ((1+ir)/(1-ir))^2 has
        // modulus 1 and positive imaginary part for 0 < r < 1.
        let chart = cone_chart(FRAC_PI_2, 1.0).unwrap();
        for r in [0.1, 0.3, 0.5, 0.7, 0.95] {
            let g = chart.map(c(-r, 0.0)).unwrap();
            assert!((g.norm() - 1.0).abs() < 1e-13, "modulus {} at r={r}", g.norm());
            assert!(g.im > 0.0, "Im g = {} at r={r}", g.im);
        }
    }

    #[test]
    fn vertex_limit_approaches_one() {
        let chart = cone_chart(1.0, 1.0).unwrap();
        let g = chart.map(Complex64::from_polar(1e-9, PI + 0.3)).unwrap();
        assert!((g - ONE).norm() < 1e-6);
    }

    #[test]
    fn interior_points_map_into_half_plane() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for &(theta, eps) in &[(0.4, 0.25), (FRAC_PI_2, 1.0), (2.4, 1.7)] {
            let domain = PlanarDomain::truncated_cone(theta, eps).unwrap();
            let chart = cone_chart(theta, eps).unwrap();
            for _ in 0..10_000 {
                let z = domain.sample_point(&mut rng);
                let g = chart.map(z).unwrap();
                assert!(g.im > 0.0, "theta={theta}, eps={eps}, z={z} mapped to {g}");
            }
        }
    }

    #[test]
    fn round_trip_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let charts = vec![
            cone_chart(0.7, 0.5).unwrap(),
            cone_chart(2.8, 1.0).unwrap(),
            sector_chart(1.2).unwrap(),
            disc_chart(c(1.0, -0.5), 2.0).unwrap(),
            cayley_chart(),
            cone_power_chart(2.0, FRAC_PI_2, 0.8).unwrap(),
        ];
        for chart in &charts {
            for _ in 0..300 {
                let z = chart.source().sample_point(&mut rng);
                let w = chart.map(z).unwrap();
                assert!(chart.target().contains(w).inside);
                let back = chart.inverse(w).unwrap();
                assert!(
                    (back - z).norm() < 1e-9 * (1.0 + z.norm()),
                    "round trip failed: {z} -> {w} -> {back}"
                );
            }
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let charts = vec![
            cone_chart(0.9, 1.3).unwrap(),
            sector_chart(2.1).unwrap(),
            cayley_chart(),
            cone_power_chart(1.9, 0.8, 1.0).unwrap(),
        ];
        for chart in &charts {
            for _ in 0..200 {
                let z = chart.source().sample_point(&mut rng);
                if chart.source().margin(z) < 1e-3 {
                    continue;
                }
                let h = 1e-6 * (1.0 + z.norm());
                let d_num = (chart.map(z + c(h, 0.0)).unwrap()
                    - chart.map(z - c(h, 0.0)).unwrap())
                    / (2.0 * h);
                let d = chart.derivative(z).unwrap();
                assert!(d.norm() > 0.0);
                assert!(
                    (d - d_num).norm() < 1e-5 * (1.0 + d.norm()),
                    "derivative mismatch at {z}: {d} vs {d_num}"
                );
            }
        }
    }

    #[test]
    fn branch_cut_and_vertex_rejected() {
        let chart = cone_chart(FRAC_PI_2, 1.0).unwrap();
        assert!(chart.map(c(0.0, 0.0)).is_err());
        assert!(chart.map(c(0.5, 0.0)).is_err());
        assert!(powc(c(-1.0, 0.0), 0.5).is_err());
    }

    #[test]
    fn quasi_random_interior_membership_margin() {
        // Forward images keep a positive half-plane margin on a sample grid.
        let chart = cone_chart(1.1, 0.6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut worst = f64::INFINITY;
        for _ in 0..2000 {
            let z = chart.source().sample_point(&mut rng);
            let g = chart.map(z).unwrap();
            worst = worst.min(g.im);
        }
        assert!(worst > 1e-10);
        let _ = rng.gen::<u64>();
    }
}
