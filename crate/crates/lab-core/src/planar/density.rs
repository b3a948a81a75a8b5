use num_complex::Complex64;

use super::annulus::annulus_covering;
use super::chart::{cone_chart, sector_chart};
use super::domain::PlanarDomain;
use crate::error::{LabError, LabResult};

/// Poincare density at z, normalized so the unit-disc density at 0 is 1.
///
/// Disc and half-plane values are closed forms; sector and truncated-cone
/// values pull back the half-plane density through the conformal charts; the
/// annulus pulls back through the universal covering. The pullback rule is
/// lambda(z) = lambda_ref(g(z)) |g'(z)|.
pub fn poincare_density(domain: &PlanarDomain, z: Complex64) -> LabResult<f64> {
    let m = domain.contains(z);
    if !m.inside {
        return Err(LabError::OutsideDomain(format!(
            "{z} is not interior to {domain} (margin {})",
            m.margin
        )));
    }
    match *domain {
        PlanarDomain::UnitDisc => Ok(1.0 / (1.0 - z.norm_sqr())),
        PlanarDomain::Disc { center, radius } => {
            Ok(radius / (radius * radius - (z - center).norm_sqr()))
        }
        PlanarDomain::UpperHalfPlane => Ok(1.0 / (2.0 * z.im)),
        PlanarDomain::Sector { theta } => {
            let chart = sector_chart(theta)?;
            let g = chart.map(z)?;
            Ok(chart.derivative(z)?.norm() / (2.0 * g.im))
        }
        PlanarDomain::TruncatedCone { theta, eps } => {
            let chart = cone_chart(theta, eps)?;
            let g = chart.map(z)?;
            Ok(chart.derivative(z)?.norm() / (2.0 * g.im))
        }
        PlanarDomain::Annulus { r_inner, r_outer } => {
            annulus_covering(r_inner, r_outer)?.density(z)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planar::{cayley_chart, cone_power_chart};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn normalization_anchors() {
        assert!((poincare_density(&PlanarDomain::UnitDisc, c(0.0, 0.0)).unwrap() - 1.0).abs() < 1e-15);
        let at_half = poincare_density(&PlanarDomain::UnitDisc, c(0.5, 0.0)).unwrap();
        assert!((at_half - 4.0 / 3.0).abs() < 1e-15);
        let uhp = poincare_density(&PlanarDomain::UpperHalfPlane, c(0.0, 1.0)).unwrap();
        assert!((uhp - 0.5).abs() < 1e-15);
        let disc = PlanarDomain::disc(c(1.0, 2.0), 3.0).unwrap();
        assert!((poincare_density(&disc, c(1.0, 2.0)).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn cayley_pullback_reproduces_half_plane_density() {
        // The half-plane closed form equals the pullback of the disc density
        // through the inverse Cayley chart.
        let chart = cayley_chart();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..500 {
            let z = PlanarDomain::UnitDisc.sample_point(&mut rng);
            let w = chart.map(z).unwrap();
            let lhs = poincare_density(&PlanarDomain::UnitDisc, z).unwrap();
            let rhs = poincare_density(&PlanarDomain::UpperHalfPlane, w).unwrap()
                * chart.derivative(z).unwrap().norm();
            assert!((lhs - rhs).abs() < 1e-12 * lhs);
        }
    }

    #[test]
    fn half_disc_golden_value() {
        // Frozen after independent high-precision evaluation of the chart
        // pullback: lambda = (1 + r^2)/(2 r (1 - r^2)) at z = -r on the
        // half-disc, equal to 545/273 at r = 0.3.
        let cone = PlanarDomain::truncated_cone(FRAC_PI_2, 1.0).unwrap();
        let lam = poincare_density(&cone, c(-0.3, 0.0)).unwrap();
        assert!(
            (lam - 545.0 / 273.0).abs() < 1e-12,
            "half-disc density {lam} vs frozen 545/273 = {}",
            545.0 / 273.0
        );
    }

    #[test]
    fn sector_closed_form_agrees_with_chart_pullback() {
        // lambda(r e^{i(pi+phi)}) = p / (2 r cos(p phi)) with p = pi/(2 theta).
        for &theta in &[0.5, 1.0, FRAC_PI_2, 2.3] {
            let sector = PlanarDomain::sector(theta).unwrap();
            let p = FRAC_PI_2 / theta;
            for &(r, phi) in &[(0.3, 0.0), (1.7, 0.4), (0.9, -0.45)] {
                let phi = phi * theta / 0.5;
                if phi.abs() >= theta {
                    continue;
                }
                let z = Complex64::from_polar(r, PI + phi);
                let lam = poincare_density(&sector, z).unwrap();
                let closed = p / (2.0 * r * (p * phi).cos());
                assert!(
                    (lam - closed).abs() < 1e-11 * closed,
                    "theta={theta}, r={r}, phi={phi}: {lam} vs {closed}"
                );
            }
        }
    }

    #[test]
    fn two_chart_factorizations_agree() {
        // Pullback straight through cone_chart matches pullback through the
        // power map to the half-disc composed with the half-disc chart.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for &(theta, eps) in &[(0.6, 1.0), (1.2, 0.5), (2.6, 1.4)] {
            let cone = PlanarDomain::truncated_cone(theta, eps).unwrap();
            let direct = cone_chart(theta, eps).unwrap();
            let power = cone_power_chart(theta, FRAC_PI_2, eps).unwrap();
            let rest = cone_chart(FRAC_PI_2, eps).unwrap();
            for _ in 0..300 {
                let z = cone.sample_point(&mut rng);
                let lam1 = {
                    let g = direct.map(z).unwrap();
                    direct.derivative(z).unwrap().norm() / (2.0 * g.im)
                };
                let mid = power.map(z).unwrap();
                let lam2 = {
                    let g = rest.map(mid).unwrap();
                    rest.derivative(mid).unwrap().norm() / (2.0 * g.im)
                        * power.derivative(z).unwrap().norm()
                };
                assert!(
                    (lam1 - lam2).abs() < 1e-9 * lam1,
                    "factorization mismatch at {z}: {lam1} vs {lam2}"
                );
            }
        }
    }

    #[test]
    fn moebius_conformal_invariance() {
        // lambda(m(z)) |m'(z)| = lambda(z) for disc automorphisms
        // m(z) = e^{i t}(z - a)/(1 - conj(a) z).
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..1000 {
            let a = {
                let r = rng.gen_range(0.0f64..0.9);
                let t = rng.gen_range(0.0..2.0 * PI);
                Complex64::from_polar(r, t)
            };
            let phase = Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI));
            let z = PlanarDomain::UnitDisc.sample_point(&mut rng);
            let denom = Complex64::new(1.0, 0.0) - a.conj() * z;
            let mz = phase * (z - a) / denom;
            let dm = phase * (1.0 - a.norm_sqr()) / (denom * denom);
            let lhs = poincare_density(&PlanarDomain::UnitDisc, mz).unwrap() * dm.norm();
            let rhs = poincare_density(&PlanarDomain::UnitDisc, z).unwrap();
            assert!((lhs - rhs).abs() < 1e-10 * rhs, "invariance failed at z={z}, a={a}");
        }
    }

    #[test]
    fn inclusion_monotonicity_in_cone_radius() {
        // Smaller cone, larger density.
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..300 {
            let theta = rng.gen_range(0.2..2.9);
            let eps_small = rng.gen_range(0.2..1.0);
            let eps_big = eps_small + rng.gen_range(0.1..2.0);
            let small = PlanarDomain::truncated_cone(theta, eps_small).unwrap();
            let big = PlanarDomain::truncated_cone(theta, eps_big).unwrap();
            let z = small.sample_point(&mut rng);
            let lam_small = poincare_density(&small, z).unwrap();
            let lam_big = poincare_density(&big, z).unwrap();
            assert!(
                lam_small >= lam_big * (1.0 - 1e-12),
                "monotonicity failed: {lam_small} < {lam_big}"
            );
        }
    }

    #[test]
    fn vertex_blowup_rate() {
        // r * lambda(-r) stays bounded between positive constants as r -> 0;
        // the sector rate is p/2 with p = pi/(2 theta).
        for &theta in &[0.7, FRAC_PI_2, 2.5] {
            let cone = PlanarDomain::truncated_cone(theta, 1.0).unwrap();
            let p = FRAC_PI_2 / theta;
            let mut r = 0.1;
            while r > 1e-9 {
                let lam = poincare_density(&cone, c(-r, 0.0)).unwrap();
                let scaled = r * lam;
                assert!(
                    scaled > 0.4 * p && scaled < 1.2 * p,
                    "theta={theta}, r={r}: r*lambda = {scaled}, sector rate {}",
                    p / 2.0
                );
                r *= 1e-2;
            }
        }
    }
}
