use std::f64::consts::PI;

use num_complex::Complex64;

use super::domain::PlanarDomain;
use crate::error::{LabError, LabResult};

/// Universal covering of the annulus {r_inner < |z| < r_outer} by the upper
/// half-plane, realized as pi(w) = r_inner * w^{-iL/pi} with L = ln(r_outer/r_inner).
///
/// The deck group is generated by w -> exp(-2 pi^2 / L) * w, a positive real
/// scaling that preserves the half-plane.
#[derive(Debug, Clone)]
pub struct AnnulusCovering {
    r_inner: f64,
    r_outer: f64,
    /// Logarithmic modulus ln(r_outer/r_inner).
    modulus: f64,
}

/// Builds the covering map descriptor for the annulus with the given radii.
pub fn annulus_covering(r_inner: f64, r_outer: f64) -> LabResult<AnnulusCovering> {
    PlanarDomain::annulus(r_inner, r_outer)?;
    Ok(AnnulusCovering {
        r_inner,
        r_outer,
        modulus: (r_outer / r_inner).ln(),
    })
}

impl AnnulusCovering {
    pub fn annulus(&self) -> PlanarDomain {
        PlanarDomain::Annulus { r_inner: self.r_inner, r_outer: self.r_outer }
    }

    pub fn modulus(&self) -> f64 {
        self.modulus
    }

    fn check_upstairs(&self, w: Complex64) -> LabResult<()> {
        if w.im <= 0.0 {
            return Err(LabError::OutsideDomain(format!(
                "{w} is not in the open upper half-plane"
            )));
        }
        Ok(())
    }

    /// Projects a half-plane point down into the annulus.
    pub fn project(&self, w: Complex64) -> LabResult<Complex64> {
        self.check_upstairs(w)?;
        let exponent = Complex64::new(0.0, -self.modulus / PI);
        Ok(self.r_inner * (w.ln() * exponent).exp())
    }

    /// Derivative of the projection at w.
    pub fn derivative(&self, w: Complex64) -> LabResult<Complex64> {
        let exponent = Complex64::new(0.0, -self.modulus / PI);
        Ok(self.project(w)? * exponent / w)
    }

    /// Canonical preimage of an annulus point, selected by the principal
    /// argument: arg z in (-pi, pi] maps to |w| = exp(-arg(z) pi / L).
    pub fn preimage(&self, z: Complex64) -> LabResult<Complex64> {
        let m = self.annulus().contains(z);
        if !m.inside {
            return Err(LabError::OutsideDomain(format!(
                "{z} is not interior to {} (margin {})",
                self.annulus(),
                m.margin
            )));
        }
        let alpha = PI * (z.norm() / self.r_inner).ln() / self.modulus;
        let rho = (-PI * z.arg() / self.modulus).exp();
        Ok(Complex64::from_polar(rho, alpha))
    }

    /// k-th deck transformation; project(deck(w, k)) = project(w).
    pub fn deck(&self, w: Complex64, k: i32) -> Complex64 {
        w * (-2.0 * PI * PI * k as f64 / self.modulus).exp()
    }

    /// Hyperbolic density on the annulus by pullback: the half-plane density
    /// at any preimage divided by the projection derivative's modulus.
    pub fn density(&self, z: Complex64) -> LabResult<f64> {
        let w = self.preimage(z)?;
        Ok(1.0 / (2.0 * w.im * self.derivative(w)?.norm()))
    }
}

/// Closed-form density on the circle |z| = s inside the annulus:
/// pi / (2 L s sin(pi ln(s/r_inner)/L)). Cross-checks the pullback route and
/// drives the radial density profile experiment.
pub fn circle_density(r_inner: f64, r_outer: f64, s: f64) -> f64 {
    let l = (r_outer / r_inner).ln();
    PI / (2.0 * l * s * (PI * (s / r_inner).ln() / l).sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn projection_hits_annulus_and_inverts() {
        let cov = annulus_covering(1.0, 4.0).unwrap();
        let ann = cov.annulus();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10_000 {
            let w = PlanarDomain::UpperHalfPlane.sample_point(&mut rng);
            let z = cov.project(w).unwrap();
            assert!(ann.contains(z).inside, "projected {w} to {z} outside annulus");
        }
        for _ in 0..500 {
            let z = ann.sample_point(&mut rng);
            let w = cov.preimage(z).unwrap();
            assert!(w.im > 0.0);
            let back = cov.project(w).unwrap();
            assert!((back - z).norm() < 1e-10 * (1.0 + z.norm()));
        }
    }

    #[test]
    fn deck_invariance_of_pullback_density() {
        let cov = annulus_covering(1.0, 4.0).unwrap();
        let ann = cov.annulus();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let z = ann.sample_point(&mut rng);
            let w = cov.preimage(z).unwrap();
            let lam = 1.0 / (2.0 * w.im * cov.derivative(w).unwrap().norm());
            for k in [-2, -1, 1, 3] {
                let wk = cov.deck(w, k);
                let proj = cov.project(wk).unwrap();
                assert!((proj - z).norm() < 1e-9 * (1.0 + z.norm()));
                let lam_k = 1.0 / (2.0 * wk.im * cov.derivative(wk).unwrap().norm());
                assert!(
                    (lam - lam_k).abs() < 1e-9 * lam,
                    "deck {k} density mismatch: {lam} vs {lam_k}"
                );
            }
        }
    }

    #[test]
    fn density_matches_circle_closed_form() {
        let cov = annulus_covering(1.0, 4.0).unwrap();
        // At s = sqrt(r1 r2) = 2 the closed form is pi/(4 ln 4)·... sin = 1.
        let golden = PI / (2.0 * 4.0f64.ln() * 2.0);
        assert!((golden - 0.566_545_017_728_399_2).abs() < 1e-15);
        for arg in [0.0, 1.0, -2.0, 3.1] {
            let z = Complex64::from_polar(2.0, arg);
            let lam = cov.density(z).unwrap();
            assert!((lam - golden).abs() < 1e-12 * golden, "density {lam} at arg {arg}");
        }
        for s in [1.2, 1.7, 2.9, 3.8] {
            let lam = cov.density(Complex64::from_polar(s, 0.7)).unwrap();
            let cf = circle_density(1.0, 4.0, s);
            assert!((lam - cf).abs() < 1e-12 * cf);
        }
    }

    #[test]
    fn radial_scan_minima() {
        // The scale-invariant circle-length density s*lambda(s) bottoms out
        // exactly at the geometric mean; the plain density bottoms out at the
        // root of tan(pi u) = -pi/L, which is strictly larger.
        let cov = annulus_covering(1.0, 4.0).unwrap();
        let n = 4001;
        let mut best_plain = (f64::INFINITY, 0.0);
        let mut best_scaled = (f64::INFINITY, 0.0);
        for k in 1..n {
            let s = 1.0 + 3.0 * k as f64 / n as f64;
            let lam = cov.density(Complex64::new(s, 0.0)).unwrap();
            if lam < best_plain.0 {
                best_plain = (lam, s);
            }
            if s * lam < best_scaled.0 {
                best_scaled = (s * lam, s);
            }
        }
        assert!(
            (best_scaled.1 - 2.0).abs() < 2e-3,
            "scaled argmin {} should be the geometric mean 2",
            best_scaled.1
        );
        // Frozen from the 1-D scan oracle: tan(pi u) = -pi/ln 4 at u = 0.63234,
        // so s* = 4^u = 2.4027.
        assert!(
            (best_plain.1 - 2.4027).abs() < 3e-3,
            "plain argmin {} should sit near 2.4027, not the geometric mean",
            best_plain.1
        );
    }
}
