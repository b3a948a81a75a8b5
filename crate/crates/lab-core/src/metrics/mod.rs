//! Invariant metrics and measures on products of planar domains.
//!
//! On one- and two-factor products the Kobayashi-Royden metric is the maximum
//! of the factor metrics, and the Eisenman measure is the product of squared
//! factor densities. Both laws are validated empirically against the oracle
//! module rather than assumed. The Caratheodory measure coincides with the
//! Eisenman measure on products of simply connected factors (each factor is
//! biholomorphic to the disc); with an annulus factor no closed form is
//! claimed and the value defers to an oracle lower bound, flagged as such.

mod decrease;
mod map;

pub use decrease::{
    check_decreasing, random_feasible_pair, sample_tangents, DecreaseReport, DecreaseViolation,
};
pub use map::{bidisc_automorphism, disc_automorphism, HoloMap, MapComponent, Poly};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};
use crate::planar::{poincare_density, Membership, PlanarDomain};

/// Ordered product of one or two planar factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProductDomain {
    factors: Vec<PlanarDomain>,
}

impl ProductDomain {
    pub fn new(factors: Vec<PlanarDomain>) -> LabResult<Self> {
        if factors.is_empty() || factors.len() > 2 {
            return Err(LabError::InvalidDomain(format!(
                "products carry one or two factors, got {}",
                factors.len()
            )));
        }
        for f in &factors {
            f.validate()?;
        }
        Ok(ProductDomain { factors })
    }

    pub fn single(factor: PlanarDomain) -> LabResult<Self> {
        ProductDomain::new(vec![factor])
    }

    pub fn unit_disc() -> Self {
        ProductDomain { factors: vec![PlanarDomain::UnitDisc] }
    }

    pub fn bidisc() -> Self {
        ProductDomain { factors: vec![PlanarDomain::UnitDisc, PlanarDomain::UnitDisc] }
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[PlanarDomain] {
        &self.factors
    }

    pub fn is_simply_connected(&self) -> bool {
        self.factors.iter().all(|f| f.is_simply_connected())
    }

    /// Componentwise membership; the margin is the minimum factor margin.
    pub fn contains(&self, z: &[Complex64]) -> LabResult<Membership> {
        self.check_dim(z.len())?;
        let margin = self
            .factors
            .iter()
            .zip(z)
            .map(|(f, &p)| f.margin(p))
            .fold(f64::INFINITY, f64::min);
        Ok(Membership { inside: margin > 0.0, margin })
    }

    pub fn sample_point<R: Rng>(&self, rng: &mut R) -> Vec<Complex64> {
        self.factors.iter().map(|f| f.sample_point(rng)).collect()
    }

    pub(crate) fn check_dim(&self, n: usize) -> LabResult<()> {
        if n != self.dim() {
            return Err(LabError::Dimension(format!(
                "expected {} coordinates, got {n}",
                self.dim()
            )));
        }
        Ok(())
    }

    fn require_interior(&self, z: &[Complex64]) -> LabResult<()> {
        let m = self.contains(z)?;
        if !m.inside {
            return Err(LabError::OutsideDomain(format!(
                "point is not interior to the product (margin {})",
                m.margin
            )));
        }
        Ok(())
    }
}

/// A tangent vector (z, v) on a product domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Tangent {
    pub point: Vec<Complex64>,
    pub vector: Vec<Complex64>,
}

impl Tangent {
    pub fn new(point: Vec<Complex64>, vector: Vec<Complex64>) -> LabResult<Self> {
        if point.len() != vector.len() || point.is_empty() || point.len() > 2 {
            return Err(LabError::Dimension(format!(
                "tangent needs matching point/vector lengths in 1..=2, got {}/{}",
                point.len(),
                vector.len()
            )));
        }
        Ok(Tangent { point, vector })
    }

    pub fn dim(&self) -> usize {
        self.point.len()
    }
}

/// Provenance of a measure value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureMethod {
    /// Direct density formulas (disc, half-plane factors only).
    ClosedForm,
    /// Chart or covering pullback entered at least one factor.
    Pullback,
    /// At least one entry is an optimizer bound, not an exact value.
    Oracle,
}

/// One measure value with provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureEntry {
    pub value: f64,
    pub method: MeasureMethod,
    /// False when the value is only a one-sided bound.
    pub exact: bool,
}

/// Caratheodory and Eisenman values at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureValue {
    pub caratheodory: f64,
    pub eisenman: f64,
    /// Weakest provenance among the two entries.
    pub method: MeasureMethod,
    /// False when the Caratheodory entry is only an oracle lower bound.
    pub caratheodory_exact: bool,
}

impl MeasureValue {
    /// Ratio M^C/M^E in (0, 1]; below 1 it certifies the product is not
    /// biholomorphic to the polydisc once both entries are exact.
    pub fn ratio(&self) -> f64 {
        self.caratheodory / self.eisenman
    }
}

fn factor_method(factors: &[PlanarDomain]) -> MeasureMethod {
    let direct = factors.iter().all(|f| {
        matches!(
            f,
            PlanarDomain::UnitDisc | PlanarDomain::Disc { .. } | PlanarDomain::UpperHalfPlane
        )
    });
    if direct {
        MeasureMethod::ClosedForm
    } else {
        MeasureMethod::Pullback
    }
}

/// Kobayashi-Royden metric F^K(z, v) on the product: the maximum over
/// factors of lambda_i(z_i)|v_i|. The annulus factor density arrives through
/// the covering, under which the metric is invariant.
pub fn kobayashi_royden(domain: &ProductDomain, t: &Tangent) -> LabResult<f64> {
    domain.check_dim(t.dim())?;
    domain.require_interior(&t.point)?;
    let mut best = 0.0f64;
    for ((f, &z), &v) in domain.factors().iter().zip(&t.point).zip(&t.vector) {
        let contribution = poincare_density(f, z)? * v.norm();
        best = best.max(contribution);
    }
    Ok(best)
}

/// Eisenman measure M^E(z): the product over factors of lambda_i(z_i)^2.
/// Exact for every supported factor (simply connected ones through the
/// Riemann chart, the annulus through covering invariance).
pub fn eisenman_measure(domain: &ProductDomain, z: &[Complex64]) -> LabResult<MeasureEntry> {
    domain.check_dim(z.len())?;
    domain.require_interior(z)?;
    let mut value = 1.0;
    for (f, &p) in domain.factors().iter().zip(z) {
        let lam = poincare_density(f, p)?;
        value *= lam * lam;
    }
    Ok(MeasureEntry { value, method: factor_method(domain.factors()), exact: true })
}

/// Caratheodory measure M^C(z). On products of simply connected factors it
/// equals the Eisenman measure exactly. With an annulus factor no closed form
/// is claimed: the value is an oracle lower bound flagged `exact: false`.
pub fn caratheodory_measure(domain: &ProductDomain, z: &[Complex64]) -> LabResult<MeasureEntry> {
    caratheodory_measure_with(domain, z, None)
}

/// Caratheodory measure with an explicit optimizer configuration for the
/// annulus fallback; `None` uses the deterministic default.
pub fn caratheodory_measure_with(
    domain: &ProductDomain,
    z: &[Complex64],
    oracle_cfg: Option<&crate::oracle::OptimizerConfig>,
) -> LabResult<MeasureEntry> {
    domain.check_dim(z.len())?;
    domain.require_interior(z)?;
    if domain.is_simply_connected() {
        let e = eisenman_measure(domain, z)?;
        return Ok(MeasureEntry { value: e.value, method: e.method, exact: true });
    }
    let default_cfg;
    let cfg = match oracle_cfg {
        Some(c) => c,
        None => {
            default_cfg = crate::oracle::OptimizerConfig::measure_default();
            &default_cfg
        }
    };
    let res = crate::oracle::caratheodory_lower_oracle(domain, z, cfg)?;
    Ok(MeasureEntry { value: res.bound, method: MeasureMethod::Oracle, exact: false })
}

/// Both measures and their ratio at z. For simply connected products the
/// ratio is exactly 1 by construction.
pub fn measure_ratio(
    domain: &ProductDomain,
    z: &[Complex64],
    oracle_cfg: Option<&crate::oracle::OptimizerConfig>,
) -> LabResult<MeasureValue> {
    let e = eisenman_measure(domain, z)?;
    let c = caratheodory_measure_with(domain, z, oracle_cfg)?;
    let method = if c.method == MeasureMethod::Oracle {
        MeasureMethod::Oracle
    } else {
        e.method
    };
    Ok(MeasureValue {
        caratheodory: c.value,
        eisenman: e.value,
        method,
        caratheodory_exact: c.exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kobayashi_anchors() {
        let disc = ProductDomain::unit_disc();
        let t = Tangent::new(vec![c(0.0, 0.0)], vec![c(1.0, 0.0)]).unwrap();
        assert!((kobayashi_royden(&disc, &t).unwrap() - 1.0).abs() < 1e-15);
        let t = Tangent::new(vec![c(0.5, 0.0)], vec![c(1.0, 0.0)]).unwrap();
        assert!((kobayashi_royden(&disc, &t).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        let bidisc = ProductDomain::bidisc();
        let t = Tangent::new(vec![c(0.0, 0.0), c(0.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        assert!((kobayashi_royden(&bidisc, &t).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_vector_gives_zero_metric() {
        let bidisc = ProductDomain::bidisc();
        let t = Tangent::new(vec![c(0.3, 0.1), c(0.0, 0.2)], vec![c(0.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        assert_eq!(kobayashi_royden(&bidisc, &t).unwrap(), 0.0);
    }

    #[test]
    fn eisenman_anchors() {
        let bidisc = ProductDomain::bidisc();
        let e = eisenman_measure(&bidisc, &[c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!((e.value - 1.0).abs() < 1e-15);
        assert_eq!(e.method, MeasureMethod::ClosedForm);
        let disc = ProductDomain::unit_disc();
        let e = eisenman_measure(&disc, &[c(0.5, 0.0)]).unwrap();
        assert!((e.value - 16.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn cone_measure_is_squared_density() {
        let theta = FRAC_PI_2;
        let cone = PlanarDomain::truncated_cone(theta, 1.0).unwrap();
        let lam = poincare_density(&cone, c(-0.3, 0.0)).unwrap();
        let d = ProductDomain::single(cone).unwrap();
        let e = eisenman_measure(&d, &[c(-0.3, 0.0)]).unwrap();
        assert!((e.value - lam * lam).abs() < 1e-13 * e.value);
        assert_eq!(e.method, MeasureMethod::Pullback);
    }

    #[test]
    fn caratheodory_equals_eisenman_on_simply_connected_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let products = vec![
            ProductDomain::bidisc(),
            ProductDomain::new(vec![
                PlanarDomain::truncated_cone(1.0, 1.0).unwrap(),
                PlanarDomain::truncated_cone(1.0, 1.0).unwrap(),
            ])
            .unwrap(),
            ProductDomain::new(vec![
                PlanarDomain::disc(c(2.0, 1.0), 0.5).unwrap(),
                PlanarDomain::UpperHalfPlane,
            ])
            .unwrap(),
        ];
        for d in &products {
            for _ in 0..50 {
                let z = d.sample_point(&mut rng);
                let ratio = measure_ratio(d, &z, None).unwrap();
                assert_eq!(ratio.ratio(), 1.0);
                assert!(ratio.caratheodory_exact);
            }
        }
    }

    #[test]
    fn product_law_for_measures() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let f1 = PlanarDomain::truncated_cone(2.0, 1.5).unwrap();
        let f2 = PlanarDomain::annulus(1.0, 4.0).unwrap();
        let prod = ProductDomain::new(vec![f1.clone(), f2.clone()]).unwrap();
        let d1 = ProductDomain::single(f1).unwrap();
        let d2 = ProductDomain::single(f2).unwrap();
        for _ in 0..100 {
            let z = prod.sample_point(&mut rng);
            let whole = eisenman_measure(&prod, &z).unwrap().value;
            let parts = eisenman_measure(&d1, &z[..1]).unwrap().value
                * eisenman_measure(&d2, &z[1..]).unwrap().value;
            assert!((whole - parts).abs() < 1e-12 * whole);
        }
    }

    #[test]
    fn covering_invariance_of_annulus_measure() {
        // Eisenman value computed through two distinct covering preimages.
        let cov = crate::planar::annulus_covering(1.0, 4.0).unwrap();
        let ann = ProductDomain::single(PlanarDomain::annulus(1.0, 4.0).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let z = ann.sample_point(&mut rng);
            let exact = eisenman_measure(&ann, &z).unwrap().value;
            let w = cov.preimage(z[0]).unwrap();
            for k in [-1, 2] {
                let wk = cov.deck(w, k);
                let lam = 1.0 / (2.0 * wk.im * cov.derivative(wk).unwrap().norm());
                assert!((lam * lam - exact).abs() < 1e-9 * exact);
            }
        }
    }

    #[test]
    fn outside_points_rejected() {
        let bidisc = ProductDomain::bidisc();
        assert!(eisenman_measure(&bidisc, &[c(1.5, 0.0), c(0.0, 0.0)]).is_err());
        let t = Tangent::new(vec![c(1.5, 0.0), c(0.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        assert!(kobayashi_royden(&bidisc, &t).is_err());
        assert!(ProductDomain::new(vec![]).is_err());
    }
}
