//! Distance-decreasing checks for holomorphic maps.
//!
//! Every holomorphic f: D1 -> D2 must satisfy
//!   F^K_{D1}(z, v)  >=  F^K_{D2}(f(z), f'(z) v)
//!   M^E_{D1}(z)     >=  M^E_{D2}(f(z)) |det f'(z)|^2
//! and the same inequality for the Caratheodory measure. The checker never
//! assumes these laws: it evaluates both sides and reports every violation
//! beyond tolerance together with the worst observed slack.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{LabError, LabResult};
use crate::metrics::map::{bidisc_automorphism, disc_automorphism, random_wiener_poly};
use crate::metrics::{
    caratheodory_measure, eisenman_measure, kobayashi_royden, HoloMap, MapComponent, Poly,
    ProductDomain, Tangent,
};
use crate::planar::PlanarDomain;

/// Relative slack below which a deficit counts as a violation.
const DECREASE_TOL: f64 = 1e-8;

/// One recorded failure of a decrease inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct DecreaseViolation {
    pub sample_index: usize,
    /// "kobayashi", "eisenman" or "caratheodory".
    pub kind: &'static str,
    pub source_value: f64,
    pub target_value: f64,
    /// source_value - target_value; negative beyond tolerance.
    pub slack: f64,
}

/// Outcome of a decrease audit over a batch of tangent samples.
#[derive(Debug, Clone, PartialEq)]
pub struct DecreaseReport {
    pub samples: usize,
    pub metric_checked: usize,
    pub eisenman_checked: usize,
    pub caratheodory_checked: usize,
    /// Samples skipped because one side lacks a closed form (annulus
    /// Caratheodory) or the image landed on the target boundary.
    pub skipped: usize,
    pub violations: Vec<DecreaseViolation>,
    pub worst_metric_slack: f64,
    pub worst_eisenman_slack: f64,
    pub worst_caratheodory_slack: f64,
}

impl DecreaseReport {
    pub fn clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Audits the decrease inequalities for `f` over the given tangent samples.
/// Errors if `f` maps a sample materially outside its target (margin below
/// -1e-8); images within tolerance of the boundary are skipped, not failed.
pub fn check_decreasing(f: &HoloMap, samples: &[Tangent]) -> LabResult<DecreaseReport> {
    let mut report = DecreaseReport {
        samples: samples.len(),
        metric_checked: 0,
        eisenman_checked: 0,
        caratheodory_checked: 0,
        skipped: 0,
        violations: Vec::new(),
        worst_metric_slack: f64::INFINITY,
        worst_eisenman_slack: f64::INFINITY,
        worst_caratheodory_slack: f64::INFINITY,
    };
    let source_sc = f.source().is_simply_connected();
    for (i, t) in samples.iter().enumerate() {
        f.source().check_dim(t.dim())?;
        let image = f.eval(&t.point)?;
        let image_margin = f.target().contains(&image)?.margin;
        if image_margin <= 0.0 {
            if image_margin < -DECREASE_TOL {
                return Err(LabError::OutsideDomain(format!(
                    "map sends sample {i} outside the target (margin {image_margin})"
                )));
            }
            report.skipped += 1;
            continue;
        }

        let pushed = f.pushforward(t)?;
        let lhs = kobayashi_royden(f.source(), t)?;
        let rhs = kobayashi_royden(f.target(), &pushed)?;
        record(&mut report, i, "kobayashi", lhs, rhs);
        report.metric_checked += 1;

        let det2 = f.det_jacobian(&t.point)?.norm_sqr();
        let lhs = eisenman_measure(f.source(), &t.point)?.value;
        let rhs = eisenman_measure(f.target(), &image)?.value * det2;
        record(&mut report, i, "eisenman", lhs, rhs);
        report.eisenman_checked += 1;

        // Caratheodory needs closed forms on both sides.
        if source_sc && f.target().is_simply_connected() {
            let lhs = caratheodory_measure(f.source(), &t.point)?.value;
            let rhs = caratheodory_measure(f.target(), &image)?.value * det2;
            record(&mut report, i, "caratheodory", lhs, rhs);
            report.caratheodory_checked += 1;
        } else {
            report.skipped += 1;
        }
    }
    Ok(report)
}

fn record(report: &mut DecreaseReport, index: usize, kind: &'static str, lhs: f64, rhs: f64) {
    let slack = lhs - rhs;
    let worst = match kind {
        "kobayashi" => &mut report.worst_metric_slack,
        "eisenman" => &mut report.worst_eisenman_slack,
        _ => &mut report.worst_caratheodory_slack,
    };
    *worst = worst.min(slack);
    if slack < -DECREASE_TOL * rhs.abs().max(1.0) {
        report.violations.push(DecreaseViolation {
            sample_index: index,
            kind,
            source_value: lhs,
            target_value: rhs,
            slack,
        });
    }
}

/// Draws tangent samples on `domain`: random interior points with random
/// box-distributed vectors, every fourth vector an axis direction.
pub fn sample_tangents(
    domain: &ProductDomain,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Tangent> {
    (0..count)
        .map(|k| {
            let point = domain.sample_point(rng);
            let vector = if k % 4 == 3 {
                let mut v = vec![Complex64::new(0.0, 0.0); domain.dim()];
                v[k / 4 % domain.dim()] = Complex64::new(1.0, 0.0);
                v
            } else {
                (0..domain.dim())
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect()
            };
            Tangent::new(point, vector).expect("dimensions match by construction")
        })
        .collect()
}

/// Draws one holomorphic map with a certified feasibility margin, plus a
/// tangent sample at a random source point. Families: disc and bidisc
/// automorphisms, coefficient-mass-bounded polynomial self-maps of disc
/// products, and mass-bounded polynomial maps from bounded factors (discs,
/// truncated cones, annuli) into disc products.
pub fn random_feasible_pair(rng: &mut ChaCha8Rng) -> (HoloMap, Tangent) {
    let family = rng.gen_range(0..6u32);
    let map = match family {
        0 => {
            let a = sample_disc(rng, 0.85);
            disc_automorphism(a, rng.gen_range(0.0..std::f64::consts::TAU))
        }
        1 => {
            let a1 = sample_disc(rng, 0.85);
            let a2 = sample_disc(rng, 0.85);
            let p1 = Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
            let p2 = Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
            bidisc_automorphism(a1, a2, [p1, p2])
        }
        2 => {
            let mass = rng.gen_range(0.3..0.95);
            let deg = rng.gen_range(1..=4);
            HoloMap::new(
                ProductDomain::unit_disc(),
                ProductDomain::unit_disc(),
                vec![MapComponent::Poly(random_wiener_poly(rng, 1, deg, mass))],
            )
        }
        3 => {
            let deg = rng.gen_range(1..=3);
            let comps = (0..2)
                .map(|_| {
                    let mass = rng.gen_range(0.3..0.95);
                    MapComponent::Poly(random_wiener_poly(rng, 2, deg, mass))
                })
                .collect();
            HoloMap::new(ProductDomain::bidisc(), ProductDomain::bidisc(), comps)
        }
        4 => {
            let factor = sample_bounded_factor(rng);
            let comp = mass_bounded_component(rng, &[factor.clone()], 4);
            HoloMap::new(
                ProductDomain::single(factor).expect("factor is valid"),
                ProductDomain::unit_disc(),
                vec![comp],
            )
        }
        _ => {
            let f1 = sample_bounded_factor(rng);
            let f2 = sample_bounded_factor(rng);
            let factors = [f1, f2];
            let comps = (0..2).map(|_| mass_bounded_component(rng, &factors, 3)).collect();
            HoloMap::new(
                ProductDomain::new(factors.to_vec()).expect("factors are valid"),
                ProductDomain::bidisc(),
                comps,
            )
        }
    }
    .expect("generator families construct valid maps");
    let tangent = sample_tangents(map.source(), 1, rng).pop().expect("one sample");
    (map, tangent)
}

fn sample_disc(rng: &mut ChaCha8Rng, radius: f64) -> Complex64 {
    loop {
        let z = Complex64::new(rng.gen_range(-radius..radius), rng.gen_range(-radius..radius));
        if z.norm() < radius {
            return z;
        }
    }
}

fn sample_bounded_factor(rng: &mut ChaCha8Rng) -> PlanarDomain {
    match rng.gen_range(0..4u32) {
        0 => PlanarDomain::UnitDisc,
        1 => {
            let c = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            PlanarDomain::disc(c, rng.gen_range(0.2..1.5)).expect("positive radius")
        }
        2 => PlanarDomain::truncated_cone(
            rng.gen_range(0.3..std::f64::consts::PI - 0.1),
            rng.gen_range(0.5..2.0),
        )
        .expect("aperture and cutoff in range"),
        _ => {
            let r1 = rng.gen_range(0.5..1.5);
            PlanarDomain::annulus(r1, r1 * rng.gen_range(1.5..4.0)).expect("ordered radii")
        }
    }
}

/// Polynomial component whose coefficient mass, weighted by per-variable
/// sup bounds on the source closure, is below 1: the image of the source
/// stays in the unit disc with margin 1 - mass.
fn mass_bounded_component(
    rng: &mut ChaCha8Rng,
    factors: &[PlanarDomain],
    max_degree: u32,
) -> MapComponent {
    let sups: Vec<f64> = factors
        .iter()
        .map(|f| {
            let (center, radius) = f.enclosing_disc().expect("bounded factors only");
            center.norm() + radius
        })
        .collect();
    let raw = random_wiener_poly(rng, factors.len(), max_degree, 1.0);
    let mass = rng.gen_range(0.3..0.95);
    let weight: f64 = raw
        .terms()
        .iter()
        .map(|(idx, c)| {
            c.norm() * idx.iter().zip(&sups).map(|(&p, s)| s.powi(p as i32)).product::<f64>()
        })
        .sum();
    let scale = if weight > 0.0 { mass / weight } else { 0.0 };
    let terms = raw
        .terms()
        .iter()
        .map(|(idx, c)| (idx.clone(), c * scale))
        .collect();
    MapComponent::Poly(Poly::new(factors.len(), terms).expect("indices sized by construction"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn squaring_map_decrease_values() {
        // f(z) = z^2 at z = 1/2: source metric 4/3, target metric 16/15.
        let f = HoloMap::new(
            ProductDomain::unit_disc(),
            ProductDomain::unit_disc(),
            vec![MapComponent::Poly(Poly::new(1, vec![(vec![2], c(1.0, 0.0))]).unwrap())],
        )
        .unwrap();
        let t = Tangent::new(vec![c(0.5, 0.0)], vec![c(1.0, 0.0)]).unwrap();
        let lhs = kobayashi_royden(f.source(), &t).unwrap();
        let pushed = f.pushforward(&t).unwrap();
        let rhs = kobayashi_royden(f.target(), &pushed).unwrap();
        assert!((lhs - 4.0 / 3.0).abs() < 1e-15);
        assert!((rhs - 16.0 / 15.0).abs() < 1e-15);
        let report = check_decreasing(&f, &[t]).unwrap();
        assert!(report.clean());
        assert!((report.worst_metric_slack - (4.0 / 3.0 - 16.0 / 15.0)).abs() < 1e-14);
    }

    #[test]
    fn automorphisms_achieve_equality() {
        // Slacks are stored as absolute differences, so keep points and
        // parameters away from the boundary: the metric magnitudes stay
        // moderate and exact equality shows up below 1e-9.
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..20 {
            let f = bidisc_automorphism(
                sample_disc(&mut rng, 0.6),
                sample_disc(&mut rng, 0.6),
                [
                    Complex64::from_polar(1.0, rng.gen_range(0.0..6.28)),
                    Complex64::from_polar(1.0, rng.gen_range(0.0..6.28)),
                ],
            )
            .unwrap();
            let samples: Vec<Tangent> = (0..10)
                .map(|_| {
                    let point = (0..2).map(|_| sample_disc(&mut rng, 0.7)).collect();
                    let vector = (0..2)
                        .map(|_| {
                            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                        })
                        .collect();
                    Tangent::new(point, vector).unwrap()
                })
                .collect();
            let report = check_decreasing(&f, &samples).unwrap();
            assert!(report.clean());
            // Biholomorphisms preserve both metric and measures.
            assert!(report.worst_metric_slack.abs() < 1e-10);
            assert!(report.worst_eisenman_slack.abs() < 1e-9);
            assert!(report.worst_caratheodory_slack.abs() < 1e-9);
        }
    }

    #[test]
    fn random_pairs_have_no_violations() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut checked = 0usize;
        for _ in 0..200 {
            let (map, tangent) = random_feasible_pair(&mut rng);
            let report = check_decreasing(&map, &[tangent]).unwrap();
            assert!(
                report.clean(),
                "violations: {:?}",
                report.violations
            );
            checked += report.metric_checked + report.eisenman_checked;
        }
        assert!(checked >= 390, "generator produced too many skips: {checked}");
    }

    #[test]
    fn infeasible_map_is_an_error() {
        let f = HoloMap::new(
            ProductDomain::unit_disc(),
            ProductDomain::unit_disc(),
            vec![MapComponent::Poly(
                Poly::new(1, vec![(vec![0], c(0.8, 0.0)), (vec![1], c(0.5, 0.0))]).unwrap(),
            )],
        )
        .unwrap();
        let t = Tangent::new(vec![c(0.9, 0.0)], vec![c(1.0, 0.0)]).unwrap();
        assert!(check_decreasing(&f, &[t]).is_err());
    }

    #[test]
    fn annulus_source_skips_caratheodory_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let ann = PlanarDomain::annulus(1.0, 4.0).unwrap();
        let comp = mass_bounded_component(&mut rng, &[ann.clone()], 3);
        let f = HoloMap::new(
            ProductDomain::single(ann).unwrap(),
            ProductDomain::unit_disc(),
            vec![comp],
        )
        .unwrap();
        let samples = sample_tangents(f.source(), 16, &mut rng);
        let report = check_decreasing(&f, &samples).unwrap();
        assert!(report.clean());
        assert_eq!(report.metric_checked, 16);
        assert_eq!(report.eisenman_checked, 16);
        assert_eq!(report.caratheodory_checked, 0);
        assert_eq!(report.skipped, 16);
    }
}

#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // Decrease holds for every generator draw, not just the frozen seeds.
        #[test]
        fn decrease_holds_for_generator(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (map, tangent) = random_feasible_pair(&mut rng);
            let report = check_decreasing(&map, &[tangent]).unwrap();
            prop_assert!(report.clean(), "violations: {:?}", report.violations);
        }

        // Mass-bounded polynomial self-maps of the disc stay feasible.
        #[test]
        fn wiener_mass_maps_are_feasible(seed in any::<u64>(), mass in 0.05f64..0.95) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = HoloMap::new(
                ProductDomain::unit_disc(),
                ProductDomain::unit_disc(),
                vec![MapComponent::Poly(random_wiener_poly(&mut rng, 1, 4, mass))],
            ).unwrap();
            let margin = f.grid_feasibility_margin(32).unwrap();
            prop_assert!(margin >= (1.0 - mass) - 1e-12);
        }
    }
}
