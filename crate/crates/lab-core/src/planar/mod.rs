//! Planar domains, conformal charts, covering maps, and Poincare densities.
//!
//! Six domain variants are supported: the unit disc, general discs, the upper
//! half-plane, infinite sectors, truncated cones, and annuli. Sectors and
//! cones open around the negative real axis. Densities on the reference
//! domains (disc, half-plane) are closed forms; sector and cone densities are
//! pulled back through conformal charts, annulus densities through the
//! universal covering from the half-plane.

mod annulus;
mod chart;
mod density;
mod domain;

pub use annulus::{annulus_covering, circle_density, AnnulusCovering};
pub use chart::{
    cayley_chart, cone_chart, cone_power_chart, disc_chart, sector_chart, ConformalChart,
};
pub use density::poincare_density;
pub use domain::{Membership, PlanarDomain};

pub(crate) use chart::powc;

/// Serde adapter storing a complex number as a `[re, im]` array.
pub mod complex_pair {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(c: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [c.re, c.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}
