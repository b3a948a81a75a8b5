//! Real hypersurfaces in C^2: defining functions, Levi forms, flatness
//! certification, leaf tracing, and the normalization that straightens a
//! graphed surface along its reference disc.
//!
//! A surface is given by a defining function rho with dRho != 0 on the locus
//! rho = 0. Derivatives are Wirtinger derivatives; closed forms come from
//! coefficient tables or hand-written closures and are always cross-checked
//! against finite differences at construction time, so a catalog entry cannot
//! silently disagree with its own evaluator.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};
use crate::planar::{complex_pair, powc};

type EvalFn = dyn Fn(Complex64, Complex64) -> f64 + Send + Sync;
type GradFn = dyn Fn(Complex64, Complex64) -> [Complex64; 2] + Send + Sync;
type HessFn = dyn Fn(Complex64, Complex64) -> [[Complex64; 2]; 2] + Send + Sync;

/// Where the derivative closures of a [`DefiningFunction`] come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// Gradient and Hessian are exact closures (table or hand-written).
    ClosedForm,
    /// Derivatives fall back to central finite differences.
    FiniteDifference,
}

/// One monomial c * z^a zbar^b w^p wbar^q of a Wirtinger coefficient table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WirtingerTerm {
    #[serde(with = "complex_pair")]
    pub coeff: Complex64,
    /// Exponents of (z, zbar, w, wbar) in that order.
    pub powers: [u32; 4],
}

/// Polynomial S in (z, zbar, w, wbar); the surface it defines is Re(S) = 0.
///
/// Tables that are already real-valued are unchanged by the Re; complex
/// tables are really symmetrized, which keeps every table well defined.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WirtingerPoly {
    pub terms: Vec<WirtingerTerm>,
}

impl WirtingerTerm {
    fn eval(&self, z: Complex64, w: Complex64) -> Complex64 {
        self.coeff
            * z.powu(self.powers[0])
            * z.conj().powu(self.powers[1])
            * w.powu(self.powers[2])
            * w.conj().powu(self.powers[3])
    }

    /// Formal derivative in one of the four variables; None when it kills the term.
    fn derive(&self, axis: usize) -> Option<WirtingerTerm> {
        let e = self.powers[axis];
        if e == 0 {
            return None;
        }
        let mut powers = self.powers;
        powers[axis] = e - 1;
        Some(WirtingerTerm { coeff: self.coeff * f64::from(e), powers })
    }
}

impl WirtingerPoly {
    pub fn new(terms: Vec<WirtingerTerm>) -> Self {
        WirtingerPoly { terms }
    }

    fn eval(&self, z: Complex64, w: Complex64) -> Complex64 {
        self.terms.iter().map(|t| t.eval(z, w)).sum()
    }

    fn derive(&self, axis: usize) -> WirtingerPoly {
        WirtingerPoly { terms: self.terms.iter().filter_map(|t| t.derive(axis)).collect() }
    }
}

/// All derivative polynomials of S needed for gradient and Hessian of Re(S).
#[derive(Clone)]
struct PolyDerivatives {
    s: WirtingerPoly,
    s_z: WirtingerPoly,
    s_zb: WirtingerPoly,
    s_w: WirtingerPoly,
    s_wb: WirtingerPoly,
    s_z_zb: WirtingerPoly,
    s_z_wb: WirtingerPoly,
    s_zb_w: WirtingerPoly,
    s_w_wb: WirtingerPoly,
}

impl PolyDerivatives {
    fn build(poly: &WirtingerPoly) -> Self {
        let s_z = poly.derive(0);
        let s_zb = poly.derive(1);
        let s_w = poly.derive(2);
        let s_wb = poly.derive(3);
        PolyDerivatives {
            s_z_zb: s_z.derive(1),
            s_z_wb: s_z.derive(3),
            s_zb_w: s_zb.derive(2),
            s_w_wb: s_w.derive(3),
            s: poly.clone(),
            s_z,
            s_zb,
            s_w,
            s_wb,
        }
    }

    fn value(&self, z: Complex64, w: Complex64) -> f64 {
        self.s.eval(z, w).re
    }

    /// (rho_z, rho_w) for rho = (S + conj S)/2.
    fn gradient(&self, z: Complex64, w: Complex64) -> [Complex64; 2] {
        let rz = (self.s_z.eval(z, w) + self.s_zb.eval(z, w).conj()) * 0.5;
        let rw = (self.s_w.eval(z, w) + self.s_wb.eval(z, w).conj()) * 0.5;
        [rz, rw]
    }

    /// Hermitian matrix of mixed second derivatives d^2 rho / dz_j dzbar_k.
    fn hessian(&self, z: Complex64, w: Complex64) -> [[Complex64; 2]; 2] {
        let zzb = self.s_z_zb.eval(z, w);
        let wwb = self.s_w_wb.eval(z, w);
        let zwb = self.s_z_wb.eval(z, w);
        let zbw = self.s_zb_w.eval(z, w);
        let h_zz = (zzb + zzb.conj()) * 0.5;
        let h_ww = (wwb + wwb.conj()) * 0.5;
        let h_zw = (zwb + zbw.conj()) * 0.5;
        [[h_zz, h_zw], [h_zw.conj(), h_ww]]
    }
}

/// Step for first-order central differences, scaled by coordinate size.
fn fd_step(x: f64) -> f64 {
    1e-5 * (1.0 + x.abs())
}

/// Second differences divide by h^2, so a 1e-5 step would put the rounding
/// error near the cross-check tolerance; widening to 1e-4 keeps it at ~1e-8.
fn fd_step2(x: f64) -> f64 {
    1e-4 * (1.0 + x.abs())
}

/// (rho_z, rho_w) by central differences in the four real coordinates.
pub fn fd_gradient(f: &dyn Fn(Complex64, Complex64) -> f64, z: Complex64, w: Complex64) -> [Complex64; 2] {
    let hx = fd_step(z.re);
    let hy = fd_step(z.im);
    let hu = fd_step(w.re);
    let hv = fd_step(w.im);
    let dx = (f(z + hx, w) - f(z - hx, w)) / (2.0 * hx);
    let dy = (f(z + Complex64::new(0.0, hy), w) - f(z - Complex64::new(0.0, hy), w)) / (2.0 * hy);
    let du = (f(z, w + hu) - f(z, w - hu)) / (2.0 * hu);
    let dv = (f(z, w + Complex64::new(0.0, hv)) - f(z, w - Complex64::new(0.0, hv))) / (2.0 * hv);
    [Complex64::new(dx, -dy) * 0.5, Complex64::new(du, -dv) * 0.5]
}

/// Mixed-derivative Hessian by second differences.
pub fn fd_hessian(f: &dyn Fn(Complex64, Complex64) -> f64, z: Complex64, w: Complex64) -> [[Complex64; 2]; 2] {
    let hx = fd_step2(z.re);
    let hy = fd_step2(z.im);
    let hu = fd_step2(w.re);
    let hv = fd_step2(w.im);
    let ex = Complex64::new(1.0, 0.0);
    let ey = Complex64::new(0.0, 1.0);

    let second = |dz: Complex64, dw: Complex64, h: f64| -> f64 {
        (f(z + dz * h, w + dw * h) - 2.0 * f(z, w) + f(z - dz * h, w - dw * h)) / (h * h)
    };
    let mixed = |da: Complex64, dw_a: Complex64, ha: f64, db: Complex64, dw_b: Complex64, hb: f64| -> f64 {
        (f(z + da * ha + db * hb, w + dw_a * ha + dw_b * hb)
            - f(z + da * ha - db * hb, w + dw_a * ha - dw_b * hb)
            - f(z - da * ha + db * hb, w - dw_a * ha + dw_b * hb)
            + f(z - da * ha - db * hb, w - dw_a * ha - dw_b * hb))
            / (4.0 * ha * hb)
    };
    let zero = Complex64::new(0.0, 0.0);

    let r_xx = second(ex, zero, hx);
    let r_yy = second(ey, zero, hy);
    let r_uu = second(zero, ex, hu);
    let r_vv = second(zero, ey, hv);
    let r_xu = mixed(ex, zero, hx, zero, ex, hu);
    let r_yv = mixed(ey, zero, hy, zero, ey, hv);
    let r_xv = mixed(ex, zero, hx, zero, ey, hv);
    let r_yu = mixed(ey, zero, hy, zero, ex, hu);

    let h_zz = Complex64::new((r_xx + r_yy) / 4.0, 0.0);
    let h_ww = Complex64::new((r_uu + r_vv) / 4.0, 0.0);
    let h_zw = Complex64::new((r_xu + r_yv) / 4.0, (r_xv - r_yu) / 4.0);
    [[h_zz, h_zw], [h_zw.conj(), h_ww]]
}

/// A real-valued function rho on C^2 whose zero set is the surface under study.
pub struct DefiningFunction {
    name: String,
    rho: Box<EvalFn>,
    grad: Option<Box<GradFn>>,
    hess: Option<Box<HessFn>>,
    provenance: Provenance,
}

impl std::fmt::Debug for DefiningFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DefiningFunction")
            .field("name", &self.name)
            .field("provenance", &self.provenance)
            .finish_non_exhaustive()
    }
}

/// Fixed probe points for the construction-time derivative cross-check.
const PROBES: [[(f64, f64); 2]; 3] = [
    [(0.31, 0.17), (-0.23, 0.41)],
    [(-0.5, 0.29), (0.11, -0.37)],
    [(0.05, -0.61), (-0.43, -0.19)],
];

impl DefiningFunction {
    /// Evaluator only; derivatives fall back to finite differences.
    pub fn from_evaluator<F>(name: &str, f: F) -> Self
    where
        F: Fn(Complex64, Complex64) -> f64 + Send + Sync + 'static,
    {
        DefiningFunction {
            name: name.to_string(),
            rho: Box::new(f),
            grad: None,
            hess: None,
            provenance: Provenance::FiniteDifference,
        }
    }

    /// Hand-written closed-form derivatives, cross-checked against finite
    /// differences at fixed probe points before the function is accepted.
    pub fn with_derivatives<F, G, H>(name: &str, f: F, grad: G, hess: H) -> LabResult<Self>
    where
        F: Fn(Complex64, Complex64) -> f64 + Send + Sync + 'static,
        G: Fn(Complex64, Complex64) -> [Complex64; 2] + Send + Sync + 'static,
        H: Fn(Complex64, Complex64) -> [[Complex64; 2]; 2] + Send + Sync + 'static,
    {
        let df = DefiningFunction {
            name: name.to_string(),
            rho: Box::new(f),
            grad: Some(Box::new(grad)),
            hess: Some(Box::new(hess)),
            provenance: Provenance::ClosedForm,
        };
        df.cross_check()?;
        Ok(df)
    }

    /// Surface Re(S) = 0 for a coefficient table S; derivatives are exact.
    pub fn from_poly(name: &str, poly: WirtingerPoly) -> LabResult<Self> {
        if poly.terms.is_empty() {
            return Err(LabError::InvalidConfig(
                "coefficient table has no terms".to_string(),
            ));
        }
        let d = PolyDerivatives::build(&poly);
        let dv = d.clone();
        let dg = d.clone();
        let dh = d;
        let df = DefiningFunction {
            name: name.to_string(),
            rho: Box::new(move |z, w| dv.value(z, w)),
            grad: Some(Box::new(move |z, w| dg.gradient(z, w))),
            hess: Some(Box::new(move |z, w| dh.hessian(z, w))),
            provenance: Provenance::ClosedForm,
        };
        df.cross_check()?;
        Ok(df)
    }

    /// Named members of the built-in catalog; ids are listed by [`catalog_entries`].
    pub fn catalog(id: &str) -> LabResult<Self> {
        match id {
            "re_w" => Self::from_poly(
                id,
                WirtingerPoly::new(vec![term(1.0, 0.0, [0, 0, 1, 0])]),
            ),
            "re_w_minus_z2" => Self::from_poly(
                id,
                WirtingerPoly::new(vec![
                    term(1.0, 0.0, [0, 0, 1, 0]),
                    term(-1.0, 0.0, [2, 0, 0, 0]),
                ]),
            ),
            "sphere" => Self::from_poly(
                id,
                WirtingerPoly::new(vec![
                    term(1.0, 0.0, [1, 1, 0, 0]),
                    term(1.0, 0.0, [0, 0, 1, 1]),
                    term(-1.0, 0.0, [0, 0, 0, 0]),
                ]),
            ),
            "re_w_rotated" => {
                // rho = Re(w e^{-i Im z}); E = e^{-(z - zbar)/2} is that phase.
                let phase = |z: Complex64| (-(z - z.conj()) * 0.5).exp();
                Self::with_derivatives(
                    id,
                    move |z, w| (w * phase(z)).re,
                    move |z, w| {
                        let e = phase(z);
                        [((w * e).conj() - w * e) * 0.25, e * 0.5]
                    },
                    move |z, w| {
                        let e = phase(z);
                        let s_zz = -w * e * 0.25;
                        let h_zz = (s_zz + s_zz.conj()) * 0.5;
                        let h_zw = e.conj() * 0.25;
                        [[h_zz, h_zw], [h_zw.conj(), Complex64::new(0.0, 0.0)]]
                    },
                )
            }
            "re_w_curved" => Self::from_poly(
                id,
                WirtingerPoly::new(vec![
                    term(1.0, 0.0, [0, 0, 1, 0]),
                    term(0.1, 0.0, [1, 1, 0, 0]),
                ]),
            ),
            other => Err(LabError::InvalidConfig(format!(
                "unknown catalog id {other:?}; known ids: {}",
                catalog_entries()
                    .iter()
                    .map(|(id, _)| *id)
                    .collect::<Vec<_>>()
                    .join(", ")
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn value(&self, z: Complex64, w: Complex64) -> f64 {
        (self.rho)(z, w)
    }

    /// (rho_z, rho_w); closed form when available, finite differences otherwise.
    pub fn gradient(&self, z: Complex64, w: Complex64) -> [Complex64; 2] {
        match &self.grad {
            Some(g) => g(z, w),
            None => fd_gradient(&*self.rho, z, w),
        }
    }

    /// Mixed complex Hessian [[r_zzb, r_zwb], [r_wzb, r_wwb]].
    pub fn hessian(&self, z: Complex64, w: Complex64) -> [[Complex64; 2]; 2] {
        match &self.hess {
            Some(h) => h(z, w),
            None => fd_hessian(&*self.rho, z, w),
        }
    }

    fn cross_check(&self) -> LabResult<()> {
        for probe in PROBES {
            let z = Complex64::new(probe[0].0, probe[0].1);
            let w = Complex64::new(probe[1].0, probe[1].1);
            let g = self.gradient(z, w);
            let g_fd = fd_gradient(&*self.rho, z, w);
            for j in 0..2 {
                let err = (g[j] - g_fd[j]).norm();
                if err > 1e-6 * g[j].norm().max(1.0) {
                    return Err(LabError::InvalidConfig(format!(
                        "{}: closed-form gradient disagrees with finite differences \
                         at probe ({z}, {w}): component {j} differs by {err:.3e}",
                        self.name
                    )));
                }
            }
            let h = self.hessian(z, w);
            let h_fd = fd_hessian(&*self.rho, z, w);
            for j in 0..2 {
                for k in 0..2 {
                    let err = (h[j][k] - h_fd[j][k]).norm();
                    if err > 1e-6 * h[j][k].norm().max(1.0) {
                        return Err(LabError::InvalidConfig(format!(
                            "{}: closed-form Hessian disagrees with finite differences \
                             at probe ({z}, {w}): entry ({j},{k}) differs by {err:.3e}",
                            self.name
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

fn term(re: f64, im: f64, powers: [u32; 4]) -> WirtingerTerm {
    WirtingerTerm { coeff: Complex64::new(re, im), powers }
}

/// Catalog ids with one-line descriptions, in a stable order.
pub fn catalog_entries() -> &'static [(&'static str, &'static str)] {
    &[
        ("re_w", "flat hyperplane Re w = 0"),
        ("re_w_minus_z2", "graphed flat surface Re(w - z^2) = 0"),
        ("sphere", "unit sphere |z|^2 + |w|^2 = 1, nowhere flat"),
        ("re_w_rotated", "flat surface Re(w e^{-i Im z}) = 0 with rotating normal"),
        ("re_w_curved", "non-flat graph Re w + 0.1 |z|^2 = 0"),
    ]
}

/// Sign classification of a Levi form value with an explicit zero band.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FormSign {
    Negative,
    Zero,
    Positive,
}

/// Levi form value at a point in a tangent direction.
#[derive(Clone, Copy, Debug)]
pub struct LeviValue {
    pub value: f64,
    pub sign: FormSign,
}

/// Half the width of the band classified as [`FormSign::Zero`].
pub const FORM_ZERO_BAND: f64 = 1e-8;

/// Unit generator of the complex tangent line of {rho = 0} at p.
pub fn complex_tangent(rho: &DefiningFunction, p: [Complex64; 2]) -> LabResult<[Complex64; 2]> {
    let g = rho.gradient(p[0], p[1]);
    let n = (g[0].norm_sqr() + g[1].norm_sqr()).sqrt();
    if n < 1e-12 {
        return Err(LabError::NoDerivative(format!(
            "{}: gradient vanishes at ({}, {})",
            rho.name(),
            p[0],
            p[1]
        )));
    }
    Ok([g[1] / n, -g[0] / n])
}

/// Levi form of rho at p evaluated on the complex tangent vector x.
///
/// p must lie on the surface and x must annihilate the holomorphic gradient;
/// both are checked rather than assumed.
pub fn levi_form(
    rho: &DefiningFunction,
    p: [Complex64; 2],
    x: [Complex64; 2],
) -> LabResult<LeviValue> {
    let r = rho.value(p[0], p[1]);
    if r.abs() >= 1e-10 {
        return Err(LabError::OutsideDomain(format!(
            "point ({}, {}) is not on {{{} = 0}}: value {r:.3e}",
            p[0],
            p[1],
            rho.name()
        )));
    }
    let g = rho.gradient(p[0], p[1]);
    let pairing = g[0] * x[0] + g[1] * x[1];
    let scale = 1.0 + (g[0].norm_sqr() + g[1].norm_sqr()).sqrt()
        * (x[0].norm_sqr() + x[1].norm_sqr()).sqrt();
    if pairing.norm() >= 1e-10 * scale {
        return Err(LabError::InvalidConfig(format!(
            "vector ({}, {}) is not complex tangent at ({}, {}): pairing {:.3e}",
            x[0],
            x[1],
            p[0],
            p[1],
            pairing.norm()
        )));
    }
    let h = rho.hessian(p[0], p[1]);
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..2 {
        for k in 0..2 {
            acc += h[j][k] * x[j] * x[k].conj();
        }
    }
    let value = acc.re;
    let sign = if value.abs() < FORM_ZERO_BAND {
        FormSign::Zero
    } else if value > 0.0 {
        FormSign::Positive
    } else {
        FormSign::Negative
    };
    Ok(LeviValue { value, sign })
}

/// Newton steps along the conjugate gradient until |rho| < tol.
fn project_to_surface(
    rho: &DefiningFunction,
    start: [Complex64; 2],
    tol: f64,
    iters: usize,
) -> Option<[Complex64; 2]> {
    let mut p = start;
    for _ in 0..iters {
        let r = rho.value(p[0], p[1]);
        if r.abs() < tol {
            return Some(p);
        }
        let g = rho.gradient(p[0], p[1]);
        let n2 = g[0].norm_sqr() + g[1].norm_sqr();
        if n2 < 1e-24 {
            return None;
        }
        let scale = -r / (2.0 * n2);
        p[0] += scale * g[0].conj();
        p[1] += scale * g[1].conj();
    }
    if rho.value(p[0], p[1]).abs() < tol {
        Some(p)
    } else {
        None
    }
}

/// Random sampling plan for points of a surface near a center.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SurfaceSampler {
    /// Box center in C^2; draws are uniform in the surrounding box.
    pub center: [(f64, f64); 2],
    pub box_radius: f64,
    pub count: usize,
    pub seed: u64,
}

impl SurfaceSampler {
    pub fn new(center: [Complex64; 2], box_radius: f64, count: usize, seed: u64) -> Self {
        SurfaceSampler {
            center: [(center[0].re, center[0].im), (center[1].re, center[1].im)],
            box_radius,
            count,
            seed,
        }
    }

    pub fn center_point(&self) -> [Complex64; 2] {
        [
            Complex64::new(self.center[0].0, self.center[0].1),
            Complex64::new(self.center[1].0, self.center[1].1),
        ]
    }

    pub fn validate(&self) -> LabResult<()> {
        if !(self.box_radius > 0.0) || !self.box_radius.is_finite() {
            return Err(LabError::InvalidConfig(format!(
                "sampler box radius must be positive and finite, got {}",
                self.box_radius
            )));
        }
        if self.count == 0 {
            return Err(LabError::InvalidConfig(
                "sampler count must be positive".to_string(),
            ));
        }
        Ok(())
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> [Complex64; 2] {
        let c = self.center_point();
        let r = self.box_radius;
        let mut out = c;
        for coord in &mut out {
            *coord += Complex64::new(rng.gen_range(-r..r), rng.gen_range(-r..r));
        }
        out
    }
}

/// Outcome of a sampled Levi-flatness check.
#[derive(Clone, Debug)]
pub struct FlatnessVerdict {
    pub flat: bool,
    /// Levi form value of largest magnitude seen over the samples.
    pub worst_value: f64,
    /// Point realizing `worst_value`.
    pub witness: [Complex64; 2],
    pub samples: usize,
}

/// Samples the surface near the sampler center and tests |Levi form| < tol
/// at every sample; the witness is the maximizing point either way.
pub fn is_levi_flat(
    rho: &DefiningFunction,
    sampler: &SurfaceSampler,
    tol: f64,
) -> LabResult<FlatnessVerdict> {
    sampler.validate()?;
    if !(tol > 0.0) {
        return Err(LabError::InvalidConfig(format!(
            "flatness tolerance must be positive, got {tol}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    let mut accepted = 0usize;
    let mut attempts = 0usize;
    let attempt_cap = 200 * sampler.count.max(1);
    let mut worst_value = 0.0f64;
    let mut witness = sampler.center_point();
    let mut have_witness = false;
    while accepted < sampler.count {
        attempts += 1;
        if attempts > attempt_cap {
            return Err(LabError::InvalidDomain(format!(
                "{}: sampler landed {accepted} of {} points on the surface after \
                 {attempt_cap} attempts; move the box or enlarge it",
                rho.name(),
                sampler.count
            )));
        }
        let Some(p) = project_to_surface(rho, sampler.draw(&mut rng), 1e-12, 50) else {
            continue;
        };
        let x = complex_tangent(rho, p)?;
        let lv = levi_form(rho, p, x)?;
        if !have_witness || lv.value.abs() > worst_value.abs() {
            worst_value = lv.value;
            witness = p;
            have_witness = true;
        }
        accepted += 1;
    }
    Ok(FlatnessVerdict { flat: worst_value.abs() < tol, worst_value, witness, samples: accepted })
}

/// A finite family of defining functions with a common sampling box.
pub struct DefiningSystem {
    pub functions: Vec<DefiningFunction>,
    pub box_center: [Complex64; 2],
    pub box_radius: f64,
}

/// Wedge sizes over one stratum (common zero set of a subset of functions).
#[derive(Clone, Debug, Serialize)]
pub struct StratumReport {
    /// Indices into the system's function list.
    pub indices: Vec<usize>,
    pub samples: usize,
    /// Smallest Gram volume of the real differentials over the samples.
    pub min_real_wedge: f64,
    /// Smallest modulus of the wedge of holomorphic differentials.
    pub min_complex_wedge: f64,
    pub generic: bool,
}

/// Joint Newton (Gauss-Newton) projection onto the common zero set.
fn project_to_stratum(
    funcs: &[&DefiningFunction],
    start: [Complex64; 2],
    tol: f64,
    iters: usize,
) -> Option<[Complex64; 2]> {
    let l = funcs.len();
    let mut p = start;
    for _ in 0..iters {
        let r: Vec<f64> = funcs.iter().map(|f| f.value(p[0], p[1])).collect();
        if r.iter().all(|v| v.abs() < tol) {
            return Some(p);
        }
        let g: Vec<[Complex64; 2]> = funcs.iter().map(|f| f.gradient(p[0], p[1])).collect();
        // M_ab = <dR_a, dR_b> in the real metric; solve M y = -r.
        let mut m = [[0.0f64; 2]; 2];
        for a in 0..l {
            for b in 0..l {
                m[a][b] = 4.0 * (g[a][0] * g[b][0].conj() + g[a][1] * g[b][1].conj()).re;
            }
        }
        let y = match l {
            1 => {
                if m[0][0].abs() < 1e-24 {
                    return None;
                }
                vec![-r[0] / m[0][0]]
            }
            2 => {
                let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
                if det.abs() < 1e-24 {
                    return None;
                }
                vec![
                    (-r[0] * m[1][1] + r[1] * m[0][1]) / det,
                    (-r[1] * m[0][0] + r[0] * m[1][0]) / det,
                ]
            }
            _ => return None,
        };
        for (a, ya) in y.iter().enumerate() {
            p[0] += 2.0 * ya * g[a][0].conj();
            p[1] += 2.0 * ya * g[a][1].conj();
        }
    }
    let ok = funcs.iter().all(|f| f.value(p[0], p[1]).abs() < tol);
    ok.then_some(p)
}

/// Real Gram volume of the differentials dR_a as vectors in R^4.
fn real_wedge(grads: &[[Complex64; 2]]) -> f64 {
    // dR_a as a real 4-vector has squared norm 4(|r_z|^2 + |r_w|^2) and the
    // pairwise inner product is 4 Re(r_z sbar_z + r_w sbar_w).
    match grads.len() {
        1 => 2.0 * (grads[0][0].norm_sqr() + grads[0][1].norm_sqr()).sqrt(),
        2 => {
            let n1 = 4.0 * (grads[0][0].norm_sqr() + grads[0][1].norm_sqr());
            let n2 = 4.0 * (grads[1][0].norm_sqr() + grads[1][1].norm_sqr());
            let dot = 4.0
                * (grads[0][0] * grads[1][0].conj() + grads[0][1] * grads[1][1].conj()).re;
            (n1 * n2 - dot * dot).max(0.0).sqrt()
        }
        _ => 0.0,
    }
}

/// Modulus of the wedge of the holomorphic parts dz-row of the gradients.
fn complex_wedge(grads: &[[Complex64; 2]]) -> f64 {
    match grads.len() {
        1 => (grads[0][0].norm_sqr() + grads[0][1].norm_sqr()).sqrt(),
        2 => (grads[0][0] * grads[1][1] - grads[0][1] * grads[1][0]).norm(),
        _ => 0.0,
    }
}

/// Checks every stratum of size one and two for nondegenerate real and
/// complex wedges over sampled points of the stratum.
pub fn genericity_check(
    system: &DefiningSystem,
    samples_per_stratum: usize,
    seed: u64,
    tol: f64,
) -> LabResult<Vec<StratumReport>> {
    if system.functions.is_empty() {
        return Err(LabError::InvalidConfig(
            "defining system has no functions".to_string(),
        ));
    }
    if samples_per_stratum == 0 {
        return Err(LabError::InvalidConfig(
            "samples per stratum must be positive".to_string(),
        ));
    }
    if !(system.box_radius > 0.0) {
        return Err(LabError::InvalidConfig(format!(
            "box radius must be positive, got {}",
            system.box_radius
        )));
    }
    let m = system.functions.len();
    let mut strata: Vec<Vec<usize>> = (0..m).map(|i| vec![i]).collect();
    for i in 0..m {
        for j in (i + 1)..m {
            strata.push(vec![i, j]);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reports = Vec::with_capacity(strata.len());
    for indices in strata {
        let funcs: Vec<&DefiningFunction> =
            indices.iter().map(|&i| &system.functions[i]).collect();
        let mut accepted = 0usize;
        let mut min_real = f64::INFINITY;
        let mut min_complex = f64::INFINITY;
        let mut attempts = 0usize;
        let cap = 200 * samples_per_stratum;
        // The box center projection leads; it pins the stratum deterministically.
        let mut pending = Some(system.box_center);
        while accepted < samples_per_stratum && attempts <= cap {
            let start = pending.take().unwrap_or_else(|| {
                let r = system.box_radius;
                let mut p = system.box_center;
                for coord in &mut p {
                    *coord += Complex64::new(rng.gen_range(-r..r), rng.gen_range(-r..r));
                }
                p
            });
            attempts += 1;
            let Some(p) = project_to_stratum(&funcs, start, 1e-10, 80) else {
                continue;
            };
            let grads: Vec<[Complex64; 2]> =
                funcs.iter().map(|f| f.gradient(p[0], p[1])).collect();
            min_real = min_real.min(real_wedge(&grads));
            min_complex = min_complex.min(complex_wedge(&grads));
            accepted += 1;
        }
        if accepted == 0 {
            return Err(LabError::InvalidDomain(format!(
                "stratum {indices:?} has no points in the sampling box"
            )));
        }
        reports.push(StratumReport {
            generic: min_real > tol && min_complex > tol,
            indices,
            samples: accepted,
            min_real_wedge: min_real,
            min_complex_wedge: min_complex,
        });
    }
    Ok(reports)
}

/// Parametrized path in the z-plane along which a leaf is traced.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TracePath {
    Segment {
        #[serde(with = "complex_pair")]
        from: Complex64,
        #[serde(with = "complex_pair")]
        to: Complex64,
    },
    Circle {
        #[serde(with = "complex_pair")]
        center: Complex64,
        radius: f64,
    },
    Polyline {
        vertices: Vec<(f64, f64)>,
    },
}

impl TracePath {
    pub fn validate(&self) -> LabResult<()> {
        match self {
            TracePath::Segment { .. } => Ok(()),
            TracePath::Circle { radius, .. } => {
                if *radius > 0.0 && radius.is_finite() {
                    Ok(())
                } else {
                    Err(LabError::InvalidConfig(format!(
                        "circle radius must be positive and finite, got {radius}"
                    )))
                }
            }
            TracePath::Polyline { vertices } => {
                if vertices.len() < 2 {
                    Err(LabError::InvalidConfig(
                        "polyline needs at least two vertices".to_string(),
                    ))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn start(&self) -> Complex64 {
        match self {
            TracePath::Segment { from, .. } => *from,
            TracePath::Circle { center, radius } => center + radius,
            TracePath::Polyline { vertices } => {
                Complex64::new(vertices[0].0, vertices[0].1)
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        match self {
            TracePath::Segment { from, to } => (from - to).norm() < 1e-14,
            TracePath::Circle { .. } => true,
            TracePath::Polyline { vertices } => {
                let a = vertices[0];
                let b = vertices[vertices.len() - 1];
                Complex64::new(a.0 - b.0, a.1 - b.1).norm() < 1e-14
            }
        }
    }

    /// Smooth pieces as (position, velocity) maps of a unit parameter.
    fn pieces(&self) -> Vec<(Complex64, Complex64)> {
        match self {
            TracePath::Segment { from, to } => vec![(*from, to - from)],
            TracePath::Circle { .. } => Vec::new(),
            TracePath::Polyline { vertices } => {
                let pts: Vec<Complex64> =
                    vertices.iter().map(|&(x, y)| Complex64::new(x, y)).collect();
                pts.windows(2).map(|s| (s[0], s[1] - s[0])).collect()
            }
        }
    }
}

/// Integration controls for [`trace_leaf`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepControl {
    /// Runge-Kutta steps over the whole path.
    pub steps: usize,
    /// Largest surface residual tolerated after per-step projection.
    pub residual_tol: f64,
    /// Newton projection iterations per step.
    pub projection_iters: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl { steps: 2000, residual_tol: 1e-8, projection_iters: 3 }
    }
}

/// Recorded leaf over a path: nodes of the base path, graph values, residuals.
#[derive(Clone, Debug)]
pub struct LeafTrace {
    pub zeta: Vec<Complex64>,
    pub w: Vec<Complex64>,
    pub residual: Vec<f64>,
    pub max_residual: f64,
    /// |w(end) - w(start)| for closed paths that completed; the monodromy gap.
    pub loop_defect: Option<f64>,
    /// True when the residual exceeded the tolerance and the trace stopped early.
    pub failed: bool,
}

/// Follows the leaf of {rho = 0} through `start` over the base path: w solves
/// dw/dt = -(rho_z / rho_w) zeta'(t) with per-step projection back to the
/// surface along the w-direction. Errors when the graph condition rho_w != 0
/// breaks; returns a partial trace flagged `failed` when the residual escapes.
pub fn trace_leaf(
    rho: &DefiningFunction,
    start: [Complex64; 2],
    path: &TracePath,
    ctrl: &StepControl,
) -> LabResult<LeafTrace> {
    path.validate()?;
    if ctrl.steps == 0 {
        return Err(LabError::InvalidConfig("step count must be positive".to_string()));
    }
    if !(ctrl.residual_tol > 0.0) {
        return Err(LabError::InvalidConfig(format!(
            "residual tolerance must be positive, got {}",
            ctrl.residual_tol
        )));
    }
    if (path.start() - start[0]).norm() > 1e-9 {
        return Err(LabError::InvalidConfig(format!(
            "start point z = {} does not match the path start {}",
            start[0],
            path.start()
        )));
    }
    let r0 = rho.value(start[0], start[1]);
    if r0.abs() >= 1e-10 {
        return Err(LabError::OutsideDomain(format!(
            "start point is not on {{{} = 0}}: value {r0:.3e}",
            rho.name()
        )));
    }

    // Slope of the graph ODE; errors when |rho_w| degenerates.
    let slope = |zeta: Complex64, dzeta: Complex64, w: Complex64| -> LabResult<Complex64> {
        let g = rho.gradient(zeta, w);
        if g[1].norm() < 1e-12 * (1.0 + g[0].norm()) {
            return Err(LabError::TraceFailed(format!(
                "{}: |d rho/dw| = {:.3e} at ({zeta}, {w}); the surface is not a graph here",
                rho.name(),
                g[1].norm()
            )));
        }
        Ok(-(g[0] / g[1]) * dzeta)
    };

    let project_w = |zeta: Complex64, w: &mut Complex64| -> LabResult<()> {
        for _ in 0..ctrl.projection_iters {
            let r = rho.value(zeta, *w);
            if r.abs() < 1e-14 {
                break;
            }
            let g = rho.gradient(zeta, *w);
            if g[1].norm() < 1e-12 * (1.0 + g[0].norm()) {
                return Err(LabError::TraceFailed(format!(
                    "{}: projection lost the graph direction at ({zeta}, {w})",
                    rho.name()
                )));
            }
            *w += -r * g[1].conj() / (2.0 * g[1].norm_sqr());
        }
        Ok(())
    };

    let mut zeta_nodes = vec![start[0]];
    let mut w_nodes = vec![start[1]];
    let mut residuals = vec![r0.abs()];
    let mut max_residual = r0.abs();
    let mut failed = false;
    let mut w = start[1];

    // (position, velocity) at global parameter t in [0, 1].
    let chart = |t: f64| -> (Complex64, Complex64) {
        match path {
            TracePath::Segment { from, to } => (from + (to - from) * t, to - from),
            TracePath::Circle { center, radius } => {
                let ph = Complex64::from_polar(*radius, TAU * t);
                (center + ph, Complex64::new(0.0, TAU) * ph)
            }
            TracePath::Polyline { .. } => unreachable!("polyline handled piecewise"),
        }
    };

    let advance = |zeta_of: &dyn Fn(f64) -> (Complex64, Complex64),
                   t0: f64,
                   dt: f64,
                   w: &mut Complex64|
     -> LabResult<(Complex64, f64)> {
        let (z1, d1) = zeta_of(t0);
        let k1 = slope(z1, d1, *w)?;
        let (zm, dm) = zeta_of(t0 + 0.5 * dt);
        let k2 = slope(zm, dm, *w + k1 * (0.5 * dt))?;
        let k3 = slope(zm, dm, *w + k2 * (0.5 * dt))?;
        let (z2, d2) = zeta_of(t0 + dt);
        let k4 = slope(z2, d2, *w + k3 * dt)?;
        *w += (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0);
        project_w(z2, w)?;
        let res = rho.value(z2, *w).abs();
        Ok((z2, res))
    };

    match path {
        TracePath::Segment { .. } | TracePath::Circle { .. } => {
            let n = ctrl.steps;
            for i in 0..n {
                let t0 = i as f64 / n as f64;
                let dt = 1.0 / n as f64;
                let (z2, res) = advance(&chart, t0, dt, &mut w)?;
                zeta_nodes.push(z2);
                w_nodes.push(w);
                residuals.push(res);
                max_residual = max_residual.max(res);
                if res > ctrl.residual_tol {
                    failed = true;
                    break;
                }
            }
        }
        TracePath::Polyline { .. } => {
            let pieces = path.pieces();
            let per = (ctrl.steps / pieces.len()).max(1);
            'outer: for (base, vel) in pieces {
                let piece_chart =
                    move |t: f64| -> (Complex64, Complex64) { (base + vel * t, vel) };
                for i in 0..per {
                    let t0 = i as f64 / per as f64;
                    let dt = 1.0 / per as f64;
                    let (z2, res) = advance(&piece_chart, t0, dt, &mut w)?;
                    zeta_nodes.push(z2);
                    w_nodes.push(w);
                    residuals.push(res);
                    max_residual = max_residual.max(res);
                    if res > ctrl.residual_tol {
                        failed = true;
                        break 'outer;
                    }
                }
            }
        }
    }

    let loop_defect = (!failed && path.is_closed())
        .then(|| (w_nodes[w_nodes.len() - 1] - w_nodes[0]).norm());
    Ok(LeafTrace { zeta: zeta_nodes, w: w_nodes, residual: residuals, max_residual, loop_defect, failed })
}

/// Concentric sampling circles inside the unit disc for [`df_normalize`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RadialGrid {
    /// Strictly increasing radii in (0, 1).
    pub radii: Vec<f64>,
    /// Equispaced angular nodes per circle.
    pub nodes: usize,
}

impl Default for RadialGrid {
    fn default() -> Self {
        RadialGrid { radii: vec![0.25, 0.5, 0.75, 0.9], nodes: 256 }
    }
}

impl RadialGrid {
    pub fn validate(&self) -> LabResult<()> {
        if self.radii.len() < 2 {
            return Err(LabError::InvalidConfig(
                "radial grid needs at least two circles".to_string(),
            ));
        }
        for pair in self.radii.windows(2) {
            if !(pair[0] < pair[1]) {
                return Err(LabError::InvalidConfig(format!(
                    "radii must be strictly increasing, got {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        if !(self.radii[0] > 0.0) || !(self.radii[self.radii.len() - 1] < 1.0) {
            return Err(LabError::InvalidConfig(format!(
                "radii must lie in (0, 1), got range [{}, {}]",
                self.radii[0],
                self.radii[self.radii.len() - 1]
            )));
        }
        if self.nodes < 8 || self.nodes % 2 != 0 {
            return Err(LabError::InvalidConfig(format!(
                "node count must be even and at least 8, got {}",
                self.nodes
            )));
        }
        Ok(())
    }
}

/// Result of straightening the normal direction along the reference disc.
#[derive(Clone, Debug)]
pub struct NormalizationResult {
    pub radii: Vec<f64>,
    pub nodes: usize,
    /// Unwrapped normal argument v = arg d(rho)/dw(z, 0) per circle.
    pub v: Vec<Vec<f64>>,
    /// Harmonic conjugate samples u with u(0) = 0, per circle.
    pub u: Vec<Vec<f64>>,
    pub u_origin: f64,
    /// Largest deviation of v from a harmonic extension across the circles.
    pub harmonic_residual: f64,
    /// Taylor coefficients of f with h = e^f the straightening multiplier.
    pub log_coeffs: Vec<Complex64>,
    /// max - min of arg(d(rho)/dw(z,0) / h(z)) over the grid after straightening.
    pub normal_spread: f64,
}

impl NormalizationResult {
    /// f(z) with h = e^f evaluated by Horner's rule.
    pub fn log_multiplier(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.log_coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn multiplier(&self, z: Complex64) -> Complex64 {
        self.log_multiplier(z).exp()
    }

    /// The defining function pulled back through (z, w) -> (z, w / h(z)).
    pub fn transformed_value(&self, rho: &DefiningFunction, z: Complex64, w: Complex64) -> f64 {
        rho.value(z, w / self.multiplier(z))
    }
}

fn principal_angle(d: f64) -> f64 {
    d - TAU * (d / TAU).round()
}

/// Discrete Fourier modes c_n, n = 0..=N/2, of real samples on a circle.
fn dft_modes(values: &[f64]) -> Vec<Complex64> {
    let n = values.len();
    (0..=n / 2)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &v) in values.iter().enumerate() {
                let ang = -TAU * ((k * j) % n) as f64 / n as f64;
                acc += v * Complex64::from_polar(1.0, ang);
            }
            acc / n as f64
        })
        .collect()
}

/// Straightens the w-gradient argument of a surface containing the disc
/// {w = 0}: samples v = arg rho_w(z, 0) on the grid, certifies v harmonic by
/// comparing Fourier modes across circles, builds the harmonic conjugate u
/// with u(0) = 0, and returns h = e^{u + iv-ish} as a Taylor multiplier such
/// that rho(z, w / h(z)) has constant normal argument along the disc.
pub fn df_normalize(rho: &DefiningFunction, grid: &RadialGrid) -> LabResult<NormalizationResult> {
    grid.validate()?;
    let zero = Complex64::new(0.0, 0.0);
    if rho.value(zero, zero).abs() >= 1e-10 {
        return Err(LabError::InvalidConfig(format!(
            "{}: the reference disc w = 0 is not in the surface at z = 0",
            rho.name()
        )));
    }
    let g0 = rho.gradient(zero, zero)[1];
    if g0.norm() < 1e-12 {
        return Err(LabError::NoDerivative(format!(
            "{}: d(rho)/dw vanishes at the origin",
            rho.name()
        )));
    }
    let v0 = g0.arg();
    let n = grid.nodes;

    let mut v_circles: Vec<Vec<f64>> = Vec::with_capacity(grid.radii.len());
    for &s in &grid.radii {
        let mut raw = Vec::with_capacity(n);
        for k in 0..n {
            let z = Complex64::from_polar(s, TAU * k as f64 / n as f64);
            let rv = rho.value(z, zero);
            if rv.abs() >= 1e-10 {
                return Err(LabError::InvalidConfig(format!(
                    "{}: the disc w = 0 leaves the surface at z = {z} (value {rv:.3e})",
                    rho.name()
                )));
            }
            let gw = rho.gradient(z, zero)[1];
            if gw.norm() < 1e-12 {
                return Err(LabError::NoDerivative(format!(
                    "{}: d(rho)/dw vanishes at z = {z} on the reference disc",
                    rho.name()
                )));
            }
            raw.push(gw.arg());
        }
        // Unwrap along the circle and reject a winding normal direction.
        let mut v = Vec::with_capacity(n);
        v.push(raw[0]);
        for k in 1..n {
            let prev = v[k - 1];
            v.push(prev + principal_angle(raw[k] - raw[k - 1]));
        }
        let winding = (v[n - 1] + principal_angle(raw[0] - raw[n - 1]) - v[0]) / TAU;
        if winding.abs() > 0.5 {
            return Err(LabError::NotHarmonic(format!(
                "{}: normal argument winds {winding:.2} times around the circle of radius {s}",
                rho.name()
            )));
        }
        // Align the branch with the center value.
        let mean = v.iter().sum::<f64>() / n as f64;
        let shift = TAU * ((mean - v0) / TAU).round();
        if shift != 0.0 {
            for vk in &mut v {
                *vk -= shift;
            }
        }
        v_circles.push(v);
    }

    let modes: Vec<Vec<Complex64>> = v_circles.iter().map(|v| dft_modes(v)).collect();

    // Harmonicity: the mean must match v(0) and mode n must scale as s^n.
    let mut residual = 0.0f64;
    for m in &modes {
        residual = residual.max((m[0].re - v0).abs());
    }
    for i in 0..grid.radii.len() - 1 {
        let (si, sj) = (grid.radii[i], grid.radii[i + 1]);
        for k in 1..=n / 2 {
            let contracted = modes[i + 1][k] * (si / sj).powi(k as i32);
            residual = residual.max((modes[i][k] - contracted).norm());
        }
    }
    if residual > 1e-6 {
        return Err(LabError::NotHarmonic(format!(
            "{}: normal argument deviates from a harmonic extension by {residual:.3e}",
            rho.name()
        )));
    }

    // Conjugate: v = Im f with f = sum a_k z^k; on |z| = S the mode k >= 1 of
    // Im f is a_k S^k / (2i), so a_k = 2i c_k / S^k; a_0 = i c_0 keeps u(0) = 0.
    // Only modes up to N/4 are inverted: the 1/S^k amplification would turn
    // sampling noise in the top modes into spurious high-order coefficients.
    let s_max = grid.radii[grid.radii.len() - 1];
    let top = &modes[grid.radii.len() - 1];
    let mut log_coeffs = vec![Complex64::new(0.0, top[0].re)];
    for k in 1..=n / 4 {
        if top[k].norm() > 1e-10 {
            log_coeffs.resize(k + 1, Complex64::new(0.0, 0.0));
            log_coeffs[k] = Complex64::new(0.0, 2.0) * top[k] / s_max.powi(k as i32);
        }
    }

    let result_stub = NormalizationResult {
        radii: grid.radii.clone(),
        nodes: n,
        v: v_circles,
        u: Vec::new(),
        u_origin: 0.0,
        harmonic_residual: residual,
        log_coeffs,
        normal_spread: 0.0,
    };

    let mut u_circles = Vec::with_capacity(grid.radii.len());
    let mut spread_min = f64::INFINITY;
    let mut spread_max = f64::NEG_INFINITY;
    let center_q = (g0 / result_stub.multiplier(zero)).arg();
    spread_min = spread_min.min(center_q);
    spread_max = spread_max.max(center_q);
    for &s in &grid.radii {
        let mut u = Vec::with_capacity(n);
        for k in 0..n {
            let z = Complex64::from_polar(s, TAU * k as f64 / n as f64);
            u.push(-result_stub.log_multiplier(z).re);
            let q = (rho.gradient(z, zero)[1] / result_stub.multiplier(z)).arg();
            spread_min = spread_min.min(q);
            spread_max = spread_max.max(q);
        }
        u_circles.push(u);
    }

    Ok(NormalizationResult {
        u: u_circles,
        u_origin: 0.0,
        normal_spread: spread_max - spread_min,
        ..result_stub
    })
}

/// Holomorphic function on the product wedge peaking exactly at the origin:
/// exp(-(-z)^{2/3} - (-w)^{2/3}) with principal fractional powers.
pub fn peak_function(z: Complex64, w: Complex64) -> LabResult<Complex64> {
    let a = powc(-z, 2.0 / 3.0)?;
    let b = powc(-w, 2.0 / 3.0)?;
    Ok((-a - b).exp())
}

/// The product wedge on which the peak bound holds: each coordinate avoids
/// the closed quarter-plane cone around the positive real axis.
pub fn wedge_contains(z: Complex64, w: Complex64) -> bool {
    z.re < z.im.abs() && w.re < w.im.abs()
}

/// Sampling plan for the peak bound check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeakSampleSpec {
    pub count: usize,
    /// Samples are drawn from the wedge intersected with this ball at 0.
    pub radius: f64,
    /// Margin is reported over samples at least this far from the origin.
    pub min_distance: f64,
    pub seed: u64,
}

impl Default for PeakSampleSpec {
    fn default() -> Self {
        PeakSampleSpec { count: 10_000, radius: 0.5, min_distance: 0.1, seed: 11 }
    }
}

impl PeakSampleSpec {
    pub fn validate(&self) -> LabResult<()> {
        if self.count == 0 {
            return Err(LabError::InvalidConfig("sample count must be positive".to_string()));
        }
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(LabError::InvalidConfig(format!(
                "sampling radius must be positive and finite, got {}",
                self.radius
            )));
        }
        if !(self.min_distance > 0.0) || !(self.min_distance < self.radius) {
            return Err(LabError::InvalidConfig(format!(
                "min distance must lie in (0, radius), got {} with radius {}",
                self.min_distance, self.radius
            )));
        }
        Ok(())
    }
}

/// Observed peak behavior over wedge samples.
#[derive(Clone, Debug)]
pub struct PeakReport {
    /// |f(0, 0)|; equals one exactly.
    pub value_at_origin: f64,
    pub samples: usize,
    /// Samples at distance >= min_distance from the origin.
    pub far_samples: usize,
    pub max_modulus_far: f64,
    /// 1 - max_modulus_far.
    pub margin: f64,
    pub max_modulus_all: f64,
    /// Far sample of largest modulus.
    pub witness: [Complex64; 2],
}

/// Samples the wedge ball and verifies the peak bound |f| < 1 away from 0.
pub fn peak_check(spec: &PeakSampleSpec) -> LabResult<PeakReport> {
    spec.validate()?;
    let value_at_origin = peak_function(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))?.norm();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let r = spec.radius;
    let mut accepted = 0usize;
    let mut attempts = 0usize;
    let cap = 400 * spec.count;
    let mut far_samples = 0usize;
    let mut max_far = 0.0f64;
    let mut max_all = 0.0f64;
    let mut witness = [Complex64::new(0.0, 0.0); 2];
    while accepted < spec.count {
        attempts += 1;
        if attempts > cap {
            return Err(LabError::InvalidConfig(format!(
                "wedge sampling accepted only {accepted} of {} points in {cap} attempts",
                spec.count
            )));
        }
        let z = Complex64::new(rng.gen_range(-r..r), rng.gen_range(-r..r));
        let w = Complex64::new(rng.gen_range(-r..r), rng.gen_range(-r..r));
        let dist = (z.norm_sqr() + w.norm_sqr()).sqrt();
        if dist > r || !wedge_contains(z, w) {
            continue;
        }
        accepted += 1;
        let modulus = peak_function(z, w)?.norm();
        max_all = max_all.max(modulus);
        if dist >= spec.min_distance {
            far_samples += 1;
            if modulus > max_far {
                max_far = modulus;
                witness = [z, w];
            }
        }
    }
    if far_samples == 0 {
        return Err(LabError::InvalidConfig(format!(
            "no sample reached distance {} from the origin; lower min_distance",
            spec.min_distance
        )));
    }
    Ok(PeakReport {
        value_at_origin,
        samples: accepted,
        far_samples,
        max_modulus_far: max_far,
        margin: 1.0 - max_far,
        max_modulus_all: max_all,
        witness,
    })
}

#[cfg(test)]
mod tests;
