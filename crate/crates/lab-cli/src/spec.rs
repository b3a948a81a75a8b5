//! Experiment specifications: payload schemas, defaults, canonical
//! serialization, and the run hash.
//!
//! A spec file holds one experiment object or an array of them. Every
//! payload field has a default, so `{"id": "peak-check"}` is a complete
//! spec. Unknown ids and unknown payload keys are rejected up front, before
//! any experiment runs.

use std::f64::consts::PI;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use lab_core::cones::ProductShape;
use lab_core::leviflat::{DefiningFunction, TracePath, WirtingerPoly, WirtingerTerm};
use lab_core::planar::PlanarDomain;
use num_complex::Complex64;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::jval::JVal;

/// Experiment identifiers, in the order `list` prints them.
pub const EXPERIMENT_IDS: [&str; 8] = [
    "ratio-limit",
    "cone-density",
    "oracle-compare",
    "product-sandwich",
    "foliation-trace",
    "df-normalize",
    "peak-check",
    "annulus-gap",
];

/// One-line description per experiment, aligned with [`EXPERIMENT_IDS`].
pub const EXPERIMENT_DESCRIPTIONS: [&str; 8] = [
    "boundary ratio of cone measures, Richardson-extrapolated against its closed-form limit",
    "cone density audit: printed closed form vs chart pullback, dilation invariance, small-radius law",
    "optimizer lower/upper bounds sandwiching the closed-form measure on a product domain",
    "product sandwich: outer Caratheodory over inner Eisenman ratio driven to 1 along a cone schedule",
    "leaf trace of a Levi-flat surface over a base path, with loop monodromy defect",
    "straightening multiplier h = e^f from boundary normal arguments on radial circles",
    "peak function on the wedge product: modulus bound away from the origin",
    "Caratheodory lower bound vs exact Eisenman on a disc-annulus product: the measure gap",
];

/// Default output directory when neither the spec nor the flags name one.
pub const DEFAULT_OUT: &str = "lab-out";

/// Complex number as a [re, im] pair in JSON.
#[derive(Debug, Clone, Copy, Deserialize)]
pub struct Pair(pub f64, pub f64);

impl Pair {
    pub fn c(&self) -> Complex64 {
        Complex64::new(self.0, self.1)
    }
}

/// Two-cone boundary ratio experiment payload.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RatioPayload {
    pub theta1: f64,
    pub theta2: f64,
    pub alpha: f64,
    /// When true the angle drifts toward alpha as alpha*(1 - 1/(j+1)).
    pub angle_approach: bool,
    pub eps1: f64,
    pub eps2: f64,
    pub r0: f64,
    pub q: f64,
    pub count: usize,
    pub tol: f64,
}

impl Default for RatioPayload {
    fn default() -> Self {
        RatioPayload {
            theta1: PI / 3.0,
            theta2: 2.0 * PI / 3.0,
            alpha: 0.0,
            angle_approach: false,
            eps1: 1.0,
            eps2: 1.0,
            r0: 1.0,
            q: 0.5,
            count: 41,
            tol: 1e-3,
        }
    }
}

impl RatioPayload {
    pub fn canonical(&self) -> JVal {
        JVal::Obj(vec![
            ("theta1", JVal::Num(self.theta1)),
            ("theta2", JVal::Num(self.theta2)),
            ("alpha", JVal::Num(self.alpha)),
            ("angle_approach", JVal::Bool(self.angle_approach)),
            ("eps1", JVal::Num(self.eps1)),
            ("eps2", JVal::Num(self.eps2)),
            ("r0", JVal::Num(self.r0)),
            ("q", JVal::Num(self.q)),
            ("count", JVal::Int(self.count as i64)),
            ("tol", JVal::Num(self.tol)),
        ])
    }
}

/// Cone density audit payload.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConePayload {
    pub theta: f64,
    pub eps: f64,
    /// Grid is `grid` radii by `grid` angles.
    pub grid: usize,
    pub dilation_scale: f64,
    pub dilation_tol: f64,
    /// Small-radius probe at r = asymptote_r * eps.
    pub asymptote_r: f64,
    pub asymptote_tol: f64,
}

impl Default for ConePayload {
    fn default() -> Self {
        ConePayload {
            theta: PI / 3.0,
            eps: 1.0,
            grid: 20,
            dilation_scale: 2.0,
            dilation_tol: 1e-10,
            asymptote_r: 1e-6,
            asymptote_tol: 1e-4,
        }
    }
}

impl ConePayload {
    pub fn canonical(&self) -> JVal {
        JVal::Obj(vec![
            ("theta", JVal::Num(self.theta)),
            ("eps", JVal::Num(self.eps)),
            ("grid", JVal::Int(self.grid as i64)),
            ("dilation_scale", JVal::Num(self.dilation_scale)),
            ("dilation_tol", JVal::Num(self.dilation_tol)),
            ("asymptote_r", JVal::Num(self.asymptote_r)),
            ("asymptote_tol", JVal::Num(self.asymptote_tol)),
        ])
    }
}

/// Oracle-vs-closed-form payload.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OraclePayload {
    /// Planar factors of the product domain.
    pub factors: Vec<PlanarDomain>,
    /// Evaluation point, one [re, im] pair per factor.
    pub point: Vec<Pair>,
    pub degree: usize,
    pub restarts: usize,
    pub grid: usize,
    pub seed: u64,
    pub max_evals: u64,
    /// Two-sided relative gate for the oracle bounds.
    pub rel_tol: f64,
}

impl Default for OraclePayload {
    fn default() -> Self {
        let defaults = lab_core::oracle::OptimizerConfig::default();
        OraclePayload {
            factors: vec![PlanarDomain::UnitDisc, PlanarDomain::UnitDisc],
            point: vec![Pair(0.0, 0.0), Pair(0.0, 0.0)],
            degree: defaults.degree,
            restarts: defaults.restarts,
            grid: defaults.grid,
            seed: defaults.seed,
            max_evals: defaults.max_evals,
            rel_tol: 0.02,
        }
    }
}

impl OraclePayload {
    pub fn canonical(&self) -> JVal {
        JVal::Obj(vec![
            ("factors", JVal::Arr(self.factors.iter().map(domain_jval).collect())),
            (
                "point",
                JVal::Arr(self.point.iter().map(|p| JVal::complex(p.c())).collect()),
            ),
            ("degree", JVal::Int(self.degree as i64)),
            ("restarts", JVal::Int(self.restarts as i64)),
            ("grid", JVal::Int(self.grid as i64)),
            ("seed", JVal::UInt(self.seed)),
            ("max_evals", JVal::UInt(self.max_evals)),
            ("rel_tol", JVal::Num(self.rel_tol)),
        ])
    }
}

/// Product sandwich payload; mirrors the sandwich configuration plus the
/// final-stage ratio gate.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SandwichPayload {
    pub shape: ProductShape,
    pub ms: Vec<u32>,
    pub angle_gap: f64,
    pub eps_outer_factor: f64,
    pub eps_inner_factor: f64,
    pub seq_r0_factor: f64,
    pub seq_q: f64,
    pub seq_count: usize,
    pub ratio_floor: f64,
}

impl Default for SandwichPayload {
    fn default() -> Self {
        let base = lab_core::cones::SandwichConfig::default();
        SandwichPayload {
            shape: base.shape,
            ms: base.ms,
            angle_gap: base.angle_gap,
            eps_outer_factor: base.eps_outer_factor,
            eps_inner_factor: base.eps_inner_factor,
            seq_r0_factor: base.seq_r0_factor,
            seq_q: base.seq_q,
            seq_count: base.seq_count,
            ratio_floor: 0.995,
        }
    }
}

impl SandwichPayload {
    pub fn canonical(&self) -> JVal {
        let shape = match self.shape {
            ProductShape::ConeCone => JVal::Obj(vec![("kind", JVal::str("cone_cone"))]),
            ProductShape::DiscCone { disc_radius } => JVal::Obj(vec![
                ("kind", JVal::str("disc_cone")),
                ("disc_radius", JVal::Num(disc_radius)),
            ]),
        };
        JVal::Obj(vec![
            ("shape", shape),
            ("ms", JVal::Arr(self.ms.iter().map(|&m| JVal::Int(m as i64)).collect())),
            ("angle_gap", JVal::Num(self.angle_gap)),
            ("eps_outer_factor", JVal::Num(self.eps_outer_factor)),
            ("eps_inner_factor", JVal::Num(self.eps_inner_factor)),
            ("seq_r0_factor", JVal::Num(self.seq_r0_factor)),
            ("seq_q", JVal::Num(self.seq_q)),
            ("seq_count", JVal::Int(self.seq_count as i64)),
            ("ratio_floor", JVal::Num(self.ratio_floor)),
        ])
    }
}

/// A defining function referenced either by catalog id or by an explicit
/// coefficient table.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum FunctionSpec {
    Catalog(CatalogRef),
    Poly(PolyRef),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogRef {
    pub catalog: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyRef {
    #[serde(default)]
    pub name: Option<String>,
    pub poly: Vec<WirtingerTerm>,
}

impl FunctionSpec {
    pub fn catalog(id: &str) -> FunctionSpec {
        FunctionSpec::Catalog(CatalogRef { catalog: id.to_string() })
    }

    pub fn build(&self) -> Result<DefiningFunction> {
        match self {
            FunctionSpec::Catalog(c) => DefiningFunction::catalog(&c.catalog)
                .with_context(|| format!("catalog lookup for \"{}\"", c.catalog)),
            FunctionSpec::Poly(p) => {
                let name = p.name.as_deref().unwrap_or("poly");
                DefiningFunction::from_poly(name, WirtingerPoly::new(p.poly.clone()))
                    .context("building the defining function from the coefficient table")
            }
        }
    }

    pub fn canonical(&self) -> JVal {
        match self {
            FunctionSpec::Catalog(c) => {
                JVal::Obj(vec![("catalog", JVal::str(c.catalog.clone()))])
            }
            FunctionSpec::Poly(p) => {
                let terms = p
                    .poly
                    .iter()
                    .map(|t| {
                        JVal::Obj(vec![
                            ("coeff", JVal::complex(t.coeff)),
                            (
                                "powers",
                                JVal::Arr(
                                    t.powers.iter().map(|&k| JVal::Int(k as i64)).collect(),
                                ),
                            ),
                        ])
                    })
                    .collect();
                let mut fields = Vec::new();
                if let Some(name) = &p.name {
                    fields.push(("name", JVal::str(name.clone())));
                }
                fields.push(("poly", JVal::Arr(terms)));
                JVal::Obj(fields)
            }
        }
    }

    /// Short label for summaries and console lines.
    pub fn label(&self) -> String {
        match self {
            FunctionSpec::Catalog(c) => c.catalog.clone(),
            FunctionSpec::Poly(p) => p.name.clone().unwrap_or_else(|| "poly".to_string()),
        }
    }
}

/// Leaf trace payload.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TracePayload {
    pub function: FunctionSpec,
    /// Starting surface point, [z, w] as [re, im] pairs.
    pub start: [Pair; 2],
    pub path: TracePath,
    pub steps: usize,
    pub residual_tol: f64,
    pub projection_iters: usize,
    /// Gate on the loop defect of closed paths.
    pub defect_tol: f64,
}

impl Default for TracePayload {
    fn default() -> Self {
        TracePayload {
            function: FunctionSpec::catalog("re_w_minus_z2"),
            start: [Pair(1.0, 0.0), Pair(1.0, 0.0)],
            path: TracePath::Circle { center: Complex64::new(0.0, 0.0), radius: 1.0 },
            steps: 2000,
            residual_tol: 1e-8,
            projection_iters: 3,
            defect_tol: 1e-8,
        }
    }
}

impl TracePayload {
    pub fn canonical(&self) -> JVal {
        let path = match &self.path {
            TracePath::Segment { from, to } => JVal::Obj(vec![
                ("kind", JVal::str("segment")),
                ("from", JVal::complex(*from)),
                ("to", JVal::complex(*to)),
            ]),
            TracePath::Circle { center, radius } => JVal::Obj(vec![
                ("kind", JVal::str("circle")),
                ("center", JVal::complex(*center)),
                ("radius", JVal::Num(*radius)),
            ]),
            TracePath::Polyline { vertices } => JVal::Obj(vec![
                ("kind", JVal::str("polyline")),
                (
                    "vertices",
                    JVal::Arr(
                        vertices
                            .iter()
                            .map(|&(x, y)| JVal::Arr(vec![JVal::Num(x), JVal::Num(y)]))
                            .collect(),
                    ),
                ),
            ]),
        };
        JVal::Obj(vec![
            ("function", self.function.canonical()),
            (
                "start",
                JVal::Arr(vec![
                    JVal::complex(self.start[0].c()),
                    JVal::complex(self.start[1].c()),
                ]),
            ),
            ("path", path),
            ("steps", JVal::Int(self.steps as i64)),
            ("residual_tol", JVal::Num(self.residual_tol)),
            ("projection_iters", JVal::Int(self.projection_iters as i64)),
            ("defect_tol", JVal::Num(self.defect_tol)),
        ])
    }
}

/// Straightening payload.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormalizePayload {
    pub function: FunctionSpec,
    pub radii: Vec<f64>,
    pub nodes: usize,
    pub spread_tol: f64,
}

impl Default for NormalizePayload {
    fn default() -> Self {
        let grid = lab_core::leviflat::RadialGrid::default();
        NormalizePayload {
            function: FunctionSpec::catalog("re_w_rotated"),
            radii: grid.radii,
            nodes: grid.nodes,
            spread_tol: 1e-8,
        }
    }
}

impl NormalizePayload {
    pub fn canonical(&self) -> JVal {
        JVal::Obj(vec![
            ("function", self.function.canonical()),
            ("radii", JVal::Arr(self.radii.iter().map(|&r| JVal::Num(r)).collect())),
            ("nodes", JVal::Int(self.nodes as i64)),
            ("spread_tol", JVal::Num(self.spread_tol)),
        ])
    }
}

/// Peak bound payload; mirrors the sampler configuration.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PeakPayload {
    pub count: usize,
    pub radius: f64,
    pub min_distance: f64,
    pub seed: u64,
}

impl Default for PeakPayload {
    fn default() -> Self {
        let base = lab_core::leviflat::PeakSampleSpec::default();
        PeakPayload {
            count: base.count,
            radius: base.radius,
            min_distance: base.min_distance,
            seed: base.seed,
        }
    }
}

impl PeakPayload {
    pub fn canonical(&self) -> JVal {
        JVal::Obj(vec![
            ("count", JVal::Int(self.count as i64)),
            ("radius", JVal::Num(self.radius)),
            ("min_distance", JVal::Num(self.min_distance)),
            ("seed", JVal::UInt(self.seed)),
        ])
    }
}

/// Disc-annulus gap payload.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GapPayload {
    pub r_inner: f64,
    pub r_outer: f64,
    /// Point in the disc factor.
    pub disc_point: Pair,
    /// Point in the annulus factor.
    pub annulus_point: Pair,
    pub degree: usize,
    pub restarts: usize,
    pub grid: usize,
    pub seed: u64,
    pub max_evals: u64,
}

impl Default for GapPayload {
    fn default() -> Self {
        let cfg = lab_core::oracle::OptimizerConfig::measure_default();
        GapPayload {
            r_inner: 1.0,
            r_outer: 4.0,
            disc_point: Pair(0.0, 0.0),
            annulus_point: Pair(2.0, 0.0),
            degree: cfg.degree,
            restarts: cfg.restarts,
            grid: cfg.grid,
            seed: cfg.seed,
            max_evals: cfg.max_evals,
        }
    }
}

impl GapPayload {
    pub fn canonical(&self) -> JVal {
        JVal::Obj(vec![
            ("r_inner", JVal::Num(self.r_inner)),
            ("r_outer", JVal::Num(self.r_outer)),
            ("disc_point", JVal::complex(self.disc_point.c())),
            ("annulus_point", JVal::complex(self.annulus_point.c())),
            ("degree", JVal::Int(self.degree as i64)),
            ("restarts", JVal::Int(self.restarts as i64)),
            ("grid", JVal::Int(self.grid as i64)),
            ("seed", JVal::UInt(self.seed)),
            ("max_evals", JVal::UInt(self.max_evals)),
        ])
    }
}

/// Typed payload of one experiment.
#[derive(Debug, Clone)]
pub enum Payload {
    Ratio(RatioPayload),
    Cone(ConePayload),
    Oracle(OraclePayload),
    Sandwich(SandwichPayload),
    Trace(TracePayload),
    Normalize(NormalizePayload),
    Peak(PeakPayload),
    Gap(GapPayload),
}

impl Payload {
    pub fn id(&self) -> &'static str {
        match self {
            Payload::Ratio(_) => "ratio-limit",
            Payload::Cone(_) => "cone-density",
            Payload::Oracle(_) => "oracle-compare",
            Payload::Sandwich(_) => "product-sandwich",
            Payload::Trace(_) => "foliation-trace",
            Payload::Normalize(_) => "df-normalize",
            Payload::Peak(_) => "peak-check",
            Payload::Gap(_) => "annulus-gap",
        }
    }

    pub fn canonical(&self) -> JVal {
        match self {
            Payload::Ratio(p) => p.canonical(),
            Payload::Cone(p) => p.canonical(),
            Payload::Oracle(p) => p.canonical(),
            Payload::Sandwich(p) => p.canonical(),
            Payload::Trace(p) => p.canonical(),
            Payload::Normalize(p) => p.canonical(),
            Payload::Peak(p) => p.canonical(),
            Payload::Gap(p) => p.canonical(),
        }
    }

    /// Seed recorded for the experiment; None when it draws no randomness.
    pub fn seed(&self) -> Option<u64> {
        match self {
            Payload::Oracle(p) => Some(p.seed),
            Payload::Peak(p) => Some(p.seed),
            Payload::Gap(p) => Some(p.seed),
            _ => None,
        }
    }

    /// Applies a run-level seed override to the seeded experiments.
    pub fn override_seed(&mut self, seed: u64) {
        match self {
            Payload::Oracle(p) => p.seed = seed,
            Payload::Peak(p) => p.seed = seed,
            Payload::Gap(p) => p.seed = seed,
            _ => {}
        }
    }
}

fn domain_jval(d: &PlanarDomain) -> JVal {
    match d {
        PlanarDomain::UnitDisc => JVal::Obj(vec![("variant", JVal::str("unit_disc"))]),
        PlanarDomain::Disc { center, radius } => JVal::Obj(vec![
            ("variant", JVal::str("disc")),
            ("center", JVal::complex(*center)),
            ("radius", JVal::Num(*radius)),
        ]),
        PlanarDomain::UpperHalfPlane => {
            JVal::Obj(vec![("variant", JVal::str("upper_half_plane"))])
        }
        PlanarDomain::Sector { theta } => JVal::Obj(vec![
            ("variant", JVal::str("sector")),
            ("theta", JVal::Num(*theta)),
        ]),
        PlanarDomain::TruncatedCone { theta, eps } => JVal::Obj(vec![
            ("variant", JVal::str("truncated_cone")),
            ("theta", JVal::Num(*theta)),
            ("eps", JVal::Num(*eps)),
        ]),
        PlanarDomain::Annulus { r_inner, r_outer } => JVal::Obj(vec![
            ("variant", JVal::str("annulus")),
            ("r_inner", JVal::Num(*r_inner)),
            ("r_outer", JVal::Num(*r_outer)),
        ]),
    }
}

/// One experiment with everything resolved: payload defaults filled, seed
/// and output directory settled.
#[derive(Debug, Clone)]
pub struct ResolvedSpec {
    pub payload: Payload,
    /// Seed echoed in the summary; None for experiments without randomness.
    pub seed: Option<u64>,
    pub out: PathBuf,
}

/// Raw shape of one spec entry as written in a file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    id: String,
    #[serde(default)]
    payload: Option<serde_json::Value>,
    #[serde(default)]
    out: Option<String>,
    #[serde(default)]
    seed: Option<u64>,
}

/// Parses a payload JSON value (or null) for the given experiment id.
pub fn parse_payload(id: &str, payload: Option<serde_json::Value>) -> Result<Payload> {
    let value = payload.unwrap_or(serde_json::Value::Object(Default::default()));
    let ctx = || format!("payload for experiment \"{id}\"");
    let parsed = match id {
        "ratio-limit" => Payload::Ratio(serde_json::from_value(value).with_context(ctx)?),
        "cone-density" => Payload::Cone(serde_json::from_value(value).with_context(ctx)?),
        "oracle-compare" => Payload::Oracle(serde_json::from_value(value).with_context(ctx)?),
        "product-sandwich" => {
            Payload::Sandwich(serde_json::from_value(value).with_context(ctx)?)
        }
        "foliation-trace" => Payload::Trace(serde_json::from_value(value).with_context(ctx)?),
        "df-normalize" => {
            Payload::Normalize(serde_json::from_value(value).with_context(ctx)?)
        }
        "peak-check" => Payload::Peak(serde_json::from_value(value).with_context(ctx)?),
        "annulus-gap" => Payload::Gap(serde_json::from_value(value).with_context(ctx)?),
        other => bail!(
            "unknown experiment id \"{other}\"; known ids: {}",
            EXPERIMENT_IDS.join(", ")
        ),
    };
    Ok(parsed)
}

/// Loads a spec file (one object or an array) and resolves every entry.
///
/// `out_override` and `seed_override` come from the command line and win
/// over the per-entry fields; the per-entry fields win over defaults.
pub fn load_spec_file(
    path: &std::path::Path,
    out_override: Option<&str>,
    seed_override: Option<u64>,
) -> Result<Vec<ResolvedSpec>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading spec file {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .with_context(|| format!("parsing spec file {}", path.display()))?;
    let raws: Vec<RawSpec> = match value {
        serde_json::Value::Array(items) => items
            .into_iter()
            .map(|item| serde_json::from_value(item).context("parsing spec entry"))
            .collect::<Result<_>>()?,
        other => vec![serde_json::from_value(other).context("parsing spec entry")?],
    };
    if raws.is_empty() {
        bail!("spec file {} contains no experiments", path.display());
    }
    raws.into_iter()
        .map(|raw| {
            let mut payload = parse_payload(&raw.id, raw.payload)?;
            if let Some(seed) = seed_override.or(raw.seed) {
                payload.override_seed(seed);
            }
            let seed = payload.seed();
            let out = out_override
                .map(str::to_string)
                .or(raw.out)
                .unwrap_or_else(|| DEFAULT_OUT.to_string());
            Ok(ResolvedSpec { payload, seed, out: PathBuf::from(out) })
        })
        .collect()
}

/// Canonical run serialization: ids, resolved payloads, and seeds, never
/// output paths, so the hash is location-independent.
pub fn canonical_run(specs: &[ResolvedSpec]) -> JVal {
    let entries = specs
        .iter()
        .map(|s| {
            JVal::Obj(vec![
                ("id", JVal::str(s.payload.id())),
                (
                    "seed",
                    match s.seed {
                        Some(v) => JVal::UInt(v),
                        None => JVal::Null,
                    },
                ),
                ("payload", s.payload.canonical()),
            ])
        })
        .collect();
    JVal::Obj(vec![("experiments", JVal::Arr(entries))])
}

/// SHA-256 of the canonical run serialization, lowercase hex.
pub fn run_hash(specs: &[ResolvedSpec]) -> String {
    let canon = canonical_run(specs).render_compact();
    let digest = Sha256::digest(canon.as_bytes());
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_from_empty_payloads() {
        for id in EXPERIMENT_IDS {
            let payload = parse_payload(id, None).unwrap();
            assert_eq!(payload.id(), id);
        }
    }

    #[test]
    fn unknown_id_is_rejected_with_the_known_list() {
        let err = parse_payload("mystery", None).unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("mystery") && msg.contains("ratio-limit"), "{msg}");
    }

    #[test]
    fn unknown_payload_key_is_rejected() {
        let err = parse_payload(
            "peak-check",
            Some(serde_json::json!({"count": 10, "radios": 2})),
        )
        .unwrap_err();
        assert!(format!("{err:#}").contains("peak-check"));
    }

    #[test]
    fn function_spec_accepts_catalog_and_table() {
        let cat: FunctionSpec = serde_json::from_value(serde_json::json!({
            "catalog": "re_w"
        }))
        .unwrap();
        assert_eq!(cat.label(), "re_w");
        cat.build().unwrap();

        let poly: FunctionSpec = serde_json::from_value(serde_json::json!({
            "name": "height",
            "poly": [{"coeff": [1.0, 0.0], "powers": [0, 0, 1, 0]}]
        }))
        .unwrap();
        assert_eq!(poly.label(), "height");
        let f = poly.build().unwrap();
        assert!((f.value(Complex64::new(0.3, 0.1), Complex64::new(0.25, -2.0)) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn run_hash_ignores_out_dir_but_not_seed() {
        let mk = |seed: Option<u64>, out: &str| {
            let mut payload = parse_payload("peak-check", None).unwrap();
            if let Some(s) = seed {
                payload.override_seed(s);
            }
            let seed = payload.seed();
            vec![ResolvedSpec { payload, seed, out: PathBuf::from(out) }]
        };
        let a = run_hash(&mk(None, "one"));
        let b = run_hash(&mk(None, "two"));
        let c = run_hash(&mk(Some(99), "one"));
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 64);
    }
}
