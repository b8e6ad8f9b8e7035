//! JSON scene specification: the parameter record that drives generation.
//!
//! The schema is closed (unknown keys are rejected) and every field other
//! than the enclosing braces is optional. A minimal document looks like
//!
//! ```json
//! { "seed": 7, "terrain": { "kind": "flat" } }
//! ```
//!
//! See `docs/scene-spec.schema.json` for the full schema.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Schema version written into serialized specs and manifests.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TerrainKind {
    Perlin,
    Flat,
    Steep,
    Plateau,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionStrategy {
    Bsp,
    Grid,
    Kdtree,
    Voronoi,
    Noise,
    Drunkard,
}

impl PartitionStrategy {
    pub const ALL: [PartitionStrategy; 6] = [
        PartitionStrategy::Bsp,
        PartitionStrategy::Grid,
        PartitionStrategy::Kdtree,
        PartitionStrategy::Voronoi,
        PartitionStrategy::Noise,
        PartitionStrategy::Drunkard,
    ];

    /// Strategies whose regions tile the extent with polygons.
    pub fn is_tiling(self) -> bool {
        !matches!(self, PartitionStrategy::Noise | PartitionStrategy::Drunkard)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Density {
    Low,
    Medium,
    High,
}

impl Density {
    pub const ALL: [Density; 3] = [Density::Low, Density::Medium, Density::High];

    /// Default (hero, medium, small) targets for the tier.
    pub fn default_counts(self) -> TierCounts {
        match self {
            Density::Low => TierCounts { hero: 2, medium: 6, small: 10 },
            Density::Medium => TierCounts { hero: 4, medium: 12, small: 24 },
            Density::High => TierCounts { hero: 6, medium: 18, small: 36 },
        }
    }

    /// Target share of cluster regions.
    pub fn cluster_fraction(self) -> f64 {
        match self {
            Density::Low => 0.3,
            Density::Medium => 0.5,
            Density::High => 0.7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierCounts {
    pub hero: u32,
    pub medium: u32,
    pub small: u32,
}

impl TierCounts {
    pub fn total(&self) -> u32 {
        self.hero + self.medium + self.small
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TerrainSpec {
    pub kind: TerrainKind,
    pub roughness: f64,
    /// `[min, max]` elevation in meters.
    pub elevation_range: [f64; 2],
    /// Grid nodes per side.
    pub resolution: usize,
}

impl Default for TerrainSpec {
    fn default() -> Self {
        TerrainSpec { kind: TerrainKind::Perlin, roughness: 0.5, elevation_range: [0.0, 4.0], resolution: 65 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PartitionSpec {
    pub strategy: PartitionStrategy,
    pub region_count_hint: u32,
    /// Strategy-specific numeric parameters (for example `coverage` for the
    /// drunkard walk or `threshold` for noise partitions).
    pub params: BTreeMap<String, f64>,
}

impl Default for PartitionSpec {
    fn default() -> Self {
        PartitionSpec { strategy: PartitionStrategy::Voronoi, region_count_hint: 8, params: BTreeMap::new() }
    }
}

/// Agent dimensions used for navmesh baking and free-space checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentParams {
    pub radius: f64,
    pub height: f64,
    pub max_climb: f64,
    pub max_slope_deg: f64,
}

impl Default for AgentParams {
    fn default() -> Self {
        AgentParams { radius: 0.4, height: 1.8, max_climb: 0.4, max_slope_deg: 45.0 }
    }
}

impl AgentParams {
    /// The same agent expressed in a uniformly scaled frame.
    pub fn scaled(&self, s: f64) -> AgentParams {
        AgentParams {
            radius: self.radius * s,
            height: self.height * s,
            max_climb: self.max_climb * s,
            max_slope_deg: self.max_slope_deg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneSpec {
    pub version: u32,
    pub seed: u64,
    pub terrain: TerrainSpec,
    pub partition: PartitionSpec,
    pub density: Density,
    /// Per-tier targets; `None` takes the density tier's defaults.
    pub counts: Option<TierCounts>,
    pub verticality: f64,
    /// Placement regularity in `[0, 1]`; above 2/3 box yaw snaps to 15°.
    pub regularity: f64,
    /// Side of the square world in meters.
    pub extent: f64,
    pub agent: AgentParams,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            version: SCHEMA_VERSION,
            seed: 0,
            terrain: TerrainSpec::default(),
            partition: PartitionSpec::default(),
            density: Density::Medium,
            counts: None,
            verticality: 0.5,
            regularity: 0.5,
            extent: 50.0,
            agent: AgentParams::default(),
        }
    }
}

impl SceneSpec {
    pub fn tier_counts(&self) -> TierCounts {
        self.counts.unwrap_or_else(|| self.density.default_counts())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene spec serializes")
    }

    /// Check ranges that the type system cannot express.
    pub fn validate(&self) -> Result<()> {
        let unit = |path: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::schema(path, format!("{v} is outside [0, 1]")))
            }
        };
        let positive = |path: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::schema(path, format!("{v} must be positive")))
            }
        };
        if self.version != SCHEMA_VERSION {
            return Err(Error::schema("version", format!("unsupported version {}", self.version)));
        }
        unit("terrain.roughness", self.terrain.roughness)?;
        let [lo, hi] = self.terrain.elevation_range;
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::schema("terrain.elevation_range", "bounds must be finite"));
        }
        if lo > hi {
            return Err(Error::schema("terrain.elevation_range", format!("min {lo} exceeds max {hi}")));
        }
        if self.terrain.resolution < 2 {
            return Err(Error::schema("terrain.resolution", "must be at least 2"));
        }
        if self.partition.region_count_hint == 0 {
            return Err(Error::schema("partition.region_count_hint", "must be positive"));
        }
        for (k, v) in &self.partition.params {
            if !v.is_finite() {
                return Err(Error::schema(format!("partition.params.{k}"), "must be finite"));
            }
        }
        unit("verticality", self.verticality)?;
        unit("regularity", self.regularity)?;
        positive("extent", self.extent)?;
        positive("agent.radius", self.agent.radius)?;
        positive("agent.height", self.agent.height)?;
        if !(self.agent.max_climb.is_finite() && self.agent.max_climb >= 0.0) {
            return Err(Error::schema("agent.max_climb", "must be non-negative"));
        }
        if !(self.agent.max_slope_deg > 0.0 && self.agent.max_slope_deg < 90.0) {
            return Err(Error::schema("agent.max_slope_deg", "must lie in (0, 90)"));
        }
        Ok(())
    }
}

/// Parse and validate a scene specification, filling absent fields with
/// defaults.
pub fn parse_scene_spec(json_text: &str) -> Result<SceneSpec> {
    let mut de = serde_json::Deserializer::from_str(json_text);
    let spec: SceneSpec = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_syntax() || inner.is_eof() {
            Error::Syntax(inner.to_string())
        } else {
            Error::schema(path, inner.to_string())
        }
    })?;
    de.end().map_err(|e| Error::Syntax(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema_path(text: &str) -> String {
        match parse_scene_spec(text) {
            Err(Error::Schema { path, .. }) => path,
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn defaults_fill_everything_else() {
        let s = parse_scene_spec(r#"{"seed":7,"terrain":{"kind":"flat"}}"#).unwrap();
        assert_eq!(s.seed, 7);
        assert_eq!(s.terrain.kind, TerrainKind::Flat);
        let expected = SceneSpec {
            seed: 7,
            terrain: TerrainSpec { kind: TerrainKind::Flat, ..TerrainSpec::default() },
            ..SceneSpec::default()
        };
        assert_eq!(s, expected);
        assert_eq!(parse_scene_spec("{}").unwrap().seed, 0);
    }

    #[test]
    fn documented_defaults() {
        let s = SceneSpec::default();
        assert_eq!(s.terrain.kind, TerrainKind::Perlin);
        assert_eq!(s.partition.strategy, PartitionStrategy::Voronoi);
        assert_eq!(s.tier_counts(), TierCounts { hero: 4, medium: 12, small: 24 });
        assert_eq!(s.verticality, 0.5);
        assert_eq!(s.extent, 50.0);
        assert_eq!(s.agent, AgentParams { radius: 0.4, height: 1.8, max_climb: 0.4, max_slope_deg: 45.0 });
    }

    #[test]
    fn rejects_unknown_enum_value_with_path() {
        assert_eq!(schema_path(r#"{"terrain":{"kind":"volcano"}}"#), "terrain.kind");
    }

    #[test]
    fn rejects_unknown_keys() {
        assert_eq!(schema_path(r#"{"terrain":{"kind":"flat","lava":1}}"#), "terrain.lava");
        assert_eq!(schema_path(r#"{"colour":"red"}"#), "colour");
    }

    #[test]
    fn rejects_wrong_types_and_ranges() {
        assert_eq!(schema_path(r#"{"seed":"seven"}"#), "seed");
        assert_eq!(schema_path(r#"{"verticality":1.5}"#), "verticality");
        assert_eq!(schema_path(r#"{"terrain":{"elevation_range":[3,1]}}"#), "terrain.elevation_range");
        assert_eq!(schema_path(r#"{"terrain":{"resolution":1}}"#), "terrain.resolution");
        assert_eq!(schema_path(r#"{"extent":0}"#), "extent");
        assert_eq!(schema_path(r#"{"counts":{"hero":-1,"medium":0,"small":0}}"#), "counts.hero");
    }

    #[test]
    fn malformed_json_is_a_syntax_error() {
        assert!(matches!(parse_scene_spec(r#"{"seed":"#), Err(Error::Syntax(_))));
        assert!(matches!(parse_scene_spec(r#"{"seed":1} trailing"#), Err(Error::Syntax(_))));
    }

    #[test]
    fn benchmark_regime_spec() {
        let s = parse_scene_spec(r#"{"extent":50,"density":"medium","verticality":0.5}"#).unwrap();
        assert_eq!(s.extent, 50.0);
        assert_eq!(s.density, Density::Medium);
        assert_eq!(s.verticality, 0.5);
        // Medium density targets 4 + 12 + 24 objects; the benchmark narrows
        // this to 10-30 per scene through explicit counts.
        assert_eq!(s.tier_counts().total(), 40);
    }
}
