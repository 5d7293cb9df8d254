//! Reward environments and their JSON configuration files.

pub mod frog;
pub mod labyrinth;
pub mod layout;
pub mod multilayer;
pub mod plane;

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub use frog::{frog_reward, two_frog_rewards, FrogConfig, RewardSpot, TwoFrogConfig};
pub use labyrinth::{labyrinth_path, labyrinth_reward, segment_arc_crossings, Arc, Crossing, LabyrinthConfig};
pub use multilayer::{multilayer_error, MultiLayerInstance, MultiLayerSpec};
pub use plane::{plane_game_rewards, PlaneGameConfig};

/// Version written to and required from every configuration file.
pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum EnvConfig {
    Frog(FrogConfig),
    TwoFrogs(TwoFrogConfig),
    Labyrinth(LabyrinthConfig),
    PlaneGame(PlaneGameConfig),
    Multilayer(MultiLayerInstance),
}

impl EnvConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            EnvConfig::Frog(_) => "frog",
            EnvConfig::TwoFrogs(_) => "two_frogs",
            EnvConfig::Labyrinth(_) => "labyrinth",
            EnvConfig::PlaneGame(_) => "plane_game",
            EnvConfig::Multilayer(_) => "multilayer",
        }
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|source| Error::Json {
            path: origin.to_string(),
            source,
        })?;
        let (kind, body) = unwrap_versioned(value, "kind", origin)?;
        let env = match kind.as_str() {
            "frog" => {
                let c: FrogConfig = parse_body(body, origin)?;
                c.validate()?;
                EnvConfig::Frog(c)
            }
            "two_frogs" => {
                let c: TwoFrogConfig = parse_body(body, origin)?;
                c.validate()?;
                EnvConfig::TwoFrogs(c)
            }
            "labyrinth" => {
                let c: LabyrinthConfig = parse_body(body, origin)?;
                c.validate()?;
                EnvConfig::Labyrinth(c)
            }
            "plane_game" => {
                let c: PlaneGameConfig = parse_body(body, origin)?;
                c.validate()?;
                EnvConfig::PlaneGame(c)
            }
            "multilayer" => {
                let spec: MultiLayerSpec = parse_body(body, origin)?;
                EnvConfig::Multilayer(MultiLayerInstance::from_spec(&spec)?)
            }
            other => return Err(Error::config(format!("{origin}: unknown environment kind {other:?}"))),
        };
        Ok(env)
    }

    /// Reads a JSON configuration file, or a multi-layer edge list when the
    /// extension is not `.json`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            Self::from_json(&text, &path.display().to_string())
        } else {
            Ok(EnvConfig::Multilayer(MultiLayerInstance::parse_edge_list(&text)?))
        }
    }

    pub fn to_json(&self) -> String {
        let body = match self {
            EnvConfig::Frog(c) => to_value(c),
            EnvConfig::TwoFrogs(c) => to_value(c),
            EnvConfig::Labyrinth(c) => to_value(c),
            EnvConfig::PlaneGame(c) => to_value(c),
            EnvConfig::Multilayer(m) => to_value(&m.to_spec()),
        };
        versioned_json("kind", self.kind(), body)
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("configuration types serialize to JSON")
}

/// Pretty JSON with `schema_version` and a tag field ahead of `body`'s keys.
pub(crate) fn versioned_json(tag: &str, tag_value: &str, body: Value) -> String {
    let mut map = Map::new();
    map.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
    map.insert(tag.into(), Value::from(tag_value));
    if let Value::Object(fields) = body {
        map.extend(fields);
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(map)).expect("JSON values serialize");
    s.push('\n');
    s
}

/// Checks `schema_version` and strips it together with the tag field.
pub(crate) fn unwrap_versioned(value: Value, tag: &str, origin: &str) -> Result<(String, Value)> {
    let Value::Object(mut map) = value else {
        return Err(Error::config(format!("{origin}: expected a JSON object")));
    };
    match map.remove("schema_version") {
        Some(Value::Number(n)) if n.as_u64() == Some(SCHEMA_VERSION) => {}
        Some(v) => {
            return Err(Error::config(format!(
                "{origin}: unsupported schema_version {v}, expected {SCHEMA_VERSION}"
            )))
        }
        None => return Err(Error::config(format!("{origin}: missing schema_version"))),
    }
    let kind = match map.remove(tag) {
        Some(Value::String(s)) => s,
        _ => return Err(Error::config(format!("{origin}: missing string field {tag:?}"))),
    };
    Ok((kind, Value::Object(map)))
}

pub(crate) fn parse_body<T: DeserializeOwned>(body: Value, origin: &str) -> Result<T> {
    serde_json::from_value(body).map_err(|e| Error::config(format!("{origin}: {e}")))
}

/// Index of the angular interval containing `theta` (radians) in a table of
/// contiguous degree intervals starting at `first_start` with the given ends.
pub(crate) fn angular_index(first_start: f64, ends: impl Iterator<Item = f64>, theta: f64) -> usize {
    let deg = first_start + (theta.to_degrees() - first_start).rem_euclid(360.0);
    let mut last = 0;
    for (i, end) in ends.enumerate() {
        if deg < end {
            return i;
        }
        last = i;
    }
    last
}

/// Degree intervals must be non-empty, contiguous and span one full turn.
pub(crate) fn check_turn(spans: &[(f64, f64)]) -> std::result::Result<(), String> {
    let Some(&(first, _)) = spans.first() else {
        return Err("no intervals".into());
    };
    if spans.iter().any(|&(s, e)| !(s < e) || !s.is_finite() || !e.is_finite()) {
        return Err("every interval needs start < end".into());
    }
    if spans.windows(2).any(|w| w[0].1 != w[1].0) {
        return Err("intervals must be contiguous".into());
    }
    let span = spans[spans.len() - 1].1 - first;
    if (span - 360.0).abs() > 1e-9 {
        return Err(format!("intervals cover {span} degrees, not 360"));
    }
    Ok(())
}
