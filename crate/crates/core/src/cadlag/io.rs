use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::path::{CadlagPath, JumpEvent};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PathJson {
    initial_value: f64,
    delta: f64,
    grid_values: Vec<f64>,
    jumps: Vec<JumpEvent>,
}

impl Serialize for CadlagPath {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PathJson {
            initial_value: self.initial_value(),
            delta: self.delta(),
            grid_values: self.grid_values().to_vec(),
            jumps: self.jumps().to_vec(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CadlagPath {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = PathJson::deserialize(deserializer)?;
        CadlagPath::new(raw.initial_value, raw.delta, raw.grid_values, raw.jumps, 0.0)
            .map_err(serde::de::Error::custom)
    }
}

impl CadlagPath {
    /// Serializes to `{initial_value, delta, grid_values[], jumps:[{t,size}]}`.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_json_value())?)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "initial_value": self.initial_value(),
            "delta": self.delta(),
            "grid_values": self.grid_values(),
            "jumps": self.jumps(),
        })
    }

    /// Parses the JSON form. The jump registry is kept verbatim (no jump floor).
    pub fn from_json(s: &str) -> Result<Self> {
        let raw: PathJson = serde_json::from_str(s)?;
        Self::from_json_value(serde_json::to_value(raw)?)
    }

    pub fn from_json_value(v: serde_json::Value) -> Result<Self> {
        let raw: PathJson = serde_json::from_value(v)?;
        Self::new(raw.initial_value, raw.delta, raw.grid_values, raw.jumps, 0.0)
    }

    /// Two-column `t,value` sampling at grid nodes and jump times. Jump times get two rows:
    /// the left limit followed by the right value.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value\n");
        for t in self.breakpoints() {
            let right = self.value_at(t);
            let on_jump = self.jumps().binary_search_by(|j| j.time.total_cmp(&t)).is_ok();
            if on_jump {
                let _ = writeln!(out, "{t},{}", self.value_left(t));
            }
            let _ = writeln!(out, "{t},{right}");
        }
        out
    }
}
