//! Flat key-value configuration (TOML syntax, no tables).
//!
//! | key                   | type    | default                          |
//! |-----------------------|---------|----------------------------------|
//! | `layout`              | string  | `harmony,passion,suppression`    |
//! | `layout_origin`       | number  | `0`                              |
//! | `center_method`       | string  | `centroid` (or `orthocenter`)    |
//! | `perspicuity`         | bool    | `true`                           |
//! | `perspicuity_alpha`   | number  | `0.5`                            |
//! | `perspicuity_beta`    | number  | `0.5`                            |
//! | `balance_epsilon`     | number  | `1e-9`                           |
//! | `weight_eco`          | number  | `1.0`                            |
//! | `weight_socio`        | number  | `0.75`                           |
//! | `weight_econo`        | number  | `0.5`                            |
//! | `sphere_arrow`        | string  | `final` (or `raw_final`)         |
//! | `convergence_epsilon` | number  | `0.02`                           |
//! | `convergence_window`  | integer | `20`                             |
//! | `outlier_threshold`   | number  | `0.05`                           |

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregation::{CenterMethod, CompassConfig};
use crate::ecological::{SphereArrowSource, SphereWeights};
use crate::model::SectorLayout;
use crate::robustness::RobustnessSettings;

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConfigError {
    #[error("config syntax: {message}")]
    Syntax { message: String },
    #[error("unknown config key `{key}`")]
    UnknownKey { key: String },
    #[error("config key `{key}` expects {expected}")]
    TypeMismatch { key: String, expected: String },
    #[error("config key `{key}`: {message}")]
    InvalidValue { key: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConfigWarning {
    /// The weights no longer satisfy eco >= socio >= econo.
    InvalidWeightOrder { eco: f64, socio: f64, econo: f64 },
}

impl std::fmt::Display for ConfigWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigWarning::InvalidWeightOrder { eco, socio, econo } => write!(
                f,
                "sphere weights eco {eco}, socio {socio}, econo {econo} break the eco >= socio >= econo nesting"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LoadedConfig {
    pub compass: CompassConfig,
    pub weights: SphereWeights,
    pub sphere_arrow: SphereArrowSource,
    pub robustness: RobustnessSettings,
    pub warnings: Vec<ConfigWarning>,
}

pub fn load_config(bytes: &[u8]) -> Result<LoadedConfig, Vec<ConfigError>> {
    let text = std::str::from_utf8(bytes).map_err(|e| vec![ConfigError::Syntax { message: e.to_string() }])?;
    let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        vec![ConfigError::Syntax { message: e.message().to_string() }]
    })?;

    let mut out = LoadedConfig::default();
    let mut errors = Vec::new();
    let mut order = out.compass.layout.order();
    let mut origin = out.compass.layout.origin();

    for (key, value) in &doc {
        let number = |errors: &mut Vec<ConfigError>| -> Option<f64> {
            match value {
                toml::Value::Float(f) => Some(*f),
                toml::Value::Integer(i) => Some(*i as f64),
                _ => {
                    errors.push(ConfigError::TypeMismatch { key: key.clone(), expected: "a number".into() });
                    None
                }
            }
        };
        let string = |errors: &mut Vec<ConfigError>| -> Option<&str> {
            match value {
                toml::Value::String(s) => Some(s.as_str()),
                _ => {
                    errors.push(ConfigError::TypeMismatch { key: key.clone(), expected: "a string".into() });
                    None
                }
            }
        };
        let invalid = |message: String| ConfigError::InvalidValue { key: key.clone(), message };
        match key.as_str() {
            "layout" => {
                if let Some(s) = string(&mut errors) {
                    match SectorLayout::parse_order(s) {
                        Ok(o) => order = o,
                        Err(m) => errors.push(invalid(m)),
                    }
                }
            }
            "layout_origin" => {
                if let Some(v) = number(&mut errors) {
                    origin = v;
                }
            }
            "center_method" => {
                if let Some(s) = string(&mut errors) {
                    match s.parse::<CenterMethod>() {
                        Ok(m) => out.compass.center_method = m,
                        Err(m) => errors.push(invalid(m)),
                    }
                }
            }
            "perspicuity" => match value {
                toml::Value::Boolean(b) => out.compass.perspicuity.enabled = *b,
                _ => errors.push(ConfigError::TypeMismatch { key: key.clone(), expected: "a boolean".into() }),
            },
            "perspicuity_alpha" => {
                if let Some(v) = number(&mut errors) {
                    out.compass.perspicuity.alpha = v;
                }
            }
            "perspicuity_beta" => {
                if let Some(v) = number(&mut errors) {
                    out.compass.perspicuity.beta = v;
                }
            }
            "balance_epsilon" => {
                if let Some(v) = number(&mut errors) {
                    out.compass.balance_epsilon = v;
                }
            }
            "weight_eco" => {
                if let Some(v) = number(&mut errors) {
                    out.weights.eco = v;
                }
            }
            "weight_socio" => {
                if let Some(v) = number(&mut errors) {
                    out.weights.socio = v;
                }
            }
            "weight_econo" => {
                if let Some(v) = number(&mut errors) {
                    out.weights.econo = v;
                }
            }
            "sphere_arrow" => {
                if let Some(s) = string(&mut errors) {
                    match s {
                        "final" => out.sphere_arrow = SphereArrowSource::Final,
                        "raw_final" => out.sphere_arrow = SphereArrowSource::RawFinal,
                        other => errors.push(invalid(format!("expected `final` or `raw_final`, got `{other}`"))),
                    }
                }
            }
            "convergence_epsilon" => {
                if let Some(v) = number(&mut errors) {
                    out.robustness.epsilon = v;
                }
            }
            "convergence_window" => match value {
                toml::Value::Integer(i) if *i >= 2 => out.robustness.window = *i as usize,
                toml::Value::Integer(i) => errors.push(invalid(format!("window must be at least 2, got {i}"))),
                _ => errors.push(ConfigError::TypeMismatch { key: key.clone(), expected: "an integer".into() }),
            },
            "outlier_threshold" => {
                if let Some(v) = number(&mut errors) {
                    out.robustness.outlier_threshold = v;
                }
            }
            _ => errors.push(ConfigError::UnknownKey { key: key.clone() }),
        }
    }

    match SectorLayout::new(order, origin) {
        Ok(l) => out.compass.layout = l,
        Err(e) => errors.push(ConfigError::InvalidValue { key: "layout".into(), message: e.to_string() }),
    }
    if let Err(e) = out.compass.validate() {
        errors.push(ConfigError::InvalidValue { key: "compass".into(), message: e.to_string() });
    }
    if let Err(e) = out.weights.check_positive() {
        errors.push(ConfigError::InvalidValue { key: "weights".into(), message: e.to_string() });
    }
    if !(out.robustness.epsilon > 0.0) {
        errors.push(ConfigError::InvalidValue {
            key: "convergence_epsilon".into(),
            message: "must be positive".into(),
        });
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    if !out.weights.is_nested_order() {
        out.warnings.push(ConfigWarning::InvalidWeightOrder {
            eco: out.weights.eco,
            socio: out.weights.socio,
            econo: out.weights.econo,
        });
    }
    Ok(out)
}
