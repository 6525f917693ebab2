//! Pipeline configuration, read from TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::CsvSchema;
use crate::error::{Error, Result};
use crate::extremes::ExtremeEventConfig;
use crate::features::{FeatureGroup, FeatureSpec, DEFAULT_OFFSET_POINTS};
use crate::gbdt::BoostParams;
use crate::losses::EtlParams;
use crate::metrics::MetricSettings;
use crate::synthetic::SyntheticConfig;
use crate::trend::TrendMode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    #[serde(flatten)]
    pub schema: CsvSchema,
    /// Longest interior run of missing values repaired by forward fill.
    pub fill_max_gap: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            schema: CsvSchema::default(),
            fill_max_gap: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecompositionConfig {
    pub window_lt_days: usize,
    pub window_st_days: usize,
}

impl Default for DecompositionConfig {
    fn default() -> Self {
        DecompositionConfig {
            window_lt_days: 28,
            window_st_days: 1,
        }
    }
}

impl DecompositionConfig {
    /// Windows in points for `m` samples per day.
    pub fn windows(&self, m: usize) -> (usize, usize) {
        (self.window_lt_days * m, self.window_st_days * m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrendConfig {
    pub mode: TrendMode,
}

impl Default for TrendConfig {
    fn default() -> Self {
        TrendConfig {
            mode: TrendMode::Features,
        }
    }
}

/// Boosting keys sit beside `feature_groups`; the ones left out keep the
/// additive defaults, not the generic boosting ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "toml::Table")]
pub struct GamConfig {
    /// Feature groups offered to the additive model.
    pub feature_groups: Vec<FeatureGroup>,
    #[serde(flatten)]
    pub boost: BoostParams,
}

impl Default for GamConfig {
    fn default() -> Self {
        GamConfig {
            feature_groups: vec![FeatureGroup::Weather, FeatureGroup::Difference],
            boost: BoostParams {
                max_depth: 1,
                learning_rate: 0.1,
                ..BoostParams::default()
            },
        }
    }
}

impl TryFrom<toml::Table> for GamConfig {
    type Error = String;

    fn try_from(mut table: toml::Table) -> std::result::Result<Self, String> {
        let mut out = GamConfig::default();
        if let Some(groups) = table.remove("feature_groups") {
            out.feature_groups = groups.try_into().map_err(|e: toml::de::Error| e.to_string())?;
        }
        let mut boost = match toml::Value::try_from(&out.boost) {
            Ok(toml::Value::Table(t)) => t,
            _ => unreachable!("boost params serialize to a table"),
        };
        for (key, value) in table {
            if !boost.contains_key(&key) {
                return Err(format!("unknown field `{key}` in [gam]"));
            }
            boost.insert(key, value);
        }
        out.boost = toml::Value::Table(boost).try_into().map_err(|e: toml::de::Error| e.to_string())?;
        Ok(out)
    }
}

/// EVL baseline settings; `mu` and `sigma` come from the training load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvlConfig {
    pub k: f64,
    pub lambda1: f64,
}

impl Default for EvlConfig {
    fn default() -> Self {
        EvlConfig { k: 2.0, lambda1: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaDIConfig {
    pub data: DataConfig,
    pub decomposition: DecompositionConfig,
    pub features: FeatureSpec,
    pub etl: EtlParams,
    pub trend: TrendConfig,
    pub gam: GamConfig,
    pub period: BoostParams,
    /// Single-model baselines (plain and EVL).
    pub baseline: BoostParams,
    pub evl: EvlConfig,
    pub metrics: MetricSettings,
    pub extremes: ExtremeEventConfig,
    pub synthetic: SyntheticConfig,
}

impl Default for SaDIConfig {
    fn default() -> Self {
        SaDIConfig {
            data: DataConfig::default(),
            decomposition: DecompositionConfig::default(),
            features: FeatureSpec::with_weather(&["temperature"], DEFAULT_OFFSET_POINTS),
            etl: EtlParams::default(),
            trend: TrendConfig::default(),
            gam: GamConfig::default(),
            period: BoostParams::default(),
            baseline: BoostParams::default(),
            evl: EvlConfig::default(),
            metrics: MetricSettings::default(),
            extremes: ExtremeEventConfig::default(),
            synthetic: SyntheticConfig::default(),
        }
    }
}

impl SaDIConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SaDIConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Data-independent checks, run before any fit.
    pub fn validate(&self) -> Result<()> {
        let d = &self.decomposition;
        if d.window_st_days == 0 || d.window_lt_days <= d.window_st_days {
            return Err(Error::Config(format!(
                "decomposition windows need window_lt_days > window_st_days >= 1, got {} and {}",
                d.window_lt_days, d.window_st_days
            )));
        }
        self.etl.validate()?;
        let offered: Vec<String> = self
            .features
            .column_names()
            .into_iter()
            .filter(|(_, g)| self.gam.feature_groups.contains(g))
            .map(|(n, _)| n)
            .collect();
        if offered.is_empty() {
            return Err(Error::Config("the additive model is offered no features".into()));
        }
        if let Some(name) = self.etl.lambdas.keys().find(|k| !offered.contains(k)) {
            return Err(Error::UnknownFeature(name.clone()));
        }
        if self.gam.boost.max_depth != 1 {
            return Err(Error::Config(format!(
                "gam.max_depth must be 1, got {}",
                self.gam.boost.max_depth
            )));
        }
        self.gam.boost.validate()?;
        self.period.validate()?;
        self.baseline.validate()?;
        if !(self.evl.lambda1 >= 0.0) || !self.evl.k.is_finite() {
            return Err(Error::Config("evl.k must be finite and evl.lambda1 >= 0".into()));
        }
        self.extremes.validate()?;
        self.synthetic.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let cfg = SaDIConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_toml().unwrap();
        assert_eq!(SaDIConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn empty_file_is_default() {
        assert_eq!(SaDIConfig::from_toml("").unwrap(), SaDIConfig::default());
    }

    #[test]
    fn partial_tables_keep_section_defaults() {
        let cfg = SaDIConfig::from_toml("[gam]\nrounds = 80\n[etl.lambdas]\ntemperature = 2.0\n").unwrap();
        assert_eq!(cfg.gam.boost.rounds, 80);
        assert_eq!(cfg.gam.boost.max_depth, 1);
        assert_eq!(cfg.gam.boost.learning_rate, 0.1);
        assert_eq!(cfg.gam.feature_groups, GamConfig::default().feature_groups);
        assert_eq!(cfg.etl.threshold, 26.0);
        assert_eq!(cfg.etl.lambdas["temperature"], 2.0);
        assert_eq!(SaDIConfig::from_toml("[gam]\nmax_deep = 1\n").unwrap_err().class(), "config.parse");
    }

    #[test]
    fn unknown_lambda_feature() {
        let text = "[etl]\nthreshold = 26.0\n[etl.lambdas]\nhumidity = 1.0\n";
        assert_eq!(SaDIConfig::from_toml(text).unwrap_err().class(), "config.unknown_feature");
    }

    #[test]
    fn rolling_columns_not_offered_to_gam() {
        let mut cfg = SaDIConfig::default();
        cfg.etl.lambdas.clear();
        cfg.etl.lambdas.insert("load_win_1_offset_192_mean".into(), 1.0);
        assert_eq!(cfg.validate().unwrap_err().class(), "config.unknown_feature");
    }

    #[test]
    fn bad_values() {
        assert_eq!(SaDIConfig::from_toml("[gam]\nmax_depth = 3\n").unwrap_err().class(), "config.invalid");
        assert_eq!(SaDIConfig::from_toml("[decomposition]\nwindow_lt_days = 1\n").unwrap_err().class(), "config.invalid");
        assert_eq!(SaDIConfig::from_toml("[period]\nrounds = 0\n").unwrap_err().class(), "param.invalid");
        assert_eq!(SaDIConfig::from_toml("[nope]\n").unwrap_err().class(), "config.parse");
        assert_eq!(SaDIConfig::from_toml("[trend]\nmode = \"sideways\"\n").unwrap_err().class(), "config.parse");
    }
}
