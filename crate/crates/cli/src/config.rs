use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use simple_pinn_core::cases::CaseConfig;

use crate::error::{CliError, Result};

/// Settings of the run driver that do not change the trained model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    /// Steps between metric lines.
    #[serde(default = "default_log_every")]
    pub log_every: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub early_stop: Option<EarlyStop>,
}

fn default_log_every() -> u64 {
    100
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            log_every: default_log_every(),
            early_stop: None,
        }
    }
}

/// Stop when the best loss has not improved by `min_rel` for `patience` steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EarlyStop {
    pub patience: u64,
    #[serde(default = "default_min_rel")]
    pub min_rel: f64,
}

fn default_min_rel() -> f64 {
    1e-3
}

/// Contents of a config file: the case plus an optional `[run]` table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunFile {
    #[serde(flatten)]
    pub case: CaseConfig,
    #[serde(default)]
    pub run: RunSettings,
}

impl RunFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        let f: RunFile = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        f.case.validate()?;
        if f.run.log_every == 0 {
            return Err(CliError::Config("run.log_every must be at least 1".into()));
        }
        Ok(f)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("case configs serialise to TOML")
    }
}

pub fn case_to_toml(case: &CaseConfig) -> String {
    toml::to_string(case).expect("case configs serialise to TOML")
}

/// SHA-256 of the canonical TOML of the case, hex encoded.
pub fn config_hash(case: &CaseConfig) -> String {
    let digest = Sha256::digest(case_to_toml(case).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use simple_pinn_core::cases::{build_case, CaseId, Overrides};

    #[test]
    fn every_case_round_trips() {
        for id in CaseId::ALL {
            let case = build_case(id, &Overrides::default()).unwrap();
            let file = RunFile {
                case,
                run: RunSettings::default(),
            };
            let text = file.to_toml();
            let back = RunFile::from_toml(&text).unwrap_or_else(|e| panic!("{}: {e}\n{text}", id.name()));
            assert_eq!(back, file, "{}", id.name());
            assert_eq!(back.to_toml(), text);
        }
    }

    #[test]
    fn hash_tracks_every_field() {
        let a = build_case(CaseId::Ldc, &Overrides::default()).unwrap();
        let h = config_hash(&a);
        assert_eq!(h, config_hash(&a.clone()));
        assert_eq!(h.len(), 64);
        let mut b = a.clone();
        b.seed += 1;
        assert_ne!(config_hash(&b), h);
        let mut c = a.clone();
        c.weights.bc = f64::from_bits(c.weights.bc.to_bits() + 1);
        assert_ne!(config_hash(&c), h);
        let mut d = a;
        d.physics = simple_pinn_core::Physics::NavierStokes { re: 200.0 };
        assert_ne!(config_hash(&d), h);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let case = build_case(CaseId::Ldc, &Overrides::default()).unwrap();
        let text = RunFile {
            case,
            run: RunSettings::default(),
        }
        .to_toml()
        .replace("log_every = 100", "log_every = 100\nbogus = 1");
        assert!(matches!(RunFile::from_toml(&text), Err(CliError::Config(_))));
    }
}
