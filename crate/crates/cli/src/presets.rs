//! Built-in parameter sets for the cooling, susceptibility and entanglement
//! figure families.

use crate::config::{parse_config, ConfigError, RunConfig};

pub struct Preset {
    pub name: &'static str,
    pub source: &'static str,
}

macro_rules! preset {
    ($name:literal) => {
        Preset {
            name: $name,
            source: include_str!(concat!("../presets/", $name, ".toml")),
        }
    };
}

pub const PRESETS: [Preset; 11] = [
    preset!("fig1a"),
    preset!("fig1b"),
    preset!("fig1c"),
    preset!("fig1d"),
    preset!("fig2"),
    preset!("fig3a"),
    preset!("fig3b"),
    preset!("fig3c"),
    preset!("fig3d"),
    preset!("fig4a"),
    preset!("fig4b"),
];

impl Preset {
    /// First comment line of the preset file.
    pub fn description(&self) -> &'static str {
        self.source
            .lines()
            .next()
            .and_then(|l| l.strip_prefix("# "))
            .unwrap_or("")
    }

    pub fn load(&self) -> Result<RunConfig, ConfigError> {
        parse_config(self.source, self.name)
    }
}

pub fn find_preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}
