//! Node configuration file (TOML).
//!
//! ```toml
//! listen = "127.0.0.1:8080"
//! model = "combined.model"      # optional, defaults to the shipped combined model
//! blocks = "data/chain.blocks"
//! keystore = "data/keys"
//!
//! [bootstrap]
//! participant_id = "admin"
//! display_name = "Network Admin"
//! card_id = "card-admin"
//! public_key = "base64..."
//!
//! [[phones]]
//! phone = "+13065551234"
//! participant_id = "p1"
//! card_id = "card-p1"
//! ```
//!
//! Relative paths are resolved against the config file's directory.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::netdef::NetworkModel;
use crate::network::BootstrapAdmin;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhoneBinding {
    pub phone: String,
    pub participant_id: String,
    pub card_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapConfig {
    pub participant_id: String,
    pub display_name: String,
    pub card_id: String,
    pub public_key: String,
}

impl From<&BootstrapConfig> for BootstrapAdmin {
    fn from(b: &BootstrapConfig) -> Self {
        BootstrapAdmin {
            participant_id: b.participant_id.clone(),
            display_name: b.display_name.clone(),
            card_id: b.card_id.clone(),
            public_key: b.public_key.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub listen: SocketAddr,
    #[serde(default)]
    pub model: Option<PathBuf>,
    pub blocks: PathBuf,
    pub keystore: PathBuf,
    #[serde(default)]
    pub bootstrap: Option<BootstrapConfig>,
    #[serde(default)]
    pub phones: Vec<PhoneBinding>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let config: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut phones: Vec<&str> = config.phones.iter().map(|p| p.phone.as_str()).collect();
        phones.sort_unstable();
        if let Some(w) = phones.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("phone {} is bound more than once", w[0])));
        }
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve(base);
        Ok(config)
    }

    fn resolve(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.blocks);
        join(&mut self.keystore);
        if let Some(m) = self.model.as_mut() {
            join(m);
        }
    }

    pub fn engine(&self) -> Result<Engine> {
        match &self.model {
            Some(path) => Engine::new(NetworkModel::load(path)?),
            None => Ok(Engine::combined()),
        }
    }

    pub fn bootstrap_admins(&self) -> Vec<BootstrapAdmin> {
        self.bootstrap.iter().map(BootstrapAdmin::from).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
listen = "127.0.0.1:8080"
blocks = "data/chain.blocks"
keystore = "keys"

[bootstrap]
participant_id = "admin"
display_name = "Admin"
card_id = "card-admin"
public_key = "AAAA"

[[phones]]
phone = "+13065551234"
participant_id = "p1"
card_id = "card-p1"
"#;

    #[test]
    fn parses_and_resolves() {
        let mut c = Config::parse(SAMPLE).unwrap();
        c.resolve(Path::new("/etc/node"));
        assert_eq!(c.blocks, PathBuf::from("/etc/node/data/chain.blocks"));
        assert_eq!(c.phones.len(), 1);
        assert_eq!(c.bootstrap_admins()[0].participant_id, "admin");
        assert_eq!(c.engine().unwrap().model().network_name, "accessledger");
    }

    #[test]
    fn duplicate_phone_is_refused() {
        let text = format!("{SAMPLE}\n[[phones]]\nphone = \"+13065551234\"\nparticipant_id = \"p2\"\ncard_id = \"c2\"\n");
        assert!(matches!(Config::parse(&text), Err(Error::Config(_))));
    }
}
