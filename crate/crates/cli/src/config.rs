use std::path::Path;

use serde::Deserialize;

use relangle::{Error, Result};

/// Optional settings file. Every field can be overridden by the matching flag.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub normalization: Option<String>,
    pub subset_size: Option<usize>,
    pub neighborhood: Option<usize>,
    pub bins: Option<usize>,
    pub min_section_points: Option<usize>,
    pub threshold: Option<f64>,
    pub seed: Option<u64>,
    pub average_scope: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text)
            .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_known_keys() {
        let c: FileConfig =
            toml::from_str("neighborhood = 20\nnormalization = \"axis-specific\"\n").unwrap();
        assert_eq!(c.neighborhood, Some(20));
        assert_eq!(c.normalization.as_deref(), Some("axis-specific"));
        assert!(toml::from_str::<FileConfig>("nieghborhood = 3").is_err());
    }
}
