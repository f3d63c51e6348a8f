use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::DomainSchemaSet;
use crate::error::{Error, Result};

/// Persisted learned policy.
///
/// `{"schema_hash": "...", "action_inventory": ["restaurant.request_area", ...],
///   "weights": [[...], ...], "hyperparameters": {...}}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_hash: String,
    pub action_inventory: Vec<String>,
    pub weights: Vec<Vec<f64>>,
    pub hyperparameters: serde_json::Value,
}

impl Checkpoint {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("checkpoints serialize");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Loads a checkpoint, refusing one trained against a different ontology.
    pub fn load(path: impl AsRef<Path>, schemas: &DomainSchemaSet) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ckpt: Checkpoint = serde_json::from_str(&text).map_err(|e| Error::from_json(path.display().to_string(), e))?;
        ckpt.check_schema(schemas)?;
        Ok(ckpt)
    }

    pub fn check_schema(&self, schemas: &DomainSchemaSet) -> Result<()> {
        let expected = schemas.schema_hash();
        if self.schema_hash != expected {
            return Err(Error::SchemaMismatch { expected, found: self.schema_hash.clone() });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::toy_ontology;
    use crate::policy::{RlConfig, RlPolicy};

    #[test]
    fn round_trip_and_hash_check() {
        let (schemas, _) = toy_ontology();
        let policy = RlPolicy::new(&schemas, RlConfig::default(), 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("policy.json");
        let ckpt = policy.checkpoint(&schemas);
        ckpt.save(&path).unwrap();
        assert_eq!(Checkpoint::load(&path, &schemas).unwrap(), ckpt);

        let other = schemas.restrict(&["hotel".to_string()]).unwrap();
        assert!(matches!(Checkpoint::load(&path, &other), Err(Error::SchemaMismatch { .. })));
    }
}
