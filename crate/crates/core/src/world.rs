//! Read-only domain data shared by every component of a run.

use std::sync::{Arc, OnceLock};

use crate::domain::{toy_ontology, DomainSchemaSet, EntityDatabase};
use crate::error::Result;
use crate::nlg::TemplateSet;
use crate::nlu::PatternLexicon;

#[derive(Debug)]
pub struct World {
    pub schemas: DomainSchemaSet,
    pub db: EntityDatabase,
    pub templates: TemplateSet,
    pub lexicon: PatternLexicon,
}

impl World {
    pub fn new(schemas: DomainSchemaSet, db: EntityDatabase, templates: TemplateSet) -> Result<Arc<World>> {
        let lexicon = PatternLexicon::build(&schemas, &templates)?;
        Ok(Arc::new(World { schemas, db, templates, lexicon }))
    }

    /// The shipped four-domain ontology and template set.
    pub fn toy() -> Arc<World> {
        static TOY: OnceLock<Arc<World>> = OnceLock::new();
        TOY.get_or_init(|| {
            let (schemas, db) = toy_ontology();
            World::new(schemas, db, TemplateSet::toy()).expect("shipped data is consistent")
        })
        .clone()
    }

    /// The same data restricted to `domains`.
    pub fn restricted(&self, domains: &[String]) -> Result<Arc<World>> {
        let schemas = self.schemas.restrict(domains)?;
        let entities = self
            .db
            .entities()
            .iter()
            .filter(|e| domains.contains(&e.domain))
            .cloned()
            .collect();
        let db = EntityDatabase::new(&schemas, entities)?;
        World::new(schemas, db, self.templates.clone())
    }
}
