//! Domain ontologies, the entity database, and user goal sampling.
//!
//! An ontology file is a single JSON document:
//!
//! ```json
//! {"domains": [{"name": "restaurant",
//!               "informable": {"area": ["north", "south"]},
//!               "requestable": ["phone"],
//!               "bookable": true}],
//!  "entities": [{"domain": "restaurant",
//!                "attributes": {"area": "north", "phone": "01223 000000"}}]}
//! ```
//!
//! The order of informable slots in the file is their request priority.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Value that removes a constraint instead of restricting it.
pub const DONTCARE: &str = "dontcare";

/// Booking slots shared by every bookable domain, with their fixed vocabularies.
pub const BOOKING_DAYS: [&str; 7] =
    ["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"];
pub const BOOKING_PEOPLE: [&str; 8] = ["1", "2", "3", "4", "5", "6", "7", "8"];
pub const BOOKING_SLOTS: [&str; 2] = ["day", "people"];
/// Slot carrying the booking reference in a confirmation act.
pub const BOOKING_REF: &str = "ref";

pub fn booking_vocabulary(slot: &str) -> Option<&'static [&'static str]> {
    match slot {
        "day" => Some(&BOOKING_DAYS),
        "people" => Some(&BOOKING_PEOPLE),
        _ => None,
    }
}

/// Lowercased, trimmed form used for every value comparison.
pub fn normalize_value(value: &str) -> String {
    value.trim().to_lowercase()
}

pub fn values_match(a: &str, b: &str) -> bool {
    normalize_value(a) == normalize_value(b)
}

const TOY_ONTOLOGY: &str = include_str!("../data/toy_multiwoz.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSchema {
    pub name: String,
    /// Informable slots in priority order, each with its value vocabulary.
    pub informable: IndexMap<String, Vec<String>>,
    pub requestable: Vec<String>,
    #[serde(default)]
    pub bookable: bool,
}

impl DomainSchema {
    pub fn is_informable(&self, slot: &str) -> bool {
        self.informable.contains_key(slot)
    }

    pub fn is_requestable(&self, slot: &str) -> bool {
        self.requestable.iter().any(|s| s == slot)
    }

    pub fn is_booking_slot(&self, slot: &str) -> bool {
        self.bookable && BOOKING_SLOTS.contains(&slot)
    }

    pub fn informable_slots(&self) -> impl Iterator<Item = &str> {
        self.informable.keys().map(String::as_str)
    }

    pub fn vocabulary(&self, slot: &str) -> Option<&[String]> {
        self.informable.get(slot).map(Vec::as_slice)
    }

    /// Attribute used to name an entity when offering it: `name` when the
    /// domain has one, otherwise the first requestable slot.
    pub fn offer_slot(&self) -> &str {
        if self.is_requestable("name") {
            "name"
        } else {
            self.requestable.first().map(String::as_str).unwrap_or("none")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DomainSchemaSet {
    domains: Vec<DomainSchema>,
}

impl DomainSchemaSet {
    pub fn new(domains: Vec<DomainSchema>) -> Result<Self> {
        let set = DomainSchemaSet { domains };
        set.validate()?;
        Ok(set)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (i, d) in self.domains.iter().enumerate() {
            if !seen.insert(d.name.as_str()) {
                return Err(Error::validation(
                    format!("domains[{i}]"),
                    format!("duplicate domain `{}`", d.name),
                ));
            }
            let mut slots = BTreeSet::new();
            for (slot, values) in &d.informable {
                if values.is_empty() {
                    return Err(Error::validation(
                        format!("domains[{i}].informable.{slot}"),
                        format!("empty vocabulary for slot `{slot}` in `{}`", d.name),
                    ));
                }
                slots.insert(slot.as_str());
            }
            for slot in &d.requestable {
                if !slots.insert(slot.as_str()) {
                    return Err(Error::validation(
                        format!("domains[{i}].requestable"),
                        format!("duplicate slot `{slot}` in `{}`", d.name),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.domains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domains.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &DomainSchema> {
        self.domains.iter()
    }

    pub fn get(&self, name: &str) -> Option<&DomainSchema> {
        self.domains.iter().find(|d| d.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&DomainSchema> {
        self.get(name).ok_or_else(|| Error::UnknownDomain(name.to_string()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.domains.iter().map(|d| d.name.as_str()).collect()
    }

    /// Keeps only the named domains, preserving file order.
    pub fn restrict(&self, names: &[String]) -> Result<DomainSchemaSet> {
        for n in names {
            self.require(n)?;
        }
        Ok(DomainSchemaSet {
            domains: self.domains.iter().filter(|d| names.contains(&d.name)).cloned().collect(),
        })
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn schema_hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.domains).expect("schemas serialize");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub domain: String,
    pub attributes: BTreeMap<String, String>,
}

impl Entity {
    pub fn get(&self, slot: &str) -> Option<&str> {
        self.attributes.get(slot).map(String::as_str)
    }

    pub fn matches(&self, constraints: &BTreeMap<String, String>) -> bool {
        constraints.iter().all(|(slot, want)| {
            values_match(want, DONTCARE)
                || self.get(slot).is_some_and(|have| values_match(have, want))
        })
    }
}

/// Entities indexed by domain; ids are positions in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EntityDatabase {
    entities: Vec<Entity>,
    by_domain: BTreeMap<String, Vec<usize>>,
}

impl EntityDatabase {
    pub fn new(schemas: &DomainSchemaSet, entities: Vec<Entity>) -> Result<Self> {
        let mut by_domain: BTreeMap<String, Vec<usize>> =
            schemas.iter().map(|d| (d.name.clone(), Vec::new())).collect();
        for (i, e) in entities.iter().enumerate() {
            let schema = schemas.get(&e.domain).ok_or_else(|| {
                Error::validation(
                    format!("entities[{i}].domain"),
                    format!("unknown domain `{}`", e.domain),
                )
            })?;
            for (slot, value) in &e.attributes {
                let location = format!("entities[{i}].attributes.{slot}");
                if let Some(vocab) = schema.vocabulary(slot) {
                    if !vocab.iter().any(|v| values_match(v, value)) {
                        return Err(Error::validation(
                            location,
                            format!("value `{value}` outside the vocabulary of slot `{slot}`"),
                        ));
                    }
                } else if !schema.is_requestable(slot) {
                    return Err(Error::validation(
                        location,
                        format!("slot `{slot}` is not declared by domain `{}`", e.domain),
                    ));
                }
            }
            by_domain.get_mut(&e.domain).expect("domain indexed").push(i);
        }
        Ok(EntityDatabase { entities, by_domain })
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn entity(&self, id: usize) -> Option<&Entity> {
        self.entities.get(id)
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn domain_ids(&self, domain: &str) -> Result<&[usize]> {
        self.by_domain
            .get(domain)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownDomain(domain.to_string()))
    }

    /// Ids of matching entities in insertion order.
    pub fn query_ids(&self, domain: &str, constraints: &BTreeMap<String, String>) -> Result<Vec<usize>> {
        Ok(self
            .domain_ids(domain)?
            .iter()
            .copied()
            .filter(|&id| self.entities[id].matches(constraints))
            .collect())
    }

    /// Entities of `domain` matching every constraint, in insertion order.
    /// A `dontcare` value removes its constraint.
    pub fn query(&self, domain: &str, constraints: &BTreeMap<String, String>) -> Result<Vec<&Entity>> {
        Ok(self
            .query_ids(domain, constraints)?
            .into_iter()
            .map(|id| &self.entities[id])
            .collect())
    }

    pub fn count(&self, domain: &str, constraints: &BTreeMap<String, String>) -> Result<usize> {
        Ok(self.query_ids(domain, constraints)?.len())
    }
}

#[derive(Deserialize)]
struct OntologyFile {
    domains: Vec<DomainSchema>,
    #[serde(default)]
    entities: Vec<Entity>,
}

/// Parses an ontology document; `origin` labels error locations.
pub fn parse_ontology(text: &str, origin: &str) -> Result<(DomainSchemaSet, EntityDatabase)> {
    let file: OntologyFile = serde_json::from_str(text).map_err(|e| Error::from_json(origin, e))?;
    let schemas = DomainSchemaSet::new(file.domains)?;
    let db = EntityDatabase::new(&schemas, file.entities)?;
    Ok((schemas, db))
}

pub fn load_ontology(path: impl AsRef<Path>) -> Result<(DomainSchemaSet, EntityDatabase)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ontology(&text, &path.display().to_string())
}

/// The shipped four-domain fixture (`data/toy_multiwoz.json`).
pub fn toy_ontology() -> (DomainSchemaSet, EntityDatabase) {
    parse_ontology(TOY_ONTOLOGY, "toy_multiwoz.json").expect("shipped ontology is valid")
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GoalSection {
    pub constraints: BTreeMap<String, String>,
    pub requests: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub book: Option<BTreeMap<String, String>>,
}

impl GoalSection {
    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty() && self.requests.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct UserGoal {
    pub sections: BTreeMap<String, GoalSection>,
}

impl UserGoal {
    pub fn is_empty(&self) -> bool {
        self.sections.is_empty() || self.sections.values().all(GoalSection::is_empty)
    }

    pub fn section(&self, domain: &str) -> Option<&GoalSection> {
        self.sections.get(domain)
    }

    pub fn validate(&self, schemas: &DomainSchemaSet) -> Result<()> {
        if self.sections.is_empty() {
            return Err(Error::EmptyGoal);
        }
        for (domain, section) in &self.sections {
            let schema = schemas.require(domain)?;
            if section.is_empty() {
                return Err(Error::validation(format!("goal.{domain}"), "section has no constraints or requests"));
            }
            for (slot, value) in &section.constraints {
                let vocab = schema.vocabulary(slot).ok_or_else(|| Error::UnknownSlot {
                    domain: domain.clone(),
                    slot: slot.clone(),
                })?;
                if !vocab.iter().any(|v| values_match(v, value)) {
                    return Err(Error::validation(
                        format!("goal.{domain}.{slot}"),
                        format!("value `{value}` outside the vocabulary"),
                    ));
                }
            }
            for slot in &section.requests {
                if !schema.is_requestable(slot) {
                    return Err(Error::UnknownSlot { domain: domain.clone(), slot: slot.clone() });
                }
            }
        }
        Ok(())
    }
}

/// Bounds for goal sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GoalProfile {
    /// Candidate domains; empty means every domain in the schema set.
    pub domains: Vec<String>,
    pub min_domains: usize,
    pub max_domains: usize,
    pub min_constraints: usize,
    pub max_constraints: usize,
    pub min_requests: usize,
    pub max_requests: usize,
    /// Probability that a bookable section carries booking constraints.
    pub book_prob: f64,
}

impl Default for GoalProfile {
    fn default() -> Self {
        GoalProfile {
            domains: Vec::new(),
            min_domains: 1,
            max_domains: 2,
            min_constraints: 1,
            max_constraints: 3,
            min_requests: 1,
            max_requests: 2,
            book_prob: 0.5,
        }
    }
}

impl GoalProfile {
    pub fn single(domain: &str) -> Self {
        GoalProfile { domains: vec![domain.to_string()], min_domains: 1, max_domains: 1, ..Default::default() }
    }
}

fn bounded(rng: &mut ChaCha8Rng, lo: usize, hi: usize, cap: usize) -> usize {
    let hi = hi.min(cap);
    let lo = lo.min(hi);
    rng.gen_range(lo..=hi)
}

/// Samples a goal by picking an entity per domain and revealing a random
/// subset of its attributes, so every section is satisfiable by construction.
pub fn sample_goal(
    seed: u64,
    schemas: &DomainSchemaSet,
    db: &EntityDatabase,
    profile: &GoalProfile,
) -> Result<UserGoal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let candidates: Vec<&DomainSchema> = if profile.domains.is_empty() {
        schemas.iter().collect()
    } else {
        profile.domains.iter().map(|d| schemas.require(d)).collect::<Result<_>>()?
    };
    if candidates.is_empty() {
        return Err(Error::UnsatisfiableProfile("profile selects no domains".into()));
    }
    let n_domains = bounded(&mut rng, profile.min_domains.max(1), profile.max_domains.max(1), candidates.len());
    let chosen: Vec<&DomainSchema> = candidates.choose_multiple(&mut rng, n_domains).copied().collect();

    let mut goal = UserGoal::default();
    for schema in chosen {
        let ids = db.domain_ids(&schema.name)?;
        let Some(&id) = ids.choose(&mut rng) else {
            return Err(Error::UnsatisfiableProfile(format!("no entity in domain `{}`", schema.name)));
        };
        let entity = &db.entities[id];
        let informable: Vec<&str> =
            schema.informable_slots().filter(|s| entity.get(s).is_some()).collect();
        let requestable: Vec<&str> = schema
            .requestable
            .iter()
            .map(String::as_str)
            .filter(|s| entity.get(s).is_some())
            .collect();
        let n_c = bounded(&mut rng, profile.min_constraints, profile.max_constraints, informable.len());
        let n_r = bounded(&mut rng, profile.min_requests, profile.max_requests, requestable.len());
        let mut section = GoalSection::default();
        for slot in informable.choose_multiple(&mut rng, n_c) {
            section.constraints.insert(slot.to_string(), normalize_value(entity.get(slot).unwrap()));
        }
        for slot in requestable.choose_multiple(&mut rng, n_r) {
            section.requests.insert(slot.to_string());
        }
        if schema.bookable && rng.gen_bool(profile.book_prob.clamp(0.0, 1.0)) {
            let mut book = BTreeMap::new();
            book.insert("day".to_string(), BOOKING_DAYS.choose(&mut rng).unwrap().to_string());
            book.insert("people".to_string(), BOOKING_PEOPLE.choose(&mut rng).unwrap().to_string());
            section.book = Some(book);
        }
        if section.is_empty() {
            // a profile allowing zero of both still yields a usable section
            if let Some(slot) = informable.first() {
                section.constraints.insert(slot.to_string(), normalize_value(entity.get(slot).unwrap()));
            } else if let Some(slot) = requestable.first() {
                section.requests.insert(slot.to_string());
            } else {
                return Err(Error::UnsatisfiableProfile(format!(
                    "entities of `{}` carry no attributes",
                    schema.name
                )));
            }
        }
        goal.sections.insert(schema.name.clone(), section);
    }
    Ok(goal)
}
