//! Fixed-size binary state encoding for the learned policies.

use crate::dialog::{ActType, BeliefState};
use crate::domain::{DomainSchemaSet, EntityDatabase, BOOKING_SLOTS};

pub type FeatureVector = Vec<f64>;

/// Upper bounds of the database result-count buckets `{0, 1, 2-4, >=5}`.
const BUCKETS: [usize; 4] = [0, 1, 4, usize::MAX];

/// Layout, per domain in schema order:
/// `filled(informable..) filled(day, people if bookable) requested(requestable..) db_bucket[4]`,
/// then one bit per act type present in the last user turn, then a bias.
///
/// Database buckets stay zero for a domain with no constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpace {
    names: Vec<String>,
}

impl FeatureSpace {
    pub fn new(schemas: &DomainSchemaSet) -> Self {
        let mut names = Vec::new();
        for d in schemas.iter() {
            for s in d.informable_slots() {
                names.push(format!("{}.filled.{s}", d.name));
            }
            if d.bookable {
                for s in BOOKING_SLOTS {
                    names.push(format!("{}.filled.{s}", d.name));
                }
            }
            for s in &d.requestable {
                names.push(format!("{}.requested.{s}", d.name));
            }
            for b in ["0", "1", "2-4", "5+"] {
                names.push(format!("{}.db.{b}", d.name));
            }
        }
        for t in ActType::ALL {
            names.push(format!("user.{t}"));
        }
        names.push("bias".to_string());
        FeatureSpace { names }
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn featurize(&self, schemas: &DomainSchemaSet, state: &BeliefState, db: &EntityDatabase) -> FeatureVector {
        let mut x = Vec::with_capacity(self.dim());
        let bit = |b: bool| if b { 1.0 } else { 0.0 };
        for d in schemas.iter() {
            let ds = state.domain(&d.name);
            for s in d.informable_slots() {
                x.push(bit(ds.is_some_and(|ds| ds.is_filled(s))));
            }
            if d.bookable {
                for s in BOOKING_SLOTS {
                    x.push(bit(ds.is_some_and(|ds| ds.booking.contains_key(s))));
                }
            }
            for s in &d.requestable {
                x.push(bit(ds.is_some_and(|ds| ds.requested.contains(s))));
            }
            let mut buckets = [0.0; 4];
            if let Some(ds) = ds.filter(|ds| !ds.constraints.is_empty()) {
                let n = db.count(&d.name, &ds.constraints).unwrap_or(0);
                let k = BUCKETS.iter().position(|&hi| n <= hi).unwrap_or(3);
                buckets[k] = 1.0;
            }
            x.extend(buckets);
        }
        for t in ActType::ALL {
            x.push(bit(state.last_user_acts.has_type(t)));
        }
        x.push(1.0);
        debug_assert_eq!(x.len(), self.dim());
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialog::string_to_acts;
    use crate::domain::toy_ontology;
    use crate::dst::{init_state, update};

    #[test]
    fn initial_state_is_bias_only() {
        let (schemas, db) = toy_ontology();
        let fs = FeatureSpace::new(&schemas);
        let x = fs.featurize(&schemas, &init_state(&schemas), &db);
        assert_eq!(x.iter().sum::<f64>(), 1.0);
        assert_eq!(*x.last().unwrap(), 1.0);
    }

    #[test]
    fn dimension_by_enumeration() {
        let (schemas, _) = toy_ontology();
        let mut expected = 0;
        for d in schemas.iter() {
            expected += d.informable.len() + d.requestable.len() + 4;
            if d.bookable {
                expected += 2;
            }
        }
        expected += 11 + 1;
        assert_eq!(FeatureSpace::new(&schemas).dim(), expected);
        // 11 informable + 4 booking + 14 requestable + 16 buckets + 11 act types + bias
        assert_eq!(expected, 57);
    }

    #[test]
    fn one_constraint_changes_the_vector() {
        let (schemas, db) = toy_ontology();
        let fs = FeatureSpace::new(&schemas);
        let s0 = init_state(&schemas);
        let s1 = update(&schemas, &s0, &string_to_acts("inform(hotel, stars=4)").unwrap()).unwrap();
        let s2 = update(&schemas, &s0, &string_to_acts("inform(hotel, area=north)").unwrap()).unwrap();
        let (x1, x2) = (fs.featurize(&schemas, &s1, &db), fs.featurize(&schemas, &s2, &db));
        assert_ne!(x1, x2);
        assert!(x1.iter().all(|v| *v == 0.0 || *v == 1.0));
    }
}
