//! Rule-based belief tracking: a pure fold of user acts into a [`BeliefState`].

use crate::dialog::{ActType, BeliefState, DialogActSet, DomainState, GENERAL};
use crate::domain::{values_match, DomainSchemaSet, EntityDatabase, DONTCARE};
use crate::error::{Error, Result};
use crate::nlu::PatternLexicon;

pub fn init_state(schemas: &DomainSchemaSet) -> BeliefState {
    BeliefState {
        domains: schemas.iter().map(|d| (d.name.clone(), DomainState::default())).collect(),
        ..Default::default()
    }
}

/// Applies one user turn. `inform` sets a constraint (last write wins,
/// `dontcare` clears it), `request` adds a pending slot, `book` records a
/// booking value, `bye` terminates. `turn_count` always advances by one.
pub fn update(schemas: &DomainSchemaSet, state: &BeliefState, user_acts: &DialogActSet) -> Result<BeliefState> {
    let mut next = state.clone();
    for act in user_acts {
        if act.act_type == ActType::Bye {
            next.terminated = true;
            continue;
        }
        if !matches!(act.act_type, ActType::Inform | ActType::Request | ActType::Book) || act.domain == GENERAL {
            continue;
        }
        let schema = schemas.require(&act.domain)?;
        let unknown = || Error::UnknownSlot { domain: act.domain.clone(), slot: act.slot.clone() };
        let ds = next.domains.entry(act.domain.clone()).or_default();
        match act.act_type {
            ActType::Inform => {
                if !schema.is_informable(&act.slot) {
                    return Err(unknown());
                }
                if values_match(&act.value, DONTCARE) {
                    ds.constraints.remove(&act.slot);
                    ds.dontcare.insert(act.slot.clone());
                } else {
                    ds.dontcare.remove(&act.slot);
                    ds.constraints.insert(act.slot.clone(), act.value.clone());
                }
            }
            ActType::Request => {
                if !schema.is_requestable(&act.slot) {
                    return Err(unknown());
                }
                ds.requested.insert(act.slot.clone());
            }
            ActType::Book => {
                if !act.has_slot() {
                    continue;
                }
                if !schema.is_booking_slot(&act.slot) {
                    return Err(unknown());
                }
                let changed = ds.booking.get(&act.slot).is_none_or(|v| !values_match(v, &act.value));
                if changed {
                    ds.booking.insert(act.slot.clone(), act.value.clone());
                    ds.booked = None;
                }
            }
            _ => unreachable!(),
        }
    }
    next.turn_count += 1;
    next.last_user_acts = user_acts.clone();
    Ok(next)
}

/// Reference word-level tracker: understands the utterance with the pattern
/// lexicon (system acts as one-turn context), then applies [`update`].
pub fn word_dst_update(
    schemas: &DomainSchemaSet,
    lexicon: &PatternLexicon,
    state: &BeliefState,
    user_utterance: &str,
    system_acts: &DialogActSet,
) -> Result<BeliefState> {
    let acts = lexicon.parse(user_utterance, Some(system_acts));
    update(schemas, state, &acts)
}

/// Folds the system's own output into the state: informed slots stop being
/// pending, offers set the offered entity, booking confirmations are recorded.
pub fn observe_system_acts(
    schemas: &DomainSchemaSet,
    db: &EntityDatabase,
    state: &mut BeliefState,
    system_acts: &DialogActSet,
) {
    for act in system_acts {
        let Some(schema) = schemas.get(&act.domain) else { continue };
        let Some(ds) = state.domains.get_mut(&act.domain) else { continue };
        match act.act_type {
            ActType::Inform => {
                ds.requested.remove(&act.slot);
            }
            ActType::Offer | ActType::Recommend | ActType::Select => {
                let slot = &act.slot;
                let found = db.query_ids(&act.domain, &ds.constraints).ok().and_then(|ids| {
                    ids.into_iter().find(|&id| {
                        db.entity(id).and_then(|e| e.get(slot)).is_some_and(|v| values_match(v, &act.value))
                    })
                });
                if found.is_some() {
                    ds.offered_entity = found;
                }
            }
            ActType::Book if act.slot == crate::domain::BOOKING_REF && schema.bookable => {
                ds.booked = Some(act.value.clone());
            }
            _ => {}
        }
    }
}

/// Fraction of (domain, informable slot) pairs on which two states agree.
pub fn slot_agreement(schemas: &DomainSchemaSet, a: &BeliefState, b: &BeliefState) -> f64 {
    let mut total = 0usize;
    let mut same = 0usize;
    for schema in schemas.iter() {
        let da = a.domain(&schema.name);
        let db = b.domain(&schema.name);
        for slot in schema.informable_slots() {
            total += 1;
            let va = da.and_then(|d| d.constraints.get(slot)).map(|v| v.to_lowercase());
            let vb = db.and_then(|d| d.constraints.get(slot)).map(|v| v.to_lowercase());
            if va == vb {
                same += 1;
            }
        }
    }
    if total == 0 {
        1.0
    } else {
        same as f64 / total as f64
    }
}

/// Whether every domain's constraints agree.
pub fn joint_agreement(schemas: &DomainSchemaSet, a: &BeliefState, b: &BeliefState) -> bool {
    slot_agreement(schemas, a, b) == 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialog::DialogAct;
    use crate::domain::{parse_ontology, toy_ontology};
    use crate::nlg::{Role, TemplateSet};
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn fixture() -> &'static (DomainSchemaSet, TemplateSet, PatternLexicon) {
        static F: OnceLock<(DomainSchemaSet, TemplateSet, PatternLexicon)> = OnceLock::new();
        F.get_or_init(|| {
            let (schemas, _) = toy_ontology();
            let t = TemplateSet::toy();
            let lex = PatternLexicon::build(&schemas, &t).unwrap();
            (schemas, t, lex)
        })
    }

    fn set(acts: Vec<DialogAct>) -> DialogActSet {
        acts.into()
    }

    #[test]
    fn init_has_one_empty_section_per_domain() {
        let doc = r#"{"domains": [
            {"name": "a", "informable": {"x": ["1"]}, "requestable": []},
            {"name": "b", "informable": {"x": ["1"]}, "requestable": []}]}"#;
        let (schemas, _) = parse_ontology(doc, "mem").unwrap();
        let s = init_state(&schemas);
        assert_eq!(s.domains.len(), 2);
        assert!(s.domains.values().all(|d| *d == DomainState::default()));
        assert_eq!(s.turn_count, 0);
        assert!(!s.terminated);
        assert_eq!(s, init_state(&schemas));
    }

    #[test]
    fn empty_acts_only_advance_the_turn() {
        let (schemas, _) = toy_ontology();
        let s0 = init_state(&schemas);
        let s1 = update(&schemas, &s0, &DialogActSet::new()).unwrap();
        let mut expected = s0.clone();
        expected.turn_count = 1;
        assert_eq!(s1, expected);
    }

    #[test]
    fn inform_sets_constraint_last_write_wins() {
        let (schemas, _) = toy_ontology();
        let s0 = init_state(&schemas);
        let s1 = update(&schemas, &s0, &set(vec![DialogAct::inform("restaurant", "area", "north")])).unwrap();
        assert_eq!(s1.domain("restaurant").unwrap().constraints.get("area").unwrap(), "north");
        let s2 = update(&schemas, &s1, &set(vec![DialogAct::inform("restaurant", "area", "south")])).unwrap();
        assert_eq!(s2.domain("restaurant").unwrap().constraints.get("area").unwrap(), "south");
    }

    #[test]
    fn dontcare_clears_constraint() {
        let (schemas, _) = toy_ontology();
        let s1 = update(&schemas, &init_state(&schemas), &set(vec![DialogAct::inform("hotel", "stars", "4")])).unwrap();
        let s2 = update(&schemas, &s1, &set(vec![DialogAct::inform("hotel", "stars", DONTCARE)])).unwrap();
        let h = s2.domain("hotel").unwrap();
        assert!(h.constraints.is_empty() && h.dontcare.contains("stars") && h.is_filled("stars"));
    }

    #[test]
    fn requests_and_bye() {
        let (schemas, _) = toy_ontology();
        let s = update(
            &schemas,
            &init_state(&schemas),
            &set(vec![DialogAct::request("hotel", "phone"), DialogAct::general(ActType::Bye)]),
        )
        .unwrap();
        assert!(s.terminated);
        assert!(s.domain("hotel").unwrap().requested.contains("phone"));
    }

    #[test]
    fn unknown_slot_is_an_error() {
        let (schemas, _) = toy_ontology();
        let s0 = init_state(&schemas);
        for act in [
            DialogAct::inform("restaurant", "wifi", "yes"),
            DialogAct::request("restaurant", "area"),
            DialogAct::book("attraction", "day", "monday"),
        ] {
            assert!(matches!(update(&schemas, &s0, &set(vec![act])), Err(Error::UnknownSlot { .. })));
        }
    }

    #[test]
    fn booking_change_invalidates_reference() {
        let (schemas, db) = toy_ontology();
        let mut s = update(&schemas, &init_state(&schemas), &set(vec![DialogAct::book("hotel", "day", "monday")])).unwrap();
        observe_system_acts(&schemas, &db, &mut s, &set(vec![DialogAct::book("hotel", "ref", "HOT0001")]));
        assert_eq!(s.domain("hotel").unwrap().booked.as_deref(), Some("HOT0001"));
        let same = update(&schemas, &s, &set(vec![DialogAct::book("hotel", "day", "monday")])).unwrap();
        assert!(same.domain("hotel").unwrap().booked.is_some());
        let changed = update(&schemas, &s, &set(vec![DialogAct::book("hotel", "day", "friday")])).unwrap();
        assert!(changed.domain("hotel").unwrap().booked.is_none());
    }

    #[test]
    fn system_informs_clear_pending_requests() {
        let (schemas, db) = toy_ontology();
        let mut s = update(&schemas, &init_state(&schemas), &set(vec![DialogAct::request("restaurant", "phone")])).unwrap();
        observe_system_acts(&schemas, &db, &mut s, &set(vec![
            DialogAct::inform("restaurant", "phone", "x"),
            DialogAct::new(ActType::Offer, "restaurant", "name", "the golden curry"),
        ]));
        let r = s.domain("restaurant").unwrap();
        assert!(r.requested.is_empty());
        assert_eq!(db.entity(r.offered_entity.unwrap()).unwrap().get("name"), Some("the golden curry"));
    }

    #[test]
    fn word_dst_on_empty_utterance() {
        let (schemas, _) = toy_ontology();
        let lex = PatternLexicon::build(&schemas, &TemplateSet::toy()).unwrap();
        let s0 = init_state(&schemas);
        let s1 = word_dst_update(&schemas, &lex, &s0, "", &DialogActSet::new()).unwrap();
        assert_eq!(s1.turn_count, 1);
        assert_eq!(s1.domains, s0.domains);
    }

    #[test]
    fn word_dst_reads_generated_utterance() {
        let (schemas, _) = toy_ontology();
        let t = TemplateSet::toy();
        let lex = PatternLexicon::build(&schemas, &t).unwrap();
        let text = t.generate(&set(vec![DialogAct::inform("hotel", "stars", "4")]), Role::User).unwrap();
        let s = word_dst_update(&schemas, &lex, &init_state(&schemas), &text, &DialogActSet::new()).unwrap();
        assert_eq!(s.domain("hotel").unwrap().constraints.get("stars").map(String::as_str), Some("4"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn word_dst_equals_update_after_parse(turns in prop::collection::vec(prop::collection::vec(crate::test_support::arb_user_act(), 1..4), 1..4)) {
            let (schemas, t, lex) = fixture();
            let mut a = init_state(schemas);
            let mut b = a.clone();
            for turn in turns {
                let acts: DialogActSet = turn.into();
                let text = t.generate(&acts, Role::User).unwrap();
                a = update(schemas, &a, &acts).unwrap();
                b = word_dst_update(schemas, lex, &b, &text, &DialogActSet::new()).unwrap();
                prop_assert_eq!(&a, &b);
            }
        }

        #[test]
        fn turn_count_and_requests_are_monotone(turns in prop::collection::vec(prop::collection::vec(crate::test_support::arb_user_act(), 0..4), 1..6)) {
            let schemas = &fixture().0;
            let mut s = init_state(schemas);
            for turn in turns {
                let next = update(schemas, &s, &turn.into()).unwrap();
                prop_assert_eq!(next.turn_count, s.turn_count + 1);
                for (d, ds) in &s.domains {
                    prop_assert!(ds.requested.is_subset(&next.domains[d].requested));
                }
                s = next;
            }
        }
    }
}
