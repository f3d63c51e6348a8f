//! Handcrafted system policy.

use std::collections::BTreeSet;

use crate::dialog::{ActType, BeliefState, DialogAct, DialogActSet, DomainState};
use crate::domain::{DomainSchema, DomainSchemaSet, EntityDatabase, BOOKING_REF, BOOKING_SLOTS, DONTCARE};

/// Decides the system turn for `state`.
///
/// Per domain, in schema order:
/// * pending requests or an open booking: offer an entity (the one already
///   offered if it still matches, else the first match), inform every pending
///   slot from it, confirm the tracked constraints, then book or ask for the
///   missing booking slot; `nooffer` when nothing matches;
/// * a domain the user just spoke about: ask for the highest-priority unfilled
///   informable slot while more than one entity matches, otherwise offer and
///   echo what the user said.
///
/// Falls back to `reqmore`; a terminated state gets `bye`.
pub fn decide_rule(schemas: &DomainSchemaSet, state: &BeliefState, db: &EntityDatabase) -> DialogActSet {
    if state.terminated {
        return vec![DialogAct::general(ActType::Bye)].into();
    }
    let mentioned: BTreeSet<&str> = state.last_user_acts.iter().map(|a| a.domain.as_str()).collect();
    let mut acts = Vec::new();
    for schema in schemas.iter() {
        let Some(ds) = state.domain(&schema.name) else { continue };
        let open_booking = ds.wants_booking() && ds.booked.is_none();
        if !ds.requested.is_empty() || open_booking {
            match pick_entity(schema, ds, db) {
                None => acts.push(nooffer(schema, ds, db)),
                Some(id) => {
                    acts.extend(answer_requests(schema, ds, db, id));
                    if open_booking {
                        acts.extend(book_or_ask(schema, ds, db, id));
                    }
                }
            }
        } else if mentioned.contains(schema.name.as_str()) {
            let count = db.count(&schema.name, &ds.constraints).unwrap_or(0);
            if count == 0 {
                acts.push(nooffer(schema, ds, db));
            } else if let Some(slot) = unfilled_slot(schema, ds).filter(|_| count > 1) {
                acts.push(DialogAct::request(&schema.name, slot));
            } else if let Some(id) = pick_entity(schema, ds, db) {
                acts.extend(offer_with_echo(schema, ds, db, id, state));
            }
        }
    }
    if acts.is_empty() {
        acts.push(DialogAct::general(ActType::Reqmore));
    }
    acts.into()
}

pub(crate) fn unfilled_slot<'a>(schema: &'a DomainSchema, ds: &DomainState) -> Option<&'a str> {
    schema.informable_slots().find(|s| !ds.is_filled(s))
}

/// The offered entity if it still matches the constraints, else the first match.
pub(crate) fn pick_entity(schema: &DomainSchema, ds: &DomainState, db: &EntityDatabase) -> Option<usize> {
    let ids = db.query_ids(&schema.name, &ds.constraints).ok()?;
    match ds.offered_entity {
        Some(id) if ids.contains(&id) => Some(id),
        _ => ids.first().copied(),
    }
}

pub(crate) fn offer_act(schema: &DomainSchema, db: &EntityDatabase, id: usize) -> Option<DialogAct> {
    let slot = schema.offer_slot();
    let value = db.entity(id)?.get(slot)?;
    Some(DialogAct::new(ActType::Offer, &schema.name, slot, value))
}

fn confirmations<'a>(schema: &'a DomainSchema, ds: &'a DomainState) -> impl Iterator<Item = DialogAct> + 'a {
    ds.constraints.iter().map(|(s, v)| DialogAct::inform(&schema.name, s, v))
}

/// Offer, informs for every pending request, and confirmation of constraints.
pub(crate) fn answer_requests(schema: &DomainSchema, ds: &DomainState, db: &EntityDatabase, id: usize) -> Vec<DialogAct> {
    let mut acts: Vec<DialogAct> = offer_act(schema, db, id).into_iter().collect();
    if let Some(entity) = db.entity(id) {
        for slot in &ds.requested {
            if let Some(v) = entity.get(slot) {
                acts.push(DialogAct::inform(&schema.name, slot, v));
            }
        }
    }
    acts.extend(confirmations(schema, ds));
    acts
}

/// Booking confirmation when day and people are known, else a request for the
/// first missing one.
pub(crate) fn book_or_ask(schema: &DomainSchema, ds: &DomainState, db: &EntityDatabase, id: usize) -> Vec<DialogAct> {
    if !schema.bookable {
        return Vec::new();
    }
    if let Some(missing) = BOOKING_SLOTS.iter().find(|s| !ds.booking.contains_key(**s)) {
        return vec![DialogAct::request(&schema.name, missing)];
    }
    let mut acts: Vec<DialogAct> = offer_act(schema, db, id).into_iter().collect();
    for (s, v) in &ds.booking {
        acts.push(DialogAct::book(&schema.name, s, v));
    }
    acts.push(DialogAct::book(&schema.name, BOOKING_REF, &booking_reference(&schema.name, id)));
    acts
}

/// Deterministic reference for a booking of entity `id`.
pub fn booking_reference(domain: &str, id: usize) -> String {
    let prefix: String = domain.chars().take(3).collect::<String>().to_uppercase();
    format!("{prefix}{id:04}")
}

/// Offer plus an echo of the values the user informed this turn.
pub(crate) fn offer_with_echo(
    schema: &DomainSchema,
    ds: &DomainState,
    db: &EntityDatabase,
    id: usize,
    state: &BeliefState,
) -> Vec<DialogAct> {
    let mut acts: Vec<DialogAct> = offer_act(schema, db, id).into_iter().collect();
    for a in state.last_user_acts.iter() {
        if a.act_type == ActType::Inform && a.domain == schema.name && a.value != DONTCARE {
            if let Some(v) = ds.constraints.get(&a.slot) {
                acts.push(DialogAct::inform(&schema.name, &a.slot, v));
            }
        }
    }
    acts
}

/// `nooffer` naming the first constraint (by priority) whose removal leaves a
/// match, or the first constraint if none does.
pub(crate) fn nooffer(schema: &DomainSchema, ds: &DomainState, db: &EntityDatabase) -> DialogAct {
    let constrained: Vec<(&String, &String)> = schema
        .informable_slots()
        .filter_map(|s| ds.constraints.get_key_value(s))
        .collect();
    let violated = constrained
        .iter()
        .find(|(slot, _)| {
            let mut relaxed = ds.constraints.clone();
            relaxed.remove(*slot);
            db.count(&schema.name, &relaxed).unwrap_or(0) > 0
        })
        .or(constrained.first());
    match violated {
        Some((s, v)) => DialogAct::new(ActType::Nooffer, &schema.name, s, v),
        None => DialogAct::bare(ActType::Nooffer, &schema.name),
    }
}
