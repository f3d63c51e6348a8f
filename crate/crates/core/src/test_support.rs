use proptest::prelude::*;

use crate::dialog::{ActType, DialogAct};
use crate::domain::{toy_ontology, DONTCARE};

/// Any well-formed user act over the toy ontology.
pub(crate) fn arb_user_act() -> impl Strategy<Value = DialogAct> {
    let (schemas, _) = toy_ontology();
    let mut pool = Vec::new();
    for d in schemas.iter() {
        for (slot, values) in &d.informable {
            for v in values {
                pool.push(DialogAct::inform(&d.name, slot, v));
            }
            pool.push(DialogAct::inform(&d.name, slot, DONTCARE));
        }
        for slot in &d.requestable {
            pool.push(DialogAct::request(&d.name, slot));
        }
        if d.bookable {
            pool.push(DialogAct::book(&d.name, "day", "friday"));
            pool.push(DialogAct::book(&d.name, "people", "3"));
        }
    }
    pool.push(DialogAct::general(ActType::Bye));
    pool.push(DialogAct::general(ActType::Thank));
    prop::sample::select(pool)
}

/// Concrete acts that an invertible template of `role` realizes, valued from
/// the schema vocabularies, booking vocabularies and the toy database.
pub(crate) fn expressible_acts(role: crate::nlg::Role) -> Vec<DialogAct> {
    use std::collections::BTreeSet;
    let world = crate::world::World::toy();
    let mut out = BTreeSet::new();
    for t in world.templates.entries().iter().filter(|t| t.invertible && t.role.admits(role)) {
        let sk = &t.skeleton;
        if !t.has_placeholder() {
            out.insert(sk.clone());
            continue;
        }
        let mut values: BTreeSet<String> = BTreeSet::new();
        if let Some(schema) = world.schemas.get(&sk.domain) {
            values.extend(schema.vocabulary(&sk.slot).unwrap_or_default().iter().cloned());
        }
        values.extend(crate::domain::booking_vocabulary(&sk.slot).unwrap_or_default().iter().map(|v| v.to_string()));
        for e in world.db.entities().iter().filter(|e| e.domain == sk.domain) {
            if let Some(v) = e.get(&sk.slot) {
                values.insert(v.to_string());
            }
        }
        for v in values {
            out.insert(DialogAct::new(sk.act_type, &sk.domain, &sk.slot, &v));
        }
    }
    out.into_iter().filter(|a| world.templates.find(a, role).is_some_and(|t| t.invertible)).collect()
}
