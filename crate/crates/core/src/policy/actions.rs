//! Composite system actions available to the learned policies.

use crate::dialog::{ActType, BeliefState, DialogAct, DialogActSet};
use crate::domain::{DomainSchemaSet, EntityDatabase};

use super::rule::{answer_requests, book_or_ask, nooffer, offer_act, pick_entity};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActionKind {
    Request(String),
    /// Offer the top entity and inform every pending request from it.
    InformRequested,
    Offer,
    Nooffer,
    Book,
    Reqmore,
    Bye,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionTemplate {
    pub domain: Option<String>,
    pub kind: ActionKind,
}

impl ActionTemplate {
    pub fn name(&self) -> String {
        let kind = match &self.kind {
            ActionKind::Request(s) => format!("request_{s}"),
            ActionKind::InformRequested => "inform_requested".into(),
            ActionKind::Offer => "offer".into(),
            ActionKind::Nooffer => "nooffer".into(),
            ActionKind::Book => "book".into(),
            ActionKind::Reqmore => "reqmore".into(),
            ActionKind::Bye => "bye".into(),
        };
        match &self.domain {
            Some(d) => format!("{d}.{kind}"),
            None => kind,
        }
    }
}

/// Per domain: one request per informable slot, `inform_requested`, `offer`,
/// `nooffer`, and `book` for bookable domains; then `reqmore` and `bye`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionInventory {
    actions: Vec<ActionTemplate>,
}

impl ActionInventory {
    pub fn new(schemas: &DomainSchemaSet) -> Self {
        let mut actions = Vec::new();
        for d in schemas.iter() {
            let mut push = |kind| actions.push(ActionTemplate { domain: Some(d.name.clone()), kind });
            for s in d.informable_slots() {
                push(ActionKind::Request(s.to_string()));
            }
            push(ActionKind::InformRequested);
            push(ActionKind::Offer);
            push(ActionKind::Nooffer);
            if d.bookable {
                push(ActionKind::Book);
            }
        }
        actions.push(ActionTemplate { domain: None, kind: ActionKind::Reqmore });
        actions.push(ActionTemplate { domain: None, kind: ActionKind::Bye });
        ActionInventory { actions }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&ActionTemplate> {
        self.actions.get(index)
    }

    pub fn names(&self) -> Vec<String> {
        self.actions.iter().map(ActionTemplate::name).collect()
    }

    /// Concrete acts for action `index` in `state`; never empty.
    pub fn expand(&self, index: usize, schemas: &DomainSchemaSet, state: &BeliefState, db: &EntityDatabase) -> DialogActSet {
        let reqmore = || vec![DialogAct::general(ActType::Reqmore)];
        let Some(action) = self.actions.get(index) else { return reqmore().into() };
        let acts = match (&action.domain, &action.kind) {
            (_, ActionKind::Reqmore) => reqmore(),
            (_, ActionKind::Bye) => vec![DialogAct::general(ActType::Bye)],
            (Some(d), kind) => {
                let (Some(schema), Some(ds)) = (schemas.get(d), state.domain(d)) else { return reqmore().into() };
                let entity = pick_entity(schema, ds, db);
                match (kind, entity) {
                    (ActionKind::Request(s), _) => vec![DialogAct::request(d, s)],
                    (ActionKind::Nooffer, _) | (_, None) => vec![nooffer(schema, ds, db)],
                    (ActionKind::InformRequested, Some(id)) => answer_requests(schema, ds, db, id),
                    (ActionKind::Offer, Some(id)) => {
                        let mut acts: Vec<DialogAct> = offer_act(schema, db, id).into_iter().collect();
                        acts.extend(ds.constraints.iter().map(|(s, v)| DialogAct::inform(d, s, v)));
                        acts
                    }
                    (ActionKind::Book, Some(id)) => book_or_ask(schema, ds, db, id),
                    _ => Vec::new(),
                }
            }
            (None, _) => Vec::new(),
        };
        if acts.is_empty() {
            reqmore().into()
        } else {
            acts.into()
        }
    }
}
