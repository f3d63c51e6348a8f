//! Agenda-based user simulator.
//!
//! The agenda is a stack of user acts seeded from the goal (bottom to top:
//! `bye`, requests, booking acts, informs). Each turn the simulator first
//! reacts to the system's acts by pushing onto or pruning the stack, then pops
//! between one and `max_initiative` acts to utter.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dialog::{ActType, DialogAct, DialogActSet};
use crate::domain::{values_match, DomainSchemaSet, EntityDatabase, UserGoal, BOOKING_REF, DONTCARE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgendaConfig {
    /// Verbatim system repeats tolerated before the user hangs up.
    pub patience: u32,
    /// Most acts uttered in one user turn.
    pub max_initiative: usize,
}

impl Default for AgendaConfig {
    fn default() -> Self {
        AgendaConfig { patience: 3, max_initiative: 2 }
    }
}

/// What the user has been told so far.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Ledger {
    /// `(domain, requested slot)` to the value received, if any.
    pub received: BTreeMap<(String, String), Option<String>>,
    /// Domain to the last offered `(slot, value)`.
    pub offers: BTreeMap<String, (String, String)>,
    /// Booking domains of the goal to the reference received, if any.
    pub booked: BTreeMap<String, Option<String>>,
}

impl Ledger {
    fn for_goal(goal: &UserGoal) -> Self {
        let mut ledger = Ledger::default();
        for (d, section) in &goal.sections {
            for s in &section.requests {
                ledger.received.insert((d.clone(), s.clone()), None);
            }
            if section.book.is_some() {
                ledger.booked.insert(d.clone(), None);
            }
        }
        ledger
    }

    fn reset_domain(&mut self, domain: &str) {
        for ((d, _), v) in self.received.iter_mut() {
            if d == domain {
                *v = None;
            }
        }
        self.offers.remove(domain);
        if let Some(b) = self.booked.get_mut(domain) {
            *b = None;
        }
    }

    pub fn unfilled(&self) -> impl Iterator<Item = (&str, &str)> {
        self.received.iter().filter(|(_, v)| v.is_none()).map(|((d, s), _)| (d.as_str(), s.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agenda {
    /// Index 0 is the bottom of the stack.
    stack: Vec<DialogAct>,
    goal: UserGoal,
    ledger: Ledger,
    patience: u32,
    config: AgendaConfig,
    last_system: Option<DialogActSet>,
    gave_up: bool,
    done: bool,
}

/// Builds the initial agenda, shuffling each tier with `seed`.
pub fn init_agenda(goal: &UserGoal, seed: u64, config: AgendaConfig) -> Result<Agenda> {
    if goal.is_empty() {
        return Err(Error::EmptyGoal);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut requests = Vec::new();
    let mut bookings = Vec::new();
    let mut informs = Vec::new();
    for (d, section) in &goal.sections {
        requests.extend(section.requests.iter().map(|s| DialogAct::request(d, s)));
        if let Some(book) = &section.book {
            bookings.extend(book.iter().map(|(s, v)| DialogAct::book(d, s, v)));
        }
        informs.extend(section.constraints.iter().map(|(s, v)| DialogAct::inform(d, s, v)));
    }
    let mut stack = vec![DialogAct::general(ActType::Bye)];
    for mut tier in [requests, bookings, informs] {
        tier.shuffle(&mut rng);
        stack.extend(tier);
    }
    Ok(Agenda {
        stack,
        goal: goal.clone(),
        ledger: Ledger::for_goal(goal),
        patience: config.patience,
        config,
        last_system: None,
        gave_up: false,
        done: false,
    })
}

impl Agenda {
    pub fn stack(&self) -> &[DialogAct] {
        &self.stack
    }

    /// The goal after any relaxations.
    pub fn goal(&self) -> &UserGoal {
        &self.goal
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn patience(&self) -> u32 {
        self.patience
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// True once the user abandoned the goal (nothing relaxable, or patience exhausted).
    pub fn gave_up(&self) -> bool {
        self.gave_up
    }

    /// Moves `act` to the top, dropping any earlier copy (or earlier value for the same inform slot).
    fn push(&mut self, act: DialogAct) {
        self.stack.retain(|a| {
            a.act_type == ActType::Bye
                || !(a.act_type == act.act_type && a.domain == act.domain && a.slot == act.slot)
        });
        self.stack.push(act);
    }

    fn remove_request(&mut self, domain: &str, slot: &str) {
        self.stack.retain(|a| !(a.act_type == ActType::Request && a.domain == domain && a.slot == slot));
    }

    fn repush_unfilled(&mut self, domain: Option<&str>) {
        let unfilled: Vec<(String, String)> = self
            .ledger
            .unfilled()
            .filter(|(d, _)| domain.is_none_or(|x| x == *d))
            .map(|(d, s)| (d.to_string(), s.to_string()))
            .collect();
        for (d, s) in unfilled {
            self.push(DialogAct::request(&d, &s));
        }
        let open: Vec<String> = self
            .ledger
            .booked
            .iter()
            .filter(|(d, r)| r.is_none() && domain.is_none_or(|x| x == d.as_str()))
            .map(|(d, _)| d.clone())
            .collect();
        for d in open {
            if let Some(book) = self.goal.sections.get(&d).and_then(|s| s.book.clone()) {
                for (s, v) in book {
                    self.push(DialogAct::book(&d, &s, &v));
                }
            }
        }
    }

    /// Alternative `(slot, value)` pairs for `domain` keeping the goal satisfiable.
    fn relaxations(&self, domain: &str, schemas: &DomainSchemaSet, db: &EntityDatabase) -> Vec<(String, String)> {
        let (Some(section), Some(schema)) = (self.goal.sections.get(domain), schemas.get(domain)) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for (slot, current) in &section.constraints {
            for v in schema.vocabulary(slot).unwrap_or(&[]) {
                if values_match(v, current) {
                    continue;
                }
                let mut c = section.constraints.clone();
                c.insert(slot.clone(), v.clone());
                if db.count(domain, &c).unwrap_or(0) > 0 {
                    out.push((slot.clone(), v.clone()));
                }
            }
        }
        out
    }

    fn give_up(&mut self) {
        self.gave_up = true;
        self.stack.clear();
        self.stack.push(DialogAct::general(ActType::Bye));
    }

    /// Reacts to `system_acts` and returns the user's next acts; `done` once `bye` is uttered.
    pub fn step<R: Rng>(
        &mut self,
        system_acts: &DialogActSet,
        schemas: &DomainSchemaSet,
        db: &EntityDatabase,
        rng: &mut R,
    ) -> (DialogActSet, bool) {
        if self.done {
            return (DialogActSet::new(), true);
        }
        if system_acts.has_type(ActType::Bye) {
            return self.finish();
        }
        if !system_acts.is_empty() && self.last_system.as_ref() == Some(system_acts) {
            self.patience = self.patience.saturating_sub(1);
        }
        self.last_system = Some(system_acts.clone());
        if self.patience == 0 {
            self.gave_up = true;
            return self.finish();
        }
        self.react(system_acts, schemas, db, Some(&mut *rng));
        self.emit(rng)
    }

    /// Follows the system side of a dialog whose user turns come from elsewhere,
    /// keeping the ledger and patience exactly as [`Agenda::step`] would. Goal
    /// changes are learned from the user's own informs via [`Agenda::judge_user`].
    pub fn judge_system(&mut self, system_acts: &DialogActSet, schemas: &DomainSchemaSet, db: &EntityDatabase) {
        if self.done {
            return;
        }
        if system_acts.has_type(ActType::Bye) {
            self.done = true;
            return;
        }
        if !system_acts.is_empty() && self.last_system.as_ref() == Some(system_acts) {
            self.patience = self.patience.saturating_sub(1);
        }
        self.last_system = Some(system_acts.clone());
        if self.patience == 0 {
            self.gave_up = true;
            self.done = true;
            return;
        }
        self.react::<ChaCha8Rng>(system_acts, schemas, db, None);
    }

    /// Adopts relaxed goal values declared by the user and notes a farewell.
    pub fn judge_user(&mut self, user_acts: &DialogActSet) {
        for act in user_acts {
            if act.act_type == ActType::Bye {
                self.done = true;
            }
            if act.act_type != ActType::Inform || act.value == DONTCARE {
                continue;
            }
            let Some(section) = self.goal.sections.get_mut(&act.domain) else { continue };
            if let Some(v) = section.constraints.get_mut(&act.slot) {
                if !values_match(v, &act.value) {
                    *v = act.value.clone();
                    self.ledger.reset_domain(&act.domain);
                }
            }
        }
    }

    fn finish(&mut self) -> (DialogActSet, bool) {
        self.done = true;
        self.stack.clear();
        (vec![DialogAct::general(ActType::Bye)].into(), true)
    }

    fn react<R: Rng>(
        &mut self,
        system_acts: &DialogActSet,
        schemas: &DomainSchemaSet,
        db: &EntityDatabase,
        mut rng: Option<&mut R>,
    ) {
        let mut reasserts: Vec<DialogAct> = Vec::new();
        let mut rejected: BTreeSet<String> = BTreeSet::new();
        let mut heard: Vec<((String, String), String)> = Vec::new();
        let mut offers: Vec<(String, (String, String))> = Vec::new();
        let mut refs: Vec<(String, String)> = Vec::new();
        let mut relaxed: BTreeSet<String> = BTreeSet::new();

        for act in system_acts {
            let Some(section) = self.goal.sections.get(&act.domain).cloned() else { continue };
            let d = act.domain.clone();
            match act.act_type {
                ActType::Inform => {
                    if let Some(goal_v) = section.constraints.get(&act.slot) {
                        if !values_match(goal_v, &act.value) {
                            reasserts.push(DialogAct::inform(&d, &act.slot, goal_v));
                            rejected.insert(d);
                        }
                    } else if section.requests.contains(&act.slot) {
                        heard.push(((d, act.slot.clone()), act.value.clone()));
                    }
                }
                ActType::Offer | ActType::Recommend | ActType::Select => {
                    offers.push((d, (act.slot.clone(), act.value.clone())));
                }
                ActType::Book => {
                    let Some(book) = &section.book else { continue };
                    if act.slot == BOOKING_REF {
                        refs.push((d, act.value.clone()));
                    } else if let Some(goal_v) = book.get(&act.slot) {
                        if !values_match(goal_v, &act.value) {
                            reasserts.push(DialogAct::book(&d, &act.slot, goal_v));
                            rejected.insert(d);
                        }
                    }
                }
                ActType::Request => {
                    if let Some(goal_v) = section.constraints.get(&act.slot) {
                        reasserts.push(DialogAct::inform(&d, &act.slot, goal_v));
                    } else if let Some(v) = section.book.as_ref().and_then(|b| b.get(&act.slot)) {
                        reasserts.push(DialogAct::book(&d, &act.slot, v));
                    } else if schemas.get(&d).is_some_and(|s| s.is_informable(&act.slot)) {
                        reasserts.push(DialogAct::inform(&d, &act.slot, DONTCARE));
                    }
                }
                ActType::Nooffer => {
                    match section.constraints.get(&act.slot) {
                        None if act.has_slot() => reasserts.push(DialogAct::inform(&d, &act.slot, DONTCARE)),
                        Some(goal_v) if !values_match(goal_v, &act.value) => {
                            reasserts.push(DialogAct::inform(&d, &act.slot, goal_v));
                        }
                        _ => {
                            let Some(rng) = rng.as_deref_mut() else {
                                rejected.insert(d);
                                continue;
                            };
                            if relaxed.contains(&d) {
                                continue;
                            }
                            let options = self.relaxations(&d, schemas, db);
                            match options.choose(rng) {
                                Some((slot, value)) => {
                                    if let Some(section) = self.goal.sections.get_mut(&d) {
                                        section.constraints.insert(slot.clone(), value.clone());
                                    }
                                    reasserts.push(DialogAct::inform(&d, slot, value));
                                    relaxed.insert(d.clone());
                                }
                                None => {
                                    self.give_up();
                                    return;
                                }
                            }
                        }
                    }
                    rejected.insert(act.domain.clone());
                }
                _ => {}
            }
        }

        for d in &relaxed {
            self.ledger.reset_domain(d);
        }
        for ((d, s), v) in heard {
            if rejected.contains(&d) {
                continue;
            }
            self.remove_request(&d, &s);
            self.ledger.received.insert((d, s), Some(v));
        }
        for (d, offer) in offers {
            if !rejected.contains(&d) {
                self.ledger.offers.insert(d, offer);
            }
        }
        for (d, r) in refs {
            if !rejected.contains(&d) {
                self.stack.retain(|a| !(a.act_type == ActType::Book && a.domain == d));
                self.ledger.booked.insert(d, Some(r));
            }
        }
        for d in &rejected {
            self.repush_unfilled(Some(d));
        }
        for act in reasserts {
            self.push(act);
        }
    }

    fn emit<R: Rng>(&mut self, rng: &mut R) -> (DialogActSet, bool) {
        if self.stack.len() <= 1 && !self.gave_up {
            self.repush_unfilled(None);
        }
        let n = rng.gen_range(1..=self.config.max_initiative.max(1));
        let mut out = Vec::new();
        while out.len() < n {
            match self.stack.last() {
                None => break,
                Some(top) if top.act_type == ActType::Bye && !out.is_empty() => break,
                Some(_) => out.push(self.stack.pop().expect("non-empty")),
            }
        }
        let done = out.iter().any(|a| a.act_type == ActType::Bye) || out.is_empty();
        if out.is_empty() {
            out.push(DialogAct::general(ActType::Bye));
        }
        self.done = done;
        (out.into(), done)
    }
}

/// An agenda together with the random stream driving its turn-taking.
#[derive(Debug, Clone)]
pub struct AgendaUser {
    agenda: Agenda,
    rng: ChaCha8Rng,
}

impl AgendaUser {
    /// The agenda is shuffled with `seed`; turn-taking draws from a stream derived from it.
    pub fn new(goal: &UserGoal, seed: u64, config: AgendaConfig) -> Result<Self> {
        Ok(AgendaUser {
            agenda: init_agenda(goal, seed, config)?,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15),
        })
    }

    pub fn respond(&mut self, system_acts: &DialogActSet, schemas: &DomainSchemaSet, db: &EntityDatabase) -> (DialogActSet, bool) {
        self.agenda.step(system_acts, schemas, db, &mut self.rng)
    }

    pub fn agenda(&self) -> &Agenda {
        &self.agenda
    }

    pub fn succeeded(&self, db: &EntityDatabase) -> bool {
        !self.agenda.gave_up() && goal_success(self.agenda.goal(), self.agenda.ledger(), db)
    }
}

/// Functional form of [`Agenda::step`].
pub fn user_step<R: Rng>(
    agenda: &Agenda,
    system_acts: &DialogActSet,
    schemas: &DomainSchemaSet,
    db: &EntityDatabase,
    rng: &mut R,
) -> (DialogActSet, Agenda, bool) {
    let mut next = agenda.clone();
    let (acts, done) = next.step(system_acts, schemas, db, rng);
    (acts, next, done)
}

/// Success when every request got a value, every booking got a reference, and
/// per domain one entity matching the goal constraints carries every received
/// value and the offered one. A domain with no offer, request, or booking
/// counts as unmet.
pub fn goal_success(goal: &UserGoal, ledger: &Ledger, db: &EntityDatabase) -> bool {
    if goal.is_empty() {
        return false;
    }
    for (d, section) in &goal.sections {
        let mut wanted: Vec<(String, String)> = Vec::new();
        for s in &section.requests {
            match ledger.received.get(&(d.clone(), s.clone())) {
                Some(Some(v)) => wanted.push((s.clone(), v.clone())),
                _ => return false,
            }
        }
        if section.book.is_some() && !matches!(ledger.booked.get(d), Some(Some(_))) {
            return false;
        }
        match ledger.offers.get(d) {
            Some(offer) => wanted.push(offer.clone()),
            None if wanted.is_empty() && section.book.is_none() => return false,
            None => {}
        }
        let Ok(candidates) = db.query(d, &section.constraints) else { return false };
        let consistent = candidates
            .iter()
            .any(|e| wanted.iter().all(|(s, v)| e.get(s).is_some_and(|ev| values_match(ev, v))));
        if !consistent {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialog::string_to_acts;
    use crate::domain::{sample_goal, toy_ontology, GoalProfile, GoalSection};

    fn goal(domain: &str, constraints: &[(&str, &str)], requests: &[&str]) -> UserGoal {
        let mut section = GoalSection::default();
        for (s, v) in constraints {
            section.constraints.insert(s.to_string(), v.to_string());
        }
        for s in requests {
            section.requests.insert(s.to_string());
        }
        let mut g = UserGoal::default();
        g.sections.insert(domain.to_string(), section);
        g
    }

    fn acts(s: &str) -> DialogActSet {
        string_to_acts(s).unwrap()
    }

    #[test]
    fn initial_stack_shape() {
        let g = goal("restaurant", &[("area", "centre"), ("food", "italian"), ("pricerange", "cheap")], &["phone", "address"]);
        let a = init_agenda(&g, 7, AgendaConfig::default()).unwrap();
        assert_eq!(a.stack().len(), 6);
        assert_eq!(a.stack()[0], DialogAct::general(ActType::Bye));
        assert!(a.stack()[1..3].iter().all(|x| x.act_type == ActType::Request));
        assert!(a.stack()[3..].iter().all(|x| x.act_type == ActType::Inform));
        assert_eq!(a, init_agenda(&g, 7, AgendaConfig::default()).unwrap());
        assert_eq!(a.ledger().unfilled().count(), 2);
    }

    #[test]
    fn empty_goal_rejected() {
        assert!(matches!(init_agenda(&UserGoal::default(), 0, AgendaConfig::default()), Err(Error::EmptyGoal)));
    }

    #[test]
    fn answers_a_system_request() {
        let (schemas, db) = toy_ontology();
        let g = goal("restaurant", &[("area", "north")], &["phone"]);
        let mut a = init_agenda(&g, 1, AgendaConfig { patience: 3, max_initiative: 1 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        // first turn utters the inform; the system then asks for it again
        let (first, _) = a.step(&DialogActSet::new(), &schemas, &db, &mut rng);
        assert_eq!(first, acts("inform(restaurant, area=north)"));
        let (out, done) = a.step(&acts("request(restaurant, area)"), &schemas, &db, &mut rng);
        assert!(out.contains(&DialogAct::inform("restaurant", "area", "north")));
        assert!(!done);
    }

    #[test]
    fn system_bye_ends_the_dialog() {
        let (schemas, db) = toy_ontology();
        let g = goal("restaurant", &[("area", "north")], &["phone"]);
        let mut a = init_agenda(&g, 1, AgendaConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (out, done) = a.step(&acts("bye(general)"), &schemas, &db, &mut rng);
        assert!(done);
        assert_eq!(out, acts("bye(general)"));
    }

    #[test]
    fn reqmore_with_only_bye_left_says_bye() {
        let (schemas, db) = toy_ontology();
        let g = goal("restaurant", &[("area", "north")], &[]);
        let mut a = init_agenda(&g, 1, AgendaConfig { patience: 3, max_initiative: 1 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        a.step(&DialogActSet::new(), &schemas, &db, &mut rng);
        assert_eq!(a.stack().len(), 1);
        let (out, done) = a.step(&acts("reqmore(general)"), &schemas, &db, &mut rng);
        assert_eq!(out, acts("bye(general)"));
        assert!(done);
    }

    #[test]
    fn informs_fill_the_ledger_and_leave_the_stack() {
        let (schemas, db) = toy_ontology();
        let g = goal("restaurant", &[("area", "north"), ("food", "indian")], &["phone"]);
        let mut a = init_agenda(&g, 3, AgendaConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let sys = acts("offer(restaurant, name=pizza hut centre)|inform(restaurant, phone=01223 307919; area=north; food=indian)");
        a.step(&sys, &schemas, &db, &mut rng);
        assert_eq!(a.ledger().received[&("restaurant".into(), "phone".into())].as_deref(), Some("01223 307919"));
        assert!(!a.stack().iter().any(|x| x.act_type == ActType::Request));
        assert!(goal_success(a.goal(), a.ledger(), &db));
    }

    #[test]
    fn contradiction_rejects_the_turn() {
        let (schemas, db) = toy_ontology();
        let g = goal("restaurant", &[("area", "north")], &["phone"]);
        let mut a = init_agenda(&g, 3, AgendaConfig { patience: 3, max_initiative: 1 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let sys = acts("offer(restaurant, name=the golden curry)|inform(restaurant, phone=01223 300000; area=centre)");
        let (out, _) = a.step(&sys, &schemas, &db, &mut rng);
        assert_eq!(out, acts("inform(restaurant, area=north)"));
        assert!(a.ledger().unfilled().count() == 1);
        assert_eq!(a.stack().last(), Some(&DialogAct::request("restaurant", "phone")));
    }

    #[test]
    fn nooffer_on_a_goal_value_relaxes() {
        let (schemas, db) = toy_ontology();
        let g = goal("restaurant", &[("area", "north"), ("food", "indian")], &["phone"]);
        let mut a = init_agenda(&g, 3, AgendaConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        a.step(&acts("nooffer(restaurant, food=indian)"), &schemas, &db, &mut rng);
        let relaxed = &a.goal().sections["restaurant"].constraints;
        assert_ne!(relaxed, &g.sections["restaurant"].constraints);
        assert!(db.count("restaurant", relaxed).unwrap() > 0);
    }

    #[test]
    fn patience_runs_out_on_repeats() {
        let (schemas, db) = toy_ontology();
        let g = goal("restaurant", &[("area", "north")], &["phone", "address"]);
        let mut a = init_agenda(&g, 3, AgendaConfig { patience: 2, max_initiative: 1 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let sys = acts("request(hotel, area)");
        let mut done = false;
        for _ in 0..3 {
            done = a.step(&sys, &schemas, &db, &mut rng).1;
        }
        assert!(done && a.gave_up());
    }

    #[test]
    fn success_adjudication() {
        let (schemas, db) = toy_ontology();
        let g = goal("restaurant", &[("area", "north"), ("food", "indian")], &["phone"]);
        let fresh = init_agenda(&g, 0, AgendaConfig::default()).unwrap();
        assert!(!goal_success(&g, fresh.ledger(), &db));
        let _ = schemas;
        let mut c = BTreeMap::new();
        c.insert("area".to_string(), "north".to_string());
        c.insert("food".to_string(), "indian".to_string());
        let phone = db.query("restaurant", &c).unwrap()[0].get("phone").unwrap().to_string();
        let mut ledger = fresh.ledger().clone();
        ledger.received.insert(("restaurant".into(), "phone".into()), Some(phone));
        assert!(goal_success(&g, &ledger, &db));
        ledger.received.insert(("restaurant".into(), "phone".into()), Some("01223 300000".into()));
        assert!(!goal_success(&g, &ledger, &db));
    }

    #[test]
    fn emitted_informs_follow_the_goal() {
        let (schemas, db) = toy_ontology();
        let profile = GoalProfile::default();
        for seed in 0..200 {
            let g = sample_goal(seed, &schemas, &db, &profile).unwrap();
            let mut a = init_agenda(&g, seed, AgendaConfig::default()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut sys = DialogActSet::new();
            for _ in 0..10 {
                assert_eq!(a.stack().first().map(|x| x.act_type), Some(ActType::Bye));
                let (out, done) = a.step(&sys, &schemas, &db, &mut rng);
                for act in out.iter().filter(|x| x.act_type == ActType::Inform && x.value != DONTCARE) {
                    assert_eq!(a.goal().sections[&act.domain].constraints.get(&act.slot), Some(&act.value));
                }
                if done {
                    break;
                }
                sys = acts("reqmore(general)");
            }
        }
    }
}
