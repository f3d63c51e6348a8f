use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::act::DialogActSet;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DomainState {
    /// Informable slot -> value.
    pub constraints: BTreeMap<String, String>,
    /// Informable slots the user explicitly does not care about.
    pub dontcare: BTreeSet<String>,
    /// Requestable slots the user asked for and has not yet been told.
    pub requested: BTreeSet<String>,
    /// Booking slot -> value.
    pub booking: BTreeMap<String, String>,
    /// Database id of the entity last offered by the system.
    pub offered_entity: Option<usize>,
    /// Reference of the booking made for the current booking request.
    pub booked: Option<String>,
}

impl DomainState {
    pub fn is_filled(&self, slot: &str) -> bool {
        self.constraints.contains_key(slot) || self.dontcare.contains(slot)
    }

    pub fn wants_booking(&self) -> bool {
        !self.booking.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BeliefState {
    pub domains: BTreeMap<String, DomainState>,
    pub terminated: bool,
    pub turn_count: u32,
    /// User acts of the most recent update.
    pub last_user_acts: DialogActSet,
}

impl BeliefState {
    pub fn domain(&self, name: &str) -> Option<&DomainState> {
        self.domains.get(name)
    }

    pub fn domain_mut(&mut self, name: &str) -> Option<&mut DomainState> {
        self.domains.get_mut(name)
    }

    /// Every domain's constraints, keyed by domain.
    pub fn joint_constraints(&self) -> BTreeMap<&str, &BTreeMap<String, String>> {
        self.domains.iter().map(|(d, s)| (d.as_str(), &s.constraints)).collect()
    }
}
