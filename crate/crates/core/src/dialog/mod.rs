//! Dialog act algebra, belief state, and episode records shared by every component.

mod act;
mod belief;
mod episode;

pub use act::{acts_to_string, canonicalize, string_to_acts, ActType, DialogAct, DialogActSet, GENERAL, NONE};
pub use belief::{BeliefState, DomainState};
pub use episode::{DoneReason, Episode, Speaker, Turn};
