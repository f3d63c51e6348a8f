use serde::{Deserialize, Serialize};

use super::act::DialogActSet;
use crate::domain::UserGoal;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    User,
    System,
}

impl Speaker {
    pub fn other(self) -> Speaker {
        match self {
            Speaker::User => Speaker::System,
            Speaker::System => Speaker::User,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Speaker::User => "user",
            Speaker::System => "system",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoneReason {
    Success,
    FailureGoal,
    FailureTurnLimit,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub speaker: Speaker,
    pub acts: DialogActSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utterance: Option<String>,
}

/// Persisted record of one dialog.
///
/// JSON shape: `{"goal": {...}, "turns": [{"speaker", "acts", "utterance"?}],
/// "reward_trace": [..], "success": bool, "done_reason": "success" | ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub goal: UserGoal,
    pub turns: Vec<Turn>,
    pub reward_trace: Vec<f64>,
    pub success: bool,
    pub done_reason: DoneReason,
}

impl Episode {
    pub fn new(goal: UserGoal) -> Self {
        Episode { goal, turns: Vec::new(), reward_trace: Vec::new(), success: false, done_reason: DoneReason::Aborted }
    }

    pub fn push_turn(&mut self, speaker: Speaker, acts: DialogActSet, utterance: Option<String>) -> Result<()> {
        let expected = match self.turns.last() {
            None => Speaker::User,
            Some(t) => t.speaker.other(),
        };
        if speaker != expected {
            return Err(Error::WrongSpeaker { expected: expected.as_str().into(), got: speaker.as_str().into() });
        }
        self.turns.push(Turn { speaker, acts, utterance });
        Ok(())
    }

    pub fn system_turns(&self) -> usize {
        self.turns.iter().filter(|t| t.speaker == Speaker::System).count()
    }

    pub fn total_return(&self) -> f64 {
        self.reward_trace.iter().sum()
    }

    /// Checks speaker alternation and the reward/system-turn correspondence.
    pub fn check(&self) -> Result<()> {
        for (i, t) in self.turns.iter().enumerate() {
            let expected = if i % 2 == 0 { Speaker::User } else { Speaker::System };
            if t.speaker != expected {
                return Err(Error::validation(format!("turns[{i}]"), "speakers must alternate starting with the user"));
            }
        }
        if self.reward_trace.len() != self.system_turns() {
            return Err(Error::validation("reward_trace", "one reward per system turn"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("episodes serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::from_json("episode", e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialog::{ActType, DialogAct};

    #[test]
    fn alternation_enforced() {
        let mut ep = Episode::new(UserGoal::default());
        assert!(ep.push_turn(Speaker::System, DialogActSet::new(), None).is_err());
        ep.push_turn(Speaker::User, DialogActSet::new(), None).unwrap();
        assert!(ep.push_turn(Speaker::User, DialogActSet::new(), None).is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut ep = Episode::new(UserGoal::default());
        let bye: DialogActSet = vec![DialogAct::general(ActType::Bye)].into();
        ep.push_turn(Speaker::User, bye.clone(), Some("Bye".into())).unwrap();
        ep.push_turn(Speaker::System, bye, None).unwrap();
        ep.reward_trace.push(-40.0);
        ep.done_reason = DoneReason::FailureGoal;
        ep.check().unwrap();
        assert_eq!(Episode::from_json(&ep.to_json()).unwrap(), ep);
    }
}
