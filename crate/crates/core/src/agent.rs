//! Component interfaces and the dialog agent that chains them.
//!
//! An agent is one of four layouts: the modular pipeline (NLU, DST, policy,
//! NLG), word-level DST replacing NLU and DST, word-level policy replacing
//! policy and NLG, or a single end-to-end model. At act level the NLU and NLG
//! stages are skipped.

use std::sync::Arc;

use crate::dialog::{BeliefState, DialogActSet};
use crate::dst;
use crate::env::{Payload, SystemOutput};
use crate::error::{Error, Result};
use crate::nlg::Role;
use crate::policy::{decide_rule, Checkpoint, RlConfig, RlPolicy};
use crate::world::World;

pub trait Nlu: Send {
    fn parse(&self, utterance: &str, context: &DialogActSet) -> DialogActSet;
}

pub trait Tracker: Send {
    fn reset(&mut self);
    fn state(&self) -> &BeliefState;
    fn update(&mut self, user_acts: &DialogActSet) -> Result<()>;
    /// Lets the tracker account for what the system just said.
    fn observe_system(&mut self, system_acts: &DialogActSet);
}

pub trait WordTracker: Send {
    fn reset(&mut self);
    fn state(&self) -> &BeliefState;
    fn update_text(&mut self, utterance: &str, last_system: &DialogActSet) -> Result<()>;
    fn observe_system(&mut self, system_acts: &DialogActSet);
}

pub trait Policy: Send {
    fn begin_episode(&mut self, _index: usize, _total: usize) {}
    fn decide(&mut self, state: &BeliefState) -> Result<DialogActSet>;
    fn observe(&mut self, _reward: f64, _done: bool) -> Result<()> {
        Ok(())
    }
    fn is_trainable(&self) -> bool {
        false
    }
    fn set_training(&mut self, _training: bool) {}
    fn checkpoint(&self) -> Option<Checkpoint> {
        None
    }
    fn restore(&mut self, _ckpt: &Checkpoint) -> Result<()> {
        Err(Error::Incompatible("policy has no parameters to restore".into()))
    }
}

pub trait Nlg: Send {
    fn generate(&self, acts: &DialogActSet) -> Result<String>;
}

pub trait WordPolicy: Send {
    fn respond(&mut self, state: &BeliefState) -> Result<SystemOutput>;
}

pub trait EndToEnd: Send {
    fn reset(&mut self);
    fn respond(&mut self, input: &Payload) -> Result<SystemOutput>;
    fn state(&self) -> Option<&BeliefState> {
        None
    }
}

pub struct PatternNlu {
    world: Arc<World>,
}

impl PatternNlu {
    pub fn new(world: Arc<World>) -> Self {
        PatternNlu { world }
    }
}

impl Nlu for PatternNlu {
    fn parse(&self, utterance: &str, context: &DialogActSet) -> DialogActSet {
        self.world.lexicon.parse(utterance, Some(context))
    }
}

pub struct RuleDst {
    world: Arc<World>,
    state: BeliefState,
}

impl RuleDst {
    pub fn new(world: Arc<World>) -> Self {
        let state = dst::init_state(&world.schemas);
        RuleDst { world, state }
    }
}

impl Tracker for RuleDst {
    fn reset(&mut self) {
        self.state = dst::init_state(&self.world.schemas);
    }

    fn state(&self) -> &BeliefState {
        &self.state
    }

    fn update(&mut self, user_acts: &DialogActSet) -> Result<()> {
        self.state = dst::update(&self.world.schemas, &self.state, user_acts)?;
        Ok(())
    }

    fn observe_system(&mut self, system_acts: &DialogActSet) {
        dst::observe_system_acts(&self.world.schemas, &self.world.db, &mut self.state, system_acts);
    }
}

/// Reference word-level tracker: pattern understanding folded by the rule tracker.
pub struct WordDst {
    world: Arc<World>,
    state: BeliefState,
}

impl WordDst {
    pub fn new(world: Arc<World>) -> Self {
        let state = dst::init_state(&world.schemas);
        WordDst { world, state }
    }
}

impl WordTracker for WordDst {
    fn reset(&mut self) {
        self.state = dst::init_state(&self.world.schemas);
    }

    fn state(&self) -> &BeliefState {
        &self.state
    }

    fn update_text(&mut self, utterance: &str, last_system: &DialogActSet) -> Result<()> {
        let w = &self.world;
        self.state = dst::word_dst_update(&w.schemas, &w.lexicon, &self.state, utterance, last_system)?;
        Ok(())
    }

    fn observe_system(&mut self, system_acts: &DialogActSet) {
        dst::observe_system_acts(&self.world.schemas, &self.world.db, &mut self.state, system_acts);
    }
}

pub struct RulePolicy {
    world: Arc<World>,
}

impl RulePolicy {
    pub fn new(world: Arc<World>) -> Self {
        RulePolicy { world }
    }
}

impl Policy for RulePolicy {
    fn decide(&mut self, state: &BeliefState) -> Result<DialogActSet> {
        Ok(decide_rule(&self.world.schemas, state, &self.world.db))
    }
}

/// Q-learning or REINFORCE over the composite action inventory.
pub struct LearnedPolicy {
    world: Arc<World>,
    rl: RlPolicy,
}

impl LearnedPolicy {
    pub fn new(world: Arc<World>, config: RlConfig, seed: u64) -> Result<Self> {
        let rl = RlPolicy::new(&world.schemas, config, seed)?;
        Ok(LearnedPolicy { world, rl })
    }

    pub fn rl(&self) -> &RlPolicy {
        &self.rl
    }
}

impl Policy for LearnedPolicy {
    fn begin_episode(&mut self, index: usize, total: usize) {
        self.rl.begin_episode(index, total);
    }

    fn decide(&mut self, state: &BeliefState) -> Result<DialogActSet> {
        self.rl.act(&self.world.schemas, state, &self.world.db)
    }

    fn observe(&mut self, reward: f64, done: bool) -> Result<()> {
        self.rl.observe(reward, done)
    }

    fn is_trainable(&self) -> bool {
        true
    }

    fn set_training(&mut self, training: bool) {
        self.rl.set_training(training);
    }

    fn checkpoint(&self) -> Option<Checkpoint> {
        Some(self.rl.checkpoint(&self.world.schemas))
    }

    fn restore(&mut self, ckpt: &Checkpoint) -> Result<()> {
        self.rl.restore(&self.world.schemas, ckpt)
    }
}

pub struct TemplateNlg {
    world: Arc<World>,
    role: Role,
}

impl TemplateNlg {
    pub fn new(world: Arc<World>, role: Role) -> Self {
        TemplateNlg { world, role }
    }
}

impl Nlg for TemplateNlg {
    fn generate(&self, acts: &DialogActSet) -> Result<String> {
        self.world.templates.generate(acts, self.role)
    }
}

/// Reference word-level policy: the rule policy realized through templates.
pub struct ReferenceWordPolicy {
    policy: RulePolicy,
    nlg: TemplateNlg,
}

impl ReferenceWordPolicy {
    pub fn new(world: Arc<World>) -> Self {
        ReferenceWordPolicy { policy: RulePolicy::new(world.clone()), nlg: TemplateNlg::new(world, Role::System) }
    }
}

impl WordPolicy for ReferenceWordPolicy {
    fn respond(&mut self, state: &BeliefState) -> Result<SystemOutput> {
        let acts = self.policy.decide(state)?;
        let text = self.nlg.generate(&acts)?;
        Ok(SystemOutput { acts, text: Some(text) })
    }
}

/// Reference end-to-end model: the whole rule pipeline behind one interface.
pub struct RuleEndToEnd {
    nlu: PatternNlu,
    tracker: RuleDst,
    policy: RulePolicy,
    nlg: TemplateNlg,
    last_system: DialogActSet,
}

impl RuleEndToEnd {
    pub fn new(world: Arc<World>) -> Self {
        RuleEndToEnd {
            nlu: PatternNlu::new(world.clone()),
            tracker: RuleDst::new(world.clone()),
            policy: RulePolicy::new(world.clone()),
            nlg: TemplateNlg::new(world, Role::System),
            last_system: DialogActSet::new(),
        }
    }
}

impl EndToEnd for RuleEndToEnd {
    fn reset(&mut self) {
        self.tracker.reset();
        self.last_system = DialogActSet::new();
    }

    fn respond(&mut self, input: &Payload) -> Result<SystemOutput> {
        let (user_acts, text_mode) = match input {
            Payload::Acts(a) => (a.clone(), false),
            Payload::Text(t) => (self.nlu.parse(t, &self.last_system), true),
        };
        self.tracker.update(&user_acts)?;
        let acts = self.policy.decide(self.tracker.state())?;
        self.tracker.observe_system(&acts);
        self.last_system = acts.clone();
        let text = if text_mode { Some(self.nlg.generate(&acts)?) } else { None };
        Ok(SystemOutput { acts, text })
    }

    fn state(&self) -> Option<&BeliefState> {
        Some(self.tracker.state())
    }
}

pub enum Layout {
    Pipeline { nlu: Option<Box<dyn Nlu>>, tracker: Box<dyn Tracker>, policy: Box<dyn Policy>, nlg: Option<Box<dyn Nlg>> },
    WordDst { tracker: Box<dyn WordTracker>, policy: Box<dyn Policy>, nlg: Option<Box<dyn Nlg>> },
    WordPolicy { nlu: Option<Box<dyn Nlu>>, tracker: Box<dyn Tracker>, policy: Box<dyn WordPolicy> },
    EndToEnd(Box<dyn EndToEnd>),
}

impl Layout {
    pub fn kind(&self) -> &'static str {
        match self {
            Layout::Pipeline { .. } => "pipeline",
            Layout::WordDst { .. } => "word_dst",
            Layout::WordPolicy { .. } => "word_policy",
            Layout::EndToEnd(_) => "end_to_end",
        }
    }

    /// Whether the agent can read and write text.
    pub fn speaks_text(&self) -> bool {
        match self {
            Layout::Pipeline { nlu, nlg, .. } => nlu.is_some() && nlg.is_some(),
            Layout::WordDst { nlg, .. } => nlg.is_some(),
            Layout::WordPolicy { nlu, .. } => nlu.is_some(),
            Layout::EndToEnd(_) => true,
        }
    }

    /// Whether the agent can run on dialog acts alone.
    pub fn speaks_acts(&self) -> bool {
        matches!(self, Layout::Pipeline { .. } | Layout::EndToEnd(_))
    }
}

pub struct Agent {
    pub name: String,
    layout: Layout,
    last_system: DialogActSet,
}

impl Agent {
    pub fn new(name: impl Into<String>, layout: Layout) -> Self {
        Agent { name: name.into(), layout, last_system: DialogActSet::new() }
    }

    /// The rule pipeline (pattern NLU, rule DST, rule policy, template NLG).
    pub fn rule_pipeline(world: Arc<World>) -> Self {
        Agent::new(
            "DialogAgent",
            Layout::Pipeline {
                nlu: Some(Box::new(PatternNlu::new(world.clone()))),
                tracker: Box::new(RuleDst::new(world.clone())),
                policy: Box::new(RulePolicy::new(world.clone())),
                nlg: Some(Box::new(TemplateNlg::new(world, Role::System))),
            },
        )
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    fn policy_mut(&mut self) -> Option<&mut Box<dyn Policy>> {
        match &mut self.layout {
            Layout::Pipeline { policy, .. } | Layout::WordDst { policy, .. } => Some(policy),
            _ => None,
        }
    }

    fn policy(&self) -> Option<&dyn Policy> {
        match &self.layout {
            Layout::Pipeline { policy, .. } | Layout::WordDst { policy, .. } => Some(policy.as_ref()),
            _ => None,
        }
    }

    /// Clears the dialog state before episode `index` of `total`.
    pub fn begin_episode(&mut self, index: usize, total: usize) {
        self.last_system = DialogActSet::new();
        match &mut self.layout {
            Layout::Pipeline { tracker, policy, .. } => {
                tracker.reset();
                policy.begin_episode(index, total);
            }
            Layout::WordDst { tracker, policy, .. } => {
                tracker.reset();
                policy.begin_episode(index, total);
            }
            Layout::WordPolicy { tracker, .. } => tracker.reset(),
            Layout::EndToEnd(m) => m.reset(),
        }
    }

    /// The tracked state, when the layout exposes one.
    pub fn belief(&self) -> Option<&BeliefState> {
        match &self.layout {
            Layout::Pipeline { tracker, .. } | Layout::WordPolicy { tracker, .. } => Some(tracker.state()),
            Layout::WordDst { tracker, .. } => Some(tracker.state()),
            Layout::EndToEnd(m) => m.state(),
        }
    }

    pub fn is_trainable(&self) -> bool {
        self.policy().is_some_and(|p| p.is_trainable())
    }

    pub fn set_training(&mut self, training: bool) {
        if let Some(p) = self.policy_mut() {
            p.set_training(training);
        }
    }

    pub fn checkpoint(&self) -> Option<Checkpoint> {
        self.policy().and_then(|p| p.checkpoint())
    }

    pub fn restore(&mut self, ckpt: &Checkpoint) -> Result<()> {
        match self.policy_mut() {
            Some(p) => p.restore(ckpt),
            None => Err(Error::Incompatible("agent has no policy slot to restore".into())),
        }
    }

    /// Passes the reward for the last response to a learning policy.
    pub fn observe(&mut self, reward: f64, done: bool) -> Result<()> {
        match self.policy_mut() {
            Some(p) => p.observe(reward, done),
            None => Ok(()),
        }
    }

    /// One system turn for the user's `input`. Text input gets a text reply.
    pub fn respond(&mut self, input: &Payload) -> Result<SystemOutput> {
        let text_mode = matches!(input, Payload::Text(_));
        let needs_text = |what: &str| Error::Incompatible(format!("{what} cannot handle text without NLU/NLG"));
        let out = match &mut self.layout {
            Layout::Pipeline { nlu, tracker, policy, nlg } => {
                let user_acts = match input {
                    Payload::Acts(a) => a.clone(),
                    Payload::Text(t) => nlu.as_ref().ok_or_else(|| needs_text("pipeline"))?.parse(t, &self.last_system),
                };
                tracker.update(&user_acts)?;
                let acts = policy.decide(tracker.state())?;
                tracker.observe_system(&acts);
                let text = match (text_mode, nlg) {
                    (true, Some(g)) => Some(g.generate(&acts)?),
                    (true, None) => return Err(needs_text("pipeline")),
                    _ => None,
                };
                SystemOutput { acts, text }
            }
            Layout::WordDst { tracker, policy, nlg } => {
                let Payload::Text(t) = input else {
                    return Err(Error::Incompatible("word-level DST needs text input".into()));
                };
                tracker.update_text(t, &self.last_system)?;
                let acts = policy.decide(tracker.state())?;
                tracker.observe_system(&acts);
                let g = nlg.as_ref().ok_or_else(|| needs_text("word-level DST agent"))?;
                SystemOutput { text: Some(g.generate(&acts)?), acts }
            }
            Layout::WordPolicy { nlu, tracker, policy } => {
                let user_acts = match input {
                    Payload::Acts(a) => a.clone(),
                    Payload::Text(t) => nlu.as_ref().ok_or_else(|| needs_text("word-level policy agent"))?.parse(t, &self.last_system),
                };
                tracker.update(&user_acts)?;
                let out = policy.respond(tracker.state())?;
                tracker.observe_system(&out.acts);
                out
            }
            Layout::EndToEnd(m) => m.respond(input)?,
        };
        self.last_system = out.acts.clone();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialog::{string_to_acts, ActType};

    #[test]
    fn pipeline_on_acts_skips_text() {
        let world = World::toy();
        let mut agent = Agent::rule_pipeline(world);
        agent.begin_episode(0, 1);
        let out = agent.respond(&Payload::Acts(string_to_acts("inform(restaurant, pricerange=cheap)").unwrap())).unwrap();
        assert_eq!(out.acts.to_string(), "request(restaurant, area)");
        assert!(out.text.is_none());
    }

    #[test]
    fn pipeline_on_text_replies_in_text() {
        let world = World::toy();
        let mut agent = Agent::rule_pipeline(world);
        agent.begin_episode(0, 1);
        let out = agent.respond(&Payload::Text("bye".into())).unwrap();
        assert!(out.acts.has_type(ActType::Bye));
        assert!(!out.text.unwrap().is_empty());
    }

    #[test]
    fn word_dst_rejects_acts() {
        let world = World::toy();
        let mut agent = Agent::new(
            "a",
            Layout::WordDst {
                tracker: Box::new(WordDst::new(world.clone())),
                policy: Box::new(RulePolicy::new(world.clone())),
                nlg: Some(Box::new(TemplateNlg::new(world, Role::System))),
            },
        );
        assert!(matches!(agent.respond(&Payload::Acts(DialogActSet::new())), Err(Error::Incompatible(_))));
    }
}
