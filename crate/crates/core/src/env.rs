//! Environments wrapping the user side of a dialog behind `reset`/`step`.
//!
//! * [`SimulatedEnv`]: the agenda user at act level or, through templates and
//!   the pattern lexicon, at text level;
//! * [`RoleplayEnv`]: a round-robin referee for two externally driven agents;
//! * [`HumanEnv`]: a roleplay whose user turns are typed text.
//!
//! `max_t` bounds the system turns of an episode; `max_tick` bounds the
//! episodes of a session.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dialog::{ActType, DialogAct, DialogActSet, DoneReason, Episode, Speaker};
use crate::domain::{booking_vocabulary, sample_goal, values_match, GoalProfile, UserGoal, BOOKING_REF};
use crate::error::{Error, Result};
use crate::nlg::Role;
use crate::policy::{reward, TurnOutcome};
use crate::user_sim::{goal_success, init_agenda, Agenda, AgendaConfig, AgendaUser};
use crate::world::World;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    SimulatedActs,
    SimulatedText,
    Roleplay,
    Human,
}

impl EnvKind {
    pub fn channel(self) -> Channel {
        match self {
            EnvKind::SimulatedActs | EnvKind::Roleplay => Channel::Acts,
            EnvKind::SimulatedText | EnvKind::Human => Channel::Text,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Acts,
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    Acts(DialogActSet),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub channel: Channel,
    pub payload: Payload,
    pub tick: u32,
    pub done: bool,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvSpec {
    pub kind: EnvKind,
    /// System turns per episode.
    pub max_t: u32,
    /// Episodes per session.
    pub max_tick: u64,
    /// Probability of replacing each user act value with another in-vocabulary value.
    pub noise_rate: f64,
    pub goal: GoalProfile,
    pub user: AgendaConfig,
    /// The system opens the dialog; the user's first turn is then empty.
    pub system_first: bool,
}

impl Default for EnvSpec {
    fn default() -> Self {
        EnvSpec {
            kind: EnvKind::SimulatedActs,
            max_t: 40,
            max_tick: 20000,
            noise_rate: 0.0,
            goal: GoalProfile::default(),
            user: AgendaConfig::default(),
            system_first: false,
        }
    }
}

impl EnvSpec {
    pub fn validate(&self) -> Result<()> {
        if self.max_t < 2 {
            return Err(Error::validation("env.max_t", "must be at least 2"));
        }
        if !(0.0..=1.0).contains(&self.noise_rate) {
            return Err(Error::validation("env.noise_rate", "must lie in [0, 1]"));
        }
        if self.user.max_initiative == 0 {
            return Err(Error::validation("env.user.max_initiative", "must be at least 1"));
        }
        Ok(())
    }
}

/// What the agent hands back for one system turn.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SystemOutput {
    pub acts: DialogActSet,
    pub text: Option<String>,
}

impl SystemOutput {
    pub fn acts(acts: DialogActSet) -> Self {
        SystemOutput { acts, text: None }
    }
}

/// Episodic interface used by the harness.
pub trait Environment: Send {
    fn spec(&self) -> &EnvSpec;
    fn channel(&self) -> Channel {
        self.spec().kind.channel()
    }
    fn reset(&mut self, episode_seed: u64) -> Result<Observation>;
    fn step(&mut self, system: &SystemOutput) -> Result<Observation>;
    fn episode(&self) -> &Episode;
    /// The user's last acts before channel noise.
    fn true_user_acts(&self) -> &DialogActSet;
}

/// Shared per-episode bookkeeping: turn record, system-turn count, rewards.
#[derive(Debug, Clone)]
struct Ledgerbook {
    episode: Episode,
    system_turns: u32,
    done: bool,
    max_t: u32,
}

impl Ledgerbook {
    fn new(goal: UserGoal, max_t: u32) -> Self {
        Ledgerbook { episode: Episode::new(goal), system_turns: 0, done: false, max_t }
    }

    /// Scores the system turn just answered by the user.
    fn score(&mut self, user_done: bool, success: bool) -> f64 {
        let outcome = if user_done {
            self.episode.done_reason = if success { DoneReason::Success } else { DoneReason::FailureGoal };
            if success {
                TurnOutcome::Success
            } else {
                TurnOutcome::Failure
            }
        } else if self.system_turns >= self.max_t {
            self.episode.done_reason = DoneReason::FailureTurnLimit;
            TurnOutcome::Failure
        } else {
            TurnOutcome::Continue
        };
        self.done = outcome != TurnOutcome::Continue;
        self.episode.success = outcome == TurnOutcome::Success;
        let r = reward(outcome, self.max_t);
        self.episode.reward_trace.push(r);
        r
    }
}

fn sample_episode_goal(world: &World, spec: &EnvSpec, seed: u64) -> Result<UserGoal> {
    sample_goal(seed, &world.schemas, &world.db, &spec.goal)
}

/// Replaces act values with another in-vocabulary value with probability `rate`.
pub fn apply_noise<R: Rng>(world: &World, acts: &DialogActSet, rate: f64, rng: &mut R) -> DialogActSet {
    if rate <= 0.0 {
        return acts.clone();
    }
    acts.iter()
        .map(|a| {
            let vocab: Vec<String> = match a.act_type {
                ActType::Inform => world
                    .schemas
                    .get(&a.domain)
                    .and_then(|s| s.vocabulary(&a.slot))
                    .map(<[String]>::to_vec)
                    .unwrap_or_default(),
                ActType::Book if a.slot != BOOKING_REF => booking_vocabulary(&a.slot)
                    .map(|v| v.iter().map(|s| s.to_string()).collect())
                    .unwrap_or_default(),
                _ => Vec::new(),
            };
            let others: Vec<&String> = vocab.iter().filter(|v| !values_match(v, &a.value)).collect();
            if others.is_empty() || rng.gen::<f64>() >= rate {
                return a.clone();
            }
            let v = others.choose(rng).expect("non-empty");
            DialogAct::new(a.act_type, &a.domain, &a.slot, v)
        })
        .collect()
}

/// Agenda user behind an act or text channel.
pub struct SimulatedEnv {
    spec: EnvSpec,
    world: Arc<World>,
    user: Option<AgendaUser>,
    noise_rng: ChaCha8Rng,
    book: Ledgerbook,
    true_user: DialogActSet,
    heard_user: DialogActSet,
}

impl SimulatedEnv {
    pub fn new(world: Arc<World>, spec: EnvSpec) -> Result<Self> {
        spec.validate()?;
        if !matches!(spec.kind, EnvKind::SimulatedActs | EnvKind::SimulatedText) {
            return Err(Error::Incompatible(format!("{:?} is not a simulated environment", spec.kind)));
        }
        let max_t = spec.max_t;
        Ok(SimulatedEnv {
            spec,
            world,
            user: None,
            noise_rng: ChaCha8Rng::seed_from_u64(0),
            book: Ledgerbook::new(UserGoal::default(), max_t),
            true_user: DialogActSet::new(),
            heard_user: DialogActSet::new(),
        })
    }

    pub fn user(&self) -> Option<&AgendaUser> {
        self.user.as_ref()
    }

    /// Applies noise, records the user turn, and renders it for the channel.
    fn user_turn(&mut self, acts: DialogActSet) -> Result<Payload> {
        let heard = apply_noise(&self.world, &acts, self.spec.noise_rate, &mut self.noise_rng);
        self.true_user = acts;
        let payload = match self.channel() {
            Channel::Acts => {
                self.book.episode.push_turn(Speaker::User, heard.clone(), None)?;
                Payload::Acts(heard.clone())
            }
            Channel::Text => {
                let text = if heard.is_empty() {
                    String::new()
                } else {
                    self.world.templates.generate(&heard, Role::User)?
                };
                self.book.episode.push_turn(Speaker::User, heard.clone(), Some(text.clone()))?;
                Payload::Text(text)
            }
        };
        self.heard_user = heard;
        Ok(payload)
    }

    fn observation(&self, payload: Payload, reward: f64) -> Observation {
        Observation {
            channel: self.channel(),
            payload,
            tick: self.book.system_turns,
            done: self.book.done,
            reward,
        }
    }
}

impl Environment for SimulatedEnv {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, episode_seed: u64) -> Result<Observation> {
        let goal = sample_episode_goal(&self.world, &self.spec, episode_seed)?;
        let mut user = AgendaUser::new(&goal, episode_seed, self.spec.user)?;
        self.noise_rng = ChaCha8Rng::seed_from_u64(episode_seed.wrapping_add(0x6e6f_6973_6500));
        self.book = Ledgerbook::new(goal, self.spec.max_t);
        let first = if self.spec.system_first {
            DialogActSet::new()
        } else {
            user.respond(&DialogActSet::new(), &self.world.schemas, &self.world.db).0
        };
        self.user = Some(user);
        let payload = self.user_turn(first)?;
        Ok(self.observation(payload, 0.0))
    }

    fn step(&mut self, system: &SystemOutput) -> Result<Observation> {
        if self.book.done {
            return Err(Error::SteppedAfterDone);
        }
        let user = self.user.as_mut().ok_or(Error::SteppedAfterDone)?;
        let (system_acts, utterance) = match self.spec.kind.channel() {
            Channel::Acts => (system.acts.clone(), system.text.clone()),
            Channel::Text => {
                let text = system
                    .text
                    .as_deref()
                    .ok_or_else(|| Error::Incompatible("text environment needs system text".into()))?;
                (self.world.lexicon.parse(text, Some(&self.heard_user)), Some(text.to_string()))
            }
        };
        self.book.episode.push_turn(Speaker::System, system_acts.clone(), utterance)?;
        self.book.system_turns += 1;
        let (user_acts, user_done) = user.respond(&system_acts, &self.world.schemas, &self.world.db);
        let success = user_done && user.succeeded(&self.world.db);
        let r = self.book.score(user_done, success);
        let payload = self.user_turn(user_acts)?;
        Ok(self.observation(payload, r))
    }

    fn episode(&self) -> &Episode {
        &self.book.episode
    }

    fn true_user_acts(&self) -> &DialogActSet {
        &self.true_user
    }
}

/// Round-robin referee between a user-side and a system-side agent.
///
/// The referee samples the goal, enforces turn order, and judges success by
/// following the dialog with its own agenda ledger.
pub struct RoleplayEnv {
    spec: EnvSpec,
    world: Arc<World>,
    judge: Option<Agenda>,
    book: Ledgerbook,
    expected: Speaker,
    tick: u32,
    last: DialogActSet,
}

impl RoleplayEnv {
    pub fn new(world: Arc<World>, spec: EnvSpec) -> Result<Self> {
        spec.validate()?;
        let max_t = spec.max_t;
        Ok(RoleplayEnv {
            spec,
            world,
            judge: None,
            book: Ledgerbook::new(UserGoal::default(), max_t),
            expected: Speaker::User,
            tick: 0,
            last: DialogActSet::new(),
        })
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    /// Samples the goal; the returned observation (empty) is for the user side.
    pub fn reset(&mut self, episode_seed: u64) -> Result<Observation> {
        let goal = sample_episode_goal(&self.world, &self.spec, episode_seed)?;
        self.judge = Some(init_agenda(&goal, episode_seed, self.spec.user)?);
        self.book = Ledgerbook::new(goal, self.spec.max_t);
        self.expected = Speaker::User;
        self.tick = 0;
        self.last = DialogActSet::new();
        Ok(self.observation(0.0))
    }

    pub fn goal(&self) -> &UserGoal {
        &self.book.episode.goal
    }

    pub fn next_speaker(&self) -> Speaker {
        self.expected
    }

    pub fn is_done(&self) -> bool {
        self.book.done
    }

    pub fn episode(&self) -> &Episode {
        &self.book.episode
    }

    fn observation(&self, reward: f64) -> Observation {
        Observation {
            channel: Channel::Acts,
            payload: Payload::Acts(self.last.clone()),
            tick: self.tick,
            done: self.book.done,
            reward,
        }
    }

    /// Consumes the current speaker's acts; the observation is for the other speaker.
    pub fn roleplay_step(&mut self, speaker: Speaker, acts: DialogActSet) -> Result<Observation> {
        self.submit(speaker, acts, None)
    }

    fn submit(&mut self, speaker: Speaker, acts: DialogActSet, utterance: Option<String>) -> Result<Observation> {
        if self.book.done {
            return Err(Error::SteppedAfterDone);
        }
        if speaker != self.expected {
            return Err(Error::WrongSpeaker { expected: self.expected.as_str().into(), got: speaker.as_str().into() });
        }
        let judge = self.judge.as_mut().ok_or(Error::SteppedAfterDone)?;
        self.book.episode.push_turn(speaker, acts.clone(), utterance)?;
        self.tick += 1;
        let mut r = 0.0;
        match speaker {
            Speaker::User => {
                judge.judge_user(&acts);
                if self.book.system_turns > 0 {
                    let done = acts.has_type(ActType::Bye);
                    let success = done && !judge.gave_up() && goal_success(judge.goal(), judge.ledger(), &self.world.db);
                    r = self.book.score(done, success);
                }
            }
            Speaker::System => {
                judge.judge_system(&acts, &self.world.schemas, &self.world.db);
                self.book.system_turns += 1;
            }
        }
        self.expected = speaker.other();
        self.last = acts;
        Ok(self.observation(r))
    }
}

/// The agenda user driven through a [`RoleplayEnv`]; traces match [`SimulatedEnv`]
/// at act level for the same seeds.
pub struct AgendaRoleplay {
    env: RoleplayEnv,
    user: Option<AgendaUser>,
    true_user: DialogActSet,
}

impl AgendaRoleplay {
    pub fn new(world: Arc<World>, spec: EnvSpec) -> Result<Self> {
        Ok(AgendaRoleplay { env: RoleplayEnv::new(world, spec)?, user: None, true_user: DialogActSet::new() })
    }
}

impl Environment for AgendaRoleplay {
    fn spec(&self) -> &EnvSpec {
        self.env.spec()
    }

    fn reset(&mut self, episode_seed: u64) -> Result<Observation> {
        self.env.reset(episode_seed)?;
        let mut user = AgendaUser::new(self.env.goal(), episode_seed, self.env.spec.user)?;
        let first = if self.env.spec.system_first {
            DialogActSet::new()
        } else {
            user.respond(&DialogActSet::new(), &self.env.world.schemas, &self.env.world.db).0
        };
        self.user = Some(user);
        self.true_user = first.clone();
        let mut obs = self.env.roleplay_step(Speaker::User, first)?;
        obs.tick = 0;
        Ok(obs)
    }

    fn step(&mut self, system: &SystemOutput) -> Result<Observation> {
        self.env.roleplay_step(Speaker::System, system.acts.clone())?;
        let user = self.user.as_mut().ok_or(Error::SteppedAfterDone)?;
        let (acts, _) = user.respond(&system.acts, &self.env.world.schemas, &self.env.world.db);
        self.true_user = acts.clone();
        let mut obs = self.env.roleplay_step(Speaker::User, acts)?;
        obs.tick = self.env.book.system_turns;
        Ok(obs)
    }

    fn episode(&self) -> &Episode {
        self.env.episode()
    }

    fn true_user_acts(&self) -> &DialogActSet {
        &self.true_user
    }
}

/// A roleplay whose user turns are typed by a person.
pub struct HumanEnv {
    env: RoleplayEnv,
}

impl HumanEnv {
    pub fn new(world: Arc<World>, spec: EnvSpec, seed: u64) -> Result<Self> {
        let mut env = RoleplayEnv::new(world, spec)?;
        env.reset(seed)?;
        Ok(HumanEnv { env })
    }

    pub fn goal(&self) -> &UserGoal {
        self.env.goal()
    }

    pub fn episode(&self) -> &Episode {
        self.env.episode()
    }

    pub fn is_done(&self) -> bool {
        self.env.is_done()
    }

    pub fn max_t(&self) -> u32 {
        self.env.spec.max_t
    }

    pub fn system_turns(&self) -> u32 {
        self.env.book.system_turns
    }

    /// Whether the goal is met by what the system has said so far.
    pub fn adjudicate(&self) -> bool {
        self.env.judge.as_ref().is_some_and(|j| !j.gave_up() && goal_success(j.goal(), j.ledger(), &self.env.world.db))
    }

    /// Records the person's message; the returned observation carries the text for the agent.
    pub fn user_says(&mut self, text: &str) -> Result<Observation> {
        let acts = self.env.world.lexicon.parse(text, Some(&self.env.last));
        let mut obs = self.env.submit(Speaker::User, acts, Some(text.to_string()))?;
        obs.channel = Channel::Text;
        obs.payload = Payload::Text(text.to_string());
        Ok(obs)
    }

    /// Records the agent's reply; a `bye` or the turn limit ends the dialog. A
    /// farewell after the person already left is kept with a zero reward.
    pub fn system_says(&mut self, acts: DialogActSet, text: String) -> Result<()> {
        if self.env.book.done {
            self.env.book.episode.push_turn(Speaker::System, acts, Some(text))?;
            self.env.book.episode.reward_trace.push(0.0);
            return Ok(());
        }
        self.env.submit(Speaker::System, acts.clone(), Some(text))?;
        let bye = acts.has_type(ActType::Bye);
        if bye || self.env.book.system_turns >= self.env.spec.max_t {
            let judge = self.env.judge.as_ref().ok_or(Error::SteppedAfterDone)?;
            let success = bye && !judge.gave_up() && goal_success(judge.goal(), judge.ledger(), &self.env.world.db);
            self.env.book.score(bye, success);
        }
        Ok(())
    }
}
