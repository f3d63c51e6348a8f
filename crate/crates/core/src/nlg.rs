//! Template-based generation for both dialog roles.
//!
//! A template file is a JSON array of entries
//! `{"act": "inform(restaurant, food)", "role": "user", "surface": "I want {food} food", "invertible": true}`.
//! The skeleton may fix a literal value (`inform(restaurant, area=dontcare)`);
//! such templates take precedence over placeholder templates for that value.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dialog::{string_to_acts, DialogAct, DialogActSet};
use crate::error::{Error, Result};

const TOY_TEMPLATES: &str = include_str!("../data/templates_toy.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    System,
    Both,
}

impl Role {
    /// Whether a template of this role may be used for `wanted`.
    pub fn admits(self, wanted: Role) -> bool {
        self == Role::Both || wanted == Role::Both || self == wanted
    }
}

/// Piece of a template surface.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Piece {
    Literal(String),
    Slot(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    /// Act skeleton; `value` is `none` unless the template fixes a literal value.
    pub skeleton: DialogAct,
    pub role: Role,
    pub surface: String,
    pub invertible: bool,
    pieces: Vec<Piece>,
}

impl Template {
    pub fn new(skeleton: DialogAct, role: Role, surface: &str, invertible: bool) -> Result<Self> {
        let pieces = split_surface(surface)?;
        for p in &pieces {
            if let Piece::Slot(s) = p {
                if *s != skeleton.slot || skeleton.has_value() {
                    return Err(Error::validation(
                        format!("template `{surface}`"),
                        format!("placeholder {{{s}}} does not appear in skeleton `{skeleton}`"),
                    ));
                }
            }
        }
        Ok(Template { skeleton, role, surface: surface.to_string(), invertible, pieces })
    }

    pub(crate) fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn has_placeholder(&self) -> bool {
        self.pieces.iter().any(|p| matches!(p, Piece::Slot(_)))
    }

    fn matches_literal(&self, act: &DialogAct) -> bool {
        self.same_frame(act) && self.skeleton.has_value() && self.skeleton.value == act.value
    }

    fn matches_open(&self, act: &DialogAct) -> bool {
        self.same_frame(act) && !self.skeleton.has_value() && (self.has_placeholder() == act.has_value())
    }

    fn same_frame(&self, act: &DialogAct) -> bool {
        self.skeleton.act_type == act.act_type && self.skeleton.domain == act.domain && self.skeleton.slot == act.slot
    }

    fn realize(&self, act: &DialogAct) -> String {
        self.pieces
            .iter()
            .map(|p| match p {
                Piece::Literal(s) => s.as_str(),
                Piece::Slot(_) => act.value.as_str(),
            })
            .collect()
    }
}

fn split_surface(surface: &str) -> Result<Vec<Piece>> {
    let mut pieces = Vec::new();
    let mut rest = surface;
    while let Some(open) = rest.find('{') {
        let close = rest[open..].find('}').map(|c| c + open).ok_or_else(|| {
            Error::validation(format!("template `{surface}`"), "unclosed placeholder")
        })?;
        if open > 0 {
            pieces.push(Piece::Literal(rest[..open].to_string()));
        }
        let name = rest[open + 1..close].trim();
        if name.is_empty() {
            return Err(Error::validation(format!("template `{surface}`"), "empty placeholder"));
        }
        pieces.push(Piece::Slot(name.to_string()));
        rest = &rest[close + 1..];
    }
    if !rest.is_empty() {
        pieces.push(Piece::Literal(rest.to_string()));
    }
    Ok(pieces)
}

#[derive(Deserialize)]
struct TemplateEntry {
    act: String,
    role: Role,
    surface: String,
    #[serde(default = "default_true")]
    invertible: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TemplateSet {
    entries: Vec<Template>,
}

impl TemplateSet {
    pub fn new(entries: Vec<Template>) -> Self {
        TemplateSet { entries }
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Ok(TemplateSet::default());
        }
        let raw: Vec<TemplateEntry> = serde_json::from_str(text).map_err(|e| Error::from_json(origin, e))?;
        let mut entries = Vec::with_capacity(raw.len());
        for (i, e) in raw.into_iter().enumerate() {
            let acts = string_to_acts(&e.act).map_err(|err| Error::parse(format!("{origin}[{i}].act"), err.to_string()))?;
            let [skeleton] = acts.acts() else {
                return Err(Error::validation(format!("{origin}[{i}].act"), "skeleton must be exactly one act"));
            };
            let t = Template::new(skeleton.clone(), e.role, &e.surface, e.invertible)
                .map_err(|err| Error::validation(format!("{origin}[{i}]"), err.to_string()))?;
            entries.push(t);
        }
        Ok(TemplateSet { entries })
    }

    /// The shipped fixture (`data/templates_toy.json`).
    pub fn toy() -> Self {
        TemplateSet::parse(TOY_TEMPLATES, "templates_toy.json").expect("shipped templates are valid")
    }

    pub fn entries(&self) -> &[Template] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn invertible_count(&self) -> usize {
        self.entries.iter().filter(|t| t.invertible).count()
    }

    /// Template used to realize `act` in `role`, if any.
    pub fn find(&self, act: &DialogAct, role: Role) -> Option<&Template> {
        let pool = || self.entries.iter().filter(move |t| t.role.admits(role));
        pool().find(|t| t.matches_literal(act)).or_else(|| pool().find(|t| t.matches_open(act)))
    }

    /// Realizes `acts` as sentences in canonical act order joined by `". "`.
    /// Acts without a template fall back to their grammar form.
    pub fn generate(&self, acts: &DialogActSet, role: Role) -> Result<String> {
        if acts.is_empty() {
            return Err(Error::EmptyActSet);
        }
        let sentences: Vec<String> = acts
            .iter()
            .map(|a| match self.find(a, role) {
                Some(t) => t.realize(a),
                None => fallback(a),
            })
            .collect();
        Ok(sentences.join(". "))
    }
}

fn fallback(act: &DialogAct) -> String {
    act.to_string()
}

pub fn load_templates(path: impl AsRef<Path>) -> Result<TemplateSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TemplateSet::parse(&text, &path.display().to_string())
}

/// Plain-language instructions describing a goal, built from user-role templates.
pub fn render_goal(goal: &crate::domain::UserGoal, templates: &TemplateSet) -> String {
    let mut lines = Vec::new();
    for (domain, section) in &goal.sections {
        let mut acts: Vec<DialogAct> =
            section.constraints.iter().map(|(s, v)| DialogAct::inform(domain, s, v)).collect();
        if let Some(book) = &section.book {
            acts.extend(book.iter().map(|(s, v)| DialogAct::book(domain, s, v)));
        }
        acts.extend(section.requests.iter().map(|s| DialogAct::request(domain, s)));
        let set: DialogActSet = acts.into();
        if let Ok(text) = templates.generate(&set, Role::User) {
            lines.push(format!("{domain}: {text}."));
        }
    }
    lines.join("\n")
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Role::User => "user",
            Role::System => "system",
            Role::Both => "both",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialog::ActType;

    #[test]
    fn value_appears_in_output() {
        let t = TemplateSet::toy();
        let acts: DialogActSet = vec![DialogAct::inform("restaurant", "food", "italian")].into();
        assert!(t.generate(&acts, Role::User).unwrap().contains("italian"));
    }

    #[test]
    fn empty_set_is_an_error() {
        assert!(matches!(TemplateSet::toy().generate(&DialogActSet::new(), Role::System), Err(Error::EmptyActSet)));
    }

    #[test]
    fn values_in_canonical_order() {
        let t = TemplateSet::toy();
        let acts: DialogActSet = vec![
            DialogAct::request("restaurant", "phone"),
            DialogAct::inform("restaurant", "pricerange", "cheap"),
            DialogAct::inform("restaurant", "area", "north"),
            DialogAct::book("restaurant", "day", "friday"),
        ]
        .into();
        let out = t.generate(&acts, Role::User).unwrap();
        let pos: Vec<usize> = ["north", "cheap", "phone number", "friday"].iter().map(|v| out.find(v).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]), "{out}");
    }

    #[test]
    fn literal_value_template_wins() {
        let t = TemplateSet::toy();
        let acts: DialogActSet = vec![DialogAct::inform("hotel", "area", "dontcare")].into();
        assert_eq!(t.generate(&acts, Role::User).unwrap(), "I do not care about the area of the hotel");
    }

    #[test]
    fn missing_template_falls_back() {
        let acts: DialogActSet = vec![DialogAct::inform("spa", "mood", "calm")].into();
        assert_eq!(TemplateSet::default().generate(&acts, Role::User).unwrap(), "inform(spa, mood=calm)");
    }

    #[test]
    fn shipped_set_covers_every_act_type_for_both_roles() {
        let t = TemplateSet::toy();
        for role in [Role::User, Role::System] {
            for at in ActType::ALL {
                assert!(
                    t.entries().iter().any(|e| e.role == role && e.skeleton.act_type == at),
                    "{role} lacks {at}"
                );
            }
        }
        assert_eq!(t.invertible_count(), t.len());
    }

    #[test]
    fn placeholder_mismatch_rejected() {
        let doc = r#"[{"act": "inform(restaurant, area)", "role": "user", "surface": "I want {food} food"}]"#;
        assert!(matches!(TemplateSet::parse(doc, "t.json"), Err(Error::Validation { .. })));
    }

    #[test]
    fn empty_file_is_empty_set() {
        assert!(TemplateSet::parse("", "t.json").unwrap().is_empty());
        assert!(TemplateSet::parse("[]", "t.json").unwrap().is_empty());
    }

    #[test]
    fn malformed_file_is_parse_failure() {
        assert!(matches!(TemplateSet::parse("[{", "t.json"), Err(Error::Parse { .. })));
        let bad_act = r#"[{"act": "frobnicate(x)", "role": "user", "surface": "x"}]"#;
        assert!(matches!(TemplateSet::parse(bad_act, "t.json"), Err(Error::Parse { .. })));
    }

    #[test]
    fn deterministic() {
        let t = TemplateSet::toy();
        let acts: DialogActSet = vec![DialogAct::inform("hotel", "stars", "4"), DialogAct::general(ActType::Thank)].into();
        assert_eq!(t.generate(&acts, Role::System).unwrap(), t.generate(&acts, Role::System).unwrap());
    }
}
