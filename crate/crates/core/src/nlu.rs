//! Pattern-based multi-intent understanding, built by inverting the
//! invertible templates of a [`TemplateSet`].
//!
//! Utterances are split into sentence segments on `.`, `?`, `!` and newlines.
//! Each segment is first matched whole against every pattern; slot captures in
//! this mode accept any span delimited by the template's literal context, so
//! out-of-vocabulary values survive. Segments that match no pattern whole are
//! scanned greedily (longest match first) using only vocabulary-bound captures.

use std::collections::{BTreeMap, HashMap};

use regex::{Regex, RegexSet};

use crate::dialog::{string_to_acts, ActType, DialogAct, DialogActSet};
use crate::domain::{booking_vocabulary, normalize_value, DomainSchemaSet, BOOKING_SLOTS, DONTCARE};
use crate::error::{Error, Result};
use crate::nlg::{Piece, TemplateSet};

#[derive(Debug, Clone)]
struct Pattern {
    skeleton: DialogAct,
    /// Whole-segment regex with an open capture.
    anchored: Regex,
    /// Word-bounded regex with a vocabulary-bound capture; absent when the
    /// slot has no vocabulary.
    scanning: Option<Regex>,
    literal_len: usize,
    slot: Option<String>,
    source: usize,
}

/// Compiled inverse of a template set.
#[derive(Debug, Clone, Default)]
pub struct PatternLexicon {
    patterns: Vec<Pattern>,
    anchored_set: Option<RegexSet>,
    /// (domain, slot) -> vocabulary, normalized value -> surface form.
    gazetteer: HashMap<(String, String), BTreeMap<String, String>>,
    /// Indices of templates not inverted.
    skipped: Vec<usize>,
}

fn literal_regex(text: &str) -> String {
    text.split_whitespace().map(regex::escape).collect::<Vec<_>>().join(r"\s+")
}

fn join_literal(out: &mut String, lit: &str) {
    let body = literal_regex(lit);
    if lit.starts_with(char::is_whitespace) && !out.is_empty() {
        out.push_str(r"\s+");
    }
    out.push_str(&body);
    if lit.ends_with(char::is_whitespace) && !body.is_empty() {
        out.push_str(r"\s+");
    }
}

fn normalized_surface(pieces: &[Piece]) -> String {
    let mut s = String::new();
    for p in pieces {
        match p {
            Piece::Literal(l) => s.push_str(&l.to_lowercase()),
            Piece::Slot(_) => s.push_str("{}"),
        }
    }
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl PatternLexicon {
    /// Inverts every invertible template. Two templates with the same surface
    /// form but different skeletons make the lexicon ambiguous.
    pub fn build(schemas: &DomainSchemaSet, templates: &TemplateSet) -> Result<Self> {
        let mut gazetteer: HashMap<(String, String), BTreeMap<String, String>> = HashMap::new();
        for schema in schemas.iter() {
            for (slot, values) in &schema.informable {
                let entry = gazetteer.entry((schema.name.clone(), slot.clone())).or_default();
                for v in values {
                    entry.insert(normalize_value(v), v.clone());
                }
            }
            if schema.bookable {
                for slot in BOOKING_SLOTS {
                    let entry = gazetteer.entry((schema.name.clone(), slot.to_string())).or_default();
                    for v in booking_vocabulary(slot).unwrap_or_default() {
                        entry.insert(normalize_value(v), v.to_string());
                    }
                }
            }
        }

        let mut seen: HashMap<String, (usize, &DialogAct)> = HashMap::new();
        let mut ambiguous = Vec::new();
        let mut patterns = Vec::new();
        let mut skipped = Vec::new();
        for (i, t) in templates.entries().iter().enumerate() {
            if !t.invertible {
                skipped.push(i);
                continue;
            }
            let key = normalized_surface(t.pieces());
            match seen.get(&key) {
                Some((j, other)) if *other != &t.skeleton => {
                    ambiguous.push(format!("#{j} `{}` vs #{i} `{}` on \"{}\"", other, t.skeleton, t.surface));
                    continue;
                }
                Some(_) => {}
                None => {
                    seen.insert(key, (i, &t.skeleton));
                }
            }

            let vocab = gazetteer.get(&(t.skeleton.domain.clone(), t.skeleton.slot.clone()));
            let mut anchored = String::new();
            let mut scanning = String::new();
            let mut literal_len = 0;
            let mut slot = None;
            let mut scannable = true;
            for p in t.pieces() {
                match p {
                    Piece::Literal(l) => {
                        join_literal(&mut anchored, l);
                        join_literal(&mut scanning, l);
                        literal_len += l.trim().len();
                    }
                    Piece::Slot(s) => {
                        anchored.push_str("(.+?)");
                        slot = Some(s.clone());
                        match vocab {
                            Some(v) => {
                                let mut alts: Vec<&String> = v.values().collect();
                                alts.sort_by_key(|a| std::cmp::Reverse(a.len()));
                                let alts: Vec<String> = alts.iter().map(|a| literal_regex(a)).collect();
                                scanning.push_str(&format!("({})", alts.join("|")));
                            }
                            None => scannable = false,
                        }
                    }
                }
            }
            let anchored = Regex::new(&format!(r"(?i)^\s*{anchored}\s*$")).map_err(|e| {
                Error::validation(format!("template #{i}"), format!("pattern does not compile: {e}"))
            })?;
            let scanning = if scannable && literal_len > 0 {
                Some(Regex::new(&format!(r"(?i)\b{scanning}\b")).map_err(|e| {
                    Error::validation(format!("template #{i}"), format!("pattern does not compile: {e}"))
                })?)
            } else {
                None
            };
            patterns.push(Pattern { skeleton: t.skeleton.clone(), anchored, scanning, literal_len, slot, source: i });
        }
        if !ambiguous.is_empty() {
            return Err(Error::validation("templates", format!("ambiguous patterns: {}", ambiguous.join("; "))));
        }
        let anchored_set = if patterns.is_empty() {
            None
        } else {
            Some(RegexSet::new(patterns.iter().map(|p| p.anchored.as_str())).expect("patterns compiled individually"))
        };
        Ok(PatternLexicon { patterns, anchored_set, gazetteer, skipped })
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Template indices that were not inverted.
    pub fn non_invertible(&self) -> &[usize] {
        &self.skipped
    }

    /// Template index behind each pattern, in pattern order.
    pub fn sources(&self) -> Vec<usize> {
        self.patterns.iter().map(|p| p.source).collect()
    }

    fn canonical_value(&self, domain: &str, slot: &str, raw: &str) -> (String, bool) {
        let raw = raw.trim();
        let norm = normalize_value(raw);
        if norm == DONTCARE {
            return (DONTCARE.to_string(), true);
        }
        match self.gazetteer.get(&(domain.to_string(), slot.to_string())) {
            Some(v) => match v.get(&norm) {
                Some(surface) => (surface.clone(), true),
                None => (raw.to_string(), false),
            },
            None => (raw.to_string(), true),
        }
    }

    fn instantiate(&self, p: &Pattern, capture: Option<&str>) -> (DialogAct, bool) {
        let mut act = p.skeleton.clone();
        let mut in_vocab = true;
        if let (Some(slot), Some(raw)) = (&p.slot, capture) {
            let (value, ok) = self.canonical_value(&act.domain, slot, raw);
            act.value = value;
            in_vocab = ok;
        }
        (act, in_vocab)
    }

    fn parse_whole(&self, segment: &str) -> Option<DialogAct> {
        let set = self.anchored_set.as_ref()?;
        let mut best: Option<((bool, usize), DialogAct)> = None;
        for idx in set.matches(segment).iter() {
            let p = &self.patterns[idx];
            let Some(caps) = p.anchored.captures(segment) else { continue };
            let (act, in_vocab) = self.instantiate(p, caps.get(1).map(|m| m.as_str()));
            let score = (in_vocab, p.literal_len);
            if best.as_ref().is_none_or(|(s, _)| score > *s) {
                best = Some((score, act));
            }
        }
        best.map(|(_, a)| a)
    }

    fn scan(&self, segment: &str, out: &mut Vec<DialogAct>) -> bool {
        let mut taken: Vec<(usize, usize)> = Vec::new();
        let mut candidates = Vec::new();
        for p in &self.patterns {
            let Some(re) = &p.scanning else { continue };
            for caps in re.captures_iter(segment) {
                let m = caps.get(0).unwrap();
                candidates.push((m.end() - m.start(), p.literal_len, m.start(), m.end(), p, caps.get(1).map(|c| c.as_str().to_string())));
            }
        }
        candidates.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)).then(a.2.cmp(&b.2)));
        let mut found = false;
        for (_, _, start, end, p, cap) in candidates {
            if taken.iter().any(|&(s, e)| start < e && s < end) {
                continue;
            }
            taken.push((start, end));
            out.push(self.instantiate(p, cap.as_deref()).0);
            found = true;
        }
        found
    }

    /// Resolves a bare value ("the north one") against a one-turn context in
    /// which the other side requested a slot.
    fn resolve_bare(&self, segment: &str, context: &DialogActSet, out: &mut Vec<DialogAct>) -> bool {
        let lower = segment.to_lowercase();
        for a in context.iter().filter(|a| a.act_type == ActType::Request) {
            let Some(vocab) = self.gazetteer.get(&(a.domain.clone(), a.slot.clone())) else { continue };
            let act_type = if BOOKING_SLOTS.contains(&a.slot.as_str()) { ActType::Book } else { ActType::Inform };
            let mut hit: Option<&String> = None;
            for (norm, surface) in vocab {
                if contains_word(&lower, norm) && hit.is_none_or(|h| surface.len() > h.len()) {
                    hit = Some(surface);
                }
            }
            if let Some(v) = hit {
                out.push(DialogAct::new(act_type, &a.domain, &a.slot, v));
                return true;
            }
            if ["any", "dont care", "don't care", "do not care", "doesn't matter", "does not matter"]
                .iter()
                .any(|k| lower.contains(k))
                && act_type == ActType::Inform
            {
                out.push(DialogAct::inform(&a.domain, &a.slot, DONTCARE));
                return true;
            }
        }
        false
    }

    /// Maps an utterance to its canonical act set; unknown text yields `[]`.
    pub fn parse(&self, utterance: &str, context: Option<&DialogActSet>) -> DialogActSet {
        let mut acts = Vec::new();
        for segment in split_segments(utterance) {
            if let Some(a) = self.parse_whole(segment) {
                acts.push(a);
                continue;
            }
            if segment.contains('(') {
                if let Ok(set) = string_to_acts(segment) {
                    acts.extend(set.into_vec());
                    continue;
                }
            }
            if self.scan(segment, &mut acts) {
                continue;
            }
            if let Some(ctx) = context {
                self.resolve_bare(segment, ctx, &mut acts);
            }
        }
        acts.into()
    }
}

fn contains_word(haystack: &str, needle: &str) -> bool {
    let boundary = |c: Option<char>| c.is_none_or(|c| !c.is_alphanumeric());
    haystack.match_indices(needle).any(|(i, m)| {
        boundary(haystack[..i].chars().next_back()) && boundary(haystack[i + m.len()..].chars().next())
    })
}

fn split_segments(text: &str) -> impl Iterator<Item = &str> {
    text.split(['.', '?', '!', '\n']).map(str::trim).filter(|s| !s.is_empty())
}

pub fn build_lexicon(schemas: &DomainSchemaSet, templates: &TemplateSet) -> Result<PatternLexicon> {
    PatternLexicon::build(schemas, templates)
}
