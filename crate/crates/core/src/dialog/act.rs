use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NONE: &str = "none";
pub const GENERAL: &str = "general";

/// Act types in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActType {
    Inform,
    Request,
    Book,
    Nooffer,
    Offer,
    Select,
    Recommend,
    Bye,
    Greet,
    Reqmore,
    Thank,
}

impl ActType {
    pub const ALL: [ActType; 11] = [
        ActType::Inform,
        ActType::Request,
        ActType::Book,
        ActType::Nooffer,
        ActType::Offer,
        ActType::Select,
        ActType::Recommend,
        ActType::Bye,
        ActType::Greet,
        ActType::Reqmore,
        ActType::Thank,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActType::Inform => "inform",
            ActType::Request => "request",
            ActType::Book => "book",
            ActType::Nooffer => "nooffer",
            ActType::Offer => "offer",
            ActType::Select => "select",
            ActType::Recommend => "recommend",
            ActType::Bye => "bye",
            ActType::Greet => "greet",
            ActType::Reqmore => "reqmore",
            ActType::Thank => "thank",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Act types that never carry a slot or value.
    pub fn is_bare(self) -> bool {
        matches!(self, ActType::Bye | ActType::Greet | ActType::Thank)
    }
}

impl fmt::Display for ActType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ActType {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        ActType::ALL.into_iter().find(|t| t.as_str() == s).ok_or(())
    }
}

/// One atomic intent: `act_type(domain, slot=value)`.
///
/// Field order gives the canonical ordering (type, domain, slot, value).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DialogAct {
    pub act_type: ActType,
    pub domain: String,
    pub slot: String,
    pub value: String,
}

impl DialogAct {
    pub fn new(act_type: ActType, domain: &str, slot: &str, value: &str) -> Self {
        let mut act = DialogAct {
            act_type,
            domain: domain.to_string(),
            slot: slot.to_string(),
            value: value.to_string(),
        };
        if act_type == ActType::Request {
            act.value = NONE.to_string();
        }
        if act_type.is_bare() {
            act.slot = NONE.to_string();
            act.value = NONE.to_string();
        }
        act
    }

    pub fn inform(domain: &str, slot: &str, value: &str) -> Self {
        DialogAct::new(ActType::Inform, domain, slot, value)
    }

    pub fn request(domain: &str, slot: &str) -> Self {
        DialogAct::new(ActType::Request, domain, slot, NONE)
    }

    pub fn book(domain: &str, slot: &str, value: &str) -> Self {
        DialogAct::new(ActType::Book, domain, slot, value)
    }

    /// An act with only a type and domain.
    pub fn bare(act_type: ActType, domain: &str) -> Self {
        DialogAct::new(act_type, domain, NONE, NONE)
    }

    pub fn general(act_type: ActType) -> Self {
        DialogAct::bare(act_type, GENERAL)
    }

    pub fn has_slot(&self) -> bool {
        self.slot != NONE
    }

    pub fn has_value(&self) -> bool {
        self.value != NONE
    }
}

impl fmt::Display for DialogAct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&acts_to_string(std::slice::from_ref(self)))
    }
}

/// A deduplicated, canonically ordered set of acts.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DialogActSet(Vec<DialogAct>);

impl DialogActSet {
    pub fn new() -> Self {
        DialogActSet(Vec::new())
    }

    pub fn acts(&self) -> &[DialogAct] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DialogAct> {
        self.0.iter()
    }

    pub fn contains(&self, act: &DialogAct) -> bool {
        self.0.binary_search(act).is_ok()
    }

    pub fn has_type(&self, t: ActType) -> bool {
        self.0.iter().any(|a| a.act_type == t)
    }

    pub fn insert(&mut self, act: DialogAct) {
        if let Err(pos) = self.0.binary_search(&act) {
            self.0.insert(pos, act);
        }
    }

    pub fn into_vec(self) -> Vec<DialogAct> {
        self.0
    }
}

impl FromIterator<DialogAct> for DialogActSet {
    fn from_iter<I: IntoIterator<Item = DialogAct>>(iter: I) -> Self {
        canonicalize(iter.into_iter().collect())
    }
}

impl From<Vec<DialogAct>> for DialogActSet {
    fn from(acts: Vec<DialogAct>) -> Self {
        canonicalize(acts)
    }
}

impl<'a> IntoIterator for &'a DialogActSet {
    type Item = &'a DialogAct;
    type IntoIter = std::slice::Iter<'a, DialogAct>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for DialogActSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&acts_to_string(&self.0))
    }
}

/// Removes duplicates and sorts by (type, domain, slot, value).
pub fn canonicalize(mut acts: Vec<DialogAct>) -> DialogActSet {
    acts.sort();
    acts.dedup();
    DialogActSet(acts)
}

/// Serializes acts in the transcript grammar: consecutive acts sharing type
/// and domain form one group `type(domain, s1=v1; s2)`, groups joined by `|`.
/// Input is canonicalized first.
pub fn acts_to_string(acts: &[DialogAct]) -> String {
    let set = canonicalize(acts.to_vec());
    let mut groups: Vec<String> = Vec::new();
    let mut i = 0;
    while i < set.0.len() {
        let head = &set.0[i];
        let mut items = Vec::new();
        let mut j = i;
        while j < set.0.len() && set.0[j].act_type == head.act_type && set.0[j].domain == head.domain {
            let a = &set.0[j];
            if a.has_value() {
                items.push(format!("{}={}", a.slot, a.value));
            } else {
                items.push(a.slot.clone());
            }
            j += 1;
        }
        if items.len() == 1 && items[0] == NONE {
            groups.push(format!("{}({})", head.act_type, head.domain));
        } else {
            groups.push(format!("{}({}, {})", head.act_type, head.domain, items.join("; ")));
        }
        i = j;
    }
    groups.join("|")
}

/// Parses the transcript grammar back into a canonical act set.
pub fn string_to_acts(text: &str) -> Result<DialogActSet> {
    let mut acts = Vec::new();
    if text.trim().is_empty() {
        return Ok(DialogActSet::new());
    }
    let mut offset = 0;
    for group in text.split('|') {
        parse_group(group, offset, &mut acts)?;
        offset += group.len() + 1;
    }
    Ok(canonicalize(acts))
}

fn parse_group(group: &str, base: usize, out: &mut Vec<DialogAct>) -> Result<()> {
    let err = |at: usize, message: &str| Error::ActParse { offset: base + at, message: message.to_string() };
    let open = group.find('(').ok_or_else(|| err(0, "expected `(`"))?;
    let close = group.rfind(')').ok_or_else(|| err(group.len(), "expected `)`"))?;
    if close < open {
        return Err(err(close, "`)` before `(`"));
    }
    if !group[close + 1..].trim().is_empty() {
        return Err(err(close + 1, "trailing characters after `)`"));
    }
    let type_str = group[..open].trim();
    let act_type: ActType = type_str.parse().map_err(|_| err(0, &format!("unknown act type `{type_str}`")))?;
    let inner = &group[open + 1..close];
    let (domain, rest) = match inner.find(',') {
        Some(c) => (&inner[..c], Some((c + 1, &inner[c + 1..]))),
        None => (inner, None),
    };
    let domain = domain.trim();
    if domain.is_empty() {
        return Err(err(open + 1, "missing domain"));
    }
    let Some((rest_at, rest)) = rest else {
        out.push(DialogAct::bare(act_type, domain));
        return Ok(());
    };
    let mut item_at = open + 1 + rest_at;
    for item in rest.split(';') {
        let (slot, value) = match item.find('=') {
            Some(eq) => (item[..eq].trim(), item[eq + 1..].trim()),
            None => (item.trim(), NONE),
        };
        if slot.is_empty() {
            return Err(err(item_at, "empty slot"));
        }
        if value.is_empty() {
            return Err(err(item_at, "empty value"));
        }
        out.push(DialogAct::new(act_type, domain, slot, value));
        item_at += item.len() + 1;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_canonicalizes_to_empty() {
        assert!(canonicalize(vec![]).is_empty());
    }

    #[test]
    fn duplicates_collapse() {
        let a = DialogAct::inform("restaurant", "area", "north");
        assert_eq!(canonicalize(vec![a.clone(), a.clone()]).acts(), [a]);
    }

    #[test]
    fn request_and_bare_invariants() {
        let r = DialogAct::new(ActType::Request, "hotel", "phone", "x");
        assert_eq!(r.value, NONE);
        let b = DialogAct::new(ActType::Bye, GENERAL, "area", "x");
        assert_eq!((b.slot.as_str(), b.value.as_str()), (NONE, NONE));
    }

    #[test]
    fn grammar_examples() {
        let a = DialogAct::inform("restaurant", "area", "north");
        assert_eq!(acts_to_string(&[a]), "inform(restaurant, area=north)");
        assert!(string_to_acts("").unwrap().is_empty());
        let set = string_to_acts("request(hotel, phone; postcode)|bye(general)").unwrap();
        assert_eq!(
            set.acts(),
            [DialogAct::request("hotel", "phone"), DialogAct::request("hotel", "postcode"), DialogAct::general(ActType::Bye)]
        );
    }

    #[test]
    fn grouping_follows_canonical_order() {
        let acts = vec![
            DialogAct::request("restaurant", "phone"),
            DialogAct::inform("restaurant", "food", "italian"),
            DialogAct::inform("restaurant", "area", "north"),
        ];
        assert_eq!(acts_to_string(&acts), "inform(restaurant, area=north; food=italian)|request(restaurant, phone)");
    }

    #[test]
    fn malformed_strings_report_offsets() {
        for (text, at) in [("inform restaurant", 0), ("inform(restaurant, area=north)|foo(x)", 31), ("bye(general) x", 12)] {
            match string_to_acts(text) {
                Err(Error::ActParse { offset, .. }) => assert_eq!(offset, at, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(string_to_acts("inform(restaurant, =north)").is_err());
        assert!(string_to_acts("inform(, area=north)").is_err());
    }

    pub(crate) fn arb_act() -> impl Strategy<Value = DialogAct> {
        let t = prop::sample::select(ActType::ALL.to_vec());
        let d = prop::sample::select(vec!["restaurant", "hotel", "general", "taxi"]);
        let s = prop::sample::select(vec!["area", "food", "phone", "none", "day"]);
        let v = prop::sample::select(vec!["north", "italian", "01223 351880", "none", "2", "the golden curry"]);
        (t, d, s, v).prop_map(|(t, d, s, v)| DialogAct::new(t, d, s, v))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn canonicalize_is_idempotent(acts in prop::collection::vec(arb_act(), 0..8)) {
            let once = canonicalize(acts);
            prop_assert_eq!(canonicalize(once.clone().into_vec()), once);
        }

        #[test]
        fn serialization_round_trips(acts in prop::collection::vec(arb_act(), 0..8)) {
            let s = acts_to_string(&acts);
            prop_assert_eq!(string_to_acts(&s).unwrap(), canonicalize(acts));
        }

        #[test]
        fn permutation_invariant_serialization(mut acts in prop::collection::vec(arb_act(), 0..8), seed in any::<u64>()) {
            let before = acts_to_string(&acts);
            let n = acts.len();
            if n > 1 { acts.rotate_left((seed as usize) % n); }
            prop_assert_eq!(acts_to_string(&acts), before);
        }
    }
}
