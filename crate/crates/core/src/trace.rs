//! Transition labels and traces shared by the choreography and network
//! engines, so runs of either can be compared label by label.

use std::fmt;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::ast::{Label, ProcName, Value, VarName};
use crate::syntax::print_value;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TransitionLabel {
    Com {
        from: ProcName,
        value: Value,
        to: ProcName,
        var: VarName,
    },
    Sel {
        from: ProcName,
        to: ProcName,
        label: Label,
    },
    Then(ProcName),
    Else(ProcName),
    /// A whole multicom or multisel reduced in one step.
    Group(Vec<TransitionLabel>),
}

impl TransitionLabel {
    /// Atomic labels, expanding groups.
    pub fn atoms(&self) -> Vec<TransitionLabel> {
        match self {
            TransitionLabel::Group(ls) => ls.iter().flat_map(|l| l.atoms()).collect(),
            other => vec![other.clone()],
        }
    }
}

impl fmt::Display for TransitionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransitionLabel::Com {
                from,
                value,
                to,
                var,
            } => write!(f, "{from} -> {to}.{var} : {}", print_value(value)),
            TransitionLabel::Sel { from, to, label } => write!(f, "{from} -> {to}[{label}]"),
            TransitionLabel::Then(p) => write!(f, "{p}: then"),
            TransitionLabel::Else(p) => write!(f, "{p}: else"),
            TransitionLabel::Group(ls) => {
                let parts: Vec<String> = ls.iter().map(|l| l.to_string()).collect();
                write!(f, "{{{}}}", parts.join(", "))
            }
        }
    }
}

impl Serialize for TransitionLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            TransitionLabel::Com {
                from,
                value,
                to,
                var,
            } => {
                let mut st = s.serialize_struct("label", 5)?;
                st.serialize_field("kind", "com")?;
                st.serialize_field("from", from.as_str())?;
                st.serialize_field("to", to.as_str())?;
                st.serialize_field("var", var.as_str())?;
                st.serialize_field("value", &print_value(value))?;
                st.end()
            }
            TransitionLabel::Sel { from, to, label } => {
                let mut st = s.serialize_struct("label", 4)?;
                st.serialize_field("kind", "sel")?;
                st.serialize_field("from", from.as_str())?;
                st.serialize_field("to", to.as_str())?;
                st.serialize_field("label", label.as_str())?;
                st.end()
            }
            TransitionLabel::Then(p) | TransitionLabel::Else(p) => {
                let kind = if matches!(self, TransitionLabel::Then(_)) {
                    "then"
                } else {
                    "else"
                };
                let mut st = s.serialize_struct("label", 2)?;
                st.serialize_field("kind", kind)?;
                st.serialize_field("proc", p.as_str())?;
                st.end()
            }
            TransitionLabel::Group(ls) => {
                let mut st = s.serialize_struct("label", 2)?;
                st.serialize_field("kind", "group")?;
                st.serialize_field("group", ls)?;
                st.end()
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Terminated,
    OutOfFuel,
    /// Not terminated and nothing can fire.
    Deadlocked,
    /// Enumeration stopped at the step bound.
    Truncated,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Terminated => "terminated",
            Status::OutOfFuel => "out_of_fuel",
            Status::Deadlocked => "deadlocked",
            Status::Truncated => "truncated",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Trace {
    pub steps: Vec<TransitionLabel>,
    pub status: Status,
}

impl Trace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serialization")
    }
}

/// JSON array of traces, each with an explicit `truncated` flag.
pub fn traces_to_json<'a>(traces: impl IntoIterator<Item = &'a Trace>) -> String {
    #[derive(Serialize)]
    struct Entry<'a> {
        steps: &'a [TransitionLabel],
        status: Status,
        truncated: bool,
    }
    let entries: Vec<Entry> = traces
        .into_iter()
        .map(|t| Entry {
            steps: &t.steps,
            status: t.status,
            truncated: t.status == Status::Truncated,
        })
        .collect();
    serde_json::to_string_pretty(&entries).expect("trace serialization")
}
