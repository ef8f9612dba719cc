//! Coverability instances and their on-disk formats.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mist;
use crate::net::{DiscreteMarking, NetBuilder, PetriNet};

/// A net, an initial marking and a disjunction of markings to cover.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub name: String,
    pub net: PetriNet,
    pub initial: DiscreteMarking,
    pub targets: Vec<DiscreteMarking>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Mist,
    Json,
}

impl Format {
    /// `.json` files are JSON, everything else is MIST.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Mist,
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Mist => "mist",
            Format::Json => "json",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub fn new(line: usize, col: usize, kind: ParseErrorKind) -> Self {
        ParseError { line, col, kind }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("{0}")]
    Lexical(String),
    #[error("expected {expected}, found {found}")]
    Unexpected { expected: String, found: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{0}` given twice")]
    DuplicateVariable(String),
    #[error("missing `{0}` section")]
    MissingSection(String),
    #[error("update drives `{var}` below zero: guard {guard} plus delta {delta}")]
    NegativePost { var: String, guard: u64, delta: i128 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("{0}")]
    Invalid(String),
}

impl Instance {
    pub fn parse(text: &str, format: Format) -> Result<Instance, ParseError> {
        match format {
            Format::Mist => mist::parse(text),
            Format::Json => parse_json(text),
        }
    }

    pub fn serialize(&self, format: Format) -> String {
        match format {
            Format::Mist => mist::serialize(self),
            Format::Json => to_json(self),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonInstance {
    name: String,
    places: Vec<String>,
    transitions: Vec<JsonTransition>,
    init: BTreeMap<String, u64>,
    targets: Vec<BTreeMap<String, u64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonTransition {
    name: String,
    pre: BTreeMap<String, u64>,
    post: BTreeMap<String, u64>,
}

/// Line and column of the first occurrence of `"needle"` in `text`.
fn locate(text: &str, needle: &str) -> (usize, usize) {
    let quoted = format!("\"{needle}\"");
    match text.find(&quoted) {
        Some(off) => {
            let before = &text[..off];
            let line = before.matches('\n').count() + 1;
            let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
            (line, col)
        }
        None => (1, 1),
    }
}

fn parse_json(text: &str) -> Result<Instance, ParseError> {
    let doc: JsonInstance = serde_json::from_str(text).map_err(|e| {
        ParseError::new(e.line(), e.column(), ParseErrorKind::Lexical(e.to_string()))
    })?;
    let mut b = NetBuilder::new();
    let mut index = BTreeMap::new();
    for name in &doc.places {
        let p = b.add_place(name.clone());
        if index.insert(name.clone(), p).is_some() {
            let (l, c) = locate(text, name);
            return Err(ParseError::new(l, c, ParseErrorKind::DuplicateVariable(name.clone())));
        }
    }
    if index.is_empty() {
        let (l, c) = locate(text, "places");
        return Err(ParseError::new(
            l,
            c,
            ParseErrorKind::Invalid("an instance needs at least one place".into()),
        ));
    }
    let lookup = |name: &String| {
        index.get(name).copied().ok_or_else(|| {
            let (l, c) = locate(text, name);
            ParseError::new(l, c, ParseErrorKind::UnknownVariable(name.clone()))
        })
    };
    for jt in &doc.transitions {
        let t = b.add_transition(jt.name.clone());
        for (name, &w) in &jt.pre {
            b.set_pre(lookup(name)?, t, w);
        }
        for (name, &w) in &jt.post {
            b.set_post(lookup(name)?, t, w);
        }
    }
    let marking = |m: &BTreeMap<String, u64>| -> Result<DiscreteMarking, ParseError> {
        let mut v = vec![0; index.len()];
        for (name, &k) in m {
            v[lookup(name)?.0] = k;
        }
        Ok(DiscreteMarking(v))
    };
    let initial = marking(&doc.init)?;
    let targets = doc.targets.iter().map(marking).collect::<Result<Vec<_>, _>>()?;
    if targets.is_empty() {
        let (l, c) = locate(text, "targets");
        return Err(ParseError::new(
            l,
            c,
            ParseErrorKind::Invalid("at least one target is required".into()),
        ));
    }
    let net = b.build().map_err(|e| {
        let (l, c) = match &e {
            crate::net::NetError::DuplicateName(n) => locate(text, n),
            _ => (1, 1),
        };
        ParseError::new(l, c, ParseErrorKind::Invalid(e.to_string()))
    })?;
    Ok(Instance {
        name: doc.name,
        net,
        initial,
        targets,
    })
}

fn to_json(inst: &Instance) -> String {
    let net = &inst.net;
    let names = net.place_names();
    let sparse = |col: &[(usize, u64)]| -> BTreeMap<String, u64> {
        col.iter().map(|&(p, w)| (names[p].clone(), w)).collect()
    };
    let marking = |m: &DiscreteMarking| -> BTreeMap<String, u64> {
        m.0.iter()
            .enumerate()
            .filter(|(_, &v)| v > 0)
            .map(|(p, &v)| (names[p].clone(), v))
            .collect()
    };
    let doc = JsonInstance {
        name: inst.name.clone(),
        places: names.to_vec(),
        transitions: net
            .transitions()
            .map(|t| JsonTransition {
                name: net.transition_name(t).to_string(),
                pre: sparse(net.pre_column(t)),
                post: sparse(net.post_column(t)),
            })
            .collect(),
        init: marking(&inst.initial),
        targets: inst.targets.iter().map(marking).collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("instance serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const FORK_JSON: &str = r#"{
  "name": "fork",
  "places": [
    "p0",
    "p1"
  ],
  "transitions": [
    {
      "name": "t1",
      "pre": {
        "p0": 2
      },
      "post": {
        "p0": 1,
        "p1": 1
      }
    },
    {
      "name": "t2",
      "pre": {
        "p0": 1
      },
      "post": {}
    }
  ],
  "init": {
    "p0": 1
  },
  "targets": [
    {
      "p1": 1
    }
  ]
}
"#;

    #[test]
    fn json_golden_for_net_f() {
        let (net, m0) = crate::net::tests::net_f();
        let inst = Instance {
            name: "fork".into(),
            net,
            initial: m0,
            targets: vec![DiscreteMarking(vec![0, 1])],
        };
        assert_eq!(inst.serialize(Format::Json), FORK_JSON);
        assert_eq!(Instance::parse(FORK_JSON, Format::Json).unwrap(), inst);
    }

    #[test]
    fn json_errors_are_located() {
        let bad = FORK_JSON.replace("\"p1\": 1\n    }\n  ]", "\"p9\": 1\n    }\n  ]");
        let err = Instance::parse(&bad, Format::Json).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::UnknownVariable(ref v) if v == "p9"));
        assert!(err.line > 1);

        let err = Instance::parse("{\"name\": 3}", Format::Json).unwrap_err();
        assert_eq!(err.line, 1);
        assert!(matches!(err.kind, ParseErrorKind::Lexical(_)));
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(Format::from_path(Path::new("a/b.json")), Format::Json);
        assert_eq!(Format::from_path(Path::new("a/b.spec")), Format::Mist);
    }
}
