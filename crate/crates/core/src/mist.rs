//! Reader and writer for the MIST coverability format (Petri net subset).
//!
//! ```text
//! # name: example
//! vars
//!     p0 p1
//! rules
//!     p0 >= 2 -> p0' = p0 - 1, p1' = p1 + 1;
//!     p0 >= 1 -> p0' = p0 - 1;
//! init
//!     p0 = 1, p1 = 0
//! target
//!     p1 >= 1
//! ```
//!
//! Sections appear in the order above; `rules` may be omitted. A rule's
//! guard is a conjunction of `var >= n` (unmentioned variables default to
//! `>= 0`) and its updates are `var' = var + n` or `var' = var - n`. A rule
//! becomes a transition with `Pre(p) = guard` and `Post(p) = guard + delta`.
//! Every line of the `target` section is one upward-closed target; the
//! instance asks whether any of them is coverable. Interval initial
//! markings and the `invariants` section are rejected.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::instance::{Instance, ParseError, ParseErrorKind};
use crate::net::{DiscreteMarking, NetBuilder};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(u64),
    Prime,
    Ge,
    Eq,
    Plus,
    Minus,
    Arrow,
    Comma,
    Semi,
    Newline,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(n) => format!("`{n}`"),
            Tok::Prime => "`'`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Newline => "end of line".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<(Vec<Spanned>, Option<String>), ParseError> {
    let mut out = Vec::new();
    let mut name = None;
    for (li, line) in text.lines().enumerate() {
        let lineno = li + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            let push = |out: &mut Vec<Spanned>, tok| out.push(Spanned { tok, line: lineno, col });
            match c {
                '#' => {
                    let comment: String = chars[i + 1..].iter().collect();
                    if let Some(n) = comment.trim().strip_prefix("name:") {
                        if name.is_none() {
                            name = Some(n.trim().to_string());
                        }
                    }
                    break;
                }
                c if c.is_whitespace() => {}
                '\'' => push(&mut out, Tok::Prime),
                '+' => push(&mut out, Tok::Plus),
                ',' => push(&mut out, Tok::Comma),
                ';' => push(&mut out, Tok::Semi),
                '=' => push(&mut out, Tok::Eq),
                '>' if chars.get(i + 1) == Some(&'=') => {
                    push(&mut out, Tok::Ge);
                    i += 1;
                }
                '-' if chars.get(i + 1) == Some(&'>') => {
                    push(&mut out, Tok::Arrow);
                    i += 1;
                }
                '-' => push(&mut out, Tok::Minus),
                c if c.is_ascii_digit() => {
                    let start = i;
                    while i + 1 < chars.len() && chars[i + 1].is_ascii_digit() {
                        i += 1;
                    }
                    let s: String = chars[start..=i].iter().collect();
                    let n = s.parse().map_err(|_| {
                        ParseError::new(lineno, col, ParseErrorKind::Lexical(format!("number `{s}` too large")))
                    })?;
                    push(&mut out, Tok::Num(n));
                }
                c if c.is_alphabetic() || c == '_' => {
                    let start = i;
                    while i + 1 < chars.len()
                        && (chars[i + 1].is_alphanumeric() || chars[i + 1] == '_' || chars[i + 1] == '.')
                    {
                        i += 1;
                    }
                    push(&mut out, Tok::Ident(chars[start..=i].iter().collect()));
                }
                other => {
                    return Err(ParseError::new(
                        lineno,
                        col,
                        ParseErrorKind::Lexical(format!("unexpected character `{other}`")),
                    ))
                }
            }
            i += 1;
        }
        out.push(Spanned {
            tok: Tok::Newline,
            line: lineno,
            col: chars.len() + 1,
        });
    }
    Ok((out, name))
}

const SECTIONS: [&str; 4] = ["vars", "rules", "init", "target"];

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    end: (usize, usize),
    vars: BTreeMap<String, usize>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn skip_newlines(&mut self) {
        while self.peek() == Some(&Tok::Newline) {
            self.pos += 1;
        }
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map_or(self.end, |s| (s.line, s.col))
    }

    fn err(&self, kind: ParseErrorKind) -> ParseError {
        let (l, c) = self.here();
        ParseError::new(l, c, kind)
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let found = self
            .peek()
            .map_or("end of input".to_string(), Tok::describe);
        self.err(ParseErrorKind::Unexpected {
            expected: expected.to_string(),
            found,
        })
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn number(&mut self) -> Result<u64, ParseError> {
        match self.peek() {
            Some(Tok::Num(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(n)
            }
            _ => Err(self.unexpected("a natural number")),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn at_any_section(&self) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if SECTIONS.contains(&s.as_str()) || s == "invariants")
    }

    fn section(&mut self, kw: &str) -> Result<(), ParseError> {
        self.skip_newlines();
        if self.at_keyword("invariants") {
            return Err(self.err(ParseErrorKind::Unsupported(
                "the `invariants` section".into(),
            )));
        }
        if self.at_keyword(kw) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(ParseErrorKind::MissingSection(kw.into())))
        }
    }

    /// A declared variable name.
    fn var(&mut self) -> Result<usize, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => match self.vars.get(s) {
                Some(&i) => {
                    self.pos += 1;
                    Ok(i)
                }
                None => Err(self.err(ParseErrorKind::UnknownVariable(s.clone()))),
            },
            _ => Err(self.unexpected("a variable")),
        }
    }

    fn parse(&mut self, name: String) -> Result<Instance, ParseError> {
        self.section("vars")?;
        let mut builder = NetBuilder::new();
        loop {
            self.skip_newlines();
            if self.at_any_section() || self.peek().is_none() {
                break;
            }
            let at = self.here();
            match self.next() {
                Some(Tok::Ident(s)) => {
                    if self.vars.contains_key(&s) {
                        return Err(ParseError::new(at.0, at.1, ParseErrorKind::DuplicateVariable(s)));
                    }
                    self.vars.insert(s.clone(), self.vars.len());
                    builder.add_place(s);
                }
                _ => {
                    self.pos -= 1;
                    return Err(self.unexpected("a variable name"));
                }
            }
        }
        if self.vars.is_empty() {
            return Err(self.unexpected("at least one variable"));
        }
        let n = self.vars.len();

        self.skip_newlines();
        if self.at_keyword("rules") {
            self.pos += 1;
            let mut count = 0;
            loop {
                self.skip_newlines();
                if self.at_any_section() || self.peek().is_none() {
                    break;
                }
                count += 1;
                self.rule(&mut builder, count, n)?;
            }
        }

        self.section("init")?;
        let mut init = vec![None; n];
        loop {
            self.skip_newlines();
            if self.at_any_section() || self.peek().is_none() {
                break;
            }
            let at = self.here();
            let v = self.var()?;
            if self.peek() == Some(&Tok::Ge) {
                return Err(self.err(ParseErrorKind::Unsupported(
                    "interval initial markings".into(),
                )));
            }
            self.expect(Tok::Eq)?;
            let k = self.number()?;
            if init[v].replace(k).is_some() {
                return Err(ParseError::new(
                    at.0,
                    at.1,
                    ParseErrorKind::DuplicateVariable(builder_name(&self.vars, v)),
                ));
            }
            if self.peek() == Some(&Tok::Comma) {
                self.pos += 1;
            }
        }
        let initial = DiscreteMarking(init.into_iter().map(|v| v.unwrap_or(0)).collect());

        self.section("target")?;
        let mut targets = Vec::new();
        loop {
            self.skip_newlines();
            if self.peek().is_none() {
                break;
            }
            if self.at_any_section() {
                return Err(self.unexpected("a target or end of input"));
            }
            let mut target = vec![None; n];
            loop {
                let at = self.here();
                let v = self.var()?;
                self.expect(Tok::Ge)?;
                let k = self.number()?;
                if target[v].replace(k).is_some() {
                    return Err(ParseError::new(
                        at.0,
                        at.1,
                        ParseErrorKind::DuplicateVariable(builder_name(&self.vars, v)),
                    ));
                }
                match self.peek() {
                    Some(Tok::Comma) => self.pos += 1,
                    Some(Tok::Newline) | None => break,
                    _ => return Err(self.unexpected("`,` or end of line")),
                }
            }
            targets.push(DiscreteMarking(
                target.into_iter().map(|v| v.unwrap_or(0)).collect(),
            ));
        }
        if targets.is_empty() {
            return Err(self.err(ParseErrorKind::Unexpected {
                expected: "at least one target".into(),
                found: "end of input".into(),
            }));
        }
        let net = builder.build().map_err(|e| {
            ParseError::new(1, 1, ParseErrorKind::Invalid(e.to_string()))
        })?;
        Ok(Instance {
            name,
            net,
            initial,
            targets,
        })
    }

    fn rule(&mut self, builder: &mut NetBuilder, index: usize, n: usize) -> Result<(), ParseError> {
        let (line, col) = self.here();
        let mut guard = vec![None; n];
        if self.peek() != Some(&Tok::Arrow) {
            loop {
                self.skip_newlines();
                let at = self.here();
                let v = self.var()?;
                self.expect(Tok::Ge)?;
                let k = self.number()?;
                if guard[v].replace(k).is_some() {
                    return Err(ParseError::new(
                        at.0,
                        at.1,
                        ParseErrorKind::DuplicateVariable(builder_name(&self.vars, v)),
                    ));
                }
                self.skip_newlines();
                if self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        self.skip_newlines();
        self.expect(Tok::Arrow)?;
        let mut delta: Vec<Option<i128>> = vec![None; n];
        self.skip_newlines();
        if self.peek() != Some(&Tok::Semi) {
            loop {
                self.skip_newlines();
                let at = self.here();
                let v = self.var()?;
                self.expect(Tok::Prime)?;
                self.expect(Tok::Eq)?;
                let rhs_at = self.here();
                let w = self.var()?;
                if w != v {
                    return Err(ParseError::new(
                        rhs_at.0,
                        rhs_at.1,
                        ParseErrorKind::Unsupported(format!(
                            "update of `{}` from another variable",
                            builder_name(&self.vars, v)
                        )),
                    ));
                }
                let d = match self.peek() {
                    Some(Tok::Plus) => {
                        self.pos += 1;
                        self.number()? as i128
                    }
                    Some(Tok::Minus) => {
                        self.pos += 1;
                        -(self.number()? as i128)
                    }
                    _ => 0,
                };
                if delta[v].replace(d).is_some() {
                    return Err(ParseError::new(
                        at.0,
                        at.1,
                        ParseErrorKind::DuplicateVariable(builder_name(&self.vars, v)),
                    ));
                }
                self.skip_newlines();
                if self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        self.skip_newlines();
        self.expect(Tok::Semi)?;

        let t = builder.add_transition(format!("t{index}"));
        for p in 0..n {
            let g = guard[p].unwrap_or(0);
            let post = g as i128 + delta[p].unwrap_or(0);
            if post < 0 {
                return Err(ParseError::new(
                    line,
                    col,
                    ParseErrorKind::NegativePost {
                        var: builder_name(&self.vars, p),
                        guard: g,
                        delta: delta[p].unwrap_or(0),
                    },
                ));
            }
            let post = u64::try_from(post).map_err(|_| {
                ParseError::new(line, col, ParseErrorKind::Lexical("weight too large".into()))
            })?;
            builder.set_pre(crate::Place(p), t, g);
            builder.set_post(crate::Place(p), t, post);
        }
        Ok(())
    }
}

fn builder_name(vars: &BTreeMap<String, usize>, v: usize) -> String {
    vars.iter()
        .find(|(_, &i)| i == v)
        .map(|(s, _)| s.clone())
        .unwrap_or_default()
}

pub fn parse(text: &str) -> Result<Instance, ParseError> {
    let (toks, name) = lex(text)?;
    let end = toks.last().map_or((1, 1), |t| (t.line, t.col));
    let mut p = Parser {
        toks,
        pos: 0,
        end,
        vars: BTreeMap::new(),
    };
    p.parse(name.unwrap_or_else(|| "unnamed".into()))
}

pub fn serialize(inst: &Instance) -> String {
    let net = &inst.net;
    let mut out = String::new();
    writeln!(out, "# name: {}", inst.name).unwrap();
    out.push_str("vars\n   ");
    for p in net.place_names() {
        write!(out, " {p}").unwrap();
    }
    out.push_str("\n\nrules\n");
    for t in net.transitions() {
        let guard: Vec<String> = net
            .pre_column(t)
            .iter()
            .map(|&(p, w)| format!("{} >= {w}", net.place_names()[p]))
            .collect();
        let updates: Vec<String> = net
            .effect_column(t)
            .into_iter()
            .map(|(p, c)| {
                let name = &net.place_names()[p];
                if c > 0 {
                    format!("{name}' = {name} + {c}")
                } else {
                    format!("{name}' = {name} - {}", -c)
                }
            })
            .collect();
        writeln!(out, "    {} -> {};", guard.join(", "), updates.join(", ")).unwrap();
    }
    out.push_str("\ninit\n    ");
    let init: Vec<String> = net
        .places()
        .map(|p| format!("{} = {}", net.place_name(p), inst.initial.0[p.0]))
        .collect();
    out.push_str(&init.join(", "));
    out.push_str("\n\ntarget\n");
    for target in &inst.targets {
        let mut atoms: Vec<String> = net
            .places()
            .filter(|p| target.0[p.0] > 0)
            .map(|p| format!("{} >= {}", net.place_name(p), target.0[p.0]))
            .collect();
        if atoms.is_empty() {
            atoms.push(format!("{} >= 0", net.place_names()[0]));
        }
        writeln!(out, "    {}", atoms.join(", ")).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::tests::net_f;
    use crate::{Place, Transition};

    pub const FORK: &str = "\
# name: fork
vars
    p0 p1
rules
    p0 >= 2 -> p0' = p0 - 1, p1' = p1 + 1;
    p0 >= 1 -> p0' = p0 - 1;
init
    p0 = 1, p1 = 0
target
    p1 >= 1
";

    #[test]
    fn parses_net_f() {
        let inst = parse(FORK).unwrap();
        let (f, m0) = net_f();
        assert_eq!(inst.net, f);
        assert_eq!(inst.initial, m0);
        assert_eq!(inst.targets, vec![DiscreteMarking(vec![0, 1])]);
        assert_eq!(inst.name, "fork");
        let (p0, p1) = (Place(0), Place(1));
        assert_eq!(inst.net.pre(p0, Transition(0)), 2);
        assert_eq!(inst.net.post(p0, Transition(0)), 1);
        assert_eq!(inst.net.post(p1, Transition(0)), 1);
        assert_eq!(inst.net.pre(p0, Transition(1)), 1);
    }

    #[test]
    fn missing_rules_means_no_transitions() {
        let inst = parse("vars x y\ninit x = 2\ntarget\n y >= 1\n x >= 3, y >= 1\n").unwrap();
        assert_eq!(inst.net.num_transitions(), 0);
        assert_eq!(inst.initial, DiscreteMarking(vec![2, 0]));
        assert_eq!(
            inst.targets,
            vec![DiscreteMarking(vec![0, 1]), DiscreteMarking(vec![3, 1])]
        );
        let text = serialize(&inst);
        assert!(text.contains("rules\n\ninit"));
        assert_eq!(parse(&text).unwrap(), inst);
    }

    #[test]
    fn negative_post_is_rejected() {
        let err = parse("vars p0\nrules\n  p0 >= 1 -> p0' = p0 - 2;\ninit p0 = 1\ntarget p0 >= 1\n")
            .unwrap_err();
        assert_eq!((err.line, err.col), (3, 3));
        assert!(matches!(
            err.kind,
            ParseErrorKind::NegativePost { guard: 1, delta: -2, .. }
        ));
    }

    #[test]
    fn located_errors() {
        let err = parse("vars p\nrules\n q >= 1 -> ;\ninit p = 0\ntarget p >= 1\n").unwrap_err();
        assert_eq!((err.line, err.col), (3, 2));
        assert!(matches!(err.kind, ParseErrorKind::UnknownVariable(ref v) if v == "q"));

        let err = parse("vars p\ninit p = 0\n").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::MissingSection(ref s) if s == "target"));

        let err = parse("rules\n").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::MissingSection(ref s) if s == "vars"));

        let err = parse("vars p\ninit p >= 1\ntarget p >= 1\n").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Unsupported(_)));

        let err = parse("vars p\ninit p = 0\ninvariants\n").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Unsupported(_)));

        let err = parse("vars p\ninit p = 0 $\ntarget p >= 1\n").unwrap_err();
        assert_eq!((err.line, err.col), (2, 12));
        assert!(matches!(err.kind, ParseErrorKind::Lexical(_)));
    }

    #[test]
    fn round_trip_fixture() {
        let inst = parse(FORK).unwrap();
        let text = serialize(&inst);
        assert_eq!(parse(&text).unwrap(), inst);
        assert_eq!(serialize(&parse(&text).unwrap()), text);
    }
}
