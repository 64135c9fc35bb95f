//! Recursive-descent parser for the formula syntax.
//!
//! Precedence, tightest first: `!` and prefix temporal operators, `&`, `|`,
//! infix `U`, `->`. `U` and `->` associate to the right. Unicode `¬ ∧ ∨ →`
//! are accepted as aliases.

use std::fmt;

use thiserror::Error;

use super::ast::{Atom, Formula, Predicate};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, col {col}: expected {expected}, found {found}")]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pos {
    line: usize,
    col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Not,
    And,
    Or,
    Implies,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::LBracket => f.write_str("'['"),
            Tok::RBracket => f.write_str("']'"),
            Tok::Comma => f.write_str("','"),
            Tok::Not => f.write_str("'!'"),
            Tok::And => f.write_str("'&'"),
            Tok::Or => f.write_str("'|'"),
            Tok::Implies => f.write_str("'->'"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || c == '$'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

fn lex(text: &str, line0: usize, col0: usize) -> Result<Vec<(Tok, Pos)>, SyntaxError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (line0, col0);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            i += 1;
            continue;
        }
        let (tok, len) = match c {
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '[' => (Tok::LBracket, 1),
            ']' => (Tok::RBracket, 1),
            ',' => (Tok::Comma, 1),
            '!' | '¬' | '~' => (Tok::Not, 1),
            '∧' => (Tok::And, 1),
            '∨' => (Tok::Or, 1),
            '→' => (Tok::Implies, 1),
            '&' if chars.get(i + 1) == Some(&'&') => (Tok::And, 2),
            '&' => (Tok::And, 1),
            '|' if chars.get(i + 1) == Some(&'|') => (Tok::Or, 2),
            '|' => (Tok::Or, 1),
            '-' if chars.get(i + 1) == Some(&'>') => (Tok::Implies, 2),
            c if is_ident_start(c) => {
                let start = i;
                let mut j = i;
                while j < chars.len() && is_ident_char(chars[j]) {
                    j += 1;
                }
                (Tok::Ident(chars[start..j].iter().collect()), j - start)
            }
            other => {
                return Err(SyntaxError {
                    line,
                    col,
                    expected: "a formula token".into(),
                    found: format!("'{other}'"),
                })
            }
        };
        out.push((tok, pos));
        i += len;
        col += len;
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

const KEYWORDS: [&str; 14] = [
    "AX", "EX", "AF", "EF", "AG", "EG", "X", "F", "G", "U", "A", "E", "true", "false",
];

struct Parser {
    toks: Vec<(Tok, Pos)>,
    idx: usize,
    first_ctl: Option<Pos>,
    first_ltl: Option<Pos>,
}

type PResult = Result<Formula, SyntaxError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.idx].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.idx].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.idx].clone();
        if self.idx + 1 < self.toks.len() {
            self.idx += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> SyntaxError {
        let (tok, pos) = &self.toks[self.idx];
        SyntaxError {
            line: pos.line,
            col: pos.col,
            expected: expected.to_string(),
            found: tok.to_string(),
        }
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), SyntaxError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    fn is_ident(&self, name: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == name)
    }

    fn note_ctl(&mut self, pos: Pos) {
        self.first_ctl.get_or_insert(pos);
    }

    fn note_ltl(&mut self, pos: Pos) {
        self.first_ltl.get_or_insert(pos);
    }

    fn implication(&mut self) -> PResult {
        let lhs = self.until()?;
        if *self.peek() == Tok::Implies {
            self.bump();
            let rhs = self.implication()?;
            return Ok(Formula::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn until(&mut self) -> PResult {
        let lhs = self.disjunction()?;
        if self.is_ident("U") {
            let (_, pos) = self.bump();
            self.note_ltl(pos);
            let rhs = self.until()?;
            return Ok(Formula::U(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> PResult {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.conjunction()?;
            lhs = Formula::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> PResult {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.unary()?;
            lhs = Formula::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult {
        if *self.peek() == Tok::Not {
            self.bump();
            return Ok(Formula::Not(Box::new(self.unary()?)));
        }
        let (name, pos) = match self.peek() {
            Tok::Ident(s) => (s.clone(), self.pos()),
            _ => return self.primary(),
        };
        let wrap: Option<fn(Box<Formula>) -> Formula> = match name.as_str() {
            "AX" => Some(Formula::AX),
            "EX" => Some(Formula::EX),
            "AF" => Some(Formula::AF),
            "EF" => Some(Formula::EF),
            "AG" => Some(Formula::AG),
            "EG" => Some(Formula::EG),
            "X" => Some(Formula::X),
            "F" => Some(Formula::F),
            "G" => Some(Formula::G),
            _ => None,
        };
        match wrap {
            Some(wrap) => {
                if name.len() == 2 {
                    self.note_ctl(pos);
                } else {
                    self.note_ltl(pos);
                }
                self.bump();
                Ok(wrap(Box::new(self.unary()?)))
            }
            None => self.primary(),
        }
    }

    fn primary(&mut self) -> PResult {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let inner = self.implication()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Tok::Ident(name) => match name.as_str() {
                "true" => {
                    self.bump();
                    Ok(Formula::True)
                }
                "false" => {
                    self.bump();
                    Ok(Formula::False)
                }
                "A" | "E" => {
                    let (_, pos) = self.bump();
                    self.note_ctl(pos);
                    self.expect(Tok::LBracket, "'['")?;
                    let lhs = self.disjunction()?;
                    if !self.is_ident("U") {
                        return Err(self.error("'U'"));
                    }
                    self.bump();
                    let rhs = self.disjunction()?;
                    self.expect(Tok::RBracket, "']'")?;
                    let (l, r) = (Box::new(lhs), Box::new(rhs));
                    Ok(if name == "A" {
                        Formula::AU(l, r)
                    } else {
                        Formula::EU(l, r)
                    })
                }
                _ if KEYWORDS.contains(&name.as_str()) => Err(self.error("a formula")),
                _ => self.atom(&name),
            },
            _ => Err(self.error("a formula")),
        }
    }

    fn atom(&mut self, name: &str) -> PResult {
        let pos = self.pos();
        let predicate =
            Predicate::from_name(name).ok_or_else(|| self.error("a known predicate"))?;
        self.bump();
        let mut args = Vec::new();
        if *self.peek() == Tok::LParen {
            self.bump();
            loop {
                match self.peek().clone() {
                    Tok::Ident(a) => {
                        self.bump();
                        args.push(a);
                    }
                    _ => return Err(self.error("an argument")),
                }
                match self.peek() {
                    Tok::Comma => {
                        self.bump();
                    }
                    Tok::RParen => {
                        self.bump();
                        break;
                    }
                    _ => return Err(self.error("',' or ')'")),
                }
            }
        }
        let atom = Atom { predicate, args };
        atom.validate().map_err(|msg| SyntaxError {
            line: pos.line,
            col: pos.col,
            expected: msg,
            found: format!("`{atom}`"),
        })?;
        Ok(Formula::Atom(atom))
    }
}

/// Parses one formula.
pub fn parse(text: &str) -> Result<Formula, SyntaxError> {
    parse_at(text, 1, 1)
}

/// Parses a formula whose first character sits at `line`, `col` of some
/// larger document; error positions are reported in document coordinates.
pub fn parse_at(text: &str, line: usize, col: usize) -> Result<Formula, SyntaxError> {
    let toks = lex(text, line, col)?;
    let mut p = Parser {
        toks,
        idx: 0,
        first_ctl: None,
        first_ltl: None,
    };
    let f = p.implication()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error("end of input"));
    }
    if let (Some(c), Some(l)) = (p.first_ctl, p.first_ltl) {
        let at = if (c.line, c.col) > (l.line, l.col) {
            c
        } else {
            l
        };
        return Err(SyntaxError {
            line: at.line,
            col: at.col,
            expected: "operators of a single logic".into(),
            found: "mixed CTL and LTL operators".into(),
        });
    }
    Ok(f)
}

/// Parses a property file: one formula per line, optionally prefixed by
/// `NAME:`, with `#` starting a comment. Unnamed formulas are called
/// `line<N>`.
pub fn parse_property_file(text: &str) -> Result<Vec<(String, Formula)>, SyntaxError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let (name, offset) = match body.split_once(':') {
            Some((name, _)) => (name.trim().to_string(), name.chars().count() + 1),
            None => (format!("line{line_no}"), 0),
        };
        let formula_text: String = body.chars().skip(offset).collect();
        out.push((name, parse_at(&formula_text, line_no, offset + 1)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::ast::build::*;
    use super::*;

    fn a(p: Predicate) -> Formula {
        Formula::Atom(Atom::plain(p))
    }

    #[test]
    fn parses_response_pattern() {
        let f = parse("AG(req_received -> AF resp_sent)").unwrap();
        assert_eq!(
            f,
            ag(implies(
                a(Predicate::ReqReceived),
                af(a(Predicate::RespSent))
            ))
        );
        assert_eq!(parse("EF(resp_sent)").unwrap(), ef(a(Predicate::RespSent)));
    }

    #[test]
    fn unbalanced_paren_reports_column() {
        let e = parse("AG(").unwrap_err();
        assert_eq!((e.line, e.col), (1, 4));
    }

    #[test]
    fn precedence_and_associativity() {
        let p = || a(Predicate::Invoked);
        let q = || a(Predicate::Aggregated);
        let r = || a(Predicate::DagBuilt);
        assert_eq!(parse("!invoked & aggregated").unwrap(), and(not(p()), q()));
        assert_eq!(
            parse("invoked | aggregated & dag_built").unwrap(),
            or(p(), and(q(), r()))
        );
        assert_eq!(
            parse("invoked -> aggregated -> dag_built").unwrap(),
            implies(p(), implies(q(), r()))
        );
        assert_eq!(
            parse("invoked U aggregated U dag_built").unwrap(),
            u(p(), u(q(), r()))
        );
        assert_eq!(
            parse("¬invoked ∧ aggregated → dag_built").unwrap(),
            implies(and(not(p()), q()), r())
        );
    }

    #[test]
    fn parses_parameterized_atoms() {
        let f = parse("AG(state_is(t1, READY) -> AF state_is($v, DISPATCHING))").unwrap();
        assert_eq!(
            f.render(),
            "AG((state_is(t1, READY) -> AF(state_is($v, DISPATCHING))))"
        );
        assert!(parse("state_is(t1, NOPE)").is_err());
        assert!(parse("dag_built(x)").is_err());
        assert!(parse("resp_sent(Success)").is_ok());
    }

    #[test]
    fn rejects_unknown_predicate_and_mixing() {
        let e = parse("AG(foo)").unwrap_err();
        assert_eq!((e.line, e.col), (1, 4));
        let e = parse("AG(invoked -> F aggregated)").unwrap_err();
        assert_eq!((e.line, e.col), (1, 15));
    }

    #[test]
    fn until_forms_round_trip() {
        for text in [
            "A[invoked U aggregated]",
            "E[!(invoked) U (aggregated & dag_built)]",
            "(invoked U aggregated)",
            "AG(A[invoked U E[aggregated U dag_built]])",
        ] {
            let f = parse(text).unwrap();
            assert_eq!(parse(&f.render()).unwrap(), f);
        }
    }

    #[test]
    fn property_file() {
        let text = "# header\nHP1: AG(req_received -> AF(resp_sent))\n\nmine: G(invoked)  # trailing\nEF(dag_built)\n";
        let props = parse_property_file(text).unwrap();
        let names: Vec<&str> = props.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["HP1", "mine", "line5"]);
        let e = parse_property_file("ok: dag_built\nbad: AG(dag_built").unwrap_err();
        assert_eq!((e.line, e.col), (2, 18));
    }
}
