use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// Surface syntax tree. `false` is represented as `Not(True)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Eventually(Box<Formula>),
    Always(Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn falsum() -> Self {
        Formula::Not(Box::new(Formula::True))
    }

    pub fn atom(name: &str) -> Self {
        Formula::Atom(name.to_string())
    }

    pub fn negate(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn next(f: Formula) -> Self {
        Formula::Next(Box::new(f))
    }

    pub fn until(a: Formula, b: Formula) -> Self {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn eventually(f: Formula) -> Self {
        Formula::Eventually(Box::new(f))
    }

    pub fn always(f: Formula) -> Self {
        Formula::Always(Box::new(f))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    /// Conjunction of all formulas; `true` when empty.
    pub fn conjunction(parts: impl IntoIterator<Item = Formula>) -> Self {
        parts.into_iter().reduce(Formula::and).unwrap_or(Formula::True)
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::True => {}
            Formula::Atom(a) => {
                out.insert(a.clone());
            }
            Formula::Not(f) | Formula::Next(f) | Formula::Eventually(f) | Formula::Always(f) => f.collect_atoms(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b) | Formula::Implies(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// Operator nesting depth; constants and atoms have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Formula::True | Formula::Atom(_) => 0,
            Formula::Not(f) | Formula::Next(f) | Formula::Eventually(f) | Formula::Always(f) => 1 + f.depth(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b) | Formula::Implies(a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }

    /// Rewrites into the core grammar {true, atom, ¬, ∧, ○, U}.
    pub fn normalize(&self) -> Formula {
        match self {
            Formula::True => Formula::True,
            Formula::Atom(a) => Formula::Atom(a.clone()),
            Formula::Not(f) => Formula::negate(f.normalize()),
            Formula::And(a, b) => Formula::and(a.normalize(), b.normalize()),
            Formula::Or(a, b) => {
                Formula::negate(Formula::and(Formula::negate(a.normalize()), Formula::negate(b.normalize())))
            }
            Formula::Next(f) => Formula::next(f.normalize()),
            Formula::Until(a, b) => Formula::until(a.normalize(), b.normalize()),
            Formula::Eventually(f) => Formula::until(Formula::True, f.normalize()),
            Formula::Always(f) => Formula::negate(Formula::until(Formula::True, Formula::negate(f.normalize()))),
            Formula::Implies(a, b) => Formula::negate(Formula::and(a.normalize(), Formula::negate(b.normalize()))),
        }
    }

    pub fn is_core(&self) -> bool {
        match self {
            Formula::True | Formula::Atom(_) => true,
            Formula::Not(f) | Formula::Next(f) => f.is_core(),
            Formula::And(a, b) | Formula::Until(a, b) => a.is_core() && b.is_core(),
            _ => false,
        }
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !matches!(s, "X" | "U" | "true" | "false")
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::Atom(a) if is_ident(a) => write!(f, "{a}"),
            Formula::Atom(a) => write!(f, "\"{a}\""),
            Formula::Not(x) if **x == Formula::True => write!(f, "false"),
            Formula::Not(x) => write!(f, "!{}", x),
            Formula::Next(x) => write!(f, "X {}", x),
            Formula::Eventually(x) => write!(f, "<>{}", x),
            Formula::Always(x) => write!(f, "[]{}", x),
            Formula::And(a, b) => write!(f, "({a} && {b})"),
            Formula::Or(a, b) => write!(f, "({a} || {b})"),
            Formula::Until(a, b) => write!(f, "({a} U {b})"),
            Formula::Implies(a, b) => write!(f, "({a} -> {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    Not,
    And,
    Or,
    Implies,
    Next,
    Until,
    Eventually,
    Always,
    True,
    False,
    Atom(String),
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::Not => "'!'".into(),
        Tok::And => "'&&'".into(),
        Tok::Or => "'||'".into(),
        Tok::Implies => "'->'".into(),
        Tok::Next => "'X'".into(),
        Tok::Until => "'U'".into(),
        Tok::Eventually => "'<>'".into(),
        Tok::Always => "'[]'".into(),
        Tok::True => "'true'".into(),
        Tok::False => "'false'".into(),
        Tok::Atom(a) => format!("atom '{a}'"),
    }
}

fn syntax(position: usize, message: impl Into<String>) -> Error {
    Error::Syntax { position, message: message.into() }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        let peek = chars.get(i + 1).map(|&(_, c)| c);
        let (tok, width) = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '!' | '¬' => (Tok::Not, 1),
            '∧' => (Tok::And, 1),
            '∨' => (Tok::Or, 1),
            '→' | '⇒' => (Tok::Implies, 1),
            '○' => (Tok::Next, 1),
            '◇' => (Tok::Eventually, 1),
            '□' => (Tok::Always, 1),
            '&' if peek == Some('&') => (Tok::And, 2),
            '|' if peek == Some('|') => (Tok::Or, 2),
            '-' if peek == Some('>') => (Tok::Implies, 2),
            '<' if peek == Some('>') => (Tok::Eventually, 2),
            '[' if peek == Some(']') => (Tok::Always, 2),
            '"' => {
                let mut j = i + 1;
                let mut name = String::new();
                while j < chars.len() && chars[j].1 != '"' {
                    name.push(chars[j].1);
                    j += 1;
                }
                if j == chars.len() {
                    return Err(syntax(pos, "unterminated string"));
                }
                if name.is_empty() {
                    return Err(syntax(pos, "empty quoted atom"));
                }
                out.push((pos, Tok::Atom(name)));
                i = j + 1;
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                let mut word = String::new();
                while j < chars.len() && (chars[j].1.is_ascii_alphanumeric() || chars[j].1 == '_') {
                    word.push(chars[j].1);
                    j += 1;
                }
                let tok = match word.as_str() {
                    "X" => Tok::Next,
                    "U" => Tok::Until,
                    "true" => Tok::True,
                    "false" => Tok::False,
                    _ => Tok::Atom(word),
                };
                out.push((pos, tok));
                i = j;
                continue;
            }
            other => return Err(syntax(pos, format!("unexpected character '{other}'"))),
        };
        out.push((pos, tok));
        i += width;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn implication(&mut self) -> Result<Formula> {
        let lhs = self.disjunction()?;
        if self.eat(&Tok::Implies) {
            Ok(Formula::implies(lhs, self.implication()?))
        } else {
            Ok(lhs)
        }
    }

    fn disjunction(&mut self) -> Result<Formula> {
        let mut f = self.conjunction()?;
        while self.eat(&Tok::Or) {
            f = Formula::or(f, self.conjunction()?);
        }
        Ok(f)
    }

    fn conjunction(&mut self) -> Result<Formula> {
        let mut f = self.until()?;
        while self.eat(&Tok::And) {
            f = Formula::and(f, self.until()?);
        }
        Ok(f)
    }

    fn until(&mut self) -> Result<Formula> {
        let lhs = self.unary()?;
        if self.eat(&Tok::Until) {
            Ok(Formula::until(lhs, self.until()?))
        } else {
            Ok(lhs)
        }
    }

    fn unary(&mut self) -> Result<Formula> {
        let pos = self.pos();
        let Some(tok) = self.peek().cloned() else {
            return Err(syntax(pos, "unexpected end of formula"));
        };
        self.at += 1;
        match tok {
            Tok::Not => Ok(Formula::negate(self.unary()?)),
            Tok::Next => Ok(Formula::next(self.unary()?)),
            Tok::Eventually => Ok(Formula::eventually(self.unary()?)),
            Tok::Always => Ok(Formula::always(self.unary()?)),
            Tok::True => Ok(Formula::True),
            Tok::False => Ok(Formula::falsum()),
            Tok::Atom(a) => Ok(Formula::Atom(a)),
            Tok::LParen => {
                let f = self.implication()?;
                if !self.eat(&Tok::RParen) {
                    return Err(syntax(self.pos(), "expected ')'"));
                }
                Ok(f)
            }
            other => Err(syntax(pos, format!("unexpected {}", describe(&other)))),
        }
    }
}

/// Parses the ASCII syntax `! && || -> X U <> []` (Unicode operators are
/// accepted too). Prefix operators bind tightest, then `U` (right
/// associative), `&&`, `||` and `->` (right associative).
pub fn parse(text: &str) -> Result<Formula> {
    let toks = lex(text)?;
    let mut p = Parser { toks, at: 0, end: text.len() };
    let f = p.implication()?;
    if let Some(t) = p.peek() {
        return Err(syntax(p.pos(), format!("unexpected {} after formula", describe(t))));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_associativity() {
        let a = Formula::atom("a");
        let b = Formula::atom("b");
        let c = Formula::atom("c");
        assert_eq!(parse("a U b U c").unwrap(), Formula::until(a.clone(), Formula::until(b.clone(), c.clone())));
        assert_eq!(parse("a && b || c").unwrap(), Formula::or(Formula::and(a.clone(), b.clone()), c.clone()));
        assert_eq!(parse("a -> b -> c").unwrap(), Formula::implies(a.clone(), Formula::implies(b.clone(), c.clone())));
        assert_eq!(parse("!a U b").unwrap(), Formula::until(Formula::negate(a.clone()), b.clone()));
        assert_eq!(parse("X a && b").unwrap(), Formula::and(Formula::next(a), b));
    }

    #[test]
    fn service_formula() {
        let f = parse("[]<>(red && <> blue)").unwrap();
        let expect = Formula::always(Formula::eventually(Formula::and(
            Formula::atom("red"),
            Formula::eventually(Formula::atom("blue")),
        )));
        assert_eq!(f, expect);
        assert_eq!(parse("□◇(red ∧ ◇blue)").unwrap(), expect);
    }

    #[test]
    fn constants_and_quotes() {
        assert_eq!(parse("true").unwrap(), Formula::True);
        assert_eq!(parse("false").unwrap(), Formula::falsum());
        assert_eq!(parse("\"Goal 1\"").unwrap(), Formula::atom("Goal 1"));
    }

    #[test]
    fn errors_carry_position() {
        assert_eq!(parse("a && ").unwrap_err(), syntax(5, "unexpected end of formula"));
        assert!(matches!(parse("(a || b"), Err(Error::Syntax { position: 7, .. })));
        assert!(matches!(parse("a b"), Err(Error::Syntax { position: 2, .. })));
        assert!(matches!(parse("a & b"), Err(Error::Syntax { position: 2, .. })));
        assert!(matches!(parse("\"abc"), Err(Error::Syntax { position: 0, .. })));
    }

    #[test]
    fn display_roundtrips() {
        for s in ["[]<>(red && <>blue)", "a U b U c", "!(a -> X b) || false", "\"Goal 1\" && !!a", "X X []a"] {
            let f = parse(s).unwrap();
            assert_eq!(parse(&f.to_string()).unwrap(), f, "{s}");
        }
    }

    #[test]
    fn normalization_is_core() {
        let f = parse("[](a -> <>b) || X c").unwrap();
        assert!(!f.is_core());
        assert!(f.normalize().is_core());
        assert_eq!(f.atoms().len(), 3);
        assert_eq!(f.depth(), 4);
    }
}
