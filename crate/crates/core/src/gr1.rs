//! GR(1) formulas `(GF ψ_1 ∧ … ∧ GF ψ_m) → (GF θ_1 ∧ … ∧ GF θ_n)`.
//!
//! Accepted syntax:
//!
//! ```text
//! formula  := side '->' side | side
//! side     := 'true' | 'GF' bool ('&' 'GF' bool)*
//! bool     := or
//! or       := and ('|' and)*
//! and      := unary ('&' unary)*          -- stops before '& GF'
//! unary    := '!' unary | '(' or ')' | 'true' | 'false' | ident
//! ```
//!
//! A formula without `->` has an empty (true) antecedent.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::game::Game;
use crate::lasso::LassoPath;

/// Set of states, ascending.
pub type StateSet = BTreeSet<usize>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BoolCombo {
    True,
    False,
    Prop(String),
    Not(Box<BoolCombo>),
    And(Box<BoolCombo>, Box<BoolCombo>),
    Or(Box<BoolCombo>, Box<BoolCombo>),
}

impl BoolCombo {
    pub fn prop(name: &str) -> Self {
        BoolCombo::Prop(name.to_string())
    }

    pub fn holds(&self, labels: &BTreeSet<String>) -> bool {
        match self {
            BoolCombo::True => true,
            BoolCombo::False => false,
            BoolCombo::Prop(p) => labels.contains(p),
            BoolCombo::Not(c) => !c.holds(labels),
            BoolCombo::And(a, b) => a.holds(labels) && b.holds(labels),
            BoolCombo::Or(a, b) => a.holds(labels) || b.holds(labels),
        }
    }

    pub fn propositions(&self, out: &mut BTreeSet<String>) {
        match self {
            BoolCombo::True | BoolCombo::False => {}
            BoolCombo::Prop(p) => {
                out.insert(p.clone());
            }
            BoolCombo::Not(c) => c.propositions(out),
            BoolCombo::And(a, b) | BoolCombo::Or(a, b) => {
                a.propositions(out);
                b.propositions(out);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            BoolCombo::Or(..) => 1,
            BoolCombo::And(..) => 2,
            _ => 3,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let wrap = self.precedence() < min;
        if wrap {
            write!(f, "(")?;
        }
        match self {
            BoolCombo::True => write!(f, "true")?,
            BoolCombo::False => write!(f, "false")?,
            BoolCombo::Prop(p) => write!(f, "{p}")?,
            BoolCombo::Not(c) => {
                write!(f, "!")?;
                c.fmt_at(f, 3)?;
            }
            BoolCombo::And(a, b) => {
                a.fmt_at(f, 2)?;
                write!(f, " & ")?;
                b.fmt_at(f, 3)?;
            }
            BoolCombo::Or(a, b) => {
                a.fmt_at(f, 1)?;
                write!(f, " | ")?;
                b.fmt_at(f, 2)?;
            }
        }
        if wrap {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for BoolCombo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Gr1Formula {
    /// ψ_1..ψ_m; empty means the antecedent is true.
    pub antecedents: Vec<BoolCombo>,
    /// θ_1..θ_n; empty means the whole formula is true.
    pub consequents: Vec<BoolCombo>,
}

impl Gr1Formula {
    pub fn new(antecedents: Vec<BoolCombo>, consequents: Vec<BoolCombo>) -> Self {
        Gr1Formula {
            antecedents,
            consequents,
        }
    }

    /// The formula `true`.
    pub fn top() -> Self {
        Gr1Formula::new(vec![], vec![])
    }

    pub fn parse(text: &str) -> Result<Self> {
        Parser::new(text)?.formula()
    }

    pub fn is_trivially_true(&self) -> bool {
        self.consequents.is_empty()
    }

    /// Rejects propositions outside the game's alphabet.
    pub fn check_alphabet(&self, game: &Game) -> Result<()> {
        let mut props = BTreeSet::new();
        for c in self.antecedents.iter().chain(&self.consequents) {
            c.propositions(&mut props);
        }
        match props.into_iter().find(|p| !game.arena().alphabet().contains(p)) {
            Some(p) => Err(Error::UnknownProposition(p)),
            None => Ok(()),
        }
    }

    /// `V(ψ_l)` for every antecedent.
    pub fn antecedent_sets(&self, game: &Game) -> Result<Vec<StateSet>> {
        self.antecedents.iter().map(|c| satisfying_states(game, c)).collect()
    }

    /// `V(θ_r)` for every consequent.
    pub fn consequent_sets(&self, game: &Game) -> Result<Vec<StateSet>> {
        self.consequents.iter().map(|c| satisfying_states(game, c)).collect()
    }

    /// Truth on a lasso given only the set of states its cycle visits.
    pub fn holds_on_cycle(&self, game: &Game, cycle: &StateSet) -> bool {
        let visited = |c: &BoolCombo| cycle.iter().any(|&s| c.holds(game.arena().labels(s)));
        !self.antecedents.iter().all(visited) || self.consequents.iter().all(visited)
    }
}

impl fmt::Display for Gr1Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |f: &mut fmt::Formatter<'_>, parts: &[BoolCombo]| -> fmt::Result {
            if parts.is_empty() {
                return write!(f, "true");
            }
            for (i, c) in parts.iter().enumerate() {
                if i > 0 {
                    write!(f, " & ")?;
                }
                write!(f, "GF ")?;
                c.fmt_at(f, 3)?;
            }
            Ok(())
        };
        side(f, &self.antecedents)?;
        write!(f, " -> ")?;
        side(f, &self.consequents)
    }
}

/// `{ s : λ(s) ⊨ c }`.
pub fn satisfying_states(game: &Game, c: &BoolCombo) -> Result<StateSet> {
    let mut props = BTreeSet::new();
    c.propositions(&mut props);
    if let Some(p) = props.into_iter().find(|p| !game.arena().alphabet().contains(p)) {
        return Err(Error::UnknownProposition(p));
    }
    Ok((0..game.num_states())
        .filter(|&s| c.holds(game.arena().labels(s)))
        .collect())
}

/// GF truth depends only on which states the cycle visits: the formula holds
/// iff every `V(θ_r)` meets the cycle or some `V(ψ_l)` misses it.
pub fn eval_on_lasso(formula: &Gr1Formula, game: &Game, path: &LassoPath) -> bool {
    formula.holds_on_cycle(game, &path.cycle_states())
}

/// `⋀ GF ψ_l ∧ ¬⋀ GF θ_r` on a lasso.
pub fn negation_on_lasso(formula: &Gr1Formula, game: &Game, path: &LassoPath) -> bool {
    let cycle = path.cycle_states();
    let visited = |c: &BoolCombo| cycle.iter().any(|&s| c.holds(game.arena().labels(s)));
    formula.antecedents.iter().all(visited) && !formula.consequents.iter().all(visited)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Gf,
    True,
    False,
    Ident(String),
    Not,
    And,
    Or,
    Implies,
    LParen,
    RParen,
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

fn syntax(offset: usize, message: impl Into<String>) -> Error {
    Error::Formula {
        offset,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
                continue;
            }
            '(' => out.push((start, Token::LParen)),
            ')' => out.push((start, Token::RParen)),
            '!' | '~' => out.push((start, Token::Not)),
            '&' => {
                if bytes.get(i + 1) == Some(&b'&') {
                    i += 1;
                }
                out.push((start, Token::And));
            }
            '|' => {
                if bytes.get(i + 1) == Some(&b'|') {
                    i += 1;
                }
                out.push((start, Token::Or));
            }
            '-' => {
                if bytes.get(i + 1) != Some(&b'>') {
                    return Err(syntax(start, "expected `->`"));
                }
                i += 1;
                out.push((start, Token::Implies));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let word = &text[start..i];
                out.push((
                    start,
                    match word {
                        "GF" => Token::Gf,
                        "true" => Token::True,
                        "false" => Token::False,
                        _ => Token::Ident(word.to_string()),
                    },
                ));
                continue;
            }
            other => return Err(syntax(start, format!("unexpected character `{other}`"))),
        }
        i += 1;
    }
    Ok(out)
}

impl Parser {
    fn new(text: &str) -> Result<Self> {
        Ok(Parser {
            tokens: tokenize(text)?,
            pos: 0,
            end: text.len(),
        })
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn peek_at(&self, ahead: usize) -> Option<&Token> {
        self.tokens.get(self.pos + ahead).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn expect(&mut self, token: Token, what: &str) -> Result<()> {
        if self.peek() == Some(&token) {
            self.pos += 1;
            Ok(())
        } else {
            Err(syntax(self.offset(), format!("expected {what}")))
        }
    }

    fn formula(mut self) -> Result<Gr1Formula> {
        let first = self.side()?;
        let formula = if self.peek() == Some(&Token::Implies) {
            self.pos += 1;
            let second = self.side()?;
            Gr1Formula::new(first, second)
        } else {
            Gr1Formula::new(vec![], first)
        };
        if self.pos < self.tokens.len() {
            return Err(syntax(self.offset(), "unexpected trailing input"));
        }
        Ok(formula)
    }

    fn side(&mut self) -> Result<Vec<BoolCombo>> {
        if self.peek() == Some(&Token::True) && matches!(self.peek_at(1), None | Some(Token::Implies)) {
            self.pos += 1;
            return Ok(vec![]);
        }
        let mut parts = Vec::new();
        loop {
            self.expect(Token::Gf, "`GF`")?;
            parts.push(self.or()?);
            if self.peek() == Some(&Token::And) && self.peek_at(1) == Some(&Token::Gf) {
                self.pos += 1;
            } else {
                break;
            }
        }
        Ok(parts)
    }

    fn or(&mut self) -> Result<BoolCombo> {
        let mut left = self.and()?;
        while self.peek() == Some(&Token::Or) {
            self.pos += 1;
            let right = self.and()?;
            left = BoolCombo::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn and(&mut self) -> Result<BoolCombo> {
        let mut left = self.unary()?;
        while self.peek() == Some(&Token::And) && self.peek_at(1) != Some(&Token::Gf) {
            self.pos += 1;
            let right = self.unary()?;
            left = BoolCombo::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<BoolCombo> {
        let offset = self.offset();
        match self.peek().cloned() {
            Some(Token::Not) => {
                self.pos += 1;
                Ok(BoolCombo::Not(Box::new(self.unary()?)))
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let inner = self.or()?;
                self.expect(Token::RParen, "`)`")?;
                Ok(inner)
            }
            Some(Token::True) => {
                self.pos += 1;
                Ok(BoolCombo::True)
            }
            Some(Token::False) => {
                self.pos += 1;
                Ok(BoolCombo::False)
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                Ok(BoolCombo::Prop(name))
            }
            Some(Token::Gf) => Err(syntax(
                offset,
                "nested temporal operator: GR(1) conditions must be propositional",
            )),
            _ => Err(syntax(offset, "expected a proposition")),
        }
    }
}
