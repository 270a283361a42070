//! Parser for the textual set/relation notation used by tests, fixtures and
//! the `--dump-sets` flag: `{ [pA, i, pB] | 0 <= pA < A.len and ... }`.
//! Printing lives on the `Display` impls of the set types.

use crate::error::SpfError;

use super::expr::{AffineExpr, Constraint, UfApp, UfSymbol, VarId, VarKind};
use super::set::{Conjunct, PresburgerRelation, PresburgerSet};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Name(String),
    Int(i64),
    Punct(&'static str),
}

pub struct Lexer {
    pub toks: Vec<Tok>,
    pub pos: usize,
}

impl Lexer {
    pub fn new(src: &str) -> Result<Self, SpfError> {
        let mut toks = Vec::new();
        let bytes: Vec<char> = src.chars().collect();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i];
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c == '#' {
                while i < bytes.len() && bytes[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            if c.is_ascii_digit() {
                let mut n = 0i64;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    n = n * 10 + (bytes[i] as i64 - '0' as i64);
                    i += 1;
                }
                toks.push(Tok::Int(n));
                continue;
            }
            if c.is_alphabetic() || c == '_' {
                let mut s = String::new();
                while i < bytes.len()
                    && (bytes[i].is_alphanumeric() || bytes[i] == '_' || bytes[i] == '.')
                {
                    s.push(bytes[i]);
                    i += 1;
                }
                // Primed instance names.
                while i < bytes.len() && bytes[i] == '\'' {
                    s.push('\'');
                    i += 1;
                }
                toks.push(Tok::Name(s));
                continue;
            }
            let two: String = bytes[i..bytes.len().min(i + 2)].iter().collect();
            let punct2 = ["<=", ">=", "->", "!=", "=="];
            if let Some(p) = punct2.iter().find(|p| two.starts_with(**p)) {
                toks.push(Tok::Punct(p));
                i += 2;
                continue;
            }
            let punct1 = [
                "{", "}", "[", "]", "(", ")", ",", "|", "<", ">", "=", "+", "-", "*", "/", ":",
                ";",
            ];
            if let Some(p) = punct1.iter().find(|p| p.chars().next() == Some(c)) {
                toks.push(Tok::Punct(p));
                i += 1;
                continue;
            }
            return Err(SpfError::Parse(format!("unexpected character '{}'", c)));
        }
        Ok(Lexer { toks, pos: 0 })
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    pub fn next_tok(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn eat_punct(&mut self, p: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Punct(q)) if *q == p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect_punct(&mut self, p: &str) -> Result<(), SpfError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(SpfError::Parse(format!("expected '{}', found {:?}", p, self.peek())))
        }
    }

    pub fn eat_keyword(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Name(n)) if n == kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect_name(&mut self) -> Result<String, SpfError> {
        match self.next_tok() {
            Some(Tok::Name(n)) => Ok(n),
            other => Err(SpfError::Parse(format!("expected a name, found {:?}", other))),
        }
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }
}

/// Resolves names the parser encounters to variables. Applied names become
/// function symbols automatically.
pub struct NameEnv<'a> {
    /// Tuple variables in scope (including locals).
    pub vars: Vec<VarId>,
    /// Kind for names not found in `vars`.
    pub fallback: &'a dyn Fn(&str) -> VarKind,
}

impl<'a> NameEnv<'a> {
    fn resolve(&self, name: &str) -> VarId {
        self.vars
            .iter()
            .find(|v| v.name == name)
            .cloned()
            .unwrap_or_else(|| VarId::new(name, (self.fallback)(name)))
    }
}

pub fn parse_expr(lex: &mut Lexer, env: &NameEnv) -> Result<AffineExpr, SpfError> {
    let mut acc = parse_term(lex, env)?;
    loop {
        if lex.eat_punct("+") {
            let t = parse_term(lex, env)?;
            acc = acc.add(&t);
        } else if lex.eat_punct("-") {
            let t = parse_term(lex, env)?;
            acc = acc.sub(&t);
        } else {
            break;
        }
    }
    Ok(acc)
}

fn parse_term(lex: &mut Lexer, env: &NameEnv) -> Result<AffineExpr, SpfError> {
    if lex.eat_punct("-") {
        return Ok(parse_term(lex, env)?.scale(-1));
    }
    match lex.peek().cloned() {
        Some(Tok::Int(n)) => {
            lex.next_tok();
            if lex.eat_punct("*") {
                let f = parse_factor(lex, env)?;
                Ok(f.scale(n))
            } else {
                Ok(AffineExpr::constant(n))
            }
        }
        _ => {
            let f = parse_factor(lex, env)?;
            if lex.eat_punct("*") {
                match lex.next_tok() {
                    Some(Tok::Int(n)) => Ok(f.scale(n)),
                    other => Err(SpfError::Parse(format!(
                        "only integer coefficients are allowed, found {:?}",
                        other
                    ))),
                }
            } else {
                Ok(f)
            }
        }
    }
}

fn parse_factor(lex: &mut Lexer, env: &NameEnv) -> Result<AffineExpr, SpfError> {
    if lex.eat_punct("(") {
        let e = parse_expr(lex, env)?;
        lex.expect_punct(")")?;
        return Ok(e);
    }
    let name = lex.expect_name()?;
    if lex.eat_punct("(") {
        let mut args = Vec::new();
        if !lex.eat_punct(")") {
            loop {
                args.push(parse_expr(lex, env)?);
                if lex.eat_punct(")") {
                    break;
                }
                lex.expect_punct(",")?;
            }
        }
        let sym = UfSymbol::new(name, args.len());
        return Ok(AffineExpr::uf(UfApp::new(sym, args)));
    }
    Ok(AffineExpr::var(env.resolve(&name)))
}

/// A chained comparison `a <= b < c` becomes one constraint per link.
pub fn parse_constraint_chain(
    lex: &mut Lexer,
    env: &NameEnv,
) -> Result<Vec<Constraint>, SpfError> {
    let mut out = Vec::new();
    let mut lhs = parse_expr(lex, env)?;
    loop {
        let op = match lex.peek() {
            Some(Tok::Punct(p))
                if ["<", "<=", "=", "==", ">", ">=", "!="].contains(p) =>
            {
                *p
            }
            _ => break,
        };
        lex.next_tok();
        let rhs = parse_expr(lex, env)?;
        match op {
            "<" => out.push(Constraint::lt_pair(lhs.clone(), rhs.clone())),
            "<=" => out.push(Constraint::le_pair(lhs.clone(), rhs.clone())),
            "=" | "==" => out.push(Constraint::eq_pair(lhs.clone(), rhs.clone())),
            ">" => out.push(Constraint::lt_pair(rhs.clone(), lhs.clone())),
            ">=" => out.push(Constraint::ge_pair(lhs.clone(), rhs.clone())),
            "!=" => {
                return Err(SpfError::Parse(
                    "disequality is not part of the set notation".into(),
                ))
            }
            _ => unreachable!(),
        }
        lhs = rhs;
    }
    if out.is_empty() {
        return Err(SpfError::Parse("expected a comparison".into()));
    }
    Ok(out)
}

fn parse_tuple(lex: &mut Lexer, kind: VarKind) -> Result<Vec<VarId>, SpfError> {
    lex.expect_punct("[")?;
    let mut vars = Vec::new();
    if lex.eat_punct("]") {
        return Ok(vars);
    }
    loop {
        let name = lex.expect_name()?;
        vars.push(VarId::new(name, kind));
        if lex.eat_punct("]") {
            break;
        }
        lex.expect_punct(",")?;
    }
    Ok(vars)
}

fn parse_conjunct(lex: &mut Lexer, env: &mut NameEnv) -> Result<Conjunct, SpfError> {
    let mut locals = Vec::new();
    if lex.eat_keyword("exists") {
        loop {
            let name = lex.expect_name()?;
            let v = VarId::quantified(name);
            locals.push(v.clone());
            env.vars.push(v);
            if lex.eat_punct(":") {
                break;
            }
            lex.expect_punct(",")?;
        }
    }
    let mut constraints = Vec::new();
    if lex.eat_keyword("true") {
        return Ok(Conjunct { constraints, locals });
    }
    loop {
        constraints.extend(parse_constraint_chain(lex, env)?);
        if !lex.eat_keyword("and") {
            break;
        }
    }
    for l in &locals {
        env.vars.retain(|v| v != l);
    }
    Ok(Conjunct { constraints, locals })
}

struct ParsedBody {
    input: Vec<VarId>,
    output: Option<Vec<VarId>>,
    disjuncts: Vec<Conjunct>,
}

fn parse_body(
    src: &str,
    in_kind: VarKind,
    out_kind: VarKind,
    fallback: &dyn Fn(&str) -> VarKind,
) -> Result<ParsedBody, SpfError> {
    let mut lex = Lexer::new(src)?;
    lex.expect_punct("{")?;
    let input = parse_tuple(&mut lex, in_kind)?;
    let output = if lex.eat_punct("->") { Some(parse_tuple(&mut lex, out_kind)?) } else { None };
    let mut vars = input.clone();
    if let Some(o) = &output {
        vars.extend(o.iter().cloned());
    }
    let mut env = NameEnv { vars, fallback };
    let mut disjuncts = Vec::new();
    if lex.eat_punct("|") {
        if lex.eat_keyword("false") {
            // empty set
        } else {
            loop {
                disjuncts.push(parse_conjunct(&mut lex, &mut env)?);
                if !lex.eat_keyword("or") {
                    break;
                }
            }
        }
    } else {
        disjuncts.push(Conjunct::default());
    }
    lex.expect_punct("}")?;
    if !lex.at_end() {
        return Err(SpfError::Parse("trailing input after set".into()));
    }
    Ok(ParsedBody { input, output, disjuncts })
}

/// Parse a set. Tuple variables default to computation kind; free names to
/// parameters; names used with argument lists become function symbols.
pub fn parse_set(src: &str) -> Result<PresburgerSet, SpfError> {
    parse_set_with(src, &|_| VarKind::Parameter, VarKind::Computation)
}

pub fn parse_set_with(
    src: &str,
    fallback: &dyn Fn(&str) -> VarKind,
    tuple_kind: VarKind,
) -> Result<PresburgerSet, SpfError> {
    let body = parse_body(src, tuple_kind, tuple_kind, fallback)?;
    if body.output.is_some() {
        return Err(SpfError::Parse("found a relation where a set was expected".into()));
    }
    Ok(PresburgerSet { tuple: body.input, disjuncts: body.disjuncts })
}

/// Parse a relation `{ [p] -> [g] | ... }`. Input variables default to layout
/// kind, outputs to computation kind.
pub fn parse_relation(src: &str) -> Result<PresburgerRelation, SpfError> {
    parse_relation_with(src, &|_| VarKind::Parameter)
}

pub fn parse_relation_with(
    src: &str,
    fallback: &dyn Fn(&str) -> VarKind,
) -> Result<PresburgerRelation, SpfError> {
    let body = parse_body(src, VarKind::Layout, VarKind::Computation, fallback)?;
    let output = body
        .output
        .ok_or_else(|| SpfError::Parse("found a set where a relation was expected".into()))?;
    Ok(PresburgerRelation { input: body.input, output, disjuncts: body.disjuncts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presburger::enumerate::{enumerate, Box_, UfTables};

    #[test]
    fn parse_and_enumerate_interval() {
        let s = parse_set("{ [i] | 0 <= i < 3 }").unwrap();
        let b = Box_::new().with("i", -2, 10);
        assert_eq!(
            enumerate(&s, &b, &UfTables::new()).unwrap(),
            vec![vec![0], vec![1], vec![2]]
        );
    }

    #[test]
    fn parse_relation_with_uf() {
        let r = parse_relation(
            "{ [p_i, p_j] -> [g_i, g_j] | 0 <= p_i < numRows and rowPtr(p_i) <= p_j < rowPtr(p_i + 1) and g_i = p_i and g_j = colIdx(p_j) }",
        )
        .unwrap();
        assert_eq!(r.input.len(), 2);
        assert_eq!(r.output.len(), 2);
        assert_eq!(r.disjuncts[0].constraints.len(), 6);
    }

    #[test]
    fn print_parse_round_trip() {
        let src = "{ [i, j] | 0 <= i and i < N and j = f(i + 1) }";
        let s = parse_set(src).unwrap();
        let printed = s.to_string();
        let again = parse_set(&printed).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn chained_comparison_expands() {
        let s = parse_set("{ [i] | 0 <= 8*i < N }").unwrap();
        assert_eq!(s.disjuncts[0].constraints.len(), 2);
    }
}
