use std::collections::{BTreeMap, BTreeSet};

use super::lexer::{tokenize, Pos, Tok};
use super::ParseError;
use crate::calculus::{Definition, DefinitionTable, Process};
use crate::constraint::{Constraint, Rel, Term};

const KEYWORDS: &[&str] = &[
    "tell", "when", "do", "local", "in", "next", "rep", "def", "var", "persistent", "true", "false", "exists",
];

/// A variable declaration `var x [persistent] [= init];`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub persistent: bool,
    pub init: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceProgram {
    pub declarations: Vec<VarDecl>,
    pub definitions: DefinitionTable,
    pub entry: Process,
}

impl SourceProgram {
    pub fn declaration(&self, name: &str) -> Option<&VarDecl> {
        self.declarations.iter().find(|d| d.name == name)
    }

    /// The program's variables. Without any `var` declaration, every free
    /// variable of the program counts as a declared persistent variable.
    pub fn effective_declarations(&self) -> Vec<VarDecl> {
        if !self.declarations.is_empty() {
            return self.declarations.clone();
        }
        let mut vars = self.entry.free_vars();
        for def in self.definitions.iter() {
            vars.extend(def.body.free_vars().into_iter().filter(|v| !def.params.contains(v)));
        }
        vars.into_iter()
            .filter(|v| !v.contains('#') && !v.contains('~'))
            .map(|name| VarDecl { name, persistent: true, init: None })
            .collect()
    }
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    bound: Vec<String>,
    free_uses: Vec<(String, Pos)>,
    call_sites: Vec<(String, usize, Pos)>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(src: &str) -> PResult<Parser> {
        Ok(Parser { toks: tokenize(src)?, at: 0, bound: Vec::new(), free_uses: Vec::new(), call_sites: Vec::new() })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.at + k).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        let Pos { line, col } = self.pos();
        Err(ParseError::Syntax { line, col, message: message.into() })
    }

    fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        self.error(format!("expected {wanted}, found {}", self.peek().describe()))
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            self.unexpected(&tok.describe())
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.unexpected(&format!("`{kw}`"))
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.unexpected("end of input")
        }
    }

    /// An identifier usable as a variable occurrence (may carry a suffix).
    fn name(&mut self, what: &str) -> PResult<String> {
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => self.unexpected(what),
        }
    }

    /// An identifier being introduced (no suffix).
    fn binder(&mut self, what: &str) -> PResult<String> {
        let pos = self.pos();
        let s = self.name(what)?;
        if s.contains('#') || s.contains('~') {
            return Err(ParseError::Syntax {
                line: pos.line,
                col: pos.col,
                message: format!("`{s}` cannot be introduced; `#` and `~` names are reserved"),
            });
        }
        Ok(s)
    }

    fn number(&mut self) -> PResult<i64> {
        match self.peek() {
            Tok::Num(n) => {
                let n = *n;
                self.bump();
                Ok(n)
            }
            _ => self.unexpected("a number"),
        }
    }

    fn positive(&mut self, what: &str) -> PResult<u32> {
        let pos = self.pos();
        let n = self.number()?;
        match u32::try_from(n) {
            Ok(v) if v > 0 => Ok(v),
            _ => Err(ParseError::Syntax {
                line: pos.line,
                col: pos.col,
                message: format!("{what} must be a positive integer, got {n}"),
            }),
        }
    }

    // constraints

    fn constraint(&mut self) -> PResult<Constraint> {
        let mut items = vec![self.primary()?];
        while self.eat(&Tok::Amp) {
            items.push(self.primary()?);
        }
        Ok(Constraint::and_all(items))
    }

    fn rel_follows(&self, k: usize) -> bool {
        matches!(self.peek_at(k), Tok::Eq | Tok::Ne | Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge)
    }

    fn primary(&mut self) -> PResult<Constraint> {
        if (self.is_kw("true") || self.is_kw("false")) && !self.rel_follows(1) {
            let t = self.is_kw("true");
            self.bump();
            return Ok(if t { Constraint::True } else { Constraint::False });
        }
        if self.eat(&Tok::LParen) {
            let c = self.constraint()?;
            self.expect(Tok::RParen)?;
            return Ok(c);
        }
        if self.is_kw("exists") {
            self.bump();
            let x = self.binder("a variable name")?;
            self.expect(Tok::Dot)?;
            self.bound.push(x.clone());
            let body = self.primary();
            self.bound.pop();
            return Ok(Constraint::exists(x, body?));
        }
        let lhs = self.term()?;
        let rel = match self.peek() {
            Tok::Eq => Rel::Eq,
            Tok::Ne => Rel::Ne,
            Tok::Lt => Rel::Lt,
            Tok::Le => Rel::Le,
            Tok::Gt => Rel::Gt,
            Tok::Ge => Rel::Ge,
            _ => return self.unexpected("a relation (=, !=, <, <=, >, >=)"),
        };
        self.bump();
        let rhs = self.term()?;
        Ok(Constraint::atom(lhs, rel, rhs).canonical())
    }

    fn value(&mut self) -> PResult<Option<i64>> {
        if self.is_kw("true") || self.is_kw("false") {
            let t = self.is_kw("true");
            self.bump();
            return Ok(Some(t as i64));
        }
        if *self.peek() == Tok::Minus && matches!(self.peek_at(1), Tok::Num(_)) {
            self.bump();
            return Ok(Some(-self.number()?));
        }
        match self.peek() {
            Tok::Num(_) => Ok(Some(self.number()?)),
            _ => Ok(None),
        }
    }

    fn term(&mut self) -> PResult<Term> {
        if let Some(v) = self.value()? {
            return Ok(Term::Const(v));
        }
        let pos = self.pos();
        let x = self.name("a term")?;
        if !self.bound.contains(&x) {
            self.free_uses.push((x.clone(), pos));
        }
        let sign = match self.peek() {
            Tok::Plus => 1,
            Tok::Minus => -1,
            _ => return Ok(Term::var(x)),
        };
        self.bump();
        Ok(Term::offset(x, sign * self.number()?))
    }

    // processes

    fn process(&mut self) -> PResult<Process> {
        let mut items = vec![self.prefix()?];
        while self.eat(&Tok::Bars) {
            items.push(self.prefix()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap_or(Process::Null) } else { Process::par(items) })
    }

    fn prefix(&mut self) -> PResult<Process> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(0) => {
                self.bump();
                Ok(Process::Null)
            }
            Tok::LParen => {
                self.bump();
                let p = self.process()?;
                self.expect(Tok::RParen)?;
                Ok(p)
            }
            Tok::Ident(kw) => match kw.as_str() {
                "tell" => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let c = self.constraint()?;
                    self.expect(Tok::RParen)?;
                    Ok(Process::tell(c))
                }
                "when" => {
                    self.bump();
                    let guard = self.constraint()?;
                    self.expect_kw("do")?;
                    Ok(Process::ask(guard, self.prefix()?))
                }
                "local" => {
                    self.bump();
                    let mut vars = vec![self.binder("a variable name")?];
                    let mut init = Constraint::True;
                    while self.eat(&Tok::Comma) {
                        let another = matches!(self.peek(), Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()))
                            && (matches!(self.peek_at(1), Tok::Comma) || matches!(self.peek_at(1), Tok::Ident(s) if s == "in"));
                        if another {
                            vars.push(self.binder("a variable name")?);
                        } else {
                            let depth = self.bound.len();
                            self.bound.extend(vars.iter().cloned());
                            init = self.constraint()?;
                            self.bound.truncate(depth);
                            break;
                        }
                    }
                    self.expect_kw("in")?;
                    let depth = self.bound.len();
                    self.bound.extend(vars.iter().cloned());
                    let body = self.prefix();
                    self.bound.truncate(depth);
                    Ok(Process::local(vars, init, body?))
                }
                "next" => {
                    self.bump();
                    let k = if self.eat(&Tok::Caret) { self.positive("a delay")? } else { 1 };
                    Ok(Process::next(k, self.prefix()?))
                }
                "rep" => {
                    self.bump();
                    self.expect(Tok::LBracket)?;
                    let t = self.positive("a period")?;
                    self.expect(Tok::RBracket)?;
                    Ok(Process::rep(t, self.prefix()?))
                }
                _ if KEYWORDS.contains(&kw.as_str()) => self.unexpected("a process"),
                _ => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let mut args = Vec::new();
                    if !self.eat(&Tok::RParen) {
                        loop {
                            match self.value()? {
                                Some(v) => args.push(v),
                                None => return self.unexpected("a numeric argument"),
                            }
                            if self.eat(&Tok::RParen) {
                                break;
                            }
                            self.expect(Tok::Comma)?;
                        }
                    }
                    self.call_sites.push((kw.clone(), args.len(), pos));
                    Ok(Process::call(kw, args))
                }
            },
            _ => self.unexpected("a process"),
        }
    }

    fn program(&mut self) -> PResult<SourceProgram> {
        let mut declarations: Vec<VarDecl> = Vec::new();
        let mut definitions = DefinitionTable::new();
        let mut def_pos: BTreeMap<String, Pos> = BTreeMap::new();
        loop {
            let pos = self.pos();
            if self.is_kw("var") {
                self.bump();
                let name = self.binder("a variable name")?;
                let persistent = if self.is_kw("persistent") {
                    self.bump();
                    true
                } else {
                    false
                };
                let init = if self.eat(&Tok::Eq) {
                    if !persistent {
                        return self.error("only persistent variables take an initial value");
                    }
                    match self.value()? {
                        Some(v) => Some(v),
                        None => return self.unexpected("an initial value"),
                    }
                } else {
                    None
                };
                self.expect(Tok::Semi)?;
                if declarations.iter().any(|d| d.name == name) {
                    return Err(ParseError::Duplicate { line: pos.line, col: pos.col, name });
                }
                declarations.push(VarDecl { name, persistent, init });
            } else if self.is_kw("def") {
                self.bump();
                let name = self.binder("a procedure name")?;
                self.expect(Tok::LParen)?;
                let mut params = Vec::new();
                if !self.eat(&Tok::RParen) {
                    loop {
                        params.push(self.binder("a parameter name")?);
                        if self.eat(&Tok::RParen) {
                            break;
                        }
                        self.expect(Tok::Comma)?;
                    }
                }
                self.expect(Tok::Eq)?;
                self.bound = params.clone();
                let body = self.process()?;
                self.bound.clear();
                self.expect(Tok::Semi)?;
                if def_pos.contains_key(&name) {
                    return Err(ParseError::Duplicate { line: pos.line, col: pos.col, name });
                }
                def_pos.insert(name.clone(), pos);
                definitions.insert(Definition { name, params, body });
            } else {
                break;
            }
        }
        let entry = self.process()?;
        self.eat(&Tok::Semi);
        self.expect_eof()?;

        let plain: BTreeSet<&str> = declarations.iter().map(|d| d.name.as_str()).collect();
        let persistent: BTreeSet<&str> =
            declarations.iter().filter(|d| d.persistent).map(|d| d.name.as_str()).collect();
        for (name, pos) in &self.free_uses {
            if declarations.is_empty() {
                break;
            }
            let known = plain.contains(name.as_str())
                || name.split_once('#').is_some_and(|(base, _)| persistent.contains(base));
            if !known {
                return Err(ParseError::UnknownIdentifier { line: pos.line, col: pos.col, name: name.clone() });
            }
        }
        for (name, arity, pos) in &self.call_sites {
            match definitions.get(name) {
                None => {
                    return Err(ParseError::UnknownIdentifier { line: pos.line, col: pos.col, name: name.clone() })
                }
                Some(d) if d.params.len() != *arity => {
                    return Err(ParseError::ArityMismatch {
                        line: pos.line,
                        col: pos.col,
                        name: name.clone(),
                        expected: d.params.len(),
                        found: *arity,
                    })
                }
                Some(_) => {}
            }
        }
        if let Some(cycle) = definitions.unguarded_cycle() {
            return Err(ParseError::UnguardedRecursion { cycle });
        }
        Ok(SourceProgram { declarations, definitions, entry })
    }
}

/// Parses a constraint in canonical form. Variables are not checked.
pub fn parse_constraint(src: &str) -> Result<Constraint, ParseError> {
    let mut p = Parser::new(src)?;
    let c = p.constraint()?;
    p.expect_eof()?;
    Ok(c)
}

/// Parses a lone process term. Variables and calls are not resolved.
pub fn parse_process(src: &str) -> Result<Process, ParseError> {
    let mut p = Parser::new(src)?;
    let proc = p.process()?;
    p.expect_eof()?;
    Ok(proc)
}

/// Parses and checks a whole program: every variable must be declared or
/// bound (unless the program declares none, see
/// [`SourceProgram::effective_declarations`]), every call must name a
/// definition with matching arity, and no definition may recurse without
/// passing a `next`.
pub fn parse_program(src: &str) -> Result<SourceProgram, ParseError> {
    Parser::new(src)?.program()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constraint_syntax() {
        assert_eq!(parse_constraint("x = y + 1").unwrap().to_string(), "x = y + 1");
        assert_eq!(parse_constraint("b & true").unwrap_err().position().map(|p| p.col), Some(3));
        assert_eq!(parse_constraint("flag = true").unwrap(), Constraint::eq_const("flag", 1));
        assert_eq!(parse_constraint("true & (false)").unwrap(), Constraint::False);
        assert_eq!(parse_constraint("x = -1").unwrap(), Constraint::False);
        assert_eq!(parse_constraint("x <= y - 2").unwrap().to_string(), "x <= y - 2");
    }

    #[test]
    fn process_syntax() {
        let p = parse_process("rep[50] next^7 when m31 > 0 do next^30 tell(q1 = m31)").unwrap();
        let expected = Process::rep(
            50,
            Process::next(
                7,
                Process::ask(
                    parse_constraint("m31 > 0").unwrap(),
                    Process::next(30, Process::tell(parse_constraint("q1 = m31").unwrap())),
                ),
            ),
        );
        assert_eq!(p, expected);
        let q = parse_process("local a, b, a = b in tell(a = 1) || 0").unwrap();
        let Process::Par(items) = q else { panic!("expected a composition") };
        assert!(matches!(&items[0], Process::Local { vars, .. } if vars == &["a", "b"]));
        assert_eq!(items[1], Process::Null);
    }

    #[test]
    fn program_checks() {
        let ok = parse_program("var x; var w persistent = 0; def A(n) = tell(x = n) || next A(1); A(0)");
        assert!(ok.is_ok(), "{ok:?}");

        let implicit = parse_program("def A(n) = tell(x = n); A(1) || tell(y = 2)").unwrap();
        let names: Vec<String> = implicit.effective_declarations().into_iter().map(|d| d.name).collect();
        assert_eq!(names, vec!["x", "y"]);

        let e = parse_program("var x;\ntell(y = 1)").unwrap_err();
        assert_eq!(e, ParseError::UnknownIdentifier { line: 2, col: 6, name: "y".into() });

        let e = parse_program("def A(n) = 0; A(1, 2)").unwrap_err();
        assert!(matches!(e, ParseError::ArityMismatch { expected: 1, found: 2, .. }));

        let e = parse_program("def A() = when true do A(); A()").unwrap_err();
        assert_eq!(e, ParseError::UnguardedRecursion { cycle: vec!["A".into(), "A".into()] });

        let e = parse_program("var x;\nwhen x = 1 tell(x = 2)").unwrap_err();
        assert!(matches!(e, ParseError::Syntax { line: 2, col: 12, .. }), "{e:?}");

        assert!(matches!(parse_program("var x; var x; 0"), Err(ParseError::Duplicate { .. })));
        assert!(matches!(parse_program("rep[0] 0"), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn binders_cover_their_scope() {
        assert!(parse_program("var x; local t in tell(t = x)").is_ok());
        assert!(parse_program("var x; tell(exists t. (t = x))").is_ok());
        assert!(parse_program("var x; local t in 0 || tell(t = x)").is_err());
    }
}
