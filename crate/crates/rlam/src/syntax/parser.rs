//! Concrete syntax.
//!
//! One lexer serves four little grammars: terms, simple types, formulas,
//! and refinement types. Source files may precede the term with `@`
//! pragmas declaring context variables and judgment formulas.
//!
//! Infix `+ - * < <= = > >=` resolve to the registry primitives
//! `add sub mul lt le eq` (with `>` and `>=` swapping their operands).
//! `f(a, b)` is application of `f` to the two arguments `a` and `b`;
//! apply a function to a literal pair by writing `f((a, b))`.

use super::ast::{Binder, IfAnnotation, ProjIndex, SimpleType, Term};
use super::vars::freshen;
use crate::continuity::{FExpr, Formula, RefType};
use crate::semantics::PrimRegistry;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Pow, Zero};

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
#[error("parse error at {line}:{col}: {msg}")]
pub struct ParseError {
    pub msg: String,
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(BigRational),
    Lambda,
    Dot,
    Comma,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Colon,
    Plus,
    Minus,
    Star,
    Lt,
    Le,
    Gt,
    Ge,
    Equals,
    Arrow,
    AndOp,
    OrOp,
    Tilde,
    ImpliesOp,
    KwIf,
    KwThen,
    KwElse,
    KwFst,
    KwSnd,
    KwIn,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{}`", s),
            Tok::Num(_) => "number".into(),
            Tok::Lambda => "`\\`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Comma => "`,`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::Equals => "`=`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::AndOp => "`/\\`".into(),
            Tok::OrOp => "`\\/`".into(),
            Tok::Tilde => "`~`".into(),
            Tok::ImpliesOp => "`=>`".into(),
            Tok::KwIf => "`if`".into(),
            Tok::KwThen => "`then`".into(),
            Tok::KwElse => "`else`".into(),
            Tok::KwFst => "`fst`".into(),
            Tok::KwSnd => "`snd`".into(),
            Tok::KwIn => "`in`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

type Spanned = (Tok, usize, usize);

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut lx = Lexer { src: src.as_bytes(), pos: 0, line: 1, col: 1 };
    let mut out = Vec::new();
    loop {
        let (tok, line, col) = lx.next_token()?;
        let done = tok == Tok::Eof;
        out.push((tok, line, col));
        if done {
            return Ok(out);
        }
    }
}

impl<'a> Lexer<'a> {
    fn bump(&mut self) -> u8 {
        let c = self.src[self.pos];
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.pos + 1).copied()
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { msg: msg.into(), line: self.line, col: self.col })
    }

    fn next_token(&mut self) -> Result<Spanned, ParseError> {
        loop {
            match self.peek() {
                Some(c) if (c as char).is_whitespace() => {
                    self.bump();
                }
                Some(b'-') if self.peek2() == Some(b'-') => {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
        let (line, col) = (self.line, self.col);
        let spanned = |t| Ok((t, line, col));
        let Some(c) = self.peek() else {
            return spanned(Tok::Eof);
        };
        match c {
            b'0'..=b'9' => {
                let num = self.lex_number()?;
                spanned(Tok::Num(num))
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let mut s = String::new();
                while let Some(c) = self.peek() {
                    if (c as char).is_ascii_alphanumeric() || c == b'_' || c == b'\'' {
                        s.push(self.bump() as char);
                    } else {
                        break;
                    }
                }
                spanned(match s.as_str() {
                    "if" => Tok::KwIf,
                    "then" => Tok::KwThen,
                    "else" => Tok::KwElse,
                    "fst" => Tok::KwFst,
                    "snd" => Tok::KwSnd,
                    "in" => Tok::KwIn,
                    _ => Tok::Ident(s),
                })
            }
            b'\\' => {
                self.bump();
                if self.peek() == Some(b'/') {
                    self.bump();
                    spanned(Tok::OrOp)
                } else {
                    spanned(Tok::Lambda)
                }
            }
            b'/' => {
                self.bump();
                if self.peek() == Some(b'\\') {
                    self.bump();
                    spanned(Tok::AndOp)
                } else {
                    self.err("stray `/` (rationals are written like 3/4 with no spaces)")
                }
            }
            b'.' => {
                self.bump();
                spanned(Tok::Dot)
            }
            b',' => {
                self.bump();
                spanned(Tok::Comma)
            }
            b'(' => {
                self.bump();
                spanned(Tok::LParen)
            }
            b')' => {
                self.bump();
                spanned(Tok::RParen)
            }
            b'{' => {
                self.bump();
                spanned(Tok::LBrace)
            }
            b'}' => {
                self.bump();
                spanned(Tok::RBrace)
            }
            b':' => {
                self.bump();
                spanned(Tok::Colon)
            }
            b'+' => {
                self.bump();
                spanned(Tok::Plus)
            }
            b'-' => {
                self.bump();
                if self.peek() == Some(b'>') {
                    self.bump();
                    spanned(Tok::Arrow)
                } else {
                    spanned(Tok::Minus)
                }
            }
            b'*' => {
                self.bump();
                spanned(Tok::Star)
            }
            b'<' => {
                self.bump();
                if self.peek() == Some(b'=') {
                    self.bump();
                    spanned(Tok::Le)
                } else {
                    spanned(Tok::Lt)
                }
            }
            b'>' => {
                self.bump();
                if self.peek() == Some(b'=') {
                    self.bump();
                    spanned(Tok::Ge)
                } else {
                    spanned(Tok::Gt)
                }
            }
            b'=' => {
                self.bump();
                if self.peek() == Some(b'>') {
                    self.bump();
                    spanned(Tok::ImpliesOp)
                } else {
                    spanned(Tok::Equals)
                }
            }
            b'~' => {
                self.bump();
                spanned(Tok::Tilde)
            }
            other => self.err(format!("unexpected character `{}`", other as char)),
        }
    }

    /// digits [ "." digits ] | digits "/" digits
    fn lex_number(&mut self) -> Result<BigRational, ParseError> {
        let mut int_part = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                int_part.push(self.bump() as char);
            } else {
                break;
            }
        }
        match self.peek() {
            Some(b'.') if self.peek2().map_or(false, |c| c.is_ascii_digit()) => {
                self.bump();
                let mut frac = String::new();
                while let Some(c) = self.peek() {
                    if c.is_ascii_digit() {
                        frac.push(self.bump() as char);
                    } else {
                        break;
                    }
                }
                let numer: BigInt = format!("{}{}", int_part, frac).parse().unwrap();
                let denom = BigInt::from(10u32).pow(frac.len() as u32);
                Ok(BigRational::new(numer, denom))
            }
            Some(b'/') if self.peek2().map_or(false, |c| c.is_ascii_digit()) => {
                self.bump();
                let mut den = String::new();
                while let Some(c) = self.peek() {
                    if c.is_ascii_digit() {
                        den.push(self.bump() as char);
                    } else {
                        break;
                    }
                }
                let numer: BigInt = int_part.parse().unwrap();
                let denom: BigInt = den.parse().unwrap();
                if denom.is_zero() {
                    return self.err("rational literal with zero denominator");
                }
                Ok(BigRational::new(numer, denom))
            }
            _ => {
                let numer: BigInt = int_part.parse().unwrap();
                Ok(BigRational::from_integer(numer))
            }
        }
    }
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    reg: &'a PrimRegistry,
}

impl<'a> Parser<'a> {
    fn new(src: &str, reg: &'a PrimRegistry) -> Result<Parser<'a>, ParseError> {
        Ok(Parser { toks: lex(src)?, pos: 0, reg })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> (usize, usize) {
        let (_, l, c) = self.toks[self.pos];
        (l, c)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError { msg: msg.into(), line, col })
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.next();
            Ok(())
        } else {
            self.err(format!("expected {}, found {}", t.describe(), self.peek().describe()))
        }
    }

    fn expect_ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            other => self.err(format!("expected an identifier, found {}", other.describe())),
        }
    }

    fn at_eof(&self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.err(format!("unexpected {} after complete input", self.peek().describe()))
        }
    }

    // ---- terms ----

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek() {
            Tok::Lambda => self.lambda(),
            Tok::KwIf => self.conditional(),
            _ => self.comparison(),
        }
    }

    fn lambda(&mut self) -> Result<Term, ParseError> {
        self.expect(Tok::Lambda)?;
        let mut binders = Vec::new();
        loop {
            let name = self.expect_ident()?;
            if self.reg.contains(&name) {
                return self.err(format!("`{}` is a primitive and cannot be a parameter", name));
            }
            let ty = if *self.peek() == Tok::Colon {
                self.next();
                Some(self.simple_type()?)
            } else {
                None
            };
            binders.push(Binder { name, ty });
            match self.peek() {
                Tok::Comma => {
                    self.next();
                }
                Tok::Dot => {
                    self.next();
                    break;
                }
                other => {
                    let d = other.describe();
                    return self.err(format!("expected `,` or `.` in parameter list, found {}", d));
                }
            }
        }
        let body = self.term()?;
        Ok(Term::Lam(binders, Box::new(body)))
    }

    fn conditional(&mut self) -> Result<Term, ParseError> {
        self.expect(Tok::KwIf)?;
        let guard = self.term()?;
        let ann = if *self.peek() == Tok::LBrace {
            Some(self.if_annotation()?)
        } else {
            None
        };
        self.expect(Tok::KwThen)?;
        let then_branch = self.term()?;
        self.expect(Tok::KwElse)?;
        let else_branch = self.term()?;
        Ok(Term::If {
            guard: Box::new(guard),
            then_branch: Box::new(then_branch),
            else_branch: Box::new(else_branch),
            ann,
        })
    }

    fn if_annotation(&mut self) -> Result<IfAnnotation, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut ann = IfAnnotation::default();
        loop {
            let key = match self.next() {
                Tok::Ident(s) => s,
                Tok::KwThen => "then".to_string(),
                Tok::KwElse => "else".to_string(),
                other => {
                    return self.err(format!(
                        "expected an annotation key (guard/zero/one/then/else), found {}",
                        other.describe()
                    ))
                }
            };
            self.expect(Tok::Colon)?;
            let f = self.formula()?;
            let slot = match key.as_str() {
                "guard" => &mut ann.guard,
                "zero" => &mut ann.zero,
                "one" => &mut ann.one,
                "then" => &mut ann.then_dom,
                "else" => &mut ann.else_dom,
                other => return self.err(format!("unknown annotation key `{}`", other)),
            };
            if slot.is_some() {
                return self.err(format!("duplicate annotation key `{}`", key));
            }
            *slot = Some(f);
            match self.next() {
                Tok::Comma => {}
                Tok::RBrace => break,
                other => {
                    let d = other.describe();
                    return self.err(format!("expected `,` or `}}` in annotation, found {}", d));
                }
            }
        }
        Ok(ann)
    }

    fn infix_prim(&self, name: &str) -> Result<String, ParseError> {
        if self.reg.contains(name) {
            Ok(name.to_string())
        } else {
            self.err(format!("infix operator needs primitive `{}`, which is not registered", name))
        }
    }

    fn comparison(&mut self) -> Result<Term, ParseError> {
        let lhs = self.additive()?;
        let (prim, swap) = match self.peek() {
            Tok::Lt => ("lt", false),
            Tok::Le => ("le", false),
            Tok::Gt => ("lt", true),
            Tok::Ge => ("le", true),
            Tok::Equals => ("eq", false),
            _ => return Ok(lhs),
        };
        self.next();
        let rhs = self.additive()?;
        let prim = self.infix_prim(prim)?;
        let args = if swap { vec![rhs, lhs] } else { vec![lhs, rhs] };
        Ok(Term::PrimApp(prim, args))
    }

    fn additive(&mut self) -> Result<Term, ParseError> {
        let mut acc = self.multiplicative()?;
        loop {
            let prim = match self.peek() {
                Tok::Plus => "add",
                Tok::Minus => "sub",
                _ => return Ok(acc),
            };
            self.next();
            let rhs = self.multiplicative()?;
            acc = Term::PrimApp(self.infix_prim(prim)?, vec![acc, rhs]);
        }
    }

    fn multiplicative(&mut self) -> Result<Term, ParseError> {
        let mut acc = self.unary()?;
        while *self.peek() == Tok::Star {
            self.next();
            let rhs = self.unary()?;
            acc = Term::PrimApp(self.infix_prim("mul")?, vec![acc, rhs]);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Term, ParseError> {
        match self.peek() {
            Tok::Minus => {
                self.next();
                let t = self.unary()?;
                Ok(match t {
                    Term::Lit(r) => Term::Lit(-r),
                    other => Term::PrimApp(self.infix_prim("neg")?, vec![other]),
                })
            }
            Tok::KwFst => {
                self.next();
                Ok(Term::Proj(ProjIndex::Fst, Box::new(self.unary()?)))
            }
            Tok::KwSnd => {
                self.next();
                Ok(Term::Proj(ProjIndex::Snd, Box::new(self.unary()?)))
            }
            _ => self.postfix(),
        }
    }

    fn starts_atom(&self) -> bool {
        matches!(self.peek(), Tok::Num(_) | Tok::Ident(_) | Tok::LParen)
    }

    fn postfix(&mut self) -> Result<Term, ParseError> {
        let mut acc = self.atom()?;
        loop {
            if *self.peek() == Tok::LParen {
                self.next();
                let mut args = vec![self.term()?];
                while *self.peek() == Tok::Comma {
                    self.next();
                    args.push(self.term()?);
                }
                self.expect(Tok::RParen)?;
                acc = Term::App(Box::new(acc), args);
            } else if self.starts_atom() {
                let arg = self.atom()?;
                acc = Term::App(Box::new(acc), vec![arg]);
            } else {
                return Ok(acc);
            }
        }
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Num(r) => {
                self.next();
                Ok(Term::Lit(r))
            }
            Tok::Ident(name) => {
                self.next();
                if self.reg.contains(&name) {
                    if *self.peek() != Tok::LParen {
                        return self.err(format!(
                            "primitive `{}` must be applied: {}(...)",
                            name, name
                        ));
                    }
                    self.next();
                    let mut args = Vec::new();
                    if *self.peek() == Tok::RParen {
                        self.next();
                        return Ok(Term::PrimApp(name, args));
                    }
                    args.push(self.term()?);
                    while *self.peek() == Tok::Comma {
                        self.next();
                        args.push(self.term()?);
                    }
                    self.expect(Tok::RParen)?;
                    Ok(Term::PrimApp(name, args))
                } else {
                    Ok(Term::Var(name))
                }
            }
            Tok::LParen => {
                self.next();
                let mut parts = vec![self.term()?];
                while *self.peek() == Tok::Comma {
                    self.next();
                    parts.push(self.term()?);
                }
                self.expect(Tok::RParen)?;
                let mut acc = parts.pop().unwrap();
                while let Some(t) = parts.pop() {
                    acc = Term::Pair(Box::new(t), Box::new(acc));
                }
                Ok(acc)
            }
            other => self.err(format!("expected a term, found {}", other.describe())),
        }
    }

    // ---- simple types ----

    fn simple_type(&mut self) -> Result<SimpleType, ParseError> {
        let lhs = self.type_prod()?;
        if *self.peek() == Tok::Arrow {
            self.next();
            let rhs = self.simple_type()?;
            Ok(SimpleType::arrow(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn type_prod(&mut self) -> Result<SimpleType, ParseError> {
        let lhs = self.type_atom()?;
        if *self.peek() == Tok::Star {
            self.next();
            let rhs = self.type_prod()?;
            Ok(SimpleType::prod(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn type_atom(&mut self) -> Result<SimpleType, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "R" => {
                self.next();
                Ok(SimpleType::Real)
            }
            Tok::LParen => {
                self.next();
                let t = self.simple_type()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            other => self.err(format!("expected a type, found {}", other.describe())),
        }
    }

    // ---- formulas ----

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.formula_or()?;
        if *self.peek() == Tok::ImpliesOp {
            self.next();
            let rhs = self.formula()?;
            Ok(Formula::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    // /\ and \/ associate to the right, matching the printer.
    fn formula_or(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.formula_and()?;
        if *self.peek() == Tok::OrOp {
            self.next();
            let rhs = self.formula_or()?;
            Ok(Formula::or(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn formula_and(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.formula_not()?;
        if *self.peek() == Tok::AndOp {
            self.next();
            let rhs = self.formula_and()?;
            Ok(Formula::and(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn formula_not(&mut self) -> Result<Formula, ParseError> {
        if *self.peek() == Tok::Tilde {
            self.next();
            Ok(Formula::not(self.formula_not()?))
        } else {
            self.formula_atom()
        }
    }

    fn formula_atom(&mut self) -> Result<Formula, ParseError> {
        if let Tok::Ident(s) = self.peek() {
            if s == "T" {
                self.next();
                return Ok(Formula::Top);
            }
        }
        // Try a comparison first; fall back to a parenthesized formula.
        let save = self.pos;
        match self.formula_comparison() {
            Ok(f) => Ok(f),
            Err(cmp_err) => {
                self.pos = save;
                if *self.peek() == Tok::LParen {
                    self.next();
                    let f = self.formula()?;
                    self.expect(Tok::RParen)?;
                    Ok(f)
                } else {
                    Err(cmp_err)
                }
            }
        }
    }

    fn formula_comparison(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.fexpr()?;
        let build = match self.peek() {
            Tok::Le => Formula::leq as fn(FExpr, FExpr) -> Formula,
            Tok::Lt => Formula::lt,
            Tok::Ge => Formula::geq,
            Tok::Gt => Formula::gt,
            Tok::Equals => Formula::eq,
            other => {
                let d = other.describe();
                return self.err(format!("expected a comparison operator, found {}", d));
            }
        };
        self.next();
        let rhs = self.fexpr()?;
        Ok(build(lhs, rhs))
    }

    fn fexpr(&mut self) -> Result<FExpr, ParseError> {
        let mut acc = self.fexpr_mul()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => FExpr::add as fn(FExpr, FExpr) -> FExpr,
                Tok::Minus => FExpr::sub,
                _ => return Ok(acc),
            };
            self.next();
            let rhs = self.fexpr_mul()?;
            acc = op(acc, rhs);
        }
    }

    fn fexpr_mul(&mut self) -> Result<FExpr, ParseError> {
        let mut acc = self.fexpr_unary()?;
        while *self.peek() == Tok::Star {
            self.next();
            let rhs = self.fexpr_unary()?;
            acc = FExpr::mul(acc, rhs);
        }
        Ok(acc)
    }

    fn fexpr_unary(&mut self) -> Result<FExpr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.next();
            let e = self.fexpr_unary()?;
            Ok(match e {
                FExpr::Const(r) => FExpr::Const(-r),
                other => FExpr::neg(other),
            })
        } else {
            self.fexpr_atom()
        }
    }

    fn fexpr_atom(&mut self) -> Result<FExpr, ParseError> {
        match self.peek().clone() {
            Tok::Num(r) => {
                self.next();
                Ok(FExpr::Const(r))
            }
            Tok::Ident(name) => {
                self.next();
                if *self.peek() == Tok::LParen && self.reg.contains(&name) {
                    self.next();
                    let mut args = vec![self.fexpr()?];
                    while *self.peek() == Tok::Comma {
                        self.next();
                        args.push(self.fexpr()?);
                    }
                    self.expect(Tok::RParen)?;
                    Ok(FExpr::App(name, args))
                } else {
                    Ok(FExpr::Var(name))
                }
            }
            Tok::LParen => {
                self.next();
                let e = self.fexpr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            other => self.err(format!("expected a formula expression, found {}", other.describe())),
        }
    }

    // ---- refinement types ----

    fn reftype(&mut self) -> Result<RefType, ParseError> {
        let params = self.reftype_params()?;
        if *self.peek() == Tok::Arrow {
            self.next();
            self.expect(Tok::LBrace)?;
            let domain = self.formula()?;
            let image = if *self.peek() == Tok::Comma {
                self.next();
                Some(self.formula()?)
            } else {
                None
            };
            self.expect(Tok::RBrace)?;
            let result = self.reftype()?;
            let (line, col) = self.here();
            RefType::arrow(params, domain, image, result)
                .map_err(|msg| ParseError { msg, line, col })
        } else {
            if params.len() == 1 {
                Ok(params.into_iter().next().unwrap())
            } else {
                self.err("a parenthesized argument list must be followed by `->`")
            }
        }
    }

    fn reftype_params(&mut self) -> Result<Vec<RefType>, ParseError> {
        match self.peek() {
            Tok::LBrace => Ok(vec![self.reftype_ground()?]),
            Tok::LParen => {
                self.next();
                let mut params = vec![self.reftype()?];
                while *self.peek() == Tok::Comma {
                    self.next();
                    params.push(self.reftype()?);
                }
                self.expect(Tok::RParen)?;
                Ok(params)
            }
            other => {
                let d = other.describe();
                self.err(format!("expected a refinement type, found {}", d))
            }
        }
    }

    fn reftype_ground(&mut self) -> Result<RefType, ParseError> {
        self.expect(Tok::LBrace)?;
        let var = self.expect_ident()?;
        self.expect(Tok::KwIn)?;
        match self.next() {
            Tok::Ident(s) if s == "R" => {}
            other => {
                let d = other.describe();
                return self.err(format!("expected `R` in ground refinement type, found {}", d));
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(RefType::ground(var))
    }
}

/// Parses a term. Binders are alpha-freshened, so every bound name in the
/// result is unique and distinct from free names.
pub fn parse_term(src: &str, reg: &PrimRegistry) -> Result<Term, ParseError> {
    let mut p = Parser::new(src, reg)?;
    let t = p.term()?;
    p.at_eof()?;
    Ok(freshen(&t))
}

pub fn parse_simple_type(src: &str) -> Result<SimpleType, ParseError> {
    let reg = PrimRegistry::empty();
    let mut p = Parser::new(src, &reg)?;
    let t = p.simple_type()?;
    p.at_eof()?;
    Ok(t)
}

pub fn parse_formula(src: &str, reg: &PrimRegistry) -> Result<Formula, ParseError> {
    let mut p = Parser::new(src, reg)?;
    let f = p.formula()?;
    p.at_eof()?;
    Ok(f)
}

pub fn parse_reftype(src: &str, reg: &PrimRegistry) -> Result<RefType, ParseError> {
    let mut p = Parser::new(src, reg)?;
    let t = p.reftype()?;
    p.at_eof()?;
    Ok(t)
}

/// A context-variable pragma: simple (`@var x : R`) or refined
/// (`@var x : {a in R}`).
#[derive(Debug, Clone)]
pub struct VarPragma {
    pub name: String,
    pub simple: Option<SimpleType>,
    pub refined: Option<RefType>,
}

/// A parsed `.rlam` source file: pragmas plus one term.
#[derive(Debug, Clone)]
pub struct SourceFile {
    pub vars: Vec<VarPragma>,
    pub domain: Option<Formula>,
    pub image: Option<Formula>,
    pub target: Option<RefType>,
    pub term: Term,
}

/// Parses a source file: `@var`, `@domain`, `@image`, `@target` pragma
/// lines followed by the term (which may span several lines).
pub fn parse_source_file(src: &str, reg: &PrimRegistry) -> Result<SourceFile, ParseError> {
    let mut vars = Vec::new();
    let mut domain = None;
    let mut image = None;
    let mut target = None;
    let mut term_lines = Vec::new();
    for (ix, line) in src.lines().enumerate() {
        let lineno = ix + 1;
        let trimmed = line.trim_start();
        if !trimmed.starts_with('@') {
            term_lines.push(line);
            continue;
        }
        let at_err = |msg: String| ParseError { msg, line: lineno, col: 1 };
        let (keyword, rest) = match trimmed.split_once(char::is_whitespace) {
            Some((k, r)) => (k, r),
            None => return Err(at_err(format!("pragma `{}` has no payload", trimmed))),
        };
        match keyword {
            "@var" => {
                let (name, ty_src) = rest
                    .split_once(':')
                    .ok_or_else(|| at_err("expected `@var name : type`".into()))?;
                let name = name.trim().to_string();
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'') {
                    return Err(at_err(format!("bad variable name `{}`", name)));
                }
                if reg.contains(&name) {
                    return Err(at_err(format!("`{}` is a primitive and cannot be a variable", name)));
                }
                let ty_src = ty_src.trim();
                let pragma = match parse_reftype(ty_src, reg) {
                    Ok(rt) => VarPragma { name, simple: None, refined: Some(rt) },
                    Err(_) => {
                        let st = parse_simple_type(ty_src).map_err(|e| {
                            at_err(format!("cannot parse type `{}`: {}", ty_src, e.msg))
                        })?;
                        VarPragma { name, simple: Some(st), refined: None }
                    }
                };
                vars.push(pragma);
            }
            "@domain" => {
                domain = Some(parse_formula(rest, reg).map_err(|e| at_err(e.msg))?);
            }
            "@image" => {
                image = Some(parse_formula(rest, reg).map_err(|e| at_err(e.msg))?);
            }
            "@target" => {
                target = Some(parse_reftype(rest, reg).map_err(|e| at_err(e.msg))?);
            }
            other => return Err(at_err(format!("unknown pragma `{}`", other))),
        }
    }
    let term_src = term_lines.join("\n");
    if term_src.trim().is_empty() {
        return Err(ParseError { msg: "source file contains no term".into(), line: 1, col: 1 });
    }
    let term = parse_term(&term_src, reg)?;
    Ok(SourceFile { vars, domain, image, target, term })
}
