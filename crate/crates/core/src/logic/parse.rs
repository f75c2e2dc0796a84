//! Recursive-descent parser for the ASCII surface syntax of formulas and rule files.
//!
//! Precedence, loosest first: `<=>`, `=>`, `|`, `&`, `~`. Binary operators fold to
//! the left. A quantifier body extends as far to the right as possible.

use super::ast::{Formula, Logic, Node, Term, TermBase, TermPath, Var};
use super::rule::Rule;
use super::LogicError;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Digits(String),
    Dot,
    Plus,
    Eq,
    Lt,
    Le,
    Implies,
    Iff,
    And,
    Or,
    Not,
    LParen,
    RParen,
    Colon,
    Comma,
    Arrow,
    Assign,
    In,
    Ex1,
    All1,
    Ex2,
    All2,
    True,
    False,
    Epsilon,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Digits(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Dot => ".",
            Tok::Plus => "+",
            Tok::Eq => "=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Implies => "=>",
            Tok::Iff => "<=>",
            Tok::And => "&",
            Tok::Or => "|",
            Tok::Not => "~",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Colon => ":",
            Tok::Comma => ",",
            Tok::Arrow => "->",
            Tok::Assign => ":=",
            Tok::In => "in",
            Tok::Ex1 => "ex1",
            Tok::All1 => "all1",
            Tok::Ex2 => "ex2",
            Tok::All2 => "all2",
            Tok::True => "true",
            Tok::False => "false",
            Tok::Epsilon => "epsilon",
            Tok::Ident(_) | Tok::Digits(_) | Tok::Eof => "",
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str, line0: usize) -> Result<Vec<Spanned>, LogicError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = vec![];
    let (mut i, mut line, mut col) = (0, line0, 1);
    while i < chars.len() {
        let c = chars[i];
        let (l, cc) = (line, col);
        let take = |n: usize, tok: Tok, out: &mut Vec<Spanned>| {
            out.push(Spanned {
                tok,
                line: l,
                col: cc,
            });
            n
        };
        let advance = match c {
            '\n' => {
                line += 1;
                col = 1;
                i += 1;
                continue;
            }
            c if c.is_whitespace() => 1,
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '.' => take(1, Tok::Dot, &mut out),
            '+' => take(1, Tok::Plus, &mut out),
            '&' => take(1, Tok::And, &mut out),
            '|' => take(1, Tok::Or, &mut out),
            '~' => take(1, Tok::Not, &mut out),
            '(' => take(1, Tok::LParen, &mut out),
            ')' => take(1, Tok::RParen, &mut out),
            ',' => take(1, Tok::Comma, &mut out),
            ':' if chars.get(i + 1) == Some(&'=') => take(2, Tok::Assign, &mut out),
            ':' => take(1, Tok::Colon, &mut out),
            '-' if chars.get(i + 1) == Some(&'>') => take(2, Tok::Arrow, &mut out),
            '=' if chars.get(i + 1) == Some(&'>') => take(2, Tok::Implies, &mut out),
            '=' => take(1, Tok::Eq, &mut out),
            '<' if chars.get(i + 1) == Some(&'=') && chars.get(i + 2) == Some(&'>') => {
                take(3, Tok::Iff, &mut out)
            }
            '<' if chars.get(i + 1) == Some(&'=') => take(2, Tok::Le, &mut out),
            '<' => take(1, Tok::Lt, &mut out),
            c if c.is_ascii_digit() => {
                let start = i;
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let s: String = chars[start..j].iter().collect();
                take(j - start, Tok::Digits(s), &mut out)
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let s: String = chars[start..j].iter().collect();
                let tok = match s.as_str() {
                    "in" => Tok::In,
                    "ex1" => Tok::Ex1,
                    "all1" => Tok::All1,
                    "ex2" => Tok::Ex2,
                    "all2" => Tok::All2,
                    "true" => Tok::True,
                    "false" => Tok::False,
                    "epsilon" => Tok::Epsilon,
                    _ => Tok::Ident(s),
                };
                take(j - start, tok, &mut out)
            }
            '_' => {
                return Err(LogicError::Syntax {
                    line,
                    col,
                    message: "identifiers starting with `_` are reserved".into(),
                })
            }
            other => {
                return Err(LogicError::Syntax {
                    line,
                    col,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        i += advance;
        col += advance;
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    logic: Logic,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if t != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> LogicError {
        let (line, col) = self.here();
        LogicError::Syntax {
            line,
            col,
            message: message.into(),
        }
    }

    fn wrong_logic(&self, message: impl Into<String>) -> LogicError {
        let (line, col) = self.here();
        LogicError::WrongLogic {
            line,
            col,
            logic: self.logic,
            message: message.into(),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), LogicError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!(
                "expected {}, found {}",
                tok.describe(),
                self.peek().describe()
            )))
        }
    }

    fn ident(&mut self) -> Result<String, LogicError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => Err(self.error(format!("expected identifier, found {}", other.describe()))),
        }
    }

    fn formula(&mut self) -> Result<Formula, LogicError> {
        let mut lhs = self.implication()?;
        while *self.peek() == Tok::Iff {
            self.bump();
            let rhs = self.implication()?;
            lhs = Formula::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn implication(&mut self) -> Result<Formula, LogicError> {
        let mut lhs = self.disjunction()?;
        while *self.peek() == Tok::Implies {
            self.bump();
            let rhs = self.disjunction()?;
            lhs = Formula::implies(lhs, rhs);
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, LogicError> {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.conjunction()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, LogicError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, LogicError> {
        match self.peek().clone() {
            Tok::Not => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Ex1 | Tok::All1 | Tok::Ex2 | Tok::All2 => self.quantifier(),
            Tok::True => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::False => {
                self.bump();
                Ok(Formula::False)
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            _ => self.atom(),
        }
    }

    fn quantifier(&mut self) -> Result<Formula, LogicError> {
        let q = self.bump();
        let second = matches!(q, Tok::Ex2 | Tok::All2);
        let mut vars = vec![];
        loop {
            let (line, col) = self.here();
            let name = self.ident()?;
            let v = Var::from_case(&name);
            if v.is_first_order() == second {
                return Err(LogicError::Syntax {
                    line,
                    col,
                    message: format!(
                        "`{name}` cannot be bound by `{}`: first-order names are lower-case, second-order names upper-case",
                        q.text()
                    ),
                });
            }
            vars.push(v);
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(Tok::Colon)?;
        let mut body = self.formula()?;
        for v in vars.into_iter().rev() {
            body = match q {
                Tok::Ex1 | Tok::Ex2 => Formula::exists(v, body),
                _ => Formula::forall(v, body),
            };
        }
        Ok(body)
    }

    fn atom(&mut self) -> Result<Formula, LogicError> {
        let lhs = self.term()?;
        match self.peek().clone() {
            Tok::In => {
                self.bump();
                let (line, col) = self.here();
                let name = self.ident()?;
                let set = Var::from_case(&name);
                if set.is_first_order() {
                    return Err(LogicError::Syntax {
                        line,
                        col,
                        message: format!("`{name}` is first-order and cannot appear right of `in`"),
                    });
                }
                Ok(Formula::In(lhs, set))
            }
            op @ (Tok::Eq | Tok::Lt | Tok::Le) => {
                self.bump();
                let rhs = self.term()?;
                Ok(match op {
                    Tok::Eq => Formula::Eq(lhs, rhs),
                    Tok::Lt => Formula::Lt(lhs, rhs),
                    _ => Formula::Leq(lhs, rhs),
                })
            }
            other => Err(self.error(format!(
                "expected `=`, `<`, `<=` or `in`, found {}",
                other.describe()
            ))),
        }
    }

    fn term(&mut self) -> Result<Term, LogicError> {
        match self.logic {
            Logic::Ws1s => self.term1(),
            Logic::Ws2s => self.term2(),
        }
    }

    fn numeral(&self, s: &str) -> Result<u32, LogicError> {
        s.parse()
            .map_err(|_| self.error(format!("numeral `{s}` out of range")))
    }

    fn term1(&mut self) -> Result<Term, LogicError> {
        let mut term = match self.peek().clone() {
            Tok::Ident(name) => {
                let v = Var::from_case(&name);
                if !v.is_first_order() {
                    return Err(self.error(format!("second-order `{name}` used as a term")));
                }
                self.bump();
                Term::var(v)
            }
            Tok::Digits(s) => {
                let n = self.numeral(&s)?;
                self.bump();
                Term::numeral(n)
            }
            Tok::Epsilon => return Err(self.wrong_logic("`epsilon` is a WS2S constant")),
            other => return Err(self.error(format!("expected a term, found {}", other.describe()))),
        };
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    let s = match self.peek().clone() {
                        Tok::Digits(s) => s,
                        other => {
                            return Err(self.error(format!(
                                "expected a numeral after `+`, found {}",
                                other.describe()
                            )))
                        }
                    };
                    let n = self.numeral(&s)?;
                    self.bump();
                    let TermPath::Offset(k) = &mut term.path else {
                        unreachable!()
                    };
                    *k = k
                        .checked_add(n)
                        .ok_or_else(|| self.error("offset overflow"))?;
                }
                Tok::Dot => return Err(self.wrong_logic("`.0`/`.1` successors belong to WS2S")),
                _ => return Ok(term),
            }
        }
    }

    fn bitstring(&self, s: &str) -> Result<Node, LogicError> {
        if !s.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(self.wrong_logic(format!(
                "`{s}` is not a bit string; numerals belong to WS1S"
            )));
        }
        if s.len() > Node::MAX_DEPTH {
            return Err(self.error("bit string too long"));
        }
        Ok(Node::from_bits(
            &s.bytes().map(|b| b == b'1').collect::<Vec<_>>(),
        ))
    }

    fn term2(&mut self) -> Result<Term, LogicError> {
        let (base, mut path) = match self.peek().clone() {
            Tok::Ident(name) => {
                let v = Var::from_case(&name);
                if !v.is_first_order() {
                    return Err(self.error(format!("second-order `{name}` used as a term")));
                }
                self.bump();
                (TermBase::Var(v), Node::ROOT)
            }
            Tok::Epsilon => {
                self.bump();
                (TermBase::Epsilon, Node::ROOT)
            }
            Tok::Digits(s) => {
                let n = self.bitstring(&s)?;
                self.bump();
                (TermBase::Epsilon, n)
            }
            other => return Err(self.error(format!("expected a term, found {}", other.describe()))),
        };
        loop {
            match self.peek() {
                Tok::Dot => {
                    self.bump();
                    let s = match self.peek().clone() {
                        Tok::Digits(s) => s,
                        other => {
                            return Err(self.error(format!(
                                "expected a bit string after `.`, found {}",
                                other.describe()
                            )))
                        }
                    };
                    let suffix = self.bitstring(&s)?;
                    if path.len() + suffix.len() > Node::MAX_DEPTH {
                        return Err(self.error("path too long"));
                    }
                    self.bump();
                    path = path.concat(&suffix);
                }
                Tok::Plus => return Err(self.wrong_logic("`+1` successor belongs to WS1S")),
                _ => {
                    return Ok(Term {
                        base,
                        path: TermPath::Bits(path),
                    })
                }
            }
        }
    }
}

/// Parses a formula of the given logic. Free variables are allowed.
pub fn parse_formula(text: &str, logic: Logic) -> Result<Formula, LogicError> {
    let toks = lex(text, 1)?;
    let mut p = Parser {
        toks,
        pos: 0,
        logic,
    };
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error(format!("unexpected {} after formula", p.peek().describe())));
    }
    Ok(f)
}

/// Parses a rule file:
///
/// ```text
/// logic: ws1s
/// rule r: x -> psi(x,y), y
/// psi(x,y) := (3 < x & y < x) | (x < 4 & y = x + 1)
/// ```
pub fn parse_rule(text: &str) -> Result<Rule, LogicError> {
    parse_rule_with(text, None)
}

/// Like [`parse_rule`], but `logic` overrides (or supplies) the `logic:` header.
pub fn parse_rule_with(text: &str, logic: Option<Logic>) -> Result<Rule, LogicError> {
    let toks = lex(text, 1)?;
    // The header does not depend on the logic; parse it with a placeholder.
    let mut p = Parser {
        toks,
        pos: 0,
        logic: Logic::Ws1s,
    };
    let declared = if *p.peek() == Tok::Ident("logic".into()) {
        p.bump();
        p.expect(Tok::Colon)?;
        match p.ident()?.as_str() {
            "ws1s" => Some(Logic::Ws1s),
            "ws2s" => Some(Logic::Ws2s),
            other => return Err(p.error(format!("unknown logic `{other}`, expected ws1s or ws2s"))),
        }
    } else {
        None
    };
    let logic = logic.or(declared).ok_or(LogicError::MissingLogic)?;
    p.logic = logic;

    let keyword = p.ident()?;
    if keyword != "rule" {
        return Err(p.error(format!("expected `rule`, found `{keyword}`")));
    }
    let name = p.ident()?;
    p.expect(Tok::Colon)?;
    expect_word(&mut p, "x")?;
    p.expect(Tok::Arrow)?;
    psi_head(&mut p)?;
    p.expect(Tok::Comma)?;
    expect_word(&mut p, "y")?;
    psi_head(&mut p)?;
    p.expect(Tok::Assign)?;
    let body = p.formula()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error(format!("unexpected {} after formula", p.peek().describe())));
    }
    Rule::new(name, logic, body)
}

fn expect_word(p: &mut Parser, word: &str) -> Result<(), LogicError> {
    let got = p.ident()?;
    if got == word {
        Ok(())
    } else {
        p.pos -= 1;
        Err(p.error(format!("expected `{word}`, found `{got}`")))
    }
}

fn psi_head(p: &mut Parser) -> Result<(), LogicError> {
    expect_word(p, "psi")?;
    p.expect(Tok::LParen)?;
    expect_word(p, "x")?;
    p.expect(Tok::Comma)?;
    expect_word(p, "y")?;
    p.expect(Tok::RParen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::ast::{Formula as F, Var};

    fn x() -> Term {
        Term::var(Var::first("x"))
    }
    fn y() -> Term {
        Term::var(Var::first("y"))
    }

    #[test]
    fn example_one_psi() {
        let f = parse_formula(
            "(3 < x & x < 10 & y < x) | (x < 3 & y = x + 1)",
            Logic::Ws1s,
        )
        .unwrap();
        let left = F::and(
            F::and(F::Lt(Term::numeral(3), x()), F::Lt(x(), Term::numeral(10))),
            F::Lt(y(), x()),
        );
        let right = F::and(
            F::Lt(x(), Term::numeral(3)),
            F::Eq(y(), Term::plus(Var::first("x"), 1)),
        );
        assert_eq!(f, F::or(left, right));
    }

    #[test]
    fn smallest_atom() {
        assert_eq!(
            parse_formula("x = x", Logic::Ws1s).unwrap(),
            F::Eq(x(), x())
        );
    }

    #[test]
    fn nested_quantifiers() {
        let f = parse_formula("ex2 X: x in X & all1 z: (z in X => z+1 in X)", Logic::Ws1s).unwrap();
        let xs = Var::second("X");
        let z = Var::first("z");
        let closed = F::forall(
            z.clone(),
            F::implies(
                F::In(Term::var(z.clone()), xs.clone()),
                F::In(Term::plus(z, 1), xs.clone()),
            ),
        );
        assert_eq!(f, F::exists(xs.clone(), F::and(F::In(x(), xs), closed)));
    }

    #[test]
    fn ws2s_paths() {
        let f = parse_formula("x < 0.000 & y = x.01 & y = 11", Logic::Ws2s).unwrap();
        let n = |s| Node::parse_literal(s).unwrap();
        let xv = Term::node_var(Var::first("x"));
        let yv = Term::node_var(Var::first("y"));
        let expected = F::and(
            F::and(
                F::Lt(xv.clone(), Term::node(n("0000"))),
                F::Eq(yv.clone(), Term::dot(Var::first("x"), n("01"))),
            ),
            F::Eq(yv, Term::node(n("11"))),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn logic_mismatch_is_reported() {
        assert!(matches!(
            parse_formula("y = x.1", Logic::Ws1s),
            Err(LogicError::WrongLogic { .. })
        ));
        assert!(matches!(
            parse_formula("y = x + 1", Logic::Ws2s),
            Err(LogicError::WrongLogic { .. })
        ));
        assert!(matches!(
            parse_formula("x < 3", Logic::Ws2s),
            Err(LogicError::WrongLogic { .. })
        ));
        assert!(matches!(
            parse_formula("x = epsilon", Logic::Ws1s),
            Err(LogicError::WrongLogic { .. })
        ));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_formula("x = x &\n  & y = y", Logic::Ws1s).unwrap_err();
        assert_eq!(
            err,
            LogicError::Syntax {
                line: 2,
                col: 3,
                message: "expected a term, found `&`".into()
            }
        );
        assert!(matches!(
            parse_formula("_t0 = x", Logic::Ws1s),
            Err(LogicError::Syntax {
                line: 1,
                col: 1,
                ..
            })
        ));
        assert!(matches!(
            parse_formula("ex1 X: X = X", Logic::Ws1s),
            Err(LogicError::Syntax { .. })
        ));
        assert!(parse_formula("x = x)", Logic::Ws1s).is_err());
    }

    #[test]
    fn rule_files() {
        let r = parse_rule(
            "logic: ws1s\nrule r2: x -> psi(x,y), y\npsi(x,y) := (3 < x & y < x) | (x < 4 & y = x + 1)\n",
        )
        .unwrap();
        assert_eq!(r.name, "r2");
        assert_eq!(r.logic, Logic::Ws1s);

        let r = parse_rule("logic: ws2s\nrule r6: x -> psi(x,y), y\npsi(x,y) := y = x.1 | x = y.1")
            .unwrap();
        assert_eq!(r.logic, Logic::Ws2s);
        let xv = Term::node_var(Var::first("x"));
        let yv = Term::node_var(Var::first("y"));
        let one = Node::parse_literal("1").unwrap();
        assert_eq!(
            r.body,
            F::or(
                F::Eq(yv.clone(), Term::dot(Var::first("x"), one)),
                F::Eq(xv, Term::dot(Var::first("y"), one))
            )
        );
    }

    #[test]
    fn rule_contract_violations() {
        let free_z = parse_rule("logic: ws1s\nrule bad: x -> psi(x,y), y\npsi(x,y) := y = z");
        assert!(matches!(free_z, Err(LogicError::ExtraFreeVariables { .. })));
        let free_set = parse_rule("logic: ws1s\nrule bad: x -> psi(x,y), y\npsi(x,y) := y in X");
        assert!(matches!(
            free_set,
            Err(LogicError::ExtraFreeVariables { .. })
        ));
        let no_logic = parse_rule("rule r: x -> psi(x,y), y\npsi(x,y) := x < y");
        assert_eq!(no_logic.unwrap_err(), LogicError::MissingLogic);
        let overridden = parse_rule_with(
            "rule r: x -> psi(x,y), y\npsi(x,y) := x < y",
            Some(Logic::Ws1s),
        );
        assert!(overridden.is_ok());
    }
}
