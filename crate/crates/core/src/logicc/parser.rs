//! Rule-language front end.
//!
//! ```text
//! file    := "attrs:" name ("," name)* NEWLINE rule*
//! rule    := iff                        (one per line, `#` starts a comment)
//! iff     := implies ("<->" implies)*
//! implies := or ("->" implies)?
//! or      := and ("|" and)*
//! and     := unary ("&" unary)*
//! unary   := "!" unary | atom
//! atom    := name | "true" | "false" | "exactly_one" "(" name ("," name)* ")" | "(" iff ")"
//! ```

use super::ast::Formula;
use crate::error::{Error, Result};

/// A single parsed rule and the line it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub formula: Formula,
    pub line: usize,
}

/// Attribute declarations plus the rules over them.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    pub attributes: Vec<String>,
    pub rules: Vec<Rule>,
}

impl RuleSet {
    pub fn num_attrs(&self) -> usize {
        self.attributes.len()
    }

    /// Conjunction of all rules (`true` if there are none).
    pub fn formula(&self) -> Formula {
        Formula::conjunction(self.rules.iter().map(|r| r.formula.clone()))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Not,
    And,
    Or,
    Implies,
    Iff,
    LParen,
    RParen,
    Comma,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn lex_line(text: &str, line: usize) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        let mut push = |tok, width: usize| {
            out.push(Token { tok, line, column });
            width
        };
        i += match c {
            '#' => break,
            c if c.is_whitespace() => 1,
            '!' | '~' => push(Tok::Not, 1),
            '&' => push(Tok::And, 1),
            '|' => push(Tok::Or, 1),
            '(' => push(Tok::LParen, 1),
            ')' => push(Tok::RParen, 1),
            ',' => push(Tok::Comma, 1),
            '-' if chars.get(i + 1) == Some(&'>') => push(Tok::Implies, 2),
            '<' if chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') => push(Tok::Iff, 3),
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                let mut end = i;
                while end < chars.len() && (chars[end].is_alphanumeric() || chars[end] == '_') {
                    end += 1;
                }
                let name: String = chars[start..end].iter().collect();
                push(Tok::Ident(name), end - start)
            }
            other => return Err(syntax(line, column, format!("unexpected character `{other}`"))),
        };
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    line: usize,
    line_len: usize,
    attributes: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn end_error(&self, message: &str) -> Error {
        syntax(self.line, self.line_len + 1, message)
    }

    fn lookup(&self, name: &str, line: usize, column: usize) -> Result<usize> {
        self.attributes
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| Error::UndeclaredVariable {
                name: name.to_string(),
                line,
                column,
            })
    }

    fn iff(&mut self) -> Result<Formula> {
        let mut lhs = self.implies()?;
        while self.peek() == Some(&Tok::Iff) {
            self.pos += 1;
            let rhs = self.implies()?;
            lhs = Formula::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Formula> {
        let lhs = self.or()?;
        if self.peek() == Some(&Tok::Implies) {
            self.pos += 1;
            let rhs = self.implies()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula> {
        let mut lhs = self.and()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            let rhs = self.and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula> {
        if self.peek() == Some(&Tok::Not) {
            self.pos += 1;
            return Ok(Formula::not(self.unary()?));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Formula> {
        let Some(token) = self.next() else {
            return Err(self.end_error("unexpected end of rule, expected an operand"));
        };
        match token.tok.clone() {
            Tok::LParen => {
                let inner = self.iff()?;
                match self.next() {
                    Some(Token { tok: Tok::RParen, .. }) => Ok(inner),
                    Some(t) => Err(syntax(t.line, t.column, "expected `)`")),
                    None => Err(syntax(token.line, token.column, "unclosed parenthesis")),
                }
            }
            Tok::Ident(name) if name == "true" => Ok(Formula::Const(true)),
            Tok::Ident(name) if name == "false" => Ok(Formula::Const(false)),
            Tok::Ident(name) if name == "exactly_one" => self.exactly_one(token.line, token.column),
            Tok::Ident(name) => Ok(Formula::Var(self.lookup(&name, token.line, token.column)?)),
            other => Err(syntax(
                token.line,
                token.column,
                format!("unexpected {}, expected an operand", describe(&other)),
            )),
        }
    }

    fn exactly_one(&mut self, line: usize, column: usize) -> Result<Formula> {
        match self.next() {
            Some(Token { tok: Tok::LParen, .. }) => {}
            Some(t) => return Err(syntax(t.line, t.column, "expected `(` after exactly_one")),
            None => return Err(self.end_error("expected `(` after exactly_one")),
        }
        let mut vars = Vec::new();
        loop {
            match self.next() {
                Some(Token {
                    tok: Tok::Ident(name),
                    line,
                    column,
                }) => {
                    let k = self.lookup(&name, line, column)?;
                    if vars.contains(&k) {
                        return Err(syntax(line, column, format!("`{name}` repeated in exactly_one")));
                    }
                    vars.push(k);
                }
                Some(t) => return Err(syntax(t.line, t.column, "expected an attribute name")),
                None => return Err(syntax(line, column, "unclosed exactly_one(")),
            }
            match self.next() {
                Some(Token { tok: Tok::Comma, .. }) => continue,
                Some(Token { tok: Tok::RParen, .. }) => break,
                Some(t) => return Err(syntax(t.line, t.column, "expected `,` or `)`")),
                None => return Err(syntax(line, column, "unclosed exactly_one(")),
            }
        }
        Ok(Formula::ExactlyOne(vars))
    }
}

fn describe(tok: &Tok) -> &'static str {
    match tok {
        Tok::Ident(_) => "name",
        Tok::Not => "`!`",
        Tok::And => "`&`",
        Tok::Or => "`|`",
        Tok::Implies => "`->`",
        Tok::Iff => "`<->`",
        Tok::LParen => "`(`",
        Tok::RParen => "`)`",
        Tok::Comma => "`,`",
    }
}

fn parse_line(text: &str, line: usize, attributes: &[String]) -> Result<Option<Formula>> {
    let tokens = lex_line(text, line)?;
    if tokens.is_empty() {
        return Ok(None);
    }
    let mut parser = Parser {
        tokens,
        pos: 0,
        line,
        line_len: text.chars().count(),
        attributes,
    };
    let formula = parser.iff()?;
    if let Some(t) = parser.tokens.get(parser.pos) {
        return Err(syntax(t.line, t.column, format!("unexpected {}", describe(&t.tok))));
    }
    Ok(Some(formula))
}

fn parse_body(lines: impl Iterator<Item = (usize, String)>, attributes: &[String]) -> Result<Vec<Rule>> {
    let mut rules = Vec::new();
    for (line, text) in lines {
        if let Some(formula) = parse_line(&text, line, attributes)? {
            rules.push(Rule { formula, line });
        }
    }
    Ok(rules)
}

/// Parse newline-separated rules over declared attributes and conjoin them.
pub fn parse_rules(text: &str, attributes: &[String]) -> Result<Formula> {
    let lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.to_string()));
    let rules = parse_body(lines, attributes)?;
    Ok(Formula::conjunction(rules.into_iter().map(|r| r.formula)))
}

/// Parse a rule file whose first non-comment line is `attrs: a, b, ...`.
pub fn parse_rule_file(text: &str) -> Result<RuleSet> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.to_string()));
    let (header_line, header) = loop {
        match lines.next() {
            Some((n, l)) => {
                let content = l.split('#').next().unwrap_or("").trim().to_string();
                if !content.is_empty() {
                    break (n, content);
                }
            }
            None => return Err(syntax(1, 1, "missing `attrs:` header")),
        }
    };
    let Some(list) = header.strip_prefix("attrs:") else {
        return Err(syntax(header_line, 1, "first line must be `attrs: name, ...`"));
    };
    let mut attributes: Vec<String> = Vec::new();
    for name in list.split(',').map(str::trim) {
        let valid = name.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_')
            && name.chars().all(|c| c.is_alphanumeric() || c == '_');
        if !valid || ["true", "false", "exactly_one"].contains(&name) {
            return Err(syntax(header_line, 1, format!("invalid attribute name `{name}`")));
        }
        if attributes.iter().any(|a| a == name) {
            return Err(syntax(header_line, 1, format!("attribute `{name}` declared twice")));
        }
        attributes.push(name.to_string());
    }
    let rules = parse_body(lines, &attributes)?;
    Ok(RuleSet { attributes, rules })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn implication_with_negation() {
        let f = parse_rules("legs -> !fins", &names(&["legs", "fins"])).unwrap();
        assert_eq!(f, Formula::implies(Formula::Var(0), Formula::not(Formula::Var(1))));
    }

    #[test]
    fn precedence_and_associativity() {
        let attrs = names(&["a", "b", "c"]);
        let f = parse_rules("a | b & !c", &attrs).unwrap();
        assert_eq!(
            f,
            Formula::or(
                Formula::Var(0),
                Formula::and(Formula::Var(1), Formula::not(Formula::Var(2)))
            )
        );
        let f = parse_rules("a -> b -> c", &attrs).unwrap();
        assert_eq!(
            f,
            Formula::implies(Formula::Var(0), Formula::implies(Formula::Var(1), Formula::Var(2)))
        );
        let f = parse_rules("a -> b <-> c", &attrs).unwrap();
        assert_eq!(
            f,
            Formula::iff(Formula::implies(Formula::Var(0), Formula::Var(1)), Formula::Var(2))
        );
    }

    #[test]
    fn exactly_one_macro() {
        let attrs = names(&["c1", "c2", "c3"]);
        let f = parse_rules("exactly_one(c1, c2,c3)", &attrs).unwrap();
        assert_eq!(f, Formula::ExactlyOne(vec![0, 1, 2]));
        let expanded = f.expand_macros();
        let manual = Formula::disjunction((0..3).map(|k| {
            Formula::conjunction(
                std::iter::once(Formula::Var(k))
                    .chain((0..3).filter(|&j| j != k).map(|j| Formula::not(Formula::Var(j)))),
            )
        }));
        assert_eq!(expanded, manual);
        for mask in 0..8u32 {
            let a: Vec<bool> = (0..3).map(|i| mask >> i & 1 == 1).collect();
            assert_eq!(f.eval(&a), expanded.eval(&a));
        }
    }

    #[test]
    fn unclosed_parenthesis() {
        let err = parse_rules("a & (b", &names(&["a", "b"])).unwrap_err();
        assert_eq!(
            err,
            Error::Syntax {
                line: 1,
                column: 5,
                message: "unclosed parenthesis".into()
            }
        );
    }

    #[test]
    fn undeclared_and_stray_tokens() {
        let attrs = names(&["a", "b"]);
        assert!(matches!(
            parse_rules("a & x", &attrs),
            Err(Error::UndeclaredVariable { ref name, line: 1, column: 5 }) if name == "x"
        ));
        assert!(matches!(
            parse_rules("a b", &attrs),
            Err(Error::Syntax { column: 3, .. })
        ));
        assert!(matches!(parse_rules("a &", &attrs), Err(Error::Syntax { .. })));
        assert!(matches!(
            parse_rules("a $ b", &attrs),
            Err(Error::Syntax { column: 3, .. })
        ));
        assert!(matches!(
            parse_rules("a\n\n b -> ", &attrs),
            Err(Error::Syntax { line: 3, .. })
        ));
    }

    #[test]
    fn rule_file() {
        let text = "# animals\nattrs: legs, fins, tail\nlegs -> !fins  # no both\n\n tail | legs\n";
        let set = parse_rule_file(text).unwrap();
        assert_eq!(set.attributes, names(&["legs", "fins", "tail"]));
        assert_eq!(set.rules.len(), 2);
        assert_eq!(set.rules[0].line, 3);
        assert_eq!(set.rules[1].line, 5);
        assert!(parse_rule_file("legs -> fins\n").is_err());
        assert!(parse_rule_file("attrs: a, a\n").is_err());
        assert_eq!(
            parse_rule_file("attrs: a, b\n").unwrap().formula(),
            Formula::Const(true)
        );
    }

    #[test]
    fn multiple_lines_are_conjoined() {
        let f = parse_rules("a\n!b", &names(&["a", "b"])).unwrap();
        assert_eq!(f, Formula::and(Formula::Var(0), Formula::not(Formula::Var(1))));
    }
}
