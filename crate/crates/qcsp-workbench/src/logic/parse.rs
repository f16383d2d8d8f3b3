//! Sentence grammar:
//!
//! ```text
//! ("forall"|"exists") <ident>  ... repeated ... ":" atom ("&" atom)*
//! atom ::= Name "(" term ("," term)* ")" | term "=" term
//! term ::= <variable ident> | <constant ident> | "@" <element>
//! ```

use super::{Atom, PHSentence, Quantifier, Term};
use crate::error::{Error, Result};
use crate::structures::Signature;

struct Tok<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Tok<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.text[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.text[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(Error::Parse {
                line: 1,
                msg: format!("expected `{c}` at position {}", self.pos),
            })
        }
    }

    fn ident(&mut self) -> Option<String> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let mut len = 0;
        for (i, c) in rest.char_indices() {
            if (i == 0 && c.is_alphabetic()) || (i > 0 && (c.is_alphanumeric() || c == '_')) {
                len = i + c.len_utf8();
            } else {
                break;
            }
        }
        if len == 0 {
            None
        } else {
            self.pos += len;
            Some(rest[..len].to_string())
        }
    }

    fn number(&mut self) -> Result<u32> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let len = rest.chars().take_while(|c| c.is_ascii_digit()).count();
        if len == 0 {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected a number at position {}", self.pos),
            });
        }
        self.pos += len;
        rest[..len].parse().map_err(|_| Error::Parse {
            line: 1,
            msg: "element literal out of range".into(),
        })
    }
}

pub fn parse_sentence(text: &str, signature: &Signature) -> Result<PHSentence> {
    let mut tok = Tok { text, pos: 0 };
    let mut prefix = Vec::new();
    loop {
        let save = tok.pos;
        match tok.ident() {
            Some(kw) if kw == "forall" || kw == "exists" => {
                let var = tok.ident().ok_or_else(|| Error::Parse {
                    line: 1,
                    msg: "expected a variable after quantifier".into(),
                })?;
                let q = if kw == "forall" {
                    Quantifier::Forall
                } else {
                    Quantifier::Exists
                };
                prefix.push((q, var));
            }
            _ => {
                tok.pos = save;
                break;
            }
        }
    }
    tok.expect(':')?;

    let vars: std::collections::BTreeSet<&str> =
        prefix.iter().map(|(_, v)| v.as_str()).collect();
    let term = |tok: &mut Tok| -> Result<Term> {
        if tok.eat('@') {
            return Ok(Term::Element(tok.number()?));
        }
        let name = tok.ident().ok_or_else(|| Error::Parse {
            line: 1,
            msg: "expected a term".into(),
        })?;
        if vars.contains(name.as_str()) {
            Ok(Term::Var(name))
        } else if signature.constants.contains(&name) {
            Ok(Term::Const(name))
        } else {
            // an identifier that is neither quantified nor a constant
            Err(Error::FreeVariable(name))
        }
    };

    let mut body = Vec::new();
    if tok.peek().is_some() {
        loop {
            // either Name(...) or term = term
            let save = tok.pos;
            let first = tok.ident();
            if let Some(name) = first {
                if tok.peek() == Some('(') && signature.relations.contains_key(&name) {
                    tok.expect('(')?;
                    let mut args = Vec::new();
                    loop {
                        args.push(term(&mut tok)?);
                        if !tok.eat(',') {
                            break;
                        }
                    }
                    tok.expect(')')?;
                    let arity = signature.arity(&name)?;
                    if args.len() != arity {
                        return Err(Error::ArityMismatch {
                            symbol: name,
                            expected: arity,
                            got: args.len(),
                        });
                    }
                    body.push(Atom::Rel { symbol: name, args });
                } else if tok.peek() == Some('(') {
                    return Err(Error::UnknownSymbol(name));
                } else {
                    // an equality whose left side we already consumed
                    tok.pos = save;
                    let lhs = term(&mut tok)?;
                    tok.expect('=')?;
                    let rhs = term(&mut tok)?;
                    body.push(Atom::Eq(lhs, rhs));
                }
            } else {
                let lhs = term(&mut tok)?;
                tok.expect('=')?;
                let rhs = term(&mut tok)?;
                body.push(Atom::Eq(lhs, rhs));
            }
            if !tok.eat('&') {
                break;
            }
        }
    }
    if tok.peek().is_some() {
        return Err(Error::Parse {
            line: 1,
            msg: format!("trailing input at position {}", tok.pos),
        });
    }
    let sentence = PHSentence { prefix, body };
    sentence.validate(signature)?;
    Ok(sentence)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn parses_forall_exists() {
        let sig = Signature::digraph();
        let s = parse_sentence("forall x exists y : E(x,y)", &sig).unwrap();
        assert_eq!(s.universal_count(), 1);
        assert_eq!(s.prefix.len(), 2);
        assert_eq!(s.body.len(), 1);
        assert!(s.is_pi2());
    }

    #[test]
    fn parses_the_equality_sentence() {
        let sig = Signature::digraph();
        let s = parse_sentence("forall x forall y : x = y", &sig).unwrap();
        assert_eq!(s.universal_count(), 2);
        assert!(s.has_equality());
    }

    #[test]
    fn parses_pp_sentence() {
        let sig = Signature::digraph();
        let s = parse_sentence("exists y : E(y,y)", &sig).unwrap();
        assert!(s.is_pp());
    }

    #[test]
    fn rejects_free_variables() {
        let sig = Signature::digraph();
        assert!(matches!(
            parse_sentence("exists y : E(y,z)", &sig),
            Err(Error::FreeVariable(v)) if v == "z"
        ));
    }

    #[test]
    fn rejects_unknown_symbols_and_bad_arity() {
        let sig = Signature::digraph();
        assert!(matches!(
            parse_sentence("exists y : F(y,y)", &sig),
            Err(Error::UnknownSymbol(_))
        ));
        assert!(matches!(
            parse_sentence("exists y : E(y,y,y)", &sig),
            Err(Error::ArityMismatch { .. })
        ));
    }

    #[test]
    fn parses_constants_and_element_literals() {
        let mut sig = Signature::digraph();
        sig.constants = BTreeSet::from(["a".to_string()]);
        let s = parse_sentence("exists y : E(a,y) & E(@2,y)", &sig).unwrap();
        assert_eq!(
            s.body[0],
            Atom::Rel {
                symbol: "E".into(),
                args: vec![Term::Const("a".into()), Term::Var("y".into())]
            }
        );
        assert_eq!(s.to_string(), "exists y : E(a,y) & E(@2,y)");
        // display round-trips
        let again = parse_sentence(&s.to_string(), &sig).unwrap();
        assert_eq!(s, again);
    }
}
