//! Structure file grammar:
//!
//! ```text
//! domain <n>;
//! rel <Name>/<arity> { t1; t2; ... }    (zero or more)
//! const <name> = <element>;            (zero or more)
//! ```
//!
//! Tuples are space-separated 1-based integers.

use super::{Relation, Signature, Structure};
use crate::error::{Error, Result};
use std::collections::{BTreeMap, BTreeSet};

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor { text, pos: 0, line: 1 }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        let bytes = self.text.as_bytes();
        while self.pos < bytes.len() {
            let b = bytes[self.pos];
            if b == b'\n' {
                self.line += 1;
                self.pos += 1;
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < bytes.len() && bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn eof(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.text.len()
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.text[self.pos..].chars().next()
    }

    fn expect(&mut self, token: char) -> Result<()> {
        match self.peek() {
            Some(c) if c == token => {
                self.pos += c.len_utf8();
                Ok(())
            }
            Some(c) => Err(self.err(format!("expected `{token}`, found `{c}`"))),
            None => Err(self.err(format!("expected `{token}`, found end of input"))),
        }
    }

    fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let len = rest
            .char_indices()
            .take_while(|(_, c)| c.is_alphanumeric() || *c == '_')
            .last()
            .map(|(i, c)| i + c.len_utf8())
            .unwrap_or(0);
        if len == 0 || !rest.chars().next().unwrap().is_alphabetic() {
            return Err(self.err("expected an identifier"));
        }
        self.pos += len;
        Ok(rest[..len].to_string())
    }

    fn number(&mut self) -> Result<u64> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let len = rest.chars().take_while(|c| c.is_ascii_digit()).count();
        if len == 0 {
            return Err(self.err("expected a number"));
        }
        self.pos += len;
        rest[..len]
            .parse()
            .map_err(|_| self.err("number out of range"))
    }

    fn keyword(&mut self) -> Result<String> {
        self.ident()
    }
}

pub fn parse_structure(text: &str) -> Result<Structure> {
    let mut cur = Cursor::new(text);
    let kw = cur.keyword()?;
    if kw != "domain" {
        return Err(cur.err(format!("expected `domain`, found `{kw}`")));
    }
    let n = cur.number()?;
    if n == 0 || n > u32::MAX as u64 {
        return Err(cur.err("domain size must be between 1 and 2^32-1"));
    }
    let n = n as u32;
    cur.expect(';')?;

    let mut relations: BTreeMap<String, Relation> = BTreeMap::new();
    let mut rel_arities: BTreeMap<String, usize> = BTreeMap::new();
    let mut constants: BTreeMap<String, u32> = BTreeMap::new();

    while !cur.eof() {
        let kw = cur.keyword()?;
        match kw.as_str() {
            "rel" => {
                let name = cur.ident()?;
                cur.expect('/')?;
                let arity = cur.number()? as usize;
                if arity == 0 {
                    return Err(cur.err("arity must be at least 1"));
                }
                if rel_arities.contains_key(&name) {
                    return Err(cur.err(format!("relation `{name}` declared twice")));
                }
                cur.expect('{')?;
                let mut rel = Relation::new(arity);
                loop {
                    match cur.peek() {
                        Some('}') => {
                            cur.expect('}')?;
                            break;
                        }
                        Some(';') => {
                            cur.expect(';')?;
                        }
                        Some(c) if c.is_ascii_digit() => {
                            let mut tuple = Vec::with_capacity(arity);
                            for _ in 0..arity {
                                let e = cur.number()?;
                                if e == 0 || e > n as u64 {
                                    return Err(Error::ElementOutOfRange {
                                        element: e,
                                        domain: n,
                                    });
                                }
                                tuple.push(e as u32);
                            }
                            rel.insert(&tuple);
                        }
                        Some(c) => return Err(cur.err(format!("unexpected `{c}` in tuple list"))),
                        None => return Err(cur.err("unterminated tuple list")),
                    }
                }
                rel_arities.insert(name.clone(), arity);
                relations.insert(name, rel);
            }
            "const" => {
                let name = cur.ident()?;
                cur.expect('=')?;
                let e = cur.number()?;
                if e == 0 || e > n as u64 {
                    return Err(Error::ElementOutOfRange {
                        element: e,
                        domain: n,
                    });
                }
                cur.expect(';')?;
                if constants.contains_key(&name) {
                    return Err(cur.err(format!("constant `{name}` declared twice")));
                }
                constants.insert(name, e as u32);
            }
            other => {
                return Err(cur.err(format!(
                    "expected `rel` or `const`, found `{other}`"
                )))
            }
        }
    }

    let signature = Signature {
        relations: rel_arities,
        constants: constants.keys().cloned().collect::<BTreeSet<_>>(),
    };
    let s = Structure {
        signature,
        n,
        relations,
        constants,
    };
    s.validate()?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn parses_the_directed_three_cycle() {
        let s = parse_structure("domain 3; rel E/2 { 1 2; 2 3; 3 1 }").unwrap();
        assert_eq!(s, catalog::dc3());
    }

    #[test]
    fn parses_one_looped_vertex() {
        let s = parse_structure("domain 1; rel E/2 { 1 1 }").unwrap();
        assert_eq!(s.n, 1);
        assert!(s.has_edge(1, 1));
    }

    #[test]
    fn parses_k2() {
        let s = parse_structure("domain 2; rel E/2 { 1 2; 2 1 }").unwrap();
        assert_eq!(s, catalog::k2());
    }

    #[test]
    fn parses_constants() {
        let s = parse_structure("domain 2; rel E/2 { 1 2 } const a = 1; const b = 2;").unwrap();
        assert_eq!(s.constants["a"], 1);
        assert_eq!(s.constants["b"], 2);
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = parse_structure("domain 3;\nrel E/2 { 1 2;\nrel").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn element_out_of_range() {
        let err = parse_structure("domain 2; rel E/2 { 1 3 }").unwrap_err();
        assert!(matches!(err, Error::ElementOutOfRange { element: 3, .. }));
    }

    #[test]
    fn roundtrip_with_serializer() {
        for s in [
            catalog::dc3(),
            catalog::k2(),
            catalog::path("1001").with_all_constants(),
            catalog::transitive_tournament(3),
        ] {
            let text = s.serialize();
            let back = parse_structure(&text).unwrap();
            assert_eq!(s, back, "roundtrip failed for\n{text}");
        }
    }
}
