//! Recursive-descent parser for the supported SMIv2 subset.

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;

/// Parses one `MODULE DEFINITIONS ::= BEGIN ... END` unit.
pub fn parse_mib(source: &str) -> Result<MibModule, ParseError> {
    let tokens = tokenize(source)?;
    let mut p = Parser { tokens, pos: 0 };
    let module = p.module()?;
    if let Some(t) = p.peek_token() {
        return Err(ParseError::Syntax {
            line: t.line,
            expected: "end of input".into(),
            found: Some(t.tok.describe()),
        });
    }
    Ok(module)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

const UNSUPPORTED_MACROS: &[&str] = &[
    "OBJECT-GROUP",
    "NOTIFICATION-GROUP",
    "MODULE-COMPLIANCE",
    "AGENT-CAPABILITIES",
    "OBJECT-IDENTITY",
    "TRAP-TYPE",
    "MACRO",
];

const UNSUPPORTED_CLAUSES: &[&str] = &["UNITS", "REFERENCE", "DEFVAL", "ACCESS", "IMPLIED"];

impl Parser {
    fn peek_token(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, off: usize) -> Option<&Tok> {
        self.tokens.get(self.pos + off).map(|t| &t.tok)
    }

    fn line(&self) -> usize {
        self.tokens.get(self.pos).or_else(|| self.tokens.last()).map(|t| t.line).unwrap_or(1)
    }

    fn error(&self, expected: &str) -> ParseError {
        ParseError::Syntax { line: self.line(), expected: expected.to_string(), found: self.peek().map(Tok::describe) }
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&want.describe()))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.is_kw(kw) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(kw))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error(what)),
        }
    }

    fn string(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Str(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error(what)),
        }
    }

    fn number(&mut self, what: &str) -> Result<i64, ParseError> {
        match self.peek() {
            Some(Tok::Number(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(n)
            }
            _ => Err(self.error(what)),
        }
    }

    fn sub_id(&mut self) -> Result<u32, ParseError> {
        let line = self.line();
        let n = self.number("sub-identifier")?;
        u32::try_from(n).map_err(|_| ParseError::Syntax {
            line,
            expected: "sub-identifier in 0..2^32".into(),
            found: Some(n.to_string()),
        })
    }

    fn unsupported(&self, name: &str) -> ParseError {
        ParseError::Unsupported { name: name.to_string(), line: self.line() }
    }

    fn module(&mut self) -> Result<MibModule, ParseError> {
        let name = self.ident("module name")?;
        self.keyword("DEFINITIONS")?;
        self.expect(Tok::Assign)?;
        self.keyword("BEGIN")?;
        let mut m = MibModule { name, ..Default::default() };

        if self.is_kw("IMPORTS") {
            self.pos += 1;
            self.imports(&mut m)?;
        }

        loop {
            match self.peek() {
                None => return Err(self.error("END")),
                Some(Tok::Ident(s)) if s == "END" => {
                    self.pos += 1;
                    break;
                }
                Some(Tok::Ident(s)) if s == "IMPORTS" => return Err(self.unsupported("IMPORTS after definitions")),
                Some(Tok::Ident(_)) => self.definition(&mut m)?,
                _ => return Err(self.error("definition")),
            }
        }

        // A row's SYNTAX names a SEQUENCE type defined in this module.
        let seq_names: Vec<String> = m.sequences.iter().map(|s| s.name.clone()).collect();
        for obj in &mut m.object_types {
            if let Syntax::TypeRef(t) = &obj.syntax {
                if seq_names.contains(t) {
                    obj.syntax = Syntax::Entry(t.clone());
                }
            }
        }
        Ok(m)
    }

    fn imports(&mut self, m: &mut MibModule) -> Result<(), ParseError> {
        let mut pending: Vec<String> = Vec::new();
        loop {
            match self.next() {
                Some(Tok::Semi) => {
                    if pending.is_empty() {
                        return Ok(());
                    }
                    self.pos -= 1;
                    return Err(self.error("FROM"));
                }
                Some(Tok::Comma) => {}
                Some(Tok::Ident(s)) if s == "FROM" => {
                    let module = self.ident("module name after FROM")?;
                    if pending.is_empty() {
                        return Err(self.error("imported symbol"));
                    }
                    for symbol in pending.drain(..) {
                        m.imports.push(Import { symbol, module: module.clone() });
                    }
                }
                Some(Tok::Ident(s)) => pending.push(s),
                _ => {
                    self.pos -= 1;
                    return Err(self.error("imported symbol, FROM or ;"));
                }
            }
        }
    }

    fn definition(&mut self, m: &mut MibModule) -> Result<(), ParseError> {
        let start_line = self.line();
        let name = self.ident("definition name")?;
        match self.peek().cloned() {
            Some(Tok::Ident(kw)) => match kw.as_str() {
                "MODULE-IDENTITY" => {
                    self.pos += 1;
                    if m.identity.is_some() {
                        return Err(ParseError::Syntax {
                            line: start_line,
                            expected: "a single MODULE-IDENTITY".into(),
                            found: Some(name),
                        });
                    }
                    let identity = self.module_identity(name)?;
                    m.identity = Some(identity);
                }
                "OBJECT" => {
                    self.pos += 1;
                    self.keyword("IDENTIFIER")?;
                    self.expect(Tok::Assign)?;
                    let oid = self.oid_value()?;
                    m.assignments.push(OidAssignment { name, oid });
                }
                "OBJECT-TYPE" => {
                    self.pos += 1;
                    let obj = self.object_type(name)?;
                    m.object_types.push(obj);
                }
                "NOTIFICATION-TYPE" => {
                    self.pos += 1;
                    let n = self.notification(name)?;
                    m.notifications.push(n);
                }
                other if UNSUPPORTED_MACROS.contains(&other) => return Err(self.unsupported(other)),
                _ => return Err(self.error("MODULE-IDENTITY, OBJECT IDENTIFIER, OBJECT-TYPE or NOTIFICATION-TYPE")),
            },
            Some(Tok::Assign) => {
                self.pos += 1;
                if self.is_kw("TEXTUAL-CONVENTION") {
                    self.pos += 1;
                    let tc = self.textual_convention(name)?;
                    m.textual_conventions.push(tc);
                } else if self.is_kw("SEQUENCE") && self.peek_at(1) == Some(&Tok::LBrace) {
                    self.pos += 1;
                    let seq = self.sequence(name)?;
                    m.sequences.push(seq);
                } else if self.is_kw("MACRO") {
                    return Err(self.unsupported("MACRO"));
                } else {
                    return Err(self.unsupported("type assignment"));
                }
            }
            _ => return Err(self.error("definition body")),
        }
        Ok(())
    }

    fn module_identity(&mut self, name: String) -> Result<ModuleIdentity, ParseError> {
        self.keyword("LAST-UPDATED")?;
        let last_updated = self.string("LAST-UPDATED value")?;
        self.keyword("ORGANIZATION")?;
        let organization = self.string("ORGANIZATION value")?;
        self.keyword("CONTACT-INFO")?;
        let contact_info = self.string("CONTACT-INFO value")?;
        self.keyword("DESCRIPTION")?;
        let description = self.string("DESCRIPTION value")?;
        let mut revisions = Vec::new();
        while self.is_kw("REVISION") {
            self.pos += 1;
            let date = self.string("REVISION value")?;
            self.keyword("DESCRIPTION")?;
            let text = self.string("DESCRIPTION value")?;
            revisions.push((date, text));
        }
        self.expect(Tok::Assign)?;
        let oid = self.oid_value()?;
        Ok(ModuleIdentity { name, last_updated, organization, contact_info, description, revisions, oid })
    }

    fn object_type(&mut self, name: String) -> Result<ObjectTypeDef, ParseError> {
        self.keyword("SYNTAX")?;
        let syntax = self.syntax()?;
        self.reject_clause()?;
        self.keyword("MAX-ACCESS")?;
        let access_line = self.line();
        let max_access = match self.ident("access keyword")?.as_str() {
            "not-accessible" => Access::NotAccessible,
            "read-only" => Access::ReadOnly,
            "read-write" => Access::ReadWrite,
            other => {
                return Err(ParseError::Syntax {
                    line: access_line,
                    expected: "not-accessible, read-only or read-write".into(),
                    found: Some(other.to_string()),
                })
            }
        };
        self.keyword("STATUS")?;
        let status = self.ident("status keyword")?;
        self.keyword("DESCRIPTION")?;
        let description = self.string("DESCRIPTION value")?;

        let mut index = Vec::new();
        let mut augments = None;
        loop {
            self.reject_clause()?;
            if self.is_kw("INDEX") {
                self.pos += 1;
                index = self.name_list()?;
            } else if self.is_kw("AUGMENTS") {
                self.pos += 1;
                self.expect(Tok::LBrace)?;
                augments = Some(self.ident("augmented entry name")?);
                self.expect(Tok::RBrace)?;
            } else {
                break;
            }
        }
        let oid = if self.peek() == Some(&Tok::Assign) {
            self.pos += 1;
            Some(self.oid_value()?)
        } else if augments.is_some() {
            None
        } else {
            return Err(self.error("::="));
        };
        Ok(ObjectTypeDef { name, syntax, max_access, status, description, index, augments, oid })
    }

    fn reject_clause(&self) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) if UNSUPPORTED_CLAUSES.contains(&s.as_str()) => Err(self.unsupported(s)),
            _ => Ok(()),
        }
    }

    fn notification(&mut self, name: String) -> Result<NotificationDef, ParseError> {
        let objects = if self.is_kw("OBJECTS") {
            self.pos += 1;
            self.name_list()?
        } else {
            Vec::new()
        };
        self.keyword("STATUS")?;
        let status = self.ident("status keyword")?;
        self.keyword("DESCRIPTION")?;
        let description = self.string("DESCRIPTION value")?;
        self.reject_clause()?;
        self.expect(Tok::Assign)?;
        let oid = self.oid_value()?;
        Ok(NotificationDef { name, objects, status, description, oid })
    }

    fn textual_convention(&mut self, name: String) -> Result<TextualConvention, ParseError> {
        let display_hint = if self.is_kw("DISPLAY-HINT") {
            self.pos += 1;
            Some(self.string("DISPLAY-HINT value")?)
        } else {
            None
        };
        self.keyword("STATUS")?;
        let status = self.ident("status keyword")?;
        self.keyword("DESCRIPTION")?;
        let description = self.string("DESCRIPTION value")?;
        self.reject_clause()?;
        self.keyword("SYNTAX")?;
        let syntax = self.syntax()?;
        Ok(TextualConvention { name, display_hint, status, description, syntax })
    }

    fn sequence(&mut self, name: String) -> Result<SequenceDef, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut fields = Vec::new();
        loop {
            let field = self.ident("SEQUENCE field name")?;
            let syntax = self.syntax()?;
            fields.push((field, syntax));
            match self.next() {
                Some(Tok::Comma) => continue,
                Some(Tok::RBrace) => break,
                _ => {
                    self.pos -= 1;
                    return Err(self.error(", or }"));
                }
            }
        }
        Ok(SequenceDef { name, fields })
    }

    fn name_list(&mut self) -> Result<Vec<String>, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut names = Vec::new();
        loop {
            if self.is_kw("IMPLIED") {
                return Err(self.unsupported("IMPLIED"));
            }
            names.push(self.ident("name")?);
            match self.next() {
                Some(Tok::Comma) => continue,
                Some(Tok::RBrace) => break,
                _ => {
                    self.pos -= 1;
                    return Err(self.error(", or }"));
                }
            }
        }
        Ok(names)
    }

    fn oid_value(&mut self) -> Result<OidRef, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut parent = None;
        let mut sub_ids = Vec::new();
        if let Some(Tok::Ident(_)) = self.peek() {
            let first = self.ident("parent name")?;
            if self.peek() == Some(&Tok::LParen) {
                // name(number) form carries its own value
                self.pos += 1;
                sub_ids.push(self.sub_id()?);
                self.expect(Tok::RParen)?;
            } else {
                parent = Some(first);
            }
        }
        loop {
            match self.peek() {
                Some(Tok::RBrace) => {
                    if sub_ids.is_empty() {
                        return Err(self.error("at least one sub-identifier"));
                    }
                    self.pos += 1;
                    break;
                }
                Some(Tok::Number(_)) => sub_ids.push(self.sub_id()?),
                Some(Tok::Ident(_)) => {
                    self.pos += 1;
                    self.expect(Tok::LParen)?;
                    sub_ids.push(self.sub_id()?);
                    self.expect(Tok::RParen)?;
                }
                _ => return Err(self.error("sub-identifier or }")),
            }
        }
        Ok(OidRef { parent, sub_ids })
    }

    fn range(&mut self) -> Result<Range, ParseError> {
        let min = self.number("range bound")?;
        let max = if self.peek() == Some(&Tok::DotDot) {
            self.pos += 1;
            self.number("range upper bound")?
        } else {
            min
        };
        if self.peek() == Some(&Tok::Pipe) {
            return Err(self.unsupported("multi-range constraint"));
        }
        if max < min {
            return Err(self.error("ascending range"));
        }
        Ok(Range { min, max })
    }

    fn value_range(&mut self) -> Result<Option<Range>, ParseError> {
        if self.peek() != Some(&Tok::LParen) {
            return Ok(None);
        }
        self.pos += 1;
        let r = self.range()?;
        self.expect(Tok::RParen)?;
        Ok(Some(r))
    }

    fn size_range(&mut self) -> Result<Option<Range>, ParseError> {
        if self.peek() != Some(&Tok::LParen) {
            return Ok(None);
        }
        self.pos += 1;
        self.keyword("SIZE")?;
        self.expect(Tok::LParen)?;
        let r = self.range()?;
        self.expect(Tok::RParen)?;
        self.expect(Tok::RParen)?;
        Ok(Some(r))
    }

    fn syntax(&mut self) -> Result<Syntax, ParseError> {
        let word = self.ident("type")?;
        match word.as_str() {
            "INTEGER" => {
                if self.peek() == Some(&Tok::LBrace) {
                    self.pos += 1;
                    let mut labels = Vec::new();
                    loop {
                        let label = self.ident("enumeration label")?;
                        self.expect(Tok::LParen)?;
                        let n = self.number("enumeration value")?;
                        self.expect(Tok::RParen)?;
                        labels.push((label, n));
                        match self.next() {
                            Some(Tok::Comma) => continue,
                            Some(Tok::RBrace) => break,
                            _ => {
                                self.pos -= 1;
                                return Err(self.error(", or }"));
                            }
                        }
                    }
                    Ok(Syntax::Enum(labels))
                } else {
                    Ok(Syntax::Integer(self.value_range()?))
                }
            }
            "Integer32" => Ok(Syntax::Integer(self.value_range()?)),
            "Counter32" => Ok(Syntax::Counter32),
            "TimeTicks" => Ok(Syntax::TimeTicks),
            "OCTET" => {
                self.keyword("STRING")?;
                Ok(Syntax::OctetString(self.size_range()?))
            }
            "DisplayString" => Ok(Syntax::DisplayString(self.size_range()?)),
            "OBJECT" => {
                self.keyword("IDENTIFIER")?;
                Ok(Syntax::ObjectIdentifier)
            }
            "SEQUENCE" => {
                self.keyword("OF")?;
                Ok(Syntax::SequenceOf(self.ident("entry type")?))
            }
            "Gauge32" | "Unsigned32" | "Counter64" | "IpAddress" | "Opaque" | "BITS" | "BIT" | "CHOICE" => {
                self.pos -= 1;
                Err(self.unsupported(&word))
            }
            _ => {
                if self.peek() == Some(&Tok::LParen) {
                    return Err(self.unsupported("constrained type reference"));
                }
                Ok(Syntax::TypeRef(word))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
EMPTY-MIB DEFINITIONS ::= BEGIN
IMPORTS MODULE-IDENTITY, enterprises FROM SNMPv2-SMI;
emptyMIB MODULE-IDENTITY
    LAST-UPDATED "200701010000Z"
    ORGANIZATION "none"
    CONTACT-INFO "none"
    DESCRIPTION "nothing here"
    ::= { enterprises 99999 }
END
"#;

    #[test]
    fn identity_only_module() {
        let m = parse_mib(MINIMAL).unwrap();
        assert_eq!(m.name, "EMPTY-MIB");
        assert!(m.object_types.is_empty());
        assert_eq!(m.imports.len(), 2);
        assert_eq!(m.identity.unwrap().oid, OidRef::child_of("enterprises", 99999));
    }

    #[test]
    fn dangling_augments_parses() {
        let src = r#"
X-MIB DEFINITIONS ::= BEGIN
t OBJECT-TYPE SYNTAX SEQUENCE OF E MAX-ACCESS not-accessible STATUS current DESCRIPTION "" ::= { x 1 }
e OBJECT-TYPE SYNTAX E MAX-ACCESS not-accessible STATUS current DESCRIPTION ""
    AUGMENTS { missingEntry } ::= { t 1 }
E ::= SEQUENCE { c INTEGER }
x OBJECT IDENTIFIER ::= { enterprises 1 }
END"#;
        let m = parse_mib(src).unwrap();
        assert_eq!(m.augments_links(), vec![("e", "missingEntry")]);
        assert_eq!(m.object_type("e").unwrap().syntax, Syntax::Entry("E".into()));
    }

    #[test]
    fn errors_name_line_and_construct() {
        let src = "A DEFINITIONS ::= BEGIN\nfoo OBJECT-GROUP\n OBJECTS { a }\nEND";
        assert_eq!(parse_mib(src), Err(ParseError::Unsupported { name: "OBJECT-GROUP".into(), line: 2 }));
        let src = "A DEFINITIONS ::= BEGIN\nx OBJECT-TYPE\n SYNTAX INTEGER\n UNITS \"s\"\nEND";
        assert_eq!(parse_mib(src), Err(ParseError::Unsupported { name: "UNITS".into(), line: 4 }));
        let src = "A DEFINITIONS ::= BEGIN\nx OBJECT-TYPE SYNTAX Gauge32\nEND";
        assert_eq!(parse_mib(src), Err(ParseError::Unsupported { name: "Gauge32".into(), line: 2 }));
        let src = "A DEFINITIONS ::= BEGIN\nx OBJECT IDENTIFIER ::= { y }\nEND";
        assert!(matches!(parse_mib(src), Err(ParseError::Syntax { line: 2, .. })));
        let src = "A DEFINITIONS ::= BEGIN\nx OBJECT IDENTIFIER ::= { y 1 }\n";
        assert!(matches!(parse_mib(src), Err(ParseError::Syntax { ref expected, .. }) if expected == "END"));
    }

    #[test]
    fn syntax_forms() {
        let src = r#"
S DEFINITIONS ::= BEGIN
a OBJECT-TYPE SYNTAX INTEGER { up(1), down(2) } MAX-ACCESS read-only STATUS current DESCRIPTION "" ::= { r 1 }
b OBJECT-TYPE SYNTAX Integer32 (1..64) MAX-ACCESS read-write STATUS current DESCRIPTION "" ::= { r 2 }
c OBJECT-TYPE SYNTAX OCTET STRING (SIZE (0..255)) MAX-ACCESS read-only STATUS current DESCRIPTION "" ::= { r 3 }
d OBJECT-TYPE SYNTAX DisplayString MAX-ACCESS read-only STATUS current DESCRIPTION "" ::= { r 4 }
e OBJECT-TYPE SYNTAX OBJECT IDENTIFIER MAX-ACCESS read-only STATUS current DESCRIPTION "" ::= { r 5 }
f OBJECT-TYPE SYNTAX TruthValue MAX-ACCESS read-only STATUS current DESCRIPTION "" ::= { r 6 }
r OBJECT IDENTIFIER ::= { iso(1) org(3) 6 }
END"#;
        let m = parse_mib(src).unwrap();
        let syn: Vec<_> = m.object_types.iter().map(|o| o.syntax.clone()).collect();
        assert_eq!(
            syn,
            vec![
                Syntax::Enum(vec![("up".into(), 1), ("down".into(), 2)]),
                Syntax::Integer(Some(Range { min: 1, max: 64 })),
                Syntax::OctetString(Some(Range { min: 0, max: 255 })),
                Syntax::DisplayString(None),
                Syntax::ObjectIdentifier,
                Syntax::TypeRef("TruthValue".into()),
            ]
        );
        assert_eq!(m.assignments[0].oid, OidRef { parent: None, sub_ids: vec![1, 3, 6] });
    }
}
