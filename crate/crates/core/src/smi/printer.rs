//! Canonical SMI rendering of a parsed module. Reparsing the output yields
//! a structurally equal [`MibModule`].

use std::fmt::{self, Write};

use super::ast::*;

fn oid_ref(r: &OidRef) -> String {
    let mut s = String::from("{ ");
    if let Some(p) = &r.parent {
        s.push_str(p);
        s.push(' ');
    }
    for id in &r.sub_ids {
        write!(s, "{id} ").unwrap();
    }
    s.push('}');
    s
}

fn range(r: &Option<Range>, size: bool) -> String {
    match r {
        None => String::new(),
        Some(Range { min, max }) if size => format!(" (SIZE ({min}..{max}))"),
        Some(Range { min, max }) => format!(" ({min}..{max})"),
    }
}

pub fn syntax_text(s: &Syntax) -> String {
    match s {
        Syntax::Integer(r) => format!("Integer32{}", range(r, false)),
        Syntax::Enum(labels) => {
            let items: Vec<String> = labels.iter().map(|(l, n)| format!("{l}({n})")).collect();
            format!("INTEGER {{ {} }}", items.join(", "))
        }
        Syntax::Counter32 => "Counter32".into(),
        Syntax::TimeTicks => "TimeTicks".into(),
        Syntax::OctetString(r) => format!("OCTET STRING{}", range(r, true)),
        Syntax::DisplayString(r) => format!("DisplayString{}", range(r, true)),
        Syntax::ObjectIdentifier => "OBJECT IDENTIFIER".into(),
        Syntax::SequenceOf(e) => format!("SEQUENCE OF {e}"),
        Syntax::Entry(e) | Syntax::TypeRef(e) => e.clone(),
    }
}

impl fmt::Display for MibModule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} DEFINITIONS ::= BEGIN", self.name)?;
        if !self.imports.is_empty() {
            writeln!(f)?;
            writeln!(f, "IMPORTS")?;
            // group consecutive symbols from the same module
            let mut i = 0;
            while i < self.imports.len() {
                let module = &self.imports[i].module;
                let mut j = i;
                let mut symbols = Vec::new();
                while j < self.imports.len() && &self.imports[j].module == module {
                    symbols.push(self.imports[j].symbol.as_str());
                    j += 1;
                }
                writeln!(f, "    {}", symbols.join(", "))?;
                writeln!(f, "        FROM {module}")?;
                i = j;
            }
            writeln!(f, "    ;")?;
        }
        if let Some(id) = &self.identity {
            writeln!(f)?;
            writeln!(f, "{} MODULE-IDENTITY", id.name)?;
            writeln!(f, "    LAST-UPDATED \"{}\"", id.last_updated)?;
            writeln!(f, "    ORGANIZATION \"{}\"", id.organization)?;
            writeln!(f, "    CONTACT-INFO \"{}\"", id.contact_info)?;
            writeln!(f, "    DESCRIPTION \"{}\"", id.description)?;
            for (date, text) in &id.revisions {
                writeln!(f, "    REVISION \"{date}\"")?;
                writeln!(f, "    DESCRIPTION \"{text}\"")?;
            }
            writeln!(f, "    ::= {}", oid_ref(&id.oid))?;
        }
        for tc in &self.textual_conventions {
            writeln!(f)?;
            writeln!(f, "{} ::= TEXTUAL-CONVENTION", tc.name)?;
            if let Some(h) = &tc.display_hint {
                writeln!(f, "    DISPLAY-HINT \"{h}\"")?;
            }
            writeln!(f, "    STATUS {}", tc.status)?;
            writeln!(f, "    DESCRIPTION \"{}\"", tc.description)?;
            writeln!(f, "    SYNTAX {}", syntax_text(&tc.syntax))?;
        }
        for a in &self.assignments {
            writeln!(f)?;
            writeln!(f, "{} OBJECT IDENTIFIER ::= {}", a.name, oid_ref(&a.oid))?;
        }
        for o in &self.object_types {
            writeln!(f)?;
            writeln!(f, "{} OBJECT-TYPE", o.name)?;
            writeln!(f, "    SYNTAX {}", syntax_text(&o.syntax))?;
            writeln!(f, "    MAX-ACCESS {}", o.max_access.keyword())?;
            writeln!(f, "    STATUS {}", o.status)?;
            writeln!(f, "    DESCRIPTION \"{}\"", o.description)?;
            if !o.index.is_empty() {
                writeln!(f, "    INDEX {{ {} }}", o.index.join(", "))?;
            }
            if let Some(t) = &o.augments {
                writeln!(f, "    AUGMENTS {{ {t} }}")?;
            }
            if let Some(oid) = &o.oid {
                writeln!(f, "    ::= {}", oid_ref(oid))?;
            }
        }
        for s in &self.sequences {
            writeln!(f)?;
            writeln!(f, "{} ::= SEQUENCE {{", s.name)?;
            for (i, (name, syn)) in s.fields.iter().enumerate() {
                let sep = if i + 1 < s.fields.len() { "," } else { "" };
                writeln!(f, "    {name} {}{sep}", syntax_text(syn))?;
            }
            writeln!(f, "}}")?;
        }
        for n in &self.notifications {
            writeln!(f)?;
            writeln!(f, "{} NOTIFICATION-TYPE", n.name)?;
            if !n.objects.is_empty() {
                writeln!(f, "    OBJECTS {{ {} }}", n.objects.join(", "))?;
            }
            writeln!(f, "    STATUS {}", n.status)?;
            writeln!(f, "    DESCRIPTION \"{}\"", n.description)?;
            writeln!(f, "    ::= {}", oid_ref(&n.oid))?;
        }
        writeln!(f)?;
        writeln!(f, "END")
    }
}
