//! Parsed (unlinked) SMIv2 module structures.

/// `{ parent 3 1 }` or `{ 1 3 6 }`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OidRef {
    pub parent: Option<String>,
    pub sub_ids: Vec<u32>,
}

impl OidRef {
    pub fn child_of(parent: impl Into<String>, sub_id: u32) -> Self {
        OidRef { parent: Some(parent.into()), sub_ids: vec![sub_id] }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Import {
    pub symbol: String,
    pub module: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Access {
    NotAccessible,
    ReadOnly,
    ReadWrite,
}

impl Access {
    pub fn keyword(self) -> &'static str {
        match self {
            Access::NotAccessible => "not-accessible",
            Access::ReadOnly => "read-only",
            Access::ReadWrite => "read-write",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Range {
    pub min: i64,
    pub max: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Syntax {
    /// `INTEGER` / `Integer32`, optionally range-constrained.
    Integer(Option<Range>),
    /// `INTEGER { label(n), ... }`
    Enum(Vec<(String, i64)>),
    Counter32,
    TimeTicks,
    /// `OCTET STRING`, optionally `(SIZE (a..b))`.
    OctetString(Option<Range>),
    DisplayString(Option<Range>),
    ObjectIdentifier,
    /// Table syntax: `SEQUENCE OF EntryType`.
    SequenceOf(String),
    /// Row syntax: names a `SEQUENCE { ... }` type in the same module.
    Entry(String),
    /// A textual convention or other named type, resolved at link time.
    TypeRef(String),
}

impl Syntax {
    pub fn is_table(&self) -> bool {
        matches!(self, Syntax::SequenceOf(_))
    }

    pub fn is_entry(&self) -> bool {
        matches!(self, Syntax::Entry(_))
    }

    /// Checks an integer against range or enumeration constraints.
    pub fn admits_integer(&self, v: i64) -> bool {
        match self {
            Syntax::Integer(None) => (i32::MIN as i64..=i32::MAX as i64).contains(&v),
            Syntax::Integer(Some(r)) => r.min <= v && v <= r.max,
            Syntax::Enum(labels) => labels.iter().any(|(_, n)| *n == v),
            _ => false,
        }
    }

    pub fn enum_label(&self, v: i64) -> Option<&str> {
        match self {
            Syntax::Enum(labels) => labels.iter().find(|(_, n)| *n == v).map(|(l, _)| l.as_str()),
            _ => None,
        }
    }

    pub fn enum_value(&self, label: &str) -> Option<i64> {
        match self {
            Syntax::Enum(labels) => labels.iter().find(|(l, _)| l == label).map(|(_, n)| *n),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleIdentity {
    pub name: String,
    pub last_updated: String,
    pub organization: String,
    pub contact_info: String,
    pub description: String,
    pub revisions: Vec<(String, String)>,
    pub oid: OidRef,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OidAssignment {
    pub name: String,
    pub oid: OidRef,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectTypeDef {
    pub name: String,
    pub syntax: Syntax,
    pub max_access: Access,
    pub status: String,
    pub description: String,
    pub index: Vec<String>,
    pub augments: Option<String>,
    /// Absent only for an AUGMENTS entry written without `::=`; its OID is
    /// then derived from the owning table during linking.
    pub oid: Option<OidRef>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextualConvention {
    pub name: String,
    pub display_hint: Option<String>,
    pub status: String,
    pub description: String,
    pub syntax: Syntax,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceDef {
    pub name: String,
    pub fields: Vec<(String, Syntax)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NotificationDef {
    pub name: String,
    pub objects: Vec<String>,
    pub status: String,
    pub description: String,
    pub oid: OidRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MibModule {
    pub name: String,
    pub imports: Vec<Import>,
    pub identity: Option<ModuleIdentity>,
    pub assignments: Vec<OidAssignment>,
    pub object_types: Vec<ObjectTypeDef>,
    pub textual_conventions: Vec<TextualConvention>,
    pub sequences: Vec<SequenceDef>,
    pub notifications: Vec<NotificationDef>,
}

impl MibModule {
    pub fn object_type(&self, name: &str) -> Option<&ObjectTypeDef> {
        self.object_types.iter().find(|o| o.name == name)
    }

    /// Every name this module defines, in declaration-kind order.
    pub fn defined_names(&self) -> impl Iterator<Item = &str> {
        self.identity
            .iter()
            .map(|i| i.name.as_str())
            .chain(self.assignments.iter().map(|a| a.name.as_str()))
            .chain(self.object_types.iter().map(|o| o.name.as_str()))
            .chain(self.textual_conventions.iter().map(|t| t.name.as_str()))
            .chain(self.sequences.iter().map(|s| s.name.as_str()))
            .chain(self.notifications.iter().map(|n| n.name.as_str()))
    }

    /// `(object, target)` pairs for every AUGMENTS clause.
    pub fn augments_links(&self) -> Vec<(&str, &str)> {
        self.object_types.iter().filter_map(|o| o.augments.as_deref().map(|t| (o.name.as_str(), t))).collect()
    }
}
