//! Linking: import checking, OID assignment and textual-convention
//! resolution across a set of parsed modules.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::oid::Oid;

use super::ast::*;
use super::{LinkError, LookupError};

/// Name of the synthetic modules that provide the SMI core.
const CORE_MODULES: &[&str] = &["SNMPv2-SMI", "SNMPv2-TC", "SNMPv2-CONF"];

const CORE_OIDS: &[(&str, &[u32])] = &[
    ("iso", &[1]),
    ("org", &[1, 3]),
    ("dod", &[1, 3, 6]),
    ("internet", &[1, 3, 6, 1]),
    ("directory", &[1, 3, 6, 1, 1]),
    ("mgmt", &[1, 3, 6, 1, 2]),
    ("mib-2", &[1, 3, 6, 1, 2, 1]),
    ("system", &[1, 3, 6, 1, 2, 1, 1]),
    ("sysUpTime", &[1, 3, 6, 1, 2, 1, 1, 3]),
    ("experimental", &[1, 3, 6, 1, 3]),
    ("private", &[1, 3, 6, 1, 4]),
    ("enterprises", &[1, 3, 6, 1, 4, 1]),
    ("security", &[1, 3, 6, 1, 5]),
    ("snmpV2", &[1, 3, 6, 1, 6]),
    ("snmpDomains", &[1, 3, 6, 1, 6, 1]),
    ("snmpProxys", &[1, 3, 6, 1, 6, 2]),
    ("snmpModules", &[1, 3, 6, 1, 6, 3]),
    ("snmpTrapOID", &[1, 3, 6, 1, 6, 3, 1, 1, 4, 1]),
    ("zeroDotZero", &[0, 0]),
];

const CORE_SYMBOLS: &[&str] = &[
    "MODULE-IDENTITY",
    "OBJECT-TYPE",
    "NOTIFICATION-TYPE",
    "OBJECT-IDENTITY",
    "Integer32",
    "Counter32",
    "Gauge32",
    "Unsigned32",
    "TimeTicks",
    "Counter64",
    "IpAddress",
    "Opaque",
    "TEXTUAL-CONVENTION",
    "DisplayString",
    "TruthValue",
    "OBJECT-GROUP",
    "NOTIFICATION-GROUP",
    "MODULE-COMPLIANCE",
];

fn core_type(name: &str) -> Option<Syntax> {
    Some(match name {
        "DisplayString" => Syntax::DisplayString(None),
        "TruthValue" => Syntax::Enum(vec![("true".into(), 1), ("false".into(), 2)]),
        "Integer32" => Syntax::Integer(None),
        "Counter32" => Syntax::Counter32,
        "TimeTicks" => Syntax::TimeTicks,
        _ => return None,
    })
}

fn is_core_symbol(name: &str) -> bool {
    CORE_SYMBOLS.contains(&name) || CORE_OIDS.iter().any(|(n, _)| *n == name)
}

// a registry holds a few hundred nodes; boxing the large variant buys nothing
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Core,
    ModuleIdentity,
    Assignment,
    /// An OBJECT-TYPE. `syntax` has textual conventions expanded.
    Object {
        def: ObjectTypeDef,
        syntax: Syntax,
    },
    Notification {
        objects: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MibNode {
    pub module: String,
    pub name: String,
    pub oid: Oid,
    pub kind: NodeKind,
}

impl MibNode {
    pub fn object(&self) -> Option<(&ObjectTypeDef, &Syntax)> {
        match &self.kind {
            NodeKind::Object { def, syntax } => Some((def, syntax)),
            _ => None,
        }
    }

    /// Module-qualified name, `MODULE::name`.
    pub fn qualified_name(&self) -> String {
        format!("{}::{}", self.module, self.name)
    }
}

/// Frozen result of linking: every named node with its resolved OID.
#[derive(Debug, Clone)]
pub struct MibRegistry {
    modules: Vec<MibModule>,
    nodes: Vec<MibNode>,
    by_oid: BTreeMap<Oid, usize>,
    by_name: HashMap<String, Vec<usize>>,
    /// (module, name) -> node for names defined in or imported into a module
    scope: HashMap<(String, String), usize>,
}

impl MibRegistry {
    pub fn modules(&self) -> &[MibModule] {
        &self.modules
    }

    pub fn module(&self, name: &str) -> Option<&MibModule> {
        self.modules.iter().find(|m| m.name == name)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &MibNode> {
        self.by_oid.values().map(|&i| &self.nodes[i])
    }

    pub fn node_at(&self, oid: &Oid) -> Option<&MibNode> {
        self.by_oid.get(oid).map(|&i| &self.nodes[i])
    }

    /// Looks `name` up the way references inside `module` see it.
    pub fn lookup_in(&self, module: &str, name: &str) -> Option<&MibNode> {
        self.scope.get(&(module.to_string(), name.to_string())).map(|&i| &self.nodes[i])
    }

    /// Resolves `name` or `MODULE::name`.
    pub fn node(&self, name: &str) -> Result<&MibNode, LookupError> {
        if let Some((module, local)) = name.split_once("::") {
            return self
                .nodes
                .iter()
                .find(|n| n.module == module && n.name == local)
                .ok_or_else(|| LookupError::UnknownName(name.to_string()));
        }
        match self.by_name.get(name).map(Vec::as_slice) {
            None | Some([]) => Err(LookupError::UnknownName(name.to_string())),
            Some([one]) => Ok(&self.nodes[*one]),
            Some(many) => Err(LookupError::AmbiguousName {
                name: name.to_string(),
                modules: many.iter().map(|&i| self.nodes[i].module.clone()).collect(),
            }),
        }
    }

    pub fn oid_of(&self, name: &str) -> Result<Oid, LookupError> {
        self.node(name).map(|n| n.oid.clone())
    }

    fn display_name(&self, idx: usize) -> String {
        let n = &self.nodes[idx];
        if self.by_name.get(&n.name).is_some_and(|v| v.len() > 1) {
            n.qualified_name()
        } else {
            n.name.clone()
        }
    }

    /// Exact name for a registered OID, otherwise the longest registered
    /// prefix plus the dotted residue (`serviceName.1`). Falls back to the
    /// numeric form when no prefix is registered.
    pub fn name_of(&self, oid: &Oid) -> String {
        let s = oid.as_slice();
        for len in (2..=s.len()).rev() {
            let Ok(prefix) = Oid::from_slice(&s[..len]) else { continue };
            if let Some(&idx) = self.by_oid.get(&prefix) {
                let mut out = self.display_name(idx);
                for sub in &s[len..] {
                    out.push('.');
                    out.push_str(&sub.to_string());
                }
                return out;
            }
        }
        oid.to_string()
    }

    /// Parses a dotted OID, a symbolic name, or a name with a numeric
    /// instance suffix (`serviceName.1`, `MARF-services::serviceName.1`).
    pub fn parse_oid(&self, text: &str) -> Result<Oid, LookupError> {
        let text = text.trim();
        if text.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
            return text.parse().map_err(|_| LookupError::UnknownName(text.to_string()));
        }
        let (head, rest) = match text.find('.') {
            Some(i) => (&text[..i], &text[i + 1..]),
            None => (text, ""),
        };
        let base = self.oid_of(head)?;
        if rest.is_empty() {
            return Ok(base);
        }
        let suffix = rest
            .split('.')
            .map(|p| p.parse::<u32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| LookupError::UnknownName(text.to_string()))?;
        Ok(base.extend(&suffix))
    }
}

struct Linker<'a> {
    modules: &'a [MibModule],
    module_index: HashMap<&'a str, usize>,
    resolved: HashMap<(String, String), Vec<u32>>,
}

/// Where a name visible inside a module is actually defined.
enum Target<'a> {
    Local(&'a MibModule),
    Core,
}

impl<'a> Linker<'a> {
    /// Follows imports to the defining module.
    fn locate(&self, module: &'a MibModule, name: &str) -> Option<(Target<'a>, &'a str)> {
        let mut current = module;
        let mut seen = HashSet::new();
        loop {
            if !seen.insert(current.name.clone()) {
                return None;
            }
            if current.defined_names().any(|n| n == name) {
                return Some((Target::Local(current), current.name.as_str()));
            }
            match current.imports.iter().find(|i| i.symbol == name) {
                Some(imp) if CORE_MODULES.contains(&imp.module.as_str()) => {
                    return Some((Target::Core, imp.module.as_str()))
                }
                Some(imp) => current = &self.modules[*self.module_index.get(imp.module.as_str())?],
                None => {
                    // core OID roots are visible without an explicit import
                    return if CORE_OIDS.iter().any(|(n, _)| *n == name) {
                        Some((Target::Core, "SNMPv2-SMI"))
                    } else {
                        None
                    };
                }
            }
        }
    }

    fn resolve(&mut self, module: &'a MibModule, name: &str, stack: &mut Vec<String>) -> Result<Vec<u32>, LinkError> {
        let (target, _) = self
            .locate(module, name)
            .ok_or_else(|| LinkError::UnresolvedName { name: name.to_string(), module: module.name.clone() })?;
        let def_module =
            match target {
                Target::Core => {
                    return CORE_OIDS.iter().find(|(n, _)| *n == name).map(|(_, v)| v.to_vec()).ok_or_else(|| {
                        LinkError::UnresolvedName { name: name.to_string(), module: module.name.clone() }
                    })
                }
                Target::Local(m) => m,
            };
        let key = (def_module.name.clone(), name.to_string());
        if let Some(v) = self.resolved.get(&key) {
            return Ok(v.clone());
        }
        let label = format!("{}::{}", def_module.name, name);
        if let Some(pos) = stack.iter().position(|s| *s == label) {
            let names = stack[pos..].iter().map(|s| s.split("::").nth(1).unwrap_or(s).to_string()).collect();
            return Err(LinkError::CycleDetected(names));
        }
        stack.push(label);
        let oid_ref = find_oid_ref(def_module, name);
        let value = match oid_ref {
            OidSource::Ref(r) => {
                let mut base = match &r.parent {
                    Some(p) => self.resolve(def_module, p, stack)?,
                    None => Vec::new(),
                };
                base.extend_from_slice(&r.sub_ids);
                base
            }
            OidSource::AugmentsEntry(table) => {
                let mut base = self.resolve(def_module, &table, stack)?;
                base.push(1);
                base
            }
            OidSource::NotANode => {
                stack.pop();
                return Err(LinkError::NotAnOid { name: name.to_string(), module: def_module.name.clone() });
            }
            OidSource::Orphan => {
                stack.pop();
                return Err(LinkError::OrphanEntry { name: name.to_string(), module: def_module.name.clone() });
            }
        };
        stack.pop();
        self.resolved.insert(key, value.clone());
        Ok(value)
    }

    fn resolve_syntax(&self, module: &'a MibModule, syntax: &Syntax, depth: usize) -> Result<Syntax, LinkError> {
        let Syntax::TypeRef(name) = syntax else {
            return Ok(syntax.clone());
        };
        let unresolved = || LinkError::UnresolvedType { name: name.clone(), module: module.name.clone() };
        if depth > 16 {
            return Err(unresolved());
        }
        match self.locate(module, name) {
            Some((Target::Local(m), _)) => {
                let tc = m.textual_conventions.iter().find(|t| &t.name == name).ok_or_else(unresolved)?;
                self.resolve_syntax(m, &tc.syntax, depth + 1)
            }
            Some((Target::Core, _)) => core_type(name).ok_or_else(unresolved),
            None => core_type(name).ok_or_else(unresolved),
        }
    }
}

enum OidSource<'m> {
    Ref(&'m OidRef),
    AugmentsEntry(String),
    NotANode,
    Orphan,
}

fn find_oid_ref<'m>(m: &'m MibModule, name: &str) -> OidSource<'m> {
    if let Some(id) = m.identity.as_ref().filter(|i| i.name == name) {
        return OidSource::Ref(&id.oid);
    }
    if let Some(a) = m.assignments.iter().find(|a| a.name == name) {
        return OidSource::Ref(&a.oid);
    }
    if let Some(n) = m.notifications.iter().find(|n| n.name == name) {
        return OidSource::Ref(&n.oid);
    }
    if let Some(o) = m.object_type(name) {
        return match (&o.oid, &o.syntax) {
            (Some(r), _) => OidSource::Ref(r),
            (None, Syntax::Entry(row_type)) => {
                // an AUGMENTS row without ::= sits at <table>.1
                match m.object_types.iter().find(|t| t.syntax == Syntax::SequenceOf(row_type.clone())) {
                    Some(t) => OidSource::AugmentsEntry(t.name.clone()),
                    None => OidSource::Orphan,
                }
            }
            (None, _) => OidSource::Orphan,
        };
    }
    OidSource::NotANode
}

/// Links `modules` against each other and the built-in SMI core.
pub fn link_modules(modules: Vec<MibModule>) -> Result<MibRegistry, LinkError> {
    let mut module_index = HashMap::new();
    for (i, m) in modules.iter().enumerate() {
        if module_index.insert(m.name.as_str(), i).is_some() {
            return Err(LinkError::DuplicateModule(m.name.clone()));
        }
        let mut seen = HashSet::new();
        for n in m.defined_names() {
            if !seen.insert(n) {
                return Err(LinkError::DuplicateDefinition { name: n.to_string(), module: m.name.clone() });
            }
        }
    }

    // imports
    for m in &modules {
        for imp in &m.imports {
            let ok = if CORE_MODULES.contains(&imp.module.as_str()) {
                is_core_symbol(&imp.symbol)
            } else {
                module_index.get(imp.module.as_str()).map(|&i| &modules[i]).is_some_and(|src| {
                    src.defined_names().any(|n| n == imp.symbol) || src.imports.iter().any(|i| i.symbol == imp.symbol)
                })
            };
            if !ok {
                return Err(LinkError::UnresolvedImport { symbol: imp.symbol.clone(), module: imp.module.clone() });
            }
        }
    }

    let mut linker = Linker { modules: &modules, module_index: module_index.clone(), resolved: HashMap::new() };

    let mut nodes: Vec<MibNode> = Vec::new();
    for (name, v) in CORE_OIDS {
        if v.len() >= 2 {
            nodes.push(MibNode {
                module: "SNMPv2-SMI".into(),
                name: name.to_string(),
                oid: Oid::from_slice(v).expect("core oid"),
                kind: NodeKind::Core,
            });
        }
    }

    for m in &modules {
        let mut named: Vec<(String, NodeKind)> = Vec::new();
        if let Some(id) = &m.identity {
            named.push((id.name.clone(), NodeKind::ModuleIdentity));
        }
        for a in &m.assignments {
            named.push((a.name.clone(), NodeKind::Assignment));
        }
        for o in &m.object_types {
            let syntax = linker.resolve_syntax(m, &o.syntax, 0)?;
            named.push((o.name.clone(), NodeKind::Object { def: o.clone(), syntax }));
        }
        for n in &m.notifications {
            named.push((n.name.clone(), NodeKind::Notification { objects: n.objects.clone() }));
        }
        for tc in &m.textual_conventions {
            linker.resolve_syntax(m, &tc.syntax, 0)?;
        }
        for (name, kind) in named {
            let mut stack = Vec::new();
            let raw = linker.resolve(m, &name, &mut stack)?;
            let oid = Oid::new(raw.clone()).map_err(|_| LinkError::InvalidOid {
                name: name.clone(),
                oid: raw.iter().map(u32::to_string).collect::<Vec<_>>().join("."),
            })?;
            nodes.push(MibNode { module: m.name.clone(), name, oid, kind });
        }
    }

    let mut by_oid = BTreeMap::new();
    let mut by_name: HashMap<String, Vec<usize>> = HashMap::new();
    for (i, n) in nodes.iter().enumerate() {
        if let Some(&prev) = by_oid.get(&n.oid) {
            let p: &MibNode = &nodes[prev];
            return Err(LinkError::DuplicateOid { oid: n.oid.clone(), first: p.name.clone(), second: n.name.clone() });
        }
        by_oid.insert(n.oid.clone(), i);
        by_name.entry(n.name.clone()).or_default().push(i);
    }

    let node_index: HashMap<(&str, &str), usize> =
        nodes.iter().enumerate().map(|(i, n)| ((n.module.as_str(), n.name.as_str()), i)).collect();
    let mut scope = HashMap::new();
    for m in &modules {
        let names: Vec<&str> = m.defined_names().chain(m.imports.iter().map(|i| i.symbol.as_str())).collect();
        for name in names.into_iter().chain(CORE_OIDS.iter().map(|(n, _)| *n)) {
            let module_name = match linker.locate(m, name) {
                Some((Target::Local(d), _)) => d.name.as_str(),
                Some((Target::Core, _)) => "SNMPv2-SMI",
                None => continue,
            };
            if let Some(&idx) = node_index.get(&(module_name, name)) {
                scope.insert((m.name.clone(), name.to_string()), idx);
            }
        }
    }

    Ok(MibRegistry { modules, nodes, by_oid, by_name, scope })
}
