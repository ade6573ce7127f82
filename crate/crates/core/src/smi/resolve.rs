//! Table discovery and AUGMENTS flattening.

use std::collections::HashSet;

use crate::oid::Oid;

use super::ast::{Access, ObjectTypeDef, Syntax};
use super::link::{MibNode, MibRegistry};
use super::ResolveError;

/// How AUGMENTS relationships are validated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    /// Rejects a row that AUGMENTS a row which itself AUGMENTS another, and
    /// AUGMENTS written on a table object.
    Strict,
    /// Accepts chains of any depth; AUGMENTS on a table is a warning.
    #[default]
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnDef {
    pub name: String,
    pub module: String,
    pub oid: Oid,
    pub sub_id: u32,
    pub syntax: Syntax,
    pub access: Access,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedTable {
    pub name: String,
    pub module: String,
    pub table_oid: Oid,
    pub entry_name: String,
    pub entry_oid: Oid,
    /// Row names from the ultimate base down to this table's own row.
    pub chain: Vec<String>,
    pub index_columns: Vec<ColumnDef>,
    pub own_columns: Vec<ColumnDef>,
    /// Columns of every row in the chain, base first.
    pub effective_columns: Vec<ColumnDef>,
}

impl ResolvedTable {
    pub fn column(&self, name: &str) -> Option<&ColumnDef> {
        self.effective_columns.iter().find(|c| c.name == name)
    }

    /// The effective column whose OID prefixes `oid`, with the instance suffix.
    pub fn column_for<'a>(&self, oid: &'a Oid) -> Option<(&ColumnDef, &'a [u32])> {
        self.effective_columns.iter().find_map(|c| oid.suffix_after(&c.oid).map(|rest| (c, rest)))
    }

    pub fn is_augmenting(&self) -> bool {
        self.chain.len() > 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolution {
    pub tables: Vec<ResolvedTable>,
    pub warnings: Vec<String>,
}

struct Row<'r> {
    table: &'r MibNode,
    entry: &'r MibNode,
    def: &'r ObjectTypeDef,
    augments: Option<String>,
}

fn columns_of(reg: &MibRegistry, entry: &MibNode) -> Vec<ColumnDef> {
    let mut cols: Vec<ColumnDef> = reg
        .nodes()
        .filter(|n| n.oid.len() == entry.oid.len() + 1 && n.oid.starts_with(&entry.oid))
        .filter_map(|n| {
            let (def, syntax) = n.object()?;
            Some(ColumnDef {
                name: n.name.clone(),
                module: n.module.clone(),
                oid: n.oid.clone(),
                sub_id: *n.oid.as_slice().last().unwrap(),
                syntax: syntax.clone(),
                access: def.max_access,
            })
        })
        .collect();
    cols.sort_by_key(|c| c.sub_id);
    cols
}

fn find_row<'r>(rows: &'r [Row<'r>], module: &str, name: &str, reg: &MibRegistry) -> Option<usize> {
    let node = reg.lookup_in(module, name)?;
    rows.iter().position(|r| r.entry.oid == node.oid)
}

/// Finds every table, follows AUGMENTS chains to their base row, and
/// computes index and effective columns.
pub fn resolve_augments(reg: &MibRegistry, strictness: Strictness) -> Result<Resolution, ResolveError> {
    let mut warnings = Vec::new();

    let tables: Vec<&MibNode> = reg.nodes().filter(|n| n.object().is_some_and(|(d, _)| d.syntax.is_table())).collect();

    // pair tables with their rows
    let mut rows: Vec<Row> = Vec::new();
    for table in &tables {
        let (tdef, _) = table.object().unwrap();
        let Syntax::SequenceOf(row_type) = &tdef.syntax else { unreachable!() };
        let entry = reg
            .nodes()
            .filter(|n| n.oid.len() == table.oid.len() + 1 && n.oid.starts_with(&table.oid))
            .find(|n| n.object().is_some_and(|(d, _)| d.syntax == Syntax::Entry(row_type.clone())))
            .ok_or_else(|| ResolveError::MissingEntry { table: table.name.clone() })?;
        let (edef, _) = entry.object().unwrap();
        rows.push(Row { table, entry, def: edef, augments: edef.augments.clone() });
    }

    // AUGMENTS written on a table object applies to its row
    for i in 0..rows.len() {
        let (tdef, _) = rows[i].table.object().unwrap();
        let Some(target) = tdef.augments.clone() else { continue };
        if strictness == Strictness::Strict {
            return Err(ResolveError::AugmentsOnTable { name: rows[i].table.name.clone(), target });
        }
        let module = rows[i].table.module.clone();
        let target_node = reg.lookup_in(&module, &target).ok_or_else(|| ResolveError::DanglingAugments {
            name: rows[i].table.name.clone(),
            target: target.clone(),
        })?;
        let target_row = rows.iter().find(|r| r.table.oid == target_node.oid).ok_or_else(|| {
            ResolveError::AugmentsNonEntry { name: rows[i].table.name.clone(), target: target.clone() }
        })?;
        let target_entry = target_row.entry.name.clone();
        warnings.push(format!(
            "{}: AUGMENTS {{ {} }} written on a table; applied to row {}",
            rows[i].table.name, target, rows[i].entry.name
        ));
        match &rows[i].augments {
            None => rows[i].augments = Some(target_entry),
            Some(existing) => {
                let existing_node = reg.lookup_in(&module, existing);
                if existing_node.map(|n| &n.name) != Some(&target_entry) {
                    warnings.push(format!(
                        "{}: table-level AUGMENTS {{ {} }} disagrees with row-level AUGMENTS {{ {} }}; row-level kept",
                        rows[i].table.name, target, existing
                    ));
                }
            }
        }
    }

    // direct AUGMENTS target of each row, as an index into `rows`
    let mut parent: Vec<Option<usize>> = Vec::with_capacity(rows.len());
    for row in &rows {
        let Some(target) = &row.augments else {
            parent.push(None);
            continue;
        };
        let target_node = reg
            .lookup_in(&row.entry.module, target)
            .ok_or_else(|| ResolveError::DanglingAugments { name: row.entry.name.clone(), target: target.clone() })?;
        let is_entry = target_node.object().is_some_and(|(d, _)| d.syntax.is_entry());
        if !is_entry {
            return Err(ResolveError::AugmentsNonEntry { name: row.entry.name.clone(), target: target.clone() });
        }
        let idx = find_row(&rows, &row.entry.module, target, reg)
            .ok_or_else(|| ResolveError::AugmentsNonEntry { name: row.entry.name.clone(), target: target.clone() })?;
        parent.push(Some(idx));
    }

    let mut resolved = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        // walk to the base, detecting cycles
        let mut chain = vec![i];
        let mut seen = HashSet::from([i]);
        let mut cur = i;
        while let Some(p) = parent[cur] {
            if !seen.insert(p) {
                let start = chain.iter().position(|&c| c == p).unwrap();
                let names = chain[start..].iter().map(|&c| rows[c].entry.name.clone()).collect();
                return Err(ResolveError::AugmentsCycle(names));
            }
            chain.push(p);
            cur = p;
        }
        chain.reverse();

        if strictness == Strictness::Strict && chain.len() > 2 {
            let n = chain.len();
            return Err(ResolveError::ChainedAugments {
                name: row.entry.name.clone(),
                target: rows[chain[n - 2]].entry.name.clone(),
                base: rows[chain[n - 3]].entry.name.clone(),
            });
        }

        let base = &rows[chain[0]];
        if base.def.index.is_empty() {
            return Err(ResolveError::MissingIndex { entry: base.entry.name.clone() });
        }
        let mut index_columns = Vec::new();
        for name in &base.def.index {
            let node = reg.lookup_in(&base.entry.module, name).ok_or_else(|| ResolveError::UnknownIndexColumn {
                entry: base.entry.name.clone(),
                column: name.clone(),
            })?;
            let (def, syntax) = node.object().ok_or_else(|| ResolveError::UnknownIndexColumn {
                entry: base.entry.name.clone(),
                column: name.clone(),
            })?;
            index_columns.push(ColumnDef {
                name: node.name.clone(),
                module: node.module.clone(),
                oid: node.oid.clone(),
                sub_id: *node.oid.as_slice().last().unwrap(),
                syntax: syntax.clone(),
                access: def.max_access,
            });
        }

        let own_columns = columns_of(reg, row.entry);
        let mut effective_columns = Vec::new();
        let mut names = HashSet::new();
        for &c in &chain {
            for col in columns_of(reg, rows[c].entry) {
                if !names.insert(col.name.clone()) {
                    return Err(ResolveError::DuplicateColumn { table: row.table.name.clone(), column: col.name });
                }
                effective_columns.push(col);
            }
        }

        resolved.push(ResolvedTable {
            name: row.table.name.clone(),
            module: row.table.module.clone(),
            table_oid: row.table.oid.clone(),
            entry_name: row.entry.name.clone(),
            entry_oid: row.entry.oid.clone(),
            chain: chain.iter().map(|&c| rows[c].entry.name.clone()).collect(),
            index_columns,
            own_columns,
            effective_columns,
        });
    }

    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(Resolution { tables: resolved, warnings })
}
