//! OID-ordered store of managed objects: individually registered instances
//! and tables whose instances are materialized from a [`RowSource`].

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::codec::{BerValue, ErrorStatus};
use crate::oid::Oid;
use crate::smi::{Access, ColumnDef, ResolvedTable, Syntax};

use super::AgentError;

pub type ReadFn = Arc<dyn Fn() -> BerValue + Send + Sync>;
pub type ValidateFn = Arc<dyn Fn(&BerValue) -> Result<(), ErrorStatus> + Send + Sync>;
pub type CommitFn = Arc<dyn Fn(&BerValue) + Send + Sync>;

/// Write half of a read-write object. `validate` must not have side effects;
/// `commit` is only called after every varbind of the SET validated.
#[derive(Clone)]
pub struct Writer {
    pub validate: ValidateFn,
    pub commit: CommitFn,
}

impl Writer {
    pub fn new(
        validate: impl Fn(&BerValue) -> Result<(), ErrorStatus> + Send + Sync + 'static,
        commit: impl Fn(&BerValue) + Send + Sync + 'static,
    ) -> Self {
        Writer { validate: Arc::new(validate), commit: Arc::new(commit) }
    }

    /// Validates against `syntax` only.
    pub fn for_syntax(syntax: Syntax, commit: impl Fn(&BerValue) + Send + Sync + 'static) -> Self {
        Writer::new(move |v| check_syntax(&syntax, v), commit)
    }
}

/// One instance OID with its instrumentation delegates.
#[derive(Clone)]
pub struct ManagedObject {
    oid: Oid,
    read: ReadFn,
    write: Option<Writer>,
}

impl ManagedObject {
    pub fn read_only(oid: Oid, read: impl Fn() -> BerValue + Send + Sync + 'static) -> Self {
        ManagedObject { oid, read: Arc::new(read), write: None }
    }

    pub fn read_write(oid: Oid, read: impl Fn() -> BerValue + Send + Sync + 'static, write: Writer) -> Self {
        ManagedObject { oid, read: Arc::new(read), write: Some(write) }
    }

    /// A read-only object with a fixed value.
    pub fn constant(oid: Oid, value: BerValue) -> Self {
        ManagedObject::read_only(oid, move || value.clone())
    }

    pub fn oid(&self) -> &Oid {
        &self.oid
    }

    pub fn access(&self) -> Access {
        if self.write.is_some() {
            Access::ReadWrite
        } else {
            Access::ReadOnly
        }
    }

    pub fn read(&self) -> BerValue {
        (self.read)()
    }

    pub fn writer(&self) -> Option<&Writer> {
        self.write.as_ref()
    }
}

impl fmt::Debug for ManagedObject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManagedObject").field("oid", &self.oid).field("access", &self.access()).finish()
    }
}

/// Live rows behind a registered table. Columns are identified by their
/// MIB names; indexes are the instance suffix after the column OID.
pub trait RowSource: Send + Sync {
    /// Index suffixes of the rows that currently exist.
    fn rows(&self) -> Vec<Vec<u32>>;

    /// `None` if the row or cell does not exist.
    fn read(&self, column: &str, index: &[u32]) -> Option<BerValue>;

    /// Semantic validation beyond the column syntax, which the agent checks
    /// first. Must not have side effects.
    fn validate(&self, _column: &str, _index: &[u32], _value: &BerValue) -> Result<(), ErrorStatus> {
        Ok(())
    }

    fn commit(&self, _column: &str, _index: &[u32], _value: &BerValue) {}
}

/// A [`RowSource`] backed by a map, for fixtures and simple tables.
#[derive(Debug, Default)]
pub struct MemoryTable {
    rows: Mutex<BTreeMap<Vec<u32>, HashMap<String, BerValue>>>,
}

impl MemoryTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&self, index: &[u32], column: &str, value: BerValue) {
        self.rows.lock().unwrap().entry(index.to_vec()).or_default().insert(column.to_string(), value);
    }

    pub fn get(&self, index: &[u32], column: &str) -> Option<BerValue> {
        self.rows.lock().unwrap().get(index).and_then(|r| r.get(column).cloned())
    }

    pub fn remove_row(&self, index: &[u32]) {
        self.rows.lock().unwrap().remove(index);
    }
}

impl RowSource for MemoryTable {
    fn rows(&self) -> Vec<Vec<u32>> {
        self.rows.lock().unwrap().keys().cloned().collect()
    }

    fn read(&self, column: &str, index: &[u32]) -> Option<BerValue> {
        self.get(index, column)
    }

    fn commit(&self, column: &str, index: &[u32], value: &BerValue) {
        self.set(index, column, value.clone());
    }
}

/// Checks that `v` is admissible for a column of `syntax`.
pub fn check_syntax(syntax: &Syntax, v: &BerValue) -> Result<(), ErrorStatus> {
    let in_range = |n: i64, r: &Option<crate::smi::Range>| r.as_ref().is_none_or(|r| r.min <= n && n <= r.max);
    match (syntax, v) {
        (Syntax::Integer(r), BerValue::Integer(n)) => {
            if i32::try_from(*n).is_err() || !in_range(*n, r) {
                Err(ErrorStatus::WrongValue)
            } else {
                Ok(())
            }
        }
        (Syntax::Enum(labels), BerValue::Integer(n)) => {
            if labels.iter().any(|(_, x)| x == n) {
                Ok(())
            } else {
                Err(ErrorStatus::WrongValue)
            }
        }
        (Syntax::Counter32, BerValue::Counter32(_)) | (Syntax::TimeTicks, BerValue::TimeTicks(_)) => Ok(()),
        (Syntax::OctetString(r), BerValue::OctetString(s)) => {
            if in_range(s.len() as i64, r) {
                Ok(())
            } else {
                Err(ErrorStatus::WrongValue)
            }
        }
        (Syntax::DisplayString(r), BerValue::OctetString(s)) => {
            let printable = s.iter().all(|&b| b.is_ascii() && (!b.is_ascii_control() || b == b'\r' || b == b'\n'));
            if in_range(s.len() as i64, r) && printable {
                Ok(())
            } else {
                Err(ErrorStatus::WrongValue)
            }
        }
        (Syntax::ObjectIdentifier, BerValue::OidValue(_)) => Ok(()),
        _ => Err(ErrorStatus::WrongType),
    }
}

#[derive(Clone)]
pub(crate) struct TableReg {
    pub entry_oid: Oid,
    /// Accessible columns served by this registration, by sub-id.
    pub columns: Vec<ColumnDef>,
    pub source: Arc<dyn RowSource>,
}

impl TableReg {
    pub fn column_at<'a>(&self, oid: &'a Oid) -> Option<(&ColumnDef, &'a [u32])> {
        self.columns.iter().find_map(|c| oid.suffix_after(&c.oid).map(|idx| (c, idx)))
    }

    fn sorted_rows(&self) -> Vec<Vec<u32>> {
        let mut rows = self.source.rows();
        rows.sort();
        rows.dedup();
        rows
    }

    /// Smallest instance strictly greater than `q`.
    pub fn next_after(&self, q: &Oid) -> Option<(Oid, BerValue)> {
        if let Some(end) = self.entry_oid.subtree_end() {
            if q >= &end {
                return None;
            }
        }
        let rows = self.sorted_rows();
        for col in &self.columns {
            if let Some(end) = col.oid.subtree_end() {
                if q >= &end {
                    continue;
                }
            }
            for idx in &rows {
                let inst = col.oid.extend(idx);
                if &inst > q {
                    if let Some(v) = self.source.read(&col.name, idx) {
                        return Some((inst, v));
                    }
                }
            }
        }
        None
    }
}

/// What a GET on an OID finds.
pub(crate) enum Lookup<'r> {
    Scalar(&'r ManagedObject),
    Cell(&'r TableReg, &'r ColumnDef, Vec<u32>),
    NoSuchInstance,
    NoSuchObject,
}

#[derive(Clone, Default)]
pub struct Registry {
    scalars: BTreeMap<Oid, ManagedObject>,
    tables: Vec<TableReg>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    fn overlaps_table(&self, oid: &Oid) -> bool {
        self.tables.iter().any(|t| t.columns.iter().any(|c| oid.starts_with(&c.oid) || c.oid.starts_with(oid)))
    }

    pub fn register(&mut self, obj: ManagedObject) -> Result<(), AgentError> {
        if self.scalars.contains_key(&obj.oid) || self.overlaps_table(&obj.oid) {
            return Err(AgentError::DuplicateRegistration(obj.oid));
        }
        self.scalars.insert(obj.oid.clone(), obj);
        Ok(())
    }

    /// Registers the accessible own columns of `table`. Inherited columns of
    /// an AUGMENTS table are served by the base table's registration.
    pub fn register_table(&mut self, table: &ResolvedTable, source: Arc<dyn RowSource>) -> Result<(), AgentError> {
        let columns: Vec<ColumnDef> =
            table.own_columns.iter().filter(|c| c.access != Access::NotAccessible).cloned().collect();
        for c in &columns {
            let clash = self.overlaps_table(&c.oid)
                || self.scalars.range(c.oid.clone()..).next().is_some_and(|(k, _)| k.starts_with(&c.oid))
                || self.scalars.keys().any(|k| c.oid.starts_with(k));
            if clash {
                return Err(AgentError::DuplicateRegistration(c.oid.clone()));
            }
        }
        self.tables.push(TableReg { entry_oid: table.entry_oid.clone(), columns, source });
        Ok(())
    }

    pub(crate) fn lookup(&self, oid: &Oid) -> Lookup<'_> {
        if let Some(obj) = self.scalars.get(oid) {
            return Lookup::Scalar(obj);
        }
        for t in &self.tables {
            if let Some((col, idx)) = t.column_at(oid) {
                return Lookup::Cell(t, col, idx.to_vec());
            }
        }
        // an instance of a known scalar object type, e.g. x.1 when x.0 exists
        if let Ok(parent) = Oid::from_slice(&oid.as_slice()[..oid.len() - 1]) {
            let known = self
                .scalars
                .range(parent.clone()..)
                .take_while(|(k, _)| k.starts_with(&parent))
                .any(|(k, _)| k.len() == oid.len());
            if known {
                return Lookup::NoSuchInstance;
            }
        }
        Lookup::NoSuchObject
    }

    /// Reads the instance at `oid`, or the SNMPv2 exception for it.
    pub fn get(&self, oid: &Oid) -> BerValue {
        match self.lookup(oid) {
            Lookup::Scalar(obj) => obj.read(),
            Lookup::Cell(t, col, idx) => t.source.read(&col.name, &idx).unwrap_or(BerValue::NoSuchInstance),
            Lookup::NoSuchInstance => BerValue::NoSuchInstance,
            Lookup::NoSuchObject => BerValue::NoSuchObject,
        }
    }

    /// Smallest registered instance strictly greater than `q`.
    pub fn next(&self, q: &Oid) -> Option<(Oid, BerValue)> {
        use std::ops::Bound::{Excluded, Unbounded};
        let scalar = self.scalars.range((Excluded(q.clone()), Unbounded)).next().map(|(k, o)| (k.clone(), o.read()));
        self.tables.iter().filter_map(|t| t.next_after(q)).chain(scalar).min_by(|a, b| a.0.cmp(&b.0))
    }

    /// Every instance in order; what a complete walk should return.
    pub fn dump(&self) -> Vec<(Oid, BerValue)> {
        let mut out: Vec<(Oid, BerValue)> = self.scalars.iter().map(|(k, o)| (k.clone(), o.read())).collect();
        for t in &self.tables {
            let rows = t.sorted_rows();
            for col in &t.columns {
                for idx in &rows {
                    if let Some(v) = t.source.read(&col.name, idx) {
                        out.push((col.oid.extend(idx), v));
                    }
                }
            }
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    pub fn is_empty(&self) -> bool {
        self.scalars.is_empty() && self.tables.is_empty()
    }
}
