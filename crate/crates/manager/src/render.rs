//! Text rendering of values, varbinds and tables, and parsing of SET
//! assignments typed on the command line.

use std::collections::BTreeSet;
use std::fmt;

use marf_core::codec::{BerValue, Varbind};
use marf_core::smi::{Mib, ResolvedTable, Syntax};
use marf_core::Oid;

use crate::session::{ManagerError, Session};

/// The declared syntax of a table cell, if `oid` is one.
pub fn syntax_at<'m>(mib: &'m Mib, oid: &Oid) -> Option<&'m Syntax> {
    let table = mib.table_containing(oid)?;
    table.column_for(oid).map(|(c, _)| &c.syntax)
}

fn enum_label(syntax: Option<&Syntax>, n: i64) -> Option<&str> {
    match syntax {
        Some(Syntax::Enum(labels)) => labels.iter().find(|(_, v)| *v == n).map(|(l, _)| l.as_str()),
        _ => None,
    }
}

/// Text of an octet string when it is printable, else None.
pub fn printable(bytes: &[u8]) -> Option<&str> {
    std::str::from_utf8(bytes).ok().filter(|s| s.chars().all(|c| !c.is_control() || c == '\n' || c == '\t'))
}

pub fn format_value(mib: &Mib, v: &BerValue, syntax: Option<&Syntax>) -> String {
    match v {
        BerValue::Integer(n) => match enum_label(syntax, *n) {
            Some(l) => format!("INTEGER: {l}({n})"),
            None => format!("INTEGER: {n}"),
        },
        BerValue::Counter32(n) => format!("Counter32: {n}"),
        BerValue::TimeTicks(t) => {
            let cs = t % 100;
            let s = t / 100;
            format!("Timeticks: ({t}) {}:{:02}:{:02}.{cs:02}", s / 3600, s / 60 % 60, s % 60)
        }
        BerValue::OctetString(b) => match printable(b) {
            Some(s) => format!("STRING: {s:?}"),
            None => format!("Hex-STRING: {}", b.iter().map(|x| format!("{x:02X}")).collect::<Vec<_>>().join(" ")),
        },
        BerValue::OidValue(o) => format!("OID: {}", mib.name_of(o)),
        BerValue::Null => "NULL".to_string(),
        // exceptions carry no type prefix so they never read as data
        BerValue::NoSuchObject => "noSuchObject".to_string(),
        BerValue::NoSuchInstance => "noSuchInstance".to_string(),
        BerValue::EndOfMibView => "endOfMibView".to_string(),
    }
}

pub fn format_varbind(mib: &Mib, vb: &Varbind) -> String {
    format!("{} = {}", mib.name_of(&vb.oid), format_value(mib, &vb.value, syntax_at(mib, &vb.oid)))
}

/// Parses `name=value`. The value is typed by the column's syntax when the
/// OID is a known cell; an explicit `i:`, `c:`, `t:`, `s:` or `o:` prefix
/// overrides that. Enumeration labels are accepted for enumerated columns.
pub fn parse_assignment(mib: &Mib, text: &str) -> Result<Varbind, String> {
    let (name, raw) = text.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got {text:?}"))?;
    let oid = mib.parse_oid(name).map_err(|e| e.to_string())?;
    let value = parse_value(mib, syntax_at(mib, &oid), raw)?;
    Ok(Varbind::new(oid, value))
}

pub fn parse_value(mib: &Mib, syntax: Option<&Syntax>, raw: &str) -> Result<BerValue, String> {
    let int = |s: &str| s.trim().parse::<i64>().map_err(|_| format!("not an integer: {s:?}"));
    let uint = |s: &str| s.trim().parse::<u32>().map_err(|_| format!("not an unsigned 32-bit value: {s:?}"));
    if let Some((tag, rest)) = raw.split_once(':') {
        match tag {
            "i" => return int(rest).map(BerValue::Integer),
            "c" => return uint(rest).map(BerValue::Counter32),
            "t" => return uint(rest).map(BerValue::TimeTicks),
            "s" => return Ok(BerValue::string(rest)),
            "o" => return mib.parse_oid(rest).map(BerValue::OidValue).map_err(|e| e.to_string()),
            _ => {}
        }
    }
    match syntax {
        Some(Syntax::Enum(labels)) => match labels.iter().find(|(l, _)| l == raw) {
            Some((_, n)) => Ok(BerValue::Integer(*n)),
            None => int(raw).map(BerValue::Integer),
        },
        Some(Syntax::Integer(_)) => int(raw).map(BerValue::Integer),
        Some(Syntax::Counter32) => uint(raw).map(BerValue::Counter32),
        Some(Syntax::TimeTicks) => uint(raw).map(BerValue::TimeTicks),
        Some(Syntax::OctetString(_) | Syntax::DisplayString(_)) => Ok(BerValue::string(raw)),
        Some(Syntax::ObjectIdentifier) => mib.parse_oid(raw).map(BerValue::OidValue).map_err(|e| e.to_string()),
        _ => Ok(int(raw).map(BerValue::Integer).unwrap_or_else(|_| BerValue::string(raw))),
    }
}

/// A walk laid out as rows (by instance index) and the table's effective
/// columns, base table first.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedTable {
    pub name: String,
    pub columns: Vec<String>,
    /// Ascending by index; a None cell was absent from the walk.
    pub rows: Vec<(Vec<u32>, Vec<Option<BerValue>>)>,
}

/// Lays out `varbinds` under `table`. Index columns that the walk does not
/// carry, such as the inherited index of an AUGMENTS row, are filled in from
/// the instance index when it is a single integer.
pub fn table_render(varbinds: &[Varbind], table: &ResolvedTable) -> RenderedTable {
    let cols = &table.effective_columns;
    let mut rows: std::collections::BTreeMap<Vec<u32>, Vec<Option<BerValue>>> = Default::default();
    for vb in varbinds {
        let Some((col, idx)) = table.column_for(&vb.oid) else { continue };
        if idx.is_empty() || vb.value.is_exception() {
            continue;
        }
        let pos = cols.iter().position(|c| c.oid == col.oid).expect("column_for returns an effective column");
        rows.entry(idx.to_vec()).or_insert_with(|| vec![None; cols.len()])[pos] = Some(vb.value.clone());
    }
    if let [ix] = table.index_columns.as_slice() {
        if let Some(pos) = cols.iter().position(|c| c.oid == ix.oid) {
            for (idx, cells) in rows.iter_mut() {
                if let ([n], None) = (idx.as_slice(), &cells[pos]) {
                    cells[pos] = Some(BerValue::Integer(*n as i64));
                }
            }
        }
    }
    RenderedTable {
        name: table.name.clone(),
        columns: cols.iter().map(|c| c.name.clone()).collect(),
        rows: rows.into_iter().collect(),
    }
}

/// Walks `table` and every row it augments, keeping only the instances
/// present in `table` itself, and renders the union.
pub fn fetch_table(session: &Session, mib: &Mib, table: &ResolvedTable) -> Result<RenderedTable, ManagerError> {
    let own = session.walk(&table.entry_oid)?;
    let indexes: BTreeSet<&[u32]> = own.iter().filter_map(|vb| table.column_for(&vb.oid).map(|(_, i)| i)).collect();
    let mut all = Vec::new();
    for row in &table.chain[..table.chain.len().saturating_sub(1)] {
        let Some(base) = mib.table(row) else { continue };
        for vb in session.walk(&base.entry_oid)? {
            if base.column_for(&vb.oid).is_some_and(|(_, i)| indexes.contains(i)) {
                all.push(vb);
            }
        }
    }
    all.extend(own.iter().cloned());
    Ok(table_render(&all, table))
}

impl RenderedTable {
    pub fn cell(&self, index: &[u32], column: &str) -> Option<&BerValue> {
        let pos = self.columns.iter().position(|c| c == column)?;
        self.rows.iter().find(|(i, _)| i == index)?.1[pos].as_ref()
    }
}

fn cell_text(v: &Option<BerValue>) -> String {
    match v {
        None => "-".to_string(),
        Some(BerValue::Integer(n)) => n.to_string(),
        Some(BerValue::Counter32(n) | BerValue::TimeTicks(n)) => n.to_string(),
        Some(BerValue::OctetString(b)) => printable(b)
            .map_or_else(|| format!("0x{}", b.iter().map(|x| format!("{x:02x}")).collect::<String>()), str::to_string),
        Some(BerValue::OidValue(o)) => o.to_string(),
        Some(other) => other.type_name().to_string(),
    }
}

impl fmt::Display for RenderedTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut grid =
            vec![std::iter::once("index".to_string()).chain(self.columns.iter().cloned()).collect::<Vec<_>>()];
        for (idx, cells) in &self.rows {
            let index = idx.iter().map(u32::to_string).collect::<Vec<_>>().join(".");
            grid.push(std::iter::once(index).chain(cells.iter().map(cell_text)).collect());
        }
        let widths: Vec<usize> =
            (0..grid[0].len()).map(|c| grid.iter().map(|r| r[c].chars().count()).max().unwrap()).collect();
        for row in &grid {
            let line: Vec<String> = row.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
            writeln!(f, "{}", line.join("  ").trim_end())?;
        }
        Ok(())
    }
}
