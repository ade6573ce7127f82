//! The MARF module set shipped with the crate, and loading of module sets
//! from disk.

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use thiserror::Error;

use crate::oid::Oid;

use super::ast::MibModule;
use super::link::{link_modules, MibRegistry};
use super::resolve::{resolve_augments, ResolvedTable, Strictness};
use super::{LinkError, LookupError, ParseError, ResolveError};

/// `(file name, source)` of every bundled module, in dependency order.
pub const BUNDLED_SOURCES: &[(&str, &str)] = &[
    ("MARF-MIB.mib", include_str!("../../mibs/MARF-MIB.mib")),
    ("MARF-types.mib", include_str!("../../mibs/MARF-types.mib")),
    ("MARF-storage.mib", include_str!("../../mibs/MARF-storage.mib")),
    ("MARF-services.mib", include_str!("../../mibs/MARF-services.mib")),
    ("MARF-sample-loading.mib", include_str!("../../mibs/MARF-sample-loading.mib")),
    ("MARF-preprocessing.mib", include_str!("../../mibs/MARF-preprocessing.mib")),
    ("MARF-feature-extraction.mib", include_str!("../../mibs/MARF-feature-extraction.mib")),
    ("MARF-classification.mib", include_str!("../../mibs/MARF-classification.mib")),
    ("MARF-APPS-SPEAKERIDENTAPP.mib", include_str!("../../mibs/MARF-APPS-SPEAKERIDENTAPP.mib")),
];

#[derive(Debug, Error)]
pub enum MibLoadError {
    #[error("{file}: {source}")]
    Parse { file: String, source: ParseError },
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Resolve(#[from] ResolveError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn io_err(path: &Path, source: std::io::Error) -> MibLoadError {
    MibLoadError::Io { path: path.to_path_buf(), source }
}

/// A linked and resolved module set.
#[derive(Debug, Clone)]
pub struct Mib {
    pub registry: MibRegistry,
    pub tables: Vec<ResolvedTable>,
    pub warnings: Vec<String>,
}

impl Mib {
    /// The bundled MARF modules, resolved leniently. Built once.
    pub fn bundled() -> &'static Mib {
        static MIB: OnceLock<Mib> = OnceLock::new();
        MIB.get_or_init(|| {
            Mib::from_sources(BUNDLED_SOURCES.iter().copied(), Strictness::Lenient).expect("bundled MIBs are valid")
        })
    }

    pub fn from_sources<'s>(
        sources: impl IntoIterator<Item = (&'s str, &'s str)>,
        strictness: Strictness,
    ) -> Result<Mib, MibLoadError> {
        let modules = sources
            .into_iter()
            .map(|(file, src)| {
                super::parse_mib(src).map_err(|source| MibLoadError::Parse { file: file.to_string(), source })
            })
            .collect::<Result<Vec<MibModule>, _>>()?;
        Mib::from_modules(modules, strictness)
    }

    pub fn from_modules(modules: Vec<MibModule>, strictness: Strictness) -> Result<Mib, MibLoadError> {
        let registry = link_modules(modules)?;
        let resolution = resolve_augments(&registry, strictness)?;
        Ok(Mib { registry, tables: resolution.tables, warnings: resolution.warnings })
    }

    /// Loads every `*.mib` and `*.txt` file in `dir`.
    pub fn load_dir(dir: &Path, strictness: Strictness) -> Result<Mib, MibLoadError> {
        let mut files = Vec::new();
        for entry in std::fs::read_dir(dir).map_err(|source| io_err(dir, source))? {
            let path = entry.map_err(|source| io_err(dir, source))?.path();
            let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
            if path.is_file() && (ext.eq_ignore_ascii_case("mib") || ext.eq_ignore_ascii_case("txt")) {
                files.push(path);
            }
        }
        files.sort();
        let mut sources = Vec::with_capacity(files.len());
        for path in &files {
            let text = std::fs::read_to_string(path).map_err(|source| io_err(path, source))?;
            sources.push((path.display().to_string(), text));
        }
        Mib::from_sources(sources.iter().map(|(f, s)| (f.as_str(), s.as_str())), strictness)
    }

    pub fn table(&self, name: &str) -> Option<&ResolvedTable> {
        self.tables.iter().find(|t| t.name == name || t.entry_name == name)
    }

    /// The table whose row subtree contains `oid`.
    pub fn table_containing(&self, oid: &Oid) -> Option<&ResolvedTable> {
        self.tables.iter().find(|t| oid.starts_with(&t.entry_oid))
    }

    pub fn oid_of(&self, name: &str) -> Result<Oid, LookupError> {
        self.registry.oid_of(name)
    }

    pub fn name_of(&self, oid: &Oid) -> String {
        self.registry.name_of(oid)
    }

    pub fn parse_oid(&self, text: &str) -> Result<Oid, LookupError> {
        self.registry.parse_oid(text)
    }
}
