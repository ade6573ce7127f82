//! Object identifiers.
//!
//! An [`Oid`] is an owned sequence of sub-identifiers. The derived ordering
//! is the SNMP lexicographic order: sub-ids are compared left to right and a
//! strict prefix sorts before any of its extensions.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OidError {
    #[error("object identifier needs at least two sub-identifiers, got {0}")]
    TooShort(usize),
    #[error("first sub-identifier must be 0, 1 or 2, got {0}")]
    BadFirstArc(u32),
    #[error("second sub-identifier must be below 40 under arc {first}, got {second}")]
    BadSecondArc { first: u32, second: u32 },
    #[error("second sub-identifier {0} overflows the combined first octet")]
    SecondArcOverflow(u32),
    #[error("invalid dotted object identifier {0:?}")]
    Parse(String),
}

/// Object identifier, e.g. `1.3.6.1.4.1.28218`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Oid(Vec<u32>);

impl Oid {
    pub fn new(sub_ids: Vec<u32>) -> Result<Self, OidError> {
        validate(&sub_ids)?;
        Ok(Oid(sub_ids))
    }

    pub fn from_slice(sub_ids: &[u32]) -> Result<Self, OidError> {
        Self::new(sub_ids.to_vec())
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn starts_with(&self, prefix: &Oid) -> bool {
        self.0.starts_with(&prefix.0)
    }

    /// Appends one sub-identifier.
    pub fn child(&self, sub_id: u32) -> Oid {
        let mut v = self.0.clone();
        v.push(sub_id);
        Oid(v)
    }

    /// Appends several sub-identifiers.
    pub fn extend(&self, suffix: &[u32]) -> Oid {
        let mut v = self.0.clone();
        v.extend_from_slice(suffix);
        Oid(v)
    }

    /// The sub-ids following `prefix`, if `self` lies in its subtree.
    pub fn suffix_after(&self, prefix: &Oid) -> Option<&[u32]> {
        if self.starts_with(prefix) {
            Some(&self.0[prefix.len()..])
        } else {
            None
        }
    }

    /// Smallest OID that is greater than every OID in this subtree, i.e. the
    /// exclusive upper bound of `self.*`. `None` if the subtree extends to the
    /// end of the OID space.
    pub fn subtree_end(&self) -> Option<Oid> {
        let mut v = self.0.clone();
        while let Some(last) = v.pop() {
            if last < u32::MAX {
                v.push(last + 1);
                return Some(Oid(v));
            }
        }
        None
    }

    pub fn into_vec(self) -> Vec<u32> {
        self.0
    }
}

fn validate(sub_ids: &[u32]) -> Result<(), OidError> {
    if sub_ids.len() < 2 {
        return Err(OidError::TooShort(sub_ids.len()));
    }
    let (first, second) = (sub_ids[0], sub_ids[1]);
    match first {
        0 | 1 if second >= 40 => Err(OidError::BadSecondArc { first, second }),
        0 | 1 => Ok(()),
        2 if second > u32::MAX - 80 => Err(OidError::SecondArcOverflow(second)),
        2 => Ok(()),
        other => Err(OidError::BadFirstArc(other)),
    }
}

impl fmt::Display for Oid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Oid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Oid({self})")
    }
}

impl FromStr for Oid {
    type Err = OidError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim().trim_start_matches('.');
        let parts = trimmed
            .split('.')
            .map(|p| p.parse::<u32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| OidError::Parse(s.to_string()))?;
        Oid::new(parts)
    }
}

impl AsRef<[u32]> for Oid {
    fn as_ref(&self) -> &[u32] {
        &self.0
    }
}

/// Builds an [`Oid`] from literal sub-ids; panics on an invalid OID.
#[macro_export]
macro_rules! oid {
    ($($s:expr),+ $(,)?) => {
        $crate::oid::Oid::new(vec![$($s),+]).expect("valid oid literal")
    };
}
