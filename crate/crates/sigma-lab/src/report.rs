//! Report plumbing: JSON value helpers, exact-plus-decimal rendering of
//! scalars, input digests, and CSV series emission.

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::decimal::{decimal_truncate, Decimal};
use crate::scalar::Scalar;
use crate::space::Event;

/// Serializes an event as the sorted list of its outcome ids.
pub fn serialize_event_ids<S: Serializer>(event: &Event, s: S) -> Result<S::Ok, S::Error> {
    let ids = event.ids();
    let mut seq = s.serialize_seq(Some(ids.len()))?;
    for id in ids {
        seq.serialize_element(&id)?;
    }
    seq.end()
}

/// An exact scalar together with its 50-digit certified truncation.
#[derive(Clone, Debug, Serialize)]
pub struct ExactValue {
    pub exact: Scalar,
    pub decimal: Decimal,
}

impl ExactValue {
    pub fn new(x: Scalar) -> ExactValue {
        let decimal = decimal_truncate(&x, 50);
        ExactValue { exact: x, decimal }
    }
}

/// Hex digest of a document's bytes, for provenance blocks in reports.
pub fn digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(&hasher.finalize()[..16])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_stable() {
        assert_eq!(digest(b"abc"), digest(b"abc"));
        assert_ne!(digest(b"abc"), digest(b"abd"));
        assert_eq!(digest(b"abc").len(), 32);
    }

    #[test]
    fn exact_value_renders_both_forms() {
        let v = ExactValue::new(Scalar::from_ratio(3, 4).unwrap());
        let json = serde_json::to_value(&v).unwrap();
        assert_eq!(json["exact"], "3/4");
        assert!(json["decimal"]["digits"].as_str().unwrap().starts_with("0.75"));
    }
}
