//! Views in the unified representation and the mappings into it.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite scalar in the unified representation (for example a GDP growth
/// rate in percentage points).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct UnifiedView(f64);

impl UnifiedView {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() {
            Ok(Self(value))
        } else {
            Err(Error::NonFinite(value))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for UnifiedView {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<UnifiedView> for f64 {
    fn from(v: UnifiedView) -> f64 {
        v.0
    }
}

impl fmt::Display for UnifiedView {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Opaque source identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SourceId(pub String);

/// Opaque question identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QuestionId(pub String);

macro_rules! id_conversions {
    ($ty:ident) => {
        impl From<&str> for $ty {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $ty {
            fn from(s: String) -> Self {
                Self(s)
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl $ty {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }
    };
}

id_conversions!(SourceId);
id_conversions!(QuestionId);

/// A view as provided by a source, in its own representation.
#[derive(Debug, Clone, PartialEq)]
pub struct RawView {
    value: f64,
    representation_id: String,
}

impl RawView {
    pub fn new(value: f64, representation_id: impl Into<String>) -> Result<Self> {
        let representation_id = representation_id.into();
        if !value.is_finite() {
            return Err(Error::NonFinite(value));
        }
        if representation_id.is_empty() {
            return Err(Error::InvalidParameter(
                "representation id must be non-empty".into(),
            ));
        }
        Ok(Self {
            value,
            representation_id,
        })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn representation_id(&self) -> &str {
        &self.representation_id
    }
}

/// Affine map `unified = scale * raw + offset` for one representation.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingSpec {
    representation_id: String,
    scale: f64,
    offset: f64,
}

impl MappingSpec {
    pub fn new(representation_id: impl Into<String>, scale: f64, offset: f64) -> Result<Self> {
        if scale == 0.0 {
            return Err(Error::ZeroScale);
        }
        if !scale.is_finite() {
            return Err(Error::NonFinite(scale));
        }
        if !offset.is_finite() {
            return Err(Error::NonFinite(offset));
        }
        Ok(Self {
            representation_id: representation_id.into(),
            scale,
            offset,
        })
    }

    pub fn identity(representation_id: impl Into<String>) -> Self {
        Self {
            representation_id: representation_id.into(),
            scale: 1.0,
            offset: 0.0,
        }
    }

    pub fn representation_id(&self) -> &str {
        &self.representation_id
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Maps a unified value back into this representation.
    pub fn invert(&self, unified: UnifiedView) -> Result<RawView> {
        RawView::new(
            (unified.value() - self.offset) / self.scale,
            self.representation_id.clone(),
        )
    }
}

pub fn map_view(raw: &RawView, spec: &MappingSpec) -> Result<UnifiedView> {
    if raw.representation_id != spec.representation_id {
        return Err(Error::RepresentationMismatch {
            expected: spec.representation_id.clone(),
            found: raw.representation_id.clone(),
        });
    }
    UnifiedView::new(spec.scale * raw.value + spec.offset)
}

/// `|a - b|`.
#[inline]
pub fn distance(a: UnifiedView, b: UnifiedView) -> f64 {
    (a.0 - b.0).abs()
}

/// `a - b`. Error means keep the sign; distances drop it.
#[inline]
pub fn signed_diff(a: UnifiedView, b: UnifiedView) -> f64 {
    a.0 - b.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: QuestionId,
    pub ground_truth: Option<UnifiedView>,
}

impl Question {
    pub fn with_truth(id: impl Into<QuestionId>, truth: UnifiedView) -> Self {
        Self {
            id: id.into(),
            ground_truth: Some(truth),
        }
    }

    pub fn unknown(id: impl Into<QuestionId>) -> Self {
        Self {
            id: id.into(),
            ground_truth: None,
        }
    }
}

/// One source's answer to one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub source: SourceId,
    pub question: QuestionId,
    pub answer: UnifiedView,
}

impl Report {
    pub fn new(
        source: impl Into<SourceId>,
        question: impl Into<QuestionId>,
        answer: UnifiedView,
    ) -> Self {
        Self {
            source: source.into(),
            question: question.into(),
            answer,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn u(x: f64) -> UnifiedView {
        UnifiedView::new(x).unwrap()
    }

    #[test]
    fn identity_and_affine_maps() {
        let raw = RawView::new(5.0, "gdp").unwrap();
        assert_eq!(map_view(&raw, &MappingSpec::identity("gdp")).unwrap(), u(5.0));

        let raw = RawView::new(2.0, "cargo").unwrap();
        let spec = MappingSpec::new("cargo", 3.0, 1.0).unwrap();
        assert_eq!(map_view(&raw, &spec).unwrap(), u(7.0));
    }

    #[test]
    fn representation_mismatch_is_rejected() {
        let raw = RawView::new(5.0, "cargo").unwrap();
        let spec = MappingSpec::identity("electricity");
        assert!(matches!(
            map_view(&raw, &spec),
            Err(Error::RepresentationMismatch { .. })
        ));
    }

    #[test]
    fn constructor_invariants() {
        assert!(UnifiedView::new(f64::NAN).is_err());
        assert!(UnifiedView::new(f64::INFINITY).is_err());
        assert!(RawView::new(1.0, "").is_err());
        assert!(matches!(MappingSpec::new("x", 0.0, 1.0), Err(Error::ZeroScale)));
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(u(3.0), u(3.0)), 0.0);
        assert_eq!(distance(u(5.0), u(2.0)), 3.0);
        assert_eq!(signed_diff(u(5.0), u(2.0)), 3.0);
        assert_eq!(distance(u(2.0), u(5.0)), 3.0);
        assert_eq!(signed_diff(u(2.0), u(5.0)), -3.0);
    }

    proptest! {
        #[test]
        fn distance_is_a_metric(a in -1e6f64..1e6, b in -1e6f64..1e6, c in -1e6f64..1e6) {
            let (a, b, c) = (u(a), u(b), u(c));
            prop_assert!(distance(a, b) >= 0.0);
            prop_assert_eq!(distance(a, b), distance(b, a));
            prop_assert_eq!(distance(a, a), 0.0);
            prop_assert!(distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9);
        }

        #[test]
        fn mapping_round_trips(
            value in -1e6f64..1e6,
            scale in prop_oneof![-1e3f64..-1e-3, 1e-3f64..1e3],
            offset in -1e3f64..1e3,
        ) {
            let spec = MappingSpec::new("r", scale, offset).unwrap();
            let raw = RawView::new(value, "r").unwrap();
            let back = spec.invert(map_view(&raw, &spec).unwrap()).unwrap();
            let tol = 1e-12 * value.abs().max(1.0) * (1.0 + offset.abs() / scale.abs());
            prop_assert!((back.value() - value).abs() <= tol,
                "{} vs {}", back.value(), value);
        }
    }
}
