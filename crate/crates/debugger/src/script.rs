//! Script files for the scripted backend.
//!
//! Either a JSON array of replies used for every session, or an object
//! mapping instance ids to reply arrays, with `"*"` as the fallback.
//! Baseline sessions look up `"baseline/<id>"`, then `"baseline/*"`.

use std::collections::BTreeMap;
use std::path::Path;

use adaptive_debug_core::llm::ScriptedBackend;
use serde::Deserialize;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScriptBook {
    per_instance: BTreeMap<String, Vec<String>>,
    fallback: Option<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawScript {
    Shared(Vec<String>),
    PerInstance(BTreeMap<String, Vec<String>>),
}

impl ScriptBook {
    pub fn parse(text: &str) -> Result<Self, String> {
        let raw: RawScript = serde_json::from_str(text)
            .map_err(|e| format!("script must be an array of strings or an object of arrays: {e}"))?;
        Ok(match raw {
            RawScript::Shared(replies) => Self {
                per_instance: BTreeMap::new(),
                fallback: Some(replies),
            },
            RawScript::PerInstance(mut map) => {
                let fallback = map.remove("*");
                Self {
                    per_instance: map,
                    fallback,
                }
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read script {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn replies_for(&self, instance_id: &str) -> Option<&[String]> {
        self.per_instance
            .get(instance_id)
            .or(self.fallback.as_ref())
            .map(Vec::as_slice)
    }

    pub fn baseline_replies_for(&self, instance_id: &str) -> Option<&[String]> {
        self.per_instance
            .get(&format!("baseline/{instance_id}"))
            .or_else(|| self.per_instance.get("baseline/*"))
            .map(Vec::as_slice)
    }

    /// A fresh backend for one adaptive session.
    pub fn backend_for(&self, instance_id: &str) -> Result<ScriptedBackend, String> {
        self.replies_for(instance_id)
            .map(|r| ScriptedBackend::new(r.iter().cloned()))
            .ok_or_else(|| format!("script has no replies for instance {instance_id:?}"))
    }

    /// A fresh backend for one baseline session.
    pub fn baseline_backend_for(&self, instance_id: &str) -> Result<ScriptedBackend, String> {
        self.baseline_replies_for(instance_id)
            .map(|r| ScriptedBackend::new(r.iter().cloned()))
            .ok_or_else(|| format!("script has no baseline reply for instance {instance_id:?}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_order() {
        let book = ScriptBook::parse(
            r#"{"a": ["1"], "*": ["2"], "baseline/a": ["3"], "baseline/*": ["4"]}"#,
        )
        .unwrap();
        assert_eq!(book.replies_for("a").unwrap(), ["1"]);
        assert_eq!(book.replies_for("b").unwrap(), ["2"]);
        assert_eq!(book.baseline_replies_for("a").unwrap(), ["3"]);
        assert_eq!(book.baseline_replies_for("b").unwrap(), ["4"]);
        let shared = ScriptBook::parse(r#"["x"]"#).unwrap();
        assert_eq!(shared.replies_for("any").unwrap(), ["x"]);
        assert!(shared.baseline_backend_for("any").is_err());
        assert!(ScriptBook::parse("{").is_err());
    }
}
