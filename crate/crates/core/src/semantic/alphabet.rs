use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::geometry::LabelId;

/// Categories used to build landmarks in outdoor scenes.
pub const OUTDOOR_LANDMARK_CATEGORIES: [&str; 5] = ["trunk", "truck", "pole", "traffic-sign", "car"];

/// The finite set of semantic categories a cloud is labelled with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelAlphabet {
    names: Vec<String>,
    dynamic: Vec<bool>,
}

impl LabelAlphabet {
    pub fn new(names: Vec<String>, dynamic: Vec<bool>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::invalid("label alphabet must not be empty"));
        }
        if names.len() != dynamic.len() {
            return Err(Error::invalid("one dynamic flag per category is required"));
        }
        if names.len() > usize::from(LabelId::MAX) + 1 {
            return Err(Error::invalid(format!("too many categories: {}", names.len())));
        }
        let mut seen = HashSet::new();
        for n in &names {
            if n.is_empty() || n.chars().any(char::is_whitespace) {
                return Err(Error::invalid(format!("bad category name {n:?}")));
            }
            if !seen.insert(n.as_str()) {
                return Err(Error::invalid(format!("duplicate category name {n:?}")));
            }
        }
        Ok(Self { names, dynamic })
    }

    /// All categories static.
    pub fn from_names<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let dynamic = vec![false; names.len()];
        Self::new(names, dynamic)
    }

    /// Alphabet used by the synthetic scene generator.
    pub fn outdoor_default() -> Self {
        Self::from_names([
            "ground",
            "building",
            "vegetation",
            "car",
            "truck",
            "pole",
            "trunk",
            "traffic-sign",
        ])
        .expect("static alphabet is valid")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, id: LabelId) -> &str {
        &self.names[usize::from(id)]
    }

    pub fn is_dynamic(&self, id: LabelId) -> bool {
        self.dynamic[usize::from(id)]
    }

    pub fn id_of(&self, name: &str) -> Option<LabelId> {
        self.names.iter().position(|n| n == name).map(|i| i as LabelId)
    }

    pub fn ids(&self) -> impl Iterator<Item = LabelId> {
        (0..self.names.len()).map(|i| i as LabelId)
    }

    pub fn set_dynamic(&mut self, id: LabelId, dynamic: bool) {
        self.dynamic[usize::from(id)] = dynamic;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_empty() {
        assert!(LabelAlphabet::from_names(["a", "a"]).is_err());
        assert!(LabelAlphabet::from_names(Vec::<String>::new()).is_err());
        assert!(LabelAlphabet::from_names(["has space"]).is_err());
    }

    #[test]
    fn lookups() {
        let a = LabelAlphabet::outdoor_default();
        assert_eq!(a.len(), 8);
        assert_eq!(a.id_of("pole"), Some(5));
        assert_eq!(a.name(7), "traffic-sign");
        assert!(!a.is_dynamic(3));
        for name in OUTDOOR_LANDMARK_CATEGORIES {
            assert!(a.id_of(name).is_some());
        }
    }
}
