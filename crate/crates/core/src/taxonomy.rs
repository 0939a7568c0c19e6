//! Registry of paraphrase types and the families they belong to.
//!
//! The default registry holds the 26 leaf types of the extended paraphrase
//! typology (ETPC) in seven families: six "changes" families plus the
//! `Extremes` family (Identity, Non-paraphrase, Entailment). Numeric ids follow
//! the ETPC release numbering; id 0 is reserved for "no annotation" and is never
//! registered.
//!
//! A JSON configuration document can override or extend the defaults:
//!
//! ```json
//! {"types": [{"id": 4, "name": "Spelling changes", "group": "Lexicon-based changes"}]}
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Numeric paraphrase type id. `TypeId(0)` means "unannotated".
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TypeId(pub u16);

impl TypeId {
    pub const NONE: TypeId = TypeId(0);

    pub fn is_none(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for TypeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Index of a family in [`Taxonomy::groups`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupId(pub usize);

pub const MORPHOLOGY: &str = "Morphology-based changes";
pub const LEXICON: &str = "Lexicon-based changes";
pub const LEXICO_SYNTACTIC: &str = "Lexico-syntactic based changes";
pub const SYNTAX: &str = "Syntax-based changes";
pub const DISCOURSE: &str = "Discourse-based changes";
pub const OTHERS: &str = "Others";
pub const EXTREMES: &str = "Extremes";

/// Family names in registry order.
pub const DEFAULT_GROUPS: [&str; 7] = [
    MORPHOLOGY,
    LEXICON,
    LEXICO_SYNTACTIC,
    SYNTAX,
    DISCOURSE,
    OTHERS,
    EXTREMES,
];

// (id, name, group)
const DEFAULT_TYPES: [(u16, &str, &str); 26] = [
    (1, "Inflectional Changes", MORPHOLOGY),
    (2, "Modal Verb Changes", MORPHOLOGY),
    (3, "Derivational Changes", MORPHOLOGY),
    (4, "Spelling changes", LEXICON),
    (5, "Same Polarity Substitution (habitual)", LEXICON),
    (6, "Same Polarity Substitution (contextual)", LEXICON),
    (7, "Same Polarity Substitution (named ent.)", LEXICON),
    (8, "Change of format", LEXICON),
    (9, "Opposite polarity substitution (habitual)", LEXICO_SYNTACTIC),
    (10, "Opposite polarity substitution (contextual)", LEXICO_SYNTACTIC),
    (11, "Synthetic/analytic substitution", LEXICO_SYNTACTIC),
    (12, "Converse substitution", LEXICO_SYNTACTIC),
    (13, "Diathesis alternation", SYNTAX),
    (14, "Negation switching", SYNTAX),
    (15, "Ellipsis", SYNTAX),
    (16, "Coordination changes", SYNTAX),
    (17, "Subordination and nesting changes", SYNTAX),
    (18, "Punctuation changes", DISCOURSE),
    (19, "Direct/indirect style alternations", DISCOURSE),
    (21, "Syntax/discourse structure changes", DISCOURSE),
    (22, "Addition/Deletion", OTHERS),
    (23, "Change of order", OTHERS),
    (24, "Semantic-based", OTHERS),
    (25, "Identity", EXTREMES),
    (26, "Non-paraphrase", EXTREMES),
    (27, "Entailment", EXTREMES),
];

/// Canonical type names used by the rule-based baseline and the gateway.
pub mod names {
    pub const INFLECTIONAL: &str = "Inflectional Changes";
    pub const MODAL_VERB: &str = "Modal Verb Changes";
    pub const SPELLING: &str = "Spelling changes";
    pub const SAME_POLARITY_CONTEXTUAL: &str = "Same Polarity Substitution (contextual)";
    pub const CHANGE_OF_FORMAT: &str = "Change of format";
    pub const NEGATION_SWITCHING: &str = "Negation switching";
    pub const PUNCTUATION: &str = "Punctuation changes";
    pub const ADDITION_DELETION: &str = "Addition/Deletion";
    pub const CHANGE_OF_ORDER: &str = "Change of order";
    pub const IDENTITY: &str = "Identity";
    pub const NON_PARAPHRASE: &str = "Non-paraphrase";
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TaxonomyError {
    #[error("duplicate type id {0}")]
    DuplicateId(u16),
    #[error("duplicate type name {0:?}")]
    DuplicateName(String),
    #[error("unknown group name {0:?}")]
    UnknownGroup(String),
    #[error("type id 0 is reserved")]
    ReservedId,
    #[error("unknown paraphrase type {0}")]
    UnknownKey(String),
    #[error("invalid taxonomy document: {0}")]
    Malformed(String),
}

/// One leaf paraphrase type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParaphraseType {
    pub id: TypeId,
    pub name: String,
    pub group: GroupId,
}

/// Lookup key for [`Taxonomy::lookup`].
#[derive(Debug, Clone, Copy)]
pub enum TypeKey<'a> {
    Id(u16),
    Name(&'a str),
}

impl From<u16> for TypeKey<'_> {
    fn from(id: u16) -> Self {
        TypeKey::Id(id)
    }
}

impl From<TypeId> for TypeKey<'_> {
    fn from(id: TypeId) -> Self {
        TypeKey::Id(id.0)
    }
}

impl<'a> From<&'a str> for TypeKey<'a> {
    fn from(name: &'a str) -> Self {
        TypeKey::Name(name)
    }
}

/// Immutable registry of paraphrase types.
#[derive(Debug, Clone)]
pub struct Taxonomy {
    types: Vec<ParaphraseType>,
    groups: Vec<String>,
    scoring_groups: Vec<GroupId>,
    by_id: HashMap<TypeId, usize>,
    by_name: HashMap<String, usize>,
}

#[derive(Debug, Deserialize)]
struct ConfigDoc {
    #[serde(default)]
    groups: Vec<String>,
    #[serde(default)]
    scoring_groups: Option<Vec<String>>,
    types: Vec<ConfigType>,
}

#[derive(Debug, Deserialize)]
struct ConfigType {
    id: u16,
    name: String,
    group: String,
}

fn fold(name: &str) -> String {
    name.trim().to_lowercase()
}

impl Default for Taxonomy {
    fn default() -> Self {
        let types = DEFAULT_TYPES
            .iter()
            .map(|&(id, name, group)| (id, name.to_string(), group.to_string()))
            .collect::<Vec<_>>();
        let groups = DEFAULT_GROUPS.iter().map(|g| g.to_string()).collect();
        Taxonomy::build(groups, None, types).expect("default registry is consistent")
    }
}

impl Taxonomy {
    /// Loads the default registry, merged with `source` when given.
    ///
    /// Entries in `source` replace default entries with the same id and add new
    /// ones otherwise.
    pub fn load(source: Option<&str>) -> Result<Self, TaxonomyError> {
        let Some(source) = source else {
            return Ok(Taxonomy::default());
        };
        let doc: ConfigDoc =
            serde_json::from_str(source).map_err(|e| TaxonomyError::Malformed(e.to_string()))?;

        let mut seen = std::collections::HashSet::new();
        for t in &doc.types {
            if t.id == 0 {
                return Err(TaxonomyError::ReservedId);
            }
            if !seen.insert(t.id) {
                return Err(TaxonomyError::DuplicateId(t.id));
            }
        }

        let mut groups: Vec<String> = DEFAULT_GROUPS.iter().map(|g| g.to_string()).collect();
        for g in doc.groups {
            if !groups.iter().any(|known| fold(known) == fold(&g)) {
                groups.push(g);
            }
        }

        let mut merged: BTreeMap<u16, (String, String)> = DEFAULT_TYPES
            .iter()
            .map(|&(id, name, group)| (id, (name.to_string(), group.to_string())))
            .collect();
        for t in doc.types {
            merged.insert(t.id, (t.name, t.group));
        }
        let types = merged.into_iter().map(|(id, (n, g))| (id, n, g)).collect();
        Taxonomy::build(groups, doc.scoring_groups, types)
    }

    pub fn load_file(path: &Path) -> Result<Self, TaxonomyError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TaxonomyError::Malformed(format!("{}: {e}", path.display())))?;
        Taxonomy::load(Some(&text))
    }

    fn build(
        groups: Vec<String>,
        scoring: Option<Vec<String>>,
        entries: Vec<(u16, String, String)>,
    ) -> Result<Self, TaxonomyError> {
        let group_index = |name: &str| {
            groups
                .iter()
                .position(|g| fold(g) == fold(name))
                .map(GroupId)
                .ok_or_else(|| TaxonomyError::UnknownGroup(name.to_string()))
        };

        let mut types = Vec::with_capacity(entries.len());
        let mut by_id = HashMap::new();
        let mut by_name = HashMap::new();
        for (id, name, group) in entries {
            if id == 0 {
                return Err(TaxonomyError::ReservedId);
            }
            let group = group_index(&group)?;
            if by_id.insert(TypeId(id), types.len()).is_some() {
                return Err(TaxonomyError::DuplicateId(id));
            }
            if by_name.insert(fold(&name), types.len()).is_some() {
                return Err(TaxonomyError::DuplicateName(name));
            }
            types.push(ParaphraseType { id: TypeId(id), name, group });
        }

        let scoring_groups = match scoring {
            Some(names) => names
                .iter()
                .map(|n| group_index(n))
                .collect::<Result<Vec<_>, _>>()?,
            None => (0..groups.len())
                .filter(|&i| groups[i] != EXTREMES)
                .map(GroupId)
                .collect(),
        };

        Ok(Taxonomy {
            types,
            groups,
            scoring_groups,
            by_id,
            by_name,
        })
    }

    /// Registered types in id order for the default registry.
    pub fn types(&self) -> &[ParaphraseType] {
        &self.types
    }

    pub fn groups(&self) -> &[String] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    /// Families that carry their own vote in group-level accuracy.
    pub fn scoring_groups(&self) -> &[GroupId] {
        &self.scoring_groups
    }

    pub fn is_scoring_group(&self, g: GroupId) -> bool {
        self.scoring_groups.contains(&g)
    }

    /// Exact match on id, case-insensitive match on name.
    pub fn lookup<'a>(&self, key: impl Into<TypeKey<'a>>) -> Result<&ParaphraseType, TaxonomyError> {
        match key.into() {
            TypeKey::Id(id) => self
                .by_id
                .get(&TypeId(id))
                .map(|&i| &self.types[i])
                .ok_or_else(|| TaxonomyError::UnknownKey(id.to_string())),
            TypeKey::Name(name) => {
                if name.trim().is_empty() {
                    return Err(TaxonomyError::UnknownKey(String::new()));
                }
                self.by_name
                    .get(&fold(name))
                    .map(|&i| &self.types[i])
                    .ok_or_else(|| TaxonomyError::UnknownKey(name.to_string()))
            }
        }
    }

    /// Id for a canonical type name. Panics if the name is not registered, so only
    /// use it with names known to be in the registry.
    pub fn id_of(&self, name: &str) -> TypeId {
        self.lookup(name)
            .unwrap_or_else(|_| panic!("type {name:?} not registered"))
            .id
    }

    pub fn contains(&self, id: TypeId) -> bool {
        self.by_id.contains_key(&id)
    }

    pub fn group_of(&self, id: TypeId) -> Result<GroupId, TaxonomyError> {
        self.lookup(id).map(|t| t.group)
    }

    pub fn group_name(&self, g: GroupId) -> &str {
        &self.groups[g.0]
    }

    pub fn group_by_name(&self, name: &str) -> Option<GroupId> {
        self.groups
            .iter()
            .position(|g| fold(g) == fold(name))
            .map(GroupId)
    }

    pub fn members(&self, g: GroupId) -> impl Iterator<Item = &ParaphraseType> {
        self.types.iter().filter(move |t| t.group == g)
    }

    pub fn name_of(&self, id: TypeId) -> Option<&str> {
        self.lookup(id).ok().map(|t| t.name.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_registry_matches_table() {
        let t = Taxonomy::load(None).unwrap();
        assert_eq!(t.len(), 26);
        assert_eq!(t.groups().len(), 7);
        let infl = t.lookup("Inflectional Changes").unwrap();
        assert_eq!(t.group_name(infl.group), MORPHOLOGY);
        let counts: Vec<usize> = (0..7).map(|g| t.members(GroupId(g)).count()).collect();
        assert_eq!(counts, vec![3, 5, 4, 5, 3, 3, 3]);
    }

    #[test]
    fn lookup_by_name_and_id() {
        let t = Taxonomy::default();
        let ellipsis = t.lookup("Ellipsis").unwrap();
        assert_eq!(t.group_name(ellipsis.group), SYNTAX);
        assert_eq!(
            t.group_name(t.lookup("addition/deletion").unwrap().group),
            OTHERS
        );
        assert_eq!(t.lookup(0u16), Err(TaxonomyError::UnknownKey("0".into())));
        assert!(t.lookup("").is_err());
    }

    #[test]
    fn group_of_examples() {
        let t = Taxonomy::default();
        let neg = t.id_of("Negation switching");
        assert_eq!(t.group_name(t.group_of(neg).unwrap()), SYNTAX);
        let ident = t.id_of("Identity");
        assert_eq!(t.group_name(t.group_of(ident).unwrap()), EXTREMES);
        assert!(t.group_of(TypeId(0)).is_err());
    }

    #[test]
    fn totality_and_round_trip() {
        let t = Taxonomy::default();
        for ty in t.types() {
            assert!(t.group_of(ty.id).is_ok());
            let by_name = t.lookup(ty.name.as_str()).unwrap();
            assert_eq!(t.lookup(by_name.id).unwrap().name, ty.name);
        }
    }

    #[test]
    fn extremes_is_not_a_scoring_group() {
        let t = Taxonomy::default();
        assert_eq!(t.scoring_groups().len(), 6);
        let ext = t.group_by_name(EXTREMES).unwrap();
        assert!(!t.is_scoring_group(ext));
    }

    #[test]
    fn config_errors() {
        let dup = r#"{"types": [
            {"id": 5, "name": "A", "group": "Others"},
            {"id": 5, "name": "B", "group": "Others"}]}"#;
        assert_eq!(Taxonomy::load(Some(dup)).unwrap_err(), TaxonomyError::DuplicateId(5));

        let zero = r#"{"types": [{"id": 0, "name": "A", "group": "Others"}]}"#;
        assert_eq!(Taxonomy::load(Some(zero)).unwrap_err(), TaxonomyError::ReservedId);

        let group = r#"{"types": [{"id": 40, "name": "A", "group": "Phonology"}]}"#;
        assert!(matches!(
            Taxonomy::load(Some(group)),
            Err(TaxonomyError::UnknownGroup(_))
        ));

        let clash = r#"{"types": [{"id": 40, "name": "identity", "group": "Others"}]}"#;
        assert!(matches!(
            Taxonomy::load(Some(clash)),
            Err(TaxonomyError::DuplicateName(_))
        ));
    }

    #[test]
    fn config_merges_and_extends() {
        let doc = r#"{"groups": ["Phonology"],
            "types": [
              {"id": 20, "name": "Sentence modality changes", "group": "Discourse-based changes"},
              {"id": 4, "name": "Spelling changes", "group": "Others"},
              {"id": 40, "name": "Rhyme", "group": "Phonology"}]}"#;
        let t = Taxonomy::load(Some(doc)).unwrap();
        assert_eq!(t.len(), 28);
        assert_eq!(t.group_name(t.group_of(TypeId(4)).unwrap()), OTHERS);
        assert_eq!(t.lookup(20u16).unwrap().name, "Sentence modality changes");
        assert_eq!(t.group_name(t.group_of(TypeId(40)).unwrap()), "Phonology");
    }
}
