//! Entity normalization: mentions are merged into equivalence classes so that
//! every alias of an entity, free text or database identifier, resolves to
//! the same indexed unit.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::corpus::{EntityMention, EntityType};

pub type ClassId = u32;

/// Mention id → class id.
pub type ClassAssignment = HashMap<String, ClassId>;

/// Case-folds, NFC-normalizes, trims and collapses internal whitespace runs
/// to a single space. Used for alias keys and for trigram profiles.
pub fn normalize_text(s: &str) -> String {
    let folded: String = s.nfc().collect::<String>().to_lowercase().nfc().collect();
    folded.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityClass {
    pub class_id: ClassId,
    pub etype: EntityType,
    pub surface_counts: BTreeMap<String, u32>,
    pub external_ids: BTreeSet<String>,
    pub canonical: String,
}

impl EntityClass {
    pub fn mention_count(&self) -> u64 {
        self.surface_counts.values().map(|&c| u64::from(c)).sum()
    }

    /// Member surfaces followed by external ids.
    pub fn aliases(&self) -> impl Iterator<Item = &str> {
        self.surface_counts.keys().chain(self.external_ids.iter()).map(String::as_str)
    }
}

/// The surface with the highest count; ties go to the smallest string in
/// Unicode scalar order.
pub fn canonical_mention(surface_counts: &BTreeMap<String, u32>) -> Option<&str> {
    // BTreeMap iterates ascending, so the first maximum seen is the smallest.
    let mut best: Option<(&str, u32)> = None;
    for (s, &c) in surface_counts {
        if best.is_none_or(|(_, bc)| c > bc) {
            best = Some((s, c));
        }
    }
    best.map(|(s, _)| s)
}

/// The class table plus a case-folded alias lookup.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EntityClasses {
    classes: Vec<EntityClass>,
    aliases: HashMap<String, Vec<ClassId>>,
}

impl EntityClasses {
    /// Wraps a class table whose ids are dense and equal to positions.
    pub fn new(classes: Vec<EntityClass>) -> Self {
        let mut aliases: HashMap<String, Vec<ClassId>> = HashMap::new();
        for class in &classes {
            debug_assert_eq!(classes[class.class_id as usize].class_id, class.class_id);
            for alias in class.aliases() {
                let ids = aliases.entry(normalize_text(alias)).or_default();
                if !ids.contains(&class.class_id) {
                    ids.push(class.class_id);
                }
            }
        }
        for ids in aliases.values_mut() {
            ids.sort_unstable();
        }
        EntityClasses { classes, aliases }
    }

    pub fn as_slice(&self) -> &[EntityClass] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn get(&self, id: ClassId) -> Option<&EntityClass> {
        self.classes.get(id as usize)
    }

    pub fn canonical(&self, id: ClassId) -> &str {
        self.classes.get(id as usize).map_or("", |c| c.canonical.as_str())
    }

    /// Exact case-folded match against member surfaces and external ids.
    /// An alias shared by several classes resolves to the lowest class id.
    pub fn lookup_by_alias(&self, alias: &str) -> Option<ClassId> {
        self.aliases.get(&normalize_text(alias)).and_then(|ids| ids.first().copied())
    }

    /// Every class owning the alias, ascending.
    pub fn classes_for_alias(&self, alias: &str) -> &[ClassId] {
        self.aliases.get(&normalize_text(alias)).map_or(&[], Vec::as_slice)
    }

    pub fn into_inner(self) -> Vec<EntityClass> {
        self.classes
    }
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            let grandparent = self.parent[self.parent[x]];
            self.parent[x] = grandparent;
            x = grandparent;
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                let (root, child) = if ra < rb { (ra, rb) } else { (rb, ra) };
                self.parent[child] = root;
                self.rank[root] += 1;
            }
        }
    }
}

/// Partitions mentions into classes.
///
/// Two mentions are merged when they have the same entity type and either
/// share an external id or have equal normalized surfaces; classes are the
/// transitive closure of that relation. Class ids follow the order of
/// (type, canonical mention).
pub fn build_equivalence_classes(mentions: &[EntityMention]) -> (EntityClasses, ClassAssignment) {
    let mut uf = UnionFind::new(mentions.len());
    let mut first_by_key: HashMap<(EntityType, bool, String), usize> = HashMap::new();
    for (i, m) in mentions.iter().enumerate() {
        let surface_key = (m.etype, false, normalize_text(&m.surface));
        let id_keys = m.external_ids.iter().map(|id| (m.etype, true, id.clone()));
        for key in std::iter::once(surface_key).chain(id_keys) {
            match first_by_key.get(&key) {
                Some(&j) => uf.union(i, j),
                None => {
                    first_by_key.insert(key, i);
                }
            }
        }
    }

    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..mentions.len() {
        groups.entry(uf.find(i)).or_default().push(i);
    }

    let mut classes: Vec<(EntityClass, Vec<usize>)> = groups
        .into_values()
        .map(|members| {
            let mut surface_counts = BTreeMap::new();
            let mut external_ids = BTreeSet::new();
            for &i in &members {
                *surface_counts.entry(mentions[i].surface.clone()).or_insert(0) += 1;
                external_ids.extend(mentions[i].external_ids.iter().cloned());
            }
            let canonical = canonical_mention(&surface_counts).unwrap_or_default().to_string();
            let class = EntityClass { class_id: 0, etype: mentions[members[0]].etype, surface_counts, external_ids, canonical };
            (class, members)
        })
        .collect();
    classes.sort_by(|(a, am), (b, bm)| (a.etype, &a.canonical, am[0]).cmp(&(b.etype, &b.canonical, bm[0])));

    let mut assignment = ClassAssignment::with_capacity(mentions.len());
    let classes = classes
        .into_iter()
        .enumerate()
        .map(|(id, (mut class, members))| {
            class.class_id = id as ClassId;
            for i in members {
                assignment.insert(mentions[i].mention_id.clone(), class.class_id);
            }
            class
        })
        .collect();
    (EntityClasses::new(classes), assignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn mention(id: &str, surface: &str, etype: EntityType, ids: &[&str]) -> EntityMention {
        EntityMention {
            mention_id: id.into(),
            doc_id: "d".into(),
            sent_index: 0,
            start: 0,
            end: surface.chars().count(),
            surface: surface.into(),
            etype,
            external_ids: ids.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn shared_id_merges_surfaces() {
        let ms = vec![
            mention("m1", "IL-1beta", EntityType::Protein, &["HGNC:5992"]),
            mention("m2", "IL1B", EntityType::Protein, &["HGNC:5992", "BERN:323737602"]),
        ];
        let (classes, assignment) = build_equivalence_classes(&ms);
        assert_eq!(classes.len(), 1);
        let c = &classes.as_slice()[0];
        assert_eq!(c.surface_counts.len(), 2);
        assert_eq!(c.external_ids.len(), 2);
        assert_eq!(assignment["m1"], assignment["m2"]);
    }

    #[test]
    fn disjoint_mentions_stay_apart() {
        let ms = vec![
            mention("m1", "Aspirin", EntityType::Chemical, &["MESH:1"]),
            mention("m2", "Ibuprofen", EntityType::Chemical, &["MESH:2"]),
        ];
        assert_eq!(build_equivalence_classes(&ms).0.len(), 2);
    }

    #[test]
    fn transitive_merge() {
        let ms = vec![
            mention("a", "a", EntityType::Chemical, &["ID1"]),
            mention("b", "b", EntityType::Chemical, &["ID1", "ID2"]),
            mention("c", "c", EntityType::Chemical, &["ID2"]),
        ];
        let (classes, assignment) = build_equivalence_classes(&ms);
        assert_eq!(classes.len(), 1);
        assert_eq!(classes.as_slice()[0].mention_count(), 3);
        assert_eq!(assignment.len(), 3);
    }

    #[test]
    fn surface_merge_is_case_insensitive_but_type_gated() {
        let ms = vec![
            mention("a", "Insulin", EntityType::Protein, &[]),
            mention("b", "insulin", EntityType::Protein, &[]),
            mention("c", "insulin", EntityType::Chemical, &[]),
        ];
        let (classes, assignment) = build_equivalence_classes(&ms);
        assert_eq!(classes.len(), 2);
        assert_eq!(assignment["a"], assignment["b"]);
        assert_ne!(assignment["a"], assignment["c"]);
        // chemicals sort first
        assert_eq!(classes.get(assignment["c"]).unwrap().etype, EntityType::Chemical);
        assert_eq!(assignment["c"], 0);
    }

    #[test]
    fn canonical_examples() {
        let counts = |pairs: &[(&str, u32)]| pairs.iter().map(|(s, c)| (s.to_string(), *c)).collect::<BTreeMap<_, _>>();
        assert_eq!(canonical_mention(&counts(&[("il-6", 3), ("interleukin 6", 1)])), Some("il-6"));
        assert_eq!(canonical_mention(&counts(&[("only", 1)])), Some("only"));
        assert_eq!(canonical_mention(&counts(&[("abl", 2), ("ABL", 2)])), Some("ABL"));
        assert_eq!(canonical_mention(&BTreeMap::new()), None);
    }

    #[test]
    fn alias_lookup() {
        let ms = vec![
            mention("m1", "il-1beta", EntityType::Protein, &["HGNC:5992"]),
            mention("m2", "IL1B", EntityType::Protein, &["HGNC:5992"]),
            mention("m3", "Aspirin", EntityType::Chemical, &[]),
        ];
        let (classes, assignment) = build_equivalence_classes(&ms);
        assert_eq!(classes.lookup_by_alias("hgnc:5992"), Some(assignment["m1"]));
        assert_eq!(classes.lookup_by_alias("IL1B"), classes.lookup_by_alias("il-1beta"));
        assert_eq!(classes.lookup_by_alias("  ASPIRIN "), Some(assignment["m3"]));
        assert_eq!(classes.lookup_by_alias("zzz-unknown"), None);
    }

    #[test]
    fn normalization_pipeline() {
        assert_eq!(normalize_text("  Interleukin\t 1B \n"), "interleukin 1b");
        // decomposed e + combining acute folds to the composed form
        assert_eq!(normalize_text("Cafe\u{301}ine"), normalize_text("CAFÉINE"));
    }

    fn arb_mentions() -> impl Strategy<Value = Vec<EntityMention>> {
        proptest::collection::vec(
            (0usize..5, any::<bool>(), proptest::collection::btree_set(0usize..6, 0..3), any::<bool>()),
            0..25,
        )
        .prop_map(|rows| {
            let surfaces = ["aa", "AA", "bb", "cc", "dd"];
            rows.into_iter()
                .enumerate()
                .map(|(i, (s, chem, ids, upper))| {
                    let surface = if upper { surfaces[s].to_uppercase() } else { surfaces[s].to_string() };
                    let etype = if chem { EntityType::Chemical } else { EntityType::Protein };
                    let ids: BTreeSet<String> = ids.into_iter().map(|k| format!("ID:{k}")).collect();
                    EntityMention {
                        mention_id: format!("m{i}"),
                        doc_id: "d".into(),
                        sent_index: 0,
                        start: 0,
                        end: 2,
                        surface,
                        etype,
                        external_ids: ids,
                    }
                })
                .collect()
        })
    }

    fn partition(ms: &[EntityMention]) -> BTreeSet<BTreeSet<String>> {
        let (_, assignment) = build_equivalence_classes(ms);
        let mut groups: BTreeMap<ClassId, BTreeSet<String>> = BTreeMap::new();
        for (m, c) in assignment {
            groups.entry(c).or_default().insert(m);
        }
        groups.into_values().collect()
    }

    proptest! {
        #[test]
        fn partition_properties(ms in arb_mentions(), seed in any::<u64>()) {
            let (classes, assignment) = build_equivalence_classes(&ms);
            prop_assert_eq!(assignment.len(), ms.len());
            let total: u64 = classes.as_slice().iter().map(EntityClass::mention_count).sum();
            prop_assert_eq!(total, ms.len() as u64);
            for (i, c) in classes.as_slice().iter().enumerate() {
                prop_assert_eq!(c.class_id as usize, i);
                prop_assert!(c.surface_counts.contains_key(&c.canonical));
            }
            for m in &ms {
                let c = classes.get(assignment[&m.mention_id]).unwrap();
                prop_assert_eq!(c.etype, m.etype);
            }
            // aliases of one class all resolve to a class owning them
            for c in classes.as_slice() {
                for alias in c.aliases() {
                    prop_assert!(classes.classes_for_alias(alias).contains(&c.class_id));
                }
            }

            // permuting the input keeps the partition
            let mut shuffled = ms.clone();
            let mut state = seed | 1;
            for i in (1..shuffled.len()).rev() {
                state ^= state << 13; state ^= state >> 7; state ^= state << 17;
                shuffled.swap(i, (state % (i as u64 + 1)) as usize);
            }
            prop_assert_eq!(partition(&ms), partition(&shuffled));
        }
    }
}
