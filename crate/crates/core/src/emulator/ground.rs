use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::action::{ActionKind, EmuAction};
use super::world::WorldState;

/// Word pairs treated as the same category.
pub const SYNONYMS: &[(&str, &str)] = &[
    ("cap", "hat"),
    ("remote", "remote_control"),
    ("controller", "remote"),
    ("fridge", "refrigerator"),
    ("mug", "cup"),
    ("trash", "bin"),
    ("trashbin", "bin"),
    ("garbage", "bin"),
    ("faucet", "tap"),
    ("sofa", "couch"),
    ("desk", "table"),
    ("rag", "cloth"),
    ("towel", "cloth"),
    ("clothing", "cloth"),
    ("telly", "tv"),
];

fn canon(w: &str) -> &str {
    SYNONYMS.iter().find(|(a, _)| *a == w).map(|(_, b)| *b).unwrap_or(w)
}

/// Lower-case words of a name without counters like `1` or `v2`.
pub fn name_tokens(s: &str) -> Vec<String> {
    s.to_lowercase()
        .split(|c: char| c == '_' || c == '-' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .filter(|t| !t.chars().all(|c| c.is_ascii_digit()))
        .filter(|t| !(t.len() > 1 && t.starts_with('v') && t[1..].chars().all(|c| c.is_ascii_digit())))
        .map(String::from)
        .collect()
}

const EXACT: u32 = 1000;
const HEAD: u32 = 3;

/// 3 for a category match plus one per shared attribute word; 0 means
/// the object cannot be meant.
pub fn match_score(name: &str, id: &str, tags: &BTreeSet<String>) -> u32 {
    if name.eq_ignore_ascii_case(id) {
        return EXACT;
    }
    let words = name_tokens(name);
    let Some(head) = words.last() else { return 0 };
    let whole = canon(&words.join("_")).to_string();
    let head = canon(head).to_string();
    let id_words = name_tokens(id);
    let mut categories: BTreeSet<String> = BTreeSet::new();
    if let Some(h) = id_words.last() {
        categories.insert(canon(h).to_string());
    }
    for t in tags {
        categories.insert(canon(t).to_string());
        if let Some(h) = t.rsplit('_').next() {
            categories.insert(canon(h).to_string());
        }
    }
    if !categories.contains(&head) && !categories.contains(&whole) {
        return 0;
    }
    let known: BTreeSet<String> = id_words.iter().chain(tags.iter()).map(|w| canon(w).to_string()).collect();
    let attrs = words[..words.len() - 1].iter().filter(|w| known.contains(canon(w))).count() as u32;
    HEAD + attrs
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Unresolved {
    pub name: String,
    pub node: String,
    /// First action that uses the name.
    pub step: usize,
}

/// Plan-name to object-id assignment. Names re-matched at a later node
/// appear again under `name@node`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ObjectMapping(pub BTreeMap<String, String>);

fn needs_grounding(k: ActionKind) -> bool {
    !matches!(k, ActionKind::Move | ActionKind::OpenDoor)
}

/// Maps each object name used by the plan to an object in the world.
/// A name is matched only against objects initially at the node where
/// the robot first uses it; each object takes at most one name.
pub fn ground_objects(actions: &[EmuAction], w: &WorldState) -> Result<(Vec<EmuAction>, ObjectMapping), Unresolved> {
    let (out, mapping, mut missing) = ground_partial(actions, w);
    match missing.is_empty() {
        true => Ok((out, mapping)),
        false => Err(missing.remove(0)),
    }
}

/// Like [`ground_objects`] but keeps going: unresolved names are left as
/// they are and reported, ordered by first use.
pub fn ground_partial(actions: &[EmuAction], w: &WorldState) -> (Vec<EmuAction>, ObjectMapping, Vec<Unresolved>) {
    let mut at = w.robot_at.clone();
    let mut first: BTreeMap<String, (String, usize)> = BTreeMap::new();
    for (i, a) in actions.iter().enumerate() {
        if a.kind == ActionKind::Move {
            at = a.target.clone();
        } else if needs_grounding(a.kind) {
            first.entry(a.target.clone()).or_insert((at.clone(), i));
        }
    }
    let mut by_node: BTreeMap<String, Vec<(String, usize)>> = BTreeMap::new();
    for (name, (node, step)) in &first {
        by_node.entry(node.clone()).or_default().push((name.clone(), *step));
    }
    let mut missing = Vec::new();
    let mapping: BTreeMap<String, String> =
        assign_groups(w, &by_node, &BTreeMap::new(), &mut missing).into_iter().map(|((_, n), id)| (n, id)).collect();

    // Furniture cannot move, so a name first matched to a fixed object and
    // later used elsewhere (a generic "table") is matched again there.
    let mut later: BTreeMap<String, Vec<(String, usize)>> = BTreeMap::new();
    let mut at = w.robot_at.clone();
    for (i, a) in actions.iter().enumerate() {
        if a.kind == ActionKind::Move {
            at = a.target.clone();
        } else if let Some(id) = mapping.get(&a.target).filter(|_| needs_grounding(a.kind)) {
            if w.objects[id].fixed && w.node_of(id) != Some(at.as_str()) {
                let slot = later.entry(at.clone()).or_default();
                if !slot.iter().any(|(n, _)| *n == a.target) {
                    slot.push((a.target.clone(), i));
                }
            }
        }
    }
    let extra = assign_groups(w, &later, &mapping, &mut missing);
    missing.sort_by_key(|u| u.step);

    let mut at = w.robot_at.clone();
    let out = actions
        .iter()
        .map(|a| {
            let mut a = a.clone();
            if a.kind == ActionKind::Move {
                at = a.target.clone();
            } else if needs_grounding(a.kind) {
                let id = extra.get(&(at.clone(), a.target.clone()));
                if let Some(id) = id.or_else(|| mapping.get(&a.target)) {
                    a.target = id.clone();
                }
            }
            a
        })
        .collect();
    let mut all = mapping;
    for ((node, n), id) in extra {
        all.insert(format!("{n}@{node}"), id);
    }
    (out, ObjectMapping(all), missing)
}

/// Matches each node's names against the objects there, skipping objects
/// `taken` already claims.
fn assign_groups(
    w: &WorldState,
    groups: &BTreeMap<String, Vec<(String, usize)>>,
    taken: &BTreeMap<String, String>,
    missing: &mut Vec<Unresolved>,
) -> BTreeMap<(String, String), String> {
    let mut mapping = BTreeMap::new();
    for (node, names) in groups {
        let cands: Vec<&str> = w.objects_at(node).into_iter().filter(|c| !taken.values().any(|t| t == c)).collect();
        let scores: Vec<Vec<u32>> = names
            .iter()
            .map(|(n, _)| cands.iter().map(|c| match_score(n, c, &w.objects[*c].tags)).collect())
            .collect();
        let best = assign(&scores);
        for (k, (name, step)) in names.iter().enumerate() {
            match best[k] {
                Some(j) => {
                    mapping.insert((node.clone(), name.clone()), cands[j].to_string());
                }
                None => missing.push(Unresolved { name: name.clone(), node: node.clone(), step: *step }),
            }
        }
    }
    mapping
}

/// Maximises (names assigned, total score) by depth-first search over
/// names in order; candidates are tried in order so the first optimum
/// found is the lexicographically smallest.
fn assign(scores: &[Vec<u32>]) -> Vec<Option<usize>> {
    struct S<'a> {
        scores: &'a [Vec<u32>],
        used: Vec<bool>,
        cur: Vec<Option<usize>>,
        best: Vec<Option<usize>>,
        best_val: (usize, u32),
        /// Upper bound on what names k.. can still add.
        tail: Vec<(usize, u32)>,
    }
    fn go(s: &mut S, k: usize, val: (usize, u32)) {
        if k == s.scores.len() {
            if val > s.best_val {
                s.best_val = val;
                s.best = s.cur.clone();
            }
            return;
        }
        let bound = (val.0 + s.tail[k].0, val.1 + s.tail[k].1);
        if bound <= s.best_val {
            return;
        }
        for j in 0..s.scores[k].len() {
            let sc = s.scores[k][j];
            if sc == 0 || s.used[j] {
                continue;
            }
            s.used[j] = true;
            s.cur[k] = Some(j);
            go(s, k + 1, (val.0 + 1, val.1 + sc));
            s.used[j] = false;
            s.cur[k] = None;
        }
        go(s, k + 1, val);
    }
    let n = scores.len();
    let mut tail = vec![(0usize, 0u32); n + 1];
    for k in (0..n).rev() {
        let m = scores[k].iter().copied().max().unwrap_or(0);
        tail[k] = (tail[k + 1].0 + usize::from(m > 0), tail[k + 1].1 + m);
    }
    let width = scores.first().map_or(0, Vec::len);
    let mut s = S { scores, used: vec![false; width], cur: vec![None; n], best: vec![None; n], best_val: (0, 0), tail };
    go(&mut s, 0, (0, 0));
    s.best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tags(t: &[&str]) -> BTreeSet<String> {
        t.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn category_beats_adjective() {
        let plate = match_score("white_plate", "red_plate_v1", &tags(&[]));
        let table = match_score("white_plate", "white_table_main", &tags(&[]));
        assert!(plate > 0);
        assert_eq!(table, 0);
        assert_eq!(assign(&[vec![plate, table]]), vec![Some(0)]);
    }

    #[test]
    fn synonyms_and_exact() {
        assert!(match_score("cap", "hat_v1", &tags(&[])) > 0);
        assert_eq!(match_score("cap", "wooden_table", &tags(&[])), 0);
        assert_eq!(match_score("apple_1", "apple_1", &tags(&[])), EXACT);
        assert!(match_score("washing_machine", "washer_1", &tags(&["washing_machine"])) > 0);
        assert!(match_score("fridge", "fridge_1", &tags(&[])) > 0);
    }

    #[test]
    fn one_to_one() {
        // Both names prefer object 0; the pink one must take object 1.
        let s = vec![vec![4, 3], vec![3, 4]];
        assert_eq!(assign(&s), vec![Some(0), Some(1)]);
        let s = vec![vec![3, 0], vec![4, 0]];
        assert_eq!(assign(&s), vec![None, Some(0)]);
        // Ties go to the earlier candidate.
        assert_eq!(assign(&[vec![3, 3]]), vec![Some(0)]);
    }
}
