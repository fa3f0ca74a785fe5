//! Double-occurrence words: parsing, canonical forms, enumeration.
//!
//! A Gauss code records the cyclic sequence of crossing labels met along a
//! closed curve; every crossing appears exactly twice. Two codes describe the
//! same unbased, unoriented pattern iff they agree up to rotation, reversal,
//! and relabeling, so the canonical form minimizes over that whole orbit.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_MAX_CROSSINGS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GaussCode {
    /// Labels 1..=n, each appearing exactly twice. Empty for the embedded circle.
    pub word: Vec<u32>,
}

impl GaussCode {
    pub fn crossings(&self) -> usize {
        self.word.len() / 2
    }

    pub fn render_text(&self) -> String {
        self.word
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Canonical representative plus the symmetry taking the input to it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalCode {
    pub code: GaussCode,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub rotation: usize,
    pub reflected: bool,
    /// relabel[old_label - 1] = new label.
    pub relabel: Vec<u32>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodeError {
    #[error("malformed token {0:?}")]
    MalformedToken(String),
    #[error("label {0} appears {1} times, expected 2")]
    OccurrenceError(u32, usize),
    #[error("word has odd length {0}")]
    OddLength(usize),
    #[error("crossing count {0} exceeds limit {1}")]
    LimitExceeded(usize, usize),
}

/// Parses a whitespace-separated label string; labels are normalized to
/// 1..=n in order of first appearance.
pub fn parse_code(text: &str) -> Result<GaussCode, CodeError> {
    let mut raw = Vec::new();
    for tok in text.split_whitespace() {
        let v: u64 = tok
            .parse()
            .map_err(|_| CodeError::MalformedToken(tok.to_string()))?;
        if v == 0 {
            return Err(CodeError::MalformedToken(tok.to_string()));
        }
        raw.push(v);
    }
    if raw.len() % 2 != 0 {
        return Err(CodeError::OddLength(raw.len()));
    }
    // Occurrence check before normalization so the error names the input label.
    let mut counts = std::collections::BTreeMap::new();
    for &v in &raw {
        *counts.entry(v).or_insert(0usize) += 1;
    }
    for (&label, &count) in &counts {
        if count != 2 {
            return Err(CodeError::OccurrenceError(label as u32, count));
        }
    }
    Ok(GaussCode { word: normalize_first_appearance_u64(&raw) })
}

fn normalize_first_appearance_u64(word: &[u64]) -> Vec<u32> {
    let mut map = std::collections::HashMap::new();
    let mut next = 1u32;
    word.iter()
        .map(|&l| {
            *map.entry(l).or_insert_with(|| {
                let v = next;
                next += 1;
                v
            })
        })
        .collect()
}

fn normalize_first_appearance(word: &[u32]) -> Vec<u32> {
    let mut map = vec![0u32; word.len() / 2 + 1];
    let mut next = 1u32;
    word.iter()
        .map(|&l| {
            if map[l as usize] == 0 {
                map[l as usize] = next;
                next += 1;
            }
            map[l as usize]
        })
        .collect()
}

/// Lexicographic minimum over all rotations, both directions, and all label
/// bijections. Relabeling by first appearance after fixing rotation and
/// direction realizes the minimum over bijections.
pub fn canonical_code(code: &GaussCode) -> CanonicalCode {
    let len = code.word.len();
    if len == 0 {
        return CanonicalCode {
            code: code.clone(),
            provenance: Provenance { rotation: 0, reflected: false, relabel: Vec::new() },
        };
    }
    let mut best: Option<(Vec<u32>, usize, bool)> = None;
    for reflected in [false, true] {
        let base: Vec<u32> = if reflected {
            code.word.iter().rev().copied().collect()
        } else {
            code.word.clone()
        };
        for rot in 0..len {
            let rotated: Vec<u32> = base[rot..].iter().chain(base[..rot].iter()).copied().collect();
            let norm = normalize_first_appearance(&rotated);
            let better = match &best {
                None => true,
                Some((w, _, _)) => norm < *w,
            };
            if better {
                best = Some((norm, rot, reflected));
            }
        }
    }
    let (word, rotation, reflected) = best.unwrap();
    // Recover the label bijection from the winning rotation/direction.
    let base: Vec<u32> = if reflected {
        code.word.iter().rev().copied().collect()
    } else {
        code.word.clone()
    };
    let rotated: Vec<u32> = base[rotation..].iter().chain(base[..rotation].iter()).copied().collect();
    let mut relabel = vec![0u32; len / 2];
    for (old, new) in rotated.iter().zip(&word) {
        relabel[*old as usize - 1] = *new;
    }
    CanonicalCode {
        code: GaussCode { word },
        provenance: Provenance { rotation, reflected, relabel },
    }
}

/// All canonical double-occurrence words with exactly `n` labels, sorted.
/// Realizability is not filtered here.
pub fn enumerate_words(n: usize, max_crossings: usize) -> Result<Vec<GaussCode>, CodeError> {
    if n > max_crossings {
        return Err(CodeError::LimitExceeded(n, max_crossings));
    }
    if n == 0 {
        return Ok(vec![GaussCode { word: Vec::new() }]);
    }
    // Generate every word in first-appearance normal form by backtracking,
    // then canonicalize and dedup. (2n-1)!! words before dedup.
    let mut out = BTreeSet::new();
    let mut word = Vec::with_capacity(2 * n);
    gen_words(n, &mut word, &mut vec![0u8; n + 1], &mut out);
    Ok(out.into_iter().collect())
}

fn gen_words(n: usize, word: &mut Vec<u32>, used: &mut Vec<u8>, out: &mut BTreeSet<GaussCode>) {
    if word.len() == 2 * n {
        out.insert(canonical_code(&GaussCode { word: word.clone() }).code);
        return;
    }
    let max_seen = (1..=n).rev().find(|&l| used[l] > 0).unwrap_or(0);
    // Either repeat an open label or open the next fresh one.
    for l in 1..=max_seen {
        if used[l] == 1 {
            used[l] = 2;
            word.push(l as u32);
            gen_words(n, word, used, out);
            word.pop();
            used[l] = 1;
        }
    }
    if max_seen < n {
        let l = max_seen + 1;
        used[l] = 1;
        word.push(l as u32);
        gen_words(n, word, used, out);
        word.pop();
        used[l] = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn code(word: &[u32]) -> GaussCode {
        GaussCode { word: word.to_vec() }
    }

    #[test]
    fn parse_basic() {
        assert_eq!(parse_code("1 1").unwrap(), code(&[1, 1]));
        assert_eq!(parse_code("").unwrap(), code(&[]));
        assert_eq!(parse_code("1 2 1"), Err(CodeError::OddLength(3)));
        assert_eq!(parse_code("1 2 1 1"), Err(CodeError::OccurrenceError(1, 3)));
        assert_eq!(parse_code("1 x 1 x"), Err(CodeError::MalformedToken("x".into())));
        // Normalization by first appearance.
        assert_eq!(parse_code("7 3 7 3").unwrap(), code(&[1, 2, 1, 2]));
    }

    #[test]
    fn canonical_examples() {
        assert_eq!(canonical_code(&code(&[2, 1, 2, 1])).code, code(&[1, 2, 1, 2]));
        assert_eq!(canonical_code(&code(&[1, 1, 2, 2])).code, code(&[1, 1, 2, 2]));
        // Brute-force oracle for [1,2,2,1]: minimum over all 2 * 4 symmetry
        // images, each first-appearance normalized.
        let w = [1u32, 2, 2, 1];
        let mut orbit = Vec::new();
        for reflected in [false, true] {
            let base: Vec<u32> = if reflected { w.iter().rev().copied().collect() } else { w.to_vec() };
            for rot in 0..4 {
                let r: Vec<u32> = base[rot..].iter().chain(base[..rot].iter()).copied().collect();
                orbit.push(normalize_first_appearance(&r));
            }
        }
        let expected = orbit.into_iter().min().unwrap();
        assert_eq!(expected, vec![1, 1, 2, 2]);
        assert_eq!(canonical_code(&code(&[1, 2, 2, 1])).code, code(&[1, 1, 2, 2]));
    }

    #[test]
    fn enumerate_small() {
        assert_eq!(enumerate_words(0, 8).unwrap(), vec![code(&[])]);
        assert_eq!(enumerate_words(1, 8).unwrap(), vec![code(&[1, 1])]);
        assert_eq!(
            enumerate_words(2, 8).unwrap(),
            vec![code(&[1, 1, 2, 2]), code(&[1, 2, 1, 2])]
        );
        // Brute force over all arrangements of {1,1,2,2} as an oracle.
        let mut oracle = BTreeSet::new();
        let labels = [1u32, 1, 2, 2];
        let mut perm = labels;
        permute(&mut perm, 0, &mut oracle);
        assert_eq!(
            oracle.into_iter().collect::<Vec<_>>(),
            enumerate_words(2, 8).unwrap()
        );
        // Double-occurrence words with 3 labels up to rotation, reversal, and
        // relabeling: 5 classes (of which 3 are sphere-realizable, each with
        // one or more embeddings).
        assert_eq!(enumerate_words(3, 8).unwrap().len(), 5);
        assert!(matches!(enumerate_words(9, 8), Err(CodeError::LimitExceeded(9, 8))));
    }

    fn permute(arr: &mut [u32; 4], k: usize, out: &mut BTreeSet<GaussCode>) {
        if k == 4 {
            out.insert(canonical_code(&GaussCode { word: arr.to_vec() }).code);
            return;
        }
        for i in k..4 {
            arr.swap(k, i);
            permute(arr, k + 1, out);
            arr.swap(k, i);
        }
    }

    #[test]
    fn text_round_trip() {
        for n in 0..=3 {
            for c in enumerate_words(n, 8).unwrap() {
                assert_eq!(parse_code(&c.render_text()).unwrap(), c);
            }
        }
    }

    fn arb_word(max_n: usize) -> impl Strategy<Value = Vec<u32>> {
        (1..=max_n).prop_flat_map(|n| {
            let positions: Vec<u32> = (1..=n as u32).flat_map(|l| [l, l]).collect();
            Just(positions).prop_shuffle()
        })
    }

    proptest! {
        #[test]
        fn canonical_idempotent(w in arb_word(5)) {
            let c = canonical_code(&code(&normalize_first_appearance(&w)));
            let c2 = canonical_code(&c.code);
            prop_assert_eq!(&c2.code, &c.code);
        }

        #[test]
        fn canonical_orbit_invariant(w in arb_word(4), rot in 0usize..8, reflect in any::<bool>()) {
            let w = normalize_first_appearance(&w);
            let len = w.len();
            let rot = rot % len;
            let mut img: Vec<u32> = if reflect { w.iter().rev().copied().collect() } else { w.clone() };
            img.rotate_left(rot);
            let img = normalize_first_appearance(&img);
            prop_assert_eq!(
                canonical_code(&code(&w)).code,
                canonical_code(&code(&img)).code
            );
        }
    }
}
