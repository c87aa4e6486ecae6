//! Test support for swtag: random inventories, corpora and rule sets, plus
//! brute-force reference implementations of the estimators.
//!
//! The oracles deliberately share no code with the library's estimation
//! path. They count windows themselves, enumerate the whole key space, and
//! test compatibility by per-position membership instead of expanding
//! tag-sequence products.

pub mod oracle;

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use swtag::{AmbiguityInventory, AmbiguousText, ClassId, RuleSet, TagId, TagInventory, Token};

pub use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `|a - b|` relative to the larger magnitude, floored at 1.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// A random tag set of `n_tags` real tags and a pool of distinct classes.
pub struct RandomLanguage {
    pub tags: TagInventory,
    pub classes: AmbiguityInventory,
    pub pool: Vec<ClassId>,
}

pub fn random_language<R: Rng>(rng: &mut R, n_tags: usize, n_classes: usize) -> RandomLanguage {
    let mut tags = TagInventory::new();
    for i in 0..n_tags {
        tags.add(&format!("T{i}")).unwrap();
    }
    let mut classes = AmbiguityInventory::new(&tags);
    let real: Vec<TagId> = tags.ids().skip(1).collect();
    let mut pool = BTreeSet::new();
    // every tag gets a singleton so unambiguous tokens always occur
    for &t in &real {
        pool.insert(classes.intern([t]).unwrap());
    }
    let mut attempts = 0;
    while pool.len() < n_classes && attempts < 200 {
        attempts += 1;
        let size = rng.gen_range(1..=real.len());
        let set: Vec<TagId> = real.choose_multiple(rng, size).copied().collect();
        pool.insert(classes.intern(set).unwrap());
    }
    RandomLanguage {
        tags,
        classes,
        pool: pool.into_iter().collect(),
    }
}

/// A random text of at most `max_tokens` tokens over `pool`, split into
/// 1-3 documents. Gold tags are drawn uniformly from each token's class.
pub fn random_text<R: Rng>(rng: &mut R, lang: &RandomLanguage, max_tokens: usize) -> AmbiguousText {
    let total = rng.gen_range(1..=max_tokens);
    let n_docs = rng.gen_range(1..=3usize).min(total);
    let mut cuts: Vec<usize> = (1..total).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts.into_iter().take(n_docs - 1).collect();
    cuts.push(0);
    cuts.push(total);
    cuts.sort_unstable();
    let mut text = AmbiguousText::new();
    for w in cuts.windows(2) {
        let doc = (w[0]..w[1])
            .map(|_| {
                let class = *lang.pool.choose(rng).unwrap();
                let gold = *lang.classes.tags_of(class).unwrap().choose(rng).unwrap();
                Token {
                    surface: format!("c{}", class.0),
                    class,
                    gold: Some(gold),
                }
            })
            .collect();
        text.push_document(doc);
    }
    text
}

/// A random, internally consistent rule set over the real tags.
pub fn random_rules<R: Rng>(rng: &mut R, tags: &TagInventory) -> RuleSet {
    let real: Vec<TagId> = tags.ids().skip(1).collect();
    let mut rules = RuleSet::new();
    for &a in &real {
        for &b in &real {
            if rng.gen_bool(0.2) {
                rules.add_forbid(a, b).unwrap();
            }
        }
    }
    for &a in &real {
        if rng.gen_bool(0.25) {
            let allowed: Vec<TagId> = real
                .iter()
                .copied()
                .filter(|b| !rules.forbidden().contains(&(a, *b)) && rng.gen_bool(0.5))
                .collect();
            if !allowed.is_empty() {
                rules.add_enforce(a, allowed).unwrap();
            }
        }
    }
    rules
}

/// Like [`random_text`], but the gold tag path never breaks `rules`, so
/// every window admits at least one rule-valid tag sequence.
pub fn random_text_obeying<R: Rng>(
    rng: &mut R,
    lang: &RandomLanguage,
    rules: &RuleSet,
    max_tokens: usize,
) -> AmbiguousText {
    let real: Vec<TagId> = lang.tags.ids().skip(1).collect();
    let total = rng.gen_range(1..=max_tokens);
    let mut text = AmbiguousText::new();
    let mut doc = Vec::new();
    let mut prev = TagId::EOS;
    for _ in 0..total {
        let next: Vec<TagId> = real.iter().copied().filter(|t| rules.bigram_valid(prev, *t)).collect();
        if next.is_empty() || (!doc.is_empty() && rng.gen_bool(0.1)) {
            text.push_document(std::mem::take(&mut doc));
            prev = TagId::EOS;
            continue;
        }
        let gold = *next.choose(rng).unwrap();
        let hosts: Vec<ClassId> = lang
            .pool
            .iter()
            .copied()
            .filter(|c| lang.classes.tags_of(*c).unwrap().contains(&gold))
            .collect();
        let class = *hosts.choose(rng).unwrap();
        doc.push(Token {
            surface: format!("c{}", class.0),
            class,
            gold: Some(gold),
        });
        prev = gold;
    }
    text.push_document(doc);
    text
}
