//! Seeded pinyin sentence corpus with enough word-order regularity for an n-gram model
//! to learn.
//!
//! Sentences are walks over a fixed word list where each word may only be followed by
//! a few successors picked once per seed.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

use super::unit_f64;

/// Common words, many carrying a third tone and several differing from another
/// word only in tone.
pub const WORDS: [&str; 48] = [
    "wo3",
    "ni3",
    "ta1",
    "wo3 men5",
    "ni3 men5",
    "hao3",
    "hen3 hao3",
    "xiang3",
    "mai3",
    "mai4",
    "ma3",
    "ma2",
    "yu3",
    "yu2",
    "shui3",
    "shui4 jiao4",
    "xiao3",
    "xiao4",
    "lao3 shi1",
    "xue2 sheng1",
    "zhong1 guo2",
    "bei3 jing1",
    "shang4 hai3",
    "jin1 tian1",
    "ming2 tian1",
    "zuo2 tian1",
    "qu4",
    "lai2",
    "kan4",
    "ting1",
    "shuo1",
    "du2 shu1",
    "xie3 zi4",
    "pao3 bu4",
    "you3",
    "mei2 you3",
    "ye3",
    "hai2",
    "zai4",
    "dian4 ying3",
    "shou3 biao3",
    "gou3",
    "niao3",
    "fan4 guan3",
    "cha2",
    "jiu3",
    "li3 xiang3",
    "zhan3 lan3",
];

const SUCCESSORS: usize = 3;
const MIN_WORDS: usize = 3;
const MAX_WORDS: usize = 7;

/// `n` sentences of space-separated tonal syllables.
pub fn generate_corpus(n: usize, seed: u64) -> Vec<String> {
    let mut rng = SplitMix64::seed_from_u64(seed);
    let w = WORDS.len();
    let next: Vec<Vec<usize>> = (0..w)
        .map(|_| {
            (0..SUCCESSORS)
                .map(|_| (rng.next_u64() % w as u64) as usize)
                .collect()
        })
        .collect();
    (0..n)
        .map(|_| {
            let len = MIN_WORDS + (rng.next_u64() % (MAX_WORDS - MIN_WORDS + 1) as u64) as usize;
            let mut word = (rng.next_u64() % w as u64) as usize;
            let mut parts = Vec::with_capacity(len);
            for _ in 0..len {
                parts.push(WORDS[word]);
                let pick = (unit_f64(&mut rng) * SUCCESSORS as f64) as usize;
                word = next[word][pick.min(SUCCESSORS - 1)];
            }
            parts.join(" ")
        })
        .collect()
}
