//! Deterministic fixture builders shared by the benchmarks.

use std::collections::BTreeSet;

use langsel_core::lattice::Lattice;
use langsel_core::ngram::{interpolate, LanguageModel};
use langsel_core::rng::Xoshiro256StarStar;
use langsel_core::selection::PipelineConfig;
use langsel_core::simulate::{gen_lattice, ConfusionModel, GeneratorConfig};

pub fn language_words(language: usize) -> Vec<String> {
    const SYL: [[&str; 8]; 2] = [
        ["ba", "ko", "mi", "tu", "sa", "pe", "do", "ni"],
        ["ve", "zu", "gri", "fo", "la", "re", "dy", "qo"],
    ];
    let syl = SYL[language];
    let mut words = Vec::with_capacity(40);
    'outer: for i in 0..8 {
        for j in 0..8 {
            if i == j {
                continue;
            }
            words.push(format!("{}{}", syl[i], syl[j]));
            if words.len() == 40 {
                break 'outer;
            }
        }
    }
    words
}

pub fn synth_sentences(words: &[String], count: usize, seed: u64) -> Vec<Vec<String>> {
    let n = words.len();
    let mut pref_rng = Xoshiro256StarStar::seed_from_u64(seed ^ 0x5EED);
    let prefs: Vec<[usize; 3]> = (0..n)
        .map(|_| {
            [
                pref_rng.next_index(n),
                pref_rng.next_index(n),
                pref_rng.next_index(n),
            ]
        })
        .collect();
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let len = 3 + rng.next_index(7);
            let mut w = rng.next_index(n);
            let mut sentence = vec![words[w].clone()];
            for _ in 1..len {
                w = if rng.next_f64() < 0.75 {
                    prefs[w][rng.next_index(3)]
                } else {
                    rng.next_index(n)
                };
                sentence.push(words[w].clone());
            }
            sentence
        })
        .collect()
}

/// Bilingual pipeline configuration plus a batch of noisy lattices.
pub fn bilingual_fixture(utterances: usize) -> (PipelineConfig, Vec<Lattice>) {
    let words0 = language_words(0);
    let words1 = language_words(1);
    let lm1 = LanguageModel::train(&synth_sentences(&words0, 400, 1), 3, None).unwrap();
    let lm2 = LanguageModel::train(&synth_sentences(&words1, 400, 2), 3, None).unwrap();
    let lm0 = interpolate(&lm1, &lm2, 0.5).unwrap();
    let cfg = PipelineConfig::new(lm0, vec![lm1, lm2]).unwrap();

    let mut noise = ConfusionModel::new(0.15, 0.0, 0.0, 0.5).unwrap();
    for (a, b) in words0.iter().zip(&words1) {
        noise.add_confusion(a.clone(), b.clone(), -0.3).unwrap();
        noise.add_confusion(b.clone(), a.clone(), -0.3).unwrap();
    }
    let vocabulary: BTreeSet<String> = words0.iter().chain(&words1).cloned().collect();

    let refs = synth_sentences(&words0, utterances, 3);
    let lattices = refs
        .iter()
        .enumerate()
        .map(|(i, sentence)| {
            let gen_cfg = GeneratorConfig::new(100 + i as u64, 2, vocabulary.clone()).unwrap();
            gen_lattice(&format!("bench-{i}"), sentence, &noise, &gen_cfg).unwrap()
        })
        .collect();
    (cfg, lattices)
}
