use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use langsel_bench::{bilingual_fixture, language_words, synth_sentences};
use langsel_core::lattice::{best_path, nbest, rescore, ScoreConfig};
use langsel_core::ngram::{interpolate, LanguageModel};
use langsel_core::selection::decode;

fn bench_lm_queries(c: &mut Criterion) {
    let words = language_words(0);
    let corpus = synth_sentences(&words, 400, 1);
    let lm = LanguageModel::train(&corpus, 3, None).unwrap();
    let sentences = synth_sentences(&words, 50, 9);

    c.bench_function("sentence_logprob/50", |b| {
        b.iter(|| {
            let mut total = 0.0;
            for s in &sentences {
                total += lm.sentence_logprob(black_box(s));
            }
            total
        })
    });

    c.bench_function("perplexity/400-sentences", |b| {
        b.iter(|| lm.perplexity(black_box(&corpus), false).unwrap().0)
    });
}

fn bench_train_and_merge(c: &mut Criterion) {
    let words0 = language_words(0);
    let words1 = language_words(1);
    let corpus0 = synth_sentences(&words0, 400, 1);
    let corpus1 = synth_sentences(&words1, 400, 2);

    c.bench_function("train/order3-400", |b| {
        b.iter(|| LanguageModel::train(black_box(&corpus0), 3, None).unwrap())
    });

    let a = LanguageModel::train(&corpus0, 3, None).unwrap();
    let bm = LanguageModel::train(&corpus1, 3, None).unwrap();
    c.bench_function("interpolate/0.5", |b| {
        b.iter(|| interpolate(black_box(&a), black_box(&bm), 0.5).unwrap())
    });
}

fn bench_lattice_ops(c: &mut Criterion) {
    let (cfg, lattices) = bilingual_fixture(40);
    let scales = ScoreConfig::default();

    c.bench_function("rescore/40-lattices", |b| {
        b.iter(|| {
            for lat in &lattices {
                black_box(rescore(lat, &cfg.lm0).unwrap());
            }
        })
    });

    let rescored: Vec<_> = lattices
        .iter()
        .map(|l| rescore(l, &cfg.lm0).unwrap())
        .collect();
    c.bench_function("best_path/40-lattices", |b| {
        b.iter(|| {
            for lat in &rescored {
                black_box(best_path(lat, &scales).unwrap());
            }
        })
    });
    c.bench_function("nbest10/40-lattices", |b| {
        b.iter_batched(
            || rescored.clone(),
            |lats| {
                for lat in &lats {
                    black_box(nbest(lat, 10, &scales).unwrap());
                }
            },
            BatchSize::SmallInput,
        )
    });
}

fn bench_decode(c: &mut Criterion) {
    let (cfg, lattices) = bilingual_fixture(20);
    c.bench_function("decode/20-utterances", |b| {
        b.iter(|| {
            for lat in &lattices {
                black_box(decode(lat, &cfg).unwrap());
            }
        })
    });
}

criterion_group!(
    benches,
    bench_lm_queries,
    bench_train_and_merge,
    bench_lattice_ops,
    bench_decode
);
criterion_main!(benches);
