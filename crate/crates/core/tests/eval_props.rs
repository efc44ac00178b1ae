//! Alignment properties: the breakdown DP against an independent
//! plain-distance DP and a brute-force alignment enumerator, plus metric
//! properties over random token pairs.

use langsel_core::eval::{wer, wer_alignment};
use langsel_core::rng::Xoshiro256StarStar;
use proptest::prelude::*;

const ALPHABET: [&str; 3] = ["a", "b", "c"];

/// Independent oracle: plain Levenshtein distance, full table, no
/// breakdown and no shared code with the scored implementation.
fn oracle_distance(a: &[String], b: &[String]) -> usize {
    let (n, m) = (a.len(), b.len());
    let mut dp = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in dp.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=m {
        dp[0][j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            dp[i][j] = (dp[i - 1][j] + 1)
                .min(dp[i][j - 1] + 1)
                .min(dp[i - 1][j - 1] + cost);
        }
    }
    dp[n][m]
}

/// Brute-force enumeration of all alignments; returns the minimum
/// (edits, substitutions, deletions) tuple. Exponential, so only used on
/// short pairs.
fn oracle_breakdown(a: &[String], b: &[String]) -> (usize, usize, usize) {
    fn go(a: &[String], b: &[String], i: usize, j: usize) -> (usize, usize, usize) {
        if i == a.len() {
            return (b.len() - j, 0, 0); // remaining hypothesis: insertions
        }
        if j == b.len() {
            let d = a.len() - i;
            return (d, 0, d); // remaining reference: deletions
        }
        let add =
            |x: (usize, usize, usize), y: (usize, usize, usize)| (x.0 + y.0, x.1 + y.1, x.2 + y.2);
        let diag_step = if a[i] == b[j] { (0, 0, 0) } else { (1, 1, 0) };
        let diag = add(go(a, b, i + 1, j + 1), diag_step);
        let del = add(go(a, b, i + 1, j), (1, 0, 1));
        let ins = add(go(a, b, i, j + 1), (1, 0, 0));
        diag.min(del).min(ins)
    }
    go(a, b, 0, 0)
}

fn all_sequences(max_len: usize) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = vec![Vec::new()];
    let mut frontier: Vec<Vec<String>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for seq in &frontier {
            for sym in ALPHABET {
                let mut longer = seq.clone();
                longer.push(sym.to_string());
                next.push(longer);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

#[test]
fn breakdown_matches_both_oracles_on_all_short_pairs() {
    // Every pair of sequences up to length 4 over the 3-symbol alphabet.
    let seqs = all_sequences(4);
    for r in &seqs {
        if r.is_empty() {
            continue;
        }
        for h in &seqs {
            let got = wer(r, h).unwrap();
            assert_eq!(got.errors(), oracle_distance(r, h), "{r:?} vs {h:?}");
            let (edits, subs, dels) = oracle_breakdown(r, h);
            assert_eq!(got.errors(), edits, "{r:?} vs {h:?}");
            assert_eq!(got.substitutions, subs, "{r:?} vs {h:?}");
            assert_eq!(got.deletions, dels, "{r:?} vs {h:?}");
        }
    }
}

#[test]
fn distance_matches_oracle_on_random_length8_pairs() {
    let mut rng = Xoshiro256StarStar::seed_from_u64(99);
    let sample = |rng: &mut Xoshiro256StarStar, min_len: usize| -> Vec<String> {
        let len = min_len + rng.next_index(9 - min_len);
        (0..len)
            .map(|_| ALPHABET[rng.next_index(3)].to_string())
            .collect()
    };
    for _ in 0..1000 {
        let r = sample(&mut rng, 1);
        let h = sample(&mut rng, 0);
        let got = wer(&r, &h).unwrap();
        assert_eq!(got.errors(), oracle_distance(&r, &h), "{r:?} vs {h:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Swapping the arguments swaps insertions with deletions.
    #[test]
    fn distance_is_symmetric_with_roles_swapped(
        r in prop::collection::vec(0usize..3, 1..7),
        h in prop::collection::vec(0usize..3, 1..7),
    ) {
        let r: Vec<String> = r.iter().map(|&i| ALPHABET[i].to_string()).collect();
        let h: Vec<String> = h.iter().map(|&i| ALPHABET[i].to_string()).collect();
        let fwd = wer(&r, &h).unwrap();
        let rev = wer(&h, &r).unwrap();
        prop_assert_eq!(fwd.errors(), rev.errors());
        prop_assert_eq!(fwd.substitutions, rev.substitutions);
        prop_assert_eq!(fwd.insertions, rev.deletions);
        prop_assert_eq!(fwd.deletions, rev.insertions);
    }

    /// Edit distance satisfies the triangle inequality.
    #[test]
    fn distance_satisfies_the_triangle_inequality(
        a in prop::collection::vec(0usize..3, 1..6),
        b in prop::collection::vec(0usize..3, 1..6),
        c in prop::collection::vec(0usize..3, 1..6),
    ) {
        let a: Vec<String> = a.iter().map(|&i| ALPHABET[i].to_string()).collect();
        let b: Vec<String> = b.iter().map(|&i| ALPHABET[i].to_string()).collect();
        let c: Vec<String> = c.iter().map(|&i| ALPHABET[i].to_string()).collect();
        let ab = wer(&a, &b).unwrap().errors();
        let bc = wer(&b, &c).unwrap().errors();
        let ac = wer(&a, &c).unwrap().errors();
        prop_assert!(ac <= ab + bc);
    }

    /// The emitted alignment always reproduces the counted breakdown.
    #[test]
    fn alignment_ops_reproduce_the_breakdown(
        r in prop::collection::vec(0usize..3, 1..8),
        h in prop::collection::vec(0usize..3, 0..8),
    ) {
        let r: Vec<String> = r.iter().map(|&i| ALPHABET[i].to_string()).collect();
        let h: Vec<String> = h.iter().map(|&i| ALPHABET[i].to_string()).collect();
        let (b, ops) = wer_alignment(&r, &h).unwrap();
        let mut s = 0;
        let mut i = 0;
        let mut d = 0;
        let mut ref_seen = 0;
        let mut hyp_seen = 0;
        for op in ops {
            match op {
                langsel_core::eval::AlignOp::Match(..) => {
                    ref_seen += 1;
                    hyp_seen += 1;
                }
                langsel_core::eval::AlignOp::Substitute(..) => {
                    s += 1;
                    ref_seen += 1;
                    hyp_seen += 1;
                }
                langsel_core::eval::AlignOp::Delete(_) => {
                    d += 1;
                    ref_seen += 1;
                }
                langsel_core::eval::AlignOp::Insert(_) => {
                    i += 1;
                    hyp_seen += 1;
                }
            }
        }
        prop_assert_eq!((s, i, d), (b.substitutions, b.insertions, b.deletions));
        prop_assert_eq!(ref_seen, r.len());
        prop_assert_eq!(hyp_seen, h.len());
    }
}
