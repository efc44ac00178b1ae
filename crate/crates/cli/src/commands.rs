//! Subcommand implementations. Every command writes a run manifest; batch
//! commands keep going past per-utterance failures and report them at the
//! end. Output records always follow input order.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::anyhow;

use langsel_core::eval::{self, EvalReport, UttEval};
use langsel_core::lattice::{self, best_path, read_lattices, write_lattices, Lattice, ScoreConfig};
use langsel_core::ngram::{self, LanguageModel};
use langsel_core::selection::{
    decode, first_pass, format_record, parse_record, BatchReport, PipelineConfig, UttReport,
};
use langsel_core::simulate::{gen_lattice, ConfusionModel, GeneratorConfig};
use langsel_core::vocab::Vocabulary;

use crate::files;
use crate::manifest::{default_manifest_path, RunManifest, Stages};
use crate::{
    CliError, Command, DecodeArgs, GenArgs, HypsFormat, LmInterpArgs, LmPplArgs, LmPruneArgs,
    LmTrainArgs, RerunArgs, ScoreArgs,
};

pub fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::LmTrain(args) => lm_train(args),
        Command::LmInterp(args) => lm_interp(args),
        Command::LmPrune(args) => lm_prune(args),
        Command::LmPpl(args) => lm_ppl(args),
        Command::Gen(args) => gen(args),
        Command::Decode(args) => decode_cmd(args),
        Command::Score(args) => score_cmd(args),
        Command::Rerun(args) => rerun(args),
    }
}

fn model_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn load_arpa(path: &Path) -> Result<LanguageModel, CliError> {
    let text = files::read_to_string(path)?;
    LanguageModel::from_arpa_str(&text, &model_name(path))
        .map_err(|e| anyhow!("{}: {e}", path.display()).into())
}

fn write_arpa(lm: &LanguageModel, path: &Path) -> Result<(), CliError> {
    files::write_bytes(path, lm.to_arpa_string().as_bytes())
}

fn read_corpus_file(path: &Path) -> Result<Vec<Vec<String>>, CliError> {
    Ok(ngram::parse_corpus(&files::read_to_string(path)?))
}

fn print_corpus_stats(stats: &ngram::CorpusStats) {
    println!(
        "corpus: {} sentences, {} tokens, {} OOV",
        stats.sentences, stats.tokens, stats.oov_tokens
    );
    for (i, count) in stats.ngram_types.iter().enumerate() {
        println!("distinct {}-grams: {}", i + 1, count);
    }
}

fn lm_train(args: LmTrainArgs) -> Result<(), CliError> {
    let mut stages = Stages::new();
    stages.start("read");
    let corpus = read_corpus_file(&args.corpus)?;
    let vocab = match &args.vocab {
        Some(path) => {
            let words = files::read_word_list(path)?;
            Some(Vocabulary::from_tokens(words.iter().map(String::as_str)))
        }
        None => None,
    };

    stages.start("train");
    let lm = LanguageModel::train(&corpus, args.order, vocab.as_ref())
        .map_err(anyhow::Error::from)?
        .with_name(model_name(&args.out));
    let stats = ngram::corpus_stats(&corpus, args.order, lm.vocab());

    stages.start("write");
    write_arpa(&lm, &args.out)?;
    print_corpus_stats(&stats);
    println!(
        "model: order {}, vocabulary {}, entries per order {:?}",
        lm.order(),
        lm.vocab().len(),
        lm.entry_counts()
    );

    let manifest_path = args
        .manifest
        .clone()
        .unwrap_or_else(|| default_manifest_path(&args.out));
    let mut manifest = RunManifest::new("lm-train", Command::LmTrain(args.clone()));
    manifest.input(&args.corpus).output(&args.out);
    if let Some(v) = &args.vocab {
        manifest.input(v);
    }
    manifest.timings_ms = stages.into_timings();
    manifest.write(&manifest_path)
}

fn lm_interp(args: LmInterpArgs) -> Result<(), CliError> {
    let mut stages = Stages::new();
    stages.start("read");
    let a = load_arpa(&args.lm_a)?;
    let b = load_arpa(&args.lm_b)?;

    stages.start("interpolate");
    let merged = ngram::interpolate(&a, &b, args.alpha)
        .map_err(anyhow::Error::from)?
        .with_name(model_name(&args.out));

    stages.start("write");
    write_arpa(&merged, &args.out)?;
    println!(
        "interpolated {} (alpha {}) with {}: order {}, entries per order {:?}",
        args.lm_a.display(),
        args.alpha,
        args.lm_b.display(),
        merged.order(),
        merged.entry_counts()
    );

    let manifest_path = args
        .manifest
        .clone()
        .unwrap_or_else(|| default_manifest_path(&args.out));
    let mut manifest = RunManifest::new("lm-interp", Command::LmInterp(args.clone()));
    manifest
        .input(&args.lm_a)
        .input(&args.lm_b)
        .output(&args.out);
    manifest.timings_ms = stages.into_timings();
    manifest.write(&manifest_path)
}

fn lm_prune(args: LmPruneArgs) -> Result<(), CliError> {
    let mut stages = Stages::new();
    stages.start("read");
    let lm = load_arpa(&args.lm)?;
    let before_entries = lm.entry_counts();
    let before_bytes = files::file_size(&args.lm)?;

    stages.start("prune");
    let pruned = lm
        .prune(args.threshold)
        .map_err(anyhow::Error::from)?
        .with_name(model_name(&args.out));

    stages.start("write");
    write_arpa(&pruned, &args.out)?;
    let after_bytes = files::file_size(&args.out)?;
    println!(
        "pruned at {:e}: entries per order {:?} -> {:?}, {} -> {} bytes",
        args.threshold,
        before_entries,
        pruned.entry_counts(),
        before_bytes,
        after_bytes
    );

    let manifest_path = args
        .manifest
        .clone()
        .unwrap_or_else(|| default_manifest_path(&args.out));
    let mut manifest = RunManifest::new("lm-prune", Command::LmPrune(args.clone()));
    manifest.input(&args.lm).output(&args.out);
    manifest.timings_ms = stages.into_timings();
    manifest.write(&manifest_path)
}

fn lm_ppl(args: LmPplArgs) -> Result<(), CliError> {
    let mut stages = Stages::new();
    stages.start("read");
    let lm = load_arpa(&args.lm)?;
    let corpus = read_corpus_file(&args.corpus)?;

    stages.start("evaluate");
    let (ppl, stats) = lm
        .perplexity(&corpus, args.exclude_oov)
        .map_err(anyhow::Error::from)?;
    print_corpus_stats(&stats);
    println!(
        "perplexity: {ppl:.4} ({} OOV tokens {})",
        stats.oov_tokens,
        if args.exclude_oov {
            "excluded"
        } else {
            "scored as <unk>"
        }
    );

    let manifest_path = args
        .manifest
        .clone()
        .unwrap_or_else(|| PathBuf::from("lm-ppl.manifest.json"));
    let mut manifest = RunManifest::new("lm-ppl", Command::LmPpl(args.clone()));
    manifest.input(&args.lm).input(&args.corpus);
    manifest.timings_ms = stages.into_timings();
    manifest.write(&manifest_path)
}

fn gen(args: GenArgs) -> Result<(), CliError> {
    let mut stages = Stages::new();
    stages.start("read");
    let refs = files::read_transcripts(&args.refs)?;
    let mut noise = ConfusionModel::new(args.sub_rate, args.ins_rate, args.del_rate, args.spread)
        .map_err(anyhow::Error::from)?;
    noise
        .load_table(files::open_buffered(&args.confusion)?)
        .map_err(|e| anyhow!("{}: {e}", args.confusion.display()))?;
    let vocabulary: BTreeSet<String> = match &args.vocab {
        Some(path) => files::read_word_list(path)?,
        None => {
            let mut words = noise.words();
            for t in &refs {
                words.extend(t.words.iter().cloned());
            }
            words
        }
    };

    stages.start("generate");
    let mut lattices = Vec::with_capacity(refs.len());
    for (i, t) in refs.iter().enumerate() {
        let cfg = GeneratorConfig::new(
            args.seed.wrapping_add(i as u64),
            args.max_alternatives,
            vocabulary.clone(),
        )
        .map_err(anyhow::Error::from)?;
        let lat = gen_lattice(&t.utt_id, &t.words, &noise, &cfg)
            .map_err(|e| anyhow!("{}: line {}: {e}", args.refs.display(), t.line))?;
        lattices.push(lat);
    }

    stages.start("write");
    let mut buf = Vec::new();
    write_lattices(&lattices, &mut buf).map_err(|e| files::io_err(&args.out, e))?;
    files::write_bytes(&args.out, &buf)?;
    println!("generated {} lattices", lattices.len());

    let manifest_path = args
        .manifest
        .clone()
        .unwrap_or_else(|| default_manifest_path(&args.out));
    let mut manifest = RunManifest::new("gen", Command::Gen(args.clone()));
    manifest.seed = Some(args.seed);
    manifest
        .input(&args.refs)
        .input(&args.confusion)
        .output(&args.out);
    if let Some(v) = &args.vocab {
        manifest.input(v);
    }
    manifest.timings_ms = stages.into_timings();
    manifest.write(&manifest_path)
}

fn load_lattices(path: &Path) -> Result<Vec<Lattice>, CliError> {
    let text = files::read_to_string(path)?;
    read_lattices(text.as_bytes()).map_err(|e| anyhow!("{}: {e}", path.display()).into())
}

fn decode_cmd(args: DecodeArgs) -> Result<(), CliError> {
    let mut stages = Stages::new();
    stages.start("read");
    let lattices = load_lattices(&args.lattices)?;
    let lm0 = load_arpa(&args.lm0)?;
    let mut lms = Vec::with_capacity(args.lms.len());
    for path in &args.lms {
        lms.push(load_arpa(path)?);
    }
    let scales = ScoreConfig::new(args.am_scale, args.lm_scale).map_err(anyhow::Error::from)?;
    let mut cfg = PipelineConfig::new(lm0, lms).map_err(anyhow::Error::from)?;
    cfg.first_pass = scales;
    cfg.rescoring = scales;
    cfg.normalize_by_length = args.normalize_length;
    let known = match &args.known_language {
        Some(path) => Some(files::read_labels(path)?),
        None => None,
    };

    stages.start("decode");
    let mut records: Vec<String> = Vec::new();
    let mut hyp_rows: Vec<(String, Vec<String>)> = Vec::new();
    let mut reports: Vec<UttReport> = Vec::new();
    let mut failures: Vec<(String, String)> = Vec::new();

    for lat in &lattices {
        let utt_id = lat.utt_id().to_string();
        let outcome = decode_one(lat, &cfg, &args, known.as_ref());
        match outcome {
            Ok(one) => {
                records.push(one.record);
                hyp_rows.push((utt_id.clone(), one.words));
                if let Some(report) = one.report {
                    reports.push(report);
                }
            }
            Err(e) => failures.push((utt_id, format!("{e:#}"))),
        }
    }

    stages.start("write");
    let mut out_text = String::new();
    for r in &records {
        out_text.push_str(r);
        out_text.push('\n');
    }
    files::write_bytes(&args.out, out_text.as_bytes())?;
    if let Some(path) = &args.hyps_out {
        files::write_transcripts(path, &hyp_rows)?;
    }
    if let Some(path) = &args.report {
        let report = BatchReport {
            utterances: reports,
        };
        let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
        json.push('\n');
        files::write_bytes(path, json.as_bytes())?;
    }
    println!(
        "decoded {} utterances ({} failed)",
        records.len(),
        failures.len()
    );

    let manifest_path = args
        .manifest
        .clone()
        .unwrap_or_else(|| default_manifest_path(&args.out));
    let mut manifest = RunManifest::new("decode", Command::Decode(args.clone()));
    manifest.input(&args.lattices).input(&args.lm0);
    for p in &args.lms {
        manifest.input(p);
    }
    manifest.output(&args.out);
    for p in [&args.hyps_out, &args.report].into_iter().flatten() {
        manifest.output(p);
    }
    manifest.timings_ms = stages.into_timings();
    manifest.write(&manifest_path)?;

    if !failures.is_empty() {
        for (utt, msg) in &failures {
            eprintln!("failed: {utt}: {msg}");
        }
        return Err(anyhow!("{} of {} utterances failed", failures.len(), lattices.len()).into());
    }
    Ok(())
}

struct DecodedUtt {
    record: String,
    words: Vec<String>,
    report: Option<UttReport>,
}

fn decode_one(
    lat: &Lattice,
    cfg: &PipelineConfig,
    args: &DecodeArgs,
    known: Option<&std::collections::BTreeMap<String, usize>>,
) -> anyhow::Result<DecodedUtt> {
    let utt_id = lat.utt_id();
    if args.first_pass_only {
        let lat0 = first_pass(lat, cfg)?;
        let path = best_path(&lat0, &cfg.first_pass)?;
        let mut record = utt_id.to_string();
        for w in &path.words {
            record.push(' ');
            record.push_str(w);
        }
        return Ok(DecodedUtt {
            record,
            words: path.words,
            report: None,
        });
    }
    if let Some(labels) = known {
        let &label = labels
            .get(utt_id)
            .ok_or_else(|| anyhow!("no language label for utterance {utt_id:?}"))?;
        if label >= cfg.lms.len() {
            return Err(anyhow!(
                "label {label} out of range for {} language models",
                cfg.lms.len()
            ));
        }
        let lat0 = first_pass(lat, cfg)?;
        let rescored = lattice::rescore(&lat0, &cfg.lms[label])?;
        let path = best_path(&rescored, &cfg.rescoring)?;
        let score = cfg.lms[label].sentence_logprob(&path.words);
        let mut record = format!("{utt_id} {label} {score:.6}");
        for w in &path.words {
            record.push(' ');
            record.push_str(w);
        }
        return Ok(DecodedUtt {
            record,
            words: path.words,
            report: None,
        });
    }
    let result = decode(lat, cfg)?;
    Ok(DecodedUtt {
        record: format_record(utt_id, &result),
        words: result.selected.words.clone(),
        report: Some(UttReport::from_result(utt_id, &result)),
    })
}

fn score_cmd(args: ScoreArgs) -> Result<(), CliError> {
    let mut stages = Stages::new();
    stages.start("read");
    let refs = files::read_transcripts(&args.refs)?;

    struct Hyp {
        words: Vec<String>,
        selected: Option<usize>,
    }
    let mut hyp_map: std::collections::BTreeMap<String, Hyp> = std::collections::BTreeMap::new();
    match args.hyps_format {
        HypsFormat::Transcript => {
            for t in files::read_transcripts(&args.hyps)? {
                hyp_map.insert(
                    t.utt_id,
                    Hyp {
                        words: t.words,
                        selected: None,
                    },
                );
            }
        }
        HypsFormat::Results => {
            let text = files::read_to_string(&args.hyps)?;
            for (idx, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let rec = parse_record(line).ok_or_else(|| {
                    anyhow!(
                        "{}: line {}: not a decode record",
                        args.hyps.display(),
                        idx + 1
                    )
                })?;
                hyp_map.insert(
                    rec.utt_id,
                    Hyp {
                        words: rec.words,
                        selected: Some(rec.selected_language),
                    },
                );
            }
        }
    }

    let truth = match &args.truth {
        Some(path) => Some(files::read_labels(path)?),
        None => None,
    };
    let foreign = match &args.foreign {
        Some(path) => Some(files::read_word_list(path)?),
        None => None,
    };

    stages.start("score");
    // Utterance ids must match one-to-one.
    let ref_ids: BTreeSet<&str> = refs.iter().map(|t| t.utt_id.as_str()).collect();
    let mut unmatched: Vec<String> = refs
        .iter()
        .filter(|t| !hyp_map.contains_key(&t.utt_id))
        .map(|t| format!("{} (no hypothesis)", t.utt_id))
        .collect();
    unmatched.extend(
        hyp_map
            .keys()
            .filter(|id| !ref_ids.contains(id.as_str()))
            .map(|id| format!("{id} (no reference)")),
    );
    if !unmatched.is_empty() {
        return Err(anyhow!("unmatched utterance ids: {}", unmatched.join(", ")).into());
    }

    let mut rows = Vec::with_capacity(refs.len());
    let mut ref_words = Vec::with_capacity(refs.len());
    let mut hyp_words = Vec::with_capacity(refs.len());
    let mut selected_labels = Vec::new();
    let mut truth_labels = Vec::new();
    for t in &refs {
        let hyp = &hyp_map[&t.utt_id];
        let breakdown =
            eval::wer(&t.words, &hyp.words).map_err(|e| anyhow!("utterance {}: {e}", t.utt_id))?;
        let truth_label = truth.as_ref().and_then(|m| m.get(&t.utt_id)).copied();
        if let (Some(sel), Some(tl)) = (hyp.selected, truth_label) {
            selected_labels.push(sel);
            truth_labels.push(tl);
        }
        rows.push(UttEval {
            utt_id: t.utt_id.clone(),
            breakdown,
            selected_language: hyp.selected,
            truth_language: truth_label,
        });
        ref_words.push(t.words.clone());
        hyp_words.push(hyp.words.clone());
    }

    let selection = if truth.is_some() {
        if selected_labels.len() != refs.len() {
            return Err(anyhow!(
                "selection accuracy needs selected languages for every utterance; \
                 use --hyps-format results and a complete --truth file"
            )
            .into());
        }
        Some(
            eval::selection_accuracy(&selected_labels, &truth_labels)
                .map_err(anyhow::Error::from)?,
        )
    } else {
        None
    };
    let foreign_words = match &foreign {
        Some(list) => Some(
            eval::foreign_word_accuracy(&ref_words, &hyp_words, list)
                .map_err(anyhow::Error::from)?,
        ),
        None => None,
    };

    let report = EvalReport {
        rows,
        selection,
        foreign_words,
    };
    print!("{}", report.render());

    stages.start("write");
    if let Some(path) = &args.out {
        let mut buf = Vec::new();
        report
            .write_tsv(&mut buf)
            .map_err(|e| files::io_err(path, e))?;
        files::write_bytes(path, &buf)?;
    }

    let manifest_path = args.manifest.clone().unwrap_or_else(|| {
        args.out
            .as_ref()
            .map(|o| default_manifest_path(o))
            .unwrap_or_else(|| PathBuf::from("score.manifest.json"))
    });
    let mut manifest = RunManifest::new("score", Command::Score(args.clone()));
    manifest.input(&args.refs).input(&args.hyps);
    for p in [&args.foreign, &args.truth].into_iter().flatten() {
        manifest.input(p);
    }
    if let Some(o) = &args.out {
        manifest.output(o);
    }
    manifest.timings_ms = stages.into_timings();
    manifest.write(&manifest_path)
}

fn rerun(args: RerunArgs) -> Result<(), CliError> {
    let manifest = RunManifest::read(&args.manifest)?;
    if matches!(manifest.command, Command::Rerun(_)) {
        return Err(anyhow!("refusing to rerun a rerun manifest").into());
    }
    println!(
        "rerunning {} (recorded by {} {})",
        manifest.subcommand, manifest.tool, manifest.version
    );
    dispatch(manifest.command)
}
