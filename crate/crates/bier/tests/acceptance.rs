//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use bier_core::corpus::{filter_concept_matches, ConceptMatch, TypeVocabulary, DEFAULT_MIN_SCORE, DEFAULT_WINDOW};
use bier_core::diagnostics::{
    combined_oracle_accuracy, rank_divergence, render_combined_table, render_combined_tsv, PredictionRecord,
    TaskSummary,
};
use bier_core::elc::{build_index, knn_classify, majority_label};
use bier_core::encoder::{build_token_vocab, encode, EncoderConfig};
use bier_core::math::Matrix;
use bier_core::ned::{
    accuracy, baseline_features, baseline_predict, disambiguate, generate_synthetic_ned, popular_prior_predict,
    BaselineWeights, Candidate, ModelPair, NedEmbedder, NedGenConfig, NedInstance,
};
use bier_core::rng::{named_rng, ChaCha8Rng};
use bier_core::store::{EmbeddingIndex, Metric};
use bier_core::synth::{SyntheticWorld, WorldConfig};
use bier_core::typer::{
    bce_loss, example_gradients, predict_types, train, LabelVector, Representation, TrainConfig, TypingModel,
};
use rand::Rng;
use sha2::{Digest, Sha256};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// 1. concept filter

fn filter_oracle(scores: &[f64], min_score: f64, window: f64) -> Vec<usize> {
    (0..scores.len()).filter(|&i| scores[i] >= min_score && scores.iter().all(|&s| scores[i] >= s - window)).collect()
}

fn concept_filter() -> Outcome {
    let six = [
        ("C0282460", 0.9999),
        ("C1096779", 0.9999),
        ("C0282461", 0.9496),
        ("C0920321", 0.8707),
        ("C1096780", 0.8635),
        ("C0282462", 0.8208),
    ];
    let matches: Vec<ConceptMatch> = six.iter().map(|&(c, s)| ConceptMatch::new(c, "", s).unwrap()).collect();
    let kept = filter_concept_matches(&matches, DEFAULT_MIN_SCORE, DEFAULT_WINDOW);
    let kept: Vec<&str> = kept.iter().map(|m| m.cuid.as_str()).collect();
    ensure(kept == ["C0282460", "C1096779"], || format!("six-match example kept {kept:?}"))?;

    let mut r = named_rng(1, "acceptance:filter");
    for case in 0..1000 {
        let n = r.gen_range(0..9);
        // a coarse grid forces ties and scores sitting exactly on the thresholds
        let scores: Vec<f64> = (0..n)
            .map(|_| if r.gen_bool(0.5) { r.gen_range(0..=100) as f64 / 100.0 } else { r.gen_range(0.7..1.0) })
            .collect();
        let matches: Vec<ConceptMatch> =
            scores.iter().enumerate().map(|(i, &s)| ConceptMatch::new(format!("C{i}"), "", s).unwrap()).collect();
        let got: Vec<String> =
            filter_concept_matches(&matches, DEFAULT_MIN_SCORE, DEFAULT_WINDOW).into_iter().map(|m| m.cuid).collect();
        let want: Vec<String> =
            filter_oracle(&scores, DEFAULT_MIN_SCORE, DEFAULT_WINDOW).into_iter().map(|i| format!("C{i}")).collect();
        ensure(got == want, || format!("fuzz case {case} {scores:?}: got {got:?}, want {want:?}"))?;
    }
    Ok("six-match example and 1000 fuzz cases agree".into())
}

// ---------------------------------------------------------------------------
// 2. gradient check

fn gradient_check() -> Outcome {
    let words: Vec<String> = (0..40).map(|i| format!("w{i}")).collect();
    let tokens = build_token_vocab(words.iter().map(String::as_str), 64).unwrap();
    let types = TypeVocabulary::from_names((0..12).map(|i| format!("type{i:02}")).collect()).unwrap();
    let config = EncoderConfig { vocab_size: tokens.len(), dim: 8, layers: 2, heads: 2, max_len: 16 };
    let step = 1e-5;
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let model = TypingModel::init(tokens.clone(), types.clone(), config, seed).unwrap();
        let mut r = named_rng(seed, "acceptance:gradient");
        let mention: Vec<&str> = (0..2).map(|_| words[r.gen_range(0..words.len())].as_str()).collect();
        let context: Vec<&str> = (0..30).map(|_| words[r.gen_range(0..words.len())].as_str()).collect();
        let input = model.input(&mention.join(" "), &context.join(" ")).unwrap();
        ensure(input.len() == 16, || format!("sequence length {}", input.len()))?;
        let mut labels: Vec<bool> = (0..12).map(|_| r.gen_bool(0.3)).collect();
        labels[seed as usize % 12] = true;
        let labels = LabelVector(labels);

        let mut eg = model.encoder.zeros_like();
        let mut tg = Matrix::zeros(12, 8);
        example_gradients(&model, &input, &labels, &mut eg, &mut tg, 1.0).unwrap();
        let loss = |m: &TypingModel| {
            let h = encode(&input, &m.encoder).unwrap();
            bce_loss(&predict_types(h.as_slice(), &m.type_embeddings).unwrap(), &labels).unwrap()
        };
        let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-5);

        for k in 0..tg.as_slice().len() {
            let (mut plus, mut minus) = (model.clone(), model.clone());
            plus.type_embeddings.0.as_mut_slice()[k] += step;
            minus.type_embeddings.0.as_mut_slice()[k] -= step;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * step);
            worst = worst.max(rel(tg.as_slice()[k], numeric));
        }
        let analytic: Vec<Vec<f64>> = eg.tensors().iter().map(|(_, t)| t.to_vec()).collect();
        for (ti, grads) in analytic.iter().enumerate() {
            for (k, &a) in grads.iter().enumerate() {
                let (mut plus, mut minus) = (model.clone(), model.clone());
                plus.encoder.tensors_mut()[ti][k] += step;
                minus.encoder.tensors_mut()[ti][k] -= step;
                let numeric = (loss(&plus) - loss(&minus)) / (2.0 * step);
                worst = worst.max(rel(a, numeric));
            }
        }
    }
    ensure(worst < 1e-3, || format!("max relative error {worst:.3e}"))?;
    Ok(format!("20 seeds, every parameter, max relative error {worst:.2e}"))
}

// ---------------------------------------------------------------------------
// 3. oracle accuracy identities

fn record(id: usize, gold: &str, dense: &str, sparse: &str) -> PredictionRecord {
    PredictionRecord {
        example_id: format!("ex{id}"),
        mention: String::new(),
        gold: gold.into(),
        dense_pred: dense.into(),
        sparse_pred: sparse.into(),
    }
}

fn oracle_identities() -> Outcome {
    let worked =
        [record(0, "a", "a", "a"), record(1, "a", "a", "b"), record(2, "a", "c", "b"), record(3, "a", "c", "a")];
    let acc = combined_oracle_accuracy(&worked).unwrap();
    let triple = (acc.sparse.value(), acc.dense.value(), acc.combined.value());
    ensure(triple == (0.5, 0.5, 0.75), || format!("worked example gave {triple:?}"))?;
    ensure(acc.z == ["ex1"], || format!("worked example Z = {:?}", acc.z))?;

    let labels = ["a", "b", "c"];
    let mut r = named_rng(3, "acceptance:oracle");
    for case in 0..10_000 {
        let n = r.gen_range(1..40);
        let records: Vec<PredictionRecord> = (0..n)
            .map(|i| {
                let mut pick = || labels[r.gen_range(0..labels.len())];
                record(i, pick(), pick(), pick())
            })
            .collect();
        let acc = combined_oracle_accuracy(&records).unwrap();
        // independent count: walk the combined predictions directly
        let (mut dense, mut sparse, mut combined, mut z) = (0u64, 0u64, 0u64, 0u64);
        for rec in &records {
            let d = rec.dense_pred == rec.gold;
            let s = rec.sparse_pred == rec.gold;
            dense += d as u64;
            sparse += s as u64;
            z += (d && !s) as u64;
            combined += (if d && !s { d } else { s }) as u64;
        }
        let total = n as u64;
        let ok = acc.dense.correct == dense
            && acc.sparse.correct == sparse
            && acc.combined.correct == combined
            && acc.z.len() as u64 == z
            && acc.combined.total == total
            && combined == sparse + z
            && acc.identity_holds()
            && combined >= dense.max(sparse);
        ensure(ok, || format!("case {case}: {acc:?} vs dense {dense} sparse {sparse} combined {combined} z {z}"))?;
    }
    Ok("worked example (0.5, 0.5, 0.75) and 10000 random fixtures".into())
}

// ---------------------------------------------------------------------------
// 4. exact kNN

fn oracle_scores(stored: &[Vec<f64>], q: &[f64], metric: Metric) -> Vec<f64> {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    stored
        .iter()
        .map(|v| match metric {
            Metric::L2 => v.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
            Metric::Dot => dot(v, q),
            Metric::Cosine => dot(v, q) / (dot(v, v).sqrt() * dot(q, q).sqrt()),
        })
        .collect()
}

fn oracle_top(stored: &[Vec<f64>], q: &[f64], metric: Metric, k: usize) -> Vec<String> {
    let scores = oracle_scores(stored, q, metric);
    let mut order: Vec<usize> = (0..stored.len()).collect();
    order.sort_by(|&a, &b| {
        let by_score = match metric {
            Metric::L2 => scores[a].total_cmp(&scores[b]),
            _ => scores[b].total_cmp(&scores[a]),
        };
        by_score.then(a.cmp(&b))
    });
    order.into_iter().take(k).map(|i| format!("v{i}")).collect()
}

fn knn_exactness() -> Outcome {
    let mut r = named_rng(4, "acceptance:knn");
    let mut checked = 0usize;
    for case in 0..50 {
        let n = r.gen_range(1..=1000);
        let d = r.gen_range(1..=64);
        // half the indices hold small integers, which produces exact ties
        let integer = case % 2 == 0;
        let draw = |r: &mut ChaCha8Rng| -> Vec<f64> {
            loop {
                let v: Vec<f64> =
                    (0..d).map(|_| if integer { r.gen_range(-3..=3) as f64 } else { r.gen_range(-1.0..1.0) }).collect();
                if v.iter().any(|&x| x != 0.0) {
                    return v;
                }
            }
        };
        let stored: Vec<Vec<f64>> = (0..n).map(|_| draw(&mut r)).collect();
        let scales: Vec<f64> = (0..n).map(|_| r.gen_range(0.1..10.0)).collect();
        let mut index = EmbeddingIndex::new();
        let mut scaled = EmbeddingIndex::new();
        for (i, v) in stored.iter().enumerate() {
            index.add(format!("v{i}"), v.clone(), ()).unwrap();
            scaled.add(format!("v{i}"), v.iter().map(|x| x * scales[i]).collect(), ()).unwrap();
        }
        for _ in 0..20 {
            let q = draw(&mut r);
            for metric in [Metric::L2, Metric::Dot, Metric::Cosine] {
                for k in [1, 5] {
                    let got: Vec<String> =
                        index.nearest(&q, metric, k).unwrap().iter().map(|h| h.id.to_owned()).collect();
                    let want = oracle_top(&stored, &q, metric, k);
                    ensure(got == want, || format!("case {case} {metric:?} k={k}: {got:?} vs {want:?}"))?;
                    checked += 1;
                }
            }
            if !integer {
                let a: Vec<&str> = index.nearest(&q, Metric::Cosine, 5).unwrap().iter().map(|h| h.id).collect();
                let b: Vec<&str> = scaled.nearest(&q, Metric::Cosine, 5).unwrap().iter().map(|h| h.id).collect();
                ensure(a == b, || format!("case {case}: cosine changed under rescaling {a:?} vs {b:?}"))?;
            }
        }
    }
    Ok(format!("{checked} queries match the full-scan oracle; cosine rescale invariant"))
}

// ---------------------------------------------------------------------------
// 5. end-to-end synthetic learning

fn end_to_end() -> Outcome {
    let world =
        SyntheticWorld::generate(WorldConfig { seed: 0, ..WorldConfig::default() }).map_err(|e| e.to_string())?;
    let splits = world.typing_splits((5000, 500, 500));
    let types = TypeVocabulary::from_names(world.type_names.clone()).map_err(|e| e.to_string())?;
    ensure(types.len() == 200, || format!("|T| = {}", types.len()))?;

    let start = Instant::now();
    let tokens =
        build_token_vocab(splits.train.iter().flat_map(|t| [t.mention.as_str(), t.context.as_str()]), 1024).unwrap();
    let config = EncoderConfig { vocab_size: tokens.len(), dim: 32, layers: 1, heads: 2, max_len: 16 };
    let model = TypingModel::init(tokens, types.clone(), config, 0).unwrap();
    let tc = TrainConfig { learning_rate: 0.003, batch_size: 16, epochs: 4, seed: 0, ..TrainConfig::default() };
    let (model, log) = train(model, &splits.train, &splits.dev, &tc).map_err(|e| e.to_string())?;
    let train_time = start.elapsed();
    let f1 = log.best_epoch.and_then(|b| log.epochs[b - 1].dev_macro_f1).unwrap_or(0.0);
    ensure(f1 >= 0.70, || format!("dev macro-F1 {f1:.4}"))?;
    ensure(train_time < Duration::from_secs(600), || format!("training took {train_time:?}"))?;

    let elc_train = world.elc_instances(800, "train");
    let elc_test = world.elc_instances(400, "test");
    let index = build_index(&elc_train, &model, Representation::Sparse, None).unwrap();
    let correct = elc_test
        .iter()
        .filter(|i| knn_classify(i, &index, &model, Representation::Sparse, Metric::L2).unwrap() == i.label)
        .count();
    let knn = correct as f64 / elc_test.len() as f64;
    let majority = majority_label(&elc_train).unwrap();
    let base = elc_test.iter().filter(|i| i.label == majority).count() as f64 / elc_test.len() as f64;
    ensure(knn - base >= 0.20, || format!("ELC kNN {knn:.3} vs majority {base:.3}"))?;

    let descriptions = world.description_triples();
    let desc_tokens =
        build_token_vocab(descriptions.iter().flat_map(|t| [t.mention.as_str(), t.context.as_str()]), 1024).unwrap();
    let desc_config = EncoderConfig { vocab_size: desc_tokens.len(), ..config };
    let desc_model = TypingModel::init(desc_tokens, types, desc_config, 1).unwrap();
    let dc = TrainConfig { epochs: 40, seed: 1, ..tc };
    let (desc_model, _) = train(desc_model, &descriptions, &[], &dc).map_err(|e| e.to_string())?;
    let pair = ModelPair::new(&model, &desc_model, Representation::Sparse).unwrap();

    let source = world.ned_source(2000);
    let mut gains = Vec::new();
    for seed in 0..3 {
        let sets = generate_synthetic_ned(
            &source,
            (0, 0, 500),
            &NedGenConfig { popular_cap: 0.5, seed, ..NedGenConfig::default() },
        )
        .map_err(|e| e.to_string())?;
        let sim: Vec<usize> = sets.test.iter().map(|i| disambiguate(i, &pair, Metric::Cosine).unwrap()).collect();
        let prior: Vec<usize> = sets.test.iter().map(popular_prior_predict).collect();
        gains.push(accuracy(&sets.test, &sim).unwrap() - accuracy(&sets.test, &prior).unwrap());
    }
    let gain = gains.iter().sum::<f64>() / gains.len() as f64;
    ensure(gain >= 0.10, || format!("NED gain over prior {gain:.3} ({gains:?})"))?;
    Ok(format!(
        "dev macro-F1 {f1:.3} in {:.0}s; ELC kNN {knn:.3} vs majority {base:.3}; NED +{:.1} points over prior",
        train_time.as_secs_f64(),
        100.0 * gain
    ))
}

// ---------------------------------------------------------------------------
// 6. diagnostic report fidelity

/// One mention's sparse vector: 0.9 on the named types, 0.01 elsewhere.
fn vector_with(vocab: &TypeVocabulary, on: &[String]) -> Vec<f64> {
    let mut v = vec![0.01; vocab.len()];
    for t in on {
        v[vocab.index_of(t).unwrap()] = 0.9;
    }
    v
}

fn slices(vs: &[Vec<f64>]) -> Vec<&[f64]> {
    vs.iter().map(Vec::as_slice).collect()
}

fn planted_fixture() -> (TypeVocabulary, Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<String>) {
    let name = |j: usize| format!("t{j:03}");
    let planted: Vec<String> = (0..3).map(|p| format!("planted{p}")).collect();
    let mut names: Vec<String> = (0..130).map(name).collect();
    names.extend(planted.iter().cloned());
    let vocab = TypeVocabulary::from_names(names).unwrap();
    let base = |m: usize| -> Vec<String> { (0..17).map(|k| name((7 * m + 5 * k) % 100)).collect() };
    let mut wrong = Vec::new();
    let mut right = Vec::new();
    for m in 0..40 {
        let mut w = base(m);
        w.extend(planted.iter().cloned());
        wrong.push(vector_with(&vocab, &w));
        let mut c = base(m);
        c.extend((0..3).map(|j| name(100 + (3 * m + j) % 30)));
        right.push(vector_with(&vocab, &c));
    }
    (vocab, wrong, right, planted)
}

/// Rank counts for a single divergent type ("tongue"): it sits at
/// rank 20 among incorrect predictions and rank 76 among correct ones.
fn tongue_fixture() -> (TypeVocabulary, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let a: Vec<String> = (1..=19).map(|i| format!("a{i:02}")).collect();
    let b: Vec<String> = (1..=75).map(|i| format!("b{i:02}")).collect();
    let fillers: Vec<String> = (1..=9).map(|i| format!("z_filler{i}")).collect();
    let mut names = a.clone();
    names.extend(b.iter().cloned());
    names.extend(fillers.iter().cloned());
    names.push("tongue".into());
    names.push("w_filler".into());
    let vocab = TypeVocabulary::from_names(names).unwrap();

    // incorrect side: a01..a19 in all ten mentions, tongue in nine
    let wrong: Vec<Vec<f64>> = (0..10)
        .map(|m| {
            let mut on = a.clone();
            on.push(if m < 9 { "tongue".into() } else { "w_filler".into() });
            vector_with(&vocab, &on)
        })
        .collect();
    // correct side: b01..b75 twice each, tongue and nine fillers once, in
    // eight mentions of twenty types
    let mut slots: Vec<String> = b.iter().flat_map(|t| [t.clone(), t.clone()]).collect();
    slots.push("tongue".into());
    slots.extend(fillers.iter().cloned());
    let mut per_mention = vec![Vec::new(); 8];
    for (s, t) in slots.into_iter().enumerate() {
        per_mention[s % 8].push(t);
    }
    let right = per_mention.iter().map(|on| vector_with(&vocab, on)).collect();
    (vocab, wrong, right)
}

fn diagnostic_report() -> Outcome {
    let rows = [
        TaskSummary { task: "NED".into(), dense: 84.0, sparse: 81.0, combined: 91.7 },
        TaskSummary { task: "ELC".into(), dense: 87.5, sparse: 88.2, combined: 91.9 },
    ];
    let tsv = render_combined_tsv(&rows);
    let want = "task\tdense\tsparse\tcombined\tdelta\nNED\t84.0\t81.0\t91.7\t+7.7\nELC\t87.5\t88.2\t91.9\t+3.7\n";
    ensure(tsv == want, || format!("combined tsv {tsv:?}"))?;
    let table = render_combined_table(&rows);
    for line in ["NED       84.0    81.0      91.7   +7.7", "ELC       87.5    88.2      91.9   +3.7"] {
        ensure(table.contains(line), || format!("combined table lacks {line:?}:\n{table}"))?;
    }

    let (vocab, wrong, right, planted) = planted_fixture();
    let rows = rank_divergence(&slices(&wrong), &slices(&right), &vocab, 20, 50).map_err(|e| e.to_string())?;
    let mut emitted: Vec<String> = rows.iter().map(|r| r.type_name.clone()).collect();
    emitted.sort();
    ensure(emitted == planted, || format!("planted fixture emitted {emitted:?}"))?;

    let (vocab, wrong, right) = tongue_fixture();
    let rows = rank_divergence(&slices(&wrong), &slices(&right), &vocab, 20, 50).map_err(|e| e.to_string())?;
    let tongue = rows.iter().find(|r| r.type_name == "tongue").ok_or("tongue row missing")?;
    let got = (tongue.wrong_rank, tongue.right_rank, tongue.difference);
    ensure(got == (20, 76, 56), || format!("tongue row {got:?}"))?;
    Ok("table renders +7.7/+3.7; planted types exact; tongue 20/76/56".into())
}

// ---------------------------------------------------------------------------
// 7. CLI determinism

fn run_bier(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_bier"))
        .args(args)
        .env("BIER_THREADS", "2")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("bier {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn pipeline(root: &Path) -> Result<(), String> {
    let p = |rel: &str| root.join(rel).to_string_lossy().into_owned();
    let run = |cmd: &[&str], out: &str, sets: &[String]| -> Result<(), String> {
        let out = p(out);
        let mut args: Vec<&str> = cmd.to_vec();
        args.extend(["--seed", "7", "--out", out.as_str()]);
        for s in sets {
            args.extend(["--set", s.as_str()]);
        }
        run_bier(&args)
    };
    let set = |k: &str, v: &str| format!("{k}={v}");
    let path = |k: &str, rel: &str| format!("{k}={}", p(rel));

    let sizes = [
        ("typing_train", "300"),
        ("typing_dev", "50"),
        ("typing_test", "50"),
        ("elc_train", "120"),
        ("elc_dev", "30"),
        ("elc_test", "60"),
        ("ned_pool", "200"),
        ("ned_train", "40"),
        ("ned_dev", "10"),
        ("ned_test", "40"),
        ("docs", "100"),
    ];
    run(&["synth"], "synth", &sizes.iter().map(|(k, v)| set(k, v)).collect::<Vec<_>>())?;
    run(
        &["build-corpus"],
        "corpus",
        &[
            path("mentions", "synth/corpus/mentions.jsonl"),
            path("linker", "synth/corpus/linker.tsv"),
            path("concept_map", "synth/corpus/concept_map.tsv"),
            path("categories", "synth/corpus/categories.tsv"),
            path("fallback", "synth/corpus/fallback.tsv"),
        ],
    )?;
    let model = [set("dim", "16"), set("layers", "1"), set("heads", "2"), set("max_len", "16"), set("epochs", "2")];
    let mut mention = vec![
        path("train", "synth/typing/train.jsonl"),
        path("dev", "synth/typing/dev.jsonl"),
        path("vocab", "synth/typing/vocab.txt"),
    ];
    mention.extend(model.iter().cloned());
    run(&["train"], "model", &mention)?;
    let mut desc = vec![path("train", "synth/typing/descriptions.jsonl"), path("vocab", "synth/typing/vocab.txt")];
    desc.extend(model.iter().cloned());
    run(&["train"], "desc", &desc)?;
    run(
        &["eval", "ned"],
        "ned",
        &[
            path("checkpoint", "model/model.ckpt"),
            path("desc_checkpoint", "desc/model.ckpt"),
            path("ned_test", "synth/ned/test.jsonl"),
            path("ned_train", "synth/ned/train.jsonl"),
            set("baseline_steps", "50"),
        ],
    )?;
    run(
        &["eval", "elc"],
        "elc",
        &[
            path("checkpoint", "model/model.ckpt"),
            path("elc_train", "synth/elc/train.jsonl"),
            path("elc_dev", "synth/elc/dev.jsonl"),
            path("elc_test", "synth/elc/test.jsonl"),
            set("k_list", "1,4"),
            set("kshot_seeds", "2"),
            set("probe", "true"),
            set("probe_epochs", "5"),
        ],
    )?;
    run(
        &["diagnose"],
        "diag",
        &[
            path("ned_dense_dump", "ned/ned_predictions_dense.tsv"),
            path("ned_sparse_dump", "ned/ned_predictions_sparse.tsv"),
            path("elc_dense_dump", "elc/elc_predictions_dense.tsv"),
            path("elc_sparse_dump", "elc/elc_predictions_sparse.tsv"),
            path("checkpoint", "model/model.ckpt"),
            path("ned_test", "synth/ned/test.jsonl"),
            path("elc_train", "synth/elc/train.jsonl"),
            path("elc_dev", "synth/elc/dev.jsonl"),
            path("elc_test", "synth/elc/test.jsonl"),
        ],
    )
}

fn digests(root: &Path) -> BTreeMap<PathBuf, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let digest = Sha256::digest(std::fs::read(&path).unwrap());
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), format!("{digest:x}"));
            }
        }
    }
    out
}

fn cli_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("first"), tmp.path().join("second"));
    pipeline(&a)?;
    pipeline(&b)?;
    let (da, db) = (digests(&a), digests(&b));
    ensure(!da.is_empty(), || "no output files".into())?;
    let keys: Vec<&PathBuf> = da.keys().collect();
    ensure(keys == db.keys().collect::<Vec<_>>(), || "runs produced different file sets".into())?;
    let differing: Vec<String> =
        da.iter().filter(|(k, v)| db[*k] != **v).map(|(k, _)| k.display().to_string()).collect();
    ensure(differing.is_empty(), || format!("digests differ for {differing:?}"))?;
    Ok(format!("{} files from 7 subcommand runs identical across two runs", da.len()))
}

// ---------------------------------------------------------------------------
// 8. baseline reductions

/// Fixed pseudo-random vectors keyed by text.
struct HashEmbedder;

impl HashEmbedder {
    fn vector(text: &str) -> Vec<f64> {
        let mut r = named_rng(8, text);
        (0..6).map(|_| r.gen_range(0.0..1.0)).collect()
    }
}

impl NedEmbedder for HashEmbedder {
    fn mention(&self, mention: &str, context: &str) -> bier_core::Result<Vec<f64>> {
        Ok(Self::vector(&format!("m:{mention}:{context}")))
    }

    fn candidate(&self, title: &str, description: &str) -> bier_core::Result<Vec<f64>> {
        Ok(Self::vector(&format!("c:{title}:{description}")))
    }
}

fn baseline_reductions() -> Outcome {
    let mut r = named_rng(8, "acceptance:baseline");
    let instances: Vec<NedInstance> = (0..1000)
        .map(|i| {
            let n = r.gen_range(2..6);
            // coarse priors make ties common
            let candidates = (0..n)
                .map(|c| Candidate {
                    title: format!("e{i}_{c}"),
                    description: String::new(),
                    prior: r.gen_range(0..=5) as f64 / 5.0,
                })
                .collect();
            NedInstance { mention: format!("m{i}"), context: String::new(), candidates, gold: r.gen_range(0..n) }
        })
        .collect();
    let zeros = BaselineWeights::zeros(24);
    for (i, inst) in instances.iter().enumerate() {
        let a = baseline_predict(inst, &zeros, &HashEmbedder).map_err(|e| e.to_string())?;
        let b = popular_prior_predict(inst);
        ensure(a == b, || format!("instance {i}: baseline {a} vs prior {b}"))?;
    }

    for pair in 0..100 {
        let d = r.gen_range(1..40);
        let x1: Vec<f64> = (0..d).map(|_| r.gen_range(-2.0..2.0)).collect();
        let x2: Vec<f64> = (0..d).map(|_| r.gen_range(-2.0..2.0)).collect();
        let got = baseline_features(&x1, &x2).map_err(|e| e.to_string())?;
        let mut want = vec![0.0; 4 * d];
        for j in 0..d {
            want[j] = x1[j];
            want[d + j] = x2[j];
            want[2 * d + j] = x1[j] * x2[j];
            want[3 * d + j] = (x1[j] - x2[j]).abs();
        }
        let err = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        ensure(got.len() == want.len() && err <= 1e-12, || format!("pair {pair}: error {err}"))?;
    }
    Ok("1000 zero-weight predictions equal the prior; 100 feature pairs exact".into())
}

// ---------------------------------------------------------------------------

fn main() {
    let criteria: [(&str, &str, Duration, fn() -> Outcome); 8] = [
        ("AC1", "concept filter fidelity", Duration::from_secs(1), concept_filter),
        ("AC2", "gradient correctness", Duration::from_secs(60), gradient_check),
        ("AC3", "oracle accuracy identities", Duration::from_secs(5), oracle_identities),
        ("AC4", "kNN exactness", Duration::from_secs(30), knn_exactness),
        ("AC5", "end-to-end synthetic learning", Duration::from_secs(600), end_to_end),
        ("AC6", "diagnostic report fidelity", Duration::MAX, diagnostic_report),
        ("AC7", "CLI determinism", Duration::MAX, cli_determinism),
        ("AC8", "baseline reductions", Duration::MAX, baseline_reductions),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, budget, check) in criteria {
        if !only.is_empty() && !only.iter().any(|o| o == id) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > budget => Err(format!("{detail}; over the {budget:?} budget")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {id} {name} ({:.2}s): {detail}", elapsed.as_secs_f64()),
            Err(detail) => {
                failed += 1;
                println!("FAIL {id} {name} ({:.2}s): {detail}", elapsed.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
