use anyhow::Result;
use bier_core::corpus::build_vocabulary;
use bier_core::ned::{generate_synthetic_ned, NedGenConfig};
use bier_core::synth::{SyntheticWorld, WorldConfig};

use crate::config::RunConfig;
use crate::formats::{
    write_categories, write_concept_map, write_fallback, write_jsonl, write_lines, write_linker, write_triples,
    ElcJson, MentionJson, NedJson,
};

/// Writes a complete synthetic workspace: raw corpus-pipeline inputs,
/// typing splits, description records, and ELC and NED task files.
pub fn synth(cfg: &RunConfig) -> Result<String> {
    cfg.check_keys(&[
        "types",
        "groups",
        "entities",
        "typing_train",
        "typing_dev",
        "typing_test",
        "elc_train",
        "elc_dev",
        "elc_test",
        "ned_pool",
        "ned_train",
        "ned_dev",
        "ned_test",
        "popular_cap",
        "docs",
    ])?;
    let seed = cfg.seed()?;
    let out = cfg.out_dir()?;
    let world = SyntheticWorld::generate(WorldConfig {
        num_types: cfg.parse_or("types", 200)?,
        num_groups: cfg.parse_or("groups", 8)?,
        num_entities: cfg.parse_or("entities", 96)?,
        seed,
        ..WorldConfig::default()
    })?;

    let fx = world.corpus_fixture(cfg.parse_or("docs", 2000)?);
    write_jsonl(&out.join("corpus/mentions.jsonl"), fx.mentions.iter().map(MentionJson::from))?;
    write_linker(&out.join("corpus/linker.tsv"), &fx.linker)?;
    write_concept_map(&out.join("corpus/concept_map.tsv"), &fx.exact, &fx.close)?;
    write_categories(&out.join("corpus/categories.tsv"), &fx.categories)?;
    write_fallback(&out.join("corpus/fallback.tsv"), &fx.fallback)?;

    let split = world.typing_splits((
        cfg.parse_or("typing_train", 5000)?,
        cfg.parse_or("typing_dev", 500)?,
        cfg.parse_or("typing_test", 500)?,
    ));
    let descriptions = world.description_triples();
    let vocab = build_vocabulary(split.train.iter().chain(&descriptions), 1)?;
    write_lines(&out.join("typing/vocab.txt"), vocab.names())?;
    write_triples(&out.join("typing/train.jsonl"), &split.train)?;
    write_triples(&out.join("typing/dev.jsonl"), &split.dev)?;
    write_triples(&out.join("typing/test.jsonl"), &split.test)?;
    write_triples(&out.join("typing/descriptions.jsonl"), &descriptions)?;

    let elc_train = world.elc_instances(cfg.parse_or("elc_train", 800)?, "train");
    let elc_dev = world.elc_instances(cfg.parse_or("elc_dev", 200)?, "dev");
    let elc_test = world.elc_instances(cfg.parse_or("elc_test", 400)?, "test");
    write_jsonl(&out.join("elc/train.jsonl"), elc_train.iter().map(ElcJson::from))?;
    write_jsonl(&out.join("elc/dev.jsonl"), elc_dev.iter().map(ElcJson::from))?;
    write_jsonl(&out.join("elc/test.jsonl"), elc_test.iter().map(ElcJson::from))?;

    let source = world.ned_source(cfg.parse_or("ned_pool", 2000)?);
    let ned = generate_synthetic_ned(
        &source,
        (cfg.parse_or("ned_train", 500)?, cfg.parse_or("ned_dev", 100)?, cfg.parse_or("ned_test", 500)?),
        &NedGenConfig { popular_cap: cfg.parse_or("popular_cap", 0.5)?, seed, ..NedGenConfig::default() },
    )?;
    write_jsonl(&out.join("ned/train.jsonl"), ned.train.iter().map(NedJson::from))?;
    write_jsonl(&out.join("ned/dev.jsonl"), ned.dev.iter().map(NedJson::from))?;
    write_jsonl(&out.join("ned/test.jsonl"), ned.test.iter().map(NedJson::from))?;

    Ok(format!(
        "synthetic world: {} types, {} entities, {} mentions, {} typing triples, {} ELC and {} NED instances",
        world.type_names.len(),
        world.entities.len(),
        fx.mentions.len(),
        split.train.len() + split.dev.len() + split.test.len(),
        elc_train.len() + elc_dev.len() + elc_test.len(),
        ned.train.len() + ned.dev.len() + ned.test.len(),
    ))
}
