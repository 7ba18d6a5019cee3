//! Pipeline stages over an output directory:
//!
//! ```text
//! trials/{fc,fa}_trials.jsonl
//! records/<model>/{fc,fa}.jsonl, compliance.json
//! behavior/<model>/{fc,fa}_counts.csv (+ .bin cache)
//! geometry/<model>/<FC_PPMI|FA_PPMI|FC_counts|FA_counts|FC_SVD_k|FA_SVD_k>.ssim
//! consensus/<centering>/<model>/<strategy>.ssim
//! reports/<centering>/evaluation{,_summary}.csv, evaluation.json
//! reports/ridge/ridge{,_summary}.csv, ridge.json
//! reports/compliance.csv, reports/<centering>/summary.json
//! manifest.json
//! ```
//!
//! Every stage is recorded in the manifest and skipped when its inputs,
//! settings and outputs are unchanged.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use assocgeom_core::behavior::{cosine_rows, ppmi, svd_embed, CountsBuilder, CueResponseMatrix};
use assocgeom_core::config::{CenteringMode, RunConfig};
use assocgeom_core::eval::{layer_profile, sample_pairs, union_mask};
use assocgeom_core::harness::{CollectionSummary, Trial};
use assocgeom_core::hidden::{centered_similarity, hidden_similarity, ConsensusBuilder, LayerEmbeddings, Strategy};
use assocgeom_core::ridge::{
    form_pairs, layer_design, predictor_rows, regress_layer, split_vocab, Predictors, RidgeReport,
};
use assocgeom_core::seed::{derive, fnv1a, tag};
use assocgeom_core::similarity::{SimilarityMatrix, SourceTag};
use assocgeom_core::synthetic::{SyntheticSpec, SyntheticWorld, TARGET_MODEL};
use assocgeom_core::trials::{generate_fa_trials, generate_fc_trials, Paradigm};
use assocgeom_core::vocab::{normalize_word, Vocabulary};
use assocgeom_core::Error as CoreError;
use serde::Serialize;

use crate::collector::collect_to_file;
use crate::error::{Error, Result};
use crate::manifest::{run_stage, StageOutcome};
use crate::report::{self, ModelProfile, ModelRidge};
use crate::settings::{ModelEntry, Settings};
use crate::{counts, fsutil, lemb, participant, records, ssim};

/// Command-line adjustments applied on top of the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub centering: Option<CenteringMode>,
    /// Participant spec used for every model.
    pub participant: Option<String>,
    pub resume: bool,
    /// Run stages even when the manifest says they are up to date.
    pub force: bool,
}

pub struct Context {
    pub settings: Settings,
    pub vocab: Vocabulary,
    pub out_dir: PathBuf,
    pub overrides: Overrides,
}

fn short(p: Paradigm) -> &'static str {
    match p {
        Paradigm::ForcedChoice => "fc",
        Paradigm::FreeAssociation => "fa",
    }
}

const PARADIGMS: [Paradigm; 2] = [Paradigm::ForcedChoice, Paradigm::FreeAssociation];

impl Context {
    pub fn new(mut settings: Settings, out_dir: &Path, overrides: Overrides) -> Result<Context> {
        if let Some(s) = overrides.seed {
            settings.run.master_seed = s;
        }
        if let Some(c) = overrides.centering {
            settings.run.centering_mode = c;
        }
        settings.validate()?;
        let vocab_path = settings.vocab_path();
        let text = fsutil::read_to_string(&vocab_path)?;
        let vocab = Vocabulary::parse(&text)?;
        settings.run.validate_for_vocab(vocab.len())?;
        Ok(Context { settings, vocab, out_dir: out_dir.to_path_buf(), overrides })
    }

    pub fn cfg(&self) -> &RunConfig {
        &self.settings.run
    }

    pub fn centering(&self) -> CenteringMode {
        self.settings.run.centering_mode
    }

    pub fn trials_path(&self, p: Paradigm) -> PathBuf {
        self.out_dir.join("trials").join(format!("{}_trials.jsonl", short(p)))
    }

    pub fn records_path(&self, model: &str, p: Paradigm) -> PathBuf {
        self.out_dir.join("records").join(model).join(format!("{}.jsonl", short(p)))
    }

    pub fn compliance_path(&self, model: &str) -> PathBuf {
        self.out_dir.join("records").join(model).join("compliance.json")
    }

    pub fn counts_path(&self, model: &str, p: Paradigm) -> PathBuf {
        self.out_dir.join("behavior").join(model).join(format!("{}_counts.csv", short(p)))
    }

    pub fn geometry_path(&self, model: &str, tag: &SourceTag) -> PathBuf {
        self.out_dir.join("geometry").join(model).join(format!("{tag}.ssim"))
    }

    pub fn consensus_path(&self, model: &str, strategy: Strategy) -> PathBuf {
        self.out_dir
            .join("consensus")
            .join(self.centering().as_str())
            .join(model)
            .join(format!("{}.ssim", strategy.as_str()))
    }

    pub fn report_dir(&self) -> PathBuf {
        self.out_dir.join("reports").join(self.centering().as_str())
    }

    pub fn ridge_dir(&self) -> PathBuf {
        self.out_dir.join("reports").join("ridge")
    }

    fn stage_hash<T: Serialize>(&self, stage: &str, parts: &T) -> String {
        let text = serde_json::to_string(&(stage, parts)).expect("stage settings serialize");
        fsutil::sha256_bytes(text.as_bytes())
    }

    fn run(
        &self,
        stage: &str,
        inputs: &[PathBuf],
        hash: &str,
        f: impl FnOnce() -> Result<Vec<PathBuf>>,
    ) -> Result<StageOutcome> {
        run_stage(&self.out_dir, stage, inputs, hash, self.overrides.force, f)
    }

    fn participant_spec(&self, m: &ModelEntry) -> Option<String> {
        self.overrides.participant.clone().or_else(|| m.participant.clone())
    }

    fn layer_files(&self, model: &str, strategy: Strategy) -> Result<Vec<PathBuf>> {
        Ok(lemb::discover_layers(&self.settings.embeddings_dir(), model, strategy)?
            .into_iter()
            .map(|(_, p)| p)
            .collect())
    }

    fn reference_files(&self) -> Result<[PathBuf; 2]> {
        let dir = self.settings.embeddings_dir();
        let d = &self.settings.data;
        let files = [lemb::reference_path(&dir, &d.fasttext), lemb::reference_path(&dir, &d.bert)];
        for (f, name) in files.iter().zip([&d.fasttext, &d.bert]) {
            if !f.exists() {
                return Err(Error::Missing {
                    what: format!("static reference {name:?}"),
                    pattern: format!("{}/references/<name>.lemb", dir.display()),
                });
            }
        }
        Ok(files)
    }

    /// FT and BERT cosine geometries, with their tags fixed to the
    /// reference role.
    fn static_references(&self) -> Result<[SimilarityMatrix; 2]> {
        let [ft, bert] = self.reference_files()?;
        let n = self.vocab.len();
        let mut a = hidden_similarity(&lemb::read_for_vocab(&ft, n)?);
        a.set_tag(SourceTag::FastText);
        let mut b = hidden_similarity(&lemb::read_for_vocab(&bert, n)?);
        b.set_tag(SourceTag::Bert);
        Ok([a, b])
    }

    /// Other models feeding the consensus reference of `target`.
    fn consensus_models(&self, target: &str) -> Vec<String> {
        self.settings.hidden_models().into_iter().filter(|m| m != target).collect()
    }

    fn behavior_tags(&self) -> Vec<SourceTag> {
        let mut tags = vec![SourceTag::FcPpmi, SourceTag::FaPpmi, SourceTag::FcCounts, SourceTag::FaCounts];
        for &k in &self.cfg().svd_ranks {
            tags.push(SourceTag::FcSvd(k));
            tags.push(SourceTag::FaSvd(k));
        }
        tags
    }

    /// Behavioral geometry files present for a model, in a fixed order.
    fn behavior_files(&self, model: &str) -> Vec<PathBuf> {
        self.behavior_tags().iter().map(|t| self.geometry_path(model, t)).filter(|p| p.exists()).collect()
    }
}

pub fn generate(ctx: &Context) -> Result<StageOutcome> {
    let cfg = ctx.cfg();
    let hash = ctx.stage_hash("generate", &(cfg.master_seed, &cfg.paradigm));
    ctx.run("generate", &[ctx.settings.vocab_path()], &hash, || {
        let fc: Vec<Trial> = generate_fc_trials(&ctx.vocab, cfg).into_iter().map(Trial::Fc).collect();
        let fa: Vec<Trial> = generate_fa_trials(&ctx.vocab, cfg).into_iter().map(Trial::Fa).collect();
        log::info!("generated {} FC and {} FA trials", fc.len(), fa.len());
        let (fc_path, fa_path) = (ctx.trials_path(Paradigm::ForcedChoice), ctx.trials_path(Paradigm::FreeAssociation));
        records::write_trials(&fc_path, &fc, &ctx.vocab)?;
        records::write_trials(&fa_path, &fa, &ctx.vocab)?;
        Ok(vec![fc_path, fa_path])
    })
}

/// Collects behavior for every model with a participant. Models without
/// one are expected to have imported counts.
pub fn collect(ctx: &Context) -> Result<()> {
    let cfg = ctx.cfg();
    let inputs: Vec<PathBuf> = PARADIGMS.iter().map(|&p| ctx.trials_path(p)).collect();
    for m in &ctx.settings.models {
        let Some(spec) = ctx.participant_spec(m) else {
            log::info!("{}: no participant configured; skipping collection", m.name);
            continue;
        };
        let hash = ctx.stage_hash("collect", &(cfg.master_seed, &cfg.paradigm, &cfg.collection, &spec));
        ctx.run(&format!("collect:{}", m.name), &inputs, &hash, || {
            let p = participant::build(
                &spec,
                &ctx.vocab,
                cfg.master_seed,
                cfg.paradigm.n_picks,
                cfg.paradigm.fa_words_per_run,
                &ctx.settings.base_dir,
            )?;
            let mut summary = CollectionSummary::default();
            let mut outputs = Vec::new();
            for para in PARADIGMS {
                let trials = records::read_trials(&ctx.trials_path(para), &ctx.vocab)?;
                let path = ctx.records_path(&m.name, para);
                let s = collect_to_file(&trials, p.as_ref(), &ctx.vocab, cfg, &path, ctx.overrides.resume)?;
                summary.merge(&s);
                outputs.push(path);
            }
            log::info!(
                "{}: FC final compliance {:.4}, FA final compliance {:.4}",
                m.name,
                summary.fc.final_compliance_rate(),
                summary.fa.final_compliance_rate()
            );
            let cpath = ctx.compliance_path(&m.name);
            report::write_json(&cpath, &summary)?;
            outputs.push(cpath);
            Ok(outputs)
        })?;
    }
    Ok(())
}

fn tally(path: &Path, vocab: &Vocabulary, paradigm: Paradigm) -> Result<CueResponseMatrix> {
    let mut b = CountsBuilder::new(vocab.len());
    records::for_each_record(path, |r| {
        if r.paradigm != paradigm || !r.compliant {
            return Ok(());
        }
        let cue = vocab.require_id(&r.cue)?;
        for w in &r.parsed_responses {
            b.add(cue, w, 1)?;
        }
        Ok(())
    })?;
    Ok(b.finish())
}

/// Turns collected records into cue-response count files.
pub fn aggregate(ctx: &Context) -> Result<()> {
    for m in &ctx.settings.models {
        let inputs: Vec<PathBuf> = PARADIGMS.iter().map(|&p| ctx.records_path(&m.name, p)).collect();
        if inputs.iter().any(|p| !p.exists()) {
            log::info!("{}: no collected records; using existing counts", m.name);
            continue;
        }
        let hash = ctx.stage_hash("aggregate", &());
        ctx.run(&format!("aggregate:{}", m.name), &inputs, &hash, || {
            let mut outputs = Vec::new();
            for (para, input) in PARADIGMS.iter().zip(&inputs) {
                let matrix = tally(input, &ctx.vocab, *para)?;
                let path = ctx.counts_path(&m.name, *para);
                counts::write(&path, &matrix, &ctx.vocab)?;
                outputs.push(path.clone());
                outputs.push(counts::cache_path(&path));
            }
            Ok(outputs)
        })?;
    }
    Ok(())
}

fn require(path: &Path, what: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::Missing { what: what.into(), pattern: path.display().to_string() })
    }
}

/// Behavioral similarity matrices: PPMI cosine, raw-count cosine and the
/// low-rank SVD variants.
pub fn geometry(ctx: &Context) -> Result<()> {
    let cfg = ctx.cfg();
    for m in &ctx.settings.models {
        let inputs: Vec<PathBuf> = PARADIGMS.iter().map(|&p| ctx.counts_path(&m.name, p)).collect();
        for p in &inputs {
            require(p, &format!("behavioral counts for model {:?}", m.name))?;
        }
        let hash = ctx.stage_hash("geometry", &cfg.svd_ranks);
        ctx.run(&format!("geometry:{}", m.name), &inputs, &hash, || {
            let mut outputs = Vec::new();
            for (para, input) in PARADIGMS.iter().zip(&inputs) {
                let c = counts::read(input, &ctx.vocab)?;
                let fc = *para == Paradigm::ForcedChoice;
                let w = ppmi(&c)?;
                let mut mats = vec![
                    cosine_rows(&w, if fc { SourceTag::FcPpmi } else { SourceTag::FaPpmi }),
                    cosine_rows(&c.to_weighted(), if fc { SourceTag::FcCounts } else { SourceTag::FaCounts }),
                ];
                for &k in &cfg.svd_ranks {
                    let tag = if fc { SourceTag::FcSvd(k) } else { SourceTag::FaSvd(k) };
                    match svd_embed(&w, k, tag) {
                        Ok(e) => mats.push(e.similarity),
                        Err(CoreError::RankOutOfRange { k, max }) => {
                            log::warn!("{}: {} rank {k} exceeds the maximum {max}; skipped", m.name, short(*para));
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
                for s in mats {
                    let path = ctx.geometry_path(&m.name, s.tag());
                    ssim::write(&path, &s)?;
                    outputs.push(path);
                }
            }
            Ok(outputs)
        })?;
    }
    Ok(())
}

/// Streams the layers of every other model into a consensus builder.
fn build_consensus(
    ctx: &Context,
    target: &str,
    strategy: Strategy,
    mode: CenteringMode,
    train_ids: Option<&[usize]>,
) -> Result<Option<SimilarityMatrix>> {
    let others = ctx.consensus_models(target);
    if others.is_empty() {
        return Ok(None);
    }
    let mut b = ConsensusBuilder::new(target, mode, train_ids);
    for other in &others {
        for path in ctx.layer_files(other, strategy)? {
            b.add(&lemb::read_for_vocab(&path, ctx.vocab.len())?)?;
        }
    }
    Ok(Some(b.finish()?))
}

fn consensus_inputs(ctx: &Context, target: &str, strategy: Strategy) -> Result<Vec<PathBuf>> {
    let mut inputs = Vec::new();
    for other in ctx.consensus_models(target) {
        inputs.extend(ctx.layer_files(&other, strategy)?);
    }
    Ok(inputs)
}

/// Cross-model consensus references under the configured centering.
pub fn consensus(ctx: &Context) -> Result<()> {
    let mode = ctx.centering();
    for m in &ctx.settings.models {
        for strategy in ctx.settings.strategies()? {
            if ctx.consensus_models(&m.name).is_empty() {
                log::warn!("{}: no other hidden-state models; no consensus reference", m.name);
                continue;
            }
            let inputs = consensus_inputs(ctx, &m.name, strategy)?;
            let hash = ctx.stage_hash("consensus", &(mode, ctx.consensus_models(&m.name)));
            let stage = format!("consensus:{}:{}:{}", mode.as_str(), m.name, strategy.as_str());
            ctx.run(&stage, &inputs, &hash, || {
                let s = build_consensus(ctx, &m.name, strategy, mode, None)?.expect("other models present");
                let path = ctx.consensus_path(&m.name, strategy);
                ssim::write(&path, &s)?;
                Ok(vec![path])
            })?;
        }
    }
    Ok(())
}

fn evaluation_inputs(ctx: &Context) -> Result<Vec<PathBuf>> {
    let mut inputs: Vec<PathBuf> = ctx.reference_files()?.into();
    for m in &ctx.settings.models {
        inputs.extend(ctx.behavior_files(&m.name));
        for strategy in ctx.settings.strategies()? {
            let c = ctx.consensus_path(&m.name, strategy);
            if c.exists() {
                inputs.push(c);
            }
            inputs.extend(ctx.layer_files(&m.name, strategy)?);
        }
    }
    Ok(inputs)
}

/// Seed of the RSA pair sample shared by every layer and reference of one
/// model and strategy.
pub fn rsa_pairs_seed(master_seed: u64, model: &str, strategy: Strategy) -> u64 {
    derive(master_seed, &[tag::RSA_PAIRS, fnv1a(model.as_bytes()), strategy.code() as u64])
}

fn profile_one(ctx: &Context, model: &str, strategy: Strategy) -> Result<ModelProfile> {
    let cfg = ctx.cfg();
    let n = ctx.vocab.len();
    let mut references = Vec::new();
    for path in ctx.behavior_files(model) {
        references.push(ssim::read(&path)?);
    }
    references.extend(ctx.static_references()?);
    let cpath = ctx.consensus_path(model, strategy);
    if cpath.exists() {
        references.push(ssim::read(&cpath)?);
    }
    let mask = union_mask(n, &references);
    let available = n - mask.iter().filter(|&&m| m).count();
    let ks: Vec<usize> = cfg.nn_k_list.iter().copied().filter(|&k| k < available).collect();
    if ks.len() < cfg.nn_k_list.len() {
        log::warn!("{model}: NN k values >= {available} usable words dropped");
    }
    let pairs = sample_pairs(n, cfg.rsa_sample_pairs, rsa_pairs_seed(cfg.master_seed, model, strategy), &mask)?;
    let mode = ctx.centering();
    let layers =
        ctx.layer_files(model, strategy)?.into_iter().map(|path| -> assocgeom_core::Result<SimilarityMatrix> {
            let e = lemb::read_for_vocab(&path, n).map_err(|e| CoreError::InsufficientData(e.to_string()))?;
            centered_similarity(&e, mode, None)
        });
    let profile = layer_profile(layers, &references, &pairs, &ks)?;
    Ok(ModelProfile { model: model.into(), strategy: strategy.as_str().into(), profile })
}

/// Layerwise RSA and NN@k of every model against every reference.
pub fn evaluate(ctx: &Context) -> Result<()> {
    let cfg = ctx.cfg();
    let inputs = evaluation_inputs(ctx)?;
    let hash = ctx.stage_hash(
        "evaluate",
        &(cfg.master_seed, cfg.rsa_sample_pairs, &cfg.nn_k_list, ctx.centering(), &ctx.settings.data),
    );
    ctx.run(&format!("evaluate:{}", ctx.centering().as_str()), &inputs, &hash, || {
        let mut profiles = Vec::new();
        for m in &ctx.settings.models {
            for strategy in ctx.settings.strategies()? {
                profiles.push(profile_one(ctx, &m.name, strategy)?);
            }
        }
        let dir = ctx.report_dir();
        report::write_evaluation(&dir, &profiles)?;
        report::write_json(&dir.join("evaluation.json"), &profiles)?;
        Ok(["evaluation.csv", "evaluation_summary.csv", "evaluation.json"].iter().map(|f| dir.join(f)).collect())
    })?;
    Ok(())
}

fn regress_one(ctx: &Context, model: &str, strategy: Strategy) -> Result<ModelRidge> {
    let cfg = ctx.cfg();
    let n = ctx.vocab.len();
    let split = split_vocab(n, cfg.ridge.train_fraction, derive(cfg.master_seed, &[tag::VOCAB_SPLIT]))?;
    let [ft, bert] = ctx.static_references()?;
    // centering for the regression is always fit on training words
    let cons =
        build_consensus(ctx, model, strategy, CenteringMode::Centered, Some(&split.train))?.ok_or_else(|| {
            Error::Config(format!(
                "ridge regression for {model:?} needs at least one other model in data.hidden_models"
            ))
        })?;
    let fc = ssim::read(&ctx.geometry_path(model, &SourceTag::FcCounts))?;
    let fa = ssim::read(&ctx.geometry_path(model, &SourceTag::FaCounts))?;
    let predictors = Predictors { fasttext: &ft, bert: &bert, consensus: &cons, fc_counts: &fc, fa_counts: &fa };
    predictors.check(n)?;
    let pairs =
        form_pairs(&split, &predictors.mask(), cfg.ridge.n_train_pairs, derive(cfg.master_seed, &[tag::TRAIN_PAIRS]))?;
    let x_train = predictor_rows(&pairs.train, &predictors);
    let x_test = predictor_rows(&pairs.test, &predictors);
    let mut layers = Vec::new();
    for path in ctx.layer_files(model, strategy)? {
        let e: LayerEmbeddings = lemb::read_for_vocab(&path, n)?;
        let design = layer_design(&split, &pairs, x_train.clone(), x_test.clone(), &e)?;
        layers.push(regress_layer(e.layer, &design, &cfg.ridge, cfg.master_seed)?);
        log::debug!("{model} {} layer {} regressed", strategy.as_str(), e.layer);
    }
    Ok(ModelRidge { strategy: strategy.as_str().into(), report: RidgeReport::new(model, layers) })
}

/// Held-out-words ridge regression of every model's layers.
pub fn regress(ctx: &Context) -> Result<()> {
    let cfg = ctx.cfg();
    let mut inputs: Vec<PathBuf> = ctx.reference_files()?.into();
    for m in &ctx.settings.models {
        inputs.push(ctx.geometry_path(&m.name, &SourceTag::FcCounts));
        inputs.push(ctx.geometry_path(&m.name, &SourceTag::FaCounts));
        for strategy in ctx.settings.strategies()? {
            inputs.extend(ctx.layer_files(&m.name, strategy)?);
            inputs.extend(consensus_inputs(ctx, &m.name, strategy)?);
        }
    }
    for p in &inputs {
        require(p, "regression input")?;
    }
    inputs.sort();
    inputs.dedup();
    let hash = ctx.stage_hash("regress", &(cfg.master_seed, &cfg.ridge, &ctx.settings.data));
    ctx.run("regress", &inputs, &hash, || {
        let mut reports = Vec::new();
        for m in &ctx.settings.models {
            for strategy in ctx.settings.strategies()? {
                reports.push(regress_one(ctx, &m.name, strategy)?);
            }
        }
        let dir = ctx.ridge_dir();
        report::write_ridge(&dir, &reports)?;
        report::write_json(&dir.join("ridge.json"), &reports)?;
        Ok(["ridge.csv", "ridge_summary.csv", "ridge.json"].iter().map(|f| dir.join(f)).collect())
    })?;
    Ok(())
}

/// Compliance table and the JSON summary, from whatever stages have run.
pub fn summarize(ctx: &Context) -> Result<()> {
    let mut compliance = BTreeMap::new();
    for m in &ctx.settings.models {
        let p = ctx.compliance_path(&m.name);
        if p.exists() {
            compliance.insert(m.name.clone(), report::read_json::<CollectionSummary>(&p)?);
        }
    }
    let eval_path = ctx.report_dir().join("evaluation.json");
    let profiles: Vec<ModelProfile> = if eval_path.exists() { report::read_json(&eval_path)? } else { Vec::new() };
    let ridge_path = ctx.ridge_dir().join("ridge.json");
    let ridge: Vec<ModelRidge> = if ridge_path.exists() { report::read_json(&ridge_path)? } else { Vec::new() };
    report::write_compliance(&ctx.out_dir.join("reports").join("compliance.csv"), &compliance)?;
    report::write_json(&ctx.report_dir().join("summary.json"), &report::summary_json(&compliance, &profiles, &ridge))
}

/// Every stage in order.
pub fn pipeline(ctx: &Context) -> Result<()> {
    generate(ctx)?;
    collect(ctx)?;
    aggregate(ctx)?;
    geometry(ctx)?;
    consensus(ctx)?;
    evaluate(ctx)?;
    regress(ctx)?;
    summarize(ctx)
}

/// Imports external behavioral data as a count file. Each CSV row is
/// `cue,response[,count]`; a header row is optional. Cues must be in the
/// vocabulary; responses are normalized like vocabulary words.
pub fn ingest_dataset(ctx: &Context, model: &str, paradigm: Paradigm, input: &Path) -> Result<PathBuf> {
    let mut b = CountsBuilder::new(ctx.vocab.len());
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(fsutil::open(input)?);
    let mut skipped = 0u64;
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::malformed(input, e.to_string()))?;
        let (cue, resp) = (row.get(0).unwrap_or(""), row.get(1).unwrap_or(""));
        let count = match row.get(2) {
            None | Some("") => 1,
            Some(c) => match c.trim().parse::<u64>() {
                Ok(c) => c,
                Err(_) if i == 0 => continue,
                Err(_) => return Err(Error::malformed(input, format!("row {}: count {c:?} is not an integer", i + 1))),
            },
        };
        let cue = normalize_word(cue);
        let resp = normalize_word(resp);
        match ctx.vocab.id(&cue) {
            Some(id) if !resp.is_empty() => b.add(id, &resp, count)?,
            _ if i == 0 => continue,
            _ => skipped += 1,
        }
    }
    if skipped > 0 {
        log::warn!("{}: {skipped} rows with unknown cues or empty responses skipped", input.display());
    }
    let path = ctx.counts_path(model, paradigm);
    counts::write(&path, &b.finish(), &ctx.vocab)?;
    Ok(path)
}

/// Where `ingest_embeddings` stores its output.
#[derive(Debug, Clone)]
pub enum EmbeddingTarget {
    Layer { model: String, strategy: Strategy, layer: u32 },
    Reference(String),
}

/// Converts a word-vector text file (`word v1 v2 ...` per line, with an
/// optional `count dim` first line) into LEMB, in vocabulary order.
/// Vocabulary words missing from the file get zero vectors, which the
/// similarity code masks.
pub fn ingest_embeddings(
    settings: &Settings,
    vocab: &Vocabulary,
    target: &EmbeddingTarget,
    input: &Path,
) -> Result<PathBuf> {
    use std::io::BufRead;
    let n = vocab.len();
    let mut dim = None;
    let mut vectors: Vec<f64> = Vec::new();
    let mut seen = vec![false; n];
    for (i, line) in fsutil::open(input)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(input, e))?;
        let mut parts = line.split_whitespace();
        let Some(word) = parts.next() else { continue };
        let values: std::result::Result<Vec<f64>, _> = parts.map(str::parse::<f64>).collect();
        let values = values.map_err(|_| Error::malformed(input, format!("line {}: non-numeric value", i + 1)))?;
        if i == 0 && values.len() == 1 && word.parse::<u64>().is_ok() {
            continue;
        }
        let d = *dim.get_or_insert(values.len());
        if values.len() != d || d == 0 {
            return Err(Error::malformed(
                input,
                format!("line {}: expected {d} values, found {}", i + 1, values.len()),
            ));
        }
        if vectors.is_empty() {
            vectors = vec![0.0; n * d];
        }
        if let Some(id) = vocab.id(&normalize_word(word)) {
            if !seen[id] {
                seen[id] = true;
                vectors[id * d..(id + 1) * d].copy_from_slice(&values);
            }
        }
    }
    let d = dim.ok_or_else(|| Error::malformed(input, "no vectors found"))?;
    let missing = seen.iter().filter(|&&s| !s).count();
    if missing > 0 {
        log::warn!("{}: {missing} vocabulary words have no vector and will be masked", input.display());
    }
    let dir = settings.embeddings_dir();
    let (e, path) = match target {
        EmbeddingTarget::Layer { model, strategy, layer } => (
            LayerEmbeddings::new(model.clone(), *strategy, *layer, n, d, vectors)?,
            lemb::layer_path(&dir, model, *strategy, *layer),
        ),
        EmbeddingTarget::Reference(name) => {
            (LayerEmbeddings::new(name.clone(), Strategy::Static, 1, n, d, vectors)?, lemb::reference_path(&dir, name))
        }
    };
    lemb::write(&path, &e)?;
    Ok(path)
}

/// Options for the self-contained demo project.
#[derive(Debug, Clone)]
pub struct DemoOptions {
    pub n_words: usize,
    pub seed: u64,
    pub tau: f64,
    pub fa_runs: usize,
}

impl Default for DemoOptions {
    fn default() -> Self {
        DemoOptions { n_words: 200, seed: 1, tau: 0.2, fa_runs: 20 }
    }
}

/// Writes a synthetic project: vocabulary, layer files for a target and
/// two other models, static references, the planted geometry and a config
/// whose participant answers from that geometry. Returns the config path.
pub fn write_demo(dir: &Path, opts: &DemoOptions) -> Result<PathBuf> {
    let spec = SyntheticSpec { n_words: opts.n_words, seed: opts.seed, ..SyntheticSpec::default() };
    let world = SyntheticWorld::generate(&spec)?;
    let emb = dir.join("embeddings");
    fsutil::write_string(&dir.join("vocab.txt"), &world.vocab.to_text())?;
    for e in world.target_layers.iter().chain(&world.other_layers) {
        lemb::write(&lemb::layer_path(&emb, &e.model_id, e.strategy, e.layer), e)?;
    }
    lemb::write(&lemb::reference_path(&emb, "fasttext"), &world.fasttext)?;
    lemb::write(&lemb::reference_path(&emb, "bert"), &world.bert)?;
    let planted =
        LayerEmbeddings::new("planted", Strategy::Static, 1, spec.n_words, world.planted_dim(), world.planted.clone())?;
    lemb::write(&dir.join("planted.lemb"), &planted)?;

    let mut s = Settings::default();
    s.run.master_seed = opts.seed;
    s.run.paradigm.fa_runs = opts.fa_runs;
    let limit = opts.n_words.saturating_sub(1);
    s.run.nn_k_list = [5, 10, 20, 50, 100].into_iter().filter(|&k| k < limit).collect();
    if s.run.nn_k_list.is_empty() {
        s.run.nn_k_list = vec![1];
    }
    s.run.svd_ranks = vec![16, 32, 64];
    s.data.strategies = vec![spec.strategy.as_str().into()];
    s.data.hidden_models = std::iter::once(TARGET_MODEL.to_string())
        .chain((0..spec.n_other_models).map(assocgeom_core::synthetic::other_model_name))
        .collect();
    s.models = vec![ModelEntry {
        name: TARGET_MODEL.into(),
        participant: Some(format!("simulated:tau={},planted=planted.lemb", opts.tau)),
    }];
    let path = dir.join("config.toml");
    fsutil::write_string(&path, &s.to_toml())?;
    Ok(path)
}
