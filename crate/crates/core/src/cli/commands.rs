use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::data_eval::{load_tsv, parse_tsv, score, sniff_field_count, stratified_split, write_tsv, DataRecord, Dataset, LabelSchema};
use crate::embed_aug::{augment_corpus, build_synonym_table, load_embeddings};
use crate::error::{Error, Result};
use crate::models::{decide, Architecture, Ensemble, Head, Model, ModelInput, ModelSpec};
use crate::numeric::RngStream;
use crate::optim::{train, Checkpoint, TrainHistory};
use crate::pipeline::{contextual_inputs, examples, token_inputs, token_lists};
use crate::textprep::{clean_text, CleanConfig, ContextualFile, Vocab};

use super::config::{ModelChoice, RunConfig, Settings};
use super::output::Outputs;
use super::predictions::{parse_predictions, write_predictions, Prediction};

const STREAM_EMBED_INIT: u64 = 2;
const STREAM_SPLIT: u64 = 3;
const STREAM_AUGMENT: u64 = 4;
const STREAM_MODEL_INIT: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Preprocess,
    Augment,
    Train,
    Predict,
    Evaluate,
    Inspect,
}

/// Runs one command and returns the summary to print.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<String> {
    match command {
        Command::Preprocess => preprocess(cfg),
        Command::Augment => augment(cfg),
        Command::Train => train_command(cfg),
        Command::Predict => predict(cfg),
        Command::Evaluate => evaluate(cfg),
        Command::Inspect => inspect(cfg),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn config_err(e: Error) -> Error {
    match e {
        Error::InvalidArgument(m) => Error::Config(m),
        other => other,
    }
}

/// Loads a TSV with or without a label column, whichever it has.
fn load_any(path: &Path, schema: &LabelSchema) -> Result<Dataset> {
    let text = read(path)?;
    let labeled = sniff_field_count(&text) == Some(3);
    parse_tsv(&text, &path.display().to_string(), schema, labeled)
}

fn cleaned(dataset: &Dataset, clean: &CleanConfig) -> Result<Dataset> {
    let records = dataset
        .records
        .iter()
        .map(|r| DataRecord {
            id: r.id.clone(),
            text: clean_text(&r.text, clean),
            label: r.label,
        })
        .collect();
    Dataset::new(dataset.schema.clone(), records)
}

fn written(paths: &[PathBuf]) -> String {
    paths.iter().map(|p| format!("wrote {}\n", p.display())).collect()
}

fn preprocess(cfg: &RunConfig) -> Result<String> {
    let input = cfg.require_existing(&cfg.paths.input, "paths.input")?;
    let output = cfg.require(&cfg.paths.output, "paths.output")?;
    let data = load_any(input, &LabelSchema::for_task(cfg.task))?;
    let clean = cleaned(&data, &cfg.clean)?;
    let mut out = Outputs::new();
    out.stage(output, write_tsv(&clean).as_bytes())?;
    Ok(written(&out.commit()?))
}

fn augment(cfg: &RunConfig) -> Result<String> {
    let train_path = cfg.require_existing(&cfg.paths.train, "paths.train")?;
    let emb_path = cfg.require_existing(&cfg.paths.embeddings, "paths.embeddings")?;
    let output = cfg.require(&cfg.paths.output, "paths.output")?;
    let syn_path = cfg.require(&cfg.paths.synonyms, "paths.synonyms")?;

    let data = cleaned(&load_tsv(train_path, &LabelSchema::for_task(cfg.task), true)?, &cfg.clean)?;
    let table = load_embeddings(emb_path, None)?;
    let corpus = token_lists(&data, &cfg.clean);
    let syn = build_synonym_table(&corpus, &table, cfg.top_n, cfg.min_cos)?;
    let mut rng = RngStream::new(cfg.seed, STREAM_AUGMENT);
    let extra = augment_corpus(&data, &syn, cfg.policy, &mut rng)?;
    let n_extra = extra.len();
    let mut records = data.records;
    records.extend(extra.records);
    let expanded = Dataset::new(data.schema, records)?;

    let mut out = Outputs::new();
    out.stage(output, write_tsv(&expanded).as_bytes())?;
    out.stage(syn_path, syn.to_tsv().as_bytes())?;
    let paths = out.commit()?;
    Ok(format!("{} synonyms, {n_extra} synthetic records\n{}", syn.len(), written(&paths)))
}

/// Settings a checkpoint needs to turn raw text into model input again.
pub fn checkpoint_metadata(cfg: &RunConfig) -> String {
    let c = &cfg.clean;
    format!(
        "[data]\ntask = {}\nlanguage = {}\nmax_len = {}\n[clean]\nurls = {}\nmentions = {}\npunctuation = {}\n\
         elongation = {}\nemoji = {}\ndigits = {}\nforeign_script = {}\nnormalize_arabic = {}\n",
        cfg.task,
        c.language,
        cfg.max_len,
        c.urls,
        c.mentions,
        c.punctuation,
        c.elongation,
        c.emoji,
        c.digits,
        c.foreign_script,
        c.normalize_arabic
    )
}

fn history_path(base: &Path, member: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(format!(".{member}.csv"));
    PathBuf::from(s)
}

fn train_command(cfg: &RunConfig) -> Result<String> {
    let train_path = cfg.require_existing(&cfg.paths.train, "paths.train")?;
    let ckpt_path = cfg.require(&cfg.paths.checkpoint, "paths.checkpoint")?;
    let val_path = match &cfg.paths.val {
        Some(_) => Some(cfg.require_existing(&cfg.paths.val, "paths.val")?),
        None => None,
    };
    let contextual = cfg.model == ModelChoice::Single(Architecture::BertBiHead);
    let source = if contextual {
        cfg.require_existing(&cfg.paths.contextual, "paths.contextual")?
    } else {
        cfg.require_existing(&cfg.paths.embeddings, "paths.embeddings")?
    };

    let schema = LabelSchema::for_task(cfg.task);
    let head = Head::for_classes(schema.len())?;
    let full = load_tsv(train_path, &schema, true)?;
    let (train_ds, val_ds) = match val_path {
        Some(p) => (full, load_tsv(p, &schema, true)?),
        None => stratified_split(&full, cfg.val_fraction, &mut RngStream::new(cfg.seed, STREAM_SPLIT))?,
    };

    let mut ckpt = Checkpoint {
        metadata: checkpoint_metadata(cfg),
        vocab: Vec::new(),
        members: Vec::new(),
        weights: None,
    };
    let mut histories: Vec<(&'static str, TrainHistory)> = Vec::new();

    if contextual {
        let file = ContextualFile::load(source)?;
        let mut spec = ModelSpec::bert_bi_head(file.dim, cfg.max_len, head);
        spec.second_rnn_bidirectional = cfg.second_rnn_bidirectional;
        spec.validate().map_err(config_err)?;
        let tr = examples(&train_ds, contextual_inputs(&train_ds, &file, cfg.max_len)?)?;
        let va = examples(&val_ds, contextual_inputs(&val_ds, &file, cfg.max_len)?)?;
        let model = Model::build(spec, &mut RngStream::new(cfg.seed, STREAM_MODEL_INIT))?;
        let (best, hist) = train(model, &tr, &va, &cfg.train)?;
        ckpt.members.push(best);
        histories.push((Architecture::BertBiHead.name(), hist));
    } else {
        let table = load_embeddings(source, None)?;
        let train_tokens = token_lists(&train_ds, &cfg.clean);
        let vocab = Vocab::build(train_tokens.iter().map(Vec::as_slice), 1);
        let (matrix, found) = table.matrix_for(&vocab, &mut RngStream::new(cfg.seed, STREAM_EMBED_INIT));
        log::info!("{found} of {} vocabulary words have pretrained vectors", vocab.len());
        let tr = examples(&train_ds, token_inputs(&train_ds, &cfg.clean, &vocab, cfg.max_len)?)?;
        let va = examples(&val_ds, token_inputs(&val_ds, &cfg.clean, &vocab, cfg.max_len)?)?;
        let archs = match cfg.model {
            ModelChoice::Ensemble => vec![Architecture::KeisBigru, Architecture::KeisCnn],
            ModelChoice::Single(a) => vec![a],
        };
        for (i, &arch) in archs.iter().enumerate() {
            let mut spec = match arch {
                Architecture::KeisBigru => ModelSpec::keis_bigru(vocab.len(), table.dim(), cfg.max_len, head),
                Architecture::KeisCnn => ModelSpec::keis_cnn(vocab.len(), table.dim(), cfg.max_len, head),
                Architecture::BertBiHead => unreachable!("contextual models take the other branch"),
            };
            spec.train_embeddings = cfg.train_embeddings;
            spec.validate().map_err(config_err)?;
            let mut rng = RngStream::new(cfg.seed, STREAM_MODEL_INIT + i as u64);
            let model = Model::build_with_embeddings(spec, matrix.clone(), &mut rng)?;
            let (best, hist) = train(model, &tr, &va, &cfg.train)?;
            ckpt.members.push(best);
            histories.push((arch.name(), hist));
        }
        if ckpt.members.len() == 2 {
            ckpt.weights = Some(cfg.weights);
        }
        ckpt.vocab = vocab.words().to_vec();
    }

    let mut out = Outputs::new();
    out.stage(ckpt_path, &ckpt.to_bytes()?)?;
    if let Some(h) = &cfg.paths.history {
        if histories.len() == 1 {
            out.stage(h, histories[0].1.to_csv().as_bytes())?;
        } else {
            for (name, hist) in &histories {
                out.stage(&history_path(h, name), hist.to_csv().as_bytes())?;
            }
        }
    }
    let paths = out.commit()?;

    let mut summary = String::new();
    for ((name, hist), m) in histories.iter().zip(&ckpt.members) {
        let best = hist.epochs.iter().find(|e| e.epoch == hist.best_epoch);
        let f1 = best.map_or(f64::NAN, |e| e.val_macro_f1);
        let _ = writeln!(
            summary,
            "{name}: spec {} best epoch {} val macro_f1 {f1:.4}",
            m.spec().digest(),
            hist.best_epoch
        );
    }
    summary.push_str(&written(&paths));
    Ok(summary)
}

struct Loaded {
    ckpt: Checkpoint,
    settings: RunConfig,
}

fn load_model(path: &Path) -> Result<Loaded> {
    let ckpt = Checkpoint::load(path)?;
    let meta = Settings::parse(&ckpt.metadata, &format!("{} metadata", path.display()))?;
    let settings = RunConfig::from_settings(&meta).map_err(|e| Error::Data(e.to_string()))?;
    Ok(Loaded { ckpt, settings })
}

fn predict(cfg: &RunConfig) -> Result<String> {
    let ckpt_path = cfg.require_existing(&cfg.paths.checkpoint, "paths.checkpoint")?;
    let input = cfg.require_existing(&cfg.paths.input, "paths.input")?;
    let output = cfg.require(&cfg.paths.output, "paths.output")?;
    let Loaded { ckpt, settings } = load_model(ckpt_path)?;
    let first = ckpt
        .members
        .first()
        .ok_or_else(|| Error::Data("checkpoint holds no model".into()))?;
    let contextual = first.spec().architecture == Architecture::BertBiHead;
    let ctx_path = if contextual {
        Some(cfg.require_existing(&cfg.paths.contextual, "paths.contextual")?)
    } else {
        None
    };

    let schema = LabelSchema::for_task(settings.task);
    let data = load_any(input, &schema)?;
    let inputs: Vec<ModelInput> = match ctx_path {
        Some(p) => contextual_inputs(&data, &ContextualFile::load(p)?, settings.max_len)?,
        None => {
            let vocab = Vocab::from_words(&ckpt.vocab);
            token_inputs(&data, &settings.clean, &vocab, settings.max_len)?
        }
    };
    let ensemble = match (&ckpt.members[..], ckpt.weights) {
        ([a, b], Some(w)) => Some(Ensemble::new(a.clone(), b.clone(), w)?),
        _ => None,
    };
    let mut rows = Vec::with_capacity(inputs.len());
    for (r, x) in data.records.iter().zip(&inputs) {
        let probs = match &ensemble {
            Some(e) => e.predict(x)?,
            None => first.predict(x)?,
        };
        rows.push(Prediction {
            id: r.id.clone(),
            label: decide(&probs),
            probs,
        });
    }
    let mut out = Outputs::new();
    out.stage(output, write_predictions(&rows, &schema).as_bytes())?;
    Ok(written(&out.commit()?))
}

fn evaluate(cfg: &RunConfig) -> Result<String> {
    let pred_path = cfg.require_existing(&cfg.paths.predictions, "paths.predictions")?;
    let gold_path = cfg.require_existing(&cfg.paths.gold, "paths.gold")?;
    let schema = LabelSchema::for_task(cfg.task);
    let preds = parse_predictions(&read(pred_path)?, &pred_path.display().to_string(), &schema)?;
    let gold = load_tsv(gold_path, &schema, true)?;
    let by_id: HashMap<&str, usize> = preds.iter().map(|p| (p.id.as_str(), p.label)).collect();
    if by_id.len() != gold.len() {
        return Err(Error::Data(format!(
            "{} predictions for {} gold records",
            by_id.len(),
            gold.len()
        )));
    }
    let mut p = Vec::with_capacity(gold.len());
    for r in &gold.records {
        let l = by_id
            .get(r.id.as_str())
            .ok_or_else(|| Error::Data(format!("no prediction for record {:?}", r.id)))?;
        p.push(*l);
    }
    let report = score(&p, &gold.labels()?, &schema)?;
    let text = report.to_text();
    let mut summary = text.clone();
    if let Some(stem) = &cfg.paths.report {
        let with = |ext: &str| {
            let mut s = stem.as_os_str().to_owned();
            s.push(ext);
            PathBuf::from(s)
        };
        let mut out = Outputs::new();
        out.stage(&with(".json"), report.to_json().as_bytes())?;
        out.stage(&with(".txt"), text.as_bytes())?;
        summary.push_str(&written(&out.commit()?));
    }
    Ok(summary)
}

fn inspect(cfg: &RunConfig) -> Result<String> {
    let path = cfg.require_existing(&cfg.paths.checkpoint, "paths.checkpoint")?;
    let Loaded { ckpt, .. } = load_model(path)?;
    let mut s = String::new();
    for m in &ckpt.members {
        let spec = m.spec();
        let _ = writeln!(s, "{} {} digest {}", spec.architecture.name(), spec.head.name(), spec.digest());
    }
    if let Some(w) = ckpt.weights {
        let _ = writeln!(s, "weights {} {}", w.bigru(), w.cnn());
    }
    let _ = writeln!(s, "vocabulary {}", ckpt.vocab.len());
    s.push_str(&ckpt.metadata);
    Ok(s)
}
