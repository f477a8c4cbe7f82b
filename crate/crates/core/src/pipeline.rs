//! Train, infer, evaluate and benchmark runs driven by a JSON config.
//!
//! Every command reads a [`PipelineConfig`] and works inside its run
//! directory: models go to `models/`, predictions to `predictions.jsonl`,
//! metrics to CSV files and progress lines to `log.txt`. Per-question work
//! runs in parallel and results are sorted by question id before writing,
//! so outputs depend only on the inputs and the seed.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datamodel::{load_db, load_kb, load_questions, Category, Modality, Question};
use crate::enumerator::{enumerate, link_entities, EnumConfig};
use crate::error::{Error, Result};
use crate::generator::{
    compose_candidates, execution_augmented_infer, shuffle_ranked, train_composition_scorer,
    ComposerConfig, ComposerItem, CompositionScorer, GeneratorConfig, Source,
};
use crate::logical::{execute, LogicalForm, OwnedStore, Store};
use crate::oracle::{count_logical_forms_db, enumerate_logical_forms_kb};
use crate::ranker::{
    prepare_items, rank_topk, ranker_recall_report, recall_csv, train_ranker, RankerConfig,
    RankerItem, RankerModel, TrainReport,
};
use crate::toy::{bundled, Corpus};

/// Where the store and questions come from: a bundled corpus or files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Name of a bundled corpus, used instead of the file paths.
    pub bundled: Option<String>,
    pub questions: Option<PathBuf>,
    pub kb_triples: Option<PathBuf>,
    pub kb_names: Option<PathBuf>,
    pub db_schema: Option<PathBuf>,
    pub db_rows: Option<PathBuf>,
}

/// Train/test partition of the question list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Split {
    /// Question `i` is a test question when `i % every == every - 1`.
    Modulo { every: usize },
    /// The first `train` questions train, the rest test.
    Prefix { train: usize },
}

impl Default for Split {
    fn default() -> Self {
        Split::Modulo { every: 4 }
    }
}

impl Split {
    pub fn is_test(&self, i: usize) -> bool {
        match *self {
            Split::Modulo { every } => every > 0 && i % every == every - 1,
            Split::Prefix { train } => i >= train,
        }
    }
}

/// Which questions a command operates on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    Train,
    #[default]
    Test,
    All,
}

/// Order in which ranked primitives are handed to the generator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimitiveOrder {
    #[default]
    Ranker,
    Reversed,
    /// Seeded per-question permutation.
    Shuffled(u64),
}

fn default_true() -> bool {
    true
}

fn default_ks() -> Vec<usize> {
    vec![1, 3, 5, 10]
}

fn default_star() -> Vec<(usize, usize)> {
    vec![(5, 7), (5, 40), (30, 7), (30, 40)]
}

/// A full run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub modality: Modality,
    pub data: DataConfig,
    pub run_dir: PathBuf,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub split: Split,
    /// Questions used by `infer` and `eval`.
    #[serde(default)]
    pub eval_subset: Subset,
    #[serde(default)]
    pub enumeration: EnumConfig,
    /// Defaults to the modality's settings.
    #[serde(default)]
    pub ranker: Option<RankerConfig>,
    #[serde(default)]
    pub composer: ComposerConfig,
    #[serde(default)]
    pub generator: GeneratorConfig,
    /// Link training KB questions to the entities of their gold forms.
    #[serde(default = "default_true")]
    pub teacher_forcing: bool,
    #[serde(default)]
    pub order: PrimitiveOrder,
    #[serde(default = "default_ks")]
    pub recall_ks: Vec<usize>,
    /// Star KB fan-outs `(N, M)` added to the benchmark.
    #[serde(default = "default_star")]
    pub bench_star: Vec<(usize, usize)>,
}

impl PipelineConfig {
    /// A config over a bundled corpus with every other setting at its default.
    pub fn for_bundled(name: &str, modality: Modality, run_dir: &Path, seed: u64) -> Self {
        PipelineConfig {
            modality,
            data: DataConfig {
                bundled: Some(name.to_string()),
                ..Default::default()
            },
            run_dir: run_dir.to_path_buf(),
            seed: Some(seed),
            split: Split::default(),
            eval_subset: Subset::default(),
            enumeration: EnumConfig::default(),
            ranker: None,
            composer: ComposerConfig::default(),
            generator: GeneratorConfig::default(),
            teacher_forcing: true,
            order: PrimitiveOrder::default(),
            recall_ks: default_ks(),
            bench_star: default_star(),
        }
    }

    /// Reads a JSON config; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut cfg.run_dir);
        let d = &mut cfg.data;
        for p in [
            &mut d.questions,
            &mut d.kb_triples,
            &mut d.kb_names,
            &mut d.db_schema,
            &mut d.db_rows,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        Ok(cfg)
    }

    pub fn ranker_config(&self) -> RankerConfig {
        self.ranker
            .clone()
            .unwrap_or_else(|| RankerConfig::for_modality(self.modality))
    }

    fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("a seed is required for training".into()))
    }

    pub fn models_dir(&self) -> PathBuf {
        self.run_dir.join("models")
    }
}

fn require(p: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    let p = p
        .clone()
        .ok_or_else(|| Error::Config(format!("data.{what} is required")))?;
    if !p.exists() {
        return Err(Error::Config(format!(
            "data.{what}: {} does not exist",
            p.display()
        )));
    }
    Ok(p)
}

/// Name of the directory holding the questions file, or `files`.
fn corpus_name(questions: &Path) -> String {
    questions
        .parent()
        .and_then(|d| d.file_name())
        .map_or_else(|| "files".into(), |n| n.to_string_lossy().into_owned())
}

/// Loads the configured store and questions.
pub fn load_corpus(cfg: &PipelineConfig) -> Result<Corpus> {
    let corpus = if let Some(name) = &cfg.data.bundled {
        bundled(name)?
    } else {
        let qpath = require(&cfg.data.questions, "questions")?;
        let questions = load_questions(&qpath)?;
        let store = match cfg.modality {
            Modality::Kb => {
                let names = match &cfg.data.kb_names {
                    Some(_) => Some(require(&cfg.data.kb_names, "kb_names")?),
                    None => None,
                };
                OwnedStore::Kb(load_kb(
                    &require(&cfg.data.kb_triples, "kb_triples")?,
                    names.as_deref(),
                )?)
            }
            Modality::Db => OwnedStore::Db(load_db(
                &require(&cfg.data.db_schema, "db_schema")?,
                &require(&cfg.data.db_rows, "db_rows")?,
            )?),
        };
        Corpus {
            name: corpus_name(&qpath),
            store,
            questions,
        }
    };
    if corpus.store.view().modality() != cfg.modality {
        return Err(Error::Config(format!(
            "config modality {} does not match the {} store",
            cfg.modality,
            corpus.store.view().modality()
        )));
    }
    if let Some(q) = corpus.questions.iter().find(|q| q.modality != cfg.modality) {
        return Err(Error::Config(format!(
            "question {} has modality {}",
            q.id, q.modality
        )));
    }
    Ok(corpus)
}

/// Questions of a subset under a split, in corpus order.
pub fn select(questions: &[Question], split: Split, subset: Subset) -> Vec<Question> {
    questions
        .iter()
        .enumerate()
        .filter(|(i, _)| match subset {
            Subset::Train => !split.is_test(*i),
            Subset::Test => split.is_test(*i),
            Subset::All => true,
        })
        .map(|(_, q)| q.clone())
        .collect()
}

/// Appends progress lines to `log.txt` in the run directory.
struct RunLog {
    path: PathBuf,
}

impl RunLog {
    fn open(run_dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(run_dir).map_err(|e| Error::io(run_dir, e))?;
        Ok(RunLog {
            path: run_dir.join("log.txt"),
        })
    }

    fn line(&self, text: &str) -> Result<()> {
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| Error::io(&self.path, e))?;
        writeln!(f, "{text}").map_err(|e| Error::io(&self.path, e))
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Eval(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Eval(e.to_string()))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

/// Result of [`cmd_train`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub ranker: TrainReport,
    pub composer_trained: usize,
    pub composer_skipped: Vec<String>,
    /// Exact match of full inference on the training questions.
    pub train_em: f64,
}

/// Ranks each item's enumeration with the trained model and pairs it with the gold form.
fn composer_items<'a>(
    items: &[RankerItem<'a>],
    model: &RankerModel,
    rcfg: &RankerConfig,
) -> Result<Vec<ComposerItem<'a>>> {
    items
        .par_iter()
        .filter_map(|it| {
            let gold = it.question.gold_logical_form.as_ref()?;
            Some((|| {
                Ok(ComposerItem {
                    id: it.question.id.clone(),
                    question: it.question.text.clone(),
                    gold: LogicalForm::parse(gold, it.question.modality)?,
                    ranked: rank_topk(model, &it.question.text, &it.enumeration, &rcfg.top_k)?,
                    store: it.store,
                })
            })())
        })
        .collect()
}

/// Trains the ranker and then the composition scorer on the training
/// split, writing `models/ranker.json` and `models/composer.json`.
pub fn cmd_train(cfg: &PipelineConfig) -> Result<TrainOutcome> {
    let seed = cfg.require_seed()?;
    let corpus = load_corpus(cfg)?;
    let store = corpus.store.view();
    let train = select(&corpus.questions, cfg.split, Subset::Train);
    let missing: Vec<&str> = train
        .iter()
        .filter(|q| q.gold_logical_form.is_none())
        .map(|q| q.id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Train(format!(
            "questions without gold forms: {}",
            missing.join(", ")
        )));
    }
    let log = RunLog::open(&cfg.run_dir)?;
    log.line(&format!(
        "train: {} questions from {}",
        train.len(),
        corpus.name
    ))?;
    let rcfg = cfg.ranker_config();
    let items = prepare_items(&train, store, &cfg.enumeration, cfg.teacher_forcing)?;
    let (model, report) = train_ranker(&items, &rcfg, seed)?;
    log.line(&format!(
        "ranker: {} examples, gold coverage {:.4}, epoch loss {:?}",
        report.examples,
        report.coverage(),
        report.epoch_loss
    ))?;
    let citems = composer_items(&items, &model, &rcfg)?;
    let (scorer, creport) =
        train_composition_scorer(&citems, &cfg.generator, &cfg.composer, seed.wrapping_add(1))?;
    log.line(&format!(
        "composer: {} trained, {} skipped, violations per epoch {:?}",
        creport.trained_questions,
        creport.skipped.len(),
        creport.epoch_violations
    ))?;
    let models = cfg.models_dir();
    std::fs::create_dir_all(&models).map_err(|e| Error::io(&models, e))?;
    model.save(&models.join("ranker.json"))?;
    scorer.save(&models.join("composer.json"))?;

    let preds = predict_all(&train, store, &model, &scorer, cfg)?;
    let report_em = evaluate(&preds, &train, Some(store))?;
    log.line(&format!(
        "train EM {:.4}, answer F1 {:.4}",
        report_em.em, report_em.f1
    ))?;
    Ok(TrainOutcome {
        ranker: report,
        composer_trained: creport.trained_questions,
        composer_skipped: creport.skipped,
        train_em: report_em.em,
    })
}

/// One inference record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prediction {
    pub id: String,
    pub form: String,
    pub answers: Vec<String>,
    /// `candidate` or `fallback`.
    pub source: String,
    /// Whether the final form executed without error.
    pub executes: bool,
    /// Enumerated primitives per category.
    pub primitives: [usize; 4],
    pub candidates: usize,
}

fn question_seed(seed: u64, id: &str) -> u64 {
    id.bytes().fold(seed ^ 0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x100_0000_01b3)
    })
}

/// Enumerate, rank, compose and execute one question.
pub fn predict(
    q: &Question,
    store: Store<'_>,
    model: &RankerModel,
    scorer: &CompositionScorer,
    cfg: &PipelineConfig,
) -> Result<Prediction> {
    let rcfg = cfg.ranker_config();
    let enumeration = enumerate(q, store, &cfg.enumeration);
    let mut ranked = rank_topk(model, &q.text, &enumeration, &rcfg.top_k)?;
    ranked = match cfg.order {
        PrimitiveOrder::Ranker => ranked,
        PrimitiveOrder::Reversed => ranked.reversed(),
        PrimitiveOrder::Shuffled(seed) => shuffle_ranked(&ranked, question_seed(seed, &q.id)),
    };
    let cands = compose_candidates(&q.text, &ranked, store, scorer, &cfg.generator);
    let inf = execution_augmented_infer(&cands, store, &ranked, cfg.generator.allow_backtrack);
    Ok(Prediction {
        id: q.id.clone(),
        form: inf.form.to_string(),
        answers: inf.answers,
        source: match inf.source {
            Source::Candidate => "candidate",
            Source::Fallback => "fallback",
        }
        .into(),
        executes: execute(&inf.form, store).is_ok(),
        primitives: enumeration.counts(),
        candidates: cands.len(),
    })
}

/// [`predict`] over many questions in parallel, sorted by id.
pub fn predict_all(
    questions: &[Question],
    store: Store<'_>,
    model: &RankerModel,
    scorer: &CompositionScorer,
    cfg: &PipelineConfig,
) -> Result<Vec<Prediction>> {
    let mut out = questions
        .par_iter()
        .map(|q| predict(q, store, model, scorer, cfg))
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

fn load_models(cfg: &PipelineConfig) -> Result<(RankerModel, CompositionScorer)> {
    let dir = cfg.models_dir();
    Ok((
        RankerModel::load(&dir.join("ranker.json"))?,
        CompositionScorer::load(&dir.join("composer.json"))?,
    ))
}

/// Predicts the configured subset and writes `predictions.jsonl`.
pub fn cmd_infer(cfg: &PipelineConfig) -> Result<Vec<Prediction>> {
    let corpus = load_corpus(cfg)?;
    let (model, scorer) = load_models(cfg)?;
    let questions = select(&corpus.questions, cfg.split, cfg.eval_subset);
    let preds = predict_all(&questions, corpus.store.view(), &model, &scorer, cfg)?;
    let mut text = String::new();
    for p in &preds {
        text.push_str(&serde_json::to_string(p)?);
        text.push('\n');
    }
    write_text(&cfg.run_dir.join("predictions.jsonl"), &text)?;
    let fallbacks = preds.iter().filter(|p| p.source == "fallback").count();
    RunLog::open(&cfg.run_dir)?.line(&format!(
        "infer: {} predictions, {} from fallback, order {:?}",
        preds.len(),
        fallbacks,
        cfg.order
    ))?;
    Ok(preds)
}

/// Reads `predictions.jsonl` from a run directory.
pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Ingest {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Scores of one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub id: String,
    pub em: u8,
    pub f1: f64,
    pub source: String,
    pub predicted: String,
    pub gold: String,
}

/// Aggregate metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub questions: usize,
    /// Fraction of exact matches of canonical forms.
    pub em: f64,
    /// Macro-averaged answer-set F1.
    pub f1: f64,
    /// Fraction of questions whose gold primitives were all enumerated.
    pub coverage: Option<f64>,
    pub fallback_rate: f64,
    pub executable_rate: f64,
    pub mean_primitives: f64,
    pub mean_candidates: f64,
    pub max_candidates: usize,
    pub records: Vec<QuestionRecord>,
}

fn canonical(text: &str, modality: Modality) -> Option<String> {
    LogicalForm::parse(text, modality)
        .ok()
        .map(|lf| lf.to_string())
}

/// Set F1 of predicted against gold answers; two empty sets score 1.
pub fn answer_f1(pred: &[String], gold: &[String]) -> f64 {
    let p: BTreeSet<&String> = pred.iter().collect();
    let g: BTreeSet<&String> = gold.iter().collect();
    if p.is_empty() && g.is_empty() {
        return 1.0;
    }
    let hit = p.intersection(&g).count() as f64;
    if hit == 0.0 {
        return 0.0;
    }
    let (prec, rec) = (hit / p.len() as f64, hit / g.len() as f64);
    2.0 * prec * rec / (prec + rec)
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Scores predictions against gold questions. Gold answers come from the
/// question, or from executing the gold form when a store is given and the
/// question has none. Ids must match exactly.
pub fn evaluate(
    preds: &[Prediction],
    gold: &[Question],
    store: Option<Store<'_>>,
) -> Result<EvalReport> {
    let by_id: BTreeMap<&str, &Question> = gold.iter().map(|q| (q.id.as_str(), q)).collect();
    let pred_ids: BTreeSet<&str> = preds.iter().map(|p| p.id.as_str()).collect();
    let gold_ids: BTreeSet<&str> = by_id.keys().copied().collect();
    if pred_ids != gold_ids || pred_ids.len() != preds.len() {
        let missing: Vec<&str> = gold_ids.difference(&pred_ids).copied().collect();
        let extra: Vec<&str> = pred_ids.difference(&gold_ids).copied().collect();
        return Err(Error::Eval(format!(
            "prediction ids do not match the gold questions (missing: [{}], unexpected: [{}])",
            missing.join(", "),
            extra.join(", ")
        )));
    }
    let mut records = Vec::with_capacity(preds.len());
    for p in preds {
        let q = by_id[p.id.as_str()];
        let gold_text = q.gold_logical_form.clone().unwrap_or_default();
        let gold_canon = canonical(&gold_text, q.modality);
        let em = gold_canon.is_some() && canonical(&p.form, q.modality) == gold_canon;
        let gold_answers = match (q.answer_strings(), store, &gold_canon) {
            (Some(a), _, _) => a,
            (None, Some(s), Some(g)) => {
                let lf = LogicalForm::parse(g, q.modality)?;
                execute(&lf, s).map(|e| e.answers).unwrap_or_default()
            }
            _ => Vec::new(),
        };
        records.push(QuestionRecord {
            id: p.id.clone(),
            em: em as u8,
            f1: answer_f1(&p.answers, &gold_answers),
            source: p.source.clone(),
            predicted: p.form.clone(),
            gold: gold_canon.unwrap_or(gold_text),
        });
    }
    let n = preds.len().max(1) as f64;
    Ok(EvalReport {
        questions: preds.len(),
        em: records.iter().filter(|r| r.em == 1).count() as f64 / n,
        f1: mean(records.iter().map(|r| r.f1)),
        coverage: None,
        fallback_rate: preds.iter().filter(|p| p.source == "fallback").count() as f64 / n,
        executable_rate: preds.iter().filter(|p| p.executes).count() as f64 / n,
        mean_primitives: mean(
            preds
                .iter()
                .map(|p| p.primitives.iter().sum::<usize>() as f64),
        ),
        mean_candidates: mean(preds.iter().map(|p| p.candidates as f64)),
        max_candidates: preds.iter().map(|p| p.candidates).max().unwrap_or(0),
        records,
    })
}

#[derive(Serialize)]
struct MetricRow<'a> {
    metric: &'a str,
    value: String,
}

/// Evaluates `predictions.jsonl` against the configured subset and writes
/// `report.csv`, `per_question.csv` and, when a ranker model exists,
/// `recall.csv`.
pub fn cmd_eval(cfg: &PipelineConfig) -> Result<EvalReport> {
    let corpus = load_corpus(cfg)?;
    let store = corpus.store.view();
    let questions = select(&corpus.questions, cfg.split, cfg.eval_subset);
    let preds = read_predictions(&cfg.run_dir.join("predictions.jsonl"))?;
    let mut report = evaluate(&preds, &questions, Some(store))?;

    let items = prepare_items(&questions, store, &cfg.enumeration, false)?;
    let with_gold: Vec<&RankerItem<'_>> = items.iter().filter(|i| !i.gold.is_empty()).collect();
    if !with_gold.is_empty() {
        let covered = with_gold
            .iter()
            .filter(|i| i.gold.iter().all(|g| i.enumeration.contains(g)))
            .count();
        report.coverage = Some(covered as f64 / with_gold.len() as f64);
    }
    let ranker_path = cfg.models_dir().join("ranker.json");
    if ranker_path.exists() {
        let model = RankerModel::load(&ranker_path)?;
        let rows = ranker_recall_report(&model, &items, &cfg.recall_ks, "ranker")?;
        write_text(&cfg.run_dir.join("recall.csv"), &recall_csv(&rows)?)?;
    }

    let fmt = |x: f64| format!("{x:.6}");
    let mut rows = vec![
        MetricRow {
            metric: "questions",
            value: report.questions.to_string(),
        },
        MetricRow {
            metric: "em",
            value: fmt(report.em),
        },
        MetricRow {
            metric: "answer_f1",
            value: fmt(report.f1),
        },
        MetricRow {
            metric: "fallback_rate",
            value: fmt(report.fallback_rate),
        },
        MetricRow {
            metric: "executable_rate",
            value: fmt(report.executable_rate),
        },
        MetricRow {
            metric: "mean_primitives",
            value: fmt(report.mean_primitives),
        },
        MetricRow {
            metric: "mean_candidates",
            value: fmt(report.mean_candidates),
        },
        MetricRow {
            metric: "max_candidates",
            value: report.max_candidates.to_string(),
        },
    ];
    if let Some(c) = report.coverage {
        rows.push(MetricRow {
            metric: "coverage",
            value: fmt(c),
        });
    }
    write_text(&cfg.run_dir.join("report.csv"), &csv_string(&rows)?)?;
    write_text(
        &cfg.run_dir.join("per_question.csv"),
        &csv_string(&report.records)?,
    )?;
    RunLog::open(&cfg.run_dir)?.line(&format!(
        "eval: {} questions, EM {:.4}, answer F1 {:.4}",
        report.questions, report.em, report.f1
    ))?;
    Ok(report)
}

/// One benchmark row: oracle logical forms against enumerated primitives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub dataset: String,
    pub question: String,
    pub lf: usize,
    pub first_hop: usize,
    pub second_hop: usize,
    pub tb_cl: usize,
    pub tb_cl_vl: usize,
    pub primitives: usize,
    pub enum_ms: f64,
    pub rank_ms: f64,
}

/// Per-question rows and per-dataset means.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub summary: Vec<BenchRow>,
}

fn bench_row(
    dataset: &str,
    question: &str,
    lf: usize,
    counts: [usize; 4],
    enum_ms: f64,
    rank_ms: f64,
) -> BenchRow {
    BenchRow {
        dataset: dataset.to_string(),
        question: question.to_string(),
        lf,
        first_hop: counts[Category::FirstHop.index()],
        second_hop: counts[Category::SecondHop.index()],
        tb_cl: counts[Category::TbCl.index()],
        tb_cl_vl: counts[Category::TbClVl.index()],
        primitives: counts.iter().sum(),
        enum_ms,
        rank_ms,
    }
}

/// Candidate counts of one question: oracle forms and primitives per category.
pub fn bench_question(q: &Question, store: Store<'_>, cfg: &EnumConfig) -> (usize, [usize; 4]) {
    let enumeration = enumerate(q, store, cfg);
    let lf = match store {
        Store::Kb(kb) => {
            let linked = link_entities(q, kb, cfg);
            enumerate_logical_forms_kb(&linked, kb, cfg.allow_backtrack).len()
        }
        Store::Db(db) => count_logical_forms_db(db, &enumeration.tb_cl_vl),
    };
    (lf, enumeration.counts())
}

/// Star KB row: a question anchored at the centre of [`star_kb`](crate::oracle::gen::star_kb).
pub fn bench_star(n: usize, m: usize, cfg: &EnumConfig) -> BenchRow {
    let kb = crate::oracle::gen::star_kb(n, m);
    let q = Question::new("center", "", Modality::Kb).with_mentions(&["center"]);
    let start = Instant::now();
    let (lf, counts) = bench_question(&q, Store::Kb(&kb), cfg);
    let ms = start.elapsed().as_secs_f64() * 1e3;
    bench_row(&format!("star_{n}x{m}"), "center", lf, counts, ms, 0.0)
}

fn summarize(rows: &[BenchRow]) -> Vec<BenchRow> {
    let mut groups: BTreeMap<&str, Vec<&BenchRow>> = BTreeMap::new();
    for r in rows {
        groups.entry(r.dataset.as_str()).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(d, rs)| {
            let avg = |f: fn(&BenchRow) -> usize| {
                (rs.iter().map(|r| f(r) as f64).sum::<f64>() / rs.len() as f64).round() as usize
            };
            BenchRow {
                dataset: d.to_string(),
                question: "mean".into(),
                lf: avg(|r| r.lf),
                first_hop: avg(|r| r.first_hop),
                second_hop: avg(|r| r.second_hop),
                tb_cl: avg(|r| r.tb_cl),
                tb_cl_vl: avg(|r| r.tb_cl_vl),
                primitives: avg(|r| r.primitives),
                enum_ms: mean(rs.iter().map(|r| r.enum_ms)),
                rank_ms: mean(rs.iter().map(|r| r.rank_ms)),
            }
        })
        .collect()
}

/// Compares oracle logical-form counts with primitive counts over every
/// question of the corpus plus the configured star KBs, timing enumeration
/// and, when a ranker model exists, ranking. Writes `bench.csv` (means per
/// dataset) and `bench_per_question.csv`.
pub fn cmd_bench(cfg: &PipelineConfig) -> Result<BenchReport> {
    let corpus = load_corpus(cfg)?;
    let store = corpus.store.view();
    let ranker_path = cfg.models_dir().join("ranker.json");
    let model = if ranker_path.exists() {
        Some(RankerModel::load(&ranker_path)?)
    } else {
        None
    };
    let rcfg = cfg.ranker_config();
    let mut rows = corpus
        .questions
        .par_iter()
        .map(|q| {
            let start = Instant::now();
            let (lf, counts) = bench_question(q, store, &cfg.enumeration);
            let enum_ms = start.elapsed().as_secs_f64() * 1e3;
            let rank_ms = match &model {
                Some(m) => {
                    let start = Instant::now();
                    let e = enumerate(q, store, &cfg.enumeration);
                    rank_topk(m, &q.text, &e, &rcfg.top_k)?;
                    start.elapsed().as_secs_f64() * 1e3
                }
                None => 0.0,
            };
            Ok(bench_row(&corpus.name, &q.id, lf, counts, enum_ms, rank_ms))
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.question.cmp(&b.question));
    for &(n, m) in &cfg.bench_star {
        rows.push(bench_star(n, m, &cfg.enumeration));
    }
    let summary = summarize(&rows);
    write_text(&cfg.run_dir.join("bench.csv"), &csv_string(&summary)?)?;
    write_text(
        &cfg.run_dir.join("bench_per_question.csv"),
        &csv_string(&rows)?,
    )?;
    RunLog::open(&cfg.run_dir)?.line(&format!("bench: {} rows", rows.len()))?;
    Ok(BenchReport { rows, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pred(id: &str, form: &str, answers: &[&str]) -> Prediction {
        Prediction {
            id: id.into(),
            form: form.into(),
            answers: answers.iter().map(|s| s.to_string()).collect(),
            source: "candidate".into(),
            executes: true,
            primitives: [0, 0, 1, 0],
            candidates: 1,
        }
    }

    fn gold(id: &str, form: &str, answers: &[&str]) -> Question {
        let mut q = Question::new(id, "q", Modality::Db).with_gold(form);
        q.answers = Some(answers.iter().map(|a| serde_json::json!(a)).collect());
        q
    }

    #[test]
    fn identical_predictions_score_one() {
        let g = vec![
            gold("a", "SELECT t.x FROM t", &["1"]),
            gold("b", "SELECT t.y FROM t", &["2"]),
        ];
        let p = vec![
            pred("a", "select t.x  from t", &["1"]),
            pred("b", "SELECT t.y FROM t", &["2"]),
        ];
        let r = evaluate(&p, &g, None).unwrap();
        assert_eq!((r.em, r.f1), (1.0, 1.0));
    }

    #[test]
    fn same_answers_different_form() {
        let g = vec![gold("a", "SELECT t.x FROM t", &["1"])];
        let p = vec![pred("a", "SELECT t.y FROM t", &["1"])];
        let r = evaluate(&p, &g, None).unwrap();
        assert_eq!((r.em, r.f1), (0.0, 1.0));
    }

    #[test]
    fn half_right_is_half_em() {
        let g = vec![
            gold("a", "SELECT t.x FROM t", &["1"]),
            gold("b", "SELECT t.y FROM t", &["2"]),
        ];
        let p = vec![
            pred("a", "SELECT t.x FROM t", &["1"]),
            pred("b", "SELECT t.x FROM t", &["9"]),
        ];
        let r = evaluate(&p, &g, None).unwrap();
        assert_eq!((r.em, r.f1), (0.5, 0.5));
    }

    #[test]
    fn id_mismatch_is_an_error() {
        let g = vec![gold("a", "SELECT t.x FROM t", &["1"])];
        let p = vec![pred("b", "SELECT t.x FROM t", &["1"])];
        assert!(matches!(evaluate(&p, &g, None), Err(Error::Eval(_))));
    }

    #[test]
    fn f1_partial_overlap() {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        assert!((answer_f1(&s(&["a", "b"]), &s(&["b", "c"])) - 0.5).abs() < 1e-12);
        assert_eq!(answer_f1(&[], &[]), 1.0);
        assert_eq!(answer_f1(&s(&["a"]), &[]), 0.0);
    }

    #[test]
    fn splits() {
        let m = Split::Modulo { every: 4 };
        assert_eq!(
            (0..8).filter(|&i| m.is_test(i)).collect::<Vec<_>>(),
            vec![3, 7]
        );
        assert!(Split::Prefix { train: 2 }.is_test(2));
    }

    #[test]
    fn star_bench_counts() {
        let r = bench_star(30, 40, &EnumConfig::default());
        assert_eq!((r.lf, r.primitives), (30 + 1200, 70));
    }

    #[test]
    fn empty_question_set_gives_empty_report() {
        let r = evaluate(&[], &[], None).unwrap();
        assert_eq!(r.questions, 0);
        assert!(summarize(&[]).is_empty());
    }
}
