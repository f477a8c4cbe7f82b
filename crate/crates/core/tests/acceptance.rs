//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints one PASS/FAIL line; exits non-zero if any fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use primparse::datamodel::{Direction, Modality, Payload, Question};
use primparse::enumerator::{enumerate_kb_primitives, EnumConfig};
use primparse::generator::CompositionScorer;
use primparse::oracle::gen::{
    random_db, random_kb, random_query, random_query_syntax, random_sexpr, random_sexpr_syntax,
};
use primparse::oracle::{brute_execute_sexpr, brute_execute_sql, reachable_second_hops};
use primparse::pipeline::{
    bench_question, bench_star, cmd_infer, cmd_train, evaluate, predict_all, select,
    PipelineConfig, PrimitiveOrder, Split, Subset,
};
use primparse::ranker::{
    contrastive_grad, contrastive_loss, filter_reachable, prepare_items, ranker_recall_report,
    train_ranker, NegativeStrategy, RankerConfig, RankerModel, ScoredPrimitive,
};
use primparse::sexpr::{execute_sexpr, parse_sexpr, print_sexpr};
use primparse::sqlcore::{execute_sql, parse_sql, print_sql, ResultSet, SqlQuery};
use primparse::toy::{self, Corpus, ADVERSARIAL_TRAIN};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

type Check = fn() -> Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(start: Instant, budget: Duration) -> Result<(), String> {
    let spent = start.elapsed();
    ensure(
        spent < budget,
        format!("took {spent:.1?}, budget {budget:?}"),
    )
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

/// Trains on a bundled corpus in a fresh run directory.
fn trained(name: &str, modality: Modality, seed: u64) -> Result<(TempDir, PipelineConfig), String> {
    let dir = TempDir::new().map_err(e)?;
    let mut cfg = PipelineConfig::for_bundled(name, modality, dir.path(), seed);
    if name == "adversarial_db" {
        cfg.split = Split::Prefix {
            train: ADVERSARIAL_TRAIN,
        };
    }
    cmd_train(&cfg).map_err(e)?;
    Ok((dir, cfg))
}

fn models(cfg: &PipelineConfig) -> Result<(RankerModel, CompositionScorer), String> {
    let m = RankerModel::load(&cfg.models_dir().join("ranker.json")).map_err(e)?;
    let s = CompositionScorer::load(&cfg.models_dir().join("composer.json")).map_err(e)?;
    Ok((m, s))
}

fn search_space_reduction() -> Result<String, String> {
    let start = Instant::now();
    let cfg = EnumConfig::default();
    let mut notes = Vec::new();
    for n in [5, 30] {
        for m in [7, 40] {
            let row = bench_star(n, m, &cfg);
            ensure(
                row.first_hop + row.second_hop == n + m,
                format!(
                    "star {n}x{m}: {} primitives",
                    row.first_hop + row.second_hop
                ),
            )?;
            ensure(
                row.lf == n + n * m,
                format!("star {n}x{m}: {} logical forms", row.lf),
            )?;
            notes.push(format!("{n}x{m}: {} vs {}", n + m, row.lf));
        }
    }
    let corpus = toy::toy_db().map_err(e)?;
    let store = corpus.store.view();
    let (mut prims, mut lfs) = (0usize, 0usize);
    for q in &corpus.questions {
        let (lf, counts) = bench_question(q, store, &cfg);
        let p: usize = counts.iter().sum();
        ensure(p < lf, format!("{}: {p} primitives vs {lf} forms", q.id))?;
        prims += p;
        lfs += lf;
    }
    within(start, Duration::from_secs(10))?;
    let n = corpus.questions.len() as f64;
    Ok(format!(
        "star {}; toy DB mean {:.1} primitives vs {:.1} forms",
        notes.join(", "),
        prims as f64 / n,
        lfs as f64 / n
    ))
}

fn sorted_rows(rs: &ResultSet) -> Vec<Vec<primparse::datamodel::Value>> {
    let mut rows = rs.rows.clone();
    rows.sort();
    rows
}

fn ordered(q: &SqlQuery) -> bool {
    q.order_by.is_some() && q.set_op.is_none()
}

fn executor_correctness() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut kb_ok = 0;
    for i in 0..1000 {
        let kb = random_kb(&mut rng, 50);
        let ast = random_sexpr(&mut rng, 3);
        match (execute_sexpr(&ast, &kb), brute_execute_sexpr(&ast, &kb)) {
            (Ok(a), Ok(b)) => {
                ensure(a == b, format!("sexpr case {i}: {ast}"))?;
                kb_ok += 1;
            }
            (Err(_), Err(_)) => {}
            (a, b) => return Err(format!("sexpr case {i}: {ast}: {a:?} vs {b:?}")),
        }
    }
    let mut db_ok = 0;
    for i in 0..1000 {
        let db = random_db(&mut rng, 3, 20);
        let q = random_query(&mut rng, &db, 0.1);
        match (execute_sql(&q, &db), brute_execute_sql(&q, &db)) {
            (Ok(a), Ok(b)) => {
                let same = a.columns == b.columns
                    && if ordered(&q) {
                        a.rows == b.rows
                    } else {
                        sorted_rows(&a) == sorted_rows(&b)
                    };
                ensure(same, format!("sql case {i}: {q}"))?;
                db_ok += 1;
            }
            (Err(_), Err(_)) => {}
            (a, b) => return Err(format!("sql case {i}: {q}: {a:?} vs {b:?}")),
        }
    }
    within(start, Duration::from_secs(60))?;
    Ok(format!(
        "1000 + 1000 agree ({kb_ok} and {db_ok} executed, the rest errored in both)"
    ))
}

fn round_trips() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..10_000 {
        let ast = random_sexpr_syntax(&mut rng, 4);
        let text = print_sexpr(&ast);
        let back = parse_sexpr(&text).map_err(|err| format!("sexpr {i}: {text}: {err}"))?;
        ensure(back == ast, format!("sexpr {i}: {text}"))?;
    }
    for i in 0..10_000 {
        let q = random_query_syntax(&mut rng);
        let text = print_sql(&q);
        let back = parse_sql(&text).map_err(|err| format!("sql {i}: {text}: {err}"))?;
        ensure(back == q, format!("sql {i}: {text}"))?;
    }
    Ok("10000 S-expressions and 10000 SQL queries".into())
}

fn contrastive_loss_checks() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10 {
        let s: f64 = rng.gen_range(-20.0..20.0);
        let l = contrastive_loss(s, &[s]).map_err(e)?;
        ensure(
            (l - std::f64::consts::LN_2).abs() <= 1e-9,
            format!("uniform pair loss {l}"),
        )?;
    }
    // Five-point central stencil.
    let h = 1e-3;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(1..=20);
        let mut v: Vec<f64> = (0..=n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let (gp, gn) = contrastive_grad(v[0], &v[1..]).map_err(e)?;
        let analytic: Vec<f64> = std::iter::once(gp).chain(gn).collect();
        for i in 0..v.len() {
            let x = v[i];
            let mut at = |d: f64| {
                v[i] = x + d;
                let l = contrastive_loss(v[0], &v[1..]);
                v[i] = x;
                l
            };
            let (p2, p1, m1, m2) = (
                at(2.0 * h).map_err(e)?,
                at(h).map_err(e)?,
                at(-h).map_err(e)?,
                at(-2.0 * h).map_err(e)?,
            );
            let numeric = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
            let rel =
                (analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    ensure(
        worst <= 1e-6,
        format!("worst relative gradient error {worst:e}"),
    )?;
    Ok(format!(
        "uniform pair = ln 2; worst relative gradient error {worst:.1e} over 100 vectors"
    ))
}

fn recall_at(
    items_train: &[primparse::ranker::RankerItem<'_>],
    items_test: &[primparse::ranker::RankerItem<'_>],
    cfg: &RankerConfig,
    seed: u64,
) -> Result<Vec<f64>, String> {
    let (model, _) = train_ranker(items_train, cfg, seed).map_err(e)?;
    let rows = ranker_recall_report(&model, items_test, &[1, 3, 5], "run").map_err(e)?;
    Ok(rows
        .into_iter()
        .filter(|r| r.config == "run")
        .map(|r| r.recall)
        .collect())
}

fn hard_negatives_help() -> Result<String, String> {
    let start = Instant::now();
    let corpus = toy::adversarial_db().map_err(e)?;
    let store = corpus.store.view();
    let ecfg = EnumConfig::default();
    let (train, test) = corpus.questions.split_at(ADVERSARIAL_TRAIN);
    let train = prepare_items(train, store, &ecfg, true).map_err(e)?;
    let test = prepare_items(test, store, &ecfg, false).map_err(e)?;
    let hard = RankerConfig::for_modality(Modality::Db);
    let random = RankerConfig {
        strategy: NegativeStrategy::Random,
        ..hard.clone()
    };
    let mut uncond = hard.clone();
    uncond.features.category_conditioning = false;
    let seeds = 5;
    let mut sums = [[0.0; 3]; 3];
    for seed in 0..seeds {
        for (acc, cfg) in sums.iter_mut().zip([&hard, &random, &uncond]) {
            for (a, r) in acc.iter_mut().zip(recall_at(&train, &test, cfg, seed)?) {
                *a += r / seeds as f64;
            }
        }
    }
    let [hn, rnd, unc] = sums;
    ensure(
        hn[0] >= rnd[0],
        format!("recall@1 hard {:.3} < random {:.3}", hn[0], rnd[0]),
    )?;
    for (i, k) in [1, 3, 5].iter().enumerate() {
        ensure(
            hn[i] >= unc[i],
            format!(
                "recall@{k} conditioned {:.3} < unconditioned {:.3}",
                hn[i], unc[i]
            ),
        )?;
    }
    within(start, Duration::from_secs(300))?;
    Ok(format!(
        "recall@1 hard {:.3} vs random {:.3}; recall@1/3/5 conditioned {:.3}/{:.3}/{:.3} vs unconditioned {:.3}/{:.3}/{:.3}",
        hn[0], rnd[0], hn[0], hn[1], hn[2], unc[0], unc[1], unc[2]
    ))
}

fn totality() -> Result<String, String> {
    let mut notes = Vec::new();
    let toy_kb = trained("toy_kb", Modality::Kb, 7)?;
    let toy_db = trained("toy_db", Modality::Db, 7)?;
    let adv = trained("adversarial_db", Modality::Db, 7)?;
    let runs: [(&str, &PipelineConfig); 5] = [
        ("toy_kb", &toy_kb.1),
        ("toy_db", &toy_db.1),
        ("adversarial_db", &adv.1),
        ("fallback_kb", &toy_kb.1),
        ("fallback_db", &toy_db.1),
    ];
    for (name, cfg) in runs {
        let corpus: Corpus = toy::bundled(name).map_err(e)?;
        let (m, s) = models(cfg)?;
        let preds = predict_all(&corpus.questions, corpus.store.view(), &m, &s, cfg).map_err(e)?;
        let broken: Vec<&str> = preds
            .iter()
            .filter(|p| !p.executes)
            .map(|p| p.id.as_str())
            .collect();
        ensure(
            broken.is_empty(),
            format!("{name}: not executable: {broken:?}"),
        )?;
        let fallbacks = preds.iter().filter(|p| p.source == "fallback").count();
        if name.starts_with("fallback") {
            ensure(fallbacks > 0, format!("{name}: fallback never used"))?;
        }
        if name == "fallback_db" {
            ensure(
                fallbacks == preds.len(),
                format!("{name}: {fallbacks} of {} fell back", preds.len()),
            )?;
        }
        notes.push(format!(
            "{name} {}/{} ({fallbacks} fallback)",
            preds.len(),
            preds.len()
        ));
    }
    Ok(format!("executable: {}", notes.join(", ")))
}

fn toy_accuracy() -> Result<String, String> {
    let start = Instant::now();
    let mut notes = Vec::new();
    for (name, modality) in [("toy_kb", Modality::Kb), ("toy_db", Modality::Db)] {
        let (_dir, cfg) = trained(name, modality, 7)?;
        let preds = cmd_infer(&cfg).map_err(e)?;
        let corpus = toy::bundled(name).map_err(e)?;
        let gold = select(&corpus.questions, cfg.split, Subset::Test);
        let r = evaluate(&preds, &gold, Some(corpus.store.view())).map_err(e)?;
        ensure(
            r.em >= 0.9 && r.f1 >= 0.95,
            format!(
                "{name}: EM {:.3}, F1 {:.3} on {} questions",
                r.em, r.f1, r.questions
            ),
        )?;
        notes.push(format!(
            "{name} EM {:.3} F1 {:.3} ({} held out)",
            r.em, r.f1, r.questions
        ));
    }
    within(start, Duration::from_secs(300))?;
    Ok(notes.join("; "))
}

fn reachability() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cfg = EnumConfig::default();
    let mut non_empty = 0;
    for trial in 0..500 {
        let (kb, entities) = loop {
            let kb = random_kb(&mut rng, 50);
            let entities: Vec<String> = kb.entities().into_iter().map(String::from).collect();
            if !entities.is_empty() {
                break (kb, entities);
            }
        };
        let linked: Vec<String> = (0..rng.gen_range(1..=2))
            .map(|_| entities[rng.gen_range(0..entities.len())].clone())
            .collect();
        let q = Question::new("q", "", Modality::Kb);
        let enumeration = enumerate_kb_primitives(&q, &kb, &linked, &cfg);
        let first: Vec<ScoredPrimitive> = enumeration
            .first_hop
            .iter()
            .filter(|_| rng.gen_bool(0.5))
            .map(|p| ScoredPrimitive {
                primitive: p.clone(),
                score: 0.0,
            })
            .collect();
        let relations: BTreeSet<String> = kb.relations().map(String::from).collect();
        let second: Vec<ScoredPrimitive> = relations
            .iter()
            .flat_map(|r| [Direction::In, Direction::Out].map(|d| (r.clone(), d)))
            .map(|(r, d)| ScoredPrimitive {
                primitive: primparse::datamodel::Primitive::second_hop(&r, d),
                score: 0.0,
            })
            .collect();
        let kept: BTreeSet<(String, Direction)> = filter_reachable(&first, &second, &kb, false)
            .into_iter()
            .filter_map(|s| match s.primitive.payload() {
                Payload::SecondHop {
                    relation,
                    direction,
                } => Some((relation.clone(), *direction)),
                _ => None,
            })
            .collect();
        let firsts: Vec<_> = first.iter().map(|s| s.primitive.clone()).collect();
        let oracle = reachable_second_hops(&firsts, &kb, false);
        ensure(
            kept == oracle,
            format!("trial {trial}: {kept:?} vs {oracle:?}"),
        )?;
        non_empty += usize::from(!oracle.is_empty());
    }
    ensure(
        non_empty >= 100,
        format!("only {non_empty} trials had reachable hops"),
    )?;
    Ok(format!(
        "500 of 500 trials match ({non_empty} with reachable second hops)"
    ))
}

fn shuffle_robustness() -> Result<String, String> {
    let (mut base, mut reversed, mut n) = (0.0, 0.0, 0usize);
    for (name, modality) in [("toy_kb", Modality::Kb), ("toy_db", Modality::Db)] {
        let (_dir, mut cfg) = trained(name, modality, 7)?;
        ensure(cfg.composer.shuffle, "shuffle augmentation is off")?;
        let corpus = toy::bundled(name).map_err(e)?;
        let (m, s) = models(&cfg)?;
        for order in [PrimitiveOrder::Ranker, PrimitiveOrder::Reversed] {
            cfg.order = order;
            let preds =
                predict_all(&corpus.questions, corpus.store.view(), &m, &s, &cfg).map_err(e)?;
            let r = evaluate(&preds, &corpus.questions, Some(corpus.store.view())).map_err(e)?;
            let hits = r.em * r.questions as f64;
            match order {
                PrimitiveOrder::Ranker => {
                    base += hits;
                    n += r.questions;
                }
                _ => reversed += hits,
            }
        }
    }
    let (em, em_rev) = (base / n as f64, reversed / n as f64);
    let drop = if em > 0.0 { (em - em_rev) / em } else { 0.0 };
    ensure(
        em > 0.0 && drop < 0.05,
        format!("EM {em:.3} ranker order vs {em_rev:.3} reversed"),
    )?;
    Ok(format!(
        "EM {em:.3} ranker order vs {em_rev:.3} reversed over {n} questions ({:.1}% relative drop)",
        drop * 100.0
    ))
}

fn read(path: &Path) -> Result<Vec<u8>, String> {
    std::fs::read(path).map_err(|err| format!("{}: {err}", path.display()))
}

fn determinism() -> Result<String, String> {
    for (name, modality) in [("toy_kb", Modality::Kb), ("toy_db", Modality::Db)] {
        let mut outputs = Vec::new();
        for _ in 0..2 {
            let (dir, cfg) = trained(name, modality, 11)?;
            cmd_infer(&cfg).map_err(e)?;
            let files = [
                "models/ranker.json",
                "models/composer.json",
                "predictions.jsonl",
            ];
            outputs.push(
                files
                    .iter()
                    .map(|f| read(&dir.path().join(f)))
                    .collect::<Result<Vec<_>, _>>()?,
            );
        }
        ensure(outputs[0] == outputs[1], format!("{name}: runs differ"))?;
    }
    Ok("toy_kb and toy_db models and predictions byte-identical across two runs".into())
}

fn main() {
    let checks: [(&str, Check); 10] = [
        ("search-space reduction", search_space_reduction),
        ("executor correctness", executor_correctness),
        ("round-trip grammars", round_trips),
        ("contrastive loss", contrastive_loss_checks),
        ("hard negatives and conditioning", hard_negatives_help),
        ("end-to-end totality", totality),
        ("toy accuracy", toy_accuracy),
        ("reachability filtering", reachability),
        ("order robustness", shuffle_robustness),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({secs:.1}s) {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({secs:.1}s) {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
