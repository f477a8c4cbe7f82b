use std::collections::BTreeSet;

use primparse::datamodel::{Object, Value};
use primparse::oracle::gen::{
    random_db, random_kb, random_query, random_query_syntax, random_sexpr, random_sexpr_syntax,
};
use primparse::oracle::{brute_execute_sexpr, brute_execute_sql};
use primparse::sexpr::{execute_sexpr, parse_sexpr, print_sexpr, Denotation, SExpr};
use primparse::sqlcore::{execute_sql, parse_sql, print_sql, ResultSet, SetOp, SqlQuery};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sorted_rows(rs: &ResultSet) -> Vec<Vec<Value>> {
    let mut rows = rs.rows.clone();
    rows.sort();
    rows
}

fn ordered(q: &SqlQuery) -> bool {
    q.order_by.is_some() && q.set_op.is_none()
}

#[test]
fn sexpr_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut non_empty = 0;
    for _ in 0..300 {
        let kb = random_kb(&mut rng, 50);
        let ast = random_sexpr(&mut rng, 3);
        let fast = execute_sexpr(&ast, &kb);
        let slow = brute_execute_sexpr(&ast, &kb);
        match (&fast, &slow) {
            (Ok(a), Ok(b)) => {
                assert_eq!(a, b, "{ast}");
                non_empty += usize::from(!a.is_empty());
            }
            (Err(_), Err(_)) => {}
            _ => panic!("error disagreement on {ast}: {fast:?} vs {slow:?}"),
        }
    }
    assert!(non_empty > 30, "generator too sparse: {non_empty}");
}

#[test]
fn sql_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut ok, mut errs) = (0, 0);
    for _ in 0..300 {
        let db = random_db(&mut rng, 3, 20);
        let q = random_query(&mut rng, &db, 0.1);
        match (execute_sql(&q, &db), brute_execute_sql(&q, &db)) {
            (Ok(a), Ok(b)) => {
                assert_eq!(a.columns, b.columns, "{q}");
                if ordered(&q) {
                    assert_eq!(a.rows, b.rows, "{q}");
                } else {
                    assert_eq!(sorted_rows(&a), sorted_rows(&b), "{q}");
                }
                ok += 1;
            }
            (Err(_), Err(_)) => errs += 1,
            (a, b) => panic!("error disagreement on {q}: {a:?} vs {b:?}"),
        }
    }
    assert!(ok > 150 && errs > 5, "ok={ok} errs={errs}");
}

#[test]
fn round_trips_on_syntax_generators() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..500 {
        let e = random_sexpr_syntax(&mut rng, 4);
        let printed = print_sexpr(&e);
        assert_eq!(parse_sexpr(&printed).unwrap(), e, "{printed}");
        let q = random_query_syntax(&mut rng);
        let printed = print_sql(&q);
        let back = parse_sql(&printed).unwrap_or_else(|err| panic!("{printed}: {err}"));
        assert_eq!(back, q, "{printed}");
        assert_eq!(print_sql(&back), printed);
    }
}

fn set_of(d: Denotation) -> BTreeSet<Object> {
    match d {
        Denotation::Set(s) => s,
        Denotation::Count(_) => panic!("unexpected count"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn and_is_commutative_and_idempotent(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kb = random_kb(&mut rng, 40);
        let a = random_sexpr(&mut rng, 2);
        let b = random_sexpr(&mut rng, 2);
        prop_assume!(!matches!(a, SExpr::Count(_)) && !matches!(b, SExpr::Count(_)));
        let ab = execute_sexpr(&SExpr::and(a.clone(), b.clone()), &kb);
        let ba = execute_sexpr(&SExpr::and(b, a.clone()), &kb);
        prop_assert_eq!(ab.is_ok(), ba.is_ok());
        if let (Ok(x), Ok(y)) = (ab, ba) {
            prop_assert_eq!(x, y);
        }
        if let Ok(x) = execute_sexpr(&a, &kb) {
            prop_assert_eq!(execute_sexpr(&SExpr::and(a.clone(), a), &kb).unwrap(), x);
        }
    }

    #[test]
    fn join_distributes_over_union(seed in any::<u64>(), reverse in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kb = random_kb(&mut rng, 40);
        let s: Vec<String> = (0..3).map(|i| format!("e{}", (seed as usize + i) % 10)).collect();
        let t: Vec<String> = (0..2).map(|i| format!("e{}", (seed as usize / 7 + i) % 10)).collect();
        let join_all = |ids: &[String]| -> BTreeSet<Object> {
            let mut out = BTreeSet::new();
            for id in ids {
                let e = if reverse { SExpr::join_rev("r1", SExpr::entity(id)) } else { SExpr::join("r1", SExpr::entity(id)) };
                out.extend(set_of(execute_sexpr(&e, &kb).unwrap()));
            }
            out
        };
        let union: Vec<String> = s.iter().chain(&t).cloned().collect();
        let mut expected = join_all(&s);
        expected.extend(join_all(&t));
        prop_assert_eq!(join_all(&union), expected);
    }

    #[test]
    fn set_operations_obey_algebra(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let db = random_db(&mut rng, 2, 12);
        let mut q = random_query(&mut rng, &db, 0.0);
        q.set_op = None;
        prop_assume!(execute_sql(&q, &db).is_ok());
        let base = execute_sql(&q, &db).unwrap();
        let mut distinct = sorted_rows(&base);
        distinct.dedup();
        for op in [SetOp::Union, SetOp::Intersect, SetOp::Except] {
            let mut twice = q.clone();
            twice.set_op = Some((op, Box::new(q.clone())));
            let rs = execute_sql(&twice, &db).unwrap();
            match op {
                SetOp::Except => prop_assert!(rs.rows.is_empty()),
                _ => prop_assert_eq!(sorted_rows(&rs), distinct.clone()),
            }
        }
    }
}
