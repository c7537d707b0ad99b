use std::io::Write;
use std::path::PathBuf;

use lrcomb::data::{
    complete_matrix, load_movielens, load_rc, write_movielens, write_rc, CompletionOptions,
    SparseRatings,
};
use lrcomb::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn temp_file(contents: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(contents.as_bytes()).unwrap();
    f
}

#[test]
fn movielens_fixture() {
    let r = load_movielens(fixture("u.data")).unwrap();
    r.validate().unwrap();
    // One repeated pair collapses to its latest rating.
    assert_eq!(r.len(), 11);
    assert_eq!(r.triples[0], (195, 241, 5.0));
    assert_eq!(r.triples[1], (185, 301, 3.0));
    assert_eq!((r.n_users, r.n_items), (305, 474));
    assert_eq!(r.rating_range, (1.0, 5.0));
}

#[test]
fn movielens_first_line() {
    let f = temp_file("196\t242\t3\t881250949\n");
    let r = load_movielens(f.path()).unwrap();
    assert_eq!(r.triples, vec![(195, 241, 3.0)]);
}

#[test]
fn movielens_keeps_latest_timestamp() {
    let f = temp_file("1\t1\t4\t20\n1\t1\t2\t10\n");
    assert_eq!(load_movielens(f.path()).unwrap().triples, vec![(0, 0, 4.0)]);
}

#[test]
fn movielens_errors_carry_line_numbers() {
    for (text, bad_line) in [
        ("1\t1\t4\t20\n1\t2\t4\n", 2),
        ("1\t1\t4\t20\n1\tx\t4\t5\n", 2),
        ("1\t1\t6\t20\n", 1),
        ("0\t1\t3\t20\n", 1),
    ] {
        let f = temp_file(text);
        match load_movielens(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, bad_line, "{text:?}"),
            other => panic!("{text:?}: {other:?}"),
        }
    }
    let empty = temp_file("");
    assert!(matches!(load_movielens(empty.path()), Err(Error::Parse { .. })));
    assert!(matches!(load_movielens("/nonexistent/u.data"), Err(Error::Io { .. })));
}

#[test]
fn rc_fixture() {
    let r = load_rc(fixture("rating_final.csv")).unwrap();
    r.validate().unwrap();
    assert_eq!(r.len(), 10);
    assert_eq!((r.n_users, r.n_items), (6, 5));
    assert_eq!(r.triples[0], (0, 0, 2.0));
    assert_eq!(r.triples[5], (2, 2, 0.0));
    assert_eq!(r.rating_range, (0.0, 2.0));
}

#[test]
fn rc_errors() {
    let header_only = temp_file("userID,placeID,rating\n");
    assert!(matches!(load_rc(header_only.path()), Err(Error::Parse { .. })));
    let missing = temp_file("userID,rating\nU1,2\n");
    assert!(matches!(load_rc(missing.path()), Err(Error::Parse { .. })));
    let bad = temp_file("userID,placeID,rating\nU1,7,1\nU1,8,3\n");
    match load_rc(bad.path()) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn loaders_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ml = load_movielens(fixture("u.data")).unwrap();
    let p = dir.path().join("u.data");
    write_movielens(&p, &ml).unwrap();
    assert_eq!(load_movielens(&p).unwrap(), ml);

    let rc = load_rc(fixture("rating_final.csv")).unwrap();
    let p = dir.path().join("rating_final.csv");
    write_rc(&p, &rc).unwrap();
    assert_eq!(load_rc(&p).unwrap(), rc);
}

fn dense(n: usize, m: usize, f: impl Fn(usize, usize) -> f64, hi: f64) -> SparseRatings {
    SparseRatings {
        triples: (0..n).flat_map(|u| (0..m).map(move |i| (u, i))).map(|(u, i)| (u, i, f(u, i))).collect(),
        n_users: n,
        n_items: m,
        rating_range: (0.0, hi),
    }
}

#[test]
fn completion_recovers_rank_one() {
    let truth = |u: usize, i: usize| (1.0 + 0.3 * u as f64) * (0.5 + 0.2 * i as f64);
    let r = dense(6, 5, truth, 10.0);
    let opts = CompletionOptions {
        rank: 1,
        reg: 1e-6,
        sweeps: 500,
        rel_tol: 1e-15,
    };
    let c = complete_matrix(&r, &opts, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    for u in 0..6 {
        for i in 0..5 {
            assert!((c.theta.get(u, i) - truth(u, i)).abs() < 1e-3);
        }
    }
}

#[test]
fn full_rank_completion_reproduces_matrix() {
    let truth = |u: usize, i: usize| ((u * 7 + i * 3) % 5) as f64 * 0.4 + 0.1 * u as f64;
    let r = dense(4, 3, truth, 5.0);
    let opts = CompletionOptions {
        rank: 3,
        reg: 1e-12,
        sweeps: 5000,
        rel_tol: 0.0,
    };
    let c = complete_matrix(&r, &opts, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    for &(u, i, v) in &r.triples {
        assert!((c.theta.get(u, i) - v).abs() < 1e-6, "({u}, {i})");
    }
}

#[test]
fn completion_is_clipped_monotone_and_deterministic() {
    let r = load_rc(fixture("rating_final.csv")).unwrap();
    let opts = CompletionOptions {
        rank: 2,
        reg: 0.1,
        sweeps: 40,
        rel_tol: 0.0,
    };
    let a = complete_matrix(&r, &opts, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let b = complete_matrix(&r, &opts, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    assert_eq!(a.theta, b.theta);
    assert!(a.theta.as_slice().iter().all(|&v| (0.0..=2.0).contains(&v)));
    for w in a.objective.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12));
    }
    let ml = load_movielens(fixture("u.data")).unwrap();
    let c = complete_matrix(&ml, &CompletionOptions { rank: 2, ..opts }, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    assert!(c.theta.as_slice().iter().all(|&v| (1.0..=5.0).contains(&v)));
}

#[test]
fn completion_rmse_is_nonincreasing_for_small_reg() {
    let r = load_rc(fixture("rating_final.csv")).unwrap();
    let opts = CompletionOptions {
        rank: 2,
        reg: 1e-4,
        sweeps: 30,
        rel_tol: 0.0,
    };
    let c = complete_matrix(&r, &opts, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    for w in c.rmse.windows(2) {
        assert!(w[1] <= w[0] + 1e-6, "{:?}", c.rmse);
    }
}

#[test]
fn completion_errors() {
    let r = dense(3, 2, |_, _| 1.0, 2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let too_big = CompletionOptions { rank: 3, ..CompletionOptions::default() };
    assert!(complete_matrix(&r, &too_big, &mut rng).is_err());
    let empty = SparseRatings { triples: vec![], ..r };
    let ok = CompletionOptions { rank: 1, ..CompletionOptions::default() };
    assert!(complete_matrix(&empty, &ok, &mut rng).is_err());
}
