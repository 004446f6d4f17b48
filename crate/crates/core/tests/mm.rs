mod common;

use std::io::{BufReader, Cursor, Write};

use common::{dominant_spd, rng};
use proptest::prelude::*;
use sparse_aib::mm::{
    parse_matrix_market, parse_matrix_market_with_header, read_history_csv, read_matrix_market,
    write_history_csv, write_matrix_market, Field,
};
use sparse_aib::{Error, SymSparseMatrix};

fn parse(text: &str) -> sparse_aib::Result<SymSparseMatrix> {
    parse_matrix_market(Cursor::new(text))
}

fn round_trip(a: &SymSparseMatrix) -> SymSparseMatrix {
    let mut buf = Vec::new();
    write_matrix_market(a, &mut buf).unwrap();
    parse_matrix_market(Cursor::new(buf)).unwrap()
}

#[test]
fn minimal_file() {
    let a = parse("%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 4\n2 1 2\n2 2 3\n").unwrap();
    assert_eq!(a.to_dense().row(0), &[4.0, 2.0]);
    assert_eq!(a.to_dense().row(1), &[2.0, 3.0]);
    assert_eq!(a.nnz_lower(), 3);
}

#[test]
fn crlf_comments_and_integer_field() {
    let text = "%%MatrixMarket matrix coordinate integer symmetric\r\n% generated\r\n\r\n3 3 4\r\n1 1 2\r\n2 2 2\r\n3 3   2\r\n3 1 -1\r\n";
    let (header, a) = parse_matrix_market_with_header(Cursor::new(text)).unwrap();
    assert_eq!(header.field, Field::Integer);
    assert_eq!((header.rows, header.entries), (3, 4));
    assert_eq!(a.get(0, 2), Some(-1.0));
    assert_eq!(a.get(2, 0), Some(-1.0));
}

#[test]
fn explicit_zeros_are_kept() {
    let a = parse("%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 1\n2 1 0\n2 2 1\n").unwrap();
    assert_eq!(a.nnz_lower(), 3);
    assert_eq!(a.get(1, 0), Some(0.0));
}

#[test]
fn rejections() {
    let cases = [
        ("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n3 1 1\n", "index out of range"),
        ("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 1 abc\n", "non-numeric value"),
        ("%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1\n", "declared 2 entries, found 1"),
        ("%%MatrixMarket matrix coordinate real symmetric\n2 3 1\n1 1 1\n", "not square"),
        ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 1\n", "general"),
        ("%%MatrixMarket matrix coordinate pattern symmetric\n2 2 1\n1 1\n", "pattern"),
        ("%%MatrixMarket matrix array real symmetric\n2 2\n1\n", "array"),
        ("not a header\n", "MatrixMarket"),
    ];
    for (text, needle) in cases {
        let msg = parse(text).unwrap_err().to_string();
        assert!(msg.contains(needle), "{msg:?} should mention {needle:?}");
    }
}

#[test]
fn nonpositive_diagonal_is_rejected() {
    let err = parse("%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1\n2 2 -3\n").unwrap_err();
    assert!(matches!(err, Error::NonPositiveDiagonal { index: 1, .. }));
}

#[test]
fn missing_file_names_the_path() {
    let err = read_matrix_market("/definitely/not/here.mtx").unwrap_err();
    assert!(matches!(err, Error::MissingFile(_)));
    assert!(err.to_string().contains("/definitely/not/here.mtx"));
}

#[test]
fn file_round_trip() {
    let a = dominant_spd(&mut rng(41), 80, 5, 0.1);
    let mut file = tempfile::NamedTempFile::new().unwrap();
    write_matrix_market(&a, &mut file).unwrap();
    file.flush().unwrap();
    assert_eq!(read_matrix_market(file.path()).unwrap(), a);
}

#[test]
fn history_examples() {
    let mut out = Vec::new();
    write_history_csv(&[(0, 1.0)], &mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap(), "iter,relres\n0,1.0000000000e0\n");

    let mut out = Vec::new();
    write_history_csv(&[(0, 1.0), (1, 0.5)], &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows, ["iter,relres", "0,1.0000000000e0", "1,5.0000000000e-1"]);

    assert!(write_history_csv(&[], &mut Vec::new()).is_err());
    assert!(write_history_csv(&[(1, 1.0), (1, 0.5)], &mut Vec::new()).is_err());
}

proptest! {
    #[test]
    fn matrix_write_parse_is_idempotent(seed in any::<u64>(), n in 1usize..40, per_row in 0usize..6) {
        let a = dominant_spd(&mut rng(seed), n, per_row, 0.5);
        let once = round_trip(&a);
        prop_assert_eq!(&once, &a);
        prop_assert_eq!(round_trip(&once), once);
    }

    #[test]
    fn history_round_trip(values in prop::collection::vec(1e-300f64..1e3, 1..50)) {
        let history: Vec<(usize, f64)> = values.iter().enumerate().map(|(i, &v)| (3 * i, v)).collect();
        let mut out = Vec::new();
        write_history_csv(&history, &mut out).unwrap();
        let back = read_history_csv(BufReader::new(Cursor::new(out))).unwrap();
        prop_assert_eq!(back.len(), history.len());
        for (p, q) in back.iter().zip(&history) {
            prop_assert_eq!(p.0, q.0);
            prop_assert!((p.1 - q.1).abs() <= 1e-15 * q.1);
        }
    }
}
