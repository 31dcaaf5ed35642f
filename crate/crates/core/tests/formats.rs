use khe_core::mesh::GridField;
use khe_core::Error;

fn sample() -> GridField {
    GridField::new(2, 2)
        .with_component("rho", vec![1.0, 2.0, 3.0, 4.0])
        .unwrap()
        .with_component("S", vec![-0.5, 0.25, 0.0, 1e-300])
        .unwrap()
}

fn expected_bytes() -> Vec<u8> {
    let mut b = b"KHE1".to_vec();
    for v in [2u32, 2, 2, 3] {
        b.extend_from_slice(&v.to_le_bytes());
    }
    b.extend_from_slice(b"rho");
    b.extend_from_slice(&1u32.to_le_bytes());
    b.extend_from_slice(b"S");
    for v in [1.0f64, 2.0, 3.0, 4.0, -0.5, 0.25, 0.0, 1e-300] {
        b.extend_from_slice(&v.to_le_bytes());
    }
    b
}

#[test]
fn binary_layout_matches_hand_encoding() {
    let mut out = Vec::new();
    sample().write_binary(&mut out).unwrap();
    assert_eq!(out, expected_bytes());
}

#[test]
fn binary_round_trip_is_bitwise() {
    let back = GridField::read_binary(expected_bytes().as_slice()).unwrap();
    assert_eq!(back, sample());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.khe");
    sample().save(&path).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), expected_bytes());
    assert_eq!(GridField::load(&path).unwrap(), sample());
}

#[test]
fn corrupt_binaries_are_rejected() {
    let mut bad = expected_bytes();
    bad[3] = b'2';
    assert!(matches!(
        GridField::read_binary(bad.as_slice()),
        Err(Error::Format(_))
    ));
    let short = &expected_bytes()[..40];
    assert!(GridField::read_binary(short).is_err());
}

#[test]
fn csv_export_lists_every_node_row_major() {
    let mut out = Vec::new();
    sample().write_csv("rho", &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,y,rho");
    assert_eq!(lines.len(), 5);
    let rows: Vec<Vec<f64>> = lines[1..]
        .iter()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows[0], vec![0.0, 0.0, 1.0]);
    assert_eq!(rows[1], vec![0.5, 0.0, 2.0]);
    assert_eq!(rows[2], vec![0.0, 0.5, 3.0]);
    assert_eq!(rows[3], vec![0.5, 0.5, 4.0]);
    assert!(sample().write_csv("missing", Vec::new()).is_err());
}
