use bsum::{
    build_network, train, ActivationKind, Dataset64, InitScheme, LossKind, Matrix64, NetworkSpec, RegularizerSpec,
    TrainConfig, TrainTrace,
};
use bsum_harness::curves::{curve_rows, emit_curves, format_float, parse_curves, Series, CURVE_HEADER};
use bsum_harness::HarnessError;

fn trace(seed: u64) -> TrainTrace {
    let spec = NetworkSpec::uniform(&[2, 3, 1], ActivationKind::Tanh, RegularizerSpec::l2(1e-3));
    let net = build_network(spec, InitScheme::default(), seed).unwrap();
    let x = Matrix64::from_fn(2, 6, |r, c| (r as f64 - c as f64) / 5.0);
    let y = Matrix64::from_fn(1, 6, |_, c| (c as f64 / 3.0).sin());
    let data = Dataset64::new(x, y).unwrap();
    let cfg = TrainConfig {
        max_outer_iterations: 12,
        grad_norm_tol: 0.0,
        ..TrainConfig::default()
    };
    train(net, &data, LossKind::L2, &cfg).unwrap().trace
}

#[test]
fn header_only_when_empty() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.csv");
    emit_curves(&[], &p).unwrap();
    assert_eq!(
        std::fs::read_to_string(&p).unwrap(),
        format!("{}\n", CURVE_HEADER.join(","))
    );
    assert!(parse_curves(&p).unwrap().is_empty());
}

#[test]
fn round_trip_is_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.csv");
    let t = trace(1);
    let series = [Series {
        method: "m",
        seed: 1,
        trace: &t,
    }];
    emit_curves(&series, &p).unwrap();
    let back = parse_curves(&p).unwrap();
    assert_eq!(back, curve_rows(&series));
    assert_eq!(back.len(), t.all().count());
    for (row, rec) in back.iter().zip(t.all()) {
        assert_eq!(row.f.to_bits(), rec.f.to_bits());
        assert_eq!(row.grad_norm.to_bits(), rec.grad_norm.to_bits());
        assert_eq!(row.alpha.to_bits(), rec.alpha.to_bits());
    }
    let text = std::fs::read_to_string(&p).unwrap();
    assert!(text.lines().next().unwrap() == "method,seed,k,f,normalized_mse,grad_norm,alpha,wall_seconds");
    assert!(!text.contains('\r'));
}

#[test]
fn seventeen_significant_digits() {
    for v in [0.1, 1.0 / 3.0, 1e-300, 6.02e23, -2.5, 0.0] {
        let s = format_float(v);
        let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
        assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{s}");
        assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
    }
}

#[test]
fn rows_sort_by_method_seed_and_k() {
    let (a, b) = (trace(2), trace(1));
    let rows = curve_rows(&[
        Series {
            method: "z",
            seed: 1,
            trace: &b,
        },
        Series {
            method: "a",
            seed: 2,
            trace: &a,
        },
        Series {
            method: "a",
            seed: 1,
            trace: &b,
        },
    ]);
    let keys: Vec<(&str, u64, usize)> = rows.iter().map(|r| (r.method.as_str(), r.seed, r.k)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert_eq!(keys[0], ("a", 1, 0));
}

#[test]
fn wrong_header_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.csv");
    std::fs::write(&p, "method,seed,k,f\nm,1,0,1.0\n").unwrap();
    assert!(matches!(parse_curves(&p), Err(HarnessError::Curve { .. })));
}
