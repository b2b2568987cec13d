use std::io::Write;

use frmpc_core::error::MarketError;
use frmpc_core::market::{read_fr_signal, read_prices, synth_fr};
use frmpc_core::MarketData;
use proptest::prelude::*;

fn fr_csv(rows: &[(usize, usize, f64)]) -> String {
    let mut s = String::from("hour,step,alpha\n");
    for (h, k, a) in rows {
        s.push_str(&format!("{h},{k},{a}\n"));
    }
    s
}

#[test]
fn zero_hour_parses() {
    let rows: Vec<_> = (1..=4).map(|k| (1, k, 0.0)).collect();
    let a = read_fr_signal(fr_csv(&rows).as_bytes()).unwrap();
    assert_eq!(a, vec![vec![0.0; 4]]);
}

#[test]
fn out_of_range_alpha_is_rejected() {
    let rows = [(1, 1, 0.0), (1, 2, 1.5)];
    match read_fr_signal(fr_csv(&rows).as_bytes()) {
        Err(MarketError::Range { hour: 1, step: 2, value }) => assert_eq!(value, 1.5),
        other => panic!("{other:?}"),
    }
}

#[test]
fn missing_step_names_hour_and_step() {
    let mut rows: Vec<_> = (1..=3).flat_map(|h| (1..=4).map(move |k| (h, k, 0.1))).collect();
    rows.retain(|&(h, k, _)| !(h == 2 && k == 3));
    match read_fr_signal(fr_csv(&rows).as_bytes()) {
        Err(MarketError::Gap { hour: 2, step: 3 }) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn price_file_checks() {
    let mut ok = String::from("hour,fr_price,energy_price\n");
    for h in 1..=24 {
        ok.push_str(&format!("{h},{},{}\n", 20 + h, -5.0 + h as f64));
    }
    let (f, e) = read_prices(ok.as_bytes()).unwrap();
    assert_eq!((f.len(), e.len()), (24, 24));
    assert_eq!(e[0], -4.0);

    let neg = "hour,fr_price,energy_price\n1,-1,30\n";
    assert!(matches!(read_prices(neg.as_bytes()), Err(MarketError::NegativeFrPrice { hour: 1, .. })));
    let dup = "hour,fr_price,energy_price\n1,10,30\n1,11,30\n";
    assert!(matches!(read_prices(dup.as_bytes()), Err(MarketError::Alignment(_))));
    let bad = "hour,fr_price,energy_price\n1,ten,30\n";
    assert!(matches!(read_prices(bad.as_bytes()), Err(MarketError::Parse { .. })));
}

#[test]
fn mismatched_lengths_are_rejected() {
    let r = MarketData::new(vec![vec![0.0; 4]; 3], vec![1.0; 2], vec![1.0; 3]);
    assert!(matches!(r, Err(MarketError::Alignment(_))));
}

#[test]
fn csv_round_trip_is_exact() {
    let m = MarketData::synthetic(11, 5, 30);
    let dir = tempfile::tempdir().unwrap();
    let (fr, pr) = (dir.path().join("fr.csv"), dir.path().join("prices.csv"));
    m.write_csv(&fr, &pr).unwrap();
    assert_eq!(MarketData::load(&fr, &pr).unwrap(), m);
}

#[test]
fn missing_file_reports_path() {
    let dir = tempfile::tempdir().unwrap();
    let mut f = std::fs::File::create(dir.path().join("p.csv")).unwrap();
    writeln!(f, "hour,fr_price,energy_price\n1,1,1").unwrap();
    let err = MarketData::load(dir.path().join("nope.csv"), dir.path().join("p.csv")).unwrap_err();
    assert!(matches!(err, MarketError::Io { .. }));
    assert!(err.to_string().contains("nope.csv"));
}

#[test]
fn windows_wrap_around() {
    let m = MarketData::synthetic(3, 6, 10);
    let w = m.window(0, 1);
    assert_eq!(w.alpha, vec![m.alpha_at(0)]);
    let w = m.window(5, 2);
    assert_eq!(w.alpha, vec![m.alpha_at(5), m.alpha_at(0)]);
    assert_eq!(w.fr_price, vec![m.fr_price_at(5), m.fr_price_at(0)]);
}

#[test]
fn synthetic_signal_is_balanced_and_reproducible() {
    let a = synth_fr(2024, 1000, 1800);
    assert_eq!(a, synth_fr(2024, 1000, 1800));
    assert!(a.iter().flatten().all(|v| (-1.0..=1.0).contains(v)));
    let balanced = a
        .iter()
        .filter(|h| (h.iter().sum::<f64>() / h.len() as f64).abs() <= 0.2)
        .count();
    assert!(balanced >= 950, "{balanced} of 1000 hours balanced");
    // the generator exercises both smooth and saturated regimes
    assert!(a.iter().flatten().any(|v| v.abs() > 0.9));
}

proptest! {
    #[test]
    fn window_is_concatenation_of_single_hours(t in 0usize..40, n in 1usize..30) {
        let m = MarketData::synthetic(5, 9, 6);
        let w = m.window(t, n);
        prop_assert_eq!(w.len(), n);
        for k in 0..n {
            let one = m.window(t + k, 1);
            prop_assert_eq!(w.alpha[k], one.alpha[0]);
            prop_assert_eq!(w.fr_price[k], one.fr_price[0]);
            prop_assert_eq!(w.energy_price[k], one.energy_price[0]);
        }
    }
}
