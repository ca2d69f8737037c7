mod common;

use chrono::NaiveDate;
use common::*;
use curveflat::cli::read_golden_table;
use curveflat::forecast::{
    calibrate_to_table, forecast_eq13, forecast_geometric, upper_bound, Anchor, ForecastParams, ForecastRow,
    GeometricParams,
};
use curveflat::format::round_half_up;
use curveflat::logistic::fit_logistic_growth;
use curveflat::series::parse_csv;
use curveflat::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn golden() -> Vec<ForecastRow> {
    read_golden_table(&golden_table_text()).unwrap()
}

fn anchor65() -> Anchor {
    Anchor::new(65, NaiveDate::from_ymd_opt(2020, 4, 30))
}

#[test]
fn golden_fixture_shape() {
    let t = golden();
    assert_eq!(t.len(), 62);
    assert_eq!((t[0].day_id, t[0].value), (66, 2602.0));
    assert_eq!((t[61].day_id, t[61].value), (127, 3435.0));
    assert_eq!(t[61].date, NaiveDate::from_ymd_opt(2020, 7, 1));
}

/// Endpoint bisection: first increment 12, factor chosen so that 61 steps
/// from 2602 land on 3435.
#[test]
fn endpoint_bisection_replays_golden_table() {
    let t = golden();
    let end_after = |f: f64| {
        let mut cum = 2602.0;
        let mut inc = 12.0 / f;
        for _ in 0..61 {
            inc *= f;
            cum += inc;
        }
        cum
    };
    let (mut lo, mut hi) = (1.0, 1.02);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if end_after(mid) < 3435.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let f = 0.5 * (lo + hi);
    assert!((1.003..=1.006).contains(&f), "factor {f}");
    let params = GeometricParams {
        start: 2602.0,
        last_increment: 12.0 / f,
        daily_factor: f,
    };
    let table = forecast_geometric(params, 61, Anchor::new(66, NaiveDate::from_ymd_opt(2020, 5, 1))).unwrap();
    for (row, gold) in table.rows.iter().zip(&t[1..]) {
        assert_eq!(row.day_id, gold.day_id);
        let served = round_half_up(row.value) as f64;
        assert!((served - gold.value).abs() <= 2.0, "day {}: {} vs {}", row.day_id, row.value, gold.value);
    }
}

#[test]
fn calibrated_golden_table_within_two_cases() {
    let t = golden();
    let cal = calibrate_to_table(&t).unwrap();
    assert!((1.003..=1.006).contains(&cal.params.daily_factor));
    assert_eq!(cal.anchor, anchor65());
    let table = forecast_geometric(cal.params, 62, cal.anchor).unwrap();
    let worst = table
        .rows
        .iter()
        .zip(&t)
        .map(|(r, g)| {
            assert_eq!((r.day_id, r.date), (g.day_id, g.date));
            (round_half_up(r.value) as f64 - g.value).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst <= 2.0, "{worst}");
}

#[test]
fn calibration_rejects_flat_rows() {
    let rows: Vec<ForecastRow> = (0..3)
        .map(|i| ForecastRow {
            day_id: 10 + i,
            date: None,
            value: if i == 2 { 7.0 } else { 5.0 },
        })
        .collect();
    assert!(calibrate_to_table(&rows).is_err());
}

#[test]
fn geometric_examples() {
    let t = forecast_geometric(
        GeometricParams {
            start: 2602.0,
            last_increment: 12.0,
            daily_factor: 1.0,
        },
        2,
        Anchor::new(66, None),
    )
    .unwrap();
    assert_eq!(t.values(), vec![2614.0, 2626.0]);
    let flat = forecast_geometric(
        GeometricParams {
            start: 50.0,
            last_increment: 0.0,
            daily_factor: 1.3,
        },
        5,
        Anchor::new(0, None),
    )
    .unwrap();
    assert!(flat.values().iter().all(|&v| v == 50.0));
}

#[test]
fn recursive_hand_trace_and_divergence() {
    let t = forecast_eq13(100.0, 1.0, 1.0, 0.5, 1, Anchor::new(0, None)).unwrap();
    assert_eq!(t.rows[0].value, 25.0);
    let ForecastParams::Eq13 { steps, .. } = &t.params else {
        panic!("wrong params")
    };
    assert_eq!((steps[0].u, steps[0].g, steps[0].h), (0.5, 50.0, 75.0));

    let m_bar = 1.049521;
    let t = forecast_eq13(2602.0, m_bar, m_bar, m_bar / 2.0, 61, Anchor::new(66, None)).unwrap();
    let last = t.rows.last().unwrap();
    assert_eq!(last.day_id, 127);
    assert!((last.value - 3435.0).abs() / 3435.0 > 0.5, "{}", last.value);
    let again = forecast_eq13(2602.0, m_bar, m_bar, m_bar / 2.0, 61, Anchor::new(66, None)).unwrap();
    assert_eq!(t, again);
}

#[test]
fn upper_bound_replays() {
    let with = upper_bound(3435.0, 1.049521, Some(3932.0)).unwrap();
    assert_eq!(with.to_json()["u_pb"], 3683);
    let without = upper_bound(3435.0, 1.049521, None).unwrap();
    assert!((without.u_pb - 3520.1).abs() < 0.1);
    assert!((3605.0..=3606.0).contains(&without.u_pb2));
    assert!((without.u_pb - 3435.0 * (1.0 + 1.049521) / 2.0).abs() <= 1e-12);
    assert_eq!(upper_bound(1000.0, 1.0, None).unwrap().u_pb, 1000.0);
}

fn synthetic(u: f64, b0: f64, b1: f64, n: usize) -> Vec<(f64, f64)> {
    (1..=n).map(|t| (t as f64, u / (1.0 + u * b0 * b1.powi(t as i32)))).collect()
}

#[test]
fn logistic_scale_consistency() {
    let pts = synthetic(2000.0, 0.05, 0.93, 40);
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let noise = Normal::new(0.0, 0.02).unwrap();
    let noisy: Vec<(f64, f64)> = pts
        .iter()
        .map(|&(t, y)| (t, (y * (1.0 + noise.sample(&mut rng))).min(1999.0)))
        .collect();
    let base = fit_logistic_growth(&noisy, 2000.0, 1).unwrap();
    for c in [0.01, 3.0, 250.0] {
        let scaled: Vec<(f64, f64)> = noisy.iter().map(|&(t, y)| (t, y * c)).collect();
        let m = fit_logistic_growth(&scaled, 2000.0 * c, 1).unwrap();
        assert!((m.b0 - base.b0 / c).abs() < 1e-9 * base.b0 / c);
        assert!((m.b1 - base.b1).abs() < 1e-12);
        assert!((m.r_squared - base.r_squared).abs() < 1e-10);
    }
}

/// Gaussian noise on the linearized response; estimates land within three
/// standard errors of the generator in the large majority of draws.
#[test]
fn logistic_noisy_recovery_within_three_se() {
    let (u, b0, b1): (f64, f64, f64) = (5000.0, 0.01, 0.92);
    let noise = Normal::new(0.0, 0.05).unwrap();
    let mut inside = 0;
    let trials = 200;
    for seed in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let pts: Vec<(f64, f64)> = (1..=54)
            .map(|t| {
                let z = b0.ln() + t as f64 * b1.ln() + noise.sample(&mut rng);
                let y = 1.0 / (z.exp() + 1.0 / u);
                (t as f64, y)
            })
            .collect();
        let m = fit_logistic_growth(&pts, u, 1).unwrap();
        let ok0 = (m.b0.ln() - b0.ln()).abs() <= 3.0 * m.ln_b0_se;
        let ok1 = (m.b1.ln() - b1.ln()).abs() <= 3.0 * m.ln_b1_se;
        if ok0 && ok1 {
            inside += 1;
        }
    }
    assert!(inside as f64 >= 0.97 * trials as f64, "{inside}/{trials}");
}

#[test]
fn logistic_noiseless_predictions() {
    let pts = synthetic(1000.0, 0.2, 0.9, 30);
    let m = fit_logistic_growth(&pts, 1000.0, 1).unwrap();
    for &(t, y) in &pts {
        assert!((m.predict(t) - y).abs() < 1e-9 * y);
    }
}

#[test]
fn logistic_rejects_points_at_ceiling() {
    let (series, _) = parse_csv(&fixture_text(), None).unwrap();
    let pts: Vec<(f64, f64)> = series
        .records()
        .iter()
        .enumerate()
        .map(|(i, r)| ((i + 1) as f64, r.all_cases as f64))
        .collect();
    assert!(matches!(fit_logistic_growth(&pts, 3000.0, 1), Err(Error::Domain(_))));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn geometric_round_trip(start in 100.0f64..10_000.0, inc in 1.0f64..200.0, f in 0.9f64..1.15, n in 3usize..80) {
        let p = GeometricParams { start, last_increment: inc, daily_factor: f };
        let table = forecast_geometric(p, n, Anchor::new(1, None)).unwrap();
        let cal = calibrate_to_table(&table.rows).unwrap();
        prop_assert!((cal.params.daily_factor - f).abs() < 1e-6);
        prop_assert!((cal.params.last_increment - inc).abs() < 1e-6 * inc.max(1.0));
        prop_assert!((cal.params.start - start).abs() < 1e-6 * start);
    }

    #[test]
    fn geometric_monotone(start in 0.0f64..1e4, inc in 0.0f64..100.0, f in 1.0001f64..1.2) {
        let t = forecast_geometric(GeometricParams { start, last_increment: inc, daily_factor: f }, 30, Anchor::new(0, None)).unwrap();
        for w in t.values().windows(2) {
            prop_assert!(w[1] >= w[0]);
            if inc > 0.0 {
                prop_assert!(w[1] > w[0]);
            }
        }
    }

    #[test]
    fn upper_bound_is_mean(p1 in 1.0f64..1e6, m in 0.5f64..2.0) {
        let e = upper_bound(p1, m, None).unwrap();
        prop_assert_eq!(e.u_pb, (e.u_pb1 + e.u_pb2) / 2.0);
        prop_assert!((e.u_pb - p1 * (1.0 + m) / 2.0).abs() <= 1e-15 * e.u_pb);
    }
}
