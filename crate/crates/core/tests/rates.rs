use proptest::prelude::*;
use tdlob_core::{CumulativeClock, RateForm, RateSpec};

fn clock(form: RateForm) -> CumulativeClock {
    CumulativeClock::from_spec(RateSpec::new(form, 0.9, 1.1).unwrap()).unwrap()
}

fn forms() -> impl Strategy<Value = RateForm> {
    prop_oneof![
        (0.1f64..5.0).prop_map(|c| RateForm::Constant { c }),
        (0.1f64..3.0, -0.95f64..2.0).prop_map(|(k, s)| RateForm::Power { k, s }),
        (0.1f64..3.0, -3.0f64..-1.05).prop_map(|(k, s)| RateForm::Power { k, s }),
        (0.1f64..3.0, -0.9f64..1.0, 0u32..4).prop_map(|(k, s, m)| RateForm::PowerLog { k, s, m: m as f64 }),
        (0.1f64..3.0, 0.0f64..5.0).prop_map(|(k, t0)| RateForm::Reciprocal { k, t0 }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn inverse_undoes_cumulative(form in forms(), offset in 0.0f64..500.0) {
        let c = clock(form);
        let t = c.origin + offset;
        let a = c.cumulative(t).unwrap();
        let back = c.inverse(a).unwrap();
        prop_assert!((back - t).abs() <= 1e-8 * t.max(1.0), "t={t} a={a} back={back}");
    }

    #[test]
    fn cumulative_is_monotone(form in forms(), u in 0.0f64..100.0, gap in 1e-3f64..100.0) {
        let c = clock(form);
        let lo = c.cumulative(c.origin + u).unwrap();
        let hi = c.cumulative(c.origin + u + gap).unwrap();
        prop_assert!(hi > lo);
    }

    #[test]
    fn grammar_round_trip(form in forms()) {
        let text = form.to_string();
        let parsed: RateForm = text.parse().unwrap();
        prop_assert_eq!(parsed.to_string(), text);
    }
}

#[test]
fn quadrature_matches_closed_forms() {
    let cases = [
        RateForm::Constant { c: 2.5 },
        RateForm::Power { k: 0.1703, s: -0.456 },
        RateForm::Power { k: 1.0, s: 0.7 },
        RateForm::Power { k: 0.4664, s: -1.0045 },
        RateForm::PowerLog { k: 1.0, s: -0.5, m: 2.0 },
        RateForm::PowerLog { k: 0.5, s: 0.3, m: 1.0 },
        RateForm::Reciprocal { k: 0.4, t0: 1.0 },
    ];
    for form in cases {
        let c = clock(form.clone());
        for u in [0.5, 3.0, 40.0, 900.0] {
            let t = c.origin + u;
            let exact = c.cumulative(t).unwrap();
            let numeric = c.quadrature_cumulative(t).unwrap();
            assert!((exact - numeric).abs() <= 1e-9 * exact.max(1.0), "{form} at {t}: {exact} vs {numeric}");
        }
    }
}

#[test]
fn clock_json_round_trip_validates() {
    let c = clock(RateForm::Reciprocal { k: 0.4, t0: 2.0 });
    let text = serde_json::to_string(&c).unwrap();
    assert_eq!(serde_json::from_str::<CumulativeClock>(&text).unwrap(), c);
    let missing_origin = r#"{"spec":{"form":"power","params":{"k":1,"s":-1.5},"lambda":1,"mu":1}}"#;
    assert_eq!(serde_json::from_str::<CumulativeClock>(missing_origin).unwrap().origin, 1.0);
    let bad = r#"{"spec":{"form":"reciprocal","params":{"k":1,"t0":2},"lambda":1,"mu":1},"origin":1}"#;
    assert!(serde_json::from_str::<CumulativeClock>(bad).is_err());
}
