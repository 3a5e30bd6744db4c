use catest::config::{Config, Mode};
use catest::report::{emit_report, parse_report, Cell, Kind, Schema};
use catest::syntax::{parse_prob, parse_rational, render_prob};
use catest_core::{Arith, Prob};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

fn schema() -> Schema {
    Schema::new(&[
        ("name", Kind::Text),
        ("count", Kind::Int),
        ("rate", Kind::Float),
        ("p", Kind::Prob),
        ("ok", Kind::Bool),
    ])
}

fn cell_row() -> impl Strategy<Value = Vec<Cell>> {
    (
        "[a-z ,\"]{0,12}",
        any::<i64>(),
        -1e9f64..1e9,
        (0u64..1000, 1u64..1000),
        any::<bool>(),
    )
        .prop_map(|(name, count, rate, (n, d), ok)| {
            let p = Prob::from_ratio(n.min(d), d, Arith::Exact);
            vec![
                Cell::Text(name),
                Cell::Int(count),
                Cell::Float(rate),
                Cell::Prob(p),
                Cell::Bool(ok),
            ]
        })
}

proptest! {
    #[test]
    fn reports_round_trip(rows in prop::collection::vec(cell_row(), 0..20)) {
        let text = emit_report(&rows, &schema()).unwrap();
        prop_assert_eq!(parse_report(&text, &schema()).unwrap(), rows);
    }

    #[test]
    fn exact_probabilities_round_trip(n in 0u64..10_000, extra in 0u64..10_000) {
        let p = Prob::from_ratio(n, n + extra + 1, Arith::Exact);
        prop_assert_eq!(parse_prob(&render_prob(&p), Arith::Exact).unwrap(), p);
    }

    #[test]
    fn approximate_probabilities_render_stably(x in 1e-300f64..1.0) {
        let p = Prob::from_f64(x, Arith::Approx).unwrap();
        let text = render_prob(&p);
        let back = parse_prob(&text, Arith::Approx).unwrap();
        prop_assert_eq!(render_prob(&back), text);
    }

    #[test]
    fn decimal_strings_parse_exactly(int in 0i64..1000, frac in 0u32..1000) {
        let r = parse_rational(&format!("{int}.{frac:03}")).unwrap();
        prop_assert_eq!(r, BigRational::new(BigInt::from(int * 1000 + i64::from(frac)), BigInt::from(1000)));
    }

    #[test]
    fn configs_round_trip(seed in any::<u64>(), reps in 1usize..100_000, exact in any::<bool>()) {
        let mut c = Config::default();
        c.run.seed = seed;
        c.run.mode = if exact { Mode::Exact } else { Mode::Float };
        c.type1.replications = reps;
        prop_assert_eq!(Config::parse(&c.render()).unwrap(), c);
    }
}

#[test]
fn empty_config_is_the_default() {
    assert_eq!(Config::parse("").unwrap(), Config::default());
}

#[test]
fn written_reports_carry_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Config::demo();
    let report = catest::run(catest::Experiment::Contract, &cfg).unwrap().remove(0);
    let (csv, txt) = report.write(dir.path(), &cfg.render()).unwrap();
    let csv_text = std::fs::read_to_string(csv).unwrap();
    assert!(csv_text.starts_with("# [run]"));
    let rows = parse_report(&csv_text, &report.schema).unwrap();
    assert_eq!(rows, report.rows);
    let summary = std::fs::read_to_string(txt).unwrap();
    assert!(summary.contains("bounds held: true"));
    assert!(summary.contains("[contract]"));
}
