use relmodes::lab::{builtin, run, ReportBody, EXIT_OK};

fn census(name: &str) -> relmodes::dynamics::CensusReport {
    let b = run(&builtin(name).unwrap().scenario().unwrap());
    assert_eq!(b.exit_code, EXIT_OK, "{name}: {}", b.to_text());
    match b.report {
        ReportBody::Census(c) => c,
        other => panic!("{other:?}"),
    }
}

#[test]
fn three_mode_circle_meets_bound() {
    let c = census("s1-weights-1-1-minus1");
    assert_eq!(c.category.n, 2);
    for row in &c.rows {
        assert!(row.count_found >= 2);
        assert!(row.records.iter().all(|r| r.weakly_nondegenerate == Some(true)));
    }
}

#[test]
fn antipodal_symmetry_halves_periods() {
    let c = census("z2-antipodal-2modes");
    assert_eq!(c.category.n, 2);
    for row in &c.rows {
        assert!(row.count_found >= 2);
        // Normal modes close up to -1 after half their period: near pi/4 and pi/2.
        let mut periods: Vec<f64> = row.records.iter().map(|r| r.period).collect();
        periods.sort_by(f64::total_cmp);
        assert!((periods[0] - std::f64::consts::FRAC_PI_4).abs() < 0.1, "{periods:?}");
        assert!((periods[1] - std::f64::consts::FRAC_PI_2).abs() < 0.3, "{periods:?}");
        assert!(row.records.iter().all(|r| r.finite_index.is_some()));
    }
}
