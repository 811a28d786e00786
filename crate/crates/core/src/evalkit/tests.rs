use proptest::prelude::*;

use super::*;
use crate::rng::Stream;

fn truth(n_labels: usize, correct: usize, family: FamilyType, ability: Ability, bin: Option<Bin>) -> Truth {
    let labels: Vec<String> = (1..=n_labels).map(|i| i.to_string()).collect();
    Truth {
        correct_label: labels[correct].clone(),
        labels,
        ability,
        family,
        bin,
    }
}

/// `n` instances of one family with uniformly placed answers.
fn synthetic(n: usize, n_labels: usize, family: FamilyType, ability: Ability, seed: u64) -> Truths {
    let mut s = Stream::new(seed);
    Truths(
        (0..n)
            .map(|i| (format!("{family}-{i:05}"), truth(n_labels, s.index(n_labels), family, ability, None)))
            .collect(),
    )
}

fn rec(id: &str, responses: &[&str]) -> EvalRecord {
    EvalRecord {
        instance_id: id.into(),
        solver: "t".into(),
        responses: responses.iter().map(|r| (!r.is_empty()).then(|| r.to_string())).collect(),
        latencies: vec![1.0; responses.len()],
    }
}

fn abc() -> Truths {
    // labels 1..=3 written A, B, C below
    let t = |c| truth(3, c, FamilyType::Polyomino, Ability::MOR, None);
    Truths([("x".to_owned(), t(0)), ("y".to_owned(), t(1)), ("z".to_owned(), t(1))].into_iter().collect())
}

#[test]
fn pass_at_1_first_slot_examples() {
    let t = abc();
    let records = [rec("x", &["1"]), rec("y", &["1"]), rec("z", &["2"])];
    assert!((pass_at_1(&records, &t).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    let all = [rec("x", &["1"]), rec("y", &["2"]), rec("z", &["2"])];
    assert_eq!(pass_at_1(&all, &t).unwrap(), 1.0);
    assert!(matches!(pass_at_1(&[], &t), Err(EvalError::Empty)));
}

#[test]
fn pass_at_k_and_k_of_k_examples() {
    let t = abc();
    assert_eq!(pass_at_k(&[rec("y", &["1", "2", "3"])], &t, 3).unwrap(), 1.0);
    assert_eq!(k_of_k(&[rec("x", &["1", "1", "1"])], &t, 3).unwrap(), 1.0);
    assert_eq!(k_of_k(&[rec("x", &["1", "1", "2"])], &t, 3).unwrap(), 0.0);
    assert!(matches!(pass_at_k(&[rec("x", &["1", "1"])], &t, 3), Err(EvalError::Short { got: 2, k: 3, .. })));
    assert!(matches!(k_of_k(&[rec("x", &["1"])], &t, 3), Err(EvalError::Short { .. })));
}

#[test]
fn abstentions_count_as_wrong_and_keep_the_denominator() {
    let t = abc();
    let records = [rec("x", &["", "1", "1"]), rec("y", &["2", "2", "2"])];
    let r = evaluate(&records, &t, &EvalOptions::default()).unwrap();
    assert_eq!(r.overall.n, 2);
    assert_eq!(r.overall.pass_at_1, 0.5);
    assert_eq!(r.overall.pass_at_k, 1.0);
    assert_eq!(r.overall.k_of_k, Some(0.5));
}

#[test]
fn bad_records_are_named() {
    let t = abc();
    let opts = EvalOptions::default();
    let e = evaluate(&[rec("x", &["1", "9", "1"])], &t, &opts).unwrap_err();
    assert!(matches!(&e, EvalError::UnknownLabel { instance_id, label } if instance_id == "x" && label == "9"));
    assert!(matches!(evaluate(&[rec("q", &["1", "1", "1"])], &t, &opts), Err(EvalError::UnknownInstance(_))));
    assert!(matches!(evaluate(&[rec("x", &["1", "1", "1", "1"])], &t, &opts), Err(EvalError::Long { .. })));
    let ranked = EvalOptions {
        semantics: Semantics::Ranked,
        ..opts
    };
    assert!(matches!(evaluate(&[rec("x", &["1", "1", "2"])], &t, &ranked), Err(EvalError::RepeatedRank { .. })));
    let r = evaluate(&[rec("x", &["2", "1", "3"])], &t, &ranked).unwrap();
    assert_eq!((r.overall.pass_at_1, r.overall.pass_at_k, r.overall.k_of_k), (0.0, 1.0, None));
    assert!(matches!("difficulty".parse::<Axis>(), Err(EvalError::UnknownAxis(_))));
    assert_eq!("bin".parse::<Axis>().unwrap(), Axis::Bin);
}

fn fuzzed() -> impl Strategy<Value = (Truths, Vec<EvalRecord>)> {
    (1usize..30, any::<u64>()).prop_map(|(n, seed)| {
        let mut s = Stream::new(seed);
        let mut truths = BTreeMap::new();
        let mut records = Vec::new();
        for i in 0..n {
            let labels = if s.chance(1, 2) { 4 } else { 6 };
            let t = truth(labels, s.index(labels), FamilyType::Pyramid, Ability::SV, None);
            let bias = s.unit();
            let responses = (0..DEFAULT_K)
                .map(|_| match s.index(10) {
                    0 => None,
                    _ if s.unit() < bias => Some(t.correct_label.clone()),
                    _ => Some(t.labels[s.index(labels)].clone()),
                })
                .collect();
            records.push(EvalRecord {
                instance_id: format!("i{i}"),
                solver: "f".into(),
                responses,
                latencies: vec![],
            });
            truths.insert(format!("i{i}"), t);
        }
        (Truths(truths), records)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]
    #[test]
    fn metric_ordering_holds((truths, records) in fuzzed()) {
        let r = evaluate(&records, &truths, &EvalOptions::default()).unwrap();
        let c = r.overall;
        prop_assert!(c.k_of_k.unwrap() <= c.pass_at_1 && c.pass_at_1 <= c.pass_at_k);
        for cell in r.per_ability.values().chain(r.per_bin.values()).chain(r.per_family.values()) {
            prop_assert!(cell.k_of_k.unwrap() <= cell.pass_at_1 && cell.pass_at_1 <= cell.pass_at_k);
        }
    }
}

proptest! {
    #[test]
    fn metrics_ignore_record_order((truths, records) in fuzzed(), seed in any::<u64>()) {
        let mut shuffled = records.clone();
        Stream::new(seed).shuffle(&mut shuffled);
        let opts = EvalOptions::default();
        prop_assert_eq!(evaluate(&records, &truths, &opts).unwrap(), evaluate(&shuffled, &truths, &opts).unwrap());
        let seq = EvalOptions { execution: Execution::Sequential, ..opts };
        prop_assert_eq!(evaluate(&records, &truths, &seq).unwrap(), evaluate(&records, &truths, &opts).unwrap());
    }
}

#[test]
fn random_solver_matches_closed_forms_per_candidate_class() {
    for (labels, family, ability) in [(4, FamilyType::AgentSight, Ability::SO), (6, FamilyType::Polyomino, Ability::MOR)] {
        let truths = synthetic(2000, labels, family, ability, 8);
        let b = random_baseline(&truths, 3, 40, 2, Execution::Parallel).unwrap();
        let p = 1.0 / labels as f64;
        let n = (truths.len() * b.resamples) as f64;
        for (got, expect) in [(b.pass_at_1.mean, p), (b.pass_at_k.mean, 1.0 - (1.0 - p).powi(3)), (b.k_of_k.mean, p.powi(3))] {
            // three standard errors of the pooled mean
            let sigma = (expect * (1.0 - expect) / n).sqrt();
            assert!((got - expect).abs() <= 3.0 * sigma, "{labels} labels: {got} vs {expect}");
        }
    }
}

#[test]
fn four_candidate_pass_at_3_is_near_57_8_percent() {
    let truths = synthetic(1050, 4, FamilyType::AgentSight, Ability::SO, 1);
    let b = random_baseline(&truths, 3, 100, 4, Execution::Parallel).unwrap();
    assert!((b.pass_at_k.mean - 0.578125).abs() <= 0.02, "{}", b.pass_at_k.mean);
}

#[test]
fn random_records_are_seeded() {
    let truths = synthetic(50, 6, FamilyType::Revolution, Ability::MOR, 3);
    assert_eq!(random_records(&truths, 3, 1), random_records(&truths, 3, 1));
    assert_ne!(random_records(&truths, 3, 1), random_records(&truths, 3, 2));
}

#[test]
fn single_family_log_has_one_cell() {
    let truths = synthetic(20, 4, FamilyType::Unfolded, Ability::SV, 0);
    let records = random_records(&truths, 3, 0);
    let cells = stratify(&records, &truths, Axis::Family, &EvalOptions::default()).unwrap();
    assert_eq!(cells.keys().collect::<Vec<_>>(), vec!["unfolded"]);
    assert_eq!(cells["unfolded"].n, 20);
}

#[test]
fn cutoff_oracle_is_non_increasing_over_bins() {
    let mut s = Stream::new(12);
    let mut truths = BTreeMap::new();
    let mut records = Vec::new();
    for i in 0..300 {
        let bin = Bin::ALL[i % 3];
        let d = (i % 3) as f64 / 3.0 + s.unit() / 3.0;
        let t = truth(4, s.index(4), FamilyType::FullViews, Ability::SV, Some(bin));
        // correct below the cutoff, a wrong label above
        let answer = if d < 0.5 { t.correct_label.clone() } else { t.labels.iter().find(|l| **l != t.correct_label).unwrap().clone() };
        records.push(EvalRecord {
            instance_id: format!("{i}"),
            solver: "oracle".into(),
            responses: vec![Some(answer); 3],
            latencies: vec![],
        });
        truths.insert(format!("{i}"), t);
    }
    let cells = stratify(&records, &Truths(truths), Axis::Bin, &EvalOptions::default()).unwrap();
    let rate = |b: Bin| cells[b.as_str()].pass_at_1;
    assert!(rate(Bin::Easy) >= rate(Bin::Medium) && rate(Bin::Medium) >= rate(Bin::Hard));
    assert_eq!((rate(Bin::Easy), rate(Bin::Hard)), (1.0, 0.0));
}

fn report(solver: &str, pass_at_k: f64, k_of_k: f64) -> EvalReport {
    EvalReport {
        solver: solver.into(),
        k: 3,
        semantics: Semantics::Sampled,
        overall: Cell {
            n: 10,
            pass_at_1: k_of_k,
            pass_at_k,
            k_of_k: Some(k_of_k),
        },
        per_ability: BTreeMap::new(),
        per_bin: BTreeMap::new(),
        per_family: BTreeMap::new(),
        latency: BTreeMap::new(),
    }
}

#[test]
fn reliability_rows() {
    assert_eq!(reliability_coverage_csv(&[report("m", 0.56, 0.103)]), "solver,pass_at_k,k_of_k\nm,0.56,0.103\n");
    assert_eq!(reliability_coverage_csv(&[]), "solver,pass_at_k,k_of_k\n");
    let csv = cells_csv(&[report("a,b", 0.5, 0.25)]);
    assert_eq!(csv.lines().nth(1).unwrap(), "\"a,b\",overall,all,10,0.25,0.5,0.25");
}

#[test]
fn per_solver_reports() {
    let t = abc();
    let mut records = vec![rec("x", &["1", "1", "1"]), rec("y", &["1", "1", "1"])];
    records[1].solver = "u".into();
    let reports = evaluate_by_solver(&records, &t, &EvalOptions::default()).unwrap();
    assert_eq!(reports.iter().map(|r| r.solver.as_str()).collect::<Vec<_>>(), vec!["t", "u"]);
    assert_eq!(reports[0].overall.pass_at_1, 1.0);
    assert_eq!(reports[1].overall.pass_at_1, 0.0);
    assert_eq!(reports[0].latency["polyomino"].median, 1.0);
}

#[test]
fn latency_quartiles() {
    let s = LatencySummary::of(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
    assert_eq!((s.median, s.q1, s.q3, s.iqr), (3.0, 2.0, 4.0, 2.0));
    assert!(LatencySummary::of(&[]).is_none());
}

#[test]
fn jsonl_round_trip() {
    let records = vec![rec("x", &["1", "", "2"]), rec("y", &["3"])];
    let mut buf = Vec::new();
    write_records(&records, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.contains("null"));
    assert_eq!(read_records(format!("{text}\n\n").as_bytes()).unwrap(), records);
    let e = read_records("{\"instance_id\":1}\n".as_bytes()).unwrap_err();
    assert!(matches!(e, EvalError::Parse { line: 1, .. }));
}

fn annotation(choice: &str, time_s: f64) -> Annotation {
    Annotation {
        annotator: "a".into(),
        choice: choice.into(),
        time_s,
    }
}

#[test]
fn human_pass_rules() {
    let t = abc();
    let cfg = HumanPassConfig::default();
    let mut ann = BTreeMap::new();
    // x: 2 of 3 correct in time
    ann.insert("x".to_owned(), vec![annotation("1", 5.0), annotation("1", 12.0), annotation("3", 3.0)]);
    // y: second correct answer is late, two in-time remain with one correct
    ann.insert("y".to_owned(), vec![annotation("2", 5.0), annotation("2", 31.0), annotation("1", 9.0)]);
    // z: only one annotation in time
    ann.insert("z".to_owned(), vec![annotation("2", 5.0), annotation("2", 31.0)]);
    let r = human_simple_pass(&ann, &t, &cfg);
    assert_eq!((r.passed, r.scored), (1, 2));
    assert_eq!(r.excluded, vec!["z".to_owned()]);
    assert_eq!(r.rate, 0.5);
    let exact = human_simple_pass(
        &[("x".to_owned(), vec![annotation("1", 30.0), annotation("1", 30.0)])].into_iter().collect(),
        &t,
        &cfg,
    );
    assert_eq!(exact.passed, 1);
}

#[cfg(unix)]
#[test]
fn process_solver_pads_missing_slots() {
    let view = PublicInstance {
        instance_id: "x".into(),
        family: FamilyType::Polyomino,
        ability: Ability::MOR,
        prompt: "p".into(),
        labels: vec!["1".into(), "2".into()],
        panels: vec![],
        k: 3,
    };
    let solver = ProcessSolver {
        name: "sh".into(),
        program: "sh".into(),
        args: vec!["-c".into(), "cat > /dev/null; echo '2 -'".into()],
    };
    let r = solver.solve(&view).unwrap();
    assert_eq!(r.responses, vec![Some("2".to_owned()), None, None]);
    assert_eq!(r.latencies.len(), 3);
    let failing = ProcessSolver {
        args: vec!["-c".into(), "exit 3".into()],
        ..solver
    };
    assert!(matches!(failing.solve(&view), Err(EvalError::Solver(_))));
}
