use super::*;
use crate::difficulty::{feature_items, fit_difficulty_model, simulate_pilot, FitOptions, PilotSimulation};
use crate::manifest::shipped_manifests;
use crate::par::Execution;
use crate::renderer::palette::PALETTE_NAMES;

fn manifest(family: FamilyType) -> Manifest {
    shipped_manifests().into_iter().find(|m| m.family() == family).unwrap()
}

fn entries(count: usize) -> Vec<BatchEntry> {
    shipped_manifests()
        .into_iter()
        .map(|manifest| BatchEntry {
            manifest,
            count,
            mix: None,
        })
        .collect()
}

fn fixed_time(execution: Execution) -> BatchOptions<'static> {
    BatchOptions {
        execution,
        created_at: Some(1_700_000_000),
        ..Default::default()
    }
}

#[test]
fn synthesis_is_deterministic_and_ids_ignore_the_clock() {
    let m = manifest(FamilyType::Polyomino);
    let a = Synthesizer::new(&m).created_at(1).run(42, None).unwrap();
    let b = Synthesizer::new(&m).created_at(2).run(42, None).unwrap();
    assert_eq!(a.instance.instance_id, b.instance.instance_id);
    assert_eq!(a.panels, b.panels);
    assert_ne!(a.instance.created_at, b.instance.created_at);
    let c = Synthesizer::new(&m).created_at(1).run(43, None).unwrap();
    assert_ne!(a.instance.instance_id, c.instance.instance_id);
}

#[test]
fn every_instance_is_certified_and_self_consistent() {
    for m in shipped_manifests() {
        for seed in 0..15 {
            let a = synthesize(&m, seed, None, None).unwrap();
            let i = &a.instance;
            assert!(i.certified_unique(), "{} seed {seed}", m.key());
            assert_eq!(i.labels(), m.answer.labels.iter().map(String::as_str).collect::<Vec<_>>());
            assert_eq!(i.panels.len(), 1 + i.candidates.len());
            for p in &i.panels {
                assert_eq!(sha256_hex(&a.panel(&p.file).unwrap().bytes), p.sha256);
            }
            assert!(!i.prompt.contains('$'), "{}", i.prompt);
            assert_eq!(i.instance_id, i.content_hash());
            assert!(i.difficulty.is_none());
        }
    }
}

#[test]
fn palette_swap_changes_bytes_and_nothing_else() {
    for m in shipped_manifests() {
        for seed in 0..5 {
            let base = Synthesizer::new(&m).created_at(0);
            let [p, q] = PALETTE_NAMES;
            let a = base.clone().palette(p).run(seed, None).unwrap();
            let b = base.palette(q).run(seed, None).unwrap();
            let (x, y) = (&a.instance, &b.instance);
            assert_eq!(x.prompt, y.prompt);
            assert_eq!(x.candidates, y.candidates);
            assert_eq!(x.correct_label, y.correct_label);
            assert_eq!(x.scene, y.scene);
            assert_ne!(a.panels, b.panels, "{} seed {seed}", m.key());
        }
    }
}

#[test]
fn instances_regenerate_from_their_stored_seed() {
    let m = manifest(FamilyType::Unfolded);
    let a = synthesize(&m, 9, None, None).unwrap();
    let again = synthesize(&m, a.instance.seed, a.instance.requested_bin, None).unwrap();
    assert_eq!(again.instance.content_hash(), a.instance.content_hash());
}

#[test]
fn bin_without_model_is_an_error() {
    let m = manifest(FamilyType::Pyramid);
    let err = synthesize(&m, 1, Some(Bin::Hard), None).err().unwrap();
    assert!(matches!(err, PipelineError::Manifest(ManifestError::NoModel(_))));
    assert!(!err.is_infeasible());
}

#[test]
fn zero_budget_is_exhausted_and_infeasible() {
    let m = manifest(FamilyType::Revolution);
    let err = Synthesizer::new(&m).budget(0).run(1, None).err().unwrap();
    assert!(matches!(err, PipelineError::Exhausted { attempts: 0, .. }));
    assert!(err.is_infeasible());
}

#[test]
fn correct_slot_is_uniform() {
    // chi-square 0.999 quantiles for 3 and 5 degrees of freedom
    for m in shipped_manifests() {
        let k = m.answer.num_variants;
        let n = 240;
        let mut counts = vec![0usize; k];
        for a in Execution::Parallel.map_range(n, |s| synthesize(&m, s as u64, None, None).unwrap()) {
            counts[a.instance.correct_index().unwrap()] += 1;
        }
        let e = n as f64 / k as f64;
        let chi: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        let limit = if k == 4 { 16.27 } else { 20.52 };
        assert!(chi < limit, "{}: {counts:?} chi {chi}", m.key());
    }
}

#[test]
fn batch_composition_matches_the_request() {
    let data = synthesize_batch(&entries(4), 7, fixed_time(Execution::Parallel)).unwrap();
    assert_eq!(data.index.total(), 28);
    assert_eq!(data.index.counts.len(), 7);
    assert!(data.index.counts.values().all(|c| c[UNBINNED] == 4));
    let ids: Vec<&str> = data.index.instances.iter().map(|e| e.instance_id.as_str()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(ids, sorted);
    let empty = synthesize_batch(&entries(0), 7, fixed_time(Execution::Sequential)).unwrap();
    assert_eq!(empty.index.total(), 0);
}

#[test]
fn sequential_and_parallel_batches_agree() {
    let seq = synthesize_batch(&entries(3), 11, fixed_time(Execution::Sequential)).unwrap();
    let par = synthesize_batch(&entries(3), 11, fixed_time(Execution::Parallel)).unwrap();
    assert_eq!(seq, par);
    assert_eq!(seq.index.digest(), par.index.digest());
    let other = synthesize_batch(&entries(3), 12, fixed_time(Execution::Parallel)).unwrap();
    assert_ne!(seq.index.digest(), other.index.digest());
}

#[test]
fn binned_batch_lands_in_requested_bins() {
    let manifests = shipped_manifests();
    let calib = synthesize_batch(&entries(30), 5, fixed_time(Execution::Parallel)).unwrap();
    let instances: Vec<Instance> = calib.artifacts.iter().map(|a| a.instance.clone()).collect();
    let pilot = simulate_pilot(&feature_items(&instances, &manifests).unwrap(), &PilotSimulation::default(), 1);
    let model = fit_difficulty_model(&pilot, &instances, &manifests, FitOptions::default()).unwrap();

    let mixed: Vec<BatchEntry> = entries(6)
        .into_iter()
        .map(|mut e| {
            e.mix = Some(BinMix::new(2, 2, 2));
            e
        })
        .collect();
    let opts = BatchOptions {
        model: Some(&model),
        ..fixed_time(Execution::Parallel)
    };
    let data = synthesize_batch(&mixed, 3, opts).unwrap();
    let totals = data.index.bin_totals();
    for b in Bin::ALL {
        assert_eq!(totals[b.as_str()], 14, "{b}");
    }
    for a in &data.artifacts {
        let i = &a.instance;
        assert_eq!(i.difficulty.map(|d| d.bin), i.requested_bin);
    }

    let bad = vec![BatchEntry {
        mix: Some(BinMix::new(1, 1, 1)),
        ..mixed[0].clone()
    }];
    assert!(matches!(synthesize_batch(&bad, 3, opts), Err(PipelineError::Format { .. })));
}

#[test]
fn dataset_round_trips_through_disk() {
    let data = synthesize_batch(&entries(2), 21, fixed_time(Execution::Parallel)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), &data, true).unwrap();
    let stored = read_dataset(dir.path()).unwrap();
    assert_eq!(stored.index, data.index);
    let instances: Vec<&Instance> = data.artifacts.iter().map(|a| &a.instance).collect();
    assert_eq!(stored.instances.iter().collect::<Vec<_>>(), instances);
    let first = &data.artifacts[0];
    let bytes = read_panel(dir.path(), &first.instance.instance_id, STIMULUS_FILE).unwrap();
    assert_eq!(bytes, first.panel(STIMULUS_FILE).unwrap().bytes);
    let png = read_panel(dir.path(), &first.instance.instance_id, &png_name(STIMULUS_FILE)).unwrap();
    assert!(png.starts_with(b"\x89PNG"));
    assert!(read_panel(dir.path(), &first.instance.instance_id, "../index.json").is_err());
    assert!(read_instance(dir.path(), "missing").is_err());
}

#[test]
fn tampered_instance_file_is_rejected() {
    let data = synthesize_batch(&entries(1), 2, fixed_time(Execution::Sequential)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), &data, false).unwrap();
    let id = &data.index.instances[0].instance_id;
    let path = dataset::instance_dir(dir.path(), id).join("instance.json");
    let text = std::fs::read_to_string(&path).unwrap();
    let other = &data.index.instances[1].instance_id;
    std::fs::write(&path, text.replace(id.as_str(), other)).unwrap();
    assert!(read_instance(dir.path(), id).is_err());
    let edited = text.replacen("\"correct_label\":\"", "\"correct_label\":\"x", 1);
    assert_ne!(edited, text);
    std::fs::write(&path, edited).unwrap();
    assert!(matches!(read_instance(dir.path(), id), Err(PipelineError::Format { .. })));
}

#[test]
fn overrides_pin_knobs_and_are_checked() {
    let m = manifest(FamilyType::AgentSight);
    let (knob, domain) = m.params.iter().find(|(_, d)| d.grid().is_some_and(|g| g.len() > 1)).unwrap();
    let values = domain.grid().unwrap();
    let pinned = values.last().unwrap().clone();
    let pin = BTreeMap::from([(knob.clone(), pinned.clone())]);
    for seed in 0..4 {
        let a = Synthesizer::new(&m).overrides(pin.clone()).run(seed, None).unwrap();
        assert_eq!(a.instance.params.values[knob], pinned);
        assert!(a.instance.certified_unique());
    }
    let bad = BTreeMap::from([(knob.clone(), crate::manifest::ParamValue::Int(10_000))]);
    assert!(matches!(
        Synthesizer::new(&m).overrides(bad).run(0, None),
        Err(PipelineError::Manifest(ManifestError::Knob { .. }))
    ));
    assert!(check_overrides(&m, &BTreeMap::from([("NOPE".to_owned(), pinned)])).is_err());
}
