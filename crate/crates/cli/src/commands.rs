use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde_json::json;
use spatial_captcha::difficulty::{
    feature_items, fit_difficulty_model, read_pilot_csv, write_pilot_csv, DifficultyModel, FitOptions,
    PilotSimulation,
};
use spatial_captcha::evalkit::{
    axis_csv, evaluate_by_solver, random_records, read_records, reliability_coverage_csv, write_records, Axis,
    EvalOptions, Semantics, Truths,
};
use spatial_captcha::manifest::{parse_manifest, shipped, shipped_manifests, Manifest};
use spatial_captcha::par::{with_jobs, Execution};
use spatial_captcha::pipeline::{apportion, read_dataset, synthesize_batch, write_dataset, BatchEntry, BatchOptions, BinMix};

use crate::error::CliError;
use crate::{CalibrateArgs, EvalArgs, GenArgs, ManifestArgs, RandomArgs, ServeArgs, SimulateArgs};

/// Paths are read; any other name must match a shipped manifest by file name, name or family.
fn resolve_manifests(args: &ManifestArgs) -> Result<Vec<Manifest>, CliError> {
    if args.manifests.is_empty() {
        return Ok(shipped_manifests());
    }
    args.manifests
        .iter()
        .map(|given| {
            let path = Path::new(given);
            if path.is_file() {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                return parse_manifest(&text).map_err(|e| CliError::Input(format!("{given}: {e}")));
            }
            let stem = given.trim_end_matches(".manifest.json");
            shipped()
                .iter()
                .find(|(file, _)| *file == given || file.trim_end_matches(".manifest.json") == stem)
                .map(|(_, doc)| parse_manifest(doc).expect("shipped manifests parse"))
                .or_else(|| shipped_manifests().into_iter().find(|m| m.id.name == stem || m.family().as_str() == stem))
                .ok_or_else(|| CliError::Input(format!("{given}: no such file or shipped manifest")))
        })
        .collect()
}

fn read_model(path: &Path) -> Result<DifficultyModel, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(DifficultyModel::from_json(&text)?)
}

fn parse_mix(s: &str) -> Result<BinMix, CliError> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Input(format!("--mix {s:?}: expected easy,medium,hard counts")))?;
    match parts[..] {
        [e, m, h] => Ok(BinMix::new(e, m, h)),
        _ => Err(CliError::Input(format!("--mix {s:?}: expected three counts"))),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn print(v: serde_json::Value) {
    // a closed stdout only loses the summary
    let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(&v).expect("json values serialize"));
}

pub fn gen(a: GenArgs) -> Result<(), CliError> {
    let manifests = resolve_manifests(&a.manifests)?;
    let model = a.model.as_deref().map(read_model).transpose()?;
    let mixes: Vec<Option<BinMix>> = match a.mix.as_deref() {
        None => vec![None; manifests.len()],
        Some(s) => {
            if model.is_none() {
                return Err(CliError::Input("--mix needs --model".into()));
            }
            let global = parse_mix(s)?;
            let counts = vec![a.count; manifests.len()];
            apportion(&counts, global).map_err(CliError::Input)?.into_iter().map(Some).collect()
        }
    };
    let entries: Vec<BatchEntry> = manifests
        .into_iter()
        .zip(mixes)
        .map(|(manifest, mix)| BatchEntry {
            manifest,
            count: a.count,
            mix,
        })
        .collect();
    let opts = BatchOptions {
        model: model.as_ref(),
        execution: Execution::Parallel,
        created_at: a.created_at,
    };
    let data = with_jobs(a.jobs, || synthesize_batch(&entries, a.seed, opts))?;
    write_dataset(&a.out, &data, a.png)?;
    print(json!({
        "out": a.out,
        "total": data.index.total(),
        "master_seed": a.seed,
        "digest": data.index.digest(),
        "counts": data.index.counts,
        "bins": data.index.bin_totals(),
    }));
    Ok(())
}

pub fn simulate_pilot(a: SimulateArgs) -> Result<(), CliError> {
    let manifests = resolve_manifests(&a.manifests)?;
    let data = read_dataset(&a.dataset)?;
    let items = feature_items(&data.instances, &manifests)?;
    let mut sim = PilotSimulation::default();
    if let Some(n) = a.respondents {
        sim.respondents_per_instance = n;
    }
    let records = spatial_captcha::difficulty::simulate_pilot(&items, &sim, a.seed);
    let mut buf = Vec::new();
    write_pilot_csv(&records, &mut buf)?;
    write_file(&a.out, &buf)?;
    print(json!({"out": a.out, "records": records.len(), "instances": items.len()}));
    Ok(())
}

pub fn calibrate(a: CalibrateArgs) -> Result<(), CliError> {
    let manifests = resolve_manifests(&a.manifests)?;
    let unreadable = |p: &Path, e: String| CliError::Input(format!("{}: {e}", p.display()));
    let data = read_dataset(&a.dataset).map_err(|e| unreadable(&a.dataset, e.to_string()))?;
    let file = File::open(&a.pilot).map_err(|e| unreadable(&a.pilot, e.to_string()))?;
    let pilot = read_pilot_csv(BufReader::new(file)).map_err(|e| unreadable(&a.pilot, e.to_string()))?;
    let opts = FitOptions {
        alpha: a.alpha,
        smooth: a.smooth,
    };
    let model = fit_difficulty_model(&pilot, &data.instances, &manifests, opts)?;
    for w in &model.warnings {
        tracing::warn!("{w}");
    }
    write_file(&a.out, model.to_canonical_json().as_bytes())?;
    let families: serde_json::Map<String, serde_json::Value> = model
        .families
        .iter()
        .map(|(f, m)| {
            let d = json!({"manifest": m.manifest, "instances": m.instances, "records": m.records, "features": m.features});
            (f.to_string(), d)
        })
        .collect();
    print(json!({
        "out": a.out,
        "seed": a.seed,
        "alpha": model.alpha,
        "thresholds": model.thresholds,
        "bin_counts": model.bin_counts(),
        "families": families,
        "warnings": model.warnings,
    }));
    Ok(())
}

pub fn random_solver(a: RandomArgs) -> Result<(), CliError> {
    let data = read_dataset(&a.dataset)?;
    let truths = Truths::from_instances(&data.instances);
    let records = random_records(&truths, a.k, a.seed);
    let file = File::create(&a.out).map_err(|e| CliError::io(&a.out, e))?;
    let mut out = BufWriter::new(file);
    write_records(&records, &mut out)?;
    out.flush().map_err(|e| CliError::io(&a.out, e))?;
    print(json!({"out": a.out, "records": records.len()}));
    Ok(())
}

pub fn eval(a: EvalArgs) -> Result<(), CliError> {
    let semantics: Semantics = a.semantics.parse().map_err(CliError::Input)?;
    let data = read_dataset(&a.dataset)?;
    let truths = Truths::from_instances(&data.instances);
    let file = File::open(&a.responses).map_err(|e| CliError::io(&a.responses, e))?;
    let records = read_records(BufReader::new(file))?;
    let opts = EvalOptions {
        k: a.k,
        semantics,
        execution: Execution::Parallel,
    };
    let reports = evaluate_by_solver(&records, &truths, &opts)?;
    let dir = &a.out;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let report = serde_json::to_string_pretty(&reports).expect("reports serialize");
    write_file(&dir.join("report.json"), report.as_bytes())?;
    let exports = [
        ("overall.csv", None),
        ("per_ability.csv", Some(Axis::Ability)),
        ("per_bin.csv", Some(Axis::Bin)),
        ("per_family.csv", Some(Axis::Family)),
    ];
    for (name, axis) in exports {
        write_file(&dir.join(name), axis_csv(&reports, axis).as_bytes())?;
    }
    write_file(&dir.join("reliability_coverage.csv"), reliability_coverage_csv(&reports).as_bytes())?;
    let overall: serde_json::Map<String, serde_json::Value> =
        reports.iter().map(|r| (r.solver.clone(), serde_json::to_value(r.overall).expect("cells serialize"))).collect();
    print(json!({"out": dir, "k": a.k, "semantics": semantics, "overall": overall}));
    Ok(())
}

pub fn serve(a: ServeArgs) -> Result<(), CliError> {
    use captcha_service::{serve, shutdown_signal, AppState, ServiceConfig};
    let mut config = ServiceConfig::load(a.config.as_deref()).map_err(|e| CliError::Input(e.to_string()))?;
    if let Some(h) = a.host {
        config.host = h;
    }
    if let Some(p) = a.port {
        config.port = p;
    }
    if let Some(d) = a.dataset {
        config.dataset_dir = Some(d);
    }
    if let Some(d) = a.state_dir {
        config.state_dir = Some(d);
    }
    if let Some(m) = a.model {
        config.model = Some(m);
    }
    let addr = format!("{}:{}", config.host, config.port);
    let state = AppState::from_config(config).map_err(|e| CliError::Input(e.to_string()))?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Io(e.to_string()))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| CliError::Input(format!("cannot bind {addr}: {e}")))?;
        eprintln!("listening on {}", listener.local_addr().map_or(addr.clone(), |a| a.to_string()));
        serve(Arc::new(state), listener, shutdown_signal()).await.map_err(|e| CliError::Io(e.to_string()))
    })
}
