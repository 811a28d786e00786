//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero when any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use captcha_service::{router, AppState, ManualClock, PilotLog, Pool, ServiceConfig, Token};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use spatial_captcha::difficulty::{
    feature_items, fit_difficulty_model, invert, isotonic_fit, quantile_fit, simulate_pilot, DifficultyModel,
    FitOptions, Inverter, PilotSimulation,
};
use spatial_captcha::evalkit::{k_of_k, pass_at_1, pass_at_k, random_baseline, EvalRecord, Truth, Truths};
use spatial_captcha::families::{Answer, Scene};
use spatial_captcha::geometry::polyomino::enumerate_free;
use spatial_captcha::geometry::{cube::cube_net_shapes, fold_net, CubeNet};
use spatial_captcha::manifest::{shipped_manifests, Ability, Bin, FamilyType, Manifest};
use spatial_captcha::par::Execution;
use spatial_captcha::pipeline::{read_dataset, synthesize_batch, BatchEntry, BatchOptions, Instance, Synthesizer};
use spatial_captcha::renderer::palette::PALETTE_NAMES;
use spatial_captcha::rng::Stream;
use tower::ServiceExt;

type Outcome = Result<String, String>;
type Criterion = (usize, &'static str, fn(&Shared) -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        // NaN comparisons are false, so they fail
        let held: bool = $cond;
        if !held {
            return Err(format!($($msg)+));
        }
    };
}

struct Shared {
    dir: tempfile::TempDir,
    /// Model fitted on the synthetic pilot, covering every family.
    model: Option<DifficultyModel>,
}

impl Shared {
    fn benchmark(&self) -> std::path::PathBuf {
        self.dir.path().join("benchmark")
    }
}

fn cli(args: &[&str]) -> Result<Value, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_spatial-captcha"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr)));
    }
    serde_json::from_slice(&o.stdout).map_err(|e| e.to_string())
}

fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}

fn batch(per_family: usize, seed: u64) -> Result<Vec<Instance>, String> {
    let entries: Vec<BatchEntry> =
        shipped_manifests().into_iter().map(|manifest| BatchEntry { manifest, count: per_family, mix: None }).collect();
    let opts = BatchOptions {
        created_at: Some(0),
        ..Default::default()
    };
    let data = synthesize_batch(&entries, seed, opts).map_err(|e| e.to_string())?;
    Ok(data.artifacts.into_iter().map(|a| a.instance).collect())
}

fn composition(sh: &Shared) -> Outcome {
    let start = Instant::now();
    let out = sh.benchmark();
    let v = cli(&["gen", "--count", "150", "--seed", "2026", "--out", p(&out), "--created-at", "0"])?;
    ensure!(v["total"] == 1050, "unbinned total {}", v["total"]);
    for (family, bins) in v["counts"].as_object().unwrap() {
        ensure!(bins["unbinned"] == 150, "{family}: {bins}");
    }
    let model = sh.model.as_ref().ok_or("no calibrated model")?;
    let model_path = sh.dir.path().join("model.json");
    std::fs::write(&model_path, model.to_canonical_json()).map_err(|e| e.to_string())?;
    let binned = sh.dir.path().join("binned");
    let v = cli(&[
        "gen", "--count", "150", "--seed", "2026", "--out", p(&binned), "--model", p(&model_path), "--mix", "500,300,250",
        "--created-at", "0",
    ])?;
    let index = read_dataset(&binned).map_err(|e| e.to_string())?.index;
    let totals = index.bin_totals();
    let want: BTreeMap<String, usize> = [("easy", 500), ("medium", 300), ("hard", 250)].map(|(b, n)| (b.to_owned(), n)).into();
    ensure!(index.total() == 1050 && totals == want, "binned index {totals:?}, total {}", v["total"]);
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 300.0, "{secs:.1}s");
    Ok(format!("1050 unbinned; binned (500,300,250) exact; {secs:.1}s for both"))
}

fn uniqueness(_: &Shared) -> Outcome {
    let instances = batch(1000, 77)?;
    let mut per_family: BTreeMap<FamilyType, usize> = BTreeMap::new();
    let mut violations = 0;
    for i in &instances {
        *per_family.entry(i.family).or_default() += 1;
        let truths = i.sweep();
        let correct = i.correct_index().ok_or("correct label not among candidates")?;
        if truths.iter().filter(|&&t| t).count() != 1 || !truths[correct] {
            violations += 1;
        }
    }
    ensure!(per_family.len() == 7 && per_family.values().all(|&n| n == 1000), "{per_family:?}");
    ensure!(violations == 0, "{violations} instances without exactly one true candidate");
    Ok(format!("{} instances, 0 violations", instances.len()))
}

fn label_inertness(_: &Shared) -> Outcome {
    let manifests = shipped_manifests();
    let [a, b] = PALETTE_NAMES;
    let mut byte_changes = 0;
    for n in 0..200u64 {
        let m = &manifests[n as usize % manifests.len()];
        let base = Synthesizer::new(m).created_at(0);
        let x = base.clone().palette(a).run(n, None).map_err(|e| e.to_string())?;
        let y = base.palette(b).run(n, None).map_err(|e| e.to_string())?;
        let (i, j) = (&x.instance, &y.instance);
        ensure!(i.prompt == j.prompt, "{} seed {n}: prompt changed", m.key());
        ensure!(i.candidates == j.candidates, "{} seed {n}: candidates changed", m.key());
        ensure!(i.correct_label == j.correct_label, "{} seed {n}: label changed", m.key());
        if x.panels != y.panels {
            byte_changes += 1;
        }
    }
    ensure!(byte_changes == 200, "panel bytes changed on {byte_changes}/200");
    Ok("200 re-renders: bytes changed on all, 0 label changes".into())
}

fn determinism(sh: &Shared) -> Outcome {
    let again = sh.dir.path().join("again");
    cli(&["gen", "--count", "150", "--seed", "2026", "--out", p(&again), "--created-at", "999"])?;
    let x = read_dataset(&sh.benchmark()).map_err(|e| e.to_string())?;
    let y = read_dataset(&again).map_err(|e| e.to_string())?;
    ensure!(x.index == y.index, "index differs");
    let hash = |d: &[Instance]| d.iter().map(Instance::content_hash).collect::<Vec<_>>();
    ensure!(hash(&x.instances) == hash(&y.instances), "content hashes differ");
    ensure!(x.instances.iter().zip(&y.instances).all(|(a, b)| a.created_at != b.created_at), "timestamps were not varied");
    Ok(format!("index digest {} reproduced", &x.index.digest()[..16]))
}

fn chance(sh: &Shared) -> Outcome {
    let start = Instant::now();
    let data = read_dataset(&sh.benchmark()).map_err(|e| e.to_string())?;
    let truths = Truths::from_instances(&data.instances);
    // closed form: E[pass@1] = mean 1/n, E[k-of-k] = mean 1/n^k
    let n = data.instances.len() as f64;
    let exact_p1 = data.instances.iter().map(|i| 1.0 / i.candidates.len() as f64).sum::<f64>() / n;
    let exact_kk = data.instances.iter().map(|i| (i.candidates.len() as f64).powi(-3)).sum::<f64>() / n;
    let base = random_baseline(&truths, 3, 200, 4, Execution::Parallel).map_err(|e| e.to_string())?;
    let p1 = 100.0 * base.pass_at_1.mean;
    let kk = 100.0 * base.k_of_k.mean;
    ensure!((p1 - 21.4).abs() <= 1.5, "pass@1 {p1:.2}");
    ensure!((p1 - 100.0 * exact_p1).abs() <= 0.5, "pass@1 {p1:.2} vs closed form {:.2}", 100.0 * exact_p1);
    ensure!((kk - 1.1).abs() <= 0.5, "k-of-k {kk:.2} (closed form {:.2})", 100.0 * exact_kk);
    let want = [(Ability::SP, 16.7), (Ability::SO, 25.0), (Ability::MOR, 16.7), (Ability::SV, 25.0)];
    let mut per = Vec::new();
    for (ab, target) in want {
        let got = 100.0 * base.per_ability.get(&ab.to_string()).ok_or(format!("no {ab} cell"))?.mean;
        ensure!((got - target).abs() <= 2.0, "{ab}: {got:.2} vs {target}");
        per.push(format!("{ab} {got:.1}"));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "{secs:.1}s");
    Ok(format!("pass@1 {p1:.2}%, k-of-k {kk:.2}%, {}, {secs:.1}s", per.join(" ")))
}

/// Minimum-SSE non-decreasing fit over every partition into consecutive blocks.
fn brute_isotonic(y: &[f64], w: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << (n - 1)) {
        let mut fit = Vec::with_capacity(n);
        let mut start = 0;
        for end in 1..=n {
            if end == n || mask & (1 << (end - 1)) != 0 {
                let (sw, swy) = (start..end).fold((0.0, 0.0), |(a, b), i| (a + w[i], b + w[i] * y[i]));
                fit.extend(std::iter::repeat_n(swy / sw, end - start));
                start = end;
            }
        }
        if fit.windows(2).any(|p| p[0] > p[1] + 1e-12) {
            continue;
        }
        let sse: f64 = fit.iter().zip(y).zip(w).map(|((f, v), wt)| wt * (f - v).powi(2)).sum();
        if best.as_ref().is_none_or(|(b, _)| sse < *b - 1e-15) {
            best = Some((sse, fit));
        }
    }
    best.expect("one block is always monotone").1
}

fn pava_oracle(_: &Shared) -> Outcome {
    let mut s = Stream::new(404).split("acceptance-pava");
    let mut worst = 0.0f64;
    for case in 0..500 {
        let n = 1 + s.index(8);
        let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| s.uniform(-10.0, 10.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| s.uniform(0.2, 4.0)).collect();
        let fit = isotonic_fit(&x, &y, &w).map_err(|e| e.to_string())?;
        let oracle = brute_isotonic(&y, &w);
        for (xi, o) in x.iter().zip(&oracle) {
            let err = (fit.eval(*xi) - o).abs();
            worst = worst.max(err);
            ensure!(err <= 1e-9, "case {case}: y {y:?} w {w:?}");
        }
    }
    Ok(format!("500 inputs, max deviation {worst:.1e}"))
}

fn quantile(_: &Shared) -> Outcome {
    let mut s = Stream::new(8).split("acceptance-quantile");
    let y: Vec<f64> = (0..101).map(|_| s.uniform(0.0, 50.0)).collect();
    let mut sorted = y.clone();
    sorted.sort_by(f64::total_cmp);
    let fit = quantile_fit(&vec![vec![0.3]; y.len()], &y, 0.5).map_err(|e| e.to_string())?;
    ensure!(fit.intercept == sorted[50], "intercept {} vs median {}", fit.intercept, sorted[50]);
    let n = 10_000;
    let x: Vec<Vec<f64>> = (0..n).map(|_| vec![s.unit()]).collect();
    let y: Vec<f64> = x.iter().map(|v| 1.0 + 0.4 * v[0] + 0.1 * s.normal()).collect();
    let fit = quantile_fit(&x, &y, 0.5).map_err(|e| e.to_string())?;
    let slope = fit.slopes[0];
    ensure!((slope - 0.4).abs() <= 0.02, "slope {slope}");
    Ok(format!("median intercept exact; slope {slope:.4} vs 0.4"))
}

fn calibrate(sh: &mut Shared) -> Outcome {
    let manifests = shipped_manifests();
    let instances = batch(130, 5)?;
    let items = feature_items(&instances, &manifests).map_err(|e| e.to_string())?;
    let pilot = simulate_pilot(&items, &PilotSimulation::default(), 6);
    let model = fit_difficulty_model(&pilot, &instances, &manifests, FitOptions::default()).map_err(|e| e.to_string())?;
    let n = instances.len() as f64;
    let counts = model.bin_counts();
    sh.model = Some(model);
    ensure!(n >= 900.0, "{n} instances");
    for b in Bin::ALL {
        let c = counts.get(&b).copied().unwrap_or(0) as f64;
        ensure!((c - n / 3.0).abs() <= 1.0, "{b}: {c} of {n}");
    }
    Ok(format!("{n} instances, bins {counts:?}"))
}

fn inversion(sh: &Shared) -> Outcome {
    let model = sh.model.as_ref().ok_or("no calibrated model")?;
    let manifests = shipped_manifests();
    let mut s = Stream::new(31).split("acceptance-targets");
    let mut hits = 0;
    for i in 0..100u64 {
        let m: &Manifest = &manifests[s.index(manifests.len())];
        let (lo, hi) = Inverter::new(model, m).map_err(|e| e.to_string())?.reachable();
        let target = s.uniform(lo, hi);
        if let Ok(sample) = invert(model, m, target, 0.05, i) {
            let d = model.score(m, &sample).ok_or("unscored sample")?;
            ensure!((d - target).abs() <= 0.05 && sample.conforms_to(m), "accepted sample misses {target}");
            hits += 1;
        }
    }
    ensure!(hits >= 95, "{hits}/100");
    Ok(format!("{hits}/100 targets within 0.05"))
}

fn cube_nets(sh: &Shared) -> Outcome {
    let free = enumerate_free(6);
    ensure!(free.len() == 35, "{} free hexominoes", free.len());
    let folding = free.iter().filter(|p| fold_net(&CubeNet::from_shape(p, (0..6).collect()).unwrap()).is_some()).count();
    ensure!(folding == 11 && cube_net_shapes().len() == 11, "{folding} fold");
    let data = read_dataset(&sh.benchmark()).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for i in data.instances.iter().filter(|i| i.family == FamilyType::Unfolded) {
        let Scene::Unfolded(scene) = &i.scene else { return Err("scene family mismatch".into()) };
        for c in &i.candidates {
            let Answer::Net { net } = &c.answer else { return Err("candidate is not a net".into()) };
            let matches = fold_net(net).is_some_and(|cube| cube.same_coloring(&scene.cube, false));
            ensure!(matches == (c.label == i.correct_label), "instance {} candidate {}", i.instance_id, c.label);
        }
        checked += 1;
    }
    ensure!(checked == 150, "{checked} unfolded instances");
    Ok(format!("35 free hexominoes, 11 fold; {checked} unfolded instances clean"))
}

fn metric_ordering(_: &Shared) -> Outcome {
    let mut s = Stream::new(1000).split("acceptance-records");
    let k = 3;
    for case in 0..1000 {
        let n = 1 + s.index(40);
        let mut truths = BTreeMap::new();
        let mut records = Vec::new();
        let (mut first, mut any, mut all) = (0usize, 0usize, 0usize);
        for j in 0..n {
            let m = if s.chance(1, 2) { 4 } else { 6 };
            let labels: Vec<String> = (0..m).map(|l| format!("L{l}")).collect();
            let correct = labels[s.index(m)].clone();
            let skill = s.unit();
            let responses: Vec<Option<String>> = (0..k)
                .map(|_| match s.index(8) {
                    0 => None,
                    _ if s.unit() < skill => Some(correct.clone()),
                    _ => Some(labels[s.index(m)].clone()),
                })
                .collect();
            let hit = |r: &Option<String>| r.as_deref() == Some(correct.as_str());
            first += usize::from(hit(&responses[0]));
            any += usize::from(responses.iter().any(hit));
            all += usize::from(responses.iter().all(hit));
            let truth = Truth {
                labels,
                correct_label: correct,
                ability: Ability::SP,
                family: FamilyType::Polyomino,
                bin: None,
            };
            truths.insert(format!("i{j}"), truth);
            records.push(EvalRecord {
                instance_id: format!("i{j}"),
                solver: "fuzz".into(),
                responses,
                latencies: Vec::new(),
            });
        }
        let truths = Truths(truths);
        let e = |r: Result<f64, _>| r.map_err(|e: spatial_captcha::evalkit::EvalError| e.to_string());
        let (p1, pk, kk) = (e(pass_at_1(&records, &truths))?, e(pass_at_k(&records, &truths, k))?, e(k_of_k(&records, &truths, k))?);
        ensure!(kk <= p1 && p1 <= pk, "case {case}: k-of-k {kk} pass@1 {p1} pass@k {pk}");
        let nf = n as f64;
        ensure!(
            p1 == first as f64 / nf && pk == any as f64 / nf && kk == all as f64 / nf,
            "case {case}: metrics disagree with direct counts"
        );
    }
    Ok("1000 record sets, 0 violations".into())
}

async fn call(app: &axum::Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let res = app.clone().oneshot(req).await.expect("infallible router");
    let status = res.status();
    (status, res.into_body().collect().await.expect("body").to_bytes().to_vec())
}

fn post(uri: &str, body: Value) -> Request<Body> {
    Request::post(uri).header(header::CONTENT_TYPE, "application/json").body(Body::from(body.to_string())).unwrap()
}

fn admin(uri: &str) -> Request<Body> {
    Request::get(uri).header(header::AUTHORIZATION, "Bearer acceptance-token").body(Body::empty()).unwrap()
}

async fn service_checks() -> Outcome {
    let clock = Arc::new(ManualClock::at(1_000_000.0));
    let config = ServiceConfig {
        admin_token: Some("acceptance-token".into()),
        ..Default::default()
    };
    let pool = Pool::new(shipped_manifests(), 3);
    pool.generate(14, 3, None).map_err(|e| e.to_string())?;
    let ids: Vec<String> = pool.instances().iter().map(|i| i.instance_id.clone()).collect();
    let state = Arc::new(AppState::new(config, clock.clone(), pool, PilotLog::in_memory()));
    let app = router(state.clone());
    let forbidden = ["instance_id", "correct_label", "params", "seed", "scene", "difficulty"];

    // scrub: every client and admin payload
    let mut scrubbed = 0;
    let mut bodies: Vec<Vec<u8>> = Vec::new();
    let mut opened = Vec::new();
    for family in FamilyType::ALL {
        let (st, body) = call(&app, post("/v1/challenge", json!({"family": family.as_str()}))).await;
        ensure!(st == StatusCode::OK, "challenge {family}: {st}");
        let v: Value = serde_json::from_slice(&body).map_err(|e| e.to_string())?;
        for url in v["panels"].as_array().ok_or("no panels")? {
            let (st, png) = call(&app, Request::get(url.as_str().unwrap()).body(Body::empty()).unwrap()).await;
            ensure!(st == StatusCode::OK, "panel {st}");
            ensure!(!png.windows(4).any(|w| w == b"tEXt" || w == b"iTXt" || w == b"zTXt"), "PNG text chunk");
            scrubbed += 1;
        }
        opened.push(v);
        bodies.push(body);
    }
    for v in &opened {
        let token = v["token"].as_str().unwrap();
        let (_, body) = call(&app, post(&format!("/v1/challenge/{token}/answer"), json!({"label": "A"}))).await;
        bodies.push(body);
    }
    bodies.push(call(&app, Request::get("/v1/health").body(Body::empty()).unwrap()).await.1);
    for uri in ["/v1/admin/stats", "/v1/admin/manifests"] {
        bodies.push(call(&app, admin(uri)).await.1);
    }
    for body in &bodies {
        let text = String::from_utf8_lossy(body);
        for key in forbidden {
            ensure!(!text.contains(&format!("\"{key}\"")), "key {key} in {text}");
        }
        ensure!(ids.iter().all(|id| !text.contains(id.as_str())), "instance id in {text}");
        scrubbed += 1;
    }

    // 100 concurrent answers to one session
    let (_, body) = call(&app, post("/v1/challenge", json!({}))).await;
    let v: Value = serde_json::from_slice(&body).map_err(|e| e.to_string())?;
    let token = v["token"].as_str().unwrap().to_owned();
    let row = state.sessions.snapshot().into_iter().find(|r| r.token == Token::parse(&token).unwrap()).ok_or("no row")?;
    let truth = state.pool.find(&row.instance_id).ok_or("no item")?.0.instance.correct_label.clone();
    let before = state.pilot.len();
    clock.advance(3.0);
    let uri = format!("/v1/challenge/{token}/answer");
    let tasks: Vec<_> = (0..100)
        .map(|_| {
            let (app, uri, truth) = (app.clone(), uri.clone(), truth.clone());
            tokio::spawn(async move { call(&app, post(&uri, json!({"label": truth}))).await.0 })
        })
        .collect();
    let mut ok = 0;
    for t in tasks {
        ok += usize::from(t.await.map_err(|e| e.to_string())? == StatusCode::OK);
    }
    ensure!(ok == 1, "{ok} verdicts from 100 answers");
    ensure!(state.pilot.len() == before + 1, "{} records from one verdict", state.pilot.len() - before);

    // expiry
    let mut gone = 0;
    for _ in 0..20 {
        let (_, body) = call(&app, post("/v1/challenge", json!({}))).await;
        let v: Value = serde_json::from_slice(&body).map_err(|e| e.to_string())?;
        opened.push(v);
    }
    clock.advance(state.ttl() + 1.0);
    let logged = state.pilot.len();
    for v in opened.iter().rev().take(20) {
        let (st, _) = call(&app, post(&format!("/v1/challenge/{}/answer", v["token"].as_str().unwrap()), json!({"label": "A"}))).await;
        gone += usize::from(st == StatusCode::GONE);
    }
    ensure!(gone == 20, "{gone}/20 expired answers refused");
    ensure!(state.pilot.len() == logged, "expired sessions wrote records");
    Ok(format!("{scrubbed} payloads scrubbed; 1/100 concurrent verdicts; 20/20 expired refused, 0 records"))
}

fn service(_: &Shared) -> Outcome {
    let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(8).enable_all().build().map_err(|e| e.to_string())?;
    rt.block_on(service_checks())
}

fn main() {
    let mut shared = Shared {
        dir: tempfile::tempdir().expect("temp dir"),
        model: None,
    };
    // binning runs first: composition needs its model
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let before = Instant::now();
    results.push((8, "binning balance", calibrate(&mut shared)));
    let criteria: [Criterion; 11] = [
        (1, "benchmark composition", composition),
        (2, "uniqueness certification", uniqueness),
        (3, "label-inert rendering", label_inertness),
        (4, "determinism", determinism),
        (5, "chance-level reproduction", chance),
        (6, "PAVA oracle equivalence", pava_oracle),
        (7, "quantile fit", quantile),
        (9, "inversion success", inversion),
        (10, "cube-net oracle", cube_nets),
        (11, "metric ordering", metric_ordering),
        (12, "service integrity", service),
    ];
    for (n, name, f) in criteria {
        results.push((n, name, f(&shared)));
    }
    results.sort_by_key(|r| r.0);
    let failed: BTreeSet<usize> = results.iter().filter(|r| r.2.is_err()).map(|r| r.0).collect();
    for (n, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS {n:>2} {name}: {detail}"),
            Err(why) => println!("FAIL {n:>2} {name}: {why}"),
        }
    }
    println!(
        "acceptance: {}/{} passed in {:.1}s",
        results.len() - failed.len(),
        results.len(),
        before.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
