use std::sync::Arc;

use captcha_service::{AppState, ManualClock, ServiceConfig, ServiceError, SessionState};
use spatial_captcha::manifest::shipped_manifests;

fn config(dir: &std::path::Path) -> ServiceConfig {
    ServiceConfig {
        pool_size: 7,
        state_dir: Some(dir.to_owned()),
        seed: 5,
        ..Default::default()
    }
}

#[test]
fn generated_pool_and_sessions_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let clock = Arc::new(ManualClock::at(1000.0));
    let a = AppState::build(config(dir.path()), clock.clone(), shipped_manifests()).unwrap();
    assert_eq!(a.pool.len(), 7);
    let (item, bin) = a.pool.choose(None, None, |_| 0).unwrap();
    let (token, _) = a.sessions.open(item, bin, a.now(), a.ttl());
    a.persist().unwrap();

    // same seed: the same instances, so the snapshot row resolves
    let b = AppState::build(config(dir.path()), clock.clone(), shipped_manifests()).unwrap();
    let rows = b.sessions.snapshot();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].token, token);
    assert_eq!(rows[0].state, SessionState::Open);
    let (verdict, _) = b.sessions.verify(&token, "A", 1001.0, b.ttl()).unwrap();
    assert!((verdict.response_time_s - 1.0).abs() < 1e-9);
}

#[test]
fn empty_manifest_list_without_dataset_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let r = AppState::build(config(dir.path()), Arc::new(ManualClock::at(0.0)), Vec::new());
    assert!(matches!(r, Err(ServiceError::EmptyPool(_))));
}

#[tokio::test]
async fn serves_over_tcp_until_shutdown() {
    let dir = tempfile::tempdir().unwrap();
    let state = Arc::new(AppState::build(config(dir.path()), Arc::new(ManualClock::at(0.0)), shipped_manifests()).unwrap());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(captcha_service::serve(state, listener, async {
        let _ = rx.await;
    }));
    let mut stream = tokio::net::TcpStream::connect(addr).await.unwrap();
    use tokio::io::{AsyncReadExt, AsyncWriteExt};
    stream.write_all(b"GET /v1/health HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n").await.unwrap();
    let mut reply = String::new();
    stream.read_to_string(&mut reply).await.unwrap();
    assert!(reply.starts_with("HTTP/1.1 200"), "{reply}");
    assert!(reply.contains("\"status\":\"ok\""));
    tx.send(()).unwrap();
    server.await.unwrap().unwrap();
    assert!(dir.path().join(captcha_service::SNAPSHOT_FILE).exists());
}
