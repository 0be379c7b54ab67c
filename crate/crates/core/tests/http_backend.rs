mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use lexiforge::chain::{
    BackendError, HttpBackend, LlmBackend, ModelParams, ReplayBackend, RetryPolicy,
};
use lexiforge::pipeline::{learn_with, record, BackendConfig};
use lexiforge::validator::SourcePath;
use serde_json::{json, Value};

#[derive(Clone, Debug)]
struct Request {
    headers: Vec<String>,
    body: Value,
}

type Handler = Box<dyn Fn(usize, &Value) -> (u16, Vec<(&'static str, String)>, String) + Send>;

/// Minimal HTTP/1.1 server on a random local port. Serves requests one at a
/// time until the process exits.
fn serve(handler: Handler) -> (String, Arc<Mutex<Vec<Request>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!(
        "http://{}/v1/chat/completions",
        listener.local_addr().unwrap()
    );
    let log = Arc::new(Mutex::new(Vec::new()));
    let seen = Arc::clone(&log);
    std::thread::spawn(move || {
        for (n, stream) in listener.incoming().enumerate() {
            let mut stream = stream.unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut headers = Vec::new();
            let mut length = 0;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap() == 0 || line == "\r\n" {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
                headers.push(line.trim_end().to_string());
            }
            let mut body = vec![0; length];
            reader.read_exact(&mut body).unwrap();
            let body: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
            let (status, extra, payload) = handler(n, &body);
            seen.lock().unwrap().push(Request { headers, body });
            let mut head = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n",
                payload.len()
            );
            for (k, v) in extra {
                head.push_str(&format!("{k}: {v}\r\n"));
            }
            let _ = stream.write_all(format!("{head}\r\n{payload}").as_bytes());
        }
    });
    (url, log)
}

fn completion(text: &str) -> String {
    json!({"choices": [{"message": {"role": "assistant", "content": text}}]}).to_string()
}

fn fast_retry() -> RetryPolicy {
    RetryPolicy {
        attempts: 3,
        initial_backoff: Duration::from_millis(5),
        max_backoff: Duration::from_millis(50),
    }
}

fn client(url: &str) -> HttpBackend {
    HttpBackend::new(url, Duration::from_secs(5), fast_retry())
        .unwrap()
        .with_api_key(Some("sk-test".into()))
}

#[test]
fn sends_chat_request_and_reads_content() {
    let (url, log) = serve(Box::new(|_, _| (200, vec![], completion("[take on]"))));
    let params = ModelParams {
        model_name: "m-1".into(),
        temperature: 0.5,
        max_tokens: 64,
    };
    assert_eq!(
        client(&url).complete("hello", &params).unwrap(),
        "[take on]"
    );
    let reqs = log.lock().unwrap();
    assert_eq!(reqs.len(), 1);
    let body = &reqs[0].body;
    assert_eq!(body["model"], "m-1");
    assert_eq!(body["temperature"], 0.5);
    assert_eq!(body["max_tokens"], 64);
    assert_eq!(body["messages"][0]["role"], "user");
    assert_eq!(body["messages"][0]["content"], "hello");
    assert!(reqs[0]
        .headers
        .iter()
        .any(|h| h.eq_ignore_ascii_case("authorization: bearer sk-test")));
}

#[test]
fn retries_server_errors_and_rate_limits() {
    let (url, log) = serve(Box::new(|n, _| match n {
        0 => (503, vec![], "busy".into()),
        1 => (429, vec![("Retry-After", "0".into())], "slow down".into()),
        _ => (200, vec![], completion("ok")),
    }));
    assert_eq!(
        client(&url).complete("p", &ModelParams::default()).unwrap(),
        "ok"
    );
    assert_eq!(log.lock().unwrap().len(), 3);
}

#[test]
fn gives_up_after_the_attempt_budget() {
    let (url, log) = serve(Box::new(|_, _| (500, vec![], "down".into())));
    let err = client(&url)
        .complete("p", &ModelParams::default())
        .unwrap_err();
    assert!(matches!(err, BackendError::Http { status: 500, .. }));
    assert_eq!(log.lock().unwrap().len(), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let (url, log) = serve(Box::new(|_, _| (400, vec![], "bad request".into())));
    let err = client(&url)
        .complete("p", &ModelParams::default())
        .unwrap_err();
    assert!(matches!(err, BackendError::Http { status: 400, .. }));
    assert_eq!(log.lock().unwrap().len(), 1);
}

#[test]
fn malformed_bodies_are_reported() {
    let (url, _) = serve(Box::new(|n, _| match n {
        0 => (200, vec![], "not json".into()),
        _ => (200, vec![], json!({"choices": []}).to_string()),
    }));
    let c = client(&url);
    assert!(matches!(
        c.complete("p", &ModelParams::default()),
        Err(BackendError::Malformed(_))
    ));
    assert!(matches!(
        c.complete("p", &ModelParams::default()),
        Err(BackendError::Malformed(_))
    ));
}

#[test]
fn unreachable_endpoint_is_a_transport_error() {
    let port = TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let c = HttpBackend::new(
        format!("http://127.0.0.1:{port}/"),
        Duration::from_secs(2),
        fast_retry(),
    )
    .unwrap();
    assert!(matches!(
        c.complete("p", &ModelParams::default()),
        Err(BackendError::Transport(_))
    ));
}

#[test]
fn recorded_http_run_replays_to_the_same_ledger() {
    let (url, _) = serve(Box::new(|_, body| {
        let prompt = body["messages"][0]["content"].as_str().unwrap_or("");
        match common::ScriptedBackend.complete(prompt, &ModelParams::default()) {
            Ok(text) => (200, vec![], completion(&text)),
            Err(e) => (400, vec![], e.to_string()),
        }
    }));
    let dir = tempfile::tempdir().unwrap();
    let mut cfg =
        common::example_config(&common::EMPLOY, SourcePath::Llm, &dir.path().join("http"));
    cfg.backend = BackendConfig::Http {
        endpoint: url,
        timeout_secs: 10,
    };
    let transcript = dir.path().join("recorded.json");
    let live = record(&cfg, &transcript).unwrap().ledger;
    assert!(live.failures.is_empty());
    assert_eq!(live.learned_sense_ids.len(), 3);

    let mut replay_cfg = cfg.clone();
    replay_cfg.out_dir = dir.path().join("replay");
    replay_cfg.backend = BackendConfig::Replay {
        transcript: transcript.clone(),
    };
    let replayed = learn_with(&replay_cfg, &ReplayBackend::from_file(&transcript).unwrap())
        .unwrap()
        .ledger;
    assert_eq!(live.digest, replayed.digest);
    assert_eq!(live.run_id, replayed.run_id);
    assert_eq!(
        std::fs::read_to_string(dir.path().join("http/lexicon.json")).unwrap(),
        std::fs::read_to_string(dir.path().join("replay/lexicon.json")).unwrap()
    );
}
