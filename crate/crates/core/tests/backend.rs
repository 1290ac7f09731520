use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use partexec_core::backend::{
    read_transcript, Backend, BackendError, CompletionRequest, LiveBackend, LiveConfig, MatchMode, RecordingBackend,
    ReplayBackend,
};
use partexec_core::{instrument, run, Budget, Pipeline, PipelineMode, SourceSnippet};
use serde_json::Value;

struct Seen {
    auth: Option<String>,
    body: Value,
}

/// Serves one canned (status, body) per connection, in order, and keeps what
/// each request carried.
fn serve(responses: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<Seen>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    thread::spawn(move || {
        for (status, body) in responses {
            let (stream, _) = listener.accept().unwrap();
            let mut r = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            let mut auth = None;
            loop {
                let mut line = String::new();
                r.read_line(&mut line).unwrap();
                let l = line.trim_end();
                if l.is_empty() {
                    break;
                }
                if let Some((k, v)) = l.split_once(':') {
                    match k.to_ascii_lowercase().as_str() {
                        "content-length" => len = v.trim().parse().unwrap(),
                        "authorization" => auth = Some(v.trim().to_string()),
                        _ => {}
                    }
                }
            }
            let mut buf = vec![0; len];
            r.read_exact(&mut buf).unwrap();
            log.lock().unwrap().push(Seen { auth, body: serde_json::from_slice(&buf).unwrap() });
            let mut s = stream;
            write!(
                s,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (url, seen)
}

fn chat(content: &str) -> String {
    serde_json::json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
}

fn config(endpoint: String) -> LiveConfig {
    LiveConfig {
        endpoint,
        model: "m".into(),
        api_key: Some("k-123".into()),
        request_timeout: Duration::from_secs(5),
        retries: 2,
        backoff: Duration::from_millis(10),
    }
}

#[test]
fn live_request_shape() {
    let (url, seen) = serve(vec![(200, chat("Integer"))]);
    let b = LiveBackend::new(config(url)).unwrap();
    let mut req = CompletionRequest::new("classify me");
    req.max_tokens = 8;
    req.stop = vec!["\n".into()];
    assert_eq!(b.complete(&req).unwrap(), "Integer");
    let seen = seen.lock().unwrap();
    assert_eq!(seen[0].auth.as_deref(), Some("Bearer k-123"));
    let body = &seen[0].body;
    assert_eq!(body["model"], "m");
    assert_eq!(body["messages"][0]["content"], "classify me");
    assert_eq!(body["temperature"], 0.8);
    assert_eq!(body["max_tokens"], 8);
    assert_eq!(body["stop"][0], "\n");
}

#[test]
fn server_errors_are_retried() {
    let (url, seen) = serve(vec![(503, "{}".into()), (429, "{}".into()), (200, chat("ok"))]);
    let b = LiveBackend::new(config(url)).unwrap();
    assert_eq!(b.complete(&CompletionRequest::new("p")).unwrap(), "ok");
    assert_eq!(seen.lock().unwrap().len(), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let (url, seen) = serve(vec![(400, "{}".into()), (200, chat("late"))]);
    let b = LiveBackend::new(config(url)).unwrap();
    assert!(matches!(b.complete(&CompletionRequest::new("p")), Err(BackendError::Unavailable(_))));
    assert_eq!(seen.lock().unwrap().len(), 1);
}

#[test]
fn unreachable_endpoint_is_unavailable() {
    let b = LiveBackend::new(LiveConfig { retries: 1, ..config("http://127.0.0.1:1/v1".into()) }).unwrap();
    assert!(matches!(b.complete(&CompletionRequest::new("p")), Err(BackendError::Unavailable(_))));
}

#[test]
fn recorded_session_replays_identically() {
    let text = "rows = fetch(limit)\nfor r in rows:\n    print(r)\n";
    let program = instrument(&SourceSnippet::new("rec.py", text)).unwrap();
    let (url, _) = serve(vec![
        (200, chat("```python\ndef fetch(n):\n    return list(range(n))\n```")),
        (200, chat("```python\nlimit = 2\n```")),
    ]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rec.jsonl");
    let recorder = Arc::new(RecordingBackend::new(LiveBackend::new(config(url)).unwrap(), &path).unwrap());
    let live = run(&program, &Pipeline::new(PipelineMode::Full, recorder), &Budget::default());
    assert_eq!(String::from_utf8_lossy(&live.stdout_capture), "0\n1\n");

    let entries = read_transcript(&path).unwrap();
    assert_eq!(entries.len(), 2);
    assert!(entries.iter().all(|e| e.mode == MatchMode::PromptDigest && e.key.len() == 64));
    for _ in 0..2 {
        let replay = Arc::new(ReplayBackend::new(entries.clone()));
        let again = run(&program, &Pipeline::new(PipelineMode::Full, replay.clone()), &Budget::default());
        assert_eq!(again, live);
        assert_eq!(replay.remaining(), 0);
    }
}

#[test]
fn digest_entries_answer_only_their_prompt() {
    let entries = vec![partexec_core::backend::TranscriptEntry::digest("a", "A")];
    let b = ReplayBackend::new(entries);
    assert_eq!(b.complete(&CompletionRequest::new("b")), Err(BackendError::TranscriptExhausted));
    assert_eq!(b.complete(&CompletionRequest::new("a")).unwrap(), "A");
}
