//! HTTP transport against a throwaway local server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use tzoom_core::backend::remote::HttpTransport;
use tzoom_core::backend::{BackendCall, RemoteBackend, RemoteConfig};
use tzoom_core::link::{build_prompt, link, FrameRef, PromptExtras, SequenceRole, Task};
use tzoom_core::temporal::TemporalWindow;
use tzoom_core::Error;

#[derive(Debug, Clone)]
struct Seen {
    headers: Vec<(String, String)>,
    body: String,
}

impl Seen {
    fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

/// Serve one canned `(status, body)` per connection, in order.
fn serve(replies: Vec<(u16, &'static str)>) -> (String, Arc<Mutex<Vec<Seen>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/generate", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    thread::spawn(move || {
        for (status, body) in replies {
            let (mut stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut headers = Vec::new();
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            loop {
                line.clear();
                reader.read_line(&mut line).unwrap();
                let l = line.trim_end();
                if l.is_empty() {
                    break;
                }
                let (k, v) = l.split_once(':').unwrap();
                headers.push((k.trim().to_string(), v.trim().to_string()));
            }
            let len: usize = headers
                .iter()
                .find(|(k, _)| k.eq_ignore_ascii_case("content-length"))
                .map(|(_, v)| v.parse().unwrap())
                .unwrap_or(0);
            let mut buf = vec![0u8; len];
            reader.read_exact(&mut buf).unwrap();
            log.lock().unwrap().push(Seen {
                headers,
                body: String::from_utf8(buf).unwrap(),
            });
            let reply = format!(
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(reply.as_bytes()).unwrap();
        }
    });
    (url, seen)
}

fn ground_call() -> BackendCall {
    let frames: Vec<FrameRef> = [0.0, 50.0, 100.0]
        .iter()
        .map(|&t| FrameRef::at(t, 170))
        .collect();
    let seq = link(&frames, 3, SequenceRole::Global).unwrap();
    let p = build_prompt(
        Task::Ground,
        vec![seq],
        "a dog jumps",
        PromptExtras::default(),
    )
    .unwrap();
    BackendCall::new(p, "park", TemporalWindow::new(0.0, 100.0).unwrap())
}

fn backend(url: &str) -> RemoteBackend {
    let cfg = RemoteConfig::new(url);
    let transport = HttpTransport::new(url, Duration::from_secs(10), Some("secret-token".into()));
    RemoteBackend::with_transport(transport, cfg).with_sleeper(|_| {})
}

#[test]
fn retries_server_errors_then_succeeds() {
    let (url, seen) = serve(vec![(503, "busy"), (200, r#"{"text":"[[20, 40]]"}"#)]);
    let raw = backend(&url).remote_call(&ground_call()).unwrap();
    assert_eq!(raw.text, "[[20, 40]]");
    assert_eq!(raw.attempts, 2);
    let seen = seen.lock().unwrap();
    assert_eq!(seen.len(), 2);
    assert_eq!(seen[0].body, seen[1].body);
    assert_eq!(seen[1].header("x-tzoom-protocol"), Some("1"));
    assert_eq!(seen[1].header("authorization"), Some("Bearer secret-token"));
    assert!(seen[1]
        .body
        .starts_with(r#"{"model":"default","messages":"#));
}

#[test]
fn client_errors_are_not_retried() {
    let (url, seen) = serve(vec![(400, "bad request")]);
    let err = backend(&url).remote_call(&ground_call()).unwrap_err();
    assert!(
        matches!(err, Error::BackendUnavailable { attempts: 1, .. }),
        "{err}"
    );
    assert_eq!(seen.lock().unwrap().len(), 1);
}

#[test]
fn refused_connection_exhausts_retries() {
    let port = {
        let l = TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let url = format!("http://127.0.0.1:{port}/");
    let err = backend(&url).remote_call(&ground_call()).unwrap_err();
    assert!(
        matches!(err, Error::BackendUnavailable { attempts: 3, .. }),
        "{err}"
    );
}

#[test]
fn http_constructor_requires_endpoint() {
    assert!(RemoteBackend::http(RemoteConfig::new("  ")).is_err());
}
