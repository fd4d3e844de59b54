mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{mpsc, Mutex};
use std::thread;
use std::time::Duration;

use common::sum_spec;
use depro::llm::{
    build_zero_shot_debug_prompt, extract_code, live_requests_issued, LiveProvider, LlmError, LlmGateway, PromptKind,
};
use depro::sandbox::{ArtifactOrigin, Language, Role, SolutionArtifact};
use proptest::prelude::*;

fn body_text() -> impl Strategy<Value = String> {
    proptest::collection::vec("[ -~]{0,12}(`{1,5}[ -~]{0,4})?", 1..6)
        .prop_map(|lines| lines.join("\n") + "\n")
        .prop_filter("needs visible code", |s| !s.trim().is_empty())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    // The candidate embedded in a prompt comes back out unchanged.
    #[test]
    fn embedded_code_round_trips(src in body_text(), lang in prop_oneof![Just(Language::Cpp), Just(Language::Python)]) {
        let cand = SolutionArtifact::user_candidate(src.clone(), lang.clone());
        let prompt = build_zero_shot_debug_prompt(&sum_spec(), &cand);
        let got = extract_code(&prompt, &Language::from_name("awk"), Role::Candidate, ArtifactOrigin::Llm { iteration: 1 }).unwrap();
        prop_assert_eq!(got.source, src);
        prop_assert_eq!(got.language, lang);
    }

    #[test]
    fn prose_without_fences_has_no_code(text in "[a-zA-Z0-9 .,\n]{0,200}") {
        let r = extract_code(&text, &Language::Cpp, Role::Candidate, ArtifactOrigin::Llm { iteration: 1 });
        prop_assert!(matches!(r, Err(LlmError::NoCodeBlock)));
    }
}

#[test]
fn last_block_wins_and_untagged_uses_hint() {
    let reply = "First try:\n```python\nprint(1)\n```\nActually:\n```\nprint(2)\n```\n";
    let a = extract_code(reply, &Language::Python, Role::Reference, ArtifactOrigin::Llm { iteration: 0 }).unwrap();
    assert_eq!(a.source, "print(2)\n");
    assert_eq!(a.language, Language::Python);
}

// The live request counter is process-wide.
static LIVE: Mutex<()> = Mutex::new(());

struct Captured {
    head: String,
    body: String,
}

// Minimal HTTP/1.1 server answering each connection with the next canned
// (status, body) pair.
fn stub(replies: Vec<(u16, String)>) -> (String, mpsc::Receiver<Captured>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for (status, body) in replies {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut head = String::new();
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                head.push_str(&line);
            }
            let len = head
                .lines()
                .find_map(|l| l.to_ascii_lowercase().strip_prefix("content-length:").map(|v| v.trim().parse::<usize>().unwrap()))
                .unwrap_or(0);
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
            stream.flush().unwrap();
            let _ = tx.send(Captured { head, body: String::from_utf8(buf).unwrap() });
        }
    });
    (format!("http://{addr}/v1"), rx)
}

fn completion(text: &str) -> String {
    serde_json::json!({ "choices": [{ "message": { "role": "assistant", "content": text } }] }).to_string()
}

#[test]
fn live_provider_speaks_chat_completions() {
    const SECRET: &str = "sk-stub-4f1c9e0b7a";
    let _guard = LIVE.lock().unwrap();
    std::env::set_var("DEPRO_STUB_KEY_A", SECRET);
    let (endpoint, rx) = stub(vec![
        (500, "{\"error\":\"busy\"}".into()),
        (200, completion("```cpp\nint main() {}\n```")),
    ]);
    let before = live_requests_issued();
    let provider = LiveProvider::new(&endpoint, "test-model", "DEPRO_STUB_KEY_A", Duration::from_secs(10), 2);
    let mut gw = LlmGateway::new(Box::new(provider));
    let ex = gw.complete("Print the sum.", PromptKind::BruteForce).unwrap();
    assert_eq!(ex.response, "```cpp\nint main() {}\n```");
    assert_eq!(ex.provider_id, "live:test-model");
    assert_eq!(live_requests_issued() - before, 2, "one retry after the 500");

    let first = rx.recv().unwrap();
    let second = rx.recv().unwrap();
    for req in [&first, &second] {
        assert!(req.head.starts_with("POST /v1/chat/completions"), "{}", req.head);
        assert!(req.head.contains(&format!("Bearer {SECRET}")));
        let body: serde_json::Value = serde_json::from_str(&req.body).unwrap();
        assert_eq!(body["model"], "test-model");
        assert_eq!(body["messages"][0]["content"], "Print the sum.");
    }

    let transcript = serde_json::to_string(gw.transcript()).unwrap();
    assert!(!transcript.contains(SECRET));
}

#[test]
fn live_client_errors_are_not_retried_and_hide_the_key() {
    const SECRET: &str = "sk-stub-88aa11";
    let _guard = LIVE.lock().unwrap();
    std::env::set_var("DEPRO_STUB_KEY_B", SECRET);
    let (endpoint, _rx) = stub(vec![(401, "{\"error\":\"bad key\"}".into())]);
    let before = live_requests_issued();
    let provider = LiveProvider::new(&endpoint, "m", "DEPRO_STUB_KEY_B", Duration::from_secs(10), 3);
    let mut gw = LlmGateway::new(Box::new(provider));
    let err = gw.complete("hi", PromptKind::FailureDebug).unwrap_err();
    assert!(matches!(err, LlmError::Provider(_)));
    assert!(err.to_string().contains("401"));
    assert!(!err.to_string().contains(SECRET));
    assert_eq!(live_requests_issued() - before, 1);
    assert!(gw.transcript().is_empty());
}
