//! Run the session service on a free port and play one participant over HTTP.

use std::sync::Arc;

use serde_json::{json, Value};

use rulelab::session::{serve, ServiceConfig, SessionService};

fn post(url: &str, body: Value) -> Value {
    ureq::post(url).send_json(body).expect("request").into_json().expect("json")
}

fn main() -> rulelab::error::Result<()> {
    let service = Arc::new(SessionService::new(ServiceConfig { seed: 1, ..Default::default() }, None)?);
    let server = serve(service, "127.0.0.1:0", 2)?;
    let base = server.url();

    let created = post(&format!("{base}/sessions"), json!({}));
    let id = created["session_id"].as_str().expect("id").to_string();
    println!("{}\nfirst sequence: {}", created["instructions"], created["sequence_text"]);
    for (text, conf) in [("goes up by two", 70), ("even numbers", 55), ("even numbers", 85)] {
        let r = post(&format!("{base}/sessions/{id}/round"), json!({ "hypothesis": text, "confidence": conf }));
        println!("-> {r}");
    }
    let csv = ureq::get(&format!("{base}/export?format=csv")).call().expect("export").into_string()?;
    print!("{csv}");
    server.shutdown();
    Ok(())
}
