use std::io::Read;
use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use serde::de::DeserializeOwned;
use serde_json::{json, Value};
use tiny_http::{Header, Method, Request, Response, Server};

use crate::error::{LabError, Result};
use crate::feedback::FeedbackCondition;

use super::service::{CreateRequest, ExportFilter, RoundRequest, SessionService};
use super::SessionStatus;

const MAX_BODY: u64 = 64 * 1024;

/// A running server. Dropping it without [`ServerHandle::shutdown`] leaves the
/// workers running.
pub struct ServerHandle {
    addr: SocketAddr,
    server: Arc<Server>,
    workers: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn shutdown(self) {
        for _ in &self.workers {
            self.server.unblock();
        }
        for w in self.workers {
            let _ = w.join();
        }
    }

    /// Block until the workers exit.
    pub fn wait(self) {
        for w in self.workers {
            let _ = w.join();
        }
    }
}

/// Bind `bind` (port 0 picks a free port) and serve with `workers` threads.
pub fn serve(service: Arc<SessionService>, bind: &str, workers: usize) -> Result<ServerHandle> {
    let server = Arc::new(Server::http(bind).map_err(|e| LabError::Config(format!("cannot bind {bind}: {e}")))?);
    let addr = server
        .server_addr()
        .to_ip()
        .ok_or_else(|| LabError::Config("server is not on an ip socket".into()))?;
    log::info!("listening on http://{addr}");
    let workers = (0..workers.max(1))
        .map(|_| {
            let server = Arc::clone(&server);
            let service = Arc::clone(&service);
            std::thread::spawn(move || {
                while let Ok(req) = server.recv() {
                    handle(&service, req);
                }
            })
        })
        .collect();
    Ok(ServerHandle { addr, server, workers })
}

fn header(name: &str, value: &str) -> Header {
    Header::from_bytes(name.as_bytes(), value.as_bytes()).expect("static header is valid")
}

fn reply(req: Request, status: u16, body: String, content_type: &str) {
    let resp = Response::from_string(body)
        .with_status_code(status)
        .with_header(header("Content-Type", content_type))
        .with_header(header("Access-Control-Allow-Origin", "*"))
        .with_header(header("Access-Control-Allow-Headers", "Content-Type"));
    if let Err(e) = req.respond(resp) {
        log::debug!("client went away: {e}");
    }
}

fn status_of(e: &LabError) -> u16 {
    match e {
        LabError::NotFound(_) => 404,
        LabError::Conflict(_) => 409,
        LabError::Validation(_) | LabError::InvalidArgument(_) | LabError::Json(_) => 400,
        LabError::LlmTransport { .. } | LabError::LlmProtocol(_) => 502,
        _ => 500,
    }
}

/// JSON body; an empty body reads as `{}`.
fn body<T: DeserializeOwned>(req: &mut Request) -> Result<T> {
    let mut text = String::new();
    req.as_reader().take(MAX_BODY).read_to_string(&mut text)?;
    if text.trim().is_empty() {
        text = "{}".into();
    }
    Ok(serde_json::from_str(&text)?)
}

fn parse_filter(query: &str) -> Result<(ExportFilter, bool)> {
    let mut filter = ExportFilter::default();
    let mut csv = false;
    for pair in query.split('&').filter(|p| !p.is_empty()) {
        let (k, v) = pair.split_once('=').unwrap_or((pair, ""));
        match k {
            "format" => csv = v == "csv",
            "condition" => {
                filter.condition = Some(
                    FeedbackCondition::from_name(v).ok_or_else(|| LabError::Validation(format!("unknown condition {v}")))?,
                )
            }
            "status" => filter.status = Some(serde_json::from_value::<SessionStatus>(Value::String(v.into()))?),
            _ => return Err(LabError::Validation(format!("unknown query parameter {k}"))),
        }
    }
    Ok((filter, csv))
}

enum Reply {
    Json(u16, Value),
    Text(String, &'static str),
}

fn route(service: &SessionService, req: &mut Request) -> Result<Reply> {
    let url = req.url().to_string();
    let (path, query) = url.split_once('?').unwrap_or((&url, ""));
    let parts: Vec<&str> = path.trim_matches('/').split('/').collect();
    let method = req.method().clone();
    match (method, parts.as_slice()) {
        (Method::Post, ["sessions"]) => {
            let create: CreateRequest = body(req)?;
            let resp = service.create_session(&create)?;
            Ok(Reply::Json(201, service.participant_json(&resp)?))
        }
        (Method::Post, ["sessions", id, "round"]) => {
            let round: RoundRequest = body(req)?;
            let resp = service.submit_round(id, &round)?;
            Ok(Reply::Json(200, service.participant_json(&resp)?))
        }
        (Method::Get, ["sessions", id]) => Ok(Reply::Json(200, service.participant_json(&service.view(id)?)?)),
        (Method::Get, ["export"]) => {
            let (filter, csv) = parse_filter(query)?;
            Ok(if csv {
                Reply::Text(service.export_csv(&filter)?, "text/csv")
            } else {
                Reply::Text(service.export_jsonl(&filter)?, "application/x-ndjson")
            })
        }
        (Method::Get, ["health"]) => Ok(Reply::Json(200, json!({"ok": true}))),
        _ => Err(LabError::NotFound(path.to_string())),
    }
}

fn handle(service: &SessionService, mut req: Request) {
    if *req.method() == Method::Options {
        let resp = Response::empty(204)
            .with_header(header("Access-Control-Allow-Origin", "*"))
            .with_header(header("Access-Control-Allow-Methods", "GET, POST, OPTIONS"))
            .with_header(header("Access-Control-Allow-Headers", "Content-Type"));
        let _ = req.respond(resp);
        return;
    }
    log::debug!("{} {}", req.method(), req.url());
    match route(service, &mut req) {
        Ok(Reply::Json(status, v)) => reply(req, status, v.to_string(), "application/json"),
        Ok(Reply::Text(text, ct)) => reply(req, 200, text, ct),
        Err(e) => {
            let status = status_of(&e);
            if status >= 500 {
                log::error!("{} {}: {e}", req.method(), req.url());
            }
            reply(req, status, json!({"error": e.to_string()}).to_string(), "application/json");
        }
    }
}
