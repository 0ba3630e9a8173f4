use std::collections::VecDeque;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use super::client::{BackendError, ChatBackend, ChatRequest};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MockReply {
    Text(String),
    /// A transient transport failure.
    Fail,
    /// A body without a completion in it.
    Malformed,
}

impl MockReply {
    pub fn text(s: impl Into<String>) -> Self {
        MockReply::Text(s.into())
    }
}

type Responder = dyn Fn(&ChatRequest) -> MockReply + Send + Sync;

enum Script {
    Queue(Mutex<VecDeque<MockReply>>, Mutex<Option<MockReply>>),
    Responder(Box<Responder>),
}

/// In-process stand-in for a chat endpoint.
///
/// A scripted mock plays its replies in order and then keeps repeating the
/// last one; an empty script always fails.
pub struct MockBackend {
    script: Script,
    calls: Arc<AtomicUsize>,
    requests: Arc<Mutex<Vec<ChatRequest>>>,
}

impl MockBackend {
    pub fn scripted(replies: Vec<MockReply>) -> Self {
        MockBackend {
            script: Script::Queue(Mutex::new(replies.into()), Mutex::new(None)),
            calls: Arc::default(),
            requests: Arc::default(),
        }
    }

    pub fn responder(f: impl Fn(&ChatRequest) -> MockReply + Send + Sync + 'static) -> Self {
        MockBackend { script: Script::Responder(Box::new(f)), calls: Arc::default(), requests: Arc::default() }
    }

    /// Handle on the number of `send` calls made so far.
    pub fn calls(&self) -> Arc<AtomicUsize> {
        Arc::clone(&self.calls)
    }

    pub fn requests(&self) -> Arc<Mutex<Vec<ChatRequest>>> {
        Arc::clone(&self.requests)
    }
}

impl ChatBackend for MockBackend {
    fn send(&self, request: &ChatRequest, _timeout: Duration) -> Result<String, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.requests.lock().unwrap_or_else(|e| e.into_inner()).push(request.clone());
        let reply = match &self.script {
            Script::Responder(f) => f(request),
            Script::Queue(queue, last) => {
                let mut last = last.lock().unwrap_or_else(|e| e.into_inner());
                match queue.lock().unwrap_or_else(|e| e.into_inner()).pop_front() {
                    Some(r) => {
                        *last = Some(r.clone());
                        r
                    }
                    None => last.clone().unwrap_or(MockReply::Fail),
                }
            }
        };
        match reply {
            MockReply::Text(t) => Ok(t),
            MockReply::Fail => Err(BackendError::Transient("scripted failure".into())),
            MockReply::Malformed => Err(BackendError::Protocol("scripted malformed body".into())),
        }
    }
}
