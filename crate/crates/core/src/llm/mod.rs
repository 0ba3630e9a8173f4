//! Chat-completions client, scripted mock, and reply parsing.

mod client;
mod extract;
mod mock;

pub use client::{BackendError, ChatBackend, ChatRequest, HttpBackend, LlmClient, ModelConfig};
pub use extract::{extract_triple, format_triple, Separator};
pub use mock::{MockBackend, MockReply};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::Assistant, content: content.into() }
    }

    /// System and user messages must carry content.
    pub fn is_valid(&self) -> bool {
        self.role == Role::Assistant || !self.content.trim().is_empty()
    }
}
