use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{LabError, Result};
use crate::experiment::coding::map_free_text;
use crate::feedback::{FeedbackCondition, FeedbackSource, FeedbackTables, LlmFeedback, SamplerAgent, Stated};
use crate::llm::{ChatMessage, LlmClient, ModelConfig};
use crate::rule_space::{HypothesisSpace, Rule, RuleTag, SpaceConfig, Triple};
use crate::seeding::{seeded, stream};

use super::{
    now_ms, sort_records, write_jsonl, write_summary_csv, Presented, Provenance, RoundEntry, SessionRecord,
    SessionStatus, SessionStore,
};

pub const INSTRUCTIONS: &str = "You will see sequences of three numbers. Every sequence follows a hidden rule. \
Each round, write down what you think the rule is and rate how likely it is that your rule is correct, \
from 0 (certainly incorrect) to 100 (certainly correct). The AI agent will then show you another sequence.";

const OPENING: &str = "The first sequence is 2-4-6.";
const ID_SALT: u64 = 0x5e55_1011;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub bind: String,
    pub store_path: Option<PathBuf>,
    pub seed: u64,
    pub rounds: usize,
    /// Conditions for randomized assignment; defaults to the experiment
    /// conditions that can run with the configured backends.
    pub conditions: Option<Vec<FeedbackCondition>>,
    pub space: SpaceConfig,
    pub true_rule: Rule,
    pub llm: Option<ModelConfig>,
    pub workers: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: "127.0.0.1:8080".into(),
            store_path: None,
            seed: 0,
            rounds: 3,
            conditions: None,
            space: SpaceConfig::default(),
            true_rule: RuleTag::AllEven.into(),
            llm: None,
            workers: 4,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CreateRequest {
    pub condition: Option<FeedbackCondition>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CreateResponse {
    pub session_id: String,
    pub round: usize,
    pub rounds: usize,
    pub sequence: Triple,
    pub sequence_text: String,
    pub reply: String,
    pub instructions: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRequest {
    pub hypothesis: String,
    pub confidence: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RoundResponse {
    Next { round: usize, rounds: usize, sequence: Triple, sequence_text: String, reply: String },
    Complete { summary: String, completion_code: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticipantRound {
    pub round: usize,
    pub sequence: Triple,
    pub reply: Option<String>,
    pub hypothesis: String,
    pub confidence: f64,
}

/// What a participant may see of their own session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticipantView {
    pub session_id: String,
    pub status: SessionStatus,
    pub round: usize,
    pub rounds: usize,
    pub history: Vec<ParticipantRound>,
    pub sequence: Option<Triple>,
    pub reply: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExportFilter {
    pub condition: Option<FeedbackCondition>,
    pub status: Option<SessionStatus>,
}

impl ExportFilter {
    fn keeps(&self, r: &SessionRecord) -> bool {
        self.condition.is_none_or(|c| c == r.condition) && self.status.is_none_or(|s| s == r.status)
    }
}

struct Registry {
    sessions: HashMap<String, Arc<Mutex<SessionRecord>>>,
    created: u64,
}

pub struct SessionService {
    cfg: ServiceConfig,
    space: Arc<HypothesisSpace>,
    tables: Arc<FeedbackTables>,
    client: Option<Arc<LlmClient>>,
    enabled: Vec<FeedbackCondition>,
    registry: Mutex<Registry>,
    store: Mutex<SessionStore>,
    forbidden: Vec<String>,
}

fn lock<T>(m: &Mutex<T>) -> std::sync::MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|p| p.into_inner())
}

impl SessionService {
    /// Build the service, replaying any existing store.
    pub fn new(cfg: ServiceConfig, client: Option<Arc<LlmClient>>) -> Result<Self> {
        if cfg.rounds < 2 {
            return Err(LabError::Config("sessions need at least two rounds".into()));
        }
        let space = Arc::new(cfg.space.build()?);
        let tables = Arc::new(FeedbackTables::new(Arc::clone(&space), cfg.true_rule.clone())?);
        let enabled = match &cfg.conditions {
            Some(list) => list.clone(),
            None => FeedbackCondition::EXPERIMENT.into_iter().filter(|c| !c.needs_llm() || client.is_some()).collect(),
        };
        if enabled.is_empty() {
            return Err(LabError::Config("no conditions enabled".into()));
        }
        if client.is_none() && enabled.iter().any(|c| c.needs_llm()) {
            return Err(LabError::Config("llm conditions enabled without an llm client".into()));
        }
        let store = match &cfg.store_path {
            Some(p) => SessionStore::open(p)?,
            None => SessionStore::in_memory(),
        };
        let existing = store.replay()?;
        let created = existing.len() as u64;
        let sessions = existing.into_iter().map(|r| (r.session_id.clone(), Arc::new(Mutex::new(r)))).collect();
        let mut forbidden: Vec<String> = FeedbackCondition::ALL.iter().map(|c| c.name().to_string()).collect();
        forbidden.push(cfg.true_rule.name().to_string());
        log::info!("session service ready with {created} stored sessions, conditions {enabled:?}");
        Ok(SessionService {
            cfg,
            space,
            tables,
            client,
            enabled,
            registry: Mutex::new(Registry { sessions, created }),
            store: Mutex::new(store),
            forbidden,
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.cfg
    }

    pub fn space(&self) -> &Arc<HypothesisSpace> {
        &self.space
    }

    pub fn enabled_conditions(&self) -> &[FeedbackCondition] {
        &self.enabled
    }

    fn persist(&self, rec: &SessionRecord, durable: bool) -> Result<()> {
        lock(&self.store).append(rec, durable)
    }

    pub fn create_session(&self, req: &CreateRequest) -> Result<CreateResponse> {
        let mut reg = lock(&self.registry);
        let n = reg.created;
        let mut rng = stream(self.cfg.seed, n);
        let condition = match req.condition {
            Some(c) => c,
            None => self.enabled[rng.gen_range(0..self.enabled.len())],
        };
        if condition.needs_llm() && self.client.is_none() {
            return Err(LabError::Config(format!("{condition} needs an llm client")));
        }
        let seed = req.seed.unwrap_or_else(|| rng.gen());
        let mut id_rng = stream(self.cfg.seed ^ ID_SALT, n);
        let mut session_id = format!("{:016x}", id_rng.gen::<u64>());
        while reg.sessions.contains_key(&session_id) {
            session_id = format!("{:016x}", id_rng.gen::<u64>());
        }
        let llm = condition.needs_llm().then(|| self.client.as_ref().map(|c| c.config())).flatten();
        let now = now_ms();
        let rec = SessionRecord {
            session_id: session_id.clone(),
            condition,
            rounds_planned: self.cfg.rounds,
            rounds: Vec::new(),
            pending: Some(Presented { triple: Triple::SEED, reply: OPENING.into(), fallback: false }),
            status: SessionStatus::Active,
            created_at: now,
            updated_at: now,
            provenance: Provenance {
                seed,
                model_config_hash: llm.map(|c| c.config_hash()),
                temperature: llm.and_then(|c| c.temperature),
                fallbacks: 0,
                simulated: false,
                aborted: None,
            },
        };
        self.persist(&rec, false)?;
        reg.sessions.insert(session_id.clone(), Arc::new(Mutex::new(rec)));
        reg.created += 1;
        Ok(CreateResponse {
            session_id,
            round: 1,
            rounds: self.cfg.rounds,
            sequence: Triple::SEED,
            sequence_text: Triple::SEED.to_string(),
            reply: OPENING.into(),
            instructions: INSTRUCTIONS.into(),
        })
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<SessionRecord>>> {
        lock(&self.registry).sessions.get(id).cloned().ok_or_else(|| LabError::NotFound(id.to_string()))
    }

    fn next_feedback(&self, rec: &SessionRecord, stated: &Stated) -> Result<Presented> {
        let round = rec.rounds.len() as u64;
        let mut rng = stream(rec.provenance.seed, round);
        if rec.condition.needs_llm() {
            let client = self.client.as_ref().ok_or_else(|| LabError::Config("llm client missing".into()))?;
            let mut transcript = vec![ChatMessage::assistant(OPENING)];
            for r in &rec.rounds[..rec.rounds.len() - 1] {
                transcript.push(ChatMessage::user(format!("My current guess about the rule: {}", r.hypothesis)));
                let next = &rec.rounds[r.round];
                transcript.push(ChatMessage::assistant(next.reply.clone().unwrap_or_else(|| next.presented.to_string())));
            }
            let mut agent = LlmFeedback::new(rec.condition, Arc::clone(client), self.cfg.true_rule.clone(), rec.rounds_planned, self.space.domain())?
                .with_transcript(transcript);
            let fb = agent.next(stated, &mut rng)?;
            return Ok(Presented { triple: fb.triple, reply: fb.reply, fallback: fb.fallback });
        }
        let mut agent = SamplerAgent::new(rec.condition, Arc::clone(&self.tables), &mut seeded(rec.provenance.seed))?
            .with_cursor(rec.rounds.len() - 1);
        let fb = agent.next(stated, &mut rng)?;
        Ok(Presented { triple: fb.triple, reply: fb.reply, fallback: fb.fallback })
    }

    pub fn submit_round(&self, id: &str, req: &RoundRequest) -> Result<RoundResponse> {
        let c = req.confidence;
        if !c.is_finite() || c.fract() != 0.0 || !(0.0..=100.0).contains(&c) {
            return Err(LabError::Validation(format!("confidence must be an integer in [0, 100], got {c}")));
        }
        let hypothesis = req.hypothesis.trim();
        if hypothesis.is_empty() {
            return Err(LabError::Validation("hypothesis must not be empty".into()));
        }
        let cell = self.session(id)?;
        let mut rec = lock(&cell);
        if rec.status != SessionStatus::Active {
            return Err(LabError::Conflict(format!("session {id} is {:?}", rec.status)));
        }
        let shown = rec.pending.clone().ok_or_else(|| LabError::Conflict(format!("session {id} has nothing pending")))?;
        let mapped = map_free_text(hypothesis).and_then(|tag| self.space.index_of_extension(&tag.into()));
        let mut next = rec.clone();
        next.rounds.push(RoundEntry {
            round: rec.rounds.len() + 1,
            presented: shown.triple,
            reply: Some(shown.reply),
            fallback: shown.fallback,
            hypothesis: hypothesis.to_string(),
            reported_rule: None,
            mapped_rule: mapped.map(|h| self.space.rule(h).name().to_string()),
            confidence: c,
            submitted_at: Some(now_ms()),
        });
        next.updated_at = now_ms();
        let response = if next.rounds.len() >= next.rounds_planned {
            next.pending = None;
            next.status = SessionStatus::Complete;
            self.persist(&next, true)?;
            RoundResponse::Complete {
                summary: format!(
                    "Thank you. You completed all {} rounds. Your final rule was: \"{hypothesis}\".",
                    next.rounds_planned
                ),
                completion_code: id.chars().take(8).collect::<String>().to_uppercase(),
            }
        } else {
            let shown = self.next_feedback(&next, &Stated::text(hypothesis, mapped))?;
            next.provenance.fallbacks += usize::from(shown.fallback);
            next.pending = Some(shown.clone());
            self.persist(&next, false)?;
            RoundResponse::Next {
                round: next.rounds.len() + 1,
                rounds: next.rounds_planned,
                sequence: shown.triple,
                sequence_text: shown.triple.to_string(),
                reply: shown.reply,
            }
        };
        *rec = next;
        Ok(response)
    }

    pub fn view(&self, id: &str) -> Result<ParticipantView> {
        let cell = self.session(id)?;
        let rec = lock(&cell);
        Ok(ParticipantView {
            session_id: rec.session_id.clone(),
            status: rec.status,
            round: (rec.rounds.len() + 1).min(rec.rounds_planned),
            rounds: rec.rounds_planned,
            history: rec
                .rounds
                .iter()
                .map(|r| ParticipantRound {
                    round: r.round,
                    sequence: r.presented,
                    reply: r.reply.clone(),
                    hypothesis: r.hypothesis.clone(),
                    confidence: r.confidence,
                })
                .collect(),
            sequence: rec.pending.as_ref().map(|p| p.triple),
            reply: rec.pending.as_ref().map(|p| p.reply.clone()),
        })
    }

    /// Researcher-side record, condition included.
    pub fn record(&self, id: &str) -> Result<SessionRecord> {
        let cell = self.session(id)?;
        let rec = lock(&cell).clone();
        Ok(rec)
    }

    /// Serialize a participant payload after checking it is condition-blind.
    pub fn participant_json<T: Serialize>(&self, payload: &T) -> Result<Value> {
        let value = serde_json::to_value(payload)?;
        check_blind(&value, &self.forbidden)?;
        Ok(value)
    }

    /// Consistent snapshot in export order.
    pub fn export(&self, filter: &ExportFilter) -> Vec<SessionRecord> {
        let cells: Vec<_> = lock(&self.registry).sessions.values().cloned().collect();
        let mut out: Vec<SessionRecord> = cells.iter().map(|c| lock(c).clone()).filter(|r| filter.keeps(r)).collect();
        sort_records(&mut out);
        out
    }

    pub fn export_jsonl(&self, filter: &ExportFilter) -> Result<String> {
        let mut buf = Vec::new();
        write_jsonl(&self.export(filter), &mut buf)?;
        String::from_utf8(buf).map_err(|e| LabError::Persistence(e.to_string()))
    }

    pub fn export_csv(&self, filter: &ExportFilter) -> Result<String> {
        let mut buf = Vec::new();
        write_summary_csv(&self.export(filter), &self.space, &self.cfg.true_rule, &mut buf)?;
        String::from_utf8(buf).map_err(|e| LabError::Persistence(e.to_string()))
    }

    /// Add records from an earlier export. Existing ids are a conflict.
    pub fn import(&self, records: Vec<SessionRecord>) -> Result<usize> {
        let mut reg = lock(&self.registry);
        if let Some(dup) = records.iter().find(|r| reg.sessions.contains_key(&r.session_id)) {
            return Err(LabError::Conflict(format!("session {} already exists", dup.session_id)));
        }
        let n = records.len();
        for (i, r) in records.into_iter().enumerate() {
            self.persist(&r, i + 1 == n)?;
            reg.sessions.insert(r.session_id.clone(), Arc::new(Mutex::new(r)));
            reg.created += 1;
        }
        Ok(n)
    }
}

fn check_blind(value: &Value, forbidden: &[String]) -> Result<()> {
    let leak = |what: &str| Err(LabError::Validation(format!("participant payload would reveal {what}")));
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                if k == "condition" || k == "true_rule" {
                    return leak(k);
                }
                check_blind(v, forbidden)?;
            }
            Ok(())
        }
        Value::Array(items) => items.iter().try_for_each(|v| check_blind(v, forbidden)),
        Value::String(s) => match forbidden.iter().find(|f| s.contains(f.as_str())) {
            Some(f) => leak(f),
            None => Ok(()),
        },
        _ => Ok(()),
    }
}
