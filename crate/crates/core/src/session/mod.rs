//! Session records shared by simulated and human participants, their
//! append-only store, the session service, and its HTTP front end.

mod http;
mod service;
mod store;

pub use http::{serve, ServerHandle};
pub use service::{
    CreateRequest, CreateResponse, ExportFilter, ParticipantRound, ParticipantView, RoundRequest, RoundResponse,
    ServiceConfig, SessionService, INSTRUCTIONS,
};
pub use store::SessionStore;

use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::agent::{delta_from, AgentTrajectory};
use crate::error::Result;
use crate::experiment::coding::{keyword_code, Code};
use crate::feedback::FeedbackCondition;
use crate::rule_space::{HypothesisSpace, Rule, Triple};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Active,
    Complete,
    Abandoned,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundEntry {
    /// 1-based.
    pub round: usize,
    pub presented: Triple,
    /// The agent message that delivered `presented`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reply: Option<String>,
    pub fallback: bool,
    pub hypothesis: String,
    /// Catalog rule actually held, for simulated agents.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reported_rule: Option<String>,
    /// Catalog rule the keyword mapper assigned to `hypothesis`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mapped_rule: Option<String>,
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub submitted_at: Option<u64>,
}

/// A triple shown to the participant and not yet answered.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Presented {
    pub triple: Triple,
    pub reply: String,
    pub fallback: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_config_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    pub fallbacks: usize,
    pub simulated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: String,
    pub condition: FeedbackCondition,
    pub rounds_planned: usize,
    pub rounds: Vec<RoundEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pending: Option<Presented>,
    pub status: SessionStatus,
    pub created_at: u64,
    pub updated_at: u64,
    pub provenance: Provenance,
}

pub fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

impl SessionRecord {
    /// Express a simulated trajectory in the shared record format.
    pub fn from_trajectory(t: &AgentTrajectory, session_id: String, space: &HypothesisSpace, rounds_planned: usize) -> Self {
        let rounds: Vec<RoundEntry> = t
            .rounds
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let rule = space.rule(r.reported);
                RoundEntry {
                    round: i + 1,
                    presented: r.presented,
                    reply: r.reply.clone(),
                    fallback: r.fallback,
                    hypothesis: rule.describe().to_string(),
                    reported_rule: Some(rule.name().to_string()),
                    mapped_rule: Some(rule.name().to_string()),
                    confidence: r.confidence,
                    submitted_at: None,
                }
            })
            .collect();
        let complete = t.is_complete(rounds_planned);
        SessionRecord {
            session_id,
            condition: t.condition,
            rounds_planned,
            provenance: Provenance {
                seed: t.seed,
                fallbacks: rounds.iter().filter(|r| r.fallback).count(),
                simulated: true,
                aborted: t.aborted.clone(),
                ..Default::default()
            },
            rounds,
            pending: None,
            status: if complete { SessionStatus::Complete } else { SessionStatus::Abandoned },
            created_at: 0,
            updated_at: 0,
        }
    }

    fn has_final(&self) -> bool {
        self.rounds.len() >= self.rounds_planned && self.rounds_planned > 0
    }

    fn final_entry(&self) -> Option<&RoundEntry> {
        self.has_final().then(|| &self.rounds[self.rounds_planned - 1])
    }

    /// Whether the final hypothesis is the true rule; `None` when missing or
    /// uncodeable.
    ///
    /// Simulated rounds carry the held rule and are judged extensionally;
    /// free text goes through the keyword coder.
    pub fn discovery(&self, space: &HypothesisSpace, true_rule: &Rule) -> Option<bool> {
        let last = self.final_entry()?;
        if let Some(name) = &last.reported_rule {
            let h = space.index_of_name(name)?;
            return Some(space.same_extension(h, true_rule));
        }
        match keyword_code(&last.hypothesis, true_rule, space.domain()) {
            Code::Correct => Some(true),
            Code::Incorrect => Some(false),
            Code::Unparseable => None,
        }
    }

    /// Final-round confidence minus first-round confidence.
    pub fn delta_belief(&self) -> Option<f64> {
        delta_from(self.rounds.first().map(|r| r.confidence), self.final_entry().map(|r| r.confidence))
    }

    pub fn fallbacks(&self) -> usize {
        self.rounds.iter().filter(|r| r.fallback).count()
    }
}

/// Stable export order: creation time, then id.
pub fn sort_records(records: &mut [SessionRecord]) {
    records.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.session_id.cmp(&b.session_id)));
}

pub fn write_jsonl<W: Write>(records: &[SessionRecord], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_jsonl(text: &str) -> Result<Vec<SessionRecord>> {
    text.lines().filter(|l| !l.trim().is_empty()).map(|l| Ok(serde_json::from_str(l)?)).collect()
}

#[derive(Debug, Serialize)]
struct SummaryRow<'a> {
    session_id: &'a str,
    condition: FeedbackCondition,
    discovery: Option<bool>,
    conf_r1: Option<f64>,
    #[serde(rename = "conf_rR")]
    conf_r_final: Option<f64>,
    delta_belief: Option<f64>,
    fallbacks: usize,
}

const SUMMARY_HEADER: [&str; 7] = ["session_id", "condition", "discovery", "conf_r1", "conf_rR", "delta_belief", "fallbacks"];

/// One row per session; empty cells for missing measures.
pub fn write_summary_csv<W: Write>(records: &[SessionRecord], space: &HypothesisSpace, true_rule: &Rule, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in records {
        w.serialize(SummaryRow {
            session_id: &r.session_id,
            condition: r.condition,
            discovery: r.discovery(space, true_rule),
            conf_r1: r.rounds.first().map(|e| e.confidence),
            conf_r_final: r.final_entry().map(|e| e.confidence),
            delta_belief: r.delta_belief(),
            fallbacks: r.fallbacks(),
        })?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::{run_trajectory, Reporting};
    use crate::feedback::FeedbackTables;
    use crate::rule_space::{Domain, RuleTag};
    use std::sync::Arc;

    fn human(confs: &[f64], texts: &[&str], planned: usize) -> SessionRecord {
        SessionRecord {
            session_id: "h1".into(),
            condition: FeedbackCondition::RuleConfirming,
            rounds_planned: planned,
            rounds: confs
                .iter()
                .zip(texts)
                .enumerate()
                .map(|(i, (&c, t))| RoundEntry {
                    round: i + 1,
                    presented: Triple::SEED,
                    reply: None,
                    fallback: i == 1,
                    hypothesis: t.to_string(),
                    reported_rule: None,
                    mapped_rule: None,
                    confidence: c,
                    submitted_at: Some(1),
                })
                .collect(),
            pending: None,
            status: SessionStatus::Complete,
            created_at: 5,
            updated_at: 6,
            provenance: Provenance::default(),
        }
    }

    #[test]
    fn human_measures() {
        let space = HypothesisSpace::default_space(Domain::monte_carlo());
        let ae: Rule = RuleTag::AllEven.into();
        let r = human(&[80.0, 70.0, 60.0], &["up by 2", "up by 2", "even numbers"], 3);
        assert_eq!(r.delta_belief(), Some(-20.0));
        assert_eq!(r.discovery(&space, &ae), Some(true));
        let partial = human(&[80.0, 70.0], &["a", "b"], 3);
        assert_eq!((partial.delta_belief(), partial.discovery(&space, &ae)), (None, None));
        let blank = human(&[50.0, 50.0, 50.0], &["x", "y", ""], 3);
        assert_eq!((blank.delta_belief(), blank.discovery(&space, &ae)), (Some(0.0), None));
    }

    #[test]
    fn summary_csv_layout() {
        let space = HypothesisSpace::default_space(Domain::monte_carlo());
        let ae: Rule = RuleTag::AllEven.into();
        let mut buf = Vec::new();
        write_summary_csv(&[], &space, &ae, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "session_id,condition,discovery,conf_r1,conf_rR,delta_belief,fallbacks\n");
        let mut buf = Vec::new();
        write_summary_csv(&[human(&[80.0, 70.0, 60.0], &["a", "b", "even"], 3)], &space, &ae, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1), Some("h1,RULE_CONFIRMING,true,80.0,60.0,-20.0,1"));
    }

    #[test]
    fn trajectory_measures_survive_serialization() {
        let space = Arc::new(HypothesisSpace::default_space(Domain::monte_carlo()));
        let ae: Rule = RuleTag::AllEven.into();
        let tables = Arc::new(FeedbackTables::new(Arc::clone(&space), ae.clone()).unwrap());
        let records: Vec<SessionRecord> = (0..50)
            .map(|s| {
                let t = run_trajectory(&tables, FeedbackCondition::RuleDisconfirming, 3, Reporting::Sampled, s).unwrap();
                let r = SessionRecord::from_trajectory(&t, format!("sim-{s}"), &space, 3);
                assert_eq!(r.delta_belief(), crate::agent::delta_belief(&t, 3));
                assert_eq!(r.discovery(&space, &ae), crate::agent::discovery(&t, &space, &ae));
                r
            })
            .collect();
        let mut buf = Vec::new();
        write_jsonl(&records, &mut buf).unwrap();
        let back = read_jsonl(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, records);
        for (a, b) in records.iter().zip(&back) {
            assert_eq!(a.delta_belief().map(f64::to_bits), b.delta_belief().map(f64::to_bits));
        }
    }
}
