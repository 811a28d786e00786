//! Challenge sessions: one answer each, expiring after the TTL.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use subtle::ConstantTimeEq;

use crate::pool::PoolItem;
use spatial_captcha::manifest::Bin;

/// 128 random bits, hex encoded.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token(String);

impl Token {
    pub fn random() -> Self {
        let mut b = [0u8; 16];
        getrandom::fill(&mut b).expect("operating system RNG");
        Token(hex::encode(b))
    }

    pub fn parse(s: &str) -> Option<Self> {
        (s.len() == 32 && s.bytes().all(|c| c.is_ascii_hexdigit() && !c.is_ascii_uppercase())).then(|| Token(s.to_owned()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionState {
    Open,
    Answered,
    Expired,
}

#[derive(Debug, Clone)]
pub struct Session {
    pub item: Arc<PoolItem>,
    pub bin: Option<Bin>,
    pub issued_at: f64,
    pub expires_at: f64,
    pub state: SessionState,
    pub attempts: u32,
    pub panels: Vec<Token>,
    /// Respondent id used when the client sends none.
    pub fallback_respondent: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub correct: bool,
    pub response_time_s: f64,
    pub bin: Option<Bin>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum VerifyError {
    #[error("unknown session")]
    Unknown,
    #[error("session already answered")]
    Repeated,
    #[error("session expired")]
    Expired,
}

/// Snapshot row; carries no answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub token: Token,
    pub instance_id: String,
    pub issued_at: f64,
    pub expires_at: f64,
    pub state: SessionState,
    pub attempts: u32,
}

struct Panel {
    item: Arc<PoolItem>,
    file: String,
    expires_at: f64,
}

#[derive(Default)]
struct Tables {
    sessions: HashMap<Token, Session>,
    panels: HashMap<Token, Panel>,
}

#[derive(Default)]
pub struct Sessions {
    tables: Mutex<Tables>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionCounts {
    pub open: usize,
    pub answered: usize,
    pub expired: usize,
}

impl Sessions {
    /// Open a session; returns its token and panel tokens in presentation order.
    pub fn open(&self, item: Arc<PoolItem>, bin: Option<Bin>, now: f64, ttl: f64) -> (Token, Vec<Token>) {
        let token = Token::random();
        let panels: Vec<Token> = item.panel_files().iter().map(|_| Token::random()).collect();
        let mut t = self.tables.lock().expect("session lock");
        for (p, file) in panels.iter().zip(item.panel_files()) {
            t.panels.insert(
                p.clone(),
                Panel {
                    item: item.clone(),
                    file: file.to_owned(),
                    expires_at: now + ttl,
                },
            );
        }
        t.sessions.insert(
            token.clone(),
            Session {
                item,
                bin,
                issued_at: now,
                expires_at: now + ttl,
                state: SessionState::Open,
                attempts: 0,
                panels: panels.clone(),
                fallback_respondent: Token::random().0,
            },
        );
        (token, panels)
    }

    /// Panel tokens valid until `expires_at` without a session, for operator previews.
    pub fn register_panels(&self, item: Arc<PoolItem>, expires_at: f64) -> Vec<Token> {
        let mut t = self.tables.lock().expect("session lock");
        item.panel_files()
            .into_iter()
            .map(|file| {
                let p = Token::random();
                t.panels.insert(
                    p.clone(),
                    Panel {
                        item: item.clone(),
                        file: file.to_owned(),
                        expires_at,
                    },
                );
                p
            })
            .collect()
    }

    /// The single open→answered transition. Returns the verdict and the session as
    /// it was when answered.
    pub fn verify(&self, token: &Token, label: &str, now: f64, ttl: f64) -> Result<(Verdict, Session), VerifyError> {
        let mut t = self.tables.lock().expect("session lock");
        let s = t.sessions.get_mut(token).ok_or(VerifyError::Unknown)?;
        match s.state {
            SessionState::Answered => return Err(VerifyError::Repeated),
            SessionState::Expired => return Err(VerifyError::Expired),
            SessionState::Open => {}
        }
        let elapsed = (now - s.issued_at).max(0.0);
        if elapsed > ttl {
            s.state = SessionState::Expired;
            return Err(VerifyError::Expired);
        }
        s.state = SessionState::Answered;
        s.attempts += 1;
        let truth = s.item.instance.correct_label.as_bytes();
        let correct = bool::from(label.as_bytes().ct_eq(truth));
        let verdict = Verdict {
            correct,
            response_time_s: elapsed,
            bin: s.bin,
        };
        Ok((verdict, s.clone()))
    }

    pub fn panel(&self, token: &Token, now: f64) -> Option<Vec<u8>> {
        let t = self.tables.lock().expect("session lock");
        let p = t.panels.get(token).filter(|p| now <= p.expires_at)?;
        p.item.png.get(&p.file).cloned()
    }

    /// Mark overdue sessions expired and forget anything older than `now - keep`.
    pub fn sweep(&self, now: f64, keep: f64) {
        let mut t = self.tables.lock().expect("session lock");
        for s in t.sessions.values_mut() {
            if s.state == SessionState::Open && now > s.expires_at {
                s.state = SessionState::Expired;
            }
        }
        t.sessions.retain(|_, s| now <= s.expires_at + keep);
        t.panels.retain(|_, p| now <= p.expires_at + keep);
    }

    pub fn counts(&self) -> SessionCounts {
        let t = self.tables.lock().expect("session lock");
        t.sessions.values().fold(SessionCounts::default(), |mut c, s| {
            match s.state {
                SessionState::Open => c.open += 1,
                SessionState::Answered => c.answered += 1,
                SessionState::Expired => c.expired += 1,
            }
            c
        })
    }

    pub fn snapshot(&self) -> Vec<SessionRecord> {
        let t = self.tables.lock().expect("session lock");
        let mut rows: Vec<SessionRecord> = t
            .sessions
            .iter()
            .map(|(k, s)| SessionRecord {
                token: k.clone(),
                instance_id: s.item.instance.instance_id.clone(),
                issued_at: s.issued_at,
                expires_at: s.expires_at,
                state: s.state,
                attempts: s.attempts,
            })
            .collect();
        rows.sort_by(|a, b| a.issued_at.total_cmp(&b.issued_at).then_with(|| a.token.0.cmp(&b.token.0)));
        rows
    }

    /// Reinstate snapshot rows whose instance `lookup` still knows.
    pub fn restore(&self, rows: Vec<SessionRecord>, lookup: impl Fn(&str) -> Option<(Arc<PoolItem>, Option<Bin>)>) -> usize {
        let mut t = self.tables.lock().expect("session lock");
        let mut n = 0;
        for r in rows {
            let Some((item, bin)) = lookup(&r.instance_id) else { continue };
            t.sessions.insert(
                r.token,
                Session {
                    item,
                    bin,
                    issued_at: r.issued_at,
                    expires_at: r.expires_at,
                    state: r.state,
                    attempts: r.attempts,
                    panels: Vec::new(),
                    fallback_respondent: Token::random().0,
                },
            );
            n += 1;
        }
        n
    }
}
