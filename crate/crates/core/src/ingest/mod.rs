//! Raw log ingestion: app events, screen-on intervals and EMA responses.
//!
//! Parsers never abort on a bad row. Each malformed row becomes a
//! [`Diagnostic`] carrying its 1-based line number, so
//! `records.len() + diagnostics.len()` always equals the number of data rows.

mod intervals;
mod parse;
mod work;
mod write;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use intervals::{clip_to_screen_on, normalize_screen_intervals, total_duration};
pub use parse::{parse_app_events, parse_ema, parse_screen_intervals, Format, ParseOutcome};
pub use work::{apply_work_filter, WorkHoursFilter};
pub use write::{write_app_events_csv, write_ema_csv, write_screen_csv};

use crate::time::Timestamp;

/// One usage interval of one app by one user.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AppEvent {
    pub user_id: String,
    pub app_id: String,
    pub start: Timestamp,
    pub end: Timestamp,
}

impl AppEvent {
    pub fn new(user_id: &str, app_id: &str, start: i64, end: i64) -> Self {
        AppEvent {
            user_id: user_id.to_owned(),
            app_id: app_id.to_ascii_lowercase(),
            start: Timestamp(start),
            end: Timestamp(end),
        }
    }

    pub fn duration(&self) -> i64 {
        self.end.0 - self.start.0
    }

    /// Copy of this event restricted to `[start, end)`, or `None` when the
    /// restriction is empty.
    pub fn restricted(&self, start: Timestamp, end: Timestamp) -> Option<AppEvent> {
        let s = self.start.max(start);
        let e = self.end.min(end);
        (s < e).then(|| AppEvent {
            start: s,
            end: e,
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: Timestamp,
    pub end: Timestamp,
}

/// A period during which a user's screen was on.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScreenInterval {
    pub user_id: String,
    pub start: Timestamp,
    pub end: Timestamp,
}

impl ScreenInterval {
    pub fn new(user_id: &str, start: i64, end: i64) -> Self {
        ScreenInterval {
            user_id: user_id.to_owned(),
            start: Timestamp(start),
            end: Timestamp(end),
        }
    }

    pub fn duration(&self) -> i64 {
        self.end.0 - self.start.0
    }
}

/// A single answer to the stress prompt, on the 1..=5 scale.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EmaResponse {
    pub user_id: String,
    pub at: Timestamp,
    pub level: u8,
}

impl EmaResponse {
    pub fn new(user_id: &str, at: i64, level: u8) -> Self {
        EmaResponse {
            user_id: user_id.to_owned(),
            at: Timestamp(at),
            level,
        }
    }
}

/// A rejected input row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: u64,
    pub reason: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line:{} {}", self.line, self.reason)
    }
}
