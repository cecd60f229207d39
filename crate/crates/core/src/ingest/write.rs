use std::io::Write;

use crate::error::{Error, Result};
use crate::ingest::{AppEvent, EmaResponse, ScreenInterval};

fn finish<W: Write>(mut wr: csv::Writer<W>, what: &str) -> Result<()> {
    wr.flush().map_err(|e| Error::io(format!("writing {what}"), e))
}

pub fn write_app_events_csv<W: Write>(w: W, events: &[AppEvent]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["user_id", "app_id", "start_ts", "end_ts"])?;
    for e in events {
        wr.write_record([
            e.user_id.as_str(),
            e.app_id.as_str(),
            &e.start.to_string(),
            &e.end.to_string(),
        ])?;
    }
    finish(wr, "app events")
}

pub fn write_screen_csv<W: Write>(w: W, screen: &[ScreenInterval]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["user_id", "start_ts", "end_ts"])?;
    for s in screen {
        wr.write_record([s.user_id.as_str(), &s.start.to_string(), &s.end.to_string()])?;
    }
    finish(wr, "screen intervals")
}

pub fn write_ema_csv<W: Write>(w: W, responses: &[EmaResponse]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["user_id", "ts", "level"])?;
    for r in responses {
        wr.write_record([r.user_id.as_str(), &r.at.to_string(), &r.level.to_string()])?;
    }
    finish(wr, "ema responses")
}
