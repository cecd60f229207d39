use std::collections::BTreeMap;

use crate::ingest::{AppEvent, ScreenInterval, Span};

/// Merges overlapping and abutting screen intervals per user. Output is
/// grouped by user id (ascending) and sorted by start within each user.
/// Zero-length intervals cover no time and are dropped.
pub fn normalize_screen_intervals(raw: &[ScreenInterval]) -> Vec<ScreenInterval> {
    let mut out = Vec::with_capacity(raw.len());
    for (user, spans) in spans_by_user(raw) {
        out.extend(spans.into_iter().map(|s| ScreenInterval {
            user_id: user.to_owned(),
            start: s.start,
            end: s.end,
        }));
    }
    out
}

fn spans_by_user(raw: &[ScreenInterval]) -> BTreeMap<&str, Vec<Span>> {
    let mut by_user: BTreeMap<&str, Vec<Span>> = BTreeMap::new();
    for iv in raw.iter().filter(|iv| iv.start < iv.end) {
        by_user.entry(iv.user_id.as_str()).or_default().push(Span {
            start: iv.start,
            end: iv.end,
        });
    }
    for spans in by_user.values_mut() {
        spans.sort_unstable();
        let mut merged: Vec<Span> = Vec::with_capacity(spans.len());
        for s in spans.drain(..) {
            match merged.last_mut() {
                Some(last) if s.start <= last.end => last.end = last.end.max(s.end),
                _ => merged.push(s),
            }
        }
        *spans = merged;
    }
    by_user
}

/// Intersects every event with the screen-on time of its user. An event
/// overlapping `n` screen intervals yields `n` pieces; events of users with
/// no screen data vanish. Output keeps input event order.
pub fn clip_to_screen_on(events: &[AppEvent], screen: &[ScreenInterval]) -> Vec<AppEvent> {
    let by_user = spans_by_user(screen);
    let mut out = Vec::with_capacity(events.len());
    for ev in events {
        let Some(spans) = by_user.get(ev.user_id.as_str()) else {
            continue;
        };
        let first = spans.partition_point(|s| s.end <= ev.start);
        for s in spans[first..].iter().take_while(|s| s.start < ev.end) {
            if let Some(piece) = ev.restricted(s.start, s.end) {
                out.push(piece);
            }
        }
    }
    out
}

pub fn total_duration(events: &[AppEvent]) -> i64 {
    events.iter().map(AppEvent::duration).sum()
}
