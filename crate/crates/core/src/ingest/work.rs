use chrono::{NaiveDate, NaiveTime};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::AppEvent;
use crate::time;

/// Restricts usage to working hours, Monday to Friday, in a given zone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkHoursFilter {
    pub enabled: bool,
    pub weekday_start: NaiveTime,
    pub weekday_end: NaiveTime,
    pub timezone: String,
}

impl Default for WorkHoursFilter {
    fn default() -> Self {
        WorkHoursFilter {
            enabled: false,
            weekday_start: NaiveTime::from_hms_opt(9, 0, 0).unwrap(),
            weekday_end: NaiveTime::from_hms_opt(18, 0, 0).unwrap(),
            timezone: "UTC".to_owned(),
        }
    }
}

impl WorkHoursFilter {
    pub fn enabled(start: NaiveTime, end: NaiveTime, timezone: &str) -> Self {
        WorkHoursFilter {
            enabled: true,
            weekday_start: start,
            weekday_end: end,
            timezone: timezone.to_owned(),
        }
    }

    pub fn validate(&self) -> Result<Option<Tz>> {
        if !self.enabled {
            return Ok(None);
        }
        if self.weekday_start >= self.weekday_end {
            return Err(Error::Config(format!(
                "work hours start {} is not before end {}",
                self.weekday_start, self.weekday_end
            )));
        }
        time::parse_timezone(&self.timezone).map(Some)
    }
}

/// Clips events to `[weekday_start, weekday_end)` on local weekdays. A
/// disabled filter returns the input unchanged.
pub fn apply_work_filter(events: &[AppEvent], filter: &WorkHoursFilter) -> Result<Vec<AppEvent>> {
    let Some(tz) = filter.validate()? else {
        return Ok(events.to_vec());
    };
    let mut out = Vec::with_capacity(events.len());
    for ev in events {
        let first = ev.start.local_date(tz);
        let last = ev.end.local_date(tz);
        let mut day: NaiveDate = first;
        while day <= last {
            if time::is_weekday(day) {
                let open = time::local_instant(tz, day, filter.weekday_start);
                let close = time::local_instant(tz, day, filter.weekday_end);
                if let Some(piece) = ev.restricted(open, close) {
                    out.push(piece);
                }
            }
            day = day.succ_opt().expect("date in range");
        }
    }
    Ok(out)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::Timestamp;

    fn ts(s: &str) -> i64 {
        Timestamp::parse(s).unwrap().0
    }

    fn nine_to_six(tz: &str) -> WorkHoursFilter {
        WorkHoursFilter::enabled(
            NaiveTime::from_hms_opt(9, 0, 0).unwrap(),
            NaiveTime::from_hms_opt(18, 0, 0).unwrap(),
            tz,
        )
    }

    #[test]
    fn disabled_is_identity() {
        let evs = vec![AppEvent::new("u", "a", 0, 100), AppEvent::new("u", "b", 5, 6)];
        assert_eq!(apply_work_filter(&evs, &WorkHoursFilter::default()).unwrap(), evs);
    }

    #[test]
    fn weekend_removed() {
        // 2013-11-09 is a Saturday.
        let evs = vec![AppEvent::new("u", "a", ts("2013-11-09T10:00:00Z"), ts("2013-11-09T11:00:00Z"))];
        assert!(apply_work_filter(&evs, &nine_to_six("UTC")).unwrap().is_empty());
    }

    #[test]
    fn monday_morning_clipped() {
        let evs = vec![AppEvent::new("u", "a", ts("2013-11-04T08:30:00Z"), ts("2013-11-04T09:30:00Z"))];
        let out = apply_work_filter(&evs, &nine_to_six("UTC")).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].start.0, ts("2013-11-04T09:00:00Z"));
        assert_eq!(out[0].end.0, ts("2013-11-04T09:30:00Z"));
    }

    #[test]
    fn zone_shifts_window() {
        // 08:30Z is 09:30 in Rome (CET, UTC+1 in November).
        let evs = vec![AppEvent::new("u", "a", ts("2013-11-04T07:30:00Z"), ts("2013-11-04T08:30:00Z"))];
        let out = apply_work_filter(&evs, &nine_to_six("Europe/Rome")).unwrap();
        assert_eq!(out[0].start.0, ts("2013-11-04T08:00:00Z"));
        assert_eq!(out[0].end.0, ts("2013-11-04T08:30:00Z"));
    }

    #[test]
    fn multi_day_event_split_per_workday() {
        // Friday 17:00 to Monday 10:00 keeps Fri 17-18 and Mon 9-10.
        let evs = vec![AppEvent::new("u", "a", ts("2013-11-08T17:00:00Z"), ts("2013-11-11T10:00:00Z"))];
        let out = apply_work_filter(&evs, &nine_to_six("UTC")).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out.iter().map(AppEvent::duration).sum::<i64>(), 7200);
    }

    #[test]
    fn bad_config() {
        let evs = vec![AppEvent::new("u", "a", 0, 1)];
        assert!(apply_work_filter(&evs, &nine_to_six("Nowhere/Land")).unwrap_err().is_config());
        let mut inverted = nine_to_six("UTC");
        std::mem::swap(&mut inverted.weekday_start, &mut inverted.weekday_end);
        assert!(apply_work_filter(&evs, &inverted).unwrap_err().is_config());
    }
}
