//! UTC timestamps with whole-second resolution and local-day arithmetic.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, NaiveTime, TimeZone, Utc, Weekday};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TS_FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

/// Seconds since the Unix epoch, UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub fn seconds(self) -> i64 {
        self.0
    }

    pub fn to_datetime(self) -> DateTime<Utc> {
        DateTime::from_timestamp(self.0, 0).expect("timestamp in chrono range")
    }

    /// Parses the `YYYY-MM-DDThh:mm:ssZ` wire format.
    pub fn parse(s: &str) -> Option<Timestamp> {
        let naive = NaiveDateTime::parse_from_str(s.trim(), TS_FORMAT).ok()?;
        Some(Timestamp(naive.and_utc().timestamp()))
    }

    pub fn from_utc(date: NaiveDate, time: NaiveTime) -> Timestamp {
        Timestamp(date.and_time(time).and_utc().timestamp())
    }

    /// The calendar day this instant falls on in `tz`.
    pub fn local_date(self, tz: Tz) -> NaiveDate {
        self.to_datetime().with_timezone(&tz).date_naive()
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_datetime().format(TS_FORMAT))
    }
}

impl FromStr for Timestamp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Timestamp::parse(s).ok_or_else(|| format!("bad timestamp {s:?}"))
    }
}

pub fn parse_timezone(name: &str) -> Result<Tz> {
    name.parse::<Tz>()
        .map_err(|_| Error::Config(format!("unknown timezone {name:?}")))
}

/// First instant of the local day `date` in `tz`. Handles days that start
/// inside a DST gap by walking forward to the first valid minute.
pub fn local_instant(tz: Tz, date: NaiveDate, time: NaiveTime) -> Timestamp {
    let mut naive = date.and_time(time);
    for _ in 0..(24 * 60) {
        if let Some(dt) = tz.from_local_datetime(&naive).earliest() {
            return Timestamp(dt.timestamp());
        }
        naive += chrono::Duration::minutes(1);
    }
    Timestamp(date.and_time(time).and_utc().timestamp())
}

pub fn start_of_day(tz: Tz, date: NaiveDate) -> Timestamp {
    local_instant(tz, date, NaiveTime::MIN)
}

pub fn is_weekday(date: NaiveDate) -> bool {
    !matches!(date.weekday(), Weekday::Sat | Weekday::Sun)
}
