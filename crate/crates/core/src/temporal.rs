//! FHIR date/dateTime parsing with precision tracking.
//!
//! A partial value denotes the closed interval of instants it covers:
//! `2185-03` is `[2185-03-01T00:00:00.000Z, 2185-03-31T23:59:59.999Z]`.
//! Values without a zone offset are taken as UTC.

use std::cmp::Ordering;
use std::sync::LazyLock;

use chrono::{DateTime, Duration, FixedOffset, Months, NaiveDate, NaiveDateTime, NaiveTime, TimeZone, Utc};
use regex::Regex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Precision {
    Year,
    Month,
    Day,
    Hour,
    Minute,
    Second,
    Millisecond,
}

impl Precision {
    fn class(self) -> Precision {
        match self {
            Precision::Millisecond => Precision::Second,
            p => p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PartialDateTime {
    pub first: DateTime<Utc>,
    pub last: DateTime<Utc>,
    pub precision: Precision,
}

static DATETIME: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"^(\d{4})(?:-(\d{2})(?:-(\d{2})(?:T(\d{2})(?::(\d{2})(?::(\d{2})(?:\.(\d+))?)?)?(Z|[+-]\d{2}:\d{2})?)?)?)?$",
    )
    .expect("static regex")
});

fn num(c: Option<regex::Match<'_>>) -> Option<u32> {
    c.map(|m| m.as_str().parse().expect("digits"))
}

impl PartialDateTime {
    pub fn parse(text: &str) -> Option<PartialDateTime> {
        let caps = DATETIME.captures(text)?;
        let year: i32 = caps[1].parse().ok()?;
        let month = num(caps.get(2));
        let day = num(caps.get(3));
        let hour = num(caps.get(4));
        let minute = num(caps.get(5));
        let second = num(caps.get(6));
        let millis = caps.get(7).map(|m| {
            let digits: String = m.as_str().chars().chain("000".chars()).take(3).collect();
            digits.parse::<u32>().expect("digits")
        });

        let precision = match (month, day, hour, minute, second, millis) {
            (None, ..) => Precision::Year,
            (_, None, ..) => Precision::Month,
            (_, _, None, ..) => Precision::Day,
            (_, _, _, None, ..) => Precision::Hour,
            (_, _, _, _, None, _) => Precision::Minute,
            (_, _, _, _, _, None) => Precision::Second,
            _ => Precision::Millisecond,
        };
        let date = NaiveDate::from_ymd_opt(year, month.unwrap_or(1), day.unwrap_or(1))?;
        let time = NaiveTime::from_hms_milli_opt(
            hour.unwrap_or(0),
            minute.unwrap_or(0),
            second.unwrap_or(0),
            millis.unwrap_or(0),
        )?;
        let naive = NaiveDateTime::new(date, time);
        let first = match caps.get(8).map(|m| m.as_str()) {
            None | Some("Z") => Utc.from_utc_datetime(&naive),
            Some(offset) => {
                let sign = if offset.starts_with('-') { -1 } else { 1 };
                let h: i32 = offset[1..3].parse().ok()?;
                let m: i32 = offset[4..6].parse().ok()?;
                let tz = FixedOffset::east_opt(sign * (h * 3600 + m * 60))?;
                tz.from_local_datetime(&naive).single()?.with_timezone(&Utc)
            }
        };
        let after = match precision {
            Precision::Year => first.checked_add_months(Months::new(12))?,
            Precision::Month => first.checked_add_months(Months::new(1))?,
            Precision::Day => first + Duration::days(1),
            Precision::Hour => first + Duration::hours(1),
            Precision::Minute => first + Duration::minutes(1),
            Precision::Second => first + Duration::seconds(1),
            Precision::Millisecond => first + Duration::milliseconds(1),
        };
        Some(PartialDateTime {
            first,
            last: after - Duration::milliseconds(1),
            precision,
        })
    }

    pub fn instant(at: DateTime<Utc>) -> PartialDateTime {
        PartialDateTime {
            first: at,
            last: at,
            precision: Precision::Millisecond,
        }
    }

    /// Values of the same precision compare by their first instant (seconds
    /// and milliseconds count as one precision). Otherwise `Less` when `self`
    /// ends before `other` begins, `Greater` when it begins after `other` ends,
    /// and `None` when the intervals overlap.
    pub fn compare(&self, other: &PartialDateTime) -> Option<Ordering> {
        if self.precision.class() == other.precision.class() {
            Some(self.first.cmp(&other.first))
        } else if self.last < other.first {
            Some(Ordering::Less)
        } else if self.first > other.last {
            Some(Ordering::Greater)
        } else {
            None
        }
    }
}

/// First instant of a FHIR date/dateTime string.
pub fn parse_instant(text: &str) -> Option<DateTime<Utc>> {
    PartialDateTime::parse(text).map(|p| p.first)
}

/// `2185-03-01T10:00:00Z`, with milliseconds only when non-zero.
pub fn format_instant(at: &DateTime<Utc>) -> String {
    if at.timestamp_subsec_millis() == 0 {
        at.format("%Y-%m-%dT%H:%M:%SZ").to_string()
    } else {
        at.format("%Y-%m-%dT%H:%M:%S%.3fZ").to_string()
    }
}
