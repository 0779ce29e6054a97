//! Relative date windows resolved against the record clock.
//!
//! | choice                  | start                          | end (exclusive)            |
//! |-------------------------|--------------------------------|----------------------------|
//! | `this_year`             | Jan 1 of the clock's year      | Jan 1 of the next year     |
//! | `last_year`             | Jan 1 of the previous year     | Jan 1 of the clock's year  |
//! | `this_month`            | 1st of the clock's month       | 1st of the next month      |
//! | `last_month`            | 1st of the previous month      | 1st of the clock's month   |
//! | `since_first_admission` | earliest `Encounter.period.start` | midnight after the clock day |
//!
//! All bounds are UTC instants.

use chrono::{DateTime, Datelike, Duration, Months, NaiveDate, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::store::PatientBundle;
use crate::temporal::PartialDateTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DateWindow {
    ThisYear,
    LastYear,
    ThisMonth,
    LastMonth,
    SinceFirstAdmission,
}

/// Closed-open `[start, end)` bounds used in queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl DateWindow {
    /// Phrase substituted for the bare `{slot}` placeholder in questions.
    pub fn label(self) -> &'static str {
        match self {
            DateWindow::ThisYear => "this year",
            DateWindow::LastYear => "last year",
            DateWindow::ThisMonth => "this month",
            DateWindow::LastMonth => "last month",
            DateWindow::SinceFirstAdmission => "since the first admission",
        }
    }

    /// `None` when the window is undefined for this bundle (no clock, or no
    /// admissions for `since_first_admission`).
    pub fn resolve(self, bundle: &PatientBundle) -> Option<Bounds> {
        let clock = bundle.clock()?;
        let year = |y: i32| midnight(NaiveDate::from_ymd_opt(y, 1, 1)?);
        let month_start = midnight(NaiveDate::from_ymd_opt(clock.year(), clock.month(), 1)?)?;
        let bounds = match self {
            DateWindow::ThisYear => Bounds {
                start: year(clock.year())?,
                end: year(clock.year() + 1)?,
            },
            DateWindow::LastYear => Bounds {
                start: year(clock.year() - 1)?,
                end: year(clock.year())?,
            },
            DateWindow::ThisMonth => Bounds {
                start: month_start,
                end: month_start.checked_add_months(Months::new(1))?,
            },
            DateWindow::LastMonth => Bounds {
                start: month_start.checked_sub_months(Months::new(1))?,
                end: month_start,
            },
            DateWindow::SinceFirstAdmission => {
                let first = bundle
                    .resources_of_type("Encounter")
                    .filter_map(|e| e.root().get_path("period.start")?.as_str())
                    .filter_map(PartialDateTime::parse)
                    .map(|p| p.first)
                    .min()?;
                Bounds {
                    start: first,
                    end: midnight(clock.date_naive())? + Duration::days(1),
                }
            }
        };
        Some(bounds)
    }
}

fn midnight(day: NaiveDate) -> Option<DateTime<Utc>> {
    Some(Utc.from_utc_datetime(&day.and_hms_opt(0, 0, 0)?))
}

impl Bounds {
    /// The part of the window the record can cover: the end is clipped to
    /// the clock.
    pub fn observed(&self, clock: DateTime<Utc>) -> (DateTime<Utc>, DateTime<Utc>) {
        (self.start, self.end.min(clock))
    }
}
