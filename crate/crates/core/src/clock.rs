//! Simulated calendar: business-hour arithmetic and the episode clock.

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, NaiveTime, Weekday};
use serde::{Deserialize, Serialize};

pub type Timestamp = NaiveDateTime;

/// Daily working window, weekdays only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BusinessHours {
    pub start_hour: u32,
    pub end_hour: u32,
}

impl Default for BusinessHours {
    fn default() -> Self {
        BusinessHours { start_hour: 9, end_hour: 18 }
    }
}

pub fn is_workday(date: NaiveDate) -> bool {
    !matches!(date.weekday(), Weekday::Sat | Weekday::Sun)
}

/// First weekday of the given month.
pub fn first_business_day(year: i32, month: u32) -> NaiveDate {
    let mut day = NaiveDate::from_ymd_opt(year, month, 1).expect("valid month");
    while !is_workday(day) {
        day = day.succ_opt().expect("date in range");
    }
    day
}

/// First Monday of the year.
pub fn first_monday(year: i32) -> NaiveDate {
    let mut day = NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year");
    while day.weekday() != Weekday::Mon {
        day = day.succ_opt().expect("date in range");
    }
    day
}

pub fn at_hour(date: NaiveDate, hour: u32) -> Timestamp {
    date.and_time(NaiveTime::from_hms_opt(hour, 0, 0).expect("valid hour"))
}

impl BusinessHours {
    pub fn minutes_per_day(&self) -> i64 {
        i64::from(self.end_hour - self.start_hour) * 60
    }

    fn window(&self, date: NaiveDate) -> Option<(Timestamp, Timestamp)> {
        is_workday(date).then(|| (at_hour(date, self.start_hour), at_hour(date, self.end_hour)))
    }

    /// Business minutes inside `[from, to)`.
    pub fn overlap_minutes(&self, from: Timestamp, to: Timestamp) -> i64 {
        if to <= from {
            return 0;
        }
        let mut total = 0;
        let mut date = from.date();
        while date <= to.date() {
            if let Some((open, close)) = self.window(date) {
                let start = open.max(from);
                let end = close.min(to);
                if end > start {
                    total += (end - start).num_minutes();
                }
            }
            date = date.succ_opt().expect("date in range");
        }
        total
    }

    pub fn overlap_hours(&self, from: Timestamp, to: Timestamp) -> f64 {
        self.overlap_minutes(from, to) as f64 / 60.0
    }

    /// Earliest instant `t >= from` with `overlap_minutes(from, t) == minutes`.
    pub fn advance(&self, from: Timestamp, minutes: i64) -> Timestamp {
        if minutes <= 0 {
            return from;
        }
        let mut remaining = minutes;
        let mut date = from.date();
        loop {
            if let Some((open, close)) = self.window(date) {
                let start = open.max(from);
                if close > start {
                    let available = (close - start).num_minutes();
                    if available >= remaining {
                        return start + Duration::minutes(remaining);
                    }
                    remaining -= available;
                }
            }
            date = date.succ_opt().expect("date in range");
        }
    }

    pub fn is_open(&self, at: Timestamp) -> bool {
        self.window(at.date()).is_some_and(|(open, close)| at >= open && at < close)
    }
}

/// The episode clock. Time only moves forward and never passes the horizon.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimClock {
    pub now: Timestamp,
    pub horizon_start: Timestamp,
    pub horizon_end: Timestamp,
    pub business_hours: BusinessHours,
}

impl SimClock {
    pub fn new(horizon_start: Timestamp, horizon_end: Timestamp, business_hours: BusinessHours) -> Self {
        SimClock { now: horizon_start, horizon_start, horizon_end, business_hours }
    }

    /// Moves the clock forward; earlier targets are ignored and later ones are capped at the horizon.
    pub fn advance_to(&mut self, at: Timestamp) {
        let target = at.min(self.horizon_end);
        if target > self.now {
            self.now = target;
        }
    }

    pub fn days_elapsed(&self) -> i64 {
        (self.now.date() - self.horizon_start.date()).num_days()
    }
}
