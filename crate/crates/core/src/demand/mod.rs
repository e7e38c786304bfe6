//! Check-out demand estimation.
//!
//! Per station and date the availability of bikes is reconstructed from
//! status snapshots and the trip balance (or, without status data, from the
//! offset-shifted running balance). The minutes with bikes available in each
//! 60-minute period feed the average check-out `û` of each time slot, which
//! is turned into the normalised profile `U`.

mod availability;
mod profile;

use chrono::{Datelike, NaiveDateTime, Timelike, Weekday};
use serde::{Deserialize, Serialize};

pub use availability::{
    estimate_period_uptime, offset_availability, offset_levels, reconstruct_availability,
    reconstruct_from_events, uptime_between, AvailabilitySeries,
};
pub use profile::{
    average_uptime, checkout_profile, checkout_rate, compute_profiles, write_profiles,
    CheckOutProfile, DemandDiagnostics, ProfileSet, SlotValues, PERIOD_MINUTES,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DayClass {
    Weekday,
    Weekend,
}

impl DayClass {
    pub fn of(weekday: Weekday) -> Self {
        match weekday {
            Weekday::Sat | Weekday::Sun => DayClass::Weekend,
            _ => DayClass::Weekday,
        }
    }
}

/// One of the five daily windows. Hours are `[start_hour, end_hour)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TimeSlot {
    /// 1-based slot number.
    pub id: u8,
    pub day_class: DayClass,
    pub start_hour: u32,
    pub end_hour: u32,
    pub name: &'static str,
}

impl TimeSlot {
    /// Number of 60-minute periods in the window.
    pub fn periods(&self) -> usize {
        (self.end_hour - self.start_hour) as usize
    }

    pub fn index(&self) -> usize {
        usize::from(self.id - 1)
    }
}

pub const TIME_SLOTS: [TimeSlot; 5] = [
    TimeSlot {
        id: 1,
        day_class: DayClass::Weekday,
        start_hour: 7,
        end_hour: 11,
        name: "Morning Rush Hours",
    },
    TimeSlot {
        id: 2,
        day_class: DayClass::Weekday,
        start_hour: 12,
        end_hour: 16,
        name: "Day Hours",
    },
    TimeSlot {
        id: 3,
        day_class: DayClass::Weekday,
        start_hour: 17,
        end_hour: 22,
        name: "Evening Rush Hours",
    },
    TimeSlot {
        id: 4,
        day_class: DayClass::Weekend,
        start_hour: 9,
        end_hour: 17,
        name: "Trips Hour",
    },
    TimeSlot {
        id: 5,
        day_class: DayClass::Weekend,
        start_hour: 18,
        end_hour: 23,
        name: "Evening Hours",
    },
];

/// The slot containing `time`, with its 0-based period, or `None` outside
/// every window.
pub fn slot_and_period(time: NaiveDateTime) -> Option<(&'static TimeSlot, usize)> {
    let class = DayClass::of(time.weekday());
    let hour = time.hour();
    TIME_SLOTS
        .iter()
        .find(|s| s.day_class == class && (s.start_hour..s.end_hour).contains(&hour))
        .map(|s| (s, (hour - s.start_hour) as usize))
}

pub fn assign_time_slot(time: NaiveDateTime) -> Option<u8> {
    slot_and_period(time).map(|(s, _)| s.id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn t(y: i32, m: u32, d: u32, h: u32, min: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(y, m, d)
            .unwrap()
            .and_hms_opt(h, min, 0)
            .unwrap()
    }

    #[test]
    fn slots_follow_the_daily_table() {
        // 2018-01-02 is a Tuesday, 2018-01-06 a Saturday.
        assert_eq!(assign_time_slot(t(2018, 1, 2, 8, 30)), Some(1));
        assert_eq!(assign_time_slot(t(2018, 1, 6, 10, 0)), Some(4));
        assert_eq!(assign_time_slot(t(2018, 1, 3, 23, 30)), None);
        assert_eq!(assign_time_slot(t(2018, 1, 2, 11, 0)), None);
        assert_eq!(assign_time_slot(t(2018, 1, 2, 21, 59)), Some(3));
        assert_eq!(assign_time_slot(t(2018, 1, 7, 22, 0)), Some(5));
        assert_eq!(assign_time_slot(t(2018, 1, 7, 8, 0)), None);
    }

    #[test]
    fn period_counts() {
        let counts: Vec<usize> = TIME_SLOTS.iter().map(|s| s.periods()).collect();
        assert_eq!(counts, vec![4, 4, 5, 8, 5]);
        let (slot, period) = slot_and_period(t(2018, 1, 2, 9, 59)).unwrap();
        assert_eq!((slot.id, period), (1, 2));
    }
}
