use chrono::{NaiveDate, NaiveDateTime, NaiveTime};

use super::TimeSlot;
use crate::error::{Error, Result};
use crate::ingest::{StationId, StatusTable, TripTable};

/// Bikes available at one station over one calendar date, as a
/// piecewise-constant function of time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AvailabilitySeries {
    pub date: NaiveDate,
    /// Level in force from midnight until the first event.
    pub initial: u32,
    /// Strictly increasing timestamps, each with the level right after it.
    pub events: Vec<(NaiveDateTime, u32)>,
    /// Interim levels that went negative against a status anchor and were
    /// clamped to zero.
    pub clamped: u32,
}

impl AvailabilitySeries {
    pub fn empty(date: NaiveDate) -> Self {
        AvailabilitySeries {
            date,
            initial: 0,
            events: Vec::new(),
            clamped: 0,
        }
    }

    /// True when the series carries no information at all.
    pub fn is_empty(&self) -> bool {
        self.events.is_empty() && self.initial == 0
    }

    /// The level in force at `t`: last event at or before `t`, else the
    /// initial level.
    pub fn level_at(&self, t: NaiveDateTime) -> u32 {
        let idx = self.events.partition_point(|(et, _)| *et <= t);
        if idx == 0 {
            self.initial
        } else {
            self.events[idx - 1].1
        }
    }

    pub fn levels(&self) -> Vec<u32> {
        self.events.iter().map(|&(_, v)| v).collect()
    }

    fn push(&mut self, t: NaiveDateTime, level: u32) {
        match self.events.last_mut() {
            Some(last) if last.0 == t => last.1 = level,
            _ => self.events.push((t, level)),
        }
    }
}

/// The offset rule on a bare ±1 balance: returns the offset
/// `max(0, -min cumsum)` and the shifted levels `cumsum + offset`.
pub fn offset_levels(balance: &[i32]) -> (u32, Vec<u32>) {
    let mut running = 0i64;
    let mut min = 0i64;
    let cumsum: Vec<i64> = balance
        .iter()
        .map(|&b| {
            running += i64::from(b);
            min = min.min(running);
            running
        })
        .collect();
    let offset = -min;
    let levels = cumsum.iter().map(|&c| (c + offset) as u32).collect();
    (offset as u32, levels)
}

/// Availability for a station without status data: the running trip balance
/// shifted up by the magnitude of its most negative value.
pub fn offset_availability(date: NaiveDate, events: &[(NaiveDateTime, i32)]) -> AvailabilitySeries {
    let mut series = AvailabilitySeries::empty(date);
    if events.is_empty() {
        return series;
    }
    let balance: Vec<i32> = events.iter().map(|&(_, b)| b).collect();
    let (offset, levels) = offset_levels(&balance);
    series.initial = offset;
    for (&(t, _), level) in events.iter().zip(levels) {
        series.push(t, level);
    }
    series
}

/// Merges status snapshots (absolute counts) with the ±1 trip balance.
///
/// Snapshots re-anchor the running level; a snapshot and a trip at the same
/// instant apply snapshot first. The level before the first snapshot is
/// back-computed from it. Without snapshots this is
/// [`offset_availability`].
pub fn reconstruct_from_events(
    date: NaiveDate,
    balance: &[(NaiveDateTime, i32)],
    snapshots: &[(NaiveDateTime, u32)],
) -> AvailabilitySeries {
    if snapshots.is_empty() {
        return offset_availability(date, balance);
    }
    enum Item {
        Snapshot(u32),
        Trip(i32),
    }
    let mut items: Vec<(NaiveDateTime, u8, Item)> = snapshots
        .iter()
        .map(|&(t, v)| (t, 0, Item::Snapshot(v)))
        .chain(balance.iter().map(|&(t, b)| (t, 1, Item::Trip(b))))
        .collect();
    items.sort_by_key(|(t, kind, _)| (*t, *kind));

    let (first_time, first_value) = items
        .iter()
        .find_map(|(t, _, it)| match it {
            Item::Snapshot(v) => Some((*t, *v)),
            Item::Trip(_) => None,
        })
        .expect("snapshots is non-empty");
    let before: i64 = balance
        .iter()
        .filter(|(t, _)| *t < first_time)
        .map(|&(_, b)| i64::from(b))
        .sum();

    let mut series = AvailabilitySeries::empty(date);
    let mut level = i64::from(first_value) - before;
    if level < 0 {
        series.clamped += 1;
        level = 0;
    }
    series.initial = level as u32;
    for (t, _, item) in items {
        match item {
            Item::Snapshot(v) => level = i64::from(v),
            Item::Trip(b) => {
                level += i64::from(b);
                if level < 0 {
                    series.clamped += 1;
                    level = 0;
                }
            }
        }
        series.push(t, level as u32);
    }
    series
}

/// Availability of `station` on `date` from the trip table (rents score −1 at
/// the start time, returns +1 at the end time) and the status table.
pub fn reconstruct_availability(
    trips: &TripTable,
    status: &StatusTable,
    station: &StationId,
    date: NaiveDate,
) -> Result<AvailabilitySeries> {
    let mut balance = Vec::new();
    for t in &trips.rows {
        if &t.start_station == station && t.start_time.date() == date {
            balance.push((t.start_time, -1));
        }
        if &t.end_station == station && t.end_time.date() == date {
            balance.push((t.end_time, 1));
        }
    }
    balance.sort_by_key(|&(t, b)| (t, b));
    let mut snapshots: Vec<(NaiveDateTime, u32)> = status
        .rows
        .iter()
        .filter(|r| &r.station == station && r.time.date() == date)
        .map(|r| (r.time, r.bikes_available))
        .collect();
    snapshots.sort();
    if balance.is_empty() && snapshots.is_empty() {
        return Err(Error::Input(format!(
            "station {station} has no trips or status records on {date}"
        )));
    }
    Ok(reconstruct_from_events(date, &balance, &snapshots))
}

/// Minutes within `[start, end)` during which availability is above zero.
pub fn uptime_between(series: &AvailabilitySeries, start: NaiveDateTime, end: NaiveDateTime) -> f64 {
    let mut level = series.level_at(start);
    let mut cursor = start;
    let mut seconds = 0i64;
    let from = series.events.partition_point(|(t, _)| *t <= start);
    for &(t, v) in &series.events[from..] {
        if t >= end {
            break;
        }
        if level > 0 {
            seconds += (t - cursor).num_seconds();
        }
        cursor = t;
        level = v;
    }
    if level > 0 {
        seconds += (end - cursor).num_seconds();
    }
    seconds as f64 / 60.0
}

/// Minutes with bikes available in period `period` (0-based) of `slot` on the
/// series' date. Always within `[0, 60]`.
pub fn estimate_period_uptime(series: &AvailabilitySeries, slot: &TimeSlot, period: usize) -> f64 {
    assert!(period < slot.periods(), "period {period} outside slot {}", slot.id);
    let hour = slot.start_hour + period as u32;
    let start = series
        .date
        .and_time(NaiveTime::from_hms_opt(hour, 0, 0).expect("slot hours are valid"));
    uptime_between(series, start, start + chrono::Duration::minutes(60))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::TIME_SLOTS;
    use crate::ingest::{StatusRecord, TripRecord};

    fn day() -> NaiveDate {
        NaiveDate::from_ymd_opt(2018, 1, 2).unwrap()
    }

    fn at(h: u32, m: u32) -> NaiveDateTime {
        day().and_hms_opt(h, m, 0).unwrap()
    }

    #[test]
    fn offset_hand_examples() {
        assert_eq!(offset_levels(&[-1, -1, 1]), (2, vec![1, 0, 1]));
        assert_eq!(offset_levels(&[1, 1]), (0, vec![1, 2]));
        assert_eq!(offset_levels(&[-1, -1, -1]), (3, vec![2, 1, 0]));
        assert_eq!(offset_levels(&[]), (0, vec![]));
    }

    #[test]
    fn offset_series_starts_at_offset() {
        let ev = [(at(8, 0), -1), (at(8, 10), -1), (at(8, 20), 1)];
        let s = offset_availability(day(), &ev);
        assert_eq!(s.initial, 2);
        assert_eq!(s.levels(), vec![1, 0, 1]);
        assert!(offset_availability(day(), &[]).is_empty());
    }

    #[test]
    fn status_anchor_then_rent() {
        let s = reconstruct_from_events(day(), &[(at(7, 30), -1)], &[(at(7, 30), 18)]);
        assert_eq!(s.initial, 18);
        assert_eq!(s.events, vec![(at(7, 30), 17)]);
    }

    #[test]
    fn single_status_is_constant() {
        let s = reconstruct_from_events(day(), &[], &[(at(9, 0), 4)]);
        assert_eq!(s.level_at(at(0, 0)), 4);
        assert_eq!(s.level_at(at(23, 0)), 4);
        assert_eq!(estimate_period_uptime(&s, &TIME_SLOTS[0], 0), 60.0);
    }

    #[test]
    fn negative_interim_is_clamped() {
        let s = reconstruct_from_events(
            day(),
            &[(at(8, 10), -1), (at(8, 20), -1)],
            &[(at(8, 0), 1)],
        );
        assert_eq!(s.levels(), vec![1, 0, 0]);
        assert_eq!(s.clamped, 1);
    }

    #[test]
    fn consistent_status_matches_offset() {
        let balance = [(at(7, 5), -1), (at(7, 40), -1), (at(8, 15), 1), (at(9, 0), -1)];
        let offset = offset_availability(day(), &balance);
        let snapshots: Vec<_> = [at(7, 20), at(8, 30)]
            .iter()
            .map(|&t| (t, offset.level_at(t)))
            .collect();
        let anchored = reconstruct_from_events(day(), &balance, &snapshots);
        for t in [at(0, 0), at(7, 5), at(7, 30), at(8, 20), at(8, 45), at(12, 0)] {
            assert_eq!(anchored.level_at(t), offset.level_at(t), "{t}");
        }
        assert_eq!(anchored.clamped, 0);
    }

    #[test]
    fn period_uptime_cases() {
        let slot = &TIME_SLOTS[0];
        // period 1 is 08:00-09:00
        let full = reconstruct_from_events(day(), &[], &[(at(6, 0), 3)]);
        assert_eq!(estimate_period_uptime(&full, slot, 1), 60.0);
        let never = reconstruct_from_events(day(), &[], &[(at(6, 0), 0)]);
        assert_eq!(estimate_period_uptime(&never, slot, 1), 0.0);
        let dip = reconstruct_from_events(
            day(),
            &[(at(8, 40), -1), (at(8, 50), 1)],
            &[(at(6, 0), 1)],
        );
        assert_eq!(estimate_period_uptime(&dip, slot, 1), 50.0);
        assert_eq!(estimate_period_uptime(&AvailabilitySeries::empty(day()), slot, 1), 0.0);
    }

    #[test]
    fn reconstruct_from_tables() {
        let trip = TripRecord {
            duration: 600,
            start_time: at(7, 30),
            end_time: at(7, 40),
            start_station: "72".into(),
            end_station: "505".into(),
            start_lat: 40.76,
            start_lon: -73.99,
            end_lat: 40.75,
            end_lon: -73.98,
        };
        let trips = TripTable::new(vec![trip]);
        let status = StatusTable {
            rows: vec![StatusRecord {
                station: "72".into(),
                time: at(7, 30),
                bikes_available: 18,
            }],
            rejects: vec![],
        };
        let s = reconstruct_availability(&trips, &status, &"72".into(), day()).unwrap();
        assert_eq!(s.level_at(at(7, 31)), 17);
        let arrivals = reconstruct_availability(&trips, &status, &"505".into(), day()).unwrap();
        assert_eq!(arrivals.levels(), vec![1]);
        assert!(reconstruct_availability(&trips, &status, &"none".into(), day()).is_err());
    }
}
