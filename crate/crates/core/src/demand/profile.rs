use std::collections::BTreeMap;
use std::io::Write;

use chrono::{Datelike, NaiveDate, NaiveDateTime};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{reconstruct_from_events, slot_and_period, DayClass, estimate_period_uptime, TIME_SLOTS};
use crate::error::{Error, Result};
use crate::ingest::{StationId, StationSet, StatusTable, TripTable};

/// Length of one period, in minutes.
pub const PERIOD_MINUTES: f64 = 60.0;

/// One value per (slot, period); slot `i` holds `np_i` entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SlotValues(pub [Vec<f64>; 5]);

impl SlotValues {
    pub fn zeros() -> Self {
        SlotValues(TIME_SLOTS.map(|s| vec![0.0; s.periods()]))
    }

    pub fn slot_mean(&self, slot: usize) -> f64 {
        let v = &self.0[slot];
        v.iter().sum::<f64>() / v.len() as f64
    }

    fn scale_by_day_counts(&mut self, year: i32) {
        let (weekdays, weekend) = day_class_counts(year);
        for (slot, values) in TIME_SLOTS.iter().zip(self.0.iter_mut()) {
            let days = match slot.day_class {
                DayClass::Weekday => weekdays,
                DayClass::Weekend => weekend,
            };
            for v in values.iter_mut() {
                *v /= f64::from(days);
            }
        }
    }
}

/// Number of weekdays and weekend days in `year`.
pub(crate) fn day_class_counts(year: i32) -> (u32, u32) {
    let mut weekdays = 0;
    let mut weekend = 0;
    let mut d = NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year");
    while d.year() == year {
        match DayClass::of(d.weekday()) {
            DayClass::Weekday => weekdays += 1,
            DayClass::Weekend => weekend += 1,
        }
        d = d.succ_opt().expect("date in range");
    }
    (weekdays, weekend)
}

/// Averages per-date uptimes into `TL_hat` per (slot, period).
///
/// Weekday slots are divided by the number of weekdays in the year and
/// weekend slots by the number of weekend days, whether or not a date has
/// data. Each date only contributes to the slots of its own day class.
pub fn average_uptime(per_date: &[(NaiveDate, SlotValues)], year: i32) -> SlotValues {
    let mut sum = SlotValues::zeros();
    for (date, values) in per_date {
        if date.year() != year {
            continue;
        }
        let class = DayClass::of(date.weekday());
        for slot in TIME_SLOTS.iter().filter(|s| s.day_class == class) {
            for (acc, v) in sum.0[slot.index()].iter_mut().zip(&values.0[slot.index()]) {
                *acc += v;
            }
        }
    }
    sum.scale_by_day_counts(year);
    sum
}

/// Average check-out `û = |t| · r̄ / TL̄`; a station that never had bikes
/// (`TL̄ = 0`) has no observable demand and gets `û = 0`.
pub fn checkout_rate(r_bar: f64, tl_bar: f64) -> f64 {
    if tl_bar <= 0.0 {
        0.0
    } else {
        PERIOD_MINUTES * r_bar / tl_bar
    }
}

/// Normalises `û` separately over the weekday slots (1–3) and the weekend
/// slots (4–5). A group summing to zero stays all-zero.
pub fn checkout_profile(u_hat: [f64; 5]) -> [f64; 5] {
    let mut out = [0.0; 5];
    for group in [0..3, 3..5] {
        let total: f64 = u_hat[group.clone()].iter().sum();
        if total > 0.0 {
            for i in group {
                out[i] = u_hat[i] / total;
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutProfile {
    pub station: StationId,
    /// Estimated average check-out per slot.
    pub u_hat: [f64; 5],
    /// Normalised profile.
    pub u: [f64; 5],
    /// Average rents per period.
    pub r_bar: [f64; 5],
    /// Average minutes with bikes per period.
    pub tl_bar: [f64; 5],
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemandDiagnostics {
    /// Station-dates reconstructed with status anchors.
    pub anchored_days: u64,
    /// Station-dates reconstructed with the offset method.
    pub offset_days: u64,
    /// Station-dates of the year without any record (zero uptime).
    pub empty_days: u64,
    /// Negative interim levels clamped to zero.
    pub clamped: u64,
}

impl DemandDiagnostics {
    fn merge(mut self, other: &DemandDiagnostics) -> Self {
        self.anchored_days += other.anchored_days;
        self.offset_days += other.offset_days;
        self.empty_days += other.empty_days;
        self.clamped += other.clamped;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProfileSet {
    /// One profile per station, in station-set order.
    pub profiles: Vec<CheckOutProfile>,
    pub diagnostics: DemandDiagnostics,
}

impl ProfileSet {
    pub fn vectors(&self) -> Vec<[f64; 5]> {
        self.profiles.iter().map(|p| p.u).collect()
    }
}

#[derive(Default)]
struct DayEvents {
    balance: Vec<(NaiveDateTime, i32)>,
    snapshots: Vec<(NaiveDateTime, u32)>,
    rents: Vec<NaiveDateTime>,
}

/// Check-out profiles for every station of `stations` over `year`.
pub fn compute_profiles(
    trips: &TripTable,
    status: &StatusTable,
    stations: &StationSet,
    year: i32,
) -> Result<ProfileSet> {
    if stations.is_empty() {
        return Err(Error::Input("no stations to profile".into()));
    }
    let index = stations.index();
    let mut days: Vec<BTreeMap<NaiveDate, DayEvents>> =
        (0..stations.len()).map(|_| BTreeMap::new()).collect();
    let in_year = |t: &NaiveDateTime| t.year() == year;
    for t in &trips.rows {
        if let Some(&s) = index.get(&t.start_station) {
            if in_year(&t.start_time) {
                let day = days[s].entry(t.start_time.date()).or_default();
                day.balance.push((t.start_time, -1));
                day.rents.push(t.start_time);
            }
        }
        if let Some(&s) = index.get(&t.end_station) {
            if in_year(&t.end_time) {
                days[s]
                    .entry(t.end_time.date())
                    .or_default()
                    .balance
                    .push((t.end_time, 1));
            }
        }
    }
    for r in &status.rows {
        if let Some(&s) = index.get(&r.station) {
            if in_year(&r.time) {
                days[s]
                    .entry(r.time.date())
                    .or_default()
                    .snapshots
                    .push((r.time, r.bikes_available));
            }
        }
    }

    let total_days = {
        let (a, b) = day_class_counts(year);
        u64::from(a + b)
    };
    let ids = stations.ids();
    let results: Vec<(CheckOutProfile, DemandDiagnostics)> = days
        .par_iter_mut()
        .zip(ids.par_iter())
        .map(|(station_days, id)| station_profile(id, station_days, year, total_days))
        .collect();

    let diagnostics = results
        .iter()
        .fold(DemandDiagnostics::default(), |acc, (_, d)| acc.merge(d));
    Ok(ProfileSet {
        profiles: results.into_iter().map(|(p, _)| p).collect(),
        diagnostics,
    })
}

fn station_profile(
    id: &StationId,
    station_days: &mut BTreeMap<NaiveDate, DayEvents>,
    year: i32,
    total_days: u64,
) -> (CheckOutProfile, DemandDiagnostics) {
    let mut diag = DemandDiagnostics {
        empty_days: total_days - station_days.len() as u64,
        ..Default::default()
    };
    let mut per_date = Vec::with_capacity(station_days.len());
    let mut rents = SlotValues::zeros();
    for (date, ev) in station_days.iter_mut() {
        ev.balance.sort_by_key(|&(t, b)| (t, b));
        ev.snapshots.sort();
        if ev.snapshots.is_empty() {
            diag.offset_days += 1;
        } else {
            diag.anchored_days += 1;
        }
        let series = reconstruct_from_events(*date, &ev.balance, &ev.snapshots);
        diag.clamped += u64::from(series.clamped);
        let class = DayClass::of(date.weekday());
        let mut uptime = SlotValues::zeros();
        for slot in TIME_SLOTS.iter().filter(|s| s.day_class == class) {
            for p in 0..slot.periods() {
                uptime.0[slot.index()][p] = estimate_period_uptime(&series, slot, p);
            }
        }
        per_date.push((*date, uptime));
        for t in &ev.rents {
            if let Some((slot, p)) = slot_and_period(*t) {
                rents.0[slot.index()][p] += 1.0;
            }
        }
    }
    let tl_hat = average_uptime(&per_date, year);
    rents.scale_by_day_counts(year);

    let r_bar: [f64; 5] = std::array::from_fn(|i| rents.slot_mean(i));
    let tl_bar: [f64; 5] = std::array::from_fn(|i| tl_hat.slot_mean(i));
    let u_hat: [f64; 5] = std::array::from_fn(|i| checkout_rate(r_bar[i], tl_bar[i]));
    let profile = CheckOutProfile {
        station: id.clone(),
        u_hat,
        u: checkout_profile(u_hat),
        r_bar,
        tl_bar,
    };
    (profile, diag)
}

/// Writes `station, u_hat_1..5, U_1..5, tl_bar_1..5` as comma-separated text.
pub fn write_profiles<W: Write>(out: W, profiles: &[CheckOutProfile]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let map = |e| Error::csv("profile output", e);
    let mut header = vec!["station".to_string()];
    for prefix in ["u_hat", "U", "tl_bar"] {
        header.extend((1..=5).map(|i| format!("{prefix}_{i}")));
    }
    w.write_record(&header).map_err(map)?;
    for p in profiles {
        let mut row = vec![p.station.0.clone()];
        for values in [&p.u_hat, &p.u, &p.tl_bar] {
            row.extend(values.iter().map(|v| v.to_string()));
        }
        w.write_record(&row).map_err(map)?;
    }
    w.flush().map_err(|e| Error::io("profile output", e))
}
