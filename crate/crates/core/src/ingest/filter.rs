use std::collections::{BTreeMap, HashMap};

use chrono::{Datelike, NaiveDate};

use super::{StationId, StationInfo, StationSet, TripTable};
use crate::error::{Error, Result};

pub(crate) fn days_in_year(year: i32) -> u32 {
    if NaiveDate::from_ymd_opt(year, 2, 29).is_some() {
        366
    } else {
        365
    }
}

/// Minimum annual trip count: half the days of the year, rounded up.
pub fn residual_threshold(year: i32) -> u64 {
    u64::from(days_in_year(year)).div_ceil(2)
}

/// Drops low-activity stations for `year`.
///
/// A station's count is the number of that year's trips starting or ending
/// there (a trip counts once per endpoint). Stations below
/// [`residual_threshold`] are removed together with every trip touching them,
/// and the pass repeats until no station falls below the threshold, so the
/// result is a fixed point.
pub fn filter_stations(trips: &TripTable, year: i32) -> Result<(StationSet, TripTable)> {
    if trips.is_empty() {
        return Err(Error::Input("no trips to filter".into()));
    }
    let threshold = residual_threshold(year);
    let mut kept: Vec<usize> = (0..trips.rows.len())
        .filter(|&i| trips.rows[i].start_time.year() == year)
        .collect();

    loop {
        let mut counts: HashMap<&StationId, u64> = HashMap::new();
        for &i in &kept {
            let t = &trips.rows[i];
            *counts.entry(&t.start_station).or_default() += 1;
            *counts.entry(&t.end_station).or_default() += 1;
        }
        let keep = |s: &StationId| counts.get(s).is_some_and(|&c| c >= threshold);
        let before = kept.len();
        let next: Vec<usize> = kept
            .iter()
            .copied()
            .filter(|&i| {
                let t = &trips.rows[i];
                keep(&t.start_station) && keep(&t.end_station)
            })
            .collect();
        let dropped_station = counts.values().any(|&c| c < threshold);
        kept = next;
        if before == kept.len() && !dropped_station {
            break;
        }
        if kept.is_empty() {
            return Err(Error::Config(format!(
                "every station has fewer than {threshold} trips in {year}"
            )));
        }
    }

    let mut stations: BTreeMap<StationId, StationInfo> = BTreeMap::new();
    for &i in &kept {
        let t = &trips.rows[i];
        for (id, lat, lon) in [
            (&t.start_station, t.start_lat, t.start_lon),
            (&t.end_station, t.end_lat, t.end_lon),
        ] {
            stations
                .entry(id.clone())
                .or_insert(StationInfo {
                    lat,
                    lon,
                    trip_count: 0,
                })
                .trip_count += 1;
        }
    }
    let rows = kept.iter().map(|&i| trips.rows[i].clone()).collect();
    Ok((StationSet { stations }, TripTable::new(rows)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::TripRecord;
    use chrono::NaiveDateTime;

    fn at(year: i32, day: u32) -> NaiveDateTime {
        NaiveDate::from_yo_opt(year, day)
            .unwrap()
            .and_hms_opt(8, 0, 0)
            .unwrap()
    }

    fn trip(from: &str, to: &str, when: NaiveDateTime) -> TripRecord {
        TripRecord {
            duration: 300,
            start_time: when,
            end_time: when + chrono::Duration::minutes(5),
            start_station: from.into(),
            end_station: to.into(),
            start_lat: 40.0,
            start_lon: -73.0,
            end_lat: 40.0,
            end_lon: -73.0,
        }
    }

    #[test]
    fn threshold_is_half_the_year_rounded_up() {
        assert_eq!(residual_threshold(2018), 183);
        assert_eq!(residual_threshold(2020), 183);
        assert_eq!(residual_threshold(2019), 183);
        assert_eq!(days_in_year(2020), 366);
    }

    #[test]
    fn boundary_station_is_kept_and_dangling_trips_dropped() {
        let mut rows = Vec::new();
        // "a" ends up with exactly 183 endpoint counts, "hub" with many more.
        for d in 0..183 {
            rows.push(trip("a", "hub", at(2018, 1 + d)));
        }
        for d in 0..200 {
            rows.push(trip("hub", "b", at(2018, 1 + d % 365)));
        }
        // "rare" has 1 trip; the trip leaving it to "hub" must vanish.
        rows.push(trip("rare", "hub", at(2018, 10)));
        // Trips of another year are ignored.
        rows.push(trip("a", "hub", at(2017, 10)));
        let (set, kept) = filter_stations(&TripTable::new(rows), 2018).unwrap();
        assert_eq!(set.ids(), vec!["a".into(), "b".into(), StationId::from("hub")]);
        assert_eq!(set.stations[&StationId::from("a")].trip_count, 183);
        assert_eq!(kept.len(), 383);
        assert!(kept.rows.iter().all(|t| set.contains(&t.start_station) && set.contains(&t.end_station)));
        assert!(!set.contains(&"rare".into()));
    }

    #[test]
    fn everything_filtered_is_fatal() {
        let rows = vec![trip("a", "b", at(2018, 3))];
        assert!(matches!(
            filter_stations(&TripTable::new(rows), 2018),
            Err(Error::Config(_))
        ));
        assert!(filter_stations(&TripTable::default(), 2018).is_err());
    }

    #[test]
    fn cascading_removal_reaches_a_fixed_point() {
        let mut rows = Vec::new();
        for d in 0..200 {
            rows.push(trip("x", "y", at(2018, 1 + d)));
        }
        // "z" reaches the threshold only through trips with "w", which is rare.
        for d in 0..100 {
            rows.push(trip("z", "y", at(2018, 1 + d)));
        }
        for d in 0..90 {
            rows.push(trip("z", "w", at(2018, 1 + d)));
        }
        let table = TripTable::new(rows);
        let (set, kept) = filter_stations(&table, 2018).unwrap();
        assert!(!set.contains(&"z".into()));
        let (again, kept_again) = filter_stations(&kept, 2018).unwrap();
        assert_eq!(set, again);
        assert_eq!(kept, kept_again);
    }
}
