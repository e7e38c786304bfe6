use crate::error::{Error, Result};

/// Splits `k1` sub-clusters across groups of the given sizes.
///
/// Quotas `n_i * k1 / n` are rounded by largest remainder (ties to the lower
/// group index) so that the counts sum to `k1`, then moved one at a time to
/// satisfy `1 <= c_i <= n_i`, taking from the group most above its quota.
pub fn apportion_groups(sizes: &[usize], k1: usize) -> Result<Vec<usize>> {
    let groups = sizes.len();
    let n: usize = sizes.iter().sum();
    if groups == 0 {
        return Err(Error::Config("no groups to apportion".into()));
    }
    if sizes.contains(&0) {
        return Err(Error::Config("cannot apportion to an empty group".into()));
    }
    if k1 < groups {
        return Err(Error::Config(format!(
            "K1 = {k1} is smaller than the {groups} groups; every group needs a cluster"
        )));
    }
    if k1 > n {
        return Err(Error::Config(format!("K1 = {k1} exceeds the {n} stations")));
    }

    let quota: Vec<f64> = sizes
        .iter()
        .map(|&s| s as f64 * k1 as f64 / n as f64)
        .collect();
    let mut counts: Vec<usize> = quota.iter().map(|q| q.floor() as usize).collect();
    let mut remaining = k1 - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..groups).collect();
    order.sort_by(|&a, &b| {
        let ra = quota[a] - quota[a].floor();
        let rb = quota[b] - quota[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &g in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        if counts[g] < sizes[g] {
            counts[g] += 1;
            remaining -= 1;
        }
    }

    // lift empty groups, taking from the most over-allocated donor
    while let Some(g) = (0..groups).find(|&g| counts[g] == 0) {
        let donor = (0..groups)
            .filter(|&j| counts[j] > 1)
            .max_by(|&a, &b| {
                let sa = counts[a] as f64 - quota[a];
                let sb = counts[b] as f64 - quota[b];
                sa.total_cmp(&sb).then(b.cmp(&a))
            })
            .expect("k1 >= groups leaves a donor");
        counts[donor] -= 1;
        counts[g] += 1;
    }
    debug_assert!(counts.iter().zip(sizes).all(|(&c, &s)| c >= 1 && c <= s));
    debug_assert_eq!(counts.iter().sum::<usize>(), k1);
    Ok(counts)
}
