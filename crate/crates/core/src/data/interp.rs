use super::{ForceRecord, LowPass, RecordSet};
use crate::error::{Error, Result};
use crate::wrench::Wrench;

/// Quadratic through three points, evaluated at `x`.
pub fn lagrange3(xs: [f64; 3], ys: [f64; 3], x: f64) -> f64 {
    let [x0, x1, x2] = xs;
    let l0 = (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2));
    let l1 = (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2));
    let l2 = (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1));
    ys[0] * l0 + ys[1] * l1 + ys[2] * l2
}

/// Synthesizes record sets at intermediate flow speeds.
///
/// `sets` must share one gait and start at the same cycle phase. For each
/// target speed the three measured speeds nearest to it are fitted, sample by
/// sample and channel by channel, with a quadratic in speed (ties go to the
/// lower speed). Kinematic columns are copied from the nearest measured set.
/// When `refilter` is given the synthesized wrench channels are filtered
/// again. Output sets are numbered from `first_id`.
pub fn interpolate_velocity(
    sets: &[RecordSet],
    targets: &[f64],
    refilter: Option<&LowPass>,
    first_id: usize,
) -> Result<Vec<RecordSet>> {
    let Some(first) = sets.first() else {
        return Err(Error::Grid("no record sets given".into()));
    };
    let key = first.group_key();
    if sets.iter().any(|s| s.group_key() != key) {
        return Err(Error::Grid("record sets do not share gait parameters".into()));
    }
    let t0 = first.records.first().map(|r| r.t).unwrap_or(0.0);
    if sets
        .iter()
        .any(|s| s.records.first().map(|r| (r.t - t0).abs() > 1e-9).unwrap_or(true))
    {
        return Err(Error::Grid("record sets are not phase aligned".into()));
    }

    // one set per distinct speed, ascending
    let mut grid: Vec<&RecordSet> = sets.iter().collect();
    grid.sort_by(|a, b| a.v_flow.total_cmp(&b.v_flow));
    grid.dedup_by(|a, b| a.v_flow == b.v_flow);
    if grid.len() < 3 {
        return Err(Error::Grid(format!(
            "quadratic interpolation needs 3 flow speeds, found {}",
            grid.len()
        )));
    }
    let n = grid.iter().map(|s| s.len()).min().unwrap_or(0);

    let mut out = Vec::with_capacity(targets.len());
    for (k, &target) in targets.iter().enumerate() {
        let mut near: Vec<&RecordSet> = grid.clone();
        near.sort_by(|a, b| {
            (a.v_flow - target)
                .abs()
                .total_cmp(&(b.v_flow - target).abs())
                .then(a.v_flow.total_cmp(&b.v_flow))
        });
        let pick = [near[0], near[1], near[2]];
        let xs = [pick[0].v_flow, pick[1].v_flow, pick[2].v_flow];
        let nearest = pick[0];

        let records = (0..n)
            .map(|i| {
                let c: [[f64; 6]; 3] = [
                    pick[0].records[i].wrench.to_channels(),
                    pick[1].records[i].wrench.to_channels(),
                    pick[2].records[i].wrench.to_channels(),
                ];
                let mut w = [0.0; 6];
                for (ch, out) in w.iter_mut().enumerate() {
                    *out = lagrange3(xs, [c[0][ch], c[1][ch], c[2][ch]], target);
                }
                ForceRecord {
                    v_flow: target,
                    wrench: Wrench::from_channels(w),
                    ..nearest.records[i]
                }
            })
            .collect();
        let mut rs = RecordSet {
            id: first_id + k,
            params: first.params,
            v_flow: target,
            fs: first.fs,
            records,
        };
        if let Some(lp) = refilter {
            rs.filter_wrench(lp)?;
        }
        out.push(rs);
    }
    Ok(out)
}
