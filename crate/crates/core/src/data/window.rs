use super::RecordSet;
use crate::error::{Error, Result};

/// Columns per input row.
pub const INPUT_WIDTH: usize = 5;
/// Time steps per window.
pub const WINDOW_LEN: usize = 16;

/// One supervised example: `len` consecutive input rows of a single set and
/// the wrench at the last row.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSample {
    pub set_id: usize,
    pub v_flow: f64,
    pub end_t: f64,
    pub window: Vec<[f64; INPUT_WIDTH]>,
    /// Channel order of [`crate::wrench::CHANNELS`].
    pub target: [f64; 6],
}

/// Stride-1 sliding windows over one set.
pub fn make_windows(rs: &RecordSet, len: usize) -> Result<Vec<SequenceSample>> {
    if len == 0 || rs.len() < len {
        return Err(Error::InsufficientLength { len: rs.len(), min: len.max(1) });
    }
    let rows: Vec<[f64; INPUT_WIDTH]> = rs.records.iter().map(|r| r.input_row()).collect();
    Ok((len - 1..rs.len())
        .map(|end| {
            let last = &rs.records[end];
            SequenceSample {
                set_id: rs.id,
                v_flow: rs.v_flow,
                end_t: last.t,
                window: rows[end + 1 - len..=end].to_vec(),
                target: last.wrench.to_channels(),
            }
        })
        .collect())
}

/// Index of a window: `sets[set]`, rows `end + 1 - len ..= end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WindowRef {
    pub set: usize,
    pub end: usize,
}

/// Window references over many sets without materializing the windows.
/// `stride` thins the windows of each set; sets shorter than `len` give none.
pub fn window_refs(sets: &[RecordSet], len: usize, stride: usize) -> Vec<WindowRef> {
    let stride = stride.max(1);
    sets.iter()
        .enumerate()
        .flat_map(|(set, rs)| {
            let first = len.saturating_sub(1);
            (first..rs.len()).step_by(stride).map(move |end| WindowRef { set, end })
        })
        .collect()
}
