use chrono::NaiveDate;

use crate::model::{AvailabilityWindow, ClockTime};

/// Study slots carved out of one availability window on one date.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DaySlots {
    pub date: NaiveDate,
    /// `(start, end)` of each study slot, ascending.
    pub study: Vec<(ClockTime, ClockTime)>,
    /// Breaks between consecutive slots; `breaks[i]` follows `study[i]`.
    pub breaks: Vec<(ClockTime, ClockTime)>,
}

/// Slices a window into `floor((W + B) / (S + B))` study slots separated by
/// breaks, starting at the window start. No trailing break.
///
/// The caller guarantees `window_minutes >= segment_minutes`.
pub fn slice_day(date: NaiveDate, window: &AvailabilityWindow, segment_minutes: u32, break_minutes: u32) -> DaySlots {
    let count = (window.window_minutes + break_minutes) / (segment_minutes + break_minutes);
    let at = |offset: u32| {
        window
            .window_start
            .checked_add(offset)
            .expect("validated window ends before midnight")
    };
    let mut study = Vec::with_capacity(count as usize);
    let mut breaks = Vec::with_capacity(count.saturating_sub(1) as usize);
    for i in 0..count {
        let offset = i * (segment_minutes + break_minutes);
        study.push((at(offset), at(offset + segment_minutes)));
        if i + 1 < count && break_minutes > 0 {
            breaks.push((at(offset + segment_minutes), at(offset + segment_minutes + break_minutes)));
        }
    }
    DaySlots { date, study, breaks }
}
