use std::fmt::Write;

use chrono::NaiveDateTime;

use super::CalendarEvent;
use crate::model::SessionKind;

const MAX_LINE_OCTETS: usize = 75;

/// Renders study events as an RFC 5545 `VCALENDAR`. Breaks are skipped.
///
/// Times are floating local times (no `TZID`); `DTSTAMP` is derived from the
/// event start so the output is a pure function of its input.
pub fn export_ical(events: &[CalendarEvent], calendar_name: &str) -> String {
    let mut out = String::new();
    push_line(&mut out, "BEGIN:VCALENDAR");
    push_line(&mut out, "VERSION:2.0");
    push_line(&mut out, "PRODID:-//pacepath//study plan//EN");
    push_line(&mut out, "CALSCALE:GREGORIAN");
    push_line(&mut out, &format!("X-WR-CALNAME:{}", escape_text(calendar_name)));
    for event in events.iter().filter(|e| e.kind == SessionKind::Study) {
        push_line(&mut out, "BEGIN:VEVENT");
        push_line(&mut out, &format!("UID:{}", escape_text(&event.event_id)));
        push_line(&mut out, &format!("DTSTAMP:{}Z", format_datetime(&event.start)));
        push_line(&mut out, &format!("DTSTART:{}", format_datetime(&event.start)));
        push_line(&mut out, &format!("DTEND:{}", format_datetime(&event.end)));
        push_line(&mut out, &format!("SUMMARY:{}", escape_text(&event.title)));
        if let Some(lesson) = &event.lesson_id {
            push_line(&mut out, &format!("X-PACEPATH-LESSON:{}", escape_text(lesson)));
        }
        push_line(&mut out, "END:VEVENT");
    }
    push_line(&mut out, "END:VCALENDAR");
    out
}

fn format_datetime(dt: &NaiveDateTime) -> String {
    dt.format("%Y%m%dT%H%M%S").to_string()
}

fn escape_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            ';' => out.push_str("\\;"),
            ',' => out.push_str("\\,"),
            '\n' => out.push_str("\\n"),
            '\r' => {}
            c => out.push(c),
        }
    }
    out
}

/// Appends a content line, folding at 75 octets without splitting a UTF-8
/// sequence.
fn push_line(out: &mut String, line: &str) {
    let mut width = 0;
    for c in line.chars() {
        let len = c.len_utf8();
        if width + len > MAX_LINE_OCTETS {
            out.push_str("\r\n ");
            width = 1;
        }
        out.push(c);
        width += len;
    }
    let _ = write!(out, "\r\n");
}
