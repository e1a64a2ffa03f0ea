//! Date stamps from date lines and transcript openings.

use std::sync::LazyLock;

use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateStamp {
    pub year: Option<i32>,
    pub month: Option<u32>,
    pub day: Option<u32>,
    pub hour: Option<u32>,
}

/// A date found in text, with its byte span.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DateMatch {
    pub stamp: DateStamp,
    pub start: usize,
    pub end: usize,
}

const MONTHS: &str = "january|february|march|april|may|june|july|august|september|october|november|december|jan|feb|mar|apr|jun|jul|aug|sept|sep|oct|nov|dec";

#[derive(Clone, Copy)]
enum Layout {
    /// year, month, day
    Ymd,
    /// day, month, year
    Dmy,
    /// month name, day, year
    MonthDayYear,
    /// day, month name, year
    DayMonthYear,
    /// month name, year
    MonthYear,
}

static PATTERNS: LazyLock<Vec<(Regex, Layout)>> = LazyLock::new(|| {
    let p = |re: &str, layout| (Regex::new(&format!("(?i){re}")).unwrap(), layout);
    vec![
        p(r"\b(\d{4})[-/](\d{1,2})[-/](\d{1,2})\b", Layout::Ymd),
        p(r"\b(\d{1,2})\.\s?(\d{1,2})\.\s?(\d{4})\b", Layout::Dmy),
        p(
            &format!(r"\b({MONTHS})\.?\s+(\d{{1,2}})(?:st|nd|rd|th)?,?\s+(\d{{4}})\b"),
            Layout::MonthDayYear,
        ),
        p(
            &format!(r"\b(\d{{1,2}})(?:st|nd|rd|th)?\s+(?:of\s+)?({MONTHS})\.?,?\s+(\d{{4}})\b"),
            Layout::DayMonthYear,
        ),
        p(
            &format!(r"\b({MONTHS})\.?,?\s+(\d{{4}})\b"),
            Layout::MonthYear,
        ),
    ]
});

static TIME: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b([01]?\d|2[0-3]):([0-5]\d)\b").unwrap());

fn month_number(name: &str) -> Option<u32> {
    let lower = name.to_ascii_lowercase();
    let idx = [
        "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec",
    ]
    .iter()
    .position(|m| lower.starts_with(m))?;
    Some(idx as u32 + 1)
}

fn stamp_from(caps: &Captures, layout: Layout) -> Option<DateStamp> {
    let num = |i: usize| caps.get(i)?.as_str().parse::<u32>().ok();
    let (year, month, day) = match layout {
        Layout::Ymd => (num(1)?, num(2)?, Some(num(3)?)),
        Layout::Dmy => (num(3)?, num(2)?, Some(num(1)?)),
        Layout::MonthDayYear => (num(3)?, month_number(&caps[1])?, Some(num(2)?)),
        Layout::DayMonthYear => (num(3)?, month_number(&caps[2])?, Some(num(1)?)),
        Layout::MonthYear => (num(2)?, month_number(&caps[1])?, None),
    };
    if !(1..=12).contains(&month) || day.is_some_and(|d| !(1..=31).contains(&d)) {
        return None;
    }
    Some(DateStamp {
        year: Some(year as i32),
        month: Some(month),
        day,
        hour: None,
    })
}

/// Earliest date in `text`; an `HH:MM` time after it fills the hour.
pub fn find_date(text: &str) -> Option<DateMatch> {
    let mut best: Option<DateMatch> = None;
    for (re, layout) in PATTERNS.iter() {
        for caps in re.captures_iter(text) {
            let whole = caps.get(0).expect("group 0");
            if let Some(stamp) = stamp_from(&caps, *layout) {
                if best.is_none_or(|b| whole.start() < b.start) {
                    best = Some(DateMatch {
                        stamp,
                        start: whole.start(),
                        end: whole.end(),
                    });
                }
                break;
            }
        }
    }
    let mut found = best?;
    if let Some(t) = TIME.captures(&text[found.end..]) {
        found.stamp.hour = t[1].parse().ok();
    }
    Some(found)
}

pub fn parse_date(text: &str) -> Option<DateStamp> {
    find_date(text).map(|m| m.stamp)
}

/// Year, month, day, hour agreement flags; a component counts only when
/// both stamps carry it.
pub fn date_consistency(d1: Option<&DateStamp>, d2: Option<&DateStamp>) -> [f64; 4] {
    let (Some(a), Some(b)) = (d1, d2) else {
        return [0.0; 4];
    };
    fn same<T: PartialEq>(x: Option<T>, y: Option<T>) -> f64 {
        match (x, y) {
            (Some(x), Some(y)) if x == y => 1.0,
            _ => 0.0,
        }
    }
    [
        same(a.year, b.year),
        same(a.month, b.month),
        same(a.day, b.day),
        same(a.hour, b.hour),
    ]
}
