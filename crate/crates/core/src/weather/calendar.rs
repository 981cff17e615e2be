use alloc::string::String;

/// Wall-clock hour without time zone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Timestamp {
    pub year: i32,
    pub month: u8,
    pub day: u8,
    pub hour: u8,
}

pub(crate) const MONTH_DAYS: [u8; 12] = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];

/// Summer-to-summer order of calendar months.
pub const SUMMER_YEAR_MONTHS: [u8; 12] = [7, 8, 9, 10, 11, 12, 1, 2, 3, 4, 5, 6];

pub fn is_leap(year: i32) -> bool {
    (year % 4 == 0 && year % 100 != 0) || year % 400 == 0
}

impl Timestamp {
    pub const fn new(year: i32, month: u8, day: u8, hour: u8) -> Self {
        Self { year, month, day, hour }
    }

    pub fn is_valid(&self) -> bool {
        if !(1..=12).contains(&self.month) || self.hour > 23 || self.day == 0 {
            return false;
        }
        let max = if self.month == 2 && is_leap(self.year) { 29 } else { MONTH_DAYS[self.month as usize - 1] };
        self.day <= max
    }

    pub fn is_leap_day(&self) -> bool {
        self.month == 2 && self.day == 29
    }

    /// Hours since 0000-01-01 on a calendar where February always has 28
    /// days. Leap days must be removed before calling this.
    pub fn leap_free_hours(&self) -> i64 {
        let before: i64 = MONTH_DAYS[..self.month as usize - 1].iter().map(|&d| d as i64).sum();
        let days = self.year as i64 * 365 + before + self.day as i64 - 1;
        days * 24 + self.hour as i64
    }

    /// First calendar year of the summer-to-summer year containing `self`.
    pub fn summer_year(&self) -> i32 {
        if self.month >= 7 {
            self.year
        } else {
            self.year - 1
        }
    }

    /// Position `0..12` in the summer-to-summer year.
    pub fn summer_month_index(&self) -> usize {
        (self.month as usize + 5) % 12
    }
}

impl core::fmt::Display for Timestamp {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{:04}-{:02}-{:02}T{:02}:00", self.year, self.month, self.day, self.hour)
    }
}

/// `"1982/83"` for the summer year starting in July 1982.
pub fn summer_year_label(first: i32) -> String {
    alloc::format!("{}/{:02}", first, (first + 1).rem_euclid(100))
}

/// Days of the `i`-th stage month of a summer year, leap days dropped.
pub fn summer_month_days(i: usize) -> u8 {
    MONTH_DAYS[SUMMER_YEAR_MONTHS[i] as usize - 1]
}
