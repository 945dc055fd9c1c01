//! `date,price` CSV ingestion and the fractional-year time axis.
//!
//! A calendar day `D` of year `y` maps to `y + (ordinal(D) - 0.5) / days_in_year(y)`,
//! i.e. the middle of the day on a leap-aware axis.

use chrono::{Datelike, Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricePoint {
    /// Clock time, fractional years.
    pub t: f64,
    pub price: f64,
}

/// A non-empty, strictly time-ordered series of positive prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    points: Vec<PricePoint>,
    label: String,
}

impl PriceSeries {
    pub fn new(points: Vec<PricePoint>, label: impl Into<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySeries);
        }
        for (i, p) in points.iter().enumerate() {
            if !p.t.is_finite() {
                return Err(Error::InvalidSeries(format!(
                    "non-finite time at index {i}"
                )));
            }
            if !(p.price > 0.0) || !p.price.is_finite() {
                return Err(Error::InvalidSeries(format!(
                    "price {} at index {i} is not a positive finite number",
                    p.price
                )));
            }
        }
        if let Some(i) = points.windows(2).position(|w| w[1].t <= w[0].t) {
            return Err(Error::InvalidSeries(format!(
                "times not strictly increasing at index {}",
                i + 1
            )));
        }
        Ok(Self {
            points,
            label: label.into(),
        })
    }

    pub fn points(&self) -> &[PricePoint] {
        &self.points
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.t)
    }

    pub fn prices(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.price)
    }

    pub fn first_t(&self) -> f64 {
        self.points[0].t
    }

    pub fn last_t(&self) -> f64 {
        self.points[self.points.len() - 1].t
    }

    pub fn mean_price(&self) -> f64 {
        self.prices().sum::<f64>() / self.len() as f64
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Renders the series in the `date,price` format read by [`parse_csv`].
    ///
    /// Times are rounded to the nearest calendar day; series whose times sit
    /// on day anchors (everything produced by [`parse_csv`] or the synthetic
    /// generator) round-trip exactly.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(16 * (self.len() + 1));
        out.push_str("date,price\n");
        for p in &self.points {
            let d = fractional_year_to_date(p.t);
            out.push_str(&format!("{},{}\n", d.format("%Y-%m-%d"), p.price));
        }
        out
    }
}

fn days_in_year(year: i32) -> u32 {
    if NaiveDate::from_ymd_opt(year, 12, 31).map_or(365, |d| d.ordinal()) == 366 {
        366
    } else {
        365
    }
}

pub fn date_to_fractional_year(year: i32, month: u32, day: u32) -> Result<f64> {
    let date =
        NaiveDate::from_ymd_opt(year, month, day).ok_or(Error::InvalidDate { year, month, day })?;
    Ok(date_fraction(date))
}

pub(crate) fn date_fraction(date: NaiveDate) -> f64 {
    let year = date.year();
    year as f64 + (date.ordinal() as f64 - 0.5) / days_in_year(year) as f64
}

/// Nearest calendar day to a fractional-year time.
pub fn fractional_year_to_date(t: f64) -> NaiveDate {
    let year = t.floor() as i32;
    let days = days_in_year(year) as f64;
    // ordinal = frac * days + 0.5, rounded; may fall to 0 or days + 1
    let ordinal = ((t - year as f64) * days + 0.5).round() as i64;
    let jan1 = NaiveDate::from_yo_opt(year, 1).expect("year in chrono range");
    if ordinal >= 1 {
        jan1 + Days::new((ordinal - 1) as u64)
    } else {
        jan1 - Days::new((1 - ordinal) as u64)
    }
}

/// Parses an ISO `YYYY-MM-DD` date onto the fractional-year axis.
pub fn parse_iso_date(s: &str) -> Option<f64> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .ok()
        .map(date_fraction)
}

/// Parses a UTF-8 `date,price` CSV (LF or CRLF). Blank lines are skipped,
/// rows are sorted by date and duplicate dates rejected.
pub fn parse_csv(bytes: &[u8]) -> Result<PriceSeries> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        // report the line holding the first invalid byte
        let line = bytes[..e.valid_up_to()]
            .iter()
            .filter(|&&b| b == b'\n')
            .count()
            + 1;
        Error::MalformedRow(line)
    })?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);

    let mut lines = text
        .split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let header = lines.find(|(_, l)| !l.trim().is_empty());
    match header {
        None => return Err(Error::EmptySeries),
        Some((_, h)) if h.trim() == "date,price" => {}
        Some((n, _)) => return Err(Error::MalformedRow(n)),
    }

    let mut rows: Vec<(NaiveDate, f64, usize)> = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (Some(date), Some(price), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::MalformedRow(n));
        };
        let date = NaiveDate::parse_from_str(date.trim(), "%Y-%m-%d")
            .map_err(|_| Error::MalformedRow(n))?;
        let price: f64 = price.trim().parse().map_err(|_| Error::MalformedRow(n))?;
        if !price.is_finite() {
            return Err(Error::MalformedRow(n));
        }
        if price <= 0.0 {
            return Err(Error::NonPositivePrice(n));
        }
        rows.push((date, price, n));
    }
    if rows.is_empty() {
        return Err(Error::EmptySeries);
    }

    // stable: the later line of a duplicate pair is the one reported
    rows.sort_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicateDate(w[0].2.max(w[1].2)));
    }

    let points = rows
        .into_iter()
        .map(|(d, price, _)| PricePoint {
            t: date_fraction(d),
            price,
        })
        .collect();
    PriceSeries::new(points, "")
}

/// Points with `t_start <= t <= t_end`, order preserved.
pub fn slice_window(series: &PriceSeries, t_start: f64, t_end: f64) -> Result<PriceSeries> {
    if !(t_start < t_end) {
        return Err(Error::InvalidWindow {
            start: t_start,
            end: t_end,
        });
    }
    let points: Vec<PricePoint> = series
        .points()
        .iter()
        .copied()
        .filter(|p| p.t >= t_start && p.t <= t_end)
        .collect();
    if points.is_empty() {
        return Err(Error::EmptySeries);
    }
    Ok(PriceSeries {
        points,
        label: series.label.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent calendar: Gregorian leap rule and month lengths by hand.
    fn oracle_fraction(y: i32, m: u32, d: u32) -> f64 {
        let leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
        let months = [
            31,
            if leap { 29 } else { 28 },
            31,
            30,
            31,
            30,
            31,
            31,
            30,
            31,
            30,
            31,
        ];
        let ordinal: u32 = months[..(m - 1) as usize].iter().sum::<u32>() + d;
        y as f64 + (ordinal as f64 - 0.5) / if leap { 366.0 } else { 365.0 }
    }

    #[test]
    fn fractional_year_examples() {
        let t = date_to_fractional_year(2008, 7, 11).unwrap();
        assert_eq!(t, 2008.0 + 192.5 / 366.0);
        assert_eq!(t, oracle_fraction(2008, 7, 11));
        assert!((t - 2008.5260).abs() < 5e-5);

        let t = date_to_fractional_year(2009, 1, 1).unwrap();
        assert_eq!(t, 2009.0 + 0.5 / 365.0);
        assert!((t - 2009.00137).abs() < 5e-6);

        assert_eq!(
            date_to_fractional_year(2009, 2, 29),
            Err(Error::InvalidDate {
                year: 2009,
                month: 2,
                day: 29
            })
        );
        assert!(date_to_fractional_year(2008, 13, 1).is_err());
    }

    #[test]
    fn exhaustive_round_trip_2007_2011() {
        let mut d = NaiveDate::from_ymd_opt(2007, 1, 1).unwrap();
        let end = NaiveDate::from_ymd_opt(2011, 12, 31).unwrap();
        let mut prev = f64::NEG_INFINITY;
        while d <= end {
            let t = date_to_fractional_year(d.year(), d.month(), d.day()).unwrap();
            assert_eq!(t, oracle_fraction(d.year(), d.month(), d.day()));
            assert!(t > prev, "not strictly increasing at {d}");
            assert_eq!(fractional_year_to_date(t), d);
            prev = t;
            d = d.succ_opt().unwrap();
        }
    }

    #[test]
    fn nearest_day_rounding_crosses_year_boundaries() {
        assert_eq!(
            fractional_year_to_date(2009.0),
            NaiveDate::from_ymd_opt(2009, 1, 1).unwrap()
        );
        assert_eq!(
            fractional_year_to_date(2008.99999),
            NaiveDate::from_ymd_opt(2008, 12, 31).unwrap()
        );
        assert_eq!(
            fractional_year_to_date(2010.999999),
            NaiveDate::from_ymd_opt(2010, 12, 31).unwrap()
        );
        assert_eq!(
            fractional_year_to_date(2011.000001),
            NaiveDate::from_ymd_opt(2011, 1, 1).unwrap()
        );
    }

    #[test]
    fn parse_single_row() {
        let s = parse_csv(b"date,price\n2008-07-11,147.27").unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.points()[0].t, oracle_fraction(2008, 7, 11));
        assert_eq!(s.points()[0].price, 147.27);
    }

    #[test]
    fn parse_errors() {
        assert_eq!(
            parse_csv(b"date,price\n2008-01-01,-5"),
            Err(Error::NonPositivePrice(2))
        );
        assert_eq!(
            parse_csv(b"date,price\n2008-01-01,0"),
            Err(Error::NonPositivePrice(2))
        );
        assert_eq!(parse_csv(b"date,price\n"), Err(Error::EmptySeries));
        assert_eq!(parse_csv(b""), Err(Error::EmptySeries));
        assert_eq!(
            parse_csv(b"date,close\n2008-01-01,1"),
            Err(Error::MalformedRow(1))
        );
        assert_eq!(
            parse_csv(b"date,price\n2008-01-01,1\n2008-01-02,abc\n"),
            Err(Error::MalformedRow(3))
        );
        assert_eq!(
            parse_csv(b"date,price\n2008-01-01,1,2\n"),
            Err(Error::MalformedRow(2))
        );
        assert_eq!(
            parse_csv(b"date,price\n2008-02-30,1\n"),
            Err(Error::MalformedRow(2))
        );
        assert_eq!(
            parse_csv(b"date,price\n2008-01-02,1\n2008-01-01,2\n2008-01-02,3\n"),
            Err(Error::DuplicateDate(4))
        );
        assert_eq!(
            parse_csv(b"date,price\n2008-01-01,NaN\n"),
            Err(Error::MalformedRow(2))
        );
    }

    #[test]
    fn parse_sorts_and_accepts_crlf_and_blank_lines() {
        let s = parse_csv(b"date,price\r\n2008-01-03,3\r\n\r\n2008-01-01,1\r\n2008-01-02,2\r\n")
            .unwrap();
        let prices: Vec<f64> = s.prices().collect();
        assert_eq!(prices, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn csv_round_trip() {
        let s = parse_csv(b"date,price\n2008-02-28,1.5\n2008-02-29,2.25\n2008-03-01,100.125\n")
            .unwrap();
        assert_eq!(parse_csv(s.to_csv().as_bytes()).unwrap(), s);
    }

    fn three() -> PriceSeries {
        PriceSeries::new(
            [1.0, 2.0, 3.0]
                .iter()
                .map(|&t| PricePoint { t, price: t * 10.0 })
                .collect(),
            "x",
        )
        .unwrap()
    }

    #[test]
    fn slice_examples() {
        let s = three();
        let w = slice_window(&s, 1.5, 3.0).unwrap();
        assert_eq!(w.times().collect::<Vec<_>>(), vec![2.0, 3.0]);
        assert_eq!(slice_window(&s, 10.0, 11.0), Err(Error::EmptySeries));
        assert_eq!(slice_window(&s, 1.0, 3.0).unwrap(), s);
        assert!(matches!(
            slice_window(&s, 3.0, 1.0),
            Err(Error::InvalidWindow { .. })
        ));
    }

    #[test]
    fn series_invariants_enforced() {
        assert_eq!(PriceSeries::new(vec![], ""), Err(Error::EmptySeries));
        let dup = vec![
            PricePoint { t: 1.0, price: 1.0 },
            PricePoint { t: 1.0, price: 2.0 },
        ];
        assert!(PriceSeries::new(dup, "").is_err());
        let neg = vec![PricePoint {
            t: 1.0,
            price: -1.0,
        }];
        assert!(PriceSeries::new(neg, "").is_err());
    }

    proptest! {
        #[test]
        fn slice_is_idempotent(a in 0.0..4.0f64, w in 0.01..4.0f64) {
            let s = three();
            if let Ok(once) = slice_window(&s, a, a + w) {
                prop_assert_eq!(slice_window(&once, a, a + w).unwrap(), once);
            }
        }

        #[test]
        fn parse_never_yields_invalid_series(rows in proptest::collection::vec((0u32..2000, -5.0..500.0f64), 0..20)) {
            let mut text = String::from("date,price\n");
            for (day, price) in &rows {
                let d = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap() + Days::new(*day as u64);
                text.push_str(&format!("{},{}\n", d.format("%Y-%m-%d"), price));
            }
            if let Ok(s) = parse_csv(text.as_bytes()) {
                prop_assert!(PriceSeries::new(s.points().to_vec(), "").is_ok());
            }
        }
    }
}
