//! Intensity estimation from level-I event data: binned rates for limit
//! orders and for market orders plus cancellations, log-log power-law fits,
//! intensity quotients and inter-price-change durations.

use std::fmt::Write as _;
use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rates::{CumulativeClock, RateForm, RateSpec};
use crate::scaling::{classify_regime, RegimeReport};
use crate::simulator::PricePath;
use crate::stats;

pub const DEFAULT_BIN_WIDTH: f64 = 300.0;
pub const DEFAULT_SESSION_LENGTH: f64 = 23_400.0;
/// Leading bins left out of power-law fits by default; the bin average of a
/// rate that is singular at the open is far from its midpoint value.
pub const DEFAULT_SKIP_BINS: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "B")]
    Bid,
    #[serde(rename = "A")]
    Ask,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kind {
    #[serde(rename = "L")]
    Limit,
    #[serde(rename = "M")]
    Market,
    #[serde(rename = "C")]
    Cancel,
}

impl Side {
    fn code(self) -> &'static str {
        match self {
            Side::Bid => "B",
            Side::Ask => "A",
        }
    }
}

impl Kind {
    fn code(self) -> &'static str {
        match self {
            Kind::Limit => "L",
            Kind::Market => "M",
            Kind::Cancel => "C",
        }
    }

    /// Flow that decreases the queue: market orders and cancellations.
    pub const DEPLETING: [Kind; 2] = [Kind::Market, Kind::Cancel];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub t: f64,
    pub side: Side,
    pub kind: Kind,
    pub price: i64,
    pub size: u32,
    #[serde(default)]
    pub day: u32,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EventStream {
    pub events: Vec<EventRecord>,
    pub warnings: Vec<String>,
}

impl EventStream {
    pub fn days(&self) -> Vec<u32> {
        let mut days: Vec<u32> = self.events.iter().map(|e| e.day).collect();
        days.sort_unstable();
        days.dedup();
        days
    }
}

const HEADER: [&str; 5] = ["t_seconds", "side", "kind", "price_ticks", "size"];

/// Reads the event CSV (`t_seconds,side,kind,price_ticks,size[,day]`).
/// Rows out of time order within a day are stable-sorted and reported as a
/// warning; malformed rows are errors carrying their line number.
pub fn parse_events<R: Read>(input: R) -> Result<EventStream> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input);
    let mut records = reader.records();
    let header = match records.next() {
        None => return Ok(EventStream::default()),
        Some(h) => h.map_err(|e| Error::Parse { line: 1, message: e.to_string() })?,
    };
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    let with_day = names.len() == 6 && names[5] == "day";
    if names[..names.len().min(5)] != HEADER || !(names.len() == 5 || with_day) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header '{}' (optionally ',day'), got '{}'", HEADER.join(","), names.join(",")),
        });
    }
    let width = if with_day { 6 } else { 5 };
    let mut stream = EventStream::default();
    for row in records {
        let row = row.map_err(|e| Error::Parse { line: e.position().map_or(0, |p| p.line() as usize), message: e.to_string() })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let bad = |message: String| Error::Parse { line, message };
        if row.len() == 1 && row[0].trim().is_empty() {
            continue;
        }
        if row.len() != width {
            return Err(bad(format!("expected {width} fields, got {}", row.len())));
        }
        let t: f64 = row[0].trim().parse().map_err(|_| bad(format!("bad time '{}'", &row[0])))?;
        if !(t.is_finite() && t >= 0.0) {
            return Err(bad(format!("time must be finite and nonnegative, got {t}")));
        }
        let side = match row[1].trim() {
            "B" => Side::Bid,
            "A" => Side::Ask,
            other => return Err(bad(format!("side must be B or A, got '{other}'"))),
        };
        let kind = match row[2].trim() {
            "L" => Kind::Limit,
            "M" => Kind::Market,
            "C" => Kind::Cancel,
            other => return Err(bad(format!("kind must be L, M or C, got '{other}'"))),
        };
        let price: i64 = row[3].trim().parse().map_err(|_| bad(format!("bad price '{}'", &row[3])))?;
        let size: u32 = row[4].trim().parse().map_err(|_| bad(format!("bad size '{}'", &row[4])))?;
        if size < 1 {
            return Err(bad("size must be ≥ 1".into()));
        }
        let day: u32 = if with_day {
            row[5].trim().parse().map_err(|_| bad(format!("bad day '{}'", &row[5])))?
        } else {
            0
        };
        stream.events.push(EventRecord { t, side, kind, price, size, day });
    }
    let ordered = stream.events.windows(2).all(|w| (w[0].day, w[0].t) <= (w[1].day, w[1].t));
    if !ordered {
        stream.warnings.push("events were not in time order; stable-sorted by (day, t)".into());
        stream.events.sort_by(|a, b| a.day.cmp(&b.day).then(a.t.total_cmp(&b.t)));
    }
    Ok(stream)
}

pub fn write_events<W: Write>(events: &[EventRecord], mut out: W) -> Result<()> {
    let with_day = events.iter().any(|e| e.day != 0);
    let io = |e: std::io::Error| Error::InvalidParameter(format!("write failed: {e}"));
    writeln!(out, "{}{}", HEADER.join(","), if with_day { ",day" } else { "" }).map_err(io)?;
    for e in events {
        write!(out, "{},{},{},{},{}", e.t, e.side.code(), e.kind.code(), e.price, e.size).map_err(io)?;
        if with_day {
            write!(out, ",{}", e.day).map_err(io)?;
        }
        writeln!(out).map_err(io)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityCurve {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub rate: Vec<f64>,
    pub day: String,
}

impl IntensityCurve {
    pub fn midpoints(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Curve given directly by its rates (counts are the rounded expected counts).
    pub fn from_rates(bin_edges: Vec<f64>, rate: Vec<f64>, day: &str) -> Result<Self> {
        if bin_edges.len() != rate.len() + 1 || rate.is_empty() {
            return Err(invalid("need exactly one more bin edge than rates"));
        }
        if bin_edges.windows(2).any(|w| w[1] <= w[0]) || rate.iter().any(|r| !(*r >= 0.0)) {
            return Err(invalid("bin edges must increase and rates must be nonnegative"));
        }
        let counts = bin_edges.windows(2).zip(&rate).map(|(w, r)| (r * (w[1] - w[0])).round() as u64).collect();
        Ok(Self { bin_edges, counts, rate, day: day.into() })
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t_mid,rate")?;
        for (m, r) in self.midpoints().iter().zip(&self.rate) {
            writeln!(out, "{m},{r}")?;
        }
        Ok(())
    }
}

fn bin_edges(bin_width: f64, session_length: f64) -> Result<Vec<f64>> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(invalid(format!("bin width must be positive, got {bin_width}")));
    }
    if !(session_length > 0.0 && session_length.is_finite()) {
        return Err(invalid(format!("session length must be positive, got {session_length}")));
    }
    let bins = (session_length / bin_width - 1e-9).ceil().max(1.0) as usize;
    Ok((0..=bins).map(|i| (i as f64 * bin_width).min(session_length)).collect())
}

/// Binned event rate for one side and a set of kinds, over all days of the
/// stream (counts summed, rates averaged per day).
pub fn estimate_intensity(
    stream: &EventStream,
    side: Side,
    kinds: &[Kind],
    bin_width: f64,
    session_length: f64,
) -> Result<IntensityCurve> {
    if stream.events.is_empty() {
        return Err(Error::InsufficientData("event stream is empty".into()));
    }
    if kinds.is_empty() {
        return Err(invalid("at least one event kind is required"));
    }
    let days = stream.days();
    let label = if days.len() == 1 { format!("day{}", days[0]) } else { "pooled".into() };
    curve_for(stream.events.iter(), side, kinds, bin_width, session_length, days.len(), label)
}

/// One curve per day in the stream.
pub fn estimate_intensity_by_day(
    stream: &EventStream,
    side: Side,
    kinds: &[Kind],
    bin_width: f64,
    session_length: f64,
) -> Result<Vec<IntensityCurve>> {
    if stream.events.is_empty() {
        return Err(Error::InsufficientData("event stream is empty".into()));
    }
    stream
        .days()
        .into_iter()
        .map(|d| {
            let events = stream.events.iter().filter(move |e| e.day == d);
            curve_for(events, side, kinds, bin_width, session_length, 1, format!("day{d}"))
        })
        .collect()
}

fn curve_for<'a>(
    events: impl Iterator<Item = &'a EventRecord>,
    side: Side,
    kinds: &[Kind],
    bin_width: f64,
    session_length: f64,
    sessions: usize,
    day: String,
) -> Result<IntensityCurve> {
    let edges = bin_edges(bin_width, session_length)?;
    let mut counts = vec![0u64; edges.len() - 1];
    for e in events.filter(|e| e.side == side && kinds.contains(&e.kind)) {
        if e.t > session_length {
            continue;
        }
        let i = ((e.t / bin_width) as usize).min(counts.len() - 1);
        counts[i] += 1;
    }
    let rate = counts
        .iter()
        .zip(edges.windows(2))
        .map(|(c, w)| *c as f64 / ((w[1] - w[0]) * sessions as f64))
        .collect();
    Ok(IntensityCurve { bin_edges: edges, counts, rate, day })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub k: f64,
    /// Decay exponent `e` in `rate ~ k t^(-e)`.
    pub exponent: f64,
    pub r_squared: Option<f64>,
    pub exponent_stderr: Option<f64>,
    pub bins_used: usize,
    pub bins_dropped: usize,
}

impl PowerLawFit {
    /// Published coefficients without regression diagnostics.
    pub fn published(k: f64, exponent: f64) -> Self {
        Self { k, exponent, r_squared: None, exponent_stderr: None, bins_used: 0, bins_dropped: 0 }
    }
}

/// Log-log OLS of rate on bin midpoint, skipping the first `skip` bins and all
/// zero-rate bins.
pub fn fit_power_law_window(curve: &IntensityCurve, skip: usize) -> Result<PowerLawFit> {
    let mids = curve.midpoints();
    let (x, y): (Vec<f64>, Vec<f64>) =
        mids.iter().zip(&curve.rate).skip(skip).filter(|(_, r)| **r > 0.0).map(|(m, r)| (*m, *r)).unzip();
    if x.len() < 3 {
        return Err(Error::Degenerate(format!("power-law fit needs ≥ 3 positive bins, got {}", x.len())));
    }
    let fit = stats::loglog_fit(&x, &y)?;
    Ok(PowerLawFit {
        k: fit.intercept.exp(),
        exponent: -fit.slope,
        r_squared: Some(fit.r_squared),
        exponent_stderr: Some(fit.slope_stderr),
        bins_used: x.len(),
        bins_dropped: mids.len() - skip.min(mids.len()) - x.len(),
    })
}

pub fn fit_power_law(curve: &IntensityCurve) -> Result<PowerLawFit> {
    fit_power_law_window(curve, 0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotientSeries {
    pub points: Vec<(f64, f64)>,
    pub mean: f64,
}

/// `lambda_hat / mu_hat` per bin where `mu_hat > 0`.
pub fn quotient_series(lambda: &IntensityCurve, mu: &IntensityCurve) -> Result<QuotientSeries> {
    if lambda.bin_edges != mu.bin_edges {
        return Err(invalid("quotient needs identically binned curves"));
    }
    let points: Vec<(f64, f64)> = lambda
        .midpoints()
        .into_iter()
        .zip(lambda.rate.iter().zip(&mu.rate))
        .filter(|(_, (_, m))| **m > 0.0)
        .map(|(t, (l, m))| (t, l / m))
        .collect();
    if points.is_empty() {
        return Err(Error::InsufficientData("market plus cancel rate is zero in every bin".into()));
    }
    let mean = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
    Ok(QuotientSeries { points, mean })
}

/// Times at which the (bid, ask) quote pair changes. The first event on each
/// side only establishes its price.
pub fn price_change_times(stream: &EventStream) -> Vec<f64> {
    let mut out = Vec::new();
    let mut day = None;
    let mut last = [None::<i64>; 2];
    for e in &stream.events {
        if day != Some(e.day) {
            day = Some(e.day);
            last = [None, None];
        }
        let slot = &mut last[(e.side == Side::Ask) as usize];
        if let Some(p) = *slot {
            if p != e.price {
                out.push(e.t);
            }
        }
        *slot = Some(e.price);
    }
    out
}

fn durations_from_times(times: &[f64]) -> Result<Vec<f64>> {
    if times.len() < 2 {
        return Err(Error::InsufficientData(format!("need at least 2 price changes, got {}", times.len())));
    }
    Ok(times.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Durations between consecutive quote changes in an event stream.
pub fn event_durations(stream: &EventStream) -> Result<Vec<f64>> {
    durations_from_times(&price_change_times(stream))
}

/// Durations between consecutive price changes of a simulated path.
pub fn path_durations(path: &PricePath) -> Result<Vec<f64>> {
    durations_from_times(&path.epochs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationHistogram {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
    pub n: usize,
}

impl DurationHistogram {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "lo,hi,density")?;
        for (w, d) in self.edges.windows(2).zip(&self.density) {
            writeln!(out, "{},{},{}", w[0], w[1], d)?;
        }
        Ok(())
    }
}

/// Density histogram on `bins` log-spaced bins spanning the positive sample.
pub fn log_histogram(durations: &[f64], bins: usize) -> Result<DurationHistogram> {
    let positive: Vec<f64> = durations.iter().copied().filter(|d| *d > 0.0 && d.is_finite()).collect();
    if positive.len() < 2 || bins == 0 {
        return Err(Error::InsufficientData("histogram needs ≥ 2 positive durations and ≥ 1 bin".into()));
    }
    let lo = positive.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = positive.iter().copied().fold(0.0, f64::max);
    if hi <= lo {
        return Err(Error::Degenerate("all durations are equal".into()));
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    let edges: Vec<f64> = (0..=bins).map(|i| (llo + (lhi - llo) * i as f64 / bins as f64).exp()).collect();
    let mut counts = vec![0usize; bins];
    for d in &positive {
        let i = (((d.ln() - llo) / (lhi - llo)) * bins as f64) as usize;
        counts[i.min(bins - 1)] += 1;
    }
    let n = positive.len();
    let density = counts.iter().zip(edges.windows(2)).map(|(c, w)| *c as f64 / (n as f64 * (w[1] - w[0]))).collect();
    Ok(DurationHistogram { edges, density, n })
}

/// Running sample mean at each checkpoint size, for spotting an infinite mean.
pub fn running_means(durations: &[f64], checkpoints: &[usize]) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    let mut sum = 0.0;
    let mut next = checkpoints.iter().copied().filter(|c| *c > 0 && *c <= durations.len()).peekable();
    for (i, d) in durations.iter().enumerate() {
        sum += d;
        while next.peek() == Some(&(i + 1)) {
            out.push((i + 1, sum / (i + 1) as f64));
            next.next();
        }
    }
    out
}

/// Events for one flow whose intensity is `scale * alpha_t`, drawn by mapping a
/// unit Poisson process through the inverse clock.
pub fn synthetic_flow(
    form: &RateForm,
    scale: f64,
    side: Side,
    kind: Kind,
    session_length: f64,
    seed: u64,
) -> Result<Vec<EventRecord>> {
    if !(scale > 0.0) {
        return Err(invalid("scale must be positive"));
    }
    let clock = CumulativeClock::from_spec(RateSpec::new(form.clone(), 1.0, 1.0)?)?;
    let total = scale * clock.cumulative(session_length.max(clock.origin))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = 0.0;
    let mut out = Vec::new();
    loop {
        let e: f64 = Exp1.sample(&mut rng);
        a += e;
        if a >= total {
            break;
        }
        let t = clock.inverse(a / scale)?;
        out.push(EventRecord { t, side, kind, price: 0, size: 1, day: 0 });
    }
    Ok(out)
}

/// Fitted flows of one stock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StockFits {
    pub name: String,
    pub ask_lambda: Option<PowerLawFit>,
    pub ask_mu: Option<PowerLawFit>,
    pub bid_lambda: Option<PowerLawFit>,
    pub bid_mu: Option<PowerLawFit>,
    pub ask_quotient: Option<f64>,
    pub bid_quotient: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StockRow {
    pub name: String,
    pub ask_lambda: PowerLawFit,
    pub ask_mu: PowerLawFit,
    pub bid_lambda: PowerLawFit,
    pub bid_mu: PowerLawFit,
    pub ask_quotient: f64,
    pub bid_quotient: f64,
    pub regime: RegimeReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub rows: Vec<StockRow>,
    pub threshold: f64,
}

/// Rate spec summarising a stock for classification: `alpha_t = K t^(-e)` with
/// `e` and `K` the means over the four flows, `lambda` the mean quotient and
/// `mu = 1`.
pub fn stock_spec(row: &StockFits) -> Result<RateSpec> {
    let fits = complete(row)?;
    let e = fits.iter().map(|f| f.exponent).sum::<f64>() / 4.0;
    let k = fits.iter().map(|f| f.k).sum::<f64>() / 4.0;
    let quotient = 0.5 * (row.ask_quotient.unwrap() + row.bid_quotient.unwrap());
    RateSpec::new(RateForm::Power { k, s: -e }, quotient, 1.0)
}

fn complete(row: &StockFits) -> Result<[PowerLawFit; 4]> {
    let missing = |what: &str| Error::InsufficientData(format!("{}: missing {what}", row.name));
    let fits = [
        row.ask_lambda.ok_or_else(|| missing("ask limit-order fit"))?,
        row.ask_mu.ok_or_else(|| missing("ask market+cancel fit"))?,
        row.bid_lambda.ok_or_else(|| missing("bid limit-order fit"))?,
        row.bid_mu.ok_or_else(|| missing("bid market+cancel fit"))?,
    ];
    row.ask_quotient.ok_or_else(|| missing("ask quotient"))?;
    row.bid_quotient.ok_or_else(|| missing("bid quotient"))?;
    Ok(fits)
}

pub fn table_report(stocks: &[StockFits], threshold: f64) -> Result<TableReport> {
    let rows = stocks
        .iter()
        .map(|s| {
            let [ask_lambda, ask_mu, bid_lambda, bid_mu] = complete(s)?;
            Ok(StockRow {
                name: s.name.clone(),
                ask_lambda,
                ask_mu,
                bid_lambda,
                bid_mu,
                ask_quotient: s.ask_quotient.unwrap(),
                bid_quotient: s.bid_quotient.unwrap(),
                regime: classify_regime(&stock_spec(s)?, threshold)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TableReport { rows, threshold })
}

impl TableReport {
    /// Aligned-text rendering: ask fits, bid fits, quotients and regimes.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let w = self.rows.iter().map(|r| r.name.chars().count()).max().unwrap_or(0).max(8);
        for (title, pick) in [("ask", 0usize), ("bid", 1)] {
            let _ = writeln!(out, "{title} side: lambda ~ K_l t^-s, mu ~ K_m t^-r");
            let _ = writeln!(out, "{:<w$} {:>10} {:>8} {:>10} {:>8}", "stock", "K_l", "s", "K_m", "r");
            for r in &self.rows {
                let (l, m) = if pick == 0 { (r.ask_lambda, r.ask_mu) } else { (r.bid_lambda, r.bid_mu) };
                let _ = writeln!(out, "{:<w$} {:>10.4} {:>8.4} {:>10.4} {:>8.4}", r.name, l.k, l.exponent, m.k, m.exponent);
            }
            out.push('\n');
        }
        let _ = writeln!(out, "mean quotient lambda/mu (critical at mean >= {})", self.threshold);
        let _ = writeln!(out, "{:<w$} {:>8} {:>8}  regime", "stock", "ask", "bid");
        for r in &self.rows {
            let boundary = if r.regime.note.as_deref().is_some_and(|n| n.starts_with("boundary")) { " (boundary)" } else { "" };
            let _ = writeln!(
                out,
                "{:<w$} {:>8.4} {:>8.4}  {:?}{boundary}",
                r.name, r.ask_quotient, r.bid_quotient, r.regime.regime
            );
        }
        out
    }
}

/// Published regression coefficients and quotients for six stocks.
#[allow(clippy::type_complexity)]
pub fn published_fixture() -> Vec<StockFits> {
    #[rustfmt::skip]
    let rows: [(&str, [f64; 4], [f64; 4], [f64; 2]); 6] = [
        ("CSCO",  [0.1703, 0.4560, 0.1790, 0.4412], [0.1264, 0.4149, 0.1775, 0.4509], [0.9598, 0.9392]),
        ("FB",    [0.4664, 1.0045, 0.5429, 1.0073], [0.4584, 1.0039, 0.5359, 1.0064], [0.9927, 0.9993]),
        ("INTC",  [0.2604, 0.6127, 0.3582, 0.6515], [0.2041, 0.5872, 0.3525, 0.6649], [0.9441, 0.9544]),
        ("MSFT",  [0.4002, 0.6153, 0.4671, 0.6363], [0.3887, 0.6163, 0.5014, 0.6522], [0.9901, 0.9912]),
        ("LBTYK", [0.0146, 0.7438, 0.0211, 0.8640], [0.0127, 0.7466, 0.0196, 0.8352], [0.9998, 0.9498]),
        ("VOD",   [0.1199, 0.5536, 0.1927, 0.6116], [0.1223, 0.5806, 0.2143, 0.6566], [0.8919, 0.9255]),
    ];
    rows.iter()
        .map(|(name, ask, bid, q)| StockFits {
            name: (*name).into(),
            ask_lambda: Some(PowerLawFit::published(ask[0], ask[1])),
            ask_mu: Some(PowerLawFit::published(ask[2], ask[3])),
            bid_lambda: Some(PowerLawFit::published(bid[0], bid[1])),
            bid_mu: Some(PowerLawFit::published(bid[2], bid[3])),
            ask_quotient: Some(q[0]),
            bid_quotient: Some(q[1]),
        })
        .collect()
}

/// Fits all four flows of an event stream and the two quotients.
pub fn fit_stream(stream: &EventStream, name: &str, bin_width: f64, session_length: f64, skip: usize) -> Result<StockFits> {
    let curve = |side, kinds: &[Kind]| estimate_intensity(stream, side, kinds, bin_width, session_length);
    let (al, am) = (curve(Side::Ask, &[Kind::Limit])?, curve(Side::Ask, &Kind::DEPLETING)?);
    let (bl, bm) = (curve(Side::Bid, &[Kind::Limit])?, curve(Side::Bid, &Kind::DEPLETING)?);
    Ok(StockFits {
        name: name.into(),
        ask_lambda: Some(fit_power_law_window(&al, skip)?),
        ask_mu: Some(fit_power_law_window(&am, skip)?),
        bid_lambda: Some(fit_power_law_window(&bl, skip)?),
        bid_mu: Some(fit_power_law_window(&bm, skip)?),
        ask_quotient: Some(quotient_series(&al, &am)?.mean),
        bid_quotient: Some(quotient_series(&bl, &bm)?.mean),
    })
}
