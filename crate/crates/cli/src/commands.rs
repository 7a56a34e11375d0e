use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use tdlob_core::analytic::{self, SigmaLaw, TailForm};
use tdlob_core::empirical::{self, EventRecord, EventStream, Kind, Side, StockFits};
use tdlob_core::scaling::{self, LimitExperiment, Schedule};
use tdlob_core::simulator::{self, BookConfig, StopRule};
use tdlob_core::stats::JB_CRITICAL_1PCT;
use tdlob_core::{oracle, Backend, RateForm, TailRegime};

use crate::args::{
    parse_depth, ClassifyArgs, DurationsArgs, FitArgs, Format, Grid, LimitArgs, SimulateArgs, SurvivalArgs, SynthArgs,
};
use crate::output::{cell, emit, ensure_dir, usage, write_json, CliError, CliResult};

const ORACLE_TOLERANCE: f64 = 1e-6;

fn backend(sequential: bool) -> Backend {
    if sequential {
        Backend::Sequential
    } else {
        Backend::Parallel
    }
}

fn horizons(a: &SurvivalArgs, origin: f64) -> CliResult<Vec<f64>> {
    if let Some(times) = &a.times {
        if times.is_empty() {
            return Err(usage("--times needs at least one horizon"));
        }
        return Ok(times.clone());
    }
    let tmax = a.tmax.expect("clap requires --tmax without --times");
    if a.points < 1 {
        return Err(usage("--points must be ≥ 1"));
    }
    if !(tmax > origin) {
        return Err(usage(format!("--tmax must exceed the clock origin {origin}")));
    }
    let tmin = a.tmin.unwrap_or(origin + (tmax - origin) / a.points as f64);
    if !(tmin >= origin && tmin <= tmax) {
        return Err(usage(format!("--tmin must lie in [{origin}, {tmax}]")));
    }
    if a.points == 1 {
        return Ok(vec![tmax]);
    }
    let steps = (a.points - 1) as f64;
    Ok(match a.grid {
        Grid::Linear => (0..a.points).map(|i| tmin + (tmax - tmin) * i as f64 / steps).collect(),
        Grid::Log => {
            if !(tmin > 0.0) {
                return Err(usage("a log grid needs --tmin > 0"));
            }
            let ratio = (tmax / tmin).ln();
            (0..a.points).map(|i| tmin * (ratio * i as f64 / steps).exp()).collect()
        }
    })
}

#[derive(Serialize)]
struct SurvivalRow {
    #[serde(rename = "T")]
    t: f64,
    #[serde(rename = "A_T", skip_serializing_if = "Option::is_none")]
    internal: Option<f64>,
    survival: f64,
    tail_asymptote: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<f64>,
}

pub fn survival(a: SurvivalArgs) -> CliResult {
    let clock = a.rates.clock()?;
    let (lambda, mu) = (clock.lambda(), clock.mu());
    let law = SigmaLaw::new(a.x, lambda, mu)?;
    let times = horizons(&a, clock.origin)?;
    let internal = times.iter().map(|t| clock.cumulative(*t)).collect::<tdlob_core::Result<Vec<f64>>>()?;

    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|i, j| internal[*i].total_cmp(&internal[*j]));
    let sorted: Vec<f64> = order.iter().map(|i| internal[*i]).collect();
    let mut survival = vec![0.0; times.len()];
    for (i, s) in order.iter().zip(law.survival_sorted(&sorted)?) {
        survival[*i] = s;
    }

    let form = TailForm::from(a.tail_form);
    let regime = TailRegime::from_rates(lambda, mu).ok();
    let modulated = !matches!(clock.spec.form, RateForm::Constant { c } if c == 1.0) || clock.origin != 0.0;
    let mut worst_gap: f64 = 0.0;
    let mut rows = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let tail = regime
            .and_then(|r| analytic::tail_sigma(internal[k], a.x, r, lambda, mu, form).ok())
            .filter(|v| v.is_finite());
        let reference = if a.oracle_check { Some(oracle::ctmc_survival(t, a.x, &clock)?.value) } else { None };
        if let Some(r) = reference {
            worst_gap = worst_gap.max((r - survival[k]).abs());
        }
        rows.push(SurvivalRow {
            t,
            internal: modulated.then_some(internal[k]),
            survival: survival[k],
            tail_asymptote: tail,
            oracle: reference,
        });
    }

    let name = match a.format {
        Format::Csv => "survival.csv",
        Format::Json => "survival.json",
    };
    let target = match &a.out {
        Some(dir) => {
            ensure_dir(dir)?;
            Some(dir.join(name))
        }
        None => None,
    };
    match a.format {
        Format::Json => write_json(target.as_deref(), &rows)?,
        Format::Csv => emit(target.as_deref(), |out| {
            write!(out, "T")?;
            if modulated {
                write!(out, ",A_T")?;
            }
            write!(out, ",survival,tail_asymptote")?;
            if a.oracle_check {
                write!(out, ",oracle")?;
            }
            writeln!(out)?;
            for r in &rows {
                write!(out, "{}", r.t)?;
                if let Some(v) = r.internal {
                    write!(out, ",{v}")?;
                }
                write!(out, ",{},{}", r.survival, cell(r.tail_asymptote))?;
                if let Some(v) = r.oracle {
                    write!(out, ",{v}")?;
                }
                writeln!(out)?;
            }
            Ok(())
        })?,
    }
    if a.oracle_check {
        eprintln!("oracle check: largest gap {worst_gap:.3e} (tolerance {ORACLE_TOLERANCE:e})");
        if worst_gap > ORACLE_TOLERANCE {
            return Err(CliError::Check(format!(
                "analytic survival disagrees with the oracle by {worst_gap:.3e} > {ORACLE_TOLERANCE:e}"
            )));
        }
    }
    Ok(())
}

fn read_config(path: &Path) -> CliResult<BookConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    let bad = |e: serde_json::Error| usage(format!("{}: invalid config: {e}", path.display()));
    let mut value: serde_json::Value = serde_json::from_str(&text).map_err(bad)?;
    if let Some(inner) = value.get_mut("config") {
        value = inner.take();
    }
    let config: BookConfig = serde_json::from_value(value).map_err(bad)?;
    config.validate()?;
    Ok(config)
}

pub fn simulate(a: SimulateArgs) -> CliResult {
    let mut config = match &a.config {
        Some(path) => read_config(path)?,
        None => {
            let spec = tdlob_core::RateSpec::new(
                a.alpha.clone().unwrap_or(RateForm::Constant { c: 1.0 }),
                a.lambda.expect("clap requires --lambda"),
                a.mu.expect("clap requires --mu"),
            )?;
            let clock = tdlob_core::CumulativeClock::new(spec, a.origin)?;
            let depth = parse_depth(a.depth.as_deref().unwrap_or("point:1,1")).map_err(usage)?;
            BookConfig::new(clock, depth, 0, 0)?
        }
    };
    if let Some(start) = &a.start {
        if start.len() != 2 {
            return Err(usage("--start takes exactly two depths x,y"));
        }
        config.x0 = start[0];
        config.y0 = start[1];
        config.validate()?;
    }
    config.seed = a.seed;
    let stop = match (a.horizon, a.changes) {
        (Some(h), _) => StopRule::Horizon(h),
        (None, Some(c)) => StopRule::Changes(c),
        (None, None) => unreachable!("clap requires a stop rule"),
    };
    let paths = simulator::replicate(&config, a.paths, stop, a.seed, backend(a.sequential))?;
    let summary = simulator::summarize(&paths);

    ensure_dir(&a.out)?;
    emit(Some(&a.out.join("paths.csv")), |out| {
        writeln!(out, "path,n,S_n,X_n,price")?;
        for (p, path) in paths.iter().enumerate() {
            let mut price = path.s0;
            for (i, (e, d)) in path.epochs.iter().zip(&path.directions).enumerate() {
                price += *d as i64;
                writeln!(out, "{p},{},{e},{d},{price}", i + 1)?;
            }
        }
        Ok(())
    })?;
    write_json(
        Some(&a.out.join("summary.json")),
        &json!({ "summary": summary, "stop": stop, "seed": a.seed, "config": config }),
    )?;
    if let Some(bins) = a.durations {
        let pooled: Vec<f64> = paths.iter().filter(|p| !p.censored).flat_map(|p| p.durations()).collect();
        let hist = empirical::log_histogram(&pooled, bins)?;
        emit(Some(&a.out.join("durations.csv")), |out| hist.write_csv(out))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Rung {
    n: f64,
    schedule: String,
    slope: f64,
    slope_ci95: (f64, f64),
    r_squared: f64,
    jarque_bera: f64,
    normal_at_1pct: bool,
    mean_direction: f64,
    censored_paths: usize,
    mean_changes: f64,
}

fn rung_label(n: f64) -> String {
    if n.fract() == 0.0 && n < 1e15 {
        format!("{}", n as u64)
    } else {
        n.to_string()
    }
}

pub fn limit(a: LimitArgs) -> CliResult {
    let spec = a.rates.spec()?;
    let clock = a.rates.clock()?;
    let depth = parse_depth(&a.depth).map_err(usage)?;
    let config = BookConfig::new(clock, depth, 0, 0)?;
    if a.n_ladder.is_empty() || a.n_ladder.iter().any(|n| !(*n > 1.0)) {
        return Err(usage("--n-ladder entries must exceed 1"));
    }
    if a.n_ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(usage("--n-ladder must be strictly increasing"));
    }
    let report = scaling::classify_regime(&spec, a.threshold)?;
    let schedule = a.schedule.unwrap_or(report.schedule);

    ensure_dir(&a.out)?;
    write_json(Some(&a.out.join("regime.json")), &report)?;
    let mut rungs = Vec::new();
    if schedule == Schedule::None {
        eprintln!("regime {:?}: schedule none, no variance fit", report.regime);
    }
    for (k, &n) in a.n_ladder.iter().enumerate() {
        if schedule == Schedule::None {
            break;
        }
        let exp = LimitExperiment {
            config: config.clone(),
            schedule,
            n,
            t_grid: a.t_grid.clone(),
            n_paths: a.paths,
            seed: simulator::derive_seed(a.seed, k as u64),
            backend: backend(a.sequential),
        };
        let result = scaling::run_limit_experiment(&exp)?;
        emit(Some(&a.out.join(format!("variance_n{}.csv", rung_label(n)))), |out| {
            writeln!(out, "t,t_n,variance")?;
            for p in &result.profile {
                writeln!(out, "{},{},{}", p.t, p.t_n, p.variance)?;
            }
            Ok(())
        })?;
        println!(
            "n={} slope={:.4} ci95=[{:.4}, {:.4}] jarque_bera={:.3}",
            rung_label(n),
            result.slope.slope,
            result.slope_ci95.0,
            result.slope_ci95.1,
            result.jarque_bera
        );
        rungs.push(Rung {
            n,
            schedule: schedule.describe(),
            slope: result.slope.slope,
            slope_ci95: result.slope_ci95,
            r_squared: result.slope.r_squared,
            jarque_bera: result.jarque_bera,
            normal_at_1pct: result.jarque_bera < JB_CRITICAL_1PCT,
            mean_direction: result.mean_direction,
            censored_paths: result.censored_paths,
            mean_changes: result.mean_changes,
        });
    }
    write_json(
        Some(&a.out.join("limit.json")),
        &json!({
            "regime": report,
            "schedule": schedule,
            "expected_slope": report.variance_slope,
            "paths": a.paths,
            "seed": a.seed,
            "rungs": rungs,
        }),
    )
}

fn read_events(path: &Path) -> CliResult<EventStream> {
    let file = File::open(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    let stream = empirical::parse_events(BufReader::new(file))?;
    for w in &stream.warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    if stream.events.is_empty() {
        return Err(usage(format!("{}: no events", path.display())));
    }
    Ok(stream)
}

const SIDES: [(Side, &str); 2] = [(Side::Ask, "ask"), (Side::Bid, "bid")];

fn flows() -> [(&'static [Kind], &'static str); 2] {
    [(&[Kind::Limit], "lambda"), (&Kind::DEPLETING, "mu")]
}

pub fn fit(a: FitArgs) -> CliResult {
    let settings = json!({
        "bin_width": a.bin_width,
        "session": a.session,
        "skip_bins": a.skip_bins,
        "threshold": a.threshold,
        "note": "bin width, session length and skipped leading bins are tool defaults, not part of the published fits",
    });
    let Some(path) = &a.events else {
        let table = empirical::table_report(&empirical::published_fixture(), a.threshold)?;
        return finish_fit(a.out.as_deref(), &table, json!({ "source": "published tables", "table": table, "settings": settings }));
    };
    let stream = read_events(path)?;
    let name = a.name.clone().unwrap_or_else(|| {
        path.file_stem().map_or_else(|| "events".into(), |s| s.to_string_lossy().into_owned())
    });
    let pooled = empirical::fit_stream(&stream, &name, a.bin_width, a.session, a.skip_bins)?;
    let table = empirical::table_report(&[pooled], a.threshold)?;

    let days = stream.days();
    let mut per_day = Vec::new();
    if days.len() > 1 {
        for d in &days {
            let sub = EventStream { events: stream.events.iter().filter(|e| e.day == *d).copied().collect(), warnings: vec![] };
            let label = format!("{name}/day{d}");
            per_day.push(match empirical::fit_stream(&sub, &label, a.bin_width, a.session, a.skip_bins) {
                Ok(f) => json!({ "day": d, "fits": f }),
                Err(e) => json!({ "day": d, "error": e.to_string() }),
            });
        }
    }

    if let Some(out) = &a.out {
        let curves = out.join("curves");
        ensure_dir(&curves)?;
        for (side, side_label) in SIDES {
            let mut pair = Vec::new();
            for (kinds, flow) in flows() {
                for c in empirical::estimate_intensity_by_day(&stream, side, kinds, a.bin_width, a.session)? {
                    emit(Some(&curves.join(format!("{side_label}_{flow}_{}.csv", c.day))), |o| c.write_csv(o))?;
                }
                let c = empirical::estimate_intensity(&stream, side, kinds, a.bin_width, a.session)?;
                if days.len() > 1 {
                    emit(Some(&curves.join(format!("{side_label}_{flow}_pooled.csv"))), |o| c.write_csv(o))?;
                }
                pair.push(c);
            }
            let q = empirical::quotient_series(&pair[0], &pair[1])?;
            emit(Some(&curves.join(format!("{side_label}_quotient.csv"))), |o| {
                writeln!(o, "t_mid,quotient")?;
                for (t, v) in &q.points {
                    writeln!(o, "{t},{v}")?;
                }
                Ok(())
            })?;
        }
    }
    finish_fit(
        a.out.as_deref(),
        &table,
        json!({
            "source": path.display().to_string(),
            "table": table,
            "per_day": per_day,
            "warnings": stream.warnings,
            "settings": settings,
        }),
    )
}

fn finish_fit(out: Option<&Path>, table: &empirical::TableReport, report: serde_json::Value) -> CliResult {
    let text = table.to_text();
    print!("{text}");
    if let Some(dir) = out {
        ensure_dir(dir)?;
        emit(Some(&dir.join("report.txt")), |o| o.write_all(text.as_bytes()))?;
        write_json(Some(&dir.join("report.json")), &report)?;
    }
    Ok(())
}

pub fn synth(a: SynthArgs) -> CliResult {
    let fixture = empirical::published_fixture();
    let Some(stock) = fixture.iter().find(|s| s.name.eq_ignore_ascii_case(&a.stock)) else {
        let names: Vec<&str> = fixture.iter().map(|s| s.name.as_str()).collect();
        return Err(usage(format!("unknown stock '{}'; choose one of {}", a.stock, names.join(", "))));
    };
    if a.days < 1 {
        return Err(usage("--days must be ≥ 1"));
    }
    let mut events = Vec::new();
    let mut stream_index = 0u64;
    for day in 0..a.days {
        for (side, price) in [(Side::Ask, 101), (Side::Bid, 100)] {
            for (kind, fit) in flow_fits(stock, side) {
                let form = RateForm::Power { k: fit.k, s: -fit.exponent };
                let seed = simulator::derive_seed(a.seed, stream_index);
                stream_index += 1;
                let flow = empirical::synthetic_flow(&form, a.scale, side, kind, a.session, seed)?;
                events.extend(flow.into_iter().enumerate().map(|(i, e)| EventRecord {
                    kind: if kind == Kind::Limit || i % 2 == 0 { kind } else { Kind::Cancel },
                    price,
                    day: if a.days > 1 { day + 1 } else { 0 },
                    ..e
                }));
            }
        }
    }
    events.sort_by(|x, y| x.day.cmp(&y.day).then(x.t.total_cmp(&y.t)));
    if let Some(path) = &a.out {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            ensure_dir(dir)?;
        }
    }
    let target = a.out.as_deref().map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf);
    emit(a.out.as_deref(), |out| {
        empirical::write_events(&events, out).map_err(|e| std::io::Error::other(e.to_string()))
    })
    .map_err(|e| match e {
        CliError::Io(_, io) => CliError::Io(target, io),
        other => other,
    })
}

fn flow_fits(stock: &StockFits, side: Side) -> [(Kind, empirical::PowerLawFit); 2] {
    let (l, m) = match side {
        Side::Ask => (stock.ask_lambda, stock.ask_mu),
        Side::Bid => (stock.bid_lambda, stock.bid_mu),
    };
    [(Kind::Limit, l.expect("fixture rows are complete")), (Kind::Market, m.expect("fixture rows are complete"))]
}

pub fn classify(a: ClassifyArgs) -> CliResult {
    let spec = a.rates.spec()?;
    let report = scaling::classify_regime(&spec, a.threshold)?;
    let regime = TailRegime::of(&spec)?;
    let moments = (1..=a.moments)
        .map(|n| Ok(json!({ "n": n, "moment": analytic::moment_finiteness(n, regime, &spec)? })))
        .collect::<tdlob_core::Result<Vec<_>>>()?;
    write_json(None, &json!({ "report": report, "tau_moments": moments }))
}

pub fn durations(a: DurationsArgs) -> CliResult {
    let stream = read_events(&a.events)?;
    let d = empirical::event_durations(&stream)?;
    let hist = empirical::log_histogram(&d, a.bins)?;
    let checkpoints: Vec<usize> = (0..).map(|k| 1usize << k).take_while(|c| *c <= d.len()).collect();
    let running = empirical::running_means(&d, &checkpoints);
    let summary = json!({
        "durations": d.len(),
        "mean": d.iter().sum::<f64>() / d.len() as f64,
        "running_means": running,
    });
    match &a.out {
        Some(dir) => {
            ensure_dir(dir)?;
            emit(Some(&dir.join("histogram.csv")), |o| hist.write_csv(o))?;
            write_json(Some(&dir.join("summary.json")), &summary)
        }
        None => write_json(None, &json!({ "summary": summary, "histogram": hist })),
    }
}
