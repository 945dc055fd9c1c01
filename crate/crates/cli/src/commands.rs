use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};
use lppl_core::model::from_amplitude_phase;
use lppl_core::{
    detect_superbubble_with, evaluate_model, extrema_times, fit_lppl_with, generate, parse_csv,
    slice_window, Execution, FitConfig, FitResult, LambdaMode, ModelParams, PriceSeries, Side,
    SuperBubbleOverlay, SuperBubbleThresholds, SynthConfig,
};
use serde_json::json;

use crate::args::{
    Cli, Command, ExtremaArgs, FitArgs, GridArgs, SideArg, SuperBubbleArgs, SynthArgs,
};
use crate::report::{
    read_fit_report, sidecar_path, to_json, FileDigest, FitReport, RunManifest, SuperBubbleDocument,
};
use crate::CliError;

const DAY: f64 = 1.0 / 365.0;

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit(a) => fit(&a),
        Command::Extrema(a) => extrema(&a),
        Command::Superbubble(a) => superbubble(&a),
        Command::Synth(a) => synth(&a),
    }
}

fn usage(msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(anyhow!("{msg}"))
}

fn load(path: &Path) -> Result<(PriceSeries, FileDigest), CliError> {
    let bytes = fs::read(path)
        .with_context(|| format!("cannot read input file {}", path.display()))
        .map_err(CliError::Usage)?;
    let series = parse_csv(&bytes)
        .with_context(|| format!("{}", path.display()))
        .map_err(CliError::Compute)?
        .with_label(path.display().to_string());
    Ok((series, FileDigest::of(path, &bytes)))
}

fn side(s: SideArg) -> Side {
    match s {
        SideArg::Pre => Side::PreCritical,
        SideArg::Post => Side::PostCritical,
    }
}

fn execution(grid: &GridArgs) -> Execution {
    if grid.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

/// Defaults for the windowed data, then flag overrides.
fn fit_config(data: &PriceSeries, side: Side, grid: &GridArgs) -> Result<FitConfig, CliError> {
    let mut cfg = match side {
        Side::PreCritical => FitConfig::pre_critical(data.first_t(), data.last_t()),
        Side::PostCritical => FitConfig::post_critical(data.first_t(), data.last_t()),
    };
    cfg.lambda_mode = match grid.lambda.as_slice() {
        [] => return Err(usage("--lambda needs a value")),
        [l] => LambdaMode::Fixed(*l),
        ls => LambdaMode::Grid(ls.to_vec()),
    };
    let set = |slot: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut cfg.tc_grid.lo, grid.tc_min);
    set(&mut cfg.tc_grid.hi, grid.tc_max);
    set(&mut cfg.tc_grid.step, grid.tc_step);
    set(&mut cfg.alpha_grid.lo, grid.alpha_min);
    set(&mut cfg.alpha_grid.hi, grid.alpha_max);
    set(&mut cfg.alpha_grid.step, grid.alpha_step);
    if let Some(r) = grid.refine_rounds {
        cfg.refine_rounds = r;
    }
    if let Some(m) = grid.min_points {
        cfg.min_points = m;
    }
    cfg.fit_log_price = grid.log_price;
    Ok(cfg)
}

fn model_price(fit: &FitResult, log_price: bool, t: f64) -> Result<f64, CliError> {
    let m = evaluate_model(&fit.params, t)?;
    Ok(if log_price { m.exp() } else { m })
}

fn fit(a: &FitArgs) -> Result<(), CliError> {
    let (series, input) = load(&a.input)?;
    let (start, end) = (
        a.window_start.unwrap_or(series.first_t()),
        a.window_end.unwrap_or(series.last_t()),
    );
    let windowed = a.window_start.is_some() || a.window_end.is_some();
    let data = if windowed {
        // a single bound past the data leaves nothing, not an inverted window
        let one_sided = a.window_start.is_none() || a.window_end.is_none();
        if one_sided && start >= end {
            return Err(lppl_core::Error::EmptySeries.into());
        }
        slice_window(&series, start, end)?
    } else {
        series.clone()
    };
    let mut cfg = fit_config(&data, side(a.side), &a.grid)?;
    if windowed {
        cfg = cfg.with_window(start, end);
    }
    let result = fit_lppl_with(&series, &cfg, execution(&a.grid))?;

    let mut curve = String::from("t,observed,model\n");
    for p in data.points() {
        let m = model_price(&result, cfg.fit_log_price, p.t)?;
        writeln!(curve, "{},{},{}", p.t, p.price, m).unwrap();
    }
    let mut trace = String::from("t_crit,alpha,lambda,sse\n");
    for n in &result.objective_trace {
        writeln!(trace, "{},{},{},{}", n.t_crit, n.alpha, n.lambda, n.sse).unwrap();
    }
    let report = FitReport {
        label: series.label().to_string(),
        config: cfg.clone(),
        fit: (&result).into(),
    };

    fs::create_dir_all(&a.out)
        .with_context(|| format!("cannot create output directory {}", a.out.display()))?;
    let mut manifest = RunManifest::new("fit", json!({ "fit_config": cfg }), Some(input));
    manifest.write_output(&a.out.join("report.json"), to_json(&report)?.as_bytes())?;
    manifest.write_output(&a.out.join("curve.csv"), curve.as_bytes())?;
    manifest.write_output(&a.out.join("trace.csv"), trace.as_bytes())?;
    manifest.save(&a.out.join("manifest.json"))?;

    let p = &report.fit.params;
    println!(
        "t_crit={:.4} alpha={:.4} lambda={} B={:.4} phi={:.4} rmse={:.4}{}",
        p.params.t_crit,
        p.params.alpha,
        p.params.lambda,
        p.amplitude,
        p.phase,
        report.fit.rmse,
        if report.fit.degenerate {
            " (degenerate)"
        } else {
            ""
        }
    );
    Ok(())
}

/// Writes to `out` with a sidecar manifest, or to stdout.
fn emit(
    out: Option<&Path>,
    text: &str,
    manifest: impl FnOnce() -> RunManifest,
) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let mut m = manifest();
            m.write_output(path, text.as_bytes())?;
            m.save(&sidecar_path(path))?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn extrema(a: &ExtremaArgs) -> Result<(), CliError> {
    let (params, input) = match &a.report {
        Some(path) => {
            let bytes =
                fs::read(path).with_context(|| format!("cannot read report {}", path.display()))?;
            (
                read_fit_report(path)?.fit.params.params,
                Some(FileDigest::of(path, &bytes)),
            )
        }
        None => {
            let m = &a.model;
            let (Some(t_crit), Some(amplitude), Some(phase)) = (m.t_crit, m.amplitude, m.phase)
            else {
                return Err(usage(
                    "give --report, or all of --t-crit, --amplitude and --phase",
                ));
            };
            let (c_cos, d_sin) = from_amplitude_phase(amplitude, phase);
            let params = ModelParams {
                t_crit,
                alpha: m.alpha.unwrap_or(0.5),
                lambda: m.lambda.unwrap_or(2.0),
                p_crit: m.p_crit.unwrap_or(0.0),
                a_env: m.a_env.unwrap_or(0.0),
                c_cos,
                d_sin,
                side: if a.from >= t_crit {
                    Side::PostCritical
                } else {
                    Side::PreCritical
                },
            };
            (params, None)
        }
    };
    let (maxima, minima) = extrema_times(&params, a.from, a.to)?;
    let mut rows: Vec<(&str, f64)> = maxima
        .times
        .iter()
        .map(|&t| ("max", t))
        .chain(minima.times.iter().map(|&t| ("min", t)))
        .collect();
    rows.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut csv = String::from("kind,t,x\n");
    for (kind, t) in rows {
        writeln!(csv, "{kind},{t},{}", (t - params.t_crit).abs()).unwrap();
    }
    let config = json!({ "params": params, "from": a.from, "to": a.to });
    emit(a.out.as_deref(), &csv, || {
        RunManifest::new("extrema", config, input)
    })
}

fn superbubble(a: &SuperBubbleArgs) -> Result<(), CliError> {
    let (series, input) = load(&a.input)?;
    let end = a.window_end.unwrap_or(series.last_t());
    let long_window = (
        a.long_start.unwrap_or(series.first_t()),
        a.long_end.unwrap_or(end),
    );
    let short_window = (a.short_start, a.short_end.unwrap_or(end));

    let long_data = slice_window(&series, long_window.0, long_window.1)?;
    let short_data = slice_window(&series, short_window.0, short_window.1)?;
    let long = fit_config(&long_data, Side::PreCritical, &a.grid)?
        .with_window(long_window.0, long_window.1);
    let mut short = fit_config(&short_data, Side::PreCritical, &a.grid)?
        .with_window(short_window.0, short_window.1);
    // the short window searches the same critical-time range as the long one
    short.tc_grid = long.tc_grid;

    let thresholds = SuperBubbleThresholds {
        min_gap_years: a.min_gap,
        max_rel_rmse: a.max_rel_rmse,
        min_sse_ratio: a.min_sse_ratio,
    };
    let report = detect_superbubble_with(&series, &long, &short, thresholds, execution(&a.grid))?;
    let doc = SuperBubbleDocument::new(long, short, &report);
    let config = json!({
        "long_config": doc.long_config,
        "short_config": doc.short_config,
        "thresholds": thresholds,
    });
    emit(a.out.as_deref(), &to_json(&doc)?, || {
        RunManifest::new("superbubble", config, Some(input))
    })?;
    if a.out.is_some() {
        println!(
            "superbubble={} gap={:.3} sse_ratio={:.3}",
            doc.is_superbubble, doc.gap_years, doc.sse_ratio
        );
    }
    Ok(())
}

fn synth(a: &SynthArgs) -> Result<(), CliError> {
    let (c_cos, d_sin) = from_amplitude_phase(a.amplitude, a.phase);
    let base = ModelParams {
        t_crit: a.t_crit,
        alpha: a.alpha,
        lambda: a.lambda,
        p_crit: a.p_crit,
        a_env: a.a_env,
        c_cos,
        d_sin,
        side: side(a.side),
    };
    let o = &a.overlay;
    let superbubble = match (o.overlay_t_crit, o.overlay_ramp_start) {
        (Some(t_crit), Some(ramp_start)) => {
            let (c_cos, d_sin) = from_amplitude_phase(o.overlay_amplitude, o.overlay_phase);
            Some(SuperBubbleOverlay {
                params: ModelParams {
                    t_crit,
                    alpha: o.overlay_alpha,
                    lambda: a.lambda,
                    p_crit: o.overlay_p_crit,
                    a_env: o.overlay_a_env,
                    c_cos,
                    d_sin,
                    side: Side::PreCritical,
                },
                ramp_start,
            })
        }
        _ => None,
    };
    let cfg = SynthConfig {
        base,
        superbubble,
        noise_sigma_rel: a.noise,
        seed: a.seed,
        t_from: a.from,
        t_to: a.to,
        step: a.step_days * DAY,
    };
    let series = generate(&cfg)?;
    let config = json!({ "synth_config": cfg });
    emit(a.out.as_deref(), &series.to_csv(), || {
        RunManifest::new("synth", config, None)
    })
}
