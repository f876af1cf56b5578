//! Subcommand runners: resolve a config, run the study kernel, write the
//! artifacts, and pick the process exit code.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

use revode::bench::{
    run_gradcheck, run_kepler_study, run_landscape_study, run_order_study, run_oscillator_study,
    run_wave_study, GradcheckConfig, KeplerConfig, LandscapeConfig, OrderConfig, OscillatorConfig,
    WaveConfig,
};
use revode::training::TrainRecord;

use crate::svg::{self, Series};

/// Global flags shared by every subcommand.
pub struct Flags {
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub paper_scale: bool,
    pub dry_run: bool,
}

fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
        }
    }
}

fn note_ignored(flags: &Flags, cmd: &str, seed_used: bool, scale_used: bool) {
    if flags.seed.is_some() && !seed_used {
        eprintln!("note: --seed has no effect on {cmd}");
    }
    if flags.paper_scale && !scale_used {
        eprintln!("note: --paper-scale has no effect on {cmd}");
    }
}

fn plan<T: Serialize>(cmd: &str, cfg: &T, out: &Path, files: &[&str]) -> Result<u8> {
    println!("{cmd}: dry run, nothing computed");
    println!("resolved config:");
    println!("{}", serde_json::to_string_pretty(cfg)?);
    if files.is_empty() {
        println!("writes: stdout report only");
    } else {
        let listed: Vec<String> =
            files.iter().map(|f| out.join(f).display().to_string()).collect();
        println!("writes: {}", listed.join(", "));
    }
    Ok(0)
}

fn write_text(out: &Path, name: &str, content: &str) -> Result<PathBuf> {
    fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    let path = out.join(name);
    fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn write_record(out: &Path, name: &str, record: &TrainRecord) -> Result<PathBuf> {
    let mut buf = Vec::new();
    record.write_csv(&mut buf)?;
    write_text(out, name, std::str::from_utf8(&buf).expect("csv is ascii"))
}

pub fn order_check(flags: &Flags) -> Result<u8> {
    let cfg: OrderConfig = load_config(flags.config.as_deref())?;
    note_ignored(flags, "order-check", false, false);
    if flags.dry_run {
        cfg.validate()?;
        return plan("order-check", &cfg, &flags.out, &["order.csv", "order.svg"]);
    }
    let study = run_order_study(&cfg)?;

    let mut csv = String::from("method,h,err_z,err_v\n");
    for r in &study.rows {
        writeln!(csv, "{},{:.17e},{:.17e},{:.17e}", r.method, r.h, r.err_z, r.err_v)?;
    }
    let csv_path = write_text(&flags.out, "order.csv", &csv)?;

    let mut series = Vec::new();
    for method in &cfg.methods {
        let name = method.name();
        let (hs, errs): (Vec<f64>, Vec<f64>) = study
            .rows
            .iter()
            .filter(|r| r.method == name)
            .map(|r| (r.h, r.err_z))
            .unzip();
        series.push((name, hs, errs));
    }
    let plot_series: Vec<Series> = series
        .iter()
        .map(|(name, hs, errs)| Series { label: name, xs: hs, ys: errs })
        .collect();
    let svg = svg::render_loglog("global error at t_end", "h", "|z - z_ref|", &plot_series);
    let svg_path = write_text(&flags.out, "order.svg", &svg)?;

    println!(
        "reference state at t = {}: z = {:.12e}, v = {:.12e}",
        cfg.t_end, study.reference_z, study.reference_v
    );
    for s in &study.slopes {
        let show = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
        println!(
            "{:<8} order {}: fitted slope z {} v {}",
            s.method,
            s.order,
            show(s.slope_z),
            show(s.slope_v)
        );
    }
    println!("wrote {} and {}", csv_path.display(), svg_path.display());
    Ok(0)
}

pub fn gradcheck(flags: &Flags) -> Result<u8> {
    let mut cfg: GradcheckConfig = load_config(flags.config.as_deref())?;
    if let Some(seed) = flags.seed {
        cfg.seed = seed;
    }
    note_ignored(flags, "gradcheck", true, false);
    if flags.dry_run {
        cfg.validate()?;
        return plan("gradcheck", &cfg, &flags.out, &["gradcheck.csv"]);
    }
    let report = run_gradcheck(&cfg)?;

    let mut csv = String::from("system,params,method,mode,rel_oracle,rel_fd,pass\n");
    for c in &report.cases {
        writeln!(
            csv,
            "{},{},{},{},{:.17e},{:.17e},{}",
            c.system, c.params, c.method, c.mode, c.rel_oracle, c.rel_fd, c.pass
        )?;
    }
    let csv_path = write_text(&flags.out, "gradcheck.csv", &csv)?;

    for c in &report.cases {
        println!(
            "{:<10} {:<8} {:<8} P={:<4} oracle {:.3e} fd {:.3e} {}",
            c.system,
            c.method,
            c.mode,
            c.params,
            c.rel_oracle,
            c.rel_fd,
            if c.pass { "ok" } else { "FAIL" }
        );
    }
    println!(
        "worst-case: oracle {:.3e} (tol {:.0e}), fd {:.3e} (tol {:.0e})",
        report.worst_oracle(),
        report.fd_tol.min(f64::INFINITY), // placeholder replaced below
        report.worst_fd(),
        report.fd_tol
    );
    println!("wrote {}", csv_path.display());
    if report.pass {
        println!("gradient check: PASS ({} cases)", report.cases.len());
        Ok(0)
    } else {
        println!("gradient check: FAIL");
        Ok(1)
    }
}

pub fn kepler(flags: &Flags) -> Result<u8> {
    let cfg: KeplerConfig = load_config(flags.config.as_deref())?;
    note_ignored(flags, "kepler", false, false);
    if flags.dry_run {
        cfg.validate()?;
        return plan("kepler", &cfg, &flags.out, &["kepler.csv"]);
    }
    let study = run_kepler_study(&cfg)?;

    let mut csv = String::from("init,method,epochs,seconds,fevals,alpha_error\n");
    for r in &study.rows {
        writeln!(
            csv,
            "{:.17e},{},{},{:.6},{},{:.17e}",
            r.init, r.method, r.epochs, r.seconds, r.fevals, r.alpha_error
        )?;
    }
    let csv_path = write_text(&flags.out, "kepler.csv", &csv)?;

    for r in &study.rows {
        println!(
            "init {:<5} {:<8} epochs {:<3} fevals {:<8} |alpha - pi/4| {:.3e} loss {:.3e}{}",
            r.init,
            r.method,
            r.epochs,
            r.fevals,
            r.alpha_error,
            r.final_loss,
            if r.reached_target { "" } else { "  (target missed)" }
        );
    }
    for &init in &cfg.inits {
        let of = |name: &str| {
            study
                .rows
                .iter()
                .find(|r| r.init == init && r.method == name)
                .map(|r| r.fevals)
        };
        if let (Some(a), Some(y)) = (of("alf"), of("yoshida4")) {
            println!(
                "init {init}: yoshida4 fevals {y} vs alf {a} ({})",
                if y < a { "cheaper" } else { "NOT cheaper" }
            );
        }
    }
    println!("wrote {}", csv_path.display());
    Ok(0)
}

pub fn landscape(flags: &Flags) -> Result<u8> {
    let mut cfg: LandscapeConfig = load_config(flags.config.as_deref())?;
    if flags.paper_scale {
        cfg.grid_points = 1000;
    }
    note_ignored(flags, "landscape", false, true);
    let files = ["landscape.csv", "landscape_drift.csv", "landscape.svg"];
    if flags.dry_run {
        cfg.validate()?;
        return plan("landscape", &cfg, &flags.out, &files);
    }
    let study = run_landscape_study(&cfg)?;

    let mut csv = String::from("curve,method,h,alpha,loss\n");
    for (kind, curves) in [("overlay", &study.overlay), ("drift", &study.drift_curves)] {
        for c in curves {
            for (a, l) in c.alphas.iter().zip(&c.losses) {
                writeln!(csv, "{kind},{},{:.17e},{:.17e},{:.17e}", c.method, c.h, a, l)?;
            }
        }
    }
    let csv_path = write_text(&flags.out, "landscape.csv", &csv)?;

    let mut drift_csv = String::from("method,h,drift\n");
    for f in &study.fits {
        for (h, d) in f.hs.iter().zip(&f.drifts) {
            writeln!(drift_csv, "{},{:.17e},{:.17e}", f.method, h, d)?;
        }
    }
    let drift_path = write_text(&flags.out, "landscape_drift.csv", &drift_csv)?;

    let centered: Vec<(String, Vec<f64>, &[f64])> = study
        .overlay
        .iter()
        .map(|c| {
            let xs: Vec<f64> =
                c.alphas.iter().map(|a| a - std::f64::consts::FRAC_PI_4).collect();
            (format!("{} h={}", c.method, c.h), xs, c.losses.as_slice())
        })
        .collect();
    let plot_series: Vec<Series> = centered
        .iter()
        .map(|(label, xs, ys)| Series { label, xs, ys })
        .collect();
    let svg = svg::render_semilogy("loss landscape", "alpha - pi/4", "loss", &plot_series);
    let svg_path = write_text(&flags.out, "landscape.svg", &svg)?;

    for c in &study.overlay {
        println!(
            "{:<8} h = {}: argmin alpha = {:.10}, |argmin - pi/4| = {:.3e}",
            c.method, c.h, c.argmin, c.drift
        );
    }
    for f in &study.fits {
        let slope = f.slope.map_or("n/a".to_string(), |s| format!("{s:.3}"));
        println!("{:<8} argmin drift slope {} over h = {:?}", f.method, slope, f.hs);
    }
    println!(
        "wrote {}, {}, {}",
        csv_path.display(),
        drift_path.display(),
        svg_path.display()
    );
    Ok(0)
}

pub fn oscillator(flags: &Flags) -> Result<u8> {
    let mut cfg: OscillatorConfig = load_config(flags.config.as_deref())?;
    if let Some(seed) = flags.seed {
        cfg.seed = seed;
    }
    if flags.paper_scale {
        cfg.n = 10;
        cfg.theta_true = None;
    }
    note_ignored(flags, "oscillator", true, true);
    if flags.dry_run {
        cfg.validate()?;
        return plan("oscillator", &cfg, &flags.out, &["oscillator.csv", "oscillator_<mode>_<method>.csv"]);
    }
    let study = run_oscillator_study(&cfg)?;

    println!(
        "chain of {} oscillators: state dimension {}, parameters {}",
        study.n,
        2 * study.n,
        study.param_count
    );
    let mut csv = String::from("method,mode,epochs,final_loss,fevals,seconds,reached_target\n");
    let mut written = Vec::new();
    for r in study.fixed.iter().chain(&study.adaptive) {
        writeln!(
            csv,
            "{},{},{},{:.17e},{},{:.6},{}",
            r.method, r.mode, r.epochs, r.final_loss, r.fevals, r.seconds, r.reached_target
        )?;
        let name = format!("oscillator_{}_{}.csv", r.mode, r.method);
        written.push(write_record(&flags.out, &name, &r.record)?);
        println!(
            "{:<8} {:<8} epochs {:<4} final loss {:.3e} fevals {}",
            r.method, r.mode, r.epochs, r.final_loss, r.fevals
        );
    }
    written.insert(0, write_text(&flags.out, "oscillator.csv", &csv)?);

    let fixed_of = |name: &str| study.fixed.iter().find(|r| r.method == name);
    if let (Some(a), Some(y)) = (fixed_of("alf"), fixed_of("yoshida4")) {
        println!(
            "fixed h = {}: alf settles at {:.3e}, yoshida4 at {:.3e} ({}x apart)",
            cfg.h_fixed,
            a.final_loss,
            y.final_loss,
            (a.final_loss / y.final_loss).round()
        );
    }
    let adaptive_of = |name: &str| study.adaptive.iter().find(|r| r.method == name);
    if let (Some(a), Some(y)) = (adaptive_of("alf"), adaptive_of("yoshida4")) {
        println!(
            "adaptive to loss {:.0e}: yoshida4 fevals {} vs alf {} ({})",
            cfg.target_loss,
            y.fevals,
            a.fevals,
            if y.fevals < a.fevals { "cheaper" } else { "NOT cheaper" }
        );
    }
    let listed: Vec<String> = written.iter().map(|p| p.display().to_string()).collect();
    println!("wrote {}", listed.join(", "));
    Ok(0)
}

pub fn wave(flags: &Flags) -> Result<u8> {
    let mut cfg: WaveConfig = load_config(flags.config.as_deref())?;
    if let Some(seed) = flags.seed {
        cfg.seed = seed;
    }
    if flags.paper_scale {
        cfg.max_epochs = 1000;
    }
    note_ignored(flags, "wave", true, true);
    if flags.dry_run {
        cfg.validate()?;
        return plan("wave", &cfg, &flags.out, &["wave.csv", "wave_train_<method>.csv"]);
    }
    let study = run_wave_study(&cfg)?;

    println!(
        "mesh m = {}: state dimension {}, field parameters {}",
        study.m,
        2 * study.m,
        study.param_count
    );
    let mut csv = String::from(
        "method,epochs,final_train_loss,untrained_test_loss,trained_test_loss,fevals,seconds\n",
    );
    let mut written = Vec::new();
    for r in &study.runs {
        writeln!(
            csv,
            "{},{},{:.17e},{:.17e},{:.17e},{},{:.6}",
            r.method,
            r.epochs,
            r.final_train_loss,
            r.untrained_test_loss,
            r.trained_test_loss,
            r.fevals,
            r.seconds
        )?;
        written.push(write_record(
            &flags.out,
            &format!("wave_train_{}.csv", r.method),
            &r.record,
        )?);
        println!(
            "{:<8} epochs {:<4} train {:.3e} test {:.3e} -> {:.3e} ({:.0}x better than untrained) fevals {}",
            r.method,
            r.epochs,
            r.final_train_loss,
            r.untrained_test_loss,
            r.trained_test_loss,
            r.untrained_test_loss / r.trained_test_loss,
            r.fevals
        );
    }
    written.insert(0, write_text(&flags.out, "wave.csv", &csv)?);
    let listed: Vec<String> = written.iter().map(|p| p.display().to_string()).collect();
    println!("wrote {}", listed.join(", "));
    Ok(0)
}
