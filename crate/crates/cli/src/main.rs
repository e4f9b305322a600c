mod args;
mod config;

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::Parser;

use sbnd_core::baselines::{Decoder, HardDecoder, MapDecoder, MapMode, OsdDecoder};
use sbnd_core::codes::{code_from_pc, load_pc_matrix, polar_build, FrozenPolicy, LinearCode, PolarSpec};
use sbnd_core::eval::{sweep, EvalReport, SbndDecoder, StopRule};
use sbnd_core::plot::render_svg;
use sbnd_core::training::{load_checkpoint, log_csv, save_checkpoint, train, TrainConfig};

use args::{Cli, CodeArgs, Command, EvalArgs, PlotArgs, TrainArgs, SUBCOMMANDS};

/// Bad flags, malformed input files and other problems the user must fix; exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(UsageError(msg.into()))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<sbnd_core::Error>() {
            if matches!(e, sbnd_core::Error::Parse { .. }) {
                return 2;
            }
        }
    }
    1
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match parse_args(&argv) {
        Ok(c) => c,
        Err(e) => {
            if let Some(ce) = e.downcast_ref::<clap::Error>() {
                let _ = ce.print();
                return ExitCode::from(if ce.use_stderr() { 2 } else { 0 });
            }
            eprintln!("error: {e:#}");
            return ExitCode::from(exit_code(&e));
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn parse_args(argv: &[String]) -> anyhow::Result<Cli> {
    let first = Cli::try_parse_from(argv)?;
    let Some(path) = &first.config else {
        return Ok(first);
    };
    let entries = config::load(path)?;
    let Some(pos) = argv.iter().position(|a| SUBCOMMANDS.contains(&a.as_str())) else {
        return Ok(first);
    };
    Ok(Cli::try_parse_from(config::merge(argv, pos, &entries))?)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(usage("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .context("starting worker pool")?;
    }
    match cli.command {
        Command::CodeInfo(a) => cmd_code_info(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Plot(a) => cmd_plot(&a),
    }
}

fn build_code(a: &CodeArgs) -> anyhow::Result<LinearCode> {
    let code = match (&a.polar, &a.pc_file) {
        (Some(nk), None) => {
            let (n, k) = (nk[0], nk[1]);
            let mut spec = PolarSpec::new(n, k);
            if let Some(set) = &a.info_set {
                spec = spec.with_policy(FrozenPolicy::InfoSet(set.clone()));
            } else if let Some(eps) = a.epsilon {
                spec = spec.with_policy(FrozenPolicy::Bhattacharyya(eps));
            }
            polar_build(&spec).map_err(|e| usage(format!("invalid polar code: {e}")))?
        }
        (None, Some(path)) => {
            if a.info_set.is_some() || a.epsilon.is_some() {
                return Err(usage("--info-set and --epsilon only apply to --polar"));
            }
            let h = load_pc_matrix(path).with_context(|| format!("reading {}", path.display()))?;
            let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "pc".into());
            code_from_pc(name, &h).with_context(|| format!("building code from {}", path.display()))?
        }
        _ => return Err(usage("specify the code with --polar N K or --pc-file PATH")),
    };
    if a.no_standardize {
        Ok(code)
    } else {
        Ok(code.standardized()?)
    }
}

fn cmd_code_info(a: &CodeArgs) -> anyhow::Result<()> {
    let code = build_code(a)?;
    let (n, k) = (code.n(), code.k());
    let mut s = String::new();
    writeln!(s, "code: {}", code.name())?;
    writeln!(s, "n = {n}, k = {k}, rate = {}", code.rate())?;
    // Invariants are enforced on construction; report them explicitly anyway.
    code.check_invariants()?;
    writeln!(s, "rank G = {} (k = {k}): ok", code.generator().rank())?;
    writeln!(s, "rank H = {} (n - k = {}): ok", code.parity_check().rank(), n - k)?;
    writeln!(s, "G·Hᵀ = 0: ok")?;
    writeln!(s, "A·Gᵀ = I_k: ok")?;
    if let Some(rows) = code.polar_rows() {
        let frozen: Vec<usize> = (0..n).filter(|i| !rows.contains(i)).collect();
        writeln!(s, "info rows: {}", join(rows))?;
        writeln!(s, "frozen rows: {}", join(&frozen))?;
    }
    if let Some(info) = code.info_set() {
        writeln!(s, "systematic positions: {}", join(info))?;
    }
    let h = code.parity_check();
    let (reduced, _) = h.rref_rows();
    let standard = &reduced == h;
    writeln!(s, "H standardized: {}", if standard { "yes" } else { "no" })?;
    print!("{s}");
    Ok(())
}

fn join(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn cmd_train(a: &TrainArgs) -> anyhow::Result<()> {
    let code = build_code(&a.code)?;
    let cfg = TrainConfig {
        batch_size: a.batch_size,
        train_ebn0_db: a.ebn0,
        learning_rate: a.lr,
        steps: a.steps,
        seed: a.seed,
        scale: a.scale,
        time_steps: a.time_steps,
        depth: a.depth,
        log_every: a.log_every.max(1),
        ..TrainConfig::default()
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    cfg.estimator_config(&code).map_err(|e| usage(e.to_string()))?;
    eprintln!(
        "training {} with M={} T={} D={}, batch {}, {} dB, lr {}, {} steps",
        code.name(),
        cfg.scale,
        cfg.time_steps,
        cfg.depth,
        cfg.batch_size,
        cfg.train_ebn0_db,
        cfg.learning_rate,
        cfg.steps
    );
    let out = train::<f32>(&code, &cfg, |p| eprintln!("step {:>7}  loss {:.6}", p.step, p.loss))?;
    save_checkpoint(&out.params, &a.checkpoint).with_context(|| format!("writing {}", a.checkpoint.display()))?;
    if let Some(path) = &a.loss_log {
        fs::write(path, log_csv(&out.log)).with_context(|| format!("writing {}", path.display()))?;
    }
    eprintln!("wrote {}", a.checkpoint.display());
    Ok(())
}

/// `start:step:end` (inclusive) or a comma list; must be strictly ascending.
pub fn parse_snr_list(spec: &str) -> anyhow::Result<Vec<f64>> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| usage(format!("invalid Eb/N0 value {t:?}")))
    };
    let list = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(usage(format!("Eb/N0 range {spec:?} must be start:step:end")));
        }
        let (start, step, end) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if step <= 0.0 || end < start {
            return Err(usage(format!("Eb/N0 range {spec:?} needs step > 0 and end ≥ start")));
        }
        let count = ((end - start) / step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| start + step * i as f64).collect()
    } else {
        spec.split(',').map(num).collect::<anyhow::Result<Vec<_>>>()?
    };
    if list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(usage(format!("Eb/N0 values {spec:?} must be ascending")));
    }
    Ok(list)
}

fn make_decoder(name: &str, code: &LinearCode, a: &EvalArgs) -> anyhow::Result<Box<dyn Decoder>> {
    Ok(match name {
        "hard" => Box::new(HardDecoder::new(code)),
        "map" => Box::new(MapDecoder::new(code, MapMode::Block)?),
        "map-bit" => Box::new(MapDecoder::new(code, MapMode::Bitwise)?),
        "sbnd" => {
            let path = a.checkpoint.as_ref().ok_or_else(|| usage("the sbnd decoder needs --checkpoint"))?;
            let params = load_checkpoint(path).with_context(|| format!("reading {}", path.display()))?;
            Box::new(SbndDecoder::new(code, params).with_context(|| format!("checkpoint {}", path.display()))?)
        }
        other => match other.strip_prefix("osd").map(str::parse::<usize>) {
            Some(Ok(order)) => Box::new(OsdDecoder::new(code, order)),
            _ => bail!(UsageError(format!(
                "unknown decoder {other:?} (expected hard, osd<order>, map, map-bit or sbnd)"
            ))),
        },
    })
}

fn cmd_eval(a: &EvalArgs) -> anyhow::Result<()> {
    let code = build_code(&a.code)?;
    let snrs = parse_snr_list(&a.ebn0)?;
    let stop = StopRule {
        target_frame_errors: a.target_errors,
        min_frames: a.min_frames,
        max_frames: a.max_frames,
        ..StopRule::default()
    };
    stop.validate().map_err(|e| usage(e.to_string()))?;
    let decoders = a
        .decoder
        .iter()
        .map(|d| make_decoder(d.trim(), &code, a))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut report = EvalReport::default();
    for d in &decoders {
        eprintln!("evaluating {} on {}", d.name(), code.name());
        let r = sweep(&code, d.as_ref(), &snrs, &stop, a.seed)?;
        for row in &r.rows {
            eprintln!(
                "  {:>6.2} dB  frames {:>9}  BER {:.3e}  FER {:.3e}",
                row.ebn0_db,
                row.frames,
                row.ber(),
                row.fer()
            );
        }
        report.rows.extend(r.rows);
    }
    let csv = report.to_csv();
    match &a.out {
        Some(p) => fs::write(p, &csv).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(csv.as_bytes())?,
    }
    if let Some(p) = &a.svg {
        // The figure is drawn from the CSV text, never from in-memory state.
        let parsed = EvalReport::from_csv(&csv)?;
        fs::write(p, render_svg(&parsed)).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn cmd_plot(a: &PlotArgs) -> anyhow::Result<()> {
    let text = fs::read_to_string(&a.input).map_err(|e| usage(format!("cannot read {}: {e}", a.input.display())))?;
    let report = EvalReport::from_csv(&text).with_context(|| format!("parsing {}", a.input.display()))?;
    fs::write(&a.out, render_svg(&report)).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_ranges_and_lists() {
        assert_eq!(parse_snr_list("0:1:6").unwrap(), vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(parse_snr_list("1:0.5:2").unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(parse_snr_list("0:0.1:0.3").unwrap().len(), 4);
        assert_eq!(parse_snr_list("2, 3.5,4").unwrap(), vec![2.0, 3.5, 4.0]);
        assert_eq!(parse_snr_list("3").unwrap(), vec![3.0]);
        for bad in ["3,2", "0:0:1", "1:1:0", "a", "1:2", "1,1"] {
            let e = parse_snr_list(bad).unwrap_err();
            assert_eq!(exit_code(&e), 2, "{bad}");
        }
    }

    #[test]
    fn core_parse_errors_map_to_usage_exit() {
        let e: anyhow::Error = sbnd_core::Error::Parse { line: 1, msg: "x".into() }.into();
        assert_eq!(exit_code(&e.context("reading file")), 2);
        let e: anyhow::Error = sbnd_core::Error::Dimension("x".into()).into();
        assert_eq!(exit_code(&e), 1);
    }
}
