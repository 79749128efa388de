use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;
use trimci::analysis;
use trimci::engine::{ensemble_run_with, run_with};
use trimci::fci::{fci_state, FciOptions};
use trimci::integrals::{hubbard_integrals, write_fcidump_file};
use trimci::pt2::{extrapolate, extrapolate_weighted, pt2_correction, Pt2Result};
use trimci::wavefunction::WavefunctionFile;
use trimci::{Error, IntegralTable};

use crate::error::CliError;
use crate::manifest::{HubbardProblem, RunManifest};
use crate::{Analysis, AnalyzeArgs, Pt2Args};

pub const WAVEFUNCTION_FILE: &str = "wavefunction.txt";
pub const ITERATION_LOG: &str = "iterations.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";
pub const EXTRAPOLATION_FILE: &str = "extrapolation.csv";

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    let f = File::create(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(BufWriter::new(f))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| {
        CliError::Lib(Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })
    })
}

fn write_to(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> trimci::Result<()>) -> Result<(), CliError> {
    let mut out = create(path)?;
    let io = |e: std::io::Error| Error::Io {
        path: path.to_path_buf(),
        source: e,
    };
    body(&mut out).map_err(|e| match e {
        Error::Stream(s) => io(s),
        e => e,
    })?;
    out.flush().map_err(io)?;
    Ok(())
}

pub fn run(manifest: RunManifest, seed: Option<u64>, out_dir: Option<PathBuf>) -> Result<(), CliError> {
    let started = Instant::now();
    let mut config = manifest.config;
    if let Some(s) = seed.or(manifest.seed) {
        config.seed = s;
    }
    config.validate()?;
    let dir = out_dir.or(manifest.output_dir).unwrap_or_else(|| PathBuf::from("."));
    ensure_dir(&dir)?;
    let ints = manifest.problem.integrals()?;

    let log_path = dir.join(ITERATION_LOG);
    let mut log = create(&log_path)?;
    let mut log_error = None;
    let observer = |r: &trimci::IterationRecord, _: &trimci::WavefunctionState| {
        log::info!(
            "iteration {} core {} energy {:.10}",
            r.iteration,
            r.core_size,
            r.energy
        );
        if log_error.is_none() {
            log_error = writeln!(log, "{}", r.to_json_line()).err();
        }
    };
    let (outcome, best_run, ensemble) = if config.num_runs >= 2 {
        let e = ensemble_run_with(&config, &ints, observer)?;
        let early: Vec<_> = e
            .summaries
            .iter()
            .map(|s| json!({"run": s.run, "seed": s.seed, "energy": s.energy, "core_size": s.core_size, "error": s.error}))
            .collect();
        (e.outcome, Some(e.best_run), Some(early))
    } else {
        (run_with(&config, &ints, observer)?, None, None)
    };
    let io = |e: std::io::Error| Error::Io {
        path: log_path.clone(),
        source: e,
    };
    if let Some(e) = log_error {
        return Err(io(e).into());
    }
    log.flush().map_err(io)?;

    let state = &outcome.state;
    WavefunctionFile::new(ints.norb(), state.clone())?.save(dir.join(WAVEFUNCTION_FILE))?;
    let wall = started.elapsed().as_secs_f64();
    let summary = json!({
        "energy": state.energy,
        "determinants": state.len(),
        "iterations": outcome.records.last().map_or(0, |r| r.iteration),
        "stop": outcome.stop,
        "seed": config.seed,
        "best_run": best_run,
        "ensemble": ensemble,
        "wall_time_s": wall,
    });
    write_to(&dir.join(SUMMARY_FILE), |w| {
        serde_json::to_writer_pretty(&mut *w, &summary).map_err(std::io::Error::from)?;
        writeln!(w)?;
        Ok(())
    })?;
    println!("energy = {}", state.energy);
    println!("determinants = {}", state.len());
    println!("wall_time_s = {wall:.3}");
    Ok(())
}

fn check_sector(file: &WavefunctionFile, ints: &IntegralTable, path: &Path) -> Result<(), CliError> {
    if (file.norb, file.n_up, file.n_down) != (ints.norb(), ints.n_alpha(), ints.n_beta()) {
        return Err(Error::Dimension(format!(
            "{} holds a ({}, {}, {}) wavefunction but the problem is ({}, {}, {})",
            path.display(),
            file.norb,
            file.n_up,
            file.n_down,
            ints.norb(),
            ints.n_alpha(),
            ints.n_beta()
        ))
        .into());
    }
    Ok(())
}

/// `e_var,e_per` rows; a non-numeric first line is taken as a header.
fn read_points(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let f = File::open(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut points = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed = line.split_once(',').and_then(|(a, b)| {
            Some((a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?))
        });
        match parsed {
            Some(p) => points.push(p),
            None if i == 0 => continue,
            None => {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("{}: expected `e_var,e_per`", path.display()),
                }
                .into())
            }
        }
    }
    Ok(points)
}

pub fn pt2(args: &Pt2Args, series: bool, out_dir: Option<PathBuf>) -> Result<(), CliError> {
    let mut points = Vec::new();
    if let Some(p) = &args.points {
        points = read_points(p)?;
    } else {
        if args.wavefunctions.is_empty() {
            return Err(CliError::Usage("no wavefunction files given".into()));
        }
        let ints = args.problem.require()?.integrals()?;
        for path in &args.wavefunctions {
            let file = WavefunctionFile::load(path)?;
            check_sector(&file, &ints, path)?;
            let r: Pt2Result = pt2_correction(&file.state, &ints, args.epsilon2)?;
            println!("file = {}", path.display());
            println!("E_var = {}", r.e_var);
            println!("E_per = {}", r.e_per);
            println!("E_tot = {}", r.e_total());
            println!("n_external = {}", r.n_external);
            if r.n_positive_terms > 0 {
                log::warn!(
                    "{}: {} external determinants lie below E_var",
                    path.display(),
                    r.n_positive_terms
                );
            }
            println!();
            points.push((r.e_var, r.e_per));
        }
    }
    if !(series || args.points.is_some()) {
        return Ok(());
    }
    let fit = if args.weighted {
        let w: Vec<f64> = points.iter().map(|p| 1.0 / (p.1 * p.1)).collect();
        extrapolate_weighted(&points, &w)?
    } else {
        extrapolate(&points)?
    };
    let dir = out_dir.unwrap_or_else(|| PathBuf::from("."));
    ensure_dir(&dir)?;
    write_to(&dir.join(EXTRAPOLATION_FILE), |w| {
        writeln!(w, "minus_e_per,e_tot")?;
        for (x, y) in &fit.points {
            writeln!(w, "{x:?},{y:?}")?;
        }
        Ok(())
    })?;
    println!("intercept = {}", fit.intercept);
    println!("slope = {}", fit.slope);
    println!("r_squared = {}", fit.r_squared);
    Ok(())
}

pub fn analyze(args: &AnalyzeArgs, out_dir: Option<PathBuf>) -> Result<(), CliError> {
    let file = WavefunctionFile::load(&args.wavefunction)?;
    let state = &file.state;
    let dir = out_dir.unwrap_or_else(|| PathBuf::from("."));
    ensure_dir(&dir)?;
    match args.which {
        Analysis::Hamming => {
            let dist = analysis::hamming_distribution(state)?;
            let path = dir.join("hamming.csv");
            write_to(&path, |w| analysis::write_hamming_csv(&dist, w))?;
            println!("wrote {}", path.display());
        }
        Analysis::Powerlaw => {
            let fit = analysis::cumulative_and_fit(state, args.fit_lo, args.fit_hi)?;
            let tail = analysis::cumulative_tail(&state.coeffs);
            let path = dir.join("cumulative.csv");
            write_to(&path, |w| analysis::write_cumulative_csv(&tail, w))?;
            println!("alpha = {}", fit.alpha);
            println!("r_squared = {}", fit.r_squared);
            println!("sigma = {}", fit.sigma);
            println!("fit_ranks = {}..={}", fit.fit_range.0, fit.fit_range.1);
        }
        Analysis::Mds => {
            let mds = analysis::mds_embedding(state, args.max_dets)?;
            let path = dir.join("mds.csv");
            write_to(&path, |w| analysis::write_mds_csv(state, &mds, w))?;
            println!("points = {}", mds.points.len());
            println!("stress = {}", mds.stress);
        }
        Analysis::Complexity => {
            let r_alg = args.r_alg.unwrap_or(state.len() as f64);
            let report = analysis::complexity_report(args.epsilon, r_alg)?;
            let sigma_0 = match args.sigma0 {
                Some(s) => Some(s),
                None => match analysis::cumulative_and_fit(state, args.fit_lo, args.fit_hi) {
                    Ok(fit) => Some(fit.sigma),
                    Err(e) => {
                        log::warn!("no power-law estimate of sigma_0: {e}");
                        None
                    }
                },
            };
            let s_a = sigma_0.map(|s| report.s_a_vs(s));
            let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:?}"));
            let path = dir.join("complexity.csv");
            write_to(&path, |w| {
                writeln!(w, "epsilon,r_alg,sigma_a,log10_r,k,sigma_0,s_a")?;
                writeln!(
                    w,
                    "{:?},{:?},{:?},{:?},{:?},{},{}",
                    report.epsilon,
                    report.r_alg,
                    report.sigma_a,
                    report.log10_r,
                    report.k(),
                    opt(sigma_0),
                    opt(s_a)
                )?;
                Ok(())
            })?;
            println!("sigma_a = {}", report.sigma_a);
            println!("log10_r = {}", report.log10_r);
            if let (Some(s0), Some(sa)) = (sigma_0, s_a) {
                println!("sigma_0 = {s0}");
                println!("S_a = {sa}");
            }
        }
    }
    Ok(())
}

pub fn fci(problem: &crate::manifest::Problem, cap: u128, write: Option<&Path>) -> Result<(), CliError> {
    let ints = problem.integrals()?;
    let state = fci_state(&ints, &FciOptions::default(), cap)?;
    println!("energy = {}", state.energy);
    println!("determinants = {}", state.len());
    if let Some(path) = write {
        WavefunctionFile::new(ints.norb(), state)?.save(path)?;
    }
    Ok(())
}

pub fn hubbard_dump(h: &HubbardProblem, out: &Path) -> Result<(), CliError> {
    let ints = hubbard_integrals(&h.spec())?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    write_fcidump_file(&ints, out)?;
    println!("wrote {}", out.display());
    Ok(())
}
