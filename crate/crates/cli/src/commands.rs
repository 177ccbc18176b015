use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sof_core::io::{
    matrix_to_rows, parse_gain, to_json_string, write_trajectory_csv, CertificateJson, FeasibilityJson, FormatError,
    PortraitManifest, Rows, SynthesisJson, SystemFile,
};
use sof_core::sim::IntegratorOptions;
use sof_core::{
    check_lossless, optimal_decay, phase_portrait, projection_conditions_with_margin, synthesize, verify_sof, Grid,
    Matrix, Nonlinearity, Options, Plant, SofError, SynthesisStatus, System, Traj, Vector,
};

use crate::grid::parse_grid;
use crate::{IntegratorArgs, SynthArgs};

const PASS: u8 = 0;
const NEGATIVE: u8 = 2;
const MAX_ITERATIONS: u8 = 3;

/// Gain reported for the worked example.
const REFERENCE_GAIN: f64 = -3.6231;

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn read_system_file(path: &Path) -> Result<SystemFile> {
    let text = read_text(path)?;
    serde_json::from_str(&text)
        .map_err(FormatError::from)
        .with_context(|| format!("malformed system file {}", path.display()))
}

fn read_system(path: &Path) -> Result<System> {
    read_system_file(path)?.to_system().with_context(|| format!("invalid system in {}", path.display()))
}

fn read_gain(path: &Path, plant: &Plant) -> Result<Matrix> {
    let k = parse_gain(&read_text(path)?).with_context(|| format!("malformed gain file {}", path.display()))?;
    plant.check_gain(&k).with_context(|| format!("gain in {} does not fit the plant", path.display()))?;
    Ok(k)
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    fs::write(path, to_json_string(value)).with_context(|| format!("cannot write {}", path.display()))
}

fn synthesis_options(args: &SynthArgs) -> Options {
    Options {
        epsilon: args.epsilon,
        max_iters: args.max_iters,
        num_restarts: args.restarts,
        seed: args.seed,
        ..Default::default()
    }
}

fn integrator_options(args: &IntegratorArgs) -> IntegratorOptions<f64> {
    IntegratorOptions { dt: args.dt, t_final: args.t_final, escape_radius: args.escape_radius }
}

#[derive(Debug, Serialize)]
struct CheckReport {
    n: usize,
    q: usize,
    p: usize,
    nonlinearity: bool,
    /// Index of the first term failing the skew test.
    skew_violation_index: Option<usize>,
    skew_violation: Option<f64>,
    samples: usize,
    seed: u64,
    tol: f64,
    max_violation: Option<f64>,
    pass: bool,
}

fn check_report(file: &SystemFile, samples: usize, seed: u64, tol: f64) -> Result<CheckReport> {
    let plant = file.plant().context("invalid plant")?;
    let mut report = CheckReport {
        n: plant.n(),
        q: plant.q(),
        p: plant.p(),
        nonlinearity: file.s.is_some(),
        skew_violation_index: None,
        skew_violation: None,
        samples,
        seed,
        tol,
        max_violation: Some(0.0),
        pass: true,
    };
    let Some(terms) = file.raw_terms().context("invalid nonlinearity")? else {
        return Ok(report);
    };
    if terms.len() != plant.n() {
        bail!("nonlinearity has {} terms but the plant has {} states", terms.len(), plant.n());
    }
    match Nonlinearity::new(terms) {
        Ok(nl) => {
            let r = check_lossless(&nl, samples, seed, tol);
            report.max_violation = Some(r.max_violation);
            report.pass = r.pass;
        }
        Err(SofError::NotSkew { index, violation }) => {
            report.skew_violation_index = Some(index);
            report.skew_violation = Some(violation);
            report.max_violation = None;
            report.pass = false;
        }
        Err(e) => return Err(e).context("invalid nonlinearity"),
    }
    Ok(report)
}

pub fn check(path: &Path, samples: usize, seed: u64, tol: f64) -> Result<u8> {
    if samples == 0 {
        bail!("--samples must be at least 1");
    }
    let file = read_system_file(path)?;
    let report = check_report(&file, samples, seed, tol).with_context(|| path.display().to_string())?;
    print!("{}", to_json_string(&report));
    Ok(if report.pass { PASS } else { NEGATIVE })
}

pub fn feasibility(path: &Path, strict_margin: f64) -> Result<u8> {
    if !(strict_margin.is_finite() && strict_margin >= 0.0) {
        bail!("--strict-margin must be non-negative");
    }
    let sys = read_system(path)?;
    let report = projection_conditions_with_margin(&sys.plant, strict_margin);
    print!("{}", to_json_string(&FeasibilityJson::from(&report)));
    Ok(if report.feasible { PASS } else { NEGATIVE })
}

fn status_code(status: SynthesisStatus) -> u8 {
    match status {
        SynthesisStatus::Certified => PASS,
        SynthesisStatus::Infeasible => NEGATIVE,
        SynthesisStatus::MaxIterations => MAX_ITERATIONS,
    }
}

/// Report for `synth --maximize-rate`, in the same layout as a plain
/// synthesis report.
fn rate_report(plant: &Plant, opts: &Options) -> Result<SynthesisJson> {
    let base = synthesize(plant, opts)?;
    if base.status == SynthesisStatus::Infeasible {
        return Ok(SynthesisJson::new(&base, opts.epsilon));
    }
    let bound = optimal_decay(plant, opts)?;
    let lambda = verify_sof(plant, &bound.k, opts.epsilon)?.lambda_max_reduced;
    let status = if lambda <= -opts.epsilon { SynthesisStatus::Certified } else { SynthesisStatus::MaxIterations };
    Ok(SynthesisJson {
        status: status.as_str(),
        k: Some(matrix_to_rows(&bound.k)),
        achieved_lambda: Some(lambda),
        epsilon: opts.epsilon,
        iterations_used: bound.iterations,
    })
}

pub fn synth(path: &Path, args: &SynthArgs, maximize_rate: bool, out: Option<&Path>) -> Result<u8> {
    let opts = synthesis_options(args);
    opts.validate()?;
    let sys = read_system(path)?;
    let report = if maximize_rate {
        rate_report(&sys.plant, &opts)?
    } else {
        SynthesisJson::new(&synthesize(&sys.plant, &opts)?, opts.epsilon)
    };
    let text = to_json_string(&report);
    if let Some(out) = out {
        fs::write(out, &text).with_context(|| format!("cannot write {}", out.display()))?;
    }
    print!("{text}");
    let status = match report.status {
        "Certified" => SynthesisStatus::Certified,
        "Infeasible" => SynthesisStatus::Infeasible,
        _ => SynthesisStatus::MaxIterations,
    };
    Ok(status_code(status))
}

pub fn certify(system: &Path, gain: &Path, epsilon: f64) -> Result<u8> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        bail!("--epsilon must be positive");
    }
    let sys = read_system(system)?;
    let k = read_gain(gain, &sys.plant)?;
    let cert = verify_sof(&sys.plant, &k, epsilon)?;
    print!("{}", to_json_string(&CertificateJson::from(&cert)));
    Ok(if cert.valid { PASS } else { NEGATIVE })
}

pub fn simulate(
    system: &Path,
    gain: Option<&Path>,
    x0: &[f64],
    integ: &IntegratorArgs,
    out: Option<&Path>,
) -> Result<u8> {
    let sys = read_system(system)?;
    let k = gain.map(|g| read_gain(g, &sys.plant)).transpose()?;
    let traj = sof_core::integrate(&sys, k.as_ref(), &Vector::from_column_slice(x0), &integrator_options(integ))?;
    match out {
        Some(path) => {
            let f = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            write_trajectory_csv(BufWriter::new(f), &traj)?;
        }
        None => write_trajectory_csv(BufWriter::new(io::stdout().lock()), &traj)?,
    }
    if traj.diverged {
        eprintln!("trajectory left the escape radius at t = {}", traj.escape_time.unwrap_or(f64::NAN));
    }
    Ok(PASS)
}

fn write_portrait(
    outdir: &Path,
    sys: &System,
    k: Option<&Matrix>,
    grid: &Grid,
    opts: &IntegratorOptions<f64>,
) -> Result<Vec<Traj>> {
    let trajs = phase_portrait(sys, k, grid, opts)?;
    fs::create_dir_all(outdir).with_context(|| format!("cannot create {}", outdir.display()))?;
    let mut files = Vec::with_capacity(trajs.len());
    for (i, t) in trajs.iter().enumerate() {
        let name = format!("traj_{i:03}.csv");
        let path = outdir.join(&name);
        let f = fs::File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        write_trajectory_csv(BufWriter::new(f), t).with_context(|| format!("cannot write {}", path.display()))?;
        files.push(name);
    }
    write_json(&outdir.join("index.json"), &PortraitManifest::new(grid, opts, k, &trajs, &files))?;
    Ok(trajs)
}

fn default_grid(closed_loop: bool) -> Grid {
    if closed_loop {
        Grid::circle(1.0, 16)
    } else {
        Grid::box_grid(3.0, 7, 7)
    }
}

pub fn phase(
    system: &Path,
    gain: Option<&Path>,
    grid: Option<&str>,
    jitter_seed: Option<u64>,
    integ: &IntegratorArgs,
    outdir: &Path,
) -> Result<u8> {
    let sys = read_system(system)?;
    let k = gain.map(|g| read_gain(g, &sys.plant)).transpose()?;
    let mut grid = match grid {
        Some(spec) => parse_grid(spec)?,
        None => default_grid(k.is_some()),
    };
    grid.jitter_seed = jitter_seed;
    let trajs = write_portrait(outdir, &sys, k.as_ref(), &grid, &integrator_options(integ))?;
    let diverged = trajs.iter().filter(|t| t.diverged).count();
    eprintln!("{} trajectories written to {}, {} diverged", trajs.len(), outdir.display(), diverged);
    Ok(PASS)
}

/// The worked example: `A = [[-0.1, 1], [0, -0.1]]`, `B = [1; 1]`,
/// `C = [1, 2]`, `N(x) = [[0, -x1], [x1, 0]]`.
pub fn example_system() -> System {
    let plant = Plant::new(
        Matrix::from_row_slice(2, 2, &[-0.1, 1.0, 0.0, -0.1]),
        Matrix::from_row_slice(2, 1, &[1.0, 1.0]),
        Matrix::from_row_slice(1, 2, &[1.0, 2.0]),
    )
    .expect("example plant is valid");
    let nl = Nonlinearity::new(vec![Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]), Matrix::zeros(2, 2)])
        .expect("example nonlinearity is skew");
    System::new(plant, Some(nl)).expect("dimensions agree")
}

#[derive(Debug, Serialize)]
struct RateJson {
    #[serde(rename = "K")]
    k: Rows,
    epsilon_star: f64,
    unbounded: bool,
    iterations: usize,
}

fn describe_gain(k: &Matrix) -> String {
    if k.len() == 1 {
        format!("{:.6}", k[(0, 0)])
    } else {
        format!("{:?}", matrix_to_rows(k))
    }
}

pub fn demo(outdir: &Path, args: &SynthArgs, integ: &IntegratorArgs) -> Result<u8> {
    let opts = synthesis_options(args);
    opts.validate()?;
    let integ = integrator_options(integ);
    fs::create_dir_all(outdir).with_context(|| format!("cannot create {}", outdir.display()))?;

    let sys = example_system();
    let plant = &sys.plant;
    let file = SystemFile::from_system(&sys);
    write_json(&outdir.join("system.json"), &file)?;

    let check = check_report(&file, 1000, args.seed, 1e-10)?;
    write_json(&outdir.join("check.json"), &check)?;

    let feas = projection_conditions_with_margin(plant, 0.0);
    write_json(&outdir.join("feasibility.json"), &FeasibilityJson::from(&feas))?;

    let synth = synthesize(plant, &opts)?;
    write_json(&outdir.join("synth.json"), &SynthesisJson::new(&synth, opts.epsilon))?;

    let rate = optimal_decay(plant, &opts)?;
    write_json(
        &outdir.join("rate.json"),
        &RateJson {
            k: matrix_to_rows(&rate.k),
            epsilon_star: rate.epsilon_star,
            unbounded: rate.unbounded,
            iterations: rate.iterations,
        },
    )?;

    let reference = Matrix::from_element(1, 1, REFERENCE_GAIN);
    let cert_reference = verify_sof(plant, &reference, opts.epsilon)?;
    write_json(&outdir.join("certificate_reference.json"), &CertificateJson::from(&cert_reference))?;
    let cert_synth = match &synth.gain {
        Some(g) => {
            let c = verify_sof(plant, &g.k, opts.epsilon)?;
            write_json(&outdir.join("certificate_synth.json"), &CertificateJson::from(&c))?;
            Some(c)
        }
        None => None,
    };
    let cert_rate = verify_sof(plant, &rate.k, opts.epsilon)?;
    write_json(&outdir.join("certificate_rate.json"), &CertificateJson::from(&cert_rate))?;

    let closed = write_portrait(&outdir.join("closed_loop"), &sys, Some(&rate.k), &default_grid(true), &integ)?;
    let open = write_portrait(&outdir.join("open_loop"), &sys, None, &default_grid(false), &integ)?;

    let mut s = String::new();
    let yes_no = |b: bool| if b { "yes" } else { "no" };
    writeln!(s, "worked example: A = [[-0.1, 1], [0, -0.1]], B = [1; 1], C = [1, 2], N(x) = [[0, -x1], [x1, 0]]")?;
    writeln!(
        s,
        "lossless check: pass = {}, max |x^T z| = {:e}",
        yes_no(check.pass),
        check.max_violation.unwrap_or(f64::NAN)
    )?;
    writeln!(
        s,
        "feasibility: feasible = {}, lambda_B = {:.6}, lambda_C = {:.6}",
        yes_no(feas.feasible),
        feas.lambda_b,
        feas.lambda_c
    )?;
    writeln!(
        s,
        "synthesis (eps = {:e}): status = {}, iterations = {}",
        opts.epsilon,
        synth.status.as_str(),
        synth.iterations_used
    )?;
    if let (Some(g), Some(c)) = (&synth.gain, &cert_synth) {
        writeln!(
            s,
            "  K = {}, lambda_max = {:.6}, certificate valid = {}",
            describe_gain(&g.k),
            c.lambda_max_reduced,
            yes_no(c.valid)
        )?;
    }
    writeln!(
        s,
        "reference gain K = {REFERENCE_GAIN}: lambda_max = {:.6}, certificate valid = {}",
        cert_reference.lambda_max_reduced,
        yes_no(cert_reference.valid)
    )?;
    writeln!(
        s,
        "max-rate gain K = {}: epsilon_star = {:.6}, certificate valid = {}",
        describe_gain(&rate.k),
        rate.epsilon_star,
        yes_no(cert_rate.valid)
    )?;
    let closed_worst = closed.iter().filter_map(Traj::final_norm).fold(0.0f64, f64::max);
    writeln!(
        s,
        "closed loop (max-rate gain, circle r=1, 16 points): {} diverged, max final norm = {:e}",
        closed.iter().filter(|t| t.diverged).count(),
        closed_worst
    )?;
    let open_far = open.iter().filter(|t| t.final_norm().is_some_and(|n| n > 1.0)).count();
    writeln!(
        s,
        "open loop (box +-3, 7x7): {} diverged (escape radius {}), {} of {} end with norm > 1",
        open.iter().filter(|t| t.diverged).count(),
        integ.escape_radius,
        open_far,
        open.len()
    )?;
    fs::write(outdir.join("summary.txt"), &s)
        .with_context(|| format!("cannot write summary in {}", outdir.display()))?;
    print!("{s}");
    Ok(PASS)
}
