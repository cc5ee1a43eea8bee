//! `swingdyn`: command-line front end for the variable-length pendulum.
//!
//! Exit codes: 0 on success, 1 on invalid input, 2 on numerical failure.

mod check;
mod settings;

use std::f64::consts::PI;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use swingdyn::averaging::{AveragedRotation, Averager, BranchSign};
use swingdyn::classify::{classify, ClassifierConfig};
use swingdyn::integrator::{integrate, IntegratorConfig};
use swingdyn::melnikov::{self, OrbitKind, ResonanceSpec};
use swingdyn::sweep::{self, BoundaryCurve, BoundaryRequest, Format, Range, SweepSpec};
use swingdyn::{Error, Excitation, Params, Result, State};

use settings::Settings;

#[derive(Parser)]
#[command(
    name = "swingdyn",
    version,
    about = "Pendulum with periodically varying length"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and export it.
    Simulate(SimulateArgs),
    /// Label the long-time regime of one trajectory.
    Classify(ClassifyArgs),
    /// Melnikov threshold curves, or a table of M(tau0) at one parameter set.
    Melnikov(MelnikovArgs),
    /// Averaged superharmonic rotations: branches, existence and stability.
    Averaging(AveragingArgs),
    /// Classify a grid over (omega, eps) and export the regime map.
    Sweep(SweepArgs),
    /// Self-test of the elliptic integrals and Jacobi functions.
    EllipticCheck(CheckArgs),
}

#[derive(Args)]
struct Io {
    /// `key = value` file; flags take precedence over its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (standard output if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct ModelArgs {
    /// Relative amplitude of the length variation.
    #[arg(long)]
    eps: Option<f64>,
    /// Damping.
    #[arg(long)]
    beta: Option<f64>,
    /// Natural-to-excitation frequency ratio.
    #[arg(long)]
    omega: Option<f64>,
    /// Excitation law as `n:cos:sin` terms, default `1:1:0` (cos tau).
    #[arg(long)]
    excitation: Option<String>,
}

#[derive(Args)]
struct InitArgs {
    /// Initial angle [default: 0.1].
    #[arg(long, allow_hyphen_values = true)]
    theta0: Option<f64>,
    /// Initial angular velocity [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    v0: Option<f64>,
    /// Initial time, also the Poincaré section phase [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    tau0: Option<f64>,
}

#[derive(Args)]
struct ClassifierArgs {
    /// Periods discarded before sampling [default: 300].
    #[arg(long)]
    transient: Option<u64>,
    /// Periods in the sampling window [default: 200].
    #[arg(long)]
    sample: Option<u64>,
    /// Largest period searched [default: 8].
    #[arg(long)]
    q_max: Option<u32>,
    /// Section-point match tolerance [default: 1e-4].
    #[arg(long)]
    match_tol: Option<f64>,
    /// Total horizon in periods [default: 2000].
    #[arg(long)]
    max_periods: Option<u64>,
    /// Integrator relative tolerance [default: 1e-8].
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    init: InitArgs,
    /// Excitation periods to integrate [default: 100].
    #[arg(long)]
    periods: Option<u64>,
    /// Integrator relative tolerance [default: 1e-10].
    #[arg(long)]
    tol: Option<f64>,
    /// Export only the Poincaré section points.
    #[arg(long)]
    sections: bool,
    #[command(flatten)]
    io: Io,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    init: InitArgs,
    #[command(flatten)]
    classifier: ClassifierArgs,
    #[command(flatten)]
    io: Io,
}

#[derive(Args)]
struct MelnikovArgs {
    /// homoclinic, osc (1:q oscillations) or rot (q:1 rotations).
    #[arg(long)]
    kind: Option<String>,
    /// Resonance order [default: 2 for osc, 1 for rot].
    #[arg(long)]
    q: Option<u32>,
    /// Smallest omega of the threshold curve [default: 0.3].
    #[arg(long)]
    omega_min: Option<f64>,
    /// Largest omega of the threshold curve [default: 3].
    #[arg(long)]
    omega_max: Option<f64>,
    /// Samples on the curve [default: 200].
    #[arg(long)]
    n: Option<usize>,
    /// Tabulate M(tau0) over one period at --eps/--beta/--omega instead.
    #[arg(long)]
    table: bool,
    /// Rows in the table [default: 64].
    #[arg(long)]
    tau_n: Option<usize>,
    /// Add a column computed by quadrature along the unperturbed orbit.
    #[arg(long)]
    check: bool,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    io: Io,
}

#[derive(Args)]
struct AveragingArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Windings per q periods [default: 1].
    #[arg(long)]
    r: Option<u32>,
    /// Excitation periods per r windings [default: 1].
    #[arg(long)]
    q: Option<u32>,
    /// Gauss–Legendre panels per period for Phi [default: 128].
    #[arg(long)]
    panels: Option<usize>,
    /// Evaluate over an eps grid `min:max:n` (boundary mode, --eps ignored).
    #[arg(long)]
    eps_range: Option<String>,
    #[command(flatten)]
    io: Io,
}

#[derive(Args)]
struct SweepArgs {
    /// omega axis as `min:max:n`.
    #[arg(long)]
    omega: Option<String>,
    /// eps axis as `min:max:n`.
    #[arg(long)]
    eps: Option<String>,
    /// Damping, fixed over the grid.
    #[arg(long)]
    beta: Option<f64>,
    /// Excitation law as `n:cos:sin` terms, default `1:1:0` (cos tau).
    #[arg(long)]
    excitation: Option<String>,
    #[command(flatten)]
    init: InitArgs,
    #[command(flatten)]
    classifier: ClassifierArgs,
    /// Overlay the homoclinic boundary.
    #[arg(long)]
    homoclinic: bool,
    /// Overlay 1:q oscillation boundaries, e.g. `2,4`.
    #[arg(long)]
    osc_q: Option<String>,
    /// Overlay q:1 rotation boundaries, e.g. `1,2`.
    #[arg(long)]
    rot_q: Option<String>,
    /// Overlay averaged r:1 existence boundaries, e.g. `1,2`.
    #[arg(long)]
    avg_r: Option<String>,
    /// Worker threads [default: available parallelism].
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory [default: .].
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Comma-separated subset of csv,json,svg [default: all three].
    #[arg(long)]
    formats: Option<String>,
    /// Suppress progress on standard error.
    #[arg(long)]
    quiet: bool,
    /// `key = value` file; flags take precedence over its entries.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Acceptance tolerance for identities [default: 1e-12].
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    io: Io,
}

#[derive(Clone, Copy, PartialEq)]
enum OutFormat {
    Csv,
    Json,
}

impl FromStr for OutFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(Error::Parse(format!("unknown format `{s}` (csv, json)"))),
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum CurveKind {
    Homoclinic,
    Osc,
    Rot,
}

impl FromStr for CurveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "homoclinic" => Ok(Self::Homoclinic),
            "osc" | "oscillatory" => Ok(Self::Osc),
            "rot" | "rotational" => Ok(Self::Rot),
            _ => Err(Error::Parse(format!(
                "unknown kind `{s}` (homoclinic, osc, rot)"
            ))),
        }
    }
}

struct Output {
    path: Option<PathBuf>,
    format: OutFormat,
}

impl Output {
    fn resolve(s: &Settings, io: &Io, default: OutFormat) -> Result<Self> {
        Ok(Self {
            path: s
                .get(io.out.clone().map(|p| p.display().to_string()), "out")?
                .map(PathBuf::from),
            format: s.or(
                io.format.as_deref().map(str::parse).transpose()?,
                "format",
                default,
            )?,
        })
    }

    fn write(&self, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
        match &self.path {
            Some(path) => {
                let io_err = |e| Error::Io {
                    path: path.clone(),
                    source: e,
                };
                let file = std::fs::File::create(path).map_err(io_err)?;
                let mut w = io::BufWriter::new(file);
                body(&mut w).and_then(|_| w.flush()).map_err(io_err)
            }
            None => {
                let stdout = io::stdout();
                let mut w = io::BufWriter::new(stdout.lock());
                match body(&mut w).and_then(|_| w.flush()) {
                    // A closed pipe (e.g. `| head`) is not an error.
                    Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
                    r => r.map_err(|e| Error::Io {
                        path: PathBuf::from("<stdout>"),
                        source: e,
                    }),
                }
            }
        }
    }

    fn json(&self, value: &Value) -> Result<()> {
        self.write(|w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)
        })
    }
}

fn settings(config: Option<&Path>) -> Result<Settings> {
    Settings::load(config)
}

fn excitation(s: &Settings, flag: Option<String>) -> Result<Excitation> {
    Ok(
        s.get::<Excitation>(flag.as_deref().map(str::parse).transpose()?, "excitation")?
            .unwrap_or_default(),
    )
}

fn model(s: &Settings, m: &ModelArgs) -> Result<Params> {
    let eps = s.require(m.eps, "eps")?;
    let beta = s.require(m.beta, "beta")?;
    let omega = s.require(m.omega, "omega")?;
    Params::with_excitation(eps, beta, omega, excitation(s, m.excitation.clone())?)
}

fn initial(s: &Settings, init: &InitArgs) -> Result<State> {
    Ok(State::new(
        s.or(init.theta0, "theta0", 0.1)?,
        s.or(init.v0, "v0", 0.0)?,
        s.or(init.tau0, "tau0", 0.0)?,
    ))
}

fn classifier(s: &Settings, c: &ClassifierArgs) -> Result<ClassifierConfig> {
    let d = ClassifierConfig::default();
    let cfg = ClassifierConfig {
        transient_periods: s.or(c.transient, "transient", d.transient_periods)?,
        sample_periods: s.or(c.sample, "sample", d.sample_periods)?,
        q_max: s.or(c.q_max, "q-max", d.q_max)?,
        match_tol: s.or(c.match_tol, "match-tol", d.match_tol)?,
        max_periods: s.or(c.max_periods, "max-periods", d.max_periods)?,
        integrator: IntegratorConfig::analysis().with_tolerance(s.or(c.tol, "tol", 1e-8)?),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let s = settings(a.io.config.as_deref())?;
    let p = model(&s, &a.model)?;
    let init = initial(&s, &a.init)?;
    let periods: u64 = s.or(a.periods, "periods", 100)?;
    let tol = s.get(a.tol, "tol")?;
    let sections = s.switch(a.sections, "sections")?;
    let out = Output::resolve(&s, &a.io, OutFormat::Csv)?;
    s.finish()?;

    let cfg = match tol {
        Some(t) => IntegratorConfig::analysis().with_tolerance(t),
        None => IntegratorConfig::analysis(),
    };
    let traj = integrate(init, &p, init.tau + 2.0 * PI * periods as f64, &cfg)?;
    match out.format {
        OutFormat::Csv => out.write(|w| traj.write_csv(w, sections)),
        OutFormat::Json => {
            let mut value = serde_json::to_value(&traj).map_err(json_err)?;
            if sections {
                value.as_object_mut().expect("object").remove("dense");
            }
            out.json(&value)
        }
    }
}

fn classify_cmd(a: ClassifyArgs) -> Result<()> {
    let s = settings(a.io.config.as_deref())?;
    let p = model(&s, &a.model)?;
    let init = initial(&s, &a.init)?;
    let cfg = classifier(&s, &a.classifier)?;
    let out = Output::resolve(&s, &a.io, OutFormat::Json)?;
    s.finish()?;

    let label = classify(init, &p, &cfg)?;
    match out.format {
        OutFormat::Json => {
            let mut value = serde_json::to_value(label).map_err(json_err)?;
            value["label"] = json!(label.to_string());
            out.json(&value)
        }
        OutFormat::Csv => out.write(|w| {
            let opt = |x: Option<String>| x.unwrap_or_default();
            let fs = label.final_state;
            writeln!(w, "kind,r,q,periods,theta,v,tau")?;
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                label.kind,
                opt(label.r.map(|r| r.to_string())),
                opt(label.q.map(|q| q.to_string())),
                label.periods,
                opt(fs.map(|s| s.theta.to_string())),
                opt(fs.map(|s| s.v.to_string())),
                opt(fs.map(|s| s.tau.to_string())),
            )
        }),
    }
}

fn melnikov_cmd(a: MelnikovArgs) -> Result<()> {
    let s = settings(a.io.config.as_deref())?;
    let kind: CurveKind = s.require(a.kind.as_deref().map(str::parse).transpose()?, "kind")?;
    let q = s.or(
        a.q,
        "q",
        match kind {
            CurveKind::Rot => 1,
            _ => 2,
        },
    )?;
    let omega_min = s.or(a.omega_min, "omega-min", 0.3)?;
    let omega_max = s.or(a.omega_max, "omega-max", 3.0)?;
    let n = s.or(a.n, "n", 200)?;
    let table = s.switch(a.table, "table")?;
    let tau_n = s.or(a.tau_n, "tau-n", 64)?;
    let check = s.switch(a.check, "check")?;
    let eps = s.get(a.model.eps, "eps")?;
    let beta = s.get(a.model.beta, "beta")?;
    let omega = s.get(a.model.omega, "omega")?;
    let out = Output::resolve(&s, &a.io, OutFormat::Csv)?;
    s.finish()?;
    if a.model.excitation.is_some() {
        return Err(Error::Domain(
            "the Melnikov closed forms assume phi = cos tau; --excitation is not supported".into(),
        ));
    }

    if !table {
        let range = Range::new(omega_min, omega_max, n);
        range.validate("omega")?;
        if omega_min <= 0.0 {
            return Err(Error::Domain("omega-min must be positive".into()));
        }
        let omegas = range.values();
        let curve = match kind {
            CurveKind::Homoclinic => BoundaryCurve::homoclinic(&omegas)?,
            CurveKind::Osc => BoundaryCurve::oscillatory(&omegas, q)?,
            CurveKind::Rot => BoundaryCurve::rotational(&omegas, q)?,
        };
        return match out.format {
            OutFormat::Csv => {
                out.write(|w| sweep::write_boundary_csv(w, std::slice::from_ref(&curve)))
            }
            OutFormat::Json => out.json(&serde_json::to_value(&curve).map_err(json_err)?),
        };
    }

    let missing = |k: &str| Error::Parse(format!("--table needs --{k}"));
    let (eps, beta, omega) = (
        eps.ok_or_else(|| missing("eps"))?,
        beta.ok_or_else(|| missing("beta"))?,
        omega.ok_or_else(|| missing("omega"))?,
    );
    Params::new(eps, beta, omega)?;
    if tau_n < 2 {
        return Err(Error::Domain("tau-n must be at least 2".into()));
    }
    let coeffs = match kind {
        CurveKind::Homoclinic => melnikov::homoclinic_coefficients(eps, beta, omega)?,
        CurveKind::Osc => melnikov::osc_coefficients(eps, beta, omega, q)?,
        CurveKind::Rot => melnikov::rot_coefficients(eps, beta, omega, q)?,
    };
    let mut rows = Vec::with_capacity(tau_n);
    for i in 0..tau_n {
        let tau0 = 2.0 * PI * i as f64 / tau_n as f64;
        let quad = if check {
            Some(match kind {
                CurveKind::Homoclinic => {
                    melnikov::homoclinic_by_quadrature(eps, beta, omega, tau0)?
                }
                CurveKind::Osc => melnikov::subharmonic_by_quadrature(
                    eps,
                    beta,
                    omega,
                    ResonanceSpec::new(OrbitKind::Oscillatory, 1, q)?,
                    tau0,
                )?,
                CurveKind::Rot => melnikov::subharmonic_by_quadrature(
                    eps,
                    beta,
                    omega,
                    ResonanceSpec::new(OrbitKind::Rotational, 1, q)?,
                    tau0,
                )?,
            })
        } else {
            None
        };
        rows.push((tau0, coeffs.at(tau0), quad));
    }
    match out.format {
        OutFormat::Csv => out.write(|w| {
            writeln!(
                w,
                "# amplitude={} offset={} threshold_ratio={}",
                coeffs.amplitude, coeffs.offset, coeffs.threshold_ratio
            )?;
            writeln!(
                w,
                "{}",
                if check {
                    "tau0,m,m_quadrature"
                } else {
                    "tau0,m"
                }
            )?;
            for (tau0, m, quad) in &rows {
                match quad {
                    Some(qv) => writeln!(w, "{tau0},{m},{qv}")?,
                    None => writeln!(w, "{tau0},{m}")?,
                }
            }
            Ok(())
        }),
        OutFormat::Json => out.json(&json!({
            "coefficients": coeffs,
            "rows": rows
                .iter()
                .map(|(tau0, m, quad)| json!({"tau0": tau0, "m": m, "m_quadrature": quad}))
                .collect::<Vec<_>>(),
        })),
    }
}

fn rotation_json(rot: &AveragedRotation, stability_threshold: Option<f64>) -> Result<Value> {
    let mut value = serde_json::to_value(rot).map_err(json_err)?;
    for (sign, key) in [(BranchSign::Plus, "plus"), (BranchSign::Minus, "minus")] {
        if let Some(b) = rot.branch(sign) {
            value[key]["residual"] = json!(rot.residual(b.theta0));
        }
    }
    value["stability_threshold_omega_over_beta"] = json!(stability_threshold);
    Ok(value)
}

fn averaging_cmd(a: AveragingArgs) -> Result<()> {
    let s = settings(a.io.config.as_deref())?;
    let eps_range: Option<Range> = s.get(
        a.eps_range.as_deref().map(str::parse).transpose()?,
        "eps-range",
    )?;
    let eps = s.get(a.model.eps, "eps")?;
    let beta = s.require(a.model.beta, "beta")?;
    let omega = s.require(a.model.omega, "omega")?;
    let exc = excitation(&s, a.model.excitation.clone())?;
    let r = s.or(a.r, "r", 1)?;
    let q = s.or(a.q, "q", 1)?;
    let panels = s.or(a.panels, "panels", swingdyn::averaging::DEFAULT_PANELS)?;
    let default_format = if eps_range.is_some() {
        OutFormat::Csv
    } else {
        OutFormat::Json
    };
    let out = Output::resolve(&s, &a.io, default_format)?;
    s.finish()?;
    if omega <= 0.0 {
        return Err(Error::Domain(format!("omega = {omega} must be positive")));
    }

    let solve = |eps: f64| -> Result<(AveragedRotation, Option<f64>)> {
        let p = Params::with_excitation(eps, beta, omega, exc.clone())?;
        let avg = Averager::with_panels(&p, panels)?;
        Ok((avg.solve_branches(r, q)?, avg.stability_threshold(r, q)?))
    };

    match eps_range {
        None => {
            let eps = eps.ok_or_else(|| Error::Parse("missing required value --eps".into()))?;
            let (rot, st) = solve(eps)?;
            match out.format {
                OutFormat::Json => {
                    let mut value = rotation_json(&rot, st)?;
                    value["beta"] = json!(beta);
                    value["omega"] = json!(omega);
                    out.json(&value)
                }
                OutFormat::Csv => out.write(|w| swingdyn::averaging::write_branch_csv(w, &[rot])),
            }
        }
        Some(range) => {
            range.validate("eps")?;
            let mut rows = Vec::with_capacity(range.n);
            for e in range.values() {
                match solve(e) {
                    Ok(row) => rows.push(row),
                    // A = B = 0: no rotation at any damping; leave the row out.
                    Err(Error::Degenerate(_)) => {}
                    Err(err) => return Err(err),
                }
            }
            match out.format {
                OutFormat::Csv => {
                    let rots: Vec<_> = rows.into_iter().map(|(rot, _)| rot).collect();
                    out.write(|w| swingdyn::averaging::write_branch_csv(w, &rots))
                }
                OutFormat::Json => {
                    let values = rows
                        .iter()
                        .map(|(rot, st)| rotation_json(rot, *st))
                        .collect::<Result<Vec<_>>>()?;
                    out.json(&json!({"beta": beta, "omega": omega, "rows": values}))
                }
            }
        }
    }
}

fn sweep_cmd(a: SweepArgs) -> Result<()> {
    let s = settings(a.config.as_deref())?;
    let omega: Range = s.require(a.omega.as_deref().map(str::parse).transpose()?, "omega")?;
    let eps: Range = s.require(a.eps.as_deref().map(str::parse).transpose()?, "eps")?;
    let beta = s.require(a.beta, "beta")?;
    let mut spec = SweepSpec::new(omega, eps, beta);
    spec.excitation = excitation(&s, a.excitation.clone())?;
    spec.initial_condition = initial(&s, &a.init)?;
    spec.classifier = classifier(&s, &a.classifier)?;
    spec.boundaries = BoundaryRequest {
        homoclinic: s.switch(a.homoclinic, "homoclinic")?,
        oscillatory_q: s.list(a.osc_q.clone(), "osc-q")?,
        rotational_q: s.list(a.rot_q.clone(), "rot-q")?,
        averaging_r: s.list(a.avg_r.clone(), "avg-r")?,
    };
    let default_jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let jobs = s.or(a.jobs, "jobs", default_jobs)?;
    let out_dir: PathBuf = s
        .or(
            a.out_dir.map(|p| p.display().to_string()),
            "out-dir",
            ".".to_string(),
        )?
        .into();
    let mut formats: Vec<Format> = s.list(a.formats.clone(), "formats")?;
    if formats.is_empty() {
        formats = Format::ALL.to_vec();
    }
    let quiet = s.switch(a.quiet, "quiet")?;
    s.finish()?;
    if jobs == 0 {
        return Err(Error::Domain("jobs must be at least 1".into()));
    }
    spec.validate()?;

    let total = spec.omega.n * spec.eps.n;
    let step = (total / 20).max(1);
    let result = sweep::run_sweep_with_progress(&spec, jobs, |done| {
        if !quiet && (done % step == 0 || done == total) {
            eprintln!("classified {done}/{total} cells");
        }
    })?;
    let written = sweep::export_map(&result, &out_dir, &formats)?;
    if !quiet {
        let counts: Vec<String> = swingdyn::classify::RegimeKind::ALL
            .iter()
            .map(|&k| format!("{k} {}", result.count(k)))
            .collect();
        eprintln!("{}", counts.join(", "));
    }
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn elliptic_check(a: CheckArgs) -> Result<bool> {
    let s = settings(a.io.config.as_deref())?;
    let tol = s.or(a.tol, "tol", 1e-12)?;
    let out = Output::resolve(&s, &a.io, OutFormat::Csv)?;
    s.finish()?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Domain("tol must be positive".into()));
    }
    let checks = check::run(tol)?;
    match out.format {
        OutFormat::Csv => out.write(|w| {
            writeln!(w, "check,max_error,tol,pass")?;
            for c in &checks {
                writeln!(w, "{},{:e},{:e},{}", c.name, c.max_error, c.tol, c.passed())?;
            }
            Ok(())
        })?,
        OutFormat::Json => out.json(&Value::Array(
            checks.iter().map(check::Check::to_json).collect(),
        ))?,
    }
    Ok(checks.iter().all(check::Check::passed))
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Parse(format!("serialization failed: {e}"))
}

fn exit_for(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    if err.is_numerical() {
        ExitCode::from(2)
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Classify(a) => classify_cmd(a),
        Command::Melnikov(a) => melnikov_cmd(a),
        Command::Averaging(a) => averaging_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::EllipticCheck(a) => match elliptic_check(a) {
            Ok(true) => Ok(()),
            Ok(false) => {
                eprintln!("error: elliptic self-test failed");
                return ExitCode::from(2);
            }
            Err(e) => Err(e),
        },
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => exit_for(&e),
    }
}
