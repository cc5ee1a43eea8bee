//! Regime maps over the `(ω, ε)` plane at fixed `β`, with analytic boundary
//! overlays, and their CSV / JSON / SVG exports.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::averaging;
use crate::classify::{classify, ClassifierConfig, RegimeKind, RegimeLabel};
use crate::error::{Error, Result};
use crate::melnikov;
use crate::model::{Excitation, Params, State};

/// `n` equally spaced values from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Range {
    pub fn new(min: f64, max: f64, n: usize) -> Self {
        Self { min, max, n }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if self.n < 2 {
            return Err(Error::domain(format!(
                "{name} range needs at least 2 points"
            )));
        }
        if !(self.min >= 0.0 && self.max > self.min && self.max.is_finite()) {
            return Err(Error::domain(format!(
                "{name} range [{}, {}] must satisfy 0 <= min < max",
                self.min, self.max
            )));
        }
        Ok(())
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.max
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.n - 1) as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.value(i)).collect()
    }

    fn step(&self) -> f64 {
        (self.max - self.min) / (self.n - 1) as f64
    }
}

impl std::str::FromStr for Range {
    type Err = Error;

    /// `min:max:n`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<_> = s.split(':').collect();
        let bad = || Error::Parse(format!("range `{s}` must look like min:max:n"));
        if parts.len() != 3 {
            return Err(bad());
        }
        Ok(Self {
            min: parts[0].trim().parse().map_err(|_| bad())?,
            max: parts[1].trim().parse().map_err(|_| bad())?,
            n: parts[2].trim().parse().map_err(|_| bad())?,
        })
    }
}

/// Which analytic condition a curve encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BoundaryKind {
    /// `ε/β` threshold versus `ω` for homoclinic tangency.
    Homoclinic,
    /// `ε/β` threshold versus `ω` for the `1:q` oscillation.
    Oscillatory { q: u32 },
    /// `ε/β` threshold versus `ω` for the `q:1` rotation.
    Rotational { q: u32 },
    /// Minimal `ω/β` versus `ε` for the averaged `r:q` rotation.
    Averaging { r: u32, q: u32 },
}

impl BoundaryKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Homoclinic => "homoclinic",
            Self::Oscillatory { .. } => "oscillatory",
            Self::Rotational { .. } => "rotational",
            Self::Averaging { .. } => "averaging",
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Homoclinic => "homoclinic".into(),
            Self::Oscillatory { q } => format!("oscillation 1:{q}"),
            Self::Rotational { q } => format!("rotation {q}:1"),
            Self::Averaging { r, q } => format!("averaging {r}:{q}"),
        }
    }

    fn indices(&self) -> (Option<u32>, Option<u32>) {
        match *self {
            Self::Homoclinic => (None, None),
            Self::Oscillatory { q } => (Some(1), Some(q)),
            Self::Rotational { q } => (Some(q), Some(1)),
            Self::Averaging { r, q } => (Some(r), Some(q)),
        }
    }
}

/// Sampled analytic boundary. Abscissa is `ω` (ordinate `ε/β`) for the
/// Melnikov kinds and `ε` (ordinate `ω/β`) for averaging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve {
    pub kind: BoundaryKind,
    pub points: Vec<(f64, f64)>,
}

impl BoundaryCurve {
    /// Keeps finite ordinates only.
    pub fn new(kind: BoundaryKind, points: Vec<(f64, f64)>) -> Self {
        let points = points
            .into_iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .collect();
        Self { kind, points }
    }

    /// Points in `(ω, ε)` map coordinates at damping `beta`.
    pub fn map_points(&self, beta: f64) -> Vec<(f64, f64)> {
        match self.kind {
            BoundaryKind::Averaging { .. } => self
                .points
                .iter()
                .map(|&(eps, w)| (beta * w, eps))
                .collect(),
            _ => self
                .points
                .iter()
                .map(|&(omega, t)| (omega, beta * t))
                .collect(),
        }
    }

    /// Homoclinic threshold sampled on `omegas`.
    pub fn homoclinic(omegas: &[f64]) -> Result<Self> {
        let points = omegas
            .iter()
            .filter(|&&w| w > 0.0)
            .map(|&w| Ok((w, melnikov::homoclinic_threshold(w)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(BoundaryKind::Homoclinic, points))
    }

    /// `1:q` oscillation threshold on `omegas`; `ω` without the resonance is
    /// skipped.
    pub fn oscillatory(omegas: &[f64], q: u32) -> Result<Self> {
        let mut points = Vec::new();
        for &w in omegas.iter().filter(|&&w| w > 0.0) {
            if let Some(t) = melnikov::osc_threshold(w, q)? {
                points.push((w, t));
            }
        }
        Ok(Self::new(BoundaryKind::Oscillatory { q }, points))
    }

    pub fn rotational(omegas: &[f64], q: u32) -> Result<Self> {
        let points = omegas
            .iter()
            .filter(|&&w| w > 0.0)
            .map(|&w| Ok((w, melnikov::rot_threshold(w, q)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(BoundaryKind::Rotational { q }, points))
    }
}

/// Writes curves as rows `abscissa,threshold,kind,r,q`.
pub fn write_boundary_csv(mut out: impl Write, curves: &[BoundaryCurve]) -> std::io::Result<()> {
    writeln!(out, "abscissa,threshold,kind,r,q")?;
    for c in curves {
        let (r, q) = c.kind.indices();
        let show = |x: Option<u32>| x.map(|v| v.to_string()).unwrap_or_default();
        for (x, y) in &c.points {
            writeln!(out, "{x},{y},{},{},{}", c.kind.name(), show(r), show(q))?;
        }
    }
    Ok(())
}

/// Analytic curves to overlay on a sweep.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRequest {
    #[serde(default)]
    pub homoclinic: bool,
    #[serde(default)]
    pub oscillatory_q: Vec<u32>,
    #[serde(default)]
    pub rotational_q: Vec<u32>,
    /// `r` values of `r:1` averaged rotations.
    #[serde(default)]
    pub averaging_r: Vec<u32>,
}

impl BoundaryRequest {
    pub fn is_empty(&self) -> bool {
        !self.homoclinic
            && self.oscillatory_q.is_empty()
            && self.rotational_q.is_empty()
            && self.averaging_r.is_empty()
    }
}

/// Default start `θ = 0.1, v = 0, τ = 0`.
pub fn default_initial_condition() -> State {
    State::new(0.1, 0.0, 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub omega: Range,
    pub eps: Range,
    pub beta: f64,
    #[serde(default)]
    pub excitation: Excitation,
    pub classifier: ClassifierConfig,
    pub initial_condition: State,
    #[serde(default)]
    pub boundaries: BoundaryRequest,
}

impl SweepSpec {
    pub fn new(omega: Range, eps: Range, beta: f64) -> Self {
        Self {
            omega,
            eps,
            beta,
            excitation: Excitation::cosine(),
            classifier: ClassifierConfig::default(),
            initial_condition: default_initial_condition(),
            boundaries: BoundaryRequest::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.omega.validate("omega")?;
        self.eps.validate("eps")?;
        if self.omega.min <= 0.0 {
            return Err(Error::domain("omega range must be positive"));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::domain(format!("beta = {} must be >= 0", self.beta)));
        }
        // The largest ε decides whether the length stays positive.
        Params::with_excitation(
            self.eps.max,
            self.beta,
            self.omega.max,
            self.excitation.clone(),
        )?;
        self.classifier.validate()
    }

    /// Base name `sweep_<beta>_<nx>x<ny>` of exported files.
    pub fn file_stem(&self) -> String {
        format!("sweep_{}_{}x{}", self.beta, self.omega.n, self.eps.n)
    }

    fn cell_params(&self, index: usize) -> (f64, f64) {
        let (i_eps, i_omega) = (index / self.omega.n, index % self.omega.n);
        (self.omega.value(i_omega), self.eps.value(i_eps))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub omega: f64,
    pub eps: f64,
    pub label: RegimeLabel,
}

/// Completed sweep: cells in row-major order (`ε` rows, `ω` columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub cells: Vec<Cell>,
    pub curves: Vec<BoundaryCurve>,
}

impl SweepResult {
    pub fn count(&self, kind: RegimeKind) -> usize {
        self.cells.iter().filter(|c| c.label.kind == kind).count()
    }
}

fn classify_cell(spec: &SweepSpec, index: usize) -> Cell {
    let (omega, eps) = spec.cell_params(index);
    let label = Params::with_excitation(eps, spec.beta, omega, spec.excitation.clone())
        .and_then(|p| classify(spec.initial_condition, &p, &spec.classifier))
        .unwrap_or(RegimeLabel {
            kind: RegimeKind::Undecided,
            r: None,
            q: None,
            final_state: None,
            periods: 0,
        });
    Cell { omega, eps, label }
}

/// Samples the requested boundary curves on the sweep's grids.
pub fn boundary_curves(spec: &SweepSpec) -> Result<Vec<BoundaryCurve>> {
    let omegas = spec.omega.values();
    let eps_grid: Vec<_> = spec.eps.values().into_iter().filter(|&e| e > 0.0).collect();
    let req = &spec.boundaries;
    let mut curves = Vec::new();
    if req.homoclinic {
        curves.push(BoundaryCurve::homoclinic(&omegas)?);
    }
    for &q in &req.oscillatory_q {
        curves.push(BoundaryCurve::oscillatory(&omegas, q)?);
    }
    for &q in &req.rotational_q {
        curves.push(BoundaryCurve::rotational(&omegas, q)?);
    }
    for &r in &req.averaging_r {
        curves.push(averaging::existence_boundary_for(
            &spec.excitation,
            r,
            1,
            &eps_grid,
        )?);
    }
    Ok(curves)
}

/// Classifies every cell, splitting the grid into `jobs` contiguous blocks
/// run on scoped threads. The result does not depend on `jobs`.
pub fn run_sweep(spec: &SweepSpec, jobs: usize) -> Result<SweepResult> {
    run_sweep_with_progress(spec, jobs, |_| {})
}

/// As [`run_sweep`], calling `progress(done)` as cells complete.
pub fn run_sweep_with_progress(
    spec: &SweepSpec,
    jobs: usize,
    progress: impl Fn(usize) + Sync,
) -> Result<SweepResult> {
    spec.validate()?;
    let curves = boundary_curves(spec)?;
    let total = spec.omega.n * spec.eps.n;
    let jobs = jobs.clamp(1, total);
    let block = total.div_ceil(jobs);
    let done = std::sync::atomic::AtomicUsize::new(0);
    let blocks: Vec<Vec<Cell>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..jobs)
            .map(|j| {
                let (done, progress) = (&done, &progress);
                scope.spawn(move || {
                    let range = (j * block).min(total)..((j + 1) * block).min(total);
                    range
                        .map(|i| {
                            let cell = classify_cell(spec, i);
                            let n = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
                            progress(n);
                            cell
                        })
                        .collect()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    Ok(SweepResult {
        spec: spec.clone(),
        cells: blocks.into_iter().flatten().collect(),
        curves,
    })
}

/// One row per cell: `omega,eps,kind,r,q`.
pub fn write_csv(mut out: impl Write, result: &SweepResult) -> std::io::Result<()> {
    writeln!(out, "omega,eps,kind,r,q")?;
    for c in &result.cells {
        let r = c.label.r.map(|v| v.to_string()).unwrap_or_default();
        let q = c.label.q.map(|v| v.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{r},{q}", c.omega, c.eps, c.label.kind)?;
    }
    Ok(())
}

pub fn write_json(out: impl Write, result: &SweepResult) -> Result<()> {
    serde_json::to_writer_pretty(out, result).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_json(path: &Path) -> Result<SweepResult> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn cell_color(label: &RegimeLabel) -> &'static str {
    const OSC: [&str; 8] = [
        "#9ecae1", "#3182bd", "#31a354", "#fd8d3c", "#756bb1", "#e6550d", "#636363", "#c994c7",
    ];
    match label.kind {
        RegimeKind::Equilibrium => "#ffffff",
        RegimeKind::Oscillation => OSC[(label.q.unwrap_or(1) as usize - 1) % OSC.len()],
        RegimeKind::Rotation => match label.r.map(i64::abs) {
            Some(1) => "#fdd835",
            Some(2) => "#66bb6a",
            _ => "#ef6c00",
        },
        RegimeKind::RotationOscillation => "#a1887f",
        RegimeKind::Chaotic => "#d62728",
        RegimeKind::Undecided => "#bdbdbd",
    }
}

const CURVE_COLORS: [&str; 6] = [
    "#000000", "#1f4e9c", "#7b1fa2", "#00796b", "#c2185b", "#5d4037",
];

/// Cell raster on the `(ω, ε)` plane with boundary polylines and a legend.
pub fn render_svg(result: &SweepResult) -> String {
    let spec = &result.spec;
    let (width, height, margin, legend_w) = (600.0, 450.0, 50.0, 190.0);
    let (w0, w1) = (spec.omega.min, spec.omega.max);
    let (e0, e1) = (spec.eps.min, spec.eps.max);
    let (dw, de) = (spec.omega.step(), spec.eps.step());
    // Cells are centred on grid values; extend the axes by half a cell.
    let (x_lo, x_hi) = (w0 - dw / 2.0, w1 + dw / 2.0);
    let (y_lo, y_hi) = (e0 - de / 2.0, e1 + de / 2.0);
    let sx = |w: f64| margin + (w - x_lo) / (x_hi - x_lo) * width;
    let sy = |e: f64| margin + height - (e - y_lo) / (y_hi - y_lo) * height;
    let (cw, ch) = (dw / (x_hi - x_lo) * width, de / (y_hi - y_lo) * height);

    let mut s = String::new();
    let total_w = width + 2.0 * margin + legend_w;
    let total_h = height + 2.0 * margin;
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" height="{total_h}" viewBox="0 0 {total_w} {total_h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<defs><clipPath id="plot"><rect x="{margin}" y="{margin}" width="{width}" height="{height}"/></clipPath></defs>"#
    );
    let _ = writeln!(s, r#"<g id="cells" shape-rendering="crispEdges">"#);
    for c in &result.cells {
        let _ = writeln!(
            s,
            r#"<rect class="cell" x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{}"><title>{} at omega={}, eps={}</title></rect>"#,
            sx(c.omega) - cw / 2.0,
            sy(c.eps) - ch / 2.0,
            cw,
            ch,
            cell_color(&c.label),
            c.label,
            c.omega,
            c.eps
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<g id="curves" clip-path="url(#plot)" fill="none" stroke-width="2">"#
    );
    for (i, curve) in result.curves.iter().enumerate() {
        let pts: Vec<String> = curve
            .map_points(spec.beta)
            .iter()
            .map(|&(w, e)| format!("{:.3},{:.3}", sx(w), sy(e)))
            .collect();
        if pts.is_empty() {
            continue;
        }
        let _ = writeln!(
            s,
            r#"<polyline class="boundary" stroke="{}" points="{}"/>"#,
            CURVE_COLORS[i % CURVE_COLORS.len()],
            pts.join(" ")
        );
    }
    let _ = writeln!(s, "</g>");
    // Frame and axes.
    let _ = writeln!(
        s,
        r#"<rect x="{margin}" y="{margin}" width="{width}" height="{height}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (w, e) = (w0 + f * (w1 - w0), e0 + f * (e1 - e0));
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(w),
            margin + height + 16.0,
            fmt_tick(w)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            margin - 6.0,
            sy(e) + 4.0,
            fmt_tick(e)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">omega</text>"#,
        margin + width / 2.0,
        total_h - 8.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">eps (beta = {})</text>"#,
        margin + height / 2.0,
        margin + height / 2.0,
        spec.beta
    );
    // Legend: regimes present, then curves.
    let _ = writeln!(s, r#"<g id="legend">"#);
    let mut entries: Vec<(String, &str, bool)> = Vec::new();
    for c in &result.cells {
        let name = c.label.to_string();
        if !entries.iter().any(|(n, _, _)| *n == name) {
            entries.push((name, cell_color(&c.label), false));
        }
    }
    entries.sort();
    for (i, curve) in result.curves.iter().enumerate() {
        entries.push((
            curve.kind.label(),
            CURVE_COLORS[i % CURVE_COLORS.len()],
            true,
        ));
    }
    let lx = margin * 1.5 + width;
    for (i, (name, color, is_curve)) in entries.iter().enumerate() {
        let y = margin + 16.0 * i as f64;
        if *is_curve {
            let _ = writeln!(
                s,
                r#"<line x1="{lx}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2"/>"#,
                y + 6.0,
                lx + 12.0,
                y + 6.0
            );
        } else {
            let _ = writeln!(
                s,
                r#"<rect x="{lx}" y="{y:.1}" width="12" height="12" fill="{color}" stroke="black" stroke-width="0.5"/>"#
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{name}</text>"#,
            lx + 18.0,
            y + 10.0
        );
    }
    let _ = writeln!(s, "</g>\n</svg>");
    s
}

fn fmt_tick(x: f64) -> String {
    let t = format!("{x:.3}");
    t.trim_end_matches('0').trim_end_matches('.').to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub const ALL: [Format; 3] = [Self::Csv, Self::Json, Self::Svg];

    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
            Self::Svg => "svg",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.extension() == s)
            .ok_or_else(|| Error::Parse(format!("unknown format `{s}` (csv, json, svg)")))
    }
}

/// Writes `dir/sweep_<beta>_<nx>x<ny>.<ext>` for each format and returns the
/// paths written.
pub fn export_map(result: &SweepResult, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stem = result.spec.file_stem();
    let mut written = Vec::new();
    for &format in formats {
        let path = dir.join(format!("{stem}.{}", format.extension()));
        let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = std::io::BufWriter::new(file);
        match format {
            Format::Csv => write_csv(&mut out, result).map_err(|e| Error::io(&path, e))?,
            Format::Json => write_json(&mut out, result)?,
            Format::Svg => out
                .write_all(render_svg(result).as_bytes())
                .map_err(|e| Error::io(&path, e))?,
        }
        out.flush().map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
