//! Experiment drivers and their CSV reports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::asymptotics::{
    bound, dominant_branches, envelope_comparison, fit_decay, log_spaced, stationary_points,
    FitMode,
};
use crate::coarse::WeightingScheme;
use crate::error::{Error, Result};
use crate::kernel::{
    blocksize_sweep, theta_spatial_series, time_series_with, uniform_times, KernelModel,
    QuadratureGrid,
};
use crate::lattice::ForceConstants;
use crate::oracle::build_dense;

pub const CSV_HEADER: &str = "experiment,coordinate,value,bound,method,imag_residual";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    BlocksizeStudy,
    SpatialDecay,
    TimeDecay,
    Validate,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::BlocksizeStudy => "blocksize-study",
            Self::SpatialDecay => "spatial-decay",
            Self::TimeDecay => "time-decay",
            Self::Validate => "validate",
        }
    }
}

/// Every setting as optional, so a config file and command-line flags can be
/// layered before defaults are filled in.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigOverrides {
    pub kappa1: Option<f64>,
    pub kappa2: Option<f64>,
    pub scheme: Option<WeightingScheme>,
    pub blocks: Option<Vec<usize>>,
    pub atoms: Option<usize>,
    pub quad_nodes: Option<usize>,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub t_steps: Option<usize>,
    pub j_max: Option<usize>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub fast: Option<bool>,
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{raw}' for {key}")))
}

impl ConfigOverrides {
    /// Parses `key = value` lines; `#` starts a comment. Keys match the flag
    /// names, with `-` and `_` interchangeable.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "line {}: expected key=value, got '{line}'",
                    lineno + 1
                ))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.replace('_', "-").as_str() {
            "kappa1" => self.kappa1 = Some(parse_value(key, value)?),
            "kappa2" => self.kappa2 = Some(parse_value(key, value)?),
            "scheme" => self.scheme = Some(value.parse()?),
            "blocks" => self.blocks = Some(parse_blocks(value)?),
            "atoms" => self.atoms = Some(parse_value(key, value)?),
            "quad-nodes" => self.quad_nodes = Some(parse_value(key, value)?),
            "tmin" | "t-min" => self.t_min = Some(parse_value(key, value)?),
            "tmax" | "t-max" => self.t_max = Some(parse_value(key, value)?),
            "tsteps" | "t-steps" => self.t_steps = Some(parse_value(key, value)?),
            "jmax" | "j-max" => self.j_max = Some(parse_value(key, value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            "seed" => self.seed = Some(parse_value(key, value)?),
            "fast" => self.fast = Some(parse_value(key, value)?),
            other => return Err(Error::Config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// `other` wins wherever it has a value.
    pub fn layered(self, other: Self) -> Self {
        Self {
            kappa1: other.kappa1.or(self.kappa1),
            kappa2: other.kappa2.or(self.kappa2),
            scheme: other.scheme.or(self.scheme),
            blocks: other.blocks.or(self.blocks),
            atoms: other.atoms.or(self.atoms),
            quad_nodes: other.quad_nodes.or(self.quad_nodes),
            t_min: other.t_min.or(self.t_min),
            t_max: other.t_max.or(self.t_max),
            t_steps: other.t_steps.or(self.t_steps),
            j_max: other.j_max.or(self.j_max),
            out: other.out.or(self.out),
            seed: other.seed.or(self.seed),
            fast: other.fast.or(self.fast),
        }
    }
}

/// `16,32,64` or `2^4..2^10` (inclusive).
pub fn parse_blocks(raw: &str) -> Result<Vec<usize>> {
    let raw = raw.trim();
    if let Some((lo, hi)) = raw.split_once("..") {
        let exponent = |s: &str| -> Result<u32> {
            let s = s.trim();
            let e = s.strip_prefix("2^").ok_or_else(|| {
                Error::Config(format!("block range bound '{s}' must look like 2^k"))
            })?;
            parse_value("blocks", e)
        };
        let (a, b) = (exponent(lo)?, exponent(hi)?);
        if a > b || b > 20 {
            return Err(Error::Config(format!("bad block range {raw}")));
        }
        return Ok((a..=b).map(|k| 1usize << k).collect());
    }
    raw.split(',').map(|s| parse_value("blocks", s)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub fc: ForceConstants,
    pub scheme: WeightingScheme,
    pub blocks: Vec<usize>,
    pub atoms: Option<usize>,
    pub grid: QuadratureGrid,
    pub t_min: f64,
    pub t_max: f64,
    pub t_steps: usize,
    pub j_max: usize,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub fast: bool,
}

impl ExperimentConfig {
    /// Fills unset values with the defaults of `experiment` and validates.
    pub fn resolve(experiment: Experiment, o: ConfigOverrides) -> Result<Self> {
        let fast = o.fast.unwrap_or(false);
        let default_nodes = if fast {
            QuadratureGrid::DEFAULT_NODES / 2
        } else {
            QuadratureGrid::DEFAULT_NODES
        };
        let default_blocks = match experiment {
            Experiment::SpatialDecay => vec![32],
            Experiment::TimeDecay => vec![100],
            _ => (4..=10).map(|k| 1usize << k).collect(),
        };
        let fc = ForceConstants::new(
            o.kappa1.unwrap_or(ForceConstants::MORSE.kappa1()),
            o.kappa2.unwrap_or(ForceConstants::MORSE.kappa2()),
        )
        .map_err(|e| Error::Config(e.to_string()))?;
        let grid = QuadratureGrid::new(o.quad_nodes.unwrap_or(default_nodes))
            .map_err(|e| Error::Config(e.to_string()))?;
        let cfg = Self {
            experiment,
            fc,
            scheme: o.scheme.unwrap_or(WeightingScheme::PiecewiseConstant),
            blocks: o.blocks.unwrap_or(default_blocks),
            atoms: o.atoms,
            grid,
            t_min: o.t_min.unwrap_or(0.0),
            t_max: o.t_max.unwrap_or(200.0),
            t_steps: o.t_steps.unwrap_or(if fast { 2001 } else { 4001 }),
            j_max: o.j_max.unwrap_or(30),
            out: o.out,
            seed: o.seed.unwrap_or(42),
            fast,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.blocks.is_empty() || self.blocks.iter().any(|&m| m < 2) {
            return bad("every block size must be at least 2".into());
        }
        match self.experiment {
            Experiment::BlocksizeStudy => {
                if self.blocks.iter().any(|m| !m.is_power_of_two())
                    || self.blocks.windows(2).any(|w| w[1] <= w[0])
                {
                    return bad(format!(
                        "block list {:?} must be ascending powers of two",
                        self.blocks
                    ));
                }
                if self.blocks.len() < 3 {
                    return bad("the block-size fit needs at least three sizes".into());
                }
            }
            Experiment::SpatialDecay | Experiment::TimeDecay if self.blocks.len() != 1 => {
                return bad(format!(
                    "{} takes a single block size",
                    self.experiment.name()
                ));
            }
            _ => {}
        }
        if self.experiment == Experiment::SpatialDecay && self.j_max < 8 {
            return bad(format!("jmax must be at least 8, got {}", self.j_max));
        }
        if !(self.t_min >= 0.0 && self.t_max > self.t_min && self.t_max.is_finite()) {
            return bad(format!(
                "need 0 <= tmin < tmax, got tmin={} tmax={}",
                self.t_min, self.t_max
            ));
        }
        if self.t_steps < 2 {
            return bad("tsteps must be at least 2".into());
        }
        if let Some(n) = self.atoms {
            for &m in &self.blocks {
                if n % m != 0 || n < 4 * m {
                    return bad(format!(
                        "atoms {n} must be a multiple of block size {m} and at least {}",
                        4 * m
                    ));
                }
                if n - n / m > crate::oracle::MAX_COMPLEMENT {
                    return bad(format!(
                        "atoms {n} with block size {m} is too large for the dense oracle"
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Spectral,
    Dense,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Spectral => "spectral",
            Self::Dense => "dense",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub experiment: String,
    pub coordinate: f64,
    pub value: f64,
    pub bound: Option<f64>,
    pub method: Method,
    pub imag_residual: f64,
}

impl ReportRow {
    fn new(experiment: &str, coordinate: f64, value: f64) -> Self {
        Self {
            experiment: experiment.to_string(),
            coordinate,
            value,
            bound: None,
            method: Method::Spectral,
            imag_residual: 0.0,
        }
    }

    fn bound(mut self, b: f64) -> Self {
        self.bound = Some(b);
        self
    }

    fn method(mut self, m: Method) -> Self {
        self.method = m;
        self
    }

    fn imag(mut self, r: f64) -> Self {
        self.imag_residual = r;
        self
    }
}

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn to_csv(&self) -> Result<String> {
        let mut s = String::with_capacity(64 * (self.rows.len() + 1));
        s.push_str(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let finite = r.coordinate.is_finite()
                && r.value.is_finite()
                && r.imag_residual.is_finite()
                && r.bound.is_none_or(f64::is_finite);
            if !finite {
                return Err(Error::Domain(format!(
                    "non-finite value in report row {r:?}"
                )));
            }
            let bound = r.bound.map(float).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.experiment,
                float(r.coordinate),
                float(r.value),
                bound,
                r.method.name(),
                float(r.imag_residual)
            );
        }
        Ok(s)
    }

    /// Rows of one experiment id.
    pub fn series(&self, experiment: &str) -> impl Iterator<Item = &ReportRow> + '_ {
        let id = experiment.to_string();
        self.rows.iter().filter(move |r| r.experiment == id)
    }

    /// Value of the first row with the given id.
    pub fn footer(&self, experiment: &str) -> Option<f64> {
        self.series(experiment).next().map(|r| r.value)
    }
}

pub fn cmd_blocksize_study(cfg: &ExperimentConfig) -> Result<Report> {
    let mut report = Report::default();
    let sweep = blocksize_sweep(cfg.scheme, &cfg.fc, &cfg.blocks, &cfg.grid)?;
    for &(m, v) in &sweep {
        let b = bound(cfg.scheme, &cfg.fc, m);
        report
            .rows
            .push(ReportRow::new("blocksize", m as f64, v).bound(b));
        if let Some(n) = cfg.atoms {
            let dense = build_dense(&cfg.fc, n, m, cfg.scheme)?.theta_dense(0, 0.0)?;
            report.rows.push(
                ReportRow::new("blocksize", m as f64, dense)
                    .bound(b)
                    .method(Method::Dense),
            );
        }
    }
    let pts: Vec<(f64, f64)> = sweep.iter().map(|&(m, v)| (m as f64, v)).collect();
    let fit = fit_decay(&pts, FitMode::LogLog, None)?;
    report
        .rows
        .push(ReportRow::new("blocksize:exponent", 0.0, fit.exponent));
    report
        .rows
        .push(ReportRow::new("blocksize:prefactor", 0.0, fit.prefactor));
    report
        .rows
        .push(ReportRow::new("blocksize:rms", 0.0, fit.residual));
    Ok(report)
}

pub fn cmd_spatial_decay(cfg: &ExperimentConfig) -> Result<Report> {
    let m = cfg.blocks[0];
    let series = theta_spatial_series(cfg.scheme, &cfg.fc, m, cfg.j_max, &cfg.grid)?;
    let diag = series.samples[0].value;
    let mut report = Report::default();
    for s in &series.samples {
        report.rows.push(
            ReportRow::new("spatial", s.coordinate, s.value)
                .bound(diag)
                .imag(series.max_imag_residual),
        );
    }
    for s in &series.samples {
        report.rows.push(ReportRow::new(
            "spatial:log10",
            s.coordinate,
            s.value.abs().log10(),
        ));
    }
    if let Some(n) = cfg.atoms {
        let chain = build_dense(&cfg.fc, n, m, cfg.scheme)?.factorize()?;
        let j_dense = cfg.j_max.min((n / m - 1) / 2);
        for j in 0..=j_dense {
            let v = chain.theta(j as i64, 0.0)?;
            report.rows.push(
                ReportRow::new("spatial", j as f64, v)
                    .bound(diag)
                    .method(Method::Dense),
            );
        }
    }
    let fit = fit_decay(
        &series.pairs(),
        FitMode::LogLinear,
        Some((2.0, cfg.j_max as f64)),
    )?;
    report
        .rows
        .push(ReportRow::new("spatial:rate", 0.0, fit.exponent));
    report
        .rows
        .push(ReportRow::new("spatial:rms", 0.0, fit.residual));
    Ok(report)
}

/// Fit window of the time-decay envelope: the last decade of the time range.
pub fn time_fit_window(cfg: &ExperimentConfig) -> (f64, f64) {
    ((cfg.t_max / 10.0).max(cfg.t_min), cfg.t_max)
}

/// Number of dominant branches listed in the time-decay footer.
const FOOTER_BRANCHES: usize = 5;

pub fn cmd_time_decay(cfg: &ExperimentConfig) -> Result<Report> {
    let m = cfg.blocks[0];
    let model = KernelModel::new(cfg.scheme, &cfg.fc, m)?;
    let spectra = model.spectra(&cfg.grid)?;
    let times = uniform_times(cfg.t_min, cfg.t_max, cfg.t_steps)?;
    let series = time_series_with(&model, &spectra, &times, &cfg.grid);
    let mut report = Report::default();
    for s in &series.samples {
        report
            .rows
            .push(ReportRow::new("time", s.coordinate, s.value).imag(series.max_imag_residual));
    }
    if let Some(n) = cfg.atoms {
        let chain = build_dense(&cfg.fc, n, m, cfg.scheme)?.factorize()?;
        for &t in &times {
            report
                .rows
                .push(ReportRow::new("time", t, chain.theta(0, t)?).method(Method::Dense));
        }
    }

    let fit = fit_decay(
        &series.pairs(),
        FitMode::LogLogEnvelope,
        Some(time_fit_window(cfg)),
    )?;
    report
        .rows
        .push(ReportRow::new("time:exponent", 0.0, fit.exponent));
    report
        .rows
        .push(ReportRow::new("time:prefactor", 0.0, fit.prefactor));
    report
        .rows
        .push(ReportRow::new("time:rms", 0.0, fit.residual));

    let points = stationary_points(&model)?;
    for p in dominant_branches(&points).iter().take(FOOTER_BRANCHES) {
        // amplitude(1) is the prefactor of t^{-1/2}
        report.rows.push(ReportRow::new(
            "time:sp-prefactor",
            p.branch as f64,
            p.amplitude(1.0),
        ));
        report.rows.push(ReportRow::new(
            "time:sp-curvature",
            p.branch as f64,
            p.curvature,
        ));
    }
    let (lo, hi) = time_fit_window(cfg);
    for c in envelope_comparison(&points, &fit, &log_spaced(lo, hi, 16)) {
        report
            .rows
            .push(ReportRow::new("time:sp-envelope", c.t, c.predicted).bound(c.fitted));
    }
    Ok(report)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    match cfg.experiment {
        Experiment::BlocksizeStudy => cmd_blocksize_study(cfg),
        Experiment::SpatialDecay => cmd_spatial_decay(cfg),
        Experiment::TimeDecay => cmd_time_decay(cfg),
        Experiment::Validate => Err(Error::Config("validate produces no report".into())),
    }
}

/// Companion gnuplot script for a CSV written to `csv`.
pub fn gnuplot_script(experiment: Experiment, csv: &Path) -> String {
    let file = csv.display();
    let (id, setup, xlabel, ylabel, using) = match experiment {
        Experiment::BlocksizeStudy => (
            "blocksize",
            "set logscale xy\n",
            "block size M",
            "Theta_00(0)",
            "2:3",
        ),
        Experiment::SpatialDecay => ("spatial:log10", "", "J", "log10 |Theta_0J(0)|", "2:3"),
        _ => ("time", "", "t", "Theta_00(t)", "2:3"),
    };
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    s.push_str(setup);
    let _ = writeln!(s, "set xlabel '{xlabel}'");
    let _ = writeln!(s, "set ylabel '{ylabel}'");
    let _ = write!(
        s,
        "plot '< grep \"^{id},.*,spectral,\" {file}' using {using} with linespoints title 'spectral'"
    );
    if experiment == Experiment::BlocksizeStudy {
        let _ = write!(
            s,
            ", \\\n     '< grep \"^{id},.*,spectral,\" {file}' using 2:4 with lines title 'bound'"
        );
    }
    s.push('\n');
    s
}
