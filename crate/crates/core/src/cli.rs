//! The `recurrence` command-line front end.
//!
//! Every report is wrapped with the schema version, the command name and the
//! full run configuration. JSON reports are a single object; CSV reports
//! start with `#`-prefixed header lines carrying the same envelope.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::approximation::{delta_estimate_plane, delta_estimate_rose, rose_pipeline, RosePipelineConfig};
use crate::counterexample::{non_recurrence_certificate, XConfig};
use crate::cylinder::{cyl_distance, project_to_core, CylinderConfig};
use crate::error::GeomError;
use crate::metric::GeodesicSpace;
use crate::model_plane::{cat_inequality_check, geodesic_through, project_to_geodesic, ModelPoint, PlaneGeodesic, PlaneSpace};
use crate::rose::{RoseConfig, SubstitutionRule};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CERTIFICATE_FAILURE: i32 = 2;
pub const EXIT_BAD_ARGUMENTS: i32 = 64;

#[derive(Debug, Parser, Serialize)]
#[command(name = "recurrence", version, about = "Certificates for recurrent geodesics and their closed-geodesic approximations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Non-recurrence certificate for the geodesic on two glued cylinders.
    Counterexample(CounterexampleArgs),
    /// Closed-geodesic approximation pipeline on a substitutive rose geodesic.
    RoseApprox(RoseApproxArgs),
    /// Distance, projection and injectivity data on a hyperbolic cylinder.
    CylinderTools(CylinderArgs),
    /// Comparison-triangle check on random small triangles.
    CatCheck(CatArgs),
    /// Four-point hyperbolicity estimate.
    Delta(DeltaArgs),
    /// Projection of a plane point onto a geodesic.
    Project(ProjectArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args, Serialize)]
pub struct Output {
    /// Report path; stdout when omitted.
    #[arg(long, global = false)]
    pub out: Option<PathBuf>,
    /// Defaults to the extension of --out, else JSON.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl Output {
    fn format(&self) -> Format {
        self.format.unwrap_or_else(|| match self.out.as_ref().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some("csv") => Format::Csv,
            _ => Format::Json,
        })
    }
}

#[derive(Debug, Args, Serialize)]
pub struct CounterexampleArgs {
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub omega1: f64,
    #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
    pub omega2: f64,
    /// Strip half-width; defaults to d(A,B)/4.
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub chi: f64,
    #[arg(long, default_value_t = 0.4, allow_negative_numbers = true)]
    pub eps: f64,
    /// Smallest shift scanned; 0 scans (0, s_max].
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub s_min: f64,
    #[arg(long, default_value_t = 30.0, allow_negative_numbers = true)]
    pub s_max: f64,
    #[arg(long, default_value_t = 0.005, allow_negative_numbers = true)]
    pub step: f64,
    /// Include every grid row (always written in CSV output).
    #[arg(long)]
    pub keep_rows: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct RoseApproxArgs {
    /// fib | tm
    #[arg(long, default_value = "fib")]
    pub rule: String,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub la: f64,
    #[arg(long, default_value_t = 1.618_033_988_749_895, allow_negative_numbers = true)]
    pub lb: f64,
    #[arg(long, default_value_t = 10)]
    pub levels: usize,
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub eps: f64,
    #[arg(long, default_value_t = 12)]
    pub depth: usize,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub anchor: f64,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub grid_base: f64,
    /// Radius of the convex neighbourhood; defaults to half the shorter petal.
    #[arg(long)]
    pub u_radius: Option<f64>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct CylinderArgs {
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub omega: f64,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub chi: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub s1: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub h1: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub s2: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub h2: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CatSpace {
    Plane,
    Cylinder,
}

#[derive(Debug, Args, Serialize)]
pub struct CatArgs {
    #[arg(long, value_enum, default_value_t = CatSpace::Cylinder)]
    pub space: CatSpace,
    #[arg(long, default_value_t = 1000)]
    pub triangles: usize,
    /// Side-pairs sampled per triangle.
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub omega: f64,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub chi: f64,
    /// Distance of the vertices from the triangle's random centre.
    #[arg(long, default_value_t = 0.4, allow_negative_numbers = true)]
    pub radius: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub max_height: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaSpace {
    Rose,
    Plane,
}

#[derive(Debug, Args, Serialize)]
pub struct DeltaArgs {
    #[arg(long, value_enum)]
    pub space: DeltaSpace,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Sampling radius; defaults to 10 on the rose tree and 5 in the plane.
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub la: f64,
    #[arg(long, default_value_t = 1.618_033_988_749_895, allow_negative_numbers = true)]
    pub lb: f64,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub chi: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct ProjectArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub x: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub y: f64,
    /// Geodesic through two points `x1,y1,x2,y2`; the imaginary axis if omitted.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub through: Option<Vec<f64>>,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub chi: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug)]
enum CliError {
    BadArguments(String),
    Io(io::Error),
}

impl From<GeomError> for CliError {
    fn from(e: GeomError) -> Self {
        CliError::BadArguments(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(io::Error::other(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(io::Error::other(e))
    }
}

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    schema_version: u32,
    command: &'a str,
    config: &'a C,
    pass: bool,
    report: &'a R,
}

fn sink(output: &Output) -> io::Result<Box<dyn Write>> {
    Ok(match &output.out {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<C: Serialize, R: Serialize>(output: &Output, command: &str, config: &C, pass: bool, report: &R) -> Result<(), CliError> {
    let mut w = sink(output)?;
    let env = Envelope { schema_version: SCHEMA_VERSION, command, config, pass, report };
    serde_json::to_writer_pretty(&mut w, &env)?;
    writeln!(w)?;
    Ok(())
}

fn write_csv<C: Serialize, R: Serialize>(output: &Output, command: &str, config: &C, pass: bool, rows: &[R]) -> Result<(), CliError> {
    let mut w = sink(output)?;
    writeln!(w, "# schema_version={SCHEMA_VERSION}")?;
    writeln!(w, "# command={command}")?;
    writeln!(w, "# config={}", serde_json::to_string(config)?)?;
    writeln!(w, "# pass={pass}")?;
    let mut csv = csv::Writer::from_writer(w);
    for r in rows {
        csv.serialize(r)?;
    }
    csv.flush()?;
    Ok(())
}

fn emit<C: Serialize, R: Serialize, Row: Serialize>(
    output: &Output,
    command: &str,
    config: &C,
    pass: bool,
    report: &R,
    rows: impl FnOnce() -> Vec<Row>,
) -> Result<bool, CliError> {
    match output.format() {
        Format::Json => write_json(output, command, config, pass, report)?,
        Format::Csv => write_csv(output, command, config, pass, &rows())?,
    }
    Ok(pass)
}

#[derive(Serialize)]
struct ShiftCsvRow {
    s: f64,
    branch_t0_0: f64,
    branch_t0_3w1_4: f64,
    max: f64,
    labels: &'static str,
}

fn counterexample(args: &CounterexampleArgs) -> Result<bool, CliError> {
    let cfg = XConfig::new(args.omega1, args.omega2, args.width, args.chi)?;
    let keep = args.keep_rows || args.output.format() == Format::Csv;
    let cert = non_recurrence_certificate(args.eps, args.s_min, args.s_max, args.step, &cfg, keep)?;
    emit(&args.output, "counterexample", args, cert.pass, &cert, || {
        cert.rows
            .iter()
            .map(|r| ShiftCsvRow { s: r.s, branch_t0_0: r.branches[0], branch_t0_3w1_4: r.branches[1], max: r.max, labels: "(contradiction)" })
            .collect()
    })
}

#[derive(Serialize)]
struct RoseCsvRow {
    n: usize,
    t_n: f64,
    eps_n: f64,
    s_n: f64,
    d0: f64,
    budget: f64,
    sup: f64,
    control_sup: f64,
    holonomy: String,
    class_word: String,
    separation: f64,
    loxodromic_bound: f64,
    pass_nontrivial: bool,
    kappa: f64,
    quasi_worst_defect: f64,
    pass_quasi: bool,
    pass_log: bool,
    stability_max: f64,
    pass_stability: bool,
    gromov_product: f64,
    pass_gromov: bool,
    pass_uni: bool,
    pass_eps: bool,
    pass_final: bool,
    pass_budget: bool,
    labels: &'static str,
}

fn rose_approx(args: &RoseApproxArgs) -> Result<bool, CliError> {
    let rule: SubstitutionRule = args.rule.parse()?;
    let cfg = RosePipelineConfig {
        rule,
        la: args.la,
        lb: args.lb,
        levels: args.levels,
        depth: args.depth,
        anchor: args.anchor,
        grid_base: args.grid_base,
        eps: args.eps,
        u_radius: args.u_radius,
        ..RosePipelineConfig::default()
    };
    if !(args.eps > 0.0) || !(args.grid_base > 0.0) || args.levels == 0 {
        return Err(CliError::BadArguments("eps, grid-base and levels must be positive".into()));
    }
    let rep = rose_pipeline(&cfg)?;
    emit(&args.output, "rose-approx", args, rep.pass, &rep, || {
        rep.levels
            .iter()
            .zip(&rep.boundary.rows)
            .map(|(l, g)| RoseCsvRow {
                n: l.n,
                t_n: l.report.t_n,
                eps_n: l.report.eps_n,
                s_n: l.report.s_n,
                d0: l.report.d0,
                budget: l.report.budget,
                sup: l.report.sup,
                control_sup: l.report.control_sup,
                holonomy: l.holonomy.clone(),
                class_word: l.class_word.clone(),
                separation: l.nontriviality.separation,
                loxodromic_bound: l.nontriviality.bound,
                pass_nontrivial: l.nontriviality.pass && l.nontriviality.bound_holds,
                kappa: rep.kappa,
                quasi_worst_defect: l.quasi.worst_defect,
                pass_quasi: l.quasi.pass,
                pass_log: l.report.eps_n < 0.5 * (rep.kappa - 16.0 * rep.config.delta),
                stability_max: l.stability.max_distance,
                pass_stability: l.stability.pass,
                gromov_product: g.product,
                pass_gromov: g.lemma_pass && g.chain_pass,
                pass_uni: l.report.uni,
                pass_eps: l.report.eps_ok,
                pass_final: l.report.final_ok,
                pass_budget: l.report.budget_ok,
                labels: "(uni);(eps);(final);(log)",
            })
            .collect()
    })
}

#[derive(Serialize)]
struct CylinderReport {
    distance: f64,
    injectivity_radius: [f64; 2],
    essential_loop_length: [f64; 2],
    core_projection: [[f64; 2]; 2],
    core_distance: [f64; 2],
}

fn cylinder_tools(args: &CylinderArgs) -> Result<bool, CliError> {
    let cfg = CylinderConfig::new(args.omega, args.chi)?;
    let p = cfg.point(args.s1, args.h1);
    let q = cfg.point(args.s2, args.h2);
    let (fp, dp) = project_to_core(&p, &cfg);
    let (fq, dq) = project_to_core(&q, &cfg);
    let rep = CylinderReport {
        distance: cyl_distance(&p, &q, &cfg),
        injectivity_radius: [cfg.injectivity_radius(p.h), cfg.injectivity_radius(q.h)],
        essential_loop_length: [cfg.essential_loop_length(p.h), cfg.essential_loop_length(q.h)],
        core_projection: [[fp.s, fp.h], [fq.s, fq.h]],
        core_distance: [dp, dq],
    };
    emit(&args.output, "cylinder-tools", args, true, &rep, || vec![&rep])
}

#[derive(Serialize)]
struct CatReport {
    triangles: usize,
    resampled: usize,
    /// Largest `d(p,q) − d(p̄,q̄)` over all sampled side-pairs.
    max_violation: f64,
    /// Plane only: largest `|d(p,q) − d(p̄,q̄)|`.
    max_abs_difference: Option<f64>,
    tolerance: f64,
}

const CAT_TOL_CYLINDER: f64 = 1e-8;
const CAT_TOL_PLANE: f64 = 1e-9;

fn cat_check(args: &CatArgs) -> Result<bool, CliError> {
    if !(args.radius > 0.0) || args.triangles == 0 {
        return Err(CliError::BadArguments("radius and triangle count must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut worst = f64::NEG_INFINITY;
    let mut resampled = 0;
    let rep = match args.space {
        CatSpace::Cylinder => {
            let cfg = CylinderConfig::new(args.omega, args.chi)?;
            let mut done = 0;
            while done < args.triangles {
                let tri = cfg.sample_triangle(&mut rng, args.radius, args.max_height);
                match cat_inequality_check(&cfg, &tri, args.samples, args.chi, done as u64) {
                    Ok(v) => {
                        worst = worst.max(v);
                        done += 1;
                    }
                    Err(GeomError::AboveLiftingThreshold { .. }) => {
                        resampled += 1;
                        if resampled > 100 * args.triangles {
                            return Err(CliError::BadArguments("radius too large for the lifting threshold".into()));
                        }
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            CatReport { triangles: done, resampled, max_violation: worst, max_abs_difference: None, tolerance: CAT_TOL_CYLINDER }
        }
        CatSpace::Plane => {
            let plane = PlaneSpace::new(args.chi)?;
            let mut abs = 0.0f64;
            for i in 0..args.triangles {
                let tri = [(); 3].map(|_| plane.sample_ball(&mut rng, args.radius));
                worst = worst.max(cat_inequality_check(&plane, &tri, args.samples, args.chi, i as u64)?);
                abs = abs.max(plane_agreement(&plane, &tri, args.samples, i as u64)?);
            }
            CatReport { triangles: args.triangles, resampled, max_violation: worst, max_abs_difference: Some(abs), tolerance: CAT_TOL_PLANE }
        }
    };
    let pass = rep.max_violation <= rep.tolerance && rep.max_abs_difference.map_or(true, |a| a <= rep.tolerance);
    emit(&args.output, "cat-check", args, pass, &rep, || vec![&rep])
}

/// Largest `|d(p,q) − d(p̄,q̄)|` over sampled side-pairs of a plane triangle.
pub fn plane_agreement(plane: &PlaneSpace, tri: &[ModelPoint; 3], samples: usize, seed: u64) -> Result<f64, GeomError> {
    use rand::Rng;
    let d = |i: usize, j: usize| crate::metric::MetricSpace::distance(plane, &tri[i], &tri[j]);
    let cmp = crate::model_plane::comparison_triangle(d(1, 2), d(0, 2), d(0, 1), plane.chi)?;
    const SIDES: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let (i1, j1) = SIDES[rng.gen_range(0..3)];
        let (i2, j2) = SIDES[rng.gen_range(0..3)];
        let t1 = rng.gen::<f64>() * cmp.side_between(i1, j1);
        let t2 = rng.gen::<f64>() * cmp.side_between(i2, j2);
        let p = plane.segment_point(&tri[i1], &tri[j1], t1);
        let q = plane.segment_point(&tri[i2], &tri[j2], t2);
        let dm = crate::model_plane::hp_distance(&cmp.comparison_point(i1, j1, t1)?, &cmp.comparison_point(i2, j2, t2)?, plane.chi)?;
        worst = worst.max((crate::metric::MetricSpace::distance(plane, &p, &q) - dm).abs());
    }
    Ok(worst)
}

#[derive(Serialize)]
struct DeltaReport {
    space: DeltaSpace,
    radius: f64,
    samples: usize,
    delta: f64,
    /// Largest value accepted as a pass.
    bound: f64,
}

fn delta(args: &DeltaArgs) -> Result<bool, CliError> {
    let (radius, delta, bound) = match args.space {
        DeltaSpace::Rose => {
            let r = args.radius.unwrap_or(10.0);
            (r, delta_estimate_rose(RoseConfig::new(args.la, args.lb)?, r, args.samples, args.seed), 1e-12)
        }
        DeltaSpace::Plane => {
            let r = args.radius.unwrap_or(5.0);
            (r, delta_estimate_plane(args.chi, r, args.samples, args.seed)?, 1.5)
        }
    };
    if !(radius > 0.0) {
        return Err(CliError::BadArguments(format!("radius {radius}")));
    }
    let rep = DeltaReport { space: args.space, radius, samples: args.samples, delta, bound };
    emit(&args.output, "delta", args, delta <= bound, &rep, || vec![&rep])
}

#[derive(Serialize)]
struct ProjectReport {
    s: f64,
    foot: [f64; 2],
    distance: f64,
}

fn project(args: &ProjectArgs) -> Result<bool, CliError> {
    let p = ModelPoint::new(args.x, args.y)?;
    let g = match &args.through {
        None => PlaneGeodesic::imaginary_axis(args.chi)?,
        Some(v) if v.len() != 4 => return Err(CliError::BadArguments(format!("--through takes 4 numbers, got {}", v.len()))),
        Some(v) => geodesic_through(&ModelPoint::new(v[0], v[1])?, &ModelPoint::new(v[2], v[3])?, args.chi)?,
    };
    let proj = project_to_geodesic(&p, &g)?;
    let rep = ProjectReport { s: proj.s, foot: [proj.foot.x(), proj.foot.y()], distance: proj.distance };
    emit(&args.output, "project", args, true, &rep, || vec![&rep])
}

/// Parses `args` (including the program name) and runs the command. Returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_BAD_ARGUMENTS } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Counterexample(a) => counterexample(a),
        Command::RoseApprox(a) => rose_approx(a),
        Command::CylinderTools(a) => cylinder_tools(a),
        Command::CatCheck(a) => cat_check(a),
        Command::Delta(a) => delta(a),
        Command::Project(a) => project(a),
    };
    match result {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_CERTIFICATE_FAILURE,
        Err(CliError::BadArguments(msg)) => {
            eprintln!("error: {msg}");
            EXIT_BAD_ARGUMENTS
        }
        Err(CliError::Io(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}
