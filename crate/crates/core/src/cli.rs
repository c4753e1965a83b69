//! Command-line front end. `run` parses arguments, executes one subcommand
//! and returns the process exit code.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_traits::{One, Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exact::{format_rational, parse_rational, to_f64, Enclosure, Rational};
use crate::locate::{
    build_diagram_index, build_zone_index_with, deserialize_index, maybe_count_bound, random_point_in_cell,
    serialize_index, CellClass, DiagramIndex,
};
use crate::model::{random_uniform_network, Network, Point};
use crate::zones::{
    convexity_probe, explicit_bounds, fatness_bound, measure_radii, rasterize, refined_bounds, star_shape_probe, BBox,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "sinr", version, about = "SINR reception zones: rendering, bounds and point location")]
pub struct CliConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a seeded uniform-power network on a quarter-integer lattice.
    Gen(GenArgs),
    /// Render the diagram as a binary PPM image.
    Render(RenderArgs),
    /// Report radius bounds for one station.
    Bounds(BoundsArgs),
    /// Build a point-location index.
    Build(BuildArgs),
    /// Answer one point-location query.
    Query(QueryArgs),
    /// Run the property suites against a network and optionally an index.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Half-width of the square holding the stations.
    #[arg(long, default_value_t = 4)]
    pub spread: u32,
    #[arg(long, default_value = "2")]
    pub beta: String,
    #[arg(long, default_value = "0")]
    pub noise: String,
    /// Output path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    #[arg(long)]
    pub net: PathBuf,
    /// `x0,y0,x1,y1`
    #[arg(long, allow_hyphen_values = true)]
    pub bbox: String,
    /// `WxH`
    #[arg(long, default_value = "256x256")]
    pub res: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[arg(long)]
    pub net: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub station: usize,
    /// Also measure radii along this many evenly spaced rays.
    #[arg(long)]
    pub angles: Option<usize>,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    #[arg(long)]
    pub net: PathBuf,
    #[arg(long)]
    pub eps: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct QueryArgs {
    #[arg(long)]
    pub index: PathBuf,
    /// `x,y`
    #[arg(allow_hyphen_values = true)]
    pub point: String,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub net: PathBuf,
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 64)]
    pub angles: usize,
    /// Succeed only if some zone is found to be non-convex.
    #[arg(long)]
    pub expect_nonconvex: bool,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::BoundsViolation(_) | Error::Inconsistent(_) => EXIT_VERIFY,
        _ => EXIT_USAGE,
    }
}

/// Runs the command line `args` (program name first).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match CliConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let pool = match worker_pool() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let mut buf = Vec::new();
    let result = match pool {
        Some(p) => p.install(|| dispatch(&cfg.command, &mut buf)),
        None => dispatch(&cfg.command, &mut buf),
    };
    if let Err(e) = out.write_all(&buf) {
        let _ = writeln!(err, "error: {e}");
        return EXIT_IO;
    }
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn worker_pool() -> Result<Option<rayon::ThreadPool>> {
    let Ok(v) = std::env::var("SINR_WORKERS") else {
        return Ok(None);
    };
    let n: usize = v.trim().parse().map_err(|_| Error::Parse(format!("SINR_WORKERS must be a positive integer, got {v:?}")))?;
    if n == 0 {
        return Err(Error::Parse("SINR_WORKERS must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map(Some)
        .map_err(|e| Error::Precondition(e.to_string()))
}

fn dispatch(cmd: &Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Gen(a) => cmd_gen(a, out),
        Command::Render(a) => cmd_render(a),
        Command::Bounds(a) => cmd_bounds(a, out),
        Command::Build(a) => cmd_build(a),
        Command::Query(a) => cmd_query(a, out),
        Command::Verify(a) => cmd_verify(a, out),
    }
}

fn read_network(path: &Path) -> Result<Network> {
    Network::from_json(&fs::read_to_string(path)?)
}

fn read_index(path: &Path) -> Result<DiagramIndex> {
    deserialize_index(&fs::read(path)?)
}

pub fn parse_point(s: &str) -> Result<Point> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [x, y] = parts[..] else {
        return Err(Error::Parse(format!("expected `x,y`, got {s:?}")));
    };
    Ok(Point::new(parse_rational(x)?, parse_rational(y)?))
}

pub fn parse_bbox(s: &str) -> Result<BBox> {
    let v = s.split(',').map(|t| parse_rational(t.trim())).collect::<Result<Vec<_>>>()?;
    let [x0, y0, x1, y1] = <[Rational; 4]>::try_from(v).map_err(|_| Error::Parse(format!("expected `x0,y0,x1,y1`, got {s:?}")))?;
    BBox::new(x0, y0, x1, y1)
}

pub fn parse_resolution(s: &str) -> Result<(usize, usize)> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| Error::Parse(format!("expected `WxH`, got {s:?}")))?;
    let w: usize = w.trim().parse().map_err(|_| Error::Parse(format!("bad width in {s:?}")))?;
    let h: usize = h.trim().parse().map_err(|_| Error::Parse(format!("bad height in {s:?}")))?;
    if w == 0 || h == 0 {
        return Err(Error::Raster("resolution must be at least 1x1".into()));
    }
    Ok((w, h))
}

fn write_output(path: Option<&Path>, bytes: &[u8], out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes)?,
        None => out.write_all(bytes)?,
    }
    Ok(())
}

pub fn cmd_gen(a: &GenArgs, out: &mut dyn Write) -> Result<i32> {
    if a.n < 2 {
        return Err(Error::InvalidNetwork("a network needs at least two stations".into()));
    }
    let net = random_uniform_network(a.n, a.seed, a.spread, parse_rational(&a.noise)?, parse_rational(&a.beta)?)?;
    let text = net.to_json() + "\n";
    write_output(a.out.as_deref(), text.as_bytes(), out)?;
    Ok(EXIT_OK)
}

const PALETTE: [[u8; 3]; 12] = [
    [228, 26, 28],
    [55, 126, 184],
    [77, 175, 74],
    [152, 78, 163],
    [255, 127, 0],
    [166, 86, 40],
    [247, 129, 191],
    [153, 153, 153],
    [27, 158, 119],
    [117, 112, 179],
    [230, 171, 2],
    [102, 166, 30],
];

/// Colour of station `i`; white is reserved for unreceived points.
pub fn station_colour(i: usize) -> [u8; 3] {
    let base = PALETTE[i % PALETTE.len()];
    let shade = (i / PALETTE.len()) % 4;
    base.map(|c| (u32::from(c) * (4 - shade as u32) / 4) as u8)
}

pub fn render_ppm(net: &Network, bbox: &BBox, width: usize, height: usize) -> Result<Vec<u8>> {
    let r = rasterize(net, bbox, width, height)?;
    let mut bytes = format!("P6\n{width} {height}\n255\n").into_bytes();
    bytes.reserve(3 * width * height);
    for l in &r.labels {
        bytes.extend_from_slice(&l.map_or([255, 255, 255], station_colour));
    }
    Ok(bytes)
}

pub fn cmd_render(a: &RenderArgs) -> Result<i32> {
    let net = read_network(&a.net)?;
    let bbox = parse_bbox(&a.bbox)?;
    let (w, h) = parse_resolution(&a.res)?;
    fs::write(&a.out, render_ppm(&net, &bbox, w, h)?)?;
    Ok(EXIT_OK)
}

/// Exact form for short rationals, a decimal otherwise.
fn show(r: &Rational) -> String {
    if r.denom().bits() <= 20 && r.numer().bits() <= 40 {
        format_rational(r).trim_end_matches("/1").to_string()
    } else {
        format!("{:.9}", to_f64(r))
    }
}

fn show_enclosure(e: &Enclosure) -> String {
    if e.is_exact() {
        show(&e.lo)
    } else if to_f64(&e.width()) < 1e-12 * to_f64(&e.hi).abs().max(1.0) {
        format!("~{:.9}", e.mid_f64())
    } else {
        format!("[{}, {}]", show(&e.lo), show(&e.hi))
    }
}

pub fn cmd_bounds(a: &BoundsArgs, out: &mut dyn Write) -> Result<i32> {
    let net = read_network(&a.net)?;
    net.check_index(a.station)?;
    let i = a.station;
    writeln!(out, "station {i}")?;
    let k2 = net.kappa_sq(i);
    if !k2.is_positive() {
        writeln!(out, "kappa 0")?;
        writeln!(out, "degenerate zone: station {i} shares its location")?;
        return Ok(EXIT_OK);
    }
    writeln!(out, "kappa {}", show_enclosure(&crate::exact::sqrt_enclosure(&k2)))?;
    let e = explicit_bounds(&net, i)?;
    writeln!(out, "explicit delta {} Delta {}", show(&e.inner_lo), show(&e.outer_hi))?;
    let r = refined_bounds(&net, i)?;
    writeln!(out, "refined delta {} Delta {}", show(&r.inner_lo), show(&r.outer_hi))?;
    writeln!(out, "fatness {}", show_enclosure(&fatness_bound(net.beta())?))?;
    if let Some(n) = a.angles {
        let m = measure_radii(&net, i, n, &Rational::new(1.into(), 1_000_000.into()))?;
        writeln!(out, "measured inner {} outer {}", show_enclosure(&m.inner), show_enclosure(&m.outer))?;
        writeln!(out, "measured ratio <= {:.9}", to_f64(&m.ratio_hi()))?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_build(a: &BuildArgs) -> Result<i32> {
    let net = read_network(&a.net)?;
    let eps = parse_rational(&a.eps)?;
    let idx = build_diagram_index(&net, &eps)?;
    fs::write(&a.out, serialize_index(&idx))?;
    Ok(EXIT_OK)
}

pub fn cmd_query(a: &QueryArgs, out: &mut dyn Write) -> Result<i32> {
    let p = parse_point(&a.point)?;
    let idx = read_index(&a.index)?;
    writeln!(out, "{}", idx.query(&p))?;
    Ok(EXIT_OK)
}

struct Report<'a> {
    out: &'a mut dyn Write,
    failures: usize,
}

impl Report<'_> {
    fn line(&mut self, ok: bool, text: std::fmt::Arguments) -> Result<()> {
        if !ok {
            self.failures += 1;
        }
        writeln!(self.out, "{} {text}", if ok { "ok  " } else { "FAIL" })?;
        Ok(())
    }
}

fn show_point(p: &Point) -> String {
    let (x, y) = p.to_f64();
    format!("({x:.6}, {y:.6})")
}

pub fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let net = read_network(&a.net)?;
    let mut rep = Report { out, failures: 0 };
    if a.expect_nonconvex {
        let mut found = None;
        for i in 0..net.len() {
            if let Some(w) = convexity_probe(&net, i, a.trials, a.seed)? {
                found = Some((i, w));
                break;
            }
        }
        match found {
            Some((i, w)) => rep.line(
                true,
                format_args!(
                    "non-convex zone {i}: {} and {} received, {} between them is not",
                    show_point(&w.p1),
                    show_point(&w.p2),
                    show_point(&w.q)
                ),
            )?,
            None => rep.line(false, format_args!("no convexity witness in {} trials per zone", a.trials))?,
        }
        return finish(rep);
    }
    if !net.is_uniform() {
        return Err(Error::NonUniform);
    }
    if net.beta() <= &Rational::one() {
        return Err(Error::BetaTooSmall);
    }
    let f = fatness_bound(net.beta())?;
    let tol = Rational::new(1.into(), 1_000_000.into());
    for i in 0..net.len() {
        if net.is_colocated(i) {
            writeln!(rep.out, "skip zone {i}: degenerate")?;
            continue;
        }
        let w = convexity_probe(&net, i, a.trials, a.seed)?;
        match &w {
            None => rep.line(true, format_args!("convexity zone {i} ({} segments)", a.trials))?,
            Some(w) => rep.line(false, format_args!("convexity zone {i}: {} not received", show_point(&w.q)))?,
        }
        match star_shape_probe(&net, i, a.angles, 33, a.seed)? {
            None => rep.line(true, format_args!("star shape zone {i} ({} rays)", a.angles))?,
            Some(w) => rep.line(false, format_args!("star shape zone {i}: {} missed", show_point(&w.nearer_missed)))?,
        }
        let e = explicit_bounds(&net, i)?;
        let m = match measure_radii(&net, i, a.angles, &tol) {
            Ok(m) => m,
            Err(Error::BoundsViolation(msg)) => {
                rep.line(false, format_args!("bounds zone {i}: {msg}"))?;
                continue;
            }
            Err(err) => return Err(err),
        };
        let sandwich = m.inner.lo >= e.inner_lo && m.outer.hi <= e.outer_hi;
        rep.line(
            sandwich,
            format_args!("bounds zone {i}: {} <= {} and {} <= {}", show(&e.inner_lo), show(&m.inner.lo), show(&m.outer.hi), show(&e.outer_hi)),
        )?;
        let ratio = m.ratio_hi();
        rep.line(ratio <= &f.hi + &tol, format_args!("fatness zone {i}: ratio {:.9} <= {:.9}", to_f64(&ratio), to_f64(&f.hi)))?;
    }
    if let Some(p) = &a.index {
        let idx = read_index(p)?;
        verify_index(&net, &idx, a.trials, a.seed, &mut rep)?;
    }
    finish(rep)
}

fn finish(rep: Report) -> Result<i32> {
    if rep.failures == 0 {
        writeln!(rep.out, "verify: ok")?;
        Ok(EXIT_OK)
    } else {
        writeln!(rep.out, "verify: {} failure(s)", rep.failures)?;
        Ok(EXIT_VERIFY)
    }
}

fn verify_index(net: &Network, idx: &DiagramIndex, trials: usize, seed: u64, rep: &mut Report) -> Result<()> {
    rep.line(idx.network() == net, format_args!("index network matches"))?;
    if idx.network() != net {
        return Ok(());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for z in idx.zones() {
        let i = z.station;
        let Some(grid) = z.grid() else {
            rep.line(net.is_colocated(i), format_args!("index zone {i}: degenerate"))?;
            continue;
        };
        let (fresh, _) = build_zone_index_with(net, i, idx.eps(), Some(z.spacing()))?;
        rep.line(fresh.columns() == z.columns(), format_args!("index zone {i}: MAYBE cells reproduce"))?;
        let runs = z.plus_runs();
        let mut bad = 0usize;
        if !runs.is_empty() {
            for _ in 0..trials {
                let (c, r0, r1) = runs[rng.gen_range(0..runs.len())];
                let cell = crate::geom::Cell::new(c, rng.gen_range(r0..=r1));
                if !net.is_received(i, &random_point_in_cell(&mut rng, &grid, cell)) {
                    bad += 1;
                }
            }
        }
        rep.line(bad == 0 && !runs.is_empty(), format_args!("index zone {i}: PLUS samples received ({bad} bad)"))?;
        let b = z.bounds().expect("non-degenerate zone has bounds");
        let reach = (to_f64(&b.outer_hi) * 1.5 / to_f64(grid.spacing())).ceil().to_i64().unwrap_or(i64::MAX / 4).max(2);
        let mut bad = 0usize;
        for _ in 0..trials {
            let cell = crate::geom::Cell::new(rng.gen_range(-reach..=reach), rng.gen_range(-reach..=reach));
            if z.classify(cell) != CellClass::Minus {
                continue;
            }
            if net.is_received(i, &random_point_in_cell(&mut rng, &grid, cell)) {
                bad += 1;
            }
        }
        rep.line(bad == 0, format_args!("index zone {i}: MINUS samples not received ({bad} bad)"))?;
        let count = z.maybe_count() as u64;
        let limit = maybe_count_bound(z).unwrap_or(0);
        rep.line(count < limit, format_args!("index zone {i}: {count} MAYBE cells < {limit}"))?;
    }
    Ok(())
}
