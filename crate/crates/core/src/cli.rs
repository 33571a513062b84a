//! The `cellctx` command-line interface.
//!
//! Every subcommand is a thin wrapper over one library operation. Settings
//! resolve as defaults, then `--config` (flat TOML), then flags. Exit codes:
//! 0 success, 2 usage, 3 parse/format, 4 inconsistent input, 5 numeric or
//! domain error.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::clustering::{kmeans_fit, pseudo_label_masks, update_pseudo_labels, ClusterModel, FeatureTable, Init, KMeansParams};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::eval::{aggregate, evaluate, Averaging};
use crate::groundtruth::{generate_class_masks, generate_detection_mask, generate_kvector_map, raster_shape_for};
use crate::infer::extract_cells;
use crate::io::{self as fmt, WindowSpec};
use crate::parallel::with_workers;
use crate::pattern::{PointPattern, Window};
use crate::radii::RadiiGrid;
use crate::raster::RasterMap;
use crate::stats::{csr_envelope, k_vector_field, ripley_k, AverageCurves, EdgeCorrection};

const LONG_VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (raster format v1)");

#[derive(Debug, Parser)]
#[command(name = "cellctx", version = LONG_VERSION, about = "Spatial-context toolkit for cell detection")]
pub struct Cli {
    /// Flat TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: ConfigArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Comma-separated sampling radii in pixels.
    #[arg(long, global = true, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    #[arg(long, global = true)]
    patch_size: Option<f64>,
    #[arg(long, global = true)]
    n_max: Option<f64>,
    /// Clusters per class.
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    max_halfwidth: Option<u32>,
    #[arg(long, global = true)]
    min_gap: Option<u32>,
    #[arg(long, global = true)]
    threshold: Option<f64>,
    #[arg(long, global = true)]
    min_size: Option<usize>,
    #[arg(long, global = true)]
    match_radius: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct PatternArgs {
    /// Point CSV with header `x,y,class`.
    #[arg(long)]
    points: PathBuf,
    /// Window sidecar JSON.
    #[arg(long)]
    window: Option<PathBuf>,
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long)]
    y0: Option<f64>,
    #[arg(long)]
    width: Option<f64>,
    #[arg(long)]
    height: Option<f64>,
    #[arg(long)]
    n_classes: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-cell K-vectors as CSV.
    Kvec {
        #[command(flatten)]
        pattern: PatternArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Population K / K-cross curve.
    Ripley {
        #[command(flatten)]
        pattern: PatternArgs,
        #[arg(long, default_value_t = 0)]
        source: usize,
        #[arg(long, default_value_t = 0)]
        target: usize,
        #[arg(long, default_value = "border")]
        correction: EdgeCorrection,
        #[arg(long)]
        out: PathBuf,
    },
    /// Observed K with a CSR rank envelope.
    Envelope {
        #[command(flatten)]
        pattern: PatternArgs,
        #[arg(long, default_value_t = 0)]
        source: usize,
        #[arg(long, default_value_t = 0)]
        target: usize,
        #[arg(long, default_value_t = 99)]
        n_sims: usize,
        #[arg(long, default_value_t = 3)]
        rank: usize,
        #[arg(long, default_value = "border")]
        correction: EdgeCorrection,
        #[arg(long)]
        out: PathBuf,
    },
    /// Average K-vector rows per (source, target) class pair.
    Curves {
        #[command(flatten)]
        pattern: PatternArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Detection, class, K-vector and validity training maps.
    Gtmaps {
        #[command(flatten)]
        pattern: PatternArgs,
        #[arg(long)]
        out_dir: PathBuf,
        /// Raster height; defaults to the window's far edge.
        #[arg(long)]
        raster_height: Option<usize>,
        #[arg(long)]
        raster_width: Option<usize>,
    },
    /// Per-class k-means pseudo-labels, optionally warm-started.
    Cluster {
        /// Feature CSV `cell_index,class,f0,…`.
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        model_in: Option<PathBuf>,
        #[arg(long)]
        model_out: Option<PathBuf>,
        #[arg(long)]
        assignments: PathBuf,
        #[arg(long)]
        normalize: bool,
        /// With --window and --detection, also write pseudo-label masks here.
        #[arg(long, requires_all = ["points", "window", "detection"])]
        masks_out: Option<PathBuf>,
        #[arg(long)]
        points: Option<PathBuf>,
        #[arg(long)]
        window: Option<PathBuf>,
        #[arg(long)]
        detection: Option<PathBuf>,
    },
    /// Threshold network outputs into predicted cells.
    Extract {
        #[arg(long)]
        likelihood: PathBuf,
        #[arg(long)]
        classes: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Detection and classification F-scores as JSON.
    Eval {
        /// Prediction CSVs; paired in order with --gt.
        #[arg(long, required = true, num_args = 1..)]
        pred: Vec<PathBuf>,
        #[arg(long, required = true, num_args = 1..)]
        gt: Vec<PathBuf>,
        #[arg(long)]
        n_classes: Option<usize>,
        #[arg(long, default_value = "micro")]
        average: Averaging,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sub-categories of each class from k-means on K-vectors.
    Subcats {
        #[command(flatten)]
        pattern: PatternArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("cellctx: {e}");
            e.exit_code()
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let o = &cli.overrides;
    if let Some(r) = &o.radii {
        cfg.radii = RadiiGrid::new(r.clone())?;
    }
    macro_rules! set {
        ($($field:ident),*) => { $(if let Some(v) = o.$field { cfg.$field = v; })* };
    }
    set!(patch_size, n_max, k, max_halfwidth, min_gap, threshold, min_size, match_radius, seed, workers);
    cfg.validate()?;
    Ok(cfg)
}

fn load_pattern(args: &PatternArgs) -> Result<PointPattern> {
    let base = args.window.as_ref().map(WindowSpec::load).transpose()?;
    let pick = |flag: Option<f64>, from: Option<f64>, name: &str| {
        flag.or(from)
            .ok_or_else(|| Error::Usage(format!("--{name} (or --window) is required")))
    };
    let spec = WindowSpec {
        x0: args.x0.or(base.map(|b| b.x0)).unwrap_or(0.0),
        y0: args.y0.or(base.map(|b| b.y0)).unwrap_or(0.0),
        width: pick(args.width, base.map(|b| b.width), "width")?,
        height: pick(args.height, base.map(|b| b.height), "height")?,
        n_classes: args
            .n_classes
            .or(base.map(|b| b.n_classes))
            .ok_or_else(|| Error::Usage("--n-classes (or --window) is required".into()))?,
    };
    fmt::load_pattern(&args.points, &spec)
}

fn output(path: &Path) -> Result<Box<dyn Write>> {
    if path == Path::new("-") {
        Ok(Box::new(io::stdout().lock()))
    } else {
        Ok(Box::new(fmt::create(path)?))
    }
}

fn finish(mut w: Box<dyn Write>) -> Result<()> {
    w.flush()?;
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    let cfg = resolve_config(&cli)?;
    match &cli.command {
        Command::Kvec { pattern, out } => {
            let p = load_pattern(pattern)?;
            let field = k_vector_field(&p, &cfg.radii, cfg.patch_size, cfg.n_max, cfg.workers)?;
            let mut w = output(out)?;
            fmt::write_kvectors(&mut w, &p, &field)?;
            finish(w)
        }
        Command::Ripley {
            pattern,
            source,
            target,
            correction,
            out,
        } => {
            let p = load_pattern(pattern)?;
            let k = ripley_k(&p, *source, *target, &cfg.radii, *correction)?;
            let mut w = output(out)?;
            writeln!(w, "r,k,theoretical")?;
            for (r, v) in cfg.radii.as_slice().iter().zip(&k.values) {
                writeln!(w, "{r},{v},{}", std::f64::consts::PI * r * r)?;
            }
            finish(w)
        }
        Command::Envelope {
            pattern,
            source,
            target,
            n_sims,
            rank,
            correction,
            out,
        } => {
            let p = load_pattern(pattern)?;
            let observed = ripley_k(&p, *source, *target, &cfg.radii, *correction)?;
            let env = with_workers(cfg.workers, || {
                csr_envelope(&p, *source, *target, &cfg.radii, *n_sims, *rank, cfg.seed, *correction)
            })??;
            let mut w = output(out)?;
            writeln!(w, "r,observed,lower,upper,theoretical")?;
            for j in 0..cfg.radii.len() {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    cfg.radii.as_slice()[j],
                    observed.values[j],
                    env.lower[j],
                    env.upper[j],
                    env.baseline[j]
                )?;
            }
            finish(w)
        }
        Command::Curves { pattern, out } => {
            let p = load_pattern(pattern)?;
            let field = k_vector_field(&p, &cfg.radii, cfg.patch_size, cfg.n_max, cfg.workers)?;
            let avg = AverageCurves::from_field(&p, &field)?;
            let mut w = output(out)?;
            write!(w, "source,target,present,n_cells")?;
            for r in cfg.radii.as_slice() {
                write!(w, ",k_r{r}")?;
            }
            writeln!(w)?;
            for s in 0..avg.n_classes {
                for t in 0..avg.n_classes {
                    write!(w, "{s},{t},{},{}", u8::from(avg.present(s)), avg.cell_counts[s])?;
                    for v in avg.curve(s, t) {
                        write!(w, ",{v}")?;
                    }
                    writeln!(w)?;
                }
            }
            finish(w)
        }
        Command::Gtmaps {
            pattern,
            out_dir,
            raster_height,
            raster_width,
        } => {
            let p = load_pattern(pattern)?;
            let (h, w) = raster_shape_for(p.window());
            let shape = (raster_height.unwrap_or(h), raster_width.unwrap_or(w));
            fs::create_dir_all(out_dir)?;
            let det = generate_detection_mask(&p, shape, cfg.max_halfwidth, cfg.min_gap)?;
            let classes = generate_class_masks(&p, &det.mask)?;
            let field = k_vector_field(&p, &cfg.radii, cfg.patch_size, cfg.n_max, cfg.workers)?;
            let (kmap, valid) = generate_kvector_map(&p, &det.mask, &field)?;
            det.mask.save(out_dir.join("detection.csrm"))?;
            classes.save(out_dir.join("classes.csrm"))?;
            kmap.save(out_dir.join("kvector.csrm"))?;
            valid.save(out_dir.join("validity.csrm"))?;
            let mut wr = output(&out_dir.join("dilation.csv"))?;
            writeln!(wr, "cell_index,halfwidth")?;
            for (i, hw) in det.halfwidths.iter().enumerate() {
                writeln!(wr, "{i},{hw}")?;
            }
            finish(wr)
        }
        Command::Cluster {
            features,
            model_in,
            model_out,
            assignments,
            normalize,
            masks_out,
            points,
            window,
            detection,
        } => {
            let table = fmt::read_features(fmt::open(features)?)?;
            let previous = model_in
                .as_ref()
                .map(|p| -> Result<ClusterModel> { ClusterModel::from_json(&fs::read_to_string(p)?) })
                .transpose()?;
            let params = match &previous {
                Some(m) => m.params,
                None => KMeansParams {
                    normalize: *normalize,
                    ..KMeansParams::default()
                },
            };
            // A warm start keeps the model's k unless one is given on the command line.
            let k = match (&previous, cli.overrides.k) {
                (Some(m), None) => m.k,
                _ => cfg.k,
            };
            let model = with_workers(cfg.workers, || {
                update_pseudo_labels(&table, previous.as_ref(), k, cfg.seed, &params)
            })??;
            let mut w = output(assignments)?;
            fmt::write_assignments(&mut w, &model.assignments)?;
            finish(w)?;
            if let Some(path) = model_out {
                fs::write(path, model.to_json()? + "\n")?;
            }
            if let (Some(out), Some(points), Some(window), Some(det)) = (masks_out, points, window, detection) {
                let spec = WindowSpec::load(window)?;
                let p = fmt::load_pattern(points, &spec)?;
                let masks = pseudo_label_masks(&model, &RasterMap::load(det)?, &p)?;
                masks.save(out)?;
            }
            Ok(())
        }
        Command::Extract {
            likelihood,
            classes,
            out,
        } => {
            let preds = extract_cells(
                &RasterMap::load(likelihood)?,
                &RasterMap::load(classes)?,
                cfg.threshold,
                cfg.min_size,
            )?;
            let mut w = output(out)?;
            fmt::write_predictions(&mut w, &preds)?;
            finish(w)
        }
        Command::Eval {
            pred,
            gt,
            n_classes,
            average,
            out,
        } => {
            if pred.len() != gt.len() {
                return Err(Error::Usage(format!(
                    "{} prediction files but {} ground-truth files",
                    pred.len(),
                    gt.len()
                )));
            }
            let mut loaded = Vec::with_capacity(pred.len());
            let mut max_class = 0;
            for (pp, gp) in pred.iter().zip(gt) {
                let preds = fmt::read_predictions(fmt::open(pp)?)?;
                let (points, labels) = fmt::read_points(fmt::open(gp)?)?;
                let seen = preds.iter().map(|p| p.class).chain(labels.iter().copied()).max();
                max_class = max_class.max(seen.map_or(1, |m| m + 1));
                loaded.push((preds, points, labels));
            }
            let n_classes = n_classes.unwrap_or(max_class);
            let mut reports = Vec::with_capacity(loaded.len());
            for (preds, points, labels) in loaded {
                let window = Window::bounding(&points);
                let gt = PointPattern::new(points, labels, window, n_classes)?;
                reports.push(evaluate(&preds, &gt, cfg.match_radius)?);
            }
            let report = aggregate(&reports, *average)?;
            let mut w = output(out)?;
            serde_json::to_writer_pretty(&mut w, &report)?;
            writeln!(w)?;
            finish(w)
        }
        Command::Subcats { pattern, out } => {
            let p = load_pattern(pattern)?;
            let field = k_vector_field(&p, &cfg.radii, cfg.patch_size, cfg.n_max, cfg.workers)?;
            let table = FeatureTable::from_k_vectors(&p, &field)?;
            let params = KMeansParams::default();
            let mut sub = vec![0usize; p.len()];
            with_workers(cfg.workers, || -> Result<()> {
                for class in 0..p.n_classes() {
                    if !p.labels().contains(&class) {
                        continue;
                    }
                    let fit = kmeans_fit(&table, class, cfg.k, &Init::KMeansPlusPlus, &params, cfg.seed)?;
                    for (&cell, &j) in fit.cells.iter().zip(&fit.assignments) {
                        sub[cell] = j;
                    }
                }
                Ok(())
            })??;
            let mut w = output(out)?;
            writeln!(w, "cell_index,x,y,class,subcategory,subclass")?;
            for (i, (pt, &c)) in p.points().iter().zip(p.labels()).enumerate() {
                writeln!(w, "{i},{},{},{c},{},{}", pt.x, pt.y, sub[i], c * cfg.k + sub[i])?;
            }
            finish(w)
        }
    }
}
