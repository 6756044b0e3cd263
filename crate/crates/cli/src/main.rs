use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use braille_core::eval::{char_accuracy, format_report, metrics, Confusion};
use braille_core::geometry::BrailleStructure;
use braille_core::image::{binary_to_gray, load_gray, save_gray, BinaryImage};
use braille_core::overlay::{grid_overlay, margins_overlay, points_overlay};
use braille_core::pipeline::{run_page_stages, translate_batch, PageResult, PageStages, PipelineConfig};
use braille_core::preprocess::PreprocessConfig;
use braille_core::synth::{compare_dots, parse_spec, read_truth, render, truth_path, write_truth};
use braille_core::translate::{load_mapping, CollisionPolicy, MappingTable, DEFAULT_FILL_THRESHOLD};
use clap::{Args, Parser, Subcommand};

const EXIT_USAGE: u8 = 1;
const EXIT_PAGE_FAILURE: u8 = 2;
const EXIT_BELOW_BAR: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "braille", version, about = "Optical recognition of embossed Bengali Braille pages")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Mapping table (BITS<TAB>GRAPHEME lines); defaults to the built-in Bengali table.
    #[arg(long, env = "BRAILLE_TABLE", global = true)]
    table: Option<PathBuf>,
    /// Odd median filter window.
    #[arg(long, default_value_t = 3, global = true)]
    median_window: usize,
    /// Closing radius in pixels; 0 disables closing.
    #[arg(long, default_value_t = 1, global = true)]
    closing_radius: usize,
    /// Share of the grey range below which the Otsu histogram is built.
    #[arg(long, default_value_t = 0.5, global = true)]
    otsu_fraction: f64,
    /// Share of the expected dot area a sub-region must fill to count as raised.
    #[arg(long, default_value_t = DEFAULT_FILL_THRESHOLD, global = true)]
    fill_threshold: f64,
    /// Worker threads for batch translation (0 = one per CPU).
    #[arg(long, default_value_t = 1, global = true)]
    jobs: usize,
    /// Also dump every stage of each page below this directory.
    #[arg(long, global = true)]
    inspect_dir: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Translate page images to text, one .txt per image.
    Translate {
        #[arg(required = true)]
        images: Vec<PathBuf>,
        /// Output directory, or `-` for standard output. Defaults to the image's directory.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Dump each processing stage of one page as images plus structure.txt.
    Inspect {
        image: PathBuf,
        /// Destination directory (falls back to --inspect-dir).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Render a synthetic page and its .truth sidecar from a spec file.
    Synth {
        spec: PathBuf,
        /// Image to write (.png or .pgm).
        #[arg(short, long)]
        output: PathBuf,
        /// Override the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score results: raw counts, text against text, or an image against its sidecar.
    Eval {
        /// Image to recognize and score against its .truth sidecar.
        image: Option<PathBuf>,
        /// Confusion counts T_P,F_P,T_N,F_N.
        #[arg(long, value_delimiter = ',', num_args = 1)]
        counts: Option<Vec<u64>>,
        /// Predicted text file.
        #[arg(long)]
        predicted: Option<PathBuf>,
        /// Truth text file, or the sidecar when scoring an image.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Fail (exit 3) when accuracy in percent is below this bar.
        #[arg(long)]
        min_accuracy: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let common = &cli.common;
    match &cli.command {
        Command::Translate { images, output } => cmd_translate(common, images, output.as_deref()),
        Command::Inspect { image, out } => {
            let dir = out
                .clone()
                .or_else(|| common.inspect_dir.clone())
                .context("inspect needs --out or --inspect-dir")?;
            cmd_inspect(common, image, &dir)
        }
        Command::Synth { spec, output, seed } => cmd_synth(common, spec, output, *seed),
        Command::Eval {
            image,
            counts,
            predicted,
            truth,
            min_accuracy,
        } => cmd_eval(common, image.as_deref(), counts.as_deref(), predicted.as_deref(), truth.as_deref(), *min_accuracy),
    }
}

fn load_table(common: &Common) -> Result<MappingTable> {
    let table = match &common.table {
        Some(path) => load_mapping(path, CollisionPolicy::FirstWins)
            .with_context(|| format!("loading mapping table {}", path.display()))?,
        None => MappingTable::bengali(),
    };
    Ok(table)
}

fn pipeline_config(common: &Common) -> Result<PipelineConfig> {
    let cfg = PipelineConfig {
        preprocess: PreprocessConfig {
            median_window: common.median_window,
            closing_radius: common.closing_radius,
            otsu_range_fraction: common.otsu_fraction,
            ..Default::default()
        },
        fill_threshold: common.fill_threshold,
        jobs: common.jobs,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn format_structure(s: &BrailleStructure) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "p0_x {:.2}", s.p0_x);
    let _ = writeln!(out, "p0_y {:.2}", s.p0_y);
    let _ = writeln!(out, "theta_b_degrees {:.2}", s.theta_b.to_degrees());
    let _ = writeln!(out, "char_width {:.2}", s.char_width);
    let _ = writeln!(out, "char_height {:.2}", s.char_height);
    let _ = writeln!(out, "char_gap {:.2}", s.char_gap);
    let _ = writeln!(out, "line_gap {:.2}", s.line_gap);
    let _ = writeln!(out, "chars_per_line {}", s.chars_per_line);
    let _ = writeln!(out, "line_count {}", s.line_count);
    let _ = writeln!(out, "standard_diameter {:.2}", s.delta_s);
    out
}

fn report_page(path: &Path, page: &PageResult) {
    let name = path.display();
    match &page.structure {
        None => eprintln!("{name}: blank page"),
        Some(s) => eprintln!(
            "{name}: {} lines x {} cells, theta {:.2} deg, cell {:.1}x{:.1}, gaps {:.1}/{:.1}",
            s.line_count,
            s.chars_per_line,
            s.theta_b.to_degrees(),
            s.char_width,
            s.char_height,
            s.char_gap,
            s.line_gap
        ),
    }
    for u in &page.unknown {
        eprintln!("{name}: unknown code {} at line {} cell {}", u.code, u.line + 1, u.col + 1);
    }
    for w in &page.warnings {
        eprintln!("{name}: warning: {w}");
    }
}

fn text_path(image: &Path, output: Option<&Path>) -> PathBuf {
    let file = image.with_extension("txt");
    match output {
        Some(dir) => dir.join(file.file_name().expect("image path has a file name")),
        None => file,
    }
}

fn cmd_translate(common: &Common, images: &[PathBuf], output: Option<&Path>) -> Result<u8> {
    let table = load_table(common)?;
    for w in table.warnings() {
        eprintln!("warning: {w}");
    }
    let cfg = pipeline_config(common)?;
    let to_stdout = output == Some(Path::new("-"));
    if to_stdout && images.len() != 1 {
        bail!("`--output -` takes exactly one image");
    }
    if let Some(dir) = output.filter(|_| !to_stdout) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }

    let mut status = 0;
    for (path, result) in translate_batch(images, &cfg, &table)? {
        match result {
            Ok(page) => {
                report_page(&path, &page);
                let mut text = page.text;
                if !text.is_empty() {
                    text.push('\n');
                }
                if to_stdout {
                    std::io::stdout().write_all(text.as_bytes())?;
                } else {
                    let dest = text_path(&path, output);
                    fs::write(&dest, text).with_context(|| format!("writing {}", dest.display()))?;
                }
            }
            Err(e) => {
                eprintln!("{}: failed: {e}", path.display());
                status = EXIT_PAGE_FAILURE;
            }
        }
        if let Some(root) = &common.inspect_dir {
            let stem = path.file_stem().map(|s| s.to_os_string()).unwrap_or_default();
            if let Err(e) = cmd_inspect(common, &path, &root.join(stem)) {
                eprintln!("{}: inspect failed: {e:#}", path.display());
            }
        }
    }
    Ok(status)
}

fn dump(img: &braille_core::image::GrayImage, dir: &Path, name: &str) -> Result<()> {
    let path = dir.join(name);
    save_gray(img, &path).with_context(|| format!("writing {}", path.display()))
}

fn cmd_inspect(common: &Common, image: &Path, dir: &Path) -> Result<u8> {
    let table = load_table(common)?;
    let cfg = pipeline_config(common)?;
    let img = load_gray(image)?;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;

    let stages: PageStages = run_page_stages(&img, &cfg, &table)?;
    let pre = &stages.preprocess;
    dump(&pre.equalized, dir, "01-bhe.pgm")?;
    dump(&pre.filtered, dir, "02-median.pgm")?;
    let binary = pre
        .binarization
        .as_ref()
        .map(|b| b.image.clone())
        .unwrap_or_else(|| BinaryImage::empty(img.width(), img.height()));
    dump(&binary_to_gray(&binary), dir, "03-binary.pgm")?;
    let closed = binary_to_gray(&pre.closed);
    dump(&closed, dir, "04-closed.pgm")?;

    if stages.blank {
        eprintln!("{}: blank page, no structure", image.display());
        return Ok(EXIT_PAGE_FAILURE);
    }
    if let Some(d) = &stages.detection {
        dump(&points_overlay(&closed, &d.points), dir, "05-points.pgm")?;
    }
    if let Some(e) = &stages.estimate {
        dump(&margins_overlay(&closed, e), dir, "06-margins.pgm")?;
    }
    if let Some(g) = &stages.grid {
        dump(&grid_overlay(&closed, g), dir, "07-grid.pgm")?;
    }
    if let Some(e) = &stages.estimate {
        let path = dir.join("structure.txt");
        fs::write(&path, format_structure(&e.structure)).with_context(|| format!("writing {}", path.display()))?;
    }
    match &stages.failure {
        Some(e) => {
            eprintln!("{}: failed: {e}", image.display());
            Ok(EXIT_PAGE_FAILURE)
        }
        None => Ok(0),
    }
}

fn cmd_synth(common: &Common, spec_path: &Path, output: &Path, seed: Option<u64>) -> Result<u8> {
    let table = load_table(common)?;
    let source = fs::read_to_string(spec_path).with_context(|| format!("reading {}", spec_path.display()))?;
    let mut spec = parse_spec(&source, table)?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let (img, truth) = render(&spec)?;
    save_gray(&img, output)?;
    write_truth(&truth, truth_path(output))?;
    Ok(0)
}

fn print_scores(title: &str, c: &Confusion) -> Result<f64> {
    let m = metrics(c)?;
    println!("{title}");
    print!("{}", format_report(c, &m));
    Ok(100.0 * m.accuracy)
}

fn cmd_eval(
    common: &Common,
    image: Option<&Path>,
    counts: Option<&[u64]>,
    predicted: Option<&Path>,
    truth: Option<&Path>,
    min_accuracy: Option<f64>,
) -> Result<u8> {
    let accuracy = match (counts, image, predicted) {
        (Some(counts), None, None) => {
            let [t_p, f_p, t_n, f_n] = counts else {
                bail!("--counts takes four numbers: T_P,F_P,T_N,F_N");
            };
            let c = Confusion {
                t_p: *t_p,
                f_p: *f_p,
                t_n: *t_n,
                f_n: *f_n,
            };
            let m = metrics(&c)?;
            print!("{}", format_report(&c, &m));
            100.0 * m.accuracy
        }
        (None, None, Some(predicted)) => {
            let truth = truth.context("--predicted needs --truth")?;
            let table = load_table(common)?;
            let p = fs::read_to_string(predicted).with_context(|| format!("reading {}", predicted.display()))?;
            let t = fs::read_to_string(truth).with_context(|| format!("reading {}", truth.display()))?;
            let (m, c) = char_accuracy(&p, &t, &table);
            println!("characters (a substitution counts as one F_P and one F_N)");
            print!("{}", format_report(&c, &m));
            100.0 * m.accuracy
        }
        (None, Some(image), None) => {
            let table = load_table(common)?;
            let cfg = pipeline_config(common)?;
            let sidecar = truth.map(Path::to_path_buf).unwrap_or_else(|| truth_path(image));
            let gt = read_truth(&sidecar)?;
            let stages = run_page_stages(&load_gray(image)?, &cfg, &table)?;
            if let Some(e) = &stages.failure {
                eprintln!("{}: failed: {e}", image.display());
            }
            if let Some(d) = &stages.detection {
                let dots = compare_dots(&d.points, &gt, d.standard_diameter / 2.0);
                print_scores("dots", &dots.into())?;
            }
            let text = stages.translation.map(|t| t.text).unwrap_or_default();
            let (m, c) = char_accuracy(&text, &gt.text(&table), &table);
            println!("characters (a substitution counts as one F_P and one F_N)");
            print!("{}", format_report(&c, &m));
            100.0 * m.accuracy
        }
        _ => bail!("eval takes exactly one of --counts, --predicted with --truth, or an image"),
    };
    if let Some(bar) = min_accuracy {
        if accuracy < bar {
            eprintln!("accuracy {accuracy:.2}% is below the required {bar:.2}%");
            return Ok(EXIT_BELOW_BAR);
        }
    }
    Ok(0)
}
