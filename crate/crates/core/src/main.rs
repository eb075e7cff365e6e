use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use depthlab::bits::{parse_bits, BitString};
use depthlab::codec::{decode_fst, encode_fst};
use depthlab::fst::{fst_compose, FstError, FstSpec};
use depthlab::kfs::kfs_complexity;
use depthlab::lz78::{lz_decode, lz_encode, lz_parse, parse_table_csv};
use depthlab::profile::{CompressorSpec, DepthProfile, Grid, ProfileError, RatioTable};
use depthlab::pushdown::{compose_pdc_fst, PdcError, PdcSpec};
use depthlab::seqgen::{generate, read_bits_file, write_generated, Growth, Recipe, RecipeConfig, SeqError};

#[derive(Debug, Parser)]
#[command(name = "depthlab", version, about = "Finite-state and pushdown compression depth toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a recipe sequence and write it with a JSON manifest.
    Generate {
        #[command(flatten)]
        recipe: RecipeArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-prefix gap between a weak and a strong compressor.
    Profile {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        weak: CompressorSpec,
        #[arg(long)]
        strong: CompressorSpec,
        #[command(flatten)]
        table: TableArgs,
    },
    /// Per-prefix compression ratio of one compressor.
    Ratio {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        compressor: CompressorSpec,
        #[command(flatten)]
        table: TableArgs,
    },
    /// LZ78 encode (default) or decode a bit string.
    Lz {
        /// Bits, `-` for empty; read from --input when omitted.
        bits: Option<String>,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        decode: bool,
        /// Print the phrase table as CSV instead of the code.
        #[arg(long, conflicts_with = "decode")]
        table: bool,
    },
    /// Run a transducer file on a bit string.
    FstRun { spec: PathBuf, bits: String },
    /// Run a pushdown compressor file on a bit string.
    PdcRun { spec: PathBuf, bits: String },
    /// Binary description of a transducer file.
    EncodeFst { spec: PathBuf },
    /// Transducer text from a binary description.
    DecodeFst { bits: String },
    /// Shortest-input complexity over all transducers with descriptions of at most --k bits.
    Kfs {
        #[arg(long)]
        k: usize,
        bits: String,
    },
    /// Machine computing OUTER(INNER(x)); OUTER is a .fst or .pdc file, INNER a .fst file.
    Compose { outer: PathBuf, inner: PathBuf },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RecipeName {
    A,
    B,
    C,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
}

#[derive(Debug, Args)]
struct RecipeArgs {
    #[arg(long)]
    recipe: Option<RecipeName>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    v: Option<usize>,
    /// Number of stages (recipe A: intervals).
    #[arg(long, default_value_t = 6)]
    stages: usize,
    /// Recipe A interval growth: `tower` or `scaled:G`.
    #[arg(long, default_value = "tower")]
    growth: String,
    /// Recipe A: certify the random blocks by exhaustive search.
    #[arg(long)]
    certify: bool,
    #[arg(long, env = "DEPTHLAB_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_bits: Option<u64>,
}

#[derive(Debug, Args)]
struct SourceArgs {
    /// Bit file to read instead of generating a recipe.
    #[arg(long, conflicts_with = "recipe")]
    input: Option<PathBuf>,
    #[command(flatten)]
    recipe: RecipeArgs,
}

#[derive(Debug, Args)]
struct TableArgs {
    /// Prefix lengths `start:stop:step` or `start:stop:*factor`.
    #[arg(long)]
    grid: Grid,
    #[arg(long, default_value_t = 0.5)]
    tail_fraction: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Stuck(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Stuck(_) => 3,
        }
    }
}

impl From<FstError> for CliError {
    fn from(e: FstError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<PdcError> for CliError {
    fn from(e: PdcError) -> Self {
        match e {
            PdcError::Stuck { .. } => CliError::Stuck(e.to_string()),
            PdcError::InvalidParameters(_) | PdcError::Refused { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ProfileError> for CliError {
    fn from(e: ProfileError) -> Self {
        match e {
            ProfileError::Fst(e) => e.into(),
            ProfileError::Pdc(e) => e.into(),
            e => CliError::Usage(e.to_string()),
        }
    }
}

impl From<SeqError> for CliError {
    fn from(e: SeqError) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn usage(e: impl ToString) -> CliError {
    CliError::Usage(e.to_string())
}

fn bit_arg(s: &str) -> Result<BitString, CliError> {
    if s == "-" {
        return Ok(BitString::new());
    }
    parse_bits(s).map_err(usage)
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn recipe_config(a: &RecipeArgs) -> Result<RecipeConfig, CliError> {
    let need = |v: Option<usize>, flag: &str| v.ok_or_else(|| usage(format!("this recipe needs --{flag}")));
    let recipe = match a.recipe.ok_or_else(|| usage("--recipe or --input is required"))? {
        RecipeName::A => {
            let growth = match a.growth.as_str() {
                "tower" => Growth::Tower,
                g => match g.strip_prefix("scaled:").and_then(|n| n.parse().ok()) {
                    Some(g) => Growth::Scaled { g },
                    None => return Err(usage(format!("bad --growth {g:?}"))),
                },
            };
            Recipe::A { growth, stages: a.stages, certify: a.certify }
        }
        RecipeName::B => Recipe::B { k: need(a.k, "k")?, stages: a.stages },
        RecipeName::C => Recipe::C { k: need(a.k, "k")?, v: need(a.v, "v")?, stages: a.stages },
    };
    Ok(RecipeConfig { recipe, seed: a.seed, max_bits: a.max_bits })
}

fn load_source(s: &SourceArgs) -> Result<BitString, CliError> {
    match &s.input {
        Some(p) => Ok(read_bits_file(p)?),
        None => Ok(generate(&recipe_config(&s.recipe)?)?.bits),
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { recipe, out } => {
            let cfg = recipe_config(&recipe)?;
            let g = generate(&cfg)?;
            let side = write_generated(&out, &cfg, &g)?;
            for n in &g.notices {
                eprintln!("notice: {n}");
            }
            println!("{} bits -> {} (manifest {})", g.bits.len(), out.display(), side.display());
        }
        Command::Profile { source, weak, strong, table } => {
            let x = load_source(&source)?;
            let (w, s) = (weak.resolve()?, strong.resolve()?);
            let (wl, sl) = (weak.to_string(), strong.to_string());
            let p = DepthProfile::compute(&x, (&wl, &w), (&sl, &s), &table.grid, table.tail_fraction)?;
            let Format::Csv = table.format;
            emit(&table.out, &p.to_csv())?;
        }
        Command::Ratio { source, compressor, table } => {
            let x = load_source(&source)?;
            let c = compressor.resolve()?;
            let t = RatioTable::compute(&x, (&compressor.to_string(), &c), &table.grid, table.tail_fraction)?;
            let Format::Csv = table.format;
            emit(&table.out, &t.to_csv())?;
        }
        Command::Lz { bits, input, decode, table } => {
            let x = match (bits, input) {
                (Some(b), None) => bit_arg(&b)?,
                (None, Some(p)) => read_bits_file(&p)?,
                _ => return Err(usage("give exactly one of BITS or --input")),
            };
            if decode {
                println!("{}", lz_decode(&x).map_err(|e| CliError::Validation(e.to_string()))?);
            } else if table {
                print!("{}", parse_table_csv(&lz_parse(&x)));
            } else {
                println!("{}", lz_encode(&x));
            }
        }
        Command::FstRun { spec, bits } => {
            let t = FstSpec::from_text(&read_text(&spec)?)?;
            let r = t.run(&bit_arg(&bits)?);
            println!("output={} final_state={}", r.output, r.final_state + 1);
        }
        Command::PdcRun { spec, bits } => {
            let c = PdcSpec::from_text(&read_text(&spec)?)?;
            let r = c.run(&bit_arg(&bits)?)?;
            println!("output={} final_state={} stack={}", r.output, r.final_state + 1, r.stack_text());
        }
        Command::EncodeFst { spec } => {
            let t = FstSpec::from_text(&read_text(&spec)?)?;
            println!("{}", encode_fst(&t).bits);
        }
        Command::DecodeFst { bits } => {
            let t = decode_fst(&bit_arg(&bits)?).map_err(|e| CliError::Validation(e.to_string()))?;
            print!("{}", t.to_text());
        }
        Command::Kfs { k, bits } => {
            let r = kfs_complexity(&bit_arg(&bits)?, k).map_err(usage)?;
            println!("{}", r.to_record());
        }
        Command::Compose { outer, inner } => {
            let t = FstSpec::from_text(&read_text(&inner)?)?;
            let text = read_text(&outer)?;
            if outer.extension().is_some_and(|e| e == "pdc") {
                print!("{}", compose_pdc_fst(&PdcSpec::from_text(&text)?, &t)?.to_text());
            } else {
                print!("{}", fst_compose(&FstSpec::from_text(&text)?, &t).to_text());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
