use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use recursive_vc::pbm::{read_pbm, write_pbm};
use recursive_vc::sharefile::{grid_image, read_share_set, split_id, write_share, ShareFileHeader};
use recursive_vc::{
    decode, default_layout, split_image, stack, BinaryImage, Error, SchemeSpec, ShareImage,
};

mod chain;
mod demo;
mod report;

/// Visual secret sharing: split, stack, decode, and hide shares inside shares.
#[derive(Parser)]
#[command(name = "vcs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split a bitmap into share files.
    Split {
        /// `3ofN:n`, `kofk:k`, or `kofn:k,n[,exhaustive|sampled:L:SEED]`
        #[arg(long)]
        scheme: SchemeSpec,
        #[arg(long)]
        seed: u64,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Whether unused subpixels of each block are black (1) or white (0).
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=1))]
        pad: u8,
    },
    /// Overlay share files and write the visual result.
    Stack {
        #[arg(long = "in", num_args = 1.., required = true)]
        input: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stack share files and threshold each block back to a pixel.
    Decode {
        #[arg(long = "in", num_args = 1.., required = true)]
        input: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Hide a chain of secrets, each inside the shares of the next.
    Embed {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Recover the shares of a smaller secret hidden in the given shares.
    Extract {
        /// Chain level to recover; 1 is the smallest secret.
        #[arg(long)]
        level: usize,
        #[arg(long = "in", num_args = 1.., required = true)]
        input: Vec<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Treat shares without embedding records as holding a band-placed
        /// level of this size (`WxH`).
        #[arg(long)]
        assume_size: Option<String>,
    },
    /// Audit a scheme's contrast and security conditions.
    Verify {
        #[arg(long)]
        scheme: SchemeSpec,
        /// Only check security at this subset size.
        #[arg(long)]
        q: Option<usize>,
        /// Enumerate all column permutations instead of comparing column multisets.
        #[arg(long)]
        full_enum: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Flip one bit (`ROW:COL`, 0-based) of the white canonical before auditing.
        #[arg(long)]
        corrupt: Option<String>,
    },
    /// Report the image-size distribution of a k-of-n function family.
    Analyze {
        #[arg(long)]
        scheme: SchemeSpec,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Build a three-level demonstration chain from generated images.
    Demo {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

/// Outcome of a command that ran to completion.
enum Outcome {
    Success,
    VerificationFailed,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Format(_) | Error::Parse { .. } | Error::Io(_) | Error::HeaderMismatch(_) => 3,
        _ => 1,
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
    match run(cli.command) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::VerificationFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::ThresholdNotMet { needed, .. } = e {
                eprintln!(
                    "the secret only appears once {needed} shares are stacked; \
                     `vcs stack` still writes the overlay of fewer"
                );
            }
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(command: Command) -> recursive_vc::Result<Outcome> {
    match command {
        Command::Split {
            scheme,
            seed,
            input,
            out_dir,
            pad,
        } => split(&scheme, seed, &input, &out_dir, pad == 1),
        Command::Stack { input, out } => {
            let (_, shares) = read_share_set(&input)?;
            let refs: Vec<&ShareImage> = shares.iter().collect();
            let stacked = stack(&refs)?;
            write_pbm(&grid_image(stacked.grid()), &out)?;
            println!("stacked {} shares into {}", shares.len(), out.display());
            Ok(Outcome::Success)
        }
        Command::Decode { input, out } => {
            let (secret, _) = decode_files(&input)?;
            write_pbm(&secret, &out)?;
            println!(
                "decoded {}x{} secret from {} shares into {}",
                secret.width(),
                secret.height(),
                input.len(),
                out.display()
            );
            Ok(Outcome::Success)
        }
        Command::Embed { manifest, out_dir } => {
            chain::embed(&manifest, &out_dir).map(|_| Outcome::Success)
        }
        Command::Extract {
            level,
            input,
            out_dir,
            assume_size,
        } => {
            let assume = assume_size.as_deref().map(parse_size).transpose()?;
            chain::extract(level, &input, &out_dir, assume).map(|_| Outcome::Success)
        }
        Command::Verify {
            scheme,
            q,
            full_enum,
            format,
            corrupt,
        } => {
            let corrupt = corrupt.as_deref().map(parse_cell).transpose()?;
            report::verify(&scheme, q, full_enum, format == Format::Json, corrupt)
        }
        Command::Analyze { scheme, format } => report::analyze(&scheme, format == Format::Json),
        Command::Demo { out_dir, seed } => demo::run(&out_dir, seed),
    }
}

fn split(
    spec: &SchemeSpec,
    seed: u64,
    input: &Path,
    out_dir: &Path,
    pad: bool,
) -> recursive_vc::Result<Outcome> {
    let basis = spec.build()?;
    let layout = default_layout(basis.m(), pad)?;
    let secret = read_pbm(input)?;
    let shares = split_image(&secret, &basis, &layout, seed)?;
    fs::create_dir_all(out_dir)?;
    let id = split_id(seed, spec);
    for share in &shares {
        let header = ShareFileHeader::new(spec, &basis, share, id.clone());
        let path = write_share(out_dir, share, &header)?;
        println!("wrote {}", path.display());
    }
    println!("{}", summary_line(spec, &basis));
    Ok(Outcome::Success)
}

/// Decoded secret and the visual overlay of a set of share files.
pub(crate) fn decode_files(paths: &[PathBuf]) -> recursive_vc::Result<(BinaryImage, BinaryImage)> {
    let (header, shares) = read_share_set(paths)?;
    let basis = header.scheme_spec()?.build()?;
    let refs: Vec<&ShareImage> = shares.iter().collect();
    let stacked = stack(&refs)?;
    Ok((
        decode(&stacked, &basis, shares.len())?,
        grid_image(stacked.grid()),
    ))
}

/// `m`, `d`, `alpha`, and `r` of a scheme on one line.
pub(crate) fn summary_line(spec: &SchemeSpec, basis: &recursive_vc::SchemeBasis) -> String {
    format!(
        "scheme {spec}: n={} k={} m={} d={} alpha={} r={}",
        basis.n(),
        basis.k(),
        basis.m(),
        basis.d(),
        basis.alpha(),
        short_number(&basis.collection_size().to_string())
    )
}

/// Long decimal numbers are shortened to their leading digits and length.
pub(crate) fn short_number(digits: &str) -> String {
    if digits.len() <= 24 {
        digits.to_owned()
    } else {
        format!("{}...({} digits)", &digits[..12], digits.len())
    }
}

fn parse_size(s: &str) -> recursive_vc::Result<(usize, usize)> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| Error::InvalidArgument(format!("size {s:?} is not WxH")))?;
    let num = |v: &str| {
        v.trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidArgument(format!("size {s:?} is not WxH")))
    };
    Ok((num(w)?, num(h)?))
}

fn parse_cell(s: &str) -> recursive_vc::Result<(usize, usize)> {
    let bad = || Error::InvalidArgument(format!("cell {s:?} is not ROW:COL"));
    let (r, c) = s.split_once(':').ok_or_else(bad)?;
    Ok((
        r.trim().parse().map_err(|_| bad())?,
        c.trim().parse().map_err(|_| bad())?,
    ))
}
