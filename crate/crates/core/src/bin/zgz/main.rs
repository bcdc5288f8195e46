//! `zgz`: encode files into zigzag-coded shards, damage and repair them, and
//! report access statistics and bounds.

mod cmd;
mod store;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use zigzag::codec::{Codec, CodecDescriptor, CodecOptions, DEFAULT_MAX_TRIES};

pub const EXIT_CLEAN: u8 = 0;
pub const EXIT_IO: u8 = 1;
pub const EXIT_CORRECTED: u8 = 2;
pub const EXIT_UNCORRECTABLE: u8 = 3;
pub const EXIT_PARAMS: u8 = 4;

#[derive(Parser)]
#[command(name = "zgz", version, about = "Zigzag MDS array code shards")]
struct Cli {
    /// Print machine-readable JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct CodecArgs {
    /// 1: zigzag code, 2: any-node code.
    #[arg(long, default_value_t = 1)]
    construction: u8,
    #[arg(long, default_value_t = 2)]
    r: u32,
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Field order; defaults to the smallest field the codec is known to work over.
    #[arg(long)]
    field: Option<u32>,
    /// Generator vectors, e.g. "0,0;1,0;0,1;1,1" (construction 1).
    #[arg(long)]
    vectors: Option<String>,
    /// Seed for coefficient search.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_TRIES)]
    max_tries: u32,
    /// Construction 2 alpha (defaults to the primitive element).
    #[arg(long)]
    alpha: Option<u8>,
    /// Codec descriptor JSON; overrides the other codec flags.
    #[arg(long)]
    codec: Option<PathBuf>,
}

impl CodecArgs {
    pub fn build(&self) -> anyhow::Result<Codec> {
        if let Some(path) = &self.codec {
            let text = std::fs::read_to_string(path)?;
            let d: CodecDescriptor = serde_json::from_str(&text)
                .map_err(|e| zigzag::Error::Format(format!("{}: {e}", path.display())))?;
            return Ok(Codec::from_descriptor(&d)?);
        }
        let vectors = self.vectors.as_deref().map(parse_vectors).transpose()?;
        let opts = CodecOptions {
            construction: self.construction,
            r: self.r,
            m: self.m,
            q: self.field,
            vectors,
            seed: self.seed,
            max_tries: self.max_tries,
            alpha: self.alpha,
        };
        Ok(Codec::build(&opts)?)
    }
}

fn parse_vectors(s: &str) -> anyhow::Result<Vec<Vec<u32>>> {
    s.split(';')
        .map(|v| {
            v.split(',')
                .map(|d| {
                    d.trim().parse::<u32>().map_err(|_| {
                        zigzag::Error::InvalidParameters(format!("bad digit {d:?} in {v:?}")).into()
                    })
                })
                .collect()
        })
        .collect()
}

#[derive(Subcommand)]
enum Command {
    /// Split a file into k systematic and r parity shards.
    Encode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        codec: CodecArgs,
    },
    /// Reassemble the original file from any n - r shards.
    Decode {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Restore missing shards, reading as little as the code allows.
    Rebuild {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Damage shards: flip cells, garble columns, or delete shards.
    Corrupt {
        #[arg(long)]
        dir: PathBuf,
        /// NODE:ROW[:STRIPE][=DELTA]; DELTA is added in the field (default 1).
        #[arg(long = "cell")]
        cells: Vec<String>,
        /// Add a random nonzero error vector to every stripe of NODE.
        #[arg(long = "column")]
        columns: Vec<usize>,
        /// Remove the shard file of NODE.
        #[arg(long = "delete")]
        deletes: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Check syndromes, correct what the decoders allow, and write repairs.
    Scrub {
        #[arg(long)]
        dir: PathBuf,
        /// Report only; leave shards untouched.
        #[arg(long)]
        dry_run: bool,
    },
    /// Exhaustive MDS check of a codec.
    Verify {
        #[command(flatten)]
        codec: CodecArgs,
    },
    /// Ratio and bandwidth bounds.
    Bounds {
        #[arg(long)]
        e: u64,
        #[arg(long)]
        r: u64,
        /// File size M for the bandwidth bound.
        #[arg(long)]
        file_size: Option<u64>,
        #[arg(long)]
        k: Option<u64>,
        /// Number of helpers d_e; defaults to n - e = k + r - e.
        #[arg(long)]
        d_e: Option<u64>,
        /// Helper-set size |I| for the partial upper bound.
        #[arg(long)]
        helpers: Option<u64>,
    },
    /// Measured rebuilding ratio over every erasure pattern of size e.
    RatioSweep {
        #[arg(long)]
        e: usize,
        /// Include parity nodes in the patterns (default for construction 2).
        #[arg(long)]
        all_nodes: bool,
        /// Seed for the random test stripe.
        #[arg(long, default_value_t = 7)]
        data_seed: u64,
        #[command(flatten)]
        codec: CodecArgs,
    },
}

fn exit_for(err: &anyhow::Error) -> u8 {
    use zigzag::Error as E;
    if err.downcast_ref::<std::io::Error>().is_some() {
        return EXIT_IO;
    }
    match err.downcast_ref::<E>() {
        Some(E::Format(_)) => EXIT_IO,
        Some(_) => EXIT_PARAMS,
        None => EXIT_IO,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    let out = match cli.command {
        Command::Encode { input, out, codec } => cmd::encode(&input, &out, &codec, json),
        Command::Decode { dir, output } => cmd::decode(&dir, &output, json),
        Command::Rebuild { dir } => cmd::rebuild(&dir, json),
        Command::Corrupt {
            dir,
            cells,
            columns,
            deletes,
            seed,
        } => cmd::corrupt(&dir, &cells, &columns, &deletes, seed, json),
        Command::Scrub { dir, dry_run } => cmd::scrub(&dir, dry_run, json),
        Command::Verify { codec } => cmd::verify(&codec, json),
        Command::Bounds {
            e,
            r,
            file_size,
            k,
            d_e,
            helpers,
        } => cmd::bounds(e, r, file_size, k, d_e, helpers, json),
        Command::RatioSweep {
            e,
            all_nodes,
            data_seed,
            codec,
        } => cmd::ratio_sweep(&codec, e, all_nodes, data_seed, json),
    };
    match out {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_for(&err))
        }
    }
}
