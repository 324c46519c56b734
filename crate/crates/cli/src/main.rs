//! `alice`: compress, decompress and inspect bitstrings with the incremental
//! autoencoder search.
//!
//! Exit codes: 0 success, 2 malformed input, 3 invariant violation, 4 I/O.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use alice_core::bits::{all_of_len, BitString};
use alice_core::corpus;
use alice_core::descriptor::{self, DescriptorError, DEFAULT_DECODE_FUEL};
use alice_core::engine::{Scheme, SearchConfig, DEFAULT_BUDGET, DEFAULT_MAX_A_LEN};
use alice_core::mltest::{delta_bound_check_capped, test_to_feature, ConcreteTest, DEFAULT_MAX_N};
use alice_core::oracle::{bounded_complexity, first_accepting_pair, shortest_bounded_features, OracleCaps};
use alice_core::report::{compare_speed, compress, Algorithm};
use alice_core::vm::Program;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Malformed(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<DescriptorError> for CliError {
    fn from(e: DescriptorError) -> Self {
        match e {
            DescriptorError::Io(e) => CliError::Io(e),
            DescriptorError::ChainBroken { .. } => CliError::Invariant(e.to_string()),
            other => CliError::Malformed(other.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "alice", version, about = "Incremental compression by autoencoder search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress a file into an ICD1 description and print a JSON report.
    Compress {
        input: PathBuf,
        /// Defaults to the input path with `.icd` appended.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        bits: InputBits,
        #[command(flatten)]
        search: SearchArgs,
        /// Constant `c` in the predicted budget.
        #[arg(long, default_value_t = 1)]
        c: u64,
    },
    /// Decode an ICD1 file.
    Decompress {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Write the bits as `0`/`1` text instead of packed bytes.
        #[arg(long)]
        ascii: bool,
        #[arg(long, default_value_t = DEFAULT_DECODE_FUEL)]
        fuel: u64,
    },
    /// Check that a description decodes to a given file, or fuzz the
    /// compress/decode roundtrip.
    Verify {
        /// ICD1 file to check; omit with --fuzz.
        description: Option<PathBuf>,
        /// The file the description must reproduce.
        #[arg(long, requires = "description")]
        original: Option<PathBuf>,
        #[command(flatten)]
        bits: InputBits,
        /// Number of random inputs to roundtrip.
        #[arg(long, conflicts_with = "description")]
        fuzz: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        max_bits: usize,
    },
    /// Bounded ground truth for one string or a sweep over a length.
    Oracle {
        /// A string of `0`/`1`.
        #[arg(long, conflicts_with = "len")]
        x: Option<String>,
        /// Sweep every string of this length.
        #[arg(long)]
        len: Option<usize>,
        #[arg(long, default_value_t = 40)]
        max_pair_len: usize,
        #[arg(long, default_value_t = 10_000)]
        step_cap: u64,
        #[arg(long, default_value_t = 17)]
        max_f_len: usize,
        #[arg(long, default_value = "plain")]
        scheme: Scheme,
    },
    /// Exhaustive check of the randomness-deficiency bound for a feature.
    Mltest {
        #[arg(long, default_value_t = 12)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        t: u64,
        /// Feature in assembly, e.g. "RLD".
        #[arg(long, default_value = "RLD")]
        feature: String,
        #[arg(long, default_value_t = DEFAULT_MAX_N)]
        max_n: usize,
        /// Also build the feature of a concrete test at this `m`.
        #[arg(long, requires = "m")]
        test: Option<TestKind>,
        #[arg(long)]
        m: Option<usize>,
    },
    /// Engine W-steps against a single-program search on the two-layer corpus.
    Bench {
        #[arg(long, default_value_t = 3_000_000)]
        budget: u64,
        /// The baseline gets this many times the engine's steps.
        #[arg(long, default_value_t = 1000)]
        factor: u64,
    },
}

#[derive(Args)]
struct InputBits {
    /// Read the input as `0`/`1` text; whitespace is ignored.
    #[arg(long)]
    ascii: bool,
    /// Keep only the first N bits of the input.
    #[arg(long)]
    bits: Option<usize>,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, default_value = "greedy")]
    algorithm: Algorithm,
    /// plain, b:<num>/<den> or b-early:<num>/<den>.
    #[arg(long, default_value = "plain")]
    scheme: Scheme,
    /// Total W-step budget.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    #[arg(long, env = "ALICE_MAX_A_LEN", default_value_t = DEFAULT_MAX_A_LEN)]
    max_a_len: usize,
    /// Retire a node after this many W-steps.
    #[arg(long)]
    node_step_cap: Option<u64>,
}

impl SearchArgs {
    fn config(&self) -> Result<SearchConfig> {
        let config = SearchConfig::default()
            .with_budget(self.budget)
            .with_scheme(self.scheme)
            .with_max_a_len(self.max_a_len)
            .with_node_step_cap(self.node_step_cap);
        config.validate().map_err(|e| CliError::Malformed(e.to_string()))?;
        Ok(config)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TestKind {
    LeadingZeros,
    OddPositionOnes,
}

fn parse_ascii(text: &str) -> Result<BitString> {
    text.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(CliError::Malformed(format!("unexpected character {other:?} in bit text"))),
        })
        .collect()
}

fn read_bits(path: &Path, opts: &InputBits) -> Result<BitString> {
    let bytes = fs::read(path)?;
    let mut x = if opts.ascii {
        let text = String::from_utf8(bytes).map_err(|_| CliError::Malformed("bit text is not UTF-8".into()))?;
        parse_ascii(&text)?
    } else {
        BitString::from_bytes(&bytes)
    };
    if let Some(n) = opts.bits {
        if n > x.len() {
            return Err(CliError::Malformed(format!("--bits {n} exceeds the input's {} bits", x.len())));
        }
        x = x.slice(0..n);
    }
    Ok(x)
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(io::Error::from)?;
    writeln!(out)?;
    Ok(())
}

fn cmd_compress(input: &Path, output: Option<PathBuf>, bits: &InputBits, search: &SearchArgs, c: u64) -> Result<()> {
    let x = read_bits(input, bits)?;
    let config = search.config()?;
    let out = compress(&x, search.algorithm, &config, c)?;
    let path = output.unwrap_or_else(|| {
        let mut p = input.as_os_str().to_owned();
        p.push(".icd");
        PathBuf::from(p)
    });
    descriptor::write_file(&out.description, &path)?;
    let back = descriptor::read_file(&path)?;
    if back.len_bits() != out.report.wire_len {
        return Err(CliError::Invariant(format!(
            "container holds {} bits, report says {}",
            back.len_bits(),
            out.report.wire_len
        )));
    }
    print_json(&out.report)
}

#[derive(Serialize)]
struct DecompressReport {
    bits: usize,
    bytes: usize,
    /// Byte output whose last byte carries zero padding.
    padded: bool,
}

fn cmd_decompress(input: &Path, output: &Path, ascii: bool, fuel: u64) -> Result<()> {
    let d = descriptor::read_file(input)?;
    let x = d.decode(fuel)?;
    let data = if ascii { x.to_string().into_bytes() } else { x.to_bytes() };
    fs::write(output, &data)?;
    print_json(&DecompressReport { bits: x.len(), bytes: data.len(), padded: !ascii && x.len() % 8 != 0 })
}

#[derive(Serialize)]
struct FuzzReport {
    cases: usize,
    compressed: usize,
    failures: Vec<String>,
}

fn cmd_verify(
    description: Option<PathBuf>,
    original: Option<PathBuf>,
    bits: &InputBits,
    fuzz: Option<usize>,
    seed: u64,
    max_bits: usize,
) -> Result<()> {
    if let Some(cases) = fuzz {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let config = SearchConfig::default().with_budget(20_000).with_max_a_len(14);
        let mut report = FuzzReport { cases, compressed: 0, failures: Vec::new() };
        for i in 0..cases {
            let len = rng.gen_range(0..=max_bits);
            let x: BitString = (0..len).map(|_| rng.gen_bool(0.5)).collect();
            let out = compress(&x, Algorithm::Greedy, &config, 1)?;
            report.compressed += usize::from(!out.report.incompressible);
            let back = descriptor::from_container(&descriptor::to_container(&out.description))
                .and_then(|d| d.decode(DEFAULT_DECODE_FUEL));
            match back {
                Ok(y) if y == x => {}
                Ok(_) => report.failures.push(format!("case {i}: decoded a different string")),
                Err(e) => report.failures.push(format!("case {i}: {e}")),
            }
        }
        print_json(&report)?;
        return match report.failures.first() {
            None => Ok(()),
            Some(first) => Err(CliError::Invariant(first.clone())),
        };
    }
    let (Some(description), Some(original)) = (description, original) else {
        return Err(CliError::Malformed("verify needs a description and --original, or --fuzz".into()));
    };
    let x = read_bits(&original, bits)?;
    let y = descriptor::read_file(&description)?.decode(DEFAULT_DECODE_FUEL)?;
    if y != x {
        let at = x.iter().zip(y.iter()).position(|(a, b)| a != b).unwrap_or(x.len().min(y.len()));
        return Err(CliError::Invariant(format!(
            "decoded {} bits, expected {}; first difference at bit {at}",
            y.len(),
            x.len()
        )));
    }
    print_json(&serde_json::json!({ "bits": x.len(), "ok": true }))
}

#[derive(Serialize)]
struct SweepEntry {
    x: String,
    shortest_len: Option<usize>,
    count: usize,
    features: Vec<String>,
}

fn cmd_oracle(x: Option<String>, len: Option<usize>, caps: OracleCaps, scheme: Scheme) -> Result<()> {
    match (x, len) {
        (Some(x), _) => {
            let x = parse_ascii(&x)?;
            let pair = first_accepting_pair(&x, &caps, scheme);
            let shortest = shortest_bounded_features(&x, &caps, scheme);
            let k = bounded_complexity(&x, &caps);
            print_json(&serde_json::json!({
                "x": x.to_string(),
                "caps": caps,
                "scheme": scheme,
                "first_pair": pair.map(|p| serde_json::json!({ "f": p.f.asm(), "r": p.r.to_string() })),
                "shortest_len": shortest.len,
                "shortest_features": shortest.features.iter().map(Program::asm).collect::<Vec<_>>(),
                "complexity": k.value,
                "complexity_witness": k.witness.map(|w| w.f.asm()),
            }))
        }
        (None, Some(len)) => {
            if len > 16 {
                return Err(CliError::Malformed(format!("sweep length {len} above 16")));
            }
            let entries: Vec<SweepEntry> = all_of_len(len)
                .map(|x| {
                    let sf = shortest_bounded_features(&x, &caps, scheme);
                    SweepEntry {
                        x: x.to_string(),
                        shortest_len: sf.len,
                        count: sf.features.len(),
                        features: sf.features.iter().map(Program::asm).collect(),
                    }
                })
                .collect();
            let with_feature = entries.iter().filter(|e| e.shortest_len.is_some()).count();
            print_json(&serde_json::json!({
                "len": len,
                "caps": caps,
                "scheme": scheme,
                "strings": entries.len(),
                "with_feature": with_feature,
                "entries": entries,
            }))
        }
        (None, None) => Err(CliError::Malformed("oracle needs --x or --len".into())),
    }
}

fn cmd_mltest(n: usize, t: u64, feature: &str, max_n: usize, test: Option<TestKind>, m: Option<usize>) -> Result<()> {
    let f = Program::from_asm(feature).map_err(|e| CliError::Malformed(e.to_string()))?;
    let report = delta_bound_check_capped(&f, n, t, max_n).map_err(|e| CliError::Malformed(e.to_string()))?;
    let host = match (test, m) {
        (Some(kind), Some(m)) => {
            let test = match kind {
                TestKind::LeadingZeros => ConcreteTest::LeadingZeros,
                TestKind::OddPositionOnes => ConcreteTest::OddPositionOnes,
            };
            let hf = test_to_feature(&test, m, n).map_err(|e| CliError::Invariant(e.to_string()))?;
            let roundtrip = hf.members.iter().all(|x| hf.encode_index(x).and_then(|r| hf.decode(&r).ok()).as_ref() == Some(x));
            if !roundtrip {
                return Err(CliError::Invariant("index roundtrip failed".into()));
            }
            Some(serde_json::json!({
                "test": test,
                "m": m,
                "size": hf.members.len(),
                "index_bits": hf.index_width(),
                "nominal_len": hf.nominal_len(),
                "roundtrip": roundtrip,
            }))
        }
        _ => None,
    };
    print_json(&serde_json::json!({ "feature": f.asm(), "report": report, "host_feature": host }))?;
    if report.violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invariant(format!("cardinality bound violated at m = {:?}", report.violations)))
    }
}

fn cmd_bench(budget: u64, factor: u64) -> Result<()> {
    let config = SearchConfig::default().with_budget(budget);
    let mut rows = Vec::new();
    for x in [corpus::two_layer(40, 4), corpus::two_layer(30, 3), corpus::two_layer(50, 5)] {
        rows.push(compare_speed(&x, &config, factor)?);
    }
    for r in &rows {
        eprintln!(
            "l(x)={} description={} engine={} single-program={}{}",
            r.input_bits,
            r.description_bits,
            r.engine_steps,
            if r.baseline_found { "" } else { ">" },
            r.baseline_steps
        );
    }
    print_json(&rows)?;
    match rows.iter().find(|r| !r.incremental_wins()) {
        None => Ok(()),
        Some(r) => Err(CliError::Invariant(format!("engine not faster on the {}-bit item", r.input_bits))),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Compress { input, output, bits, search, c } => cmd_compress(&input, output, &bits, &search, c),
        Command::Decompress { input, output, ascii, fuel } => cmd_decompress(&input, &output, ascii, fuel),
        Command::Verify { description, original, bits, fuzz, seed, max_bits } => {
            cmd_verify(description, original, &bits, fuzz, seed, max_bits)
        }
        Command::Oracle { x, len, max_pair_len, step_cap, max_f_len, scheme } => {
            cmd_oracle(x, len, OracleCaps { max_pair_len, step_cap, max_f_len }, scheme)
        }
        Command::Mltest { n, t, feature, max_n, test, m } => cmd_mltest(n, t, &feature, max_n, test, m),
        Command::Bench { budget, factor } => cmd_bench(budget, factor),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("alice: {e}");
            ExitCode::from(e.code())
        }
    }
}
