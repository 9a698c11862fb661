use std::fs;
use std::io::{self, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use binjson::inspect::{inspect, render_hexdump, render_size_table, size_rows};
use binjson::{avro_check_compat, parse_json, AvroSchema, CompatLevel, FormatId, FormatOptions, JsonValue, SmileOptions};
use clap::{Args, Parser, Subcommand};

const EXIT_CODEC: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "binjson", version, about = "Convert, inspect and compare JSON-compatible binary encodings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a document between JSON and a binary format
    Convert(ConvertArgs),
    /// Annotated hexdump of an encoded document
    Inspect(InspectArgs),
    /// Encoded size of a JSON document in every format
    Compare(CompareArgs),
    /// Classify the compatibility of two Avro schemas
    CheckCompat(CompatArgs),
}

#[derive(Args)]
struct ConvertArgs {
    input: PathBuf,
    /// Input format (json or a binary format); inferred from the extension
    #[arg(long)]
    from: Option<String>,
    /// Output format; inferred from --out when omitted
    #[arg(long)]
    to: Option<String>,
    /// Output file; standard output when omitted
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[command(flatten)]
    schemas: SchemaArgs,
    #[command(flatten)]
    smile: SmileArgs,
    /// Indent JSON output
    #[arg(long)]
    pretty: bool,
}

#[derive(Args)]
struct InspectArgs {
    input: PathBuf,
    /// Format of the input; inferred from the extension
    #[arg(long)]
    format: Option<String>,
    #[command(flatten)]
    schemas: SchemaArgs,
}

#[derive(Args)]
struct CompareArgs {
    /// JSON document
    input: PathBuf,
    /// Avro schema; adds the Avro row
    #[arg(long)]
    schema: Option<PathBuf>,
    #[command(flatten)]
    smile: SmileArgs,
}

#[derive(Args)]
struct CompatArgs {
    old: PathBuf,
    new: PathBuf,
    /// Further schemas the new one must also be checked against
    #[arg(long, num_args = 1..)]
    transitive: Vec<PathBuf>,
}

#[derive(Args)]
struct SchemaArgs {
    /// Avro writer schema (.avsc)
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Avro reader schema, for resolving on decode
    #[arg(long)]
    reader_schema: Option<PathBuf>,
}

#[derive(Args)]
struct SmileArgs {
    /// Do not declare or use shared property names
    #[arg(long)]
    smile_no_shared_names: bool,
    /// Do not declare or use shared string values
    #[arg(long)]
    smile_no_shared_values: bool,
    /// Emit back-references to repeated names and values
    #[arg(long)]
    smile_back_references: bool,
    /// Set the raw-binary header flag
    #[arg(long)]
    smile_raw_binary: bool,
    /// Append the 0xff end marker
    #[arg(long)]
    smile_end_marker: bool,
}

impl SmileArgs {
    fn options(&self) -> SmileOptions {
        SmileOptions {
            shared_names: !self.smile_no_shared_names,
            shared_values: !self.smile_no_shared_values,
            raw_binary: self.smile_raw_binary,
            back_references: self.smile_back_references,
            end_marker: self.smile_end_marker,
        }
    }
}

/// A failure with the exit status it maps to.
struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

fn codec(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_CODEC, message: message.into() }
}

type Outcome<T = ExitCode> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Convert(a) => convert(a),
        Command::Inspect(a) => inspect_cmd(a),
        Command::Compare(a) => compare(a),
        Command::CheckCompat(a) => check_compat(a),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("binjson: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Json,
    Binary(FormatId),
}

fn parse_kind(name: &str) -> Outcome<Kind> {
    if name.eq_ignore_ascii_case("json") {
        return Ok(Kind::Json);
    }
    name.parse().map(Kind::Binary).map_err(|e: binjson::UnknownFormat| usage(e.to_string()))
}

fn kind_from_path(path: &Path) -> Option<Kind> {
    let ext = path.extension()?.to_str()?;
    if ext.eq_ignore_ascii_case("json") {
        Some(Kind::Json)
    } else {
        FormatId::from_extension(ext).map(Kind::Binary)
    }
}

fn resolve_kind(flag: Option<&str>, path: Option<&Path>, what: &str) -> Outcome<Kind> {
    match (flag, path.and_then(kind_from_path)) {
        (Some(name), _) => parse_kind(name),
        (None, Some(k)) => Ok(k),
        (None, None) => Err(usage(format!("cannot infer the {what} format; pass --{what}"))),
    }
}

fn read(path: &Path) -> Outcome<Vec<u8>> {
    fs::read(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn read_json(path: &Path) -> Outcome<JsonValue> {
    let bytes = read(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| codec(format!("{}: {e}", path.display())))?;
    parse_json(text).map_err(|e| codec(format!("{}: {e}", path.display())))
}

fn read_schema(path: &Path) -> Outcome<AvroSchema> {
    let bytes = read(path)?;
    let text = String::from_utf8_lossy(&bytes);
    AvroSchema::parse_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn format_options(schemas: &SchemaArgs, smile: SmileOptions) -> Outcome<FormatOptions> {
    Ok(FormatOptions {
        smile,
        avro_schema: schemas.schema.as_deref().map(read_schema).transpose()?,
        avro_reader: schemas.reader_schema.as_deref().map(read_schema).transpose()?,
    })
}

fn convert(a: ConvertArgs) -> Outcome {
    let from = resolve_kind(a.from.as_deref(), Some(&a.input), "from")?;
    let to = resolve_kind(a.to.as_deref(), a.out.as_deref(), "to")?;
    let opts = format_options(&a.schemas, a.smile.options())?;
    for kind in [from, to] {
        if let Kind::Binary(f) = kind {
            if f.requires_schema() && opts.avro_schema.is_none() {
                return Err(usage(format!("{f} needs --schema")));
            }
        }
    }
    let doc = match from {
        Kind::Json => read_json(&a.input)?,
        Kind::Binary(f) => {
            let bytes = read(&a.input)?;
            binjson::decode(f, &bytes, &opts).map_err(|e| codec(format!("{}: {e}", a.input.display())))?
        }
    };
    let out = match to {
        Kind::Json => {
            let mut text = if a.pretty { doc.to_json_string_pretty() } else { doc.to_json_string() };
            text.push('\n');
            text.into_bytes()
        }
        Kind::Binary(f) => binjson::encode(f, &doc, &opts).map_err(|e| codec(format!("{f}: {e}")))?,
    };
    match &a.out {
        Some(path) => fs::write(path, &out).map_err(|e| usage(format!("{}: {e}", path.display())))?,
        None => io::stdout().write_all(&out).map_err(|e| codec(e.to_string()))?,
    }
    Ok(ExitCode::SUCCESS)
}

fn inspect_cmd(a: InspectArgs) -> Outcome {
    let format = match resolve_kind(a.format.as_deref(), Some(&a.input), "format")? {
        Kind::Binary(f) => f,
        Kind::Json => return Err(usage("inspect works on binary formats")),
    };
    let opts = format_options(&a.schemas, SmileOptions::default())?;
    if format.requires_schema() && opts.avro_schema.is_none() {
        return Err(usage(format!("{format} needs --schema")));
    }
    let bytes = read(&a.input)?;
    let result = inspect(format, &bytes, &opts);
    let color = std::env::var_os("NO_COLOR").is_none() && io::stdout().is_terminal();
    print!("{}", render_hexdump(&bytes, &result, color));
    Ok(if result.error.is_some() { ExitCode::from(EXIT_CODEC) } else { ExitCode::SUCCESS })
}

fn compare(a: CompareArgs) -> Outcome {
    let doc = read_json(&a.input)?;
    let opts = FormatOptions {
        smile: a.smile.options(),
        avro_schema: a.schema.as_deref().map(read_schema).transpose()?,
        avro_reader: None,
    };
    print!("{}", render_size_table(&size_rows(&doc, &opts)));
    Ok(ExitCode::SUCCESS)
}

fn exit_for(level: CompatLevel) -> ExitCode {
    ExitCode::from(match level {
        CompatLevel::Full => 0,
        CompatLevel::Backward => 3,
        CompatLevel::Forward => 4,
        CompatLevel::Incompatible => 5,
    })
}

fn check_compat(a: CompatArgs) -> Outcome {
    let new = read_schema(&a.new)?;
    let mut against = vec![a.old];
    against.extend(a.transitive);
    let several = against.len() > 1;
    let (mut backward, mut forward) = (true, true);
    for path in &against {
        let old = read_schema(path)?;
        let v = avro_check_compat(&old, &new);
        backward &= v.level.is_backward();
        forward &= v.level.is_forward();
        if several {
            println!("{}: {}", path.display(), v.level);
        } else {
            println!("{}", v.level);
        }
        for r in &v.reasons {
            println!("  {r}");
        }
        for n in &v.notes {
            println!("  note: {n}");
        }
    }
    let level = CompatLevel::from_directions(backward, forward);
    if several {
        println!("overall: {level}");
    }
    Ok(exit_for(level))
}
