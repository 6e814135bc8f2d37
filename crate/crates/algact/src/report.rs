//! Deterministic report emission: a fixed envelope, floats serialized
//! with 17 significant digits, map keys in sorted order, and a flat CSV
//! projection for table-bearing payloads.

use std::io;

use serde::Serialize;

use crate::error::Result;

/// Serialize with every f64 written as `{:.16e}` (17 significant digits)
/// so reports are bit-identical across runs and platforms.
pub fn to_json_17<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Formatter17::new());
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serializer emits utf-8"))
}

struct Formatter17 {
    pretty: serde_json::ser::PrettyFormatter<'static>,
}

impl Formatter17 {
    fn new() -> Self {
        Formatter17 { pretty: serde_json::ser::PrettyFormatter::new() }
    }
}

macro_rules! forward {
    ($($name:ident ( $($arg:ident : $ty:ty),* )),* $(,)?) => {
        $(fn $name<W>(&mut self, writer: &mut W $(, $arg: $ty)*) -> io::Result<()>
        where
            W: ?Sized + io::Write,
        {
            self.pretty.$name(writer $(, $arg)*)
        })*
    };
}

impl serde_json::ser::Formatter for Formatter17 {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.write_f64(writer, value as f64)
    }

    forward! {
        write_null(),
        write_bool(value: bool),
        write_i8(value: i8),
        write_i16(value: i16),
        write_i32(value: i32),
        write_i64(value: i64),
        write_i128(value: i128),
        write_u8(value: u8),
        write_u16(value: u16),
        write_u32(value: u32),
        write_u64(value: u64),
        write_u128(value: u128),
        begin_string(),
        end_string(),
        write_string_fragment(fragment: &str),
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        end_object_key(),
        begin_object_value(),
        end_object_value(),
    }

    fn write_char_escape<W>(
        &mut self,
        writer: &mut W,
        char_escape: serde_json::ser::CharEscape,
    ) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.pretty.write_char_escape(writer, char_escape)
    }
}

/// Process exit semantics: 0 all checks pass, 1 usage or parse error,
/// 2 some check failed, 3 inconclusive rows present.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Pass,
    Usage,
    CheckFailed,
    Inconclusive,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Pass => 0,
            ExitStatus::Usage => 1,
            ExitStatus::CheckFailed => 2,
            ExitStatus::Inconclusive => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ExitStatus::Pass => "pass",
            ExitStatus::Usage => "usage-error",
            ExitStatus::CheckFailed => "fail",
            ExitStatus::Inconclusive => "inconclusive",
        }
    }
}

/// Envelope every subcommand emits: tool version, config echo, seed, and
/// per-check provenance alongside the payload.
#[derive(Serialize)]
pub struct Report {
    pub tool: ToolInfo,
    pub subcommand: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub provenance: Vec<String>,
    pub status: String,
    pub payload: serde_json::Value,
}

#[derive(Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl Report {
    pub fn new(
        subcommand: &str,
        seed: u64,
        config: serde_json::Value,
        provenance: Vec<String>,
        status: ExitStatus,
        payload: serde_json::Value,
    ) -> Self {
        Report {
            tool: ToolInfo { name: "algact", version: env!("CARGO_PKG_VERSION") },
            subcommand: subcommand.to_string(),
            seed,
            config,
            provenance,
            status: status.label().to_string(),
            payload,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        to_json_17(self)
    }
}

/// One flat table for the CSV projection.
pub struct CsvTable {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn csv_number(x: f64) -> String {
    format!("{x:.16e}")
}

/// Concatenate tables, each prefixed by a `# table: <name>` marker line.
pub fn render_csv(tables: &[CsvTable]) -> String {
    let mut out = String::new();
    for t in tables {
        out.push_str(&format!("# table: {}\n", t.name));
        out.push_str(&t.header.join(","));
        out.push('\n');
        for row in &t.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
    }
    out
}
