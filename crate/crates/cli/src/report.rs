use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use qstrat_core::Error;
use serde::Serialize;
use serde_json::ser::Formatter;

/// Exit status for a core error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Input(_) | Error::Domain(_) | Error::EmptyMeasure(_) | Error::OracleScale(_) | Error::Format(_) => 2,
        Error::Io(_) => 2,
        Error::Resolution(_) => 3,
        Error::Capability(_) => 4,
        Error::Internal(_) => 5,
    }
}

/// Compact JSON with every float written in scientific notation with 17
/// significant digits. Non-finite values become `null`.
struct SciFormatter;

impl Formatter for SciFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn to_bytes(value: &impl Serialize) -> Result<Vec<u8>, Error> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(buf)
}

pub fn emit(value: &impl Serialize, out: Option<&Path>) -> Result<(), Error> {
    let bytes = to_bytes(value)?;
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            w.write_all(&bytes)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(&bytes)?;
            lock.flush()?;
        }
    }
    Ok(())
}
