use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

/// Stable exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const NO_SOLUTION: i32 = 3;
    pub const DEGENERATE: i32 = 4;
    pub const NOT_NORMALIZED: i32 = 5;
    pub const DERIVATIVE_MISMATCH: i32 = 6;
    pub const ORACLE_REJECT: i32 = 7;
}

/// Envelope of every command's JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub command: String,
    pub instance: String,
    pub config: serde_json::Value,
    pub results: serde_json::Value,
    pub warnings: Vec<String>,
    pub wall_time_seconds: f64,
    pub exit_code: i32,
}

/// Pretty JSON with every float written as `d.dddddddddddddddde±x`
/// (17 significant digits).
struct FloatFormatter<'a>(PrettyFormatter<'a>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for FloatFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }
}

pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FloatFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        let s = to_json(&vec![2.0 / 3.0, 0.0, -1e-300]).unwrap();
        assert!(s.contains("6.6666666666666663e-1"), "{s}");
        assert!(s.contains("0.0000000000000000e0"), "{s}");
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![2.0 / 3.0, 0.0, -1e-300]);
    }

    #[test]
    fn nan_becomes_null() {
        assert!(to_json(&f64::NAN).unwrap().contains("null"));
    }
}
