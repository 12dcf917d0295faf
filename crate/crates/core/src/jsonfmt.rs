//! JSON serialization with a fixed float format: every finite number is
//! written with 17 significant digits in scientific notation, so identical
//! inputs produce byte-identical output across platforms.

use std::io;

use serde::Serialize;

struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
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
}

pub fn to_string<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_significant_digits() {
        let s = to_string(&vec![0.1f64, -0.25, 3.0]).unwrap();
        assert_eq!(
            s,
            "[1.0000000000000001e-1,-2.5000000000000000e-1,3.0000000000000000e0]"
        );
        // round-trips exactly
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![0.1, -0.25, 3.0]);
    }

    #[test]
    fn output_is_deterministic() {
        #[derive(Serialize)]
        struct Rec {
            a: f64,
            b: Vec<f64>,
        }
        let r = Rec { a: 1.0 / 3.0, b: vec![2.0f64.sqrt(), 1e-300] };
        assert_eq!(to_string(&r).unwrap(), to_string(&r).unwrap());
    }
}
