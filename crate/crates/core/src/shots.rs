//! Measurement-outcome streams and their packed on-disk form.
//!
//! Packed layout: one line of JSON header terminated by `\n`, followed by
//! `ceil(N / 8)` bytes of outcomes, least significant bit first.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Qubit re-initialized before every shot; net identity sequences.
    Conventional,
    /// No initialization; net bit-flip sequences.
    Restless,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Conventional => "conventional",
            Mode::Restless => "restless",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conventional" => Ok(Mode::Conventional),
            "restless" => Ok(Mode::Restless),
            other => Err(Error::invalid("mode", format!("expected conventional|restless, got {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShotStream {
    pub bits: Vec<bool>,
    pub mode: Mode,
    pub n_cliffords: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackedHeader {
    pub mode: Mode,
    #[serde(rename = "N")]
    pub n_shots: usize,
    #[serde(rename = "N_Cl")]
    pub n_cliffords: usize,
    pub seed: u64,
    pub config_hash: String,
}

impl ShotStream {
    pub fn n_shots(&self) -> usize {
        self.bits.len()
    }

    pub fn pack_bits(&self) -> Vec<u8> {
        let mut bytes = vec![0u8; self.bits.len().div_ceil(8)];
        for (i, &b) in self.bits.iter().enumerate() {
            if b {
                bytes[i / 8] |= 1 << (i % 8);
            }
        }
        bytes
    }

    pub fn write_packed<W: Write>(&self, mut out: W, config_hash: &str) -> Result<()> {
        let header = PackedHeader {
            mode: self.mode,
            n_shots: self.n_shots(),
            n_cliffords: self.n_cliffords,
            seed: self.seed,
            config_hash: config_hash.to_owned(),
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        out.write_all(&self.pack_bits())?;
        Ok(())
    }

    pub fn read_packed<R: BufRead>(mut input: R) -> Result<(ShotStream, PackedHeader)> {
        let mut line = String::new();
        input.read_line(&mut line)?;
        if !line.ends_with('\n') {
            return Err(Error::Format("packed stream header must end with a newline".into()));
        }
        let header: PackedHeader = serde_json::from_str(line.trim_end())?;
        let mut bytes = vec![0u8; header.n_shots.div_ceil(8)];
        input.read_exact(&mut bytes).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                Error::Format(format!("expected {} payload bytes", bytes.len()))
            } else {
                Error::Io(e)
            }
        })?;
        let mut rest = Vec::new();
        input.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::Format(format!("{} trailing bytes after payload", rest.len())));
        }
        let bits = (0..header.n_shots).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect();
        let stream = ShotStream {
            bits,
            mode: header.mode,
            n_cliffords: header.n_cliffords,
            seed: header.seed,
        };
        Ok((stream, header))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn packed_roundtrip(bits in proptest::collection::vec(any::<bool>(), 0..300), seed: u64, n_cl in 1usize..1000) {
            let s = ShotStream { bits, mode: Mode::Restless, n_cliffords: n_cl, seed };
            let mut buf = Vec::new();
            s.write_packed(&mut buf, "abc123").unwrap();
            let (back, header) = ShotStream::read_packed(buf.as_slice()).unwrap();
            prop_assert_eq!(back, s);
            prop_assert_eq!(header.config_hash, "abc123");
        }
    }

    #[test]
    fn header_keys() {
        let s = ShotStream {
            bits: vec![true, false, true],
            mode: Mode::Conventional,
            n_cliffords: 80,
            seed: 4,
        };
        let mut buf = Vec::new();
        s.write_packed(&mut buf, "h").unwrap();
        let text = String::from_utf8_lossy(&buf);
        let first = text.lines().next().unwrap();
        let v: serde_json::Value = serde_json::from_str(first).unwrap();
        assert_eq!(v["N"], 3);
        assert_eq!(v["N_Cl"], 80);
        assert_eq!(v["mode"], "conventional");
        assert_eq!(*buf.last().unwrap(), 0b101);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let mut buf = br#"{"mode":"restless","N":20,"N_Cl":1,"seed":0,"config_hash":""}"#.to_vec();
        buf.extend_from_slice(b"\n\x01");
        assert!(matches!(ShotStream::read_packed(buf.as_slice()), Err(Error::Format(_))));
    }
}
