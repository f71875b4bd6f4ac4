//! Smoothing-kernel keywords such as `Wp52220`.
//!
//! Layout: `W`, a family letter, the kernel order digit, the dimension digit
//! used for normalization, then three reserved digits. Only keywords listed
//! in [`REGISTERED_KEYWORDS`] decode.

use std::fmt;

use thiserror::Error;

pub const REGISTERED_KEYWORDS: [&str; 3] = ["Wp51220", "Wp52220", "Wp53220"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    Wendland,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelKeyword {
    pub raw: String,
    pub family: KernelFamily,
    pub order: u32,
    pub dimension: usize,
}

impl fmt::Display for KernelKeyword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown kernel keyword `{raw}` (registered: {})", REGISTERED_KEYWORDS.join(", "))]
pub struct UnknownKernel {
    pub raw: String,
}

pub fn decode_kernel_keyword(raw: &str) -> Result<KernelKeyword, UnknownKernel> {
    let unknown = || UnknownKernel {
        raw: raw.to_string(),
    };
    if !REGISTERED_KEYWORDS.contains(&raw) {
        return Err(unknown());
    }
    let bytes = raw.as_bytes();
    let family = match bytes[1] {
        b'p' => KernelFamily::Wendland,
        _ => return Err(unknown()),
    };
    let digit = |k: usize| (bytes[k] as char).to_digit(10).ok_or_else(unknown);
    let order = digit(2)?;
    let dimension = digit(3)? as usize;
    if !(1..=3).contains(&dimension) {
        return Err(unknown());
    }
    Ok(KernelKeyword {
        raw: raw.to_string(),
        family,
        order,
        dimension,
    })
}
