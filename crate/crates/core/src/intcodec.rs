//! LEB128 variable-length integers and ZigZag signed-to-unsigned mapping.

use thiserror::Error;

/// At most ten 7-bit groups are needed for a 64-bit value.
pub const MAX_VARINT_LEN: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum IntCodecError {
    #[error("varint truncated after {0} bytes")]
    Truncated(usize),
    #[error("varint exceeds 64 bits")]
    Overflow,
    #[error("{value} does not fit in {width} bits")]
    Range { value: i128, width: u32 },
}

/// Integer width for the signed encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Width {
    W32,
    W64,
}

impl Width {
    pub fn bits(self) -> u32 {
        match self {
            Width::W32 => 32,
            Width::W64 => 64,
        }
    }

    fn check_signed(self, n: i64) -> Result<(), IntCodecError> {
        match self {
            Width::W32 if i32::try_from(n).is_err() => Err(IntCodecError::Range {
                value: n as i128,
                width: 32,
            }),
            _ => Ok(()),
        }
    }

    fn check_unsigned(self, u: u64) -> Result<(), IntCodecError> {
        match self {
            Width::W32 if u32::try_from(u).is_err() => Err(IntCodecError::Range {
                value: u as i128,
                width: 32,
            }),
            _ => Ok(()),
        }
    }
}

/// Appends the unsigned LEB128 encoding of `n` to `out`, returning the
/// number of bytes written.
pub fn write_leb128(out: &mut Vec<u8>, mut n: u64) -> usize {
    let start = out.len();
    loop {
        let group = (n & 0x7f) as u8;
        n >>= 7;
        if n == 0 {
            out.push(group);
            return out.len() - start;
        }
        out.push(group | 0x80);
    }
}

pub fn leb128_encode_unsigned(n: u64) -> Vec<u8> {
    let mut out = Vec::with_capacity(MAX_VARINT_LEN);
    write_leb128(&mut out, n);
    out
}

/// Decodes one unsigned LEB128 value from the front of `bytes`.
///
/// Redundant trailing zero groups are accepted as long as the value fits in
/// 64 bits and no more than ten groups are used.
pub fn leb128_decode_unsigned(bytes: &[u8]) -> Result<(u64, usize), IntCodecError> {
    let mut value: u64 = 0;
    for (i, &byte) in bytes.iter().enumerate() {
        if i == MAX_VARINT_LEN {
            return Err(IntCodecError::Overflow);
        }
        let group = u64::from(byte & 0x7f);
        let shift = 7 * i as u32;
        if i == MAX_VARINT_LEN - 1 && group > 1 {
            // the tenth group only has room for bit 63
            return Err(IntCodecError::Overflow);
        }
        value |= group << shift;
        if byte & 0x80 == 0 {
            return Ok((value, i + 1));
        }
    }
    if bytes.len() >= MAX_VARINT_LEN {
        Err(IntCodecError::Overflow)
    } else {
        Err(IntCodecError::Truncated(bytes.len()))
    }
}

/// Two's-complement bit pattern of `n` at `width`, then unsigned LEB128.
pub fn leb128_encode_signed_twos(n: i64, width: Width) -> Result<Vec<u8>, IntCodecError> {
    width.check_signed(n)?;
    let pattern = match width {
        Width::W32 => u64::from(n as i32 as u32),
        Width::W64 => n as u64,
    };
    Ok(leb128_encode_unsigned(pattern))
}

/// Inverse of [`leb128_encode_signed_twos`].
pub fn leb128_decode_signed_twos(bytes: &[u8], width: Width) -> Result<(i64, usize), IntCodecError> {
    let (pattern, used) = leb128_decode_unsigned(bytes)?;
    width.check_unsigned(pattern)?;
    let n = match width {
        Width::W32 => i64::from(pattern as u32 as i32),
        Width::W64 => pattern as i64,
    };
    Ok((n, used))
}

/// `(n << 1) ^ (n >> (width - 1))` with an arithmetic right shift.
pub fn zigzag_encode(n: i64, width: Width) -> Result<u64, IntCodecError> {
    width.check_signed(n)?;
    Ok(zigzag64(n))
}

pub fn zigzag_decode(u: u64, width: Width) -> Result<i64, IntCodecError> {
    width.check_unsigned(u)?;
    Ok(unzigzag64(u))
}

/// ZigZag over the full 64-bit range; the 32-bit mapping agrees with it on
/// every 32-bit input, so range checks are the only width-specific part.
#[inline]
pub fn zigzag64(n: i64) -> u64 {
    ((n << 1) ^ (n >> 63)) as u64
}

#[inline]
pub fn unzigzag64(u: u64) -> i64 {
    ((u >> 1) as i64) ^ -((u & 1) as i64)
}

/// Number of bytes the unsigned LEB128 form of `n` occupies.
pub fn leb128_len(n: u64) -> usize {
    let bits = 64 - n.leading_zeros() as usize;
    bits.max(1).div_ceil(7)
}
