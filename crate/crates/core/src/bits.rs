//! Bit-string helpers. Bits are stored one per byte (`0` or `1`), most
//! significant bit first.

/// Packs an MSB-first bit slice into an integer label.
pub fn to_index(bits: &[u8]) -> usize {
    bits.iter()
        .fold(0, |acc, &b| (acc << 1) | usize::from(b & 1))
}

/// Unpacks `value` into `width` MSB-first bits.
pub fn from_index(value: usize, width: usize) -> Vec<u8> {
    (0..width).rev().map(|i| ((value >> i) & 1) as u8).collect()
}

/// Parses a string of `0`/`1` characters. Other characters are ignored.
pub fn parse(s: &str) -> Vec<u8> {
    s.bytes()
        .filter_map(|c| match c {
            b'0' => Some(0),
            b'1' => Some(1),
            _ => None,
        })
        .collect()
}

pub fn format(bits: &[u8]) -> String {
    bits.iter()
        .map(|&b| if b == 0 { '0' } else { '1' })
        .collect()
}

/// Number of positions in which two labels of equal width differ.
pub fn hamming(a: usize, b: usize) -> u32 {
    (a ^ b).count_ones()
}
