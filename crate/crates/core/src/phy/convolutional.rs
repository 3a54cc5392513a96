//! Rate-1/2 convolutional code, constraint length 7, generators 133/171 octal.
//!
//! The encoder starts in the all-zero state and is not terminated; the
//! decoder traces back from the best surviving end state.

const CONSTRAINT_LENGTH: u32 = 7;
const NUM_STATES: usize = 1 << (CONSTRAINT_LENGTH - 1);
const G0: u32 = 0o133;
const G1: u32 = 0o171;

/// Coded output pair for each 7-bit register value (input bit in bit 6).
const fn output_table() -> [u8; 1 << CONSTRAINT_LENGTH] {
    let mut table = [0u8; 1 << CONSTRAINT_LENGTH];
    let mut reg = 0;
    while reg < table.len() {
        let a = ((reg as u32) & G0).count_ones() & 1;
        let b = ((reg as u32) & G1).count_ones() & 1;
        table[reg] = ((a << 1) | b) as u8;
        reg += 1;
    }
    table
}

static OUTPUTS: [u8; 1 << CONSTRAINT_LENGTH] = output_table();

pub fn encode(bits: &[u8]) -> Vec<u8> {
    let mut state = 0usize;
    let mut out = Vec::with_capacity(bits.len() * 2);
    for &bit in bits {
        let reg = ((bit as usize & 1) << 6) | state;
        let pair = OUTPUTS[reg];
        out.push(pair >> 1);
        out.push(pair & 1);
        state = reg >> 1;
    }
    out
}

const HALF: usize = NUM_STATES / 2;

/// Branch metrics for the transitions out of even (`[0]`) and odd (`[1]`)
/// predecessors `2j` and `2j + 1` on input 0, for each received pair.
/// Input 1 gives the complement, `2 - metric`.
const fn branch_tables() -> [[[i16; HALF]; 2]; 4] {
    let mut t = [[[0i16; HALF]; 2]; 4];
    let mut rx = 0;
    while rx < 4 {
        let mut j = 0;
        while j < HALF {
            let mut parity = 0;
            while parity < 2 {
                let diff = OUTPUTS[2 * j + parity] ^ rx as u8;
                t[rx][parity][j] = ((diff & 1) + (diff >> 1)) as i16;
                parity += 1;
            }
            j += 1;
        }
        rx += 1;
    }
    t
}

static BRANCH: [[[i16; HALF]; 2]; 4] = branch_tables();

/// Maximum-likelihood hard-decision decoding. `coded.len()` must be even.
pub fn decode(coded: &[u8]) -> Vec<u8> {
    debug_assert!(coded.len() % 2 == 0);
    let steps = coded.len() / 2;
    // Start state is known to be zero. Metrics are kept split by the parity
    // of the state index, which is how the next step reads them.
    let mut even = [i16::MAX / 2; HALF];
    let mut odd = [i16::MAX / 2; HALF];
    even[0] = 0;
    let mut decisions: Vec<[u8; NUM_STATES]> = Vec::with_capacity(steps);

    for (t, pair) in coded.chunks_exact(2).enumerate() {
        let rx = (((pair[0] & 1) << 1) | (pair[1] & 1)) as usize;
        let [b0, b1] = &BRANCH[rx];
        let mut next = [0i16; NUM_STATES];
        let mut dec = [0u8; NUM_STATES];
        for j in 0..HALF {
            // Metrics stay far below i16::MAX, see the renormalisation below.
            let (lo0, lo1) = (even[j].wrapping_add(b0[j]), odd[j].wrapping_add(b1[j]));
            let (hi0, hi1) = (
                even[j].wrapping_add(2 - b0[j]),
                odd[j].wrapping_add(2 - b1[j]),
            );
            next[j] = lo0.min(lo1);
            next[j + HALF] = hi0.min(hi1);
            dec[j] = u8::from(lo1 < lo0);
            dec[j + HALF] = u8::from(hi1 < hi0);
        }
        decisions.push(dec);
        // Keep metrics small; only their differences matter.
        let floor = if t % 64 == 63 {
            *next.iter().min().unwrap_or(&0)
        } else {
            0
        };
        for j in 0..HALF {
            even[j] = next[2 * j].wrapping_sub(floor);
            odd[j] = next[2 * j + 1].wrapping_sub(floor);
        }
    }

    let mut state = (0..NUM_STATES)
        .min_by_key(|&s| (if s % 2 == 0 { even[s / 2] } else { odd[s / 2] }, s))
        .unwrap_or(0);
    let mut bits = vec![0u8; steps];
    for (t, dec) in decisions.iter().enumerate().rev() {
        bits[t] = (state >> 5) as u8;
        state = ((state & 31) << 1) | dec[state] as usize;
    }
    bits
}
