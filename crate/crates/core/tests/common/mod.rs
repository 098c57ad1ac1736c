//! Helpers shared by the integration test binaries.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use num_bigint::{BigInt, BigUint};
use softsynth::dataset::TaskKind;

/// Scratch directory removed on drop.
pub struct TempDir {
    path: PathBuf,
}

impl TempDir {
    pub fn new(label: &str) -> TempDir {
        static NEXT: AtomicUsize = AtomicUsize::new(0);
        let n = NEXT.fetch_add(1, Ordering::Relaxed);
        let path = std::env::temp_dir()
            .join(format!("softsynth-{label}-{}-{n}", std::process::id()));
        std::fs::create_dir_all(&path).unwrap();
        TempDir { path }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl Drop for TempDir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.path);
    }
}

fn num(bits: &str) -> BigUint {
    BigUint::parse_bytes(bits.as_bytes(), 2).expect("binary text")
}

fn pow2(n: usize) -> BigUint {
    BigUint::from(1u8) << n
}

fn render(v: &BigUint, width: usize) -> String {
    let s = v.to_str_radix(2);
    assert!(s.len() <= width, "{v} does not fit in {width} bits");
    "0".repeat(width - s.len()) + &s
}

/// Two's-complement value of a binary string.
fn signed(bits: &str) -> BigInt {
    let u = BigInt::from(num(bits));
    if bits.starts_with('1') {
        u - (BigInt::from(1) << bits.len())
    } else {
        u
    }
}

fn floor_log2(w: usize) -> usize {
    let mut n = 0;
    while (1usize << (n + 1)) <= w {
        n += 1;
    }
    n
}

fn ceil_log2(w: usize) -> usize {
    let mut n = 0;
    while (1usize << n) < w {
        n += 1;
    }
    n
}

/// Input and output widths of a task, derived from scratch.
pub fn reference_widths(kind: TaskKind, w: usize) -> (usize, usize) {
    match kind {
        TaskKind::Not | TaskKind::Shl | TaskKind::Shr | TaskKind::Neg => (w, w),
        TaskKind::And | TaskKind::Or | TaskKind::Xor => (2 * w, w),
        TaskKind::Add | TaskKind::Sub => (2 * w, w + 1),
        TaskKind::Mul => (2 * w, 2 * w),
        TaskKind::Div | TaskKind::Rem => (2 * w, w),
        TaskKind::Mux => (w + floor_log2(w), 1),
        TaskKind::Demux => (1 + floor_log2(w), w),
        TaskKind::Dec => (floor_log2(w), w),
        TaskKind::Enc => (w, ceil_log2(w)),
    }
}

/// Big-integer reference computation of a task output from the displayed
/// input bits. None marks an excluded input. Deliberately a second
/// implementation working on numbers and strings, sharing no code with the
/// generators it checks.
pub fn reference_output(kind: TaskKind, w: usize, input: &str) -> Option<String> {
    let (wi, wo) = reference_widths(kind, w);
    assert_eq!(input.len(), wi, "{kind} at w={w}");
    match kind {
        TaskKind::Not => {
            let a = num(input);
            Some(render(&(pow2(w) - BigUint::from(1u8) - a), wo))
        }
        TaskKind::And | TaskKind::Or | TaskKind::Xor => {
            let a = num(&input[..w]);
            let b = num(&input[w..]);
            let v = match kind {
                TaskKind::And => a & b,
                TaskKind::Or => a | b,
                _ => a ^ b,
            };
            Some(render(&v, wo))
        }
        TaskKind::Shl => {
            let a = num(input);
            Some(render(&((a << 1u8) % pow2(w)), wo))
        }
        TaskKind::Shr => {
            let a = num(input);
            Some(render(&(a >> 1u8), wo))
        }
        TaskKind::Neg => {
            let a = num(input);
            Some(render(&((pow2(w) - a) % pow2(w)), wo))
        }
        TaskKind::Add | TaskKind::Sub => {
            let a = signed(&input[..w]);
            let b = signed(&input[w..]);
            let s = if kind == TaskKind::Add { a + b } else { a - b };
            let m = BigInt::from(1) << (w + 1);
            let r = ((s % &m) + &m) % &m;
            Some(render(&r.to_biguint().unwrap(), wo))
        }
        TaskKind::Mul => {
            let a = num(&input[..w]);
            let b = num(&input[w..]);
            Some(render(&(a * b), wo))
        }
        TaskKind::Div | TaskKind::Rem => {
            let a = num(&input[..w]);
            let b = num(&input[w..]);
            if b == BigUint::from(0u8) {
                return None;
            }
            let v = if kind == TaskKind::Div { a / b } else { a % b };
            Some(render(&v, wo))
        }
        TaskKind::Mux => {
            let signals = num(&input[..w]);
            let sel: usize = num(&input[w..]).try_into().unwrap();
            let bit = (signals >> sel) & BigUint::from(1u8);
            Some(render(&bit, wo))
        }
        TaskKind::Demux => {
            let data = input.starts_with('1');
            let sel: usize = num(&input[1..]).try_into().unwrap();
            let v = if data { pow2(sel) } else { BigUint::from(0u8) };
            Some(render(&v, wo))
        }
        TaskKind::Dec => {
            let sel: usize = num(input).try_into().unwrap();
            Some(render(&pow2(sel), wo))
        }
        TaskKind::Enc => {
            let a = num(input);
            let n = a.trailing_zeros()?;
            Some(render(&BigUint::from(n), wo))
        }
    }
}
