//! Deterministic 2-D point streams on the unit square.
//!
//! Two families are provided:
//!
//! - **Halton**: coordinate `d` of point `i` is the radical inverse of `i` in
//!   the `d`-th base. The default pair is (2, 11), i.e. the first and fifth
//!   primes, which is what picking columns 1 and 5 of a 5-dimensional Halton
//!   sequence gives. Index 0 maps to the corner (0, 0) and is never emitted.
//! - **Pseudorandom**: ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//!   `SeedableRng::seed_from_u64(seed)`. Point `j` of the stream uses the
//!   `2j`-th and `2j+1`-th 64-bit outputs, each mapped to `[0, 1)` as
//!   `(x >> 11) * 2^-53`. Offsets are applied with the generator's word
//!   position, so skipping `k` points is O(1) and equal to drawing and
//!   discarding `2k` values.
//!
//! Every stream is a pure function of `(spec, offset, count)`.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Default Halton bases: the 1st and 5th primes.
pub const DEFAULT_BASES: (u64, u64) = (2, 11);

/// Largest double strictly below 1.
const ONE_MINUS_EPSILON: f64 = 1.0 - f64::EPSILON / 2.0;

/// 32-bit ChaCha words consumed per emitted point (two `u64` draws).
const WORDS_PER_POINT: u128 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Point2 {
    pub u: f64,
    pub v: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceKind {
    Halton,
    Pseudorandom,
}

/// Configuration of a point stream. Construct through [`SequenceSpec::halton`]
/// or [`SequenceSpec::pseudorandom`]; both validate their inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SequenceSpec {
    #[non_exhaustive]
    Halton { bases: (u64, u64), start_index: u64 },
    #[non_exhaustive]
    Pseudorandom { seed: u64 },
}

impl SequenceSpec {
    /// Halton stream with the given bases, starting at index 1.
    pub fn halton(bases: (u64, u64)) -> Result<Self> {
        for base in [bases.0, bases.1] {
            if !is_prime(base) {
                return Err(Error::InvalidBase(base));
            }
        }
        if bases.0 == bases.1 {
            return Err(Error::DuplicateBases(bases.0));
        }
        Ok(SequenceSpec::Halton {
            bases,
            start_index: 1,
        })
    }

    pub fn pseudorandom(seed: u64) -> Self {
        SequenceSpec::Pseudorandom { seed }
    }

    /// Overrides the first radical-inverse index consumed. No effect on
    /// pseudorandom specs.
    pub fn with_start_index(self, start: u64) -> Result<Self> {
        match self {
            SequenceSpec::Halton { bases, .. } => {
                if start == 0 {
                    return Err(Error::InvalidStartIndex(start));
                }
                Ok(SequenceSpec::Halton {
                    bases,
                    start_index: start,
                })
            }
            other => Ok(other),
        }
    }

    pub fn kind(&self) -> SequenceKind {
        match self {
            SequenceSpec::Halton { .. } => SequenceKind::Halton,
            SequenceSpec::Pseudorandom { .. } => SequenceKind::Pseudorandom,
        }
    }

    /// Short human-readable description, e.g. `halton(2,11)@1` or `mc(seed=7)`.
    pub fn describe(&self) -> String {
        match self {
            SequenceSpec::Halton { bases, start_index } => {
                format!("halton({},{})@{}", bases.0, bases.1, start_index)
            }
            SequenceSpec::Pseudorandom { seed } => format!("mc(seed={seed})"),
        }
    }

    /// Lazily yields `count` points starting `offset` points into the stream.
    pub fn points(&self, offset: u64, count: u64) -> Points {
        let source = match *self {
            SequenceSpec::Halton { bases, start_index } => Source::Halton {
                bases,
                next_index: start_index + offset,
            },
            SequenceSpec::Pseudorandom { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_word_pos(u128::from(offset) * WORDS_PER_POINT);
                Source::Pseudorandom(Box::new(rng))
            }
        };
        Points {
            source,
            remaining: count,
        }
    }
}

impl Default for SequenceSpec {
    fn default() -> Self {
        SequenceSpec::Halton {
            bases: DEFAULT_BASES,
            start_index: 1,
        }
    }
}

#[derive(Clone, Debug)]
enum Source {
    Halton { bases: (u64, u64), next_index: u64 },
    Pseudorandom(Box<ChaCha8Rng>),
}

/// Iterator returned by [`SequenceSpec::points`].
#[derive(Clone, Debug)]
pub struct Points {
    source: Source,
    remaining: u64,
}

impl Iterator for Points {
    type Item = Point2;

    #[inline]
    fn next(&mut self) -> Option<Point2> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let p = match &mut self.source {
            Source::Halton { bases, next_index } => {
                let i = *next_index;
                *next_index += 1;
                Point2 {
                    u: radical_inverse_unchecked(i, bases.0),
                    v: radical_inverse_unchecked(i, bases.1),
                }
            }
            Source::Pseudorandom(rng) => {
                let u = unit_f64(rng.next_u64());
                let v = unit_f64(rng.next_u64());
                Point2 { u, v }
            }
        };
        Some(p)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (n, Some(n))
    }
}

impl ExactSizeIterator for Points {}

#[inline]
fn unit_f64(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Reflects the base-`base` digits of `index` about the radix point.
pub fn radical_inverse(index: u64, base: u64) -> Result<f64> {
    if base < 2 {
        return Err(Error::InvalidBase(base));
    }
    Ok(radical_inverse_unchecked(index, base))
}

#[inline]
fn radical_inverse_unchecked(mut index: u64, base: u64) -> f64 {
    // Reversed digits and base^k are kept as exact integers while they fit,
    // so the common case is a single correctly rounded division.
    let mut reversed: u64 = 0;
    let mut denom: u64 = 1;
    while index > 0 {
        let (Some(r), Some(d)) = (reversed.checked_mul(base), denom.checked_mul(base)) else {
            break;
        };
        let next = index / base;
        reversed = r + (index - next * base);
        denom = d;
        index = next;
    }
    let mut value = reversed as f64 / denom as f64;
    // Remaining high digits, only reachable for indices near u64::MAX.
    let inv_base = 1.0 / base as f64;
    let mut scale = inv_base / denom as f64;
    while index > 0 {
        let next = index / base;
        value += (index - next * base) as f64 * scale;
        scale *= inv_base;
        index = next;
    }
    value.min(ONE_MINUS_EPSILON)
}

/// Point `index` of the Halton sequence described by `spec`.
pub fn halton_point(index: u64, spec: &SequenceSpec) -> Result<Point2> {
    match *spec {
        SequenceSpec::Halton { bases, start_index } => {
            if index < start_index {
                return Err(Error::InvalidArgument(format!(
                    "Halton index {index} precedes start index {start_index}"
                )));
            }
            Ok(Point2 {
                u: radical_inverse_unchecked(index, bases.0),
                v: radical_inverse_unchecked(index, bases.1),
            })
        }
        SequenceSpec::Pseudorandom { .. } => Err(Error::InvalidArgument(
            "halton_point requires a Halton sequence spec".into(),
        )),
    }
}

/// Collects `count` points of `spec` starting `offset` points in.
pub fn stream(spec: &SequenceSpec, offset: u64, count: u64) -> Vec<Point2> {
    spec.points(offset, count).collect()
}

pub(crate) fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}
