//! Shared domain types: signals, their zero-padded lifts, group elements and
//! the noise model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::InvalidParameter(format!(
            "signal entry {i} is not finite"
        ))),
        None => Ok(()),
    }
}

/// A length-`L` target signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal1D {
    values: Vec<f64>,
}

impl Signal1D {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Shape("signal must have length >= 1".into()));
        }
        check_finite(&values)?;
        Ok(Signal1D { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn padded(&self) -> PaddedSignal1D {
        let l = self.len();
        let mut values = Vec::with_capacity(2 * l);
        values.extend_from_slice(&self.values);
        values.resize(2 * l, 0.0);
        PaddedSignal1D { values }
    }
}

/// An `L x L` target image stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal2D {
    side: usize,
    values: Vec<f64>,
}

impl Signal2D {
    pub fn new(side: usize, values: Vec<f64>) -> Result<Self> {
        if side == 0 || values.len() != side * side {
            return Err(Error::Shape(format!(
                "expected a square {side}x{side} image, got {} entries",
                values.len()
            )));
        }
        check_finite(&values)?;
        Ok(Signal2D { side, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let side = rows.len();
        if rows.iter().any(|r| r.len() != side) {
            return Err(Error::Shape("image rows must form a square".into()));
        }
        Signal2D::new(side, rows.concat())
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.side + col]
    }

    pub fn padded(&self) -> PaddedSignal2D {
        let l = self.side;
        let mut values = vec![0.0; 4 * l * l];
        for r in 0..l {
            values[r * 2 * l..r * 2 * l + l].copy_from_slice(&self.values[r * l..(r + 1) * l]);
        }
        PaddedSignal2D { half: l, values }
    }
}

/// `[X, 0_L]`: a length-`2L` vector whose last `L` entries are exactly zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaddedSignal1D {
    values: Vec<f64>,
}

impl PaddedSignal1D {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        validate_padded_1d(&values)?;
        Ok(PaddedSignal1D { values })
    }

    /// `L`, half the padded length.
    pub fn signal_len(&self) -> usize {
        self.values.len() / 2
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Accepts `x` iff it has even length `2L` and entries `L..2L` are exactly zero.
pub fn validate_padded_1d(x: &[f64]) -> Result<()> {
    if x.is_empty() || x.len() % 2 != 0 {
        return Err(Error::Shape(format!(
            "padded signal must have even positive length, got {}",
            x.len()
        )));
    }
    let l = x.len() / 2;
    match x[l..].iter().position(|&v| v != 0.0) {
        Some(i) => Err(Error::PaddingViolation { index: l + i }),
        None => Ok(()),
    }
}

/// A `2L x 2L` row-major image, nonzero only in its top-left `L x L` block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaddedSignal2D {
    half: usize,
    values: Vec<f64>,
}

impl PaddedSignal2D {
    pub fn new(side: usize, values: Vec<f64>) -> Result<Self> {
        validate_padded_2d(side, &values)?;
        Ok(PaddedSignal2D {
            half: side / 2,
            values,
        })
    }

    pub fn signal_side(&self) -> usize {
        self.half
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Accepts a `side x side` row-major image iff `side = 2L` and the three
/// blocks outside the top-left `L x L` are exactly zero. The reported index
/// is the first offending entry in row-major order.
pub fn validate_padded_2d(side: usize, x: &[f64]) -> Result<()> {
    if side == 0 || side % 2 != 0 || x.len() != side * side {
        return Err(Error::Shape(format!(
            "padded image must be 2L x 2L, got side {side} with {} entries",
            x.len()
        )));
    }
    let l = side / 2;
    for (i, &v) in x.iter().enumerate() {
        let (r, c) = (i / side, i % side);
        if (r >= l || c >= l) && v != 0.0 {
            return Err(Error::PaddingViolation { index: i });
        }
    }
    Ok(())
}

/// Latent 1D state `(g1, g2)`: `g1` is the start offset of a signal that
/// began in the previous patch (0 when nothing spills over) and `g2` the
/// start offset within the current patch (`L` when none starts).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupElement1D {
    pub g1: usize,
    pub g2: usize,
}

impl GroupElement1D {
    pub fn new(g1: usize, g2: usize) -> Self {
        GroupElement1D { g1, g2 }
    }

    pub fn in_range(&self, l: usize) -> bool {
        self.g1 < l && self.g2 <= l
    }

    /// Support of the stationary law: the two copies cannot overlap, so a
    /// new start never precedes the end of the spilled suffix.
    pub fn is_admissible(&self, l: usize) -> bool {
        self.in_range(l) && self.g1 <= self.g2
    }
}

/// A shift in `Z_2L x Z_2L`, `(row, col)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Shift2 {
    pub row: usize,
    pub col: usize,
}

impl Shift2 {
    pub const fn new(row: usize, col: usize) -> Self {
        Shift2 { row, col }
    }

    pub fn empty(l: usize) -> Self {
        Shift2 { row: l, col: l }
    }

    fn is_offset(&self, l: usize) -> bool {
        self.row < l && self.col < l
    }
}

/// Latent 2D state: the anchor offsets of the copies whose top-left pixel
/// lies in the current patch, its left, upper and upper-left neighbours.
/// Components 1..3 use `(L, L)` for "no anchor"; component 4 uses `(0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupElement2D {
    pub parts: [Shift2; 4],
}

impl GroupElement2D {
    pub fn new(parts: [Shift2; 4]) -> Self {
        GroupElement2D { parts }
    }

    /// Encoding of an empty neighbourhood.
    pub fn empty(l: usize) -> Self {
        let e = Shift2::empty(l);
        GroupElement2D {
            parts: [e, e, e, Shift2::new(0, 0)],
        }
    }

    pub fn in_range(&self, l: usize) -> bool {
        let first_three = self.parts[..3]
            .iter()
            .all(|s| s.is_offset(l) || *s == Shift2::empty(l));
        first_three && self.parts[3].is_offset(l)
    }

    /// Dense code in `0..(L^2+1)^3 * L^2`, for histogramming.
    pub fn code(&self, l: usize) -> usize {
        let cell = |s: &Shift2| {
            if s.is_offset(l) {
                s.row * l + s.col
            } else {
                l * l
            }
        };
        let base = l * l + 1;
        let c4 = self.parts[3].row * l + self.parts[3].col;
        ((cell(&self.parts[0]) * base + cell(&self.parts[1])) * base + cell(&self.parts[2]))
            * (l * l)
            + c4
    }

    pub fn from_code(code: usize, l: usize) -> Self {
        let base = l * l + 1;
        let decode = |c: usize| {
            if c == l * l {
                Shift2::empty(l)
            } else {
                Shift2::new(c / l, c % l)
            }
        };
        let c4 = code % (l * l);
        let rest = code / (l * l);
        let c3 = rest % base;
        let c2 = (rest / base) % base;
        let c1 = rest / (base * base);
        GroupElement2D {
            parts: [decode(c1), decode(c2), decode(c3), Shift2::new(c4 / l, c4 % l)],
        }
    }

    pub fn code_count(l: usize) -> usize {
        (l * l + 1).pow(3) * l * l
    }
}

/// I.i.d. Gaussian noise with standard deviation `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
}

impl NoiseSpec {
    pub fn new(sigma: f64) -> Result<Self> {
        if sigma.is_finite() && sigma >= 0.0 {
            Ok(NoiseSpec { sigma })
        } else {
            Err(Error::InvalidParameter(format!(
                "sigma must be finite and >= 0, got {sigma}"
            )))
        }
    }

    pub fn noiseless() -> Self {
        NoiseSpec { sigma: 0.0 }
    }
}
