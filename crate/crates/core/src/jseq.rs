//! Branching sequences `j_1, j_2, ...` and the derived mesh lengths `d_n`.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The branching sequence of a Laakso space.
///
/// A sequence is either finite (only `j_1..j_len` are defined) or constant,
/// in which case the single stored value repeats for every level.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JSequence {
    values: Vec<u64>,
    constant: bool,
}

impl JSequence {
    /// A finite sequence; `j_i` is `values[i - 1]`.
    pub fn new(values: Vec<u64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySequence);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, &v)| v < 2) {
            return Err(Error::InvalidJ { index: index + 1, value });
        }
        Ok(Self { values, constant: false })
    }

    /// `j_i = j` for every level.
    pub fn constant(j: u64) -> Result<Self> {
        if j < 2 {
            return Err(Error::InvalidJ { index: 1, value: j });
        }
        Ok(Self { values: vec![j], constant: true })
    }

    /// Parses the command-line form: a single value is a constant sequence,
    /// a comma separated list is finite.
    pub fn from_list(values: &[u64]) -> Result<Self> {
        match values {
            [] => Err(Error::EmptySequence),
            [j] => Self::constant(*j),
            _ => Self::new(values.to_vec()),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.constant
    }

    /// The constant value, if this is a constant sequence.
    pub fn constant_value(&self) -> Option<u64> {
        self.constant.then(|| self.values[0])
    }

    /// Stored values (one element for constant sequences).
    pub fn values(&self) -> &[u64] {
        &self.values
    }

    /// Number of defined levels, `None` when unbounded.
    pub fn defined_levels(&self) -> Option<usize> {
        (!self.constant).then_some(self.values.len())
    }

    /// `j_level` for `level >= 1`.
    pub fn j(&self, level: usize) -> Result<u64> {
        assert!(level >= 1, "levels are 1-based");
        if self.constant {
            Ok(self.values[0])
        } else {
            self.values
                .get(level - 1)
                .copied()
                .ok_or(Error::UndefinedLevel { level, len: self.values.len() })
        }
    }

    /// Checks that `j_1..j_n` are all defined.
    pub fn check_depth(&self, n: usize) -> Result<()> {
        if n >= 1 {
            self.j(n)?;
        }
        Ok(())
    }

    /// `J_n = j_1 * ... * j_n`, the number of mesh intervals of `F_n`.
    pub fn columns(&self, n: usize) -> Result<u128> {
        let mut acc: u128 = 1;
        for level in 1..=n {
            acc = acc
                .checked_mul(self.j(level)? as u128)
                .ok_or_else(|| Error::InvalidArgument(format!("J_{n} overflows")))?;
        }
        Ok(acc)
    }

    /// Exact mesh length `d_n = 1 / J_n`, with `d_0 = 1`.
    pub fn d(&self, n: usize) -> Result<Ratio<i128>> {
        let cols = self.columns(n)?;
        let den = i128::try_from(cols).map_err(|_| Error::InvalidArgument(format!("d_{n} underflows")))?;
        Ok(Ratio::new(1, den))
    }

    /// The first `n` values, as a finite list (used for serialization).
    pub fn prefix(&self, n: usize) -> Result<Vec<u64>> {
        (1..=n).map(|level| self.j(level)).collect()
    }
}

/// Hausdorff dimension `1 + ln 2 / ln j` of the constant-`j` Laakso space.
pub fn hausdorff_dimension(j: u64) -> Result<f64> {
    if j < 2 {
        return Err(Error::InvalidJ { index: 1, value: j });
    }
    Ok(1.0 + std::f64::consts::LN_2 / (j as f64).ln())
}
