//! Cyclic bank layout: logical element ↔ (flat bank, offset).

use serde::Serialize;

use crate::ast::BankSpec;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BankLayout {
    pub dims: Vec<BankSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("index {index} out of range for dimension {dim} of size {size}")]
pub struct OutOfRange {
    pub dim: usize,
    pub index: u64,
    pub size: u64,
}

impl BankLayout {
    pub fn new(dims: Vec<BankSpec>) -> Self {
        BankLayout { dims }
    }

    pub fn flat_banks(&self) -> u64 {
        self.dims.iter().map(|d| d.banks).product()
    }

    /// Elements held by each bank.
    pub fn bank_len(&self) -> u64 {
        self.dims.iter().map(|d| d.size / d.banks).product()
    }

    pub fn len(&self) -> u64 {
        self.dims.iter().map(|d| d.size).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major flattening of per-dimension bank numbers.
    pub fn flatten_bank(&self, banks: &[u64]) -> u64 {
        self.dims
            .iter()
            .zip(banks)
            .fold(0, |acc, (d, b)| acc * d.banks + b)
    }

    pub fn unflatten_bank(&self, mut flat: u64) -> Vec<u64> {
        let mut out = vec![0; self.dims.len()];
        for (i, d) in self.dims.iter().enumerate().rev() {
            out[i] = flat % d.banks;
            flat /= d.banks;
        }
        out
    }

    /// Per-dimension strides of the row-major offset inside one bank.
    pub fn offset_strides(&self) -> Vec<u64> {
        let mut strides = vec![1; self.dims.len()];
        for i in (0..self.dims.len().saturating_sub(1)).rev() {
            let d = self.dims[i + 1];
            strides[i] = strides[i + 1] * (d.size / d.banks);
        }
        strides
    }

    pub fn flatten_offset(&self, offsets: &[u64]) -> u64 {
        self.offset_strides()
            .iter()
            .zip(offsets)
            .map(|(s, o)| s * o)
            .sum()
    }

    pub fn unflatten_offset(&self, mut flat: u64) -> Vec<u64> {
        let mut out = vec![0; self.dims.len()];
        for (i, d) in self.dims.iter().enumerate().rev() {
            let per = d.size / d.banks;
            out[i] = flat % per;
            flat /= per;
        }
        out
    }

    /// Bank `index mod banks`, offset `index div banks`, per dimension.
    pub fn bank_and_offset(&self, logical: &[u64]) -> Result<(u64, Vec<u64>), OutOfRange> {
        let mut banks = Vec::with_capacity(self.dims.len());
        let mut offs = Vec::with_capacity(self.dims.len());
        for (dim, (d, &ix)) in self.dims.iter().zip(logical).enumerate() {
            if ix >= d.size {
                return Err(OutOfRange {
                    dim,
                    index: ix,
                    size: d.size,
                });
            }
            banks.push(ix % d.banks);
            offs.push(ix / d.banks);
        }
        Ok((self.flatten_bank(&banks), offs))
    }

    pub fn logical_of(&self, flat_bank: u64, offsets: &[u64]) -> Vec<u64> {
        let banks = self.unflatten_bank(flat_bank);
        self.dims
            .iter()
            .zip(banks)
            .zip(offsets)
            .map(|((d, b), o)| o * d.banks + b)
            .collect()
    }

    /// Row-major flat position of a logical index vector.
    pub fn flatten_logical(&self, logical: &[u64]) -> u64 {
        self.dims
            .iter()
            .zip(logical)
            .fold(0, |acc, (d, i)| acc * d.size + i)
    }

    pub fn unflatten_logical(&self, mut flat: u64) -> Vec<u64> {
        let mut out = vec![0; self.dims.len()];
        for (i, d) in self.dims.iter().enumerate().rev() {
            out[i] = flat % d.size;
            flat /= d.size;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_examples() {
        let l = BankLayout::new(vec![BankSpec::new(10, 2)]);
        assert_eq!(l.bank_and_offset(&[1]).unwrap(), (1, vec![0]));
        let m = BankLayout::new(vec![BankSpec::new(4, 2), BankSpec::new(4, 2)]);
        assert_eq!(m.bank_and_offset(&[1, 1]).unwrap(), (3, vec![0, 0]));
        assert_eq!(m.logical_of(3, &m.unflatten_offset(0)), vec![1, 1]);
        let u = BankLayout::new(vec![BankSpec::new(7, 1)]);
        assert_eq!(u.bank_and_offset(&[5]).unwrap(), (0, vec![5]));
        let e = BankLayout::new(vec![BankSpec::new(16, 8)]);
        assert_eq!(e.bank_and_offset(&[8]).unwrap().0, 0);
        assert!(l.bank_and_offset(&[10]).is_err());
    }
}
