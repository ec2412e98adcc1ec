//! Dense GF(2) matrices packed into `u64` words, row-major.

use crate::error::{Error, Result};

const WORD: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words: usize,
    data: Vec<u64>,
}

/// Outcome of a Gaussian elimination pass.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Elimination {
    /// Pivot columns in the order they were reduced.
    pub pivots: Vec<usize>,
    /// Number of row-xor operations performed.
    pub row_xors: u64,
    /// Pivot columns that needed at least one row xor (were not already unit weight).
    pub reduced_columns: usize,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words = cols.div_ceil(WORD);
        BitMatrix {
            rows,
            cols,
            words,
            data: vec![0; rows * words],
        }
    }

    /// Builds from a dense row-major 0/1 description.
    pub fn from_rows(rows: &[Vec<u8>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged rows");
            for (j, &b) in row.iter().enumerate() {
                if b & 1 == 1 {
                    m.set(i, j, true);
                }
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        (self.data[r * self.words + c / WORD] >> (c % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        let w = &mut self.data[r * self.words + c / WORD];
        let mask = 1u64 << (c % WORD);
        if v {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.words..(r + 1) * self.words]
    }

    /// `row[dst] ^= row[src]`.
    #[inline]
    pub fn xor_row(&mut self, src: usize, dst: usize) {
        debug_assert_ne!(src, dst);
        let w = self.words;
        let (a, b) = if src < dst {
            let (lo, hi) = self.data.split_at_mut(dst * w);
            (&lo[src * w..(src + 1) * w], &mut hi[..w])
        } else {
            let (lo, hi) = self.data.split_at_mut(src * w);
            (&hi[..w], &mut lo[dst * w..(dst + 1) * w])
        };
        for (d, s) in b.iter_mut().zip(a) {
            *d ^= *s;
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for k in 0..self.words {
            self.data.swap(a * self.words + k, b * self.words + k);
        }
    }

    pub fn row_weight(&self, r: usize) -> usize {
        self.row_words(r)
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    pub fn col_weight(&self, c: usize) -> usize {
        (0..self.rows).filter(|&r| self.get(r, c)).count()
    }

    /// Column indices of the ones in row `r`, ascending.
    pub fn row_support(&self, r: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.row_weight(r));
        for (k, &w) in self.row_words(r).iter().enumerate() {
            let mut w = w;
            while w != 0 {
                let b = w.trailing_zeros() as usize;
                out.push(k * WORD + b);
                w &= w - 1;
            }
        }
        out
    }

    /// Matrix with columns rearranged so that column `t` of the result is
    /// column `order[t]` of `self`.
    pub fn permute_columns(&self, order: &[usize]) -> BitMatrix {
        assert_eq!(order.len(), self.cols);
        let mut out = BitMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for (t, &c) in order.iter().enumerate() {
                if self.get(r, c) {
                    out.set(r, t, true);
                }
            }
        }
        out
    }

    /// `H · v` over GF(2) for a 0/1 vector.
    pub fn syndrome(&self, v: &[u8]) -> Vec<u8> {
        assert_eq!(v.len(), self.cols);
        let packed = pack_bits(v);
        (0..self.rows)
            .map(|r| {
                let ones: u32 = self
                    .row_words(r)
                    .iter()
                    .zip(&packed)
                    .map(|(a, b)| (a & b).count_ones())
                    .sum();
                (ones & 1) as u8
            })
            .collect()
    }

    pub fn annihilates(&self, v: &[u8]) -> bool {
        self.syndrome(v).iter().all(|&s| s == 0)
    }

    /// GF(2) rank, computed on a scratch copy.
    pub fn rank(&self) -> usize {
        let order: Vec<usize> = (0..self.cols).collect();
        let mut m = self.clone();
        m.eliminate(&order, None).pivots.len()
    }

    /// Left-to-right Gauss-Jordan elimination over the columns listed in
    /// `order`.
    ///
    /// Each column is reduced to unit weight if some not-yet-pivoted row has
    /// a one in it; otherwise the column depends on earlier pivots and is
    /// skipped. Elimination is full (above and below the pivot) and stops
    /// once every row holds a pivot. Afterwards rows are sorted by the index
    /// of their pivot column, which makes the result independent of the
    /// elimination path for a given pivot set.
    ///
    /// `reserved[r] = Some(c)` asks that row `r` only be used as the pivot
    /// row for column `c` while another candidate row exists.
    pub fn eliminate(
        &mut self,
        order: &[usize],
        reserved: Option<&[Option<usize>]>,
    ) -> Elimination {
        let mut pivoted = vec![false; self.rows];
        let mut row_pivot: Vec<Option<usize>> = vec![None; self.rows];
        let mut out = Elimination::default();
        let mut remaining = self.rows;
        for &c in order {
            if remaining == 0 {
                break;
            }
            let allowed = |r: usize| match reserved {
                Some(res) => res[r].is_none_or(|owner| owner == c),
                None => true,
            };
            let mut first_any = None;
            let mut pick = None;
            for (r, &done) in pivoted.iter().enumerate() {
                if done || !self.get(r, c) {
                    continue;
                }
                if first_any.is_none() {
                    first_any = Some(r);
                }
                if allowed(r) {
                    pick = Some(r);
                    break;
                }
            }
            let Some(p) = pick.or(first_any) else {
                continue;
            };
            let mut xors = 0;
            for r in 0..self.rows {
                if r != p && self.get(r, c) {
                    self.xor_row(p, r);
                    xors += 1;
                }
            }
            out.row_xors += xors;
            if xors > 0 {
                out.reduced_columns += 1;
            }
            pivoted[p] = true;
            row_pivot[p] = Some(c);
            out.pivots.push(c);
            remaining -= 1;
        }
        self.sort_rows_by_pivot(&row_pivot);
        out
    }

    fn sort_rows_by_pivot(&mut self, row_pivot: &[Option<usize>]) {
        let mut idx: Vec<usize> = (0..self.rows).collect();
        // Rows without a pivot (only possible when rank deficient) go last.
        idx.sort_by_key(|&r| (row_pivot[r].is_none(), row_pivot[r], r));
        if idx.iter().enumerate().all(|(i, &r)| i == r) {
            return;
        }
        let old = self.data.clone();
        for (dst, &src) in idx.iter().enumerate() {
            self.data[dst * self.words..(dst + 1) * self.words]
                .copy_from_slice(&old[src * self.words..(src + 1) * self.words]);
        }
    }

    /// Eliminates and fails if fewer than `rows` pivots were found.
    pub fn eliminate_full_rank(
        &mut self,
        order: &[usize],
        reserved: Option<&[Option<usize>]>,
    ) -> Result<Elimination> {
        let e = self.eliminate(order, reserved);
        if e.pivots.len() < self.rows {
            return Err(Error::RankDeficient {
                rank: e.pivots.len(),
                rows: self.rows,
            });
        }
        Ok(e)
    }

    /// Dense 0/1 rows, mostly for tests and debugging.
    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.get(r, c) as u8).collect())
            .collect()
    }
}

pub fn pack_bits(v: &[u8]) -> Vec<u64> {
    let mut out = vec![0u64; v.len().div_ceil(WORD)];
    for (i, &b) in v.iter().enumerate() {
        if b & 1 == 1 {
            out[i / WORD] |= 1 << (i % WORD);
        }
    }
    out
}
