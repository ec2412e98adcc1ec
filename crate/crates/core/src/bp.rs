//! Damped log-domain belief propagation on a binary parity-check matrix.
//!
//! Flooding schedule: every check updates (horizontal step), then every
//! variable (vertical step). Messages live on the nonzeros of `H` in
//! compressed-row form.

use crate::bits::BitMatrix;
use crate::error::{check_len, Error, Result};

/// Above this `|x|`, `tanh(x)` rounds to within one ulp of 1.
pub const TANH_CLIP: f64 = 19.07;
/// `atanh` arguments are clamped to `±(1 - ATANH_EPS)`.
pub const ATANH_EPS: f64 = 1e-15;
/// Magnitude cap for any LLR leaving the decoder.
pub const LLR_CAP: f64 = 100.0;

pub const DEFAULT_THETA: f64 = 0.5;

/// Message storage reused across calls; reloading a new matrix keeps the
/// allocations.
#[derive(Debug, Clone, Default)]
pub struct BpWorkspace {
    cols: usize,
    row_ptr: Vec<usize>,
    edge_col: Vec<usize>,
    q: Vec<f64>,
    r: Vec<f64>,
    t: Vec<f64>,
    suffix: Vec<f64>,
    col_sum: Vec<f64>,
}

impl BpWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds the edge lists for `h`. Rejects matrices with an empty row.
    pub fn load(&mut self, h: &BitMatrix) -> Result<()> {
        self.cols = h.cols();
        self.row_ptr.clear();
        self.edge_col.clear();
        self.row_ptr.push(0);
        for i in 0..h.rows() {
            let before = self.edge_col.len();
            for (k, &w) in h.row_words(i).iter().enumerate() {
                let mut w = w;
                while w != 0 {
                    self.edge_col.push(k * 64 + w.trailing_zeros() as usize);
                    w &= w - 1;
                }
            }
            if self.edge_col.len() == before {
                return Err(Error::EmptyCheck(i));
            }
            self.row_ptr.push(self.edge_col.len());
        }
        let e = self.edge_col.len();
        self.q.resize(e, 0.0);
        self.r.resize(e, 0.0);
        self.t.resize(e, 0.0);
        self.suffix.resize(e, 0.0);
        self.col_sum.resize(self.cols, 0.0);
        Ok(())
    }

    pub fn edges(&self) -> usize {
        self.edge_col.len()
    }

    /// Runs `it_h` sweeps on the loaded matrix and writes
    /// `Λx_j = Σ_{i∈I(j)} R_{i,j}` into `out`.
    pub fn run(&mut self, llr_in: &[f64], it_h: usize, theta: f64, out: &mut [f64]) -> Result<()> {
        check_len(self.cols, llr_in.len())?;
        check_len(self.cols, out.len())?;
        if it_h == 0 {
            return Err(Error::InvalidParameter("itH must be at least 1".into()));
        }
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "damping θ={theta} outside (0, 1]"
            )));
        }
        for (q, &c) in self.q.iter_mut().zip(&self.edge_col) {
            *q = llr_in[c];
        }
        for iter in 0..it_h {
            self.horizontal();
            self.column_sums();
            // A single sweep has no use for the vertical step.
            if iter + 1 < it_h {
                for ((q, &r), &c) in self.q.iter_mut().zip(&self.r).zip(&self.edge_col) {
                    *q = llr_in[c] + theta * (self.col_sum[c] - r);
                }
            }
        }
        for (o, &s) in out.iter_mut().zip(&self.col_sum) {
            *o = s.clamp(-LLR_CAP, LLR_CAP);
        }
        Ok(())
    }

    fn horizontal(&mut self) {
        let lim = 1.0 - ATANH_EPS;
        for i in 0..self.row_ptr.len() - 1 {
            let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
            for e in a..b {
                self.t[e] = (0.5 * self.q[e]).clamp(-TANH_CLIP, TANH_CLIP).tanh();
            }
            let mut acc = 1.0;
            for e in (a..b).rev() {
                self.suffix[e] = acc;
                acc *= self.t[e];
            }
            let mut prefix = 1.0;
            for e in a..b {
                let p = (prefix * self.suffix[e]).clamp(-lim, lim);
                self.r[e] = 2.0 * p.atanh();
                prefix *= self.t[e];
            }
        }
    }

    fn column_sums(&mut self) {
        self.col_sum.fill(0.0);
        for (&r, &c) in self.r.iter().zip(&self.edge_col) {
            self.col_sum[c] += r;
        }
    }

    /// Check-to-variable messages from the last horizontal step, in edge
    /// order (row-major over the nonzeros).
    pub fn check_messages(&self) -> &[f64] {
        &self.r
    }

    /// Variable-to-check messages that fed the last horizontal step.
    pub fn variable_messages(&self) -> &[f64] {
        &self.q
    }
}

/// One-shot convenience wrapper around [`BpWorkspace`].
pub fn run_lbp(h: &BitMatrix, llr_in: &[f64], it_h: usize, theta: f64) -> Result<Vec<f64>> {
    let mut ws = BpWorkspace::new();
    ws.load(h)?;
    let mut out = vec![0.0; h.cols()];
    ws.run(llr_in, it_h, theta, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selftest::{codeword_marginals as brute_force_posteriors, random_forest};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn degree_two_check_passes_message_through() {
        let h = BitMatrix::from_rows(&[vec![1, 1, 0]]);
        let x = run_lbp(&h, &[1.7, -0.4, 3.0], 1, 0.5).unwrap();
        assert!((x[0] + 0.4).abs() < 1e-12);
        assert!((x[1] - 1.7).abs() < 1e-12);
        assert_eq!(x[2], 0.0);
    }

    #[test]
    fn three_bit_check_against_enumeration() {
        let h = BitMatrix::from_rows(&[vec![1, 1, 1]]);
        let llr = [2.0, 2.0, 2.0];
        let x = run_lbp(&h, &llr, 1, 0.5).unwrap();
        let expect = 2.0 * (1f64.tanh().powi(2)).atanh();
        let post = brute_force_posteriors(&h, &llr);
        for j in 0..3 {
            assert!((x[j] - expect).abs() < 1e-12);
            assert!((post[j] - llr[j] - x[j]).abs() < 1e-12);
        }
        assert!((expect - 1.325_002_747).abs() < 1e-9);
    }

    #[test]
    fn empty_check_rejected() {
        let h = BitMatrix::from_rows(&[vec![1, 1, 0], vec![0, 0, 0]]);
        assert!(matches!(
            run_lbp(&h, &[0.0; 3], 1, 0.5),
            Err(Error::EmptyCheck(1))
        ));
    }

    #[test]
    fn parameter_checks() {
        let h = BitMatrix::from_rows(&[vec![1, 1]]);
        assert!(run_lbp(&h, &[1.0, 1.0], 0, 0.5).is_err());
        assert!(run_lbp(&h, &[1.0, 1.0], 1, 0.0).is_err());
        assert!(run_lbp(&h, &[1.0], 1, 0.5).is_err());
    }

    #[test]
    fn saturated_inputs_stay_finite() {
        let h = BitMatrix::from_rows(&[vec![1, 1, 1, 0], vec![0, 1, 1, 1]]);
        let x = run_lbp(&h, &[1e6, -1e6, 1e6, 0.0], 5, 1.0).unwrap();
        assert!(x.iter().all(|v| v.is_finite() && v.abs() <= LLR_CAP));
    }

    #[test]
    fn forest_exactness() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let n = rng.random_range(4..=12);
            let checks = rng.random_range(1..=n / 2);
            let h = random_forest(&mut rng, n, checks);
            let llr: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
            let x = run_lbp(&h, &llr, 2 * n, 1.0).unwrap();
            let post = brute_force_posteriors(&h, &llr);
            for j in 0..n {
                assert!(
                    (llr[j] + x[j] - post[j]).abs() < 1e-9,
                    "{j}: {} {}",
                    llr[j] + x[j],
                    post[j]
                );
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn matrix() -> impl Strategy<Value = BitMatrix> {
            proptest::collection::vec(proptest::collection::vec(0u8..2, 8), 1..5).prop_map(
                |mut rows| {
                    // degree ≥ 2 everywhere; a degree-one check is not sign symmetric
                    for (i, r) in rows.iter_mut().enumerate() {
                        r[i % 8] = 1;
                        r[(i + 1) % 8] = 1;
                    }
                    BitMatrix::from_rows(&rows)
                },
            )
        }

        /// Flipping the sign of `Λ_j` wherever a codeword `c` has `c_j = 1`
        /// flips every message on those columns. With all rows of even
        /// weight the all-ones word qualifies, giving plain negation symmetry.
        fn flip_symmetry(
            h: &BitMatrix,
            llr: &[f64],
            c: &[u8],
            it: usize,
        ) -> std::result::Result<(), TestCaseError> {
            let flipped: Vec<f64> = llr
                .iter()
                .zip(c)
                .map(|(&l, &b)| if b == 1 { -l } else { l })
                .collect();
            let a = run_lbp(h, llr, it, 0.5).unwrap();
            let b = run_lbp(h, &flipped, it, 0.5).unwrap();
            for j in 0..llr.len() {
                let s = if c[j] == 1 { -1.0 } else { 1.0 };
                prop_assert!((a[j] - s * b[j]).abs() < 1e-9);
            }
            Ok(())
        }

        proptest! {
            #[test]
            fn negation_symmetry_even_checks(h in matrix(),
                                             llr in proptest::collection::vec(-8.0f64..8.0, 8),
                                             it in 1usize..4) {
                let mut rows = h.to_rows();
                for r in rows.iter_mut() {
                    if r.iter().filter(|&&b| b == 1).count() % 2 == 1 {
                        r[7] ^= 1;
                        if r.iter().all(|&b| b == 0) {
                            r[0] = 1;
                            r[7] = 1;
                        }
                    }
                }
                let h = BitMatrix::from_rows(&rows);
                flip_symmetry(&h, &llr, &[1; 8], it)?;
            }

            #[test]
            fn codeword_flip_symmetry(h in matrix(),
                                      llr in proptest::collection::vec(-8.0f64..8.0, 8),
                                      pick in 0usize..256,
                                      it in 1usize..4) {
                let words: Vec<Vec<u8>> = (0u32..256)
                    .map(|w| (0..8).map(|j| ((w >> j) & 1) as u8).collect())
                    .filter(|b: &Vec<u8>| h.annihilates(b))
                    .collect();
                let c = &words[pick % words.len()];
                flip_symmetry(&h, &llr, c, it)?;
            }

            #[test]
            fn check_messages_contract(h in matrix(),
                                       llr in proptest::collection::vec(-8.0f64..8.0, 8)) {
                let mut ws = BpWorkspace::new();
                ws.load(&h).unwrap();
                let mut out = vec![0.0; 8];
                ws.run(&llr, 1, 0.5, &mut out).unwrap();
                let (q, r) = (ws.variable_messages(), ws.check_messages());
                let mut e = 0;
                for i in 0..h.rows() {
                    let w = h.row_weight(i);
                    for a in 0..w {
                        let min_other = (0..w)
                            .filter(|&b| b != a)
                            .map(|b| q[e + b].abs())
                            .fold(f64::INFINITY, f64::min);
                        prop_assert!(r[e + a].abs() <= min_other + 1e-9);
                    }
                    e += w;
                }
                prop_assert_eq!(e, ws.edges());
            }
        }
    }
}
