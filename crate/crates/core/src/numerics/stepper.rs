//! Implicit trapezoidal stepping for the stiff complex operator of the
//! closed propagation equation, backed by a block tridiagonal solve.
//!
//! Conventions: an operator `Op` acts on a vector of complex blocks; the
//! stepper advances `d phi / dR = i Op phi` by one trapezoidal step
//!
//! ```text
//! (I - i h/2 Op) phi_new = (I + i h/2 Op) phi_old
//! ```
//!
//! with the first and last block rows held at their old (Dirichlet) values.
//! For Hermitian `Op` the update is a Cayley transform and preserves the
//! discrete L2 norm.

use crate::linalg::{BlockLu, C64, ZERO};
use crate::{Error, Result};

/// Block tridiagonal operator: `n` rows of `b x b` complex blocks, row-major
/// within each block.  `sub[0]` and `sup[n-1]` are ignored.
#[derive(Debug, Clone)]
pub struct BlockTridiagonalOp {
    pub block: usize,
    pub n: usize,
    pub sub: Vec<C64>,
    pub diag: Vec<C64>,
    pub sup: Vec<C64>,
}

impl BlockTridiagonalOp {
    pub fn zeros(block: usize, n: usize) -> Self {
        let len = block * block * n;
        BlockTridiagonalOp {
            block,
            n,
            sub: vec![ZERO; len],
            diag: vec![ZERO; len],
            sup: vec![ZERO; len],
        }
    }

    pub fn block_mut<'a>(storage: &'a mut [C64], block: usize, row: usize) -> &'a mut [C64] {
        &mut storage[row * block * block..(row + 1) * block * block]
    }

    fn block_of<'a>(storage: &'a [C64], block: usize, row: usize) -> &'a [C64] {
        &storage[row * block * block..(row + 1) * block * block]
    }

    /// y = Op x
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        let b = self.block;
        debug_assert_eq!(x.len(), b * self.n);
        for row in 0..self.n {
            let out = &mut y[row * b..(row + 1) * b];
            out.fill(ZERO);
            let diag = Self::block_of(&self.diag, b, row);
            block_mat_vec_add(diag, &x[row * b..(row + 1) * b], out, b);
            if row > 0 {
                let sub = Self::block_of(&self.sub, b, row);
                block_mat_vec_add(sub, &x[(row - 1) * b..row * b], out, b);
            }
            if row + 1 < self.n {
                let sup = Self::block_of(&self.sup, b, row);
                block_mat_vec_add(sup, &x[(row + 1) * b..(row + 2) * b], out, b);
            }
        }
    }
}

fn block_mat_vec_add(m: &[C64], x: &[C64], out: &mut [C64], b: usize) {
    for r in 0..b {
        let mut acc = ZERO;
        for c in 0..b {
            acc += m[r * b + c] * x[c];
        }
        out[r] += acc;
    }
}

fn block_mat_mul(a: &[C64], bm: &[C64], out: &mut [C64], b: usize) {
    for r in 0..b {
        for c in 0..b {
            let mut acc = ZERO;
            for k in 0..b {
                acc += a[r * b + k] * bm[k * b + c];
            }
            out[r * b + c] = acc;
        }
    }
}

/// A block tridiagonal linear system `M x = rhs`.
#[derive(Debug, Clone)]
pub struct BandedBlockSystem {
    pub op: BlockTridiagonalOp,
    pub rhs: Vec<C64>,
}

/// Solves a block tridiagonal system by forward elimination and back
/// substitution over the blocks.  Errors on a singular pivot block.
pub fn block_tridiagonal_solve(sys: &BandedBlockSystem) -> Result<Vec<C64>> {
    let fact = BlockThomasFactors::new(&sys.op)?;
    Ok(fact.solve(&sys.rhs))
}

/// Reusable block Thomas factorization of a block tridiagonal matrix.
///
/// Forward elimination replaces each diagonal block with
/// `D'_k = D_k - L_k (D'_{k-1})^{-1} U_{k-1}`; the factors are kept so many
/// right-hand sides can be solved against the same matrix.
pub struct BlockThomasFactors {
    block: usize,
    n: usize,
    diag_lu: Vec<BlockLu>,
    // multiplier blocks m_k = L_k (D'_{k-1})^{-1}
    mult: Vec<C64>,
    sup: Vec<C64>,
}

impl BlockThomasFactors {
    pub fn new(op: &BlockTridiagonalOp) -> Result<Self> {
        let b = op.block;
        let bb = b * b;
        let n = op.n;
        let mut diag_lu = Vec::with_capacity(n);
        let mut mult = vec![ZERO; bb * n];
        let mut work_inv = vec![ZERO; bb];
        let mut work = vec![ZERO; bb];

        let mut current = op.diag[0..bb].to_vec();
        diag_lu.push(BlockLu::factor(&current, b).map_err(|_| Error::SingularPivot { row: 0 })?);
        for row in 1..n {
            // work_inv = (D'_{row-1})^{-1} U_{row-1}, column by column
            let sup_prev = BlockTridiagonalOp::block_of(&op.sup, b, row - 1);
            let lu_prev = &diag_lu[row - 1];
            for c in 0..b {
                let mut col = vec![ZERO; b];
                for r in 0..b {
                    col[r] = sup_prev[r * b + c];
                }
                lu_prev.solve(&mut col);
                for r in 0..b {
                    work_inv[r * b + c] = col[r];
                }
            }
            // m_row = L_row (D'_{row-1})^{-1}; computed as L_row * inv via
            // (L (D')^{-1} U) = L * ((D')^{-1} U) which is all we need below.
            let sub_row = BlockTridiagonalOp::block_of(&op.sub, b, row);
            block_mat_mul(sub_row, &work_inv, &mut work, b);
            // D'_row = D_row - L_row (D'_{row-1})^{-1} U_{row-1}
            current.copy_from_slice(BlockTridiagonalOp::block_of(&op.diag, b, row));
            for k in 0..bb {
                current[k] -= work[k];
            }
            diag_lu.push(BlockLu::factor(&current, b).map_err(|_| Error::SingularPivot { row })?);
            mult[row * bb..(row + 1) * bb].copy_from_slice(sub_row);
        }
        Ok(BlockThomasFactors {
            block: b,
            n,
            diag_lu,
            mult,
            sup: op.sup.clone(),
        })
    }

    pub fn solve(&self, rhs: &[C64]) -> Vec<C64> {
        let b = self.block;
        let bb = b * b;
        debug_assert_eq!(rhs.len(), b * self.n);
        let mut y = rhs.to_vec();
        let mut tmp = vec![ZERO; b];
        // forward: y_k <- rhs_k - L_k (D'_{k-1})^{-1} y'_{k-1}
        for row in 1..self.n {
            let (prev, cur) = y.split_at_mut(row * b);
            let prev_slice = &prev[(row - 1) * b..];
            tmp.copy_from_slice(prev_slice);
            self.diag_lu[row - 1].solve(&mut tmp);
            let mut delta = vec![ZERO; b];
            block_mat_vec_add(&self.mult[row * bb..(row + 1) * bb], &tmp, &mut delta, b);
            for r in 0..b {
                cur[r] -= delta[r];
            }
        }
        // back substitution
        let mut x = vec![ZERO; b * self.n];
        let last = self.n - 1;
        let mut seg = y[last * b..(last + 1) * b].to_vec();
        self.diag_lu[last].solve(&mut seg);
        x[last * b..(last + 1) * b].copy_from_slice(&seg);
        for row in (0..last).rev() {
            let mut acc = vec![ZERO; b];
            block_mat_vec_add(
                BlockTridiagonalOp::block_of(&self.sup, b, row),
                &x[(row + 1) * b..(row + 2) * b],
                &mut acc,
                b,
            );
            let mut seg = vec![ZERO; b];
            for r in 0..b {
                seg[r] = y[row * b + r] - acc[r];
            }
            self.diag_lu[row].solve(&mut seg);
            x[row * b..(row + 1) * b].copy_from_slice(&seg);
        }
        x
    }
}

/// Prefactored trapezoidal stepper for `d phi / dR = i Op phi` with a fixed
/// operator; Dirichlet edge blocks are reimposed after every step.
pub struct CrankNicolson {
    plus: BlockTridiagonalOp,
    factors: BlockThomasFactors,
    block: usize,
    n: usize,
}

impl CrankNicolson {
    pub fn new(op: &BlockTridiagonalOp, h: f64) -> Result<Self> {
        let b = op.block;
        let bb = b * b;
        let half = C64::new(0.0, 0.5 * h); // i h/2
        let mut plus = op.clone();
        let mut minus = op.clone();
        for storage in [&mut plus.sub, &mut plus.sup] {
            for v in storage.iter_mut() {
                *v *= half;
            }
        }
        for storage in [&mut minus.sub, &mut minus.sup] {
            for v in storage.iter_mut() {
                *v *= -half;
            }
        }
        for row in 0..op.n {
            for k in 0..bb {
                let scaled = op.diag[row * bb + k] * half;
                plus.diag[row * bb + k] = scaled;
                minus.diag[row * bb + k] = -scaled;
            }
            for d in 0..b {
                plus.diag[row * bb + d * b + d] += C64::new(1.0, 0.0);
                minus.diag[row * bb + d * b + d] += C64::new(1.0, 0.0);
            }
        }
        // Dirichlet edges: identity rows in the implicit matrix.
        for row in [0, op.n - 1] {
            BlockTridiagonalOp::block_mut(&mut minus.sub, b, row).fill(ZERO);
            BlockTridiagonalOp::block_mut(&mut minus.sup, b, row).fill(ZERO);
            let diag = BlockTridiagonalOp::block_mut(&mut minus.diag, b, row);
            diag.fill(ZERO);
            for d in 0..b {
                diag[d * b + d] = C64::new(1.0, 0.0);
            }
        }
        let factors = BlockThomasFactors::new(&minus)?;
        Ok(CrankNicolson {
            plus,
            factors,
            block: b,
            n: op.n,
        })
    }

    /// One trapezoidal step; `field` holds `n * block` complex entries.
    pub fn step(&self, field: &mut [C64]) {
        self.step_with_source(field, None);
    }

    /// Trapezoidal step of the affine system `d phi/dR = i Op phi + S`:
    /// `source` holds `h * S` already scaled by the step.  Edge blocks keep
    /// their old values.
    pub fn step_with_source(&self, field: &mut [C64], source: Option<&[C64]>) {
        let b = self.block;
        let mut rhs = vec![ZERO; field.len()];
        self.plus.apply(field, &mut rhs);
        if let Some(hs) = source {
            for (r, s) in rhs.iter_mut().zip(hs.iter()) {
                *r += s;
            }
        }
        // edge rows: keep the old values exactly
        rhs[0..b].copy_from_slice(&field[0..b]);
        rhs[(self.n - 1) * b..].copy_from_slice(&field[(self.n - 1) * b..]);
        let x = self.factors.solve(&rhs);
        field.copy_from_slice(&x);
    }
}

/// Single trapezoidal update `(I - i h/2 Op) new = (I + i h/2 Op) old` with
/// Dirichlet edges reimposed.  For repeated steps with a fixed operator use
/// [`CrankNicolson`], which keeps the factorization.
pub fn implicit_step(op: &BlockTridiagonalOp, field: &[C64], h: f64) -> Result<Vec<C64>> {
    let stepper = CrankNicolson::new(op, h)?;
    let mut out = field.to_vec();
    stepper.step(&mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn dense_solve(op: &BlockTridiagonalOp, rhs: &[C64]) -> Vec<C64> {
        // independent reference: assemble the dense matrix and run plain
        // Gauss-Jordan elimination
        let b = op.block;
        let n = op.n * b;
        let mut a = vec![ZERO; n * n];
        for row in 0..op.n {
            for r in 0..b {
                for cc in 0..b {
                    let gr = row * b + r;
                    a[gr * n + row * b + cc] = op.diag[row * b * b + r * b + cc];
                    if row > 0 {
                        a[gr * n + (row - 1) * b + cc] = op.sub[row * b * b + r * b + cc];
                    }
                    if row + 1 < op.n {
                        a[gr * n + (row + 1) * b + cc] = op.sup[row * b * b + r * b + cc];
                    }
                }
            }
        }
        let mut x = rhs.to_vec();
        for col in 0..n {
            let mut piv = col;
            for r in col + 1..n {
                if a[r * n + col].norm() > a[piv * n + col].norm() {
                    piv = r;
                }
            }
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            x.swap(col, piv);
            let inv = ONE / a[col * n + col];
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[r * n + col] * inv;
                for k in col..n {
                    let v = a[col * n + k];
                    a[r * n + k] -= f * v;
                }
                let v = x[col];
                x[r] -= f * v;
            }
        }
        for r in 0..n {
            x[r] /= a[r * n + r];
        }
        x
    }

    #[test]
    fn identity_blocks_return_rhs() {
        let mut op = BlockTridiagonalOp::zeros(4, 5);
        for row in 0..5 {
            let d = BlockTridiagonalOp::block_mut(&mut op.diag, 4, row);
            for k in 0..4 {
                d[k * 4 + k] = ONE;
            }
        }
        let rhs: Vec<C64> = (0..20).map(|k| c(k as f64, -(k as f64))).collect();
        let sys = BandedBlockSystem {
            op,
            rhs: rhs.clone(),
        };
        let x = block_tridiagonal_solve(&sys).unwrap();
        for (a, b) in x.iter().zip(rhs.iter()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn scalar_degenerate_case() {
        let mut op = BlockTridiagonalOp::zeros(1, 1);
        op.diag[0] = c(2.0, 0.0);
        let sys = BandedBlockSystem {
            op,
            rhs: vec![c(4.0, 0.0)],
        };
        let x = block_tridiagonal_solve(&sys).unwrap();
        assert!((x[0] - c(2.0, 0.0)).norm() < 1e-15);
    }

    fn random_block(rng: &mut StdRng, b: usize, diag_boost: f64) -> Vec<C64> {
        (0..b * b)
            .enumerate()
            .map(|(k, _)| {
                let mut v = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                if k % (b + 1) == 0 {
                    v += c(diag_boost, 0.0);
                }
                v
            })
            .collect()
    }

    #[test]
    fn random_system_matches_dense_solve() {
        let mut rng = StdRng::seed_from_u64(21);
        for trial in 0..20 {
            let n = 3 + trial % 4;
            let mut op = BlockTridiagonalOp::zeros(4, n);
            for row in 0..n {
                BlockTridiagonalOp::block_mut(&mut op.diag, 4, row)
                    .copy_from_slice(&random_block(&mut rng, 4, 6.0));
                if row > 0 {
                    BlockTridiagonalOp::block_mut(&mut op.sub, 4, row)
                        .copy_from_slice(&random_block(&mut rng, 4, 0.0));
                }
                if row + 1 < n {
                    BlockTridiagonalOp::block_mut(&mut op.sup, 4, row)
                        .copy_from_slice(&random_block(&mut rng, 4, 0.0));
                }
            }
            let rhs: Vec<C64> = (0..4 * n)
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let sys = BandedBlockSystem {
                op: op.clone(),
                rhs: rhs.clone(),
            };
            let x = block_tridiagonal_solve(&sys).unwrap();
            let reference = dense_solve(&op, &rhs);
            let rhs_norm: f64 = rhs.iter().map(|v| v.norm()).fold(0.0, f64::max);
            for (a, b) in x.iter().zip(reference.iter()) {
                assert!((a - b).norm() <= 1e-11 * rhs_norm.max(1.0));
            }
            // residual check
            let mut back = vec![ZERO; rhs.len()];
            op.apply(&x, &mut back);
            for (a, b) in back.iter().zip(rhs.iter()) {
                assert!((a - b).norm() <= 1e-12 * rhs_norm.max(1.0));
            }
        }
    }

    #[test]
    fn zero_operator_is_identity_map() {
        let op = BlockTridiagonalOp::zeros(4, 6);
        let field: Vec<C64> = (0..24)
            .map(|k| c(0.1 * k as f64, -0.05 * k as f64))
            .collect();
        let out = implicit_step(&op, &field, 0.37).unwrap();
        for (a, b) in out.iter().zip(field.iter()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn hermitian_operator_preserves_norm() {
        // i * Op with Hermitian Op is anti-Hermitian: the trapezoidal update
        // is a Cayley transform, so the L2 norm survives each step.
        let mut rng = StdRng::seed_from_u64(22);
        for _ in 0..10 {
            let n = 40;
            let mut op = BlockTridiagonalOp::zeros(1, n);
            for row in 0..n {
                op.diag[row] = c(rng.gen_range(-2.0..2.0), 0.0);
            }
            for row in 1..n {
                let v = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                op.sub[row] = v;
                op.sup[row - 1] = v.conj();
            }
            let mut field: Vec<C64> = (0..n)
                .map(|k| {
                    if k == 0 || k == n - 1 {
                        ZERO // edges pinned at zero
                    } else {
                        c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                    }
                })
                .collect();
            let norm0: f64 = field.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let stepper = CrankNicolson::new(&op, 0.05).unwrap();
            for _ in 0..50 {
                let before: f64 = field.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                stepper.step(&mut field);
                let after: f64 = field.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                assert!((after - before).abs() <= 1e-12 * norm0);
            }
        }
    }

    #[test]
    fn gaussian_packet_spreads_analytically() {
        // free complex diffusion d phi/dR = D d^2 phi/dr^2: a Gaussian stays
        // Gaussian with variance sigma0^2 + 2 D R
        let dcoef = c(0.5, 0.3);
        let l = 8.0;
        let n = 801;
        let hr = 2.0 * l / (n as f64 - 1.0);
        let hh = 0.01;
        let steps = 100;
        let sigma0_sq = 1.0;
        let r = |k: usize| -l + k as f64 * hr;
        let mut field: Vec<C64> = (0..n)
            .map(|k| c((-r(k) * r(k) / (2.0 * sigma0_sq)).exp(), 0.0))
            .collect();
        // d phi/dR = i Op phi with Op = -i D d^2/dr^2
        let mut op = BlockTridiagonalOp::zeros(1, n);
        let w = c(0.0, -1.0) * dcoef / c(hr * hr, 0.0);
        for row in 0..n {
            op.diag[row] = -2.0 * w;
            if row > 0 {
                op.sub[row] = w;
            }
            if row + 1 < n {
                op.sup[row] = w;
            }
        }
        let stepper = CrankNicolson::new(&op, hh).unwrap();
        for _ in 0..steps {
            stepper.step(&mut field);
        }
        let sigma_sq = c(sigma0_sq, 0.0) + 2.0 * dcoef * (steps as f64 * hh);
        let mut max_err: f64 = 0.0;
        for k in 0..n {
            let rr = r(k);
            let exact =
                (c(sigma0_sq, 0.0) / sigma_sq).sqrt() * (-c(rr * rr, 0.0) / (2.0 * sigma_sq)).exp();
            max_err = max_err.max((field[k] - exact).norm());
        }
        assert!(max_err < 1e-4, "max error {max_err}");
    }
}
