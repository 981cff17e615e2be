//! Sparse LU of a basis matrix with product-form updates.
//!
//! Factorization is right-looking Gaussian elimination. The next pivot
//! column is the one with the fewest active entries, and within it the row
//! with the fewest entries among those passing a relative threshold test.
//! Basis changes after a factorization are appended as eta columns.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

/// Columns whose largest active entry is at most this are dependent.
const SINGULAR: f64 = 1e-11;
/// Pivot must be at least this fraction of its column's largest entry.
const THRESHOLD: f64 = 0.1;
const NONE: usize = usize::MAX;

/// Basis positions without a pivot, and the rows left uncovered.
#[derive(Debug)]
pub(crate) struct Singular {
    pub positions: Vec<usize>,
    pub rows: Vec<usize>,
}

struct Eta {
    pos: usize,
    pivot: f64,
    /// Off-pivot entries of the entering column.
    entries: Vec<(usize, f64)>,
}

#[derive(Default)]
pub(crate) struct Factor {
    m: usize,
    /// Pivot k eliminates row `l_row[k]` with multipliers `l[l_start[k]..l_start[k+1]]`.
    l_row: Vec<usize>,
    l_start: Vec<usize>,
    l: Vec<(usize, f64)>,
    /// Row `u_row[k]` of U has diagonal `u_diag[k]` at position `u_pos[k]`.
    u_row: Vec<usize>,
    u_pos: Vec<usize>,
    u_diag: Vec<f64>,
    u_start: Vec<usize>,
    u: Vec<(usize, f64)>,
    etas: Vec<Eta>,
}

impl Factor {
    /// Factorizes the `m x m` matrix whose column `p` is `cols[p]` (row, value).
    pub(crate) fn new(m: usize, mut cols: Vec<Vec<(usize, f64)>>) -> Result<Self, Singular> {
        debug_assert_eq!(cols.len(), m);
        let mut row_cols: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (p, col) in cols.iter().enumerate() {
            for &(i, _) in col {
                row_cols[i].push(p);
            }
        }
        let mut row_active = vec![true; m];
        let mut col_active = vec![true; m];
        let mut heap: BinaryHeap<Reverse<(usize, usize)>> = (0..m).map(|p| Reverse((cols[p].len(), p))).collect();
        let mut mark = vec![NONE; m];
        let mut failed = Vec::new();
        let mut f = Factor { m, l_start: vec![0], u_start: vec![0], ..Factor::default() };
        let mut lcol: Vec<(usize, f64)> = Vec::new();

        while let Some(Reverse((count, c))) = heap.pop() {
            if !col_active[c] || cols[c].len() != count {
                continue;
            }
            col_active[c] = false;
            let maxabs = cols[c].iter().map(|e| e.1.abs()).fold(0.0, f64::max);
            if maxabs <= SINGULAR {
                failed.push(c);
                continue;
            }
            let tol = THRESHOLD * maxabs;
            let mut best: Option<(usize, usize, usize)> = None;
            for (k, &(i, a)) in cols[c].iter().enumerate() {
                if a.abs() >= tol {
                    let key = (row_cols[i].len(), i);
                    if best.is_none_or(|(bc, bi, _)| key < (bc, bi)) {
                        best = Some((key.0, i, k));
                    }
                }
            }
            let (_, r, k) = best.expect("column maximum passes the threshold");
            let piv = cols[c][k].1;
            row_active[r] = false;
            lcol.clear();
            lcol.extend(cols[c].iter().filter(|e| e.0 != r && e.1 != 0.0).map(|&(i, a)| (i, a / piv)));

            for j in core::mem::take(&mut row_cols[r]) {
                if !col_active[j] {
                    continue;
                }
                let idx = cols[j].iter().position(|e| e.0 == r).expect("row pattern is exact for active columns");
                let (_, urj) = cols[j].swap_remove(idx);
                if urj != 0.0 {
                    f.u.push((j, urj));
                    if !lcol.is_empty() {
                        for (t, &(i, _)) in cols[j].iter().enumerate() {
                            mark[i] = t;
                        }
                        for &(i, l) in &lcol {
                            match mark[i] {
                                NONE => {
                                    cols[j].push((i, -l * urj));
                                    row_cols[i].push(j);
                                }
                                t => cols[j][t].1 -= l * urj,
                            }
                        }
                        for &(i, _) in cols[j].iter() {
                            mark[i] = NONE;
                        }
                    }
                }
                heap.push(Reverse((cols[j].len(), j)));
            }
            f.u_row.push(r);
            f.u_pos.push(c);
            f.u_diag.push(piv);
            f.u_start.push(f.u.len());
            f.l_row.push(r);
            f.l.extend_from_slice(&lcol);
            f.l_start.push(f.l.len());
            cols[c] = Vec::new();
        }
        if failed.is_empty() {
            Ok(f)
        } else {
            failed.sort_unstable();
            Err(Singular { positions: failed, rows: (0..m).filter(|&i| row_active[i]).collect() })
        }
    }

    /// Solves `B x = b`; `b` is indexed by row, the result by position.
    pub(crate) fn ftran(&self, mut b: Vec<f64>) -> Vec<f64> {
        for k in 0..self.l_row.len() {
            let br = b[self.l_row[k]];
            if br != 0.0 {
                for &(i, l) in &self.l[self.l_start[k]..self.l_start[k + 1]] {
                    b[i] -= l * br;
                }
            }
        }
        let mut x = vec![0.0; self.m];
        for k in (0..self.u_row.len()).rev() {
            let mut v = b[self.u_row[k]];
            for &(p, u) in &self.u[self.u_start[k]..self.u_start[k + 1]] {
                v -= u * x[p];
            }
            x[self.u_pos[k]] = v / self.u_diag[k];
        }
        for eta in &self.etas {
            let xr = x[eta.pos] / eta.pivot;
            x[eta.pos] = xr;
            if xr != 0.0 {
                for &(i, a) in &eta.entries {
                    x[i] -= a * xr;
                }
            }
        }
        x
    }

    /// Solves `y^T B = c^T`; `c` is indexed by position, the result by row.
    pub(crate) fn btran(&self, mut c: Vec<f64>) -> Vec<f64> {
        for eta in self.etas.iter().rev() {
            let s: f64 = eta.entries.iter().map(|&(i, a)| a * c[i]).sum();
            c[eta.pos] = (c[eta.pos] - s) / eta.pivot;
        }
        let mut z = vec![0.0; self.m];
        for k in 0..self.u_row.len() {
            let zr = c[self.u_pos[k]] / self.u_diag[k];
            z[self.u_row[k]] = zr;
            if zr != 0.0 {
                for &(p, u) in &self.u[self.u_start[k]..self.u_start[k + 1]] {
                    c[p] -= u * zr;
                }
            }
        }
        for k in (0..self.l_row.len()).rev() {
            let s: f64 = self.l[self.l_start[k]..self.l_start[k + 1]].iter().map(|&(i, l)| l * z[i]).sum();
            z[self.l_row[k]] -= s;
        }
        z
    }

    /// Records that position `pos` now holds the column whose ftran is `alpha`.
    pub(crate) fn update(&mut self, alpha: &[f64], pos: usize) {
        let entries = alpha.iter().enumerate().filter(|&(i, a)| i != pos && *a != 0.0).map(|(i, &a)| (i, a)).collect();
        self.etas.push(Eta { pos, pivot: alpha[pos], entries });
    }
}
