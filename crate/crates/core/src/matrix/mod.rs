//! Dense and sparse matrices with uniform block partitioning.
//!
//! The coding pipeline moves whole blocks of the input matrices around, so
//! this module centres on two types:
//!
//! ```text
//!   BlockMatrix            BlockGrid (3 x 2)
//!   +---------+            +----+----+
//!   | dense   |            | B00| B01|
//!   |  or     |  partition +----+----+
//!   | sparse  |  --------> | B10| B11|
//!   | (COO)   |            +----+----+
//!   +---------+            | B20| B21|
//!                          +----+----+
//! ```
//!
//! Sparse storage is canonical coordinate form: triples sorted by
//! `(row, col)`, duplicates summed and exact zeros dropped at construction.
//! Products and linear reductions report how many floating-point operations
//! they performed (a multiply and an add are counted separately, so a dense
//! `r x k` by `k x c` product costs `2*r*k*c`), which the simulator uses to
//! price worker compute time. Reductions keep sparse storage while the
//! result stays at or below half density and densify beyond that.

mod market;

pub use market::{read_matrix_market, read_matrix_market_str, write_matrix_market, write_matrix_market_str};

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Sparse results of products and reductions densify above this fill ratio.
pub const SPARSE_KEEP_RATIO: f64 = 0.5;

// ---------------------------------------------------------------------------
// BlockMatrix
// ---------------------------------------------------------------------------

/// Element storage behind a [`BlockMatrix`].
#[derive(Debug, Clone, PartialEq)]
enum Storage {
    /// Row-major `rows * cols` values.
    Dense(Vec<f64>),
    /// Canonical COO triples: sorted by `(row, col)`, unique, nonzero.
    Sparse(Vec<(usize, usize, f64)>),
}

/// A real matrix in either dense row-major or canonical sparse form.
#[derive(Debug, Clone)]
pub struct BlockMatrix {
    rows: usize,
    cols: usize,
    storage: Storage,
}

/// A matrix product together with the floating-point operations it cost.
#[derive(Debug, Clone)]
pub struct Product {
    /// The resulting matrix.
    pub matrix: BlockMatrix,
    /// Multiplies and adds performed (two per scalar product term).
    pub op_count: u64,
}

impl BlockMatrix {
    /// The all-zero matrix, stored sparse (no entries).
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BlockMatrix {
            rows,
            cols,
            storage: Storage::Sparse(Vec::new()),
        }
    }

    /// The `n x n` identity, stored sparse.
    pub fn identity(n: usize) -> Self {
        BlockMatrix {
            rows: n,
            cols: n,
            storage: Storage::Sparse((0..n).map(|i| (i, i, 1.0)).collect()),
        }
    }

    /// Dense matrix from row-major values; `values.len()` must be `rows * cols`.
    pub fn from_dense(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Parameter {
                name: "values",
                message: format!(
                    "expected {}*{} = {} values, got {}",
                    rows,
                    cols,
                    rows * cols,
                    values.len()
                ),
            });
        }
        Ok(BlockMatrix {
            rows,
            cols,
            storage: Storage::Dense(values),
        })
    }

    /// Sparse matrix from arbitrary triples. Out-of-range indices are
    /// rejected; duplicates are summed and exact-zero results dropped.
    pub fn from_triples(rows: usize, cols: usize, triples: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(r, c, _) in &triples {
            if r >= rows || c >= cols {
                return Err(Error::Parameter {
                    name: "triples",
                    message: format!("entry ({r}, {c}) out of bounds for a {rows}x{cols} matrix"),
                });
            }
        }
        Ok(BlockMatrix {
            rows,
            cols,
            storage: Storage::Sparse(canonicalize(triples)),
        })
    }

    /// Seeded sparse matrix: exactly `round(density * rows * cols)` positions
    /// chosen uniformly without replacement, values i.i.d. uniform on
    /// `[-1, 1]` (exact zeros redrawn so the nonzero count is exact).
    pub fn random_sparse(rows: usize, cols: usize, density: f64, seed: u64) -> Result<Self> {
        if !(density > 0.0 && density <= 1.0) {
            return Err(Error::Parameter {
                name: "density",
                message: format!("must lie in (0, 1], got {density}"),
            });
        }
        let total = rows * cols;
        let target = (density * total as f64).round() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut positions: Vec<usize> = sample_indices(&mut rng, total, target).into_vec();
        positions.sort_unstable();
        let triples = positions
            .into_iter()
            .map(|idx| {
                let mut v = rng.gen_range(-1.0..=1.0);
                while v == 0.0 {
                    v = rng.gen_range(-1.0..=1.0);
                }
                (idx / cols, idx % cols, v)
            })
            .collect();
        Ok(BlockMatrix {
            rows,
            cols,
            storage: Storage::Sparse(triples),
        })
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Total number of entries (`rows * cols`), regardless of storage.
    pub fn entry_count(&self) -> usize {
        self.rows * self.cols
    }

    /// True when the matrix is held in sparse coordinate storage.
    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    /// Number of nonzero entries. For dense storage this counts values, so it
    /// always agrees with the sparse view of the same matrix.
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(v) => v.iter().filter(|x| **x != 0.0).count(),
            Storage::Sparse(t) => t.len(),
        }
    }

    /// Value at `(row, col)`; panics if out of range.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        assert!(row < self.rows && col < self.cols, "index out of range");
        match &self.storage {
            Storage::Dense(v) => v[row * self.cols + col],
            Storage::Sparse(t) => match t.binary_search_by(|&(r, c, _)| (r, c).cmp(&(row, col))) {
                Ok(i) => t[i].2,
                Err(_) => 0.0,
            },
        }
    }

    /// Nonzero entries as `(row, col, value)` in row-major order.
    pub fn iter_nonzero(&self) -> Box<dyn Iterator<Item = (usize, usize, f64)> + '_> {
        match &self.storage {
            Storage::Dense(v) => Box::new(
                v.iter()
                    .enumerate()
                    .filter(|(_, x)| **x != 0.0)
                    .map(|(i, x)| (i / self.cols, i % self.cols, *x)),
            ),
            Storage::Sparse(t) => Box::new(t.iter().copied()),
        }
    }

    /// Row-major dense copy of all values.
    pub fn dense_values(&self) -> Vec<f64> {
        match &self.storage {
            Storage::Dense(v) => v.clone(),
            Storage::Sparse(t) => {
                let mut out = vec![0.0; self.rows * self.cols];
                for &(r, c, v) in t {
                    out[r * self.cols + c] = v;
                }
                out
            }
        }
    }

    /// The same matrix converted to dense storage.
    pub fn to_dense(&self) -> Self {
        BlockMatrix {
            rows: self.rows,
            cols: self.cols,
            storage: Storage::Dense(self.dense_values()),
        }
    }

    /// Transpose, preserving the storage kind.
    pub fn transpose(&self) -> Self {
        match &self.storage {
            Storage::Dense(v) => {
                let mut out = vec![0.0; self.rows * self.cols];
                for r in 0..self.rows {
                    for c in 0..self.cols {
                        out[c * self.rows + r] = v[r * self.cols + c];
                    }
                }
                BlockMatrix {
                    rows: self.cols,
                    cols: self.rows,
                    storage: Storage::Dense(out),
                }
            }
            Storage::Sparse(t) => {
                let mut flipped: Vec<(usize, usize, f64)> =
                    t.iter().map(|&(r, c, v)| (c, r, v)).collect();
                flipped.sort_unstable_by_key(|a| (a.0, a.1));
                BlockMatrix {
                    rows: self.cols,
                    cols: self.rows,
                    storage: Storage::Sparse(flipped),
                }
            }
        }
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        let sum: f64 = match &self.storage {
            Storage::Dense(v) => v.iter().map(|x| x * x).sum(),
            Storage::Sparse(t) => t.iter().map(|&(_, _, v)| v * v).sum(),
        };
        sum.sqrt()
    }

    /// Linear combination `sum_i coeff_i * M_i`. All terms must share one
    /// shape. All-sparse inputs yield a sparse result while it stays at or
    /// below [`SPARSE_KEEP_RATIO`] fill; any dense input forces a dense result.
    pub fn scaled_sum(terms: &[(f64, &BlockMatrix)]) -> Result<Self> {
        let (rows, cols) = match terms.first() {
            Some((_, m)) => (m.rows, m.cols),
            None => {
                return Err(Error::Parameter {
                    name: "terms",
                    message: "scaled_sum needs at least one term".into(),
                })
            }
        };
        for (_, m) in terms {
            if m.rows != rows || m.cols != cols {
                return Err(Error::Shape {
                    context: "scaled_sum",
                    left_rows: rows,
                    left_cols: cols,
                    right_rows: m.rows,
                    right_cols: m.cols,
                });
            }
        }
        if terms.iter().any(|(_, m)| !m.is_sparse()) {
            let mut acc = vec![0.0; rows * cols];
            for (coeff, m) in terms {
                match &m.storage {
                    Storage::Dense(v) => {
                        for (a, x) in acc.iter_mut().zip(v) {
                            *a += coeff * x;
                        }
                    }
                    Storage::Sparse(t) => {
                        for &(r, c, v) in t {
                            acc[r * cols + c] += coeff * v;
                        }
                    }
                }
            }
            Ok(BlockMatrix {
                rows,
                cols,
                storage: Storage::Dense(acc),
            })
        } else {
            let mut map = std::collections::BTreeMap::new();
            for (coeff, m) in terms {
                for (r, c, v) in m.iter_nonzero() {
                    *map.entry((r, c)).or_insert(0.0) += coeff * v;
                }
            }
            let triples: Vec<(usize, usize, f64)> = map
                .into_iter()
                .filter(|&(_, v)| v != 0.0)
                .map(|((r, c), v)| (r, c, v))
                .collect();
            Ok(from_accumulated_sparse(rows, cols, triples))
        }
    }
}

/// Semantic equality: same shape and the same values, regardless of storage.
impl PartialEq for BlockMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.dense_values() == other.dense_values()
    }
}

/// Sort triples, sum duplicates, drop exact zeros.
fn canonicalize(mut triples: Vec<(usize, usize, f64)>) -> Vec<(usize, usize, f64)> {
    triples.sort_unstable_by_key(|a| (a.0, a.1));
    let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(triples.len());
    for (r, c, v) in triples {
        match out.last_mut() {
            Some(last) if last.0 == r && last.1 == c => last.2 += v,
            _ => out.push((r, c, v)),
        }
    }
    out.retain(|&(_, _, v)| v != 0.0);
    out
}

/// Wrap already-canonical triples, densifying above the keep ratio.
fn from_accumulated_sparse(rows: usize, cols: usize, triples: Vec<(usize, usize, f64)>) -> BlockMatrix {
    let m = BlockMatrix {
        rows,
        cols,
        storage: Storage::Sparse(triples),
    };
    if m.nnz() as f64 > SPARSE_KEEP_RATIO * (rows * cols) as f64 {
        m.to_dense()
    } else {
        m
    }
}

// ---------------------------------------------------------------------------
// Products
// ---------------------------------------------------------------------------

/// `X * Y` with an operation count.
pub fn multiply(x: &BlockMatrix, y: &BlockMatrix) -> Result<Product> {
    if x.cols != y.rows {
        return Err(Error::Shape {
            context: "multiply",
            left_rows: x.rows,
            left_cols: x.cols,
            right_rows: y.rows,
            right_cols: y.cols,
        });
    }
    Ok(product_impl(x, y, false))
}

/// `X^T * Y` with an operation count, without materializing `X^T`.
pub fn transpose_multiply(x: &BlockMatrix, y: &BlockMatrix) -> Result<Product> {
    if x.rows != y.rows {
        return Err(Error::Shape {
            context: "transpose_multiply",
            left_rows: x.rows,
            left_cols: x.cols,
            right_rows: y.rows,
            right_cols: y.cols,
        });
    }
    Ok(product_impl(x, y, true))
}

/// Shared product kernel. With `transposed` the left operand is read as
/// `X^T`, i.e. output row `i` draws from column `i` of `X`.
fn product_impl(x: &BlockMatrix, y: &BlockMatrix, transposed: bool) -> Product {
    let out_rows = if transposed { x.cols } else { x.rows };
    let out_cols = y.cols;
    let inner = y.rows;
    let mut acc = vec![0.0; out_rows * out_cols];
    let mut op_count: u64 = 0;

    match (&x.storage, &y.storage) {
        (Storage::Dense(xv), Storage::Dense(yv)) => {
            // Reference triple loop; every (i, k, j) cell costs one multiply
            // and one add.
            for i in 0..out_rows {
                for k in 0..inner {
                    let xik = if transposed {
                        xv[k * x.cols + i]
                    } else {
                        xv[i * x.cols + k]
                    };
                    let yrow = &yv[k * out_cols..(k + 1) * out_cols];
                    let arow = &mut acc[i * out_cols..(i + 1) * out_cols];
                    for (a, yv) in arow.iter_mut().zip(yrow) {
                        *a += xik * yv;
                    }
                }
            }
            op_count = 2 * (out_rows * inner * out_cols) as u64;
        }
        (Storage::Sparse(xt), _) => {
            // Drive by X's nonzeros; pull matching rows of Y.
            let yrows = RowView::new(y);
            for &(xr, xc, xv) in xt {
                let (i, k) = if transposed { (xc, xr) } else { (xr, xc) };
                for (j, yv) in yrows.row(k) {
                    acc[i * out_cols + j] += xv * yv;
                    op_count += 2;
                }
            }
        }
        (Storage::Dense(xv), Storage::Sparse(yt)) => {
            // Drive by Y's nonzeros; scale a full column of X into the output.
            for &(k, j, yv) in yt {
                for i in 0..out_rows {
                    let xik = if transposed {
                        xv[k * x.cols + i]
                    } else {
                        xv[i * x.cols + k]
                    };
                    acc[i * out_cols + j] += xik * yv;
                    op_count += 2;
                }
            }
        }
    }

    let matrix = if x.is_sparse() && y.is_sparse() {
        let triples = acc
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i / out_cols, i % out_cols, *v))
            .collect();
        from_accumulated_sparse(out_rows, out_cols, triples)
    } else {
        BlockMatrix {
            rows: out_rows,
            cols: out_cols,
            storage: Storage::Dense(acc),
        }
    };
    Product { matrix, op_count }
}

/// Sparse-or-dense row access used by the product kernel.
enum RowView<'a> {
    Dense { values: &'a [f64], cols: usize },
    Sparse { triples: &'a [(usize, usize, f64)], starts: Vec<usize> },
}

impl<'a> RowView<'a> {
    fn new(m: &'a BlockMatrix) -> Self {
        match &m.storage {
            Storage::Dense(v) => RowView::Dense {
                values: v,
                cols: m.cols,
            },
            Storage::Sparse(t) => {
                // starts[r]..starts[r+1] indexes row r's triples.
                let mut starts = vec![0usize; m.rows + 1];
                for &(r, _, _) in t {
                    starts[r + 1] += 1;
                }
                for r in 0..m.rows {
                    starts[r + 1] += starts[r];
                }
                RowView::Sparse { triples: t, starts }
            }
        }
    }

    fn row(&self, r: usize) -> Box<dyn Iterator<Item = (usize, f64)> + '_> {
        match self {
            RowView::Dense { values, cols } => {
                Box::new(values[r * cols..(r + 1) * cols].iter().copied().enumerate())
            }
            RowView::Sparse { triples, starts } => Box::new(
                triples[starts[r]..starts[r + 1]]
                    .iter()
                    .map(|&(_, c, v)| (c, v)),
            ),
        }
    }
}

// ---------------------------------------------------------------------------
// BlockGrid
// ---------------------------------------------------------------------------

/// A matrix cut into a uniform grid of equally sized blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGrid {
    block_rows: usize,
    block_cols: usize,
    block_height: usize,
    block_width: usize,
    blocks: Vec<BlockMatrix>,
}

/// Split `m` into `block_rows x block_cols` equal blocks. Both dimensions
/// must divide evenly; blocks inherit the source's storage kind.
pub fn partition_grid(m: &BlockMatrix, block_rows: usize, block_cols: usize) -> Result<BlockGrid> {
    if block_rows == 0 || !m.rows.is_multiple_of(block_rows) {
        return Err(Error::Partition {
            axis: "rows",
            len: m.rows,
            parts: block_rows,
        });
    }
    if block_cols == 0 || !m.cols.is_multiple_of(block_cols) {
        return Err(Error::Partition {
            axis: "cols",
            len: m.cols,
            parts: block_cols,
        });
    }
    let bh = m.rows / block_rows;
    let bw = m.cols / block_cols;
    let blocks = match &m.storage {
        Storage::Dense(v) => {
            let mut blocks = Vec::with_capacity(block_rows * block_cols);
            for br in 0..block_rows {
                for bc in 0..block_cols {
                    let mut vals = Vec::with_capacity(bh * bw);
                    for r in 0..bh {
                        let base = (br * bh + r) * m.cols + bc * bw;
                        vals.extend_from_slice(&v[base..base + bw]);
                    }
                    blocks.push(BlockMatrix {
                        rows: bh,
                        cols: bw,
                        storage: Storage::Dense(vals),
                    });
                }
            }
            blocks
        }
        Storage::Sparse(t) => {
            let mut buckets: Vec<Vec<(usize, usize, f64)>> =
                vec![Vec::new(); block_rows * block_cols];
            for &(r, c, v) in t {
                let (br, bc) = (r / bh, c / bw);
                buckets[br * block_cols + bc].push((r % bh, c % bw, v));
            }
            buckets
                .into_iter()
                .map(|mut b| {
                    // Global (row, col) order restricted to a block is already
                    // sorted by local row; re-sort to restore column order
                    // across the block boundary.
                    b.sort_unstable_by_key(|a| (a.0, a.1));
                    BlockMatrix {
                        rows: bh,
                        cols: bw,
                        storage: Storage::Sparse(b),
                    }
                })
                .collect()
        }
    };
    Ok(BlockGrid {
        block_rows,
        block_cols,
        block_height: bh,
        block_width: bw,
        blocks,
    })
}

impl BlockGrid {
    /// Assemble a grid from row-major blocks, which must all share one shape.
    pub fn from_blocks(
        block_rows: usize,
        block_cols: usize,
        blocks: Vec<BlockMatrix>,
    ) -> Result<Self> {
        if blocks.len() != block_rows * block_cols || blocks.is_empty() {
            return Err(Error::Parameter {
                name: "blocks",
                message: format!(
                    "expected {}*{} = {} blocks, got {}",
                    block_rows,
                    block_cols,
                    block_rows * block_cols,
                    blocks.len()
                ),
            });
        }
        let (bh, bw) = (blocks[0].rows, blocks[0].cols);
        for b in &blocks {
            if b.rows != bh || b.cols != bw {
                return Err(Error::Shape {
                    context: "BlockGrid::from_blocks",
                    left_rows: bh,
                    left_cols: bw,
                    right_rows: b.rows,
                    right_cols: b.cols,
                });
            }
        }
        Ok(BlockGrid {
            block_rows,
            block_cols,
            block_height: bh,
            block_width: bw,
            blocks,
        })
    }

    /// Grid height in blocks.
    pub fn block_rows(&self) -> usize {
        self.block_rows
    }

    /// Grid width in blocks.
    pub fn block_cols(&self) -> usize {
        self.block_cols
    }

    /// Shape of every block as `(rows, cols)`.
    pub fn block_shape(&self) -> (usize, usize) {
        (self.block_height, self.block_width)
    }

    /// The block at grid position `(block_row, block_col)`.
    pub fn block(&self, block_row: usize, block_col: usize) -> &BlockMatrix {
        assert!(
            block_row < self.block_rows && block_col < self.block_cols,
            "block index out of range"
        );
        &self.blocks[block_row * self.block_cols + block_col]
    }

    /// Stitch the blocks back into one matrix. The inverse of
    /// [`partition_grid`]: values are copied bit-for-bit and an all-dense or
    /// all-sparse grid keeps its storage kind.
    pub fn assemble(&self) -> BlockMatrix {
        let rows = self.block_rows * self.block_height;
        let cols = self.block_cols * self.block_width;
        if self.blocks.iter().all(|b| b.is_sparse()) {
            let mut triples = Vec::new();
            for br in 0..self.block_rows {
                for bc in 0..self.block_cols {
                    for (r, c, v) in self.block(br, bc).iter_nonzero() {
                        triples.push((br * self.block_height + r, bc * self.block_width + c, v));
                    }
                }
            }
            triples.sort_unstable_by_key(|a| (a.0, a.1));
            BlockMatrix {
                rows,
                cols,
                storage: Storage::Sparse(triples),
            }
        } else {
            let mut vals = vec![0.0; rows * cols];
            for br in 0..self.block_rows {
                for bc in 0..self.block_cols {
                    let block = self.block(br, bc);
                    let dense = block.dense_values();
                    for r in 0..self.block_height {
                        let base = (br * self.block_height + r) * cols + bc * self.block_width;
                        vals[base..base + self.block_width]
                            .copy_from_slice(&dense[r * self.block_width..(r + 1) * self.block_width]);
                    }
                }
            }
            BlockMatrix {
                rows,
                cols,
                storage: Storage::Dense(vals),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
