//! Interference kernels: the all-pairs part of a slot.

use rand::Rng;
use rand_distr::Exp1;

use super::torus::Torus;

/// Positions of the nodes transmitting in the current slot, structure of
/// arrays for the inner loops.
#[derive(Debug, Default, Clone)]
pub(crate) struct Transmitters {
    pub nodes: Vec<usize>,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl Transmitters {
    pub fn clear(&mut self) {
        self.nodes.clear();
        self.xs.clear();
        self.ys.clear();
    }

    pub fn push(&mut self, node: usize, pos: [f64; 2]) {
        self.nodes.push(node);
        self.xs.push(pos[0]);
        self.ys.push(pos[1]);
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }
}

#[derive(Debug, Clone, Copy)]
enum PathLoss {
    Quartic,
    Cubic,
    General(f64),
}

/// Distance-dependent part of the SIR test for one channel and torus.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Kernel {
    torus: Torus,
    /// `θ rᵅ`
    threshold: f64,
    path_loss: PathLoss,
    wide: bool,
}

const BLOCK: usize = 64;

/// Calls `$body` (a generic closure taking the path-loss function) with
/// the `dᵅ` closure matching the kernel, so the inner loops are
/// monomorphised per exponent.
macro_rules! with_pow {
    ($kernel:expr, $body:expr) => {
        match $kernel.path_loss {
            PathLoss::Quartic => $body(|d2: f64| d2 * d2),
            PathLoss::Cubic => $body(|d2: f64| d2 * d2.sqrt()),
            PathLoss::General(h) => $body(|d2: f64| d2.powf(h)),
        }
    };
}

impl Kernel {
    pub fn new(torus: Torus, alpha: f64, threshold: f64) -> Self {
        let path_loss = if alpha == 4.0 {
            PathLoss::Quartic
        } else if alpha == 3.0 {
            PathLoss::Cubic
        } else {
            PathLoss::General(0.5 * alpha)
        };
        #[cfg(target_arch = "x86_64")]
        let wide = std::is_x86_feature_detected!("avx2");
        #[cfg(not(target_arch = "x86_64"))]
        let wide = false;
        Self {
            torus,
            threshold,
            path_loss,
            wide,
        }
    }

    /// `dᵅ` from `d²`.
    #[inline]
    pub fn dist_pow(&self, d2: f64) -> f64 {
        match self.path_loss {
            PathLoss::Quartic => d2 * d2,
            PathLoss::Cubic => d2 * d2.sqrt(),
            PathLoss::General(h) => d2.powf(h),
        }
    }

    /// `dᵅ / (dᵅ + θrᵅ)` from `d²`.
    #[inline]
    pub fn factor(&self, d2: f64) -> f64 {
        let dp = self.dist_pow(d2);
        dp / (dp + self.threshold)
    }

    /// Conditional success probability of a link given the transmitter
    /// positions, with the Rayleigh fades of the signal and of every
    /// interferer integrated out:
    /// `Πⱼ dⱼᵅ / (dⱼᵅ + θrᵅ)` over all transmitters except the two indices in
    /// `skip`.
    ///
    /// The product only decreases, so evaluation stops as soon as it falls
    /// below `floor`; the returned value is then some number `< floor`.
    pub fn survival(&self, txs: &Transmitters, rx: [f64; 2], skip: [usize; 2], floor: f64) -> f64 {
        let n = txs.len();
        let mut prod = 1.0;
        for (lo, hi) in split_around(0, n, skip) {
            let mut i = lo;
            while i < hi {
                let end = (i + BLOCK).min(hi);
                prod *= self.slice_product(&txs.xs[i..end], &txs.ys[i..end], rx);
                if prod < floor {
                    return prod;
                }
                i = end;
            }
        }
        prod
    }

    fn slice_product(&self, xs: &[f64], ys: &[f64], rx: [f64; 2]) -> f64 {
        #[cfg(target_arch = "x86_64")]
        if self.wide {
            // SAFETY: AVX2 support was detected at construction.
            return unsafe { self.slice_product_avx2(xs, ys, rx) };
        }
        self.slice_product_generic(xs, ys, rx)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    unsafe fn slice_product_avx2(&self, xs: &[f64], ys: &[f64], rx: [f64; 2]) -> f64 {
        self.slice_product_generic(xs, ys, rx)
    }

    /// Same operations in the same order on every target, so the wide and
    /// the baseline builds give bit-identical products.
    #[inline(always)]
    fn slice_product_generic(&self, xs: &[f64], ys: &[f64], rx: [f64; 2]) -> f64 {
        with_pow!(self, |pow| block_product(
            xs,
            ys,
            rx,
            self.torus.side(),
            self.threshold,
            pow
        ))
    }

    /// Aggregate interference `Σⱼ ζⱼ dⱼ^(−α)` at `rx` with unit-mean
    /// exponential fades drawn from `rng` in transmitter order (skipped
    /// indices consume no draws).
    pub fn interference<R: Rng>(
        &self,
        txs: &Transmitters,
        rx: [f64; 2],
        skip: [usize; 2],
        rng: &mut R,
    ) -> f64 {
        let mut total = 0.0;
        for j in 0..txs.len() {
            if j == skip[0] || j == skip[1] {
                continue;
            }
            let d2 = self.torus.dist_sq([txs.xs[j], txs.ys[j]], rx);
            let fade: f64 = rng.sample(Exp1);
            total += fade / self.dist_pow(d2);
        }
        total
    }
}

/// `[lo, hi)` with the positions in `skip` cut out, as up to three ranges.
fn split_around(lo: usize, hi: usize, skip: [usize; 2]) -> [(usize, usize); 3] {
    let mut sorted = skip;
    sorted.sort_unstable();
    let mut out = [(0, 0); 3];
    let mut from = lo;
    let mut n = 0;
    for s in sorted {
        if s >= from && s < hi {
            out[n] = (from, s);
            n += 1;
            from = s + 1;
        }
    }
    out[n] = (from, hi);
    out
}

#[inline(always)]
fn block_product<P: Fn(f64) -> f64>(
    xs: &[f64],
    ys: &[f64],
    rx: [f64; 2],
    side: f64,
    s: f64,
    pow: P,
) -> f64 {
    let half = 0.5 * side;
    let wrap = |d: f64| if d > half { side - d } else { d };
    // Numerators and denominators are accumulated separately and divided
    // once every four chunks; this keeps the loop division-free without
    // risking overflow.
    let mut lanes = [1.0f64; 4];
    let mut num = [1.0f64; 4];
    let mut den = [1.0f64; 4];
    let mut xc = xs.chunks_exact(4);
    let mut yc = ys.chunks_exact(4);
    for (k, (x4, y4)) in (&mut xc).zip(&mut yc).enumerate() {
        for l in 0..4 {
            let dx = wrap((x4[l] - rx[0]).abs());
            let dy = wrap((y4[l] - rx[1]).abs());
            let dp = pow(dx * dx + dy * dy);
            num[l] *= dp;
            den[l] *= dp + s;
        }
        if k % 4 == 3 {
            for l in 0..4 {
                lanes[l] *= num[l] / den[l];
                num[l] = 1.0;
                den[l] = 1.0;
            }
        }
    }
    for l in 0..4 {
        lanes[l] *= num[l] / den[l];
    }
    let mut tail = 1.0;
    for (&x, &y) in xc.remainder().iter().zip(yc.remainder()) {
        let dx = wrap((x - rx[0]).abs());
        let dy = wrap((y - rx[1]).abs());
        let dp = pow(dx * dx + dy * dy);
        tail *= dp / (dp + s);
    }
    (lanes[0] * lanes[1]) * (lanes[2] * lanes[3]) * tail
}

/// Scalar variant of [`block_product`] for the handful of points in a row
/// of near cells.
#[inline(always)]
fn short_product<P: Fn(f64) -> f64>(
    xs: &[f64],
    ys: &[f64],
    rx: [f64; 2],
    side: f64,
    s: f64,
    pow: P,
) -> f64 {
    let half = 0.5 * side;
    let mut prod = 1.0;
    for (xc, yc) in xs.chunks(16).zip(ys.chunks(16)) {
        let (mut num, mut den) = (1.0, 1.0);
        for (&x, &y) in xc.iter().zip(yc) {
            let dx = (x - rx[0]).abs();
            let dx = if dx > half { side - dx } else { dx };
            let dy = (y - rx[1]).abs();
            let dy = if dy > half { side - dy } else { dy };
            let dp = pow(dx * dx + dy * dy);
            num *= dp;
            den *= dp + s;
        }
        prod *= num / den;
    }
    prod
}

/// Near cells, in cell units, whose transmitters are multiplied in
/// exactly; everything farther is bounded from cell counts.
const NEAR_CELLS: usize = 2;
/// Second, wider exact zone tried before the full product.
const MID_CELLS: usize = 6;

/// Transmitters bucketed on a square grid, with 2-D prefix counts.
///
/// For a receiver the product splits into a near part over the
/// `(2·NEAR_CELLS + 1)²` cells around it and a far part. The near part is an
/// upper bound on the full product; the near part times a ring-by-ring lower
/// bound on the far part is a lower bound. Most links are settled by one of
/// the two; the rest fall back to the full product, so decisions are the
/// same as with the plain kernel.
#[derive(Debug, Default, Clone)]
pub(crate) struct CellIndex {
    grid: usize,
    cell: f64,
    /// Sorted position of the first transmitter of each cell, cells in
    /// row-major order.
    start: Vec<usize>,
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Sorted position of each transmitter, by transmitter index.
    sorted_at: Vec<usize>,
    prefix: Vec<u32>,
    far_bound: Vec<f64>,
    cell_of: Vec<usize>,
}

impl CellIndex {
    /// Grid with cells of edge about `target`; `false` when the torus is too
    /// small for the split to pay off.
    pub fn rebuild(&mut self, side: f64, target: f64, txs: &Transmitters) -> bool {
        let grid = (side / target).floor();
        if !(grid >= (2 * NEAR_CELLS + 3) as f64 && grid <= 4096.0) {
            self.grid = 0;
            return false;
        }
        let grid = grid as usize;
        self.grid = grid;
        self.cell = side / grid as f64;
        let cells = grid * grid;
        let n = txs.len();
        self.cell_of.clear();
        self.start.clear();
        self.start.resize(cells + 1, 0);
        for j in 0..n {
            let c = self.cell_at([txs.xs[j], txs.ys[j]]);
            self.cell_of.push(c);
            self.start[c + 1] += 1;
        }
        for c in 0..cells {
            self.start[c + 1] += self.start[c];
        }
        self.xs.resize(n, 0.0);
        self.ys.resize(n, 0.0);
        self.sorted_at.resize(n, 0);
        let mut fill = self.start[..cells].to_vec();
        for j in 0..n {
            let c = self.cell_of[j];
            let at = fill[c];
            fill[c] += 1;
            self.sorted_at[j] = at;
            self.xs[at] = txs.xs[j];
            self.ys[at] = txs.ys[j];
        }
        // prefix[(i + 1)(grid + 1) + k + 1] counts the cells [0, i] x [0, k]
        let w = grid + 1;
        self.prefix.clear();
        self.prefix.resize(w * w, 0);
        for i in 0..grid {
            for k in 0..grid {
                let c = i * grid + k;
                let here = (self.start[c + 1] - self.start[c]) as u32;
                self.prefix[(i + 1) * w + k + 1] =
                    here + self.prefix[i * w + k + 1] + self.prefix[(i + 1) * w + k]
                        - self.prefix[i * w + k];
            }
        }
        self.far_bound.clear();
        self.far_bound.resize(cells, f64::NAN);
        true
    }

    #[inline]
    fn coord(&self, x: f64) -> usize {
        ((x / self.cell) as usize).min(self.grid - 1)
    }

    pub fn cell_at(&self, p: [f64; 2]) -> usize {
        self.coord(p[0]) * self.grid + self.coord(p[1])
    }

    /// Exact product over the cells within Chebyshev distance `radius` of
    /// the cell of `rx`, leaving out the transmitters with indices in `skip`.
    pub fn near_product(
        &self,
        kernel: &Kernel,
        rx: [f64; 2],
        skip: [usize; 2],
        radius: usize,
    ) -> f64 {
        with_pow!(kernel, |pow| self
            .near_product_with(kernel, rx, skip, radius, pow))
    }

    #[inline(always)]
    fn near_product_with<P: Fn(f64) -> f64>(
        &self,
        kernel: &Kernel,
        rx: [f64; 2],
        skip: [usize; 2],
        radius: usize,
        pow: P,
    ) -> f64 {
        let g = self.grid;
        let k = radius.min((g - 1) / 2);
        let skip = skip.map(|j| self.sorted_at.get(j).copied().unwrap_or(usize::MAX));
        let (ci, ck) = (self.coord(rx[0]), self.coord(rx[1]));
        // a row of near cells is one or two runs of consecutive cells
        let lo = (ck + g - k) % g;
        let runs = if lo + 2 * k < g {
            [(lo, lo + 2 * k + 1), (0, 0)]
        } else {
            [(lo, g), (0, lo + 2 * k + 1 - g)]
        };
        let side = kernel.torus.side();
        let mut prod = 1.0;
        for di in 0..=2 * k {
            let row = (ci + g - k + di) % g * g;
            for &(a, b) in &runs {
                let (from, to) = (self.start[row + a], self.start[row + b]);
                for (lo, hi) in split_around(from, to, skip) {
                    if lo < hi {
                        prod *= short_product(
                            &self.xs[lo..hi],
                            &self.ys[lo..hi],
                            rx,
                            side,
                            kernel.threshold,
                            &pow,
                        );
                    }
                }
            }
        }
        prod
    }

    /// Lower bound on the product over every transmitter farther than
    /// `radius` cells (Chebyshev) from the receiver cell `cell`. Bounds for
    /// the near radius are cached per cell.
    pub fn far_lower_bound(&mut self, kernel: &Kernel, cell: usize, radius: usize) -> f64 {
        let cache = radius == NEAR_CELLS;
        if cache && !self.far_bound[cell].is_nan() {
            return self.far_bound[cell];
        }
        let (ci, ck) = (cell / self.grid, cell % self.grid);
        let last = self.grid / 2;
        let mut log = 0.0;
        let mut inner = radius;
        let mut inside = self.square_count(ci, ck, inner);
        while inner < last {
            let outer = (inner + 1 + inner / 4).min(last);
            let count = self.square_count(ci, ck, outer);
            // Any point of a cell `m` cells away (Chebyshev) is at least
            // `m − 1` cell edges from any point of the receiver cell.
            let gap = inner as f64 * self.cell;
            log += (count - inside) as f64 * kernel.factor(gap * gap).ln();
            inside = count;
            inner = outer;
        }
        let bound = log.exp();
        if cache {
            self.far_bound[cell] = bound;
        }
        bound
    }

    /// Settles `near·far > floor` where `near·far` is the full product at
    /// `rx`, looking at as few transmitters as possible. Returns `None` when
    /// the bounds cannot decide.
    pub fn decide(
        &mut self,
        kernel: &Kernel,
        rx: [f64; 2],
        skip: [usize; 2],
        floor: f64,
    ) -> Option<bool> {
        let cell = self.cell_at(rx);
        for radius in [NEAR_CELLS, MID_CELLS] {
            if 2 * radius + 1 > self.grid {
                break;
            }
            let near = self.near_product(kernel, rx, skip, radius);
            if near <= floor {
                return Some(false);
            }
            if near * self.far_lower_bound(kernel, cell, radius) > floor {
                return Some(true);
            }
        }
        None
    }

    /// Transmitters in the cells within Chebyshev distance `radius` of
    /// `(ci, ck)`, with wrap-around.
    fn square_count(&self, ci: usize, ck: usize, radius: usize) -> usize {
        let g = self.grid;
        let span = |c: usize| -> [(usize, usize); 2] {
            if 2 * radius + 1 >= g {
                [(0, g), (0, 0)]
            } else {
                let lo = (c + g - radius) % g;
                let hi = lo + 2 * radius + 1;
                if hi <= g {
                    [(lo, hi), (0, 0)]
                } else {
                    [(lo, g), (0, hi - g)]
                }
            }
        };
        let w = g + 1;
        let mut total = 0u32;
        for (i0, i1) in span(ci) {
            for (k0, k1) in span(ck) {
                if i0 < i1 && k0 < k1 {
                    total += self.prefix[i1 * w + k1] + self.prefix[i0 * w + k0]
                        - self.prefix[i0 * w + k1]
                        - self.prefix[i1 * w + k0];
                }
            }
        }
        total as usize
    }
}
