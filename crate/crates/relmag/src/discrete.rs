//! Finite-dimensional realizations of `H(A, V)` on a box grid.
//!
//! Two independent builders discretize the same continuum operator:
//!
//! * [`build_spectral`]: periodic boundary conditions, kinetic part obtained
//!   by sampling the exact symbol on the discrete frequency lattice. With
//!   `V = 0` its spectrum is exactly `{h(xi_k)}`, which pins the builder to
//!   the symbol with no discretization error to argue about. No magnetic
//!   field here: on a torus a vector potential carries flux constraints that
//!   the box builder is free of.
//!
//! * [`build_levy`]: zero-extension (Dirichlet) boundary conditions, kinetic
//!   part assembled from the jump density. Off-diagonal entries are
//!   `-w(y - x) e^{-i Phi(x, y)}` with `w` the per-site jump weight and
//!   `Phi` the Peierls phase of the line-averaged vector potential; a
//!   compensating nearest-neighbor Laplacian carries exactly the second
//!   moment that the sampled jump table misses, pinning the lattice second
//!   moment per axis to the continuum value. The diagonal sums the jump
//!   weights over the full infinite lattice, so paths jumping out of the
//!   box are killed rather than reflected.
//!
//! The compensating Laplacian hops carry the same circulation-rule phase as
//! genuine jumps. That uniformity is deliberate: it makes every magnetic
//! entry a unimodular multiple of the corresponding free entry, so the
//! diamagnetic comparisons hold at the matrix level exactly, not just up to
//! discretization error.

use std::collections::HashMap;
use std::io::{Read, Write};

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::fields::{peierls_phase, GaugeFunction, Potential, VectorPotential};
use crate::kernel::{levy_density_radial, symbol_h};
use crate::{Complex64, Error, Result};

/// Hard cap on the number of sites: dense eigendecompositions beyond this
/// size are not worth the wait on one core.
pub const SITE_CAP: usize = 8192;

/// Uniform grid of `n^d` sites covering the box `[-l, l)^d` with spacing
/// `2l / n`; `l` is the box half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub d: usize,
    pub n: usize,
    /// Box half-width.
    #[serde(alias = "L")]
    pub l: f64,
}

impl Grid {
    /// `n` must be even (the frequency lattice `{-n/2, ..., n/2 - 1}` needs
    /// it) and at least 8; `d` must be 1, 2 or 3.
    pub fn new(d: usize, n: usize, l: f64) -> Result<Grid> {
        if !(1..=3).contains(&d) {
            return Err(Error::domain("grid", format!("dimension {d} not in 1..=3")));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::domain(
                "grid",
                format!("n must be even and >= 8, got {n}"),
            ));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::domain(
                "grid",
                format!("box half-width must be positive, got {l}"),
            ));
        }
        Ok(Grid { d, n, l })
    }

    pub fn site_count(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    /// Full box side length `2l`.
    pub fn length(&self) -> f64 {
        2.0 * self.l
    }

    pub fn spacing(&self) -> f64 {
        self.length() / self.n as f64
    }

    /// Row-major multi-index of the site with flat index `idx`.
    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        let mut m = [0usize; 3];
        let mut rest = idx;
        for axis in (0..self.d).rev() {
            m[axis] = rest % self.n;
            rest /= self.n;
        }
        m
    }

    /// Flat index of a multi-index.
    pub fn flat_index(&self, m: &[usize]) -> usize {
        m[..self.d].iter().fold(0, |acc, &i| acc * self.n + i)
    }

    /// Coordinates of site `idx`, zero-padded to three components.
    pub fn site(&self, idx: usize) -> [f64; 3] {
        let m = self.multi_index(idx);
        let dx = self.spacing();
        let mut x = [0.0; 3];
        for axis in 0..self.d {
            x[axis] = -self.l + m[axis] as f64 * dx;
        }
        x
    }

    fn check_cap(&self, context: &'static str) -> Result<()> {
        let size = self.site_count();
        if size > SITE_CAP {
            Err(Error::GridTooLarge {
                size,
                cap: SITE_CAP,
            }
            .at_stage(context))
        } else {
            Ok(())
        }
    }
}

/// Which discretization produced a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuilderKind {
    Spectral,
    Levy,
}

impl BuilderKind {
    fn tag(self) -> [u8; 8] {
        match self {
            BuilderKind::Spectral => *b"SPECTRAL",
            BuilderKind::Levy => *b"LEVYJUMP",
        }
    }

    fn from_tag(tag: &[u8; 8]) -> Result<BuilderKind> {
        match tag {
            b"SPECTRAL" => Ok(BuilderKind::Spectral),
            b"LEVYJUMP" => Ok(BuilderKind::Levy),
            other => Err(Error::domain(
                "matrix dump",
                format!("unknown builder tag {:?}", String::from_utf8_lossy(other)),
            )),
        }
    }
}

/// A built Hamiltonian with its provenance.
pub struct Operator {
    pub grid: Grid,
    pub kind: BuilderKind,
    pub matrix: Mat<Complex64>,
}

const DUMP_MAGIC: [u8; 8] = *b"RELMAG01";

impl Operator {
    /// Writes the matrix in the crate's binary dump format: an 8-byte magic,
    /// the side length as u64 little-endian, an 8-byte builder tag, 8
    /// reserved zero bytes, then the entries row-major as little-endian
    /// (re, im) f64 pairs.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.matrix.nrows();
        w.write_all(&DUMP_MAGIC)?;
        w.write_all(&(n as u64).to_le_bytes())?;
        w.write_all(&self.kind.tag())?;
        w.write_all(&[0u8; 8])?;
        for i in 0..n {
            for j in 0..n {
                let z = self.matrix[(i, j)];
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
        Ok(())
    }
}

/// A matrix read back from the binary dump format. The grid geometry is not
/// part of the format; only the side length survives the round trip.
pub struct MatrixDump {
    pub kind: BuilderKind,
    pub matrix: Mat<Complex64>,
}

pub fn read_binary<R: Read>(mut r: R) -> Result<MatrixDump> {
    let mut header = [0u8; 32];
    r.read_exact(&mut header)?;
    if header[..8] != DUMP_MAGIC {
        return Err(Error::domain(
            "matrix dump",
            "bad magic; not a matrix dump".to_string(),
        ));
    }
    let side = u64::from_le_bytes(header[8..16].try_into().unwrap()) as usize;
    let mut tag = [0u8; 8];
    tag.copy_from_slice(&header[16..24]);
    let kind = BuilderKind::from_tag(&tag)?;
    if side > SITE_CAP {
        return Err(Error::GridTooLarge {
            size: side,
            cap: SITE_CAP,
        });
    }
    let mut buf = vec![0u8; side * side * 16];
    r.read_exact(&mut buf)?;
    let mut matrix = Mat::<Complex64>::zeros(side, side);
    for i in 0..side {
        for j in 0..side {
            let off = (i * side + j) * 16;
            let re = f64::from_le_bytes(buf[off..off + 8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[off + 8..off + 16].try_into().unwrap());
            matrix[(i, j)] = Complex64::new(re, im);
        }
    }
    Ok(MatrixDump { kind, matrix })
}

/// Exact kinetic spectrum of the periodic discretization: `h(xi_k)` over the
/// frequency lattice `xi_k = (pi / l) k`, `k in {-n/2, ..., n/2 - 1}^d`,
/// sorted ascending.
pub fn kinetic_eigenvalues_periodic(grid: &Grid) -> Vec<f64> {
    let nn = grid.site_count();
    let base = 2.0 * std::f64::consts::PI / grid.length();
    let mut vals = Vec::with_capacity(nn);
    for idx in 0..nn {
        let m = grid.multi_index(idx);
        let mut xi = [0.0; 3];
        for axis in 0..grid.d {
            xi[axis] = base * (m[axis] as i64 - grid.n as i64 / 2) as f64;
        }
        vals.push(symbol_h(&xi[..grid.d]));
    }
    vals.sort_by(f64::total_cmp);
    vals
}

/// Periodic spectral discretization of `h(D) + V`.
///
/// The kinetic matrix is the circulant with symbol samples as eigenvalues:
/// `T[x][y] = (1/n^d) sum_k h(xi_k) cos(2 pi k . (m_x - m_y) / n)`.
pub fn build_spectral(grid: &Grid, v: &Potential) -> Result<Operator> {
    grid.check_cap("spectral builder")?;
    v.validate(grid.d)?;
    let nn = grid.site_count();
    let n = grid.n;
    let base = 2.0 * std::f64::consts::PI / grid.length();

    // Symbol samples and integer frequency vectors.
    let mut freq = Vec::with_capacity(nn);
    let mut h_vals = Vec::with_capacity(nn);
    for idx in 0..nn {
        let m = grid.multi_index(idx);
        let mut k = [0i64; 3];
        let mut xi = [0.0; 3];
        for axis in 0..grid.d {
            k[axis] = m[axis] as i64 - n as i64 / 2;
            xi[axis] = base * k[axis] as f64;
        }
        freq.push(k);
        h_vals.push(symbol_h(&xi[..grid.d]));
    }

    // Hopping coefficients per offset (independent of the box length: the
    // phases 2 pi k . m / n are pure lattice quantities).
    let two_pi_over_n = 2.0 * std::f64::consts::PI / n as f64;
    let mut c = vec![0.0f64; nn];
    for (off_idx, c_entry) in c.iter_mut().enumerate() {
        let off = grid.multi_index(off_idx);
        let mut acc = 0.0;
        for (k, h) in freq.iter().zip(&h_vals) {
            let dot: i64 = (0..grid.d).map(|a| k[a] * off[a] as i64).sum();
            acc += h * (two_pi_over_n * dot as f64).cos();
        }
        *c_entry = acc / nn as f64;
    }

    let mut matrix = Mat::<Complex64>::zeros(nn, nn);
    for x in 0..nn {
        let mx = grid.multi_index(x);
        let sx = grid.site(x);
        for y in 0..nn {
            let my = grid.multi_index(y);
            let mut off = [0usize; 3];
            for axis in 0..grid.d {
                off[axis] = (mx[axis] + n - my[axis]) % n;
            }
            let mut val = c[grid.flat_index(&off[..grid.d])];
            if x == y {
                val += v.eval(&sx[..grid.d]);
            }
            matrix[(x, y)] = Complex64::new(val, 0.0);
        }
    }
    Ok(Operator {
        grid: *grid,
        kind: BuilderKind::Spectral,
        matrix,
    })
}

/// Radius beyond which jump weights are dropped from the diagonal lattice
/// sum; the density decays like `e^{-r}`, so the truncation error is below
/// `1e-17` in relative terms.
const JUMP_TAIL_RADIUS: f64 = 40.0;

/// Jump-weight table over integer offsets, cached by squared norm.
struct JumpWeights {
    d: usize,
    dx: f64,
    cell: f64,
    cache: HashMap<u64, f64>,
}

impl JumpWeights {
    fn new(d: usize, dx: f64) -> JumpWeights {
        JumpWeights {
            d,
            dx,
            cell: dx.powi(d as i32),
            cache: HashMap::new(),
        }
    }

    /// Weight of the jump by `offset` lattice steps (`!= 0`).
    fn weight(&mut self, norm2: u64) -> Result<f64> {
        if let Some(&w) = self.cache.get(&norm2) {
            return Ok(w);
        }
        let r = self.dx * (norm2 as f64).sqrt();
        let w = if r >= 700.0 {
            0.0
        } else {
            levy_density_radial(r, self.d)? * self.cell
        };
        self.cache.insert(norm2, w);
        Ok(w)
    }
}

/// Dirichlet (zero-extension) discretization of the magnetic operator
/// `sqrt(1 + (D - A)^2) - 1 + V` built from the jump density.
pub fn build_levy(grid: &Grid, a: &VectorPotential, v: &Potential) -> Result<Operator> {
    grid.check_cap("jump builder")?;
    a.validate(grid.d)?;
    v.validate(grid.d)?;
    let nn = grid.site_count();
    let d = grid.d;
    let dx = grid.spacing();
    let mut weights = JumpWeights::new(d, dx);

    // Jump weights over the infinite lattice, grouped by squared offset.
    // The enumeration must reach past the box diameter so that in-box hops
    // and the diagonal kill rate come from the same table.
    let tail = JUMP_TAIL_RADIUS.max(grid.length() * (d as f64).sqrt() + dx);
    let reach = (tail / dx).ceil() as i64;
    let mut shell_counts: HashMap<u64, u64> = HashMap::new();
    {
        let reach2 = (reach * reach) as u64;
        let mut visit = |m: &[i64]| {
            let norm2: i64 = m.iter().map(|&c| c * c).sum();
            let norm2 = norm2 as u64;
            if norm2 > 0 && norm2 <= reach2 {
                *shell_counts.entry(norm2).or_insert(0) += 1;
            }
        };
        match d {
            1 => {
                for i in -reach..=reach {
                    visit(&[i]);
                }
            }
            2 => {
                for i in -reach..=reach {
                    for j in -reach..=reach {
                        visit(&[i, j]);
                    }
                }
            }
            _ => {
                for i in -reach..=reach {
                    for j in -reach..=reach {
                        for k in -reach..=reach {
                            visit(&[i, j, k]);
                        }
                    }
                }
            }
        }
    }
    let mut total_weight_terms: Vec<f64> = Vec::with_capacity(shell_counts.len());
    let mut second_moment_terms: Vec<f64> = Vec::with_capacity(shell_counts.len());
    for (&norm2, &count) in shell_counts.iter() {
        let w = weights.weight(norm2)? * count as f64;
        total_weight_terms.push(w);
        second_moment_terms.push(w * norm2 as f64 * dx * dx);
    }
    total_weight_terms.sort_by(|a, b| f64::total_cmp(a, b));
    second_moment_terms.sort_by(|a, b| f64::total_cmp(a, b));
    let total_weight: f64 = total_weight_terms.iter().sum();
    let lattice_m2: f64 = second_moment_terms.iter().sum();

    // Sub-cell jumps and the near-field sampling bias of the table both
    // enter as a compensating nearest-neighbor Laplacian, sized so the
    // lattice second moment per axis is exactly the continuum value 1
    // (the Hessian of the symbol at zero frequency). Matching the moment
    // exactly rather than integrating the density over the central cell
    // removes the leading discretization error of the semigroup.
    let nn_hop = ((d as f64 - lattice_m2) / (2.0 * d as f64 * dx * dx)).max(0.0);

    // Diagonal: total jump weight over the infinite lattice plus the
    // Laplacian's diagonal. Independent of the site; jumps leaving the box
    // are killed, which is exactly the zero-extension boundary condition.
    let diagonal: f64 = total_weight + 2.0 * d as f64 * nn_hop;

    let mut matrix = Mat::<Complex64>::zeros(nn, nn);
    let magnetic = !matches!(a, VectorPotential::Zero);
    for x in 0..nn {
        let mx = grid.multi_index(x);
        let sx = grid.site(x);
        for y in (x + 1)..nn {
            let my = grid.multi_index(y);
            let mut norm2 = 0u64;
            let mut l1 = 0i64;
            for axis in 0..d {
                let delta = my[axis] as i64 - mx[axis] as i64;
                norm2 += (delta * delta) as u64;
                l1 += delta.abs();
            }
            let mut hop = weights.weight(norm2)?;
            if l1 == 1 {
                hop += nn_hop;
            }
            if hop == 0.0 {
                continue;
            }
            let entry = if magnetic {
                let sy = grid.site(y);
                let phi = peierls_phase(a, &sx[..d], &sy[..d]);
                Complex64::new(0.0, -phi).exp() * (-hop)
            } else {
                Complex64::new(-hop, 0.0)
            };
            matrix[(x, y)] = entry;
            matrix[(y, x)] = entry.conj();
        }
        matrix[(x, x)] = Complex64::new(diagonal + v.eval(&sx[..d]), 0.0);
    }
    Ok(Operator {
        grid: *grid,
        kind: BuilderKind::Levy,
        matrix,
    })
}

/// Conjugates `H` by the unitary `diag(e^{i phi(x)})`: the operator side of
/// a gauge transformation.
pub fn gauge_conjugate(h: &Mat<Complex64>, grid: &Grid, gauge: &GaugeFunction) -> Mat<Complex64> {
    let nn = h.nrows();
    let phases: Vec<Complex64> = (0..nn)
        .map(|idx| {
            let x = grid.site(idx);
            Complex64::new(0.0, gauge.eval(&x[..grid.d])).exp()
        })
        .collect();
    let mut out = Mat::<Complex64>::zeros(nn, nn);
    for i in 0..nn {
        for j in 0..nn {
            out[(i, j)] = phases[i] * h[(i, j)] * phases[j].conj();
        }
    }
    out
}

/// Restriction of a matrix to the rows and columns in `keep` (in order).
pub fn principal_submatrix(m: &Mat<Complex64>, keep: &[usize]) -> Mat<Complex64> {
    let k = keep.len();
    let mut out = Mat::<Complex64>::zeros(k, k);
    for (i, &a) in keep.iter().enumerate() {
        for (j, &b) in keep.iter().enumerate() {
            out[(i, j)] = m[(a, b)];
        }
    }
    out
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(m: &Mat<Complex64>) -> Result<Vec<f64>> {
    let mut vals = m
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Full eigendecomposition of a Hermitian matrix.
pub struct Eigen {
    /// Eigenvalues, ascending.
    pub values: Vec<f64>,
    /// Unitary of eigenvectors, columns matching `values`.
    pub vectors: Mat<Complex64>,
}

pub fn eigh(m: &Mat<Complex64>) -> Result<Eigen> {
    let e = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let n = m.nrows();
    let s = e.S();
    let col = s.column_vector();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| f64::total_cmp(&col[i].re, &col[j].re));
    let mut values = Vec::with_capacity(n);
    let mut vectors = Mat::<Complex64>::zeros(n, n);
    let u = e.U();
    for (dst, &src) in order.iter().enumerate() {
        values.push(col[src].re);
        for r in 0..n {
            vectors[(r, dst)] = u[(r, src)];
        }
    }
    Ok(Eigen { values, vectors })
}

impl Eigen {
    /// `f(H) = U f(Lambda) U*` for a real function of a real spectrum.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> Mat<Complex64> {
        let n = self.values.len();
        let mut scaled = Mat::<Complex64>::zeros(n, n);
        for j in 0..n {
            let fj = Complex64::new(f(self.values[j]), 0.0);
            for i in 0..n {
                scaled[(i, j)] = self.vectors[(i, j)] * fj;
            }
        }
        &scaled * self.vectors.adjoint()
    }

    /// Semigroup `e^{-tH}`.
    pub fn semigroup(&self, t: f64) -> Mat<Complex64> {
        self.apply(|lam| (-t * lam).exp())
    }

    /// Resolvent `(H + alpha)^{-1}`; requires `alpha` to clear the bottom of
    /// the spectrum.
    pub fn resolvent(&self, alpha: f64) -> Result<Mat<Complex64>> {
        let floor = self.values.first().copied().unwrap_or(0.0) + alpha;
        if floor <= 0.0 {
            return Err(Error::Singular(format!(
                "H + {alpha} is not positive definite (bottom of spectrum {})",
                floor - alpha
            )));
        }
        Ok(self.apply(|lam| 1.0 / (lam + alpha)))
    }
}

/// Adds `diag` to the diagonal, leaving the rest of the operator alone.
pub fn add_diagonal(op: &Operator, diag: &[f64]) -> Result<Operator> {
    let n = op.matrix.nrows();
    if diag.len() != n {
        return Err(Error::domain(
            "add_diagonal",
            format!("diagonal has {} entries for a {n}-site operator", diag.len()),
        ));
    }
    let mut matrix = op.matrix.clone();
    for (i, &v) in diag.iter().enumerate() {
        matrix[(i, i)] += Complex64::new(v, 0.0);
    }
    Ok(Operator {
        grid: op.grid,
        kind: op.kind,
        matrix,
    })
}

/// `H + V` as a multiplication operator on the grid sites. Lets one kinetic
/// build serve a whole family of potentials, e.g. a coupling scan.
pub fn add_potential(op: &Operator, v: &Potential) -> Result<Operator> {
    v.validate(op.grid.d)?;
    let diag: Vec<f64> = (0..op.grid.site_count())
        .map(|idx| {
            let x = op.grid.site(idx);
            v.eval(&x[..op.grid.d])
        })
        .collect();
    add_diagonal(op, &diag)
}

/// Number of eigenvalues strictly below `threshold`, together with the full
/// ascending spectrum it was counted from.
pub fn eigen_count_below(m: &Mat<Complex64>, threshold: f64) -> Result<(usize, Vec<f64>)> {
    let vals = eigvalsh(m)?;
    let count = vals.partition_point(|&v| v < threshold);
    Ok((count, vals))
}

/// `e^{-tH} u` for a Hermitian `H`, via one eigendecomposition.
pub fn semigroup_apply(m: &Mat<Complex64>, t: f64, u: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if u.len() != n {
        return Err(Error::domain(
            "semigroup_apply",
            format!("vector has {} entries for a {n}-site operator", u.len()),
        ));
    }
    let e = eigh(m)?;
    // coeffs = U* u, damped by e^{-t lambda}, mapped back through U.
    let mut coeff = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..n {
            acc += e.vectors[(r, k)].conj() * u[r];
        }
        coeff[k] = acc * Complex64::new((-t * e.values[k]).exp(), 0.0);
    }
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (r, out_r) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..n {
            acc += e.vectors[(r, k)] * coeff[k];
        }
        *out_r = acc;
    }
    Ok(out)
}

/// Pointwise slack in the distributional absolute-value inequality: the
/// minimum over sites of `Re[sgn(u_x)* (H_A u)_x] - (H_0 |u|)_x`, where
/// `sgn(u) = u / |u|`. For a magnetic operator whose entries dominate the
/// free ones in modulus this is nonnegative up to rounding; a negative
/// return well below `-1e-10` means the pair fails the inequality. `u` must
/// not vanish anywhere.
pub fn kato_inequality_slack(
    h_mag: &Mat<Complex64>,
    h_free: &Mat<Complex64>,
    u: &[Complex64],
) -> Result<f64> {
    let n = h_mag.nrows();
    if u.len() != n || h_free.nrows() != n {
        return Err(Error::domain(
            "kato_inequality_slack",
            "operator and vector sizes disagree".to_string(),
        ));
    }
    if u.iter().any(|z| z.norm() == 0.0) {
        return Err(Error::domain(
            "kato_inequality_slack",
            "test vector must be nonzero at every site".to_string(),
        ));
    }
    let abs_u: Vec<f64> = u.iter().map(|z| z.norm()).collect();
    let mut slack = f64::INFINITY;
    for x in 0..n {
        let mut mag = Complex64::new(0.0, 0.0);
        let mut free = 0.0;
        for y in 0..n {
            mag += h_mag[(x, y)] * u[y];
            free += h_free[(x, y)].re * abs_u[y];
        }
        let sign = u[x] / abs_u[x];
        slack = slack.min((sign.conj() * mag).re - free);
    }
    Ok(slack)
}

/// Largest deviation from Hermitian symmetry, `max |M - M*|` entrywise.
pub fn hermiticity_defect(m: &Mat<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest entrywise distance between two matrices.
pub fn max_entry_distance(a: &Mat<Complex64>, b: &Mat<Complex64>) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

/// Largest violation of the entrywise domination `|a_ij| <= Re(b_ij)`:
/// positive values mean `b` fails to dominate `a` somewhere.
pub fn domination_excess(a: &Mat<Complex64>, b: &Mat<Complex64>) -> f64 {
    let n = a.nrows();
    let mut worst = f64::NEG_INFINITY;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max(a[(i, j)].norm() - b[(i, j)].re);
        }
    }
    worst
}

/// Smallest real part over all entries (positivity checks).
pub fn min_real_entry(m: &Mat<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            worst = worst.min(m[(i, j)].re);
        }
    }
    worst
}

/// Largest row sum of real parts (sub-Markov checks: for a killed semigroup
/// this is the best survival probability and must not exceed 1).
pub fn max_row_sum_real(m: &Mat<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = f64::NEG_INFINITY;
    for i in 0..n {
        let s: f64 = (0..n).map(|j| m[(i, j)].re).sum();
        worst = worst.max(s);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deep_well(d: usize) -> Potential {
        Potential::SquareWell {
            depth: 4.0,
            radius: 1.5,
            center: vec![0.0; d],
        }
    }

    #[test]
    fn grid_indexing_round_trips() {
        let g = Grid::new(3, 8, 4.0).unwrap();
        assert_eq!(g.site_count(), 512);
        assert_eq!(g.spacing(), 1.0);
        for idx in 0..g.site_count() {
            let m = g.multi_index(idx);
            assert_eq!(g.flat_index(&m[..3]), idx);
        }
        let origin = g.site(0);
        assert_eq!(origin, [-4.0, -4.0, -4.0]);
        let last = g.site(511);
        assert_eq!(last, [3.0, 3.0, 3.0]);
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(Grid::new(0, 8, 1.0).is_err());
        assert!(Grid::new(4, 8, 1.0).is_err());
        assert!(Grid::new(1, 9, 1.0).is_err());
        assert!(Grid::new(1, 6, 1.0).is_err());
        assert!(Grid::new(1, 0, 1.0).is_err());
        assert!(Grid::new(1, 8, 0.0).is_err());
        let too_big = Grid::new(2, 128, 10.0).unwrap();
        assert!(matches!(
            build_spectral(&too_big, &Potential::Zero),
            Err(Error::Stage { .. })
        ));
    }

    #[test]
    fn spectral_free_spectrum_is_the_sampled_symbol() {
        for (d, n) in [(1usize, 32usize), (2, 8)] {
            let g = Grid::new(d, n, 12.0).unwrap();
            let op = build_spectral(&g, &Potential::Zero).unwrap();
            assert!(hermiticity_defect(&op.matrix) < 1e-12);
            let got = eigvalsh(&op.matrix).unwrap();
            let want = kinetic_eigenvalues_periodic(&g);
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() < 1e-11, "d={d}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn spectral_well_binds_a_state_within_depth_bounds() {
        let g = Grid::new(1, 64, 24.0).unwrap();
        let v = deep_well(1);
        let op = build_spectral(&g, &v).unwrap();
        let vals = eigvalsh(&op.matrix).unwrap();
        assert!(vals[0] < -1e-3, "expected a bound state, got {}", vals[0]);
        assert!(vals[0] > -4.0, "spectrum must stay above -depth");
    }

    #[test]
    fn levy_free_operator_is_positive_and_dirichlet() {
        let g = Grid::new(1, 64, 16.0).unwrap();
        let op = build_levy(&g, &VectorPotential::Zero, &Potential::Zero).unwrap();
        assert_eq!(hermiticity_defect(&op.matrix), 0.0);
        let vals = eigvalsh(&op.matrix).unwrap();
        assert!(vals[0] > 0.0, "Dirichlet bottom should be positive");

        // A larger box with the same spacing lowers the ground state.
        let g2 = Grid::new(1, 128, 32.0).unwrap();
        let op2 = build_levy(&g2, &VectorPotential::Zero, &Potential::Zero).unwrap();
        let vals2 = eigvalsh(&op2.matrix).unwrap();
        assert!(vals2[0] < vals[0]);
    }

    #[test]
    fn levy_diagonal_dominates_row_sums() {
        let g = Grid::new(2, 10, 8.0).unwrap();
        let op = build_levy(&g, &VectorPotential::Zero, &Potential::Zero).unwrap();
        let nn = g.site_count();
        for i in 0..nn {
            let offdiag: f64 = (0..nn)
                .filter(|&j| j != i)
                .map(|j| op.matrix[(i, j)].norm())
                .sum();
            assert!(
                op.matrix[(i, i)].re >= offdiag - 1e-13,
                "row {i}: diag {} < offdiag sum {offdiag}",
                op.matrix[(i, i)].re
            );
        }
    }

    #[test]
    fn magnetic_entries_are_unimodular_rotations_of_free_entries() {
        let g = Grid::new(2, 8, 6.0).unwrap();
        let free = build_levy(&g, &VectorPotential::Zero, &Potential::Zero).unwrap();
        let mag = build_levy(&g, &VectorPotential::constant_field(0.8), &Potential::Zero).unwrap();
        assert_eq!(hermiticity_defect(&mag.matrix), 0.0);
        let nn = g.site_count();
        let mut saw_phase = false;
        for i in 0..nn {
            for j in 0..nn {
                let dm = (mag.matrix[(i, j)].norm() - free.matrix[(i, j)].norm()).abs();
                assert!(dm < 1e-13, "entry ({i}, {j}): modulus differs by {dm:e}");
                if mag.matrix[(i, j)].im.abs() > 1e-6 {
                    saw_phase = true;
                }
            }
        }
        assert!(saw_phase, "magnetic builder produced a real matrix");
    }

    #[test]
    fn gauge_covariance_holds_to_rounding() {
        let g = Grid::new(2, 8, 6.0).unwrap();
        let a = VectorPotential::constant_field(0.7);
        let phi = GaugeFunction {
            constant: 0.3,
            linear: vec![0.5, -0.2],
            quad: vec![vec![0.4, 0.1], vec![0.1, -0.3]],
        };
        let v = deep_well(2);
        let h_a = build_levy(&g, &a, &v).unwrap();
        let h_gauged = build_levy(&g, &a.clone().gauged(phi.clone()), &v).unwrap();
        let conjugated = gauge_conjugate(&h_a.matrix, &g, &phi);
        let defect = max_entry_distance(&conjugated, &h_gauged.matrix);
        assert!(defect < 1e-12, "gauge defect {defect:e}");
    }

    #[test]
    fn one_dimensional_fields_are_pure_gauge() {
        let g = Grid::new(1, 48, 14.0).unwrap();
        let v = deep_well(1);
        let free = build_levy(&g, &VectorPotential::Zero, &v).unwrap();
        let gauged = VectorPotential::Zero.gauged(GaugeFunction {
            linear: vec![0.9],
            quad: vec![vec![0.6]],
            ..GaugeFunction::default()
        });
        let mag = build_levy(&g, &gauged, &v).unwrap();
        let a = eigvalsh(&free.matrix).unwrap();
        let b = eigvalsh(&mag.matrix).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-11, "{x} vs {y}");
        }
    }

    #[test]
    fn semigroup_is_positivity_preserving_and_submarkov() {
        let g = Grid::new(1, 48, 14.0).unwrap();
        let op = build_levy(&g, &VectorPotential::Zero, &Potential::Zero).unwrap();
        let e = eigh(&op.matrix).unwrap();
        for &t in &[0.1, 1.0, 5.0] {
            let s = e.semigroup(t);
            assert!(min_real_entry(&s) > -1e-12, "t={t}");
            assert!(max_row_sum_real(&s) < 1.0 + 1e-12, "t={t}");
        }
        // Semigroup property.
        let s1 = e.semigroup(0.4);
        let s2 = e.semigroup(0.6);
        let s12 = e.semigroup(1.0);
        let prod = &s1 * &s2;
        assert!(max_entry_distance(&prod, &s12) < 1e-11);
    }

    #[test]
    fn magnetic_semigroup_and_resolvent_are_dominated() {
        let g = Grid::new(2, 8, 6.0).unwrap();
        let free = build_levy(&g, &VectorPotential::Zero, &Potential::Zero).unwrap();
        let mag = build_levy(&g, &VectorPotential::constant_field(1.2), &Potential::Zero).unwrap();
        let ef = eigh(&free.matrix).unwrap();
        let em = eigh(&mag.matrix).unwrap();
        for &t in &[0.3, 2.0] {
            let excess = domination_excess(&em.semigroup(t), &ef.semigroup(t));
            assert!(excess < 1e-12, "semigroup t={t}: excess {excess:e}");
        }
        let alpha = 0.7;
        let excess = domination_excess(
            &em.resolvent(alpha).unwrap(),
            &ef.resolvent(alpha).unwrap(),
        );
        assert!(excess < 1e-12, "resolvent: excess {excess:e}");
        // The magnetic ground state sits above the free one.
        let ef0 = eigvalsh(&free.matrix).unwrap()[0];
        let em0 = eigvalsh(&mag.matrix).unwrap()[0];
        assert!(em0 >= ef0 - 1e-12, "free {ef0}, magnetic {em0}");
    }

    #[test]
    fn eigen_reconstructs_and_resolvent_guards() {
        let g = Grid::new(1, 16, 8.0).unwrap();
        let v = deep_well(1);
        let op = build_spectral(&g, &v).unwrap();
        let e = eigh(&op.matrix).unwrap();
        let recon = e.apply(|lam| lam);
        assert!(max_entry_distance(&recon, &op.matrix) < 1e-11);
        let bottom = e.values[0];
        assert!(e.resolvent(-bottom).is_err());
        assert!(e.resolvent(-bottom - 0.1).is_err());
        assert!(e.resolvent(-bottom + 0.1).is_ok());
    }

    #[test]
    fn dump_round_trips_and_validates() {
        let g = Grid::new(1, 8, 4.0).unwrap();
        let op = build_levy(&g, &VectorPotential::Zero, &deep_well(1)).unwrap();
        let mut buf = Vec::new();
        op.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 32 + 8 * 8 * 16);
        let dump = read_binary(buf.as_slice()).unwrap();
        assert_eq!(dump.kind, BuilderKind::Levy);
        assert_eq!(max_entry_distance(&dump.matrix, &op.matrix), 0.0);

        let mut corrupted = buf.clone();
        corrupted[0] = b'X';
        assert!(read_binary(corrupted.as_slice()).is_err());
        let mut bad_tag = buf.clone();
        bad_tag[16..24].copy_from_slice(b"WHATEVER");
        assert!(read_binary(bad_tag.as_slice()).is_err());
        let truncated = &buf[..buf.len() - 1];
        assert!(read_binary(truncated).is_err());
    }

    #[test]
    fn add_potential_shifts_spectrum_by_a_constant() {
        let g = Grid::new(1, 32, 8.0).unwrap();
        let free = build_spectral(&g, &Potential::Zero).unwrap();
        let base = eigvalsh(&free.matrix).unwrap();
        // A well wider than the box is a constant on every site.
        let shifted = add_potential(
            &free,
            &Potential::SquareWell {
                depth: 2.0,
                radius: 1e6,
                center: vec![],
            },
        )
        .unwrap();
        let vals = eigvalsh(&shifted.matrix).unwrap();
        for (a, b) in base.iter().zip(&vals) {
            assert!((b - (a - 2.0)).abs() < 1e-12, "{a} vs {b}");
        }
        assert!(add_diagonal(&free, &[0.0; 3]).is_err());

        // Same shift through add_diagonal directly.
        let diag = vec![0.5; g.site_count()];
        let up = add_diagonal(&free, &diag).unwrap();
        let vals_up = eigvalsh(&up.matrix).unwrap();
        for (a, b) in base.iter().zip(&vals_up) {
            assert!((b - (a + 0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn eigen_count_below_counts_strictly() {
        let mut m = Mat::<Complex64>::zeros(4, 4);
        for (i, v) in [-2.0, -1.0, 0.0, 1.0].into_iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        let (count, vals) = eigen_count_below(&m, 0.0).unwrap();
        assert_eq!(count, 2);
        assert_eq!(vals.len(), 4);
        assert_eq!(eigen_count_below(&m, -2.0).unwrap().0, 0);
        assert_eq!(eigen_count_below(&m, 10.0).unwrap().0, 4);
    }

    #[test]
    fn semigroup_apply_matches_kernel_convolution() {
        use crate::kernel::free_kernel_radial;
        use crate::quadrature::composite_gl;

        let g = Grid::new(1, 256, 6.0).unwrap();
        let op = build_levy(&g, &VectorPotential::Zero, &Potential::Zero).unwrap();
        let u: Vec<Complex64> = (0..g.site_count())
            .map(|idx| Complex64::new((-g.site(idx)[0].powi(2)).exp(), 0.0))
            .collect();
        let t = 1.0;
        let applied = semigroup_apply(&op.matrix, t, &u).unwrap();

        let mut worst = 0.0f64;
        for idx in [g.n / 2, g.n / 2 + 7, g.n / 2 - 13] {
            let x = g.site(idx)[0];
            let oracle = composite_gl(
                |y| free_kernel_radial(t, (x - y).abs(), 1).unwrap() * (-y * y).exp(),
                -g.l,
                g.l,
                160,
                8,
            );
            let got = applied[idx].re;
            worst = worst.max((got - oracle).abs());
            assert!(applied[idx].im.abs() < 1e-14);
        }
        assert!(worst < 1e-3, "worst semigroup error {worst:e}");

        assert!(semigroup_apply(&op.matrix, t, &u[..5]).is_err());
    }

    #[test]
    fn absolute_value_inequality_holds_entrywise() {
        use rand::{Rng, SeedableRng};
        let g = Grid::new(2, 8, 4.0).unwrap();
        let v = deep_well(2);
        let free = build_levy(&g, &VectorPotential::Zero, &v).unwrap();
        let mag = build_levy(&g, &VectorPotential::constant_field(0.9), &v).unwrap();

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let u: Vec<Complex64> = (0..g.site_count())
            .map(|_| {
                let r = 0.2 + rng.random::<f64>();
                let theta = 2.0 * std::f64::consts::PI * rng.random::<f64>();
                Complex64::new(r * theta.cos(), r * theta.sin())
            })
            .collect();
        let slack = kato_inequality_slack(&mag.matrix, &free.matrix, &u).unwrap();
        assert!(slack > -1e-10, "inequality violated by {slack:e}");

        // For the free pair and a positive vector the bound is an identity.
        let ones = vec![Complex64::new(1.0, 0.0); g.site_count()];
        let zero_slack = kato_inequality_slack(&free.matrix, &free.matrix, &ones).unwrap();
        assert_eq!(zero_slack, 0.0);

        let mut with_zero = u;
        with_zero[3] = Complex64::new(0.0, 0.0);
        assert!(kato_inequality_slack(&mag.matrix, &free.matrix, &with_zero).is_err());
    }
}
