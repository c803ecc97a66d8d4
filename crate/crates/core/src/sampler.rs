//! Seeded draws of complex Gaussian bi-signals.
//!
//! A draw is `z = F w` where `F F* = D` and `w` is a vector of independent
//! circular standard complex normals (`E w w* = I`, `E w w^T = 0`). Samples are
//! generated in fixed-size chunks; chunk `k` reads substream `k` of the seed,
//! so the batch is identical for any number of worker threads.

use std::io::{self, Read, Write};

use nalgebra::SymmetricEigen;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::covariance::{BlockCovariance, PSD_TOL};
use crate::error::{Error, Result};
use crate::hilbert::{CMatrix, C64};
use crate::rng::{complex_normal, substream, PRNG_ID};

/// Samples per substream.
pub const DEFAULT_CHUNK: usize = 4096;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "PCSFT_THREADS";

/// A factor `F` with `F F* = D` for a positive semidefinite `D`, stored
/// row-major. Cholesky when `D` is positive definite, otherwise the clipped
/// eigen factor `V sqrt(max(L, 0))`.
#[derive(Clone, Debug)]
pub struct CovarianceFactor {
    dim: usize,
    lower_triangular: bool,
    entries: Vec<C64>,
}

impl CovarianceFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_lower_triangular(&self) -> bool {
        self.lower_triangular
    }

    pub fn matrix(&self) -> CMatrix {
        CMatrix::from_row_slice(self.dim, self.dim, &self.entries)
    }

    /// `out = F w`.
    #[inline]
    fn apply(&self, w: &[C64], out: &mut [C64]) {
        let n = self.dim;
        for (i, z) in out.iter_mut().enumerate() {
            let row = &self.entries[i * n..(i + 1) * n];
            let end = if self.lower_triangular { i + 1 } else { n };
            *z = row[..end].iter().zip(&w[..end]).map(|(f, x)| f * x).sum();
        }
    }
}

/// Factors a Hermitian positive semidefinite matrix.
pub fn factor_hermitian(m: &CMatrix) -> Result<CovarianceFactor> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(Error::Dimension("covariance must be square and non-empty".into()));
    }
    let eig = SymmetricEigen::new(m.clone());
    let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min_eig < -PSD_TOL {
        return Err(Error::NotPositive { min_eigenvalue: min_eig, min_epsilon: f64::NAN });
    }
    let (f, lower_triangular) = match m.clone().cholesky() {
        Some(ch) => (ch.unpack(), true),
        None => {
            let sqrt_l = eig.eigenvalues.map(|l| C64::new(l.max(0.0).sqrt(), 0.0));
            (&eig.eigenvectors * CMatrix::from_diagonal(&sqrt_l), false)
        }
    };
    let entries = (0..n * n).map(|k| f[(k / n, k % n)]).collect();
    Ok(CovarianceFactor { dim: n, lower_triangular, entries })
}

/// Factor of the assembled covariance.
pub fn factor_covariance(d: &BlockCovariance) -> Result<CovarianceFactor> {
    factor_hermitian(&d.assembled()).map_err(|e| match e {
        Error::NotPositive { min_eigenvalue, .. } => {
            Error::NotPositive { min_eigenvalue, min_epsilon: d.epsilon() - min_eigenvalue }
        }
        e => e,
    })
}

/// Borrowed view of one bi-signal realization.
#[derive(Clone, Copy, Debug)]
pub struct BiSignalRef<'a> {
    pub phi1: &'a [C64],
    pub phi2: &'a [C64],
}

impl BiSignalRef<'_> {
    pub fn to_owned(&self) -> BiSignalSample {
        BiSignalSample { phi1: self.phi1.to_vec(), phi2: self.phi2.to_vec() }
    }
}

/// One realization `(phi1, phi2)` of the bi-signal.
#[derive(Clone, Debug, PartialEq)]
pub struct BiSignalSample {
    pub phi1: Vec<C64>,
    pub phi2: Vec<C64>,
}

impl BiSignalSample {
    pub fn as_ref(&self) -> BiSignalRef<'_> {
        BiSignalRef { phi1: &self.phi1, phi2: &self.phi2 }
    }
}

/// An ordered batch of bi-signal samples stored contiguously, sample-major,
/// with `phi1` modes before `phi2` modes.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    d1: usize,
    d2: usize,
    seed: u64,
    data: Vec<C64>,
}

impl SampleBatch {
    pub fn from_samples(samples: &[BiSignalSample], seed: u64) -> Result<Self> {
        let first = samples.first().ok_or_else(|| Error::Invalid("empty batch".into()))?;
        let (d1, d2) = (first.phi1.len(), first.phi2.len());
        let mut data = Vec::with_capacity(samples.len() * (d1 + d2));
        for s in samples {
            if s.phi1.len() != d1 || s.phi2.len() != d2 {
                return Err(Error::Dimension("samples in a batch must share dimensions".into()));
            }
            data.extend_from_slice(&s.phi1);
            data.extend_from_slice(&s.phi2);
        }
        Ok(SampleBatch { d1, d2, seed, data })
    }

    pub(crate) fn from_raw(d1: usize, d2: usize, seed: u64, data: Vec<C64>) -> Self {
        debug_assert_eq!(data.len() % (d1 + d2), 0);
        SampleBatch { d1, d2, seed, data }
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn prng_id(&self) -> &'static str {
        PRNG_ID
    }

    pub fn len(&self) -> usize {
        self.data.len() / (self.d1 + self.d2)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, k: usize) -> BiSignalRef<'_> {
        let n = self.d1 + self.d2;
        let s = &self.data[k * n..(k + 1) * n];
        BiSignalRef { phi1: &s[..self.d1], phi2: &s[self.d1..] }
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = BiSignalRef<'_>> + '_ {
        (0..self.len()).map(move |k| self.get(k))
    }

    pub fn to_samples(&self) -> Vec<BiSignalSample> {
        self.iter().map(|s| s.to_owned()).collect()
    }

    /// Raw sample-major data, `d1 + d2` entries per sample.
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }
}

/// Draws `count` samples of `N(0, D)` with the default chunk size.
pub fn draw(d: &BlockCovariance, seed: u64, count: usize) -> Result<SampleBatch> {
    draw_chunked(d, seed, count, DEFAULT_CHUNK)
}

/// Draws `count` samples, chunk `k` reading substream `k`. The result depends
/// only on `(d, seed, count, chunk_size)`.
pub fn draw_chunked(d: &BlockCovariance, seed: u64, count: usize, chunk_size: usize) -> Result<SampleBatch> {
    if count == 0 {
        return Err(Error::Invalid("sample count must be at least 1".into()));
    }
    if chunk_size == 0 {
        return Err(Error::Invalid("chunk size must be at least 1".into()));
    }
    let factor = factor_covariance(d)?;
    let n = factor.dim();
    let mut data = vec![C64::new(0.0, 0.0); count * n];
    data.par_chunks_mut(chunk_size * n).enumerate().for_each(|(chunk, buf)| {
        let mut rng = substream(seed, chunk as u64);
        let mut w = vec![C64::new(0.0, 0.0); n];
        for out in buf.chunks_exact_mut(n) {
            w.iter_mut().for_each(|x| *x = complex_normal(&mut rng));
            factor.apply(&w, out);
        }
    });
    Ok(SampleBatch { d1: d.d1(), d2: d.d2(), seed, data })
}

/// Single-component white-noise batch with covariance `epsilon * I`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseBatch {
    dim: usize,
    epsilon: f64,
    seed: u64,
    data: Vec<C64>,
}

impl NoiseBatch {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, k: usize) -> &[C64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }
}

/// Background field: i.i.d. circular complex Gaussian modes of variance
/// `epsilon`.
pub fn draw_background(dim: usize, epsilon: f64, seed: u64, count: usize) -> Result<NoiseBatch> {
    if dim == 0 || count == 0 {
        return Err(Error::Invalid("background needs positive dimension and count".into()));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::Invalid(format!("epsilon must be a nonnegative number, got {epsilon}")));
    }
    let scale = epsilon.sqrt();
    let mut data = vec![C64::new(0.0, 0.0); dim * count];
    data.par_chunks_mut(DEFAULT_CHUNK * dim).enumerate().for_each(|(chunk, buf)| {
        let mut rng = substream(seed, chunk as u64);
        for z in buf.iter_mut() {
            *z = complex_normal(&mut rng) * scale;
        }
    });
    Ok(NoiseBatch { dim, epsilon, seed, data })
}

/// SHA-256 over `(d1, d2, epsilon, assembled entries)` in little-endian order.
pub fn covariance_hash(d: &BlockCovariance) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update((d.d1() as u64).to_le_bytes());
    h.update((d.d2() as u64).to_le_bytes());
    h.update(d.epsilon().to_le_bytes());
    let m = d.assembled();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            h.update(m[(i, j)].re.to_le_bytes());
            h.update(m[(i, j)].im.to_le_bytes());
        }
    }
    h.finalize().into()
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

const MAGIC: &[u8; 8] = b"PCSFTBS1";

/// Provenance header of a binary batch dump.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BatchHeader {
    pub seed: u64,
    pub prng_id: String,
    pub covariance_hash: [u8; 32],
}

/// Writes a batch as: magic `PCSFTBS1`, seed (u64), PRNG id (u32 length +
/// UTF-8), covariance hash (32 bytes), then `[count][d1][d2]` as u64 and the
/// samples as interleaved `re, im` doubles per mode. All little-endian.
pub fn write_batch<W: Write>(mut w: W, batch: &SampleBatch, d: &BlockCovariance) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&batch.seed.to_le_bytes())?;
    let id = batch.prng_id().as_bytes();
    w.write_all(&(id.len() as u32).to_le_bytes())?;
    w.write_all(id)?;
    w.write_all(&covariance_hash(d))?;
    for v in [batch.len(), batch.d1, batch.d2] {
        w.write_all(&(v as u64).to_le_bytes())?;
    }
    for z in &batch.data {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_batch<R: Read>(mut r: R) -> io::Result<(BatchHeader, SampleBatch)> {
    let bad = |msg: &str| io::Error::new(io::ErrorKind::InvalidData, msg.to_string());
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("not a bi-signal batch file"));
    }
    let seed = read_u64(&mut r)?;
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let mut id = vec![0u8; u32::from_le_bytes(len) as usize];
    r.read_exact(&mut id)?;
    let prng_id = String::from_utf8(id).map_err(|_| bad("PRNG id is not UTF-8"))?;
    let mut covariance_hash = [0u8; 32];
    r.read_exact(&mut covariance_hash)?;
    let count = read_u64(&mut r)? as usize;
    let d1 = read_u64(&mut r)? as usize;
    let d2 = read_u64(&mut r)? as usize;
    if d1 == 0 || d2 == 0 {
        return Err(bad("zero component dimension"));
    }
    let total = count.checked_mul(d1 + d2).ok_or_else(|| bad("batch size overflows"))?;
    let mut data = Vec::with_capacity(total);
    for _ in 0..total {
        let re = read_f64(&mut r)?;
        let im = read_f64(&mut r)?;
        data.push(C64::new(re, im));
    }
    Ok((BatchHeader { seed, prng_id, covariance_hash }, SampleBatch { d1, d2, seed, data }))
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> io::Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

/// Worker pool sized by `PCSFT_THREADS`, or hardware parallelism when unset.
pub fn thread_pool_from_env() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Invalid(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Invalid(format!("cannot start worker pool: {e}")))
}
