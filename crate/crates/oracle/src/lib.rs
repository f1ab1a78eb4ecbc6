//! Dense brute-force references for the test suites.
//!
//! Everything here works on the full `M^N` antisymmetric array built from
//! the determinant list of a [`CiTensor`], using nothing but the defining
//! sums. It is slow by design and only meant for small `M` and `N`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use redbasis_core::CiTensor;

/// Full antisymmetric coefficient array, row-major in `(i₁, …, i_N)`.
#[derive(Debug, Clone)]
pub struct DenseTensor {
    pub orbitals: usize,
    pub particles: usize,
    pub data: Vec<f64>,
}

/// Parity of a permutation given as a sequence of distinct values.
pub fn permutation_sign(seq: &[usize]) -> f64 {
    let mut inversions = 0;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Every ordered `len`-tuple over `0..n`, odometer order.
pub fn all_tuples(n: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0; len];
    if len == 0 {
        return vec![Vec::new()];
    }
    loop {
        out.push(cur.clone());
        let mut pos = len;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            cur[pos] += 1;
            if cur[pos] < n {
                break;
            }
            cur[pos] = 0;
        }
    }
}

impl DenseTensor {
    pub fn from_ci(t: &CiTensor) -> Self {
        let (m, n) = (t.orbitals(), t.particles());
        let lookup: BTreeMap<Vec<usize>, f64> =
            t.entries().into_iter().map(|(tuple, v)| (tuple.into_iter().map(|i| i - 1).collect(), v)).collect();
        let scale = 1.0 / factorial(n).sqrt();
        let data = all_tuples(m, n)
            .into_iter()
            .map(|idx| {
                let mut sorted = idx.clone();
                sorted.sort_unstable();
                if sorted.windows(2).any(|w| w[0] == w[1]) {
                    return 0.0;
                }
                lookup.get(&sorted).map_or(0.0, |d| permutation_sign(&idx) * d * scale)
            })
            .collect();
        Self { orbitals: m, particles: n, data }
    }

    fn offset(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.orbitals + i)
    }

    /// Element at a 0-based index tuple.
    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    /// Largest violation of antisymmetry under any adjacent transposition.
    pub fn antisymmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for idx in all_tuples(self.orbitals, self.particles) {
            for a in 0..self.particles.saturating_sub(1) {
                let mut swapped = idx.clone();
                swapped.swap(a, a + 1);
                worst = worst.max((self.get(&idx) + self.get(&swapped)).abs());
            }
        }
        worst
    }

    /// Determinant coefficients `d_K = √N! · c[K]` as a `CiTensor`.
    pub fn to_ci(&self) -> CiTensor {
        let scale = factorial(self.particles).sqrt();
        let entries: Vec<(Vec<usize>, f64)> = all_tuples(self.orbitals, self.particles)
            .into_iter()
            .filter(|idx| idx.windows(2).all(|w| w[0] < w[1]))
            .map(|idx| {
                let v = self.get(&idx) * scale;
                (idx.into_iter().map(|i| i + 1).collect(), v)
            })
            .collect();
        CiTensor::make(self.orbitals, self.particles, &entries).expect("nonzero tensor")
    }

    /// `c'[i] = Σ_j c[j] Π_a U[j_a, i_a]`, one mode at a time.
    pub fn rotate(&self, u: &DMatrix<f64>) -> Self {
        let m = self.orbitals;
        let mut data = self.data.clone();
        for mode in 0..self.particles {
            let stride = m.pow((self.particles - 1 - mode) as u32);
            let mut next = vec![0.0; data.len()];
            for (pos, out) in next.iter_mut().enumerate() {
                let i = (pos / stride) % m;
                let base = pos - i * stride;
                *out = (0..m).map(|j| data[base + j * stride] * u[(j, i)]).sum();
            }
            data = next;
        }
        Self { orbitals: m, particles: self.particles, data }
    }

    /// Squared norm of the part living on the first `kept` orbitals.
    pub fn reduced_norm(&self, kept: usize) -> f64 {
        all_tuples(kept, self.particles).iter().map(|idx| self.get(idx).powi(2)).sum()
    }

    /// `γ[k,l] = N Σ_{I ∈ [kept]^{N−1}} c[k,I] c[l,I]`.
    pub fn rdm1(&self, kept: usize) -> DMatrix<f64> {
        let (m, n) = (self.orbitals, self.particles);
        let rest = all_tuples(kept, n - 1);
        DMatrix::from_fn(m, m, |k, l| {
            n as f64
                * rest
                    .iter()
                    .map(|i| {
                        let mut a = vec![k];
                        a.extend(i);
                        let mut b = vec![l];
                        b.extend(i);
                        self.get(&a) * self.get(&b)
                    })
                    .sum::<f64>()
        })
    }

    /// `pair(p,q,r,s) = N(N−1) Σ_{I ∈ [kept]^{N−2}} c[p,q,I] c[r,s,I]`,
    /// flattened as `((p·M + q)·M + r)·M + s`.
    pub fn rdm2(&self, kept: usize) -> Vec<f64> {
        let (m, n) = (self.orbitals, self.particles);
        let rest = all_tuples(kept, n - 2);
        let mut out = vec![0.0; m.pow(4)];
        for (pos, out) in out.iter_mut().enumerate() {
            let (p, q, r, s) = (pos / (m * m * m), (pos / (m * m)) % m, (pos / m) % m, pos % m);
            let sum: f64 = rest
                .iter()
                .map(|i| {
                    let mut a = vec![p, q];
                    a.extend(i);
                    let mut b = vec![r, s];
                    b.extend(i);
                    self.get(&a) * self.get(&b)
                })
                .sum();
            *out = (n * (n - 1)) as f64 * sum;
        }
        out
    }
}

/// Rotated determinant coefficients from one LU determinant per pair of
/// determinants: `d'_L = Σ_K d_K det U[K, L]`. Returned in the order of
/// [`CiTensor::entries`] of a full tensor (all tuples, lexicographic).
pub fn rotate_by_minors(t: &CiTensor, u: &DMatrix<f64>) -> Vec<(Vec<usize>, f64)> {
    let (m, n) = (t.orbitals(), t.particles());
    let increasing: Vec<Vec<usize>> =
        all_tuples(m, n).into_iter().filter(|idx| idx.windows(2).all(|w| w[0] < w[1])).collect();
    let source: Vec<(Vec<usize>, f64)> =
        t.entries().into_iter().map(|(k, d)| (k.into_iter().map(|i| i - 1).collect(), d)).collect();
    increasing
        .iter()
        .map(|l| {
            let value =
                source.iter().map(|(k, d)| d * DMatrix::from_fn(n, n, |a, b| u[(k[a], l[b])]).determinant()).sum();
            (l.iter().map(|i| i + 1).collect(), value)
        })
        .collect()
}

/// Antisymmetric generator for cross-block parameters `x_(k,l)`, `k < kept ≤ l`.
pub fn generator(orbitals: usize, kept: usize, x: &[f64]) -> DMatrix<f64> {
    assert_eq!(x.len(), kept * (orbitals - kept));
    let mut g = DMatrix::zeros(orbitals, orbitals);
    for k in 0..kept {
        for l in kept..orbitals {
            let v = x[k * (orbitals - kept) + (l - kept)];
            g[(k, l)] = v;
            g[(l, k)] = -v;
        }
    }
    g
}

/// `𝒩(exp(X(x)))` through the dense rotation.
pub fn norm_at(dense: &DenseTensor, kept: usize, x: &[f64]) -> f64 {
    let u = generator(dense.orbitals, kept, x).exp();
    dense.rotate(&u).reduced_norm(kept)
}

/// Central differences of `𝒩` in the cross-block parameters at `X = 0`.
pub fn fd_gradient(t: &CiTensor, kept: usize, h: f64) -> Vec<f64> {
    let dense = DenseTensor::from_ci(t);
    let dim = kept * (t.orbitals() - kept);
    (0..dim)
        .map(|i| {
            let mut plus = vec![0.0; dim];
            let mut minus = vec![0.0; dim];
            plus[i] = h;
            minus[i] = -h;
            (norm_at(&dense, kept, &plus) - norm_at(&dense, kept, &minus)) / (2.0 * h)
        })
        .collect()
}

/// Four-point central second differences of `𝒩` at `X = 0`.
pub fn fd_hessian(t: &CiTensor, kept: usize, h: f64) -> DMatrix<f64> {
    let dense = DenseTensor::from_ci(t);
    let dim = kept * (t.orbitals() - kept);
    let f = |i: usize, si: f64, j: usize, sj: f64| {
        let mut x = vec![0.0; dim];
        x[i] += si * h;
        x[j] += sj * h;
        norm_at(&dense, kept, &x)
    };
    let mut out = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let v = (f(i, 1.0, j, 1.0) - f(i, 1.0, j, -1.0) - f(i, -1.0, j, 1.0) + f(i, -1.0, j, -1.0)) / (4.0 * h * h);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Deterministic generator for test fixtures.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Tensor with coefficients uniform on `[−1, 1)`, normalized.
pub fn random_tensor(orbitals: usize, particles: usize, rng: &mut impl Rng) -> CiTensor {
    let entries: Vec<(Vec<usize>, f64)> = all_tuples(orbitals, particles)
        .into_iter()
        .filter(|idx| idx.windows(2).all(|w| w[0] < w[1]))
        .map(|idx| (idx.into_iter().map(|i| i + 1).collect(), rng.random_range(-1.0..1.0)))
        .collect();
    CiTensor::make(orbitals, particles, &entries).expect("nonzero tensor")
}

/// Rotation with determinant +1 from the QR factor of a random matrix.
pub fn random_orthogonal(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let mut q = a.qr().q();
    if q.determinant() < 0.0 {
        let last = n - 1;
        q.column_mut(last).neg_mut();
    }
    q
}
