//! Certified exact rank through modular elimination.
//!
//! `rank mod p` never exceeds the rank over ℚ. The matching upper bound comes
//! from `n − r` kernel vectors reconstructed from residues (CRT plus rational
//! reconstruction) and checked exactly against the integer matrix, so the
//! returned rank is exact. Returns `None` when no certificate was found within
//! the prime budget; callers then fall back to Bareiss elimination.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1u64;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, p);
        }
        a = mul_mod(a, a, p);
        e >>= 1;
    }
    r
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &b in &BASES {
        if n % b == 0 {
            return n == b;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Primes just below 2^62, in decreasing order.
fn primes() -> impl Iterator<Item = u64> {
    let mut c = (1u64 << 62) - 1;
    std::iter::from_fn(move || {
        while !is_prime(c) {
            c -= 2;
        }
        let p = c;
        c -= 2;
        Some(p)
    })
}

fn reduce(v: &BigInt, p: u64) -> u64 {
    let r = v.mod_floor(&BigInt::from(p));
    r.to_u64().expect("residue fits in u64")
}

/// RREF mod p: pivot columns and, for every free column, the kernel vector
/// with a 1 there and 0 at the other free columns.
fn rref_kernel_mod(a: &[Vec<BigInt>], cols: usize, p: u64) -> (Vec<usize>, Vec<Vec<u64>>) {
    let rows = a.len();
    let mut m: Vec<Vec<u64>> = a.iter().map(|r| r.iter().map(|v| reduce(v, p)).collect()).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(piv) = (r..rows).find(|&i| m[i][c] != 0) else {
            continue;
        };
        m.swap(piv, r);
        let inv = pow_mod(m[r][c], p - 2, p);
        for v in m[r].iter_mut().skip(c) {
            *v = mul_mod(*v, inv, p);
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i == r || row[c] == 0 {
                continue;
            }
            let f = row[c];
            for j in c..cols {
                let sub = mul_mod(f, pivot_row[j], p);
                row[j] = (row[j] + p - sub) % p;
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    let kernel = free
        .iter()
        .map(|&f| {
            let mut v = vec![0u64; cols];
            v[f] = 1;
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = (p - m[row][f]) % p;
            }
            v
        })
        .collect();
    (pivots, kernel)
}

/// Rational `n/d` with `n ≡ a·d (mod m)`, `|n|, d ≤ sqrt(m/2)`.
fn rational_reconstruct(a: &BigInt, m: &BigInt) -> Option<(BigInt, BigInt)> {
    let bound = (m / 2u32).sqrt();
    let (mut r0, mut r1) = (m.clone(), a.mod_floor(m));
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while r1 > bound {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        let t2 = &t0 - &q * &t1;
        (r0, r1) = (r1, r2);
        (t0, t1) = (t1, t2);
    }
    if t1.is_zero() || t1.abs() > bound {
        return None;
    }
    if t1.sign() == Sign::Minus {
        Some((-r1, -t1))
    } else {
        Some((r1, t1))
    }
}

/// Exact rank of an integer matrix, or `None` if uncertified after
/// `max_primes` primes.
pub(super) fn certified_rank(a: &[Vec<BigInt>], cols: usize, max_primes: usize) -> Option<usize> {
    let mut pivots_ref: Option<Vec<usize>> = None;
    let mut residues: Vec<Vec<BigInt>> = Vec::new();
    let mut modulus = BigInt::one();

    for p in primes().take(max_primes) {
        let (pivots, kernel) = rref_kernel_mod(a, cols, p);
        match &pivots_ref {
            Some(reference) if pivots.len() < reference.len() => continue,
            Some(reference) if pivots == *reference => {
                let pb = BigInt::from(p);
                for (res_vec, k_vec) in residues.iter_mut().zip(&kernel) {
                    for (res, &k) in res_vec.iter_mut().zip(k_vec) {
                        // CRT: x ≡ res (mod modulus), x ≡ k (mod p).
                        let diff = (BigInt::from(k) - &*res).mod_floor(&pb);
                        let inv = modinv(&modulus.mod_floor(&pb), &pb);
                        let t = (diff * inv).mod_floor(&pb);
                        *res = &*res + &modulus * t;
                    }
                }
                modulus *= &pb;
            }
            _ => {
                // First prime, or a higher rank revealing earlier primes as unlucky.
                pivots_ref = Some(pivots);
                residues = kernel.iter().map(|v| v.iter().map(|&x| BigInt::from(x)).collect()).collect();
                modulus = BigInt::from(p);
            }
        }
        let rank = pivots_ref.as_ref().map(Vec::len).unwrap_or(0);
        if residues.is_empty() {
            // Full column rank mod p certifies full column rank over ℚ.
            return Some(rank);
        }
        if residues.iter().all(|v| verify_kernel_vector(a, v, &modulus)) {
            return Some(rank);
        }
    }
    None
}

fn modinv(a: &BigInt, m: &BigInt) -> BigInt {
    let e = a.extended_gcd(m);
    e.x.mod_floor(m)
}

fn verify_kernel_vector(a: &[Vec<BigInt>], residues: &[BigInt], modulus: &BigInt) -> bool {
    let mut nums = Vec::with_capacity(residues.len());
    let mut dens = Vec::with_capacity(residues.len());
    for r in residues {
        let Some((n, d)) = rational_reconstruct(r, modulus) else {
            return false;
        };
        nums.push(n);
        dens.push(d);
    }
    let l = dens.iter().fold(BigInt::one(), |acc, d| acc.lcm(d));
    let v: Vec<BigInt> = nums.iter().zip(&dens).map(|(n, d)| n * (&l / d)).collect();
    a.iter().all(|row| row.iter().zip(&v).fold(BigInt::zero(), |s, (x, y)| s + x * y).is_zero())
}
