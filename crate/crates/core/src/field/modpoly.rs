//! Dense univariate polynomials over a prime field, used only to certify
//! and select field moduli.

/// Coefficients low-degree first, reduced mod `p`, no trailing zeros.
pub(crate) type ModPoly = Vec<u32>;

fn trim(mut a: ModPoly) -> ModPoly {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

fn inv_mod(a: u32, p: u32) -> u32 {
    pow_mod(a, p - 2, p)
}

pub(crate) fn pow_mod(base: u32, mut exp: u32, p: u32) -> u32 {
    let mut acc = 1u64;
    let mut b = (base % p) as u64;
    let m = p as u64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as u32
}

fn rem(a: &[u32], f: &[u32], p: u32) -> ModPoly {
    let mut r: Vec<u64> = a.iter().map(|&c| c as u64).collect();
    let df = f.len() - 1;
    let lead_inv = inv_mod(f[df], p) as u64;
    let m = p as u64;
    while r.len() > df {
        let top = *r.last().unwrap() % m;
        let shift = r.len() - 1 - df;
        if top != 0 {
            let factor = top * lead_inv % m;
            for (i, &fc) in f.iter().enumerate() {
                let sub = factor * fc as u64 % m;
                r[shift + i] = (r[shift + i] + m - sub) % m;
            }
        }
        r.pop();
    }
    trim(r.into_iter().map(|c| (c % m) as u32).collect())
}

fn mul_rem(a: &[u32], b: &[u32], f: &[u32], p: u32) -> ModPoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let m = p as u64;
    let mut prod = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x as u64 * y as u64) % m;
        }
    }
    let prod: Vec<u32> = prod.into_iter().map(|c| c as u32).collect();
    rem(&prod, f, p)
}

fn pow_rem(base: &[u32], mut exp: u64, f: &[u32], p: u32) -> ModPoly {
    let mut acc: ModPoly = vec![1];
    let mut b = rem(base, f, p);
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_rem(&acc, &b, f, p);
        }
        b = mul_rem(&b, &b, f, p);
        exp >>= 1;
    }
    acc
}

fn gcd(a: &[u32], b: &[u32], p: u32) -> ModPoly {
    let mut a = trim(a.to_vec());
    let mut b = trim(b.to_vec());
    while !b.is_empty() {
        let r = rem(&a, &b, p);
        a = b;
        b = r;
    }
    a
}

/// Ben-Or irreducibility test for a monic `f` over F_p.
pub(crate) fn is_irreducible(f: &[u32], p: u32) -> bool {
    let f = trim(f.to_vec());
    let deg = match f.len() {
        0 | 1 => return false,
        n => n - 1,
    };
    if deg == 1 {
        return true;
    }
    let x: ModPoly = vec![0, 1];
    let mut h = x.clone();
    for _ in 0..deg / 2 {
        h = pow_rem(&h, p as u64, &f, p);
        // h - x
        let mut d = h.clone();
        d.resize(d.len().max(2), 0);
        d[1] = (d[1] + p - 1) % p;
        let g = gcd(&f, &trim(d), p);
        if g.len() > 1 {
            return false;
        }
    }
    true
}

/// Smallest monic irreducible of degree `m`, comparing coefficient tuples
/// `(c0, c1, .., c_{m-1})` lexicographically with `c0` most significant.
pub(crate) fn smallest_irreducible(p: u32, m: u32) -> ModPoly {
    let m = m as usize;
    let mut coeffs = vec![0u32; m];
    loop {
        let mut f = coeffs.clone();
        f.push(1);
        if (m == 1 || coeffs[0] != 0) && is_irreducible(&f, p) {
            return f;
        }
        // odometer with the last coefficient fastest
        let mut i = m;
        loop {
            i -= 1;
            coeffs[i] += 1;
            if coeffs[i] < p {
                break;
            }
            coeffs[i] = 0;
            assert!(i > 0, "no irreducible polynomial of degree {m} over F_{p}");
        }
    }
}
