//! Table-driven arithmetic over GF(q) for prime powers q <= 256.
//!
//! Elements are stored as integers in `[0, q)`. For a prime power `p^k` an
//! element is the polynomial whose base-`p` digits are its coefficients
//! (least significant digit = constant term), reduced modulo a fixed monic
//! polynomial of degree `k`. The polynomial id is the base-`p` integer of
//! all its coefficients including the leading one, so `x^2 + x + 1` over
//! GF(2) has id 7. Prime fields use id 0.

use crate::error::{Error, Result};

/// A field element, always in `[0, q)` for the owning [`Field`].
pub type Elem = u8;

#[derive(Clone)]
pub struct Field {
    q: u32,
    p: u32,
    degree: u32,
    poly: u32,
    primitive: Elem,
    add: Vec<Elem>,
    mul: Vec<Elem>,
    neg: Vec<Elem>,
    inv: Vec<Elem>,
    exp: Vec<Elem>,
    log: Vec<u32>,
}

impl std::fmt::Debug for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Field")
            .field("q", &self.q)
            .field("poly", &self.poly)
            .field("primitive", &self.primitive)
            .finish()
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.q == other.q && self.poly == other.poly
    }
}

impl Eq for Field {}

fn is_prime(n: u32) -> bool {
    n >= 2
        && (2..n)
            .take_while(|d| d * d <= n)
            .all(|d| !n.is_multiple_of(d))
}

/// Splits `q` into `(p, k)` with `q = p^k`, or `None` if `q` is not a prime power.
pub fn prime_power(q: u32) -> Option<(u32, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q.is_multiple_of(*d))?;
    let mut rest = q;
    let mut k = 0;
    while rest.is_multiple_of(p) {
        rest /= p;
        k += 1;
    }
    (rest == 1 && is_prime(p)).then_some((p, k))
}

fn digits(mut x: u32, p: u32, k: u32) -> Vec<u32> {
    let mut out = Vec::with_capacity(k as usize);
    for _ in 0..k {
        out.push(x % p);
        x /= p;
    }
    out
}

fn undigits(d: &[u32], p: u32) -> u32 {
    d.iter().rev().fold(0, |acc, &c| acc * p + c)
}

/// Multiplies two residues modulo the monic polynomial whose low coefficients
/// are `low` (length k).
fn poly_mul_mod(a: u32, b: u32, p: u32, low: &[u32]) -> u32 {
    let k = low.len();
    let da = digits(a, p, k as u32);
    let db = digits(b, p, k as u32);
    let mut prod = vec![0u32; 2 * k];
    for (i, &x) in da.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in db.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    // x^k = -(low) so reduce from the top down.
    for top in (k..2 * k).rev() {
        let c = prod[top];
        if c == 0 {
            continue;
        }
        prod[top] = 0;
        for (i, &l) in low.iter().enumerate() {
            let idx = top - k + i;
            prod[idx] = (prod[idx] + (p - (c * l) % p)) % p;
        }
    }
    undigits(&prod[..k], p)
}

/// Multiplicative order of `g` under `mul`, or `None` if it never returns to 1.
fn order_of(g: u32, q: u32, mul: impl Fn(u32, u32) -> u32) -> Option<u32> {
    let mut acc = g;
    for n in 1..q {
        if acc == 1 {
            return Some(n);
        }
        acc = mul(acc, g);
        if acc == 0 {
            return None;
        }
    }
    None
}

/// Smallest monic primitive polynomial of degree `k` over GF(p), as an id.
fn default_polynomial(p: u32, k: u32) -> u32 {
    let q = p.pow(k);
    (0..q)
        .find(|&low| {
            let low_d = digits(low, p, k);
            low_d[0] != 0 && order_of(p, q, |a, b| poly_mul_mod(a, b, p, &low_d)) == Some(q - 1)
        })
        .map(|low| q + low)
        .expect("a primitive polynomial exists for every prime power")
}

impl Field {
    /// Builds GF(q). Extension fields use the smallest primitive polynomial,
    /// whose root `x` (integer `p`) becomes the designated primitive element.
    pub fn new(q: u32) -> Result<Self> {
        let (p, k) = prime_power(q)
            .filter(|_| q <= 256)
            .ok_or(Error::InvalidFieldOrder(q))?;
        if k == 1 {
            Self::build(q, p, 1, 0)
        } else {
            Self::build(q, p, k, default_polynomial(p, k))
        }
    }

    /// Builds GF(q) from an explicit irreducible polynomial id (0 for prime fields).
    pub fn with_polynomial(q: u32, poly: u32) -> Result<Self> {
        let (p, k) = prime_power(q)
            .filter(|_| q <= 256)
            .ok_or(Error::InvalidFieldOrder(q))?;
        if k == 1 {
            if poly != 0 {
                return Err(Error::InvalidPolynomial { p, degree: 1, poly });
            }
            return Self::build(q, p, 1, 0);
        }
        if poly < q || poly >= 2 * q {
            return Err(Error::InvalidPolynomial { p, degree: k, poly });
        }
        Self::build(q, p, k, poly)
    }

    fn build(q: u32, p: u32, k: u32, poly: u32) -> Result<Self> {
        let n = q as usize;
        let low = if k == 1 {
            Vec::new()
        } else {
            digits(poly - q, p, k)
        };
        let raw_mul = |a: u32, b: u32| {
            if k == 1 {
                a * b % p
            } else {
                poly_mul_mod(a, b, p, &low)
            }
        };
        let primitive = (2..q)
            .find(|&g| order_of(g, q, raw_mul) == Some(q - 1))
            .or((q == 2).then_some(1))
            .ok_or(Error::InvalidPolynomial { p, degree: k, poly })?;

        let mut exp = vec![0 as Elem; n - 1];
        let mut log = vec![0u32; n];
        let mut acc = 1u32;
        for (i, e) in exp.iter_mut().enumerate() {
            *e = acc as Elem;
            log[acc as usize] = i as u32;
            acc = raw_mul(acc, primitive);
        }
        if acc != 1 {
            return Err(Error::InvalidPolynomial { p, degree: k, poly });
        }

        let mut add = vec![0 as Elem; n * n];
        let mut mul = vec![0 as Elem; n * n];
        let mut neg = vec![0 as Elem; n];
        let mut inv = vec![0 as Elem; n];
        for a in 0..q {
            let da = digits(a, p, k);
            for b in 0..q {
                let db = digits(b, p, k);
                let s: Vec<u32> = da.iter().zip(&db).map(|(x, y)| (x + y) % p).collect();
                add[(a * q + b) as usize] = undigits(&s, p) as Elem;
                if a != 0 && b != 0 {
                    let l = (log[a as usize] + log[b as usize]) % (q - 1);
                    mul[(a * q + b) as usize] = exp[l as usize];
                }
            }
            let nd: Vec<u32> = da.iter().map(|&x| (p - x) % p).collect();
            neg[a as usize] = undigits(&nd, p) as Elem;
            if a != 0 {
                let l = (q - 1 - log[a as usize]) % (q - 1);
                inv[a as usize] = exp[l as usize];
            }
        }

        Ok(Self {
            q,
            p,
            degree: k,
            poly,
            primitive: primitive as Elem,
            add,
            mul,
            neg,
            inv,
            exp,
            log,
        })
    }

    pub fn order(&self) -> u32 {
        self.q
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Id of the reduction polynomial; 0 for prime fields.
    pub fn polynomial_id(&self) -> u32 {
        self.poly
    }

    pub fn primitive(&self) -> Elem {
        self.primitive
    }

    pub fn contains(&self, x: u32) -> bool {
        x < self.q
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> {
        (0..self.q).map(|x| x as Elem)
    }

    pub fn nonzero(&self) -> impl Iterator<Item = Elem> {
        (1..self.q).map(|x| x as Elem)
    }

    #[inline]
    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        self.add[a as usize * self.q as usize + b as usize]
    }

    #[inline]
    pub fn neg(&self, a: Elem) -> Elem {
        self.neg[a as usize]
    }

    #[inline]
    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        self.mul[a as usize * self.q as usize + b as usize]
    }

    /// Multiplicative inverse; `None` for zero.
    #[inline]
    pub fn inv(&self, a: Elem) -> Option<Elem> {
        (a != 0).then(|| self.inv[a as usize])
    }

    /// `a / b`. Panics if `b` is zero.
    #[inline]
    pub fn div(&self, a: Elem, b: Elem) -> Elem {
        self.mul(a, self.inv(b).expect("division by zero in finite field"))
    }

    pub fn pow(&self, a: Elem, e: u64) -> Elem {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let l = (self.log[a as usize] as u64 * e) % (self.q as u64 - 1);
        self.exp[l as usize]
    }

    /// `acc + a * b`
    #[inline]
    pub fn mul_add(&self, acc: Elem, a: Elem, b: Elem) -> Elem {
        self.add(acc, self.mul(a, b))
    }

    pub fn check(&self, x: Elem) -> Result<Elem> {
        if self.contains(x as u32) {
            Ok(x)
        } else {
            Err(Error::ElementOutOfField {
                value: x as u32,
                q: self.q,
            })
        }
    }
}
