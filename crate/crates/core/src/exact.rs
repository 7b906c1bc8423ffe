//! Exact floating-point accumulation.
//!
//! [`ExactSum`] keeps the running sum of `f64` values as a wide fixed-point
//! integer whose least significant bit is 2^-1074, the smallest subnormal.
//! Every finite double is an integer multiple of that unit, so additions and
//! removals are exact and [`ExactSum::value`] returns the correctly rounded
//! (round-half-to-even) sum, independent of the order in which values arrived.

const LIMB_BITS: u32 = 32;
const LIMB_MASK: u128 = (1 << LIMB_BITS) - 1;
/// 68 limbs of 32 bits span 2^-1074 .. 2^1102, enough for the largest double
/// plus 78 bits of carry headroom.
const LIMBS: usize = 68;
/// Lazy carries: every limb moves by less than 2^32 per operation, so 2^30
/// operations cannot overflow an `i64` limb.
const NORMALIZE_EVERY: u32 = 1 << 30;

#[derive(Clone)]
pub struct ExactSum {
    limbs: [i64; LIMBS],
    pending: u32,
    /// Sum of non-finite inputs; poisons the result when not zero.
    nonfinite: f64,
}

impl Default for ExactSum {
    fn default() -> Self {
        Self::new()
    }
}

impl std::fmt::Debug for ExactSum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_tuple("ExactSum").field(&self.value()).finish()
    }
}

impl ExactSum {
    pub fn new() -> Self {
        Self {
            limbs: [0; LIMBS],
            pending: 0,
            nonfinite: 0.0,
        }
    }

    pub fn add(&mut self, x: f64) {
        self.accumulate(x, 1);
    }

    pub fn sub(&mut self, x: f64) {
        self.accumulate(x, -1);
    }

    fn accumulate(&mut self, x: f64, sign: i64) {
        if !x.is_finite() {
            self.nonfinite += sign as f64 * x;
            return;
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -sign } else { sign };
        let exp_bits = ((bits >> 52) & 0x7ff) as u32;
        let frac = bits & ((1u64 << 52) - 1);
        // x = mant * 2^(shift - 1074)
        let (mant, shift) = if exp_bits == 0 {
            (frac, 0)
        } else {
            (frac | (1u64 << 52), exp_bits - 1)
        };
        if mant == 0 {
            return;
        }
        let k = (shift / LIMB_BITS) as usize;
        let v = (mant as u128) << (shift % LIMB_BITS);
        self.limbs[k] += sign * (v & LIMB_MASK) as i64;
        self.limbs[k + 1] += sign * ((v >> LIMB_BITS) & LIMB_MASK) as i64;
        self.limbs[k + 2] += sign * (v >> (2 * LIMB_BITS)) as i64;
        self.pending += 1;
        if self.pending >= NORMALIZE_EVERY {
            normalize(&mut self.limbs);
            self.pending = 0;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.nonfinite == 0.0 && self.limbs.iter().all(|&l| l == 0)
    }

    /// Correctly rounded value of the exact sum.
    pub fn value(&self) -> f64 {
        if self.nonfinite != 0.0 || self.nonfinite.is_nan() {
            return self.nonfinite;
        }
        let mut limbs = self.limbs;
        normalize(&mut limbs);
        let negative = limbs[LIMBS - 1] < 0;
        if negative {
            for l in limbs.iter_mut() {
                *l = -*l;
            }
            normalize(&mut limbs);
        }
        let Some(hi) = limbs.iter().rposition(|&l| l != 0) else {
            return 0.0;
        };
        let lo = hi.saturating_sub(2);
        let mut top: u128 = 0;
        for j in (lo..=hi).rev() {
            top = (top << LIMB_BITS) | limbs[j] as u128;
        }
        let sticky = limbs[..lo].iter().any(|&l| l != 0);
        let nbits = 128 - top.leading_zeros();
        let (mant, drop) = if nbits <= 53 {
            (top, 0)
        } else {
            let drop = nbits - 53;
            let rem = top & ((1u128 << drop) - 1);
            let half = 1u128 << (drop - 1);
            let mut mant = top >> drop;
            if rem > half || (rem == half && (sticky || mant & 1 == 1)) {
                mant += 1;
            }
            (mant, drop)
        };
        // Fewer than 54 significant bits only happens without sticky bits.
        debug_assert!(nbits > 53 || !sticky);
        let exponent = (lo as i64) * LIMB_BITS as i64 + drop as i64 - 1074;
        if mant == 0 {
            return 0.0;
        }
        let magnitude = mant as f64 * pow2(exponent);
        if negative {
            -magnitude
        } else {
            magnitude
        }
    }
}

fn normalize(limbs: &mut [i64; LIMBS]) {
    for i in 0..LIMBS - 1 {
        let carry = limbs[i] >> LIMB_BITS;
        limbs[i] -= carry << LIMB_BITS;
        limbs[i + 1] += carry;
    }
}

/// 2^e for e >= -1074; saturates to infinity above the double range.
fn pow2(e: i64) -> f64 {
    if e > 1023 {
        f64::INFINITY
    } else if e >= -1022 {
        f64::from_bits(((e + 1023) as u64) << 52)
    } else {
        f64::from_bits(1u64 << (e + 1074))
    }
}

impl std::iter::FromIterator<f64> for ExactSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = ExactSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Correctly rounded sum of a slice.
pub fn exact_sum(values: &[f64]) -> f64 {
    values.iter().copied().collect::<ExactSum>().value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Shewchuk partials with the half-way correction step, as used by
    /// CPython's `math.fsum`. Independent of the fixed-point route above.
    fn fsum(xs: &[f64]) -> f64 {
        let mut partials: Vec<f64> = Vec::new();
        for &x0 in xs {
            let mut x = x0;
            let mut i = 0;
            for j in 0..partials.len() {
                let mut y = partials[j];
                if x.abs() < y.abs() {
                    std::mem::swap(&mut x, &mut y);
                }
                let hi = x + y;
                let lo = y - (hi - x);
                if lo != 0.0 {
                    partials[i] = lo;
                    i += 1;
                }
                x = hi;
            }
            partials.truncate(i);
            partials.push(x);
        }
        let mut n = partials.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = partials[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = partials[n];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            let yr = x - hi;
            if y == yr {
                hi = x;
            }
        }
        hi
    }

    #[test]
    fn simple_values() {
        assert_eq!(exact_sum(&[]), 0.0);
        assert_eq!(exact_sum(&[1.0, 2.0, 3.5]), 6.5);
        assert_eq!(exact_sum(&[0.1, 0.2, 0.3]), 0.6);
        assert_eq!(exact_sum(&[1e100, 1.0, -1e100]), 1.0);
        assert_eq!(
            exact_sum(&[f64::MIN_POSITIVE / 4.0, f64::MIN_POSITIVE / 4.0]),
            f64::MIN_POSITIVE / 2.0
        );
        assert_eq!(exact_sum(&[-2.5, 1.0]), -1.5);
        assert_eq!(exact_sum(&[f64::MAX, -f64::MAX, 3.0]), 3.0);
    }

    #[test]
    fn ties_round_to_even() {
        // 2^53 + 1 is a tie between 2^53 and 2^53 + 2
        let big = 9007199254740992.0;
        assert_eq!(exact_sum(&[big, 1.0]), big);
        assert_eq!(exact_sum(&[big, 1.0, 1e-30]), big + 2.0);
        assert_eq!(exact_sum(&[big + 2.0, 1.0]), big + 4.0);
    }

    #[test]
    fn add_then_remove_returns_to_zero() {
        let xs = [0.3, -7.25e-12, 1e300, 4.0, -0.0];
        let mut s = ExactSum::new();
        for &x in &xs {
            s.add(x);
        }
        for &x in &xs {
            s.sub(x);
        }
        assert!(s.is_zero());
        assert_eq!(s.value(), 0.0);
    }

    #[test]
    fn nonfinite_poisons() {
        let mut s = ExactSum::new();
        s.add(1.0);
        s.add(f64::INFINITY);
        assert_eq!(s.value(), f64::INFINITY);
    }

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![
            -1e3..1e3f64,
            -1.0..1.0f64,
            any::<f64>().prop_filter("finite", |x| x.is_finite() && x.abs() < 1e300),
        ]
    }

    proptest! {
        #[test]
        fn matches_shewchuk(xs in prop::collection::vec(finite(), 0..60)) {
            prop_assert_eq!(exact_sum(&xs), fsum(&xs));
        }

        #[test]
        fn removal_is_exact(xs in prop::collection::vec(-1e6..1e6f64, 1..80), cut in 0usize..80) {
            let cut = cut.min(xs.len());
            let mut s: ExactSum = xs.iter().copied().collect();
            for &x in &xs[..cut] {
                s.sub(x);
            }
            prop_assert_eq!(s.value(), fsum(&xs[cut..]));
        }
    }
}
