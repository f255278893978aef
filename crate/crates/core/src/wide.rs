//! Exact comparison of `a * b` against `c * d` for `u128 x u64` products.

use core::cmp::Ordering;

/// 192-bit product as `(high, low)` with `low` holding the bottom 128 bits.
fn mul(a: u128, b: u64) -> (u64, u128) {
    let b = u128::from(b);
    let lo = (a & u128::from(u64::MAX)) * b;
    let hi = (a >> 64) * b;
    let (low, carry) = lo.overflowing_add(hi << 64);
    let high = (hi >> 64) as u64 + u64::from(carry);
    (high, low)
}

pub(crate) fn cmp_products(a: u128, b: u64, c: u128, d: u64) -> Ordering {
    mul(a, b).cmp(&mul(c, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn matches_bignum(a: u128, b: u64, c: u128, d: u64) {
            let lhs = BigUint::from(a) * BigUint::from(b);
            let rhs = BigUint::from(c) * BigUint::from(d);
            prop_assert_eq!(cmp_products(a, b, c, d), lhs.cmp(&rhs));
        }
    }

    #[test]
    fn extremes() {
        assert_eq!(cmp_products(u128::MAX, u64::MAX, u128::MAX, u64::MAX), Ordering::Equal);
        assert_eq!(cmp_products(u128::MAX, u64::MAX, u128::MAX, u64::MAX - 1), Ordering::Greater);
        assert_eq!(cmp_products(0, u64::MAX, 1, 1), Ordering::Less);
    }
}
