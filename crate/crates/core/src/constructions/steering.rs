//! Exact steering for `M(x_{1-m}, …, x_0) = [x_{1-m}]_1 ⋯ [x_{-1}]_1 B(x_0)` on `ℂ^ℕ`.

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::ConstructionError;
use crate::spaces::RationalVector;

fn check_tuple(m: usize, init: &[RationalVector]) -> Result<(), ConstructionError> {
    if m < 2 {
        return Err(ConstructionError::InvalidParameter(format!("arity {m} < 2")));
    }
    if init.len() != m {
        return Err(ConstructionError::InvalidParameter(format!("{} initial vectors for arity {m}", init.len())));
    }
    Ok(())
}

/// States `x_1, …, x_steps` by direct application of `M`. `init` is ordered
/// `x_{1-m}, …, x_0`.
pub fn forward_iterate_rational(
    m: usize,
    init: &[RationalVector],
    steps: usize,
) -> Result<Vec<RationalVector>, ConstructionError> {
    check_tuple(m, init)?;
    let mut window: Vec<RationalVector> = init.to_vec();
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let scalar: BigRational = window[..m - 1].iter().map(|v| v.get(1)).product();
        let last = &window[m - 1];
        let coords = last.coords.iter().skip(1).map(|c| &scalar * c).collect();
        let next = RationalVector::new(coords);
        window.remove(0);
        window.push(next.clone());
        out.push(next);
    }
    Ok(out)
}

/// `c_k` in `x_k = c_k B^k(x_0)`, from `c_n = c_{n-1} Π_{i=n-m}^{n-2} [x_i]_1`
/// with `[x_i]_1 = c_i [x_0]_{i+1}` for `i ≥ 1`.
pub fn c_k_rational(m: usize, init: &[RationalVector], k: usize) -> Result<BigRational, ConstructionError> {
    check_tuple(m, init)?;
    let x0 = &init[m - 1];
    let mut c = vec![BigRational::one()];
    let first = |t: i64, c: &[BigRational]| -> BigRational {
        if t < 0 {
            init[(m as i64 - 1 + t) as usize].get(1)
        } else if t == 0 {
            x0.get(1)
        } else {
            &c[t as usize] * x0.get(t as usize + 1)
        }
    };
    for n in 1..=k as i64 {
        let mut cn = c[(n - 1) as usize].clone();
        for i in n - m as i64..=n - 2 {
            cn *= first(i, &c);
        }
        c.push(cn);
    }
    Ok(c.swap_remove(k))
}

/// Replaces `x_0` by `trunc_k(x_0) + S^k(z)/c_k`, so that the `k`-th state is
/// exactly `z`. Coordinates `1..=k` of `x_0` (the only ones `c_k` reads) are
/// kept; the rest are discarded so that `c_k B^k` sees `z / c_k` alone.
pub fn steer_target_cn(
    m: usize,
    init: &[RationalVector],
    target: &RationalVector,
    k: usize,
) -> Result<Vec<RationalVector>, ConstructionError> {
    check_tuple(m, init)?;
    if k <= m {
        return Err(ConstructionError::InvalidParameter(format!("k = {k} must exceed the arity {m}")));
    }
    for (slot, v) in init[..m - 1].iter().enumerate() {
        if v.get(1).is_zero() {
            return Err(ConstructionError::InvalidParameter(format!("slot {} has zero first coordinate", slot + 1)));
        }
    }
    let x0 = &init[m - 1];
    if let Some(j) = (1..=k).find(|&j| x0.get(j).is_zero()) {
        return Err(ConstructionError::ZeroCoordinate(j));
    }
    let ck = c_k_rational(m, init, k)?;
    let inv = ck.recip();
    let mut coords: Vec<BigRational> = (1..=k).map(|j| x0.get(j)).collect();
    coords.extend(target.coords.iter().map(|z| z * &inv));
    let mut out = init.to_vec();
    out[m - 1] = RationalVector::new(coords);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn m2_example() {
        let init = [RationalVector::from_ints(&[1]), RationalVector::from_ints(&[1, 1, 1, 1, 1])];
        let target = RationalVector::from_ints(&[7, 0, 0]);
        let steered = steer_target_cn(2, &init, &target, 3).unwrap();
        let states = forward_iterate_rational(2, &steered, 3).unwrap();
        assert_eq!(states[2], target);
    }

    #[test]
    fn zero_target_keeps_short_init() {
        let init = [RationalVector::from_ints(&[2]), RationalVector::from_ints(&[1, 3, -1])];
        let target = RationalVector::from_ints(&[0, 0]);
        let steered = steer_target_cn(2, &init, &target, 3).unwrap();
        assert_eq!(steered[0], init[0]);
        assert_eq!(steered[1].coords[..3], init[1].coords[..]);
        assert!(steered[1].coords[3..].iter().all(Zero::is_zero));
    }

    #[test]
    fn c_k_matches_iteration() {
        let init = [
            RationalVector::new(vec![q(2, 3)]),
            RationalVector::new(vec![q(-5, 2), q(1, 7)]),
            RationalVector::new((1..=12).map(|i| q(i, i + 1)).collect()),
        ];
        let states = forward_iterate_rational(3, &init, 8).unwrap();
        for k in 1..=8 {
            let ck = c_k_rational(3, &init, k).unwrap();
            let expected: Vec<BigRational> = init[2].coords[k..].iter().map(|c| &ck * c).collect();
            assert_eq!(states[k - 1].coords, expected);
        }
    }

    #[test]
    fn m3_unit_first_coordinates_follow_recursion() {
        let m = 3;
        let x0 = RationalVector::new((1..=14).map(|i| q(i + 2, 3)).collect());
        let init = [RationalVector::from_ints(&[1, 9]), RationalVector::from_ints(&[1]), x0.clone()];
        // c_1 = c_2 = 1 here, c_3 = [x_0]_1 … and c_{m+j+1} = c_{j+1}⋯c_{j+m}[x_0]_{j+2}⋯[x_0]_{j+m}
        let mut c: Vec<BigRational> = (0..=m).map(|k| c_k_rational(m, &init, k).unwrap()).collect();
        for j in 0..7 {
            let mut v: BigRational = (j + 1..=j + m).map(|i| c[i].clone()).product();
            for i in j + 2..=j + m {
                v *= x0.get(i);
            }
            c.push(v);
        }
        for (k, ck) in c.iter().enumerate().skip(1) {
            assert_eq!(*ck, c_k_rational(m, &init, k).unwrap(), "k = {k}");
        }
        let target = RationalVector::from_ints(&[3, -4, 0, 1]);
        let steered = steer_target_cn(m, &init, &target, 6).unwrap();
        assert_eq!(forward_iterate_rational(m, &steered, 6).unwrap()[5], target);
    }

    #[test]
    fn rejects_bad_input() {
        let init = [RationalVector::from_ints(&[0]), RationalVector::from_ints(&[1, 1, 1, 1])];
        let t = RationalVector::from_ints(&[1]);
        assert!(steer_target_cn(2, &init, &t, 3).is_err());
        let init = [RationalVector::from_ints(&[1]), RationalVector::from_ints(&[1, 0, 1, 1])];
        assert_eq!(steer_target_cn(2, &init, &t, 3), Err(ConstructionError::ZeroCoordinate(2)));
        let init = [RationalVector::from_ints(&[1]), RationalVector::from_ints(&[1, 1, 1, 1])];
        assert!(steer_target_cn(2, &init, &t, 2).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn steering_is_exact(
            m in 2usize..=3,
            k in 4usize..=9,
            target in prop::collection::vec(-50i64..50, 1..6),
            firsts in prop::collection::vec(prop_oneof![-5i64..=-1, 1i64..=5], 2),
            x0 in prop::collection::vec(prop_oneof![-9i64..=-1, 1i64..=9], 10..14),
        ) {
            let mut init: Vec<RationalVector> = firsts[..m - 1].iter().map(|&f| RationalVector::from_ints(&[f])).collect();
            init.push(RationalVector::from_ints(&x0));
            let target = RationalVector::from_ints(&target);
            let steered = steer_target_cn(m, &init, &target, k).unwrap();
            let states = forward_iterate_rational(m, &steered, k).unwrap();
            prop_assert_eq!(&states[k - 1], &target);
        }
    }
}
