use crate::scalar::Scalar;

/// Second-order Sobolev kernel on `[0, 1]`:
/// `K(x, y) = 1 + x y + min(x,y)^2 (3 max(x,y) - min(x,y)) / 6`.
///
/// Offered partials are `(a, b)` with `a, b <= 2` and `a + b <= 2`; all of
/// them are continuous. On the diagonal `x == y` the `x <= y` branch is used
/// (left limit in the first argument); both branches agree there for every
/// offered pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Sobolev2;

impl Sobolev2 {
    pub const MAX_ORDER: usize = 2;

    pub fn offers(a: usize, b: usize) -> bool {
        a <= 2 && b <= 2 && a + b <= 2
    }

    pub fn eval<T: Scalar>(x: T, y: T) -> T {
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        let six = T::lit(6.0);
        T::one() + x * y + lo * lo * (T::lit(3.0) * hi - lo) / six
    }

    /// `d^a/dx^a d^b/dy^b K(x, y)` for an offered pair, `None` otherwise.
    pub fn partial<T: Scalar>(a: usize, b: usize, x: T, y: T) -> Option<T> {
        if !Self::offers(a, b) {
            return None;
        }
        if (a, b) == (0, 0) {
            return Some(Self::eval(x, y));
        }
        let half = T::lit(0.5);
        let one = T::one();
        let zero = T::zero();
        let v = if x <= y {
            match (a, b) {
                (1, 0) => y + x * y - half * x * x,
                (0, 1) => x + half * x * x,
                (2, 0) => y - x,
                (1, 1) => one + x,
                (0, 2) => zero,
                _ => unreachable!(),
            }
        } else {
            match (a, b) {
                (1, 0) => y + half * y * y,
                (0, 1) => x + x * y - half * y * y,
                (2, 0) => zero,
                (1, 1) => one + y,
                (0, 2) => x - y,
                _ => unreachable!(),
            }
        };
        Some(v)
    }
}
