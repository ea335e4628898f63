use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

/// Arithmetic the BiCGQL update needs. Implemented for `f64`; tests plug
/// in an operation-counting type to measure the per-iteration cost.
pub trait Scalar:
    Copy + Debug + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

pub(crate) fn axpy<T: Scalar>(s: T, x: &[T], y: &mut [T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = *yi + s * *xi;
    }
}

pub(crate) fn lift<T: Scalar>(v: &[f64]) -> Vec<T> {
    v.iter().map(|x| T::from_f64(*x)).collect()
}

thread_local! {
    static FLOPS: std::cell::Cell<u64> = const { std::cell::Cell::new(0) };
}

/// `f64` that counts every add, subtract, multiply and negate on the
/// current thread. Conversions are free.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Counted(pub f64);

impl Counted {
    pub fn reset() {
        FLOPS.with(|c| c.set(0));
    }

    pub fn flops() -> u64 {
        FLOPS.with(|c| c.get())
    }

    fn tick() {
        FLOPS.with(|c| c.set(c.get() + 1));
    }
}

macro_rules! counted_binop {
    ($tr:ident, $f:ident, $op:tt) => {
        impl $tr for Counted {
            type Output = Counted;
            #[inline]
            fn $f(self, rhs: Counted) -> Counted {
                Counted::tick();
                Counted(self.0 $op rhs.0)
            }
        }
    };
}

counted_binop!(Add, add, +);
counted_binop!(Sub, sub, -);
counted_binop!(Mul, mul, *);

impl Neg for Counted {
    type Output = Counted;
    #[inline]
    fn neg(self) -> Counted {
        Counted::tick();
        Counted(-self.0)
    }
}

impl Scalar for Counted {
    fn from_f64(v: f64) -> Self {
        Counted(v)
    }
    fn to_f64(self) -> f64 {
        self.0
    }
}
