//! Float functions routed to std intrinsics or libm, so the rest of the
//! crate is oblivious to `no_std`.

macro_rules! route {
    ($($name:ident),* $(,)?) => {
        $(
            #[cfg(feature = "std")]
            #[inline]
            pub fn $name(x: f64) -> f64 { x.$name() }
            #[cfg(not(feature = "std"))]
            #[inline]
            pub fn $name(x: f64) -> f64 { libm::$name(x) }
        )*
    };
}

route!(exp, sqrt, cos, tan, atan, round, ceil);

#[cfg(feature = "std")]
#[inline]
pub fn ln(x: f64) -> f64 {
    x.ln()
}

#[cfg(not(feature = "std"))]
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[cfg(feature = "std")]
#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    x.powf(y)
}

#[cfg(not(feature = "std"))]
#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}
