pub mod laurent;
pub mod local;
pub mod multirat;
pub mod poly;
pub mod scalar;
pub mod upoly;

pub use laurent::{Laurent, Ring, EXACT};
pub use multirat::{Factor, MultiRat};
pub use poly::{Monomial, Poly, Var};
pub use scalar::{q, qf, Scalar};
pub use upoly::UPoly;
