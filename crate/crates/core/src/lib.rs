pub mod algebra;
pub mod checker;
pub mod determinant;
pub mod error;
pub mod factorization;
pub mod io;
pub mod optimize;
pub mod path;
pub mod quadrature;
pub mod sample;
