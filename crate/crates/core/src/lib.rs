pub mod calculus;
pub mod catalog;
pub mod equivariant;
pub mod genstruct;
pub mod linalg;
pub mod reduction;
pub mod symexpr;

#[cfg(test)]
mod testutil;
