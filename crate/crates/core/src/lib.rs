//! Value distribution of log L_c and L_c'/L_c for cubic characters of Q(w).

pub mod charfn;
pub mod cubic_symbol;
pub mod density;
pub mod eisenstein;
pub mod empirics;
pub mod lfunction;
pub mod randmodel;
pub mod reproduce;
mod modarith;

pub use cubic_symbol::{chi_c, symbol, symbol_prime_oracle, CubeRoot, CubicCharacter, SymbolError};
pub use eisenstein::{
    enumerate_c, enumerate_primes, factor, is_squarefree, EisensteinInt, ModulusC, PrimeIdealRec, Splitting,
};
