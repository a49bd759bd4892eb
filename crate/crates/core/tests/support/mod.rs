pub mod balance_oracle;
pub mod ci_oracle;
pub mod ols_oracle;
