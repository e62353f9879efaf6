pub mod body_model;
pub mod dynamics;
pub mod lgvi;
pub mod mutual_potential;
pub mod rkf78;
pub mod sim;
pub mod so3;
